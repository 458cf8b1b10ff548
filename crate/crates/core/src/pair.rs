//! Exchangeable-pair diagnostics for the critical chain (beta = N).
//!
//! One heat-bath step from stationarity defines the pair (W, W') with
//! delta = W' - W and lambda = 1/(N n^{3/2}). Conditionally on sigma,
//!
//!   E[delta | sigma]          = lambda (-(N^2/(N+2)) |W|^2 W + R1)
//!   E[delta delta^T | sigma]  = 2 lambda (I + R2)
//!
//! where R1 and R2 have the closed forms evaluated here term by term via
//! f_N and g_N. The drift -(N^2/(N+2))|W|^2 W is exactly -grad V(W) for
//! V = a_N |x|^4 because 4 a_N = N^2/(N+2) as rationals. The module
//! evaluates both sides of each identity independently and estimates the
//! decay of E|R1|, E||R2||, and the third-moment term across n.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{norm, SqMatrix};
use crate::parallel::par_map;
use crate::rng::stream;
use crate::specfun::{FgEval, ModelFunctions};
use crate::spin::{
    for_each_equilibrium_sample, sample_vmf, EquilibriumParams, MagnetizationView, SpinConfig,
};
use crate::stats::{mean_se, RateEstimate};

/// lambda = 1/(N n^{3/2}).
pub fn lambda(n_dim: usize, n_sites: usize) -> f64 {
    1.0 / (n_dim as f64 * (n_sites as f64).powf(1.5))
}

/// Per-site leave-one-out table shared by all closed-form evaluations:
/// m_(i), |m_(i)|, and the fused f/g values at |m_(i)|.
struct SiteTable {
    dim: usize,
    m_loo: Vec<f64>,
    norms: Vec<f64>,
    fg: Vec<FgEval>,
}

impl SiteTable {
    fn build(view: &MagnetizationView<'_>, model: &ModelFunctions) -> Result<Self> {
        let cfg = view.config();
        let n = cfg.n_sites();
        let dim = cfg.n_dim();
        let mut m_loo = Vec::with_capacity(n * dim);
        let mut norms = Vec::with_capacity(n);
        let mut fg = Vec::with_capacity(n);
        for i in 0..n {
            let mi = view.m_loo(i);
            let nm = norm(&mi);
            // |m_(i)| <= 1 up to rounding on unit spins.
            fg.push(model.fg(nm.min(1.0))?);
            norms.push(nm);
            m_loo.extend(mi);
        }
        Ok(SiteTable {
            dim,
            m_loo,
            norms,
            fg,
        })
    }

    fn m_loo(&self, i: usize) -> &[f64] {
        &self.m_loo[i * self.dim..(i + 1) * self.dim]
    }
}

fn model_for(view: &MagnetizationView<'_>) -> Result<ModelFunctions> {
    let cfg = view.config();
    let n_dim = cfg.n_dim();
    if (cfg.beta() - n_dim as f64).abs() > 1e-12 {
        return Err(Error::Domain(format!(
            "pair diagnostics require the critical chain beta = N; got beta = {}, N = {}",
            cfg.beta(),
            n_dim
        )));
    }
    ModelFunctions::new(n_dim as u32)
}

/// Direct conditional mean of delta:
/// n^{-7/4} sum_i f_N(|m_(i)|) m_(i) - W/n.
pub fn w_drift_direct(view: &MagnetizationView<'_>) -> Result<Vec<f64>> {
    let model = model_for(view)?;
    let table = SiteTable::build(view, &model)?;
    Ok(w_drift_from_table(view, &table))
}

fn w_drift_from_table(view: &MagnetizationView<'_>, table: &SiteTable) -> Vec<f64> {
    let n = view.n_sites() as f64;
    let dim = view.n_dim();
    let mut acc = vec![0.0; dim];
    for i in 0..view.n_sites() {
        let f = table.fg[i].f;
        let mi = table.m_loo(i);
        for d in 0..dim {
            acc[d] += f * mi[d];
        }
    }
    let scale = n.powf(-1.75);
    for d in 0..dim {
        acc[d] = scale * acc[d] - view.w[d] / n;
    }
    acc
}

/// R1 evaluated term by term:
/// (N/n^{1/4}) sum_i [m_(i) f_N(|m_(i)|) - m f_N(|m|)]
///   + N n^{3/4} (f_N(|m|) - 1 + N |m|^2/(N+2)) m.
pub fn r1(view: &MagnetizationView<'_>) -> Result<Vec<f64>> {
    let model = model_for(view)?;
    let table = SiteTable::build(view, &model)?;
    Ok(r1_from_table(view, &model, &table))
}

fn r1_from_table(
    view: &MagnetizationView<'_>,
    model: &ModelFunctions,
    table: &SiteTable,
) -> Vec<f64> {
    let n = view.n_sites() as f64;
    let n_dim = view.n_dim() as f64;
    let dim = view.n_dim();
    let m_norm = view.m_norm().min(1.0);
    let f_m = model.fg(m_norm).expect("|m| <= 1").f;

    let mut sum = vec![0.0; dim];
    for i in 0..view.n_sites() {
        let f = table.fg[i].f;
        let mi = table.m_loo(i);
        for d in 0..dim {
            sum[d] += f * mi[d] - f_m * view.m[d];
        }
    }
    let lead = n_dim / n.powf(0.25);
    let taylor_gap = f_m - 1.0 + n_dim * m_norm * m_norm / (n_dim + 2.0);
    let second = n_dim * n.powf(0.75) * taylor_gap;
    (0..dim)
        .map(|d| lead * sum[d] + second * view.m[d])
        .collect()
}

/// Direct conditional second moment E[delta delta^T | sigma]:
/// n^{-5/2} sum_i ( f_i [I/N - (sigma_i m_(i)^T + m_(i) sigma_i^T)]
///                  + g_i m_(i) m_(i)^T + sigma_i sigma_i^T ).
pub fn cond_cov_direct(view: &MagnetizationView<'_>) -> Result<SqMatrix> {
    let model = model_for(view)?;
    let table = SiteTable::build(view, &model)?;
    Ok(cond_cov_from_table(view, &table))
}

fn cond_cov_from_table(view: &MagnetizationView<'_>, table: &SiteTable) -> SqMatrix {
    let cfg = view.config();
    let n = cfg.n_sites() as f64;
    let n_dim = cfg.n_dim() as f64;
    let dim = cfg.n_dim();
    let mut acc = SqMatrix::zeros(dim);
    for i in 0..cfg.n_sites() {
        let f = table.fg[i].f;
        let g = table.fg[i].g;
        let mi = table.m_loo(i);
        let si = cfg.spin(i);
        acc.add_diag(f / n_dim);
        acc.add_outer(-f, si, mi);
        acc.add_outer(-f, mi, si);
        acc.add_outer(g, mi, mi);
        acc.add_outer(1.0, si, si);
    }
    acc.scale(n.powf(-2.5));
    acc
}

/// The five terms of R2 plus their sum.
#[derive(Debug, Clone)]
pub struct R2Breakdown {
    /// (N/2n) sum sigma sigma^T - I/2
    pub a1: SqMatrix,
    /// -(N/sqrt n) W W^T
    pub a2: SqMatrix,
    /// (N/n^2) sum sigma sigma^T
    pub a3: SqMatrix,
    /// (N/2n) sum |m_(i)|^2 g_i [sigma_i m_(i)^T + m_(i) sigma_i^T - I/N]
    pub a4: SqMatrix,
    /// (N/2n) sum g_i m_(i) m_(i)^T
    pub a5: SqMatrix,
    pub total: SqMatrix,
}

pub fn r2(view: &MagnetizationView<'_>) -> Result<R2Breakdown> {
    let model = model_for(view)?;
    let table = SiteTable::build(view, &model)?;
    Ok(r2_from_table(view, &table))
}

fn r2_from_table(view: &MagnetizationView<'_>, table: &SiteTable) -> R2Breakdown {
    let cfg = view.config();
    let n = cfg.n_sites() as f64;
    let n_dim = cfg.n_dim() as f64;
    let dim = cfg.n_dim();

    let mut spin_outer = SqMatrix::zeros(dim);
    for i in 0..cfg.n_sites() {
        spin_outer.add_outer(1.0, cfg.spin(i), cfg.spin(i));
    }

    let mut a1 = spin_outer.scaled(n_dim / (2.0 * n));
    a1.add_diag(-0.5);

    let mut a2 = SqMatrix::zeros(dim);
    a2.add_outer(-n_dim / n.sqrt(), &view.w, &view.w);

    let a3 = spin_outer.scaled(n_dim / (n * n));

    let mut a4 = SqMatrix::zeros(dim);
    let mut a5 = SqMatrix::zeros(dim);
    for i in 0..cfg.n_sites() {
        let g = table.fg[i].g;
        let mi = table.m_loo(i);
        let si = cfg.spin(i);
        let w4 = table.norms[i] * table.norms[i] * g;
        a4.add_outer(w4, si, mi);
        a4.add_outer(w4, mi, si);
        a4.add_diag(-w4 / n_dim);
        a5.add_outer(g, mi, mi);
    }
    a4.scale(n_dim / (2.0 * n));
    a5.scale(n_dim / (2.0 * n));

    let mut total = a1.clone();
    total.add_assign(&a2);
    total.add_assign(&a3);
    total.add_assign(&a4);
    total.add_assign(&a5);

    R2Breakdown {
        a1,
        a2,
        a3,
        a4,
        a5,
        total,
    }
}

/// Per-configuration exchangeable-pair quantities. `cond_mean` and
/// `cond_cov` are assembled from the decomposed forms; the direct routes
/// are available through [`w_drift_direct`] and [`cond_cov_direct`].
#[derive(Debug, Clone)]
pub struct PairReport {
    pub n_sites: usize,
    pub n_dim: usize,
    pub lambda: f64,
    pub cond_mean: Vec<f64>,
    pub cond_cov: SqMatrix,
    pub r1: Vec<f64>,
    pub r2: R2Breakdown,
    /// |delta| <= 2 n^{-3/4} for every realized pair.
    pub delta_bound: f64,
}

pub fn report(view: &MagnetizationView<'_>) -> Result<PairReport> {
    let model = model_for(view)?;
    let table = SiteTable::build(view, &model)?;
    let n_sites = view.n_sites();
    let n_dim = view.n_dim();
    let lam = lambda(n_dim, n_sites);
    let nf = n_dim as f64;

    let r1_vec = r1_from_table(view, &model, &table);
    let w2 = view.w_norm().powi(2);
    let drift = nf * nf / (nf + 2.0) * w2;
    let cond_mean: Vec<f64> = view
        .w
        .iter()
        .zip(&r1_vec)
        .map(|(w, r)| lam * (-drift * w + r))
        .collect();

    let r2_terms = r2_from_table(view, &table);
    let mut cond_cov = r2_terms.total.clone();
    cond_cov.add_diag(1.0);
    cond_cov.scale(2.0 * lam);

    Ok(PairReport {
        n_sites,
        n_dim,
        lambda: lam,
        cond_mean,
        cond_cov,
        r1: r1_vec,
        r2: r2_terms,
        delta_bound: 2.0 * (n_sites as f64).powf(-0.75),
    })
}

/// Max-abs residuals of the two algebraic decompositions against the direct
/// closed forms: (mean identity, covariance identity).
pub fn identity_residuals(view: &MagnetizationView<'_>) -> Result<(f64, f64)> {
    let rep = report(view)?;
    let direct_mean = w_drift_direct(view)?;
    let mean_res = rep
        .cond_mean
        .iter()
        .zip(&direct_mean)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let direct_cov = cond_cov_direct(view)?;
    let cov_res = rep.cond_cov.max_abs_diff(&direct_cov);
    Ok((mean_res, cov_res))
}

/// One realized pair: resample a uniformly random site from its conditional
/// law (without mutating the configuration) and return delta = W' - W.
pub fn realized_delta(cfg: &SpinConfig, rng: &mut impl Rng) -> Vec<f64> {
    let n = cfg.n_sites();
    let dim = cfg.n_dim();
    let site = rng.random_range(0..n);
    let view = cfg.magnetization();
    let m_loo = view.m_loo(site);
    let m_norm = norm(&m_loo);
    let kappa = cfg.beta() * m_norm;
    let new_spin = if kappa == 0.0 || m_norm == 0.0 {
        crate::limit_laws::uniform_direction(dim, rng)
    } else {
        let mu: Vec<f64> = m_loo.iter().map(|x| x / m_norm).collect();
        sample_vmf(&mu, kappa, rng)
    };
    let scale = (n as f64).powf(-0.75);
    new_spin
        .iter()
        .zip(cfg.spin(site))
        .map(|(np, op)| scale * (np - op))
        .collect()
}

/// |delta|^3 (|log|delta|| v 1), the integrand of the third-moment error
/// term (zero contribution from the measure-zero event delta = 0).
pub fn third_moment_integrand(delta: &[f64]) -> f64 {
    let d = norm(delta);
    if d == 0.0 {
        return 0.0;
    }
    d.powi(3) * d.ln().abs().max(1.0)
}

/// |4 a_N - N^2/(N+2)| in exact rational arithmetic. The cross-multiplied
/// integer difference 4 N^2 (N+2) - N^2 (4N+8) vanishes identically, so the
/// drift in the mean identity is exactly -grad V(W).
pub fn gradient_consistency(n_dim: u32) -> f64 {
    let n = i128::from(n_dim);
    // 4 a_N = 4N^2/(4N+8); compare with N^2/(N+2) by cross-multiplication.
    let lhs = 4 * n * n * (n + 2);
    let rhs = n * n * (4 * n + 8);
    let num = (lhs - rhs).abs();
    num as f64 / ((4 * n + 8) * (n + 2)) as f64
}

/// Settings for the remainder-rate sweep across n.
#[derive(Debug, Clone)]
pub struct PairSweepConfig {
    pub n_dim: u32,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    pub samples_per_replica: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
}

/// Per-cell means of the remainder magnitudes.
#[derive(Debug, Clone)]
struct CellSummary {
    e_r1: f64,
    e_r2: f64,
    e_a: [f64; 5],
    third_moment: f64,
    max_delta_ratio: f64,
    max_r2_asymmetry: f64,
}

/// Fitted rates and bound checks for E|R1|, E||R2||, the per-term
/// E||A_1..5||, and the third-moment error term.
#[derive(Debug, Clone, serde::Serialize)]
pub struct PairSweepReport {
    pub n_dim: u32,
    pub e_r1: RateEstimate,
    pub e_r2: RateEstimate,
    pub a_norms: Vec<RateEstimate>,
    pub third_moment: RateEstimate,
    /// 32 N / sqrt(n) per grid point, the explicit proof bound.
    pub third_moment_bounds: Vec<f64>,
    /// estimate <= bound + 4 SE at every grid point.
    pub third_moment_within_bound: bool,
    /// max over realized pairs of |delta| / (2 n^{-3/4}).
    pub max_delta_ratio: f64,
    /// worst R2 asymmetry observed (R2 is symmetric by construction).
    pub max_r2_asymmetry: f64,
}

/// Sweep the n-grid at criticality, estimating every remainder expectation
/// from `replicas` independent equilibrium chains per n. Cells parallelize
/// over (n, replica); merging is by cell index.
pub fn remainder_rate_sweep(cfg: &PairSweepConfig) -> Result<PairSweepReport> {
    let nf = f64::from(cfg.n_dim);
    let mut cells = Vec::new();
    for (ni, &n_sites) in cfg.n_grid.iter().enumerate() {
        for r in 0..cfg.replicas {
            cells.push((ni, n_sites, r));
        }
    }
    let sweep_cfg = cfg.clone();
    let results: Vec<Result<CellSummary>> = par_map(cells, move |(ni, n_sites, r)| {
        let cell_index = (ni * sweep_cfg.replicas + r) as u64;
        run_cell(&sweep_cfg, n_sites, cell_index)
    });

    let mut per_quantity: Vec<Vec<Vec<f64>>> = vec![vec![vec![0.0; cfg.n_grid.len()]; cfg.replicas]; 8];
    let mut max_delta_ratio = 0.0f64;
    let mut max_asym = 0.0f64;
    let mut third_by_cell = vec![vec![0.0; cfg.replicas]; cfg.n_grid.len()];
    for (flat, res) in results.into_iter().enumerate() {
        let summary = res?;
        let ni = flat / cfg.replicas;
        let r = flat % cfg.replicas;
        per_quantity[0][r][ni] = summary.e_r1;
        per_quantity[1][r][ni] = summary.e_r2;
        for (k, a) in summary.e_a.iter().enumerate() {
            per_quantity[2 + k][r][ni] = *a;
        }
        per_quantity[7][r][ni] = summary.third_moment;
        third_by_cell[ni][r] = summary.third_moment;
        max_delta_ratio = max_delta_ratio.max(summary.max_delta_ratio);
        max_asym = max_asym.max(summary.max_r2_asymmetry);
    }

    let grid = cfg.n_grid.clone();
    let e_r1 = RateEstimate::from_replicas(grid.clone(), &per_quantity[0]);
    let e_r2 = RateEstimate::from_replicas(grid.clone(), &per_quantity[1]);
    let a_norms: Vec<RateEstimate> = (0..5)
        .map(|k| RateEstimate::from_replicas(grid.clone(), &per_quantity[2 + k]))
        .collect();
    let third_moment = RateEstimate::from_replicas(grid.clone(), &per_quantity[7]);

    let third_moment_bounds: Vec<f64> = grid
        .iter()
        .map(|&n| 32.0 * nf / (n as f64).sqrt())
        .collect();
    let third_moment_within_bound = grid
        .iter()
        .enumerate()
        .all(|(ni, _)| {
            let (m, se) = mean_se(&third_by_cell[ni]);
            m <= third_moment_bounds[ni] + 4.0 * se
        });

    Ok(PairSweepReport {
        n_dim: cfg.n_dim,
        e_r1,
        e_r2,
        a_norms,
        third_moment,
        third_moment_bounds,
        third_moment_within_bound,
        max_delta_ratio,
        max_r2_asymmetry: max_asym,
    })
}

fn run_cell(cfg: &PairSweepConfig, n_sites: usize, cell_index: u64) -> Result<CellSummary> {
    let params = EquilibriumParams {
        n_dim: cfg.n_dim as usize,
        n_sites,
        beta: f64::from(cfg.n_dim),
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        count: cfg.samples_per_replica,
        seed: crate::rng::derive_seed(cfg.seed, "pair-cell", cell_index),
    };
    let mut pair_rng = stream(cfg.seed, "pair-delta", cell_index);
    let lam = lambda(cfg.n_dim as usize, n_sites);
    let delta_bound = 2.0 * (n_sites as f64).powf(-0.75);

    let mut acc_r1 = 0.0;
    let mut acc_r2 = 0.0;
    let mut acc_a = [0.0f64; 5];
    let mut acc_third = 0.0;
    let mut max_ratio = 0.0f64;
    let mut max_asym = 0.0f64;
    let mut failure: Option<Error> = None;

    for_each_equilibrium_sample(params, |_, spin_cfg| {
        if failure.is_some() {
            return;
        }
        let view = spin_cfg.magnetization();
        match report(&view) {
            Ok(rep) => {
                acc_r1 += norm(&rep.r1);
                acc_r2 += rep.r2.total.hs_norm();
                acc_a[0] += rep.r2.a1.hs_norm();
                acc_a[1] += rep.r2.a2.hs_norm();
                acc_a[2] += rep.r2.a3.hs_norm();
                acc_a[3] += rep.r2.a4.hs_norm();
                acc_a[4] += rep.r2.a5.hs_norm();
                max_asym = max_asym.max(rep.r2.total.max_asymmetry());
                let delta = realized_delta(spin_cfg, &mut pair_rng);
                max_ratio = max_ratio.max(norm(&delta) / delta_bound);
                acc_third += third_moment_integrand(&delta) / lam;
            }
            Err(e) => failure = Some(e),
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let count = cfg.samples_per_replica as f64;
    Ok(CellSummary {
        e_r1: acc_r1 / count,
        e_r2: acc_r2 / count,
        e_a: [
            acc_a[0] / count,
            acc_a[1] / count,
            acc_a[2] / count,
            acc_a[3] / count,
            acc_a[4] / count,
        ],
        third_moment: acc_third / count,
        max_delta_ratio: max_ratio,
        max_r2_asymmetry: max_asym,
    })
}
