//! O(N) spin configurations and the exact single-site heat-bath chain.
//!
//! Under the mean-field measure with inverse temperature beta, the
//! conditional law of spin i given the rest is von Mises-Fisher on S^{N-1}
//! with concentration kappa = beta |m_(i)| and mean direction m_(i)/|m_(i)|,
//! where m_(i) = (S - sigma_i)/n. Resampling a uniformly chosen site from
//! that conditional law is one Glauber (heat-bath) step; it is exactly the
//! Markov step that defines the exchangeable pair (W, W').

use rand::Rng;
use rand_distr::{Beta, Distribution};

use crate::error::{Error, Result};
use crate::limit_laws::uniform_direction;
use crate::linalg::{dot, norm};
use crate::rng::stream;

/// Incremental magnetization sums are replaced by a fresh summation this
/// often (in sweeps), bounding drift.
const S_REFRESH_INTERVAL: usize = 1000;

/// Draw from the von Mises-Fisher law on S^{dim-1} with concentration
/// `kappa >= 0` and mean direction `mu_hat` (unit), by the Ulrich-Wood
/// rejection scheme: a Beta-based envelope for the cosine component plus a
/// uniform tangent direction. kappa = 0 falls back to the uniform law.
pub fn sample_vmf<R: Rng + ?Sized>(mu_hat: &[f64], kappa: f64, rng: &mut R) -> Vec<f64> {
    let dim = mu_hat.len();
    debug_assert!(dim >= 2);
    debug_assert!(kappa >= 0.0);
    if kappa == 0.0 {
        return uniform_direction(dim, rng);
    }
    let p1 = (dim - 1) as f64;
    // Stable form of (-2k + sqrt(4k^2 + (p-1)^2)) / (p-1).
    let b = p1 / (2.0 * kappa + (4.0 * kappa * kappa + p1 * p1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + p1 * (1.0 - x0 * x0).ln();

    let w = loop {
        let z = sample_symmetric_beta(dim, rng);
        let u: f64 = rng.random();
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        if kappa * w + p1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };

    // Uniform tangent: on the circle the tangent sphere is {+/- perp};
    // otherwise a Gaussian vector with the mu_hat component projected out.
    let tangent = if dim == 2 {
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        vec![-sign * mu_hat[1], sign * mu_hat[0]]
    } else {
        loop {
            let g = uniform_direction(dim, rng);
            let mut t: Vec<f64> = g
                .iter()
                .zip(mu_hat)
                .map(|(gi, mi)| gi - dot(&g, mu_hat) * mi)
                .collect();
            let tn = norm(&t);
            if tn > 1e-9 {
                for x in t.iter_mut() {
                    *x /= tn;
                }
                break t;
            }
        }
    };

    let sin_part = (1.0 - w * w).max(0.0).sqrt();
    let mut out: Vec<f64> = mu_hat
        .iter()
        .zip(&tangent)
        .map(|(mi, ti)| w * mi + sin_part * ti)
        .collect();
    let n = norm(&out);
    for x in out.iter_mut() {
        *x /= n;
    }
    out
}

/// Beta((p-1)/2, (p-1)/2) for p = dim, with closed forms for the dimensions
/// the experiments hammer: arcsine for N = 2, uniform for N = 3.
fn sample_symmetric_beta<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> f64 {
    match dim {
        2 => {
            let u: f64 = rng.random();
            let s = (std::f64::consts::FRAC_PI_2 * u).sin();
            s * s
        }
        3 => rng.random(),
        _ => {
            let a = (dim - 1) as f64 / 2.0;
            Beta::new(a, a).expect("positive shape").sample(rng)
        }
    }
}

/// A configuration of n unit spins in R^N at inverse temperature beta.
#[derive(Debug, Clone)]
pub struct SpinConfig {
    n_dim: usize,
    n_sites: usize,
    beta: f64,
    spins: Vec<f64>,
    /// Incrementally maintained sum of spins.
    s: Vec<f64>,
    sweeps_since_refresh: usize,
}

impl SpinConfig {
    /// Uniform random start.
    pub fn random(n_dim: usize, n_sites: usize, beta: f64, rng: &mut impl Rng) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::Domain(format!("N must be >= 2, got {n_dim}")));
        }
        if n_sites == 0 {
            return Err(Error::Domain("need at least one spin".into()));
        }
        if !(beta >= 0.0) {
            return Err(Error::Domain(format!("beta must be >= 0, got {beta}")));
        }
        let mut spins = Vec::with_capacity(n_dim * n_sites);
        for _ in 0..n_sites {
            spins.extend(uniform_direction(n_dim, rng));
        }
        let mut cfg = SpinConfig {
            n_dim,
            n_sites,
            beta,
            spins,
            s: vec![0.0; n_dim],
            sweeps_since_refresh: 0,
        };
        cfg.refresh_s();
        Ok(cfg)
    }

    /// Build from explicit unit spins (renormalized on entry).
    pub fn from_spins(n_dim: usize, beta: f64, rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Domain("need at least one spin".into()));
        }
        let mut spins = Vec::with_capacity(rows.len() * n_dim);
        for r in rows {
            if r.len() != n_dim {
                return Err(Error::SizeMismatch("spin dimension mismatch".into()));
            }
            let nr = norm(r);
            if nr < 1e-12 {
                return Err(Error::Domain("zero spin vector".into()));
            }
            spins.extend(r.iter().map(|x| x / nr));
        }
        let mut cfg = SpinConfig {
            n_dim,
            n_sites: rows.len(),
            beta,
            spins,
            s: vec![0.0; n_dim],
            sweeps_since_refresh: 0,
        };
        cfg.refresh_s();
        Ok(cfg)
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn spin(&self, i: usize) -> &[f64] {
        &self.spins[i * self.n_dim..(i + 1) * self.n_dim]
    }

    fn refresh_s(&mut self) {
        let mut s = vec![0.0; self.n_dim];
        for i in 0..self.n_sites {
            for d in 0..self.n_dim {
                s[d] += self.spins[i * self.n_dim + d];
            }
        }
        self.s = s;
        self.sweeps_since_refresh = 0;
    }

    /// Max-norm gap between the incremental S and a fresh summation.
    pub fn s_drift(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut fresh = vec![0.0; self.n_dim];
        for i in 0..self.n_sites {
            for d in 0..self.n_dim {
                fresh[d] += self.spins[i * self.n_dim + d];
            }
        }
        for d in 0..self.n_dim {
            worst = worst.max((fresh[d] - self.s[d]).abs());
        }
        worst
    }

    /// Leave-one-out magnetization m_(i) = (S - sigma_i)/n, from the
    /// incremental sum.
    fn m_loo_from_running(&self, site: usize) -> Vec<f64> {
        let n = self.n_sites as f64;
        let sp = site * self.n_dim;
        (0..self.n_dim)
            .map(|d| (self.s[d] - self.spins[sp + d]) / n)
            .collect()
    }

    /// One heat-bath update: replace the spin at `site` with a draw from its
    /// exact conditional law. Degenerate mean direction (|m_(i)| = 0) draws
    /// uniformly.
    pub fn heat_bath_step(&mut self, site: usize, rng: &mut impl Rng) {
        debug_assert!(site < self.n_sites);
        let m_loo = self.m_loo_from_running(site);
        let m_norm = norm(&m_loo);
        let kappa = self.beta * m_norm;
        let new_spin = if kappa < 1e-300 || m_norm == 0.0 {
            uniform_direction(self.n_dim, rng)
        } else {
            let mu_hat: Vec<f64> = m_loo.iter().map(|x| x / m_norm).collect();
            sample_vmf(&mu_hat, kappa, rng)
        };
        let sp = site * self.n_dim;
        for d in 0..self.n_dim {
            self.s[d] += new_spin[d] - self.spins[sp + d];
            self.spins[sp + d] = new_spin[d];
        }
    }

    /// One sweep: n heat-bath steps at uniformly random sites (with
    /// replacement), matching the chain that defines the exchangeable pair.
    pub fn sweep(&mut self, rng: &mut impl Rng) {
        for _ in 0..self.n_sites {
            let site = rng.random_range(0..self.n_sites);
            self.heat_bath_step(site, rng);
        }
        self.sweeps_since_refresh += 1;
        if self.sweeps_since_refresh >= S_REFRESH_INTERVAL {
            debug_assert!(self.s_drift() < 1e-10);
            self.refresh_s();
        }
    }

    /// Magnetization observables with S recomputed by fresh summation.
    pub fn magnetization(&self) -> MagnetizationView<'_> {
        let mut s = vec![0.0; self.n_dim];
        for i in 0..self.n_sites {
            for d in 0..self.n_dim {
                s[d] += self.spins[i * self.n_dim + d];
            }
        }
        let n = self.n_sites as f64;
        let w = s.iter().map(|x| x / n.powf(0.75)).collect();
        let m = s.iter().map(|x| x / n).collect();
        MagnetizationView {
            config: self,
            s,
            w,
            m,
        }
    }
}

/// Magnetization observables of one configuration: S, the critical scaling
/// W = n^{-3/4} S, the mean spin m = S/n, and the leave-one-out fields.
#[derive(Debug)]
pub struct MagnetizationView<'a> {
    config: &'a SpinConfig,
    pub s: Vec<f64>,
    pub w: Vec<f64>,
    pub m: Vec<f64>,
}

impl<'a> MagnetizationView<'a> {
    pub fn config(&self) -> &'a SpinConfig {
        self.config
    }

    pub fn n_sites(&self) -> usize {
        self.config.n_sites
    }

    pub fn n_dim(&self) -> usize {
        self.config.n_dim
    }

    /// m_(i) = (S - sigma_i)/n.
    pub fn m_loo(&self, i: usize) -> Vec<f64> {
        let n = self.config.n_sites as f64;
        self.s
            .iter()
            .zip(self.config.spin(i))
            .map(|(s, sig)| (s - sig) / n)
            .collect()
    }

    pub fn w_norm(&self) -> f64 {
        norm(&self.w)
    }

    pub fn m_norm(&self) -> f64 {
        norm(&self.m)
    }
}

/// Parameters of an equilibrium sampling run.
#[derive(Debug, Clone, Copy)]
pub struct EquilibriumParams {
    pub n_dim: usize,
    pub n_sites: usize,
    pub beta: f64,
    /// Sweeps discarded before the first sample.
    pub burn_in: usize,
    /// Sweeps between consecutive samples.
    pub thin: usize,
    pub count: usize,
    pub seed: u64,
}

impl EquilibriumParams {
    fn validate(&self) -> Result<()> {
        if self.burn_in < 1 || self.thin < 1 {
            return Err(Error::Config(
                "burn_in and thin must both be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Run the chain from a uniform random start and visit `count` equilibrium
/// samples, every `thin` sweeps after `burn_in` sweeps. Deterministic given
/// the seed. The visitor receives the sample index and the configuration;
/// call `magnetization()` on it for the observables.
pub fn for_each_equilibrium_sample(
    params: EquilibriumParams,
    mut visit: impl FnMut(usize, &SpinConfig),
) -> Result<()> {
    params.validate()?;
    let mut rng = stream(params.seed, "equilibrium", 0);
    let mut cfg = SpinConfig::random(params.n_dim, params.n_sites, params.beta, &mut rng)?;
    for _ in 0..params.burn_in {
        cfg.sweep(&mut rng);
    }
    for k in 0..params.count {
        for _ in 0..params.thin {
            cfg.sweep(&mut rng);
        }
        visit(k, &cfg);
    }
    Ok(())
}

/// Equilibrium stream reduced to the W vectors.
pub fn equilibrium_w_samples(params: EquilibriumParams) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(params.count);
    for_each_equilibrium_sample(params, |_, cfg| {
        out.push(cfg.magnetization().w);
    })?;
    Ok(out)
}
