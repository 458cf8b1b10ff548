//! Experiment orchestration: rate sweeps, the full report, seeding,
//! persistence, and the reproducibility manifest.
//!
//! Every stage derives its seed from the master seed and a stage label, and
//! every parallel cell from the stage seed and its index, so reruns with the
//! same configuration produce byte-identical CSV/JSON outputs; the manifest
//! records a SHA-256 digest per output file to make that checkable.

pub mod config;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::constants::{ergodic_constants, quadratic_potential, quartic_potential};
use crate::error::{Error, Result};
use crate::langevin::bel::{elworthy_li, finite_difference_d1, BelBudget};
use crate::langevin::checks::{
    decay_check, geom_erg_check, stein_solution_check, variation_moment_check, SteinTarget,
};
use crate::langevin::{Directions, TestFunction};
use crate::limit_laws::{sample_gauss, QuarticLaw};
use crate::linalg::norm;
use crate::pair::{remainder_rate_sweep, PairSweepConfig};
use crate::parallel::par_map;
use crate::rng::derive_seed;
use crate::spin::{equilibrium_w_samples, EquilibriumParams};
use crate::stats::ols_slope;
use crate::transport::{w1_exact, w1_sorted_1d, EmpiricalCloud};

pub use config::{ExperimentConfig, LangevinParams};

/// Slope acceptance window for the W1 rate sweeps: the theorems prove an
/// upper bound c/sqrt(n), so only the exponent window is gated.
pub const RATE_SLOPE_WINDOW: (f64, f64) = (-0.8, -0.25);

/// Slope window for the remainder-term rates.
pub const REMAINDER_SLOPE_WINDOW: (f64, f64) = (-0.8, -0.3);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Critical,
    Subcritical,
}

/// One n-point of a rate sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    pub n_sites: usize,
    pub samples: usize,
    /// Primary 1D metric (radial at criticality, componentwise mean below).
    pub metric: f64,
    pub metric_se: f64,
    /// Full-dimensional exact matching at reduced cloud size, reported but
    /// not gated (its m^{-1/N} bias can mask the rate).
    pub w1_exact_reduced: f64,
    pub exact_m: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSweepResult {
    pub regime: Regime,
    pub n_dim: u32,
    pub beta: f64,
    pub points: Vec<RatePoint>,
    pub fitted_slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
    pub monotone_within_2se: bool,
    pub slope_in_window: bool,
}

/// W1 rate sweep across the n-grid. beta = N targets the quartic law with
/// the radial metric; beta < N targets the standard Gaussian with the
/// componentwise metric and the sqrt(N - beta) S_n / sqrt(n) scaling.
pub fn rate_sweep(cfg: &ExperimentConfig) -> Result<RateSweepResult> {
    cfg.validate()?;
    let n_dim = cfg.n_dim as usize;
    let nf = f64::from(cfg.n_dim);
    let critical = (cfg.beta - nf).abs() < 1e-12;
    let law = if critical {
        Some(QuarticLaw::new(cfg.n_dim)?)
    } else {
        None
    };

    let per_replica = cfg.samples_per_n / cfg.replicas;
    let mut points = Vec::new();
    // Leave-one-replica-out metric values per n, for jackknife slope CIs.
    let mut loo_matrix: Vec<Vec<f64>> = vec![Vec::new(); cfg.replicas];
    let mut values = Vec::new();

    for (ni, &n_sites) in cfg.n_grid.iter().enumerate() {
        let cells: Vec<usize> = (0..cfg.replicas).collect();
        let blocks: Vec<Result<Vec<Vec<f64>>>> = par_map(cells, |r| {
            let params = EquilibriumParams {
                n_dim,
                n_sites,
                beta: cfg.beta,
                burn_in: cfg.burn_in,
                thin: cfg.thin,
                count: per_replica,
                seed: derive_seed(cfg.seed, "rate-cell", (ni * cfg.replicas + r) as u64),
            };
            equilibrium_w_samples(params)
        });
        let blocks: Vec<Vec<Vec<f64>>> = blocks.into_iter().collect::<Result<_>>()?;
        let m = per_replica * cfg.replicas;

        // Scale the critical W = n^{-3/4} S to sqrt(N - beta) S / sqrt(n)
        // below criticality.
        let scale = if critical {
            1.0
        } else {
            (nf - cfg.beta).sqrt() * (n_sites as f64).powf(0.25)
        };

        // Per-replica blocks of the sample-side metric coordinates and the
        // matching reference blocks.
        let (sample_blocks, reference_blocks): (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) =
            if critical {
                let radii: Vec<Vec<Vec<f64>>> = blocks
                    .iter()
                    .map(|b| b.iter().map(|w| vec![norm(w)]).collect())
                    .collect();
                let reference = law
                    .as_ref()
                    .unwrap()
                    .sample_radii(m, derive_seed(cfg.seed, "rate-ref", ni as u64));
                let ref_blocks: Vec<Vec<Vec<f64>>> = reference
                    .chunks(per_replica)
                    .map(|c| c.iter().map(|&r| vec![r]).collect())
                    .collect();
                (radii, ref_blocks)
            } else {
                let scaled: Vec<Vec<Vec<f64>>> = blocks
                    .iter()
                    .map(|b| {
                        b.iter()
                            .map(|w| w.iter().map(|c| c * scale).collect())
                            .collect()
                    })
                    .collect();
                let reference =
                    sample_gauss(n_dim, m, derive_seed(cfg.seed, "rate-ref", ni as u64));
                let ref_blocks: Vec<Vec<Vec<f64>>> = reference
                    .chunks(per_replica)
                    .map(|c| c.to_vec())
                    .collect();
                (scaled, ref_blocks)
            };

        let metric_of = |skip: Option<usize>| -> Result<f64> {
            let mut sample_rows = Vec::new();
            let mut ref_rows = Vec::new();
            for r in 0..cfg.replicas {
                if Some(r) == skip {
                    continue;
                }
                sample_rows.extend(sample_blocks[r].iter().cloned());
                ref_rows.extend(reference_blocks[r].iter().cloned());
            }
            let dims = sample_rows[0].len();
            let mut acc = 0.0;
            for d in 0..dims {
                let a: Vec<f64> = sample_rows.iter().map(|row| row[d]).collect();
                let b: Vec<f64> = ref_rows.iter().map(|row| row[d]).collect();
                acc += w1_sorted_1d(&a, &b)?.cost;
            }
            Ok(acc / dims as f64)
        };

        let metric = metric_of(None)?;
        let mut loo = Vec::with_capacity(cfg.replicas);
        for r in 0..cfg.replicas {
            loo.push(metric_of(Some(r))?);
        }
        let loo_mean = crate::stats::mean(&loo);
        let metric_se = (loo
            .iter()
            .map(|v| (v - loo_mean) * (v - loo_mean))
            .sum::<f64>()
            * (cfg.replicas as f64 - 1.0)
            / cfg.replicas as f64)
            .sqrt();
        for (r, v) in loo.iter().enumerate() {
            loo_matrix[r].push(*v);
        }
        values.push(metric);

        // Reported exact matching at reduced size.
        let exact_m = cfg.exact_matching_samples.min(m);
        let w_rows: Vec<Vec<f64>> = blocks
            .iter()
            .flatten()
            .map(|w| w.iter().map(|c| c * scale).collect())
            .collect();
        let sample_cloud = EmpiricalCloud::from_rows(&w_rows)?
            .subsample(exact_m, derive_seed(cfg.seed, "rate-exact", ni as u64));
        let target_rows = if critical {
            law.as_ref()
                .unwrap()
                .sample(exact_m, derive_seed(cfg.seed, "rate-exact-ref", ni as u64))
        } else {
            sample_gauss(
                n_dim,
                exact_m,
                derive_seed(cfg.seed, "rate-exact-ref", ni as u64),
            )
        };
        let target_cloud = EmpiricalCloud::from_rows(&target_rows)?;
        let exact = w1_exact(&sample_cloud, &target_cloud)?.cost;

        points.push(RatePoint {
            n_sites,
            samples: m,
            metric,
            metric_se,
            w1_exact_reduced: exact,
            exact_m,
        });
    }

    let (fitted_slope, slope_ci) = if cfg.n_grid.len() >= 2 {
        let log_n: Vec<f64> = cfg.n_grid.iter().map(|&n| (n as f64).ln()).collect();
        let log_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let slope = ols_slope(&log_n, &log_v);
        let jack: Vec<f64> = loo_matrix
            .iter()
            .map(|row| {
                let logs: Vec<f64> = row.iter().map(|v| v.ln()).collect();
                ols_slope(&log_n, &logs)
            })
            .collect();
        let jbar = crate::stats::mean(&jack);
        let var = jack.iter().map(|s| (s - jbar) * (s - jbar)).sum::<f64>()
            * (cfg.replicas as f64 - 1.0)
            / cfg.replicas as f64;
        let half = 1.96 * var.sqrt();
        (Some(slope), Some((slope - half, slope + half)))
    } else {
        (None, None)
    };

    let monotone_within_2se = points.windows(2).all(|w| {
        w[1].metric - w[0].metric
            <= 2.0 * (w[0].metric_se.powi(2) + w[1].metric_se.powi(2)).sqrt()
    });
    let slope_in_window = fitted_slope
        .map(|s| s >= RATE_SLOPE_WINDOW.0 && s <= RATE_SLOPE_WINDOW.1)
        .unwrap_or(false);

    Ok(RateSweepResult {
        regime: if critical {
            Regime::Critical
        } else {
            Regime::Subcritical
        },
        n_dim: cfg.n_dim,
        beta: cfg.beta,
        points,
        fitted_slope,
        slope_ci,
        monotone_within_2se,
        slope_in_window,
    })
}

pub fn write_rate_sweep_csv(result: &RateSweepResult, path: &Path) -> Result<()> {
    let mut lines = vec!["n,samples,metric,metric_se,w1_exact_reduced,exact_m".to_string()];
    for p in &result.points {
        lines.push(format!(
            "{},{},{:.12e},{:.12e},{:.12e},{}",
            p.n_sites, p.samples, p.metric, p.metric_se, p.w1_exact_reduced, p.exact_m
        ));
    }
    write_lines(path, &lines)
}

/// Two-column plot data (n, metric).
pub fn write_rate_sweep_plot(result: &RateSweepResult, path: &Path) -> Result<()> {
    let lines: Vec<String> = result
        .points
        .iter()
        .map(|p| format!("{} {:.12e}", p.n_sites, p.metric))
        .collect();
    write_lines(path, &lines)
}

#[derive(Debug, Clone, Serialize)]
pub struct StageOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    pub wall_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub config: ExperimentConfig,
    pub stage_seeds: BTreeMap<String, u64>,
    pub wall_clock_secs: BTreeMap<String, f64>,
    /// SHA-256 per output file (relative path), for byte-identity checks
    /// across reruns.
    pub output_digests: BTreeMap<String, String>,
    pub stages: Vec<StageOutcome>,
    pub all_passed: bool,
}

pub fn sha256_hex(path: &Path) -> Result<String> {
    use sha2::{Digest, Sha256};
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect())
}

pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    for line in lines {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Outcome of `full-report`: per-stage pass/fail and the manifest path.
#[derive(Debug)]
pub struct FullReport {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
}

/// Run every stage (special-function tables, constants, pair diagnostics,
/// Langevin checks, both rate sweeps), writing CSV/JSON artifacts and the
/// manifest into `out_dir`. Each stage's pass criterion is recorded; the
/// overall run passes iff all stages do.
pub fn full_report(cfg: &ExperimentConfig, out_dir: &Path) -> Result<FullReport> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let mut outputs: Vec<PathBuf> = Vec::new();
    let mut stages: Vec<StageOutcome> = Vec::new();
    let mut stage_seeds = BTreeMap::new();
    let mut wall = BTreeMap::new();

    macro_rules! stage {
        ($name:expr, $body:expr) => {{
            let started = Instant::now();
            let seed = derive_seed(cfg.seed, $name, 0);
            stage_seeds.insert($name.to_string(), seed);
            let result: Result<(bool, String)> = (|| $body(seed))();
            let secs = started.elapsed().as_secs_f64();
            wall.insert($name.to_string(), secs);
            match result {
                Ok((passed, detail)) => stages.push(StageOutcome {
                    name: $name.to_string(),
                    passed,
                    detail,
                    wall_secs: secs,
                }),
                Err(e) => stages.push(StageOutcome {
                    name: $name.to_string(),
                    passed: false,
                    detail: format!("error: {e}"),
                    wall_secs: secs,
                }),
            }
        }};
    }

    // 1. Special-function table.
    stage!("specfun-table", |_seed: u64| {
        let model = crate::specfun::ModelFunctions::new(cfg.n_dim)?;
        let rows = crate::specfun::table(&model, 101)?;
        let path = out_dir.join("specfun_table.csv");
        write_specfun_csv(&rows, &path)?;
        outputs.push(path);
        let worst = rows
            .iter()
            .map(|r| r.identity_residual.abs())
            .fold(0.0, f64::max);
        Ok((worst <= 1e-12, format!("max identity residual {worst:.3e}")))
    });

    // 2. Constants.
    let spec = quartic_potential(cfg.n_dim, cfg.langevin.b_radius)?;
    let mut constants_opt = None;
    stage!("constants", |_seed: u64| {
        let constants = ergodic_constants(&spec)?;
        let path = out_dir.join("constants.json");
        write_json(&constants.to_annotated_json(), &path)?;
        outputs.push(path);
        let ok = constants.theta > 0.0 && constants.c1_const > 1.0;
        constants_opt = Some(constants);
        Ok((ok, "constant chain computed".to_string()))
    });

    // 3. Pair diagnostics.
    stage!("pair-diagnostics", |seed: u64| {
        let sweep = PairSweepConfig {
            n_dim: cfg.n_dim,
            n_grid: cfg.n_grid.clone(),
            replicas: cfg.replicas,
            samples_per_replica: cfg.pair_samples_per_replica,
            burn_in: cfg.burn_in,
            thin: cfg.thin,
            seed,
        };
        let report = remainder_rate_sweep(&sweep)?;
        let json_path = out_dir.join("pair_summary.json");
        write_json(&report, &json_path)?;
        outputs.push(json_path);
        let csv_path = out_dir.join("pair_rates.csv");
        write_pair_csv(&report, &csv_path)?;
        outputs.push(csv_path);

        let in_window = |s: Option<f64>| {
            s.map(|s| s >= REMAINDER_SLOPE_WINDOW.0 && s <= REMAINDER_SLOPE_WINDOW.1)
                .unwrap_or(false)
        };
        let ok = in_window(report.e_r1.fitted_slope)
            && in_window(report.e_r2.fitted_slope)
            && in_window(report.third_moment.fitted_slope)
            && report.third_moment_within_bound
            && report.max_delta_ratio <= 1.0 + 1e-12;
        Ok((
            ok,
            format!(
                "slopes: R1 {:?}, R2 {:?}, third {:?}",
                report.e_r1.fitted_slope, report.e_r2.fitted_slope, report.third_moment.fitted_slope
            ),
        ))
    });

    // 4. Langevin checks.
    let lp = &cfg.langevin;
    let constants = constants_opt
        .clone()
        .ok_or_else(|| Error::Config("constants stage must precede langevin".into()))?;
    stage!("langevin-variation", |seed: u64| {
        let dirs = standard_directions(spec.dim);
        let report = variation_moment_check(
            &spec,
            &constants,
            &vec![0.0; spec.dim],
            &dirs,
            &lp.t_grid,
            lp.dt,
            lp.variation_replicas,
            seed,
        )?;
        let path = out_dir.join("langevin_variation.json");
        write_json(&report, &path)?;
        outputs.push(path);
        Ok((true, format!("empirical U1 rate {:.3}", report.empirical_u1_rate)))
    });
    stage!("langevin-decay", |seed: u64| {
        let report = decay_check(
            &spec,
            &constants,
            &vec![0.0; spec.dim],
            &lp.decay_pairs,
            lp.dt,
            lp.decay_replicas,
            seed,
        )?;
        let path = out_dir.join("langevin_decay.json");
        write_json(&report, &path)?;
        outputs.push(path);
        Ok((true, "decay bounds hold".to_string()))
    });
    stage!("langevin-bel", |seed: u64| {
        let report = bel_stage(&spec, &constants, lp, seed)?;
        let path = out_dir.join("langevin_bel.json");
        write_json(&report, &path)?;
        outputs.push(path);
        Ok((
            report.order1_matches_fd,
            format!(
                "order-1 {:.4} vs fd {:.4} (joint se {:.4})",
                report.order1.value, report.fd_value, report.joint_se
            ),
        ))
    });
    stage!("langevin-stein", |seed: u64| {
        let (ou, quartic) = stein_stage(cfg.n_dim, &spec, &cfg.langevin, seed)?;
        let path = out_dir.join("langevin_stein.json");
        write_json(&serde_json::json!({ "ou": ou, "quartic": quartic }), &path)?;
        outputs.push(path);
        let ok = ou.within_three_budgets && quartic.within_three_budgets;
        Ok((
            ok,
            format!(
                "residuals: ou {:.3e} (budget {:.3e}), quartic {:.3e} (budget {:.3e})",
                ou.residual, ou.budget, quartic.residual, quartic.budget
            ),
        ))
    });
    stage!("langevin-ergodic", |seed: u64| {
        let law = QuarticLaw::new(cfg.n_dim)?;
        let report = geom_erg_check(
            &spec,
            &law,
            &vec![0.0; spec.dim],
            &lp.ergodic_t_grid,
            lp.dt,
            lp.ergodic_samples,
            seed,
        )?;
        let path = out_dir.join("langevin_ergodic.json");
        write_json(&report, &path)?;
        outputs.push(path);
        Ok((
            report.all_within,
            format!("bias floor {:.4}", report.bias_floor),
        ))
    });

    // 5./6. Rate sweeps.
    stage!("rate-sweep-critical", |seed: u64| {
        let mut sweep_cfg = cfg.clone();
        sweep_cfg.beta = f64::from(cfg.n_dim);
        sweep_cfg.seed = seed;
        let result = rate_sweep(&sweep_cfg)?;
        persist_sweep(&result, out_dir, "rate_critical", &mut outputs)?;
        Ok((
            result.slope_in_window && result.monotone_within_2se,
            format!("slope {:?}", result.fitted_slope),
        ))
    });
    if let Some(sub_beta) = cfg.subcritical_beta {
        stage!("rate-sweep-subcritical", |seed: u64| {
            let mut sweep_cfg = cfg.clone();
            sweep_cfg.beta = sub_beta;
            sweep_cfg.seed = seed;
            let result = rate_sweep(&sweep_cfg)?;
            persist_sweep(&result, out_dir, "rate_subcritical", &mut outputs)?;
            Ok((
                result.slope_in_window,
                format!("slope {:?}", result.fitted_slope),
            ))
        });
    }

    let mut output_digests = BTreeMap::new();
    for path in &outputs {
        let rel = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .to_string();
        output_digests.insert(rel, sha256_hex(path)?);
    }
    let all_passed = stages.iter().all(|s| s.passed);
    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        stage_seeds,
        wall_clock_secs: wall,
        output_digests,
        stages,
        all_passed,
    };
    let manifest_path = out_dir.join("manifest.json");
    write_json(&manifest, &manifest_path)?;
    Ok(FullReport {
        manifest,
        manifest_path,
    })
}

fn standard_directions(dim: usize) -> Directions {
    let u = crate::linalg::basis(dim, 0);
    let v = crate::linalg::basis(dim, 1.min(dim - 1));
    let mut w = vec![0.0; dim];
    let s = (dim as f64).sqrt();
    for c in w.iter_mut() {
        *c = 1.0 / s;
    }
    Directions { u, v, w }
}

#[derive(Debug, Clone, Serialize)]
pub struct BelStageReport {
    pub order1: crate::langevin::bel::DerivativeEstimate,
    pub fd_value: f64,
    pub fd_se: f64,
    pub joint_se: f64,
    pub order1_matches_fd: bool,
    pub order2: crate::langevin::bel::DerivativeEstimate,
    /// S(t) e^{-theta t/2} at the probe time.
    pub order2_envelope: f64,
    pub order3: crate::langevin::bel::DerivativeEstimate,
    /// Q(t) e^{-theta t/4} at the probe time.
    pub order3_envelope: f64,
}

/// Order-1 Elworthy-Li vs the finite-difference oracle, plus coarse
/// order-2/3 probes against the S/Q envelopes.
pub fn bel_stage(
    spec: &crate::constants::PotentialSpec,
    constants: &crate::constants::ErgodicityConstants,
    lp: &LangevinParams,
    seed: u64,
) -> Result<BelStageReport> {
    let h = TestFunction::radial_bump(1.0, 0.9);
    let x = {
        let mut x = vec![0.0; spec.dim];
        x[0] = 0.6;
        x[1 % spec.dim] += 0.2;
        x
    };
    let dirs = standard_directions(spec.dim);
    let t = lp.bel_t;
    let budget = BelBudget {
        outer: lp.bel_outer,
        inner: lp.bel_inner,
        sub_stride: 10,
        cost_cap: 400_000,
    };
    let order1 = elworthy_li(spec, &h, &x, t, 1, &dirs, lp.dt, &budget, derive_seed(seed, "o1", 0))?;
    let (fd_value, fd_se) = finite_difference_d1(
        spec,
        &h,
        &x,
        &dirs.u,
        1e-3,
        t,
        lp.dt,
        lp.fd_replicas,
        derive_seed(seed, "fd", 0),
    )?;
    let joint_se = (order1.std_error.powi(2) + fd_se.powi(2)).sqrt();
    let order1_matches_fd = (order1.value - fd_value).abs() <= 4.0 * joint_se;

    // Coarse probes of the higher orders against the S/Q envelopes; each
    // point costs a nested Monte Carlo estimate, so only one (x, t) is run.
    let order2 = elworthy_li(spec, &h, &x, t, 2, &dirs, lp.dt, &budget, derive_seed(seed, "o2", 0))?;
    let order3_budget = BelBudget {
        outer: (lp.bel_outer / 2).max(8),
        inner: (lp.bel_inner / 4).max(4),
        sub_stride: 40,
        cost_cap: 400_000,
    };
    let order3 = elworthy_li(
        spec,
        &h,
        &x,
        t,
        3,
        &dirs,
        lp.dt * 2.0,
        &order3_budget,
        derive_seed(seed, "o3", 0),
    )?;
    Ok(BelStageReport {
        order1,
        fd_value,
        fd_se,
        joint_se,
        order1_matches_fd,
        order2,
        order2_envelope: constants.s_env(t) * (-constants.theta * t / 2.0).exp(),
        order3,
        order3_envelope: constants.q_env(t) * (-constants.theta * t / 4.0).exp(),
    })
}

/// Stein residual checks for the closed-form OU case and the quartic bump.
pub fn stein_stage(
    n_dim: u32,
    spec: &crate::constants::PotentialSpec,
    lp: &LangevinParams,
    seed: u64,
) -> Result<(
    crate::langevin::checks::SteinReport,
    crate::langevin::checks::SteinReport,
)> {
    // Closed-form OU case in 1D.
    let ou_spec = quadratic_potential(1);
    let h_lin = TestFunction::linear(vec![1.0]);
    let ou_target = SteinTarget {
        mu_h: 0.0,
        mu_h_err: 0.0,
        m1: (2.0 / std::f64::consts::PI).sqrt(),
        eta: crate::constants::eta(&ou_spec),
    };
    let ou = stein_solution_check(
        &ou_spec,
        &ou_target,
        &h_lin,
        &[0.7],
        lp.stein_t_max,
        lp.dt * 2.0,
        lp.stein_eps,
        lp.stein_replicas,
        1e-2,
        derive_seed(seed, "stein-ou", 0),
    )?;

    // Quartic with a smooth radial bump.
    let law = QuarticLaw::new(n_dim)?;
    let h_bump = TestFunction::radial_bump(1.0, 0.9);
    let target = SteinTarget::from_quartic(&law, spec, &h_bump)?;
    let mut x = vec![0.0; spec.dim];
    x[0] = 0.5;
    let quartic = stein_solution_check(
        spec,
        &target,
        &h_bump,
        &x,
        lp.stein_t_max,
        lp.dt * 2.0,
        lp.stein_eps,
        lp.stein_replicas,
        1e-2,
        derive_seed(seed, "stein-quartic", 0),
    )?;
    Ok((ou, quartic))
}

fn persist_sweep(
    result: &RateSweepResult,
    out_dir: &Path,
    stem: &str,
    outputs: &mut Vec<PathBuf>,
) -> Result<()> {
    let csv = out_dir.join(format!("{stem}.csv"));
    write_rate_sweep_csv(result, &csv)?;
    outputs.push(csv);
    let json = out_dir.join(format!("{stem}.json"));
    write_json(result, &json)?;
    outputs.push(json);
    let plot = out_dir.join(format!("{stem}_plot.dat"));
    write_rate_sweep_plot(result, &plot)?;
    outputs.push(plot);
    Ok(())
}

pub fn write_specfun_csv(rows: &[crate::specfun::TableRow], path: &Path) -> Result<()> {
    let mut lines = vec!["x,f,g,identity_residual,taylor_residual".to_string()];
    for r in rows {
        let taylor = r
            .taylor_residual
            .map(|t| format!("{t:.12e}"))
            .unwrap_or_default();
        lines.push(format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{}",
            r.x, r.f, r.g, r.identity_residual, taylor
        ));
    }
    write_lines(path, &lines)
}

pub fn write_pair_csv(report: &crate::pair::PairSweepReport, path: &Path) -> Result<()> {
    let mut lines =
        vec!["n,e_r1,e_r1_se,e_r2,e_r2_se,a1,a2,a3,a4,a5,third_moment,third_moment_bound"
            .to_string()];
    for (i, &n) in report.e_r1.n_grid.iter().enumerate() {
        lines.push(format!(
            "{},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            n,
            report.e_r1.values[i],
            report.e_r1.std_errors[i],
            report.e_r2.values[i],
            report.e_r2.std_errors[i],
            report.a_norms[0].values[i],
            report.a_norms[1].values[i],
            report.a_norms[2].values[i],
            report.a_norms[3].values[i],
            report.a_norms[4].values[i],
            report.third_moment.values[i],
            report.third_moment_bounds[i],
        ));
    }
    write_lines(path, &lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default_critical(2, 7);
        cfg.n_grid = vec![8, 16, 32];
        cfg.replicas = 4;
        cfg.samples_per_n = 2000;
        cfg.burn_in = 100;
        cfg.thin = 2;
        cfg.exact_matching_samples = 64;
        cfg
    }

    #[test]
    fn critical_sweep_decreases() {
        let cfg = tiny_config();
        let result = rate_sweep(&cfg).unwrap();
        assert_eq!(result.regime, Regime::Critical);
        assert_eq!(result.points.len(), 3);
        assert!(result.points[2].metric < result.points[0].metric);
        assert!(result.fitted_slope.unwrap() < 0.0);
        assert!(result.monotone_within_2se);
        for p in &result.points {
            assert!(p.metric > 0.0 && p.metric_se > 0.0);
            assert!(p.w1_exact_reduced > 0.0);
        }
    }

    #[test]
    fn subcritical_scaling_covariance() {
        // At beta = 0 the scaled magnetization sqrt(N) S/sqrt(n) has
        // identity covariance; the componentwise metric against N(0,1)
        // should already be small at moderate n.
        let mut cfg = tiny_config();
        cfg.beta = 0.0;
        cfg.n_grid = vec![64];
        cfg.samples_per_n = 4000;
        let result = rate_sweep(&cfg).unwrap();
        assert_eq!(result.regime, Regime::Subcritical);
        assert!(result.points[0].metric < 0.1, "metric {}", result.points[0].metric);
    }

    #[test]
    fn sweep_outputs_are_deterministic() {
        let cfg = tiny_config();
        let a = rate_sweep(&cfg).unwrap();
        let b = rate_sweep(&cfg).unwrap();
        for (pa, pb) in a.points.iter().zip(&b.points) {
            assert_eq!(pa.metric, pb.metric);
            assert_eq!(pa.w1_exact_reduced, pb.w1_exact_reduced);
        }
    }

    #[test]
    fn degenerate_grid_has_null_slope() {
        let mut cfg = tiny_config();
        cfg.n_grid = vec![16];
        cfg.samples_per_n = 400;
        let result = rate_sweep(&cfg).unwrap();
        assert!(result.fitted_slope.is_none());
        assert!(result.slope_ci.is_none());
        // CSV still written.
        let dir = std::env::temp_dir().join("critical-on-test-sweep");
        let path = dir.join("sweep.csv");
        write_rate_sweep_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().count() == 2);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_digests_are_stable() {
        let dir = std::env::temp_dir().join("critical-on-test-digest");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("x.csv");
        write_lines(&path, &["a,b".into(), "1,2".into()]).unwrap();
        let d1 = sha256_hex(&path).unwrap();
        let d2 = sha256_hex(&path).unwrap();
        assert_eq!(d1, d2);
        assert_eq!(d1.len(), 64);
        std::fs::remove_dir_all(&dir).ok();
    }
}
