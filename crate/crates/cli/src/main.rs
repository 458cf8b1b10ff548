//! `critical-on`: experiments on the critical mean-field O(N) magnetization.
//!
//! Exit codes: 0 all checks passed, 1 an assertion/bound failed, 2
//! configuration or input error. Thread count is controlled only by the
//! RAYON_NUM_THREADS environment variable.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use critical_on::constants::{
    assumption_check, ergodic_constants, quartic_potential,
};
use critical_on::langevin::checks::{decay_check, geom_erg_check, variation_moment_check};
use critical_on::langevin::{simulate, Directions};
use critical_on::limit_laws::QuarticLaw;
use critical_on::linalg::norm;
use critical_on::pair::{remainder_rate_sweep, PairSweepConfig};
use critical_on::runner::{
    bel_stage, full_report, rate_sweep, stein_stage, write_json, write_lines, write_pair_csv,
    write_rate_sweep_csv, write_rate_sweep_plot, write_specfun_csv, ExperimentConfig,
};
use critical_on::spin::{for_each_equilibrium_sample, EquilibriumParams};
use critical_on::transport::{w1_exact, w1_sliced, w1_sorted_1d, EmpiricalCloud};
use critical_on::{Error, Result};

#[derive(Parser)]
#[command(name = "critical-on", version, about = "Numerical laboratory for the critical mean-field O(N) magnetization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit f_N, g_N and their identity/Taylor residuals on a grid of [0,1].
    #[command(name = "specfun-table")]
    SpecfunTable {
        #[arg(long = "N")]
        n_dim: u32,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Sample the equilibrium magnetization of the heat-bath chain.
    #[command(name = "sample-spins")]
    SampleSpins {
        #[arg(long = "N")]
        n_dim: u32,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        beta: f64,
        /// Total samples, split across replicas.
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Draw from the quartic limit law exp(-a_N |x|^4).
    #[command(name = "limit-sample")]
    LimitSample {
        #[arg(long = "N")]
        n_dim: u32,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Wasserstein-1 distance between two point clouds read from CSV.
    Wasserstein {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Exact)]
        method: MethodArg,
        /// Projection count for the sliced method.
        #[arg(long, default_value_t = 32)]
        directions: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },

    /// Exchangeable-pair remainder rates across an n-grid at criticality.
    #[command(name = "pair-diagnostics")]
    PairDiagnostics {
        #[arg(long = "N")]
        n_dim: u32,
        /// Comma-separated n values, e.g. 16,32,64,128.
        #[arg(long, value_delimiter = ',')]
        n_grid: Vec<usize>,
        #[arg(long, default_value_t = 8)]
        replicas: usize,
        #[arg(long, default_value_t = 1250)]
        samples: usize,
        #[arg(long, default_value_t = 1000)]
        burn_in: usize,
        #[arg(long, default_value_t = 10)]
        thin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// The explicit ergodicity constant chain as annotated JSON.
    Constants {
        #[arg(long, default_value = "quartic")]
        model: String,
        #[arg(long = "N")]
        n_dim: u32,
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
        /// Also run the pointwise assumption margins check.
        #[arg(long, default_value_t = false)]
        check_assumptions: bool,
    },

    /// Langevin/semigroup checks against the explicit constants.
    Langevin {
        #[arg(long, default_value = "quartic")]
        model: String,
        #[arg(long = "N")]
        n_dim: u32,
        #[arg(long = "B", default_value_t = 1.0)]
        b: f64,
        /// Comma-separated start point (zeros when omitted).
        #[arg(long, value_delimiter = ',')]
        x0: Vec<f64>,
        #[arg(long, default_value_t = 2.0)]
        t: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 400)]
        replicas: usize,
        #[arg(long, value_enum)]
        check: CheckArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Dump one simulated joint trajectory to this CSV.
        #[arg(long)]
        dump_trajectory: Option<PathBuf>,
    },

    /// W1 rate sweep (critical when beta = N in the config, else subcritical).
    #[command(name = "rate-sweep")]
    RateSweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run every stage and write the manifest; exit 0 iff all assertions pass.
    #[command(name = "full-report")]
    FullReport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Exact,
    #[value(name = "sorted1d")]
    Sorted1d,
    Sliced,
}

#[derive(Clone, Copy, ValueEnum)]
enum CheckArg {
    Variation,
    Decay,
    Bel,
    Stein,
    Ergodic,
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(passed) => std::process::exit(if passed { 0 } else { 1 }),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

/// 1 for failed numerical assertions, 2 for configuration/input problems.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::BoundViolated { .. }
        | Error::AssumptionViolated { .. }
        | Error::IntegrationFailure { .. }
        | Error::StepSize { .. } => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::SpecfunTable { n_dim, grid, out } => {
            let model = critical_on::specfun::ModelFunctions::new(n_dim)?;
            let rows = critical_on::specfun::table(&model, grid)?;
            match out {
                Some(path) => write_specfun_csv(&rows, &path)?,
                None => {
                    println!("x,f,g,identity_residual,taylor_residual");
                    for r in &rows {
                        let taylor = r
                            .taylor_residual
                            .map(|t| format!("{t:.12e}"))
                            .unwrap_or_default();
                        println!(
                            "{:.12e},{:.12e},{:.12e},{:.12e},{}",
                            r.x, r.f, r.g, r.identity_residual, taylor
                        );
                    }
                }
            }
            Ok(true)
        }

        Command::SampleSpins {
            n_dim,
            n,
            beta,
            count,
            burn_in,
            thin,
            replicas,
            seed,
            out,
        } => {
            if replicas == 0 || count < replicas {
                return Err(Error::Config("need count >= replicas >= 1".into()));
            }
            let per = count / replicas;
            let mut header = String::from("replica,sweep_index");
            for d in 1..=n_dim {
                header.push_str(&format!(",w_{d}"));
            }
            header.push_str(",abs_w,abs_m");
            let mut lines = vec![header];
            for r in 0..replicas {
                let params = EquilibriumParams {
                    n_dim: n_dim as usize,
                    n_sites: n,
                    beta,
                    burn_in,
                    thin,
                    count: per,
                    seed: critical_on::rng::derive_seed(seed, "sample-spins", r as u64),
                };
                for_each_equilibrium_sample(params, |k, cfg| {
                    let v = cfg.magnetization();
                    let mut line = format!("{r},{}", burn_in + (k + 1) * thin);
                    for c in &v.w {
                        line.push_str(&format!(",{c:.12e}"));
                    }
                    line.push_str(&format!(",{:.12e},{:.12e}", v.w_norm(), v.m_norm()));
                    lines.push(line);
                })?;
            }
            write_lines(&out, &lines)?;
            eprintln!("wrote {} samples to {}", lines.len() - 1, out.display());
            Ok(true)
        }

        Command::LimitSample { n_dim, count, seed, out } => {
            let law = QuarticLaw::new(n_dim)?;
            let pts = law.sample(count, seed);
            let mut header = String::new();
            for d in 1..=n_dim {
                header.push_str(&format!("y_{d},"));
            }
            header.push_str("abs_y");
            let mut lines = vec![header];
            for p in &pts {
                let mut line = String::new();
                for c in p {
                    line.push_str(&format!("{c:.12e},"));
                }
                line.push_str(&format!("{:.12e}", norm(p)));
                lines.push(line);
            }
            write_lines(&out, &lines)?;
            eprintln!("wrote {count} samples to {}", out.display());
            Ok(true)
        }

        Command::Wasserstein {
            a,
            b,
            method,
            directions,
            seed,
        } => {
            let ra = read_points(&a)?;
            let rb = read_points(&b)?;
            let (ca, cb) = equalize(ra, rb, seed)?;
            let result = match method {
                MethodArg::Exact => w1_exact(&ca, &cb)?,
                MethodArg::Sorted1d => {
                    if ca.dim != 1 {
                        return Err(Error::Config(
                            "sorted1d expects one-column input; use exact or sliced".into(),
                        ));
                    }
                    let xs: Vec<f64> = (0..ca.len()).map(|i| ca.point(i)[0]).collect();
                    let ys: Vec<f64> = (0..cb.len()).map(|i| cb.point(i)[0]).collect();
                    w1_sorted_1d(&xs, &ys)?
                }
                MethodArg::Sliced => w1_sliced(&ca, &cb, directions, seed)?,
            };
            println!("{:.12e}", result.cost);
            Ok(true)
        }

        Command::PairDiagnostics {
            n_dim,
            n_grid,
            replicas,
            samples,
            burn_in,
            thin,
            seed,
            out,
        } => {
            let cfg = PairSweepConfig {
                n_dim,
                n_grid,
                replicas,
                samples_per_replica: samples,
                burn_in,
                thin,
                seed,
            };
            let report = remainder_rate_sweep(&cfg)?;
            std::fs::create_dir_all(&out)?;
            write_pair_csv(&report, &out.join("pair_rates.csv"))?;
            write_json(&report, &out.join("pair_summary.json"))?;
            println!(
                "slopes: E|R1| {:?}, E||R2|| {:?}, third moment {:?}",
                report.e_r1.fitted_slope, report.e_r2.fitted_slope, report.third_moment.fitted_slope
            );
            Ok(report.third_moment_within_bound && report.max_delta_ratio <= 1.0 + 1e-12)
        }

        Command::Constants {
            model,
            n_dim,
            b,
            check_assumptions,
        } => {
            require_quartic(&model)?;
            let spec = quartic_potential(n_dim, b)?;
            let constants = ergodic_constants(&spec)?;
            let mut doc = constants.to_annotated_json();
            if check_assumptions {
                let report = assumption_check(&spec, 2000, 10.0, 0)?;
                doc["assumption_margins"] = serde_json::to_value(&report)?;
            }
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(true)
        }

        Command::Langevin {
            model,
            n_dim,
            b,
            x0,
            t,
            dt,
            replicas,
            check,
            seed,
            out,
            dump_trajectory,
        } => {
            require_quartic(&model)?;
            let spec = quartic_potential(n_dim, b)?;
            let x0 = if x0.is_empty() {
                vec![0.0; spec.dim]
            } else if x0.len() == spec.dim {
                x0
            } else {
                return Err(Error::Config(format!(
                    "--x0 must have {} components",
                    spec.dim
                )));
            };

            if let Some(path) = &dump_trajectory {
                dump_path(&spec, &x0, dt, t, seed, path)?;
            }

            let mut lp = critical_on::runner::LangevinParams {
                dt,
                b_radius: b,
                variation_replicas: replicas,
                decay_replicas: replicas,
                ergodic_samples: replicas.max(64),
                ..Default::default()
            };
            lp.t_grid = vec![t / 8.0, t / 4.0, t / 2.0, t];
            lp.ergodic_t_grid = lp.t_grid.clone();

            let (doc, passed): (serde_json::Value, bool) = match check {
                CheckArg::Variation => {
                    let constants = ergodic_constants(&spec)?;
                    let dirs = default_directions(spec.dim);
                    let report = variation_moment_check(
                        &spec, &constants, &x0, &dirs, &lp.t_grid, dt, replicas, seed,
                    )?;
                    (serde_json::to_value(&report)?, true)
                }
                CheckArg::Decay => {
                    let constants = ergodic_constants(&spec)?;
                    let pairs: Vec<(f64, f64)> =
                        lp.t_grid.iter().map(|&ti| (ti / 2.0, ti)).collect();
                    let report =
                        decay_check(&spec, &constants, &x0, &pairs, dt, replicas, seed)?;
                    (serde_json::to_value(&report)?, true)
                }
                CheckArg::Bel => {
                    let constants = ergodic_constants(&spec)?;
                    let report = bel_stage(&spec, &constants, &lp, seed)?;
                    let ok = report.order1_matches_fd;
                    (serde_json::to_value(&report)?, ok)
                }
                CheckArg::Stein => {
                    let (ou, quartic) = stein_stage(n_dim, &spec, &lp, seed)?;
                    let ok = ou.within_three_budgets && quartic.within_three_budgets;
                    (serde_json::json!({ "ou": ou, "quartic": quartic }), ok)
                }
                CheckArg::Ergodic => {
                    let law = QuarticLaw::new(n_dim)?;
                    let report = geom_erg_check(
                        &spec,
                        &law,
                        &x0,
                        &lp.ergodic_t_grid,
                        dt,
                        lp.ergodic_samples,
                        seed,
                    )?;
                    let ok = report.all_within;
                    (serde_json::to_value(&report)?, ok)
                }
            };
            match out {
                Some(path) => write_json(&doc, &path)?,
                None => println!("{}", serde_json::to_string_pretty(&doc)?),
            }
            Ok(passed)
        }

        Command::RateSweep { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let result = rate_sweep(&cfg)?;
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out"));
            std::fs::create_dir_all(&out_dir)?;
            write_rate_sweep_csv(&result, &out_dir.join("rate_sweep.csv"))?;
            write_json(&result, &out_dir.join("rate_sweep.json"))?;
            write_rate_sweep_plot(&result, &out_dir.join("rate_sweep_plot.dat"))?;
            println!(
                "regime {:?}: slope {:?} (ci {:?}), monotone {}",
                result.regime, result.fitted_slope, result.slope_ci, result.monotone_within_2se
            );
            Ok(result.slope_in_window && result.monotone_within_2se)
        }

        Command::FullReport { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out_dir = out.unwrap_or_else(|| PathBuf::from("out"));
            let report = full_report(&cfg, &out_dir)?;
            for stage in &report.manifest.stages {
                println!(
                    "{} {:<24} {:>8.1}s  {}",
                    if stage.passed { "PASS" } else { "FAIL" },
                    stage.name,
                    stage.wall_secs,
                    stage.detail
                );
            }
            println!("manifest: {}", report.manifest_path.display());
            Ok(report.manifest.all_passed)
        }
    }
}

fn require_quartic(model: &str) -> Result<()> {
    if model != "quartic" {
        return Err(Error::Config(format!(
            "only the quartic model is available, got {model}"
        )));
    }
    Ok(())
}

fn default_directions(dim: usize) -> Directions {
    let u = critical_on::linalg::basis(dim, 0);
    let v = critical_on::linalg::basis(dim, 1.min(dim - 1));
    let w = vec![1.0 / (dim as f64).sqrt(); dim];
    Directions { u, v, w }
}

/// Rows of comma-separated floats; a single leading non-numeric line is
/// treated as a header.
fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|tok| tok.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if i == 0 => continue, // header
            Err(e) => {
                return Err(Error::Config(format!(
                    "{}:{}: unparsable row: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::Config(format!("{}: no data rows", path.display())));
    }
    Ok(rows)
}

/// Equal-size clouds for the exact solver: the larger side is subsampled
/// with a warning.
fn equalize(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, seed: u64) -> Result<(EmpiricalCloud, EmpiricalCloud)> {
    let ca = EmpiricalCloud::from_rows(&a)?;
    let cb = EmpiricalCloud::from_rows(&b)?;
    let m = ca.len().min(cb.len());
    let ca = if ca.len() > m {
        eprintln!(
            "warning: cloud a has {} points; subsampling to {m} to match",
            ca.len()
        );
        ca.subsample(m, seed)
    } else {
        ca
    };
    let cb = if cb.len() > m {
        eprintln!(
            "warning: cloud b has {} points; subsampling to {m} to match",
            cb.len()
        );
        cb.subsample(m, seed)
    } else {
        cb
    };
    Ok((ca, cb))
}

/// One joint trajectory as CSV: t, X components, |U1|, |U2_uv|, |U3|.
fn dump_path(
    spec: &critical_on::constants::PotentialSpec,
    x0: &[f64],
    dt: f64,
    t: f64,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let dirs = default_directions(spec.dim);
    let path = simulate(spec, x0, dt, t, &dirs, seed)?;
    let mut header = String::from("t");
    for d in 1..=spec.dim {
        header.push_str(&format!(",x_{d}"));
    }
    header.push_str(",abs_u1,abs_u2_uv,abs_u3");
    let mut lines = vec![header];
    for k in 0..=path.steps {
        let mut line = format!("{:.6e}", k as f64 * dt);
        for c in path.x_at(k) {
            line.push_str(&format!(",{c:.12e}"));
        }
        line.push_str(&format!(
            ",{:.12e},{:.12e},{:.12e}",
            norm(path.u1_u_at(k)),
            norm(path.u2_uv_at(k)),
            norm(path.u3_at(k))
        ));
        lines.push(line);
    }
    write_lines(out, &lines)?;
    eprintln!("trajectory written to {}", out.display());
    Ok(())
}
