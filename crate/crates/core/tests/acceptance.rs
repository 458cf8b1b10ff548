//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its headline numbers (run with `--nocapture` to see them stream).
//!
//! The Monte Carlo criteria pin the sizes they were calibrated at: n-grids
//! 2^4..2^10, 1e5 W-samples per grid point for the rate sweeps, 1e4
//! equilibrium samples per n for the remainder rates, 1e5 conditional-law
//! resamples, 1e3 variation paths. Tolerances come from closed forms (exact
//! identities at 1e-12/1e-10), Monte Carlo standard errors (4 SE), or
//! explicit constants computed in the same run.

mod common;

use std::time::Instant;

use critical_on::constants::{ergodic_constants, quadratic_potential, quartic_potential};
use critical_on::langevin::checks::{decay_check, geom_erg_check, variation_moment_check};
use critical_on::langevin::{estimate_pt, simulate, Directions, TestFunction};
use critical_on::limit_laws::QuarticLaw;
use critical_on::linalg::{dist, norm};
use critical_on::pair;
use critical_on::rng::stream;
use critical_on::runner::{
    bel_stage, rate_sweep, stein_stage, ExperimentConfig, LangevinParams, RATE_SLOPE_WINDOW,
    REMAINDER_SLOPE_WINDOW,
};
use critical_on::specfun::{u_nu, ModelFunctions};
use critical_on::spin::SpinConfig;
use critical_on::stats::mean_se;
use critical_on::transport::{w1_exact, EmpiricalCloud};

fn pass(criterion: u32, name: &str, started: Instant, detail: String) {
    println!(
        "ACCEPTANCE {criterion:>2} {name:<22} PASS  [{:6.1}s]  {detail}",
        started.elapsed().as_secs_f64()
    );
}

#[test]
fn c01_specfun_identity_and_bessel_oracle() {
    let t0 = Instant::now();
    // f_N + x^2 g_N = 1 to 1e-12 on a 100-point grid for N in 2..=10.
    let mut worst_identity = 0.0f64;
    for n in 2..=10u32 {
        let model = ModelFunctions::new(n).unwrap();
        for i in 0..100 {
            let x = i as f64 / 99.0;
            let fg = model.fg(x).unwrap();
            worst_identity = worst_identity.max((fg.f + x * x * fg.g - 1.0).abs());
        }
    }
    assert!(worst_identity <= 1e-12, "identity residual {worst_identity:.3e}");

    // Series vs the Bessel integral-representation oracle to 1e-10 relative.
    let mut worst_rel = 0.0f64;
    for n in 2..=10u32 {
        let nf = f64::from(n);
        for order_shift in [-1.0, 0.0, 1.0] {
            let nu = nf / 2.0 + order_shift;
            for xi in [0.1, 0.3, 0.5, 0.7, 0.9, 1.0] {
                let x = nf * xi;
                let series = u_nu(nu, x).unwrap().value;
                let oracle = common::u_nu_bessel_oracle(nu, x);
                worst_rel = worst_rel.max((series - oracle).abs() / oracle);
            }
        }
    }
    assert!(worst_rel <= 1e-10, "series vs oracle relative error {worst_rel:.3e}");
    pass(
        1,
        "specfun-identity",
        t0,
        format!("identity {worst_identity:.2e}, oracle rel {worst_rel:.2e}"),
    );
}

#[test]
fn c02_taylor_remainder_slope() {
    let t0 = Instant::now();
    let mut detail = String::new();
    for n in [2u32, 3, 5] {
        let model = ModelFunctions::new(n).unwrap();
        let xs: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
        let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
        let ly: Vec<f64> = xs
            .iter()
            .map(|&x| model.f_taylor_remainder(x).unwrap().abs().ln())
            .collect();
        let slope = critical_on::stats::ols_slope(&lx, &ly);
        assert!(slope >= 5.8, "N={n}: Taylor remainder slope {slope}");
        detail.push_str(&format!("N={n}: {slope:.2} "));
    }
    pass(2, "taylor-remainder", t0, detail);
}

#[test]
fn c03_conditional_law() {
    let t0 = Instant::now();
    let resamples = 100_000;
    let mut rng = stream(0xc3, "acceptance", 0);
    for n_dim in [2usize, 3, 5] {
        let model = ModelFunctions::new(n_dim as u32).unwrap();
        for target in [0.0, 0.2, 0.8] {
            let mut cfg = common::config_with_target_loo(n_dim, target);
            let view = cfg.magnetization();
            let loo = view.m_loo(0);
            let fg = model.fg(norm(&loo)).unwrap();

            let mut mean_acc = vec![Vec::with_capacity(resamples); n_dim];
            let mut second_acc = vec![Vec::with_capacity(resamples); n_dim * n_dim];
            for _ in 0..resamples {
                cfg.heat_bath_step(0, &mut rng);
                let s = cfg.spin(0);
                for i in 0..n_dim {
                    mean_acc[i].push(s[i]);
                    for j in 0..n_dim {
                        second_acc[i * n_dim + j].push(s[i] * s[j]);
                    }
                }
            }
            for i in 0..n_dim {
                let (m, se) = mean_se(&mean_acc[i]);
                let expect = fg.f * loo[i];
                assert!(
                    (m - expect).abs() <= 4.0 * se,
                    "N={n_dim} |m|={target}: mean[{i}] {m} vs {expect} (se {se})"
                );
                for j in 0..n_dim {
                    let (m2, se2) = mean_se(&second_acc[i * n_dim + j]);
                    let expect2 = if i == j { fg.f / n_dim as f64 } else { 0.0 }
                        + fg.g * loo[i] * loo[j];
                    assert!(
                        (m2 - expect2).abs() <= 4.0 * se2,
                        "N={n_dim} |m|={target}: second[{i}{j}] {m2} vs {expect2} (se {se2})"
                    );
                }
            }
        }
    }
    pass(
        3,
        "conditional-law",
        t0,
        format!("{resamples} resamples, N in {{2,3,5}}, |m| in {{0, 0.2, 0.8}}"),
    );
}

#[test]
fn c04_pair_identities_and_gradient() {
    let t0 = Instant::now();
    let mut worst_mean = 0.0f64;
    let mut worst_cov = 0.0f64;
    for n_dim in [2usize, 3] {
        let mut rng = stream(0xc4, "acceptance", n_dim as u64);
        for n_sites in [4usize, 16, 64] {
            for _ in 0..1000 {
                let cfg =
                    SpinConfig::random(n_dim, n_sites, n_dim as f64, &mut rng).unwrap();
                let view = cfg.magnetization();
                let (mean_res, cov_res) = pair::identity_residuals(&view).unwrap();
                worst_mean = worst_mean.max(mean_res);
                worst_cov = worst_cov.max(cov_res);
            }
        }
    }
    assert!(worst_mean <= 1e-10, "mean identity residual {worst_mean:.3e}");
    assert!(worst_cov <= 1e-10, "cov identity residual {worst_cov:.3e}");

    // 4 a_N = N^2/(N+2), exact in integer arithmetic.
    for n in 2..=50u32 {
        assert_eq!(pair::gradient_consistency(n), 0.0);
        let ni = u128::from(n);
        assert_eq!(4 * ni * ni * (ni + 2), ni * ni * (4 * ni + 8));
    }
    pass(
        4,
        "pair-identities",
        t0,
        format!("mean {worst_mean:.2e}, cov {worst_cov:.2e}, gradient exact N=2..50"),
    );
}

#[test]
fn c05_remainder_rates() {
    let t0 = Instant::now();
    let cfg = pair::PairSweepConfig {
        n_dim: 2,
        n_grid: vec![16, 32, 64, 128, 256, 512, 1024],
        replicas: 8,
        samples_per_replica: 1250,
        burn_in: 1000,
        thin: 10,
        seed: 0xc5,
    };
    let report = pair::remainder_rate_sweep(&cfg).unwrap();

    let assert_window = |name: &str, slope: Option<f64>, ci: Option<(f64, f64)>| {
        let s = slope.unwrap();
        assert!(
            s >= REMAINDER_SLOPE_WINDOW.0 && s <= REMAINDER_SLOPE_WINDOW.1,
            "{name} slope {s} outside {REMAINDER_SLOPE_WINDOW:?}"
        );
        let (lo, hi) = ci.unwrap();
        assert!(hi - lo <= 0.30, "{name} slope CI half-width {} > 0.15", (hi - lo) / 2.0);
        s
    };
    let s1 = assert_window("E|R1|", report.e_r1.fitted_slope, report.e_r1.slope_ci);
    let s2 = assert_window("E||R2||", report.e_r2.fitted_slope, report.e_r2.slope_ci);
    let s3 = assert_window(
        "third-moment",
        report.third_moment.fitted_slope,
        report.third_moment.slope_ci,
    );
    for (k, a) in report.a_norms.iter().enumerate() {
        let s = a.fitted_slope.unwrap();
        assert!(s <= -0.3, "E||A{}|| slope {s} > -0.3", k + 1);
    }
    assert!(report.third_moment_within_bound, "third moment exceeded 32N/sqrt(n) + 4SE");
    assert!(report.max_delta_ratio <= 1.0 + 1e-12, "|delta| exceeded 2 n^{{-3/4}}");
    assert!(report.max_r2_asymmetry <= 1e-12);
    pass(
        5,
        "remainder-rates",
        t0,
        format!("slopes R1 {s1:.3}, R2 {s2:.3}, third {s3:.3}"),
    );
}

fn rate_config(n_dim: u32, beta: f64, seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default_critical(n_dim, seed);
    cfg.beta = beta;
    cfg.n_grid = vec![16, 32, 64, 128, 256, 512, 1024];
    cfg.replicas = 8;
    cfg.samples_per_n = 100_000;
    cfg.exact_matching_samples = 256;
    cfg
}

#[test]
fn c06_critical_rate() {
    let t0 = Instant::now();
    let mut detail = String::new();
    for n_dim in [2u32, 3] {
        let cfg = rate_config(n_dim, f64::from(n_dim), 0xc6 + u64::from(n_dim));
        let result = rate_sweep(&cfg).unwrap();
        let slope = result.fitted_slope.unwrap();
        assert!(
            result.slope_in_window,
            "N={n_dim}: slope {slope} outside {RATE_SLOPE_WINDOW:?}"
        );
        assert!(result.monotone_within_2se, "N={n_dim}: metric not monotone within 2 SE");
        detail.push_str(&format!("N={n_dim}: slope {slope:.3} "));
    }
    pass(6, "critical-rate", t0, detail);
}

#[test]
fn c07_subcritical_rate() {
    let t0 = Instant::now();
    let cfg = rate_config(2, 1.0, 0xc7);
    let result = rate_sweep(&cfg).unwrap();
    let slope = result.fitted_slope.unwrap();
    assert!(
        result.slope_in_window,
        "slope {slope} outside {RATE_SLOPE_WINDOW:?}"
    );
    pass(
        7,
        "subcritical-rate",
        t0,
        format!("(N, beta) = (2, 1): slope {slope:.3}"),
    );
}

#[test]
fn c08_transport_oracle() {
    let t0 = Instant::now();
    let mut rng = stream(0xc8, "acceptance", 0);
    use rand::Rng;

    let random_cloud = |m: usize, rng: &mut critical_on::rng::ChaCha8Rng| {
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..2).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        EmpiricalCloud::from_rows(&rows).unwrap()
    };

    // Exhaustive minimum over all permutations for m <= 6.
    fn brute(a: &EmpiricalCloud, b: &EmpiricalCloud) -> f64 {
        fn rec(
            a: &EmpiricalCloud,
            b: &EmpiricalCloud,
            used: &mut Vec<bool>,
            i: usize,
            acc: f64,
            best: &mut f64,
        ) {
            if i == a.len() {
                *best = best.min(acc);
                return;
            }
            for j in 0..b.len() {
                if !used[j] {
                    used[j] = true;
                    rec(a, b, used, i + 1, acc + dist(a.point(i), b.point(j)), best);
                    used[j] = false;
                }
            }
        }
        let mut best = f64::INFINITY;
        rec(a, b, &mut vec![false; b.len()], 0, 0.0, &mut best);
        best / a.len() as f64
    }

    for trial in 0..200 {
        let m = 2 + trial % 5;
        let a = random_cloud(m, &mut rng);
        let b = random_cloud(m, &mut rng);
        let exact = w1_exact(&a, &b).unwrap();
        let reference = brute(&a, &b);
        assert!(
            (exact.cost - reference).abs() <= 1e-12 * reference.max(1.0),
            "trial {trial}: {} vs {reference}",
            exact.cost
        );
        assert!(exact.certificate_residual.unwrap() <= 1e-9 * (exact.cost * m as f64).max(1e-6));
    }

    // Metric axioms at m = 24.
    for _ in 0..40 {
        let a = random_cloud(24, &mut rng);
        let b = random_cloud(24, &mut rng);
        let c = random_cloud(24, &mut rng);
        let ab = w1_exact(&a, &b).unwrap().cost;
        let ba = w1_exact(&b, &a).unwrap().cost;
        let bc = w1_exact(&b, &c).unwrap().cost;
        let ac = w1_exact(&a, &c).unwrap().cost;
        assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        assert!(ac <= ab + bc + 1e-9);
        assert_eq!(w1_exact(&a, &a).unwrap().cost, 0.0);
    }
    pass(8, "transport-oracle", t0, "200 brute-force instances, axioms at m=24".into());
}

#[test]
fn c09_langevin_variation_suite() {
    let t0 = Instant::now();
    let spec = quartic_potential(2, 1.0).unwrap();
    let constants = ergodic_constants(&spec).unwrap();
    let dirs = Directions {
        u: vec![1.0, 0.0],
        v: vec![0.0, 1.0],
        w: vec![std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2],
    };
    let dt = 1e-3;

    // Pathwise and mean-square envelopes on 1e3 paths (the check errors out
    // on any violation).
    let report = variation_moment_check(
        &spec,
        &constants,
        &[0.0, 0.0],
        &dirs,
        &[0.25, 0.5, 1.0, 2.0],
        dt,
        1000,
        0xc9,
    )
    .unwrap();
    assert!(report.max_u1_ratio <= 1.0 + report.eps_disc);
    assert!(report.max_u3_ratio <= 1.0 + report.eps_disc);
    assert!(report.empirical_u1_rate >= report.two_theta);

    // decay_E <= C2^2 e^{-2 theta (t-s)} + 4 SE across the (s, t) grid and
    // both starting points.
    for (xi, x0) in [vec![0.0, 0.0], vec![2.0, 0.0]].iter().enumerate() {
        decay_check(
            &spec,
            &constants,
            x0,
            &[(0.0, 0.5), (0.25, 1.0), (0.5, 2.0), (1.0, 4.0)],
            dt,
            300,
            0xc90 + xi as u64,
        )
        .unwrap();
    }

    // Elworthy-Li order 1 against central finite differences (CRN).
    let lp = LangevinParams::default();
    let bel = bel_stage(&spec, &constants, &lp, 0xc91).unwrap();
    assert!(
        bel.order1_matches_fd,
        "order-1 {} vs fd {} (joint se {})",
        bel.order1.value, bel.fd_value, bel.joint_se
    );

    // Ornstein-Uhlenbeck closed forms at the stated integrator error.
    let ou = quadratic_potential(2);
    let path = simulate(&ou, &[1.0, 0.0], dt, 1.0, &Directions::single(vec![1.0, 0.0]), 1)
        .unwrap();
    let u1_end = norm(path.u1_u_at(path.steps));
    assert!(
        (u1_end - (-1.0f64).exp()).abs() <= 5.0 * dt,
        "OU U1(1) = {u1_end}"
    );
    let h = TestFunction::linear(vec![1.0, 0.0]);
    let (pt, pt_se) = estimate_pt(&ou, &h, &[1.5, 0.0], 0.5, dt, 4000, 2).unwrap();
    let expect = 1.5 * (-0.5f64).exp();
    assert!(
        (pt - expect).abs() <= 4.0 * pt_se + 5.0 * dt,
        "OU P_t: {pt} vs {expect}"
    );
    pass(
        9,
        "langevin-variation",
        t0,
        format!(
            "eps_disc {:.3e}, U1 rate {:.2} vs 2theta {:.2e}, bel {:.4} vs fd {:.4}",
            report.eps_disc, report.empirical_u1_rate, report.two_theta, bel.order1.value,
            bel.fd_value
        ),
    );
}

#[test]
fn c10_stein_solution_residual() {
    let t0 = Instant::now();
    let spec = quartic_potential(2, 1.0).unwrap();
    let lp = LangevinParams::default();
    let (ou, quartic) = stein_stage(2, &spec, &lp, 0xc10).unwrap();
    assert!(
        ou.within_three_budgets,
        "OU residual {} vs budget {}",
        ou.residual, ou.budget
    );
    assert!(
        quartic.within_three_budgets,
        "quartic residual {} vs budget {}",
        quartic.residual, quartic.budget
    );
    pass(
        10,
        "stein-residual",
        t0,
        format!(
            "ou {:.2e} <= 3x{:.2e}; quartic {:.2e} <= 3x{:.2e}",
            ou.residual, ou.budget, quartic.residual, quartic.budget
        ),
    );
}

#[test]
fn c11_geometric_ergodicity() {
    let t0 = Instant::now();
    let spec = quartic_potential(2, 1.0).unwrap();
    let law = QuarticLaw::new(2).unwrap();
    // Cloud size 1024 keeps every exact assignment solve within the
    // single-workstation budget while the bias floor stays far below the
    // envelope at every grid time.
    let report = geom_erg_check(
        &spec,
        &law,
        &[0.0, 0.0],
        &[0.5, 1.0, 2.0, 4.0],
        1e-3,
        1024,
        0xc11,
    )
    .unwrap();
    assert!(
        report.all_within,
        "W1 {:?} exceeded bounds {:?}",
        report.w1, report.bounds
    );
    pass(
        11,
        "geometric-ergodicity",
        t0,
        format!("W1 {:?}, bias floor {:.4}", report.w1, report.bias_floor),
    );
}
