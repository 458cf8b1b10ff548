//! Numerical verification of the variation-moment envelopes, the Stein
//! solution construction, and geometric ergodicity.

use serde::Serialize;

use super::{advance_flow, Directions, FlowState, TestFunction, VariationDepth};
use crate::constants::{eta, ErgodicityConstants, PotentialSpec};
use crate::error::{Error, Result};
use crate::limit_laws::QuarticLaw;
use crate::linalg::norm;
use crate::parallel::par_map;
use crate::rng::{derive_seed, stream};
use crate::stats::{mean_se, ols_slope};
use crate::transport::{w1_exact, EmpiricalCloud};

/// Per-time moment estimates against their explicit envelopes.
#[derive(Debug, Clone, Serialize)]
pub struct VariationReport {
    pub t_grid: Vec<f64>,
    pub e_u1_sq: Vec<f64>,
    pub e_u1_sq_se: Vec<f64>,
    /// C1^2 e^{-2 theta t} |u|^2 per grid time.
    pub u1_envelope: Vec<f64>,
    pub e_u2_sq: Vec<f64>,
    pub e_u2_sq_se: Vec<f64>,
    /// C2^2 |u|^2 |v|^2.
    pub u2_envelope: f64,
    /// max over paths and grid times of |U3(t)| / (|u||v||w| P(t)).
    pub max_u3_ratio: f64,
    /// max over paths and steps of |U1(t)| / |u|.
    pub max_u1_ratio: f64,
    pub eps_disc: f64,
    /// Fitted decay rate of E|U1(t)|^2 (positive means decay), with 2 theta
    /// beside it; the explicit theta is a certified lower bound on decay.
    pub empirical_u1_rate: f64,
    pub two_theta: f64,
    pub replicas: usize,
}

/// Estimate E|U1|^2, E|U2|^2 and the pathwise |U1|, |U3| extremes on a time
/// grid and assert the explicit envelopes (4-SE slack on the stochastic
/// bounds, eps_disc slack on the deterministic ones).
#[allow(clippy::too_many_arguments)]
pub fn variation_moment_check(
    spec: &PotentialSpec,
    constants: &ErgodicityConstants,
    x0: &[f64],
    dirs: &Directions,
    t_grid: &[f64],
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<VariationReport> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("t_grid must be increasing and non-empty".into()));
    }
    let norm_u = norm(&dirs.u);
    let norm_v = norm(&dirs.v);
    let norm_w = norm(&dirs.w);

    struct PathStats {
        u1_sq: Vec<f64>,
        u2_sq: Vec<f64>,
        u3_ratio: f64,
        u1_ratio: f64,
        eps_disc: f64,
    }

    let grid_steps: Vec<usize> = t_grid.iter().map(|t| (t / dt).round() as usize).collect();
    let total_steps = *grid_steps.last().unwrap();

    let per_path: Vec<Result<PathStats>> = par_map((0..replicas).collect(), |r| {
        let mut rng = stream(seed, "variation", r as u64);
        let mut state = FlowState::new(spec, x0, dirs);
        let mut stats = PathStats {
            u1_sq: Vec::with_capacity(t_grid.len()),
            u2_sq: Vec::with_capacity(t_grid.len()),
            u3_ratio: 0.0,
            u1_ratio: norm(&state.u1[0]) / norm_u,
            eps_disc: 0.0,
        };
        let mut next_grid = 0usize;
        for k in 1..=total_steps {
            advance_flow(spec, &mut state, dt, VariationDepth::Third, &mut rng)?;
            stats.u1_ratio = stats.u1_ratio.max(norm(&state.u1[0]) / norm_u);
            let p_t = constants.p_env(state.t);
            stats.u3_ratio = stats
                .u3_ratio
                .max(norm(&state.u3) / (norm_u * norm_v * norm_w * p_t));
            if next_grid < grid_steps.len() && k == grid_steps[next_grid] {
                stats.u1_sq.push(norm(&state.u1[0]).powi(2));
                stats.u2_sq.push(norm(&state.u2[0]).powi(2));
                next_grid += 1;
            }
        }
        stats.eps_disc = 10.0 * dt * state.hess_scale_max;
        Ok(stats)
    });
    let per_path: Vec<PathStats> = per_path.into_iter().collect::<Result<_>>()?;

    let eps_disc = per_path.iter().map(|p| p.eps_disc).fold(0.0, f64::max);
    let max_u1_ratio = per_path.iter().map(|p| p.u1_ratio).fold(0.0, f64::max);
    let max_u3_ratio = per_path.iter().map(|p| p.u3_ratio).fold(0.0, f64::max);

    if max_u1_ratio > 1.0 + eps_disc {
        return Err(Error::BoundViolated {
            check: "pathwise |U1| <= |u| (1 + eps_disc)".into(),
            t: 0.0,
            seed,
            detail: format!("ratio {max_u1_ratio} > 1 + {eps_disc}"),
        });
    }
    if max_u3_ratio > 1.0 + eps_disc {
        return Err(Error::BoundViolated {
            check: "pathwise |U3| <= |u||v||w| P(t) (1 + eps_disc)".into(),
            t: 0.0,
            seed,
            detail: format!("ratio {max_u3_ratio} > 1 + {eps_disc}"),
        });
    }

    let mut e_u1_sq = Vec::new();
    let mut e_u1_sq_se = Vec::new();
    let mut e_u2_sq = Vec::new();
    let mut e_u2_sq_se = Vec::new();
    let mut u1_envelope = Vec::new();
    let u2_envelope = constants.c2_const.powi(2) * norm_u.powi(2) * norm_v.powi(2);
    for (gi, &t) in t_grid.iter().enumerate() {
        let u1_vals: Vec<f64> = per_path.iter().map(|p| p.u1_sq[gi]).collect();
        let u2_vals: Vec<f64> = per_path.iter().map(|p| p.u2_sq[gi]).collect();
        let (m1, s1) = mean_se(&u1_vals);
        let (m2, s2) = mean_se(&u2_vals);
        let env1 =
            constants.c1_const.powi(2) * (-2.0 * constants.theta * t).exp() * norm_u.powi(2);
        if m1 > env1 + 4.0 * s1 {
            return Err(Error::BoundViolated {
                check: "E|U1(t)|^2 <= C1^2 e^{-2 theta t} |u|^2".into(),
                t,
                seed,
                detail: format!("{m1} > {env1} + 4*{s1}"),
            });
        }
        if m2 > u2_envelope + 4.0 * s2 {
            return Err(Error::BoundViolated {
                check: "E|U2(t)|^2 <= C2^2 |u|^2 |v|^2".into(),
                t,
                seed,
                detail: format!("{m2} > {u2_envelope} + 4*{s2}"),
            });
        }
        e_u1_sq.push(m1);
        e_u1_sq_se.push(s1);
        e_u2_sq.push(m2);
        e_u2_sq_se.push(s2);
        u1_envelope.push(env1);
    }

    // Empirical decay rate of E|U1|^2: -slope of log E|U1(t)|^2 against t.
    let logs: Vec<f64> = e_u1_sq.iter().map(|v| v.max(1e-300).ln()).collect();
    let empirical_u1_rate = -ols_slope(t_grid, &logs);
    let two_theta = 2.0 * constants.theta;
    if empirical_u1_rate < two_theta - 1e-6 {
        return Err(Error::BoundViolated {
            check: "empirical decay rate of E|U1|^2 >= 2 theta".into(),
            t: *t_grid.last().unwrap(),
            seed,
            detail: format!("rate {empirical_u1_rate} < 2 theta {two_theta}"),
        });
    }

    Ok(VariationReport {
        t_grid: t_grid.to_vec(),
        e_u1_sq,
        e_u1_sq_se,
        u1_envelope,
        e_u2_sq,
        e_u2_sq_se,
        u2_envelope,
        max_u3_ratio,
        max_u1_ratio,
        eps_disc,
        empirical_u1_rate,
        two_theta,
        replicas,
    })
}

/// Decay of E exp(-2 int_s^t rho) against the explicit C2^2 e^{-2 theta (t-s)}
/// envelope over an (s, t) grid.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub pairs: Vec<(f64, f64)>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub envelopes: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
pub fn decay_check(
    spec: &PotentialSpec,
    constants: &ErgodicityConstants,
    x0: &[f64],
    pairs: &[(f64, f64)],
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<DecayReport> {
    let mut estimates = Vec::new();
    let mut std_errors = Vec::new();
    let mut envelopes = Vec::new();
    for (i, &(s, t)) in pairs.iter().enumerate() {
        let (m, se) = super::decay_e(spec, x0, s, t, dt, replicas, derive_seed(seed, "decay", i as u64))?;
        let env = constants.c2_const.powi(2) * (-2.0 * constants.theta * (t - s)).exp();
        if m > env + 4.0 * se {
            return Err(Error::BoundViolated {
                check: "E exp(-2 int rho) <= C2^2 e^{-2 theta (t-s)}".into(),
                t,
                seed,
                detail: format!("{m} > {env} + 4*{se}"),
            });
        }
        estimates.push(m);
        std_errors.push(se);
        envelopes.push(env);
    }
    Ok(DecayReport {
        pairs: pairs.to_vec(),
        estimates,
        std_errors,
        envelopes,
    })
}

/// What the Stein residual check needs to know about the stationary law.
#[derive(Debug, Clone, Copy)]
pub struct SteinTarget {
    /// mu(h) and the error carried by its computation.
    pub mu_h: f64,
    pub mu_h_err: f64,
    /// First absolute moment of mu.
    pub m1: f64,
    /// Geometric ergodicity rate eta for the tail budget.
    pub eta: f64,
}

impl SteinTarget {
    /// Target for the quartic law, with mu(h) by shell quadrature (radial)
    /// or transported QMC (general).
    pub fn from_quartic(law: &QuarticLaw, spec: &PotentialSpec, h: &TestFunction) -> Result<Self> {
        let e = law.expectation(crate::limit_laws::Integrand::General(&|x: &[f64]| {
            h.eval(x)
        }))?;
        Ok(SteinTarget {
            mu_h: e.value,
            mu_h_err: e.error,
            m1: law.radial_moment(1),
            eta: eta(spec),
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SteinReport {
    pub residual: f64,
    /// 4 SE + FD gap + dt gap + tail allowance + mu(h) error.
    pub budget: f64,
    pub mc_se: f64,
    pub fd_gap: f64,
    pub dt_gap: f64,
    pub tail_bound: f64,
    pub f_center: f64,
    pub generator_value: f64,
    pub rhs: f64,
    pub within_three_budgets: bool,
}

/// Verify L f = h - mu(h) at `x` for f(x) = -int_0^T [P_t h(x) - mu(h)] dt:
/// f is evaluated on a 4 dim + 1 stencil by time quadrature of the
/// semigroup with common random numbers; L = Laplacian - <grad V, grad> is
/// applied by central differences at widths eps and 2 eps, with a dt/2
/// Richardson audit. The error budget combines the jackknife MC error, both
/// Richardson gaps, the semigroup tail bound, and the mu(h) error.
#[allow(clippy::too_many_arguments)]
pub fn stein_solution_check(
    spec: &PotentialSpec,
    target: &SteinTarget,
    h: &TestFunction,
    x: &[f64],
    t_max: f64,
    dt: f64,
    fd_eps: f64,
    replicas: usize,
    tail_tol: f64,
    seed: u64,
) -> Result<SteinReport> {
    let dim = spec.dim;
    // Stencil: center, then +/- eps and +/- 2 eps along each axis.
    let mut stencil: Vec<Vec<f64>> = vec![x.to_vec()];
    for d in 0..dim {
        for mult in [1.0f64, -1.0, 2.0, -2.0] {
            let mut p = x.to_vec();
            p[d] += mult * fd_eps;
            stencil.push(p);
        }
    }
    let max_radius = stencil.iter().map(|p| norm(p)).fold(0.0, f64::max);
    let tail_bound =
        2.0 * h.lipschitz_bound * (max_radius + target.m1) * (-target.eta * t_max).exp()
            / target.eta;
    if tail_bound > tail_tol {
        return Err(Error::TailBudget {
            t_max,
            tail: tail_bound,
            tolerance: tail_tol,
        });
    }

    // f estimates per replica per stencil point at both dt and dt/2, with
    // the same Brownian path (CRN) across the stencil.
    let run = |step: f64| -> Result<Vec<Vec<f64>>> {
        let steps = (t_max / step).round() as usize;
        let cells: Vec<usize> = (0..replicas).collect();
        let stencil_ref = &stencil;
        let rows: Vec<Result<Vec<f64>>> = par_map(cells, |r| {
            let mut noise = Vec::with_capacity(steps * dim);
            {
                use rand::Rng;
                use rand_distr::StandardNormal;
                let mut rng = stream(seed, "stein-noise", r as u64);
                for _ in 0..steps * dim {
                    noise.push(rng.sample::<f64, _>(StandardNormal));
                }
            }
            let mut row = Vec::with_capacity(stencil_ref.len());
            for p in stencil_ref {
                let mut xv = p.clone();
                let sqrt_step = step.sqrt();
                // Trapezoid of (h(X_t) - mu_h) dt along the path.
                let mut acc = 0.0;
                let mut prev = h.eval(&xv) - target.mu_h;
                for k in 0..steps {
                    let g = (spec.grad)(&xv);
                    for d in 0..dim {
                        xv[d] += -g[d] * step
                            + std::f64::consts::SQRT_2 * sqrt_step * noise[k * dim + d];
                    }
                    let cur = h.eval(&xv) - target.mu_h;
                    acc += 0.5 * step * (prev + cur);
                    prev = cur;
                }
                row.push(-acc);
            }
            Ok(row)
        });
        rows.into_iter().collect()
    };

    let rows_full = run(dt)?;
    let rows_half = run(dt / 2.0)?;

    let n_pts = stencil.len();
    let f_mean = |rows: &[Vec<f64>], skip: Option<usize>| -> Vec<f64> {
        let mut acc = vec![0.0; n_pts];
        let mut cnt = 0.0;
        for (r, row) in rows.iter().enumerate() {
            if Some(r) == skip {
                continue;
            }
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
            cnt += 1.0;
        }
        acc.iter().map(|a| a / cnt).collect()
    };

    let grad_v = (spec.grad)(x);
    let apply_l = |f: &[f64], width_mult: f64| -> f64 {
        let e = width_mult * fd_eps;
        let mut lap = 0.0;
        let mut drift = 0.0;
        for d in 0..dim {
            // indices: 1 + 4d (+e), 2 + 4d (-e), 3 + 4d (+2e), 4 + 4d (-2e)
            let (ip, im) = if width_mult == 1.0 {
                (1 + 4 * d, 2 + 4 * d)
            } else {
                (3 + 4 * d, 4 + 4 * d)
            };
            lap += (f[ip] + f[im] - 2.0 * f[0]) / (e * e);
            drift += grad_v[d] * (f[ip] - f[im]) / (2.0 * e);
        }
        lap - drift
    };

    let f_full = f_mean(&rows_full, None);
    let f_half = f_mean(&rows_half, None);
    let l_full = apply_l(&f_full, 1.0);
    let l_wide = apply_l(&f_full, 2.0);
    let l_halfdt = apply_l(&f_half, 1.0);

    let rhs = h.eval(x) - target.mu_h;
    let residual = (l_full - rhs).abs();

    // Jackknife SE of the signed generator error over replicas.
    let mut jack = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let f_r = f_mean(&rows_full, Some(r));
        jack.push(apply_l(&f_r, 1.0) - rhs);
    }
    let jbar = crate::stats::mean(&jack);
    let jvar = jack.iter().map(|v| (v - jbar) * (v - jbar)).sum::<f64>()
        * (replicas as f64 - 1.0)
        / replicas as f64;
    let mc_se = jvar.sqrt();

    let fd_gap = (l_full - l_wide).abs() / 3.0;
    let dt_gap = 2.0 * (l_full - l_halfdt).abs();
    let budget = 4.0 * mc_se
        + fd_gap
        + dt_gap
        + 3.0 * tail_bound * (1.0 + norm(&grad_v))
        + target.mu_h_err;

    Ok(SteinReport {
        residual,
        budget,
        mc_se,
        fd_gap,
        dt_gap,
        tail_bound,
        f_center: f_full[0],
        generator_value: l_full,
        rhs,
        within_three_budgets: residual <= 3.0 * budget,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GeomErgReport {
    pub t_grid: Vec<f64>,
    pub w1: Vec<f64>,
    /// 2 (|x| + m1) e^{-eta t} + bias floor.
    pub bounds: Vec<f64>,
    /// Two-sample W1 between independent mu clouds of the same size.
    pub bias_floor: f64,
    pub samples: usize,
    pub all_within: bool,
}

/// W1 between the time-t law of the diffusion started at x and mu, against
/// the explicit geometric-ergodicity envelope. The positive bias of the
/// two-sample estimator is measured at t = infinity (two independent mu
/// clouds) and added to the budget.
#[allow(clippy::too_many_arguments)]
pub fn geom_erg_check(
    spec: &PotentialSpec,
    law: &QuarticLaw,
    x0: &[f64],
    t_grid: &[f64],
    dt: f64,
    samples: usize,
    seed: u64,
) -> Result<GeomErgReport> {
    let eta_v = eta(spec);
    let m1 = law.radial_moment(1);
    let grid_steps: Vec<usize> = t_grid.iter().map(|t| (t / dt).round() as usize).collect();
    let total = *grid_steps.last().unwrap();

    // One path per sample, recorded at every grid time.
    let states: Vec<Result<Vec<Vec<f64>>>> = par_map((0..samples).collect(), |r| {
        let mut rng = stream(seed, "geom-erg", r as u64);
        let dirs = Directions::single(crate::linalg::basis(spec.dim, 0));
        let mut state = FlowState::new(spec, x0, &dirs);
        let mut rec = Vec::with_capacity(t_grid.len());
        let mut next = 0usize;
        for k in 1..=total {
            advance_flow(spec, &mut state, dt, VariationDepth::XOnly, &mut rng)?;
            if next < grid_steps.len() && k == grid_steps[next] {
                rec.push(state.x.clone());
                next += 1;
            }
        }
        Ok(rec)
    });
    let states: Vec<Vec<Vec<f64>>> = states.into_iter().collect::<Result<_>>()?;

    let bias_a = law.sample(samples, derive_seed(seed, "mu-bias", 0));
    let bias_b = law.sample(samples, derive_seed(seed, "mu-bias", 1));
    let bias_floor = w1_exact(
        &EmpiricalCloud::from_rows(&bias_a)?,
        &EmpiricalCloud::from_rows(&bias_b)?,
    )?
    .cost;

    let mut w1 = Vec::new();
    let mut bounds = Vec::new();
    let mut all_within = true;
    for (gi, &t) in t_grid.iter().enumerate() {
        let cloud: Vec<Vec<f64>> = states.iter().map(|path| path[gi].clone()).collect();
        let mu_cloud = law.sample(samples, derive_seed(seed, "mu-cloud", gi as u64));
        let d = w1_exact(
            &EmpiricalCloud::from_rows(&cloud)?,
            &EmpiricalCloud::from_rows(&mu_cloud)?,
        )?
        .cost;
        let bound = 2.0 * (norm(x0) + m1) * (-eta_v * t).exp() + bias_floor;
        all_within &= d <= bound;
        w1.push(d);
        bounds.push(bound);
    }

    Ok(GeomErgReport {
        t_grid: t_grid.to_vec(),
        w1,
        bounds,
        bias_floor,
        samples,
        all_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{ergodic_constants, quadratic_potential, quartic_potential};

    #[test]
    fn variation_envelopes_hold_for_quartic() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let constants = ergodic_constants(&spec).unwrap();
        let dirs = Directions {
            u: vec![1.0, 0.0],
            v: vec![0.0, 1.0],
            w: vec![0.6, 0.8],
        };
        let report = variation_moment_check(
            &spec,
            &constants,
            &[0.3, -0.4],
            &dirs,
            &[0.25, 0.5, 1.0, 2.0],
            1e-3,
            200,
            3,
        )
        .unwrap();
        assert!(report.max_u1_ratio <= 1.0 + report.eps_disc);
        assert!(report.max_u3_ratio <= 1.0 + report.eps_disc);
        assert!(report.empirical_u1_rate >= report.two_theta);
        // The explicit envelopes are loose by construction; the observed
        // moments sit far inside them.
        for (m, env) in report.e_u1_sq.iter().zip(&report.u1_envelope) {
            assert!(m <= env);
        }
    }

    #[test]
    fn quadratic_variation_is_exact_exponential() {
        // E|U1(t)|^2 = e^{-2t} |u|^2 exactly (deterministic for OU).
        let spec = quadratic_potential(2);
        let dirs = Directions::single(vec![1.0, 0.0]);
        let mut rng = stream(1, "q", 0);
        let mut state = FlowState::new(&spec, &[0.5, 0.5], &dirs);
        for _ in 0..1000 {
            advance_flow(&spec, &mut state, 1e-3, VariationDepth::First, &mut rng).unwrap();
        }
        let expect = (-1.0f64).exp();
        assert!((norm(&state.u1[0]) - expect).abs() <= 5e-3);
    }

    #[test]
    fn decay_check_quartic() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let constants = ergodic_constants(&spec).unwrap();
        let report = decay_check(
            &spec,
            &constants,
            &[0.0, 0.0],
            &[(0.0, 0.5), (0.25, 1.0), (0.5, 2.0)],
            1e-3,
            200,
            5,
        )
        .unwrap();
        for (e, env) in report.estimates.iter().zip(&report.envelopes) {
            assert!(e <= env);
            assert!(*e <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn stein_residual_ou_closed_form() {
        // V = x^2/2 in 1D, h(x) = x: f = -x, L f = x = h - mu(h).
        let spec = quadratic_potential(1);
        let h = TestFunction::linear(vec![1.0]);
        let target = SteinTarget {
            mu_h: 0.0,
            mu_h_err: 0.0,
            m1: (2.0 / std::f64::consts::PI).sqrt(),
            eta: 0.25,
        };
        let report = stein_solution_check(
            &spec,
            &target,
            &h,
            &[0.7],
            40.0,
            2e-3,
            0.05,
            160,
            1e-3,
            9,
        )
        .unwrap();
        assert!(
            report.within_three_budgets,
            "residual {} vs budget {}",
            report.residual, report.budget
        );
        // f(x) = -x at the center.
        assert!(
            (report.f_center + 0.7).abs() <= 0.05,
            "f_center {}",
            report.f_center
        );
        // Constant h: f identically 0, residual 0 up to rounding.
        let hc = TestFunction {
            h: Box::new(|_| 2.5),
            grad_h: Some(Box::new(|_| vec![0.0])),
            lipschitz_bound: 1e-12,
            smooth: true,
        };
        let tc = SteinTarget {
            mu_h: 2.5,
            mu_h_err: 0.0,
            m1: 1.0,
            eta: 0.25,
        };
        let rc = stein_solution_check(
            &spec, &tc, &hc, &[0.3], 10.0, 2e-3, 0.05, 20, 1e-3, 10,
        )
        .unwrap();
        assert!(rc.residual < 1e-10);
    }

    #[test]
    fn stein_tail_budget_enforced() {
        let spec = quadratic_potential(1);
        let h = TestFunction::linear(vec![1.0]);
        let target = SteinTarget {
            mu_h: 0.0,
            mu_h_err: 0.0,
            m1: 0.8,
            eta: 0.25,
        };
        let res = stein_solution_check(
            &spec, &target, &h, &[0.5], 2.0, 1e-3, 0.05, 10, 1e-6, 1,
        );
        assert!(matches!(res, Err(Error::TailBudget { .. })));
    }

    #[test]
    fn geom_erg_small() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let law = QuarticLaw::new(2).unwrap();
        let report = geom_erg_check(
            &spec,
            &law,
            &[0.0, 0.0],
            &[0.5, 1.0, 2.0, 4.0],
            1e-3,
            256,
            11,
        )
        .unwrap();
        assert!(report.all_within, "w1 {:?} bounds {:?}", report.w1, report.bounds);
        // Large t: the distance approaches the two-sample bias floor.
        let last = *report.w1.last().unwrap();
        assert!(last <= 3.0 * report.bias_floor, "{last} vs floor {}", report.bias_floor);
    }

    #[test]
    fn w1_to_point_mass_is_mean_radius() {
        // At t = 0 from x = 0, the cloud is a point mass: W1 = E|Y| = m1.
        let law = QuarticLaw::new(2).unwrap();
        let m1 = law.radial_moment(1);
        let mu_cloud = law.sample(512, 3);
        let zero_cloud = vec![vec![0.0, 0.0]; 512];
        let d = w1_exact(
            &EmpiricalCloud::from_rows(&zero_cloud).unwrap(),
            &EmpiricalCloud::from_rows(&mu_cloud).unwrap(),
        )
        .unwrap()
        .cost;
        assert!((d - m1).abs() <= 0.06, "{d} vs {m1}");
    }
}
