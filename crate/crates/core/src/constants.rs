//! Potential specifications, pointwise curvature-assumption checks, and the
//! explicit ergodicity constant chain.
//!
//! A confining potential enters through its derivative actions together with
//! curvature metadata (rho, c1, c2, k, B, M0, M1, M2) satisfying
//!
//!   <u, Hess V(x) u>      >= rho(x) |u|^2
//!   |D_v D_u grad V(x)|   <= M1 (1 + rho(x))/(1 + |x|)   |u||v|
//!   |D_w D_v D_u grad V|  <= M2 (1 + rho(x))/(1 + |x|)^2 |u||v||w|
//!   c1 |x|^k 1(|x| >= B)  <= rho(x) <= c2 |x|^k
//!
//! (plus |D_u grad V| <= M0 |u| when k = 0). From these the whole chain
//! eta, chi, J, t0, t1, C1, theta, C2 and the S/Q/P envelope coefficients
//! is deterministic arithmetic once m1(mu) and the tail mass are known;
//! both are computed by radial quadrature here.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::limit_laws::uniform_direction;
use crate::linalg::{dot, norm};
use crate::quad;
use crate::rng::stream;

type VecFn = Box<dyn Fn(&[f64]) -> f64 + Sync + Send>;
type GradFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + Send>;
type Action2 = Box<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Sync + Send>;
type Action3 = Box<dyn Fn(&[f64], &[f64], &[f64]) -> Vec<f64> + Sync + Send>;
type Action4 = Box<dyn Fn(&[f64], &[f64], &[f64], &[f64]) -> Vec<f64> + Sync + Send>;

/// A confining potential with derivative actions and curvature metadata.
pub struct PotentialSpec {
    pub dim: usize,
    pub v: VecFn,
    pub grad: GradFn,
    /// (x, u) -> Hess V(x) u
    pub hess_action: Action2,
    /// (x, u, v) -> D_v D_u grad V(x)
    pub d3_action: Action3,
    /// (x, u, v, w) -> D_w D_v D_u grad V(x)
    pub d4_action: Action4,
    pub rho: VecFn,
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
    pub b: f64,
    /// Required iff k = 0.
    pub m0: Option<f64>,
    pub m1: f64,
    pub m2: f64,
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("dim", &self.dim)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("k", &self.k)
            .field("b", &self.b)
            .field("m0", &self.m0)
            .field("m1", &self.m1)
            .field("m2", &self.m2)
            .finish()
    }
}

/// V(x) = a_N |x|^4 on R^N with rho(x) = 4 a_N |x|^2, k = 2,
/// c1 = c2 = 4 a_N, M1 = M2 = 48 a_N, and configurable B (the lower rho
/// bound holds for every B >= 0 with the same c1; the ergodic chain needs
/// B > 0, default 1).
pub fn quartic_potential(n_dim: u32, b: f64) -> Result<PotentialSpec> {
    if n_dim < 2 {
        return Err(Error::Domain(format!("N must be >= 2, got {n_dim}")));
    }
    if !(b >= 0.0) {
        return Err(Error::Domain(format!("B must be >= 0, got {b}")));
    }
    let a = crate::specfun::ModelFunctions::new(n_dim)?.a_n;
    Ok(PotentialSpec {
        dim: n_dim as usize,
        v: Box::new(move |x| a * dot(x, x).powi(2)),
        grad: Box::new(move |x| {
            let r2 = dot(x, x);
            x.iter().map(|xi| 4.0 * a * r2 * xi).collect()
        }),
        hess_action: Box::new(move |x, u| {
            let r2 = dot(x, x);
            let xu = dot(x, u);
            x.iter()
                .zip(u)
                .map(|(xi, ui)| 4.0 * a * (r2 * ui + 2.0 * xu * xi))
                .collect()
        }),
        d3_action: Box::new(move |x, u, v| {
            let xu = dot(x, u);
            let xv = dot(x, v);
            let uv = dot(u, v);
            (0..x.len())
                .map(|i| 8.0 * a * (xv * u[i] + uv * x[i] + xu * v[i]))
                .collect()
        }),
        d4_action: Box::new(move |x, u, v, w| {
            let uv = dot(u, v);
            let uw = dot(u, w);
            let vw = dot(v, w);
            (0..x.len())
                .map(|i| 8.0 * a * (vw * u[i] + uw * v[i] + uv * w[i]))
                .collect()
        }),
        rho: Box::new(move |x| 4.0 * a * dot(x, x)),
        c1: 4.0 * a,
        c2: 4.0 * a,
        k: 2.0,
        b,
        m0: None,
        m1: 48.0 * a,
        m2: 48.0 * a,
    })
}

/// V(x) = |x|^2 / 2 (the Ornstein-Uhlenbeck reference): rho = 1, k = 0,
/// c1 = c2 = 1, B = 0, M0 = 1. The higher derivative actions vanish, so
/// any positive M1, M2 work; both are set to 1.
pub fn quadratic_potential(dim: usize) -> PotentialSpec {
    PotentialSpec {
        dim,
        v: Box::new(|x| 0.5 * dot(x, x)),
        grad: Box::new(|x| x.to_vec()),
        hess_action: Box::new(|_, u| u.to_vec()),
        d3_action: Box::new(|x, _, _| vec![0.0; x.len()]),
        d4_action: Box::new(|x, _, _, _| vec![0.0; x.len()]),
        rho: Box::new(|_| 1.0),
        c1: 1.0,
        c2: 1.0,
        k: 0.0,
        b: 0.0,
        m0: Some(1.0),
        m1: 1.0,
        m2: 1.0,
    }
}

/// Worst margins of the four assumption inequalities over sampled points.
/// All margins are nonnegative when the assumptions hold; the check fails
/// with a witness if any drops below -1e-8.
#[derive(Debug, Clone, Serialize)]
pub struct AssumptionReport {
    pub trials: usize,
    pub radius: f64,
    pub worst_curvature: f64,
    pub worst_second_derivative: f64,
    pub worst_third_derivative: f64,
    /// Only populated when k = 0.
    pub worst_first_derivative: Option<f64>,
    pub worst_rho_lower: f64,
    pub worst_rho_upper: f64,
}

const MARGIN_TOL: f64 = 1e-8;

/// Sample (x, u, v, w) with |x| up to `radius` and verify the assumption
/// inequalities pointwise; aligned directions u = v = w = x/|x| are probed
/// as well since they often extremize the derivative actions.
pub fn assumption_check(
    spec: &PotentialSpec,
    trials: usize,
    radius: f64,
    seed: u64,
) -> Result<AssumptionReport> {
    if trials < 1 {
        return Err(Error::Config("trials must be >= 1".into()));
    }
    let mut rng = stream(seed, "assumption-check", 0);
    let mut report = AssumptionReport {
        trials,
        radius,
        worst_curvature: f64::INFINITY,
        worst_second_derivative: f64::INFINITY,
        worst_third_derivative: f64::INFINITY,
        worst_first_derivative: if spec.k == 0.0 {
            Some(f64::INFINITY)
        } else {
            None
        },
        worst_rho_lower: f64::INFINITY,
        worst_rho_upper: f64::INFINITY,
    };

    let probe = |x: &[f64], u: &[f64], v: &[f64], w: &[f64], report: &mut AssumptionReport| -> Result<()> {
        let rho = (spec.rho)(x);
        let r = norm(x);

        let hu = (spec.hess_action)(x, u);
        let curvature = dot(u, &hu) - rho;
        if curvature < report.worst_curvature {
            report.worst_curvature = curvature;
        }
        if curvature < -MARGIN_TOL {
            return Err(Error::AssumptionViolated {
                inequality: "<u, Hess V u> >= rho |u|^2".into(),
                margin: curvature,
                witness: x.to_vec(),
            });
        }

        let d2 = (spec.d3_action)(x, u, v);
        let second = spec.m1 * (1.0 + rho) / (1.0 + r) - norm(&d2);
        if second < report.worst_second_derivative {
            report.worst_second_derivative = second;
        }
        if second < -MARGIN_TOL {
            return Err(Error::AssumptionViolated {
                inequality: "|D_v D_u grad V| <= M1 (1+rho)/(1+|x|) |u||v|".into(),
                margin: second,
                witness: x.to_vec(),
            });
        }

        let d3 = (spec.d4_action)(x, u, v, w);
        let third = spec.m2 * (1.0 + rho) / (1.0 + r).powi(2) - norm(&d3);
        if third < report.worst_third_derivative {
            report.worst_third_derivative = third;
        }
        if third < -MARGIN_TOL {
            return Err(Error::AssumptionViolated {
                inequality: "|D_w D_v D_u grad V| <= M2 (1+rho)/(1+|x|)^2 |u||v||w|".into(),
                margin: third,
                witness: x.to_vec(),
            });
        }

        if spec.k == 0.0 {
            let m0 = spec.m0.ok_or_else(|| {
                Error::Config("M0 is required when k = 0".into())
            })?;
            let first = m0 - norm(&(spec.hess_action)(x, u));
            let slot = report.worst_first_derivative.get_or_insert(f64::INFINITY);
            if first < *slot {
                *slot = first;
            }
            if first < -MARGIN_TOL {
                return Err(Error::AssumptionViolated {
                    inequality: "|D_u grad V| <= M0 |u|".into(),
                    margin: first,
                    witness: x.to_vec(),
                });
            }
        }

        let lower = rho
            - if r >= spec.b {
                spec.c1 * r.powf(spec.k)
            } else {
                0.0
            };
        let upper = spec.c2 * r.powf(spec.k) - rho;
        if lower < report.worst_rho_lower {
            report.worst_rho_lower = lower;
        }
        if upper < report.worst_rho_upper {
            report.worst_rho_upper = upper;
        }
        if lower < -MARGIN_TOL || upper < -MARGIN_TOL {
            return Err(Error::AssumptionViolated {
                inequality: "c1 |x|^k 1(|x|>=B) <= rho <= c2 |x|^k".into(),
                margin: lower.min(upper),
                witness: x.to_vec(),
            });
        }
        Ok(())
    };

    for _ in 0..trials {
        let r: f64 = rng.random::<f64>() * radius;
        let mut x = uniform_direction(spec.dim, &mut rng);
        for c in x.iter_mut() {
            *c *= r;
        }
        let u = uniform_direction(spec.dim, &mut rng);
        let v = uniform_direction(spec.dim, &mut rng);
        let w = uniform_direction(spec.dim, &mut rng);
        probe(&x, &u, &v, &w, &mut report)?;
        if r > 1e-9 {
            let aligned: Vec<f64> = x.iter().map(|c| c / r).collect();
            probe(&x, &aligned, &aligned, &aligned, &mut report)?;
        }
    }
    Ok(report)
}

/// Contraction rate eta = (1/(4B^2)) ^ (c1/(4(k+1)))^{2/(k+2)} (minimum of
/// the two branches). B = 0 sends the first branch to +infinity: the rho
/// lower bound then holds globally and only the second branch binds.
pub fn eta(spec: &PotentialSpec) -> f64 {
    let second = (spec.c1 / (4.0 * (spec.k + 1.0))).powf(2.0 / (spec.k + 2.0));
    if spec.b == 0.0 {
        second
    } else {
        (1.0 / (4.0 * spec.b * spec.b)).min(second)
    }
}

/// The explicit constant chain of the mean-square variation bounds and the
/// semigroup derivative envelopes.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ErgodicityConstants {
    pub eta: f64,
    pub chi: f64,
    pub t0: f64,
    pub t1: f64,
    pub j_2t0: f64,
    pub c1_const: f64,
    pub theta: f64,
    pub c2_const: f64,
    /// First absolute moment m1(mu).
    pub m1_mu: f64,
    /// mu(|x| > B + 1).
    pub tail_mass: f64,
    pub m1: f64,
    pub m2: f64,
    pub s_m12: f64,
    pub s_0: f64,
    pub q_m1: f64,
    pub q_m12: f64,
    pub q_0: f64,
    pub q_1: f64,
    pub q_2: f64,
}

impl ErgodicityConstants {
    /// J(t) = 1 - (1 - e^{-chi}) / (2t).
    pub fn j(&self, t: f64) -> f64 {
        1.0 - (1.0 - (-self.chi).exp()) / (2.0 * t)
    }

    /// S(t) = s_{-1/2}/sqrt(t) + s_0.
    pub fn s_env(&self, t: f64) -> f64 {
        self.s_m12 / t.sqrt() + self.s_0
    }

    /// Q(t) = q_{-1}/t + q_{-1/2}/sqrt(t) + q_0 + q_1 t + q_2 t^2.
    pub fn q_env(&self, t: f64) -> f64 {
        self.q_m1 / t + self.q_m12 / t.sqrt() + self.q_0 + self.q_1 * t + self.q_2 * t * t
    }

    /// P(t) = (3 M1^2 (t+1)/2 + M2)(t+1).
    pub fn p_env(&self, t: f64) -> f64 {
        (1.5 * self.m1 * self.m1 * (t + 1.0) + self.m2) * (t + 1.0)
    }

    /// JSON artifact with the defining formula recorded beside each value.
    pub fn to_annotated_json(&self) -> serde_json::Value {
        let entry = |value: f64, formula: &str| {
            serde_json::json!({ "value": value, "formula": formula })
        };
        serde_json::json!({
            "eta": entry(self.eta, "(1/(4B^2)) min (c1/(4(k+1)))^(2/(k+2))"),
            "chi": entry(self.chi, "c1 * B^k"),
            "m1_mu": entry(self.m1_mu, "first absolute moment of mu, by radial quadrature"),
            "tail_mass": entry(self.tail_mass, "mu(|x| > B+1), by radial quadrature"),
            "t0": entry(self.t0, "(eta + 2B + 2 m1(mu)) / (eta * mu(|x| > B+1))"),
            "t1": entry(self.t1, "max(2 t0, (1/chi) log(4 t0 / (1 - e^-chi)))"),
            "j_2t0": entry(self.j_2t0, "J(2 t0), J(t) = 1 - (1 - e^-chi)/(2t)"),
            "c1_const": entry(self.c1_const, "1 / sqrt(J(2 t0))"),
            "theta": entry(self.theta, "log(1/J(2 t0)) / (2 t1)"),
            "c2_const": entry(self.c2_const, "sqrt(2) M1 (1 + C1^2/theta^2)^(1/2)"),
            "p_env": entry(f64::NAN, "P(t) = (3 M1^2 (t+1)/2 + M2)(t+1)"),
            "s_m12": entry(self.s_m12, "2 C1"),
            "s_0": entry(self.s_0, "C1 C2"),
            "q_m1": entry(self.q_m1, "4 sqrt(2) C1"),
            "q_m12": entry(self.q_m12, "2 (2 + sqrt(2)) C1 C2"),
            "q_0": entry(self.q_0, "C1 (C2^2 + 3 M1^2/2 + M2)"),
            "q_1": entry(self.q_1, "C1 (3 M1^2 + M2) / 2"),
            "q_2": entry(self.q_2, "3 C1 M1^2 / 8"),
        })
    }
}

/// Radial integrals of mu ~ e^{-V}: (m1, tail mass beyond B+1).
/// Errors out when V is detectably non-radial; only radial potentials are
/// supported here.
fn radial_mu_integrals(spec: &PotentialSpec) -> Result<(f64, f64)> {
    // Radiality probe: compare V at rotated points.
    let mut rng = stream(0xad1a1, "radial-probe", 0);
    for _ in 0..32 {
        let r: f64 = rng.random::<f64>() * 3.0;
        let x = uniform_direction(spec.dim, &mut rng);
        let xr: Vec<f64> = x.iter().map(|c| c * r).collect();
        let mut e = vec![0.0; spec.dim];
        e[0] = r;
        let va = (spec.v)(&xr);
        let vb = (spec.v)(&e);
        if (va - vb).abs() > 1e-9 * (1.0 + va.abs()) {
            return Err(Error::Config(
                "non-radial potentials are not supported by the constant chain".into(),
            ));
        }
    }

    let dim = spec.dim as f64;
    let v_on_axis = |r: f64| {
        let mut e = vec![0.0; spec.dim];
        e[0] = r;
        (spec.v)(&e)
    };
    let v0 = v_on_axis(0.0);
    // Weight r^{dim-1} e^{-(V(r)-V(0))}; extend R until the integrand with a
    // one-power margin is negligible.
    let w = move |r: f64| r.powf(dim - 1.0) * (-(v_on_axis(r) - v0)).exp();
    let mut r_max = 4.0;
    while r_max < 512.0 && w(r_max) * r_max > 1e-18 {
        r_max *= 1.5;
    }

    let mass = quad::integrate(&w, 0.0, r_max, 1e-12, 0.0);
    let first = quad::integrate(|r| r * w(r), 0.0, r_max, 1e-12, 0.0);
    let cut = spec.b + 1.0;
    let tail = if cut >= r_max {
        0.0
    } else {
        quad::integrate(&w, cut, r_max, 1e-12, 0.0).value / mass.value
    };
    Ok((first.value / mass.value, tail))
}

/// Compute the full constant chain for a radial potential. Requires
/// chi = c1 B^k > 0 (k = 0 reads chi = c1); B = 0 with k > 0 is degenerate.
pub fn ergodic_constants(spec: &PotentialSpec) -> Result<ErgodicityConstants> {
    let chi = if spec.k == 0.0 {
        spec.c1
    } else {
        spec.c1 * spec.b.powf(spec.k)
    };
    if chi <= 0.0 {
        return Err(Error::DegenerateConstants);
    }
    let eta_v = eta(spec);
    let (m1_mu, tail_mass) = radial_mu_integrals(spec)?;
    if tail_mass <= 0.0 {
        return Err(Error::Domain(
            "mu(|x| > B+1) vanished; constant chain undefined".into(),
        ));
    }

    let t0 = (eta_v + 2.0 * spec.b + 2.0 * m1_mu) / (eta_v * tail_mass);
    let t1 = (2.0 * t0).max((1.0 / chi) * (4.0 * t0 / (1.0 - (-chi).exp())).ln());
    let j_2t0 = 1.0 - (1.0 - (-chi).exp()) / (4.0 * t0);
    let c1_const = 1.0 / j_2t0.sqrt();
    let theta = (1.0 / j_2t0).ln() / (2.0 * t1);
    let c2_const = std::f64::consts::SQRT_2
        * spec.m1
        * (1.0 + c1_const * c1_const / (theta * theta)).sqrt();

    Ok(ErgodicityConstants {
        eta: eta_v,
        chi,
        t0,
        t1,
        j_2t0,
        c1_const,
        theta,
        c2_const,
        m1_mu,
        tail_mass,
        m1: spec.m1,
        m2: spec.m2,
        s_m12: 2.0 * c1_const,
        s_0: c1_const * c2_const,
        q_m1: 4.0 * std::f64::consts::SQRT_2 * c1_const,
        q_m12: 2.0 * (2.0 + std::f64::consts::SQRT_2) * c1_const * c2_const,
        q_0: c1_const * (c2_const * c2_const + 1.5 * spec.m1 * spec.m1 + spec.m2),
        q_1: c1_const * (3.0 * spec.m1 * spec.m1 + spec.m2) / 2.0,
        q_2: 3.0 * c1_const * spec.m1 * spec.m1 / 8.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_laws::QuarticLaw;

    #[test]
    fn quartic_gradient_and_rho_values() {
        let spec = quartic_potential(2, 1.0).unwrap();
        assert_eq!(spec.c1, 1.0);
        assert_eq!(spec.m1, 12.0);
        let e1 = vec![1.0, 0.0];
        let g = (spec.grad)(&e1);
        assert_eq!(g, vec![1.0, 0.0]); // 4 a |x|^2 x with a = 1/4
        assert_eq!((spec.rho)(&e1), 1.0);
    }

    #[test]
    fn hess_matches_finite_differences_of_grad() {
        let spec = quartic_potential(3, 1.0).unwrap();
        let mut rng = stream(4, "fd", 0);
        let h = 1e-5;
        for _ in 0..100 {
            let r: f64 = rng.random::<f64>() * 3.0;
            let mut x = uniform_direction(3, &mut rng);
            for c in x.iter_mut() {
                *c *= r + 0.1;
            }
            let u = uniform_direction(3, &mut rng);
            let xp: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + h * b).collect();
            let xm: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a - h * b).collect();
            let gp = (spec.grad)(&xp);
            let gm = (spec.grad)(&xm);
            let fd: Vec<f64> = gp
                .iter()
                .zip(&gm)
                .map(|(p, m)| (p - m) / (2.0 * h))
                .collect();
            let exact = (spec.hess_action)(&x, &u);
            let scale = norm(&exact).max(1.0);
            assert!(
                crate::linalg::dist(&fd, &exact) <= 1e-6 * scale,
                "fd mismatch at |x| = {r}"
            );
        }
    }

    #[test]
    fn hess_action_is_symmetric_bilinear() {
        // <v, H u> = <u, H v> (C^2 audit via the actions themselves).
        let spec = quartic_potential(5, 1.0).unwrap();
        let mut rng = stream(6, "sym", 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            let u = uniform_direction(5, &mut rng);
            let v = uniform_direction(5, &mut rng);
            let hu = (spec.hess_action)(&x, &u);
            let hv = (spec.hess_action)(&x, &v);
            assert!((dot(&v, &hu) - dot(&u, &hv)).abs() < 1e-12);
        }
    }

    #[test]
    fn quartic_passes_assumptions() {
        for n in [2u32, 3, 5] {
            let spec = quartic_potential(n, 1.0).unwrap();
            let report = assumption_check(&spec, 500, 10.0, 1).unwrap();
            assert!(report.worst_curvature >= -1e-12);
            assert!(report.worst_second_derivative >= -1e-12);
            assert!(report.worst_third_derivative >= -1e-12);
            assert!(report.worst_rho_lower >= -1e-12);
            assert!(report.worst_rho_upper.abs() <= 1e-12); // c1 = c2
        }
        // Third-derivative margin at x = 0 is exactly M2.
        let spec = quartic_potential(2, 1.0).unwrap();
        let z = vec![0.0, 0.0];
        let u = vec![1.0, 0.0];
        let d3 = (spec.d4_action)(&z, &u, &u, &u);
        assert_eq!(norm(&d3), 3.0 * 8.0 * 0.25); // 24 a = 6 < M2 = 12
    }

    #[test]
    fn wrong_m1_is_caught() {
        let mut spec = quartic_potential(2, 1.0).unwrap();
        spec.m1 = 1.0;
        let err = assumption_check(&spec, 2000, 10.0, 2);
        assert!(
            matches!(err, Err(Error::AssumptionViolated { .. })),
            "M1 = 1 must fail at |x| near 10"
        );
    }

    #[test]
    fn quadratic_passes_assumptions() {
        let spec = quadratic_potential(2);
        let report = assumption_check(&spec, 300, 8.0, 3).unwrap();
        assert!(report.worst_first_derivative.unwrap() >= -1e-12);
        assert!(report.worst_curvature.abs() <= 1e-12);
    }

    #[test]
    fn eta_branches() {
        // Quartic with the B = 0 convention: (1/12)^{1/2}.
        let spec = quartic_potential(2, 0.0).unwrap();
        assert!((eta(&spec) - (1.0f64 / 12.0).sqrt()).abs() < 1e-15);
        // k = 0, c1 = 1, B = 1: min(1/4, 1/4).
        let mut quad_spec = quadratic_potential(2);
        quad_spec.b = 1.0;
        assert_eq!(eta(&quad_spec), 0.25);
        // B large: first branch wins and vanishes.
        let spec = quartic_potential(2, 1e6).unwrap();
        assert!(eta(&spec) < 1e-11);
    }

    #[test]
    fn chain_for_quartic_n2_b1() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let c = ergodic_constants(&spec).unwrap();

        // Independent values: eta = min(1/4, sqrt(1/12)) = 1/4; chi = 1;
        // m1 and the tail from the closed-form radial law.
        assert_eq!(c.eta, 0.25);
        assert_eq!(c.chi, 1.0);
        let law = QuarticLaw::new(2).unwrap();
        let m1 = law.radial_moment(1);
        assert!((c.m1_mu - m1).abs() < 1e-9, "{} vs {m1}", c.m1_mu);
        // tail = erfc(2) via u = r^2 substitution.
        let tail = statrs::function::erf::erfc(2.0);
        assert!((c.tail_mass - tail).abs() < 1e-9, "{} vs {tail}", c.tail_mass);

        // Deterministic chain arithmetic.
        let t0 = (0.25 + 2.0 + 2.0 * m1) / (0.25 * tail);
        assert!((c.t0 - t0).abs() < 1e-6 * t0);
        assert!(c.t1 >= 2.0 * c.t0);
        assert!(c.j_2t0 > 0.0 && c.j_2t0 < 1.0);
        assert!(c.theta > 0.0);
        assert!(c.c1_const > 1.0);
        assert!(c.c2_const > c.c1_const);

        // Envelope coefficients track the chain.
        assert_eq!(c.s_m12, 2.0 * c.c1_const);
        assert_eq!(c.s_0, c.c1_const * c.c2_const);
        assert!((c.q_m1 - 4.0 * 2.0f64.sqrt() * c.c1_const).abs() < 1e-12);
        assert!(c.q_0 > 0.0 && c.q_1 > 0.0 && c.q_2 > 0.0);

        // Regression lock from the first verified run of this chain.
        assert!((c.t0 - 3596.169643584478).abs() < 1e-6, "t0 = {}", c.t0);
        assert!((c.theta - 3.0549325e-9).abs() < 1e-13, "theta = {}", c.theta);
    }

    #[test]
    fn chain_determinism_and_completeness() {
        let spec = quartic_potential(3, 1.0).unwrap();
        let a = ergodic_constants(&spec).unwrap();
        let b = ergodic_constants(&spec).unwrap();
        assert_eq!(a, b);

        // Every symbol of the bounds maps to a stored field.
        let json = serde_json::to_value(&a).unwrap();
        for key in [
            "eta", "chi", "t0", "t1", "j_2t0", "c1_const", "theta", "c2_const",
            "m1_mu", "tail_mass", "m1", "m2", "s_m12", "s_0", "q_m1", "q_m12",
            "q_0", "q_1", "q_2",
        ] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
        let annotated = a.to_annotated_json();
        assert!(annotated["theta"]["formula"].as_str().unwrap().contains("J(2 t0)"));
    }

    #[test]
    fn degenerate_b_zero_rejected() {
        let spec = quartic_potential(2, 0.0).unwrap();
        assert!(matches!(
            ergodic_constants(&spec),
            Err(Error::DegenerateConstants)
        ));
    }

    #[test]
    fn tail_plus_bulk_is_one() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let (_, tail) = radial_mu_integrals(&spec).unwrap();
        let dim = 2.0;
        let w = |r: f64| r.powf(dim - 1.0) * (-0.25 * r.powi(4)).exp();
        let total = quad::integrate(w, 0.0, 12.0, 1e-13, 0.0).value;
        let bulk = quad::integrate(w, 0.0, 2.0, 1e-13, 0.0).value;
        assert!((tail + bulk / total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn monotonicity_probes() {
        // Increasing B never increases eta.
        let mut prev = f64::INFINITY;
        for b in [0.5, 1.0, 2.0, 4.0] {
            let e = eta(&quartic_potential(2, b).unwrap());
            assert!(e <= prev + 1e-15);
            prev = e;
        }
        // Increasing M1 never decreases C2 or the S/Q coefficients.
        let spec = quartic_potential(2, 1.0).unwrap();
        let base = ergodic_constants(&spec).unwrap();
        let mut bumped_spec = quartic_potential(2, 1.0).unwrap();
        bumped_spec.m1 = spec.m1 * 2.0;
        let bumped = ergodic_constants(&bumped_spec).unwrap();
        assert!(bumped.c2_const >= base.c2_const);
        assert!(bumped.s_0 >= base.s_0);
        assert!(bumped.q_m12 >= base.q_m12);
        assert!(bumped.q_0 >= base.q_0);
        assert!(bumped.q_1 >= base.q_1);
        assert!(bumped.q_2 >= base.q_2);
    }

    #[test]
    fn j_shape() {
        let spec = quartic_potential(2, 1.0).unwrap();
        let c = ergodic_constants(&spec).unwrap();
        let mut prev = c.j(1.0);
        assert!(prev < 1.0);
        for t in [2.0, 10.0, 100.0, 1e6] {
            let j = c.j(t);
            assert!(j > prev);
            prev = j;
        }
        assert!((c.j(1e12) - 1.0).abs() < 1e-12);
    }
}
