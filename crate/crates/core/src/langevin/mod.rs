//! Overdamped Langevin dynamics dX = -grad V(X) dt + sqrt(2) dB jointly with
//! its first, second, and third variation processes, the semigroup
//! P_t h(x) = E h(X_t^x), and the stochastic integral
//! I_u(t) = (1/(sqrt(2) t)) int_0^t <U_u(s), dB_s> used by the
//! Elworthy-Li derivative representations.
//!
//! Everything advances on one fixed Euler grid: X by Euler-Maruyama, the
//! variation ODEs by explicit Euler against the frozen X trajectory, and the
//! I integrals against the same noise increments, so the noise coupling is
//! exact.

pub mod bel;
pub mod checks;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::constants::PotentialSpec;
use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::rng::stream;
use crate::stats::mean_se;

/// Trajectories beyond this radius abort with a step-size diagnostic.
const STABILITY_BOX: f64 = 1e4;

/// Directions carried by the variation processes.
#[derive(Debug, Clone)]
pub struct Directions {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl Directions {
    pub fn single(u: Vec<f64>) -> Self {
        let v = u.clone();
        let w = u.clone();
        Directions { u, v, w }
    }
}

/// How many variation orders a flow integration carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VariationDepth {
    XOnly,
    First,
    Second,
    Third,
}

/// Running state of one joint integration.
pub(crate) struct FlowState {
    pub x: Vec<f64>,
    /// U1 for u, v, w.
    pub u1: [Vec<f64>; 3],
    /// U2 for (u,v), (u,w), (v,w).
    pub u2: [Vec<f64>; 3],
    pub u3: Vec<f64>,
    /// Raw integrals int <U1_a, dB> for a in {u, v, w}.
    pub m_int: [f64; 3],
    /// Trapezoid accumulation of int_0^t rho(X_s) ds.
    pub rho_int: f64,
    prev_rho: f64,
    /// Max Hessian scale seen along the path (radial action norm).
    pub hess_scale_max: f64,
    pub t: f64,
    pub steps: usize,
}

fn hess_scale(spec: &PotentialSpec, x: &[f64]) -> f64 {
    let r = norm(x);
    if r < 1e-12 {
        let e1 = crate::linalg::basis(spec.dim, 0);
        return norm(&(spec.hess_action)(x, &e1));
    }
    let xhat: Vec<f64> = x.iter().map(|c| c / r).collect();
    norm(&(spec.hess_action)(x, &xhat))
}

impl FlowState {
    pub fn new(spec: &PotentialSpec, x0: &[f64], dirs: &Directions) -> Self {
        let dim = x0.len();
        FlowState {
            x: x0.to_vec(),
            u1: [dirs.u.clone(), dirs.v.clone(), dirs.w.clone()],
            u2: [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]],
            u3: vec![0.0; dim],
            m_int: [0.0; 3],
            rho_int: 0.0,
            prev_rho: f64::NAN,
            hess_scale_max: hess_scale_init(spec, x0),
            t: 0.0,
            steps: 0,
        }
    }

    /// 1/4 sum over the symmetric group of {u,v,w} of
    /// D^2 g [U1_{pi(1)}, U2_{pi(2),pi(3)}], with g = -grad V.
    fn symmetrized_d3(&self, spec: &PotentialSpec) -> Vec<f64> {
        // Permutations as (first index, pair index into self.u2):
        // u2[0] = (u,v), u2[1] = (u,w), u2[2] = (v,w).
        let terms: [(usize, usize); 6] = [
            (0, 2), // u, (v,w)
            (0, 2), // u, (w,v)
            (1, 1), // v, (u,w)
            (1, 1), // v, (w,u)
            (2, 0), // w, (u,v)
            (2, 0), // w, (v,u)
        ];
        let mut acc = vec![0.0; self.x.len()];
        for (a, pair) in terms {
            let d = (spec.d3_action)(&self.x, &self.u1[a], &self.u2[pair]);
            for (s, di) in acc.iter_mut().zip(&d) {
                *s -= di; // minus: D^2 g = -d3_action
            }
        }
        for s in acc.iter_mut() {
            *s *= 0.25;
        }
        acc
    }
}

fn hess_scale_init(spec: &PotentialSpec, x: &[f64]) -> f64 {
    hess_scale(spec, x)
}

/// One Euler step of the joint system. All right-hand sides are evaluated
/// at the pre-step state, then committed together.
pub(crate) fn advance_flow(
    spec: &PotentialSpec,
    state: &mut FlowState,
    dt: f64,
    depth: VariationDepth,
    rng: &mut impl Rng,
) -> Result<()> {
    let dim = state.x.len();
    let sqrt_dt = dt.sqrt();
    let noise: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();

    if state.prev_rho.is_nan() {
        state.prev_rho = (spec.rho)(&state.x);
    }

    if depth >= VariationDepth::First {
        // U1' = Dg[U1]; I integrals use the pre-step U1 against dB.
        let mut u1_incr: [Vec<f64>; 3] = Default::default();
        for a in 0..3 {
            u1_incr[a] = (spec.hess_action)(&state.x, &state.u1[a]);
            state.m_int[a] += sqrt_dt * crate::linalg::dot(&state.u1[a], &noise);
        }

        let mut u2_incr: [Vec<f64>; 3] = Default::default();
        if depth >= VariationDepth::Second {
            let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
            for (idx, (a, b)) in pairs.into_iter().enumerate() {
                let lin = (spec.hess_action)(&state.x, &state.u2[idx]);
                let quad = (spec.d3_action)(&state.x, &state.u1[a], &state.u1[b]);
                u2_incr[idx] = lin
                    .iter()
                    .zip(&quad)
                    .map(|(l, q)| -(l + q))
                    .collect();
            }
        }

        let mut u3_incr = Vec::new();
        if depth >= VariationDepth::Third {
            let lin = (spec.hess_action)(&state.x, &state.u3);
            let sym = state.symmetrized_d3(spec);
            let cubic = (spec.d4_action)(&state.x, &state.u1[0], &state.u1[1], &state.u1[2]);
            u3_incr = (0..dim).map(|i| -lin[i] + sym[i] - cubic[i]).collect();
        }

        for a in 0..3 {
            for i in 0..dim {
                state.u1[a][i] -= dt * u1_incr[a][i];
            }
        }
        if depth >= VariationDepth::Second {
            for idx in 0..3 {
                for i in 0..dim {
                    state.u2[idx][i] += dt * u2_incr[idx][i];
                }
            }
        }
        if depth >= VariationDepth::Third {
            for i in 0..dim {
                state.u3[i] += dt * u3_incr[i];
            }
        }
    }

    // X step last: the variation RHS above froze the pre-step X.
    let g = (spec.grad)(&state.x);
    for i in 0..dim {
        state.x[i] += -g[i] * dt + std::f64::consts::SQRT_2 * sqrt_dt * noise[i];
    }

    let new_rho = (spec.rho)(&state.x);
    state.rho_int += 0.5 * dt * (state.prev_rho + new_rho);
    state.prev_rho = new_rho;
    state.hess_scale_max = state.hess_scale_max.max(hess_scale(spec, &state.x));
    state.t += dt;
    state.steps += 1;

    let xn = norm(&state.x);
    if xn > STABILITY_BOX {
        return Err(Error::StepSize {
            norm: xn,
            bound: STABILITY_BOX,
            step: state.steps,
        });
    }
    Ok(())
}

/// A discretized joint trajectory of X and its variation processes for one
/// noise realization.
pub struct LangevinPath {
    pub dim: usize,
    pub dt: f64,
    pub steps: usize,
    pub x0: Vec<f64>,
    /// (steps+1) x dim, row k is X(k dt).
    pub xs: Vec<f64>,
    pub u1_u: Vec<f64>,
    pub u1_v: Vec<f64>,
    pub u1_w: Vec<f64>,
    pub u2_uv: Vec<f64>,
    pub u2_uw: Vec<f64>,
    pub u2_vw: Vec<f64>,
    pub u3: Vec<f64>,
    /// Raw integrals int_0^{k dt} <U1_a, dB> per grid point.
    pub m_u: Vec<f64>,
    pub m_v: Vec<f64>,
    pub m_w: Vec<f64>,
    /// Cumulative trapezoid of int rho(X) per grid point.
    pub rho_cum: Vec<f64>,
    /// Discretization allowance 10 dt (max Hessian scale along the path).
    pub eps_disc: f64,
}

impl LangevinPath {
    fn row(buf: &[f64], dim: usize, k: usize) -> &[f64] {
        &buf[k * dim..(k + 1) * dim]
    }

    pub fn x_at(&self, k: usize) -> &[f64] {
        Self::row(&self.xs, self.dim, k)
    }

    pub fn u1_u_at(&self, k: usize) -> &[f64] {
        Self::row(&self.u1_u, self.dim, k)
    }

    pub fn u2_uv_at(&self, k: usize) -> &[f64] {
        Self::row(&self.u2_uv, self.dim, k)
    }

    pub fn u3_at(&self, k: usize) -> &[f64] {
        Self::row(&self.u3, self.dim, k)
    }

    /// I_u(t) = M(t) / (sqrt(2) t) at grid index k (0 at t = 0).
    pub fn i_u(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.m_u[k] / (std::f64::consts::SQRT_2 * (k as f64 * self.dt))
        }
    }
}

/// Integrate the joint system to time `t_final`, recording every grid point.
pub fn simulate(
    spec: &PotentialSpec,
    x0: &[f64],
    dt: f64,
    t_final: f64,
    dirs: &Directions,
    seed: u64,
) -> Result<LangevinPath> {
    if dt <= 0.0 || t_final < dt {
        return Err(Error::Config(format!(
            "need 0 < dt <= T, got dt = {dt}, T = {t_final}"
        )));
    }
    let steps = (t_final / dt).round() as usize;
    let dim = x0.len();
    let mut rng = stream(seed, "langevin-path", 0);
    let mut state = FlowState::new(spec, x0, dirs);

    let cap = (steps + 1) * dim;
    let mut path = LangevinPath {
        dim,
        dt,
        steps,
        x0: x0.to_vec(),
        xs: Vec::with_capacity(cap),
        u1_u: Vec::with_capacity(cap),
        u1_v: Vec::with_capacity(cap),
        u1_w: Vec::with_capacity(cap),
        u2_uv: Vec::with_capacity(cap),
        u2_uw: Vec::with_capacity(cap),
        u2_vw: Vec::with_capacity(cap),
        u3: Vec::with_capacity(cap),
        m_u: Vec::with_capacity(steps + 1),
        m_v: Vec::with_capacity(steps + 1),
        m_w: Vec::with_capacity(steps + 1),
        rho_cum: Vec::with_capacity(steps + 1),
        eps_disc: 0.0,
    };

    let record = |state: &FlowState, path: &mut LangevinPath| {
        path.xs.extend_from_slice(&state.x);
        path.u1_u.extend_from_slice(&state.u1[0]);
        path.u1_v.extend_from_slice(&state.u1[1]);
        path.u1_w.extend_from_slice(&state.u1[2]);
        path.u2_uv.extend_from_slice(&state.u2[0]);
        path.u2_uw.extend_from_slice(&state.u2[1]);
        path.u2_vw.extend_from_slice(&state.u2[2]);
        path.u3.extend_from_slice(&state.u3);
        path.m_u.push(state.m_int[0]);
        path.m_v.push(state.m_int[1]);
        path.m_w.push(state.m_int[2]);
        path.rho_cum.push(state.rho_int);
    };

    record(&state, &mut path);
    for _ in 0..steps {
        advance_flow(spec, &mut state, dt, VariationDepth::Third, &mut rng)?;
        record(&state, &mut path);
    }
    path.eps_disc = 10.0 * dt * state.hess_scale_max;
    Ok(path)
}

/// A Lipschitz test function with an optional gradient (required by the
/// derivative estimators) and a certified Lipschitz bound.
pub struct TestFunction {
    pub h: Box<dyn Fn(&[f64]) -> f64 + Sync + Send>,
    pub grad_h: Option<Box<dyn Fn(&[f64]) -> Vec<f64> + Sync + Send>>,
    pub lipschitz_bound: f64,
    pub smooth: bool,
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.h)(x)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        self.grad_h.as_ref().expect("gradient required")(x)
    }

    /// h(x) = <a, x>. Smooth with Lipschitz constant |a| (not bounded; fine
    /// for the closed-form Ornstein-Uhlenbeck checks).
    pub fn linear(a: Vec<f64>) -> Self {
        let lip = norm(&a);
        let a2 = a.clone();
        TestFunction {
            h: Box::new(move |x| crate::linalg::dot(&a, x)),
            grad_h: Some(Box::new(move |_| a2.clone())),
            lipschitz_bound: lip,
            smooth: true,
        }
    }

    /// h(x) = x_d^2, for the exact OU Hessian check.
    pub fn square_coord(dim: usize, d: usize, domain_radius: f64) -> Self {
        TestFunction {
            h: Box::new(move |x| x[d] * x[d]),
            grad_h: Some(Box::new(move |x| {
                let mut g = vec![0.0; dim];
                g[d] = 2.0 * x[d];
                g
            })),
            lipschitz_bound: 2.0 * domain_radius,
            smooth: true,
        }
    }

    /// Smooth bounded coordinate h(x) = L tanh(x_d / L): member of
    /// Lip cap C^inf cap C_b with Lipschitz constant 1.
    pub fn bounded_coordinate(dim: usize, d: usize, cap: f64) -> Self {
        TestFunction {
            h: Box::new(move |x| cap * (x[d] / cap).tanh()),
            grad_h: Some(Box::new(move |x| {
                let mut g = vec![0.0; dim];
                let c = (x[d] / cap).cosh();
                g[d] = 1.0 / (c * c);
                g
            })),
            lipschitz_bound: 1.0,
            smooth: true,
        }
    }

    /// Smooth radial bump h(x) = phi((|x|^2 - center)/width) with
    /// phi(z) = exp(1 - 1/(1 - z^2)) on |z| < 1, zero outside. Working in
    /// |x|^2 keeps it C^inf at the origin. The Lipschitz bound is a
    /// numerically certified sup of |grad h| over the support.
    pub fn radial_bump(center: f64, width: f64) -> Self {
        let phi = move |z: f64| -> f64 {
            if z.abs() >= 1.0 {
                0.0
            } else {
                (1.0 - 1.0 / (1.0 - z * z)).exp()
            }
        };
        let dphi = move |z: f64| -> f64 {
            if z.abs() >= 1.0 {
                0.0
            } else {
                let s = 1.0 - z * z;
                phi(z) * (-2.0 * z / (s * s))
            }
        };
        // sup over the support of |phi'((q-c)/w)| * 2 sqrt(q) / w on a fine
        // grid, with a 5% safety factor.
        let mut sup = 0.0f64;
        for i in 0..=4000 {
            let z = -1.0 + 2.0 * i as f64 / 4000.0;
            let q = center + width * z;
            if q < 0.0 {
                continue;
            }
            sup = sup.max(dphi(z).abs() * 2.0 * q.sqrt() / width);
        }
        let lip = 1.05 * sup;
        TestFunction {
            h: Box::new(move |x| phi((crate::linalg::dot(x, x) - center) / width)),
            grad_h: Some(Box::new(move |x| {
                let z = (crate::linalg::dot(x, x) - center) / width;
                let s = dphi(z) * 2.0 / width;
                x.iter().map(|c| s * c).collect()
            })),
            lipschitz_bound: lip,
            smooth: true,
        }
    }
}

/// Monte Carlo estimate of P_t h(x) = E h(X_t^x) with jackknife standard
/// error.
pub fn estimate_pt(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    t: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if replicas < 2 {
        return Err(Error::Config("estimate_pt needs replicas >= 2".into()));
    }
    if t == 0.0 {
        return Ok((h.eval(x), 0.0));
    }
    let steps = (t / dt).round().max(1.0) as usize;
    let dirs = Directions::single(crate::linalg::basis(x.len(), 0));
    let mut vals = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = stream(seed, "pt", r as u64);
        let mut state = FlowState::new(spec, x, &dirs);
        for _ in 0..steps {
            advance_flow(spec, &mut state, dt, VariationDepth::XOnly, &mut rng)?;
        }
        vals.push(h.eval(&state.x));
    }
    Ok(mean_se(&vals))
}

/// Monte Carlo estimate of E exp(-2 int_s^t rho(X_r) dr) with its SE,
/// rho accumulated by the trapezoid rule along each path.
pub fn decay_e(
    spec: &PotentialSpec,
    x: &[f64],
    s: f64,
    t: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if !(0.0 <= s && s <= t) {
        return Err(Error::Config(format!("need 0 <= s <= t, got s={s}, t={t}")));
    }
    if s == t {
        return Ok((1.0, 0.0));
    }
    let steps_s = (s / dt).round() as usize;
    let steps_t = (t / dt).round() as usize;
    let dirs = Directions::single(crate::linalg::basis(x.len(), 0));
    let mut vals = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = stream(seed, "decay-e", r as u64);
        let mut state = FlowState::new(spec, x, &dirs);
        let mut rho_at_s = 0.0;
        for k in 0..steps_t {
            if k == steps_s {
                rho_at_s = state.rho_int;
            }
            advance_flow(spec, &mut state, dt, VariationDepth::XOnly, &mut rng)?;
        }
        vals.push((-2.0 * (state.rho_int - rho_at_s)).exp());
    }
    Ok(mean_se(&vals))
}
