//! Elworthy-Li (Bismut) estimators for the semigroup derivatives.
//!
//! Order 1 is the chain rule D_u P_t h(x) = E <grad h(X_t), U_u(t)>; its
//! independent oracle is the common-random-number finite difference below.
//! Order 2 is the two-term representation
//!
//!   D^2 P_t h[u,v] = E( D P_{t/2} h(X_{t/2})[U_u(t/2)] I_v(t/2) )
//!                  + (2/t) E int_0^{t/2} D P_{t-s} h(X_s)[U_{u,v}(s)] ds
//!
//! and order 3 assembles K1 + K2 + K3 + K4(u,v,w) + K4(v,u,w) from nested
//! first/second estimates. The inner semigroup derivatives are themselves
//! Monte Carlo estimates with independent noise (the paper evaluates them
//! exactly); the resulting nesting bias is probed empirically by varying
//! the inner replica count, not assumed away.

use super::{advance_flow, Directions, FlowState, TestFunction, VariationDepth};
use crate::constants::PotentialSpec;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm};
use crate::parallel::par_map;
use crate::rng::{derive_seed, stream};
use crate::stats::mean_se;

/// Replica budgets for the nested estimators. The product outer * inner is
/// capped to keep accidental cost explosions diagnosable.
#[derive(Debug, Clone, Copy)]
pub struct BelBudget {
    pub outer: usize,
    pub inner: usize,
    /// Subsample every this many grid points for the time integrals.
    pub sub_stride: usize,
    pub cost_cap: usize,
}

impl Default for BelBudget {
    fn default() -> Self {
        BelBudget {
            outer: 1000,
            inner: 100,
            sub_stride: 10,
            cost_cap: 200_000,
        }
    }
}

impl BelBudget {
    fn check(&self) -> Result<()> {
        if self.outer * self.inner > self.cost_cap {
            return Err(Error::NestingBudget {
                outer: self.outer,
                inner: self.inner,
                cap: self.cost_cap,
            });
        }
        if self.outer < 2 || self.inner < 1 || self.sub_stride < 1 {
            return Err(Error::Config("degenerate BEL budget".into()));
        }
        Ok(())
    }

    /// Reduced budget for the doubly nested second-derivative estimates
    /// inside order 3.
    fn nested(&self) -> BelBudget {
        BelBudget {
            outer: self.inner.max(2),
            inner: (self.inner / 4).max(4),
            sub_stride: self.sub_stride * 4,
            cost_cap: self.cost_cap,
        }
    }
}

/// A Monte Carlo semigroup-derivative estimate.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DerivativeEstimate {
    pub order: u8,
    pub value: f64,
    pub std_error: f64,
    pub t: f64,
    pub outer_replicas: usize,
    pub inner_replicas: usize,
}

/// D^order P_t h(x) in the given directions (u for order 1, (u,v) for
/// order 2, (u,v,w) for order 3).
pub fn elworthy_li(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    t: f64,
    order: u8,
    dirs: &Directions,
    dt: f64,
    budget: &BelBudget,
    seed: u64,
) -> Result<DerivativeEstimate> {
    if t <= 0.0 {
        return Err(Error::Config("elworthy_li requires t > 0".into()));
    }
    if !h.smooth || h.grad_h.is_none() {
        return Err(Error::Config(
            "derivative estimators need a smooth h with grad_h".into(),
        ));
    }
    budget.check()?;
    let vals: Vec<f64> = match order {
        1 => {
            let replicas = budget.outer * budget.inner;
            par_map((0..replicas).collect(), |r| {
                d1_single(spec, h, x, &dirs.u, t, dt, derive_seed(seed, "bel1", r as u64))
            })
            .into_iter()
            .collect::<Result<_>>()?
        }
        2 => par_map((0..budget.outer).collect(), |r| {
            d2_outer_path(
                spec,
                h,
                x,
                &dirs.u,
                &dirs.v,
                t,
                dt,
                budget,
                derive_seed(seed, "bel2", r as u64),
            )
        })
        .into_iter()
        .collect::<Result<_>>()?,
        3 => par_map((0..budget.outer).collect(), |r| {
            d3_outer_path(
                spec,
                h,
                x,
                dirs,
                t,
                dt,
                budget,
                derive_seed(seed, "bel3", r as u64),
            )
        })
        .into_iter()
        .collect::<Result<_>>()?,
        _ => return Err(Error::Config(format!("order must be 1..=3, got {order}"))),
    };
    let (value, std_error) = mean_se(&vals);
    Ok(DerivativeEstimate {
        order,
        value,
        std_error,
        t,
        outer_replicas: budget.outer,
        inner_replicas: budget.inner,
    })
}

/// One chain-rule sample of D_z P_t h(x).
fn d1_single(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    z: &[f64],
    t: f64,
    dt: f64,
    seed: u64,
) -> Result<f64> {
    let steps = (t / dt).round().max(1.0) as usize;
    let mut rng = stream(seed, "d1", 0);
    let mut state = FlowState::new(spec, x, &Directions::single(z.to_vec()));
    for _ in 0..steps {
        advance_flow(spec, &mut state, dt, VariationDepth::First, &mut rng)?;
    }
    Ok(dot(&h.grad(&state.x), &state.u1[0]))
}

/// Inner mean of D_z P_tau h(y) over `replicas` fresh paths. Zero direction
/// short-circuits: the first variation started at 0 stays 0.
fn d1_mean(
    spec: &PotentialSpec,
    h: &TestFunction,
    y: &[f64],
    z: &[f64],
    tau: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<f64> {
    if norm(z) == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for r in 0..replicas {
        acc += d1_single(spec, h, y, z, tau, dt, derive_seed(seed, "d1-inner", r as u64))?;
    }
    Ok(acc / replicas as f64)
}

/// Subsampled record of one outer path: times, states, and the carried
/// variation vectors needed by the time integrals.
struct OuterRecord {
    times: Vec<f64>,
    xs: Vec<Vec<f64>>,
    u2_uv: Vec<Vec<f64>>,
    u1_w: Vec<Vec<f64>>,
    u3: Vec<Vec<f64>>,
    end: FlowState,
}

fn run_outer_half(
    spec: &PotentialSpec,
    x: &[f64],
    dirs: &Directions,
    half_t: f64,
    dt: f64,
    stride: usize,
    depth: VariationDepth,
    seed: u64,
) -> Result<OuterRecord> {
    let steps = (half_t / dt).round().max(1.0) as usize;
    let mut rng = stream(seed, "bel-outer", 0);
    let mut state = FlowState::new(spec, x, dirs);
    let mut rec = OuterRecord {
        times: Vec::new(),
        xs: Vec::new(),
        u2_uv: Vec::new(),
        u1_w: Vec::new(),
        u3: Vec::new(),
        end: FlowState::new(spec, x, dirs),
    };
    let record = |state: &FlowState, rec: &mut OuterRecord| {
        rec.times.push(state.t);
        rec.xs.push(state.x.clone());
        rec.u2_uv.push(state.u2[0].clone());
        rec.u1_w.push(state.u1[2].clone());
        rec.u3.push(state.u3.clone());
    };
    record(&state, &mut rec);
    for k in 1..=steps {
        advance_flow(spec, &mut state, dt, depth, &mut rng)?;
        if k % stride == 0 || k == steps {
            record(&state, &mut rec);
        }
    }
    rec.end = state;
    Ok(rec)
}

fn trapezoid(times: &[f64], values: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (values[i] + values[i - 1]);
    }
    acc
}

/// One outer sample of the two-term order-2 representation.
#[allow(clippy::too_many_arguments)]
fn d2_outer_path(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    u: &[f64],
    v: &[f64],
    t: f64,
    dt: f64,
    budget: &BelBudget,
    seed: u64,
) -> Result<f64> {
    let dirs = Directions {
        u: u.to_vec(),
        v: v.to_vec(),
        w: v.to_vec(),
    };
    let rec = run_outer_half(
        spec,
        x,
        &dirs,
        t / 2.0,
        dt,
        budget.sub_stride,
        VariationDepth::Second,
        seed,
    )?;
    let half_t = rec.end.t;
    let i_v = rec.end.m_int[1] / (std::f64::consts::SQRT_2 * half_t);

    // Term 1: D P_{t/2} h(X_{t/2})[U_u(t/2)] I_v(t/2).
    let d1_end = d1_mean(
        spec,
        h,
        &rec.end.x,
        &rec.end.u1[0],
        t / 2.0,
        dt,
        budget.inner,
        derive_seed(seed, "bel2-end", 0),
    )?;
    let term1 = d1_end * i_v;

    // Term 2: (2/t) int_0^{t/2} D P_{t-s} h(X_s)[U_{u,v}(s)] ds.
    let mut integrand = Vec::with_capacity(rec.times.len());
    for (j, s) in rec.times.iter().enumerate() {
        let val = d1_mean(
            spec,
            h,
            &rec.xs[j],
            &rec.u2_uv[j],
            t - s,
            dt,
            budget.inner,
            derive_seed(seed, "bel2-int", j as u64),
        )?;
        integrand.push(val);
    }
    let term2 = (2.0 / t) * trapezoid(&rec.times, &integrand);
    Ok(term1 + term2)
}

/// Mean-only order-2 estimate (used inside order 3).
#[allow(clippy::too_many_arguments)]
fn d2_mean(
    spec: &PotentialSpec,
    h: &TestFunction,
    y: &[f64],
    a: &[f64],
    b: &[f64],
    tau: f64,
    dt: f64,
    budget: &BelBudget,
    seed: u64,
) -> Result<f64> {
    if norm(a) == 0.0 || norm(b) == 0.0 {
        return Ok(0.0);
    }
    let mut acc = 0.0;
    for r in 0..budget.outer {
        acc += d2_outer_path(
            spec,
            h,
            y,
            a,
            b,
            tau,
            dt,
            budget,
            derive_seed(seed, "d2-mean", r as u64),
        )?;
    }
    Ok(acc / budget.outer as f64)
}

/// One outer sample of the five-term order-3 representation.
fn d3_outer_path(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    dirs: &Directions,
    t: f64,
    dt: f64,
    budget: &BelBudget,
    seed: u64,
) -> Result<f64> {
    let rec = run_outer_half(
        spec,
        x,
        dirs,
        t / 2.0,
        dt,
        budget.sub_stride,
        VariationDepth::Third,
        seed,
    )?;
    let half_t = rec.end.t;
    let i_w = rec.end.m_int[2] / (std::f64::consts::SQRT_2 * half_t);
    let nested = budget.nested();

    // K1 = E D^2 P_{t/2} h(X_{t/2})[U_u, U_v] I_w.
    let k1 = d2_mean(
        spec,
        h,
        &rec.end.x,
        &rec.end.u1[0],
        &rec.end.u1[1],
        t / 2.0,
        dt,
        &nested,
        derive_seed(seed, "bel3-k1", 0),
    )? * i_w;

    // K2 = E D P_{t/2} h(X_{t/2})[U_{u,v}] I_w.
    let k2 = d1_mean(
        spec,
        h,
        &rec.end.x,
        &rec.end.u2[0],
        t / 2.0,
        dt,
        budget.inner,
        derive_seed(seed, "bel3-k2", 0),
    )? * i_w;

    // K3 = (2/t) int D P_{t-s} h(X_s)[U_{u,v,w}(s)] ds.
    let mut k3_vals = Vec::with_capacity(rec.times.len());
    for (j, s) in rec.times.iter().enumerate() {
        k3_vals.push(d1_mean(
            spec,
            h,
            &rec.xs[j],
            &rec.u3[j],
            t - s,
            dt,
            budget.inner,
            derive_seed(seed, "bel3-k3", j as u64),
        )?);
    }
    let k3 = (2.0 / t) * trapezoid(&rec.times, &k3_vals);

    // K4(u,v,w) + K4(v,u,w): two passes with independent inner noise; the
    // carried U_{u,v} equals U_{v,u} so both use the recorded vector.
    let mut k4 = 0.0;
    for pass in 0..2u64 {
        let mut vals = Vec::with_capacity(rec.times.len());
        for (j, s) in rec.times.iter().enumerate() {
            vals.push(d2_mean(
                spec,
                h,
                &rec.xs[j],
                &rec.u2_uv[j],
                &rec.u1_w[j],
                t - s,
                dt,
                &nested,
                derive_seed(seed, "bel3-k4", pass * 10_000 + j as u64),
            )?);
        }
        k4 += (2.0 / t) * trapezoid(&rec.times, &vals);
    }

    Ok(k1 + k2 + k3 + k4)
}

/// Central finite difference of P_t h along u with common random numbers:
/// the independent oracle for the order-1 estimator. Returns (value, se).
#[allow(clippy::too_many_arguments)]
pub fn finite_difference_d1(
    spec: &PotentialSpec,
    h: &TestFunction,
    x: &[f64],
    u: &[f64],
    eps: f64,
    t: f64,
    dt: f64,
    replicas: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let steps = (t / dt).round().max(1.0) as usize;
    let dirs = Directions::single(u.to_vec());
    let vals: Vec<Result<f64>> = par_map((0..replicas).collect(), |r| {
        let xp: Vec<f64> = x.iter().zip(u).map(|(c, d)| c + eps * d).collect();
        let xm: Vec<f64> = x.iter().zip(u).map(|(c, d)| c - eps * d).collect();
        let mut hp = f64::NAN;
        let mut hm = f64::NAN;
        for (start, out) in [(&xp, &mut hp), (&xm, &mut hm)] {
            let mut rng = stream(seed, "fd-crn", r as u64);
            let mut state = FlowState::new(spec, start, &dirs);
            for _ in 0..steps {
                advance_flow(spec, &mut state, dt, VariationDepth::XOnly, &mut rng)?;
            }
            *out = h.eval(&state.x);
        }
        Ok((hp - hm) / (2.0 * eps))
    });
    let vals: Vec<f64> = vals.into_iter().collect::<Result<_>>()?;
    Ok(mean_se(&vals))
}
