//! The Bessel-type series U_nu and the conditional-moment functions f_N, g_N.
//!
//! U_nu(x) = sum_{k>=0} x^{2k} / (2^{2k} k! (nu+1)^(k)), with (theta)^(k) the
//! rising factorial. In terms of the modified Bessel function of the first
//! kind, U_nu(x) = Gamma(nu+1) (2/x)^nu I_nu(x); working with U_nu directly
//! avoids the 0/0 at x = 0. The spin model consumes the ratios
//!
//!   f_N(x) = U_{N/2}(N x) / U_{N/2-1}(N x)
//!   g_N(x) = N/(N+2) * U_{N/2+1}(N x) / U_{N/2-1}(N x)
//!
//! which satisfy f_N(x) + x^2 g_N(x) = 1; the identity is verified
//! numerically throughout rather than assumed on either side.

use crate::error::{Error, Result};

/// Relative cutoff for series truncation: stop once term < EPS * partial sum.
const SERIES_EPS: f64 = 1e-16;

/// Hard cap on summed terms; the arguments used by the spin model
/// (|N x| <= 10) converge in a few dozen terms.
const MAX_TERMS: usize = 500;

/// Above this |x| the intermediate powers risk overflow/accuracy loss and a
/// Bessel-oracle evaluation should be used instead.
pub const SERIES_SAFETY_THRESHOLD: f64 = 50.0;

/// Result of a truncated series evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesEval {
    pub value: f64,
    pub terms_used: usize,
    /// Absolute bound from the first neglected term.
    pub truncation_bound: f64,
}

/// U_nu evaluated by the term recurrence
/// term_{k+1} = term_k * x^2 / (4 (k+1) (nu+1+k)).
pub fn u_nu(nu: f64, x: f64) -> Result<SeriesEval> {
    if !(nu > -1.0) {
        return Err(Error::Domain(format!("u_nu requires nu > -1, got {nu}")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("u_nu requires finite x, got {x}")));
    }
    if x.abs() > SERIES_SAFETY_THRESHOLD {
        return Err(Error::SeriesOverflow {
            x,
            threshold: SERIES_SAFETY_THRESHOLD,
        });
    }
    let x2 = x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut k = 0usize;
    loop {
        let next = term * x2 / (4.0 * (k as f64 + 1.0) * (nu + 1.0 + k as f64));
        if next < SERIES_EPS * sum || k + 1 >= MAX_TERMS {
            return Ok(SeriesEval {
                value: sum,
                terms_used: k + 1,
                truncation_bound: next,
            });
        }
        sum += next;
        term = next;
        k += 1;
    }
}

/// Carries the dimension N and the quartic coefficient a_N = N^2/(4N+8).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelFunctions {
    pub n_dim: u32,
    pub a_n: f64,
}

impl ModelFunctions {
    pub fn new(n_dim: u32) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::Domain(format!("N must be >= 2, got {n_dim}")));
        }
        // Exact integer numerator/denominator, one final division.
        let num = u64::from(n_dim) * u64::from(n_dim);
        let den = 4 * u64::from(n_dim) + 8;
        Ok(ModelFunctions {
            n_dim,
            a_n: num as f64 / den as f64,
        })
    }

    /// f_N alone; prefer [`ModelFunctions::fg`] when both are needed.
    pub fn f(&self, x: f64) -> Result<f64> {
        Ok(self.fg(x)?.f)
    }

    /// g_N alone.
    pub fn g(&self, x: f64) -> Result<f64> {
        Ok(self.fg(x)?.g)
    }

    /// Fused evaluation of f_N and g_N, sharing the three U evaluations.
    /// Domain [0, 1]: the spin model only ever evaluates at |m| <= 1.
    pub fn fg(&self, x: f64) -> Result<FgEval> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain(format!(
                "f_N/g_N argument {x} outside [0,1]; use fg_extended for other ranges"
            )));
        }
        self.fg_extended(x)
    }

    /// Same as [`ModelFunctions::fg`] without the [0, 1] domain guard.
    pub fn fg_extended(&self, x: f64) -> Result<FgEval> {
        let n = f64::from(self.n_dim);
        let arg = n * x;
        let lo = u_nu(n / 2.0 - 1.0, arg)?;
        let mid = u_nu(n / 2.0, arg)?;
        let hi = u_nu(n / 2.0 + 1.0, arg)?;
        Ok(FgEval {
            f: mid.value / lo.value,
            g: n / (n + 2.0) * hi.value / lo.value,
        })
    }

    /// Difference between f_N and its quartic Taylor polynomial
    /// 1 - N x^2/(N+2) + 2 N^2 x^4 / ((N+2)(N+4)); O(x^6) near the origin.
    pub fn f_taylor_remainder(&self, x: f64) -> Result<f64> {
        if x.abs() > 0.25 {
            return Err(Error::Domain(format!(
                "taylor check restricted to |x| <= 0.25, got {x}"
            )));
        }
        let n = f64::from(self.n_dim);
        let poly = 1.0 - n * x * x / (n + 2.0)
            + 2.0 * n * n * x.powi(4) / ((n + 2.0) * (n + 4.0));
        Ok(self.fg_extended(x)?.f - poly)
    }
}

/// f and g at a shared argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FgEval {
    pub f: f64,
    pub g: f64,
}

/// One row of the `specfun-table` CSV.
#[derive(Debug, Clone, Copy)]
pub struct TableRow {
    pub x: f64,
    pub f: f64,
    pub g: f64,
    pub identity_residual: f64,
    pub taylor_residual: Option<f64>,
}

/// Uniform grid of f/g values on [0, 1] with the identity and Taylor
/// residuals, as emitted by `specfun-table`.
pub fn table(model: &ModelFunctions, grid: usize) -> Result<Vec<TableRow>> {
    if grid < 2 {
        return Err(Error::Config(format!("grid must be >= 2, got {grid}")));
    }
    let mut rows = Vec::with_capacity(grid);
    for i in 0..grid {
        let x = i as f64 / (grid - 1) as f64;
        let fg = model.fg(x)?;
        let taylor = if x <= 0.25 {
            Some(model.f_taylor_remainder(x)?)
        } else {
            None
        };
        rows.push(TableRow {
            x,
            f: fg.f,
            g: fg.g,
            identity_residual: fg.f + x * x * fg.g - 1.0,
            taylor_residual: taylor,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::ols_slope;

    /// Independent route: rising factorial accumulated separately from the
    /// term recurrence used by `u_nu`.
    fn u_nu_direct(nu: f64, x: f64, terms: usize) -> f64 {
        let mut sum = 0.0;
        let mut pow = 1.0; // x^{2k} / 2^{2k}
        let mut fact = 1.0; // k!
        let mut rising = 1.0; // (nu+1)^(k)
        for k in 0..terms {
            if k > 0 {
                pow *= x * x / 4.0;
                fact *= k as f64;
                rising *= nu + k as f64;
            }
            sum += pow / (fact * rising);
        }
        sum
    }

    #[test]
    fn u_at_zero_is_one() {
        for nu in [-0.9, -0.5, 0.0, 0.5, 1.0, 4.5, 10.0] {
            let e = u_nu(nu, 0.0).unwrap();
            assert_eq!(e.value, 1.0);
            assert_eq!(e.terms_used, 1);
        }
    }

    #[test]
    fn collapses_to_sinh_and_cosh() {
        // (3/2)^(k) = (2k+1)!/(4^k k!) collapses U_{1/2} to sinh(x)/x.
        let s = u_nu(0.5, 1.0).unwrap().value;
        assert!((s - 1.0f64.sinh()).abs() < 1e-14, "got {s}");
        // (1/2)^(k) = (2k)!/(4^k k!) collapses U_{-1/2} to cosh(x).
        let c = u_nu(-0.5, 1.0).unwrap().value;
        assert!((c - 1.0f64.cosh()).abs() < 1e-14, "got {c}");
        // away from 1 as well
        for x in [0.3, 2.0, 5.0] {
            assert!((u_nu(0.5, x).unwrap().value - x.sinh() / x).abs() < 1e-13);
            assert!((u_nu(-0.5, x).unwrap().value - x.cosh()).abs() * x.cosh().recip() < 1e-13);
        }
    }

    #[test]
    fn matches_independent_summation() {
        for &nu in &[0.0, 0.5, 1.0, 2.5, 4.0] {
            for &x in &[0.1, 0.7, 1.0, 3.0, 10.0] {
                let a = u_nu(nu, x).unwrap().value;
                let b = u_nu_direct(nu, x, 120);
                assert!(
                    (a - b).abs() <= 1e-13 * b,
                    "nu={nu} x={x}: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(u_nu(-1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(u_nu(-1.5, 1.0), Err(Error::Domain(_))));
        assert!(matches!(
            u_nu(0.5, 51.0),
            Err(Error::SeriesOverflow { .. })
        ));
        let m = ModelFunctions::new(3).unwrap();
        assert!(m.fg(1.2).is_err());
        assert!(m.fg(-0.1).is_err());
        assert!(m.fg_extended(1.2).is_ok());
        assert!(ModelFunctions::new(1).is_err());
    }

    #[test]
    fn a_n_values() {
        assert_eq!(ModelFunctions::new(2).unwrap().a_n, 0.25);
        assert_eq!(ModelFunctions::new(3).unwrap().a_n, 0.45);
        assert_eq!(ModelFunctions::new(10).unwrap().a_n, 100.0 / 48.0);
    }

    #[test]
    fn f_and_g_at_zero() {
        for n in 2..=10 {
            let m = ModelFunctions::new(n).unwrap();
            let fg = m.fg(0.0).unwrap();
            assert_eq!(fg.f, 1.0);
            let expect_g = f64::from(n) / (f64::from(n) + 2.0);
            assert!((fg.g - expect_g).abs() < 1e-15);
        }
        assert_eq!(ModelFunctions::new(2).unwrap().g(0.0).unwrap(), 0.5);
    }

    #[test]
    fn identity_on_grid() {
        for n in 2..=10 {
            let m = ModelFunctions::new(n).unwrap();
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let fg = m.fg(x).unwrap();
                let residual = fg.f + x * x * fg.g - 1.0;
                assert!(
                    residual.abs() <= 1e-12,
                    "N={n} x={x}: residual {residual:.3e}"
                );
            }
        }
    }

    #[test]
    fn g_from_identity() {
        // g_3(0.4) = (1 - f_3(0.4)) / 0.16, used as an internal oracle.
        let m = ModelFunctions::new(3).unwrap();
        let fg = m.fg(0.4).unwrap();
        assert!((fg.g - (1.0 - fg.f) / 0.16).abs() < 1e-13);
    }

    #[test]
    fn f_strictly_decreasing_on_grid() {
        for n in [2u32, 3, 5, 10] {
            let m = ModelFunctions::new(n).unwrap();
            let mut prev = f64::INFINITY;
            for i in 0..=100 {
                let x = i as f64 / 100.0;
                let f = m.f(x).unwrap();
                assert!(f < prev, "N={n}: f not decreasing at x={x}");
                assert!(f > 0.0 && f <= 1.0);
                prev = f;
            }
        }
    }

    #[test]
    fn taylor_remainder_is_sixth_order() {
        // Exact at the origin.
        assert_eq!(
            ModelFunctions::new(2).unwrap().f_taylor_remainder(0.0).unwrap(),
            0.0
        );
        // |remainder| <= K x^6 with K from a log-log fit; slope >= 5.8.
        for n in [2u32, 3, 5] {
            let m = ModelFunctions::new(n).unwrap();
            let xs: Vec<f64> = (1..=10).map(|i| 0.02 * i as f64).collect();
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let ly: Vec<f64> = xs
                .iter()
                .map(|&x| m.f_taylor_remainder(x).unwrap().abs().ln())
                .collect();
            let slope = ols_slope(&lx, &ly);
            assert!(slope >= 5.8, "N={n}: taylor slope {slope}");
        }
        // Sixth-order scaling: remainder(0.2)/remainder(0.1) near 2^6 within 25%.
        let m = ModelFunctions::new(3).unwrap();
        let ratio = m.f_taylor_remainder(0.2).unwrap() / m.f_taylor_remainder(0.1).unwrap();
        assert!(
            (ratio - 64.0).abs() <= 16.0,
            "sixth-order ratio {ratio} not within 25% of 64"
        );
    }

    #[test]
    fn table_shape() {
        let m = ModelFunctions::new(4).unwrap();
        let rows = table(&m, 11).unwrap();
        assert_eq!(rows.len(), 11);
        assert_eq!(rows[0].x, 0.0);
        assert_eq!(rows[10].x, 1.0);
        assert!(rows[2].taylor_residual.is_some());
        assert!(rows[10].taylor_residual.is_none());
        assert!(table(&m, 1).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(128))]

            // Termwise positivity: U_nu >= 1 and symmetric in x <-> -x.
            #[test]
            fn u_at_least_one_and_even(nu in -0.99f64..20.0, x in -50.0f64..50.0) {
                let v = u_nu(nu, x).unwrap().value;
                prop_assert!(v >= 1.0);
                let w = u_nu(nu, -x).unwrap().value;
                prop_assert_eq!(v, w);
            }

            // Nondecreasing in |x|.
            #[test]
            fn u_monotone_in_abs_x(nu in -0.99f64..20.0, a in 0.0f64..50.0, b in 0.0f64..50.0) {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let ulo = u_nu(nu, lo).unwrap().value;
                let uhi = u_nu(nu, hi).unwrap().value;
                prop_assert!(uhi >= ulo);
            }

            // f_N + x^2 g_N = 1 across the domain and dimensions.
            #[test]
            fn identity_everywhere(n in 2u32..=10, x in 0.0f64..=1.0) {
                let m = ModelFunctions::new(n).unwrap();
                let fg = m.fg(x).unwrap();
                prop_assert!((fg.f + x * x * fg.g - 1.0).abs() <= 1e-12);
            }
        }
    }
}
