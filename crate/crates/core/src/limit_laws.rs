//! Exact samplers and integrators for the limiting laws: the quartic law
//! mu ~ exp(-a_N |x|^4) at criticality and the standard Gaussian below it.
//!
//! The quartic radial decomposition is exact: if |Y|^4 ~ Gamma(N/4, rate a_N)
//! and the direction is uniform on the sphere, then Y has density
//! proportional to exp(-a_N |x|^4). All radial moments have the closed form
//! E|Y|^k = a^{-k/4} Gamma((N+k)/4) / Gamma(N/4).

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::norm;
use crate::quad;
use crate::rng::stream;
use crate::specfun::ModelFunctions;

/// Uniform direction on S^{dim-1}: normalized vector of standard Gaussians.
pub fn uniform_direction<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&v);
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// The critical limit law with density proportional to exp(-a_N |x|^4).
#[derive(Debug, Clone)]
pub struct QuarticLaw {
    pub n_dim: usize,
    pub a: f64,
    pub log_normalizer: f64,
}

impl QuarticLaw {
    pub fn new(n_dim: u32) -> Result<Self> {
        let a = ModelFunctions::new(n_dim)?.a_n;
        let n = n_dim as f64;
        // Closed form: Z = surface(S^{N-1}) * Gamma(N/4) / (4 a^{N/4}).
        let log_surface = (n / 2.0) * std::f64::consts::PI.ln() + 2.0_f64.ln() - ln_gamma(n / 2.0);
        let log_z = log_surface + ln_gamma(n / 4.0) - (4.0_f64).ln() - (n / 4.0) * a.ln();

        // Independent quadrature route for the same normalizer.
        let r_max = tail_radius(a, n_dim as usize + 6);
        let radial = quad::integrate(
            |r| r.powi(n_dim as i32 - 1) * (-a * r.powi(4)).exp(),
            0.0,
            r_max,
            1e-12,
            0.0,
        );
        let log_z_quad = log_surface + radial.value.ln();
        let rel = ((log_z_quad - log_z).exp() - 1.0).abs();
        if rel > 1e-8 {
            return Err(Error::IntegrationFailure {
                disagreement: rel,
                tolerance: 1e-8,
            });
        }

        Ok(QuarticLaw {
            n_dim: n_dim as usize,
            a,
            log_normalizer: log_z,
        })
    }

    /// Exact k-th radial moment E|Y|^k = a^{-k/4} Gamma((N+k)/4) / Gamma(N/4).
    pub fn radial_moment(&self, k: u32) -> f64 {
        let n = self.n_dim as f64;
        let k = f64::from(k);
        (-k / 4.0 * self.a.ln() + ln_gamma((n + k) / 4.0) - ln_gamma(n / 4.0)).exp()
    }

    /// i.i.d. draws: radius R = G^{1/4} with G ~ Gamma(N/4, rate a), uniform
    /// direction. Gamma generation is Marsaglia-Tsang with the shape < 1
    /// boost (N = 2 and N = 3 hit the boost path).
    pub fn sample(&self, count: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = stream(seed, "quartic-law", 0);
        let gamma = Gamma::new(self.n_dim as f64 / 4.0, 1.0 / self.a)
            .expect("shape and scale are positive");
        (0..count)
            .map(|_| {
                let g: f64 = gamma.sample(&mut rng);
                let r = g.powf(0.25);
                let mut dir = uniform_direction(self.n_dim, &mut rng);
                for c in dir.iter_mut() {
                    *c *= r;
                }
                dir
            })
            .collect()
    }

    /// Radii |Y| only; same law as the norms of [`QuarticLaw::sample`].
    pub fn sample_radii(&self, count: usize, seed: u64) -> Vec<f64> {
        let mut rng = stream(seed, "quartic-law-radii", 0);
        let gamma = Gamma::new(self.n_dim as f64 / 4.0, 1.0 / self.a)
            .expect("shape and scale are positive");
        (0..count)
            .map(|_| {
                let g: f64 = gamma.sample(&mut rng);
                g.powf(0.25)
            })
            .collect()
    }

    /// mu(h) with a reported error estimate.
    pub fn expectation(&self, h: Integrand<'_>) -> Result<Expectation> {
        match h {
            Integrand::Radial(f) => self.expectation_radial(f),
            Integrand::General(f) => self.expectation_general(f),
        }
    }

    /// Spherical-shell quadrature by two independent routes: the raw radial
    /// integral in r and the substituted integral in u = r^2.
    fn expectation_radial(&self, h: &(dyn Fn(f64) -> f64 + Sync)) -> Result<Expectation> {
        let n = self.n_dim as f64;
        let a = self.a;
        let r_max = tail_radius(a, self.n_dim + 6);

        let w = |r: f64| r.powf(n - 1.0) * (-a * r.powi(4)).exp();
        let za = quad::integrate(w, 0.0, r_max, 1e-12, 0.0);
        let na = quad::integrate(|r| h(r) * w(r), 0.0, r_max, 1e-12, 0.0);
        let route_a = na.value / za.value;

        // u = r^2: weight u^{(N-2)/2} e^{-a u^2} / 2, smooth for N >= 2.
        let wu = |u: f64| 0.5 * u.powf((n - 2.0) / 2.0) * (-a * u * u).exp();
        let zb = quad::integrate(wu, 0.0, r_max * r_max, 1e-12, 0.0);
        let nb = quad::integrate(|u: f64| h(u.sqrt()) * wu(u), 0.0, r_max * r_max, 1e-12, 0.0);
        let route_b = nb.value / zb.value;

        let scale = route_a.abs().max(route_b.abs()).max(1.0);
        let quad_err = (na.error + za.error + nb.error + zb.error) / za.value.min(zb.value);
        let tolerance = 1e-9 * scale + 10.0 * quad_err;
        let disagreement = (route_a - route_b).abs();
        if disagreement > tolerance {
            return Err(Error::IntegrationFailure {
                disagreement,
                tolerance,
            });
        }
        Ok(Expectation {
            value: route_a,
            error: disagreement + quad_err,
        })
    }

    /// Low-discrepancy sampling transported through the exact radial law
    /// (inverse CDF of Gamma(N/4, a) for r^4, Gaussian quantiles for the
    /// direction), cross-checked against a plain Monte Carlo estimate.
    fn expectation_general(&self, h: &(dyn Fn(&[f64]) -> f64 + Sync)) -> Result<Expectation> {
        use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal};

        let points = 100_000usize;
        let gamma = GammaDist::new(self.n_dim as f64 / 4.0, self.a)
            .map_err(|e| Error::Domain(format!("gamma law: {e}")))?;
        let normal = Normal::standard();

        let primes = [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31];
        assert!(self.n_dim + 1 <= primes.len());

        let mut qmc_sum = 0.0;
        let mut block_means = [0.0f64; 8];
        let block = points / 8;
        for i in 0..points {
            // Halton point, skipping index 0.
            let idx = (i + 1) as u64;
            let u0 = van_der_corput(idx, primes[0]);
            let s = gamma.inverse_cdf(clamp_unit(u0));
            let r = s.powf(0.25);
            let mut x = vec![0.0; self.n_dim];
            for d in 0..self.n_dim {
                x[d] = normal.inverse_cdf(clamp_unit(van_der_corput(idx, primes[d + 1])));
            }
            let nx = norm(&x);
            for c in x.iter_mut() {
                *c *= r / nx;
            }
            let v = h(&x);
            qmc_sum += v;
            block_means[(i / block).min(7)] += v;
        }
        let qmc = qmc_sum / points as f64;
        for b in block_means.iter_mut() {
            *b /= block as f64;
        }
        let spread = block_means
            .iter()
            .map(|b| (b - qmc) * (b - qmc))
            .sum::<f64>()
            .sqrt()
            / 8.0_f64.sqrt();

        // Plain Monte Carlo as the second internal estimate.
        let mc_points = self.sample(points, 0x6d63);
        let mc_vals: Vec<f64> = mc_points.iter().map(|p| h(p)).collect();
        let (mc, mc_se) = crate::stats::mean_se(&mc_vals);

        let disagreement = (qmc - mc).abs();
        let tolerance = 6.0 * (mc_se + spread) + 1e-9 * qmc.abs().max(1.0);
        if disagreement > tolerance {
            return Err(Error::IntegrationFailure {
                disagreement,
                tolerance,
            });
        }
        Ok(Expectation {
            value: qmc,
            error: disagreement.max(spread),
        })
    }
}

/// Test function input for [`QuarticLaw::expectation`].
pub enum Integrand<'a> {
    /// h depends on |x| only.
    Radial(&'a (dyn Fn(f64) -> f64 + Sync)),
    /// Arbitrary h on R^N.
    General(&'a (dyn Fn(&[f64]) -> f64 + Sync)),
}

#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub value: f64,
    pub error: f64,
}

/// Smallest radius R with a R^4 - p ln(1 + R) > 41.4 (~ln 1e18), so the
/// truncated tail of r^p e^{-a r^4} is below 1e-16 of any desk-scale value.
fn tail_radius(a: f64, poly_degree: usize) -> f64 {
    let p = poly_degree as f64;
    let mut r = 1.0f64;
    while a * r.powi(4) - p * (1.0 + r).ln() < 41.4 {
        r += 0.25;
    }
    r
}

fn van_der_corput(mut n: u64, base: u64) -> f64 {
    let mut q = 0.0;
    let mut bk = 1.0 / base as f64;
    while n > 0 {
        q += (n % base) as f64 * bk;
        n /= base;
        bk /= base as f64;
    }
    q
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(1e-12, 1.0 - 1e-12)
}

/// i.i.d. standard Gaussian vectors in R^dim.
pub fn sample_gauss(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed, "gauss", 0);
    (0..count)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect()
}
