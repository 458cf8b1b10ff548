//! Shared oracles for the integration tests, independent of the library's
//! series implementation.

use critical_on::quad::integrate;
use statrs::function::gamma::ln_gamma;

/// U_nu(x) through the modified-Bessel integral representation
///
///   U_nu(x) = Gamma(nu+1) (2/x)^nu I_nu(x)
///           = Gamma(nu+1) / (Gamma(nu+1/2) Gamma(1/2))
///             * int_{-pi/2}^{pi/2} cos(phi)^{2 nu} e^{x sin phi} dphi
///
/// valid for nu >= 0 (the only orders the spin model uses), evaluated by
/// adaptive quadrature. The route shares nothing with the series evaluation.
pub fn u_nu_bessel_oracle(nu: f64, x: f64) -> f64 {
    assert!(nu >= 0.0, "oracle restricted to nu >= 0");
    let half_pi = std::f64::consts::FRAC_PI_2;
    let integral = integrate(
        |phi: f64| phi.cos().powf(2.0 * nu) * (x * phi.sin()).exp(),
        -half_pi,
        half_pi,
        1e-13,
        0.0,
    );
    let log_prefactor =
        ln_gamma(nu + 1.0) - ln_gamma(nu + 0.5) - ln_gamma(0.5);
    log_prefactor.exp() * integral.value
}

/// A spin configuration whose leave-one-out magnetization at site 0 has an
/// exact target norm along e1: ten fixed spins split between directions at
/// angles +/- phi from e1 with cos(phi) chosen accordingly, at beta = N.
pub fn config_with_target_loo(
    n_dim: usize,
    target: f64,
) -> critical_on::spin::SpinConfig {
    let k = 5;
    let n_sites = 2 * k + 1;
    let cos_phi = target * n_sites as f64 / (2 * k) as f64;
    assert!(cos_phi <= 1.0);
    let sin_phi = (1.0 - cos_phi * cos_phi).sqrt();
    let mut rows = vec![vec![0.0; n_dim]];
    rows[0][0] = 1.0;
    for i in 0..2 * k {
        let mut r = vec![0.0; n_dim];
        r[0] = cos_phi;
        r[1] = if i % 2 == 0 { sin_phi } else { -sin_phi };
        rows.push(r);
    }
    critical_on::spin::SpinConfig::from_spins(n_dim, n_dim as f64, &rows).unwrap()
}
