//! Means, standard errors, jackknife, and log-log slope fits shared by the
//! rate experiments.

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Mean together with its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    (mean(xs), std_error(xs))
}

/// Ordinary least squares slope of y on x.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let mx = mean(x);
    let my = mean(y);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    sxy / sxx
}

/// Log-log rate estimate over an `n`-grid, with a jackknife confidence
/// interval over replicas.
///
/// `per_replica[r][k]` is replica r's estimate of the expectation at grid
/// point k. The slope is fit by OLS on (log n, log mean-over-replicas); the
/// CI comes from leave-one-replica-out refits.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RateEstimate {
    pub n_grid: Vec<usize>,
    pub values: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub fitted_slope: Option<f64>,
    pub slope_ci: Option<(f64, f64)>,
}

impl RateEstimate {
    pub fn from_replicas(n_grid: Vec<usize>, per_replica: &[Vec<f64>]) -> Self {
        let k = n_grid.len();
        assert!(per_replica.iter().all(|v| v.len() == k));
        let r = per_replica.len();
        let values: Vec<f64> = (0..k)
            .map(|j| mean(&per_replica.iter().map(|v| v[j]).collect::<Vec<_>>()))
            .collect();
        let std_errors: Vec<f64> = (0..k)
            .map(|j| std_error(&per_replica.iter().map(|v| v[j]).collect::<Vec<_>>()))
            .collect();

        if k < 2 {
            return RateEstimate {
                n_grid,
                values,
                std_errors,
                fitted_slope: None,
                slope_ci: None,
            };
        }

        let log_n: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
        let log_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
        let slope = ols_slope(&log_n, &log_v);

        // Jackknife over replicas.
        let ci = if r >= 2 {
            let mut leave_out = Vec::with_capacity(r);
            for drop in 0..r {
                let vals: Vec<f64> = (0..k)
                    .map(|j| {
                        let xs: Vec<f64> = per_replica
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| *i != drop)
                            .map(|(_, v)| v[j])
                            .collect();
                        mean(&xs).ln()
                    })
                    .collect();
                leave_out.push(ols_slope(&log_n, &vals));
            }
            let jbar = mean(&leave_out);
            let var = leave_out
                .iter()
                .map(|s| (s - jbar) * (s - jbar))
                .sum::<f64>()
                * (r as f64 - 1.0)
                / r as f64;
            let half = 1.96 * var.sqrt();
            Some((slope - half, slope + half))
        } else {
            None
        };

        RateEstimate {
            n_grid,
            values,
            std_errors,
            fitted_slope: Some(slope),
            slope_ci: ci,
        }
    }

    /// Single series without replica structure: no CI.
    pub fn from_values(n_grid: Vec<usize>, values: Vec<f64>, std_errors: Vec<f64>) -> Self {
        let slope = if n_grid.len() >= 2 {
            let log_n: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
            let log_v: Vec<f64> = values.iter().map(|v| v.ln()).collect();
            Some(ols_slope(&log_n, &log_v))
        } else {
            None
        };
        RateEstimate {
            n_grid,
            values,
            std_errors,
            fitted_slope: slope,
            slope_ci: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let n_grid = vec![16usize, 32, 64, 128];
        // value = 3 / sqrt(n), two identical replicas
        let row: Vec<f64> = n_grid.iter().map(|&n| 3.0 / (n as f64).sqrt()).collect();
        let est = RateEstimate::from_replicas(n_grid, &[row.clone(), row]);
        let s = est.fitted_slope.unwrap();
        assert!((s + 0.5).abs() < 1e-12, "slope {s}");
        let (lo, hi) = est.slope_ci.unwrap();
        assert!(lo <= s && s <= hi);
    }

    #[test]
    fn degenerate_grid_has_no_slope() {
        let est = RateEstimate::from_replicas(vec![64], &[vec![1.0], vec![1.1]]);
        assert!(est.fitted_slope.is_none());
        assert!(est.slope_ci.is_none());
    }

    #[test]
    fn mean_and_se() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&xs), 2.5);
        let se = std_error(&xs);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-14);
    }
}
