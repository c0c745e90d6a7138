//! One-sample Kolmogorov-Smirnov utilities shared by the simulation studies
//! and the test suites.

/// KS distance of sorted values in [0,1] against Unif[0,1].
///
/// Callers push observations through the null CDF first, then sort.
pub fn ks_statistic(sorted_u: &[f64]) -> f64 {
    let n = sorted_u.len() as f64;
    let mut d = 0.0f64;
    for (i, &u) in sorted_u.iter().enumerate() {
        let hi = (i as f64 + 1.0) / n - u;
        let lo = u - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Survival function of the Kolmogorov distribution,
/// Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Approximate p-value of the KS statistic at sample size n
/// (Stephens' finite-sample adjustment).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_sf(d * (sn + 0.12 + 0.11 / sn))
}

/// Critical KS distance at level alpha for sample size n.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    // invert kolmogorov_sf by bisection
    let (mut lo, mut hi) = (0.2, 3.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_sf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = 0.5 * (lo + hi);
    let sn = (n as f64).sqrt();
    lambda / (sn + 0.12 + 0.11 / sn)
}
