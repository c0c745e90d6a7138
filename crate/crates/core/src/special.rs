//! Special functions: chi-square CDF via the regularized incomplete gamma,
//! standard normal CDF/quantile/density, and normalized Legendre polynomials
//! on [0,1].

use crate::error::{Error, Result};

const GAMMA_EPS: f64 = 1e-14;
const GAMMA_MAX_ITER: usize = 500;

/// ln Γ(x) by the Lanczos approximation (g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x).
///
/// Power series for x < a + 1, Lentz continued fraction for the upper tail
/// otherwise.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p: shape must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        // series: P(a,x) = x^a e^-x / Γ(a) * sum x^n / (a(a+1)...(a+n))
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                break;
            }
        }
        sum * (a * x.ln() - x - ln_gamma(a)).exp()
    } else {
        // modified Lentz for the continued fraction of Q(a,x)
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..=GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                break;
            }
        }
        let q = (a * x.ln() - x - ln_gamma(a)).exp() * h;
        1.0 - q
    }
}

/// Chi-square CDF with k degrees of freedom. Negative x clamps to 0.
pub fn chi2_cdf(x: f64, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("chi2_cdf: degrees of freedom must be >= 1".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if k == 2 {
        return Ok(1.0 - (-x / 2.0).exp());
    }
    Ok(gamma_p(k as f64 / 2.0, x / 2.0).clamp(0.0, 1.0))
}

/// Standard normal CDF, expressed through the incomplete gamma so the center
/// is exact and the tails inherit the gamma code's accuracy.
pub fn normal_cdf(x: f64) -> f64 {
    if x == 0.0 {
        return 0.5;
    }
    let half_p = 0.5 * gamma_p(0.5, 0.5 * x * x);
    if x > 0.0 {
        0.5 + half_p
    } else {
        0.5 - half_p
    }
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile: Acklam's rational approximation polished with a
/// single Newton step against `normal_cdf`.
pub fn normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Domain(format!("normal_quantile: u={u} outside (0,1)")));
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const U_LOW: f64 = 0.02425;

    let x = if u < U_LOW {
        let q = (-2.0 * u.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if u <= 1.0 - U_LOW {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - u).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // one Newton refinement
    let e = normal_cdf(x) - u;
    let pdf = normal_pdf(x);
    if pdf > 0.0 {
        Ok(x - e / pdf)
    } else {
        Ok(x)
    }
}

/// Normalized Legendre polynomial on [0,1]:
/// b_j(x) = sqrt(2j+1) P_j(2x-1), orthonormal for the L2 inner product.
pub fn legendre_b(j: usize, x: f64) -> Result<f64> {
    if j == 0 {
        return Err(Error::InvalidParameter("legendre_b: order must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("legendre_b: x={x} outside [0,1]")));
    }
    let u = 2.0 * x - 1.0;
    let mut prev = 1.0; // P_0
    let mut cur = u; // P_1
    for k in 1..j {
        let next = ((2 * k + 1) as f64 * u * cur - k as f64 * prev) / (k + 1) as f64;
        prev = cur;
        cur = next;
    }
    Ok(((2 * j + 1) as f64).sqrt() * cur)
}

/// Evaluate b_1(x) .. b_dmax(x) in one recurrence pass into `out`.
///
/// Caller guarantees x in [0,1]; this is the inner loop of the smooth
/// statistics.
pub(crate) fn legendre_b_all(x: f64, out: &mut [f64]) {
    let u = 2.0 * x - 1.0;
    let mut prev = 1.0;
    let mut cur = u;
    for (j, slot) in out.iter_mut().enumerate() {
        let order = j + 1;
        *slot = ((2 * order + 1) as f64).sqrt() * cur;
        let k = order as f64;
        let next = ((2.0 * k + 1.0) * u * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn chi2_basics() {
        assert_eq!(chi2_cdf(0.0, 2).unwrap(), 0.0);
        assert_close(chi2_cdf(2.0 * 2f64.ln(), 2).unwrap(), 0.5, 1e-15);
        assert_close(chi2_cdf(5.991465, 2).unwrap(), 0.95, 1e-6);
        assert_close(chi2_cdf(3.841459, 1).unwrap(), 0.95, 1e-6);
        assert!(chi2_cdf(1.0, 0).is_err());
        assert_eq!(chi2_cdf(-3.0, 4).unwrap(), 0.0);
    }

    #[test]
    fn chi2_df1_matches_erf_series() {
        // independent oracle: P(1/2, x/2) = erf(sqrt(x/2)) by Taylor series
        let erf = |z: f64| {
            let mut term = z;
            let mut sum = z;
            for n in 1..200 {
                term *= -z * z / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            2.0 / std::f64::consts::PI.sqrt() * sum
        };
        for &x in &[0.1, 0.5, 1.0, 2.0, 3.841459, 6.0] {
            assert_close(chi2_cdf(x, 1).unwrap(), erf((x / 2.0).sqrt()), 1e-12);
        }
    }

    #[test]
    fn chi2_closed_form_df2() {
        let mut x = 0.0;
        while x <= 100.0 {
            let got = chi2_cdf(x, 2).unwrap();
            let want = 1.0 - (-x / 2.0).exp();
            assert_close(got, want, 1e-15);
            x += 0.37;
        }
    }

    #[test]
    fn chi2_monotone_bounded() {
        for &k in &[1usize, 2, 3, 5, 10] {
            let mut last = 0.0;
            let mut x = 0.0;
            while x <= 60.0 {
                let v = chi2_cdf(x, k).unwrap();
                assert!((0.0..=1.0).contains(&v));
                assert!(v >= last - 1e-15);
                last = v;
                x += 0.111;
            }
        }
    }

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert_close(normal_cdf(1.959964), 0.975, 1e-6);
        assert_close(normal_cdf(-1.959964), 0.025, 1e-6);
        // high-precision reference values (15-digit erf tables)
        assert_close(normal_cdf(1.0), 0.841344746068543, 1e-12);
        assert_close(normal_cdf(2.0), 0.977249868051821, 1e-12);
        assert_close(normal_cdf(-3.0), 1.349898031630095e-3, 1e-12);
    }

    #[test]
    fn quantile_roundtrip() {
        assert!(normal_quantile(0.0).is_err());
        assert!(normal_quantile(1.0).is_err());
        assert_close(normal_quantile(0.5).unwrap(), 0.0, 1e-12);
        let mut u = 1e-10;
        while u < 1.0 {
            let x = normal_quantile(u).unwrap();
            assert_close(normal_cdf(x), u, 1e-9);
            u = if u < 0.001 { u * 3.0 } else { u + 0.0137 };
        }
        for &u in &[1e-10, 1.0 - 1e-10] {
            let x = normal_quantile(u).unwrap();
            assert_close(normal_cdf(x), u, 1e-9);
        }
    }

    #[test]
    fn legendre_values() {
        assert_close(legendre_b(1, 0.5).unwrap(), 0.0, 1e-15);
        assert_close(legendre_b(1, 1.0).unwrap(), 3f64.sqrt(), 1e-14);
        assert_close(legendre_b(2, 0.0).unwrap(), 5f64.sqrt(), 1e-14);
        // b_3(0.25) = sqrt(7) P_3(-0.5), P_3(u) = (5u^3 - 3u)/2
        let u: f64 = -0.5;
        let p3 = (5.0 * u.powi(3) - 3.0 * u) / 2.0;
        assert_close(legendre_b(3, 0.25).unwrap(), 7f64.sqrt() * p3, 1e-14);
        assert_close(p3, 0.4375, 1e-15);
        assert!(legendre_b(1, -0.1).is_err());
        assert!(legendre_b(1, 1.1).is_err());
        assert!(legendre_b(0, 0.5).is_err());
    }

    #[test]
    fn legendre_all_matches_single() {
        let mut buf = [0.0; 10];
        for &x in &[0.0, 0.12, 0.5, 0.77, 1.0] {
            legendre_b_all(x, &mut buf);
            for j in 1..=10 {
                assert_close(buf[j - 1], legendre_b(j, x).unwrap(), 1e-13);
            }
        }
    }

    #[test]
    fn legendre_orthonormal_gauss() {
        // 64-point Gauss-Legendre nodes on [-1,1] by Newton on P_64
        let m = 64usize;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 1..m {
                    let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 1..m {
                let p2 = ((2 * k + 1) as f64 * x * p1 - k as f64 * p0) / (k + 1) as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        for i in 1..=10 {
            for j in 1..=10 {
                let integral: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(&t, &w)| {
                        let x01 = 0.5 * (t + 1.0);
                        0.5 * w * legendre_b(i, x01).unwrap() * legendre_b(j, x01).unwrap()
                    })
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert_close(integral, want, 1e-10);
            }
        }
    }
}
