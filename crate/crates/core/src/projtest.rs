//! The likelihood-projection test for multivariate normality.
//!
//! Residuals are pushed through the chi-square CDF to give values that are
//! uniform under the null; the combined statistic adds a smooth uniformity
//! statistic on those values to rank independence statistics over all
//! component pairs of the residuals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::CriticalTable;
use crate::linalg::{inv_sqrt_spd, residualize, Dataset, SquareSymMatrix, DEFAULT_SINGULAR_TOL};
use crate::neyman::{t1_statistic, SelectionRule, SmoothResult};
use crate::rankdep::t2_statistic;
use crate::samplers::{mvn_sample, RngStream};
use crate::special::chi2_cdf;

/// Full evaluation of the combined statistic on one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub statistic: f64,
    pub t1_part: SmoothResult,
    /// One entry per unordered component pair (s, r), s < r, 0-based.
    pub t2_parts: Vec<((usize, usize), SmoothResult)>,
    pub n: usize,
    pub p: usize,
    pub rule: SelectionRule,
}

impl TestReport {
    /// Machine-readable key=value form, one line.
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "statistic={:.10} n={} p={} rule={} t1={:.10} k1={}",
            self.statistic,
            self.n,
            self.p,
            self.rule.fingerprint(),
            self.t1_part.statistic,
            self.t1_part.order
        );
        for ((a, b), part) in &self.t2_parts {
            s.push_str(&format!(
                " t2_{}{}={:.10} k2_{}{}={}",
                a + 1,
                b + 1,
                part.statistic,
                a + 1,
                b + 1,
                part.order
            ));
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Reject,
    Retain,
}

/// Projected values J_i = chi2_cdf(||z_i||^2, p) on the residualized data.
pub fn mahalanobis_uniforms(data: &Dataset) -> Result<Vec<f64>> {
    let z = residualize(data, DEFAULT_SINGULAR_TOL)?;
    residual_uniforms(&z)
}

fn residual_uniforms(z: &Dataset) -> Result<Vec<f64>> {
    let p = z.p();
    z.rows()
        .map(|row| {
            let w: f64 = row.iter().map(|x| x * x).sum();
            chi2_cdf(w, p)
        })
        .collect()
}

/// The combined test statistic: T1 on the projected values plus T2 over all
/// unordered residual component pairs.
pub fn proj_statistic(data: &Dataset, rule: &SelectionRule) -> Result<TestReport> {
    let (n, p) = (data.n(), data.p());
    if p < 2 {
        return Err(Error::InvalidParameter(format!("dimension {p} < 2")));
    }
    let z = residualize(data, DEFAULT_SINGULAR_TOL)?;
    let j_values = residual_uniforms(&z)?;
    let t1_part = t1_statistic(&j_values, rule)?;
    let mut t2_parts = Vec::with_capacity(p * (p - 1) / 2);
    let columns: Vec<Vec<f64>> = (0..p).map(|j| z.column(j)).collect();
    for s in 0..p {
        for r in (s + 1)..p {
            let part = t2_statistic(&columns[s], &columns[r], rule)?;
            t2_parts.push(((s, r), part));
        }
    }
    let statistic =
        t1_part.statistic + t2_parts.iter().map(|(_, x)| x.statistic).sum::<f64>();
    Ok(TestReport { statistic, t1_part, t2_parts, n, p, rule: *rule })
}

/// Known-parameter probe: per row z = H(x - mean), return
/// zᵀz - (sum_j z_j)^2 / p, which is chi-square with p-1 degrees of freedom
/// under the null.
pub fn theorem2_values(
    data: &Dataset,
    mean: &[f64],
    cov: &SquareSymMatrix,
) -> Result<Vec<f64>> {
    let p = data.p();
    if mean.len() != p || cov.dim() != p {
        return Err(Error::InvalidParameter("mean/cov dimension mismatch".into()));
    }
    let h = inv_sqrt_spd(cov, DEFAULT_SINGULAR_TOL)?;
    let mut out = Vec::with_capacity(data.n());
    let mut centered = vec![0.0; p];
    for row in data.rows() {
        for j in 0..p {
            centered[j] = row[j] - mean[j];
        }
        let z = h.mul_vec(&centered);
        let w: f64 = z.iter().map(|x| x * x).sum();
        let s: f64 = z.iter().sum();
        out.push(w - s * s / p as f64);
    }
    Ok(out)
}

/// Compare a statistic against a tabulated critical value. Rejection is on
/// strict exceedance.
pub fn decide(
    report: &TestReport,
    table: &CriticalTable,
    alpha: f64,
) -> Result<(Decision, f64)> {
    let critical = table.lookup(report.p, report.n, alpha)?;
    let decision =
        if report.statistic > critical { Decision::Reject } else { Decision::Retain };
    Ok((decision, critical))
}

const MC_PVALUE_TAG: u64 = 0x6d63_7076; // "mcpv"

/// Monte Carlo p-value: simulate the parameter-free null at the same (n, p)
/// and count statistics at least as large as the observed one (add-one
/// estimator).
pub fn mc_pvalue(
    data: &Dataset,
    reps: usize,
    stream: RngStream,
    rule: &SelectionRule,
) -> Result<f64> {
    if reps < 100 {
        return Err(Error::InvalidParameter(format!("reps={reps} < 100")));
    }
    let observed = proj_statistic(data, rule)?.statistic;
    let (n, p) = (data.n(), data.p());
    let master = stream.derive_master(MC_PVALUE_TAG);
    let zero = vec![0.0; p];
    let identity = SquareSymMatrix::identity(p);
    let exceed = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let sim = mvn_sample(&zero, &identity, n, RngStream::new(master, rep as u64))
                .expect("identity covariance");
            let stat = proj_statistic(&sim, rule).expect("null simulation").statistic;
            usize::from(stat >= observed)
        })
        .sum::<usize>();
    Ok((1 + exceed) as f64 / (reps + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::goftest::{ks_critical, ks_statistic};
    use crate::samplers::{null_standard, sample_design};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn uniforms_on_estimated_null() {
        let d = sample_design(&null_standard(2), 100_000, RngStream::new(30, 0)).unwrap();
        let mut j = mahalanobis_uniforms(&d).unwrap();
        assert!(j.iter().all(|v| (0.0..=1.0).contains(v)));
        j.sort_by(f64::total_cmp);
        assert!(ks_statistic(&j) < 0.02);
    }

    #[test]
    fn uniforms_affine_invariant() {
        let d = sample_design(&null_standard(2), 200, RngStream::new(31, 0)).unwrap();
        let mapped: Vec<Vec<f64>> = d
            .rows()
            .map(|r| vec![1.5 * r[0] - 0.7 * r[1] + 3.0, 0.4 * r[0] + 2.0 * r[1] - 1.0])
            .collect();
        let dm = Dataset::from_rows(mapped).unwrap();
        let a = mahalanobis_uniforms(&d).unwrap();
        let b = mahalanobis_uniforms(&dm).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_close(*x, *y, 1e-8);
        }
    }

    #[test]
    fn uniforms_known_parameter_exact() {
        // probability integral transform with the true parameters
        let d = sample_design(&null_standard(2), 100_000, RngStream::new(32, 0)).unwrap();
        let h = SquareSymMatrix::identity(2);
        let mut j: Vec<f64> = d
            .rows()
            .map(|r| {
                let w = h.quad_form(r);
                chi2_cdf(w, 2).unwrap()
            })
            .collect();
        j.sort_by(f64::total_cmp);
        assert!(ks_statistic(&j) < ks_critical(100_000, 0.01));
    }

    #[test]
    fn statistic_is_sum_of_parts() {
        let d = sample_design(&null_standard(3), 60, RngStream::new(33, 0)).unwrap();
        let rep = proj_statistic(&d, &SelectionRule::default()).unwrap();
        assert_eq!(rep.t2_parts.len(), 3);
        let pairs: Vec<(usize, usize)> = rep.t2_parts.iter().map(|(p, _)| *p).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2), (1, 2)]);
        let total = rep.t1_part.statistic
            + rep.t2_parts.iter().map(|(_, x)| x.statistic).sum::<f64>();
        assert_close(rep.statistic, total, 1e-14);
    }

    #[test]
    fn statistic_matches_standalone_modules() {
        let d = sample_design(&null_standard(2), 80, RngStream::new(34, 0)).unwrap();
        let rule = SelectionRule::default();
        let rep = proj_statistic(&d, &rule).unwrap();
        let z = residualize(&d, DEFAULT_SINGULAR_TOL).unwrap();
        let j = mahalanobis_uniforms(&d).unwrap();
        let t1 = t1_statistic(&j, &rule).unwrap();
        let t2 = t2_statistic(&z.column(0), &z.column(1), &rule).unwrap();
        assert_close(rep.statistic, t1.statistic + t2.statistic, 1e-12);
    }

    #[test]
    fn theorem2_basics() {
        let d = Dataset::from_rows(vec![vec![2.0], vec![5.0], vec![-1.0]]).unwrap();
        let vals =
            theorem2_values(&d, &[0.0], &SquareSymMatrix::identity(1)).unwrap();
        for v in vals {
            assert_close(v, 0.0, 1e-12);
        }
        let d = Dataset::from_rows(vec![vec![1.0, -2.0]; 4]).unwrap();
        let vals =
            theorem2_values(&d, &[1.0, -2.0], &SquareSymMatrix::identity(2)).unwrap();
        for v in vals {
            assert_close(v, 0.0, 1e-12);
        }
    }

    #[test]
    fn theorem2_chi2_p_minus_1() {
        let d = sample_design(&null_standard(3), 100_000, RngStream::new(35, 0)).unwrap();
        let vals =
            theorem2_values(&d, &[0.0; 3], &SquareSymMatrix::identity(3)).unwrap();
        let mut u: Vec<f64> = vals.iter().map(|&v| chi2_cdf(v, 2).unwrap()).collect();
        u.sort_by(f64::total_cmp);
        assert!(ks_statistic(&u) < ks_critical(100_000, 0.01));
    }

    #[test]
    fn decide_against_tabulated_value() {
        let mut table = CriticalTable::new();
        table.insert(2, 25, 0.05, 9.3079, 55_000, 7, "dmax=10;mode=switching;c=2.4");
        let d = sample_design(&null_standard(2), 25, RngStream::new(36, 0)).unwrap();
        let mut rep = proj_statistic(&d, &SelectionRule::default()).unwrap();

        rep.statistic = 9.31;
        let (dec, c) = decide(&rep, &table, 0.05).unwrap();
        assert_eq!(dec, Decision::Reject);
        assert_close(c, 9.3079, 1e-12);

        rep.statistic = 0.0;
        assert_eq!(decide(&rep, &table, 0.05).unwrap().0, Decision::Retain);

        // boundary: equality retains
        rep.statistic = 9.3079;
        assert_eq!(decide(&rep, &table, 0.05).unwrap().0, Decision::Retain);

        rep.n = 26;
        assert!(decide(&rep, &table, 0.05).is_err());
    }

    #[test]
    fn mc_pvalue_extremes() {
        let d = sample_design(&null_standard(2), 30, RngStream::new(37, 0)).unwrap();
        let p = mc_pvalue(&d, 200, RngStream::new(38, 0), &SelectionRule::default()).unwrap();
        assert!(p > 0.0 && p <= 1.0);
        assert!(mc_pvalue(&d, 50, RngStream::new(38, 0), &SelectionRule::default()).is_err());
    }
}
