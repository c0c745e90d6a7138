//! Monte Carlo engine: critical-value tabulation, Type I studies, and power
//! studies.
//!
//! Every replication draws from a stream whose index is the replication
//! index, and results are merged by deterministic reduction, so output does
//! not depend on how many worker threads run the loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::baselines::{hz_statistic, hz_test, mardia_test};
use crate::error::{Error, Result};
use crate::linalg::Dataset;
use crate::neyman::SelectionRule;
use crate::projtest::{proj_statistic, Decision};
use crate::samplers::{null_corr2, null_standard, sample_design, splitmix64, DesignId, RngStream};

const TAB_TAG: u64 = 0x7461_6275; // "tabu"
const HZCAL_TAG: u64 = 0x687a_6361; // "hzca"

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalEntry {
    pub critical: f64,
    pub reps: usize,
    pub seed: u64,
    pub rule: String,
}

/// Persisted map (p, n, alpha) -> critical value with provenance.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CriticalTable {
    entries: BTreeMap<(usize, usize, u64), CriticalEntry>,
}

fn alpha_key(alpha: f64) -> u64 {
    (alpha * 1e6).round() as u64
}

impl CriticalTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        p: usize,
        n: usize,
        alpha: f64,
        critical: f64,
        reps: usize,
        seed: u64,
        rule: &str,
    ) {
        self.entries.insert(
            (p, n, alpha_key(alpha)),
            CriticalEntry { critical, reps, seed, rule: rule.to_string() },
        );
    }

    pub fn lookup(&self, p: usize, n: usize, alpha: f64) -> Result<f64> {
        self.entries
            .get(&(p, n, alpha_key(alpha)))
            .map(|e| e.critical)
            .ok_or(Error::MissingTableEntry { p, n, alpha })
    }

    pub fn entry(&self, p: usize, n: usize, alpha: f64) -> Option<&CriticalEntry> {
        self.entries.get(&(p, n, alpha_key(alpha)))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(
        &self,
    ) -> impl Iterator<Item = ((usize, usize, f64), &CriticalEntry)> {
        self.entries
            .iter()
            .map(|(&(p, n, a), e)| ((p, n, a as f64 / 1e6), e))
    }

    pub fn merge(&mut self, other: CriticalTable) {
        self.entries.extend(other.entries);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,n,alpha,critical,reps,seed,rule\n");
        for ((p, n, alpha), e) in self.iter() {
            let _ = writeln!(
                out,
                "{p},{n},{alpha},{:.6},{},{},{}",
                e.critical, e.reps, e.seed, e.rule
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut table = Self::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with("p,n,alpha") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!(
                    "critical table line {}: expected 7 fields, got {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let parse = |s: &str, what: &str| -> Result<f64> {
                s.parse().map_err(|_| {
                    Error::Parse(format!("critical table line {}: bad {what} '{s}'", lineno + 1))
                })
            };
            table.insert(
                parse(fields[0], "p")? as usize,
                parse(fields[1], "n")? as usize,
                parse(fields[2], "alpha")?,
                parse(fields[3], "critical")?,
                parse(fields[4], "reps")? as usize,
                parse(fields[5], "seed")? as u64,
                fields[6],
            );
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        atomic_write(path, &self.to_csv())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_csv(&text)
    }

    /// Empirical regularity observed on tabulated grids: at fixed alpha the
    /// critical value tends to fall as n grows. Violations are reported, not
    /// fatal.
    pub fn monotonicity_warnings(&self) -> Vec<String> {
        let mut by_pa: BTreeMap<(usize, u64), Vec<(usize, f64)>> = BTreeMap::new();
        for (&(p, n, a), e) in &self.entries {
            by_pa.entry((p, a)).or_default().push((n, e.critical));
        }
        let mut warnings = Vec::new();
        for ((p, a), mut rows) in by_pa {
            rows.sort_by_key(|r| r.0);
            for w in rows.windows(2) {
                if w[1].1 >= w[0].1 {
                    warnings.push(format!(
                        "critical value not decreasing in n at p={p}, alpha={}: C({})={:.4} -> C({})={:.4}",
                        a as f64 / 1e6,
                        w[0].0,
                        w[0].1,
                        w[1].0,
                        w[1].1
                    ));
                }
            }
        }
        warnings
    }
}

/// One rejection-rate measurement from a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub design: String,
    pub n: usize,
    pub test: String,
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
    pub seed: u64,
}

pub fn study_results_csv(results: &[StudyResult]) -> String {
    let mut out = String::from("design,n,test,rate,se,reps,seed\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{},{}",
            r.design, r.n, r.test, r.rate, r.se, r.reps, r.seed
        );
    }
    out
}

/// Write via a temp file in the same directory and rename, so a failed run
/// never leaves a partial output file.
pub fn atomic_write(path: &Path, contents: &str) -> std::io::Result<()> {
    let tmp = path.with_extension(format!("tmp.{}", std::process::id()));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)
}

fn rate_se(rate: f64, reps: usize) -> f64 {
    (rate * (1.0 - rate) / reps as f64).sqrt()
}

/// Simulate the null statistic pool for one (p, n), sorted ascending.
pub fn null_statistic_pool(
    p: usize,
    n: usize,
    reps: usize,
    master: u64,
    rule: &SelectionRule,
) -> Vec<f64> {
    let design = null_standard(p);
    let mut stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = sample_design(&design, n, RngStream::new(master, rep as u64))
                .expect("null sampling");
            proj_statistic(&data, rule).expect("null statistic").statistic
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    stats
}

/// Upper order statistic at ceil((1 - alpha) * reps), no interpolation.
pub fn empirical_upper_quantile(sorted: &[f64], alpha: f64) -> f64 {
    let reps = sorted.len();
    // guard the ceil against representation fuzz in (1 - alpha) * reps
    let idx = ((1.0 - alpha) * reps as f64 - 1e-9).ceil() as usize;
    sorted[idx.clamp(1, reps) - 1]
}

/// Tabulate critical values for the projection statistic by null simulation.
pub fn tabulate_critical(
    p: usize,
    n_list: &[usize],
    alpha_list: &[f64],
    reps: usize,
    seed: u64,
    rule: &SelectionRule,
) -> Result<CriticalTable> {
    if reps < 1000 {
        return Err(Error::InvalidParameter(format!("tabulation reps={reps} < 1000")));
    }
    let fingerprint = rule.fingerprint();
    let mut table = CriticalTable::new();
    for &n in n_list {
        let master = splitmix64(seed ^ TAB_TAG ^ (p as u64) << 32 ^ n as u64);
        let stats = null_statistic_pool(p, n, reps, master, rule);
        for &alpha in alpha_list {
            let critical = empirical_upper_quantile(&stats, alpha);
            table.insert(p, n, alpha, critical, reps, seed, &fingerprint);
        }
    }
    Ok(table)
}

/// Type I error rates of the projection test across bivariate correlations.
pub fn type1_study(
    rho_list: &[f64],
    n_list: &[usize],
    reps: usize,
    table: &CriticalTable,
    seed: u64,
    rule: &SelectionRule,
    alpha: f64,
) -> Result<Vec<StudyResult>> {
    let mut results = Vec::new();
    for &rho in rho_list {
        for &n in n_list {
            let critical = table.lookup(2, n, alpha)?;
            let design = null_corr2(rho);
            let master =
                splitmix64(seed ^ 0x7479_7031 ^ (rho.to_bits()) ^ (n as u64) << 17);
            let rejections: usize = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let data =
                        sample_design(&design, n, RngStream::new(master, rep as u64))
                            .expect("null sampling");
                    let stat = proj_statistic(&data, rule).expect("statistic").statistic;
                    usize::from(stat > critical)
                })
                .sum();
            let rate = rejections as f64 / reps as f64;
            results.push(StudyResult {
                design: format!("NULL_MVN(rho={rho})"),
                n,
                test: "proj".into(),
                rate,
                se: rate_se(rate, reps),
                reps,
                seed,
            });
        }
    }
    Ok(results)
}

/// Which tests a power study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestId {
    Proj,
    Hz,
    Mardia,
}

impl TestId {
    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "proj" => Ok(Self::Proj),
            "hz" => Ok(Self::Hz),
            "mardia" => Ok(Self::Mardia),
            other => Err(Error::InvalidParameter(format!(
                "unknown test '{other}'; valid tests: proj hz mardia"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Proj => "proj",
            Self::Hz => "hz",
            Self::Mardia => "mardia",
        }
    }
}

/// How the Henze-Zirkler baseline is calibrated in a study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HzCalibration {
    /// Lognormal approximation of the null distribution.
    Lognormal,
    /// Critical value from a null simulation with the given replication count.
    MonteCarlo { reps: usize },
}

fn hz_critical_mc(p: usize, n: usize, reps: usize, seed: u64, alpha: f64) -> f64 {
    let design = null_standard(p);
    let master = splitmix64(seed ^ HZCAL_TAG ^ (p as u64) << 32 ^ n as u64);
    let mut stats: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let data = sample_design(&design, n, RngStream::new(master, rep as u64))
                .expect("null sampling");
            hz_statistic(&data).expect("hz statistic")
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    empirical_upper_quantile(&stats, alpha)
}

/// Power of the selected tests against the study designs at nominal level
/// alpha. One dataset is drawn per replication and shared by every test.
#[allow(clippy::too_many_arguments)]
pub fn power_study(
    designs: &[DesignId],
    n_list: &[usize],
    reps: usize,
    tests: &[TestId],
    table: &CriticalTable,
    seed: u64,
    rule: &SelectionRule,
    alpha: f64,
    hz_cal: HzCalibration,
) -> Result<Vec<StudyResult>> {
    let mut results = Vec::new();
    for design in designs {
        let p = design.dim();
        for &n in n_list {
            let proj_critical = if tests.contains(&TestId::Proj) {
                Some(table.lookup(p, n, alpha)?)
            } else {
                None
            };
            let hz_critical = match (tests.contains(&TestId::Hz), hz_cal) {
                (true, HzCalibration::MonteCarlo { reps: cal_reps }) => {
                    Some(hz_critical_mc(p, n, cal_reps, seed, alpha))
                }
                _ => None,
            };
            let master = splitmix64(
                seed ^ 0x706f_7772
                    ^ splitmix64(design.name().bytes().fold(0u64, |a, b| {
                        a.wrapping_mul(31).wrapping_add(b as u64)
                    }))
                    ^ (n as u64) << 13,
            );
            let counts: Vec<usize> = (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let data = sample_design(design, n, RngStream::new(master, rep as u64))
                        .expect("design sampling");
                    tests
                        .iter()
                        .map(|t| usize::from(runs_reject(t, &data, proj_critical, hz_critical, rule, alpha)))
                        .collect::<Vec<usize>>()
                })
                .reduce(
                    || vec![0usize; tests.len()],
                    |mut acc, item| {
                        for (a, b) in acc.iter_mut().zip(item) {
                            *a += b;
                        }
                        acc
                    },
                );
            for (test, &rejections) in tests.iter().zip(&counts) {
                let rate = rejections as f64 / reps as f64;
                results.push(StudyResult {
                    design: design.name().to_string(),
                    n,
                    test: test.name().to_string(),
                    rate,
                    se: rate_se(rate, reps),
                    reps,
                    seed,
                });
            }
        }
    }
    Ok(results)
}

fn runs_reject(
    test: &TestId,
    data: &Dataset,
    proj_critical: Option<f64>,
    hz_critical: Option<f64>,
    rule: &SelectionRule,
    alpha: f64,
) -> bool {
    match test {
        TestId::Proj => {
            let stat = proj_statistic(data, rule).expect("statistic").statistic;
            stat > proj_critical.expect("proj critical value")
        }
        TestId::Hz => match hz_critical {
            Some(c) => hz_statistic(data).expect("hz statistic") > c,
            None => hz_test(data, alpha).expect("hz test").decision == Decision::Reject,
        },
        TestId::Mardia => {
            mardia_test(data, alpha).expect("mardia test").decision == Decision::Reject
        }
    }
}
