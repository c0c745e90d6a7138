//! likeproj: likelihood-projection test for multivariate normality.
//!
//! Exit codes: 0 = retain the null (or study completed), 1 = reject the
//! null, 2 = error. Stdout carries the report; stderr carries diagnostics.

mod ingest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use likeproj::harness::{atomic_write, study_results_csv};
use likeproj::neyman::PenaltyMode;
use likeproj::projtest::{mc_pvalue, proj_statistic};
use likeproj::samplers::sample_design;
use likeproj::{
    CriticalTable, Decision, DesignId, HzCalibration, RngStream,
    SelectionRule, StudyResult, TestId,
};

/// Default replication count for tabulation and studies; override with
/// --reps or the LIKEPROJ_REPS environment variable.
const DEFAULT_REPS: usize = 20_000;

#[derive(Parser)]
#[command(name = "likeproj", version, about)]
struct Cli {
    /// Worker threads for Monte Carlo commands (default: all cores, or
    /// LIKEPROJ_WORKERS). The worker count never changes any output.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RuleArgs {
    /// Maximum component order scanned by the selection rule.
    #[arg(long, default_value_t = 10)]
    dmax: usize,
    /// Penalty for the uniformity statistic: schwarz | switching.
    #[arg(long, default_value = "switching")]
    penalty: String,
    /// Penalty for the rank independence statistics: schwarz | switching.
    #[arg(long, default_value = "schwarz")]
    rank_penalty: String,
    /// Constant c in the switching threshold sqrt(c log n).
    #[arg(long, default_value_t = 2.4)]
    switch_const: f64,
}

impl RuleArgs {
    fn build(&self) -> Result<SelectionRule, String> {
        if self.dmax == 0 {
            return Err("--dmax must be at least 1".into());
        }
        Ok(SelectionRule {
            dmax: self.dmax,
            penalty_mode: PenaltyMode::parse(&self.penalty).map_err(|e| e.to_string())?,
            rank_penalty_mode: PenaltyMode::parse(&self.rank_penalty)
                .map_err(|e| e.to_string())?,
            switch_const: self.switch_const,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Test a CSV dataset for multivariate normality.
    Test {
        /// Input CSV (n rows, p numeric columns); '-' reads stdin.
        input: String,
        /// Critical-value table CSV produced by `tabulate`.
        #[arg(long, conflicts_with = "mc_pvalue")]
        table: Option<PathBuf>,
        /// Monte Carlo p-value with this many null replications instead of a
        /// tabulated critical value.
        #[arg(long)]
        mc_pvalue: Option<usize>,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Tabulate null critical values of the projection statistic.
    Tabulate {
        #[arg(long, default_value_t = 2)]
        p: usize,
        /// Comma-separated sample sizes.
        #[arg(long, default_value = "25,50,75,100")]
        n: String,
        /// Comma-separated significance levels.
        #[arg(long, default_value = "0.2,0.1,0.05,0.01")]
        alpha: String,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output table CSV path (written atomically).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Type I error of the projection test across bivariate correlations.
    Type1 {
        #[arg(long, default_value = "-0.5,0,0.9")]
        rho: String,
        #[arg(long, default_value = "35,50,100")]
        n: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Critical-value table CSV from `tabulate` (must cover p=2).
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Power of the selected tests against the alternative designs.
    Power {
        /// Comma-separated designs: A1..A7, T1V.
        #[arg(long, default_value = "A1")]
        designs: String,
        #[arg(long, default_value = "100")]
        n: String,
        /// Comma-separated tests: proj, hz, mardia.
        #[arg(long, default_value = "proj,hz,mardia")]
        tests: String,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        table: PathBuf,
        /// Calibrate HZ by null simulation with this many replications
        /// instead of its lognormal approximation.
        #[arg(long)]
        hz_mc: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        rule: RuleArgs,
    },
    /// Draw a dataset from a design and emit it as CSV.
    Sample {
        /// A1..A7, T1V, or NULL_MVN (standard normal, dimension --p).
        #[arg(long)]
        design: String,
        /// Dimension for the NULL_MVN design; ignored otherwise.
        #[arg(long, default_value_t = 2)]
        p: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output CSV path (written atomically); default is stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers.or_else(|| env_usize("LIKEPROJ_WORKERS"));
    if let Some(w) = workers {
        if w == 0 {
            eprintln!("error: worker count must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: cannot configure {w} workers: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn env_usize(var: &str) -> Option<usize> {
    std::env::var(var).ok().and_then(|v| v.parse().ok())
}

fn resolve_reps(flag: Option<usize>) -> usize {
    flag.or_else(|| env_usize("LIKEPROJ_REPS")).unwrap_or(DEFAULT_REPS)
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, String> {
    let items: Result<Vec<T>, _> =
        text.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect();
    match items {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(format!("cannot parse {what} list {text:?}")),
    }
}

fn read_input(input: &str) -> Result<String, String> {
    if input == "-" {
        use std::io::Read;
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| format!("reading stdin: {e}"))?;
        Ok(buf)
    } else {
        std::fs::read_to_string(input).map_err(|e| format!("reading {input}: {e}"))
    }
}

fn write_out(path: &Path, contents: &str) -> Result<(), String> {
    atomic_write(path, contents).map_err(|e| format!("writing {}: {e}", path.display()))
}

fn load_table(path: &Path) -> Result<CriticalTable, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("reading {}: {e}", path.display()))?;
    CriticalTable::from_csv(&text).map_err(|e| e.to_string())
}

fn run(command: Command) -> Result<ExitCode, String> {
    match command {
        Command::Test { input, table, mc_pvalue: mc, alpha, seed, rule } => {
            cmd_test(&input, table.as_deref(), mc, alpha, seed, &rule)
        }
        Command::Tabulate { p, n, alpha, reps, seed, out, rule } => {
            let rule = rule.build()?;
            let n_list: Vec<usize> = parse_list(&n, "sample size")?;
            let alpha_list: Vec<f64> = parse_list(&alpha, "alpha")?;
            let reps = resolve_reps(reps);
            let table = likeproj::harness::tabulate_critical(
                p, &n_list, &alpha_list, reps, seed, &rule,
            )
            .map_err(|e| e.to_string())?;
            for w in table.monotonicity_warnings() {
                eprintln!("warning: {w}");
            }
            print_table_summary(&table, &n_list, &alpha_list, p);
            if let Some(path) = out {
                write_out(&path, &table.to_csv())?;
                eprintln!("table written to {}", path.display());
            } else {
                print!("{}", table.to_csv());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Type1 { rho, n, alpha, reps, seed, table, out, rule } => {
            let rule = rule.build()?;
            let rho_list: Vec<f64> = parse_list(&rho, "correlation")?;
            let n_list: Vec<usize> = parse_list(&n, "sample size")?;
            let table = load_table(&table)?;
            let results = likeproj::harness::type1_study(
                &rho_list,
                &n_list,
                resolve_reps(reps),
                &table,
                seed,
                &rule,
                alpha,
            )
            .map_err(|e| e.to_string())?;
            print_study_summary(&results, &n_list);
            finish_study(&results, out)
        }
        Command::Power { designs, n, tests, alpha, reps, seed, table, hz_mc, out, rule } => {
            let rule = rule.build()?;
            let design_list: Vec<DesignId> = designs
                .split(',')
                .map(|s| DesignId::parse(s.trim()).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let n_list: Vec<usize> = parse_list(&n, "sample size")?;
            let test_list: Vec<TestId> = tests
                .split(',')
                .map(|s| TestId::parse(s.trim()).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            let table = load_table(&table)?;
            let hz_cal = match hz_mc {
                Some(r) => HzCalibration::MonteCarlo { reps: r },
                None => HzCalibration::Lognormal,
            };
            let results = likeproj::harness::power_study(
                &design_list,
                &n_list,
                resolve_reps(reps),
                &test_list,
                &table,
                seed,
                &rule,
                alpha,
                hz_cal,
            )
            .map_err(|e| e.to_string())?;
            print_study_summary(&results, &n_list);
            finish_study(&results, out)
        }
        Command::Sample { design, p, n, seed, out } => {
            let design = if design.eq_ignore_ascii_case("NULL_MVN")
                || design.eq_ignore_ascii_case("NULL")
            {
                likeproj::samplers::null_standard(p)
            } else {
                DesignId::parse(&design).map_err(|e| e.to_string())?
            };
            let data = sample_design(&design, n, RngStream::new(seed, 0))
                .map_err(|e| e.to_string())?;
            let mut csv = String::new();
            for row in data.rows() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
                csv.push_str(&cells.join(","));
                csv.push('\n');
            }
            match out {
                Some(path) => {
                    write_out(&path, &csv)?;
                    eprintln!("{} rows written to {}", n, path.display());
                }
                None => print!("{csv}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn cmd_test(
    input: &str,
    table: Option<&Path>,
    mc: Option<usize>,
    alpha: f64,
    seed: u64,
    rule_args: &RuleArgs,
) -> Result<ExitCode, String> {
    let text = read_input(input)?;
    let (data, blank) = ingest::parse_matrix(&text)?;
    if blank > 0 {
        eprintln!("note: skipped {blank} blank line(s)");
    }
    eprintln!("parsed {} rows x {} columns", data.n(), data.p());
    if data.p() < 2 {
        return Err(format!("need at least 2 columns, got {}", data.p()));
    }
    if data.n() <= data.p() {
        return Err(format!(
            "need more rows than columns (n > p); got n={}, p={}",
            data.n(),
            data.p()
        ));
    }

    let decision = if let Some(path) = table {
        let table = load_table(path)?;
        let entry = table
            .entry(data.p(), data.n(), alpha)
            .ok_or_else(|| {
                format!(
                    "table {} has no entry for p={}, n={}, alpha={alpha}",
                    path.display(),
                    data.p(),
                    data.n()
                )
            })?
            .clone();
        // evaluate under the same selection rule the table was built with
        let rule = SelectionRule::parse_fingerprint(&entry.rule)
            .map_err(|e| format!("table rule fingerprint: {e}"))?;
        let flags = rule_args.build()?;
        if flags != SelectionRule::default() && flags != rule {
            return Err(format!(
                "rule flags ({}) conflict with the table's rule ({})",
                flags.fingerprint(),
                entry.rule
            ));
        }
        let report = proj_statistic(&data, &rule).map_err(|e| e.to_string())?;
        println!("{}", report.to_kv());
        println!("critical={:.6} alpha={alpha}", entry.critical);
        if report.statistic > entry.critical { Decision::Reject } else { Decision::Retain }
    } else {
        let rule = rule_args.build()?;
        let reps = mc.unwrap_or(DEFAULT_REPS);
        let report = proj_statistic(&data, &rule).map_err(|e| e.to_string())?;
        println!("{}", report.to_kv());
        let pvalue = mc_pvalue(&data, reps, RngStream::new(seed, 0), &rule)
            .map_err(|e| e.to_string())?;
        println!("mc_pvalue={pvalue:.6} reps={reps} alpha={alpha}");
        if pvalue < alpha { Decision::Reject } else { Decision::Retain }
    };
    match decision {
        Decision::Reject => {
            println!("decision=reject");
            Ok(ExitCode::from(1))
        }
        Decision::Retain => {
            println!("decision=retain");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn finish_study(results: &[StudyResult], out: Option<PathBuf>) -> Result<ExitCode, String> {
    let csv = study_results_csv(results);
    match out {
        Some(path) => {
            write_out(&path, &csv)?;
            eprintln!("results written to {}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// Critical values as an alpha-by-n grid, mirroring the reference layout.
fn print_table_summary(table: &CriticalTable, n_list: &[usize], alpha_list: &[f64], p: usize) {
    println!("# critical values, p = {p}");
    print!("# alpha\\n  ");
    for n in n_list {
        print!("{n:>10}");
    }
    println!();
    for &alpha in alpha_list {
        print!("# {alpha:<8}");
        for &n in n_list {
            match table.lookup(p, n, alpha) {
                Ok(c) => print!("{c:>10.4}"),
                Err(_) => print!("{:>10}", "-"),
            }
        }
        println!();
    }
}

/// Rejection rates as design/test rows by n columns.
fn print_study_summary(results: &[StudyResult], n_list: &[usize]) {
    let mut keys: Vec<(String, String)> = Vec::new();
    for r in results {
        let key = (r.design.clone(), r.test.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    print!("# {:<24}", "design/test\\n");
    for n in n_list {
        print!("{n:>10}");
    }
    println!();
    for (design, test) in keys {
        print!("# {:<24}", format!("{design} {test}"));
        for &n in n_list {
            let rate = results
                .iter()
                .find(|r| r.design == design && r.test == test && r.n == n)
                .map(|r| r.rate);
            match rate {
                Some(v) => print!("{v:>10.4}"),
                None => print!("{:>10}", "-"),
            }
        }
        println!();
    }
}
