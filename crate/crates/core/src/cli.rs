//! The `bregman-umvue` command line.
//!
//! Subcommands: `divergence`, `risk`, `check`, `compare`, `lehmann`, `oracle`,
//! `reproduce`. Global flags `--seed`, `--workers`, `--format {csv,json}`,
//! `--out <path>` and `--config <path>` (a TOML file with the same keys as the
//! flags; flags win).
//!
//! Exit codes: 0 success, 1 failed assertion, 2 usage or configuration error.
//!
//! Every table starts with a header carrying the crate version and the
//! resolved configuration. The worker count is left out of the header since
//! it never changes results.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::discrete_oracle::{verify_decompositions, verify_rb_inequality, DiscreteModel, RESIDUAL_TOL};
use crate::divergence::{bregman_div, dual_transport, Orientation};
use crate::error::{Error, Result};
use crate::estimators::{build_type1_umvue, parse_estimator, Estimator};
use crate::generators::{parse_generator, Generator};
use crate::models::{parse_model, Model};
use crate::risk_lab::{
    check_type1_unbiased, check_type2_unbiased, compare_estimators, default_workers, estimate_risk,
    lehmann_grid_check, to_csv, to_json_lines, ComparisonReport, McConfig, UnbiasednessReport,
};
use crate::VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSERTION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Type1,
    Type2,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Example {
    Exp,
    Lognormal,
}

#[derive(Debug, Parser)]
#[command(name = "bregman-umvue", version, about = "Unbiased estimation under Bregman losses")]
struct Cli {
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// D_φ(x, y) and its dual-space transport value.
    Divergence {
        #[arg(long = "gen")]
        generator: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
        #[arg(long, allow_hyphen_values = true)]
        y: String,
    },
    /// Monte Carlo risk with its bias–variance decomposition.
    Risk(Experiment),
    /// Type-I / type-II unbiasedness z-tests over a θ grid.
    Check {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long = "type", value_enum)]
        kind: Option<CheckKind>,
    },
    /// Paired risk comparison of two estimators on common random numbers.
    Compare(Experiment),
    /// Expected loss across a grid of θ' from one replicate set.
    Lehmann {
        #[command(flatten)]
        exp: Experiment,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        grid: Option<Vec<f64>>,
    },
    /// Exact enumeration check of the Rao–Blackwell inequality and risk decompositions.
    Oracle {
        /// Support size; the support is {1, …, m}.
        #[arg(long = "m")]
        support_size: Option<usize>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long = "gen")]
        generator: Option<String>,
        #[arg(long)]
        estimator: Option<String>,
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
    },
    /// Runs a worked example end to end and checks every expected verdict.
    Reproduce {
        #[arg(long, value_enum)]
        example: Example,
        #[arg(long = "M")]
        replicates: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Experiment {
    #[arg(long)]
    model: Option<String>,
    #[arg(long = "gen")]
    generator: Option<String>,
    /// Repeat or comma-separate for several estimators.
    #[arg(long = "estimator", value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    theta: Option<Vec<f64>>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "M")]
    replicates: Option<usize>,
    #[arg(long, value_enum)]
    orientation: Option<OrientationArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum OrientationArg {
    Left,
    Right,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Left => Orientation::Left,
            OrientationArg::Right => Orientation::Right,
        }
    }
}

/// Experiment settings, read from a config file and overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimators: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub grid: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckKind>,
    #[serde(rename = "m", skip_serializing_if = "Option::is_none")]
    pub support_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))
    }

    fn require<T: Clone>(v: &Option<T>, field: &str) -> Result<T> {
        v.clone().ok_or_else(|| Error::parse(field, "missing (give the flag or set it in --config)"))
    }

    fn single_theta(&self) -> Result<f64> {
        match self.theta.as_slice() {
            [t] => Ok(*t),
            [] => Err(Error::parse("theta", "missing")),
            _ => Err(Error::parse("theta", "expected a single value")),
        }
    }

    fn mc(&self) -> McConfig {
        McConfig::new(self.replicates.unwrap_or(100_000), self.seed.unwrap_or(0))
            .with_workers(self.workers.unwrap_or_else(default_workers))
    }
}

fn overlay<T>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn overlay_vec<T>(slot: &mut Vec<T>, flag: Option<Vec<T>>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn parse_point(field: &str, s: &str) -> Result<Vec<f64>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse(field, format!("`{s}` is not a comma-separated list of reals: {e}")))?;
    if v.is_empty() {
        return Err(Error::parse(field, "empty point"));
    }
    Ok(v)
}

struct Output<'a> {
    stdout: &'a mut dyn Write,
    format: Format,
    out: Option<PathBuf>,
}

impl Output<'_> {
    fn header(&self, command: &str, cfg: &ExperimentConfig) -> Result<String> {
        let cfg_json = serde_json::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?;
        Ok(match self.format {
            Format::Csv => format!("# bregman-umvue {VERSION} command={command} config={cfg_json}\n"),
            Format::Json => format!(
                "{{\"kind\":\"config\",\"version\":\"{VERSION}\",\"command\":\"{command}\",\"config\":{cfg_json}}}\n"
            ),
        })
    }

    fn table<T: Serialize>(&self, rows: &[T]) -> Result<String> {
        match self.format {
            Format::Csv => to_csv(rows),
            Format::Json => to_json_lines(rows),
        }
    }

    fn emit(&mut self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => {
                std::fs::write(path, text)?;
                writeln!(self.stdout, "wrote {}", path.display())?;
            }
            None => self.stdout.write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if code == EXIT_OK { write!(stdout, "{e}") } else { write!(stderr, "{e}") };
            return code;
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    overlay(&mut cfg.seed, cli.seed);
    overlay(&mut cfg.workers, cli.workers);
    overlay(&mut cfg.format, cli.format);
    overlay(&mut cfg.out, cli.out);

    if let Command::Divergence { generator, x, y } = &cli.command {
        return cmd_divergence(generator, x, y, stdout);
    }

    let name = match &cli.command {
        Command::Risk(_) => "risk",
        Command::Check { .. } => "check",
        Command::Compare(_) => "compare",
        Command::Lehmann { .. } => "lehmann",
        Command::Oracle { .. } => "oracle",
        Command::Reproduce { .. } => "reproduce",
        Command::Divergence { .. } => unreachable!(),
    };
    match cli.command {
        Command::Risk(exp) | Command::Compare(exp) => apply_experiment(&mut cfg, exp),
        Command::Check { exp, kind } => {
            apply_experiment(&mut cfg, exp);
            overlay(&mut cfg.check, kind);
        }
        Command::Lehmann { exp, grid } => {
            apply_experiment(&mut cfg, exp);
            overlay_vec(&mut cfg.grid, grid);
        }
        Command::Oracle {
            support_size,
            n,
            generator,
            estimator,
            theta,
        } => {
            overlay(&mut cfg.support_size, support_size);
            overlay(&mut cfg.n, n);
            overlay(&mut cfg.generator, generator);
            overlay_vec(&mut cfg.estimators, estimator.map(|e| vec![e]));
            overlay_vec(&mut cfg.theta, theta);
        }
        Command::Reproduce { example, replicates } => {
            overlay(&mut cfg.replicates, replicates);
            return cmd_reproduce(example, &cfg, stdout);
        }
        Command::Divergence { .. } => unreachable!(),
    }

    let mut out = Output {
        stdout,
        format: cfg.format.unwrap_or(Format::Csv),
        out: cfg.out.clone(),
    };
    match name {
        "risk" => cmd_risk(&cfg, &mut out),
        "check" => cmd_check(&cfg, &mut out),
        "compare" => cmd_compare(&cfg, &mut out),
        "lehmann" => cmd_lehmann(&cfg, &mut out),
        _ => cmd_oracle(&cfg, &mut out),
    }
}

fn apply_experiment(cfg: &mut ExperimentConfig, exp: Experiment) {
    overlay(&mut cfg.model, exp.model);
    overlay(&mut cfg.generator, exp.generator);
    overlay_vec(&mut cfg.estimators, exp.estimators);
    overlay_vec(&mut cfg.theta, exp.theta);
    overlay(&mut cfg.n, exp.n);
    overlay(&mut cfg.replicates, exp.replicates);
    overlay(&mut cfg.orientation, exp.orientation.map(Orientation::from));
}

fn cmd_divergence(generator: &str, x: &str, y: &str, stdout: &mut dyn Write) -> Result<i32> {
    let x = parse_point("x", x)?;
    let y = parse_point("y", y)?;
    if x.len() != y.len() {
        return Err(Error::parse("y", format!("dimension {} does not match x ({})", y.len(), x.len())));
    }
    let g = parse_generator(generator, x.len())?;
    let d = bregman_div(&g, &x, &y)?;
    let t = dual_transport(&g, &x, &y)?;
    writeln!(stdout, "divergence: {d}")?;
    writeln!(stdout, "dual_transport: {t}")?;
    Ok(EXIT_OK)
}

struct Resolved {
    model: Model,
    generator: Generator,
    n: usize,
    mc: McConfig,
}

fn resolve(cfg: &ExperimentConfig) -> Result<Resolved> {
    let model = parse_model(&ExperimentConfig::require(&cfg.model, "model")?)?;
    let generator = parse_generator(&ExperimentConfig::require(&cfg.generator, "generator")?, 1)?;
    Ok(Resolved {
        model,
        generator,
        n: ExperimentConfig::require(&cfg.n, "n")?,
        mc: cfg.mc(),
    })
}

fn estimators(cfg: &ExperimentConfig, r: &Resolved) -> Result<Vec<Estimator>> {
    if cfg.estimators.is_empty() {
        return Err(Error::parse("estimator", "missing"));
    }
    cfg.estimators
        .iter()
        .map(|s| parse_estimator(s, Some(&r.model), &r.generator))
        .collect()
}

fn cmd_risk(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32> {
    let r = resolve(cfg)?;
    let theta = cfg.single_theta()?;
    let orientation = cfg.orientation.unwrap_or(Orientation::Left);
    let reports = estimators(cfg, &r)?
        .iter()
        .map(|e| estimate_risk(&r.model, theta, r.n, e, &r.generator, orientation, &r.mc))
        .collect::<Result<Vec<_>>>()?;
    let text = out.header("risk", cfg)? + &out.table(&reports)?;
    out.emit(&text)?;
    Ok(EXIT_OK)
}

fn cmd_check(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32> {
    let r = resolve(cfg)?;
    if cfg.theta.is_empty() {
        return Err(Error::parse("theta", "missing"));
    }
    let kind = cfg.check.unwrap_or(CheckKind::Both);
    let mut reports = Vec::new();
    for e in estimators(cfg, &r)? {
        if kind != CheckKind::Type2 {
            reports.extend(check_type1_unbiased(&r.model, &cfg.theta, r.n, &e, &r.generator, &r.mc)?);
        }
        if kind != CheckKind::Type1 {
            reports.extend(check_type2_unbiased(&r.model, &cfg.theta, r.n, &e, &r.mc)?);
        }
    }
    let text = out.header("check", cfg)? + &out.table(&reports)?;
    out.emit(&text)?;
    Ok(EXIT_OK)
}

fn cmd_compare(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32> {
    let r = resolve(cfg)?;
    let es = estimators(cfg, &r)?;
    let [e1, e2] = es.as_slice() else {
        return Err(Error::parse("estimator", format!("compare needs exactly two estimators, got {}", es.len())));
    };
    let report = compare_estimators(
        &r.model,
        cfg.single_theta()?,
        r.n,
        e1,
        e2,
        &r.generator,
        cfg.orientation.unwrap_or(Orientation::Left),
        &r.mc,
    )?;
    let text = out.header("compare", cfg)? + &out.table(&[report])?;
    out.emit(&text)?;
    Ok(EXIT_OK)
}

fn cmd_lehmann(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32> {
    let r = resolve(cfg)?;
    if cfg.grid.is_empty() {
        return Err(Error::parse("grid", "missing"));
    }
    let es = estimators(cfg, &r)?;
    let mut rows = Vec::new();
    for e in &es {
        let report = lehmann_grid_check(
            &r.model,
            cfg.single_theta()?,
            &cfg.grid,
            r.n,
            e,
            &r.generator,
            cfg.orientation.unwrap_or(Orientation::Left),
            &r.mc,
        )?;
        rows.extend(report.rows());
    }
    let text = out.header("lehmann", cfg)? + &out.table(&rows)?;
    out.emit(&text)?;
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct OracleRow {
    generator: String,
    estimator: String,
    theta: f64,
    risk_original: f64,
    risk_rao_blackwell: f64,
    gap: f64,
    strict: bool,
    rb_holds: bool,
    left_residual: f64,
    right_residual: f64,
}

fn cmd_oracle(cfg: &ExperimentConfig, out: &mut Output) -> Result<i32> {
    let m = ExperimentConfig::require(&cfg.support_size, "m")?;
    let n = ExperimentConfig::require(&cfg.n, "n")?;
    let g = Arc::new(parse_generator(&ExperimentConfig::require(&cfg.generator, "generator")?, 1)?);
    let [spec] = cfg.estimators.as_slice() else {
        return Err(Error::parse("estimator", "oracle needs exactly one estimator"));
    };
    let e = parse_estimator(spec, None, &g)?;
    if cfg.theta.is_empty() {
        return Err(Error::parse("theta", "missing"));
    }
    let dm = DiscreteModel::integers(m, n)?.with_workers(cfg.workers.unwrap_or(1));
    let table = verify_rb_inequality(&dm, &g, &e, &cfg.theta)?;
    let mut rows = Vec::new();
    let mut max_residual = table.max_violation;
    let mut pass = table.pass;
    for rb in &table.rows {
        let d = verify_decompositions(&dm, &g, &e, rb.theta)?;
        max_residual = max_residual.max(d.max_residual);
        pass &= d.pass;
        rows.push(OracleRow {
            generator: rb.generator.clone(),
            estimator: rb.estimator.clone(),
            theta: rb.theta,
            risk_original: rb.risk_original,
            risk_rao_blackwell: rb.risk_rao_blackwell,
            gap: rb.gap,
            strict: rb.strict,
            rb_holds: rb.holds,
            left_residual: d.left.residual(),
            right_residual: d.right.residual(),
        });
    }
    let text = out.header("oracle", cfg)? + &out.table(&rows)?;
    out.emit(&text)?;
    let verdict = if pass { "PASS" } else { "FAIL" };
    writeln!(
        out.stdout,
        "{verdict} max_residual={max_residual:e} tolerance={RESIDUAL_TOL:e} permutation_invariant={}",
        table.permutation_invariant
    )?;
    Ok(if pass { EXIT_OK } else { EXIT_ASSERTION })
}

/// Fixed settings of a worked example.
#[derive(Debug, Clone)]
pub struct ExampleSetup {
    pub model: Model,
    pub generator: Generator,
    pub theta: f64,
    pub n: usize,
    pub default_replicates: usize,
    /// The type-I comparator: the type-I rule on the first `k` observations.
    pub comparator_k: usize,
}

impl ExampleSetup {
    pub fn for_example(example: Example) -> Self {
        match example {
            Example::Exp => Self {
                model: Model::exponential(),
                generator: Generator::neg_log(1),
                theta: 2.0,
                n: 5,
                default_replicates: 1_000_000,
                comparator_k: 3,
            },
            Example::Lognormal => Self {
                model: Model::lognormal(0.25).expect("positive variance"),
                generator: Generator::neg_entropy(1),
                theta: std::f64::consts::E,
                n: 10,
                default_replicates: 100_000,
                comparator_k: 5,
            },
        }
    }
}

/// Everything `reproduce` computes for one example.
#[derive(Debug, Clone, Serialize)]
pub struct Reproduction {
    pub checks: Vec<UnbiasednessReport>,
    pub comparison: ComparisonReport,
    /// `(description, holds)` for every expected verdict.
    pub expectations: Vec<(String, bool)>,
}

impl Reproduction {
    pub fn all_hold(&self) -> bool {
        self.expectations.iter().all(|(_, ok)| *ok)
    }
}

/// Paired risk ordering must be significant at this many standard errors.
pub const ORDERING_Z: f64 = 5.0;

pub fn reproduce(example: Example, mc: &McConfig) -> Result<Reproduction> {
    let s = ExampleSetup::for_example(example);
    let type1 = build_type1_umvue(&s.model, &s.generator)?;
    let classical = Estimator::classical(&s.model);
    let comparator = Estimator::first_k(s.comparator_k, &type1);
    let grid = [s.theta];

    let mut checks = Vec::new();
    let mut expectations = Vec::new();
    for (e, type1_expected, type2_expected) in [(&type1, true, false), (&classical, false, true)] {
        let t1 = check_type1_unbiased(&s.model, &grid, s.n, e, &s.generator, mc)?.remove(0);
        let t2 = check_type2_unbiased(&s.model, &grid, s.n, e, mc)?.remove(0);
        let word = |b: bool| if b { "PASS" } else { "FAIL" };
        expectations.push((
            format!("{} type-I {}", e.id(), word(type1_expected)),
            t1.verdict.passed() == type1_expected,
        ));
        expectations.push((
            format!("{} type-II {}", e.id(), word(type2_expected)),
            t2.verdict.passed() == type2_expected,
        ));
        checks.push(t1);
        checks.push(t2);
    }
    let comparison = compare_estimators(
        &s.model,
        s.theta,
        s.n,
        &type1,
        &comparator,
        &s.generator,
        Orientation::Left,
        mc,
    )?;
    expectations.push((
        format!(
            "risk(type1) < risk({}) by more than {ORDERING_Z} paired SE",
            comparator.id()
        ),
        comparison.difference + ORDERING_Z * comparison.difference_se < 0.0,
    ));
    Ok(Reproduction {
        checks,
        comparison,
        expectations,
    })
}

fn cmd_reproduce(example: Example, cfg: &ExperimentConfig, stdout: &mut dyn Write) -> Result<i32> {
    let setup = ExampleSetup::for_example(example);
    let mut resolved = cfg.clone();
    resolved.model = Some(setup.model.id());
    resolved.generator = Some(setup.generator.id().to_string());
    resolved.theta = vec![setup.theta];
    resolved.n = Some(setup.n);
    resolved.replicates = Some(cfg.replicates.unwrap_or(setup.default_replicates));
    resolved.seed = Some(cfg.seed.unwrap_or(0));
    let mc = resolved.mc();
    let rep = reproduce(example, &mc)?;

    let mut text = String::new();
    let cfg_json = serde_json::to_string(&resolved).map_err(|e| Error::Config(e.to_string()))?;
    writeln!(text, "# bregman-umvue {VERSION} command=reproduce config={cfg_json}").unwrap();
    writeln!(
        text,
        "{:<12} {:<8} {:>14} {:>14} {:>12} {:>10}  verdict",
        "estimator", "type", "mean", "target", "se", "z"
    )
    .unwrap();
    for c in &rep.checks {
        writeln!(
            text,
            "{:<12} {:<8} {:>14.6} {:>14.6} {:>12.3e} {:>10.2}  {}",
            c.estimator, c.kind, c.mean, c.target, c.se, c.z_score, c.verdict
        )
        .unwrap();
    }
    let c = &rep.comparison;
    writeln!(
        text,
        "compare {} vs {} ({} loss): risk {:.6} vs {:.6}, paired difference {:.6} (se {:.3e}, z {:.2})",
        c.estimator_1, c.estimator_2, c.orientation, c.risk_1, c.risk_2, c.difference, c.difference_se, c.difference_z
    )
    .unwrap();
    for (what, ok) in &rep.expectations {
        writeln!(text, "{} {what}", if *ok { "ok  " } else { "FAIL" }).unwrap();
    }
    stdout.write_all(text.as_bytes())?;

    if let Some(path) = &cfg.out {
        let format = cfg.format.unwrap_or(Format::Csv);
        let body = match format {
            Format::Csv => to_csv(&rep.checks)? + &to_csv(std::slice::from_ref(&rep.comparison))?,
            Format::Json => to_json_lines(&rep.checks)? + &to_json_lines(std::slice::from_ref(&rep.comparison))?,
        };
        std::fs::write(path, format!("# bregman-umvue {VERSION} command=reproduce config={cfg_json}\n{body}"))?;
    }
    Ok(if rep.all_hold() { EXIT_OK } else { EXIT_ASSERTION })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_str(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("bregman-umvue").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn divergence_command() {
        let (code, out, _) = run_str(&["divergence", "--gen", "sqeuclid", "--x", "1,0", "--y", "0,0"]);
        assert_eq!(code, 0);
        assert!(out.contains("divergence: 0.5\n"), "{out}");
        let (code, out, _) = run_str(&["divergence", "--gen", "neglog", "--x", "2", "--y", "2"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("divergence: 0\n"), "{out}");
        let (code, _, err) = run_str(&["divergence", "--gen", "neglog", "--x", "2", "--y", "-1"]);
        assert_eq!(code, 2);
        assert!(err.contains("domain"), "{err}");
        let (code, _, err) = run_str(&["divergence", "--gen", "nope", "--x", "2", "--y", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("generator"), "{err}");
        let (code, _, err) = run_str(&["divergence", "--gen", "neglog", "--x", "2,a", "--y", "1"]);
        assert_eq!(code, 2);
        assert!(err.contains("`x`"), "{err}");
    }

    #[test]
    fn config_file_is_overridden_by_flags() {
        let cfg = ExperimentConfig::from_toml(
            "model = \"exp\"\ngenerator = \"neglog\"\nestimators = [\"type1\"]\ntheta = [2.0]\nn = 5\nM = 2000\nseed = 4\n",
        )
        .unwrap();
        assert_eq!(cfg.replicates, Some(2000));
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.toml");
        std::fs::write(&path, "model = \"exp\"\ngenerator = \"neglog\"\nestimators = [\"type1\"]\ntheta = [2.0]\nn = 5\nM = 2000\nseed = 4\n").unwrap();
        let p = path.to_str().unwrap();
        let (code, a, _) = run_str(&["risk", "--config", p]);
        assert_eq!(code, 0);
        assert!(a.contains("\"seed\":4"));
        let (code, b, _) = run_str(&["risk", "--config", p, "--seed", "5"]);
        assert_eq!(code, 0);
        assert!(b.contains("\"seed\":5"));
        assert_ne!(a, b);
    }

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_str(&["risk", "--model", "exp"]).0, 2);
        assert_eq!(run_str(&["bogus"]).0, 2);
        assert_eq!(run_str(&["reproduce", "--example", "exp", "--M", "100", "--seed", "7"]).0, 2);
        assert_eq!(
            run_str(&["compare", "--model", "exp", "--gen", "neglog", "--estimator", "type1", "--theta", "2", "--n", "5", "--M", "1000"]).0,
            2
        );
        assert_eq!(run_str(&["--help"]).0, 0);
    }
}
