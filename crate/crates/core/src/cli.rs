//! Command-line front end: argument parsing, pipelines and rendering.
//!
//! [`parse_args`] turns an argument vector into a validated [`RunConfig`];
//! [`run`] executes it, writing results to one stream and diagnostics to
//! another, and returns the process exit code (0 success, 2 input or usage
//! error, 3 numerical failure).

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::causal::{discern_structure, rank_interventions, ScreenSettings};
use crate::dataset::{load_csv, Dataset, GroupSpec};
use crate::error::{Error, Result};
use crate::forest::{fit_forest, forest_oomph, permutation_importance, ForestParams};
use crate::importance::ImportanceMethod;
use crate::inference::{bootstrap_importance, BootstrapPlan, BootstrapScheme, IntervalKind};
use crate::moments::{moments, MomentModel};
use crate::oomph::{assess_oomph, shift_response, t_squared, usefulness, Verdict};
use crate::pmvd::PmvdSettings;
use crate::result::{ImportanceResult, Method};
use crate::shapley::{LmgSettings, OrderSampling};

/// Environment variable holding the default worker-thread count.
pub const THREADS_ENV: &str = "RELIMP_THREADS";

#[derive(Debug, Parser)]
#[command(name = "relimp", version, about = "Relative importance of regressors")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Exact or sampled LMG (Shapley) shares; grouped shares with --groups.
    Lmg(Opts),
    /// PMVD shares.
    Pmvd(Opts),
    /// Proportional-value shares.
    Propval(Opts),
    /// Johnson relative weights.
    Johnson(Opts),
    /// Usefulness (R² lost on deletion) and t² per regressor.
    Usefulness(Opts),
    /// Random-forest permutation importance.
    Forest(Opts),
    /// Cutoff verdicts on importance proportions.
    Oomph(Opts),
    /// Marginal-versus-conditional causal screening.
    Causal(Opts),
    /// Intervention ranking by importance share.
    Rank(Opts),
}

#[derive(Debug, Args)]
struct Opts {
    /// Headered CSV file with numeric columns.
    input: PathBuf,
    /// Response column.
    #[arg(short, long)]
    response: String,
    /// Observation-weight column (removed from the regressors).
    #[arg(long)]
    weights: Option<String>,
    /// Regressor groups, e.g. "size=x1,x2;region=x3".
    #[arg(long)]
    groups: Option<String>,
    /// LMG evaluation: `exact` or `sample:K` (K random orders).
    #[arg(long)]
    approx: Option<String>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    output: OutputFormat,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of bootstrap replicates; enables intervals.
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long, value_enum, default_value_t = SchemeArg::Pairs)]
    scheme: SchemeArg,
    #[arg(long, value_enum, default_value_t = IntervalArg::Percentile)]
    interval: IntervalArg,
    /// Confidence level of intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Proportion cutoff for "important" / "oomphy".
    #[arg(long, default_value_t = 0.15)]
    cutoff: f64,
    /// Minimum |correlation| for accepting a causal edge.
    #[arg(long, default_value_t = 0.3)]
    corr_threshold: f64,
    /// |correlation| at which two indirect variables are left unresolved
    /// (defaults to --corr-threshold).
    #[arg(long)]
    ambiguity_threshold: Option<f64>,
    /// Importance method for oomph and rank.
    #[arg(long, default_value = "lmg")]
    method: String,
    /// Marginal importance for causal: a method name or a JSON result file.
    #[arg(long, default_value = "lmg")]
    marginal: String,
    /// Conditional importance for causal: a method name or a JSON result file.
    #[arg(long, default_value = "pmvd")]
    conditional: String,
    /// Variables excluded from intervention ranking (comma separated).
    #[arg(long, value_delimiter = ',')]
    exclude: Vec<String>,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Variables tried per split (default: ⌈n/3⌉).
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long, default_value_t = 5)]
    min_node_size: usize,
    /// Write the fitted forest as JSON to this path.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// Replace the response by y − C·x, given as `x=C`.
    #[arg(long)]
    shift: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    Pairs,
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntervalArg {
    Percentile,
    Bca,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Lmg,
    Pmvd,
    Propval,
    Johnson,
    Usefulness,
    Forest,
    Oomph,
    Causal,
    Rank,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Lmg => "lmg",
            Command::Pmvd => "pmvd",
            Command::Propval => "propval",
            Command::Johnson => "johnson",
            Command::Usefulness => "usefulness",
            Command::Forest => "forest",
            Command::Oomph => "oomph",
            Command::Causal => "causal",
            Command::Rank => "rank",
        }
    }
}

/// An importance method selectable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodChoice {
    Lmg,
    Pmvd,
    Propval,
    Johnson,
    Forest,
}

impl MethodChoice {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "lmg" => MethodChoice::Lmg,
            "pmvd" => MethodChoice::Pmvd,
            "propval" | "proportional_value" => MethodChoice::Propval,
            "johnson" => MethodChoice::Johnson,
            "forest" => MethodChoice::Forest,
            _ => return None,
        })
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            MethodChoice::Lmg => "lmg",
            MethodChoice::Pmvd => "pmvd",
            MethodChoice::Propval => "propval",
            MethodChoice::Johnson => "johnson",
            MethodChoice::Forest => "forest",
        }
    }
}

/// Where causal screening takes an importance result from.
#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Method(MethodChoice),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Approx {
    Exact,
    Sample(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapArgs {
    pub replicates: usize,
    pub scheme: BootstrapScheme,
    pub interval: IntervalKind,
}

/// A validated invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: PathBuf,
    pub response: String,
    pub weights: Option<String>,
    pub groups: Option<String>,
    pub approx: Approx,
    pub output: OutputFormat,
    pub seed: u64,
    pub bootstrap: Option<BootstrapArgs>,
    pub level: f64,
    pub cutoff: f64,
    pub screen: ScreenSettings,
    /// Method used by `oomph` and `rank`.
    pub method: MethodChoice,
    pub marginal: Source,
    pub conditional: Source,
    pub exclude: Vec<String>,
    pub forest: ForestParams,
    pub dump: Option<PathBuf>,
    pub shift: Option<(String, f64)>,
}

fn usage(kind: ErrorKind, msg: impl std::fmt::Display) -> clap::Error {
    Cli::command().error(kind, msg)
}

fn parse_approx(text: &str) -> std::result::Result<Approx, clap::Error> {
    if text == "exact" {
        return Ok(Approx::Exact);
    }
    let k = text
        .strip_prefix("sample:")
        .and_then(|k| k.parse::<usize>().ok())
        .ok_or_else(|| {
            usage(
                ErrorKind::InvalidValue,
                format!("--approx must be `exact` or `sample:K`, got `{text}`"),
            )
        })?;
    if k == 0 {
        return Err(usage(ErrorKind::InvalidValue, "sample:K requires K >= 1"));
    }
    Ok(Approx::Sample(k))
}

fn parse_source(text: &str) -> Source {
    MethodChoice::parse(text).map_or_else(|| Source::File(PathBuf::from(text)), Source::Method)
}

fn unit_interval(name: &str, v: f64) -> std::result::Result<(), clap::Error> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(usage(
            ErrorKind::InvalidValue,
            format!("{name} must lie in (0, 1), got {v}"),
        ))
    }
}

/// Parses and validates an argument vector (program name first).
pub fn parse_args<I, S>(argv: I) -> std::result::Result<RunConfig, clap::Error>
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let (command, o) = match cli.command {
        CliCommand::Lmg(o) => (Command::Lmg, o),
        CliCommand::Pmvd(o) => (Command::Pmvd, o),
        CliCommand::Propval(o) => (Command::Propval, o),
        CliCommand::Johnson(o) => (Command::Johnson, o),
        CliCommand::Usefulness(o) => (Command::Usefulness, o),
        CliCommand::Forest(o) => (Command::Forest, o),
        CliCommand::Oomph(o) => (Command::Oomph, o),
        CliCommand::Causal(o) => (Command::Causal, o),
        CliCommand::Rank(o) => (Command::Rank, o),
    };
    let method = MethodChoice::parse(&o.method).ok_or_else(|| {
        usage(
            ErrorKind::InvalidValue,
            format!("unknown method `{}`", o.method),
        )
    })?;
    // the single importance method a command evaluates, if any
    let effective = match command {
        Command::Lmg => Some(MethodChoice::Lmg),
        Command::Pmvd => Some(MethodChoice::Pmvd),
        Command::Propval => Some(MethodChoice::Propval),
        Command::Johnson => Some(MethodChoice::Johnson),
        Command::Forest => Some(MethodChoice::Forest),
        Command::Oomph | Command::Rank => Some(method),
        Command::Usefulness | Command::Causal => None,
    };
    let is_lmg = effective == Some(MethodChoice::Lmg);

    let approx = match &o.approx {
        None => Approx::Exact,
        Some(text) => {
            let a = parse_approx(text)?;
            if !is_lmg && a != Approx::Exact {
                let who = effective.map_or(command.as_str(), |m| m.as_str());
                return Err(usage(
                    ErrorKind::ArgumentConflict,
                    format!("{who} has no sampling mode"),
                ));
            }
            a
        }
    };
    if o.groups.is_some() {
        if !is_lmg {
            return Err(usage(
                ErrorKind::ArgumentConflict,
                "--groups applies to lmg only",
            ));
        }
        if approx != Approx::Exact {
            return Err(usage(
                ErrorKind::ArgumentConflict,
                "--groups cannot be combined with sampled lmg",
            ));
        }
    }
    let bootstrap = match o.bootstrap {
        None => None,
        Some(b) => {
            let linear = matches!(
                effective,
                Some(
                    MethodChoice::Lmg
                        | MethodChoice::Pmvd
                        | MethodChoice::Propval
                        | MethodChoice::Johnson
                )
            );
            if !linear {
                return Err(usage(
                    ErrorKind::ArgumentConflict,
                    format!("--bootstrap is not available for {}", command.as_str()),
                ));
            }
            Some(BootstrapArgs {
                replicates: b,
                scheme: match o.scheme {
                    SchemeArg::Pairs => BootstrapScheme::Pairs,
                    SchemeArg::Residual => BootstrapScheme::ResidualFixedDesign,
                },
                interval: match o.interval {
                    IntervalArg::Percentile => IntervalKind::Percentile,
                    IntervalArg::Bca => IntervalKind::Bca,
                },
            })
        }
    };
    if o.dump.is_some() && effective != Some(MethodChoice::Forest) {
        return Err(usage(
            ErrorKind::ArgumentConflict,
            "--dump applies to forest models only",
        ));
    }
    unit_interval("--level", o.level)?;
    unit_interval("--cutoff", o.cutoff)?;
    unit_interval("--corr-threshold", o.corr_threshold)?;
    if let Some(a) = o.ambiguity_threshold {
        unit_interval("--ambiguity-threshold", a)?;
    }
    let shift = match &o.shift {
        None => None,
        Some(text) => {
            let parsed = text
                .split_once('=')
                .and_then(|(v, c)| Some((v.trim().to_string(), c.trim().parse::<f64>().ok()?)))
                .filter(|(v, c)| !v.is_empty() && c.is_finite());
            Some(parsed.ok_or_else(|| {
                usage(
                    ErrorKind::InvalidValue,
                    format!("--shift must look like `x=C`, got `{text}`"),
                )
            })?)
        }
    };
    let marginal = parse_source(&o.marginal);
    let conditional = parse_source(&o.conditional);
    Ok(RunConfig {
        command,
        input: o.input,
        response: o.response,
        weights: o.weights,
        groups: o.groups,
        approx,
        output: o.output,
        seed: o.seed,
        bootstrap,
        level: o.level,
        cutoff: o.cutoff,
        screen: ScreenSettings {
            importance_cutoff: o.cutoff,
            corr_threshold: o.corr_threshold,
            ambiguity_threshold: o.ambiguity_threshold,
        },
        method,
        marginal,
        conditional,
        exclude: o.exclude.into_iter().filter(|e| !e.is_empty()).collect(),
        forest: ForestParams {
            n_trees: o.trees,
            mtry: o.mtry,
            min_node_size: o.min_node_size,
            seed: o.seed,
        },
        dump: o.dump,
        shift,
    })
}

/// Executes `cfg`, writing the rendered result to `out` and diagnostics to
/// `err`. Returns the exit code.
pub fn run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match execute(cfg) {
        Ok(report) => {
            for w in report
                .get("warnings")
                .and_then(Value::as_array)
                .into_iter()
                .flatten()
                .filter_map(Value::as_str)
            {
                log::warn!("{w}");
            }
            let text = match cfg.output {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&report).expect("JSON values always serialize")
                }
                OutputFormat::Table => render_table(&report),
            };
            match writeln!(out, "{text}") {
                Ok(()) => 0,
                Err(e) => {
                    let _ = writeln!(err, "error: writing output: {e}");
                    2
                }
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_numerical() {
                3
            } else {
                2
            }
        }
    }
}

/// Runs `cfg` and returns the JSON report.
pub fn execute(cfg: &RunConfig) -> Result<Value> {
    let d = load_dataset(cfg)?;
    let mut report = match cfg.command {
        Command::Lmg | Command::Pmvd | Command::Propval | Command::Johnson | Command::Forest => {
            let choice = match cfg.command {
                Command::Lmg => MethodChoice::Lmg,
                Command::Pmvd => MethodChoice::Pmvd,
                Command::Propval => MethodChoice::Propval,
                Command::Johnson => MethodChoice::Johnson,
                _ => MethodChoice::Forest,
            };
            let c = compute(cfg, &d, choice)?;
            result_json(&c.result, &d, &c.extra)
        }
        Command::Usefulness => usefulness_report(&d)?,
        Command::Oomph => oomph_report(cfg, &d)?,
        Command::Causal => causal_report(cfg, &d)?,
        Command::Rank => rank_report(cfg, &d)?,
    };
    finish(&mut report, cfg);
    Ok(report)
}

fn load_dataset(cfg: &RunConfig) -> Result<Dataset<f64>> {
    let d = load_csv(&cfg.input, &cfg.response, cfg.weights.as_deref())?;
    match &cfg.shift {
        None => Ok(d),
        Some((var, c)) => {
            let j = d
                .regressor_index(var)
                .ok_or_else(|| Error::UnknownColumn(var.clone()))?;
            shift_response(&d, j, *c)
        }
    }
}

/// Adds seed and settings echoes to a report.
fn finish(report: &mut Value, cfg: &RunConfig) {
    let obj = report.as_object_mut().expect("reports are objects");
    let mut settings: BTreeMap<String, Value> = obj
        .remove("settings")
        .and_then(|s| serde_json::from_value(s).ok())
        .unwrap_or_default();
    let mut put = |k: &str, v: Value| {
        settings.entry(k.to_string()).or_insert(v);
    };
    put("command", json!(cfg.command.as_str()));
    put("input", json!(cfg.input.display().to_string()));
    if let Some(w) = &cfg.weights {
        put("weight_column", json!(w));
    }
    if let Some(g) = &cfg.groups {
        put("groups", json!(g));
    }
    put(
        "approx",
        json!(match cfg.approx {
            Approx::Exact => "exact".to_string(),
            Approx::Sample(k) => format!("sample:{k}"),
        }),
    );
    if let Some((v, c)) = &cfg.shift {
        put("shift", json!(format!("{v}={c}")));
    }
    match cfg.command {
        Command::Oomph | Command::Causal => put("cutoff", json!(cfg.cutoff.to_string())),
        _ => {}
    }
    obj.insert("settings".into(), json!(settings));
    obj.insert("seed".into(), json!(cfg.seed));
    obj.entry("warnings").or_insert_with(|| json!([]));
}

/// An importance result plus extra per-variable columns for rendering.
struct Computed {
    result: ImportanceResult<f64>,
    extra: Vec<(String, Vec<Value>)>,
}

fn linear_method(
    cfg: &RunConfig,
    d: &Dataset<f64>,
    choice: MethodChoice,
) -> Result<ImportanceMethod> {
    Ok(match choice {
        MethodChoice::Lmg => match cfg.approx {
            Approx::Sample(k) => ImportanceMethod::LmgSampled {
                sampling: OrderSampling::WithReplacement(k),
                seed: cfg.seed,
            },
            Approx::Exact => ImportanceMethod::Lmg {
                groups: cfg
                    .groups
                    .as_deref()
                    .map(|g| GroupSpec::parse(g, &d.regressor_names()))
                    .transpose()?,
                settings: LmgSettings::default(),
            },
        },
        MethodChoice::Pmvd => ImportanceMethod::Pmvd(PmvdSettings::default()),
        MethodChoice::Propval => ImportanceMethod::ProportionalValue(PmvdSettings::default()),
        MethodChoice::Johnson => ImportanceMethod::Johnson,
        MethodChoice::Forest => unreachable!("forest is not a linear method"),
    })
}

fn compute(cfg: &RunConfig, d: &Dataset<f64>, choice: MethodChoice) -> Result<Computed> {
    if choice == MethodChoice::Forest {
        return compute_forest(cfg, d);
    }
    let method = linear_method(cfg, d, choice)?;
    let result = match &cfg.bootstrap {
        None => method.compute(&moments(d)?)?,
        Some(b) => {
            let mut plan = BootstrapPlan::new(method, b.replicates, cfg.seed);
            plan.scheme = b.scheme;
            plan.interval = b.interval;
            plan.level = cfg.level;
            bootstrap_importance(d, &plan)?.result
        }
    };
    Ok(Computed {
        result,
        extra: Vec::new(),
    })
}

fn compute_forest(cfg: &RunConfig, d: &Dataset<f64>) -> Result<Computed> {
    let model = fit_forest(d, &cfg.forest)?;
    if let Some(path) = &cfg.dump {
        let text = serde_json::to_string_pretty(&model)
            .map_err(|e| Error::InvalidArgument(format!("serializing forest: {e}")))?;
        std::fs::write(path, text).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    let fi = permutation_importance(&model, d, cfg.seed)?;
    let fo = forest_oomph(&fi, cfg.level)?;
    let mut result = ImportanceResult::new(
        Method::Forest,
        fi.labels.clone(),
        fo.scaled.clone(),
        fi.oob_r2,
    );
    result.proportions = fi.shares.clone();
    result.intervals = Some(fo.intervals.clone());
    result.proportion_intervals = (fi.oob_r2 > 0.0).then(|| {
        fo.intervals
            .iter()
            .map(|&(lo, hi)| (lo / fi.oob_r2, hi / fi.oob_r2))
            .collect()
    });
    result.level = Some(cfg.level);
    result.seed = Some(cfg.seed);
    result.warnings = fi.warnings.iter().chain(&fo.warnings).cloned().collect();
    if d.weights().is_some() {
        result
            .warnings
            .push("observation weights are ignored by the forest".into());
    }
    let result = result
        .with_setting("trees", model.n_trees())
        .with_setting("mtry", cfg.forest.resolved_mtry(d.n_regressors()))
        .with_setting("min_node_size", cfg.forest.min_node_size)
        .with_setting("oob_mse", fi.oob_mse);
    let extra = vec![("raw".to_string(), fi.raw.iter().map(|&r| num(r)).collect())];
    Ok(Computed { result, extra })
}

/// `x` rounded to 15 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let r: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    let r = if r == 0.0 { 0.0 } else { r };
    serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
}

fn pair(p: (f64, f64)) -> Value {
    json!([num(p.0), num(p.1)])
}

fn variables_json(res: &ImportanceResult<f64>, extra: &[(String, Vec<Value>)]) -> Value {
    let vars: Vec<Value> = (0..res.len())
        .map(|j| {
            let mut v = Map::new();
            v.insert("name".into(), json!(res.labels[j]));
            v.insert("share".into(), num(res.shares[j]));
            v.insert("proportion".into(), num(res.proportions[j]));
            if let Some(se) = &res.stderr {
                v.insert("stderr".into(), num(se[j]));
            }
            if let Some(iv) = &res.intervals {
                v.insert("ci".into(), pair(iv[j]));
            }
            if let Some(iv) = &res.proportion_intervals {
                v.insert("proportion_ci".into(), pair(iv[j]));
            }
            for (key, col) in extra {
                v.insert(key.clone(), col[j].clone());
            }
            Value::Object(v)
        })
        .collect();
    Value::Array(vars)
}

fn result_json(
    res: &ImportanceResult<f64>,
    d: &Dataset<f64>,
    extra: &[(String, Vec<Value>)],
) -> Value {
    let mut obj = Map::new();
    obj.insert("method".into(), json!(res.method.as_str()));
    obj.insert("response".into(), json!(d.response_name()));
    obj.insert("n_obs".into(), json!(d.n_obs()));
    let total_key = if res.method == Method::Forest {
        "oob_r2"
    } else {
        "r_squared"
    };
    obj.insert(total_key.into(), num(res.total));
    obj.insert("variables".into(), variables_json(res, extra));
    if let Some(level) = res.level {
        obj.insert("level".into(), json!(level));
    }
    obj.insert("settings".into(), json!(res.settings));
    obj.insert("warnings".into(), json!(res.warnings));
    Value::Object(obj)
}

fn usefulness_report(d: &Dataset<f64>) -> Result<Value> {
    let mm = moments(d)?;
    let r2 = mm.full_r2();
    let mut vars = Vec::new();
    for j in 0..d.n_regressors() {
        let u = usefulness(&mm, j)?;
        let t2 = t_squared(d, j)?;
        vars.push(json!({
            "name": d.regressor_name(j),
            "share": num(u),
            "proportion": num(if r2 > 0.0 { u / r2 } else { 0.0 }),
            "t_squared": num(t2),
        }));
    }
    Ok(json!({
        "method": "usefulness",
        "response": d.response_name(),
        "n_obs": d.n_obs(),
        "r_squared": num(r2),
        "variables": vars,
        "warnings": ["usefulness shares do not sum to r_squared"],
    }))
}

fn oomph_report(cfg: &RunConfig, d: &Dataset<f64>) -> Result<Value> {
    let c = compute(cfg, d, cfg.method)?;
    let assessment = assess_oomph(&c.result, cfg.cutoff)?;
    let verdicts: Vec<Value> = assessment
        .entries
        .iter()
        .map(|e| {
            json!(match e.verdict {
                Verdict::Oomphy => "oomphy",
                Verdict::NotOomphy => "not_oomphy",
                Verdict::Indeterminate => "indeterminate",
            })
        })
        .collect();
    let mut extra = c.extra;
    extra.push(("verdict".into(), verdicts));
    let mut report = result_json(&c.result, d, &extra);
    report["cutoff"] = json!(cfg.cutoff);
    Ok(report)
}

fn source_result(
    cfg: &RunConfig,
    d: &Dataset<f64>,
    source: &Source,
) -> Result<ImportanceResult<f64>> {
    match source {
        Source::Method(m) => Ok(compute(cfg, d, *m)?.result),
        Source::File(path) => read_result_json(path),
    }
}

/// Reads an importance result previously written by this tool as JSON.
pub fn read_result_json(path: &std::path::Path) -> Result<ImportanceResult<f64>> {
    let shown = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: shown.clone(),
        source,
    })?;
    let bad = |what: &str| Error::InvalidArgument(format!("{shown}: {what}"));
    let v: Value = serde_json::from_str(&text).map_err(|e| bad(&e.to_string()))?;
    let method: Method = serde_json::from_value(v["method"].clone())
        .map_err(|_| bad("missing or unknown `method`"))?;
    let total = v["r_squared"]
        .as_f64()
        .or_else(|| v["oob_r2"].as_f64())
        .ok_or_else(|| bad("missing `r_squared`"))?;
    let vars = v["variables"]
        .as_array()
        .ok_or_else(|| bad("missing `variables`"))?;
    let mut labels = Vec::new();
    let mut shares = Vec::new();
    let mut proportions = Vec::new();
    for var in vars {
        labels.push(
            var["name"]
                .as_str()
                .ok_or_else(|| bad("variable without `name`"))?
                .to_string(),
        );
        shares.push(
            var["share"]
                .as_f64()
                .ok_or_else(|| bad("variable without `share`"))?,
        );
        proportions.push(
            var["proportion"]
                .as_f64()
                .ok_or_else(|| bad("variable without `proportion`"))?,
        );
    }
    let mut res = ImportanceResult::new(method, labels, shares, total);
    res.proportions = proportions;
    Ok(res)
}

fn causal_report(cfg: &RunConfig, d: &Dataset<f64>) -> Result<Value> {
    let mm: MomentModel<f64> = moments(d)?;
    let marginal = source_result(cfg, d, &cfg.marginal)?;
    let conditional = source_result(cfg, d, &cfg.conditional)?;
    let report = discern_structure(&marginal, &conditional, &mm, &cfg.screen)?;
    let side = |r: &ImportanceResult<f64>| json!({ "method": r.method.as_str(), "total": num(r.total), "variables": variables_json(r, &[]) });
    let edges: Vec<Value> = report
        .edges
        .iter()
        .map(|e| {
            json!({
                "from": e.from,
                "to": e.to,
                "correlation": num(e.correlation),
                "status": e.status,
            })
        })
        .collect();
    let pairs: Vec<Value> = report
        .unresolved_pairs
        .iter()
        .map(|p| json!({ "a": p.a, "b": p.b, "correlation": num(p.correlation) }))
        .collect();
    let warnings: Vec<&String> = marginal
        .warnings
        .iter()
        .chain(&conditional.warnings)
        .collect();
    Ok(json!({
        "method": "causal",
        "response": d.response_name(),
        "n_obs": d.n_obs(),
        "r_squared": num(mm.full_r2()),
        "marginal": side(&marginal),
        "conditional": side(&conditional),
        "direct": report.direct,
        "indirect": report.indirect,
        "edges": edges,
        "unresolved_pairs": pairs,
        "unclassifiable": report.unclassifiable,
        "assumptions": report.assumptions,
        "notes": report.notes,
        "settings": {
            "corr_threshold": cfg.screen.corr_threshold.to_string(),
            "ambiguity_threshold": cfg.screen.ambiguity().to_string(),
        },
        "warnings": warnings,
    }))
}

fn rank_report(cfg: &RunConfig, d: &Dataset<f64>) -> Result<Value> {
    let names = d.regressor_names();
    let c = compute(cfg, d, cfg.method)?;
    if let Some(unknown) = cfg
        .exclude
        .iter()
        .find(|e| !c.result.labels.contains(e) && !names.contains(e))
    {
        return Err(Error::UnknownColumn(unknown.clone()));
    }
    let excluded: BTreeSet<String> = cfg.exclude.iter().cloned().collect();
    let ranking = rank_interventions(&c.result, &excluded);
    let ranked: Vec<Value> = ranking
        .ranked
        .iter()
        .enumerate()
        .map(|(i, v)| json!({ "rank": i + 1, "name": v.label, "share": num(v.share) }))
        .collect();
    let excl: Vec<Value> = ranking
        .excluded
        .iter()
        .map(|e| json!({ "name": e.label, "reason": e.reason }))
        .collect();
    let total_key = if c.result.method == Method::Forest {
        "oob_r2"
    } else {
        "r_squared"
    };
    Ok(json!({
        "method": "rank",
        "based_on": c.result.method.as_str(),
        "response": d.response_name(),
        "n_obs": d.n_obs(),
        total_key: num(c.result.total),
        "ranked": ranked,
        "excluded": excl,
        "settings": c.result.settings,
        "warnings": c.result.warnings,
    }))
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

fn cell_text(v: Option<&Value>) -> String {
    match v {
        None => String::new(),
        Some(Value::Array(items)) => {
            let inner: Vec<String> = items.iter().map(scalar_text).collect();
            format!("[{}]", inner.join(", "))
        }
        Some(v) => scalar_text(v),
    }
}

fn render_rows(rows: &[Value], indent: &str, out: &mut String) {
    let mut columns: Vec<String> = Vec::new();
    for r in rows {
        for k in r.as_object().into_iter().flat_map(|o| o.keys()) {
            if !columns.contains(k) {
                columns.push(k.clone());
            }
        }
    }
    // identifying columns first
    for key in ["name", "rank"].iter().rev() {
        if let Some(p) = columns.iter().position(|c| c == key) {
            let c = columns.remove(p);
            columns.insert(0, c);
        }
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| columns.iter().map(|c| cell_text(r.get(c))).collect())
        .collect();
    let widths: Vec<usize> = columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            cells
                .iter()
                .map(|row| row[i].chars().count())
                .chain([c.chars().count()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |fields: Vec<&str>| {
        let padded: Vec<String> = fields
            .iter()
            .zip(&widths)
            .map(|(f, w)| format!("{f:<w$}"))
            .collect();
        format!("{indent}  {}\n", padded.join("  ").trim_end())
    };
    out.push_str(&line(columns.iter().map(String::as_str).collect()));
    for row in &cells {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
}

fn render_object(obj: &Map<String, Value>, indent: &str, out: &mut String) {
    for (k, v) in obj {
        match v {
            Value::Object(inner) => {
                out.push_str(&format!("{indent}{k}:\n"));
                render_object(inner, &format!("{indent}  "), out);
            }
            Value::Array(items) if items.iter().any(Value::is_object) => {
                out.push_str(&format!("{indent}{k}:\n"));
                render_rows(items, indent, out);
            }
            Value::Array(items) if k == "warnings" || k == "assumptions" || k == "notes" => {
                out.push_str(&format!("{indent}{k}:"));
                if items.is_empty() {
                    out.push_str(" none");
                }
                out.push('\n');
                for item in items {
                    out.push_str(&format!("{indent}  - {}\n", scalar_text(item)));
                }
            }
            Value::Array(_) => out.push_str(&format!("{indent}{k}: {}\n", cell_text(Some(v)))),
            _ => out.push_str(&format!("{indent}{k}: {}\n", scalar_text(v))),
        }
    }
}

/// Plain-text rendering of a report; numbers print exactly as in the JSON.
pub fn render_table(report: &Value) -> String {
    let mut out = String::new();
    match report {
        Value::Object(obj) => render_object(obj, "", &mut out),
        other => out.push_str(&scalar_text(other)),
    }
    out.trim_end().to_string()
}
