//! `ggm`: generate models, simulate data, infer graphs, run experiments and
//! plot their results.

mod plot;
mod svg;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use ggm_core::format::sig6;
use ggm_core::{
    confusion, decide, generate_model, pairs, raw_pvalues, run_experiment, sample_mvn, DfRule, EdgeSpec, Error,
    ExperimentConfig, GeneratorSpec, ObservationMatrix, ProcedureKind, TrueModel,
};
use serde_json::json;
use sha2::{Digest, Sha256};

/// Bad flags, flag combinations or config contents. Exits with status 1.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser)]
#[command(
    name = "ggm",
    version,
    about = "Identify Gaussian graphical models by multiple testing on partial correlations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a sparse concentration matrix and write it as a model file
    GenerateModel(GenerateArgs),
    /// Sample observations from a model into a CSV file
    Simulate(SimulateArgs),
    /// Infer the graph of one dataset with a chosen procedure
    Infer(InferArgs),
    /// Run a Monte Carlo experiment described by a JSON config
    Experiment(ExperimentArgs),
    /// Draw an SVG chart from experiment output
    Plot(PlotArgs),
}

#[derive(Args)]
#[command(group(ArgGroup::new("edge-spec").required(true).args(["edges", "q"])))]
struct GenerateArgs {
    /// Number of variables
    #[arg(long)]
    p: usize,
    /// Exact number of edges
    #[arg(long)]
    edges: Option<usize>,
    /// Edge density in [0, 1], rounded half up to an edge count
    #[arg(long)]
    q: Option<f64>,
    /// Smallest off-diagonal magnitude
    #[arg(long, default_value_t = 0.2)]
    rho_min: f64,
    /// Largest off-diagonal magnitude
    #[arg(long, default_value_t = 0.55)]
    rho_max: f64,
    /// Generator seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Give each off-diagonal entry a random sign
    #[arg(long)]
    random_sign: bool,
    /// Model file to write (JSON)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Model file (JSON)
    #[arg(long)]
    model: PathBuf,
    /// Number of observations
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Data file to write (CSV with header Y1..Yp)
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InferArgs {
    /// Data file (CSV with a header row)
    #[arg(long)]
    data: PathBuf,
    /// Identification procedure
    #[arg(long, default_value = "holm-sidak", value_parser = procedure_parser())]
    procedure: ProcedureKind,
    /// Significance level in (0, 1)
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    alpha: f64,
    /// Degrees of freedom of the edge test
    #[arg(long, default_value = "n-p", value_parser = df_rule_parser())]
    df_rule: DfRule,
    /// Result file to write (JSON)
    #[arg(long)]
    out: PathBuf,
    /// True model to score the inferred graph against
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Directory for results.csv, risk.csv, roc.csv and manifest.json
    #[arg(long)]
    out_dir: PathBuf,
    /// Worker threads (default: all cores); results do not depend on it
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlotKind {
    /// Pooled ROC curves from roc.csv
    Roc,
    /// Risk curves from risk.csv
    Risk,
    /// Mean false negatives against n from results.csv
    FnVsN,
}

#[derive(Args)]
struct PlotArgs {
    /// Experiment output file matching --kind
    #[arg(long)]
    results: PathBuf,
    /// Chart to draw
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Chart file to write (SVG)
    #[arg(long)]
    out: PathBuf,
    /// Sample size to draw for roc and risk (default: the largest present)
    #[arg(long)]
    n: Option<usize>,
}

fn procedure_parser() -> impl TypedValueParser<Value = ProcedureKind> {
    PossibleValuesParser::new(ProcedureKind::ALL.map(|k| k.name())).map(|s| s.parse().expect("listed name"))
}

fn df_rule_parser() -> impl TypedValueParser<Value = DfRule> {
    PossibleValuesParser::new([DfRule::NMinusP.name(), DfRule::NMinusPMinus2.name()])
        .map(|s| s.parse().expect("listed name"))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let a: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if a > 0.0 && a < 1.0 {
        Ok(a)
    } else {
        Err(format!("{a} is outside (0, 1)"))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<UsageError>() { 1 } else { 2 })
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenerateModel(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Infer(a) => infer(a),
        Command::Experiment(a) => experiment(a),
        Command::Plot(a) => plot::run(&a.results, a.kind, &a.out, a.n),
    }
}

fn generate(a: GenerateArgs) -> anyhow::Result<()> {
    let edge_spec = match (a.edges, a.q) {
        (Some(m), None) => EdgeSpec::Count(m),
        (None, Some(q)) => EdgeSpec::Density(q),
        _ => unreachable!("clap enforces exactly one of --edges and --q"),
    };
    let spec = GeneratorSpec {
        p: a.p,
        edge_spec,
        rho_min: a.rho_min,
        rho_max: a.rho_max,
        seed: a.seed,
        random_sign: a.random_sign,
    };
    let problems = spec.violations();
    if !problems.is_empty() {
        return Err(usage(problems.join("\n")));
    }
    let model = generate_model(&spec)?;
    model
        .write(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    println!("edges: {}", model.edges.len());
    println!("repaired: {}", model.repaired);
    println!("delta: {}", sig6(model.delta));
    Ok(())
}

fn read_model(path: &Path) -> anyhow::Result<TrueModel> {
    TrueModel::read(path).with_context(|| format!("reading model {}", path.display()))
}

fn simulate(a: SimulateArgs) -> anyhow::Result<()> {
    let model = read_model(&a.model)?;
    let data = sample_mvn(&model.covariance, a.n as usize, a.seed)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record((1..=model.dim()).map(|j| format!("Y{j}")))?;
    for row in data.values().row_iter() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    let bytes = w.into_inner().context("flushing CSV")?;
    fs::write(&a.out, bytes).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(())
}

fn read_data(path: &Path) -> anyhow::Result<ObservationMatrix> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let p = r.headers()?.len();
    let mut rows = Vec::new();
    for (k, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != p {
            bail!(
                "{}: row {} has {} fields, expected {p}",
                path.display(),
                k + 1,
                record.len()
            );
        }
        let row = record
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .with_context(|| format!("{}: row {} is not numeric", path.display(), k + 1))?;
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Ok(ObservationMatrix::from_rows(&rows)?)
}

fn infer(a: InferArgs) -> anyhow::Result<()> {
    let data = read_data(&a.data)?;
    let (n, p) = (data.n(), data.p());
    let truth = a.truth.as_deref().map(read_model).transpose()?;
    if let Some(t) = &truth {
        if t.dim() != p {
            bail!("truth model has p = {} but the data has {p} columns", t.dim());
        }
    }
    let raw = match raw_pvalues(&data, a.df_rule) {
        Err(Error::InsufficientSample { n, p, .. }) => {
            bail!("insufficient sample: {n} rows for {p} variables; inference needs n >= p + 2 (and at least one degree of freedom under df rule {})", a.df_rule)
        }
        other => other?,
    };
    let adjusted = a.procedure.apply(&raw);
    let inferred = decide(&adjusted, a.alpha);
    let edges: Vec<[usize; 2]> = inferred.iter().map(|e| [e.i + 1, e.j + 1]).collect();
    let pair_list: Vec<[usize; 2]> = pairs(p).map(|(i, j)| [i + 1, j + 1]).collect();
    let doc = json!({
        "procedure": a.procedure.name(),
        "alpha": a.alpha,
        "df_rule": a.df_rule.name(),
        "n": n,
        "p": p,
        "edges": edges,
        "pairs": pair_list,
        "raw_pvalues": raw.values(),
        "adjusted_pvalues": adjusted.values(),
    });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    fs::write(&a.out, text).with_context(|| format!("writing {}", a.out.display()))?;

    println!("edges: {}", inferred.len());
    if let Some(t) = &truth {
        let c = confusion(&t.edges, &inferred);
        println!("true_pos: {}", c.true_pos);
        println!("false_pos: {}", c.false_pos);
        println!("true_neg: {}", c.true_neg);
        println!("false_neg: {}", c.false_neg);
    }
    Ok(())
}

fn experiment(a: ExperimentArgs) -> anyhow::Result<()> {
    let text = fs::read_to_string(&a.config).with_context(|| format!("reading config {}", a.config.display()))?;
    let base = a.config.parent().unwrap_or(Path::new(""));
    let mut config = ExperimentConfig::from_json(&text, base).map_err(config_error)?;
    config.threads = a.threads.map(|t| t as usize);
    let report = run_experiment(&config).map_err(config_error)?;

    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let write = |name: &str, body: String| {
        let path = a.out_dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write("results.csv", report.results_csv())?;
    write("risk.csv", report.risk_csv())?;
    write("roc.csv", report.roc_csv())?;

    let failed: serde_json::Map<String, serde_json::Value> = report
        .failed_trials
        .iter()
        .map(|(n, c)| (n.to_string(), json!(c)))
        .collect();
    let model = &report.model;
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": hex::encode(Sha256::digest(text.as_bytes())),
        "master_seed": config.master_seed,
        "trials": config.trials,
        "n_list": config.n_list,
        "procedures": config.procedures.iter().map(|k| k.name()).collect::<Vec<_>>(),
        "alpha": config.alpha,
        "df_rule": config.df_rule.name(),
        "failed_trials": failed,
        "total_failed_trials": report.total_failed_trials(),
        "model": {
            "p": model.dim(),
            "edges": model.edges.len(),
            "seed": model.spec.as_ref().map(|s| s.seed),
            "repaired": model.repaired,
            "delta": model.delta,
        },
        "files": ["results.csv", "risk.csv", "roc.csv"],
    });
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    write("manifest.json", body)?;

    println!(
        "{} summary rows for {} procedures; {} failed trials redrawn",
        report.summary.len(),
        config.procedures.len(),
        report.total_failed_trials()
    );
    Ok(())
}

fn config_error(e: Error) -> anyhow::Error {
    match e {
        Error::InvalidConfig(list) => usage(format!("invalid configuration:\n  {}", list.join("\n  "))),
        other => other.into(),
    }
}
