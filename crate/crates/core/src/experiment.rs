//! Seeded Monte Carlo harness.
//!
//! One true model is fixed per experiment. For every sample size `n` and
//! trial index, a dataset is drawn with a seed derived from
//! `(master_seed, n, trial_index)`, raw p-values are computed once, and every
//! requested procedure is applied to that same dataset. Trials may run in
//! parallel; aggregation always happens in trial order, so output does not
//! depend on scheduling.
//!
//! Seed derivation (splitmix64 finalizer `mix`):
//! `trial_seed = mix(mix(master_seed ^ mix(n)) ^ trial_index)`.
//! A trial whose sample is degenerate is redrawn with `mix(seed ^ REDRAW_KEY)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::adjust::{reject_below, ProcedureKind};
use crate::edges::EdgeSet;
use crate::format::sig6;
use crate::metrics::{self, ConfusionCounts, RiskValue, RocCurve};
use crate::model::{generate_model, sample_mvn, EdgeSpec, GeneratorSpec, TrueModel};
use crate::stats::{raw_pvalues, DfRule};
use crate::{Error, Result};

pub const REDRAW_KEY: u64 = 0xA5A5_5A5A_C3C3_3C3C;
pub const MAX_REDRAWS: usize = 100;

/// Header of the per-(procedure, n) results file.
pub const RESULTS_HEADER: &str = "procedure,n,alpha,trials,failed_trials,fwer_hat,p_fn_pos,mean_fp,mean_fn,mean_auc";
pub const RISK_HEADER: &str = "procedure,n,alpha_weight,risk";
pub const ROC_HEADER: &str = "procedure,n,fpr,tpr";

/// Minimum step between emitted pooled-ROC vertices.
pub const ROC_THIN_STEP: f64 = 1e-3;

/// splitmix64 output function.
pub fn mix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(master_seed: u64, n: usize, trial_index: usize) -> u64 {
    mix(mix(master_seed ^ mix(n as u64)) ^ trial_index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Generate(GeneratorSpec),
    File(PathBuf),
    Fixed(Box<TrueModel>),
}

/// How the risk curve pairs decision level and risk weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RiskMode {
    /// Re-decide at each grid value and weight the risk by that same value.
    #[default]
    Coupled,
    /// Decide once at `alpha`; evaluate the risk weight over the grid.
    Decoupled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub n_list: Vec<usize>,
    pub procedures: Vec<ProcedureKind>,
    pub alpha: f64,
    pub alpha_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
    pub df_rule: DfRule,
    pub risk_mode: RiskMode,
    /// Worker threads; `Some(1)` runs on the calling thread, `None` uses the
    /// global pool. Does not affect results.
    pub threads: Option<usize>,
}

pub fn default_alpha_grid() -> Vec<f64> {
    (0..=20).map(|k| k as f64 / 20.0).collect()
}

const CONFIG_KEYS: &[&str] = &[
    "p",
    "q",
    "m",
    "rho_min",
    "rho_max",
    "model_seed",
    "random_sign",
    "model",
    "n_list",
    "procedures",
    "alpha",
    "alpha_grid",
    "trials",
    "master_seed",
    "df_rule",
    "decouple_risk_weight",
];

impl ExperimentConfig {
    pub fn new(model: ModelSource, n_list: Vec<usize>, procedures: Vec<ProcedureKind>) -> Self {
        ExperimentConfig {
            model,
            n_list,
            procedures,
            alpha: 0.05,
            alpha_grid: default_alpha_grid(),
            trials: 1000,
            master_seed: 0,
            df_rule: DfRule::NMinusP,
            risk_mode: RiskMode::Coupled,
            threads: None,
        }
    }

    /// Parses a JSON config, collecting every violation. A relative `model`
    /// path is resolved against `base_dir`.
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let value: Value =
            serde_json::from_str(text).map_err(|e| Error::InvalidConfig(vec![format!("not valid JSON: {e}")]))?;
        let Value::Object(obj) = value else {
            return Err(Error::InvalidConfig(vec!["config must be a JSON object".into()]));
        };
        let mut errs = Vec::new();
        let mut dim_hint = None;
        let mut fields = Fields {
            obj: &obj,
            errs: &mut errs,
        };

        for key in obj.keys() {
            if !CONFIG_KEYS.contains(&key.as_str()) {
                fields.errs.push(format!("unknown key `{key}`"));
            }
        }

        let n_list = fields.usize_list("n_list");
        let procedures = fields.procedures();
        let alpha = fields.f64("alpha").unwrap_or(0.05);
        let alpha_grid = fields.f64_list("alpha_grid").unwrap_or_else(default_alpha_grid);
        let trials = fields.u64("trials").unwrap_or(1000) as usize;
        let master_seed = fields.u64("master_seed").unwrap_or(0);
        let df_rule = match obj.get("df_rule") {
            None => DfRule::NMinusP,
            Some(Value::String(s)) => s.parse().unwrap_or_else(|e: String| {
                fields.errs.push(e);
                DfRule::NMinusP
            }),
            Some(_) => {
                fields.errs.push("`df_rule` must be a string".into());
                DfRule::NMinusP
            }
        };
        let risk_mode = if fields.bool("decouple_risk_weight").unwrap_or(false) {
            RiskMode::Decoupled
        } else {
            RiskMode::Coupled
        };

        let model = if let Some(path) = obj.get("model") {
            for key in ["p", "q", "m", "rho_min", "rho_max", "model_seed", "random_sign"] {
                if obj.contains_key(key) {
                    fields.errs.push(format!("`{key}` cannot be combined with `model`"));
                }
            }
            match path {
                Value::String(s) => Some(ModelSource::File(base_dir.join(s))),
                _ => {
                    fields.errs.push("`model` must be a path string".into());
                    None
                }
            }
        } else {
            let p = fields.u64("p");
            dim_hint = p.map(|p| p as usize);
            if p.is_none() && !obj.contains_key("p") {
                fields.errs.push("missing `p` (or a `model` path)".into());
            }
            let edge_spec = match (obj.contains_key("q"), obj.contains_key("m")) {
                (true, true) => {
                    fields.errs.push("give exactly one of `q` and `m`, not both".into());
                    None
                }
                (false, false) => {
                    fields.errs.push("missing edge specification: one of `q` or `m`".into());
                    None
                }
                (true, false) => fields.f64("q").map(EdgeSpec::Density),
                (false, true) => fields.u64("m").map(|m| EdgeSpec::Count(m as usize)),
            };
            let rho_min = fields.f64("rho_min").unwrap_or(0.2);
            let rho_max = fields.f64("rho_max").unwrap_or(0.55);
            let seed = fields.u64("model_seed").unwrap_or(master_seed);
            let random_sign = fields.bool("random_sign").unwrap_or(false);
            match (p, edge_spec) {
                (Some(p), Some(edge_spec)) => {
                    let spec = GeneratorSpec {
                        p: p as usize,
                        edge_spec,
                        rho_min,
                        rho_max,
                        seed,
                        random_sign,
                    };
                    errs.extend(spec.violations());
                    Some(ModelSource::Generate(spec))
                }
                _ => None,
            }
        };

        let config = ExperimentConfig {
            // A missing model has already been reported above.
            model: model.unwrap_or_else(|| ModelSource::File(PathBuf::new())),
            n_list: n_list.unwrap_or_default(),
            procedures: procedures.unwrap_or_default(),
            alpha,
            alpha_grid,
            trials,
            master_seed,
            df_rule,
            risk_mode,
            threads: None,
        };
        errs.extend(config.violations(config.known_dim().or(dim_hint)));
        if errs.is_empty() {
            Ok(config)
        } else {
            errs.dedup();
            Err(Error::InvalidConfig(errs))
        }
    }

    fn known_dim(&self) -> Option<usize> {
        match &self.model {
            ModelSource::Generate(spec) => Some(spec.p),
            ModelSource::Fixed(model) => Some(model.dim()),
            ModelSource::File(_) => None,
        }
    }

    /// Constraint violations that do not need the model itself (except its
    /// dimension, when known).
    pub fn violations(&self, p: Option<usize>) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_list.is_empty() {
            out.push("`n_list` must contain at least one sample size".into());
        }
        if self.procedures.is_empty() {
            out.push("`procedures` must name at least one procedure".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            out.push(format!("`alpha` must lie in (0, 1) (got {})", self.alpha));
        }
        if self.alpha_grid.is_empty() {
            out.push("`alpha_grid` must not be empty".into());
        }
        for &a in &self.alpha_grid {
            if !(0.0..=1.0).contains(&a) {
                out.push(format!("`alpha_grid` value {a} is outside [0, 1]"));
            }
        }
        if self.trials == 0 {
            out.push("`trials` must be at least 1".into());
        }
        if self.threads == Some(0) {
            out.push("thread count must be at least 1".into());
        }
        if let Some(p) = p {
            for &n in &self.n_list {
                if self.df_rule.df(n, p).is_none() {
                    out.push(format!(
                        "n = {n} is too small for p = {p} (need n >= p + 2 with at least one degree of freedom under df rule {})",
                        self.df_rule
                    ));
                }
            }
        }
        out
    }

    pub fn load_model(&self) -> Result<TrueModel> {
        match &self.model {
            ModelSource::Generate(spec) => generate_model(spec),
            ModelSource::File(path) => TrueModel::read(path),
            ModelSource::Fixed(model) => Ok((**model).clone()),
        }
    }
}

struct Fields<'a> {
    obj: &'a Map<String, Value>,
    errs: &'a mut Vec<String>,
}

impl Fields<'_> {
    fn f64(&mut self, key: &str) -> Option<f64> {
        let v = self.obj.get(key)?;
        let x = v.as_f64();
        if x.is_none() {
            self.errs.push(format!("`{key}` must be a number"));
        }
        x
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        let v = self.obj.get(key)?;
        let x = v.as_u64();
        if x.is_none() {
            self.errs.push(format!("`{key}` must be a nonnegative integer"));
        }
        x
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        let v = self.obj.get(key)?;
        let x = v.as_bool();
        if x.is_none() {
            self.errs.push(format!("`{key}` must be true or false"));
        }
        x
    }

    fn array(&mut self, key: &str) -> Option<&Vec<Value>> {
        match self.obj.get(key) {
            None => None,
            Some(Value::Array(a)) => Some(a),
            Some(_) => {
                self.errs.push(format!("`{key}` must be an array"));
                None
            }
        }
    }

    fn usize_list(&mut self, key: &str) -> Option<Vec<usize>> {
        let obj = self.obj;
        let Some(Value::Array(items)) = obj.get(key) else {
            if obj.contains_key(key) {
                self.errs.push(format!("`{key}` must be an array"));
            } else {
                self.errs.push(format!("missing `{key}`"));
            }
            return None;
        };
        let mut out = Vec::new();
        for v in items {
            match v.as_u64() {
                Some(x) => out.push(x as usize),
                None => self
                    .errs
                    .push(format!("`{key}` entry {v} is not a nonnegative integer")),
            }
        }
        Some(out)
    }

    fn f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let items = self.array(key)?.clone();
        let mut out = Vec::new();
        for v in &items {
            match v.as_f64() {
                Some(x) => out.push(x),
                None => self.errs.push(format!("`{key}` entry {v} is not a number")),
            }
        }
        Some(out)
    }

    fn procedures(&mut self) -> Option<Vec<ProcedureKind>> {
        let obj = self.obj;
        let Some(Value::Array(items)) = obj.get("procedures") else {
            if obj.contains_key("procedures") {
                self.errs.push("`procedures` must be an array".into());
            } else {
                self.errs.push("missing `procedures`".into());
            }
            return None;
        };
        let mut out = Vec::new();
        for v in items {
            match v.as_str().map(str::parse::<ProcedureKind>) {
                Some(Ok(k)) if !out.contains(&k) => out.push(k),
                Some(Ok(k)) => self.errs.push(format!("procedure `{k}` listed twice")),
                Some(Err(e)) => self.errs.push(e),
                None => self.errs.push(format!("procedure entry {v} is not a string")),
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    pub n: usize,
    pub procedure: ProcedureKind,
    pub confusion: ConfusionCounts,
    /// `None` when the true graph is empty or complete.
    pub auc: Option<f64>,
    pub adjusted: Option<Vec<f64>>,
}

/// Everything a trial needs besides its size, index and seed.
#[derive(Debug, Clone, Copy)]
pub struct TrialPlan<'a> {
    pub model: &'a TrueModel,
    pub procedures: &'a [ProcedureKind],
    pub alpha: f64,
    pub df_rule: DfRule,
    pub retain_pvalues: bool,
}

impl TrialPlan<'_> {
    /// One dataset, every procedure. Results follow `procedures` order.
    pub fn run(&self, n: usize, trial_index: usize, seed: u64) -> Result<Vec<TrialResult>> {
        let data = sample_mvn(&self.model.covariance, n, seed)?;
        let raw = raw_pvalues(&data, self.df_rule)?;
        let truth = &self.model.edges;
        let p = self.model.dim();
        Ok(self
            .procedures
            .iter()
            .map(|&procedure| {
                let adj = procedure.apply(&raw);
                let inferred = reject_below(p, adj.values(), self.alpha);
                let confusion = metrics::confusion(truth, &inferred);
                let auc = metrics::roc_curve(&adj, truth).ok().map(|c| metrics::auc(&c));
                TrialResult {
                    trial_index,
                    n,
                    procedure,
                    confusion,
                    auc,
                    adjusted: self.retain_pvalues.then(|| adj.into_values()),
                }
            })
            .collect())
    }

    /// Runs a trial, redrawing degenerate samples. Returns the results and
    /// the number of redraws.
    pub fn run_with_redraws(&self, n: usize, trial_index: usize, seed: u64) -> Result<(Vec<TrialResult>, usize)> {
        let mut seed = seed;
        for failures in 0..=MAX_REDRAWS {
            match self.run(n, trial_index, seed) {
                Ok(results) => return Ok((results, failures)),
                Err(Error::DegenerateSample { .. }) if failures < MAX_REDRAWS => {
                    seed = mix(seed ^ REDRAW_KEY);
                }
                Err(e) => return Err(e),
            }
        }
        unreachable!("loop returns on the final attempt")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub procedure: ProcedureKind,
    pub n: usize,
    pub alpha: f64,
    pub trials: usize,
    pub failed_trials: usize,
    pub fwer_hat: f64,
    pub p_fn_pos: f64,
    pub mean_fp: f64,
    pub mean_fn: f64,
    /// NaN when the true graph is empty or complete.
    pub mean_auc: f64,
    pub risk: Vec<RiskValue>,
    pub seed: u64,
}

/// Pooled ROC curve for one (procedure, n), thinned for output.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledRoc {
    pub procedure: ProcedureKind,
    pub n: usize,
    pub curve: RocCurve,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub model: TrueModel,
    pub summary: Vec<SummaryRow>,
    pub roc: Vec<PooledRoc>,
    /// Redraw counts keyed by `n`.
    pub failed_trials: BTreeMap<usize, usize>,
}

/// Aggregates trials of one (procedure, n) into a summary row. Trials must
/// share the procedure and `n`.
pub fn summarize(trials: &[&TrialResult], alpha: f64, failed_trials: usize, seed: u64) -> Result<SummaryRow> {
    let first = trials.first().ok_or(Error::EmptyInput("trial results"))?;
    let count = trials.len() as f64;
    let fps: Vec<usize> = trials.iter().map(|t| t.confusion.false_pos).collect();
    let fns: Vec<usize> = trials.iter().map(|t| t.confusion.false_neg).collect();
    let fwer_hat = metrics::fwer(&fps)?;
    let p_fn_pos = metrics::fwer(&fns)?;
    let mean_fp = fps.iter().sum::<usize>() as f64 / count;
    let mean_fn = fns.iter().sum::<usize>() as f64 / count;
    let mean_auc = if trials.iter().all(|t| t.auc.is_some()) {
        trials.iter().map(|t| t.auc.unwrap_or(0.0)).sum::<f64>() / count
    } else {
        f64::NAN
    };
    Ok(SummaryRow {
        procedure: first.procedure,
        n: first.n,
        alpha,
        trials: trials.len(),
        failed_trials,
        fwer_hat,
        p_fn_pos,
        mean_fp,
        mean_fn,
        mean_auc,
        risk: Vec::new(),
        seed,
    })
}

/// Risk with decision level and weight tied: at each grid value `a`, every
/// trial is re-decided with `π < a`, and the risk is
/// `E(FP_a)·(1 − a) + E(FN_a)·a`. Trials must retain adjusted p-values.
pub fn risk_curve(trials: &[&TrialResult], truth: &EdgeSet, alpha_grid: &[f64]) -> Result<Vec<RiskValue>> {
    if trials.is_empty() {
        return Err(Error::EmptyInput("trial results"));
    }
    let p = truth.dim();
    let count = trials.len() as f64;
    alpha_grid
        .iter()
        .map(|&a| {
            let (mut fp, mut fn_) = (0usize, 0usize);
            for t in trials {
                let values = t
                    .adjusted
                    .as_deref()
                    .ok_or(Error::EmptyInput("retained adjusted p-values"))?;
                let c = metrics::confusion(truth, &reject_below(p, values, a));
                fp += c.false_pos;
                fn_ += c.false_neg;
            }
            Ok(metrics::risk(fp as f64 / count, fn_ as f64 / count, a))
        })
        .collect()
}

/// Risk over a weight grid from fixed means.
pub fn decoupled_risk_curve(mean_fp: f64, mean_fn: f64, weights: &[f64]) -> Vec<RiskValue> {
    weights.iter().map(|&w| metrics::risk(mean_fp, mean_fn, w)).collect()
}

/// ROC curve over the concatenated adjusted p-values of all trials.
pub fn pooled_roc(trials: &[&TrialResult], truth: &EdgeSet) -> Result<RocCurve> {
    let labels = truth.indicator();
    let mut scores = Vec::new();
    let mut positive = Vec::new();
    for t in trials {
        let values = t
            .adjusted
            .as_deref()
            .ok_or(Error::EmptyInput("retained adjusted p-values"))?;
        scores.extend_from_slice(values);
        positive.extend_from_slice(&labels);
    }
    RocCurve::from_scores(&scores, &positive)
}

/// Drops vertices closer than `step` (in both coordinates) to the last kept
/// one. The first and last vertices always survive.
pub fn thin_curve(curve: &RocCurve, step: f64) -> RocCurve {
    let pts = &curve.points;
    let Some((&last, rest)) = pts.split_last() else {
        return curve.clone();
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    for &pt in rest {
        match out.last() {
            Some(&(x, y)) if (pt.0 - x).abs() < step && (pt.1 - y).abs() < step => {}
            _ => out.push(pt),
        }
    }
    out.push(last);
    RocCurve { points: out }
}

fn run_trials(config: &ExperimentConfig, plan: &TrialPlan<'_>, n: usize) -> Result<Vec<(Vec<TrialResult>, usize)>> {
    let job = |t: usize| plan.run_with_redraws(n, t, trial_seed(config.master_seed, n, t));
    match config.threads {
        Some(1) => (0..config.trials).map(job).collect(),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::InvalidConfig(vec![format!("cannot start {k} threads: {e}")]))?;
            pool.install(|| (0..config.trials).into_par_iter().map(job).collect())
        }
        None => (0..config.trials).into_par_iter().map(job).collect(),
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let errs = config.violations(config.known_dim());
    if !errs.is_empty() {
        return Err(Error::InvalidConfig(errs));
    }
    let model = config.load_model()?;
    let errs = config.violations(Some(model.dim()));
    if !errs.is_empty() {
        return Err(Error::InvalidConfig(errs));
    }

    let plan = TrialPlan {
        model: &model,
        procedures: &config.procedures,
        alpha: config.alpha,
        df_rule: config.df_rule,
        retain_pvalues: true,
    };
    let roc_possible = !model.edges.is_empty() && !model.edges.is_complete();

    let mut by_n: Vec<(usize, Vec<Vec<TrialResult>>)> = Vec::new();
    let mut failed_trials = BTreeMap::new();
    for &n in &config.n_list {
        let outcomes = run_trials(config, &plan, n)?;
        let failures: usize = outcomes.iter().map(|(_, f)| f).sum();
        *failed_trials.entry(n).or_insert(0) += failures;
        by_n.push((n, outcomes.into_iter().map(|(r, _)| r).collect()));
    }

    let mut summary = Vec::new();
    let mut roc = Vec::new();
    for (k, &procedure) in config.procedures.iter().enumerate() {
        for (n, trials) in &by_n {
            let mine: Vec<&TrialResult> = trials.iter().map(|r| &r[k]).collect();
            let mut row = summarize(&mine, config.alpha, failed_trials[n], config.master_seed)?;
            row.risk = match config.risk_mode {
                RiskMode::Coupled => risk_curve(&mine, &model.edges, &config.alpha_grid)?,
                RiskMode::Decoupled => decoupled_risk_curve(row.mean_fp, row.mean_fn, &config.alpha_grid),
            };
            summary.push(row);
            if roc_possible {
                let curve = pooled_roc(&mine, &model.edges)?;
                roc.push(PooledRoc {
                    procedure,
                    n: *n,
                    curve: thin_curve(&curve, ROC_THIN_STEP),
                });
            }
        }
    }

    Ok(ExperimentReport {
        model,
        summary,
        roc,
        failed_trials,
    })
}

impl ExperimentReport {
    pub fn results_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.procedure,
                r.n,
                sig6(r.alpha),
                r.trials,
                r.failed_trials,
                sig6(r.fwer_hat),
                sig6(r.p_fn_pos),
                sig6(r.mean_fp),
                sig6(r.mean_fn),
                sig6(r.mean_auc)
            );
        }
        out
    }

    pub fn risk_csv(&self) -> String {
        let mut out = String::from(RISK_HEADER);
        out.push('\n');
        for r in &self.summary {
            for v in &r.risk {
                let _ = writeln!(out, "{},{},{},{}", r.procedure, r.n, sig6(v.alpha), sig6(v.value));
            }
        }
        out
    }

    pub fn roc_csv(&self) -> String {
        let mut out = String::from(ROC_HEADER);
        out.push('\n');
        for r in &self.roc {
            for &(x, y) in &r.curve.points {
                let _ = writeln!(out, "{},{},{},{}", r.procedure, r.n, sig6(x), sig6(y));
            }
        }
        out
    }

    pub fn total_failed_trials(&self) -> usize {
        self.failed_trials.values().sum()
    }
}
