use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use learnsel::misspec::{margins, validate_bound, ErrorKind, ErrorSpec};
use learnsel::model::{mse, static_set_value, subsets_up_to};
use learnsel::oracle::exhaustive_prefix_search;
use learnsel::planner::{discounted_baseline_loss, optimal_static_subset, optimal_stationary_sequence_with};
use learnsel::tradeoff::{
    all_switching_points, enumerate_optimal_subsets, loss_ratio_grid, positivity_threshold, switching_point_closed_form,
    sweep_delta, PairGap, PartitionMethod, SubsetPartition,
};
use learnsel::{FeatureSubset, Parallelism};

use crate::error::CliError;
use crate::output::{json, num, Table};
use crate::scenario::{load_scenario, Scenario};

/// `eval-static` lists every subset, so keep the table printable.
pub const MAX_EVAL_FEATURES: usize = 20;

#[derive(Debug, Parser)]
#[command(name = "learnsel", version, about = "Feature selection for a learning human predictor")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Accept zero ground-truth coefficients with a warning.
    #[arg(long, global = true)]
    pub allow_zero_coeff: bool,
    /// Print errors to stderr as JSON.
    #[arg(long, value_enum, default_value_t = ErrorFormat::Text, global = true)]
    pub error_format: ErrorFormat,
    /// Run on a single thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ErrorFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    GroundTruthStatic,
    HumanStatic,
    HumanLearning,
    GroundTruthLearning,
    PhiSum,
}

impl From<KindArg> for ErrorKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::GroundTruthStatic => ErrorKind::GroundTruthStatic,
            KindArg::HumanStatic => ErrorKind::HumanStatic,
            KindArg::HumanLearning => ErrorKind::HumanLearning,
            KindArg::GroundTruthLearning => ErrorKind::GroundTruthLearning,
            KindArg::PhiSum => ErrorKind::PhiSum,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MSE and value of every subset within the budget.
    EvalStatic { scenario: PathBuf },
    /// Best subset for the human's current beliefs.
    PlanStatic { scenario: PathBuf },
    /// Best subset to show at every step.
    PlanStationary { scenario: PathBuf },
    /// Pairwise switching points and positivity thresholds.
    SwitchPoints { scenario: PathBuf },
    /// Optimal stationary subset over a δ grid.
    SweepDelta {
        scenario: PathBuf,
        /// Number of interior δ points.
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
    /// Loss ratio L({1})/L({2}) over a (w, δ) grid.
    SweepHeatmap {
        scenario: PathBuf,
        /// Points per axis.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// δ-intervals with a constant optimal stationary subset.
    EnumerateSubsets { scenario: PathBuf },
    /// Exhaustive check that no short non-stationary prefix beats the stationary plan.
    Verify {
        scenario: PathBuf,
        /// Prefix length.
        #[arg(short = 'T', long = "prefix", default_value_t = 3)]
        prefix: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Error margins, optionally checked against sampled perturbations.
    Misspec {
        scenario: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        eps: f64,
        /// Clip ε to each feature's admissible maximum.
        #[arg(long)]
        cap_eps: bool,
        /// Sampled trials; 0 skips validation.
        #[arg(long, default_value_t = 0)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    fn scenario(&self) -> &PathBuf {
        match self {
            Command::EvalStatic { scenario }
            | Command::PlanStatic { scenario }
            | Command::PlanStationary { scenario }
            | Command::SwitchPoints { scenario }
            | Command::SweepDelta { scenario, .. }
            | Command::SweepHeatmap { scenario, .. }
            | Command::EnumerateSubsets { scenario }
            | Command::Verify { scenario, .. }
            | Command::Misspec { scenario, .. } => scenario,
        }
    }
}

/// What a command produced. `failure` is set when a requested check did not hold.
#[derive(Debug)]
pub struct Report {
    pub body: String,
    pub failure: Option<String>,
    pub warnings: Vec<String>,
}

/// Result of a full invocation, ready to hand to the process.
#[derive(Debug, Default)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, ..Default::default() }
            } else {
                Outcome { code, stderr: text, ..Default::default() }
            };
        }
    };
    let error_format = cli.common.error_format;
    let fail = |e: CliError, mut stderr: String| {
        match error_format {
            ErrorFormat::Json => stderr.push_str(&format!("{}\n", e.to_json())),
            ErrorFormat::Text => stderr.push_str(&format!("error: {e}\n")),
        }
        Outcome { code: e.exit_code(), stdout: String::new(), stderr }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => return fail(e, String::new()),
    };
    let mut stderr: String = report.warnings.iter().map(|w| format!("warning: {w}\n")).collect();
    let mut stdout = String::new();
    match &cli.common.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &report.body) {
                return fail(CliError::Input(format!("cannot write {}: {e}", path.display())), stderr);
            }
        }
        None => stdout = report.body,
    }
    if let Some(msg) = report.failure {
        let mut out = fail(CliError::Validation(msg), std::mem::take(&mut stderr));
        out.stdout = stdout;
        return out;
    }
    Outcome { code: 0, stdout, stderr }
}

pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let scenario = load_scenario(cli.command.scenario(), cli.common.allow_zero_coeff)?;
    let par = if cli.common.sequential { Parallelism::Sequential } else { Parallelism::Parallel };
    let ctx = Ctx {
        s: &scenario,
        format: cli.common.format,
        par,
    };
    let mut report = match &cli.command {
        Command::EvalStatic { .. } => ctx.eval_static(),
        Command::PlanStatic { .. } => ctx.plan_static(),
        Command::PlanStationary { .. } => ctx.plan_stationary(),
        Command::SwitchPoints { .. } => ctx.switch_points(),
        Command::SweepDelta { grid, .. } => ctx.sweep_delta(*grid),
        Command::SweepHeatmap { grid, .. } => ctx.sweep_heatmap(*grid),
        Command::EnumerateSubsets { .. } => ctx.enumerate_subsets(),
        Command::Verify { prefix, tol, .. } => ctx.verify(*prefix, *tol),
        Command::Misspec {
            kind,
            eps,
            cap_eps,
            trials,
            seed,
            ..
        } => ctx.misspec((*kind).into(), *eps, *cap_eps, *trials, *seed),
    }?;
    if !scenario.zero_features.is_empty() {
        let names: Vec<&str> = scenario.zero_features.iter().map(|&i| scenario.name(i)).collect();
        report
            .warnings
            .push(format!("zero ground-truth coefficient for {}", names.join(", ")));
    }
    Ok(report)
}

struct Ctx<'a> {
    s: &'a Scenario,
    format: Format,
    par: Parallelism,
}

fn label(s: &FeatureSubset) -> String {
    s.label()
}

fn ok(body: String) -> Result<Report, CliError> {
    Ok(Report {
        body,
        failure: None,
        warnings: Vec::new(),
    })
}

/// Evenly spaced interior points of (0,1).
fn interior_grid(points: usize) -> Result<Vec<f64>, CliError> {
    if points == 0 {
        return Err(CliError::Input("--grid must be at least 1".into()));
    }
    Ok((1..=points).map(|i| i as f64 / (points + 1) as f64).collect())
}

#[derive(Serialize)]
struct SubsetRow {
    subset: String,
    mse: f64,
    value: f64,
}

#[derive(Serialize)]
struct FeatureRow<'a> {
    feature: usize,
    name: &'a str,
    informativeness: f64,
    divergence: f64,
    value: f64,
    selected: bool,
}

#[derive(Serialize)]
struct StaticPlanOut<'a> {
    subset: String,
    total_value: f64,
    mse: f64,
    degenerate: bool,
    features: Vec<FeatureRow<'a>>,
}

#[derive(Serialize)]
struct SelectedOut<'a> {
    feature: usize,
    name: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct StationaryPlanOut<'a> {
    subset: String,
    total_value: f64,
    loss: f64,
    baseline_loss: f64,
    informativeness: f64,
    degenerate: bool,
    selected: Vec<SelectedOut<'a>>,
}

#[derive(Serialize)]
struct PairOut {
    i: usize,
    j: usize,
    delta_i: f64,
    delta_d: f64,
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct PositivityOut {
    feature: usize,
    threshold: Option<f64>,
}

#[derive(Serialize)]
struct SwitchOut {
    pairs: Vec<PairOut>,
    positivity: Vec<PositivityOut>,
}

#[derive(Serialize)]
struct SweepRowOut {
    delta: f64,
    subset: String,
    value: f64,
    loss: f64,
    informativeness: f64,
}

#[derive(Serialize)]
struct SweepOut {
    rows: Vec<SweepRowOut>,
    distinct_subsets: Vec<String>,
    informativeness_nondecreasing: bool,
}

#[derive(Serialize)]
struct HeatmapOut {
    w: Vec<f64>,
    delta: Vec<f64>,
    ratio: Vec<Vec<f64>>,
    /// Per w row, the first grid δ where feature 1 is at least as good.
    crossing: Vec<Option<f64>>,
    /// Per w row, the exact switching point.
    closed_form: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct IntervalOut {
    lo: f64,
    hi: f64,
    subset: String,
}

#[derive(Serialize)]
struct PartitionOut {
    method: &'static str,
    resolution: Option<f64>,
    interval_bound: usize,
    intervals: Vec<IntervalOut>,
}

#[derive(Serialize)]
struct VerifyOut {
    prefix_length: usize,
    sequences_examined: u64,
    best_prefix: Vec<String>,
    best_tail: String,
    best_value: f64,
    stationary_subset: String,
    stationary_value: f64,
    tol: f64,
    holds: bool,
}

#[derive(Serialize)]
struct MarginOut {
    feature: usize,
    epsilon: f64,
    xi_lower: f64,
    xi_upper: f64,
}

#[derive(Serialize)]
struct ValidationOut {
    trials: u64,
    seed: u64,
    violations: usize,
    pair_violations: usize,
    max_gap: f64,
    max_ratio: f64,
    mean_ratio: f64,
}

#[derive(Serialize)]
struct MisspecOut {
    kind: ErrorKind,
    margins: Vec<MarginOut>,
    validation: Option<ValidationOut>,
}

impl Ctx<'_> {
    fn emit<T: Serialize>(&self, value: &T, table: impl FnOnce() -> Table) -> Result<String, CliError> {
        match self.format {
            Format::Json => json(value),
            Format::Csv => table().to_csv(),
        }
    }

    fn eval_static(&self) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        if inst.n() > MAX_EVAL_FEATURES {
            return Err(CliError::Input(format!(
                "eval-static lists every subset and is limited to {MAX_EVAL_FEATURES} features, got {}",
                inst.n()
            )));
        }
        let rows = subsets_up_to(inst.n(), inst.k())
            .iter()
            .map(|s| {
                Ok(SubsetRow {
                    subset: label(s),
                    mse: mse(inst, s, inst.h0())?,
                    value: static_set_value(inst, s, inst.h0())?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        ok(self.emit(&rows, || {
            let mut t = Table::new(vec!["subset", "mse", "value"]);
            for r in &rows {
                t.push(vec![r.subset.clone(), num(r.mse), num(r.value)]);
            }
            t
        })?)
    }

    fn feature_rows(&self, plan: &learnsel::Plan) -> Vec<FeatureRow<'_>> {
        let mut rows: Vec<FeatureRow> = plan
            .reports
            .iter()
            .map(|r| FeatureRow {
                feature: r.index + 1,
                name: self.s.name(r.index),
                informativeness: r.informativeness,
                divergence: r.divergence0,
                value: r.value,
                selected: r.selected,
            })
            .collect();
        rows.sort_by_key(|r| r.feature);
        rows
    }

    fn plan_static(&self) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let plan = optimal_static_subset(inst, inst.h0())?;
        let out = StaticPlanOut {
            subset: label(&plan.subset),
            total_value: plan.total_value,
            mse: mse(inst, &plan.subset, inst.h0())?,
            degenerate: plan.degenerate,
            features: self.feature_rows(&plan),
        };
        ok(self.emit(&out, || feature_table(&out.features))?)
    }

    fn plan_stationary(&self) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let plan = optimal_stationary_sequence_with(inst, &self.s.dynamic, self.par);
        let baseline = discounted_baseline_loss(inst);
        let selected = plan
            .reports
            .iter()
            .filter(|r| r.selected)
            .map(|r| SelectedOut {
                feature: r.index + 1,
                name: self.s.name(r.index),
                value: r.value,
            })
            .collect();
        let out = StationaryPlanOut {
            subset: label(&plan.subset),
            total_value: plan.total_value,
            loss: baseline - plan.total_value,
            baseline_loss: baseline,
            informativeness: plan.subset.informativeness(inst),
            degenerate: plan.degenerate,
            selected,
        };
        ok(self.emit(&out, || {
            let mut t = Table::new(vec!["subset", "total_value", "loss", "baseline_loss", "informativeness"]);
            t.push(vec![
                out.subset.clone(),
                num(out.total_value),
                num(out.loss),
                num(out.baseline_loss),
                num(out.informativeness),
            ]);
            t
        })?)
    }

    fn switch_points(&self) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let pairs = all_switching_points(inst, &self.s.dynamic)
            .iter()
            .map(|sp| PairOut {
                i: sp.pair.i + 1,
                j: sp.pair.j + 1,
                delta_i: sp.pair.delta_i,
                delta_d: sp.pair.delta_d,
                threshold: sp.threshold(),
            })
            .collect();
        let positivity = (0..inst.n())
            .map(|i| {
                Ok(PositivityOut {
                    feature: i + 1,
                    threshold: positivity_threshold(inst, &self.s.dynamic, i)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let out = SwitchOut { pairs, positivity };
        ok(self.emit(&out, || {
            let mut t = Table::new(vec!["i", "j", "delta_i", "delta_d", "threshold"]);
            for p in &out.pairs {
                t.push(vec![
                    p.i.to_string(),
                    p.j.to_string(),
                    num(p.delta_i),
                    num(p.delta_d),
                    p.threshold.map(num).unwrap_or_default(),
                ]);
            }
            t
        })?)
    }

    fn sweep_delta(&self, points: usize) -> Result<Report, CliError> {
        let grid = interior_grid(points)?;
        let sweep = sweep_delta(&self.s.instance, &self.s.dynamic, &grid, self.par)?;
        let out = SweepOut {
            rows: sweep
                .rows
                .iter()
                .map(|r| SweepRowOut {
                    delta: r.parameter,
                    subset: label(&r.subset),
                    value: r.total_value,
                    loss: r.loss,
                    informativeness: r.informativeness,
                })
                .collect(),
            distinct_subsets: sweep.distinct_subsets().iter().map(label).collect(),
            informativeness_nondecreasing: sweep.informativeness_nondecreasing(),
        };
        ok(self.emit(&out, || {
            let mut t = Table::new(vec!["delta", "subset", "value", "loss", "informativeness"]);
            for r in &out.rows {
                t.push(vec![
                    num(r.delta),
                    r.subset.clone(),
                    num(r.value),
                    num(r.loss),
                    num(r.informativeness),
                ]);
            }
            t
        })?)
    }

    fn sweep_heatmap(&self, points: usize) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let deltas = interior_grid(points)?;
        let ws: Vec<f64> = (0..points).map(|r| r as f64 / points as f64).collect();
        let grid = loss_ratio_grid(inst, &ws, &deltas, self.par)?;
        let crossing = grid.crossings().iter().map(|c| c.map(|j| deltas[j])).collect();
        let closed_form = match PairGap::new(inst, 0, 1) {
            Ok(pair) => ws
                .iter()
                .map(|&w| switching_point_closed_form(&pair, w).map(|sp| sp.threshold()))
                .collect::<Result<Vec<_>, _>>()?,
            Err(_) => vec![None; ws.len()],
        };
        let out = HeatmapOut {
            w: ws,
            delta: deltas,
            ratio: grid.ratio,
            crossing,
            closed_form,
        };
        ok(self.emit(&out, || {
            let mut t = Table::new(vec!["w", "delta", "ratio"]);
            for (r, &w) in out.w.iter().enumerate() {
                for (c, &d) in out.delta.iter().enumerate() {
                    t.push(vec![num(w), num(d), num(out.ratio[r][c])]);
                }
            }
            t
        })?)
    }

    fn enumerate_subsets(&self) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let partition = enumerate_optimal_subsets(inst, &self.s.dynamic);
        let (method, resolution) = match partition.method {
            PartitionMethod::Exact => ("exact", None),
            PartitionMethod::Grid { resolution } => ("grid", Some(resolution)),
        };
        let out = PartitionOut {
            method,
            resolution,
            interval_bound: SubsetPartition::interval_bound(inst),
            intervals: partition
                .intervals
                .iter()
                .map(|iv| IntervalOut {
                    lo: iv.lo,
                    hi: iv.hi,
                    subset: label(&iv.subset),
                })
                .collect(),
        };
        ok(self.emit(&out, || {
            let mut t = Table::new(vec!["lo", "hi", "subset"]);
            for iv in &out.intervals {
                t.push(vec![num(iv.lo), num(iv.hi), iv.subset.clone()]);
            }
            t
        })?)
    }

    fn verify(&self, prefix: usize, tol: f64) -> Result<Report, CliError> {
        let r = exhaustive_prefix_search(&self.s.instance, &self.s.dynamic, prefix, tol, self.par)?;
        let out = VerifyOut {
            prefix_length: r.prefix_length,
            sequences_examined: r.sequences_examined,
            best_prefix: r.best.prefix.iter().map(label).collect(),
            best_tail: label(&r.best.tail),
            best_value: r.best_value,
            stationary_subset: label(&r.stationary_subset),
            stationary_value: r.stationary_value,
            tol: r.tol,
            holds: r.holds,
        };
        let body = self.emit(&out, || {
            let mut t = Table::new(vec![
                "prefix_length",
                "sequences_examined",
                "best_value",
                "stationary_subset",
                "stationary_value",
                "holds",
            ]);
            t.push(vec![
                out.prefix_length.to_string(),
                out.sequences_examined.to_string(),
                num(out.best_value),
                out.stationary_subset.clone(),
                num(out.stationary_value),
                out.holds.to_string(),
            ]);
            t
        })?;
        let failure = (!out.holds).then(|| {
            format!(
                "a non-stationary sequence beats the stationary plan: {} > {} + {}",
                out.best_value, out.stationary_value, out.tol
            )
        });
        Ok(Report {
            body,
            failure,
            warnings: Vec::new(),
        })
    }

    fn misspec(&self, kind: ErrorKind, eps: f64, cap: bool, trials: u64, seed: u64) -> Result<Report, CliError> {
        let inst = &self.s.instance;
        let spec = if cap {
            ErrorSpec::uniform_within_caps(kind, eps, inst)
        } else {
            ErrorSpec::uniform(kind, eps, inst.n())
        };
        let dynamic = Some(&self.s.dynamic);
        let report = margins(inst, dynamic, &spec)?;
        let validation = if trials > 0 {
            Some(validate_bound(inst, dynamic, &spec, trials, seed, self.par)?)
        } else {
            None
        };
        let out = MisspecOut {
            kind,
            margins: report
                .margins
                .iter()
                .enumerate()
                .map(|(i, m)| MarginOut {
                    feature: i + 1,
                    epsilon: report.epsilon[i],
                    xi_lower: m.xi_lower,
                    xi_upper: m.xi_upper,
                })
                .collect(),
            validation: validation.as_ref().map(|v| ValidationOut {
                trials: v.trials.len() as u64,
                seed: v.seed,
                violations: v.violations,
                pair_violations: v.pair_violations,
                max_gap: v.max_gap,
                max_ratio: v.max_ratio,
                mean_ratio: v.mean_ratio,
            }),
        };
        let body = self.emit(&out, || {
            let mut t = Table::new(vec!["feature", "epsilon", "xi_lower", "xi_upper"]);
            for m in &out.margins {
                t.push(vec![m.feature.to_string(), num(m.epsilon), num(m.xi_lower), num(m.xi_upper)]);
            }
            t
        })?;
        let failure = validation
            .filter(|v| v.violations > 0)
            .map(|v| format!("{} of {} trials exceeded the gap bound", v.violations, v.trials.len()));
        Ok(Report {
            body,
            failure,
            warnings: Vec::new(),
        })
    }
}

fn feature_table(rows: &[FeatureRow]) -> Table {
    let mut t = Table::new(vec!["feature", "name", "informativeness", "divergence", "value", "selected"]);
    for r in rows {
        t.push(vec![
            r.feature.to_string(),
            r.name.to_string(),
            num(r.informativeness),
            num(r.divergence),
            num(r.value),
            r.selected.to_string(),
        ]);
    }
    t
}
