use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use semcom::axes::{F, H, S};
use semcom::bounds::{
    BoundsReport, PrivateSemanticProfile, SemanticConstraints, TaskProfile, TheoremBounds,
};
use semcom::dataset::{build_experiment_joint, load_training_set};
use semcom::frl::{
    construct_frl, efrl_mechanism, mechanism_utilities, tune_leakage, MechanismJson,
};
use semcom::oracle::{
    default_u_size, estimate_h_eps_with, sandwich_row, OracleConfig, OracleResult, SandwichRow,
    DEFAULT_RESTARTS,
};
use semcom::probcore::JointTable;

use crate::error::{CliError, CliResult};
use crate::plot::{line_plot, Series};
use crate::sweep::{insert_point, parse_sweep, to_csv, validate_epsilon, SweepRow};

/// Slack of the achievability check run before a mechanism is written.
pub const ACHIEVABILITY_TOLERANCE: f64 = 1e-9;

pub fn read_joint(path: &Path) -> CliResult<JointTable> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::data(format!("cannot read {}: {e}", path.display())))?;
    let joint: JointTable = serde_json::from_str(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))?;
    for axis in [S, F] {
        if !joint.has_axis(axis) {
            return Err(CliError::data(format!(
                "{}: joint has no `{axis}` axis",
                path.display()
            )));
        }
    }
    Ok(joint)
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => fs::write(p, text)
            .map_err(|e| CliError::data(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Bound report for one `ε`: the full utility report when the joint has a task axis.
#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Report {
    Utility(BoundsReport),
    Theorem(TheoremBounds),
}

/// `ε`-independent pieces of a sweep, computed once.
pub struct SweepContext {
    joint: JointTable,
    private: PrivateSemanticProfile,
    task: Option<TaskProfile>,
    constraints: Option<SemanticConstraints>,
}

impl SweepContext {
    pub fn new(joint: JointTable, constraints: Option<SemanticConstraints>) -> CliResult<Self> {
        let task = if joint.has_axis(H) {
            Some(TaskProfile::of(&joint)?)
        } else {
            None
        };
        if constraints.is_some() && task.is_none() {
            return Err(CliError::usage(
                "semantic constraints need a joint with an `H` axis",
            ));
        }
        Ok(Self {
            private: PrivateSemanticProfile::of(&joint)?,
            joint,
            task,
            constraints,
        })
    }

    pub fn h_s(&self) -> f64 {
        self.private.h_s
    }

    pub fn report(&self, eps: f64) -> CliResult<Report> {
        let theorem = self.private.bounds(eps)?;
        Ok(match &self.task {
            Some(t) => {
                let r = t.report(theorem, None);
                Report::Utility(match &self.constraints {
                    Some(c) => r.with_corollary2(c),
                    None => r,
                })
            }
            None => Report::Theorem(theorem),
        })
    }

    /// One row per grid point, with the randomized-response mechanism measured at each `ε`.
    pub fn rows(&self, grid: &[f64]) -> CliResult<Vec<SweepRow>> {
        let frl = construct_frl(&self.joint)?;
        grid.iter()
            .map(|&eps| {
                let theorem = self.private.bounds(eps)?;
                let m = tune_leakage(&self.joint, &frl, eps)?;
                let task_util = match &self.task {
                    Some(_) => Some(mechanism_utilities(&self.joint, &m)?.task),
                    None => None,
                };
                let util = self.task.as_ref().map(|t| t.report(theorem.clone(), None));
                Ok(SweepRow {
                    epsilon: eps,
                    l_h1: theorem.l_h1,
                    l_h2_clamped: theorem.l_h2_clamped,
                    upper_h_eps: theorem.upper_h_eps,
                    util_l1: util.as_ref().map(|u| u.util_l1),
                    util_l2_clamped: util.as_ref().and_then(|u| u.util_l2_clamped),
                    util_upper: util.as_ref().map(|u| u.util_upper),
                    gap: util.as_ref().map(|u| u.gap),
                    mechanism_leakage: Some(m.leakage),
                    mechanism_utility_task: task_util,
                })
            })
            .collect()
    }
}

pub struct BoundsArgs {
    pub joint: PathBuf,
    pub epsilon: Option<f64>,
    pub sweep: Option<String>,
    pub format: Format,
    pub constraints: Option<(f64, f64, f64)>,
    pub out: Option<PathBuf>,
}

pub fn cmd_bounds(args: &BoundsArgs) -> CliResult<()> {
    let grid = match (&args.epsilon, &args.sweep) {
        (Some(e), None) => vec![validate_epsilon(*e)?],
        (None, Some(s)) => parse_sweep(s)?,
        _ => return Err(CliError::usage("give exactly one of --epsilon and --sweep")),
    };
    let constraints = args
        .constraints
        .map(|(g1, g2, g3)| SemanticConstraints::new(g1, g2, g3))
        .transpose()?;
    let ctx = SweepContext::new(read_joint(&args.joint)?, constraints)?;
    let text = match args.format {
        Format::Csv => to_csv(&ctx.rows(&grid)?),
        Format::Json => {
            let reports = grid
                .iter()
                .map(|&e| ctx.report(e))
                .collect::<CliResult<Vec<_>>>()?;
            if args.epsilon.is_some() {
                to_json(&reports[0])
            } else {
                to_json(&reports)
            }
        }
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Debug, Serialize)]
pub struct MechanismOutput {
    #[serde(flatten)]
    pub mechanism: MechanismJson,
    /// `I(U; H)`, present when the joint has a task axis.
    pub utility_task: Option<f64>,
}

pub struct MechanismArgs {
    pub joint: PathBuf,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
}

pub fn cmd_mechanism(args: &MechanismArgs) -> CliResult<()> {
    let eps = validate_epsilon(args.epsilon)?;
    let joint = read_joint(&args.joint)?;
    let m = efrl_mechanism(&joint, eps)?;
    let bounds = PrivateSemanticProfile::of(&joint)?.bounds(m.epsilon)?;
    if (m.leakage - m.epsilon).abs() > ACHIEVABILITY_TOLERANCE
        || m.utility_semantic < bounds.l_h1 - ACHIEVABILITY_TOLERANCE
    {
        return Err(CliError::internal(format!(
            "achievability check failed: leakage {} for target {}, utility {} below L_h1 {}",
            m.leakage, m.epsilon, m.utility_semantic, bounds.l_h1
        )));
    }
    let utility_task = if joint.has_axis(H) {
        Some(mechanism_utilities(&joint, &m)?.task)
    } else {
        None
    };
    eprintln!(
        "leakage I(U;S) = {:.12}  utility I(U;F) = {:.12}{}",
        m.leakage,
        m.utility_semantic,
        utility_task
            .map(|t| format!("  utility I(U;H) = {t:.12}"))
            .unwrap_or_default()
    );
    if m.epsilon_clamped {
        eprintln!(
            "note: epsilon exceeds H(S) and was clamped to {:.12}",
            m.epsilon
        );
    }
    let out = MechanismOutput {
        mechanism: m.to_json(),
        utility_task,
    };
    emit(args.out.as_deref(), &to_json(&out))
}

#[derive(Debug, Serialize)]
pub struct OracleOutput {
    #[serde(flatten)]
    pub result: OracleResult,
    pub sandwich: SandwichRow,
}

pub struct OracleArgs {
    pub joint: PathBuf,
    pub epsilon: f64,
    pub u_size: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
    pub dump_channel: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl OracleArgs {
    pub const DEFAULT_RESTARTS: usize = DEFAULT_RESTARTS;
}

pub fn cmd_oracle(args: &OracleArgs) -> CliResult<()> {
    let eps = validate_epsilon(args.epsilon)?;
    let joint = read_joint(&args.joint)?;
    let u_size = match args.u_size {
        Some(n) => n,
        None => default_u_size(&joint)?,
    };
    let config = OracleConfig::new(u_size, args.restarts, args.seed);
    let result = estimate_h_eps_with(&joint, eps, &config, None)?;
    let bounds = PrivateSemanticProfile::of(&joint)?.bounds(eps)?;
    let sandwich = sandwich_row(&bounds, &result).map_err(|e| {
        let mut err = CliError::from(e);
        if eps > bounds.h_s {
            err.message.push_str(&format!(
                "; note: epsilon exceeds H(S) = {:.12}, where the closed-form lower bounds exceed H(F)",
                bounds.h_s
            ));
        }
        err
    })?;
    if let Some(path) = &args.dump_channel {
        emit(Some(path), &to_json(&result.channel))?;
    }
    emit(
        args.out.as_deref(),
        &to_json(&OracleOutput { result, sandwich }),
    )
}

pub struct ExperimentArgs {
    pub mnist_dir: PathBuf,
    pub threshold: u8,
    pub sweep: String,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub export_joint: Option<PathBuf>,
}

pub const DEFAULT_EXPERIMENT_SWEEP: &str = "0:0.01:0.3";

/// Gap and sweep of the digit experiment, as printed by `cmd_experiment`.
pub struct ExperimentOutcome {
    pub gap: f64,
    pub h_s: f64,
    pub rows: Vec<SweepRow>,
}

pub fn run_experiment(args: &ExperimentArgs) -> CliResult<ExperimentOutcome> {
    let mut grid = parse_sweep(&args.sweep)?;
    let images = load_training_set(&args.mnist_dir)?;
    let ej = build_experiment_joint(&images, args.threshold)?;
    if let Some(path) = &args.export_joint {
        emit(Some(path), &to_json(ej.joint()))?;
    }
    let ctx = SweepContext::new(ej.role_joint(), None)?;
    insert_point(&mut grid, ctx.h_s());
    let rows = ctx.rows(&grid)?;
    let gap = ctx
        .task
        .as_ref()
        .map(TaskProfile::gap)
        .ok_or_else(|| CliError::internal("experiment joint lacks a task axis"))?;
    Ok(ExperimentOutcome {
        gap,
        h_s: ctx.h_s(),
        rows,
    })
}

pub fn experiment_plot(rows: &[SweepRow]) -> String {
    let curve = |f: fn(&SweepRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| f(r).map(|v| (r.epsilon, v)))
            .collect()
    };
    let series = [
        Series {
            label: "lower bound 1",
            color: "#1f77b4",
            points: curve(|r| r.util_l1),
        },
        Series {
            label: "lower bound 2 (clamped)",
            color: "#2ca02c",
            points: curve(|r| r.util_l2_clamped),
        },
        Series {
            label: "upper bound",
            color: "#d62728",
            points: curve(|r| r.util_upper),
        },
    ];
    line_plot(
        "Task utility bounds",
        "epsilon (nats)",
        "I(U;H) (nats)",
        &series,
    )
}

pub fn cmd_experiment(args: &ExperimentArgs) -> CliResult<()> {
    let outcome = run_experiment(args)?;
    eprintln!("H(S) = {:.12} nats", outcome.h_s);
    eprintln!("gap H(H|Z)+H(Z|H) = {:.12} nats", outcome.gap);
    if let Some(path) = &args.plot {
        emit(Some(path), &experiment_plot(&outcome.rows))?;
    }
    emit(args.out.as_deref(), &to_csv(&outcome.rows))
}
