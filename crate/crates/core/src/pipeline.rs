//! End-to-end assignment: validate, group, build the graph, solve.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::domain::{validate_dataset, Dataset, ValidationReport};
use crate::domain::{DomainError, Experiment, ExperimentSet, Peak, PriorTable, ProteinSequence, SpinSystem, Tolerances};
use crate::evaluate::{Assignment, EvaluateError};
use crate::graph::{build_graph, graph_stats, AssignmentGraph, Evidence, GraphError, GraphStats};
use crate::grouping::{build_compatibility_graph, enumerate_groupings, spins_to_groupings, GroupingConfig, GroupingError, PeakGrouping};
use crate::lp::{self, Backend, LpError, Method, Solved};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("input failed validation:\n{0}")]
    Validation(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Grouping(#[from] GroupingError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("solver failed: {0}")]
    Solver(#[from] LpError),
    #[error(transparent)]
    Evaluate(#[from] EvaluateError),
}

pub enum Input {
    Peaks(Vec<Peak>),
    Spins(Vec<SpinSystem>),
}

#[derive(Debug, Clone)]
pub struct AssignConfig {
    pub tolerances: Tolerances,
    pub method: Method,
    pub backend: Backend,
    pub grouping: GroupingConfig,
    /// Experiments to expect; inferred from the peak list when `None`.
    pub experiments: Option<ExperimentSet>,
}

impl Default for AssignConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            method: Method::Lian1,
            backend: Backend::default(),
            grouping: GroupingConfig::default(),
            experiments: None,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub grouping_s: f64,
    pub graph_s: f64,
    pub solve_s: f64,
}

pub struct AssignOutput {
    pub validation: ValidationReport,
    pub groupings: usize,
    pub graph: AssignmentGraph,
    pub stats: GraphStats,
    pub solved: Solved,
    pub assignment: Assignment,
    pub timings: Timings,
}

/// Experiments whose spectra occur in the peak list.
pub fn infer_experiments(peaks: &[Peak]) -> Result<ExperimentSet, DomainError> {
    let ids: BTreeSet<&str> = peaks.iter().map(|p| p.spectrum_id.as_str()).collect();
    let exps = ids.into_iter().map(|s| s.parse::<Experiment>()).collect::<Result<Vec<_>, _>>()?;
    Ok(ExperimentSet::new(exps))
}

/// Groups the input into per-residue candidates.
pub fn groupings(input: &Input, priors: &PriorTable, cfg: &AssignConfig) -> Result<(Vec<PeakGrouping>, Evidence), PipelineError> {
    match input {
        Input::Spins(spins) => Ok((spins_to_groupings(spins, priors)?, Evidence::Spins)),
        Input::Peaks(peaks) => {
            let exps = match &cfg.experiments {
                Some(e) => e.clone(),
                None => infer_experiments(peaks)?,
            };
            let cg = build_compatibility_graph(peaks, &cfg.tolerances)?;
            let gs = enumerate_groupings(&cg, peaks, &exps, priors, &cfg.tolerances, &cfg.grouping)?;
            Ok((gs, Evidence::Peaks(exps)))
        }
    }
}

pub fn assign(input: &Input, sequence: &str, priors: &PriorTable, cfg: &AssignConfig) -> Result<AssignOutput, PipelineError> {
    cfg.tolerances.check()?;
    let validation = match input {
        Input::Peaks(p) => validate_dataset(Dataset::Peaks(p), priors, sequence),
        Input::Spins(s) => validate_dataset(Dataset::Spins(s), priors, sequence),
    };
    if !validation.ok {
        let lines: Vec<String> = validation.fatal().map(|i| format!("  {}", i.message)).collect();
        return Err(PipelineError::Validation(lines.join("\n")));
    }
    let seq = ProteinSequence::parse(sequence)?;

    let t0 = Instant::now();
    let (groups, evidence) = groupings(input, priors, cfg)?;
    let n_groups = groups.len();
    let t1 = Instant::now();
    let graph = build_graph(groups, &seq, priors, &cfg.tolerances, &evidence)?;
    let stats = graph_stats(&graph);
    let t2 = Instant::now();
    let solved = lp::solve(&graph, cfg.method, &cfg.tolerances, &cfg.backend)?;
    let t3 = Instant::now();

    let method = serde_json::to_value(cfg.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    let assignment = Assignment::from_path(&graph, &solved.path.nodes, &method, solved.objective, solved.report.optimal)?;
    Ok(AssignOutput {
        validation,
        groupings: n_groups,
        graph,
        stats,
        solved,
        assignment,
        timings: Timings { grouping_s: (t1 - t0).as_secs_f64(), graph_s: (t2 - t1).as_secs_f64(), solve_s: (t3 - t2).as_secs_f64() },
    })
}
