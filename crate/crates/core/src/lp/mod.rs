//! LP relaxations of the constrained path problem and their exact rounding.
//!
//! Before any LP is built, a repaired shortest path supplies an upper bound
//! and edges that cannot lie on a path within it are dropped (see
//! [`reduce`]). The hard relaxation keeps every peak-usage row; the penalized one lets a
//! row be exceeded at cost λ per unit. Either way the fractional optimum is
//! rounded by keeping the edges in its support (plus the dummy edges around
//! them), solving the integer problem on that subgraph by branch-and-bound,
//! and then checking reduced costs: an excluded edge whose reduced cost
//! cannot close the gap between the LP bound and the subgraph optimum cannot
//! be in a better path. Edges that fail the check are added back and the
//! subgraph is solved again.

pub mod backend;
pub mod bnb;
pub mod export;
pub mod formulate;
pub mod lu;
pub mod model;
pub mod pricing;
pub mod reduce;
pub mod simplex;

use serde::Serialize;

pub use backend::Backend;
pub use bnb::{branch_and_bound, dummy_chain, full_mask, path_objective, BnbResult, DEFAULT_NODE_LIMIT};
pub use export::to_cplex_lp;
pub use formulate::{extract_path, formulate, formulate_masked, Formulation, Variant};
pub use model::{LinearProgram, LpError, LpSolution, LpStatus, Row, Sense, Variable};
pub use pricing::{edge_reduced_costs, solve_relaxation, Relaxation};
pub use reduce::{heuristic_path, prune_by_bound};
pub use simplex::SimplexOptions;

use crate::domain::Tolerances;
use crate::graph::{AssignmentGraph, NodeKind};
use crate::shortest_path::{path_usage, EdgeMask, PathSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Unconstrained shortest path; peaks may be reused freely.
    Dp,
    /// Hard usage rows.
    Lian1,
    /// Penalized usage rows.
    Lian2,
    /// Branch-and-bound on the whole graph.
    Ilp,
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "dp" => Ok(Method::Dp),
            "lian1" => Ok(Method::Lian1),
            "lian2" => Ok(Method::Lian2),
            "ilp" => Ok(Method::Ilp),
            _ => Err(format!("unknown method {s:?} (expected dp, ilp, lian1 or lian2)")),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct IntegralityReport {
    pub edge_vars: usize,
    /// Edge variables strictly between `round_eps` and `1 − round_eps`.
    pub fractional: usize,
    pub integral: bool,
}

pub fn integrality(f: &Formulation, values: &[f64], eps: f64) -> IntegralityReport {
    let fractional = (0..f.edge_vars()).filter(|&v| values[v] > eps && values[v] < 1.0 - eps).count();
    IntegralityReport { edge_vars: f.edge_vars(), fractional, integral: fractional == 0 }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RoundingReport {
    pub lp_objective: f64,
    pub integrality: IntegralityReport,
    /// Edges with LP value above `round_eps`.
    pub support_edges: usize,
    /// Edges in the final subgraph.
    pub subgraph_edges: usize,
    pub total_edges: usize,
    /// Edges re-added by the reduced-cost check.
    pub readded_edges: usize,
    pub rounds: usize,
    pub bnb_nodes: usize,
    /// Objective of the repaired shortest path, and the edges that can lie
    /// on a path no worse than it.
    pub heuristic_objective: f64,
    pub kept_edges: usize,
    /// Reduced costs were available and no excluded edge could improve.
    pub certified: bool,
    pub optimal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReusedPeak {
    pub peak: String,
    pub uses: usize,
    /// Excess variable in the fractional solution.
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Solved {
    pub method: Method,
    pub path: PathSolution,
    /// Path cost plus any usage penalty.
    pub objective: f64,
    pub report: RoundingReport,
    pub reused: Vec<ReusedPeak>,
    pub lp_variables: usize,
    pub lp_rows: usize,
}

/// Adds every edge touching a Dummy whose endpoints are all kept, dummy,
/// Start or End.
fn close_with_dummies(g: &AssignmentGraph, mask: &mut EdgeMask) {
    let mut kept: Vec<Vec<bool>> = g.layers.iter().map(|l| l.iter().map(|nd| nd.kind != NodeKind::Regular).collect()).collect();
    for (k, es) in g.edges.iter().enumerate() {
        for (idx, e) in es.iter().enumerate() {
            if mask[k][idx] {
                kept[k][e.from] = true;
                kept[k + 1][e.to] = true;
            }
        }
    }
    for (k, es) in g.edges.iter().enumerate() {
        for (idx, e) in es.iter().enumerate() {
            let dummy = g.is_dummy(k, e.from) || g.is_dummy(k + 1, e.to);
            if dummy && kept[k][e.from] && kept[k + 1][e.to] {
                mask[k][idx] = true;
            }
        }
    }
}

/// Rounds an optimal relaxation to an integer path (see the module docs).
/// `reduced` holds the reduced cost of every graph edge; without it the
/// result is not certified.
#[allow(clippy::too_many_arguments)]
pub fn round_and_resolve(
    g: &AssignmentGraph,
    f: &Formulation,
    sol: &LpSolution,
    reduced: Option<&[Vec<f64>]>,
    penalty: Option<f64>,
    round_eps: f64,
    backend: &Backend,
    node_limit: usize,
) -> Result<(BnbResult, RoundingReport), LpError> {
    let mut mask: EdgeMask = g.edges.iter().map(|es| vec![false; es.len()]).collect();
    let mut support = 0;
    for (v, &(k, idx)) in f.var_edge.iter().enumerate() {
        if sol.values[v] > round_eps {
            mask[k][idx] = true;
            support += 1;
        }
    }
    close_with_dummies(g, &mut mask);
    let mut report = RoundingReport {
        lp_objective: sol.objective,
        integrality: integrality(f, &sol.values, round_eps),
        support_edges: support,
        total_edges: g.edge_count(),
        ..Default::default()
    };
    let mut start: Option<Vec<usize>> = None;
    loop {
        report.rounds += 1;
        let r = branch_and_bound(g, &mask, penalty, backend, start.as_deref(), node_limit)?;
        report.bnb_nodes += r.nodes;
        let Some(d) = reduced else {
            report.certified = false;
            report.optimal = false;
            report.subgraph_edges = mask.iter().flatten().filter(|&&m| m).count();
            return Ok((r, report));
        };
        let gap_tol = 1e-9 * (1.0 + r.objective.abs());
        let mut added = 0;
        for (k, ds) in d.iter().enumerate() {
            for (idx, &de) in ds.iter().enumerate() {
                if !mask[k][idx] && sol.objective + de.max(0.0) < r.objective - gap_tol {
                    mask[k][idx] = true;
                    added += 1;
                }
            }
        }
        if added == 0 {
            report.certified = true;
            report.optimal = r.optimal;
            report.subgraph_edges = mask.iter().flatten().filter(|&&m| m).count();
            return Ok((r, report));
        }
        report.readded_edges += added;
        close_with_dummies(g, &mut mask);
        start = Some(r.path.nodes.clone());
    }
}

/// Variables and rows of the relaxation over the whole graph.
fn problem_size(g: &AssignmentGraph, variant: Variant) -> (usize, usize) {
    let lp = formulate(g, variant).lp;
    (lp.variables.len(), lp.rows.len())
}

fn reused_peaks(g: &AssignmentGraph, f: Option<&Formulation>, sol: Option<&LpSolution>, nodes: &[usize]) -> Vec<ReusedPeak> {
    path_usage(g, nodes)
        .into_iter()
        .filter(|&(_, c)| c > 1)
        .map(|(p, uses)| {
            let epsilon = f.zip(sol).and_then(|(f, s)| f.utilization.iter().find(|u| u.0 == p).and_then(|u| u.2).map(|v| s.values[v]));
            ReusedPeak { peak: p.to_string(), uses, epsilon }
        })
        .collect()
}

/// Solves the instance with the given method.
pub fn solve(g: &AssignmentGraph, method: Method, tol: &Tolerances, backend: &Backend) -> Result<Solved, LpError> {
    let penalty = (method == Method::Lian2).then_some(tol.lambda);
    let variant = match penalty {
        Some(lambda) => Variant::Penalized { lambda },
        None => Variant::Hard,
    };
    let (lp_vars, lp_rows) = problem_size(g, variant);
    if method == Method::Dp {
        let path = crate::shortest_path::dp_shortest_path(g);
        let report = RoundingReport {
            lp_objective: f64::NAN,
            subgraph_edges: g.edge_count(),
            total_edges: g.edge_count(),
            certified: true,
            optimal: true,
            ..Default::default()
        };
        return Ok(Solved {
            method,
            reused: reused_peaks(g, None, None, &path.nodes),
            objective: path.total_cost,
            path,
            report,
            lp_variables: lp_vars,
            lp_rows,
        });
    }
    if method == Method::Ilp {
        let r = branch_and_bound(g, &full_mask(g), None, backend, None, DEFAULT_NODE_LIMIT)?;
        let report = RoundingReport {
            lp_objective: f64::NAN,
            subgraph_edges: g.edge_count(),
            total_edges: g.edge_count(),
            rounds: 1,
            bnb_nodes: r.nodes,
            certified: true,
            optimal: r.optimal,
            ..Default::default()
        };
        return Ok(Solved {
            method,
            reused: reused_peaks(g, None, None, &r.path.nodes),
            path: r.path,
            objective: r.objective,
            report,
            lp_variables: lp_vars,
            lp_rows,
        });
    }
    let (start, bound) = heuristic_path(g, penalty);
    let base = prune_by_bound(g, bound, &start.nodes);
    let p = solve_relaxation(g, variant, backend, Some(&base))?;
    let (r, mut report) =
        round_and_resolve(g, &p.formulation, &p.solution, p.reduced.as_deref(), penalty, tol.round_eps, backend, DEFAULT_NODE_LIMIT)?;
    report.heuristic_objective = bound;
    report.kept_edges = base.iter().flatten().filter(|&&m| m).count();
    Ok(Solved {
        method,
        reused: reused_peaks(g, Some(&p.formulation), Some(&p.solution), &r.path.nodes),
        path: r.path,
        objective: r.objective,
        report,
        lp_variables: lp_vars,
        lp_rows,
    })
}

/// Independent validity check of a path: one node per layer, every edge
/// present, and (when `hard`) no peak consumed twice.
pub fn verify_path(g: &AssignmentGraph, nodes: &[usize], hard: bool) -> Result<f64, String> {
    if nodes.len() != g.layers.len() {
        return Err(format!("path has {} nodes for {} layers", nodes.len(), g.layers.len()));
    }
    for (k, &i) in nodes.iter().enumerate() {
        if i >= g.layers[k].len() {
            return Err(format!("node {i} does not exist in layer {k}"));
        }
    }
    let mut total = 0.0;
    for k in 0..nodes.len() - 1 {
        match g.edges[k].iter().find(|e| e.from == nodes[k] && e.to == nodes[k + 1]) {
            Some(e) => total += e.cost,
            None => return Err(format!("no edge {}→{} between layers {k} and {}", nodes[k], nodes[k + 1], k + 1)),
        }
    }
    if hard {
        let mut seen = std::collections::BTreeSet::new();
        for (k, &i) in nodes.iter().enumerate() {
            for p in g.usage(k, i) {
                if !seen.insert(p.as_str()) {
                    return Err(format!("{p} is used more than once"));
                }
            }
        }
    }
    Ok(total)
}
