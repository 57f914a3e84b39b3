//! Exact path solvers over the layered graph: dynamic programming for the
//! unconstrained problem and exhaustive enumeration (with or without the
//! peak-usage constraint) for small instances.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AssignmentGraph;

/// Largest number of candidate paths exhaustive search will visit.
pub const EXHAUSTIVE_BUDGET: f64 = 1e6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PathError {
    #[error("instance has up to {0:.0} paths, above the exhaustive budget")]
    InstanceTooLarge(f64),
    #[error("no start-to-end path satisfies the usage constraint")]
    InfeasibleByEnumeration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSolution {
    /// Node index per layer, Start and End included.
    pub nodes: Vec<usize>,
    pub total_cost: f64,
    /// Cost of the edge leaving each layer.
    pub edge_costs: Vec<f64>,
}

impl PathSolution {
    pub fn from_nodes(g: &AssignmentGraph, nodes: Vec<usize>) -> Option<Self> {
        let edge_costs = (0..nodes.len() - 1).map(|k| g.edge(k, nodes[k], nodes[k + 1]).map(|e| e.cost)).collect::<Option<Vec<f64>>>()?;
        Some(Self { total_cost: edge_costs.iter().sum(), nodes, edge_costs })
    }
}

/// How often each peak (or spin system) is consumed along a path.
pub fn path_usage<'a>(g: &'a AssignmentGraph, nodes: &[usize]) -> BTreeMap<&'a str, usize> {
    let mut out = BTreeMap::new();
    for (k, &i) in nodes.iter().enumerate() {
        for m in g.usage(k, i) {
            *out.entry(m.as_str()).or_insert(0) += 1;
        }
    }
    out
}

/// Total overuse: Σ max(0, uses − 1).
pub fn reuse_count(g: &AssignmentGraph, nodes: &[usize]) -> usize {
    path_usage(g, nodes).values().map(|&c| c.saturating_sub(1)).sum()
}

/// Allowed edges per layer pair, parallel to `g.edges`.
pub type EdgeMask = Vec<Vec<bool>>;

/// Cost-to-go of every node over the allowed edges (`+∞` where End is
/// unreachable).
pub fn value_function(g: &AssignmentGraph, mask: Option<&EdgeMask>) -> Vec<Vec<f64>> {
    let layers = g.layers.len();
    let mut v: Vec<Vec<f64>> = g.layers.iter().map(|l| vec![f64::INFINITY; l.len()]).collect();
    v[layers - 1][0] = 0.0;
    for k in (0..layers - 1).rev() {
        let (head, tail) = v.split_at_mut(k + 1);
        let (cur, next) = (&mut head[k], &tail[0]);
        for (e_idx, e) in g.edges[k].iter().enumerate() {
            if mask.is_some_and(|m| !m[k][e_idx]) {
                continue;
            }
            let c = e.cost + next[e.to];
            if c < cur[e.from] {
                cur[e.from] = c;
            }
        }
    }
    v
}

/// Minimum-cost path over the allowed edges; ties go to the lexicographically
/// smallest node sequence. `None` if End is unreachable.
pub fn dp_with_mask(g: &AssignmentGraph, mask: Option<&EdgeMask>) -> Option<(PathSolution, Vec<Vec<f64>>)> {
    let v = value_function(g, mask);
    if !v[0][0].is_finite() {
        return None;
    }
    let mut nodes = vec![0];
    let mut edge_costs = Vec::new();
    let mut total = 0.0;
    for k in 0..g.layers.len() - 1 {
        let i = nodes[k];
        let target = v[k][i];
        let e = g.edges[k]
            .iter()
            .enumerate()
            .filter(|(idx, e)| e.from == i && mask.is_none_or(|m| m[k][*idx]))
            .map(|(_, e)| e)
            .find(|e| e.cost + v[k + 1][e.to] == target)
            .expect("value function is attained");
        nodes.push(e.to);
        edge_costs.push(e.cost);
        total += e.cost;
    }
    Some((PathSolution { nodes, total_cost: total, edge_costs }, v))
}

/// Minimum-cost start-to-end path, ignoring peak usage.
pub fn dp_shortest_path(g: &AssignmentGraph) -> PathSolution {
    dp_with_mask(g, None).expect("dummy chain keeps End reachable").0
}

fn path_space(g: &AssignmentGraph) -> f64 {
    g.layers.iter().map(|l| l.len() as f64).product()
}

struct Search<'a> {
    g: &'a AssignmentGraph,
    penalty: Option<f64>,
    usage: BTreeMap<&'a str, usize>,
    nodes: Vec<usize>,
    cost: f64,
    best: Option<(f64, Vec<usize>)>,
}

impl<'a> Search<'a> {
    fn take(&mut self, k: usize, i: usize) -> f64 {
        let mut extra = 0.0;
        for m in self.g.usage(k, i) {
            let c = self.usage.entry(m.as_str()).or_insert(0);
            *c += 1;
            if *c > 1 {
                extra += 1.0;
            }
        }
        extra
    }

    fn release(&mut self, k: usize, i: usize) {
        for m in self.g.usage(k, i) {
            *self.usage.get_mut(m.as_str()).expect("taken") -= 1;
        }
    }

    fn rec(&mut self, k: usize) {
        let i = self.nodes[k];
        if k + 1 == self.g.layers.len() {
            if self.best.as_ref().is_none_or(|b| self.cost < b.0) {
                self.best = Some((self.cost, self.nodes.clone()));
            }
            return;
        }
        for e in self.g.edges[k].iter().filter(|e| e.from == i) {
            let reused = self.take(k + 1, e.to);
            let allowed = reused == 0.0 || self.penalty.is_some();
            if allowed {
                let add = e.cost + self.penalty.unwrap_or(0.0) * reused;
                self.cost += add;
                self.nodes.push(e.to);
                self.rec(k + 1);
                self.nodes.pop();
                self.cost -= add;
            }
            self.release(k + 1, e.to);
        }
    }
}

fn exhaustive(g: &AssignmentGraph, penalty: Option<f64>) -> Result<(PathSolution, f64), PathError> {
    let space = path_space(g);
    if space > EXHAUSTIVE_BUDGET {
        return Err(PathError::InstanceTooLarge(space));
    }
    let mut s = Search { g, penalty, usage: BTreeMap::new(), nodes: vec![0], cost: 0.0, best: None };
    s.rec(0);
    let (objective, nodes) = s.best.ok_or(PathError::InfeasibleByEnumeration)?;
    let path = PathSolution::from_nodes(g, nodes).expect("enumerated along edges");
    Ok((path, objective))
}

/// Best path in which every peak is consumed at most once.
pub fn exhaustive_constrained(g: &AssignmentGraph) -> Result<PathSolution, PathError> {
    exhaustive(g, None).map(|r| r.0)
}

/// Best path when each extra use of a peak costs `lambda`. Returns the path
/// and its penalized objective.
pub fn exhaustive_penalized(g: &AssignmentGraph, lambda: f64) -> Result<(PathSolution, f64), PathError> {
    exhaustive(g, Some(lambda))
}
