//! Depth-first branch-and-bound over edge variables of a masked subgraph.
//!
//! Each node first runs the masked shortest path. Its cost bounds the node
//! from below, and when it happens to respect peak usage it solves the node
//! outright. Otherwise the LP relaxation gives a tighter bound and a
//! fractional edge to branch on (closest to one half, the x = 1 child
//! explored first).

use super::backend::Backend;
use super::formulate::{extract_path, formulate_masked, Variant};
use super::model::LpError;
use crate::graph::AssignmentGraph;
use crate::shortest_path::{dp_with_mask, reuse_count, EdgeMask, PathSolution};

pub const DEFAULT_NODE_LIMIT: usize = 100_000;
const INTEGRAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct BnbResult {
    pub path: PathSolution,
    pub objective: f64,
    pub nodes: usize,
    /// False if the node limit cut the search short.
    pub optimal: bool,
}

/// Start, the dummy of every inner layer, End.
pub fn dummy_chain(g: &AssignmentGraph) -> Vec<usize> {
    let n = g.n();
    let mut nodes = vec![0];
    nodes.extend((1..=n).map(|k| g.dummy_index(k)));
    nodes.push(0);
    nodes
}

pub fn full_mask(g: &AssignmentGraph) -> EdgeMask {
    g.edges.iter().map(|es| vec![true; es.len()]).collect()
}

/// Objective of a path: cost plus λ per extra use, or `None` if usage is
/// hard and violated.
pub fn path_objective(g: &AssignmentGraph, p: &PathSolution, penalty: Option<f64>) -> Option<f64> {
    let reuse = reuse_count(g, &p.nodes);
    match penalty {
        Some(l) => Some(p.total_cost + l * reuse as f64),
        None => (reuse == 0).then_some(p.total_cost),
    }
}

fn path_in_mask(g: &AssignmentGraph, mask: &EdgeMask, nodes: &[usize]) -> bool {
    (0..nodes.len() - 1)
        .all(|k| g.edges[k].binary_search_by(|e| (e.from, e.to).cmp(&(nodes[k], nodes[k + 1]))).is_ok_and(|idx| mask[k][idx]))
}

struct Incumbent {
    objective: f64,
    path: PathSolution,
}

impl Incumbent {
    fn offer(&mut self, objective: f64, path: PathSolution) {
        let scale = 1e-12 * (1.0 + objective.abs());
        if objective < self.objective - scale || (objective <= self.objective + scale && path.nodes < self.path.nodes) {
            self.objective = objective;
            self.path = path;
        }
    }

    fn prunes(&self, bound: f64) -> bool {
        bound >= self.objective - 1e-9 * (1.0 + self.objective.abs())
    }
}

/// Minimizes the path objective over the edges allowed by `base`.
/// `start` seeds the incumbent; the dummy chain is always tried too.
pub fn branch_and_bound(
    g: &AssignmentGraph,
    base: &EdgeMask,
    penalty: Option<f64>,
    backend: &Backend,
    start: Option<&[usize]>,
    node_limit: usize,
) -> Result<BnbResult, LpError> {
    let variant = match penalty {
        Some(lambda) => Variant::Penalized { lambda },
        None => Variant::Hard,
    };
    let mut inc: Option<Incumbent> = None;
    for cand in start.map(|s| s.to_vec()).into_iter().chain([dummy_chain(g)]) {
        if !path_in_mask(g, base, &cand) {
            continue;
        }
        let Some(p) = PathSolution::from_nodes(g, cand) else { continue };
        if let Some(obj) = path_objective(g, &p, penalty) {
            match &mut inc {
                None => inc = Some(Incumbent { objective: obj, path: p }),
                Some(i) => i.offer(obj, p),
            }
        }
    }
    let mut inc = inc.ok_or(LpError::Infeasible)?;

    let mut stack: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new()];
    let mut nodes = 0usize;
    while let Some(fixings) = stack.pop() {
        if nodes >= node_limit {
            return Ok(BnbResult { path: inc.path, objective: inc.objective, nodes, optimal: false });
        }
        nodes += 1;
        let mut mask = base.clone();
        for &(k, e, one) in &fixings {
            if one {
                for (idx, m) in mask[k].iter_mut().enumerate() {
                    *m = *m && idx == e;
                }
            } else {
                mask[k][e] = false;
            }
        }
        let Some((dp, _)) = dp_with_mask(g, Some(&mask)) else { continue };
        if inc.prunes(dp.total_cost) {
            continue;
        }
        let reuse = reuse_count(g, &dp.nodes);
        if let Some(obj) = path_objective(g, &dp, penalty) {
            inc.offer(obj, dp.clone());
        }
        if reuse == 0 {
            continue;
        }

        let f = formulate_masked(g, variant, Some(&mask));
        let sol = match backend.solve(&f.lp) {
            Ok(s) => s,
            Err(LpError::Infeasible) => continue,
            Err(e) => return Err(e),
        };
        if inc.prunes(sol.objective) {
            continue;
        }
        let mut branch: Option<(usize, f64)> = None;
        for (v, _) in f.var_edge.iter().enumerate() {
            let x = sol.values[v];
            let frac = x.min(1.0 - x);
            if frac > INTEGRAL_TOL && branch.is_none_or(|(_, best)| frac > best + 1e-12) {
                branch = Some((v, frac));
            }
        }
        match branch {
            None => {
                if let Some(p) = extract_path(g, &f, &sol.values, INTEGRAL_TOL).and_then(|n| PathSolution::from_nodes(g, n)) {
                    if let Some(obj) = path_objective(g, &p, penalty) {
                        inc.offer(obj, p);
                    }
                }
            }
            Some((v, _)) => {
                let (k, e) = f.var_edge[v];
                let mut zero = fixings.clone();
                zero.push((k, e, false));
                let mut one = fixings;
                one.push((k, e, true));
                stack.push(zero);
                stack.push(one);
            }
        }
    }
    Ok(BnbResult { path: inc.path, objective: inc.objective, nodes, optimal: true })
}
