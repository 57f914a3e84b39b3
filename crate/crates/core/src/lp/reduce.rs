//! Bound-based edge elimination.
//!
//! A feasible path gives an upper bound on the optimum. An edge whose
//! cheapest Start-to-End path (usage ignored) already costs more than that
//! bound lies on no optimal path, and the usage penalty only adds cost, so
//! the edge can be dropped before any LP is built.

use super::bnb::{dummy_chain, path_objective};
use crate::graph::AssignmentGraph;
use crate::shortest_path::{dp_with_mask, path_usage, value_function, EdgeMask, PathSolution};

const REPAIR_ROUNDS: usize = 200;

/// Cheapest cost from Start to every node over the allowed edges.
pub fn forward_costs(g: &AssignmentGraph, mask: Option<&EdgeMask>) -> Vec<Vec<f64>> {
    let mut f: Vec<Vec<f64>> = g.layers.iter().map(|l| vec![f64::INFINITY; l.len()]).collect();
    f[0][0] = 0.0;
    for (k, es) in g.edges.iter().enumerate() {
        for (idx, e) in es.iter().enumerate() {
            if mask.is_some_and(|m| !m[k][idx]) {
                continue;
            }
            let c = f[k][e.from] + e.cost;
            if c < f[k + 1][e.to] {
                f[k + 1][e.to] = c;
            }
        }
    }
    f
}

/// Removes the out-edges of every node of layer `k` that consumes `peak`.
fn ban_peak(g: &AssignmentGraph, mask: &mut EdgeMask, k: usize, peak: &str) {
    for (idx, e) in g.edges[k].iter().enumerate() {
        if g.usage(k, e.from).iter().any(|s| s == peak) {
            mask[k][idx] = false;
        }
    }
}

/// A good feasible path: the shortest path, repaired by repeatedly taking a
/// reused peak away from whichever layer costs least to give it up. Returns the best
/// path seen by objective (cost plus λ per reuse, or hard feasibility).
pub fn heuristic_path(g: &AssignmentGraph, penalty: Option<f64>) -> (PathSolution, f64) {
    let chain = PathSolution::from_nodes(g, dummy_chain(g)).expect("dummy chain is a path");
    let mut best_obj = path_objective(g, &chain, penalty).expect("dummy chain uses no peaks");
    let mut best = chain;
    let mut mask: EdgeMask = g.edges.iter().map(|es| vec![true; es.len()]).collect();
    for _ in 0..REPAIR_ROUNDS {
        let Some((p, _)) = dp_with_mask(g, Some(&mask)) else { break };
        if let Some(obj) = path_objective(g, &p, penalty) {
            if obj < best_obj {
                best_obj = obj;
                best = p.clone();
            }
        }
        let usage = path_usage(g, &p.nodes);
        let reused: Vec<&str> = usage.iter().filter(|&(_, &c)| c > 1).map(|(s, _)| *s).collect();
        if reused.is_empty() || p.total_cost >= best_obj {
            break;
        }
        // candidate bans: a reused peak at one of the layers using it
        let mut cands = Vec::new();
        for (k, &i) in p.nodes.iter().enumerate() {
            for s in g.usage(k, i) {
                if reused.contains(&s.as_str()) {
                    cands.push((k, s.as_str()));
                }
            }
        }
        let mut choice: Option<(f64, usize, &str)> = None;
        for &(k, peak) in &cands {
            let mut m = mask.clone();
            ban_peak(g, &mut m, k, peak);
            if let Some((q, _)) = dp_with_mask(g, Some(&m)) {
                if choice.is_none_or(|(c, _, _)| q.total_cost < c) {
                    choice = Some((q.total_cost, k, peak));
                }
            }
        }
        let Some((_, k, peak)) = choice else { break };
        ban_peak(g, &mut mask, k, peak);
    }
    (best, best_obj)
}

/// Edges that can lie on a path of cost at most `bound`. The dummy chain
/// and the edges of `keep` stay regardless.
pub fn prune_by_bound(g: &AssignmentGraph, bound: f64, keep: &[usize]) -> EdgeMask {
    let f = forward_costs(g, None);
    let b = value_function(g, None);
    let tol = 1e-9 * (1.0 + bound.abs());
    let chain = dummy_chain(g);
    g.edges
        .iter()
        .enumerate()
        .map(|(k, es)| {
            es.iter()
                .map(|e| {
                    let on = |p: &[usize]| p.len() == g.layers.len() && p[k] == e.from && p[k + 1] == e.to;
                    f[k][e.from] + e.cost + b[k + 1][e.to] <= bound + tol || on(keep) || on(&chain)
                })
                .collect()
        })
        .collect()
}
