//! Reduced costs of graph edges under the duals of a relaxation, whether or
//! not the edge is a variable of it.

use std::collections::BTreeMap;

use super::backend::Backend;
use super::formulate::{formulate_masked, Formulation, Variant};
use super::model::{LpError, LpSolution};
use crate::graph::AssignmentGraph;
use crate::shortest_path::EdgeMask;

#[derive(Debug, Clone)]
pub struct Relaxation {
    pub formulation: Formulation,
    pub solution: LpSolution,
    /// Reduced cost of every graph edge, if the backend reported duals.
    pub reduced: Option<Vec<Vec<f64>>>,
}

/// Reduced cost of every edge of `g` (variables of `f` or not) under the
/// row duals `y` of `f`. Rows that `f` lacks have dual zero, which is
/// feasible for them: coupling rows are free, usage rows are slack.
pub fn edge_reduced_costs(g: &AssignmentGraph, f: &Formulation, y: &[f64]) -> Vec<Vec<f64>> {
    let n = g.n();
    let couple = |k: usize, i: usize| f.coupling_row[k][i].map_or(0.0, |r| y[r]);
    let util: BTreeMap<&str, usize> = f.utilization.iter().map(|(p, r, _)| (p.as_str(), *r)).collect();
    g.edges
        .iter()
        .enumerate()
        .map(|(k, es)| {
            // the part shared by every edge leaving a node of layer k
            let mut out_price: Vec<f64> = vec![0.0; g.layers[k].len()];
            for (i, price) in out_price.iter_mut().enumerate() {
                if (1..=n).contains(&k) {
                    *price += y[k - 1] - couple(k, i);
                    for p in g.usage(k, i) {
                        if let Some(&r) = util.get(p.as_str()) {
                            *price += y[r];
                        }
                    }
                }
            }
            es.iter()
                .map(|e| {
                    let into = if k < n { couple(k + 1, e.to) } else { 0.0 };
                    e.cost - out_price[e.from] - into
                })
                .collect()
        })
        .collect()
}

/// Solves the relaxation of `variant` over the edges allowed by `base` (all
/// of `g` if `None`). Edges outside `base` get reduced cost `+∞`.
pub fn solve_relaxation(g: &AssignmentGraph, variant: Variant, backend: &Backend, base: Option<&EdgeMask>) -> Result<Relaxation, LpError> {
    let formulation = formulate_masked(g, variant, base);
    let solution = backend.solve(&formulation.lp)?;
    let reduced = solution.duals.as_ref().filter(|y| y.len() == formulation.lp.rows.len()).map(|y| {
        let mut d = edge_reduced_costs(g, &formulation, y);
        if let Some(b) = base {
            for (ds, bs) in d.iter_mut().zip(b) {
                for (d, &allowed) in ds.iter_mut().zip(bs) {
                    if !allowed {
                        *d = f64::INFINITY;
                    }
                }
            }
        }
        d
    });
    Ok(Relaxation { formulation, solution, reduced })
}
