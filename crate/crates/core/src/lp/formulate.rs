//! Path polytope of the assignment graph as a linear program.
//!
//! One variable per allowed edge. Rows:
//! * selection: exactly one edge leaves layer k, for k = 1..n;
//! * coupling: inflow equals outflow at every inner node with an edge;
//! * utilization: for each peak consumed by two or more nodes, the flow
//!   through those nodes (summed over their outgoing edges) is at most one.
//!   The penalized variant adds a nonnegative excess variable per such row.
//!
//! Selection on layer 0 is implied by coupling at layer 1, so it is left out.

use std::collections::BTreeMap;

use super::model::{LinearProgram, Row, Sense, Variable};
use crate::graph::AssignmentGraph;
use crate::shortest_path::EdgeMask;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Variant {
    /// Selection and coupling rows only: the plain path polytope.
    Flow,
    /// Hard utilization rows, edges integer (for export and branch-and-bound).
    Integer,
    /// Hard utilization rows, edges continuous.
    Hard,
    /// Utilization may be exceeded at cost λ per unit.
    Penalized { lambda: f64 },
}

#[derive(Debug, Clone)]
pub struct Formulation {
    pub lp: LinearProgram,
    /// Edge (layer pair, index into `g.edges[k]`) of each edge variable.
    pub var_edge: Vec<(usize, usize)>,
    /// Variable of each edge, `None` if masked out.
    pub edge_var: Vec<Vec<Option<usize>>>,
    /// Peaks with a utilization row: (peak, row index, excess variable).
    pub utilization: Vec<(String, usize, Option<usize>)>,
    /// Coupling row of each node, `None` if no variable touches it.
    pub coupling_row: Vec<Vec<Option<usize>>>,
    pub selection_rows: usize,
    pub coupling_rows: usize,
}

impl Formulation {
    pub fn edge_vars(&self) -> usize {
        self.var_edge.len()
    }
}

pub fn formulate(g: &AssignmentGraph, variant: Variant) -> Formulation {
    formulate_masked(g, variant, None)
}

pub fn formulate_masked(g: &AssignmentGraph, variant: Variant, mask: Option<&EdgeMask>) -> Formulation {
    let n = g.n();
    let integer = variant == Variant::Integer;
    let mut lp = LinearProgram::default();
    let mut var_edge = Vec::new();
    let mut edge_var: Vec<Vec<Option<usize>>> = g.edges.iter().map(|es| vec![None; es.len()]).collect();
    for (k, es) in g.edges.iter().enumerate() {
        for (e_idx, e) in es.iter().enumerate() {
            if mask.is_some_and(|m| !m[k][e_idx]) {
                continue;
            }
            edge_var[k][e_idx] = Some(lp.variables.len());
            var_edge.push((k, e_idx));
            lp.variables.push(Variable { name: format!("x_{k}_{}_{}", e.from, e.to), cost: e.cost, lower: 0.0, upper: Some(1.0), integer });
        }
    }

    for (k, vars) in edge_var.iter().enumerate().take(n + 1).skip(1) {
        let coeffs: Vec<(usize, f64)> = vars.iter().flatten().map(|&v| (v, 1.0)).collect();
        lp.rows.push(Row { name: format!("select_{k}"), coeffs, sense: Sense::Eq, rhs: 1.0 });
    }
    let selection_rows = lp.rows.len();

    let mut out_vars: Vec<Vec<Vec<usize>>> = g.layers.iter().map(|l| vec![Vec::new(); l.len()]).collect();
    let mut in_vars: Vec<Vec<Vec<usize>>> = out_vars.clone();
    for (k, es) in g.edges.iter().enumerate() {
        for (e_idx, e) in es.iter().enumerate() {
            if let Some(v) = edge_var[k][e_idx] {
                out_vars[k][e.from].push(v);
                in_vars[k + 1][e.to].push(v);
            }
        }
    }
    let mut coupling_row: Vec<Vec<Option<usize>>> = g.layers.iter().map(|l| vec![None; l.len()]).collect();
    for (k, (ins, outs)) in in_vars.iter().zip(&out_vars).enumerate().take(n + 1).skip(1) {
        for (i, (iv, ov)) in ins.iter().zip(outs).enumerate() {
            if iv.is_empty() && ov.is_empty() {
                continue;
            }
            let mut coeffs: Vec<(usize, f64)> = iv.iter().map(|&v| (v, 1.0)).collect();
            coeffs.extend(ov.iter().map(|&v| (v, -1.0)));
            coupling_row[k][i] = Some(lp.rows.len());
            lp.rows.push(Row { name: format!("couple_{k}_{i}"), coeffs, sense: Sense::Eq, rhs: 0.0 });
        }
    }
    let coupling_rows = lp.rows.len() - selection_rows;

    // Consumers of each peak among nodes that can carry flow.
    let mut consumers: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for (k, outs) in out_vars.iter().enumerate().take(n + 1).skip(1) {
        for (i, ov) in outs.iter().enumerate() {
            if ov.is_empty() {
                continue;
            }
            for p in g.usage(k, i) {
                consumers.entry(p.as_str()).or_default().push((k, i));
            }
        }
    }
    let mut utilization = Vec::new();
    for (peak, nodes) in consumers {
        if nodes.len() < 2 || variant == Variant::Flow {
            continue;
        }
        let mut coeffs: Vec<(usize, f64)> = nodes.iter().flat_map(|&(k, i)| out_vars[k][i].iter().map(|&v| (v, 1.0))).collect();
        let excess = match variant {
            Variant::Penalized { lambda } => {
                let v = lp.variables.len();
                lp.variables.push(Variable { name: format!("eps_{peak}"), cost: lambda, lower: 0.0, upper: None, integer: false });
                coeffs.push((v, -1.0));
                Some(v)
            }
            _ => None,
        };
        utilization.push((peak.to_string(), lp.rows.len(), excess));
        lp.rows.push(Row { name: format!("use_{peak}"), coeffs, sense: Sense::Le, rhs: 1.0 });
    }

    Formulation { lp, var_edge, edge_var, utilization, coupling_row, selection_rows, coupling_rows }
}

/// Reads a 0/1 edge solution back as a node path. `None` if the edges with
/// value near one do not form a single Start-to-End path.
pub fn extract_path(g: &AssignmentGraph, f: &Formulation, values: &[f64], tol: f64) -> Option<Vec<usize>> {
    let mut nodes = vec![0usize];
    for k in 0..g.edges.len() {
        let cur = nodes[k];
        let mut next = None;
        for (e_idx, e) in g.edges[k].iter().enumerate() {
            let Some(v) = f.edge_var[k][e_idx] else { continue };
            if values[v] > 1.0 - tol {
                if e.from != cur || next.is_some() {
                    return None;
                }
                next = Some(e.to);
            }
        }
        nodes.push(next?);
    }
    Some(nodes)
}
