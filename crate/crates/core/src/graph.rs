//! The layered assignment graph.
//!
//! Layer 0 holds Start, layer n+1 holds End, and inner layer k holds one
//! Regular node per grouping plausible for residue k plus a Dummy (null
//! assignment) node, always last. Regular nodes of a proline layer are never
//! created.
//!
//! The edge from layer k to k+1 carries the cost of residue k's atoms: the
//! amide pair and intra-residue carbons observed by the source node, pooled
//! with the `*_prev` carbons of the target node. The Start edge is free, the
//! edge into End scores residue n from its own node, and any edge leaving a
//! Dummy costs that residue's typing threshold. Every residue is therefore
//! charged exactly once along a path.

use std::collections::BTreeSet;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::costmodel::{atom_cost_points, typing_threshold, CostError};
use crate::domain::{
    Atom, DomainError, ExperimentSet, Gaussian, Nucleus, PriorTable, ProteinSequence, ResidueType, Role, SlotKind, Tolerances,
};
use crate::grouping::{spin_noise_key, PeakGrouping};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Cost(#[from] CostError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeKind {
    Start,
    End,
    Dummy,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentNode {
    pub layer: usize,
    pub index: usize,
    pub kind: NodeKind,
    /// Index into [`AssignmentGraph::groupings`] for Regular nodes.
    pub grouping: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

/// What kind of evidence the groupings came from; fixes how many
/// observations each atom is expected to receive.
#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Spins,
    Peaks(ExperimentSet),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssignmentGraph {
    pub sequence: ProteinSequence,
    pub layers: Vec<Vec<AssignmentNode>>,
    /// `edges[k]` joins layer k to k+1, sorted by (from, to).
    pub edges: Vec<Vec<Edge>>,
    pub groupings: Vec<PeakGrouping>,
    /// Cost of leaving residue k unassigned; zero for the boundary layers.
    pub thresholds: Vec<f64>,
}

impl AssignmentGraph {
    /// Number of residues.
    pub fn n(&self) -> usize {
        self.layers.len() - 2
    }

    pub fn dummy_index(&self, k: usize) -> usize {
        self.layers[k].len() - 1
    }

    pub fn node(&self, k: usize, i: usize) -> &AssignmentNode {
        &self.layers[k][i]
    }

    pub fn is_dummy(&self, k: usize, i: usize) -> bool {
        self.layers[k][i].kind == NodeKind::Dummy
    }

    pub fn grouping_of(&self, k: usize, i: usize) -> Option<&PeakGrouping> {
        self.layers[k][i].grouping.map(|g| &self.groupings[g])
    }

    /// Peaks (or spin systems) consumed by a node.
    pub fn usage(&self, k: usize, i: usize) -> &[String] {
        self.grouping_of(k, i).map_or(&[], |g| g.members.as_slice())
    }

    pub fn edge(&self, k: usize, from: usize, to: usize) -> Option<&Edge> {
        let es = &self.edges[k];
        es.binary_search_by(|e| (e.from, e.to).cmp(&(from, to))).ok().map(|p| &es[p])
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().map(Vec::len).sum()
    }

    /// Cost of a path given as one node index per layer (including Start/End).
    pub fn path_cost(&self, path: &[usize]) -> Option<f64> {
        if path.len() != self.layers.len() {
            return None;
        }
        (0..path.len() - 1).map(|k| self.edge(k, path[k], path[k + 1]).map(|e| e.cost)).sum()
    }

    pub fn write_json<W: Write>(&self, w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(w, &GraphExport::new(self))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ExportNode<'a> {
    layer: usize,
    index: usize,
    kind: NodeKind,
    grouping: Option<&'a str>,
    members: &'a [String],
}

#[derive(Serialize)]
struct GraphExport<'a> {
    sequence: String,
    thresholds: &'a [f64],
    nodes: Vec<ExportNode<'a>>,
    edges: Vec<(usize, usize, usize, f64)>,
}

impl<'a> GraphExport<'a> {
    fn new(g: &'a AssignmentGraph) -> Self {
        let nodes = g
            .layers
            .iter()
            .flatten()
            .map(|n| ExportNode {
                layer: n.layer,
                index: n.index,
                kind: n.kind,
                grouping: n.grouping.map(|i| g.groupings[i].id.as_str()),
                members: g.usage(n.layer, n.index),
            })
            .collect();
        let edges = g.edges.iter().enumerate().flat_map(|(k, es)| es.iter().map(move |e| (k, e.from, e.to, e.cost))).collect();
        Self { sequence: g.sequence.to_string(), thresholds: &g.thresholds, nodes, edges }
    }
}

/// Priors of one residue, `None` marking an ABSENT atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResiduePriors {
    pub residue: ResidueType,
    pub atoms: [Option<Gaussian>; 5],
}

impl ResiduePriors {
    pub fn new(residue: ResidueType, priors: &PriorTable) -> Result<Self, DomainError> {
        let mut atoms = [None; 5];
        for (slot, atom) in atoms.iter_mut().zip(Atom::ALL) {
            *slot = priors.gaussian(residue, atom)?;
        }
        Ok(Self { residue, atoms })
    }

    pub fn get(&self, atom: Atom) -> Option<Gaussian> {
        self.atoms[atom as usize]
    }
}

/// Expected observation noises per atom of one residue.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExpectedNoise {
    /// From the residue's own node.
    pub intra: [Vec<f64>; 5],
    /// From the following residue's node (`*_prev` roles).
    pub prev: [Vec<f64>; 5],
}

/// Noise lists for residue k (0-based position `pos`).
pub fn expected_noise(seq: &ProteinSequence, pos: usize, priors: &PriorTable, evidence: &Evidence) -> Result<ExpectedNoise, DomainError> {
    let mut out = ExpectedNoise::default();
    let here = seq.get(pos).is_some_and(ResidueType::has_amide);
    let next = seq.get(pos + 1).is_some_and(ResidueType::has_amide);
    match evidence {
        Evidence::Spins => {
            for role in Role::SPIN_COLUMNS {
                let active = if role.is_prev() { next } else { here };
                if active {
                    let (sp, dim) = spin_noise_key(role);
                    let s = priors.require_noise(sp, dim)?;
                    let a = role.atom() as usize;
                    if role.is_prev() {
                        out.prev[a].push(s);
                    } else {
                        out.intra[a].push(s);
                    }
                }
            }
        }
        Evidence::Peaks(set) => {
            for &e in set.experiments() {
                for slot in e.slots() {
                    if here {
                        out.intra[Atom::HN as usize].push(priors.require_noise(e.id(), Nucleus::H)?);
                        out.intra[Atom::N as usize].push(priors.require_noise(e.id(), Nucleus::N)?);
                    }
                    if let SlotKind::Carbon(role) = slot.kind {
                        let active = if role.is_prev() { next } else { here };
                        if active {
                            let s = priors.require_noise(e.id(), Nucleus::C)?;
                            let a = role.atom() as usize;
                            if role.is_prev() {
                                out.prev[a].push(s);
                            } else {
                                out.intra[a].push(s);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Per-residue quantities shared by node typing and edge costing.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerContext {
    pub priors: ResiduePriors,
    /// Typing threshold over intra-residue observations only.
    pub intra_threshold: f64,
    /// Typing threshold over all observations charged to the residue.
    pub threshold: f64,
}

impl LayerContext {
    pub fn new(seq: &ProteinSequence, pos: usize, priors: &PriorTable, tol: &Tolerances, evidence: &Evidence) -> Result<Self, GraphError> {
        let rp = ResiduePriors::new(seq.residues()[pos], priors)?;
        let noise = expected_noise(seq, pos, priors, evidence)?;
        let mut intra_threshold = 0.0;
        let mut threshold = 0.0;
        for atom in Atom::ALL {
            let Some(g) = rp.get(atom) else { continue };
            let a = atom as usize;
            intra_threshold += typing_threshold(g, &noise.intra[a], tol.delta)?;
            let all: Vec<f64> = noise.intra[a].iter().chain(&noise.prev[a]).copied().collect();
            threshold += typing_threshold(g, &all, tol.delta)?;
        }
        Ok(Self { priors: rp, intra_threshold, threshold })
    }
}

/// Cost of residue atoms from the residue's own grouping `here` (intra roles)
/// and the following residue's grouping `next` (`*_prev` roles). `None` if an
/// observation lands on an ABSENT atom.
pub fn residue_cost(priors: &ResiduePriors, here: Option<&PeakGrouping>, next: Option<&PeakGrouping>) -> Result<Option<f64>, CostError> {
    let mut total = 0.0;
    for atom in Atom::ALL {
        let intra = here.map_or(&[][..], |g| g.observations(Role::intra(atom)));
        let prev = match (next, Role::prev(atom)) {
            (Some(g), Some(r)) => g.observations(r),
            _ => &[],
        };
        if intra.is_empty() && prev.is_empty() {
            continue;
        }
        let Some(prior) = priors.get(atom) else { return Ok(None) };
        total += atom_cost_points(prior, intra.iter().chain(prev).map(|o| (o.value, o.sigma)))?.cost;
    }
    Ok(Some(total))
}

/// Intra-residue cost of a grouping against a residue, `None` if the grouping
/// observes an atom the residue lacks.
pub fn node_cost(priors: &ResiduePriors, g: &PeakGrouping) -> Result<Option<f64>, CostError> {
    residue_cost(priors, Some(g), None)
}

/// Keeps the candidates whose intra-residue cost does not exceed the layer's
/// intra threshold (ties retained). Proline layers keep nothing.
pub fn prune_by_typing(candidates: &[usize], groupings: &[PeakGrouping], ctx: &LayerContext) -> Result<Vec<usize>, CostError> {
    if !ctx.priors.residue.has_amide() {
        return Ok(Vec::new());
    }
    let mut kept = Vec::new();
    for &c in candidates {
        if let Some(cost) = node_cost(&ctx.priors, &groupings[c])? {
            if cost <= ctx.intra_threshold {
                kept.push(c);
            }
        }
    }
    Ok(kept)
}

/// Sequential connectivity: every carbon seen by both nodes agrees within δ3.
pub fn sequentially_compatible(here: &PeakGrouping, next: &PeakGrouping, delta3: f64) -> bool {
    Atom::CARBONS.iter().all(|&a| match (here.mean(Role::intra(a)), Role::prev(a).and_then(|r| next.mean(r))) {
        (Some(x), Some(y)) => (x - y).abs() <= delta3,
        _ => true,
    })
}

pub fn build_graph(
    groupings: Vec<PeakGrouping>,
    seq: &ProteinSequence,
    priors: &PriorTable,
    tol: &Tolerances,
    evidence: &Evidence,
) -> Result<AssignmentGraph, GraphError> {
    let n = seq.len();
    let contexts = (0..n).map(|pos| LayerContext::new(seq, pos, priors, tol, evidence)).collect::<Result<Vec<_>, _>>()?;
    let all: Vec<usize> = (0..groupings.len()).collect();
    let kept = contexts.par_iter().map(|ctx| prune_by_typing(&all, &groupings, ctx)).collect::<Result<Vec<_>, _>>()?;

    let mut layers = vec![vec![AssignmentNode { layer: 0, index: 0, kind: NodeKind::Start, grouping: None }]];
    for (k, ids) in kept.iter().enumerate() {
        let k = k + 1;
        let mut layer: Vec<AssignmentNode> = ids
            .iter()
            .enumerate()
            .map(|(i, &g)| AssignmentNode { layer: k, index: i, kind: NodeKind::Regular, grouping: Some(g) })
            .collect();
        layer.push(AssignmentNode { layer: k, index: ids.len(), kind: NodeKind::Dummy, grouping: None });
        layers.push(layer);
    }
    layers.push(vec![AssignmentNode { layer: n + 1, index: 0, kind: NodeKind::End, grouping: None }]);

    let edges = (0..=n).into_par_iter().map(|k| layer_edges(k, &layers, &groupings, &contexts, tol)).collect::<Result<Vec<_>, _>>()?;

    let mut thresholds = vec![0.0];
    thresholds.extend(contexts.iter().map(|c| c.threshold));
    thresholds.push(0.0);
    Ok(AssignmentGraph { sequence: seq.clone(), layers, edges, groupings, thresholds })
}

fn layer_edges(
    k: usize,
    layers: &[Vec<AssignmentNode>],
    groupings: &[PeakGrouping],
    contexts: &[LayerContext],
    tol: &Tolerances,
) -> Result<Vec<Edge>, CostError> {
    let n = layers.len() - 2;
    let mut out = Vec::new();
    if k == 0 {
        out.extend((0..layers[1].len()).map(|j| Edge { from: 0, to: j, cost: 0.0 }));
        return Ok(out);
    }
    let ctx = &contexts[k - 1];
    for src in &layers[k] {
        let here = src.grouping.map(|g| &groupings[g]);
        for dst in &layers[k + 1] {
            let cost = match (src.kind, dst.kind) {
                (NodeKind::Dummy, _) => ctx.threshold,
                (_, NodeKind::Regular) if k < n => {
                    let (h, nx) = (here.expect("regular node"), &groupings[dst.grouping.expect("regular node")]);
                    if !sequentially_compatible(h, nx, tol.delta3) {
                        continue;
                    }
                    match residue_cost(&ctx.priors, Some(h), Some(nx))? {
                        Some(c) if c <= ctx.threshold => c,
                        _ => continue,
                    }
                }
                // into a Dummy or End: the residue is scored from its own node
                _ => residue_cost(&ctx.priors, here, None)?.expect("typed node has no ABSENT observations"),
            };
            out.push(Edge { from: src.index, to: dst.index, cost });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats {
    pub layer_sizes: Vec<usize>,
    /// Edges between layer k and k+1.
    pub edge_counts: Vec<usize>,
    /// Edges over possible pairs, per layer pair.
    pub densities: Vec<f64>,
    pub total_edges: usize,
    pub regular_nodes: usize,
}

pub fn graph_stats(g: &AssignmentGraph) -> GraphStats {
    let layer_sizes: Vec<usize> = g.layers.iter().map(Vec::len).collect();
    let edge_counts: Vec<usize> = g.edges.iter().map(Vec::len).collect();
    let densities = edge_counts.iter().enumerate().map(|(k, &c)| c as f64 / (layer_sizes[k] * layer_sizes[k + 1]) as f64).collect();
    GraphStats {
        total_edges: edge_counts.iter().sum(),
        regular_nodes: g.layers.iter().flatten().filter(|n| n.kind == NodeKind::Regular).count(),
        layer_sizes,
        edge_counts,
        densities,
    }
}

/// Hand-built graphs with explicit costs, for tests and examples.
///
/// Each inner layer gets a Dummy node after its regular nodes. `finish`
/// adds every missing edge touching a Dummy, Start or End: edges leaving
/// a Dummy cost the layer's threshold, the others cost zero unless set.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    regular: Vec<Vec<Vec<String>>>,
    thresholds: Vec<f64>,
    edges: Vec<Vec<Edge>>,
}

impl GraphBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, regular: vec![Vec::new(); n + 2], thresholds: vec![0.0; n + 2], edges: vec![Vec::new(); n + 1] }
    }

    /// Adds a regular node consuming `members`; returns its index.
    pub fn node(&mut self, k: usize, members: &[&str]) -> usize {
        assert!(k >= 1 && k <= self.n);
        self.regular[k].push(members.iter().map(|s| s.to_string()).collect());
        self.regular[k].len() - 1
    }

    pub fn threshold(&mut self, k: usize, cost: f64) -> &mut Self {
        self.thresholds[k] = cost;
        self
    }

    /// Sets an edge between layer k and k+1. Use [`GraphBuilder::DUMMY`] for
    /// the dummy of an inner layer.
    pub fn edge(&mut self, k: usize, from: usize, to: usize, cost: f64) -> &mut Self {
        self.edges[k].retain(|e| (e.from, e.to) != (from, to));
        self.edges[k].push(Edge { from, to, cost });
        self
    }

    pub const DUMMY: usize = usize::MAX;

    pub fn finish(self) -> AssignmentGraph {
        let n = self.n;
        let mut groupings = Vec::new();
        let mut layers = vec![vec![AssignmentNode { layer: 0, index: 0, kind: NodeKind::Start, grouping: None }]];
        for k in 1..=n {
            let mut layer = Vec::new();
            for (i, members) in self.regular[k].iter().enumerate() {
                layer.push(AssignmentNode { layer: k, index: i, kind: NodeKind::Regular, grouping: Some(groupings.len()) });
                groupings.push(PeakGrouping {
                    id: format!("L{k}N{i}"),
                    members: members.clone(),
                    labels: Vec::new(),
                    consensus: Default::default(),
                    fingerprint: (f64::NAN, f64::NAN),
                });
            }
            layer.push(AssignmentNode { layer: k, index: layer.len(), kind: NodeKind::Dummy, grouping: None });
            layers.push(layer);
        }
        layers.push(vec![AssignmentNode { layer: n + 1, index: 0, kind: NodeKind::End, grouping: None }]);

        let resolve = |k: usize, i: usize| if i == Self::DUMMY { layers[k].len() - 1 } else { i };
        let mut edges = Vec::new();
        for k in 0..=n {
            let mut es: Vec<Edge> =
                self.edges[k].iter().map(|e| Edge { from: resolve(k, e.from), to: resolve(k + 1, e.to), cost: e.cost }).collect();
            let present: BTreeSet<(usize, usize)> = es.iter().map(|e| (e.from, e.to)).collect();
            for src in &layers[k] {
                for dst in &layers[k + 1] {
                    let structural =
                        matches!(src.kind, NodeKind::Dummy | NodeKind::Start) || matches!(dst.kind, NodeKind::Dummy | NodeKind::End);
                    if structural && !present.contains(&(src.index, dst.index)) {
                        let cost = if src.kind == NodeKind::Dummy { self.thresholds[k] } else { 0.0 };
                        es.push(Edge { from: src.index, to: dst.index, cost });
                    }
                }
            }
            es.sort_by_key(|e| (e.from, e.to));
            edges.push(es);
        }
        let residues = vec![ResidueType::Ala; n.max(1)];
        AssignmentGraph {
            sequence: ProteinSequence::new(residues).expect("non-empty"),
            layers,
            edges,
            groupings,
            thresholds: self.thresholds,
        }
    }
}

/// The two-residue fixture where both real nodes consume the same peak.
/// Dummies cost 10; every other edge is free.
pub fn conflict_fixture() -> AssignmentGraph {
    let mut b = GraphBuilder::new(2);
    let u1 = b.node(1, &["p1"]);
    let u2 = b.node(2, &["p1"]);
    b.threshold(1, 10.0).threshold(2, 10.0);
    b.edge(1, u1, u2, 0.0);
    b.finish()
}
