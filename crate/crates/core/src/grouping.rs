//! Peak groupings: candidate per-residue evidence.
//!
//! Peaks whose amide coordinates coincide within (δ1, δ2) form a
//! compatibility graph. Each maximal clique is expanded into role-labelled
//! groupings: every member peak is placed in one expected slot of its
//! experiment (phase permitting) and carbon observations of the same role
//! agree within δ3. Only peak sets that cannot be enlarged are kept, each
//! with all of its valid labellings. Spin systems skip all of this and
//! become one grouping each.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::domain::{
    DomainError, Experiment, ExperimentSet, Nucleus, Observation, Peak, PriorTable, Role, SlotKind, SpinSystem, Tolerances,
    SPIN_AMIDE_SPECTRUM, SPIN_CA_SPECTRUM, SPIN_CB_SPECTRUM,
};

/// Largest component the clique enumeration can represent.
pub const MAX_COMPONENT_LIMIT: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupingError {
    #[error("connected component of {size} peaks exceeds the budget of {budget}; tolerances are probably too loose")]
    ComponentTooLarge { size: usize, budget: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("spectrum {0} is not part of the experiment set")]
    SpectrumNotInSet(String),
}

/// Where a peak sits in a grouping: the amide slot of a 2-D spectrum, or the
/// carbon role its C coordinate observes.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct PeakLabel {
    pub peak_id: String,
    pub role: Option<Role>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeakGrouping {
    pub id: String,
    /// Resources consumed: peak ids, or the spin-system id.
    pub members: Vec<String>,
    /// Peak labels, sorted by peak id. Empty for spin systems.
    pub labels: Vec<PeakLabel>,
    /// Observations per role, one per contributing peak.
    pub consensus: BTreeMap<Role, Vec<Observation>>,
    /// Mean (H, N) over the contributing observations.
    pub fingerprint: (f64, f64),
}

impl PeakGrouping {
    pub fn observations(&self, role: Role) -> &[Observation] {
        self.consensus.get(&role).map_or(&[], Vec::as_slice)
    }

    /// Mean observed value of a role, if observed.
    pub fn mean(&self, role: Role) -> Option<f64> {
        let obs = self.observations(role);
        (!obs.is_empty()).then(|| obs.iter().map(|o| o.value).sum::<f64>() / obs.len() as f64)
    }

    pub fn has_role(&self, role: Role) -> bool {
        !self.observations(role).is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityGraph {
    /// Peak ids, in input order.
    pub vertices: Vec<String>,
    /// Sorted neighbour lists.
    pub adjacency: Vec<Vec<usize>>,
}

impl CompatibilityGraph {
    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    /// Edges as (u, v) with u < v, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (u, nb) in self.adjacency.iter().enumerate() {
            out.extend(nb.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    /// Connected components, each sorted, ordered by smallest vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.vertices.len()];
        let mut out = Vec::new();
        for s in 0..self.vertices.len() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                        queue.push_back(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

fn experiment_of(p: &Peak) -> Result<Experiment, GroupingError> {
    Ok(p.spectrum_id.parse::<Experiment>()?)
}

/// Labels a peak could take in its own experiment.
pub fn candidate_roles(peak: &Peak, exp: Experiment) -> Vec<Option<Role>> {
    exp.slots()
        .iter()
        .filter(|s| s.phase.compatible(peak.phase))
        .filter_map(|s| match (s.kind, peak.c) {
            (SlotKind::Amide, None) => Some(None),
            (SlotKind::Carbon(r), Some(_)) => Some(Some(r)),
            _ => None,
        })
        .collect()
}

fn pair_compatible(a: &Peak, ea: Experiment, b: &Peak, eb: Experiment, tol: &Tolerances) -> bool {
    if (a.h - b.h).abs() > tol.delta1 || (a.n - b.n).abs() > tol.delta2 {
        return false;
    }
    let ra = candidate_roles(a, ea);
    let rb = candidate_roles(b, eb);
    if ra.is_empty() || rb.is_empty() {
        return false;
    }
    if ea == eb && !ra.iter().any(|x| rb.iter().any(|y| x != y)) {
        // both would need the one slot the spectrum offers
        return false;
    }
    if let ([Some(x)], [Some(y)], Some(ca), Some(cb)) = (ra.as_slice(), rb.as_slice(), a.c, b.c) {
        if x == y && (ca - cb).abs() > tol.delta3 {
            return false;
        }
    }
    true
}

/// Pairs of peaks that can belong to the same grouping.
pub fn build_compatibility_graph(peaks: &[Peak], tol: &Tolerances) -> Result<CompatibilityGraph, GroupingError> {
    let exps = peaks.iter().map(experiment_of).collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| peaks[a].h.total_cmp(&peaks[b].h).then(a.cmp(&b)));
    let mut adjacency = vec![Vec::new(); peaks.len()];
    for (pos, &u) in order.iter().enumerate() {
        for &v in &order[pos + 1..] {
            if peaks[v].h - peaks[u].h > tol.delta1 {
                break;
            }
            if pair_compatible(&peaks[u], exps[u], &peaks[v], exps[v], tol) {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
    }
    for nb in &mut adjacency {
        nb.sort_unstable();
    }
    Ok(CompatibilityGraph { vertices: peaks.iter().map(|p| p.peak_id.clone()).collect(), adjacency })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupingConfig {
    /// Cliques kept per component, largest first. `None` keeps all.
    pub top_k: Option<usize>,
    /// Vertex budget per connected component (at most 128).
    pub max_component: usize,
}

impl Default for GroupingConfig {
    fn default() -> Self {
        Self { top_k: Some(4), max_component: 64 }
    }
}

/// Bron-Kerbosch with pivoting over bitmasks of local vertex indices.
fn maximal_cliques(adj: &[u128]) -> Vec<u128> {
    fn rec(r: u128, mut p: u128, mut x: u128, adj: &[u128], out: &mut Vec<u128>) {
        if p == 0 {
            if x == 0 {
                out.push(r);
            }
            return;
        }
        let px = p | x;
        let mut pivot = 0;
        let mut best = -1i32;
        let mut m = px;
        while m != 0 {
            let u = m.trailing_zeros() as usize;
            m &= m - 1;
            let c = (p & adj[u]).count_ones() as i32;
            if c > best {
                best = c;
                pivot = u;
            }
        }
        let mut cand = p & !adj[pivot];
        while cand != 0 {
            let v = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            let bit = 1u128 << v;
            rec(r | bit, p & adj[v], x & adj[v], adj, out);
            p &= !bit;
            x |= bit;
        }
    }
    let all = if adj.len() == 128 { u128::MAX } else { (1u128 << adj.len()) - 1 };
    let mut out = Vec::new();
    if !adj.is_empty() {
        rec(0, all, 0, adj, &mut out);
    }
    out
}

type Labeling = Vec<(usize, Option<Role>)>;

struct Expander<'a> {
    peaks: &'a [&'a Peak],
    exps: &'a [Experiment],
    cands: &'a [Vec<Option<Role>>],
    delta3: f64,
}

impl Expander<'_> {
    fn fits(&self, assigned: &Labeling, p: usize, role: Option<Role>) -> bool {
        assigned.iter().all(|&(q, rq)| {
            if self.exps[q] == self.exps[p] && rq == role {
                return false;
            }
            match (role, self.peaks[p].c, self.peaks[q].c) {
                (Some(r), Some(cp), Some(cq)) if rq == Some(r) => (cp - cq).abs() <= self.delta3,
                _ => true,
            }
        })
    }

    fn run(&self, members: &[usize], out: &mut Vec<Labeling>) {
        let mut assigned = Vec::new();
        self.rec(members, 0, &mut assigned, out);
    }

    fn rec(&self, members: &[usize], depth: usize, assigned: &mut Labeling, out: &mut Vec<Labeling>) {
        if depth == members.len() {
            if assigned.is_empty() {
                return;
            }
            let maximal =
                members.iter().all(|&p| assigned.iter().any(|a| a.0 == p) || !self.cands[p].iter().any(|&r| self.fits(assigned, p, r)));
            if maximal {
                let mut l = assigned.clone();
                l.sort();
                out.push(l);
            }
            return;
        }
        let p = members[depth];
        for &r in &self.cands[p] {
            if self.fits(assigned, p, r) {
                assigned.push((p, r));
                self.rec(members, depth + 1, assigned, out);
                assigned.pop();
            }
        }
        self.rec(members, depth + 1, assigned, out);
    }
}

fn strict_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok())
}

/// Groupings for every connected component of the compatibility graph.
pub fn enumerate_groupings(
    graph: &CompatibilityGraph,
    peaks: &[Peak],
    experiments: &ExperimentSet,
    priors: &PriorTable,
    tol: &Tolerances,
    config: &GroupingConfig,
) -> Result<Vec<PeakGrouping>, GroupingError> {
    let budget = config.max_component.min(MAX_COMPONENT_LIMIT);
    let exps = peaks.iter().map(experiment_of).collect::<Result<Vec<_>, _>>()?;
    for (p, e) in peaks.iter().zip(&exps) {
        if !experiments.contains(*e) {
            return Err(GroupingError::SpectrumNotInSet(p.spectrum_id.clone()));
        }
    }
    let components = graph.components();
    if let Some(c) = components.iter().find(|c| c.len() > budget) {
        return Err(GroupingError::ComponentTooLarge { size: c.len(), budget });
    }
    let labelings: Vec<Vec<Labeling>> =
        components.par_iter().map(|comp| component_labelings(comp, graph, peaks, &exps, tol, config.top_k)).collect();

    let mut out = Vec::new();
    for comp in labelings {
        for l in comp {
            out.push(make_grouping(&l, peaks, &exps, priors)?);
        }
    }
    out.sort_by(|a, b| a.labels.cmp(&b.labels));
    for (i, g) in out.iter_mut().enumerate() {
        g.id = format!("G{:05}", i + 1);
    }
    Ok(out)
}

fn component_labelings(
    comp: &[usize],
    graph: &CompatibilityGraph,
    peaks: &[Peak],
    exps: &[Experiment],
    tol: &Tolerances,
    top_k: Option<usize>,
) -> Vec<Labeling> {
    // local indices follow lexicographic peak id order
    let mut local: Vec<usize> = comp.to_vec();
    local.sort_by(|&a, &b| peaks[a].peak_id.cmp(&peaks[b].peak_id));
    let pos: BTreeMap<usize, usize> = local.iter().enumerate().map(|(i, &g)| (g, i)).collect();
    let adj: Vec<u128> = local.iter().map(|&g| graph.adjacency[g].iter().fold(0u128, |m, v| m | 1u128 << pos[v])).collect();

    let mut cliques: Vec<Vec<usize>> =
        maximal_cliques(&adj).into_iter().map(|m| (0..local.len()).filter(|&i| m >> i & 1 == 1).collect()).collect();
    cliques.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
    if let Some(k) = top_k {
        cliques.truncate(k);
    }

    let lpeaks: Vec<&Peak> = local.iter().map(|&g| &peaks[g]).collect();
    let lexps: Vec<Experiment> = local.iter().map(|&g| exps[g]).collect();
    let cands: Vec<Vec<Option<Role>>> = lpeaks.iter().zip(&lexps).map(|(p, &e)| candidate_roles(p, e)).collect();
    let ex = Expander { peaks: &lpeaks, exps: &lexps, cands: &cands, delta3: tol.delta3 };

    let mut found = Vec::new();
    for c in &cliques {
        ex.run(c, &mut found);
    }
    found.sort();
    found.dedup();
    // keep every labelling of each maximal peak set
    let sets: Vec<Vec<usize>> = found.iter().map(|l| l.iter().map(|x| x.0).collect()).collect();
    let keep: Vec<bool> = sets.iter().map(|a| !sets.iter().any(|b| strict_subset(a, b))).collect();
    found.into_iter().zip(keep).filter(|(_, k)| *k).map(|(l, _)| l.into_iter().map(|(i, r)| (local[i], r)).collect()).collect()
}

fn make_grouping(labeling: &Labeling, peaks: &[Peak], exps: &[Experiment], priors: &PriorTable) -> Result<PeakGrouping, GroupingError> {
    let mut consensus: BTreeMap<Role, Vec<Observation>> = BTreeMap::new();
    let mut labels = Vec::new();
    for &(i, role) in labeling {
        let p = &peaks[i];
        let spectrum = exps[i].id();
        let obs = |role: Role, value: f64, dim: Nucleus| -> Result<Observation, GroupingError> {
            Ok(Observation { role, value, source: p.peak_id.clone(), sigma: priors.require_noise(spectrum, dim)? })
        };
        consensus.entry(Role::HN).or_default().push(obs(Role::HN, p.h, Nucleus::H)?);
        consensus.entry(Role::N).or_default().push(obs(Role::N, p.n, Nucleus::N)?);
        if let (Some(r), Some(c)) = (role, p.c) {
            consensus.entry(r).or_default().push(obs(r, c, Nucleus::C)?);
        }
        labels.push(PeakLabel { peak_id: p.peak_id.clone(), role });
    }
    for obs in consensus.values_mut() {
        obs.sort_by(|a, b| a.source.cmp(&b.source));
    }
    labels.sort();
    let mean = |r: Role| {
        let o = &consensus[&r];
        o.iter().map(|o| o.value).sum::<f64>() / o.len() as f64
    };
    let fingerprint = (mean(Role::HN), mean(Role::N));
    Ok(PeakGrouping { id: String::new(), members: labels.iter().map(|l| l.peak_id.clone()).collect(), labels, consensus, fingerprint })
}

/// Noise-table key for a spin-system role.
pub fn spin_noise_key(role: Role) -> (&'static str, Nucleus) {
    match role {
        Role::N => (SPIN_AMIDE_SPECTRUM, Nucleus::N),
        Role::HN => (SPIN_AMIDE_SPECTRUM, Nucleus::H),
        Role::CA | Role::CAPrev => (SPIN_CA_SPECTRUM, Nucleus::C),
        Role::CB | Role::CBPrev => (SPIN_CB_SPECTRUM, Nucleus::C),
        Role::CO | Role::COPrev => ("SPIN_CO", Nucleus::C),
    }
}

/// One grouping per spin system, in input order.
pub fn spins_to_groupings(spins: &[SpinSystem], priors: &PriorTable) -> Result<Vec<PeakGrouping>, GroupingError> {
    spins
        .iter()
        .map(|s| {
            let mut consensus = BTreeMap::new();
            for (&role, &value) in &s.shifts {
                let (spectrum, dim) = spin_noise_key(role);
                let sigma = priors.require_noise(spectrum, dim)?;
                consensus.insert(role, vec![Observation { role, value, source: s.system_id.clone(), sigma }]);
            }
            let h = s.get(Role::HN).unwrap_or(f64::NAN);
            let n = s.get(Role::N).unwrap_or(f64::NAN);
            Ok(PeakGrouping {
                id: s.system_id.clone(),
                members: vec![s.system_id.clone()],
                labels: Vec::new(),
                consensus,
                fingerprint: (h, n),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct DumpLine<'a> {
    grouping_id: &'a str,
    member_peaks: &'a [String],
    labels: &'a [PeakLabel],
    consensus: &'a BTreeMap<Role, Vec<Observation>>,
}

/// Debug dump, one JSON object per line.
pub fn write_groupings_jsonl<W: Write>(mut w: W, groupings: &[PeakGrouping]) -> io::Result<()> {
    for g in groupings {
        let line = DumpLine { grouping_id: &g.id, member_peaks: &g.members, labels: &g.labels, consensus: &g.consensus };
        serde_json::to_writer(&mut w, &line)?;
        writeln!(w)?;
    }
    Ok(())
}

/// Independent re-check of a grouping's windows and slot usage.
pub fn check_grouping(g: &PeakGrouping, peaks: &[Peak], tol: &Tolerances) -> Result<(), String> {
    let by_id: BTreeMap<&str, &Peak> = peaks.iter().map(|p| (p.peak_id.as_str(), p)).collect();
    let mut seen = BTreeSet::new();
    let mut slots = BTreeSet::new();
    for l in &g.labels {
        if !seen.insert(&l.peak_id) {
            return Err(format!("peak {} appears twice", l.peak_id));
        }
        let p = by_id.get(l.peak_id.as_str()).ok_or_else(|| format!("unknown peak {}", l.peak_id))?;
        if !slots.insert((p.spectrum_id.clone(), l.role)) {
            return Err(format!("slot {:?} of {} used twice", l.role, p.spectrum_id));
        }
    }
    for (i, a) in g.labels.iter().enumerate() {
        for b in &g.labels[i + 1..] {
            let (pa, pb) = (by_id[a.peak_id.as_str()], by_id[b.peak_id.as_str()]);
            if (pa.h - pb.h).abs() > tol.delta1 || (pa.n - pb.n).abs() > tol.delta2 {
                return Err(format!("{} and {} disagree on the amide pair", a.peak_id, b.peak_id));
            }
            if a.role.is_some() && a.role == b.role {
                if let (Some(ca), Some(cb)) = (pa.c, pb.c) {
                    if (ca - cb).abs() > tol.delta3 {
                        return Err(format!("{} and {} disagree on {:?}", a.peak_id, b.peak_id, a.role));
                    }
                }
            }
        }
    }
    Ok(())
}
