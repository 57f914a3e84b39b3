//! Scoring an assignment against ground truth, plus per-residue diagnostics.
//!
//! A residue is correct when the peaks (or spin system) assigned to it are
//! exactly the ones that belong to it. Atom-level correctness is looser: an
//! atom counts as correct when it received evidence and all of that evidence
//! truly measures it, so a grouping that missed one of its peaks still gets
//! credit for the atoms it did place.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Atom, ProteinSequence, ResidueType, Role};
use crate::graph::AssignmentGraph;
use crate::simulate::{GroundTruth, Protocol};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvaluateError {
    #[error("assignment covers {assignment} residues, ground truth {truth}")]
    LengthMismatch { assignment: usize, truth: usize },
    #[error("assignment is not a path of the graph: {0}")]
    PathNotInGraph(String),
}

/// One piece of evidence for an atom: a peak or spin system and the role it
/// was placed in.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AtomEvidence {
    pub source: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignedResidue {
    /// 1-based position.
    pub index: usize,
    pub residue: ResidueType,
    /// Grouping id, `None` for the null assignment.
    pub grouping: Option<String>,
    pub members: Vec<String>,
    /// Mean observed shift per atom, pooling this residue's own roles with the
    /// next residue's `*_prev` roles.
    pub shifts: BTreeMap<Atom, f64>,
    pub evidence: BTreeMap<Atom, Vec<AtomEvidence>>,
    /// Cost of the edge charging this residue.
    pub cost: f64,
    pub threshold: f64,
    /// Members also consumed by another residue of the path.
    pub reused: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub sequence: ProteinSequence,
    pub method: String,
    /// Node index per layer, Start and End included.
    pub nodes: Vec<usize>,
    pub residues: Vec<AssignedResidue>,
    pub total_cost: f64,
    pub objective: f64,
    pub optimal: bool,
}

impl Assignment {
    /// Reads a path of `g` back as per-residue assignments.
    pub fn from_path(g: &AssignmentGraph, nodes: &[usize], method: &str, objective: f64, optimal: bool) -> Result<Self, EvaluateError> {
        let n = g.n();
        if nodes.len() != n + 2 {
            return Err(EvaluateError::PathNotInGraph(format!("{} nodes for {} layers", nodes.len(), n + 2)));
        }
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (k, &i) in nodes.iter().enumerate() {
            for m in g.usage(k, i) {
                *counts.entry(m.as_str()).or_default() += 1;
            }
        }
        let mut residues = Vec::with_capacity(n);
        let mut total = 0.0;
        for k in 1..=n {
            let edge =
                g.edge(k, nodes[k], nodes[k + 1]).ok_or_else(|| EvaluateError::PathNotInGraph(format!("no edge leaving layer {k}")))?;
            total += edge.cost;
            let here = g.grouping_of(k, nodes[k]);
            let next = if k < n { g.grouping_of(k + 1, nodes[k + 1]) } else { None };
            let mut evidence: BTreeMap<Atom, Vec<AtomEvidence>> = BTreeMap::new();
            let mut values: BTreeMap<Atom, Vec<f64>> = BTreeMap::new();
            for (grp, want_prev) in [(here, false), (next, true)] {
                let Some(grp) = grp else { continue };
                for (&role, obs) in &grp.consensus {
                    if role.is_prev() != want_prev {
                        continue;
                    }
                    for o in obs {
                        evidence.entry(role.atom()).or_default().push(AtomEvidence { source: o.source.clone(), role });
                        values.entry(role.atom()).or_default().push(o.value);
                    }
                }
            }
            let shifts = values.into_iter().map(|(a, v)| (a, v.iter().sum::<f64>() / v.len() as f64)).collect();
            let members: Vec<String> = here.map(|g| g.members.clone()).unwrap_or_default();
            let reused = members.iter().filter(|m| counts[m.as_str()] > 1).cloned().collect();
            residues.push(AssignedResidue {
                index: k,
                residue: g.sequence.residues()[k - 1],
                grouping: here.map(|g| g.id.clone()),
                members,
                shifts,
                evidence,
                cost: edge.cost,
                threshold: g.thresholds[k],
                reused,
            });
        }
        // Start edge is free by construction, but count it anyway.
        total += g.edge(0, nodes[0], nodes[1]).map_or(0.0, |e| e.cost);
        Ok(Assignment {
            sequence: g.sequence.clone(),
            method: method.to_string(),
            nodes: nodes.to_vec(),
            residues,
            total_cost: total,
            objective,
            optimal,
        })
    }

    /// The assignment the ground truth itself describes.
    pub fn from_truth(gt: &GroundTruth) -> Self {
        let residues = gt
            .residues
            .iter()
            .map(|t| {
                let mut evidence: BTreeMap<Atom, Vec<AtomEvidence>> = BTreeMap::new();
                for (src, role, (res, atom)) in truth_sources(gt) {
                    if res == t.index {
                        evidence.entry(atom).or_default().push(AtomEvidence { source: src, role });
                    }
                }
                AssignedResidue {
                    index: t.index,
                    residue: t.residue,
                    grouping: (!t.members.is_empty()).then(|| t.members.join("+")),
                    members: t.members.clone(),
                    shifts: BTreeMap::new(),
                    evidence,
                    cost: 0.0,
                    threshold: 0.0,
                    reused: Vec::new(),
                }
            })
            .collect();
        Assignment {
            sequence: gt.sequence.clone(),
            method: "truth".into(),
            nodes: Vec::new(),
            residues,
            total_cost: 0.0,
            objective: 0.0,
            optimal: true,
        }
    }
}

/// Every (source, role) pair the dataset contains, with the (1-based residue,
/// atom) it truly measures.
fn truth_sources(gt: &GroundTruth) -> Vec<(String, Role, (usize, Atom))> {
    let mut out = Vec::new();
    match gt.protocol {
        Protocol::Flya => {
            for o in &gt.peaks {
                out.push((o.peak_id.clone(), Role::N, (o.residue, Atom::N)));
                out.push((o.peak_id.clone(), Role::HN, (o.residue, Atom::HN)));
                if let (Some(role), Some(target)) = (o.role, o.carbon_atom()) {
                    out.push((o.peak_id.clone(), role, target));
                }
            }
        }
        Protocol::Cisa => {
            let seq = gt.sequence.residues();
            for t in &gt.residues {
                let Some(id) = t.members.first() else { continue };
                let k = t.index;
                let mut roles = vec![Role::N, Role::HN, Role::CA];
                if seq[k - 1] != ResidueType::Gly {
                    roles.push(Role::CB);
                }
                if k > 1 {
                    roles.push(Role::CAPrev);
                    if seq[k - 2] != ResidueType::Gly {
                        roles.push(Role::CBPrev);
                    }
                }
                for role in roles {
                    let res = if role.is_prev() { k - 1 } else { k };
                    out.push((id.clone(), role, (res, role.atom())));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Correct,
    Incorrect,
    /// Assignable but left null.
    Unassigned,
    /// Not observable in the data and left null.
    Absent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueVerdict {
    pub index: usize,
    pub residue: ResidueType,
    pub assigned: Option<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub m_assigned: usize,
    pub m_correct: usize,
    pub m_assignable: usize,
    pub precision: f64,
    pub recall: f64,
    /// Nothing was assigned, so precision is 0 by convention.
    pub precision_undefined: bool,
    pub atoms_correct: usize,
    pub atoms_assignable: usize,
    pub atom_correctness: f64,
    pub verdicts: Vec<ResidueVerdict>,
}

fn sorted(v: &[String]) -> Vec<&str> {
    let mut s: Vec<&str> = v.iter().map(String::as_str).collect();
    s.sort_unstable();
    s
}

pub fn score(a: &Assignment, gt: &GroundTruth) -> Result<ScoreReport, EvaluateError> {
    if a.residues.len() != gt.residues.len() {
        return Err(EvaluateError::LengthMismatch { assignment: a.residues.len(), truth: gt.residues.len() });
    }
    let mut verdicts = Vec::with_capacity(a.residues.len());
    let (mut assigned, mut correct, mut assignable) = (0, 0, 0);
    for (r, t) in a.residues.iter().zip(&gt.residues) {
        let is_assignable = !t.members.is_empty();
        let is_assigned = r.grouping.is_some();
        assignable += is_assignable as usize;
        assigned += is_assigned as usize;
        let verdict = match (is_assigned, is_assignable) {
            (true, true) if sorted(&r.members) == sorted(&t.members) => Verdict::Correct,
            (true, _) => Verdict::Incorrect,
            (false, true) => Verdict::Unassigned,
            (false, false) => Verdict::Absent,
        };
        correct += (verdict == Verdict::Correct) as usize;
        verdicts.push(ResidueVerdict { index: t.index, residue: t.residue, assigned: r.grouping.clone(), verdict });
    }

    let origin: BTreeMap<(String, Role), (usize, Atom)> = truth_sources(gt).into_iter().map(|(s, r, t)| ((s, r), t)).collect();
    let observable: BTreeSet<(usize, Atom)> = origin.values().copied().collect();
    let mut atoms_correct = 0;
    for r in &a.residues {
        for (&atom, ev) in &r.evidence {
            if !ev.is_empty()
                && observable.contains(&(r.index, atom))
                && ev.iter().all(|e| origin.get(&(e.source.clone(), e.role)) == Some(&(r.index, atom)))
            {
                atoms_correct += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    Ok(ScoreReport {
        m_assigned: assigned,
        m_correct: correct,
        m_assignable: assignable,
        precision: ratio(correct, assigned),
        recall: ratio(correct, assignable),
        precision_undefined: assigned == 0,
        atoms_correct,
        atoms_assignable: observable.len(),
        atom_correctness: ratio(atoms_correct, observable.len()),
        verdicts,
    })
}

impl ScoreReport {
    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:>5}  {:<4} {:<24} verdict", "index", "res", "assigned");
        for v in &self.verdicts {
            let verdict = match v.verdict {
                Verdict::Correct => "correct",
                Verdict::Incorrect => "incorrect",
                Verdict::Unassigned => "unassigned",
                Verdict::Absent => "absent",
            };
            let _ = writeln!(out, "{:>5}  {:<4} {:<24} {verdict}", v.index, v.residue.code(), v.assigned.as_deref().unwrap_or("-"),);
        }
        let _ = writeln!(out, "\nassigned {}  correct {}  assignable {}", self.m_assigned, self.m_correct, self.m_assignable);
        let _ = writeln!(out, "precision {:.3}  recall {:.3}", self.precision, self.recall);
        if self.precision_undefined {
            let _ = writeln!(out, "note: nothing assigned, precision reported as 0");
        }
        let _ = writeln!(out, "atoms correct {}/{} ({:.3})", self.atoms_correct, self.atoms_assignable, self.atom_correctness);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidueDiagnostic {
    pub index: usize,
    pub residue: ResidueType,
    pub grouping: Option<String>,
    pub cost: f64,
    pub threshold: f64,
    /// Threshold minus cost; zero for a null assignment.
    pub margin: f64,
    pub reused: Vec<String>,
}

/// Per-residue cost table, checked against the graph the path came from.
pub fn diagnostics(a: &Assignment, g: &AssignmentGraph) -> Result<Vec<ResidueDiagnostic>, EvaluateError> {
    let n = g.n();
    if a.nodes.len() != n + 2 || a.residues.len() != n {
        return Err(EvaluateError::PathNotInGraph(format!("path of {} nodes for {} residues", a.nodes.len(), n)));
    }
    let mut out = Vec::with_capacity(n);
    for (k, r) in (1..=n).zip(&a.residues) {
        let i = a.nodes[k];
        if i >= g.layers[k].len() {
            return Err(EvaluateError::PathNotInGraph(format!("layer {k} has no node {i}")));
        }
        let id = g.grouping_of(k, i).map(|x| x.id.clone());
        if id != r.grouping {
            return Err(EvaluateError::PathNotInGraph(format!("residue {k} grouping differs from the graph")));
        }
        let e = g.edge(k, i, a.nodes[k + 1]).ok_or_else(|| EvaluateError::PathNotInGraph(format!("no edge leaving layer {k}")))?;
        out.push(ResidueDiagnostic {
            index: k,
            residue: r.residue,
            grouping: id,
            cost: e.cost,
            threshold: g.thresholds[k],
            margin: g.thresholds[k] - e.cost,
            reused: r.reused.clone(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{conflict_fixture, GraphBuilder};
    use crate::simulate::{PeakOrigin, TruthResidue};

    fn truth(members: &[&[&str]]) -> GroundTruth {
        let seq = ProteinSequence::new(vec![ResidueType::Ala; members.len()]).unwrap();
        GroundTruth {
            protocol: Protocol::Cisa,
            sequence: seq,
            residues: members
                .iter()
                .enumerate()
                .map(|(i, m)| TruthResidue { index: i + 1, residue: ResidueType::Ala, members: m.iter().map(|s| s.to_string()).collect() })
                .collect(),
            peaks: Vec::new(),
        }
    }

    fn assigned(ids: &[Option<&str>]) -> Assignment {
        let residues = ids
            .iter()
            .enumerate()
            .map(|(i, id)| AssignedResidue {
                index: i + 1,
                residue: ResidueType::Ala,
                grouping: id.map(str::to_string),
                members: id.map(|s| vec![s.to_string()]).unwrap_or_default(),
                shifts: BTreeMap::new(),
                evidence: BTreeMap::new(),
                cost: 0.0,
                threshold: 0.0,
                reused: Vec::new(),
            })
            .collect();
        Assignment {
            sequence: ProteinSequence::new(vec![ResidueType::Ala; ids.len()]).unwrap(),
            method: "test".into(),
            nodes: Vec::new(),
            residues,
            total_cost: 0.0,
            objective: 0.0,
            optimal: true,
        }
    }

    #[test]
    fn nine_ten_twelve() {
        let names: Vec<String> = (0..12).map(|i| format!("S{i}")).collect();
        let members: Vec<Vec<&str>> = names.iter().map(|s| vec![s.as_str()]).collect();
        let refs: Vec<&[&str]> = members.iter().map(|v| v.as_slice()).collect();
        let gt = truth(&refs);
        let mut ids: Vec<Option<&str>> = names.iter().map(|s| Some(s.as_str())).collect();
        ids[9] = Some("S0"); // wrong
        ids[10] = None;
        ids[11] = None;
        let r = score(&assigned(&ids), &gt).unwrap();
        assert_eq!((r.m_correct, r.m_assigned, r.m_assignable), (9, 10, 12));
        assert!((r.precision - 0.9).abs() < 1e-12);
        assert!((r.recall - 0.75).abs() < 1e-12);
    }

    #[test]
    fn all_null_and_identity() {
        let gt = truth(&[&["S1"], &[], &["S2"]]);
        let r = score(&assigned(&[None, None, None]), &gt).unwrap();
        assert_eq!((r.precision, r.recall), (0.0, 0.0));
        assert!(r.precision_undefined);
        assert_eq!(r.verdicts[1].verdict, Verdict::Absent);
        let r = score(&Assignment::from_truth(&gt), &gt).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
        assert_eq!(r.atom_correctness, 1.0);
        assert!(score(&assigned(&[None]), &gt).is_err());
    }

    #[test]
    fn peak_sets_must_match() {
        let mut gt = truth(&[&["p1", "p2"], &["p3"]]);
        gt.protocol = Protocol::Flya;
        gt.peaks = vec![
            PeakOrigin { peak_id: "p1".into(), residue: 1, role: None },
            PeakOrigin { peak_id: "p2".into(), residue: 1, role: Some(Role::CA) },
            PeakOrigin { peak_id: "p3".into(), residue: 2, role: Some(Role::CAPrev) },
        ];
        let mut a = Assignment::from_truth(&gt);
        assert_eq!(score(&a, &gt).unwrap().precision, 1.0);
        // atoms: (1,N) (1,HN) (1,CA) (2,N) (2,HN); p3 measures residue 1's CA
        let r = score(&a, &gt).unwrap();
        assert_eq!(r.atoms_assignable, 5);
        a.residues[0].members = vec!["p1".into()];
        let r = score(&a, &gt).unwrap();
        assert_eq!(r.m_correct, 1);
        assert_eq!(r.verdicts[0].verdict, Verdict::Incorrect);
    }

    #[test]
    fn from_path_and_diagnostics() {
        let g = conflict_fixture();
        let a = Assignment::from_path(&g, &[0, 0, 1, 0], "lian1", 10.0, true).unwrap();
        assert_eq!(a.residues[0].grouping.as_deref(), Some("L1N0"));
        assert_eq!(a.residues[1].grouping, None);
        assert_eq!(a.total_cost, 10.0);
        let d = diagnostics(&a, &g).unwrap();
        assert_eq!(d[1].margin, 0.0);
        assert_eq!(d[1].cost, d[1].threshold);

        let a = Assignment::from_path(&g, &[0, 0, 0, 0], "lian2", 5.0, true).unwrap();
        assert_eq!(a.residues[0].reused, vec!["p1".to_string()]);
        assert_eq!(a.residues[1].reused, vec!["p1".to_string()]);

        assert!(Assignment::from_path(&g, &[0, 0, 0], "x", 0.0, true).is_err());
        let other = GraphBuilder::new(2).finish();
        assert!(diagnostics(&a, &other).is_err());
    }

    #[test]
    fn report_text() {
        let gt = truth(&[&["S1"], &["S2"]]);
        let text = score(&assigned(&[Some("S1"), None]), &gt).unwrap().to_text();
        assert!(text.contains("precision 1.000  recall 0.500"));
        assert!(text.contains("unassigned"));
    }
}
