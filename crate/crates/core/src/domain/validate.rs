use std::collections::BTreeSet;

use serde::Serialize;

use super::{
    Atom, Experiment, Nucleus, Peak, PriorEntry, PriorTable, ProteinSequence, Role, SpinSystem, SPIN_AMIDE_SPECTRUM, SPIN_CA_SPECTRUM,
    SPIN_CB_SPECTRUM,
};

/// Exactly one kind of measurement input.
#[derive(Debug, Clone, Copy)]
pub enum Dataset<'a> {
    Peaks(&'a [Peak]),
    Spins(&'a [SpinSystem]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Severity {
    Warning,
    Fatal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum IssueKind {
    EmptyInput,
    DuplicateId,
    UnknownResidueType,
    MissingPrior,
    InvalidPrior,
    MissingNoise,
    UnknownSpectrum,
    MalformedCoordinates,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationIssue {
    pub severity: Severity,
    pub kind: IssueKind,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn has(&self, kind: IssueKind) -> bool {
        self.issues.iter().any(|i| i.kind == kind)
    }

    pub fn fatal(&self) -> impl Iterator<Item = &ValidationIssue> {
        self.issues.iter().filter(|i| i.severity == Severity::Fatal)
    }
}

struct Collector(Vec<ValidationIssue>);

impl Collector {
    fn push(&mut self, severity: Severity, kind: IssueKind, message: String) {
        self.0.push(ValidationIssue { severity, kind, message });
    }

    fn fatal(&mut self, kind: IssueKind, message: String) {
        self.push(Severity::Fatal, kind, message);
    }
}

/// Checks a dataset against the priors and the raw one-letter sequence.
///
/// Pure: the report depends only on the arguments, and issues are listed in a
/// deterministic order.
pub fn validate_dataset(data: Dataset<'_>, priors: &PriorTable, sequence: &str) -> ValidationReport {
    let mut out = Collector(Vec::new());

    let seq = match ProteinSequence::parse(sequence) {
        Ok(seq) => Some(seq),
        Err(e) => {
            out.fatal(IssueKind::UnknownResidueType, e.to_string());
            None
        }
    };

    if let Err(e) = priors.check() {
        out.fatal(IssueKind::InvalidPrior, e.to_string());
    }

    let needs_carbonyl = match data {
        Dataset::Peaks(peaks) => peaks
            .iter()
            .any(|p| p.spectrum_id.parse::<Experiment>().map(|e| matches!(e, Experiment::Hnco | Experiment::HncaCo)).unwrap_or(false)),
        Dataset::Spins(_) => false,
    };

    if let Some(seq) = &seq {
        let types: BTreeSet<_> = seq.residues().iter().copied().collect();
        for rt in types {
            if !priors.residues.contains_key(&rt) {
                out.fatal(IssueKind::UnknownResidueType, format!("residue type {rt} has no priors"));
                continue;
            }
            for atom in Atom::ALL {
                if atom == Atom::CO && !needs_carbonyl {
                    continue;
                }
                match priors.entry(rt, atom) {
                    Some(PriorEntry::Present(_)) | Some(PriorEntry::Absent) => {}
                    None => out.fatal(IssueKind::MissingPrior, format!("no prior for {rt} {atom}")),
                }
            }
        }
    }

    match data {
        Dataset::Peaks(peaks) => check_peaks(peaks, priors, &mut out),
        Dataset::Spins(spins) => check_spins(spins, priors, &mut out),
    }

    let ok = !out.0.iter().any(|i| i.severity == Severity::Fatal);
    ValidationReport { ok, issues: out.0 }
}

fn duplicate_ids<'a>(ids: impl Iterator<Item = &'a str>, out: &mut Collector) {
    let mut seen = BTreeSet::new();
    let mut reported = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) && reported.insert(id) {
            out.fatal(IssueKind::DuplicateId, format!("duplicate id {id:?}"));
        }
    }
}

fn check_peaks(peaks: &[Peak], priors: &PriorTable, out: &mut Collector) {
    if peaks.is_empty() {
        out.push(Severity::Warning, IssueKind::EmptyInput, "0 peaks".to_string());
    }
    duplicate_ids(peaks.iter().map(|p| p.peak_id.as_str()), out);

    let mut spectra = BTreeSet::new();
    for p in peaks {
        let Ok(exp) = p.spectrum_id.parse::<Experiment>() else {
            out.fatal(IssueKind::UnknownSpectrum, format!("peak {}: unknown spectrum {:?}", p.peak_id, p.spectrum_id));
            continue;
        };
        if !(p.h.is_finite() && p.n.is_finite() && p.c.is_none_or(f64::is_finite)) {
            out.fatal(IssueKind::MalformedCoordinates, format!("peak {}: non-finite coordinate", p.peak_id));
        }
        match (exp.is_two_dimensional(), p.c) {
            (true, Some(_)) => out.fatal(IssueKind::MalformedCoordinates, format!("peak {}: {exp} peaks are two-dimensional", p.peak_id)),
            (false, None) => {
                out.fatal(IssueKind::MalformedCoordinates, format!("peak {}: {exp} peaks need a carbon coordinate", p.peak_id))
            }
            _ => {}
        }
        spectra.insert((p.spectrum_id.clone(), exp));
    }
    for (id, exp) in spectra {
        let mut dims = vec![Nucleus::H, Nucleus::N];
        if !exp.is_two_dimensional() {
            dims.push(Nucleus::C);
        }
        for d in dims {
            if priors.noise(&id, d).is_none() {
                out.fatal(IssueKind::MissingNoise, format!("no noise entry for spectrum {id} dimension {d}"));
            }
        }
    }
}

fn check_spins(spins: &[SpinSystem], priors: &PriorTable, out: &mut Collector) {
    if spins.is_empty() {
        out.push(Severity::Warning, IssueKind::EmptyInput, "0 spin systems".to_string());
    }
    duplicate_ids(spins.iter().map(|s| s.system_id.as_str()), out);

    for s in spins {
        if s.get(Role::N).is_none() && s.get(Role::HN).is_none() {
            out.fatal(IssueKind::MalformedCoordinates, format!("spin system {}: needs at least one of N, HN", s.system_id));
        }
        if s.shifts.values().any(|v| !v.is_finite()) {
            out.fatal(IssueKind::MalformedCoordinates, format!("spin system {}: non-finite shift", s.system_id));
        }
    }
    if !spins.is_empty() {
        for (spectrum, dim) in [
            (SPIN_AMIDE_SPECTRUM, Nucleus::H),
            (SPIN_AMIDE_SPECTRUM, Nucleus::N),
            (SPIN_CA_SPECTRUM, Nucleus::C),
            (SPIN_CB_SPECTRUM, Nucleus::C),
        ] {
            if priors.noise(spectrum, dim).is_none() {
                out.fatal(IssueKind::MissingNoise, format!("no noise entry for spectrum {spectrum} dimension {dim}"));
            }
        }
    }
}
