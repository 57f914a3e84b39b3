//! Shared data types: peaks, spin systems, residues, priors and tolerances.

mod experiment;
pub mod io;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use experiment::{Experiment, ExperimentSet, Slot, SlotKind};
pub use validate::{validate_dataset, Dataset, IssueKind, Severity, ValidationIssue, ValidationReport};

/// Noise-table spectrum id used for the amide pair of spin-system input.
pub const SPIN_AMIDE_SPECTRUM: &str = "SPIN";
/// Noise-table spectrum id used for CA and CA_prev of spin-system input.
pub const SPIN_CA_SPECTRUM: &str = "SPIN_CA";
/// Noise-table spectrum id used for CB and CB_prev of spin-system input.
pub const SPIN_CB_SPECTRUM: &str = "SPIN_CB";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("unknown residue type code {code:?} at position {position}")]
    UnknownResidueType { position: usize, code: char },
    #[error("protein sequence is empty")]
    EmptySequence,
    #[error("unknown atom role {0:?}")]
    UnknownRole(String),
    #[error("unknown spectrum {0:?}")]
    UnknownSpectrum(String),
    #[error("no prior for residue {residue} atom {atom}")]
    PriorMissing { residue: ResidueType, atom: Atom },
    #[error("no noise entry for spectrum {spectrum} dimension {dimension}")]
    NoiseMissing { spectrum: String, dimension: Nucleus },
    #[error("{what} must be strictly positive and finite, got {value}")]
    NonPositive { what: String, value: f64 },
    #[error("invalid phase {0:?}")]
    InvalidPhase(String),
}

/// Measured dimension of a peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Nucleus {
    H,
    N,
    C,
}

impl fmt::Display for Nucleus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Nucleus::H => "H",
            Nucleus::N => "N",
            Nucleus::C => "C",
        })
    }
}

/// Sign of a peak. HNCACB-type spectra separate CA (+) from CB (-).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Phase {
    Positive,
    Negative,
    #[default]
    Unknown,
}

impl Phase {
    pub fn as_i8(self) -> i8 {
        match self {
            Phase::Positive => 1,
            Phase::Negative => -1,
            Phase::Unknown => 0,
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Phase::Positive),
            -1 => Some(Phase::Negative),
            0 => Some(Phase::Unknown),
            _ => None,
        }
    }

    /// Unknown on either side matches anything.
    pub fn compatible(self, other: Phase) -> bool {
        self == Phase::Unknown || other == Phase::Unknown || self == other
    }
}

impl FromStr for Phase {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "+" | "+1" | "1" => Ok(Phase::Positive),
            "-" | "-1" => Ok(Phase::Negative),
            "0" | "?" => Ok(Phase::Unknown),
            other => Err(DomainError::InvalidPhase(other.to_string())),
        }
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(self.as_i8())
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = i8::deserialize(d)?;
        Phase::from_i8(v).ok_or_else(|| serde::de::Error::custom(format!("invalid phase {v}")))
    }
}

/// A backbone atom of one residue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Atom {
    N,
    HN,
    CA,
    CB,
    CO,
}

impl Atom {
    pub const ALL: [Atom; 5] = [Atom::N, Atom::HN, Atom::CA, Atom::CB, Atom::CO];
    pub const CARBONS: [Atom; 3] = [Atom::CA, Atom::CB, Atom::CO];

    pub fn name(self) -> &'static str {
        match self {
            Atom::N => "N",
            Atom::HN => "HN",
            Atom::CA => "CA",
            Atom::CB => "CB",
            Atom::CO => "CO",
        }
    }

    pub fn nucleus(self) -> Nucleus {
        match self {
            Atom::N => Nucleus::N,
            Atom::HN => Nucleus::H,
            Atom::CA | Atom::CB | Atom::CO => Nucleus::C,
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What an observation measures, relative to the residue whose amide pair
/// anchors the peak (or spin system). `*Prev` roles belong to the preceding
/// residue in the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    N,
    HN,
    CA,
    CB,
    CO,
    CAPrev,
    CBPrev,
    COPrev,
}

impl Role {
    pub const ALL: [Role; 8] = [Role::N, Role::HN, Role::CA, Role::CB, Role::CO, Role::CAPrev, Role::CBPrev, Role::COPrev];

    /// Roles carried by the spin-system file format, in column order.
    pub const SPIN_COLUMNS: [Role; 6] = [Role::N, Role::HN, Role::CA, Role::CB, Role::CAPrev, Role::CBPrev];

    pub fn atom(self) -> Atom {
        match self {
            Role::N => Atom::N,
            Role::HN => Atom::HN,
            Role::CA | Role::CAPrev => Atom::CA,
            Role::CB | Role::CBPrev => Atom::CB,
            Role::CO | Role::COPrev => Atom::CO,
        }
    }

    pub fn is_prev(self) -> bool {
        matches!(self, Role::CAPrev | Role::CBPrev | Role::COPrev)
    }

    pub fn intra(atom: Atom) -> Role {
        match atom {
            Atom::N => Role::N,
            Atom::HN => Role::HN,
            Atom::CA => Role::CA,
            Atom::CB => Role::CB,
            Atom::CO => Role::CO,
        }
    }

    /// The inter-residue role observing `atom` of the preceding residue.
    pub fn prev(atom: Atom) -> Option<Role> {
        match atom {
            Atom::CA => Some(Role::CAPrev),
            Atom::CB => Some(Role::CBPrev),
            Atom::CO => Some(Role::COPrev),
            Atom::N | Atom::HN => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::N => "N",
            Role::HN => "HN",
            Role::CA => "CA",
            Role::CB => "CB",
            Role::CO => "CO",
            Role::CAPrev => "CA_prev",
            Role::CBPrev => "CB_prev",
            Role::COPrev => "CO_prev",
        }
    }

    pub fn nucleus(self) -> Nucleus {
        self.atom().nucleus()
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Role {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Role::ALL.into_iter().find(|r| r.name() == s).ok_or_else(|| DomainError::UnknownRole(s.to_string()))
    }
}

impl Serialize for Role {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Role {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A measured peak. 2-D (HSQC) peaks carry no carbon coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub peak_id: String,
    pub spectrum_id: String,
    pub h: f64,
    pub n: f64,
    pub c: Option<f64>,
    #[serde(default)]
    pub phase: Phase,
}

impl Peak {
    /// Coordinates as (dimension, ppm) pairs in H, N, C order.
    pub fn coords(&self) -> impl Iterator<Item = (Nucleus, f64)> + '_ {
        [(Nucleus::H, Some(self.h)), (Nucleus::N, Some(self.n)), (Nucleus::C, self.c)].into_iter().filter_map(|(d, v)| v.map(|v| (d, v)))
    }
}

/// A consensus record of shifts for one amide pair and its carbon contacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinSystem {
    pub system_id: String,
    pub shifts: BTreeMap<Role, f64>,
}

impl SpinSystem {
    pub fn get(&self, role: Role) -> Option<f64> {
        self.shifts.get(&role).copied()
    }
}

/// The twenty standard amino acids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResidueType {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

impl ResidueType {
    pub const ALL: [ResidueType; 20] = [
        ResidueType::Ala,
        ResidueType::Arg,
        ResidueType::Asn,
        ResidueType::Asp,
        ResidueType::Cys,
        ResidueType::Gln,
        ResidueType::Glu,
        ResidueType::Gly,
        ResidueType::His,
        ResidueType::Ile,
        ResidueType::Leu,
        ResidueType::Lys,
        ResidueType::Met,
        ResidueType::Phe,
        ResidueType::Pro,
        ResidueType::Ser,
        ResidueType::Thr,
        ResidueType::Trp,
        ResidueType::Tyr,
        ResidueType::Val,
    ];

    pub fn code(self) -> char {
        match self {
            ResidueType::Ala => 'A',
            ResidueType::Arg => 'R',
            ResidueType::Asn => 'N',
            ResidueType::Asp => 'D',
            ResidueType::Cys => 'C',
            ResidueType::Gln => 'Q',
            ResidueType::Glu => 'E',
            ResidueType::Gly => 'G',
            ResidueType::His => 'H',
            ResidueType::Ile => 'I',
            ResidueType::Leu => 'L',
            ResidueType::Lys => 'K',
            ResidueType::Met => 'M',
            ResidueType::Phe => 'F',
            ResidueType::Pro => 'P',
            ResidueType::Ser => 'S',
            ResidueType::Thr => 'T',
            ResidueType::Trp => 'W',
            ResidueType::Tyr => 'Y',
            ResidueType::Val => 'V',
        }
    }

    pub fn from_code(c: char) -> Option<Self> {
        let c = c.to_ascii_uppercase();
        ResidueType::ALL.into_iter().find(|r| r.code() == c)
    }

    /// Proline has no amide proton and contributes no amide-anchored peaks.
    pub fn has_amide(self) -> bool {
        self != ResidueType::Pro
    }
}

impl fmt::Display for ResidueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

impl Serialize for ResidueType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.code().encode_utf8(&mut [0; 4]))
    }
}

impl<'de> Deserialize<'de> for ResidueType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => ResidueType::from_code(c).ok_or_else(|| serde::de::Error::custom(format!("unknown residue type {s:?}"))),
            _ => Err(serde::de::Error::custom(format!("unknown residue type {s:?}"))),
        }
    }
}

/// Primary sequence, one residue type per position (1-based in reports).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProteinSequence(Vec<ResidueType>);

impl ProteinSequence {
    pub fn new(residues: Vec<ResidueType>) -> Result<Self, DomainError> {
        if residues.is_empty() {
            return Err(DomainError::EmptySequence);
        }
        Ok(Self(residues))
    }

    /// Parses one-letter codes. Whitespace and FASTA header lines are ignored.
    pub fn parse(text: &str) -> Result<Self, DomainError> {
        let mut residues = Vec::new();
        let mut position = 0;
        for line in text.lines().filter(|l| !l.trim_start().starts_with('>')) {
            for c in line.chars().filter(|c| !c.is_whitespace()) {
                position += 1;
                residues.push(ResidueType::from_code(c).ok_or(DomainError::UnknownResidueType { position, code: c })?);
            }
        }
        Self::new(residues)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn residues(&self) -> &[ResidueType] {
        &self.0
    }

    /// Residue at a 0-based position.
    pub fn get(&self, index: usize) -> Option<ResidueType> {
        self.0.get(index).copied()
    }
}

impl fmt::Display for ProteinSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|r| write!(f, "{}", r.code()))
    }
}

impl Serialize for ProteinSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for ProteinSequence {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ProteinSequence::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Normal distribution parameters in ppm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mu: f64,
    pub sigma: f64,
}

/// A prior entry: a Gaussian, or an explicit marker that the atom does not
/// exist (Gly CB) or never appears in amide-detected spectra (Pro amide).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PriorEntryRepr", into = "PriorEntryRepr")]
pub enum PriorEntry {
    Present(Gaussian),
    Absent,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PriorEntryRepr {
    Present { mu: f64, sigma: f64 },
    Marker(String),
}

const ABSENT_MARKER: &str = "ABSENT";

impl TryFrom<PriorEntryRepr> for PriorEntry {
    type Error = String;

    fn try_from(r: PriorEntryRepr) -> Result<Self, Self::Error> {
        match r {
            PriorEntryRepr::Present { mu, sigma } => Ok(PriorEntry::Present(Gaussian { mu, sigma })),
            PriorEntryRepr::Marker(m) if m == ABSENT_MARKER => Ok(PriorEntry::Absent),
            PriorEntryRepr::Marker(m) => Err(format!("expected {ABSENT_MARKER:?}, got {m:?}")),
        }
    }
}

impl From<PriorEntry> for PriorEntryRepr {
    fn from(e: PriorEntry) -> Self {
        match e {
            PriorEntry::Present(g) => PriorEntryRepr::Present { mu: g.mu, sigma: g.sigma },
            PriorEntry::Absent => PriorEntryRepr::Marker(ABSENT_MARKER.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEntry {
    pub spectrum: String,
    pub dimension: Nucleus,
    pub sigma: f64,
}

/// Per-residue-type atom priors plus per-spectrum experimental noise.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PriorTable {
    pub residues: BTreeMap<ResidueType, BTreeMap<Atom, PriorEntry>>,
    #[serde(default)]
    pub noise: Vec<NoiseEntry>,
}

impl PriorTable {
    pub fn entry(&self, residue: ResidueType, atom: Atom) -> Option<PriorEntry> {
        self.residues.get(&residue).and_then(|m| m.get(&atom)).copied()
    }

    /// `Ok(None)` for an ABSENT atom, an error when the table has no entry.
    pub fn gaussian(&self, residue: ResidueType, atom: Atom) -> Result<Option<Gaussian>, DomainError> {
        match self.entry(residue, atom) {
            Some(PriorEntry::Present(g)) => Ok(Some(g)),
            Some(PriorEntry::Absent) => Ok(None),
            None => Err(DomainError::PriorMissing { residue, atom }),
        }
    }

    pub fn noise(&self, spectrum: &str, dimension: Nucleus) -> Option<f64> {
        self.noise.iter().find(|e| e.spectrum == spectrum && e.dimension == dimension).map(|e| e.sigma)
    }

    pub fn require_noise(&self, spectrum: &str, dimension: Nucleus) -> Result<f64, DomainError> {
        self.noise(spectrum, dimension).ok_or_else(|| DomainError::NoiseMissing { spectrum: spectrum.to_string(), dimension })
    }

    /// Inserts or replaces a noise entry.
    pub fn set_noise(&mut self, spectrum: &str, dimension: Nucleus, sigma: f64) {
        match self.noise.iter_mut().find(|e| e.spectrum == spectrum && e.dimension == dimension) {
            Some(e) => e.sigma = sigma,
            None => self.noise.push(NoiseEntry { spectrum: spectrum.to_string(), dimension, sigma }),
        }
    }

    /// Checks that every sigma is positive and finite.
    pub fn check(&self) -> Result<(), DomainError> {
        for (rt, atoms) in &self.residues {
            for (atom, entry) in atoms {
                if let PriorEntry::Present(g) = entry {
                    positive(&format!("prior sigma for {rt} {atom}"), g.sigma)?;
                    if !g.mu.is_finite() {
                        return Err(DomainError::NonPositive { what: format!("prior mean for {rt} {atom}"), value: g.mu });
                    }
                }
            }
        }
        for e in &self.noise {
            positive(&format!("noise sigma for {} {}", e.spectrum, e.dimension), e.sigma)?;
        }
        Ok(())
    }
}

fn positive(what: &str, value: f64) -> Result<(), DomainError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(DomainError::NonPositive { what: what.to_string(), value })
    }
}

/// Matching windows, typing multiplier, reuse penalty and rounding cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// H window in ppm.
    pub delta1: f64,
    /// N window in ppm.
    pub delta2: f64,
    /// C window in ppm.
    pub delta3: f64,
    /// Typing threshold multiplier (standard deviations).
    pub delta: f64,
    /// Cost of each reuse of a peak under the soft utilization variant.
    pub lambda: f64,
    /// LP values at or below this are treated as zero when rounding.
    pub round_eps: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { delta1: 0.03, delta2: 0.3, delta3: 0.3, delta: 3.0, lambda: 5.0, round_eps: 1e-6 }
    }
}

impl Tolerances {
    pub fn check(&self) -> Result<(), DomainError> {
        positive("delta1", self.delta1)?;
        positive("delta2", self.delta2)?;
        positive("delta3", self.delta3)?;
        positive("delta", self.delta)?;
        positive("lambda", self.lambda)?;
        positive("round_eps", self.round_eps)
    }
}

/// One measured value attributed to an atom role, with its source and noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub role: Role,
    pub value: f64,
    /// Peak id, or spin-system id for spin input.
    pub source: String,
    pub sigma: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_rejects_unknown_code() {
        let err = ProteinSequence::parse("ACDXE").unwrap_err();
        assert_eq!(err, DomainError::UnknownResidueType { position: 4, code: 'X' });
    }

    #[test]
    fn sequence_ignores_fasta_header_and_whitespace() {
        let seq = ProteinSequence::parse(">sp|test\nAC DE\nG\n").unwrap();
        assert_eq!(seq.to_string(), "ACDEG");
        assert_eq!(seq.len(), 5);
    }

    #[test]
    fn empty_sequence_is_an_error() {
        assert_eq!(ProteinSequence::parse("  \n"), Err(DomainError::EmptySequence));
    }

    #[test]
    fn prior_entry_json_forms() {
        let e: PriorEntry = serde_json::from_str(r#"{"mu": 53.1, "sigma": 2.0}"#).unwrap();
        assert_eq!(e, PriorEntry::Present(Gaussian { mu: 53.1, sigma: 2.0 }));
        let a: PriorEntry = serde_json::from_str(r#""ABSENT""#).unwrap();
        assert_eq!(a, PriorEntry::Absent);
        assert!(serde_json::from_str::<PriorEntry>(r#""absentish""#).is_err());
        assert_eq!(serde_json::to_string(&PriorEntry::Absent).unwrap(), r#""ABSENT""#);
    }

    #[test]
    fn tolerance_defaults() {
        let t = Tolerances::default();
        assert_eq!((t.delta1, t.delta2, t.delta3, t.delta, t.lambda), (0.03, 0.3, 0.3, 3.0, 5.0));
        assert!(t.check().is_ok());
        let partial: Tolerances = serde_json::from_str(r#"{"delta3": 0.5}"#).unwrap();
        assert_eq!(partial.delta3, 0.5);
        assert_eq!(partial.delta1, 0.03);
        assert!(Tolerances { lambda: 0.0, ..t }.check().is_err());
    }

    #[test]
    fn role_names_round_trip() {
        for r in Role::ALL {
            assert_eq!(r.name().parse::<Role>().unwrap(), r);
        }
        assert!("CX".parse::<Role>().is_err());
        assert_eq!(Role::prev(Atom::CA), Some(Role::CAPrev));
        assert_eq!(Role::prev(Atom::N), None);
    }

    #[test]
    fn phase_parsing() {
        assert_eq!("+".parse::<Phase>().unwrap(), Phase::Positive);
        assert_eq!("-1".parse::<Phase>().unwrap(), Phase::Negative);
        assert_eq!("0".parse::<Phase>().unwrap(), Phase::Unknown);
        assert!("2".parse::<Phase>().is_err());
        assert!(Phase::Unknown.compatible(Phase::Negative));
        assert!(!Phase::Positive.compatible(Phase::Negative));
    }
}
