use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Atom, DomainError, Phase, Role};

/// Heteronuclear experiments whose amide-detected peaks the pipeline understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Experiment {
    Hsqc,
    Hncacb,
    HncoCacb,
    Hnco,
    HncoCa,
    HncaCo,
    Hnca,
}

/// What a single expected peak of an experiment measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SlotKind {
    /// 2-D peak on the amide pair only.
    Amide,
    /// 3-D peak whose carbon coordinate observes this role.
    Carbon(Role),
}

/// One expected peak per residue in a given experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub kind: SlotKind,
    pub phase: Phase,
}

const fn carbon(role: Role, phase: Phase) -> Slot {
    Slot { kind: SlotKind::Carbon(role), phase }
}

const HSQC_SLOTS: [Slot; 1] = [Slot { kind: SlotKind::Amide, phase: Phase::Unknown }];
const HNCACB_SLOTS: [Slot; 4] = [
    carbon(Role::CA, Phase::Positive),
    carbon(Role::CB, Phase::Negative),
    carbon(Role::CAPrev, Phase::Positive),
    carbon(Role::CBPrev, Phase::Negative),
];
const HNCOCACB_SLOTS: [Slot; 2] = [carbon(Role::CAPrev, Phase::Positive), carbon(Role::CBPrev, Phase::Negative)];
const HNCO_SLOTS: [Slot; 1] = [carbon(Role::COPrev, Phase::Unknown)];
const HNCOCA_SLOTS: [Slot; 1] = [carbon(Role::CAPrev, Phase::Unknown)];
const HNCACO_SLOTS: [Slot; 2] = [carbon(Role::CO, Phase::Unknown), carbon(Role::COPrev, Phase::Unknown)];
const HNCA_SLOTS: [Slot; 2] = [carbon(Role::CA, Phase::Unknown), carbon(Role::CAPrev, Phase::Unknown)];

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Hsqc,
        Experiment::Hncacb,
        Experiment::HncoCacb,
        Experiment::Hnco,
        Experiment::HncoCa,
        Experiment::HncaCo,
        Experiment::Hnca,
    ];

    /// Spectrum id used in peak files.
    pub fn id(self) -> &'static str {
        match self {
            Experiment::Hsqc => "HSQC",
            Experiment::Hncacb => "HNCACB",
            Experiment::HncoCacb => "HNCOCACB",
            Experiment::Hnco => "HNCO",
            Experiment::HncoCa => "HNCOCA",
            Experiment::HncaCo => "HNCACO",
            Experiment::Hnca => "HNCA",
        }
    }

    /// Expected peaks per residue, in a fixed order.
    pub fn slots(self) -> &'static [Slot] {
        match self {
            Experiment::Hsqc => &HSQC_SLOTS,
            Experiment::Hncacb => &HNCACB_SLOTS,
            Experiment::HncoCacb => &HNCOCACB_SLOTS,
            Experiment::Hnco => &HNCO_SLOTS,
            Experiment::HncoCa => &HNCOCA_SLOTS,
            Experiment::HncaCo => &HNCACO_SLOTS,
            Experiment::Hnca => &HNCA_SLOTS,
        }
    }

    pub fn is_two_dimensional(self) -> bool {
        self == Experiment::Hsqc
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = DomainError;

    /// Accepts both `HNCOCACB` and `HN(CO)CACB` spellings, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s.chars().filter(|c| !matches!(c, '(' | ')' | '-' | '_' | ' ')).map(|c| c.to_ascii_uppercase()).collect();
        Experiment::ALL.into_iter().find(|e| e.id() == norm).ok_or_else(|| DomainError::UnknownSpectrum(s.to_string()))
    }
}

impl Serialize for Experiment {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for Experiment {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// The experiments a peak dataset was recorded with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSet(Vec<Experiment>);

impl ExperimentSet {
    /// Sorted and deduplicated.
    pub fn new(mut experiments: Vec<Experiment>) -> Self {
        experiments.sort();
        experiments.dedup();
        Self(experiments)
    }

    /// HSQC, HN(CO)CACB and HNCACB: seven peaks per residue.
    pub fn standard() -> Self {
        Self::new(vec![Experiment::Hsqc, Experiment::HncoCacb, Experiment::Hncacb])
    }

    /// The seven-experiment set used by the peak-list simulation.
    pub fn extended() -> Self {
        Self::new(Experiment::ALL.to_vec())
    }

    pub fn parse_list(list: &str) -> Result<Self, DomainError> {
        let experiments =
            list.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).map(str::parse).collect::<Result<Vec<_>, _>>()?;
        Ok(Self::new(experiments))
    }

    pub fn experiments(&self) -> &[Experiment] {
        &self.0
    }

    pub fn contains(&self, e: Experiment) -> bool {
        self.0.contains(&e)
    }

    /// Peaks per residue per spectrum, for a residue with every atom present.
    pub fn expected_pattern(&self) -> Vec<(Experiment, usize)> {
        self.0.iter().map(|&e| (e, e.slots().len())).collect()
    }

    /// Slots observing a given atom, split into intra-residue and preceding-residue.
    pub fn carbon_slots(&self, atom: Atom) -> (Vec<Experiment>, Vec<Experiment>) {
        let mut intra = Vec::new();
        let mut prev = Vec::new();
        for &e in &self.0 {
            for slot in e.slots() {
                if let SlotKind::Carbon(role) = slot.kind {
                    if role.atom() == atom {
                        if role.is_prev() {
                            prev.push(e);
                        } else {
                            intra.push(e);
                        }
                    }
                }
            }
        }
        (intra, prev)
    }
}
