//! Synthetic benchmark data with known ground truth.
//!
//! Two protocols:
//! * CISA-style spin systems: the amide pair is copied from the reference,
//!   CA/CB and CA_prev/CB_prev get independent Gaussian noise (σ_α, σ_β).
//!   Prolines have no amide proton and get no spin system.
//! * FLYA-style peak lists: every expected peak of every experiment is placed
//!   at the reference coordinates plus truncated Gaussian noise in each
//!   dimension. Deviations beyond the bound are redrawn.
//!
//! Residue i draws from its own ChaCha stream, so generation is
//! deterministic and independent of thread scheduling. Ids are handed out in
//! a shuffled order so they carry no hint of sequence position.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{
    Atom, ExperimentSet, Nucleus, Peak, PriorEntry, PriorTable, ProteinSequence, ResidueType, Role, SlotKind, SpinSystem,
    SPIN_AMIDE_SPECTRUM, SPIN_CA_SPECTRUM, SPIN_CB_SPECTRUM,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulateError {
    #[error("reference has no {atom} shift for residue {index} ({residue})")]
    MissingReference { index: usize, residue: ResidueType, atom: Atom },
    #[error("reference has {shifts} shift records for a {residues}-residue sequence")]
    LengthMismatch { residues: usize, shifts: usize },
    #[error("invalid simulation parameter: {0}")]
    InvalidSpec(String),
}

/// True shifts of one protein.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub sequence: ProteinSequence,
    /// One map per residue; atoms that do not exist are omitted.
    pub shifts: Vec<BTreeMap<Atom, f64>>,
}

impl Reference {
    /// Every atom with a Gaussian prior must have a shift.
    pub fn check(&self, priors: &PriorTable) -> Result<(), SimulateError> {
        if self.shifts.len() != self.sequence.len() {
            return Err(SimulateError::LengthMismatch { residues: self.sequence.len(), shifts: self.shifts.len() });
        }
        for (i, (&rt, shifts)) in self.sequence.residues().iter().zip(&self.shifts).enumerate() {
            for atom in Atom::ALL {
                if let Some(PriorEntry::Present(_)) = priors.entry(rt, atom) {
                    if !shifts.get(&atom).is_some_and(|v| v.is_finite()) {
                        return Err(SimulateError::MissingReference { index: i + 1, residue: rt, atom });
                    }
                }
            }
        }
        Ok(())
    }

    fn shift(&self, pos: usize, atom: Atom) -> Option<f64> {
        self.shifts.get(pos).and_then(|m| m.get(&atom)).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Cisa,
    Flya,
}

impl std::str::FromStr for Protocol {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cisa" => Ok(Protocol::Cisa),
            "flya" => Ok(Protocol::Flya),
            _ => Err(format!("unknown protocol {s:?} (expected cisa or flya)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CisaNoise {
    pub sigma_alpha: f64,
    pub sigma_beta: f64,
}

impl CisaNoise {
    pub const LOW: CisaNoise = CisaNoise { sigma_alpha: 0.08, sigma_beta: 0.16 };
    pub const HIGH: CisaNoise = CisaNoise { sigma_alpha: 0.16, sigma_beta: 0.32 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlyaNoise {
    pub sigma_h: f64,
    pub sigma_n: f64,
    pub sigma_c: f64,
    pub bound_h: f64,
    pub bound_n: f64,
    pub bound_c: f64,
}

impl Default for FlyaNoise {
    fn default() -> Self {
        Self { sigma_h: 0.03 / 4.0, sigma_n: 0.1, sigma_c: 0.1, bound_h: 0.04, bound_n: 0.4, bound_c: 0.4 }
    }
}

impl FlyaNoise {
    fn for_nucleus(&self, d: Nucleus) -> (f64, f64) {
        match d {
            Nucleus::H => (self.sigma_h, self.bound_h),
            Nucleus::N => (self.sigma_n, self.bound_n),
            Nucleus::C => (self.sigma_c, self.bound_c),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub seed: u64,
    pub cisa: CisaNoise,
    pub flya: FlyaNoise,
    /// Probability that an expected peak is dropped (FLYA only).
    pub deletion_rate: f64,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self { seed: 0, cisa: CisaNoise::LOW, flya: FlyaNoise::default(), deletion_rate: 0.0 }
    }
}

impl SimulationSpec {
    pub fn check(&self) -> Result<(), SimulateError> {
        let f = &self.flya;
        let sigmas = [self.cisa.sigma_alpha, self.cisa.sigma_beta, f.sigma_h, f.sigma_n, f.sigma_c];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(SimulateError::InvalidSpec("noise sigmas must be finite and non-negative".into()));
        }
        if [f.bound_h, f.bound_n, f.bound_c].iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(SimulateError::InvalidSpec("truncation bounds must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.deletion_rate) {
            return Err(SimulateError::InvalidSpec("deletion rate must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Origin of one simulated peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakOrigin {
    pub peak_id: String,
    /// 1-based residue whose amide the peak sits on.
    pub residue: usize,
    /// Carbon role, `None` for an HSQC peak.
    pub role: Option<Role>,
}

impl PeakOrigin {
    /// (1-based residue, atom) measured by the carbon coordinate.
    pub fn carbon_atom(&self) -> Option<(usize, Atom)> {
        self.role.map(|r| (if r.is_prev() { self.residue - 1 } else { self.residue }, r.atom()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthResidue {
    /// 1-based position.
    pub index: usize,
    pub residue: ResidueType,
    /// Spin-system id or peak ids that belong to this residue; empty when
    /// the residue is not observable (ABSENT).
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub protocol: Protocol,
    pub sequence: ProteinSequence,
    pub residues: Vec<TruthResidue>,
    /// Per-peak provenance (FLYA only).
    #[serde(default)]
    pub peaks: Vec<PeakOrigin>,
}

impl GroundTruth {
    pub fn assignable(&self) -> usize {
        self.residues.iter().filter(|r| !r.members.is_empty()).count()
    }
}

fn residue_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

const SHUFFLE_STREAM: u64 = 0;
const DELETE_STREAM: u64 = u64::MAX;

fn gaussian<R: Rng>(rng: &mut R, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
}

/// Gaussian noise conditioned on `|x| ≤ bound`, by redrawing.
fn truncated<R: Rng>(rng: &mut R, sigma: f64, bound: f64) -> f64 {
    loop {
        let x = gaussian(rng, sigma);
        if x.abs() <= bound {
            return x;
        }
    }
}

fn shuffled_ids(seed: u64, count: usize, prefix: char, width: usize) -> Vec<String> {
    let mut order: Vec<usize> = (0..count).collect();
    order.shuffle(&mut residue_rng(seed, SHUFFLE_STREAM));
    let mut ids = vec![String::new(); count];
    for (rank, &slot) in order.iter().enumerate() {
        ids[slot] = format!("{prefix}{:0width$}", rank + 1);
    }
    ids
}

/// CISA-style spin systems, sorted by id.
pub fn simulate_cisa(spec: &SimulationSpec, reference: &Reference) -> Result<(Vec<SpinSystem>, GroundTruth), SimulateError> {
    spec.check()?;
    let seq = reference.sequence.residues();
    if reference.shifts.len() != seq.len() {
        return Err(SimulateError::LengthMismatch { residues: seq.len(), shifts: reference.shifts.len() });
    }
    let need = |pos: usize, atom: Atom| {
        reference.shift(pos, atom).ok_or(SimulateError::MissingReference { index: pos + 1, residue: seq[pos], atom })
    };
    let observed: Vec<usize> = (0..seq.len()).filter(|&p| seq[p].has_amide()).collect();
    let ids = shuffled_ids(spec.seed, observed.len(), 'S', 3);

    let systems: Vec<SpinSystem> = observed
        .par_iter()
        .zip(ids.par_iter())
        .map(|(&pos, id)| {
            let mut rng = residue_rng(spec.seed, pos as u64 + 1);
            let mut shifts = BTreeMap::new();
            shifts.insert(Role::N, need(pos, Atom::N)?);
            shifts.insert(Role::HN, need(pos, Atom::HN)?);
            let CisaNoise { sigma_alpha, sigma_beta } = spec.cisa;
            let ca = need(pos, Atom::CA)?;
            shifts.insert(Role::CA, ca + gaussian(&mut rng, sigma_alpha));
            if let Some(cb) = reference.shift(pos, Atom::CB) {
                shifts.insert(Role::CB, cb + gaussian(&mut rng, sigma_beta));
            }
            if pos > 0 {
                let ca = need(pos - 1, Atom::CA)?;
                shifts.insert(Role::CAPrev, ca + gaussian(&mut rng, sigma_alpha));
                if let Some(cb) = reference.shift(pos - 1, Atom::CB) {
                    shifts.insert(Role::CBPrev, cb + gaussian(&mut rng, sigma_beta));
                }
            }
            Ok(SpinSystem { system_id: id.clone(), shifts })
        })
        .collect::<Result<_, SimulateError>>()?;

    let mut by_pos: BTreeMap<usize, String> = BTreeMap::new();
    for (&pos, id) in observed.iter().zip(&ids) {
        by_pos.insert(pos, id.clone());
    }
    let residues = seq
        .iter()
        .enumerate()
        .map(|(pos, &rt)| TruthResidue { index: pos + 1, residue: rt, members: by_pos.get(&pos).cloned().into_iter().collect() })
        .collect();
    let mut systems = systems;
    systems.sort_by(|a, b| a.system_id.cmp(&b.system_id));
    let truth = GroundTruth { protocol: Protocol::Cisa, sequence: reference.sequence.clone(), residues, peaks: Vec::new() };
    Ok((systems, truth))
}

/// FLYA-style peak lists for the given experiments, sorted by peak id.
pub fn simulate_flya(
    spec: &SimulationSpec,
    reference: &Reference,
    experiments: &ExperimentSet,
) -> Result<(Vec<Peak>, GroundTruth), SimulateError> {
    spec.check()?;
    let seq = reference.sequence.residues();
    if reference.shifts.len() != seq.len() {
        return Err(SimulateError::LengthMismatch { residues: seq.len(), shifts: reference.shifts.len() });
    }
    // Generate per residue, ids assigned afterwards.
    type Raw = (Peak, PeakOrigin);
    let per_residue: Vec<Vec<Raw>> = (0..seq.len())
        .into_par_iter()
        .map(|pos| {
            if !seq[pos].has_amide() {
                return Ok(Vec::new());
            }
            let mut rng = residue_rng(spec.seed, pos as u64 + 1);
            let h0 = reference.shift(pos, Atom::HN).ok_or(SimulateError::MissingReference {
                index: pos + 1,
                residue: seq[pos],
                atom: Atom::HN,
            })?;
            let n0 = reference.shift(pos, Atom::N).ok_or(SimulateError::MissingReference {
                index: pos + 1,
                residue: seq[pos],
                atom: Atom::N,
            })?;
            let mut out = Vec::new();
            for &exp in experiments.experiments() {
                for slot in exp.slots() {
                    let (c, role) = match slot.kind {
                        SlotKind::Amide => (None, None),
                        SlotKind::Carbon(role) => {
                            let src = if role.is_prev() {
                                match pos.checked_sub(1) {
                                    Some(p) => p,
                                    None => continue,
                                }
                            } else {
                                pos
                            };
                            match reference.shift(src, role.atom()) {
                                Some(v) => (Some(v), Some(role)),
                                None => continue,
                            }
                        }
                    };
                    let (sh, bh) = spec.flya.for_nucleus(Nucleus::H);
                    let (sn, bn) = spec.flya.for_nucleus(Nucleus::N);
                    let (sc, bc) = spec.flya.for_nucleus(Nucleus::C);
                    let h = h0 + truncated(&mut rng, sh, bh);
                    let n = n0 + truncated(&mut rng, sn, bn);
                    let c = c.map(|c| c + truncated(&mut rng, sc, bc));
                    let peak = Peak { peak_id: String::new(), spectrum_id: exp.id().to_string(), h, n, c, phase: slot.phase };
                    out.push((peak, PeakOrigin { peak_id: String::new(), residue: pos + 1, role }));
                }
            }
            Ok(out)
        })
        .collect::<Result<_, SimulateError>>()?;

    let mut raw: Vec<Raw> = per_residue.into_iter().flatten().collect();
    if spec.deletion_rate > 0.0 {
        let mut rng = residue_rng(spec.seed, DELETE_STREAM);
        raw.retain(|_| !rng.random_bool(spec.deletion_rate));
    }
    let ids = shuffled_ids(spec.seed, raw.len(), 'P', 4);
    let mut members: Vec<Vec<String>> = vec![Vec::new(); seq.len()];
    let mut peaks = Vec::with_capacity(raw.len());
    let mut origins = Vec::with_capacity(raw.len());
    for ((mut peak, mut origin), id) in raw.into_iter().zip(ids) {
        peak.peak_id = id.clone();
        origin.peak_id = id.clone();
        members[origin.residue - 1].push(id);
        peaks.push(peak);
        origins.push(origin);
    }
    peaks.sort_by(|a, b| a.peak_id.cmp(&b.peak_id));
    origins.sort_by(|a, b| a.peak_id.cmp(&b.peak_id));
    let residues = seq
        .iter()
        .zip(members)
        .enumerate()
        .map(|(pos, (&rt, mut m))| {
            m.sort();
            TruthResidue { index: pos + 1, residue: rt, members: m }
        })
        .collect();
    let truth = GroundTruth { protocol: Protocol::Flya, sequence: reference.sequence.clone(), residues, peaks: origins };
    Ok((peaks, truth))
}

/// Copy of `base` whose experimental noise matches what the simulation
/// injected, so the cost model sees the right σ_l.
pub fn matching_priors(base: &PriorTable, spec: &SimulationSpec, protocol: Protocol, experiments: &ExperimentSet) -> PriorTable {
    let mut p = base.clone();
    match protocol {
        Protocol::Cisa => {
            p.set_noise(SPIN_CA_SPECTRUM, Nucleus::C, spec.cisa.sigma_alpha.max(1e-3));
            p.set_noise(SPIN_CB_SPECTRUM, Nucleus::C, spec.cisa.sigma_beta.max(1e-3));
            if p.noise(SPIN_AMIDE_SPECTRUM, Nucleus::H).is_none() {
                p.set_noise(SPIN_AMIDE_SPECTRUM, Nucleus::H, 0.02);
            }
            if p.noise(SPIN_AMIDE_SPECTRUM, Nucleus::N).is_none() {
                p.set_noise(SPIN_AMIDE_SPECTRUM, Nucleus::N, 0.2);
            }
        }
        Protocol::Flya => {
            for &exp in experiments.experiments() {
                let f = &spec.flya;
                p.set_noise(exp.id(), Nucleus::H, f.sigma_h.max(1e-4));
                p.set_noise(exp.id(), Nucleus::N, f.sigma_n.max(1e-3));
                if !exp.is_two_dimensional() {
                    p.set_noise(exp.id(), Nucleus::C, f.sigma_c.max(1e-3));
                }
            }
        }
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_priors, reference_40, reference_60};

    fn zero() -> SimulationSpec {
        SimulationSpec {
            seed: 3,
            cisa: CisaNoise { sigma_alpha: 0.0, sigma_beta: 0.0 },
            flya: FlyaNoise { sigma_h: 0.0, sigma_n: 0.0, sigma_c: 0.0, ..FlyaNoise::default() },
            deletion_rate: 0.0,
        }
    }

    #[test]
    fn cisa_without_noise_copies_reference() {
        let r = reference_60();
        let (spins, truth) = simulate_cisa(&zero(), &r).unwrap();
        let prolines = r.sequence.residues().iter().filter(|t| **t == ResidueType::Pro).count();
        assert_eq!(spins.len(), 60 - prolines);
        assert_eq!(truth.assignable(), spins.len());
        let by_id: BTreeMap<&str, &SpinSystem> = spins.iter().map(|s| (s.system_id.as_str(), s)).collect();
        for t in &truth.residues {
            let Some(id) = t.members.first() else { continue };
            let s = by_id[id.as_str()];
            let pos = t.index - 1;
            assert_eq!(s.get(Role::CA), r.shift(pos, Atom::CA));
            assert_eq!(s.get(Role::N), r.shift(pos, Atom::N));
            if pos > 0 {
                assert_eq!(s.get(Role::CAPrev), r.shift(pos - 1, Atom::CA));
            } else {
                assert_eq!(s.get(Role::CAPrev), None);
            }
        }
    }

    #[test]
    fn cisa_is_seeded() {
        let r = reference_60();
        let spec = SimulationSpec { seed: 42, ..Default::default() };
        assert_eq!(simulate_cisa(&spec, &r).unwrap(), simulate_cisa(&spec, &r).unwrap());
        let other = SimulationSpec { seed: 43, ..Default::default() };
        assert_ne!(simulate_cisa(&spec, &r).unwrap().0, simulate_cisa(&other, &r).unwrap().0);
    }

    #[test]
    fn cisa_noise_level() {
        // many draws of CA noise from a long poly-Ala reference
        let n = 10_000;
        let seq = ProteinSequence::new(vec![ResidueType::Ala; n]).unwrap();
        let shifts =
            (0..n).map(|_| [(Atom::N, 120.0), (Atom::HN, 8.0), (Atom::CA, 52.0), (Atom::CB, 19.0), (Atom::CO, 177.0)].into()).collect();
        let r = Reference { sequence: seq, shifts };
        let spec = SimulationSpec { seed: 11, ..Default::default() };
        let (spins, _) = simulate_cisa(&spec, &r).unwrap();
        let dev: Vec<f64> = spins.iter().map(|s| s.get(Role::CA).unwrap() - 52.0).collect();
        let mean = dev.iter().sum::<f64>() / n as f64;
        let sd = (dev.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!((0.076..=0.084).contains(&sd), "{sd}");
    }

    #[test]
    fn flya_without_noise_hits_reference() {
        let r = reference_40();
        let exps = ExperimentSet::standard();
        let (peaks, truth) = simulate_flya(&zero(), &r, &exps).unwrap();
        let origin: BTreeMap<&str, &PeakOrigin> = truth.peaks.iter().map(|o| (o.peak_id.as_str(), o)).collect();
        for p in &peaks {
            let o = origin[p.peak_id.as_str()];
            assert_eq!(Some(p.h), r.shift(o.residue - 1, Atom::HN));
            if let Some((res, atom)) = o.carbon_atom() {
                assert_eq!(p.c, r.shift(res - 1, atom));
            }
        }
        // interior non-Gly, non-Pro residue preceded by a non-Gly residue: full pattern
        let seq = r.sequence.residues();
        for t in &truth.residues[1..] {
            let pos = t.index - 1;
            if seq[pos].has_amide() && seq[pos] != ResidueType::Gly && seq[pos - 1] != ResidueType::Gly {
                assert_eq!(t.members.len(), 7, "residue {}", t.index);
            }
        }
    }

    #[test]
    fn flya_respects_bounds() {
        let r = reference_40();
        let exps = ExperimentSet::standard();
        let spec = SimulationSpec { seed: 5, ..Default::default() };
        let (peaks, truth) = simulate_flya(&spec, &r, &exps).unwrap();
        let origin: BTreeMap<&str, &PeakOrigin> = truth.peaks.iter().map(|o| (o.peak_id.as_str(), o)).collect();
        for p in &peaks {
            let o = origin[p.peak_id.as_str()];
            assert!((p.h - r.shift(o.residue - 1, Atom::HN).unwrap()).abs() <= 0.04);
            assert!((p.n - r.shift(o.residue - 1, Atom::N).unwrap()).abs() <= 0.4);
            if let Some((res, atom)) = o.carbon_atom() {
                assert!((p.c.unwrap() - r.shift(res - 1, atom).unwrap()).abs() <= 0.4);
            }
        }
        assert_eq!(simulate_flya(&spec, &r, &exps).unwrap().0, peaks);
    }

    #[test]
    fn truncated_sample_width() {
        let mut rng = residue_rng(9, 1);
        let xs: Vec<f64> = (0..10_000).map(|_| truncated(&mut rng, 0.1, 0.4)).collect();
        let sd = (xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64).sqrt();
        assert!((0.095..=0.105).contains(&sd), "{sd}");
        assert!(xs.iter().all(|x| x.abs() <= 0.4));
    }

    #[test]
    fn deletion_drops_peaks() {
        let r = reference_40();
        let exps = ExperimentSet::standard();
        let full = simulate_flya(&zero(), &r, &exps).unwrap().0.len();
        let spec = SimulationSpec { deletion_rate: 0.2, ..zero() };
        let (peaks, truth) = simulate_flya(&spec, &r, &exps).unwrap();
        assert!(peaks.len() < full);
        assert_eq!(truth.peaks.len(), peaks.len());
        let total: usize = truth.residues.iter().map(|t| t.members.len()).sum();
        assert_eq!(total, peaks.len());
    }

    #[test]
    fn missing_reference_is_reported() {
        let mut r = reference_40();
        r.shifts[3].remove(&Atom::CA);
        assert!(matches!(simulate_cisa(&zero(), &r), Err(SimulateError::MissingReference { index: 4, .. })));
        assert!(r.check(&default_priors()).is_err());
        r.shifts.pop();
        assert!(matches!(simulate_flya(&zero(), &r, &ExperimentSet::standard()), Err(SimulateError::LengthMismatch { .. })));
    }

    #[test]
    fn matching_priors_follow_noise() {
        let spec = SimulationSpec { cisa: CisaNoise::HIGH, ..Default::default() };
        let p = matching_priors(&default_priors(), &spec, Protocol::Cisa, &ExperimentSet::standard());
        assert_eq!(p.noise(SPIN_CA_SPECTRUM, Nucleus::C), Some(0.16));
        assert_eq!(p.noise(SPIN_CB_SPECTRUM, Nucleus::C), Some(0.32));
        let p = matching_priors(&default_priors(), &spec, Protocol::Flya, &ExperimentSet::standard());
        assert_eq!(p.noise("HNCACB", Nucleus::H), Some(0.0075));
        assert_eq!(p.noise("HSQC", Nucleus::C), None);
    }
}
