//! Atom cost, edge cost and typing threshold.
//!
//! The atom cost is the negative log marginal likelihood of a set of
//! observations `x_l ~ N(μ, σ_l)` when `μ ~ N(μ_a, σ_a)`. Integrating the
//! mean out gives a Gaussian in closed form, and everything here is kept in
//! log space because `Z` underflows quickly once several sharp observations
//! disagree.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use thiserror::Error;

use crate::domain::{Atom, Gaussian, Observation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CostError {
    #[error("non-positive sigma {0}")]
    NonPositiveSigma(f64),
    #[error("observations for {0}, which has no prior in this residue")]
    UnexpectedAtom(Atom),
}

/// Posterior of the atom's true shift given the observations, together with
/// the marginal likelihood of those observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPosteriorSummary {
    /// Combined standard deviation Σ_a.
    pub sigma: f64,
    /// Combined mean M_a.
    pub mean: f64,
    /// ln Z_a.
    pub ln_z: f64,
    /// −ln Z_a.
    pub cost: f64,
}

impl GaussianPosteriorSummary {
    pub fn z(&self) -> f64 {
        self.ln_z.exp()
    }
}

fn check_sigma(s: f64) -> Result<(), CostError> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(CostError::NonPositiveSigma(s))
    }
}

/// Atom cost over `(value, sigma)` pairs.
///
/// Uses `Σ w (v − M)²` over the prior mean and observations rather than the
/// expanded `μ²/σ² + Σ x²/σ² − M²/Σ²`, which cancels catastrophically for
/// shifts around 100 ppm.
pub fn atom_cost_points(prior: Gaussian, obs: impl IntoIterator<Item = (f64, f64)> + Clone) -> Result<GaussianPosteriorSummary, CostError> {
    check_sigma(prior.sigma)?;
    let wa = 1.0 / (prior.sigma * prior.sigma);
    let mut wsum = wa;
    let mut wx = wa * prior.mu;
    let mut ln_sigma_sq = 0.0;
    let mut count = 0usize;
    for (x, s) in obs.clone() {
        check_sigma(s)?;
        let w = 1.0 / (s * s);
        wsum += w;
        wx += w * x;
        ln_sigma_sq += 2.0 * s.ln();
        count += 1;
    }
    let var = 1.0 / wsum;
    let mean = wx * var;
    let mut q = wa * (prior.mu - mean).powi(2);
    for (x, s) in obs {
        q += (x - mean).powi(2) / (s * s);
    }
    let ln_z = -(count as f64) / 2.0 * (2.0 * PI).ln() + 0.5 * (var.ln() - 2.0 * prior.sigma.ln() - ln_sigma_sq) - 0.5 * q;
    Ok(GaussianPosteriorSummary { sigma: var.sqrt(), mean, ln_z, cost: -ln_z })
}

/// Atom cost of a list of observations.
pub fn atom_cost(prior: Gaussian, obs: &[Observation]) -> Result<GaussianPosteriorSummary, CostError> {
    atom_cost_points(prior, obs.iter().map(|o| (o.value, o.sigma)))
}

/// Sum of atom costs over the residue's atoms. Atoms without observations
/// contribute nothing.
pub fn edge_cost(residue_atoms: &BTreeMap<Atom, Gaussian>, assigned: &BTreeMap<Atom, Vec<Observation>>) -> Result<f64, CostError> {
    let mut total = 0.0;
    for (atom, obs) in assigned {
        let prior = residue_atoms.get(atom).ok_or(CostError::UnexpectedAtom(*atom))?;
        total += atom_cost(*prior, obs)?.cost;
    }
    Ok(total)
}

/// Adversarial observation positions `w_l = μ + δσ_a + (−1)^{l+1} δσ_l`.
pub fn typing_points(prior: Gaussian, noises: &[f64], delta: f64) -> Vec<(f64, f64)> {
    noises
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (prior.mu + delta * prior.sigma + sign * delta * s, s)
        })
        .collect()
}

/// Cost of observations placed about δ standard deviations away from the
/// prior mean. Groupings scoring worse than this are not plausible for the
/// residue. `noises` has one entry per expected observation.
pub fn typing_threshold(prior: Gaussian, noises: &[f64], delta: f64) -> Result<f64, CostError> {
    if noises.is_empty() {
        return Ok(0.0);
    }
    Ok(atom_cost_points(prior, typing_points(prior, noises, delta))?.cost)
}

#[cfg(test)]
#[path = "../tests/support/quadrature.rs"]
#[allow(dead_code)]
mod quadrature;
