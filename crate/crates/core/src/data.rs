//! Bundled priors and synthetic reference proteins.

use crate::domain::PriorTable;
use crate::simulate::Reference;

pub const PRIORS_JSON: &str = include_str!("../data/priors.json");
pub const REFERENCE_60_JSON: &str = include_str!("../data/reference60.json");
pub const REFERENCE_40_JSON: &str = include_str!("../data/reference40.json");

/// Database-style average shifts for the twenty residue types.
pub fn default_priors() -> PriorTable {
    serde_json::from_str(PRIORS_JSON).expect("bundled priors parse")
}

/// A 60-residue protein whose shifts were drawn from the bundled priors.
pub fn reference_60() -> Reference {
    serde_json::from_str(REFERENCE_60_JSON).expect("bundled reference parses")
}

/// A 40-residue protein whose shifts were drawn from the bundled priors.
pub fn reference_40() -> Reference {
    serde_json::from_str(REFERENCE_40_JSON).expect("bundled reference parses")
}
