//! Backbone resonance assignment for protein NMR.
//!
//! Measured peaks (or pre-assembled spin systems) are grouped into candidate
//! per-residue evidence, scored against Gaussian chemical-shift priors, and
//! arranged into a layered graph with one layer per residue. An assignment is
//! a start-to-end path through that graph in which no measured peak supports
//! more than one residue. The path is found by solving a linear-programming
//! relaxation of the constrained shortest-path problem and resolving the
//! induced subgraph exactly.
//!
//! The pipeline, module by module:
//!
//! 1. [`domain`]: peaks, spin systems, priors, tolerances, file formats.
//! 2. [`grouping`]: consistent peak groupings via maximal cliques.
//! 3. [`costmodel`]: closed-form atom cost and typing thresholds.
//! 4. [`graph`]: layered assignment graph with dummy (null) nodes.
//! 5. [`shortest_path`]: dynamic programming and exhaustive oracles.
//! 6. [`lp`]: formulations, the bundled simplex, branch-and-bound rounding.
//! 7. [`simulate`] and [`evaluate`]: synthetic benchmarks and scoring.
//!
//! [`pipeline`] wires these together the way the command-line tool does.

pub mod costmodel;
pub mod data;
pub mod domain;
pub mod evaluate;
pub mod graph;
pub mod grouping;
pub mod lp;
pub mod pipeline;
pub mod shortest_path;
pub mod simulate;

pub use domain::{Atom, Observation, Peak, Phase, PriorTable, ProteinSequence, ResidueType, Role, SpinSystem, Tolerances};
