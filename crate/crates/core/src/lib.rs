//! Cellular automata extended with recursive estimation of neighbors.
//!
//! Each cell perceives a radius `R` beyond the base rule's own neighborhood
//! and predicts its neighbors' next states by applying the base rule
//! recursively. `R = 1` reproduces the base rule. The crate covers
//! elementary (1-D, Wolfram-numbered) and Life-like (2-D, B/S) base rules,
//! homogeneous and per-cell radii, a compiler from extended elementary
//! rules to wide lookup tables, trajectory analysis, and pattern/image I/O.

pub mod analysis;
pub mod compiler;
pub mod engine;
pub mod grid;
pub mod render;
pub mod rle;
pub mod rule;
pub mod soup;

pub use engine::{
    Automaton, EcaAutomaton, EngineError, EstimationLayer, LifeAutomaton, Perception,
};
pub use grid::{Boundary, Grid1D, Grid2D, Lattice, RadiusField};
pub use rule::{BaseRule, EcaRule, EcaTransform, ExtendedRule, LifeRule, RuleError, SequenceCode};
