//! Abelian sandpile on the `L x L` wired lattice.
//!
//! * [`lattice`]: configurations and the add / remove / topple / relax operators.
//! * [`chain`]: the random-drop Markov chain and exact avalanche-size profiles.
//! * [`wave`]: generators, first waves and wave decompositions.
//! * [`analysis`]: exact expected avalanche size of a generator, with a
//!   brute-force oracle.
//! * [`intervention`]: emptying a vertex, stability level, cornerstone vertices.
//! * [`square`]: ring geometry and closed forms for square generators.
//! * [`verify`]: sweep comparing the closed forms with the algorithms.

pub mod analysis;
pub mod chain;
pub mod error;
pub mod intervention;
pub mod lattice;
pub mod rational;
pub mod square;
pub mod verify;
pub mod wave;

pub use analysis::{brute_force_expected_size, depth, expected_avalanche_size, AnalysisReport, WaveNode};
pub use error::{Result, SandpileError};
pub use intervention::{
    expected_size_after_removal, intervention_table, stability_level, CornerstoneReport, InterventionResult,
};
pub use lattice::{neighbors, Avalanche, GridConfig, ToppleCounts, Vertex};
pub use rational::Rational;
pub use square::{RingPartition, SquareSpec, VertexClass};
pub use wave::{decompose_avalanche, find_generators, first_wave, Generator, WaveOutcome, WaveTrace};
