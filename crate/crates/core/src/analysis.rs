//! Exact expected avalanche size of a generator by wave recursion.
//!
//! For a generator `A` in `cfg`, let `W` be its first wave and `cfg'` the
//! configuration after `W` toppled once. Vertices of `A` left below three
//! grains end their avalanche after `W`; the rest split into components
//! `A_1..A_l`, each of which starts a fresh wave in `cfg'`. Hence
//!
//! ```text
//! E[size | drop in A] = |W| + sum_j |A_j| / |A| * E'[size | drop in A_j]
//! ```
//!
//! evaluated exactly over big rationals.

use num_bigint::BigInt;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Result, SandpileError};
use crate::lattice::{GridConfig, Vertex};
use crate::rational::{self, Rational};
use crate::wave::{first_wave, Generator};

/// One node of the recursion: a generator, its first wave, and the
/// components that go on to produce further waves.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WaveNode {
    pub vertices: Generator,
    pub wave_size: usize,
    #[serde(with = "rational::json")]
    pub expected_size: Rational,
    pub depth: u32,
    pub children: Vec<WaveNode>,
}

impl WaveNode {
    /// Number of nodes on the longest root-to-leaf path.
    pub fn height(&self) -> u32 {
        1 + self.children.iter().map(WaveNode::height).max().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnalysisReport {
    #[serde(skip)]
    pub generator: Generator,
    #[serde(with = "rational::json")]
    pub expected_size: Rational,
    pub depth: u32,
    pub wave_tree: WaveNode,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serialization cannot fail")
    }
}

fn analyze(cfg: &GridConfig, generator: &Generator) -> Result<WaveNode> {
    let outcome = first_wave(cfg, generator)?;
    let children =
        outcome.active.iter().map(|child| analyze(&outcome.post_config, child)).collect::<Result<Vec<_>>>()?;
    let total = BigInt::from(generator.len());
    let mut expected = rational::int(outcome.wave.size() as i64);
    for child in &children {
        expected += Rational::new(BigInt::from(child.vertices.len()), total.clone()) * &child.expected_size;
    }
    let depth = 1 + children.iter().map(|c| c.depth).max().unwrap_or(0);
    Ok(WaveNode {
        vertices: generator.clone(),
        wave_size: outcome.wave.size(),
        expected_size: expected,
        depth,
        children,
    })
}

/// Expected avalanche size given the next grain lands uniformly on
/// `generator`, together with its depth and the full recursion tree.
///
/// `generator` may be any connected critical set, maximal or not; heights
/// may be negative but none may exceed 3.
pub fn expected_avalanche_size(cfg: &GridConfig, generator: &Generator) -> Result<AnalysisReport> {
    let tree = analyze(cfg, generator)?;
    Ok(AnalysisReport {
        generator: generator.clone(),
        expected_size: tree.expected_size.clone(),
        depth: tree.depth,
        wave_tree: tree,
    })
}

/// Largest number of times a single generator vertex topples in any
/// avalanche started on the generator.
pub fn depth(cfg: &GridConfig, generator: &Generator) -> Result<u32> {
    Ok(analyze(cfg, generator)?.depth)
}

/// Average of the brute-force avalanche sizes over drops on each vertex of
/// `set`. Heights may be negative but none may exceed 3.
pub fn brute_force_expected_size(cfg: &GridConfig, set: &[Vertex]) -> Result<Rational> {
    if set.is_empty() {
        return Err(SandpileError::EmptySet);
    }
    cfg.ensure_not_overloaded()?;
    let total: u64 = set
        .par_iter()
        .map(|&v| cfg.add_grain(v).map(|c| c.relax().1.total()))
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    Ok(Rational::new(BigInt::from(total), BigInt::from(set.len())))
}
