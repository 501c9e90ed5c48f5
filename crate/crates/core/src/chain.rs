//! The sandpile Markov chain: uniform grain drops followed by relaxation.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::lattice::{relax_in_place, GridConfig, Vertex};

/// Generator driving every chain. Its identifier is written into trajectory
/// headers; changing either one changes trajectories.
pub type ChainRng = ChaCha8Rng;
pub const RNG_NAME: &str = "chacha8/rand_chacha-0.3";

pub fn seeded_rng(seed: u64) -> ChainRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent generator for the `stream`-th chain sharing one seed.
pub fn split_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = seeded_rng(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainStep {
    pub drop_vertex: Vertex,
    pub avalanche_size: u64,
    pub resulting_config: GridConfig,
}

/// One trajectory record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct StepSummary {
    pub t: u64,
    pub drop: Vertex,
    pub size: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunOutput {
    pub final_config: GridConfig,
    pub steps: Vec<StepSummary>,
    /// `(steps completed, config)` pairs, present only when checkpointing was requested.
    pub checkpoints: Vec<(u64, GridConfig)>,
}

fn draw_vertex<R: Rng + ?Sized>(side: usize, rng: &mut R) -> Vertex {
    Vertex::from_index(rng.gen_range(0..side * side), side)
}

pub fn step<R: Rng + ?Sized>(cfg: &GridConfig, rng: &mut R) -> Result<ChainStep> {
    cfg.ensure_stable()?;
    let drop_vertex = draw_vertex(cfg.side(), rng);
    let av = cfg.avalanche_from_drop(drop_vertex)?;
    Ok(ChainStep { drop_vertex, avalanche_size: av.size, resulting_config: av.config })
}

/// Runs `steps` transitions. With `checkpoint_every = Some(k)` the config
/// after every k-th step is kept as well.
pub fn run<R: Rng + ?Sized>(
    cfg: &GridConfig,
    steps: u64,
    rng: &mut R,
    checkpoint_every: Option<u64>,
) -> Result<RunOutput> {
    cfg.ensure_stable()?;
    let side = cfg.side();
    let mut current = cfg.clone();
    let mut counts = vec![0u64; side * side];
    let mut summaries = Vec::with_capacity(steps as usize);
    let mut checkpoints = Vec::new();
    for t in 0..steps {
        let drop = draw_vertex(side, rng);
        let heights = current.heights_mut();
        heights[drop.index(side)] += 1;
        counts.iter_mut().for_each(|c| *c = 0);
        relax_in_place(heights, side, &mut counts, None);
        summaries.push(StepSummary { t, drop, size: counts.iter().sum() });
        if let Some(k) = checkpoint_every {
            if k > 0 && (t + 1) % k == 0 {
                checkpoints.push((t + 1, current.clone()));
            }
        }
    }
    Ok(RunOutput { final_config: current, steps: summaries, checkpoints })
}

/// Number of drop vertices producing each avalanche size; divide by `L^2`
/// for the exact distribution of the next avalanche size.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SizeProfile {
    pub counts_by_size: BTreeMap<u64, usize>,
}

impl SizeProfile {
    pub fn total(&self) -> usize {
        self.counts_by_size.values().sum()
    }
}

pub fn size_profile(cfg: &GridConfig) -> Result<SizeProfile> {
    cfg.ensure_stable()?;
    let sizes: Vec<u64> = cfg
        .vertices()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|v| cfg.avalanche_from_drop(v).map(|a| a.size))
        .collect::<Result<_>>()?;
    let mut counts_by_size = BTreeMap::new();
    for s in sizes {
        *counts_by_size.entry(s).or_insert(0) += 1;
    }
    Ok(SizeProfile { counts_by_size })
}

#[derive(Serialize)]
struct Header<'a, M: Serialize> {
    rng: &'a str,
    seed: u64,
    manifest: &'a M,
}

/// Writes a JSON-lines trajectory: a header record echoing the RNG and seed
/// (plus caller metadata), then one `{"t","drop","size"}` object per step.
pub fn write_trajectory<W: Write, M: Serialize>(
    mut out: W,
    seed: u64,
    manifest: &M,
    steps: &[StepSummary],
) -> io::Result<()> {
    serde_json::to_writer(&mut out, &Header { rng: RNG_NAME, seed, manifest })?;
    out.write_all(b"\n")?;
    for s in steps {
        serde_json::to_writer(&mut out, s)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
