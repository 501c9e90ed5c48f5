//! Generators, first waves and the wave decomposition of avalanches.
//!
//! A *generator* is a connected set of critical vertices. Dropping a grain
//! anywhere on a generator topples every vertex of it, plus whatever the
//! spreading front reaches, exactly once: the first wave. [`first_wave`]
//! builds that wave by bookkeeping in- and out-degrees of a directed
//! "who sent a grain to whom" graph, without ever adding the grain.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Serialize, Serializer};

use crate::error::{Result, SandpileError};
use crate::lattice::{neighbor_indices, relax_in_place, topple_at, GridConfig, Vertex, CRITICAL, DEGREE};

/// A nonempty connected set of critical vertices, kept in row-major order.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    vertices: Vec<Vertex>,
}

impl Generator {
    /// Checks that `vertices` is nonempty, connected, and critical in `cfg`.
    pub fn new(cfg: &GridConfig, vertices: impl IntoIterator<Item = Vertex>) -> Result<Self> {
        let mut vertices: Vec<Vertex> = vertices.into_iter().collect();
        vertices.sort_unstable();
        vertices.dedup();
        let g = Generator { vertices };
        g.validate(cfg)?;
        Ok(g)
    }

    pub(crate) fn from_indices(indices: &[usize], side: usize) -> Self {
        let mut vertices: Vec<Vertex> = indices.iter().map(|&i| Vertex::from_index(i, side)).collect();
        vertices.sort_unstable();
        Generator { vertices }
    }

    fn validate(&self, cfg: &GridConfig) -> Result<()> {
        if self.vertices.is_empty() {
            return Err(SandpileError::EmptySet);
        }
        for &v in &self.vertices {
            cfg.index_of(v)?;
            if cfg.height(v) != CRITICAL {
                return Err(SandpileError::NotCritical(v));
            }
        }
        if !is_connected(&self.indices(cfg.side()), cfg.side()) {
            return Err(SandpileError::NotConnected);
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.vertices.binary_search(&v).is_ok()
    }

    /// Smallest vertex in row-major order.
    pub fn anchor(&self) -> Vertex {
        self.vertices[0]
    }

    pub(crate) fn indices(&self, side: usize) -> Vec<usize> {
        self.vertices.iter().map(|v| v.index(side)).collect()
    }

    pub(crate) fn mask(&self, side: usize) -> Vec<bool> {
        let mut m = vec![false; side * side];
        for v in &self.vertices {
            m[v.index(side)] = true;
        }
        m
    }
}

impl Serialize for Generator {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.vertices.serialize(s)
    }
}

fn is_connected(indices: &[usize], side: usize) -> bool {
    let Some(&start) = indices.first() else {
        return true;
    };
    let mut member = vec![false; side * side];
    for &i in indices {
        member[i] = true;
    }
    let mut seen = vec![false; side * side];
    seen[start] = true;
    let mut stack = vec![start];
    let mut reached = 1;
    while let Some(i) = stack.pop() {
        for j in neighbor_indices(i, side) {
            if member[j] && !seen[j] {
                seen[j] = true;
                reached += 1;
                stack.push(j);
            }
        }
    }
    reached == indices.len()
}

/// Connected components of `{v : height(v) == 3}`, optionally restricted to
/// `within`. Components come out ordered by their smallest index, each sorted.
pub(crate) fn critical_components(heights: &[i64], side: usize, within: Option<&[bool]>) -> Vec<Vec<usize>> {
    let eligible = |i: usize| heights[i] == CRITICAL && within.is_none_or(|m| m[i]);
    let mut seen = vec![false; heights.len()];
    let mut out = Vec::new();
    for start in 0..heights.len() {
        if seen[start] || !eligible(start) {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(i) = stack.pop() {
            for j in neighbor_indices(i, side) {
                if !seen[j] && eligible(j) {
                    seen[j] = true;
                    comp.push(j);
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// All maximal generators of a stable configuration, ordered by their
/// row-major smallest vertex.
pub fn find_generators(cfg: &GridConfig) -> Result<Vec<Generator>> {
    cfg.ensure_stable()?;
    let side = cfg.side();
    Ok(critical_components(cfg.heights(), side, None).iter().map(|c| Generator::from_indices(c, side)).collect())
}

/// The maximal generator containing `v`, if `v` is critical.
pub fn generator_containing(cfg: &GridConfig, v: Vertex) -> Result<Generator> {
    cfg.ensure_stable()?;
    cfg.index_of(v)?;
    if cfg.height(v) != CRITICAL {
        return Err(SandpileError::NotCritical(v));
    }
    find_generators(cfg)?.into_iter().find(|g| g.contains(v)).ok_or(SandpileError::NotCritical(v))
}

/// The vertices toppled in one wave, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WaveTrace {
    toppled: Vec<Vertex>,
}

impl WaveTrace {
    fn from_indices(indices: impl IntoIterator<Item = usize>, side: usize) -> Self {
        let mut toppled: Vec<Vertex> = indices.into_iter().map(|i| Vertex::from_index(i, side)).collect();
        toppled.sort_unstable();
        WaveTrace { toppled }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.toppled
    }

    pub fn size(&self) -> usize {
        self.toppled.len()
    }

    pub fn contains(&self, v: Vertex) -> bool {
        self.toppled.binary_search(&v).is_ok()
    }
}

impl Serialize for WaveTrace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            size: usize,
            vertices: &'a [Vertex],
        }
        Repr { size: self.size(), vertices: &self.toppled }.serialize(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WaveOutcome {
    pub wave: WaveTrace,
    /// Heights after every wave vertex toppled once, with no grain added.
    pub post_config: GridConfig,
    /// Generator vertices left below 3 grains: a drop there ends after one wave.
    pub quiescent: Vec<Vertex>,
    /// Components of generator vertices back at 3 grains, each the seed of a further wave.
    pub active: Vec<Generator>,
}

enum Selection<'a, R: Rng + ?Sized> {
    Fifo,
    Random(&'a mut R),
}

/// First wave of a drop on `generator`, via in/out-degree bookkeeping.
///
/// `generator` need not be maximal: critical neighbours outside it are
/// absorbed by the spreading front. Heights may be negative but none may
/// exceed 3.
pub fn first_wave(cfg: &GridConfig, generator: &Generator) -> Result<WaveOutcome> {
    sweep::<rand::rngs::ThreadRng>(cfg, generator, Selection::Fifo)
}

/// [`first_wave`] picking each front vertex uniformly at random among the
/// eligible ones instead of first-in first-out.
pub fn first_wave_random_order<R: Rng + ?Sized>(
    cfg: &GridConfig,
    generator: &Generator,
    rng: &mut R,
) -> Result<WaveOutcome> {
    sweep(cfg, generator, Selection::Random(rng))
}

fn sweep<R: Rng + ?Sized>(
    cfg: &GridConfig,
    generator: &Generator,
    mut select: Selection<'_, R>,
) -> Result<WaveOutcome> {
    cfg.ensure_not_overloaded()?;
    generator.validate(cfg)?;
    let side = cfg.side();
    let heights = cfg.heights();
    let n = heights.len();
    let in_gen = generator.mask(side);

    let mut indeg = vec![0i64; n];
    let mut fired = vec![false; n];
    let mut queued = vec![false; n];
    let mut front = VecDeque::new();

    let ready = |i: usize, indeg: &[i64], fired: &[bool]| !fired[i] && heights[i] + indeg[i] >= DEGREE;

    for &i in &generator.indices(side) {
        fired[i] = true;
        for j in neighbor_indices(i, side) {
            indeg[j] += 1;
        }
    }
    for i in 0..n {
        if !in_gen[i] && ready(i, &indeg, &fired) {
            queued[i] = true;
            front.push_back(i);
        }
    }
    while !front.is_empty() {
        let i = match &mut select {
            Selection::Fifo => front.pop_front(),
            Selection::Random(rng) => {
                let k = rng.gen_range(0..front.len());
                front.swap_remove_back(k)
            }
        }
        .expect("front is nonempty");
        debug_assert!(ready(i, &indeg, &fired));
        fired[i] = true;
        for j in neighbor_indices(i, side) {
            indeg[j] += 1;
            if !queued[j] && !in_gen[j] && ready(j, &indeg, &fired) {
                queued[j] = true;
                front.push_back(j);
            }
        }
    }

    let post: Vec<i64> = (0..n).map(|i| heights[i] + indeg[i] - if fired[i] { DEGREE } else { 0 }).collect();
    let wave = WaveTrace::from_indices((0..n).filter(|&i| fired[i]), side);
    let quiescent = generator.vertices().iter().copied().filter(|v| post[v.index(side)] < CRITICAL).collect();
    let active =
        critical_components(&post, side, Some(&in_gen)).iter().map(|c| Generator::from_indices(c, side)).collect();
    let post_config = GridConfig::new(side, post).expect("same shape");
    Ok(WaveOutcome { wave, post_config, quiescent, active })
}

/// Wave-by-wave relaxation of a drop at `v`: topple `v`, relax everything
/// else with `v` held fixed, and repeat while `v` is unstable.
///
/// A drop on a noncritical vertex yields no waves.
pub fn decompose_avalanche(cfg: &GridConfig, v: Vertex) -> Result<Vec<WaveTrace>> {
    cfg.ensure_stable()?;
    let origin = cfg.index_of(v)?;
    if cfg.height(v) < CRITICAL {
        return Ok(Vec::new());
    }
    let side = cfg.side();
    let mut heights = cfg.heights().to_vec();
    heights[origin] += 1;
    let mut counts = vec![0u64; heights.len()];
    let mut waves = Vec::new();
    while heights[origin] > CRITICAL {
        counts.iter_mut().for_each(|c| *c = 0);
        topple_at(&mut heights, side, origin, 1);
        counts[origin] = 1;
        relax_in_place(&mut heights, side, &mut counts, Some(origin));
        debug_assert!(counts.iter().all(|&c| c <= 1), "a vertex toppled twice within one wave");
        waves.push(WaveTrace::from_indices((0..counts.len()).filter(|&i| counts[i] > 0), side));
    }
    Ok(waves)
}
