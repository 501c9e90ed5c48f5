//! The wired lattice and sandpile configurations on it.
//!
//! Vertices are addressed with 1-based `(row, col)` pairs in the public API
//! and stored row-major with 0-based indices internally: vertex `(r, c)` of an
//! `L x L` box lives at index `(r - 1) * L + (c - 1)`. The sink is never
//! stored; grains pushed across the box edge simply disappear.

use std::collections::VecDeque;
use std::fmt;

use arrayvec::ArrayVec;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SandpileError};

/// Number of grains a vertex sends out when it topples (its full degree on the wired lattice).
pub const DEGREE: i64 = 4;

/// Largest stable height.
pub const CRITICAL: i64 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "[usize; 2]", try_from = "[usize; 2]")]
pub struct Vertex {
    pub row: usize,
    pub col: usize,
}

impl Vertex {
    pub const fn new(row: usize, col: usize) -> Self {
        Vertex { row, col }
    }

    pub fn in_box(&self, side: usize) -> bool {
        (1..=side).contains(&self.row) && (1..=side).contains(&self.col)
    }

    pub(crate) fn check(&self, side: usize) -> Result<()> {
        if self.in_box(side) {
            Ok(())
        } else {
            Err(SandpileError::OutOfBox { row: self.row, col: self.col, side })
        }
    }

    pub(crate) fn index(&self, side: usize) -> usize {
        (self.row - 1) * side + (self.col - 1)
    }

    pub(crate) fn from_index(index: usize, side: usize) -> Self {
        Vertex { row: index / side + 1, col: index % side + 1 }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

impl From<Vertex> for [usize; 2] {
    fn from(v: Vertex) -> Self {
        [v.row, v.col]
    }
}

impl TryFrom<[usize; 2]> for Vertex {
    type Error = SandpileError;

    fn try_from([row, col]: [usize; 2]) -> Result<Self> {
        if row == 0 || col == 0 {
            return Err(SandpileError::Parse(format!("vertex [{row}, {col}] is not 1-based")));
        }
        Ok(Vertex { row, col })
    }
}

/// In-box orthogonal neighbours of `index`, in the order up, down, left, right.
pub(crate) fn neighbor_indices(index: usize, side: usize) -> ArrayVec<usize, 4> {
    let (r, c) = (index / side, index % side);
    let mut out = ArrayVec::new();
    if r > 0 {
        out.push(index - side);
    }
    if r + 1 < side {
        out.push(index + side);
    }
    if c > 0 {
        out.push(index - 1);
    }
    if c + 1 < side {
        out.push(index + 1);
    }
    out
}

/// The 2 to 4 in-box neighbours of `v` (up, down, left, right). The
/// remaining `4 - len` edges lead to the sink.
pub fn neighbors(v: Vertex, side: usize) -> Result<Vec<Vertex>> {
    v.check(side)?;
    Ok(neighbor_indices(v.index(side), side).into_iter().map(|i| Vertex::from_index(i, side)).collect())
}

/// Integer height field on the `L x L` wired lattice.
///
/// Heights are unconstrained: stability is a predicate ([`GridConfig::is_stable`]),
/// and intermediate configurations may hold negative values or more than
/// three grains.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridConfig {
    side: usize,
    heights: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct GridRepr {
    #[serde(rename = "L")]
    side: usize,
    heights: Vec<i64>,
}

impl TryFrom<GridRepr> for GridConfig {
    type Error = SandpileError;

    fn try_from(repr: GridRepr) -> Result<Self> {
        GridConfig::new(repr.side, repr.heights)
    }
}

impl From<GridConfig> for GridRepr {
    fn from(cfg: GridConfig) -> Self {
        GridRepr { side: cfg.side, heights: cfg.heights }
    }
}

impl GridConfig {
    pub fn new(side: usize, heights: Vec<i64>) -> Result<Self> {
        if side == 0 {
            return Err(SandpileError::InvalidConfig("side length must be positive".into()));
        }
        if heights.len() != side * side {
            return Err(SandpileError::InvalidConfig(format!(
                "expected {} heights for L = {side}, got {}",
                side * side,
                heights.len()
            )));
        }
        Ok(GridConfig { side, heights })
    }

    pub fn zeros(side: usize) -> Self {
        Self::filled(side, 0)
    }

    pub fn filled(side: usize, height: i64) -> Self {
        assert!(side > 0, "side length must be positive");
        GridConfig { side, heights: vec![height; side * side] }
    }

    /// Builds a configuration from a square table of rows.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let side = rows.len();
        if rows.iter().any(|r| r.len() != side) {
            return Err(SandpileError::InvalidConfig("rows do not form a square".into()));
        }
        GridConfig::new(side, rows.concat())
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn heights(&self) -> &[i64] {
        &self.heights
    }

    pub(crate) fn heights_mut(&mut self) -> &mut [i64] {
        &mut self.heights
    }

    pub fn index_of(&self, v: Vertex) -> Result<usize> {
        v.check(self.side)?;
        Ok(v.index(self.side))
    }

    /// Height at `v`.
    ///
    /// Panics if `v` is outside the box.
    pub fn height(&self, v: Vertex) -> i64 {
        assert!(v.in_box(self.side), "vertex {v} outside {0}x{0} box", self.side);
        self.heights[v.index(self.side)]
    }

    /// Returns a copy with the height at `v` replaced.
    pub fn with_height(&self, v: Vertex, height: i64) -> Result<Self> {
        let i = self.index_of(v)?;
        let mut out = self.clone();
        out.heights[i] = height;
        Ok(out)
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        (0..self.heights.len()).map(move |i| Vertex::from_index(i, self.side))
    }

    pub fn mass(&self) -> i64 {
        self.heights.iter().sum()
    }

    pub fn is_stable(&self) -> bool {
        self.heights.iter().all(|&h| (0..=CRITICAL).contains(&h))
    }

    pub(crate) fn ensure_stable(&self) -> Result<()> {
        if self.is_stable() {
            Ok(())
        } else {
            Err(SandpileError::Unstable)
        }
    }

    /// No vertex holds more than three grains (negative heights allowed).
    pub(crate) fn ensure_not_overloaded(&self) -> Result<()> {
        if self.heights.iter().all(|&h| h <= CRITICAL) {
            Ok(())
        } else {
            Err(SandpileError::Overloaded)
        }
    }

    pub fn critical_vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.heights
            .iter()
            .enumerate()
            .filter(|(_, &h)| h == CRITICAL)
            .map(move |(i, _)| Vertex::from_index(i, self.side))
    }

    /// Addition operator: one extra grain at `v`.
    pub fn add_grain(&self, v: Vertex) -> Result<Self> {
        let i = self.index_of(v)?;
        let mut out = self.clone();
        out.heights[i] += 1;
        Ok(out)
    }

    /// Removal operator: empties `v`.
    pub fn remove_grains(&self, v: Vertex) -> Result<Self> {
        self.with_height(v, 0)
    }

    /// Topples `v` once whether or not the toppling is legal, i.e. subtracts
    /// the row of the toppling matrix belonging to `v`.
    pub fn topple(&self, v: Vertex) -> Result<Self> {
        let i = self.index_of(v)?;
        let mut out = self.clone();
        topple_at(&mut out.heights, self.side, i, 1);
        Ok(out)
    }

    pub fn is_legal_topple(&self, v: Vertex) -> Result<bool> {
        let i = self.index_of(v)?;
        Ok(self.heights[i] > CRITICAL)
    }

    /// Stabilizes the configuration by legal topplings.
    pub fn relax(&self) -> (GridConfig, ToppleCounts) {
        let mut out = self.clone();
        let mut counts = vec![0u64; self.heights.len()];
        relax_in_place(&mut out.heights, self.side, &mut counts, None);
        (out, ToppleCounts { side: self.side, counts })
    }

    /// Stabilizes the configuration by repeatedly toppling a uniformly chosen
    /// unstable vertex once. Slow; exists so the order independence of
    /// [`GridConfig::relax`] can be checked against arbitrary legal orders.
    pub fn relax_random_order<R: Rng + ?Sized>(&self, rng: &mut R) -> (GridConfig, ToppleCounts) {
        let side = self.side;
        let mut heights = self.heights.clone();
        let mut counts = vec![0u64; heights.len()];
        let mut unstable: Vec<usize> = Vec::new();
        let mut slot: Vec<Option<usize>> = vec![None; heights.len()];
        for (i, &h) in heights.iter().enumerate() {
            if h > CRITICAL {
                slot[i] = Some(unstable.len());
                unstable.push(i);
            }
        }
        while !unstable.is_empty() {
            let i = unstable[rng.gen_range(0..unstable.len())];
            topple_at(&mut heights, side, i, 1);
            counts[i] += 1;
            if heights[i] <= CRITICAL {
                let pos = slot[i].take().expect("tracked vertex");
                unstable.swap_remove(pos);
                if let Some(&moved) = unstable.get(pos) {
                    slot[moved] = Some(pos);
                }
            }
            for j in neighbor_indices(i, side) {
                if heights[j] > CRITICAL && slot[j].is_none() {
                    slot[j] = Some(unstable.len());
                    unstable.push(j);
                }
            }
        }
        (GridConfig { side, heights }, ToppleCounts { side, counts })
    }

    /// Drops a grain at `v` on a stable configuration and relaxes.
    pub fn avalanche_from_drop(&self, v: Vertex) -> Result<Avalanche> {
        self.ensure_stable()?;
        let (config, counts) = self.add_grain(v)?.relax();
        let size = counts.total();
        Ok(Avalanche { config, counts, size })
    }

    /// Plain-text grid: `L` lines of `L` space-separated integers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for row in self.heights.chunks(self.side) {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(|line| {
                line.split_whitespace()
                    .map(|tok| tok.parse::<i64>().map_err(|e| SandpileError::Parse(format!("bad height {tok:?}: {e}"))))
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if rows.is_empty() {
            return Err(SandpileError::Parse("empty grid".into()));
        }
        GridConfig::from_rows(&rows)
    }

    /// Compact JSON form `{"L":..,"heights":[..]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("grid serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| SandpileError::Parse(e.to_string()))
    }
}

/// Per-vertex toppling counts of one relaxation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToppleCounts {
    side: usize,
    counts: Vec<u64>,
}

impl ToppleCounts {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, v: Vertex) -> u64 {
        self.counts[v.index(self.side)]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Grains lost to the sink: each toppling of `v` sends `4 - deg(v)` grains there.
    pub fn sink_loss(&self) -> i64 {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, &n)| n as i64 * (DEGREE - neighbor_indices(i, self.side).len() as i64))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Avalanche {
    pub config: GridConfig,
    pub counts: ToppleCounts,
    pub size: u64,
}

#[inline]
pub(crate) fn topple_at(heights: &mut [i64], side: usize, index: usize, times: i64) {
    heights[index] -= DEGREE * times;
    for j in neighbor_indices(index, side) {
        heights[j] += times;
    }
}

/// Worklist relaxation. A vertex listed in `frozen` is never toppled, even
/// when unstable.
pub(crate) fn relax_in_place(heights: &mut [i64], side: usize, counts: &mut [u64], frozen: Option<usize>) {
    let mut queued = vec![false; heights.len()];
    let mut queue = VecDeque::new();
    for (i, &h) in heights.iter().enumerate() {
        if h > CRITICAL && Some(i) != frozen {
            queued[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        queued[i] = false;
        let times = heights[i] / DEGREE;
        if heights[i] <= CRITICAL {
            continue;
        }
        topple_at(heights, side, i, times);
        counts[i] += times as u64;
        for j in neighbor_indices(i, side) {
            if heights[j] > CRITICAL && !queued[j] && Some(j) != frozen {
                queued[j] = true;
                queue.push_back(j);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v(r: usize, c: usize) -> Vertex {
        Vertex::new(r, c)
    }

    #[test]
    fn neighbour_counts() {
        assert_eq!(neighbors(v(3, 3), 5).unwrap().len(), 4);
        assert_eq!(neighbors(v(1, 1), 5).unwrap(), vec![v(2, 1), v(1, 2)]);
        assert_eq!(neighbors(v(1, 3), 5).unwrap().len(), 3);
        assert_eq!(neighbors(v(3, 3), 5).unwrap(), vec![v(2, 3), v(4, 3), v(3, 2), v(3, 4)]);
        assert!(matches!(neighbors(v(6, 1), 5), Err(SandpileError::OutOfBox { .. })));
        assert!(neighbors(v(0, 1), 5).is_err());
    }

    #[test]
    fn mass_examples() {
        assert_eq!(GridConfig::zeros(4).mass(), 0);
        assert_eq!(GridConfig::filled(2, 3).mass(), 12);
        let cfg = GridConfig::zeros(5).with_height(v(3, 3), 4).unwrap();
        assert_eq!(cfg.topple(v(3, 3)).unwrap().mass(), cfg.mass());
    }

    #[test]
    fn add_and_remove() {
        let cfg = GridConfig::zeros(3);
        let a = cfg.add_grain(v(2, 2)).unwrap();
        assert_eq!(a.height(v(2, 2)), 1);
        let full = GridConfig::filled(3, 3).add_grain(v(1, 1)).unwrap();
        assert_eq!(full.height(v(1, 1)), 4);
        assert!(!full.is_stable());
        assert_eq!(full.remove_grains(v(1, 1)).unwrap().height(v(1, 1)), 0);

        let three = GridConfig::filled(3, 3);
        let emptied = three.remove_grains(v(2, 2)).unwrap();
        assert_eq!(emptied.height(v(2, 2)), 0);
        assert_eq!(emptied.remove_grains(v(2, 2)).unwrap(), emptied);
        assert_eq!(three.mass() - emptied.mass(), 3);
        assert!(cfg.add_grain(v(4, 1)).is_err());
        assert!(cfg.remove_grains(v(1, 4)).is_err());
    }

    #[test]
    fn topple_examples() {
        let cfg = GridConfig::zeros(5).with_height(v(3, 3), 4).unwrap();
        let t = cfg.topple(v(3, 3)).unwrap();
        assert_eq!(t.height(v(3, 3)), 0);
        for n in neighbors(v(3, 3), 5).unwrap() {
            assert_eq!(t.height(n), 1);
        }
        assert_eq!(t.mass(), 4);

        let corner = GridConfig::zeros(5).with_height(v(1, 1), 4).unwrap();
        let t = corner.topple(v(1, 1)).unwrap();
        assert_eq!(t.height(v(1, 1)), 0);
        assert_eq!(t.height(v(1, 2)), 1);
        assert_eq!(t.height(v(2, 1)), 1);
        assert_eq!(t.mass(), 2);

        let twice = GridConfig::zeros(4).topple(v(2, 2)).unwrap().topple(v(2, 2)).unwrap();
        assert_eq!(twice.height(v(2, 2)), -8);
        assert_eq!(twice.height(v(1, 2)), 2);
    }

    #[test]
    fn legal_topples() {
        let cfg = GridConfig::new(1, vec![4]).unwrap();
        assert!(cfg.is_legal_topple(v(1, 1)).unwrap());
        assert!(!GridConfig::new(1, vec![3]).unwrap().is_legal_topple(v(1, 1)).unwrap());
        assert!(GridConfig::new(1, vec![7]).unwrap().is_legal_topple(v(1, 1)).unwrap());
    }

    #[test]
    fn relax_examples() {
        let stable = GridConfig::filled(3, 2);
        let (out, counts) = stable.relax();
        assert_eq!(out, stable);
        assert_eq!(counts.total(), 0);

        let one = GridConfig::zeros(5).with_height(v(3, 3), 4).unwrap();
        let (out, counts) = one.relax();
        assert!(out.is_stable());
        assert_eq!(counts.get(v(3, 3)), 1);
        assert_eq!(counts.total(), 1);
    }

    #[test]
    fn relax_orders_agree_on_tiny_full_box() {
        let cfg = GridConfig::filled(2, 3).add_grain(v(1, 1)).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(1);
        let mut b = ChaCha8Rng::seed_from_u64(2);
        let ra = cfg.relax_random_order(&mut a);
        let rb = cfg.relax_random_order(&mut b);
        assert_eq!(ra, rb);
        assert_eq!(ra, cfg.relax());
    }

    #[test]
    fn drop_examples() {
        let cfg = GridConfig::zeros(5);
        assert_eq!(cfg.avalanche_from_drop(v(2, 2)).unwrap().size, 0);

        let isolated = GridConfig::filled(5, 2).with_height(v(3, 3), 3).unwrap();
        let av = isolated.avalanche_from_drop(v(3, 3)).unwrap();
        assert_eq!(av.size, 1);
        assert!(av.config.is_stable());

        let unstable = GridConfig::zeros(3).with_height(v(1, 1), 5).unwrap();
        assert_eq!(unstable.avalanche_from_drop(v(2, 2)), Err(SandpileError::Unstable));
    }

    #[test]
    fn embedded_three_square_averages_82_over_9() {
        // Hand count: drop sizes over the 9 square vertices of a 3x3 block
        // in a zero background. Centre: 9 + 1 = 10 (second wave at centre),
        // the other 8: 9 each. Total 82.
        let mut cfg = GridConfig::zeros(7);
        for r in 3..=5 {
            for c in 3..=5 {
                cfg = cfg.with_height(v(r, c), 3).unwrap();
            }
        }
        let total: u64 =
            (3..=5).flat_map(|r| (3..=5).map(move |c| v(r, c))).map(|x| cfg.avalanche_from_drop(x).unwrap().size).sum();
        assert_eq!(total, 82);
        assert_eq!(cfg.avalanche_from_drop(v(4, 4)).unwrap().size, 10);
    }

    #[test]
    fn text_and_json_formats() {
        let cfg = GridConfig::from_rows(&[vec![0, 1], vec![-2, 3]]).unwrap();
        assert_eq!(cfg.to_text(), "0 1\n-2 3\n");
        assert_eq!(cfg.to_json(), r#"{"L":2,"heights":[0,1,-2,3]}"#);
        assert_eq!(GridConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(GridConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(GridConfig::from_json(r#"{"L":2,"heights":[1,2,3]}"#).is_err());
        assert!(GridConfig::from_text("1 2\n3\n").is_err());
        assert!(GridConfig::from_text("1 x\n3 4\n").is_err());
    }

    #[test]
    fn sink_loss_matches_mass_drop() {
        let cfg = GridConfig::filled(4, 3).add_grain(v(2, 2)).unwrap();
        let (out, counts) = cfg.relax();
        assert_eq!(cfg.mass() - out.mass(), counts.sink_loss());
    }
}
