//! Square generators: ring geometry and closed-form expectations.
//!
//! Rings are counted from the inside out. For an `N x N` square, `R_1` is
//! the centre vertex (odd `N`) or the central 2x2 block (even `N`), and
//! `R_ceil(N/2)` is the outer perimeter. The union `R_1 ∪ .. ∪ R_k` is itself
//! a square (the k-th concentric sub-square), whose four corners are the
//! "sub-square corners" of ring `k`.

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Result, SandpileError};
use crate::lattice::{GridConfig, Vertex};
use crate::rational::{self, Rational};

/// An `n x n` square whose top-left vertex is `anchor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct SquareSpec {
    pub n: usize,
    pub anchor: Vertex,
}

impl SquareSpec {
    pub fn new(n: usize, anchor: Vertex) -> Result<Self> {
        if n == 0 {
            return Err(SandpileError::InvalidSquare("side must be at least 1".into()));
        }
        if anchor.row == 0 || anchor.col == 0 {
            return Err(SandpileError::InvalidSquare(format!("anchor {anchor} is not 1-based")));
        }
        Ok(SquareSpec { n, anchor })
    }

    /// Square with a one-vertex margin of background on every side; returns
    /// it with the lattice side `n + 2`.
    pub fn with_margin(n: usize) -> Result<(Self, usize)> {
        Ok((SquareSpec::new(n, Vertex::new(2, 2))?, n + 2))
    }

    pub fn fits(&self, side: usize) -> bool {
        self.anchor.row + self.n - 1 <= side && self.anchor.col + self.n - 1 <= side
    }

    pub fn contains(&self, v: Vertex) -> bool {
        (self.anchor.row..self.anchor.row + self.n).contains(&v.row)
            && (self.anchor.col..self.anchor.col + self.n).contains(&v.col)
    }

    pub fn vertices(&self) -> Vec<Vertex> {
        let (r0, c0) = (self.anchor.row, self.anchor.col);
        (r0..r0 + self.n).flat_map(|r| (c0..c0 + self.n).map(move |c| Vertex::new(r, c))).collect()
    }

    /// Distance from `v` to the nearest square edge (0 on the perimeter).
    fn depth_of(&self, v: Vertex) -> usize {
        let i = v.row - self.anchor.row;
        let j = v.col - self.anchor.col;
        let n = self.n;
        i.min(j).min(n - 1 - i).min(n - 1 - j)
    }

    /// Ring index of `v` (1 = innermost). `v` must lie in the square.
    pub fn ring_of(&self, v: Vertex) -> usize {
        assert!(self.contains(v), "vertex {v} outside square");
        self.n.div_ceil(2) - self.depth_of(v)
    }

    pub fn classify(&self, v: Vertex) -> VertexClass {
        let k = self.ring_of(v);
        if k == 1 {
            return VertexClass::Center;
        }
        let d = self.depth_of(v);
        let i = v.row - self.anchor.row;
        let j = v.col - self.anchor.col;
        let edge = |x: usize| x == d || x == self.n - 1 - d;
        if edge(i) && edge(j) {
            VertexClass::Corner(k)
        } else {
            VertexClass::Ring(k)
        }
    }
}

/// Position of a vertex inside a square generator, as far as the removal
/// formulas are concerned.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VertexClass {
    /// In `R_1`.
    Center,
    /// In `R_k`, `k >= 2`, but not a corner of the k-th sub-square.
    Ring(usize),
    /// A corner of the k-th sub-square, `k >= 2`.
    Corner(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingPartition {
    /// `rings[0]` is `R_1`.
    pub rings: Vec<Vec<Vertex>>,
    pub inner_boundary: Vec<Vertex>,
    pub corners: Vec<Vertex>,
    pub interior: Vec<Vertex>,
    pub outer_boundary: Vec<Vertex>,
    spec: SquareSpec,
}

impl RingPartition {
    /// `R_k`, 1-based.
    pub fn ring(&self, k: usize) -> &[Vertex] {
        &self.rings[k - 1]
    }

    /// Corners of the sub-square `R_1 ∪ .. ∪ R_k`, for `k >= 2`.
    pub fn sub_square_corners(&self, k: usize) -> Vec<Vertex> {
        self.ring(k).iter().copied().filter(|&v| self.spec.classify(v) == VertexClass::Corner(k)).collect()
    }
}

/// Rings and boundary regions of `spec` inside an `side x side` lattice.
///
/// Corners, inner boundary and interior are empty for `n <= 2`.
pub fn ring_partition(spec: &SquareSpec, side: usize) -> Result<RingPartition> {
    if !spec.fits(side) {
        return Err(SandpileError::InvalidSquare(format!(
            "{0}x{0} square at {1} does not fit in L = {side}",
            spec.n, spec.anchor
        )));
    }
    let mut rings = vec![Vec::new(); spec.n.div_ceil(2)];
    let (mut inner_boundary, mut corners, mut interior) = (Vec::new(), Vec::new(), Vec::new());
    for v in spec.vertices() {
        rings[spec.ring_of(v) - 1].push(v);
        if spec.n >= 3 {
            match (spec.depth_of(v), spec.classify(v)) {
                (0, VertexClass::Corner(_)) => corners.push(v),
                (0, _) => inner_boundary.push(v),
                _ => interior.push(v),
            }
        }
    }
    let mut outer_boundary = Vec::new();
    for r in spec.anchor.row.saturating_sub(1).max(1)..=(spec.anchor.row + spec.n).min(side) {
        for c in spec.anchor.col.saturating_sub(1).max(1)..=(spec.anchor.col + spec.n).min(side) {
            let v = Vertex::new(r, c);
            if spec.contains(v) {
                continue;
            }
            let touches = [(0i64, 1i64), (0, -1), (1, 0), (-1, 0)].iter().any(|&(dr, dc)| {
                let rr = r as i64 + dr;
                let cc = c as i64 + dc;
                rr >= 1 && cc >= 1 && spec.contains(Vertex::new(rr as usize, cc as usize))
            });
            if touches {
                outer_boundary.push(v);
            }
        }
    }
    Ok(RingPartition { rings, inner_boundary, corners, interior, outer_boundary, spec: *spec })
}

/// Critical square on a background of `background` grains (0, 1 or 2).
pub fn build_embedded_square(side: usize, spec: &SquareSpec, background: i64) -> Result<GridConfig> {
    if !(0..=2).contains(&background) {
        return Err(SandpileError::InvalidArgument(format!("background {background} not in 0..=2")));
    }
    if !spec.fits(side) {
        return Err(SandpileError::InvalidSquare(format!(
            "{0}x{0} square at {1} does not fit in L = {side}",
            spec.n, spec.anchor
        )));
    }
    let mut heights = vec![background; side * side];
    for v in spec.vertices() {
        heights[v.index(side)] = 3;
    }
    GridConfig::new(side, heights)
}

fn frac(num: i128, den: i128) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

fn need(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(SandpileError::InvalidArgument(what.to_string()))
    }
}

/// `(3N^4 + 15N^3 + 20N^2 - 8) / (30N)`.
pub fn square_expected_size(n: usize) -> Result<Rational> {
    need(n >= 1, "N must be at least 1")?;
    let n = n as i128;
    Ok(frac(3 * n.pow(4) + 15 * n.pow(3) + 20 * n * n - 8, 30 * n))
}

pub fn square_depth(n: usize) -> Result<u32> {
    need(n >= 1, "N must be at least 1")?;
    Ok(n.div_ceil(2) as u32)
}

/// Post-removal expectation for a target in `R_1`.
pub fn removal_center(n: usize) -> Result<Rational> {
    need(n >= 2, "N must be at least 2")?;
    let n = n as i128;
    Ok(if n % 2 == 1 {
        frac((n * n - 1) * (n * n + 5 * n + 6), 10 * n)
    } else {
        frac(n.pow(5) + 5 * n.pow(4) + 5 * n.pow(3) - 5 * n * n - 6 * n - 30, 10 * n * n)
    })
}

fn removal_base(n: i128) -> i128 {
    3 * n.pow(5) + 15 * n.pow(4) + 15 * n.pow(3) - 15 * n * n - 18 * n
}

fn check_ring_index(n: usize, k: usize) -> Result<()> {
    need(n >= 3, "N must be at least 3")?;
    need((2..=n.div_ceil(2)).contains(&k), "k must lie in 2..=ceil(N/2)")
}

/// Post-removal expectation for a ring-k target that is not a sub-square corner.
pub fn removal_ring(n: usize, k: usize) -> Result<Rational> {
    check_ring_index(n, k)?;
    let (n, k) = (n as i128, k as i128);
    let tail =
        if n % 2 == 1 { 10 * (4 * k.pow(3) - 24 * k * k + 23 * k - 6) } else { 20 * k * (2 * k * k - 9 * k + 1) };
    Ok(frac(removal_base(n) + tail, 30 * n * n))
}

/// Post-removal expectation for a corner of the k-th sub-square.
pub fn removal_corner(n: usize, k: usize) -> Result<Rational> {
    check_ring_index(n, k)?;
    let (n, k) = (n as i128, k as i128);
    let tail = if n % 2 == 1 {
        10 * (4 * k.pow(3) - 24 * k * k + 23 * k - 3)
    } else {
        10 * (4 * k.pow(3) - 18 * k * k + 2 * k + 3)
    };
    Ok(frac(removal_base(n) + tail, 30 * n * n))
}

/// Closed-form post-removal expectation for any vertex class.
pub fn removal_closed_form(n: usize, class: VertexClass) -> Result<Rational> {
    match class {
        VertexClass::Center => removal_center(n),
        VertexClass::Ring(k) => removal_ring(n, k),
        VertexClass::Corner(k) => removal_corner(n, k),
    }
}

/// Converts an expectation over the whole square into one conditioned on
/// the drop missing the emptied vertex: multiplies by `N^2 / (N^2 - 1)`.
pub fn given_remainder(over_square: &Rational, n: usize) -> Result<Rational> {
    need(n >= 2, "N must be at least 2")?;
    let sq = (n * n) as i128;
    Ok(over_square * frac(sq, sq - 1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CornerstoneRegion {
    /// `R_1`.
    InnermostRing,
    /// `R_2` minus the square's corners.
    SecondRingMinusCorners,
    /// `R_3` minus the corners of the third sub-square.
    ThirdRingMinusSubSquareCorners,
}

impl CornerstoneRegion {
    pub fn vertices(&self, spec: &SquareSpec) -> Vec<Vertex> {
        let want = match self {
            CornerstoneRegion::InnermostRing => VertexClass::Center,
            CornerstoneRegion::SecondRingMinusCorners => VertexClass::Ring(2),
            CornerstoneRegion::ThirdRingMinusSubSquareCorners => VertexClass::Ring(3),
        };
        spec.vertices().into_iter().filter(|&v| spec.classify(v) == want).collect()
    }
}

pub fn cornerstone_prediction(n: usize) -> Result<CornerstoneRegion> {
    need(n >= 1, "N must be at least 1")?;
    Ok(match n {
        1 | 2 => CornerstoneRegion::InnermostRing,
        3 | 4 => CornerstoneRegion::SecondRingMinusCorners,
        _ => CornerstoneRegion::ThirdRingMinusSubSquareCorners,
    })
}

pub fn square_stability_level(n: usize) -> Result<Rational> {
    need(n >= 1, "N must be at least 1")?;
    Ok(match n {
        1 => rational::int(0),
        2 => rational::ratio(9, 16),
        3 => rational::ratio(32, 41),
        4 => rational::ratio(15, 17),
        _ => {
            let m = n as i128;
            let shift = if m % 2 == 1 { 450 } else { 480 };
            frac(removal_base(m) - shift, m * (3 * m.pow(4) + 15 * m.pow(3) + 20 * m * m - 8))
        }
    })
}
