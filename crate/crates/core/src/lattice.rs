//! Square lattice domains, their boundaries, and the two edge predicates
//! (crossing ray and marked edge) that drive every signed quantity.
//!
//! The domain for parameter `n` has interior
//! `{(x, y) : -n+1 <= x <= n, -n+1 <= y <= n-1}`, i.e. the lattice points
//! strictly inside the open rectangle `(-n, n+1) x (-n, n)`. The left
//! boundary sits at `x = -n` and the right boundary at `x = n+1`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};

/// Largest supported half-width.
pub const MAX_N: u32 = 4096;

/// A point of Z².
///
/// Points are ordered in raster order (`y` first, then `x`), which is the
/// elimination order used throughout the solver.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePoint {
    pub x: i32,
    pub y: i32,
}

impl LatticePoint {
    pub const ORIGIN: LatticePoint = LatticePoint { x: 0, y: 0 };
    pub const ONE: LatticePoint = LatticePoint { x: 1, y: 0 };

    pub const fn new(x: i32, y: i32) -> Self {
        LatticePoint { x, y }
    }

    /// The four nearest neighbours in the fixed order east, north, west, south.
    pub fn neighbors(self) -> [LatticePoint; 4] {
        [
            LatticePoint::new(self.x + 1, self.y),
            LatticePoint::new(self.x, self.y + 1),
            LatticePoint::new(self.x - 1, self.y),
            LatticePoint::new(self.x, self.y - 1),
        ]
    }

    pub fn is_adjacent(self, other: LatticePoint) -> bool {
        (self.x - other.x).abs() + (self.y - other.y).abs() == 1
    }

    pub fn manhattan(self, other: LatticePoint) -> u32 {
        (self.x - other.x).unsigned_abs() + (self.y - other.y).unsigned_abs()
    }

    /// Reflection about the vertical line `x = 1/2`, exchanging 0 and 1.
    pub fn mirror(self) -> LatticePoint {
        LatticePoint::new(1 - self.x, self.y)
    }

    /// Reflection about the real axis.
    pub fn conjugate(self) -> LatticePoint {
        LatticePoint::new(self.x, -self.y)
    }
}

impl Ord for LatticePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.y, self.x).cmp(&(other.y, other.x))
    }
}

impl PartialOrd for LatticePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// A nearest-neighbour step.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct DirectedEdge {
    pub from: LatticePoint,
    pub to: LatticePoint,
}

impl DirectedEdge {
    pub fn new(from: LatticePoint, to: LatticePoint) -> Result<Self> {
        if !from.is_adjacent(to) {
            return Err(LerwError::precondition(format!(
                "{from} -> {to} is not a nearest-neighbour step"
            )));
        }
        Ok(DirectedEdge { from, to })
    }

    pub fn reversed(self) -> Self {
        DirectedEdge {
            from: self.to,
            to: self.from,
        }
    }
}

/// 1 when the step crosses the ray `{x = 1/2, y <= -1}`, i.e. joins
/// `(0,-k)` and `(1,-k)` for some `k >= 1` in either direction.
#[inline]
pub fn crossing_parity_increment(e: DirectedEdge) -> u32 {
    crosses_ray(e.from, e.to) as u32
}

#[inline]
pub(crate) fn crosses_ray(a: LatticePoint, b: LatticePoint) -> bool {
    a.y == b.y && a.y <= -1 && a.x.min(b.x) == 0 && a.x.max(b.x) == 1
}

/// +1 for the step `0 -> 1`, -1 for `1 -> 0`, 0 otherwise.
#[inline]
pub fn marked_edge_increment(e: DirectedEdge) -> i32 {
    match (e.from, e.to) {
        (LatticePoint::ORIGIN, LatticePoint::ONE) => 1,
        (LatticePoint::ONE, LatticePoint::ORIGIN) => -1,
        _ => 0,
    }
}

/// `true` if `{a, b}` is the unordered marked edge `{0, 1}`.
#[inline]
pub fn is_marked_edge(a: LatticePoint, b: LatticePoint) -> bool {
    (a == LatticePoint::ORIGIN && b == LatticePoint::ONE)
        || (a == LatticePoint::ONE && b == LatticePoint::ORIGIN)
}

/// Which part of the domain a lattice point belongs to.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Site {
    Interior,
    Boundary,
    Exterior,
}

/// The square domain `A_n` together with its outer boundary.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeDomain {
    n: u32,
    interior: Vec<LatticePoint>,
    boundary: Vec<LatticePoint>,
    left_boundary: Vec<LatticePoint>,
    right_boundary: Vec<LatticePoint>,
}

impl LatticeDomain {
    pub fn new(n: u32) -> Result<Self> {
        build_domain(n)
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Interior points in raster order.
    pub fn interior(&self) -> &[LatticePoint] {
        &self.interior
    }

    /// Boundary points in raster order.
    pub fn boundary(&self) -> &[LatticePoint] {
        &self.boundary
    }

    /// Boundary points with `x = -n`, ascending in `y`.
    pub fn left_boundary(&self) -> &[LatticePoint] {
        &self.left_boundary
    }

    /// Boundary points with `x = n+1`, ascending in `y`.
    pub fn right_boundary(&self) -> &[LatticePoint] {
        &self.right_boundary
    }

    /// Number of interior columns (`2n`).
    pub fn width(&self) -> usize {
        2 * self.n as usize
    }

    /// Number of interior rows (`2n - 1`).
    pub fn height(&self) -> usize {
        2 * self.n as usize - 1
    }

    pub fn x_range(&self) -> (i32, i32) {
        let n = self.n as i32;
        (-n + 1, n)
    }

    pub fn y_range(&self) -> (i32, i32) {
        let n = self.n as i32;
        (-n + 1, n - 1)
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        let (x0, x1) = self.x_range();
        let (y0, y1) = self.y_range();
        (x0..=x1).contains(&p.x) && (y0..=y1).contains(&p.y)
    }

    /// Raster index of an interior point.
    #[inline]
    pub fn index_of(&self, p: LatticePoint) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let n = self.n as i32;
        let row = (p.y + n - 1) as usize;
        let col = (p.x + n - 1) as usize;
        Some(row * self.width() + col)
    }

    pub fn site(&self, p: LatticePoint) -> Site {
        if self.contains(p) {
            Site::Interior
        } else if p.neighbors().iter().any(|&q| self.contains(q)) {
            Site::Boundary
        } else {
            Site::Exterior
        }
    }

    pub fn is_boundary(&self, p: LatticePoint) -> bool {
        self.site(p) == Site::Boundary
    }

    pub fn is_left(&self, p: LatticePoint) -> bool {
        let n = self.n as i32;
        p.x == -n && (-n + 1..=n - 1).contains(&p.y)
    }

    pub fn is_right(&self, p: LatticePoint) -> bool {
        let n = self.n as i32;
        p.x == n + 1 && (-n + 1..=n - 1).contains(&p.y)
    }

    /// The unique interior neighbour of a boundary point.
    pub fn inward_neighbor(&self, p: LatticePoint) -> Option<LatticePoint> {
        if self.contains(p) {
            return None;
        }
        p.neighbors().into_iter().find(|&q| self.contains(q))
    }
}

/// Builds `A_n` and its boundary.
pub fn build_domain(n: u32) -> Result<LatticeDomain> {
    if !(2..=MAX_N).contains(&n) {
        return Err(LerwError::DomainSize(n as i64));
    }
    let ni = n as i32;
    let mut interior = Vec::with_capacity((2 * n as usize) * (2 * n as usize - 1));
    for y in -ni + 1..=ni - 1 {
        for x in -ni + 1..=ni {
            interior.push(LatticePoint::new(x, y));
        }
    }

    let mut boundary = Vec::with_capacity(8 * n as usize - 2);
    for x in -ni + 1..=ni {
        boundary.push(LatticePoint::new(x, -ni));
    }
    for y in -ni + 1..=ni - 1 {
        boundary.push(LatticePoint::new(-ni, y));
        boundary.push(LatticePoint::new(ni + 1, y));
    }
    for x in -ni + 1..=ni {
        boundary.push(LatticePoint::new(x, ni));
    }
    boundary.sort();

    let left_boundary = (-ni + 1..=ni - 1)
        .map(|y| LatticePoint::new(-ni, y))
        .collect();
    let right_boundary = (-ni + 1..=ni - 1)
        .map(|y| LatticePoint::new(ni + 1, y))
        .collect();

    Ok(LatticeDomain {
        n,
        interior,
        boundary,
        left_boundary,
        right_boundary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn p(x: i32, y: i32) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    #[test]
    fn n2_interior_is_four_by_three_block() {
        let d = build_domain(2).unwrap();
        let expected: BTreeSet<_> = (-1..=1)
            .flat_map(|y| (-1..=2).map(move |x| p(x, y)))
            .collect();
        let got: BTreeSet<_> = d.interior().iter().copied().collect();
        assert_eq!(d.interior().len(), 12);
        assert_eq!(got, expected);
        assert!(d.contains(p(0, 0)) && d.contains(p(1, 0)));
        assert!(d.is_boundary(p(3, 0)));
        assert!(d.is_right(p(3, 0)));
    }

    #[test]
    fn n3_has_thirty_interior_points() {
        assert_eq!(build_domain(3).unwrap().interior().len(), 30);
    }

    #[test]
    fn rejects_small_and_huge_n() {
        assert!(matches!(build_domain(1), Err(LerwError::DomainSize(1))));
        assert!(matches!(build_domain(0), Err(LerwError::DomainSize(0))));
        assert!(build_domain(MAX_N + 1).is_err());
    }

    #[test]
    fn boundary_matches_distance_one_definition() {
        for n in 2..=6 {
            let d = build_domain(n).unwrap();
            let ni = n as i32;
            let mut brute = BTreeSet::new();
            for y in -ni - 2..=ni + 2 {
                for x in -ni - 2..=ni + 3 {
                    let q = p(x, y);
                    if !d.contains(q) && q.neighbors().iter().any(|&r| d.contains(r)) {
                        brute.insert(q);
                    }
                }
            }
            let got: BTreeSet<_> = d.boundary().iter().copied().collect();
            assert_eq!(got, brute);
            assert_eq!(d.boundary().len(), 8 * n as usize - 2);
            for &b in d.boundary() {
                assert!(d.inward_neighbor(b).is_some());
            }
            for &z in d.interior() {
                for q in z.neighbors() {
                    assert!(d.contains(q) || d.is_boundary(q));
                }
            }
            assert!(d.left_boundary().iter().all(|q| q.x == -ni));
            assert!(d.right_boundary().iter().all(|q| q.x == ni + 1));
        }
    }

    #[test]
    fn interior_is_raster_ordered_and_indexed() {
        let d = build_domain(4).unwrap();
        let mut sorted = d.interior().to_vec();
        sorted.sort();
        assert_eq!(sorted, d.interior());
        for (i, &q) in d.interior().iter().enumerate() {
            assert_eq!(d.index_of(q), Some(i));
        }
        assert_eq!(d.index_of(p(-4, 0)), None);
        assert_eq!(build_domain(4).unwrap(), d);
    }

    #[test]
    fn mirror_preserves_interior_and_ray() {
        let d = build_domain(5).unwrap();
        for &z in d.interior() {
            assert!(d.contains(z.mirror()));
            assert!(d.contains(z.conjugate()));
        }
        for &b in d.boundary() {
            assert!(d.is_boundary(b.mirror()));
        }
        for k in 1..5 {
            let e = DirectedEdge::new(p(0, -k), p(1, -k)).unwrap();
            let m = DirectedEdge::new(e.from.mirror(), e.to.mirror()).unwrap();
            assert_eq!(crossing_parity_increment(m), 1);
        }
    }

    #[test]
    fn crossing_increment_examples() {
        let e = |a: LatticePoint, b: LatticePoint| DirectedEdge::new(a, b).unwrap();
        assert_eq!(crossing_parity_increment(e(p(0, 0), p(1, 0))), 0);
        assert_eq!(crossing_parity_increment(e(p(0, -1), p(1, -1))), 1);
        assert_eq!(crossing_parity_increment(e(p(1, -3), p(0, -3))), 1);
        assert_eq!(crossing_parity_increment(e(p(0, 1), p(1, 1))), 0);
        assert_eq!(crossing_parity_increment(e(p(1, -1), p(2, -1))), 0);
        assert_eq!(crossing_parity_increment(e(p(0, -1), p(0, -2))), 0);
    }

    #[test]
    fn marked_edge_examples() {
        let e = |a: LatticePoint, b: LatticePoint| DirectedEdge::new(a, b).unwrap();
        assert_eq!(marked_edge_increment(e(p(0, 0), p(1, 0))), 1);
        assert_eq!(marked_edge_increment(e(p(1, 0), p(0, 0))), -1);
        assert_eq!(marked_edge_increment(e(p(0, 1), p(1, 1))), 0);
    }

    #[test]
    fn non_adjacent_edge_rejected() {
        assert!(DirectedEdge::new(p(0, 0), p(1, 1)).is_err());
        assert!(DirectedEdge::new(p(0, 0), p(0, 0)).is_err());
    }
}
