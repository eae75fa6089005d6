//! Nearest-neighbour paths, loop erasure, and exhaustive enumeration of
//! crossing self-avoiding walks and unrooted loops on small domains.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use crate::error::{LerwError, Result};
use crate::lattice::{
    crosses_ray, is_marked_edge, marked_edge_increment, DirectedEdge, LatticeDomain, LatticePoint,
};

/// Enumeration guards. Exhaustive enumeration is exponential in the domain
/// size, so both enumerators refuse inputs above these limits.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct EnumerationCaps {
    /// Largest `n` for which crossing SAWs are enumerated.
    pub saw_n: u32,
    /// Longest loop (in steps) produced by [`enumerate_loops_upto`].
    pub loop_len: usize,
}

impl Default for EnumerationCaps {
    fn default() -> Self {
        EnumerationCaps {
            saw_n: 4,
            loop_len: 16,
        }
    }
}

/// A nearest-neighbour lattice path `[w_0, ..., w_k]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WalkPath {
    points: Vec<LatticePoint>,
}

impl WalkPath {
    pub fn new(points: Vec<LatticePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(LerwError::precondition("a path needs at least one point"));
        }
        if let Some(w) = points.windows(2).find(|w| !w[0].is_adjacent(w[1])) {
            return Err(LerwError::precondition(format!(
                "{} -> {} is not a nearest-neighbour step",
                w[0], w[1]
            )));
        }
        Ok(WalkPath { points })
    }

    pub(crate) fn from_points_unchecked(points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0].is_adjacent(w[1])));
        WalkPath { points }
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn into_points(self) -> Vec<LatticePoint> {
        self.points
    }

    /// Number of steps `|w|`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn first(&self) -> LatticePoint {
        self.points[0]
    }

    pub fn last(&self) -> LatticePoint {
        self.points[self.points.len() - 1]
    }

    pub fn edges(&self) -> impl Iterator<Item = DirectedEdge> + '_ {
        self.points.windows(2).map(|w| DirectedEdge {
            from: w[0],
            to: w[1],
        })
    }

    pub fn reversed(&self) -> WalkPath {
        let mut points = self.points.clone();
        points.reverse();
        WalkPath { points }
    }

    pub fn is_closed(&self) -> bool {
        self.first() == self.last()
    }

    pub fn is_self_avoiding(&self) -> bool {
        let mut seen = std::collections::HashSet::with_capacity(self.points.len());
        self.points.iter().all(|p| seen.insert(*p))
    }

    /// `true` if some step traverses `{0, 1}` in either direction.
    pub fn uses_marked_edge(&self) -> bool {
        uses_marked_edge(&self.points)
    }

    /// Natural log of the simple random walk weight `4^{-|w|}`.
    pub fn srw_weight_log(&self) -> f64 {
        srw_weight_log(self)
    }

    pub fn crossing_number(&self) -> u32 {
        crossing_number(self)
    }

    pub fn edge_signature(&self) -> i32 {
        edge_signature(self)
    }
}

/// `ln p(w) = -|w| ln 4`.
pub fn srw_weight_log(w: &WalkPath) -> f64 {
    -(w.steps() as f64) * 2.0 * LN_2
}

/// Number of traversals of edges crossing the ray `{x = 1/2, y <= -1}`.
pub fn crossing_number(w: &WalkPath) -> u32 {
    crossing_number_of(w.points())
}

pub(crate) fn crossing_number_of(points: &[LatticePoint]) -> u32 {
    points
        .windows(2)
        .filter(|s| crosses_ray(s[0], s[1]))
        .count() as u32
}

/// Uses of `0 -> 1` minus uses of `1 -> 0`.
pub fn edge_signature(w: &WalkPath) -> i32 {
    w.edges().map(marked_edge_increment).sum()
}

pub(crate) fn uses_marked_edge(points: &[LatticePoint]) -> bool {
    points.windows(2).any(|s| is_marked_edge(s[0], s[1]))
}

/// Chronological loop erasure: walk forward and, whenever a point is
/// revisited, cut out the cycle created since its previous visit.
pub fn loop_erase(w: &WalkPath) -> WalkPath {
    WalkPath::from_points_unchecked(loop_erase_points(w.points()))
}

pub(crate) fn loop_erase_points(points: &[LatticePoint]) -> Vec<LatticePoint> {
    let mut out: Vec<LatticePoint> = Vec::with_capacity(points.len());
    let mut position: HashMap<LatticePoint, usize> = HashMap::with_capacity(points.len());
    for &p in points {
        if let Some(&k) = position.get(&p) {
            for q in out.drain(k + 1..) {
                position.remove(&q);
            }
        } else {
            position.insert(p, out.len());
            out.push(p);
        }
    }
    out
}

/// Visitor for depth-first enumeration of SAWs from a boundary point through
/// the interior to another boundary point.
pub(crate) trait SawVisitor {
    /// Whether a SAW may terminate at boundary point `end`.
    fn accepts_end(&self, end: LatticePoint) -> bool;
    /// Called after `p` is appended to the current prefix.
    fn enter(&mut self, _p: LatticePoint) {}
    /// Called when `p` is removed from the current prefix.
    fn leave(&mut self, _p: LatticePoint) {}
    /// Called with every complete SAW (both endpoints on the boundary).
    fn complete(&mut self, path: &[LatticePoint]);
}

/// Depth-first SAW enumeration starting at boundary point `start`.
pub(crate) fn visit_saws_from<V: SawVisitor>(
    d: &LatticeDomain,
    start: LatticePoint,
    visitor: &mut V,
) {
    let mut visited = vec![false; d.interior().len()];
    let mut path = vec![start];
    for q in start.neighbors() {
        if let Some(i) = d.index_of(q) {
            visited[i] = true;
            path.push(q);
            visitor.enter(q);
            saw_dfs(d, &mut visited, &mut path, visitor);
            visitor.leave(q);
            path.pop();
            visited[i] = false;
        }
    }
}

fn saw_dfs<V: SawVisitor>(
    d: &LatticeDomain,
    visited: &mut [bool],
    path: &mut Vec<LatticePoint>,
    visitor: &mut V,
) {
    let cur = *path.last().expect("nonempty prefix");
    for q in cur.neighbors() {
        match d.index_of(q) {
            Some(i) => {
                if !visited[i] {
                    visited[i] = true;
                    path.push(q);
                    visitor.enter(q);
                    saw_dfs(d, visited, path, visitor);
                    visitor.leave(q);
                    path.pop();
                    visited[i] = false;
                }
            }
            None => {
                if q != path[0] && visitor.accepts_end(q) {
                    path.push(q);
                    visitor.complete(path);
                    path.pop();
                }
            }
        }
    }
}

/// Every SAW from the left boundary to the right boundary whose other points
/// are interior, each exactly once.
pub fn enumerate_crossing_saws(
    d: &LatticeDomain,
    caps: EnumerationCaps,
) -> Result<CrossingSaws<'_>> {
    if d.n() > caps.saw_n {
        return Err(LerwError::CapExceeded(format!(
            "SAW enumeration limited to n <= {}, got n = {}",
            caps.saw_n,
            d.n()
        )));
    }
    Ok(CrossingSaws {
        domain: d,
        starts: d.left_boundary().iter(),
        path: Vec::new(),
        next_dir: Vec::new(),
        visited: vec![false; d.interior().len()],
    })
}

/// Iterator returned by [`enumerate_crossing_saws`].
pub struct CrossingSaws<'a> {
    domain: &'a LatticeDomain,
    starts: std::slice::Iter<'a, LatticePoint>,
    path: Vec<LatticePoint>,
    next_dir: Vec<u8>,
    visited: Vec<bool>,
}

impl Iterator for CrossingSaws<'_> {
    type Item = WalkPath;

    fn next(&mut self) -> Option<WalkPath> {
        let d = self.domain;
        loop {
            let Some(&cur) = self.path.last() else {
                let &s = self.starts.next()?;
                self.path.push(s);
                self.next_dir.push(0);
                continue;
            };
            let top = self.path.len() - 1;
            let dir = self.next_dir[top];
            if dir == 4 {
                self.path.pop();
                self.next_dir.pop();
                if let Some(i) = d.index_of(cur) {
                    self.visited[i] = false;
                }
                continue;
            }
            self.next_dir[top] += 1;
            let q = cur.neighbors()[dir as usize];
            match d.index_of(q) {
                Some(i) if !self.visited[i] => {
                    self.visited[i] = true;
                    self.path.push(q);
                    self.next_dir.push(0);
                }
                Some(_) => {}
                None => {
                    if top > 0 && d.is_right(q) {
                        let mut points = self.path.clone();
                        points.push(q);
                        return Some(WalkPath::from_points_unchecked(points));
                    }
                }
            }
        }
    }
}

/// An oriented unrooted loop, stored as its lexicographically least
/// rotation together with `d(l)`, the number of distinct rooted loops in its
/// class.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct UnrootedLoop {
    pub representative: WalkPath,
    pub multiplicity: usize,
}

impl UnrootedLoop {
    /// Canonicalizes a closed path.
    pub fn from_rooted(l: &WalkPath) -> Result<Self> {
        if !l.is_closed() || l.steps() < 2 {
            return Err(LerwError::precondition(
                "a loop must be closed with at least two steps",
            ));
        }
        let cycle = &l.points()[..l.steps()];
        let len = cycle.len();
        let best = (0..len)
            .min_by(|&a, &b| cmp_rotations(cycle, a, b))
            .expect("nonempty cycle");
        let mut points: Vec<_> = (0..=len).map(|k| cycle[(best + k) % len]).collect();
        points[len] = points[0];
        let multiplicity = rotation_period(&points[..len]);
        Ok(UnrootedLoop {
            representative: WalkPath::from_points_unchecked(points),
            multiplicity,
        })
    }

    pub fn len(&self) -> usize {
        self.representative.steps()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `m(l) = 4^{-|l|} d(l) / |l|`.
    pub fn measure(&self) -> f64 {
        let len = self.len();
        0.25f64.powi(len as i32) * self.multiplicity as f64 / len as f64
    }

    pub fn crossing_number(&self) -> u32 {
        self.representative.crossing_number()
    }

    pub fn edge_signature(&self) -> i32 {
        self.representative.edge_signature()
    }

    pub fn visits(&self, p: LatticePoint) -> bool {
        self.representative.points().contains(&p)
    }

    pub fn reversed(&self) -> UnrootedLoop {
        UnrootedLoop::from_rooted(&self.representative.reversed()).expect("reversal stays a loop")
    }
}

fn cmp_rotations(cycle: &[LatticePoint], a: usize, b: usize) -> std::cmp::Ordering {
    let len = cycle.len();
    (0..len)
        .map(|k| cycle[(a + k) % len].cmp(&cycle[(b + k) % len]))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Smallest `p > 0` with rotation by `p` fixing the cycle.
fn rotation_period(cycle: &[LatticePoint]) -> usize {
    let len = cycle.len();
    (1..len)
        .filter(|p| len.is_multiple_of(*p))
        .find(|&p| (0..len).all(|k| cycle[k] == cycle[(k + p) % len]))
        .unwrap_or(len)
}

/// Every unrooted loop inside the interior with at most `max_len` steps,
/// exactly once, orientations kept distinct.
pub fn enumerate_loops_upto(
    d: &LatticeDomain,
    max_len: usize,
    caps: EnumerationCaps,
) -> Result<Loops<'_>> {
    if !max_len.is_multiple_of(2) {
        return Err(LerwError::precondition(format!(
            "loop length bound must be even, got {max_len}"
        )));
    }
    if max_len > caps.loop_len {
        return Err(LerwError::CapExceeded(format!(
            "loop enumeration limited to length <= {}, got {max_len}",
            caps.loop_len
        )));
    }
    Ok(Loops {
        domain: d,
        max_len,
        roots: d.interior().iter(),
        path: Vec::new(),
        next_dir: Vec::new(),
    })
}

/// Iterator returned by [`enumerate_loops_upto`].
///
/// Rooted walks start at the smallest point (raster order) of the loop and
/// stay on points no smaller than it; a closed walk is emitted only when it
/// is the least of its rotations.
pub struct Loops<'a> {
    domain: &'a LatticeDomain,
    max_len: usize,
    roots: std::slice::Iter<'a, LatticePoint>,
    path: Vec<LatticePoint>,
    next_dir: Vec<u8>,
}

impl Iterator for Loops<'_> {
    type Item = UnrootedLoop;

    fn next(&mut self) -> Option<UnrootedLoop> {
        loop {
            let Some(&cur) = self.path.last() else {
                let &r = self.roots.next()?;
                self.path.push(r);
                self.next_dir.push(0);
                continue;
            };
            let root = self.path[0];
            let top = self.path.len() - 1;
            let dir = self.next_dir[top];
            if dir == 4 {
                self.path.pop();
                self.next_dir.pop();
                continue;
            }
            self.next_dir[top] += 1;
            let q = cur.neighbors()[dir as usize];
            let steps_after = self.path.len();
            if q < root
                || !self.domain.contains(q)
                || steps_after + q.manhattan(root) as usize > self.max_len
            {
                continue;
            }
            self.path.push(q);
            self.next_dir.push(0);
            if q == root {
                let cycle = &self.path[..steps_after];
                if let Some(multiplicity) = canonical_multiplicity(cycle) {
                    return Some(UnrootedLoop {
                        representative: WalkPath::from_points_unchecked(self.path.clone()),
                        multiplicity,
                    });
                }
            }
        }
    }
}

/// `Some(d)` if `cycle` (root first, root minimal) is its least rotation.
fn canonical_multiplicity(cycle: &[LatticePoint]) -> Option<usize> {
    let root = cycle[0];
    for k in 1..cycle.len() {
        if cycle[k] != root {
            continue;
        }
        match cmp_rotations(cycle, k, 0) {
            std::cmp::Ordering::Less => return None,
            std::cmp::Ordering::Equal => return Some(k),
            std::cmp::Ordering::Greater => {}
        }
    }
    Some(cycle.len())
}
