//! Loop-measure exponentials `F_V(A)` and `Q_V(A)`, the loop-erased measure
//! of a single SAW, and `Q_01(A_n)`.
//!
//! For an ordered set `V = [v_1, ..., v_k]` and `U_j = A \ {v_1, ..., v_{j-1}}`,
//! `ln F_V(A) = Σ ln G_{U_j}(v_j, v_j)` and `ln Q_V(A) = Σ ln g_{U_j}(v_j, v_j)`
//! with `G` the unsigned and `g` the crossing-signed Green's function. All
//! values are returned as natural logs.

use std::collections::HashSet;

use crate::error::{LerwError, Result};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::solver::{green_diagonal, Factorization, Signing, TransitionOperator};
use crate::walks::WalkPath;

/// Largest `n` for which a dense [`GreensTable`] may be built.
pub const DENSE_TABLE_MAX_N: u32 = 8;

fn check_vertex_set(d: &LatticeDomain, v: &[LatticePoint]) -> Result<()> {
    let mut seen = HashSet::with_capacity(v.len());
    for &p in v {
        if !d.contains(p) {
            return Err(LerwError::precondition(format!(
                "{p} is not an interior point of A_{}",
                d.n()
            )));
        }
        if !seen.insert(p) {
            return Err(LerwError::precondition(format!("{p} appears twice in V")));
        }
    }
    Ok(())
}

fn log_product_of_diagonals(
    d: &LatticeDomain,
    v: &[LatticePoint],
    signing: Signing,
) -> Result<f64> {
    check_vertex_set(d, v)?;
    let mut total = 0.0;
    for (j, &vj) in v.iter().enumerate() {
        let op = TransitionOperator::new(d, v[..j].iter().copied(), signing)?;
        let g = green_diagonal(&op, vj)?;
        if !(g > 0.0) {
            return Err(LerwError::numerical(format!(
                "{signing:?} Green's function at {vj} after removing {j} points is {g:e}"
            )));
        }
        total += g.ln();
    }
    Ok(total)
}

/// `ln F_V(A_n)`: total loop measure of loops in `A_n` meeting `V`.
pub fn log_f_v(d: &LatticeDomain, v: &[LatticePoint]) -> Result<f64> {
    log_product_of_diagonals(d, v, Signing::Unsigned)
}

/// `ln Q_V(A_n)`: signed loop measure of loops in `A_n` meeting `V`. A
/// nonpositive signed diagonal is a diagnostic error.
pub fn log_q_v(d: &LatticeDomain, v: &[LatticePoint]) -> Result<f64> {
    log_product_of_diagonals(d, v, Signing::CrossingSigned)
}

/// `ln Q_01(A_n) = ln g_{A_n}(0,0) + ln g_{A_n \ {0}}(1,1)`.
pub fn log_q01(d: &LatticeDomain) -> Result<f64> {
    log_q_v(d, &[LatticePoint::ORIGIN, LatticePoint::ONE])
}

/// Checks that `eta` is a SAW with both endpoints on the boundary and all
/// other points interior.
pub fn check_boundary_saw(d: &LatticeDomain, eta: &WalkPath) -> Result<()> {
    let pts = eta.points();
    if pts.len() < 3 {
        return Err(LerwError::precondition(
            "a boundary-to-boundary SAW has at least two steps",
        ));
    }
    if !d.is_boundary(eta.first()) || !d.is_boundary(eta.last()) {
        return Err(LerwError::precondition(
            "SAW endpoints must lie on the boundary",
        ));
    }
    if let Some(p) = pts[1..pts.len() - 1].iter().find(|p| !d.contains(**p)) {
        return Err(LerwError::precondition(format!(
            "SAW point {p} is not interior"
        )));
    }
    if !eta.is_self_avoiding() {
        return Err(LerwError::precondition("path is not self-avoiding"));
    }
    Ok(())
}

/// `ln p̂_n(η) = ln p(η) + ln F_η(A_n)` for any boundary-to-boundary SAW.
/// Only the interior vertices of `η` anchor loops.
pub fn boundary_saw_measure(d: &LatticeDomain, eta: &WalkPath) -> Result<f64> {
    check_boundary_saw(d, eta)?;
    let pts = eta.points();
    Ok(eta.srw_weight_log() + log_f_v(d, &pts[1..pts.len() - 1])?)
}

/// `ln p̂_n(η)` for a crossing SAW `η ∈ W_n`.
pub fn saw_measure(d: &LatticeDomain, eta: &WalkPath) -> Result<f64> {
    check_boundary_saw(d, eta)?;
    if !d.is_left(eta.first()) || !d.is_right(eta.last()) {
        return Err(LerwError::precondition(
            "a crossing SAW runs from the left boundary to the right boundary",
        ));
    }
    boundary_saw_measure(d, eta)
}

/// Dense Green's functions of `A_n` with incremental point removal.
///
/// Removing `v` downdates `G ← G - G[:,v] G[v,:] / G[v,v]` (a Schur
/// complement), which is exactly the Green's function of the smaller set.
/// Removals are stacked so a depth-first enumeration can undo them.
#[derive(Clone, Debug)]
pub struct GreensTable<'a> {
    domain: &'a LatticeDomain,
    killed_prefix: Vec<LatticePoint>,
    unsigned_diag: Vec<f64>,
    signed_diag: Vec<f64>,
    dim: usize,
    unsigned_levels: Vec<Vec<f64>>,
    signed_levels: Vec<Vec<f64>>,
    track_signed: bool,
}

impl<'a> GreensTable<'a> {
    /// Table tracking both the unsigned and the signed Green's function.
    pub fn new(d: &'a LatticeDomain) -> Result<Self> {
        Self::build(d, true)
    }

    /// Table tracking only the unsigned Green's function (half the work).
    pub fn unsigned_only(d: &'a LatticeDomain) -> Result<Self> {
        Self::build(d, false)
    }

    fn build(d: &'a LatticeDomain, track_signed: bool) -> Result<Self> {
        if d.n() > DENSE_TABLE_MAX_N {
            return Err(LerwError::CapExceeded(format!(
                "dense Green's tables limited to n <= {DENSE_TABLE_MAX_N}"
            )));
        }
        let dim = d.interior().len();
        let dense_inverse = |signing| -> Result<Vec<f64>> {
            let op = TransitionOperator::new(d, [], signing)?;
            let f = Factorization::new(&op)?;
            let mut g = vec![0.0; dim * dim];
            let mut e = vec![0.0; dim];
            for col in 0..dim {
                e[col] = 1.0;
                let x = f.solve(&e);
                e[col] = 0.0;
                for (row, v) in x.into_iter().enumerate() {
                    g[row * dim + col] = v;
                }
            }
            Ok(g)
        };
        let unsigned_levels = vec![dense_inverse(Signing::Unsigned)?];
        let signed_levels = if track_signed {
            vec![dense_inverse(Signing::CrossingSigned)?]
        } else {
            Vec::new()
        };
        Ok(GreensTable {
            domain: d,
            killed_prefix: Vec::new(),
            unsigned_diag: Vec::new(),
            signed_diag: Vec::new(),
            dim,
            unsigned_levels,
            signed_levels,
            track_signed,
        })
    }

    pub fn domain(&self) -> &'a LatticeDomain {
        self.domain
    }

    /// Points removed so far, in order.
    pub fn killed_prefix(&self) -> &[LatticePoint] {
        &self.killed_prefix
    }

    /// `G_{U_j}(v_j, v_j)` for each removed `v_j`.
    pub fn unsigned_diag(&self) -> &[f64] {
        &self.unsigned_diag
    }

    /// `g_{U_j}(v_j, v_j)` for each removed `v_j` (empty when untracked).
    pub fn signed_diag(&self) -> &[f64] {
        &self.signed_diag
    }

    /// Current unsigned Green's function `G_U(x, y)`, `U` = interior minus the prefix.
    pub fn green(&self, x: LatticePoint, y: LatticePoint) -> Option<f64> {
        let (i, j) = (self.domain.index_of(x)?, self.domain.index_of(y)?);
        Some(self.unsigned_levels[self.killed_prefix.len()][i * self.dim + j])
    }

    /// Removes `v`, recording its diagonal entries before removal.
    pub fn push(&mut self, v: LatticePoint) -> Result<()> {
        let k = self
            .domain
            .index_of(v)
            .ok_or_else(|| LerwError::precondition(format!("{v} is not an interior point")))?;
        if self.killed_prefix.contains(&v) {
            return Err(LerwError::precondition(format!("{v} was already removed")));
        }
        let depth = self.killed_prefix.len();
        let gu = downdate(&mut self.unsigned_levels, depth, self.dim, k);
        if !(gu > 0.0) {
            return Err(LerwError::numerical(format!("unsigned G at {v} is {gu:e}")));
        }
        if self.track_signed {
            let gs = downdate(&mut self.signed_levels, depth, self.dim, k);
            if !(gs > 0.0) {
                return Err(LerwError::numerical(format!("signed g at {v} is {gs:e}")));
            }
            self.signed_diag.push(gs);
        }
        self.unsigned_diag.push(gu);
        self.killed_prefix.push(v);
        Ok(())
    }

    /// Restores the point removed last.
    pub fn pop(&mut self) -> Option<LatticePoint> {
        let v = self.killed_prefix.pop()?;
        self.unsigned_diag.pop();
        if self.track_signed {
            self.signed_diag.pop();
        }
        Some(v)
    }

    /// `ln F` over the current prefix.
    pub fn log_f(&self) -> f64 {
        self.unsigned_diag.iter().map(|g| g.ln()).sum()
    }

    /// `ln Q` over the current prefix.
    pub fn log_q(&self) -> Result<f64> {
        if !self.track_signed {
            return Err(LerwError::precondition(
                "signed Green's function not tracked",
            ));
        }
        Ok(self.signed_diag.iter().map(|g| g.ln()).sum())
    }

    /// Most recently recorded unsigned diagonal.
    pub(crate) fn last_unsigned(&self) -> f64 {
        *self.unsigned_diag.last().expect("nonempty prefix")
    }

    pub(crate) fn last_signed(&self) -> f64 {
        *self.signed_diag.last().expect("nonempty prefix")
    }
}

/// Writes level `depth + 1` from level `depth` with point `k` removed and
/// returns the removed diagonal entry.
fn downdate(levels: &mut Vec<Vec<f64>>, depth: usize, dim: usize, k: usize) -> f64 {
    if levels.len() == depth + 1 {
        levels.push(vec![0.0; dim * dim]);
    }
    let (head, tail) = levels.split_at_mut(depth + 1);
    let g = &head[depth];
    let out = &mut tail[0];
    let gkk = g[k * dim + k];
    let inv = 1.0 / gkk;
    let row_k = &g[k * dim..(k + 1) * dim];
    for i in 0..dim {
        let f = g[i * dim + k] * inv;
        let src = &g[i * dim..(i + 1) * dim];
        let dst = &mut out[i * dim..(i + 1) * dim];
        if f == 0.0 {
            dst.copy_from_slice(src);
        } else {
            for ((o, s), r) in dst.iter_mut().zip(src).zip(row_k) {
                *o = s - f * r;
            }
        }
    }
    gkk
}
