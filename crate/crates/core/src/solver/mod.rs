//! Linear algebra on sub-stochastic transition operators of the lattice.
//!
//! A [`TransitionOperator`] is the matrix `M` indexed by the live set
//! (interior minus killed points) with entry `±1/4` between neighbours; the
//! sign is `-1` on edges crossing the ray `{x = 1/2, y <= -1}` when the
//! operator is crossing-signed. Everything here works with `I - M`, which is
//! symmetric positive definite in both signings (`|M| <= P` entrywise and
//! `P` is strictly sub-stochastic), so a banded Cholesky factorization in
//! the operator's elimination order is used throughout.

pub mod band;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};
use crate::lattice::{crosses_ray, LatticeDomain, LatticePoint};
pub use band::{BandCholesky, SymmetricBand};

const NOT_LIVE: usize = usize::MAX;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Signing {
    Unsigned,
    CrossingSigned,
}

/// The kernel `P` (or signed `Q`) restricted to `interior \ killed`.
#[derive(Clone, Debug)]
pub struct TransitionOperator<'a> {
    domain: &'a LatticeDomain,
    killed: BTreeSet<LatticePoint>,
    signing: Signing,
    live: Vec<LatticePoint>,
    slot: Vec<usize>,
}

impl<'a> TransitionOperator<'a> {
    /// Removes `killed` from the index set; the live set keeps raster order.
    pub fn new(
        domain: &'a LatticeDomain,
        killed: impl IntoIterator<Item = LatticePoint>,
        signing: Signing,
    ) -> Result<Self> {
        let killed: BTreeSet<_> = killed.into_iter().collect();
        if let Some(p) = killed.iter().find(|p| !domain.contains(**p)) {
            return Err(LerwError::precondition(format!(
                "killed point {p} is not an interior point of A_{}",
                domain.n()
            )));
        }
        let live: Vec<_> = domain
            .interior()
            .iter()
            .copied()
            .filter(|p| !killed.contains(p))
            .collect();
        let mut op = TransitionOperator {
            domain,
            killed,
            signing,
            live,
            slot: Vec::new(),
        };
        op.reindex();
        Ok(op)
    }

    pub fn unsigned(domain: &'a LatticeDomain) -> Self {
        Self::new(domain, [], Signing::Unsigned).expect("no killed points")
    }

    pub fn signed(domain: &'a LatticeDomain) -> Self {
        Self::new(domain, [], Signing::CrossingSigned).expect("no killed points")
    }

    /// Replaces the elimination order by `order`, which must be a
    /// permutation of the live set.
    pub fn with_order(mut self, order: Vec<LatticePoint>) -> Result<Self> {
        let mut a = order.clone();
        let mut b = self.live.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(LerwError::precondition(
                "elimination order must be a permutation of the live set",
            ));
        }
        self.live = order;
        self.reindex();
        Ok(self)
    }

    fn reindex(&mut self) {
        self.slot = vec![NOT_LIVE; self.domain.interior().len()];
        for (k, p) in self.live.iter().enumerate() {
            let i = self.domain.index_of(*p).expect("live points are interior");
            self.slot[i] = k;
        }
    }

    pub fn domain(&self) -> &'a LatticeDomain {
        self.domain
    }

    pub fn killed(&self) -> &BTreeSet<LatticePoint> {
        &self.killed
    }

    pub fn signing(&self) -> Signing {
        self.signing
    }

    /// Live points in elimination order.
    pub fn live(&self) -> &[LatticePoint] {
        &self.live
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    #[inline]
    pub fn live_index(&self, p: LatticePoint) -> Option<usize> {
        let i = self.domain.index_of(p)?;
        match self.slot[i] {
            NOT_LIVE => None,
            k => Some(k),
        }
    }

    pub fn is_live(&self, p: LatticePoint) -> bool {
        self.live_index(p).is_some()
    }

    /// One-step weight `±1/4` between neighbours `a` and `b`, ignoring
    /// whether they are live.
    #[inline]
    pub fn step_weight(&self, a: LatticePoint, b: LatticePoint) -> f64 {
        if self.signing == Signing::CrossingSigned && crosses_ray(a, b) {
            -0.25
        } else {
            0.25
        }
    }

    /// The system matrix `I - M` in elimination order.
    pub fn system(&self) -> SymmetricBand {
        let mut entries = Vec::with_capacity(3 * self.live.len());
        for (k, &p) in self.live.iter().enumerate() {
            entries.push((k, k, 1.0));
            for q in p.neighbors() {
                if let Some(j) = self.live_index(q) {
                    if j < k {
                        entries.push((k, j, -self.step_weight(p, q)));
                    }
                }
            }
        }
        SymmetricBand::from_entries(self.live.len(), entries)
    }

    /// Dense vector over the live set.
    pub fn vector_from(&self, values: impl IntoIterator<Item = (LatticePoint, f64)>) -> Vec<f64> {
        let mut v = vec![0.0; self.live.len()];
        for (p, x) in values {
            if let Some(k) = self.live_index(p) {
                v[k] += x;
            }
        }
        v
    }

    /// The Dirichlet source term: for each live `z`, the sum over absorbing
    /// neighbours `a` of `weight(z, a) * boundary_values[a]`.
    pub fn dirichlet_source(
        &self,
        boundary_values: &BTreeMap<LatticePoint, f64>,
    ) -> Result<Vec<f64>> {
        let mut b = vec![0.0; self.live.len()];
        for (k, &z) in self.live.iter().enumerate() {
            for a in z.neighbors() {
                if self.is_live(a) {
                    continue;
                }
                let value = boundary_values.get(&a).ok_or_else(|| {
                    LerwError::precondition(format!(
                        "no boundary value given for absorbing point {a}"
                    ))
                })?;
                b[k] += self.step_weight(z, a) * value;
            }
        }
        Ok(b)
    }
}

/// Result of a streaming elimination: `ln det(I - M)` and the
/// forward-substituted right-hand sides `L⁻¹ v`.
pub struct ForwardPass {
    pub log_det: f64,
    pub vectors: Vec<Vec<f64>>,
}

impl ForwardPass {
    /// `xᵀ (I - M)⁻¹ y` for the `i`-th and `j`-th right-hand sides.
    pub fn bilinear(&self, i: usize, j: usize) -> f64 {
        self.vectors[i]
            .iter()
            .zip(&self.vectors[j])
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Eliminates `I - M` with a rolling window, returning the log-determinant
/// and `L⁻¹ v` for each right-hand side. Memory is O(bandwidth²) plus the
/// vectors themselves.
pub fn forward_pass(op: &TransitionOperator<'_>, rhs: Vec<Vec<f64>>) -> Result<ForwardPass> {
    let mut vectors = rhs;
    let log_det = band::streaming_factor(&op.system(), &mut vectors).map_err(|e| tag(op, e))?;
    Ok(ForwardPass { log_det, vectors })
}

fn tag(op: &TransitionOperator<'_>, e: LerwError) -> LerwError {
    match e {
        LerwError::Numerical(msg) => LerwError::numerical(format!(
            "{msg} ({:?} operator on A_{} with {} killed points)",
            op.signing,
            op.domain.n(),
            op.killed.len()
        )),
        other => other,
    }
}

/// `ln det(I - M)`. A nonpositive pivot is reported as a numerical
/// diagnostic, never absolute-valued away.
pub fn log_det_i_minus(op: &TransitionOperator<'_>) -> Result<f64> {
    if op.is_empty() {
        return Ok(0.0);
    }
    Ok(forward_pass(op, Vec::new())?.log_det)
}

/// `(I - M)⁻¹(v, v)`: the expected (signed) number of visits to `v`,
/// counting time zero, before leaving the live set.
pub fn green_diagonal(op: &TransitionOperator<'_>, v: LatticePoint) -> Result<f64> {
    let k = op.live_index(v).ok_or_else(|| {
        LerwError::precondition(format!("{v} is not in the live set of the operator"))
    })?;
    let mut e = vec![0.0; op.len()];
    e[k] = 1.0;
    let pass = forward_pass(op, vec![e])?;
    Ok(pass.bilinear(0, 0))
}

/// A stored factorization of `I - M` for repeated full solves.
pub struct Factorization<'o, 'a> {
    op: &'o TransitionOperator<'a>,
    chol: BandCholesky,
}

impl<'o, 'a> Factorization<'o, 'a> {
    pub fn new(op: &'o TransitionOperator<'a>) -> Result<Self> {
        let chol = BandCholesky::factor(&op.system()).map_err(|e| tag(op, e))?;
        Ok(Factorization { op, chol })
    }

    pub fn log_det(&self) -> f64 {
        self.chol.log_det()
    }

    /// Solves `(I - M) x = b` over the live set.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.chol.solve(b)
    }

    pub fn operator(&self) -> &TransitionOperator<'a> {
        self.op
    }
}

/// Solves the Dirichlet problem `h = M h + (absorbed boundary values)` on the
/// live set. `boundary_values` must cover every absorbing point adjacent to
/// the live set (boundary points and killed points alike).
pub fn dirichlet_solve(
    op: &TransitionOperator<'_>,
    boundary_values: &BTreeMap<LatticePoint, f64>,
) -> Result<BTreeMap<LatticePoint, f64>> {
    let b = op.dirichlet_source(boundary_values)?;
    if op.is_empty() {
        return Ok(BTreeMap::new());
    }
    let h = Factorization::new(op)?.solve(&b);
    Ok(op.live().iter().copied().zip(h).collect())
}
