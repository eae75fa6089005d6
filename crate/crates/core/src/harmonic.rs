//! Escape probabilities in the slit domain `A_n \ [0, ∞)`, their signed
//! boundary profile, the boundary functional Φ_n, and the crossing mass f(n).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::solver::{forward_pass, Factorization, Signing, TransitionOperator};

/// `I(ζ) = -1` on the open south-east quadrant, `+1` elsewhere.
pub fn quadrant_sign(p: LatticePoint) -> i32 {
    if p.x > 0 && p.y < 0 {
        -1
    } else {
        1
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub point: LatticePoint,
    pub sign: i32,
}

impl BoundaryPoint {
    pub fn new(d: &LatticeDomain, point: LatticePoint) -> Result<Self> {
        require_boundary(d, point)?;
        Ok(BoundaryPoint {
            point,
            sign: quadrant_sign(point),
        })
    }
}

fn require_boundary(d: &LatticeDomain, p: LatticePoint) -> Result<()> {
    if d.is_boundary(p) {
        Ok(())
    } else {
        Err(LerwError::precondition(format!(
            "{p} is not a boundary point of A_{}",
            d.n()
        )))
    }
}

/// The nonnegative real axis inside `A_n`: `(j, 0)` for `0 <= j <= n`.
pub fn slit_points(d: &LatticeDomain) -> Vec<LatticePoint> {
    (0..=d.n() as i32)
        .map(|j| LatticePoint::new(j, 0))
        .collect()
}

/// Simple random walk killed on the slit and on `∂A_n`.
pub fn slit_operator(d: &LatticeDomain) -> TransitionOperator<'_> {
    TransitionOperator::new(d, slit_points(d), Signing::Unsigned).expect("slit lies in A_n")
}

/// First-step distribution of the walk from the origin, on the live set.
fn origin_first_step(op: &TransitionOperator<'_>) -> Vec<f64> {
    op.vector_from(LatticePoint::ORIGIN.neighbors().map(|w| (w, 0.25)))
}

/// `R_n`: probability that SRW from 0 reaches the left boundary before
/// returning to `[0, ∞)` or leaving `A_n` elsewhere.
pub fn escape_r(d: &LatticeDomain) -> Result<f64> {
    let op = slit_operator(d);
    let first = origin_first_step(&op);
    let left = one_step_into(d, &op, |q| d.is_left(q));
    let pass = forward_pass(&op, vec![first, left])?;
    Ok(pass.bilinear(0, 1))
}

/// For each live `z`, `(1/4) · #{neighbours of z selected by target}`.
fn one_step_into(
    d: &LatticeDomain,
    op: &TransitionOperator<'_>,
    target: impl Fn(LatticePoint) -> bool,
) -> Vec<f64> {
    let mut v = vec![0.0; op.len()];
    for (k, &z) in op.live().iter().enumerate() {
        v[k] = 0.25
            * z.neighbors()
                .iter()
                .filter(|&&q| !d.contains(q) && target(q))
                .count() as f64;
    }
    v
}

/// Signed exit distribution `R_n(ζ) = I(ζ) P{S_T = ζ}` over all of `∂A_n`,
/// from one adjoint solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeProfile {
    pub n: u32,
    values: BTreeMap<LatticePoint, f64>,
}

impl EscapeProfile {
    pub fn compute(d: &LatticeDomain) -> Result<Self> {
        let op = slit_operator(d);
        let f = Factorization::new(&op)?;
        let u = f.solve(&origin_first_step(&op));
        let mut values = BTreeMap::new();
        for &zeta in d.boundary() {
            let z = d
                .inward_neighbor(zeta)
                .expect("boundary point has an interior neighbour");
            let hit = op.live_index(z).map_or(0.0, |k| 0.25 * u[k]);
            values.insert(zeta, quadrant_sign(zeta) as f64 * hit);
        }
        Ok(EscapeProfile { n: d.n(), values })
    }

    /// Signed `R_n(ζ)`.
    pub fn get(&self, zeta: LatticePoint) -> Result<f64> {
        self.values.get(&zeta).copied().ok_or_else(|| {
            LerwError::precondition(format!("{zeta} is not a boundary point of A_{}", self.n))
        })
    }

    /// `R_n(1 - ζ)`, realised through the mirror `x ↦ 1 - x`.
    pub fn get_mirrored(&self, zeta: LatticePoint) -> Result<f64> {
        self.get(zeta)?;
        self.get(zeta.mirror())
    }

    pub fn iter(&self) -> impl Iterator<Item = (LatticePoint, f64)> + '_ {
        self.values.iter().map(|(&p, &v)| (p, v))
    }

    /// The two products `R(ζ1) R(1-ζ2)` and `R(1-ζ1) R(ζ2)` whose difference is Φ.
    pub fn phi_terms(&self, z1: LatticePoint, z2: LatticePoint) -> Result<(f64, f64)> {
        Ok((
            self.get(z1)? * self.get_mirrored(z2)?,
            self.get_mirrored(z1)? * self.get(z2)?,
        ))
    }

    /// `Φ_n(ζ1, ζ2) = |R(ζ1) R(1-ζ2) - R(1-ζ1) R(ζ2)|`.
    pub fn phi(&self, z1: LatticePoint, z2: LatticePoint) -> Result<f64> {
        let (a, b) = self.phi_terms(z1, z2)?;
        Ok((a - b).abs())
    }
}

/// Signed `R_n(ζ)` for a single boundary point.
pub fn escape_r_boundary(d: &LatticeDomain, zeta: LatticePoint) -> Result<f64> {
    require_boundary(d, zeta)?;
    EscapeProfile::compute(d)?.get(zeta)
}

/// `Φ_n(ζ1, ζ2)`.
pub fn phi(d: &LatticeDomain, z1: LatticePoint, z2: LatticePoint) -> Result<f64> {
    require_boundary(d, z1)?;
    require_boundary(d, z2)?;
    EscapeProfile::compute(d)?.phi(z1, z2)
}

/// `f(n)`: SRW mass of paths from the left boundary to the right boundary
/// through `A_n`.
pub fn crossing_mass(d: &LatticeDomain) -> Result<f64> {
    let op = TransitionOperator::unsigned(d);
    let from_left = one_step_into(d, &op, |q| d.is_left(q));
    let to_right = one_step_into(d, &op, |q| d.is_right(q));
    let pass = forward_pass(&op, vec![from_left, to_right])?;
    Ok(pass.bilinear(0, 1))
}
