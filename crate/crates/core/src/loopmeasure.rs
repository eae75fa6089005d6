//! Loop-measure mass of loops with odd crossing number.
//!
//! Summing `m(l)` over all loops in `A` gives `-ln det(I - P_A)`; summing
//! `(-1)^{J(l)} m(l)` gives `-ln det(I - Q_A)`. Their difference is twice the
//! mass of odd loops, so `m_odd = (ln det(I - Q) - ln det(I - P)) / 2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::solver::{log_det_i_minus, Signing, TransitionOperator};
use crate::walks::{enumerate_loops_upto, EnumerationCaps};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopMeasureResult {
    pub n: u32,
    /// `ln det(I - P)`
    pub log_det_unsigned: f64,
    /// `ln det(I - Q)`
    pub log_det_signed: f64,
    /// Mass of loops with odd crossing number, in nats.
    pub m_odd: f64,
}

/// `m(J_{A_n})` from two full-domain log-determinants.
pub fn m_odd(d: &LatticeDomain) -> Result<LoopMeasureResult> {
    m_odd_with_killed(d, &[])
}

/// Same as [`m_odd`] on `A_n` with `killed` removed.
pub fn m_odd_with_killed(d: &LatticeDomain, killed: &[LatticePoint]) -> Result<LoopMeasureResult> {
    let unsigned = TransitionOperator::new(d, killed.iter().copied(), Signing::Unsigned)?;
    let signed = TransitionOperator::new(d, killed.iter().copied(), Signing::CrossingSigned)?;
    let (lu, ls) = rayon::join(|| log_det_i_minus(&unsigned), || log_det_i_minus(&signed));
    let (log_det_unsigned, log_det_signed) = (lu?, ls?);
    let half = 0.5 * (log_det_signed - log_det_unsigned);
    // Roundoff can leave a tiny negative value when no loop crosses the ray.
    if half < -1e-12 * log_det_unsigned.abs().max(1.0) {
        return Err(LerwError::numerical(format!(
            "odd-loop mass came out negative ({half:e}) on A_{}",
            d.n()
        )));
    }
    Ok(LoopMeasureResult {
        n: d.n(),
        log_det_unsigned,
        log_det_signed,
        m_odd: half.max(0.0),
    })
}

/// `(1/π²) Σ_{k<terms} (2k+1)^{-2}`, which tends to 1/8.
pub fn brownian_odd_constant(terms: u64) -> f64 {
    // Smallest terms first.
    let s: f64 = (0..terms)
        .rev()
        .map(|k| {
            let odd = (2 * k + 1) as f64;
            1.0 / (odd * odd)
        })
        .sum();
    s / (PI * PI)
}

/// A partial sum of a positive-ratio series with a geometric tail estimate.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSum {
    pub partial: f64,
    pub tail_bound: f64,
}

impl TruncatedSum {
    pub fn contains(&self, x: f64) -> bool {
        (x - self.partial).abs() <= self.tail_bound
    }
}

/// Tail estimate `C ρ^L` for a series whose terms decay geometrically.
///
/// `terms[i]` is the (nonnegative) contribution of length `2(i+1)`. The
/// ratio is the largest of the last two consecutive ratios and the estimate
/// is doubled.
pub fn geometric_tail(terms: &[f64]) -> f64 {
    let k = terms.len();
    if k < 3 {
        return f64::INFINITY;
    }
    let r1 = terms[k - 1] / terms[k - 2];
    let r2 = terms[k - 2] / terms[k - 3];
    let ratio = r1.max(r2);
    if !(ratio < 1.0) {
        return f64::INFINITY;
    }
    2.0 * terms[k - 1] * ratio / (1.0 - ratio)
}

/// Loop-measure sums by loop length from direct enumeration of unrooted
/// loops. Index `i` holds loops of length `2(i+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSeries {
    pub max_len: usize,
    /// Σ m(l) over loops with odd crossing number.
    pub odd: Vec<f64>,
    /// Σ (-1)^J m(l) over loops visiting 0 or 1.
    pub meeting01_signed: Vec<f64>,
    /// Σ m(l) over loops visiting 0 or 1.
    pub meeting01_abs: Vec<f64>,
    pub loops: u64,
}

impl LoopSeries {
    pub fn enumerate(d: &LatticeDomain, max_len: usize, caps: EnumerationCaps) -> Result<Self> {
        let slots = max_len / 2;
        let mut s = LoopSeries {
            max_len,
            odd: vec![0.0; slots],
            meeting01_signed: vec![0.0; slots],
            meeting01_abs: vec![0.0; slots],
            loops: 0,
        };
        for l in enumerate_loops_upto(d, max_len, caps)? {
            let i = l.len() / 2 - 1;
            let m = l.measure();
            let odd = l.crossing_number() % 2 == 1;
            if odd {
                s.odd[i] += m;
            }
            if l.visits(LatticePoint::ORIGIN) || l.visits(LatticePoint::ONE) {
                s.meeting01_abs[i] += m;
                s.meeting01_signed[i] += if odd { -m } else { m };
            }
            s.loops += 1;
        }
        Ok(s)
    }

    /// Truncated `m(J_A)`; all terms are positive, so the partial sum is a
    /// lower bound.
    pub fn m_odd(&self) -> TruncatedSum {
        TruncatedSum {
            partial: self.odd.iter().sum(),
            tail_bound: geometric_tail(&self.odd),
        }
    }

    /// Truncated `ln Q_01(A)`; the tail is bounded by the absolute series.
    pub fn log_q01(&self) -> TruncatedSum {
        TruncatedSum {
            partial: self.meeting01_signed.iter().sum(),
            tail_bound: geometric_tail(&self.meeting01_abs),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_domain;

    #[test]
    fn brownian_partial_sums() {
        let pi2 = PI * PI;
        assert!((brownian_odd_constant(1) - 1.0 / pi2).abs() < 1e-16);
        assert!((brownian_odd_constant(1) - 0.101321).abs() < 1e-6);
        assert!((brownian_odd_constant(2) - (1.0 + 1.0 / 9.0) / pi2).abs() < 1e-16);
        for terms in [10u64, 1000, 100_000] {
            let gap = 0.125 - brownian_odd_constant(terms);
            assert!(gap > 0.0 && gap <= 1.0 / (4.0 * pi2 * terms as f64));
        }
    }

    #[test]
    fn no_odd_loops_when_the_ray_is_removed() {
        // Kill every point with y <= -1: no edge crossing the ray survives.
        let d = build_domain(4).unwrap();
        let killed: Vec<_> = d.interior().iter().copied().filter(|p| p.y <= -1).collect();
        let r = m_odd_with_killed(&d, &killed).unwrap();
        assert_eq!(r.m_odd, 0.0);
        assert!((r.log_det_signed - r.log_det_unsigned).abs() < 1e-12);
    }

    #[test]
    fn nondecreasing_in_n() {
        let m: Vec<f64> = (2..=10)
            .map(|n| m_odd(&build_domain(n).unwrap()).unwrap().m_odd)
            .collect();
        assert!(m.windows(2).all(|w| w[1] >= w[0]), "{m:?}");
        assert!(m[0] > 0.0);
    }

    #[test]
    fn geometric_tail_on_exact_geometric_series() {
        let terms: Vec<f64> = (0..8).map(|k| 0.5f64.powi(k)).collect();
        // True tail: 0.5^8 + ... = 0.5^7; estimate doubles it.
        assert!((geometric_tail(&terms) - 2.0 * 0.5f64.powi(7)).abs() < 1e-15);
        assert_eq!(geometric_tail(&terms[..2]), f64::INFINITY);
    }

    #[test]
    fn smallest_odd_loops_are_the_two_squares_below_the_marked_edge() {
        let d = build_domain(2).unwrap();
        let s = LoopSeries::enumerate(&d, 4, EnumerationCaps::default()).unwrap();
        assert_eq!(s.odd[0], 0.0);
        assert!((s.odd[1] - 2.0 / 256.0).abs() < 1e-18);
    }
}
