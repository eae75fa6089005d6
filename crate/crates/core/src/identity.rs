//! Both sides of the edge identities.
//!
//! With `W*` the crossing SAWs through `{0, 1}`,
//!
//! ```text
//! 4 Σ_{η ∈ W*} p̂(η) = Q_01(A_n) R_n² exp{2 m(J)}
//! ```
//!
//! and for boundary points `ζ1, ζ2` the same holds with `R_n²` replaced by
//! `Φ_n(ζ1, ζ2)` and `W*` by the SAWs from `ζ1` to `ζ2` through `{0, 1}`.
//! The right-hand sides come from linear algebra; the left-hand sides from
//! exhaustive enumeration.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};
use crate::greens::{log_q01, GreensTable};
use crate::harmonic::{escape_r, EscapeProfile};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::loopmeasure::m_odd;
use crate::walks::{
    crossing_number_of, uses_marked_edge, visit_saws_from, EnumerationCaps, SawVisitor,
};

const LN_4: f64 = 2.0 * LN_2;

/// Φ below this fraction of the two products it is built from counts as zero.
pub const PHI_ZERO_RELATIVE: f64 = 1e-12;

/// Natural log of a nonnegative quantity, with zero kept exact.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogValue {
    Zero,
    Log(f64),
}

impl LogValue {
    pub fn of(x: f64) -> Self {
        if x == 0.0 {
            LogValue::Zero
        } else {
            LogValue::Log(x.ln())
        }
    }

    pub fn exp(self) -> f64 {
        match self {
            LogValue::Zero => 0.0,
            LogValue::Log(l) => l.exp(),
        }
    }

    pub fn log(self) -> Option<f64> {
        match self {
            LogValue::Zero => None,
            LogValue::Log(l) => Some(l),
        }
    }

    pub fn is_zero(self) -> bool {
        self == LogValue::Zero
    }

    /// `self + c` in log space; zero stays zero.
    pub fn shift(self, c: f64) -> Self {
        match self {
            LogValue::Zero => LogValue::Zero,
            LogValue::Log(l) => LogValue::Log(l + c),
        }
    }

    /// `|a - b| / max(a, b)` for the underlying values: zero when both are
    /// zero, one when exactly one is, and `≈ |Δ log|` otherwise.
    pub fn relative_gap(self, other: Self) -> f64 {
        match (self, other) {
            (LogValue::Zero, LogValue::Zero) => 0.0,
            (LogValue::Zero, _) | (_, LogValue::Zero) => 1.0,
            (LogValue::Log(a), LogValue::Log(b)) => -(-(a - b).abs()).exp_m1(),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Variant {
    Theorem31,
    Theorem51 {
        zeta1: LatticePoint,
        zeta2: LatticePoint,
    },
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factors {
    #[serde(rename = "logQ01")]
    pub log_q01: f64,
    /// `2 ln R_n`, or `ln Φ_n(ζ1, ζ2)`.
    #[serde(rename = "logR_terms")]
    pub log_r_terms: LogValue,
    pub two_m_odd: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub n: u32,
    pub variant: Variant,
    /// Exhaustive-enumeration value, small `n` only.
    pub lhs_log: Option<LogValue>,
    pub rhs_log: LogValue,
    pub factors: Factors,
    /// `ln Λ_n = ln(Q_01 · (R terms) / 4)`.
    pub lambda_log: LogValue,
    /// Relative gap between the two sides; see [`LogValue::relative_gap`].
    pub discrepancy: Option<f64>,
    /// Φ vanished by cancellation although `ζ1 ≠ ζ2`.
    pub degenerate: bool,
}

impl IdentityReport {
    fn assemble(n: u32, variant: Variant, factors: Factors, degenerate: bool) -> Self {
        let lambda_log = factors.log_r_terms.shift(factors.log_q01 - LN_4);
        IdentityReport {
            n,
            variant,
            lhs_log: None,
            rhs_log: lambda_log.shift(factors.two_m_odd),
            factors,
            lambda_log,
            discrepancy: None,
            degenerate,
        }
    }

    /// Attaches an exhaustive left-hand side.
    pub fn with_lhs(mut self, lhs: LogValue) -> Self {
        self.discrepancy = Some(lhs.relative_gap(self.rhs_log));
        self.lhs_log = Some(lhs);
        self
    }

    /// `Σ_{W*} p̂` from the right-hand side.
    pub fn edge_probability(&self) -> f64 {
        self.rhs_log.exp()
    }
}

/// The factors shared by every right-hand side on one domain.
#[derive(Clone, Debug)]
pub struct IdentityContext {
    n: u32,
    log_q01: f64,
    two_m_odd: f64,
    profile: Option<EscapeProfile>,
}

impl IdentityContext {
    /// `Q_01` and `m_odd` only.
    pub fn new(d: &LatticeDomain) -> Result<Self> {
        let (q, m) = rayon::join(|| log_q01(d), || m_odd(d));
        Ok(IdentityContext {
            n: d.n(),
            log_q01: q?,
            two_m_odd: 2.0 * m?.m_odd,
            profile: None,
        })
    }

    /// Also computes the signed exit profile needed for Φ.
    pub fn with_profile(d: &LatticeDomain) -> Result<Self> {
        let mut ctx = Self::new(d)?;
        ctx.profile = Some(EscapeProfile::compute(d)?);
        Ok(ctx)
    }

    pub fn log_q01(&self) -> f64 {
        self.log_q01
    }

    pub fn two_m_odd(&self) -> f64 {
        self.two_m_odd
    }

    pub fn profile(&self) -> Option<&EscapeProfile> {
        self.profile.as_ref()
    }

    pub fn theorem31(&self, r_n: f64) -> Result<IdentityReport> {
        if !(r_n > 0.0) {
            return Err(LerwError::numerical(format!("R_{} = {r_n:e}", self.n)));
        }
        let factors = Factors {
            log_q01: self.log_q01,
            log_r_terms: LogValue::Log(2.0 * r_n.ln()),
            two_m_odd: self.two_m_odd,
        };
        Ok(IdentityReport::assemble(
            self.n,
            Variant::Theorem31,
            factors,
            false,
        ))
    }

    pub fn theorem51(&self, z1: LatticePoint, z2: LatticePoint) -> Result<IdentityReport> {
        let profile = self
            .profile
            .as_ref()
            .ok_or_else(|| LerwError::precondition("context built without the escape profile"))?;
        let (a, b) = profile.phi_terms(z1, z2)?;
        let phi = (a - b).abs();
        let (log_r_terms, degenerate) = if z1 == z2 {
            (LogValue::Zero, false)
        } else if phi <= PHI_ZERO_RELATIVE * (a.abs() + b.abs()) {
            (LogValue::Zero, true)
        } else {
            (LogValue::of(phi), false)
        };
        let factors = Factors {
            log_q01: self.log_q01,
            log_r_terms,
            two_m_odd: self.two_m_odd,
        };
        let variant = Variant::Theorem51 {
            zeta1: z1,
            zeta2: z2,
        };
        Ok(IdentityReport::assemble(
            self.n, variant, factors, degenerate,
        ))
    }
}

pub fn rhs_theorem31(d: &LatticeDomain) -> Result<IdentityReport> {
    let (ctx, r) = rayon::join(|| IdentityContext::new(d), || escape_r(d));
    ctx?.theorem31(r?)
}

pub fn rhs_theorem51(
    d: &LatticeDomain,
    z1: LatticePoint,
    z2: LatticePoint,
) -> Result<IdentityReport> {
    if !d.is_boundary(z1) || !d.is_boundary(z2) {
        return Err(LerwError::precondition(format!(
            "{z1} and {z2} must both lie on the boundary of A_{}",
            d.n()
        )));
    }
    IdentityContext::with_profile(d)?.theorem51(z1, z2)
}

/// Totals from one exhaustive pass over boundary-to-boundary SAWs.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SawCensus {
    pub saws: u64,
    pub edge_saws: u64,
    /// `Σ p̂(η)` over all enumerated SAWs.
    pub total_mass: f64,
    /// `Σ p̂(η)` over those using `{0, 1}`.
    pub edge_mass: f64,
    /// `Σ p(η) Q_η` over those using `{0, 1}`.
    pub edge_signed_mass: f64,
    /// SAWs through `{0, 1}` with `(-1)^J Y ≠ 1`.
    pub parity_violations: u64,
    /// Range of `ln F_η - ln Q_η` over SAWs through `{0, 1}`.
    pub odd_loop_gap: Option<(f64, f64)>,
    /// Edge mass keyed by `(start, end)`.
    pub edge_mass_by_pair: BTreeMap<(LatticePoint, LatticePoint), f64>,
}

impl SawCensus {
    fn record(&mut self, path: &[LatticePoint], log_f: f64, log_q: f64) {
        let steps = (path.len() - 1) as f64;
        let p_hat = (log_f - steps * LN_4).exp();
        self.saws += 1;
        self.total_mass += p_hat;
        if !uses_marked_edge(path) {
            return;
        }
        self.edge_saws += 1;
        self.edge_mass += p_hat;
        self.edge_signed_mass += (log_q - steps * LN_4).exp();
        let y: i32 = path
            .windows(2)
            .map(|s| match (s[0], s[1]) {
                (LatticePoint::ORIGIN, LatticePoint::ONE) => 1,
                (LatticePoint::ONE, LatticePoint::ORIGIN) => -1,
                _ => 0,
            })
            .sum();
        let sign = if crossing_number_of(path).is_multiple_of(2) {
            1
        } else {
            -1
        };
        if sign * y != 1 {
            self.parity_violations += 1;
        }
        let gap = log_f - log_q;
        self.odd_loop_gap = Some(match self.odd_loop_gap {
            None => (gap, gap),
            Some((lo, hi)) => (lo.min(gap), hi.max(gap)),
        });
        let key = (path[0], *path.last().expect("nonempty path"));
        *self.edge_mass_by_pair.entry(key).or_insert(0.0) += p_hat;
    }
}

struct CensusVisitor<'a, 'c, A: Fn(LatticePoint) -> bool> {
    table: GreensTable<'a>,
    accept: A,
    log_f: Vec<f64>,
    log_q: Vec<f64>,
    error: Option<LerwError>,
    census: &'c mut SawCensus,
}

impl<A: Fn(LatticePoint) -> bool> SawVisitor for CensusVisitor<'_, '_, A> {
    fn accepts_end(&self, end: LatticePoint) -> bool {
        (self.accept)(end)
    }

    fn enter(&mut self, p: LatticePoint) {
        let (f, q) = (
            *self.log_f.last().unwrap_or(&0.0),
            *self.log_q.last().unwrap_or(&0.0),
        );
        match self.table.push(p) {
            Ok(()) => {
                self.log_f.push(f + self.table.last_unsigned().ln());
                self.log_q.push(q + self.table.last_signed().ln());
            }
            Err(e) => {
                self.error.get_or_insert(e);
                self.log_f.push(f64::NAN);
                self.log_q.push(f64::NAN);
            }
        }
    }

    fn leave(&mut self, p: LatticePoint) {
        self.log_f.pop();
        self.log_q.pop();
        if self.table.killed_prefix().last() == Some(&p) {
            self.table.pop();
        }
    }

    fn complete(&mut self, path: &[LatticePoint]) {
        if self.error.is_none() {
            let f = *self.log_f.last().expect("interior prefix");
            let q = *self.log_q.last().expect("interior prefix");
            self.census.record(path, f, q);
        }
    }
}

fn check_cap(d: &LatticeDomain, caps: EnumerationCaps) -> Result<()> {
    if d.n() > caps.saw_n {
        return Err(LerwError::CapExceeded(format!(
            "SAW enumeration limited to n <= {}, got n = {}",
            caps.saw_n,
            d.n()
        )));
    }
    Ok(())
}

/// Enumerates every SAW from each of `starts` to a boundary point selected by
/// `accept`, with interior points in `A_n`.
pub fn saw_census(
    d: &LatticeDomain,
    starts: &[LatticePoint],
    accept: impl Fn(LatticePoint) -> bool,
    caps: EnumerationCaps,
) -> Result<SawCensus> {
    check_cap(d, caps)?;
    if let Some(z) = starts.iter().find(|z| !d.is_boundary(**z)) {
        return Err(LerwError::precondition(format!(
            "{z} is not a boundary point"
        )));
    }
    let mut census = SawCensus::default();
    let mut v = CensusVisitor {
        table: GreensTable::new(d)?,
        accept,
        log_f: Vec::new(),
        log_q: Vec::new(),
        error: None,
        census: &mut census,
    };
    for &z in starts {
        visit_saws_from(d, z, &mut v);
    }
    match v.error {
        Some(e) => Err(e),
        None => Ok(census),
    }
}

/// Census of the crossing SAWs `W_n` (left boundary to right boundary).
pub fn crossing_census(d: &LatticeDomain, caps: EnumerationCaps) -> Result<SawCensus> {
    saw_census(d, d.left_boundary(), |q| d.is_right(q), caps)
}

/// Census of all boundary-to-boundary SAWs, every ordered pair of endpoints.
pub fn all_pairs_census(d: &LatticeDomain, caps: EnumerationCaps) -> Result<SawCensus> {
    saw_census(d, d.boundary(), |_| true, caps)
}

/// `ln Σ_{η ∈ W*} p̂(η)` by exhaustive enumeration.
pub fn lhs_theorem31(d: &LatticeDomain, caps: EnumerationCaps) -> Result<LogValue> {
    Ok(LogValue::of(crossing_census(d, caps)?.edge_mass))
}

/// `ln Σ p̂(η)` over SAWs from `z1` to `z2` through `{0, 1}`.
pub fn lhs_theorem51(
    d: &LatticeDomain,
    z1: LatticePoint,
    z2: LatticePoint,
    caps: EnumerationCaps,
) -> Result<LogValue> {
    if !d.is_boundary(z2) {
        return Err(LerwError::precondition(format!(
            "{z2} is not a boundary point"
        )));
    }
    let census = saw_census(d, &[z1], |q| q == z2, caps)?;
    Ok(LogValue::of(census.edge_mass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::saw_measure;
    use crate::harmonic::crossing_mass;
    use crate::lattice::build_domain;
    use crate::walks::enumerate_crossing_saws;

    fn p(x: i32, y: i32) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    #[test]
    fn log_value_arithmetic() {
        assert_eq!(LogValue::of(0.0), LogValue::Zero);
        assert_eq!(LogValue::Zero.shift(3.0), LogValue::Zero);
        assert!((LogValue::of(2.0).exp() - 2.0).abs() < 1e-15);
        assert_eq!(LogValue::Zero.relative_gap(LogValue::Zero), 0.0);
        assert_eq!(LogValue::Zero.relative_gap(LogValue::Log(-50.0)), 1.0);
        let g = LogValue::of(1.0).relative_gap(LogValue::of(1.0 + 1e-10));
        assert!((g - 1e-10).abs() < 1e-15);
    }

    #[test]
    fn theorem31_at_n2() {
        let d = build_domain(2).unwrap();
        let rhs = rhs_theorem31(&d).unwrap();
        let lhs = lhs_theorem31(&d, EnumerationCaps::default()).unwrap();
        let r = rhs.with_lhs(lhs);
        assert!(r.discrepancy.unwrap() < 1e-9, "{r:?}");
        let f = crossing_mass(&d).unwrap();
        assert!(lhs.exp() > 0.0 && lhs.exp() <= f);
    }

    #[test]
    fn census_agrees_with_independent_saw_iterator() {
        let d = build_domain(2).unwrap();
        let c = crossing_census(&d, EnumerationCaps::default()).unwrap();
        let (mut count, mut total, mut edge) = (0u64, 0.0, 0.0);
        for eta in enumerate_crossing_saws(&d, EnumerationCaps::default()).unwrap() {
            let m = saw_measure(&d, &eta).unwrap().exp();
            count += 1;
            total += m;
            if eta.uses_marked_edge() {
                edge += m;
            }
        }
        assert_eq!(c.saws, count);
        assert!((c.total_mass - total).abs() < 1e-12 * total);
        assert!((c.edge_mass - edge).abs() < 1e-12 * edge);
    }

    #[test]
    fn normalization_parity_and_lambda_at_n2() {
        let d = build_domain(2).unwrap();
        let c = crossing_census(&d, EnumerationCaps::default()).unwrap();
        let f = crossing_mass(&d).unwrap();
        assert!((c.total_mass - f).abs() < 1e-9 * f);
        assert_eq!(c.parity_violations, 0);
        assert!(c.edge_saws > 0);

        let rhs = rhs_theorem31(&d).unwrap();
        let (lo, hi) = c.odd_loop_gap.unwrap();
        let two_m = rhs.factors.two_m_odd;
        assert!((lo - two_m).abs() < 1e-9 && (hi - two_m).abs() < 1e-9);
        // Λ via Σ p Q_η, via e^{-2m} Σ p̂, and via Q_01 R² / 4.
        let lambda = rhs.lambda_log.exp();
        assert!((c.edge_signed_mass - lambda).abs() < 1e-9 * lambda);
        assert!((c.edge_mass * (-two_m).exp() - lambda).abs() < 1e-9 * lambda);
    }

    #[test]
    fn theorem51_spot_checks_at_n2() {
        let d = build_domain(2).unwrap();
        let ctx = IdentityContext::with_profile(&d).unwrap();
        let caps = EnumerationCaps::default();
        for (z1, z2) in [
            (p(-2, 0), p(3, 0)),
            (p(0, 2), p(1, -2)),
            (p(-2, 1), p(-2, -1)),
        ] {
            let rhs = ctx.theorem51(z1, z2).unwrap();
            let lhs = lhs_theorem51(&d, z1, z2, caps).unwrap();
            let r = rhs.with_lhs(lhs);
            assert!(r.discrepancy.unwrap() < 1e-9, "{r:?}");
            let swapped = ctx.theorem51(z2, z1).unwrap();
            assert_eq!(swapped.rhs_log, r.rhs_log);
        }
        let same = ctx.theorem51(p(-2, 0), p(-2, 0)).unwrap();
        assert!(same.rhs_log.is_zero() && !same.degenerate);
        assert!(lhs_theorem51(&d, p(-2, 0), p(-2, 0), caps)
            .unwrap()
            .is_zero());
    }

    #[test]
    fn caps_and_preconditions() {
        let d = build_domain(5).unwrap();
        assert!(matches!(
            lhs_theorem31(&d, EnumerationCaps::default()),
            Err(LerwError::CapExceeded(_))
        ));
        let d = build_domain(2).unwrap();
        assert!(rhs_theorem51(&d, p(0, 0), p(3, 0)).is_err());
        assert!(lhs_theorem51(&d, p(0, 0), p(3, 0), EnumerationCaps::default()).is_err());
        let ctx = IdentityContext::new(&d).unwrap();
        assert!(ctx.theorem51(p(-2, 0), p(3, 0)).is_err());
    }

    #[test]
    fn report_invariant_and_serde() {
        let d = build_domain(3).unwrap();
        let r = rhs_theorem31(&d).unwrap();
        let f = r.factors;
        let expect = f.log_q01 + f.log_r_terms.log().unwrap() + f.two_m_odd - LN_4;
        assert!((r.rhs_log.log().unwrap() - expect).abs() < 1e-14);
        let json = serde_json::to_string(&r).unwrap();
        let back: IdentityReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
