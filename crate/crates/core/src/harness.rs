//! Experiment orchestration: scans over `n`, exponent fits, loop-law and Φ
//! tables, the exhaustive verification suite, and report serialization.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LerwError, Result};
use crate::greens::log_q01;
use crate::harmonic::{crossing_mass, escape_r};
use crate::identity::{all_pairs_census, crossing_census, IdentityContext, LogValue};
use crate::lattice::{build_domain, LatticePoint};
use crate::loopmeasure::{m_odd, LoopSeries};
use crate::montecarlo::{estimate_edge_probability, McConfig};
use crate::walks::EnumerationCaps;

pub const TOOL: &str = "lerw-edge";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const CSV_HEADER: [&str; 8] = [
    "n",
    "f_n",
    "R_n",
    "logQ01",
    "m_odd",
    "edge_prob_exact",
    "edge_prob_mc",
    "mc_stderr",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u32,
    pub f_n: f64,
    #[serde(rename = "R_n")]
    pub r_n: f64,
    #[serde(rename = "logQ01")]
    pub log_q01: f64,
    pub m_odd: f64,
    pub edge_prob_exact: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_prob_mc: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_stderr: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
}

fn scan_row(n: u32, mc: Option<&McConfig>) -> Result<ScanRow> {
    let d = build_domain(n)?;
    let ((ctx, r), (f, est)) = rayon::join(
        || rayon::join(|| IdentityContext::new(&d), || escape_r(&d)),
        || {
            rayon::join(
                || crossing_mass(&d),
                || {
                    mc.map(|c| estimate_edge_probability(&McConfig { n, ..c.clone() }))
                        .transpose()
                },
            )
        },
    );
    let ctx = ctx?;
    let r_n = r?;
    let rhs = ctx.theorem31(r_n)?;
    let est = est?;
    Ok(ScanRow {
        n,
        f_n: f?,
        r_n,
        log_q01: ctx.log_q01(),
        m_odd: ctx.two_m_odd() / 2.0,
        edge_prob_exact: rhs.edge_probability(),
        edge_prob_mc: est.as_ref().map(|e| e.mean),
        mc_stderr: est.as_ref().map(|e| e.std_error),
    })
}

/// Exact columns for every `n`, plus Monte Carlo columns when `mc` is given
/// (its `n` is replaced row by row).
pub fn run_scan(n_list: &[u32], mc: Option<&McConfig>) -> Result<ScanResult> {
    if let Some(w) = n_list.windows(2).find(|w| w[0] >= w[1]) {
        return Err(LerwError::precondition(format!(
            "n list must be strictly ascending ({} then {})",
            w[0], w[1]
        )));
    }
    let rows = n_list
        .par_iter()
        .map(|&n| scan_row(n, mc).map_err(|e| e.at_n(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScanResult { rows })
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_range: (u32, u32),
}

/// Least squares of `ln y` against `ln x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    if points.len() < 2 || points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(LerwError::precondition(
            "power-law fit needs at least two points with positive coordinates",
        ));
    }
    let k = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok((slope, intercept, r_squared))
}

/// Fits `edge_prob_exact ≈ e^intercept · n^slope`.
pub fn fit_exponent(s: &ScanResult) -> Result<ExponentFit> {
    if s.rows.len() < 4 {
        return Err(LerwError::precondition(format!(
            "exponent fit needs at least 4 rows, got {}",
            s.rows.len()
        )));
    }
    let pts: Vec<(f64, f64)> = s
        .rows
        .iter()
        .map(|r| (r.n as f64, r.edge_prob_exact))
        .collect();
    let (slope, intercept, r_squared) = fit_power_law(&pts)?;
    Ok(ExponentFit {
        slope,
        intercept,
        r_squared,
        n_range: (s.rows[0].n, s.rows[s.rows.len() - 1].n),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopLawRow {
    pub n: u32,
    pub m_odd: f64,
    /// `m_odd - ln(n) / 8`
    pub deviation: f64,
}

pub fn run_loop_law(n_list: &[u32]) -> Result<Vec<LoopLawRow>> {
    n_list
        .par_iter()
        .map(|&n| {
            let m = build_domain(n)
                .and_then(|d| m_odd(&d))
                .map_err(|e| e.at_n(n))?
                .m_odd;
            Ok(LoopLawRow {
                n,
                m_odd: m,
                deviation: m - (n as f64).ln() / 8.0,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhiRow {
    pub zeta1: LatticePoint,
    pub zeta2: LatticePoint,
    pub phi: f64,
    pub rhs_theorem51: LogValue,
    pub degenerate: bool,
}

/// Every ordered pair among every `stride`-th boundary point (raster order).
pub fn run_phi_sweep(n: u32, stride: usize) -> Result<Vec<PhiRow>> {
    if stride == 0 {
        return Err(LerwError::precondition("stride must be positive"));
    }
    let d = build_domain(n)?;
    let ctx = IdentityContext::with_profile(&d)?;
    let profile = ctx.profile().expect("profile requested");
    let picked: Vec<LatticePoint> = d.boundary().iter().copied().step_by(stride).collect();
    let mut rows = Vec::with_capacity(picked.len() * picked.len());
    for &z1 in &picked {
        for &z2 in &picked {
            let rep = ctx.theorem51(z1, z2)?;
            rows.push(PhiRow {
                zeta1: z1,
                zeta2: z2,
                phi: profile.phi(z1, z2)?,
                rhs_theorem51: rep.rhs_log,
                degenerate: rep.degenerate,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
}

impl VerifyCheck {
    fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        VerifyCheck {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
        }
    }
}

pub const IDENTITY_TOLERANCE: f64 = 1e-9;
pub const LOOP_ORACLE_LENGTH: usize = 14;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// The exhaustive oracle suite: identities, parity, normalization, the Λ
/// routes, the endpoint decomposition and the truncated loop sums.
pub fn run_verify(n_max: u32, caps: EnumerationCaps) -> Result<Vec<VerifyCheck>> {
    if !(2..=caps.saw_n).contains(&n_max) {
        return Err(LerwError::precondition(format!(
            "n-max must lie in 2..={} (the SAW enumeration cap)",
            caps.saw_n
        )));
    }
    let mut checks = Vec::new();
    for n in 2..=n_max {
        let d = build_domain(n)?;
        let census = crossing_census(&d, caps)?;
        let ctx = IdentityContext::new(&d)?;
        let rhs = ctx
            .theorem31(escape_r(&d)?)?
            .with_lhs(LogValue::of(census.edge_mass));
        let f = crossing_mass(&d)?;
        let lambda = rhs.lambda_log.exp();
        let two_m = ctx.two_m_odd();
        let (lo, hi) = census.odd_loop_gap.unwrap_or((f64::NAN, f64::NAN));
        checks.push(VerifyCheck::at_most(
            format!("n={n} edge identity (crossing)"),
            rhs.discrepancy.expect("lhs attached"),
            IDENTITY_TOLERANCE,
        ));
        checks.push(VerifyCheck::at_most(
            format!("n={n} parity (-1)^J Y = 1"),
            census.parity_violations as f64,
            0.0,
        ));
        checks.push(VerifyCheck::at_most(
            format!("n={n} total SAW mass = f(n)"),
            rel(census.total_mass, f),
            IDENTITY_TOLERANCE,
        ));
        checks.push(VerifyCheck::at_most(
            format!("n={n} lambda via signed SAW sum"),
            rel(census.edge_signed_mass, lambda),
            IDENTITY_TOLERANCE,
        ));
        checks.push(VerifyCheck::at_most(
            format!("n={n} ln F - ln Q = 2 m_odd on every edge SAW"),
            (lo - two_m).abs().max((hi - two_m).abs()),
            IDENTITY_TOLERANCE,
        ));
    }

    let d = build_domain(2)?;
    let all = all_pairs_census(&d, caps)?;
    let ctx = IdentityContext::with_profile(&d)?;
    let mut worst = 0.0f64;
    for &z1 in d.boundary() {
        for &z2 in d.boundary() {
            let lhs = LogValue::of(all.edge_mass_by_pair.get(&(z1, z2)).copied().unwrap_or(0.0));
            let rep = ctx.theorem51(z1, z2)?.with_lhs(lhs);
            worst = worst.max(rep.discrepancy.expect("lhs attached"));
        }
    }
    checks.push(VerifyCheck::at_most(
        "n=2 edge identity, all boundary pairs",
        worst,
        IDENTITY_TOLERANCE,
    ));
    let by_sides: f64 = all
        .edge_mass_by_pair
        .iter()
        .filter(|((a, b), _)| d.is_left(*a) && d.is_right(*b))
        .map(|(_, m)| m)
        .sum();
    let crossing = crossing_census(&d, caps)?.edge_mass;
    checks.push(VerifyCheck::at_most(
        "n=2 pair sums over left x right = crossing sum",
        rel(by_sides, crossing),
        IDENTITY_TOLERANCE,
    ));

    let series = LoopSeries::enumerate(&d, LOOP_ORACLE_LENGTH, caps)?;
    let m = series.m_odd();
    let m_exact = ctx.two_m_odd() / 2.0;
    checks.push(VerifyCheck::at_most(
        "n=2 m_odd vs loops up to length 14",
        (m.partial - m_exact).abs(),
        m.tail_bound,
    ));
    let q = series.log_q01();
    checks.push(VerifyCheck::at_most(
        "n=2 ln Q01 vs loops up to length 14",
        (q.partial - log_q01(&d)?).abs(),
        q.tail_bound,
    ));
    Ok(checks)
}

/// JSON report with stable top-level keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub params: Value,
    pub rows: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<ExponentFit>,
}

impl Report {
    pub fn new(command: &str, params: &impl Serialize, rows: &impl Serialize) -> Self {
        Report {
            tool: TOOL.to_string(),
            version: VERSION.to_string(),
            command: command.to_string(),
            params: serde_json::to_value(params).expect("params serialize"),
            rows: serde_json::to_value(rows).expect("rows serialize"),
            fit: None,
        }
    }

    pub fn with_fit(mut self, fit: ExponentFit) -> Self {
        self.fit = Some(fit);
        self
    }

    pub fn to_json(&self) -> String {
        to_json_string(self)
    }
}

/// Formats floats with 17 significant digits.
fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

struct Digits17;

impl serde_json::ser::Formatter for Digits17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        w.write_all(format_float(v).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> std::io::Result<()> {
        self.write_f64(w, v as f64)
    }
}

/// Compact JSON with every float written to 17 significant digits.
pub fn to_json_string<T: Serialize + ?Sized>(v: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Digits17);
    v.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// Writes scan rows as CSV under [`CSV_HEADER`]; absent values are empty.
pub fn write_scan_csv<W: Write>(rows: &[ScanRow], out: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.n.to_string(),
            format_float(r.f_n),
            format_float(r.r_n),
            format_float(r.log_q01),
            format_float(r.m_odd),
            format_float(r.edge_prob_exact),
            opt(r.edge_prob_mc),
            opt(r.mc_stderr),
        ])?;
    }
    w.flush()
}

/// Optional settings read from a JSON file; command-line flags override them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub threads: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub chunk: Option<u64>,
    pub stride: Option<usize>,
    pub saw_cap: Option<u32>,
    pub loop_len_cap: Option<usize>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            LerwError::precondition(format!("cannot read config {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| LerwError::precondition(format!("bad config {}: {e}", path.display())))
    }

    pub fn caps(&self) -> EnumerationCaps {
        let def = EnumerationCaps::default();
        EnumerationCaps {
            saw_n: self.saw_cap.unwrap_or(def.saw_n),
            loop_len: self.loop_len_cap.unwrap_or(def.loop_len),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_power_law_is_recovered() {
        let rows = [8u32, 16, 32, 64]
            .iter()
            .map(|&n| ScanRow {
                n,
                f_n: 1.0,
                r_n: 1.0,
                log_q01: 0.0,
                m_odd: 0.0,
                edge_prob_exact: 0.3 * (n as f64).powf(-0.75),
                edge_prob_mc: None,
                mc_stderr: None,
            })
            .collect();
        let fit = fit_exponent(&ScanResult { rows }).unwrap();
        assert!((fit.slope + 0.75).abs() < 1e-12);
        assert!((fit.intercept - 0.3f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(fit.n_range, (8, 64));
        assert!(fit_exponent(&ScanResult::default()).is_err());
    }

    #[test]
    fn scan_is_monotone_and_sorted() {
        assert!(run_scan(&[], None).unwrap().rows.is_empty());
        assert!(run_scan(&[8, 4], None).is_err());
        let s = run_scan(&[4, 8, 16], None).unwrap();
        let n: Vec<u32> = s.rows.iter().map(|r| r.n).collect();
        assert_eq!(n, [4, 8, 16]);
        assert!(s
            .rows
            .windows(2)
            .all(|w| w[1].edge_prob_exact < w[0].edge_prob_exact));
        assert!(s.rows.iter().all(|r| r.edge_prob_exact > 0.0));
    }

    #[test]
    fn scan_error_names_the_row() {
        let e = run_scan(&[2, 5000], None).unwrap_err();
        assert!(matches!(e, LerwError::DomainSize(5000)));
    }

    #[test]
    fn scan_with_mc_at_n8() {
        let cfg = McConfig::new(0, 200_000, 7);
        let s = run_scan(&[8], Some(&cfg)).unwrap();
        let r = &s.rows[0];
        let (mc, se) = (r.edge_prob_mc.unwrap(), r.mc_stderr.unwrap());
        assert!((mc - r.edge_prob_exact).abs() < 4.0 * se, "{r:?}");
    }

    #[test]
    fn loop_law_rows() {
        let rows = run_loop_law(&[2, 4]).unwrap();
        assert_eq!(rows[0].n, 2);
        assert!(rows[0].deviation.is_finite());
        assert!((rows[1].m_odd - rows[1].deviation - 4f64.ln() / 8.0).abs() < 1e-15);
    }

    #[test]
    fn phi_sweep_diagonal_zero() {
        let rows = run_phi_sweep(3, 3).unwrap();
        for r in &rows {
            if r.zeta1 == r.zeta2 {
                assert_eq!(r.phi, 0.0);
                assert_eq!(r.rhs_theorem51, LogValue::Zero);
            }
        }
        assert!(run_phi_sweep(3, 0).is_err());
    }

    #[test]
    fn verify_suite_passes_at_n2() {
        let checks = run_verify(2, EnumerationCaps::default()).unwrap();
        for c in &checks {
            assert!(c.passed, "{c:?}");
        }
        assert!(run_verify(5, EnumerationCaps::default()).is_err());
    }

    #[test]
    fn json_uses_17_digits_and_round_trips() {
        let s = run_scan(&[3], None).unwrap();
        let rep = Report::new("scan", &serde_json::json!({"n": [3]}), &s.rows);
        let text = rep.to_json();
        assert!(text.starts_with(r#"{"tool":"lerw-edge","version":"#));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), text);
        let rows: Vec<ScanRow> = serde_json::from_value(back.rows).unwrap();
        assert_eq!(rows, s.rows);
        assert_eq!(to_json_string(&0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn csv_header_and_empty_cells() {
        let s = run_scan(&[3], None).unwrap();
        let mut out = Vec::new();
        write_scan_csv(&s.rows, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n,f_n,R_n,logQ01,m_odd,edge_prob_exact,edge_prob_mc,mc_stderr"
        );
        assert!(lines.next().unwrap().ends_with(",,"));
    }

    #[test]
    fn config_parsing() {
        let dir = std::env::temp_dir().join(format!("lerw-cfg-{}", std::process::id()));
        std::fs::write(&dir, r#"{"samples": 10, "saw_cap": 3}"#).unwrap();
        let c = Config::from_file(&dir).unwrap();
        assert_eq!(c.samples, Some(10));
        assert_eq!(c.caps().saw_n, 3);
        std::fs::write(&dir, r#"{"bogus": 1}"#).unwrap();
        assert!(Config::from_file(&dir).is_err());
        std::fs::remove_file(&dir).unwrap();
        assert!(Config::from_file(&dir).is_err());
    }
}
