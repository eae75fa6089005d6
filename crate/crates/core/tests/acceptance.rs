//! Acceptance criteria, one PASS/FAIL line each.

use std::process::ExitCode;
use std::time::Instant;

use lerw_core::harmonic::escape_r;
use lerw_core::harness::{fit_exponent, run_loop_law, run_scan, run_verify, ScanResult};
use lerw_core::identity::{
    all_pairs_census, crossing_census, lhs_theorem31, IdentityContext, LogValue,
};
use lerw_core::lattice::build_domain;
use lerw_core::loopmeasure::{brownian_odd_constant, LoopSeries};
use lerw_core::montecarlo::{estimate_edge_probability, McConfig};
use lerw_core::walks::EnumerationCaps;
use lerw_core::Result;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Result<Outcome> + 'a>);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome {
        passed,
        detail: detail.into(),
    })
}

const CAPS: EnumerationCaps = EnumerationCaps {
    saw_n: 4,
    loop_len: 16,
};

fn crossing_identity() -> Result<Outcome> {
    let checks = run_verify(3, CAPS)?;
    let identity: Vec<_> = checks
        .iter()
        .filter(|c| c.name.ends_with("edge identity (crossing)"))
        .collect();
    let worst = identity.iter().map(|c| c.value).fold(0.0, f64::max);
    outcome(
        identity.len() == 2 && identity.iter().all(|c| c.passed),
        format!("n=2,3 worst relative error {worst:.3e} (< 1e-9)"),
    )
}

fn pair_identity() -> Result<Outcome> {
    let d = build_domain(2)?;
    let all = all_pairs_census(&d, CAPS)?;
    let ctx = IdentityContext::with_profile(&d)?;
    let (mut worst, mut zeros, mut pairs, mut zero_mismatch) = (0.0f64, 0, 0, 0);
    for &z1 in d.boundary() {
        for &z2 in d.boundary() {
            let lhs = LogValue::of(all.edge_mass_by_pair.get(&(z1, z2)).copied().unwrap_or(0.0));
            let rep = ctx.theorem51(z1, z2)?.with_lhs(lhs);
            pairs += 1;
            if lhs.is_zero() || rep.rhs_log.is_zero() {
                zeros += 1;
                if lhs != rep.rhs_log {
                    zero_mismatch += 1;
                }
            } else {
                worst = worst.max(rep.discrepancy.expect("lhs attached"));
            }
        }
    }
    outcome(
        worst < 1e-9 && zero_mismatch == 0,
        format!("n=2, {pairs} ordered pairs, worst {worst:.3e}, {zeros} exact zeros, {zero_mismatch} zero mismatches"),
    )
}

fn exponent(scan: &ScanResult) -> Result<Outcome> {
    let rows = scan.rows.iter().filter(|r| r.n >= 16).cloned().collect();
    let fit = fit_exponent(&ScanResult { rows })?;
    outcome(
        (-0.80..=-0.70).contains(&fit.slope) && fit.r_squared > 0.999,
        format!("n=16..128 slope {:.4}, r^2 {:.6}", fit.slope, fit.r_squared),
    )
}

fn loop_law() -> Result<Outcome> {
    let rows = run_loop_law(&[32, 64, 128, 256])?;
    let dev: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let range =
        dev.iter().cloned().fold(f64::MIN, f64::max) - dev.iter().cloned().fold(f64::MAX, f64::min);
    let target = std::f64::consts::LN_2 / 8.0;
    let incs: Vec<f64> = rows.windows(2).map(|w| w[1].m_odd - w[0].m_odd).collect();
    let worst_inc = incs.iter().map(|i| (i - target).abs()).fold(0.0, f64::max);
    outcome(
        range < 0.05 && worst_inc < 0.02,
        format!(
            "deviation range {range:.4} (< 0.05), increments {:?} vs {target:.4} (worst gap {worst_inc:.4})",
            incs.iter().map(|i| format!("{i:.4}")).collect::<Vec<_>>()
        ),
    )
}

fn escape_scaling(scan: &ScanResult) -> Result<Outcome> {
    let mut vals: Vec<(u32, f64)> = scan.rows.iter().map(|r| (r.n, r.r_n)).collect();
    vals.push((256, escape_r(&build_domain(256)?)?));
    let scaled: Vec<f64> = vals.iter().map(|&(n, r)| r * (n as f64).sqrt()).collect();
    let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
    outcome(
        hi / lo < 2.0,
        format!(
            "R_n sqrt(n) over n=8..256 in [{lo:.4}, {hi:.4}], ratio {:.4} (< 2)",
            hi / lo
        ),
    )
}

fn brownian() -> Result<Outcome> {
    let c = brownian_odd_constant(1_000_000);
    outcome(
        (c - 0.125).abs() < 1e-6,
        format!("{c:.10} vs 0.125 (gap {:.2e})", (c - 0.125).abs()),
    )
}

fn monte_carlo(scan: &ScanResult) -> Result<Outcome> {
    let exact16 = scan
        .rows
        .iter()
        .find(|r| r.n == 16)
        .expect("n=16 scanned")
        .edge_prob_exact;
    let est = estimate_edge_probability(&McConfig::new(16, 1_000_000, 2024))?;
    let z = (est.mean - exact16).abs() / est.std_error;

    let exact2 = lhs_theorem31(&build_domain(2)?, CAPS)?.exp();
    let mut covered = 0;
    for seed in 0..50 {
        let e = estimate_edge_probability(&McConfig::new(2, 100_000, 1000 + seed))?;
        let (lo, hi) = e.interval(1.96);
        if (lo..=hi).contains(&exact2) {
            covered += 1;
        }
    }
    outcome(
        z < 4.0 && covered >= 43,
        format!(
            "n=16: {:.6e} ± {:.2e} vs {exact16:.6e} ({z:.2} sigma); n=2: {covered}/50 intervals cover",
            est.mean, est.std_error
        ),
    )
}

fn parity() -> Result<Outcome> {
    let (mut saws, mut bad) = (0, 0);
    for n in 2..=3 {
        let c = crossing_census(&build_domain(n)?, CAPS)?;
        saws += c.edge_saws;
        bad += c.parity_violations;
    }
    outcome(
        bad == 0,
        format!("{saws} SAWs through {{0,1}} at n=2,3, {bad} violations"),
    )
}

fn normalization(scan: &ScanResult) -> Result<Outcome> {
    let checks = run_verify(3, CAPS)?;
    let norm: Vec<_> = checks
        .iter()
        .filter(|c| c.name.ends_with("total SAW mass = f(n)"))
        .collect();
    let worst = norm.iter().map(|c| c.value).fold(0.0, f64::max);
    let f: Vec<f64> = scan.rows.iter().map(|r| r.f_n).collect();
    let gaps: Vec<f64> = f.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let cauchy = gaps.windows(2).all(|g| g[1] < g[0]);
    outcome(
        norm.len() == 2 && norm.iter().all(|c| c.passed) && cauchy,
        format!(
            "n=2,3 worst {worst:.3e}; f(n) gaps over n=8..128: {:?}",
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>()
        ),
    )
}

fn loop_oracle() -> Result<Outcome> {
    let d = build_domain(2)?;
    let series = LoopSeries::enumerate(&d, 14, CAPS)?;
    let ctx = IdentityContext::new(&d)?;
    let m = series.m_odd();
    let q = series.log_q01();
    let m_exact = ctx.two_m_odd() / 2.0;
    let q_exact = ctx.log_q01();
    outcome(
        m.contains(m_exact) && q.contains(q_exact),
        format!(
            "m_odd {m_exact:.6} vs {:.6} ± {:.2e}; ln Q01 {q_exact:.6} vs {:.6} ± {:.2e}",
            m.partial, m.tail_bound, q.partial, q.tail_bound
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let scan = match run_scan(&[8, 16, 32, 64, 128], None) {
        Ok(s) => s,
        Err(e) => {
            println!("FAIL scan over n=8..128 could not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let criteria: Vec<Criterion> = vec![
        ("1 crossing edge identity", Box::new(crossing_identity)),
        ("2 boundary-pair edge identity", Box::new(pair_identity)),
        ("3 edge exponent", Box::new(|| exponent(&scan))),
        ("4 odd-loop mass law", Box::new(loop_law)),
        (
            "5 escape probability scaling",
            Box::new(|| escape_scaling(&scan)),
        ),
        ("6 Brownian odd-loop constant", Box::new(brownian)),
        (
            "7 Monte Carlo cross-validation",
            Box::new(|| monte_carlo(&scan)),
        ),
        ("8 parity of edge SAWs", Box::new(parity)),
        (
            "9 normalization and f(n) convergence",
            Box::new(|| normalization(&scan)),
        ),
        ("10 truncated loop oracle", Box::new(loop_oracle)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let t = Instant::now();
        let (ok, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!(
            "{} [{name}] {detail} ({:.1}s)",
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
