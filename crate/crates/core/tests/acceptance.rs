//! Acceptance gate: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --release --test acceptance -- --test-threads 1`.

mod common;

use std::time::{Duration, Instant};

use gaussmax::covmodels::CorrelationModel;
use gaussmax::gpsim::{domain, path_max, substream, Backend, CholeskyFactor, GridSpec, PathSynth, RngStream};
use gaussmax::limitlaws::lambda_r_cdf;
use gaussmax::maxstats::{
    ks_two_sample, ks_two_sample_critical, run_experiment, EmpiricalCdf, ExperimentConfig, ExperimentReport,
};
use gaussmax::pickands::{default_schedule, estimate_h, DEFAULT_REPS, DEFAULT_STEP};

use common::{emit, grid_pickands_unit, lambda_r_oracle, report, sample_cov};

// Criterion 1
const C1_POINTS: usize = 64;
const C1_STEP: f64 = 0.1;
const C1_REPS: usize = 20_000;
const C1_SE_MULT: f64 = 4.0;
const C1_BUDGET: Duration = Duration::from_secs(60);
// Criterion 2
const C2_POINTS: usize = 256;
const C2_STEP: f64 = 0.1;
const C2_REPS: u64 = 10_000;
const C2_LEVEL: f64 = 0.01;
const C2_BUDGET: Duration = Duration::from_secs(120);
// Criterion 3
const C3_H1: (f64, f64) = (0.9, 1.1);
const C3_H2: (f64, f64) = (0.53, 0.60);
const C3_BUDGET: Duration = Duration::from_secs(300);
// Criterion 4
const C4_RATIO: (f64, f64) = (0.85, 1.15);
const C4_BUDGET: Duration = Duration::from_secs(120);
// Criterion 5
const C5_P_TOL: f64 = 0.02;
const C5_KS: f64 = 0.08;
const C5_BUDGET: Duration = Duration::from_secs(600);
// Criterion 6
const C6_KS: f64 = 0.10;
const C6_BUDGET: Duration = Duration::from_secs(600);
// Criterion 7
const C7_KS: f64 = 0.10;
const C7_KS_DECOMPOSITION: f64 = 0.08;
const C7_BUDGET: Duration = Duration::from_secs(900);
// Criterion 8
const C8_TOL: f64 = 1e-8;
const C8_TOL_R0: f64 = 1e-12;
const C8_RS: [f64; 5] = [0.0, 0.25, 0.5, 1.0, 2.0];
const C8_BUDGET: Duration = Duration::from_secs(1);
// Criterion 9
const C9_P_MIN: f64 = 0.97;

fn experiment(json: &str) -> ExperimentReport {
    let cfg = ExperimentConfig::from_json(json).unwrap();
    run_experiment(&cfg, None).unwrap()
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn c01_simulator_exactness() {
    let start = Instant::now();
    let model = CorrelationModel::weak(1.0).unwrap();
    let grid = GridSpec::with_points(C1_POINTS, C1_STEP).unwrap();
    let mut worst = 0.0f64;
    for backend in [Backend::Circulant, Backend::Ar1] {
        let synth = PathSynth::new(&model, &grid, backend).unwrap();
        let rows: Vec<Vec<f64>> = (0..C1_REPS as u64)
            .map(|k| synth.sample_path(&grid, RngStream::new(101, k)).values)
            .collect();
        for i in 0..C1_POINTS {
            for j in i..C1_POINTS {
                let (c, se) = sample_cov(&rows, i, j);
                let target = model.eval((j - i) as f64 * C1_STEP);
                worst = worst.max((c - target).abs() / se);
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= C1_SE_MULT && elapsed <= C1_BUDGET;
    report(
        1,
        "simulator exactness",
        pass,
        &format!("max |cov - r|/SE = {worst:.3} (limit {C1_SE_MULT}), circulant and ar1, {:.1}s", secs(elapsed)),
    );
    assert!(pass);
}

#[test]
fn c02_oracle_equivalence() {
    let start = Instant::now();
    let model = CorrelationModel::b1(1.0, 0.5).unwrap();
    let grid = GridSpec::with_points(C2_POINTS, C2_STEP).unwrap();
    let chol = CholeskyFactor::new(&model, &grid).unwrap();
    let circ = PathSynth::new(&model, &grid, Backend::Circulant).unwrap();
    let a: Vec<f64> = (0..C2_REPS)
        .map(|k| path_max(&chol.sample(&grid, RngStream::new(201, k)).values, false, None))
        .collect();
    let mut ws = circ.workspace();
    let (mut x, mut y) = (vec![0.0; C2_POINTS], vec![0.0; C2_POINTS]);
    let mut b = Vec::new();
    for k in 0..C2_REPS / 2 {
        circ.fill_pair(&mut ws, &mut substream(202, domain::PATH, k), &mut x, &mut y);
        b.push(path_max(&x, false, None));
        b.push(path_max(&y, false, None));
    }
    let d = ks_two_sample(&EmpiricalCdf::new(&a).unwrap(), &EmpiricalCdf::new(&b).unwrap());
    let crit = ks_two_sample_critical(a.len(), b.len(), C2_LEVEL);
    let elapsed = start.elapsed();
    let pass = d < crit && elapsed <= C2_BUDGET;
    report(
        2,
        "oracle equivalence",
        pass,
        &format!("two-sample KS D = {d:.4} (critical {crit:.4} at level {C2_LEVEL}), {:.1}s", secs(elapsed)),
    );
    assert!(pass);
}

#[test]
fn c03_pickands_constants() {
    let mut pass = true;
    let mut detail = Vec::new();
    for (alpha, (lo, hi), seed) in [(1.0, C3_H1, 301), (2.0, C3_H2, 302)] {
        let start = Instant::now();
        let e = estimate_h(alpha, &default_schedule(alpha), DEFAULT_STEP, DEFAULT_REPS, seed).unwrap();
        let elapsed = start.elapsed();
        let ok = (lo..=hi).contains(&e.h_hat) && elapsed <= C3_BUDGET;
        pass &= ok;
        detail.push(format!(
            "H_{alpha} = {:.4} ± {:.4} in [{lo}, {hi}] {:.1}s",
            e.h_hat,
            e.ci,
            secs(elapsed)
        ));
    }
    report(3, "Pickands constants", pass, &detail.join("; "));
    assert!(pass);
}

#[test]
fn c04_short_interval_ratio() {
    let start = Instant::now();
    let r = experiment(
        r#"{"model": {"family": "weak", "alpha": 1.0}, "theorem": "A1-ratio", "h": 1, "u": 3, "reps": 200000, "seed": 401}"#,
    );
    let elapsed = start.elapsed();
    let ratio = r.ratio.unwrap();
    let pass = (C4_RATIO.0..=C4_RATIO.1).contains(&ratio) && elapsed <= C4_BUDGET;
    report(
        4,
        "short-interval ratio",
        pass,
        &format!(
            "P(sup|X| > 3)/(2hμ(3)) = {ratio:.4} ± {:.4} (p̂ = {:.5}, 2hμ = {:.5}) in [{}, {}], {:.1}s",
            r.ratio_ci.unwrap(),
            r.p_hat.unwrap(),
            r.p_theory.unwrap(),
            C4_RATIO.0,
            C4_RATIO.1,
            secs(elapsed)
        ),
    );
    assert!(pass);
}

#[test]
fn c05_poisson_and_gumbel() {
    let start = Instant::now();
    let p = experiment(
        r#"{"model": {"family": "weak", "alpha": 1.0}, "theorem": "A2-poisson", "T": 10000, "theta": 1, "reps": 4000, "seed": 501}"#,
    );
    let g = experiment(r#"{"model": {"family": "weak", "alpha": 1.0}, "theorem": "A4-gumbel", "T": 10000, "reps": 4000, "seed": 502}"#);
    let elapsed = start.elapsed();
    let (p_hat, p0, se) = (p.p_hat.unwrap(), p.p_theory.unwrap(), p.p_se.unwrap());
    let p_ok = (p_hat - p0).abs() <= 3.0 * se + C5_P_TOL;
    let ks = g.ks.unwrap();
    let pass = p_ok && ks <= C5_KS && elapsed <= C5_BUDGET;
    // Diagnostic only: the same statistics against the laws of the grid maximum.
    let hp = grid_pickands_unit(p.grid_step * p.threshold.unwrap().powi(2));
    let hg = grid_pickands_unit(g.grid_step * g.normalizer_b.unwrap().powi(2));
    let ecdf = EmpiricalCdf::new(&g.samples).unwrap();
    let ks_grid = gaussmax::maxstats::ks_statistic(&ecdf, |x| (-2.0 * hg * (-x).exp()).exp());
    let note = format!(
        "             note: grid constant {hp:.4}; p̂ vs exp(-2·{hp:.3}) = {:.4}; KS vs exp(-2·{hg:.3}e^-x) = {ks_grid:.4}",
        (-2.0 * hp).exp()
    );
    report(
        5,
        "Poisson and two-sided Gumbel",
        pass,
        &format!(
            "p̂ = {p_hat:.4} vs e^-2 = {p0:.4} (limit {:.4}); KS = {ks:.4} (limit {C5_KS}); median {:.3}; {:.1}s",
            3.0 * se + C5_P_TOL,
            EmpiricalCdf::new(&g.samples).unwrap().median(),
            secs(elapsed)
        ),
    );
    emit(&note);
    assert!(pass);
}

#[test]
fn c06_mixed_gumbel() {
    let start = Instant::now();
    let r = experiment(
        r#"{"model": {"family": "b1", "alpha": 1.0, "r": 0.5}, "theorem": "T21-gumbel-mixed", "T": 10000, "r": 0.5, "reps": 4000, "seed": 601}"#,
    );
    let elapsed = start.elapsed();
    let (ks, wrong) = (r.ks.unwrap(), r.ks_wrong_law.unwrap());
    let pass = ks <= C6_KS && ks < wrong && elapsed <= C6_BUDGET;
    let hg = grid_pickands_unit(r.grid_step * r.normalizer_b.unwrap().powi(2));
    let ecdf = EmpiricalCdf::new(&r.samples).unwrap();
    let ks_grid = gaussmax::maxstats::ks_statistic(&ecdf, |x| lambda_r_cdf(x - hg.ln(), 0.5, 64).unwrap());
    let note = format!("             note: grid constant {hg:.4}; KS vs Λ_0.5(x - ln {hg:.3}) = {ks_grid:.4}");
    report(
        6,
        "mixed Gumbel law",
        pass,
        &format!("KS vs Λ_0.5 = {ks:.4} (limit {C6_KS}), KS vs exp(-2e^-x) = {wrong:.4}, {:.1}s", secs(elapsed)),
    );
    emit(&note);
    assert!(pass);
}

fn positive_part_ks(r: &ExperimentReport) -> f64 {
    // The law puts no mass on x ≤ 0; restricting to x > 0 keeps the same supremum.
    let ecdf = EmpiricalCdf::new(&r.samples).unwrap();
    gaussmax::maxstats::ks_statistic(&ecdf, |x| if x > 0.0 { 2.0 * gaussmax::limitlaws::std_normal_cdf(x) - 1.0 } else { 0.0 })
}

#[test]
fn c07_half_normal() {
    let start = Instant::now();
    let direct = experiment(r#"{"model": {"family": "b2", "alpha": 1.0}, "theorem": "T22-halfnormal", "T": 1000000, "reps": 4000, "seed": 701}"#);
    let mid = Instant::now();
    let decomposed = experiment(
        r#"{"model": {"family": "b2", "alpha": 1.0}, "theorem": "T22-halfnormal", "T": 1000000, "reps": 4000, "seed": 702, "backend": "decomposition"}"#,
    );
    let elapsed = start.elapsed();
    let (ks, ks_dec) = (positive_part_ks(&direct), positive_part_ks(&decomposed));
    let pass = direct.grid_points <= gaussmax::maxstats::MAX_GRID_POINTS
        && ks <= C7_KS
        && ks_dec <= C7_KS_DECOMPOSITION
        && elapsed <= C7_BUDGET;
    report(
        7,
        "half-normal law",
        pass,
        &format!(
            "T = {:.0} ({} points), KS = {ks:.4} (limit {C7_KS}) {:.0}s, decomposition KS = {ks_dec:.4} (limit {C7_KS_DECOMPOSITION}) {:.0}s; medians {:.3}/{:.3}",
            direct.horizon,
            direct.grid_points,
            secs(mid - start),
            secs(elapsed) - secs(mid - start),
            direct.median.unwrap(),
            decomposed.median.unwrap()
        ),
    );
    assert!(pass);
}

#[test]
fn c08_lambda_r_quadrature() {
    let xs: Vec<f64> = (0..21).map(|i| -3.0 + 0.45 * i as f64).collect();
    let start = Instant::now();
    let mut table = Vec::with_capacity(105);
    for &x in &xs {
        for &r in &C8_RS {
            table.push((x, r, lambda_r_cdf(x, r, 64).unwrap()));
        }
    }
    let elapsed = start.elapsed();
    let (mut worst, mut worst_r0) = (0.0f64, 0.0f64);
    for &(x, r, v) in &table {
        worst = worst.max((v - lambda_r_oracle(x, r)).abs());
        if r == 0.0 {
            worst_r0 = worst_r0.max((v - (-2.0 * (-x).exp()).exp()).abs());
        }
    }
    let pass = worst <= C8_TOL && worst_r0 <= C8_TOL_R0 && elapsed <= C8_BUDGET;
    report(
        8,
        "Λ_r quadrature",
        pass,
        &format!(
            "max |GH64 - adaptive| = {worst:.2e} (limit {C8_TOL:e}), r = 0 column {worst_r0:.2e} (limit {C8_TOL_R0:e}), {:.2}ms",
            elapsed.as_secs_f64() * 1e3
        ),
    );
    assert!(pass);
}

#[test]
fn c09_degenerate_threshold() {
    let r = experiment(
        r#"{"model": {"family": "weak", "alpha": 1.0}, "theorem": "A3-degenerate", "T": 1000, "theta": 0.01, "reps": 10000, "seed": 901}"#,
    );
    let p = r.p_hat.unwrap();
    let pass = p >= C9_P_MIN;
    report(
        9,
        "degenerate threshold",
        pass,
        &format!("p̂ = {p:.4} at u = {:.4} (limit {C9_P_MIN})", r.threshold.unwrap()),
    );
    assert!(pass);
}

#[test]
fn c10_worker_count_independence() {
    let configs = [
        r#"{"model": {"family": "b1", "alpha": 1.0, "r": 0.5}, "theorem": "T21-gumbel-mixed", "T": 300, "r": 0.5, "reps": 301, "seed": 1001}"#,
        r#"{"model": {"family": "b1", "alpha": 1.0, "r": 0.5}, "theorem": "T21-gumbel-mixed", "T": 300, "r": 0.5, "reps": 301, "seed": 1002, "backend": "comparison", "eps": 0.1}"#,
        r#"{"model": {"family": "weak", "alpha": 1.0}, "theorem": "A4-gumbel", "T": 300, "reps": 301, "seed": 1003}"#,
        r#"{"model": {"family": "b2", "alpha": 1.0}, "theorem": "T22-halfnormal", "T": 300, "reps": 301, "seed": 1004, "backend": "decomposition"}"#,
    ];
    let pool = |n: usize| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (one, eight) = (pool(1), pool(8));
    let mut pass = true;
    for json in configs {
        let a = one.install(|| experiment(json));
        let b = eight.install(|| experiment(json));
        let bits = |r: &ExperimentReport| r.maxima.iter().map(|m| m.to_bits()).collect::<Vec<_>>();
        pass &= bits(&a) == bits(&b) && a.ks.map(f64::to_bits) == b.ks.map(f64::to_bits);
        pass &= a.fingerprint().unwrap() == b.fingerprint().unwrap();
    }
    report(
        10,
        "reproducibility",
        pass,
        &format!("{} experiments, 1 vs 8 workers, bitwise-equal maxima and KS", configs.len()),
    );
    assert!(pass);
}
