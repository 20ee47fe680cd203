//! Shared oracles for integration tests.
#![allow(dead_code)]

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod 7/15 on `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn go(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        go(f, a, m, 0.5 * tol, depth - 1) + go(f, m, b, 0.5 * tol, depth - 1)
    }
    go(&f, a, b, tol, 40)
}

pub fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `E exp(-2 e^{-(x+r)} cosh(√(2r) Z))` by direct integration over the normal density.
pub fn lambda_r_oracle(x: f64, r: f64) -> f64 {
    let c = (-(x + r)).exp();
    let s = (2.0 * r).sqrt();
    integrate(|z| normal_pdf(z) * (-2.0 * c * (s * z).cosh()).exp(), -40.0, 40.0, 1e-14)
}

/// Sample covariance between columns `i` and `j` of row-major `rows`, with its standard error.
pub fn sample_cov(rows: &[Vec<f64>], i: usize, j: usize) -> (f64, f64) {
    let n = rows.len() as f64;
    let mi = rows.iter().map(|r| r[i]).sum::<f64>() / n;
    let mj = rows.iter().map(|r| r[j]).sum::<f64>() / n;
    let prods: Vec<f64> = rows.iter().map(|r| (r[i] - mi) * (r[j] - mj)).collect();
    let c = prods.iter().sum::<f64>() / (n - 1.0);
    let v = prods.iter().map(|p| (p - c) * (p - c)).sum::<f64>() / (n - 1.0);
    (c, (v / n).sqrt())
}

/// Writes past the test harness capture so every line reaches the log.
pub fn emit(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

pub fn report(id: u32, name: &str, pass: bool, detail: &str) {
    emit(&format!("criterion {id:>2} {:<4} {name}: {detail}", if pass { "PASS" } else { "FAIL" }));
}

/// Grid Pickands constant of `√2 B(t) − t` on spacing `a`:
/// `a^{-1} exp(−2 Σ_k Ψ(√(ka/2)) / k)`.
pub fn grid_pickands_unit(a: f64) -> f64 {
    let mut s = 0.0;
    let mut k = 1.0;
    loop {
        let term = 0.5 * libm::erfc((k * a / 2.0).sqrt() / std::f64::consts::SQRT_2) / k;
        s += term;
        if term < 1e-18 {
            break;
        }
        k += 1.0;
    }
    (-2.0 * s).exp() / a
}
