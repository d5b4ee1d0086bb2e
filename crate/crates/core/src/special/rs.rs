//! Riemann–Siegel evaluation of the Hardy Z function.
//!
//! `Z(t) = 2 Σ_{k≤N} k^{-1/2} cos(θ(t) - t ln k) + (-1)^{N-1} (t/2π)^{-1/4}
//! [C0(p) + C1(p) (t/2π)^{-1/2} + …]` with `N = ⌊√(t/2π)⌋` and
//! `p = √(t/2π) - N`.
//!
//! The correction functions are built from `Ψ(p) = cos(2π(p² - p - 1/16)) /
//! cos(2πp)`: `C0 = Ψ`, `C1 = -Ψ⁽³⁾/(96π²)`, and
//! `C2 = Ψ⁽²⁾/(64π²) + Ψ⁽⁶⁾/(18432π⁴)`. `Ψ` is entire (the zeros of the
//! denominator at p = 1/4, 3/4 are removable), so its derivatives are
//! extracted by a Cauchy contour sum on a circle that stays away from the
//! removable points; the values are cached on a fine grid and interpolated
//! with a 6-point Lagrange stencil. This avoids hand-derived `Ψ⁽ᵏ⁾` algebra
//! and is numerically uniform across all of [0, 1].

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use super::em::ln_n;

const GRID: usize = 2048; // cells on [0, 1]
const CONTOUR_POINTS: usize = 128;

/// `Ψ` evaluated in the complex plane (entire function, but computed as a
/// ratio; callers keep the contour away from the removable points).
fn psi_complex(z: Complex64) -> Complex64 {
    let num = (2.0 * PI * (z * z - z - 0.0625)).cos();
    let den = (2.0 * PI * z).cos();
    num / den
}

/// Distance from `x` to the nearest removable point `1/4 + k/2`.
fn removable_distance(x: f64) -> f64 {
    let y = (x - 0.25).rem_euclid(0.5);
    y.min(0.5 - y)
}

/// `k!/ρ^k · (Taylor coefficient k)` of Ψ at `p` via a trapezoid contour sum.
/// Returns derivatives of orders 0..=6.
fn psi_derivatives(p: f64) -> [f64; 7] {
    let rho = [0.37, 0.41, 0.43, 0.47, 0.33]
        .into_iter()
        .find(|&r| removable_distance(p - r) > 0.04 && removable_distance(p + r) > 0.04)
        .expect("a contour radius clear of the removable points always exists");
    let m = CONTOUR_POINTS;
    let mut coeff = [Complex64::new(0.0, 0.0); 7];
    for j in 0..m {
        let ang = 2.0 * PI * j as f64 / m as f64;
        let w = Complex64::from_polar(1.0, ang);
        let val = psi_complex(Complex64::new(p, 0.0) + w * rho);
        let mut wk = Complex64::new(1.0, 0.0);
        for c in coeff.iter_mut() {
            *c += val * wk.conj();
            wk *= w;
        }
    }
    const FACT: [f64; 7] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0];
    let mut out = [0.0; 7];
    for (k, c) in coeff.iter().enumerate() {
        out[k] = FACT[k] * c.re / (m as f64 * rho.powi(k as i32));
    }
    out
}

struct CorrectionTables {
    c0: Vec<f64>,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

fn tables() -> &'static CorrectionTables {
    static TABLES: OnceLock<CorrectionTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let n = GRID + 1;
        let mut c0 = vec![0.0; n];
        let mut c1 = vec![0.0; n];
        let mut c2 = vec![0.0; n];
        let pi2 = PI * PI;
        for i in 0..n {
            let p = i as f64 / GRID as f64;
            let d = psi_derivatives(p);
            c0[i] = d[0];
            c1[i] = -d[3] / (96.0 * pi2);
            c2[i] = d[2] / (64.0 * pi2) + d[6] / (18432.0 * pi2 * pi2);
        }
        CorrectionTables { c0, c1, c2 }
    })
}

/// 6-point Lagrange interpolation on the uniform [0, 1] grid.
fn interp(table: &[f64], p: f64) -> f64 {
    let x = p * GRID as f64;
    let mut i0 = x.floor() as isize - 2;
    i0 = i0.clamp(0, GRID as isize - 5);
    let i0 = i0 as usize;
    let mut acc = 0.0;
    for a in 0..6 {
        let mut l = 1.0;
        let xa = (i0 + a) as f64;
        for b in 0..6 {
            if a != b {
                let xb = (i0 + b) as f64;
                l *= (x - xb) / (xa - xb);
            }
        }
        acc += l * table[i0 + a];
    }
    acc
}

/// Leading Riemann–Siegel correction `C0(p) = Ψ(p)`.
pub fn c0(p: f64) -> f64 {
    interp(&tables().c0, p)
}

/// Second correction `C1(p) = -Ψ⁽³⁾(p)/(96π²)`.
pub fn c1(p: f64) -> f64 {
    interp(&tables().c1, p)
}

/// Third correction `C2(p) = Ψ⁽²⁾(p)/(64π²) + Ψ⁽⁶⁾(p)/(18432π⁴)`.
pub fn c2(p: f64) -> f64 {
    interp(&tables().c2, p)
}

/// Hardy Z via the Riemann–Siegel formula with `terms` correction terms
/// (0..=3). `theta` is the Riemann–Siegel theta at `t`.
pub fn hardy_z_rs(t: f64, theta: f64, terms: u32) -> f64 {
    let tau = (t / (2.0 * PI)).sqrt();
    let n = tau.floor() as usize;
    let p = tau - n as f64;

    let mut main = 0.0;
    for k in 1..=n {
        let r = 1.0 / (k as f64).sqrt();
        main += r * (theta - t * ln_n(k)).cos();
    }
    main *= 2.0;

    if terms == 0 {
        return main;
    }
    let sign = if n % 2 == 1 { 1.0 } else { -1.0 };
    let amp = (t / (2.0 * PI)).powf(-0.25);
    let mut corr = c0(p);
    if terms >= 2 {
        corr += c1(p) / tau;
    }
    if terms >= 3 {
        corr += c2(p) / (tau * tau);
    }
    main + sign * amp * corr
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c0_matches_direct_formula_away_from_removable_points() {
        for &p in &[0.02, 0.1, 0.15, 0.4, 0.55, 0.6, 0.9, 0.97] {
            let direct = (2.0 * PI * (p * p - p - 0.0625)).cos() / (2.0 * PI * p).cos();
            assert!((c0(p) - direct).abs() < 1e-10, "p = {p}: {} vs {direct}", c0(p));
        }
    }

    #[test]
    fn c0_at_zero_is_cos_pi_over_8() {
        let expect = (PI / 8.0).cos();
        assert!((c0(0.0) - expect).abs() < 1e-10);
    }

    #[test]
    fn c1_matches_finite_difference_of_psi() {
        // Ψ⁽³⁾ by a 7-point central difference of the direct ratio, at points
        // where the denominator is comfortably large.
        for &p in &[0.05, 0.45, 0.55, 0.95] {
            let h = 1e-2;
            let psi = |x: f64| (2.0 * PI * (x * x - x - 0.0625)).cos() / (2.0 * PI * x).cos();
            let d3 = (psi(p - 3.0 * h) - psi(p + 3.0 * h)
                + 8.0 * (psi(p + 2.0 * h) - psi(p - 2.0 * h))
                + 13.0 * (psi(p - h) - psi(p + h)))
                / (8.0 * h * h * h);
            let expect = -d3 / (96.0 * PI * PI);
            assert!(
                (c1(p) - expect).abs() < 1e-4 * expect.abs().max(1.0),
                "p = {p}: {} vs {expect}",
                c1(p)
            );
        }
    }

    #[test]
    fn c1_reference_values() {
        // 30-digit reference points for C1 = -Ψ⁽³⁾/(96π²).
        assert!((c1(0.05) + 0.011_623_871_211_561_909).abs() < 1e-12);
        assert!((c1(0.45) - 0.002_668_339_593_125_139_4).abs() < 1e-12);
    }

    #[test]
    fn c0_is_smooth_across_removable_points() {
        // No spikes near p = 1/4: compare neighbouring samples.
        let a = c0(0.2499);
        let b = c0(0.25);
        let c = c0(0.2501);
        assert!((a - b).abs() < 1e-3 && (b - c).abs() < 1e-3, "{a} {b} {c}");
    }
}
