//! Critical-line special functions: `θ(t)`, `Z(t)`, `ζ(1/2+it)`,
//! `|ζ^{(r)}(1/2+it)|`, zero counting, `S(t)` and `S1(T)`.
//!
//! Everything is a pure function of `(inputs, EvalConfig)` except the zero
//! cache [`Zeros`], which is a grow-only table safe for concurrent readers.

mod em;
mod gamma;
mod rs;
mod zeros;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

pub use zeros::Zeros;

pub(crate) use em::{em_terms, zeta_em};

/// Heights above this are outside the supported range.
pub const T_SUPPORT_MAX: f64 = 1.0e7;

/// Accuracy and method knobs for the special-function layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Absolute error target for `Z` and `θ`.
    pub target_abs_tol: f64,
    /// Riemann–Siegel correction terms to include (0..=3).
    pub rs_correction_terms: u32,
    /// Central-difference accuracy order for derivatives (2 or 4).
    pub fd_order: u32,
    /// Below this height `Z` is evaluated by Euler–Maclaurin, above by
    /// Riemann–Siegel. The default keeps the three-term Riemann–Siegel
    /// error under ~8e-8 everywhere it is used.
    pub rs_crossover: f64,
    /// Relative disagreement between the `h` and `h/2` difference stencils
    /// above which a derivative evaluation is refused.
    pub fd_rel_tol: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            target_abs_tol: 1e-9,
            rs_correction_terms: 3,
            fd_order: 4,
            rs_crossover: 1500.0,
            fd_rel_tol: 1e-4,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), SpecialError> {
        if !(self.target_abs_tol > 0.0) {
            return Err(SpecialError::BadConfig("target_abs_tol must be positive"));
        }
        if self.rs_correction_terms > 3 {
            return Err(SpecialError::BadConfig("rs_correction_terms must be 0..=3"));
        }
        if self.fd_order != 2 && self.fd_order != 4 {
            return Err(SpecialError::BadConfig("fd_order must be 2 or 4"));
        }
        if !(100.0..=1.0e6).contains(&self.rs_crossover) {
            return Err(SpecialError::BadConfig("rs_crossover must lie in [1e2, 1e6]"));
        }
        if !(self.fd_rel_tol > 0.0) {
            return Err(SpecialError::BadConfig("fd_rel_tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecialError {
    #[error("t = {t} outside supported range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("derivative order r = {0} unsupported (r <= 4)")]
    UnsupportedDerivative(u32),
    #[error("invalid EvalConfig: {0}")]
    BadConfig(&'static str),
    #[error(
        "finite-difference stencils at steps h and h/2 disagree at t = {t} (r = {r}): \
         estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    StepDisagreement { t: f64, r: u32, estimate: f64, tolerance: f64 },
    #[error("finite-difference step underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error(
        "sign pattern in [{a}, {b}] (min |Z| = {min_abs:.3e}) cannot be resolved by refinement"
    )]
    AmbiguousZeroPattern { a: f64, b: f64, min_abs: f64 },
    #[error("t = {t} is within tolerance of the zero ordinate {ordinate}")]
    NearZeroOrdinate { t: f64, ordinate: f64 },
    #[error("zero count at t = {t} fails the counting-formula sanity check (S = {s:.3})")]
    CountSanity { t: f64, s: f64 },
}

fn check_range(t: f64, lo: f64) -> Result<(), SpecialError> {
    if !(lo..=T_SUPPORT_MAX).contains(&t) || !t.is_finite() {
        return Err(SpecialError::OutOfRange { t, lo, hi: T_SUPPORT_MAX });
    }
    Ok(())
}

/// Coefficients of the theta asymptotic series: `(1 - 2^{1-2n}) |B_{2n}| /
/// (4n(2n-1))` over `t^{2n-1}`.
const THETA_ASYMP: [f64; 4] =
    [1.0 / 48.0, 7.0 / 5760.0, 31.0 / 80640.0, 127.0 / 430080.0];

const THETA_DIRECT_BELOW: f64 = 10.0;

/// Riemann–Siegel theta: `θ(t) = -(t/2) ln π + Im ln Γ(1/4 + it/2)`.
///
/// Uses direct complex log-gamma below t = 10 and the standard asymptotic
/// expansion (four correction terms) above; both are accurate to well under
/// 1e-12 at the switch point.
pub fn theta(t: f64) -> Result<f64, SpecialError> {
    check_range(t, 0.0)?;
    if t < THETA_DIRECT_BELOW {
        let lg = gamma::ln_gamma(Complex64::new(0.25, 0.5 * t));
        return Ok(-0.5 * t * PI.ln() + lg.im);
    }
    let mut v = 0.5 * t * (t / (2.0 * PI)).ln() - 0.5 * t - PI / 8.0;
    let t2 = t * t;
    let mut p = 1.0 / t;
    for c in THETA_ASYMP {
        v += c * p;
        p /= t2;
    }
    Ok(v)
}

/// The Hardy Z function `Z(t) = e^{iθ(t)} ζ(1/2 + it)`, real for real `t`.
pub fn hardy_z(t: f64, cfg: &EvalConfig) -> Result<f64, SpecialError> {
    check_range(t, 0.0)?;
    cfg.validate()?;
    let th = theta(t)?;
    if t < cfg.rs_crossover {
        let z = zeta_em(t, em_terms(t));
        Ok((Complex64::from_polar(1.0, th) * z).re)
    } else {
        Ok(rs::hardy_z_rs(t, th, cfg.rs_correction_terms))
    }
}

/// `ζ(1/2 + it) = e^{-iθ(t)} Z(t)`; the modulus equals `|Z(t)|` exactly by
/// construction.
pub fn zeta_on_line(t: f64, cfg: &EvalConfig) -> Result<Complex64, SpecialError> {
    let z = hardy_z(t, cfg)?;
    let th = theta(t)?;
    Ok(Complex64::from_polar(1.0, -th) * z)
}

/// A height together with its Hardy Z and theta values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub t: f64,
    pub z: f64,
    pub theta: f64,
}

impl CriticalPoint {
    pub fn compute(t: f64, cfg: &EvalConfig) -> Result<Self, SpecialError> {
        Ok(CriticalPoint { t, z: hardy_z(t, cfg)?, theta: theta(t)? })
    }

    /// Reconstructed `ζ(1/2 + it)`.
    pub fn zeta(&self) -> Complex64 {
        Complex64::from_polar(1.0, -self.theta) * self.z
    }
}

/// Central-difference stencils: `(offsets, coefficients)` for derivative
/// order `r` at accuracy order `q`.
fn stencil(r: u32, q: u32) -> (&'static [i32], &'static [f64]) {
    match (r, q) {
        (1, 2) => (&[-1, 1], &[-0.5, 0.5]),
        (1, 4) => (&[-2, -1, 1, 2], &[1.0 / 12.0, -2.0 / 3.0, 2.0 / 3.0, -1.0 / 12.0]),
        (2, 2) => (&[-1, 0, 1], &[1.0, -2.0, 1.0]),
        (2, 4) => (
            &[-2, -1, 0, 1, 2],
            &[-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0],
        ),
        (3, 2) => (&[-2, -1, 1, 2], &[-0.5, 1.0, -1.0, 0.5]),
        (3, 4) => (
            &[-3, -2, -1, 1, 2, 3],
            &[1.0 / 8.0, -1.0, 13.0 / 8.0, -13.0 / 8.0, 1.0, -1.0 / 8.0],
        ),
        (4, 2) => (&[-2, -1, 0, 1, 2], &[1.0, -4.0, 6.0, -4.0, 1.0]),
        (4, 4) => (
            &[-3, -2, -1, 0, 1, 2, 3],
            &[-1.0 / 6.0, 2.0, -13.0 / 2.0, 28.0 / 3.0, -13.0 / 2.0, 2.0, -1.0 / 6.0],
        ),
        _ => unreachable!("validated before dispatch"),
    }
}

/// `ζ(1/2 + it)` as used inside a difference stencil. When `pinned_em` is
/// set, every point of the stencil is evaluated by Euler–Maclaurin with the
/// same main-sum length, so the evaluation is smooth in `t`; otherwise the
/// normal crossover dispatch applies.
fn zeta_line_for_fd(t: f64, pinned_em: Option<usize>, cfg: &EvalConfig) -> Result<Complex64, SpecialError> {
    if let Some(n) = pinned_em {
        return Ok(zeta_em(t, n));
    }
    if t < cfg.rs_crossover {
        Ok(zeta_em(t, em_terms(t)))
    } else {
        let th = theta(t)?;
        let z = rs::hardy_z_rs(t, th, cfg.rs_correction_terms);
        Ok(Complex64::from_polar(1.0, -th) * z)
    }
}

/// `|ζ^{(r)}(1/2 + it)|` for `r <= 4`.
///
/// Uses the identity `d^r/dt^r ζ(1/2+it) = i^r ζ^{(r)}(1/2+it)`: central
/// differences of configured order on `zeta_on_line` with step
/// `h = (2π/ln(t/2π))/64`, Richardson-extrapolated once. The `h` vs `h/2`
/// disagreement is the error estimate; if it exceeds `fd_rel_tol` the value
/// is refused rather than silently returned.
///
/// Stencils that straddle a main-sum length change (or the method crossover)
/// switch to Euler–Maclaurin with a pinned sum length: the tiny jump in the
/// truncated Riemann–Siegel remainder at those boundaries would otherwise be
/// amplified by `h^{-r}`.
pub fn zeta_derivative_abs(t: f64, r: u32, cfg: &EvalConfig) -> Result<f64, SpecialError> {
    cfg.validate()?;
    if r > 4 {
        return Err(SpecialError::UnsupportedDerivative(r));
    }
    check_range(t, 10.0)?;
    if r == 0 {
        return Ok(hardy_z(t, cfg)?.abs());
    }

    let h = (2.0 * PI / (t / (2.0 * PI)).ln()) / 64.0;
    if !(h > 1e-9) {
        return Err(SpecialError::StepUnderflow { t });
    }
    let (offsets, coeffs) = stencil(r, cfg.fd_order);
    let span = h * offsets.last().copied().unwrap_or(0).unsigned_abs() as f64;
    let t_lo = t - span;
    let t_hi = t + span;

    let crosses_main_sum = ((t_lo / (2.0 * PI)).sqrt().floor() - (t_hi / (2.0 * PI)).sqrt().floor())
        .abs()
        > 0.5;
    let crosses_method = (t_lo < cfg.rs_crossover) != (t_hi < cfg.rs_crossover);
    let pinned = if t_hi < cfg.rs_crossover || crosses_main_sum || crosses_method {
        Some(em_terms(t_hi))
    } else {
        None
    };

    let apply = |step: f64| -> Result<Complex64, SpecialError> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (o, c) in offsets.iter().zip(coeffs) {
            acc += zeta_line_for_fd(t + *o as f64 * step, pinned, cfg)? * *c;
        }
        Ok(acc / step.powi(r as i32))
    };

    let d_h = apply(h)?;
    let d_h2 = apply(0.5 * h)?;
    let gain = ((1u64 << cfg.fd_order) - 1) as f64;
    let extrapolated = d_h2 + (d_h2 - d_h) / gain;
    let estimate = (d_h2 - d_h).norm() / gain;
    let tolerance = cfg.fd_rel_tol * extrapolated.norm().max(1e-6);
    if estimate > tolerance {
        return Err(SpecialError::StepDisagreement { t, r, estimate, tolerance });
    }
    Ok(extrapolated.norm())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_at_zero_vanishes() {
        assert_eq!(theta(0.0).unwrap(), 0.0);
    }

    #[test]
    fn theta_branches_agree_with_reference_values() {
        // Direct log-gamma branch (t < 10) and asymptotic branch (t >= 10)
        // against 30-digit reference values.
        let below = theta(9.999_999).unwrap();
        assert!((below + 3.067_074_628_435_183_7).abs() < 1e-12, "direct: {below}");
        let above = theta(10.0).unwrap();
        assert!((above + 3.067_074_396_289_895_3).abs() < 1e-12, "asymptotic: {above}");
    }

    #[test]
    fn hardy_z_at_zero_is_zeta_half() {
        let z = hardy_z(0.0, &EvalConfig::default()).unwrap();
        assert!((z + 1.460_354_508_809_586_8).abs() < 1e-10, "z = {z}");
    }

    #[test]
    fn zeta_on_line_modulus_identity() {
        let cfg = EvalConfig::default();
        for &t in &[0.5, 14.0, 333.3, 6000.0, 12345.6] {
            let z = hardy_z(t, &cfg).unwrap();
            let zl = zeta_on_line(t, &cfg).unwrap();
            // Equal up to the rounding of the unit phasor product.
            assert!((zl.norm() - z.abs()).abs() <= 4.0 * f64::EPSILON * z.abs(), "t = {t}");
        }
    }

    #[test]
    fn derivative_order_zero_is_abs_z() {
        let cfg = EvalConfig::default();
        let t = 523.7;
        let a = zeta_derivative_abs(t, 0, &cfg).unwrap();
        let b = hardy_z(t, &cfg).unwrap().abs();
        assert!((a - b).abs() <= 1e-12 * b.max(1.0));
    }

    #[test]
    fn derivative_rejects_unsupported_order() {
        let cfg = EvalConfig::default();
        assert!(matches!(
            zeta_derivative_abs(100.0, 5, &cfg),
            Err(SpecialError::UnsupportedDerivative(5))
        ));
    }

    #[test]
    fn step_disagreement_is_raised_not_silent() {
        // An absurdly tight disagreement tolerance must turn the ordinary
        // Richardson residual into a refusal.
        let cfg = EvalConfig { fd_rel_tol: 1e-16, ..EvalConfig::default() };
        let r = zeta_derivative_abs(300.0, 2, &cfg);
        assert!(matches!(r, Err(SpecialError::StepDisagreement { .. })), "{r:?}");
    }

    #[test]
    fn out_of_range_is_refused() {
        assert!(theta(-1.0).is_err());
        assert!(theta(2.0e7).is_err());
        assert!(hardy_z(-0.5, &EvalConfig::default()).is_err());
    }
}
