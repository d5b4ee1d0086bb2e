//! The energy integrals built from `|ζ|`-products along ladder iterates.
//!
//! Every operation integrates a pointwise product of critical-line factors
//! over `[T, T+U]` (or over the preimage interval that `phi1` maps onto it),
//! with the admissible `U`-range for each formula gated by [`IntervalSpec`].
//! High powers are assembled in log-space so squaring levels never overflow
//! near zeros of `Z`.

use std::cell::RefCell;

use thiserror::Error;

use crate::ladder::{LadderError, LadderTable};
use crate::quad::{integrate, IntegralResult, PanelPolicy, QuadError};
use crate::special::{hardy_z, zeta_derivative_abs, EvalConfig, SpecialError, Zeros};

/// Exponent bundle selecting a signal: derivative order `r`, iteration
/// depth `n`, Cauchy-squaring level `m`, moment order `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignalParams {
    pub r: u32,
    pub n: u32,
    pub m: u32,
    pub l: u32,
}

impl Default for SignalParams {
    fn default() -> Self {
        SignalParams { r: 0, n: 0, m: 1, l: 1 }
    }
}

impl SignalParams {
    /// Desk-scale supported ranges.
    pub fn validate(&self) -> Result<(), FunctionalError> {
        if self.r > 4 {
            return Err(FunctionalError::UnsupportedParams(format!(
                "derivative order r = {} unsupported (r <= 4)",
                self.r
            )));
        }
        if self.n > 3 {
            return Err(FunctionalError::UnsupportedParams(format!(
                "iteration depth n = {} unsupported (n <= 3)",
                self.n
            )));
        }
        if self.m > 2 {
            return Err(FunctionalError::UnsupportedParams(format!(
                "squaring level m = {} unsupported (m <= 2: runtime explodes beyond)",
                self.m
            )));
        }
        if !(1..=3).contains(&self.l) {
            return Err(FunctionalError::UnsupportedParams(format!(
                "moment order l = {} unsupported (1 <= l <= 3)",
                self.l
            )));
        }
        Ok(())
    }
}

/// Admissible interval-width regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `U ∈ [3 ln^c T, T/ln T]`
    Short,
    /// `U ∈ [T^{1/3+2ε}, T/ln² T]`
    Macroscopic,
    /// `U ∈ [T^{1/2+ε}, T/ln² T]`
    HalfPlus,
    /// `U = T^{7/8+ε}`
    SevenEighths,
}

/// A height/width pair with its regime classification and range knobs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalSpec {
    pub t: f64,
    pub u: f64,
    pub regime: Regime,
    /// The ε of the range endpoints.
    pub epsilon: f64,
    /// The exponent c of the short-regime lower endpoint `3 ln^c T`.
    pub c_exp: f64,
}

impl IntervalSpec {
    pub fn new(t: f64, u: f64, regime: Regime) -> Self {
        IntervalSpec { t, u, regime, epsilon: 0.03, c_exp: 2.0 }
    }

    /// The admissible `[lo, hi]` for `U` at this `T`.
    pub fn bounds(&self) -> (f64, f64) {
        let t = self.t;
        match self.regime {
            Regime::Short => (3.0 * t.ln().powf(self.c_exp), t / t.ln()),
            Regime::Macroscopic => (t.powf(1.0 / 3.0 + 2.0 * self.epsilon), t / t.ln().powi(2)),
            Regime::HalfPlus => (t.powf(0.5 + self.epsilon), t / t.ln().powi(2)),
            Regime::SevenEighths => {
                let u1 = t.powf(7.0 / 8.0 + self.epsilon);
                (u1, u1)
            }
        }
    }

    /// Check `U` against the regime range; a refusal names the violated
    /// range.
    pub fn validate(&self) -> Result<(), FunctionalError> {
        if !(self.t > 0.0) || !self.t.is_finite() || !self.u.is_finite() || self.u < 0.0 {
            return Err(FunctionalError::UnsupportedParams(format!(
                "invalid interval T = {}, U = {}",
                self.t, self.u
            )));
        }
        let (lo, hi) = self.bounds();
        let (ok, range) = match self.regime {
            Regime::Short => (
                (lo..=hi).contains(&self.u),
                format!("U ∈ [3·ln^c T, T/ln T] with c = {}", self.c_exp),
            ),
            Regime::Macroscopic => (
                (lo..=hi).contains(&self.u),
                format!("U ∈ [T^(1/3+2ε), T/ln² T] with ε = {}", self.epsilon),
            ),
            Regime::HalfPlus => (
                (lo..=hi).contains(&self.u),
                format!("U ∈ [T^(1/2+ε), T/ln² T] with ε = {}", self.epsilon),
            ),
            Regime::SevenEighths => (
                (self.u - lo).abs() <= 1e-9 * lo,
                format!("U = T^(7/8+ε) with ε = {}", self.epsilon),
            ),
        };
        if !ok {
            return Err(FunctionalError::RegimeViolation {
                message: format!(
                    "{range}: U = {:.6e} outside [{lo:.6e}, {hi:.6e}] at T = {:.6e}",
                    self.u, self.t
                ),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("interval outside the formula's admissible range: {message}")]
    RegimeViolation { message: String },
    #[error("unsupported parameters: {0}")]
    UnsupportedParams(String),
    #[error(transparent)]
    Ladder(#[from] LadderError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Everything a functional evaluation needs: configuration, quadrature
/// policy, a finished ladder table, and the zero cache. Read-only; safe to
/// share across concurrent evaluations.
pub struct FunctionalCtx<'a> {
    pub cfg: &'a EvalConfig,
    pub policy: &'a PanelPolicy,
    pub table: &'a LadderTable,
    pub zeros: &'a Zeros,
    /// Relative tolerance target for the integrals.
    pub quad_rel_tol: f64,
}

/// Result of a weighted product integral; carries the recorded sign warning
/// when the weight fails the one-signedness hypothesis.
#[derive(Debug, Clone)]
pub struct WeightedProduct {
    pub integral: IntegralResult,
    pub sign_warning: Option<String>,
}

/// Floor protecting logs at zeros of `Z`; the zeros contribute measure-zero
/// sets, so the floor does not move integrals at the stated tolerances.
const LOG_FLOOR: f64 = 1e-300;

fn zero_result() -> IntegralResult {
    IntegralResult { value: 0.0, abs_error_est: 0.0, evaluations: 0, converged: true }
}

impl<'a> FunctionalCtx<'a> {
    pub fn new(
        cfg: &'a EvalConfig,
        policy: &'a PanelPolicy,
        table: &'a LadderTable,
        zeros: &'a Zeros,
    ) -> Self {
        FunctionalCtx { cfg, policy, table, zeros, quad_rel_tol: 1e-7 }
    }

    /// Run one adaptive integral with a fallible integrand, surfacing the
    /// first integrand error instead of a NaN report.
    fn run<F>(&self, f: F, a: f64, b: f64) -> Result<IntegralResult, FunctionalError>
    where
        F: Fn(f64) -> Result<f64, FunctionalError>,
    {
        if a == b {
            return Ok(zero_result());
        }
        let captured: RefCell<Option<FunctionalError>> = RefCell::new(None);
        let g = |t: f64| match f(t) {
            Ok(v) => v,
            Err(e) => {
                captured.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        // Scale estimate from a fixed interior sample set.
        let mut scale = 0.0f64;
        for k in 1..=5 {
            let v = g(a + (b - a) * k as f64 / 6.0);
            if let Some(e) = captured.borrow_mut().take() {
                return Err(e);
            }
            scale = scale.max(v.abs());
        }
        let tol = self.quad_rel_tol * scale.max(1e-12) * (b - a);
        match integrate(&g, a, b, tol, self.policy) {
            Ok(r) => match captured.borrow_mut().take() {
                Some(e) => Err(e),
                None => Ok(r),
            },
            Err(qe) => Err(captured.borrow_mut().take().unwrap_or(FunctionalError::Quad(qe))),
        }
    }

    /// Check the iterates of both interval endpoints stay inside the table
    /// domain (iterates are monotone, so endpoints suffice).
    fn check_iterates(&self, t: f64, u: f64, depth: u32) -> Result<(), FunctionalError> {
        self.table.iterate(t, depth)?;
        self.table.iterate(t + u, depth)?;
        Ok(())
    }

    /// `Σ_{k=0}^n ln |Z(phi1^k(t))|²`.
    fn log_product_squares(&self, t: f64, n: u32) -> Result<f64, FunctionalError> {
        let mut acc = 0.0;
        let mut v = t;
        for k in 0..=n {
            if k > 0 {
                v = self.table.phi1(v)?;
            }
            let z = hardy_z(v, self.cfg)?;
            acc += 2.0 * z.abs().max(LOG_FLOOR).ln();
        }
        Ok(acc)
    }

    /// `∫_T^{T+U} |ζ^{(r)}(1/2+it)| dt` — the energy bounded below by the
    /// base inequality.
    pub fn ramachandra_lhs(
        &self,
        spec: &IntervalSpec,
        r: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        if spec.u == 0.0 {
            return Ok(zero_result());
        }
        spec.validate()?;
        SignalParams { r, ..SignalParams::default() }.validate()?;
        let cfg = self.cfg;
        self.run(|t| Ok(zeta_derivative_abs(t, r, cfg)?), spec.t, spec.t + spec.u)
    }

    /// `∫_T^{T+U} ∏_{k=0}^n |ζ(1/2 + i·phi1^k(t))|² dt`.
    pub fn product_energy(
        &self,
        spec: &IntervalSpec,
        n: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        SignalParams { n, ..SignalParams::default() }.validate()?;
        if spec.u == 0.0 {
            return Ok(zero_result());
        }
        self.check_iterates(spec.t, spec.u, n)?;
        self.run(|t| Ok(self.log_product_squares(t, n)?.exp()), spec.t, spec.t + spec.u)
    }

    /// `∫_T^{T+U} F[phi1^{n+1}(t)] ∏_{k=0}^n |ζ(1/2+i·phi1^k(t))|² dt` for a
    /// one-signed Lebesgue-integrable weight `F`.
    pub fn weighted_product_energy<F>(
        &self,
        weight: F,
        spec: &IntervalSpec,
        n: u32,
    ) -> Result<WeightedProduct, FunctionalError>
    where
        F: Fn(f64) -> f64,
    {
        SignalParams { n, ..SignalParams::default() }.validate()?;
        if spec.u == 0.0 {
            return Ok(WeightedProduct { integral: zero_result(), sign_warning: None });
        }
        self.check_iterates(spec.t, spec.u, n + 1)?;

        // One-signedness is the formula's hypothesis; sample the weight over
        // the iterated image and record a warning on violation.
        let lo = self.table.iterate(spec.t, n + 1)?;
        let hi = self.table.iterate(spec.t + spec.u, n + 1)?;
        let mut pos = false;
        let mut neg = false;
        for k in 0..=8 {
            let v = weight(lo + (hi - lo) * k as f64 / 8.0);
            pos |= v > 0.0;
            neg |= v < 0.0;
        }
        let sign_warning = (pos && neg).then(|| {
            format!("weight changes sign on [{lo:.6}, {hi:.6}]; the one-signedness hypothesis fails")
        });

        let integral = self.run(
            |t| {
                let arg = self.table.iterate(t, n + 1)?;
                Ok(weight(arg) * self.log_product_squares(t, n)?.exp())
            },
            spec.t,
            spec.t + spec.u,
        )?;
        Ok(WeightedProduct { integral, sign_warning })
    }

    /// `∫ |ζ^{(r)}(1/2+i·phi1(t))| |ζ(1/2+it)|² dt` over the preimage
    /// interval that `phi1` maps onto `[T, T+U]`.
    pub fn theorem1_lhs(
        &self,
        spec: &IntervalSpec,
        r: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        if spec.u == 0.0 {
            return Ok(zero_result());
        }
        spec.validate()?;
        SignalParams { r, ..SignalParams::default() }.validate()?;
        let (a, b) = self.table.preimage(spec.t, spec.u)?;
        let cfg = self.cfg;
        self.run(
            |t| {
                let u = self.table.phi1(t)?;
                let z = hardy_z(t, cfg)?;
                Ok(zeta_derivative_abs(u, r, cfg)? * z * z)
            },
            a,
            b,
        )
    }

    /// `∫_T^{T+U} |ζ^{(r)}(1/2+i·phi1^{n+1}(t))| ∏_{k=0}^n |ζ(1/2+i·phi1^k(t))|² dt`
    /// in the macroscopic regime.
    pub fn theorem2_lhs(
        &self,
        spec: &IntervalSpec,
        r: u32,
        n: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        spec.validate()?;
        SignalParams { r, n, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n + 1)?;
        let cfg = self.cfg;
        self.run(
            |t| {
                let arg = self.table.iterate(t, n + 1)?;
                Ok(zeta_derivative_abs(arg, r, cfg)? * self.log_product_squares(t, n)?.exp())
            },
            spec.t,
            spec.t + spec.u,
        )
    }

    /// Integrand of [`Self::corollary_lhs`] at one point (log-space
    /// assembly; public so factorization checks can probe it directly).
    pub fn corollary_integrand(
        &self,
        t: f64,
        r: u32,
        n: u32,
        m: u32,
    ) -> Result<f64, FunctionalError> {
        let arg = self.table.iterate(t, n + 1)?;
        let d = zeta_derivative_abs(arg, r, self.cfg)?;
        let pow2m = (1u64 << m) as f64;
        let log = pow2m * d.max(LOG_FLOOR).ln() + pow2m * self.log_product_squares(t, n)?;
        Ok(log.exp())
    }

    /// `∫ |ζ^{(r)}(1/2+i·phi1^{n+1}(t))|^{2^m} ∏_{k=0}^n |ζ(1/2+i·phi1^k(t))|^{2^{m+1}} dt`
    /// for `m >= 1`, in the macroscopic regime.
    pub fn corollary_lhs(
        &self,
        spec: &IntervalSpec,
        r: u32,
        n: u32,
        m: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        if m < 1 {
            return Err(FunctionalError::UnsupportedParams("corollary requires m >= 1".into()));
        }
        spec.validate()?;
        SignalParams { r, n, m, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n + 1)?;
        self.run(|t| self.corollary_integrand(t, r, n, m), spec.t, spec.t + spec.u)
    }

    /// `∫_T^{T+U} {arg ζ(1/2+i·phi1^{n+1}(t))}^{2l} ∏_{k=0}^n |ζ(…)|² dt`
    /// with `arg ζ = π S` realized through the zero-counting branch.
    pub fn arg_moment(
        &self,
        spec: &IntervalSpec,
        n: u32,
        l: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        spec.validate()?;
        SignalParams { n, l, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n + 1)?;
        self.zeros.ensure(self.table.iterate(spec.t + spec.u, n + 1)?)?;
        self.run(
            |t| {
                let arg = self.table.iterate(t, n + 1)?;
                let s = std::f64::consts::PI * self.zeros.s_unguarded(arg)?;
                Ok(s.powi(2 * l as i32) * self.log_product_squares(t, n)?.exp())
            },
            spec.t,
            spec.t + spec.u,
        )
    }

    /// `∫_T^{T+U} {S1[phi1^{n+1}(t)]}^{2l} ∏_{k=0}^n |ζ(…)|² dt`.
    pub fn s1_moment(
        &self,
        spec: &IntervalSpec,
        n: u32,
        l: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        spec.validate()?;
        SignalParams { n, l, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n + 1)?;
        self.zeros.ensure(self.table.iterate(spec.t + spec.u, n + 1)?)?;
        self.run(
            |t| {
                let arg = self.table.iterate(t, n + 1)?;
                let s1 = self.zeros.s1(arg)?.value;
                Ok(s1.powi(2 * l as i32) * self.log_product_squares(t, n)?.exp())
            },
            spec.t,
            spec.t + spec.u,
        )
    }

    /// `∫_T^{T+U1} |ζ(1/2+i·phi1^{n+1}(t))|⁴ ∏_{k=0}^n |ζ(…)|² dt` at
    /// `U1 = T^{7/8+ε}`.
    pub fn fourth_power_energy(
        &self,
        spec: &IntervalSpec,
        n: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        spec.validate()?;
        SignalParams { n, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n + 1)?;
        let cfg = self.cfg;
        self.run(
            |t| {
                let arg = self.table.iterate(t, n + 1)?;
                let z = hardy_z(arg, cfg)?;
                Ok(z.powi(4) * self.log_product_squares(t, n)?.exp())
            },
            spec.t,
            spec.t + spec.u,
        )
    }

    /// `∫_T^{T+U} ∏_{k=0}^n |ζ(1/2+i·phi1^k(t))| dt` — first powers, as
    /// printed in the concluding formula (the squared reading is
    /// [`Self::product_energy`]; both are reported side by side upstream).
    pub fn first_power_product(
        &self,
        spec: &IntervalSpec,
        n: u32,
    ) -> Result<IntegralResult, FunctionalError> {
        spec.validate()?;
        SignalParams { n, ..SignalParams::default() }.validate()?;
        self.check_iterates(spec.t, spec.u, n)?;
        self.run(|t| Ok((0.5 * self.log_product_squares(t, n)?).exp()), spec.t, spec.t + spec.u)
    }
}

/// Exact rational `(2l)!/(l!·4^l)`, reduced.
pub fn moment_coefficient(l: u32) -> Result<(u128, u128), FunctionalError> {
    if l == 0 || l > 20 {
        return Err(FunctionalError::UnsupportedParams(format!(
            "moment coefficient defined for 1 <= l <= 20, got {l}"
        )));
    }
    // (2l)!/l! = (l+1)(l+2)…(2l)
    let mut num: u128 = 1;
    for i in (l + 1)..=(2 * l) {
        num *= i as u128;
    }
    let mut den: u128 = 1;
    for _ in 0..l {
        den *= 4;
    }
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

/// [`moment_coefficient`] as a float.
pub fn moment_coefficient_f64(l: u32) -> Result<f64, FunctionalError> {
    let (n, d) = moment_coefficient(l)?;
    Ok(n as f64 / d as f64)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moment_coefficients_match_printed_formula() {
        assert_eq!(moment_coefficient(1).unwrap(), (1, 2));
        assert_eq!(moment_coefficient(2).unwrap(), (3, 4));
        assert_eq!(moment_coefficient(3).unwrap(), (15, 8));
        let approx = moment_coefficient_f64(20).unwrap();
        assert!(approx.is_finite() && approx > 0.0);
    }

    #[test]
    fn moment_coefficient_range() {
        assert!(moment_coefficient(0).is_err());
        assert!(moment_coefficient(21).is_err());
    }

    #[test]
    fn regime_bounds_and_messages() {
        // Macroscopic at T = 1e4 with the default ε = 0.03 admits T^0.4.
        IntervalSpec::new(1e4, 1e4f64.powf(0.4), Regime::Macroscopic).validate().unwrap();

        // A sub-regime U must be refused with the range in the message.
        let err = IntervalSpec::new(1e4, 10.0, Regime::Macroscopic).validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("T^(1/3+2ε)"), "message was: {msg}");

        // Short regime at T = 1e4, c = 2 admits U = 1e3.
        IntervalSpec::new(1e4, 1e3, Regime::Short).validate().unwrap();

        // Half-plus at T = 1e4 is empty with the default knobs (the lower
        // endpoint exceeds the upper), so everything is refused there.
        assert!(IntervalSpec::new(1e4, 150.0, Regime::HalfPlus).validate().is_err());
        // ... and non-empty at T = 5e4.
        let t: f64 = 5e4;
        IntervalSpec::new(t, t / t.ln().powi(2), Regime::HalfPlus).validate().unwrap();

        // Seven-eighths pins U to a point value.
        let t: f64 = 1e4;
        let u1 = t.powf(7.0 / 8.0 + 0.03);
        IntervalSpec::new(t, u1, Regime::SevenEighths).validate().unwrap();
        assert!(IntervalSpec::new(t, u1 * 1.01, Regime::SevenEighths).validate().is_err());
    }

    #[test]
    fn params_ranges() {
        assert!(SignalParams { r: 5, n: 0, m: 1, l: 1 }.validate().is_err());
        assert!(SignalParams { r: 0, n: 4, m: 1, l: 1 }.validate().is_err());
        assert!(SignalParams { r: 0, n: 0, m: 3, l: 1 }.validate().is_err());
        assert!(SignalParams { r: 0, n: 0, m: 1, l: 4 }.validate().is_err());
        SignalParams { r: 4, n: 3, m: 2, l: 3 }.validate().unwrap();
    }
}
