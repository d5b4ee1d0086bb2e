//! Zero ordinates of the Hardy Z function, the counting function `N(t)`,
//! and the argument functions `S(t) = N(t) - 1 - θ(t)/π`,
//! `S1(T) = ∫_0^T S(t) dt`.
//!
//! Ordinates are found by sign-change scanning on a grid anchored to
//! absolute unit intervals (so the table contents do not depend on the order
//! or size of extension requests), with an 8-fold refinement pass and a dip
//! guard for close pairs. Each completed unit interval is checked against
//! the counting formula `N ≈ θ/π + 1`; a persistent discrepancy means a
//! missed pair and is reported rather than absorbed.
//!
//! `S1` is evaluated in closed form: since `N` is a step function,
//! `∫_0^T N dt = Σ_{γ ≤ T} (T - γ)`, hence
//! `S1(T) = Σ_{γ ≤ T}(T - γ) - T - (1/π)∫_0^T θ dt`. The theta integral is
//! kept as a compensated per-unit prefix table.

use std::sync::RwLock;

use rayon::prelude::*;

use crate::quad::{integrate, oscillation_scale, IntegralResult, PanelPolicy};

use super::{hardy_z, theta, EvalConfig, SpecialError, T_SUPPORT_MAX};

/// Queries closer than this to an ordinate are refused where the spec
/// requires a definite count.
const ORDINATE_GUARD: f64 = 1e-9;

/// Bisection width for locating an ordinate.
const LOCATE_TOL: f64 = 1e-11;

/// |S| beyond this at a unit boundary signals a missed close pair.
const COUNT_SANITY_BOUND: f64 = 2.25;

/// Neumaier-compensated running sum whose snapshots are stored per entry;
/// keeps prefix tables of ~1e9-scale sums accurate to a few ulps per entry.
#[derive(Debug, Default)]
struct CompensatedPrefix {
    entries: Vec<f64>,
    sum: f64,
    comp: f64,
}

impl CompensatedPrefix {
    fn with_zero() -> Self {
        CompensatedPrefix { entries: vec![0.0], sum: 0.0, comp: 0.0 }
    }

    fn push(&mut self, x: f64) {
        let t = self.sum + x;
        self.comp += if self.sum.abs() >= x.abs() {
            (self.sum - t) + x
        } else {
            (x - t) + self.sum
        };
        self.sum = t;
        self.entries.push(self.sum + self.comp);
    }
}

#[derive(Debug, Default)]
struct ZeroData {
    /// Unit intervals `[0, scanned_units)` have been scanned.
    scanned_units: usize,
    ordinates: Vec<f64>,
    /// `pref_gamma.entries[k] = Σ_{i<k} γ_i`.
    pref_gamma: CompensatedPrefix,
    /// `theta_cum.entries[m] = ∫_0^m θ dt` on the unit grid.
    theta_cum: CompensatedPrefix,
}

/// Grow-only cache of zero ordinates with derived argument functions.
///
/// Extension is deterministic: the table contents for a given height do not
/// depend on the sequence of `ensure` calls that produced them.
pub struct Zeros {
    cfg: EvalConfig,
    inner: RwLock<ZeroData>,
}

struct UnitScan {
    zeros: Vec<f64>,
    theta_cell: f64,
}

impl Zeros {
    pub fn new(cfg: EvalConfig) -> Self {
        let data = ZeroData {
            pref_gamma: CompensatedPrefix::with_zero(),
            theta_cum: CompensatedPrefix::with_zero(),
            ..ZeroData::default()
        };
        Zeros { cfg, inner: RwLock::new(data) }
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    /// Height below which all zeros are known to the cache.
    pub fn scanned_to(&self) -> f64 {
        self.inner.read().unwrap().scanned_units as f64
    }

    /// Extend the cache to cover `(0, t]`.
    pub fn ensure(&self, t: f64) -> Result<(), SpecialError> {
        if !(0.0..=T_SUPPORT_MAX - 2.0).contains(&t) {
            return Err(SpecialError::OutOfRange { t, lo: 0.0, hi: T_SUPPORT_MAX - 2.0 });
        }
        let target = t.ceil() as usize + 1;
        if self.inner.read().unwrap().scanned_units >= target {
            return Ok(());
        }
        let mut data = self.inner.write().unwrap();
        let from = data.scanned_units;
        if from >= target {
            return Ok(());
        }
        let cfg = self.cfg;
        let scans: Vec<Result<UnitScan, SpecialError>> =
            (from..target).into_par_iter().map(|m| scan_unit(m, &cfg)).collect();
        for (m, scan) in (from..target).zip(scans) {
            let scan = scan?;
            for &g in &scan.zeros {
                data.pref_gamma.push(g);
                data.ordinates.push(g);
            }
            data.theta_cum.push(scan.theta_cell);
            data.scanned_units = m + 1;

            // Counting-formula sanity: a missed close pair shifts N by 2 and
            // leaves |S| pinned well above its desk-scale range.
            let b = (m + 1) as f64;
            let s = data.ordinates.len() as f64 - 1.0 - theta(b)? / std::f64::consts::PI;
            if s.abs() > COUNT_SANITY_BOUND {
                return Err(SpecialError::CountSanity { t: b, s });
            }
        }
        Ok(())
    }

    /// `N(t)`: number of zeros in `(0, t]`.
    pub fn count(&self, t: f64) -> Result<usize, SpecialError> {
        if t < 0.0 || !t.is_finite() {
            return Err(SpecialError::OutOfRange { t, lo: 0.0, hi: T_SUPPORT_MAX });
        }
        self.ensure(t)?;
        let data = self.inner.read().unwrap();
        let k = data.ordinates.partition_point(|&g| g <= t);
        let near = (k > 0 && (t - data.ordinates[k - 1]).abs() < ORDINATE_GUARD)
            || (k < data.ordinates.len() && (data.ordinates[k] - t).abs() < ORDINATE_GUARD);
        if near {
            let ordinate =
                if k > 0 && (t - data.ordinates[k - 1]).abs() < ORDINATE_GUARD {
                    data.ordinates[k - 1]
                } else {
                    data.ordinates[k]
                };
            return Err(SpecialError::NearZeroOrdinate { t, ordinate });
        }
        Ok(k)
    }

    fn count_unguarded(data: &ZeroData, t: f64) -> usize {
        data.ordinates.partition_point(|&g| g <= t)
    }

    /// `S(t) = N(t) - 1 - θ(t)/π` (the standard continuous-variation branch).
    pub fn s(&self, t: f64) -> Result<f64, SpecialError> {
        if t < 10.0 {
            return Err(SpecialError::OutOfRange { t, lo: 10.0, hi: T_SUPPORT_MAX });
        }
        let n = self.count(t)?;
        Ok(n as f64 - 1.0 - theta(t)? / std::f64::consts::PI)
    }

    /// `S(t)` without the near-ordinate refusal: at an ordinate the
    /// right-limit value is returned. For integrands, where the jump set has
    /// measure zero.
    pub fn s_unguarded(&self, t: f64) -> Result<f64, SpecialError> {
        if t < 10.0 {
            return Err(SpecialError::OutOfRange { t, lo: 10.0, hi: T_SUPPORT_MAX });
        }
        self.ensure(t)?;
        let data = self.inner.read().unwrap();
        let n = Self::count_unguarded(&data, t);
        Ok(n as f64 - 1.0 - theta(t)? / std::f64::consts::PI)
    }

    /// `S1(T) = ∫_0^T S(t) dt`, in closed form over the zero table.
    pub fn s1(&self, t: f64) -> Result<IntegralResult, SpecialError> {
        if t < 10.0 {
            return Err(SpecialError::OutOfRange { t, lo: 10.0, hi: T_SUPPORT_MAX });
        }
        self.ensure(t)?;
        let data = self.inner.read().unwrap();
        let k = Self::count_unguarded(&data, t);
        let zeros_part = k as f64 * t - data.pref_gamma.entries[k];
        let m = t.floor() as usize;
        let tail = integrate(
            |u| theta(u).unwrap_or(f64::NAN),
            m as f64,
            t,
            1e-10,
            &PanelPolicy::default(),
        )
        .map_err(|_| SpecialError::OutOfRange { t, lo: 0.0, hi: T_SUPPORT_MAX })?;
        let theta_int = data.theta_cum.entries[m] + tail.value;
        let value = zeros_part - t - theta_int / std::f64::consts::PI;
        let abs_error_est = 1e-7 * (k as f64).sqrt()
            + 1e-12 * theta_int.abs()
            + tail.abs_error_est
            + 4e-16 * zeros_part.abs();
        Ok(IntegralResult {
            value,
            abs_error_est,
            evaluations: tail.evaluations,
            converged: tail.converged,
        })
    }

    /// Zero ordinates in `[a, b]`.
    pub fn between(&self, a: f64, b: f64) -> Result<Vec<f64>, SpecialError> {
        self.ensure(b)?;
        let data = self.inner.read().unwrap();
        let lo = data.ordinates.partition_point(|&g| g < a);
        let hi = data.ordinates.partition_point(|&g| g <= b);
        Ok(data.ordinates[lo..hi].to_vec())
    }
}

/// Scan the unit interval `[m, m+1)` for zeros and integrate theta over it.
fn scan_unit(m: usize, cfg: &EvalConfig) -> Result<UnitScan, SpecialError> {
    let a = m as f64;
    let b = a + 1.0;
    let n_sub = ((8.0 / oscillation_scale(b)).ceil() as usize).max(2);
    let fine = n_sub * 8;
    let step = 1.0 / fine as f64;

    let z_at = |x: f64| -> Result<f64, SpecialError> {
        let v = hardy_z(x, cfg)?;
        // An exact zero at a sample point would make the sign walk ambiguous.
        Ok(if v == 0.0 { f64::MIN_POSITIVE } else { v })
    };

    let mut zeros = Vec::new();
    let mut x0 = a;
    let mut z0 = z_at(x0)?;
    for i in 1..=fine {
        let x1 = if i == fine { b } else { a + step * i as f64 };
        let z1 = z_at(x1)?;
        if z0 * z1 < 0.0 {
            refine_crossing(x0, x1, z0, z1, &z_at, &mut zeros)?;
        } else if z0.abs().min(z1.abs()) < 0.02 {
            // Dip guard: a close pair hiding inside one fine cell.
            let xm = 0.5 * (x0 + x1);
            let zm = z_at(xm)?;
            if z0 * zm < 0.0 {
                refine_crossing(x0, xm, z0, zm, &z_at, &mut zeros)?;
                refine_crossing(xm, x1, zm, z1, &z_at, &mut zeros)?;
            } else if zm.abs() < z0.abs().min(z1.abs()) && zm.abs() < 1e-4 {
                return Err(SpecialError::AmbiguousZeroPattern {
                    a: x0,
                    b: x1,
                    min_abs: zm.abs(),
                });
            }
        }
        x0 = x1;
        z0 = z1;
    }

    let theta_cell = integrate(
        |u| theta(u).unwrap_or(f64::NAN),
        a,
        b,
        1e-11,
        &PanelPolicy::default(),
    )
    .map_err(|_| SpecialError::OutOfRange { t: a, lo: 0.0, hi: T_SUPPORT_MAX })?
    .value;

    Ok(UnitScan { zeros, theta_cell })
}

/// Subdivide a sign-change cell once more, then bisect each crossing.
fn refine_crossing<F: Fn(f64) -> Result<f64, SpecialError>>(
    x0: f64,
    x1: f64,
    z0: f64,
    z1: f64,
    z_at: &F,
    out: &mut Vec<f64>,
) -> Result<(), SpecialError> {
    let mut xs = [0.0; 5];
    let mut zs = [0.0; 5];
    for i in 0..5 {
        xs[i] = x0 + (x1 - x0) * i as f64 / 4.0;
        zs[i] = match i {
            0 => z0,
            4 => z1,
            _ => z_at(xs[i])?,
        };
    }
    for i in 0..4 {
        if zs[i] * zs[i + 1] < 0.0 {
            out.push(bisect(xs[i], xs[i + 1], zs[i], z_at)?);
        }
    }
    Ok(())
}

fn bisect<F: Fn(f64) -> Result<f64, SpecialError>>(
    mut lo: f64,
    mut hi: f64,
    z_lo: f64,
    z_at: &F,
) -> Result<f64, SpecialError> {
    let mut s_lo = z_lo.signum();
    for _ in 0..64 {
        if hi - lo < LOCATE_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let zm = z_at(mid)?;
        if zm.signum() == s_lo {
            lo = mid;
            s_lo = zm.signum();
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros() -> Zeros {
        Zeros::new(EvalConfig::default())
    }

    #[test]
    fn no_zeros_below_ten() {
        let z = zeros();
        assert_eq!(z.count(10.0).unwrap(), 0);
    }

    #[test]
    fn first_zero_location() {
        let z = zeros();
        let got = z.between(14.0, 14.2).unwrap();
        assert_eq!(got.len(), 1);
        assert!((got[0] - 14.134_725_141_734_69).abs() < 1e-7, "γ₁ = {}", got[0]);
    }

    #[test]
    fn counts_at_fifty_and_hundred() {
        let z = zeros();
        assert_eq!(z.count(50.0).unwrap(), 10);
        assert_eq!(z.count(100.0).unwrap(), 29);
    }

    #[test]
    fn near_ordinate_is_refused() {
        let z = zeros();
        let g1 = z.between(14.0, 14.2).unwrap()[0];
        assert!(matches!(z.count(g1), Err(SpecialError::NearZeroOrdinate { .. })));
    }

    #[test]
    fn s_identity_holds() {
        let z = zeros();
        for &t in &[20.0, 55.5, 99.2] {
            let s = z.s(t).unwrap();
            let n = z.count(t).unwrap() as f64;
            let lhs = std::f64::consts::PI * s + theta(t).unwrap() + std::f64::consts::PI;
            assert!((lhs - std::f64::consts::PI * n).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn s_jumps_by_one_across_ordinates() {
        let z = zeros();
        for g in z.between(10.0, 60.0).unwrap() {
            let below = z.s(g - 1e-4).unwrap();
            let above = z.s(g + 1e-4).unwrap();
            assert!(((above - below) - 1.0).abs() < 1e-3, "γ = {g}");
        }
    }

    #[test]
    fn s1_additivity() {
        let z = zeros();
        let a = z.s1(40.0).unwrap().value;
        let b = z.s1(60.0).unwrap().value;
        // ∫_40^60 S dt by fine Simpson over smooth pieces.
        let mut cut = vec![40.0];
        cut.extend(z.between(40.0, 60.0).unwrap());
        cut.push(60.0);
        let mut acc = 0.0;
        for w in cut.windows(2) {
            let (lo, hi) = (w[0] + 1e-6, w[1] - 1e-6);
            let n = 400;
            let h = (hi - lo) / n as f64;
            let mut simpson = z.s(lo).unwrap() + z.s(hi).unwrap();
            for i in 1..n {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                simpson += w * z.s(lo + h * i as f64).unwrap();
            }
            acc += simpson * h / 3.0;
        }
        assert!((b - a - acc).abs() < 1e-3, "Δ = {}, simpson = {acc}", b - a);
    }
}
