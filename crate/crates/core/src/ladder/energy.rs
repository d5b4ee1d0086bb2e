//! Cached energy integrals of `Z²`.
//!
//! The table stores, per unit cell `[j, j+1)`, the moments
//! `m_k = ∫ Z²(t) (t - j - 1/2)^k dt` for `k = 0..=3`. From these,
//!
//! * `cumulative(T) = ∫_0^T Z²` is a prefix sum plus one fresh panel, and
//! * `kernel(x) = ∫_0^{μ(x)} Z²(t) e^{-2t/x} dt` is a weighted cell sum:
//!   expanding the exponential about each cell midpoint gives
//!   `Σ_j e^{-2(j+1/2)/x} Σ_k (-2/x)^k m_{jk}/k!` with a relative remainder
//!   below `(1/x)⁴/24` — negligible for every `x` the ladder solver visits.
//!
//! The weight beyond `t = 14x` is below `e^{-28}`, so the cell sum is
//! truncated there (the spec's tail budget of 1e-12 of the running value).
//! Cells are independent, so construction parallelizes and extension is
//! deterministic regardless of request order.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::quad::{integrate, integrate_multi, IntegralResult, PanelPolicy};
use crate::special::{hardy_z, EvalConfig};

use super::{mu, LadderError};

/// Per-cell absolute tolerance for the moment integrals.
const CELL_TOL: f64 = 1e-9;

/// Kernel weight truncation: `e^{-2t/x}` at `t = TAIL_FACTOR·x` is ~4e-13.
const TAIL_FACTOR: f64 = 14.0;

/// Below this `x` the kernel is integrated directly (the moment expansion
/// wants `x` large; small `x` makes `μ(x)` small enough for direct panels).
const SERIES_MIN_X: f64 = 100.0;

/// Re-anchor the recursive exponential every this many cells.
const EXP_BLOCK: usize = 4096;

const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"LLABENE\x01";

/// Unit-cell moment table for `Z²` with prefix sums.
#[derive(Debug, Clone)]
pub struct EnergyTable {
    cfg: EvalConfig,
    policy: PanelPolicy,
    moments: Vec<[f64; 4]>,
    /// `prefix[j] = Σ_{i<j} m_{i0}`, built by serial addition.
    prefix: Vec<f64>,
}

impl EnergyTable {
    /// Build the table covering `[0, t_max]`.
    pub fn build(cfg: &EvalConfig, t_max: f64) -> Result<Self, LadderError> {
        let mut table = EnergyTable {
            cfg: *cfg,
            // One 15-node panel per oscillation: the rule is exact far past
            // the local polynomial degree of Z² between zeros, and the cell
            // count makes tighter caps prohibitively expensive.
            policy: PanelPolicy { points_per_oscillation: 15, max_depth: 28, rule_order: 15 },
            moments: Vec::new(),
            prefix: vec![0.0],
        };
        table.ensure(t_max)?;
        Ok(table)
    }

    /// Extend coverage to `[0, t_max]`; cells already present are kept.
    pub fn ensure(&mut self, t_max: f64) -> Result<(), LadderError> {
        if !(t_max >= 0.0) || t_max > crate::special::T_SUPPORT_MAX {
            return Err(LadderError::InvalidBuild("t_max outside supported range"));
        }
        let target = t_max.ceil() as usize;
        if self.moments.len() >= target {
            return Ok(());
        }
        let cfg = self.cfg;
        let policy = self.policy;
        let from = self.moments.len();
        let new_cells: Vec<Result<[f64; 4], LadderError>> = (from..target)
            .into_par_iter()
            .map(|j| cell_moments(j, &cfg, &policy))
            .collect();
        for cell in new_cells {
            let cell = cell?;
            let last = *self.prefix.last().unwrap();
            self.moments.push(cell);
            self.prefix.push(last + cell[0]);
        }
        Ok(())
    }

    /// Height covered by cached cells.
    pub fn t_max(&self) -> f64 {
        self.moments.len() as f64
    }

    pub fn config(&self) -> &EvalConfig {
        &self.cfg
    }

    /// `∫_0^T Z²(t) dt`: cached prefix plus a fresh panel integral for the
    /// fractional cell (never polynomial interpolation).
    pub fn cumulative(&self, t: f64) -> Result<IntegralResult, LadderError> {
        if !(t >= 0.0) {
            return Err(LadderError::InvalidBuild("cumulative requires T >= 0"));
        }
        if t == 0.0 {
            return Ok(IntegralResult { value: 0.0, abs_error_est: 0.0, evaluations: 0, converged: true });
        }
        let j = (t.floor() as usize).min(self.moments.len());
        if t > self.moments.len() as f64 {
            return Err(LadderError::EnergyTableTooShort { needed: t, have: self.t_max() });
        }
        let cfg = self.cfg;
        let frac = integrate(
            |u| {
                let z = hardy_z(u, &cfg).unwrap_or(f64::NAN);
                z * z
            },
            j as f64,
            t,
            CELL_TOL,
            &self.policy,
        )?;
        Ok(IntegralResult {
            value: self.prefix[j] + frac.value,
            abs_error_est: CELL_TOL * j as f64 + frac.abs_error_est,
            evaluations: frac.evaluations,
            converged: frac.converged,
        })
    }

    /// `∫_0^{μ(x)} Z²(t) e^{-2t/x} dt` for `x > e`.
    pub fn kernel(&self, x: f64) -> Result<IntegralResult, LadderError> {
        let mu_x = mu(x)?;
        let cfg = self.cfg;
        if x < SERIES_MIN_X {
            let r = integrate(
                |u| {
                    let z = hardy_z(u, &cfg).unwrap_or(f64::NAN);
                    z * z * (-2.0 * u / x).exp()
                },
                0.0,
                mu_x,
                CELL_TOL * mu_x.max(1.0),
                &self.policy,
            )?;
            return Ok(r);
        }

        let cut = (TAIL_FACTOR * x).min(mu_x);
        let cells = cut.floor() as usize;
        if cells > self.moments.len() {
            return Err(LadderError::EnergyTableTooShort {
                needed: cut,
                have: self.t_max(),
            });
        }
        let c1 = -2.0 / x;
        let c2 = 0.5 * c1 * c1;
        let c3 = c1 * c1 * c1 / 6.0;
        let decay = (-2.0 / x).exp();
        let mut value = 0.0;
        let mut weight = 0.0;
        for j in 0..cells {
            if j % EXP_BLOCK == 0 {
                weight = (-(2.0 * (j as f64 + 0.5)) / x).exp();
            }
            let m = &self.moments[j];
            value += weight * (m[0] + c1 * m[1] + c2 * m[2] + c3 * m[3]);
            weight *= decay;
        }
        // Series remainder O((1/x)⁴/24) relative, per-cell quadrature error,
        // and the truncated tail (bounded by the weight at the cut).
        let err = value.abs() * (1.0 / x).powi(4) / 24.0
            + CELL_TOL * cells as f64
            + value.abs() * 1e-12;
        Ok(IntegralResult {
            value,
            abs_error_est: err,
            evaluations: cells as u64,
            converged: true,
        })
    }

    /// Kernel value together with its x-derivative
    /// `K'(x) = (2/x²) ∫ t·Z²(t) e^{-2t/x} dt`, in one cell pass. The
    /// t-moment of a cell is `mid·m_k + m_{k+1}`, so the derivative series
    /// is carried one order shorter; that only steers the Newton step, the
    /// convergence test is on the kernel value itself.
    pub fn kernel_with_derivative(&self, x: f64) -> Result<(f64, f64), LadderError> {
        let mu_x = mu(x)?;
        if x < SERIES_MIN_X {
            return Err(LadderError::InvalidBuild(
                "kernel derivative path requires x >= 100",
            ));
        }
        let cut = (TAIL_FACTOR * x).min(mu_x);
        let cells = cut.floor() as usize;
        if cells > self.moments.len() {
            return Err(LadderError::EnergyTableTooShort { needed: cut, have: self.t_max() });
        }
        let c1 = -2.0 / x;
        let c2 = 0.5 * c1 * c1;
        let c3 = c1 * c1 * c1 / 6.0;
        let decay = (-2.0 / x).exp();
        let mut value = 0.0;
        let mut tvalue = 0.0;
        let mut weight = 0.0;
        for j in 0..cells {
            if j % EXP_BLOCK == 0 {
                weight = (-(2.0 * (j as f64 + 0.5)) / x).exp();
            }
            let m = &self.moments[j];
            let mid = j as f64 + 0.5;
            value += weight * (m[0] + c1 * m[1] + c2 * m[2] + c3 * m[3]);
            tvalue += weight * (mid * (m[0] + c1 * m[1] + c2 * m[2]) + (m[1] + c1 * m[2] + c2 * m[3]));
            weight *= decay;
        }
        Ok((value, 2.0 * tvalue / (x * x)))
    }

    /// Serialize to a small versioned binary cache.
    pub fn save(&self, path: &Path) -> Result<(), LadderError> {
        let f = std::fs::File::create(path)?;
        let mut w = BufWriter::new(f);
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&self.cfg.target_abs_tol.to_le_bytes())?;
        w.write_all(&(self.cfg.rs_correction_terms as u64).to_le_bytes())?;
        w.write_all(&self.cfg.rs_crossover.to_le_bytes())?;
        w.write_all(&CELL_TOL.to_le_bytes())?;
        w.write_all(&(self.moments.len() as u64).to_le_bytes())?;
        for m in &self.moments {
            for v in m {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Load a cache written by [`EnergyTable::save`]. The stored header must
    /// match the requested configuration; otherwise the cache is refused and
    /// the caller should rebuild.
    pub fn load(path: &Path, cfg: &EvalConfig) -> Result<Self, LadderError> {
        let f = std::fs::File::open(path)?;
        let mut r = BufReader::new(f);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(LadderError::CacheFormat("bad magic in energy cache".into()));
        }
        let version = read_u64(&mut r, 4)? as u32;
        if version != FORMAT_VERSION {
            return Err(LadderError::CacheFormat(format!(
                "energy cache version {version}, expected {FORMAT_VERSION}"
            )));
        }
        let tol = read_f64(&mut r)?;
        let terms = read_u64(&mut r, 8)? as u32;
        let crossover = read_f64(&mut r)?;
        let cell_tol = read_f64(&mut r)?;
        if tol != cfg.target_abs_tol
            || terms != cfg.rs_correction_terms
            || crossover != cfg.rs_crossover
            || cell_tol != CELL_TOL
        {
            return Err(LadderError::CacheFormat(
                "energy cache built with a different configuration".into(),
            ));
        }
        let n = read_u64(&mut r, 8)? as usize;
        let mut moments = Vec::with_capacity(n);
        let mut prefix = Vec::with_capacity(n + 1);
        prefix.push(0.0);
        for _ in 0..n {
            let mut m = [0.0; 4];
            for v in m.iter_mut() {
                *v = read_f64(&mut r)?;
                if !v.is_finite() {
                    return Err(LadderError::CacheFormat("non-finite moment in cache".into()));
                }
            }
            let last = *prefix.last().unwrap();
            prefix.push(last + m[0]);
            moments.push(m);
        }
        Ok(EnergyTable { cfg: *cfg, policy: PanelPolicy::default(), moments, prefix })
    }
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, LadderError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R, len: usize) -> Result<u64, LadderError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b[..len])?;
    Ok(u64::from_le_bytes(b))
}

fn cell_moments(j: usize, cfg: &EvalConfig, policy: &PanelPolicy) -> Result<[f64; 4], LadderError> {
    let a = j as f64;
    let mid = a + 0.5;
    let (vals, _err, _evals, _conv) = integrate_multi(
        |t| {
            let z = hardy_z(t, cfg).unwrap_or(f64::NAN);
            let z2 = z * z;
            let u = t - mid;
            [z2, z2 * u, z2 * u * u, z2 * u * u * u]
        },
        a,
        a + 1.0,
        CELL_TOL,
        policy,
    )?;
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cumulative_is_zero_at_origin() {
        let table = EnergyTable::build(&EvalConfig::default(), 4.0).unwrap();
        assert_eq!(table.cumulative(0.0).unwrap().value, 0.0);
    }

    #[test]
    fn cumulative_matches_direct_quadrature() {
        let cfg = EvalConfig::default();
        let table = EnergyTable::build(&cfg, 40.0).unwrap();
        let direct = integrate(
            |u| {
                let z = hardy_z(u, &cfg).unwrap();
                z * z
            },
            0.0,
            37.25,
            1e-10,
            &PanelPolicy::default(),
        )
        .unwrap();
        let cached = table.cumulative(37.25).unwrap();
        assert!(
            (cached.value - direct.value).abs() < 1e-7,
            "{} vs {}",
            cached.value,
            direct.value
        );
    }

    #[test]
    fn too_short_table_is_reported() {
        let table = EnergyTable::build(&EvalConfig::default(), 5.0).unwrap();
        assert!(matches!(
            table.cumulative(9.0),
            Err(LadderError::EnergyTableTooShort { .. })
        ));
    }

    #[test]
    fn kernel_direct_path_small_x() {
        // x just above e: μ(x) is small and the value must be below the
        // unweighted energy.
        let cfg = EvalConfig::default();
        let table = EnergyTable::build(&cfg, 35.0).unwrap();
        let x = 3.5;
        let k = table.kernel(x).unwrap();
        let c = table.cumulative(mu(x).unwrap()).unwrap();
        assert!(k.value > 0.0 && k.value < c.value, "k = {}, c = {}", k.value, c.value);
    }

    #[test]
    fn save_load_round_trip() {
        let cfg = EvalConfig::default();
        let table = EnergyTable::build(&cfg, 12.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.bin");
        table.save(&path).unwrap();
        let back = EnergyTable::load(&path, &cfg).unwrap();
        assert_eq!(table.moments, back.moments);
        assert_eq!(table.prefix, back.prefix);
        // A mismatched configuration must be refused.
        let other = EvalConfig { rs_crossover: 6000.0, ..cfg };
        assert!(matches!(
            EnergyTable::load(&path, &other),
            Err(LadderError::CacheFormat(_))
        ));
    }
}
