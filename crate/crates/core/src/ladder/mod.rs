//! The ladder transfer function `phi1`.
//!
//! `phi(T)` is the root `x` of the weighted-energy balance
//!
//! ```text
//! ∫_0^{μ(x)} Z²(t) e^{-2t/x} dt = ∫_0^T Z²(t) dt,      μ(y) = 7 y ln y,
//! ```
//!
//! and `phi1(T) = phi(T)/2`. The root is bracketed around a smoothed-model
//! guess and polished by Brent's method on the cached [`EnergyTable`]
//! kernel. Tables of `phi1` on a grid support evaluation (shape-preserving
//! monotone cubic), iteration `phi1^k`, and inversion ([`LadderTable::preimage`]).

mod energy;

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use energy::EnergyTable;

use crate::interp::{InterpError, MonotoneCubic};
use crate::quad::QuadError;
use crate::special::SpecialError;

/// Euler–Mascheroni constant.
pub(crate) const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Smallest height the ladder is constructed for (the realization of the
/// validity threshold `T0`).
pub const T_START_MIN: f64 = 100.0;

const E: f64 = std::f64::consts::E;
const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

/// Coefficient of the extremal admissible `μ(y) = 7 y ln y`.
pub const MU_COEFFICIENT: f64 = 7.0;

const TABLE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LadderError {
    #[error("mu requires y > e; got y = {0}")]
    DomainBelowE(f64),
    #[error("ladder undefined below t = {t_start}; got T = {t}")]
    HeightBelowStart { t: f64, t_start: f64 },
    #[error("energy table covers [0, {have}] but [0, {needed:.1}] is required; extend the cache")]
    EnergyTableTooShort { needed: f64, have: f64 },
    #[error(
        "bracket expansion failed at T = {t}: last bracket [{lo:.6e}, {hi:.6e}] \
         with kernel values [{k_lo:.6e}, {k_hi:.6e}] around target {c:.6e}"
    )]
    BracketFailure { t: f64, lo: f64, hi: f64, k_lo: f64, k_hi: f64, c: f64 },
    #[error("kernel energy is not monotone on [{lo:.6e}, {hi:.6e}]; run aborted for this T")]
    NonMonotoneKernel { lo: f64, hi: f64 },
    #[error("root refinement did not converge at T = {t}")]
    NoConvergence { t: f64 },
    #[error("t = {t} outside table domain [{lo}, {hi}]")]
    OutOfDomain { t: f64, lo: f64, hi: f64 },
    #[error("iterate {depth} fell to {t:.6}, below the table domain start {lo}")]
    IterateBelowDomain { depth: u32, t: f64, lo: f64 },
    #[error("target {y} outside the attained range [{lo}, {hi}]")]
    TargetOutsideRange { y: f64, lo: f64, hi: f64 },
    #[error("invalid build request: {0}")]
    InvalidBuild(&'static str),
    #[error("table invariant violated: {0}")]
    InvariantViolation(String),
    #[error("cache format error: {0}")]
    CacheFormat(String),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The extremal admissible weight scale: exactly `7 y ln y`.
pub fn mu(y: f64) -> Result<f64, LadderError> {
    if !(y > E) {
        return Err(LadderError::DomainBelowE(y));
    }
    Ok(MU_COEFFICIENT * y * y.ln())
}

/// Newton solve of the smoothed balance `(x/2)(ln(x/4π) + γ) = c`; the mean
/// of `Z²` near height `t` is `ln(t/2π) + 2γ`, which integrates the kernel
/// to exactly this form. Used only to seed the bracket.
fn smoothed_guess(c: f64) -> f64 {
    let mut x = (2.0 * c / c.max(3.0).ln()).max(12.0);
    for _ in 0..40 {
        let l = (x / FOUR_PI).ln() + EULER_GAMMA;
        let f = 0.5 * x * l - c;
        let fp = 0.5 * (l + 1.0);
        let dx = f / fp;
        x -= dx;
        if dx.abs() < 1e-12 * x {
            break;
        }
    }
    x
}

/// Solve the balance equation for `phi(T)`; the ladder value is
/// `phi1(T) = phi(T)/2`.
///
/// A bracket is established around the smoothed-model guess (expanded
/// geometrically if the fluctuation of `∫ Z²` pushes the root outside) and
/// then shrunk by Newton steps on the kernel, falling back to bisection
/// whenever a step would leave the bracket. Converges when the equation
/// residual drops below `solve_tol · ∫_0^T Z²`.
pub fn solve_ladder(energy: &EnergyTable, t: f64, solve_tol: f64) -> Result<f64, LadderError> {
    solve_ladder_hinted(energy, t, solve_tol, None)
}

/// [`solve_ladder`] with a warm-start hint (the `phi` of a nearby height),
/// used when tabulating along a grid.
pub(crate) fn solve_ladder_hinted(
    energy: &EnergyTable,
    t: f64,
    solve_tol: f64,
    hint: Option<f64>,
) -> Result<f64, LadderError> {
    if t < T_START_MIN {
        return Err(LadderError::HeightBelowStart { t, t_start: T_START_MIN });
    }
    if !(solve_tol > 0.0 && solve_tol < 1e-2) {
        return Err(LadderError::InvalidBuild("solve_tol must lie in (0, 1e-2)"));
    }
    let c = energy.cumulative(t)?.value;
    let (mut lo, mut hi) = match hint {
        // The root moves up by at most ~2·Δt·sup(phi1') from the hinted phi;
        // grid steps are capped at 10, so 72 covers any single advance.
        Some(h) => (h - 2.0, h + 72.0),
        None => {
            let guess = smoothed_guess(c);
            (guess * 0.98, guess * 1.02)
        }
    };
    lo = lo.max(E + 1.0);
    let mut k_lo = energy.kernel(lo)?.value;
    let mut k_hi = energy.kernel(hi)?.value;
    let mut grew = 0;
    while k_lo > c && grew < 80 {
        hi = lo;
        k_hi = k_lo;
        lo *= 0.97;
        if lo <= E {
            return Err(LadderError::BracketFailure { t, lo, hi, k_lo, k_hi, c });
        }
        k_lo = energy.kernel(lo)?.value;
        grew += 1;
    }
    while k_hi < c && grew < 80 {
        lo = hi;
        k_lo = k_hi;
        hi *= 1.03;
        k_hi = energy.kernel(hi)?.value;
        grew += 1;
    }
    if k_lo > c || k_hi < c {
        return Err(LadderError::BracketFailure { t, lo, hi, k_lo, k_hi, c });
    }
    if k_hi <= k_lo {
        return Err(LadderError::NonMonotoneKernel { lo, hi });
    }

    let ftol = solve_tol * c;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..80 {
        let (k, kp) = energy.kernel_with_derivative(x)?;
        let g = k - c;
        if g.abs() <= ftol {
            return Ok(x);
        }
        if kp <= 0.0 {
            return Err(LadderError::NonMonotoneKernel { lo, hi });
        }
        // Shrink the bracket with the new sign.
        if g > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let newton = x - g / kp;
        x = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(x);
        }
    }
    Err(LadderError::NoConvergence { t })
}

/// Construction metadata carried by a table (no wall-clock data: rebuilding
/// with identical parameters must produce an identical artifact).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Provenance {
    pub solver_failures: Vec<(f64, String)>,
    pub partial: bool,
}

/// Sampled, strictly monotone graph of `phi1` with evaluation, iteration,
/// and inversion.
#[derive(Debug, Clone)]
pub struct LadderTable {
    t_grid: Vec<f64>,
    phi1: Vec<f64>,
    t_start: f64,
    t_end: f64,
    step: f64,
    solve_tol: f64,
    mu_coefficient: f64,
    provenance: Provenance,
    interp: MonotoneCubic,
}

impl LadderTable {
    /// Solve `phi1` on the grid `t_start, t_start+step, ..` and validate the
    /// monotonicity and below-diagonal invariants.
    ///
    /// Per-point solver failures are recorded and the table marked partial;
    /// construction fails only if fewer than two points survive or an
    /// invariant is violated.
    pub fn build(
        energy: &EnergyTable,
        t_start: f64,
        t_end: f64,
        step: f64,
        solve_tol: f64,
    ) -> Result<Self, LadderError> {
        if t_start < T_START_MIN {
            return Err(LadderError::InvalidBuild("t_start must be >= 100"));
        }
        if !(step > 0.0 && step <= 10.0) {
            return Err(LadderError::InvalidBuild("step must lie in (0, 10]"));
        }
        if t_end < t_start {
            return Err(LadderError::InvalidBuild("t_end must be >= t_start"));
        }
        let n = ((t_end - t_start) / step + 1e-9).floor() as usize + 1;
        let grid: Vec<f64> = (0..n).map(|i| t_start + step * i as f64).collect();
        // Chunks solve independently (deterministic under any worker count);
        // within a chunk each solve warm-starts from its neighbour.
        let solved: Vec<(f64, Result<f64, LadderError>)> = grid
            .par_chunks(64)
            .flat_map_iter(|chunk| {
                let mut out = Vec::with_capacity(chunk.len());
                let mut hint = None;
                for &t in chunk {
                    let r = solve_ladder_hinted(energy, t, solve_tol, hint);
                    if let Ok(phi) = r {
                        hint = Some(phi);
                    }
                    out.push((t, r.map(|phi| 0.5 * phi)));
                }
                out
            })
            .collect();

        let mut t_grid = Vec::with_capacity(n);
        let mut phi1 = Vec::with_capacity(n);
        let mut provenance = Provenance::default();
        for (t, r) in solved {
            match r {
                Ok(p) => {
                    t_grid.push(t);
                    phi1.push(p);
                }
                Err(e) => {
                    provenance.solver_failures.push((t, e.to_string()));
                    provenance.partial = true;
                }
            }
        }
        Self::assemble(t_grid, phi1, t_start, t_end, step, solve_tol, provenance)
    }

    fn assemble(
        t_grid: Vec<f64>,
        phi1: Vec<f64>,
        t_start: f64,
        t_end: f64,
        step: f64,
        solve_tol: f64,
        provenance: Provenance,
    ) -> Result<Self, LadderError> {
        if t_grid.len() == 1 {
            // A single-point table: invariants are vacuous, interpolation is
            // pinned to the knot.
            let interp = MonotoneCubic::new(
                vec![t_grid[0], t_grid[0] + 1e-9],
                vec![phi1[0], phi1[0] + 1e-18],
            )?;
            return Ok(LadderTable {
                t_grid,
                phi1,
                t_start,
                t_end,
                step,
                solve_tol,
                mu_coefficient: MU_COEFFICIENT,
                provenance,
                interp,
            });
        }
        if t_grid.len() < 2 {
            return Err(LadderError::InvalidBuild("fewer than two grid points solved"));
        }
        for i in 1..phi1.len() {
            if phi1[i] <= phi1[i - 1] {
                return Err(LadderError::InvariantViolation(format!(
                    "phi1 not strictly increasing at t = {}",
                    t_grid[i]
                )));
            }
        }
        for (t, p) in t_grid.iter().zip(&phi1) {
            if p >= t {
                return Err(LadderError::InvariantViolation(format!(
                    "phi1({t}) = {p} not below the diagonal"
                )));
            }
        }
        let interp = MonotoneCubic::new(t_grid.clone(), phi1.clone())?;
        Ok(LadderTable {
            t_grid,
            phi1,
            t_start,
            t_end,
            step,
            solve_tol,
            mu_coefficient: MU_COEFFICIENT,
            provenance,
            interp,
        })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t_grid[0], *self.t_grid.last().unwrap())
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn solve_tol(&self) -> f64 {
        self.solve_tol
    }

    pub fn mu_coefficient(&self) -> f64 {
        self.mu_coefficient
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.t_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_grid.is_empty()
    }

    pub fn knots(&self) -> (&[f64], &[f64]) {
        (&self.t_grid, &self.phi1)
    }

    /// `phi1(t)` by shape-preserving interpolation of the table.
    pub fn phi1(&self, t: f64) -> Result<f64, LadderError> {
        let (lo, hi) = self.domain();
        if !(lo..=hi).contains(&t) {
            return Err(LadderError::OutOfDomain { t, lo, hi });
        }
        // Knots reproduce the solved values exactly.
        if let Ok(i) = self.t_grid.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            return Ok(self.phi1[i]);
        }
        Ok(self.interp.eval(t)?)
    }

    /// `phi1^k(t)`: k-fold composition; `k = 0` is the identity.
    pub fn iterate(&self, t: f64, k: u32) -> Result<f64, LadderError> {
        let mut v = t;
        for depth in 1..=k {
            let (lo, hi) = self.domain();
            if !(lo..=hi).contains(&v) {
                return Err(LadderError::IterateBelowDomain { depth, t: v, lo });
            }
            v = self.phi1(v).map_err(|e| match e {
                LadderError::OutOfDomain { t, lo, .. } => {
                    LadderError::IterateBelowDomain { depth, t, lo }
                }
                other => other,
            })?;
        }
        Ok(v)
    }

    /// The interval `[a, b]` mapped onto `[T, T+U]` by `phi1`: monotone
    /// inversion of the interpolant at both endpoints.
    pub fn preimage(&self, t: f64, u: f64) -> Result<(f64, f64), LadderError> {
        if u < 0.0 {
            return Err(LadderError::InvalidBuild("preimage requires U >= 0"));
        }
        let (plo, phi) = (self.phi1[0], *self.phi1.last().unwrap());
        for y in [t, t + u] {
            if !(plo..=phi).contains(&y) {
                return Err(LadderError::TargetOutsideRange { y, lo: plo, hi: phi });
            }
        }
        let a = self.interp.invert(t)?;
        let b = if u == 0.0 { a } else { self.interp.invert(t + u)? };
        Ok((a, b))
    }

    /// Write the versioned delimited text cache: a commented key-value
    /// header followed by `t <tab> phi1` rows. Floats are printed in
    /// shortest round-trip form, so a rebuild with identical parameters
    /// produces an identical file.
    pub fn save(&self, path: &Path) -> Result<(), LadderError> {
        let f = std::fs::File::create(path)?;
        let mut w = BufWriter::new(f);
        writeln!(w, "# ladder table cache")?;
        writeln!(w, "version = {TABLE_FORMAT_VERSION}")?;
        writeln!(w, "t_start = {}", self.t_start)?;
        writeln!(w, "t_end = {}", self.t_end)?;
        writeln!(w, "step = {}", self.step)?;
        writeln!(w, "solve_tol = {}", self.solve_tol)?;
        writeln!(w, "mu_coefficient = {}", self.mu_coefficient)?;
        writeln!(w, "partial = {}", self.provenance.partial)?;
        writeln!(w, "rows = {}", self.t_grid.len())?;
        for (t, msg) in &self.provenance.solver_failures {
            writeln!(w, "failed\t{t}\t{msg}")?;
        }
        writeln!(w, "# t\tphi1")?;
        for (t, p) in self.t_grid.iter().zip(&self.phi1) {
            writeln!(w, "{t}\t{p}")?;
        }
        Ok(())
    }

    /// Load and validate a cache written by [`LadderTable::save`]. The
    /// monotonicity and below-diagonal invariants are re-checked before the
    /// table is usable; mismatched format versions are refused.
    pub fn load(path: &Path) -> Result<Self, LadderError> {
        let f = std::fs::File::open(path)?;
        let r = BufReader::new(f);
        let mut header = std::collections::HashMap::new();
        let mut failures = Vec::new();
        let mut t_grid = Vec::new();
        let mut phi1 = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("failed\t") {
                let mut it = rest.splitn(2, '\t');
                let t: f64 = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| LadderError::CacheFormat("bad failure row".into()))?;
                failures.push((t, it.next().unwrap_or("").to_string()));
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                header.insert(key.trim().to_string(), value.trim().to_string());
                continue;
            }
            let mut it = line.split_whitespace();
            let (a, b) = (it.next(), it.next());
            match (a.and_then(|s| s.parse::<f64>().ok()), b.and_then(|s| s.parse::<f64>().ok())) {
                (Some(t), Some(p)) => {
                    t_grid.push(t);
                    phi1.push(p);
                }
                _ => return Err(LadderError::CacheFormat(format!("bad data row: {line}"))),
            }
        }
        let get = |k: &str| -> Result<f64, LadderError> {
            header
                .get(k)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| LadderError::CacheFormat(format!("missing header field {k}")))
        };
        let version = get("version")? as u32;
        if version != TABLE_FORMAT_VERSION {
            return Err(LadderError::CacheFormat(format!(
                "table cache version {version}, expected {TABLE_FORMAT_VERSION}"
            )));
        }
        let rows = get("rows")? as usize;
        if rows != t_grid.len() {
            return Err(LadderError::CacheFormat(format!(
                "row count mismatch: header says {rows}, file has {}",
                t_grid.len()
            )));
        }
        let mu_c = get("mu_coefficient")?;
        if mu_c != MU_COEFFICIENT {
            return Err(LadderError::CacheFormat(format!(
                "table built with mu coefficient {mu_c}, expected {MU_COEFFICIENT}"
            )));
        }
        let partial = header.get("partial").map(|s| s == "true").unwrap_or(false);
        Self::assemble(
            t_grid,
            phi1,
            get("t_start")?,
            get("t_end")?,
            get("step")?,
            get("solve_tol")?,
            Provenance { solver_failures: failures, partial },
        )
    }
}
