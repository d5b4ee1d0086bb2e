//! Numerical laboratory for zeta-generated signals on the critical line.
//!
//! The crate has five layers, each usable on its own:
//!
//! * [`special`] — the Riemann–Siegel theta function, the Hardy Z function,
//!   `zeta(1/2 + it)` and its derivatives, zero counting, and the argument
//!   functions `S(t)`, `S1(T)`.
//! * [`quad`] — adaptive panel quadrature tuned to `|Z|`-type oscillatory
//!   integrands, with honest error estimates and deterministic summation.
//! * [`ladder`] — the monotone height-transfer function `phi1` obtained by
//!   solving the weighted-energy balance equation
//!   `∫_0^{mu(x)} Z²(t) e^{-2t/x} dt = ∫_0^T Z²(t) dt`, plus tabulation,
//!   iteration and inversion.
//! * [`functionals`] — the energy integrals built from `|zeta|`-products
//!   along ladder iterates, with interval-regime gating.
//! * [`verify`] — desk-scale experiment orchestration emitting structured,
//!   bit-reproducible report bundles.

pub mod functionals;
pub mod interp;
pub mod ladder;
pub mod quad;
pub mod special;
pub mod verify;

pub use functionals::{FunctionalCtx, FunctionalError, IntervalSpec, Regime, SignalParams};
pub use interp::MonotoneCubic;
pub use ladder::{mu, solve_ladder, EnergyTable, LadderError, LadderTable};
pub use quad::{integrate, integrate_cumulative, IntegralResult, PanelPolicy, QuadError};
pub use special::{hardy_z, theta, zeta_derivative_abs, zeta_on_line, EvalConfig, SpecialError, Zeros};
pub use verify::{run_suite, ClaimId, SuiteConfig, VerificationReport};
