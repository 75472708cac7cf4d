//! Exact controllability and observability analysis for finite chains of
//! point masses linked by springs and dashpots, with a numerical layer
//! for simulation, minimum-energy control synthesis and initial-state
//! reconstruction.
//!
//! A chain with a force input at one end and the far-end position as
//! output is completely controllable and observable exactly when its
//! characteristic polynomial and its adjoint polynomial (the
//! transfer-function numerator) share no root. Both polynomials are
//! computed here over exact rationals, so [`analysis::decide`] returns a
//! decision, not a numerical guess. Two independent oracles — a
//! fraction-free determinant of `zI - F` and an exact Kalman rank test —
//! cross-check every construction.
//!
//! ```
//! use dashpot::analysis::decide;
//! use dashpot::chain::ChainSpec;
//!
//! // two unit masses, one spring, one dashpot
//! let spec = ChainSpec::from_ints(&[1, 1], &[1], &[1])?;
//! let verdict = decide(&spec);
//! assert!(verdict.controllable_observable);
//! assert_eq!(verdict.char_poly.to_string(), "z^4 + 2 z^3 + 2 z^2");
//! # Ok::<(), dashpot::chain::ChainError>(())
//! ```
//!
//! Module map:
//!
//! * [`chain`] — chain parameters, validation, the exact state-space
//!   realization, spec-file parsing.
//! * [`poly`] — rational polynomials, gcd, evaluation.
//! * [`chain_poly`] — characteristic-polynomial recursion, closed-form
//!   adjoint, determinant/cofactor oracles, coefficient expansion.
//! * [`analysis`] — verdicts, proportionality, Kalman ranks, the
//!   instructive three-mass families.
//! * [`dynamics`] — RK4 simulation, reachability Gramians, minimum-energy
//!   control, least-squares reconstruction, the quarter-car demo.

pub mod analysis;
pub mod chain;
pub mod chain_poly;
pub mod dynamics;
pub mod poly;
pub mod rational;

pub use analysis::{decide, Verdict};
pub use chain::{ChainSpec, StateSpaceModel};
pub use poly::RationalPoly;

/// Runs every code snippet in the guide (`book/`) as a doctest, so the
/// book cannot drift from the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/chains.md")]
    mod chains {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/deciding.md")]
    mod deciding {}
    #[doc = include_str!("../../../book/src/control.md")]
    mod control {}
    #[doc = include_str!("../../../book/src/quarter-car.md")]
    mod quarter_car {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
