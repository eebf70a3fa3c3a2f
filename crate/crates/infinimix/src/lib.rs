//! # infinimix
//!
//! A numerical laboratory for mixing in infinite-measure-preserving
//! dynamical systems on the real line.
//!
//! The crate provides:
//!
//! * concrete Lebesgue-preserving maps ([`maps`]): the Boole transformation
//!   and translation-invariant expanding lifts, including the piecewise
//!   linear random-walk maps;
//! * global (bounded) and local (integrable) observables with structural
//!   tags, plus exact lattice measures on unit cells ([`observables`],
//!   [`lattice`]);
//! * the transfer operator in two regimes — exact rational convolution on
//!   the lattice, preimage-sum evaluation pointwise — together with the
//!   coupling `<F, g> = mu(F g)` and an exactness diagnostic based on
//!   `||P^n g||_1` ([`transfer`]);
//! * exhaustive families of windows, uniform infinite-volume averages and
//!   the dynamical volume-compatibility check ([`volume`]);
//! * correlation estimators and verdict suites for the global-local,
//!   global-global and local-local mixing notions, asymptotic coalescence
//!   and the equilibrium functional ([`mixing`]);
//! * a config-driven experiment runner behind the `infinimix` binary
//!   ([`scenario`]).
//!
//! Everything is deterministic given the recorded seeds; exact results are
//! exact rationals, and every float estimate carries an error bound.

pub mod error;
pub mod interval;
pub mod lattice;
pub mod maps;
pub mod mixing;
pub mod observables;
pub mod transfer;
pub mod volume;
pub mod quad;
pub mod quotient;
pub mod scenario;

pub use error::{Error, Result};
