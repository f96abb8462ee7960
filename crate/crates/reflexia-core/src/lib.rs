//! Numerical toolkit for local reflexion spaces.
//!
//! A local reflexion space is a manifold with a family of point-attached
//! involutions `S_x` satisfying `S_x x = x`, `S_x S_x y = y`, and the
//! automorphism law `S_x S(y, z) = S(S_x y, S_x z)`. This crate builds the
//! classical homogeneous realization of such a structure on a chart of `G/K`
//! from matrix Lie-algebra data, checks the defining axioms and the
//! homogeneity conditions numerically, and — treating any reflexion map as an
//! opaque black box — reconstructs the transvection Lie algebra generated by
//! double reflexions and certifies local homogeneity at desk scale.
//!
//! Modules:
//! - [`lie`]: structure constants, brackets, matrix exp/log, adjoint actions,
//!   Killing form, algebra fingerprints.
//! - [`symmetric`]: involutive automorphisms, eigenspace splittings and the
//!   homogeneity conditions H1–H3 at the Lie-algebra level.
//! - [`model`]: the chart-based reflexion space on `G/K` with axiom checks.
//! - [`reconstruction`]: black-box tangent reflexions, `R`-fields, and the
//!   recovered transvection algebra with its invariant fingerprint.
//! - [`flows`]: RK4 integration of sampled fields and the one-parameter
//!   automorphism-group identities.

pub mod error;
pub mod fixtures;
pub mod flows;
pub mod lie;
pub mod linalg;
pub mod model;
pub mod reconstruction;
pub mod sampling;
pub mod symmetric;

pub use error::CoreError;
