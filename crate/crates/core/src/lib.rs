//! Lower `ℓ^p` bounds ("stability") for matrices indexed by finite doubling
//! metric spaces.
//!
//! The crate covers the whole chain: ball coverings and Lipschitz cutoffs on
//! the index space ([`space`]), sparse matrices with their structural
//! statistics and norms ([`opmat`]), estimation and localization of
//! `λ_p(A) = inf ‖Af‖_p/‖f‖_p` together with the inequalities that propagate
//! lower bounds between exponents ([`stability`]), left inverses
//! `B = (A*A)^{-1}A*` with decay measurements ([`inverse`]), and generators
//! for the standard examples ([`zoo`]). [`suites`] bundles the executable
//! verification suites used by the CLI and the acceptance tests.

pub mod dense;
pub mod error;
pub mod exponent;
pub mod format;
pub mod inverse;
pub mod opmat;
pub mod space;
pub mod stability;
pub mod suites;
pub mod zoo;

pub use error::{Error, Result};
pub use exponent::{lp_norm, Exponent};
pub use opmat::{IndexSet, IndexedMatrix, StructuralStats, Weight};
pub use space::{BallCovering, CutoffProfile, MetricSpace, SpaceKind};
