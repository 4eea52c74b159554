//! Numerical laboratory for nematic liquid-crystal director dynamics on the
//! two-dimensional torus.
//!
//! The crate integrates three related evolutions for a unit director field
//! u : T^2 -> S^2 under the general Oseen-Frank elastic energy:
//!
//! * the constrained gradient flow (director relaxation on the sphere),
//! * its Ginzburg-Landau relaxation (penalized, unconstrained), and
//! * the coupled director / Navier-Stokes system (simplified
//!   Ericksen-Leslie equations).
//!
//! Every solver maintains an energy ledger whose discrete identities
//! (dissipation balance, tangency, incompressibility) are themselves part of
//! the crate's test surface, alongside structural facts about the energy:
//! Legendre-Hadamard ellipticity with constant 2*min(k1,k2,k3), frame
//! indifference, and the null-Lagrangian status of the k4 (saddle-splay)
//! term. Concentration diagnostics watch for energy focusing at small scales,
//! the discrete shadow of finite-time blow-up.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod flow;
pub mod frank;
pub mod grid;
pub mod init;
pub mod ledger;
pub mod leslie;
pub mod ops;
pub mod oracles;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod verify;

pub use error::{ConfigError, FieldError, FlowError, FormatError};
pub use field::{Mat32Field, ScalarField, Vec2Field, Vec3Field};
pub use frank::FrankConstants;
pub use grid::Grid2;
