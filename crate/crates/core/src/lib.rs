//! Relative norms, numerical ranges and numerical indices of operators
//! between finite-dimensional normed spaces.

pub mod error;
pub mod geometry;
pub mod gnorm;
pub mod hilbert;
pub mod indices;
pub mod linalg;
pub mod numrange;
pub mod operators;
pub mod oracle;
pub mod problem;
pub mod report;
pub mod rng;
pub mod search;
pub mod simplex;
pub mod spaces;
pub mod spear;
pub mod svd;

pub use error::{Error, Result};
pub use linalg::{Matrix, C64};
pub use spaces::{Field, Functional, SpaceSpec, Vector};
pub use operators::{AttainmentMode, AttainmentSet, NormValue, OperatorSpec, SolverBudget, WitnessPair};
pub use svd::SvdResult;
