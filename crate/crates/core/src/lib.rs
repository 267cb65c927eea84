//! Computational engine for nonlinear connections, distinguished connections
//! and curvatures on vector and covector bundles, the Finsler, Lagrange,
//! Cartan and Hamilton space families, and Clifford d-algebras with their
//! spinor calculus.
//!
//! Derivatives are exact up to floating point: every field is evaluated over
//! truncated Taylor jets ([`jet::Jet`]).

pub mod bundle;
pub mod clifford;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod fd;
pub mod jet;
pub mod linalg;
pub mod oracle;
pub mod report;
pub mod scenario;
pub mod spaces;
pub mod tensor;
pub mod verify;

pub use error::{Error, Result};
pub use expr::{parse, ScalarField, VarContext, Variance};
pub use jet::Jet;
pub use tensor::Tensor;
