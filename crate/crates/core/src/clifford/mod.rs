//! Clifford d-algebras, sigma and epsilon objects, and d-spinor calculus.

pub mod algebra;
pub mod checks;
pub mod epsilon;
pub mod rep;
pub mod spinor;
pub mod twistor;
