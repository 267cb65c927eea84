//! Expression language for fundamental functions and component fields.
//!
//! Grammar (see `docs/grammar.md`): decimal literals, the declared coordinate
//! names, `+ - * / ^`, unary minus and the one-argument functions
//! `sqrt exp log sin cos tan abs`. `^` binds tightest and associates to the
//! right; unary minus binds looser than `^` so `-x1^2` is `-(x1^2)`.

mod ast;
mod carrier;
mod format;
mod parser;
mod random;

pub use ast::{Expr, Func, ScalarField, VarContext, Variance};
pub use carrier::Carrier;
pub use format::format;
pub use parser::parse;
pub use random::random_expr;
