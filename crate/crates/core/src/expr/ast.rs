use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::carrier::Carrier;

/// Whether fiber coordinates are vector components `y^a` or covector components `p_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variance {
    Vector,
    Covector,
}

/// Declared coordinates `x1..xn` and `y1..ym` (or `p1..pm`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VarContext {
    n: usize,
    m: usize,
    variance: Variance,
    names: Vec<String>,
}

impl VarContext {
    pub fn new(n: usize, m: usize, variance: Variance) -> Result<VarContext> {
        if n == 0 || m == 0 {
            return Err(Error::Dimension(format!("base and fiber dimensions must be positive (n={n}, m={m})")));
        }
        let fiber = match variance {
            Variance::Vector => 'y',
            Variance::Covector => 'p',
        };
        let names = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=m).map(|a| format!("{fiber}{a}")))
            .collect();
        Ok(VarContext { n, m, variance, names })
    }

    pub fn base_dim(&self) -> usize {
        self.n
    }

    pub fn fiber_dim(&self) -> usize {
        self.m
    }

    /// Total number of coordinates `n + m`.
    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }
}

/// One-argument functions recognised by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Abs,
}

impl Func {
    pub const ALL: [Func; 7] = [Func::Sqrt, Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Tan, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.iter().copied().find(|f| f.name() == s)
    }
}

/// Expression tree. `Var` holds the position of the coordinate in its [`VarContext`].
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Constant(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Integer value of an exponent written as an integral literal, possibly negated.
    pub fn as_integer(&self) -> Option<i64> {
        match self {
            Expr::Constant(c) if c.fract() == 0.0 && f64::abs(*c) < 1e9 => Some(*c as i64),
            Expr::Neg(inner) => inner.as_integer().map(|k| -k),
            _ => None,
        }
    }

    pub fn eval<C: Carrier>(&self, vars: &[C]) -> Result<C> {
        Ok(match self {
            Expr::Constant(c) => vars[0].constant_like(*c),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Neg(a) => a.eval(vars)?.neg(),
            Expr::Add(a, b) => a.eval(vars)?.add(&b.eval(vars)?),
            Expr::Sub(a, b) => a.eval(vars)?.sub(&b.eval(vars)?),
            Expr::Mul(a, b) => a.eval(vars)?.mul(&b.eval(vars)?),
            Expr::Div(a, b) => a.eval(vars)?.div(&b.eval(vars)?)?,
            Expr::Pow(a, b) => {
                let base = a.eval(vars)?;
                match b.as_integer() {
                    Some(k) => base.powi(k)?,
                    None => {
                        let e = b.eval(vars)?;
                        base.log()?.mul(&e).exp()?
                    }
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(vars)?;
                match f {
                    Func::Sqrt => v.sqrt()?,
                    Func::Exp => v.exp()?,
                    Func::Log => v.log()?,
                    Func::Sin => v.sin()?,
                    Func::Cos => v.cos()?,
                    Func::Tan => v.tan()?,
                    Func::Abs => v.abs()?,
                }
            }
        })
    }

    /// Highest variable index plus one, or 0 for closed expressions.
    pub fn var_bound(&self) -> usize {
        match self {
            Expr::Constant(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(a) | Expr::Call(_, a) => a.var_bound(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.var_bound().max(b.var_bound())
            }
        }
    }
}

/// A parsed expression bound to the coordinates it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    ctx: Arc<VarContext>,
    expr: Expr,
}

impl ScalarField {
    pub fn new(ctx: Arc<VarContext>, expr: Expr) -> Result<ScalarField> {
        if expr.var_bound() > ctx.dim() {
            return Err(Error::Dimension("expression references a variable outside its context".into()));
        }
        Ok(ScalarField { ctx, expr })
    }

    /// The zero field.
    pub fn zero(ctx: Arc<VarContext>) -> ScalarField {
        ScalarField { ctx, expr: Expr::Constant(0.0) }
    }

    pub fn ctx(&self) -> &Arc<VarContext> {
        &self.ctx
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Evaluate with one carrier per context variable, in context order.
    pub fn evaluate<C: Carrier>(&self, vars: &[C]) -> Result<C> {
        if vars.len() != self.ctx.dim() {
            return Err(Error::Dimension(format!(
                "assignment has {} values, context declares {}",
                vars.len(),
                self.ctx.dim()
            )));
        }
        self.expr.eval(vars)
    }

    /// Evaluate from a name → value map; every context variable must be present.
    pub fn evaluate_named<C: Carrier>(&self, assignment: &std::collections::HashMap<String, C>) -> Result<C> {
        let vars = self
            .ctx
            .names()
            .iter()
            .map(|name| {
                assignment
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::UnknownIdentifier { name: name.clone(), offset: 0 })
            })
            .collect::<Result<Vec<C>>>()?;
        self.expr.eval(&vars)
    }

    /// Plain-value evaluation at a point.
    pub fn value_at(&self, point: &[f64]) -> Result<f64> {
        self.evaluate(point)
    }

    pub fn is_zero_constant(&self) -> bool {
        matches!(self.expr, Expr::Constant(c) if c == 0.0)
    }
}
