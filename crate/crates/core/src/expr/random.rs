use rand::Rng;

use super::ast::{Expr, Func};

/// Random trees of the shape the parser produces: constants are
/// non-negative, negation is an explicit node.
///
/// With `safe` set every tree is finite and differentiable on the box
/// `|u| ≤ 1`: functions with restricted domains receive shifted arguments,
/// denominators stay away from zero and exponents are small integers.
pub fn random_expr<R: Rng>(rng: &mut R, nvars: usize, depth: usize, safe: bool) -> Expr {
    if depth == 0 || rng.gen_bool(0.2) {
        return leaf(rng, nvars);
    }
    let sub = |rng: &mut R| Box::new(random_expr(rng, nvars, depth - 1, safe));
    let choice = rng.gen_range(0..8);
    match choice {
        0 => Expr::Add(sub(rng), sub(rng)),
        1 => Expr::Sub(sub(rng), sub(rng)),
        2 => Expr::Mul(sub(rng), sub(rng)),
        3 => Expr::Neg(sub(rng)),
        4 => {
            if safe {
                Expr::Div(sub(rng), Box::new(positive(sub(rng))))
            } else {
                Expr::Div(sub(rng), sub(rng))
            }
        }
        5 => {
            let k = rng.gen_range(2..=3) as f64;
            if safe {
                Expr::Pow(sub(rng), Box::new(Expr::Constant(k)))
            } else if rng.gen_bool(0.5) {
                Expr::Pow(sub(rng), Box::new(Expr::Neg(Box::new(Expr::Constant(k)))))
            } else {
                Expr::Pow(sub(rng), sub(rng))
            }
        }
        _ => {
            let f = Func::ALL[rng.gen_range(0..Func::ALL.len())];
            let arg = sub(rng);
            if !safe {
                return Expr::Call(f, arg);
            }
            match f {
                Func::Sqrt | Func::Log => Expr::Call(f, Box::new(positive(arg))),
                Func::Tan | Func::Exp => Expr::Call(f, Box::new(Expr::Call(Func::Sin, arg))),
                Func::Abs => Expr::Call(f, Box::new(positive(arg))),
                _ => Expr::Call(f, arg),
            }
        }
    }
}

fn leaf<R: Rng>(rng: &mut R, nvars: usize) -> Expr {
    if rng.gen_bool(0.65) {
        Expr::Var(rng.gen_range(0..nvars))
    } else {
        let v: f64 = rng.gen_range(0..=16) as f64 / 8.0;
        Expr::Constant(v)
    }
}

/// `2 + sin(e)^2`-style wrapper bounded below by 2.
fn positive(e: Box<Expr>) -> Expr {
    let sq = Expr::Pow(Box::new(Expr::Call(Func::Sin, e)), Box::new(Expr::Constant(2.0)));
    Expr::Add(Box::new(Expr::Constant(2.0)), Box::new(sq))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::expr::{format, parse, ScalarField, VarContext, Variance};

    #[test]
    fn generated_trees_round_trip() {
        let ctx = Arc::new(VarContext::new(2, 2, Variance::Vector).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            for safe in [true, false] {
                let e = random_expr(&mut rng, 4, 4, safe);
                let f = ScalarField::new(ctx.clone(), e).unwrap();
                let text = format(&f);
                let g = parse(&text, &ctx).unwrap();
                assert_eq!(f, g, "{text}");
            }
        }
    }

    #[test]
    fn safe_trees_evaluate() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let e = random_expr(&mut rng, 3, 5, true);
            let v = e.eval(&[0.3f64, -0.9, 0.7]).unwrap();
            assert!(v.is_finite());
        }
    }
}
