use std::sync::Arc;

use anholkit::expr::random_expr;
use anholkit::fd::{fd_oracle, FdSpec};
use anholkit::scenario::multi_indices;
use anholkit::{parse, Jet, ScalarField, VarContext, Variance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ORDER: usize = 4;

/// `c0 + c1 x + c2 y + c3 x y` over two seeded variables.
fn poly(c: [f64; 4], x: &Jet, y: &Jet) -> Jet {
    let n = Jet::constant(c[0], 2, ORDER);
    n + &(x.scale(c[1])) + &(y.scale(c[2])) + &(x.mul_jet(y).scale(c[3]))
}

fn seeds(p: [f64; 2]) -> (Jet, Jet) {
    let s = Jet::seed_all(&p, ORDER);
    (s[0].clone(), s[1].clone())
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.5f64..1.5)
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    prop::array::uniform2(-1.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exp_turns_sums_into_products(a in coeffs(), b in coeffs(), p in point()) {
        let (x, y) = seeds(p);
        let (f, g) = (poly(a, &x, &y), poly(b, &x, &y));
        let lhs = (f.clone() + &g).exp();
        let rhs = f.exp().mul_jet(&g.exp());
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-9 * (1.0 + rhs.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()))));
    }

    #[test]
    fn pythagorean_identity(a in coeffs(), p in point()) {
        let (x, y) = seeds(p);
        let f = poly(a, &x, &y);
        let one = f.sin().mul_jet(&f.sin()) + &f.cos().mul_jet(&f.cos());
        prop_assert!(one.max_abs_diff(&Jet::constant(1.0, 2, ORDER)) <= 1e-12);
    }

    #[test]
    fn reciprocal_and_log_invert(a in coeffs(), p in point()) {
        let (x, y) = seeds(p);
        let f = poly(a, &x, &y).mul_jet(&poly(a, &x, &y)).add_scalar(0.5);
        let unit = f.recip().unwrap().mul_jet(&f);
        prop_assert!(unit.max_abs_diff(&Jet::constant(1.0, 2, ORDER)) <= 1e-9);
        let back = f.ln().unwrap().exp();
        prop_assert!(back.max_abs_diff(&f) <= 1e-9 * (1.0 + f.value().abs()).powi(4));
        let root = f.sqrt().unwrap();
        prop_assert!(root.mul_jet(&root).max_abs_diff(&f) <= 1e-9 * (1.0 + f.value().abs()).powi(2));
    }

    #[test]
    fn derivative_commutes_with_partial_extraction(a in coeffs(), b in coeffs(), p in point()) {
        let (x, y) = seeds(p);
        let f = poly(a, &x, &y).mul_jet(&poly(b, &x, &y).sin());
        let dx = f.derivative(0);
        let mixed = dx.extract_partial(&[0, 1]).unwrap();
        prop_assert!((mixed - f.extract_partial(&[1, 1]).unwrap()).abs() <= 1e-10 * (1.0 + mixed.abs()));
    }

    #[test]
    fn partials_agree_with_central_differences(seed in 0u64..10_000) {
        let ctx = Arc::new(VarContext::new(2, 2, Variance::Vector).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::new(ctx, random_expr(&mut rng, 4, 3, true)).unwrap();
        let p = [0.3, -0.4, 0.6, 0.2];
        let jet = f.evaluate(&Jet::seed_all(&p, 3)).unwrap();
        for alpha in multi_indices(4, 3) {
            let exact = jet.extract_partial(&alpha).unwrap();
            let approx = fd_oracle(&f, &p, &alpha, FdSpec::default()).unwrap();
            prop_assert!((exact - approx).abs() <= 1e-5 * (1.0 + exact.abs()), "{alpha:?}: {exact} vs {approx}");
        }
    }
}

#[test]
fn exp_of_product_partials() {
    let ctx = Arc::new(VarContext::new(1, 1, Variance::Vector).unwrap());
    let f = parse("exp(x1*y1)", &ctx).unwrap();
    let p = [0.4, -0.7];
    let jet = f.evaluate(&Jet::seed_all(&p, 3)).unwrap();
    for alpha in multi_indices(2, 3) {
        let exact = jet.extract_partial(&alpha).unwrap();
        let approx = fd_oracle(&f, &p, &alpha, FdSpec::default()).unwrap();
        assert!((exact - approx).abs() <= 1e-5 * (1.0 + exact.abs()), "{alpha:?}");
    }
    // d²/dx dy exp(xy) = (1 + xy) exp(xy)
    let closed = (1.0 + p[0] * p[1]) * (p[0] * p[1]).exp();
    assert!((jet.extract_partial(&[1, 1]).unwrap() - closed).abs() < 1e-13);
}

#[test]
fn requests_beyond_the_jet_order_fail() {
    let x = Jet::seed_variable(1, 0.5, 1, 2).unwrap();
    assert!(Jet::seed_variable(0, 0.5, 1, 2).is_err());
    assert!(x.extract_partial(&[3]).is_err());
}
