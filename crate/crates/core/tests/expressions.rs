use std::sync::Arc;

use anholkit::expr::{format, random_expr};
use anholkit::{parse, Error, ScalarField, VarContext, Variance};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> Arc<VarContext> {
    Arc::new(VarContext::new(2, 2, Variance::Vector).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn format_then_parse_is_identity(seed in any::<u64>(), safe in any::<bool>(), depth in 0usize..6) {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::new(ctx.clone(), random_expr(&mut rng, 4, depth, safe)).unwrap();
        let text = format(&f);
        let g = parse(&text, &ctx).unwrap();
        prop_assert_eq!(&g, &f);
        prop_assert_eq!(format(&g), text);
    }

    #[test]
    fn safe_trees_evaluate_finitely(seed in any::<u64>(), p in prop::array::uniform4(-1.0f64..1.0)) {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = ScalarField::new(ctx, random_expr(&mut rng, 4, 5, true)).unwrap();
        prop_assert!(f.value_at(&p).unwrap().is_finite());
    }

    #[test]
    fn garbage_never_panics(text in "[ a-z0-9+*/^().-]{0,24}") {
        let _ = parse(&text, &ctx());
    }
}

#[test]
fn precedence_and_associativity() {
    let c = ctx();
    let v = |s: &str| parse(s, &c).unwrap().value_at(&[2.0, 3.0, 0.5, -1.0]).unwrap();
    assert_eq!(v("-x1^2"), -4.0);
    assert!((v("x1^x1^y2") - 2f64.sqrt()).abs() < 1e-15);
    assert_eq!(v("x2 - x1 - y1"), 0.5);
    assert_eq!(v("x2 / x1 * y1"), 0.75);
}

#[test]
fn errors_carry_offsets() {
    let c = ctx();
    assert!(matches!(parse("x1 + * y1", &c), Err(Error::Syntax { offset: 5, .. })));
    assert!(matches!(parse("x1 + z7", &c), Err(Error::UnknownIdentifier { offset: 5, .. })));
    assert!(matches!(parse("sin(x1, y1)", &c), Err(Error::Arity { .. })));
    assert!(parse("p1", &c).is_err());
    let cv = Arc::new(VarContext::new(2, 2, Variance::Covector).unwrap());
    assert!(parse("p1 + x2", &cv).is_ok());
}
