use anholkit::bundle::{adapted_derivative, commutator_residual, PointU};
use anholkit::connection::{build_connection, linearized_n_connection, metricity_residual, ConnectionKind};
use anholkit::oracle::{classical_geometry, sphere_metric};
use anholkit::spaces::{homogeneity_report, Space};
use anholkit::{parse, Jet, Variance};
use proptest::prelude::*;

const RANDERS: &str = "sqrt((1 + 0.2*x1^2)*y1^2 + y2^2) + 0.3*y1";
const SPHERE: &str = "sqrt(y1^2 + sin(x1)^2*y2^2)";

fn fiber() -> impl Strategy<Value = [f64; 2]> {
    prop::array::uniform2(-1.0f64..1.0).prop_filter("away from the null section", |y| y[0].hypot(y[1]) > 0.3)
}

fn base() -> impl Strategy<Value = [f64; 2]> {
    (0.3f64..2.8, -1.0f64..1.0).prop_map(|(a, b)| [a, b])
}

fn point(x: [f64; 2], y: [f64; 2]) -> PointU {
    PointU::new(x.to_vec(), y.to_vec()).unwrap()
}

fn connections() -> impl Strategy<Value = ConnectionKind> {
    prop_oneof![Just(ConnectionKind::Canonical), Just(ConnectionKind::Berwald), Just(ConnectionKind::Christoffel)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn finsler_metrics_are_homogeneous(x in base(), y in fiber(), randers in any::<bool>()) {
        let space = Space::finsler(2, if randers { RANDERS } else { SPHERE }).unwrap();
        let r = homogeneity_report(&space, &point(x, y)).unwrap();
        prop_assert!(r.max() <= 1e-9, "{r:?}");
    }

    #[test]
    fn euclidean_space_is_flat(x in base(), y in fiber(), kind in connections()) {
        let space = Space::finsler(2, "sqrt(y1^2 + y2^2)").unwrap();
        let ev = space.evaluate(&point(x, y)).unwrap();
        prop_assert!(ev.nc.raw().values().max_abs() <= 1e-12);
        let gamma = build_connection(kind, &ev.dm, &ev.nc).unwrap();
        for block in [&gamma.lh, &gamma.lv, &gamma.ch, &gamma.cv] {
            prop_assert!(block.values().max_abs() <= 1e-12);
        }
    }

    #[test]
    fn canonical_connection_is_metric(a in 0.0f64..0.5, b in -0.3f64..0.3, x in base(), y in fiber()) {
        let g = [
            vec![format!("1 + {a}*x2^2 + 0.1*y1^2"), format!("{b}*x1*y2")],
            vec![format!("{b}*x1*y2"), format!("2 + {a}*y2^2")],
        ];
        let n = [vec![format!("{b}*x2*y1"), "0.1*y2".to_string()], vec![format!("{a}*y1*y2"), "0.2*x1*y1".to_string()]];
        let space = Space::generalized_lagrange(2, &g, Some(&n)).unwrap();
        let ev = space.evaluate(&point(x, y)).unwrap();
        let gamma = build_connection(ConnectionKind::Canonical, &ev.dm, &ev.nc).unwrap();
        prop_assert!(metricity_residual(&gamma, &ev.dm, &ev.nc).unwrap().max() <= 1e-8);
    }

    #[test]
    fn adapted_frame_commutators(k in prop::array::uniform4(-1.0f64..1.0), x in base(), y in fiber()) {
        let n = [
            vec![format!("{}*x2*y1 + {}*y1*y2", k[0], k[1]), format!("{}*x1^2*y2", k[2])],
            vec![format!("{}*y1^2", k[3]), format!("{}*x1*x2*y1", k[0])],
        ];
        let g = vec![vec!["1".to_string(), "0".into()], vec!["0".into(), "1".into()]];
        let space = Space::raw(2, 2, Variance::Vector, &g, &g, Some(&n)).unwrap();
        let ev = space.evaluate(&point(x, y)).unwrap();
        let ctx = space.chart().ctx();
        for f in ["x1^2*y2 + x2*y1^3", "sin(x1)*y1*y2", "x1*x2*y2^2"] {
            let f = parse(f, ctx).unwrap();
            prop_assert!(commutator_residual(&f, &ev.nc, &ev.point).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn sphere_matches_classical_geometry(x in base(), y in fiber()) {
        let space = Space::finsler(2, SPHERE).unwrap();
        let ev = space.evaluate(&point(x, y)).unwrap();
        let gamma = build_connection(ConnectionKind::Canonical, &ev.dm, &ev.nc).unwrap();
        let classical = classical_geometry(&sphere_metric, &x).unwrap();
        prop_assert!(gamma.lh.values().max_abs_diff(&classical.christoffel) <= 1e-10);
        prop_assert!(ev.nc.raw().values().max_abs_diff(&classical.spray_connection(&y)) <= 1e-10);
    }
}

#[test]
fn adapted_derivative_of_a_scalar() {
    let n = vec![vec!["x2*y1", "y2"], vec!["x1*y2", "0.5*y1*y2"]];
    let g = vec![vec!["1", "0"], vec!["0", "1"]];
    let space = Space::raw(2, 2, Variance::Vector, &g, &g, Some(&n)).unwrap();
    let p = point([0.4, -0.3], [0.7, 0.2]);
    let ev = space.evaluate(&p).unwrap();
    let f = parse("x1^2*y2 + sin(x2)*y1", space.chart().ctx()).unwrap();
    let grad = f.evaluate(&Jet::seed_all(&p.coords(), 1)).unwrap().gradient();
    let nv = ev.nc.raw().values();
    let got = adapted_derivative(&f, &ev.nc, &p).unwrap();
    for i in 0..2 {
        let expected = grad[i] - (0..2).map(|a| nv[[a, i]] * grad[2 + a]).sum::<f64>();
        assert!((got[i] - expected).abs() < 1e-14);
    }
}

#[test]
fn linear_n_connection_reproduces_its_coefficients() {
    let n = vec![vec!["x1*y1 + 2*y2", "x2*y2"], vec!["3*y1", "x1*x2*y1 - y2"]];
    let g = vec![vec!["1", "0"], vec!["0", "1"]];
    let space = Space::raw(2, 2, Variance::Vector, &g, &g, Some(&n)).unwrap();
    let (x1, x2) = (0.6, -0.8);
    let ev = space.evaluate(&point([x1, x2], [0.3, 0.9])).unwrap();
    let lin = linearized_n_connection(&ev.nc);
    // K^a_{bi}: coefficient of y^b in N^a_i
    let k = [[[x1, 2.0], [0.0, x2]], [[3.0, 0.0], [x1 * x2, -1.0]]];
    for a in 0..2 {
        for b in 0..2 {
            for i in 0..2 {
                assert!((lin[[a, b, i]] - k[a][i][b]).abs() < 1e-14, "{a}{b}{i}");
            }
        }
    }
}

#[test]
fn hamilton_and_cartan_duals_of_euclidean_space_are_flat() {
    for (space, kind) in [(Space::hamilton(2, "p1^2 + p2^2").unwrap(), "hamilton"), (Space::cartan(2, "sqrt(p1^2 + p2^2)").unwrap(), "cartan")] {
        let ev = space.evaluate(&point([0.2, 0.9], [0.5, -0.6])).unwrap();
        let gamma = build_connection(ConnectionKind::Canonical, &ev.dm, &ev.nc).unwrap();
        assert!(ev.nc.raw().values().max_abs() < 1e-12, "{kind}");
        assert!(metricity_residual(&gamma, &ev.dm, &ev.nc).unwrap().max() < 1e-12, "{kind}");
    }
}
