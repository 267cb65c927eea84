use anholkit::scenario::{exit_code, run, scenario_hash, RunOptions, Scenario};
use proptest::prelude::*;

fn scenario(fundamental: &str, seed: u64, count: usize, checks: &[&str]) -> Scenario {
    let text = serde_json::json!({
        "space": "finsler",
        "n": 2,
        "expressions": { "fundamental": fundamental },
        "points": { "sampler": { "seed": seed, "count": count, "box": [[0.3, 2.8], [-1, 1], [-1, 1], [-1, 1]] } },
        "checks": checks,
    });
    Scenario::from_json(&text.to_string()).unwrap()
}

fn quiet(jobs: usize) -> RunOptions {
    RunOptions { jobs, timing: false, ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn flat_scenarios_exit_zero(seed in any::<u64>(), count in 1usize..6) {
        let s = scenario("sqrt(y1^2 + y2^2)", seed, count, &["flat_zero", "homogeneity"]);
        let r = run(&s, &quiet(1));
        prop_assert_eq!(exit_code(&r), 0);
        let report = r.unwrap();
        prop_assert_eq!(report.checks.len(), 2);
        prop_assert!(report.checks.iter().all(|c| c.samples == count && c.max_residual <= c.tolerance));
    }

    #[test]
    fn curved_scenarios_fail_flatness_with_exit_one(seed in any::<u64>(), count in 1usize..6) {
        let s = scenario("sqrt(y1^2 + sin(x1)^2*y2^2)", seed, count, &["flat_zero", "scalar_curvature=2"]);
        let r = run(&s, &quiet(1));
        prop_assert_eq!(exit_code(&r), 1);
        let report = r.unwrap();
        prop_assert!(!report.checks[0].pass);
        prop_assert!(report.checks[1].pass);
    }

    #[test]
    fn reports_do_not_depend_on_worker_count(seed in any::<u64>()) {
        let s = scenario("sqrt((1 + 0.2*x1^2)*y1^2 + y2^2) + 0.3*y1", seed, 6, &["metricity", "anholonomy"]);
        let a = serde_json::to_string(&run(&s, &quiet(1)).unwrap().to_json()).unwrap();
        let b = serde_json::to_string(&run(&s, &quiet(3)).unwrap().to_json()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn pass_is_max_residual_within_tolerance(scale in 1e-20f64..1e3) {
        let s = scenario("sqrt((1 + 0.2*x1^2)*y1^2 + y2^2) + 0.3*y1", 9, 4, &["homogeneity", "ad_consistency"]);
        let report = run(&s, &RunOptions { tolerance_scale: scale, ..quiet(1) }).unwrap();
        for c in &report.checks {
            prop_assert_eq!(c.pass, c.max_residual <= c.tolerance);
        }
        prop_assert_eq!(report.pass, report.checks.iter().all(|c| c.pass));
    }
}

#[test]
fn input_errors_exit_two() {
    let bad = [
        r#"{"space": "finsler", "n": 2, "expressions": {"fundamental": "sqrt(y1^2 +)"}, "points": {"explicit": [[0, 0, 1, 0]]}, "checks": ["flat_zero"]}"#,
        r#"{"space": "finsler", "n": 2, "expressions": {"fundamental": "y1"}, "points": {"explicit": [[0, 0, 1]]}, "checks": []}"#,
        r#"{"space": "finsler", "n": 2, "expressions": {"fundamental": "y1"}, "points": {"explicit": [[0, 0, 1, 0]]}, "checks": ["flat_zero@0"]}"#,
        r#"{"space": "warped", "n": 2, "expressions": {}, "points": {}}"#,
    ];
    for text in bad {
        let r = Scenario::from_json(text).and_then(|s| run(&s, &quiet(1)));
        assert_eq!(exit_code(&r), 2, "{text}");
    }
}

#[test]
fn hash_tracks_content() {
    let a = scenario("sqrt(y1^2 + y2^2)", 1, 2, &["flat_zero"]);
    let b = scenario("sqrt(y1^2 + y2^2)", 2, 2, &["flat_zero"]);
    assert_eq!(scenario_hash(&a), scenario_hash(&a.clone()));
    assert_ne!(scenario_hash(&a), scenario_hash(&b));
    assert_eq!(scenario_hash(&a).len(), 64);
}
