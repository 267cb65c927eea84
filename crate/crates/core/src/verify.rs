//! Built-in verification suites: thirteen numbered criteria, grouped into
//! named suites for the `verify` command and the acceptance test.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::bundle::PointU;
use crate::clifford::checks::algebra_criterion;
use crate::clifford::epsilon::{epsilon_objects, sigma_symmetry_check};
use crate::clifford::rep::{DSigmaRep, SigmaNormalization, SigmaRep};
use crate::clifford::spinor::{reconstruct_metric, reconstruct_metric_literal, DEpsilon};
use crate::clifford::twistor::random_twistor_check;
use crate::connection::{canonical_connection, ConnectionKind};
use crate::error::{Error, Result};
use crate::expr::{format, parse, random_expr, ScalarField, VarContext, Variance};
use crate::fd::{fd_oracle, FdSpec};
use crate::jet::Jet;
use crate::oracle::sphere;
use crate::report::{num_text, CheckResult};
use crate::scenario::{ad_residual, exit_code, multi_indices, run, Expressions, Points, RunOptions, Sampler, Scenario};
use crate::spaces::{homogeneity_report, Space, SpaceKind};
use crate::tensor::Tensor;

/// Outcome of one numbered criterion.
#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<CheckResult>,
}

impl Criterion {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }

    /// One summary line: status, id, title and the worst check.
    pub fn summary_line(&self) -> String {
        let worst = self.checks.iter().find(|c| !c.pass).or_else(|| {
            self.checks
                .iter()
                .filter(|c| c.tolerance > 0.0 && c.max_residual <= c.tolerance)
                .max_by(|a, b| (a.max_residual / a.tolerance).total_cmp(&(b.max_residual / b.tolerance)))
        });
        let tail = match worst {
            Some(c) => format!("{} = {} (tol {})", c.name, num_text(c.max_residual), num_text(c.tolerance)),
            None => format!("{} of {} checks hold", self.checks.iter().filter(|c| c.pass).count(), self.checks.len()),
        };
        format!("[{}] criterion {:>2}: {:<28} {}", if self.pass() { "PASS" } else { "FAIL" }, self.id, self.title, tail)
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "id": self.id,
            "title": self.title,
            "pass": self.pass(),
            "checks": self.checks.iter().map(CheckResult::to_json).collect::<Vec<_>>(),
        })
    }
}

/// Suite names accepted by [`verify`].
pub const SUITES: [&str; 4] = ["all", "geometry", "clifford", "tooling"];

/// Criterion ids of a suite; single criteria are addressed by number.
pub fn suite_members(name: &str) -> Result<Vec<u8>> {
    match name {
        "all" => Ok((1..=13).collect()),
        "geometry" => Ok((1..=7).collect()),
        "clifford" => Ok((8..=12).collect()),
        "tooling" => Ok(vec![13]),
        other => match other.parse::<u8>() {
            Ok(k) if (1..=13).contains(&k) => Ok(vec![k]),
            _ => Err(Error::Scenario(format!("unknown suite `{other}` (known: {}, or 1..13)", SUITES.join(", ")))),
        },
    }
}

/// Runs the criteria of `suite`.
pub fn verify(suite: &str, seed: u64) -> Result<Vec<Criterion>> {
    suite_members(suite)?.into_iter().map(|id| criterion(id, seed)).collect()
}

pub fn criterion(id: u8, seed: u64) -> Result<Criterion> {
    let (title, checks) = match id {
        1 => ("flat vanishing", flat_vanishing(seed)?),
        2 => ("riemannian reduction", riemannian_reduction(seed)?),
        3 => ("homogeneity cascade", homogeneity_cascade(seed)?),
        4 => ("jet derivatives vs FD", ad_correctness(seed)?),
        5 => ("metricity", metricity(seed)?),
        6 => ("anholonomy", anholonomy(seed)?),
        7 => ("covector duality", duality(seed)?),
        8 => ("clifford algebra", algebra_criterion(seed)?),
        9 => ("epsilon and periodicity", epsilon_periodicity()?),
        10 => ("metric reconstruction", metric_reconstruction(seed)?),
        11 => ("spinor/tensor scalar", spinor_tensor_scalar(seed)?),
        12 => ("twistor equation", twistor(seed)?),
        13 => ("tooling", tooling(seed)?),
        _ => return Err(Error::Scenario(format!("no criterion {id}"))),
    };
    Ok(Criterion { id, title, checks })
}

const RANDERS: &str = "sqrt((1 + 0.2*x1^2)*y1^2 + y2^2) + 0.3*y1";
const SPHERE_F: &str = "sqrt(y1^2 + sin(x1)^2*y2^2)";

fn sampler(seed: u64, count: usize, bounds: Vec<[f64; 2]>) -> Points {
    Points { explicit: Vec::new(), sampler: Some(Sampler { seed, count, bounds, null_margin: None }) }
}

fn potential_scenario(space: SpaceKind, n: usize, f: &str, connection: ConnectionKind, points: Points, checks: &[&str]) -> Scenario {
    Scenario {
        space,
        n,
        m: None,
        expressions: Expressions { fundamental: Some(f.into()), ..Default::default() },
        connection,
        points,
        checks: checks.iter().map(|s| s.to_string()).collect(),
        tolerances: Default::default(),
        options: Default::default(),
    }
}

fn run_checks(s: &Scenario, label: &str) -> Result<Vec<CheckResult>> {
    let r = run(s, &RunOptions { timing: false, ..Default::default() })?;
    Ok(r.checks
        .into_iter()
        .map(|mut c| {
            c.name = format!("{label}: {}", c.name);
            c
        })
        .collect())
}

fn unit_box(d: usize) -> Vec<[f64; 2]> {
    vec![[-1.0, 1.0]; d]
}

fn flat_vanishing(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for n in [2usize, 3] {
        let f = (1..=n).map(|a| format!("y{a}^2")).collect::<Vec<_>>().join(" + ");
        let f = format!("sqrt({f})");
        for conn in [ConnectionKind::Berwald, ConnectionKind::Canonical, ConnectionKind::Christoffel] {
            let s = potential_scenario(SpaceKind::Finsler, n, &f, conn, sampler(seed + n as u64, 25, unit_box(2 * n)), &["flat_zero"]);
            out.extend(run_checks(&s, &format!("n={n} {conn:?}"))?);
        }
    }
    Ok(out)
}

fn sphere_points(seed: u64, count: usize) -> Points {
    sampler(seed, count, vec![[0.3, std::f64::consts::PI - 0.3], [0.0, 6.28], [-1.0, 1.0], [-1.0, 1.0]])
}

fn riemannian_reduction(seed: u64) -> Result<Vec<CheckResult>> {
    let mut s = potential_scenario(
        SpaceKind::Finsler,
        2,
        SPHERE_F,
        ConnectionKind::Canonical,
        sphere_points(seed, 10),
        &["riemann_reduction@1e-8", "scalar_curvature=2@1e-6"],
    );
    s.expressions.oracle_metric = Some(vec![vec!["1".into(), "0".into()], vec!["0".into(), "sin(x1)^2".into()]]);
    let mut out = run_checks(&s, "S2")?;
    // Closed-form Christoffel symbols as a second, hand-written reference.
    let space = s.build_space()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut res = Vec::new();
    for _ in 0..10 {
        let th = rng.gen_range(0.3..std::f64::consts::PI - 0.3);
        let p = PointU::new(vec![th, rng.gen_range(0.0..6.0)], vec![rng.gen_range(0.2..1.0), rng.gen_range(-1.0..1.0)])?;
        let ev = space.evaluate(&p)?;
        let l = canonical_connection(&ev.dm, &ev.nc)?.lh.values();
        let cf = sphere::christoffel(th);
        let mut worst: f64 = 0.0;
        for (ix, v) in l.indexed() {
            worst = worst.max((v - cf[ix[0]][ix[1]][ix[2]]).abs());
        }
        res.push(worst);
    }
    out.push(CheckResult::from_residuals("S2: closed-form christoffel", &res, 1e-8));
    Ok(out)
}

fn homogeneity_cascade(seed: u64) -> Result<Vec<CheckResult>> {
    let space = Space::finsler(2, RANDERS)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut parts: [Vec<f64>; 4] = Default::default();
    while parts[0].len() < 50 {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = PointU::from_coords(&c, 2)?;
        if space.evaluate(&p).is_err() {
            continue;
        }
        let h = homogeneity_report(&space, &p)?;
        for (k, v) in [h.fundamental, h.metric, h.euler, h.cartan_contraction].into_iter().enumerate() {
            parts[k].push(v);
        }
    }
    let names = ["F 1-homogeneous", "g 0-homogeneous", "euler identity", "cartan contraction"];
    Ok(names.iter().zip(parts.iter()).map(|(n, r)| CheckResult::from_residuals(*n, r, 1e-9)).collect())
}

fn ad_correctness(seed: u64) -> Result<Vec<CheckResult>> {
    let ctx = Arc::new(VarContext::new(2, 2, Variance::Vector)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(4));
    let mut res = Vec::new();
    let alphas = multi_indices(4, 3);
    for _ in 0..20 {
        let f = ScalarField::new(ctx.clone(), random_expr(&mut rng, 4, 4, true))?;
        let point: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.8..0.8)).collect();
        let jet = f.evaluate(&Jet::seed_all(&point, 3))?;
        let mut worst: f64 = 0.0;
        for a in &alphas {
            let exact = jet.extract_partial(a)?;
            let approx = fd_oracle(&f, &point, a, FdSpec::default())?;
            worst = worst.max((exact - approx).abs() / (1.0 + exact.abs()));
        }
        res.push(worst);
    }
    let mut out = vec![CheckResult::from_residuals("random expressions", &res, 1e-5)];
    let randers = Space::finsler(2, RANDERS)?;
    let mut rr = Vec::new();
    while rr.len() < 5 {
        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = PointU::from_coords(&c, 2)?;
        if c[2].hypot(c[3]) >= 0.5 && randers.evaluate(&p).is_ok() {
            rr.push(ad_residual(&randers, &p)?);
        }
    }
    out.push(CheckResult::from_residuals("randers metric", &rr, 1e-5));
    Ok(out)
}

fn metricity(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (label, f, points) in [("S2", SPHERE_F, sphere_points(seed + 5, 10)), ("randers", RANDERS, sampler(seed + 6, 10, unit_box(4)))] {
        for conn in [ConnectionKind::Canonical, ConnectionKind::Berwald] {
            let s = potential_scenario(SpaceKind::Finsler, 2, f, conn, points.clone(), &["metricity@1e-8"]);
            out.extend(run_checks(&s, &format!("{label} {conn:?}"))?);
        }
    }
    Ok(out)
}

fn anholonomy(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let s = potential_scenario(SpaceKind::Finsler, 2, RANDERS, ConnectionKind::Canonical, sampler(seed + 7, 5, unit_box(4)), &["anholonomy@1e-10"]);
    out.extend(run_checks(&s, "randers")?);
    let gl = Scenario {
        space: SpaceKind::GeneralizedLagrange,
        n: 2,
        m: None,
        expressions: Expressions {
            g: Some(vec![vec!["1 + x1^2".into(), "0".into()], vec!["0".into(), "1 + y1^2".into()]]),
            n_connection: Some(vec![vec!["x2*y1 + y2^2".into(), "x1*y1*y2".into()], vec!["y1^2 - x1".into(), "x1*x2*y2".into()]]),
            ..Default::default()
        },
        connection: ConnectionKind::Canonical,
        points: sampler(seed + 8, 5, unit_box(4)),
        checks: vec!["anholonomy@1e-10".into()],
        tolerances: Default::default(),
        options: Default::default(),
    };
    out.extend(run_checks(&gl, "polynomial N")?);
    Ok(out)
}

fn duality(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    let flat = [(SpaceKind::Cartan, "sqrt(p1^2 + p2^2)"), (SpaceKind::Hamilton, "p1^2 + p2^2")];
    for (kind, f) in flat {
        let s = potential_scenario(kind, 2, f, ConnectionKind::Canonical, sampler(seed + 9, 10, unit_box(4)), &["flat_zero@1e-9"]);
        out.extend(run_checks(&s, &format!("{kind:?}"))?);
    }
    let curved = potential_scenario(
        SpaceKind::Cartan,
        2,
        "sqrt(p1^2 + p2^2/sin(x1)^2)",
        ConnectionKind::Canonical,
        sphere_points(seed + 10, 10),
        &["metricity@1e-8"],
    );
    out.extend(run_checks(&curved, "curved Cartan")?);
    Ok(out)
}

fn epsilon_periodicity() -> Result<Vec<CheckResult>> {
    let mut fact = Vec::new();
    for n in [2, 4, 6] {
        let rep = SigmaRep::euclidean(n, SigmaNormalization::Default)?;
        fact.push(epsilon_objects(&rep)?.max_residual());
    }
    let mut out = vec![CheckResult::from_residuals("factorization n=2,4,6", &fact, 1e-9)];
    let mut bad = Vec::new();
    let mut res = Vec::new();
    for n in 1..=6 {
        let rep = SigmaRep::euclidean(n, SigmaNormalization::Default)?;
        let eps = epsilon_objects(&rep)?;
        for q in 0..=3.min(n) {
            let r = sigma_symmetry_check(&rep, &eps, q);
            res.push(r.residual);
            if !r.pass {
                bad.push(format!("n={n} q={q}"));
            }
        }
    }
    let c = CheckResult::from_residuals("mod-8 symmetry classes", &res, 1e-10);
    out.push(if bad.is_empty() { c } else { CheckResult { pass: false, ..c }.with_detail(bad.join(", ")) });
    Ok(out)
}

fn metric_reconstruction(seed: u64) -> Result<Vec<CheckResult>> {
    let rep = DSigmaRep::euclidean(2, 2, SigmaNormalization::Default)?;
    let eps = DEpsilon::new(&rep)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(11));
    let mut res = Vec::new();
    let mut literal: f64 = 0.0;
    for _ in 0..10 {
        // Lower-triangular blocks with positive diagonals: G = L Lᵀ.
        let mut l = Tensor::filled(&[4, 4], 0.0);
        for off in [0, 2] {
            l[[off, off]] = rng.gen_range(0.5..2.0);
            l[[off + 1, off + 1]] = rng.gen_range(0.5..2.0);
            l[[off + 1, off]] = rng.gen_range(-1.0..1.0);
        }
        let g = Tensor::from_fn(&[4, 4], |ix| (0..4).map(|k| l[[ix[0], k]] * l[[ix[1], k]]).sum::<f64>());
        res.push(reconstruct_metric(&rep, &eps, &l).max_abs_diff(&g));
        literal = literal.max(reconstruct_metric_literal(&rep, &eps, &l).max_abs_diff(&g));
    }
    Ok(vec![CheckResult::from_residuals("n=m=2 orthonormal frame", &res, 1e-9)
        .with_detail(format!("literal -1/(N(n)+N(m)) prefactor residual {}", num_text(literal)))])
}

fn spinor_tensor_scalar(seed: u64) -> Result<Vec<CheckResult>> {
    let s = Scenario {
        space: SpaceKind::GeneralizedLagrange,
        n: 2,
        m: None,
        expressions: Expressions {
            g: Some(vec![
                vec!["1 + x1^2 + 0.3*y2^2".into(), "0.2*sin(x2)*y1".into()],
                vec!["0.2*sin(x2)*y1".into(), "exp(0.3*y1) + 0.5*x1^2".into()],
            ]),
            n_connection: Some(vec![vec!["0.3*x2*y1 + 0.1*y2^2".into(), "0.2*y1*y2".into()], vec!["0.1*x1*y2".into(), "0.4*y1 - 0.2*x1*y2".into()]]),
            ..Default::default()
        },
        connection: ConnectionKind::Canonical,
        points: sampler(seed + 12, 8, unit_box(4)),
        checks: vec!["spinor_scalar@1e-6".into()],
        tolerances: Default::default(),
        options: Default::default(),
    };
    let r = run(&s, &RunOptions { timing: false, ..Default::default() })?;
    let max_scalar = r
        .points
        .iter()
        .filter_map(|p| p.results.as_ref())
        .filter_map(|v| v["scalar"].as_f64())
        .fold(0.0f64, |a, b| a.max(b.abs()));
    let mut out: Vec<CheckResult> = r.checks;
    out.push(CheckResult::lower_bound("tensor scalar is non-trivial", max_scalar, 1e-3));
    Ok(out)
}

fn twistor(seed: u64) -> Result<Vec<CheckResult>> {
    let rep = DSigmaRep::euclidean(2, 2, SigmaNormalization::Default)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(13));
    let c = random_twistor_check(&rep, 20, &mut rng)?;
    Ok(vec![
        CheckResult::from_residuals("flat solutions", &[c.max_blockwise], 1e-10)
            .with_detail(format!("global-trace residual {}", num_text(c.max_global))),
        CheckResult::lower_bound("quadratic control", c.control_blockwise, 1e-3),
    ])
}

fn tooling(seed: u64) -> Result<Vec<CheckResult>> {
    let ctx = Arc::new(VarContext::new(2, 2, Variance::Vector)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(14));
    let mut failures = Vec::new();
    for k in 0..200 {
        let f = ScalarField::new(ctx.clone(), random_expr(&mut rng, 4, 5, k % 2 == 0))?;
        let text = format(&f);
        let g = parse(&text, &ctx)?;
        if g != f || format(&g) != text {
            failures.push(text);
        }
    }
    let mut out = vec![CheckResult::flag("parser round trip (200 trees)", failures.is_empty(), failures.first().cloned())];

    let s = potential_scenario(SpaceKind::Finsler, 2, RANDERS, ConnectionKind::Canonical, sampler(seed + 15, 8, unit_box(4)), &["flat_zero", "metricity"]);
    let texts: Vec<String> = [1usize, 2, 4]
        .iter()
        .map(|&jobs| run(&s, &RunOptions { jobs, timing: false, ..Default::default() }).map(|r| serde_json::to_string(&r.to_json()).expect("json")))
        .collect::<Result<_>>()?;
    out.push(CheckResult::flag("report determinism (1, 2, 4 workers)", texts.windows(2).all(|w| w[0] == w[1]), None));

    let pass = potential_scenario(SpaceKind::Finsler, 2, "sqrt(y1^2 + y2^2)", ConnectionKind::Canonical, sampler(seed, 3, unit_box(4)), &["flat_zero"]);
    let fail = potential_scenario(SpaceKind::Finsler, 2, RANDERS, ConnectionKind::Canonical, sampler(seed, 3, unit_box(4)), &["flat_zero"]);
    let malformed = potential_scenario(SpaceKind::Finsler, 2, "sqrt(y1^2 + * y2)", ConnectionKind::Canonical, sampler(seed, 3, unit_box(4)), &["flat_zero"]);
    let unknown = potential_scenario(SpaceKind::Finsler, 2, "sqrt(y1^2 + y2^2)", ConnectionKind::Canonical, sampler(seed, 3, unit_box(4)), &["nosuch"]);
    let opts = RunOptions { timing: false, ..Default::default() };
    let codes = [
        (exit_code(&run(&pass, &opts)), 0),
        (exit_code(&run(&fail, &opts)), 1),
        (exit_code(&run(&malformed, &opts)), 2),
        (exit_code(&run(&unknown, &opts)), 2),
        (exit_code(&Scenario::from_json("{not json").and_then(|s| run(&s, &opts))), 2),
    ];
    let ok = codes.iter().all(|(got, want)| got == want);
    out.push(CheckResult::flag("exit-code contract", ok, Some(format!("{:?}", codes.iter().map(|c| c.0).collect::<Vec<_>>()))));
    Ok(out)
}
