use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::bundle::PointU;
use crate::connection::build_connection;
use crate::curvature::{d_curvatures, d_torsions, einstein_tensor, ricci_and_scalar};
use crate::error::{Error, Result};
use crate::report::{num_value, CheckResult};
use crate::spaces::Space;

use super::checks::{CheckContext, PointAnalysis};
use super::Scenario;

/// Runner settings that are not part of the scenario itself.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Worker threads; 0 uses the rayon default.
    pub jobs: usize,
    /// Multiplies every tolerance.
    pub tolerance_scale: f64,
    /// Replaces the sampler seed.
    pub seed: Option<u64>,
    /// Include wall-clock timing in the report.
    pub timing: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 0, tolerance_scale: 1.0, seed: None, timing: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PointStatus {
    Ok,
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct PointRecord {
    pub index: usize,
    pub coords: Vec<f64>,
    pub sampled: bool,
    pub status: PointStatus,
    pub results: Option<Value>,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub scenario_hash: String,
    pub points: Vec<PointRecord>,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
    pub elapsed_ms: Option<f64>,
}

impl Report {
    pub fn to_json(&self) -> Value {
        let points: Vec<Value> = self
            .points
            .iter()
            .map(|p| {
                let mut o = Map::new();
                o.insert("index".into(), json!(p.index));
                o.insert("coords".into(), Value::Array(p.coords.iter().map(|&v| num_value(v)).collect()));
                o.insert("source".into(), json!(if p.sampled { "sampler" } else { "explicit" }));
                match &p.status {
                    PointStatus::Ok => {
                        o.insert("status".into(), json!("ok"));
                    }
                    PointStatus::Skipped(why) => {
                        o.insert("status".into(), json!("skipped"));
                        o.insert("reason".into(), json!(why));
                    }
                }
                if let Some(r) = &p.results {
                    o.insert("results".into(), r.clone());
                }
                Value::Object(o)
            })
            .collect();
        let mut root = Map::new();
        root.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        root.insert("scenario_hash".into(), json!(self.scenario_hash));
        root.insert("pass".into(), json!(self.pass));
        root.insert("checks".into(), Value::Array(self.checks.iter().map(CheckResult::to_json).collect()));
        root.insert("points".into(), Value::Array(points));
        if let Some(ms) = self.elapsed_ms {
            root.insert("timing".into(), json!({ "total_ms": num_value(ms) }));
        }
        Value::Object(root)
    }
}

/// SHA-256 of the canonical JSON form of the scenario.
pub fn scenario_hash(s: &Scenario) -> String {
    let text = serde_json::to_string(s).expect("scenario serializes");
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Process exit code for a run: 2 for input errors, 1 for a failed check.
pub fn exit_code(result: &Result<Report>) -> i32 {
    match result {
        Err(_) => 2,
        Ok(r) if r.pass => 0,
        Ok(_) => 1,
    }
}

/// JSON body describing an error.
pub fn error_json(e: &Error) -> Value {
    let kind = format!("{e:?}");
    let kind = kind.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("Error").to_string();
    let mut body = json!({ "kind": kind, "message": e.to_string() });
    match e {
        Error::Syntax { offset, .. } | Error::UnknownIdentifier { offset, .. } | Error::Arity { offset, .. } => {
            body["offset"] = json!(offset);
        }
        _ => {}
    }
    json!({ "error": body })
}

pub(super) fn analyze(space: &Space, scenario: &Scenario, point: &PointU) -> Result<PointAnalysis> {
    let ev = space.evaluate(point)?;
    let gamma = build_connection(scenario.connection, &ev.dm, &ev.nc)?;
    let torsions = d_torsions(&gamma, &ev.nc);
    let curvature = d_curvatures(&gamma, &ev.nc)?;
    let (ricci, scalar) = ricci_and_scalar(&curvature, &ev.dm, scenario.options.ricci_convention);
    let einstein = einstein_tensor(&ricci, scalar, &ev.dm);
    Ok(PointAnalysis { ev, gamma, torsions, curvature, ricci, scalar, einstein })
}

fn blocks_json(b: &crate::curvature::RicciBlocks) -> Value {
    json!({ "hh": b.hh.to_nested(), "hv": b.hv.to_nested(), "vh": b.vh.to_nested(), "vv": b.vv.to_nested() })
}

fn results_json(pa: &PointAnalysis) -> Value {
    let mut torsion = Map::new();
    for (name, t) in pa.torsions.named() {
        torsion.insert(name.into(), t.to_nested());
    }
    let mut curvature = Map::new();
    for (name, t) in pa.curvature.named() {
        curvature.insert(name.into(), t.to_nested());
    }
    json!({
        "g": pa.ev.dm.g.values().to_nested(),
        "h": pa.ev.dm.h.values().to_nested(),
        "N": pa.ev.nc.raw().values().to_nested(),
        "Omega": pa.ev.nc.curvature().values().to_nested(),
        "connection": {
            "L_h": pa.gamma.lh.values().to_nested(),
            "L_v": pa.gamma.lv.values().to_nested(),
            "C_h": pa.gamma.ch.values().to_nested(),
            "C_v": pa.gamma.cv.values().to_nested(),
        },
        "torsion": Value::Object(torsion),
        "curvature": Value::Object(curvature),
        "ricci": blocks_json(&pa.ricci),
        "scalar": num_value(pa.scalar),
        "einstein": blocks_json(&pa.einstein),
    })
}

/// Draws admissible points in order; rejected candidates are logged.
fn sample_points(space: &Space, scenario: &Scenario, seed: u64) -> Result<Vec<PointU>> {
    let Some(s) = &scenario.points.sampler else { return Ok(Vec::new()) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(s.count);
    let budget = 100 * s.count.max(1);
    let mut tries = 0;
    while out.len() < s.count {
        if tries >= budget {
            return Err(Error::Scenario(format!("sampler found only {} of {} admissible points in {budget} draws", out.len(), s.count)));
        }
        tries += 1;
        let coords: Vec<f64> = s.bounds.iter().map(|&[lo, hi]| if hi > lo { rng.gen_range(lo..hi) } else { lo }).collect();
        let p = PointU::from_coords(&coords, scenario.n)?;
        match space.evaluate(&p) {
            Ok(_) => out.push(p),
            Err(e) => log::debug!("sampler rejected {coords:?}: {e}"),
        }
    }
    Ok(out)
}

/// Runs a validated scenario.
pub fn run(scenario: &Scenario, opts: &RunOptions) -> Result<Report> {
    let start = Instant::now();
    scenario.validate()?;
    if !(opts.tolerance_scale > 0.0 && opts.tolerance_scale.is_finite()) {
        return Err(Error::Scenario("tolerance scale must be positive".into()));
    }
    let specs = scenario.check_specs()?;
    let space = scenario.build_space()?;
    let cctx = CheckContext::new(scenario, &space, &specs)?;
    let mut points: Vec<(PointU, bool)> = scenario.explicit_points()?.into_iter().map(|p| (p, false)).collect();
    let seed = opts.seed.or(scenario.points.sampler.as_ref().map(|s| s.seed)).unwrap_or(0);
    points.extend(sample_points(&space, scenario, seed)?.into_iter().map(|p| (p, true)));

    let work = |(idx, (p, sampled)): (usize, &(PointU, bool))| -> (PointRecord, Vec<std::result::Result<f64, String>>) {
        match analyze(&space, scenario, p) {
            Err(e) => {
                log::info!("point {idx} skipped: {e}");
                (PointRecord { index: idx, coords: p.coords(), sampled: *sampled, status: PointStatus::Skipped(e.to_string()), results: None }, Vec::new())
            }
            Ok(pa) => {
                let res = specs.iter().map(|s| cctx.residual(s.kind, &pa).map_err(|e| e.to_string())).collect();
                (PointRecord { index: idx, coords: p.coords(), sampled: *sampled, status: PointStatus::Ok, results: Some(results_json(&pa)) }, res)
            }
        }
    };
    let outcomes: Vec<(PointRecord, Vec<std::result::Result<f64, String>>)> = if opts.jobs == 1 {
        points.iter().enumerate().map(work).collect()
    } else {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if opts.jobs > 1 {
            builder = builder.num_threads(opts.jobs);
        }
        let pool = builder.build().map_err(|e| Error::Scenario(format!("thread pool: {e}")))?;
        pool.install(|| points.par_iter().enumerate().map(work).collect())
    };

    let mut checks = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let mut residuals = Vec::new();
        let mut failures = Vec::new();
        for (rec, res) in &outcomes {
            if let Some(r) = res.get(k) {
                match r {
                    Ok(v) => residuals.push(*v),
                    Err(msg) => {
                        residuals.push(f64::NAN);
                        failures.push(format!("point {}: {msg}", rec.index));
                    }
                }
            }
        }
        let mut c = CheckResult::from_residuals(spec.kind.name(), &residuals, spec.tolerance * opts.tolerance_scale);
        if residuals.is_empty() {
            c.pass = false;
            c.detail = Some("no admissible points".into());
        } else if !failures.is_empty() {
            c.detail = Some(failures.join("; "));
        }
        checks.push(c);
    }
    let pass = checks.iter().all(|c| c.pass);
    let points = outcomes.into_iter().map(|(r, _)| r).collect();
    let elapsed_ms = opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    Ok(Report { scenario_hash: scenario_hash(scenario), points, checks, pass, elapsed_ms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere() -> Scenario {
        Scenario::from_json(
            r#"{
            "space": "finsler", "n": 2,
            "expressions": {"fundamental": "sqrt(y1^2 + sin(x1)^2*y2^2)", "oracle_metric": [["1", "0"], ["0", "sin(x1)^2"]]},
            "points": {"sampler": {"seed": 7, "count": 6, "box": [[0.5, 2.6], [0, 6], [-1, 1], [-1, 1]]}},
            "checks": ["riemann_reduction", "scalar_curvature=2@1e-6", "metricity"]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn sphere_scenario_passes() {
        let r = run(&sphere(), &RunOptions::default()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
        assert_eq!(exit_code(&Ok(r)), 0);
    }

    #[test]
    fn deterministic_across_workers() {
        let s = sphere();
        let a = run(&s, &RunOptions { jobs: 1, timing: false, ..Default::default() }).unwrap();
        let b = run(&s, &RunOptions { jobs: 4, timing: false, ..Default::default() }).unwrap();
        assert_eq!(serde_json::to_string(&a.to_json()).unwrap(), serde_json::to_string(&b.to_json()).unwrap());
    }

    #[test]
    fn failing_check_gives_exit_one() {
        let mut s = sphere();
        s.checks = vec!["scalar_curvature=3".into()];
        let r = run(&s, &RunOptions::default());
        assert_eq!(exit_code(&r), 1);
        s.expressions.fundamental = Some("sqrt(y1^2 +".into());
        let r = run(&s, &RunOptions::default());
        assert_eq!(exit_code(&r), 2);
        let body = error_json(&r.unwrap_err());
        assert_eq!(body["error"]["kind"], "Syntax");
        assert!(body["error"]["offset"].is_number());
    }
}
