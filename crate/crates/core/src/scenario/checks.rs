use std::sync::Arc;

use crate::bundle::{commutator_residual, PointU};
use crate::clifford::rep::DSigmaRep;
use crate::clifford::spinor::scalar_cross_check;
use crate::connection::{metricity_residual, ConnectionKind, DConnectionCoeffs};
use crate::curvature::{CurvatureComponents, RicciBlocks, TorsionComponents};
use crate::error::{Error, Result};
use crate::expr::{parse, ScalarField, VarContext, Variance};
use crate::fd::{fd_generic, FdSpec};
use crate::jet::Jet;
use crate::oracle::classical_geometry;
use crate::spaces::{homogeneity_report, Space, SpaceEval};
use crate::tensor::Tensor;

use super::Scenario;

/// Names accepted in `checks`.
pub const CHECK_NAMES: [&str; 8] = [
    "flat_zero",
    "riemann_reduction",
    "scalar_curvature",
    "metricity",
    "homogeneity",
    "anholonomy",
    "ad_consistency",
    "spinor_scalar",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckKind {
    /// N, Ω, torsions, curvatures, Ricci, scalar and Einstein all vanish.
    FlatZero,
    /// N, L and the horizontal curvature against the classical oracle metric.
    RiemannReduction,
    ScalarCurvature { target: f64 },
    /// All four blocks for canonical-type connections, the hv pair for Berwald.
    Metricity,
    Homogeneity,
    /// Commutators of the adapted frame on ten polynomial test functions.
    Anholonomy,
    /// Jet partials of the metric up to order 3 against central differences,
    /// scaled by `1 + |value|`.
    AdConsistency,
    /// Scalar curvature through the d-spinor route against the tensor route.
    SpinorScalar,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::FlatZero => "flat_zero",
            CheckKind::RiemannReduction => "riemann_reduction",
            CheckKind::ScalarCurvature { .. } => "scalar_curvature",
            CheckKind::Metricity => "metricity",
            CheckKind::Homogeneity => "homogeneity",
            CheckKind::Anholonomy => "anholonomy",
            CheckKind::AdConsistency => "ad_consistency",
            CheckKind::SpinorScalar => "spinor_scalar",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            CheckKind::FlatZero | CheckKind::Homogeneity => 1e-9,
            CheckKind::RiemannReduction | CheckKind::Metricity => 1e-8,
            CheckKind::ScalarCurvature { .. } | CheckKind::SpinorScalar => 1e-6,
            CheckKind::Anholonomy => 1e-10,
            CheckKind::AdConsistency => 1e-5,
        }
    }
}

/// A requested check: `name`, `name=target`, `name@tol` or `name=target@tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckSpec {
    pub kind: CheckKind,
    pub tolerance: f64,
}

fn number(text: &str, what: &str, whole: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Scenario(format!("invalid {what} `{text}` in check `{whole}`")))
}

impl CheckSpec {
    pub fn parse(text: &str) -> Result<CheckSpec> {
        let (head, tol) = match text.split_once('@') {
            Some((h, t)) => (h, Some(number(t, "tolerance", text)?)),
            None => (text, None),
        };
        let (name, target) = match head.split_once('=') {
            Some((n, t)) => (n.trim(), Some(number(t, "target", text)?)),
            None => (head.trim(), None),
        };
        let kind = match name {
            "flat_zero" => CheckKind::FlatZero,
            "riemann_reduction" => CheckKind::RiemannReduction,
            "scalar_curvature" => CheckKind::ScalarCurvature { target: target.unwrap_or(0.0) },
            "metricity" => CheckKind::Metricity,
            "homogeneity" => CheckKind::Homogeneity,
            "anholonomy" => CheckKind::Anholonomy,
            "ad_consistency" => CheckKind::AdConsistency,
            "spinor_scalar" => CheckKind::SpinorScalar,
            other => return Err(Error::Scenario(format!("unknown check `{other}` (known: {})", CHECK_NAMES.join(", ")))),
        };
        if target.is_some() && !matches!(kind, CheckKind::ScalarCurvature { .. }) {
            return Err(Error::Scenario(format!("check `{name}` takes no target value")));
        }
        let tolerance = tol.unwrap_or_else(|| kind.default_tolerance());
        if !(tolerance > 0.0) {
            return Err(Error::Scenario(format!("tolerance in `{text}` must be positive")));
        }
        Ok(CheckSpec { kind, tolerance })
    }
}

/// Everything computed at one admissible point.
pub(super) struct PointAnalysis {
    pub ev: SpaceEval,
    pub gamma: DConnectionCoeffs,
    pub torsions: TorsionComponents,
    pub curvature: CurvatureComponents,
    pub ricci: RicciBlocks,
    pub scalar: f64,
    pub einstein: RicciBlocks,
}

/// Shared, parsed inputs for the checks.
pub(super) struct CheckContext<'a> {
    pub scenario: &'a Scenario,
    pub space: &'a Space,
    pub oracle: Option<Tensor<ScalarField>>,
    pub test_functions: Vec<ScalarField>,
}

impl<'a> CheckContext<'a> {
    pub fn new(scenario: &'a Scenario, space: &'a Space, specs: &[CheckSpec]) -> Result<CheckContext<'a>> {
        let ctx = space.chart().ctx();
        let needs_oracle = specs.iter().any(|s| s.kind == CheckKind::RiemannReduction);
        let oracle = match (&scenario.expressions.oracle_metric, needs_oracle) {
            (Some(rows), _) => {
                let n = space.n();
                let t = Tensor::try_from_fn(&[n, n], |ix| parse(&rows[ix[0]][ix[1]], ctx))?;
                if t.data().iter().any(|f| f.expr().var_bound() > n) {
                    return Err(Error::Scenario("oracle_metric may only depend on base coordinates".into()));
                }
                Some(t)
            }
            (None, true) => return Err(Error::Scenario("riemann_reduction requires expressions.oracle_metric".into())),
            (None, false) => None,
        };
        let test_functions = if specs.iter().any(|s| s.kind == CheckKind::Anholonomy) { polynomial_tests(ctx)? } else { Vec::new() };
        Ok(CheckContext { scenario, space, oracle, test_functions })
    }

    /// Residual of one check at one analysed point.
    pub fn residual(&self, kind: CheckKind, pa: &PointAnalysis) -> Result<f64> {
        match kind {
            CheckKind::FlatZero => Ok(flat_residual(pa)),
            CheckKind::RiemannReduction => self.riemann_reduction(pa),
            CheckKind::ScalarCurvature { target } => Ok((pa.scalar - target).abs()),
            CheckKind::Metricity => {
                let r = metricity_residual(&pa.gamma, &pa.ev.dm, &pa.ev.nc)?;
                Ok(match self.scenario.connection {
                    ConnectionKind::Berwald => r.hv_max(),
                    _ => r.max(),
                })
            }
            CheckKind::Homogeneity => Ok(homogeneity_report(self.space, &pa.ev.point)?.max()),
            CheckKind::Anholonomy => {
                let mut worst: f64 = 0.0;
                for f in &self.test_functions {
                    worst = worst.max(commutator_residual(f, &pa.ev.nc, &pa.ev.point)?);
                }
                Ok(worst)
            }
            CheckKind::AdConsistency => ad_residual(self.space, &pa.ev.point),
            CheckKind::SpinorScalar => {
                let (n, m) = (self.space.n(), self.space.m());
                let rep = DSigmaRep::euclidean(n, m, self.scenario.options.sigma_normalization)?;
                Ok(scalar_cross_check(&pa.gamma, &pa.ev.dm, &pa.ev.nc, &rep)?.difference)
            }
        }
    }

    fn riemann_reduction(&self, pa: &PointAnalysis) -> Result<f64> {
        let oracle = self.oracle.as_ref().expect("oracle parsed when requested");
        let point = &pa.ev.point;
        let fiber = point.fiber.clone();
        let metric = |xs: &[Jet]| -> Result<Vec<Vec<Jet>>> {
            let (nv, ord) = (xs[0].nvars(), xs[0].order());
            let mut vars: Vec<Jet> = xs.to_vec();
            vars.extend(fiber.iter().map(|&v| Jet::constant(v, nv, ord)));
            let n = xs.len();
            (0..n).map(|i| (0..n).map(|j| oracle[[i, j]].evaluate(&vars)).collect()).collect()
        };
        let cg = classical_geometry(&metric, &point.x)?;
        let mut worst = pa.gamma.lh.values().max_abs_diff(&cg.christoffel);
        worst = worst.max(pa.curvature.rh.max_abs_diff(&cg.riemann_h_layout()));
        if self.space.chart().variance() == Variance::Vector {
            worst = worst.max(pa.ev.nc.raw().values().max_abs_diff(&cg.spray_connection(&point.fiber)));
        }
        Ok(worst)
    }
}

fn flat_residual(pa: &PointAnalysis) -> f64 {
    [
        pa.ev.nc.raw().values().max_abs(),
        pa.ev.nc.curvature().values().max_abs(),
        pa.torsions.max_abs(),
        pa.curvature.max_abs(),
        pa.ricci.max_abs(),
        pa.scalar.abs(),
        pa.einstein.max_abs(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Ten polynomial test functions over every coordinate.
fn polynomial_tests(ctx: &Arc<VarContext>) -> Result<Vec<ScalarField>> {
    let names = ctx.names();
    let d = names.len();
    (0..10)
        .map(|k| {
            let mut terms = Vec::new();
            for (j, name) in names.iter().enumerate() {
                let power = 1 + (k + j) % 3;
                let coef = 1 + (3 * k + j) % 4;
                terms.push(format!("{coef}*{name}^{power}"));
            }
            terms.push(format!("{}*{}*{}", names[k % d], names[(k + 1) % d], names[(k + 2) % d]));
            parse(&terms.join(" + "), ctx)
        })
        .collect()
}

/// All multi-indices over `d` variables with total order `1..=max`.
pub fn multi_indices(d: usize, max: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = vec![0u8; d];
    fn rec(pos: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == cur.len() {
            if cur.iter().any(|&c| c > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur[pos] = k as u8;
            rec(pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, max, &mut cur, &mut out);
    out
}

/// `max |∂^α g_ij (jets) - ∂^α g_ij (FD)| / (1 + |FD|)` over `|α| ≤ 3`.
pub fn ad_residual(space: &Space, point: &PointU) -> Result<f64> {
    let ev = space.evaluate_at_depth(point, 3)?;
    let n = space.n();
    let coords = point.coords();
    let probe = space.clone().with_null_margin(0.0);
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            let f = |p: &[f64]| -> Result<f64> {
                let pt = PointU::from_coords(p, n)?;
                Ok(probe.values(&pt)?.0[[i, j]])
            };
            for alpha in multi_indices(coords.len(), 3) {
                let exact = ev.dm.g[[i, j]].extract_partial(&alpha)?;
                let approx = fd_generic(&f, &coords, &alpha, FdSpec::default())?;
                worst = worst.max((exact - approx).abs() / (1.0 + approx.abs()));
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_syntax() {
        let s = CheckSpec::parse("scalar_curvature=2@1e-6").unwrap();
        assert_eq!(s.kind, CheckKind::ScalarCurvature { target: 2.0 });
        assert_eq!(s.tolerance, 1e-6);
        assert_eq!(CheckSpec::parse("flat_zero").unwrap().tolerance, 1e-9);
        assert!(CheckSpec::parse("flat_zero=1").is_err());
        assert!(CheckSpec::parse("metricity@-1").is_err());
        assert!(CheckSpec::parse("nosuch").is_err());
    }

    #[test]
    fn index_enumeration() {
        assert_eq!(multi_indices(2, 2).len(), 5);
        assert_eq!(multi_indices(4, 3).len(), 34);
    }
}
