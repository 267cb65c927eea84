//! Scenario files: a space, a connection, points and named checks.
//!
//! A scenario is deserialized from JSON, validated, and turned into a
//! [`Space`] plus a list of [`CheckSpec`]s. [`run`] evaluates it into a
//! report; [`grid`] samples selected fields over a coordinate grid.

mod checks;
mod grid;
mod run;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bundle::PointU;
use crate::clifford::rep::SigmaNormalization;
use crate::connection::ConnectionKind;
use crate::curvature::RicciConvention;
use crate::error::{Error, Result};
use crate::spaces::{HessianMode, Space, SpaceKind};

pub use checks::{ad_residual, multi_indices, CheckKind, CheckSpec, CHECK_NAMES};
pub use grid::{grid, GridAxis, GridSpec, GridTable};
pub use run::{error_json, exit_code, run, scenario_hash, PointStatus, Report, RunOptions};

/// Expressions defining the space. Which fields are required depends on
/// the space kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expressions {
    /// `F`, `L`, `K` or `H`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fundamental: Option<String>,
    /// Base metric `g_ij`, or the generalized Lagrange metric.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<String>>>,
    /// Fiber metric `h_ab` (or `ȟ^{ab}` on covector bundles).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<Vec<Vec<String>>>,
    /// Inverse fiber metric `ǧ^{ij}` of a generalized Hamilton space.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_inv: Option<Vec<Vec<String>>>,
    /// N-connection grid, rows indexed by the fiber index.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_connection: Option<Vec<Vec<String>>>,
    /// Riemannian metric in the base coordinates for the classical oracle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_metric: Option<Vec<Vec<String>>>,
}

/// Uniform sampler over a coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sampler {
    pub seed: u64,
    pub count: usize,
    /// `[lo, hi]` per coordinate, base coordinates first.
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    /// Overrides the space's null-section margin when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub null_margin: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Points {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub explicit: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampler: Option<Sampler>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Options {
    #[serde(default)]
    pub hessian_mode: HessianMode,
    #[serde(default)]
    pub sigma_normalization: SigmaNormalization,
    #[serde(default)]
    pub ricci_convention: RicciConvention,
}

/// A scenario as written in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub space: SpaceKind,
    pub n: usize,
    /// Fiber dimension; defaults to `n` and must equal it except for raw bundles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub expressions: Expressions,
    #[serde(default = "default_connection")]
    pub connection: ConnectionKind,
    pub points: Points,
    #[serde(default)]
    pub checks: Vec<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub options: Options,
}

fn default_connection() -> ConnectionKind {
    ConnectionKind::Canonical
}

fn scenario_err(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

fn require<'a, T>(v: &'a Option<T>, what: &str, kind: SpaceKind) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| scenario_err(format!("space {kind:?} requires expressions.{what}")))
}

fn forbid<T>(v: &Option<T>, what: &str, kind: SpaceKind) -> Result<()> {
    if v.is_some() {
        return Err(scenario_err(format!("expressions.{what} is not used by space {kind:?}")));
    }
    Ok(())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| scenario_err(format!("invalid scenario JSON at line {}, column {}: {e}", e.line(), e.column())))?;
        s.validate()?;
        Ok(s)
    }

    pub fn fiber_dim(&self) -> usize {
        self.m.unwrap_or(self.n)
    }

    /// Structural checks that do not need the expressions to be parsed.
    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.n, self.fiber_dim());
        if n == 0 || m == 0 {
            return Err(scenario_err("dimensions must be positive"));
        }
        let raw = matches!(self.space, SpaceKind::RawVbundle | SpaceKind::RawCvbundle);
        if !raw && m != n {
            return Err(scenario_err(format!("space {:?} needs m = n, got n = {n}, m = {m}", self.space)));
        }
        for (name, tol) in &self.tolerances {
            if !(tol.is_finite() && *tol > 0.0) {
                return Err(scenario_err(format!("tolerance for `{name}` must be positive, got {tol}")));
            }
        }
        let specs = self.check_specs()?;
        for name in self.tolerances.keys() {
            if !specs.iter().any(|c| c.kind.name() == name) {
                return Err(scenario_err(format!("tolerance given for `{name}`, which is not a requested check")));
            }
        }
        if self.points.explicit.is_empty() && self.points.sampler.is_none() {
            return Err(scenario_err("no points: give points.explicit and/or points.sampler"));
        }
        for (k, p) in self.points.explicit.iter().enumerate() {
            if p.len() != n + m {
                return Err(scenario_err(format!("point {k} has {} coordinates, expected {}", p.len(), n + m)));
            }
        }
        if let Some(s) = &self.points.sampler {
            if s.bounds.len() != n + m {
                return Err(scenario_err(format!("sampler box has {} intervals, expected {}", s.bounds.len(), n + m)));
            }
            if s.bounds.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
                return Err(scenario_err("sampler box intervals must be finite with lo <= hi"));
            }
            if let Some(mg) = s.null_margin {
                if !(mg >= 0.0) {
                    return Err(scenario_err("null_margin must be non-negative"));
                }
            }
        }
        if let Some(o) = &self.expressions.oracle_metric {
            if o.len() != n || o.iter().any(|r| r.len() != n) {
                return Err(scenario_err(format!("oracle_metric must be {n} x {n}")));
            }
        }
        Ok(())
    }

    /// Parsed checks with their tolerances (defaults unless overridden).
    pub fn check_specs(&self) -> Result<Vec<CheckSpec>> {
        let mut out: Vec<CheckSpec> = Vec::new();
        for text in &self.checks {
            let mut spec = CheckSpec::parse(text)?;
            if out.iter().any(|c| c.kind.name() == spec.kind.name()) {
                return Err(scenario_err(format!("check `{}` requested twice", spec.kind.name())));
            }
            if let Some(t) = self.tolerances.get(spec.kind.name()) {
                spec.tolerance = *t;
            }
            out.push(spec);
        }
        Ok(out)
    }

    /// Builds the space; expression errors surface here.
    pub fn build_space(&self) -> Result<Space> {
        let e = &self.expressions;
        let kind = self.space;
        let n = self.n;
        let space = match kind {
            SpaceKind::Finsler | SpaceKind::Lagrange | SpaceKind::Cartan | SpaceKind::Hamilton => {
                forbid(&e.g, "g", kind)?;
                forbid(&e.h, "h", kind)?;
                forbid(&e.g_inv, "g_inv", kind)?;
                forbid(&e.n_connection, "n_connection", kind)?;
                let f = require(&e.fundamental, "fundamental", kind)?;
                match kind {
                    SpaceKind::Finsler => Space::finsler(n, f)?,
                    SpaceKind::Lagrange => Space::lagrange(n, f, self.options.hessian_mode)?,
                    SpaceKind::Cartan => Space::cartan(n, f)?,
                    _ => Space::hamilton(n, f)?,
                }
            }
            SpaceKind::GeneralizedLagrange => {
                forbid(&e.fundamental, "fundamental", kind)?;
                forbid(&e.h, "h", kind)?;
                forbid(&e.g_inv, "g_inv", kind)?;
                Space::generalized_lagrange(n, require(&e.g, "g", kind)?, e.n_connection.as_deref())?
            }
            SpaceKind::GeneralizedHamilton => {
                forbid(&e.fundamental, "fundamental", kind)?;
                forbid(&e.g, "g", kind)?;
                forbid(&e.h, "h", kind)?;
                Space::generalized_hamilton(n, require(&e.g_inv, "g_inv", kind)?, e.n_connection.as_deref())?
            }
            SpaceKind::RawVbundle | SpaceKind::RawCvbundle => {
                forbid(&e.fundamental, "fundamental", kind)?;
                forbid(&e.g_inv, "g_inv", kind)?;
                Space::raw(n, self.fiber_dim(), kind.variance(), require(&e.g, "g", kind)?, require(&e.h, "h", kind)?, e.n_connection.as_deref())?
            }
        };
        Ok(match self.points.sampler.as_ref().and_then(|s| s.null_margin) {
            Some(mg) => space.with_null_margin(mg),
            None => space,
        })
    }

    /// Explicit points as bundle points.
    pub fn explicit_points(&self) -> Result<Vec<PointU>> {
        self.points.explicit.iter().map(|p| PointU::from_coords(p, self.n)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "space": "finsler", "n": 2,
        "expressions": {"fundamental": "sqrt(y1^2 + y2^2)"},
        "connection": "canonical",
        "points": {"explicit": [[0.1, 0.2, 0.5, -0.3]]},
        "checks": ["flat_zero"]
    }"#;

    #[test]
    fn parses_and_validates() {
        let s = Scenario::from_json(FLAT).unwrap();
        assert_eq!(s.fiber_dim(), 2);
        assert!(s.build_space().is_ok());
        assert_eq!(s.check_specs().unwrap()[0].tolerance, 1e-9);
    }

    #[test]
    fn rejects_bad_scenarios() {
        let bad_dims = FLAT.replace("[0.1, 0.2, 0.5, -0.3]", "[0.1, 0.2]");
        assert!(matches!(Scenario::from_json(&bad_dims), Err(Error::Scenario(_))));
        let bad_tol = FLAT.replace(r#""checks": ["flat_zero"]"#, r#""checks": ["flat_zero"], "tolerances": {"flat_zero": -1}"#);
        assert!(Scenario::from_json(&bad_tol).is_err());
        let unknown = FLAT.replace("flat_zero", "no_such_check");
        assert!(Scenario::from_json(&unknown).is_err());
        let bad_expr = FLAT.replace("sqrt(y1^2 + y2^2)", "sqrt(y1^2 + )");
        let s = Scenario::from_json(&bad_expr).unwrap();
        assert!(matches!(s.build_space(), Err(Error::Syntax { .. })));
    }
}
