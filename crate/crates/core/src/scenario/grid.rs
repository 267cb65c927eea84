use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bundle::PointU;
use crate::error::{Error, Result};
use crate::report::num_text;
use crate::tensor::Tensor;

use super::checks::PointAnalysis;
use super::run::analyze;
use super::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridAxis {
    /// Coordinate name, e.g. `x1` or `y2`.
    pub coord: String,
    pub from: f64,
    pub to: f64,
    /// Number of nodes, at least 1.
    pub steps: usize,
}

/// Grid over some coordinates with the rest pinned at `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    pub base: Vec<f64>,
    /// Column names such as `g_11`, `N_1_2`, `R_h_1_1_1_2` or `scalar`.
    pub fields: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl GridTable {
    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                let mut o = serde_json::Map::new();
                for (h, v) in self.header.iter().zip(r) {
                    let val = match v.parse::<f64>() {
                        Ok(_) => serde_json::from_str(v).unwrap_or_else(|_| json!(v)),
                        Err(_) => json!(v),
                    };
                    o.insert(h.clone(), val);
                }
                Value::Object(o)
            })
            .collect();
        json!({ "columns": self.header, "rows": rows })
    }
}

/// Tensor families addressable by name, with their index ranks.
const FAMILIES: [(&str, usize); 23] = [
    ("g", 2),
    ("h", 2),
    ("N", 2),
    ("Omega", 3),
    ("L_h", 3),
    ("L_v", 3),
    ("C_h", 3),
    ("C_v", 3),
    ("T_hh", 3),
    ("T_hv", 3),
    ("T_vhh", 3),
    ("P_vvh", 3),
    ("S_vv", 3),
    ("R_h", 4),
    ("R_b", 4),
    ("P_j", 4),
    ("P_b", 4),
    ("S_j", 4),
    ("S_b", 4),
    ("Ric_hh", 2),
    ("Ric_hv", 2),
    ("Ric_vh", 2),
    ("Ric_vv", 2),
];

#[derive(Debug, Clone)]
enum Field {
    Scalar,
    Component { family: &'static str, index: Vec<usize> },
}

fn parse_field(name: &str) -> Result<Field> {
    if name == "scalar" {
        return Ok(Field::Scalar);
    }
    let bad = || Error::Scenario(format!("unknown grid field `{name}`"));
    let (family, rank) = FAMILIES
        .iter()
        .filter(|(f, _)| name.len() > f.len() + 1 && name.starts_with(f) && name.as_bytes()[f.len()] == b'_')
        .max_by_key(|(f, _)| f.len())
        .ok_or_else(bad)?;
    let rest = &name[family.len() + 1..];
    let parts: Vec<&str> = if rest.contains('_') {
        rest.split('_').collect()
    } else {
        (0..rest.len()).map(|k| &rest[k..k + 1]).collect()
    };
    if parts.len() != *rank {
        return Err(bad());
    }
    let index = parts
        .iter()
        .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1).ok_or_else(bad))
        .collect::<Result<Vec<usize>>>()?;
    Ok(Field::Component { family, index })
}

fn family_tensor(pa: &PointAnalysis, family: &str) -> Tensor<f64> {
    match family {
        "g" => pa.ev.dm.g.values(),
        "h" => pa.ev.dm.h.values(),
        "N" => pa.ev.nc.raw().values(),
        "Omega" => pa.ev.nc.curvature().values(),
        "L_h" => pa.gamma.lh.values(),
        "L_v" => pa.gamma.lv.values(),
        "C_h" => pa.gamma.ch.values(),
        "C_v" => pa.gamma.cv.values(),
        "Ric_hh" => pa.ricci.hh.clone(),
        "Ric_hv" => pa.ricci.hv.clone(),
        "Ric_vh" => pa.ricci.vh.clone(),
        "Ric_vv" => pa.ricci.vv.clone(),
        other => pa
            .torsions
            .named()
            .into_iter()
            .chain(pa.curvature.named())
            .find(|(n, _)| *n == other)
            .map(|(_, t)| t.clone())
            .expect("family list matches the named blocks"),
    }
}

fn field_value(pa: &PointAnalysis, f: &Field, name: &str) -> Result<f64> {
    match f {
        Field::Scalar => Ok(pa.scalar),
        Field::Component { family, index } => {
            let t = family_tensor(pa, family);
            if index.iter().zip(t.shape()).any(|(i, s)| i >= s) {
                return Err(Error::Scenario(format!("grid field `{name}` is out of range for shape {:?}", t.shape())));
            }
            Ok(t[index.as_slice()])
        }
    }
}

/// Samples the requested fields over the grid, one row per node.
pub fn grid(scenario: &Scenario, spec: &GridSpec, jobs: usize) -> Result<GridTable> {
    scenario.validate()?;
    let space = scenario.build_space()?;
    let names = space.chart().ctx().names().to_vec();
    if spec.base.len() != names.len() {
        return Err(Error::Scenario(format!("grid base has {} coordinates, expected {}", spec.base.len(), names.len())));
    }
    if spec.axes.is_empty() {
        return Err(Error::Scenario("grid needs at least one axis".into()));
    }
    let mut axis_index = Vec::new();
    for a in &spec.axes {
        let k = names.iter().position(|n| *n == a.coord).ok_or_else(|| Error::Scenario(format!("grid axis `{}` is not a coordinate ({})", a.coord, names.join(", "))))?;
        if axis_index.contains(&k) {
            return Err(Error::Scenario(format!("grid axis `{}` repeated", a.coord)));
        }
        if a.steps == 0 || !a.from.is_finite() || !a.to.is_finite() {
            return Err(Error::Scenario(format!("grid axis `{}` needs finite bounds and steps >= 1", a.coord)));
        }
        axis_index.push(k);
    }
    let fields = spec.fields.iter().map(|f| parse_field(f)).collect::<Result<Vec<Field>>>()?;

    let mut nodes: Vec<Vec<f64>> = vec![spec.base.clone()];
    for (a, &k) in spec.axes.iter().zip(&axis_index) {
        let vals: Vec<f64> = (0..a.steps)
            .map(|s| if a.steps == 1 { a.from } else { a.from + (a.to - a.from) * s as f64 / (a.steps - 1) as f64 })
            .collect();
        nodes = nodes
            .into_iter()
            .flat_map(|p| {
                vals.iter()
                    .map(|&v| {
                        let mut q = p.clone();
                        q[k] = v;
                        q
                    })
                    .collect::<Vec<_>>()
            })
            .collect();
    }

    let row = |coords: &Vec<f64>| -> Result<Vec<String>> {
        let mut r: Vec<String> = axis_index.iter().map(|&k| num_text(coords[k])).collect();
        let point = PointU::from_coords(coords, scenario.n)?;
        match analyze(&space, scenario, &point) {
            Ok(pa) => {
                r.push("ok".into());
                for (f, name) in fields.iter().zip(&spec.fields) {
                    r.push(num_text(field_value(&pa, f, name)?));
                }
            }
            Err(e) => {
                log::info!("grid node {coords:?} skipped: {e}");
                r.push("skipped".into());
                r.extend(fields.iter().map(|_| "skipped".to_string()));
            }
        }
        Ok(r)
    };
    let rows: Vec<Result<Vec<String>>> = if jobs == 1 {
        nodes.iter().map(row).collect()
    } else {
        let mut b = rayon::ThreadPoolBuilder::new();
        if jobs > 1 {
            b = b.num_threads(jobs);
        }
        let pool = b.build().map_err(|e| Error::Scenario(format!("thread pool: {e}")))?;
        pool.install(|| nodes.par_iter().map(row).collect())
    };
    let mut header: Vec<String> = spec.axes.iter().map(|a| a.coord.clone()).collect();
    header.push("status".into());
    header.extend(spec.fields.iter().cloned());
    Ok(GridTable { header, rows: rows.into_iter().collect::<Result<Vec<_>>>()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid() -> Scenario {
        Scenario::from_json(
            r#"{"space": "finsler", "n": 2, "expressions": {"fundamental": "sqrt(y1^2 + y2^2)"},
                "points": {"explicit": [[0, 0, 1, 0]]}, "checks": []}"#,
        )
        .unwrap()
    }

    #[test]
    fn field_names() {
        assert!(matches!(parse_field("g_11").unwrap(), Field::Component { family: "g", .. }));
        match parse_field("R_h_1_1_1_2").unwrap() {
            Field::Component { family, index } => {
                assert_eq!(family, "R_h");
                assert_eq!(index, vec![0, 0, 0, 1]);
            }
            _ => panic!(),
        }
        assert!(parse_field("R_h_1_1").is_err());
        assert!(parse_field("Q_11").is_err());
    }

    #[test]
    fn margin_rows_are_skipped() {
        let spec = GridSpec {
            axes: vec![GridAxis { coord: "y1".into(), from: -0.5, to: 0.5, steps: 5 }],
            base: vec![0.0, 0.0, 0.0, 0.0],
            fields: vec!["g_11".into(), "R_h_1_1_1_2".into(), "scalar".into()],
        };
        let t = grid(&euclid(), &spec, 1).unwrap();
        assert_eq!(t.header, vec!["y1", "status", "g_11", "R_h_1_1_1_2", "scalar"]);
        assert_eq!(t.rows[2][1], "skipped");
        assert_eq!(t.rows[0][1], "ok");
        assert_eq!(t.rows[0][3].parse::<f64>().unwrap(), 0.0);
        let bad = GridSpec { axes: vec![GridAxis { coord: "z1".into(), from: 0.0, to: 1.0, steps: 2 }], ..spec };
        assert!(grid(&euclid(), &bad, 1).is_err());
    }
}
