//! Points, N-connections, d-metrics, adapted frames and anholonomy.
//!
//! Fiber objects of a covector bundle are stored through a fixed relabelling
//! of the vector-bundle engine: the effective N-connection is `N^a_i := -Ň_ia`
//! and the effective fiber metric is `h_ab := ȟ^{ab}`. With this relabelling
//! every vector-bundle formula reproduces the corresponding breve formula, so
//! one implementation serves both variances.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{ScalarField, VarContext, Variance};
use crate::jet::Jet;
use crate::linalg;
use crate::tensor::Tensor;

/// Total space chart: base dimension, fiber dimension and fiber variance.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleChart {
    ctx: Arc<VarContext>,
}

impl BundleChart {
    pub fn new(n: usize, m: usize, variance: Variance) -> Result<BundleChart> {
        Ok(BundleChart { ctx: Arc::new(VarContext::new(n, m, variance)?) })
    }

    pub fn n(&self) -> usize {
        self.ctx.base_dim()
    }

    pub fn m(&self) -> usize {
        self.ctx.fiber_dim()
    }

    pub fn dim(&self) -> usize {
        self.ctx.dim()
    }

    pub fn variance(&self) -> Variance {
        self.ctx.variance()
    }

    pub fn ctx(&self) -> &Arc<VarContext> {
        &self.ctx
    }
}

/// A point `u = (x, y)` or `ŭ = (x, p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointU {
    pub x: Vec<f64>,
    pub fiber: Vec<f64>,
}

impl PointU {
    pub fn new(x: Vec<f64>, fiber: Vec<f64>) -> Result<PointU> {
        if x.iter().chain(&fiber).any(|v| !v.is_finite()) {
            return Err(Error::Domain("point coordinates must be finite".into()));
        }
        Ok(PointU { x, fiber })
    }

    /// Split a flat coordinate list after the first `n` entries.
    pub fn from_coords(coords: &[f64], n: usize) -> Result<PointU> {
        if coords.len() <= n {
            return Err(Error::Dimension(format!("point with {} coordinates cannot have base dimension {n}", coords.len())));
        }
        PointU::new(coords[..n].to_vec(), coords[n..].to_vec())
    }

    pub fn coords(&self) -> Vec<f64> {
        self.x.iter().chain(&self.fiber).copied().collect()
    }

    pub fn fiber_norm(&self) -> f64 {
        self.fiber.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn check_margin(&self, margin: f64) -> Result<()> {
        let norm = self.fiber_norm();
        if norm < margin {
            return Err(Error::NullSection { norm, margin });
        }
        Ok(())
    }

    /// Jets of all coordinates at this point.
    pub fn seed(&self, order: usize) -> Vec<Jet> {
        Jet::seed_all(&self.coords(), order)
    }
}

/// N-connection coefficients at a point, carried as jets.
///
/// `raw` holds the coefficients as given (`N^a_i` or `Ň_ia`, both indexed
/// `[a][i]`); `eff` holds the vector-convention coefficients used by the engine.
#[derive(Debug, Clone)]
pub struct NConnectionEval {
    variance: Variance,
    n: usize,
    m: usize,
    raw: Tensor<Jet>,
    eff: Tensor<Jet>,
}

impl NConnectionEval {
    pub fn from_jets(raw: Tensor<Jet>, variance: Variance, n: usize) -> Result<NConnectionEval> {
        let shape = raw.shape().to_vec();
        if shape.len() != 2 || shape[1] != n {
            return Err(Error::ShapeMismatch(format!("N-connection grid must be m x {n}, got {shape:?}")));
        }
        let m = shape[0];
        let eff = match variance {
            Variance::Vector => raw.clone(),
            Variance::Covector => raw.map(|j| -j),
        };
        Ok(NConnectionEval { variance, n, m, raw, eff })
    }

    /// Coefficients with no dependence on the point (all partials zero).
    pub fn from_values(values: &Tensor<f64>, variance: Variance, nvars: usize, order: usize) -> Result<NConnectionEval> {
        let n = values.shape()[1];
        NConnectionEval::from_jets(values.map(|&v| Jet::constant(v, nvars, order)), variance, n)
    }

    pub fn variance(&self) -> Variance {
        self.variance
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Coefficients as supplied.
    pub fn raw(&self) -> &Tensor<Jet> {
        &self.raw
    }

    /// Vector-convention coefficients `N^a_i`.
    pub fn eff(&self) -> &Tensor<Jet> {
        &self.eff
    }

    pub fn order(&self) -> usize {
        self.eff.data()[0].order()
    }

    pub fn nvars(&self) -> usize {
        self.eff.data()[0].nvars()
    }

    /// `δ_i f = ∂_i f - N^a_i ∂_a f` in the engine convention.
    pub fn adapted(&self, f: &Jet, i: usize) -> Jet {
        let mut out = f.derivative(i);
        for a in 0..self.m {
            let t = &self.eff[[a, i]] * &f.derivative(self.n + a);
            out -= &t;
        }
        out
    }

    /// `∂f/∂y^a` (or `∂f/∂p_a`).
    pub fn vertical(&self, f: &Jet, a: usize) -> Jet {
        f.derivative(self.n + a)
    }

    /// Jet of a direction derivative along frame vector `alpha` (`0..n` horizontal, `n..n+m` vertical).
    pub fn frame_derivative(&self, f: &Jet, alpha: usize) -> Jet {
        if alpha < self.n {
            self.adapted(f, alpha)
        } else {
            f.derivative(alpha)
        }
    }

    /// Linearised coefficients `N^a_{bi} = ∂N^a_i/∂y^b`, indexed `[a][b][i]`.
    pub fn linearized(&self) -> Tensor<Jet> {
        Tensor::from_fn(&[self.m, self.m, self.n], |ix| self.eff[[ix[0], ix[2]]].derivative(self.n + ix[1]))
    }

    /// N-connection curvature `Ω^a_ij = δ_j N^a_i - δ_i N^a_j`, indexed `[a][i][j]`.
    pub fn curvature(&self) -> Tensor<Jet> {
        Tensor::from_fn(&[self.m, self.n, self.n], |ix| {
            let (a, i, j) = (ix[0], ix[1], ix[2]);
            self.adapted(&self.eff[[a, i]], j) - self.adapted(&self.eff[[a, j]], i)
        })
    }
}

/// Values at a point of the d-metric blocks with their inverses.
///
/// For covector variance `h` holds `ȟ^{ab}`.
#[derive(Debug, Clone)]
pub struct DMetricEval {
    pub g: Tensor<Jet>,
    pub h: Tensor<Jet>,
    pub g_inv: Tensor<Jet>,
    pub h_inv: Tensor<Jet>,
}

impl DMetricEval {
    pub fn from_jets(g: Tensor<Jet>, h: Tensor<Jet>) -> Result<DMetricEval> {
        let g = symmetrize(&g);
        let h = symmetrize(&h);
        let g_inv = linalg::invert_jets(&g, "g")?;
        let h_inv = linalg::invert_jets(&h, "h")?;
        Ok(DMetricEval { g, h, g_inv, h_inv })
    }

    pub fn from_values(g: &Tensor<f64>, h: &Tensor<f64>, nvars: usize, order: usize) -> Result<DMetricEval> {
        DMetricEval::from_jets(g.map(|&v| Jet::constant(v, nvars, order)), h.map(|&v| Jet::constant(v, nvars, order)))
    }

    pub fn n(&self) -> usize {
        self.g.shape()[0]
    }

    pub fn m(&self) -> usize {
        self.h.shape()[0]
    }
}

fn symmetrize(t: &Tensor<Jet>) -> Tensor<Jet> {
    Tensor::from_fn(t.shape(), |i| (&t[[i[0], i[1]]] + &t[[i[1], i[0]]]).scale(0.5))
}

/// Symmetric grid of fields; `(i, j)` and `(j, i)` must parse to the same tree.
#[derive(Debug, Clone)]
pub struct SymmetricFieldGrid {
    entries: Tensor<ScalarField>,
}

impl SymmetricFieldGrid {
    pub fn new(entries: Tensor<ScalarField>, name: &str) -> Result<SymmetricFieldGrid> {
        let s = entries.shape();
        if s.len() != 2 || s[0] != s[1] {
            return Err(Error::ShapeMismatch(format!("{name} must be square, got {s:?}")));
        }
        for i in 0..s[0] {
            for j in 0..i {
                if entries[[i, j]].expr() != entries[[j, i]].expr() {
                    return Err(Error::ShapeMismatch(format!("{name} is not symmetric at ({}, {})", i + 1, j + 1)));
                }
            }
        }
        Ok(SymmetricFieldGrid { entries })
    }

    pub fn entries(&self) -> &Tensor<ScalarField> {
        &self.entries
    }

    pub fn evaluate(&self, seeds: &[Jet]) -> Result<Tensor<Jet>> {
        Tensor::try_from_fn(self.entries.shape(), |i| self.entries[i].evaluate(seeds))
    }
}

/// Field form of an N-connection (`[a][i]` grid of expressions).
#[derive(Debug, Clone)]
pub struct NConnectionField {
    chart: BundleChart,
    entries: Tensor<ScalarField>,
}

impl NConnectionField {
    pub fn new(chart: BundleChart, entries: Tensor<ScalarField>) -> Result<NConnectionField> {
        if entries.shape() != [chart.m(), chart.n()] {
            return Err(Error::ShapeMismatch(format!(
                "N-connection grid must be {} x {}, got {:?}",
                chart.m(),
                chart.n(),
                entries.shape()
            )));
        }
        Ok(NConnectionField { chart, entries })
    }

    pub fn zero(chart: BundleChart) -> NConnectionField {
        let z = ScalarField::zero(chart.ctx().clone());
        let entries = Tensor::filled(&[chart.m(), chart.n()], z);
        NConnectionField { chart, entries }
    }

    pub fn entries(&self) -> &Tensor<ScalarField> {
        &self.entries
    }

    pub fn evaluate(&self, point: &PointU, order: usize) -> Result<NConnectionEval> {
        let seeds = point.seed(order);
        let raw = Tensor::try_from_fn(self.entries.shape(), |i| self.entries[i].evaluate(&seeds))?;
        NConnectionEval::from_jets(raw, self.chart.variance(), self.chart.n())
    }
}

/// Field form of a d-metric.
#[derive(Debug, Clone)]
pub struct DMetricField {
    pub g: SymmetricFieldGrid,
    pub h: SymmetricFieldGrid,
}

impl DMetricField {
    pub fn evaluate(&self, point: &PointU, order: usize) -> Result<DMetricEval> {
        let seeds = point.seed(order);
        DMetricEval::from_jets(self.g.evaluate(&seeds)?, self.h.evaluate(&seeds)?)
    }
}

/// `δ_i f` at a point for every base index.
pub fn adapted_derivative(f: &ScalarField, n_eval: &NConnectionEval, point: &PointU) -> Result<Vec<f64>> {
    let order = n_eval.order().max(1);
    let fj = f.evaluate(&point.seed(order))?;
    Ok((0..n_eval.n()).map(|i| n_eval.adapted(&fj, i).value()).collect())
}

/// Nonzero anholonomy coefficients of the adapted frame, `[δ_α, δ_β] = w^γ_{αβ} δ_γ`.
#[derive(Debug, Clone)]
pub struct Anholonomy {
    /// `w^a_ij = Ω^a_ij`, indexed `[a][i][j]`.
    pub hh: Tensor<f64>,
    /// `w^a_ib = ∂N^a_i/∂y^b = -w^a_bi`, indexed `[a][i][b]`.
    pub hv: Tensor<f64>,
}

pub fn anholonomy_coefficients(n_eval: &NConnectionEval) -> Anholonomy {
    let hh = n_eval.curvature().values();
    let lin = n_eval.linearized().values();
    let hv = Tensor::from_fn(&[n_eval.m(), n_eval.n(), n_eval.m()], |ix| lin[[ix[0], ix[2], ix[1]]]);
    Anholonomy { hh, hv }
}

/// Full anholonomy array `w^γ_{αβ}` over the `n + m` adapted frame, as jets.
pub fn anholonomy_full(n_eval: &NConnectionEval) -> Tensor<Jet> {
    let (n, m) = (n_eval.n(), n_eval.m());
    let d = n + m;
    let omega = n_eval.curvature();
    let lin = n_eval.linearized();
    let proto = Jet::zero(n_eval.nvars(), n_eval.order().saturating_sub(1));
    Tensor::from_fn(&[d, d, d], |ix| {
        let (g, a, b) = (ix[0], ix[1], ix[2]);
        if g < n {
            return proto.clone();
        }
        let c = g - n;
        match (a < n, b < n) {
            (true, true) => omega[[c, a, b]].clone(),
            (true, false) => lin[[c, b - n, a]].clone(),
            (false, true) => -&lin[[c, a - n, b]],
            (false, false) => proto.clone(),
        }
    })
}

/// Residual of the commutator identities on a test function:
/// `[δ_i, δ_j] f = Ω^a_ij ∂_a f` and `[δ_i, ∂_b] f = (∂_b N^a_i) ∂_a f`.
pub fn commutator_residual(f: &ScalarField, n_eval: &NConnectionEval, point: &PointU) -> Result<f64> {
    let (n, m) = (n_eval.n(), n_eval.m());
    let fj = f.evaluate(&point.seed(n_eval.order().max(2)))?;
    let omega = n_eval.curvature();
    let lin = n_eval.linearized();
    let df: Vec<Jet> = (0..m).map(|a| n_eval.vertical(&fj, a)).collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let lhs = n_eval.adapted(&n_eval.adapted(&fj, j), i).value() - n_eval.adapted(&n_eval.adapted(&fj, i), j).value();
            let rhs: f64 = (0..m).map(|a| omega[[a, i, j]].value() * df[a].value()).sum();
            worst = worst.max((lhs - rhs).abs());
        }
        for b in 0..m {
            let lhs = n_eval.adapted(&n_eval.vertical(&fj, b), i).value() - n_eval.vertical(&n_eval.adapted(&fj, i), b).value();
            let rhs: f64 = (0..m).map(|a| lin[[a, b, i]].value() * df[a].value()).sum();
            worst = worst.max((lhs - rhs).abs());
        }
    }
    Ok(worst)
}

/// `N^b_i = h^{ab} G_ia` from a coordinate-basis metric.
pub fn n_from_metric(full: &Tensor<f64>, n: usize) -> Result<Tensor<f64>> {
    let d = full.shape()[0];
    if full.shape() != [d, d] || d <= n {
        return Err(Error::ShapeMismatch(format!("coordinate metric shape {:?} incompatible with n={n}", full.shape())));
    }
    let m = d - n;
    let h = Tensor::from_fn(&[m, m], |i| full[[n + i[0], n + i[1]]]);
    let h_inv = linalg::invert(&h, "fiber metric").map_err(|e| match e {
        Error::SingularBlock { cond, .. } => Error::SingularBlock { block: "fiber metric h".into(), cond },
        other => other,
    })?;
    Ok(Tensor::from_fn(&[m, n], |ix| (0..m).map(|a| h_inv[[a, ix[0]]] * full[[ix[1], n + a]]).sum()))
}

/// Coordinate-basis metric `G_ij = g_ij + N^a_i N^b_j h_ab`, `G_ia = N^b_i h_ba`, `G_ab = h_ab`.
///
/// `nvals` is in engine (vector) convention.
pub fn assemble_coordinate_metric(g: &Tensor<f64>, h: &Tensor<f64>, nvals: &Tensor<f64>) -> Tensor<f64> {
    let (n, m) = (g.shape()[0], h.shape()[0]);
    let nh = Tensor::from_fn(&[n, m], |ix| (0..m).map(|b| nvals[[b, ix[0]]] * h[[b, ix[1]]]).sum::<f64>());
    Tensor::from_fn(&[n + m, n + m], |ix| {
        let (r, c) = (ix[0], ix[1]);
        match (r < n, c < n) {
            (true, true) => g[[r, c]] + (0..m).map(|a| nvals[[a, r]] * nh[[c, a]]).sum::<f64>(),
            (true, false) => nh[[r, c - n]],
            (false, true) => nh[[c, r - n]],
            (false, false) => h[[r - n, c - n]],
        }
    })
}

/// Adapted frame `(δ_i, ∂_a)` as columns in the coordinate basis.
pub fn frame_matrix(nvals: &Tensor<f64>) -> Tensor<f64> {
    let (m, n) = (nvals.shape()[0], nvals.shape()[1]);
    Tensor::from_fn(&[n + m, n + m], |ix| {
        let (r, c) = (ix[0], ix[1]);
        if r == c {
            1.0
        } else if r >= n && c < n {
            -nvals[[r - n, c]]
        } else {
            0.0
        }
    })
}

/// Adapted coframe `(dx^i, δy^a = dy^a + N^a_i dx^i)` as rows in the coordinate basis.
pub fn coframe_matrix(nvals: &Tensor<f64>) -> Tensor<f64> {
    let (m, n) = (nvals.shape()[0], nvals.shape()[1]);
    Tensor::from_fn(&[n + m, n + m], |ix| {
        let (r, c) = (ix[0], ix[1]);
        if r == c {
            1.0
        } else if r >= n && c < n {
            nvals[[r - n, c]]
        } else {
            0.0
        }
    })
}

/// Largest entry of `coframe · frame - I`.
pub fn frame_duality_residual(nvals: &Tensor<f64>) -> f64 {
    let e = frame_matrix(nvals);
    let w = coframe_matrix(nvals);
    let d = e.shape()[0];
    let mut worst: f64 = 0.0;
    for r in 0..d {
        for c in 0..d {
            let v: f64 = (0..d).map(|k| w[[r, k]] * e[[k, c]]).sum();
            worst = worst.max((v - if r == c { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn n_field(chart: &BundleChart, texts: &[&[&str]]) -> NConnectionField {
        let e = Tensor::from_fn(&[chart.m(), chart.n()], |i| parse(texts[i[0]][i[1]], chart.ctx()).unwrap());
        NConnectionField::new(chart.clone(), e).unwrap()
    }

    #[test]
    fn adapted_derivative_signs() {
        let chart = BundleChart::new(1, 1, Variance::Vector).unwrap();
        let pt = PointU::new(vec![0.2], vec![0.7]).unwrap();
        let n = n_field(&chart, &[&["1.5"]]).evaluate(&pt, 2).unwrap();
        let f = parse("y1", chart.ctx()).unwrap();
        assert_eq!(adapted_derivative(&f, &n, &pt).unwrap(), vec![-1.5]);

        let cv = BundleChart::new(1, 1, Variance::Covector).unwrap();
        let n = n_field(&cv, &[&["1.5"]]).evaluate(&pt, 2).unwrap();
        let f = parse("p1", cv.ctx()).unwrap();
        assert_eq!(adapted_derivative(&f, &n, &pt).unwrap(), vec![1.5]);

        let z = NConnectionField::zero(chart.clone()).evaluate(&pt, 2).unwrap();
        let f = parse("x1^2 * y1", chart.ctx()).unwrap();
        assert!((adapted_derivative(&f, &z, &pt).unwrap()[0] - 2.0 * 0.2 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn anholonomy_examples() {
        let chart = BundleChart::new(2, 1, Variance::Vector).unwrap();
        let pt = PointU::new(vec![0.3, -0.4], vec![1.2]).unwrap();
        let n = n_field(&chart, &[&["x1 + 2 * x2", "2 * x1 - x2"]]).evaluate(&pt, 2).unwrap();
        assert!(anholonomy_coefficients(&n).hh.max_abs() < 1e-15);
        let chart = BundleChart::new(2, 2, Variance::Vector).unwrap();
        let pt = PointU::new(vec![0.3, -0.4], vec![1.2, 0.5]).unwrap();
        let n = n_field(&chart, &[&["y1", "0"], &["0", "0"]]).evaluate(&pt, 2).unwrap();
        let w = anholonomy_coefficients(&n);
        assert_eq!(w.hv[[0, 0, 0]], 1.0);
        assert_eq!(w.hv[[0, 0, 1]], 0.0);
    }

    #[test]
    fn metric_assembly_round_trip() {
        let g = Tensor::from_fn(&[1, 1], |_| 1.0);
        let h = g.clone();
        let nv = Tensor::from_fn(&[1, 1], |_| 0.8);
        let full = assemble_coordinate_metric(&g, &h, &nv);
        for (v, e) in full.data().iter().zip([1.64, 0.8, 0.8, 1.0]) {
            assert!((v - e).abs() < 1e-15);
        }
        let back = n_from_metric(&full, 1).unwrap();
        assert!((back[[0, 0]] - 0.8).abs() < 1e-15);
        assert!(frame_duality_residual(&nv) < 1e-15);
    }
}
