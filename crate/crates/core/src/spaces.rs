//! Finsler, Lagrange, Cartan and Hamilton spaces, their generalized forms, and
//! raw (co)vector bundles given by component fields.
//!
//! A fundamental function is evaluated once per point over jets of order
//! [`FUNDAMENTAL_ORDER`]; the metric blocks and the canonical N-connection
//! follow by differentiating that single jet, so the pipeline receives metric
//! and N-connection jets of order [`PIPELINE_ORDER`] or better.
//!
//! Covector spaces feed the same engine as vector ones: the fiber block holds
//! `ǧ^{ij}` and the engine sees `N^a_i = -Ň_ia`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::{BundleChart, DMetricEval, NConnectionEval, NConnectionField, PointU, SymmetricFieldGrid};
use crate::connection::DConnectionCoeffs;
use crate::error::{Error, Result};
use crate::expr::{parse, ScalarField, VarContext, Variance};
use crate::jet::Jet;
use crate::linalg;
use crate::tensor::Tensor;

/// Jet order at which fundamental functions are expanded.
pub const FUNDAMENTAL_ORDER: usize = 5;
/// Jet order of the metric and N-connection handed to the connection builders.
pub const PIPELINE_ORDER: usize = 2;
/// Default exclusion radius around the null section for homogeneous families.
pub const DEFAULT_NULL_MARGIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Finsler,
    Lagrange,
    GeneralizedLagrange,
    Cartan,
    Hamilton,
    GeneralizedHamilton,
    RawVbundle,
    RawCvbundle,
}

impl SpaceKind {
    pub fn variance(self) -> Variance {
        match self {
            SpaceKind::Finsler | SpaceKind::Lagrange | SpaceKind::GeneralizedLagrange | SpaceKind::RawVbundle => Variance::Vector,
            _ => Variance::Covector,
        }
    }

    /// Families whose fundamental function is 1-homogeneous in the fiber.
    pub fn is_homogeneous(self) -> bool {
        matches!(self, SpaceKind::Finsler | SpaceKind::Cartan)
    }
}

/// Which function the Lagrange metric is the fiber Hessian of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum HessianMode {
    /// `g = ½ ∂²L/∂y∂y`
    #[default]
    #[serde(rename = "of_L")]
    OfL,
    /// `g = ½ ∂²L²/∂y∂y`
    #[serde(rename = "of_L_squared")]
    OfLSquared,
}

#[derive(Debug, Clone)]
enum BaseBlock {
    SameAsFiber,
    InverseOfFiber,
    Own(SymmetricFieldGrid),
}

#[derive(Debug, Clone)]
enum Source {
    Potential { f: ScalarField, mode: HessianMode },
    Fields { g: BaseBlock, h: SymmetricFieldGrid, n_field: NConnectionField },
}

/// A space of one of the supported families on a single chart.
#[derive(Debug, Clone)]
pub struct Space {
    kind: SpaceKind,
    chart: BundleChart,
    source: Source,
    null_margin: f64,
}

/// Metric and N-connection of a space at one point.
#[derive(Debug, Clone)]
pub struct SpaceEval {
    pub point: PointU,
    pub dm: DMetricEval,
    pub nc: NConnectionEval,
}

fn grid<S: AsRef<str>>(rows: &[Vec<S>], shape: [usize; 2], ctx: &Arc<VarContext>, name: &str) -> Result<Tensor<ScalarField>> {
    if rows.len() != shape[0] || rows.iter().any(|r| r.len() != shape[1]) {
        return Err(Error::ShapeMismatch(format!("{name} must be a {} x {} grid", shape[0], shape[1])));
    }
    Tensor::try_from_fn(&shape, |ix| parse(rows[ix[0]][ix[1]].as_ref(), ctx))
}

fn sym_grid<S: AsRef<str>>(rows: &[Vec<S>], dim: usize, ctx: &Arc<VarContext>, name: &str) -> Result<SymmetricFieldGrid> {
    SymmetricFieldGrid::new(grid(rows, [dim, dim], ctx, name)?, name)
}

fn n_grid<S: AsRef<str>>(rows: Option<&[Vec<S>]>, chart: &BundleChart) -> Result<NConnectionField> {
    match rows {
        None => Ok(NConnectionField::zero(chart.clone())),
        Some(r) => NConnectionField::new(chart.clone(), grid(r, [chart.m(), chart.n()], chart.ctx(), "N")?),
    }
}

impl Space {
    fn potential(kind: SpaceKind, n: usize, text: &str, mode: HessianMode, margin: f64) -> Result<Space> {
        let chart = BundleChart::new(n, n, kind.variance())?;
        let f = parse(text, chart.ctx())?;
        Ok(Space { kind, chart, source: Source::Potential { f, mode }, null_margin: margin })
    }

    /// Finsler space with fundamental function `F(x, y)`.
    pub fn finsler(n: usize, f: &str) -> Result<Space> {
        Space::potential(SpaceKind::Finsler, n, f, HessianMode::OfL, DEFAULT_NULL_MARGIN)
    }

    pub fn lagrange(n: usize, l: &str, mode: HessianMode) -> Result<Space> {
        Space::potential(SpaceKind::Lagrange, n, l, mode, 0.0)
    }

    /// Cartan space with fundamental function `K(x, p)`.
    pub fn cartan(n: usize, k: &str) -> Result<Space> {
        Space::potential(SpaceKind::Cartan, n, k, HessianMode::OfL, DEFAULT_NULL_MARGIN)
    }

    /// Hamilton space with Hamiltonian `H(x, p)`.
    pub fn hamilton(n: usize, h: &str) -> Result<Space> {
        Space::potential(SpaceKind::Hamilton, n, h, HessianMode::OfL, 0.0)
    }

    /// Generalized Lagrange space: `g_ij(x, y)` on both blocks, arbitrary `N^i_j` (zero when omitted).
    pub fn generalized_lagrange<S: AsRef<str>>(n: usize, g: &[Vec<S>], n_conn: Option<&[Vec<S>]>) -> Result<Space> {
        let chart = BundleChart::new(n, n, Variance::Vector)?;
        let h = sym_grid(g, n, chart.ctx(), "g")?;
        let n_field = n_grid(n_conn, &chart)?;
        Ok(Space {
            kind: SpaceKind::GeneralizedLagrange,
            source: Source::Fields { g: BaseBlock::SameAsFiber, h, n_field },
            chart,
            null_margin: 0.0,
        })
    }

    /// Generalized Hamilton space: `ǧ^{ij}(x, p)` on the fiber, its inverse on the base, arbitrary `Ň_ij`.
    ///
    /// `n_conn` rows are indexed `[j][i]` and hold `Ň_ij`.
    pub fn generalized_hamilton<S: AsRef<str>>(n: usize, g_inv: &[Vec<S>], n_conn: Option<&[Vec<S>]>) -> Result<Space> {
        let chart = BundleChart::new(n, n, Variance::Covector)?;
        let h = sym_grid(g_inv, n, chart.ctx(), "g_inv")?;
        let n_field = n_grid(n_conn, &chart)?;
        Ok(Space {
            kind: SpaceKind::GeneralizedHamilton,
            source: Source::Fields { g: BaseBlock::InverseOfFiber, h, n_field },
            chart,
            null_margin: 0.0,
        })
    }

    /// Vector or covector bundle from explicit `g_ij`, `h_ab` (or `ȟ^{ab}`) and N fields.
    pub fn raw<S: AsRef<str>>(
        n: usize,
        m: usize,
        variance: Variance,
        g: &[Vec<S>],
        h: &[Vec<S>],
        n_conn: Option<&[Vec<S>]>,
    ) -> Result<Space> {
        let chart = BundleChart::new(n, m, variance)?;
        let g = sym_grid(g, n, chart.ctx(), "g")?;
        let h = sym_grid(h, m, chart.ctx(), "h")?;
        let n_field = n_grid(n_conn, &chart)?;
        let kind = match variance {
            Variance::Vector => SpaceKind::RawVbundle,
            Variance::Covector => SpaceKind::RawCvbundle,
        };
        Ok(Space { kind, source: Source::Fields { g: BaseBlock::Own(g), h, n_field }, chart, null_margin: 0.0 })
    }

    pub fn with_null_margin(mut self, margin: f64) -> Space {
        self.null_margin = margin;
        self
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn chart(&self) -> &BundleChart {
        &self.chart
    }

    pub fn n(&self) -> usize {
        self.chart.n()
    }

    pub fn m(&self) -> usize {
        self.chart.m()
    }

    pub fn null_margin(&self) -> f64 {
        self.null_margin
    }

    /// The user-supplied fundamental function (`F`, `L`, `K` or `H`), if any.
    pub fn fundamental(&self) -> Option<&ScalarField> {
        match &self.source {
            Source::Potential { f, .. } => Some(f),
            Source::Fields { .. } => None,
        }
    }

    /// Function whose half fiber Hessian is the metric: `F²`, `L` or `L²`, `K²`, `H`.
    fn potential_jet(&self, coords: &[Jet]) -> Result<Option<Jet>> {
        let Source::Potential { f, mode } = &self.source else {
            return Ok(None);
        };
        let v = f.evaluate(coords)?;
        let squared = match self.kind {
            SpaceKind::Finsler | SpaceKind::Cartan => {
                if !(v.value() > 0.0) {
                    return Err(Error::Domain(format!("fundamental function must be positive, got {}", v.value())));
                }
                true
            }
            SpaceKind::Lagrange => *mode == HessianMode::OfLSquared,
            _ => false,
        };
        Ok(Some(if squared { &v * &v } else { v }))
    }

    fn check_point(&self, point: &PointU) -> Result<()> {
        if point.x.len() != self.n() || point.fiber.len() != self.m() {
            return Err(Error::Dimension(format!(
                "point has {} + {} coordinates, space needs {} + {}",
                point.x.len(),
                point.fiber.len(),
                self.n(),
                self.m()
            )));
        }
        if self.null_margin > 0.0 {
            point.check_margin(self.null_margin)?;
        }
        Ok(())
    }

    /// Metric and N-connection jets of order [`PIPELINE_ORDER`] at `point`.
    pub fn evaluate(&self, point: &PointU) -> Result<SpaceEval> {
        self.evaluate_at_depth(point, PIPELINE_ORDER)
    }

    /// Metric and N-connection jets of order `depth` at `point`.
    pub fn evaluate_at_depth(&self, point: &PointU, depth: usize) -> Result<SpaceEval> {
        self.check_point(point)?;
        let n = self.n();
        let (dm, nc) = match &self.source {
            Source::Fields { g, h, n_field } => {
                let seeds = point.seed(depth);
                let hj = h.evaluate(&seeds)?;
                let gj = match g {
                    BaseBlock::SameAsFiber => hj.clone(),
                    BaseBlock::InverseOfFiber => linalg::invert_jets(&hj, "g_inv")?,
                    BaseBlock::Own(grid) => grid.evaluate(&seeds)?,
                };
                (DMetricEval::from_jets(gj, hj)?, n_field.evaluate(point, depth)?)
            }
            Source::Potential { .. } => {
                let seeds = point.seed(depth + 3);
                let lam = self.potential_jet(&seeds)?.expect("potential source");
                let hess = fiber_hessian(&lam, n, self.m());
                self.check_hessian(&hess.values())?;
                let inv = linalg::invert_jets(&hess, "fiber Hessian")?;
                let raw = match self.kind {
                    SpaceKind::Finsler | SpaceKind::Lagrange => spray_connection(&lam, &inv, &seeds, n),
                    SpaceKind::Cartan => cartan_dual_connection(&hess, &inv, &seeds, n),
                    SpaceKind::Hamilton => hamilton_connection(&lam, &hess, &inv, n),
                    _ => unreachable!("potential source for field-defined kind"),
                };
                let nc = NConnectionEval::from_jets(raw, self.kind.variance(), n)?;
                let dm = match self.kind.variance() {
                    Variance::Vector => DMetricEval::from_jets(hess.clone(), hess)?,
                    Variance::Covector => DMetricEval::from_jets(inv, hess)?,
                };
                (dm, nc)
            }
        };
        Ok(SpaceEval { point: point.clone(), dm, nc })
    }

    fn check_hessian(&self, vals: &Tensor<f64>) -> Result<()> {
        let eig = linalg::symmetric_eigenvalues(vals);
        let min = eig.iter().cloned().fold(f64::INFINITY, f64::min);
        let max_abs = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let min_abs = eig.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        if self.kind == SpaceKind::Lagrange {
            if !(min_abs > max_abs / linalg::MAX_CONDITION) {
                return Err(Error::RankDeficientHessian(format!("eigenvalues {eig:?}")));
            }
        } else if !(min > 0.0) {
            return Err(Error::NonPositiveDefinite(format!("eigenvalues {eig:?}")));
        }
        Ok(())
    }

    /// Plain values of the metric blocks and raw N coefficients at `point`.
    pub fn values(&self, point: &PointU) -> Result<(Tensor<f64>, Tensor<f64>, Tensor<f64>)> {
        let ev = self.evaluate_at_depth(point, 0)?;
        Ok((ev.dm.g.values(), ev.dm.h.values(), ev.nc.raw().values()))
    }
}

/// `½ ∂²Λ/∂u^{n+a}∂u^{n+b}`.
fn fiber_hessian(lam: &Jet, n: usize, m: usize) -> Tensor<Jet> {
    let first: Vec<Jet> = (0..m).map(|a| lam.derivative(n + a)).collect();
    Tensor::from_fn(&[m, m], |ix| first[ix[0]].derivative(n + ix[1]).scale(0.5))
}

/// `N^i_j = ∂G^i/∂y^j` with `G^i = ¼ g^{ih}(y^k ∂²Λ/∂y^h∂x^k - ∂Λ/∂x^h)`.
fn spray_connection(lam: &Jet, g_inv: &Tensor<Jet>, seeds: &[Jet], n: usize) -> Tensor<Jet> {
    let w: Vec<Jet> = (0..n)
        .map(|h| {
            let lyh = lam.derivative(n + h);
            let mut acc = -lam.derivative(h);
            for k in 0..n {
                acc = acc + &(&seeds[n + k] * &lyh.derivative(k));
            }
            acc
        })
        .collect();
    let spray: Vec<Jet> = (0..n)
        .map(|i| {
            let mut acc = &g_inv[[i, 0]] * &w[0];
            for h in 1..n {
                acc += &(&g_inv[[i, h]] * &w[h]);
            }
            acc.scale(0.25)
        })
        .collect();
    Tensor::from_fn(&[n, n], |ix| spray[ix[0]].derivative(n + ix[1]))
}

/// Christoffel symbols of a base block in the x-directions, `[k][i][j]`.
fn base_christoffel(g_low: &Tensor<Jet>, g_up: &Tensor<Jet>, n: usize) -> Tensor<Jet> {
    let dg: Vec<Tensor<Jet>> = (0..n).map(|r| g_low.map(|f| f.derivative(r))).collect();
    Tensor::from_fn(&[n, n, n], |ix| {
        let (k, i, j) = (ix[0], ix[1], ix[2]);
        let mut acc: Option<Jet> = None;
        for r in 0..n {
            let t = &g_up[[k, r]] * &(&dg[i][[r, j]] + &dg[j][[i, r]] - &dg[r][[i, j]]);
            acc = Some(match acc {
                None => t,
                Some(a) => a + &t,
            });
        }
        acc.expect("n >= 1").scale(0.5)
    })
}

/// Canonical `Ň_ij` of a Cartan space, returned as the raw `[a][i]` grid.
fn cartan_dual_connection(g_up: &Tensor<Jet>, g_low: &Tensor<Jet>, seeds: &[Jet], n: usize) -> Tensor<Jet> {
    let gam = base_christoffel(g_low, g_up, n);
    let p = &seeds[n..];
    let p_up: Vec<Jet> = (0..n)
        .map(|l| {
            let mut acc = &g_up[[l, 0]] * &p[0];
            for m in 1..n {
                acc += &(&g_up[[l, m]] * &p[m]);
            }
            acc
        })
        .collect();
    let a: Vec<Jet> = (0..n)
        .map(|nn| {
            let mut acc = Jet::zero(seeds[0].nvars(), gam[[0, 0, 0]].order());
            for k in 0..n {
                for l in 0..n {
                    acc += &(&(&gam[[k, nn, l]] * &p[k]) * &p_up[l]);
                }
            }
            acc
        })
        .collect();
    Tensor::from_fn(&[n, n], |ix| {
        let (j, i) = (ix[0], ix[1]);
        let mut acc = &gam[[0, i, j]] * &p[0];
        for k in 1..n {
            acc += &(&gam[[k, i, j]] * &p[k]);
        }
        for nn in 0..n {
            acc -= &(&a[nn] * &g_low[[i, j]].derivative(n + nn)).scale(0.5);
        }
        acc
    })
}

/// Canonical `Ň_ij = ¼{ǧ_ij, H} - ¼(ǧ_ik ∂²H/∂p_k∂x^j + ǧ_jk ∂²H/∂p_k∂x^i)`, raw `[a][i]` grid.
fn hamilton_connection(h: &Jet, _g_up: &Tensor<Jet>, g_low: &Tensor<Jet>, n: usize) -> Tensor<Jet> {
    let hx: Vec<Jet> = (0..n).map(|l| h.derivative(l)).collect();
    let hp: Vec<Jet> = (0..n).map(|l| h.derivative(n + l)).collect();
    let hpx: Vec<Vec<Jet>> = (0..n).map(|k| (0..n).map(|j| hp[k].derivative(j)).collect()).collect();
    Tensor::from_fn(&[n, n], |ix| {
        let (j, i) = (ix[0], ix[1]);
        let gij = &g_low[[i, j]];
        let mut bracket = Jet::zero(h.nvars(), gij.order() - 1);
        for l in 0..n {
            bracket += &(&gij.derivative(n + l) * &hx[l]);
            bracket -= &(&hp[l] * &gij.derivative(l));
        }
        let mut mixed = Jet::zero(h.nvars(), gij.order());
        for k in 0..n {
            mixed += &(&g_low[[i, k]] * &hpx[k][j]);
            mixed += &(&g_low[[j, k]] * &hpx[k][i]);
        }
        (bracket - &mixed).scale(0.25)
    })
}

/// Cartan N of a Finsler space from its defining expression
/// `½ ∂/∂y^j (γ^i_nk y^n y^k)`, as values `[i][j]`.
///
/// Slower and one derivative deeper than the spray form used by
/// [`Space::evaluate`]; kept for cross-checking.
pub fn cartan_n_literal(space: &Space, point: &PointU) -> Result<Tensor<f64>> {
    if space.kind() != SpaceKind::Finsler {
        return Err(Error::Scenario("the literal Cartan N-connection is defined for Finsler spaces".into()));
    }
    space.check_point(point)?;
    let n = space.n();
    let seeds = point.seed(5);
    let lam = space.potential_jet(&seeds)?.expect("Finsler potential");
    let g = fiber_hessian(&lam, n, n);
    let g_inv = linalg::invert_jets(&g, "g")?;
    let gam = base_christoffel(&g, &g_inv, n);
    let y = &seeds[n..];
    let q: Vec<Jet> = (0..n)
        .map(|i| {
            let mut acc = Jet::zero(2 * n, gam[[0, 0, 0]].order());
            for a in 0..n {
                for b in 0..n {
                    acc += &(&(&gam[[i, a, b]] * &y[a]) * &y[b]);
                }
            }
            acc
        })
        .collect();
    Ok(Tensor::from_fn(&[n, n], |ix| 0.5 * q[ix[0]].derivative(n + ix[1]).value()))
}

/// Residuals of the homogeneity cascade at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneityReport {
    /// `max_λ |F(x, λy) - λ F(x, y)|` over `λ ∈ {0.5, 2, 3}`
    pub fundamental: f64,
    /// `max_λ |g(x, λy) - g(x, y)|`
    pub metric: f64,
    /// `|y^i y^j g_ij - F²|`
    pub euler: f64,
    /// `max |∂g_ij/∂y^k y^k|`
    pub cartan_contraction: f64,
}

impl HomogeneityReport {
    pub fn max(&self) -> f64 {
        self.fundamental.max(self.metric).max(self.euler).max(self.cartan_contraction)
    }
}

pub const HOMOGENEITY_SCALES: [f64; 3] = [0.5, 2.0, 3.0];

pub fn homogeneity_report(space: &Space, point: &PointU) -> Result<HomogeneityReport> {
    if !space.kind().is_homogeneous() {
        return Err(Error::Scenario("homogeneity checks apply to Finsler and Cartan spaces".into()));
    }
    space.check_point(point)?;
    let f = space.fundamental().expect("homogeneous kinds have a fundamental function");
    let n = space.n();
    let base = point.coords();
    let f0 = f.value_at(&base)?;

    let metric_at = |p: &PointU| -> Result<Tensor<Jet>> {
        let seeds = p.seed(3);
        let lam = space.potential_jet(&seeds)?.expect("potential");
        Ok(fiber_hessian(&lam, n, n))
    };
    let g0 = metric_at(point)?;
    let g0v = g0.values();

    let mut fundamental: f64 = 0.0;
    let mut metric: f64 = 0.0;
    for &lam in &HOMOGENEITY_SCALES {
        let scaled = PointU::new(point.x.clone(), point.fiber.iter().map(|v| lam * v).collect())?;
        fundamental = fundamental.max((f.value_at(&scaled.coords())? - lam * f0).abs());
        metric = metric.max(metric_at(&scaled)?.values().max_abs_diff(&g0v));
    }

    let y = &point.fiber;
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += y[i] * y[j] * g0v[[i, j]];
        }
    }
    let euler = (quad - f0 * f0).abs();

    let mut cartan_contraction: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let grad = g0[[i, j]].gradient();
            let c: f64 = (0..n).map(|k| grad[n + k] * y[k]).sum();
            cartan_contraction = cartan_contraction.max(c.abs());
        }
    }
    Ok(HomogeneityReport { fundamental, metric, euler, cartan_contraction })
}

/// Residuals of the almost Hermitian structure on a tangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlmostStructureReport {
    /// `max |J² + I|`
    pub j_squared: f64,
    /// `max |Jᵀ G J - G|` with `G = diag(g, h)`
    pub metric_compatibility: f64,
    /// `max |D_γ J^α_β|`
    pub covariant_constancy: f64,
    /// `max |dθ|` for `θ = g_ij δy^i ∧ dx^j`
    pub closedness: f64,
}

/// Step of the central stencil used for `dθ`.
pub const EXTERIOR_STEP: f64 = 1e-3;

/// Matrix of `J` in the adapted frame: `J δ_i = -∂_i`, `J ∂_i = δ_i`.
pub fn almost_complex_matrix(n: usize) -> Tensor<f64> {
    Tensor::from_fn(&[2 * n, 2 * n], |ix| {
        let (r, c) = (ix[0], ix[1]);
        if r >= n && c < n && r - n == c {
            -1.0
        } else if r < n && c >= n && c - n == r {
            1.0
        } else {
            0.0
        }
    })
}

fn matmul(a: &Tensor<f64>, b: &Tensor<f64>) -> Tensor<f64> {
    let (r, k, c) = (a.shape()[0], a.shape()[1], b.shape()[1]);
    Tensor::from_fn(&[r, c], |ix| (0..k).map(|t| a[[ix[0], t]] * b[[t, ix[1]]]).sum())
}

fn transpose(a: &Tensor<f64>) -> Tensor<f64> {
    Tensor::from_fn(&[a.shape()[1], a.shape()[0]], |ix| a[[ix[1], ix[0]]])
}

pub fn almost_structure_checks(space: &Space, ev: &SpaceEval, gamma: &DConnectionCoeffs) -> Result<AlmostStructureReport> {
    let n = space.n();
    if space.m() != n || space.kind().variance() != Variance::Vector {
        return Err(Error::Dimension("almost Hermitian checks need a tangent bundle (n = m, vector fibers)".into()));
    }
    let d = 2 * n;
    let j = almost_complex_matrix(n);
    let id = Tensor::from_fn(&[d, d], |ix| if ix[0] == ix[1] { 1.0 } else { 0.0 });
    let jj = matmul(&j, &j);
    let j_squared = Tensor::from_fn(&[d, d], |ix| jj[ix] + id[ix]).max_abs();

    let (g, h) = (ev.dm.g.values(), ev.dm.h.values());
    let big = Tensor::from_fn(&[d, d], |ix| {
        let (r, c) = (ix[0], ix[1]);
        if r < n && c < n {
            g[[r, c]]
        } else if r >= n && c >= n {
            h[[r - n, c - n]]
        } else {
            0.0
        }
    });
    let pulled = matmul(&matmul(&transpose(&j), &big), &j);
    let metric_compatibility = pulled.max_abs_diff(&big);

    let gam = |t: usize, s: usize, dir: usize| gamma.gamma(t, s, dir).map(|v| v.value()).unwrap_or(0.0);
    let mut covariant_constancy: f64 = 0.0;
    for dir in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut acc = 0.0;
                for mu in 0..d {
                    acc += gam(a, mu, dir) * j[[mu, b]] - gam(mu, b, dir) * j[[a, mu]];
                }
                covariant_constancy = covariant_constancy.max(acc.abs());
            }
        }
    }

    let closedness = exterior_residual(space, &ev.point)?;
    Ok(AlmostStructureReport { j_squared, metric_compatibility, covariant_constancy, closedness })
}

/// Coordinate components `θ_AB` of `g_ij δy^i ∧ dx^j`.
fn theta_components(space: &Space, coords: &[f64]) -> Result<Tensor<f64>> {
    let n = space.n();
    let p = PointU::from_coords(coords, n)?;
    let (g, _, nraw) = space.values(&p)?;
    let d = 2 * n;
    let dy = |i: usize, a: usize| if a < n { nraw[[i, a]] } else if a - n == i { 1.0 } else { 0.0 };
    let dx = |j: usize, a: usize| if a == j { 1.0 } else { 0.0 };
    Ok(Tensor::from_fn(&[d, d], |ix| {
        let (a, b) = (ix[0], ix[1]);
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g[[i, j]] * (dy(i, a) * dx(j, b) - dy(i, b) * dx(j, a));
            }
        }
        acc
    }))
}

fn exterior_residual(space: &Space, point: &PointU) -> Result<f64> {
    let base = point.coords();
    let d = base.len();
    let mut grads = Vec::with_capacity(d);
    for a in 0..d {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[a] += EXTERIOR_STEP;
        minus[a] -= EXTERIOR_STEP;
        let tp = theta_components(space, &plus)?;
        let tm = theta_components(space, &minus)?;
        grads.push(Tensor::from_fn(&[d, d], |ix| (tp[ix] - tm[ix]) / (2.0 * EXTERIOR_STEP)));
    }
    let mut worst: f64 = 0.0;
    for a in 0..d {
        for b in a + 1..d {
            for c in b + 1..d {
                let v = grads[a][[b, c]] + grads[b][[c, a]] + grads[c][[a, b]];
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Residuals of a fiber-linear change of chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransformReport {
    /// `max |Φ(x', u') - Φ(x, u)|` for the fundamental function (absent for field-defined spaces)
    pub invariance: Option<f64>,
    /// `max |Mᵀ h'(x, u') M - h(x, u)|` where `u' = M u`
    pub fiber_covariance: f64,
}

/// Check a transform `x' = φ(x)`, `y' = K(x) y` (or `p' = K(x)^{-T} p` on covector fibers).
///
/// `k` is an `m × m` grid and `base_map` an `n`-vector of fields over the space's chart.
pub fn coordinate_transform_check(
    space: &Space,
    k: &Tensor<ScalarField>,
    base_map: &[ScalarField],
    points: &[PointU],
) -> Result<TransformReport> {
    let (n, m) = (space.n(), space.m());
    if k.shape() != [m, m] || base_map.len() != n {
        return Err(Error::ShapeMismatch(format!("transform needs a {m} x {m} fiber matrix and {n} base functions")));
    }
    let mut invariance: Option<f64> = None;
    let mut fiber_covariance: f64 = 0.0;
    for point in points {
        space.check_point(point)?;
        let coords = point.coords();
        let kv = Tensor::try_from_fn(&[m, m], |ix| k[ix].value_at(&coords))?;
        let kinv = linalg::invert(&kv, "K").map_err(|e| Error::SingularTransform(e.to_string()))?;
        let (mat, mat_inv) = match space.kind().variance() {
            Variance::Vector => (kv, kinv),
            Variance::Covector => (transpose(&kinv), transpose(&kv)),
        };
        let fiber_p: Vec<f64> = (0..m).map(|a| (0..m).map(|b| mat[[a, b]] * point.fiber[b]).sum()).collect();
        let x_p: Vec<f64> = base_map.iter().map(|f| f.value_at(&coords)).collect::<Result<_>>()?;
        let primed = PointU::new(x_p, fiber_p.clone())?;

        if let Some(f) = space.fundamental() {
            let r = (f.value_at(&primed.coords())? - f.value_at(&coords)?).abs();
            invariance = Some(invariance.unwrap_or(0.0).max(r));
        }

        let seeds = PointU::new(point.x.clone(), fiber_p)?.seed(2);
        let mut composed: Vec<Jet> = seeds[..n].to_vec();
        for a in 0..m {
            let mut acc = &seeds[n] * mat_inv[[a, 0]];
            for b in 1..m {
                acc += &(&seeds[n + b] * mat_inv[[a, b]]);
            }
            composed.push(acc);
        }
        let h_primed = match space.potential_jet(&composed)? {
            Some(lam) => fiber_hessian(&lam, n, m).values(),
            None => {
                let h_orig = space.evaluate_at_depth(&PointU::from_coords(&composed.iter().map(|j| j.value()).collect::<Vec<_>>(), n)?, 1)?.dm.h.values();
                matmul(&matmul(&transpose(&mat_inv), &h_orig), &mat_inv)
            }
        };
        let pulled = matmul(&matmul(&transpose(&mat), &h_primed), &mat);
        let h0 = space.evaluate_at_depth(point, 1)?.dm.h.values();
        fiber_covariance = fiber_covariance.max(pulled.max_abs_diff(&h0));
    }
    Ok(TransformReport { invariance, fiber_covariance })
}
