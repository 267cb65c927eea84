//! Distinguished connections and their covariant derivatives.

use serde::{Deserialize, Serialize};

use crate::bundle::{DMetricEval, NConnectionEval};
use crate::error::{Error, Result};
use crate::expr::Variance;
use crate::jet::Jet;
use crate::tensor::Tensor;

/// Which example d-connection to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConnectionKind {
    Berwald,
    Canonical,
    Christoffel,
    /// `(L, L, C, C)` on a tangent bundle with `g = h`.
    Kahler,
}

/// The four coefficient blocks of a d-connection.
///
/// Index layout: `lh[i][j][k] = L^i_jk`, `lv[a][b][k] = L^a_bk`,
/// `ch[i][j][c] = C^i_jc`, `cv[a][b][c] = C^a_bc`. Entries are jets, so the
/// adapted derivatives needed by the curvature come with the coefficients.
#[derive(Debug, Clone)]
pub struct DConnectionCoeffs {
    pub variance: Variance,
    pub lh: Tensor<Jet>,
    pub lv: Tensor<Jet>,
    pub ch: Tensor<Jet>,
    pub cv: Tensor<Jet>,
}

impl DConnectionCoeffs {
    pub fn n(&self) -> usize {
        self.lh.shape()[0]
    }

    pub fn m(&self) -> usize {
        self.cv.shape()[0]
    }

    pub fn order(&self) -> usize {
        self.lh.data()[0].order()
    }

    /// Coefficients with vanishing partials, from plain values.
    pub fn from_values(
        variance: Variance,
        blocks: [&Tensor<f64>; 4],
        nvars: usize,
        order: usize,
    ) -> DConnectionCoeffs {
        let lift = |t: &Tensor<f64>| t.map(|&v| Jet::constant(v, nvars, order));
        DConnectionCoeffs {
            variance,
            lh: lift(blocks[0]),
            lv: lift(blocks[1]),
            ch: lift(blocks[2]),
            cv: lift(blocks[3]),
        }
    }

    /// `Γ^γ_{αβ}` on the adapted frame (`α, β, γ` run over `0..n+m`,
    /// horizontal first); `β` is the differentiation direction.
    pub fn gamma(&self, target: usize, source: usize, dir: usize) -> Option<&Jet> {
        let n = self.n();
        match (target < n, source < n, dir < n) {
            (true, true, true) => Some(&self.lh[[target, source, dir]]),
            (true, true, false) => Some(&self.ch[[target, source, dir - n]]),
            (false, false, true) => Some(&self.lv[[target - n, source - n, dir]]),
            (false, false, false) => Some(&self.cv[[target - n, source - n, dir - n]]),
            _ => None,
        }
    }

    /// Full `(n+m)^3` array of values, zeros in the mixed slots.
    pub fn full_values(&self) -> Tensor<f64> {
        let d = self.n() + self.m();
        Tensor::from_fn(&[d, d, d], |i| self.gamma(i[0], i[1], i[2]).map_or(0.0, |j| j.value()))
    }
}

fn common_order(dm: &DMetricEval, nc: &NConnectionEval) -> usize {
    dm.g.data()[0].order().min(nc.order())
}

/// Adapted derivatives `δ_k` (for `k < n`) and `∂_c` (for `k = n + c`) of every entry of a block.
fn frame_derivs(t: &Tensor<Jet>, nc: &NConnectionEval, dirs: usize) -> Vec<Tensor<Jet>> {
    (0..dirs).map(|k| t.map(|f| nc.frame_derivative(f, k))).collect()
}

fn zero_block(shape: &[usize], nvars: usize, order: usize) -> Tensor<Jet> {
    Tensor::filled(shape, Jet::zero(nvars, order))
}

/// Horizontal block `½ g^{ir}(δ_j g_rk + δ_k g_jr - δ_r g_jk)`.
fn lccoef_h(dm: &DMetricEval, nc: &NConnectionEval) -> Tensor<Jet> {
    let n = dm.n();
    let dg = frame_derivs(&dm.g, nc, n);
    let low = Tensor::from_fn(&[n, n, n], |ix| {
        let (r, j, k) = (ix[0], ix[1], ix[2]);
        (&dg[j][[r, k]] + &dg[k][[j, r]] - &dg[r][[j, k]]).scale(0.5)
    });
    raise(&dm.g_inv, &low)
}

/// Vertical block `½ h^{ad}(∂_c h_bd + ∂_b h_cd - ∂_d h_bc)`.
fn lccoef_v(dm: &DMetricEval, nc: &NConnectionEval) -> Tensor<Jet> {
    let m = dm.m();
    let dh: Vec<Tensor<Jet>> = (0..m).map(|c| dm.h.map(|f| nc.vertical(f, c))).collect();
    let low = Tensor::from_fn(&[m, m, m], |ix| {
        let (d, b, c) = (ix[0], ix[1], ix[2]);
        (&dh[c][[b, d]] + &dh[b][[c, d]] - &dh[d][[b, c]]).scale(0.5)
    });
    raise(&dm.h_inv, &low)
}

/// `out[i][j][k] = inv[i][r] low[r][j][k]`.
fn raise(inv: &Tensor<Jet>, low: &Tensor<Jet>) -> Tensor<Jet> {
    let s = low.shape();
    let d = s[0];
    Tensor::from_fn(s, |ix| {
        let mut acc = &inv[[ix[0], 0]] * &low[[0, ix[1], ix[2]]];
        for r in 1..d {
            acc += &(&inv[[ix[0], r]] * &low[[r, ix[1], ix[2]]]);
        }
        acc
    })
}

/// `L^a_bk = ∂N^a_k/∂y^b`.
fn n_linear_block(nc: &NConnectionEval) -> Tensor<Jet> {
    let lin = nc.linearized();
    Tensor::from_fn(&[nc.m(), nc.m(), nc.n()], |ix| lin[[ix[0], ix[1], ix[2]]].clone())
}

/// Berwald-type d-connection `(L, ∂N/∂y, 0, C)`.
pub fn berwald_connection(dm: &DMetricEval, nc: &NConnectionEval) -> Result<DConnectionCoeffs> {
    check_shapes(dm, nc)?;
    let k = common_order(dm, nc) - 1;
    Ok(DConnectionCoeffs {
        variance: nc.variance(),
        lh: truncate(lccoef_h(dm, nc), k),
        lv: truncate(n_linear_block(nc), k),
        ch: zero_block(&[dm.n(), dm.n(), dm.m()], nc.nvars(), k),
        cv: truncate(lccoef_v(dm, nc), k),
    })
}

/// N-adapted Christoffel symbols `(L, 0, 0, C)`.
pub fn n_adapted_christoffel(dm: &DMetricEval, nc: &NConnectionEval) -> Result<DConnectionCoeffs> {
    check_shapes(dm, nc)?;
    let k = common_order(dm, nc) - 1;
    Ok(DConnectionCoeffs {
        variance: nc.variance(),
        lh: truncate(lccoef_h(dm, nc), k),
        lv: zero_block(&[dm.m(), dm.m(), dm.n()], nc.nvars(), k),
        ch: zero_block(&[dm.n(), dm.n(), dm.m()], nc.nvars(), k),
        cv: truncate(lccoef_v(dm, nc), k),
    })
}

/// Canonical metric d-connection.
pub fn canonical_connection(dm: &DMetricEval, nc: &NConnectionEval) -> Result<DConnectionCoeffs> {
    check_shapes(dm, nc)?;
    let (n, m) = (dm.n(), dm.m());
    let k = common_order(dm, nc) - 1;
    let lin = nc.linearized();
    let dh = frame_derivs(&dm.h, nc, n);
    let low = Tensor::from_fn(&[m, m, n], |ix| {
        let (c, b, i) = (ix[0], ix[1], ix[2]);
        let mut t = dh[i][[b, c]].clone();
        for d in 0..m {
            t -= &(&lin[[d, b, i]] * &dm.h[[d, c]]);
            t -= &(&lin[[d, c, i]] * &dm.h[[d, b]]);
        }
        t.scale(0.5)
    });
    let corr = raise(&dm.h_inv, &low);
    let lv = Tensor::from_fn(&[m, m, n], |ix| &lin[[ix[0], ix[1], ix[2]]] + &corr[ix]);

    let dgv: Vec<Tensor<Jet>> = (0..m).map(|c| dm.g.map(|f| nc.vertical(f, c))).collect();
    let low_c = Tensor::from_fn(&[n, n, m], |ix| dgv[ix[2]][[ix[1], ix[0]]].scale(0.5));
    let ch = raise(&dm.g_inv, &low_c);

    Ok(DConnectionCoeffs {
        variance: nc.variance(),
        lh: truncate(lccoef_h(dm, nc), k),
        lv: truncate(lv, k),
        ch: truncate(ch, k),
        cv: truncate(lccoef_v(dm, nc), k),
    })
}

/// Tangent-bundle connection `(L, L, C, C)` with horizontal and vertical indices identified.
pub fn kahler_connection(dm: &DMetricEval, nc: &NConnectionEval) -> Result<DConnectionCoeffs> {
    check_shapes(dm, nc)?;
    if dm.n() != dm.m() {
        return Err(Error::Dimension(format!("Kähler connection needs n = m, got {} and {}", dm.n(), dm.m())));
    }
    let k = common_order(dm, nc) - 1;
    let l = truncate(lccoef_h(dm, nc), k);
    let c = truncate(lccoef_v(dm, nc), k);
    Ok(DConnectionCoeffs { variance: nc.variance(), lh: l.clone(), lv: l, ch: c.clone(), cv: c })
}

pub fn build_connection(kind: ConnectionKind, dm: &DMetricEval, nc: &NConnectionEval) -> Result<DConnectionCoeffs> {
    match kind {
        ConnectionKind::Berwald => berwald_connection(dm, nc),
        ConnectionKind::Canonical => canonical_connection(dm, nc),
        ConnectionKind::Christoffel => n_adapted_christoffel(dm, nc),
        ConnectionKind::Kahler => kahler_connection(dm, nc),
    }
}

/// `N^a_{bi} = ∂N^a_i/∂y^b` (values), indexed `[a][b][i]`; `N^a_{bc}` vanishes.
pub fn linearized_n_connection(nc: &NConnectionEval) -> Tensor<f64> {
    nc.linearized().values()
}

fn truncate(t: Tensor<Jet>, k: usize) -> Tensor<Jet> {
    t.map(|j| j.truncate(k))
}

fn check_shapes(dm: &DMetricEval, nc: &NConnectionEval) -> Result<()> {
    if dm.n() != nc.n() || dm.m() != nc.m() {
        return Err(Error::ShapeMismatch(format!(
            "metric blocks ({}, {}) do not match N-connection ({}, {})",
            dm.n(),
            dm.m(),
            nc.n(),
            nc.m()
        )));
    }
    if common_order(dm, nc) < 1 {
        return Err(Error::OrderExceeded { requested: 1, order: 0 });
    }
    Ok(())
}

/// Position and kind of one index of a d-tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    HUpper,
    HLower,
    VUpper,
    VLower,
}

impl Slot {
    fn is_h(self) -> bool {
        matches!(self, Slot::HUpper | Slot::HLower)
    }
}

/// A d-tensor at a point: slots plus jet components (so it can be differentiated).
#[derive(Debug, Clone)]
pub struct DTensor {
    pub slots: Vec<Slot>,
    pub comps: Tensor<Jet>,
}

impl DTensor {
    pub fn new(slots: Vec<Slot>, comps: Tensor<Jet>, n: usize, m: usize) -> Result<DTensor> {
        if slots.len() > 4 {
            return Err(Error::UnsupportedValence(slots.len()));
        }
        let expect: Vec<usize> = slots.iter().map(|s| if s.is_h() { n } else { m }).collect();
        let shape: Vec<usize> = if slots.is_empty() { vec![1] } else { expect };
        if comps.shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch(format!("components {:?} vs valence {:?}", comps.shape(), shape)));
        }
        Ok(DTensor { slots, comps })
    }
}

/// Covariant derivative along frame direction `dir` (`< n`: `D_k`, otherwise `D_c`).
pub fn d_covariant_derivative(t: &DTensor, gamma: &DConnectionCoeffs, nc: &NConnectionEval, dir: usize) -> Result<Tensor<Jet>> {
    if t.slots.len() > 4 {
        return Err(Error::UnsupportedValence(t.slots.len()));
    }
    let n = gamma.n();
    let dims: Vec<usize> = t.comps.shape().to_vec();
    Ok(Tensor::from_fn(&dims, |ix| {
        let mut acc = nc.frame_derivative(&t.comps[ix], dir);
        for (s, slot) in t.slots.iter().enumerate() {
            let off = if slot.is_h() { 0 } else { n };
            let mut idx = ix.to_vec();
            for l in 0..dims[s] {
                idx[s] = l;
                let term = match slot {
                    Slot::HUpper | Slot::VUpper => gamma.gamma(off + ix[s], off + l, dir).map(|g| g * &t.comps[idx.as_slice()]),
                    Slot::HLower | Slot::VLower => gamma.gamma(off + l, off + ix[s], dir).map(|g| -(g * &t.comps[idx.as_slice()])),
                };
                if let Some(term) = term {
                    acc += &term;
                }
            }
        }
        acc
    }))
}

/// Largest `|D_k g_ij|`, `|D_c g_ij|`, `|D_k h_ab|`, `|D_c h_ab|` at the point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricityResidual {
    pub dh_g: f64,
    pub dv_g: f64,
    pub dh_h: f64,
    pub dv_h: f64,
}

impl MetricityResidual {
    pub fn max(&self) -> f64 {
        self.dh_g.max(self.dv_g).max(self.dh_h).max(self.dv_h)
    }

    /// The two blocks a Berwald-type connection is required to annihilate.
    pub fn hv_max(&self) -> f64 {
        self.dh_g.max(self.dv_h)
    }
}

pub fn metricity_residual(gamma: &DConnectionCoeffs, dm: &DMetricEval, nc: &NConnectionEval) -> Result<MetricityResidual> {
    let (n, m) = (dm.n(), dm.m());
    let g = DTensor::new(vec![Slot::HLower, Slot::HLower], dm.g.clone(), n, m)?;
    let h = DTensor::new(vec![Slot::VLower, Slot::VLower], dm.h.clone(), n, m)?;
    let worst = |t: &DTensor, dirs: std::ops::Range<usize>| -> Result<f64> {
        let mut w: f64 = 0.0;
        for d in dirs {
            w = w.max(d_covariant_derivative(t, gamma, nc, d)?.values().max_abs());
        }
        Ok(w)
    };
    Ok(MetricityResidual {
        dh_g: worst(&g, 0..n)?,
        dv_g: worst(&g, n..n + m)?,
        dh_h: worst(&h, 0..n)?,
        dv_h: worst(&h, n..n + m)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleChart, NConnectionField, PointU};
    use crate::expr::parse;

    fn flat(n: usize, m: usize, order: usize) -> (DMetricEval, NConnectionEval) {
        let d = n + m;
        let eye = |k: usize| Tensor::from_fn(&[k, k], |i| if i[0] == i[1] { 1.0 } else { 0.0 });
        let dm = DMetricEval::from_values(&eye(n), &eye(m), d, order).unwrap();
        let nc = NConnectionEval::from_values(&Tensor::filled(&[m, n], 0.0), Variance::Vector, d, order).unwrap();
        (dm, nc)
    }

    #[test]
    fn flat_connections_vanish() {
        let (dm, nc) = flat(2, 3, 2);
        for kind in [ConnectionKind::Berwald, ConnectionKind::Canonical, ConnectionKind::Christoffel] {
            let c = build_connection(kind, &dm, &nc).unwrap();
            assert_eq!(c.full_values().max_abs(), 0.0);
        }
    }

    #[test]
    fn covariant_derivative_of_scalar_and_kronecker() {
        let chart = BundleChart::new(2, 2, Variance::Vector).unwrap();
        let ctx = chart.ctx().clone();
        let pt = PointU::new(vec![0.3, 0.8], vec![1.1, -0.4]).unwrap();
        let ntext = [["x1 * y2", "y1^2"], ["sin(x2) * y1", "0.2 * y2"]];
        let nf = NConnectionField::new(chart.clone(), Tensor::from_fn(&[2, 2], |i| parse(ntext[i[0]][i[1]], &ctx).unwrap())).unwrap();
        let nc = nf.evaluate(&pt, 3).unwrap();
        let s = pt.seed(3);
        let g = Tensor::from_fn(&[2, 2], |i| if i[0] == i[1] { s[2].mul_jet(&s[2]).add_scalar(1.0 + i[0] as f64) } else { s[0].scale(0.1) });
        let h = Tensor::from_fn(&[2, 2], |i| if i[0] == i[1] { s[1].mul_jet(&s[3]).add_scalar(2.0) } else { s[2].scale(0.2) });
        let dm = DMetricEval::from_jets(g, h).unwrap();
        let gamma = canonical_connection(&dm, &nc).unwrap();

        let f = &s[0] * &s[2];
        let scalar = DTensor::new(vec![], Tensor::from_fn(&[1], |_| f.clone()), 2, 2).unwrap();
        for dir in 0..4 {
            let d = d_covariant_derivative(&scalar, &gamma, &nc, dir).unwrap();
            assert!((d[[0]].value() - nc.frame_derivative(&f, dir).value()).abs() < 1e-15);
        }

        let kron = Tensor::from_fn(&[2, 2], |i| Jet::constant(if i[0] == i[1] { 1.0 } else { 0.0 }, 4, 3));
        for slots in [vec![Slot::HUpper, Slot::HLower], vec![Slot::VUpper, Slot::VLower]] {
            let t = DTensor::new(slots, kron.clone(), 2, 2).unwrap();
            for dir in 0..4 {
                assert!(d_covariant_derivative(&t, &gamma, &nc, dir).unwrap().values().max_abs() < 1e-14);
            }
        }

        let res = metricity_residual(&gamma, &dm, &nc).unwrap();
        assert!(res.max() < 1e-12, "{res:?}");
    }

    #[test]
    fn valence_limit() {
        let comps = Tensor::filled(&[1, 1, 1, 1, 1], Jet::zero(2, 1));
        let slots = vec![Slot::HUpper; 5];
        assert!(matches!(DTensor::new(slots, comps, 1, 1), Err(Error::UnsupportedValence(5))));
    }
}
