//! Torsions, curvatures and their contractions.
//!
//! Block layouts (first index is always the upper one):
//!
//! | block | layout | meaning |
//! |-------|--------|---------|
//! | `rh` | `[i][h][j][k]` | `R_h^i_jk` |
//! | `rb` | `[a][b][j][k]` | `R_b^a_jk` |
//! | `pj` | `[i][j][k][c]` | `P_j^i_kc` |
//! | `pb` | `[a][b][k][c]` | `P_b^a_kc` |
//! | `sj` | `[i][j][b][c]` | `S_j^i_bc` |
//! | `sb` | `[a][b][c][d]` | `S_b^a_cd` |

use serde::{Deserialize, Serialize};

use crate::bundle::{DMetricEval, NConnectionEval};
use crate::connection::DConnectionCoeffs;
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::tensor::Tensor;

/// N-connection curvature `Ω^a_ij`, indexed `[a][i][j]`.
pub fn n_curvature(nc: &NConnectionEval) -> Tensor<f64> {
    nc.curvature().values()
}

#[derive(Debug, Clone)]
pub struct TorsionComponents {
    /// `T^i_jk = L^i_jk - L^i_kj`
    pub t_hh: Tensor<f64>,
    /// `T^i_ja = C^i_ja`
    pub t_hv: Tensor<f64>,
    /// `T^a_ij = Ω^a_ij`
    pub t_vhh: Tensor<f64>,
    /// `P^a_bi = ∂N^a_i/∂y^b - L^a_bi`, indexed `[a][b][i]`
    pub p_vvh: Tensor<f64>,
    /// `S^a_bc = C^a_bc - C^a_cb`
    pub s_vv: Tensor<f64>,
}

impl TorsionComponents {
    pub fn max_abs(&self) -> f64 {
        [&self.t_hh, &self.t_hv, &self.t_vhh, &self.p_vvh, &self.s_vv]
            .iter()
            .fold(0.0, |m, t| m.max(t.max_abs()))
    }

    pub fn named(&self) -> Vec<(&'static str, &Tensor<f64>)> {
        vec![("T_hh", &self.t_hh), ("T_hv", &self.t_hv), ("T_vhh", &self.t_vhh), ("P_vvh", &self.p_vvh), ("S_vv", &self.s_vv)]
    }
}

pub fn d_torsions(gamma: &DConnectionCoeffs, nc: &NConnectionEval) -> TorsionComponents {
    let (n, m) = (gamma.n(), gamma.m());
    let lh = gamma.lh.values();
    let lv = gamma.lv.values();
    let cv = gamma.cv.values();
    let lin = nc.linearized().values();
    TorsionComponents {
        t_hh: Tensor::from_fn(&[n, n, n], |i| lh[[i[0], i[1], i[2]]] - lh[[i[0], i[2], i[1]]]),
        t_hv: gamma.ch.values(),
        t_vhh: nc.curvature().values(),
        p_vvh: Tensor::from_fn(&[m, m, n], |i| lin[i] - lv[i]),
        s_vv: Tensor::from_fn(&[m, m, m], |i| cv[[i[0], i[1], i[2]]] - cv[[i[0], i[2], i[1]]]),
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureComponents {
    pub rh: Tensor<f64>,
    pub rb: Tensor<f64>,
    pub pj: Tensor<f64>,
    pub pb: Tensor<f64>,
    pub sj: Tensor<f64>,
    pub sb: Tensor<f64>,
}

impl CurvatureComponents {
    pub fn named(&self) -> Vec<(&'static str, &Tensor<f64>)> {
        vec![("R_h", &self.rh), ("R_b", &self.rb), ("P_j", &self.pj), ("P_b", &self.pb), ("S_j", &self.sj), ("S_b", &self.sb)]
    }

    pub fn max_abs(&self) -> f64 {
        self.named().iter().fold(0.0, |m, (_, t)| m.max(t.max_abs()))
    }
}

fn sum<I: Iterator<Item = f64>>(it: I) -> f64 {
    it.sum()
}

/// The six curvature blocks of a d-connection whose coefficients carry first partials.
pub fn d_curvatures(gamma: &DConnectionCoeffs, nc: &NConnectionEval) -> Result<CurvatureComponents> {
    if gamma.order() < 1 {
        return Err(Error::OrderExceeded { requested: 1, order: gamma.order() });
    }
    let (n, m) = (gamma.n(), gamma.m());
    let dl = |t: &Tensor<Jet>, dir: usize, ix: [usize; 3]| nc.frame_derivative(&t[ix], dir).value();
    let lh = gamma.lh.values();
    let lv = gamma.lv.values();
    let ch = gamma.ch.values();
    let cv = gamma.cv.values();
    let om = nc.curvature().values();
    let lin = nc.linearized().values();
    let pt = Tensor::from_fn(&[m, m, n], |i| lin[[i[0], i[1], i[2]]] - lv[[i[0], i[1], i[2]]]);

    let rh = Tensor::from_fn(&[n, n, n, n], |x| {
        let (i, h, j, k) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.lh, k, [i, h, j]) - dl(&gamma.lh, j, [i, h, k])
            + sum((0..n).map(|l| lh[[l, h, j]] * lh[[i, l, k]] - lh[[l, h, k]] * lh[[i, l, j]]))
            + sum((0..m).map(|a| ch[[i, h, a]] * om[[a, j, k]]))
    });
    let rb = Tensor::from_fn(&[m, m, n, n], |x| {
        let (a, b, j, k) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.lv, k, [a, b, j]) - dl(&gamma.lv, j, [a, b, k])
            + sum((0..m).map(|c| lv[[c, b, j]] * lv[[a, c, k]] - lv[[c, b, k]] * lv[[a, c, j]]))
            + sum((0..m).map(|c| cv[[a, b, c]] * om[[c, j, k]]))
    });
    let pj = Tensor::from_fn(&[n, n, n, m], |x| {
        let (i, j, k, a) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.lh, n + a, [i, j, k])
            - (dl(&gamma.ch, k, [i, j, a])
                + sum((0..n).map(|l| lh[[i, l, k]] * ch[[l, j, a]] - lh[[l, j, k]] * ch[[i, l, a]]))
                - sum((0..m).map(|c| lv[[c, a, k]] * ch[[i, j, c]])))
            + sum((0..m).map(|b| ch[[i, j, b]] * pt[[b, a, k]]))
    });
    let pb = Tensor::from_fn(&[m, m, n, m], |x| {
        let (c, b, k, a) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.lv, n + a, [c, b, k])
            - (dl(&gamma.cv, k, [c, b, a])
                + sum((0..m).map(|d| lv[[c, d, k]] * cv[[d, b, a]] - lv[[d, b, k]] * cv[[c, d, a]]))
                - sum((0..m).map(|d| lv[[d, a, k]] * cv[[c, b, d]])))
            + sum((0..m).map(|d| cv[[c, b, d]] * pt[[d, a, k]]))
    });
    let sj = Tensor::from_fn(&[n, n, m, m], |x| {
        let (i, j, b, c) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.ch, n + c, [i, j, b]) - dl(&gamma.ch, n + b, [i, j, c])
            + sum((0..n).map(|h| ch[[h, j, b]] * ch[[i, h, c]] - ch[[h, j, c]] * ch[[i, h, b]]))
    });
    let sb = Tensor::from_fn(&[m, m, m, m], |x| {
        let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
        dl(&gamma.cv, n + d, [a, b, c]) - dl(&gamma.cv, n + c, [a, b, d])
            + sum((0..m).map(|e| cv[[e, b, c]] * cv[[a, e, d]] - cv[[e, b, d]] * cv[[a, e, c]]))
    });
    Ok(CurvatureComponents {
        rh: antisymmetrize_last(rh),
        rb: antisymmetrize_last(rb),
        pj,
        pb,
        sj: antisymmetrize_last(sj),
        sb: antisymmetrize_last(sb),
    })
}

/// Copy the upper triangle of the last index pair onto the lower one with a sign flip.
fn antisymmetrize_last(mut t: Tensor<f64>) -> Tensor<f64> {
    let s = t.shape().to_vec();
    for a in 0..s[0] {
        for b in 0..s[1] {
            for j in 0..s[2] {
                t[[a, b, j, j]] = 0.0;
                for k in j + 1..s[3] {
                    t[[a, b, k, j]] = -t[[a, b, j, k]];
                }
            }
        }
    }
    t
}

/// `d^γ · R(e_β1, e_β2) e_α` on the full adapted frame, indexed `[γ][α][β1][β2]`.
///
/// Independent of the block formulas; used to cross-check them.
pub fn frame_curvature(gamma: &DConnectionCoeffs, nc: &NConnectionEval) -> Tensor<f64> {
    let (n, m) = (gamma.n(), gamma.m());
    let d = n + m;
    let w = crate::bundle::anholonomy_full(nc).values();
    let g = gamma.full_values();
    let dg = |t: usize, s: usize, dir: usize, along: usize| -> f64 {
        gamma.gamma(t, s, dir).map_or(0.0, |j| nc.frame_derivative(j, along).value())
    };
    Tensor::from_fn(&[d, d, d, d], |x| {
        let (c, a, b1, b2) = (x[0], x[1], x[2], x[3]);
        let mut v = dg(c, a, b2, b1) - dg(c, a, b1, b2);
        for mu in 0..d {
            v += g[[mu, a, b2]] * g[[c, mu, b1]] - g[[mu, a, b1]] * g[[c, mu, b2]];
            v -= w[[mu, b1, b2]] * g[[c, a, mu]];
        }
        v
    })
}

/// Sign convention for the mixed Ricci blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RicciConvention {
    /// `R_ia = -P_i^k_ka`, `R_ai = P_a^b_ib`.
    #[default]
    Default,
    /// Both mixed blocks as plain traces `P_i^k_ka`, `P_a^b_ib`.
    PlainTrace,
}

#[derive(Debug, Clone)]
pub struct RicciBlocks {
    /// `R_ij = R_i^k_jk`
    pub hh: Tensor<f64>,
    /// `R_ia`
    pub hv: Tensor<f64>,
    /// `R_ai`
    pub vh: Tensor<f64>,
    /// `S_ab = S_a^c_bc`
    pub vv: Tensor<f64>,
}

impl RicciBlocks {
    pub fn max_abs(&self) -> f64 {
        self.hh.max_abs().max(self.hv.max_abs()).max(self.vh.max_abs()).max(self.vv.max_abs())
    }
}

pub fn ricci_and_scalar(r: &CurvatureComponents, dm: &DMetricEval, conv: RicciConvention) -> (RicciBlocks, f64) {
    let (n, m) = (dm.n(), dm.m());
    let sign = match conv {
        RicciConvention::Default => -1.0,
        RicciConvention::PlainTrace => 1.0,
    };
    let hh = Tensor::from_fn(&[n, n], |x| sum((0..n).map(|k| r.rh[[k, x[0], x[1], k]])));
    let vv = Tensor::from_fn(&[m, m], |x| sum((0..m).map(|c| r.sb[[c, x[0], x[1], c]])));
    let hv = Tensor::from_fn(&[n, m], |x| sign * sum((0..n).map(|k| r.pj[[k, x[0], k, x[1]]])));
    let vh = Tensor::from_fn(&[m, n], |x| sum((0..m).map(|b| r.pb[[b, x[0], x[1], b]])));
    let gi = dm.g_inv.values();
    let hi = dm.h_inv.values();
    let scalar = sum((0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| gi[[i, j]] * hh[[i, j]]))
        + sum((0..m).flat_map(|a| (0..m).map(move |b| (a, b))).map(|(a, b)| hi[[a, b]] * vv[[a, b]]));
    (RicciBlocks { hh, hv, vh, vv }, scalar)
}

pub fn einstein_tensor(ric: &RicciBlocks, scalar: f64, dm: &DMetricEval) -> RicciBlocks {
    let g = dm.g.values();
    let h = dm.h.values();
    RicciBlocks {
        hh: Tensor::from_fn(ric.hh.shape(), |x| ric.hh[x] - 0.5 * g[x] * scalar),
        hv: ric.hv.clone(),
        vh: ric.vh.clone(),
        vv: Tensor::from_fn(ric.vv.shape(), |x| ric.vv[x] - 0.5 * h[x] * scalar),
    }
}

/// `g^{ij} G_ij + h^{ab} G_ab`.
pub fn einstein_trace(e: &RicciBlocks, dm: &DMetricEval) -> f64 {
    let gi = dm.g_inv.values();
    let hi = dm.h_inv.values();
    let t1: f64 = gi.indexed().map(|(ix, v)| v * e.hh[ix.as_slice()]).sum();
    let t2: f64 = hi.indexed().map(|(ix, v)| v * e.vv[ix.as_slice()]).sum();
    t1 + t2
}

/// Largest violation of antisymmetry in the last index pair of the R and S blocks.
pub fn antisymmetry_residual(r: &CurvatureComponents) -> f64 {
    let mut worst: f64 = 0.0;
    for t in [&r.rh, &r.rb, &r.sj, &r.sb] {
        for (ix, v) in t.indexed() {
            let sw = [ix[0], ix[1], ix[3], ix[2]];
            worst = worst.max((v + t[sw]).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{BundleChart, NConnectionField, PointU};
    use crate::connection::{build_connection, ConnectionKind};
    use crate::expr::{parse, Variance};

    fn generic_space() -> (DMetricEval, NConnectionEval) {
        let chart = BundleChart::new(2, 2, Variance::Vector).unwrap();
        let ctx = chart.ctx().clone();
        let pt = PointU::new(vec![0.3, 0.8], vec![1.1, -0.4]).unwrap();
        let ntext = [["x1 * y2 + x2^2 * y1", "y1^2 * x1"], ["sin(x2) * y1", "0.2 * y2 * x1"]];
        let nf = NConnectionField::new(chart.clone(), Tensor::from_fn(&[2, 2], |i| parse(ntext[i[0]][i[1]], &ctx).unwrap())).unwrap();
        let nc = nf.evaluate(&pt, 2).unwrap();
        let s = pt.seed(2);
        let g = Tensor::from_fn(&[2, 2], |i| {
            if i[0] == i[1] {
                (&s[2] * &s[2]).add_scalar(1.0 + i[0] as f64) + &s[1] * &s[0]
            } else {
                (&s[0] * &s[3]).scale(0.1)
            }
        });
        let h = Tensor::from_fn(&[2, 2], |i| {
            if i[0] == i[1] {
                (&s[1] * &s[3]).add_scalar(2.0) + &s[0] * &s[0]
            } else {
                (&s[2] * &s[1]).scale(0.2)
            }
        });
        (DMetricEval::from_jets(g, h).unwrap(), nc)
    }

    #[test]
    fn block_formulas_match_frame_formula() {
        let (dm, nc) = generic_space();
        for kind in [ConnectionKind::Berwald, ConnectionKind::Canonical, ConnectionKind::Christoffel] {
            let gamma = build_connection(kind, &dm, &nc).unwrap();
            let r = d_curvatures(&gamma, &nc).unwrap();
            let f = frame_curvature(&gamma, &nc);
            let n = 2;
            let mut worst: f64 = 0.0;
            for (ix, v) in r.rh.indexed() {
                worst = worst.max((v - f[[ix[0], ix[1], ix[3], ix[2]]]).abs());
            }
            for (ix, v) in r.rb.indexed() {
                worst = worst.max((v - f[[n + ix[0], n + ix[1], ix[3], ix[2]]]).abs());
            }
            for (ix, v) in r.pj.indexed() {
                worst = worst.max((v - f[[ix[0], ix[1], n + ix[3], ix[2]]]).abs());
            }
            for (ix, v) in r.pb.indexed() {
                worst = worst.max((v - f[[n + ix[0], n + ix[1], n + ix[3], ix[2]]]).abs());
            }
            for (ix, v) in r.sj.indexed() {
                worst = worst.max((v - f[[ix[0], ix[1], n + ix[3], n + ix[2]]]).abs());
            }
            for (ix, v) in r.sb.indexed() {
                worst = worst.max((v - f[[n + ix[0], n + ix[1], n + ix[3], n + ix[2]]]).abs());
            }
            assert!(worst < 1e-11, "{kind:?}: {worst}");
            assert!(antisymmetry_residual(&r) == 0.0);
        }
    }

    #[test]
    fn einstein_trace_identity() {
        let (dm, nc) = generic_space();
        let gamma = build_connection(ConnectionKind::Canonical, &dm, &nc).unwrap();
        let r = d_curvatures(&gamma, &nc).unwrap();
        let (ric, s) = ricci_and_scalar(&r, &dm, RicciConvention::Default);
        let e = einstein_tensor(&ric, s, &dm);
        assert!((einstein_trace(&e, &dm) - (1.0 - 2.0) * s).abs() < 1e-10 * (1.0 + s.abs()));
    }

    #[test]
    fn torsion_identities() {
        let (dm, nc) = generic_space();
        let chr = build_connection(ConnectionKind::Christoffel, &dm, &nc).unwrap();
        let t = d_torsions(&chr, &nc);
        assert!(t.t_hh.max_abs() < 1e-14 && t.s_vv.max_abs() < 1e-14);
        let ber = build_connection(ConnectionKind::Berwald, &dm, &nc).unwrap();
        assert_eq!(d_torsions(&ber, &nc).p_vvh.max_abs(), 0.0);
    }
}
