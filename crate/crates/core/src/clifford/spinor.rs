//! d-spinor calculus over block-diagonal sigma objects.
//!
//! Spinor index conventions follow [`super::epsilon`]: a matrix entry
//! `[k][i]` is `(·)_k^{·i}`, `ε^{ij}` raises the first spinor index of a
//! mixed object and `ε_km` lowers. The d-spinor metric is block diagonal in
//! the horizontal and vertical spin spaces.
//!
//! The spinor connection and curvature assume positive-definite frame
//! metrics, so both sigma blocks must come from `(n, 0)` and `(m, 0)`.

use num_complex::Complex64;
use serde::Serialize;

use super::epsilon::{epsilon_objects, EpsilonObjects, SymmetryClass};
use super::rep::{max_abs, CMatrix, DSigmaRep, SigmaRep};
use crate::bundle::{anholonomy_full, DMetricEval, NConnectionEval};
use crate::connection::DConnectionCoeffs;
use crate::curvature::{d_curvatures, ricci_and_scalar, RicciConvention};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::linalg::invert_jets;
use crate::tensor::Tensor;

fn cz() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn cr(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

/// Block-diagonal d-spinor metric.
#[derive(Debug, Clone)]
pub struct DEpsilon {
    pub lower: CMatrix,
    pub upper: CMatrix,
    /// `+1` for a symmetric block metric, `-1` for an antisymmetric one.
    pub h_sign: f64,
    pub v_sign: f64,
    pub h_objects: EpsilonObjects,
    pub v_objects: EpsilonObjects,
}

fn symmetry_sign(e: &EpsilonObjects) -> Result<f64> {
    match e.primary().class {
        SymmetryClass::Symmetric => Ok(1.0),
        SymmetryClass::Antisymmetric => Ok(-1.0),
        other => Err(Error::Domain(format!("spinor metric for n = {} has no definite symmetry ({other:?})", e.n))),
    }
}

fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut m = CMatrix::zeros(na + nb, na + nb);
    m.view_mut((0, 0), (na, na)).copy_from(a);
    m.view_mut((na, na), (nb, nb)).copy_from(b);
    m
}

impl DEpsilon {
    pub fn new(rep: &DSigmaRep) -> Result<DEpsilon> {
        let h_objects = epsilon_objects(&rep.h)?;
        let v_objects = epsilon_objects(&rep.v)?;
        let lower = block_diag(&h_objects.primary().lower, &v_objects.primary().lower);
        let upper = block_diag(&h_objects.primary().upper, &v_objects.primary().upper);
        Ok(DEpsilon { lower, upper, h_sign: symmetry_sign(&h_objects)?, v_sign: symmetry_sign(&v_objects)?, h_objects, v_objects })
    }

    fn sign_for(&self, rep: &DSigmaRep, alpha: usize) -> f64 {
        if alpha < rep.n() {
            self.h_sign
        } else {
            self.v_sign
        }
    }
}

/// Pair of spinor indices (both raised) for one tensor index:
/// `ω^{βγ} = (σ^α)^{βγ} ω_α` for a lower index, `(σ_α)^{βγ} ω^α` for an upper one.
pub fn vector_to_spinor(omega: &[Complex64], lower_index: bool, rep: &DSigmaRep, eps: &DEpsilon) -> Result<CMatrix> {
    let d = rep.n() + rep.m();
    if omega.len() != d {
        return Err(Error::ShapeMismatch(format!("tensor index of length {} for a frame of dimension {d}", omega.len())));
    }
    let mut mixed = CMatrix::zeros(rep.dim(), rep.dim());
    for (a, &w) in omega.iter().enumerate() {
        if w != cz() {
            let s = if lower_index { rep.sigma_upper(a) } else { rep.sigma(a).clone() };
            mixed += s * w;
        }
    }
    Ok(&eps.upper * mixed)
}

/// Inverse of [`vector_to_spinor`] through trace orthogonality
/// `tr(σ_α σ^β) = -κ N_block δ_α^β`.
pub fn spinor_to_vector(pair: &CMatrix, lower_index: bool, rep: &DSigmaRep, eps: &DEpsilon) -> Result<Vec<Complex64>> {
    if pair.nrows() != rep.dim() || pair.ncols() != rep.dim() {
        return Err(Error::ShapeMismatch(format!("spinor pair of shape {}x{} for spin dimension {}", pair.nrows(), pair.ncols(), rep.dim())));
    }
    let inv = eps.upper.clone().try_inverse().ok_or_else(|| Error::Domain("singular spinor metric".into()))?;
    let mixed = inv * pair;
    let d = rep.n() + rep.m();
    Ok((0..d)
        .map(|a| {
            let s = if lower_index { rep.sigma(a).clone() } else { rep.sigma_upper(a) };
            -(s * &mixed).trace() / cr(rep.kappa() * rep.block_dim(a) as f64)
        })
        .collect())
}

fn move_axis_last(shape: &[usize], slot: usize) -> Vec<usize> {
    let mut s: Vec<usize> = shape.to_vec();
    let v = s.remove(slot);
    s.push(v);
    s
}

/// Replaces tensor slot `slot` by two spinor slots at positions `slot, slot + 1`.
pub fn tensor_to_spinor(t: &Tensor<Complex64>, slot: usize, lower_index: bool, rep: &DSigmaRep, eps: &DEpsilon) -> Result<Tensor<Complex64>> {
    let shape = t.shape();
    let d = rep.n() + rep.m();
    if slot >= shape.len() || shape[slot] != d {
        return Err(Error::ShapeMismatch(format!("slot {slot} of shape {shape:?} is not a frame index of length {d}")));
    }
    let nd = rep.dim();
    let mut out_shape = shape[..slot].to_vec();
    out_shape.extend([nd, nd]);
    out_shape.extend(&shape[slot + 1..]);
    let rest = move_axis_last(shape, slot);
    let mut cache = std::collections::HashMap::new();
    for (ix, _) in Tensor::from_fn(&rest[..rest.len() - 1], |_| ()).indexed() {
        let fiber: Vec<Complex64> = (0..d)
            .map(|a| {
                let mut full = ix.clone();
                full.insert(slot, a);
                t[full.as_slice()]
            })
            .collect();
        cache.insert(ix, vector_to_spinor(&fiber, lower_index, rep, eps)?);
    }
    Ok(Tensor::from_fn(&out_shape, |ix| {
        let mut key = ix[..slot].to_vec();
        key.extend(&ix[slot + 2..]);
        cache[&key][(ix[slot], ix[slot + 1])]
    }))
}

/// Inverse of [`tensor_to_spinor`]: merges spinor slots `slot, slot + 1`.
pub fn spinor_to_tensor(t: &Tensor<Complex64>, slot: usize, lower_index: bool, rep: &DSigmaRep, eps: &DEpsilon) -> Result<Tensor<Complex64>> {
    let shape = t.shape();
    let nd = rep.dim();
    if slot + 1 >= shape.len() || shape[slot] != nd || shape[slot + 1] != nd {
        return Err(Error::ShapeMismatch(format!("slots {slot}, {} of shape {shape:?} are not a spinor pair of dimension {nd}", slot + 1)));
    }
    let d = rep.n() + rep.m();
    let mut out_shape = shape[..slot].to_vec();
    out_shape.push(d);
    out_shape.extend(&shape[slot + 2..]);
    let mut rest = shape[..slot].to_vec();
    rest.extend(&shape[slot + 2..]);
    let mut cache = std::collections::HashMap::new();
    for (ix, _) in Tensor::from_fn(&rest, |_| ()).indexed() {
        let pair = CMatrix::from_fn(nd, nd, |r, s| {
            let mut full = ix[..slot].to_vec();
            full.extend([r, s]);
            full.extend(&ix[slot..]);
            t[full.as_slice()]
        });
        cache.insert(ix, spinor_to_vector(&pair, lower_index, rep, eps)?);
    }
    Ok(Tensor::from_fn(&out_shape, |ix| {
        let mut key = ix[..slot].to_vec();
        key.extend(&ix[slot + 1..]);
        cache[&key][ix[slot]]
    }))
}

/// Bilinears `ξ^α ξ^β (σ^[i…j])_{αβ}` grouped by the number `q` of indices.
#[derive(Debug, Clone, Serialize)]
pub struct FundamentalReport {
    pub n: usize,
    /// `(q, max |bilinear| / |ξ|²)` for every `q`.
    pub bilinears: Vec<(usize, f64)>,
    /// `q` values allowed to be nonzero.
    pub allowed: Vec<usize>,
    pub fundamental: bool,
}

/// `q` values with `n - 2q ≡ 0, 1, 7 (mod 8)` inside the window
/// `q = (n ± 1)/2` (odd `n`) or `q = n/2` (even `n`).
pub fn allowed_q(n: usize) -> Vec<usize> {
    let window: Vec<usize> = if n % 2 == 1 { vec![(n - 1) / 2, (n + 1) / 2] } else { vec![n / 2] };
    window.into_iter().filter(|&q| matches!((n as i64 - 2 * q as i64).rem_euclid(8), 0 | 1 | 7)).collect()
}

/// Classifies `ξ` as fundamental. For even `n` the spinor is first projected
/// onto the positive-chirality subspace.
pub fn fundamental_spinor_test(xi: &[Complex64], rep: &SigmaRep, eps: &EpsilonObjects) -> Result<FundamentalReport> {
    let nd = rep.dim();
    if xi.len() != nd {
        return Err(Error::ShapeMismatch(format!("spinor of length {} for spin dimension {nd}", xi.len())));
    }
    let mut v: Vec<Complex64> = xi.to_vec();
    if let Some(ch) = rep.chirality() {
        for (c, s) in v.iter_mut().zip(ch) {
            if s < 0.0 {
                *c = cz();
            }
        }
    }
    let norm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let col = CMatrix::from_column_slice(nd, 1, &v);
    let n = rep.n();
    let lower = &eps.primary().lower;
    let mut bilinears = vec![(0usize, 0.0f64); n + 1];
    for (q, b) in bilinears.iter_mut().enumerate() {
        b.0 = q;
    }
    for mask in 0..rep.signature().blade_count() {
        let q = mask.count_ones() as usize;
        let form = rep.sigma_product_upper(mask) * lower;
        let val = (col.transpose() * form * &col)[(0, 0)].norm() / norm2.max(f64::MIN_POSITIVE);
        bilinears[q].1 = bilinears[q].1.max(val);
    }
    let allowed = allowed_q(n);
    let fundamental = bilinears.iter().all(|&(q, b)| allowed.contains(&q) || b <= 1e-10);
    Ok(FundamentalReport { n, bilinears, allowed, fundamental })
}

/// `K_αβ = (σ_α)^{ab} (σ_β)^{dc} ε_ac ε_bd` for frame-transformed sigma
/// objects `σ_α = l_α^{α̂} σ_α̂`, symmetrized in `α, β`.
fn epsilon_contraction(rep: &DSigmaRep, eps: &DEpsilon, frame: &Tensor<f64>) -> Tensor<f64> {
    let d = rep.n() + rep.m();
    let nd = rep.dim();
    let sig: Vec<CMatrix> = (0..d)
        .map(|a| {
            let mut s = CMatrix::zeros(nd, nd);
            for b in 0..d {
                if frame[[a, b]] != 0.0 {
                    s += rep.sigma(b) * cr(frame[[a, b]]);
                }
            }
            &eps.upper * s
        })
        .collect();
    let raw = |a: usize, b: usize| -> f64 {
        let x = &sig[a];
        let y = &sig[b];
        let mut acc = cz();
        for p in 0..nd {
            for r in 0..nd {
                for s in 0..nd {
                    if eps.lower[(p, s)] == cz() {
                        continue;
                    }
                    for t in 0..nd {
                        acc += x[(p, r)] * y[(t, s)] * eps.lower[(p, s)] * eps.lower[(r, t)];
                    }
                }
            }
        }
        acc.re
    };
    Tensor::from_fn(&[d, d], |ix| 0.5 * (raw(ix[0], ix[1]) + raw(ix[1], ix[0])))
}

/// Metric rebuilt from sigma and epsilon objects:
/// `g_αβ = -K_(αβ) / (s κ N_block)` where `s` is the symmetry sign of the
/// block spinor metric. `frame[α][α̂] = l_α^{α̂}`.
pub fn reconstruct_metric(rep: &DSigmaRep, eps: &DEpsilon, frame: &Tensor<f64>) -> Tensor<f64> {
    let k = epsilon_contraction(rep, eps, frame);
    let n = rep.n();
    Tensor::from_fn(k.shape(), |ix| {
        let (a, b) = (ix[0], ix[1]);
        if (a < n) != (b < n) {
            return k[ix];
        }
        -k[ix] / (eps.sign_for(rep, a) * rep.kappa() * rep.block_dim(a) as f64)
    })
}

/// The same contraction with the prefactor `-1/(N(n) + N(m))`.
pub fn reconstruct_metric_literal(rep: &DSigmaRep, eps: &DEpsilon, frame: &Tensor<f64>) -> Tensor<f64> {
    let k = epsilon_contraction(rep, eps, frame);
    let total = rep.dim() as f64;
    k.map(|v| -v / total)
}

/// Orthonormal frame of a positive-definite d-metric as jets:
/// `e_A = l^α_A δ_α` and the coframe `θ^A_α`, both block diagonal.
#[derive(Debug, Clone)]
pub struct OrthonormalFrame {
    /// `l[α][A] = l^α_A`
    pub l: Tensor<Jet>,
    /// `theta[A][α] = θ^A_α`
    pub theta: Tensor<Jet>,
}

fn cholesky_jets(g: &Tensor<Jet>) -> Result<Tensor<Jet>> {
    let n = g.shape()[0];
    let proto = g[[0, 0]].clone();
    let mut l = Tensor::filled(&[n, n], Jet::zero(proto.nvars(), proto.order()));
    for j in 0..n {
        let mut d = g[[j, j]].clone();
        for k in 0..j {
            d -= &(&l[[j, k]] * &l[[j, k]]);
        }
        if !(d.value() > 0.0) {
            return Err(Error::NonPositiveDefinite(format!("pivot {j} is {}", d.value())));
        }
        let djj = d.sqrt()?;
        let r = djj.recip()?;
        l[[j, j]] = djj;
        for i in j + 1..n {
            let mut s = g[[i, j]].clone();
            for k in 0..j {
                s -= &(&l[[i, k]] * &l[[j, k]]);
            }
            l[[i, j]] = &s * &r;
        }
    }
    Ok(l)
}

impl OrthonormalFrame {
    pub fn from_metric(dm: &DMetricEval) -> Result<OrthonormalFrame> {
        let (n, m) = (dm.n(), dm.m());
        let d = n + m;
        let proto = dm.g[[0, 0]].clone();
        let zero = Jet::zero(proto.nvars(), proto.order());
        let mut l = Tensor::filled(&[d, d], zero.clone());
        let mut theta = Tensor::filled(&[d, d], zero);
        for (block, off) in [(&dm.g, 0usize), (&dm.h, n)] {
            let ch = cholesky_jets(block)?;
            let inv = invert_jets(&ch, "frame")?;
            let k = ch.shape()[0];
            for a in 0..k {
                for b in 0..k {
                    theta[[off + a, off + b]] = ch[[b, a]].clone();
                    l[[off + a, off + b]] = inv[[b, a]].clone();
                }
            }
        }
        Ok(OrthonormalFrame { l, theta })
    }

    /// `max |l^α_A l^β_B G_αβ - δ_AB|`.
    pub fn orthonormality_residual(&self, dm: &DMetricEval) -> f64 {
        let n = dm.n();
        let d = self.l.shape()[0];
        let g = |a: usize, b: usize| -> f64 {
            match (a < n, b < n) {
                (true, true) => dm.g[[a, b]].value(),
                (false, false) => dm.h[[a - n, b - n]].value(),
                _ => 0.0,
            }
        };
        let mut worst: f64 = 0.0;
        for a in 0..d {
            for b in 0..d {
                let mut s = 0.0;
                for x in 0..d {
                    for y in 0..d {
                        s += self.l[[x, a]].value() * self.l[[y, b]].value() * g(x, y);
                    }
                }
                worst = worst.max((s - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        worst
    }
}

/// Frame components `ω^A_{Bc} = θ^A_α (δ_c l^α_B + Γ^α_{βc} l^β_B)` indexed
/// `[A][B][c]` with `c` an adapted-frame direction.
pub fn frame_connection(gamma: &DConnectionCoeffs, nc: &NConnectionEval, frame: &OrthonormalFrame) -> Tensor<Jet> {
    let d = gamma.n() + gamma.m();
    Tensor::from_fn(&[d, d, d], |ix| {
        let (a, b, c) = (ix[0], ix[1], ix[2]);
        let mut acc: Option<Jet> = None;
        let mut push = |j: Jet| {
            acc = Some(match acc.take() {
                None => j,
                Some(x) => x + j,
            })
        };
        for al in 0..d {
            let th = &frame.theta[[a, al]];
            if th.value() == 0.0 && th.coeffs().iter().all(|&v| v == 0.0) {
                continue;
            }
            push(th * &nc.frame_derivative(&frame.l[[al, b]], c));
            for be in 0..d {
                if let Some(gm) = gamma.gamma(al, be, c) {
                    push(&(th * gm) * &frame.l[[be, b]]);
                }
            }
        }
        acc.unwrap_or_else(|| Jet::zero(frame.l.data()[0].nvars(), 0))
    })
}

/// Spinor connection matrices `γ_c`, one per adapted-frame direction.
#[derive(Debug, Clone)]
pub struct SpinorConnection {
    pub gamma: Vec<CMatrix>,
    /// Largest symmetric part `|ω_{ABc} + ω_{BAc}|`, which the spinor
    /// connection cannot carry (zero for metric d-connections).
    pub non_metric_part: f64,
}

fn require_euclidean(rep: &DSigmaRep) -> Result<()> {
    let d = rep.n() + rep.m();
    if (0..d).any(|a| rep.frame_metric(a) != 1.0) {
        return Err(Error::NonOrthonormalFrame(f64::NAN));
    }
    Ok(())
}

/// `γ_c = -(1/4κ) ω^A_{Bc} σ_A σ^B` from frame components `[A][B][c]`.
pub fn spinor_connection(omega: &Tensor<f64>, rep: &DSigmaRep) -> Result<SpinorConnection> {
    require_euclidean(rep)?;
    let d = rep.n() + rep.m();
    if omega.shape() != [d, d, d] {
        return Err(Error::ShapeMismatch(format!("frame connection of shape {:?} for frame dimension {d}", omega.shape())));
    }
    let coef = -1.0 / (4.0 * rep.kappa());
    let mut non_metric: f64 = 0.0;
    let gamma = (0..d)
        .map(|c| {
            let mut g = CMatrix::zeros(rep.dim(), rep.dim());
            for a in 0..d {
                for b in 0..d {
                    non_metric = non_metric.max((omega[[a, b, c]] + omega[[b, a, c]]).abs());
                    let w = omega[[a, b, c]];
                    if w != 0.0 && a != b {
                        g += rep.sigma(a) * rep.sigma_upper(b) * cr(coef * w);
                    }
                }
            }
            g
        })
        .collect();
    Ok(SpinorConnection { gamma, non_metric_part: non_metric })
}

/// Residual of the Leibniz transfer on a vector field given at a point by
/// its frame components `v[B]` and their derivatives `dv[B][c]`:
/// `∇_c(v^B σ_B) - (∇_c v)^A σ_A`.
pub fn leibniz_residual(omega: &Tensor<f64>, conn: &SpinorConnection, rep: &DSigmaRep, v: &[f64], dv: &Tensor<f64>) -> f64 {
    let d = rep.n() + rep.m();
    let conv = |w: &[f64]| -> CMatrix {
        let mut m = CMatrix::zeros(rep.dim(), rep.dim());
        for (a, &x) in w.iter().enumerate() {
            m += rep.sigma(a) * cr(x);
        }
        m
    };
    let vm = conv(v);
    let mut worst: f64 = 0.0;
    for c in 0..d {
        let dcv: Vec<f64> = (0..d).map(|b| dv[[b, c]]).collect();
        let spin = conv(&dcv) + &conn.gamma[c] * &vm - &vm * &conn.gamma[c];
        let tens: Vec<f64> = (0..d).map(|a| dv[[a, c]] + (0..d).map(|b| omega[[a, b, c]] * v[b]).sum::<f64>()).collect();
        worst = worst.max(max_abs(&(spin - conv(&tens))));
    }
    worst
}

/// Spinor curvature and its contractions at one point.
#[derive(Debug, Clone)]
pub struct SpinorCurvature {
    /// `X_cd = δ_c γ_d - δ_d γ_c + [γ_c, γ_d]`.
    pub x: Vec<Vec<CMatrix>>,
    /// `X_cd - w^e_cd γ_e`, the curvature operator on d-spinors.
    pub r: Vec<Vec<CMatrix>>,
    /// Frame curvature recovered from `r`, `[γ][α][c][d]` on the adapted frame.
    pub tensor: Tensor<f64>,
    /// `X` with all four spinor indices lowered, `[γ][δ][α][β]`, after the
    /// frame pair is converted by `(σ^{CD})_{αβ}`.
    pub x_spinor: Tensor<Complex64>,
    /// `Ψ_{αβγδ} = X_{(α|β|γδ)}`.
    pub psi: Tensor<Complex64>,
    /// Orthonormal-frame Ricci blocks `[A][B]` from `tensor`.
    pub ricci_frame: Tensor<f64>,
    /// Ricci as spinor pairs `[γ1][γ2][α1][α2]`.
    pub ricci_spinor: Tensor<Complex64>,
    /// Scalar curvature from the contraction of `ricci_spinor`.
    pub scalar: f64,
    pub einstein_spinor: Tensor<Complex64>,
    pub phi_spinor: Tensor<Complex64>,
    /// `|ω_{ABc} + ω_{BAc}|`, zero for metric connections.
    pub non_metric_part: f64,
}

fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Curvature of the spinor connection built from a d-connection.
///
/// `γ_c` is formed from the orthonormal-frame connection over the adapted
/// directions, differentiated along the adapted frame, and its curvature
/// operator is mapped back to tensor components by trace orthogonality. The
/// Ricci contraction uses `R_ij = R_i^k_jk` on the horizontal block and
/// `S_ab = S_a^c_bc` on the vertical one.
pub fn spinor_curvature(gamma: &DConnectionCoeffs, dm: &DMetricEval, nc: &NConnectionEval, rep: &DSigmaRep) -> Result<SpinorCurvature> {
    require_euclidean(rep)?;
    let (n, m) = (dm.n(), dm.m());
    let d = n + m;
    if rep.n() != n || rep.m() != m {
        return Err(Error::ShapeMismatch(format!("sigma objects for {}+{} on a {n}+{m} space", rep.n(), rep.m())));
    }
    let frame = OrthonormalFrame::from_metric(dm)?;
    let ortho = frame.orthonormality_residual(dm);
    if ortho > 1e-10 {
        return Err(Error::NonOrthonormalFrame(ortho));
    }
    let omega_j = frame_connection(gamma, nc, &frame);
    let omega = omega_j.values();
    let conn = spinor_connection(&omega, rep)?;
    let coef = -1.0 / (4.0 * rep.kappa());
    let pairs: Vec<Vec<CMatrix>> = (0..d).map(|a| (0..d).map(|b| rep.sigma(a) * rep.sigma_upper(b)).collect()).collect();
    let dgamma = |c: usize, along: usize| -> CMatrix {
        let mut g = CMatrix::zeros(rep.dim(), rep.dim());
        for a in 0..d {
            for b in 0..d {
                if a != b {
                    let dw = nc.frame_derivative(&omega_j[[a, b, c]], along).value();
                    if dw != 0.0 {
                        g += &pairs[a][b] * cr(coef * dw);
                    }
                }
            }
        }
        g
    };
    let w = anholonomy_full(nc).values();
    let mut x = vec![vec![CMatrix::zeros(rep.dim(), rep.dim()); d]; d];
    let mut r = x.clone();
    for c in 0..d {
        for e in 0..d {
            let xv = dgamma(e, c) - dgamma(c, e) + commutator(&conn.gamma[c], &conn.gamma[e]);
            let mut rv = xv.clone();
            for f in 0..d {
                if w[[f, c, e]] != 0.0 {
                    rv -= &conn.gamma[f] * cr(w[[f, c, e]]);
                }
            }
            x[c][e] = xv;
            r[c][e] = rv;
        }
    }
    let kappa = rep.kappa();
    let frame_comp = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let comm = commutator(&r[c][e], rep.sigma(b));
        (-(rep.sigma_upper(a) * comm).trace() / cr(kappa * rep.block_dim(a) as f64)).re
    };
    let ortho_r = Tensor::from_fn(&[d, d, d, d], |ix| frame_comp(ix[0], ix[1], ix[2], ix[3]));
    let l = frame.l.values();
    let th = frame.theta.values();
    let tensor = Tensor::from_fn(&[d, d, d, d], |ix| {
        let (g, al, c, e) = (ix[0], ix[1], ix[2], ix[3]);
        let mut s = 0.0;
        for a in 0..d {
            if l[[g, a]] == 0.0 {
                continue;
            }
            for b in 0..d {
                s += l[[g, a]] * ortho_r[[a, b, c, e]] * th[[b, al]];
            }
        }
        s
    });
    let ricci_adapted = Tensor::from_fn(&[d, d], |ix| {
        let (i, j) = (ix[0], ix[1]);
        let block = if i < n && j < n { 0..n } else if i >= n && j >= n { n..d } else { return 0.0 };
        block.map(|k| tensor[[k, i, k, j]]).sum::<f64>()
    });
    let ricci_frame = Tensor::from_fn(&[d, d], |ix| {
        let mut s = 0.0;
        for a in 0..d {
            for b in 0..d {
                s += l[[a, ix[0]]] * l[[b, ix[1]]] * ricci_adapted[[a, b]];
            }
        }
        s
    });
    let eps = DEpsilon::new(rep)?;
    let ric_c = ricci_frame.map(|&v| cr(v));
    let ricci_spinor = tensor_to_spinor(&tensor_to_spinor(&ric_c, 1, true, rep, &eps)?, 0, true, rep, &eps)?;
    let scalar = pair_trace(&ricci_spinor, rep, &eps);
    let metric_c = Tensor::from_fn(&[d, d], |ix| cr(if ix[0] == ix[1] { 1.0 } else { 0.0 }));
    let metric_spinor = tensor_to_spinor(&tensor_to_spinor(&metric_c, 1, true, rep, &eps)?, 0, true, rep, &eps)?;
    let einstein_spinor = Tensor::from_fn(ricci_spinor.shape(), |ix| ricci_spinor[ix] - metric_spinor[ix] * cr(0.5 * scalar));
    let dd = d as f64;
    let phi_spinor = Tensor::from_fn(ricci_spinor.shape(), |ix| metric_spinor[ix] * cr(scalar / (2.0 * dd)) - ricci_spinor[ix] * cr(0.5));
    let x_spinor = spinor_pair_curvature(&r, &frame, rep, &eps);
    let psi = symmetrize_psi(&x_spinor);
    Ok(SpinorCurvature { x, r, tensor, x_spinor, psi, ricci_frame, ricci_spinor, scalar, einstein_spinor, phi_spinor, non_metric_part: conn.non_metric_part })
}

/// Contraction `T^{ab cd} ε_ac ε_bd` of a two-index spinor-pair tensor,
/// normalized per block so that it returns the frame trace `Σ_A T_AA`.
pub fn pair_trace(t: &Tensor<Complex64>, rep: &DSigmaRep, eps: &DEpsilon) -> f64 {
    let nh = rep.h.dim();
    let nd = rep.dim();
    let mut acc = [cz(), cz()];
    for a in 0..nd {
        for b in 0..nd {
            for c in 0..nd {
                let eac = eps.lower[(a, c)];
                if eac == cz() {
                    continue;
                }
                for dd in 0..nd {
                    let ebd = eps.lower[(b, dd)];
                    if ebd == cz() || (a < nh) != (b < nh) {
                        continue;
                    }
                    acc[usize::from(a >= nh)] += t[[a, b, c, dd]] * eac * ebd;
                }
            }
        }
    }
    let hf = -eps.h_sign * rep.kappa() * rep.h.dim() as f64;
    let vf = -eps.v_sign * rep.kappa() * rep.v.dim() as f64;
    (acc[0] / cr(hf) + acc[1] / cr(vf)).re
}

/// `X_{γδαβ} = ε_{δτ} Σ_{C<D} 2 (σ^{[C} σ^{D]})_α^{·ρ} ε_{ρβ} (R_CD)_γ^{·τ}` with
/// `R_CD` the curvature operator on orthonormal directions.
fn spinor_pair_curvature(r: &[Vec<CMatrix>], frame: &OrthonormalFrame, rep: &DSigmaRep, eps: &DEpsilon) -> Tensor<Complex64> {
    let d = r.len();
    let nd = rep.dim();
    let l = frame.l.values();
    let mut box_total = vec![CMatrix::zeros(nd, nd); nd * nd];
    for cc in 0..d {
        for dd in 0..d {
            if cc == dd {
                continue;
            }
            let mut rcd = CMatrix::zeros(nd, nd);
            for c in 0..d {
                for e in 0..d {
                    let f = l[[c, cc]] * l[[e, dd]];
                    if f != 0.0 {
                        rcd += &r[c][e] * cr(f);
                    }
                }
            }
            let s2 = (rep.sigma_upper(cc) * rep.sigma_upper(dd) - rep.sigma_upper(dd) * rep.sigma_upper(cc)) * cr(0.5);
            let low = s2 * &eps.lower;
            for a in 0..nd {
                for b in 0..nd {
                    if low[(a, b)] != cz() {
                        box_total[a * nd + b] += &rcd * (low[(a, b)] * cr(0.5));
                    }
                }
            }
        }
    }
    Tensor::from_fn(&[nd, nd, nd, nd], |ix| {
        let (g, dl, a, b) = (ix[0], ix[1], ix[2], ix[3]);
        let op = &box_total[a * nd + b];
        (0..nd).map(|t| eps.lower[(dl, t)] * op[(t, g)]).sum()
    })
}

fn symmetrize_psi(x: &Tensor<Complex64>) -> Tensor<Complex64> {
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    Tensor::from_fn(x.shape(), |ix| {
        let free = [ix[0], ix[2], ix[3]];
        let mut s = cz();
        for p in perms {
            s += x[[free[p[0]], ix[1], free[p[1]], free[p[2]]]];
        }
        s / cr(6.0)
    })
}

/// Largest deviation of `ψ` from full symmetry in slots 0, 2, 3.
pub fn psi_symmetry_residual(psi: &Tensor<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (ix, v) in psi.indexed() {
        for alt in [[ix[2], ix[1], ix[0], ix[3]], [ix[0], ix[1], ix[3], ix[2]], [ix[3], ix[1], ix[2], ix[0]]] {
            worst = worst.max((v - psi[alt]).norm());
        }
    }
    worst
}

/// Spinor-route and tensor-route scalar curvature at one point.
#[derive(Debug, Clone, Serialize)]
pub struct ScalarCrossCheck {
    pub spinor: f64,
    pub tensor: f64,
    pub difference: f64,
    pub non_metric_part: f64,
}

pub fn scalar_cross_check(gamma: &DConnectionCoeffs, dm: &DMetricEval, nc: &NConnectionEval, rep: &DSigmaRep) -> Result<ScalarCrossCheck> {
    let sc = spinor_curvature(gamma, dm, nc, rep)?;
    let curv = d_curvatures(gamma, nc)?;
    let (_, tensor) = ricci_and_scalar(&curv, dm, RicciConvention::Default);
    Ok(ScalarCrossCheck { spinor: sc.scalar, tensor, difference: (sc.scalar - tensor).abs(), non_metric_part: sc.non_metric_part })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::PointU;
    use crate::clifford::rep::SigmaNormalization;
    use crate::connection::canonical_connection;
    use crate::spaces::Space;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn drep(n: usize, m: usize) -> DSigmaRep {
        DSigmaRep::euclidean(n, m, SigmaNormalization::Default).unwrap()
    }

    #[test]
    fn vector_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (n, m) in [(2, 2), (3, 2), (4, 1)] {
            let rep = drep(n, m);
            let eps = DEpsilon::new(&rep).unwrap();
            let v: Vec<Complex64> = (0..n + m).map(|_| cr(rng.gen_range(-1.0..1.0))).collect();
            for lower in [true, false] {
                let s = vector_to_spinor(&v, lower, &rep, &eps).unwrap();
                let back = spinor_to_vector(&s, lower, &rep, &eps).unwrap();
                let err = v.iter().zip(&back).fold(0.0f64, |w, (a, b)| w.max((a - b).norm()));
                assert!(err < 1e-12);
            }
            let zero = vector_to_spinor(&vec![cz(); n + m], true, &rep, &eps).unwrap();
            assert_eq!(max_abs(&zero), 0.0);
        }
    }

    #[test]
    fn tensor_slot_round_trip() {
        let rep = drep(2, 2);
        let eps = DEpsilon::new(&rep).unwrap();
        let t = Tensor::from_fn(&[3, 4, 2], |ix| Complex64::new(ix[0] as f64 - 0.5 * ix[1] as f64, 0.25 * ix[2] as f64));
        let s = tensor_to_spinor(&t, 1, false, &rep, &eps).unwrap();
        assert_eq!(s.shape(), &[3, 4, 4, 2]);
        let back = spinor_to_tensor(&s, 1, false, &rep, &eps).unwrap();
        for (ix, v) in t.indexed() {
            assert!((v - back[ix.as_slice()]).norm() < 1e-12);
        }
        assert!(matches!(tensor_to_spinor(&t, 0, true, &rep, &eps), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn small_dimensions_are_fundamental() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=6 {
            let rep = SigmaRep::euclidean(n, SigmaNormalization::Default).unwrap();
            let eps = epsilon_objects(&rep).unwrap();
            let xi: Vec<Complex64> = (0..rep.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let r = fundamental_spinor_test(&xi, &rep, &eps).unwrap();
            assert!(r.fundamental, "n={n}: {r:?}");
        }
        let rep = SigmaRep::euclidean(7, SigmaNormalization::Default).unwrap();
        let eps = epsilon_objects(&rep).unwrap();
        let xi: Vec<Complex64> = (0..rep.dim()).map(|k| cr(1.0 + k as f64)).collect();
        assert!(!fundamental_spinor_test(&xi, &rep, &eps).unwrap().fundamental);
        let basis: Vec<Complex64> = (0..2).map(|k| cr(if k == 0 { 1.0 } else { 0.0 })).collect();
        let rep3 = SigmaRep::euclidean(3, SigmaNormalization::Default).unwrap();
        assert!(fundamental_spinor_test(&basis, &rep3, &epsilon_objects(&rep3).unwrap()).unwrap().fundamental);
    }

    #[test]
    fn metric_from_sigma_and_epsilon() {
        let rep = drep(2, 2);
        let eps = DEpsilon::new(&rep).unwrap();
        let frame = Tensor::from_fn(&[4, 4], |ix| match (ix[0], ix[1]) {
            (0, 0) => 1.3,
            (1, 0) => 0.4,
            (1, 1) => 0.9,
            (2, 2) => 2.0,
            (3, 2) => -0.5,
            (3, 3) => 0.7,
            _ => 0.0,
        });
        let g = reconstruct_metric(&rep, &eps, &frame);
        let expect = Tensor::from_fn(&[4, 4], |ix| (0..4).map(|k| frame[[ix[0], k]] * frame[[ix[1], k]]).sum::<f64>());
        assert!(g.max_abs_diff(&expect) < 1e-12);
        let lit = reconstruct_metric_literal(&rep, &eps, &frame);
        assert!(lit.max_abs_diff(&expect) > 0.1);
    }

    #[test]
    fn leibniz_transfer() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rep = drep(2, 3);
        let d = 5;
        let mut omega = Tensor::filled(&[d, d, d], 0.0);
        for c in 0..d {
            for (lo, hi) in [(0, 2), (2, 5)] {
                for a in lo..hi {
                    for b in a + 1..hi {
                        let v = rng.gen_range(-1.0..1.0);
                        omega[[a, b, c]] = v;
                        omega[[b, a, c]] = -v;
                    }
                }
            }
        }
        let conn = spinor_connection(&omega, &rep).unwrap();
        assert_eq!(conn.non_metric_part, 0.0);
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dv = Tensor::from_fn(&[d, d], |_| rng.gen_range(-1.0..1.0));
        assert!(leibniz_residual(&omega, &conn, &rep, &v, &dv) < 1e-12);
        let zero = spinor_connection(&Tensor::filled(&[d, d, d], 0.0), &rep).unwrap();
        assert!(zero.gamma.iter().all(|g| max_abs(g) == 0.0));
    }

    fn test_space() -> Space {
        let g = vec![
            vec!["1 + x1^2 + 0.3*y2^2", "0.2*sin(x2)*y1"],
            vec!["0.2*sin(x2)*y1", "exp(0.3*y1) + 0.5*x1^2"],
        ];
        let nn = vec![vec!["0.3*x2*y1 + 0.1*y2^2", "0.2*y1*y2"], vec!["0.1*x1*y2", "0.4*y1 - 0.2*x1*y2"]];
        Space::generalized_lagrange(2, &g, Some(&nn)).unwrap()
    }

    #[test]
    fn spinor_scalar_matches_tensor_scalar() {
        let sp = test_space();
        let rep = drep(2, 2);
        for pt in [[0.3, -0.2, 0.5, 0.4], [-0.4, 0.7, -0.3, 0.2], [0.1, 0.1, 0.9, -0.6]] {
            let point = PointU::from_coords(&pt, 2).unwrap();
            let ev = sp.evaluate(&point).unwrap();
            let gamma = canonical_connection(&ev.dm, &ev.nc).unwrap();
            let sc = spinor_curvature(&gamma, &ev.dm, &ev.nc, &rep).unwrap();
            let chk = scalar_cross_check(&gamma, &ev.dm, &ev.nc, &rep).unwrap();
            assert!(chk.non_metric_part < 1e-10, "{chk:?}");
            assert!(chk.difference < 1e-9, "{chk:?}");
            assert!(chk.tensor.abs() > 1e-3);
            let fc = crate::curvature::frame_curvature(&gamma, &ev.nc);
            assert!(sc.tensor.max_abs_diff(&fc) < 1e-9);
            assert!(psi_symmetry_residual(&sc.psi) < 1e-12);
        }
    }

    #[test]
    fn flat_space_has_no_spinor_curvature() {
        let sp = Space::finsler(2, "sqrt(y1^2 + y2^2)").unwrap();
        let point = PointU::from_coords(&[0.2, 0.1, 0.8, -0.3], 2).unwrap();
        let ev = sp.evaluate(&point).unwrap();
        let gamma = canonical_connection(&ev.dm, &ev.nc).unwrap();
        let sc = spinor_curvature(&gamma, &ev.dm, &ev.nc, &drep(2, 2)).unwrap();
        assert!(sc.tensor.max_abs() < 1e-9);
        assert!(sc.scalar.abs() < 1e-9);
        assert!(sc.psi.data().iter().all(|z| z.norm() < 1e-9));
    }
}
