//! Twistor equation on flat d-spaces with the Euclidean frame `δ_A = ∂_A`.
//!
//! A spinor field is supplied as a closure from seeded coordinate jets to
//! its components, each split into real and imaginary jets.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use super::rep::{CMatrix, DSigmaRep};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// Spinor field: coordinates `u^A` as jets to `(re, im)` per component.
pub type SpinorField<'a> = dyn Fn(&[Jet]) -> Vec<(Jet, Jet)> + 'a;

#[derive(Debug, Clone, Serialize)]
pub struct TwistorResidual {
    /// `max_A |∇_A ω + (1/(κ d_X)) σ_A Σ_{B∈X} σ^B ∇_B ω|` with the sum
    /// restricted to the block `X` of `A`.
    pub blockwise: f64,
    /// Same with the global trace `(1/(κ(n+m))) σ_A Σ_B σ^B ∇_B ω`.
    pub global: f64,
}

fn derivatives(field: &SpinorField, point: &[f64], dim: usize) -> Result<Vec<Vec<Complex64>>> {
    let u = Jet::seed_all(point, 1);
    let comps = field(&u);
    if comps.len() != dim {
        return Err(Error::ShapeMismatch(format!("spinor field with {} components for spin dimension {dim}", comps.len())));
    }
    Ok((0..point.len())
        .map(|a| comps.iter().map(|(re, im)| Complex64::new(re.derivative(a).value(), im.derivative(a).value())).collect())
        .collect())
}

/// Evaluates both residual forms at `point`.
pub fn twistor_residual(field: &SpinorField, point: &[f64], rep: &DSigmaRep) -> Result<TwistorResidual> {
    let d = rep.n() + rep.m();
    if point.len() != d {
        return Err(Error::ShapeMismatch(format!("point of length {} for a {d}-dimensional frame", point.len())));
    }
    let nd = rep.dim();
    let grads = derivatives(field, point, nd)?;
    let cols: Vec<CMatrix> = grads.iter().map(|g| CMatrix::from_column_slice(nd, 1, g)).collect();
    let kappa = rep.kappa();
    let dirac = |range: std::ops::Range<usize>| -> CMatrix {
        let mut acc = CMatrix::zeros(nd, 1);
        for b in range {
            acc += rep.sigma_upper(b) * &cols[b];
        }
        acc
    };
    let dh = dirac(0..rep.n());
    let dv = dirac(rep.n()..d);
    let full = &dh + &dv;
    let mut blockwise: f64 = 0.0;
    let mut global: f64 = 0.0;
    for a in 0..d {
        let (block, width) = if a < rep.n() { (&dh, rep.n()) } else { (&dv, rep.m()) };
        let rb = &cols[a] + rep.sigma(a) * block * Complex64::new(1.0 / (kappa * width as f64), 0.0);
        let rg = &cols[a] + rep.sigma(a) * &full * Complex64::new(1.0 / (kappa * d as f64), 0.0);
        blockwise = blockwise.max(rb.iter().map(|z| z.norm()).fold(0.0, f64::max));
        global = global.max(rg.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(TwistorResidual { blockwise, global })
}

/// General flat solution `ω = Ω + u^A σ_A Π`.
pub fn flat_solution(rep: &DSigmaRep, omega: Vec<Complex64>, pi: Vec<Complex64>) -> impl Fn(&[Jet]) -> Vec<(Jet, Jet)> + '_ {
    move |u: &[Jet]| {
        let nd = rep.dim();
        let (nv, ord) = (u[0].nvars(), u[0].order());
        (0..nd)
            .map(|r| {
                let mut re = Jet::constant(omega[r].re, nv, ord);
                let mut im = Jet::constant(omega[r].im, nv, ord);
                for (a, ua) in u.iter().enumerate() {
                    let s = rep.sigma(a);
                    let c: Complex64 = (0..nd).map(|k| s[(r, k)] * pi[k]).sum();
                    re = re + ua.scale(c.re);
                    im = im + ua.scale(c.im);
                }
                (re, im)
            })
            .collect()
    }
}

/// `ω = (u¹)² Ω`, which does not solve the twistor equation.
pub fn quadratic_control(omega: Vec<Complex64>) -> impl Fn(&[Jet]) -> Vec<(Jet, Jet)> {
    move |u: &[Jet]| {
        let sq = &u[0] * &u[0];
        omega.iter().map(|c| (sq.scale(c.re), sq.scale(c.im))).collect()
    }
}

/// Summary of a randomized twistor check.
#[derive(Debug, Clone, Serialize)]
pub struct TwistorCheck {
    pub samples: usize,
    pub max_blockwise: f64,
    pub max_global: f64,
    pub control_blockwise: f64,
}

pub fn random_twistor_check<R: Rng>(rep: &DSigmaRep, samples: usize, rng: &mut R) -> Result<TwistorCheck> {
    let nd = rep.dim();
    let d = rep.n() + rep.m();
    let rc = |rng: &mut R| -> Vec<Complex64> { (0..nd).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect() };
    let mut out = TwistorCheck { samples, max_blockwise: 0.0, max_global: 0.0, control_blockwise: f64::INFINITY };
    for _ in 0..samples {
        let (om, pi) = (rc(rng), rc(rng));
        let point: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = flat_solution(rep, om.clone(), pi);
        let r = twistor_residual(&field, &point, rep)?;
        out.max_blockwise = out.max_blockwise.max(r.blockwise);
        out.max_global = out.max_global.max(r.global);
        let mut cp = point.clone();
        cp[0] = 0.5 + 0.5 * rng.gen_range(0.0..1.0);
        let ctrl = twistor_residual(&quadratic_control(om), &cp, rep)?;
        out.control_blockwise = out.control_blockwise.min(ctrl.blockwise);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::rep::SigmaNormalization;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_solutions_and_control() {
        for norm in [SigmaNormalization::Default, SigmaNormalization::Literal] {
            let rep = DSigmaRep::euclidean(2, 2, norm).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let c = random_twistor_check(&rep, 20, &mut rng).unwrap();
            assert!(c.max_blockwise < 1e-12, "{c:?}");
            assert!(c.max_global > 1e-3);
            assert!(c.control_blockwise > 1e-3);
        }
    }

    #[test]
    fn constant_spinor_is_trivial() {
        let rep = DSigmaRep::euclidean(3, 2, SigmaNormalization::Default).unwrap();
        let om = vec![Complex64::new(1.0, -2.0); rep.dim()];
        let f = flat_solution(&rep, om, vec![Complex64::new(0.0, 0.0); rep.dim()]);
        let r = twistor_residual(&f, &[0.1, 0.2, 0.3, 0.4, 0.5], &rep).unwrap();
        assert_eq!(r.blockwise, 0.0);
        assert_eq!(r.global, 0.0);
    }
}
