//! Numerical suites for the Clifford algebra layer.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::algebra::{spinor_norm, twisted_action, orthogonality_residual, versor, Multivector, Signature};
use super::rep::{faithfulness_residual, spinor_dimension, table_dimension, SigmaNormalization, SigmaRep};
use crate::error::Result;
use crate::report::CheckResult;

/// Largest generator count covered by the anticommutation sweep.
pub const SWEEP_GENERATORS: usize = 8;

fn random_vector<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random versor of `count` vectors. Vectors with `|G(v)| < |v|²/4` are
/// redrawn, which bounds the boost content in indefinite signatures.
pub fn random_versor<R: Rng>(sig: Signature, count: usize, rng: &mut R) -> Result<Multivector> {
    loop {
        let vs: Vec<Vec<f64>> = (0..count).map(|_| random_vector(sig.dim(), rng)).collect();
        let raw = vs.iter().try_fold(1.0f64, |acc, v| {
            let g: f64 = v.iter().zip(sig.metric()).map(|(x, e)| x * x * e).sum();
            let e2: f64 = v.iter().map(|x| x * x).sum();
            if g.abs() < 0.25 * e2 || e2 < 0.05 {
                None
            } else {
                Some(acc * g)
            }
        });
        if raw.is_some() {
            return versor(&vs, sig);
        }
    }
}

fn random_multivector<R: Rng>(sig: Signature, rng: &mut R) -> Multivector {
    let coeffs = (0..sig.blade_count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Multivector::from_coeffs(coeffs, sig).expect("coefficient count matches")
}

/// `|{σ_i, σ_j} + 2κ Ĝ_ij|` for every signature with `1 ≤ p + q ≤ limit`.
pub fn anticommutation_sweep(limit: usize, normalization: SigmaNormalization) -> Result<CheckResult> {
    let mut residuals = Vec::new();
    for n in 1..=limit {
        for p in 0..=n {
            let rep = SigmaRep::new(Signature::new(p, n - p)?, normalization)?;
            residuals.push(rep.anticommutation_residual());
        }
    }
    Ok(CheckResult::from_residuals("anticommutation", &residuals, 1e-12))
}

/// Constructed irrep dimensions against the table for `n = 1..=limit`,
/// together with the period-two doubling `N(n + 2) = 2 N(n)`.
pub fn dimension_table_check(limit: usize) -> Result<CheckResult> {
    let mut bad = Vec::new();
    for n in 1..=limit {
        let built = SigmaRep::euclidean(n, SigmaNormalization::Default)?.dim();
        let table = table_dimension(n, false);
        if built != table || built != spinor_dimension(n) {
            bad.push(format!("n={n}: built {built}, table {table}"));
        }
        if n + 2 <= limit && spinor_dimension(n + 2) != 2 * spinor_dimension(n) {
            bad.push(format!("period breaks at n={n}"));
        }
    }
    let detail = if bad.is_empty() { None } else { Some(bad.join("; ")) };
    Ok(CheckResult::flag("dimension_table", detail.is_none(), detail))
}

/// `|S(uu') - S(u) S(u')|` over random versor pairs.
pub fn spinor_norm_check(sig: Signature, samples: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut residuals = Vec::with_capacity(samples);
    for _ in 0..samples {
        let a = rng.gen_range(1..=4);
        let b = rng.gen_range(1..=4);
        let u = random_versor(sig, a, &mut rng)?;
        let w = random_versor(sig, b, &mut rng)?;
        let lhs = spinor_norm(&u.product(&w));
        let rhs = spinor_norm(&u).product(&spinor_norm(&w));
        residuals.push(lhs.max_abs_diff(&rhs));
    }
    Ok(CheckResult::from_residuals("spinor_norm_multiplicative", &residuals, 1e-9))
}

/// Double-cover checks on random even versors.
pub fn double_cover_check(sig: Signature, samples: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sig.dim();
    let mut ortho = Vec::with_capacity(samples);
    let mut sign_symmetric = true;
    let mut kernel_ok = true;
    let mut membership = Vec::with_capacity(samples);
    let one = Multivector::scalar(1.0, sig);
    for k in 0..samples {
        let u = match k {
            0 => one.clone(),
            1 => one.scale(-1.0),
            _ => {
                let pairs = rng.gen_range(1..=3);
                random_versor(sig, 2 * pairs, &mut rng)?
            }
        };
        let act = twisted_action(&u)?;
        membership.push(act.off_grade);
        let det = act.rho.determinant();
        ortho.push(orthogonality_residual(&act.rho, &sig).max((det - 1.0).abs()));
        let neg = twisted_action(&u.scale(-1.0))?;
        if neg.rho != act.rho {
            sign_symmetric = false;
        }
        let identity_dev = (&act.rho - nalgebra::DMatrix::<f64>::identity(n, n)).amax();
        let is_pm_one = u.sub(&one).norm() < 1e-9 || u.add(&one).norm() < 1e-9;
        if (identity_dev < 1e-9) != is_pm_one {
            kernel_ok = false;
        }
    }
    Ok(vec![
        CheckResult::from_residuals("spin_membership", &membership, super::algebra::MEMBERSHIP_TOLERANCE),
        CheckResult::from_residuals("rho_special_orthogonal", &ortho, 1e-9),
        CheckResult::flag("rho_sign_invariant", sign_symmetric, None),
        CheckResult::flag("rho_kernel", kernel_ok, None),
    ])
}

/// Representation homomorphism on random pairs.
pub fn faithfulness_check(sig: Signature, samples: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rep = SigmaRep::new(sig, SigmaNormalization::Default)?;
    let pairs: Vec<(Multivector, Multivector)> = (0..samples).map(|_| (random_multivector(sig, &mut rng), random_multivector(sig, &mut rng))).collect();
    let r = faithfulness_residual(&rep, &pairs)?;
    Ok(CheckResult::from_residuals("faithfulness", &[r], 1e-10))
}

/// `|(ab)c - a(bc)|` on random triples.
pub fn associativity_check(sig: Signature, samples: usize, seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let residuals: Vec<f64> = (0..samples)
        .map(|_| {
            let (a, b, c) = (random_multivector(sig, &mut rng), random_multivector(sig, &mut rng), random_multivector(sig, &mut rng));
            a.product(&b).product(&c).max_abs_diff(&a.product(&b.product(&c)))
        })
        .collect();
    CheckResult::from_residuals("associativity", &residuals, 1e-12)
}

/// Every suite for one signature, as run by the `clifford check` command.
pub fn signature_suite(sig: Signature, seed: u64) -> Result<Vec<CheckResult>> {
    let rep = SigmaRep::new(sig, SigmaNormalization::Default)?;
    let mut out = vec![CheckResult::from_residuals("anticommutation", &[rep.anticommutation_residual()], 1e-12)];
    out.push(faithfulness_check(sig, 20, seed)?);
    out.push(associativity_check(sig, 20, seed.wrapping_add(1)));
    out.push(spinor_norm_check(sig, 100, seed.wrapping_add(2))?);
    out.extend(double_cover_check(sig, 200, seed.wrapping_add(3))?);
    Ok(out)
}

/// The full algebra criterion: sweep, table, and per-signature suites over
/// a representative set of signatures.
pub fn algebra_criterion(seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = vec![
        anticommutation_sweep(SWEEP_GENERATORS, SigmaNormalization::Default)?,
        anticommutation_sweep(SWEEP_GENERATORS, SigmaNormalization::Literal)?.with_detail("literal normalization"),
        dimension_table_check(8)?,
    ];
    let sigs = [(3, 0), (0, 3), (3, 1), (2, 2), (4, 0)];
    let mut norm = Vec::new();
    let mut member = Vec::new();
    let mut ortho = Vec::new();
    let mut flags = (true, true);
    let mut faith = Vec::new();
    for (k, &(p, q)) in sigs.iter().enumerate() {
        let sig = Signature::new(p, q)?;
        let s = seed.wrapping_add(17 * k as u64);
        norm.push(spinor_norm_check(sig, 100, s)?.max_residual);
        let dc = double_cover_check(sig, 200, s + 5)?;
        member.push(dc[0].max_residual);
        ortho.push(dc[1].max_residual);
        flags.0 &= dc[2].pass;
        flags.1 &= dc[3].pass;
        faith.push(faithfulness_check(sig, 20, s + 7)?.max_residual);
    }
    out.push(CheckResult::from_residuals("spinor_norm_multiplicative", &norm, 1e-9));
    out.push(CheckResult::from_residuals("spin_membership", &member, super::algebra::MEMBERSHIP_TOLERANCE));
    out.push(CheckResult::from_residuals("rho_special_orthogonal", &ortho, 1e-9));
    out.push(CheckResult::flag("rho_sign_invariant", flags.0, None));
    out.push(CheckResult::flag("rho_kernel", flags.1, None));
    out.push(CheckResult::from_residuals("faithfulness", &faith, 1e-10));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_signature_suite_passes() {
        let all = signature_suite(Signature::new(3, 1).unwrap(), 11).unwrap();
        for c in &all {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn sweep_and_table() {
        assert!(anticommutation_sweep(6, SigmaNormalization::Default).unwrap().pass);
        assert!(dimension_table_check(8).unwrap().pass);
    }
}
