use anholkit::clifford::algebra::{orthogonality_residual, plane_rotor, spinor_norm, twisted_action, Signature};
use anholkit::clifford::checks::signature_suite;
use anholkit::clifford::epsilon::{epsilon_objects, expected_mixed_sign, sigma_symmetry_check, EpsilonPair};
use anholkit::clifford::rep::{matrix_json, DSigmaRep, SigmaNormalization, SigmaRep};
use anholkit::report::{num_value, CheckResult};
use anholkit::{Error, Result};
use clap::{Args, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::output::Sink;

#[derive(Args, Debug, Clone, Copy)]
pub struct SignatureArgs {
    /// Generators squaring to -1.
    #[arg(long, default_value_t = 0)]
    p: usize,
    /// Generators squaring to +1.
    #[arg(long, default_value_t = 0)]
    q: usize,
}

impl SignatureArgs {
    fn signature(&self) -> Result<Signature> {
        Signature::new(self.p, self.q)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum Normalization {
    Default,
    Literal,
}

impl From<Normalization> for SigmaNormalization {
    fn from(n: Normalization) -> Self {
        match n {
            Normalization::Default => SigmaNormalization::Default,
            Normalization::Literal => SigmaNormalization::Literal,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum CliffordCommand {
    /// Sigma matrices of a signature, or of a horizontal/vertical pair.
    Rep {
        #[command(flatten)]
        sig: SignatureArgs,
        /// Vertical block generators squaring to -1.
        #[arg(long)]
        vp: Option<usize>,
        /// Vertical block generators squaring to +1.
        #[arg(long)]
        vq: Option<usize>,
        #[arg(long, value_enum, default_value = "default")]
        normalization: Normalization,
    },
    /// Anticommutation, faithfulness, spinor-norm and double-cover suites.
    Check {
        #[command(flatten)]
        sig: SignatureArgs,
    },
    /// Spinor metric objects and the symmetry class of each sigma product.
    Epsilon {
        #[command(flatten)]
        sig: SignatureArgs,
    },
    /// Action of the rotor `cos t + sin t e_i e_j` on the generators.
    SpinDemo {
        #[command(flatten)]
        sig: SignatureArgs,
        /// First plane index (1-based).
        #[arg(long, default_value_t = 1)]
        i: usize,
        /// Second plane index (1-based).
        #[arg(long, default_value_t = 2)]
        j: usize,
        /// Rotor parameter `t`.
        #[arg(long, default_value_t = 0.5)]
        angle: f64,
    },
}

pub fn run(cmd: &CliffordCommand, seed: u64, sink: &Sink) -> Result<i32> {
    match cmd {
        CliffordCommand::Rep { sig, vp, vq, normalization } => {
            let h = SigmaRep::new(sig.signature()?, (*normalization).into())?;
            let body = if vp.is_some() || vq.is_some() {
                let v_sig = Signature::new(vp.unwrap_or(0), vq.unwrap_or(0))?;
                let v = SigmaRep::new(v_sig, (*normalization).into())?;
                let d = DSigmaRep::new(h.clone(), v.clone())?;
                json!({
                    "horizontal": h.to_json(),
                    "vertical": v.to_json(),
                    "dimension": d.dim(),
                    "anticommutation_residual": num_value(d.anticommutation_residual()),
                    "off_block_max": num_value(d.off_block_max()),
                })
            } else {
                let mut body = h.to_json();
                body["anticommutation_residual"] = num_value(h.anticommutation_residual());
                body
            };
            sink.json(&body)?;
            Ok(0)
        }
        CliffordCommand::Check { sig } => {
            let checks = signature_suite(sig.signature()?, seed)?;
            let pass = checks.iter().all(|c| c.pass);
            sink.json(&json!({
                "p": sig.p,
                "q": sig.q,
                "seed": seed,
                "pass": pass,
                "checks": checks.iter().map(CheckResult::to_json).collect::<Vec<_>>(),
            }))?;
            Ok(if pass { 0 } else { 1 })
        }
        CliffordCommand::Epsilon { sig } => {
            let rep = SigmaRep::new(sig.signature()?, SigmaNormalization::Default)?;
            let eps = epsilon_objects(&rep)?;
            let n = rep.n();
            let classes: Vec<_> = (0..=n).map(|q| sigma_symmetry_check(&rep, &eps, q)).collect();
            let pass = classes.iter().all(|c| c.pass);
            let pair = |p: &Option<EpsilonPair>| -> Value {
                match p {
                    None => Value::Null,
                    Some(p) => json!({
                        "sign": p.sign,
                        "lower": matrix_json(&p.lower),
                        "upper": matrix_json(&p.upper),
                        "scale": num_value(p.scale),
                        "factorization_residual": num_value(p.residual),
                        "class": p.class,
                    }),
                }
            };
            sink.json(&json!({
                "n": n,
                "dimension": eps.dim,
                "plus": pair(&eps.plus),
                "minus": pair(&eps.minus),
                "vanishing_level": num_value(eps.vanishing_level),
                "mixed_sign": (0..=n).map(|q| expected_mixed_sign(n, q)).collect::<Vec<_>>(),
                "classes": classes,
                "pass": pass,
            }))?;
            Ok(if pass { 0 } else { 1 })
        }
        CliffordCommand::SpinDemo { sig, i, j, angle } => {
            let s = sig.signature()?;
            let n = s.dim();
            if *i == 0 || *j == 0 || *i > n || *j > n || i == j {
                return Err(Error::Dimension(format!("plane indices must be distinct and in 1..={n}")));
            }
            let u = plane_rotor(i - 1, j - 1, *angle, s);
            let action = twisted_action(&u)?;
            let rho: Vec<Vec<Value>> = (0..n).map(|r| (0..n).map(|c| num_value(action.rho[(r, c)])).collect()).collect();
            sink.json(&json!({
                "p": s.p,
                "q": s.q,
                "plane": [i, j],
                "angle": num_value(*angle),
                "rotor": u.coeffs().iter().map(|&v| num_value(v)).collect::<Vec<_>>(),
                "spinor_norm": num_value(spinor_norm(&u).scalar_part()),
                "in_twisted_group": action.member,
                "rho": rho,
                "determinant": num_value(action.rho.determinant()),
                "orthogonality_residual": num_value(orthogonality_residual(&action.rho, &s)),
            }))?;
            Ok(0)
        }
    }
}
