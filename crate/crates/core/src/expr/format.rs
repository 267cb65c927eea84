use super::ast::{Expr, ScalarField};

const P_ADD: u8 = 1;
const P_MUL: u8 = 2;
const P_NEG: u8 = 3;
const P_POW: u8 = 4;
const P_ATOM: u8 = 5;

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => P_ADD,
        Expr::Mul(..) | Expr::Div(..) => P_MUL,
        Expr::Neg(_) => P_NEG,
        Expr::Pow(..) => P_POW,
        Expr::Constant(c) if *c < 0.0 => P_NEG,
        _ => P_ATOM,
    }
}

/// Canonical text for a field. Parsing the output yields the same tree.
pub fn format(f: &ScalarField) -> String {
    let mut out = String::new();
    write_expr(f.expr(), f.ctx().names(), &mut out);
    out
}

fn wrapped(e: &Expr, names: &[String], paren: bool, out: &mut String) {
    if paren {
        out.push('(');
    }
    write_expr(e, names, out);
    if paren {
        out.push(')');
    }
}

fn write_expr(e: &Expr, names: &[String], out: &mut String) {
    match e {
        Expr::Constant(c) => {
            if *c < 0.0 {
                out.push_str("-(");
                out.push_str(&format!("{}", -c));
                out.push(')');
            } else {
                out.push_str(&format!("{c}"));
            }
        }
        Expr::Var(i) => out.push_str(&names[*i]),
        Expr::Neg(a) => {
            out.push('-');
            wrapped(a, names, prec(a) < P_ATOM, out);
        }
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            let (p, sym) = match e {
                Expr::Add(..) => (P_ADD, " + "),
                Expr::Sub(..) => (P_ADD, " - "),
                Expr::Mul(..) => (P_MUL, " * "),
                _ => (P_MUL, " / "),
            };
            wrapped(a, names, prec(a) < p, out);
            out.push_str(sym);
            wrapped(b, names, prec(b) <= p, out);
        }
        Expr::Pow(a, b) => {
            wrapped(a, names, prec(a) < P_ATOM, out);
            out.push('^');
            wrapped(b, names, prec(b) < P_POW, out);
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            write_expr(a, names, out);
            out.push(')');
        }
    }
}
