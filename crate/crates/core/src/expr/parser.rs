use std::sync::Arc;

use crate::error::{Error, Result};

use super::ast::{Expr, Func, ScalarField, VarContext};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(text: &'a str) -> Result<Vec<(Tok, usize)>> {
        let mut lx = Lexer { src: text.as_bytes(), pos: 0 };
        let mut out = Vec::new();
        loop {
            let t = lx.next()?;
            let end = t.0 == Tok::End;
            out.push(t);
            if end {
                return Ok(out);
            }
        }
    }

    fn next(&mut self) -> Result<(Tok, usize)> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = self.src.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        let single = match c {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(t) = single {
            self.pos += 1;
            return Ok((t, start));
        }
        if c.is_ascii_digit() || c == b'.' {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos < self.src.len() && self.src[self.pos] == b'.' {
                self.pos += 1;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            if text == "." {
                return Err(Error::Syntax { offset: start, message: "malformed number".into() });
            }
            if self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphabetic() || self.src[self.pos] == b'_') {
                return Err(Error::Syntax {
                    offset: self.pos,
                    message: "identifier directly after a number (implicit multiplication is not allowed)".into(),
                });
            }
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Syntax { offset: start, message: "malformed number".into() })?;
            return Ok((Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                self.pos += 1;
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap().to_string();
            return Ok((Tok::Ident(text), start));
        }
        Err(Error::Syntax { offset: start, message: format!("unexpected character `{}`", char_at(self.src, start)) })
    }
}

fn char_at(src: &[u8], pos: usize) -> char {
    std::str::from_utf8(&src[pos..]).ok().and_then(|s| s.chars().next()).unwrap_or('?')
}

struct Parser<'c> {
    toks: Vec<(Tok, usize)>,
    i: usize,
    ctx: &'c VarContext,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn offset(&self) -> usize {
        self.toks[self.i].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(Error::Syntax { offset: self.offset(), message: format!("expected {what}") })
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Minus => {
                    self.bump();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Slash => {
                    self.bump();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (tok, off) = self.bump();
        match tok {
            Tok::Num(v) => Ok(Expr::Constant(v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    let func = Func::from_name(&name).ok_or(Error::UnknownIdentifier { name: name.clone(), offset: off })?;
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    self.expect(Tok::RParen, "`)`")?;
                    if args.len() != 1 {
                        return Err(Error::Arity { name, got: args.len(), offset: off });
                    }
                    Ok(Expr::Call(func, Box::new(args.pop().unwrap())))
                } else if let Some(i) = self.ctx.index_of(&name) {
                    Ok(Expr::Var(i))
                } else if Func::from_name(&name).is_some() {
                    Err(Error::Syntax { offset: self.offset(), message: format!("expected `(` after `{name}`") })
                } else {
                    Err(Error::UnknownIdentifier { name, offset: off })
                }
            }
            Tok::End => Err(Error::Syntax { offset: off, message: "unexpected end of input".into() }),
            other => Err(Error::Syntax { offset: off, message: format!("unexpected token {other:?}") }),
        }
    }
}

/// Parse `text` against the coordinates declared in `ctx`.
pub fn parse(text: &str, ctx: &Arc<VarContext>) -> Result<ScalarField> {
    if text.trim().is_empty() {
        return Err(Error::Syntax { offset: 0, message: "empty expression".into() });
    }
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, i: 0, ctx };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(Error::Syntax { offset: p.offset(), message: "unexpected trailing input".into() });
    }
    ScalarField::new(ctx.clone(), e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Variance;

    fn ctx(n: usize, m: usize) -> Arc<VarContext> {
        Arc::new(VarContext::new(n, m, Variance::Vector).unwrap())
    }

    #[test]
    fn builds_expected_tree() {
        let f = parse("sqrt(y1^2 + y2^2)", &ctx(2, 2)).unwrap();
        let y1 = Box::new(Expr::Var(2));
        let y2 = Box::new(Expr::Var(3));
        let two = || Box::new(Expr::Constant(2.0));
        let expect = Expr::Call(
            Func::Sqrt,
            Box::new(Expr::Add(Box::new(Expr::Pow(y1, two())), Box::new(Expr::Pow(y2, two())))),
        );
        assert_eq!(f.expr(), &expect);
    }

    #[test]
    fn precedence_and_associativity() {
        let c = ctx(1, 1);
        let e = parse("-x1^2", &c).unwrap();
        assert!(matches!(e.expr(), Expr::Neg(inner) if matches!(**inner, Expr::Pow(..))));
        let e = parse("2^3^2", &c).unwrap();
        assert!((e.value_at(&[0.0, 0.0]).unwrap() - 512.0).abs() < 1e-12);
        let e = parse("8 / 4 / 2", &c).unwrap();
        assert_eq!(e.value_at(&[0.0, 0.0]).unwrap(), 1.0);
        let e = parse("1 - 2 - 3", &c).unwrap();
        assert_eq!(e.value_at(&[0.0, 0.0]).unwrap(), -4.0);
        let e = parse("2 * -3", &c).unwrap();
        assert_eq!(e.value_at(&[0.0, 0.0]).unwrap(), -6.0);
        let e = parse("y1*(1 + 0.3)", &c).unwrap();
        assert!((e.value_at(&[0.0, 2.0]).unwrap() - 2.6).abs() < 1e-15);
    }

    #[test]
    fn reports_errors_with_offsets() {
        let c = ctx(2, 2);
        assert_eq!(parse("x3", &c).unwrap_err(), Error::UnknownIdentifier { name: "x3".into(), offset: 0 });
        assert!(matches!(parse("2x1", &c), Err(Error::Syntax { offset: 1, .. })));
        assert!(matches!(parse("sin(x1, x2)", &c), Err(Error::Arity { got: 2, .. })));
        assert!(matches!(parse("sin()", &c), Err(Error::Arity { got: 0, .. })));
        assert!(matches!(parse("x1 + ", &c), Err(Error::Syntax { offset: 5, .. })));
        assert!(matches!(parse("(x1", &c), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 $ 2", &c), Err(Error::Syntax { offset: 3, .. })));
        assert!(matches!(parse("", &c), Err(Error::Syntax { .. })));
        assert!(matches!(parse("foo(x1)", &c), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse("1e5", &c), Err(Error::Syntax { .. })));
    }

    #[test]
    fn covector_names() {
        let c = Arc::new(VarContext::new(2, 2, Variance::Covector).unwrap());
        assert!(parse("p1 * x2", &c).is_ok());
        assert!(parse("y1", &c).is_err());
    }
}
