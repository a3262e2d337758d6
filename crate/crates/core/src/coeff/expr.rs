//! Scalar coefficient expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | factor
//! factor := atom ('^' '-'? integer)*
//! atom   := number | 'i' | 'x1' | 'x2' | func '(' expr ')' | '(' expr ')'
//! func   := 'sin' | 'cos' | 'exp'
//! ```

use crate::error::{Error, Result};
use crate::grid::{BoundaryField, GridSpec};
use crate::linalg::c64;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    I,
    X(usize, Pos),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, Pos),
    Pow(Box<Expr>, i32),
    Call(Func, Box<Expr>),
}

fn err(pos: Pos, message: impl Into<String>) -> Error {
    Error::Parse { line: pos.line, column: pos.column, message: message.into() }
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| err(pos, format!("malformed number {text:?}")))?;
            col += i - start;
            out.push((Tok::Num(v), pos));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), pos));
            i += 1;
            col += 1;
            continue;
        }
        return Err(err(pos, format!("unexpected character {c:?}")));
    }
    out.push((Tok::End, Pos { line, column: col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Pos) {
        &self.toks[self.at]
    }

    fn next(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_op(&self, c: char) -> bool {
        self.peek().0 == Tok::Op(c)
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let (t, pos) = self.next();
        if t == Tok::Op(c) {
            Ok(())
        } else {
            Err(err(pos, format!("expected '{c}', found {}", describe(&t))))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.is_op('+') {
                self.next();
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.is_op('-') {
                self.next();
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            if self.is_op('*') {
                self.next();
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.is_op('/') {
                let pos = self.next().1;
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?), pos);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.is_op('-') {
            self.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let mut base = self.atom()?;
        while self.is_op('^') {
            self.next();
            let neg = if self.is_op('-') {
                self.next();
                true
            } else {
                false
            };
            let (t, pos) = self.next();
            let k = match t {
                Tok::Num(v) if v.fract() == 0.0 && v.abs() <= 64.0 => v as i32,
                other => return Err(err(pos, format!("expected an integer exponent, found {}", describe(&other)))),
            };
            base = Expr::Pow(Box::new(base), if neg { -k } else { k });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let (t, pos) = self.next();
        match t {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "i" => Ok(Expr::I),
                "x1" => Ok(Expr::X(0, pos)),
                "x2" => Ok(Expr::X(1, pos)),
                "sin" | "cos" | "exp" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => Func::Exp,
                    };
                    self.expect('(')?;
                    let e = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Call(f, Box::new(e)))
                }
                _ => Err(err(pos, format!("unknown identifier {name:?}"))),
            },
            other => Err(err(pos, format!("unexpected {}", describe(&other)))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier {s:?}"),
        Tok::Op(c) => format!("'{c}'"),
        Tok::End => "end of input".into(),
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { toks: lex(src)?, at: 0 };
        let e = p.expr()?;
        let (t, pos) = p.next();
        if t != Tok::End {
            return Err(err(pos, format!("unexpected {} after expression", describe(&t))));
        }
        Ok(e)
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            Expr::X(1, pos) if dim < 2 => Err(err(*pos, "x2 is not defined for n = 1")),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.check_dim(dim),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b, _) => {
                a.check_dim(dim)?;
                b.check_dim(dim)
            }
            _ => Ok(()),
        }
    }

    fn eval_at(&self, x: [f64; 2]) -> Result<c64> {
        Ok(match self {
            Expr::Num(v) => c64::new(*v, 0.0),
            Expr::I => c64::new(0.0, 1.0),
            Expr::X(j, _) => c64::new(x[*j], 0.0),
            Expr::Neg(a) => -a.eval_at(x)?,
            Expr::Add(a, b) => a.eval_at(x)? + b.eval_at(x)?,
            Expr::Sub(a, b) => a.eval_at(x)? - b.eval_at(x)?,
            Expr::Mul(a, b) => a.eval_at(x)? * b.eval_at(x)?,
            Expr::Div(a, b, pos) => {
                let d = b.eval_at(x)?;
                if d.norm() < 1e-14 {
                    return Err(Error::Eval(format!(
                        "division by {:.3e} at x = ({:.4}, {:.4}) (operator at line {}, column {})",
                        d.norm(),
                        x[0],
                        x[1],
                        pos.line,
                        pos.column
                    )));
                }
                a.eval_at(x)? / d
            }
            Expr::Pow(a, k) => {
                let v = a.eval_at(x)?;
                if *k < 0 && v.norm() < 1e-14 {
                    return Err(Error::Eval(format!("negative power of {:.3e}", v.norm())));
                }
                v.powi(*k)
            }
            Expr::Call(f, a) => {
                let v = a.eval_at(x)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                }
            }
        })
    }

    /// Pointwise evaluation on the grid.
    pub fn evaluate(&self, grid: &GridSpec) -> Result<Vec<c64>> {
        self.check_dim(grid.dim)?;
        let vals = (0..grid.total()).map(|p| self.eval_at(grid.point(p))).collect::<Result<Vec<_>>>()?;
        if vals.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Eval("expression produced a non-finite value".into()));
        }
        Ok(vals)
    }
}

/// Parses and evaluates `src` as a scalar field on `grid`.
pub fn parse_coefficient_expr(src: &str, grid: &GridSpec) -> Result<BoundaryField> {
    let e = Expr::parse(src)?;
    BoundaryField::scalar(*grid, e.evaluate(grid)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> GridSpec {
        GridSpec::periodic(1, 32).unwrap()
    }

    #[test]
    fn constant_one() {
        let f = parse_coefficient_expr("1", &g()).unwrap();
        assert!(f.values.iter().all(|z| *z == c64::new(1.0, 0.0)));
    }

    #[test]
    fn sine_range() {
        let f = parse_coefficient_expr("2+0.3*sin(x1)", &g()).unwrap();
        assert!(f.values.iter().all(|z| z.re >= 1.7 - 1e-15 && z.re <= 2.3 + 1e-15 && z.im == 0.0));
    }

    #[test]
    fn degenerate_division() {
        assert!(matches!(parse_coefficient_expr("1/(x1-x1)", &g()), Err(Error::Eval(_))));
    }

    #[test]
    fn x2_rejected_in_one_dimension() {
        match parse_coefficient_expr("1 + x2", &g()) {
            Err(Error::Parse { line: 1, column: 5, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let g2 = GridSpec::periodic(2, 8).unwrap();
        assert!(parse_coefficient_expr("1 + x2", &g2).is_ok());
    }

    #[test]
    fn syntax_error_position() {
        match Expr::parse("1 +\n  * 2") {
            Err(Error::Parse { line: 2, column: 3, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_powers() {
        let e = Expr::parse("-2^2 + 3*i^2 + (1+1)^-1").unwrap();
        let v = e.eval_at([0.0, 0.0]).unwrap();
        assert!((v - c64::new(-6.5, 0.0)).norm() < 1e-15);
    }
}
