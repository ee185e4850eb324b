//! Scalar coefficient fields: a small closed-form expression language.
//!
//! Coefficients (`a`, `b`, `c`, barriers, witnesses) are closed-form
//! expressions over the space variables, stored as an AST and evaluated
//! pointwise. No symbolic differentiation is performed anywhere; derivative
//! information is always obtained by finite differences on samples.
//!
//! Grammar (EBNF):
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom ("^" unary)?                  // right-associative
//! atom    := NUMBER | "pi" | "x" | "y"
//!          | FUNC "(" expr ")"                  // abs sqrt exp sin cos tan atan
//!          | ("min" | "max") "(" expr "," expr ")"
//!          | "piecewise" "(" pred "," expr "," expr ")"
//!          | "(" expr ")"
//! pred    := expr ("<" | "<=" | ">" | ">=") expr
//! NUMBER  := float literal, e.g. 2, 0.5, 1e-3, 6.28e0
//! ```
//!
//! `piecewise(p, f, g)` evaluates `f` where `p` holds and `g` elsewhere;
//! exactly one branch is taken at every point, with the comparison applied
//! literally (so `<=` vs `<` decides which branch owns a breakpoint).
//!
//! Printing is the inverse of parsing: `parse(&print(f)) == f` structurally.
//! Negated literals are folded at parse time (`-1` is the constant −1, not a
//! negation node), which keeps the round-trip exact.

use crate::error::{Error, Result};
use std::fmt;

/// Spatial dimension tag used for arity checking at parse/eval time.
pub const VAR_X: usize = 0;
pub const VAR_Y: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Abs,
    Sqrt,
    Exp,
    Sin,
    Cos,
    Tan,
    Atan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
}

/// Predicate of a `piecewise` node.
#[derive(Debug, Clone, PartialEq)]
pub struct Pred {
    pub lhs: Expr,
    pub op: CmpOp,
    pub rhs: Expr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// `Var(0)` is `x`, `Var(1)` is `y`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
    Piecewise {
        pred: Box<Pred>,
        then: Box<Expr>,
        els: Box<Expr>,
    },
}

/// A coefficient field: expression plus the highest variable it may use.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub expr: Expr,
    /// 1 for fields over x only, 2 if y appears.
    pub dim: usize,
}

impl ScalarField {
    pub fn constant(v: f64) -> Self {
        ScalarField { expr: Expr::Const(v), dim: 1 }
    }

    /// Field for `k * self` (used by coefficient sweeps).
    pub fn scaled(&self, k: f64) -> Self {
        ScalarField {
            expr: Expr::Bin(BinOp::Mul, Box::new(Expr::Const(k)), Box::new(self.expr.clone())),
            dim: self.dim,
        }
    }

    /// Field for `self + k` (used by perturbation probes).
    pub fn shifted(&self, k: f64) -> Self {
        ScalarField {
            expr: Expr::Bin(BinOp::Add, Box::new(self.expr.clone()), Box::new(Expr::Const(k))),
            dim: self.dim,
        }
    }

    /// Field for `self + other`.
    pub fn plus(&self, other: &ScalarField) -> Self {
        ScalarField {
            expr: Expr::Bin(
                BinOp::Add,
                Box::new(self.expr.clone()),
                Box::new(other.expr.clone()),
            ),
            dim: self.dim.max(other.dim),
        }
    }
}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

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
    Lt,
    Le,
    Gt,
    Ge,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Lexer { src: src.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Next token with its starting offset, or None at end of input.
    fn next(&mut self) -> Result<Option<(usize, Tok)>> {
        self.skip_ws();
        if self.pos >= self.src.len() {
            return Ok(None);
        }
        let start = self.pos;
        let c = self.src[self.pos];
        let tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b',' => {
                self.pos += 1;
                Tok::Comma
            }
            b'<' | b'>' => {
                self.pos += 1;
                let eq = self.pos < self.src.len() && self.src[self.pos] == b'=';
                if eq {
                    self.pos += 1;
                }
                match (c, eq) {
                    (b'<', false) => Tok::Lt,
                    (b'<', true) => Tok::Le,
                    (b'>', false) => Tok::Gt,
                    _ => Tok::Ge,
                }
            }
            b'0'..=b'9' | b'.' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_digit() || self.src[end] == b'.')
                {
                    end += 1;
                }
                // exponent part: e.g. 1e-3, 2.5E+7
                if end < self.src.len() && (self.src[end] | 0x20) == b'e' {
                    let mut p = end + 1;
                    if p < self.src.len() && (self.src[p] == b'+' || self.src[p] == b'-') {
                        p += 1;
                    }
                    if p < self.src.len() && self.src[p].is_ascii_digit() {
                        while p < self.src.len() && self.src[p].is_ascii_digit() {
                            p += 1;
                        }
                        end = p;
                    }
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap();
                let v: f64 = text.parse().map_err(|_| Error::Syntax {
                    position: start,
                    message: format!("bad number literal `{text}`"),
                })?;
                self.pos = end;
                Tok::Num(v)
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let mut end = self.pos;
                while end < self.src.len()
                    && (self.src[end].is_ascii_alphanumeric() || self.src[end] == b'_')
                {
                    end += 1;
                }
                let text = std::str::from_utf8(&self.src[self.pos..end]).unwrap().to_string();
                self.pos = end;
                Tok::Ident(text)
            }
            other => {
                return Err(Error::Syntax {
                    position: start,
                    message: format!("unexpected character `{}`", other as char),
                })
            }
        };
        Ok(Some((start, tok)))
    }
}

// ---------------------------------------------------------------------------
// parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(usize, Tok)>,
    idx: usize,
    end: usize,
    max_var: usize,
}

impl Parser {
    fn peek(&self) -> Option<&(usize, Tok)> {
        self.toks.get(self.idx)
    }

    fn bump(&mut self) -> Option<(usize, Tok)> {
        let t = self.toks.get(self.idx).cloned();
        if t.is_some() {
            self.idx += 1;
        }
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<()> {
        match self.bump() {
            Some((_, t)) if t == want => Ok(()),
            Some((p, t)) => Err(Error::Syntax {
                position: p,
                message: format!("expected {what}, found {t:?}"),
            }),
            None => Err(Error::Syntax {
                position: self.end,
                message: format!("expected {what}, found end of input"),
            }),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some((_, Tok::Plus)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Minus)) => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some((_, Tok::Star)) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some((_, Tok::Slash)) => {
                    self.bump();
                    let rhs = self.unary()?;
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some((_, Tok::Minus)) => {
                self.bump();
                let inner = self.unary()?;
                // fold literal negation so printing round-trips structurally
                Ok(match inner {
                    Expr::Const(v) => Expr::Const(-v),
                    other => Expr::Neg(Box::new(other)),
                })
            }
            Some((_, Tok::Plus)) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some((_, Tok::Caret)) = self.peek() {
            self.bump();
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn pred(&mut self) -> Result<Pred> {
        let lhs = self.expr()?;
        let op = match self.bump() {
            Some((_, Tok::Lt)) => CmpOp::Lt,
            Some((_, Tok::Le)) => CmpOp::Le,
            Some((_, Tok::Gt)) => CmpOp::Gt,
            Some((_, Tok::Ge)) => CmpOp::Ge,
            Some((p, t)) => {
                return Err(Error::Syntax {
                    position: p,
                    message: format!("expected comparison operator, found {t:?}"),
                })
            }
            None => {
                return Err(Error::Syntax {
                    position: self.end,
                    message: "expected comparison operator, found end of input".into(),
                })
            }
        };
        let rhs = self.expr()?;
        Ok(Pred { lhs, op, rhs })
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.bump() {
            Some((_, Tok::Num(v))) => Ok(Expr::Const(v)),
            Some((_, Tok::LParen)) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some((pos, Tok::Ident(name))) => self.ident(pos, &name),
            Some((p, t)) => Err(Error::Syntax {
                position: p,
                message: format!("expected an operand, found {t:?}"),
            }),
            None => Err(Error::Syntax {
                position: self.end,
                message: "expected an operand, found end of input".into(),
            }),
        }
    }

    fn ident(&mut self, pos: usize, name: &str) -> Result<Expr> {
        match name {
            "x" => {
                self.max_var = self.max_var.max(1);
                return Ok(Expr::Var(VAR_X));
            }
            "y" => {
                self.max_var = self.max_var.max(2);
                return Ok(Expr::Var(VAR_Y));
            }
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            _ => {}
        }
        let func = match name {
            "abs" => Some(Func::Abs),
            "sqrt" => Some(Func::Sqrt),
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "tan" => Some(Func::Tan),
            "atan" => Some(Func::Atan),
            _ => None,
        };
        if let Some(f) = func {
            self.expect(Tok::LParen, "`(`")?;
            let arg = self.expr()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(Expr::Call(f, Box::new(arg)));
        }
        match name {
            "min" | "max" => {
                self.expect(Tok::LParen, "`(`")?;
                let a = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let b = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(if name == "min" {
                    Expr::Min(Box::new(a), Box::new(b))
                } else {
                    Expr::Max(Box::new(a), Box::new(b))
                })
            }
            "piecewise" => {
                self.expect(Tok::LParen, "`(`")?;
                let pred = self.pred()?;
                self.expect(Tok::Comma, "`,`")?;
                let then = self.expr()?;
                self.expect(Tok::Comma, "`,`")?;
                let els = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Piecewise {
                    pred: Box::new(pred),
                    then: Box::new(then),
                    els: Box::new(els),
                })
            }
            _ => Err(Error::UnknownIdentifier { position: pos, name: name.to_string() }),
        }
    }
}

/// Parse a coefficient field. `dim` checks variable usage: a 1D field may
/// only use `x`; a 2D field may use `x` and `y`.
pub fn parse_field(src: &str, dim: usize) -> Result<ScalarField> {
    let mut lex = Lexer::new(src);
    let mut toks = Vec::new();
    while let Some(t) = lex.next()? {
        toks.push(t);
    }
    let end = src.len();
    let mut p = Parser { toks, idx: 0, end, max_var: 0 };
    let expr = p.expr()?;
    if let Some((pos, t)) = p.peek() {
        return Err(Error::Syntax {
            position: *pos,
            message: format!("unexpected trailing {t:?}"),
        });
    }
    if p.max_var > dim {
        return Err(Error::Syntax {
            position: 0,
            message: format!("variable `y` used in a {dim}-dimensional field"),
        });
    }
    Ok(ScalarField { expr, dim })
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::DomainError(format!("{what} produced {v}")))
    }
}

impl Expr {
    fn eval(&self, p: &[f64]) -> Result<f64> {
        match self {
            Expr::Const(v) => Ok(*v),
            Expr::Var(i) => Ok(p[*i]),
            Expr::Neg(e) => Ok(-e.eval(p)?),
            Expr::Bin(op, a, b) => {
                let a = a.eval(p)?;
                let b = b.eval(p)?;
                match op {
                    BinOp::Add => finite(a + b, "addition"),
                    BinOp::Sub => finite(a - b, "subtraction"),
                    BinOp::Mul => finite(a * b, "multiplication"),
                    BinOp::Div => {
                        if b == 0.0 {
                            Err(Error::DomainError("division by zero".into()))
                        } else {
                            finite(a / b, "division")
                        }
                    }
                    BinOp::Pow => finite(a.powf(b), "power"),
                }
            }
            Expr::Call(f, e) => {
                let v = e.eval(p)?;
                match f {
                    Func::Abs => Ok(v.abs()),
                    Func::Sqrt => {
                        if v < 0.0 {
                            Err(Error::DomainError(format!("sqrt of negative value {v}")))
                        } else {
                            Ok(v.sqrt())
                        }
                    }
                    Func::Exp => finite(v.exp(), "exp"),
                    Func::Sin => Ok(v.sin()),
                    Func::Cos => Ok(v.cos()),
                    Func::Tan => finite(v.tan(), "tan"),
                    Func::Atan => Ok(v.atan()),
                }
            }
            Expr::Min(a, b) => Ok(a.eval(p)?.min(b.eval(p)?)),
            Expr::Max(a, b) => Ok(a.eval(p)?.max(b.eval(p)?)),
            Expr::Piecewise { pred, then, els } => {
                let l = pred.lhs.eval(p)?;
                let r = pred.rhs.eval(p)?;
                let hold = match pred.op {
                    CmpOp::Lt => l < r,
                    CmpOp::Le => l <= r,
                    CmpOp::Gt => l > r,
                    CmpOp::Ge => l >= r,
                };
                if hold {
                    then.eval(p)
                } else {
                    els.eval(p)
                }
            }
        }
    }
}

/// Evaluate a field at a point. 1D fields take `&[x]`, 2D fields `&[x, y]`.
pub fn eval_field(f: &ScalarField, point: &[f64]) -> Result<f64> {
    if point.len() < f.dim {
        return Err(Error::SizeMismatch { expected: f.dim, got: point.len() });
    }
    // pad so Var(1) is always indexable
    let buf = [point[0], if point.len() > 1 { point[1] } else { 0.0 }];
    f.expr.eval(&buf)
}

/// Evaluate at a 1D point.
pub fn eval1(f: &ScalarField, x: f64) -> Result<f64> {
    f.expr.eval(&[x, 0.0])
}

// ---------------------------------------------------------------------------
// printing
// ---------------------------------------------------------------------------

// Precedence levels used to insert the minimal parentheses.
fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
        Expr::Neg(..) => 3,
        Expr::Bin(BinOp::Pow, ..) => 4,
        _ => 5,
    }
}

fn fmt_child(f: &mut fmt::Formatter<'_>, child: &Expr, min_prec: u8) -> fmt::Result {
    if prec(child) < min_prec {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(v) => {
                if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) {
                    // negative literals print with the sign; the parser folds
                    // it back into the constant
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Expr::Var(VAR_X) => write!(f, "x"),
            Expr::Var(_) => write!(f, "y"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_child(f, e, 4)
            }
            Expr::Bin(op, a, b) => match op {
                BinOp::Add => {
                    fmt_child(f, a, 1)?;
                    write!(f, " + ")?;
                    fmt_child(f, b, 2)
                }
                BinOp::Sub => {
                    fmt_child(f, a, 1)?;
                    write!(f, " - ")?;
                    fmt_child(f, b, 2)
                }
                BinOp::Mul => {
                    fmt_child(f, a, 2)?;
                    write!(f, "*")?;
                    fmt_child(f, b, 3)
                }
                BinOp::Div => {
                    fmt_child(f, a, 2)?;
                    write!(f, "/")?;
                    fmt_child(f, b, 5)
                }
                BinOp::Pow => {
                    fmt_child(f, a, 5)?;
                    write!(f, "^")?;
                    fmt_child(f, b, 4)
                }
            },
            Expr::Call(func, e) => {
                let name = match func {
                    Func::Abs => "abs",
                    Func::Sqrt => "sqrt",
                    Func::Exp => "exp",
                    Func::Sin => "sin",
                    Func::Cos => "cos",
                    Func::Tan => "tan",
                    Func::Atan => "atan",
                };
                write!(f, "{name}({e})")
            }
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
            Expr::Piecewise { pred, then, els } => {
                let op = match pred.op {
                    CmpOp::Lt => "<",
                    CmpOp::Le => "<=",
                    CmpOp::Gt => ">",
                    CmpOp::Ge => ">=",
                };
                write!(f, "piecewise({} {op} {}, {then}, {els})", pred.lhs, pred.rhs)
            }
        }
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(src: &str) -> ScalarField {
        parse_field(src, 2).unwrap()
    }

    #[test]
    fn parses_and_evaluates_basics() {
        assert_eq!(eval1(&p("2 - 1/(1+x^2)"), 0.0).unwrap(), 1.0);
        assert_eq!(eval1(&p("2 - 1/(1+x^2)"), 1.0).unwrap(), 1.5);
        let f = p("cos(x) + 1");
        assert_eq!(eval1(&f, 0.0).unwrap(), 2.0); // sup over R attained at 0
        assert!((eval1(&f, std::f64::consts::PI).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn piecewise_takes_exactly_the_written_branch() {
        let f = p("piecewise(abs(x) < 1, -1, 0)");
        assert_eq!(eval1(&f, 0.5).unwrap(), -1.0);
        assert_eq!(eval1(&f, 1.0).unwrap(), 0.0); // strict `<`: boundary goes to else
        let g = p("piecewise(abs(x) <= 1, -1, 0)");
        assert_eq!(eval1(&g, 1.0).unwrap(), -1.0);
    }

    #[test]
    fn syntax_error_position_is_reported() {
        match parse_field("2**", 1) {
            Err(Error::Syntax { position, .. }) => assert_eq!(position, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_identifier_is_reported() {
        match parse_field("foo(x)", 1) {
            Err(Error::UnknownIdentifier { name, .. }) => assert_eq!(name, "foo"),
            other => panic!("expected unknown identifier, got {other:?}"),
        }
    }

    #[test]
    fn y_rejected_in_one_dimension() {
        assert!(parse_field("x + y", 1).is_err());
        assert!(parse_field("x + y", 2).is_ok());
    }

    #[test]
    fn domain_errors_surface() {
        assert!(matches!(eval1(&p("sqrt(x)"), -1.0), Err(Error::DomainError(_))));
        assert!(matches!(eval1(&p("1/x"), 0.0), Err(Error::DomainError(_))));
        assert!(matches!(eval1(&p("exp(x)"), 1e9), Err(Error::DomainError(_))));
    }

    #[test]
    fn pi_is_a_constant() {
        assert_eq!(eval1(&p("pi"), 0.0).unwrap(), std::f64::consts::PI);
    }

    #[test]
    fn precedence_matches_convention() {
        assert_eq!(eval1(&p("2 + 3*4"), 0.0).unwrap(), 14.0);
        assert_eq!(eval1(&p("2*3^2"), 0.0).unwrap(), 18.0);
        assert_eq!(eval1(&p("-x^2"), 2.0).unwrap(), -4.0); // -(x^2)
        assert_eq!(eval1(&p("2^3^2"), 0.0).unwrap(), 512.0); // right-assoc
    }

    #[test]
    fn print_parse_round_trip_on_samples() {
        for src in [
            "piecewise(abs(x) < 1, -1, 0)",
            "2 - 1/(1+x^2)",
            "cos(x) + 1",
            "min(1, max(-1, 1.7320508075688772*x))",
            "exp(-abs(x))*(x^2 + y^2)",
            "piecewise(x <= -0.7853981633974483, 4, piecewise(x >= 0.7853981633974483, -4, 0))",
        ] {
            let f = p(src);
            let printed = f.to_string();
            let reparsed = parse_field(&printed, 2).unwrap();
            assert_eq!(f, reparsed, "round trip failed for `{src}` -> `{printed}`");
        }
    }
}
