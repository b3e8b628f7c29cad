//! Energy definition files.
//!
//! ```text
//! # comment
//! name = my-energy
//! h(t) = t - log(t)
//! f(t) = log(t) + 1/t
//! smoothness = C2
//! ```
//!
//! Expressions use `+ - * / ^`, unary minus, `log`, `exp`, `pow(a, b)`, the
//! constants `e` and `pi`, numeric literals, and the variable `t`. Derivatives
//! are taken symbolically.

use std::fmt;
use std::sync::Arc;

use crate::energy::{ScalarPart, Smoothness, VolIsoSplitEnergy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Log(Box<Expr>),
    Exp(Box<Expr>),
}

use Expr::*;

fn num(x: f64) -> Expr {
    Num(x)
}

fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x + y),
        (Num(z), _) if *z == 0.0 => b,
        (_, Num(z)) if *z == 0.0 => a,
        _ => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x - y),
        (_, Num(z)) if *z == 0.0 => a,
        (Num(z), _) if *z == 0.0 => neg(b),
        _ => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(x), Num(y)) => Num(x * y),
        (Num(z), _) | (_, Num(z)) if *z == 0.0 => Num(0.0),
        (Num(o), _) if *o == 1.0 => b,
        (_, Num(o)) if *o == 1.0 => a,
        _ => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Num(z), _) if *z == 0.0 => Num(0.0),
        (_, Num(o)) if *o == 1.0 => a,
        _ => Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(x) => Num(-x),
        Neg(inner) => *inner,
        other => Neg(Box::new(other)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match &b {
        Num(z) if *z == 0.0 => Num(1.0),
        Num(o) if *o == 1.0 => a,
        _ => Pow(Box::new(a), Box::new(b)),
    }
}

impl Expr {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Num(x) => *x,
            Var => t,
            Neg(a) => -a.eval(t),
            Add(a, b) => a.eval(t) + b.eval(t),
            Sub(a, b) => a.eval(t) - b.eval(t),
            Mul(a, b) => a.eval(t) * b.eval(t),
            Div(a, b) => a.eval(t) / b.eval(t),
            Pow(a, b) => match **b {
                Num(n) if n.fract() == 0.0 && n.abs() <= i32::MAX as f64 => a.eval(t).powi(n as i32),
                _ => a.eval(t).powf(b.eval(t)),
            },
            Log(a) => a.eval(t).ln(),
            Exp(a) => a.eval(t).exp(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Num(_) => true,
            Var => false,
            Neg(a) | Log(a) | Exp(a) => a.is_constant(),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) | Pow(a, b) => {
                a.is_constant() && b.is_constant()
            }
        }
    }

    /// `d/dt` of the expression.
    pub fn derivative(&self) -> Expr {
        match self {
            Num(_) => num(0.0),
            Var => num(1.0),
            Neg(a) => neg(a.derivative()),
            Add(a, b) => add(a.derivative(), b.derivative()),
            Sub(a, b) => sub(a.derivative(), b.derivative()),
            Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), num(2.0)),
            ),
            Pow(a, b) if b.is_constant() => {
                let n = b.eval(0.0);
                mul(
                    mul(num(n), pow((**a).clone(), num(n - 1.0))),
                    a.derivative(),
                )
            }
            Pow(a, b) => mul(
                self.clone(),
                add(
                    mul(b.derivative(), Log(a.clone())),
                    div(mul((**b).clone(), a.derivative()), (**a).clone()),
                ),
            ),
            Log(a) => div(a.derivative(), (**a).clone()),
            Exp(a) => mul(self.clone(), a.derivative()),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(x) => write!(f, "{x}"),
            Var => write!(f, "t"),
            Neg(a) => write!(f, "-({a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, b) => write!(f, "({a})^({b})"),
            Log(a) => write!(f, "log({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
    text: String,
}

fn lex(src: &str, line: usize, offset: usize) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = offset + i + 1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
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
            let value = text.parse::<f64>().map_err(|_| Error::Parse {
                line,
                column,
                token: text.clone(),
                message: "malformed number".into(),
            })?;
            out.push(Token {
                tok: Tok::Num(value),
                column,
                text,
            });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token {
                tok: Tok::Ident(text.clone()),
                column,
                text,
            });
        } else if "+-*/^(),".contains(c) {
            out.push(Token {
                tok: Tok::Op(c),
                column,
                text: c.to_string(),
            });
            i += 1;
        } else {
            return Err(Error::Parse {
                line,
                column,
                token: c.to_string(),
                message: "unexpected character".into(),
            });
        }
    }
    out.push(Token {
        tok: Tok::End,
        column: offset + chars.len() + 1,
        text: "<end of line>".into(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    line: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, tok: &Token, message: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            column: tok.column,
            token: tok.text.clone(),
            message: message.into(),
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let t = self.next();
        if t.tok == Tok::Op(c) {
            Ok(())
        } else {
            Err(self.error(&t, format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek().tok {
                Tok::Op('+') => {
                    self.next();
                    lhs = Add(Box::new(lhs), Box::new(self.term()?));
                }
                Tok::Op('-') => {
                    self.next();
                    lhs = Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek().tok {
                Tok::Op('*') => {
                    self.next();
                    lhs = Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Tok::Op('/') => {
                    self.next();
                    lhs = Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek().tok == Tok::Op('-') {
            self.next();
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.peek().tok == Tok::Op('+') {
            self.next();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek().tok == Tok::Op('^') {
            self.next();
            let exponent = self.unary()?;
            return Ok(Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = self.next();
        match &tok.tok {
            Tok::Num(x) => Ok(Num(*x)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Var),
                "e" => Ok(Num(std::f64::consts::E)),
                "pi" => Ok(Num(std::f64::consts::PI)),
                "log" | "exp" | "pow" => {
                    self.expect('(')?;
                    let a = self.expr()?;
                    let out = match name.as_str() {
                        "log" => Log(Box::new(a)),
                        "exp" => Exp(Box::new(a)),
                        _ => {
                            self.expect(',')?;
                            let b = self.expr()?;
                            Pow(Box::new(a), Box::new(b))
                        }
                    };
                    self.expect(')')?;
                    Ok(out)
                }
                _ => Err(self.error(&tok, "unknown identifier")),
            },
            Tok::End => Err(self.error(&tok, "unexpected end of expression")),
            Tok::Op(_) => Err(self.error(&tok, "unexpected operator")),
        }
    }
}

/// Parses a single expression in `t`. `line` and `offset` position error
/// reports within a surrounding file.
pub fn parse_expr_at(src: &str, line: usize, offset: usize) -> Result<Expr> {
    let tokens = lex(src, line, offset)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        line,
    };
    let e = p.expr()?;
    let rest = p.peek().clone();
    if rest.tok != Tok::End {
        return Err(p.error(&rest, "unexpected trailing input"));
    }
    Ok(e)
}

pub fn parse_expr(src: &str) -> Result<Expr> {
    parse_expr_at(src, 1, 0)
}

/// A parsed energy definition file.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyDefinition {
    pub name: String,
    pub h: Expr,
    pub f: Expr,
    pub smoothness: Smoothness,
}

impl EnergyDefinition {
    pub fn parse(src: &str) -> Result<Self> {
        let mut name = None;
        let mut h = None;
        let mut f = None;
        let mut smoothness = Smoothness::C2;
        let mut last_line = 0;
        for (idx, raw) in src.lines().enumerate() {
            let line = idx + 1;
            last_line = line;
            let content = raw.split('#').next().unwrap_or("");
            if content.trim().is_empty() {
                continue;
            }
            let Some(eq) = content.find('=') else {
                let column = content.len() - content.trim_start().len() + 1;
                return Err(Error::Parse {
                    line,
                    column,
                    token: content.trim().to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let key = content[..eq].trim();
            let rhs = &content[eq + 1..];
            let rhs_offset = content[..eq + 1].chars().count();
            let key_col = content.len() - content.trim_start().len() + 1;
            match key.replace(' ', "").as_str() {
                "name" => name = Some(rhs.trim().to_string()),
                "h(t)" => h = Some(parse_expr_at(rhs, line, rhs_offset)?),
                "f(t)" => f = Some(parse_expr_at(rhs, line, rhs_offset)?),
                "smoothness" => {
                    smoothness = match rhs.trim() {
                        "C0" => Smoothness::C0,
                        "C1" => Smoothness::C1,
                        "C2" => Smoothness::C2,
                        other => {
                            return Err(Error::Parse {
                                line,
                                column: rhs_offset + rhs.len() - rhs.trim_start().len() + 1,
                                token: other.to_string(),
                                message: "smoothness must be C0, C1 or C2".into(),
                            })
                        }
                    }
                }
                _ => {
                    return Err(Error::Parse {
                        line,
                        column: key_col,
                        token: key.to_string(),
                        message: "unknown key; expected name, h(t), f(t) or smoothness".into(),
                    })
                }
            }
        }
        let missing = |what: &str| Error::Parse {
            line: last_line + 1,
            column: 1,
            token: "<end of file>".into(),
            message: format!("missing `{what}` definition"),
        };
        Ok(EnergyDefinition {
            name: name.unwrap_or_else(|| "custom".into()),
            h: h.ok_or_else(|| missing("h(t)"))?,
            f: f.ok_or_else(|| missing("f(t)"))?,
            smoothness,
        })
    }

    /// Split energy with symbolic first and second derivatives.
    pub fn to_split(&self) -> VolIsoSplitEnergy {
        VolIsoSplitEnergy::new(
            self.name.clone(),
            scalar_part(&self.h, self.smoothness),
            scalar_part(&self.f, self.smoothness),
        )
    }
}

fn scalar_part(e: &Expr, smoothness: Smoothness) -> ScalarPart {
    let d1 = e.derivative();
    let d2 = d1.derivative();
    let (e, d1, d2) = (Arc::new(e.clone()), Arc::new(d1), Arc::new(d2));
    ScalarPart::new(move |t| e.eval(t))
        .with_derivatives(move |t| d1.eval(t), move |t| d2.eval(t))
        .with_smoothness(smoothness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse_expr("1 + 2 * 3").unwrap().eval(0.0), 7.0);
        assert_eq!(parse_expr("2 ^ 3 ^ 2").unwrap().eval(0.0), 512.0);
        assert_eq!(parse_expr("-2 ^ 2").unwrap().eval(0.0), -4.0);
        assert_eq!(parse_expr("8 / 4 / 2").unwrap().eval(0.0), 1.0);
        assert_eq!(parse_expr("10 - 3 - 2").unwrap().eval(0.0), 5.0);
        assert_eq!(parse_expr("pow(t, 2) + 1e-1").unwrap().eval(3.0), 9.1);
        assert!((parse_expr("log(e) + exp(0) + pi").unwrap().eval(0.0) - (2.0 + std::f64::consts::PI)).abs() < 1e-15);
    }

    #[test]
    fn symbolic_derivatives() {
        let h = parse_expr("t - log(t)").unwrap();
        let d1 = h.derivative();
        let d2 = d1.derivative();
        for t in [0.3, 1.0, 7.5] {
            assert!((d1.eval(t) - (1.0 - 1.0 / t)).abs() < 1e-14);
            assert!((d2.eval(t) - 1.0 / (t * t)).abs() < 1e-14);
        }
        let g = parse_expr("pow(t, t) + exp(2*t) / t").unwrap();
        let d = g.derivative();
        for t in [0.5, 1.3, 2.0] {
            let fd = (g.eval(t + 1e-6) - g.eval(t - 1e-6)) / 2e-6;
            assert!((d.eval(t) - fd).abs() < 1e-6 * fd.abs().max(1.0));
        }
    }

    #[test]
    fn parse_file() {
        let src = "# W0\nname = w0-file\nh(t) = t - log(t)\nf(t) = log(t) + 1/t  # volumetric\n";
        let def = EnergyDefinition::parse(src).unwrap();
        assert_eq!(def.name, "w0-file");
        let split = def.to_split();
        let g = split.to_ordered();
        assert!((g.value(E.powi(4), E.powi(3)) - (E + 6.0 + E.powi(-7))).abs() < 1e-12);
        assert!((split.f_second(1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn error_positions() {
        match parse_expr("t + * 2") {
            Err(Error::Parse { column, token, .. }) => {
                assert_eq!(column, 5);
                assert_eq!(token, "*");
            }
            other => panic!("{other:?}"),
        }
        match EnergyDefinition::parse("h(t) = t\nf(t) = log(t $ 1)\n") {
            Err(Error::Parse { line, column, token, .. }) => {
                assert_eq!((line, column), (2, 14));
                assert_eq!(token, "$");
            }
            other => panic!("{other:?}"),
        }
        match EnergyDefinition::parse("h(t) = t\nf(t) = sin(t)\n") {
            Err(Error::Parse { line, column, token, .. }) => {
                assert_eq!((line, column), (2, 8));
                assert_eq!(token, "sin");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            EnergyDefinition::parse("h(t) = t\n"),
            Err(Error::Parse { .. })
        ));
        assert!(parse_expr("(t + 1").is_err());
        assert!(parse_expr("t t").is_err());
        assert!(EnergyDefinition::parse("g(t) = t").is_err());
    }
}
