//! Parser for map-definition sources.
//!
//! ```text
//! source     = { statement ( ";" | newline ) } ;
//! statement  = ident "=" expr ;
//! expr       = term { ( "+" | "-" ) term } ;
//! term       = juxtaposed { ( "*" | "/" | "·" ) juxtaposed } ;
//! juxtaposed = unary { power } ;   (* implicit product, binds tighter *)
//! unary      = ( "-" | "+" ) unary | power ;
//! power      = atom [ ( "^" | "**" ) unary ] ;
//! atom       = number | ident | "pi" | "π" | ( "sin" | "cos" ) "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! Recognised statements are `k` (nonzero integer), `phi1`, `phi2`
//! (functions of `x`, `y`), `t` (constant) and `psi` (function of `x`
//! only, applied after the map as a fiber translation). Any other name
//! defines a constant usable in later statements.
//!
//! The coordinates `x` and `y` may only appear inside `sin`/`cos` whose
//! argument is affine, `2 pi (a x + b y) + c` with integer `a`, `b`.
//! Divisors must be constant and exponents nonnegative integers. This
//! makes every accepted perturbation a finite trigonometric series,
//! 1-periodic in both variables.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use super::fourier::{TrigSeries, MAX_MODES};
use crate::error::ParseError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Pi,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eq,
    Sep,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        match c {
            '\n' | ';' => {
                out.push(Token { tok: Tok::Sep, pos });
                i += 1;
            }
            '#' => {
                while i < chars.len() && chars[i].1 != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            '+' => {
                out.push(Token { tok: Tok::Plus, pos });
                i += 1;
            }
            '-' | '−' => {
                out.push(Token { tok: Tok::Minus, pos });
                i += 1;
            }
            '*' => {
                if i + 1 < chars.len() && chars[i + 1].1 == '*' {
                    out.push(Token { tok: Tok::Caret, pos });
                    i += 2;
                } else {
                    out.push(Token { tok: Tok::Star, pos });
                    i += 1;
                }
            }
            '·' | '×' => {
                out.push(Token { tok: Tok::Star, pos });
                i += 1;
            }
            '/' => {
                out.push(Token { tok: Tok::Slash, pos });
                i += 1;
            }
            '^' => {
                out.push(Token { tok: Tok::Caret, pos });
                i += 1;
            }
            '(' => {
                out.push(Token { tok: Tok::LParen, pos });
                i += 1;
            }
            ')' => {
                out.push(Token { tok: Tok::RParen, pos });
                i += 1;
            }
            '=' => {
                out.push(Token { tok: Tok::Eq, pos });
                i += 1;
            }
            'π' => {
                out.push(Token { tok: Tok::Pi, pos });
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                    i += 1;
                }
                if i < chars.len() && (chars[i].1 == 'e' || chars[i].1 == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j].1 == '+' || chars[j].1 == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].1.is_ascii_digit() {
                        i = j;
                        while i < chars.len() && chars[i].1.is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let v: f64 = text.parse().map_err(|_| ParseError {
                    pos,
                    message: format!("malformed number '{text}'"),
                })?;
                out.push(Token { tok: Tok::Num(v), pos });
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].1.is_alphanumeric() || chars[i].1 == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
                let tok = if text == "pi" { Tok::Pi } else { Tok::Ident(text) };
                out.push(Token { tok, pos });
            }
            other => {
                return Err(ParseError {
                    pos,
                    message: format!("unexpected character '{other}'"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::End,
        pos: src.len(),
    });
    Ok(out)
}

/// Intermediate value while folding an expression.
#[derive(Debug, Clone)]
enum Val {
    Const(f64),
    /// `cx * x + cy * y + c0` with at least one nonzero slope.
    Affine { cx: f64, cy: f64, c0: f64 },
    Series(TrigSeries),
}

impl Val {
    fn affine(cx: f64, cy: f64, c0: f64) -> Val {
        if cx == 0.0 && cy == 0.0 {
            Val::Const(c0)
        } else {
            Val::Affine { cx, cy, c0 }
        }
    }
}

struct Parser<'a> {
    toks: Vec<Token>,
    at: usize,
    consts: &'a BTreeMap<String, f64>,
}

fn err<T>(pos: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        pos,
        message: message.into(),
    })
}

fn check_size(s: TrigSeries, pos: usize) -> Result<Val, ParseError> {
    if s.len() > MAX_MODES {
        return err(pos, format!("expression expands to more than {MAX_MODES} modes"));
    }
    Ok(Val::Series(s))
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<Val, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = add(lhs, rhs, pos)?;
                }
                Tok::Minus => {
                    self.bump();
                    let rhs = self.term()?;
                    lhs = add(lhs, neg(rhs), pos)?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Num(_) | Tok::Ident(_) | Tok::Pi | Tok::LParen
        )
    }

    fn term(&mut self) -> Result<Val, ParseError> {
        let mut lhs = self.juxtaposed()?;
        loop {
            let pos = self.pos();
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    let rhs = self.juxtaposed()?;
                    lhs = mul(lhs, rhs, pos)?;
                }
                Tok::Slash => {
                    self.bump();
                    let rhs = self.juxtaposed()?;
                    lhs = div(lhs, rhs, pos)?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    /// Implicit multiplication binds tighter than `*` and `/`, so that
    /// `a/2pi` reads as `a/(2 pi)`.
    fn juxtaposed(&mut self) -> Result<Val, ParseError> {
        let mut lhs = self.unary()?;
        while self.starts_atom() {
            let pos = self.pos();
            let rhs = self.power()?;
            lhs = mul(lhs, rhs, pos)?;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Val, ParseError> {
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(neg(self.unary()?))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Val, ParseError> {
        let base = self.atom()?;
        if *self.peek() != Tok::Caret {
            return Ok(base);
        }
        let pos = self.pos();
        self.bump();
        let exp_pos = self.pos();
        let exponent = match self.unary()? {
            Val::Const(e) => e,
            _ => return err(exp_pos, "exponent must be a constant"),
        };
        match base {
            Val::Const(b) => Ok(Val::Const(b.powf(exponent))),
            other => {
                if exponent < 0.0 || exponent.fract() != 0.0 || exponent > 64.0 {
                    return err(exp_pos, "exponent of a non-constant base must be an integer in 0..=64");
                }
                let n = exponent as u32;
                match other {
                    Val::Series(s) => check_size(s.powi(n), pos),
                    Val::Affine { .. } if n == 1 => Ok(other),
                    Val::Affine { .. } if n == 0 => Ok(Val::Const(1.0)),
                    _ => err(pos, "powers of x or y are not periodic"),
                }
            }
        }
    }

    fn atom(&mut self) -> Result<Val, ParseError> {
        let Token { tok, pos } = self.bump();
        match tok {
            Tok::Num(v) => Ok(Val::Const(v)),
            Tok::Pi => Ok(Val::Const(PI)),
            Tok::LParen => {
                let v = self.expr()?;
                self.expect_rparen()?;
                Ok(v)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Val::affine(1.0, 0.0, 0.0)),
                "y" => Ok(Val::affine(0.0, 1.0, 0.0)),
                "sin" | "cos" => {
                    if *self.peek() != Tok::LParen {
                        return err(self.pos(), format!("expected '(' after {name}"));
                    }
                    self.bump();
                    let arg_pos = self.pos();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    trig(&name, arg, arg_pos)
                }
                _ => match self.consts.get(&name) {
                    Some(&v) => Ok(Val::Const(v)),
                    None => err(pos, format!("unknown identifier '{name}'")),
                },
            },
            Tok::End => err(pos, "unexpected end of input"),
            other => err(pos, format!("unexpected token {other:?}")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            err(self.pos(), "expected ')'")
        }
    }
}

fn neg(v: Val) -> Val {
    match v {
        Val::Const(c) => Val::Const(-c),
        Val::Affine { cx, cy, c0 } => Val::Affine {
            cx: -cx,
            cy: -cy,
            c0: -c0,
        },
        Val::Series(s) => Val::Series(s.neg()),
    }
}

fn bare_coordinate(pos: usize) -> ParseError {
    ParseError {
        pos,
        message: "x and y may only appear inside sin/cos (the map must stay periodic)".into(),
    }
}

fn add(a: Val, b: Val, pos: usize) -> Result<Val, ParseError> {
    use Val::*;
    Ok(match (a, b) {
        (Const(p), Const(q)) => Const(p + q),
        (Const(c), Affine { cx, cy, c0 }) | (Affine { cx, cy, c0 }, Const(c)) => {
            Val::affine(cx, cy, c0 + c)
        }
        (
            Affine {
                cx: ax,
                cy: ay,
                c0: a0,
            },
            Affine {
                cx: bx,
                cy: by,
                c0: b0,
            },
        ) => Val::affine(ax + bx, ay + by, a0 + b0),
        (Series(s), Const(c)) | (Const(c), Series(s)) => {
            return check_size(s.add(&TrigSeries::constant(c)), pos)
        }
        (Series(s), Series(t)) => return check_size(s.add(&t), pos),
        _ => return Err(bare_coordinate(pos)),
    })
}

fn mul(a: Val, b: Val, pos: usize) -> Result<Val, ParseError> {
    use Val::*;
    Ok(match (a, b) {
        (Const(p), Const(q)) => Const(p * q),
        (Const(c), Affine { cx, cy, c0 }) | (Affine { cx, cy, c0 }, Const(c)) => {
            Val::affine(c * cx, c * cy, c * c0)
        }
        (Const(c), Series(s)) | (Series(s), Const(c)) => Series(s.scale(c)),
        (Series(s), Series(t)) => return check_size(s.mul(&t), pos),
        (Affine { .. }, Affine { .. }) => {
            return err(pos, "products of coordinates are not allowed")
        }
        _ => return Err(bare_coordinate(pos)),
    })
}

fn div(a: Val, b: Val, pos: usize) -> Result<Val, ParseError> {
    let d = match b {
        Val::Const(d) => d,
        _ => return err(pos, "divisor must be a constant"),
    };
    if d == 0.0 {
        return err(pos, "division by zero");
    }
    mul(a, Val::Const(1.0 / d), pos)
}

fn trig(name: &str, arg: Val, pos: usize) -> Result<Val, ParseError> {
    let is_sin = name == "sin";
    match arg {
        Val::Const(c) => Ok(Val::Const(if is_sin { c.sin() } else { c.cos() })),
        Val::Affine { cx, cy, c0 } => {
            let m = integer_frequency(cx, pos)?;
            let n = integer_frequency(cy, pos)?;
            let (cc, sc) = if is_sin { (0.0, 1.0) } else { (1.0, 0.0) };
            Ok(Val::Series(TrigSeries::harmonic((m, n), c0, cc, sc)))
        }
        Val::Series(_) => err(
            pos,
            "argument of sin/cos must be affine: 2*pi*(a*x + b*y) + c with integer a, b",
        ),
    }
}

fn integer_frequency(c: f64, pos: usize) -> Result<i64, ParseError> {
    let f = c / TAU;
    let r = f.round();
    if (f - r).abs() > 1e-9 * r.abs().max(1.0) {
        return err(
            pos,
            format!("coefficient {c} is not an integer multiple of 2*pi; the map would not be periodic"),
        );
    }
    Ok(r as i64)
}

/// Fields extracted from a map-definition source.
#[derive(Debug, Clone, Default)]
pub struct ParsedMap {
    pub k: Option<i64>,
    pub phi1: Option<TrigSeries>,
    pub phi2: Option<TrigSeries>,
    pub t: Option<f64>,
    pub psi: Option<TrigSeries>,
}

/// Parse a single expression in the periodic grammar.
pub fn parse_series(src: &str) -> Result<TrigSeries, ParseError> {
    let consts = BTreeMap::new();
    let mut p = Parser {
        toks: lex(src)?,
        at: 0,
        consts: &consts,
    };
    let v = p.expr()?;
    if *p.peek() != Tok::End {
        return err(p.pos(), "trailing input");
    }
    to_series(v, 0)
}

fn to_series(v: Val, pos: usize) -> Result<TrigSeries, ParseError> {
    match v {
        Val::Const(c) => Ok(TrigSeries::constant(c)),
        Val::Series(s) => Ok(s),
        Val::Affine { .. } => Err(bare_coordinate(pos)),
    }
}

/// Parse a full map-definition source into its fields.
pub fn parse_source(src: &str) -> Result<ParsedMap, ParseError> {
    let toks = lex(src)?;
    let mut consts: BTreeMap<String, f64> = BTreeMap::new();
    let mut out = ParsedMap::default();
    let mut at = 0;
    while toks[at].tok != Tok::End {
        if toks[at].tok == Tok::Sep {
            at += 1;
            continue;
        }
        let (name, name_pos) = match &toks[at].tok {
            Tok::Ident(n) => (n.clone(), toks[at].pos),
            other => return err(toks[at].pos, format!("expected a field name, found {other:?}")),
        };
        at += 1;
        if toks[at].tok != Tok::Eq {
            return err(toks[at].pos, format!("expected '=' after '{name}'"));
        }
        at += 1;
        let value_pos = toks[at].pos;
        let mut p = Parser {
            toks: toks.clone(),
            at,
            consts: &consts,
        };
        let v = p.expr()?;
        at = p.at;
        match toks[at].tok {
            Tok::Sep | Tok::End => {}
            _ => return err(toks[at].pos, "expected ';' or end of line"),
        }
        let constant = |v: &Val, what: &str| match v {
            Val::Const(c) => Ok(*c),
            _ => err(value_pos, format!("{what} must be a constant")),
        };
        let duplicate = |present: bool| {
            if present {
                err(name_pos, format!("field '{name}' defined twice"))
            } else {
                Ok(())
            }
        };
        match name.as_str() {
            "k" => {
                duplicate(out.k.is_some())?;
                let c = constant(&v, "k")?;
                if c.fract() != 0.0 || c == 0.0 || c.abs() > 1e6 {
                    return err(value_pos, "k must be a nonzero integer");
                }
                out.k = Some(c as i64);
            }
            "t" => {
                duplicate(out.t.is_some())?;
                out.t = Some(constant(&v, "t")?);
            }
            "phi1" => {
                duplicate(out.phi1.is_some())?;
                out.phi1 = Some(to_series(v, value_pos)?);
            }
            "phi2" => {
                duplicate(out.phi2.is_some())?;
                out.phi2 = Some(to_series(v, value_pos)?);
            }
            "psi" => {
                duplicate(out.psi.is_some())?;
                let s = to_series(v, value_pos)?;
                if s.depends_on_y() {
                    return err(value_pos, "psi may depend on x only");
                }
                out.psi = Some(s);
            }
            "x" | "y" | "sin" | "cos" => {
                return err(name_pos, format!("'{name}' is reserved"));
            }
            _ => {
                let c = constant(&v, "a named parameter")?;
                consts.insert(name, c);
            }
        }
    }
    Ok(out)
}
