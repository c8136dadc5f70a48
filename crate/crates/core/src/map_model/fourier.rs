//! Finite trigonometric series in two variables.
//!
//! Every expression accepted by the map grammar normalises to a series of
//! the form `c0 + sum_j [ a_j cos(2 pi (m_j x + n_j y)) + b_j sin(...) ]`
//! with integer wave vectors, so periodicity in both variables holds by
//! construction and derivatives are exact.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;

/// Upper bound on the number of modes a series may carry after expansion.
pub const MAX_MODES: usize = 4096;

/// Integer wave vector `(m, n)` in canonical orientation: `m > 0`, or
/// `m == 0 && n >= 0`.
pub type Mode = (i64, i64);

fn canonical(mode: Mode) -> (Mode, f64) {
    let (m, n) = mode;
    if m > 0 || (m == 0 && n >= 0) {
        (mode, 1.0)
    } else {
        ((-m, -n), -1.0)
    }
}

/// Coefficients of `cos` and `sin` for one wave vector.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Coeffs {
    pub cos: f64,
    pub sin: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrigSeries {
    terms: BTreeMap<Mode, Coeffs>,
}

/// Value and first partial derivatives of a series at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet {
    pub value: f64,
    pub dx: f64,
    pub dy: f64,
}

impl TrigSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut s = Self::zero();
        s.add_term((0, 0), Coeffs { cos: c, sin: 0.0 });
        s
    }

    /// `cos_coeff * cos(2 pi (m x + n y) + phase) + sin_coeff * sin(...)`.
    pub fn harmonic(mode: Mode, phase: f64, cos_coeff: f64, sin_coeff: f64) -> Self {
        let (c, s) = (phase.cos(), phase.sin());
        // cos(t + p) = cos t cos p - sin t sin p ; sin(t + p) = sin t cos p + cos t sin p
        let coeffs = Coeffs {
            cos: cos_coeff * c + sin_coeff * s,
            sin: -cos_coeff * s + sin_coeff * c,
        };
        let mut out = Self::zero();
        out.add_term(mode, coeffs);
        out
    }

    fn add_term(&mut self, mode: Mode, coeffs: Coeffs) {
        let (mode, sign) = canonical(mode);
        let entry = self.terms.entry(mode).or_default();
        entry.cos += coeffs.cos;
        if mode != (0, 0) {
            entry.sin += sign * coeffs.sin;
        }
        if entry.cos == 0.0 && entry.sin == 0.0 {
            self.terms.remove(&mode);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The constant term, if the series has no oscillating modes.
    pub fn as_constant(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&(0, 0)).map(|c| c.cos),
            _ => None,
        }
    }

    pub fn depends_on_y(&self) -> bool {
        self.terms.keys().any(|&(_, n)| n != 0)
    }

    pub fn depends_on_x(&self) -> bool {
        self.terms.keys().any(|&(m, _)| m != 0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (Mode, Coeffs)> + '_ {
        self.terms.iter().map(|(&m, &c)| (m, c))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (&m, &c) in &other.terms {
            out.add_term(m, c);
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        let mut out = Self::zero();
        for (&m, &c) in &self.terms {
            out.add_term(
                m,
                Coeffs {
                    cos: c.cos * factor,
                    sin: c.sin * factor,
                },
            );
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Product via the product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (&(m1, n1), a) in &self.terms {
            for (&(m2, n2), b) in &other.terms {
                let sum = (m1 + m2, n1 + n2);
                let diff = (m1 - m2, n1 - n2);
                // cos cos = (cos(d) + cos(s)) / 2 ; sin sin = (cos(d) - cos(s)) / 2
                // sin cos = (sin(s) + sin(d)) / 2 ; cos sin = (sin(s) - sin(d)) / 2
                let cos_d = 0.5 * (a.cos * b.cos + a.sin * b.sin);
                let cos_s = 0.5 * (a.cos * b.cos - a.sin * b.sin);
                let sin_s = 0.5 * (a.sin * b.cos + a.cos * b.sin);
                let sin_d = 0.5 * (a.sin * b.cos - a.cos * b.sin);
                out.add_term(sum, Coeffs { cos: cos_s, sin: sin_s });
                out.add_term(diff, Coeffs { cos: cos_d, sin: sin_d });
            }
        }
        out
    }

    pub fn powi(&self, exponent: u32) -> Self {
        let mut out = Self::constant(1.0);
        for _ in 0..exponent {
            out = out.mul(self);
        }
        out
    }

    /// Series of `(x, y) -> self(x, y + shift)`.
    pub fn shift_y(&self, shift: f64) -> Self {
        let mut out = Self::zero();
        for (&(m, n), c) in &self.terms {
            let phase = TAU * n as f64 * shift;
            out = out.add(&Self::harmonic((m, n), phase, c.cos, c.sin));
        }
        out
    }

    /// Series of `(x, y) -> self(x, -y)`.
    pub fn flip_y(&self) -> Self {
        let mut out = Self::zero();
        for (&(m, n), &c) in &self.terms {
            out.add_term((m, -n), c);
        }
        out
    }

    /// Trigonometric interpolant in `x` of samples taken at `x_j = j / N`.
    pub fn interpolate_x(samples: &[f64]) -> Self {
        let n = samples.len();
        let mut out = Self::zero();
        if n == 0 {
            return out;
        }
        let nf = n as f64;
        for m in 0..=n / 2 {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, &v) in samples.iter().enumerate() {
                let arg = TAU * ((m * j) % n) as f64 / nf;
                a += v * arg.cos();
                b += v * arg.sin();
            }
            let nyquist = n.is_multiple_of(2) && m == n / 2;
            let scale = if m == 0 || nyquist { 1.0 / nf } else { 2.0 / nf };
            let (a, b) = (a * scale, if nyquist { 0.0 } else { b * scale });
            let clean = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
            out.add_term((m as i64, 0), Coeffs { cos: clean(a), sin: clean(b) });
        }
        out
    }

    /// Largest absolute coefficient sum; an upper bound for `sup |self|`.
    pub fn abs_bound(&self) -> f64 {
        self.terms.values().map(|c| c.cos.abs() + c.sin.abs()).sum()
    }

    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for (&(m, n), c) in &self.terms {
            if m == 0 && n == 0 {
                acc += c.cos;
                continue;
            }
            let (s, co) = phase(m, n, x, y).sin_cos();
            acc += c.cos * co + c.sin * s;
        }
        acc
    }

    #[inline]
    pub fn jet(&self, x: f64, y: f64) -> Jet {
        let mut jet = Jet::default();
        for (&(m, n), c) in &self.terms {
            if m == 0 && n == 0 {
                jet.value += c.cos;
                continue;
            }
            let (s, co) = phase(m, n, x, y).sin_cos();
            jet.value += c.cos * co + c.sin * s;
            let d = -c.cos * s + c.sin * co;
            jet.dx += TAU * m as f64 * d;
            jet.dy += TAU * n as f64 * d;
        }
        jet
    }
}

/// `2 pi (m x + n y)` evaluated on the fractional parts of `x` and `y`, so
/// large lifted coordinates do not lose phase accuracy.
#[inline]
fn phase(m: i64, n: i64, x: f64, y: f64) -> f64 {
    let fx = x - x.floor();
    let fy = y - y.floor();
    let t = m as f64 * fx + n as f64 * fy;
    TAU * (t - t.round())
}

fn fmt_num(v: f64) -> String {
    // Shortest round-trip representation, always with a decimal point or
    // exponent so it re-parses as a float literal.
    let s = format!("{v:?}");
    if s.starts_with('-') {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for TrigSeries {
    /// Canonical text form, re-parseable by the map grammar.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        for (&(m, n), c) in &self.terms {
            if (m, n) == (0, 0) {
                parts.push(fmt_num(c.cos));
                continue;
            }
            let arg = format!("2*pi*({m}*x + {n}*y)");
            if c.cos != 0.0 {
                parts.push(format!("{}*cos({arg})", fmt_num(c.cos)));
            }
            if c.sin != 0.0 {
                parts.push(format!("{}*sin({arg})", fmt_num(c.sin)));
            }
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}
