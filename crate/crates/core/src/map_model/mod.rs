//! Lifts of torus diffeomorphisms homotopic to a Dehn twist.
//!
//! A lift has the form
//!
//! ```text
//! x' = x + k y + phi1(x, y)
//! y' = y + phi2(x, y) + t + psi(x')
//! ```
//!
//! where `phi1`, `phi2`, `psi` are finite trigonometric series. `t` is the
//! vertical offset of the family `f + (0, t)` and `psi` is an optional fiber
//! translation applied after the map.

pub mod expr;
pub mod fourier;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{Mat2, Point};
pub use fourier::{Jet, TrigSeries};

/// Lattice resolution used by the audits run at construction.
pub const AUDIT_GRID: usize = 64;
/// Relative padding applied to sampled constants.
pub const DEFAULT_PAD: f64 = 0.05;
/// Lower clamp for sampled constants.
pub const CONST_FLOOR: f64 = 1e-12;

/// Anything that can be audited for equivariance under the deck group.
pub trait Lift {
    fn degree(&self) -> i64;
    fn apply(&self, z: Point) -> Point;
}

#[derive(Debug, Clone)]
pub struct LiftSpec {
    k: i64,
    phi1: TrigSeries,
    phi2: TrigSeries,
    t: f64,
    psi: TrigSeries,
    /// Sampled lower bound of `|k + d(phi1)/dy|`, padded.
    twist_floor: f64,
}

impl LiftSpec {
    /// Build a lift and run the twist audit on a 64x64 lattice.
    pub fn new(k: i64, phi1: TrigSeries, phi2: TrigSeries, t: f64) -> Result<Self> {
        Self::with_parts(k, phi1, phi2, t, TrigSeries::zero())
    }

    fn with_parts(k: i64, phi1: TrigSeries, phi2: TrigSeries, t: f64, psi: TrigSeries) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidArgument("twist degree k must be nonzero".into()));
        }
        if !t.is_finite() {
            return Err(Error::InvalidArgument("t must be finite".into()));
        }
        let floor = twist_audit(k, &phi1, AUDIT_GRID)?;
        Ok(Self {
            k,
            phi1,
            phi2,
            t,
            psi,
            twist_floor: (floor / (1.0 + DEFAULT_PAD)).max(CONST_FLOOR),
        })
    }

    /// `(x + k y, y + t)`.
    pub fn integrable(k: i64, t: f64) -> Self {
        Self::new(k, TrigSeries::zero(), TrigSeries::zero(), t).expect("integrable lift is a twist map")
    }

    /// The standard map `phi1 = phi2 = (a / 2 pi) sin(2 pi x)` with `k = 1`.
    pub fn standard(a: f64) -> Self {
        let s = TrigSeries::harmonic((1, 0), 0.0, 0.0, a / std::f64::consts::TAU);
        Self::new(1, s.clone(), s, 0.0).expect("standard map is a twist map")
    }

    pub fn k(&self) -> i64 {
        self.k
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn phi1(&self) -> &TrigSeries {
        &self.phi1
    }

    pub fn phi2(&self) -> &TrigSeries {
        &self.phi2
    }

    pub fn psi(&self) -> &TrigSeries {
        &self.psi
    }

    pub fn twist_floor(&self) -> f64 {
        self.twist_floor
    }

    /// Whether the vertical displacement is independent of `y`.
    pub fn vertical_displacement_is_y_free(&self) -> bool {
        !self.phi2.depends_on_y() && self.psi.is_zero()
    }

    /// Same map with offset `t` replaced.
    pub fn with_t(&self, t: f64) -> Self {
        Self { t, ..self.clone() }
    }

    /// `f + (0, c)`.
    pub fn translated(&self, c: f64) -> Self {
        self.with_t(self.t + c)
    }

    /// `(x, y) -> f(x, y + c/2) + (0, c/2)`, conjugate to `f + (0, c)` and
    /// strongly increasing in `c`.
    pub fn conjugated(&self, c: f64) -> Self {
        let h = c / 2.0;
        let phi1 = self
            .phi1
            .shift_y(h)
            .add(&TrigSeries::constant(self.k as f64 * h));
        let phi2 = self.phi2.shift_y(h);
        Self::with_parts(self.k, phi1, phi2, self.t + c, self.psi.clone())
            .expect("conjugation preserves the twist condition")
    }

    /// Conjugate by the flip `(x, y) -> (x, -y)`. The result has degree `-k`.
    pub fn flipped(&self) -> Self {
        Self::with_parts(
            -self.k,
            self.phi1.flip_y(),
            self.phi2.flip_y().neg(),
            -self.t,
            self.psi.neg(),
        )
        .expect("flip preserves the twist condition")
    }

    /// Compose with the fiber translation `(x, y) -> (x, y + psi(x))`.
    pub fn with_fiber_translation(&self, psi: &TrigSeries) -> Result<Self> {
        if psi.depends_on_y() {
            return Err(Error::InvalidArgument("fiber translation may depend on x only".into()));
        }
        Ok(Self {
            psi: self.psi.add(psi),
            ..self.clone()
        })
    }

    /// Compose with a fiber translation given by equally spaced samples of
    /// `psi` on `[0, 1)`, interpolated trigonometrically.
    pub fn compose_fiber_translation(&self, samples: &[f64]) -> Result<Self> {
        self.with_fiber_translation(&TrigSeries::interpolate_x(samples))
    }

    #[inline]
    pub fn apply(&self, z: Point) -> Point {
        let xp = z.x + self.k as f64 * z.y + self.phi1.eval(z.x, z.y);
        let mut yp = z.y + self.phi2.eval(z.x, z.y) + self.t;
        if !self.psi.is_zero() {
            yp += self.psi.eval(xp, 0.0);
        }
        Point::new(xp, yp)
    }

    /// Image and differential at `z`.
    #[inline]
    pub fn apply_with_jacobian(&self, z: Point) -> (Point, Mat2) {
        let j1 = self.phi1.jet(z.x, z.y);
        let j2 = self.phi2.jet(z.x, z.y);
        let xp = z.x + self.k as f64 * z.y + j1.value;
        let mut yp = z.y + j2.value + self.t;
        let mut m = Mat2::new(1.0 + j1.dx, self.k as f64 + j1.dy, j2.dx, 1.0 + j2.dy);
        if !self.psi.is_zero() {
            let jp = self.psi.jet(xp, 0.0);
            yp += jp.value;
            m.c += jp.dx * m.a;
            m.d += jp.dx * m.b;
        }
        (Point::new(xp, yp), m)
    }

    pub fn jacobian(&self, z: Point) -> Mat2 {
        self.apply_with_jacobian(z).1
    }

    /// First coordinate of the image.
    #[inline]
    pub fn x_image(&self, x: f64, y: f64) -> f64 {
        x + self.k as f64 * y + self.phi1.eval(x, y)
    }

    /// Preimage of `w` by Newton's method, using deck equivariance to work
    /// near the fundamental domain.
    pub fn inverse(&self, w: Point) -> Option<Point> {
        let m = w.y.floor();
        let n = (w.x - self.k as f64 * m).floor();
        let w0 = Point::new(w.x - n - self.k as f64 * m, w.y - m);
        let shift = Point::new(n, m);
        // Initial guesses: undo the vertical then horizontal parts.
        let y0 = w0.y - self.t - self.psi.eval(w0.x, 0.0);
        let x0 = w0.x - self.k as f64 * y0;
        let mut guesses = vec![Point::new(x0, y0)];
        for i in 0..8 {
            for j in 0..8 {
                let y = y0 + (j as f64 - 3.5) * 0.25;
                let x = w0.x - self.k as f64 * y + (i as f64 - 3.5) * 0.125;
                guesses.push(Point::new(x, y));
            }
        }
        for g in guesses {
            if let Some(z) = self.newton_inverse(w0, g) {
                return Some(z + shift);
            }
        }
        None
    }

    fn newton_inverse(&self, w: Point, mut z: Point) -> Option<Point> {
        let mut r = self.apply(z) - w;
        for _ in 0..60 {
            if r.norm() < 1e-14 {
                break;
            }
            let (_, jac) = self.apply_with_jacobian(z);
            let step = jac.inverse()?.apply(r);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let cand = z - step * lambda;
                let rc = self.apply(cand) - w;
                if rc.norm() < r.norm() {
                    z = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        (r.norm() < 1e-11).then_some(z)
    }

    /// Canonical re-parseable text of the map.
    pub fn canonical_text(&self) -> String {
        let mut s = format!(
            "k = {}\nphi1 = {}\nphi2 = {}\nt = {}\n",
            self.k,
            self.phi1,
            self.phi2,
            fmt_const(self.t)
        );
        if !self.psi.is_zero() {
            s.push_str(&format!("psi = {}\n", self.psi));
        }
        s
    }

    /// SHA-256 of the canonical text, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }
}

fn fmt_const(v: f64) -> String {
    let s = format!("{v:?}");
    if s.starts_with('-') {
        format!("({s})")
    } else {
        s
    }
}

impl Lift for LiftSpec {
    fn degree(&self) -> i64 {
        self.k
    }
    fn apply(&self, z: Point) -> Point {
        LiftSpec::apply(self, z)
    }
}

/// Minimum of `sign(k) (k + d(phi1)/dy)` over an `n x n` lattice; errors if
/// it is not positive somewhere.
fn twist_audit(k: i64, phi1: &TrigSeries, n: usize) -> Result<f64> {
    let sign = k.signum() as f64;
    let mut min = f64::INFINITY;
    if !phi1.depends_on_y() {
        return Ok(k.abs() as f64);
    }
    for i in 0..n {
        for j in 0..n {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            let v = k as f64 + phi1.jet(x, y).dy;
            if sign * v <= 0.0 {
                return Err(Error::TwistViolation { x, y, value: v });
            }
            min = min.min(sign * v);
        }
    }
    Ok(min)
}

/// Parse a map-definition source and audit it.
pub fn parse_lift(text: &str) -> Result<LiftSpec> {
    let parsed = expr::parse_source(text)?;
    let k = parsed.k.ok_or(Error::MissingField("k"))?;
    let lift = LiftSpec::with_parts(
        k,
        parsed.phi1.unwrap_or_default(),
        parsed.phi2.unwrap_or_default(),
        parsed.t.unwrap_or(0.0),
        parsed.psi.unwrap_or_default(),
    )?;
    let report = deck_audit(&lift, AUDIT_GRID * AUDIT_GRID);
    if !report.passed {
        return Err(Error::DeckViolation {
            deviation: report.max_deviation,
            x: report.worst.x,
            y: report.worst.y,
        });
    }
    Ok(lift)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeckReport {
    pub max_deviation: f64,
    pub worst: Point,
    pub passed: bool,
}

/// Tolerance of the deck audit.
pub const DECK_TOL: f64 = 1e-9;

/// Max over sample points and `(n, m)` in `{-1, 0, 1}^2` of
/// `|f(x + n, y + m) - f(x, y) - (n + k m, m)|`.
pub fn deck_audit<L: Lift + ?Sized>(map: &L, samples: usize) -> DeckReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let k = map.degree() as f64;
    let mut report = DeckReport {
        max_deviation: 0.0,
        worst: Point::default(),
        passed: true,
    };
    for _ in 0..samples.max(1) {
        let z = Point::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let base = map.apply(z);
        for n in -1..=1 {
            for m in -1..=1 {
                let (nf, mf) = (n as f64, m as f64);
                let img = map.apply(z + Point::new(nf, mf));
                let dev = (img - base - Point::new(nf + k * mf, mf)).norm();
                let dev = if dev.is_nan() { f64::INFINITY } else { dev };
                if dev > report.max_deviation {
                    report.max_deviation = dev;
                    report.worst = z;
                }
            }
        }
    }
    report.passed = report.max_deviation < DECK_TOL;
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistConstants {
    /// Lower bound of `|k + d(phi1)/dy|`.
    pub k_tw: f64,
    /// Bound of the vertical displacement `|y' - y - t|`.
    pub a: f64,
    /// Bound of `|d(phi1)/dx|`.
    pub b: f64,
    /// Bound of the operator norms of `Df` and `Df^{-1}`.
    pub m: f64,
    pub pad: f64,
}

/// Sampled constants on an `n x n` lattice of the unit square, padded by
/// [`DEFAULT_PAD`] and clamped below by [`CONST_FLOOR`].
pub fn twist_constants(lift: &LiftSpec, samples: usize) -> Result<TwistConstants> {
    twist_constants_padded(lift, samples, DEFAULT_PAD)
}

pub fn twist_constants_padded(lift: &LiftSpec, samples: usize, pad: f64) -> Result<TwistConstants> {
    let n = samples.max(1);
    let sign = lift.k.signum() as f64;
    let mut k_tw = f64::INFINITY;
    let (mut a, mut b, mut m) = (0.0f64, 0.0f64, 1.0f64);
    for i in 0..n {
        for j in 0..n {
            let z = Point::new(i as f64 / n as f64, j as f64 / n as f64);
            let j1 = lift.phi1.jet(z.x, z.y);
            let twist = lift.k as f64 + j1.dy;
            if sign * twist <= 0.0 {
                return Err(Error::TwistViolation {
                    x: z.x,
                    y: z.y,
                    value: twist,
                });
            }
            k_tw = k_tw.min(twist.abs());
            b = b.max(j1.dx.abs());
            let (img, jac) = lift.apply_with_jacobian(z);
            a = a.max((img.y - z.y - lift.t).abs());
            let (smax, smin) = jac.singular_values();
            m = m.max(smax).max(if smin > 0.0 { 1.0 / smin } else { f64::INFINITY });
        }
    }
    let up = 1.0 + pad;
    Ok(TwistConstants {
        k_tw: (k_tw / up).max(CONST_FLOOR),
        a: (a * up).max(CONST_FLOOR),
        b: (b * up).max(CONST_FLOOR),
        m: (m * up).max(1.0),
        pad,
    })
}

/// Maximum number of stride expansions while bracketing `g`.
pub const MAX_EXPANSIONS: usize = 100_000;

/// `(g, g')`: the height `g` with `p1 f(x, g) = x'`, and `g' = p2 f(x, g)`.
pub fn generating_pair(lift: &LiftSpec, x: f64, xprime: f64) -> Result<(f64, f64)> {
    let g = solve_g(lift, x, xprime)?;
    Ok((g, lift.apply(Point::new(x, g)).y))
}

fn solve_g(lift: &LiftSpec, x: f64, xprime: f64) -> Result<f64> {
    let k = lift.k as f64;
    let sign = k.signum();
    // F is increasing in y after multiplying by sign(k).
    let f = |y: f64| sign * (lift.x_image(x, y) - xprime);
    let y0 = (xprime - x) / k;
    let stride = 1.0 / (2.0 * lift.twist_floor * k.abs());
    let f0 = f(y0);
    if f0 == 0.0 {
        return Ok(y0);
    }
    let dir = if f0 > 0.0 { -1.0 } else { 1.0 };
    let (mut lo, mut hi) = (y0, y0);
    let mut found = false;
    let mut expansions = 0;
    let mut prev = y0;
    while expansions < MAX_EXPANSIONS {
        expansions += 1;
        let next = prev + dir * stride;
        if f(next).signum() != f0.signum() {
            (lo, hi) = if dir > 0.0 { (prev, next) } else { (next, prev) };
            found = true;
            break;
        }
        prev = next;
    }
    if !found {
        return Err(Error::BracketFailure { expansions });
    }
    let mut flo = f(lo);
    while hi - lo > 1e-12 * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..3 {
        let jet = lift.phi1.jet(x, y);
        let fy = lift.x_image(x, y) - xprime;
        let dfdy = k + jet.dy;
        if fy == 0.0 || dfdy == 0.0 {
            break;
        }
        let cand = y - fy / dfdy;
        // Keep the polish inside the certified bracket.
        if cand >= lo - 1e-12 && cand <= hi + 1e-12 {
            y = cand;
        }
    }
    Ok(y)
}

/// Outcome of comparing two lifts in the generating-pair order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Equal,
    /// `L1 <= L2`: `g2 <= g1` and `g1' <= g2'` everywhere.
    LessEq,
    GreaterEq,
    /// Strict inequalities everywhere.
    StrictlyLess,
    StrictlyGreater,
    Incomparable,
}

/// Tolerance below which differences of generating pairs count as zero.
pub const ORDER_TOL: f64 = 1e-12;

/// Compare `l1` with `l2` on a `grid x grid` sample of the fundamental
/// domain `x in [0, 1)`, `x' - x in [0, |k|)`.
pub fn compare_order(l1: &LiftSpec, l2: &LiftSpec, grid: usize) -> Result<Order> {
    if l1.k != l2.k {
        return Err(Error::InvalidArgument("order comparison needs equal twist degree".into()));
    }
    let n = grid.max(1);
    let span = l1.k.abs() as f64;
    // Signs of (g1 - g2) and (g2' - g1'); L1 <= L2 wants both >= 0.
    let (mut pos, mut neg, mut zero) = (false, false, false);
    let (mut strict_le, mut strict_ge) = (true, true);
    for i in 0..n {
        for j in 0..n {
            let x = i as f64 / n as f64;
            let xp = x + span * j as f64 / n as f64;
            let (g1, h1) = generating_pair(l1, x, xp)?;
            let (g2, h2) = generating_pair(l2, x, xp)?;
            for d in [g1 - g2, h2 - h1] {
                if d > ORDER_TOL {
                    pos = true;
                    strict_ge = false;
                } else if d < -ORDER_TOL {
                    neg = true;
                    strict_le = false;
                } else {
                    zero = true;
                    strict_le = false;
                    strict_ge = false;
                }
            }
        }
    }
    let _ = zero;
    Ok(match (pos, neg) {
        (false, false) => Order::Equal,
        (true, false) if strict_le => Order::StrictlyLess,
        (true, false) => Order::LessEq,
        (false, true) if strict_ge => Order::StrictlyGreater,
        (false, true) => Order::GreaterEq,
        (true, true) => Order::Incomparable,
    })
}

/// The annulus map `f^q(.) - (0, p)`.
#[derive(Debug, Clone)]
pub struct AnnulusMap {
    pub base: LiftSpec,
    pub q: u32,
    pub p: i64,
}

impl AnnulusMap {
    pub fn new(base: LiftSpec, q: u32, p: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        Ok(Self { base, q, p })
    }

    /// Image in the universal cover: `f^q(z) - (0, p)`.
    pub fn apply_lifted(&self, z: Point) -> Point {
        let mut w = z;
        for _ in 0..self.q {
            w = self.base.apply(w);
        }
        w - Point::new(0.0, self.p as f64)
    }

    /// Image with `x` reduced to `[0, 1)`.
    pub fn apply(&self, z: Point) -> Point {
        let mut w = z;
        for _ in 0..self.q {
            w = self.base.apply(w).wrap_x();
        }
        w - Point::new(0.0, self.p as f64)
    }

    /// The lifted orbit `z, f(z), ..., f^q(z)` (without the `-(0, p)`).
    pub fn trace(&self, z: Point) -> Vec<Point> {
        let mut out = Vec::with_capacity(self.q as usize + 1);
        out.push(z);
        let mut w = z;
        for _ in 0..self.q {
            w = self.base.apply(w);
            out.push(w);
        }
        out
    }

    /// Lifted image and differential by the chain rule.
    pub fn apply_with_jacobian(&self, z: Point) -> (Point, Mat2) {
        let mut w = z;
        let mut jac = Mat2::IDENTITY;
        for _ in 0..self.q {
            let (next, j) = self.base.apply_with_jacobian(w);
            jac = j.mul(&jac);
            w = next;
        }
        (w - Point::new(0.0, self.p as f64), jac)
    }

    pub fn inverse(&self, w: Point) -> Option<Point> {
        let mut z = w + Point::new(0.0, self.p as f64);
        for _ in 0..self.q {
            z = self.base.inverse(z)?;
        }
        Some(z)
    }

    /// Conjugate by `(x, y) -> (x, -y)`.
    pub fn flipped(&self) -> Self {
        Self {
            base: self.base.flipped(),
            q: self.q,
            p: -self.p,
        }
    }
}

/// `f^q(.) - (0, p)` as an annulus map.
pub fn power_minus(lift: &LiftSpec, q: u32, p: i64) -> Result<AnnulusMap> {
    AnnulusMap::new(lift.clone(), q, p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrable_images() {
        let l = parse_lift("k=1; phi1=0; phi2=0").unwrap();
        assert_eq!(l.apply(Point::new(0.25, 0.5)), Point::new(0.75, 0.5));
        let l = l.with_t(0.3);
        assert_eq!(l.apply(Point::new(0.0, 0.0)), Point::new(0.0, 0.3));
    }

    #[test]
    fn standard_fixed_point() {
        let l = parse_lift("a = 0.5; k=1; phi1=(a/2π)·sin(2πx); phi2=(a/2π)·sin(2πx)").unwrap();
        assert_eq!(l.apply(Point::new(0.0, 0.0)), Point::new(0.0, 0.0));
        let z = Point::new(0.3, 0.2);
        assert!((l.apply(z) - LiftSpec::standard(0.5).apply(z)).norm() < 1e-15);
    }

    #[test]
    fn rejects_bare_y() {
        assert!(matches!(parse_lift("k=1; phi1=2·y"), Err(Error::Parse(_))));
    }

    #[test]
    fn twist_violation_names_point() {
        let err = parse_lift("k=1; phi1 = 0.5*sin(2*pi*y)").unwrap_err();
        match err {
            Error::TwistViolation { value, .. } => assert!(value <= 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_k() {
        assert!(matches!(parse_lift("phi1 = 0"), Err(Error::MissingField("k"))));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let l = parse_lift("k=2; phi1=0.1 sin(2 pi (x + y)); phi2 = 0.2 cos(2 pi x); psi = 0.05 sin(2 pi x)").unwrap();
        let z = Point::new(0.37, -0.41);
        let jac = l.jacobian(z);
        let h = 1e-6;
        let dx = (l.apply(z + Point::new(h, 0.0)) - l.apply(z - Point::new(h, 0.0))) * (0.5 / h);
        let dy = (l.apply(z + Point::new(0.0, h)) - l.apply(z - Point::new(0.0, h))) * (0.5 / h);
        assert!((jac.a - dx.x).abs() < 1e-7 && (jac.c - dx.y).abs() < 1e-7);
        assert!((jac.b - dy.x).abs() < 1e-7 && (jac.d - dy.y).abs() < 1e-7);
    }

    #[test]
    fn inverse_round_trip() {
        let l = LiftSpec::standard(2.0).with_t(0.1);
        for &(x, y) in &[(0.1, 0.2), (3.7, -2.4), (-0.5, 9.1)] {
            let z = Point::new(x, y);
            let back = l.inverse(l.apply(z)).unwrap();
            assert!((back - z).norm() < 1e-10, "{back:?} vs {z:?}");
        }
    }

    #[test]
    fn canonical_text_reparses_to_same_map() {
        let l = parse_lift("k=-1; phi1=0.1 cos(2 pi (x - y)); phi2 = -0.3 sin(2 pi x)^2; t = -0.25").unwrap();
        let again = parse_lift(&l.canonical_text()).unwrap();
        assert_eq!(l.hash(), again.hash());
        let z = Point::new(0.12, 0.34);
        assert_eq!(l.apply(z), again.apply(z));
    }

    #[test]
    fn conjugated_family_formula() {
        let l = LiftSpec::standard(0.7);
        let c = 0.3;
        let lc = l.conjugated(c);
        let z = Point::new(0.2, 0.45);
        let direct = l.apply(z + Point::new(0.0, c / 2.0)) + Point::new(0.0, c / 2.0);
        assert!((lc.apply(z) - direct).norm() < 1e-14);
    }

    #[test]
    fn flipped_conjugates() {
        let l = parse_lift("k=1; phi1=0.1 sin(2 pi (x + y)); phi2 = 0.2 cos(2 pi (x - 2 y)); t = 0.1; psi = 0.03 cos(2 pi x)").unwrap();
        let f = l.flipped();
        let z = Point::new(0.3, 0.6);
        let flip = |p: Point| Point::new(p.x, -p.y);
        assert!((f.apply(z) - flip(l.apply(flip(z)))).norm() < 1e-14);
    }

    #[test]
    fn integrable_constants() {
        let c = twist_constants(&LiftSpec::integrable(1, 0.0), 64).unwrap();
        assert!((c.k_tw - 1.0 / 1.05).abs() < 1e-15);
        assert_eq!(c.a, CONST_FLOOR);
        assert_eq!(c.b, CONST_FLOOR);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((c.m - golden * 1.05).abs() < 1e-12);
    }

    #[test]
    fn integrable_generating_pair() {
        let l = LiftSpec::integrable(1, 0.0);
        let (g, gp) = generating_pair(&l, 0.2, 0.7).unwrap();
        assert!((g - 0.5).abs() < 1e-12 && (gp - 0.5).abs() < 1e-12);
    }

    #[test]
    fn power_minus_composition() {
        let h = power_minus(&LiftSpec::integrable(1, 0.0), 2, 1).unwrap();
        let w = h.apply(Point::new(0.1, 0.3));
        assert!((w.x - 0.7).abs() < 1e-15 && (w.y + 0.7).abs() < 1e-15);
    }
}
