//! Vertical rotation numbers, sampled rotation intervals, rational snapping
//! and translation-family scans.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::map_model::{AnnulusMap, LiftSpec};
use crate::periodic::solve_orbit;

pub const DEFAULT_QMAX: u32 = 64;
pub const DEFAULT_ITERATIONS: usize = 20_000;
pub const DEFAULT_GRID: usize = 64;
/// Extremal seeds a tongue scan carries from one offset to the next.
const CARRIED_SEEDS: usize = 8;
/// Periodic witnesses a tongue scan keeps alive, and the longest period it
/// looks for.
const MAX_WITNESSES: usize = 3;
const WITNESS_QMAX: u32 = 64;
const WITNESS_SEARCH_GRID: usize = 12;
/// Smallest half-width used when snapping sampled endpoints, so that
/// round-off alone never prevents a snap.
pub const SNAP_FLOOR: f64 = 1e-9;

/// A reduced fraction with positive denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rational {
    pub p: i64,
    pub q: u32,
}

impl Rational {
    pub fn new(p: i64, q: u32) -> Self {
        assert!(q > 0, "zero denominator");
        let g = gcd(p.unsigned_abs(), q as u64) as i64;
        Self {
            p: p / g,
            q: (q as i64 / g) as u32,
        }
    }

    pub fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationEstimate {
    pub value: f64,
    pub n: usize,
    pub radius: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Sampled,
    TripletCertified,
    FreeCurveLocked,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Sampled => "sampled",
            Provenance::TripletCertified => "triplet-certified",
            Provenance::FreeCurveLocked => "free-curve-locked",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationInterval {
    pub lower: f64,
    pub upper: f64,
    pub lower_radius: f64,
    pub upper_radius: f64,
    pub lower_cert: Provenance,
    pub upper_cert: Provenance,
    pub lower_snap: Option<Rational>,
    pub upper_snap: Option<Rational>,
}

impl RotationInterval {
    pub fn new(lower: f64, upper: f64, lower_radius: f64, upper_radius: f64, cert: Provenance) -> Self {
        Self {
            lower,
            upper,
            lower_radius,
            upper_radius,
            lower_cert: cert,
            upper_cert: cert,
            lower_snap: None,
            upper_snap: None,
        }
    }

    /// Fill the snapped endpoints.
    pub fn snapped(mut self, qmax: u32) -> Self {
        self.lower_snap = snap_rational(self.lower, self.lower_radius.max(SNAP_FLOOR), qmax);
        self.upper_snap = snap_rational(self.upper, self.upper_radius.max(SNAP_FLOOR), qmax);
        self
    }

    /// Whether `inner` lies inside this interval, allowing each inner
    /// endpoint to move by its radius.
    pub fn contains(&self, inner: &RotationInterval) -> bool {
        inner.lower + inner.lower_radius >= self.lower && inner.upper - inner.upper_radius <= self.upper
    }

    /// Keep whichever endpoint carries the stronger provenance tag.
    pub fn merge(&self, other: &RotationInterval) -> RotationInterval {
        let mut out = *self;
        if other.lower_cert > self.lower_cert {
            out.lower = other.lower;
            out.lower_radius = other.lower_radius;
            out.lower_cert = other.lower_cert;
            out.lower_snap = other.lower_snap;
        }
        if other.upper_cert > self.upper_cert {
            out.upper = other.upper;
            out.upper_radius = other.upper_radius;
            out.upper_cert = other.upper_cert;
            out.upper_snap = other.upper_snap;
        }
        out
    }
}

/// Vertical rotation number of the orbit of `z` under `f^q - (0, p)`.
///
/// The height is kept in `[0, 1)` and integer parts are counted exactly,
/// so round-off does not grow with the orbit's displacement.
pub fn birkhoff_rho(h: &AnnulusMap, z: Point, n: usize) -> Result<RotationEstimate> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    let lift = &h.base;
    let step_bound = h.q as f64 * (displacement_bound(lift) + lift.t().abs()) + h.p.abs() as f64 + 1.0;
    let y0 = z.y;
    let mut w = Point::new(z.x - z.x.floor(), z.y - z.y.floor());
    let mut whole = z.y.floor();
    let mut disp = Vec::with_capacity(n + 1);
    disp.push(0.0);
    for j in 1..=n {
        for _ in 0..h.q {
            let v = lift.apply(w);
            let m = v.y.floor();
            whole += m;
            w = Point::new(v.x - v.x.floor(), v.y - m);
        }
        whole -= h.p as f64;
        let d = (whole - y0) + w.y;
        if !d.is_finite() || d.abs() > j as f64 * step_bound {
            return Err(Error::Overflow {
                iterations: j,
                y: y0 + d,
            });
        }
        disp.push(d);
    }
    let value = disp[n] / n as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (j, &d) in disp.iter().enumerate().skip(n / 2) {
        let dev = d - j as f64 * value;
        lo = lo.min(dev);
        hi = hi.max(dev);
    }
    let radius = (hi - lo) / n as f64;
    Ok(RotationEstimate {
        value,
        n,
        radius,
        converged: radius.is_finite(),
    })
}

/// Rotation number of `z` under the lift itself.
pub fn birkhoff_rho_lift(lift: &LiftSpec, z: Point, n: usize) -> Result<RotationEstimate> {
    birkhoff_rho(&AnnulusMap::new(lift.clone(), 1, 0)?, z, n)
}

/// Coefficient bound of `|y' - y - t|`.
pub fn displacement_bound(lift: &LiftSpec) -> f64 {
    lift.phi2().abs_bound() + lift.psi().abs_bound()
}

/// Jittered `nx x ny` lattice in `[0, 1)^2`, deterministic in `seed`.
pub fn jittered_lattice(nx: usize, ny: usize, seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(nx * ny);
    for i in 0..nx {
        for j in 0..ny {
            let (u, v): (f64, f64) = (rng.gen(), rng.gen());
            out.push(Point::new((i as f64 + u) / nx as f64, (j as f64 + v) / ny as f64));
        }
    }
    out
}

/// Min and max of Birkhoff averages over a jittered seed lattice. This is
/// an inner approximation of the rotation interval.
pub fn interval_sample(lift: &LiftSpec, nx: usize, ny: usize, n: usize, seed: u64) -> Result<RotationInterval> {
    if nx == 0 || ny == 0 || n == 0 {
        return Err(Error::InvalidArgument("grid and iteration counts must be positive".into()));
    }
    Ok(sample_seeds(lift, &jittered_lattice(nx, ny, seed), n)?.0)
}

/// Sampled interval over explicit seeds, plus the seeds realizing the lower
/// and upper endpoints.
fn sample_seeds(lift: &LiftSpec, seeds: &[Point], n: usize) -> Result<(RotationInterval, Point, Point)> {
    let h = AnnulusMap::new(lift.clone(), 1, 0)?;
    let estimates: Vec<RotationEstimate> = seeds
        .par_iter()
        .map(|&z| birkhoff_rho(&h, z, n))
        .collect::<Result<_>>()?;
    let (mut lo, mut hi) = (0, 0);
    for (i, e) in estimates.iter().enumerate() {
        if e.value < estimates[lo].value {
            lo = i;
        }
        if e.value > estimates[hi].value {
            hi = i;
        }
    }
    let radius = estimates.iter().map(|e| e.radius).fold(0.0, f64::max);
    let interval = RotationInterval::new(
        estimates[lo].value,
        estimates[hi].value,
        radius,
        radius,
        Provenance::Sampled,
    );
    Ok((interval, seeds[lo], seeds[hi]))
}

/// The unique rational with denominator at most `qmax` in
/// `[x - radius, x + radius]`, if there is exactly one.
pub fn snap_rational(x: f64, radius: f64, qmax: u32) -> Option<Rational> {
    if qmax == 0 || !x.is_finite() || !(radius >= 0.0) {
        return None;
    }
    let (lo, hi) = (x - radius, x + radius);
    let simplest = simplest_rational(lo, hi, qmax)?;
    let (left, right) = farey_neighbours(simplest, qmax);
    let below = left.p as f64 / left.q as f64;
    let above = right.p as f64 / right.q as f64;
    (below < lo && above > hi).then_some(simplest)
}

/// Rational of smallest denominator (at most `qmax`) in `[lo, hi]`, by
/// descent in the Stern-Brocot tree with runs taken in one step, which is
/// the continued-fraction expansion.
fn simplest_rational(lo: f64, hi: f64, qmax: u32) -> Option<Rational> {
    let base = lo.floor();
    if base + 1.0 <= hi || base == lo {
        // An integer lies in the window; prefer the one closest to zero.
        let a = lo.ceil();
        let b = hi.floor();
        let p = if a <= 0.0 && b >= 0.0 {
            0.0
        } else if a > 0.0 {
            a
        } else {
            b
        };
        return Some(Rational::new(p as i64, 1));
    }
    let (lo, hi) = (lo - base, hi - base);
    let shift = base as i64;
    // Bracket by l = a/b < lo and r = c/d > hi; start 0/1, 1/1.
    let (mut a, mut b, mut c, mut d) = (0i64, 1i64, 1i64, 1i64);
    loop {
        let (mp, mq) = (a + c, b + d);
        if mq > qmax as i64 {
            return None;
        }
        let m = mp as f64 / mq as f64;
        if m < lo {
            // Move left bound right as far as possible: (a + j c)/(b + j d) < lo.
            let mut j = 1;
            while b + (j + 1) * d <= qmax as i64 && ((a + (j + 1) * c) as f64) < lo * (b + (j + 1) * d) as f64 {
                j += 1;
            }
            a += j * c;
            b += j * d;
        } else if m > hi {
            let mut j = 1;
            while d + (j + 1) * b <= qmax as i64 && ((c + (j + 1) * a) as f64) > hi * (d + (j + 1) * b) as f64 {
                j += 1;
            }
            c += j * a;
            d += j * b;
        } else {
            return Some(Rational::new(mp + shift * mq, mq as u32));
        }
    }
}

/// Left and right neighbours of `r` in the Farey sequence of order `qmax`.
fn farey_neighbours(r: Rational, qmax: u32) -> (Rational, Rational) {
    let (p, q, n) = (r.p, r.q as i64, qmax as i64);
    if q == 1 {
        return (Rational::new(p * n - 1, qmax), Rational::new(p * n + 1, qmax));
    }
    let inv = mod_inverse(p.rem_euclid(q), q);
    // Left a/b: p b - q a = 1, so b = p^{-1} mod q.
    let b0 = inv;
    let b = b0 + q * ((n - b0) / q);
    let a = (p * b - 1) / q;
    // Right c/d: c q - d p = 1, so d = -p^{-1} mod q.
    let d0 = (q - inv) % q;
    let d = d0 + q * ((n - d0) / q);
    let c = (1 + d * p) / q;
    (Rational::new(a, b as u32), Rational::new(c, d as u32))
}

fn mod_inverse(a: i64, m: i64) -> i64 {
    let (mut old_r, mut r) = (a, m);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let quo = old_r / r;
        (old_r, r) = (r, old_r - quo * r);
        (old_s, s) = (s, old_s - quo * s);
    }
    old_s.rem_euclid(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TongueRow {
    pub t: f64,
    pub interval: RotationInterval,
    pub locked: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub nx: usize,
    pub ny: usize,
    pub n: usize,
    pub qmax: u32,
    pub seed: u64,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            nx: DEFAULT_GRID,
            ny: DEFAULT_GRID,
            n: DEFAULT_ITERATIONS,
            qmax: DEFAULT_QMAX,
            seed: 0,
        }
    }
}

/// A pair of scan points where the upper endpoint dropped by more than the
/// combined tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityViolation {
    pub t: f64,
    pub t_later: f64,
    pub drop: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TongueScan {
    pub rows: Vec<TongueRow>,
    pub violations: Vec<MonotonicityViolation>,
}

/// Scan offsets `t0, t0 + step, ...` up to `t1`.
pub fn scan_offsets(t0: f64, t1: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(t1 >= t0) {
        return Err(Error::InvalidArgument("need step > 0 and t0 <= t1".into()));
    }
    let count = ((t1 - t0) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| t0 + i as f64 * step).collect())
}

/// Newton from `hint`, then from a coarse lattice on the torus.
fn locate(lift: &LiftSpec, s: i64, p: i64, q: u32, hint: Point) -> Option<(Point, f64)> {
    solve_orbit(lift, s, p, q, hint).or_else(|| {
        let n = WITNESS_SEARCH_GRID;
        (0..n * n).into_par_iter().find_map_first(|i| {
            let z0 = Point::new((i / n) as f64 / n as f64, (i % n) as f64 / n as f64);
            solve_orbit(lift, s, p, q, z0)
        })
    })
}

/// An `(s, p, q)` periodic orbit: `f^q(z) = z + (s, p)`.
#[derive(Debug, Clone, Copy)]
struct Witness {
    s: i64,
    p: i64,
    q: u32,
    z: Point,
}

impl Witness {
    fn value(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    /// Look for a periodic orbit through the near-returns of the orbit of
    /// `z`, closest return first.
    fn near(lift: &LiftSpec, z: Point, known: &[Witness]) -> Option<Witness> {
        let mut w = z;
        let mut returns = Vec::new();
        for j in 1..=WITNESS_QMAX {
            w = lift.apply(w);
            let d = w - z;
            let off = (d.x - d.x.round()).abs().max((d.y - d.y.round()).abs());
            if off < 0.1 {
                returns.push((off, j, d.x.round() as i64, d.y.round() as i64));
            }
        }
        returns.sort_by(|a, b| a.0.total_cmp(&b.0));
        returns.retain(|&(_, q, _, p)| !known.iter().any(|w| w.p * q as i64 == p * w.q as i64));
        returns.into_iter().take(2).find_map(|(_, q, s, p)| {
            locate(lift, s, p, q, z).map(|(z, _)| Witness { s, p, q, z })
        })
    }

    /// Follow the orbit to a new map. If it has folded away, search the
    /// torus for another orbit of the same type.
    fn continue_to(&mut self, lift: &LiftSpec) -> bool {
        let found = locate(lift, self.s, self.p, self.q, self.z);
        match found {
            Some((z, _)) => {
                self.z = z;
                true
            }
            None => false,
        }
    }
}

/// Sample the rotation interval of `f + (0, t)` along a range of `t`.
pub fn tongue_scan(lift: &LiftSpec, t0: f64, t1: f64, step: f64, params: &ScanParams) -> Result<TongueScan> {
    if params.nx == 0 || params.ny == 0 || params.n == 0 {
        return Err(Error::InvalidArgument("grid and iteration counts must be positive".into()));
    }
    let ts = scan_offsets(t0, t1, step)?;
    let lattice = jittered_lattice(params.nx, params.ny, params.seed);
    // Seeds of the fastest orbits at earlier offsets. Small resonant islands
    // are easy to miss on a coarse lattice; carrying their seeds forward
    // keeps the sweep from losing an island it has already found.
    let mut carried: Vec<Point> = Vec::new();
    // Periodic orbits found near the fastest seeds, followed by Newton
    // continuation as t grows. They survive after their islands shrink below
    // the lattice resolution.
    let mut witnesses: Vec<Witness> = Vec::new();
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let l = lift.translated(t);
        let mut seeds = lattice.clone();
        seeds.extend_from_slice(&carried);
        let (mut interval, _, top) = sample_seeds(&l, &seeds, params.n)?;
        if !carried.contains(&top) {
            carried.push(top);
            if carried.len() > CARRIED_SEEDS {
                carried.remove(0);
            }
        }
        // Witnesses below the sampled maximum cannot raise the endpoint.
        let floor = interval.upper - 2.0 * interval.upper_radius;
        witnesses.retain_mut(|w| w.value() >= floor && w.continue_to(&l));
        if let Some(w) = Witness::near(&l, top, &witnesses) {
            witnesses.push(w);
        }
        witnesses.sort_by(|a, b| b.value().total_cmp(&a.value()));
        witnesses.truncate(MAX_WITNESSES);
        if let Some(w) = witnesses.first() {
            // A periodic orbit lies in the rotation interval exactly.
            interval.upper = interval.upper.max(w.value());
        }
        let interval = interval.snapped(params.qmax);
        rows.push(TongueRow {
            t,
            interval,
            locked: false,
        });
    }
    let violations = monotonicity_audit(&rows);
    for v in &violations {
        log::warn!(
            "upper endpoint drops by {:.3e} between t = {} and t = {} (tolerance {:.3e})",
            v.drop,
            v.t,
            v.t_later,
            v.tolerance
        );
    }
    Ok(TongueScan { rows, violations })
}

/// Pairs `t < t'` with `upper(t') < upper(t) - 2 max(r_t, r_t')`.
pub fn monotonicity_audit(rows: &[TongueRow]) -> Vec<MonotonicityViolation> {
    let mut out = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            let tol = 2.0 * a.interval.upper_radius.max(b.interval.upper_radius);
            let drop = a.interval.upper - b.interval.upper;
            if drop > tol {
                out.push(MonotonicityViolation {
                    t: a.t,
                    t_later: b.t,
                    drop,
                    tolerance: tol,
                });
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub endpoint: Endpoint,
    pub value: Rational,
    pub t_start: f64,
    pub t_end: f64,
    pub rows: usize,
}

impl Plateau {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }
}

/// Maximal runs of at least three consecutive rows sharing a snapped
/// endpoint, optionally restricted to one rational.
pub fn plateau_detect(rows: &[TongueRow], target: Option<Rational>) -> Vec<Plateau> {
    let mut out = Vec::new();
    for endpoint in [Endpoint::Upper, Endpoint::Lower] {
        let snap = |r: &TongueRow| match endpoint {
            Endpoint::Upper => r.interval.upper_snap,
            Endpoint::Lower => r.interval.lower_snap,
        };
        let mut start = 0;
        while start < rows.len() {
            let v = snap(&rows[start]);
            let mut end = start + 1;
            while end < rows.len() && v.is_some() && snap(&rows[end]) == v {
                end += 1;
            }
            if let Some(value) = v {
                if end - start >= 3 && target.is_none_or(|tg| tg == value) {
                    out.push(Plateau {
                        endpoint,
                        value,
                        t_start: rows[start].t,
                        t_end: rows[end - 1].t,
                        rows: end - start,
                    });
                }
            }
            start = end;
        }
    }
    out
}

pub const TONGUE_CSV_HEADER: &str = "t,lower,upper,lower_radius,upper_radius,lower_snap,upper_snap,locked";

pub fn tongue_csv(rows: &[TongueRow]) -> String {
    let mut s = String::from(TONGUE_CSV_HEADER);
    s.push('\n');
    let snap = |r: Option<Rational>| r.map(|r| r.to_string()).unwrap_or_default();
    for r in rows {
        let iv = &r.interval;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.t,
            iv.lower,
            iv.upper,
            iv.lower_radius,
            iv.upper_radius,
            snap(iv.lower_snap),
            snap(iv.upper_snap),
            r.locked
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, upper: Option<Rational>) -> TongueRow {
        let mut iv = RotationInterval::new(0.0, 0.0, 0.0, 0.0, Provenance::Sampled);
        iv.upper_snap = upper;
        TongueRow {
            t,
            interval: iv,
            locked: false,
        }
    }

    #[test]
    fn snap_examples() {
        assert_eq!(snap_rational(0.5001, 0.001, 10), Some(Rational::new(1, 2)));
        assert_eq!(snap_rational(0.3333, 1e-6, 10), None);
        assert_eq!(snap_rational(-0.7, 1e-9, 10), Some(Rational::new(-7, 10)));
        assert_eq!(snap_rational(2.0, 0.0, 1), Some(Rational::new(2, 1)));
        // Two integers in the window.
        assert_eq!(snap_rational(0.5, 0.6, 5), None);
    }

    #[test]
    fn farey_neighbours_of_half() {
        let (l, r) = farey_neighbours(Rational::new(1, 2), 5);
        assert_eq!((l, r), (Rational::new(2, 5), Rational::new(3, 5)));
        let (l, r) = farey_neighbours(Rational::new(-1, 3), 4);
        assert_eq!((l, r), (Rational::new(-1, 2), Rational::new(-1, 4)));
    }

    #[test]
    fn plateau_of_three() {
        let half = Some(Rational::new(1, 2));
        let rows = vec![row(0.0, half), row(0.1, half), row(0.2, half), row(0.3, Some(Rational::new(2, 3)))];
        let p = plateau_detect(&rows, None);
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].rows, 3);
        assert_eq!(p[0].value, Rational::new(1, 2));
        assert!(plateau_detect(&rows, Some(Rational::new(2, 3))).is_empty());
    }

    #[test]
    fn integrable_rotation_is_exact() {
        let l = LiftSpec::integrable(1, 0.3);
        let e = birkhoff_rho_lift(&l, Point::new(0.1, 0.4), 100).unwrap();
        assert!((e.value - 0.3).abs() < 1e-14);
        assert!(e.radius < 1e-13);
    }

    #[test]
    fn fixed_point_rotation_is_zero() {
        let e = birkhoff_rho_lift(&LiftSpec::standard(0.5), Point::new(0.0, 0.0), 50).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.radius, 0.0);
    }

    #[test]
    fn csv_header() {
        assert!(tongue_csv(&[]).starts_with("t,lower,upper,lower_radius,upper_radius,lower_snap,upper_snap,locked\n"));
    }

    #[test]
    fn resonant_island_is_not_lost_on_a_coarse_lattice() {
        // A 1/8 island appears near t = 0.088 and shrinks below the lattice
        // resolution right after; the periodic witness keeps the endpoint.
        let params = ScanParams {
            nx: 8,
            ny: 8,
            ..ScanParams::default()
        };
        let scan = tongue_scan(&LiftSpec::standard(0.9), 0.084, 0.096, 0.004, &params).unwrap();
        assert!(scan.violations.is_empty(), "{:?}", scan.violations);
        assert!(scan.rows.iter().skip(1).all(|r| r.interval.upper >= 0.125 - 1e-9));
    }
}
