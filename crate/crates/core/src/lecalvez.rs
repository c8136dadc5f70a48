//! Fiberwise root sets of `p1 f^q(x, y) = x + s`, their envelope graphs, and
//! the positive/negative triplet test that turns them into one-sided bounds
//! on the rotation interval.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::map_model::LiftSpec;
use crate::periodic::{solve_orbit, ORBIT_TOL};
use crate::rotation::{Provenance, Rational, RotationInterval};

/// Default sign-change scan step in `y`.
pub const SCAN_STEP: f64 = 2e-3;
/// Bisection tolerance for fiber roots.
pub const ROOT_TOL: f64 = 1e-11;
/// Margin a triplet inequality must clear to count.
pub const VERDICT_TOL: f64 = 1e-9;
/// Envelope jump between adjacent fibers that triggers refinement.
pub const JUMP_THRESHOLD: f64 = 0.05;
const MAX_REFINE_ROUNDS: usize = 4;

fn x_image_q(lift: &LiftSpec, q: u32, x: f64, y: f64) -> f64 {
    let mut w = Point::new(x, y);
    for _ in 0..q {
        w = lift.apply(w);
    }
    w.x
}

/// `p1 f^q(x, y) - x - s` and its `y` derivative.
fn fiber_fn(lift: &LiftSpec, s: i64, q: u32, x: f64, y: f64) -> (f64, f64) {
    let mut w = Point::new(x, y);
    let mut v = Point::new(0.0, 1.0);
    for _ in 0..q {
        let (next, j) = lift.apply_with_jacobian(w);
        v = j.apply(v);
        w = next;
    }
    (w.x - x - s as f64, v.x)
}

/// Window in `y` guaranteed to contain every root on every fiber.
pub fn root_window(lift: &LiftSpec, s: i64, q: u32) -> (f64, f64) {
    let k = lift.k() as f64;
    let qf = q as f64;
    let tri = qf * (qf - 1.0) / 2.0;
    let a = lift.phi2().abs_bound() + lift.psi().abs_bound();
    let p = lift.phi1().abs_bound();
    // |k q y + k t q(q-1)/2 - s| <= |k| A q(q-1)/2 + q sup|phi1|
    let center = (s as f64 - k * lift.t() * tri) / (k * qf);
    let half = (k.abs() * a * tri + qf * p) / (k.abs() * qf) + 1e-6;
    (center - half - SCAN_STEP, center + half + SCAN_STEP)
}

/// All roots of `y -> p1 f^q(x, y) - x - s`, sorted.
pub fn fiber_roots(lift: &LiftSpec, s: i64, q: u32, x: f64) -> Vec<f64> {
    let (lo, hi) = root_window(lift, s, q);
    let n = ((hi - lo) / SCAN_STEP).ceil().max(2.0) as usize;
    let h = (hi - lo) / n as f64;
    let mut roots = Vec::new();
    let mut prev_y = lo;
    let mut prev = fiber_fn(lift, s, q, x, lo);
    for i in 1..=n {
        let y = lo + h * i as f64;
        let cur = fiber_fn(lift, s, q, x, y);
        scan_interval(lift, s, q, x, (prev_y, prev), (y, cur), 0, &mut roots);
        prev_y = y;
        prev = cur;
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 10.0 * ROOT_TOL);
    roots
}

/// Find roots in `[a, b]`; subdivide when a pair of roots could hide
/// between samples of equal sign.
fn scan_interval(
    lift: &LiftSpec,
    s: i64,
    q: u32,
    x: f64,
    (ya, (fa, da)): (f64, (f64, f64)),
    (yb, (fb, db)): (f64, (f64, f64)),
    depth: usize,
    out: &mut Vec<f64>,
) {
    if fa == 0.0 {
        out.push(ya);
        return;
    }
    if fa.signum() != fb.signum() {
        if fb != 0.0 {
            out.push(bisect(lift, s, q, x, ya, yb, fa));
        }
        return;
    }
    let h = yb - ya;
    let could_hide = da.signum() != db.signum() && fa.abs().min(fb.abs()) < da.abs().max(db.abs()) * h;
    if could_hide && depth < 16 {
        let ym = 0.5 * (ya + yb);
        let fm = fiber_fn(lift, s, q, x, ym);
        scan_interval(lift, s, q, x, (ya, (fa, da)), (ym, fm), depth + 1, out);
        scan_interval(lift, s, q, x, (ym, fm), (yb, (fb, db)), depth + 1, out);
    }
}

fn bisect(lift: &LiftSpec, s: i64, q: u32, x: f64, mut lo: f64, mut hi: f64, flo: f64) -> f64 {
    let target = x + s as f64;
    let sign = flo.signum();
    while hi - lo > ROOT_TOL {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = x_image_q(lift, q, x, mid) - target;
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiberGraphs {
    pub s: i64,
    pub q: u32,
    pub xgrid: Vec<f64>,
    pub roots: Vec<Vec<f64>>,
    /// Heights `p2 f^q(x, r)` for each root `r`, in the same order.
    pub images: Vec<Vec<f64>>,
    pub mu_minus: Vec<f64>,
    pub mu_plus: Vec<f64>,
    pub nu_minus: Vec<f64>,
    pub nu_plus: Vec<f64>,
    /// Largest envelope jump between adjacent fibers after refinement.
    pub max_jump: f64,
}

struct Fiber {
    x: f64,
    roots: Vec<f64>,
    images: Vec<f64>,
}

impl Fiber {
    fn envelopes(&self) -> [f64; 4] {
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        [min(&self.roots), max(&self.roots), min(&self.images), max(&self.images)]
    }
}

fn build_fiber(lift: &LiftSpec, s: i64, q: u32, x: f64) -> Fiber {
    let roots = fiber_roots(lift, s, q, x);
    let images = roots
        .iter()
        .map(|&y| {
            let mut w = Point::new(x, y);
            for _ in 0..q {
                w = lift.apply(w);
            }
            w.y
        })
        .collect();
    Fiber { x, roots, images }
}

fn max_envelope_jump(fibers: &[Fiber]) -> (f64, Vec<usize>) {
    let mut worst = 0.0f64;
    let mut bad = Vec::new();
    for i in 0..fibers.len() {
        let a = fibers[i].envelopes();
        let b = fibers[(i + 1) % fibers.len()].envelopes();
        let jump = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        if jump > JUMP_THRESHOLD {
            bad.push(i);
        }
        worst = worst.max(jump);
    }
    (worst, bad)
}

/// Root sets and envelopes on `nx` equally spaced fibers, refined where
/// adjacent envelopes jump.
pub fn build_graphs(lift: &LiftSpec, s: i64, q: u32, nx: usize) -> Result<FiberGraphs> {
    if q == 0 || nx == 0 {
        return Err(Error::InvalidArgument("q and nx must be positive".into()));
    }
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 / nx as f64).collect();
    let mut fibers: Vec<Fiber> = xs.par_iter().map(|&x| build_fiber(lift, s, q, x)).collect();
    if fibers.iter().all(|f| f.roots.is_empty()) {
        return Err(Error::EmptyRootSet { s, q });
    }
    if let Some(f) = fibers.iter().find(|f| f.roots.is_empty()) {
        log::warn!("fiber x = {} has no roots for (s, q) = ({s}, {q})", f.x);
        fibers.retain(|f| !f.roots.is_empty());
    }
    let (mut max_jump, mut bad) = max_envelope_jump(&fibers);
    for _ in 0..MAX_REFINE_ROUNDS {
        if bad.is_empty() {
            break;
        }
        let mids: Vec<f64> = bad
            .iter()
            .map(|&i| {
                let a = fibers[i].x;
                let b = if i + 1 == fibers.len() { 1.0 } else { fibers[i + 1].x };
                0.5 * (a + b)
            })
            .collect();
        let extra: Vec<Fiber> = mids.par_iter().map(|&x| build_fiber(lift, s, q, x)).collect();
        fibers.extend(extra.into_iter().filter(|f| !f.roots.is_empty()));
        fibers.sort_by(|a, b| a.x.total_cmp(&b.x));
        (max_jump, bad) = max_envelope_jump(&fibers);
    }
    let mut g = FiberGraphs {
        s,
        q,
        xgrid: Vec::with_capacity(fibers.len()),
        roots: Vec::with_capacity(fibers.len()),
        images: Vec::with_capacity(fibers.len()),
        mu_minus: Vec::with_capacity(fibers.len()),
        mu_plus: Vec::with_capacity(fibers.len()),
        nu_minus: Vec::with_capacity(fibers.len()),
        nu_plus: Vec::with_capacity(fibers.len()),
        max_jump,
    };
    for f in fibers {
        let [mm, mp, nm, np] = f.envelopes();
        g.xgrid.push(f.x);
        g.mu_minus.push(mm);
        g.mu_plus.push(mp);
        g.nu_minus.push(nm);
        g.nu_plus.push(np);
        g.roots.push(f.roots);
        g.images.push(f.images);
    }
    Ok(g)
}

/// Max over fibers of `|f^q(x, mu-) - (x + s, nu+)|` and
/// `|f^q(x, mu+) - (x + s, nu-)|`, re-evaluated from scratch.
pub fn lemma_ofpre_audit(lift: &LiftSpec, g: &FiberGraphs) -> f64 {
    let image = |x: f64, y: f64| {
        let mut w = Point::new(x, y);
        for _ in 0..g.q {
            w = lift.apply(w);
        }
        w
    };
    let mut worst = 0.0f64;
    for i in 0..g.xgrid.len() {
        let x = g.xgrid[i];
        let target_x = x + g.s as f64;
        let lo = image(x, g.mu_minus[i]) - Point::new(target_x, g.nu_plus[i]);
        let hi = image(x, g.mu_plus[i]) - Point::new(target_x, g.nu_minus[i]);
        worst = worst.max(lo.norm()).max(hi.norm());
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Positive,
    Negative,
    OrbitWitness,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripletVerdict {
    pub s: i64,
    pub p: i64,
    pub q: u32,
    pub verdict: Verdict,
    /// Slack of the deciding inequality; for undecided triplets the larger
    /// of the two (nonpositive) slacks.
    pub margin: f64,
    pub witness: Option<Point>,
}

/// `(min_x (nu- - mu+), max_x (nu+ - mu-))`.
pub fn separation_range(g: &FiberGraphs) -> (f64, f64) {
    let pos = (0..g.xgrid.len())
        .map(|i| g.nu_minus[i] - g.mu_plus[i])
        .fold(f64::INFINITY, f64::min);
    let neg = (0..g.xgrid.len())
        .map(|i| g.nu_plus[i] - g.mu_minus[i])
        .fold(f64::NEG_INFINITY, f64::max);
    (pos, neg)
}

/// Decide the sign of `(s, p, q)` from prebuilt graphs.
pub fn triplet_from_graphs(lift: &LiftSpec, g: &FiberGraphs, p: i64) -> TripletVerdict {
    let (pos, neg) = separation_range(g);
    let pf = p as f64;
    let mut v = TripletVerdict {
        s: g.s,
        p,
        q: g.q,
        verdict: Verdict::Indeterminate,
        margin: (pos - pf).max(pf - neg),
        witness: None,
    };
    if pos - pf > VERDICT_TOL {
        v.verdict = Verdict::Positive;
        v.margin = pos - pf;
        return v;
    }
    if pf - neg > VERDICT_TOL {
        v.verdict = Verdict::Negative;
        v.margin = pf - neg;
        return v;
    }
    if let Some(z) = find_witness(lift, g, p) {
        v.verdict = Verdict::OrbitWitness;
        v.witness = Some(z);
    }
    v
}

/// A point with `|f^q(z) - z - (s, p)| < 1e-8`, either a root already on
/// the orbit or the result of Newton from roots where the vertical defect
/// changes sign.
fn find_witness(lift: &LiftSpec, g: &FiberGraphs, p: i64) -> Option<Point> {
    let defect = |i: usize, j: usize| g.images[i][j] - g.roots[i][j] - p as f64;
    let mut candidates: Vec<(f64, Point)> = Vec::new();
    let n = g.xgrid.len();
    for i in 0..n {
        let next = (i + 1) % n;
        let signs_next: Vec<f64> = (0..g.roots[next].len()).map(|j| defect(next, j)).collect();
        for j in 0..g.roots[i].len() {
            let d = defect(i, j);
            let z = Point::new(g.xgrid[i], g.roots[i][j]);
            if d.abs() < ORBIT_TOL {
                let residual = (crate::periodic::orbit_defect(lift, g.s, p, g.q, z).0).norm();
                if residual < ORBIT_TOL {
                    return Some(z);
                }
            }
            if signs_next.iter().any(|&e| e.signum() != d.signum()) {
                candidates.push((d.abs(), z));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates
        .into_iter()
        .take(16)
        .find_map(|(_, z)| solve_orbit(lift, g.s, p, g.q, z).map(|(w, _)| w))
}

/// Sign of the triplet `(s, p, q)` on `nx` fibers.
pub fn triplet_sign(lift: &LiftSpec, s: i64, p: i64, q: u32, nx: usize) -> Result<TripletVerdict> {
    let g = build_graphs(lift, s, q, nx)?;
    Ok(triplet_from_graphs(lift, &g, p))
}

/// Representatives of `s` modulo `|k| q`; the verdict of `(s, p, q)`
/// depends only on this residue.
pub fn admissible_s(lift: &LiftSpec, q: u32) -> Vec<i64> {
    (0..lift.k().abs() * q as i64).collect()
}

/// Outer bounds on the rotation interval from triplets with `q <= qmax`.
///
/// `rho+ <= p/q` when `(s, p, q)` is negative for every residue `s`, and
/// `rho- >= p/q` when it is positive for every residue.
pub fn certified_bounds(lift: &LiftSpec, qmax: u32, nx: usize) -> Result<RotationInterval> {
    let mut upper: Option<Rational> = None;
    let mut lower: Option<Rational> = None;
    for q in 1..=qmax {
        let ss = admissible_s(lift, q);
        let ranges: Vec<(f64, f64)> = ss
            .iter()
            .map(|&s| build_graphs(lift, s, q, nx).map(|g| separation_range(&g)))
            .collect::<Result<_>>()?;
        let neg_max = ranges.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
        let pos_min = ranges.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
        if neg_max.is_finite() {
            let p = (neg_max + VERDICT_TOL).floor() as i64 + 1;
            let r = Rational::new(p, q);
            if upper.is_none_or(|u| r.value() < u.value()) {
                upper = Some(r);
            }
        }
        if pos_min.is_finite() {
            let p = (pos_min - VERDICT_TOL).ceil() as i64 - 1;
            let r = Rational::new(p, q);
            if lower.is_none_or(|l| r.value() > l.value()) {
                lower = Some(r);
            }
        }
    }
    let mut out = RotationInterval::new(
        lower.map_or(f64::NEG_INFINITY, |r| r.value()),
        upper.map_or(f64::INFINITY, |r| r.value()),
        0.0,
        0.0,
        Provenance::TripletCertified,
    );
    out.lower_snap = lower;
    out.upper_snap = upper;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityReport {
    pub verdicts: Vec<(f64, TripletVerdict)>,
    /// Offending `(t, t')` pairs, `t < t'`.
    pub regressions: Vec<(f64, f64)>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.regressions.is_empty()
    }
}

/// Verdicts of `(s, p, q)` along the strongly increasing family
/// `f(x, y + t/2) + (0, t/2)`. A positive verdict must persist as `t` grows
/// and a negative one as `t` shrinks.
pub fn triplet_monotonicity_audit(
    lift: &LiftSpec,
    s: i64,
    p: i64,
    q: u32,
    ts: &[f64],
    nx: usize,
) -> Result<MonotonicityReport> {
    if ts.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("t list must be increasing".into()));
    }
    let mut verdicts = Vec::with_capacity(ts.len());
    for &t in ts {
        verdicts.push((t, triplet_sign(&lift.conjugated(t), s, p, q, nx)?));
    }
    let mut regressions = Vec::new();
    for i in 0..verdicts.len() {
        for j in i + 1..verdicts.len() {
            let (a, b) = (verdicts[i].1.verdict, verdicts[j].1.verdict);
            if (a == Verdict::Positive && b != Verdict::Positive) || (b == Verdict::Negative && a != Verdict::Negative) {
                regressions.push((verdicts[i].0, verdicts[j].0));
            }
        }
    }
    Ok(MonotonicityReport { verdicts, regressions })
}

pub const GRAPHS_CSV_HEADER: &str = "x,mu_minus,mu_plus,nu_minus,nu_plus";

pub fn graphs_csv(g: &FiberGraphs) -> String {
    let mut s = String::from(GRAPHS_CSV_HEADER);
    s.push('\n');
    for i in 0..g.xgrid.len() {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            g.xgrid[i], g.mu_minus[i], g.mu_plus[i], g.nu_minus[i], g.nu_plus[i]
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrable_roots() {
        let l = LiftSpec::integrable(1, 0.0);
        let r = fiber_roots(&l, 0, 1, 0.3);
        assert_eq!(r.len(), 1);
        assert!(r[0].abs() < 1e-10);
        let r = fiber_roots(&l, 1, 2, 0.7);
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn integrable_triplets() {
        let l = LiftSpec::integrable(1, 0.0);
        let v = triplet_sign(&l, 0, 1, 1, 16).unwrap();
        assert_eq!(v.verdict, Verdict::Negative);
        assert!((v.margin - 1.0).abs() < 1e-9);
        let v = triplet_sign(&l, 0, -1, 1, 16).unwrap();
        assert_eq!(v.verdict, Verdict::Positive);
        let v = triplet_sign(&l, 0, 0, 1, 16).unwrap();
        assert_eq!(v.verdict, Verdict::OrbitWitness);
    }

    #[test]
    fn corrupted_graph_fails_audit() {
        let l = LiftSpec::standard(0.5);
        let mut g = build_graphs(&l, 0, 1, 32).unwrap();
        assert!(lemma_ofpre_audit(&l, &g) < 1e-8);
        g.mu_minus[3] += 0.01;
        assert!(lemma_ofpre_audit(&l, &g) >= 0.005);
    }

    #[test]
    fn integrable_outer_bounds_shrink_with_q() {
        let b = certified_bounds(&LiftSpec::integrable(1, 0.0), 5, 8).unwrap();
        assert_eq!(b.upper_snap, Some(Rational::new(1, 5)));
        assert_eq!(b.lower_snap, Some(Rational::new(-1, 5)));
    }
}
