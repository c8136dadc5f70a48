//! Stable and unstable manifolds of periodic saddles in the universal cover,
//! their crossings with integer translates, and forward iterates of free
//! curves.
//!
//! Everything here is numerical evidence at finite arclength; absence of a
//! crossing or a stalled extremum proves nothing about the full manifold.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{segment_intersection, EssentialCurve, Mat2, Point, SegmentIndex};
use crate::map_model::{AnnulusMap, LiftSpec};
use crate::periodic::{orbit_defect, OrbitKind, PeriodicOrbit};
use crate::pseudoorbit::FreeCurveCertificate;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowParams {
    /// Offset of the first vertex from the saddle along the eigenvector.
    pub delta0: f64,
    pub h_max: f64,
    /// Midpoints are inserted where the polyline turns by more than this.
    pub max_turn: f64,
    pub max_vertices: usize,
}

impl Default for GrowParams {
    fn default() -> Self {
        GrowParams {
            delta0: 1e-7,
            h_max: 1e-3,
            max_turn: 0.2,
            max_vertices: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Branch {
    pub stable: bool,
    /// Leaves the saddle along `+v` rather than `-v`.
    pub positive: bool,
}

impl Branch {
    pub const UNSTABLE_PLUS: Branch = Branch { stable: false, positive: true };
    pub const UNSTABLE_MINUS: Branch = Branch { stable: false, positive: false };
    pub const STABLE_PLUS: Branch = Branch { stable: true, positive: true };
    pub const STABLE_MINUS: Branch = Branch { stable: true, positive: false };
    pub const ALL: [Branch; 4] = [
        Branch::UNSTABLE_PLUS,
        Branch::UNSTABLE_MINUS,
        Branch::STABLE_PLUS,
        Branch::STABLE_MINUS,
    ];
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = if self.stable { "stable" } else { "unstable" };
        let sign = if self.positive { '+' } else { '-' };
        write!(f, "{side}{sign}")
    }
}

/// A saddle with the return map `R(z) = f^q(z) - (s, p)` fixing its anchor.
#[derive(Debug, Clone)]
pub struct Saddle {
    pub lift: LiftSpec,
    pub anchor: Point,
    pub s: i64,
    pub p: i64,
    pub q: u32,
    /// 2 for reflection saddles, whose eigenvalues are negative.
    pub power: u32,
    pub lambda_u: f64,
    pub lambda_s: f64,
    pub e_u: Point,
    pub e_s: Point,
}

fn unit_up(v: Point) -> Point {
    let v = v * (1.0 / v.norm());
    if v.y < 0.0 || (v.y == 0.0 && v.x < 0.0) {
        v * -1.0
    } else {
        v
    }
}

impl Saddle {
    pub fn new(lift: &LiftSpec, orbit: &PeriodicOrbit) -> Result<Self> {
        let power = match orbit.kind {
            OrbitKind::Saddle => 1,
            OrbitKind::ReflectionSaddle => 2,
            other => return Err(Error::KindMismatch(format!("manifolds need a saddle, got {other}"))),
        };
        let anchor = orbit.anchor();
        let (_, j) = orbit_defect(lift, orbit.s, orbit.p, orbit.q, anchor);
        let j: Mat2 = if power == 2 { j.mul(&j) } else { j };
        let [l1, l2] = j.eigenvalues();
        if l1.im != 0.0 || l1.re <= 0.0 || l2.re <= 0.0 {
            return Err(Error::KindMismatch("return map is not a saddle with positive eigenvalues".into()));
        }
        let (lambda_u, lambda_s) = if l1.re > l2.re { (l1.re, l2.re) } else { (l2.re, l1.re) };
        if !(lambda_u > 1.0 && lambda_s < 1.0) {
            return Err(Error::KindMismatch("eigenvalues do not straddle 1".into()));
        }
        Ok(Saddle {
            lift: lift.clone(),
            anchor,
            s: orbit.s,
            p: orbit.p,
            q: orbit.q,
            power,
            lambda_u,
            lambda_s,
            e_u: unit_up(j.eigenvector(lambda_u)),
            e_s: unit_up(j.eigenvector(lambda_s)),
        })
    }

    /// The return map, forward for unstable branches and backward for
    /// stable ones.
    pub fn step(&self, z: Point, stable: bool) -> Option<Point> {
        let shift = Point::new(self.s as f64, self.p as f64);
        let mut w = z;
        for _ in 0..self.power {
            if stable {
                w = w + shift;
                for _ in 0..self.q {
                    w = self.lift.inverse(w)?;
                }
            } else {
                for _ in 0..self.q {
                    w = self.lift.apply(w);
                }
                w = w - shift;
            }
        }
        w.x.is_finite().then_some(w)
    }

    fn expansion(&self, stable: bool) -> f64 {
        if stable {
            1.0 / self.lambda_s
        } else {
            self.lambda_u
        }
    }

    fn direction(&self, b: Branch) -> Point {
        let v = if b.stable { self.e_s } else { self.e_u };
        if b.positive {
            v
        } else {
            v * -1.0
        }
    }

    /// Point with parameter `u`: the seed `anchor + delta0 lambda^frac(u) v`
    /// pushed `floor(u)` times by the return map.
    fn eval(&self, b: Branch, delta0: f64, u: f64) -> Option<Point> {
        let j = u.floor();
        let sigma = delta0 * self.expansion(b.stable).powf(u - j);
        let mut z = self.anchor + self.direction(b) * sigma;
        for _ in 0..j as usize {
            z = self.step(z, b.stable)?;
        }
        Some(z)
    }
}

#[derive(Debug, Clone)]
pub struct ManifoldArc {
    pub branch: Branch,
    pub anchor: Point,
    pub vertices: Vec<Point>,
    /// Growth parameter of each vertex; `u + 1` is the image of `u`.
    pub params: Vec<f64>,
    pub arclength: f64,
    /// Growth stopped at the vertex budget or a failed inverse.
    pub truncated: bool,
}

struct Grower<'a> {
    saddle: &'a Saddle,
    branch: Branch,
    params: &'a GrowParams,
    verts: Vec<Point>,
    us: Vec<f64>,
    length: f64,
    target: f64,
}

impl Grower<'_> {
    fn eval(&self, u: f64) -> Option<Point> {
        self.saddle.eval(self.branch, self.params.delta0, u)
    }

    fn push(&mut self, u: f64, p: Point) -> bool {
        let last = *self.verts.last().unwrap();
        let d = last.dist(p);
        if self.length + d >= self.target {
            let t = if d > 0.0 { (self.target - self.length) / d } else { 1.0 };
            let ul = *self.us.last().unwrap();
            self.verts.push(last + (p - last) * t);
            self.us.push(ul + (u - ul) * t);
            self.length = self.target;
            return true;
        }
        self.length += d;
        self.verts.push(p);
        self.us.push(u);
        false
    }

    /// Refine `(ua, pa) .. (ub, pb)` and append everything after `pa`.
    /// Returns true once the target length or the budget is reached.
    fn refine(&mut self, ua: f64, pa: Point, ub: f64, pb: Point, depth: u32) -> Option<bool> {
        if self.verts.len() >= self.params.max_vertices {
            return None;
        }
        let chord = pa.dist(pb);
        let um = 0.5 * (ua + ub);
        if depth < 60 && ub - ua > 1e-13 {
            let pm = self.eval(um)?;
            let (d1, d2) = (pm - pa, pb - pm);
            let turn = if d1.norm() > 0.0 && d2.norm() > 0.0 {
                d1.cross(d2).atan2(d1.dot(d2)).abs()
            } else {
                0.0
            };
            let bent = turn > self.params.max_turn && chord > 1e-3 * self.params.h_max;
            if chord > self.params.h_max || bent {
                if self.refine(ua, pa, um, pm, depth + 1)? {
                    return Some(true);
                }
                return self.refine(um, pm, ub, pb, depth + 1);
            }
        }
        Some(self.push(ub, pb))
    }
}

const INITIAL_SPLITS: usize = 16;
const MAX_PIECES: usize = 400;

/// Grow one branch to `arclength` by iterating a fundamental domain of the
/// linearised branch, inserting vertices where spacing or turning is large.
pub fn grow_manifold(saddle: &Saddle, branch: Branch, arclength: f64, params: &GrowParams) -> ManifoldArc {
    let start = saddle.anchor + saddle.direction(branch) * params.delta0;
    let mut g = Grower {
        saddle,
        branch,
        params,
        verts: vec![start],
        us: vec![0.0],
        length: 0.0,
        target: arclength,
    };
    let mut truncated = false;
    'pieces: for j in 0..MAX_PIECES {
        let mut ua = j as f64;
        let mut pa = *g.verts.last().unwrap();
        for i in 1..=INITIAL_SPLITS {
            let ub = j as f64 + i as f64 / INITIAL_SPLITS as f64;
            let Some(pb) = g.eval(ub) else {
                truncated = true;
                break 'pieces;
            };
            match g.refine(ua, pa, ub, pb, 0) {
                Some(true) => break 'pieces,
                Some(false) => {}
                None => {
                    truncated = true;
                    break 'pieces;
                }
            }
            ua = ub;
            pa = pb;
        }
    }
    ManifoldArc {
        branch,
        anchor: saddle.anchor,
        arclength: g.length,
        vertices: g.verts,
        params: g.us,
        truncated,
    }
}

/// The four branches of a saddle, grown concurrently.
pub fn grow_all(saddle: &Saddle, arclength: f64, params: &GrowParams) -> Vec<ManifoldArc> {
    Branch::ALL
        .par_iter()
        .map(|&b| grow_manifold(saddle, b, arclength, params))
        .collect()
}

fn build_index(pts: &[Point], shift: Point, cell: f64) -> SegmentIndex {
    let mut idx = SegmentIndex::new(cell);
    for w in pts.windows(2) {
        idx.insert(w[0] + shift, w[1] + shift);
    }
    idx
}

/// Largest distance from the image of a vertex to the arc, over vertices
/// whose image lies within the grown part.
pub fn invariance_defect(saddle: &Saddle, arc: &ManifoldArc) -> f64 {
    let idx = build_index(&arc.vertices, Point::new(0.0, 0.0), 0.05);
    let u_end = arc.params.last().copied().unwrap_or(0.0);
    arc.vertices
        .iter()
        .zip(&arc.params)
        .filter(|(_, &u)| u + 1.0 <= u_end)
        .filter_map(|(&z, _)| saddle.step(z, arc.branch.stable))
        .map(|w| idx.nearest(w).map(|(d, _)| d).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub point: Point,
    pub seg_a: usize,
    pub seg_b: usize,
    pub transverse: bool,
}

fn cumulative(pts: &[Point]) -> Vec<f64> {
    let mut out = Vec::with_capacity(pts.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in pts.windows(2) {
        acc += w[0].dist(w[1]);
        out.push(acc);
    }
    out
}

fn at_arclength(pts: &[Point], cum: &[f64], s: f64) -> Point {
    let s = s.clamp(0.0, *cum.last().unwrap());
    let i = cum.partition_point(|&c| c <= s).clamp(1, pts.len() - 1);
    let len = cum[i] - cum[i - 1];
    let t = if len > 0.0 { (s - cum[i - 1]) / len } else { 0.0 };
    pts[i - 1] + (pts[i] - pts[i - 1]) * t
}

/// Default radius of the disk used for the side test.
pub const SIDE_DISK: f64 = 0.01;

/// Intersections of polyline `a` with polyline `b + translate`, tagged
/// transverse when `a` passes from one side of `b` to the other inside a
/// disk of radius `disk` around the crossing.
pub fn crossing_detect_polylines(a: &[Point], b: &[Point], translate: Point, disk: f64) -> Vec<Crossing> {
    if a.len() < 2 || b.len() < 2 {
        return Vec::new();
    }
    let bt: Vec<Point> = b.iter().map(|&p| p + translate).collect();
    let idx = build_index(&bt, Point::new(0.0, 0.0), 0.05);
    let (ca, cb) = (cumulative(a), cumulative(&bt));
    let mut out: Vec<Crossing> = Vec::new();
    for i in 0..a.len() - 1 {
        let (p0, p1) = (a[i], a[i + 1]);
        let lo = Point::new(p0.x.min(p1.x), p0.y.min(p1.y));
        let hi = Point::new(p0.x.max(p1.x), p0.y.max(p1.y));
        for id in idx.candidates(lo, hi) {
            let (q0, q1) = idx.segment(id);
            let Some((t, u)) = segment_intersection(p0, p1, q0, q1) else {
                continue;
            };
            let c = p0 + (p1 - p0) * t;
            if out.iter().rev().take(4).any(|o| o.point.dist(c) < 1e-9) {
                continue;
            }
            let j = id as usize;
            let sa = ca[i] + t * (ca[i + 1] - ca[i]);
            let sb = cb[j] + u * (cb[j + 1] - cb[j]);
            let chord = at_arclength(&bt, &cb, sb + disk) - at_arclength(&bt, &cb, sb - disk);
            let before = chord.cross(at_arclength(a, &ca, sa - disk) - c);
            let after = chord.cross(at_arclength(a, &ca, sa + disk) - c);
            out.push(Crossing {
                point: c,
                seg_a: i,
                seg_b: j,
                transverse: before * after < 0.0,
            });
        }
    }
    out
}

pub fn crossing_detect(a: &ManifoldArc, b: &ManifoldArc, translate: (i64, i64), disk: f64) -> Vec<Crossing> {
    let shift = Point::new(translate.0 as f64, translate.1 as f64);
    crossing_detect_polylines(&a.vertices, &b.vertices, shift, disk)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshVerdict {
    FullMeshEvidence,
    PartialMeshEvidence,
    None,
}

impl MeshVerdict {
    pub fn as_str(self) -> &'static str {
        match self {
            MeshVerdict::FullMeshEvidence => "full-mesh-evidence",
            MeshVerdict::PartialMeshEvidence => "partial-mesh-evidence",
            MeshVerdict::None => "none",
        }
    }
}

impl std::fmt::Display for MeshVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub a_min: i64,
    pub a_max: i64,
    pub b_min: i64,
    pub b_max: i64,
}

impl Window {
    pub fn square(r: i64) -> Self {
        Window {
            a_min: -r,
            a_max: r,
            b_min: -r,
            b_max: r,
        }
    }

    pub fn vectors(&self) -> Vec<(i64, i64)> {
        let mut out = Vec::new();
        for a in self.a_min..=self.a_max {
            for b in self.b_min..=self.b_max {
                out.push((a, b));
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MeshReport {
    /// Translates with at least one transverse crossing.
    pub vectors: Vec<(i64, i64)>,
    pub crossings: Vec<((i64, i64), Crossing)>,
    pub verdict: MeshVerdict,
    pub arcs: Vec<ManifoldArc>,
}

fn verdict_for(vectors: &[(i64, i64)], window: &Window) -> MeshVerdict {
    let all = window.vectors();
    if !all.is_empty() && all.iter().all(|v| vectors.contains(v)) {
        return MeshVerdict::FullMeshEvidence;
    }
    let nonzero: Vec<&(i64, i64)> = vectors.iter().filter(|v| **v != (0, 0)).collect();
    let independent = nonzero
        .iter()
        .enumerate()
        .any(|(i, a)| nonzero[i + 1..].iter().any(|b| a.0 * b.1 - a.1 * b.0 != 0));
    if independent {
        MeshVerdict::PartialMeshEvidence
    } else {
        MeshVerdict::None
    }
}

/// Crossings of the unstable branches with translates of the stable
/// branches for every vector in `window`.
pub fn mesh_probe(saddle: &Saddle, window: &Window, arclength: f64, params: &GrowParams) -> MeshReport {
    let arcs = grow_all(saddle, arclength, params);
    let unstable: Vec<&ManifoldArc> = arcs.iter().filter(|a| !a.branch.stable).collect();
    let stable: Vec<&ManifoldArc> = arcs.iter().filter(|a| a.branch.stable).collect();
    let per_vector: Vec<((i64, i64), Vec<Crossing>)> = window
        .vectors()
        .into_par_iter()
        .map(|v| {
            let mut found = Vec::new();
            for u in &unstable {
                for s in &stable {
                    found.extend(crossing_detect(u, s, v, SIDE_DISK));
                }
            }
            (v, found)
        })
        .collect();
    let mut vectors = Vec::new();
    let mut crossings = Vec::new();
    for (v, found) in per_vector {
        if found.iter().any(|c| c.transverse) {
            vectors.push(v);
        }
        crossings.extend(found.into_iter().map(|c| (v, c)));
    }
    let verdict = verdict_for(&vectors, window);
    MeshReport {
        vectors,
        crossings,
        verdict,
        arcs,
    }
}

pub const CROSSING_CSV_HEADER: &str = "a,b,x,y,transverse";

pub fn crossing_csv(crossings: &[((i64, i64), Crossing)]) -> String {
    let mut out = String::from(CROSSING_CSV_HEADER);
    out.push('\n');
    for ((a, b), c) in crossings {
        let _ = writeln!(out, "{a},{b},{:?},{:?},{}", c.point.x, c.point.y, c.transverse);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Above,
    Below,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundedness {
    /// The extremum was reached in the first quarter of the arc and never
    /// improved afterwards.
    BoundedEvidence { bound: f64 },
    /// The arc went past `limit`.
    UnboundedEvidence { excursion: f64 },
    Inconclusive { extremum: f64 },
}

impl std::fmt::Display for Boundedness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Boundedness::BoundedEvidence { bound } => write!(f, "bounded-evidence({bound:.6})"),
            Boundedness::UnboundedEvidence { excursion } => write!(f, "unbounded-evidence({excursion:.6})"),
            Boundedness::Inconclusive { extremum } => write!(f, "inconclusive({extremum:.6})"),
        }
    }
}

/// Running extremum of `y` along the arc, compared against `limit`.
pub fn boundedness_check(arc: &ManifoldArc, direction: Direction, limit: f64) -> Boundedness {
    let sign = match direction {
        Direction::Above => 1.0,
        Direction::Below => -1.0,
    };
    let cum = cumulative(&arc.vertices);
    let total = *cum.last().unwrap_or(&0.0);
    let mut best = f64::NEG_INFINITY;
    let mut best_at = 0.0;
    for (p, &s) in arc.vertices.iter().zip(&cum) {
        let v = sign * p.y;
        if v > best {
            best = v;
            best_at = s;
        }
    }
    let extremum = sign * best;
    if best > sign * limit {
        Boundedness::UnboundedEvidence { excursion: extremum }
    } else if best_at <= 0.25 * total {
        Boundedness::BoundedEvidence { bound: extremum }
    } else {
        Boundedness::Inconclusive { extremum }
    }
}

#[derive(Debug, Clone)]
pub struct AttractorApprox {
    pub p: i64,
    pub q: u32,
    /// `gamma, h(gamma), h^2(gamma), ...`
    pub iterates: Vec<EssentialCurve>,
    /// Hausdorff distance between consecutive iterates.
    pub steps: Vec<f64>,
}

impl AttractorApprox {
    pub fn last(&self) -> &EssentialCurve {
        self.iterates.last().expect("at least gamma")
    }

    /// Whether `z` lies in the closed region below the last iterate.
    pub fn hull_contains(&self, z: Point) -> bool {
        self.last().signed_distance(z) >= -NEST_TOL
    }

    /// Fraction of `samples` translated by `(0, -2)` that lie in the hull.
    pub fn sandwich_fraction(&self, samples: &[Point]) -> f64 {
        if samples.is_empty() {
            return 1.0;
        }
        let inside = samples
            .iter()
            .filter(|&&z| self.hull_contains(z - Point::new(0.0, 2.0)))
            .count();
        inside as f64 / samples.len() as f64
    }
}

const NEST_TOL: f64 = 1e-9;

fn map_curve(h: &AnnulusMap, curve: &EssentialCurve, spacing: f64) -> Option<EssentialCurve> {
    let src = curve.vertices();
    let mut out = vec![h.apply_lifted(src[0])];
    for w in src.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (*out.last().unwrap(), h.apply_lifted(b));
        push_refined(h, a, fa, b, fb, spacing, 0, &mut out);
    }
    EssentialCurve::new(out)
}

#[allow(clippy::too_many_arguments)]
fn push_refined(h: &AnnulusMap, a: Point, fa: Point, b: Point, fb: Point, spacing: f64, depth: u32, out: &mut Vec<Point>) {
    if fa.dist(fb) > spacing && depth < 24 {
        let m = (a + b) * 0.5;
        let fm = h.apply_lifted(m);
        push_refined(h, a, fa, m, fm, spacing, depth + 1, out);
        push_refined(h, m, fm, b, fb, spacing, depth + 1, out);
    } else {
        out.push(fb);
    }
}

fn hausdorff(a: &EssentialCurve, b: &EssentialCurve) -> f64 {
    let one = |x: &EssentialCurve, y: &EssentialCurve| x.vertices().iter().map(|&p| y.distance(p)).fold(0.0, f64::max);
    one(a, b).max(one(b, a))
}

/// Iterate a certified free curve forward, checking that each iterate lies
/// in the closed region below its predecessor.
pub fn attractor_approx(
    h: &AnnulusMap,
    cert: &FreeCurveCertificate,
    iters: usize,
    spacing: f64,
) -> Result<AttractorApprox> {
    let mut iterates = vec![cert.gamma.clone()];
    let mut steps = Vec::new();
    for i in 1..=iters {
        let prev = iterates.last().unwrap();
        let next = map_curve(h, prev, spacing)
            .ok_or_else(|| Error::InvalidArgument("image of the curve does not close".into()))?;
        if let Some(&z) = next.vertices().iter().find(|&&z| prev.signed_distance(z) < -NEST_TOL) {
            return Err(Error::NestingViolation {
                iteration: i,
                x: z.x,
                y: z.y,
            });
        }
        steps.push(hausdorff(prev, &next));
        iterates.push(next);
    }
    Ok(AttractorApprox {
        p: h.p,
        q: h.q,
        iterates,
        steps,
    })
}
