//! Periodic orbits of type `(s, p, q)`: points with `f^q(z) = z + (s, p)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{torus_dist, Mat2, Point};
use crate::lecalvez::{admissible_s, fiber_roots, root_window};
use crate::map_model::LiftSpec;

/// Residual below which an orbit is accepted.
pub const ORBIT_TOL: f64 = 1e-8;

/// `f^q(z) - z - (s, p)` and its differential.
pub fn orbit_defect(lift: &LiftSpec, s: i64, p: i64, q: u32, z: Point) -> (Point, Mat2) {
    let mut w = z;
    let mut jac = Mat2::IDENTITY;
    for _ in 0..q {
        let (next, j) = lift.apply_with_jacobian(w);
        jac = j.mul(&jac);
        w = next;
    }
    (w - z - Point::new(s as f64, p as f64), jac)
}

fn max_norm(p: Point) -> f64 {
    p.x.abs().max(p.y.abs())
}

/// Damped Newton with a Levenberg-Marquardt fallback when the differential
/// of the defect is near singular. Returns the point and its residual.
pub fn solve_orbit(lift: &LiftSpec, s: i64, p: i64, q: u32, z0: Point) -> Option<(Point, f64)> {
    let mut z = z0;
    let (mut g, mut dq) = orbit_defect(lift, s, p, q, z);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let res = max_norm(g);
        if res < 1e-13 {
            break;
        }
        let j = Mat2::new(dq.a - 1.0, dq.b, dq.c, dq.d - 1.0);
        let mut improved = false;
        // Plain Newton with backtracking first.
        if let Some(inv) = j.inverse() {
            let step = inv.apply(g);
            let mut t = 1.0;
            for _ in 0..12 {
                let cand = z - step * t;
                let (gc, dc) = orbit_defect(lift, s, p, q, cand);
                if gc.norm() < g.norm() {
                    z = cand;
                    g = gc;
                    dq = dc;
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if !improved {
            // (J^T J + lambda I) delta = J^T g
            for _ in 0..20 {
                let jtj = Mat2::new(
                    j.a * j.a + j.c * j.c + lambda,
                    j.a * j.b + j.c * j.d,
                    j.a * j.b + j.c * j.d,
                    j.b * j.b + j.d * j.d + lambda,
                );
                let jtg = Point::new(j.a * g.x + j.c * g.y, j.b * g.x + j.d * g.y);
                let Some(inv) = jtj.inverse() else {
                    lambda *= 10.0;
                    continue;
                };
                let cand = z - inv.apply(jtg);
                let (gc, dc) = orbit_defect(lift, s, p, q, cand);
                if gc.norm() < g.norm() {
                    z = cand;
                    g = gc;
                    dq = dc;
                    lambda = (lambda * 0.1).max(1e-12);
                    improved = true;
                    break;
                }
                lambda *= 10.0;
            }
        }
        if !improved {
            break;
        }
    }
    let res = max_norm(g);
    (res.is_finite() && res < ORBIT_TOL).then_some((z, res))
}

/// Eigenvalues of the differential of `f^q` at `z`.
pub fn orbit_eigenvalues(lift: &LiftSpec, q: u32, z: Point) -> [Complex64; 2] {
    orbit_defect(lift, 0, 0, q, z).1.eigenvalues()
}

/// Eigenvalues within this distance of `+1` or `-1` are flagged parabolic.
pub const PARABOLIC_TOL: f64 = 1e-6;
/// Distinct converged representatives that indicate a curve of fixed points.
pub const DEGENERATE_COUNT: usize = 32;
const DEDUP_TOL: f64 = 1e-6;
const COVERAGE_WARN: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OrbitKind {
    Saddle,
    ReflectionSaddle,
    Elliptic,
    Parabolic,
    Node,
}

impl OrbitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitKind::Saddle => "saddle",
            OrbitKind::ReflectionSaddle => "reflection-saddle",
            OrbitKind::Elliptic => "elliptic",
            OrbitKind::Parabolic => "parabolic",
            OrbitKind::Node => "node",
        }
    }
}

impl std::fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Kind and fixed point index from the eigenvalues of `D f^q`.
///
/// The index is the sign of `det(I - D f^q)`; it is reported as 0 for
/// parabolic orbits, whose index is not determined by the linearisation.
pub fn classify_eigenvalues(ev: [Complex64; 2]) -> (OrbitKind, i32) {
    let near = |l: Complex64, v: f64| (l - Complex64::new(v, 0.0)).norm() < PARABOLIC_TOL;
    if ev.iter().any(|&l| near(l, 1.0) || near(l, -1.0)) {
        return (OrbitKind::Parabolic, 0);
    }
    if ev[0].im != 0.0 {
        let kind = if (ev[0].norm() - 1.0).abs() < PARABOLIC_TOL {
            OrbitKind::Elliptic
        } else {
            OrbitKind::Node
        };
        return (kind, 1);
    }
    let (a, b) = (ev[0].re, ev[1].re);
    let index = if (1.0 - a) * (1.0 - b) > 0.0 { 1 } else { -1 };
    let split = (a.abs() > 1.0) != (b.abs() > 1.0);
    let kind = if !split {
        OrbitKind::Node
    } else if a > 0.0 && b > 0.0 {
        OrbitKind::Saddle
    } else if a < 0.0 && b < 0.0 {
        OrbitKind::ReflectionSaddle
    } else {
        // Eigenvalues of opposite sign only occur for orientation reversing
        // differentials; keep the computed index.
        OrbitKind::Saddle
    };
    (kind, index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    /// Horizontal displacement relative to the first point of `points`.
    pub s: i64,
    pub p: i64,
    pub q: u32,
    /// The torus orbit in `[0, 1)^2`, starting at its lexicographically
    /// smallest point and following the map.
    pub points: Vec<Point>,
    pub residual: f64,
    /// Eigenvalues of `D f^q` at `points[0]`, largest modulus first.
    pub eigenvalues: [Complex64; 2],
    pub kind: OrbitKind,
    pub index: i32,
}

impl PeriodicOrbit {
    pub fn anchor(&self) -> Point {
        self.points[0]
    }

    pub fn is_parabolic(&self) -> bool {
        self.kind == OrbitKind::Parabolic
    }
}

fn reduce(z: Point) -> (Point, i64, i64) {
    let (mut fx, mut fy) = (z.x.floor(), z.y.floor());
    let (mut x, mut y) = (z.x - fx, z.y - fy);
    // Values a rounding error below 1 are treated as 0.
    if x > 1.0 - 1e-12 {
        x = 0.0;
        fx += 1.0;
    }
    if y > 1.0 - 1e-12 {
        y = 0.0;
        fy += 1.0;
    }
    (Point::new(x, y), fx as i64, fy as i64)
}

fn lex_less(a: Point, b: Point) -> bool {
    if (a.x - b.x).abs() > DEDUP_TOL {
        a.x < b.x
    } else {
        a.y < b.y - DEDUP_TOL
    }
}

/// Build the canonical orbit through a converged lifted point.
pub fn canonical_orbit(lift: &LiftSpec, s: i64, p: i64, q: u32, z: Point) -> PeriodicOrbit {
    let k = lift.k();
    let mut lifted = Vec::with_capacity(q as usize);
    let mut w = z;
    for _ in 0..q {
        lifted.push(w);
        w = lift.apply(w);
    }
    // Shifting a lifted point by (m, n) turns an (s, p, q) orbit into an
    // (s + k q n, p, q) orbit, and the i-th iterate of an (s, p, q) point
    // is an (s + i k p, p, q) point.
    let reduced: Vec<(Point, i64)> = lifted
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let (r, _, n) = reduce(w);
            (r, s + i as i64 * k * p - k * q as i64 * n)
        })
        .collect();
    let start = (0..reduced.len())
        .reduce(|best, i| if lex_less(reduced[i].0, reduced[best].0) { i } else { best })
        .unwrap_or(0);
    let (anchor, s0) = reduced[start];
    let points: Vec<Point> = (0..reduced.len()).map(|i| reduced[(start + i) % reduced.len()].0).collect();
    let residual = reduced
        .iter()
        .map(|&(r, si)| max_norm(orbit_defect(lift, si, p, q, r).0))
        .fold(0.0, f64::max);
    let mut ev = orbit_eigenvalues(lift, q, anchor);
    if ev[1].norm() > ev[0].norm() {
        ev.swap(0, 1);
    }
    let (kind, index) = classify_eigenvalues(ev);
    PeriodicOrbit {
        s: s0,
        p,
        q,
        points,
        residual,
        eigenvalues: ev,
        kind,
        index,
    }
}

/// Recompute eigen-data, kind and index of an orbit.
pub fn classify(orbit: &PeriodicOrbit, lift: &LiftSpec) -> PeriodicOrbit {
    let mut out = orbit.clone();
    let mut ev = orbit_eigenvalues(lift, orbit.q, orbit.anchor());
    if ev[1].norm() > ev[0].norm() {
        ev.swap(0, 1);
    }
    out.eigenvalues = ev;
    (out.kind, out.index) = classify_eigenvalues(ev);
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedGrid {
    pub nx: usize,
    pub ny: usize,
    /// Also start from roots of the horizontal displacement equation.
    pub envelope_seeds: bool,
}

impl Default for SeedGrid {
    fn default() -> Self {
        SeedGrid {
            nx: 48,
            ny: 48,
            envelope_seeds: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrbitSearch {
    pub orbits: Vec<PeriodicOrbit>,
    /// Many distinct solutions were found: the fixed set is a curve.
    pub degenerate_curve: bool,
    /// Fraction of lattice seeds that converged to an orbit.
    pub coverage: f64,
}

fn seeds(lift: &LiftSpec, s: i64, q: u32, grid: &SeedGrid) -> (Vec<Point>, usize) {
    let (lo, hi) = root_window(lift, s, q);
    let mut out = Vec::with_capacity(grid.nx * grid.ny);
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            out.push(Point::new(
                (i as f64 + 0.5) / grid.nx as f64,
                lo + (hi - lo) * (j as f64 + 0.5) / grid.ny as f64,
            ));
        }
    }
    let lattice = out.len();
    if grid.envelope_seeds {
        let extra: Vec<Vec<Point>> = (0..grid.nx)
            .into_par_iter()
            .map(|i| {
                let x = i as f64 / grid.nx as f64;
                fiber_roots(lift, s, q, x).into_iter().map(|y| Point::new(x, y)).collect()
            })
            .collect();
        out.extend(extra.into_iter().flatten());
    }
    (out, lattice)
}

/// Solve `f^q(z) = z + (s, p)` from every seed and deduplicate the
/// solutions modulo integer translations and cycling along the orbit.
pub fn find_orbits(lift: &LiftSpec, s: i64, p: i64, q: u32, grid: &SeedGrid) -> Result<OrbitSearch> {
    if q == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    let (seeds, lattice) = seeds(lift, s, q, grid);
    let solved: Vec<Option<Point>> = seeds
        .par_iter()
        .map(|&z0| solve_orbit(lift, s, p, q, z0).map(|(z, _)| z))
        .collect();
    let converged = solved[..lattice].iter().filter(|z| z.is_some()).count();
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    for z in solved.into_iter().flatten() {
        let orbit = canonical_orbit(lift, s, p, q, z);
        if orbit.residual >= ORBIT_TOL {
            continue;
        }
        if orbits.iter().any(|o| torus_dist(o.anchor(), orbit.anchor()) < DEDUP_TOL) {
            continue;
        }
        orbits.push(orbit);
    }
    let degenerate_curve = orbits.len() >= DEGENERATE_COUNT;
    if degenerate_curve {
        orbits.clear();
    }
    orbits.sort_by(|a, b| a.anchor().x.total_cmp(&b.anchor().x).then(a.anchor().y.total_cmp(&b.anchor().y)));
    Ok(OrbitSearch {
        orbits,
        degenerate_curve,
        coverage: converged as f64 / lattice.max(1) as f64,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LefschetzReport {
    pub p: i64,
    pub q: u32,
    pub orbits: Vec<PeriodicOrbit>,
    /// Sum of indices over non-parabolic orbits; 0 when the census is complete.
    pub index_sum: i32,
    pub census: BTreeMap<OrbitKind, usize>,
    pub coverage: f64,
    pub degenerate_curve: bool,
    pub warnings: Vec<String>,
}

impl LefschetzReport {
    /// The census is usable and its index sum vanishes.
    pub fn passed(&self) -> bool {
        !self.degenerate_curve && !self.census.contains_key(&OrbitKind::Parabolic) && self.index_sum == 0
    }
}

/// Census of all `(s, p, q)` orbits over the residues of `s` modulo `|k| q`.
pub fn lefschetz_audit(lift: &LiftSpec, p: i64, q: u32, grid: &SeedGrid) -> Result<LefschetzReport> {
    let mut orbits: Vec<PeriodicOrbit> = Vec::new();
    let mut warnings = Vec::new();
    let mut coverage: f64 = 1.0;
    let mut degenerate_curve = false;
    for s in admissible_s(lift, q) {
        let found = find_orbits(lift, s, p, q, grid)?;
        coverage = coverage.min(found.coverage);
        degenerate_curve |= found.degenerate_curve;
        for o in found.orbits {
            if !orbits.iter().any(|e| torus_dist(e.anchor(), o.anchor()) < DEDUP_TOL) {
                orbits.push(o);
            }
        }
    }
    orbits.sort_by(|a, b| a.anchor().x.total_cmp(&b.anchor().x).then(a.anchor().y.total_cmp(&b.anchor().y)));
    if degenerate_curve {
        warnings.push("fixed set contains a curve; index sum is not meaningful".to_string());
    }
    if coverage < COVERAGE_WARN {
        warnings.push(format!(
            "only {:.1}% of seeds converged; the census may be incomplete",
            100.0 * coverage
        ));
    }
    let mut census = BTreeMap::new();
    let mut index_sum = 0;
    for o in &orbits {
        *census.entry(o.kind).or_insert(0) += 1;
        if o.is_parabolic() {
            warnings.push(format!(
                "parabolic orbit at ({:.6}, {:.6}) excluded from the index sum",
                o.anchor().x,
                o.anchor().y
            ));
        } else {
            index_sum += o.index;
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(LefschetzReport {
        p,
        q,
        orbits,
        index_sum,
        census,
        coverage,
        degenerate_curve,
        warnings,
    })
}

pub const ORBIT_CSV_HEADER: &str = "s,p,q,x,y,kind,index,lambda_re,lambda_im,residual";

/// One row per orbit, at its anchor point, with the leading eigenvalue.
pub fn orbit_csv(orbits: &[PeriodicOrbit]) -> String {
    let mut out = String::from(ORBIT_CSV_HEADER);
    out.push('\n');
    for o in orbits {
        let z = o.anchor();
        let l = o.eigenvalues[0];
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{},{},{:?},{:?},{:e}",
            o.s, o.p, o.q, z.x, z.y, o.kind, o.index, l.re, l.im, o.residual
        );
    }
    out
}
