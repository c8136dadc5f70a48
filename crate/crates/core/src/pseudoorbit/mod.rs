//! Pseudo-orbit reachability for annulus maps `h = f^q(.) - (0, p)`.
//!
//! Starting from the layer `T^1 x [-1, 0]`, cells of a uniform grid on a
//! tall band are marked reachable by `eps`-pseudo-orbits through cell
//! centers. Either some pseudo-orbit climbs to the top of the band, or the
//! reachable region is bounded and its upper boundary yields a closed
//! essential curve `gamma` with `h(gamma)` strictly below `gamma`.

mod certificate;
mod extract;

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geometry::{annulus_dist, EssentialCurve, Point};
use crate::map_model::{twist_constants, AnnulusMap, TwistConstants};

pub use certificate::{read_certificate, write_certificate, Certificate, CheckReport};
pub use extract::extract_free_curve;

pub const DEFAULT_LADDER: [f64; 5] = [0.2, 0.1, 0.05, 0.02, 0.01];
pub const DEFAULT_CELL_CAP: usize = 40_000_000;
/// Number of curve vertices used when validating a certificate.
pub const VALIDATION_SAMPLES: usize = 4096;
const LIPSCHITZ_SAMPLES: usize = 64;
const LIPSCHITZ_PAD: f64 = 1.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandGrid {
    pub y_lo: f64,
    pub y_hi: f64,
    pub nx: usize,
    pub ny: usize,
    pub eps: f64,
}

impl BandGrid {
    pub fn dx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        (self.y_hi - self.y_lo) / self.ny as f64
    }

    pub fn cell_diameter(&self) -> f64 {
        self.dx().hypot(self.dy())
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    pub fn center(&self, i: usize, j: usize) -> Point {
        Point::new((i as f64 + 0.5) * self.dx(), self.y_lo + (j as f64 + 0.5) * self.dy())
    }

    /// Cell containing `z` (x taken modulo 1); `None` outside the band.
    pub fn locate(&self, z: Point) -> Option<(usize, usize)> {
        let x = z.x - z.x.floor();
        let j = ((z.y - self.y_lo) / self.dy()).floor();
        if j < 0.0 || j >= self.ny as f64 || !j.is_finite() {
            return None;
        }
        let i = ((x / self.dx()).floor() as usize).min(self.nx - 1);
        Some((i, j as usize))
    }
}

/// Height of the band `[-1, top]`, from the twist constants of the base map.
pub fn band_top(h: &AnnulusMap, c: &TwistConstants) -> f64 {
    10.0 + c.a + h.base.t().abs() + h.p.abs() as f64 + (10.0 + c.b) / c.k_tw + 1.0
}

/// Sampled sup of the operator norm of `Dh`, padded.
pub fn annulus_lipschitz(h: &AnnulusMap) -> f64 {
    let n = LIPSCHITZ_SAMPLES;
    let mut m = 1.0f64;
    for i in 0..n {
        for j in 0..n {
            let z = Point::new(i as f64 / n as f64, j as f64 / n as f64);
            m = m.max(h.apply_with_jacobian(z).1.norm());
        }
    }
    m * LIPSCHITZ_PAD
}

/// Band `[-1, top]` with cells small enough that the center relation
/// encloses the image of every cell with slack `eps / 4`.
pub fn make_band(h: &AnnulusMap, c: &TwistConstants, eps: f64, cap: usize) -> Result<BandGrid> {
    make_band_with_top(h, band_top(h, c), eps, cap)
}

pub fn make_band_with_top(h: &AnnulusMap, top: f64, eps: f64, cap: usize) -> Result<BandGrid> {
    if !(eps > 0.0) || !(top > 0.0) {
        return Err(Error::InvalidArgument("eps and band top must be positive".into()));
    }
    let m = annulus_lipschitz(h);
    let diam = (eps / 4.0).min(1.5 * eps / (m + 1.0));
    let side = 0.99 * diam / std::f64::consts::SQRT_2;
    let nx = (1.0 / side).ceil() as usize;
    let y_lo = -1.0;
    let ny = ((top - y_lo) / side).ceil() as usize;
    let cells = nx.saturating_mul(ny);
    if cells > cap {
        return Err(Error::ResourceLimit { cells, cap });
    }
    Ok(BandGrid {
        y_lo,
        y_hi: top,
        nx,
        ny,
        eps,
    })
}

const UNSEEN: u32 = u32::MAX;
const SOURCE: u32 = u32::MAX - 1;

#[derive(Debug, Clone)]
pub struct ReachSet {
    pub grid: BandGrid,
    /// Per cell: `UNSEEN`, `SOURCE`, or the index of the predecessor cell.
    pred: Vec<u32>,
    /// Cell from which the top of the band was reached, and the exit point.
    top_hit: Option<(usize, Point)>,
    /// Whether the closure was run to completion.
    complete: bool,
}

impl ReachSet {
    pub fn is_reached(&self, i: usize, j: usize) -> bool {
        self.pred[j * self.grid.nx + i] != UNSEEN
    }

    pub fn top_reached(&self) -> bool {
        self.top_hit.is_some()
    }

    pub fn is_complete(&self) -> bool {
        self.complete
    }

    pub fn reached_count(&self) -> usize {
        self.pred.iter().filter(|&&p| p != UNSEEN).count()
    }

    /// Highest reached row.
    pub fn max_row(&self) -> usize {
        let nx = self.grid.nx;
        (0..self.grid.ny)
            .rev()
            .find(|&j| (0..nx).any(|i| self.pred[j * nx + i] != UNSEEN))
            .unwrap_or(0)
    }
}

#[derive(PartialEq)]
struct Entry {
    y: f64,
    idx: u32,
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.y.total_cmp(&other.y).then(other.idx.cmp(&self.idx))
    }
}

/// Calls `visit(i, j)` for every cell whose center lies within `eps` of
/// `w` in the annulus metric.
fn cells_near(grid: &BandGrid, w: Point, eps: f64, mut visit: impl FnMut(usize, usize)) {
    let (dx, dy) = (grid.dx(), grid.dy());
    let wx = w.x - w.x.floor();
    let j_lo = (((w.y - eps - grid.y_lo) / dy) - 0.5).ceil().max(0.0);
    let j_hi = (((w.y + eps - grid.y_lo) / dy) - 0.5).floor().min(grid.ny as f64 - 1.0);
    if j_lo > j_hi {
        return;
    }
    for j in j_lo as usize..=j_hi as usize {
        let cy = grid.y_lo + (j as f64 + 0.5) * dy;
        let ddy = cy - w.y;
        let rem2 = eps * eps - ddy * ddy;
        if rem2 <= 0.0 {
            continue;
        }
        let rem = rem2.sqrt();
        let i_lo = ((wx - rem) / dx - 0.5).ceil() as i64;
        let i_hi = ((wx + rem) / dx - 0.5).floor() as i64;
        if i_hi - i_lo + 1 >= grid.nx as i64 {
            for i in 0..grid.nx {
                visit(i, j);
            }
            continue;
        }
        for i in i_lo..=i_hi {
            let ii = i.rem_euclid(grid.nx as i64) as usize;
            // Strict inequality of the pseudo-orbit condition.
            let c = Point::new((ii as f64 + 0.5) * dx, cy);
            if annulus_dist(c, w) < eps {
                visit(ii, j);
            }
        }
    }
}

/// Closure of the source layer under the relation "the center of B is
/// within eps of h(center of A)". The search expands the highest cell
/// first; with `stop_at_top` it returns as soon as the top is reached.
pub fn reachable_set(h: &AnnulusMap, grid: &BandGrid, stop_at_top: bool) -> ReachSet {
    let n = grid.cells();
    let mut pred = vec![UNSEEN; n];
    let mut heap = BinaryHeap::new();
    let nx = grid.nx;
    for j in 0..grid.ny {
        let c = grid.center(0, j);
        if c.y > 0.0 {
            break;
        }
        for i in 0..nx {
            let idx = j * nx + i;
            pred[idx] = SOURCE;
            heap.push(Entry {
                y: c.y,
                idx: idx as u32,
            });
        }
    }
    let mut top_hit = None;
    let eps = grid.eps;
    while let Some(Entry { idx, .. }) = heap.pop() {
        let idx = idx as usize;
        let w = h.apply(grid.center(idx % nx, idx / nx));
        if !w.y.is_finite() {
            continue;
        }
        if top_hit.is_none() && w.y + eps > grid.y_hi {
            top_hit = Some((idx, Point::new(w.x - w.x.floor(), w.y + 0.5 * eps)));
            if stop_at_top {
                return ReachSet {
                    grid: *grid,
                    pred,
                    top_hit,
                    complete: false,
                };
            }
        }
        cells_near(grid, w, eps, |a, b| {
            let k = b * nx + a;
            if pred[k] == UNSEEN {
                pred[k] = idx as u32;
                heap.push(Entry {
                    y: grid.y_lo + (b as f64 + 0.5) * grid.dy(),
                    idx: k as u32,
                });
            }
        });
    }
    ReachSet {
        grid: *grid,
        pred,
        top_hit,
        complete: true,
    }
}

/// An `eps`-pseudo-orbit from the source layer to the top of the band.
#[derive(Debug, Clone, PartialEq)]
pub struct ClimbingPath {
    pub eps: f64,
    pub cells: Vec<(usize, usize)>,
    pub points: Vec<Point>,
    pub grid: BandGrid,
}

impl ClimbingPath {
    /// Largest `dist(h(z_i), z_{i+1})` re-evaluated along the path.
    pub fn max_step_error(&self, h: &AnnulusMap) -> f64 {
        self.points
            .windows(2)
            .map(|w| annulus_dist(h.apply(w[0]), w[1]))
            .fold(0.0, f64::max)
    }

    /// Every step within `eps`, starting at or below height 0 and ending
    /// within `eps` of the band top.
    pub fn validate(&self, h: &AnnulusMap) -> bool {
        let (Some(first), Some(last)) = (self.points.first(), self.points.last()) else {
            return false;
        };
        first.y <= 0.0 && last.y >= self.grid.y_hi - self.eps && self.max_step_error(h) < self.eps
    }
}

pub fn climbing_path(r: &ReachSet) -> Option<ClimbingPath> {
    let (mut idx, exit) = r.top_hit?;
    let nx = r.grid.nx;
    let mut cells = vec![(idx % nx, idx / nx)];
    loop {
        let p = r.pred[idx];
        if p == SOURCE || p == UNSEEN {
            break;
        }
        idx = p as usize;
        cells.push((idx % nx, idx / nx));
    }
    cells.reverse();
    let mut points: Vec<Point> = cells.iter().map(|&(i, j)| r.grid.center(i, j)).collect();
    points.push(exit);
    Some(ClimbingPath {
        eps: r.grid.eps,
        cells,
        points,
        grid: r.grid,
    })
}

#[derive(Debug, Clone)]
pub struct FreeCurveCertificate {
    pub gamma: EssentialCurve,
    /// Min signed distance from sampled `h(gamma)` down to `gamma`.
    pub clearance: f64,
    pub p: i64,
    pub q: u32,
    pub eps: f64,
    pub grid: BandGrid,
}

/// Min over `samples` equally spaced vertices `v` of the signed distance of
/// `h(v)` below `gamma`; negative when some image is not below.
pub fn curve_clearance(h: &AnnulusMap, gamma: &EssentialCurve, samples: usize) -> f64 {
    gamma
        .resample(samples)
        .into_iter()
        .map(|v| gamma.signed_distance(h.apply(v)))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone)]
pub enum Outcome {
    FreeCurve(FreeCurveCertificate),
    Climbing(ClimbingPath),
    Indeterminate(String),
}

impl Outcome {
    /// Process exit status: 0 free curve, 1 climbing path, 2 indeterminate.
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::FreeCurve(_) => 0,
            Outcome::Climbing(_) => 1,
            Outcome::Indeterminate(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DichotomyConfig {
    pub ladder: Vec<f64>,
    pub cell_cap: usize,
    /// Band top override; `None` uses the twist-constant height.
    pub band_top: Option<f64>,
    pub validation_samples: usize,
}

impl Default for DichotomyConfig {
    fn default() -> Self {
        Self {
            ladder: DEFAULT_LADDER.to_vec(),
            cell_cap: DEFAULT_CELL_CAP,
            band_top: None,
            validation_samples: VALIDATION_SAMPLES,
        }
    }
}

/// Walk down the eps ladder: a bounded reachable set yields a validated
/// free curve; a climbing pseudo-orbit at the smallest eps yields a
/// climbing path; otherwise the outcome is indeterminate.
pub fn dichotomy(h: &AnnulusMap, cfg: &DichotomyConfig) -> Result<Outcome> {
    if cfg.ladder.is_empty() || cfg.ladder.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::InvalidArgument("eps ladder must be nonempty and decreasing".into()));
    }
    let top = match cfg.band_top {
        Some(t) => t,
        None => band_top(h, &twist_constants(&h.base, 64)?),
    };
    let mut notes = Vec::new();
    for (level, &eps) in cfg.ladder.iter().enumerate() {
        let grid = match make_band_with_top(h, top, eps, cfg.cell_cap) {
            Ok(g) => g,
            Err(Error::ResourceLimit { cells, cap }) => {
                notes.push(format!("eps {eps}: grid of {cells} cells exceeds cap {cap}"));
                break;
            }
            Err(e) => return Err(e),
        };
        let last = level + 1 == cfg.ladder.len();
        let reach = reachable_set(h, &grid, true);
        if reach.top_reached() {
            if last {
                let path = climbing_path(&reach).expect("top reached");
                return Ok(Outcome::Climbing(path));
            }
            log::debug!("eps {eps}: top of band reached, refining");
            continue;
        }
        match extract_free_curve(&reach, h, cfg.validation_samples) {
            Ok(cert) => return Ok(Outcome::FreeCurve(cert)),
            Err(e) => notes.push(format!("eps {eps}: {e}")),
        }
    }
    Ok(Outcome::Indeterminate(if notes.is_empty() {
        "no conclusion on the eps ladder".into()
    } else {
        notes.join("; ")
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub checked: usize,
    pub violations: usize,
    pub worst: Option<Point>,
    /// True when the top was reached and the audit holds vacuously.
    pub vacuous: bool,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

/// Sample a `k x k` lattice in each reached cell (boundaries included) and
/// check that the images land in reached cells or below the band.
pub fn forward_invariance_audit(r: &ReachSet, h: &AnnulusMap, per_side: usize) -> InvarianceReport {
    let mut rep = InvarianceReport {
        checked: 0,
        violations: 0,
        worst: None,
        vacuous: false,
    };
    if r.top_reached() || !r.is_complete() {
        rep.vacuous = true;
        return rep;
    }
    let g = &r.grid;
    let k = per_side.max(2);
    for j in 0..g.ny {
        for i in 0..g.nx {
            if !r.is_reached(i, j) {
                continue;
            }
            for a in 0..k {
                for b in 0..k {
                    let z = Point::new(
                        (i as f64 + a as f64 / (k - 1) as f64) * g.dx(),
                        g.y_lo + (j as f64 + b as f64 / (k - 1) as f64) * g.dy(),
                    );
                    let w = h.apply(z);
                    rep.checked += 1;
                    let ok = if w.y < g.y_lo {
                        true
                    } else {
                        matches!(g.locate(w), Some((a2, b2)) if r.is_reached(a2, b2))
                    };
                    if !ok {
                        rep.violations += 1;
                        rep.worst.get_or_insert(z);
                    }
                }
            }
        }
    }
    rep
}

#[derive(Debug, Clone)]
pub enum CipOutcome {
    /// A free curve mapped below itself (`downward`) or, for the flipped
    /// map, above itself.
    FreeCurveFound { downward: bool, cert: FreeCurveCertificate },
    /// Pseudo-orbits climb in both directions at the smallest eps.
    CipConsistent,
    Indeterminate(String),
}

/// Run the dichotomy for `h` and for its conjugate by `(x, y) -> (x, -y)`.
pub fn cip_probe(h: &AnnulusMap, cfg: &DichotomyConfig) -> Result<CipOutcome> {
    let down = dichotomy(h, cfg)?;
    if let Outcome::FreeCurve(cert) = down {
        return Ok(CipOutcome::FreeCurveFound { downward: true, cert });
    }
    let up = dichotomy(&h.flipped(), cfg)?;
    if let Outcome::FreeCurve(cert) = up {
        return Ok(CipOutcome::FreeCurveFound { downward: false, cert });
    }
    match (down, up) {
        (Outcome::Climbing(_), Outcome::Climbing(_)) => Ok(CipOutcome::CipConsistent),
        (a, b) => Ok(CipOutcome::Indeterminate(format!(
            "downward exit {}, upward exit {}",
            a.exit_code(),
            b.exit_code()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_model::LiftSpec;

    fn toy(t: f64) -> AnnulusMap {
        AnnulusMap::new(LiftSpec::integrable(1, t), 1, 0).unwrap()
    }

    #[test]
    fn band_height_for_integrable() {
        let h = toy(0.0);
        let c = twist_constants(&h.base, 64).unwrap();
        let top = band_top(&h, &c);
        assert!((top + 1.0 - 22.5).abs() < 0.01, "{top}");
        let h2 = AnnulusMap::new(LiftSpec::integrable(1, 0.0), 1, 2).unwrap();
        assert!((band_top(&h2, &c) - top - 2.0).abs() < 1e-12);
    }

    #[test]
    fn descending_toy_stays_low() {
        let h = toy(-0.3);
        let g = make_band_with_top(&h, 5.0, 0.05, DEFAULT_CELL_CAP).unwrap();
        let r = reachable_set(&h, &g, false);
        assert!(!r.top_reached());
        assert!(g.center(0, r.max_row()).y < 0.1);
        assert!(forward_invariance_audit(&r, &h, 3).passed());
    }

    #[test]
    fn ascending_toy_climbs() {
        let h = toy(0.3);
        let g = make_band_with_top(&h, 5.0, 0.05, DEFAULT_CELL_CAP).unwrap();
        let r = reachable_set(&h, &g, true);
        let path = climbing_path(&r).unwrap();
        assert!(path.validate(&h));
    }

    #[test]
    fn descending_toy_certifies_and_roundtrips() {
        let h = toy(-0.3);
        let cfg = DichotomyConfig::default();
        let Outcome::FreeCurve(cert) = dichotomy(&h, &cfg).unwrap() else {
            panic!("expected a free curve");
        };
        assert!(cert.clearance >= 0.2, "{}", cert.clearance);
        let text = write_certificate(&h, &Outcome::FreeCurve(cert.clone())).unwrap();
        let back = read_certificate(&text).unwrap();
        let rep = back.check(4 * VALIDATION_SAMPLES);
        assert!(rep.valid && (rep.value - cert.clearance).abs() < 1e-3);
        let tampered = text.replace("t = (-0.3)", "t = 0.3");
        assert!(matches!(read_certificate(&tampered), Err(Error::CertificateFormat { .. })));
    }

    #[test]
    fn ascending_toy_path_roundtrips() {
        let h = toy(0.3);
        let cfg = DichotomyConfig {
            ladder: vec![0.05],
            ..DichotomyConfig::default()
        };
        let out = dichotomy(&h, &cfg).unwrap();
        assert_eq!(out.exit_code(), 1);
        let back = read_certificate(&write_certificate(&h, &out).unwrap()).unwrap();
        assert!(back.check(0).valid);
    }
}
