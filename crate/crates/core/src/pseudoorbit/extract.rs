//! Free-curve extraction from a bounded reachable set.
//!
//! The unreached cells connected to the top row (4-connectivity) form a
//! region whose lower boundary is traced along cell edges. Every point of
//! the union of reached cells is mapped at least `eps / 4` inside it, so
//! this boundary is mapped strictly below itself; the traced curve is then
//! re-validated directly.

use std::collections::{HashMap, VecDeque};

use super::{curve_clearance, AnnulusMap, FreeCurveCertificate, ReachSet};
use crate::error::{Error, Result};
use crate::geometry::{merge_collinear, EssentialCurve, Point};

/// Directions: 0 = +x, 1 = +y, 2 = -x, 3 = -y.
const STEP: [(i64, i64); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

struct Edge {
    from: (usize, usize),
    dir: u8,
}

pub fn extract_free_curve(r: &ReachSet, h: &AnnulusMap, samples: usize) -> Result<FreeCurveCertificate> {
    if r.top_reached() || !r.is_complete() {
        return Err(Error::InvalidArgument(
            "curve extraction needs a complete reachable set that misses the top".into(),
        ));
    }
    let g = &r.grid;
    let nx = g.nx;
    // Work on rows up to a little above the highest reached row; everything
    // above is unreached and connected to the top.
    let rows = (r.max_row() + 3).min(g.ny);
    let mut top_region = vec![false; nx * rows];
    let mut queue = VecDeque::new();
    for i in 0..nx {
        let j = rows - 1;
        if !r.is_reached(i, j) {
            top_region[j * nx + i] = true;
            queue.push_back((i, j));
        }
    }
    while let Some((i, j)) = queue.pop_front() {
        let mut nbrs = vec![((i + 1) % nx, j), ((i + nx - 1) % nx, j)];
        if j > 0 {
            nbrs.push((i, j - 1));
        }
        if j + 1 < rows {
            nbrs.push((i, j + 1));
        }
        for (a, b) in nbrs {
            let k = b * nx + a;
            if !top_region[k] && !r.is_reached(a, b) {
                top_region[k] = true;
                queue.push_back((a, b));
            }
        }
    }
    let in_top = |i: usize, j: i64| -> bool {
        if j < 0 {
            false
        } else if j as usize >= rows {
            true
        } else {
            top_region[j as usize * nx + i]
        }
    };

    // Boundary edges oriented with the top region on the left.
    let mut edges: Vec<Edge> = Vec::new();
    for j in 0..rows {
        for i in 0..nx {
            if !top_region[j * nx + i] {
                continue;
            }
            let ji = j as i64;
            if !in_top(i, ji - 1) {
                edges.push(Edge { from: (i, j), dir: 0 });
            }
            if !in_top(i, ji + 1) {
                edges.push(Edge {
                    from: ((i + 1) % nx, j + 1),
                    dir: 2,
                });
            }
            if !in_top((i + nx - 1) % nx, ji) {
                edges.push(Edge { from: (i, j + 1), dir: 3 });
            }
            if !in_top((i + 1) % nx, ji) {
                edges.push(Edge {
                    from: ((i + 1) % nx, j),
                    dir: 1,
                });
            }
        }
    }
    let mut out_edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (id, e) in edges.iter().enumerate() {
        out_edges.entry(e.from).or_default().push(id);
    }
    let mut used = vec![false; edges.len()];
    let mut best: Option<(f64, Vec<(i64, usize)>)> = None;
    for start in 0..edges.len() {
        if used[start] {
            continue;
        }
        // Lifted vertex sequence: (x index without wrapping, y index).
        let mut lifted = vec![(edges[start].from.0 as i64, edges[start].from.1)];
        let mut cur = start;
        loop {
            used[cur] = true;
            let e = &edges[cur];
            let (sx, sy) = STEP[e.dir as usize];
            let (lx, ly) = *lifted.last().unwrap();
            let next_lifted = (lx + sx, (ly as i64 + sy) as usize);
            lifted.push(next_lifted);
            let at = (next_lifted.0.rem_euclid(nx as i64) as usize, next_lifted.1);
            // Prefer left, then straight, then right.
            let candidates = out_edges.get(&at).map(|v| v.as_slice()).unwrap_or(&[]);
            let mut next = None;
            for turn in [1u8, 0, 3] {
                let want = (e.dir + turn) % 4;
                if let Some(&id) = candidates.iter().find(|&&id| edges[id].dir == want && !used[id]) {
                    next = Some(id);
                    break;
                }
                if candidates.iter().any(|&id| id == start && edges[id].dir == want) {
                    break;
                }
            }
            match next {
                Some(id) => cur = id,
                None => break,
            }
        }
        let (first, last) = (lifted[0], *lifted.last().unwrap());
        let winding = last.0 - first.0;
        if last.1 != first.1 || winding != nx as i64 {
            continue;
        }
        let mean_y = lifted.iter().map(|v| v.1 as f64).sum::<f64>() / lifted.len() as f64;
        if best.as_ref().is_none_or(|(m, _)| mean_y < *m) {
            best = Some((mean_y, lifted));
        }
    }
    let (_, lifted) = best.ok_or_else(|| Error::InvalidArgument("no essential boundary component found".into()))?;
    let pts: Vec<Point> = lifted
        .iter()
        .map(|&(i, j)| Point::new(i as f64 * g.dx(), g.y_lo + j as f64 * g.dy()))
        .collect();
    let pts = merge_collinear(&pts);
    let gamma = EssentialCurve::new(pts).ok_or_else(|| Error::InvalidArgument("traced boundary does not close".into()))?;
    let clearance = curve_clearance(h, &gamma, samples);
    if !(clearance > 0.0) {
        return Err(Error::ValidationFailed { clearance });
    }
    Ok(FreeCurveCertificate {
        gamma,
        clearance,
        p: h.p,
        q: h.q,
        eps: g.eps,
        grid: *g,
    })
}
