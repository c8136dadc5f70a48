//! Plain-text certificate files that a third party can re-check from the
//! map definition alone.
//!
//! ```text
//! twistmap-certificate v1
//! kind free-curve            (or climbing-path)
//! map-hash <sha256 of the [map] section>
//! p <int>
//! q <int>
//! eps <float>
//! grid <nx> <ny> <y_lo> <y_hi>
//! clearance <float>          (free-curve only)
//! [map]
//! <canonical map definition>
//! [gamma]                    (or [path])
//! <x> <y>
//! ...
//! [end]
//! ```

use std::fmt::Write as _;

use super::{curve_clearance, BandGrid, ClimbingPath, FreeCurveCertificate, Outcome};
use crate::error::{Error, Result};
use crate::geometry::{EssentialCurve, Point};
use crate::map_model::{parse_lift, AnnulusMap, LiftSpec};

pub const HEADER: &str = "twistmap-certificate v1";

#[derive(Debug, Clone)]
pub enum Certificate {
    FreeCurve { map: AnnulusMap, cert: FreeCurveCertificate },
    Climbing { map: AnnulusMap, path: ClimbingPath },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckReport {
    pub valid: bool,
    /// Re-evaluated clearance for a free curve, or the largest step error
    /// for a climbing path.
    pub value: f64,
}

impl Certificate {
    pub fn map(&self) -> &AnnulusMap {
        match self {
            Certificate::FreeCurve { map, .. } | Certificate::Climbing { map, .. } => map,
        }
    }

    /// Re-validate with `samples` curve vertices (ignored for paths).
    pub fn check(&self, samples: usize) -> CheckReport {
        match self {
            Certificate::FreeCurve { map, cert } => {
                let c = curve_clearance(map, &cert.gamma, samples);
                CheckReport { valid: c > 0.0, value: c }
            }
            Certificate::Climbing { map, path } => CheckReport {
                valid: path.validate(map),
                value: path.max_step_error(map),
            },
        }
    }
}

/// Serialise an outcome; indeterminate outcomes have no certificate.
pub fn write_certificate(h: &AnnulusMap, outcome: &Outcome) -> Option<String> {
    match outcome {
        Outcome::FreeCurve(c) => Some(write_free_curve(h, c)),
        Outcome::Climbing(p) => Some(write_climbing_path(h, p)),
        Outcome::Indeterminate(_) => None,
    }
}

fn head(out: &mut String, kind: &str, h: &AnnulusMap, eps: f64, grid: &BandGrid) {
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "map-hash {}", h.base.hash());
    let _ = writeln!(out, "p {}", h.p);
    let _ = writeln!(out, "q {}", h.q);
    let _ = writeln!(out, "eps {eps:?}");
    let _ = writeln!(out, "grid {} {} {:?} {:?}", grid.nx, grid.ny, grid.y_lo, grid.y_hi);
}

fn body(out: &mut String, h: &AnnulusMap, section: &str, pts: &[Point]) {
    out.push_str("[map]\n");
    out.push_str(&h.base.canonical_text());
    let _ = writeln!(out, "[{section}]");
    for p in pts {
        let _ = writeln!(out, "{:?} {:?}", p.x, p.y);
    }
    out.push_str("[end]\n");
}

pub fn write_free_curve(h: &AnnulusMap, c: &FreeCurveCertificate) -> String {
    let mut s = String::new();
    head(&mut s, "free-curve", h, c.eps, &c.grid);
    let _ = writeln!(s, "clearance {:?}", c.clearance);
    body(&mut s, h, "gamma", c.gamma.vertices());
    s
}

pub fn write_climbing_path(h: &AnnulusMap, p: &ClimbingPath) -> String {
    let mut s = String::new();
    head(&mut s, "climbing-path", h, p.eps, &p.grid);
    body(&mut s, h, "path", &p.points);
    s
}

fn fmt_err(line: usize, message: impl Into<String>) -> Error {
    Error::CertificateFormat {
        line,
        message: message.into(),
    }
}

/// Parse a certificate, checking the header, map hash and section layout.
pub fn read_certificate(text: &str) -> Result<Certificate> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.first().map(|l| l.trim()) != Some(HEADER) {
        return Err(fmt_err(1, format!("expected '{HEADER}'")));
    }
    let mut fields = std::collections::BTreeMap::new();
    let mut at = 1;
    while at < lines.len() && !lines[at].starts_with('[') {
        let line = lines[at].trim();
        if !line.is_empty() {
            let (key, value) = line
                .split_once(' ')
                .ok_or_else(|| fmt_err(at + 1, "expected 'key value'"))?;
            fields.insert(key.to_string(), (at + 1, value.trim().to_string()));
        }
        at += 1;
    }
    let header_end = at;
    let get = |key: &str| {
        fields
            .get(key)
            .cloned()
            .ok_or_else(|| fmt_err(header_end + 1, format!("missing field '{key}'")))
    };
    let num = |key: &str| -> Result<f64> {
        let (line, v) = get(key)?;
        v.parse::<f64>().map_err(|_| fmt_err(line, format!("bad number for '{key}'")))
    };
    let int = |key: &str| -> Result<i64> {
        let (line, v) = get(key)?;
        v.parse::<i64>().map_err(|_| fmt_err(line, format!("bad integer for '{key}'")))
    };
    let kind = get("kind")?;
    let (hash_line, hash) = get("map-hash")?;
    let p = int("p")?;
    let q = int("q")?;
    let eps = num("eps")?;
    let (grid_line, grid_text) = get("grid")?;
    let parts: Vec<&str> = grid_text.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(fmt_err(grid_line, "grid needs nx ny y_lo y_hi"));
    }
    let bad_grid = || fmt_err(grid_line, "bad grid values");
    let grid = BandGrid {
        nx: parts[0].parse().map_err(|_| bad_grid())?,
        ny: parts[1].parse().map_err(|_| bad_grid())?,
        y_lo: parts[2].parse().map_err(|_| bad_grid())?,
        y_hi: parts[3].parse().map_err(|_| bad_grid())?,
        eps,
    };

    if lines.get(at).map(|l| l.trim()) != Some("[map]") {
        return Err(fmt_err(at + 1, "expected [map]"));
    }
    at += 1;
    let map_start = at;
    while at < lines.len() && !lines[at].starts_with('[') {
        at += 1;
    }
    let map_text = lines[map_start..at].join("\n");
    let lift: LiftSpec = parse_lift(&map_text)?;
    if lift.hash() != hash {
        return Err(fmt_err(hash_line, "map hash does not match the [map] section"));
    }
    if q < 1 || q > u32::MAX as i64 {
        return Err(fmt_err(at, "q must be a positive integer"));
    }
    let map = AnnulusMap::new(lift, q as u32, p)?;

    let section = lines.get(at).map(|l| l.trim()).unwrap_or("");
    let expected = match kind.1.as_str() {
        "free-curve" => "[gamma]",
        "climbing-path" => "[path]",
        other => return Err(fmt_err(kind.0, format!("unknown kind '{other}'"))),
    };
    if section != expected {
        return Err(fmt_err(at + 1, format!("expected {expected}")));
    }
    at += 1;
    let mut pts = Vec::new();
    loop {
        let Some(line) = lines.get(at) else {
            return Err(fmt_err(at + 1, "missing [end]"));
        };
        let line = line.trim();
        if line == "[end]" {
            break;
        }
        let mut it = line.split_whitespace().map(str::parse::<f64>);
        match (it.next(), it.next(), it.next()) {
            (Some(Ok(x)), Some(Ok(y)), None) => pts.push(Point::new(x, y)),
            _ => return Err(fmt_err(at + 1, "expected 'x y'")),
        }
        at += 1;
    }
    match expected {
        "[gamma]" => {
            let clearance = num("clearance")?;
            let gamma = EssentialCurve::new(pts).ok_or_else(|| fmt_err(at + 1, "curve is not closed and essential"))?;
            Ok(Certificate::FreeCurve {
                cert: FreeCurveCertificate {
                    gamma,
                    clearance,
                    p,
                    q: q as u32,
                    eps,
                    grid,
                },
                map,
            })
        }
        _ => Ok(Certificate::Climbing {
            path: ClimbingPath {
                eps,
                cells: Vec::new(),
                points: pts,
                grid,
            },
            map,
        }),
    }
}
