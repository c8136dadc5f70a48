//! Run configuration: a TOML file, overridden field by field by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use twistmap::pseudoorbit::{DEFAULT_CELL_CAP, DEFAULT_LADDER};

/// `[map]`: either a full `source` text or individual fields whose values
/// are expressions (strings) or numbers.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct MapSection {
    pub source: Option<String>,
    pub k: Option<i64>,
    pub phi1: Option<toml::Value>,
    pub phi2: Option<toml::Value>,
    pub t: Option<toml::Value>,
    pub psi: Option<toml::Value>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub map: Option<MapSection>,
    #[serde(default)]
    pub interval: IntervalConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub tongues: TonguesConfig,
    #[serde(default)]
    pub orbits: OrbitsConfig,
    #[serde(default)]
    pub manifolds: ManifoldsConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntervalConfig {
    pub nx: usize,
    pub ny: usize,
    pub iterations: usize,
    /// Largest denominator when snapping endpoints to rationals.
    pub qmax: u32,
    /// Largest denominator of the triplets used for the outer bounds.
    pub bound_qmax: u32,
    /// Fibers per unit of `x` when building the triplet graphs.
    pub graph_nx: usize,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        IntervalConfig {
            nx: 64,
            ny: 64,
            iterations: 20_000,
            qmax: 64,
            bound_qmax: 6,
            graph_nx: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    pub p: i64,
    pub q: u32,
    pub eps: Vec<f64>,
    pub cell_cap: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            p: 0,
            q: 1,
            eps: DEFAULT_LADDER.to_vec(),
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TonguesConfig {
    pub t0: f64,
    pub t1: f64,
    pub step: f64,
    pub nx: usize,
    pub ny: usize,
    pub iterations: usize,
    pub qmax: u32,
    /// Run the dichotomy at the midpoint of each plateau with `q <= lock_qmax`.
    pub lock: bool,
    pub lock_qmax: u32,
}

impl Default for TonguesConfig {
    fn default() -> Self {
        TonguesConfig {
            t0: -0.3,
            t1: 0.3,
            step: 0.01,
            nx: 8,
            ny: 8,
            iterations: 20_000,
            qmax: 64,
            lock: false,
            lock_qmax: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitsConfig {
    pub p: i64,
    pub q: u32,
    pub grid: usize,
}

impl Default for OrbitsConfig {
    fn default() -> Self {
        OrbitsConfig { p: 0, q: 1, grid: 48 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManifoldsConfig {
    pub p: i64,
    pub q: u32,
    /// Which saddle of the census to use, in census order.
    pub saddle: usize,
    pub arclength: f64,
    /// Half-width of the square window of translates.
    pub window: i64,
    pub h_max: f64,
    /// Also certify a free curve for `(p, q)` and draw its iterates.
    pub curve: bool,
    pub iterates: usize,
}

impl Default for ManifoldsConfig {
    fn default() -> Self {
        ManifoldsConfig {
            p: 0,
            q: 1,
            saddle: 0,
            arclength: 20.0,
            window: 2,
            h_max: 1e-3,
            curve: false,
            iterates: 5,
        }
    }
}

/// Everything a run used, written next to the outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Resolved<'a, T: Serialize> {
    pub command: &'a str,
    pub seed: u64,
    /// Canonical map definition.
    pub map: String,
    pub params: &'a T,
}

pub fn load(path: Option<&Path>) -> anyhow::Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn value_text(v: &toml::Value) -> anyhow::Result<String> {
    Ok(match v {
        toml::Value::String(s) => s.clone(),
        toml::Value::Integer(i) => i.to_string(),
        toml::Value::Float(f) => format!("{f:?}"),
        other => bail!("map fields must be strings or numbers, got {other}"),
    })
}

/// Map source text from a `--map` override or the `[map]` section.
pub fn map_source(section: Option<&MapSection>, flag: Option<&str>) -> anyhow::Result<String> {
    if let Some(src) = flag {
        return Ok(src.to_string());
    }
    let Some(m) = section else {
        bail!("no map given: use --map or a [map] section");
    };
    let mut lines = Vec::new();
    if let Some(src) = &m.source {
        lines.push(src.clone());
    }
    if let Some(k) = m.k {
        lines.push(format!("k = {k}"));
    }
    for (name, v) in [("phi1", &m.phi1), ("phi2", &m.phi2), ("t", &m.t), ("psi", &m.psi)] {
        if let Some(v) = v {
            lines.push(format!("{name} = {}", value_text(v)?));
        }
    }
    if lines.is_empty() {
        bail!("[map] section is empty");
    }
    Ok(lines.join("\n"))
}

pub fn check_positive(name: &str, v: f64) -> anyhow::Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        bail!("{name} must be positive, got {v}");
    }
    Ok(())
}

pub fn check_nonzero(name: &str, v: usize) -> anyhow::Result<()> {
    if v == 0 {
        bail!("{name} must be at least 1");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_fields_accept_numbers_and_expressions() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [map]
            k = 1
            phi1 = "0.1 sin(2 pi x)"
            t = -0.25
            "#,
        )
        .unwrap();
        let src = map_source(cfg.map.as_ref(), None).unwrap();
        assert_eq!(src, "k = 1\nphi1 = 0.1 sin(2 pi x)\nt = -0.25");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<FileConfig>("[orbits]\nperiod = 3\n").is_err());
    }

    #[test]
    fn flag_overrides_section() {
        let m = MapSection {
            k: Some(2),
            ..MapSection::default()
        };
        assert_eq!(map_source(Some(&m), Some("k=1")).unwrap(), "k=1");
    }
}
