use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use serde::Serialize;
use twistmap::geometry::Point;
use twistmap::lecalvez::certified_bounds;
use twistmap::manifolds::{
    attractor_approx, boundedness_check, crossing_csv, mesh_probe, Direction, GrowParams, Saddle, Window,
};
use twistmap::map_model::twist_constants;
use twistmap::periodic::{lefschetz_audit, orbit_csv, OrbitKind, SeedGrid};
use twistmap::pseudoorbit::{
    band_top, dichotomy, read_certificate, write_certificate, Certificate, DichotomyConfig, Outcome,
    VALIDATION_SAMPLES,
};
use twistmap::rotation::{interval_sample, plateau_detect, tongue_csv, tongue_scan, Endpoint, RotationInterval, ScanParams};
use twistmap::svg::{render, Scene};
use twistmap::{parse_lift, AnnulusMap, LiftSpec};

use crate::config::{self, check_nonzero, check_positive, FileConfig, Resolved};
use crate::{Classify, Cli, Command, Failure};

const DEFAULT_OUT: &str = "twistmap-out";
const THREADS_ENV: &str = "TWISTMAP_THREADS";

struct Ctx {
    cfg: FileConfig,
    lift: Option<LiftSpec>,
    out: PathBuf,
    seed: u64,
}

impl Ctx {
    fn lift(&self) -> &LiftSpec {
        self.lift.as_ref().expect("map loaded")
    }

    fn write(&self, name: &str, contents: &str) -> Result<(), Failure> {
        let path = self.out.join(name);
        fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))
            .module()
    }

    fn record<T: Serialize>(&self, command: &str, params: &T) -> Result<(), Failure> {
        let resolved = Resolved {
            command,
            seed: self.seed,
            map: self.lift().canonical_text(),
            params,
        };
        let text = toml::to_string(&resolved).context("serialising the run configuration").module()?;
        self.write("run.toml", &text)
    }
}

fn threads(flag: Option<usize>, file: Option<usize>) -> anyhow::Result<Option<usize>> {
    if let Some(n) = flag.or(file) {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| anyhow!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: Cli) -> Result<u8, Failure> {
    let g = cli.global;
    let cfg = config::load(g.config.as_deref()).config()?;
    if let Some(n) = threads(g.threads, cfg.threads).config()? {
        check_nonzero("threads", n).config()?;
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let out = g.out.clone().or_else(|| cfg.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
    let seed = g.seed.or(cfg.seed).unwrap_or(0);
    let needs_map = !matches!(cli.command, Command::Validate(_));
    let lift = if needs_map {
        let src = config::map_source(cfg.map.as_ref(), g.map.as_deref()).config()?;
        Some(parse_lift(&src).context("map definition").config()?)
    } else {
        None
    };
    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .config()?;
    let ctx = Ctx { cfg, lift, out, seed };
    match cli.command {
        Command::Interval(a) => interval(&ctx, a),
        Command::Certify(a) => certify(&ctx, a),
        Command::Validate(a) => validate(&ctx, a),
        Command::Tongues(a) => tongues(&ctx, a),
        Command::Orbits(a) => orbits(&ctx, a),
        Command::Manifolds(a) => manifolds(&ctx, a),
    }
}

fn snap_text(r: &Option<twistmap::rotation::Rational>) -> String {
    r.map(|r| r.to_string()).unwrap_or_default()
}

fn interval_row(out: &mut String, kind: &str, r: &RotationInterval) {
    let _ = writeln!(
        out,
        "{kind},{:?},{:?},{:?},{:?},{},{},{},{}",
        r.lower,
        r.upper,
        r.lower_radius,
        r.upper_radius,
        r.lower_cert,
        r.upper_cert,
        snap_text(&r.lower_snap),
        snap_text(&r.upper_snap)
    );
}

pub const INTERVAL_CSV_HEADER: &str =
    "kind,lower,upper,lower_radius,upper_radius,lower_provenance,upper_provenance,lower_snap,upper_snap";

fn interval(ctx: &Ctx, a: crate::IntervalArgs) -> Result<u8, Failure> {
    let mut p = ctx.cfg.interval.clone();
    p.nx = a.nx.unwrap_or(p.nx);
    p.ny = a.ny.unwrap_or(p.ny);
    p.iterations = a.iterations.unwrap_or(p.iterations);
    p.qmax = a.qmax.unwrap_or(p.qmax);
    p.bound_qmax = a.bound_qmax.unwrap_or(p.bound_qmax);
    for (name, v) in [("nx", p.nx), ("ny", p.ny), ("iterations", p.iterations), ("graph_nx", p.graph_nx)] {
        check_nonzero(name, v).config()?;
    }
    check_nonzero("qmax", p.qmax as usize).config()?;
    check_nonzero("bound_qmax", p.bound_qmax as usize).config()?;
    ctx.record("interval", &p)?;

    let lift = ctx.lift();
    let inner = interval_sample(lift, p.nx, p.ny, p.iterations, ctx.seed)
        .module()?
        .snapped(p.qmax);
    let outer = certified_bounds(lift, p.bound_qmax, p.graph_nx).module()?.snapped(p.qmax);
    let merged = inner.merge(&outer);
    let contained = outer.contains(&inner);

    let mut csv = String::from(INTERVAL_CSV_HEADER);
    csv.push('\n');
    interval_row(&mut csv, "inner", &inner);
    interval_row(&mut csv, "outer", &outer);
    interval_row(&mut csv, "merged", &merged);
    ctx.write("interval.csv", &csv)?;

    let mut summary = String::new();
    let _ = writeln!(summary, "inner interval [{:.9}, {:.9}] (sampled)", inner.lower, inner.upper);
    let _ = writeln!(summary, "outer interval [{:.9}, {:.9}] (triplet-certified)", outer.lower, outer.upper);
    let _ = writeln!(summary, "inner within outer: {}", if contained { "yes" } else { "NO" });
    print!("{summary}");
    ctx.write("summary.txt", &summary)?;
    if !contained {
        return Err(Failure::Module(anyhow!(
            "sampled interval is not contained in the certified outer interval"
        )));
    }
    Ok(0)
}

fn certify(ctx: &Ctx, a: crate::CertifyArgs) -> Result<u8, Failure> {
    let mut p = ctx.cfg.certify.clone();
    p.p = a.p.unwrap_or(p.p);
    p.q = a.q.unwrap_or(p.q);
    if let Some(eps) = a.eps {
        p.eps = eps;
    }
    p.cell_cap = a.cell_cap.unwrap_or(p.cell_cap);
    check_nonzero("q", p.q as usize).config()?;
    check_nonzero("cell_cap", p.cell_cap).config()?;
    if p.eps.is_empty() || p.eps.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Failure::Config(anyhow!("eps ladder must be nonempty and strictly decreasing")));
    }
    for &e in &p.eps {
        check_positive("eps", e).config()?;
    }
    ctx.record("certify", &p)?;

    let h = AnnulusMap::new(ctx.lift().clone(), p.q, p.p).config()?;
    let cfg = DichotomyConfig {
        ladder: p.eps.clone(),
        cell_cap: p.cell_cap,
        ..DichotomyConfig::default()
    };
    let outcome = dichotomy(&h, &cfg).module()?;
    let summary = match &outcome {
        Outcome::FreeCurve(c) => format!(
            "free curve for (p, q) = ({}, {}) at eps {}: clearance {:.6e}, {} vertices\n",
            p.p,
            p.q,
            c.eps,
            c.clearance,
            c.gamma.vertices().len()
        ),
        Outcome::Climbing(path) => format!(
            "climbing pseudo-orbit for (p, q) = ({}, {}) at eps {}: {} steps\n",
            p.p,
            p.q,
            path.eps,
            path.points.len() - 1
        ),
        Outcome::Indeterminate(why) => format!("indeterminate for (p, q) = ({}, {}): {why}\n", p.p, p.q),
    };
    if let Some(text) = write_certificate(&h, &outcome) {
        ctx.write("certificate.txt", &text)?;
    }
    print!("{summary}");
    ctx.write("summary.txt", &summary)?;
    Ok(outcome.exit_code() as u8)
}

fn validate(_ctx: &Ctx, a: crate::ValidateArgs) -> Result<u8, Failure> {
    check_nonzero("density", a.density).config()?;
    let text = fs::read_to_string(&a.certificate)
        .with_context(|| format!("reading {}", a.certificate.display()))
        .config()?;
    let cert = read_certificate(&text).context("certificate").config()?;
    let report = cert.check(a.density * VALIDATION_SAMPLES);
    let summary = match &cert {
        Certificate::FreeCurve { .. } => format!(
            "free curve: re-evaluated clearance {:.6e} -> {}\n",
            report.value,
            if report.valid { "valid" } else { "INVALID" }
        ),
        Certificate::Climbing { .. } => format!(
            "climbing path: largest step error {:.6e} -> {}\n",
            report.value,
            if report.valid { "valid" } else { "INVALID" }
        ),
    };
    print!("{summary}");
    Ok(if report.valid { 0 } else { 1 })
}

fn tongues(ctx: &Ctx, a: crate::TonguesArgs) -> Result<u8, Failure> {
    let mut p = ctx.cfg.tongues.clone();
    p.t0 = a.t0.unwrap_or(p.t0);
    p.t1 = a.t1.unwrap_or(p.t1);
    p.step = a.step.unwrap_or(p.step);
    p.nx = a.nx.unwrap_or(p.nx);
    p.ny = a.ny.unwrap_or(p.ny);
    p.iterations = a.iterations.unwrap_or(p.iterations);
    p.qmax = a.qmax.unwrap_or(p.qmax);
    p.lock |= a.lock;
    check_positive("step", p.step).config()?;
    if !(p.t1 >= p.t0) {
        return Err(Failure::Config(anyhow!("t1 must not be below t0")));
    }
    for (name, v) in [("nx", p.nx), ("ny", p.ny), ("iterations", p.iterations)] {
        check_nonzero(name, v).config()?;
    }
    check_nonzero("qmax", p.qmax as usize).config()?;
    ctx.record("tongues", &p)?;

    let lift = ctx.lift();
    let params = ScanParams {
        nx: p.nx,
        ny: p.ny,
        n: p.iterations,
        qmax: p.qmax,
        seed: ctx.seed,
    };
    let mut scan = tongue_scan(lift, p.t0, p.t1, p.step, &params).module()?;
    let plateaus = plateau_detect(&scan.rows, None);
    let mut summary = String::new();
    let _ = writeln!(summary, "{} rows, {} monotonicity violations", scan.rows.len(), scan.violations.len());
    for v in &scan.violations {
        let _ = writeln!(
            summary,
            "violation: upper endpoint drops by {:.3e} from t = {} to t = {} (tolerance {:.3e})",
            v.drop, v.t, v.t_later, v.tolerance
        );
    }
    let mut certificates = 0;
    for pl in &plateaus {
        let side = match pl.endpoint {
            Endpoint::Upper => "upper",
            Endpoint::Lower => "lower",
        };
        let _ = writeln!(
            summary,
            "plateau: {side} endpoint {} for t in [{}, {}] ({} rows)",
            pl.value, pl.t_start, pl.t_end, pl.rows
        );
        if !p.lock || pl.value.q > p.lock_qmax {
            continue;
        }
        let base = AnnulusMap::new(lift.translated(pl.midpoint()), pl.value.q, pl.value.p).module()?;
        let h = match pl.endpoint {
            Endpoint::Upper => base,
            Endpoint::Lower => base.flipped(),
        };
        let outcome = dichotomy(&h, &DichotomyConfig::default()).module()?;
        if let Outcome::FreeCurve(c) = &outcome {
            certificates += 1;
            let name = format!("lock-{certificates}.txt");
            ctx.write(&name, &write_certificate(&h, &outcome).expect("free curve"))?;
            let _ = writeln!(
                summary,
                "  locked at t = {}: free curve with clearance {:.3e} ({name})",
                pl.midpoint(),
                c.clearance
            );
            for row in scan.rows.iter_mut() {
                if row.t >= pl.t_start && row.t <= pl.t_end {
                    row.locked = true;
                }
            }
        } else {
            let _ = writeln!(summary, "  no free curve at t = {} (exit {})", pl.midpoint(), outcome.exit_code());
        }
    }
    ctx.write("tongues.csv", &tongue_csv(&scan.rows))?;
    print!("{summary}");
    ctx.write("summary.txt", &summary)?;
    Ok(0)
}

fn orbits(ctx: &Ctx, a: crate::OrbitsArgs) -> Result<u8, Failure> {
    let mut p = ctx.cfg.orbits.clone();
    p.p = a.p.unwrap_or(p.p);
    p.q = a.q.unwrap_or(p.q);
    p.grid = a.grid.unwrap_or(p.grid);
    check_nonzero("q", p.q as usize).config()?;
    check_nonzero("grid", p.grid).config()?;
    ctx.record("orbits", &p)?;

    let grid = SeedGrid {
        nx: p.grid,
        ny: p.grid,
        envelope_seeds: true,
    };
    let report = lefschetz_audit(ctx.lift(), p.p, p.q, &grid).module()?;
    ctx.write("orbits.csv", &orbit_csv(&report.orbits))?;
    let mut summary = String::new();
    let _ = writeln!(summary, "{} orbits of type (p, q) = ({}, {})", report.orbits.len(), p.p, p.q);
    for (kind, n) in &report.census {
        let _ = writeln!(summary, "  {kind}: {n}");
    }
    let _ = writeln!(summary, "index sum: {} (expected 0)", report.index_sum);
    let _ = writeln!(summary, "seed coverage: {:.1}%", 100.0 * report.coverage);
    for w in &report.warnings {
        let _ = writeln!(summary, "warning: {w}");
    }
    print!("{summary}");
    ctx.write("summary.txt", &summary)?;
    Ok(0)
}

fn curve_copies(pts: &[Point], x_range: (f64, f64)) -> Vec<Vec<Point>> {
    let lo = pts.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let first = (x_range.0 - lo).floor() as i64 - 1;
    let last = (x_range.1 - lo).ceil() as i64;
    (first..=last)
        .map(|n| pts.iter().map(|&p| p + Point::new(n as f64, 0.0)).collect())
        .collect()
}

fn manifolds(ctx: &Ctx, a: crate::ManifoldsArgs) -> Result<u8, Failure> {
    let mut p = ctx.cfg.manifolds.clone();
    p.p = a.p.unwrap_or(p.p);
    p.q = a.q.unwrap_or(p.q);
    p.saddle = a.saddle.unwrap_or(p.saddle);
    p.arclength = a.arclength.unwrap_or(p.arclength);
    p.window = a.window.unwrap_or(p.window);
    p.h_max = a.h_max.unwrap_or(p.h_max);
    p.curve |= a.curve;
    check_nonzero("q", p.q as usize).config()?;
    check_positive("arclength", p.arclength).config()?;
    check_positive("h_max", p.h_max).config()?;
    if p.window < 0 {
        return Err(Failure::Config(anyhow!("window must be non-negative")));
    }
    ctx.record("manifolds", &p)?;

    let lift = ctx.lift();
    let census = lefschetz_audit(lift, p.p, p.q, &SeedGrid::default()).module()?;
    let saddles: Vec<_> = census
        .orbits
        .iter()
        .filter(|o| matches!(o.kind, OrbitKind::Saddle | OrbitKind::ReflectionSaddle))
        .collect();
    let orbit = saddles.get(p.saddle).ok_or_else(|| {
        Failure::Module(anyhow!(
            "saddle {} requested but {} saddles of type (p, q) = ({}, {}) were found",
            p.saddle,
            saddles.len(),
            p.p,
            p.q
        ))
    })?;
    let saddle = Saddle::new(lift, orbit).module()?;
    let params = GrowParams {
        h_max: p.h_max,
        ..GrowParams::default()
    };
    let window = Window::square(p.window);
    let report = mesh_probe(&saddle, &window, p.arclength, &params);
    ctx.write("crossings.csv", &crossing_csv(&report.crossings))?;

    let h = AnnulusMap::new(lift.clone(), p.q, p.p).module()?;
    let consts = twist_constants(lift, 64).module()?;
    let reach = band_top(&h, &consts);
    let z = saddle.anchor;
    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "saddle ({:.9}, {:.9}) of type (s, p, q) = ({}, {}, {}), eigenvalues {:.6} and {:.6}",
        z.x, z.y, orbit.s, orbit.p, orbit.q, saddle.lambda_u, saddle.lambda_s
    );
    let _ = writeln!(summary, "mesh verdict: {}", report.verdict);
    let vectors: Vec<String> = report.vectors.iter().map(|(a, b)| format!("({a}, {b})")).collect();
    let _ = writeln!(summary, "translates with transverse crossings: {}", vectors.join(" "));
    for arc in &report.arcs {
        let above = boundedness_check(arc, Direction::Above, z.y + reach);
        let below = boundedness_check(arc, Direction::Below, z.y - reach);
        let _ = writeln!(
            summary,
            "{}: arclength {:.3}, {} vertices{}, above {}, below {}",
            arc.branch,
            arc.arclength,
            arc.vertices.len(),
            if arc.truncated { " (truncated)" } else { "" },
            above,
            below
        );
    }

    let half = p.window as f64 + 0.5;
    let mut scene = Scene {
        x_range: (z.x - half, z.x + half),
        y_range: (z.y - half, z.y + half),
        unstable: report.arcs.iter().filter(|a| !a.branch.stable).map(|a| a.vertices.clone()).collect(),
        stable: report.arcs.iter().filter(|a| a.branch.stable).map(|a| a.vertices.clone()).collect(),
        crossings: report.crossings.iter().map(|(_, c)| (c.point, c.transverse)).collect(),
        ..Scene::default()
    };
    if p.curve {
        match dichotomy(&h, &DichotomyConfig::default()).module()? {
            Outcome::FreeCurve(cert) => {
                let approx = attractor_approx(&h, &cert, p.iterates, 10.0 * p.h_max).module()?;
                scene.gamma = curve_copies(cert.gamma.vertices(), scene.x_range);
                for it in &approx.iterates[1..] {
                    scene.iterates.extend(curve_copies(it.vertices(), scene.x_range));
                }
                let _ = writeln!(summary, "free curve with clearance {:.3e}; {} iterates nested", cert.clearance, p.iterates);
            }
            other => {
                let _ = writeln!(summary, "no free curve (exit {})", other.exit_code());
            }
        }
    }
    ctx.write("manifolds.svg", &render(&scene))?;
    print!("{summary}");
    ctx.write("summary.txt", &summary)?;
    Ok(0)
}
