use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const STANDARD_05: &str = "k=1; phi1=(0.5/(2 pi)) sin(2 pi x); phi2=(0.5/(2 pi)) sin(2 pi x)";

fn twistmap(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_twistmap"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("TWISTMAP_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap_or_default().to_string()
}

#[test]
fn certify_exit_codes_follow_the_dichotomy() {
    let tmp = tempfile::tempdir().unwrap();
    let down = tmp.path().join("down");
    let o = twistmap(&down, &["certify", "--map", "k=1; t=-0.3"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cert = fs::read_to_string(down.join("certificate.txt")).unwrap();
    assert!(cert.starts_with("twistmap-certificate v1\n"));
    assert!(cert.contains("kind free-curve"));

    let up = tmp.path().join("up");
    let o = twistmap(&up, &["certify", "--map", "k=1; t=0.3", "--eps", "0.05"]);
    assert_eq!(code(&o), 1);
    assert!(fs::read_to_string(up.join("certificate.txt")).unwrap().contains("kind climbing-path"));
}

#[test]
fn validate_accepts_round_trips_and_rejects_tampering() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("run");
    let map = "k=1; phi1=(0.9/(2 pi)) sin(2 pi x); phi2=(0.9/(2 pi)) sin(2 pi x); t=-0.05";
    assert_eq!(code(&twistmap(&run, &["certify", "--map", map])), 0);
    let cert = run.join("certificate.txt");
    let o = twistmap(&tmp.path().join("v"), &["validate", cert.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));

    // Moving the curve down by half a unit puts part of its image above it.
    let text = fs::read_to_string(&cert).unwrap();
    let mut shifted = String::new();
    let mut in_gamma = false;
    for line in text.lines() {
        if line.starts_with('[') {
            in_gamma = line == "[gamma]";
            shifted.push_str(line);
        } else if in_gamma {
            let mut it = line.split_whitespace();
            let x: f64 = it.next().unwrap().parse().unwrap();
            let y: f64 = it.next().unwrap().parse().unwrap();
            shifted.push_str(&format!("{x:?} {:?}", y - 0.5));
        } else {
            shifted.push_str(line);
        }
        shifted.push('\n');
    }
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, &shifted).unwrap();
    let o = twistmap(&tmp.path().join("v2"), &["validate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("INVALID"));

    // A changed map no longer matches the recorded hash.
    let forged = tmp.path().join("forged.txt");
    fs::write(&forged, text.replace("t = (-0.05)", "t = 0.05")).unwrap();
    let o = twistmap(&tmp.path().join("v3"), &["validate", forged.to_str().unwrap()]);
    assert_eq!(code(&o), 64);
}

#[test]
fn configuration_errors_exit_64() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cases: Vec<Vec<&str>> = vec![
        vec!["orbits"],
        vec!["orbits", "--map", "k=1; phi1 = sin("],
        vec!["orbits", "--map", "k=1; phi1 = 0.5 cos(2 pi y)"],
        vec!["tongues", "--map", "k=1", "--step", "0"],
        vec!["certify", "--map", "k=1", "--eps", "0.01,0.1"],
        vec!["no-such-command"],
    ];
    for args in cases {
        let o = twistmap(&out, &args);
        assert_eq!(code(&o), 64, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(!err.trim().is_empty(), "{args:?}: no message");
    }
    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[orbits]\nperiod = 3\n").unwrap();
    let o = twistmap(&out, &["orbits", "--map", "k=1", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 64);
}

#[test]
fn help_and_version_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&twistmap(tmp.path(), &["--help"])), 0);
    assert_eq!(code(&twistmap(tmp.path(), &["--version"])), 0);
}

#[test]
fn interval_output_and_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("i");
    let o = twistmap(
        &out,
        &["interval", "--map", "k=1; t=0.3", "--nx", "4", "--ny", "4", "--iterations", "500", "--bound-qmax", "4"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("interval.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "kind,lower,upper,lower_radius,upper_radius,lower_provenance,upper_provenance,lower_snap,upper_snap"
    );
    assert!(lines[1].starts_with("inner,0.3,0.3,"), "{}", lines[1]);
    assert!(lines[2].starts_with("outer,"));
    let run = fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(run.contains("command = \"interval\""));
    assert!(run.contains("nx = 4"));
    assert!(run.contains("bound_qmax = 4"));
    assert!(run.contains("t = 0.3"));
}

#[test]
fn config_file_values_are_overridden_by_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    fs::write(
        &cfg,
        r#"
        seed = 5
        [map]
        k = 1
        phi1 = "(0.5/(2 pi)) sin(2 pi x)"
        phi2 = "(0.5/(2 pi)) sin(2 pi x)"
        [orbits]
        grid = 12
        "#,
    )
    .unwrap();
    let out = tmp.path().join("o");
    let o = twistmap(&out, &["orbits", "--config", cfg.to_str().unwrap(), "--grid", "20"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let run = fs::read_to_string(out.join("run.toml")).unwrap();
    assert!(run.contains("seed = 5"));
    assert!(run.contains("grid = 20"));
}

#[test]
fn orbit_census_reports_two_fixed_points() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = twistmap(&out, &["orbits", "--map", STANDARD_05]);
    assert_eq!(code(&o), 0);
    assert_eq!(first_line(&out.join("orbits.csv")), "s,p,q,x,y,kind,index,lambda_re,lambda_im,residual");
    assert_eq!(fs::read_to_string(out.join("orbits.csv")).unwrap().lines().count(), 3);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("index sum: 0"), "{summary}");
}

#[test]
fn tongue_scan_header_and_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let o = twistmap(
        &out,
        &["tongues", "--map", "k=1", "--t0", "-0.1", "--t1", "0.1", "--step", "0.05", "--iterations", "200"],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("tongues.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "t,lower,upper,lower_radius,upper_radius,lower_snap,upper_snap,locked");
    assert_eq!(lines.len(), 6);
}

#[test]
fn manifold_picture_has_all_layers() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("m");
    let map = "k=1; phi1=(6/(2 pi)) sin(2 pi x); phi2=(6/(2 pi)) sin(2 pi x)";
    let o = twistmap(&out, &["manifolds", "--map", map, "--arclength", "4", "--window", "1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let svg = fs::read_to_string(out.join("manifolds.svg")).unwrap();
    for layer in ["gamma", "iterates", "unstable", "stable", "crossings"] {
        assert!(svg.contains(&format!("id=\"{layer}\"")), "missing {layer}");
    }
    assert_eq!(first_line(&out.join("crossings.csv")), "a,b,x,y,transverse");
}

#[test]
fn thread_count_does_not_change_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let args = ["tongues", "--map", STANDARD_05, "--t0", "0", "--t1", "0.1", "--step", "0.05", "--iterations", "500"];
    let one = tmp.path().join("one");
    let mut a = args.to_vec();
    a.extend(["--threads", "1"]);
    assert_eq!(code(&twistmap(&one, &a)), 0);
    let two = tmp.path().join("two");
    let mut b = args.to_vec();
    b.extend(["--threads", "2"]);
    assert_eq!(code(&twistmap(&two, &b)), 0);
    for f in ["tongues.csv", "summary.txt", "run.toml"] {
        assert_eq!(fs::read(one.join(f)).unwrap(), fs::read(two.join(f)).unwrap(), "{f}");
    }
}
