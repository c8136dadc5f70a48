use proptest::prelude::*;

use twistmap::geometry::point_segment;
use twistmap::manifolds::{grow_manifold, Branch, GrowParams, Saddle};
use twistmap::periodic::{find_orbits, orbit_defect, OrbitKind, SeedGrid};
use twistmap::pseudoorbit::{
    dichotomy, make_band_with_top, reachable_set, read_certificate, write_certificate, BandGrid, DichotomyConfig,
    Outcome, DEFAULT_CELL_CAP,
};
use twistmap::rotation::{snap_rational, Rational};
use twistmap::{parse_lift, AnnulusMap, LiftSpec, Point};

fn lift_text(k: i64, a: f64, b: f64, c: f64, t: f64) -> String {
    format!("k = {k}; phi1 = ({a}) sin(2 pi x) + ({b}) cos(2 pi (x + y)); phi2 = ({c}) sin(2 pi x); t = ({t})")
}

/// Twist lifts; with `scale < 0.1` the Jacobian determinant stays above
/// 1/3, so the lift is a diffeomorphism.
fn arb_lift(scale: f64) -> impl Strategy<Value = LiftSpec> {
    (
        prop_oneof![Just(-2i64), Just(-1), Just(1), Just(2)],
        -0.3..0.3f64,
        -0.1..0.1f64,
        -0.2..0.2f64,
        -1.0..1.0f64,
    )
        .prop_map(move |(k, a, b, c, t)| parse_lift(&lift_text(k, a * scale, b * scale, c * scale, t)).unwrap())
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Every reduced fraction with denominator at most `qmax` in `[x - r, x + r]`.
fn fractions_near(x: f64, r: f64, qmax: u32) -> Vec<(i64, u32)> {
    let mut out = Vec::new();
    for q in 1..=qmax {
        let lo = ((x - r) * q as f64).ceil() as i64;
        let hi = ((x + r) * q as f64).floor() as i64;
        for p in lo..=hi {
            if gcd(p, q as i64) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

/// Largest distance from a vertex of `a` to the polyline `b`.
fn one_sided_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|&p| {
            b.windows(2)
                .map(|w| point_segment(p, w[0], w[1]).0)
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn origin_saddle(a: f64) -> Saddle {
    let lift = LiftSpec::standard(a);
    let found = find_orbits(&lift, 0, 0, 1, &SeedGrid::default()).unwrap();
    let orbit = found.orbits.iter().find(|o| o.kind == OrbitKind::Saddle).unwrap();
    Saddle::new(&lift, orbit).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lifts_commute_with_deck_translations(
        lift in arb_lift(1.0),
        x in -2.0..2.0f64,
        y in -2.0..2.0f64,
        m in -3i64..4,
        n in -3i64..4,
    ) {
        let z = Point::new(x, y);
        let shifted = lift.apply(z + Point::new(m as f64, n as f64));
        let expected = lift.apply(z) + Point::new((m + lift.k() * n) as f64, n as f64);
        prop_assert!((shifted - expected).norm() < 1e-9, "{shifted:?} vs {expected:?}");
    }

    #[test]
    fn canonical_text_reparses_to_the_same_map(lift in arb_lift(1.0), x in 0.0..1.0f64, y in 0.0..1.0f64) {
        let again = parse_lift(&lift.canonical_text()).unwrap();
        prop_assert_eq!(lift.canonical_text(), again.canonical_text());
        prop_assert_eq!(lift.hash(), again.hash());
        let z = Point::new(x, y);
        prop_assert_eq!(lift.apply(z), again.apply(z));
    }

    #[test]
    fn inverse_undoes_the_lift(lift in arb_lift(0.1), x in 0.0..1.0f64, y in -2.0..2.0f64) {
        let z = Point::new(x, y);
        let back = lift.inverse(lift.apply(z)).unwrap();
        prop_assert!((back - z).norm() < 1e-9);
    }

    #[test]
    fn snapping_matches_brute_force(x in -2.0..2.0f64, r in 1e-6..2e-2f64, qmax in 1u32..24) {
        let near = fractions_near(x, r, qmax);
        let got = snap_rational(x, r, qmax);
        if near.len() == 1 {
            let (p, q) = near[0];
            prop_assert_eq!(got, Some(Rational::new(p, q)));
        } else {
            prop_assert_eq!(got, None, "candidates {:?}", near);
        }
    }

    #[test]
    fn exact_rationals_snap_to_themselves(p in -40i64..40, q in 1u32..20) {
        let x = p as f64 / q as f64;
        prop_assert_eq!(snap_rational(x, 1e-9, 64), Some(Rational::new(p, q)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reached_set_grows_with_eps(a in 0.0..1.5f64, t in -0.4..0.1f64, ratio in 0.2..0.9f64) {
        let h = AnnulusMap::new(LiftSpec::standard(a).translated(t), 1, 0).unwrap();
        let grid = make_band_with_top(&h, 3.0, 0.2, DEFAULT_CELL_CAP).unwrap();
        let small = BandGrid { eps: 0.2 * ratio, ..grid };
        let big = reachable_set(&h, &grid, false);
        let less = reachable_set(&h, &small, false);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                prop_assert!(!less.is_reached(i, j) || big.is_reached(i, j), "cell ({i}, {j})");
            }
        }
    }

    #[test]
    fn orbits_revalidate_and_respect_deck_shifts(
        a in 0.2..2.5f64,
        m in -2i64..3,
        n in -2i64..3,
    ) {
        let lift = LiftSpec::standard(a);
        let found = find_orbits(&lift, 0, 0, 1, &SeedGrid::default()).unwrap();
        prop_assert!(!found.orbits.is_empty());
        for o in &found.orbits {
            let z = o.anchor();
            let (g, _) = orbit_defect(&lift, o.s, o.p, o.q, z);
            prop_assert!(g.norm() < 1e-8);
            // A deck translate by (m, n) is an (s + k q n, p, q) orbit.
            let s = o.s + lift.k() * o.q as i64 * n;
            let (g, _) = orbit_defect(&lift, s, o.p, o.q, z + Point::new(m as f64, n as f64));
            prop_assert!(g.norm() < 1e-8, "shift ({m}, {n}): {g:?}");
        }
    }

    #[test]
    fn free_curve_certificates_round_trip(t in -0.5..-0.1f64) {
        let h = AnnulusMap::new(LiftSpec::integrable(1, t), 1, 0).unwrap();
        let outcome = dichotomy(&h, &DichotomyConfig::default()).unwrap();
        prop_assert!(matches!(outcome, Outcome::FreeCurve(_)), "exit {}", outcome.exit_code());
        let text = write_certificate(&h, &outcome).unwrap();
        let cert = read_certificate(&text).unwrap();
        prop_assert_eq!(cert.map().base.hash(), h.base.hash());
        prop_assert!(cert.check(16_384).valid);
    }
}

#[test]
fn stable_branch_is_unstable_for_the_inverse() {
    let saddle = origin_saddle(2.0);
    let params = GrowParams::default();
    for branch in Branch::ALL {
        let arc = grow_manifold(&saddle, branch, 3.0, &params);
        let lift = &saddle.lift;
        // Stable arcs are forward invariant, unstable arcs backward invariant.
        // Sample only the part whose image stays on the grown arc.
        let head = arc.vertices.len() / 4;
        let images: Vec<Point> = arc.vertices[..head]
            .iter()
            .step_by(7)
            .map(|&v| if branch.stable { lift.apply(v) } else { lift.inverse(v).unwrap() })
            .collect();
        let d = one_sided_hausdorff(&images, &arc.vertices);
        assert!(d < 1e-6, "{branch}: image off the arc by {d:e}");
    }
}

#[test]
fn regrowth_at_half_spacing_stays_close() {
    let saddle = origin_saddle(2.0);
    let coarse = GrowParams::default();
    let fine = GrowParams {
        h_max: coarse.h_max / 2.0,
        ..coarse
    };
    for branch in [Branch::UNSTABLE_PLUS, Branch::STABLE_MINUS] {
        let a = grow_manifold(&saddle, branch, 3.0, &coarse);
        let b = grow_manifold(&saddle, branch, 3.0, &fine);
        // Compare the common parameter range.
        let len = a.arclength.min(b.arclength);
        let cut = |arc: &twistmap::manifolds::ManifoldArc| -> Vec<Point> {
            let mut acc = 0.0;
            let mut out = vec![arc.vertices[0]];
            for w in arc.vertices.windows(2) {
                acc += (w[1] - w[0]).norm();
                if acc > 0.95 * len {
                    break;
                }
                out.push(w[1]);
            }
            out
        };
        let (pa, pb) = (cut(&a), cut(&b));
        let d = one_sided_hausdorff(&pa, &b.vertices).max(one_sided_hausdorff(&pb, &a.vertices));
        assert!(d < 10.0 * coarse.h_max, "{branch}: Hausdorff distance {d:e}");
    }
}
