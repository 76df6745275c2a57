use discflow::evolution::{verify_hardcore, MovingConfiguration};
use discflow::falsifier::{aperture_for, chain_check, CandidateField, Cone};
use discflow::formats::{hardcore_doc, parse_particles, write_particles, ReportDoc};
use discflow::geometry::{closest_approach, line_distance_3d, separation_margin, ApproachTime};
use discflow::lattice::{build_flow, verify_flow, MonotoneProfile, Window};
use discflow::spacetime::{export_scene, parse_scene, CylinderScene};
use discflow::{Particle, Vec2, Vec3};
use proptest::prelude::*;

fn vec2(r: f64) -> impl Strategy<Value = Vec2> {
    (-r..r, -r..r).prop_map(|(a, b)| Vec2::new(a, b))
}

/// Minimum of a convex function on `[lo, hi]` by ternary search.
fn ternary_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    f(0.5 * (lo + hi))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn approach_is_symmetric(x in vec2(10.0), y in vec2(10.0), vx in vec2(3.0), vy in vec2(3.0)) {
        prop_assume!((vx - vy).norm() > 1e-6);
        let a = closest_approach(x, vx, y, vy).unwrap();
        let b = closest_approach(y, vy, x, vx).unwrap();
        prop_assert!(rel_close(a.distance, b.distance, 1e-12));
        match (a.time_at_min, b.time_at_min) {
            (ApproachTime::At(s), ApproachTime::At(t)) => prop_assert!(rel_close(s, t, 1e-12)),
            other => prop_assert!(false, "unexpected {:?}", other),
        }
    }

    #[test]
    fn approach_is_galilean_invariant(
        x in vec2(10.0), y in vec2(10.0), vx in vec2(3.0), vy in vec2(3.0),
        a in vec2(20.0), b in vec2(50.0),
    ) {
        prop_assume!((vx - vy).norm() > 1e-6);
        let d0 = closest_approach(x, vx, y, vy).unwrap().distance;
        let d1 = closest_approach(x + b, vx + a, y + b, vy + a).unwrap().distance;
        prop_assert!(rel_close(d0, d1, 1e-9), "{} vs {}", d0, d1);
    }

    #[test]
    fn approach_is_rotation_invariant(
        x in vec2(10.0), y in vec2(10.0), vx in vec2(3.0), vy in vec2(3.0), theta in 0.0..6.3f64,
    ) {
        prop_assume!((vx - vy).norm() > 1e-6);
        let rot = |v: Vec2| Vec2::new(
            v.x1 * theta.cos() - v.x2 * theta.sin(),
            v.x1 * theta.sin() + v.x2 * theta.cos(),
        );
        let d0 = closest_approach(x, vx, y, vy).unwrap().distance;
        let d1 = closest_approach(rot(x), rot(vx), rot(y), rot(vy)).unwrap().distance;
        prop_assert!(rel_close(d0, d1, 1e-9));
    }

    #[test]
    fn approach_matches_search_oracle(x in vec2(10.0), y in vec2(10.0), vx in vec2(3.0), vy in vec2(3.0)) {
        let u = vx - vy;
        prop_assume!(u.norm() > 1e-3);
        let d = x - y;
        let reach = d.norm() / u.norm() + 1.0;
        let oracle = ternary_min(|t| (d + u * t).norm(), -reach, reach);
        let got = closest_approach(x, vx, y, vy).unwrap().distance;
        prop_assert!((oracle - got).abs() <= 1e-9 * (1.0 + d.norm()), "{} vs {}", oracle, got);
    }

    #[test]
    fn separation_equals_approach_for_rotated_fields(
        x in vec2(10.0), y in vec2(10.0), wx in vec2(2.0), wy in vec2(2.0),
    ) {
        prop_assume!((wx - wy).norm() > 1e-6);
        let sep = separation_margin(x, y, wx, wy).unwrap();
        let vx = -wx.rotate_quarter();
        let vy = -wy.rotate_quarter();
        let d = closest_approach(x, vx, y, vy).unwrap().distance;
        prop_assert!(rel_close(sep, d, 1e-12));
    }

    #[test]
    fn line_distance_matches_nested_oracle(
        p in vec2(5.0), q in vec2(5.0), v in vec2(3.0), w in vec2(3.0),
    ) {
        prop_assume!((v - w).norm() > 0.1);
        let (p1, d1, p2, d2) = (p.lift(0.0), v.lift(1.0), q.lift(0.0), w.lift(1.0));
        let at = |base: Vec3, dir: Vec3, s: f64| base + dir * s;
        let oracle = ternary_min(
            |s| ternary_min(|t| (at(p1, d1, s) - at(p2, d2, t)).norm(), -1e4, 1e4),
            -1e4,
            1e4,
        );
        let got = line_distance_3d(p1, d1, p2, d2).unwrap();
        prop_assert!((oracle - got).abs() <= 1e-6, "{} vs {}", oracle, got);
    }

    #[test]
    fn cone_is_convex(ux in -1.0..1.0f64, uy in -1.0..1.0f64, c in 0.01..2.0f64,
                      r1 in 0.0..10.0f64, r2 in 0.0..10.0f64, s1 in -1.0..1.0f64, s2 in -1.0..1.0f64) {
        let u = Vec2::new(ux, uy);
        prop_assume!(u.norm() > 1e-3);
        let cone = Cone::new(u, aperture_for(c)).unwrap();
        let half = cone.half_angle();
        let member = |r: f64, s: f64| Vec2::from_polar(r, u.angle() + s * half);
        let (a, b) = (member(r1, s1), member(r2, s2));
        prop_assert!(cone.contains(a).margin >= -1e-12);
        prop_assert!(cone.contains(b).margin >= -1e-12);
        prop_assert!(cone.contains(a + b).margin >= -1e-12 * (1.0 + (a + b).norm()));
    }

    #[test]
    fn chain_implication_holds(x in vec2(50.0), y in vec2(50.0), c in 0.05..1.0f64) {
        prop_assume!((x - y).norm() > 1.0);
        let fields = [
            CandidateField::SaturatedRadial { bound: 1.0, scale: 1.0 },
            CandidateField::Rotational { bound: 1.0 },
            CandidateField::ClampedLinear { matrix: [[1.0, 0.5], [-0.3, 2.0]], offset: Vec2::ZERO, bound: 1.0 },
        ];
        for f in &fields {
            let r = chain_check(f, x, y, aperture_for(c)).unwrap();
            prop_assert!(r.implication_holds);
            prop_assert!(r.piece_length > 1.0 && r.piece_length <= 2.0);
            prop_assert!(r.telescoping_error <= 1e-12 * (1.0 + r.length));
        }
    }

    #[test]
    fn particle_files_round_trip(raw in prop::collection::vec((vec2(1e6), vec2(1e3)), 0..20)) {
        let ps: Vec<Particle> = raw.into_iter().map(|(x, v)| Particle::new(x, v)).collect();
        prop_assert_eq!(parse_particles(&write_particles(&ps)).unwrap(), ps);
    }

    #[test]
    fn scenes_round_trip(raw in prop::collection::vec((vec2(100.0), vec2(5.0)), 1..10), r in 0.01..1.0f64) {
        let ps: Vec<Particle> = raw.into_iter().map(|(x, v)| Particle::new(x, v)).collect();
        let Ok(config) = MovingConfiguration::new(ps, 1e-9) else { return Ok(()) };
        let scene = CylinderScene::from_config(&config, r);
        let back = parse_scene(&export_scene(&scene)).unwrap();
        prop_assert_eq!(back.cylinders.len(), scene.cylinders.len());
        // unit directions cost a few ulps of velocity; bases and radii are exact
        let sorted = |mut v: Vec<discflow::spacetime::Cylinder>| {
            v.sort_by(|a, b| a.axis.base.x1.total_cmp(&b.axis.base.x1).then(a.axis.base.x2.total_cmp(&b.axis.base.x2)));
            v
        };
        for (a, b) in sorted(scene.cylinders.clone()).iter().zip(&sorted(back.cylinders.clone())) {
            prop_assert_eq!(a.axis.base, b.axis.base);
            prop_assert_eq!(a.radius, b.radius);
            prop_assert!((a.axis.velocity() - b.axis.velocity()).norm() <= 1e-14 * (1.0 + a.axis.velocity().norm()));
        }
    }

    #[test]
    fn hardcore_is_time_reversal_and_translation_invariant(
        raw in prop::collection::vec((vec2(20.0), vec2(3.0)), 2..12), shift in vec2(100.0),
    ) {
        let ps: Vec<Particle> = raw.into_iter().map(|(x, v)| Particle::new(x, v)).collect();
        let Ok(config) = MovingConfiguration::new(ps, 1e-9) else { return Ok(()) };
        let base = verify_hardcore(&config, 1.0);
        let rev = verify_hardcore(&config.reversed(), 1.0);
        let moved = verify_hardcore(&config.translated(shift), 1.0);
        prop_assert!(rel_close(base.min_alltime_distance, rev.min_alltime_distance, 1e-12));
        prop_assert!(rel_close(base.min_alltime_distance, moved.min_alltime_distance, 1e-9));
        let doc = hardcore_doc(&base);
        prop_assert_eq!(ReportDoc::parse_text(&doc.to_text()).unwrap(), doc.clone());
        prop_assert_eq!(ReportDoc::parse_json(&doc.to_json()).unwrap(), doc);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lattice_flows_are_collision_free(
        x1 in -40i64..40, x2 in -40i64..40, w1 in 0i64..6, w2 in 0i64..6,
        profile in prop_oneof![
            Just(MonotoneProfile::Arctan),
            Just(MonotoneProfile::Tanh),
            Just(MonotoneProfile::RationalSaturating),
        ],
        margin in 0.0..5.0f64,
    ) {
        let window = Window::new((x1, x1 + w1), (x2, x2 + w2));
        let reach = [x1, x1 + w1, x2, x2 + w2].iter().map(|n| n.abs()).max().unwrap();
        // past |n| = 12 tanh gaps drop below an ulp of the shifted velocity
        prop_assume!(!(profile == MonotoneProfile::Tanh && reach > 12));
        let Ok(flow) = build_flow(&profile, window, margin) else { return Ok(()) };
        let report = verify_flow(&flow, 1_000_000);
        prop_assert_eq!(report.chain_failures, 0);
        prop_assert!(report.injective);
        if let Some(m) = report.min_distance {
            prop_assert!(m.value >= 1.0 - 1e-9, "{:?}", m);
        }
        for p in &flow.particles {
            let s = p.speed();
            prop_assert!(s >= margin - 1e-12 && s <= flow.speed_max + 1e-12);
        }
    }
}

#[test]
fn tanh_far_from_origin_loses_velocity_injectivity() {
    let flow = build_flow(&MonotoneProfile::Tanh, Window::new((0, 0), (15, 20)), 0.0).unwrap();
    let report = verify_flow(&flow, 1_000_000);
    assert!(!report.injective);
    assert!(report.duplicate_w.is_empty());
    assert!(report.min_distance.unwrap().value >= 1.0 - 1e-9);
}
