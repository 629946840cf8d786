use proptest::prelude::*;
use tdg_core::{
    barrier_value, capture_strategies, classify, escape_oracle, grad_value_capture,
    grad_value_escape, solve_escape_point, superellipse, trace_barrier_curve, value_capture,
    verify_meeting_point, ApolloniusDisk, ConvexTarget, ConvexTargetD, DcSolverConfig, GameError,
    GameState, GameStateD, Point2, Point2d, Space, SpeedRatio, SpeedRatioD, Vector2,
};

fn point(half: f64) -> impl Strategy<Value = Point2d> {
    (-half..half, -half..half).prop_map(|(x, y)| Point2::new(x, y))
}

fn target() -> impl Strategy<Value = ConvexTargetD> {
    prop_oneof![
        (point(1.0), 0.1..1.0).prop_map(|(c, r)| ConvexTarget::circle(c, r).unwrap()),
        (point(1.0), 0.1..1.0, 0.1..1.0, 0.0..3.2)
            .prop_map(|(c, a, b, rot)| ConvexTarget::ellipse(c, [a, b], rot).unwrap()),
        (point(1.0), 0.2..1.0, 0.2..1.0, 2.0..6.0).prop_map(|(c, a, b, p)| superellipse(
            c,
            [a, b],
            p
        )
        .unwrap()),
    ]
}

fn circle() -> impl Strategy<Value = ConvexTargetD> {
    (point(1.0), 0.1..1.0).prop_map(|(c, r)| ConvexTarget::circle(c, r).unwrap())
}

/// Pursuer and evader outside the target with a usable separation.
fn game(
    target: impl Strategy<Value = ConvexTargetD>,
) -> impl Strategy<Value = (ConvexTargetD, GameStateD, SpeedRatioD)> {
    (target, point(2.5), point(2.5), 0.2..0.8)
        .prop_filter("players outside the target and apart", |(t, p, e, _)| {
            (*p - *e).norm() > 1e-2 && !t.contains(*p) && !t.contains(*e)
        })
        .prop_map(|(t, p, e, g)| {
            (
                t,
                GameState::new(p, e).unwrap(),
                SpeedRatio::new(g).unwrap(),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_idempotent_and_nonexpansive(t in target(), a in point(3.0), b in point(3.0)) {
        let pa = t.project(a).unwrap();
        let pb = t.project(b).unwrap();
        prop_assert!((t.project(pa).unwrap() - pa).norm() <= 1e-9);
        prop_assert!((pa - pb).norm() <= (a - b).norm() + 1e-9);
        prop_assert!(t.h(pa) <= 1e-9);
    }

    #[test]
    fn projection_residual_is_normal(t in target(), z in point(3.0)) {
        prop_assume!(!t.contains(z));
        let q = t.project(z).unwrap();
        let d = z - q;
        let n = t.grad_h(q);
        prop_assert!((d.cross(n) / (d.norm() * n.norm())).abs() <= 1e-7);
        prop_assert!(d.dot(n) > 0.0);
        prop_assert!((t.distance(z).unwrap() - d.norm()).abs() <= 1e-12);
    }

    #[test]
    fn apollonius_identities(p in point(3.0), e in point(3.0), g in 0.05..0.95f64) {
        prop_assume!((p - e).norm() > 1e-6);
        let s = GameState::new(p, e).unwrap();
        let r = SpeedRatio::new(g).unwrap();
        let d = ApolloniusDisk::new(&s, &r).unwrap();
        prop_assert!(((d.center - e).norm() - g * d.radius).abs() <= 1e-12 * (1.0 + d.radius));
        prop_assert!(((d.center - p).norm() - d.radius / g).abs() <= 1e-12 * (1.0 + d.radius / g));
        prop_assert!(d.contains(e));
        prop_assert!(!d.contains(p));
    }

    #[test]
    fn capture_point_is_on_the_circle((t, s, r) in game(target())) {
        prop_assume!(barrier_value(&s, &t, &r).unwrap() > 1e-9);
        let sol = capture_strategies(&s, &t, &r).unwrap();
        prop_assert!(((sol.capture_point - sol.disk.center).norm() - sol.disk.radius).abs() <= 1e-10 * (1.0 + sol.disk.radius));
        prop_assert!(verify_meeting_point(&s, &r, sol.capture_point).abs() <= 1e-10 * (1.0 + s.separation()));
        prop_assert!((t.distance(sol.capture_point).unwrap() - sol.value).abs() <= 1e-9);
        prop_assert!((sol.u_pursuer.norm() - 1.0).abs() <= 1e-12);
        prop_assert!((sol.u_evader.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn capture_gradient_matches_finite_differences((t, s, r) in game(circle())) {
        prop_assume!(barrier_value(&s, &t, &r).unwrap() > 1e-4);
        let g = grad_value_capture(&s, &t, &r).unwrap();
        let x = s.to_array();
        for i in 0..4 {
            let (mut a, mut b) = (x, x);
            a[i] += 1e-6;
            b[i] -= 1e-6;
            let fd = (value_capture(&GameState::from_array(a), &t, &r).unwrap()
                - value_capture(&GameState::from_array(b), &t, &r).unwrap()) / 2e-6;
            prop_assert!((fd - g[i]).abs() <= 1e-5, "component {} fd {} closed form {}", i, fd, g[i]);
        }
    }

    #[test]
    fn escape_solution_invariants((t, s, r) in game(target())) {
        prop_assume!(barrier_value(&s, &t, &r).unwrap() < 0.0);
        let sol = solve_escape_point(&s, &t, &r, &DcSolverConfig::default()).unwrap();
        prop_assert!(t.h(sol.escape_point) <= 1e-9);
        prop_assert!((sol.escape_point - sol.disk.center).norm() <= sol.disk.radius + 1e-9);
        prop_assert!(sol.value >= -1e-9);
        for w in sol.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let g = grad_value_escape(&s, &t, &r, &DcSolverConfig::default()).unwrap();
        prop_assert!((g[0].hypot(g[1]) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn grid_oracle_never_beats_ccp((t, s, r) in game(target())) {
        prop_assume!(barrier_value(&s, &t, &r).unwrap() < 0.0);
        let sol = solve_escape_point(&s, &t, &r, &DcSolverConfig::default()).unwrap();
        let oracle = escape_oracle(&s, &t, &r, 101).unwrap();
        prop_assert!(-sol.value <= oracle.objective + 1e-6);
    }

    #[test]
    fn feasible_lens_is_convex((t, s, r) in game(target())) {
        prop_assume!(barrier_value(&s, &t, &r).unwrap() < 0.0);
        let disk = ApolloniusDisk::new(&s, &r).unwrap();
        let (lo, hi) = t.bounding_box();
        let n = 20;
        let mut feasible = Vec::new();
        for i in 0..=n {
            for j in 0..=n {
                let z = Point2::new(
                    lo.x + (hi.x - lo.x) * i as f64 / n as f64,
                    lo.y + (hi.y - lo.y) * j as f64 / n as f64,
                );
                if t.contains(z) && disk.contains(z) {
                    feasible.push(z);
                }
            }
        }
        for (k, a) in feasible.iter().enumerate() {
            for b in feasible.iter().skip(k + 1).step_by(5) {
                let m = a.lerp(*b, 0.5);
                prop_assert!(t.h(m) <= 1e-12);
                prop_assert!((m - disk.center).norm() <= disk.radius + 1e-12);
            }
        }
    }

    #[test]
    fn moving_the_evader_away_keeps_capture(c in circle(), angle in 0.0..6.3f64, g in 0.2..0.8f64, d0 in 0.0..3.0f64) {
        // Evader on a ray from the target centre, pursuer on the opposite side.
        let ConvexTarget::Circle(circle) = &c else { unreachable!() };
        let dir = Vector2::from_angle(angle);
        let pursuer = circle.center - dir * (circle.radius + 0.3);
        let r = SpeedRatio::new(g).unwrap();
        let space = |dist: f64| {
            let s = GameState::new(pursuer, circle.center + dir * (circle.radius + dist)).unwrap();
            classify(&s, &c, &r).unwrap().space
        };
        if space(d0) == Space::Capture {
            prop_assert_eq!(space(d0 + 0.5), Space::Capture);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn barrier_curve_points_lie_on_the_barrier(c in circle(), pursuer in point(2.5), g in 0.2..0.8f64) {
        prop_assume!(!c.contains(pursuer));
        let r = SpeedRatio::new(g).unwrap();
        match trace_barrier_curve(pursuer, &c, &r, 64) {
            Ok(curve) => {
                prop_assert_eq!(curve.points.first(), curve.points.last());
                for z in curve.ray_points() {
                    let b = barrier_value(&GameState::new(pursuer, *z).unwrap(), &c, &r).unwrap();
                    prop_assert!(b.abs() <= 1e-8);
                }
            }
            Err(GameError::BracketingFailure { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
