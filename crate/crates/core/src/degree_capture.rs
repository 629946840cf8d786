//! Capture game of degree: optimal capture point, constant saddle-point
//! headings, the value `V_c`, its gradient and the HJI residual.

use crate::apollonius::{ApolloniusDisk, GameState, SpeedRatio};
use crate::error::{GameError, Result};
use crate::geometry::ConvexTarget;
use crate::kind::Space;
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CaptureSolution<T> {
    /// Point on the Apollonius circle closest to the target, where the players meet.
    pub capture_point: Point2<T>,
    pub u_pursuer: Vector2<T>,
    pub u_evader: Vector2<T>,
    /// `V_c = |proj C - C| - R = dist(capture_point, target)`.
    pub value: T,
    /// Direction angle of `proj C - C`.
    pub theta: T,
    /// Direction angle of `xE - xP`.
    pub phi: T,
    /// Projection of the Apollonius center onto the target.
    pub projection: Point2<T>,
    pub disk: ApolloniusDisk<T>,
}

struct CaptureGeometry<T> {
    disk: ApolloniusDisk<T>,
    projection: Point2<T>,
    /// Unit vector from the Apollonius center toward its projection.
    toward_target: Vector2<T>,
    value: T,
}

fn capture_geometry<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<CaptureGeometry<T>> {
    let disk = ApolloniusDisk::new(state, ratio)?;
    let projection = target.project(disk.center)?;
    let offset = projection - disk.center;
    let gap = offset.norm();
    let value = gap - disk.radius;
    if !(value > T::zero()) {
        return Err(GameError::WrongSubspace {
            required: Space::Capture,
            actual: Space::Escape,
            barrier_value: value.as_f64(),
        });
    }
    Ok(CaptureGeometry {
        disk,
        projection,
        // gap > R > 0 here, so the direction is well defined.
        toward_target: offset / gap,
        value,
    })
}

/// `x* = C + R (proj C - C) / |proj C - C|`.
pub fn capture_point<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<Point2<T>> {
    let g = capture_geometry(state, target, ratio)?;
    Ok(g.disk.center + g.toward_target * g.disk.radius)
}

pub fn capture_strategies<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<CaptureSolution<T>> {
    let g = capture_geometry(state, target, ratio)?;
    let capture_point = g.disk.center + g.toward_target * g.disk.radius;
    let heading = |from: Point2<T>| {
        (capture_point - from)
            .normalized()
            .ok_or(GameError::DegenerateState {
                separation: state.separation().as_f64(),
            })
    };
    Ok(CaptureSolution {
        capture_point,
        u_pursuer: heading(state.pursuer)?,
        u_evader: heading(state.evader)?,
        value: g.value,
        theta: g.toward_target.angle(),
        phi: (state.evader - state.pursuer).angle(),
        projection: g.projection,
        disk: g.disk,
    })
}

pub fn value_capture<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<T> {
    Ok(capture_geometry(state, target, ratio)?.value)
}

/// Closed-form gradient of `V_c`, ordered `[xP, yP, xE, yE]`.
pub fn grad_value_capture<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<[T; 4]> {
    let sol = capture_strategies(state, target, ratio)?;
    Ok(capture_gradient(sol.theta, sol.phi, ratio.gamma()))
}

pub(crate) fn capture_gradient<T: Real>(theta: T, phi: T, gamma: T) -> [T; 4] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    let denom = T::one() - gamma * gamma;
    let a = gamma * gamma / denom;
    let b = gamma / denom;
    let c = T::one() / denom;
    [
        a * ct + b * cp,
        a * st + b * sp,
        -c * ct - b * cp,
        -c * st - b * sp,
    ]
}

/// `grad V_c · f(X, uP, uE)` for arbitrary unit headings. Zero at the optimal
/// pair; positive when only the evader deviates, negative when only the
/// pursuer deviates.
pub fn hji_residual_capture_with<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    u_pursuer: Vector2<T>,
    u_evader: Vector2<T>,
) -> Result<T> {
    let grad = grad_value_capture(state, target, ratio)?;
    Ok(dynamics_dot(grad, ratio, u_pursuer, u_evader))
}

/// HJI residual at the optimal heading pair; vanishes identically.
pub fn hji_residual_capture<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<T> {
    let sol = capture_strategies(state, target, ratio)?;
    let grad = capture_gradient(sol.theta, sol.phi, ratio.gamma());
    Ok(dynamics_dot(grad, ratio, sol.u_pursuer, sol.u_evader))
}

pub(crate) fn dynamics_dot<T: Real>(
    grad: [T; 4],
    ratio: &SpeedRatio<T>,
    u_pursuer: Vector2<T>,
    u_evader: Vector2<T>,
) -> T {
    let vp = ratio.pursuer_speed();
    let ve = ratio.evader_speed();
    grad[0] * vp * u_pursuer.x
        + grad[1] * vp * u_pursuer.y
        + grad[2] * ve * u_evader.x
        + grad[3] * ve * u_evader.y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::apollonius::verify_meeting_point;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn scenario() -> (GameState<f64>, ConvexTarget<f64>, SpeedRatio<f64>) {
        (
            GameState::new(p(0.5, 0.4), p(1.2, 1.0)).unwrap(),
            ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap(),
            SpeedRatio::new(0.4).unwrap(),
        )
    }

    #[test]
    fn capture_point_example() {
        let (s, t, r) = scenario();
        let x = capture_point(&s, &t, &r).unwrap();
        assert!(
            (x - p(0.996_459_072_801_325_2, 0.832_755_082_269_678_9)).norm() < 1e-12,
            "{x:?}"
        );
        assert!(verify_meeting_point(&s, &r, x).abs() < 1e-12);
    }

    #[test]
    fn strategies_example() {
        let (s, t, r) = scenario();
        let sol = capture_strategies(&s, &t, &r).unwrap();
        assert!(
            (sol.u_pursuer - p(0.753_814_388_357_341_7, 0.657_087_412_682_244_9)).norm() < 1e-12
        );
        assert!(((sol.capture_point - s.evader).norm() - 0.263_438_363_856_743_7).abs() < 1e-12);
        assert!((sol.value - 1.098_619_155_416_266_3).abs() < 1e-12);
        assert!((t.distance(sol.capture_point).unwrap() - sol.value).abs() < 1e-12);
        assert!((sol.u_pursuer.norm() - 1.0).abs() < 1e-12);
        assert!((sol.u_evader.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_configuration() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(3.0, 0.0), p(1.5, 0.0)).unwrap();
        let sol = capture_strategies(&s, &t, &r).unwrap();
        assert!(sol.capture_point.y.abs() < 1e-15);
        // Evader lies on the segment from pursuer to x*: identical headings.
        assert!((sol.u_pursuer - sol.u_evader).norm() < 1e-12);
        let g = grad_value_capture(&s, &t, &r).unwrap();
        assert!(g[1].abs() < 1e-15 && g[3].abs() < 1e-15);
    }

    #[test]
    fn escape_states_are_refused() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(0.5, 0.4), p(0.0, 0.0)).unwrap();
        assert!(matches!(
            capture_point(&s, &t, &r),
            Err(GameError::WrongSubspace { .. })
        ));
        assert!(value_capture(&s, &t, &r).is_err());
        assert!(hji_residual_capture(&s, &t, &r).is_err());
    }

    #[test]
    fn saddle_probe_signs() {
        let (s, t, r) = scenario();
        let sol = capture_strategies(&s, &t, &r).unwrap();
        assert!(hji_residual_capture(&s, &t, &r).unwrap().abs() < 1e-12);
        let e_dev = hji_residual_capture_with(&s, &t, &r, sol.u_pursuer, sol.u_evader.rotated(0.1))
            .unwrap();
        let p_dev = hji_residual_capture_with(&s, &t, &r, sol.u_pursuer.rotated(0.1), sol.u_evader)
            .unwrap();
        assert!(e_dev > 0.0);
        assert!(p_dev < 0.0);
    }
}
