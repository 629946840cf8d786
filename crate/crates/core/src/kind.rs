//! Game of kind: the barrier function, capture/escape classification and the
//! barrier curve for a fixed pursuer.

use std::fmt;

use rayon::prelude::*;

use crate::apollonius::{ApolloniusDisk, GameState, SpeedRatio};
use crate::error::{GameError, Result};
use crate::geometry::ConvexTarget;
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

/// Bisection stops once `|B|` drops below this.
pub const BARRIER_TOLERANCE: f64 = 1e-8;
/// Fewest rays accepted by [`trace_barrier_curve`].
pub const MIN_RAY_COUNT: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Space {
    /// Barrier value strictly positive: the pursuer wins under optimal play.
    Capture,
    /// Barrier value non-positive (boundary included): the evader wins.
    Escape,
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Space::Capture => "capture",
            Space::Escape => "escape",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Classification<T> {
    pub space: Space,
    pub barrier_value: T,
    /// The pursuer starts inside the target; evaluation proceeds regardless but
    /// the configuration is outside the setting the barrier was derived for.
    pub pursuer_inside_target: bool,
}

/// Closed polyline approximating the zero level set of the barrier function
/// for a fixed pursuer.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierCurve<T> {
    pub pursuer: Point2<T>,
    pub gamma: T,
    /// Ray angles about the target anchor, one per traced point.
    pub angles: Vec<T>,
    /// Traced points in ray order, with the first point repeated at the end.
    pub points: Vec<Point2<T>>,
    pub ray_count: usize,
}

impl<T: Real> BarrierCurve<T> {
    /// Traced points without the closing duplicate.
    pub fn ray_points(&self) -> &[Point2<T>] {
        &self.points[..self.ray_count]
    }
}

/// Barrier value from raw positions. Continuous through coincident players,
/// where it tends to `dist(pursuer, target)`.
pub(crate) fn barrier_from_positions<T: Real>(
    pursuer: Point2<T>,
    evader: Point2<T>,
    target: &ConvexTarget<T>,
    gamma: T,
) -> Result<T> {
    let disk = ApolloniusDisk::from_positions(pursuer, evader, gamma);
    Ok(target.distance(disk.center)? - disk.radius)
}

/// `B(X) = |proj C - C| - R`, using the true projection distance, so the value
/// is `-R` whenever the Apollonius center lies inside the target.
pub fn barrier_value<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<T> {
    let disk = ApolloniusDisk::new(state, ratio)?;
    Ok(target.distance(disk.center)? - disk.radius)
}

pub fn classify<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<Classification<T>> {
    let barrier_value = barrier_value(state, target, ratio)?;
    let space = if barrier_value > T::zero() {
        Space::Capture
    } else {
        Space::Escape
    };
    Ok(Classification {
        space,
        barrier_value,
        pursuer_inside_target: target.contains(state.pursuer),
    })
}

/// One ray of a barrier trace: its angle about the target anchor and the
/// bracketed zero, if the ray found a sign change.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierRay<T> {
    pub angle: T,
    pub point: Option<Point2<T>>,
}

/// Bisects every ray independently and reports each outcome, so a caller can
/// see which rays failed to bracket the barrier.
pub fn trace_barrier_rays<T: Real>(
    pursuer: Point2<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    ray_count: usize,
) -> Result<Vec<BarrierRay<T>>> {
    if ray_count < MIN_RAY_COUNT {
        return Err(GameError::InvalidInput(format!(
            "ray count must be at least {MIN_RAY_COUNT}, got {ray_count}"
        )));
    }
    if !pursuer.is_finite() {
        return Err(GameError::InvalidInput(
            "pursuer position must be finite".into(),
        ));
    }
    let anchor = target.anchor();
    let search_radius = barrier_search_radius(pursuer, target);
    let gamma = ratio.gamma();
    (0..ray_count)
        .into_par_iter()
        .map(|ray| {
            let angle = T::TAU() * T::lit(ray as f64) / T::lit(ray_count as f64);
            trace_ray(pursuer, target, gamma, anchor, angle, search_radius)
                .map(|point| BarrierRay { angle, point })
        })
        .collect()
}

fn barrier_search_radius<T: Real>(pursuer: Point2<T>, target: &ConvexTarget<T>) -> T {
    T::lit(10.0) * (target.bounding_radius() + (pursuer - target.anchor()).norm())
}

/// Traces the barrier curve by bisection along `ray_count` rays cast from the
/// target anchor.
///
/// The curve is assumed star-shaped about the anchor. A ray with no sign change
/// inside the search radius `10 (bounding radius + |pursuer - anchor|)` fails
/// with [`GameError::BracketingFailure`] rather than being interpolated.
pub fn trace_barrier_curve<T: Real>(
    pursuer: Point2<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    ray_count: usize,
) -> Result<BarrierCurve<T>> {
    let rays = trace_barrier_rays(pursuer, target, ratio, ray_count)?;
    let mut angles = Vec::with_capacity(ray_count);
    let mut points = Vec::with_capacity(ray_count + 1);
    for (ray, r) in rays.into_iter().enumerate() {
        let Some(p) = r.point else {
            return Err(GameError::BracketingFailure {
                ray,
                angle: r.angle.as_f64(),
                search_radius: barrier_search_radius(pursuer, target).as_f64(),
            });
        };
        angles.push(r.angle);
        points.push(p);
    }
    points.push(points[0]);
    Ok(BarrierCurve {
        pursuer,
        gamma: ratio.gamma(),
        angles,
        points,
        ray_count,
    })
}

fn trace_ray<T: Real>(
    pursuer: Point2<T>,
    target: &ConvexTarget<T>,
    gamma: T,
    anchor: Point2<T>,
    angle: T,
    search_radius: T,
) -> Result<Option<Point2<T>>> {
    let dir = Vector2::from_angle(angle);
    let eval = |rho: T| barrier_from_positions(pursuer, anchor + dir * rho, target, gamma);

    // Coarse scan for the first sign change, outward from the anchor.
    let samples = 256;
    let step = search_radius / T::lit(samples as f64);
    let mut lo = T::zero();
    let mut f_lo = eval(lo)?;
    let mut hi = None;
    for k in 1..=samples {
        let rho = step * T::lit(k as f64);
        let f = eval(rho)?;
        if (f_lo <= T::zero()) != (f <= T::zero()) {
            hi = Some(rho);
            break;
        }
        lo = rho;
        f_lo = f;
    }
    let Some(mut hi) = hi else {
        return Ok(None);
    };
    let lo_escape = f_lo <= T::zero();
    let tol = T::tol(BARRIER_TOLERANCE);
    let mut best = (T::infinity(), anchor + dir * lo);
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        let f = eval(mid)?;
        if f.abs() < best.0 {
            best = (f.abs(), anchor + dir * mid);
        }
        if f.abs() <= tol * T::lit(0.01) || hi - lo <= T::epsilon() * search_radius {
            break;
        }
        if (f <= T::zero()) == lo_escape {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if best.0 <= tol {
        Ok(Some(best.1))
    } else {
        Ok(None)
    }
}

/// Barrier-curve quartic for a disk of radius `r` at the origin, evaluated
/// exactly as it is usually printed:
///
/// `(a²+b²)² − r²(1−γ²)²(2(a²+b²) − r²) − γ²(c²+d²)(2(a²+b²) + 4r²(1−γ²)² + 2r²γ²(1−γ²)² + γ²)`
///
/// with `a = x − γ²xP`, `b = y − γ²yP`, `c = x − xP`, `d = y − yP`.
///
/// This form does not vanish on the curve where `|C| − r − R = 0` (it is off by
/// terms of order 1e-2 for r = 0.2, γ = 0.4); it is kept for comparison only.
/// Use [`circular_barrier_quartic_derived`] for a validated zero set.
pub fn circular_barrier_quartic<T: Real>(
    z: Point2<T>,
    pursuer: Point2<T>,
    ratio: &SpeedRatio<T>,
    r: T,
) -> T {
    let g2 = ratio.gamma() * ratio.gamma();
    let (s, t) = quartic_terms(z, pursuer, g2);
    let k = (T::one() - g2).powi(2);
    let r2 = r * r;
    let two = T::lit(2.0);
    s * s
        - r2 * k * (two * s - r2)
        - g2 * t * (two * s + T::lit(4.0) * r2 * k + two * r2 * g2 * k + g2)
}

/// Quartic obtained by squaring `√(a²+b²) = r(1−γ²) + γ√(c²+d²)` twice:
///
/// `s² − k²(2s − k²) − γ²t(2s + 2k² − γ²t)` with `s = a²+b²`, `t = c²+d²`,
/// `k = r(1−γ²)`.
///
/// Its zero set contains the barrier curve. It also contains the spurious
/// branch `√s = k − γ√t` (Apollonius disk strictly inside the target), where
/// the barrier is negative. Outside that branch the sign matches the barrier:
/// positive in the capture space.
pub fn circular_barrier_quartic_derived<T: Real>(
    z: Point2<T>,
    pursuer: Point2<T>,
    ratio: &SpeedRatio<T>,
    r: T,
) -> T {
    let g2 = ratio.gamma() * ratio.gamma();
    let (s, t) = quartic_terms(z, pursuer, g2);
    let k2 = (r * (T::one() - g2)).powi(2);
    let two = T::lit(2.0);
    s * s - k2 * (two * s - k2) - g2 * t * (two * s + two * k2 - g2 * t)
}

fn quartic_terms<T: Real>(z: Point2<T>, pursuer: Point2<T>, g2: T) -> (T, T) {
    let ab = z - pursuer * g2;
    let cd = z - pursuer;
    (ab.norm_squared(), cd.norm_squared())
}

/// Outcome of checking both quartic forms on a traced curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuarticValidation<T> {
    /// Largest `|quartic|` of the printed form over the traced points.
    pub printed_max_residual: T,
    /// Largest `|quartic|` of the derived form over the traced points.
    pub derived_max_residual: T,
}

impl<T: Real> QuarticValidation<T> {
    pub fn derived_holds(&self, tol: T) -> bool {
        self.derived_max_residual <= tol
    }

    pub fn printed_holds(&self, tol: T) -> bool {
        self.printed_max_residual <= tol
    }
}

/// Evaluates both circular quartics on the points of `curve`, traced for a
/// disk of radius `r` centered at the origin.
pub fn validate_circular_quartic<T: Real>(
    curve: &BarrierCurve<T>,
    ratio: &SpeedRatio<T>,
    r: T,
) -> QuarticValidation<T> {
    let mut out = QuarticValidation {
        printed_max_residual: T::zero(),
        derived_max_residual: T::zero(),
    };
    for &z in curve.ray_points() {
        out.printed_max_residual = out
            .printed_max_residual
            .max(circular_barrier_quartic(z, curve.pursuer, ratio, r).abs());
        out.derived_max_residual = out
            .derived_max_residual
            .max(circular_barrier_quartic_derived(z, curve.pursuer, ratio, r).abs());
    }
    out
}
