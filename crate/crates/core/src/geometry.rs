//! Compact convex target sets and Euclidean projection onto them.
//!
//! A target is the sublevel set `{z : h(z) <= 0}` of a smooth convex function
//! `h`. Circles are projected in closed form. Ellipses solve the reduced
//! optimality system for the single multiplier. General smooth sets run a
//! damped Newton iteration on the full stationarity system, with a
//! boundary-angle search as fallback when Newton stalls.

use std::fmt;
use std::sync::Arc;

use crate::error::{GameError, Result};
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

/// Iteration budget for the iterative projectors.
pub const PROJECTION_MAX_ITERATIONS: usize = 200;
/// Stationarity residual accepted by the iterative projectors (length units).
pub const PROJECTION_TOLERANCE: f64 = 1e-10;

/// Smooth convex function `h` of a point.
pub type ScalarField<T> = Arc<dyn Fn(Point2<T>) -> T + Send + Sync>;
/// Gradient of a [`ScalarField`].
pub type VectorField<T> = Arc<dyn Fn(Point2<T>) -> Vector2<T> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle<T> {
    pub center: Point2<T>,
    pub radius: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse<T> {
    pub center: Point2<T>,
    /// Semi-axis lengths along the rotated x and y directions.
    pub semi_axes: [T; 2],
    /// Counter-clockwise rotation of the major axes, radians.
    pub rotation: T,
}

/// Target given only through `h`, its gradient and a point where `h < 0`.
#[derive(Clone)]
pub struct ImplicitTarget<T> {
    h: ScalarField<T>,
    grad_h: VectorField<T>,
    anchor: Point2<T>,
    bounding_radius: T,
}

impl<T: fmt::Debug> fmt::Debug for ImplicitTarget<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitTarget")
            .field("anchor", &self.anchor)
            .field("bounding_radius", &self.bounding_radius)
            .finish_non_exhaustive()
    }
}

/// A compact convex target set with a smooth boundary.
#[derive(Clone, Debug)]
pub enum ConvexTarget<T> {
    Circle(Circle<T>),
    Ellipse(Ellipse<T>),
    Implicit(ImplicitTarget<T>),
}

fn invalid(msg: impl Into<String>) -> GameError {
    GameError::InvalidInput(msg.into())
}

impl<T: Real> ConvexTarget<T> {
    pub fn circle(center: Point2<T>, radius: T) -> Result<Self> {
        if !center.is_finite() {
            return Err(invalid("circle center must be finite"));
        }
        if !(radius > T::zero() && radius.is_finite()) {
            return Err(invalid(format!(
                "circle radius must be positive, got {radius}"
            )));
        }
        Ok(ConvexTarget::Circle(Circle { center, radius }))
    }

    pub fn ellipse(center: Point2<T>, semi_axes: [T; 2], rotation: T) -> Result<Self> {
        if !center.is_finite() || !rotation.is_finite() {
            return Err(invalid("ellipse center and rotation must be finite"));
        }
        if semi_axes.iter().any(|a| !(*a > T::zero() && a.is_finite())) {
            return Err(invalid("ellipse semi-axes must be positive"));
        }
        Ok(ConvexTarget::Ellipse(Ellipse {
            center,
            semi_axes,
            rotation,
        }))
    }

    /// Builds a target from a caller-supplied convex `h`.
    ///
    /// Convexity and boundedness are the caller's contract. They are spot-checked
    /// here: `h(anchor) < 0`, `h > 0` on the circle of `bounding_radius` about the
    /// anchor, and midpoint convexity on a sample of interior points.
    pub fn implicit(
        h: ScalarField<T>,
        grad_h: VectorField<T>,
        anchor: Point2<T>,
        bounding_radius: T,
    ) -> Result<Self> {
        if !anchor.is_finite() {
            return Err(invalid("implicit target anchor must be finite"));
        }
        if !(bounding_radius > T::zero() && bounding_radius.is_finite()) {
            return Err(invalid("implicit target bounding radius must be positive"));
        }
        if !(h(anchor) < T::zero()) {
            return Err(invalid("implicit target anchor must satisfy h(anchor) < 0"));
        }
        let target = ImplicitTarget {
            h,
            grad_h,
            anchor,
            bounding_radius,
        };
        target.spot_check()?;
        Ok(ConvexTarget::Implicit(target))
    }

    /// The convex function whose zero sublevel set is the target.
    ///
    /// Circles use `|z - c|^2 - r^2`; ellipses use the normalized quadratic form
    /// minus one.
    pub fn h(&self, z: Point2<T>) -> T {
        match self {
            ConvexTarget::Circle(c) => (z - c.center).norm_squared() - c.radius * c.radius,
            ConvexTarget::Ellipse(e) => {
                let l = e.to_local(z);
                let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
                (l.x / a).powi(2) + (l.y / b).powi(2) - T::one()
            }
            ConvexTarget::Implicit(t) => (t.h)(z),
        }
    }

    pub fn grad_h(&self, z: Point2<T>) -> Vector2<T> {
        match self {
            ConvexTarget::Circle(c) => (z - c.center) * T::lit(2.0),
            ConvexTarget::Ellipse(e) => {
                let l = e.to_local(z);
                let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
                let two = T::lit(2.0);
                Vector2::new(two * l.x / (a * a), two * l.y / (b * b)).rotated(e.rotation)
            }
            ConvexTarget::Implicit(t) => (t.grad_h)(z),
        }
    }

    /// `true` iff `h(z) <= 0`; the boundary belongs to the target.
    pub fn contains(&self, z: Point2<T>) -> bool {
        match self {
            ConvexTarget::Circle(c) => (z - c.center).norm() <= c.radius,
            _ => self.h(z) <= T::zero(),
        }
    }

    /// Interior reference point: the center for circles and ellipses, the
    /// caller's anchor for implicit targets.
    pub fn anchor(&self) -> Point2<T> {
        match self {
            ConvexTarget::Circle(c) => c.center,
            ConvexTarget::Ellipse(e) => e.center,
            ConvexTarget::Implicit(t) => t.anchor,
        }
    }

    /// Radius of a disk about [`anchor`](Self::anchor) containing the target.
    pub fn bounding_radius(&self) -> T {
        match self {
            ConvexTarget::Circle(c) => c.radius,
            ConvexTarget::Ellipse(e) => e.semi_axes[0].max(e.semi_axes[1]),
            ConvexTarget::Implicit(t) => t.bounding_radius,
        }
    }

    /// Axis-aligned box `(min, max)` containing the target.
    pub fn bounding_box(&self) -> (Point2<T>, Point2<T>) {
        let (center, half) = match self {
            ConvexTarget::Circle(c) => (c.center, Vector2::new(c.radius, c.radius)),
            ConvexTarget::Ellipse(e) => {
                let (s, co) = e.rotation.sin_cos();
                let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
                let hx = (a * a * co * co + b * b * s * s).sqrt();
                let hy = (a * a * s * s + b * b * co * co).sqrt();
                (e.center, Vector2::new(hx, hy))
            }
            ConvexTarget::Implicit(t) => {
                (t.anchor, Vector2::new(t.bounding_radius, t.bounding_radius))
            }
        };
        (center - half, center + half)
    }

    /// Boundary point hit by the ray from the anchor at `angle`.
    pub fn boundary_point(&self, angle: T) -> Point2<T> {
        let dir = Vector2::from_angle(angle);
        match self {
            ConvexTarget::Circle(c) => c.center + dir * c.radius,
            ConvexTarget::Ellipse(e) => {
                let d = dir.rotated(-e.rotation);
                let (a, b) = (e.semi_axes[0], e.semi_axes[1]);
                let rho = T::one() / ((d.x / a).powi(2) + (d.y / b).powi(2)).sqrt();
                e.center + dir * rho
            }
            ConvexTarget::Implicit(t) => {
                let mut lo = T::zero();
                let mut hi = t.bounding_radius * T::lit(2.0);
                for _ in 0..80 {
                    let mid = (lo + hi) * T::lit(0.5);
                    if (t.h)(t.anchor + dir * mid) <= T::zero() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                t.anchor + dir * lo
            }
        }
    }

    /// Euclidean projection onto the target. Points inside are returned as is.
    pub fn project(&self, z: Point2<T>) -> Result<Point2<T>> {
        if !z.is_finite() {
            return Err(invalid("cannot project a non-finite point"));
        }
        match self {
            ConvexTarget::Circle(c) => {
                let d = z - c.center;
                let n = d.norm();
                if n <= c.radius {
                    Ok(z)
                } else {
                    Ok(c.center + d * (c.radius / n))
                }
            }
            ConvexTarget::Ellipse(e) => e.project(z),
            ConvexTarget::Implicit(t) => {
                if (t.h)(z) <= T::zero() {
                    Ok(z)
                } else {
                    t.project_outside(z)
                }
            }
        }
    }

    /// `dist(z, target)`; zero iff `contains(z)`.
    pub fn distance(&self, z: Point2<T>) -> Result<T> {
        match self {
            ConvexTarget::Circle(c) => Ok(((z - c.center).norm() - c.radius).max(T::zero())),
            _ => {
                if self.contains(z) {
                    Ok(T::zero())
                } else {
                    Ok((z - self.project(z)?).norm())
                }
            }
        }
    }
}

impl<T: Real> Ellipse<T> {
    fn to_local(&self, z: Point2<T>) -> Point2<T> {
        (z - self.center).rotated(-self.rotation)
    }

    /// Solves the optimality system with the point eliminated: for a local
    /// point `(u, v)` outside, the projection is `(a²u/(t+a²), b²v/(t+b²))`
    /// where `t > 0` is the root of a convex decreasing function, found by
    /// Newton from `t = 0` (monotone from the left, no damping needed).
    fn project(&self, z: Point2<T>) -> Result<Point2<T>> {
        let l = self.to_local(z);
        let (a, b) = (self.semi_axes[0], self.semi_axes[1]);
        let (a2, b2) = (a * a, b * b);
        if (l.x / a).powi(2) + (l.y / b).powi(2) <= T::one() {
            return Ok(z);
        }
        let (au, bv) = (a * l.x, b * l.y);
        let two = T::lit(2.0);
        let tol = T::tol(PROJECTION_TOLERANCE);
        let mut t = T::zero();
        let mut residual = T::infinity();
        let mut polish = 4;
        for _ in 0..PROJECTION_MAX_ITERATIONS {
            let p = au / (t + a2);
            let q = bv / (t + b2);
            let f = p * p + q * q - T::one();
            let df = -two * (p * p / (t + a2) + q * q / (t + b2));
            let local = Point2::new(a2 * l.x / (t + a2), b2 * l.y / (t + b2));
            // Stationarity in length units: |h| / |grad h| at the candidate.
            let g = Vector2::new(local.x / a2, local.y / b2);
            residual = f.abs() / (two * g.norm()).max(T::min_positive_value());
            let next = t - f / df;
            // Iterates approach the boundary from outside, so keep going past
            // the tolerance until Newton stalls at rounding level.
            if df == T::zero() || next <= t || (residual <= tol && polish == 0) {
                return Ok(local.rotated(self.rotation) + self.center);
            }
            if residual <= tol {
                polish -= 1;
            }
            t = next;
        }
        Err(GameError::NonConvergence {
            what: "ellipse projection",
            iterations: PROJECTION_MAX_ITERATIONS,
            residual: residual.as_f64(),
        })
    }
}

impl<T: Real> ImplicitTarget<T> {
    fn spot_check(&self) -> Result<()> {
        let n = 48;
        for k in 0..n {
            let angle = T::TAU() * T::lit(k as f64) / T::lit(n as f64);
            let z = self.anchor + Vector2::from_angle(angle) * self.bounding_radius;
            if (self.h)(z) <= T::zero() {
                return Err(invalid(format!(
                    "implicit target is not contained in the disk of radius {} about its anchor",
                    self.bounding_radius
                )));
            }
        }
        let grid = 17;
        let mut inside = Vec::new();
        for i in 0..grid {
            for j in 0..grid {
                let fx = T::lit(2.0 * i as f64 / (grid - 1) as f64 - 1.0);
                let fy = T::lit(2.0 * j as f64 / (grid - 1) as f64 - 1.0);
                let z = self.anchor + Vector2::new(fx, fy) * self.bounding_radius;
                if (self.h)(z) <= T::zero() {
                    inside.push(z);
                }
            }
        }
        let tol = T::tol(1e-9);
        for (i, a) in inside.iter().enumerate() {
            for b in inside.iter().skip(i + 1).step_by(7) {
                let mid = (*a + *b) * T::lit(0.5);
                if (self.h)(mid) > tol {
                    return Err(invalid(
                        "implicit target failed the midpoint convexity check",
                    ));
                }
            }
        }
        Ok(())
    }

    fn hessian(&self, x: Point2<T>) -> [[T; 2]; 2] {
        let step = T::epsilon().cbrt() * (T::one() + self.bounding_radius);
        let two = T::lit(2.0);
        let gx = ((self.grad_h)(x + Vector2::new(step, T::zero()))
            - (self.grad_h)(x - Vector2::new(step, T::zero())))
            / (two * step);
        let gy = ((self.grad_h)(x + Vector2::new(T::zero(), step))
            - (self.grad_h)(x - Vector2::new(T::zero(), step)))
            / (two * step);
        let off = (gx.y + gy.x) * T::lit(0.5);
        [[gx.x, off], [off, gy.y]]
    }

    fn kkt_residual(&self, z: Point2<T>, x: Point2<T>, mu: T) -> T {
        let g = (self.grad_h)(x);
        let stationarity = (x - z + g * mu).norm();
        let feasibility = (self.h)(x).abs() / g.norm().max(T::min_positive_value());
        stationarity + feasibility
    }

    fn ray_to_boundary(&self, z: Point2<T>) -> Point2<T> {
        let mut lo = T::zero();
        let mut hi = T::one();
        let seg = z - self.anchor;
        for _ in 0..80 {
            let mid = (lo + hi) * T::lit(0.5);
            if (self.h)(self.anchor + seg * mid) <= T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.anchor + seg * lo
    }

    /// Newton stops on distance, which can leave `h` a hair above zero.
    fn settle(&self, x: Point2<T>) -> Point2<T> {
        if (self.h)(x) <= T::zero() {
            x
        } else {
            self.ray_to_boundary(x)
        }
    }

    fn multiplier_estimate(&self, z: Point2<T>, x: Point2<T>) -> T {
        let g = (self.grad_h)(x);
        ((z - x).dot(g) / g.norm_squared().max(T::min_positive_value())).max(T::zero())
    }

    /// Damped Newton on `x - z + mu grad h(x) = 0`, `h(x) = 0`.
    fn newton(&self, z: Point2<T>, x0: Point2<T>, tol: T) -> Option<Point2<T>> {
        let mut x = x0;
        let mut mu = self.multiplier_estimate(z, x);
        let merit = |x: Point2<T>, mu: T| {
            let g = (self.grad_h)(x);
            let r = x - z + g * mu;
            let hv = (self.h)(x) / g.norm().max(T::min_positive_value());
            r.norm_squared() + hv * hv
        };
        for _ in 0..PROJECTION_MAX_ITERATIONS {
            if self.kkt_residual(z, x, mu) <= tol && mu >= T::zero() {
                return Some(x);
            }
            let g = (self.grad_h)(x);
            let hm = self.hessian(x);
            let r = x - z + g * mu;
            let hv = (self.h)(x);
            // [I + mu H, g; g^T, 0] [dx; dmu] = -[r; h]
            let m = [
                [T::one() + mu * hm[0][0], mu * hm[0][1], g.x],
                [mu * hm[1][0], T::one() + mu * hm[1][1], g.y],
                [g.x, g.y, T::zero()],
            ];
            let step = solve3(m, [-r.x, -r.y, -hv])?;
            let (dx, dmu) = (Vector2::new(step[0], step[1]), step[2]);
            let current = merit(x, mu);
            let mut alpha = T::one();
            let mut accepted = false;
            for _ in 0..40 {
                let xn = x + dx * alpha;
                let mun = mu + dmu * alpha;
                if merit(xn, mun) < current {
                    x = xn;
                    mu = mun;
                    accepted = true;
                    break;
                }
                alpha = alpha * T::lit(0.5);
            }
            if !accepted {
                break;
            }
        }
        (self.kkt_residual(z, x, mu) <= tol && mu >= T::zero()).then_some(x)
    }

    /// Minimizes `|z - b(angle)|` over boundary points `b` found by bisection
    /// along rays from the anchor.
    fn boundary_search(&self, z: Point2<T>) -> Point2<T> {
        let target = ConvexTarget::Implicit(self.clone());
        let n = 72;
        let step = T::TAU() / T::lit(n as f64);
        let dist = |angle: T| (target.boundary_point(angle) - z).norm_squared();
        let mut best = (T::zero(), T::infinity());
        for k in 0..n {
            let angle = step * T::lit(k as f64);
            let d = dist(angle);
            if d < best.1 {
                best = (angle, d);
            }
        }
        let (mut lo, mut hi) = (best.0 - step, best.0 + step);
        let ratio = T::lit(0.618_033_988_749_894_9);
        let mut c = hi - (hi - lo) * ratio;
        let mut d = lo + (hi - lo) * ratio;
        let (mut fc, mut fd) = (dist(c), dist(d));
        for _ in 0..80 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - (hi - lo) * ratio;
                fc = dist(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + (hi - lo) * ratio;
                fd = dist(d);
            }
        }
        target.boundary_point((lo + hi) * T::lit(0.5))
    }

    fn project_outside(&self, z: Point2<T>) -> Result<Point2<T>> {
        let scale = T::one() + (z - self.anchor).norm() + self.bounding_radius;
        let tol = T::tol(PROJECTION_TOLERANCE) * scale;
        let start = self.ray_to_boundary(z);
        if let Some(x) = self.newton(z, start, tol) {
            return Ok(self.settle(x));
        }
        let start = self.boundary_search(z);
        if let Some(x) = self.newton(z, start, tol) {
            return Ok(self.settle(x));
        }
        let mu = self.multiplier_estimate(z, start);
        Err(GameError::NonConvergence {
            what: "implicit target projection",
            iterations: PROJECTION_MAX_ITERATIONS,
            residual: self.kkt_residual(z, start, mu).as_f64(),
        })
    }
}

/// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3<T: Real>(mut m: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| {
            m[i][col]
                .abs()
                .partial_cmp(&m[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() <= T::min_positive_value() {
            return None;
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..3 {
                m[row][k] = m[row][k] - f * m[col][k];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc = acc - m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Superellipse `|x/a|^p + |y/b|^p <= 1` (p >= 2) as an implicit target.
///
/// Provided as a ready-made smooth convex shape with no closed-form projection.
pub fn superellipse<T: Real>(
    center: Point2<T>,
    semi_axes: [T; 2],
    exponent: T,
) -> Result<ConvexTarget<T>> {
    if !(exponent >= T::lit(2.0) && exponent.is_finite()) {
        return Err(invalid("superellipse exponent must be at least 2"));
    }
    let [a, b] = semi_axes;
    if !(a > T::zero() && b > T::zero()) {
        return Err(invalid("superellipse semi-axes must be positive"));
    }
    let p = exponent;
    let h: ScalarField<T> = Arc::new(move |z: Point2<T>| {
        let l = z - center;
        (l.x / a).abs().powf(p) + (l.y / b).abs().powf(p) - T::one()
    });
    let grad: VectorField<T> = Arc::new(move |z: Point2<T>| {
        let l = z - center;
        let gx = p * (l.x / a).abs().powf(p - T::one()) * l.x.signum() / a;
        let gy = p * (l.y / b).abs().powf(p - T::one()) * l.y.signum() / b;
        Vector2::new(gx, gy)
    });
    ConvexTarget::implicit(h, grad, center, a.max(b) * T::lit(1.5))
}
