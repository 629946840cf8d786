//! Escape game of degree.
//!
//! The optimal escape point maximizes `|z - xP| - |z - xE| / γ` over the
//! intersection of the target and the evader's dominant disk. The objective
//! is a difference of convex norms, so it is minimized in the form
//! `-|z - xP| + |z - xE| / γ` by the convex-concave procedure: the concave term
//! is linearized at the current iterate and the resulting convex subproblem is
//! solved by projected gradient descent, with projections onto the
//! intersection computed by Dykstra's alternating scheme.
//!
//! A grid search with local polishing ([`brute_force_escape_point`]) serves as
//! an independent oracle for the solver.

use rayon::prelude::*;

use crate::apollonius::{ApolloniusDisk, GameState, SpeedRatio};
use crate::degree_capture::dynamics_dot;
use crate::error::{GameError, Result};
use crate::geometry::ConvexTarget;
use crate::kind::Space;
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

const DYKSTRA_MAX_ITERATIONS: usize = 2000;
const ORACLE_POLISH_LEVELS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DcSolverConfig<T> {
    pub max_outer_iterations: usize,
    /// Outer loop stops once an iteration decreases the objective by less.
    pub objective_tolerance: T,
    /// Inner loop stops once a projected step moves less than this (relative
    /// to the problem scale).
    pub subproblem_tolerance: T,
    /// Seeds sampled on the Apollonius circle, in addition to `proj C`.
    pub multi_start_count: usize,
    pub max_inner_iterations: usize,
}

impl<T: Real> Default for DcSolverConfig<T> {
    fn default() -> Self {
        DcSolverConfig {
            max_outer_iterations: 100,
            objective_tolerance: T::tol(1e-10),
            subproblem_tolerance: T::tol(1e-11),
            multi_start_count: 8,
            max_inner_iterations: 5000,
        }
    }
}

impl<T: Real> DcSolverConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(GameError::InvalidInput(m.to_string()));
        if self.max_outer_iterations == 0 || self.max_inner_iterations == 0 {
            return bad("solver iteration limits must be positive");
        }
        if !(self.objective_tolerance > T::zero() && self.subproblem_tolerance > T::zero()) {
            return bad("solver tolerances must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EscapeSolution<T> {
    pub escape_point: Point2<T>,
    pub u_pursuer: Vector2<T>,
    pub u_evader: Vector2<T>,
    /// `V_e = |x† - xP| - |x† - xE| / γ`.
    pub value: T,
    /// Direction angle of `x† - xP`.
    pub psi: T,
    /// Direction angle of `x† - xE` (equals `psi` when degenerate).
    pub varphi: T,
    /// Outer iterations used by the winning start.
    pub solver_iterations: usize,
    pub converged: bool,
    /// `x†` coincides with the evader (evader already inside the target); the
    /// evader heading then copies the pursuer's.
    pub degenerate: bool,
    pub certified_by_oracle: bool,
    /// Objective `-V` after each outer iteration of the winning start.
    pub objective_trace: Vec<T>,
    pub disk: ApolloniusDisk<T>,
    pub projection: Point2<T>,
}

/// The lens `target ∩ disk`.
struct FeasibleSet<'a, T> {
    target: &'a ConvexTarget<T>,
    disk: ApolloniusDisk<T>,
}

impl<T: Real> FeasibleSet<'_, T> {
    fn contains(&self, z: Point2<T>) -> bool {
        self.target.contains(z) && self.disk.contains(z)
    }

    /// Euclidean projection onto the intersection.
    fn project(&self, z: Point2<T>) -> Result<Point2<T>> {
        let on_target = self.target.project(z)?;
        if self.disk.contains(on_target) {
            return Ok(on_target);
        }
        let on_disk = self.disk.project(z);
        if self.target.contains(on_disk) {
            return Ok(on_disk);
        }
        let scale = T::one() + self.disk.radius + self.target.bounding_radius();
        let tol = T::epsilon() * T::lit(16.0) * scale;
        let mut x = z;
        let mut p = Vector2::zero();
        let mut q = Vector2::zero();
        for _ in 0..DYKSTRA_MAX_ITERATIONS {
            let y = self.target.project(x + p)?;
            p = x + p - y;
            let next = self.disk.project(y + q);
            q = y + q - next;
            let settled = (next - x).norm() <= tol && (next - y).norm() <= tol;
            x = next;
            if settled {
                break;
            }
        }
        // x lies in the disk by construction; pull it into the target if the
        // alternating scheme stopped a hair outside.
        if !self.target.contains(x) {
            let inner = self.target.project(x)?;
            if self.disk.contains(inner) {
                x = inner;
            }
        }
        Ok(x)
    }
}

struct Problem<'a, T> {
    pursuer: Point2<T>,
    evader: Point2<T>,
    gamma: T,
    set: FeasibleSet<'a, T>,
    projection: Point2<T>,
    scale: T,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(
        state: &GameState<T>,
        target: &'a ConvexTarget<T>,
        ratio: &SpeedRatio<T>,
    ) -> Result<Self> {
        let disk = ApolloniusDisk::new(state, ratio)?;
        let projection = target.project(disk.center)?;
        let barrier_value = (projection - disk.center).norm() - disk.radius;
        if barrier_value > T::zero() {
            return Err(GameError::Infeasible {
                barrier_value: barrier_value.as_f64(),
            });
        }
        Ok(Problem {
            pursuer: state.pursuer,
            evader: state.evader,
            gamma: ratio.gamma(),
            set: FeasibleSet { target, disk },
            projection,
            scale: T::one() + state.separation() + target.bounding_radius(),
        })
    }

    /// `-|z - xP| + |z - xE| / γ`.
    fn objective(&self, z: Point2<T>) -> T {
        escape_objective(z, self.pursuer, self.evader, self.gamma)
    }

    /// Minimizes `|z - xE| / γ - slope · z` over the lens, starting from the
    /// feasible `start`. Accelerated projected gradient with backtracking and a
    /// restart whenever the objective would increase; the returned point never
    /// has a larger surrogate value than `start`.
    fn solve_subproblem(
        &self,
        slope: Vector2<T>,
        start: Point2<T>,
        config: &DcSolverConfig<T>,
    ) -> Result<Point2<T>> {
        let inv_gamma = T::one() / self.gamma;
        let surrogate = |z: Point2<T>| (z - self.evader).norm() * inv_gamma - slope.dot(z);
        let gradient = |z: Point2<T>| {
            let d = z - self.evader;
            let n = d.norm();
            if n > T::zero() {
                d * (inv_gamma / n) - slope
            } else {
                -slope
            }
        };
        let tol = config.subproblem_tolerance * self.scale;
        let two = T::lit(2.0);
        let mut x = start;
        let mut fx = surrogate(x);
        let mut y = x;
        let mut momentum = T::one();
        let mut step = (self.gamma * (x - self.evader).norm()).max(tol);
        for _ in 0..config.max_inner_iterations {
            let fy = surrogate(y);
            let g = gradient(y);
            let mut accepted = None;
            for _ in 0..60 {
                let candidate = self.set.project(y - g * step)?;
                let d = candidate - y;
                let fc = surrogate(candidate);
                if fc <= fy + g.dot(d) + d.norm_squared() / (two * step) {
                    accepted = Some((candidate, fc));
                    break;
                }
                step = step * T::lit(0.5);
            }
            let Some((next, f_next)) = accepted else {
                break;
            };
            if f_next > fx {
                if y == x {
                    break;
                }
                // Momentum overshot: fall back to a plain projected step.
                y = x;
                momentum = T::one();
                continue;
            }
            let moved = (next - x).norm();
            let next_momentum =
                (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) / two;
            y = next + (next - x) * ((momentum - T::one()) / next_momentum);
            momentum = next_momentum;
            x = next;
            fx = f_next;
            if moved <= tol {
                break;
            }
            step = step * T::lit(1.25);
        }
        Ok(x)
    }

    /// Convex-concave procedure from a feasible seed.
    fn ccp(&self, seed: Point2<T>, config: &DcSolverConfig<T>) -> Result<Run<T>> {
        let position_tol = config.subproblem_tolerance * T::lit(1e3) * self.scale;
        let mut z = seed;
        let mut fz = self.objective(z);
        let mut trace = vec![fz];
        for iteration in 1..=config.max_outer_iterations {
            // z stays in the disk, which excludes the pursuer, so this is a unit vector.
            let slope = (z - self.pursuer) / (z - self.pursuer).norm();
            let next = self.solve_subproblem(slope, z, config)?;
            let f_next = self.objective(next);
            if f_next > fz {
                // Inexact subproblem; the previous iterate is at least as good.
                return Ok(Run {
                    point: z,
                    objective: fz,
                    iterations: iteration,
                    converged: true,
                    trace,
                });
            }
            let decrease = fz - f_next;
            let moved = (next - z).norm();
            z = next;
            fz = f_next;
            trace.push(fz);
            if decrease <= config.objective_tolerance && moved <= position_tol {
                return Ok(Run {
                    point: z,
                    objective: fz,
                    iterations: iteration,
                    converged: true,
                    trace,
                });
            }
        }
        Ok(Run {
            point: z,
            objective: fz,
            iterations: config.max_outer_iterations,
            converged: false,
            trace,
        })
    }

    fn seeds(&self, config: &DcSolverConfig<T>) -> Result<Vec<Point2<T>>> {
        let mut seeds = vec![self.projection];
        let n = config.multi_start_count;
        for k in 0..n {
            let angle = T::TAU() * (T::lit(k as f64) + T::lit(0.5)) / T::lit(n as f64);
            let candidate = self.set.project(self.set.disk.boundary_point(angle))?;
            let fresh = seeds
                .iter()
                .all(|s| (*s - candidate).norm() > T::tol(1e-9) * self.scale);
            if fresh {
                seeds.push(candidate);
            }
        }
        Ok(seeds)
    }

    fn solve_from(
        &self,
        seeds: &[Point2<T>],
        config: &DcSolverConfig<T>,
        anchor: Point2<T>,
    ) -> Result<EscapeSolution<T>> {
        if self.set.target.contains(self.evader) {
            return Ok(self.solution(self.evader, 0, true, vec![self.objective(self.evader)]));
        }
        let runs = seeds
            .par_iter()
            .map(|seed| self.ccp(*seed, config))
            .collect::<Result<Vec<_>>>()?;
        let best = runs
            .into_iter()
            .reduce(|a, b| if prefer(&b, &a, anchor) { b } else { a })
            .expect("at least one seed");
        Ok(self.solution(best.point, best.iterations, best.converged, best.trace))
    }

    fn solution(
        &self,
        point: Point2<T>,
        iterations: usize,
        converged: bool,
        trace: Vec<T>,
    ) -> EscapeSolution<T> {
        let to_point = point - self.pursuer;
        let u_pursuer = to_point / to_point.norm();
        let (u_evader, degenerate) = match (point - self.evader).normalized() {
            Some(u) if (point - self.evader).norm() > T::lit(1e-12) => (u, false),
            _ => (u_pursuer, true),
        };
        EscapeSolution {
            escape_point: point,
            u_pursuer,
            u_evader,
            value: -self.objective(point),
            psi: u_pursuer.angle(),
            varphi: u_evader.angle(),
            solver_iterations: iterations,
            converged,
            degenerate,
            certified_by_oracle: false,
            objective_trace: trace,
            disk: self.set.disk,
            projection: self.projection,
        }
    }
}

struct Run<T> {
    point: Point2<T>,
    objective: T,
    iterations: usize,
    converged: bool,
    trace: Vec<T>,
}

/// Lower objective wins; near-ties go to the smaller polar angle about the
/// target anchor.
fn prefer<T: Real>(candidate: &Run<T>, incumbent: &Run<T>, anchor: Point2<T>) -> bool {
    let tie = T::tol(1e-12) * (T::one() + incumbent.objective.abs());
    if candidate.objective < incumbent.objective - tie {
        return true;
    }
    if candidate.objective > incumbent.objective + tie {
        return false;
    }
    polar_angle(candidate.point, anchor) < polar_angle(incumbent.point, anchor)
}

fn polar_angle<T: Real>(z: Point2<T>, anchor: Point2<T>) -> T {
    let a = (z - anchor).angle();
    if a < T::zero() {
        a + T::TAU()
    } else {
        a
    }
}

/// Objective minimized by the escape problem: `-|z - xP| + |z - xE| / γ`.
pub fn escape_objective<T: Real>(
    z: Point2<T>,
    pursuer: Point2<T>,
    evader: Point2<T>,
    gamma: T,
) -> T {
    -(z - pursuer).norm() + (z - evader).norm() / gamma
}

/// `true` iff the barrier value is non-positive, i.e. the lens
/// `target ∩ disk` is nonempty.
pub fn escape_feasible<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
) -> Result<bool> {
    Ok(crate::kind::barrier_value(state, target, ratio)? <= T::zero())
}

/// Solves for the optimal escape point with multi-start CCP.
///
/// Fails with [`GameError::NonConvergence`] when the winning start exhausts the
/// outer iteration budget; see [`solve_escape_point_best_effort`] to obtain the
/// best iterate instead.
pub fn solve_escape_point<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<EscapeSolution<T>> {
    let sol = solve_escape_point_best_effort(state, target, ratio, config)?;
    if !sol.converged {
        let trace = &sol.objective_trace;
        let residual = match trace.len() {
            n if n >= 2 => (trace[n - 2] - trace[n - 1]).as_f64(),
            _ => f64::NAN,
        };
        return Err(GameError::NonConvergence {
            what: "convex-concave procedure",
            iterations: sol.solver_iterations,
            residual,
        });
    }
    Ok(sol)
}

/// As [`solve_escape_point`], but returns the best iterate with
/// `converged == false` instead of failing. The returned point is always
/// feasible.
pub fn solve_escape_point_best_effort<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<EscapeSolution<T>> {
    config.validate()?;
    let problem = Problem::new(state, target, ratio)?;
    let seeds = problem.seeds(config)?;
    problem.solve_from(&seeds, config, target.anchor())
}

/// Single-start solve seeded at `hint` (projected onto the feasible lens).
/// Used for feedback replanning, where the previous escape point is already
/// optimal or nearly so.
pub fn solve_escape_point_warm<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
    hint: Point2<T>,
) -> Result<EscapeSolution<T>> {
    config.validate()?;
    let problem = Problem::new(state, target, ratio)?;
    let seed = problem.set.project(hint)?;
    problem.solve_from(&[seed], config, target.anchor())
}

pub fn value_escape<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<T> {
    Ok(solve_escape_point(state, target, ratio, config)?.value)
}

/// `[-cos ψ, -sin ψ, cos φ / γ, sin φ / γ]`, ordered `[xP, yP, xE, yE]`.
pub fn escape_gradient<T: Real>(sol: &EscapeSolution<T>, gamma: T) -> [T; 4] {
    let (sp, cp) = sol.psi.sin_cos();
    let (sv, cv) = sol.varphi.sin_cos();
    [-cp, -sp, cv / gamma, sv / gamma]
}

fn strict_escape_solution<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<EscapeSolution<T>> {
    let b = crate::kind::barrier_value(state, target, ratio)?;
    if !(b < T::zero()) {
        return Err(GameError::WrongSubspace {
            required: Space::Escape,
            actual: if b > T::zero() {
                Space::Capture
            } else {
                Space::Escape
            },
            barrier_value: b.as_f64(),
        });
    }
    let sol = solve_escape_point(state, target, ratio, config)?;
    if sol.degenerate {
        return Err(GameError::DegeneratePoint);
    }
    Ok(sol)
}

/// Closed-form gradient of `V_e`; requires a strictly negative barrier value
/// and an escape point distinct from the evader.
pub fn grad_value_escape<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<[T; 4]> {
    let sol = strict_escape_solution(state, target, ratio, config)?;
    Ok(escape_gradient(&sol, ratio.gamma()))
}

pub fn hji_residual_escape<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
) -> Result<T> {
    let sol = strict_escape_solution(state, target, ratio, config)?;
    let grad = escape_gradient(&sol, ratio.gamma());
    Ok(dynamics_dot(grad, ratio, sol.u_pursuer, sol.u_evader))
}

/// `grad V_e · f(X, uP, uE)` for arbitrary unit headings. Positive when only
/// the pursuer deviates, negative when only the evader deviates.
pub fn hji_residual_escape_with<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &DcSolverConfig<T>,
    u_pursuer: Vector2<T>,
    u_evader: Vector2<T>,
) -> Result<T> {
    let grad = grad_value_escape(state, target, ratio, config)?;
    Ok(dynamics_dot(grad, ratio, u_pursuer, u_evader))
}

/// Result of the grid oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleResult<T> {
    pub point: Point2<T>,
    pub objective: T,
    /// Diagonal of the box that was gridded.
    pub box_diameter: T,
    pub feasible_grid_points: usize,
}

/// Independent check of the escape point: evaluate the objective on a
/// `grid_resolution × grid_resolution` lattice over the bounding box of the
/// lens, keep the best feasible point, then polish it by compass search at
/// step `box diameter / grid_resolution`, halved over 20 levels. Trial points
/// outside the lens are projected back onto it.
pub fn brute_force_escape_point<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    grid_resolution: usize,
) -> Result<Point2<T>> {
    Ok(escape_oracle(state, target, ratio, grid_resolution)?.point)
}

pub fn escape_oracle<T: Real>(
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    grid_resolution: usize,
) -> Result<OracleResult<T>> {
    if grid_resolution < 2 {
        return Err(GameError::InvalidInput(
            "grid resolution must be at least 2".into(),
        ));
    }
    let problem = Problem::new(state, target, ratio)?;
    let disk = problem.set.disk;
    let (tlo, thi) = target.bounding_box();
    let lo = Point2::new(
        tlo.x.max(disk.center.x - disk.radius),
        tlo.y.max(disk.center.y - disk.radius),
    );
    let hi = Point2::new(
        thi.x.min(disk.center.x + disk.radius),
        thi.y.min(disk.center.y + disk.radius),
    );
    let extent = Vector2::new((hi.x - lo.x).max(T::zero()), (hi.y - lo.y).max(T::zero()));
    let box_diameter = extent.norm();
    let n = grid_resolution;
    let denom = T::lit((n - 1) as f64);

    struct Row<T> {
        best: Option<(T, Point2<T>)>,
        count: usize,
    }
    let rows: Vec<Row<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let y = lo.y + extent.y * T::lit(i as f64) / denom;
            let mut row = Row {
                best: None,
                count: 0,
            };
            for j in 0..n {
                let z = Point2::new(lo.x + extent.x * T::lit(j as f64) / denom, y);
                if !problem.set.contains(z) {
                    continue;
                }
                row.count += 1;
                let f = problem.objective(z);
                if row.best.is_none_or(|(bf, _)| f < bf) {
                    row.best = Some((f, z));
                }
            }
            row
        })
        .collect();

    let mut best = (problem.objective(problem.projection), problem.projection);
    let mut count = 0;
    for row in rows {
        if let Some((f, z)) = row.best {
            if f < best.0 {
                best = (f, z);
            }
        }
        count += row.count;
    }
    // Trial points outside the lens are projected back onto it, which turns
    // outward compass moves into moves along the boundary.
    let retract = |c: Point2<T>| -> Option<Point2<T>> {
        if problem.set.contains(c) {
            Some(c)
        } else {
            problem.set.project(c).ok()
        }
    };

    let h = T::FRAC_1_SQRT_2();
    let one = T::one();
    let zero = T::zero();
    let directions = [
        Vector2::new(one, zero),
        Vector2::new(h, h),
        Vector2::new(zero, one),
        Vector2::new(-h, h),
        Vector2::new(-one, zero),
        Vector2::new(-h, -h),
        Vector2::new(zero, -one),
        Vector2::new(h, -h),
    ];
    let (mut fx, mut x) = best;
    let mut step = box_diameter.max(problem.scale * T::epsilon()) / T::lit(n as f64);
    for _ in 0..ORACLE_POLISH_LEVELS {
        for _ in 0..200 {
            let mut improved = None;
            for d in &directions {
                if let Some(c) = retract(x + *d * step) {
                    let f = problem.objective(c);
                    if f < improved.map_or(fx, |(bf, _)| bf) {
                        improved = Some((f, c));
                    }
                }
            }
            match improved {
                Some((f, c)) => {
                    fx = f;
                    x = c;
                }
                None => break,
            }
        }
        step = step * T::lit(0.5);
    }
    Ok(OracleResult {
        point: x,
        objective: fx,
        box_diameter,
        feasible_grid_points: count,
    })
}

/// Comparison of a solver result against the grid oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCheck<T> {
    pub oracle_point: Point2<T>,
    pub oracle_objective: T,
    pub solver_objective: T,
    /// `oracle objective - solver objective`; negative when the grid wins.
    pub objective_gap: T,
    pub position_gap: T,
    /// `2 · box diameter / (grid_resolution - 1)`.
    pub position_bound: T,
    pub passed: bool,
}

/// Objective agreement accepted by [`certify_escape_solution`].
pub const ORACLE_OBJECTIVE_TOLERANCE: f64 = 1e-6;

/// Runs the grid oracle and marks `solution` certified when it agrees in
/// objective (within 1e-6) and position (within two grid cells).
pub fn certify_escape_solution<T: Real>(
    solution: &mut EscapeSolution<T>,
    state: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    grid_resolution: usize,
) -> Result<OracleCheck<T>> {
    let oracle = escape_oracle(state, target, ratio, grid_resolution)?;
    let solver_objective = -solution.value;
    let objective_gap = oracle.objective - solver_objective;
    let position_gap = (oracle.point - solution.escape_point).norm();
    let position_bound = T::lit(2.0) * oracle.box_diameter / T::lit((grid_resolution - 1) as f64);
    let passed =
        objective_gap.abs() <= T::tol(ORACLE_OBJECTIVE_TOLERANCE) && position_gap <= position_bound;
    solution.certified_by_oracle = passed;
    Ok(OracleCheck {
        oracle_point: oracle.point,
        oracle_objective: oracle.objective,
        solver_objective,
        objective_gap,
        position_gap,
        position_bound,
        passed,
    })
}

impl<T: Real> EscapeSolution<T> {
    /// Objective value `-V_e` at the escape point.
    pub fn objective(&self) -> T {
        -self.value
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    fn circle() -> ConvexTarget<f64> {
        ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap()
    }

    #[test]
    fn capture_states_are_infeasible() {
        let s = GameState::new(p(0.5, 0.4), p(1.2, 1.0)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        assert!(!escape_feasible(&s, &circle(), &r).unwrap());
        assert!(matches!(
            solve_escape_point(&s, &circle(), &r, &DcSolverConfig::default()),
            Err(GameError::Infeasible { .. })
        ));
        assert!(matches!(
            brute_force_escape_point(&s, &circle(), &r, 11),
            Err(GameError::Infeasible { .. })
        ));
    }

    #[test]
    fn evader_inside_target_escapes_immediately() {
        let s = GameState::new(p(0.5, 0.4), p(0.1, 0.0)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        assert!(escape_feasible(&s, &circle(), &r).unwrap());
        let sol = solve_escape_point(&s, &circle(), &r, &DcSolverConfig::default()).unwrap();
        assert!(sol.degenerate);
        assert_eq!(sol.escape_point, s.evader);
        assert!((sol.value - s.separation()).abs() < 1e-15);
        assert_eq!(sol.u_evader, sol.u_pursuer);
        assert!(matches!(
            grad_value_escape(&s, &circle(), &r, &DcSolverConfig::default()),
            Err(GameError::DegeneratePoint)
        ));
    }

    #[test]
    fn collinear_escape_point_stays_on_axis() {
        let s = GameState::new(p(1.0, 0.0), p(0.3, 0.0)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let sol = solve_escape_point(&s, &circle(), &r, &DcSolverConfig::default()).unwrap();
        assert!(sol.escape_point.y.abs() < 1e-6, "{:?}", sol.escape_point);
        assert!((sol.escape_point.norm() - 0.2).abs() < 1e-9);
        let g = grad_value_escape(&s, &circle(), &r, &DcSolverConfig::default()).unwrap();
        assert!(g[1].abs() < 1e-5 && g[3].abs() < 1e-5);
        assert!((g[0].hypot(g[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_trace_is_nonincreasing() {
        let s = GameState::new(p(0.5, 0.4), p(-0.1, 0.35)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let sol = solve_escape_point(&s, &circle(), &r, &DcSolverConfig::default()).unwrap();
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn non_convergence_is_reported() {
        let s = GameState::new(p(0.5, 0.4), p(-0.1, 0.35)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let config = DcSolverConfig {
            max_outer_iterations: 1,
            max_inner_iterations: 1,
            multi_start_count: 0,
            ..DcSolverConfig::default()
        };
        let err = solve_escape_point(&s, &circle(), &r, &config).unwrap_err();
        assert!(matches!(err, GameError::NonConvergence { .. }), "{err:?}");
        let best = solve_escape_point_best_effort(&s, &circle(), &r, &config).unwrap();
        assert!(!best.converged);
        assert!(circle().h(best.escape_point) <= 1e-9);
        assert!((best.escape_point - best.disk.center).norm() <= best.disk.radius + 1e-9);
    }

    #[test]
    fn hji_probe_signs() {
        let s = GameState::new(p(0.5, 0.4), p(-0.1, 0.35)).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let c = DcSolverConfig::default();
        let sol = solve_escape_point(&s, &circle(), &r, &c).unwrap();
        assert!(hji_residual_escape(&s, &circle(), &r, &c).unwrap().abs() < 1e-12);
        let p_dev = hji_residual_escape_with(
            &s,
            &circle(),
            &r,
            &c,
            sol.u_pursuer.rotated(0.1),
            sol.u_evader,
        )
        .unwrap();
        let e_dev = hji_residual_escape_with(
            &s,
            &circle(),
            &r,
            &c,
            sol.u_pursuer,
            sol.u_evader.rotated(0.1),
        )
        .unwrap();
        assert!(p_dev > 0.0);
        assert!(e_dev < 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = DcSolverConfig::<f64> {
            objective_tolerance: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
