//! Closed-loop simulation under feedback strategies.
//!
//! Headings are piecewise constant over a step, so the explicit Euler update is
//! exact. Terminal events inside a step are located on the exact straight-line
//! segments: entry of the evader into the target by bisection, capture at the
//! closest approach of the two players.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::apollonius::{GameState, SpeedRatio, DEGENERACY_THRESHOLD};
use crate::degree_capture::capture_strategies;
use crate::degree_escape::{
    solve_escape_point_best_effort, solve_escape_point_warm, DcSolverConfig,
};
use crate::error::{GameError, Result};
use crate::geometry::ConvexTarget;
use crate::kind::{barrier_value, classify, Classification, Space};
use crate::scalar::Real;
use crate::vector::{Point2, Vector2};

/// Time resolution of escape-event bisection.
pub const EVENT_TIME_RESOLUTION: f64 = 1e-9;

/// Feedback rule mapping the current state to a heading.
pub type FeedbackRule<T> = Arc<dyn Fn(&GameState<T>) -> Vector2<T> + Send + Sync>;

#[derive(Clone)]
pub enum Strategy<T> {
    /// Saddle-point feedback for whichever subgame the current state is in,
    /// recomputed every step.
    Optimal,
    /// Constant heading angle in radians.
    FixedHeading(T),
    /// Arbitrary feedback; the returned vector is normalized.
    Custom(FeedbackRule<T>),
}

impl<T: fmt::Debug> fmt::Debug for Strategy<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Optimal => f.write_str("Optimal"),
            Strategy::FixedHeading(a) => f.debug_tuple("FixedHeading").field(a).finish(),
            Strategy::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SimConfig<T> {
    pub dt: T,
    /// Separation at which the pursuer counts as having caught the evader.
    pub capture_radius: T,
    pub max_time: T,
    pub pursuer_strategy: Strategy<T>,
    pub evader_strategy: Strategy<T>,
    pub solver: DcSolverConfig<T>,
}

impl<T: Real> Default for SimConfig<T> {
    fn default() -> Self {
        SimConfig {
            dt: T::lit(1e-3),
            capture_radius: T::lit(1e-3),
            max_time: T::lit(100.0),
            pursuer_strategy: Strategy::Optimal,
            evader_strategy: Strategy::Optimal,
            solver: DcSolverConfig::default(),
        }
    }
}

impl<T: Real> SimConfig<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("dt", self.dt),
            ("capture_radius", self.capture_radius),
            ("max_time", self.max_time),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(GameError::InvalidInput(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        for s in [&self.pursuer_strategy, &self.evader_strategy] {
            if let Strategy::FixedHeading(a) = s {
                if !a.is_finite() {
                    return Err(GameError::InvalidInput(
                        "fixed heading must be finite".into(),
                    ));
                }
            }
        }
        self.solver.validate()
    }

    /// Warnings about the configuration; currently only the step being long
    /// compared with `capture_radius / (vP + vE)`.
    pub fn warnings(&self, ratio: &SpeedRatio<T>) -> Vec<String> {
        let limit = self.capture_radius / (ratio.pursuer_speed() + ratio.evader_speed());
        if self.dt >= limit {
            vec![format!(
                "dt = {} is not below capture_radius / (vP + vE) = {}; capture is still detected at the closest approach within each step",
                self.dt, limit
            )]
        } else {
            Vec::new()
        }
    }
}

/// Heading pair applied over one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Controls<T> {
    pub pursuer: Vector2<T>,
    pub evader: Vector2<T>,
}

/// Explicit Euler step; exact for headings held constant over `dt`.
pub fn step<T: Real>(
    state: &GameState<T>,
    controls: &Controls<T>,
    dt: T,
    ratio: &SpeedRatio<T>,
) -> GameState<T> {
    GameState {
        pursuer: state.pursuer + controls.pursuer * (ratio.pursuer_speed() * dt),
        evader: state.evader + controls.evader * (ratio.evader_speed() * dt),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Outcome<T> {
    /// Players within the capture radius with the evader outside the target.
    Captured {
        time: T,
        /// Evader position at capture.
        point: Point2<T>,
        separation: T,
        /// Distance from the capture location to the target.
        target_distance: T,
    },
    /// Evader reached the target first.
    Escaped {
        time: T,
        point: Point2<T>,
        separation: T,
    },
    Timeout {
        time: T,
    },
}

impl<T: Real> Outcome<T> {
    pub fn time(&self) -> T {
        match *self {
            Outcome::Captured { time, .. }
            | Outcome::Escaped { time, .. }
            | Outcome::Timeout { time } => time,
        }
    }

    /// The subspace this outcome witnesses, if the game terminated.
    pub fn space(&self) -> Option<Space> {
        match self {
            Outcome::Captured { .. } => Some(Space::Capture),
            Outcome::Escaped { .. } => Some(Space::Escape),
            Outcome::Timeout { .. } => None,
        }
    }

    /// Payoff on a single scale for both subgames: the capture distance to the
    /// target when captured, minus the separation when escaped. The pursuer
    /// maximizes it, the evader minimizes it.
    pub fn signed_payoff(&self) -> Option<T> {
        match *self {
            Outcome::Captured {
                target_distance, ..
            } => Some(target_distance),
            Outcome::Escaped { separation, .. } => Some(-separation),
            Outcome::Timeout { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<T> {
    pub times: Vec<T>,
    pub pursuer_path: Vec<Point2<T>>,
    pub evader_path: Vec<Point2<T>>,
    /// `controls[k]` is held over `[times[k], times[k + 1])`; the final entry
    /// repeats the last applied pair so all lists have equal length.
    pub controls: Vec<Controls<T>>,
    pub outcome: Outcome<T>,
    pub initial_classification: Classification<T>,
    /// `V_c` or `V_e` of the initial state.
    pub predicted_value: T,
    /// Escape replans that returned a best-effort (unconverged) point.
    pub unconverged_replans: usize,
    pub warnings: Vec<String>,
}

impl<T: Real> TrajectoryRecord<T> {
    pub fn final_state(&self) -> GameState<T> {
        GameState {
            pursuer: *self.pursuer_path.last().expect("non-empty path"),
            evader: *self.evader_path.last().expect("non-empty path"),
        }
    }
}

struct Planner<'a, T> {
    target: &'a ConvexTarget<T>,
    ratio: &'a SpeedRatio<T>,
    solver: &'a DcSolverConfig<T>,
    escape_hint: Option<Point2<T>>,
    unconverged: usize,
}

impl<T: Real> Planner<'_, T> {
    fn optimal(&mut self, state: &GameState<T>) -> Result<Controls<T>> {
        if barrier_value(state, self.target, self.ratio)? > T::zero() {
            self.escape_hint = None;
            let sol = capture_strategies(state, self.target, self.ratio)?;
            return Ok(Controls {
                pursuer: sol.u_pursuer,
                evader: sol.u_evader,
            });
        }
        let sol = match self.escape_hint {
            Some(hint) => {
                solve_escape_point_warm(state, self.target, self.ratio, self.solver, hint)?
            }
            None => solve_escape_point_best_effort(state, self.target, self.ratio, self.solver)?,
        };
        if !sol.converged {
            self.unconverged += 1;
        }
        self.escape_hint = Some(sol.escape_point);
        Ok(Controls {
            pursuer: sol.u_pursuer,
            evader: sol.u_evader,
        })
    }

    fn controls(&mut self, state: &GameState<T>, config: &SimConfig<T>) -> Result<Controls<T>> {
        let needs_optimal = matches!(config.pursuer_strategy, Strategy::Optimal)
            || matches!(config.evader_strategy, Strategy::Optimal);
        let optimal = if needs_optimal {
            Some(self.optimal(state)?)
        } else {
            None
        };
        let pick = |s: &Strategy<T>, optimal_heading: Option<Vector2<T>>| -> Result<Vector2<T>> {
            match s {
                Strategy::Optimal => Ok(optimal_heading.expect("computed above")),
                Strategy::FixedHeading(a) => Ok(Vector2::from_angle(*a)),
                Strategy::Custom(rule) => rule(state)
                    .normalized()
                    .filter(|u| u.is_finite())
                    .ok_or_else(|| {
                        GameError::InvalidInput(
                            "feedback rule returned a zero or non-finite heading".into(),
                        )
                    }),
            }
        };
        Ok(Controls {
            pursuer: pick(&config.pursuer_strategy, optimal.map(|c| c.pursuer))?,
            evader: pick(&config.evader_strategy, optimal.map(|c| c.evader))?,
        })
    }
}

/// First time in `[0, h]` at which the evader moving from `from` with
/// velocity `velocity` is inside the target.
fn escape_crossing<T: Real>(
    target: &ConvexTarget<T>,
    from: Point2<T>,
    velocity: Vector2<T>,
    h: T,
) -> Option<T> {
    let at = |tau: T| from + velocity * tau;
    const PROBES: usize = 8;
    let mut lo = T::zero();
    let mut hi = None;
    for k in 1..=PROBES {
        let tau = h * T::lit(k as f64) / T::lit(PROBES as f64);
        if target.contains(at(tau)) {
            hi = Some(tau);
            break;
        }
        lo = tau;
    }
    let mut hi = hi?;
    let resolution = T::lit(EVENT_TIME_RESOLUTION);
    while hi - lo > resolution {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        if target.contains(at(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Time of closest approach in `[0, h]` when it comes within `radius`.
///
/// A minimum at the end of the step while the players are still closing is
/// left to the next step, so the reported time is the true closest approach.
fn capture_crossing<T: Real>(
    offset: Vector2<T>,
    relative_velocity: Vector2<T>,
    h: T,
    radius: T,
) -> Option<T> {
    let w2 = relative_velocity.norm_squared();
    let tau = if w2 > T::zero() {
        (-offset.dot(relative_velocity) / w2).max(T::zero()).min(h)
    } else {
        T::zero()
    };
    let separation = (offset + relative_velocity * tau).norm();
    let interior = tau < h || separation <= T::lit(1e3 * DEGENERACY_THRESHOLD);
    (separation <= radius && interior).then_some(tau)
}

/// Simulates the game from `initial` until capture, escape or `max_time`.
///
/// Errors raised while computing strategies are wrapped in
/// [`GameError::SolverFailure`] with the time and step index.
pub fn run<T: Real>(
    initial: &GameState<T>,
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &SimConfig<T>,
) -> Result<TrajectoryRecord<T>> {
    config.validate()?;
    initial.validate()?;
    let initial_classification = classify(initial, target, ratio)?;
    let wrap = |time: T, step: usize| {
        move |e: GameError| GameError::SolverFailure {
            time: time.as_f64(),
            step,
            source: Box::new(e),
        }
    };
    let predicted_value = match initial_classification.space {
        Space::Capture => initial_classification.barrier_value,
        Space::Escape => {
            solve_escape_point_best_effort(initial, target, ratio, &config.solver)
                .map_err(wrap(T::zero(), 0))?
                .value
        }
    };

    let mut planner = Planner {
        target,
        ratio,
        solver: &config.solver,
        escape_hint: None,
        unconverged: 0,
    };
    let mut state = *initial;
    let mut times = vec![T::zero()];
    let mut pursuer_path = vec![state.pursuer];
    let mut evader_path = vec![state.evader];
    let mut controls = Vec::new();

    let initial_outcome = if target.contains(state.evader) {
        Some(Outcome::Escaped {
            time: T::zero(),
            point: state.evader,
            separation: state.separation(),
        })
    } else if state.separation() <= config.capture_radius {
        Some(Outcome::Captured {
            time: T::zero(),
            point: state.evader,
            separation: state.separation(),
            target_distance: target.distance(state.evader)?,
        })
    } else {
        None
    };

    let outcome = if let Some(outcome) = initial_outcome {
        controls.push(
            planner
                .controls(&state, config)
                .map_err(wrap(T::zero(), 0))?,
        );
        outcome
    } else {
        let mut k = 0usize;
        loop {
            let t = *times.last().expect("non-empty");
            if t >= config.max_time {
                let separation = state.separation();
                break if separation <= config.capture_radius {
                    Outcome::Captured {
                        time: t,
                        point: state.evader,
                        separation,
                        target_distance: target.distance(state.evader)?,
                    }
                } else {
                    Outcome::Timeout { time: t }
                };
            }
            let next_time = (T::lit((k + 1) as f64) * config.dt).min(config.max_time);
            let h = next_time - t;
            let c = planner.controls(&state, config).map_err(wrap(t, k))?;
            controls.push(c);
            let vp = c.pursuer * ratio.pursuer_speed();
            let ve = c.evader * ratio.evader_speed();
            let offset = state.evader - state.pursuer;
            let escape_at = escape_crossing(target, state.evader, ve, h);
            let capture_at = capture_crossing(offset, ve - vp, h, config.capture_radius);
            let at = |tau: T| GameState {
                pursuer: state.pursuer + vp * tau,
                evader: state.evader + ve * tau,
            };
            match (escape_at, capture_at) {
                // Simultaneous arrival goes to the evader.
                (Some(te), tc) if tc.is_none_or(|tc| te <= tc) => {
                    let s = at(te);
                    times.push(t + te);
                    pursuer_path.push(s.pursuer);
                    evader_path.push(s.evader);
                    break Outcome::Escaped {
                        time: t + te,
                        point: s.evader,
                        separation: s.separation(),
                    };
                }
                (_, Some(tc)) => {
                    let s = at(tc);
                    times.push(t + tc);
                    pursuer_path.push(s.pursuer);
                    evader_path.push(s.evader);
                    break Outcome::Captured {
                        time: t + tc,
                        point: s.evader,
                        separation: s.separation(),
                        target_distance: target.distance(s.evader)?,
                    };
                }
                _ => {}
            }
            state = step(&state, &c, h, ratio);
            times.push(next_time);
            pursuer_path.push(state.pursuer);
            evader_path.push(state.evader);
            k += 1;
        }
    };
    if let Some(last) = controls.last().copied() {
        while controls.len() < times.len() {
            controls.push(last);
        }
    }

    Ok(TrajectoryRecord {
        times,
        pursuer_path,
        evader_path,
        controls,
        outcome,
        initial_classification,
        predicted_value,
        unconverged_replans: planner.unconverged,
        warnings: config.warnings(ratio),
    })
}

/// Runs independent simulations concurrently; results keep input order.
pub fn run_batch<T: Real>(
    initial: &[GameState<T>],
    target: &ConvexTarget<T>,
    ratio: &SpeedRatio<T>,
    config: &SimConfig<T>,
) -> Vec<Result<TrajectoryRecord<T>>> {
    initial
        .par_iter()
        .map(|s| run(s, target, ratio, config))
        .collect()
}

/// Largest perpendicular distance of `path` from the chord joining its ends.
pub fn chord_deviation<T: Real>(path: &[Point2<T>]) -> T {
    let (Some(first), Some(last)) = (path.first(), path.last()) else {
        return T::zero();
    };
    let chord = *last - *first;
    let length = chord.norm();
    path.iter()
        .map(|z| {
            if length > T::zero() {
                (chord.cross(*z - *first) / length).abs()
            } else {
                (*z - *first).norm()
            }
        })
        .fold(T::zero(), T::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point2<f64> {
        Point2::new(x, y)
    }

    #[test]
    fn step_examples() {
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(0.0, 0.0), p(1.0, 1.0)).unwrap();
        let c = Controls {
            pursuer: p(1.0, 0.0),
            evader: p(0.0, -1.0),
        };
        let n = step(&s, &c, 0.1, &r);
        assert!((n.pursuer - p(0.1, 0.0)).norm() < 1e-15);
        let n = step(&s, &c, 0.5, &r);
        assert!((n.evader - p(1.0, 0.8)).norm() < 1e-15);
        let mut m = s;
        for _ in 0..10 {
            m = step(&m, &c, 0.05, &r);
        }
        assert!(
            (m.evader - n.evader).norm() < 1e-14
                && (m.pursuer - step(&s, &c, 0.5, &r).pursuer).norm() < 1e-14
        );
    }

    #[test]
    fn forced_timeout() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(0.5, 0.4), p(1.2, 1.0)).unwrap();
        let config = SimConfig {
            max_time: 0.001,
            ..SimConfig::default()
        };
        let rec = run(&s, &t, &r, &config).unwrap();
        assert!(matches!(rec.outcome, Outcome::Timeout { .. }));
        assert_eq!(rec.times.len(), 2);
        assert_eq!(rec.controls.len(), rec.times.len());
    }

    #[test]
    fn evader_starting_inside_escapes_at_once() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(0.5, 0.4), p(0.1, 0.0)).unwrap();
        let rec = run(&s, &t, &r, &SimConfig::default()).unwrap();
        match rec.outcome {
            Outcome::Escaped {
                time, separation, ..
            } => {
                assert_eq!(time, 0.0);
                assert!((separation - rec.predicted_value).abs() < 1e-15);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn closest_approach_is_interior() {
        let d = p(1.0, 0.0);
        let w = p(-2.0, 0.0);
        assert_eq!(capture_crossing(d, w, 1.0, 1e-3), Some(0.5));
        // Still closing at the end of the step: defer.
        assert_eq!(capture_crossing(d, w, 0.4999, 1e-3), None);
        assert_eq!(capture_crossing(d, -w, 1.0, 1e-3), None);
    }

    #[test]
    fn crossing_bisection_resolution() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 1.0).unwrap();
        let tau = escape_crossing(&t, p(2.0, 0.0), p(-1.0, 0.0), 1.5).unwrap();
        assert!(tau >= 1.0 && tau - 1.0 <= 1e-9);
        assert!(escape_crossing(&t, p(2.0, 0.0), p(1.0, 0.0), 1.5).is_none());
    }

    #[test]
    fn custom_rule_must_return_heading() {
        let t = ConvexTarget::circle(p(0.0, 0.0), 0.2).unwrap();
        let r = SpeedRatio::new(0.4).unwrap();
        let s = GameState::new(p(0.5, 0.4), p(1.2, 1.0)).unwrap();
        let config = SimConfig {
            evader_strategy: Strategy::Custom(Arc::new(|_| Vector2::zero())),
            ..SimConfig::default()
        };
        let err = run(&s, &t, &r, &config).unwrap_err();
        assert!(
            matches!(err, GameError::SolverFailure { step: 0, .. }),
            "{err:?}"
        );
    }

    #[test]
    fn chord_deviation_of_bent_path() {
        let path = [p(0.0, 0.0), p(1.0, 0.5), p(2.0, 0.0)];
        assert!((chord_deviation(&path) - 0.5).abs() < 1e-15);
    }
}
