//! Two-player planar target-defense game with a compact convex target.
//!
//! A faster pursuer guards a convex target against a slower evader. This crate
//! answers the game of kind (who wins, via the barrier function built from the
//! Apollonius disk) and the game of degree in both subspaces (optimal capture
//! and escape points, saddle-point headings, values and their gradients), and
//! simulates closed-loop play.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the aliases at the
//! crate root fix the scalar type.

pub mod apollonius;
pub mod degree_capture;
pub mod degree_escape;
pub mod error;
pub mod geometry;
pub mod kind;
pub mod scalar;
pub mod sim;
pub mod vector;

pub use apollonius::{
    apollonius_disk, verify_meeting_point, ApolloniusDisk, Dominance, GameState, SpeedRatio,
};
pub use degree_capture::{
    capture_point, capture_strategies, grad_value_capture, hji_residual_capture,
    hji_residual_capture_with, value_capture, CaptureSolution,
};
pub use degree_escape::{
    brute_force_escape_point, certify_escape_solution, escape_feasible, escape_gradient,
    escape_oracle, grad_value_escape, hji_residual_escape, hji_residual_escape_with,
    solve_escape_point, solve_escape_point_best_effort, solve_escape_point_warm, value_escape,
    DcSolverConfig, EscapeSolution, OracleCheck, OracleResult,
};
pub use error::{GameError, Result};
pub use geometry::{superellipse, Circle, ConvexTarget, Ellipse, ImplicitTarget};
pub use kind::{
    barrier_value, circular_barrier_quartic, circular_barrier_quartic_derived, classify,
    trace_barrier_curve, trace_barrier_rays, validate_circular_quartic, BarrierCurve, BarrierRay,
    Classification, QuarticValidation, Space,
};
pub use scalar::Real;
pub use sim::{run, run_batch, step, Controls, Outcome, SimConfig, Strategy, TrajectoryRecord};
pub use vector::{Point2, Vec2, Vector2};

pub type Point2d = Point2<f64>;
pub type Point2f = Point2<f32>;
pub type GameStateD = GameState<f64>;
pub type GameStateF = GameState<f32>;
pub type SpeedRatioD = SpeedRatio<f64>;
pub type SpeedRatioF = SpeedRatio<f32>;
pub type ConvexTargetD = ConvexTarget<f64>;
pub type ConvexTargetF = ConvexTarget<f32>;
pub type ApolloniusDiskD = ApolloniusDisk<f64>;
pub type ApolloniusDiskF = ApolloniusDisk<f32>;
pub type BarrierCurveD = BarrierCurve<f64>;
pub type CaptureSolutionD = CaptureSolution<f64>;
pub type CaptureSolutionF = CaptureSolution<f32>;
pub type EscapeSolutionD = EscapeSolution<f64>;
pub type EscapeSolutionF = EscapeSolution<f32>;
pub type DcSolverConfigD = DcSolverConfig<f64>;
pub type SimConfigD = SimConfig<f64>;
pub type TrajectoryRecordD = TrajectoryRecord<f64>;
