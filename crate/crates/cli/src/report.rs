//! JSON documents emitted by the commands. Each one re-parses with unknown
//! fields rejected, matching `docs/report.schema.json`.

use serde::{Deserialize, Serialize};
use tdg_core::{ApolloniusDiskD, OracleCheck, Point2d, Space, Vector2};

pub type Xy = [f64; 2];

pub fn xy(p: Point2d) -> Xy {
    [p.x, p.y]
}

pub fn uv(v: Vector2<f64>) -> Xy {
    [v.x, v.y]
}

pub fn space_name(s: Space) -> String {
    s.to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Disk {
    pub center: Xy,
    pub radius: f64,
}

impl From<&ApolloniusDiskD> for Disk {
    fn from(d: &ApolloniusDiskD) -> Self {
        Disk {
            center: xy(d.center),
            radius: d.radius,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifyReport {
    pub command: String,
    pub space: String,
    pub barrier_value: f64,
    pub disk: Disk,
    /// Closest target point to the disk centre.
    pub projection: Xy,
    pub pursuer_inside_target: bool,
    pub evader_inside_target: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveReport {
    pub command: String,
    pub space: String,
    pub barrier_value: f64,
    pub disk: Disk,
    pub projection: Xy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub capture: Option<CaptureReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub escape: Option<EscapeReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaptureReport {
    pub capture_point: Xy,
    pub u_pursuer: Xy,
    pub u_evader: Xy,
    pub value: f64,
    pub theta: f64,
    pub phi: f64,
    pub gradient: [f64; 4],
    pub hji_residual: f64,
    /// `|x* - xE| - γ |x* - xP|`.
    pub meeting_residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verified: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EscapeReport {
    pub escape_point: Xy,
    pub u_pursuer: Xy,
    pub u_evader: Xy,
    pub value: f64,
    pub psi: f64,
    pub varphi: f64,
    /// Absent when the escape point coincides with the evader.
    pub gradient: Option<[f64; 4]>,
    pub hji_residual: Option<f64>,
    pub solver: SolverDiagnostics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub best_effort: bool,
    pub objective_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleReport {
    pub grid: usize,
    pub oracle_point: Xy,
    pub oracle_objective: f64,
    pub solver_objective: f64,
    pub objective_gap: f64,
    pub position_gap: f64,
    pub position_bound: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(grid: usize, c: &OracleCheck<f64>) -> Self {
        OracleReport {
            grid,
            oracle_point: xy(c.oracle_point),
            oracle_objective: c.oracle_objective,
            solver_objective: c.solver_objective,
            objective_gap: c.objective_gap,
            position_gap: c.position_gap,
            position_bound: c.position_bound,
            passed: c.passed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeReport {
    pub command: String,
    /// "captured", "escaped" or "timeout".
    pub outcome: String,
    pub time: f64,
    pub steps: usize,
    /// Capture or escape location.
    pub point: Option<Xy>,
    pub separation: Option<f64>,
    pub target_distance: Option<f64>,
    /// Realized payoff: distance to the target at capture, separation at escape.
    pub value: Option<f64>,
    pub initial_space: String,
    pub barrier_value: f64,
    pub predicted_value: f64,
    pub unconverged_replans: usize,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyReport {
    pub command: String,
    pub seed: u64,
    pub sample_count: usize,
    pub box_min: Xy,
    pub box_max: Xy,
    pub capture_samples: usize,
    pub escape_samples: usize,
    /// Samples with |B| below the barrier margin, kept out of the simulation
    /// agreement and gradient checks.
    pub near_barrier_samples: usize,
    pub hji: HjiStats,
    pub gradient: GradientStats,
    pub oracle: OracleStats,
    pub simulation: SimulationStats,
    pub solver_errors: Vec<String>,
    pub thresholds: Thresholds,
    pub violations: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResidualStats {
    pub count: usize,
    pub max_abs: f64,
    pub mean_abs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HjiStats {
    /// Residuals divided by the pursuer speed.
    pub capture: ResidualStats,
    pub escape: ResidualStats,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientStats {
    pub step: f64,
    pub capture_checked: usize,
    pub capture_max_error: f64,
    pub escape_checked: usize,
    pub escape_max_error: f64,
    /// Escape states where the optimal point jumps across the stencil.
    pub escape_nonsmooth_skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleStats {
    pub grid: usize,
    pub checked: usize,
    pub worst_objective_gap: f64,
    /// Largest position gap as a fraction of the grid bound.
    pub worst_position_ratio: f64,
    pub disagreements: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationStats {
    pub evaluated: usize,
    pub agree: usize,
    pub timeouts: usize,
    pub mismatches: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    pub hji_capture: f64,
    pub hji_escape: f64,
    pub gradient_capture: f64,
    pub gradient_escape: f64,
    pub oracle_objective: f64,
    pub barrier_margin: f64,
}
