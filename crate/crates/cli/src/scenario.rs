use std::path::Path;

use serde::{Deserialize, Serialize};
use tdg_core::{
    superellipse, ConvexTarget, ConvexTargetD, DcSolverConfigD, GameError, GameState, GameStateD,
    Point2, Point2d, SimConfigD, SpeedRatio, SpeedRatioD, Strategy,
};

use crate::exit::Failure;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub target: TargetSpec,
    pub gamma: f64,
    pub v_pursuer: f64,
    pub pursuer: [f64; 2],
    pub evader: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetSpec {
    Circle {
        center: [f64; 2],
        radius: f64,
    },
    Ellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        rotation: f64,
    },
    Superellipse {
        center: [f64; 2],
        semi_axes: [f64; 2],
        exponent: f64,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub dt: Option<f64>,
    pub capture_radius: Option<f64>,
    pub max_time: Option<f64>,
    pub pursuer_strategy: Option<StrategySpec>,
    pub evader_strategy: Option<StrategySpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Optimal,
    FixedHeading { heading: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    pub max_outer_iterations: Option<usize>,
    pub objective_tolerance: Option<f64>,
    pub subproblem_tolerance: Option<f64>,
    pub multi_start_count: Option<usize>,
    pub max_inner_iterations: Option<usize>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Lower-left and upper-right corners of the sampling box.
    pub min: Option<[f64; 2]>,
    pub max: Option<[f64; 2]>,
    pub oracle_grid: Option<usize>,
}

/// A scenario after every field has been checked.
pub struct Game {
    pub target: ConvexTargetD,
    pub ratio: SpeedRatioD,
    pub pursuer: Point2d,
    pub evader: Point2d,
    pub sim: SimConfigD,
    pub solver: DcSolverConfigD,
    pub seed: Option<u64>,
    pub sweep: Sweep,
}

pub struct Sweep {
    pub min: Point2d,
    pub max: Point2d,
    pub oracle_grid: usize,
    /// Grid given explicitly in the scenario, also used by `solve --verify`.
    pub grid_override: Option<usize>,
}

/// Oracle grid per sweep sample.
pub const SWEEP_ORACLE_GRID: usize = 201;
/// Oracle grid for a single `solve --verify`.
pub const SOLVE_ORACLE_GRID: usize = 801;

fn field(name: &str, msg: impl std::fmt::Display) -> Failure {
    Failure::schema(format!("{name}: {msg}"))
}

fn point(name: &str, p: [f64; 2]) -> Result<Point2d, Failure> {
    if p.iter().all(|v| v.is_finite()) {
        Ok(Point2::new(p[0], p[1]))
    } else {
        Err(field(name, "coordinates must be finite"))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(field(name, format!("must be positive and finite, got {v}")))
    }
}

fn core(name: &str, e: GameError) -> Failure {
    match e {
        GameError::InvalidInput(msg) => field(name, msg),
        other => field(name, other),
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::io(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|f| f.context(format!("scenario {}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Scenario, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::schema(e.to_string()))
    }

    pub fn game(&self) -> Result<Game, Failure> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(field(
                "gamma",
                format!("must lie in the open interval (0, 1), got {}", self.gamma),
            ));
        }
        let v_pursuer = positive("v_pursuer", self.v_pursuer)?;
        let ratio =
            SpeedRatio::with_pursuer_speed(self.gamma, v_pursuer).map_err(|e| core("gamma", e))?;
        let target = self.target.build()?;
        let pursuer = point("pursuer", self.pursuer)?;
        let evader = point("evader", self.evader)?;

        let mut solver = DcSolverConfigD::default();
        if let Some(s) = &self.solver {
            if let Some(v) = s.max_outer_iterations {
                solver.max_outer_iterations = v;
            }
            if let Some(v) = s.objective_tolerance {
                solver.objective_tolerance = positive("solver.objective_tolerance", v)?;
            }
            if let Some(v) = s.subproblem_tolerance {
                solver.subproblem_tolerance = positive("solver.subproblem_tolerance", v)?;
            }
            if let Some(v) = s.multi_start_count {
                solver.multi_start_count = v;
            }
            if let Some(v) = s.max_inner_iterations {
                solver.max_inner_iterations = v;
            }
        }
        solver.validate().map_err(|e| core("solver", e))?;

        let mut sim = SimConfigD {
            solver,
            ..SimConfigD::default()
        };
        if let Some(s) = &self.sim {
            if let Some(v) = s.dt {
                sim.dt = positive("sim.dt", v)?;
            }
            if let Some(v) = s.capture_radius {
                sim.capture_radius = positive("sim.capture_radius", v)?;
            }
            if let Some(v) = s.max_time {
                sim.max_time = positive("sim.max_time", v)?;
            }
            if let Some(v) = &s.pursuer_strategy {
                sim.pursuer_strategy = v.build("sim.pursuer_strategy")?;
            }
            if let Some(v) = &s.evader_strategy {
                sim.evader_strategy = v.build("sim.evader_strategy")?;
            }
        }
        sim.validate().map_err(|e| core("sim", e))?;

        let sweep = self.sweep(&target, pursuer)?;
        Ok(Game {
            target,
            ratio,
            pursuer,
            evader,
            sim,
            solver,
            seed: self.seed,
            sweep,
        })
    }

    fn sweep(&self, target: &ConvexTargetD, pursuer: Point2d) -> Result<Sweep, Failure> {
        let given = self.sweep.clone().unwrap_or_default();
        // Default box: centred on the target, wide enough to hold the pursuer.
        let anchor = target.anchor();
        let half = 3.0 * (target.bounding_radius() + (pursuer - anchor).norm());
        let min = match given.min {
            Some(p) => point("sweep.min", p)?,
            None => Point2::new(anchor.x - half, anchor.y - half),
        };
        let max = match given.max {
            Some(p) => point("sweep.max", p)?,
            None => Point2::new(anchor.x + half, anchor.y + half),
        };
        if !(max.x > min.x && max.y > min.y) {
            return Err(field("sweep", "max must exceed min in both coordinates"));
        }
        if let Some(n) = given.oracle_grid.filter(|n| *n < 3) {
            return Err(field(
                "sweep.oracle_grid",
                format!("must be at least 3, got {n}"),
            ));
        }
        Ok(Sweep {
            min,
            max,
            oracle_grid: given.oracle_grid.unwrap_or(SWEEP_ORACLE_GRID),
            grid_override: given.oracle_grid,
        })
    }
}

impl TargetSpec {
    fn build(&self) -> Result<ConvexTargetD, Failure> {
        match *self {
            TargetSpec::Circle { center, radius } => {
                let c = point("target.center", center)?;
                ConvexTarget::circle(c, positive("target.radius", radius)?)
                    .map_err(|e| core("target", e))
            }
            TargetSpec::Ellipse {
                center,
                semi_axes,
                rotation,
            } => {
                let c = point("target.center", center)?;
                let a = [
                    positive("target.semi_axes", semi_axes[0])?,
                    positive("target.semi_axes", semi_axes[1])?,
                ];
                if !rotation.is_finite() {
                    return Err(field("target.rotation", "must be finite"));
                }
                ConvexTarget::ellipse(c, a, rotation).map_err(|e| core("target", e))
            }
            TargetSpec::Superellipse {
                center,
                semi_axes,
                exponent,
            } => {
                let c = point("target.center", center)?;
                let a = [
                    positive("target.semi_axes", semi_axes[0])?,
                    positive("target.semi_axes", semi_axes[1])?,
                ];
                if !(exponent >= 2.0 && exponent.is_finite()) {
                    return Err(field(
                        "target.exponent",
                        format!("must be at least 2, got {exponent}"),
                    ));
                }
                superellipse(c, a, exponent).map_err(|e| core("target", e))
            }
        }
    }
}

impl StrategySpec {
    fn build(&self, name: &str) -> Result<Strategy<f64>, Failure> {
        match *self {
            StrategySpec::Optimal => Ok(Strategy::Optimal),
            StrategySpec::FixedHeading { heading } if heading.is_finite() => {
                Ok(Strategy::FixedHeading(heading))
            }
            StrategySpec::FixedHeading { .. } => Err(field(name, "heading must be finite")),
        }
    }
}

impl Game {
    /// The scenario's initial state; coincident players are a degenerate state.
    pub fn state(&self) -> Result<GameStateD, Failure> {
        GameState::new(self.pursuer, self.evader).map_err(Failure::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "target": { "kind": "circle", "center": [0.0, 0.0], "radius": 0.2 },
        "gamma": 0.4, "v_pursuer": 1.0, "pursuer": [0.5, 0.4], "evader": [1.2, 1.0]
    }"#;

    #[test]
    fn defaults_fill_optional_blocks() {
        let game = Scenario::parse(BASE).unwrap().game().unwrap();
        assert_eq!(game.sim.dt, 1e-3);
        assert_eq!(game.solver.multi_start_count, 8);
        assert_eq!(game.sweep.oracle_grid, SWEEP_ORACLE_GRID);
        assert!(game.sweep.grid_override.is_none());
        assert!(game.seed.is_none());
    }

    #[test]
    fn strategies_and_overrides_parse() {
        let text = BASE.replace(
            r#""evader": [1.2, 1.0]"#,
            r#""evader": [1.2, 1.0],
               "sim": { "max_time": 2.0, "pursuer_strategy": { "kind": "fixed_heading", "heading": 1.5 } },
               "solver": { "objective_tolerance": 1e-8 }"#,
        );
        let game = Scenario::parse(&text).unwrap().game().unwrap();
        assert_eq!(game.sim.max_time, 2.0);
        assert!(matches!(game.sim.pursuer_strategy, Strategy::FixedHeading(h) if h == 1.5));
        assert_eq!(game.sim.solver.objective_tolerance, 1e-8);
    }

    #[test]
    fn bad_fields_are_named() {
        let err = |text: &str| {
            Scenario::parse(text)
                .and_then(|s| s.game().map(|_| ()))
                .unwrap_err()
        };
        let e = err(&BASE.replace(r#""radius": 0.2"#, r#""radius": -0.2"#));
        assert!(e.message.contains("target.radius"), "{}", e.message);
        let e = err(&BASE.replace(r#""kind": "circle""#, r#""kind": "square""#));
        assert_eq!(e.code, crate::exit::Code::Schema);
        let e = err(&BASE.replace("0.4,", "0.0,"));
        assert!(e.message.starts_with("gamma"), "{}", e.message);
    }
}
