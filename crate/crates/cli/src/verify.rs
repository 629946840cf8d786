use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tdg_core::degree_escape::ORACLE_OBJECTIVE_TOLERANCE;
use tdg_core::{
    barrier_value, certify_escape_solution, grad_value_capture, grad_value_escape,
    hji_residual_capture, hji_residual_escape, solve_escape_point, value_capture, GameState,
    GameStateD, Outcome, Point2, Space,
};

use crate::exit::Failure;
use crate::report::*;
use crate::scenario::Game;

const HJI_CAPTURE: f64 = 1e-9;
const HJI_ESCAPE: f64 = 1e-6;
const GRADIENT_CAPTURE: f64 = 1e-5;
const GRADIENT_ESCAPE: f64 = 1e-4;
/// States closer than this to the barrier are left out of the simulation and
/// gradient checks.
const BARRIER_MARGIN: f64 = 1e-4;
/// Escape states must sit at least this far inside for the oracle comparison.
const ORACLE_MARGIN: f64 = 1e-6;
const FD_STEP: f64 = 1e-6;
/// Largest move of the escape point across the stencil for a state to count
/// as smooth.
const SMOOTH_MOVE: f64 = 1e-3;
const MIN_SEPARATION: f64 = 1e-3;
const MAX_MISMATCHES: usize = 20;

#[derive(Default)]
struct Check {
    space: Option<Space>,
    hji: Option<f64>,
    capture_grad: Option<f64>,
    escape_grad: Option<f64>,
    nonsmooth: bool,
    oracle: Option<(f64, f64, bool)>,
    /// Simulated outcome versus prediction.
    sim: Option<std::result::Result<(), String>>,
    timeout: bool,
    errors: Vec<String>,
}

fn draw(game: &Game, count: usize, seed: u64) -> Result<Vec<GameStateD>, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (game.sweep.min, game.sweep.max);
    let mut states = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while states.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(Failure::schema(
                "sweep: the box leaves almost no room for players outside the target",
            ));
        }
        let mut point = || Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        let (p, e) = (point(), point());
        if game.target.contains(p) || game.target.contains(e) || (p - e).norm() < MIN_SEPARATION {
            continue;
        }
        if let Ok(s) = GameState::new(p, e) {
            states.push(s);
        }
    }
    Ok(states)
}

fn central_difference(x: [f64; 4], mut f: impl FnMut([f64; 4]) -> Option<f64>) -> Option<[f64; 4]> {
    let mut g = [0.0; 4];
    for i in 0..4 {
        let (mut a, mut b) = (x, x);
        a[i] += FD_STEP;
        b[i] -= FD_STEP;
        g[i] = (f(a)? - f(b)?) / (2.0 * FD_STEP);
    }
    Some(g)
}

fn max_abs_diff(a: [f64; 4], b: [f64; 4]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check(game: &Game, index: usize, s: &GameStateD) -> Check {
    let (t, r, cfg) = (&game.target, &game.ratio, &game.solver);
    let mut out = Check::default();
    let b = match barrier_value(s, t, r) {
        Ok(b) => b,
        Err(e) => {
            out.errors.push(format!("sample {index}: barrier: {e}"));
            return out;
        }
    };
    let space = if b > 0.0 {
        Space::Capture
    } else {
        Space::Escape
    };
    out.space = Some(space);
    let err = |what: &str, e: tdg_core::GameError| format!("sample {index}: {what}: {e}");

    match space {
        Space::Capture => match hji_residual_capture(s, t, r) {
            Ok(h) => out.hji = Some(h.abs() / r.pursuer_speed()),
            Err(e) => out.errors.push(err("capture HJI", e)),
        },
        Space::Escape if b < -1e-9 => match hji_residual_escape(s, t, r, cfg) {
            Ok(h) => out.hji = Some(h.abs() / r.pursuer_speed()),
            Err(e) => out.errors.push(err("escape HJI", e)),
        },
        Space::Escape => {}
    }

    if b.abs() >= BARRIER_MARGIN {
        match space {
            Space::Capture => {
                let fd = central_difference(s.to_array(), |x| {
                    value_capture(&GameState::from_array(x), t, r).ok()
                });
                match (grad_value_capture(s, t, r), fd) {
                    (Ok(g), Some(fd)) => out.capture_grad = Some(max_abs_diff(g, fd)),
                    (Err(e), _) => out.errors.push(err("capture gradient", e)),
                    (_, None) => {}
                }
            }
            Space::Escape => match (
                solve_escape_point(s, t, r, cfg),
                grad_value_escape(s, t, r, cfg),
            ) {
                (Ok(sol), Ok(g)) => {
                    let mut smooth = true;
                    let fd = central_difference(s.to_array(), |x| {
                        let moved =
                            solve_escape_point(&GameState::from_array(x), t, r, cfg).ok()?;
                        smooth &= (moved.escape_point - sol.escape_point).norm() <= SMOOTH_MOVE;
                        Some(moved.value)
                    });
                    match fd {
                        Some(fd) if smooth => out.escape_grad = Some(max_abs_diff(g, fd)),
                        _ => out.nonsmooth = true,
                    }
                }
                (Err(e), _) | (_, Err(e)) => out.errors.push(err("escape gradient", e)),
            },
        }

        let predicted = space;
        out.sim = Some(match tdg_core::run(s, t, r, &game.sim) {
            Ok(rec) => match rec.outcome {
                o if o.space() == Some(predicted) => Ok(()),
                Outcome::Timeout { time } => {
                    out.timeout = true;
                    Err(format!(
                        "sample {index}: predicted {predicted}, timed out at t = {time}"
                    ))
                }
                o => Err(format!(
                    "sample {index}: predicted {predicted}, simulated {:?}",
                    o.space()
                )),
            },
            Err(e) => Err(err("simulation", e)),
        });
    }

    if b <= -ORACLE_MARGIN {
        match solve_escape_point(s, t, r, cfg) {
            Ok(mut sol) => match certify_escape_solution(&mut sol, s, t, r, game.sweep.oracle_grid)
            {
                Ok(c) => {
                    out.oracle =
                        Some((c.objective_gap, c.position_gap / c.position_bound, c.passed))
                }
                Err(e) => out.errors.push(err("oracle", e)),
            },
            Err(e) => out.errors.push(err("escape solve", e)),
        }
    }
    out
}

fn stats(values: impl Iterator<Item = f64>) -> ResidualStats {
    let (mut count, mut max_abs, mut sum) = (0usize, 0.0f64, 0.0f64);
    for v in values {
        count += 1;
        max_abs = max_abs.max(v);
        sum += v;
    }
    ResidualStats {
        count,
        max_abs,
        mean_abs: if count > 0 { sum / count as f64 } else { 0.0 },
    }
}

pub fn verify(game: &Game, sample_count: usize, seed: u64) -> Result<VerifyReport> {
    if sample_count == 0 {
        return Err(Failure::schema("--samples: must be positive").into());
    }
    let states = draw(game, sample_count, seed)?;
    let checks: Vec<Check> = states
        .par_iter()
        .enumerate()
        .map(|(i, s)| check(game, i, s))
        .collect();

    let near_barrier = states
        .iter()
        .zip(&checks)
        .filter(|(s, c)| {
            c.space.is_some()
                && barrier_value(s, &game.target, &game.ratio)
                    .is_ok_and(|b| b.abs() < BARRIER_MARGIN)
        })
        .count();
    let in_space = |sp: Space| checks.iter().filter(move |c| c.space == Some(sp));
    let hji = HjiStats {
        capture: stats(in_space(Space::Capture).filter_map(|c| c.hji)),
        escape: stats(in_space(Space::Escape).filter_map(|c| c.hji)),
    };
    let capture_grads: Vec<f64> = checks.iter().filter_map(|c| c.capture_grad).collect();
    let escape_grads: Vec<f64> = checks.iter().filter_map(|c| c.escape_grad).collect();
    let gradient = GradientStats {
        step: FD_STEP,
        capture_checked: capture_grads.len(),
        capture_max_error: capture_grads.iter().copied().fold(0.0, f64::max),
        escape_checked: escape_grads.len(),
        escape_max_error: escape_grads.iter().copied().fold(0.0, f64::max),
        escape_nonsmooth_skipped: checks.iter().filter(|c| c.nonsmooth).count(),
    };
    let oracles: Vec<_> = checks.iter().filter_map(|c| c.oracle).collect();
    let oracle = OracleStats {
        grid: game.sweep.oracle_grid,
        checked: oracles.len(),
        worst_objective_gap: oracles.iter().map(|o| o.0.abs()).fold(0.0, f64::max),
        worst_position_ratio: oracles.iter().map(|o| o.1).fold(0.0, f64::max),
        disagreements: oracles.iter().filter(|o| !o.2).count(),
    };
    let sims: Vec<_> = checks.iter().filter_map(|c| c.sim.as_ref()).collect();
    let mismatches: Vec<String> = sims
        .iter()
        .filter_map(|s| s.as_ref().err().cloned())
        .collect();
    let simulation = SimulationStats {
        evaluated: sims.len(),
        agree: sims.len() - mismatches.len(),
        timeouts: checks.iter().filter(|c| c.timeout).count(),
        mismatches: mismatches.iter().take(MAX_MISMATCHES).cloned().collect(),
    };
    let solver_errors: Vec<String> = checks
        .iter()
        .flat_map(|c| c.errors.iter().cloned())
        .collect();

    let mut violations = Vec::new();
    if hji.capture.max_abs > HJI_CAPTURE {
        violations.push(format!(
            "capture HJI residual {:e} exceeds {HJI_CAPTURE:e}",
            hji.capture.max_abs
        ));
    }
    if hji.escape.max_abs > HJI_ESCAPE {
        violations.push(format!(
            "escape HJI residual {:e} exceeds {HJI_ESCAPE:e}",
            hji.escape.max_abs
        ));
    }
    if gradient.capture_max_error > GRADIENT_CAPTURE {
        violations.push(format!(
            "capture gradient error {:e} exceeds {GRADIENT_CAPTURE:e}",
            gradient.capture_max_error
        ));
    }
    if gradient.escape_max_error > GRADIENT_ESCAPE {
        violations.push(format!(
            "escape gradient error {:e} exceeds {GRADIENT_ESCAPE:e}",
            gradient.escape_max_error
        ));
    }
    if oracle.disagreements > 0 {
        violations.push(format!(
            "{} escape solutions disagree with the grid oracle",
            oracle.disagreements
        ));
    }
    if simulation.agree < simulation.evaluated {
        violations.push(format!(
            "{} of {} simulations disagree with the classification",
            simulation.evaluated - simulation.agree,
            simulation.evaluated
        ));
    }
    if !solver_errors.is_empty() {
        violations.push(format!("{} solver errors", solver_errors.len()));
    }

    Ok(VerifyReport {
        command: "verify".into(),
        seed,
        sample_count,
        box_min: xy(game.sweep.min),
        box_max: xy(game.sweep.max),
        capture_samples: in_space(Space::Capture).count(),
        escape_samples: in_space(Space::Escape).count(),
        near_barrier_samples: near_barrier,
        hji,
        gradient,
        oracle,
        simulation,
        solver_errors,
        thresholds: Thresholds {
            hji_capture: HJI_CAPTURE,
            hji_escape: HJI_ESCAPE,
            gradient_capture: GRADIENT_CAPTURE,
            gradient_escape: GRADIENT_ESCAPE,
            oracle_objective: ORACLE_OBJECTIVE_TOLERANCE,
            barrier_margin: BARRIER_MARGIN,
        },
        passed: violations.is_empty(),
        violations,
    })
}
