use std::path::Path;

use anyhow::Result;
use tdg_core::kind::MIN_RAY_COUNT;
use tdg_core::{
    barrier_value, capture_strategies, certify_escape_solution, escape_gradient,
    grad_value_capture, solve_escape_point, solve_escape_point_best_effort, trace_barrier_curve,
    trace_barrier_rays, verify_meeting_point, ApolloniusDisk, GameState, Outcome, Space,
    SpeedRatioD, Vector2,
};

use crate::exit::{Code, Failure};
use crate::output::{csv_row, emit, target_outline, to_json, write_file, Svg};
use crate::report::*;
use crate::scenario::Game;

/// Meeting-point and HJI tolerances used by `solve --verify` on capture states.
const MEETING_TOLERANCE: f64 = 1e-10;
const HJI_CAPTURE_TOLERANCE: f64 = 1e-9;
const OUTLINE_POINTS: usize = 256;
const SIM_BARRIER_RAYS: usize = 256;

/// `grad V · f(X, uP, uE)`.
pub fn hamiltonian(
    grad: [f64; 4],
    ratio: &SpeedRatioD,
    u_pursuer: Vector2<f64>,
    u_evader: Vector2<f64>,
) -> f64 {
    ratio.pursuer_speed() * (grad[0] * u_pursuer.x + grad[1] * u_pursuer.y)
        + ratio.evader_speed() * (grad[2] * u_evader.x + grad[3] * u_evader.y)
}

pub fn classify(game: &Game) -> Result<ClassifyReport> {
    let state = game.state()?;
    let c = tdg_core::classify(&state, &game.target, &game.ratio)?;
    let disk = ApolloniusDisk::new(&state, &game.ratio)?;
    let projection = game.target.project(disk.center)?;
    Ok(ClassifyReport {
        command: "classify".into(),
        space: space_name(c.space),
        barrier_value: c.barrier_value,
        disk: Disk::from(&disk),
        projection: xy(projection),
        pursuer_inside_target: c.pursuer_inside_target,
        evader_inside_target: game.target.contains(game.evader),
    })
}

pub fn barrier(game: &Game, rays: usize, out: Option<&Path>) -> Result<()> {
    if rays < MIN_RAY_COUNT {
        return Err(Failure::schema(format!(
            "--rays: must be at least {MIN_RAY_COUNT}, got {rays}"
        ))
        .into());
    }
    let traced = trace_barrier_rays(game.pursuer, &game.target, &game.ratio, rays)?;
    let failed: Vec<_> = traced
        .iter()
        .enumerate()
        .filter(|(_, r)| r.point.is_none())
        .collect();
    if !failed.is_empty() {
        eprintln!("tdg: traced {}/{} rays", rays - failed.len(), rays);
        for (i, r) in &failed {
            eprintln!(
                "tdg: ray {i} (theta {:.6} rad): no sign change of the barrier function",
                r.angle
            );
        }
        return Err(Failure::new(
            Code::Tracing,
            format!(
                "{} of {rays} rays failed to bracket the barrier curve",
                failed.len()
            ),
        )
        .into());
    }

    let mut csv = String::from("theta_rad,x,y,barrier_residual\n");
    let mut curve = Vec::with_capacity(rays);
    for r in &traced {
        let z = r.point.expect("checked above");
        let b = barrier_value(&GameState::new(game.pursuer, z)?, &game.target, &game.ratio)?;
        csv_row(&mut csv, &[r.angle, z.x, z.y, b]);
        curve.push(z);
    }
    emit(out, &csv)?;

    if let Some(out) = out {
        let outline = target_outline(&game.target, OUTLINE_POINTS);
        let mut svg = Svg::new(curve.iter().chain(&outline).copied().chain([game.pursuer]));
        svg.path("target", &outline, true, "black", "#d8d8d8");
        svg.path("barrier", &curve, true, "red", "none");
        svg.marker("pursuer", game.pursuer, "blue");
        write_file(&out.with_extension("svg"), &svg.finish())?;
    }
    Ok(())
}

pub struct Solved {
    pub report: SolveReport,
    /// Set when `--verify` found a violated check.
    pub violation: Option<String>,
}

pub fn solve(
    game: &Game,
    verify: bool,
    allow_best_effort: bool,
    oracle_grid: usize,
) -> Result<Solved> {
    let state = game.state()?;
    let c = tdg_core::classify(&state, &game.target, &game.ratio)?;
    let disk = ApolloniusDisk::new(&state, &game.ratio)?;
    let projection = game.target.project(disk.center)?;
    let mut report = SolveReport {
        command: "solve".into(),
        space: space_name(c.space),
        barrier_value: c.barrier_value,
        disk: Disk::from(&disk),
        projection: xy(projection),
        capture: None,
        escape: None,
    };
    let mut violation = None;

    match c.space {
        Space::Capture => {
            let sol = capture_strategies(&state, &game.target, &game.ratio)?;
            let gradient = grad_value_capture(&state, &game.target, &game.ratio)?;
            let hji = hamiltonian(gradient, &game.ratio, sol.u_pursuer, sol.u_evader);
            let meeting = verify_meeting_point(&state, &game.ratio, sol.capture_point);
            let verified = verify.then(|| {
                let ok = meeting.abs() <= MEETING_TOLERANCE * (1.0 + state.separation())
                    && hji.abs() / game.ratio.pursuer_speed() <= HJI_CAPTURE_TOLERANCE;
                if !ok {
                    violation = Some(format!("capture solution check failed: meeting residual {meeting:e}, HJI residual {hji:e}"));
                }
                ok
            });
            report.capture = Some(CaptureReport {
                capture_point: xy(sol.capture_point),
                u_pursuer: uv(sol.u_pursuer),
                u_evader: uv(sol.u_evader),
                value: sol.value,
                theta: sol.theta,
                phi: sol.phi,
                gradient,
                hji_residual: hji,
                meeting_residual: meeting,
                verified,
            });
        }
        Space::Escape => {
            let mut sol = if allow_best_effort {
                solve_escape_point_best_effort(&state, &game.target, &game.ratio, &game.solver)?
            } else {
                solve_escape_point(&state, &game.target, &game.ratio, &game.solver)?
            };
            if !sol.converged {
                eprintln!("tdg: escape solver did not converge; reporting the best iterate");
            }
            let oracle = if verify {
                let check = certify_escape_solution(
                    &mut sol,
                    &state,
                    &game.target,
                    &game.ratio,
                    oracle_grid,
                )?;
                if !check.passed {
                    violation = Some(format!(
                        "grid oracle disagrees with the escape solver: objective gap {:e}, position gap {:e} (bound {:e})",
                        check.objective_gap, check.position_gap, check.position_bound
                    ));
                }
                Some(OracleReport::new(oracle_grid, &check))
            } else {
                None
            };
            let gradient = (!sol.degenerate).then(|| escape_gradient(&sol, game.ratio.gamma()));
            report.escape = Some(EscapeReport {
                escape_point: xy(sol.escape_point),
                u_pursuer: uv(sol.u_pursuer),
                u_evader: uv(sol.u_evader),
                value: sol.value,
                psi: sol.psi,
                varphi: sol.varphi,
                gradient,
                hji_residual: gradient
                    .map(|g| hamiltonian(g, &game.ratio, sol.u_pursuer, sol.u_evader)),
                solver: SolverDiagnostics {
                    iterations: sol.solver_iterations,
                    converged: sol.converged,
                    degenerate: sol.degenerate,
                    best_effort: !sol.converged,
                    objective_trace: sol.objective_trace.clone(),
                },
                oracle,
            });
        }
    }
    Ok(Solved { report, violation })
}

pub fn simulate(game: &Game, out: &Path) -> Result<String> {
    // The outcome and figure are written next to the trajectory.
    if matches!(
        out.extension().and_then(|e| e.to_str()),
        Some("json" | "svg")
    ) {
        return Err(
            Failure::schema("--out: the trajectory path must not end in .json or .svg").into(),
        );
    }
    let state = game.state()?;
    let rec = tdg_core::run(&state, &game.target, &game.ratio, &game.sim)?;
    for w in &rec.warnings {
        eprintln!("tdg: warning: {w}");
    }

    let mut csv = String::from("t,xP,yP,xE,yE,uPx,uPy,uEx,uEy\n");
    for k in 0..rec.times.len() {
        let (p, e, u) = (rec.pursuer_path[k], rec.evader_path[k], rec.controls[k]);
        csv_row(
            &mut csv,
            &[
                rec.times[k],
                p.x,
                p.y,
                e.x,
                e.y,
                u.pursuer.x,
                u.pursuer.y,
                u.evader.x,
                u.evader.y,
            ],
        );
    }
    write_file(out, &csv)?;

    let (outcome, point, separation, target_distance) = match rec.outcome {
        Outcome::Captured {
            point,
            separation,
            target_distance,
            ..
        } => (
            "captured",
            Some(xy(point)),
            Some(separation),
            Some(target_distance),
        ),
        Outcome::Escaped {
            point, separation, ..
        } => ("escaped", Some(xy(point)), Some(separation), None),
        Outcome::Timeout { .. } => ("timeout", None, None, None),
    };
    let report = OutcomeReport {
        command: "simulate".into(),
        outcome: outcome.into(),
        time: rec.outcome.time(),
        steps: rec.times.len().saturating_sub(1),
        point,
        separation,
        target_distance,
        value: rec.outcome.signed_payoff().map(f64::abs),
        initial_space: space_name(rec.initial_classification.space),
        barrier_value: rec.initial_classification.barrier_value,
        predicted_value: rec.predicted_value,
        unconverged_replans: rec.unconverged_replans,
        warnings: rec.warnings.clone(),
    };
    let json = to_json(&report)?;
    write_file(&out.with_extension("json"), &json)?;

    let outline = target_outline(&game.target, OUTLINE_POINTS);
    let disk = ApolloniusDisk::new(&state, &game.ratio)?;
    let curve = match trace_barrier_curve(game.pursuer, &game.target, &game.ratio, SIM_BARRIER_RAYS)
    {
        Ok(c) => c.ray_points().to_vec(),
        Err(e) => {
            eprintln!("tdg: barrier curve left out of the figure: {e}");
            Vec::new()
        }
    };
    let disk_box = [
        disk.center + Vector2::new(disk.radius, disk.radius),
        disk.center - Vector2::new(disk.radius, disk.radius),
    ];
    let mut svg = Svg::new(
        outline
            .iter()
            .chain(&curve)
            .chain(&rec.pursuer_path)
            .chain(&rec.evader_path)
            .copied()
            .chain(disk_box),
    );
    svg.path("target", &outline, true, "black", "#d8d8d8");
    svg.path("barrier", &curve, true, "red", "none");
    svg.circle("apollonius", disk.center, disk.radius, "green", "none");
    svg.path("pursuer-path", &rec.pursuer_path, false, "blue", "none");
    svg.path("evader-path", &rec.evader_path, false, "orange", "none");
    svg.marker("pursuer", game.pursuer, "blue");
    svg.marker("evader", game.evader, "orange");
    if let Some(p) = point {
        svg.marker("terminal", tdg_core::Point2::new(p[0], p[1]), "black");
    }
    write_file(&out.with_extension("svg"), &svg.finish())?;
    Ok(json)
}
