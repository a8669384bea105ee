//! The `solve` command: continuity path with per-step persistence.

use std::fs;

use toricsol_core::ma::{
    cp2_exact_potential, r_sensitivity, solve_at_t, verify_solution, BoundaryMode, ContinuityMarch, ContinuitySchedule,
    ContinuityState, Grid, MaError, MaProblem, NewtonOptions,
};
use toricsol_core::DualPolytope;

use crate::args::{Fields, SolveArgs};
use crate::commands::{open, soliton_section};
use crate::error::{CliError, Result};
use crate::output::{self, short, Checkpoint, Fingerprint};
use crate::report::{OracleOut, PathRow, RSensitivityOut, SolveSection, Verification};

/// Quadrature tolerance for `∫ e^{-φ⁰}` and the soliton normalization.
const MASS_TOL: f64 = 1e-12;
/// Stalled solves below this residual are at the rounding floor.
const ROUNDING_FLOOR: f64 = 1e-5;
const CP2_DUAL: [[f64; 2]; 3] = [[-1.0, -1.0], [-1.0, 2.0], [2.0, -1.0]];

fn invalid(e: MaError) -> CliError {
    CliError::Invalid(e.to_string())
}

fn path_row(problem: &MaProblem, s: &ContinuityState) -> PathRow {
    let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
    for (p, q) in s.phi.iter().zip(&problem.phi0) {
        sup = sup.max(p - q);
        inf = inf.min(p - q);
    }
    PathRow {
        t: s.t,
        m_t: s.m_t,
        x_t: s.x_t,
        sup_phi_minus_phi0: sup,
        inf_phi_minus_phi0: inf,
        newton_iters: s.newton_iters,
        residual_norm: s.residual_norm,
    }
}

fn bounds(path: &[PathRow]) -> [f64; 4] {
    path.iter().fold([0.0; 4], |b, r| {
        [
            b[0].max(r.m_t.abs()),
            b[1].max(r.x_t[0].hypot(r.x_t[1])),
            b[2].max(r.sup_phi_minus_phi0),
            b[3].max(-r.inf_phi_minus_phi0),
        ]
    })
}

fn is_cp2(p: &DualPolytope) -> bool {
    let mut v = p.vertices_f64();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite vertices"));
    v.len() == 3 && v.iter().zip(CP2_DUAL).all(|(a, b)| a[0] == b[0] && a[1] == b[1])
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn oracle(problem: &MaProblem, state: &ContinuityState, opts: &NewtonOptions) -> Result<OracleOut> {
    let exact = problem.grid.sample(cp2_exact_potential);
    let shifted: Vec<f64> = exact.iter().map(|v| v - problem.c).collect();
    let gold_problem = MaProblem::cp2_oracle(problem.grid);
    let (gold, stalled) = match solve_at_t(&gold_problem, 1.0, &gold_problem.boundary, opts) {
        Ok(s) => (s, false),
        Err(MaError::Stagnated { best, residual, .. }) if residual < ROUNDING_FLOOR => (*best, true),
        Err(e) => return Err(CliError::NotConverged(format!("oracle solve: {e}"))),
    };
    Ok(OracleOut {
        path_sup_error: sup_diff(&state.phi, &shifted),
        gold_sup_error: sup_diff(&gold.phi, &exact),
        gold_residual: gold.residual_norm,
        gold_newton_iters: gold.newton_iters,
        gold_stalled: stalled,
    })
}

fn verification(problem: &MaProblem, state: &ContinuityState, tol: f64) -> Verification {
    let v = verify_solution(problem, state, tol);
    Verification {
        residual_norm: v.residual_norm,
        residual_ok: v.residual_ok,
        min_det: v.min_det,
        convex: v.convex,
        containment_margin: v.containment_margin,
        contained: v.contained,
        box_mass: v.box_mass,
        target_mass: v.target_mass,
        beta_relative_error: v.beta_relative_error,
        normalization_shift: v.normalization_shift,
    }
}

pub fn print_summary(s: &SolveSection) {
    println!(
        "continuity path on [-{0}, {0}]^2, {1}x{1} nodes, h = {2}, boundary {3}",
        short(s.half_width),
        s.resolution,
        short(s.spacing),
        s.boundary
    );
    println!(
        "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6} {:>12}",
        "t", "m_t", "x_t1", "x_t2", "sup", "inf", "iters", "residual"
    );
    for r in &s.path {
        println!(
            "{:>8} {:>12} {:>12} {:>12} {:>12} {:>12} {:>6} {:>12}",
            short(r.t),
            short(r.m_t),
            short(r.x_t[0]),
            short(r.x_t[1]),
            short(r.sup_phi_minus_phi0),
            short(r.inf_phi_minus_phi0),
            r.newton_iters,
            short(r.residual_norm)
        );
    }
    println!(
        "bounds along the path: sup|m_t| {}, sup|x_t| {}, sup(phi - phi0) {}, sup(phi0 - phi) {}",
        short(s.bounds[0]),
        short(s.bounds[1]),
        short(s.bounds[2]),
        short(s.bounds[3])
    );
    match (&s.failure, s.completed) {
        (Some(f), _) => println!("path failed: {f}"),
        (None, false) => println!("path stopped early; continue with --resume"),
        (None, true) => println!("path reached t = 1"),
    }
    if let Some(v) = &s.verification {
        println!(
            "verification: residual {} ({}), convex {}, containment margin {}, box mass {}",
            short(v.residual_norm),
            if v.residual_ok { "ok" } else { "above tolerance" },
            v.convex,
            short(v.containment_margin),
            short(v.box_mass)
        );
        if let (Some(m), Some(rel)) = (v.target_mass, v.beta_relative_error) {
            println!("mass identity: target {}, relative error {}", short(m), short(rel));
        }
    }
    if let Some(r) = &s.r_sensitivity {
        match (&r.sup_difference, &r.error) {
            (Some(d), _) => println!(
                "R sensitivity: sup difference {} between R = {} and R = {}",
                short(*d),
                short(r.r_small),
                short(r.r_large)
            ),
            (None, Some(e)) => println!("R sensitivity failed: {e}"),
            _ => {}
        }
    }
    if let Some(o) = &s.oracle {
        println!(
            "oracle: path error {}, exact-data error {} (residual {}{})",
            short(o.path_sup_error),
            short(o.gold_sup_error),
            short(o.gold_residual),
            if o.gold_stalled {
                ", stalled at rounding floor"
            } else {
                ""
            }
        );
    }
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    let (doc, q, mut report) = open("solve", &args.common, args)?;
    if doc.dim != 2 {
        return Err(CliError::Invalid(format!(
            "solve is two-dimensional, got dimension {}",
            doc.dim
        )));
    }
    let p = q.dual();
    if args.oracle && !is_cp2(&p) {
        return Err(CliError::Invalid("--oracle needs the CP^2 polytope".into()));
    }
    let grid = Grid::new(args.r, args.resolution).map_err(invalid)?;
    let schedule = ContinuitySchedule::new(args.t_start, args.t_step).map_err(invalid)?;
    let mode: BoundaryMode = args.boundary.into();
    let boundary_name = serde_json::to_value(args.boundary)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    let opts = NewtonOptions {
        tol: args.tol,
        ..Default::default()
    };
    let out = args.common.out.as_path();
    let fingerprint = Fingerprint {
        dim: doc.dim,
        vertices: doc.vertices.clone(),
        half_width: args.r,
        resolution: args.resolution,
        t_start: args.t_start,
        t_step: args.t_step,
        tol: args.tol,
        boundary: boundary_name.clone(),
    };

    let soliton = match report.soliton.clone() {
        Some(s) if s.converged => s,
        _ => soliton_section(&p, 1e-10)?,
    };
    if !soliton.converged {
        return Err(CliError::NotConverged("soliton vector did not converge".into()));
    }
    let problem = MaProblem::from_polytope(&p, grid, &soliton.c, mode, MASS_TOL)
        .map_err(|e| CliError::NotConverged(e.to_string()))?;
    report.soliton = Some(soliton);

    let mut path: Vec<PathRow> = Vec::new();
    let mut previous_file: Option<String> = None;
    let mut march = if args.resume {
        let cp = Checkpoint::load(out)?;
        if cp.fingerprint != fingerprint {
            return Err(CliError::Invalid(
                "checkpoint was written with different input or settings".into(),
            ));
        }
        let phi = output::read_phi(&out.join(&cp.fields_file), grid.len())?;
        path = cp.path;
        previous_file = Some(cp.fields_file);
        let state = ContinuityState::new(&problem, cp.t, phi, cp.residual_norm, cp.newton_iters);
        ContinuityMarch::resume(&problem, &schedule, opts, state)
    } else {
        ContinuityMarch::new(&problem, &schedule, opts)
    };

    let mut section = SolveSection {
        half_width: grid.half_width(),
        resolution: grid.resolution(),
        spacing: grid.spacing(),
        boundary: boundary_name,
        c: problem.c,
        c_vec: problem.c_vec,
        tol: args.tol,
        schedule: schedule.t_values.clone(),
        path: Vec::new(),
        completed: false,
        failure: None,
        bounds: [0.0; 4],
        verification: None,
        r_sensitivity: None,
        oracle: None,
    };
    let mut steps = 0;
    let mut failure = None;
    while !march.is_done() {
        if args.max_steps.is_some_and(|m| steps >= m) {
            break;
        }
        match march.advance() {
            Some(Ok(state)) => {
                steps += 1;
                let file = output::write_fields(out, &problem, &state)?;
                let name = file
                    .file_name()
                    .expect("field file name")
                    .to_string_lossy()
                    .into_owned();
                if args.fields == Fields::Final {
                    if let Some(old) = previous_file.replace(name.clone()) {
                        if old != name {
                            let old_path = out.join(old);
                            fs::remove_file(&old_path).map_err(|e| CliError::io(&old_path, e))?;
                        }
                    }
                }
                path.push(path_row(&problem, &state));
                output::write_path(out, &path)?;
                Checkpoint {
                    fingerprint: fingerprint.clone(),
                    t: state.t,
                    fields_file: name,
                    residual_norm: state.residual_norm,
                    newton_iters: state.newton_iters,
                    path: path.clone(),
                }
                .save(out)?;
            }
            Some(Err(e)) => {
                failure = Some(e.to_string());
                break;
            }
            None => break,
        }
    }

    section.path = path.clone();
    section.bounds = bounds(&path);
    section.failure = failure.clone();
    section.completed = failure.is_none() && march.is_done();
    if section.completed {
        let state = march.current().expect("a completed march has a state").clone();
        section.verification = Some(verification(&problem, &state, args.tol));
        if !args.no_r_sensitivity {
            let r = r_sensitivity(&p, &problem, &state, args.r_factor, mode, &schedule, &opts);
            section.r_sensitivity = Some(match r {
                Ok(r) => RSensitivityOut {
                    r_small: r.r_small,
                    r_large: r.r_large,
                    sup_difference: Some(r.sup_difference),
                    error: None,
                },
                Err(e) => RSensitivityOut {
                    r_small: grid.half_width(),
                    r_large: grid.half_width() * args.r_factor,
                    sup_difference: None,
                    error: Some(e.to_string()),
                },
            });
        }
        if args.oracle {
            section.oracle = Some(oracle(&problem, &state, &opts)?);
        }
    }
    print_summary(&section);
    report.solve = Some(section);
    report.save(out)?;
    match failure {
        Some(f) => Err(CliError::NotConverged(f)),
        None => Ok(()),
    }
}
