//! Newton solves at fixed `t`, the march in `t`, and post-solve checks.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use super::operator::{add_interior, det_residual, is_convex, jacobian, log_residual, Form, Stencil};
use super::{BoundaryMode, ContinuityState, Grid, MaError, MaProblem};
use crate::math::{exp, ln, max_abs};
use crate::polytope::DualPolytope;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Sup-norm tolerance on the log-form residual.
    pub tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    /// Halvings of the `t` increment allowed per scheduled step.
    pub max_t_halvings: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_newton: 60,
            max_halvings: 30,
            max_t_halvings: 5,
        }
    }
}

fn with_boundary(problem: &MaProblem, t: f64, initial: &[f64]) -> Vec<f64> {
    let g = &problem.grid;
    (0..g.len())
        .map(|k| {
            if g.is_boundary(k) {
                problem.boundary[k] + problem.boundary_slope[k] / t
            } else {
                initial[k]
            }
        })
        .collect()
}

fn first_breach(grid: &Grid, phi: &[f64]) -> MaError {
    let n = grid.resolution();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            if !Stencil::at(grid, phi, i, j).is_convex() {
                return MaError::ConvexityBreach(i, j);
            }
        }
    }
    MaError::ConvexityBreach(0, 0)
}

/// One Newton solve at fixed `t` from `initial` (its boundary values are
/// replaced by the Dirichlet data). A non-convex start is first pushed into
/// the convex cone by Newton steps on `det · e^{E} - 1`.
pub fn solve_at_t(
    problem: &MaProblem,
    t: f64,
    initial: &[f64],
    opts: &NewtonOptions,
) -> Result<ContinuityState, MaError> {
    let grid = &problem.grid;
    let mut phi = with_boundary(problem, t, initial);
    let mut iters = 0;

    if !is_convex(grid, &phi) {
        loop {
            if iters == opts.max_newton {
                return Err(first_breach(grid, &phi));
            }
            let r = det_residual(problem, t, &phi);
            let norm = max_abs(&r);
            let lu = jacobian(problem, t, &phi, Form::Det).factor()?;
            let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
            lu.solve(&mut delta);
            let mut lambda = 1.0;
            let mut next = None;
            for _ in 0..=opts.max_halvings {
                let trial = add_interior(grid, &phi, &delta, lambda);
                if max_abs(&det_residual(problem, t, &trial)) <= (1.0 - 1e-4 * lambda) * norm {
                    next = Some(trial);
                    break;
                }
                lambda *= 0.5;
            }
            let Some(next) = next else {
                return Err(first_breach(grid, &phi));
            };
            phi = next;
            iters += 1;
            if is_convex(grid, &phi) {
                break;
            }
        }
    }

    let mut r = log_residual(problem, t, &phi)?;
    let mut norm = max_abs(&r);
    while !(norm < opts.tol) {
        if iters >= opts.max_newton {
            return Err(MaError::NewtonCap {
                t,
                iterations: iters,
                residual: norm,
            });
        }
        let lu = jacobian(problem, t, &phi, Form::Log).factor()?;
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve(&mut delta);
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = add_interior(grid, &phi, &delta, lambda);
            // a convexity breach shows up as an error here and forces a halving
            if let Ok(rt) = log_residual(problem, t, &trial) {
                let nt = max_abs(&rt);
                if nt <= (1.0 - 1e-4 * lambda) * norm {
                    accepted = Some((trial, rt, nt));
                    break;
                }
            }
            lambda *= 0.5;
        }
        let Some((trial, rt, nt)) = accepted else {
            return Err(MaError::Stagnated {
                t,
                residual: norm,
                best: Box::new(ContinuityState::new(problem, t, phi, norm, iters)),
            });
        };
        phi = trial;
        r = rt;
        norm = nt;
        iters += 1;
    }
    Ok(ContinuityState::new(problem, t, phi, norm, iters))
}

/// Increasing `t` values ending exactly at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuitySchedule {
    pub t_values: Vec<f64>,
}

impl ContinuitySchedule {
    pub fn new(t_start: f64, t_step: f64) -> Result<Self, MaError> {
        if !(t_start > 0.0 && t_start <= 1.0) {
            return Err(MaError::BadGrid(format!("t_start must lie in (0, 1], got {t_start}")));
        }
        if !(t_step > 0.0) {
            return Err(MaError::BadGrid(format!("t_step must be positive, got {t_step}")));
        }
        let mut t_values = Vec::new();
        let mut k = 0;
        loop {
            let t = t_start + k as f64 * t_step;
            if t >= 1.0 - 1e-9 {
                break;
            }
            t_values.push(t);
            k += 1;
        }
        t_values.push(1.0);
        Ok(Self { t_values })
    }
}

impl Default for ContinuitySchedule {
    fn default() -> Self {
        Self::new(0.3, 0.05).expect("default schedule is valid")
    }
}

/// Steps through a schedule one scheduled `t` at a time, so a caller can
/// persist each state.
#[derive(Debug, Clone)]
pub struct ContinuityMarch<'a> {
    problem: &'a MaProblem,
    schedule: &'a ContinuitySchedule,
    opts: NewtonOptions,
    next: usize,
    current: Option<ContinuityState>,
    /// Solves attempted, including rejected ones.
    pub attempts: usize,
}

impl<'a> ContinuityMarch<'a> {
    pub fn new(problem: &'a MaProblem, schedule: &'a ContinuitySchedule, opts: NewtonOptions) -> Self {
        Self {
            problem,
            schedule,
            opts,
            next: 0,
            current: None,
            attempts: 0,
        }
    }

    /// Continues after `state`, skipping scheduled values `≤ state.t`.
    pub fn resume(
        problem: &'a MaProblem,
        schedule: &'a ContinuitySchedule,
        opts: NewtonOptions,
        state: ContinuityState,
    ) -> Self {
        let next = schedule.t_values.iter().take_while(|&&t| t <= state.t + 1e-12).count();
        Self {
            problem,
            schedule,
            opts,
            next,
            current: Some(state),
            attempts: 0,
        }
    }

    pub fn current(&self) -> Option<&ContinuityState> {
        self.current.as_ref()
    }

    pub fn is_done(&self) -> bool {
        self.next >= self.schedule.t_values.len()
    }

    /// Solves at the next scheduled `t`, halving the increment on failure.
    pub fn advance(&mut self) -> Option<Result<ContinuityState, MaError>> {
        let target = *self.schedule.t_values.get(self.next)?;
        let fail = |current: &Option<ContinuityState>, t: f64, e: MaError| MaError::PathFailed {
            failing_t: t,
            last_good: current.clone().map(Box::new),
            source: Box::new(e),
        };
        let Some(start) = self.current.clone() else {
            self.attempts += 1;
            return Some(
                match solve_at_t(self.problem, target, &self.problem.boundary_at(target), &self.opts) {
                    Ok(s) => {
                        self.next += 1;
                        self.current = Some(s.clone());
                        Ok(s)
                    }
                    Err(e) => Err(fail(&self.current, target, e)),
                },
            );
        };
        let mut cur = start;
        let mut dt = target - cur.t;
        let mut halvings = 0;
        loop {
            let t = if cur.t + dt >= target - 1e-12 {
                target
            } else {
                cur.t + dt
            };
            self.attempts += 1;
            match solve_at_t(self.problem, t, &cur.phi, &self.opts) {
                Ok(s) => {
                    cur = s;
                    if t == target {
                        self.next += 1;
                        self.current = Some(cur.clone());
                        return Some(Ok(cur));
                    }
                }
                Err(e) => {
                    if halvings == self.opts.max_t_halvings {
                        self.current = Some(cur.clone());
                        return Some(Err(fail(&self.current, t, e)));
                    }
                    halvings += 1;
                    dt *= 0.5;
                }
            }
        }
    }
}

/// Marches the whole schedule from `φ⁰`.
pub fn continuity_solve(
    problem: &MaProblem,
    schedule: &ContinuitySchedule,
    opts: &NewtonOptions,
) -> Result<Vec<ContinuityState>, MaError> {
    let mut march = ContinuityMarch::new(problem, schedule, *opts);
    let mut path = Vec::new();
    while let Some(step) = march.advance() {
        path.push(step?);
    }
    Ok(path)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub residual_norm: f64,
    pub residual_ok: bool,
    /// Smallest discrete determinant over interior nodes.
    pub min_det: f64,
    pub convex: bool,
    /// `min_nodes min_i lᵢ(D_hφ)`.
    pub containment_margin: f64,
    /// Margin with `h²` slack for the consistency error of `D_h`.
    pub contained: bool,
    /// `∫_box e^{-w_t}` by the trapezoidal rule.
    pub box_mass: f64,
    pub target_mass: Option<f64>,
    pub beta_relative_error: Option<f64>,
    pub beta_ok: Option<bool>,
    /// `(1/t) log(∫_box e^{-w} / ∫ e^{-φ⁰})`: the constant that would restore
    /// the identity on the truncated box.
    pub normalization_shift: Option<f64>,
}

/// Checks a state against the equation and the structural facts it should
/// inherit: convexity, gradient image inside `P̄`, and the mass identity.
pub fn verify_solution(problem: &MaProblem, state: &ContinuityState, tol: f64) -> VerificationReport {
    let g = &problem.grid;
    let n = g.resolution();
    let h = g.spacing();
    let residual_norm = log_residual(problem, state.t, &state.phi)
        .map(|r| max_abs(&r))
        .unwrap_or(f64::INFINITY);
    let mut min_det = f64::INFINITY;
    let mut convex = true;
    let mut margin = f64::INFINITY;
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let st = Stencil::at(g, &state.phi, i, j);
            min_det = min_det.min(st.det());
            convex &= st.is_convex();
            for nrm in &problem.normals {
                margin = margin.min(nrm[0] * st.x + nrm[1] * st.y + 1.0);
            }
        }
    }
    let w = problem.w_field(state.t, &state.phi);
    let mut box_mass = 0.0;
    for i in 0..n {
        for j in 0..n {
            let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            box_mass += wi * wj * exp(-w[i * n + j]);
        }
    }
    box_mass *= h * h;
    let rel = problem.target_mass.map(|m| (box_mass / m - 1.0).abs());
    VerificationReport {
        residual_norm,
        residual_ok: residual_norm < tol,
        min_det,
        convex,
        containment_margin: margin,
        contained: problem.normals.is_empty() || margin >= -h * h,
        box_mass,
        target_mass: problem.target_mass,
        beta_relative_error: rel,
        beta_ok: rel.map(|r| r < 0.02),
        normalization_shift: problem.target_mass.map(|m| ln(box_mass / m) / state.t),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RSensitivity {
    pub r_small: f64,
    pub r_large: f64,
    /// Sup over the small box of the difference between the two solutions.
    pub sup_difference: f64,
    pub large: ContinuityState,
}

/// Re-solves on a box `factor` times larger with the same spacing, warm
/// started from `state`, and compares on the common nodes. Falls back to the
/// full path when the direct solve fails.
pub fn r_sensitivity(
    p: &DualPolytope,
    problem: &MaProblem,
    state: &ContinuityState,
    factor: f64,
    mode: BoundaryMode,
    schedule: &ContinuitySchedule,
    opts: &NewtonOptions,
) -> Result<RSensitivity, MaError> {
    let small = problem.grid;
    let h = small.spacing();
    let half = libm::round(factor * small.half_width() / h) as usize;
    let big = Grid::new(half as f64 * h, 2 * half + 1)?;
    let big_problem = problem.with_grid(p, big, mode)?;
    let shift = half - small.resolution() / 2;
    let n = small.resolution();
    let nb = big.resolution();
    let mut init = big_problem.boundary_at(state.t);
    for i in 0..n {
        for j in 0..n {
            init[(i + shift) * nb + (j + shift)] = state.phi[i * n + j];
        }
    }
    let large = match solve_at_t(&big_problem, state.t, &init, opts) {
        Ok(s) => s,
        Err(_) => {
            let sched = ContinuitySchedule {
                t_values: schedule.t_values.iter().copied().filter(|&t| t <= state.t).collect(),
            };
            continuity_solve(&big_problem, &sched, opts)?
                .pop()
                .ok_or_else(|| MaError::BadGrid(format!("empty schedule up to t = {}", state.t)))?
        }
    };
    let mut sup = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            sup = sup.max((large.phi[(i + shift) * nb + (j + shift)] - state.phi[i * n + j]).abs());
        }
    }
    Ok(RSensitivity {
        r_small: small.half_width(),
        r_large: big.half_width(),
        sup_difference: sup,
        large,
    })
}
