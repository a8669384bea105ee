//! The discrete operator: 9-point Hessian, central gradient, residuals and
//! their Jacobians in band form.

use alloc::vec;
use alloc::vec::Vec;

use super::{Grid, MaError, MaProblem};
use crate::banded::BandMatrix;
use crate::math::{exp, ln};

/// Second and first differences at one interior node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
    pub x: f64,
    pub y: f64,
}

impl Stencil {
    #[inline]
    pub fn at(grid: &Grid, phi: &[f64], i: usize, j: usize) -> Self {
        let n = grid.resolution();
        let h = grid.spacing();
        let k = i * n + j;
        let c = phi[k];
        let (e, w, no, s) = (phi[k + n], phi[k - n], phi[k + 1], phi[k - 1]);
        let (ne, nw, se, sw) = (phi[k + n + 1], phi[k - n + 1], phi[k + n - 1], phi[k - n - 1]);
        let h2 = h * h;
        Self {
            xx: (e - 2.0 * c + w) / h2,
            yy: (no - 2.0 * c + s) / h2,
            xy: (ne - se - nw + sw) / (4.0 * h2),
            x: (e - w) / (2.0 * h),
            y: (no - s) / (2.0 * h),
        }
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    #[inline]
    pub fn is_convex(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }
}

/// `E = c + tφ + (1-t)φ⁰ + ⟨c_vec, D_hφ⟩`, so the equation reads `det = e^{-E}`.
#[inline]
fn exponent(problem: &MaProblem, t: f64, phi: &[f64], k: usize, st: &Stencil) -> f64 {
    problem.c + t * phi[k] + (1.0 - t) * problem.phi0[k] + problem.c_vec[0] * st.x + problem.c_vec[1] * st.y
}

/// Log-form residual `log det D²_hφ + E` on interior nodes, in unknown order.
pub(crate) fn log_residual(problem: &MaProblem, t: f64, phi: &[f64]) -> Result<Vec<f64>, MaError> {
    let g = &problem.grid;
    let n = g.resolution();
    let mut out = Vec::with_capacity(g.m() * g.m());
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let st = Stencil::at(g, phi, i, j);
            if !st.is_convex() {
                return Err(MaError::ConvexityBreach(i, j));
            }
            out.push(ln(st.det()) + exponent(problem, t, phi, i * n + j, &st));
        }
    }
    Ok(out)
}

/// `det D²_hφ · e^{E} - 1` on interior nodes, defined for any field.
pub(crate) fn det_residual(problem: &MaProblem, t: f64, phi: &[f64]) -> Vec<f64> {
    let g = &problem.grid;
    let n = g.resolution();
    let mut out = Vec::with_capacity(g.m() * g.m());
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let st = Stencil::at(g, phi, i, j);
            out.push(st.det() * exp(exponent(problem, t, phi, i * n + j, &st)) - 1.0);
        }
    }
    out
}

/// Whether every interior node has a positive definite discrete Hessian.
pub(crate) fn is_convex(grid: &Grid, phi: &[f64]) -> bool {
    let n = grid.resolution();
    (1..n - 1).all(|i| (1..n - 1).all(|j| Stencil::at(grid, phi, i, j).is_convex()))
}

/// The residual on the full grid (zero on the boundary).
pub fn residual_field(problem: &MaProblem, t: f64, phi: &[f64]) -> Result<Vec<f64>, MaError> {
    let g = &problem.grid;
    let n = g.resolution();
    let r = log_residual(problem, t, phi)?;
    let mut out = vec![0.0; g.len()];
    let m = g.m();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            out[i * n + j] = r[(i - 1) * m + (j - 1)];
        }
    }
    Ok(out)
}

/// Which form of the equation to linearize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Form {
    /// `log det + E`
    Log,
    /// `det · e^{E} - 1`, defined whether or not the field is convex.
    Det,
}

/// Jacobian of the chosen residual with respect to the interior unknowns.
pub(crate) fn jacobian(problem: &MaProblem, t: f64, phi: &[f64], form: Form) -> BandMatrix {
    let g = &problem.grid;
    let n = g.resolution();
    let m = g.m();
    let h = g.spacing();
    let h2 = h * h;
    let mut a = BandMatrix::zeros(m * m, m + 1, m + 1);
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            let st = Stencil::at(g, phi, i, j);
            let row = (i - 1) * m + (j - 1);
            // weights of ∂φxx, ∂φyy, ∂φxy, and of the zeroth/first-order part
            let (wxx, wyy, wxy, lower) = match form {
                Form::Log => {
                    let det = st.det();
                    (st.yy / det, st.xx / det, -2.0 * st.xy / det, 1.0)
                }
                Form::Det => {
                    let scale = exp(exponent(problem, t, phi, i * n + j, &st));
                    let det = st.det();
                    (st.yy * scale, st.xx * scale, -2.0 * st.xy * scale, det * scale)
                }
            };
            let mut put = |di: isize, dj: isize, v: f64| {
                let (ii, jj) = ((i as isize + di) as usize, (j as isize + dj) as usize);
                if ii == 0 || jj == 0 || ii == n - 1 || jj == n - 1 || v == 0.0 {
                    return;
                }
                a.add(row, (ii - 1) * m + (jj - 1), v);
            };
            let cx = lower * problem.c_vec[0] / (2.0 * h);
            let cy = lower * problem.c_vec[1] / (2.0 * h);
            put(0, 0, -2.0 * (wxx + wyy) / h2 + lower * t);
            put(1, 0, wxx / h2 + cx);
            put(-1, 0, wxx / h2 - cx);
            put(0, 1, wyy / h2 + cy);
            put(0, -1, wyy / h2 - cy);
            let q = wxy / (4.0 * h2);
            put(1, 1, q);
            put(-1, -1, q);
            put(1, -1, -q);
            put(-1, 1, -q);
        }
    }
    a
}

/// Copies interior unknowns out of / into a full field.
pub(crate) fn add_interior(grid: &Grid, phi: &[f64], delta: &[f64], lambda: f64) -> Vec<f64> {
    let n = grid.resolution();
    let m = grid.m();
    let mut out = phi.to_vec();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            out[i * n + j] += lambda * delta[(i - 1) * m + (j - 1)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn problem(grid: Grid, phi0: Vec<f64>, c: f64, c_vec: [f64; 2]) -> MaProblem {
        MaProblem {
            grid,
            boundary: phi0.clone(),
            boundary_slope: vec![0.0; grid.len()],
            phi0,
            c,
            c_vec,
            normals: vec![],
            target_mass: None,
        }
    }

    #[test]
    fn quadratic_has_zero_residual() {
        let grid = Grid::new(2.0, 33).unwrap();
        let phi = grid.sample(|x| 0.5 * (x[0] * x[0] + x[1] * x[1]));
        let p = problem(grid, vec![0.0; grid.len()], 0.0, [0.0, 0.0]);
        let r = residual_field(&p, 0.0, &phi).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        // one perturbed node is visible
        let mut bumped = phi.clone();
        bumped[grid.center()] += 1e-3;
        let r = residual_field(&p, 0.0, &bumped).unwrap();
        assert!(r.iter().fold(0.0_f64, |m, v| m.max(v.abs())) > 0.1);
    }

    #[test]
    fn stencil_is_exact_on_quadratics() {
        let grid = Grid::new(1.0, 33).unwrap();
        let phi = grid.sample(|x| 3.0 * x[0] * x[0] + x[0] * x[1] + 0.5 * x[1] * x[1] - x[0]);
        let st = Stencil::at(&grid, &phi, 10, 20);
        assert!((st.xx - 6.0).abs() < 1e-10);
        assert!((st.yy - 1.0).abs() < 1e-10);
        assert!((st.xy - 1.0).abs() < 1e-10);
        let x = grid.point(grid.index(10, 20));
        assert!((st.x - (6.0 * x[0] + x[1] - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let grid = Grid::new(1.5, 33).unwrap();
        let phi = grid.sample(|x| libm::log(1.0 + libm::exp(x[0]) + libm::exp(x[1])) * 3.0 + 0.1 * x[0] * x[1]);
        let phi0 = grid.sample(|x| 0.4 * (x[0] * x[0] + x[1] * x[1]));
        let p = problem(grid, phi0, 0.7, [0.3, -0.2]);
        let t = 0.6;
        let m = grid.m();
        for form in [Form::Log, Form::Det] {
            let jac = jacobian(&p, t, &phi, form);
            let eval = |f: &[f64]| match form {
                Form::Log => log_residual(&p, t, f).unwrap(),
                Form::Det => det_residual(&p, t, f),
            };
            for &(i, j) in &[(5usize, 7usize), (16, 16), (1, 1), (31, 2)] {
                let col = (i - 1) * m + (j - 1);
                let h = 1e-6;
                let mut e = vec![0.0; m * m];
                e[col] = 1.0;
                let next = eval(&add_interior(&grid, &phi, &e, h));
                let prev = eval(&add_interior(&grid, &phi, &e, -h));
                for row in [col.saturating_sub(m + 1), col.saturating_sub(1), col, col + 1, col + m] {
                    if row >= m * m {
                        continue;
                    }
                    let fd = (next[row] - prev[row]) / (2.0 * h);
                    let exact = jac.get(row, col);
                    assert!(
                        (exact - fd).abs() < 1e-6 * (1.0 + exact.abs()),
                        "{form:?} row {row} col {col}: {exact} vs {fd}"
                    );
                }
            }
        }
    }
}
