//! The soliton vector: the minimizer `c` of `F(s) = ∫_P e^{⟨s,y⟩} dy`,
//! characterized by `∫_P y e^{⟨c,y⟩} dy = 0`.

use alloc::vec;
use alloc::vec::Vec;

use num_traits::{ToPrimitive, Zero};

use crate::integrals::{IntegrationError, PolytopeQuadrature};
use crate::linalg::{cholesky, cholesky_solve};
use crate::math::{dot, norm2};
use crate::polytope::DualPolytope;

#[derive(Debug, Clone, PartialEq)]
pub struct SolitonVector {
    pub c: Vec<f64>,
    /// `‖∇F(c)‖`
    pub residual_norm: f64,
    /// Newton steps taken; zero when `c = 0` already passes.
    pub iterations: usize,
    pub converged: bool,
    /// `F` at each iterate, starting with `F(0) = vol(P)`.
    pub f_history: Vec<f64>,
    pub volume: f64,
}

impl SolitonVector {
    /// `‖∇F(c)‖ / vol(P)`, the quantity compared against the tolerance.
    pub fn relative_residual(&self) -> f64 {
        self.residual_norm / self.volume
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolitonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Armijo slope parameter.
    pub armijo: f64,
    pub max_halvings: usize,
}

impl Default for SolitonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            armijo: 1e-4,
            max_halvings: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolitonError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error("hessian of F is not positive definite at iteration {0}")]
    SingularHessian(usize),
}

pub fn solve_soliton_vector(p: &DualPolytope, tol: f64) -> Result<SolitonVector, SolitonError> {
    solve_soliton_vector_with(
        p,
        &SolitonOptions {
            tol,
            ..SolitonOptions::default()
        },
    )
}

/// Damped Newton from `c = 0`. Stagnation is not an error: the best iterate
/// comes back with `converged = false`.
pub fn solve_soliton_vector_with(p: &DualPolytope, opts: &SolitonOptions) -> Result<SolitonVector, SolitonError> {
    if !(opts.tol > 0.0) {
        return Err(SolitonError::BadTolerance(opts.tol));
    }
    let n = p.dim();
    let quad = PolytopeQuadrature::new(p);
    let inner_tol = opts.tol / 100.0;
    let volume = p.volume().to_f64().unwrap_or(f64::NAN);

    let mut c = vec![0.0; n];
    let mut m = quad.exp_moment(&c, inner_tol)?;
    let mut f_history = vec![m.value];
    let mut iterations = 0;
    loop {
        let gnorm = norm2(&m.gradient);
        if gnorm / volume < opts.tol {
            return Ok(SolitonVector {
                c,
                residual_norm: gnorm,
                iterations,
                converged: true,
                f_history,
                volume,
            });
        }
        if iterations == opts.max_iter {
            break;
        }
        let mut l = m.hessian.clone();
        if !cholesky(&mut l, n) {
            return Err(SolitonError::SingularHessian(iterations));
        }
        let mut step: Vec<f64> = m.gradient.iter().map(|g| -g).collect();
        cholesky_solve(&l, n, &mut step);
        let slope = dot(&m.gradient, &step);

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial: Vec<f64> = c.iter().zip(&step).map(|(ci, di)| ci + lambda * di).collect();
            let mt = quad.exp_moment(&trial, inner_tol)?;
            if mt.value <= m.value + opts.armijo * lambda * slope {
                accepted = Some((trial, mt));
                break;
            }
            // Near the minimum the decrease in F drops below its rounding;
            // the gradient is still informative there.
            let flat = (mt.value - m.value).abs() <= 1e-13 * m.value;
            if flat && norm2(&mt.gradient) < gnorm {
                accepted = Some((trial, mt));
                break;
            }
            lambda *= 0.5;
        }
        let Some((trial, mt)) = accepted else {
            break;
        };
        c = trial;
        m = mt;
        f_history.push(m.value);
        iterations += 1;
    }
    Ok(SolitonVector {
        c,
        residual_norm: norm2(&m.gradient),
        iterations,
        converged: false,
        f_history,
        volume,
    })
}

/// Exact test `barycenter(P) = 0`.
pub fn futaki_vanishes(p: &DualPolytope) -> bool {
    p.barycenter().0.iter().all(Zero::is_zero)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::LatticePolytope;

    pub(crate) const EXAMPLE_4_1_C1: f64 = 1.343_999_672_749_745_7;

    fn dual(v: Vec<Vec<i64>>) -> DualPolytope {
        LatticePolytope::new(2, v).unwrap().dual()
    }

    #[test]
    fn example_4_2_is_einstein_without_iterating() {
        let p = dual(vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]]);
        assert!(futaki_vanishes(&p));
        let s = solve_soliton_vector(&p, 1e-10).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 0);
        assert_eq!(s.c, vec![0.0, 0.0]);
    }

    #[test]
    fn example_4_1_matches_reference_value() {
        let p = dual(vec![vec![1, 0], vec![0, 1], vec![-2, -1]]);
        assert!(!futaki_vanishes(&p));
        let s = solve_soliton_vector(&p, 1e-10).unwrap();
        assert!(s.converged, "{s:?}");
        assert!(s.relative_residual() < 1e-10);
        assert!((s.c[0] - EXAMPLE_4_1_C1).abs() < 1e-9, "{:?}", s.c);
        assert!(s.c[1].abs() < 1e-9);
        for w in s.f_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-13));
        }
    }

    #[test]
    fn centrally_symmetric_and_cp2_give_zero() {
        for v in [
            vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]],
            vec![vec![1, 0], vec![0, 1], vec![-1, -1]],
            vec![
                vec![1, 0],
                vec![1, 1],
                vec![0, 1],
                vec![-1, 0],
                vec![-1, -1],
                vec![0, -1],
            ],
        ] {
            let p = dual(v);
            assert!(futaki_vanishes(&p));
            let s = solve_soliton_vector(&p, 1e-10).unwrap();
            assert!(norm2(&s.c) < 1e-10);
        }
    }

    #[test]
    fn futaki_and_solver_agree_on_a_blowup() {
        // ℂP² blown up at one point
        let p = dual(vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![1, 1]]);
        assert!(!futaki_vanishes(&p));
        let s = solve_soliton_vector(&p, 1e-10).unwrap();
        assert!(s.converged);
        assert!(norm2(&s.c) > 1e-3);
        // symmetric under swapping axes
        assert!((s.c[0] - s.c[1]).abs() < 1e-9);
    }

    #[test]
    fn rejects_zero_tolerance() {
        let p = dual(vec![vec![1, 0], vec![0, 1], vec![-1, -1]]);
        assert_eq!(solve_soliton_vector(&p, 0.0), Err(SolitonError::BadTolerance(0.0)));
    }
}
