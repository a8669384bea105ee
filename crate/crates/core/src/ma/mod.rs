//! Continuity-method solver in the plane for
//! `det D²φ = exp(-c - tφ - (1-t)φ⁰ - ⟨c_vec, Dφ⟩)` on `[-R, R]²` with
//! Dirichlet data built from `φ⁰` (see [`BoundaryMode`]).
//!
//! The equation is discretized with the central 9-point Hessian and central
//! gradients and solved in log-determinant form by Newton's method, one `t` at
//! a time, with banded LU for the linear systems.

mod continuity;
mod operator;

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

pub use continuity::{
    continuity_solve, r_sensitivity, solve_at_t, verify_solution, ContinuityMarch, ContinuitySchedule, NewtonOptions,
    RSensitivity, VerificationReport,
};
pub use operator::{residual_field, Stencil};

use crate::banded::SingularBand;
use crate::guillemin::{GuilleminError, GuilleminPotential};
use crate::integrals::{exp_moment, IntegrationError};
use crate::math::{exp, ln};
use crate::polytope::DualPolytope;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MaError {
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("the Monge-Ampère solver is two-dimensional, got dimension {0}")]
    Dimension(usize),
    #[error(transparent)]
    Guillemin(#[from] GuilleminError),
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Singular(#[from] SingularBand),
    #[error("discrete Hessian is not positive definite at node ({0}, {1})")]
    ConvexityBreach(usize, usize),
    #[error("Newton stalled at t = {t} with residual {residual:e}")]
    Stagnated {
        t: f64,
        residual: f64,
        best: Box<ContinuityState>,
    },
    #[error("Newton did not converge in {iterations} iterations at t = {t} (residual {residual:e})")]
    NewtonCap { t: f64, iterations: usize, residual: f64 },
    #[error("continuity path failed at t = {failing_t}: {source}")]
    PathFailed {
        failing_t: f64,
        last_good: Option<Box<ContinuityState>>,
        source: Box<MaError>,
    },
}

/// Uniform square grid on `[-R, R]²`; node `(i, j)` sits at
/// `(-R + i h, -R + j h)` and is stored at `i * resolution + j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    half_width: f64,
    resolution: usize,
    h: f64,
}

impl Grid {
    pub fn new(half_width: f64, resolution: usize) -> Result<Self, MaError> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(MaError::BadGrid(alloc::format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if resolution % 2 == 0 || resolution < 33 {
            return Err(MaError::BadGrid(alloc::format!(
                "resolution must be odd and at least 33, got {resolution}"
            )));
        }
        Ok(Self {
            half_width,
            resolution,
            h: 2.0 * half_width / (resolution - 1) as f64,
        })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.resolution * self.resolution
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.resolution + j
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        // symmetric about the center so that mirrored nodes are exact negatives
        let c = (self.resolution / 2) as f64;
        (i as f64 - c) * self.h
    }

    pub fn point(&self, node: usize) -> [f64; 2] {
        [self.coord(node / self.resolution), self.coord(node % self.resolution)]
    }

    pub fn center(&self) -> usize {
        let c = self.resolution / 2;
        self.index(c, c)
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        let (i, j) = (node / self.resolution, node % self.resolution);
        i == 0 || j == 0 || i == self.resolution - 1 || j == self.resolution - 1
    }

    /// Interior nodes per axis.
    pub(crate) fn m(&self) -> usize {
        self.resolution - 2
    }

    /// Evaluates `f` at every node.
    pub fn sample(&self, mut f: impl FnMut([f64; 2]) -> f64) -> Vec<f64> {
        (0..self.len()).map(|k| f(self.point(k))).collect()
    }
}

/// How the Dirichlet data is built from `φ⁰`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// `φ = φ⁰`.
    Reference,
    /// `φ = φ⁰ - (c + log det D²φ⁰ + φ⁰ + ⟨c_vec, Dφ⁰⟩) / t`: the value that
    /// solves the equation when `D²(φ - φ⁰)` is neglected, which is what
    /// `φ - φ⁰` tends to far out in each vertex cone. Coincides with
    /// `Reference` whenever `φ⁰` itself solves the equation.
    #[default]
    Asymptotic,
}

/// Everything fixed along a continuity path.
#[derive(Debug, Clone, PartialEq)]
pub struct MaProblem {
    pub grid: Grid,
    /// Reference potential at the nodes.
    pub phi0: Vec<f64>,
    /// Dirichlet data is `boundary + boundary_slope / t` on boundary nodes;
    /// the same expression on interior nodes seeds the first solve.
    pub boundary: Vec<f64>,
    pub boundary_slope: Vec<f64>,
    pub c: f64,
    pub c_vec: [f64; 2],
    /// Facet normals of `P` for the gradient-image check (`lᵢ = ⟨y,nᵢ⟩ + 1`).
    pub normals: Vec<Vec<f64>>,
    /// `e^c ∫_P e^{⟨c_vec,y⟩} dy = ∫ e^{-φ⁰} dx`, when known.
    pub target_mass: Option<f64>,
}

impl MaProblem {
    /// The problem attached to `P` with soliton vector `c_vec`: `φ⁰` from the
    /// Guillemin potential, `c = log ∫ e^{-φ⁰} - log ∫_P e^{⟨c_vec,y⟩}`, and
    /// asymptotic Dirichlet data (see [`BoundaryMode`]).
    pub fn from_polytope(
        p: &DualPolytope,
        grid: Grid,
        c_vec: &[f64],
        mode: BoundaryMode,
        tol: f64,
    ) -> Result<Self, MaError> {
        if p.dim() != 2 {
            return Err(MaError::Dimension(p.dim()));
        }
        let g = GuilleminPotential::new(p);
        let mass = g.phi0_mass(tol)?;
        let z = exp_moment(p, c_vec, tol)?.value;
        let mut problem = Self {
            grid,
            phi0: Vec::new(),
            boundary: Vec::new(),
            boundary_slope: Vec::new(),
            c: ln(mass) - ln(z),
            c_vec: [c_vec[0], c_vec[1]],
            normals: g.normals().to_vec(),
            target_mass: Some(mass),
        };
        problem.sample_reference(&g, mode)?;
        Ok(problem)
    }

    /// A problem with explicit data and `t`-independent Dirichlet values,
    /// for manufactured solutions.
    pub fn dirichlet(
        grid: Grid,
        phi0: Vec<f64>,
        boundary: Vec<f64>,
        c: f64,
        c_vec: [f64; 2],
        normals: Vec<Vec<f64>>,
    ) -> Self {
        assert_eq!(phi0.len(), grid.len(), "phi0 must have one value per node");
        assert_eq!(boundary.len(), grid.len(), "boundary must have one value per node");
        Self {
            grid,
            phi0,
            boundary,
            boundary_slope: alloc::vec![0.0; grid.len()],
            c,
            c_vec,
            normals,
            target_mass: None,
        }
    }

    /// The ℂP² problem at `c = 0`, `c_vec = 0` whose `t = 1` solution is
    /// [`cp2_exact_potential`], with that function as Dirichlet data.
    pub fn cp2_oracle(grid: Grid) -> Self {
        let exact = grid.sample(cp2_exact_potential);
        let normals = alloc::vec![alloc::vec![1.0, 0.0], alloc::vec![0.0, 1.0], alloc::vec![-1.0, -1.0]];
        let mut problem = Self::dirichlet(grid, exact.clone(), exact, 0.0, [0.0, 0.0], normals);
        // ∫ e^{-φ*} = vol(P) = 9/2
        problem.target_mass = Some(4.5);
        problem
    }

    /// The same problem on another grid.
    pub fn with_grid(&self, p: &DualPolytope, grid: Grid, mode: BoundaryMode) -> Result<Self, MaError> {
        let mut problem = Self { grid, ..self.clone() };
        problem.sample_reference(&GuilleminPotential::new(p), mode)?;
        Ok(problem)
    }

    fn sample_reference(&mut self, g: &GuilleminPotential, mode: BoundaryMode) -> Result<(), MaError> {
        let n = self.grid.len();
        self.phi0 = Vec::with_capacity(n);
        self.boundary_slope = Vec::with_capacity(n);
        for k in 0..n {
            let pt = g.legendre_phi0(&self.grid.point(k))?;
            self.phi0.push(pt.value);
            self.boundary_slope.push(match mode {
                BoundaryMode::Reference => 0.0,
                BoundaryMode::Asymptotic => {
                    -(self.c + pt.lemma21() + self.c_vec[0] * pt.y[0] + self.c_vec[1] * pt.y[1])
                }
            });
        }
        self.boundary = self.phi0.clone();
        Ok(())
    }

    /// Dirichlet values (and first-solve seed) at `t`.
    pub fn boundary_at(&self, t: f64) -> Vec<f64> {
        self.boundary
            .iter()
            .zip(&self.boundary_slope)
            .map(|(b, s)| b + s / t)
            .collect()
    }

    /// `w_t = tφ + (1-t)φ⁰` at every node.
    pub fn w_field(&self, t: f64, phi: &[f64]) -> Vec<f64> {
        phi.iter().zip(&self.phi0).map(|(p, q)| t * p + (1.0 - t) * q).collect()
    }
}

/// `3 log(1 + e^{x₁} + e^{x₂}) - x₁ - x₂ - log 9`, which solves
/// `det D²φ = e^{-φ}` on the plane (the Fubini-Study potential of ℂP²).
pub fn cp2_exact_potential(x: [f64; 2]) -> f64 {
    let m = x[0].max(x[1]).max(0.0);
    let s = exp(-m) + exp(x[0] - m) + exp(x[1] - m);
    3.0 * (m + ln(s)) - x[0] - x[1] - ln(9.0)
}

/// Solution at one value of `t` together with the monitored quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityState {
    pub t: f64,
    pub grid: Grid,
    pub phi: Vec<f64>,
    pub c: f64,
    pub c_vec: [f64; 2],
    /// `min w_t` over the nodes.
    pub m_t: f64,
    /// Node where `m_t` is attained.
    pub x_t: [f64; 2],
    pub sup_phi_minus_phi0: f64,
    pub inf_phi_minus_phi0: f64,
    /// Sup norm of the log-form residual over interior nodes.
    pub residual_norm: f64,
    pub newton_iters: usize,
}

impl ContinuityState {
    /// Builds the state and its monitors from a field, e.g. one read back from disk.
    pub fn new(problem: &MaProblem, t: f64, phi: Vec<f64>, residual_norm: f64, newton_iters: usize) -> Self {
        let w = problem.w_field(t, &phi);
        let (arg, m_t) = w.iter().enumerate().fold(
            (0, f64::INFINITY),
            |(ka, a), (k, &v)| if v < a { (k, v) } else { (ka, a) },
        );
        let (mut sup, mut inf) = (f64::NEG_INFINITY, f64::INFINITY);
        for (p, q) in phi.iter().zip(&problem.phi0) {
            sup = sup.max(p - q);
            inf = inf.min(p - q);
        }
        Self {
            t,
            grid: problem.grid,
            c: problem.c,
            c_vec: problem.c_vec,
            m_t,
            x_t: problem.grid.point(arg),
            sup_phi_minus_phi0: sup,
            inf_phi_minus_phi0: inf,
            residual_norm,
            newton_iters,
            phi,
        }
    }
}
