//! Moments of the dual polytope.
//!
//! Polynomial moments are exact. Exponential moments
//! `F(s) = ∫_P e^{⟨s,y⟩} dy` (with `∇F` and `∇²F`) use the product rule from
//! [`crate::quadrature`] on the triangulation, refined uniformly until two
//! consecutive levels agree.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::math::exp;
use crate::polytope::DualPolytope;
use crate::quadrature::{for_each_refined_point, freudenthal_children, SimplexRule, GAUSS_ORDER};

/// Default relative tolerance for [`exp_moment`].
pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ExpMomentResult {
    pub value: f64,
    /// `∫_P y e^{⟨s,y⟩} dy`
    pub gradient: Vec<f64>,
    /// `∫_P y⊗y e^{⟨s,y⟩} dy`, row-major `n × n`.
    pub hessian: Vec<f64>,
    /// Relative difference between the last two refinement levels.
    pub est_error: f64,
    pub levels: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrationError {
    #[error("quadrature did not reach tolerance {tol:e} after {levels} refinements (last difference {est_error:e})")]
    NotConverged {
        tol: f64,
        levels: usize,
        est_error: f64,
        best: Vec<f64>,
    },
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

pub fn volume(p: &DualPolytope) -> BigRational {
    p.volume()
}

/// Exact `∫_P yⁱ dy` (axis `i` counted from 0).
pub fn monomial_moment(p: &DualPolytope, axis: usize) -> BigRational {
    assert!(axis < p.dim(), "axis {axis} out of range for dimension {}", p.dim());
    p.simplices()
        .iter()
        .map(|s| s.volume() * &s.centroid().0[axis])
        .fold(BigRational::zero(), |a, b| a + b)
}

/// Exact `∫_P yⁱ yʲ dy`. On a simplex with vertices `v₀…vₙ`,
/// `∫ yⁱyʲ = vol/((n+1)(n+2)) (Σₖ vₖⁱ Σₖ vₖʲ + Σₖ vₖⁱvₖʲ)`.
pub fn quadratic_moment(p: &DualPolytope, i: usize, j: usize) -> BigRational {
    let n = p.dim();
    let denom = BigRational::from_integer(BigInt::from((n + 1) * (n + 2)));
    let mut total = BigRational::zero();
    for s in p.simplices() {
        let si: BigRational = s.points.iter().map(|v| v.0[i].clone()).sum();
        let sj: BigRational = s.points.iter().map(|v| v.0[j].clone()).sum();
        let sij: BigRational = s.points.iter().map(|v| &v.0[i] * &v.0[j]).sum();
        total += s.volume() * (si * sj + sij) / &denom;
    }
    total
}

/// Refinable quadrature over the triangulation of `P`.
#[derive(Debug, Clone)]
pub struct PolytopeQuadrature {
    dim: usize,
    rule: SimplexRule,
    children: Vec<Vec<Vec<f64>>>,
    cells: Vec<(Vec<Vec<f64>>, f64)>,
    radius: f64,
    max_level: usize,
}

/// Result of [`PolytopeQuadrature::integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Integral {
    pub values: Vec<f64>,
    pub est_error: f64,
    pub levels: usize,
}

impl PolytopeQuadrature {
    pub fn new(p: &DualPolytope) -> Self {
        let dim = p.dim();
        let cells: Vec<(Vec<Vec<f64>>, f64)> = p
            .simplices()
            .iter()
            .map(|s| (s.to_f64(), s.volume().to_f64().unwrap_or(f64::NAN)))
            .collect();
        let radius = p
            .vertices_f64()
            .iter()
            .map(|v| crate::math::norm2(v))
            .fold(0.0, f64::max);
        // keep the finest level around 2²² evaluations per cell
        let per_level = dim as u32;
        let points = (GAUSS_ORDER as u32).pow(dim as u32).max(1);
        let mut max_level = 0;
        while (points as u64) << (per_level * (max_level + 1)) <= 1 << 22 {
            max_level += 1;
        }
        Self {
            dim,
            rule: SimplexRule::collapsed(dim, GAUSS_ORDER),
            children: freudenthal_children(dim),
            cells,
            radius,
            max_level: max_level as usize,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `max |y|` over the vertices.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn max_level(&self) -> usize {
        self.max_level
    }

    /// Fixed-level quadrature of a vector integrand `f(y, out)` (`out` has
    /// length `k` and is accumulated into, not overwritten).
    pub fn at_level(&self, k: usize, level: usize, f: &mut impl FnMut(&[f64], f64, &mut [f64])) -> Vec<f64> {
        let mut total = vec![0.0; k];
        let mut cell = vec![0.0; k];
        for (verts, vol) in &self.cells {
            cell.iter_mut().for_each(|c| *c = 0.0);
            for_each_refined_point(&self.rule, &self.children, verts, *vol, level, &mut |y, w| {
                f(y, w, &mut cell)
            });
            for (t, c) in total.iter_mut().zip(&cell) {
                *t += c;
            }
        }
        total
    }

    /// Refines until `max_j |Δvⱼ| / scaleⱼ < tol`, where `scale` maps the
    /// current estimate to per-component reference magnitudes.
    pub fn integrate(
        &self,
        k: usize,
        tol: f64,
        mut f: impl FnMut(&[f64], f64, &mut [f64]),
        scale: impl Fn(&[f64]) -> Vec<f64>,
    ) -> Result<Integral, IntegrationError> {
        if !(tol > 0.0) {
            return Err(IntegrationError::BadTolerance(tol));
        }
        let mut prev = self.at_level(k, 0, &mut f);
        let mut diff = f64::INFINITY;
        for level in 1..=self.max_level {
            let next = self.at_level(k, level, &mut f);
            let sc = scale(&next);
            diff = next
                .iter()
                .zip(&prev)
                .zip(&sc)
                .map(|((a, b), s)| (a - b).abs() / s)
                .fold(0.0, f64::max);
            prev = next;
            if diff < tol {
                return Ok(Integral {
                    values: prev,
                    est_error: diff,
                    levels: level,
                });
            }
        }
        Err(IntegrationError::NotConverged {
            tol,
            levels: self.max_level,
            est_error: diff,
            best: prev,
        })
    }

    /// `F(s)`, `∇F(s)`, `∇²F(s)`.
    pub fn exp_moment(&self, s: &[f64], tol: f64) -> Result<ExpMomentResult, IntegrationError> {
        let n = self.dim;
        assert_eq!(s.len(), n, "s has wrong dimension");
        let k = 1 + n + n * (n + 1) / 2;
        let rho = self.radius.max(1e-300);
        let integrand = |y: &[f64], w: f64, out: &mut [f64]| {
            let e = w * exp(crate::math::dot(s, y));
            out[0] += e;
            let mut idx = 1 + n;
            for i in 0..n {
                let ei = e * y[i];
                out[1 + i] += ei;
                for j in i..n {
                    out[idx] += ei * y[j];
                    idx += 1;
                }
            }
        };
        let scale = |v: &[f64]| -> Vec<f64> {
            let base = v[0].abs().max(f64::MIN_POSITIVE);
            let mut sc = vec![base; k];
            sc[1..1 + n].iter_mut().for_each(|x| *x = base * rho);
            sc[1 + n..].iter_mut().for_each(|x| *x = base * rho * rho);
            sc
        };
        let r = self.integrate(k, tol, integrand, scale)?;
        let v = &r.values;
        let mut hessian = vec![0.0; n * n];
        let mut idx = 1 + n;
        for i in 0..n {
            for j in i..n {
                hessian[i * n + j] = v[idx];
                hessian[j * n + i] = v[idx];
                idx += 1;
            }
        }
        Ok(ExpMomentResult {
            value: v[0],
            gradient: v[1..1 + n].to_vec(),
            hessian,
            est_error: r.est_error,
            levels: r.levels,
        })
    }
}

/// `∫_P e^{⟨s,y⟩} dy` with gradient and Hessian in `s`.
pub fn exp_moment(p: &DualPolytope, s: &[f64], tol: f64) -> Result<ExpMomentResult, IntegrationError> {
    PolytopeQuadrature::new(p).exp_moment(s, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;
    use crate::polytope::{LatticePolytope, RationalPoint};
    use proptest::prelude::*;

    fn ex41() -> DualPolytope {
        LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-2, -1]])
            .unwrap()
            .dual()
    }

    fn ex42() -> DualPolytope {
        LatticePolytope::new(2, vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]])
            .unwrap()
            .dual()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    #[test]
    fn exact_moments() {
        assert_eq!(monomial_moment(&ex41(), 0), r(-4, 3));
        assert_eq!(monomial_moment(&ex41(), 1), r(4, 3));
        assert_eq!(monomial_moment(&ex42(), 0), r(0, 1));
        let cp2 = LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]])
            .unwrap()
            .dual();
        assert_eq!(volume(&cp2), r(9, 2));
        // rhombus: ∫y₁² = 1/24, ∫y₂² = 1/6, ∫y₁y₂ = 0
        assert_eq!(quadratic_moment(&ex42(), 0, 0), r(1, 24));
        assert_eq!(quadratic_moment(&ex42(), 1, 1), r(1, 6));
        assert_eq!(quadratic_moment(&ex42(), 0, 1), r(0, 1));
    }

    #[test]
    fn zero_exponent_gives_volume_and_moments() {
        for p in [ex41(), ex42()] {
            let m = exp_moment(&p, &[0.0, 0.0], 1e-12).unwrap();
            let vol = volume(&p).to_f64().unwrap();
            assert!((m.value - vol).abs() < 1e-12 * vol);
            let bary: RationalPoint = p.barycenter();
            for (g, b) in m.gradient.iter().zip(bary.to_f64()) {
                assert!((g - vol * b).abs() < 1e-12 * vol);
            }
            for i in 0..2 {
                for j in 0..2 {
                    let q = quadratic_moment(&p, i, j).to_f64().unwrap();
                    assert!((m.hessian[i * 2 + j] - q).abs() < 1e-12 * vol);
                }
            }
        }
    }

    #[test]
    fn one_dimensional_closed_form() {
        // P = [-1, 1], ∫ e^{sy} = 2 sinh(s)/s
        let p = LatticePolytope::new(1, vec![vec![1], vec![-1]]).unwrap().dual();
        for s in [-3.0, -0.5, 0.7, 2.5] {
            let m = exp_moment(&p, &[s], 1e-13).unwrap();
            let exact = 2.0 * libm::sinh(s) / s;
            assert!((m.value - exact).abs() < 1e-13 * exact, "{s}");
            let d = 2.0 * (libm::cosh(s) / s - libm::sinh(s) / (s * s));
            assert!((m.gradient[0] - d).abs() < 1e-12 * exact);
        }
    }

    #[test]
    fn reflection_symmetry_of_example_4_2() {
        let q = PolytopeQuadrature::new(&ex42());
        for sigma in [0.3, 1.1, 2.9] {
            let a = q.exp_moment(&[sigma, 0.0], 1e-12).unwrap();
            let b = q.exp_moment(&[-sigma, 0.0], 1e-12).unwrap();
            assert!((a.value - b.value).abs() < 1e-12 * a.value);
            assert!((a.gradient[0] + b.gradient[0]).abs() < 1e-11 * a.value);
        }
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(matches!(
            exp_moment(&ex42(), &[0.0, 0.0], 0.0),
            Err(IntegrationError::BadTolerance(_))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn derivatives_match_finite_differences(s1 in -3.0f64..3.0, s2 in -3.0f64..3.0, which in 0usize..2) {
            let p = if which == 0 { ex41() } else { ex42() };
            let q = PolytopeQuadrature::new(&p);
            let s = [s1, s2];
            let m = q.exp_moment(&s, 1e-13).unwrap();
            let h = 1e-4;
            for i in 0..2 {
                let mut sp = s;
                let mut sm = s;
                sp[i] += h;
                sm[i] -= h;
                let fp = q.exp_moment(&sp, 1e-13).unwrap();
                let fm = q.exp_moment(&sm, 1e-13).unwrap();
                let dv = (fp.value - fm.value) / (2.0 * h);
                prop_assert!((dv - m.gradient[i]).abs() < 1e-5 * m.value);
                for j in 0..2 {
                    let dg = (fp.gradient[j] - fm.gradient[j]) / (2.0 * h);
                    prop_assert!((dg - m.hessian[i * 2 + j]).abs() < 1e-5 * m.value);
                }
            }
            let mut l = m.hessian.clone();
            prop_assert!(cholesky(&mut l, 2));
            prop_assert!(m.value > 0.0);
        }
    }
}
