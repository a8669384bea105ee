//! The Guillemin potential `u⁰ = Σ lᵢ log lᵢ` on `P`, its Legendre transform
//! `φ⁰(x) = Σ (lᵢ - log lᵢ) - d` (with `x = Du⁰(y)`), and scans of the two
//! boundedness statements `|log det D²φ⁰ + φ⁰| ≤ C` and `|φ⁰ - v| ≤ C`.
//!
//! For large `|x|` the moment image `y` sits exponentially close to a vertex
//! and the slacks `lᵢ(y)` of the incident facets underflow any absolute
//! representation. The inversion therefore works in a chart at the vertex
//! maximizing `⟨x, p⟩`, with those slacks as coordinates.

use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::integrals::{IntegrationError, PolytopeQuadrature};
use crate::linalg::{cholesky, cholesky_solve, det, rational_det, rational_solve};
use crate::math::{cos, dot, exp, ln, norm2, sin, sqrt};
use crate::polytope::{for_each_combination, DualPolytope};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum GuilleminError {
    #[error("point is not interior to P: l_{index} = {slack:e}")]
    NotInterior { index: usize, slack: f64 },
    #[error("Legendre inversion stalled after {iterations} iterations (gradient residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// `u⁰`, `Du⁰`, `D²u⁰` (row-major) at an interior point.
#[derive(Debug, Clone, PartialEq)]
pub struct U0Eval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
}

/// Output of [`GuilleminPotential::legendre_phi0`].
#[derive(Debug, Clone, PartialEq)]
pub struct LegendrePoint {
    pub value: f64,
    /// `y = Dφ⁰(x)`
    pub y: Vec<f64>,
    /// `lᵢ(y)`, with full relative precision even when tiny.
    pub slacks: Vec<f64>,
    /// `log det D²u⁰(y) = -log det D²φ⁰(x)`.
    pub log_det_u0: f64,
    pub iterations: usize,
}

impl LegendrePoint {
    /// `log det D²φ⁰ + φ⁰`.
    pub fn lemma21(&self) -> f64 {
        self.value - self.log_det_u0
    }
}

/// Affine coordinates `y = a + M w` in which `lᵢ = sᵢ + ⟨mᵢ, w⟩`.
#[derive(Debug, Clone)]
struct Chart {
    anchor: Vec<f64>,
    m: Vec<f64>,
    offsets: Vec<f64>,
    normals: Vec<Vec<f64>>,
    start: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GuilleminPotential {
    dim: usize,
    normals: Vec<Vec<f64>>,
    vertices: Vec<Vec<f64>>,
    /// Nonzero `det(n_S)²` over `dim`-subsets `S`.
    subsets: Vec<(Vec<usize>, f64)>,
    origin_chart: Chart,
    vertex_charts: Vec<Chart>,
    pub newton_tol: f64,
    pub max_iter: usize,
    quadrature: PolytopeQuadrature,
}

fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

impl GuilleminPotential {
    pub fn new(p: &DualPolytope) -> Self {
        let n = p.dim();
        let exact_normals: Vec<Vec<BigRational>> = p.normals().iter().map(|v| v.to_rational()).collect();
        let normals: Vec<Vec<f64>> = p.normals_f64();
        let d = normals.len();

        let mut subsets = Vec::new();
        for_each_combination(d, n, |s| {
            let det = rational_det(s.iter().map(|&i| exact_normals[i].clone()).collect());
            if !det.is_zero() {
                subsets.push((s.to_vec(), to_f64(&(&det * &det))));
            }
        });

        let mut identity = vec![0.0; n * n];
        (0..n).for_each(|i| identity[i * n + i] = 1.0);
        let origin_chart = Chart {
            anchor: vec![0.0; n],
            m: identity,
            offsets: vec![1.0; d],
            normals: normals.clone(),
            start: vec![0.0; n],
        };

        let mut vertex_charts = Vec::new();
        for (vertex, tight) in p.vertices().iter().zip(p.vertex_facets()) {
            // pick n independent tight facets
            let mut basis: Option<Vec<usize>> = None;
            for_each_combination(tight.len(), n, |c| {
                if basis.is_none() {
                    let rows: Vec<Vec<BigRational>> = c.iter().map(|&k| exact_normals[tight[k]].clone()).collect();
                    if !rational_det(rows).is_zero() {
                        basis = Some(c.iter().map(|&k| tight[k]).collect());
                    }
                }
            });
            let basis = basis.expect("every vertex has n independent tight facets");
            // M = N_S⁻¹, so column k of M solves N_S m = e_k
            let ns: Vec<Vec<BigRational>> = basis.iter().map(|&i| exact_normals[i].clone()).collect();
            let mut m_exact = vec![vec![BigRational::zero(); n]; n];
            for k in 0..n {
                let mut e = vec![BigRational::zero(); n];
                e[k] = BigRational::one();
                let col = rational_solve(ns.clone(), e).expect("basis is invertible");
                for (r, v) in col.into_iter().enumerate() {
                    m_exact[r][k] = v;
                }
            }
            // mᵢ = Mᵀ nᵢ
            let chart_normals: Vec<Vec<f64>> = exact_normals
                .iter()
                .map(|ni| {
                    (0..n)
                        .map(|k| to_f64(&(0..n).map(|r| &m_exact[r][k] * &ni[r]).sum::<BigRational>()))
                        .collect()
                })
                .collect();
            let offsets: Vec<f64> = (0..d).map(|i| to_f64(&p.facet_value(i, vertex))).collect();
            let m: Vec<f64> = m_exact.iter().flat_map(|row| row.iter().map(to_f64)).collect();
            // y = a/2 has lᵢ = (sᵢ + 1)/2 > 0; in chart coordinates w = N_S(y - a) = ½·1.
            let half = BigRational::new(BigInt::from(1), BigInt::from(2));
            let start: Vec<f64> = basis
                .iter()
                .map(|&i| {
                    let ni = &exact_normals[i];
                    let v: BigRational = ni.iter().zip(&vertex.0).map(|(a, b)| a * b).sum();
                    to_f64(&(-v * &half))
                })
                .collect();
            vertex_charts.push(Chart {
                anchor: vertex.to_f64(),
                m,
                offsets,
                normals: chart_normals,
                start,
            });
        }

        Self {
            dim: n,
            normals,
            vertices: p.vertices_f64(),
            subsets,
            origin_chart,
            vertex_charts,
            newton_tol: 1e-13,
            max_iter: 500,
            quadrature: PolytopeQuadrature::new(p),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn facet_count(&self) -> usize {
        self.normals.len()
    }

    pub fn normals(&self) -> &[Vec<f64>] {
        &self.normals
    }

    pub fn slacks(&self, y: &[f64]) -> Vec<f64> {
        self.normals.iter().map(|n| dot(n, y) + 1.0).collect()
    }

    fn interior_slacks(&self, y: &[f64]) -> Result<Vec<f64>, GuilleminError> {
        let l = self.slacks(y);
        match l.iter().position(|&v| !(v > 0.0)) {
            Some(index) => Err(GuilleminError::NotInterior { index, slack: l[index] }),
            None => Ok(l),
        }
    }

    /// `v(x) = max_k ⟨x, p⁽ᵏ⁾⟩`.
    pub fn support_function(&self, x: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|p| dot(p, x))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn u0_eval(&self, y: &[f64]) -> Result<U0Eval, GuilleminError> {
        let n = self.dim;
        let l = self.interior_slacks(y)?;
        let mut value = 0.0;
        let mut gradient = vec![0.0; n];
        let mut hessian = vec![0.0; n * n];
        for (ni, &li) in self.normals.iter().zip(&l) {
            let log = ln(li);
            value += li * log;
            for a in 0..n {
                gradient[a] += (1.0 + log) * ni[a];
                for b in 0..n {
                    hessian[a * n + b] += ni[a] * ni[b] / li;
                }
            }
        }
        Ok(U0Eval {
            value,
            gradient,
            hessian,
        })
    }

    /// `det D²u⁰(y) = Σ_S det(n_S)² / Π_{i∈S} lᵢ`.
    pub fn det_hess_u0(&self, y: &[f64]) -> Result<f64, GuilleminError> {
        let l = self.interior_slacks(y)?;
        Ok(self
            .subsets
            .iter()
            .map(|(s, d2)| d2 / s.iter().map(|&i| l[i]).product::<f64>())
            .sum())
    }

    /// `log det D²u⁰` from slacks, summed in log space.
    pub fn log_det_hess_u0_from_slacks(&self, l: &[f64]) -> f64 {
        let terms: Vec<f64> = self
            .subsets
            .iter()
            .map(|(s, d2)| ln(*d2) - s.iter().map(|&i| ln(l[i])).sum::<f64>())
            .collect();
        let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + ln(terms.iter().map(|t| exp(t - top)).sum::<f64>())
    }

    fn chart_for(&self, x: &[f64]) -> &Chart {
        // near the origin y is O(1) and the plain coordinates are fine
        if norm2(x) <= 4.0 * self.normals.iter().map(|n| norm2(n)).fold(0.0, f64::max) {
            return &self.origin_chart;
        }
        let best = self
            .vertices
            .iter()
            .enumerate()
            .max_by(|a, b| dot(a.1, x).total_cmp(&dot(b.1, x)))
            .map(|(k, _)| k)
            .unwrap_or(0);
        &self.vertex_charts[best]
    }

    /// Solves `Du⁰(y) = x` by minimizing `u⁰(y) - ⟨x, y⟩`.
    pub fn legendre_phi0(&self, x: &[f64]) -> Result<LegendrePoint, GuilleminError> {
        let n = self.dim;
        let chart = self.chart_for(x);
        // objective in chart coordinates: Σ lᵢ log lᵢ - ⟨Mᵀx, w⟩
        let mx: Vec<f64> = (0..n)
            .map(|k| (0..n).map(|r| chart.m[r * n + k] * x[r]).sum())
            .collect();
        let slacks = |w: &[f64]| -> Vec<f64> {
            chart
                .offsets
                .iter()
                .zip(&chart.normals)
                .map(|(s, m)| s + dot(m, w))
                .collect()
        };
        let objective = |l: &[f64], w: &[f64]| -> f64 { l.iter().map(|&v| v * ln(v)).sum::<f64>() - dot(&mx, w) };

        let mut w = chart.start.clone();
        let mut l = slacks(&w);
        let scale = 1.0 + norm2(x);
        let mut iterations = 0;
        let mut residual = f64::INFINITY;
        while iterations < self.max_iter {
            let mut grad: Vec<f64> = mx.iter().map(|v| -v).collect();
            let mut hess = vec![0.0; n * n];
            for (mi, &li) in chart.normals.iter().zip(&l) {
                let g = 1.0 + ln(li);
                for a in 0..n {
                    grad[a] += g * mi[a];
                    for b in 0..n {
                        hess[a * n + b] += mi[a] * mi[b] / li;
                    }
                }
            }
            // the gradient is Du⁰(y) - x in chart coordinates; it controls the
            // relative accuracy of tiny slacks, the Newton decrement does not
            residual = grad.iter().fold(0.0_f64, |m, g| m.max(g.abs()));
            if residual <= self.newton_tol * scale || !cholesky(&mut hess, n) {
                break;
            }
            let mut step: Vec<f64> = grad.iter().map(|g| -g).collect();
            cholesky_solve(&hess, n, &mut step);
            let decrement = sqrt((-dot(&grad, &step)).max(0.0));
            iterations += 1;
            // fraction to the boundary: no slack drops by more than half
            let dl: Vec<f64> = chart.normals.iter().map(|m| dot(m, &step)).collect();
            let mut alpha: f64 = 1.0;
            for (li, di) in l.iter().zip(&dl) {
                if *di < 0.0 {
                    alpha = alpha.min(0.5 * li / -di);
                }
            }
            if decrement >= 0.25 {
                let g0 = objective(&l, &w);
                let slope = dot(&grad, &step);
                for _ in 0..60 {
                    let trial: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
                    let lt = slacks(&trial);
                    if lt.iter().all(|&v| v > 0.0) && objective(&lt, &trial) <= g0 + 1e-4 * alpha * slope {
                        break;
                    }
                    alpha *= 0.5;
                }
            }
            let next: Vec<f64> = w.iter().zip(&step).map(|(a, b)| a + alpha * b).collect();
            let ln_next = slacks(&next);
            if next == w || !ln_next.iter().all(|&v| v > 0.0) {
                break;
            }
            w = next;
            l = ln_next;
        }
        if !(residual <= 1e-8 * scale) {
            return Err(GuilleminError::NoConvergence { iterations, residual });
        }
        let y: Vec<f64> = (0..n)
            .map(|r| chart.anchor[r] + (0..n).map(|k| chart.m[r * n + k] * w[k]).sum::<f64>())
            .collect();
        // ⟨x, y⟩ - u⁰(y) is stationary in y, unlike Σ(lᵢ - log lᵢ) - d
        let value = dot(x, &chart.anchor) + dot(&mx, &w) - l.iter().map(|&v| v * ln(v)).sum::<f64>();
        Ok(LegendrePoint {
            value,
            y,
            log_det_u0: self.log_det_hess_u0_from_slacks(&l),
            slacks: l,
            iterations,
        })
    }

    /// `D²φ⁰(x) = (D²u⁰(y))⁻¹`.
    pub fn hess_phi0(&self, x: &[f64]) -> Result<Vec<f64>, GuilleminError> {
        let pt = self.legendre_phi0(x)?;
        let n = self.dim;
        let mut h = vec![0.0; n * n];
        for (ni, li) in self.normals.iter().zip(&pt.slacks) {
            for a in 0..n {
                for b in 0..n {
                    h[a * n + b] += ni[a] * ni[b] / li;
                }
            }
        }
        crate::linalg::spd_inverse(&h, n).ok_or(GuilleminError::NotInterior { index: 0, slack: 0.0 })
    }

    /// `∫_{ℝⁿ} e^{-φ⁰} dx`, pulled back to `P` through `x = Du⁰(y)`:
    /// `∫_P e^{-⟨y, Σnᵢ⟩} Σ_S det(n_S)² Π_{i∉S} lᵢ dy`.
    pub fn phi0_mass(&self, tol: f64) -> Result<f64, IntegrationError> {
        let n = self.dim;
        let sum_n: Vec<f64> = (0..n).map(|a| self.normals.iter().map(|v| v[a]).sum()).collect();
        let r = self.quadrature.integrate(
            1,
            tol,
            |y, w, out| {
                let l = self.slacks(y);
                let mut s = 0.0;
                for (subset, d2) in &self.subsets {
                    let mut prod = *d2;
                    for (i, li) in l.iter().enumerate() {
                        if !subset.contains(&i) {
                            prod *= li.max(0.0);
                        }
                    }
                    s += prod;
                }
                out[0] += w * exp(-dot(&sum_n, y)) * s;
            },
            |v| vec![v[0].abs().max(f64::MIN_POSITIVE)],
        )?;
        Ok(r.values[0])
    }

    /// Samples spheres of the given radii and records the sups of
    /// `|log det D²φ⁰ + φ⁰|` and `|φ⁰ - v|`. `offset ∈ [0,1)` rotates the
    /// deterministic direction set.
    pub fn lemma_scan(&self, radii: &[f64], samples: usize, offset: f64) -> Result<ScanReport, GuilleminError> {
        let dirs = sphere_directions(self.dim, samples, offset);
        let mut rows = Vec::with_capacity(radii.len());
        let (mut run21, mut run22) = (0.0_f64, 0.0_f64);
        let mut max_iterations = 0;
        for &r in radii {
            let (mut s21, mut s22) = (0.0_f64, 0.0_f64);
            let mut min_slack = f64::INFINITY;
            for d in &dirs {
                let x: Vec<f64> = d.iter().map(|v| r * v).collect();
                let pt = self.legendre_phi0(&x)?;
                s21 = s21.max(pt.lemma21().abs());
                s22 = s22.max((pt.value - self.support_function(&x)).abs());
                min_slack = pt.slacks.iter().copied().fold(min_slack, f64::min);
                max_iterations = max_iterations.max(pt.iterations);
            }
            run21 = run21.max(s21);
            run22 = run22.max(s22);
            rows.push(ScanRow {
                radius: r,
                sup_lemma21: s21,
                sup_lemma22: s22,
                running_sup_lemma21: run21,
                running_sup_lemma22: run22,
                min_slack,
            });
        }
        Ok(ScanReport {
            rows,
            samples: dirs.len(),
            max_iterations,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub radius: f64,
    pub sup_lemma21: f64,
    pub sup_lemma22: f64,
    pub running_sup_lemma21: f64,
    pub running_sup_lemma22: f64,
    pub min_slack: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    pub samples: usize,
    pub max_iterations: usize,
}

impl ScanReport {
    /// (sup at the largest radius) / (running sup), for both quantities.
    pub fn saturation(&self) -> (f64, f64) {
        let Some(last) = self.rows.last() else {
            return (f64::NAN, f64::NAN);
        };
        let ratio = |a: f64, b: f64| if b == 0.0 { 1.0 } else { a / b };
        (
            ratio(last.sup_lemma21, last.running_sup_lemma21),
            ratio(last.sup_lemma22, last.running_sup_lemma22),
        )
    }

    /// Relative change of both sups between the rows at radii `a` and `b`.
    pub fn relative_change(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        let ra = self.rows.iter().find(|r| r.radius == a)?;
        let rb = self.rows.iter().find(|r| r.radius == b)?;
        let rel = |u: f64, v: f64| {
            let m = u.abs().max(v.abs());
            if m == 0.0 {
                0.0
            } else {
                (u - v).abs() / m
            }
        };
        Some((rel(ra.sup_lemma21, rb.sup_lemma21), rel(ra.sup_lemma22, rb.sup_lemma22)))
    }
}

/// Unit vectors: equally spaced angles in the plane, Halton points pushed
/// through Box-Muller otherwise.
pub fn sphere_directions(dim: usize, samples: usize, offset: f64) -> Vec<Vec<f64>> {
    use core::f64::consts::PI;
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..samples)
            .map(|j| {
                let t = 2.0 * PI * (j as f64 + offset) / samples as f64;
                vec![cos(t), sin(t)]
            })
            .collect(),
        _ => {
            const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
            let coords = dim + dim % 2;
            (0..samples)
                .map(|j| {
                    let u: Vec<f64> = (0..coords)
                        .map(|k| {
                            let h = radical_inverse(j as u64 + 1, PRIMES[k % PRIMES.len()]) + offset;
                            (h - libm::floor(h)).clamp(1e-12, 1.0 - 1e-12)
                        })
                        .collect();
                    let mut g = Vec::with_capacity(coords);
                    for pair in u.chunks(2) {
                        let r = sqrt(-2.0 * ln(pair[0]));
                        g.push(r * cos(2.0 * PI * pair[1]));
                        g.push(r * sin(2.0 * PI * pair[1]));
                    }
                    g.truncate(dim);
                    let norm = norm2(&g);
                    g.iter().map(|v| v / norm).collect()
                })
                .collect()
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Direct determinant of a row-major matrix (the Cauchy-Binet cross-check).
pub fn direct_det(h: &[f64], n: usize) -> f64 {
    det(h, n)
}
