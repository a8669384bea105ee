//! Product Gauss-Legendre rules on simplices and uniform simplex refinement.
//!
//! The rule on the standard simplex comes from the collapsed (Duffy)
//! coordinates `x₁ = u₁, x₂ = (1-u₁)u₂, …`, which turn a tensor rule on the
//! cube into a rule on the simplex. Refinement splits a simplex into `2ⁿ`
//! congruent children (Freudenthal), so the same rule is reused at every
//! level.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::cos;

/// Default number of Gauss points per axis.
pub const GAUSS_ORDER: usize = 8;

/// Gauss-Legendre nodes and weights on `[0, 1]` (weights sum to 1).
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let n = order as f64;
    for k in 0..order.div_ceil(2) {
        let mut z = cos(PI * (k as f64 + 0.75) / (n + 0.5));
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(order, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(order, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 1.0 / ((1.0 - z * z) * dp * dp);
        nodes[k] = 0.5 * (1.0 - z);
        nodes[order - 1 - k] = 0.5 * (1.0 + z);
        weights[k] = w;
        weights[order - 1 - k] = w;
    }
    (nodes, weights)
}

/// `(Pₙ(z), Pₙ'(z))` by the three-term recurrence.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// A rule on the reference simplex in barycentric form. Weights sum to 1, so
/// `∫_S f ≈ vol(S) Σ w f(Σ λⱼ vⱼ)`.
#[derive(Debug, Clone)]
pub struct SimplexRule {
    dim: usize,
    /// `dim + 1` barycentric coordinates per point.
    bary: Vec<f64>,
    weights: Vec<f64>,
}

impl SimplexRule {
    pub fn collapsed(dim: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let count = order.pow(dim as u32);
        let mut bary = Vec::with_capacity(count * (dim + 1));
        let mut weights = Vec::with_capacity(count);
        let mut idx = vec![0usize; dim];
        let mut total = 0.0;
        for _ in 0..count {
            let mut rest = 1.0;
            let mut weight = 1.0;
            let mut coords = Vec::with_capacity(dim);
            for (k, &i) in idx.iter().enumerate() {
                coords.push(rest * x[i]);
                weight *= w[i] * libm::pow(1.0 - x[i], (dim - 1 - k) as f64);
                rest *= 1.0 - x[i];
            }
            bary.push(rest);
            bary.extend_from_slice(&coords);
            weights.push(weight);
            total += weight;
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < order {
                    break;
                }
                *slot = 0;
            }
        }
        for w in &mut weights {
            *w /= total;
        }
        Self { dim, bary, weights }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Calls `f(point, weight)` for each node mapped onto `vertices`; the
    /// weights include `vol(S)`.
    pub fn for_each_point(&self, vertices: &[Vec<f64>], volume: f64, mut f: impl FnMut(&[f64], f64)) {
        let n = self.dim;
        let mut y = vec![0.0; n];
        for (q, &w) in self.weights.iter().enumerate() {
            let lam = &self.bary[q * (n + 1)..(q + 1) * (n + 1)];
            y.iter_mut().for_each(|v| *v = 0.0);
            for (l, v) in lam.iter().zip(vertices) {
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += l * vi;
                }
            }
            f(&y, w * volume);
        }
    }
}

/// Barycentric coordinates of the `2ⁿ` Freudenthal children of a simplex, as
/// `children[c][k][j]`: weight of parent vertex `j` in vertex `k` of child `c`.
pub fn freudenthal_children(dim: usize) -> Vec<Vec<Vec<f64>>> {
    // Children of the Kuhn simplex 1 ≥ x₁ ≥ … ≥ xₙ ≥ 0 are the Kuhn simplices
    // of the half-size subcubes that lie inside it.
    let mut out = Vec::new();
    let perms = permutations(dim);
    for corner in 0..(1usize << dim) {
        let base: Vec<f64> = (0..dim).map(|i| 0.5 * ((corner >> i) & 1) as f64).collect();
        for perm in &perms {
            let mut verts = vec![base.clone()];
            let mut cur = base.clone();
            for &axis in perm {
                cur[axis] += 0.5;
                verts.push(cur.clone());
            }
            let centroid: Vec<f64> = (0..dim)
                .map(|i| verts.iter().map(|v| v[i]).sum::<f64>() / (dim + 1) as f64)
                .collect();
            let inside = centroid.windows(2).all(|w| w[0] >= w[1]) && centroid[0] <= 1.0 && centroid[dim - 1] >= 0.0;
            if inside {
                out.push(verts.iter().map(|x| kuhn_barycentric(x)).collect());
            }
        }
    }
    debug_assert_eq!(out.len(), 1 << dim);
    out
}

fn kuhn_barycentric(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut lam = Vec::with_capacity(n + 1);
    lam.push(1.0 - x[0]);
    for k in 0..n - 1 {
        lam.push(x[k] - x[k + 1]);
    }
    lam.push(x[n - 1]);
    lam
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Applies `rule` on every cell of the `level`-fold refinement of a simplex,
/// depth first in a fixed order.
pub fn for_each_refined_point(
    rule: &SimplexRule,
    children: &[Vec<Vec<f64>>],
    vertices: &[Vec<f64>],
    volume: f64,
    level: usize,
    f: &mut impl FnMut(&[f64], f64),
) {
    if level == 0 {
        rule.for_each_point(vertices, volume, |y, w| f(y, w));
        return;
    }
    let child_volume = volume / children.len() as f64;
    for child in children {
        let verts: Vec<Vec<f64>> = child
            .iter()
            .map(|lam| {
                let mut p = vec![0.0; vertices[0].len()];
                for (l, v) in lam.iter().zip(vertices) {
                    for (pi, vi) in p.iter_mut().zip(v) {
                        *pi += l * vi;
                    }
                }
                p
            })
            .collect();
        for_each_refined_point(rule, children, &verts, child_volume, level - 1, f);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_to_degree_fifteen() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * libm::pow(*x, k as f64)).sum();
            assert!((q - 1.0 / (k + 1) as f64).abs() < 1e-15, "degree {k}: {q}");
        }
        let (x, _) = gauss_legendre(3);
        assert!((x[1] - 0.5).abs() < 1e-16);
    }

    #[test]
    fn triangle_rule_integrates_monomials() {
        let rule = SimplexRule::collapsed(2, 8);
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        // ∫ x^a y^b over the unit triangle = a! b! / (a+b+2)!
        let fact = |n: u32| (1..=n).map(f64::from).product::<f64>();
        for a in 0..6u32 {
            for b in 0..6u32 {
                let mut q = 0.0;
                rule.for_each_point(&tri, 0.5, |y, w| {
                    q += w * libm::pow(y[0], a as f64) * libm::pow(y[1], b as f64)
                });
                let exact = fact(a) * fact(b) / fact(a + b + 2);
                assert!((q - exact).abs() < 1e-15, "{a} {b}");
            }
        }
    }

    #[test]
    fn freudenthal_children_tile_the_parent() {
        for dim in 1..=4 {
            let children = freudenthal_children(dim);
            assert_eq!(children.len(), 1 << dim);
            for child in &children {
                for lam in child {
                    assert!((lam.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                    assert!(lam.iter().all(|&l| l >= 0.0));
                }
            }
        }
        // refined and unrefined rules agree on a cubic
        let rule = SimplexRule::collapsed(3, 4);
        let children = freudenthal_children(3);
        let tet = vec![
            vec![0.0, 0.0, 0.0],
            vec![2.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.5, 0.5, 3.0],
        ];
        let f = |y: &[f64]| y[0] * y[1] * y[2] + y[0] * y[0] - 3.0 * y[2];
        let mut coarse = 0.0;
        let mut fine = 0.0;
        for_each_refined_point(&rule, &children, &tet, 1.0, 0, &mut |y, w| coarse += w * f(y));
        for_each_refined_point(&rule, &children, &tet, 1.0, 2, &mut |y, w| fine += w * f(y));
        assert!((coarse - fine).abs() < 1e-13);
    }
}
