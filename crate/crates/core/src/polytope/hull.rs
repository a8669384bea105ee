//! Facets of `conv(Q)`: gift wrapping in the plane, half-space
//! reconstruction from n-subsets otherwise.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::{LatticePoint, PolytopeError};
use crate::linalg::{rational_det, rational_rank};

/// A facet `⟨a, x⟩ = offset` of `conv(Q)` with outward primitive normal `a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullFacet {
    pub normal: Vec<BigInt>,
    pub offset: BigInt,
    pub vertices: Vec<usize>,
}

pub(super) fn facets(dim: usize, points: &[LatticePoint]) -> Result<Vec<HullFacet>, PolytopeError> {
    let diffs: Vec<Vec<BigRational>> = points[1..]
        .iter()
        .map(|p| {
            p.0.iter()
                .zip(&points[0].0)
                .map(|(&a, &b)| BigRational::from_integer(BigInt::from(a) - BigInt::from(b)))
                .collect()
        })
        .collect();
    if rational_rank(diffs) < dim {
        return Err(PolytopeError::OriginNotInterior);
    }
    let facets = match dim {
        1 => segment(points),
        2 => gift_wrap(points),
        _ => by_subsets(dim, points),
    };
    if facets.iter().any(|f| !f.offset.is_positive()) {
        return Err(PolytopeError::OriginNotInterior);
    }
    check_all_vertices(dim, points, &facets)?;
    Ok(facets)
}

fn segment(points: &[LatticePoint]) -> Vec<HullFacet> {
    let (lo, _) = points.iter().enumerate().min_by_key(|(_, p)| p.0[0]).unwrap();
    let (hi, _) = points.iter().enumerate().max_by_key(|(_, p)| p.0[0]).unwrap();
    vec![
        HullFacet {
            normal: vec![BigInt::from(-1)],
            offset: BigInt::from(-points[lo].0[0]),
            vertices: vec![lo],
        },
        HullFacet {
            normal: vec![BigInt::from(1)],
            offset: BigInt::from(points[hi].0[0]),
            vertices: vec![hi],
        },
    ]
}

fn cross(o: &[i64], a: &[i64], b: &[i64]) -> i128 {
    let (ax, ay) = (a[0] as i128 - o[0] as i128, a[1] as i128 - o[1] as i128);
    let (bx, by) = (b[0] as i128 - o[0] as i128, b[1] as i128 - o[1] as i128);
    ax * by - ay * bx
}

fn dist2(a: &[i64], b: &[i64]) -> i128 {
    let dx = a[0] as i128 - b[0] as i128;
    let dy = a[1] as i128 - b[1] as i128;
    dx * dx + dy * dy
}

/// Jarvis march; the resulting cycle is counter-clockwise and skips points in
/// the relative interior of edges.
fn gift_wrap(points: &[LatticePoint]) -> Vec<HullFacet> {
    let m = points.len();
    let start = (0..m).min_by_key(|&i| (points[i].0[1], points[i].0[0])).unwrap();
    let mut cycle = vec![start];
    let mut p = start;
    for _ in 0..m {
        let mut q = if p == 0 { 1 } else { 0 };
        for r in 0..m {
            if r == p {
                continue;
            }
            let c = cross(&points[p].0, &points[q].0, &points[r].0);
            if c < 0 || (c == 0 && dist2(&points[p].0, &points[r].0) > dist2(&points[p].0, &points[q].0)) {
                q = r;
            }
        }
        if q == start {
            break;
        }
        cycle.push(q);
        p = q;
    }
    let k = cycle.len();
    (0..k)
        .map(|e| {
            let (a, b) = (cycle[e], cycle[(e + 1) % k]);
            let dx = BigInt::from(points[b].0[0]) - BigInt::from(points[a].0[0]);
            let dy = BigInt::from(points[b].0[1]) - BigInt::from(points[a].0[1]);
            let g = dx.gcd(&dy);
            let normal = vec![&dy / &g, -(&dx / &g)];
            let offset = &normal[0] * BigInt::from(points[a].0[0]) + &normal[1] * BigInt::from(points[a].0[1]);
            HullFacet {
                normal,
                offset,
                vertices: vec![a, b],
            }
        })
        .collect()
}

fn by_subsets(dim: usize, points: &[LatticePoint]) -> Vec<HullFacet> {
    let m = points.len();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut out = Vec::new();
    for_each_combination(m, dim, |subset| {
        let Some(normal) = hyperplane_normal(dim, points, subset) else {
            return;
        };
        let value = |p: &LatticePoint| -> BigInt { normal.iter().zip(&p.0).map(|(a, &x)| a * BigInt::from(x)).sum() };
        let offset = value(&points[subset[0]]);
        let mut above = false;
        let mut below = false;
        let mut on = Vec::new();
        for (i, p) in points.iter().enumerate() {
            let v = value(p);
            if v > offset {
                above = true;
            } else if v < offset {
                below = true;
            } else {
                on.push(i);
            }
        }
        if above && below {
            return;
        }
        if seen.insert(on.clone()) {
            let (normal, offset) = if above {
                (normal.iter().map(|a| -a).collect(), -offset)
            } else {
                (normal, offset)
            };
            out.push(HullFacet {
                normal,
                offset,
                vertices: on,
            });
        }
    });
    out
}

/// Primitive integer normal of the hyperplane through `dim` points, if they
/// are affinely independent.
fn hyperplane_normal(dim: usize, points: &[LatticePoint], subset: &[usize]) -> Option<Vec<BigInt>> {
    let base = &points[subset[0]].0;
    let rows: Vec<Vec<BigRational>> = subset[1..]
        .iter()
        .map(|&i| {
            points[i]
                .0
                .iter()
                .zip(base)
                .map(|(&a, &b)| BigRational::from_integer(BigInt::from(a) - BigInt::from(b)))
                .collect()
        })
        .collect();
    let mut normal: Vec<BigInt> = (0..dim)
        .map(|j| {
            let minor: Vec<Vec<BigRational>> = rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(c, _)| *c != j)
                        .map(|(_, v)| v.clone())
                        .collect()
                })
                .collect();
            let d = rational_det(minor).to_integer();
            if j % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    let g = normal.iter().fold(BigInt::zero(), |g, a| g.gcd(a));
    if g.is_zero() {
        return None;
    }
    for a in &mut normal {
        *a = &*a / &g;
    }
    Some(normal)
}

fn check_all_vertices(dim: usize, points: &[LatticePoint], facets: &[HullFacet]) -> Result<(), PolytopeError> {
    for index in 0..points.len() {
        let normals: Vec<Vec<BigRational>> = facets
            .iter()
            .filter(|f| f.vertices.contains(&index))
            .map(|f| f.normal.iter().map(|a| BigRational::from_integer(a.clone())).collect())
            .collect();
        if rational_rank(normals) < dim {
            return Err(PolytopeError::NotAVertex { index });
        }
    }
    Ok(())
}

/// Calls `f` with every strictly increasing `k`-subset of `0..n`, in
/// lexicographic order.
pub(crate) fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_are_lexicographic() {
        let mut seen = Vec::new();
        for_each_combination(4, 2, |c| seen.push(c.to_vec()));
        assert_eq!(
            seen,
            vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]
        );
        let mut count = 0;
        for_each_combination(3, 0, |_| count += 1);
        assert_eq!(count, 1);
    }

    #[test]
    fn gift_wrap_is_counter_clockwise() {
        let pts: Vec<LatticePoint> = [[-2, -1], [2, 1], [-2, 1], [2, -1]]
            .iter()
            .map(|p| LatticePoint(p.to_vec()))
            .collect();
        let f = gift_wrap(&pts);
        let order: Vec<usize> = f.iter().map(|e| e.vertices[0]).collect();
        assert_eq!(order, vec![0, 3, 1, 2]);
        let offsets: Vec<BigInt> = f.iter().map(|e| e.offset.clone()).collect();
        assert_eq!(offsets, [1, 2, 1, 2].map(BigInt::from).to_vec());
        assert_eq!(f[0].normal, vec![BigInt::from(0), BigInt::from(-1)]);
    }
}
