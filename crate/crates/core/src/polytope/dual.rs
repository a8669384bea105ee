//! The dual polytope `P = {y : lᵢ(y) ≥ 0}`, `lᵢ(y) = ⟨y, n⁽ⁱ⁾⟩ + 1`.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::hull::for_each_combination;
use super::{LatticePoint, PolytopeError, RationalPoint};
use crate::linalg::{rational_det, rational_rank, rational_solve};

/// One cell of the triangulation: `n + 1` exact points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Simplex {
    pub points: Vec<RationalPoint>,
}

impl Simplex {
    fn edge_rows(&self) -> Vec<Vec<BigRational>> {
        let base = &self.points[0].0;
        self.points[1..]
            .iter()
            .map(|p| p.0.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect()
    }

    /// `|det(p₁ - p₀, …, pₙ - p₀)| / n!`
    pub fn volume(&self) -> BigRational {
        let n = self.points.len() - 1;
        let factorial: BigInt = (1..=n as u64).map(BigInt::from).product();
        rational_det(self.edge_rows()).abs() / BigRational::from_integer(factorial)
    }

    pub fn centroid(&self) -> RationalPoint {
        let n = self.points[0].dim();
        let k = BigRational::from_integer(BigInt::from(self.points.len()));
        RationalPoint(
            (0..n)
                .map(|i| self.points.iter().map(|p| p.0[i].clone()).sum::<BigRational>() / &k)
                .collect(),
        )
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(RationalPoint::to_f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualPolytope {
    dim: usize,
    normals: Vec<LatticePoint>,
    vertices: Vec<RationalPoint>,
    vertex_facets: Vec<Vec<usize>>,
    simplices: Vec<Simplex>,
}

/// Vertices of `{y : ⟨y, aᵢ⟩ ≥ -1 ∀i}` by brute force over `dim`-subsets of
/// the constraints, each paired with the set of constraints tight at it.
/// Lexicographic order, except counter-clockwise about the origin in 2-D.
pub fn enumerate_vertices(dim: usize, normals: &[Vec<BigRational>]) -> Vec<(RationalPoint, Vec<usize>)> {
    let minus_one = -BigRational::one();
    let value = |y: &[BigRational], a: &[BigRational]| -> BigRational {
        y.iter().zip(a).map(|(u, v)| u * v).sum::<BigRational>() + BigRational::one()
    };
    let mut found: BTreeMap<Vec<BigRational>, ()> = BTreeMap::new();
    for_each_combination(normals.len(), dim, |subset| {
        let a: Vec<Vec<BigRational>> = subset.iter().map(|&i| normals[i].clone()).collect();
        let Some(y) = rational_solve(a, vec![minus_one.clone(); dim]) else {
            return;
        };
        if normals.iter().all(|n| !value(&y, n).is_negative()) {
            found.insert(y, ());
        }
    });
    let mut out: Vec<(RationalPoint, Vec<usize>)> = found
        .into_keys()
        .map(|y| {
            let tight = (0..normals.len())
                .filter(|&i| value(&y, &normals[i]).is_zero())
                .collect();
            (RationalPoint(y), tight)
        })
        .collect();
    if dim == 2 {
        out.sort_by(|a, b| angular_cmp(&a.0, &b.0));
    }
    out
}

/// Exact comparison of polar angles in `[0, 2π)` for nonzero plane points.
fn angular_cmp(a: &RationalPoint, b: &RationalPoint) -> Ordering {
    let upper = |p: &RationalPoint| p.0[1].is_positive() || (p.0[1].is_zero() && p.0[0].is_positive());
    match (upper(a), upper(b)) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        _ => {
            let cross = &a.0[0] * &b.0[1] - &a.0[1] * &b.0[0];
            if cross.is_positive() {
                Ordering::Less
            } else if cross.is_negative() {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        }
    }
}

fn affine_rank(points: &[&RationalPoint]) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let base = &points[0].0;
    rational_rank(
        points[1..]
            .iter()
            .map(|p| p.0.iter().zip(base).map(|(a, b)| a - b).collect())
            .collect(),
    )
}

impl DualPolytope {
    /// `P` from the fan generators. Fails when the constraints do not cut out a
    /// bounded full-dimensional polytope around the origin.
    pub fn from_normals(dim: usize, normals: Vec<LatticePoint>) -> Result<Self, PolytopeError> {
        let rational: Vec<Vec<BigRational>> = normals.iter().map(LatticePoint::to_rational).collect();
        let found = enumerate_vertices(dim, &rational);
        let (vertices, vertex_facets): (Vec<_>, Vec<_>) = found.into_iter().unzip();
        let refs: Vec<&RationalPoint> = vertices.iter().collect();
        if vertices.len() <= dim || affine_rank(&refs) < dim {
            return Err(PolytopeError::OriginNotInterior);
        }
        let mut p = Self {
            dim,
            normals,
            vertices,
            vertex_facets,
            simplices: Vec::new(),
        };
        p.simplices = p.triangulate();
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The `n⁽ⁱ⁾`; facet `i` is `lᵢ(y) = ⟨y, n⁽ⁱ⁾⟩ + 1 = 0`.
    pub fn normals(&self) -> &[LatticePoint] {
        &self.normals
    }

    pub fn vertices(&self) -> &[RationalPoint] {
        &self.vertices
    }

    /// Facets tight at each vertex, aligned with [`Self::vertices`].
    pub fn vertex_facets(&self) -> &[Vec<usize>] {
        &self.vertex_facets
    }

    pub fn simplices(&self) -> &[Simplex] {
        &self.simplices
    }

    pub fn facet_value(&self, i: usize, y: &RationalPoint) -> BigRational {
        self.normals[i]
            .0
            .iter()
            .zip(&y.0)
            .map(|(&a, b)| b * BigRational::from_integer(BigInt::from(a)))
            .sum::<BigRational>()
            + BigRational::one()
    }

    pub fn contains(&self, y: &RationalPoint) -> bool {
        (0..self.normals.len()).all(|i| !self.facet_value(i, y).is_negative())
    }

    pub fn normals_f64(&self) -> Vec<Vec<f64>> {
        self.normals.iter().map(LatticePoint::to_f64).collect()
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices.iter().map(RationalPoint::to_f64).collect()
    }

    /// Whether `P` is a lattice polytope, and the least `k ≥ 1` making `kP`
    /// one (lcm of vertex denominators).
    pub fn gorenstein(&self) -> (bool, u64) {
        let lcm = self
            .vertices
            .iter()
            .flat_map(|v| v.0.iter())
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        (lcm.is_one(), lcm.to_u64().unwrap_or(u64::MAX))
    }

    pub fn volume(&self) -> BigRational {
        self.simplices.iter().map(Simplex::volume).sum()
    }

    pub fn barycenter(&self) -> RationalPoint {
        let mut acc = vec![BigRational::zero(); self.dim];
        let mut total = BigRational::zero();
        for s in &self.simplices {
            let vol = s.volume();
            for (a, c) in acc.iter_mut().zip(s.centroid().0) {
                *a += &vol * c;
            }
            total += vol;
        }
        RationalPoint(acc.into_iter().map(|a| a / &total).collect())
    }

    /// `v(x) = max_k ⟨x, p⁽ᵏ⁾⟩`.
    pub fn support_function(&self, x: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|p| {
                p.0.iter()
                    .zip(x)
                    .map(|(c, xi)| c.to_f64().unwrap_or(f64::NAN) * xi)
                    .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Cone from the origin over each facet; faces are triangulated
    /// recursively by fanning from their first vertex.
    fn triangulate(&self) -> Vec<Simplex> {
        let mut out = Vec::new();
        for i in 0..self.normals.len() {
            let face: Vec<usize> = (0..self.vertices.len())
                .filter(|&k| self.vertex_facets[k].contains(&i))
                .collect();
            let refs: Vec<&RationalPoint> = face.iter().map(|&k| &self.vertices[k]).collect();
            if affine_rank(&refs) != self.dim - 1 {
                continue;
            }
            for cell in self.triangulate_face(&face, self.dim - 1) {
                let mut points = vec![RationalPoint::origin(self.dim)];
                points.extend(cell.into_iter().map(|k| self.vertices[k].clone()));
                out.push(Simplex { points });
            }
        }
        out
    }

    fn triangulate_face(&self, face: &[usize], face_dim: usize) -> Vec<Vec<usize>> {
        if face_dim == 0 {
            return vec![vec![face[0]]];
        }
        let apex = face[0];
        let mut ridges: BTreeSet<Vec<usize>> = BTreeSet::new();
        for j in 0..self.normals.len() {
            if self.vertex_facets[apex].contains(&j) {
                continue;
            }
            let sub: Vec<usize> = face
                .iter()
                .copied()
                .filter(|&k| self.vertex_facets[k].contains(&j))
                .collect();
            if sub.len() < face_dim {
                continue;
            }
            let refs: Vec<&RationalPoint> = sub.iter().map(|&k| &self.vertices[k]).collect();
            if affine_rank(&refs) == face_dim - 1 {
                ridges.insert(sub);
            }
        }
        let mut cells = Vec::new();
        for ridge in ridges {
            for mut cell in self.triangulate_face(&ridge, face_dim - 1) {
                cell.insert(0, apex);
                cells.push(cell);
            }
        }
        cells
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::LatticePolytope;
    use alloc::vec;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(BigInt::from(p), BigInt::from(q))
    }

    fn as_set(vs: &[RationalPoint]) -> BTreeSet<RationalPoint> {
        vs.iter().cloned().collect()
    }

    #[test]
    fn example_4_1_dual_vertices() {
        let q = LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-2, -1]]).unwrap();
        let p = q.dual();
        let expect: BTreeSet<RationalPoint> = [[-1, -1], [-1, 3], [1, -1]]
            .iter()
            .map(|c| RationalPoint::from_integers(c))
            .collect();
        assert_eq!(as_set(p.vertices()), expect);
        assert_eq!(p.gorenstein(), (true, 1));
        assert_eq!(p.barycenter(), RationalPoint(vec![r(-1, 3), r(1, 3)]));
        assert_eq!(p.volume(), r(4, 1));
        assert_eq!(p.support_function(&[1.0, 0.0]), 1.0);
        assert_eq!(p.support_function(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn example_4_2_dual() {
        let q = LatticePolytope::new(2, vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]]).unwrap();
        let p = q.dual();
        let expect: BTreeSet<RationalPoint> = [
            RationalPoint(vec![r(1, 2), r(0, 1)]),
            RationalPoint(vec![r(-1, 2), r(0, 1)]),
            RationalPoint::from_integers(&[0, 1]),
            RationalPoint::from_integers(&[0, -1]),
        ]
        .into_iter()
        .collect();
        assert_eq!(as_set(p.vertices()), expect);
        // the half-plane l₁ = -2y₁ - y₂ + 1 ≥ 0 comes from n⁽¹⁾ = (-2,-1)
        let y = RationalPoint::from_integers(&[3, 5]);
        assert_eq!(p.facet_value(0, &y), r(-10, 1));
        assert_eq!(p.gorenstein(), (false, 2));
        assert!(p.barycenter().is_zero());
        assert_eq!(p.volume(), r(1, 1));
    }

    #[test]
    fn cp2_dual() {
        let q = LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1]]).unwrap();
        let p = q.dual();
        let expect: BTreeSet<RationalPoint> = [[-1, -1], [2, -1], [-1, 2]]
            .iter()
            .map(|c| RationalPoint::from_integers(c))
            .collect();
        assert_eq!(as_set(p.vertices()), expect);
        assert_eq!(p.volume(), r(9, 2));
        assert!(p.barycenter().is_zero());
        assert_eq!(p.gorenstein(), (true, 1));
    }

    #[test]
    fn planar_vertices_are_counter_clockwise() {
        let q = LatticePolytope::new(2, vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]]).unwrap();
        let v = q.dual().vertices_f64();
        for k in 0..v.len() {
            let (a, b) = (&v[k], &v[(k + 1) % v.len()]);
            assert!(a[0] * b[1] - a[1] * b[0] > 0.0);
        }
    }

    #[test]
    fn cube_triangulation_in_three_dimensions() {
        // Q = octahedron, P = cube [-1,1]³ with volume 8.
        let q = LatticePolytope::new(
            3,
            vec![
                vec![1, 0, 0],
                vec![-1, 0, 0],
                vec![0, 1, 0],
                vec![0, -1, 0],
                vec![0, 0, 1],
                vec![0, 0, -1],
            ],
        )
        .unwrap();
        let p = q.dual();
        assert_eq!(p.vertices().len(), 8);
        // 6 square facets, 2 triangles each
        assert_eq!(p.simplices().len(), 12);
        assert_eq!(p.volume(), r(8, 1));
        assert!(p.barycenter().is_zero());
        // P of the cube Q is the octahedron |y|₁ ≤ 1, volume 4/3.
        let mut verts = Vec::new();
        for a in [-1, 1] {
            for b in [-1, 1] {
                for c in [-1, 1] {
                    verts.push(vec![a, b, c]);
                }
            }
        }
        let p = LatticePolytope::new(3, verts).unwrap().dual();
        assert_eq!(p.vertices().len(), 6);
        assert_eq!(p.volume(), r(4, 3));
    }

    #[test]
    fn simplices_have_disjoint_interiors_in_the_plane() {
        // Every simplex is a cone from the origin over one edge, so the edge
        // directions must sweep the full angle exactly once.
        let q = LatticePolytope::new(2, vec![vec![3, 1], vec![-1, 2], vec![-2, -1], vec![1, -3]]).unwrap();
        let p = q.dual();
        let total: f64 = p
            .simplices()
            .iter()
            .map(|s| {
                let v = s.to_f64();
                libm::atan2(
                    v[1][0] * v[2][1] - v[1][1] * v[2][0],
                    v[1][0] * v[2][0] + v[1][1] * v[2][1],
                )
                .abs()
            })
            .sum();
        assert!((total - 2.0 * core::f64::consts::PI).abs() < 1e-12);
    }
}
