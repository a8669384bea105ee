//! Exact lattice-polytope geometry.
//!
//! A toric Fano orbifold is described by a lattice polytope `Q ⊂ N_ℝ` whose
//! vertices `n⁽ⁱ⁾` are primitive and whose facets are simplices. Its dual
//! `P = {y : ⟨y, n⁽ⁱ⁾⟩ + 1 ≥ 0}` is the moment polytope. All of this module
//! works over `BigRational`; nothing here rounds.

mod dual;
mod hull;

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

pub use dual::{enumerate_vertices, DualPolytope, Simplex};
pub(crate) use hull::for_each_combination;
pub use hull::HullFacet;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PolytopeError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("vertex list is empty")]
    NoVertices,
    #[error("vertex {index} has {found} coordinates, expected {expected}")]
    CoordinateCount {
        index: usize,
        found: usize,
        expected: usize,
    },
    #[error("vertices {first} and {second} coincide")]
    DuplicateVertex { first: usize, second: usize },
    #[error("the origin is not an interior point of the convex hull")]
    OriginNotInterior,
    #[error("point {index} is not a vertex of its convex hull")]
    NotAVertex { index: usize },
}

/// A point of the lattice `N ≅ ℤⁿ`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint(pub Vec<i64>);

impl LatticePoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// gcd of the coordinates; a lattice vector is primitive iff this is 1.
    pub fn content(&self) -> i64 {
        self.0.iter().fold(0i64, |g, &c| g.gcd(&c))
    }

    pub fn to_rational(&self) -> Vec<BigRational> {
        self.0
            .iter()
            .map(|&c| BigRational::from_integer(BigInt::from(c)))
            .collect()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&c| c as f64).collect()
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// A point with exact rational coordinates (dual vertices are rarely integral).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RationalPoint(pub Vec<BigRational>);

impl RationalPoint {
    pub fn origin(dim: usize) -> Self {
        Self(alloc::vec![BigRational::zero(); dim])
    }

    pub fn from_integers(coords: &[i64]) -> Self {
        Self(
            coords
                .iter()
                .map(|&c| BigRational::from_integer(BigInt::from(c)))
                .collect(),
        )
    }

    pub fn from_ratios(coords: &[(i64, i64)]) -> Self {
        Self(
            coords
                .iter()
                .map(|&(p, q)| BigRational::new(BigInt::from(p), BigInt::from(q)))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_integral(&self) -> bool {
        self.0.iter().all(|c| c.is_integer())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// The polytope `Q`: its vertices are the fan generators `n⁽ⁱ⁾`.
///
/// Construction checks that the listed points are exactly the vertices of
/// their convex hull and that the origin is interior; points that are not
/// hull vertices are rejected instead of dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePolytope {
    dim: usize,
    vertices: Vec<LatticePoint>,
    facets: Vec<HullFacet>,
}

impl LatticePolytope {
    pub fn new(dim: usize, vertices: Vec<Vec<i64>>) -> Result<Self, PolytopeError> {
        if dim == 0 {
            return Err(PolytopeError::ZeroDimension);
        }
        if vertices.is_empty() {
            return Err(PolytopeError::NoVertices);
        }
        for (index, v) in vertices.iter().enumerate() {
            if v.len() != dim {
                return Err(PolytopeError::CoordinateCount {
                    index,
                    found: v.len(),
                    expected: dim,
                });
            }
        }
        for first in 0..vertices.len() {
            for second in first + 1..vertices.len() {
                if vertices[first] == vertices[second] {
                    return Err(PolytopeError::DuplicateVertex { first, second });
                }
            }
        }
        let vertices: Vec<LatticePoint> = vertices.into_iter().map(LatticePoint).collect();
        let facets = hull::facets(dim, &vertices)?;
        Ok(Self { dim, vertices, facets })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[LatticePoint] {
        &self.vertices
    }

    pub fn facets(&self) -> &[HullFacet] {
        &self.facets
    }

    /// Vertex-index tuples of the facets of `Q` (counter-clockwise in 2-D).
    pub fn facet_complex(&self) -> Vec<Vec<usize>> {
        self.facets.iter().map(|f| f.vertices.clone()).collect()
    }

    pub fn dual(&self) -> DualPolytope {
        DualPolytope::from_normals(self.dim, self.vertices.clone()).expect("a validated polytope has a bounded dual")
    }

    /// Structural Fano checks plus the Gorenstein data of the dual.
    pub fn validate_toric_fano(&self) -> FanoReport {
        let dual = self.dual();
        self.fano_report_with(&dual)
    }

    pub fn fano_report_with(&self, dual: &DualPolytope) -> FanoReport {
        let mut failures = Vec::new();
        let origin_interior = self.facets.iter().all(|f| f.offset > BigInt::zero());
        if !origin_interior {
            failures.push(String::from("origin is not interior to Q"));
        }
        let mut vertices_primitive = true;
        for v in &self.vertices {
            let g = v.content();
            if g != 1 {
                vertices_primitive = false;
                failures.push(format!("vertex {v} is not primitive (gcd {g})"));
            }
        }
        let mut faces_simplicial = true;
        for f in &self.facets {
            if f.vertices.len() != self.dim {
                faces_simplicial = false;
                failures.push(format!(
                    "facet {:?} has {} vertices, a simplex needs {}",
                    f.vertices,
                    f.vertices.len(),
                    self.dim
                ));
            }
        }
        let (is_gorenstein, gorenstein_index) = dual.gorenstein();
        let mut notes = Vec::new();
        if self.dim >= 3 {
            notes.push(String::from(
                "simpliciality is checked on facets (exactly n vertices each); lower faces of a simplex are simplices",
            ));
        }
        FanoReport {
            is_fano: origin_interior && vertices_primitive && faces_simplicial,
            origin_interior,
            vertices_primitive,
            faces_simplicial,
            is_gorenstein,
            gorenstein_index,
            failures,
            notes,
        }
    }
}

/// Result of [`LatticePolytope::validate_toric_fano`]. Findings are reported,
/// never raised.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FanoReport {
    pub is_fano: bool,
    pub origin_interior: bool,
    pub vertices_primitive: bool,
    pub faces_simplicial: bool,
    pub is_gorenstein: bool,
    pub gorenstein_index: u64,
    pub failures: Vec<String>,
    pub notes: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn example_4_1() -> LatticePolytope {
        LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-2, -1]]).unwrap()
    }

    pub(crate) fn example_4_2() -> LatticePolytope {
        LatticePolytope::new(2, vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]]).unwrap()
    }

    #[test]
    fn parses_paper_examples() {
        let q = example_4_1();
        assert_eq!(q.facet_complex().len(), 3);
        let q = example_4_2();
        assert_eq!(q.facet_complex().len(), 4);
        for f in q.facet_complex() {
            assert_eq!(f.len(), 2);
        }
    }

    #[test]
    fn rejects_degenerate_and_bad_input() {
        assert_eq!(
            LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1]]).unwrap_err(),
            PolytopeError::OriginNotInterior
        );
        assert_eq!(
            LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![1, 1]]).unwrap_err(),
            PolytopeError::OriginNotInterior
        );
        assert_eq!(
            LatticePolytope::new(0, vec![]).unwrap_err(),
            PolytopeError::ZeroDimension
        );
        assert!(matches!(
            LatticePolytope::new(2, vec![vec![1, 0, 0]]),
            Err(PolytopeError::CoordinateCount { index: 0, .. })
        ));
        // (0,-1) lies on the edge between (1,-1) and (-1,-1).
        assert_eq!(
            LatticePolytope::new(2, vec![vec![1, -1], vec![0, -1], vec![-1, -1], vec![0, 1]]).unwrap_err(),
            PolytopeError::NotAVertex { index: 1 }
        );
        // interior point
        assert_eq!(
            LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, -1], vec![0, 0]]).unwrap_err(),
            PolytopeError::NotAVertex { index: 3 }
        );
        assert!(matches!(
            LatticePolytope::new(2, vec![vec![1, 0], vec![1, 0], vec![-1, -1]]),
            Err(PolytopeError::DuplicateVertex { .. })
        ));
    }

    #[test]
    fn fano_reports_for_examples() {
        let r = example_4_1().validate_toric_fano();
        assert!(r.is_fano && r.is_gorenstein);
        assert_eq!(r.gorenstein_index, 1);
        let r = example_4_2().validate_toric_fano();
        assert!(r.is_fano);
        assert!(!r.is_gorenstein);
        assert_eq!(r.gorenstein_index, 2);
        let square = LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-1, 0], vec![0, -1]]).unwrap();
        let r = square.validate_toric_fano();
        assert!(r.is_fano && r.vertices_primitive && r.failures.is_empty());
    }

    #[test]
    fn non_primitive_vertex_is_reported() {
        let q = LatticePolytope::new(2, vec![vec![2, 0], vec![0, 1], vec![-1, -1]]).unwrap();
        let r = q.validate_toric_fano();
        assert!(!r.vertices_primitive && !r.is_fano);
        assert_eq!(r.failures.len(), 1);
    }

    #[test]
    fn non_simplicial_facet_in_three_dimensions() {
        // Octahedron's dual: the cube with vertices (±1,±1,±1) has square facets.
        let mut verts = Vec::new();
        for a in [-1, 1] {
            for b in [-1, 1] {
                for c in [-1, 1] {
                    verts.push(vec![a, b, c]);
                }
            }
        }
        let cube = LatticePolytope::new(3, verts).unwrap();
        assert_eq!(cube.facets().len(), 6);
        let r = cube.validate_toric_fano();
        assert!(!r.faces_simplicial && !r.is_fano);
        let octa = LatticePolytope::new(
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
        let r = octa.validate_toric_fano();
        assert!(r.is_fano && r.is_gorenstein);
        assert_eq!(octa.facets().len(), 8);
    }

    #[test]
    fn one_dimensional_segment() {
        let q = LatticePolytope::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert!(q.validate_toric_fano().is_fano);
        let p = q.dual();
        assert_eq!(p.vertices().len(), 2);
        assert_eq!(
            LatticePolytope::new(1, vec![vec![1], vec![-1], vec![0]]).unwrap_err(),
            PolytopeError::NotAVertex { index: 2 }
        );
    }
}
