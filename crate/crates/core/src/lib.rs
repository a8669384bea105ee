//! Toric Fano orbifolds and their Kähler-Ricci solitons, reduced to convex
//! analysis on the moment polytope.
//!
//! The crate is `no_std` (it needs `alloc`). Everything combinatorial is done
//! in exact rational arithmetic; floating point only enters through the
//! quadrature, the Legendre inversion and the Monge-Ampère solver.
//!
//! Module map:
//!
//! - [`polytope`]: lattice polytopes `Q`, Fano validation, the dual polytope
//!   `P`, its triangulation, barycenter and support function.
//! - [`integrals`]: exact monomial moments and quadrature for
//!   `∫_P e^{⟨s,y⟩} dy` together with its first two derivatives.
//! - [`soliton`]: the soliton vector (the minimizer of that integral) and the
//!   exact Futaki test.
//! - [`guillemin`]: the canonical symplectic potential `u⁰ = Σ lᵢ log lᵢ`, its
//!   Legendre transform `φ⁰` and the boundedness scans.
//! - [`ma`]: the two-dimensional continuity-method solver for
//!   `det D²φ = exp(-c - tφ - (1-t)φ⁰ - ⟨c_vec, Dφ⟩)`.

#![no_std]

extern crate alloc;

pub mod banded;
pub mod guillemin;
pub mod integrals;
pub mod linalg;
pub mod ma;
pub(crate) mod math;
pub mod polytope;
pub mod quadrature;
pub mod soliton;

pub use guillemin::{GuilleminPotential, LegendrePoint, ScanReport};
pub use integrals::ExpMomentResult;
pub use polytope::{DualPolytope, FanoReport, LatticePoint, LatticePolytope, RationalPoint};
pub use soliton::SolitonVector;
