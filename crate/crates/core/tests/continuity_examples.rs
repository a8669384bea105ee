//! Continuity paths on the paper's examples at desk-test sizes.

use toricsol_core::ma::{
    continuity_solve, verify_solution, BoundaryMode, ContinuitySchedule, Grid, MaProblem, NewtonOptions,
};
use toricsol_core::soliton::solve_soliton_vector;
use toricsol_core::LatticePolytope;

#[test]
fn example_4_1_reaches_the_soliton() {
    let p = LatticePolytope::new(2, vec![vec![1, 0], vec![0, 1], vec![-2, -1]])
        .unwrap()
        .dual();
    let c = solve_soliton_vector(&p, 1e-10).unwrap().c;
    let grid = Grid::new(4.0, 41).unwrap();
    let problem = MaProblem::from_polytope(&p, grid, &c, BoundaryMode::Asymptotic, 1e-12).unwrap();
    let tol = 1e-8;
    let opts = NewtonOptions {
        tol,
        ..Default::default()
    };
    let path = continuity_solve(&problem, &ContinuitySchedule::default(), &opts).unwrap();
    assert_eq!(path.len(), 15);
    for s in &path {
        let v = verify_solution(&problem, s, tol);
        assert!(v.residual_ok && v.convex && v.contained, "t = {}: {v:?}", s.t);
        assert!(s.m_t.is_finite() && s.sup_phi_minus_phi0.is_finite() && s.inf_phi_minus_phi0.is_finite());
    }
    let last = path.last().unwrap();
    assert_eq!(last.t, 1.0);
    assert!(verify_solution(&problem, last, tol).containment_margin > 0.0);
    // the minimum of φ moves off the origin against the soliton drift
    assert!(last.x_t[0] < 0.0);
}

#[test]
fn example_4_2_path_with_reference_data() {
    // φ⁰ has constant log det D²φ⁰ + φ⁰ here, so both boundary modes agree
    let p = LatticePolytope::new(2, vec![vec![-2, -1], vec![-2, 1], vec![2, -1], vec![2, 1]])
        .unwrap()
        .dual();
    let grid = Grid::new(4.0, 41).unwrap();
    let a = MaProblem::from_polytope(&p, grid, &[0.0, 0.0], BoundaryMode::Asymptotic, 1e-12).unwrap();
    let b = MaProblem::from_polytope(&p, grid, &[0.0, 0.0], BoundaryMode::Reference, 1e-12).unwrap();
    let slope = a.boundary_slope.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    assert!(slope < 1e-9, "{slope}");
    let sched = ContinuitySchedule::new(0.3, 0.35).unwrap();
    let opts = NewtonOptions::default();
    let pa = continuity_solve(&a, &sched, &opts).unwrap();
    let pb = continuity_solve(&b, &sched, &opts).unwrap();
    let diff = pa
        .last()
        .unwrap()
        .phi
        .iter()
        .zip(&pb.last().unwrap().phi)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff < 1e-8, "{diff}");
}
