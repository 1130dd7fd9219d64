//! Property tests for structural invariants across modules.

use std::sync::Arc;

use num_complex::Complex64;
use proptest::prelude::*;

use elastodg::assembly::{assemble_dg_matrix, assemble_fem_matrix};
use elastodg::manufactured::{exact_fields, exact_u, FieldSample, ProblemParams, R_GUARD};
use elastodg::mesh::{Mesh, Point};
use elastodg::norms::{error_vs_exact, norms_of};
use elastodg::quadrature::triangle_rule;
use elastodg::solver::{relative_residual, solve, SolveMethod, SolverOptions};
use elastodg::space::VectorP1Space;
use elastodg::{DgField, DgSpace, FemField, FemSpace};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn mesh(n: usize) -> Arc<Mesh> {
    Arc::new(Mesh::build_uniform(n).unwrap())
}

fn coeffs(seed: &[(f64, f64)], len: usize) -> Vec<Complex64> {
    (0..len)
        .map(|k| {
            let (a, b) = seed[k % seed.len()];
            c(a + 0.1 * (k as f64).sin(), b - 0.05 * (k as f64).cos())
        })
        .collect()
}

fn seeds() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 7..13)
}

/// Neumaier summation.
fn compensated_sum(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        comp += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + comp
}

fn max_rel_diff(a: &FieldSample, b: &FieldSample) -> f64 {
    let mut pairs: Vec<(Complex64, Complex64)> = Vec::new();
    for i in 0..2 {
        pairs.push((a.u[i], b.u[i]));
        pairs.push((a.div_stress[i], b.div_stress[i]));
        for j in 0..2 {
            pairs.push((a.grad_u[i][j], b.grad_u[i][j]));
            pairs.push((a.stress[i][j], b.stress[i][j]));
        }
    }
    let scale = pairs.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
    pairs.iter().map(|p| (p.0 - p.1).norm()).fold(0.0, f64::max) / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mesh_areas_sum_to_one(n in 1usize..60) {
        let m = mesh(n);
        let total = compensated_sum((0..m.n_elements()).map(|e| m.signed_area(e)));
        prop_assert!((total - 1.0).abs() < 1e-14);
        prop_assert!((0..m.n_elements()).all(|e| m.signed_area(e) > 0.0));
    }

    #[test]
    fn interior_normals_point_into_minus_element(n in 1usize..20) {
        let m = mesh(n);
        for edge in &m.interior_edges {
            let minus = edge.minus_element.unwrap();
            let g = m.geometry(minus);
            let centroid = g.point([1.0 / 3.0; 3]);
            let mid = {
                let (a, b) = (m.vertices[edge.endpoints[0]], m.vertices[edge.endpoints[1]]);
                [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0]
            };
            // The minus element's outward normal points from its centroid to the edge.
            let outward_minus = [mid[0] - centroid[0], mid[1] - centroid[1]];
            prop_assert!(edge.normal[0] * outward_minus[0] + edge.normal[1] * outward_minus[1] < 0.0);
        }
    }

    #[test]
    fn mesh_build_is_deterministic(n in 1usize..24) {
        prop_assert_eq!(mesh(n).to_text(), mesh(n).to_text());
    }

    #[test]
    fn push_forward_integrates_affine_functions(
        pts in prop::array::uniform3((-2.0..2.0f64, -2.0..2.0f64)),
        degree in 0usize..=12,
        a in -1.0..1.0f64,
        b in -1.0..1.0f64,
    ) {
        let v: [Point; 3] = pts.map(|(x, y)| [x, y]);
        let area = 0.5 * ((v[1][0] - v[0][0]) * (v[2][1] - v[0][1]) - (v[2][0] - v[0][0]) * (v[1][1] - v[0][1])).abs();
        prop_assume!(area > 1e-3);
        let rule = triangle_rule(degree).unwrap();
        let mut constant = 0.0;
        let mut linear = 0.0;
        for (bary, w) in rule.barycentric() {
            let x = [0, 1].map(|k| bary[0] * v[0][k] + bary[1] * v[1][k] + bary[2] * v[2][k]);
            constant += w * 2.0 * area;
            linear += w * 2.0 * area * (a * x[0] + b * x[1]);
        }
        let centroid = [0, 1].map(|k| (v[0][k] + v[1][k] + v[2][k]) / 3.0);
        prop_assert!((constant - area).abs() <= 1e-13 * area.max(1.0));
        let expected = area * (a * centroid[0] + b * centroid[1]);
        if degree >= 1 {
            prop_assert!((linear - expected).abs() <= 1e-13 * area.max(1.0));
        }
    }

    #[test]
    fn series_and_closed_form_agree_at_switch(omega in 1.0..200.0f64, angle in 0.0..std::f64::consts::TAU) {
        let p = ProblemParams::standard(omega);
        let r = 0.25 / omega;
        let at = |rr: f64| exact_fields([rr * angle.cos(), rr * angle.sin()], &p);
        let d = max_rel_diff(&at(r * (1.0 - 1e-13)), &at(r * (1.0 + 1e-13)));
        prop_assert!(d <= 1e-10, "relative jump {d:e}");
    }

    #[test]
    fn series_and_closed_form_agree_at_guard(omega in 2600.0..5000.0f64, angle in 0.0..std::f64::consts::TAU) {
        let p = ProblemParams::standard(omega);
        let at = |rr: f64| exact_fields([rr * angle.cos(), rr * angle.sin()], &p);
        let d = max_rel_diff(&at(R_GUARD * (1.0 - 1e-13)), &at(R_GUARD * (1.0 + 1e-13)));
        prop_assert!(d <= 1e-10, "relative jump {d:e}");
    }

    #[test]
    fn rigid_motions_have_no_energy(
        n in 1usize..10,
        c0 in (-1.0..1.0f64, -1.0..1.0f64),
        c1 in (-1.0..1.0f64, -1.0..1.0f64),
        b in (-1.0..1.0f64, -1.0..1.0f64),
    ) {
        let p = ProblemParams::standard(3.0);
        let (k0, k1, kb) = (c(c0.0, c0.1), c(c1.0, c1.1), c(b.0, b.1));
        let v = DgField::interpolate(DgSpace::new(mesh(n)), |x| [k0 - kb * x[1], k1 + kb * x[0]]).unwrap();
        let r = norms_of(&v, &p);
        let scale = r.l2_domain.max(1e-300);
        prop_assert!(r.seminorm_1h <= 1e-12 * scale);
        prop_assert!(r.j0.sqrt() <= 1e-12 * scale && r.j1.sqrt() <= 1e-12 * scale);
        for e in 0..v.mesh().n_elements() {
            prop_assert_eq!(v.element_div_stress(e), [c(0.0, 0.0); 2]);
        }
    }

    #[test]
    fn dg_rows_have_at_most_24_entries(n in 1usize..12, omega in 0.5..50.0f64) {
        let m = assemble_dg_matrix(&DgSpace::new(mesh(n)), &ProblemParams::standard(omega)).unwrap();
        prop_assert!(m.max_row_nnz() <= 24);
    }

    #[test]
    fn fem_equals_dg_on_conforming_fields(n in 1usize..8, omega in 0.5..30.0f64, s in seeds()) {
        // The normal-stress penalty does not vanish on conforming fields.
        let p = ProblemParams { gamma1: 0.0, ..ProblemParams::standard(omega) };
        let m = mesh(n);
        let fem = FemSpace::new(m.clone());
        let v = FemField::new(fem.clone(), coeffs(&s, fem.n_dofs())).unwrap();
        let qf = assemble_fem_matrix(&fem, &p).unwrap().quadratic_form(v.coeffs());
        let qd = assemble_dg_matrix(&DgSpace::new(m), &p).unwrap().quadratic_form(v.to_dg().coeffs());
        prop_assert!((qf - qd).norm() <= 1e-12 * qf.norm().max(qd.norm()));
    }

    #[test]
    fn direct_solves_are_certified_and_deterministic(n in 1usize..7, omega in 0.5..40.0f64, s in seeds()) {
        let space = DgSpace::new(mesh(n));
        let a = assemble_dg_matrix(&space, &ProblemParams::standard(omega)).unwrap();
        let b = coeffs(&s, space.n_dofs());
        let opts = SolverOptions::with_method(SolveMethod::Direct, 1e-10);
        let first = solve(&a, &b, &opts).unwrap();
        let second = solve(&a, &b, &opts).unwrap();
        prop_assert_eq!(&first.solution, &second.solution);
        prop_assert_eq!(first.relative_residual, relative_residual(&a, &first.solution, &b));
        prop_assert!(first.relative_residual <= 1e-10);
    }

    #[test]
    fn error_triangle_inequality(n in 1usize..8, omega in 1.0..20.0f64, s in seeds()) {
        let p = ProblemParams::standard(omega);
        let space = DgSpace::new(mesh(n));
        let interp = DgField::interpolate(space.clone(), |x| exact_u(x, &p)).unwrap();
        let uh = DgField::new(space.clone(), coeffs(&s, space.n_dofs())).unwrap();
        let e_uh = error_vs_exact(&uh, &p, 10).unwrap();
        let e_int = error_vs_exact(&interp, &p, 10).unwrap();
        let d = norms_of(&interp.axpy(c(-1.0, 0.0), &uh), &p);
        for (a, b, cc) in [
            (e_uh.seminorm_1h, e_int.seminorm_1h, d.seminorm_1h),
            (e_uh.norm_1h, e_int.norm_1h, d.norm_1h),
            (e_uh.l2_domain, e_int.l2_domain, d.l2_domain),
        ] {
            prop_assert!(a <= b + cc + 1e-12 * (b + cc));
        }
        let zero = norms_of(&interp.axpy(c(-1.0, 0.0), &interp), &p);
        prop_assert_eq!(zero.triple_norm_1h, 0.0);
        prop_assert_eq!(zero.l2_domain, 0.0);
    }
}
