//! Acceptance suite. Runs every criterion at its stated tolerance, prints
//! one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use elastodg::assembly::{apply_form, assemble_dg_matrix, assemble_elliptic_projection, consistency_residual};
use elastodg::experiments::{
    run_compare, run_convergence, run_pollution, run_stability, Discretization, ExperimentConfig, MeshRule,
    MethodSelection, Study,
};
use elastodg::manufactured::{self_check, ProblemParams};
use elastodg::norms::{flux_pairing, norms_of};
use elastodg::solver::{solve_system, SolverOptions};
use elastodg::space::{Difference, ExactSolution, VectorP1Space};
use elastodg::sparse::norm2;
use elastodg::{DgField, DgSpace, Mesh};

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn space(n: usize) -> DgSpace {
    DgSpace::new(Arc::new(Mesh::build_uniform(n).unwrap()))
}

fn random_coeffs(rng: &mut StdRng, len: usize) -> Vec<Complex64> {
    (0..len).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

fn random_field(rng: &mut StdRng, s: &DgSpace) -> DgField {
    DgField::new(s.clone(), random_coeffs(rng, s.n_dofs())).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

const OMEGAS: [f64; 3] = [1.0, 10.0, 100.0];

fn imaginary_identity() -> Outcome {
    let s = space(8);
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for omega in OMEGAS {
        let p = ProblemParams::standard(omega);
        let m = assemble_dg_matrix(&s, &p).unwrap();
        for _ in 0..100 {
            let v = random_field(&mut rng, &s);
            let lhs = m.quadratic_form(v.coeffs()).im;
            let r = norms_of(&v, &p);
            let rhs = r.j0 + r.j1 + omega * r.boundary_impedance;
            worst = worst.max((lhs - rhs).abs() / lhs.abs());
        }
    }
    check(worst <= 1e-12, format!("max relative deviation {worst:.2e} (tol 1e-12)"))
}

/// The terms on the right are sign-indefinite and cancel for random fields,
/// so the deviation is measured against the sum of their magnitudes. The
/// deviation relative to `|Re A_h(v, v)|` is reported alongside.
fn real_identity() -> Outcome {
    let s = space(8);
    let mut rng = StdRng::seed_from_u64(2);
    let (mut worst, mut worst_vs_lhs): (f64, f64) = (0.0, 0.0);
    for omega in OMEGAS {
        let p = ProblemParams::standard(omega);
        let m = assemble_dg_matrix(&s, &p).unwrap();
        for _ in 0..100 {
            let v = random_field(&mut rng, &s);
            let lhs = m.quadratic_form(v.coeffs()).re;
            let r = norms_of(&v, &p);
            let terms = [
                r.seminorm_1h.powi(2),
                -omega * omega * p.rho * r.l2_domain.powi(2),
                -2.0 * flux_pairing(&v, &p).re,
            ];
            let rhs: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|t| t.abs()).sum();
            worst = worst.max((lhs - rhs).abs() / scale);
            worst_vs_lhs = worst_vs_lhs.max((lhs - rhs).abs() / lhs.abs());
        }
    }
    check(
        worst <= 1e-12,
        format!("max deviation / term scale {worst:.2e} (tol 1e-12); max deviation / |Re A_h| {worst_vs_lhs:.2e}"),
    )
}

fn hermitian_split() -> Outcome {
    let s = space(8);
    let mut rng = StdRng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    for omega in OMEGAS {
        let m = assemble_dg_matrix(&s, &ProblemParams::standard(omega)).unwrap();
        // H2 = (M - M^*) / (2i)
        let h2 = m.linear_combination(c(0.0, -0.5), &m.adjoint(), c(0.0, 0.5));
        for _ in 0..100 {
            let z = random_coeffs(&mut rng, s.n_dofs());
            let q = h2.quadratic_form(&z).re / norm2(&z).powi(2);
            worst = worst.min(q);
        }
    }
    check(worst >= -1e-12, format!("min Re(z* H2 z)/|z|^2 = {worst:.3e} (tol -1e-12)"))
}

fn galerkin_orthogonality() -> Outcome {
    let s = space(16);
    let p = ProblemParams::standard(5.0);
    let exact = ExactSolution { params: p };
    let system = assemble_elliptic_projection(&s, &p, &exact, 10).unwrap();
    let opts = SolverOptions::with_method(elastodg::solver::SolveMethod::Direct, 1e-12);
    let proj = DgField::new(s.clone(), solve_system(&system, &opts).unwrap().solution).unwrap();
    let diff = Difference {
        left: &exact,
        right: &proj,
    };
    let scale = norm2(&system.rhs);
    let mut rng = StdRng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let v = random_field(&mut rng, &s);
        let residual = apply_form(&p, &diff, &v, 10).unwrap().coercive(&p).norm();
        worst = worst.max(residual / (scale * norm2(v.coeffs())));
    }
    check(worst <= 1e-9, format!("max |residual| / (|rhs| |v|) = {worst:.2e} (tol 1e-9)"))
}

fn norm_ordering() -> Outcome {
    let s = space(8);
    let p = ProblemParams::standard(10.0);
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let r = norms_of(&random_field(&mut rng, &s), &p);
        worst = worst.max((r.norm_1h - r.triple_norm_1h) / r.triple_norm_1h);
    }
    check(worst <= 1e-14, format!("max (norm - triple norm)/triple norm = {worst:.2e}"))
}

fn consistency() -> Outcome {
    let mesh = Arc::new(Mesh::build_uniform(8).unwrap());
    let p = ProblemParams::standard(5.0);
    let low = consistency_residual(&mesh, &p, 4).unwrap();
    let high = consistency_residual(&mesh, &p, 10).unwrap();
    check(low >= 10.0 * high, format!("degree 4: {low:.3e}, degree 10: {high:.3e}, drop {:.1}x", low / high))
}

fn config(study: Study, omegas: &[f64], ns: &[usize]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(study);
    cfg.omegas = omegas.to_vec();
    cfg.ns = ns.to_vec();
    cfg
}

fn convergence_rates() -> Outcome {
    let rep = run_convergence(&config(Study::Convergence, &[5.0], &[8, 16, 32, 64])).map_err(|e| e.to_string())?;
    let s = &rep.slopes[0];
    check(
        (s.h1_semi - 1.0).abs() <= 0.15 && (s.l2 - 2.0).abs() <= 0.25,
        format!("h1 seminorm slope {:.3} (1.0 +- 0.15), L2 slope {:.3} (2.0 +- 0.25)", s.h1_semi, s.l2),
    )
}

fn solvability() -> Outcome {
    let omegas = [1.0, 5.0, 10.0, 25.0, 50.0, 100.0, 150.0, 200.0];
    let mut cfg = config(Study::Stability, &omegas, &[20, 100]);
    cfg.methods = MethodSelection::Dg;
    let rep = run_stability(&cfg).map_err(|e| e.to_string())?;
    let worst = rep.records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let finite = rep.records.iter().all(|r| r.is_finite());
    check(
        rep.records.len() == 16 && worst <= 1e-10 && finite,
        format!("{} solves, max residual {worst:.2e}, all finite: {finite}", rep.records.len()),
    )
}

fn pollution_errors(rule: MeshRule) -> Result<Vec<(f64, usize, f64)>, String> {
    let mut cfg = config(Study::Pollution, &[10.0, 20.0, 40.0], &[]);
    cfg.rules = vec![rule];
    let records = run_pollution(&cfg).map_err(|e| e.to_string())?;
    Ok(records.iter().map(|r| (r.omega, r.n, r.rel_err_h1semi)).collect())
}

fn pollution_presence() -> Outcome {
    let e = pollution_errors(MeshRule::OmegaH(0.5))?;
    let mut inversions = 0;
    let mut large = false;
    for w in e.windows(2) {
        if w[1].2 < w[0].2 {
            inversions += 1;
            large |= w[1].2 < 0.95 * w[0].2;
        }
    }
    let list: Vec<String> = e.iter().map(|(w, n, err)| format!("omega={w} n={n}: {err:.4}")).collect();
    check(inversions <= 1 && !large, format!("{} ({inversions} inversions)", list.join(", ")))
}

fn pollution_elimination() -> Outcome {
    let e = pollution_errors(MeshRule::OmegaCubedHSquared(1.0))?;
    let (first, last) = (e[0], e[e.len() - 1]);
    let list: Vec<String> = e.iter().map(|(w, n, err)| format!("omega={w} n={n}: {err:.4}")).collect();
    check(
        last.0 == 40.0 && last.2 <= 1.5 * first.2,
        format!("{}, ratio {:.3} (tol 1.5)", list.join(", "), last.2 / first.2),
    )
}

fn dg_beats_fem() -> Outcome {
    let mut cfg = config(Study::Compare, &[100.0], &[120]);
    cfg.methods = MethodSelection::Both;
    let rep = run_compare(&cfg).map_err(|e| e.to_string())?;
    let err = |m| rep.records.iter().find(|r| r.method == m).map(|r| r.rel_err_l2).unwrap();
    let (dg, fem) = (err(Discretization::Dg), err(Discretization::Fem));
    check(dg < fem, format!("relative L2 error dg {dg:.4}, fem {fem:.4}"))
}

fn manufactured_self_check() -> Outcome {
    let r = self_check(&ProblemParams::standard(5.0), 100);
    check(r.max() < 1e-5, format!("max deviation {:.2e} over {} samples (tol 1e-5)", r.max(), r.samples))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("imaginary-part identity", imaginary_identity),
        ("real-part identity", real_identity),
        ("hermitian split", hermitian_split),
        ("galerkin orthogonality of the elliptic projection", galerkin_orthogonality),
        ("norm ordering", norm_ordering),
        ("consistency under quadrature refinement", consistency),
        ("convergence rates", convergence_rates),
        ("unconditional solvability", solvability),
        ("pollution presence under omega*h = 0.5", pollution_presence),
        ("pollution elimination under omega^3*h^2 = 1", pollution_elimination),
        ("dg beats fem at omega = 100, n = 120", dg_beats_fem),
        ("manufactured solution self-check", manufactured_self_check),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != k + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} [{secs:.1}s]", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} [{secs:.1}s]", k + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
