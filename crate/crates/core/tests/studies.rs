//! End-to-end solves at the parameter sets used by the experiment studies.

use std::sync::Arc;

use num_complex::Complex64;

use elastodg::assembly::assemble_dg;
use elastodg::experiments::{
    run_compare, run_single, run_stability, write_csv, Discretization, ExperimentConfig, MethodSelection, Study,
    CSV_HEADER,
};
use elastodg::manufactured::ProblemParams;
use elastodg::solver::{solve_system, SolverOptions};
use elastodg::{DgSpace, Mesh};

fn config(study: Study, omegas: &[f64], ns: &[usize]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(study);
    cfg.omegas = omegas.to_vec();
    cfg.ns = ns.to_vec();
    cfg
}

#[test]
fn dg_residual_recomputed_independently() {
    let p = ProblemParams::standard(5.0);
    let system = assemble_dg(&DgSpace::new(Arc::new(Mesh::build_uniform(16).unwrap())), &p, 10).unwrap();
    let report = solve_system(&system, &SolverOptions::default()).unwrap();
    let a = &system.matrix;
    let mut r2 = 0.0;
    for i in 0..a.dim() {
        let start = a.row_ptr()[i];
        let end = a.row_ptr()[i + 1];
        let mut ax = Complex64::new(0.0, 0.0);
        for k in start..end {
            ax += a.values()[k] * report.solution[a.col_idx()[k]];
        }
        r2 += (system.rhs[i] - ax).norm_sqr();
    }
    let b2: f64 = system.rhs.iter().map(|v| v.norm_sqr()).sum();
    let residual = (r2 / b2).sqrt();
    assert!(residual <= 1e-10, "residual {residual:e}");
    assert!((residual - report.relative_residual).abs() <= 1e-3 * residual.max(1e-16));
}

#[test]
fn stability_sweep_on_coarse_mesh() {
    let mut cfg = config(Study::Stability, &(1..=200).map(f64::from).collect::<Vec<_>>(), &[20]);
    cfg.methods = MethodSelection::Dg;
    let rep = run_stability(&cfg).unwrap();
    assert_eq!(rep.records.len(), 200);
    assert!(rep.records.iter().all(|r| r.is_finite() && r.residual <= 1e-10));
    assert!(rep.smoothness[0].max_relative_jump.is_finite());
    let mut buf = Vec::new();
    write_csv(&rep.records, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 201);
}

#[test]
fn single_runs_at_figure_parameters() {
    let cfg = config(Study::Single, &[50.0], &[70]);
    let rep = run_single(&cfg, 50.0, 70, Discretization::Dg).unwrap();
    assert!(rep.outcome.record.residual <= 1e-10);
    assert!(rep.outcome.record.is_finite());
    let rep = run_single(&cfg, 100.0, 120, Discretization::Dg).unwrap();
    assert!(rep.outcome.record.residual <= 1e-10);
    assert!(rep.outcome.record.is_finite());
}

#[test]
fn fine_mesh_comparison_errors_are_close() {
    let mut cfg = config(Study::Compare, &[100.0], &[200]);
    cfg.methods = MethodSelection::Both;
    let rep = run_compare(&cfg).unwrap();
    let err = |m| rep.records.iter().find(|r| r.method == m).unwrap().rel_err_l2;
    let (dg, fem) = (err(Discretization::Dg), err(Discretization::Fem));
    assert!(dg.is_finite() && fem.is_finite());
    assert!(dg.max(fem) <= 3.0 * dg.min(fem), "dg {dg}, fem {fem}");
    let s = &rep.sections[0];
    assert_eq!(s.samples.len(), 1000);
    assert!(s.samples.iter().all(|p| p.dg.is_some() && p.fem.is_some()));
}
