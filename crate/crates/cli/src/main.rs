use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use elastodg::experiments::{
    parse_n_list, parse_omega_list, pollution_label, run_compare, run_convergence, run_pollution, run_single,
    run_stability, write_centroid_dump, write_cross_sections, write_csv, CrossSection, ExperimentConfig,
    ExperimentRecord, MeshRule, MethodSelection, Study,
};
use elastodg::plot::LinePlot;
use elastodg::solver::{SolveMethod, SolverOptions};

#[derive(Debug, Clone)]
struct Values<T>(Vec<T>);

fn omegas(s: &str) -> Result<Values<f64>, String> {
    parse_omega_list(s).map(Values)
}

fn sizes(s: &str) -> Result<Values<usize>, String> {
    parse_n_list(s).map(Values)
}

/// Experiment driver for the IP-DG and P1 FEM elastic Helmholtz solvers.
///
/// Lists accept comma-separated values and inclusive ranges `a:b[:step]`,
/// e.g. `--omega 1:200` or `--n 8,16,32,64`.
#[derive(Debug, Parser)]
#[command(name = "elastodg", version)]
struct Cli {
    /// stability | convergence | pollution | compare | single
    study: Study,
    /// Frequencies (default depends on the study).
    #[arg(long, value_parser = omegas)]
    omega: Option<Values<f64>>,
    /// Mesh sizes n, with h = 1/n (default depends on the study).
    #[arg(long, value_parser = sizes)]
    n: Option<Values<usize>>,
    /// Mesh rule for the pollution study, e.g. `omega*h=0.5` or
    /// `omega^3*h^2=1`. Repeatable.
    #[arg(long)]
    rule: Vec<MeshRule>,
    #[arg(long, default_value_t = 10.0)]
    gamma0: f64,
    #[arg(long, default_value_t = 0.1)]
    gamma1: f64,
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    mu: f64,
    /// Quadrature degree for loads and error norms.
    #[arg(long, default_value_t = 10)]
    quad: usize,
    /// Relative residual tolerance.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// dg | fem | both (default: both for stability and compare, dg otherwise).
    #[arg(long)]
    method: Option<MethodSelection>,
    /// auto | direct | iterative
    #[arg(long, default_value = "auto")]
    solver: SolveMethod,
    /// CSV output path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG line plot here.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Cross-section CSV for the compare study (default: next to --out).
    #[arg(long)]
    cross: Option<PathBuf>,
    /// Points along the diagonal in the compare study.
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Centroid dump of the solution in the single study.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn default_omegas(study: Study) -> Vec<f64> {
    match study {
        Study::Stability => (1..=200).map(f64::from).collect(),
        Study::Convergence => vec![5.0],
        Study::Pollution => vec![10.0, 20.0, 40.0],
        Study::Compare => vec![100.0],
        Study::Single => vec![50.0],
    }
}

fn default_ns(study: Study) -> Vec<usize> {
    match study {
        Study::Stability => vec![20, 100],
        Study::Convergence => vec![8, 16, 32, 64],
        Study::Pollution => Vec::new(),
        Study::Compare => vec![50, 120, 200],
        Study::Single => vec![70],
    }
}

fn default_rules() -> Vec<MeshRule> {
    vec![
        MeshRule::OmegaH(1.0),
        MeshRule::OmegaH(0.5),
        MeshRule::OmegaCubedHSquared(1.0),
    ]
}

fn config(cli: &Cli) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(cli.study);
    cfg.omegas = cli.omega.clone().map_or_else(|| default_omegas(cli.study), |v| v.0);
    cfg.ns = cli.n.clone().map_or_else(|| default_ns(cli.study), |v| v.0);
    cfg.rules = if cli.rule.is_empty() { default_rules() } else { cli.rule.clone() };
    cfg.params.gamma0 = cli.gamma0;
    cfg.params.gamma1 = cli.gamma1;
    cfg.params.rho = cli.rho;
    cfg.params.lambda = cli.lambda;
    cfg.params.mu = cli.mu;
    cfg.quad_degree = cli.quad;
    cfg.solver = SolverOptions::with_method(cli.solver, cli.tol);
    cfg.methods = cli.method.unwrap_or(match cli.study {
        Study::Stability | Study::Compare => MethodSelection::Both,
        _ => MethodSelection::Dg,
    });
    cfg.samples = cli.samples;
    cfg.seed = cli.seed;
    cfg
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn emit_records(cli: &Cli, records: &[ExperimentRecord]) -> Result<()> {
    match &cli.out {
        Some(path) => write_csv(records, create(path)?)?,
        None => write_csv(records, io::stdout().lock())?,
    }
    Ok(())
}

fn write_svg(path: &Path, plot: &LinePlot) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(plot.to_svg().as_bytes())?;
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

/// One series per distinct `key`, in first-seen order.
fn group<K: PartialEq + Clone>(
    records: &[ExperimentRecord],
    key: impl Fn(&ExperimentRecord) -> K,
    point: impl Fn(&ExperimentRecord) -> (f64, f64),
) -> Vec<(K, Vec<(f64, f64)>)> {
    let mut out: Vec<(K, Vec<(f64, f64)>)> = Vec::new();
    for r in records {
        let k = key(r);
        match out.iter_mut().find(|(g, _)| *g == k) {
            Some((_, pts)) => pts.push(point(r)),
            None => out.push((k, vec![point(r)])),
        }
    }
    out
}

fn section_svg_path(base: &Path, s: &CrossSection, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("cross");
    base.with_file_name(format!("{stem}.w{}.n{}.svg", s.omega, s.n))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(cli);
    match cli.study {
        Study::Stability => {
            let rep = run_stability(&cfg)?;
            emit_records(cli, &rep.records)?;
            for s in &rep.smoothness {
                eprintln!("{} n={}: max relative jump of norm_1h between frequencies {:.3e}", s.method, s.n, s.max_relative_jump);
            }
            if let Some(path) = &cli.svg {
                let mut plot = LinePlot::new("discrete solution norm", "omega", "norm_1h");
                for ((m, n), pts) in group(&rep.records, |r| (r.method, r.n), |r| (r.omega, r.norm_1h)) {
                    plot = plot.series(&format!("{m} h=1/{n}"), pts);
                }
                write_svg(path, &plot)?;
            }
        }
        Study::Convergence => {
            let rep = run_convergence(&cfg)?;
            emit_records(cli, &rep.records)?;
            for s in &rep.slopes {
                eprintln!("{} omega={}: slope h1 seminorm {:.3}, L2 {:.3}", s.method, s.omega, s.h1_semi, s.l2);
            }
            if let Some(path) = &cli.svg {
                let mut plot = LinePlot::new("relative errors", "h", "relative error");
                plot.log_log = true;
                for ((m, w), pts) in group(&rep.records, |r| (r.method, r.omega), |r| (r.h, r.rel_err_h1semi)) {
                    plot = plot.series(&format!("{m} omega={w} h1 seminorm"), pts);
                }
                for ((m, w), pts) in group(&rep.records, |r| (r.method, r.omega), |r| (r.h, r.rel_err_l2)) {
                    plot = plot.series(&format!("{m} omega={w} L2"), pts);
                }
                write_svg(path, &plot)?;
            }
        }
        Study::Pollution => {
            let records = run_pollution(&cfg)?;
            emit_records(cli, &records)?;
            for rule in &cfg.rules {
                let label = pollution_label(rule);
                for r in records.iter().filter(|r| r.study == label) {
                    eprintln!("{label} {} omega={} n={}: h1 seminorm error {:.4e}", r.method, r.omega, r.n, r.rel_err_h1semi);
                }
            }
            if let Some(path) = &cli.svg {
                let mut plot = LinePlot::new("pollution", "omega", "relative h1 seminorm error");
                for ((s, m), pts) in group(&records, |r| (r.study.clone(), r.method), |r| (r.omega, r.rel_err_h1semi)) {
                    plot = plot.series(&format!("{m} {s}"), pts);
                }
                write_svg(path, &plot)?;
            }
        }
        Study::Compare => {
            let rep = run_compare(&cfg)?;
            emit_records(cli, &rep.records)?;
            let cross = cli.cross.clone().or_else(|| cli.out.as_ref().map(|o| o.with_extension("cross.csv")));
            match cross {
                Some(path) => {
                    write_cross_sections(&rep.sections, create(&path)?)?;
                    eprintln!("wrote {}", path.display());
                }
                None => eprintln!("cross-sections not written (pass --cross or --out)"),
            }
            for r in &rep.records {
                eprintln!("{} omega={} n={}: relative L2 error {:.4e}", r.method, r.omega, r.n, r.rel_err_l2);
            }
            if let Some(path) = &cli.svg {
                let many = rep.sections.len() > 1;
                for s in &rep.sections {
                    let title = format!("|Re u| along y = x, omega={}, h=1/{}", s.omega, s.n);
                    let pick = |f: fn(&elastodg::experiments::CrossSample) -> Option<f64>| {
                        s.samples.iter().filter_map(|p| f(p).map(|v| (p.t, v))).collect::<Vec<_>>()
                    };
                    let mut plot = LinePlot::new(&title, "x", "|Re u|").series("exact", pick(|p| Some(p.exact)));
                    for (name, pts) in [("dg", pick(|p| p.dg)), ("fem", pick(|p| p.fem))] {
                        if !pts.is_empty() {
                            plot = plot.series(name, pts);
                        }
                    }
                    write_svg(&section_svg_path(path, s, many), &plot)?;
                }
            }
        }
        Study::Single => {
            let method = match cfg.methods {
                MethodSelection::Dg => elastodg::experiments::Discretization::Dg,
                MethodSelection::Fem => elastodg::experiments::Discretization::Fem,
                MethodSelection::Both => anyhow::bail!("the single study takes --method dg or --method fem"),
            };
            let (omega, n) = (cfg.omegas[0], cfg.ns[0]);
            let rep = run_single(&cfg, omega, n, method)?;
            let o = &rep.outcome;
            emit_records(cli, std::slice::from_ref(&o.record))?;
            let nr = &o.norms;
            eprintln!("solver {} iterations {} residual {:.3e}", o.solver.as_str(), o.iterations, o.record.residual);
            eprintln!(
                "norms: |u_h|_1h {:.6e}  ||u_h||_1h {:.6e}  |||u_h|||_1h {:.6e}  L2 {:.6e}  boundary L2 {:.6e}",
                nr.seminorm_1h, nr.norm_1h, nr.triple_norm_1h, nr.l2_domain, nr.l2_boundary
            );
            eprintln!(
                "relative errors: h1 seminorm {:.6e}  1h norm {:.6e}  L2 {:.6e}",
                o.errors.h1_semi, o.errors.norm_1h, o.errors.l2
            );
            eprintln!("manufactured solution self-check: {:.3e}", rep.self_check);
            if let Some(path) = &cli.dump {
                write_centroid_dump(&o.solution, create(path)?)?;
                eprintln!("wrote {}", path.display());
            }
            if cli.svg.is_some() {
                eprintln!("--svg is ignored by the single study; use --dump");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
