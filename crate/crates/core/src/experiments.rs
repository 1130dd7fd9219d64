//! Experiment drivers: stability sweeps, convergence and pollution studies,
//! cross-section comparisons and single runs. Every driver produces flat
//! [`ExperimentRecord`]s that serialize to one CSV schema.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::assembly::{assemble_dg, assemble_fem, AssemblyError, LinearSystem, DEFAULT_RHS_DEGREE};
use crate::manufactured::{exact_u, self_check_with, CVec2, ProblemParams};
use crate::mesh::{Mesh, MeshError, Point};
use crate::norms::{norms_of, relative_errors, NormReport, RelativeErrors};
use crate::quadrature::QuadratureError;
use crate::solver::{solve_system, MethodTag, SolverError, SolverOptions};
use crate::space::{DgSpace, FemSpace, Field, SpaceError, VectorP1Space};

/// Exact CSV header shared by all studies.
pub const CSV_HEADER: [&str; 15] = [
    "study",
    "method",
    "omega",
    "n",
    "h",
    "dofs",
    "rel_err_h1semi",
    "rel_err_l2",
    "norm_1h",
    "j0",
    "j1",
    "c_sta",
    "residual",
    "assemble_ms",
    "solve_ms",
];

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "ELASTODG_THREADS";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("insufficient mesh sizes: need at least 3 distinct n, got {0}")]
    InsufficientMeshes(usize),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("solve failed ({method}, omega = {omega}, n = {n}): {source}")]
    Solver {
        method: Discretization,
        omega: f64,
        n: usize,
        source: SolverError,
    },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Study {
    Stability,
    Convergence,
    Pollution,
    Compare,
    Single,
}

impl Study {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Stability => "stability",
            Self::Convergence => "convergence",
            Self::Pollution => "pollution",
            Self::Compare => "compare",
            Self::Single => "single",
        }
    }
}

impl FromStr for Study {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stability" => Ok(Self::Stability),
            "convergence" => Ok(Self::Convergence),
            "pollution" => Ok(Self::Pollution),
            "compare" => Ok(Self::Compare),
            "single" => Ok(Self::Single),
            other => Err(format!("unknown study '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Discretization {
    Dg,
    Fem,
}

impl Discretization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dg => "dg",
            Self::Fem => "fem",
        }
    }
}

impl fmt::Display for Discretization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which discretizations a study runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodSelection {
    Dg,
    Fem,
    Both,
}

impl MethodSelection {
    pub fn methods(&self) -> &'static [Discretization] {
        match self {
            Self::Dg => &[Discretization::Dg],
            Self::Fem => &[Discretization::Fem],
            Self::Both => &[Discretization::Dg, Discretization::Fem],
        }
    }
}

impl FromStr for MethodSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dg" => Ok(Self::Dg),
            "fem" => Ok(Self::Fem),
            "both" => Ok(Self::Both),
            other => Err(format!("unknown method '{other}' (expected dg, fem or both)")),
        }
    }
}

/// Mesh resolution as a function of the frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshRule {
    /// `omega * h = c`
    OmegaH(f64),
    /// `omega^3 * h^2 = c`
    OmegaCubedHSquared(f64),
}

impl MeshRule {
    /// Smallest `n` with `h = 1/n` satisfying the rule, i.e. `ceil(omega / c)`
    /// or `ceil(omega^{3/2} / sqrt(c))`, and at least 1.
    pub fn n_for(&self, omega: f64) -> usize {
        let raw = match *self {
            Self::OmegaH(c) => omega / c,
            Self::OmegaCubedHSquared(c) => omega.powf(1.5) / c.sqrt(),
        };
        // Guard against representation noise just above an integer.
        let rounded = raw.round();
        let n = if (raw - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded
        } else {
            raw.ceil()
        };
        (n as usize).max(1)
    }

    pub fn constant(&self) -> f64 {
        match *self {
            Self::OmegaH(c) | Self::OmegaCubedHSquared(c) => c,
        }
    }
}

impl fmt::Display for MeshRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::OmegaH(c) => write!(f, "omega*h={c}"),
            Self::OmegaCubedHSquared(c) => write!(f, "omega^3*h^2={c}"),
        }
    }
}

impl FromStr for MeshRule {
    type Err = String;

    /// Accepts `omega*h=c`, `wh=c`, `omega^3*h^2=c` and `w3h2=c`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let (lhs, rhs) = compact
            .split_once('=')
            .ok_or_else(|| format!("rule '{s}' has no '='"))?;
        let c: f64 = rhs.parse().map_err(|_| format!("rule constant '{rhs}' is not a number"))?;
        if !(c > 0.0 && c.is_finite()) {
            return Err(format!("rule constant must be positive, got {c}"));
        }
        match lhs {
            "omega*h" | "wh" | "w*h" => Ok(Self::OmegaH(c)),
            "omega^3*h^2" | "w3h2" | "w^3*h^2" => Ok(Self::OmegaCubedHSquared(c)),
            other => Err(format!("unknown rule '{other}'")),
        }
    }
}

/// Parses a comma-separated list of values and inclusive ranges
/// `start:end[:step]` (step defaults to 1).
pub fn parse_omega_list(s: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let fields: Vec<&str> = part.split(':').collect();
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("'{t}' is not a number"));
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if fields.len() == 3 { num(fields[2])? } else { 1.0 };
                if !(step > 0.0) || b < a {
                    return Err(format!("invalid range '{part}'"));
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|k| a + k as f64 * step));
            }
            _ => return Err(format!("invalid range '{part}'")),
        }
    }
    if out.is_empty() {
        return Err("empty frequency list".into());
    }
    Ok(out)
}

pub fn parse_n_list(s: &str) -> Result<Vec<usize>, String> {
    let values = parse_omega_list(s)?;
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("mesh size {v} is not a positive integer"))
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub study: Study,
    pub omegas: Vec<f64>,
    pub ns: Vec<usize>,
    pub rules: Vec<MeshRule>,
    /// Material and penalty parameters; `omega` is replaced per case.
    pub params: ProblemParams,
    pub quad_degree: usize,
    pub solver: SolverOptions,
    pub methods: MethodSelection,
    /// Cross-section sample count.
    pub samples: usize,
    /// Offset of the quasi-random self-check points in single runs.
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(study: Study) -> Self {
        Self {
            study,
            omegas: Vec::new(),
            ns: Vec::new(),
            rules: Vec::new(),
            params: ProblemParams::standard(1.0),
            quad_degree: DEFAULT_RHS_DEGREE,
            solver: SolverOptions::default(),
            methods: MethodSelection::Dg,
            samples: 1000,
            seed: 0,
        }
    }

    pub fn params_for(&self, omega: f64) -> ProblemParams {
        ProblemParams { omega, ..self.params }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |m: String| Err(ExperimentError::Config(m));
        if self.omegas.is_empty() {
            return bad("no frequencies given".into());
        }
        if let Some(w) = self.omegas.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return bad(format!("frequency must be positive, got {w}"));
        }
        if self.ns.contains(&0) {
            return bad("mesh size n must be at least 1".into());
        }
        let needs_ns = self.study != Study::Pollution;
        if needs_ns && self.ns.is_empty() {
            return bad("no mesh sizes given".into());
        }
        if self.study == Study::Pollution && self.rules.is_empty() {
            return bad("pollution study needs at least one rule".into());
        }
        if self.study == Study::Compare && self.samples < 2 {
            return bad("cross-section needs at least 2 samples".into());
        }
        self.params_for(self.omegas[0])
            .validate()
            .map_err(|e| ExperimentError::Config(e.to_string()))?;
        if !(1e-14..=1e-6).contains(&self.solver.tol) {
            return bad(format!("solver tolerance {} outside [1e-14, 1e-6]", self.solver.tol));
        }
        Ok(())
    }
}

/// Shortest round-trip text, in exponent form outside [1e-4, 1e15).
fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub study: String,
    pub method: Discretization,
    pub omega: f64,
    pub n: usize,
    pub h: f64,
    pub dofs: usize,
    pub rel_err_h1semi: f64,
    pub rel_err_l2: f64,
    pub norm_1h: f64,
    pub j0: f64,
    pub j1: f64,
    pub c_sta: f64,
    pub residual: f64,
    pub assemble_ms: f64,
    pub solve_ms: f64,
}

impl ExperimentRecord {
    fn fields(&self) -> [String; 15] {
        [
            self.study.clone(),
            self.method.as_str().to_string(),
            num(self.omega),
            self.n.to_string(),
            num(self.h),
            self.dofs.to_string(),
            num(self.rel_err_h1semi),
            num(self.rel_err_l2),
            num(self.norm_1h),
            num(self.j0),
            num(self.j1),
            num(self.c_sta),
            num(self.residual),
            format!("{:.3}", self.assemble_ms),
            format!("{:.3}", self.solve_ms),
        ]
    }

    pub fn is_finite(&self) -> bool {
        [
            self.omega,
            self.h,
            self.rel_err_h1semi,
            self.rel_err_l2,
            self.norm_1h,
            self.j0,
            self.j1,
            self.c_sta,
            self.residual,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Sorts by (study, method, omega, n).
pub fn sort_records(records: &mut [ExperimentRecord]) {
    records.sort_by(|a, b| {
        a.study
            .cmp(&b.study)
            .then(a.method.cmp(&b.method))
            .then(a.omega.total_cmp(&b.omega))
            .then(a.n.cmp(&b.n))
    });
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in records {
        out.write_record(r.fields())?;
    }
    out.flush()?;
    Ok(())
}

/// A discrete solution of either kind.
#[derive(Debug, Clone)]
pub enum Solution {
    Dg(Field<DgSpace>),
    Fem(Field<FemSpace>),
}

impl Solution {
    pub fn mesh(&self) -> &Arc<Mesh> {
        match self {
            Self::Dg(f) => f.mesh(),
            Self::Fem(f) => f.mesh(),
        }
    }

    pub fn eval(&self, element: usize, bary: [f64; 3]) -> CVec2 {
        match self {
            Self::Dg(f) => f.eval(element, bary),
            Self::Fem(f) => f.eval(element, bary),
        }
        .expect("element index from the same mesh")
    }

    /// Value at `x`, using the lowest-indexed element on shared boundaries.
    pub fn value_at(&self, x: Point) -> Option<CVec2> {
        self.mesh().locate(x).map(|(e, b)| self.eval(e, b))
    }
}

/// Everything computed for one (method, omega, n) case.
#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub record: ExperimentRecord,
    pub norms: NormReport,
    pub errors: RelativeErrors,
    pub iterations: usize,
    pub solver: MethodTag,
    pub solution: Solution,
}

fn finish<S: VectorP1Space>(
    study: &str,
    method: Discretization,
    n: usize,
    system: LinearSystem<S>,
    cfg: &ExperimentConfig,
    wrap: fn(Field<S>) -> Solution,
) -> Result<CaseOutcome, ExperimentError> {
    let p = system.params;
    let report = solve_system(&system, &cfg.solver).map_err(|source| ExperimentError::Solver {
        method,
        omega: p.omega,
        n,
        source,
    })?;
    let diag = system.diagnostics;
    let space = system.space.clone();
    drop(system);
    let field = Field::new(space, report.solution)?;
    let norms = norms_of(&field, &p);
    let errors = relative_errors(&field, &p, cfg.quad_degree)?;
    let h = 1.0 / n as f64;
    let record = ExperimentRecord {
        study: study.to_string(),
        method,
        omega: p.omega,
        n,
        h,
        dofs: diag.dofs,
        rel_err_h1semi: errors.h1_semi,
        rel_err_l2: errors.l2,
        norm_1h: norms.norm_1h,
        j0: norms.j0,
        j1: norms.j1,
        c_sta: p.c_sta(h),
        residual: report.relative_residual,
        assemble_ms: diag.assemble_time.as_secs_f64() * 1e3,
        solve_ms: report.wall_time.as_secs_f64() * 1e3,
    };
    Ok(CaseOutcome {
        record,
        norms,
        errors,
        iterations: report.iterations,
        solver: report.method,
        solution: wrap(field),
    })
}

/// Assembles, solves and evaluates one case.
pub fn solve_case(
    study: &str,
    method: Discretization,
    omega: f64,
    n: usize,
    cfg: &ExperimentConfig,
) -> Result<CaseOutcome, ExperimentError> {
    let p = cfg.params_for(omega);
    let mesh = Arc::new(Mesh::build_uniform(n)?);
    match method {
        Discretization::Dg => {
            let system = assemble_dg(&DgSpace::new(mesh), &p, cfg.quad_degree)?;
            finish(study, method, n, system, cfg, Solution::Dg)
        }
        Discretization::Fem => {
            let system = assemble_fem(&FemSpace::new(mesh), &p, cfg.quad_degree)?;
            finish(study, method, n, system, cfg, Solution::Fem)
        }
    }
}

/// Worker count from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_count() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&t| t > 0)
}

/// Runs independent jobs on a pool capped by [`THREADS_ENV`]. Results keep
/// the job order.
fn run_parallel<J, T, F>(jobs: &[J], f: F) -> Result<Vec<T>, ExperimentError>
where
    J: Sync,
    T: Send,
    F: Fn(&J) -> Result<T, ExperimentError> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = thread_count() {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| ExperimentError::Threads(e.to_string()))?;
    pool.install(|| jobs.par_iter().map(&f).collect())
}

fn run_grid(
    study: &str,
    cases: Vec<(Discretization, f64, usize)>,
    cfg: &ExperimentConfig,
) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    let mut records = run_parallel(&cases, |&(m, w, n)| Ok(solve_case(study, m, w, n, cfg)?.record))?;
    sort_records(&mut records);
    Ok(records)
}

fn grid(cfg: &ExperimentConfig) -> Vec<(Discretization, f64, usize)> {
    let mut cases = Vec::new();
    for &m in cfg.methods.methods() {
        for &w in &cfg.omegas {
            for &n in &cfg.ns {
                cases.push((m, w, n));
            }
        }
    }
    cases
}

/// Largest relative change of `norm_1h` between consecutive frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothnessProxy {
    pub method: Discretization,
    pub n: usize,
    pub max_relative_jump: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub records: Vec<ExperimentRecord>,
    pub smoothness: Vec<SmoothnessProxy>,
}

pub fn run_stability(cfg: &ExperimentConfig) -> Result<StabilityReport, ExperimentError> {
    cfg.validate()?;
    let records = run_grid(Study::Stability.as_str(), grid(cfg), cfg)?;
    let mut smoothness = Vec::new();
    for &m in cfg.methods.methods() {
        let mut ns = cfg.ns.clone();
        ns.sort_unstable();
        ns.dedup();
        for n in ns {
            let series: Vec<f64> = records
                .iter()
                .filter(|r| r.method == m && r.n == n)
                .map(|r| r.norm_1h)
                .collect();
            let max_relative_jump = series
                .windows(2)
                .map(|w| (w[1] - w[0]).abs() / w[0])
                .fold(0.0, f64::max);
            smoothness.push(SmoothnessProxy {
                method: m,
                n,
                max_relative_jump,
            });
        }
    }
    Ok(StabilityReport { records, smoothness })
}

/// Least-squares slope of `log(y)` against `log(x)`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub method: Discretization,
    pub omega: f64,
    pub h1_semi: f64,
    pub l2: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub records: Vec<ExperimentRecord>,
    pub slopes: Vec<SlopeFit>,
}

pub fn run_convergence(cfg: &ExperimentConfig) -> Result<ConvergenceReport, ExperimentError> {
    cfg.validate()?;
    let mut distinct = cfg.ns.clone();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ExperimentError::InsufficientMeshes(distinct.len()));
    }
    let records = run_grid(Study::Convergence.as_str(), grid(cfg), cfg)?;
    let mut slopes = Vec::new();
    for &m in cfg.methods.methods() {
        for &w in &cfg.omegas {
            let rows: Vec<&ExperimentRecord> = records.iter().filter(|r| r.method == m && r.omega == w).collect();
            let fit = |f: fn(&ExperimentRecord) -> f64| {
                log_log_slope(&rows.iter().map(|r| (r.h, f(r))).collect::<Vec<_>>())
            };
            slopes.push(SlopeFit {
                method: m,
                omega: w,
                h1_semi: fit(|r| r.rel_err_h1semi),
                l2: fit(|r| r.rel_err_l2),
            });
        }
    }
    Ok(ConvergenceReport { records, slopes })
}

/// Study label of a pollution rule, e.g. `pollution[omega*h=0.5]`.
pub fn pollution_label(rule: &MeshRule) -> String {
    format!("{}[{rule}]", Study::Pollution.as_str())
}

pub fn run_pollution(cfg: &ExperimentConfig) -> Result<Vec<ExperimentRecord>, ExperimentError> {
    cfg.validate()?;
    let mut jobs = Vec::new();
    for rule in &cfg.rules {
        for &m in cfg.methods.methods() {
            for &w in &cfg.omegas {
                jobs.push((pollution_label(rule), m, w, rule.n_for(w)));
            }
        }
    }
    let mut records = run_parallel(&jobs, |(label, m, w, n)| Ok(solve_case(label, *m, *w, *n, cfg)?.record))?;
    sort_records(&mut records);
    Ok(records)
}

/// `|Re u|` at one point of the diagonal `y = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSample {
    /// Position along the diagonal, equal to the x coordinate.
    pub t: f64,
    pub exact: f64,
    pub dg: Option<f64>,
    pub fem: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CrossSection {
    pub omega: f64,
    pub n: usize,
    pub samples: Vec<CrossSample>,
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub records: Vec<ExperimentRecord>,
    pub sections: Vec<CrossSection>,
}

/// `m` equally spaced points on the closed diagonal from (-0.5, -0.5) to
/// (0.5, 0.5).
pub fn diagonal_points(m: usize) -> Vec<f64> {
    (0..m).map(|k| -0.5 + k as f64 / (m - 1) as f64).collect()
}

fn real_magnitude(v: CVec2) -> f64 {
    v[0].re.hypot(v[1].re)
}

pub fn run_compare(cfg: &ExperimentConfig) -> Result<CompareReport, ExperimentError> {
    cfg.validate()?;
    let study = Study::Compare.as_str();
    let cases = grid(cfg);
    let outcomes = run_parallel(&cases, |&(m, w, n)| solve_case(study, m, w, n, cfg))?;
    let ts = diagonal_points(cfg.samples);
    let mut sections = Vec::new();
    for &w in &cfg.omegas {
        let p = cfg.params_for(w);
        for &n in &cfg.ns {
            let find = |m: Discretization| {
                outcomes
                    .iter()
                    .find(|o| o.record.method == m && o.record.omega == w && o.record.n == n)
            };
            let (dg, fem) = (find(Discretization::Dg), find(Discretization::Fem));
            let samples = ts
                .iter()
                .map(|&t| {
                    let x = [t, t];
                    let at = |o: Option<&CaseOutcome>| o.and_then(|o| o.solution.value_at(x)).map(real_magnitude);
                    CrossSample {
                        t,
                        exact: real_magnitude(exact_u(x, &p)),
                        dg: at(dg),
                        fem: at(fem),
                    }
                })
                .collect();
            sections.push(CrossSection { omega: w, n, samples });
        }
    }
    let mut records: Vec<ExperimentRecord> = outcomes.into_iter().map(|o| o.record).collect();
    sort_records(&mut records);
    Ok(CompareReport { records, sections })
}

pub fn write_cross_sections<W: Write>(sections: &[CrossSection], w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["omega", "n", "t", "exact", "dg", "fem"])?;
    let opt = |v: Option<f64>| v.map_or(String::new(), num);
    for s in sections {
        for p in &s.samples {
            out.write_record([
                s.omega.to_string(),
                s.n.to_string(),
                num(p.t),
                num(p.exact),
                opt(p.dg),
                opt(p.fem),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SingleReport {
    pub outcome: CaseOutcome,
    /// Largest finite-difference deviation of the manufactured solution.
    pub self_check: f64,
}

pub fn run_single(
    cfg: &ExperimentConfig,
    omega: f64,
    n: usize,
    method: Discretization,
) -> Result<SingleReport, ExperimentError> {
    cfg.validate()?;
    if n == 0 {
        return Err(ExperimentError::Config("mesh size n must be at least 1".into()));
    }
    let outcome = solve_case(Study::Single.as_str(), method, omega, n, cfg)?;
    let p = cfg.params_for(omega);
    let step = if omega > 20.0 { 1e-7 } else { 1e-6 };
    let self_check = self_check_with(&p, 100, step, cfg.seed).max();
    Ok(SingleReport { outcome, self_check })
}

/// `(x, y, Re u1, Im u1, Re u2, Im u2)` at every element centroid.
pub fn centroid_dump(solution: &Solution) -> Vec<[f64; 6]> {
    let mesh = solution.mesh();
    (0..mesh.n_elements())
        .map(|e| {
            let third = 1.0 / 3.0;
            let x = mesh.geometry(e).point([third; 3]);
            let v = solution.eval(e, [third; 3]);
            [x[0], x[1], v[0].re, v[0].im, v[1].re, v[1].im]
        })
        .collect()
}

pub fn write_centroid_dump<W: Write>(solution: &Solution, w: W) -> Result<(), ExperimentError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "re_u1", "im_u1", "re_u2", "im_u2"])?;
    for row in centroid_dump(solution) {
        out.write_record(row.iter().map(|&v| num(v)))?;
    }
    out.flush()?;
    Ok(())
}
