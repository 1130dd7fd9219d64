//! Linear solvers for the assembled complex systems: sparse LU with partial
//! pivoting, and restarted GMRES with an incomplete factorization
//! preconditioner. For discontinuous systems the incomplete factorization
//! is the smoother of a two-level preconditioner whose coarse level is the
//! conforming space on the same mesh.

use std::time::{Duration, Instant};

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use num_complex::Complex64;
use thiserror::Error;

use crate::assembly::{assemble_fem_matrix, LinearSystem};
use crate::space::{FemSpace, VectorP1Space};
use crate::sparse::{norm2, ComplexSparseMatrix};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Above this many unknowns `Auto` switches from LU to two-level GMRES.
pub const DIRECT_MAX_DOFS: usize = 60_000;
/// Threshold for systems without a coarse level, where the one-level
/// preconditioner is far slower than LU.
pub const DIRECT_MAX_DOFS_ONE_LEVEL: usize = 200_000;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: matrix {matrix}, right-hand side {rhs}")]
    Dimension { matrix: usize, rhs: usize },
    #[error("tolerance {0} outside [1e-14, 1e-6]")]
    Tolerance(f64),
    #[error("matrix is numerically singular")]
    Singular,
    #[error("no convergence: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Direct,
    Iterative,
    /// Direct up to [`DIRECT_MAX_DOFS`] unknowns (or
    /// [`DIRECT_MAX_DOFS_ONE_LEVEL`] without a coarse level), iterative above.
    Auto,
}

impl std::str::FromStr for SolveMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(Self::Direct),
            "iterative" => Ok(Self::Iterative),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown solver method '{other}'")),
        }
    }
}

/// What actually produced the solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodTag {
    Direct,
    Gmres,
    /// GMRES stagnated and the direct solver took over.
    GmresFallback,
}

impl MethodTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Direct => "direct",
            Self::Gmres => "gmres",
            Self::GmresFallback => "gmres+direct",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub method: SolveMethod,
    pub tol: f64,
    pub restart: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            method: SolveMethod::Auto,
            tol: 1e-10,
            restart: 60,
            max_iterations: 3000,
        }
    }
}

impl SolverOptions {
    pub fn with_method(method: SolveMethod, tol: f64) -> Self {
        Self {
            method,
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: Vec<Complex64>,
    /// `||A x - b|| / ||b||` from a fresh mat-vec.
    pub relative_residual: f64,
    /// Zero for the direct method.
    pub iterations: usize,
    pub wall_time: Duration,
    pub method: MethodTag,
}

pub fn relative_residual(a: &ComplexSparseMatrix, x: &[Complex64], b: &[Complex64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let bn = norm2(b);
    if bn == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / bn
    }
}

/// Map from each unknown of a discontinuous space to the conforming unknown
/// at the same vertex and component.
pub fn conforming_map<S: VectorP1Space>(space: &S) -> Vec<usize> {
    let fem = FemSpace::new(space.mesh().clone());
    let mut map = vec![0; space.n_dofs()];
    for e in 0..space.mesh().n_elements() {
        for (d, c) in space.element_dofs(e).into_iter().zip(fem.element_dofs(e)) {
            map[d] = c;
        }
    }
    map
}

/// Solves an assembled system. Iterative solves of discontinuous systems
/// use the conforming space on the same mesh as coarse level.
pub fn solve_system<S: VectorP1Space>(
    system: &LinearSystem<S>,
    opts: &SolverOptions,
) -> Result<SolveReport, SolverError> {
    let coarse = (!system.space.is_conforming()).then(|| {
        let fem = FemSpace::new(system.space.mesh().clone());
        CoarseLevel {
            map: conforming_map(&system.space),
            matrix: assemble_fem_matrix(&fem, &system.params).ok(),
        }
    });
    solve_with_coarse(&system.matrix, &system.rhs, opts, coarse)
}

pub fn solve(a: &ComplexSparseMatrix, b: &[Complex64], opts: &SolverOptions) -> Result<SolveReport, SolverError> {
    solve_with_coarse(a, b, opts, None)
}

fn iterate(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    opts: &SolverOptions,
    coarse: Option<CoarseLevel>,
) -> Result<(Vec<Complex64>, usize), SolverError> {
    match coarse {
        Some(c) => gmres(a, b, &TwoLevel::new(a, Ilu0::new(a)?, c)?, opts),
        None => gmres(a, b, &Ilu0::new(a)?, opts),
    }
}

pub fn solve_with_coarse(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    opts: &SolverOptions,
    coarse: Option<CoarseLevel>,
) -> Result<SolveReport, SolverError> {
    if a.dim() != b.len() {
        return Err(SolverError::Dimension {
            matrix: a.dim(),
            rhs: b.len(),
        });
    }
    if !(1e-14..=1e-6).contains(&opts.tol) {
        return Err(SolverError::Tolerance(opts.tol));
    }
    let start = Instant::now();
    let use_direct = match opts.method {
        SolveMethod::Direct => true,
        SolveMethod::Iterative => false,
        SolveMethod::Auto if coarse.is_some() => a.dim() <= DIRECT_MAX_DOFS,
        SolveMethod::Auto => a.dim() <= DIRECT_MAX_DOFS_ONE_LEVEL,
    };
    let (solution, iterations, method) = if use_direct {
        (solve_direct(a, b, opts.tol)?, 0, MethodTag::Direct)
    } else {
        match iterate(a, b, opts, coarse) {
            Ok((x, it)) => (x, it, MethodTag::Gmres),
            Err(SolverError::NotConverged { iterations, .. }) => {
                (solve_direct(a, b, opts.tol)?, iterations, MethodTag::GmresFallback)
            }
            Err(e) => return Err(e),
        }
    };
    let relative_residual = relative_residual(a, &solution, b);
    if !relative_residual.is_finite() {
        return Err(SolverError::Singular);
    }
    if relative_residual > opts.tol {
        return Err(SolverError::NotConverged {
            residual: relative_residual,
            iterations,
        });
    }
    Ok(SolveReport {
        solution,
        relative_residual,
        iterations,
        wall_time: start.elapsed(),
        method,
    })
}

/// Sparse LU factorization of a [`ComplexSparseMatrix`].
pub struct DirectSolver {
    lu: Lu<usize, Complex64>,
    dim: usize,
}

impl DirectSolver {
    pub fn new(a: &ComplexSparseMatrix) -> Result<Self, SolverError> {
        let n = a.dim();
        // CSR of the transpose is the CSC layout of the matrix itself.
        let t = a.transpose();
        let sym = SymbolicSparseColMat::<usize>::new_checked(n, n, t.row_ptr().to_vec(), None, t.col_idx().to_vec());
        let csc = SparseColMat::<usize, Complex64>::new(sym, t.values().to_vec());
        drop(t);
        let lu = csc.sp_lu().map_err(|_| SolverError::Singular)?;
        Ok(Self { lu, dim: n })
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let mut x = Mat::<Complex64>::from_fn(self.dim, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.dim).map(|i| x[(i, 0)]).collect()
    }
}

/// LU solve followed by a few steps of iterative refinement.
fn solve_direct(a: &ComplexSparseMatrix, b: &[Complex64], tol: f64) -> Result<Vec<Complex64>, SolverError> {
    let lu = DirectSolver::new(a)?;
    let mut x = lu.solve(b);
    let bn = norm2(b).max(f64::MIN_POSITIVE);
    for _ in 0..3 {
        let ax = a.mul_vec(&x);
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let rn = norm2(&r);
        if !rn.is_finite() {
            return Err(SolverError::Singular);
        }
        if rn <= 0.1 * tol * bn {
            break;
        }
        let d = lu.solve(&r);
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
    }
    Ok(x)
}

pub trait Preconditioner {
    /// `z = M^{-1} r`.
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]);
}

/// Zero fill-in incomplete LU on the matrix pattern.
pub struct Ilu0 {
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
    diag: Vec<usize>,
}

impl Ilu0 {
    pub fn new(a: &ComplexSparseMatrix) -> Result<Self, SolverError> {
        let n = a.dim();
        let row_ptr = a.row_ptr().to_vec();
        let col_idx = a.col_idx().to_vec();
        let mut values = a.values().to_vec();
        let mut diag = vec![usize::MAX; n];
        for i in 0..n {
            for p in row_ptr[i]..row_ptr[i + 1] {
                if col_idx[p] == i {
                    diag[i] = p;
                }
            }
            if diag[i] == usize::MAX {
                return Err(SolverError::Singular);
            }
        }
        let mut pos = vec![usize::MAX; n];
        for i in 0..n {
            let row = row_ptr[i]..row_ptr[i + 1];
            for p in row.clone() {
                pos[col_idx[p]] = p;
            }
            for p in row_ptr[i]..diag[i] {
                let k = col_idx[p];
                let pivot = values[diag[k]];
                if pivot == ZERO {
                    return Err(SolverError::Singular);
                }
                let l = values[p] / pivot;
                values[p] = l;
                for q in diag[k] + 1..row_ptr[k + 1] {
                    let j = col_idx[q];
                    if pos[j] != usize::MAX {
                        let v = values[q];
                        values[pos[j]] -= l * v;
                    }
                }
            }
            for p in row {
                pos[col_idx[p]] = usize::MAX;
            }
            if values[diag[i]] == ZERO || !values[diag[i]].is_finite() {
                return Err(SolverError::Singular);
            }
        }
        Ok(Self {
            row_ptr,
            col_idx,
            values,
            diag,
        })
    }
}

impl Preconditioner for Ilu0 {
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        let n = self.diag.len();
        for i in 0..n {
            let mut s = r[i];
            for p in self.row_ptr[i]..self.diag[i] {
                s -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = z[i];
            for p in self.diag[i] + 1..self.row_ptr[i + 1] {
                s -= self.values[p] * z[self.col_idx[p]];
            }
            z[i] = s / self.values[self.diag[i]];
        }
    }
}

/// Coarse level of [`TwoLevel`].
pub struct CoarseLevel {
    /// `map[i]` is the coarse unknown whose basis function contains fine
    /// basis function `i`.
    pub map: Vec<usize>,
    /// Coarse operator. `None` uses the Galerkin product `P^T A P`.
    pub matrix: Option<ComplexSparseMatrix>,
}

/// Two-level preconditioner: smoothing with `S` on the fine level wrapped
/// around an exact solve on a coarse subspace.
pub struct TwoLevel<'a, S> {
    fine: &'a ComplexSparseMatrix,
    smoother: S,
    coarse: DirectSolver,
    coarse_of: Vec<usize>,
    n_coarse: usize,
}

impl<'a, S: Preconditioner> TwoLevel<'a, S> {
    pub fn new(fine: &'a ComplexSparseMatrix, smoother: S, level: CoarseLevel) -> Result<Self, SolverError> {
        let coarse_of = level.map;
        assert_eq!(coarse_of.len(), fine.dim());
        let n_coarse = coarse_of.iter().max().map_or(0, |m| m + 1);
        let coarse_matrix = match level.matrix {
            Some(m) => {
                assert_eq!(m.dim(), n_coarse);
                m
            }
            None => galerkin_coarse(fine, &coarse_of, n_coarse),
        };
        let coarse = DirectSolver::new(&coarse_matrix)?;
        Ok(Self {
            fine,
            smoother,
            coarse,
            coarse_of,
            n_coarse,
        })
    }

    fn smooth(&self, r: &[Complex64], z: &mut [Complex64], work: &mut [Complex64], tmp: &mut [Complex64]) {
        // z += S (r - A z)
        self.fine.mul_vec_into(z, work);
        for (w, ri) in work.iter_mut().zip(r) {
            *w = ri - *w;
        }
        self.smoother.apply(work, tmp);
        for (zi, t) in z.iter_mut().zip(tmp.iter()) {
            *zi += t;
        }
    }
}

impl<S: Preconditioner> Preconditioner for TwoLevel<'_, S> {
    fn apply(&self, r: &[Complex64], z: &mut [Complex64]) {
        let n = r.len();
        let mut work = vec![ZERO; n];
        let mut tmp = vec![ZERO; n];
        self.smoother.apply(r, z);
        self.fine.mul_vec_into(z, &mut work);
        let mut rc = vec![ZERO; self.n_coarse];
        for ((ri, w), &c) in r.iter().zip(&work).zip(&self.coarse_of) {
            rc[c] += ri - w;
        }
        let ec = self.coarse.solve(&rc);
        for (zi, &c) in z.iter_mut().zip(&self.coarse_of) {
            *zi += ec[c];
        }
        self.smooth(r, z, &mut work, &mut tmp);
    }
}

/// `P^T A P` assembled one coarse row at a time, which keeps the transient
/// memory proportional to a single row.
fn galerkin_coarse(fine: &ComplexSparseMatrix, coarse_of: &[usize], n_coarse: usize) -> ComplexSparseMatrix {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_coarse];
    for (i, &c) in coarse_of.iter().enumerate() {
        members[c].push(i);
    }
    let mut trip = Vec::new();
    let mut row: Vec<(usize, Complex64)> = Vec::new();
    for (c, rows) in members.iter().enumerate() {
        row.clear();
        for &i in rows {
            let (cols, vals) = fine.row(i);
            row.extend(cols.iter().zip(vals).map(|(&j, &v)| (coarse_of[j], v)));
        }
        row.sort_unstable_by_key(|e| e.0);
        for &(j, v) in &row {
            match trip.last_mut() {
                Some((ri, rj, acc)) if *ri == c && *rj == j => *acc += v,
                _ => trip.push((c, j, v)),
            }
        }
    }
    ComplexSparseMatrix::from_triplets(n_coarse, &trip)
}

fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Right-preconditioned restarted GMRES. Returns the iterate and the
/// number of inner iterations, or `NotConverged` on stagnation or when the
/// iteration budget is exhausted.
pub fn gmres<P: Preconditioner + ?Sized>(
    a: &ComplexSparseMatrix,
    b: &[Complex64],
    pre: &P,
    opts: &SolverOptions,
) -> Result<(Vec<Complex64>, usize), SolverError> {
    let n = a.dim();
    let m = opts.restart.max(1);
    let bn = norm2(b);
    let mut x = vec![ZERO; n];
    if bn == 0.0 {
        return Ok((x, 0));
    }
    // Aim a little below the target so the recomputed residual passes.
    let target = 0.5 * opts.tol * bn;
    let mut r = b.to_vec();
    let mut rn = bn;
    let mut iterations = 0;
    let mut z = vec![ZERO; n];
    let mut w = vec![ZERO; n];
    let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + 1);
    let mut h = vec![vec![ZERO; m]; m + 1];
    let mut cs = vec![0.0; m];
    let mut sn = vec![ZERO; m];
    let mut g = vec![ZERO; m + 1];
    let mut stalled_cycles = 0;
    while iterations < opts.max_iterations {
        basis.clear();
        basis.push(r.iter().map(|v| v / rn).collect());
        g.iter_mut().for_each(|v| *v = ZERO);
        g[0] = Complex64::new(rn, 0.0);
        let mut k = 0;
        while k < m && iterations < opts.max_iterations {
            pre.apply(&basis[k], &mut z);
            a.mul_vec_into(&z, &mut w);
            for (i, v) in basis.iter().enumerate() {
                let hij = dotc(v, &w);
                h[i][k] = hij;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hij * vj;
                }
            }
            let wn = norm2(&w);
            h[k + 1][k] = Complex64::new(wn, 0.0);
            for i in 0..k {
                let (top, bot) = (h[i][k], h[i + 1][k]);
                h[i][k] = top * cs[i] + sn[i] * bot;
                h[i + 1][k] = -sn[i].conj() * top + bot * cs[i];
            }
            let (fa, fb) = (h[k][k], h[k + 1][k]);
            let rr = (fa.norm_sqr() + fb.norm_sqr()).sqrt();
            if fa.norm() == 0.0 {
                cs[k] = 0.0;
                sn[k] = Complex64::new(1.0, 0.0);
            } else {
                cs[k] = fa.norm() / rr;
                sn[k] = fa * fb.conj() / (fa.norm() * rr);
            }
            h[k][k] = cs[k] * fa + sn[k] * fb;
            h[k + 1][k] = ZERO;
            g[k + 1] = -sn[k].conj() * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].norm() <= target || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }
        // back substitution for the k x k triangular system
        let mut y = vec![ZERO; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut u = vec![ZERO; n];
        for (yi, v) in y.iter().zip(&basis) {
            for (uj, vj) in u.iter_mut().zip(v) {
                *uj += yi * vj;
            }
        }
        pre.apply(&u, &mut z);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        a.mul_vec_into(&x, &mut w);
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        let new_rn = norm2(&r);
        if !new_rn.is_finite() {
            return Err(SolverError::Singular);
        }
        if new_rn <= target * 2.0 {
            return Ok((x, iterations));
        }
        stalled_cycles = if new_rn > 0.99 * rn { stalled_cycles + 1 } else { 0 };
        rn = new_rn;
        if stalled_cycles >= 3 {
            break;
        }
    }
    Err(SolverError::NotConverged {
        residual: rn / bn,
        iterations,
    })
}
