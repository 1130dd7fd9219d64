//! Assembly of the interior-penalty DG system, the conforming baseline, the
//! elliptic projection, and matrix-free evaluation of the sesquilinear form.
//!
//! Matrix entries are stored as `M[test][trial] = A(phi_trial, phi_test)`, so
//! `v^* M w = A(w, v)` for coefficient vectors `v`, `w`. The basis functions
//! are real, which makes the assembled matrices complex symmetric.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use thiserror::Error;

use crate::manufactured::{boundary_g, source_f, CVec2, ParamsError, ProblemParams};
use crate::mesh::{EdgeInfo, Mesh, Point};
use crate::quadrature::{segment_rule, triangle_rule, QuadratureError};
use crate::space::{
    mat_vec, DgField, DgSpace, ElementwiseField, ExactSolution, FemSpace, VectorP1Space, LOCAL_DOFS,
};
use crate::sparse::ComplexSparseMatrix;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Degree used for right-hand sides and analytic operands unless overridden.
pub const DEFAULT_RHS_DEGREE: usize = 10;
/// Matrix integrands are at most quadratic on P1.
const MATRIX_DEGREE: usize = 2;

type RMat2 = [[f64; 2]; 2];

#[derive(Debug, Error, PartialEq)]
pub enum AssemblyError {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyDiagnostics {
    pub dofs: usize,
    pub nnz: usize,
    pub assemble_time: Duration,
}

/// Assembled matrix and load vector over a vector P1 space.
#[derive(Debug, Clone)]
pub struct LinearSystem<S> {
    pub matrix: ComplexSparseMatrix,
    pub rhs: Vec<Complex64>,
    pub space: S,
    pub params: ProblemParams,
    pub diagnostics: AssemblyDiagnostics,
}

pub type DgSystem = LinearSystem<DgSpace>;
pub type FemSystem = LinearSystem<FemSpace>;

#[derive(Debug, Clone, Copy)]
struct Terms {
    edges: bool,
    mass: bool,
}

fn basis_grad(grad_bary: &[Point; 3], k: usize) -> RMat2 {
    let mut m = [[0.0; 2]; 2];
    m[k % 2] = grad_bary[k / 2];
    m
}

fn real_stress(p: &ProblemParams, g: &RMat2) -> RMat2 {
    let div = g[0][0] + g[1][1];
    let mut s = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            s[i][j] = p.mu * (g[i][j] + g[j][i]);
        }
        s[i][i] += p.lambda * div;
    }
    s
}

fn real_mat_vec(m: &RMat2, n: Point) -> Point {
    [m[0][0] * n[0] + m[0][1] * n[1], m[1][0] * n[0] + m[1][1] * n[1]]
}

/// Basis value `lambda_a e_c` at barycentric `bary`, local index `k = 2a + c`.
fn basis_value(bary: [f64; 3], k: usize) -> Point {
    let mut v = [0.0; 2];
    v[k % 2] = bary[k / 2];
    v
}

fn pattern<S: VectorP1Space>(space: &S, edges: bool) -> ComplexSparseMatrix {
    let mesh = space.mesh();
    if space.is_conforming() {
        let cliques: Vec<&[usize]> = mesh.triangles.iter().map(|t| &t[..]).collect();
        ComplexSparseMatrix::from_node_cliques(mesh.vertices.len(), 2, cliques)
    } else {
        let mut cliques: Vec<Vec<usize>> = (0..mesh.n_elements()).map(|e| vec![e]).collect();
        if edges {
            for edge in &mesh.interior_edges {
                cliques.push(vec![edge.plus_element, edge.minus_element.expect("interior edge")]);
            }
        }
        ComplexSparseMatrix::from_node_cliques(mesh.n_elements(), LOCAL_DOFS, cliques.iter().map(|c| &c[..]))
    }
}

fn assemble_matrix<S: VectorP1Space>(space: &S, p: &ProblemParams, terms: Terms) -> ComplexSparseMatrix {
    let mesh = space.mesh();
    let mut m = pattern(space, terms.edges);
    let w2 = p.omega * p.omega;
    let mut local = vec![vec![ZERO; LOCAL_DOFS]; LOCAL_DOFS];
    for e in 0..mesh.n_elements() {
        let g = mesh.geometry(e);
        let grads: [RMat2; LOCAL_DOFS] = std::array::from_fn(|k| basis_grad(&g.grad_bary, k));
        for a in 0..LOCAL_DOFS {
            for b in 0..LOCAL_DOFS {
                // sigma(phi_b) : grad(phi_a) = lambda div div + 2 mu eps : eps
                let s = real_stress(p, &grads[b]);
                let mut stiff = 0.0;
                for i in 0..2 {
                    for j in 0..2 {
                        stiff += s[i][j] * grads[a][i][j];
                    }
                }
                let mut mass = 0.0;
                if terms.mass && a % 2 == b % 2 {
                    let same = if a / 2 == b / 2 { 2.0 } else { 1.0 };
                    mass = p.rho * g.area * same / 12.0;
                }
                local[a][b] = Complex64::new(g.area * stiff - w2 * mass, 0.0);
            }
        }
        m.add_block(&space.element_dofs(e), &local);
    }
    let rule = segment_rule(MATRIX_DEGREE).expect("supported degree");
    if terms.edges {
        for edge in &mesh.interior_edges {
            let (dofs, block) = interior_edge_block(space, p, edge, &rule.points, &rule.weights);
            m.add_block(&dofs, &block);
        }
    }
    for edge in &mesh.boundary_edges {
        let dofs = space.element_dofs(edge.plus_element);
        let mut block = vec![vec![ZERO; LOCAL_DOFS]; LOCAL_DOFS];
        for (t, w) in rule.iter() {
            let bary = edge.plus_trace.barycentric(t);
            let scale = I * (p.omega * w * edge.h_e);
            for a in 0..LOCAL_DOFS {
                let va = basis_value(bary, a);
                for b in 0..LOCAL_DOFS {
                    let vb = real_mat_vec(&p.a, basis_value(bary, b));
                    block[a][b] += scale * (vb[0] * va[0] + vb[1] * va[1]);
                }
            }
        }
        m.add_block(&dofs, &block);
    }
    m
}

struct EdgeSide {
    element: usize,
    sign: f64,
    /// `sigma(phi_k) n` for the six local basis functions.
    stress_n: [Point; LOCAL_DOFS],
}

fn edge_sides<S: VectorP1Space>(space: &S, p: &ProblemParams, edge: &EdgeInfo) -> Vec<EdgeSide> {
    let mesh = space.mesh();
    let mut sides = vec![(edge.plus_element, 1.0)];
    if let Some(m) = edge.minus_element {
        sides.push((m, -1.0));
    }
    sides
        .into_iter()
        .map(|(element, sign)| {
            let g = mesh.geometry(element);
            EdgeSide {
                element,
                sign,
                stress_n: std::array::from_fn(|k| {
                    real_mat_vec(&real_stress(p, &basis_grad(&g.grad_bary, k)), edge.normal)
                }),
            }
        })
        .collect()
}

fn interior_edge_block<S: VectorP1Space>(
    space: &S,
    p: &ProblemParams,
    edge: &EdgeInfo,
    points: &[f64],
    weights: &[f64],
) -> (Vec<usize>, Vec<Vec<Complex64>>) {
    let sides = edge_sides(space, p, edge);
    let traces = [edge.plus_trace, edge.minus_trace.expect("interior edge")];
    let n = 2 * LOCAL_DOFS;
    let mut dofs = Vec::with_capacity(n);
    for s in &sides {
        dofs.extend(space.element_dofs(s.element));
    }
    let side_of = |k: usize| (&sides[k / LOCAL_DOFS], k % LOCAL_DOFS);
    let h = edge.h_e;
    let eta = p.eta();
    let mut block = vec![vec![ZERO; n]; n];
    for (&t, &w) in points.iter().zip(weights) {
        // signed trace values s_K phi_k(t)
        let vals: Vec<Point> = (0..n)
            .map(|k| {
                let (s, l) = side_of(k);
                let v = basis_value(traces[k / LOCAL_DOFS].barycentric(t), l);
                [s.sign * v[0], s.sign * v[1]]
            })
            .collect();
        for a in 0..n {
            let (sa, la) = side_of(a);
            let avg_a = sa.stress_n[la];
            for b in 0..n {
                let (sb, lb) = side_of(b);
                let avg_b = sb.stress_n[lb];
                let dot = |x: Point, y: Point| x[0] * y[0] + x[1] * y[1];
                // -<{sigma(phi_b) n}, [phi_a]> + eta <[phi_b], {sigma(phi_a) n}>
                let flux = -0.5 * dot(avg_b, vals[a]) + eta * 0.5 * dot(vals[b], avg_a);
                let j0 = p.gamma0 / h * dot(vals[b], vals[a]);
                block[a][b] += Complex64::new(w * h * flux, w * h * j0);
            }
        }
    }
    for a in 0..n {
        let (sa, la) = side_of(a);
        for b in 0..n {
            let (sb, lb) = side_of(b);
            let ja = sa.stress_n[la];
            let jb = sb.stress_n[lb];
            let j1 = p.gamma1 * h * h * sa.sign * sb.sign * (ja[0] * jb[0] + ja[1] * jb[1]);
            block[a][b] += Complex64::new(0.0, j1);
        }
    }
    (dofs, block)
}

/// Load vector `(f, phi)_Omega + <g, phi>_Gamma` for arbitrary data.
pub fn load_vector_with<S: VectorP1Space>(
    space: &S,
    f: impl Fn(Point) -> CVec2,
    g: impl Fn(Point, Point) -> CVec2,
    quad_degree: usize,
) -> Result<Vec<Complex64>, AssemblyError> {
    let mesh = space.mesh();
    let tri = triangle_rule(quad_degree)?;
    let seg = segment_rule(quad_degree.min(crate::quadrature::MAX_SEGMENT_DEGREE))?;
    let mut rhs = vec![ZERO; space.n_dofs()];
    for e in 0..mesh.n_elements() {
        let geo = mesh.geometry(e);
        let dofs = space.element_dofs(e);
        for (bary, w) in tri.barycentric_toward(mesh.origin_corner(e).unwrap_or(1)) {
            let fx = f(geo.point(bary));
            let scale = w * 2.0 * geo.area;
            for (k, &d) in dofs.iter().enumerate() {
                rhs[d] += fx[k % 2] * (scale * bary[k / 2]);
            }
        }
    }
    for edge in &mesh.boundary_edges {
        let geo = mesh.geometry(edge.plus_element);
        let dofs = space.element_dofs(edge.plus_element);
        for (t, w) in seg.iter() {
            let bary = edge.plus_trace.barycentric(t);
            let gx = g(geo.point(bary), edge.normal);
            for (k, &d) in dofs.iter().enumerate() {
                rhs[d] += gx[k % 2] * (w * edge.h_e * bary[k / 2]);
            }
        }
    }
    Ok(rhs)
}

/// Load vector for the manufactured solution.
pub fn load_vector<S: VectorP1Space>(
    space: &S,
    p: &ProblemParams,
    quad_degree: usize,
) -> Result<Vec<Complex64>, AssemblyError> {
    load_vector_with(space, |x| source_f(x, p), |x, n| boundary_g(x, n, p), quad_degree)
}

fn finish<S: VectorP1Space>(
    space: &S,
    p: &ProblemParams,
    matrix: ComplexSparseMatrix,
    rhs: Vec<Complex64>,
    start: Instant,
) -> LinearSystem<S> {
    let diagnostics = AssemblyDiagnostics {
        dofs: space.n_dofs(),
        nnz: matrix.nnz(),
        assemble_time: start.elapsed(),
    };
    LinearSystem {
        matrix,
        rhs,
        space: space.clone(),
        params: *p,
        diagnostics,
    }
}

/// Interior-penalty DG system for the manufactured solution.
pub fn assemble_dg(space: &DgSpace, p: &ProblemParams, quad_rhs_degree: usize) -> Result<DgSystem, AssemblyError> {
    p.validate()?;
    let start = Instant::now();
    let rhs = load_vector(space, p, quad_rhs_degree)?;
    let matrix = assemble_matrix(space, p, Terms { edges: true, mass: true });
    Ok(finish(space, p, matrix, rhs, start))
}

/// Conforming P1 system for the manufactured solution.
pub fn assemble_fem(space: &FemSpace, p: &ProblemParams, quad_rhs_degree: usize) -> Result<FemSystem, AssemblyError> {
    p.validate()?;
    let start = Instant::now();
    let rhs = load_vector(space, p, quad_rhs_degree)?;
    let matrix = assemble_matrix(space, p, Terms { edges: false, mass: true });
    Ok(finish(space, p, matrix, rhs, start))
}

/// Only the DG matrix, without a load vector.
pub fn assemble_dg_matrix(space: &DgSpace, p: &ProblemParams) -> Result<ComplexSparseMatrix, AssemblyError> {
    p.validate()?;
    Ok(assemble_matrix(space, p, Terms { edges: true, mass: true }))
}

/// Only the conforming matrix, without a load vector.
pub fn assemble_fem_matrix(space: &FemSpace, p: &ProblemParams) -> Result<ComplexSparseMatrix, AssemblyError> {
    p.validate()?;
    Ok(assemble_matrix(space, p, Terms { edges: false, mass: true }))
}

/// Elliptic projection of `target`: the coercive part of the form (no mass
/// term) tested against the DG space, with the right-hand side evaluated on
/// the analytic operand.
pub fn assemble_elliptic_projection<F: ElementwiseField + ?Sized>(
    space: &DgSpace,
    p: &ProblemParams,
    target: &F,
    quad_degree: usize,
) -> Result<DgSystem, AssemblyError> {
    p.validate()?;
    let start = Instant::now();
    let rhs = form_against_basis(space, p, target, quad_degree)?.combine(p, false);
    let matrix = assemble_matrix(space, p, Terms { edges: true, mass: false });
    Ok(finish(space, p, matrix, rhs, start))
}

/// Individual terms of the form `A_h(u, v)`, unweighted by `i` or `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FormParts {
    /// sum_K lambda (div u, div v) + 2 mu (eps u, eps v)
    pub volume: Complex64,
    /// -sum_e <{sigma(u) n}, [v]>
    pub flux: Complex64,
    /// eta sum_e <[u], {sigma(v) n}>
    pub sym: Complex64,
    pub j0: Complex64,
    pub j1: Complex64,
    /// rho (u, v)
    pub mass: Complex64,
    /// <A u, v> on the boundary
    pub boundary: Complex64,
}

impl FormParts {
    /// `a_h(u, v)`: volume, flux and penalty terms.
    pub fn a_h(&self) -> Complex64 {
        self.volume + self.flux + self.sym + I * (self.j0 + self.j1)
    }

    /// `a_h(u, v) + i omega <A u, v>`.
    pub fn coercive(&self, p: &ProblemParams) -> Complex64 {
        self.a_h() + I * p.omega * self.boundary
    }

    /// The full form `A_h(u, v)`.
    pub fn total(&self, p: &ProblemParams) -> Complex64 {
        self.coercive(p) - p.omega * p.omega * self.mass
    }
}

/// Every term of `A_h(u, phi_k)` for all DG basis functions `phi_k`.
#[derive(Debug, Clone)]
pub struct FormVectors {
    pub volume: Vec<Complex64>,
    pub flux: Vec<Complex64>,
    pub sym: Vec<Complex64>,
    pub j0: Vec<Complex64>,
    pub j1: Vec<Complex64>,
    pub mass: Vec<Complex64>,
    pub boundary: Vec<Complex64>,
}

impl FormVectors {
    fn zeros(n: usize) -> Self {
        let z = vec![ZERO; n];
        Self {
            volume: z.clone(),
            flux: z.clone(),
            sym: z.clone(),
            j0: z.clone(),
            j1: z.clone(),
            mass: z.clone(),
            boundary: z,
        }
    }

    pub fn combine(&self, p: &ProblemParams, with_mass: bool) -> Vec<Complex64> {
        let mass_w = if with_mass { -p.omega * p.omega } else { 0.0 };
        (0..self.volume.len())
            .map(|k| {
                self.volume[k]
                    + self.flux[k]
                    + self.sym[k]
                    + I * (self.j0[k] + self.j1[k])
                    + self.mass[k] * mass_w
                    + I * p.omega * self.boundary[k]
            })
            .collect()
    }

    /// Contracts against a DG field: `A_h(u, v) = sum_k conj(v_k) A_h(u, phi_k)`.
    pub fn contract(&self, right: &DgField) -> FormParts {
        let v = right.coeffs();
        let dot = |x: &[Complex64]| x.iter().zip(v).map(|(a, b)| a * b.conj()).sum();
        FormParts {
            volume: dot(&self.volume),
            flux: dot(&self.flux),
            sym: dot(&self.sym),
            j0: dot(&self.j0),
            j1: dot(&self.j1),
            mass: dot(&self.mass),
            boundary: dot(&self.boundary),
        }
    }
}

fn cdot(a: CVec2, b: Point) -> Complex64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Matrix-free evaluation of every term of `A_h(left, phi_k)`.
pub fn form_against_basis<F: ElementwiseField + ?Sized>(
    space: &DgSpace,
    p: &ProblemParams,
    left: &F,
    quad_degree: usize,
) -> Result<FormVectors, AssemblyError> {
    let mesh = space.mesh();
    let tri = triangle_rule(quad_degree)?;
    let seg = segment_rule(quad_degree.min(crate::quadrature::MAX_SEGMENT_DEGREE))?;
    let mut out = FormVectors::zeros(space.n_dofs());
    for e in 0..mesh.n_elements() {
        let geo = mesh.geometry(e);
        let dofs = space.element_dofs(e);
        let grads: [RMat2; LOCAL_DOFS] = std::array::from_fn(|k| basis_grad(&geo.grad_bary, k));
        for (bary, w) in tri.barycentric_toward(mesh.origin_corner(e).unwrap_or(1)) {
            let x = geo.point(bary);
            let scale = w * 2.0 * geo.area;
            let u = left.value(e, bary, x);
            let s = p.stress_from_grad(&left.gradient(e, bary, x));
            for (k, &d) in dofs.iter().enumerate() {
                let mut vol = ZERO;
                for i in 0..2 {
                    for j in 0..2 {
                        vol += s[i][j] * grads[k][i][j];
                    }
                }
                out.volume[d] += vol * scale;
                out.mass[d] += u[k % 2] * (p.rho * scale * bary[k / 2]);
            }
        }
    }
    let eta = p.eta();
    for edge in &mesh.interior_edges {
        let sides = edge_sides(space, p, edge);
        let minus = edge.minus_element.expect("interior edge");
        let mtrace = edge.minus_trace.expect("interior edge");
        let pgeo = mesh.geometry(edge.plus_element);
        let h = edge.h_e;
        for (t, w) in seg.iter() {
            let pb = edge.plus_trace.barycentric(t);
            let mb = mtrace.barycentric(t);
            let x = pgeo.point(pb);
            let up = left.value(edge.plus_element, pb, x);
            let um = left.value(minus, mb, x);
            let sp = mat_vec(&p.stress_from_grad(&left.gradient(edge.plus_element, pb, x)), edge.normal);
            let sm = mat_vec(&p.stress_from_grad(&left.gradient(minus, mb, x)), edge.normal);
            let jump = [up[0] - um[0], up[1] - um[1]];
            let avg_s = [(sp[0] + sm[0]) * 0.5, (sp[1] + sm[1]) * 0.5];
            let jump_s = [sp[0] - sm[0], sp[1] - sm[1]];
            for (side, bary) in sides.iter().zip([pb, mb]) {
                let dofs = space.element_dofs(side.element);
                for (k, &d) in dofs.iter().enumerate() {
                    let phi = basis_value(bary, k);
                    let signed = [side.sign * phi[0], side.sign * phi[1]];
                    let sn = side.stress_n[k];
                    out.flux[d] -= cdot(avg_s, signed) * (w * h);
                    out.sym[d] += cdot(jump, sn) * (eta * 0.5 * w * h);
                    out.j0[d] += cdot(jump, signed) * (p.gamma0 * w);
                    out.j1[d] += cdot(jump_s, sn) * (side.sign * p.gamma1 * h * h * w);
                }
            }
        }
    }
    for edge in &mesh.boundary_edges {
        let geo = mesh.geometry(edge.plus_element);
        let dofs = space.element_dofs(edge.plus_element);
        for (t, w) in seg.iter() {
            let bary = edge.plus_trace.barycentric(t);
            let x = geo.point(bary);
            let au = p.apply_a(left.value(edge.plus_element, bary, x));
            for (k, &d) in dofs.iter().enumerate() {
                out.boundary[d] += cdot(au, basis_value(bary, k)) * (w * edge.h_e);
            }
        }
    }
    Ok(out)
}

/// Matrix-free `A_h(left, right)` split into its terms.
pub fn apply_form<F: ElementwiseField + ?Sized>(
    p: &ProblemParams,
    left: &F,
    right: &DgField,
    quad_degree: usize,
) -> Result<FormParts, AssemblyError> {
    let space = right.space();
    Ok(form_against_basis(space, p, left, quad_degree)?.contract(right))
}

/// `max_k |A_h(u, phi_k) - (f, phi_k) - <g, phi_k>|` for an analytic `u`
/// with matching data `f`, `g`.
pub fn consistency_residual_with<F: ElementwiseField + ?Sized>(
    mesh: &Arc<Mesh>,
    p: &ProblemParams,
    u: &F,
    f: impl Fn(Point) -> CVec2,
    g: impl Fn(Point, Point) -> CVec2,
    quad_degree: usize,
) -> Result<f64, AssemblyError> {
    p.validate()?;
    let space = DgSpace::new(mesh.clone());
    let lhs = form_against_basis(&space, p, u, quad_degree)?.combine(p, true);
    let rhs = load_vector_with(&space, f, g, quad_degree)?;
    Ok(lhs.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
}

/// Consistency residual of the manufactured solution; pure quadrature error.
pub fn consistency_residual(mesh: &Arc<Mesh>, p: &ProblemParams, quad_degree: usize) -> Result<f64, AssemblyError> {
    consistency_residual_with(
        mesh,
        p,
        &ExactSolution { params: *p },
        |x| source_f(x, p),
        |x, n| boundary_g(x, n, p),
        quad_degree,
    )
}
