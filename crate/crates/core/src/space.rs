//! Vector P1 spaces on a [`Mesh`]: the fully discontinuous space used by the
//! interior-penalty method and the continuous (conforming) baseline space.
//!
//! Both spaces use barycentric hat functions. The element-local ordering of
//! the six vector basis functions is `(v0 x, v0 y, v1 x, v1 y, v2 x, v2 y)`,
//! i.e. local index `2 * vertex + component`.

use std::sync::Arc;

use num_complex::Complex64;
use thiserror::Error;

use crate::manufactured::{exact_fields, CMat2, CVec2, ProblemParams};
use crate::mesh::{EdgeInfo, Mesh, Point};

pub const LOCAL_DOFS: usize = 6;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("element index {0} out of range")]
    ElementOutOfRange(usize),
    #[error("coefficient vector has length {got}, space has {expected} dofs")]
    LengthMismatch { expected: usize, got: usize },
    #[error("field value at vertex {0} is not finite")]
    NonFinite(usize),
}

pub trait VectorP1Space: Clone {
    fn mesh(&self) -> &Arc<Mesh>;
    fn n_dofs(&self) -> usize;
    /// Global indices of the six local basis functions of `element`.
    fn element_dofs(&self, element: usize) -> [usize; LOCAL_DOFS];
    fn is_conforming(&self) -> bool;
}

/// Fully discontinuous vector P1: global dof = 6 * element + local.
#[derive(Debug, Clone)]
pub struct DgSpace {
    mesh: Arc<Mesh>,
}

impl DgSpace {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        Self { mesh }
    }
}

impl VectorP1Space for DgSpace {
    fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    fn n_dofs(&self) -> usize {
        LOCAL_DOFS * self.mesh.n_elements()
    }

    fn element_dofs(&self, element: usize) -> [usize; LOCAL_DOFS] {
        std::array::from_fn(|k| LOCAL_DOFS * element + k)
    }

    fn is_conforming(&self) -> bool {
        false
    }
}

/// Continuous vector P1: two dofs per mesh vertex.
#[derive(Debug, Clone)]
pub struct FemSpace {
    mesh: Arc<Mesh>,
}

impl FemSpace {
    pub fn new(mesh: Arc<Mesh>) -> Self {
        Self { mesh }
    }
}

impl VectorP1Space for FemSpace {
    fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    fn n_dofs(&self) -> usize {
        2 * self.mesh.vertices.len()
    }

    fn element_dofs(&self, element: usize) -> [usize; LOCAL_DOFS] {
        let tri = self.mesh.triangles[element];
        std::array::from_fn(|k| 2 * tri[k / 2] + k % 2)
    }

    fn is_conforming(&self) -> bool {
        true
    }
}

/// Anything that can be evaluated elementwise together with its gradient:
/// discrete fields, the exact solution, and differences of the two.
pub trait ElementwiseField {
    fn value(&self, element: usize, bary: [f64; 3], x: Point) -> CVec2;
    fn gradient(&self, element: usize, bary: [f64; 3], x: Point) -> CMat2;
}

/// Coefficient vector over a vector P1 space.
#[derive(Debug, Clone)]
pub struct Field<S> {
    space: S,
    coeffs: Vec<Complex64>,
}

pub type DgField = Field<DgSpace>;
pub type FemField = Field<FemSpace>;

impl<S: VectorP1Space> Field<S> {
    pub fn new(space: S, coeffs: Vec<Complex64>) -> Result<Self, SpaceError> {
        let expected = space.n_dofs();
        if coeffs.len() != expected {
            return Err(SpaceError::LengthMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(Self { space, coeffs })
    }

    pub fn zeros(space: S) -> Self {
        let n = space.n_dofs();
        Self {
            space,
            coeffs: vec![ZERO; n],
        }
    }

    pub fn space(&self) -> &S {
        &self.space
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn local_coeffs(&self, element: usize) -> [Complex64; LOCAL_DOFS] {
        self.space.element_dofs(element).map(|g| self.coeffs[g])
    }

    /// Vertex-value interpolation of an analytic field.
    pub fn interpolate(space: S, f: impl Fn(Point) -> CVec2) -> Result<Self, SpaceError> {
        let mesh = space.mesh().clone();
        let mut coeffs = vec![ZERO; space.n_dofs()];
        for (e, tri) in mesh.triangles.iter().enumerate() {
            let dofs = space.element_dofs(e);
            for (a, &v) in tri.iter().enumerate() {
                let val = f(mesh.vertices[v]);
                if !val.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                    return Err(SpaceError::NonFinite(v));
                }
                coeffs[dofs[2 * a]] = val[0];
                coeffs[dofs[2 * a + 1]] = val[1];
            }
        }
        Ok(Self { space, coeffs })
    }

    pub fn eval(&self, element: usize, bary: [f64; 3]) -> Result<CVec2, SpaceError> {
        if element >= self.mesh().n_elements() {
            return Err(SpaceError::ElementOutOfRange(element));
        }
        Ok(eval_local(&self.local_coeffs(element), bary))
    }

    /// Constant gradient on `element`.
    pub fn element_gradient(&self, element: usize) -> CMat2 {
        let g = self.mesh().geometry(element);
        grad_local(&self.local_coeffs(element), &g.grad_bary)
    }

    pub fn element_stress(&self, element: usize, p: &ProblemParams) -> CMat2 {
        p.stress_from_grad(&self.element_gradient(element))
    }

    /// Elementwise divergence of the stress. Zero for every P1 field; the
    /// stress is stored as an element constant, so this is exact.
    pub fn element_div_stress(&self, _element: usize) -> CVec2 {
        [ZERO; 2]
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().map(|c| c * alpha).collect(),
        }
    }

    pub fn axpy(&self, alpha: Complex64, other: &Self) -> Self {
        assert_eq!(self.coeffs.len(), other.coeffs.len());
        Self {
            space: self.space.clone(),
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b * alpha).collect(),
        }
    }

    /// Jump, average, normal-stress jump and normal-stress average at edge
    /// parameter `t`.
    pub fn jump_and_average_traces(&self, edge: &EdgeInfo, t: f64, p: &ProblemParams) -> EdgeTraces {
        let side = |e: usize, bary: [f64; 3]| {
            let v = eval_local(&self.local_coeffs(e), bary);
            let s = self.element_stress(e, p);
            (v, mat_vec(&s, edge.normal))
        };
        let (vp, sp) = side(edge.plus_element, edge.plus_trace.barycentric(t));
        match (edge.minus_element, edge.minus_trace) {
            (Some(m), Some(tr)) => {
                let (vm, sm) = side(m, tr.barycentric(t));
                EdgeTraces {
                    jump: [vp[0] - vm[0], vp[1] - vm[1]],
                    average: [(vp[0] + vm[0]) * 0.5, (vp[1] + vm[1]) * 0.5],
                    stress_jump: [sp[0] - sm[0], sp[1] - sm[1]],
                    stress_average: [(sp[0] + sm[0]) * 0.5, (sp[1] + sm[1]) * 0.5],
                }
            }
            _ => EdgeTraces {
                jump: vp,
                average: vp,
                stress_jump: sp,
                stress_average: sp,
            },
        }
    }
}

impl FemField {
    /// The same function represented in the discontinuous space.
    pub fn to_dg(&self) -> DgField {
        let mesh = self.mesh().clone();
        let dg = DgSpace::new(mesh.clone());
        let mut coeffs = vec![ZERO; dg.n_dofs()];
        for e in 0..mesh.n_elements() {
            let local = self.local_coeffs(e);
            coeffs[LOCAL_DOFS * e..LOCAL_DOFS * (e + 1)].copy_from_slice(&local);
        }
        Field { space: dg, coeffs }
    }
}

impl<S: VectorP1Space> ElementwiseField for Field<S> {
    fn value(&self, element: usize, bary: [f64; 3], _x: Point) -> CVec2 {
        eval_local(&self.local_coeffs(element), bary)
    }

    fn gradient(&self, element: usize, _bary: [f64; 3], _x: Point) -> CMat2 {
        self.element_gradient(element)
    }
}

/// Traces of a field on an edge. On boundary edges all four equal the
/// one-sided trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTraces {
    pub jump: CVec2,
    pub average: CVec2,
    pub stress_jump: CVec2,
    pub stress_average: CVec2,
}

/// The manufactured exact solution as an [`ElementwiseField`].
#[derive(Debug, Clone, Copy)]
pub struct ExactSolution {
    pub params: ProblemParams,
}

impl ElementwiseField for ExactSolution {
    fn value(&self, _element: usize, _bary: [f64; 3], x: Point) -> CVec2 {
        crate::manufactured::exact_u(x, &self.params)
    }

    fn gradient(&self, _element: usize, _bary: [f64; 3], x: Point) -> CMat2 {
        exact_fields(x, &self.params).grad_u
    }
}

/// An analytic field given by closures for value and gradient.
pub struct AnalyticField<F, G> {
    pub value: F,
    pub gradient: G,
}

impl<F, G> ElementwiseField for AnalyticField<F, G>
where
    F: Fn(Point) -> CVec2,
    G: Fn(Point) -> CMat2,
{
    fn value(&self, _element: usize, _bary: [f64; 3], x: Point) -> CVec2 {
        (self.value)(x)
    }

    fn gradient(&self, _element: usize, _bary: [f64; 3], x: Point) -> CMat2 {
        (self.gradient)(x)
    }
}

/// `left - right`.
pub struct Difference<'a, A: ?Sized, B: ?Sized> {
    pub left: &'a A,
    pub right: &'a B,
}

impl<A: ElementwiseField + ?Sized, B: ElementwiseField + ?Sized> ElementwiseField for Difference<'_, A, B> {
    fn value(&self, element: usize, bary: [f64; 3], x: Point) -> CVec2 {
        let a = self.left.value(element, bary, x);
        let b = self.right.value(element, bary, x);
        [a[0] - b[0], a[1] - b[1]]
    }

    fn gradient(&self, element: usize, bary: [f64; 3], x: Point) -> CMat2 {
        let a = self.left.gradient(element, bary, x);
        let b = self.right.gradient(element, bary, x);
        [[a[0][0] - b[0][0], a[0][1] - b[0][1]], [a[1][0] - b[1][0], a[1][1] - b[1][1]]]
    }
}

pub(crate) fn eval_local(c: &[Complex64; LOCAL_DOFS], bary: [f64; 3]) -> CVec2 {
    let mut v = [ZERO; 2];
    for a in 0..3 {
        v[0] += c[2 * a] * bary[a];
        v[1] += c[2 * a + 1] * bary[a];
    }
    v
}

pub(crate) fn grad_local(c: &[Complex64; LOCAL_DOFS], grad_bary: &[Point; 3]) -> CMat2 {
    let mut g = [[ZERO; 2]; 2];
    for a in 0..3 {
        for comp in 0..2 {
            for j in 0..2 {
                g[comp][j] += c[2 * a + comp] * grad_bary[a][j];
            }
        }
    }
    g
}

pub(crate) fn mat_vec(m: &CMat2, n: Point) -> CVec2 {
    [m[0][0] * n[0] + m[0][1] * n[1], m[1][0] * n[0] + m[1][1] * n[1]]
}
