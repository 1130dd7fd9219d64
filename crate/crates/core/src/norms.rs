//! Broken energy norms of discrete fields and of errors against the exact
//! solution.

use num_complex::Complex64;

use crate::manufactured::{CMat2, ProblemParams};
use crate::mesh::Mesh;
use crate::quadrature::{segment_rule, triangle_rule, QuadratureError, MAX_SEGMENT_DEGREE};
use crate::space::{mat_vec, Difference, ElementwiseField, ExactSolution, Field, VectorP1Space};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    /// `|v|_{1,h}`
    pub seminorm_1h: f64,
    /// `||v||_{1,h}`, adds the penalty terms.
    pub norm_1h: f64,
    /// `|||v|||_{1,h}`, adds the weighted normal-stress averages.
    pub triple_norm_1h: f64,
    pub l2_domain: f64,
    pub l2_boundary: f64,
    /// `<A v, v>` on the boundary.
    pub boundary_impedance: f64,
    /// `J0(v, v)`
    pub j0: f64,
    /// `J1(v, v)`
    pub j1: f64,
}

fn energy_density(p: &ProblemParams, g: &CMat2) -> f64 {
    let div = g[0][0] + g[1][1];
    let mut eps2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            eps2 += ((g[i][j] + g[j][i]) * 0.5).norm_sqr();
        }
    }
    p.lambda * div.norm_sqr() + 2.0 * p.mu * eps2
}

/// All norms of an elementwise field, integrated with rules of `quad_degree`.
pub fn norms_of_operand<F: ElementwiseField + ?Sized>(
    mesh: &Mesh,
    p: &ProblemParams,
    v: &F,
    quad_degree: usize,
) -> Result<NormReport, QuadratureError> {
    let tri = triangle_rule(quad_degree)?;
    let seg = segment_rule(quad_degree.min(MAX_SEGMENT_DEGREE))?;
    let (mut semi2, mut l2) = (0.0, 0.0);
    for e in 0..mesh.n_elements() {
        let geo = mesh.geometry(e);
        for (bary, w) in tri.barycentric_toward(mesh.origin_corner(e).unwrap_or(1)) {
            let x = geo.point(bary);
            let scale = w * 2.0 * geo.area;
            let val = v.value(e, bary, x);
            semi2 += scale * energy_density(p, &v.gradient(e, bary, x));
            l2 += scale * (val[0].norm_sqr() + val[1].norm_sqr());
        }
    }
    let (mut j0, mut j1, mut avg2) = (0.0, 0.0, 0.0);
    for edge in &mesh.interior_edges {
        let minus = edge.minus_element.expect("interior edge");
        let mtrace = edge.minus_trace.expect("interior edge");
        let pgeo = mesh.geometry(edge.plus_element);
        let h = edge.h_e;
        for (t, w) in seg.iter() {
            let pb = edge.plus_trace.barycentric(t);
            let mb = mtrace.barycentric(t);
            let x = pgeo.point(pb);
            let up = v.value(edge.plus_element, pb, x);
            let um = v.value(minus, mb, x);
            let sp = mat_vec(&p.stress_from_grad(&v.gradient(edge.plus_element, pb, x)), edge.normal);
            let sm = mat_vec(&p.stress_from_grad(&v.gradient(minus, mb, x)), edge.normal);
            let mut jump2 = 0.0;
            let mut sjump2 = 0.0;
            let mut savg2 = 0.0;
            for c in 0..2 {
                jump2 += (up[c] - um[c]).norm_sqr();
                sjump2 += (sp[c] - sm[c]).norm_sqr();
                savg2 += ((sp[c] + sm[c]) * 0.5).norm_sqr();
            }
            j0 += p.gamma0 / h * w * h * jump2;
            j1 += p.gamma1 * h * w * h * sjump2;
            avg2 += h / p.gamma0 * w * h * savg2;
        }
    }
    let (mut b2, mut imp) = (0.0, 0.0);
    for edge in &mesh.boundary_edges {
        let geo = mesh.geometry(edge.plus_element);
        for (t, w) in seg.iter() {
            let bary = edge.plus_trace.barycentric(t);
            let val = v.value(edge.plus_element, bary, geo.point(bary));
            let av = p.apply_a(val);
            let scale = w * edge.h_e;
            b2 += scale * (val[0].norm_sqr() + val[1].norm_sqr());
            imp += scale * (av[0] * val[0].conj() + av[1] * val[1].conj()).re;
        }
    }
    let norm2 = semi2 + j0 + j1;
    Ok(NormReport {
        seminorm_1h: semi2.sqrt(),
        norm_1h: norm2.sqrt(),
        triple_norm_1h: (norm2 + avg2).sqrt(),
        l2_domain: l2.sqrt(),
        l2_boundary: b2.sqrt(),
        boundary_impedance: imp,
        j0,
        j1,
    })
}

/// Norms of a discrete field. All integrands are polynomial of degree at
/// most two, so the result is exact up to rounding.
pub fn norms_of<S: VectorP1Space>(field: &Field<S>, p: &ProblemParams) -> NormReport {
    norms_of_operand(field.mesh(), p, field, 2).expect("degree 2 is supported")
}

/// Norms of `u - field` with `u` the manufactured solution.
pub fn error_vs_exact<S: VectorP1Space>(
    field: &Field<S>,
    p: &ProblemParams,
    quad_degree: usize,
) -> Result<NormReport, QuadratureError> {
    let exact = ExactSolution { params: *p };
    let diff = Difference {
        left: &exact,
        right: field,
    };
    norms_of_operand(field.mesh(), p, &diff, quad_degree)
}

/// Relative errors of a discrete solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeErrors {
    pub error: NormReport,
    pub exact: NormReport,
    /// `|u - u_h|_{1,h} / |u|_{1,h}`
    pub h1_semi: f64,
    /// `||u - u_h||_{1,h} / ||u||_{1,h}`
    pub norm_1h: f64,
    pub l2: f64,
}

pub fn relative_errors<S: VectorP1Space>(
    field: &Field<S>,
    p: &ProblemParams,
    quad_degree: usize,
) -> Result<RelativeErrors, QuadratureError> {
    let error = error_vs_exact(field, p, quad_degree)?;
    let exact = norms_of_operand(field.mesh(), p, &ExactSolution { params: *p }, quad_degree)?;
    Ok(RelativeErrors {
        error,
        exact,
        h1_semi: error.seminorm_1h / exact.seminorm_1h,
        norm_1h: error.norm_1h / exact.norm_1h,
        l2: error.l2_domain / exact.l2_domain,
    })
}

/// `sum_e <{sigma(v) n}, [v]>` over interior edges (exact for P1 fields).
pub fn flux_pairing<S: VectorP1Space>(field: &Field<S>, p: &ProblemParams) -> Complex64 {
    let seg = segment_rule(2).expect("degree 2 is supported");
    let mut sum = Complex64::new(0.0, 0.0);
    for edge in &field.mesh().interior_edges {
        for (t, w) in seg.iter() {
            let tr = field.jump_and_average_traces(edge, t, p);
            for c in 0..2 {
                sum += tr.stress_average[c] * tr.jump[c].conj() * (w * edge.h_e);
            }
        }
    }
    sum
}
