//! Gauss quadrature on the reference segment [0, 1] and the reference
//! triangle {x, y >= 0, x + y <= 1}.
//!
//! Segment rules are Gauss-Legendre. Triangle rules are conical products of
//! Gauss-Legendre rules pushed through the collapsed (Duffy) map, which keeps
//! all weights positive and all points strictly inside the triangle.

use thiserror::Error;

pub const MAX_TRIANGLE_DEGREE: usize = 12;
pub const MAX_SEGMENT_DEGREE: usize = 21;

#[derive(Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("unsupported triangle quadrature degree {0} (max {MAX_TRIANGLE_DEGREE})")]
    TriangleDegree(usize),
    #[error("unsupported segment quadrature degree {0} (max {MAX_SEGMENT_DEGREE})")]
    SegmentDegree(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule<P> {
    pub points: Vec<P>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

pub type TriangleRule = QuadRule<[f64; 2]>;
pub type SegmentRule = QuadRule<f64>;

impl<P: Copy> QuadRule<P> {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (P, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

impl TriangleRule {
    /// Points as barycentric coordinates `(1 - x - y, x, y)`.
    pub fn barycentric(&self) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        self.iter().map(|([x, y], w)| ([1.0 - x - y, x, y], w))
    }

    /// Barycentric points rotated so that the collapsed vertex of the rule
    /// sits at local vertex `corner`. Integrands with a `1/r` singularity at
    /// that corner become smooth under the collapsed map.
    pub fn barycentric_toward(&self, corner: usize) -> impl Iterator<Item = ([f64; 3], f64)> + '_ {
        let k = corner % 3;
        self.barycentric().map(move |(b, w)| ([b[(4 - k) % 3], b[(5 - k) % 3], b[(3 - k) % 3]], w))
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..(m + 1) / 2 {
        // Tricomi initial guess, then Newton on P_m.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn unit_interval(m: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(m);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

/// Gauss-Legendre rule on [0, 1], exact through `degree`.
///
/// Two points beyond the minimum are used: edge integrands of the load
/// vector oscillate, and the extra points are cheap next to the triangle
/// rules.
pub fn segment_rule(degree: usize) -> Result<SegmentRule, QuadratureError> {
    if degree > MAX_SEGMENT_DEGREE {
        return Err(QuadratureError::SegmentDegree(degree));
    }
    let m = degree / 2 + 3;
    let (points, weights) = unit_interval(m);
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}

/// Rule on the reference triangle exact for total degree `degree`.
pub fn triangle_rule(degree: usize) -> Result<TriangleRule, QuadratureError> {
    if degree > MAX_TRIANGLE_DEGREE {
        return Err(QuadratureError::TriangleDegree(degree));
    }
    // x = s, y = (1 - s) t with Jacobian (1 - s): the s-direction integrand
    // has degree `degree + 1`.
    let m = (degree + 3) / 2;
    let (s, ws) = unit_interval(m);
    let (t, wt) = unit_interval(m);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (si, wsi) in s.iter().zip(&ws) {
        for (tj, wtj) in t.iter().zip(&wt) {
            points.push([*si, (1.0 - si) * tj]);
            weights.push(wsi * wtj * (1.0 - si));
        }
    }
    Ok(QuadRule {
        points,
        weights,
        degree,
    })
}
