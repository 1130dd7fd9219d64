//! Problem parameters and the radial manufactured solution
//!
//! ```text
//! u(x) = (1 / (omega^2 r)) [exp(i omega r) - 1, exp(-i omega r) - 1],   r = |x|
//! ```
//!
//! together with every derived field the solver needs: gradient, strain,
//! stress, divergence of stress, body force `f` and boundary data `g`.

use num_complex::Complex64;
use thiserror::Error;

use crate::mesh::Point;

pub type CVec2 = [Complex64; 2];
pub type CMat2 = [[Complex64; 2]; 2];

/// Symmetrization parameter of the interior-penalty form (symmetric case).
pub const ETA: f64 = -1.0;

/// Radius below which the closed-form expressions are replaced by their
/// Taylor expansion.
pub const R_GUARD: f64 = 1e-4;

/// The closed form cancels badly for small |k| r, so the series is also used
/// below this phase.
const THETA_SERIES: f64 = 0.25;
const SERIES_TERMS: u32 = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("frequency must be positive, got {0}")]
    Frequency(f64),
    #[error("material constant {name} must be positive, got {value}")]
    Material { name: &'static str, value: f64 },
    #[error("penalty gamma0 must be positive, got {0}")]
    Gamma0(f64),
    #[error("penalty gamma1 must be non-negative, got {0}")]
    Gamma1(f64),
    #[error("boundary matrix A must be symmetric positive definite")]
    ImpedanceMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub omega: f64,
    pub rho: f64,
    pub lambda: f64,
    pub mu: f64,
    /// Real SPD boundary impedance matrix.
    pub a: [[f64; 2]; 2],
    pub gamma0: f64,
    pub gamma1: f64,
}

impl ProblemParams {
    /// rho = mu = lambda = 1, gamma0 = 10, gamma1 = 0.1, A = I.
    pub fn standard(omega: f64) -> Self {
        Self {
            omega,
            rho: 1.0,
            lambda: 1.0,
            mu: 1.0,
            a: [[1.0, 0.0], [0.0, 1.0]],
            gamma0: 10.0,
            gamma1: 0.1,
        }
    }

    pub fn eta(&self) -> f64 {
        ETA
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(ParamsError::Frequency(self.omega));
        }
        for (name, value) in [("rho", self.rho), ("lambda", self.lambda), ("mu", self.mu)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamsError::Material { name, value });
            }
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(ParamsError::Gamma0(self.gamma0));
        }
        if !(self.gamma1 >= 0.0 && self.gamma1.is_finite()) {
            return Err(ParamsError::Gamma1(self.gamma1));
        }
        let a = self.a;
        let symmetric = a[0][1] == a[1][0];
        let trace = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !(symmetric && trace > 0.0 && det > 0.0) {
            return Err(ParamsError::ImpedanceMatrix);
        }
        Ok(())
    }

    /// xi = 1 + 1/gamma0.
    pub fn xi(&self) -> f64 {
        1.0 + 1.0 / self.gamma0
    }

    /// Stability constant xi/omega + 1/(omega^2 h) + 1/(omega^3 h^2 gamma1).
    pub fn c_sta(&self, h: f64) -> f64 {
        let w = self.omega;
        self.xi() / w + 1.0 / (w * w * h) + 1.0 / (w * w * w * h * h * self.gamma1)
    }

    pub fn apply_a(&self, v: CVec2) -> CVec2 {
        [
            v[0] * self.a[0][0] + v[1] * self.a[0][1],
            v[0] * self.a[1][0] + v[1] * self.a[1][1],
        ]
    }

    /// sigma(u) = 2 mu eps(u) + lambda tr(eps(u)) I for a given gradient.
    pub fn stress_from_grad(&self, grad: &CMat2) -> CMat2 {
        let div = grad[0][0] + grad[1][1];
        let mut s = [[ZERO; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                s[i][j] = (grad[i][j] + grad[j][i]) * self.mu;
            }
            s[i][i] += div * self.lambda;
        }
        s
    }
}

/// Pointwise values of the exact solution and its derived fields.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub u: CVec2,
    /// `grad_u[i][j] = d u_i / d x_j`.
    pub grad_u: CMat2,
    pub strain: CMat2,
    pub stress: CMat2,
    pub div_stress: CVec2,
}

/// g(r) = (exp(i k r) - 1) / (omega^2 r) and its first two derivatives.
fn radial_profile(k: f64, omega: f64, r: f64) -> [Complex64; 3] {
    let w2 = omega * omega;
    if r < R_GUARD || k.abs() * r < THETA_SERIES {
        // exp(i k r) - 1 = sum_{m >= 1} (i k r)^m / m!
        let ik = I * k;
        let mut g = ZERO;
        let mut g1 = ZERO;
        let mut g2 = ZERO;
        let mut coef = Complex64::new(1.0, 0.0); // (ik)^m / m!
        let mut rp = [0.0; 3]; // r^(m-1), r^(m-2), r^(m-3)
        for m in 1..=SERIES_TERMS {
            coef = coef * ik / m as f64;
            let mf = m as f64;
            rp = match m {
                1 => [1.0, 0.0, 0.0],
                2 => [r, 1.0, 0.0],
                3 => [r * r, r, 1.0],
                _ => [rp[0] * r, rp[1] * r, rp[2] * r],
            };
            g += coef * rp[0];
            g1 += coef * ((mf - 1.0) * rp[1]);
            g2 += coef * ((mf - 1.0) * (mf - 2.0) * rp[2]);
        }
        return [g / w2, g1 / w2, g2 / w2];
    }
    let e = (I * k * r).exp();
    let em1 = e - 1.0;
    let g = em1 / (w2 * r);
    let g1 = (I * k * e * r - em1) / (w2 * r * r);
    let g2 = ((I * k) * (I * k) * e * r * r - 2.0 * I * k * e * r + 2.0 * em1) / (w2 * r * r * r);
    [g, g1, g2]
}

/// Gradient and Hessian of a radial function with profile derivatives
/// `g1 = g'(r)`, `g2 = g''(r)`.
fn radial_derivatives(x: Point, r: f64, g1: Complex64, g2: Complex64) -> ([Complex64; 2], [[Complex64; 2]; 2]) {
    if r == 0.0 {
        // The gradient of the cone-like profile has no limit at the origin;
        // use the x-axis direction so that the value stays finite.
        let grad = [g1, ZERO];
        let hess = [[g2, ZERO], [ZERO, ZERO]];
        return (grad, hess);
    }
    let xh = [x[0] / r, x[1] / r];
    let grad = [g1 * xh[0], g1 * xh[1]];
    let g1r = g1 / r;
    let mut hess = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            hess[i][j] = g2 * xh[i] * xh[j] + g1r * (delta - xh[i] * xh[j]);
        }
    }
    (grad, hess)
}

pub fn exact_u(x: Point, p: &ProblemParams) -> CVec2 {
    let r = x[0].hypot(x[1]);
    let [gp, ..] = radial_profile(p.omega, p.omega, r);
    let [gm, ..] = radial_profile(-p.omega, p.omega, r);
    [gp, gm]
}

pub fn exact_fields(x: Point, p: &ProblemParams) -> FieldSample {
    let r = x[0].hypot(x[1]);
    let prof = [
        radial_profile(p.omega, p.omega, r),
        radial_profile(-p.omega, p.omega, r),
    ];
    let mut u = [ZERO; 2];
    let mut grad_u = [[ZERO; 2]; 2];
    let mut hess = [[[ZERO; 2]; 2]; 2];
    for c in 0..2 {
        let [g, g1, g2] = prof[c];
        u[c] = g;
        let (gr, h) = radial_derivatives(x, r, g1, g2);
        grad_u[c] = gr;
        hess[c] = h;
    }
    let mut strain = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            strain[i][j] = (grad_u[i][j] + grad_u[j][i]) * 0.5;
        }
    }
    let stress = p.stress_from_grad(&grad_u);
    // (div sigma)_i = mu lap u_i + (lambda + mu) d_i div u
    let mut div_stress = [ZERO; 2];
    for i in 0..2 {
        let lap = hess[i][0][0] + hess[i][1][1];
        let grad_div = hess[0][0][i] + hess[1][1][i];
        div_stress[i] = lap * p.mu + grad_div * (p.lambda + p.mu);
    }
    FieldSample {
        u,
        grad_u,
        strain,
        stress,
        div_stress,
    }
}

/// f = -omega^2 rho u - div sigma(u).
pub fn source_f(x: Point, p: &ProblemParams) -> CVec2 {
    let s = exact_fields(x, p);
    let w2r = p.omega * p.omega * p.rho;
    [-s.u[0] * w2r - s.div_stress[0], -s.u[1] * w2r - s.div_stress[1]]
}

/// g = i omega A u + sigma(u) n.
pub fn boundary_g(x: Point, normal: Point, p: &ProblemParams) -> CVec2 {
    let s = exact_fields(x, p);
    let au = p.apply_a(s.u);
    let mut g = [ZERO; 2];
    for i in 0..2 {
        g[i] = I * p.omega * au[i] + s.stress[i][0] * normal[0] + s.stress[i][1] * normal[1];
    }
    g
}

/// Maximum absolute deviations between analytic derivatives and central
/// finite differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfCheckReport {
    pub samples: usize,
    pub step: f64,
    pub grad_u: f64,
    pub div_stress: f64,
    pub source: f64,
}

impl SelfCheckReport {
    pub fn max(&self) -> f64 {
        self.grad_u.max(self.div_stress).max(self.source)
    }
}

/// Halton point in (-0.5, 0.5)^2.
fn halton(index: usize, base: usize) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    let mut i = index;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Quasi-random sample points in the domain with `|x| >= r_min`.
pub fn sample_points(count: usize, r_min: f64, seed: u64) -> Vec<Point> {
    let mut out = Vec::with_capacity(count);
    let mut k = 1 + seed as usize;
    while out.len() < count {
        let x = [halton(k, 2) - 0.5, halton(k, 3) - 0.5];
        k += 1;
        if x[0].hypot(x[1]) >= r_min {
            out.push(x);
        }
    }
    out
}

/// Compares every analytic derivative against central finite differences at
/// `samples` quasi-random points with `r >= 0.05`.
pub fn self_check(p: &ProblemParams, samples: usize) -> SelfCheckReport {
    let step = if p.omega > 20.0 { 1e-7 } else { 1e-6 };
    self_check_with(p, samples, step, 0)
}

pub fn self_check_with(p: &ProblemParams, samples: usize, step: f64, seed: u64) -> SelfCheckReport {
    let mut report = SelfCheckReport {
        samples,
        step,
        grad_u: 0.0,
        div_stress: 0.0,
        source: 0.0,
    };
    let shift = |x: Point, j: usize, d: f64| {
        let mut y = x;
        y[j] += d;
        y
    };
    for x in sample_points(samples, 0.05, seed) {
        let s = exact_fields(x, p);
        let mut fd_div = [ZERO; 2];
        for j in 0..2 {
            let up = exact_u(shift(x, j, step), p);
            let um = exact_u(shift(x, j, -step), p);
            let sp = exact_fields(shift(x, j, step), p).stress;
            let sm = exact_fields(shift(x, j, -step), p).stress;
            for i in 0..2 {
                let fd = (up[i] - um[i]) / (2.0 * step);
                report.grad_u = report.grad_u.max((fd - s.grad_u[i][j]).norm());
                fd_div[i] += (sp[i][j] - sm[i][j]) / (2.0 * step);
            }
        }
        let f = source_f(x, p);
        let w2r = p.omega * p.omega * p.rho;
        for i in 0..2 {
            report.div_stress = report.div_stress.max((fd_div[i] - s.div_stress[i]).norm());
            let fd_f = -s.u[i] * w2r - fd_div[i];
            report.source = report.source.max((fd_f - f[i]).norm());
        }
    }
    report
}
