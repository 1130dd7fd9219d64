//! Uniform triangulation of the square (-0.5, 0.5)^2 with full edge topology.
//!
//! Each of the `n x n` square cells is cut along its lower-left to upper-right
//! diagonal. Elements are numbered in row-major cell order; inside a cell the
//! triangle below the diagonal comes first. Jump orientation on interior
//! edges is fixed by this numbering: the element with the larger index is the
//! "plus" side and the edge normal points out of it.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

pub type Point = [f64; 2];

/// Lower-left corner of the computational domain.
pub const DOMAIN_MIN: f64 = -0.5;
/// Side length of the computational domain.
pub const DOMAIN_SIDE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("subdivision count must be at least 1")]
    EmptyMesh,
    #[error("element {element} is not adjacent to edge ({a}, {b})")]
    NotAdjacent { element: usize, a: usize, b: usize },
    #[error("element index {0} out of range")]
    ElementOutOfRange(usize),
}

/// Maps the edge parameter `t` in [0, 1] to barycentric coordinates of one
/// adjacent element. `local_vertices[k]` is the element-local index of edge
/// endpoint `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceMap {
    pub local_vertices: [usize; 2],
}

impl TraceMap {
    pub fn barycentric(&self, t: f64) -> [f64; 3] {
        let mut b = [0.0; 3];
        b[self.local_vertices[0]] += 1.0 - t;
        b[self.local_vertices[1]] += t;
        b
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeInfo {
    pub endpoints: [usize; 2],
    pub h_e: f64,
    /// Unit normal. Interior edges: outward from `plus_element`. Boundary
    /// edges: outward from the domain.
    pub normal: Point,
    pub plus_element: usize,
    pub minus_element: Option<usize>,
    pub plus_trace: TraceMap,
    pub minus_trace: Option<TraceMap>,
}

impl EdgeInfo {
    pub fn is_boundary(&self) -> bool {
        self.minus_element.is_none()
    }

    /// Sign with which `element`'s trace enters the jump on this edge.
    pub fn jump_sign(&self, element: usize) -> Result<f64, MeshError> {
        if element == self.plus_element {
            Ok(1.0)
        } else if Some(element) == self.minus_element {
            Ok(-1.0)
        } else {
            Err(MeshError::NotAdjacent {
                element,
                a: self.endpoints[0],
                b: self.endpoints[1],
            })
        }
    }

    /// Trace map of the adjacent element `element`.
    pub fn trace_for(&self, element: usize) -> Result<TraceMap, MeshError> {
        if element == self.plus_element {
            Ok(self.plus_trace)
        } else if Some(element) == self.minus_element {
            Ok(self.minus_trace.expect("interior edge has a minus trace"))
        } else {
            Err(MeshError::NotAdjacent {
                element,
                a: self.endpoints[0],
                b: self.endpoints[1],
            })
        }
    }
}

/// Free-function form of [`EdgeInfo::jump_sign`].
pub fn jump_sign(edge: &EdgeInfo, element: usize) -> Result<f64, MeshError> {
    edge.jump_sign(element)
}

/// Per-element geometry of a straight triangle.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub vertices: [Point; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_bary: [Point; 3],
}

impl ElementGeometry {
    pub fn new(vertices: [Point; 3]) -> Self {
        let [p0, p1, p2] = vertices;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let area = 0.5 * det;
        // grad lambda_i = rot90(p_{i+2} - p_{i+1}) / (2 area), for CCW vertices
        let mut grad_bary = [[0.0; 2]; 3];
        for (i, g) in grad_bary.iter_mut().enumerate() {
            let a = vertices[(i + 1) % 3];
            let b = vertices[(i + 2) % 3];
            *g = [(a[1] - b[1]) / det, (b[0] - a[0]) / det];
        }
        Self {
            vertices,
            area,
            grad_bary,
        }
    }

    pub fn point(&self, bary: [f64; 3]) -> Point {
        let mut x = [0.0; 2];
        for (b, v) in bary.iter().zip(&self.vertices) {
            x[0] += b * v[0];
            x[1] += b * v[1];
        }
        x
    }

    /// Barycentric coordinates of an arbitrary point (may be negative outside).
    pub fn barycentric_of(&self, x: Point) -> [f64; 3] {
        let g = &self.grad_bary;
        let v0 = self.vertices[0];
        let l1 = g[1][0] * (x[0] - v0[0]) + g[1][1] * (x[1] - v0[1]);
        let l2 = g[2][0] * (x[0] - v0[0]) + g[2][1] * (x[1] - v0[1]);
        [1.0 - l1 - l2, l1, l2]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub n: usize,
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub interior_edges: Vec<EdgeInfo>,
    pub boundary_edges: Vec<EdgeInfo>,
    /// For each element, `(is_boundary, index)` of its three edges, where
    /// local edge `k` is opposite local vertex `k`.
    pub element_edges: Vec<[(bool, usize); 3]>,
}

impl Mesh {
    /// Builds the uniform triangulation `T_{1/n}` of (-0.5, 0.5)^2.
    pub fn build_uniform(n: usize) -> Result<Self, MeshError> {
        if n == 0 {
            return Err(MeshError::EmptyMesh);
        }
        let h = DOMAIN_SIDE / n as f64;
        let vid = |i: usize, j: usize| j * (n + 1) + i;

        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                vertices.push([DOMAIN_MIN + i as f64 * h, DOMAIN_MIN + j as f64 * h]);
            }
        }

        let mut triangles = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = vid(i, j);
                let b = vid(i + 1, j);
                let c = vid(i + 1, j + 1);
                let d = vid(i, j + 1);
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            }
        }

        // (element, local edge) occurrences keyed by sorted vertex pair, in
        // discovery order.
        let mut key_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * n * n + 2 * n);
        let mut occurrences: Vec<Vec<(usize, usize)>> = Vec::new();
        for (e, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                let p = tri[(k + 1) % 3];
                let q = tri[(k + 2) % 3];
                let key = (p.min(q), p.max(q));
                let idx = *key_index.entry(key).or_insert_with(|| {
                    occurrences.push(Vec::with_capacity(2));
                    occurrences.len() - 1
                });
                occurrences[idx].push((e, k));
            }
        }

        let mut interior_edges = Vec::new();
        let mut boundary_edges = Vec::new();
        let mut element_edges = vec![[(false, usize::MAX); 3]; triangles.len()];

        for occ in &occurrences {
            match occ.as_slice() {
                &[(e, k)] => {
                    let edge = make_edge(&vertices, &triangles, e, k, None);
                    element_edges[e][k] = (true, boundary_edges.len());
                    boundary_edges.push(edge);
                }
                &[(e0, k0), (e1, k1)] => {
                    let ((ep, kp), (em, km)) = if e0 > e1 {
                        ((e0, k0), (e1, k1))
                    } else {
                        ((e1, k1), (e0, k0))
                    };
                    let edge = make_edge(&vertices, &triangles, ep, kp, Some((em, km)));
                    element_edges[ep][kp] = (false, interior_edges.len());
                    element_edges[em][km] = (false, interior_edges.len());
                    interior_edges.push(edge);
                }
                _ => unreachable!("edge shared by more than two triangles"),
            }
        }

        Ok(Self {
            n,
            vertices,
            triangles,
            interior_edges,
            boundary_edges,
            element_edges,
        })
    }

    pub fn h(&self) -> f64 {
        DOMAIN_SIDE / self.n as f64
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn geometry(&self, element: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[element];
        ElementGeometry::new([self.vertices[a], self.vertices[b], self.vertices[c]])
    }

    pub fn signed_area(&self, element: usize) -> f64 {
        self.geometry(element).area
    }

    /// Local index of the element vertex sitting at the origin, where the
    /// manufactured solution is singular.
    pub fn origin_corner(&self, element: usize) -> Option<usize> {
        self.triangles[element].iter().position(|&v| {
            let x = self.vertices[v];
            x[0].hypot(x[1]) < 1e-14
        })
    }

    /// Elements sharing an interior edge with `element`.
    pub fn neighbors(&self, element: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_edges[element]
            .iter()
            .filter(|(b, _)| !b)
            .map(move |&(_, i)| {
                let edge = &self.interior_edges[i];
                if edge.plus_element == element {
                    edge.minus_element.unwrap()
                } else {
                    edge.plus_element
                }
            })
    }

    /// Element containing `x`. Points on shared boundaries go to the
    /// lowest-indexed element that contains them.
    pub fn locate(&self, x: Point) -> Option<(usize, [f64; 3])> {
        const TOL: f64 = 1e-12;
        let n = self.n as isize;
        let s = |c: f64| ((c - DOMAIN_MIN) * self.n as f64).floor() as isize;
        let (ci, cj) = (s(x[0]), s(x[1]));
        let mut best: Option<(usize, [f64; 3])> = None;
        for dj in -1..=1 {
            for di in -1..=1 {
                let (i, j) = (ci + di, cj + dj);
                if i < 0 || j < 0 || i >= n || j >= n {
                    continue;
                }
                let cell = (j * n + i) as usize;
                for e in [2 * cell, 2 * cell + 1] {
                    let b = self.geometry(e).barycentric_of(x);
                    if b.iter().all(|&l| l >= -TOL) && best.map_or(true, |(be, _)| e < be) {
                        let clamped = clamp_barycentric(b);
                        best = Some((e, clamped));
                    }
                }
            }
        }
        best
    }

    /// Plain-text dump: `v x y` per vertex and `t i j k` per triangle.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            writeln!(s, "v {} {}", v[0], v[1]).unwrap();
        }
        for t in &self.triangles {
            writeln!(s, "t {} {} {}", t[0], t[1], t[2]).unwrap();
        }
        s
    }
}

fn clamp_barycentric(b: [f64; 3]) -> [f64; 3] {
    let mut c = b.map(|l| l.max(0.0));
    let s: f64 = c.iter().sum();
    for l in &mut c {
        *l /= s;
    }
    c
}

fn make_edge(
    vertices: &[Point],
    triangles: &[[usize; 3]],
    plus: usize,
    plus_local: usize,
    minus: Option<(usize, usize)>,
) -> EdgeInfo {
    let tri = triangles[plus];
    let (lp, lq) = ((plus_local + 1) % 3, (plus_local + 2) % 3);
    let (p, q) = (tri[lp], tri[lq]);
    let (xp, xq) = (vertices[p], vertices[q]);
    let d = [xq[0] - xp[0], xq[1] - xp[1]];
    let h_e = d[0].hypot(d[1]);
    // CCW triangle: the outward normal of edge p -> q is (dy, -dx).
    let normal = [d[1] / h_e, -d[0] / h_e];

    let minus_trace = minus.map(|(m, _)| {
        let mt = triangles[m];
        let find = |v: usize| mt.iter().position(|&w| w == v).expect("shared vertex");
        TraceMap {
            local_vertices: [find(p), find(q)],
        }
    });

    EdgeInfo {
        endpoints: [p, q],
        h_e,
        normal,
        plus_element: plus,
        minus_element: minus.map(|(m, _)| m),
        plus_trace: TraceMap {
            local_vertices: [lp, lq],
        },
        minus_trace,
    }
}
