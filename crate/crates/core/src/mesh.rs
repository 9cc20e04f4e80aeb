//! Structured quadrilateral meshes, bilinear shape functions and Gauss rules.
//!
//! Nodes are numbered row-major: node `(i, j)` with `0 <= i <= nx` along x and
//! `0 <= j <= ny` along y has index `j * (nx + 1) + i`. Element `(i, j)` has
//! index `j * nx + i` and its four nodes are listed counterclockwise starting
//! from the lower-left corner.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("element counts must be at least 1 (nx = {nx}, ny = {ny})")]
    ZeroCount { nx: usize, ny: usize },

    #[error("domain lengths must be positive and finite (lx = {lx}, ly = {ly})")]
    NonPositiveLength { lx: f64, ly: f64 },

    #[error("degenerate element {element}: Jacobian determinant {det:e}")]
    DegenerateElement { element: usize, det: f64 },

    #[error("unsupported Gauss rule order {0} (1, 2 or 3 points per axis)")]
    UnsupportedQuadrature(usize),
}

/// One of the four sides of the rectangular domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
            Side::Bottom => 2,
            Side::Top => 3,
        }
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }
}

/// A boundary edge: the owning element and its two nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub element: usize,
    pub nodes: [usize; 2],
}

#[derive(Debug, Clone, Default)]
pub struct BoundarySets {
    nodes: [Vec<usize>; 4],
    edges: [Vec<Edge>; 4],
}

impl BoundarySets {
    pub fn nodes(&self, side: Side) -> &[usize] {
        &self.nodes[side.index()]
    }

    pub fn edges(&self, side: Side) -> &[Edge] {
        &self.edges[side.index()]
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub nodes: Vec<[f64; 2]>,
    pub elements: Vec<[usize; 4]>,
    pub boundary: BoundarySets,
}

/// Builds a uniform `nx × ny` grid on `[0, lx] × [0, ly]`.
pub fn build_structured_grid(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Mesh, MeshError> {
    if nx == 0 || ny == 0 {
        return Err(MeshError::ZeroCount { nx, ny });
    }
    if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
        return Err(MeshError::NonPositiveLength { lx, ly });
    }
    let stride = nx + 1;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([lx * i as f64 / nx as f64, ly * j as f64 / ny as f64]);
        }
    }
    let mut elements = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let n0 = j * stride + i;
            elements.push([n0, n0 + 1, n0 + 1 + stride, n0 + stride]);
        }
    }

    let mut boundary = BoundarySets::default();
    boundary.nodes[Side::Bottom.index()] = (0..=nx).collect();
    boundary.nodes[Side::Top.index()] = (0..=nx).map(|i| ny * stride + i).collect();
    boundary.nodes[Side::Left.index()] = (0..=ny).map(|j| j * stride).collect();
    boundary.nodes[Side::Right.index()] = (0..=ny).map(|j| j * stride + nx).collect();

    for i in 0..nx {
        let e = i;
        let [a, b, _, _] = elements[e];
        boundary.edges[Side::Bottom.index()].push(Edge { element: e, nodes: [a, b] });
        let e = (ny - 1) * nx + i;
        let [_, _, c, d] = elements[e];
        boundary.edges[Side::Top.index()].push(Edge { element: e, nodes: [c, d] });
    }
    for j in 0..ny {
        let e = j * nx;
        let [a, _, _, d] = elements[e];
        boundary.edges[Side::Left.index()].push(Edge { element: e, nodes: [d, a] });
        let e = j * nx + nx - 1;
        let [_, b, c, _] = elements[e];
        boundary.edges[Side::Right.index()].push(Edge { element: e, nodes: [b, c] });
    }

    Ok(Mesh { nx, ny, lx, ly, nodes, elements, boundary })
}

impl Mesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn element_count(&self) -> usize {
        self.elements.len()
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn element_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn element_coords(&self, e: usize) -> [[f64; 2]; 4] {
        self.elements[e].map(|n| self.nodes[n])
    }

    pub fn element_center(&self, e: usize) -> [f64; 2] {
        let c = self.element_coords(e);
        [
            0.25 * (c[0][0] + c[1][0] + c[2][0] + c[3][0]),
            0.25 * (c[0][1] + c[1][1] + c[2][1] + c[3][1]),
        ]
    }

    /// Node nearest to a physical point (ties resolved by lowest index).
    pub fn nearest_node(&self, p: [f64; 2]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (n, x) in self.nodes.iter().enumerate() {
            let d = (x[0] - p[0]).powi(2) + (x[1] - p[1]).powi(2);
            if best_d.is_infinite() || d < best_d - 1e-14 * (1.0 + best_d) {
                best = n;
                best_d = d;
            }
        }
        best
    }

    pub fn shape(&self, e: usize, xi: [f64; 2]) -> Result<Shape, MeshError> {
        shape_eval(&self.element_coords(e), xi).map_err(|det| MeshError::DegenerateElement { element: e, det })
    }

    /// Precomputes shape data at the points of `rule` and at the element centre
    /// for every element.
    pub fn geometry(&self, rule: &QuadratureRule) -> Result<MeshGeometry, MeshError> {
        let elements = (0..self.element_count())
            .map(|e| {
                let points = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(xi, w)| {
                        let shape = self.shape(e, *xi)?;
                        let jxw = shape.det * w;
                        Ok(QuadPoint { shape, jxw })
                    })
                    .collect::<Result<Vec<_>, MeshError>>()?;
                let center = self.shape(e, [0.0, 0.0])?;
                let area = points.iter().map(|q| q.jxw).sum();
                Ok(ElementGeometry { points, center, area })
            })
            .collect::<Result<Vec<_>, MeshError>>()?;
        Ok(MeshGeometry { elements })
    }
}

/// Shape function values, physical gradients and Jacobian determinant at one
/// reference point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shape {
    pub values: [f64; 4],
    pub grads: [[f64; 2]; 4],
    pub det: f64,
}

impl Shape {
    pub fn interpolate(&self, nodal: [f64; 4]) -> f64 {
        self.values.iter().zip(nodal).map(|(n, v)| n * v).sum()
    }

    pub fn gradient(&self, nodal: [f64; 4]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for (dn, v) in self.grads.iter().zip(nodal) {
            g[0] += dn[0] * v;
            g[1] += dn[1] * v;
        }
        g
    }

    /// Gradient of a nodal vector field, `(grad u)_{ij} = d u_i / d x_j`.
    pub fn vector_gradient(&self, nodal: [[f64; 2]; 4]) -> crate::Tensor2 {
        let mut g = [[0.0; 2]; 2];
        for (dn, u) in self.grads.iter().zip(nodal) {
            for i in 0..2 {
                for j in 0..2 {
                    g[i][j] += u[i] * dn[j];
                }
            }
        }
        crate::Tensor2(g)
    }

    pub fn point(&self, coords: &[[f64; 2]; 4]) -> [f64; 2] {
        let mut x = [0.0; 2];
        for (n, c) in self.values.iter().zip(coords) {
            x[0] += n * c[0];
            x[1] += n * c[1];
        }
        x
    }
}

const REF_CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];

/// Evaluates the bilinear basis of a quadrilateral at `xi` in `[-1, 1]²`.
///
/// Returns the offending determinant as the error when the map is not
/// orientation-preserving there.
pub fn shape_eval(coords: &[[f64; 2]; 4], xi: [f64; 2]) -> Result<Shape, f64> {
    let mut values = [0.0; 4];
    let mut dref = [[0.0; 2]; 4];
    for (a, c) in REF_CORNERS.iter().enumerate() {
        values[a] = 0.25 * (1.0 + c[0] * xi[0]) * (1.0 + c[1] * xi[1]);
        dref[a] = [
            0.25 * c[0] * (1.0 + c[1] * xi[1]),
            0.25 * c[1] * (1.0 + c[0] * xi[0]),
        ];
    }
    // J_{ij} = d x_i / d xi_j
    let mut jac = [[0.0; 2]; 2];
    for (x, d) in coords.iter().zip(&dref) {
        for i in 0..2 {
            for j in 0..2 {
                jac[i][j] += x[i] * d[j];
            }
        }
    }
    let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
    if !(det > 0.0) {
        return Err(det);
    }
    let inv = [
        [jac[1][1] / det, -jac[0][1] / det],
        [-jac[1][0] / det, jac[0][0] / det],
    ];
    let mut grads = [[0.0; 2]; 4];
    for (g, d) in grads.iter_mut().zip(&dref) {
        // dN/dx_k = dN/dxi_j * dxi_j/dx_k
        g[0] = d[0] * inv[0][0] + d[1] * inv[1][0];
        g[1] = d[0] * inv[0][1] + d[1] * inv[1][1];
    }
    Ok(Shape { values, grads, det })
}

/// Tensor-product Gauss–Legendre rule on the reference square.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss(order: usize) -> Result<Self, MeshError> {
        let (x, w): (Vec<f64>, Vec<f64>) = match order {
            1 => (vec![0.0], vec![2.0]),
            2 => {
                let a = 1.0 / 3.0_f64.sqrt();
                (vec![-a, a], vec![1.0, 1.0])
            }
            3 => {
                let a = (3.0_f64 / 5.0).sqrt();
                (vec![-a, 0.0, a], vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
            }
            n => return Err(MeshError::UnsupportedQuadrature(n)),
        };
        let mut points = Vec::new();
        let mut weights = Vec::new();
        for (yj, wj) in x.iter().zip(&w) {
            for (xi, wi) in x.iter().zip(&w) {
                points.push([*xi, *yj]);
                weights.push(wi * wj);
            }
        }
        Ok(QuadratureRule { points, weights })
    }

    /// The 2×2 rule used for all assembly.
    pub fn gauss2() -> Self {
        Self::gauss(2).expect("2-point rule is supported")
    }

    /// Two-point Gauss rule on `[-1, 1]` for edge integrals.
    pub fn gauss_line2() -> ([f64; 2], [f64; 2]) {
        let a = 1.0 / 3.0_f64.sqrt();
        ([-a, a], [1.0, 1.0])
    }
}

#[derive(Debug, Clone)]
pub struct QuadPoint {
    pub shape: Shape,
    /// Jacobian determinant times quadrature weight.
    pub jxw: f64,
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub points: Vec<QuadPoint>,
    pub center: Shape,
    pub area: f64,
}

impl ElementGeometry {
    /// `∫_e N_a dΩ` for each local node.
    pub fn lumped_weights(&self) -> [f64; 4] {
        let mut w = [0.0; 4];
        for q in &self.points {
            for (wa, n) in w.iter_mut().zip(q.shape.values) {
                *wa += n * q.jxw;
            }
        }
        w
    }
}

#[derive(Debug, Clone)]
pub struct MeshGeometry {
    pub elements: Vec<ElementGeometry>,
}
