//! Reference elements, quadrature and basis tabulation.
//!
//! Reference cells: segment `[0,1]`, triangle `{(0,0),(1,0),(0,1)}`,
//! quadrilateral `[0,1]²`, tetrahedron with unit legs along the axes.
//!
//! Basis functions are numbered in the order the cell's transitive closure
//! lists the dofs, so tabulated columns line up with the element vectors
//! returned by [`crate::layout::vec_get_closure`].

use thiserror::Error;

use crate::layout::{vec_get_closure, CoordinateField, FieldLayout};
use crate::mesh::{CellShape, MeshPlex};

#[derive(Debug, Error)]
pub enum DiscretizationError {
    #[error("no {shape:?} quadrature of degree {degree}")]
    UnsupportedQuadrature { shape: CellShape, degree: usize },
    #[error("element {kind:?} is not available on {shape:?}")]
    UnsupportedElement { kind: ElementKind, shape: CellShape },
    #[error("cell {cell} is inverted or degenerate (det J = {det:e})")]
    InvertedCell { cell: usize, det: f64 },
}

#[derive(Clone, Debug)]
pub struct QuadratureRule {
    shape: CellShape,
    degree: usize,
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Highest total degree integrated exactly.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, q: usize) -> &[f64] {
        let d = self.dim();
        &self.points[q * d..(q + 1) * d]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n and its derivative.
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { t } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (t * pn - pm) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            t = 0.0;
            dp = 1.0;
        }
        x[i] = -t;
        x[n - 1 - i] = t;
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss-Legendre with `n` points mapped to `[0, 1]`.
fn gauss_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    (
        x.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        w.iter().map(|w| 0.5 * w).collect(),
    )
}

fn symmetric_triangle(orbits: &[(f64, f64)], centroid: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let mut pts = Vec::new();
    let mut wts = Vec::new();
    if let Some(w) = centroid {
        pts.extend([1.0 / 3.0, 1.0 / 3.0]);
        wts.push(w);
    }
    for &(a, w) in orbits {
        let b = 1.0 - 2.0 * a;
        pts.extend([a, a, b, a, a, b]);
        wts.extend([w, w, w]);
    }
    (pts, wts)
}

/// Quadrature exact to total degree `degree` on the reference `shape`.
///
/// Segments and quadrilaterals use (tensor) Gauss-Legendre. Triangles use
/// symmetric rules up to degree 4 and a collapsed Gauss rule above that;
/// tetrahedra use symmetric rules up to degree 2 and a collapsed rule above.
pub fn make_quadrature(
    shape: CellShape,
    degree: usize,
) -> Result<QuadratureRule, DiscretizationError> {
    if degree == 0 {
        return Err(DiscretizationError::UnsupportedQuadrature { shape, degree });
    }
    let (points, weights) = match shape {
        CellShape::Segment => gauss_unit(degree / 2 + 1),
        CellShape::Quadrilateral => {
            let (x, w) = gauss_unit(degree / 2 + 1);
            let mut pts = Vec::new();
            let mut wts = Vec::new();
            for j in 0..x.len() {
                for i in 0..x.len() {
                    pts.extend([x[i], x[j]]);
                    wts.push(w[i] * w[j]);
                }
            }
            (pts, wts)
        }
        CellShape::Triangle => match degree {
            1 => (vec![1.0 / 3.0, 1.0 / 3.0], vec![0.5]),
            2 => symmetric_triangle(&[(1.0 / 6.0, 1.0 / 6.0)], None),
            3 | 4 => {
                let s10 = 10f64.sqrt();
                let r = (38.0 - 44.0 * (0.4f64).sqrt()).sqrt();
                let a1 = (8.0 - s10 + r) / 18.0;
                let a2 = (8.0 - s10 - r) / 18.0;
                let q = (213125.0 - 53320.0 * s10).sqrt();
                let w1 = (620.0 + q) / 3720.0 / 2.0;
                let w2 = (620.0 - q) / 3720.0 / 2.0;
                symmetric_triangle(&[(a1, w1), (a2, w2)], None)
            }
            _ => {
                // Duffy collapse (u, v) -> (u, v (1 - u)), Jacobian 1 - u.
                let (x, w) = gauss_unit((degree + 2).div_ceil(2));
                let mut pts = Vec::new();
                let mut wts = Vec::new();
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        pts.extend([x[i], x[j] * (1.0 - x[i])]);
                        wts.push(w[i] * w[j] * (1.0 - x[i]));
                    }
                }
                (pts, wts)
            }
        },
        CellShape::Tetrahedron => match degree {
            1 => (vec![0.25, 0.25, 0.25], vec![1.0 / 6.0]),
            2 => {
                let s5 = 5f64.sqrt();
                let a = (5.0 + 3.0 * s5) / 20.0;
                let b = (5.0 - s5) / 20.0;
                let pts = vec![b, b, b, a, b, b, b, a, b, b, b, a];
                (pts, vec![1.0 / 24.0; 4])
            }
            _ => {
                // (u, v, w) -> (u, v (1-u), w (1-u)(1-v)), Jacobian (1-u)²(1-v).
                let (x, w) = gauss_unit((degree + 3).div_ceil(2));
                let mut pts = Vec::new();
                let mut wts = Vec::new();
                for i in 0..x.len() {
                    for j in 0..x.len() {
                        for k in 0..x.len() {
                            let (u, v, t) = (x[i], x[j], x[k]);
                            pts.extend([u, v * (1.0 - u), t * (1.0 - u) * (1.0 - v)]);
                            wts.push(w[i] * w[j] * w[k] * (1.0 - u) * (1.0 - u) * (1.0 - v));
                        }
                    }
                }
                (pts, wts)
            }
        },
    };
    Ok(QuadratureRule {
        shape,
        degree,
        points,
        weights,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    /// Piecewise constant, one node at the cell centroid.
    P0,
    P1,
    P2,
    Q1,
}

impl ElementKind {
    pub fn name(self) -> &'static str {
        match self {
            ElementKind::P0 => "p0",
            ElementKind::P1 => "p1",
            ElementKind::P2 => "p2",
            ElementKind::Q1 => "q1",
        }
    }
}

/// Nodal Lagrange element on a reference cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LagrangeElement {
    kind: ElementKind,
    shape: CellShape,
}

impl LagrangeElement {
    /// P0 everywhere, P1 and P2 on segments and triangles, P1 on
    /// tetrahedra, Q1 on quads.
    pub fn new(kind: ElementKind, shape: CellShape) -> Result<Self, DiscretizationError> {
        use CellShape::*;
        use ElementKind::*;
        match (kind, shape) {
            (P0, _)
            | (P1, Segment | Triangle | Tetrahedron)
            | (P2, Segment | Triangle)
            | (Q1, Quadrilateral) => Ok(LagrangeElement { kind, shape }),
            _ => Err(DiscretizationError::UnsupportedElement { kind, shape }),
        }
    }

    /// The element describing the affine (or bilinear) geometry map.
    pub fn geometric(shape: CellShape) -> Self {
        let kind = if shape == CellShape::Quadrilateral {
            ElementKind::Q1
        } else {
            ElementKind::P1
        };
        LagrangeElement { kind, shape }
    }

    pub fn kind(&self) -> ElementKind {
        self.kind
    }

    pub fn shape(&self) -> CellShape {
        self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Polynomial degree per variable (Q1 counts as 1).
    pub fn degree(&self) -> usize {
        match self.kind {
            ElementKind::P0 => 0,
            ElementKind::P2 => 2,
            _ => 1,
        }
    }

    /// Quadrature degree used for residuals and Jacobians: twice the basis
    /// degree (per variable on quadrilaterals).
    pub fn default_quadrature_degree(&self) -> usize {
        (2 * self.degree()).max(1)
    }

    pub fn num_basis(&self) -> usize {
        self.nodes().len() / self.dim()
    }

    /// Scalar field layout (nodes per point depth).
    pub fn field_layout(&self, components: usize) -> FieldLayout {
        let dim = self.dim();
        let mut nodes = vec![0; dim + 1];
        match self.kind {
            ElementKind::P0 => nodes[dim] = 1,
            ElementKind::P2 => {
                nodes[0] = 1;
                nodes[1] = 1;
            }
            _ => nodes[0] = 1,
        }
        FieldLayout::new(nodes, components)
    }

    /// Reference node coordinates, flat, in closure order.
    pub fn nodes(&self) -> Vec<f64> {
        use CellShape::*;
        use ElementKind::*;
        match (self.kind, self.shape) {
            (P0, Segment) => vec![0.5],
            (P0, Triangle) => vec![1.0 / 3.0, 1.0 / 3.0],
            (P0, Quadrilateral) => vec![0.5, 0.5],
            (P0, Tetrahedron) => vec![0.25, 0.25, 0.25],
            (P1, Segment) => vec![0.0, 1.0],
            // 1D closure is [cell, v0, v1]: the interior node comes first.
            (P2, Segment) => vec![0.5, 0.0, 1.0],
            (P1, Triangle) => vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            (P2, Triangle) => vec![0.5, 0.0, 0.5, 0.5, 0.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
            (Q1, Quadrilateral) => vec![0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0],
            (P1, Tetrahedron) => vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            _ => unreachable!("checked in new"),
        }
    }

    /// Basis values (`nb`) and reference gradients (`nb × dim`) at `xi`.
    pub fn evaluate(&self, xi: &[f64], values: &mut [f64], grads: &mut [f64]) {
        let dim = self.dim();
        if self.kind == ElementKind::P0 {
            values[0] = 1.0;
            grads.fill(0.0);
            return;
        }
        match self.shape {
            CellShape::Quadrilateral => {
                let (x, y) = (xi[0], xi[1]);
                values.copy_from_slice(&[
                    (1.0 - x) * (1.0 - y),
                    x * (1.0 - y),
                    x * y,
                    (1.0 - x) * y,
                ]);
                grads.copy_from_slice(&[-(1.0 - y), -(1.0 - x), 1.0 - y, -x, y, x, -y, 1.0 - x]);
            }
            _ => {
                // Barycentric coordinates and their constant gradients.
                let nv = dim + 1;
                let mut lam = [0.0; 4];
                let mut dlam = [[0.0; 3]; 4];
                lam[0] = 1.0 - xi.iter().sum::<f64>();
                for d in 0..dim {
                    lam[d + 1] = xi[d];
                    dlam[0][d] = -1.0;
                    dlam[d + 1][d] = 1.0;
                }
                match self.kind {
                    ElementKind::P1 => {
                        for v in 0..nv {
                            values[v] = lam[v];
                            grads[v * dim..(v + 1) * dim].copy_from_slice(&dlam[v][..dim]);
                        }
                    }
                    ElementKind::P2 => {
                        let edges: &[(usize, usize)] = if dim == 1 {
                            &[(0, 1)]
                        } else {
                            &[(0, 1), (1, 2), (2, 0)]
                        };
                        let ne = edges.len();
                        for (k, &(a, b)) in edges.iter().enumerate() {
                            values[k] = 4.0 * lam[a] * lam[b];
                            for d in 0..dim {
                                grads[k * dim + d] =
                                    4.0 * (lam[a] * dlam[b][d] + lam[b] * dlam[a][d]);
                            }
                        }
                        for v in 0..nv {
                            let i = ne + v;
                            values[i] = lam[v] * (2.0 * lam[v] - 1.0);
                            for d in 0..dim {
                                grads[i * dim + d] = (4.0 * lam[v] - 1.0) * dlam[v][d];
                            }
                        }
                    }
                    ElementKind::P0 | ElementKind::Q1 => unreachable!("handled above"),
                }
            }
        }
    }
}

/// Basis values `B[q][i]` and reference derivatives `D[q][i][d]` at the
/// points of a quadrature rule, together with its weights.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub nq: usize,
    pub nb: usize,
    pub dim: usize,
    pub basis: Vec<f64>,
    pub derivs: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Tabulation {
    #[inline]
    pub fn b(&self, q: usize, i: usize) -> f64 {
        self.basis[q * self.nb + i]
    }

    #[inline]
    pub fn d(&self, q: usize, i: usize, k: usize) -> f64 {
        self.derivs[(q * self.nb + i) * self.dim + k]
    }
}

pub fn tabulate(element: &LagrangeElement, rule: &QuadratureRule) -> Tabulation {
    let nb = element.num_basis();
    let dim = element.dim();
    let nq = rule.len();
    let mut basis = vec![0.0; nq * nb];
    let mut derivs = vec![0.0; nq * nb * dim];
    for q in 0..nq {
        element.evaluate(
            rule.point(q),
            &mut basis[q * nb..(q + 1) * nb],
            &mut derivs[q * nb * dim..(q + 1) * nb * dim],
        );
    }
    Tabulation {
        nq,
        nb,
        dim,
        basis,
        derivs,
        weights: rule.weights().to_vec(),
    }
}

/// Geometry of one cell at the quadrature points.
#[derive(Clone, Debug, Default)]
pub struct CellGeometry {
    pub nq: usize,
    pub dim: usize,
    /// Physical points, `nq × dim`.
    pub x: Vec<f64>,
    /// `J⁻¹` per point, `nq × dim × dim`, entry `[k][d] = ∂ξ_k/∂x_d`.
    pub jinv: Vec<f64>,
    /// `|det J(q)| · w_q`.
    pub scaling: Vec<f64>,
}

impl CellGeometry {
    pub fn new(nq: usize, dim: usize) -> Self {
        CellGeometry {
            nq,
            dim,
            x: vec![0.0; nq * dim],
            jinv: vec![0.0; nq * dim * dim],
            scaling: vec![0.0; nq],
        }
    }

    pub fn point(&self, q: usize) -> &[f64] {
        &self.x[q * self.dim..(q + 1) * self.dim]
    }

    pub fn jinv_at(&self, q: usize) -> &[f64] {
        let dd = self.dim * self.dim;
        &self.jinv[q * dd..(q + 1) * dd]
    }

    pub fn measure(&self) -> f64 {
        self.scaling.iter().sum()
    }
}

/// Fills `geom` from the cell's vertex coordinates (closure order, `dim`
/// per vertex) using the geometric tabulation `gtab`. Returns the smallest
/// `det J` so the caller can reject inverted cells.
pub fn fill_cell_geometry(
    vertex_coords: &[f64],
    gtab: &Tabulation,
    geom: &mut CellGeometry,
) -> f64 {
    let dim = gtab.dim;
    let mut min_det = f64::INFINITY;
    for q in 0..gtab.nq {
        let mut j = [[0.0; 3]; 3];
        let x = &mut geom.x[q * dim..(q + 1) * dim];
        x.fill(0.0);
        for v in 0..gtab.nb {
            let xv = &vertex_coords[v * dim..(v + 1) * dim];
            let b = gtab.b(q, v);
            for a in 0..dim {
                x[a] += b * xv[a];
                for k in 0..dim {
                    j[a][k] += xv[a] * gtab.d(q, v, k);
                }
            }
        }
        let det = invert_into(&j, dim, &mut geom.jinv[q * dim * dim..(q + 1) * dim * dim]);
        min_det = min_det.min(det);
        geom.scaling[q] = det.abs() * gtab.weights[q];
    }
    min_det
}

/// Writes `J⁻¹` (row-major, `[k][a] = ∂ξ_k/∂x_a`) and returns `det J`.
fn invert_into(j: &[[f64; 3]; 3], dim: usize, out: &mut [f64]) -> f64 {
    match dim {
        1 => {
            out[0] = 1.0 / j[0][0];
            j[0][0]
        }
        2 => {
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            out[0] = j[1][1] / det;
            out[1] = -j[0][1] / det;
            out[2] = -j[1][0] / det;
            out[3] = j[0][0] / det;
            det
        }
        _ => {
            let c00 = j[1][1] * j[2][2] - j[1][2] * j[2][1];
            let c01 = j[1][2] * j[2][0] - j[1][0] * j[2][2];
            let c02 = j[1][0] * j[2][1] - j[1][1] * j[2][0];
            let det = j[0][0] * c00 + j[0][1] * c01 + j[0][2] * c02;
            let inv = 1.0 / det;
            out[0] = c00 * inv;
            out[1] = (j[0][2] * j[2][1] - j[0][1] * j[2][2]) * inv;
            out[2] = (j[0][1] * j[1][2] - j[0][2] * j[1][1]) * inv;
            out[3] = c01 * inv;
            out[4] = (j[0][0] * j[2][2] - j[0][2] * j[2][0]) * inv;
            out[5] = (j[0][2] * j[1][0] - j[0][0] * j[1][2]) * inv;
            out[6] = c02 * inv;
            out[7] = (j[0][1] * j[2][0] - j[0][0] * j[2][1]) * inv;
            out[8] = (j[0][0] * j[1][1] - j[0][1] * j[1][0]) * inv;
            det
        }
    }
}

/// Geometry of `cell` at the points of `rule`, with vertex coordinates
/// pulled through the coordinate section's closure.
pub fn compute_cell_geometry(
    mesh: &MeshPlex,
    coords: &CoordinateField,
    cell: usize,
    rule: &QuadratureRule,
) -> Result<CellGeometry, DiscretizationError> {
    let gtab = tabulate(&LagrangeElement::geometric(mesh.cell_shape(cell)), rule);
    let xv = vec_get_closure(mesh, &coords.section, &coords.values, cell)
        .expect("coordinate layout matches mesh");
    let mut geom = CellGeometry::new(rule.len(), mesh.dim());
    let det = fill_cell_geometry(&xv, &gtab, &mut geom);
    if det <= 0.0 {
        return Err(DiscretizationError::InvertedCell { cell, det });
    }
    Ok(geom)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn segment_gauss_two_points() {
        let r = make_quadrature(CellShape::Segment, 3).unwrap();
        assert_eq!(r.len(), 2);
        let h = 1.0 / (2.0 * 3f64.sqrt());
        assert!(close(r.point(0)[0], 0.5 - h, 1e-15));
        assert!(close(r.point(1)[0], 0.5 + h, 1e-15));
        assert!(r.weights().iter().all(|&w| close(w, 0.5, 1e-15)));
    }

    #[test]
    fn triangle_degree_one_is_barycenter() {
        let r = make_quadrature(CellShape::Triangle, 1).unwrap();
        assert_eq!(r.point(0), &[1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(r.weights(), &[0.5]);
    }

    #[test]
    fn rule_sizes() {
        let n = |s, d| make_quadrature(s, d).unwrap().len();
        assert_eq!(n(CellShape::Triangle, 2), 3);
        assert_eq!(n(CellShape::Triangle, 3), 6);
        assert_eq!(n(CellShape::Triangle, 4), 6);
        assert_eq!(n(CellShape::Tetrahedron, 2), 4);
        assert_eq!(n(CellShape::Quadrilateral, 3), 4);
        assert!(make_quadrature(CellShape::Triangle, 0).is_err());
    }

    #[test]
    fn unsupported_elements() {
        assert!(LagrangeElement::new(ElementKind::Q1, CellShape::Triangle).is_err());
        assert!(LagrangeElement::new(ElementKind::P2, CellShape::Tetrahedron).is_err());
        assert!(LagrangeElement::new(ElementKind::P1, CellShape::Quadrilateral).is_err());
    }

    #[test]
    fn p1_triangle_tabulation() {
        let e = LagrangeElement::new(ElementKind::P1, CellShape::Triangle).unwrap();
        let t = tabulate(&e, &make_quadrature(CellShape::Triangle, 1).unwrap());
        for i in 0..3 {
            assert!(close(t.b(0, i), 1.0 / 3.0, 1e-15));
        }
        assert_eq!(t.derivs, vec![-1.0, -1.0, 1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn nodal_basis_is_kronecker() {
        for (k, s) in [
            (ElementKind::P0, CellShape::Triangle),
            (ElementKind::P1, CellShape::Segment),
            (ElementKind::P2, CellShape::Segment),
            (ElementKind::P1, CellShape::Triangle),
            (ElementKind::P2, CellShape::Triangle),
            (ElementKind::Q1, CellShape::Quadrilateral),
            (ElementKind::P1, CellShape::Tetrahedron),
        ] {
            let e = LagrangeElement::new(k, s).unwrap();
            let nodes = e.nodes();
            let (nb, dim) = (e.num_basis(), e.dim());
            let mut v = vec![0.0; nb];
            let mut g = vec![0.0; nb * dim];
            for j in 0..nb {
                e.evaluate(&nodes[j * dim..(j + 1) * dim], &mut v, &mut g);
                for i in 0..nb {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        close(v[i], expect, 1e-15),
                        "{k:?} {s:?} basis {i} at node {j}: {}",
                        v[i]
                    );
                }
            }
        }
    }

    #[test]
    fn reference_cell_geometry_is_identity() {
        let m = MeshPlex::build(
            CellShape::Triangle,
            &[vec![0, 1, 2]],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let cf = CoordinateField::new(&m);
        let r = make_quadrature(CellShape::Triangle, 2).unwrap();
        let g = compute_cell_geometry(&m, &cf, 0, &r).unwrap();
        for q in 0..r.len() {
            assert_eq!(g.jinv_at(q), &[1.0, 0.0, 0.0, 1.0]);
            assert_eq!(g.scaling[q], r.weights()[q]);
        }
        let scaled = MeshPlex::build(
            CellShape::Triangle,
            &[vec![0, 1, 2]],
            &[0.0, 0.0, 2.0, 0.0, 0.0, 2.0],
        )
        .unwrap();
        let g = compute_cell_geometry(&scaled, &CoordinateField::new(&scaled), 0, &r).unwrap();
        assert!(close(g.measure(), 2.0, 1e-15));
    }

    #[test]
    fn inverted_cell_rejected() {
        let m = MeshPlex::build(
            CellShape::Triangle,
            &[vec![0, 2, 1]],
            &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        let r = make_quadrature(CellShape::Triangle, 1).unwrap();
        assert!(matches!(
            compute_cell_geometry(&m, &CoordinateField::new(&m), 0, &r),
            Err(DiscretizationError::InvertedCell { cell: 0, .. })
        ));
    }
}
