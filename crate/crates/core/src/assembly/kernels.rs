//! Per-chunk integration kernels.
//!
//! Every kernel loops cells outer, quadrature points in the middle and basis
//! functions inner, so the arithmetic applied to a cell never depends on
//! which chunk it landed in.

use crate::discretization::{CellGeometry, Tabulation};
use crate::physics::{JacobianBlocks, PhysicsError, PointValues, PointwiseModel};

/// Sizes shared by all buffers of a [`ChunkWorkspace`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChunkShape {
    pub chunk_size: usize,
    pub nq: usize,
    /// Basis functions of the solution element.
    pub nb: usize,
    /// Solution components.
    pub nc: usize,
    pub dim: usize,
    /// Vertices of the geometry element.
    pub nv: usize,
    /// Basis functions of the auxiliary element (0 without aux data).
    pub nba: usize,
    /// Auxiliary components.
    pub na: usize,
}

impl ChunkShape {
    /// Length of one element vector.
    pub fn elem_len(&self) -> usize {
        self.nb * self.nc
    }
}

/// Contiguous per-chunk buffers, reused from chunk to chunk.
///
/// Cell `c` of the chunk owns the slab `[c * stride, (c + 1) * stride)` of
/// each buffer, where the stride is the product of the trailing sizes given
/// below.
#[derive(Clone, Debug)]
pub struct ChunkWorkspace {
    pub shape: ChunkShape,
    /// Element coefficients, `nb × nc` per cell.
    pub u_e: Vec<f64>,
    /// Direction for operator application, `nb × nc` per cell.
    pub x_e: Vec<f64>,
    /// Auxiliary coefficients, `nba × na` per cell.
    pub a_e: Vec<f64>,
    /// Vertex coordinates, `nv × dim` per cell.
    pub coords_e: Vec<f64>,
    /// `nq × nc` per cell.
    pub u_q: Vec<f64>,
    /// Physical gradients, `nq × nc × dim` per cell.
    pub grad_u_q: Vec<f64>,
    pub a_q: Vec<f64>,
    pub grad_a_q: Vec<f64>,
    pub f0_q: Vec<f64>,
    pub f1_q: Vec<f64>,
    /// Element vectors, `nb × nc` per cell.
    pub f_e: Vec<f64>,
    /// Element matrices, `(nb·nc)²` per cell; empty until requested.
    pub k_e: Vec<f64>,
    pub geoms: Vec<CellGeometry>,
    // Per-cell scratch.
    grad_phys: Vec<f64>,
    x_q: Vec<f64>,
    grad_x_q: Vec<f64>,
    v0: Vec<f64>,
    v1: Vec<f64>,
    blocks: JacobianBlocks,
}

impl ChunkWorkspace {
    pub fn new(shape: ChunkShape) -> Self {
        let ChunkShape {
            chunk_size: cs,
            nq,
            nb,
            nc,
            dim,
            nv,
            nba,
            na,
        } = shape;
        ChunkWorkspace {
            shape,
            u_e: vec![0.0; cs * nb * nc],
            x_e: vec![0.0; cs * nb * nc],
            a_e: vec![0.0; cs * nba * na],
            coords_e: vec![0.0; cs * nv * dim],
            u_q: vec![0.0; cs * nq * nc],
            grad_u_q: vec![0.0; cs * nq * nc * dim],
            a_q: vec![0.0; cs * nq * na],
            grad_a_q: vec![0.0; cs * nq * na * dim],
            f0_q: vec![0.0; cs * nq * nc],
            f1_q: vec![0.0; cs * nq * nc * dim],
            f_e: vec![0.0; cs * nb * nc],
            k_e: Vec::new(),
            geoms: (0..cs).map(|_| CellGeometry::new(nq, dim)).collect(),
            grad_phys: vec![0.0; nq * nb * dim],
            x_q: vec![0.0; nc],
            grad_x_q: vec![0.0; nc * dim],
            v0: vec![0.0; nc],
            v1: vec![0.0; nc * dim],
            blocks: JacobianBlocks::new(nc, dim),
        }
    }

    /// Allocates the element-matrix buffer.
    pub fn reserve_matrices(&mut self) {
        let n = self.shape.elem_len();
        self.k_e.resize(self.shape.chunk_size * n * n, 0.0);
    }

    pub fn element_vector(&self, c: usize) -> &[f64] {
        let n = self.shape.elem_len();
        &self.f_e[c * n..(c + 1) * n]
    }

    pub fn element_matrix(&self, c: usize) -> &[f64] {
        let n = self.shape.elem_len();
        &self.k_e[c * n * n..(c + 1) * n * n]
    }
}

/// Physical basis gradients `∇φ_i(q)[d] = Σ_k D[q][i][k] J⁻¹[k][d]`.
fn physical_gradients(tab: &Tabulation, geom: &CellGeometry, out: &mut [f64]) {
    let (nb, dim) = (tab.nb, tab.dim);
    for q in 0..tab.nq {
        let jinv = geom.jinv_at(q);
        for i in 0..nb {
            for d in 0..dim {
                let mut s = 0.0;
                for k in 0..dim {
                    s += tab.d(q, i, k) * jinv[k * dim + d];
                }
                out[(q * nb + i) * dim + d] = s;
            }
        }
    }
}

/// `v_q = B·v_e` and `∇v_q = (D·v_e)·J⁻¹` at every point of one cell, with
/// `nc` components per node. `grad_phys` holds physical basis gradients.
fn interpolate_cell(
    tab: &Tabulation,
    grad_phys: &[f64],
    nc: usize,
    v_e: &[f64],
    v_q: &mut [f64],
    grad_v_q: &mut [f64],
) {
    let (nb, dim) = (tab.nb, tab.dim);
    v_q.fill(0.0);
    grad_v_q.fill(0.0);
    for q in 0..tab.nq {
        for i in 0..nb {
            let b = tab.b(q, i);
            let g = &grad_phys[(q * nb + i) * dim..(q * nb + i + 1) * dim];
            for c in 0..nc {
                let coef = v_e[i * nc + c];
                v_q[q * nc + c] += b * coef;
                let gq = &mut grad_v_q[(q * nc + c) * dim..(q * nc + c + 1) * dim];
                for d in 0..dim {
                    gq[d] += g[d] * coef;
                }
            }
        }
    }
}

/// Evaluates the solution and auxiliary fields at the quadrature points of
/// cell `c`; leaves the physical solution-basis gradients in `ws.grad_phys`.
fn evaluate_fields(
    c: usize,
    ws: &mut ChunkWorkspace,
    tab: &Tabulation,
    aux_tab: Option<&Tabulation>,
) {
    let ChunkShape {
        nq,
        nb,
        nc,
        dim,
        nba,
        na,
        ..
    } = ws.shape;
    let geom = &ws.geoms[c];
    if let Some(at) = aux_tab {
        physical_gradients(at, geom, &mut ws.grad_phys[..nq * nba * dim]);
        interpolate_cell(
            at,
            &ws.grad_phys,
            na,
            &ws.a_e[c * nba * na..(c + 1) * nba * na],
            &mut ws.a_q[c * nq * na..(c + 1) * nq * na],
            &mut ws.grad_a_q[c * nq * na * dim..(c + 1) * nq * na * dim],
        );
    }
    physical_gradients(tab, geom, &mut ws.grad_phys);
    interpolate_cell(
        tab,
        &ws.grad_phys,
        nc,
        &ws.u_e[c * nb * nc..(c + 1) * nb * nc],
        &mut ws.u_q[c * nq * nc..(c + 1) * nq * nc],
        &mut ws.grad_u_q[c * nq * nc * dim..(c + 1) * nq * nc * dim],
    );
}

fn point_values<'a>(ws: &'a ChunkWorkspace, c: usize, q: usize) -> PointValues<'a> {
    let ChunkShape {
        nq, nc, dim, na, ..
    } = ws.shape;
    let cq = c * nq + q;
    PointValues {
        x: ws.geoms[c].point(q),
        u: &ws.u_q[cq * nc..(cq + 1) * nc],
        grad_u: &ws.grad_u_q[cq * nc * dim..(cq + 1) * nc * dim],
        a: &ws.a_q[cq * na..(cq + 1) * na],
        grad_a: &ws.grad_a_q[cq * na * dim..(cq + 1) * na * dim],
    }
}

/// Element residuals `f_e = Bᵀ W f0 + Σ_d D_dᵀ W f1_d` for the first
/// `ncells` cells of the workspace. `u_e`, `a_e` and `geoms` must be filled.
pub fn integrate_residual_chunk(
    ncells: usize,
    ws: &mut ChunkWorkspace,
    tab: &Tabulation,
    aux_tab: Option<&Tabulation>,
    model: &dyn PointwiseModel,
) {
    let ChunkShape {
        nq, nb, nc, dim, ..
    } = ws.shape;
    let mut f0 = vec![0.0; nc];
    let mut f1 = vec![0.0; nc * dim];
    for c in 0..ncells {
        evaluate_fields(c, ws, tab, aux_tab);
        for q in 0..nq {
            let p = point_values(ws, c, q);
            f0.fill(0.0);
            f1.fill(0.0);
            model.f0(&p, &mut f0);
            model.f1(&p, &mut f1);
            let cq = c * nq + q;
            ws.f0_q[cq * nc..(cq + 1) * nc].copy_from_slice(&f0);
            ws.f1_q[cq * nc * dim..(cq + 1) * nc * dim].copy_from_slice(&f1);
        }
        let fe = &mut ws.f_e[c * nb * nc..(c + 1) * nb * nc];
        fe.fill(0.0);
        let geom = &ws.geoms[c];
        for q in 0..nq {
            let s = geom.scaling[q];
            let cq = c * nq + q;
            let f0 = &ws.f0_q[cq * nc..(cq + 1) * nc];
            let f1 = &ws.f1_q[cq * nc * dim..(cq + 1) * nc * dim];
            for i in 0..nb {
                let b = tab.b(q, i);
                let g = &ws.grad_phys[(q * nb + i) * dim..(q * nb + i + 1) * dim];
                for ci in 0..nc {
                    let mut v = b * f0[ci];
                    for d in 0..dim {
                        v += g[d] * f1[ci * dim + d];
                    }
                    fe[i * nc + ci] += s * v;
                }
            }
        }
    }
}

/// Element matrices
/// `K[i,ci][j,cj] = Σ_q s_q [φ_i ∇φ_i] [[g00 g01] [g10 g11]] [φ_j ∇φ_j]ᵀ`
/// for the first `ncells` cells; call [`ChunkWorkspace::reserve_matrices`]
/// first.
pub fn integrate_jacobian_chunk(
    ncells: usize,
    ws: &mut ChunkWorkspace,
    tab: &Tabulation,
    aux_tab: Option<&Tabulation>,
    model: &dyn PointwiseModel,
) -> Result<(), PhysicsError> {
    let ChunkShape {
        nq, nb, nc, dim, ..
    } = ws.shape;
    let n = nb * nc;
    let mut blocks = std::mem::replace(&mut ws.blocks, JacobianBlocks::new(0, 0));
    let mut out = Ok(());
    'cells: for c in 0..ncells {
        evaluate_fields(c, ws, tab, aux_tab);
        let ke = &mut ws.k_e[c * n * n..(c + 1) * n * n];
        ke.fill(0.0);
        for q in 0..nq {
            blocks.zero();
            let p = point_values(ws, c, q);
            if let Err(e) = model.jacobian(&p, &mut blocks) {
                out = Err(e);
                break 'cells;
            }
            let s = ws.geoms[c].scaling[q];
            let gp = &ws.grad_phys;
            let ke = &mut ws.k_e[c * n * n..(c + 1) * n * n];
            for i in 0..nb {
                let bi = tab.b(q, i);
                let gi = &gp[(q * nb + i) * dim..(q * nb + i + 1) * dim];
                for j in 0..nb {
                    let bj = tab.b(q, j);
                    let gj = &gp[(q * nb + j) * dim..(q * nb + j + 1) * dim];
                    for ci in 0..nc {
                        for cj in 0..nc {
                            let mut v = bi * blocks.g00[ci * nc + cj] * bj;
                            for d in 0..dim {
                                v += bi * blocks.g01[(ci * nc + cj) * dim + d] * gj[d];
                                v += gi[d] * blocks.g10[(ci * dim + d) * nc + cj] * bj;
                                let row = ((ci * dim + d) * nc + cj) * dim;
                                for e in 0..dim {
                                    v += gi[d] * blocks.g11[row + e] * gj[e];
                                }
                            }
                            ke[(i * nc + ci) * n + j * nc + cj] += s * v;
                        }
                    }
                }
            }
        }
    }
    ws.blocks = blocks;
    out
}

/// Action of the linearized operator on `x_e` without forming element
/// matrices: `f_e = [Bᵀ Dᵀ] W G(u_q) [B; D] x_e`. The result lands in `f_e`.
pub fn apply_jacobian_chunk(
    ncells: usize,
    ws: &mut ChunkWorkspace,
    tab: &Tabulation,
    aux_tab: Option<&Tabulation>,
    model: &dyn PointwiseModel,
) -> Result<(), PhysicsError> {
    let ChunkShape {
        nq, nb, nc, dim, ..
    } = ws.shape;
    let mut blocks = std::mem::replace(&mut ws.blocks, JacobianBlocks::new(0, 0));
    let mut out = Ok(());
    'cells: for c in 0..ncells {
        evaluate_fields(c, ws, tab, aux_tab);
        ws.f_e[c * nb * nc..(c + 1) * nb * nc].fill(0.0);
        for q in 0..nq {
            blocks.zero();
            let p = point_values(ws, c, q);
            if let Err(e) = model.jacobian(&p, &mut blocks) {
                out = Err(e);
                break 'cells;
            }
            let gp = &ws.grad_phys;
            let xe = &ws.x_e[c * nb * nc..(c + 1) * nb * nc];
            // Push x through B and D.
            ws.x_q.fill(0.0);
            ws.grad_x_q.fill(0.0);
            for i in 0..nb {
                let b = tab.b(q, i);
                let g = &gp[(q * nb + i) * dim..(q * nb + i + 1) * dim];
                for cj in 0..nc {
                    let xv = xe[i * nc + cj];
                    ws.x_q[cj] += b * xv;
                    for d in 0..dim {
                        ws.grad_x_q[cj * dim + d] += g[d] * xv;
                    }
                }
            }
            // Contract with the pointwise blocks.
            for ci in 0..nc {
                let mut v = 0.0;
                for cj in 0..nc {
                    v += blocks.g00[ci * nc + cj] * ws.x_q[cj];
                    for e in 0..dim {
                        v += blocks.g01[(ci * nc + cj) * dim + e] * ws.grad_x_q[cj * dim + e];
                    }
                }
                ws.v0[ci] = v;
                for d in 0..dim {
                    let mut v = 0.0;
                    for cj in 0..nc {
                        v += blocks.g10[(ci * dim + d) * nc + cj] * ws.x_q[cj];
                        let row = ((ci * dim + d) * nc + cj) * dim;
                        for e in 0..dim {
                            v += blocks.g11[row + e] * ws.grad_x_q[cj * dim + e];
                        }
                    }
                    ws.v1[ci * dim + d] = v;
                }
            }
            // Pull back through Bᵀ and Dᵀ.
            let s = ws.geoms[c].scaling[q];
            let fe = &mut ws.f_e[c * nb * nc..(c + 1) * nb * nc];
            for i in 0..nb {
                let b = tab.b(q, i);
                let g = &gp[(q * nb + i) * dim..(q * nb + i + 1) * dim];
                for ci in 0..nc {
                    let mut v = b * ws.v0[ci];
                    for d in 0..dim {
                        v += g[d] * ws.v1[ci * dim + d];
                    }
                    fe[i * nc + ci] += s * v;
                }
            }
        }
    }
    ws.blocks = blocks;
    out
}

/// Flops charged per cell by [`integrate_residual_chunk`]: interpolating
/// values and gradients (`nq·nb·c·(1+dim)` multiply-adds), the reduction
/// back onto the basis (same count), the same interpolation for auxiliary
/// fields, and the model's own count per point. Geometric transforms are
/// not charged.
pub fn residual_flops_per_cell(shape: &ChunkShape, model_flops: u64) -> u64 {
    let ChunkShape {
        nq,
        nb,
        nc,
        dim,
        nba,
        na,
        ..
    } = *shape;
    let interp = 2 * nq * nb * nc * (1 + dim);
    let aux = 2 * nq * nba * na * (1 + dim);
    (2 * interp + aux) as u64 + nq as u64 * model_flops
}

/// Flops charged per cell by [`apply_jacobian_chunk`]: interpolating `u`
/// (for the blocks) and `x`, the dense block contraction
/// `2·(c(1+dim))²` per point, the reduction, and the model's count.
pub fn apply_flops_per_cell(shape: &ChunkShape, model_flops: u64) -> u64 {
    let ChunkShape {
        nq,
        nb,
        nc,
        dim,
        nba,
        na,
        ..
    } = *shape;
    let interp = 2 * nq * nb * nc * (1 + dim);
    let aux = 2 * nq * nba * na * (1 + dim);
    let w = nc * (1 + dim);
    (3 * interp + aux + 2 * nq * w * w) as u64 + nq as u64 * model_flops
}

/// Flops charged per cell by [`integrate_jacobian_chunk`]: interpolation of
/// `u`, the `(nb·c)²` entries each costing a `(c(1+dim))`-wide bilinear
/// form per point, and the model's count.
pub fn jacobian_flops_per_cell(shape: &ChunkShape, model_flops: u64) -> u64 {
    let ChunkShape {
        nq,
        nb,
        nc,
        dim,
        nba,
        na,
        ..
    } = *shape;
    let interp = 2 * nq * nb * nc * (1 + dim);
    let aux = 2 * nq * nba * na * (1 + dim);
    let w = 1 + dim;
    let entries = nb * nb * nc * nc;
    (interp + aux + 2 * nq * entries * w * w) as u64 + nq as u64 * model_flops
}
