//! Residual and Jacobian assembly over chunks of cells.
//!
//! The flow for every operator is the same: scatter the global input into a
//! local vector (filling Dirichlet values), gather element coefficients for
//! a chunk of cells, integrate, and add the element results back in
//! ascending cell order. Integration of different chunks may run on a
//! thread pool; accumulation never does, so results are bitwise identical
//! for every chunk size and thread count.

mod kernels;
mod sparse;

use std::ops::{Add, AddAssign, Range};
use std::sync::Mutex;

use rayon::prelude::*;
use thiserror::Error;

pub use kernels::{
    apply_flops_per_cell, apply_jacobian_chunk, integrate_jacobian_chunk, integrate_residual_chunk,
    jacobian_flops_per_cell, residual_flops_per_cell, ChunkShape, ChunkWorkspace,
};
pub use sparse::SparseMatrix;

use crate::discretization::{
    fill_cell_geometry, make_quadrature, tabulate, DiscretizationError, ElementKind,
    LagrangeElement, QuadratureRule, Tabulation,
};
use crate::layout::{
    global_to_local, global_to_local_homogeneous, local_to_global_add, mark_boundary_constrained,
    BoundaryFn, CoordinateField, ElementRestriction, GlobalMap, LayoutError, Section,
};
use crate::mesh::{CellShape, MeshError, MeshPlex};
use crate::physics::{PhysicsError, PointwiseModel};

pub const DEFAULT_CHUNK_SIZE: usize = 32;

/// Relative tolerance used by [`Assembler::check_jacobian_fd`].
pub const FD_JACOBIAN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("mesh mixes cell shapes; assembly needs a single shape")]
    HybridMesh,
    #[error("vector has length {found}, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("model has {model} components but the space has {space}")]
    ComponentMismatch { model: usize, space: usize },
    #[error("model reads {model} auxiliary components, {given} supplied")]
    AuxMismatch { model: usize, given: usize },
    #[error("chunk size must be at least 1")]
    ZeroChunkSize,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Discretization(#[from] DiscretizationError),
    #[error(transparent)]
    Physics(#[from] PhysicsError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn check_len(expected: usize, found: usize) -> Result<(), AssemblyError> {
    if expected == found {
        Ok(())
    } else {
        Err(AssemblyError::SizeMismatch { expected, found })
    }
}

/// Model-level operation counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PerfCounters {
    pub flops: u64,
    pub bytes_moved: u64,
    pub cells_processed: u64,
    pub chunks_processed: u64,
}

impl Add for PerfCounters {
    type Output = PerfCounters;

    fn add(self, o: PerfCounters) -> PerfCounters {
        PerfCounters {
            flops: self.flops + o.flops,
            bytes_moved: self.bytes_moved + o.bytes_moved,
            cells_processed: self.cells_processed + o.cells_processed,
            chunks_processed: self.chunks_processed + o.chunks_processed,
        }
    }
}

impl AddAssign for PerfCounters {
    fn add_assign(&mut self, o: PerfCounters) {
        *self = *self + o;
    }
}

/// `(flops / dof, bytes / dof)`; zero when there are no dofs.
pub fn report_per_dof(counters: &PerfCounters, num_global: usize) -> (f64, f64) {
    if num_global == 0 {
        return (0.0, 0.0);
    }
    let n = num_global as f64;
    (counters.flops as f64 / n, counters.bytes_moved as f64 / n)
}

/// A Lagrange space on a single-shape mesh together with its dof layout,
/// numbering, quadrature and tabulation.
#[derive(Clone, Debug)]
pub struct FunctionSpace {
    pub element: LagrangeElement,
    pub components: usize,
    pub section: Section,
    pub gmap: GlobalMap,
    pub rule: QuadratureRule,
    pub tab: Tabulation,
    pub restriction: ElementRestriction,
}

impl FunctionSpace {
    /// Builds the space with the element's default quadrature. With
    /// `dirichlet`, every boundary dof is constrained.
    pub fn new(
        mesh: &MeshPlex,
        kind: ElementKind,
        components: usize,
        dirichlet: bool,
    ) -> Result<Self, AssemblyError> {
        let shape = mesh.uniform_shape().ok_or(AssemblyError::HybridMesh)?;
        let element = LagrangeElement::new(kind, shape)?;
        Self::with_quadrature(
            mesh,
            kind,
            components,
            dirichlet,
            element.default_quadrature_degree(),
        )
    }

    pub fn with_quadrature(
        mesh: &MeshPlex,
        kind: ElementKind,
        components: usize,
        dirichlet: bool,
        quad_degree: usize,
    ) -> Result<Self, AssemblyError> {
        let shape = mesh.uniform_shape().ok_or(AssemblyError::HybridMesh)?;
        let element = LagrangeElement::new(kind, shape)?;
        let section = Section::new(mesh, &[element.field_layout(components)])?;
        let (section, gmap) = if dirichlet {
            mark_boundary_constrained(mesh, &section, 0)?
        } else {
            let g = GlobalMap::from_section(&section);
            (section, g)
        };
        let rule = make_quadrature(shape, quad_degree)?;
        let tab = tabulate(&element, &rule);
        let restriction = ElementRestriction::new(mesh, &section, 0)?;
        Ok(FunctionSpace {
            element,
            components,
            section,
            gmap,
            rule,
            tab,
            restriction,
        })
    }

    pub fn num_global(&self) -> usize {
        self.gmap.num_global()
    }

    pub fn num_local(&self) -> usize {
        self.section.storage_size()
    }

    /// Nodal interpolant as a local vector. Every node sits at the centroid
    /// of the mesh point carrying it.
    pub fn interpolate_local(&self, mesh: &MeshPlex, f: &dyn Fn(&[f64], &mut [f64])) -> Vec<f64> {
        let coords = CoordinateField::new(mesh);
        let nc = self.components;
        let mut out = vec![0.0; self.num_local()];
        let mut buf = vec![0.0; nc];
        for p in 0..mesh.num_points() {
            let n = self.section.dof(p, 0);
            if n == 0 {
                continue;
            }
            let x = coords.location(mesh, p);
            let off = self.section.offset(p, 0);
            f(&x, &mut buf);
            for node in 0..n / nc {
                out[off + node * nc..off + (node + 1) * nc].copy_from_slice(&buf);
            }
        }
        out
    }

    /// Nodal interpolant restricted to the unknowns.
    pub fn interpolate(&self, mesh: &MeshPlex, f: &dyn Fn(&[f64], &mut [f64])) -> Vec<f64> {
        self.restrict(&self.interpolate_local(mesh, f))
    }

    /// Drops constrained entries of a local vector.
    pub fn restrict(&self, local: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.num_global()];
        for (v, gi) in local.iter().zip(self.gmap.local_to_global()) {
            if let Some(gi) = gi {
                g[*gi] = *v;
            }
        }
        g
    }
}

/// A coefficient field read by the model at quadrature points.
#[derive(Clone, Debug)]
pub struct AuxField {
    pub element: LagrangeElement,
    pub components: usize,
    pub section: Section,
    /// Local vector over `section`.
    pub values: Vec<f64>,
}

impl AuxField {
    pub fn new(
        mesh: &MeshPlex,
        kind: ElementKind,
        components: usize,
        values: Vec<f64>,
    ) -> Result<Self, AssemblyError> {
        let shape = mesh.uniform_shape().ok_or(AssemblyError::HybridMesh)?;
        let element = LagrangeElement::new(kind, shape)?;
        let section = Section::new(mesh, &[element.field_layout(components)])?;
        check_len(section.storage_size(), values.len())?;
        Ok(AuxField {
            element,
            components,
            section,
            values,
        })
    }

    /// Interpolates `f` at the element nodes.
    pub fn from_fn(
        mesh: &MeshPlex,
        kind: ElementKind,
        components: usize,
        f: &dyn Fn(&[f64], &mut [f64]),
    ) -> Result<Self, AssemblyError> {
        let space = FunctionSpace::new(mesh, kind, components, false)?;
        let values = space.interpolate_local(mesh, f);
        Self::new(mesh, kind, components, values)
    }
}

struct AuxData<'a> {
    field: &'a AuxField,
    restriction: ElementRestriction,
    tab: Tabulation,
}

/// Result of [`Assembler::check_jacobian_fd`].
#[derive(Clone, Debug, PartialEq)]
pub struct FdJacobianReport {
    pub columns_checked: usize,
    pub max_rel_error: f64,
    pub worst_column: Option<usize>,
    pub tolerance: f64,
}

impl FdJacobianReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error <= self.tolerance
    }
}

#[derive(Clone, Copy)]
enum Kernel {
    Residual,
    Apply,
    Jacobian,
}

/// Evaluates residuals, Jacobians and Jacobian actions of one model on one
/// function space.
pub struct Assembler<'a> {
    mesh: &'a MeshPlex,
    space: &'a FunctionSpace,
    model: &'a dyn PointwiseModel,
    aux: Option<AuxData<'a>>,
    coords: CoordinateField,
    coord_restriction: ElementRestriction,
    gtab: Tabulation,
    chunk_size: usize,
    pool: Option<rayon::ThreadPool>,
    counters: Mutex<PerfCounters>,
}

impl<'a> Assembler<'a> {
    pub fn new(
        mesh: &'a MeshPlex,
        space: &'a FunctionSpace,
        model: &'a dyn PointwiseModel,
    ) -> Result<Self, AssemblyError> {
        Self::build(mesh, space, model, None)
    }

    /// Like [`new`](Self::new) for models that read auxiliary fields.
    pub fn with_aux(
        mesh: &'a MeshPlex,
        space: &'a FunctionSpace,
        model: &'a dyn PointwiseModel,
        aux: &'a AuxField,
    ) -> Result<Self, AssemblyError> {
        Self::build(mesh, space, model, Some(aux))
    }

    fn build(
        mesh: &'a MeshPlex,
        space: &'a FunctionSpace,
        model: &'a dyn PointwiseModel,
        aux: Option<&'a AuxField>,
    ) -> Result<Self, AssemblyError> {
        let shape: CellShape = mesh.uniform_shape().ok_or(AssemblyError::HybridMesh)?;
        if model.num_components() != space.components {
            return Err(AssemblyError::ComponentMismatch {
                model: model.num_components(),
                space: space.components,
            });
        }
        let given = aux.map_or(0, |a| a.components);
        if model.num_aux() != given {
            return Err(AssemblyError::AuxMismatch {
                model: model.num_aux(),
                given,
            });
        }
        let aux = match aux {
            Some(field) => {
                if field.element.shape() != shape {
                    return Err(AssemblyError::HybridMesh);
                }
                check_len(field.section.storage_size(), field.values.len())?;
                let restriction = ElementRestriction::new(mesh, &field.section, 0)?;
                Some(AuxData {
                    field,
                    restriction,
                    tab: tabulate(&field.element, &space.rule),
                })
            }
            None => None,
        };
        let coords = CoordinateField::new(mesh);
        let coord_restriction = ElementRestriction::new(mesh, &coords.section, 0)?;
        let gtab = tabulate(&LagrangeElement::geometric(shape), &space.rule);
        Ok(Assembler {
            mesh,
            space,
            model,
            aux,
            coords,
            coord_restriction,
            gtab,
            chunk_size: DEFAULT_CHUNK_SIZE,
            pool: None,
            counters: Mutex::new(PerfCounters::default()),
        })
    }

    pub fn with_chunk_size(mut self, chunk_size: usize) -> Result<Self, AssemblyError> {
        if chunk_size == 0 {
            return Err(AssemblyError::ZeroChunkSize);
        }
        self.chunk_size = chunk_size;
        Ok(self)
    }

    /// Integrates chunks on `threads` workers; 0 or 1 keeps everything on
    /// the calling thread.
    pub fn with_threads(mut self, threads: usize) -> Result<Self, AssemblyError> {
        self.pool = if threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build()
                    .map_err(|e| AssemblyError::ThreadPool(e.to_string()))?,
            )
        } else {
            None
        };
        Ok(self)
    }

    pub fn mesh(&self) -> &MeshPlex {
        self.mesh
    }

    pub fn space(&self) -> &FunctionSpace {
        self.space
    }

    pub fn model(&self) -> &dyn PointwiseModel {
        self.model
    }

    pub fn chunk_size(&self) -> usize {
        self.chunk_size
    }

    pub fn num_global(&self) -> usize {
        self.space.num_global()
    }

    pub fn counters_snapshot(&self) -> PerfCounters {
        *self.counters.lock().expect("counter lock")
    }

    pub fn reset_counters(&self) {
        *self.counters.lock().expect("counter lock") = PerfCounters::default();
    }

    fn record(&self, c: PerfCounters) {
        *self.counters.lock().expect("counter lock") += c;
    }

    pub fn chunk_shape(&self) -> ChunkShape {
        let (nba, na) = self
            .aux
            .as_ref()
            .map_or((0, 0), |a| (a.tab.nb, a.field.components));
        ChunkShape {
            chunk_size: self.chunk_size.min(self.mesh.num_cells().max(1)),
            nq: self.space.tab.nq,
            nb: self.space.tab.nb,
            nc: self.space.components,
            dim: self.mesh.dim(),
            nv: self.gtab.nb,
            nba,
            na,
        }
    }

    fn chunks(&self) -> Vec<Range<usize>> {
        let n = self.mesh.num_cells();
        let cs = self.chunk_size;
        (0..n.div_ceil(cs))
            .map(|k| k * cs..((k + 1) * cs).min(n))
            .collect()
    }

    /// Fills coefficients, auxiliary data and geometry for `cells`.
    fn gather(
        &self,
        cells: Range<usize>,
        ws: &mut ChunkWorkspace,
        u_local: &[f64],
        x_local: Option<&[f64]>,
    ) -> Result<(), AssemblyError> {
        let sh = ws.shape;
        let ne = sh.elem_len();
        for (c, cell) in cells.enumerate() {
            let idx = self.space.restriction.indices(cell);
            for (k, &i) in idx.iter().enumerate() {
                ws.u_e[c * ne + k] = u_local[i];
            }
            if let Some(x) = x_local {
                for (k, &i) in idx.iter().enumerate() {
                    ws.x_e[c * ne + k] = x[i];
                }
            }
            if let Some(aux) = &self.aux {
                let n = sh.nba * sh.na;
                for (k, &i) in aux.restriction.indices(cell).iter().enumerate() {
                    ws.a_e[c * n + k] = aux.field.values[i];
                }
            }
            let nvd = sh.nv * sh.dim;
            let xe = &mut ws.coords_e[c * nvd..(c + 1) * nvd];
            for (k, &i) in self.coord_restriction.indices(cell).iter().enumerate() {
                xe[k] = self.coords.values[i];
            }
            let det = fill_cell_geometry(xe, &self.gtab, &mut ws.geoms[c]);
            if det <= 0.0 {
                return Err(DiscretizationError::InvertedCell { cell, det }.into());
            }
        }
        Ok(())
    }

    fn chunk_cost(&self, kind: Kernel, ncells: usize) -> PerfCounters {
        let sh = self.chunk_shape();
        let word = std::mem::size_of::<f64>();
        let idx = std::mem::size_of::<usize>();
        let ne = sh.elem_len();
        // Coefficients and geometry in, element results out, dof indices read.
        let mut per_cell = ne * word + sh.nba * sh.na * word + sh.nv * sh.dim * word + sh.nb * idx;
        let flops = match kind {
            Kernel::Residual => {
                per_cell += ne * word;
                residual_flops_per_cell(&sh, self.model.residual_flops(sh.dim))
            }
            Kernel::Apply => {
                per_cell += 2 * ne * word;
                apply_flops_per_cell(&sh, self.model.jacobian_flops(sh.dim))
            }
            Kernel::Jacobian => {
                per_cell += ne * ne * word;
                jacobian_flops_per_cell(&sh, self.model.jacobian_flops(sh.dim))
            }
        };
        PerfCounters {
            flops: flops * ncells as u64,
            bytes_moved: (per_cell * ncells) as u64,
            cells_processed: ncells as u64,
            chunks_processed: 1,
        }
    }

    fn run_chunk(
        &self,
        kind: Kernel,
        cells: Range<usize>,
        ws: &mut ChunkWorkspace,
        u_local: &[f64],
        x_local: Option<&[f64]>,
    ) -> Result<(), AssemblyError> {
        let n = cells.len();
        self.gather(cells, ws, u_local, x_local)?;
        let aux_tab = self.aux.as_ref().map(|a| &a.tab);
        match kind {
            Kernel::Residual => {
                integrate_residual_chunk(n, ws, &self.space.tab, aux_tab, self.model)
            }
            Kernel::Apply => apply_jacobian_chunk(n, ws, &self.space.tab, aux_tab, self.model)?,
            Kernel::Jacobian => {
                integrate_jacobian_chunk(n, ws, &self.space.tab, aux_tab, self.model)?
            }
        }
        self.record(self.chunk_cost(kind, n));
        Ok(())
    }

    /// Runs `kind` over every chunk and hands each finished chunk's
    /// workspace to `insert`, always in ascending cell order.
    fn traverse(
        &self,
        kind: Kernel,
        u_local: &[f64],
        x_local: Option<&[f64]>,
        mut insert: impl FnMut(Range<usize>, &ChunkWorkspace),
    ) -> Result<(), AssemblyError> {
        let chunks = self.chunks();
        let new_ws = || {
            let mut ws = ChunkWorkspace::new(self.chunk_shape());
            if matches!(kind, Kernel::Jacobian) {
                ws.reserve_matrices();
            }
            ws
        };
        match &self.pool {
            None => {
                let mut ws = new_ws();
                for cells in chunks {
                    self.run_chunk(kind, cells.clone(), &mut ws, u_local, x_local)?;
                    insert(cells, &ws);
                }
            }
            Some(pool) => {
                let done: Vec<Result<ChunkWorkspace, AssemblyError>> = pool.install(|| {
                    chunks
                        .par_iter()
                        .map(|cells| {
                            let mut ws = new_ws();
                            self.run_chunk(kind, cells.clone(), &mut ws, u_local, x_local)
                                .map(|_| ws)
                        })
                        .collect()
                });
                for (cells, ws) in chunks.into_iter().zip(done) {
                    insert(cells, &ws?);
                }
            }
        }
        Ok(())
    }

    /// Local vector of `u_global` with boundary values from `bc`.
    pub fn local_state(
        &self,
        u_global: &[f64],
        bc: &BoundaryFn,
    ) -> Result<Vec<f64>, AssemblyError> {
        check_len(self.num_global(), u_global.len())?;
        Ok(global_to_local(
            self.mesh,
            &self.space.section,
            &self.space.gmap,
            u_global,
            bc,
        )?)
    }

    /// Residual restricted to the unknowns, with constrained dofs taking
    /// their values from `bc`.
    pub fn evaluate_residual(
        &self,
        u_global: &[f64],
        bc: &BoundaryFn,
    ) -> Result<Vec<f64>, AssemblyError> {
        let u_local = self.local_state(u_global, bc)?;
        let local = self.residual_local(&u_local)?;
        let mut f = vec![0.0; self.num_global()];
        local_to_global_add(&self.space.gmap, &local, &mut f)?;
        Ok(f)
    }

    /// Residual over the whole local vector, constrained rows included.
    pub fn residual_local(&self, u_local: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        check_len(self.space.num_local(), u_local.len())?;
        let mut out = vec![0.0; u_local.len()];
        let ne = self.chunk_shape().elem_len();
        self.traverse(Kernel::Residual, u_local, None, |cells, ws| {
            for (c, cell) in cells.enumerate() {
                let fe = &ws.f_e[c * ne..(c + 1) * ne];
                for (&i, &v) in self.space.restriction.indices(cell).iter().zip(fe) {
                    out[i] += v;
                }
            }
        })?;
        Ok(out)
    }

    /// Sparsity of the unknown-to-unknown coupling: every pair of
    /// unconstrained dofs sharing a cell closure.
    pub fn jacobian_pattern(&self) -> SparseMatrix {
        let n = self.num_global();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for cell in self.mesh.cells() {
            let g: Vec<usize> = self
                .space
                .restriction
                .indices(cell)
                .iter()
                .filter_map(|&i| self.space.gmap.global_index(i))
                .collect();
            for &r in &g {
                rows[r].extend_from_slice(&g);
            }
        }
        SparseMatrix::from_pattern(n, rows)
    }

    /// Jacobian at `u_global` on the unknowns; rows and columns of
    /// constrained dofs are dropped.
    pub fn assemble_jacobian(
        &self,
        u_global: &[f64],
        bc: &BoundaryFn,
    ) -> Result<SparseMatrix, AssemblyError> {
        let u_local = self.local_state(u_global, bc)?;
        let mut a = self.jacobian_pattern();
        let ne = self.chunk_shape().elem_len();
        let gmap = &self.space.gmap;
        self.traverse(Kernel::Jacobian, &u_local, None, |cells, ws| {
            for (c, cell) in cells.enumerate() {
                let ke = &ws.k_e[c * ne * ne..(c + 1) * ne * ne];
                let idx = self.space.restriction.indices(cell);
                for (r, &li) in idx.iter().enumerate() {
                    let Some(gi) = gmap.global_index(li) else {
                        continue;
                    };
                    for (s, &lj) in idx.iter().enumerate() {
                        if let Some(gj) = gmap.global_index(lj) {
                            a.add(gi, gj, ke[r * ne + s]);
                        }
                    }
                }
            }
        })?;
        Ok(a)
    }

    /// Element matrices of every cell, in closure order, without any
    /// constraint handling.
    pub fn element_matrices(&self, u_local: &[f64]) -> Result<Vec<Vec<f64>>, AssemblyError> {
        check_len(self.space.num_local(), u_local.len())?;
        let ne = self.chunk_shape().elem_len();
        let mut out = Vec::with_capacity(self.mesh.num_cells());
        self.traverse(Kernel::Jacobian, u_local, None, |cells, ws| {
            for c in 0..cells.len() {
                out.push(ws.k_e[c * ne * ne..(c + 1) * ne * ne].to_vec());
            }
        })?;
        Ok(out)
    }

    /// Element vectors of every cell for a given local state.
    pub fn element_vectors(&self, u_local: &[f64]) -> Result<Vec<Vec<f64>>, AssemblyError> {
        check_len(self.space.num_local(), u_local.len())?;
        let ne = self.chunk_shape().elem_len();
        let mut out = Vec::with_capacity(self.mesh.num_cells());
        self.traverse(Kernel::Residual, u_local, None, |cells, ws| {
            for c in 0..cells.len() {
                out.push(ws.f_e[c * ne..(c + 1) * ne].to_vec());
            }
        })?;
        Ok(out)
    }

    /// `F′(u)·x` on the unknowns without forming the matrix. `x_global` is
    /// embedded with zeros at constrained dofs.
    pub fn apply_jacobian_matrix_free(
        &self,
        u_global: &[f64],
        x_global: &[f64],
        bc: &BoundaryFn,
    ) -> Result<Vec<f64>, AssemblyError> {
        let u_local = self.local_state(u_global, bc)?;
        check_len(self.num_global(), x_global.len())?;
        let x_local = global_to_local_homogeneous(&self.space.gmap, x_global)?;
        let mut y_local = vec![0.0; u_local.len()];
        let ne = self.chunk_shape().elem_len();
        self.traverse(Kernel::Apply, &u_local, Some(&x_local), |cells, ws| {
            for (c, cell) in cells.enumerate() {
                let fe = &ws.f_e[c * ne..(c + 1) * ne];
                for (&i, &v) in self.space.restriction.indices(cell).iter().zip(fe) {
                    y_local[i] += v;
                }
            }
        })?;
        let mut y = vec![0.0; self.num_global()];
        local_to_global_add(&self.space.gmap, &y_local, &mut y)?;
        Ok(y)
    }

    /// `A·x` with the assembled matrix, charging its cost to the counters.
    pub fn apply_assembled(&self, a: &SparseMatrix, x: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        check_len(a.n(), x.len())?;
        let y = a.matvec(x);
        self.record(a.matvec_cost());
        Ok(y)
    }

    /// Compares assembled Jacobian columns with central differences of the
    /// residual. Up to `samples` columns are checked, evenly spaced; the
    /// step is `1e-6·(‖u‖∞ + 1)`. A column's error is
    /// `‖J e_j − fd‖∞ / max(‖J e_j‖∞, ‖fd‖∞)`.
    pub fn check_jacobian_fd(
        &self,
        u_global: &[f64],
        bc: &BoundaryFn,
        samples: usize,
    ) -> Result<FdJacobianReport, AssemblyError> {
        let n = self.num_global();
        let a = self.assemble_jacobian(u_global, bc)?;
        let cols: Vec<usize> = if samples >= n {
            (0..n).collect()
        } else {
            let mut c: Vec<usize> = (0..samples).map(|k| k * n / samples).collect();
            c.dedup();
            c
        };
        let unorm = u_global.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = 1e-6 * (unorm + 1.0);
        let mut worst = 0.0f64;
        let mut worst_column = None;
        let mut up = u_global.to_vec();
        for &j in &cols {
            up[j] = u_global[j] + h;
            let plus_v = up[j];
            let fp = self.evaluate_residual(&up, bc)?;
            up[j] = u_global[j] - h;
            let span = plus_v - up[j];
            let fm = self.evaluate_residual(&up, bc)?;
            up[j] = u_global[j];
            let mut diff = 0.0f64;
            let mut cn = 0.0f64;
            let mut fdn = 0.0f64;
            for i in 0..n {
                let fd = (fp[i] - fm[i]) / span;
                let col = a.get(i, j);
                diff = diff.max((col - fd).abs());
                cn = cn.max(col.abs());
                fdn = fdn.max(fd.abs());
            }
            let denom = cn.max(fdn);
            let err = if denom > 0.0 { diff / denom } else { 0.0 };
            if err > worst || worst_column.is_none() {
                worst = worst.max(err);
                worst_column = Some(j);
            }
        }
        Ok(FdJacobianReport {
            columns_checked: cols.len(),
            max_rel_error: worst,
            worst_column,
            tolerance: FD_JACOBIAN_TOLERANCE,
        })
    }
}
