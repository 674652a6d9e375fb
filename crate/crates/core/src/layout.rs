//! Data layout over mesh points.
//!
//! A [`Section`] assigns each `(point, field)` pair a dof count and an offset
//! into the *local* vector. The local vector also holds Dirichlet-constrained
//! dofs; the *global* vector seen by solvers holds only the unconstrained
//! ones, and [`GlobalMap`] translates between the two.

use thiserror::Error;

use crate::mesh::{MeshError, MeshPlex};

#[derive(Debug, Error)]
pub enum LayoutError {
    #[error("vector has length {found}, expected {expected}")]
    SizeMismatch { expected: usize, found: usize },
    #[error("dofs-per-depth vector has length {found}, expected dim + 1 = {expected}")]
    DepthVectorLength { expected: usize, found: usize },
    #[error("field {0} has zero components")]
    ZeroComponents(usize),
    #[error("field {field} out of range ({num_fields} fields)")]
    FieldOutOfRange { field: usize, num_fields: usize },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Layout of one field: nodes per point at each depth, components per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldLayout {
    pub nodes_per_depth: Vec<usize>,
    pub components: usize,
}

impl FieldLayout {
    pub fn new(nodes_per_depth: Vec<usize>, components: usize) -> Self {
        FieldLayout {
            nodes_per_depth,
            components,
        }
    }

    /// One scalar dof per vertex.
    pub fn p1(dim: usize) -> Self {
        let mut d = vec![0; dim + 1];
        d[0] = 1;
        FieldLayout::new(d, 1)
    }

    /// One scalar dof per vertex and per edge.
    pub fn p2(dim: usize) -> Self {
        let mut d = vec![0; dim + 1];
        d[0] = 1;
        d[1] = 1;
        FieldLayout::new(d, 1)
    }
}

#[derive(Clone, Debug)]
pub struct Section {
    fields: Vec<FieldLayout>,
    // Indexed by point * num_fields + field.
    dofs: Vec<usize>,
    offsets: Vec<usize>,
    storage_size: usize,
    constrained: Vec<bool>,
}

impl Section {
    /// Assigns dofs uniformly by point depth. Offsets run point-major with
    /// the field index innermost.
    pub fn new(mesh: &MeshPlex, fields: &[FieldLayout]) -> Result<Self, LayoutError> {
        let dim = mesh.dim();
        for (f, fl) in fields.iter().enumerate() {
            if fl.nodes_per_depth.len() != dim + 1 {
                return Err(LayoutError::DepthVectorLength {
                    expected: dim + 1,
                    found: fl.nodes_per_depth.len(),
                });
            }
            if fl.components == 0 {
                return Err(LayoutError::ZeroComponents(f));
            }
        }
        let nf = fields.len();
        let np = mesh.num_points();
        let mut dofs = Vec::with_capacity(np * nf);
        let mut offsets = Vec::with_capacity(np * nf);
        let mut off = 0;
        for p in 0..np {
            let depth = mesh.depth(p);
            for fl in fields {
                let n = fl.nodes_per_depth[depth] * fl.components;
                dofs.push(n);
                offsets.push(off);
                off += n;
            }
        }
        Ok(Section {
            fields: fields.to_vec(),
            dofs,
            offsets,
            storage_size: off,
            constrained: vec![false; off],
        })
    }

    pub fn num_fields(&self) -> usize {
        self.fields.len()
    }

    pub fn field(&self, f: usize) -> &FieldLayout {
        &self.fields[f]
    }

    pub fn num_points(&self) -> usize {
        self.dofs.len() / self.fields.len().max(1)
    }

    pub fn dof(&self, p: usize, f: usize) -> usize {
        self.dofs[p * self.fields.len() + f]
    }

    pub fn offset(&self, p: usize, f: usize) -> usize {
        self.offsets[p * self.fields.len() + f]
    }

    /// Length of a local vector.
    pub fn storage_size(&self) -> usize {
        self.storage_size
    }

    pub fn is_constrained(&self, dof: usize) -> bool {
        self.constrained[dof]
    }

    pub fn constrained_mask(&self) -> &[bool] {
        &self.constrained
    }

    pub fn num_constrained(&self) -> usize {
        self.constrained.iter().filter(|&&c| c).count()
    }

    /// Constrains every dof of `field` on the points selected by `mask`.
    pub fn constrain_points(&mut self, field: usize, mask: &[bool]) -> Result<(), LayoutError> {
        if field >= self.fields.len() {
            return Err(LayoutError::FieldOutOfRange {
                field,
                num_fields: self.fields.len(),
            });
        }
        for (p, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let (off, n) = (self.offset(p, field), self.dof(p, field));
            for c in &mut self.constrained[off..off + n] {
                *c = true;
            }
        }
        Ok(())
    }

    /// Local indices of the closure of `point`, field-contiguous: every
    /// field-0 dof in closure order, then field 1, and so on. On a point
    /// reached with negative orientation, its nodes are listed in reverse
    /// (components within a node keep their order).
    pub fn closure_indices(
        &self,
        mesh: &MeshPlex,
        point: usize,
    ) -> Result<Vec<usize>, LayoutError> {
        let closure = mesh.transitive_closure(point)?;
        let mut idx = Vec::new();
        for (f, fl) in self.fields.iter().enumerate() {
            let nc = fl.components;
            for cp in &closure {
                let off = self.offset(cp.point, f);
                let nodes = self.dof(cp.point, f) / nc;
                if cp.orientation < 0 && nodes > 1 {
                    for node in (0..nodes).rev() {
                        idx.extend(off + node * nc..off + (node + 1) * nc);
                    }
                } else {
                    idx.extend(off..off + nodes * nc);
                }
            }
        }
        Ok(idx)
    }

    /// Closure size of each field at `point`.
    pub fn closure_field_sizes(
        &self,
        mesh: &MeshPlex,
        point: usize,
    ) -> Result<Vec<usize>, LayoutError> {
        let closure = mesh.transitive_closure(point)?;
        Ok((0..self.fields.len())
            .map(|f| closure.iter().map(|cp| self.dof(cp.point, f)).sum())
            .collect())
    }

    fn check_len(&self, len: usize) -> Result<(), LayoutError> {
        if len == self.storage_size {
            Ok(())
        } else {
            Err(LayoutError::SizeMismatch {
                expected: self.storage_size,
                found: len,
            })
        }
    }
}

/// Gathers the closure values of `point` from a local vector.
pub fn vec_get_closure(
    mesh: &MeshPlex,
    section: &Section,
    vec: &[f64],
    point: usize,
) -> Result<Vec<f64>, LayoutError> {
    section.check_len(vec.len())?;
    Ok(section
        .closure_indices(mesh, point)?
        .into_iter()
        .map(|i| vec[i])
        .collect())
}

/// Adds `values` into the closure of `point`; inverse of [`vec_get_closure`].
pub fn vec_set_closure_add(
    mesh: &MeshPlex,
    section: &Section,
    vec: &mut [f64],
    point: usize,
    values: &[f64],
) -> Result<(), LayoutError> {
    section.check_len(vec.len())?;
    let idx = section.closure_indices(mesh, point)?;
    if idx.len() != values.len() {
        return Err(LayoutError::SizeMismatch {
            expected: idx.len(),
            found: values.len(),
        });
    }
    for (i, v) in idx.into_iter().zip(values) {
        vec[i] += v;
    }
    Ok(())
}

/// Precomputed closure indices for every point in a height stratum.
///
/// This is the element restriction: row `k` lists the local dofs of the
/// `k`-th point of the stratum.
#[derive(Clone, Debug)]
pub struct ElementRestriction {
    first_point: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
}

impl ElementRestriction {
    pub fn new(mesh: &MeshPlex, section: &Section, height: usize) -> Result<Self, LayoutError> {
        let range = mesh.height_stratum(height)?;
        let mut offsets = vec![0];
        let mut indices = Vec::new();
        for p in range.clone() {
            indices.extend(section.closure_indices(mesh, p)?);
            offsets.push(indices.len());
        }
        Ok(ElementRestriction {
            first_point: range.start,
            offsets,
            indices,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self, point: usize) -> &[usize] {
        let k = point - self.first_point;
        &self.indices[self.offsets[k]..self.offsets[k + 1]]
    }
}

/// Local-to-global numbering; constrained local dofs map to `None`.
#[derive(Clone, Debug)]
pub struct GlobalMap {
    local_to_global: Vec<Option<usize>>,
    num_global: usize,
}

impl GlobalMap {
    /// Numbers the unconstrained local dofs consecutively in local order.
    pub fn from_section(section: &Section) -> Self {
        let mut next = 0;
        let local_to_global = section
            .constrained_mask()
            .iter()
            .map(|&c| {
                if c {
                    None
                } else {
                    next += 1;
                    Some(next - 1)
                }
            })
            .collect();
        GlobalMap {
            local_to_global,
            num_global: next,
        }
    }

    pub fn num_global(&self) -> usize {
        self.num_global
    }

    pub fn num_local(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn global_index(&self, local: usize) -> Option<usize> {
        self.local_to_global[local]
    }

    pub fn local_to_global(&self) -> &[Option<usize>] {
        &self.local_to_global
    }

    fn check(&self, local: usize, global: usize) -> Result<(), LayoutError> {
        if local != self.local_to_global.len() {
            return Err(LayoutError::SizeMismatch {
                expected: self.local_to_global.len(),
                found: local,
            });
        }
        if global != self.num_global {
            return Err(LayoutError::SizeMismatch {
                expected: self.num_global,
                found: global,
            });
        }
        Ok(())
    }
}

/// Constrains the dofs of `field` on boundary points (faces with one
/// supporting cell and their closures) and returns the new numbering.
pub fn mark_boundary_constrained(
    mesh: &MeshPlex,
    section: &Section,
    field: usize,
) -> Result<(Section, GlobalMap), LayoutError> {
    let mut s = section.clone();
    s.constrain_points(field, &mesh.boundary_mask())?;
    let g = GlobalMap::from_section(&s);
    Ok((s, g))
}

/// Vertex coordinates laid out by a section with `dim` components per vertex.
#[derive(Clone, Debug)]
pub struct CoordinateField {
    pub section: Section,
    pub values: Vec<f64>,
}

impl CoordinateField {
    pub fn new(mesh: &MeshPlex) -> Self {
        let dim = mesh.dim();
        let mut nodes = vec![0; dim + 1];
        nodes[0] = 1;
        let section =
            Section::new(mesh, &[FieldLayout::new(nodes, dim)]).expect("valid coordinate layout");
        let mut values = vec![0.0; section.storage_size()];
        for v in mesh.vertices() {
            let off = section.offset(v, 0);
            values[off..off + dim].copy_from_slice(mesh.vertex_coordinates(v));
        }
        CoordinateField { section, values }
    }

    /// Centroid of the vertices in the closure of `point`; the vertex itself
    /// for a vertex, the midpoint for an edge.
    pub fn location(&self, mesh: &MeshPlex, point: usize) -> Vec<f64> {
        let dim = mesh.dim();
        let xs =
            vec_get_closure(mesh, &self.section, &self.values, point).expect("coordinate layout");
        let n = xs.len() / dim;
        let mut c = vec![0.0; dim];
        for x in xs.chunks(dim) {
            for (ci, xi) in c.iter_mut().zip(x) {
                *ci += xi;
            }
        }
        c.iter_mut().for_each(|ci| *ci /= n as f64);
        c
    }
}

/// Boundary data: `bc(field, x, values)` writes the field's components at `x`.
pub type BoundaryFn<'a> = dyn Fn(usize, &[f64], &mut [f64]) + Sync + 'a;

/// Scatters a global vector into a fresh local vector and fills constrained
/// dofs from `bc` evaluated at the dof's node location.
pub fn global_to_local(
    mesh: &MeshPlex,
    section: &Section,
    gmap: &GlobalMap,
    g: &[f64],
    bc: &BoundaryFn,
) -> Result<Vec<f64>, LayoutError> {
    gmap.check(section.storage_size(), g.len())?;
    let mut local = global_to_local_homogeneous(gmap, g)?;
    let mut coords: Option<CoordinateField> = None;
    let mut buf = Vec::new();
    for p in 0..mesh.num_points() {
        for f in 0..section.num_fields() {
            let n = section.dof(p, f);
            let off = section.offset(p, f);
            if n == 0 || !section.constrained[off..off + n].iter().any(|&c| c) {
                continue;
            }
            let coords = coords.get_or_insert_with(|| CoordinateField::new(mesh));
            let x = coords.location(mesh, p);
            let nc = section.field(f).components;
            buf.resize(nc, 0.0);
            // Every node on a point shares the point's location.
            for node in 0..n / nc {
                bc(f, &x, &mut buf);
                for (c, &v) in buf.iter().enumerate() {
                    let i = off + node * nc + c;
                    if section.constrained[i] {
                        local[i] = v;
                    }
                }
            }
        }
    }
    Ok(local)
}

/// Scatters a global vector into a local one with zeros at constrained dofs.
pub fn global_to_local_homogeneous(gmap: &GlobalMap, g: &[f64]) -> Result<Vec<f64>, LayoutError> {
    gmap.check(gmap.num_local(), g.len())?;
    Ok(gmap
        .local_to_global
        .iter()
        .map(|gi| gi.map_or(0.0, |gi| g[gi]))
        .collect())
}

/// Adds unconstrained local entries into `g`; constrained entries are dropped.
pub fn local_to_global_add(gmap: &GlobalMap, l: &[f64], g: &mut [f64]) -> Result<(), LayoutError> {
    gmap.check(l.len(), g.len())?;
    for (lv, gi) in l.iter().zip(&gmap.local_to_global) {
        if let Some(gi) = gi {
            g[*gi] += lv;
        }
    }
    Ok(())
}
