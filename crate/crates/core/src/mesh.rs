//! Unstructured mesh topology stored as a Hasse diagram.
//!
//! Every topological entity (cell, face, edge, vertex) is a *point* in one
//! index space. Arrows run from a point to the points on its boundary one
//! level down (the *cone*); the transpose relation is the *support*.
//!
//! Point numbering is fixed: cells `[0, nC)`, vertices `[nC, nC + nV)`, then
//! edges, then faces. Each stratum is therefore a contiguous range.
//!
//! Orientation tags on cone arrows:
//! - an edge is stored as `(lower vertex, higher vertex)`; a cell (or face)
//!   traversing it the other way records `-1`, otherwise `0`;
//! - a triangular face is stored with its vertices sorted ascending; a tet
//!   records `r >= 0` when its local face tuple is the stored tuple rotated by
//!   `r`, and `-(r + 1)` when it is the reflection starting at stored vertex `r`.

use std::collections::HashMap;
use std::io::BufRead;
use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cell {cell} references vertex {vertex}, but only {num_vertices} vertices exist")]
    DanglingVertex {
        cell: usize,
        vertex: usize,
        num_vertices: usize,
    },
    #[error("vertex {0} is not referenced by any cell")]
    UnusedVertex(usize),
    #[error("cell {cell} has {found} vertices, expected {expected} for the declared shape (mixed-arity input needs shape tags)")]
    ArityMismatch {
        cell: usize,
        expected: usize,
        found: usize,
    },
    #[error("cell {cell} duplicates cell {first}")]
    DuplicateCell { cell: usize, first: usize },
    #[error("cell {cell} repeats a vertex")]
    DegenerateCell { cell: usize },
    #[error("cells of dimension {found} mixed with dimension {expected}")]
    MixedDimension { expected: usize, found: usize },
    #[error("coordinate array of length {len} is not a multiple of dimension {dim}")]
    CoordinateLength { len: usize, dim: usize },
    #[error("mesh has no cells")]
    Empty,
    #[error("point {point} out of range (mesh has {num_points} points)")]
    InvalidPoint { point: usize, num_points: usize },
    #[error("stratum {value} out of range for a mesh of dimension {dim}")]
    StratumOutOfRange { value: usize, dim: usize },
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CellShape {
    Segment,
    Triangle,
    Quadrilateral,
    Tetrahedron,
}

impl CellShape {
    pub fn dim(self) -> usize {
        match self {
            CellShape::Segment => 1,
            CellShape::Triangle | CellShape::Quadrilateral => 2,
            CellShape::Tetrahedron => 3,
        }
    }

    pub fn num_vertices(self) -> usize {
        match self {
            CellShape::Segment => 2,
            CellShape::Triangle => 3,
            CellShape::Quadrilateral | CellShape::Tetrahedron => 4,
        }
    }

    /// Reference-cell measure: 1, 1/2, 1 and 1/6.
    pub fn reference_measure(self) -> f64 {
        match self {
            CellShape::Segment | CellShape::Quadrilateral => 1.0,
            CellShape::Triangle => 0.5,
            CellShape::Tetrahedron => 1.0 / 6.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CellShape::Segment => "segment",
            CellShape::Triangle => "triangle",
            CellShape::Quadrilateral => "quad",
            CellShape::Tetrahedron => "tet",
        }
    }

    pub fn from_name(name: &str) -> Option<CellShape> {
        match name.to_ascii_lowercase().as_str() {
            "segment" | "interval" | "line" => Some(CellShape::Segment),
            "triangle" | "tri" => Some(CellShape::Triangle),
            "quad" | "quadrilateral" => Some(CellShape::Quadrilateral),
            "tet" | "tetrahedron" => Some(CellShape::Tetrahedron),
            _ => None,
        }
    }
}

/// A point reached by a transitive-closure traversal, with its orientation
/// composed along the traversal path.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClosurePoint {
    pub point: usize,
    pub orientation: i32,
}

// Local faces of a tet as cell-local vertex tuples. Chosen so that the
// breadth-first closure visits the cell's vertices in input order.
const TET_FACES: [[usize; 3]; 4] = [[0, 1, 2], [0, 3, 1], [0, 2, 3], [2, 1, 3]];

/// Immutable mesh DAG.
#[derive(Clone, Debug)]
pub struct MeshPlex {
    dim: usize,
    num_cells: usize,
    num_vertices: usize,
    num_edges: usize,
    num_faces: usize,
    cell_shapes: Vec<CellShape>,
    cone_offsets: Vec<usize>,
    cone_points: Vec<usize>,
    cone_orientations: Vec<i32>,
    support_offsets: Vec<usize>,
    support_points: Vec<usize>,
    coordinates: Vec<f64>,
}

impl MeshPlex {
    /// Builds a fully interpolated mesh from cells of a single shape.
    ///
    /// `coords` is a flat array of vertex positions, `shape.dim()` values
    /// per vertex.
    pub fn build(
        shape: CellShape,
        cells: &[Vec<usize>],
        coords: &[f64],
    ) -> Result<Self, MeshError> {
        for (c, verts) in cells.iter().enumerate() {
            if verts.len() != shape.num_vertices() {
                return Err(MeshError::ArityMismatch {
                    cell: c,
                    expected: shape.num_vertices(),
                    found: verts.len(),
                });
            }
        }
        let tagged: Vec<(CellShape, &[usize])> =
            cells.iter().map(|v| (shape, v.as_slice())).collect();
        Self::build_tagged(&tagged, coords)
    }

    /// Builds a (possibly hybrid) mesh where every cell carries its shape.
    pub fn build_mixed(
        cells: &[(CellShape, Vec<usize>)],
        coords: &[f64],
    ) -> Result<Self, MeshError> {
        let tagged: Vec<(CellShape, &[usize])> =
            cells.iter().map(|(s, v)| (*s, v.as_slice())).collect();
        Self::build_tagged(&tagged, coords)
    }

    fn build_tagged(cells: &[(CellShape, &[usize])], coords: &[f64]) -> Result<Self, MeshError> {
        let (first_shape, _) = *cells.first().ok_or(MeshError::Empty)?;
        let dim = first_shape.dim();
        if !coords.len().is_multiple_of(dim) {
            return Err(MeshError::CoordinateLength {
                len: coords.len(),
                dim,
            });
        }
        let num_vertices = coords.len() / dim;
        let num_cells = cells.len();

        let mut used = vec![false; num_vertices];
        let mut seen: HashMap<Vec<usize>, usize> = HashMap::new();
        for (c, &(shape, verts)) in cells.iter().enumerate() {
            if shape.dim() != dim {
                return Err(MeshError::MixedDimension {
                    expected: dim,
                    found: shape.dim(),
                });
            }
            if verts.len() != shape.num_vertices() {
                return Err(MeshError::ArityMismatch {
                    cell: c,
                    expected: shape.num_vertices(),
                    found: verts.len(),
                });
            }
            for &v in verts {
                if v >= num_vertices {
                    return Err(MeshError::DanglingVertex {
                        cell: c,
                        vertex: v,
                        num_vertices,
                    });
                }
                used[v] = true;
            }
            let mut key = verts.to_vec();
            key.sort_unstable();
            if key.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::DegenerateCell { cell: c });
            }
            if let Some(&first) = seen.get(&key) {
                return Err(MeshError::DuplicateCell { cell: c, first });
            }
            seen.insert(key, c);
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(MeshError::UnusedVertex(v));
        }

        let vertex_point = |v: usize| num_cells + v;
        let edge_base = num_cells + num_vertices;

        // Edges and faces are numbered in order of first encounter.
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_verts: Vec<(usize, usize)> = Vec::new();
        let mut face_ids: HashMap<[usize; 3], usize> = HashMap::new();
        let mut face_cones: Vec<[(usize, i32); 3]> = Vec::new();
        let mut cell_cones: Vec<Vec<(usize, i32)>> = Vec::with_capacity(num_cells);

        let mut edge_arrow =
            |a: usize, b: usize, edge_ids: &mut HashMap<(usize, usize), usize>| -> (usize, i32) {
                let key = (a.min(b), a.max(b));
                let next = edge_ids.len();
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edge_verts.push(key);
                    next
                });
                (id, if a < b { 0 } else { -1 })
            };

        for &(shape, verts) in cells {
            let cone = match shape {
                CellShape::Segment => {
                    vec![(vertex_point(verts[0]), 0), (vertex_point(verts[1]), 0)]
                }
                CellShape::Triangle | CellShape::Quadrilateral => {
                    let n = verts.len();
                    (0..n)
                        .map(|i| edge_arrow(verts[i], verts[(i + 1) % n], &mut edge_ids))
                        .collect()
                }
                CellShape::Tetrahedron => TET_FACES
                    .iter()
                    .map(|lf| {
                        let tuple = [verts[lf[0]], verts[lf[1]], verts[lf[2]]];
                        let mut stored = tuple;
                        stored.sort_unstable();
                        let next = face_ids.len();
                        let id = *face_ids.entry(stored).or_insert_with(|| {
                            let [a, b, c] = stored;
                            face_cones.push([
                                edge_arrow(a, b, &mut edge_ids),
                                edge_arrow(b, c, &mut edge_ids),
                                edge_arrow(c, a, &mut edge_ids),
                            ]);
                            next
                        });
                        (id, triangle_orientation(&stored, &tuple))
                    })
                    .collect(),
            };
            cell_cones.push(cone);
        }
        let num_edges = if dim >= 2 { edge_verts.len() } else { 0 };
        let num_faces = face_cones.len();
        let face_base = edge_base + num_edges;
        let num_points = face_base + num_faces;

        let mut cone_offsets = Vec::with_capacity(num_points + 1);
        let mut cone_points = Vec::new();
        let mut cone_orientations = Vec::new();
        cone_offsets.push(0);
        for (shape, cone) in cells.iter().map(|(s, _)| *s).zip(&cell_cones) {
            let base = match shape {
                CellShape::Segment => 0,
                CellShape::Triangle | CellShape::Quadrilateral => edge_base,
                CellShape::Tetrahedron => face_base,
            };
            for &(q, o) in cone {
                cone_points.push(base + q);
                cone_orientations.push(o);
            }
            cone_offsets.push(cone_points.len());
        }
        for _ in 0..num_vertices {
            cone_offsets.push(cone_points.len());
        }
        for &(a, b) in edge_verts.iter().take(num_edges) {
            cone_points.extend([vertex_point(a), vertex_point(b)]);
            cone_orientations.extend([0, 0]);
            cone_offsets.push(cone_points.len());
        }
        for cone in &face_cones {
            for &(e, o) in cone {
                cone_points.push(edge_base + e);
                cone_orientations.push(o);
            }
            cone_offsets.push(cone_points.len());
        }

        // Transpose; iterating p ascending leaves every support sorted.
        let mut counts = vec![0usize; num_points + 1];
        for &q in &cone_points {
            counts[q + 1] += 1;
        }
        for i in 0..num_points {
            counts[i + 1] += counts[i];
        }
        let support_offsets = counts.clone();
        let mut fill = counts;
        let mut support_points = vec![0; cone_points.len()];
        for p in 0..num_points {
            for &q in &cone_points[cone_offsets[p]..cone_offsets[p + 1]] {
                support_points[fill[q]] = p;
                fill[q] += 1;
            }
        }

        Ok(MeshPlex {
            dim,
            num_cells,
            num_vertices,
            num_edges,
            num_faces,
            cell_shapes: cells.iter().map(|(s, _)| *s).collect(),
            cone_offsets,
            cone_points,
            cone_orientations,
            support_offsets,
            support_points,
            coordinates: coords.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_points(&self) -> usize {
        self.cone_offsets.len() - 1
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_faces(&self) -> usize {
        self.num_faces
    }

    pub fn cells(&self) -> Range<usize> {
        0..self.num_cells
    }

    pub fn vertices(&self) -> Range<usize> {
        self.num_cells..self.num_cells + self.num_vertices
    }

    pub fn cell_shape(&self, cell: usize) -> CellShape {
        self.cell_shapes[cell]
    }

    /// The common cell shape, or `None` for a hybrid mesh.
    pub fn uniform_shape(&self) -> Option<CellShape> {
        let first = self.cell_shapes[0];
        self.cell_shapes
            .iter()
            .all(|&s| s == first)
            .then_some(first)
    }

    /// Position of the vertex point `p`.
    pub fn vertex_coordinates(&self, p: usize) -> &[f64] {
        let v = p - self.num_cells;
        &self.coordinates[v * self.dim..(v + 1) * self.dim]
    }

    /// Flat vertex coordinates, `dim` values per vertex in vertex order.
    pub fn coordinates(&self) -> &[f64] {
        &self.coordinates
    }

    pub fn is_vertex(&self, p: usize) -> bool {
        self.vertices().contains(&p)
    }

    fn check_point(&self, p: usize) -> Result<(), MeshError> {
        if p < self.num_points() {
            Ok(())
        } else {
            Err(MeshError::InvalidPoint {
                point: p,
                num_points: self.num_points(),
            })
        }
    }

    pub fn depth(&self, p: usize) -> usize {
        let edge_base = self.num_cells + self.num_vertices;
        if p < self.num_cells {
            self.dim
        } else if p < edge_base {
            0
        } else if p < edge_base + self.num_edges {
            1
        } else {
            2
        }
    }

    pub fn height(&self, p: usize) -> usize {
        self.dim - self.depth(p)
    }

    /// Points at distance `d` from the vertices.
    pub fn depth_stratum(&self, d: usize) -> Result<Range<usize>, MeshError> {
        let edge_base = self.num_cells + self.num_vertices;
        let face_base = edge_base + self.num_edges;
        match d {
            d if d > self.dim => Err(MeshError::StratumOutOfRange {
                value: d,
                dim: self.dim,
            }),
            d if d == self.dim => Ok(self.cells()),
            0 => Ok(self.vertices()),
            1 => Ok(edge_base..face_base),
            _ => Ok(face_base..face_base + self.num_faces),
        }
    }

    /// Points at distance `h` from the cells; height 0 is the cells.
    pub fn height_stratum(&self, h: usize) -> Result<Range<usize>, MeshError> {
        if h > self.dim {
            return Err(MeshError::StratumOutOfRange {
                value: h,
                dim: self.dim,
            });
        }
        self.depth_stratum(self.dim - h)
    }

    /// Cone points in stored boundary order.
    pub fn cone_points(&self, p: usize) -> &[usize] {
        &self.cone_points[self.cone_offsets[p]..self.cone_offsets[p + 1]]
    }

    pub fn cone_orientations(&self, p: usize) -> &[i32] {
        &self.cone_orientations[self.cone_offsets[p]..self.cone_offsets[p + 1]]
    }

    pub fn cone(&self, p: usize) -> Result<Vec<(usize, i32)>, MeshError> {
        self.check_point(p)?;
        Ok(self
            .cone_points(p)
            .iter()
            .copied()
            .zip(self.cone_orientations(p).iter().copied())
            .collect())
    }

    /// Support points in ascending order.
    pub fn support_points(&self, p: usize) -> &[usize] {
        &self.support_points[self.support_offsets[p]..self.support_offsets[p + 1]]
    }

    pub fn support(&self, p: usize) -> Result<Vec<usize>, MeshError> {
        self.check_point(p)?;
        Ok(self.support_points(p).to_vec())
    }

    /// Cone of `p` as seen by a parent traversing `p` with orientation `o`,
    /// with each child's orientation composed accordingly.
    fn oriented_cone(&self, p: usize, o: i32, out: &mut Vec<(usize, i32)>) {
        out.clear();
        let pts = self.cone_points(p);
        let ors = self.cone_orientations(p);
        let n = pts.len();
        if self.depth(p) == 1 {
            // Segment: orientation only reverses the vertex pair.
            if o < 0 {
                out.extend(pts.iter().rev().map(|&q| (q, 0)));
            } else {
                out.extend(pts.iter().map(|&q| (q, 0)));
            }
            return;
        }
        if self.depth(p) == 2 && n >= 3 {
            // Polygon: dihedral action on the edge cycle.
            let flip = |s: i32| if s < 0 { 0 } else { -1 };
            if o >= 0 {
                let r = o as usize;
                out.extend((0..n).map(|k| (pts[(r + k) % n], ors[(r + k) % n])));
            } else {
                let r = (-o - 1) as usize;
                out.extend((1..=n).map(|k| {
                    let i = (r + n * 2 - k) % n;
                    (pts[i], flip(ors[i]))
                }));
            }
            return;
        }
        out.extend(pts.iter().copied().zip(ors.iter().copied()));
    }

    /// Breadth-first transitive closure through cones. `p` comes first,
    /// duplicates keep their first occurrence.
    pub fn transitive_closure(&self, p: usize) -> Result<Vec<ClosurePoint>, MeshError> {
        self.check_point(p)?;
        Ok(self.closure_unchecked(p))
    }

    pub(crate) fn closure_unchecked(&self, p: usize) -> Vec<ClosurePoint> {
        let mut out = vec![ClosurePoint {
            point: p,
            orientation: 0,
        }];
        let mut head = 0;
        let mut children = Vec::new();
        while head < out.len() {
            let ClosurePoint { point, orientation } = out[head];
            head += 1;
            self.oriented_cone(point, orientation, &mut children);
            for &(q, o) in &children {
                if !out.iter().any(|cp| cp.point == q) {
                    out.push(ClosurePoint {
                        point: q,
                        orientation: o,
                    });
                }
            }
        }
        out
    }

    /// Cell vertices in input order, recovered from the closure.
    pub fn cell_vertices(&self, cell: usize) -> Vec<usize> {
        self.closure_unchecked(cell)
            .into_iter()
            .filter(|cp| self.is_vertex(cp.point))
            .map(|cp| cp.point - self.num_cells)
            .collect()
    }

    /// Marks points on the boundary: height-1 points with a single supporting
    /// cell, together with their closures.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.num_points()];
        let faces = self
            .height_stratum(1)
            .expect("height 1 exists for dim >= 1");
        for f in faces {
            if self.support_points(f).len() == 1 {
                for cp in self.closure_unchecked(f) {
                    mask[cp.point] = true;
                }
            }
        }
        mask
    }

    /// Reads the minimal ASCII format: a header `dim nV nC shape`, then `nV`
    /// coordinate lines, then `nC` vertex-tuple lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn read_ascii<R: BufRead>(reader: R) -> Result<Self, MeshError> {
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                lines.push((i + 1, t.to_string()));
            }
        }
        let mut it = lines.into_iter();
        let (hl, header) = it.next().ok_or(MeshError::Parse {
            line: 0,
            msg: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(MeshError::Parse {
                line: hl,
                msg: "expected `dim nV nC shape`".into(),
            });
        }
        let parse_usize = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|e| MeshError::Parse {
                line,
                msg: format!("{s:?}: {e}"),
            })
        };
        let dim = parse_usize(fields[0], hl)?;
        let nv = parse_usize(fields[1], hl)?;
        let nc = parse_usize(fields[2], hl)?;
        let shape = CellShape::from_name(fields[3]).ok_or_else(|| MeshError::Parse {
            line: hl,
            msg: format!("unknown shape {:?}", fields[3]),
        })?;
        if shape.dim() != dim {
            return Err(MeshError::Parse {
                line: hl,
                msg: format!(
                    "shape {} has dimension {}, header says {dim}",
                    shape.name(),
                    shape.dim()
                ),
            });
        }
        let mut coords = Vec::with_capacity(nv * dim);
        for _ in 0..nv {
            let (ln, l) = it.next().ok_or(MeshError::Parse {
                line: 0,
                msg: "unexpected end of input".into(),
            })?;
            let vals: Vec<f64> = l
                .split_whitespace()
                .map(|s| {
                    s.parse::<f64>().map_err(|e| MeshError::Parse {
                        line: ln,
                        msg: format!("{s:?}: {e}"),
                    })
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != dim {
                return Err(MeshError::Parse {
                    line: ln,
                    msg: format!("expected {dim} coordinates"),
                });
            }
            coords.extend(vals);
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let (ln, l) = it.next().ok_or(MeshError::Parse {
                line: 0,
                msg: "unexpected end of input".into(),
            })?;
            let verts: Vec<usize> = l
                .split_whitespace()
                .map(|s| parse_usize(s, ln))
                .collect::<Result<_, _>>()?;
            cells.push(verts);
        }
        if let Some((ln, _)) = it.next() {
            return Err(MeshError::Parse {
                line: ln,
                msg: "trailing content".into(),
            });
        }
        Self::build(shape, &cells, &coords)
    }

    /// Writes a uniform-shape mesh in the format accepted by [`read_ascii`](Self::read_ascii).
    pub fn write_ascii<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let shape = self.uniform_shape().ok_or_else(|| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidInput,
                "hybrid meshes have no single-shape header",
            )
        })?;
        writeln!(
            w,
            "{} {} {} {}",
            self.dim,
            self.num_vertices,
            self.num_cells,
            shape.name()
        )?;
        for v in self.coordinates.chunks(self.dim) {
            let s: Vec<String> = v.iter().map(|x| format!("{x:.17e}")).collect();
            writeln!(w, "{}", s.join(" "))?;
        }
        for c in self.cells() {
            let s: Vec<String> = self
                .cell_vertices(c)
                .iter()
                .map(|v| v.to_string())
                .collect();
            writeln!(w, "{}", s.join(" "))?;
        }
        Ok(())
    }
}

/// Orientation of `seen` relative to the stored triangle tuple.
fn triangle_orientation(stored: &[usize; 3], seen: &[usize; 3]) -> i32 {
    let r = stored
        .iter()
        .position(|&v| v == seen[0])
        .expect("same vertex set");
    if seen[1] == stored[(r + 1) % 3] {
        r as i32
    } else {
        -(r as i32) - 1
    }
}

/// Generators for structured meshes of the unit interval, square and cube.
pub mod generate {
    use super::{CellShape, MeshPlex};

    /// `n` equal segments on `[0, 1]`.
    pub fn unit_interval(n: usize) -> MeshPlex {
        assert!(n > 0, "need at least one cell");
        let coords: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        let cells: Vec<Vec<usize>> = (0..n).map(|i| vec![i, i + 1]).collect();
        MeshPlex::build(CellShape::Segment, &cells, &coords).expect("valid interval mesh")
    }

    fn square_vertices(n: usize) -> Vec<f64> {
        let mut coords = Vec::with_capacity(2 * (n + 1) * (n + 1));
        for j in 0..=n {
            for i in 0..=n {
                coords.extend([i as f64 / n as f64, j as f64 / n as f64]);
            }
        }
        coords
    }

    /// `2 n²` counterclockwise triangles; each square is split along the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn unit_square_tri(n: usize) -> MeshPlex {
        assert!(n > 0, "need at least one cell");
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
                cells.push(vec![a, b, c]);
                cells.push(vec![a, c, d]);
            }
        }
        MeshPlex::build(CellShape::Triangle, &cells, &square_vertices(n))
            .expect("valid triangle mesh")
    }

    /// `n²` counterclockwise quadrilaterals.
    pub fn unit_square_quad(n: usize) -> MeshPlex {
        assert!(n > 0, "need at least one cell");
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        MeshPlex::build(CellShape::Quadrilateral, &cells, &square_vertices(n))
            .expect("valid quad mesh")
    }

    /// `6 n³` positively oriented tets (Kuhn decomposition of each cube).
    pub fn unit_cube_tet(n: usize) -> MeshPlex {
        assert!(n > 0, "need at least one cell");
        let m = n + 1;
        let id = |i: usize, j: usize, k: usize| (k * m + j) * m + i;
        let mut coords = Vec::with_capacity(3 * m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    coords.extend([
                        i as f64 / n as f64,
                        j as f64 / n as f64,
                        k as f64 / n as f64,
                    ]);
                }
            }
        }
        const PERMS: [([usize; 3], bool); 6] = [
            ([0, 1, 2], true),
            ([1, 2, 0], true),
            ([2, 0, 1], true),
            ([0, 2, 1], false),
            ([2, 1, 0], false),
            ([1, 0, 2], false),
        ];
        let mut cells = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for (perm, even) in PERMS {
                        let mut p = [i, j, k];
                        let mut path = vec![id(p[0], p[1], p[2])];
                        for axis in perm {
                            p[axis] += 1;
                            path.push(id(p[0], p[1], p[2]));
                        }
                        if !even {
                            path.swap(1, 2);
                        }
                        cells.push(path);
                    }
                }
            }
        }
        MeshPlex::build(CellShape::Tetrahedron, &cells, &coords).expect("valid tet mesh")
    }
}
