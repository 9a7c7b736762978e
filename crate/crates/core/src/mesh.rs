//! Quadrilateral and triangle meshes, bisection refinement and the
//! experiment domains.

use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadFrame, Vec2};

/// An edge stored from its lower to its higher vertex id.
///
/// `cells[k] = Some((cell, local))` lists the adjacent cells with the local
/// edge index inside each; boundary edges have `cells[1] == None`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub cells: [Option<(usize, usize)>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells[1].is_none()
    }
}

/// Builds the edge table of a cell list whose local edge `i` joins local
/// vertices `i` and `i + 1`. Edges are numbered in order of first appearance.
fn build_edges<const N: usize>(
    cells: &[[usize; N]],
) -> Result<(Vec<Edge>, Vec<[usize; N]>, Vec<[f64; N]>)> {
    let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut cell_edges = Vec::with_capacity(cells.len());
    let mut signs = Vec::with_capacity(cells.len());
    for (c, cell) in cells.iter().enumerate() {
        let mut ids = [0; N];
        let mut sg = [0.0; N];
        for i in 0..N {
            let (a, b) = (cell[i], cell[(i + 1) % N]);
            if a == b {
                return Err(Error::MeshFormat(format!("cell {c} repeats vertex {a}")));
            }
            let key = (a.min(b), a.max(b));
            let id = *lookup.entry(key).or_insert_with(|| {
                edges.push(Edge {
                    vertices: [key.0, key.1],
                    cells: [None, None],
                });
                edges.len() - 1
            });
            let slot = &mut edges[id].cells;
            if slot[0].is_none() {
                slot[0] = Some((c, i));
            } else if slot[1].is_none() {
                slot[1] = Some((c, i));
            } else {
                return Err(Error::MeshFormat(format!(
                    "edge ({}, {}) shared by more than two cells",
                    key.0, key.1
                )));
            }
            ids[i] = id;
            sg[i] = if a < b { 1.0 } else { -1.0 };
        }
        cell_edges.push(ids);
        signs.push(sg);
    }
    Ok((edges, cell_edges, signs))
}

fn boundary_flags(n_vertices: usize, edges: &[Edge]) -> Vec<bool> {
    let mut flags = vec![false; n_vertices];
    for e in edges.iter().filter(|e| e.is_boundary()) {
        flags[e.vertices[0]] = true;
        flags[e.vertices[1]] = true;
    }
    flags
}

#[derive(Clone, Debug)]
pub struct QuadMesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 4]>,
    edges: Vec<Edge>,
    cell_edges: Vec<[usize; 4]>,
    cell_edge_signs: Vec<[f64; 4]>,
    frames: Vec<QuadFrame>,
    boundary_vertex: Vec<bool>,
    level: usize,
}

/// Aggregated shape statistics of a mesh.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshStats {
    /// Grid size `h = max h_K`.
    pub h: f64,
    pub max_abs_alpha: f64,
    pub max_abs_beta: f64,
    pub max_shape: f64,
    /// `max_K d_K / h_K^2`.
    pub max_gap_ratio: f64,
}

impl QuadMesh {
    /// Cells list their vertices counterclockwise; every cell must be strictly convex.
    pub fn new(vertices: Vec<Point2>, cells: Vec<[usize; 4]>) -> Result<Self> {
        Self::with_level(vertices, cells, 0)
    }

    fn with_level(vertices: Vec<Point2>, cells: Vec<[usize; 4]>, level: usize) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::MeshFormat("mesh has no cells".into()));
        }
        if let Some(bad) = cells.iter().flatten().find(|&&v| v >= vertices.len()) {
            return Err(Error::MeshFormat(format!("vertex id {bad} out of range")));
        }
        let frames = cells
            .iter()
            .map(|c| QuadFrame::from_vertices(c.map(|v| vertices[v])))
            .collect::<Result<Vec<_>>>()?;
        let (edges, cell_edges, cell_edge_signs) = build_edges(&cells)?;
        let boundary_vertex = boundary_flags(vertices.len(), &edges);
        Ok(QuadMesh {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            frames,
            boundary_vertex,
            level,
        })
    }

    /// Single-cell mesh on a convex counterclockwise quadrilateral.
    pub fn single_cell(corners: [Point2; 4]) -> Result<Self> {
        Self::new(corners.to_vec(), vec![[0, 1, 2, 3]])
    }

    /// Parallelogram grid `origin + i/nx * ex + j/ny * ey`.
    pub fn parallelogram_grid(nx: usize, ny: usize, origin: Point2, ex: Vec2, ey: Vec2) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument("grid needs at least one cell per side".into()));
        }
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(origin + ex * (i as f64 / nx as f64) + ey * (j as f64 / ny as f64));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut cells = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        Self::new(vertices, cells)
    }

    /// Uniform `n x n` grid of the unit square.
    pub fn unit_square_grid(n: usize) -> Result<Self> {
        Self::parallelogram_grid(n, n, Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0))
    }

    /// Unit square split into four convex quadrilaterals by joining the
    /// boundary-edge midpoints to the interior point `(0.5 + offset, 0.5)`.
    pub fn four_trapezoid_square(offset: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&offset) {
            return Err(Error::NonConvex {
                reason: format!("trapezoid offset {offset} outside [0, 0.5)"),
            });
        }
        let v = vec![
            Vec2::new(0.0, 0.0),
            Vec2::new(0.5, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(0.0, 0.5),
            Vec2::new(0.5 + offset, 0.5),
            Vec2::new(1.0, 0.5),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.5, 1.0),
            Vec2::new(1.0, 1.0),
        ];
        let cells = vec![[0, 1, 4, 3], [1, 2, 5, 4], [4, 5, 8, 7], [3, 4, 7, 6]];
        Self::new(v, cells)
    }

    /// Splits every cell into four through its edge midpoints and vertex
    /// centroid. Child `i` starts at parent vertex `i` and keeps the
    /// counterclockwise order.
    pub fn bisection_refine(&self) -> Result<Self> {
        let nv = self.vertices.len();
        let ne = self.edges.len();
        let mut vertices = Vec::with_capacity(nv + ne + self.cells.len());
        vertices.extend_from_slice(&self.vertices);
        vertices.extend(self.edges.iter().map(|e| {
            self.vertices[e.vertices[0]].midpoint(self.vertices[e.vertices[1]])
        }));
        vertices.extend(self.frames.iter().map(QuadFrame::center));

        let mut cells = Vec::with_capacity(4 * self.cells.len());
        for (c, cell) in self.cells.iter().enumerate() {
            let mid = |i: usize| nv + self.cell_edges[c][i % 4];
            let center = nv + ne + c;
            for i in 0..4 {
                cells.push([cell[i], mid(i), center, mid(i + 3)]);
            }
        }
        Self::with_level(vertices, cells, self.level + 1)
    }

    /// Applies [`QuadMesh::bisection_refine`] `times` times.
    pub fn refined(&self, times: usize) -> Result<Self> {
        let mut mesh = self.clone();
        for _ in 0..times {
            mesh = mesh.bisection_refine()?;
        }
        Ok(mesh)
    }

    /// Moves every interior vertex by an independent uniform offset in the
    /// square of half-width `amplitude * h^2`, keeping the connectivity.
    /// A fixed `seed` gives the same mesh on every platform.
    pub fn perturbed_interior(&self, amplitude: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let step = amplitude * self.h().powi(2);
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let d = Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if self.boundary_vertex[i] {
                    p
                } else {
                    p + d * step
                }
            })
            .collect();
        Self::with_level(vertices, self.cells.clone(), self.level)
    }

    /// Splits every quadrilateral along its `A1A3` diagonal.
    pub fn split_to_triangles(&self) -> TriMesh {
        let cells = self
            .cells
            .iter()
            .flat_map(|&[a, b, c, d]| [[a, b, c], [a, c, d]])
            .collect();
        TriMesh::new(self.vertices.clone(), cells).expect("diagonal split of a convex mesh is valid")
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn frames(&self) -> &[QuadFrame] {
        &self.frames
    }

    pub fn frame(&self, cell: usize) -> &QuadFrame {
        &self.frames[cell]
    }

    /// Global edge ids of the four local edges of `cell`.
    pub fn cell_edges(&self, cell: usize) -> [usize; 4] {
        self.cell_edges[cell]
    }

    /// `+1` when local edge `i` (counterclockwise) runs from the lower to
    /// the higher vertex id, i.e. agrees with the global orientation.
    pub fn cell_edge_signs(&self, cell: usize) -> [f64; 4] {
        self.cell_edge_signs[cell]
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> &[bool] {
        &self.boundary_vertex
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        (self.vertices[b] - self.vertices[a]).norm()
    }

    /// Unit tangent of edge `e` in its global orientation (low id to high id).
    pub fn edge_tangent(&self, e: usize) -> Vec2 {
        let [a, b] = self.edges[e].vertices;
        let d = self.vertices[b] - self.vertices[a];
        d / d.norm()
    }

    pub fn euler_characteristic(&self) -> isize {
        self.n_vertices() as isize - self.n_edges() as isize + self.n_cells() as isize
    }

    pub fn area(&self) -> f64 {
        self.frames.iter().map(QuadFrame::area).sum()
    }

    /// `h = max_K h_K`.
    pub fn h(&self) -> f64 {
        self.frames.iter().map(QuadFrame::diameter).fold(0.0, f64::max)
    }

    pub fn stats(&self) -> MeshStats {
        let mut st = MeshStats {
            h: 0.0,
            max_abs_alpha: 0.0,
            max_abs_beta: 0.0,
            max_shape: 0.0,
            max_gap_ratio: 0.0,
        };
        for f in &self.frames {
            let reg = f.regularity();
            st.h = st.h.max(reg.diameter);
            st.max_abs_alpha = st.max_abs_alpha.max(f.alpha().abs());
            st.max_abs_beta = st.max_abs_beta.max(f.beta().abs());
            st.max_shape = st.max_shape.max(reg.shape);
            st.max_gap_ratio = st.max_gap_ratio.max(reg.diagonal_gap / (reg.diameter * reg.diameter));
        }
        st
    }

    /// Writes the `.qmesh` text format: `nv ne nc`, then `x y` per vertex,
    /// then `v1 v2 v3 v4` per cell (0-based, counterclockwise).
    pub fn write_qmesh<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {} {}", self.n_vertices(), self.n_edges(), self.n_cells())?;
        for v in &self.vertices {
            writeln!(w, "{:?} {:?}", v.x, v.y)?;
        }
        for c in &self.cells {
            writeln!(w, "{} {} {} {}", c[0], c[1], c[2], c[3])?;
        }
        Ok(())
    }

    /// Reads the `.qmesh` format; edges are rebuilt and checked against the header.
    pub fn read_qmesh<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().filter(|l| l.as_ref().map_or(true, |s| !s.trim().is_empty()));
        let mut next_line = |what: &str| -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::MeshFormat(format!("unexpected end of file reading {what}")))?
                .map_err(Error::from)
        };
        let header = parse_fields::<usize>(&next_line("header")?, 3)?;
        let (nv, ne, nc) = (header[0], header[1], header[2]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let xy = parse_fields::<f64>(&next_line("vertex")?, 2)?;
            vertices.push(Vec2::new(xy[0], xy[1]));
        }
        let mut cells = Vec::with_capacity(nc);
        for _ in 0..nc {
            let c = parse_fields::<usize>(&next_line("cell")?, 4)?;
            cells.push([c[0], c[1], c[2], c[3]]);
        }
        let mesh = Self::new(vertices, cells)?;
        if mesh.n_edges() != ne {
            return Err(Error::MeshFormat(format!(
                "header declares {ne} edges but the cells define {}",
                mesh.n_edges()
            )));
        }
        Ok(mesh)
    }
}

fn parse_fields<T: std::str::FromStr>(line: &str, n: usize) -> Result<Vec<T>> {
    let fields: Vec<T> = line
        .split_whitespace()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::MeshFormat(format!("cannot parse '{t}' in line '{line}'")))
        })
        .collect::<Result<_>>()?;
    if fields.len() != n {
        return Err(Error::MeshFormat(format!("expected {n} fields in line '{line}'")));
    }
    Ok(fields)
}

/// Triangle mesh with positively oriented cells.
#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    boundary_vertex: Vec<bool>,
}

impl TriMesh {
    pub fn new(vertices: Vec<Point2>, cells: Vec<[usize; 3]>) -> Result<Self> {
        for (c, &[a, b, d]) in cells.iter().enumerate() {
            let area2 = (vertices[b] - vertices[a]).cross(vertices[d] - vertices[a]);
            if area2 <= 0.0 {
                return Err(Error::NonConvex {
                    reason: format!("triangle {c} is not positively oriented"),
                });
            }
        }
        let (edges, _, _) = build_edges(&cells)?;
        let boundary_vertex = boundary_flags(vertices.len(), &edges);
        Ok(TriMesh {
            vertices,
            cells,
            edges,
            boundary_vertex,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn cell_vertices(&self, c: usize) -> [Point2; 3] {
        self.cells[c].map(|v| self.vertices[v])
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cell_vertices(c);
        0.5 * (b - a).cross(d - a)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    pub fn h(&self) -> f64 {
        (0..self.n_cells())
            .map(|c| {
                let [a, b, d] = self.cell_vertices(c);
                (b - a).norm().max((d - b).norm()).max((a - d).norm())
            })
            .fold(0.0, f64::max)
    }
}

/// Corners of the quadrilateral domain of the Poisson benchmark.
pub const POISSON_DOMAIN: [Point2; 4] = [
    Vec2::new(0.0, 0.0),
    Vec2::new(1.0, 0.0),
    Vec2::new(2.0, 2.0),
    Vec2::new(-1.0, 1.0),
];

/// Default interior-point shift of [`QuadMesh::four_trapezoid_square`].
pub const DEFAULT_TRAPEZOID_OFFSET: f64 = 0.125;
