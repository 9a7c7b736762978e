//! Element matrices, global assembly and Dirichlet elimination for the
//! H1 (QBL, Courant P1) and H(rot) (QRT) model problems.

use rayon::prelude::*;

use crate::elements::{QblBasis, QrtBasis};
use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadFrame, Vec2};
use crate::mesh::{QuadMesh, TriMesh};
use crate::quadrature;
use crate::solver::{cg_solve, CgOptions, CgResult};
use crate::sparse::SparseMatrix;

/// Quadrature degree for loads and error norms.
pub const LOAD_DEGREE: usize = 10;
/// Relative tolerance of the symmetry flag on assembled matrices.
pub const SYMMETRY_TOL: f64 = 1e-13;

/// `int_K grad phi_i . grad phi_j`; the integrand has degree 2 in `(xi, eta)`.
pub fn qbl_element_stiffness(frame: &QuadFrame) -> [[f64; 4]; 4] {
    let basis = QblBasis::new(frame);
    let rule = frame.quadrature(2).expect("degree 2 is supported");
    let mut k = [[0.0; 4]; 4];
    for (p, w) in rule.iter() {
        let g = basis.grad(frame, p);
        for i in 0..4 {
            for j in 0..4 {
                k[i][j] += w * g[i].dot(g[j]);
            }
        }
    }
    symmetrize(k)
}

/// `int_K phi_i phi_j`, exact with a degree-4 rule.
pub fn qbl_element_mass(frame: &QuadFrame) -> [[f64; 4]; 4] {
    let basis = QblBasis::new(frame);
    let rule = frame.quadrature(4).expect("degree 4 is supported");
    let mut m = [[0.0; 4]; 4];
    for (p, w) in rule.iter() {
        let v = basis.eval(frame, p);
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += w * v[i] * v[j];
            }
        }
    }
    symmetrize(m)
}

/// `int_K phi_i . phi_j` for the QRT basis (linear fields, degree 2).
pub fn qrt_element_mass(frame: &QuadFrame) -> [[f64; 4]; 4] {
    let basis = QrtBasis::new(frame);
    let rule = frame.quadrature(2).expect("degree 2 is supported");
    let mut m = [[0.0; 4]; 4];
    for (p, w) in rule.iter() {
        let v = basis.eval(frame, p);
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] += w * v[i].dot(v[j]);
            }
        }
    }
    symmetrize(m)
}

/// `|K| rot phi_i rot phi_j`; rank one since rot is constant on the cell.
pub fn qrt_element_rotrot(frame: &QuadFrame) -> [[f64; 4]; 4] {
    let r = QrtBasis::new(frame).rot(frame);
    let a = frame.area();
    let mut m = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            m[i][j] = a * r[i] * r[j];
        }
    }
    m
}

/// `int_K rot phi_i rot phi_j + phi_i . phi_j`.
pub fn qrt_element_matrix(frame: &QuadFrame) -> [[f64; 4]; 4] {
    let (m, r) = (qrt_element_mass(frame), qrt_element_rotrot(frame));
    let mut out = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = m[i][j] + r[i][j];
        }
    }
    out
}

/// Linear triangle stiffness `|T| grad l_i . grad l_j`.
pub fn p1_element_stiffness(t: [Point2; 3]) -> [[f64; 3]; 3] {
    let area2 = (t[1] - t[0]).cross(t[2] - t[0]);
    // grad l_i = (opposite edge)^perp / (2|T|), pointing into the triangle
    let g = [0, 1, 2].map(|i| {
        let e = t[(i + 2) % 3] - t[(i + 1) % 3];
        Vec2::new(-e.y, e.x) / area2
    });
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = 0.5 * area2 * g[i].dot(g[j]);
        }
    }
    k
}

fn symmetrize<const N: usize>(mut m: [[f64; N]; N]) -> [[f64; N]; N] {
    for i in 0..N {
        for j in 0..i {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
    m
}

/// Scatters per-cell matrices in cell order; `signs` flips rows and columns
/// of oriented (edge) unknowns.
fn scatter<const N: usize>(n: usize, locals: &[([usize; N], [f64; N], [[f64; N]; N])]) -> SparseMatrix {
    let mut t = Vec::with_capacity(locals.len() * N * N);
    for (ids, sg, m) in locals {
        for i in 0..N {
            for j in 0..N {
                t.push((ids[i], ids[j], sg[i] * sg[j] * m[i][j]));
            }
        }
    }
    let mut a = SparseMatrix::from_triplets(n, n, &t);
    a.check_symmetry(SYMMETRY_TOL);
    a
}

fn scatter_vec<const N: usize>(n: usize, locals: &[([usize; N], [f64; N], [f64; N])]) -> Vec<f64> {
    let mut b = vec![0.0; n];
    for (ids, sg, v) in locals {
        for i in 0..N {
            b[ids[i]] += sg[i] * v[i];
        }
    }
    b
}

/// Global broken stiffness `sum_K int_K grad u . grad v` on all vertices.
pub fn poisson_stiffness(mesh: &QuadMesh) -> SparseMatrix {
    let locals: Vec<_> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| (mesh.cells()[c], [1.0; 4], qbl_element_stiffness(mesh.frame(c))))
        .collect();
    scatter(mesh.n_vertices(), &locals)
}

pub fn assemble_mass_qbl(mesh: &QuadMesh) -> SparseMatrix {
    let locals: Vec<_> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| (mesh.cells()[c], [1.0; 4], qbl_element_mass(mesh.frame(c))))
        .collect();
    scatter(mesh.n_vertices(), &locals)
}

/// Global `sum_K int_K rot s rot t + s . t` on all edges.
pub fn hrot_matrix(mesh: &QuadMesh) -> SparseMatrix {
    let locals: Vec<_> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            (
                mesh.cell_edges(c),
                mesh.cell_edge_signs(c),
                qrt_element_matrix(mesh.frame(c)),
            )
        })
        .collect();
    scatter(mesh.n_edges(), &locals)
}

/// `int f phi_v` for every vertex.
pub fn qbl_load(mesh: &QuadMesh, f: impl Fn(Point2) -> f64 + Sync, degree: usize) -> Result<Vec<f64>> {
    let locals = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let frame = mesh.frame(c);
            let basis = QblBasis::new(frame);
            let mut v = [0.0; 4];
            for (p, w) in frame.quadrature(degree)?.iter() {
                let fv = f(p);
                let phi = basis.eval(frame, p);
                for i in 0..4 {
                    v[i] += w * fv * phi[i];
                }
            }
            Ok((mesh.cells()[c], [1.0; 4], v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scatter_vec(mesh.n_vertices(), &locals))
}

/// `int f . phi_e` for every edge.
pub fn qrt_load(mesh: &QuadMesh, f: impl Fn(Point2) -> Vec2 + Sync, degree: usize) -> Result<Vec<f64>> {
    let locals = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let frame = mesh.frame(c);
            let basis = QrtBasis::new(frame);
            let mut v = [0.0; 4];
            for (p, w) in frame.quadrature(degree)?.iter() {
                let fv = f(p);
                let phi = basis.eval(frame, p);
                for i in 0..4 {
                    v[i] += w * fv.dot(phi[i]);
                }
            }
            Ok((mesh.cell_edges(c), mesh.cell_edge_signs(c), v))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(scatter_vec(mesh.n_edges(), &locals))
}

/// Linear system on the free unknowns after symmetric elimination of the
/// constrained ones.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: SparseMatrix,
    pub rhs: Vec<f64>,
    /// Global ids of the free unknowns, in matrix order.
    pub free: Vec<usize>,
    /// Global ids and prescribed values of the constrained unknowns.
    pub constrained: Vec<(usize, f64)>,
    pub n_dofs: usize,
}

impl SparseSystem {
    /// Removes constrained rows and columns of `a` and moves their known
    /// values to the right-hand side.
    pub fn from_global(a: &SparseMatrix, rhs: &[f64], constrained: Vec<(usize, f64)>) -> Result<Self> {
        let n = a.nrows();
        let mut is_fixed = vec![false; n];
        let mut values = vec![0.0; n];
        for &(i, v) in &constrained {
            is_fixed[i] = true;
            values[i] = v;
        }
        let free: Vec<usize> = (0..n).filter(|&i| !is_fixed[i]).collect();
        if free.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let lifted = a.matvec(&values);
        let rhs = free.iter().map(|&i| rhs[i] - lifted[i]).collect();
        let mut matrix = a.restrict(&free, &free);
        matrix.check_symmetry(SYMMETRY_TOL);
        Ok(SparseSystem {
            matrix,
            rhs,
            free,
            constrained,
            n_dofs: n,
        })
    }

    /// Global vector from free values plus the constrained ones.
    pub fn expand(&self, free_values: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs];
        for &(i, v) in &self.constrained {
            x[i] = v;
        }
        for (&i, &v) in self.free.iter().zip(free_values) {
            x[i] = v;
        }
        x
    }

    /// Solves by Jacobi-preconditioned CG; returns the global vector.
    pub fn solve(&self, opts: CgOptions) -> Result<(Vec<f64>, CgResult)> {
        let r = cg_solve(&self.matrix, &self.rhs, opts)?;
        Ok((self.expand(&r.x), r))
    }
}

fn zero_on(ids: impl Iterator<Item = usize>) -> Vec<(usize, f64)> {
    ids.map(|i| (i, 0.0)).collect()
}

/// QBL discretisation of `-Laplace u = f`, `u = 0` on the boundary.
pub fn assemble_poisson(
    mesh: &QuadMesh,
    f: impl Fn(Point2) -> f64 + Sync,
    degree: usize,
) -> Result<SparseSystem> {
    let a = poisson_stiffness(mesh);
    let b = qbl_load(mesh, f, degree)?;
    let fixed = zero_on((0..mesh.n_vertices()).filter(|&v| mesh.is_boundary_vertex(v)));
    SparseSystem::from_global(&a, &b, fixed)
}

/// QRT discretisation of `curl rot s + s = f`, zero tangential trace.
pub fn assemble_hrot(
    mesh: &QuadMesh,
    f: impl Fn(Point2) -> Vec2 + Sync,
    degree: usize,
) -> Result<SparseSystem> {
    let a = hrot_matrix(mesh);
    let b = qrt_load(mesh, f, degree)?;
    let fixed = zero_on((0..mesh.n_edges()).filter(|&e| mesh.edges()[e].is_boundary()));
    SparseSystem::from_global(&a, &b, fixed)
}

pub fn courant_stiffness(tri: &TriMesh) -> SparseMatrix {
    let locals: Vec<_> = (0..tri.n_cells())
        .into_par_iter()
        .map(|c| (tri.cells()[c], [1.0; 3], p1_element_stiffness(tri.cell_vertices(c))))
        .collect();
    scatter(tri.n_vertices(), &locals)
}

/// Consistent P1 mass `|T| / 12 (1 + delta_ij)`.
pub fn courant_mass(tri: &TriMesh) -> SparseMatrix {
    let locals: Vec<_> = (0..tri.n_cells())
        .into_par_iter()
        .map(|c| {
            let a = tri.cell_area(c) / 12.0;
            let mut m = [[a; 3]; 3];
            for (i, row) in m.iter_mut().enumerate() {
                row[i] = 2.0 * a;
            }
            (tri.cells()[c], [1.0; 3], m)
        })
        .collect();
    scatter(tri.n_vertices(), &locals)
}

/// Courant P1 discretisation of `-Laplace u = f`, `u = 0` on the boundary.
pub fn assemble_courant(
    tri: &TriMesh,
    f: impl Fn(Point2) -> f64 + Sync,
    degree: usize,
) -> Result<SparseSystem> {
    let a = courant_stiffness(tri);
    let locals = (0..tri.n_cells())
        .into_par_iter()
        .map(|c| {
            let [p0, p1, p2] = tri.cell_vertices(c);
            let area2 = (p1 - p0).cross(p2 - p0);
            let mut v = [0.0; 3];
            for (p, w) in quadrature::triangle_rule(p0, p1, p2, degree)?.iter() {
                let l1 = (p - p0).cross(p2 - p0) / area2;
                let l2 = (p1 - p0).cross(p - p0) / area2;
                let lam = [1.0 - l1 - l2, l1, l2];
                let fv = f(p);
                for i in 0..3 {
                    v[i] += w * fv * lam[i];
                }
            }
            Ok((tri.cells()[c], [1.0; 3], v))
        })
        .collect::<Result<Vec<_>>>()?;
    let b = scatter_vec(tri.n_vertices(), &locals);
    let fixed = zero_on((0..tri.n_vertices()).filter(|&v| tri.is_boundary_vertex(v)));
    SparseSystem::from_global(&a, &b, fixed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn square(h: f64) -> QuadFrame {
        QuadFrame::from_vertices([
            Vec2::new(0.0, 0.0),
            Vec2::new(h, 0.0),
            Vec2::new(h, h),
            Vec2::new(0.0, h),
        ])
        .unwrap()
    }

    #[test]
    fn bilinear_mass_on_square() {
        let h = 0.5;
        let m = qbl_element_mass(&square(h));
        let reference = [
            [4.0, 2.0, 1.0, 2.0],
            [2.0, 4.0, 2.0, 1.0],
            [1.0, 2.0, 4.0, 2.0],
            [2.0, 1.0, 2.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(m[i][j], h * h / 36.0 * reference[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn bilinear_stiffness_on_square() {
        // classical Q1 stiffness, scale invariant in 2D
        let k = qbl_element_stiffness(&square(0.3));
        let reference = [
            [4.0, -1.0, -2.0, -1.0],
            [-1.0, 4.0, -1.0, -2.0],
            [-2.0, -1.0, 4.0, -1.0],
            [-1.0, -2.0, -1.0, 4.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_relative_eq!(k[i][j], reference[i][j] / 6.0, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_rows_sum_to_zero_on_skewed_cell() {
        let f = QuadFrame::from_vertices([
            Vec2::new(3.0, 2.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
        ])
        .unwrap();
        for row in qbl_element_stiffness(&f) {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn p1_reference_triangle() {
        let k = p1_element_stiffness([Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]);
        let reference = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(k[i][j], reference[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn rotrot_has_rank_one() {
        let m = qrt_element_rotrot(&square(1.0));
        let d = nalgebra::Matrix4::from_fn(|i, j| m[i][j]);
        let sv = d.singular_values();
        let mut s: Vec<f64> = sv.iter().copied().collect();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert!(s[0] > 0.1);
        assert!(s[1] < 1e-14 * s[0]);
    }

    #[test]
    fn total_mass_is_area() {
        let mesh = QuadMesh::four_trapezoid_square(0.125).unwrap().refined(1).unwrap();
        let m = assemble_mass_qbl(&mesh);
        let total: f64 = m.iter().map(|(_, _, v)| v).sum();
        assert_relative_eq!(total, 1.0, epsilon = 1e-13);
        assert!(m.is_symmetric_flagged());
    }

    #[test]
    fn elimination_keeps_symmetry_and_lifts_values() {
        let mesh = QuadMesh::unit_square_grid(3).unwrap();
        let a = poisson_stiffness(&mesh);
        let n = mesh.n_vertices();
        // u = x is discretely harmonic: boundary data reproduces it
        let fixed: Vec<_> = (0..n)
            .filter(|&v| mesh.is_boundary_vertex(v))
            .map(|v| (v, mesh.vertices()[v].x))
            .collect();
        let sys = SparseSystem::from_global(&a, &vec![0.0; n], fixed).unwrap();
        assert!(sys.matrix.is_symmetric_flagged());
        let (x, _) = sys.solve(CgOptions::default()).unwrap();
        for (v, p) in mesh.vertices().iter().enumerate() {
            assert!((x[v] - p.x).abs() < 1e-10);
        }
    }

    #[test]
    fn all_constrained_is_empty_interior() {
        let mesh = QuadMesh::unit_square_grid(1).unwrap();
        assert!(matches!(assemble_poisson(&mesh, |_| 1.0, 4), Err(Error::EmptyInterior)));
        assert!(matches!(assemble_hrot(&mesh, |_| Vec2::ZERO, 4), Err(Error::EmptyInterior)));
    }
}
