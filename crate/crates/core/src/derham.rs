//! Matrix form of the discrete complex `QBL -> QRT -> W`, dense exactness
//! checks and the consistency (nonconformity) functionals.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assembly::{hrot_matrix, poisson_stiffness};
use crate::elements::{QblBasis, QrtBasis};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::interpolation::{FeFunction, Space};
use crate::mesh::QuadMesh;
use crate::quadrature;
use crate::solver::{cg_solve, CgOptions};
use crate::sparse::SparseMatrix;

/// Largest total unknown count accepted by [`exactness_check`].
pub const DENSE_LIMIT: usize = 2000;
/// Singular values below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;
/// Quadrature degree of the consistency functionals.
pub const CONSISTENCY_DEGREE: usize = 10;

/// `E x V` matrix of `grad_h`: row `e` holds `-1/|e|` at its lower and
/// `+1/|e|` at its higher vertex.
pub fn gradient_matrix(mesh: &QuadMesh) -> SparseMatrix {
    let mut t = Vec::with_capacity(2 * mesh.n_edges());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let inv = 1.0 / mesh.edge_length(e);
        t.push((e, edge.vertices[0], -inv));
        t.push((e, edge.vertices[1], inv));
    }
    SparseMatrix::from_triplets(mesh.n_edges(), mesh.n_vertices(), &t)
}

/// `C x E` matrix of `rot_h`: the circulation `sign |e| / |K|` of each edge.
pub fn rot_matrix(mesh: &QuadMesh) -> SparseMatrix {
    let rows: Vec<_> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let (ids, sg) = (mesh.cell_edges(c), mesh.cell_edge_signs(c));
            [0, 1, 2, 3].map(|i| (c, ids[i], sg[i] * f.edge_length(i) / f.area()))
        })
        .collect();
    let t: Vec<_> = rows.into_iter().flatten().collect();
    SparseMatrix::from_triplets(mesh.n_cells(), mesh.n_edges(), &t)
}

/// Dimension and rank diagnostics of the discrete complex.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexReport {
    pub with_boundary_conditions: bool,
    /// `(dim V_h^QBL, dim V_h^QRT, dim W_h)` without constraints.
    pub dims: [usize; 3],
    /// Number of unconstrained vertex and edge unknowns used in the check.
    pub free_dims: [usize; 2],
    pub rank_grad: usize,
    pub rank_rot: usize,
    pub ker_grad: usize,
    pub ker_rot: usize,
    /// `max |R G| / (max |R| max |G|)`.
    pub composition_defect: f64,
    /// `ker grad_h` is the constants (or zero with boundary conditions).
    pub grad_kernel_ok: bool,
    /// `ker rot_h = im grad_h`.
    pub middle_exact: bool,
    /// `rot_h` onto `W_h` (or onto the mean-free `W_h0`).
    pub rot_onto: bool,
    /// `#edges = #vertices + #cells - 1` for the spaces used.
    pub euler_ok: bool,
}

impl ComplexReport {
    pub fn is_exact(&self) -> bool {
        self.grad_kernel_ok && self.middle_exact && self.rot_onto && self.euler_ok
    }
}

fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.singular_values();
    let smax = sv.iter().fold(0.0f64, |a, &b| a.max(b));
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * smax).count()
}

/// Dense kernel and image dimension checks for the complex on a simply
/// connected mesh, optionally with homogeneous boundary conditions on the
/// vertex and edge spaces.
pub fn exactness_check(mesh: &QuadMesh, with_boundary_conditions: bool) -> Result<ComplexReport> {
    let dims = [mesh.n_vertices(), mesh.n_edges(), mesh.n_cells()];
    let total: usize = dims.iter().sum();
    if total > DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            dofs: total,
            limit: DENSE_LIMIT,
        });
    }
    let g = gradient_matrix(mesh);
    let r = rot_matrix(mesh);
    let comp = r.mul(&g);
    let composition_defect = comp.max_abs() / (r.max_abs() * g.max_abs());

    let (verts, edges): (Vec<usize>, Vec<usize>) = if with_boundary_conditions {
        (
            (0..dims[0]).filter(|&v| !mesh.is_boundary_vertex(v)).collect(),
            (0..dims[1]).filter(|&e| !mesh.edges()[e].is_boundary()).collect(),
        )
    } else {
        ((0..dims[0]).collect(), (0..dims[1]).collect())
    };
    let cells: Vec<usize> = (0..dims[2]).collect();
    let g = g.restrict(&edges, &verts).to_dense();
    let r = r.restrict(&cells, &edges).to_dense();

    let rank_grad = numerical_rank(&g);
    let rank_rot = numerical_rank(&r);
    let ker_grad = verts.len() - rank_grad;
    let ker_rot = edges.len() - rank_rot;
    // with boundary conditions the image is the mean-free subspace
    let (ker_target, w_target) = if with_boundary_conditions {
        (0, dims[2] - 1)
    } else {
        (1, dims[2])
    };
    Ok(ComplexReport {
        with_boundary_conditions,
        dims,
        free_dims: [verts.len(), edges.len()],
        rank_grad,
        rank_rot,
        ker_grad,
        ker_rot,
        composition_defect,
        grad_kernel_ok: ker_grad == ker_target,
        middle_exact: ker_rot == rank_grad,
        rot_onto: rank_rot == w_target,
        euler_ok: edges.len() + 1 == verts.len() + dims[2],
    })
}

/// Linear endpoint interpolant of a cell's QBL function along local edge `i`,
/// evaluated at parameter `t` in [0, 1].
fn endpoint_linear(local: &[f64; 4], i: usize, t: f64) -> f64 {
    (1.0 - t) * local[i] + t * local[(i + 1) % 4]
}

/// Edge-jump form `sum_K sum_e int_e zeta . n_K (v_h|_K - q) ds`, `q` the
/// linear endpoint interpolant of `v_h` on each edge. Summing per cell over
/// both sides of an interior edge produces its jump term.
pub fn consistency_h1(mesh: &QuadMesh, zeta: &dyn VectorField, v_h: &FeFunction) -> Result<f64> {
    expect_space(v_h, Space::Qbl)?;
    let parts = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let basis = QblBasis::new(f);
            let local = v_h.local_dofs(c);
            let mut sum = 0.0;
            for i in 0..4 {
                let (a, b) = f.edge_endpoints(i);
                let n = f.edge_normal(i);
                let len = f.edge_length(i);
                for (p, w) in quadrature::segment_rule(a, b, CONSISTENCY_DEGREE)?.iter() {
                    let t = (p - a).norm() / len;
                    let jump = basis.combine(f, &local, p) - endpoint_linear(&local, i, t);
                    sum += w * zeta.value(p).dot(n) * jump;
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// Volume form `(zeta, grad_h v_h) + (div zeta, v_h) - int_{dOmega} zeta . n q ds`.
/// The boundary term vanishes for `v_h` in `V_h0`.
pub fn consistency_h1_volume(mesh: &QuadMesh, zeta: &dyn VectorField, v_h: &FeFunction) -> Result<f64> {
    expect_space(v_h, Space::Qbl)?;
    let parts = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let mut sum = 0.0;
            for (p, w) in f.quadrature(CONSISTENCY_DEGREE)?.iter() {
                sum += w * (zeta.value(p).dot(v_h.grad(c, p)) + zeta.div(p) * v_h.value(c, p));
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut boundary = 0.0;
    for c in 0..mesh.n_cells() {
        let f = mesh.frame(c);
        let local = v_h.local_dofs(c);
        for (i, &e) in mesh.cell_edges(c).iter().enumerate() {
            if !mesh.edges()[e].is_boundary() {
                continue;
            }
            let (a, b) = f.edge_endpoints(i);
            let n = f.edge_normal(i);
            let len = f.edge_length(i);
            for (p, w) in quadrature::segment_rule(a, b, CONSISTENCY_DEGREE)?.iter() {
                boundary += w * zeta.value(p).dot(n) * endpoint_linear(&local, i, (p - a).norm() / len);
            }
        }
    }
    Ok(parts.iter().sum::<f64>() - boundary)
}

/// Edge form `sum_K sum_e int_e (w - c_K)(tau_h . t - P_e(tau_h . t)) ds`
/// with `c_K` the boundary average of `w` over `dK`.
pub fn consistency_rot(mesh: &QuadMesh, w: &dyn ScalarField, tau_h: &FeFunction) -> Result<f64> {
    expect_space(tau_h, Space::Qrt)?;
    let parts = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let basis = QrtBasis::new(f);
            let local = tau_h.local_dofs(c);
            let mut rules = Vec::with_capacity(4);
            let mut w_int = 0.0;
            for i in 0..4 {
                let (a, b) = f.edge_endpoints(i);
                let rule = quadrature::segment_rule(a, b, CONSISTENCY_DEGREE)?;
                w_int += rule.integrate(|p| w.value(p));
                rules.push(rule);
            }
            let c_k = w_int / f.perimeter();
            let mut sum = 0.0;
            for (i, rule) in rules.iter().enumerate() {
                let t = f.edge_tangent(i);
                for (p, wt) in rule.iter() {
                    let trace = basis.combine(f, &local, p).dot(t);
                    sum += wt * (w.value(p) - c_k) * (trace - local[i]);
                }
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(parts.iter().sum())
}

/// Volume form `(w, rot_h tau_h) - (curl w, tau_h) - sum_{e in dOmega} D_e(tau_h) int_e w ds`,
/// with `curl w = (dw/dy, -dw/dx)`. The boundary sum vanishes for `tau_h` in `V_h0`.
pub fn consistency_rot_volume(mesh: &QuadMesh, w: &dyn ScalarField, tau_h: &FeFunction) -> Result<f64> {
    expect_space(tau_h, Space::Qrt)?;
    let parts = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let rot = tau_h.rot(c);
            let mut sum = 0.0;
            for (p, wt) in f.quadrature(CONSISTENCY_DEGREE)?.iter() {
                let g = w.grad(p);
                let curl = crate::geometry::Vec2::new(g.y, -g.x);
                sum += wt * (w.value(p) * rot - curl.dot(tau_h.vector(c, p)));
            }
            Ok(sum)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut boundary = 0.0;
    for c in 0..mesh.n_cells() {
        let f = mesh.frame(c);
        let local = tau_h.local_dofs(c);
        for (i, &e) in mesh.cell_edges(c).iter().enumerate() {
            if mesh.edges()[e].is_boundary() {
                let (a, b) = f.edge_endpoints(i);
                boundary += local[i] * quadrature::segment_rule(a, b, CONSISTENCY_DEGREE)?.integrate(|p| w.value(p));
            }
        }
    }
    Ok(parts.iter().sum::<f64>() - boundary)
}

fn expect_space(f: &FeFunction, space: Space) -> Result<()> {
    if f.space() == space {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("expected a {space:?} function, got {:?}", f.space())))
    }
}

/// `sup_{v in V_h0} E(zeta, v) / |v|_{1,h}`, computed as `sqrt(g^T A^{-1} g)`
/// with `g_v = E(zeta, phi_v)` and `A` the broken stiffness on interior vertices.
pub fn consistency_h1_dual(mesh: &QuadMesh, zeta: &dyn VectorField, opts: CgOptions) -> Result<f64> {
    let interior: Vec<usize> = (0..mesh.n_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)).collect();
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let locals = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let basis = QblBasis::new(f);
            let mut g = [0.0; 4];
            for (p, w) in f.quadrature(CONSISTENCY_DEGREE)?.iter() {
                let (z, d) = (zeta.value(p), zeta.div(p));
                let (phi, grad) = (basis.eval(f, p), basis.grad(f, p));
                for i in 0..4 {
                    g[i] += w * (z.dot(grad[i]) + d * phi[i]);
                }
            }
            Ok((mesh.cells()[c], g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![0.0; mesh.n_vertices()];
    for (ids, local) in locals {
        for i in 0..4 {
            g[ids[i]] += local[i];
        }
    }
    let a = poisson_stiffness(mesh).restrict(&interior, &interior);
    dual_norm(&a, interior.iter().map(|&v| g[v]).collect(), opts)
}

/// `sup_{tau in V_h0} E(w, tau) / ||tau||_{rot,h}`, computed as
/// `sqrt(g^T B^{-1} g)` with `B` the H(rot) matrix on interior edges.
pub fn consistency_rot_dual(mesh: &QuadMesh, w: &dyn ScalarField, opts: CgOptions) -> Result<f64> {
    let interior: Vec<usize> = (0..mesh.n_edges()).filter(|&e| !mesh.edges()[e].is_boundary()).collect();
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    let locals = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let f = mesh.frame(c);
            let basis = QrtBasis::new(f);
            let rot = basis.rot(f);
            let mut g = [0.0; 4];
            for (p, wt) in f.quadrature(CONSISTENCY_DEGREE)?.iter() {
                let (wv, gw) = (w.value(p), w.grad(p));
                let curl = crate::geometry::Vec2::new(gw.y, -gw.x);
                let phi = basis.eval(f, p);
                for i in 0..4 {
                    g[i] += wt * (wv * rot[i] - curl.dot(phi[i]));
                }
            }
            Ok((mesh.cell_edges(c), mesh.cell_edge_signs(c), g))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut g = vec![0.0; mesh.n_edges()];
    for (ids, sg, local) in locals {
        for i in 0..4 {
            g[ids[i]] += sg[i] * local[i];
        }
    }
    let b = hrot_matrix(mesh).restrict(&interior, &interior);
    dual_norm(&b, interior.iter().map(|&e| g[e]).collect(), opts)
}

fn dual_norm(a: &SparseMatrix, g: Vec<f64>, opts: CgOptions) -> Result<f64> {
    let x = cg_solve(a, &g, opts)?.x;
    Ok(x.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

/// Largest trace jump of a QBL function across interior edges, sampled at
/// Gauss points of every edge.
pub fn max_trace_jump(v_h: &FeFunction) -> Result<f64> {
    expect_space(v_h, Space::Qbl)?;
    let mesh = v_h.mesh();
    let mut worst = 0.0f64;
    for edge in mesh.edges() {
        let (Some((k1, _)), Some((k2, _))) = (edge.cells[0], edge.cells[1]) else {
            continue;
        };
        let [a, b] = edge.vertices.map(|v| mesh.vertices()[v]);
        for (p, _) in quadrature::segment_rule(a, b, 9)?.iter() {
            worst = worst.max((v_h.value(k1, p) - v_h.value(k2, p)).abs());
        }
    }
    Ok(worst)
}

/// Interior vertex whose hat function has the largest trace jump, with that
/// jump (hats have unit max norm, so the jump is already relative).
pub fn nonconformity_witness(mesh: &QuadMesh) -> Result<Option<(usize, f64)>> {
    let mut best: Option<(usize, f64)> = None;
    for v in (0..mesh.n_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)) {
        let mut dofs = vec![0.0; mesh.n_vertices()];
        dofs[v] = 1.0;
        let jump = max_trace_jump(&FeFunction::new(mesh, Space::Qbl, dofs)?)?;
        if best.is_none_or(|(_, j)| jump > j) {
            best = Some((v, jump));
        }
    }
    Ok(best)
}
