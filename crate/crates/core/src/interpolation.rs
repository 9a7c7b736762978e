//! Global finite element functions and the canonical interpolants
//! `J_h` (vertex values), `Pi_h` (edge tangential averages) and `P_h`
//! (cell averages).

use rayon::prelude::*;

use crate::derham;
use crate::elements::{QblBasis, QrtBasis};
use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::geometry::{Point2, Vec2};
use crate::mesh::QuadMesh;
use crate::quadrature;

/// Quadrature degree used by the interpolants for edge and cell averages.
pub const INTERP_DEGREE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    /// Vertex-valued scalar space.
    Qbl,
    /// Edge-valued vector space, one tangential average per global edge.
    Qrt,
    /// Piecewise constants.
    W,
}

impl Space {
    pub fn dimension(self, mesh: &QuadMesh) -> usize {
        match self {
            Space::Qbl => mesh.n_vertices(),
            Space::Qrt => mesh.n_edges(),
            Space::W => mesh.n_cells(),
        }
    }
}

/// Coefficient vector of one of the three spaces on a mesh.
#[derive(Clone, Debug)]
pub struct FeFunction<'m> {
    mesh: &'m QuadMesh,
    space: Space,
    dofs: Vec<f64>,
}

impl<'m> FeFunction<'m> {
    pub fn new(mesh: &'m QuadMesh, space: Space, dofs: Vec<f64>) -> Result<Self> {
        let n = space.dimension(mesh);
        if dofs.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{space:?} on this mesh has {n} degrees of freedom, got {}",
                dofs.len()
            )));
        }
        Ok(FeFunction { mesh, space, dofs })
    }

    pub fn zero(mesh: &'m QuadMesh, space: Space) -> Self {
        FeFunction {
            mesh,
            space,
            dofs: vec![0.0; space.dimension(mesh)],
        }
    }

    pub fn mesh(&self) -> &'m QuadMesh {
        self.mesh
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn dofs(&self) -> &[f64] {
        &self.dofs
    }

    pub fn into_dofs(self) -> Vec<f64> {
        self.dofs
    }

    /// Local coefficients on `cell`: vertex values for QBL, tangential
    /// averages along the counterclockwise local tangents for QRT.
    pub fn local_dofs(&self, cell: usize) -> [f64; 4] {
        match self.space {
            Space::Qbl => self.mesh.cells()[cell].map(|v| self.dofs[v]),
            Space::Qrt => {
                let ids = self.mesh.cell_edges(cell);
                let sg = self.mesh.cell_edge_signs(cell);
                [0, 1, 2, 3].map(|i| sg[i] * self.dofs[ids[i]])
            }
            Space::W => [self.dofs[cell]; 4],
        }
    }

    /// Scalar value on `cell` at `p` (QBL and W).
    pub fn value(&self, cell: usize, p: Point2) -> f64 {
        match self.space {
            Space::Qbl => {
                let frame = self.mesh.frame(cell);
                QblBasis::new(frame).combine(frame, &self.local_dofs(cell), p)
            }
            Space::W => self.dofs[cell],
            Space::Qrt => panic!("value() on a vector-valued function"),
        }
    }

    /// Broken gradient on `cell` (QBL; zero for W).
    pub fn grad(&self, cell: usize, p: Point2) -> Vec2 {
        match self.space {
            Space::Qbl => {
                let frame = self.mesh.frame(cell);
                QblBasis::new(frame).combine_grad(frame, &self.local_dofs(cell), p)
            }
            Space::W => Vec2::ZERO,
            Space::Qrt => panic!("grad() on a vector-valued function"),
        }
    }

    /// Vector value on `cell` at `p` (QRT).
    pub fn vector(&self, cell: usize, p: Point2) -> Vec2 {
        assert_eq!(self.space, Space::Qrt, "vector() on a scalar function");
        let frame = self.mesh.frame(cell);
        QrtBasis::new(frame).combine(frame, &self.local_dofs(cell), p)
    }

    /// Constant broken rot on `cell` (QRT).
    pub fn rot(&self, cell: usize) -> f64 {
        assert_eq!(self.space, Space::Qrt, "rot() on a scalar function");
        let frame = self.mesh.frame(cell);
        QrtBasis::new(frame).combine_rot(frame, &self.local_dofs(cell))
    }

    /// `grad_h` as a QRT function; exact since the gradient of a QBL function
    /// lies in the QRT space.
    pub fn grad_h(&self) -> Result<FeFunction<'m>> {
        self.expect(Space::Qbl)?;
        let g = derham::gradient_matrix(self.mesh);
        FeFunction::new(self.mesh, Space::Qrt, g.matvec(&self.dofs))
    }

    /// `rot_h` as a piecewise constant.
    pub fn rot_h(&self) -> Result<FeFunction<'m>> {
        self.expect(Space::Qrt)?;
        let r = derham::rot_matrix(self.mesh);
        FeFunction::new(self.mesh, Space::W, r.matvec(&self.dofs))
    }

    fn expect(&self, space: Space) -> Result<()> {
        if self.space == space {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("expected a {space:?} function, got {:?}", self.space)))
        }
    }
}

/// `J_h u`: vertex values.
pub fn interp_qbl<'m>(mesh: &'m QuadMesh, u: impl Fn(Point2) -> f64) -> FeFunction<'m> {
    let dofs = mesh.vertices().iter().map(|&p| u(p)).collect();
    FeFunction {
        mesh,
        space: Space::Qbl,
        dofs,
    }
}

/// `Pi_h sigma`: tangential averages along the global edge orientation.
pub fn interp_qrt<'m>(
    mesh: &'m QuadMesh,
    sigma: impl Fn(Point2) -> Vec2 + Sync,
    degree: usize,
) -> Result<FeFunction<'m>> {
    let dofs = (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            let [a, b] = mesh.edges()[e].vertices;
            let (p, q) = (mesh.vertices()[a], mesh.vertices()[b]);
            let t = mesh.edge_tangent(e);
            let rule = quadrature::segment_rule(p, q, degree)?;
            Ok(rule.integrate(|x| sigma(x).dot(t)) / mesh.edge_length(e))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FeFunction {
        mesh,
        space: Space::Qrt,
        dofs,
    })
}

/// `P_h q`: cell averages.
pub fn interp_const<'m>(
    mesh: &'m QuadMesh,
    q: impl Fn(Point2) -> f64 + Sync,
    degree: usize,
) -> Result<FeFunction<'m>> {
    let dofs = mesh
        .frames()
        .par_iter()
        .map(|f| Ok(f.quadrature(degree)?.integrate(&q) / f.area()))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FeFunction {
        mesh,
        space: Space::W,
        dofs,
    })
}

/// Relative defects of the two commuting squares
/// `grad_h J_h = Pi_h grad` and `rot_h Pi_h = P_h rot`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommutativityReport {
    /// `max_e |(G J_h u)_e - (Pi_h grad u)_e| / max_e |(Pi_h grad u)_e|`.
    pub grad_dofs: f64,
    /// Same defect measured pointwise at interior quadrature points of every cell.
    pub grad_pointwise: f64,
    /// `max_K |rot_h Pi_h sigma - P_h rot sigma| / max_K S_K`, where `S_K` is
    /// the sum of the absolute circulation terms `|e| |D_e(sigma)| / |K|`.
    pub rot_cells: f64,
}

impl CommutativityReport {
    pub fn max(&self) -> f64 {
        self.grad_dofs.max(self.grad_pointwise).max(self.rot_cells)
    }
}

pub fn commutativity_residual(
    mesh: &QuadMesh,
    u: &dyn ScalarField,
    sigma: &dyn VectorField,
    degree: usize,
) -> Result<CommutativityReport> {
    let ju = interp_qbl(mesh, |p| u.value(p));
    let pi_grad = interp_qrt(mesh, |p| u.grad(p), degree)?;
    let g_ju = ju.grad_h()?;

    let scale = pi_grad.dofs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let safe = |s: f64| if s > 0.0 { s } else { 1.0 };
    let grad_dofs = g_ju
        .dofs
        .iter()
        .zip(&pi_grad.dofs)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
        / safe(scale);

    let mut pointwise = 0.0f64;
    let mut pw_scale = 0.0f64;
    for c in 0..mesh.n_cells() {
        for (p, _) in mesh.frame(c).quadrature(2)?.iter() {
            let a = ju.grad(c, p);
            let b = pi_grad.vector(c, p);
            pointwise = pointwise.max((a - b).norm());
            pw_scale = pw_scale.max(b.norm());
        }
    }

    let pi_sigma = interp_qrt(mesh, |p| sigma.value(p), degree)?;
    let rot_pi = pi_sigma.rot_h()?;
    let p_rot = interp_const(mesh, |p| sigma.rot(p), degree)?;
    let mut rot_defect = 0.0f64;
    let mut rot_scale = 0.0f64;
    for c in 0..mesh.n_cells() {
        rot_defect = rot_defect.max((rot_pi.dofs[c] - p_rot.dofs[c]).abs());
        let f = mesh.frame(c);
        let local = pi_sigma.local_dofs(c);
        let s: f64 = (0..4).map(|i| f.edge_length(i) * local[i].abs()).sum::<f64>() / f.area();
        rot_scale = rot_scale.max(s);
    }

    Ok(CommutativityReport {
        grad_dofs,
        grad_pointwise: pointwise / safe(pw_scale),
        rot_cells: rot_defect / safe(rot_scale),
    })
}
