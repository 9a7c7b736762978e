//! Broken error norms against analytic solutions.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{ScalarField, VectorField};
use crate::interpolation::{FeFunction, Space};
use crate::mesh::TriMesh;
use crate::quadrature;

/// `l2 = ||u - u_h||_0`, `h1_broken = |u - u_h|_{1,h}`, `rot_semi = |.|_{rot,h}`,
/// `rot_full = ||.||_{rot,h}`. Entries that do not apply to the space are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub h1_broken: Option<f64>,
    pub rot_semi: Option<f64>,
    pub rot_full: Option<f64>,
}

#[derive(Clone, Copy)]
pub enum Exact<'a> {
    Scalar(&'a dyn ScalarField),
    Vector(&'a dyn VectorField),
}

/// Cellwise quadrature of the squared differences, summed and square-rooted.
pub fn error_norms(u_h: &FeFunction, exact: Exact<'_>, degree: usize) -> Result<ErrorNorms> {
    let mesh = u_h.mesh();
    match (u_h.space(), exact) {
        (Space::Qbl | Space::W, Exact::Scalar(u)) => {
            let with_grad = u_h.space() == Space::Qbl;
            let sums = (0..mesh.n_cells())
                .into_par_iter()
                .map(|c| {
                    let mut s = [0.0; 2];
                    for (p, w) in mesh.frame(c).quadrature(degree)?.iter() {
                        s[0] += w * (u.value(p) - u_h.value(c, p)).powi(2);
                        if with_grad {
                            s[1] += w * (u.grad(p) - u_h.grad(c, p)).norm_sq();
                        }
                    }
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let (l2, h1) = sum_pairs(&sums);
            Ok(ErrorNorms {
                l2: l2.sqrt(),
                h1_broken: with_grad.then(|| h1.sqrt()),
                ..Default::default()
            })
        }
        (Space::Qrt, Exact::Vector(sigma)) => {
            let sums = (0..mesh.n_cells())
                .into_par_iter()
                .map(|c| {
                    let rot_h = u_h.rot(c);
                    let mut s = [0.0; 2];
                    for (p, w) in mesh.frame(c).quadrature(degree)?.iter() {
                        s[0] += w * (sigma.value(p) - u_h.vector(c, p)).norm_sq();
                        s[1] += w * (sigma.rot(p) - rot_h).powi(2);
                    }
                    Ok(s)
                })
                .collect::<Result<Vec<_>>>()?;
            let (l2, rot) = sum_pairs(&sums);
            Ok(ErrorNorms {
                l2: l2.sqrt(),
                h1_broken: None,
                rot_semi: Some(rot.sqrt()),
                rot_full: Some((l2 + rot).sqrt()),
            })
        }
        (Space::Qrt, Exact::Scalar(_)) => Err(Error::FieldKindMismatch { expected: "vector" }),
        (_, Exact::Vector(_)) => Err(Error::FieldKindMismatch { expected: "scalar" }),
    }
}

/// Errors of a Courant P1 function given by its vertex values.
pub fn p1_error_norms(tri: &TriMesh, dofs: &[f64], u: &dyn ScalarField, degree: usize) -> Result<ErrorNorms> {
    if dofs.len() != tri.n_vertices() {
        return Err(Error::InvalidArgument(format!(
            "P1 function needs {} values, got {}",
            tri.n_vertices(),
            dofs.len()
        )));
    }
    let sums = (0..tri.n_cells())
        .into_par_iter()
        .map(|c| {
            let ids = tri.cells()[c];
            let [p0, p1, p2] = tri.cell_vertices(c);
            let area2 = (p1 - p0).cross(p2 - p0);
            let [u0, u1, u2] = ids.map(|v| dofs[v]);
            // affine u_h = u0 + l1 (u1 - u0) + l2 (u2 - u0)
            let e1 = p1 - p0;
            let e2 = p2 - p0;
            let grad = (crate::geometry::Vec2::new(e2.y, -e2.x) * (u1 - u0)
                + crate::geometry::Vec2::new(-e1.y, e1.x) * (u2 - u0))
                / area2;
            let mut s = [0.0; 2];
            for (p, w) in quadrature::triangle_rule(p0, p1, p2, degree)?.iter() {
                let uh = u0 + grad.dot(p - p0);
                s[0] += w * (u.value(p) - uh).powi(2);
                s[1] += w * (u.grad(p) - grad).norm_sq();
            }
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;
    let (l2, h1) = sum_pairs(&sums);
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1_broken: Some(h1.sqrt()),
        ..Default::default()
    })
}

fn sum_pairs(s: &[[f64; 2]]) -> (f64, f64) {
    s.iter().fold((0.0, 0.0), |(a, b), x| (a + x[0], b + x[1]))
}
