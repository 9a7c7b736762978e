//! Local bases of the QBL (`span{1, xi, eta, xi eta}`, vertex values) and
//! QRT (`span{grad xi, grad eta, xi grad eta, eta grad xi}`, tangential
//! edge averages) elements, in closed form.

use crate::error::{Error, Result};
use crate::geometry::{Point2, QuadFrame, Vec2};
use crate::quadrature;

/// Gauss degree for edge degrees of freedom (4 points, exact to degree 7).
pub const EDGE_DOF_DEGREE: usize = 7;

/// Nodal basis `phi_i = c[i][0] xi eta + c[i][1] xi + c[i][2] eta + c[i][3]`
/// with `phi_i(A_j) = delta_ij`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QblBasis {
    pub coeffs: [[f64; 4]; 4],
}

impl QblBasis {
    pub fn new(frame: &QuadFrame) -> Self {
        let (a, b) = (frame.alpha(), frame.beta());
        let d = 4.0 * (a * a + b * b - 1.0);
        let coeffs = [
            [
                (a + b - 1.0) / d,
                (b - 1.0) * (-a + b + 1.0) / d,
                (a - 1.0) * (a - b + 1.0) / d,
                -(a - 1.0) * (b - 1.0) * (a + b + 1.0) / d,
            ],
            [
                (-a + b + 1.0) / d,
                -(b + 1.0) * (a + b - 1.0) / d,
                (a - 1.0) * (a + b + 1.0) / d,
                (a - 1.0) * (b + 1.0) * (a - b + 1.0) / d,
            ],
            [
                -(a + b + 1.0) / d,
                (b + 1.0) * (a - b + 1.0) / d,
                (a + 1.0) * (-a + b + 1.0) / d,
                (a + 1.0) * (b + 1.0) * (a + b - 1.0) / d,
            ],
            [
                (a - b + 1.0) / d,
                (b - 1.0) * (a + b + 1.0) / d,
                -(a + 1.0) * (a + b - 1.0) / d,
                (a + 1.0) * (b - 1.0) * (-a + b + 1.0) / d,
            ],
        ];
        QblBasis { coeffs }
    }

    /// Values of the four basis functions at frame coordinates `(xi, eta)`.
    pub fn eval_local(&self, xi: f64, eta: f64) -> [f64; 4] {
        self.coeffs.map(|c| c[0] * xi * eta + c[1] * xi + c[2] * eta + c[3])
    }

    pub fn eval(&self, frame: &QuadFrame, p: Point2) -> [f64; 4] {
        let (xi, eta) = frame.xi_eta(p);
        self.eval_local(xi, eta)
    }

    /// `grad phi_i = (c0 eta + c1) grad xi + (c0 xi + c2) grad eta`.
    pub fn grad(&self, frame: &QuadFrame, p: Point2) -> [Vec2; 4] {
        let (xi, eta) = frame.xi_eta(p);
        let (gx, ge) = (frame.grad_xi(), frame.grad_eta());
        self.coeffs
            .map(|c| gx * (c[0] * eta + c[1]) + ge * (c[0] * xi + c[2]))
    }

    /// Value of `sum_i dofs[i] phi_i` at `p`.
    pub fn combine(&self, frame: &QuadFrame, dofs: &[f64; 4], p: Point2) -> f64 {
        self.eval(frame, p).iter().zip(dofs).map(|(v, d)| v * d).sum()
    }

    pub fn combine_grad(&self, frame: &QuadFrame, dofs: &[f64; 4], p: Point2) -> Vec2 {
        self.grad(frame, p)
            .iter()
            .zip(dofs)
            .fold(Vec2::ZERO, |acc, (g, d)| acc + *g * *d)
    }
}

/// Dual basis `phi_i = d[i][0] grad xi + d[i][1] grad eta + d[i][2] xi grad eta
/// + d[i][3] eta grad xi` with unit tangential average on edge `i` only.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QrtBasis {
    pub coeffs: [[f64; 4]; 4],
}

impl QrtBasis {
    pub fn new(frame: &QuadFrame) -> Self {
        let (a, b) = (frame.alpha(), frame.beta());
        let d = 4.0 * (a * a + b * b - 1.0);
        let l = frame.edge_lengths();
        let row = |c: [f64; 4], len: f64| c.map(|x| x * len / d);
        let coeffs = [
            row(
                [
                    (1.0 - a) * (1.0 - b * b),
                    a * (1.0 - a) * b,
                    -a * (1.0 - a),
                    1.0 - a - b * b,
                ],
                l[0],
            ),
            row(
                [
                    a * b * (1.0 + b),
                    (1.0 - a * a) * (1.0 + b),
                    -(1.0 - a * a + b),
                    -b * (1.0 + b),
                ],
                l[1],
            ),
            row(
                [
                    -(1.0 + a) * (1.0 - b * b),
                    -a * (1.0 + a) * b,
                    a * (1.0 + a),
                    1.0 + a - b * b,
                ],
                l[2],
            ),
            row(
                [
                    -a * b * (1.0 - b),
                    -(1.0 - a * a) * (1.0 - b),
                    -(1.0 - a * a - b),
                    b * (1.0 - b),
                ],
                l[3],
            ),
        ];
        QrtBasis { coeffs }
    }

    pub fn eval_local(&self, frame: &QuadFrame, xi: f64, eta: f64) -> [Vec2; 4] {
        let (gx, ge) = (frame.grad_xi(), frame.grad_eta());
        self.coeffs
            .map(|c| gx * (c[0] + c[3] * eta) + ge * (c[1] + c[2] * xi))
    }

    pub fn eval(&self, frame: &QuadFrame, p: Point2) -> [Vec2; 4] {
        let (xi, eta) = frame.xi_eta(p);
        self.eval_local(frame, xi, eta)
    }

    /// Constant `rot phi_i = (d_i2 - d_i3) / (r x s)`.
    pub fn rot(&self, frame: &QuadFrame) -> [f64; 4] {
        self.coeffs.map(|c| (c[2] - c[3]) / frame.cross_rs())
    }

    pub fn combine(&self, frame: &QuadFrame, dofs: &[f64; 4], p: Point2) -> Vec2 {
        self.eval(frame, p)
            .iter()
            .zip(dofs)
            .fold(Vec2::ZERO, |acc, (v, d)| acc + *v * *d)
    }

    pub fn combine_rot(&self, frame: &QuadFrame, dofs: &[f64; 4]) -> f64 {
        self.rot(frame).iter().zip(dofs).map(|(r, d)| r * d).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DofKind {
    /// `u(A_i)`.
    Vertex,
    /// `(1/|e_i|) int_{e_i} sigma . t_i ds` with the counterclockwise tangent.
    EdgeTangential,
    /// `(1/|K|) int_K q dx`.
    CellAverage,
}

/// One local degree of freedom; `site` is the local vertex or edge index
/// (ignored for cell averages).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DofFunctional {
    pub kind: DofKind,
    pub site: usize,
}

/// A field handed to a degree of freedom.
#[derive(Clone, Copy)]
pub enum Field<'a> {
    Scalar(&'a dyn Fn(Point2) -> f64),
    Vector(&'a dyn Fn(Point2) -> Vec2),
}

impl DofFunctional {
    pub fn vertex(i: usize) -> Self {
        DofFunctional {
            kind: DofKind::Vertex,
            site: i,
        }
    }

    pub fn edge(i: usize) -> Self {
        DofFunctional {
            kind: DofKind::EdgeTangential,
            site: i,
        }
    }

    pub fn cell() -> Self {
        DofFunctional {
            kind: DofKind::CellAverage,
            site: 0,
        }
    }

    /// Evaluates the functional; `degree` is the quadrature exactness used
    /// by edge and cell kinds.
    pub fn apply(&self, frame: &QuadFrame, field: Field<'_>, degree: usize) -> Result<f64> {
        match (self.kind, field) {
            (DofKind::Vertex, Field::Scalar(u)) => Ok(u(frame.vertex(self.site))),
            (DofKind::EdgeTangential, Field::Vector(sigma)) => {
                edge_tangential_average(frame, self.site, sigma, degree)
            }
            (DofKind::CellAverage, Field::Scalar(q)) => {
                let rule = frame.quadrature(degree)?;
                Ok(rule.integrate(q) / frame.area())
            }
            (DofKind::EdgeTangential, Field::Scalar(_)) => Err(Error::FieldKindMismatch { expected: "vector" }),
            (_, Field::Vector(_)) => Err(Error::FieldKindMismatch { expected: "scalar" }),
        }
    }
}

/// `(1/|e_i|) int_{e_i} sigma . t_i ds`, counterclockwise tangent.
pub fn edge_tangential_average(
    frame: &QuadFrame,
    edge: usize,
    sigma: impl Fn(Point2) -> Vec2,
    degree: usize,
) -> Result<f64> {
    let (p, q) = frame.edge_endpoints(edge);
    let t = frame.edge_tangent(edge);
    let rule = quadrature::segment_rule(p, q, degree)?;
    Ok(rule.integrate(|x| sigma(x).dot(t)) / frame.edge_length(edge))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn skewed() -> QuadFrame {
        QuadFrame::from_vertices([
            Vec2::new(3.0, 2.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
        ])
        .unwrap()
    }

    fn square() -> QuadFrame {
        QuadFrame::from_vertices([
            Vec2::new(1.0, 1.0),
            Vec2::new(-1.0, 1.0),
            Vec2::new(-1.0, -1.0),
            Vec2::new(1.0, -1.0),
        ])
        .unwrap()
    }

    #[test]
    fn qbl_nodal_identity() {
        for f in [square(), skewed()] {
            let basis = QblBasis::new(&f);
            for j in 0..4 {
                let vals = basis.eval(&f, f.vertex(j));
                for (i, v) in vals.iter().enumerate() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((v - expected).abs() < 1e-13, "phi_{i}(A_{j}) = {v}");
                }
            }
        }
    }

    #[test]
    fn qbl_partition_of_unity_coefficients() {
        let basis = QblBasis::new(&skewed());
        for k in 0..3 {
            let s: f64 = basis.coeffs.iter().map(|c| c[k]).sum();
            assert!(s.abs() < 1e-15);
        }
        let s: f64 = basis.coeffs.iter().map(|c| c[3]).sum();
        assert_relative_eq!(s, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn qbl_gradient_matches_central_differences() {
        let f = skewed();
        let basis = QblBasis::new(&f);
        let h = 1e-6;
        for &(xi, eta) in &[(0.1, -0.3), (0.7, 0.5), (-0.6, 0.2)] {
            let p = f.point_at(xi, eta);
            let g = basis.grad(&f, p);
            for i in 0..4 {
                let fd = Vec2::new(
                    (basis.eval(&f, p + Vec2::new(h, 0.0))[i] - basis.eval(&f, p - Vec2::new(h, 0.0))[i]) / (2.0 * h),
                    (basis.eval(&f, p + Vec2::new(0.0, h))[i] - basis.eval(&f, p - Vec2::new(0.0, h))[i]) / (2.0 * h),
                );
                assert!((g[i] - fd).norm() < 1e-5 * g[i].norm().max(1.0));
            }
        }
    }

    #[test]
    fn qrt_duality_identity() {
        for f in [square(), skewed()] {
            let basis = QrtBasis::new(&f);
            for i in 0..4 {
                for j in 0..4 {
                    let sigma = |p: Point2| basis.eval(&f, p)[i];
                    let d = edge_tangential_average(&f, j, sigma, EDGE_DOF_DEGREE).unwrap();
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((d - expected).abs() < 1e-12, "D_{j}(phi_{i}) = {d}");
                }
            }
        }
    }

    #[test]
    fn qrt_rot_of_frame_fields() {
        let f = skewed();
        let rs = f.cross_rs();
        // pure frame fields as coefficient rows
        let probe = |c: [f64; 4]| QrtBasis { coeffs: [c, [0.0; 4], [0.0; 4], [0.0; 4]] }.rot(&f)[0];
        assert_eq!(probe([1.0, 0.0, 0.0, 0.0]), 0.0);
        assert_eq!(probe([0.0, 1.0, 0.0, 0.0]), 0.0);
        assert_relative_eq!(probe([0.0, 0.0, 1.0, 0.0]), 1.0 / rs);
        assert_relative_eq!(probe([0.0, 0.0, 0.0, 1.0]), -1.0 / rs);
    }

    #[test]
    fn qrt_rot_obeys_stokes() {
        let f = skewed();
        let basis = QrtBasis::new(&f);
        let rot = basis.rot(&f);
        for i in 0..4 {
            let circulation: f64 = (0..4)
                .map(|e| {
                    edge_tangential_average(&f, e, |p| basis.eval(&f, p)[i], EDGE_DOF_DEGREE).unwrap()
                        * f.edge_length(e)
                })
                .sum();
            assert_relative_eq!(rot[i] * f.area(), circulation, epsilon = 1e-12);
        }
    }

    #[test]
    fn square_rot_is_constant() {
        // rot of every QRT field is constant by construction; check against a
        // finite-difference rot at two distinct points of the square.
        let f = square();
        let basis = QrtBasis::new(&f);
        let h = 1e-6;
        let fd_rot = |p: Point2, i: usize| {
            let e = |q: Point2| basis.eval(&f, q)[i];
            (e(p + Vec2::new(h, 0.0)).y - e(p - Vec2::new(h, 0.0)).y) / (2.0 * h)
                - (e(p + Vec2::new(0.0, h)).x - e(p - Vec2::new(0.0, h)).x) / (2.0 * h)
        };
        for i in 0..4 {
            let a = fd_rot(Vec2::new(0.3, -0.2), i);
            let b = fd_rot(Vec2::new(-0.7, 0.6), i);
            assert!((a - b).abs() < 1e-6);
            assert!((a - basis.rot(&f)[i]).abs() < 1e-6);
        }
    }

    #[test]
    fn dof_functionals() {
        let f = skewed();
        let c = |_: Point2| 2.5;
        assert_eq!(DofFunctional::vertex(2).apply(&f, Field::Scalar(&c), 0).unwrap(), 2.5);
        assert_relative_eq!(
            DofFunctional::cell().apply(&f, Field::Scalar(&c), 2).unwrap(),
            2.5,
            epsilon = 1e-14
        );
        let v = Vec2::new(0.3, -1.2);
        let cv = |_: Point2| v;
        for e in 0..4 {
            let d = DofFunctional::edge(e).apply(&f, Field::Vector(&cv), EDGE_DOF_DEGREE).unwrap();
            assert_relative_eq!(d, v.dot(f.edge_tangent(e)), epsilon = 1e-14);
        }
        assert!(matches!(
            DofFunctional::edge(0).apply(&f, Field::Scalar(&c), 7),
            Err(Error::FieldKindMismatch { .. })
        ));
        assert!(matches!(
            DofFunctional::vertex(0).apply(&f, Field::Vector(&cv), 7),
            Err(Error::FieldKindMismatch { .. })
        ));
        assert!(matches!(
            DofFunctional::cell().apply(&f, Field::Scalar(&c), 99),
            Err(Error::DegreeTooHigh { .. })
        ));
        // xi has cell average beta / 3
        let xi = |p: Point2| f.xi_eta(p).0;
        assert_relative_eq!(
            DofFunctional::cell().apply(&f, Field::Scalar(&xi), 1).unwrap(),
            f.beta() / 3.0,
            epsilon = 1e-14
        );
    }
}
