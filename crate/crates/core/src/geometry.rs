//! Planar vectors and the midpoint frame of a convex quadrilateral.
//!
//! Every cell `K = A1 A2 A3 A4` (counterclockwise) carries the frame
//! `(O, r, s)` where `O` is the vertex centroid, `r = m4 - O` and
//! `s = m1 - O` with `m_i` the midpoint of edge `e_i`. In that frame the
//! vertices sit at
//!
//! ```text
//! A1 = ( 1+a,  1+b)   A2 = (-1-a,  1-b)
//! A3 = (-1+a, -1+b)   A4 = ( 1-a, -1-b)
//! ```
//!
//! and `(a, b) = (alpha, beta)` measure how far `K` is from a parallelogram.
//! Edges are indexed from zero: edge `i` runs from vertex `i` to vertex
//! `i + 1 (mod 4)`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureRule};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

/// Points and displacements share one representation.
pub type Point2 = Vec2;

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// Scalar cross product `self.x * other.y - self.y * other.x`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    /// Clockwise quarter turn, `(x, y) -> (y, -x)`, so that `s.perp().dot(r) == r.cross(s)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(self.y, -self.x)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn midpoint(self, other: Vec2) -> Vec2 {
        (self + other) * 0.5
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, k: f64) -> Vec2 {
        Vec2::new(self.x * k, self.y * k)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    fn div(self, k: f64) -> Vec2 {
        Vec2::new(self.x / k, self.y / k)
    }
}

/// Cells with `|alpha| + |beta|` above this are rejected as (nearly) non-convex.
pub const CONVEXITY_MARGIN: f64 = 1e-10;

/// Relative area floor: `r x s` must exceed `AREA_FLOOR * h_K^2`.
pub const AREA_FLOOR: f64 = 1e-14;

/// Midpoint frame of a strictly convex, counterclockwise quadrilateral.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadFrame {
    vertices: [Point2; 4],
    center: Point2,
    r: Vec2,
    s: Vec2,
    alpha: f64,
    beta: f64,
    edges: [Vec2; 4],
    edge_lengths: [f64; 4],
    cross_rs: f64,
    diameter: f64,
}

impl QuadFrame {
    /// Builds the frame of `A1..A4` given counterclockwise.
    pub fn from_vertices(vertices: [Point2; 4]) -> Result<Self> {
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvex {
                reason: "non-finite vertex coordinate".into(),
            });
        }
        let [a1, a2, a3, a4] = vertices;
        let center = (a1 + a2 + a3 + a4) * 0.25;
        let r = a4.midpoint(a1) - center;
        let s = a1.midpoint(a2) - center;
        let cross_rs = r.cross(s);

        let edges = [a2 - a1, a3 - a2, a4 - a3, a1 - a4];
        let edge_lengths = edges.map(Vec2::norm);
        let diameter = edge_lengths
            .iter()
            .copied()
            .chain([(a3 - a1).norm(), (a4 - a2).norm()])
            .fold(0.0, f64::max);

        let floor = AREA_FLOOR * diameter * diameter;
        if cross_rs.abs() < floor || diameter == 0.0 {
            return Err(Error::Degenerate { cross_rs, floor });
        }
        if cross_rs <= 0.0 {
            return Err(Error::NonConvex {
                reason: format!("vertices are clockwise (r x s = {cross_rs:e})"),
            });
        }
        for i in 0..4 {
            let turn = edges[i].cross(edges[(i + 1) % 4]);
            if turn <= 0.0 {
                return Err(Error::NonConvex {
                    reason: format!("non-positive turn {turn:e} at vertex {}", (i + 1) % 4),
                });
            }
        }

        // 2 alpha r + 2 beta s = A1 + A3 - 2 O, solved by Cramer's rule.
        let w = a1 + a3 - center * 2.0;
        let alpha = w.cross(s) / (2.0 * cross_rs);
        let beta = r.cross(w) / (2.0 * cross_rs);
        if alpha.abs() + beta.abs() > 1.0 - CONVEXITY_MARGIN {
            return Err(Error::NonConvex {
                reason: format!("|alpha| + |beta| = {} >= 1", alpha.abs() + beta.abs()),
            });
        }

        Ok(QuadFrame {
            vertices,
            center,
            r,
            s,
            alpha,
            beta,
            edges,
            edge_lengths,
            cross_rs,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[Point2; 4] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn r(&self) -> Vec2 {
        self.r
    }

    pub fn s(&self) -> Vec2 {
        self.s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Edge vector `e_i` (counterclockwise).
    pub fn edge(&self, i: usize) -> Vec2 {
        self.edges[i]
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        self.edge_lengths[i]
    }

    pub fn edge_lengths(&self) -> [f64; 4] {
        self.edge_lengths
    }

    /// Counterclockwise unit tangent of edge `i`.
    pub fn edge_tangent(&self, i: usize) -> Vec2 {
        self.edges[i] / self.edge_lengths[i]
    }

    /// Outward unit normal of edge `i`.
    pub fn edge_normal(&self, i: usize) -> Vec2 {
        self.edge_tangent(i).perp()
    }

    pub fn edge_endpoints(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[(i + 1) % 4])
    }

    pub fn cross_rs(&self) -> f64 {
        self.cross_rs
    }

    /// `|K| = 4 r x s`.
    pub fn area(&self) -> f64 {
        4.0 * self.cross_rs
    }

    /// Diameter `h_K` (longest edge or diagonal).
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn perimeter(&self) -> f64 {
        self.edge_lengths.iter().sum()
    }

    pub fn is_parallelogram(&self, tol: f64) -> bool {
        self.alpha.abs() <= tol && self.beta.abs() <= tol
    }

    /// Affine coordinates `(xi, eta)` with `p - O = xi r + eta s`.
    pub fn xi_eta(&self, p: Point2) -> (f64, f64) {
        let d = p - self.center;
        (d.cross(self.s) / self.cross_rs, self.r.cross(d) / self.cross_rs)
    }

    /// Mean-free coordinates `(xi - beta/3, eta - alpha/3)`.
    pub fn xi_eta_hat(&self, p: Point2) -> (f64, f64) {
        let (xi, eta) = self.xi_eta(p);
        (xi - self.beta / 3.0, eta - self.alpha / 3.0)
    }

    /// Inverse of [`QuadFrame::xi_eta`].
    pub fn point_at(&self, xi: f64, eta: f64) -> Point2 {
        self.center + self.r * xi + self.s * eta
    }

    /// `grad xi = s^perp / (r x s)`.
    pub fn grad_xi(&self) -> Vec2 {
        self.s.perp() / self.cross_rs
    }

    /// `grad eta = -r^perp / (r x s)`; with the clockwise perp this is the
    /// vector satisfying `grad eta . s = 1`, `grad eta . r = 0`.
    pub fn grad_eta(&self) -> Vec2 {
        -self.r.perp() / self.cross_rs
    }

    /// Distance between the diagonal midpoints, `2 |alpha r + beta s|`.
    pub fn diagonal_midpoint_distance(&self) -> f64 {
        2.0 * (self.r * self.alpha + self.s * self.beta).norm()
    }

    pub fn regularity(&self) -> RegularityReport {
        let (nr, ns) = (self.r.norm(), self.s.norm());
        let shape = (nr * ns / self.cross_rs).max(nr / ns).max(ns / nr);
        RegularityReport {
            shape,
            diagonal_gap: self.diagonal_midpoint_distance(),
            diameter: self.diameter,
        }
    }

    /// Rule exact for total degree `degree`, built on the split `A1A2A3 | A1A3A4`.
    pub fn quadrature(&self, degree: usize) -> Result<QuadratureRule> {
        let [a1, a2, a3, a4] = self.vertices;
        let mut rule = quadrature::triangle_rule(a1, a2, a3, degree)?;
        rule.extend(quadrature::triangle_rule(a1, a3, a4, degree)?);
        Ok(rule)
    }

    /// `int_K xi^a eta^b dx`.
    pub fn monomial_integral(&self, a: u32, b: u32) -> Result<f64> {
        let rule = self.quadrature((a + b) as usize)?;
        Ok(rule.integrate(|p| {
            let (xi, eta) = self.xi_eta(p);
            xi.powi(a as i32) * eta.powi(b as i32)
        }))
    }

    /// `int_{e_i} xi^a eta^b ds` by Gauss-Legendre on the segment.
    pub fn edge_monomial_integral(&self, edge: usize, a: u32, b: u32) -> Result<f64> {
        let (p, q) = self.edge_endpoints(edge);
        let rule = quadrature::segment_rule(p, q, (a + b) as usize)?;
        Ok(rule.integrate(|x| {
            let (xi, eta) = self.xi_eta(x);
            xi.powi(a as i32) * eta.powi(b as i32)
        }))
    }
}

/// Shape-quality measures of one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityReport {
    /// `R_K = max{|r||s|/(r x s), |r|/|s|, |s|/|r|}`; equals 1 only for squares.
    pub shape: f64,
    /// `d_K`, the distance between the midpoints of the two diagonals.
    pub diagonal_gap: f64,
    /// `h_K`.
    pub diameter: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square() -> QuadFrame {
        QuadFrame::from_vertices([
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
        ])
        .unwrap()
    }

    fn skewed() -> QuadFrame {
        QuadFrame::from_vertices([
            Vec2::new(3.0, 2.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn square_frame() {
        let f = unit_square();
        assert_eq!(f.alpha(), 0.0);
        assert_eq!(f.beta(), 0.0);
        assert_eq!(f.r(), Vec2::new(0.5, 0.0));
        assert_eq!(f.s(), Vec2::new(0.0, 0.5));
        let reg = f.regularity();
        assert_eq!(reg.shape, 1.0);
        assert_eq!(reg.diagonal_gap, 0.0);
    }

    #[test]
    fn parallelogram_has_zero_shape_parameters() {
        let f = QuadFrame::from_vertices([
            Vec2::new(3.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
        ])
        .unwrap();
        assert!(f.alpha().abs() < 1e-15 && f.beta().abs() < 1e-15);
        assert!(f.diagonal_midpoint_distance() < 1e-15);
        assert!(f.regularity().shape > 1.0);
    }

    #[test]
    fn skewed_frame_matches_hand_solution() {
        // 2 a r + 2 b s = (1/2, 1/2), r = (5/4, 1/4), s = (1/4, 3/4)
        let f = skewed();
        assert_relative_eq!(f.alpha(), 1.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(f.beta(), 2.0 / 7.0, epsilon = 1e-15);
        assert_relative_eq!(f.r().x, 1.25);
        assert_relative_eq!(f.r().y, 0.25);
        assert_relative_eq!(f.s().x, 0.25);
        assert_relative_eq!(f.s().y, 0.75);
        assert_relative_eq!(f.cross_rs(), 0.875);
        assert_relative_eq!(f.diagonal_midpoint_distance(), 0.5f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn xi_eta_at_landmarks() {
        let f = skewed();
        let (xi, eta) = f.xi_eta(f.center());
        assert_eq!((xi, eta), (0.0, 0.0));
        let (xi, eta) = f.xi_eta(f.vertex(0));
        assert_relative_eq!(xi, 1.0 + f.alpha(), epsilon = 1e-14);
        assert_relative_eq!(eta, 1.0 + f.beta(), epsilon = 1e-14);
        let (xi, eta) = f.xi_eta(Vec2::new(1.25, 0.75) + Vec2::new(1.25, 0.25));
        assert_relative_eq!(xi, 1.0, epsilon = 1e-14);
        assert!(eta.abs() < 1e-14);
    }

    #[test]
    fn vertex_coordinates_in_frame() {
        let f = skewed();
        let (a, b) = (f.alpha(), f.beta());
        let expected = [
            (1.0 + a, 1.0 + b),
            (-1.0 - a, 1.0 - b),
            (-1.0 + a, -1.0 + b),
            (1.0 - a, -1.0 - b),
        ];
        for (i, (x, y)) in expected.into_iter().enumerate() {
            let p = f.point_at(x, y);
            assert!((p - f.vertex(i)).norm() < 1e-14);
        }
    }

    #[test]
    fn gradients_are_dual_to_frame() {
        let f = skewed();
        assert_relative_eq!(f.grad_xi().dot(f.r()), 1.0, epsilon = 1e-14);
        assert!(f.grad_xi().dot(f.s()).abs() < 1e-14);
        assert_relative_eq!(f.grad_eta().dot(f.s()), 1.0, epsilon = 1e-14);
        assert!(f.grad_eta().dot(f.r()).abs() < 1e-14);
        assert_relative_eq!(
            f.grad_xi().cross(f.grad_eta()),
            1.0 / f.cross_rs(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_clockwise_and_nonconvex() {
        let cw = QuadFrame::from_vertices([
            Vec2::new(0.0, 0.0),
            Vec2::new(0.0, 1.0),
            Vec2::new(1.0, 1.0),
            Vec2::new(1.0, 0.0),
        ]);
        assert!(matches!(cw, Err(Error::NonConvex { .. })));
        let dart = QuadFrame::from_vertices([
            Vec2::new(0.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(0.5, 0.5),
            Vec2::new(0.0, 2.0),
        ]);
        assert!(matches!(dart, Err(Error::NonConvex { .. })));
        let flat = QuadFrame::from_vertices([
            Vec2::new(0.0, 0.0),
            Vec2::new(1.0, 0.0),
            Vec2::new(2.0, 0.0),
            Vec2::new(3.0, 0.0),
        ]);
        assert!(matches!(flat, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn monomial_integrals() {
        let f = skewed();
        assert_relative_eq!(f.monomial_integral(0, 0).unwrap(), 3.5, max_relative = 1e-14);
        let shoelace = 0.5
            * (0..4)
                .map(|i| f.vertex(i).cross(f.vertex((i + 1) % 4)))
                .sum::<f64>();
        assert_relative_eq!(shoelace, 3.5, max_relative = 1e-15);
        let rs = f.cross_rs();
        assert_relative_eq!(
            f.monomial_integral(1, 0).unwrap(),
            4.0 * f.beta() / 3.0 * rs,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            f.monomial_integral(2, 0).unwrap(),
            4.0 / 3.0 * (1.0 + f.alpha().powi(2)) * rs,
            max_relative = 1e-13
        );
        assert!(matches!(
            f.monomial_integral(20, 10),
            Err(Error::DegreeTooHigh { .. })
        ));
    }

    #[test]
    fn edge_integrals() {
        let f = skewed();
        let (a, b) = (f.alpha(), f.beta());
        assert_relative_eq!(
            f.edge_monomial_integral(0, 2, 0).unwrap(),
            (1.0 + a).powi(2) * f.edge_length(0) / 3.0,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            f.edge_monomial_integral(1, 1, 1).unwrap(),
            a * (b - 1.0) * f.edge_length(1) / 3.0,
            max_relative = 1e-13
        );
        let sq = unit_square();
        assert_relative_eq!(sq.edge_monomial_integral(0, 0, 2).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn hat_coordinates_have_zero_mean() {
        let f = skewed();
        let rule = f.quadrature(4).unwrap();
        let m = rule.integrate(|p| f.xi_eta_hat(p).0);
        assert!(m.abs() < 1e-13 * f.area());
        let sq = rule.integrate(|p| f.xi_eta_hat(p).0.powi(2));
        let expected = 4.0 / 9.0 * (3.0 + 3.0 * f.alpha().powi(2) - f.beta().powi(2)) * f.cross_rs();
        assert_relative_eq!(sq, expected, max_relative = 1e-13);
    }
}
