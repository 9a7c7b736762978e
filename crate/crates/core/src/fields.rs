//! Analytic scalar and vector fields used as data and exact solutions.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use crate::geometry::{Point2, Vec2};

pub trait ScalarField: Sync {
    fn value(&self, p: Point2) -> f64;
    fn grad(&self, p: Point2) -> Vec2;
}

pub trait VectorField: Sync {
    fn value(&self, p: Point2) -> Vec2;
    /// `d v_y / dx - d v_x / dy`.
    fn rot(&self, p: Point2) -> f64;
    fn div(&self, p: Point2) -> f64;
}

/// Bivariate polynomial `sum c_ab x^a y^b`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly2 {
    terms: BTreeMap<(u32, u32), f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn monomial(c: f64, a: u32, b: u32) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0.0 {
            terms.insert((a, b), c);
        }
        Poly2 { terms }
    }

    pub fn x() -> Self {
        Self::monomial(1.0, 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(1.0, 0, 1)
    }

    pub fn coeff(&self, a: u32, b: u32) -> f64 {
        self.terms.get(&(a, b)).copied().unwrap_or(0.0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|(a, b)| a + b).max().unwrap_or(0)
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.terms
            .iter()
            .map(|(&(a, b), c)| c * p.x.powi(a as i32) * p.y.powi(b as i32))
            .sum()
    }

    pub fn dx(&self) -> Self {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            if a > 0 {
                out.add_term(a - 1, b, c * a as f64);
            }
        }
        out
    }

    pub fn dy(&self) -> Self {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            if b > 0 {
                out.add_term(a, b - 1, c * b as f64);
            }
        }
        out
    }

    pub fn laplacian(&self) -> Self {
        self.dx().dx() + self.dy().dy()
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            out.add_term(a, b, c * k);
        }
        out
    }

    fn add_term(&mut self, a: u32, b: u32, c: f64) {
        let e = self.terms.entry((a, b)).or_insert(0.0);
        *e += c;
        if *e == 0.0 {
            self.terms.remove(&(a, b));
        }
    }
}

impl Add for Poly2 {
    type Output = Poly2;
    fn add(mut self, rhs: Poly2) -> Poly2 {
        for ((a, b), c) in rhs.terms {
            self.add_term(a, b, c);
        }
        self
    }
}

impl Sub for Poly2 {
    type Output = Poly2;
    fn sub(self, rhs: Poly2) -> Poly2 {
        self + rhs.scale(-1.0)
    }
}

impl Neg for Poly2 {
    type Output = Poly2;
    fn neg(self) -> Poly2 {
        self.scale(-1.0)
    }
}

impl Mul for &Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: &Poly2) -> Poly2 {
        let mut out = Poly2::zero();
        for (&(a, b), &c) in &self.terms {
            for (&(a2, b2), &c2) in &rhs.terms {
                out.add_term(a + a2, b + b2, c * c2);
            }
        }
        out
    }
}

impl Mul for Poly2 {
    type Output = Poly2;
    fn mul(self, rhs: Poly2) -> Poly2 {
        &self * &rhs
    }
}

impl Mul<f64> for Poly2 {
    type Output = Poly2;
    fn mul(self, k: f64) -> Poly2 {
        self.scale(k)
    }
}

impl Add<f64> for Poly2 {
    type Output = Poly2;
    fn add(self, c: f64) -> Poly2 {
        self + Poly2::constant(c)
    }
}

impl ScalarField for Poly2 {
    fn value(&self, p: Point2) -> f64 {
        self.eval(p)
    }

    fn grad(&self, p: Point2) -> Vec2 {
        Vec2::new(self.dx().eval(p), self.dy().eval(p))
    }
}

/// Polynomial vector field with precomputed derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVec2 {
    pub x: Poly2,
    pub y: Poly2,
    rot: Poly2,
    div: Poly2,
}

impl PolyVec2 {
    pub fn new(x: Poly2, y: Poly2) -> Self {
        let rot = y.dx() - x.dy();
        let div = x.dx() + y.dy();
        PolyVec2 { x, y, rot, div }
    }

    pub fn rot_poly(&self) -> &Poly2 {
        &self.rot
    }

    /// Gradient field of a polynomial.
    pub fn gradient_of(u: &Poly2) -> Self {
        Self::new(u.dx(), u.dy())
    }

    /// `curl w = (dw/dy, -dw/dx)`.
    pub fn curl_of(w: &Poly2) -> Self {
        Self::new(w.dy(), -w.dx())
    }
}

impl VectorField for PolyVec2 {
    fn value(&self, p: Point2) -> Vec2 {
        Vec2::new(self.x.eval(p), self.y.eval(p))
    }

    fn rot(&self, p: Point2) -> f64 {
        self.rot.eval(p)
    }

    fn div(&self, p: Point2) -> f64 {
        self.div.eval(p)
    }
}

/// Scalar field from closures for the value and gradient.
pub struct ScalarFn<F, G> {
    pub value: F,
    pub grad: G,
}

impl<F, G> ScalarField for ScalarFn<F, G>
where
    F: Fn(Point2) -> f64 + Sync,
    G: Fn(Point2) -> Vec2 + Sync,
{
    fn value(&self, p: Point2) -> f64 {
        (self.value)(p)
    }

    fn grad(&self, p: Point2) -> Vec2 {
        (self.grad)(p)
    }
}

/// Vector field from closures for the value, rot and div.
pub struct VectorFn<F, R, D> {
    pub value: F,
    pub rot: R,
    pub div: D,
}

impl<F, R, D> VectorField for VectorFn<F, R, D>
where
    F: Fn(Point2) -> Vec2 + Sync,
    R: Fn(Point2) -> f64 + Sync,
    D: Fn(Point2) -> f64 + Sync,
{
    fn value(&self, p: Point2) -> Vec2 {
        (self.value)(p)
    }

    fn rot(&self, p: Point2) -> f64 {
        (self.rot)(p)
    }

    fn div(&self, p: Point2) -> f64 {
        (self.div)(p)
    }
}

/// `u = y (x + y) (x - 3y + 4) (2x - y - 2)`, vanishing on the Poisson benchmark boundary.
pub fn poisson_exact() -> Poly2 {
    let (x, y) = (Poly2::x(), Poly2::y());
    y.clone()
        * (x.clone() + y.clone())
        * (x.clone() - y.clone() * 3.0 + 4.0)
        * (x * 2.0 - y + (-2.0))
}

/// `sin(pi x) sin(pi y)`, first Dirichlet eigenfunction of the unit square.
pub fn square_eigenfunction() -> impl ScalarField {
    use std::f64::consts::PI;
    ScalarFn {
        value: |p: Point2| (PI * p.x).sin() * (PI * p.y).sin(),
        grad: |p: Point2| {
            Vec2::new(
                PI * (PI * p.x).cos() * (PI * p.y).sin(),
                PI * (PI * p.x).sin() * (PI * p.y).cos(),
            )
        },
    }
}

/// `sigma = (x y^2 - x y, x^2 y - x y)` with vanishing tangential trace on the unit square.
pub fn hrot_exact() -> PolyVec2 {
    let (x, y) = (Poly2::x(), Poly2::y());
    let xy = &x * &y;
    PolyVec2::new(&xy * &y - xy.clone(), &xy * &x - xy)
}

/// Source `f = curl rot sigma + sigma` of the H(rot) model problem.
pub fn hrot_source(sigma: &PolyVec2) -> PolyVec2 {
    let c = PolyVec2::curl_of(sigma.rot_poly());
    PolyVec2::new(c.x + sigma.x.clone(), c.y + sigma.y.clone())
}
