//! Gauss-Legendre segment rules and collapsed-product triangle rules.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Highest total polynomial degree the rule catalog covers.
pub const MAX_DEGREE: usize = 24;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend(&mut self, other: QuadratureRule) {
        self.points.extend(other.points);
        self.weights.extend(other.weights);
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate<F: FnMut(Point2) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Point2, f64)> + '_ {
        self.points.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule via Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussLegendre { nodes, weights }
    }

    /// Number of points needed for exactness up to `degree`.
    pub fn points_for_degree(degree: usize) -> usize {
        (degree + 2) / 2
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gauss_cache(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Vec<GaussLegendre>> = OnceLock::new();
    let table = CACHE.get_or_init(|| (1..=MAX_DEGREE / 2 + 2).map(GaussLegendre::new).collect());
    &table[n - 1]
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        Err(Error::DegreeTooHigh {
            degree,
            max: MAX_DEGREE,
        })
    } else {
        Ok(())
    }
}

/// Rule on the segment `[p, q]` exact for polynomials of degree `degree`.
pub fn segment_rule(p: Point2, q: Point2, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let gl = gauss_cache(GaussLegendre::points_for_degree(degree));
    let len = (q - p).norm();
    Ok(QuadratureRule {
        points: gl.nodes.iter().map(|&t| p + (q - p) * t).collect(),
        weights: gl.weights.iter().map(|&w| w * len).collect(),
    })
}

/// Reference rule on the triangle `(0,0), (1,0), (0,1)` as `(x, y, w)` triples.
///
/// Collapsed (Duffy) product of Gauss-Legendre rules: `x = u`, `y = v (1 - u)`,
/// Jacobian `1 - u`. Degree `d` needs `ceil((d+2)/2)` points in `u` and
/// `ceil((d+1)/2)` in `v`; all weights are positive.
fn reference_triangle(degree: usize) -> &'static [(f64, f64, f64)] {
    static CACHE: OnceLock<Vec<Vec<(f64, f64, f64)>>> = OnceLock::new();
    let table = CACHE.get_or_init(|| {
        (0..=MAX_DEGREE)
            .map(|d| {
                let gu = gauss_cache(GaussLegendre::points_for_degree(d + 1));
                let gv = gauss_cache(GaussLegendre::points_for_degree(d));
                let mut pts = Vec::with_capacity(gu.nodes.len() * gv.nodes.len());
                for (&u, &wu) in gu.nodes.iter().zip(&gu.weights) {
                    for (&v, &wv) in gv.nodes.iter().zip(&gv.weights) {
                        pts.push((u, v * (1.0 - u), wu * wv * (1.0 - u)));
                    }
                }
                pts
            })
            .collect()
    });
    &table[degree]
}

/// Rule on the triangle `abc` exact for total degree `degree`.
pub fn triangle_rule(a: Point2, b: Point2, c: Point2, degree: usize) -> Result<QuadratureRule> {
    check_degree(degree)?;
    let reference = reference_triangle(degree);
    let jac = (b - a).cross(c - a).abs();
    let (e1, e2) = (b - a, c - a);
    Ok(QuadratureRule {
        points: reference.iter().map(|&(x, y, _)| a + e1 * x + e2 * y).collect(),
        weights: reference.iter().map(|&(_, _, w)| w * jac).collect(),
    })
}
