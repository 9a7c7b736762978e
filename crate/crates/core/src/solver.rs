//! Jacobi-preconditioned conjugate gradients and inverse power iteration.

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    /// Stop when `|b - A x| <= tol |b|`.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            tol: 1e-12,
            max_iter: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn cg_solve(a: &SparseMatrix, b: &[f64], opts: CgOptions) -> Result<CgResult> {
    cg_solve_from(a, b, vec![0.0; b.len()], opts)
}

/// CG with an explicit starting vector.
pub fn cg_solve_from(a: &SparseMatrix, b: &[f64], x0: Vec<f64>, opts: CgOptions) -> Result<CgResult> {
    let n = b.len();
    if a.nrows() != n || a.ncols() != n || x0.len() != n {
        return Err(Error::InvalidArgument(format!(
            "cg: matrix {}x{}, rhs {}, start {}",
            a.nrows(),
            a.ncols(),
            n,
            x0.len()
        )));
    }
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return Ok(CgResult {
            x: vec![0.0; n],
            iterations: 0,
            relative_residual: 0.0,
        });
    }
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 })
        .collect();

    let mut x = x0;
    let mut r: Vec<f64> = a.matvec(&x).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
    let mut res = dot(&r, &r).sqrt() / bnorm;
    if res <= opts.tol {
        return Ok(CgResult {
            x,
            iterations: 0,
            relative_residual: res,
        });
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for it in 1..=opts.max_iter {
        a.matvec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt() / bnorm;
        if res <= opts.tol {
            return Ok(CgResult {
                x,
                iterations: it,
                relative_residual: res,
            });
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: res,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenResult {
    pub eigenvalue: f64,
    /// Normalised so that `v^T M v = 1`.
    pub eigenvector: Vec<f64>,
    pub iterations: usize,
    /// `|A v - lambda M v| / |A v|`.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Relative change of the Rayleigh quotient between sweeps.
    pub tol: f64,
    pub max_iter: usize,
    pub cg: CgOptions,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 500,
            cg: CgOptions::default(),
        }
    }
}

/// Smallest eigenpair of `A v = lambda M v` for symmetric positive definite
/// `A` and `M`, by inverse power iteration from the all-ones vector.
pub fn smallest_eigenpair(a: &SparseMatrix, m: &SparseMatrix, opts: EigenOptions) -> Result<EigenResult> {
    let n = a.nrows();
    if n == 0 || m.nrows() != n || a.ncols() != n || m.ncols() != n {
        return Err(Error::InvalidArgument("eigenproblem: empty or mismatched matrices".into()));
    }
    let normalise = |v: &mut Vec<f64>| {
        let nm = m.bilinear(v, v).sqrt();
        v.iter_mut().for_each(|x| *x /= nm);
    };
    let mut v = vec![1.0; n];
    normalise(&mut v);
    let mut lambda = a.bilinear(&v, &v);
    for it in 1..=opts.max_iter {
        let mv = m.matvec(&v);
        let mut w = cg_solve_from(a, &mv, v.clone(), opts.cg)?.x;
        normalise(&mut w);
        let next = a.bilinear(&w, &w);
        v = w;
        let change = (next - lambda).abs() / next.abs();
        lambda = next;
        if change <= opts.tol {
            let av = a.matvec(&v);
            let mv = m.matvec(&v);
            let num: f64 = av.iter().zip(&mv).map(|(x, y)| (x - lambda * y).powi(2)).sum();
            return Ok(EigenResult {
                eigenvalue: lambda,
                residual: num.sqrt() / dot(&av, &av).sqrt(),
                eigenvector: v,
                iterations: it,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual: f64::NAN,
    })
}
