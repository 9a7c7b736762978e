//! Convergence studies for the Poisson, eigenvalue and H(rot) benchmarks,
//! plus the complex and consistency diagnostics.

use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use crate::assembly::{
    assemble_courant, assemble_hrot, assemble_mass_qbl, assemble_poisson, courant_mass, courant_stiffness,
    poisson_stiffness, LOAD_DEGREE,
};
use crate::derham::{
    consistency_h1_dual, consistency_rot_dual, exactness_check, nonconformity_witness, ComplexReport, DENSE_LIMIT,
};
use crate::error::{Error, Result};
use crate::fields::{hrot_exact, hrot_source, poisson_exact, square_eigenfunction, Poly2, PolyVec2, VectorField};
use crate::geometry::Vec2;
use crate::interpolation::{commutativity_residual, FeFunction, Space, INTERP_DEGREE};
use crate::mesh::{QuadMesh, POISSON_DOMAIN};
use crate::norms::{error_norms, p1_error_norms, Exact};
use crate::solver::{smallest_eigenpair, CgOptions, EigenOptions};
use crate::sparse::SparseMatrix;

/// Refinements of a single cell giving the first (8 x 8) row.
pub const POISSON_FIRST_LEVEL: usize = 3;
/// Refinements of the 2 x 2 trapezoid square giving the first (8 x 8) row.
pub const TRAPEZOID_FIRST_LEVEL: usize = 2;
pub const MAX_LEVELS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridKind {
    Quad,
    /// Each quadrilateral split along its first diagonal, solved with Courant P1.
    Tri,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    /// Number of table rows.
    pub levels: usize,
    pub grid: GridKind,
    /// Interior-point shift of the trapezoid square.
    pub offset: f64,
    /// Quadrature degree of loads and error norms.
    pub quad_degree: usize,
    /// Relative residual tolerance of CG.
    pub tol: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            levels: 4,
            grid: GridKind::Quad,
            offset: crate::mesh::DEFAULT_TRAPEZOID_OFFSET,
            quad_degree: LOAD_DEGREE,
            tol: 1e-10,
        }
    }
}

impl RunOptions {
    fn validate(&self) -> Result<()> {
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::InvalidArgument(format!(
                "levels must lie in 1..={MAX_LEVELS}, got {}",
                self.levels
            )));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!("tolerance {} outside (0, 1)", self.tol)));
        }
        Ok(())
    }

    fn cg(&self) -> CgOptions {
        CgOptions {
            tol: self.tol,
            ..CgOptions::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub level: usize,
    /// Grid label such as `8x8`.
    pub label: String,
    pub h: f64,
    pub n_dof: usize,
    /// One entry per norm of the report.
    pub errors: Vec<f64>,
    /// Discrete eigenvalue, for eigenvalue runs.
    pub eigenvalue: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub experiment: String,
    pub domain: String,
    pub exact: String,
    pub element: String,
    pub norms: Vec<String>,
    pub rows: Vec<ConvergenceRow>,
}

/// `log2(e_l / e_{l+1})`.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(h: &[f64], e: &[f64]) -> Option<f64> {
    if h.len() < 2 || h.len() != e.len() {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

impl ConvergenceReport {
    pub fn norm_index(&self, name: &str) -> Option<usize> {
        self.norms.iter().position(|n| n == name)
    }

    pub fn errors(&self, norm: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.errors[norm]).collect()
    }

    pub fn hs(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    /// Per-row orders; the first row has none.
    pub fn orders(&self, norm: usize) -> Vec<Option<f64>> {
        let e = self.errors(norm);
        (0..e.len())
            .map(|i| (i > 0).then(|| observed_order(e[i - 1], e[i])))
            .collect()
    }

    pub fn fitted_order(&self, norm: usize) -> Option<f64> {
        fitted_order(&self.hs(), &self.errors(norm))
    }

    /// `level,h,n_dof,<norm>,<norm>_order,...`; orders of the first row are empty.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("level,h,n_dof");
        for n in &self.norms {
            let _ = write!(s, ",{n},{n}_order");
        }
        s.push('\n');
        let orders: Vec<_> = (0..self.norms.len()).map(|k| self.orders(k)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            let _ = write!(s, "{},{:e},{}", row.level, row.h, row.n_dof);
            for k in 0..self.norms.len() {
                let _ = write!(s, ",{:e},", row.errors[k]);
                if let Some(o) = orders[k][i] {
                    let _ = write!(s, "{o:.4}");
                }
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for ConvergenceReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} | domain: {} | exact: {} | element: {}", self.experiment, self.domain, self.exact, self.element)?;
        write!(f, "{:>9} {:>10} {:>8}", "grid", "h", "dofs")?;
        if self.rows.iter().any(|r| r.eigenvalue.is_some()) {
            write!(f, " {:>14}", "lambda_h")?;
        }
        for n in &self.norms {
            write!(f, " {n:>12} {:>6}", "order")?;
        }
        writeln!(f)?;
        let orders: Vec<_> = (0..self.norms.len()).map(|k| self.orders(k)).collect();
        for (i, row) in self.rows.iter().enumerate() {
            write!(f, "{:>9} {:>10.4e} {:>8}", row.label, row.h, row.n_dof)?;
            if let Some(l) = row.eigenvalue {
                write!(f, " {l:>14.8}")?;
            }
            for k in 0..self.norms.len() {
                match orders[k][i] {
                    Some(o) => write!(f, " {:>12.4e} {o:>6.2}", row.errors[k])?,
                    None => write!(f, " {:>12.4e} {:>6}", row.errors[k], "-")?,
                }
            }
            writeln!(f)?;
        }
        if self.rows.len() >= 2 {
            write!(f, "least-squares order:")?;
            for (k, n) in self.norms.iter().enumerate() {
                if let Some(o) = self.fitted_order(k) {
                    write!(f, " {n} {o:.3}")?;
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn label(cells_per_side: usize) -> String {
    format!("{cells_per_side}x{cells_per_side}")
}

/// Poisson problem on the quadrilateral benchmark domain, QBL or Courant.
pub fn run_poisson(opts: &RunOptions) -> Result<ConvergenceReport> {
    opts.validate()?;
    let u = poisson_exact();
    let f = -u.laplacian();
    let mut mesh = QuadMesh::single_cell(POISSON_DOMAIN)?.refined(POISSON_FIRST_LEVEL)?;
    let mut rows = Vec::with_capacity(opts.levels);
    for i in 0..opts.levels {
        if i > 0 {
            mesh = mesh.bisection_refine()?;
        }
        let level = mesh.level();
        let (h, n_dof, errs) = match opts.grid {
            GridKind::Quad => {
                let sys = assemble_poisson(&mesh, |p| f.eval(p), opts.quad_degree)?;
                let (x, _) = sys.solve(opts.cg())?;
                let uh = FeFunction::new(&mesh, Space::Qbl, x)?;
                let e = error_norms(&uh, Exact::Scalar(&u), opts.quad_degree)?;
                (mesh.h(), sys.free.len(), e)
            }
            GridKind::Tri => {
                let tri = mesh.split_to_triangles();
                let sys = assemble_courant(&tri, |p| f.eval(p), opts.quad_degree)?;
                let (x, _) = sys.solve(opts.cg())?;
                let e = p1_error_norms(&tri, &x, &u, opts.quad_degree)?;
                (tri.h(), sys.free.len(), e)
            }
        };
        rows.push(ConvergenceRow {
            level,
            label: label(1 << level),
            h,
            n_dof,
            errors: vec![errs.h1_broken.unwrap_or(f64::NAN), errs.l2],
            eigenvalue: None,
        });
    }
    Ok(ConvergenceReport {
        experiment: "poisson".into(),
        domain: "quadrilateral (0,0),(1,0),(2,2),(-1,1)".into(),
        exact: "u = y(x+y)(x-3y+4)(2x-y-2)".into(),
        element: element_name(opts.grid),
        norms: vec!["h1_semi".into(), "l2".into()],
        rows,
    })
}

fn element_name(grid: GridKind) -> String {
    match grid {
        GridKind::Quad => "QBL".into(),
        GridKind::Tri => "Courant P1".into(),
    }
}

/// Smallest Dirichlet Laplace eigenvalue of the unit square on refined
/// trapezoid grids; the error is `|2 pi^2 - lambda_h|`.
pub fn run_eigen(opts: &RunOptions) -> Result<ConvergenceReport> {
    opts.validate()?;
    let exact = 2.0 * PI * PI;
    let mut mesh = QuadMesh::four_trapezoid_square(opts.offset)?.refined(TRAPEZOID_FIRST_LEVEL)?;
    let eig = EigenOptions {
        cg: CgOptions {
            tol: opts.tol.min(1e-12),
            ..CgOptions::default()
        },
        ..EigenOptions::default()
    };
    let mut rows = Vec::with_capacity(opts.levels);
    for i in 0..opts.levels {
        if i > 0 {
            mesh = mesh.bisection_refine()?;
        }
        let (a, m, interior, h): (SparseMatrix, SparseMatrix, Vec<usize>, f64) = match opts.grid {
            GridKind::Quad => {
                let interior = (0..mesh.n_vertices()).filter(|&v| !mesh.is_boundary_vertex(v)).collect();
                (poisson_stiffness(&mesh), assemble_mass_qbl(&mesh), interior, mesh.h())
            }
            GridKind::Tri => {
                let tri = mesh.split_to_triangles();
                let interior = (0..tri.n_vertices()).filter(|&v| !tri.is_boundary_vertex(v)).collect();
                (courant_stiffness(&tri), courant_mass(&tri), interior, tri.h())
            }
        };
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        let a = a.restrict(&interior, &interior);
        let m = m.restrict(&interior, &interior);
        let res = smallest_eigenpair(&a, &m, eig)?;
        let level = mesh.level();
        rows.push(ConvergenceRow {
            level,
            label: label(1 << (level + 1)),
            h,
            n_dof: interior.len(),
            errors: vec![(res.eigenvalue - exact).abs()],
            eigenvalue: Some(res.eigenvalue),
        });
    }
    Ok(ConvergenceReport {
        experiment: "eigen".into(),
        domain: format!("unit square, trapezoid grid offset {}", opts.offset),
        exact: "lambda = 2 pi^2".into(),
        element: element_name(opts.grid),
        norms: vec!["eig_error".into()],
        rows,
    })
}

/// `curl rot s + s = f` on the unit square with zero tangential trace.
pub fn run_hrot(opts: &RunOptions) -> Result<ConvergenceReport> {
    opts.validate()?;
    let sigma = hrot_exact();
    let f = hrot_source(&sigma);
    let mut mesh = QuadMesh::four_trapezoid_square(opts.offset)?.refined(TRAPEZOID_FIRST_LEVEL)?;
    let mut rows = Vec::with_capacity(opts.levels);
    for i in 0..opts.levels {
        if i > 0 {
            mesh = mesh.bisection_refine()?;
        }
        let sys = assemble_hrot(&mesh, |p| f.value(p), opts.quad_degree)?;
        let (x, _) = sys.solve(opts.cg())?;
        let sh = FeFunction::new(&mesh, Space::Qrt, x)?;
        let e = error_norms(&sh, Exact::Vector(&sigma), opts.quad_degree)?;
        let level = mesh.level();
        rows.push(ConvergenceRow {
            level,
            label: label(1 << (level + 1)),
            h: mesh.h(),
            n_dof: sys.free.len(),
            errors: vec![e.l2, e.rot_semi.unwrap_or(f64::NAN), e.rot_full.unwrap_or(f64::NAN)],
            eigenvalue: None,
        });
    }
    Ok(ConvergenceReport {
        experiment: "hrot".into(),
        domain: format!("unit square, trapezoid grid offset {}", opts.offset),
        exact: "sigma = (xy^2 - xy, x^2y - xy)".into(),
        element: "QRT".into(),
        norms: vec!["l2".into(), "rot_semi".into(), "rot_full".into()],
        rows,
    })
}

/// Smooth field pairing of the H1 consistency functional.
pub fn consistency_zeta() -> PolyVec2 {
    PolyVec2::new(Poly2::x(), Poly2::y())
}

/// Smooth scalar of the rot consistency functional.
pub fn consistency_w() -> Poly2 {
    let (x, y) = (Poly2::x(), Poly2::y());
    &(&x * &x) * &y + x - y * 2.0
}

/// Refinement level of the first consistency row (16 x 16 cells).
pub const CONSISTENCY_FIRST_LEVEL: usize = 3;
/// Interior vertices move by up to this multiple of `h^2`, which keeps
/// `d_K = O(h_K^2)` while removing the cell-to-cell smoothness of bisection.
pub const PERTURBATION_AMPLITUDE: f64 = 0.2;
pub const PERTURBATION_SEED: u64 = 20_240_917;

/// Dual norms `sup E(zeta, v) / |v|_{1,h}` and `sup E(w, tau) / ||tau||_{rot,h}`
/// over the homogeneous spaces, on three grid families of one level.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyRow {
    pub level: usize,
    pub h: f64,
    /// Perturbed bisection trapezoid grid.
    pub h1_perturbed: f64,
    pub rot_perturbed: f64,
    /// Unperturbed bisection trapezoid grid.
    pub h1_bisection: f64,
    pub rot_bisection: f64,
    /// Sheared parallelogram grid with the same cell count.
    pub h1_parallelogram: f64,
    pub rot_parallelogram: f64,
}

/// Parallelogram grid of a sheared unit square with `n x n` cells.
pub fn sheared_grid(n: usize) -> Result<QuadMesh> {
    QuadMesh::parallelogram_grid(n, n, Vec2::ZERO, Vec2::new(1.0, 0.0), Vec2::new(0.3, 1.0))
}

/// Consistency dual norms for `levels` rows starting at [`CONSISTENCY_FIRST_LEVEL`].
pub fn consistency_study(levels: usize, offset: f64, tol: f64) -> Result<Vec<ConsistencyRow>> {
    let zeta = consistency_zeta();
    let w = consistency_w();
    let cg = CgOptions {
        tol,
        ..CgOptions::default()
    };
    let mut trap = QuadMesh::four_trapezoid_square(offset)?.refined(CONSISTENCY_FIRST_LEVEL)?;
    let mut rows = Vec::with_capacity(levels);
    for i in 0..levels {
        if i > 0 {
            trap = trap.bisection_refine()?;
        }
        let pert = trap.perturbed_interior(PERTURBATION_AMPLITUDE, PERTURBATION_SEED)?;
        let para = sheared_grid(1 << (trap.level() + 1))?;
        rows.push(ConsistencyRow {
            level: trap.level(),
            h: pert.h(),
            h1_perturbed: consistency_h1_dual(&pert, &zeta, cg)?,
            rot_perturbed: consistency_rot_dual(&pert, &w, cg)?,
            h1_bisection: consistency_h1_dual(&trap, &zeta, cg)?,
            rot_bisection: consistency_rot_dual(&trap, &w, cg)?,
            h1_parallelogram: consistency_h1_dual(&para, &zeta, cg)?,
            rot_parallelogram: consistency_rot_dual(&para, &w, cg)?,
        });
    }
    Ok(rows)
}

/// Text report of the complex diagnostics.
#[derive(Clone, Debug)]
pub struct ComplexCheckReport {
    pub complexes: Vec<(usize, ComplexReport, ComplexReport)>,
    /// `(level, max relative commutativity defect)`.
    pub commutativity: Vec<(usize, f64)>,
    pub consistency: Vec<ConsistencyRow>,
    /// Largest relative hat-function jump on the trapezoid and parallelogram grids.
    pub witness: (f64, f64),
}

/// Dense exactness on the coarse trapezoid grids that fit the dense limit,
/// commutativity residuals, consistency decay and the nonconformity witness.
pub fn run_complex_check(levels: usize, offset: f64, tol: f64) -> Result<ComplexCheckReport> {
    if !(1..=MAX_LEVELS).contains(&levels) {
        return Err(Error::InvalidArgument(format!("levels must lie in 1..={MAX_LEVELS}, got {levels}")));
    }
    let base = QuadMesh::four_trapezoid_square(offset)?;
    let u = square_eigenfunction();
    let sigma = crate::fields::VectorFn {
        value: |p: Vec2| Vec2::new(p.y.sin(), p.x.cos()),
        rot: |p: Vec2| -p.x.sin() - p.y.cos(),
        div: |_: Vec2| 0.0,
    };
    let mut complexes = Vec::new();
    let mut commutativity = Vec::new();
    let mut mesh = base.clone();
    for i in 0..levels {
        if i > 0 {
            mesh = mesh.bisection_refine()?;
        }
        if mesh.n_vertices() + mesh.n_edges() + mesh.n_cells() <= DENSE_LIMIT {
            complexes.push((mesh.level(), exactness_check(&mesh, false)?, exactness_check(&mesh, true)?));
        }
        let rep = commutativity_residual(&mesh, &u, &sigma, INTERP_DEGREE)?;
        commutativity.push((mesh.level(), rep.max()));
    }
    if complexes.is_empty() {
        return Err(Error::TooLargeForDense {
            dofs: base.n_vertices() + base.n_edges() + base.n_cells(),
            limit: DENSE_LIMIT,
        });
    }
    let consistency = consistency_study(levels, offset, tol)?;
    let trap_jump = nonconformity_witness(&base)?.map_or(0.0, |(_, j)| j);
    let para_jump = nonconformity_witness(&sheared_grid(2)?)?.map_or(0.0, |(_, j)| j);
    Ok(ComplexCheckReport {
        complexes,
        commutativity,
        consistency,
        witness: (trap_jump, para_jump),
    })
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "NO"
    }
}

impl fmt::Display for ComplexCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "discrete complex QBL -> QRT -> W")?;
        for (level, free, bc) in &self.complexes {
            writeln!(
                f,
                "level {level}: dims ({}, {}, {}), rank grad {}, rank rot {}, |rot grad| {:.1e}, exact {}; with BCs: rank grad {}, rank rot {}, exact {}",
                free.dims[0],
                free.dims[1],
                free.dims[2],
                free.rank_grad,
                free.rank_rot,
                free.composition_defect,
                verdict(free.is_exact()),
                bc.rank_grad,
                bc.rank_rot,
                verdict(bc.is_exact()),
            )?;
        }
        for (level, rho) in &self.commutativity {
            writeln!(f, "level {level}: commutativity defect {rho:.2e}")?;
        }
        writeln!(f, "consistency dual norms (perturbed / bisection / parallelogram grids)")?;
        writeln!(
            f,
            "{:>6} {:>10} {:>11} {:>6} {:>11} {:>6} {:>11} {:>11} {:>9} {:>9}",
            "level", "h", "E_h1 pert", "order", "E_rot pert", "order", "E_h1 bis", "E_rot bis", "E_h1 par", "E_rot par"
        )?;
        for (i, r) in self.consistency.iter().enumerate() {
            let order = |pick: fn(&ConsistencyRow) -> f64| match i {
                0 => "-".to_string(),
                _ => format!("{:.2}", observed_order(pick(&self.consistency[i - 1]), pick(r))),
            };
            writeln!(
                f,
                "{:>6} {:>10.4e} {:>11.4e} {:>6} {:>11.4e} {:>6} {:>11.4e} {:>11.4e} {:>9.1e} {:>9.1e}",
                r.level,
                r.h,
                r.h1_perturbed,
                order(|r| r.h1_perturbed),
                r.rot_perturbed,
                order(|r| r.rot_perturbed),
                r.h1_bisection,
                r.rot_bisection,
                r.h1_parallelogram,
                r.rot_parallelogram
            )?;
        }
        writeln!(
            f,
            "nonconformity witness: max hat-function trace jump {:.3e} on trapezoids, {:.1e} on parallelograms",
            self.witness.0, self.witness.1
        )
    }
}
