mod plot;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use quadfem::experiments::{self, ConvergenceReport, GridKind, RunOptions};
use quadfem::tables;
use quadfem::{Point2, QuadFrame, QuadMesh};
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] quadfem::Error),
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use quadfem::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Write { .. } => 1,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::DegreeTooHigh { .. } | E::TooLargeForDense { .. } | E::FieldKindMismatch { .. } => 2,
                E::NoConvergence { .. } => 3,
                E::NonConvex { .. } | E::Degenerate { .. } | E::MeshFormat(_) | E::EmptyInterior => 4,
                E::Io(_) => 1,
            },
        }
    }
}

#[derive(Parser)]
#[command(name = "quadfem", version, about = "Convergence experiments for nonconforming quadrilateral elements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Poisson problem on a convex quadrilateral domain (QBL or Courant P1).
    Poisson(RunArgs),
    /// Smallest Laplace eigenvalue on the unit square.
    Eigen(RunArgs),
    /// H(rot) model problem with QRT elements.
    Hrot(RunArgs),
    /// Dense exactness check of the discrete complex plus consistency decay.
    ComplexCheck(RunArgs),
    /// Closed-form monomial integrals against quadrature for one quadrilateral.
    Tables {
        /// Corners x0,y0,x1,y1,x2,y2,x3,y3 in counterclockwise order.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true,
              default_values_t = [0.0, 0.0, 2.0, 0.0, 1.5, 1.0, 0.0, 1.0])]
        vertices: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        quad_degree: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Grid {
    Quad,
    Tri,
}

#[derive(Args)]
struct RunArgs {
    /// Number of refinement levels, one table row each (1 to 8).
    #[arg(long, default_value_t = 4)]
    levels: usize,
    #[arg(long, value_enum, default_value_t = Grid::Quad)]
    grid: Grid,
    /// Interior-point shift of the four-trapezoid start grid.
    #[arg(long, default_value_t = quadfem::mesh::DEFAULT_TRAPEZOID_OFFSET, allow_negative_numbers = true)]
    offset: f64,
    /// Directory for CSV, SVG and the finest mesh.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Quadrature degree for loads and error norms.
    #[arg(long, default_value_t = 10)]
    quad_degree: usize,
    /// Relative residual tolerance of the iterative solvers.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            levels: self.levels,
            grid: match self.grid {
                Grid::Quad => GridKind::Quad,
                Grid::Tri => GridKind::Tri,
            },
            offset: self.offset,
            quad_degree: self.quad_degree,
            tol: self.tol,
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn emit(report: &ConvergenceReport, mesh: Option<QuadMesh>, out: Option<&Path>) -> Result<(), CliError> {
    print!("{report}");
    let Some(dir) = out else { return Ok(()) };
    fs::create_dir_all(dir).map_err(|source| CliError::Write {
        path: dir.to_path_buf(),
        source,
    })?;
    write_file(&dir.join(format!("{}.csv", report.experiment)), &report.to_csv())?;
    if let Some(svg) = plot::render_svg(report) {
        write_file(&dir.join(format!("{}.svg", report.experiment)), &svg)?;
    }
    if let Some(mesh) = mesh {
        let path = dir.join(format!("{}.qmesh", report.experiment));
        let file = fs::File::create(&path).map_err(|source| CliError::Write { path, source })?;
        mesh.write_qmesh(BufWriter::new(file))?;
    }
    Ok(())
}

/// The finest quadrilateral mesh of a run, for the `.qmesh` sidecar.
fn finest_mesh(first: QuadMesh, levels: usize) -> Result<QuadMesh, CliError> {
    Ok(first.refined(levels.saturating_sub(1))?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Poisson(a) => {
            let opts = a.options();
            let report = experiments::run_poisson(&opts)?;
            let first = QuadMesh::unit_square_grid(1)?.refined(experiments::POISSON_FIRST_LEVEL)?;
            let mesh = a.out.as_ref().map(|_| finest_mesh(first, opts.levels)).transpose()?;
            emit(&report, mesh, a.out.as_deref())
        }
        Command::Eigen(a) => {
            let opts = a.options();
            let report = experiments::run_eigen(&opts)?;
            let first = QuadMesh::four_trapezoid_square(opts.offset)?.refined(experiments::TRAPEZOID_FIRST_LEVEL)?;
            let mesh = a.out.as_ref().map(|_| finest_mesh(first, opts.levels)).transpose()?;
            emit(&report, mesh, a.out.as_deref())
        }
        Command::Hrot(a) => {
            if matches!(a.grid, Grid::Tri) {
                return Err(CliError::Usage("hrot runs on quadrilateral grids only".into()));
            }
            let opts = a.options();
            let report = experiments::run_hrot(&opts)?;
            let first = QuadMesh::four_trapezoid_square(opts.offset)?.refined(experiments::TRAPEZOID_FIRST_LEVEL)?;
            let mesh = a.out.as_ref().map(|_| finest_mesh(first, opts.levels)).transpose()?;
            emit(&report, mesh, a.out.as_deref())
        }
        Command::ComplexCheck(a) => {
            let report = experiments::run_complex_check(a.levels, a.offset, a.tol)?;
            print!("{report}");
            if let Some(dir) = a.out.as_deref() {
                fs::create_dir_all(dir).map_err(|source| CliError::Write {
                    path: dir.to_path_buf(),
                    source,
                })?;
                write_file(&dir.join("complex_check.txt"), &report.to_string())?;
            }
            Ok(())
        }
        Command::Tables { vertices, quad_degree } => print_tables(&vertices, quad_degree),
    }
}

fn print_tables(v: &[f64], degree: usize) -> Result<(), CliError> {
    if v.len() != 8 {
        return Err(CliError::Usage(format!("--vertices needs 8 numbers, got {}", v.len())));
    }
    let corners = [0, 1, 2, 3].map(|i| Point2::new(v[2 * i], v[2 * i + 1]));
    let frame = QuadFrame::from_vertices(corners)?;
    println!(
        "alpha = {:.12}  beta = {:.12}  r x s = {:.12}",
        frame.alpha(),
        frame.beta(),
        frame.cross_rs()
    );
    let mut worst: f64 = 0.0;
    let mut line = |name: String, closed: f64, quad: f64| {
        let rel = (closed - quad).abs() / closed.abs().max(1.0);
        worst = worst.max(rel);
        println!("{name:<20} {closed:>22.15e} {quad:>22.15e} {rel:>10.2e}");
    };
    println!("{:<20} {:>22} {:>22} {:>10}", "integral", "closed form", "quadrature", "rel diff");
    for (e, row) in tables::edge_table(&frame).iter().enumerate() {
        for (k, &(a, b)) in tables::EDGE_EXPONENTS.iter().enumerate() {
            let q = frame.edge_monomial_integral(e, a, b)?;
            line(format!("e{} {}", e + 1, tables::EDGE_COLUMNS[k]), row[k], q);
        }
    }
    let cell = tables::cell_table(&frame);
    for (k, &(a, b)) in tables::CELL_EXPONENTS.iter().enumerate() {
        line(format!("K {}", tables::CELL_COLUMNS[k]), cell[k], frame.monomial_integral(a, b)?);
    }
    let hat = tables::cell_hat_table(&frame);
    let rule = frame.quadrature(degree)?;
    for (k, &(a, b)) in tables::CELL_EXPONENTS.iter().enumerate() {
        let q = rule.integrate(|p| {
            let (x, y) = frame.xi_eta_hat(p);
            x.powi(a as i32) * y.powi(b as i32)
        });
        line(format!("K {}", tables::CELL_HAT_COLUMNS[k]), hat[k], q);
    }
    println!("max relative difference: {worst:.2e}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
