//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use quadfem::derham::{exactness_check, gradient_matrix, max_trace_jump, nonconformity_witness, rot_matrix};
use quadfem::elements::{DofFunctional, Field, QblBasis, QrtBasis, EDGE_DOF_DEGREE};
use quadfem::experiments::{self, observed_order, ConvergenceReport, GridKind, RunOptions};
use quadfem::fields::{hrot_exact, poisson_exact, square_eigenfunction, Poly2, PolyVec2, ScalarField, ScalarFn, VectorField, VectorFn};
use quadfem::interpolation::{commutativity_residual, FeFunction, Space};
use quadfem::tables;
use quadfem::{Point2, QuadFrame, QuadMesh, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const RANDOM_QUADS: usize = 1000;
// high enough that edge quadrature of the transcendental fields is at roundoff
const COMMUTATIVITY_DEGREE: usize = 20;

// reference columns, 8x8 .. 64x64
const T6_QBL_H1: [f64; 4] = [1.67, 8.35e-1, 4.18e-1, 2.09e-1];
const T6_QBL_L2: [f64; 4] = [1.39e-1, 3.52e-2, 9.69e-3, 2.42e-3];
const T6_P1_H1: [f64; 4] = [3.59, 1.83, 9.23e-1, 4.62e-1];
const T6_P1_L2: [f64; 4] = [2.57e-1, 6.73e-2, 1.70e-2, 4.57e-3];
const T7_QBL: [f64; 4] = [6.090e-1, 1.359e-1, 3.210e-2, 7.800e-3];
const T8_ROT_FULL: [f64; 4] = [1.28e-1, 6.28e-2, 3.15e-2, 1.58e-2];

struct Outcome {
    pass: bool,
    detail: String,
}

fn record(results: &mut Vec<(usize, Outcome, f64)>, id: usize, f: impl FnOnce() -> Outcome) {
    let t = Instant::now();
    let out = f();
    let secs = t.elapsed().as_secs_f64();
    println!(
        "criterion {id:>2}: {} ({secs:.1} s) {}",
        if out.pass { "PASS" } else { "FAIL" },
        out.detail
    );
    results.push((id, out, secs));
}

/// Convex quad with prescribed shape parameters: `A1 = O + (1+a) r + (1+b) s`, etc.
fn random_frame(rng: &mut impl Rng) -> QuadFrame {
    loop {
        let o = Point2::new(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0));
        let len_r = rng.gen_range(0.2..2.0);
        let theta = rng.gen_range(0.0..2.0 * PI);
        let r = Vec2::new(theta.cos(), theta.sin()) * len_r;
        let phi = theta + rng.gen_range(0.3..PI - 0.3);
        let s = Vec2::new(phi.cos(), phi.sin()) * len_r * rng.gen_range(0.5..2.0);
        let a: f64 = rng.gen_range(-0.9..0.9);
        let b_max = 0.9 - a.abs();
        let b = if b_max > 0.0 { rng.gen_range(-b_max..=b_max) } else { 0.0 };
        let at = |xi: f64, eta: f64| o + r * xi + s * eta;
        let v = [
            at(1.0 + a, 1.0 + b),
            at(-1.0 - a, 1.0 - b),
            at(a - 1.0, b - 1.0),
            at(1.0 - a, -1.0 - b),
        ];
        if let Ok(f) = QuadFrame::from_vertices(v) {
            return f;
        }
    }
}

fn max_dev_from_identity(m: &[[f64; 4]; 4]) -> f64 {
    let mut d = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let target = if i == j { 1.0 } else { 0.0 };
            d = d.max((m[i][j] - target).abs());
        }
    }
    d
}

fn unisolvence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut qbl, mut qrt) = (0.0f64, 0.0f64);
    for _ in 0..RANDOM_QUADS {
        let frame = random_frame(&mut rng);
        let b = QblBasis::new(&frame);
        let nodal = [0, 1, 2, 3].map(|i| b.eval(&frame, frame.vertex(i)));
        qbl = qbl.max(max_dev_from_identity(&nodal));

        let q = QrtBasis::new(&frame);
        let mut dual = [[0.0; 4]; 4];
        for (i, row) in dual.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                let phi = |p: Point2| q.eval(&frame, p)[j];
                *entry = DofFunctional::edge(i)
                    .apply(&frame, Field::Vector(&phi), EDGE_DOF_DEGREE)
                    .unwrap();
            }
        }
        qrt = qrt.max(max_dev_from_identity(&dual));
    }
    Outcome {
        pass: qbl <= 1e-12 && qrt <= 1e-12,
        detail: format!("{RANDOM_QUADS} quads: QBL nodal dev {qbl:.1e}, QRT duality dev {qrt:.1e} (tol 1e-12)"),
    }
}

fn table_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let rel = |closed: f64, quad: f64, scale: f64| (closed - quad).abs() / closed.abs().max(scale);
    for _ in 0..RANDOM_QUADS {
        let frame = random_frame(&mut rng);
        for (e, row) in tables::edge_table(&frame).iter().enumerate() {
            let scale = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (k, &(a, b)) in tables::EDGE_EXPONENTS.iter().enumerate() {
                let q = frame.edge_monomial_integral(e, a, b).unwrap();
                worst = worst.max(rel(row[k], q, scale));
            }
        }
        let cell = tables::cell_table(&frame);
        let scale = frame.area();
        for (k, &(a, b)) in tables::CELL_EXPONENTS.iter().enumerate() {
            worst = worst.max(rel(cell[k], frame.monomial_integral(a, b).unwrap(), scale));
        }
        let hat = tables::cell_hat_table(&frame);
        let rule = frame.quadrature(2).unwrap();
        for (k, &(a, b)) in tables::CELL_EXPONENTS.iter().enumerate() {
            let q = rule.integrate(|p| {
                let (x, y) = frame.xi_eta_hat(p);
                x.powi(a as i32) * y.powi(b as i32)
            });
            worst = worst.max(rel(hat[k], q, scale));
        }
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("{RANDOM_QUADS} quads, 24 entries each: max relative deviation {worst:.1e} (tol 1e-12)"),
    }
}

fn poisson_domain() -> QuadMesh {
    QuadMesh::single_cell([
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(2.0, 2.0),
        Point2::new(-1.0, 1.0),
    ])
    .unwrap()
}

fn commutativity() -> Outcome {
    let meshes = [
        ("trapezoid square", QuadMesh::four_trapezoid_square(0.125).unwrap().refined(1).unwrap()),
        ("poisson domain", poisson_domain().refined(2).unwrap()),
        (
            "perturbed trapezoid",
            QuadMesh::four_trapezoid_square(0.125)
                .unwrap()
                .refined(2)
                .unwrap()
                .perturbed_interior(0.2, 7)
                .unwrap(),
        ),
    ];
    let (x, y) = (Poly2::x(), Poly2::y());
    let poly_u = &(&x * &x) * &x - (&(&x * &y) * &y).scale(2.0);
    let poly_s = PolyVec2::new(&(&y * &y) * &y, &(&x * &x) * &y);
    let exp_u = ScalarFn {
        value: |p: Point2| p.x.exp() * p.y.cos(),
        grad: |p: Point2| Vec2::new(p.x.exp() * p.y.cos(), -p.x.exp() * p.y.sin()),
    };
    let exp_s = VectorFn {
        value: |p: Point2| Vec2::new((p.x + p.y).exp(), (p.x * p.y).sin()),
        rot: |p: Point2| p.y * (p.x * p.y).cos() - (p.x + p.y).exp(),
        div: |p: Point2| (p.x + p.y).exp() + p.x * (p.x * p.y).cos(),
    };
    let trig_u = ScalarFn {
        value: |p: Point2| (2.0 * p.x + p.y).cos(),
        grad: |p: Point2| Vec2::new(-2.0 * (2.0 * p.x + p.y).sin(), -(2.0 * p.x + p.y).sin()),
    };
    let trig_s = VectorFn {
        value: |p: Point2| Vec2::new(p.y.sin(), p.x.cos()),
        rot: |p: Point2| -p.x.sin() - p.y.cos(),
        div: |_: Point2| 0.0,
    };
    let eig = square_eigenfunction();
    let pu = poisson_exact();
    let hs = hrot_exact();
    let affine_s = PolyVec2::new(y.scale(-1.0), x.clone());
    let fields: [(&dyn ScalarField, &dyn VectorField); 5] = [
        (&pu, &hs),
        (&poly_u, &poly_s),
        (&exp_u, &exp_s),
        (&trig_u, &trig_s),
        (&eig, &affine_s),
    ];
    let mut worst = 0.0f64;
    let mut where_ = String::new();
    for (name, mesh) in &meshes {
        for (k, (u, s)) in fields.iter().enumerate() {
            let r = commutativity_residual(mesh, *u, *s, COMMUTATIVITY_DEGREE).unwrap();
            let m = r.grad_dofs.max(r.rot_cells);
            if m >= worst {
                worst = m;
                where_ = format!("field {} on {name}", k + 1);
            }
        }
    }
    Outcome {
        pass: worst <= 1e-11,
        detail: format!("5 fields x 3 meshes: max relative defect {worst:.1e} ({where_}, tol 1e-11)"),
    }
}

fn complex_exactness() -> Outcome {
    let mut meshes = vec![QuadMesh::unit_square_grid(1).unwrap()];
    let trap = QuadMesh::four_trapezoid_square(0.125).unwrap();
    for level in 0..3 {
        meshes.push(trap.refined(level).unwrap());
    }
    meshes.push(poisson_domain().refined(3).unwrap());
    meshes.push(trap.refined(2).unwrap().perturbed_interior(0.2, 11).unwrap());
    let mut ok = true;
    let mut worst_rg = 0.0f64;
    let mut max_dofs = 0;
    for mesh in &meshes {
        let n = mesh.n_vertices() + mesh.n_edges() + mesh.n_cells();
        max_dofs = max_dofs.max(n);
        let rg = rot_matrix(mesh).mul(&gradient_matrix(mesh));
        worst_rg = worst_rg.max(rg.max_abs());
        for bc in [false, true] {
            let rep = exactness_check(mesh, bc).unwrap();
            let [nv, ne, nc] = rep.dims;
            ok &= rep.is_exact() && ne + 1 == nv + nc;
            ok &= rep.composition_defect < 1e-13;
        }
    }
    Outcome {
        pass: ok && worst_rg < 1e-13,
        detail: format!(
            "{} meshes up to {max_dofs} dofs: kernels/images exact, Euler identity holds: {ok}; max |R G| {worst_rg:.1e}",
            meshes.len()
        ),
    }
}

fn orders_within(report: &ConvergenceReport, norm: &str, lo: f64, hi: f64) -> (bool, Vec<f64>) {
    let k = report.norm_index(norm).unwrap();
    let orders: Vec<f64> = report.orders(k).into_iter().flatten().collect();
    (orders.iter().all(|o| (lo..=hi).contains(o)), orders)
}

/// Largest ratio max(a/b, b/a) over the rows.
fn worst_factor(report: &ConvergenceReport, norm: &str, reference: &[f64]) -> f64 {
    let k = report.norm_index(norm).unwrap();
    report
        .errors(k)
        .iter()
        .zip(reference)
        .map(|(a, b)| (a / b).max(b / a))
        .fold(0.0, f64::max)
}

fn fmt_orders(o: &[f64]) -> String {
    o.iter().map(|v| format!("{v:.2}")).collect::<Vec<_>>().join("/")
}

fn poisson_convergence() -> Outcome {
    let quad = experiments::run_poisson(&RunOptions::default()).unwrap();
    let tri = experiments::run_poisson(&RunOptions {
        grid: GridKind::Tri,
        ..RunOptions::default()
    })
    .unwrap();
    println!("{quad}{tri}");
    let (h1_ok, h1) = orders_within(&quad, "h1_semi", 0.85, 1.15);
    let (l2_ok, l2) = orders_within(&quad, "l2", 1.8, 2.2);
    let (th1_ok, th1) = orders_within(&tri, "h1_semi", 0.85, 1.15);
    let (tl2_ok, tl2) = orders_within(&tri, "l2", 1.8, 2.2);
    let f_h1 = worst_factor(&quad, "h1_semi", &T6_QBL_H1);
    let f_l2 = worst_factor(&quad, "l2", &T6_QBL_L2);
    let f_th1 = worst_factor(&tri, "h1_semi", &T6_P1_H1);
    let f_tl2 = worst_factor(&tri, "l2", &T6_P1_L2);
    let l2q = quad.errors(quad.norm_index("l2").unwrap());
    let l2t = tri.errors(tri.norm_index("l2").unwrap());
    let qbl_better = l2q.iter().zip(&l2t).all(|(q, t)| q < t);
    Outcome {
        pass: h1_ok && l2_ok && th1_ok && tl2_ok && f_h1 <= 3.0 && f_l2 <= 3.0 && f_th1 <= 3.0 && f_tl2 <= 3.0 && qbl_better,
        detail: format!(
            "QBL orders h1 {} l2 {}; P1 orders h1 {} l2 {}; factors vs reference QBL {f_h1:.2}/{f_l2:.2}, P1 {f_th1:.2}/{f_tl2:.2} (max 3); QBL l2 below P1 l2: {qbl_better}",
            fmt_orders(&h1),
            fmt_orders(&l2),
            fmt_orders(&th1),
            fmt_orders(&tl2)
        ),
    }
}

fn eigen_convergence() -> Outcome {
    let quad = experiments::run_eigen(&RunOptions::default()).unwrap();
    println!("{quad}");
    let (ok, orders) = orders_within(&quad, "eig_error", 1.8, 2.2);
    let f = worst_factor(&quad, "eig_error", &T7_QBL);
    Outcome {
        pass: ok && f <= 5.0,
        detail: format!("orders {}; factor vs reference {f:.2} (max 5)", fmt_orders(&orders)),
    }
}

fn hrot_convergence() -> Outcome {
    let rep = experiments::run_hrot(&RunOptions::default()).unwrap();
    println!("{rep}");
    let mut ok = true;
    let mut parts = Vec::new();
    for norm in ["l2", "rot_semi", "rot_full"] {
        let (o, orders) = orders_within(&rep, norm, 0.85, 1.15);
        ok &= o;
        parts.push(format!("{norm} {}", fmt_orders(&orders)));
    }
    let identity = rep.rows.iter().all(|r| {
        let [l2, semi, full] = [r.errors[0], r.errors[1], r.errors[2]];
        (full * full - l2 * l2 - semi * semi).abs() <= 1e-12 * full * full
    });
    let f = worst_factor(&rep, "rot_full", &T8_ROT_FULL);
    Outcome {
        pass: ok && identity && f <= 3.0,
        detail: format!("orders {}; rot_full factor vs reference {f:.2} (max 3); norm identity {identity}", parts.join(", ")),
    }
}

fn consistency() -> Outcome {
    let rows = experiments::consistency_study(4, 0.125, 1e-12).unwrap();
    let order_of = |pick: fn(&experiments::ConsistencyRow) -> f64| -> Vec<f64> {
        rows.windows(2).map(|w| observed_order(pick(&w[0]), pick(&w[1]))).collect()
    };
    let h1 = order_of(|r| r.h1_perturbed);
    let rot = order_of(|r| r.rot_perturbed);
    let h1_bis = order_of(|r| r.h1_bisection);
    let rot_bis = order_of(|r| r.rot_bisection);
    let in_band = |o: &[f64]| o.iter().all(|v| (0.8..=1.2).contains(v));
    let para = rows
        .iter()
        .map(|r| r.h1_parallelogram.max(r.rot_parallelogram))
        .fold(0.0, f64::max);
    Outcome {
        pass: in_band(&h1) && in_band(&rot) && para <= 1e-12,
        detail: format!(
            "perturbed O(h^2) trapezoid grids: h1 orders {}, rot orders {}; parallelogram max {para:.1e}; (pure bisection grids decay faster: h1 {}, rot {})",
            fmt_orders(&h1),
            fmt_orders(&rot),
            fmt_orders(&h1_bis),
            fmt_orders(&rot_bis)
        ),
    }
}

fn asymptotic_parallelogram() -> Outcome {
    let base = poisson_domain();
    let ratios: Vec<f64> = (3..7)
        .map(|level| {
            let mesh = base.refined(level).unwrap();
            mesh.frames()
                .iter()
                .map(|f| {
                    let r = f.regularity();
                    r.diagonal_gap / (r.diameter * r.diameter)
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let variation = (hi - lo) / hi;
    Outcome {
        pass: variation < 0.1,
        detail: format!(
            "max d_K/h_K^2 over levels 3..6: {} (variation {:.1}%, max 10%)",
            ratios.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * variation
        ),
    }
}

fn witness() -> Outcome {
    let trap = QuadMesh::four_trapezoid_square(0.125).unwrap();
    let (_, jump) = nonconformity_witness(&trap).unwrap().expect("one interior vertex");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let grids = [
        QuadMesh::unit_square_grid(4).unwrap(),
        experiments::sheared_grid(4).unwrap(),
        QuadMesh::parallelogram_grid(3, 5, Point2::new(1.0, -2.0), Vec2::new(0.7, 0.2), Vec2::new(-0.4, 0.9)).unwrap(),
    ];
    let mut para = 0.0f64;
    for g in &grids {
        if let Some((_, j)) = nonconformity_witness(g).unwrap() {
            para = para.max(j);
        }
        let dofs: Vec<f64> = (0..g.n_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        para = para.max(max_trace_jump(&FeFunction::new(g, Space::Qbl, dofs).unwrap()).unwrap());
    }
    Outcome {
        pass: jump > 1e-3 && para <= 1e-12,
        detail: format!("trapezoid hat jump {jump:.3e} (min 1e-3); parallelogram grids max jump {para:.1e} (max 1e-12)"),
    }
}

#[test]
fn acceptance_criteria() {
    let mut results = Vec::new();
    record(&mut results, 1, unisolvence);
    record(&mut results, 2, table_oracle);
    record(&mut results, 3, commutativity);
    record(&mut results, 4, complex_exactness);
    record(&mut results, 5, poisson_convergence);
    record(&mut results, 6, eigen_convergence);
    record(&mut results, 7, hrot_convergence);
    record(&mut results, 8, consistency);
    record(&mut results, 9, asymptotic_parallelogram);
    record(&mut results, 10, witness);
    println!("---- summary ----");
    for (id, out, secs) in &results {
        println!("criterion {id:>2}: {} ({secs:.1} s)", if out.pass { "PASS" } else { "FAIL" });
    }
    let failed: Vec<usize> = results.iter().filter(|(_, o, _)| !o.pass).map(|(id, _, _)| *id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
