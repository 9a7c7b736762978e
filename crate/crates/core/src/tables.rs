//! Closed-form integrals of low-degree monomials in the cell frame.
//!
//! These are independent of the quadrature path and serve as its oracle
//! (and are printed by the `tables` CLI subcommand).

use crate::geometry::QuadFrame;

/// Column labels of [`edge_table`].
pub const EDGE_COLUMNS: [&str; 3] = ["xi^2", "xi*eta", "eta^2"];

/// Column labels of [`cell_table`] and [`cell_hat_table`].
pub const CELL_COLUMNS: [&str; 6] = ["1", "xi", "eta", "xi^2", "xi*eta", "eta^2"];
pub const CELL_HAT_COLUMNS: [&str; 6] = ["1", "xih", "etah", "xih^2", "xih*etah", "etah^2"];

/// Closed forms of `int_{e_i} {xi^2, xi eta, eta^2} ds`, one row per edge.
pub fn edge_table(frame: &QuadFrame) -> [[f64; 3]; 4] {
    let (a, b) = (frame.alpha(), frame.beta());
    let l = frame.edge_lengths();
    [
        [
            (1.0 + a).powi(2) * l[0] / 3.0,
            (1.0 + a) * b * l[0] / 3.0,
            (3.0 + b * b) * l[0] / 3.0,
        ],
        [
            (3.0 + a * a) * l[1] / 3.0,
            a * (b - 1.0) * l[1] / 3.0,
            (1.0 - b).powi(2) * l[1] / 3.0,
        ],
        [
            (1.0 - a).powi(2) * l[2] / 3.0,
            (a - 1.0) * b * l[2] / 3.0,
            (3.0 + b * b) * l[2] / 3.0,
        ],
        [
            (3.0 + a * a) * l[3] / 3.0,
            a * (1.0 + b) * l[3] / 3.0,
            (1.0 + b).powi(2) * l[3] / 3.0,
        ],
    ]
}

/// Monomial exponents `(a, b)` matching [`EDGE_COLUMNS`].
pub const EDGE_EXPONENTS: [(u32, u32); 3] = [(2, 0), (1, 1), (0, 2)];

/// Monomial exponents `(a, b)` matching [`CELL_COLUMNS`].
pub const CELL_EXPONENTS: [(u32, u32); 6] = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)];

/// Closed forms of `int_K {1, xi, eta, xi^2, xi eta, eta^2} dx`.
pub fn cell_table(frame: &QuadFrame) -> [f64; 6] {
    let (a, b, rs) = (frame.alpha(), frame.beta(), frame.cross_rs());
    [
        4.0 * rs,
        4.0 * b / 3.0 * rs,
        4.0 * a / 3.0 * rs,
        4.0 / 3.0 * (1.0 + a * a) * rs,
        4.0 / 3.0 * a * b * rs,
        4.0 / 3.0 * (1.0 + b * b) * rs,
    ]
}

/// Closed forms of the same integrals for the mean-free coordinates.
pub fn cell_hat_table(frame: &QuadFrame) -> [f64; 6] {
    let (a, b, rs) = (frame.alpha(), frame.beta(), frame.cross_rs());
    [
        4.0 * rs,
        0.0,
        0.0,
        4.0 / 9.0 * (3.0 + 3.0 * a * a - b * b) * rs,
        8.0 / 9.0 * a * b * rs,
        4.0 / 9.0 * (3.0 + 3.0 * b * b - a * a) * rs,
    ]
}
