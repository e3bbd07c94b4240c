//! Physical constants (SI). Every module reads from this table.

use serde::Serialize;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;
/// Bohr magneton, J/T.
pub const MU_B: f64 = 9.274_010_078_3e-24;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConstantsTable {
    pub hbar_j_s: f64,
    pub c_m_per_s: f64,
    pub mu_b_j_per_t: f64,
}

pub const TABLE: ConstantsTable = ConstantsTable {
    hbar_j_s: HBAR,
    c_m_per_s: C,
    mu_b_j_per_t: MU_B,
};
