//! A pair of phase-angle detectors viewed as a beam splitter.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::Serialize;

use crate::algebra::{ComplexMatrix, C64};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct BeamSplitterReport {
    pub theta_pair: [f64; 2],
    /// Rows `⟨θᵢ| = (⟨0| + e^{−iθᵢ}⟨1|)/√2` as `[re, im]` pairs.
    pub matrix: [[[f64; 2]; 2]; 2],
    /// `max |UU† − I|`.
    pub unitarity_defect: f64,
    /// `|⟨θ₀|θ₁⟩|`.
    pub row_overlap: f64,
    /// Distance to `(1/√2)[[1, i], [1, −i]]` up to row phases and row order.
    pub distance_to_phase_shifted_splitter: f64,
    /// Distance to the Hadamard matrix up to row phases and row order.
    pub distance_to_hadamard: f64,
}

fn rows(theta0: f64, theta1: f64) -> [[C64; 2]; 2] {
    let row = |t: f64| {
        [
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::from_polar(FRAC_1_SQRT_2, -t),
        ]
    };
    [row(theta0), row(theta1)]
}

/// Max entry distance between `m` and `reference` once each row of `m` is
/// rotated by its best-fitting global phase, minimized over the two row
/// orders of `m`.
fn distance_up_to_row_phases(m: &[[C64; 2]; 2], reference: &[[C64; 2]; 2]) -> f64 {
    let swapped = [m[1], m[0]];
    ordered_distance(m, reference).min(ordered_distance(&swapped, reference))
}

fn ordered_distance(m: &[[C64; 2]; 2], reference: &[[C64; 2]; 2]) -> f64 {
    m.iter()
        .zip(reference)
        .map(|(row, target)| {
            let overlap: C64 = row.iter().zip(target).map(|(a, b)| b * a.conj()).sum();
            let phase = if overlap.norm() > 0.0 {
                overlap / overlap.norm()
            } else {
                C64::new(1.0, 0.0)
            };
            row.iter()
                .zip(target)
                .map(|(a, b)| (a * phase - b).norm())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

pub fn beam_splitter_equivalence(theta0: f64, theta1: f64) -> Result<BeamSplitterReport> {
    if !(theta0.is_finite() && theta1.is_finite()) {
        return Err(Error::domain("angles must be finite"));
    }
    if (C64::from_polar(1.0, theta0) - C64::from_polar(1.0, theta1)).norm() < 1e-12 {
        return Err(Error::domain(format!(
            "angles {theta0} and {theta1} coincide modulo 2π; the transformation is singular"
        )));
    }
    let m = rows(theta0, theta1);
    let u = ComplexMatrix::from_row_slice(2, &[m[0][0], m[0][1], m[1][0], m[1][1]])?;
    let unitarity_defect = (&u * &u.adjoint()).max_abs_diff(&ComplexMatrix::identity(2)?);
    let row_overlap = (m[0][0] * m[1][0].conj() + m[0][1] * m[1][1].conj()).norm();

    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let ih = C64::new(0.0, FRAC_1_SQRT_2);
    let splitter = [[h, ih], [h, -ih]];
    let hadamard = [[h, h], [h, -h]];

    let as_pairs = |z: C64| [z.re, z.im];
    Ok(BeamSplitterReport {
        theta_pair: [theta0, theta1],
        matrix: [
            [as_pairs(m[0][0]), as_pairs(m[0][1])],
            [as_pairs(m[1][0]), as_pairs(m[1][1])],
        ],
        unitarity_defect,
        row_overlap,
        distance_to_phase_shifted_splitter: distance_up_to_row_phases(&m, &splitter),
        distance_to_hadamard: distance_up_to_row_phases(&m, &hadamard),
    })
}
