//! Spatial-qubit encoding and time-of-flight measurement.
//!
//! `|0⟩` is the packet on the left (centre `−d/2`), `|1⟩` the one on the right
//! (`+d/2`). After free flight `t`, detecting the mass at `x` projects onto
//! `|θ⟩ ∝ |0⟩ + e^{iθ}|1⟩` with phase angle `θ = x·m·d/(ħ·t)`; a detector of
//! finite size integrates over a window of width `δθ`. Detecting the sign of
//! `x` before the packets overlap measures `σz`, with an error `ε` from the
//! packet tails.

mod sampling;

pub use sampling::{
    rng_for, sample_correlator, sample_measurements, sample_positions, write_records_csv,
    CorrelatorSampling, Estimate, LocalMeasurement, MeasurementRecord, Outcome, Sampling,
    StateInput,
};

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::algebra::{identity2, Axis, ComplexMatrix, PhaseWindow, C64};
use crate::constants::HBAR;
use crate::error::{Error, Result};
use crate::wavepacket::{GaussianPacket, SpatialState};

/// Default lower bound on `d/σ_d`.
pub const DEFAULT_MIN_SEPARATION_RATIO: f64 = 50.0;

/// Geometry of the encoding: packet separation `d`, width `σ_d` and mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodingSpec {
    pub d: f64,
    pub sigma_d: f64,
    pub mass: f64,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

fn default_hbar() -> f64 {
    HBAR
}

impl EncodingSpec {
    /// SI-unit encoding; requires `d ≥ 50·σ_d`.
    pub fn new(d: f64, sigma_d: f64, mass: f64) -> Result<Self> {
        Self::with_min_ratio(d, sigma_d, mass, DEFAULT_MIN_SEPARATION_RATIO)
    }

    pub fn with_min_ratio(d: f64, sigma_d: f64, mass: f64, min_ratio: f64) -> Result<Self> {
        let spec = Self {
            d,
            sigma_d,
            mass,
            hbar: HBAR,
        };
        spec.validate(min_ratio)?;
        Ok(spec)
    }

    /// Natural units: `σ_d = ħ = m = 1`, separation `d_over_sigma`.
    pub fn natural(d_over_sigma: f64) -> Result<Self> {
        let spec = Self {
            d: d_over_sigma,
            sigma_d: 1.0,
            mass: 1.0,
            hbar: 1.0,
        };
        spec.validate(DEFAULT_MIN_SEPARATION_RATIO)?;
        Ok(spec)
    }

    pub fn validate(&self, min_ratio: f64) -> Result<()> {
        if !(self.sigma_d > 0.0 && self.mass > 0.0 && self.hbar > 0.0) {
            return Err(Error::domain("σ_d, mass and ħ must be > 0"));
        }
        if !(self.d >= min_ratio * self.sigma_d * (1.0 - 1e-12)) {
            return Err(Error::domain(format!(
                "separation d = {:e} is below {min_ratio}·σ_d = {:e}",
                self.d,
                min_ratio * self.sigma_d
            )));
        }
        Ok(())
    }

    /// `2σ_d·m·d/ħ`, when the two packets have spread enough to interfere.
    pub fn overlap_time(&self) -> f64 {
        2.0 * self.sigma_d * self.mass * self.d / self.hbar
    }

    /// Default `σz` measurement time, a tenth of the overlap time.
    pub fn default_z_time(&self) -> f64 {
        0.1 * self.overlap_time()
    }

    /// Far-field fringe period `2πħt/(m·d)` at time `t`.
    pub fn fringe_period(&self, t: f64) -> f64 {
        2.0 * PI * self.hbar * t / (self.mass * self.d)
    }

    /// Position corresponding to phase angle `theta` at time `t`.
    pub fn x_of_theta(&self, theta: f64, t: f64) -> f64 {
        theta * self.hbar * t / (self.mass * self.d)
    }
}

/// `α|0⟩ + β|1⟩` as a two-packet state at `t = 0`.
pub fn encode(alpha: C64, beta: C64, spec: &EncodingSpec) -> Result<SpatialState> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    let left = GaussianPacket::with_units(-0.5 * spec.d, 0.0, spec.sigma_d, spec.mass, spec.hbar)?;
    let right = GaussianPacket::with_units(0.5 * spec.d, 0.0, spec.sigma_d, spec.mass, spec.hbar)?;
    // the packet overlap e^{-d²/8σ²} is absorbed by renormalizing
    SpatialState::normalized(vec![alpha, beta], vec![left, right])
}

/// `θ = x·m·d/(ħ·t)`.
pub fn theta_of_x(x: f64, t: f64, spec: &EncodingSpec) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("measurement time {t} must be > 0")));
    }
    Ok(x * spec.mass * spec.d / (spec.hbar * t))
}

/// Far-field detection density (per unit length) at the position of phase
/// angle `theta`:
/// `P ∝ exp(−2k²σ_d²)·|⟨θ|ψ⟩|²` with `k = θ/d`, normalized over the line.
pub fn detection_probability(
    alpha: C64,
    beta: C64,
    theta: f64,
    spec: &EncodingSpec,
    t: f64,
) -> Result<f64> {
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized(norm));
    }
    if !(t > 0.0) {
        return Err(Error::domain(format!("measurement time {t} must be > 0")));
    }
    let a = 2.0 * (spec.sigma_d / spec.d).powi(2);
    let envelope = (-a * theta * theta).exp();
    let amp = alpha + C64::from_polar(1.0, -theta) * beta;
    let cross = (alpha.conj() * beta).re;
    let theta_norm = (PI / a).sqrt() * (1.0 + 2.0 * cross * (-0.25 / a).exp());
    let dtheta_dx = spec.mass * spec.d / (spec.hbar * t);
    Ok(envelope * amp.norm_sqr() * dtheta_dx / theta_norm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Sign-of-position detector used before the packets overlap.
    ZDetector,
    /// Interference-plane detector at a phase angle.
    ThetaDetector,
}

/// Value a detector reports when it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A position window `[x_center ± δx/2]` opened at `t_meas ± δt/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub x_center: f64,
    pub t_meas: f64,
    pub delta_x: f64,
    pub delta_t: f64,
    pub sign: Sign,
}

impl DetectorSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_x > 0.0) {
            return Err(Error::domain("detector δx must be > 0"));
        }
        if !(self.delta_t >= 0.0) {
            return Err(Error::domain("detector δt must be >= 0"));
        }
        if self.kind == DetectorKind::ThetaDetector && !(self.t_meas > 0.0) {
            return Err(Error::domain("θ-detector needs t_meas > 0"));
        }
        if self.kind == DetectorKind::ZDetector && !(self.t_meas >= 0.0) {
            return Err(Error::domain("z-detector needs t_meas >= 0"));
        }
        Ok(())
    }

    /// θ-detector centred on phase angle `theta` at time `t`.
    pub fn at_theta(
        theta: f64,
        t: f64,
        delta_x: f64,
        delta_t: f64,
        sign: Sign,
        spec: &EncodingSpec,
    ) -> Self {
        Self {
            kind: DetectorKind::ThetaDetector,
            x_center: spec.x_of_theta(theta, t),
            t_meas: t,
            delta_x,
            delta_t,
            sign,
        }
    }

    /// Pair of θ-detectors measuring `σx` (θ = 0, π) or `σy` (θ = π/2, −π/2).
    pub fn pauli_pair(
        axis: Axis,
        t: f64,
        delta_x: f64,
        delta_t: f64,
        spec: &EncodingSpec,
    ) -> Result<[Self; 2]> {
        let (plus, minus) = pauli_angles(axis)?;
        Ok([
            Self::at_theta(plus, t, delta_x, delta_t, Sign::Plus, spec),
            Self::at_theta(minus, t, delta_x, delta_t, Sign::Minus, spec),
        ])
    }

    /// Half-line `σz` detectors: `|0⟩` side (x < 0) reports +1.
    pub fn z_pair(t: f64, spec: &EncodingSpec) -> [Self; 2] {
        let half_line = 1e3 * spec.d.max(spec.sigma_d);
        let make = |x_center: f64, sign| Self {
            kind: DetectorKind::ZDetector,
            x_center,
            t_meas: t,
            delta_x: half_line,
            delta_t: 0.0,
            sign,
        };
        [
            make(-0.5 * half_line, Sign::Plus),
            make(0.5 * half_line, Sign::Minus),
        ]
    }

    fn contains(&self, x: f64) -> bool {
        (x - self.x_center).abs() <= 0.5 * self.delta_x
    }
}

fn pauli_angles(axis: Axis) -> Result<(f64, f64)> {
    match axis {
        Axis::X => Ok((0.0, PI)),
        Axis::Y => Ok((FRAC_PI_2, -FRAC_PI_2)),
        Axis::Z => Err(Error::Unsupported(
            "σz is measured by z-detectors, not phase angles".into(),
        )),
    }
}

/// Window width `δθ = |m·d·δx/(ħt) − x·m·d·δt/(ħt²)|` of a θ-detector.
pub fn delta_theta_of(detector: &DetectorSpec, spec: &EncodingSpec) -> Result<PhaseWindow> {
    if detector.kind != DetectorKind::ThetaDetector {
        return Err(Error::Unsupported(
            "δθ is undefined for a z-detector".into(),
        ));
    }
    detector.validate()?;
    let t = detector.t_meas;
    let scale = spec.mass * spec.d / spec.hbar;
    let width =
        scale * detector.delta_x / t - detector.x_center * scale * detector.delta_t / (t * t);
    PhaseWindow::new(width.abs())
}

/// Normalized projector `|θ⟩⟨θ|` with `|θ⟩ = (|0⟩ + e^{iθ}|1⟩)/√2`.
pub fn theta_projector(theta: f64) -> ComplexMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::outer(&[h, C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, theta)])
        .expect("2-vector")
}

/// Effects of a two-detector Pauli measurement with a top-hat window.
///
/// A window of width `δθ` around `θc` yields the effect
/// `½(I + g·(cos θc σx + sin θc σy))`, which splits into an informative part
/// `g·|θc⟩⟨θc|` and an informationless part `½(1−g)·I`. `plus`/`minus` are
/// the informative parts; `miss` collects the rest, so
/// `plus + minus + miss = I` and `Tr((plus − minus)ρ) = g·Tr(σρ)`.
#[derive(Debug, Clone)]
pub struct PovmPair {
    pub plus: ComplexMatrix,
    pub minus: ComplexMatrix,
    pub miss: ComplexMatrix,
    pub window: PhaseWindow,
}

impl PovmPair {
    pub fn difference(&self) -> ComplexMatrix {
        &self.plus - &self.minus
    }

    /// Sum of all three effects (identity by construction).
    pub fn completeness(&self) -> ComplexMatrix {
        &(&self.plus + &self.minus) + &self.miss
    }
}

pub fn povm_pair(axis: Axis, window: PhaseWindow) -> Result<PovmPair> {
    let (plus_angle, minus_angle) = pauli_angles(axis)?;
    let g = window.g();
    Ok(PovmPair {
        plus: theta_projector(plus_angle).scale(g),
        minus: theta_projector(minus_angle).scale(g),
        miss: identity2().scale(1.0 - g),
        window,
    })
}

/// Sign-of-position effects with leakage `ε`.
#[derive(Debug, Clone)]
pub struct ZEffects {
    /// `x < 0`: `(1−ε)|0⟩⟨0| + ε|1⟩⟨1|`, reports +1.
    pub left: ComplexMatrix,
    /// `x > 0`: `ε|0⟩⟨0| + (1−ε)|1⟩⟨1|`, reports −1.
    pub right: ComplexMatrix,
    pub epsilon: f64,
}

impl ZEffects {
    pub fn with_epsilon(epsilon: f64) -> Self {
        let diag = |a: f64, b: f64| {
            ComplexMatrix::from_row_slice(
                2,
                &[
                    C64::new(a, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(0.0, 0.0),
                    C64::new(b, 0.0),
                ],
            )
            .expect("2x2")
        };
        Self {
            left: diag(1.0 - epsilon, epsilon),
            right: diag(epsilon, 1.0 - epsilon),
            epsilon,
        }
    }

    /// `σ̃z = left − right = (1 − 2ε)·σz`.
    pub fn sigma_z(&self) -> ComplexMatrix {
        &self.left - &self.right
    }
}

pub fn z_outcome_operators(t_z: f64, spec: &EncodingSpec) -> Result<ZEffects> {
    if !(t_z >= 0.0) {
        return Err(Error::domain(format!(
            "σz measurement time {t_z} must be >= 0"
        )));
    }
    let packet =
        GaussianPacket::with_units(-0.5 * spec.d, 0.0, spec.sigma_d, spec.mass, spec.hbar)?;
    let width = packet.evolve(t_z)?.width();
    let epsilon =
        0.5 * statrs::function::erf::erfc(0.5 * spec.d / (std::f64::consts::SQRT_2 * width));
    Ok(ZEffects::with_epsilon(epsilon))
}

/// Effect operator a single detector realizes on the qubit.
pub fn detector_effect(detector: &DetectorSpec, spec: &EncodingSpec) -> Result<ComplexMatrix> {
    detector.validate()?;
    match detector.kind {
        DetectorKind::ThetaDetector => {
            let window = delta_theta_of(detector, spec)?;
            let theta = theta_of_x(detector.x_center, detector.t_meas, spec)?;
            Ok(theta_projector(theta).scale(window.g()))
        }
        DetectorKind::ZDetector => {
            let z = z_outcome_operators(detector.t_meas, spec)?;
            let lo = detector.x_center - 0.5 * detector.delta_x;
            let hi = detector.x_center + 0.5 * detector.delta_x;
            if hi <= 0.0 {
                Ok(z.left)
            } else if lo >= 0.0 {
                Ok(z.right)
            } else {
                Err(Error::Unsupported(
                    "z-detector window must lie on one half-line".into(),
                ))
            }
        }
    }
}
