//! Casimir-Polder entangling phases and the entanglement-witness run.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{
    check_agreement, require_non_negative, require_positive, sample_terms, MonteCarloBlock,
    MonteCarloSpec, Term, WITNESS_AGREEMENT_TOL,
};
use crate::algebra::{
    casimir_entangled_state, dephase, pauli, witness_analytic, witness_matrix, Axis, PhaseWindow,
    Subsystem,
};
use crate::codec::{povm_pair, LocalMeasurement};
use crate::constants::{C, HBAR};
use crate::error::{Error, Result};

/// Two masses of radius `R` whose superposition centres sit `D` apart, each
/// split by `d`, entangling for `tau`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CasimirConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    #[serde(rename = "D")]
    pub center_separation: f64,
    pub d: f64,
    pub epsilon_r: f64,
    pub tau: f64,
    pub m: f64,
    pub sigma_d: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub window: PhaseWindow,
    /// Gap between the `σ̃z` and the `σ̃x/σ̃y` measurements.
    #[serde(default)]
    pub delay: f64,
    #[serde(default)]
    pub phase_override: Option<PhaseOverride>,
    /// Apply `e^{−γ·delay}` on top of `e^{−γτ}` for the delayed witness.
    #[serde(default)]
    pub dephase_during_delay: bool,
}

/// Relative phases fixed by hand at `reference_tau`; other times scale
/// linearly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseOverride {
    pub dphi01: f64,
    pub dphi10: f64,
    pub reference_tau: f64,
}

impl CasimirConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("R", self.radius)?;
        require_positive("D", self.center_separation)?;
        require_non_negative("d", self.d)?;
        require_positive("epsilon_r", self.epsilon_r)?;
        require_non_negative("tau", self.tau)?;
        require_positive("m", self.m)?;
        require_positive("sigma_d", self.sigma_d)?;
        require_non_negative("gamma", self.gamma)?;
        require_non_negative("delay", self.delay)?;
        if !(self.center_separation - self.d > 2.0 * self.radius) {
            return Err(Error::config(
                "D",
                format!(
                    "D − d = {:e} m must exceed 2R = {:e} m so the spheres never touch",
                    self.center_separation - self.d,
                    2.0 * self.radius
                ),
            ));
        }
        if let Some(o) = &self.phase_override {
            require_positive("phase_override.reference_tau", o.reference_tau)?;
            if !(o.dphi01.is_finite() && o.dphi10.is_finite()) {
                return Err(Error::config("phase_override", "phases must be finite"));
            }
        }
        Ok(())
    }

    /// `2σ_d·m·d/ħ`.
    pub fn overlap_time(&self) -> f64 {
        2.0 * self.sigma_d * self.m * self.d / HBAR
    }
}

/// `23c/(4π)`, the coupling of a perfect conductor.
pub fn casimir_constant_limit() -> f64 {
    23.0 * C / (4.0 * PI)
}

/// `k = (23c/4π)·((ε−1)/(ε+2))²`.
pub fn casimir_constant(epsilon_r: f64) -> Result<f64> {
    if !(epsilon_r > 0.0) {
        return Err(Error::domain(format!(
            "relative permittivity {epsilon_r} must be > 0"
        )));
    }
    if epsilon_r.is_infinite() {
        return Ok(casimir_constant_limit());
    }
    let ratio = (epsilon_r - 1.0) / (epsilon_r + 2.0);
    Ok(casimir_constant_limit() * ratio * ratio)
}

/// Inverse of [`casimir_constant`] on `ε ≥ 1`: `ε = (1 + 2s)/(1 − s)` with
/// `s = √(k/k_max)`.
pub fn implied_epsilon_r(coupling: f64) -> Result<f64> {
    if !(coupling >= 0.0) {
        return Err(Error::domain(format!("coupling {coupling} must be >= 0")));
    }
    let s = (coupling / casimir_constant_limit()).sqrt();
    if s >= 1.0 {
        return Err(Error::domain(format!(
            "coupling {coupling:e} m/s exceeds the perfect-conductor limit {:e} m/s; no permittivity reproduces it",
            casimir_constant_limit()
        )));
    }
    Ok((1.0 + 2.0 * s) / (1.0 - s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CasimirPhases {
    pub phi: f64,
    pub dphi01: f64,
    pub dphi10: f64,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseSource {
    Geometry,
    Override,
}

fn geometry_factors(config: &CasimirConfig) -> (f64, f64, f64) {
    let r6 = config.radius.powi(6);
    let dd = config.center_separation;
    (
        r6 / dd.powi(7),
        r6 / (dd + config.d).powi(7),
        r6 / (dd - config.d).powi(7),
    )
}

/// `φ = kR⁶t/D⁷`, `Δφ01 = kR⁶t/(D+d)⁷ − φ`, `Δφ10 = kR⁶t/(D−d)⁷ − φ`.
pub fn casimir_phases(config: &CasimirConfig) -> Result<CasimirPhases> {
    casimir_phases_at(config, config.tau)
}

pub fn casimir_phases_at(config: &CasimirConfig, t: f64) -> Result<CasimirPhases> {
    config.validate()?;
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time {t} must be >= 0")));
    }
    let k = casimir_constant(config.epsilon_r)?;
    let (same, far, near) = geometry_factors(config);
    let phi = k * same * t;
    match config.phase_override {
        Some(o) => {
            let scale = t / o.reference_tau;
            Ok(CasimirPhases {
                phi,
                dphi01: o.dphi01 * scale,
                dphi10: o.dphi10 * scale,
                time: t,
            })
        }
        None => Ok(CasimirPhases {
            phi,
            dphi01: k * far * t - phi,
            dphi10: k * near * t - phi,
            time: t,
        }),
    }
}

/// Coupling `k` that makes the geometry produce `dphi10` after time `t`.
pub fn implied_coupling(config: &CasimirConfig, dphi10: f64, t: f64) -> Result<f64> {
    config.validate()?;
    let (same, _, near) = geometry_factors(config);
    let per_k = (near - same) * t;
    if !(per_k > 0.0) {
        return Err(Error::domain(
            "geometry produces no relative phase (d = 0 or t = 0)",
        ));
    }
    Ok(dphi10 / per_k)
}

/// Widest window `δθ` for which `⟨W̃⟩` stays negative, if any.
pub fn witness_window_limit(dphi01: f64, dphi10: f64, gamma_t: f64) -> Result<Option<f64>> {
    let w = |dt: f64| -> Result<f64> {
        witness_analytic(dphi01, dphi10, gamma_t, PhaseWindow::new(dt)?)
    };
    if w(0.0)? >= 0.0 {
        return Ok(None);
    }
    // g decreases on [0, 2π) and the witness rises with shrinking g once
    // negative, so a single sign change is bracketed on (0, π)
    let (mut lo, mut hi) = (0.0_f64, PI);
    if w(hi)? < 0.0 {
        return Ok(Some(hi));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if w(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessReport {
    pub phase_source: PhaseSource,
    pub phases: CasimirPhases,
    /// Coupling used (geometry) or implied by the override phases.
    pub coupling_m_per_s: f64,
    pub implied_epsilon_r: Option<f64>,
    pub gamma_t: f64,
    pub delta_theta: f64,
    pub g: f64,
    pub witness_analytic: f64,
    pub witness_matrix: f64,
    pub path_difference: f64,
    pub entangled: bool,
    pub delay: f64,
    pub delayed_phases: CasimirPhases,
    pub witness_with_delay: f64,
    /// `(|W_delay| − |W|)/|W|`; absent when `W = 0`.
    pub delay_relative_change: Option<f64>,
    pub overlap_time: f64,
    pub monte_carlo: Option<MonteCarloBlock>,
}

pub fn run_casimir_witness(
    config: &CasimirConfig,
    monte_carlo: Option<MonteCarloSpec>,
) -> Result<WitnessReport> {
    config.validate()?;
    let phases = casimir_phases(config)?;
    let gamma_t = config.gamma * config.tau;
    let window = config.window;
    let analytic = witness_analytic(phases.dphi01, phases.dphi10, gamma_t, window)?;
    let matrix = witness_matrix(phases.dphi01, phases.dphi10, gamma_t, window)?;
    let path_difference = check_agreement("witness", analytic, matrix, WITNESS_AGREEMENT_TOL)?;

    let delayed = casimir_phases_at(config, config.tau + config.delay)?;
    let delayed_gamma_t = if config.dephase_during_delay {
        config.gamma * (config.tau + config.delay)
    } else {
        gamma_t
    };
    let with_delay = witness_analytic(delayed.dphi01, delayed.dphi10, delayed_gamma_t, window)?;
    let delay_relative_change =
        (analytic != 0.0).then(|| (with_delay.abs() - analytic.abs()) / analytic.abs());

    let (phase_source, coupling) = match config.phase_override {
        Some(o) => (
            PhaseSource::Override,
            implied_coupling(config, o.dphi10, o.reference_tau).ok(),
        ),
        None => (
            PhaseSource::Geometry,
            Some(casimir_constant(config.epsilon_r)?),
        ),
    };
    let coupling_m_per_s = coupling.unwrap_or(f64::NAN);
    let implied_epsilon_r = match phase_source {
        PhaseSource::Override => coupling.and_then(|k| implied_epsilon_r(k).ok()),
        PhaseSource::Geometry => Some(config.epsilon_r),
    };

    let monte_carlo = monte_carlo
        .map(|spec| {
            sample_witness(
                phases.dphi01,
                phases.dphi10,
                gamma_t,
                window,
                analytic,
                spec,
            )
        })
        .transpose()?;

    Ok(WitnessReport {
        phase_source,
        phases,
        coupling_m_per_s,
        implied_epsilon_r,
        gamma_t,
        delta_theta: window.delta_theta(),
        g: window.g(),
        witness_analytic: analytic,
        witness_matrix: matrix,
        path_difference,
        entangled: analytic < 0.0,
        delay: config.delay,
        delayed_phases: delayed,
        witness_with_delay: with_delay,
        delay_relative_change,
        overlap_time: config.overlap_time(),
        monte_carlo,
    })
}

/// `1 − ⟨σ̃x σ̃x⟩ − ⟨σz σ̃y⟩ − ⟨σ̃y σz⟩` from sampled detector outcomes.
fn sample_witness(
    dphi01: f64,
    dphi10: f64,
    gamma_t: f64,
    window: PhaseWindow,
    target: f64,
    spec: MonteCarloSpec,
) -> Result<MonteCarloBlock> {
    let rho = dephase(
        &casimir_entangled_state(dphi01, dphi10),
        gamma_t,
        Subsystem::Both,
    )?;
    let x = LocalMeasurement::from_povm(&povm_pair(Axis::X, window)?);
    let y = LocalMeasurement::from_povm(&povm_pair(Axis::Y, window)?);
    let z = LocalMeasurement::projective(&pauli(Axis::Z))?;
    let terms = [
        Term {
            name: "xx",
            coefficient: -1.0,
            a: &x,
            b: &x,
        },
        Term {
            name: "zy",
            coefficient: -1.0,
            a: &z,
            b: &y,
        },
        Term {
            name: "yz",
            coefficient: -1.0,
            a: &y,
            b: &z,
        },
    ];
    sample_terms(&rho, 1.0, &terms, target, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    pub(crate) fn reference_config() -> CasimirConfig {
        CasimirConfig {
            radius: 20e-9,
            center_separation: 3.5e-6,
            d: 50e-9,
            epsilon_r: 5.7,
            tau: 0.01,
            m: 1e-19,
            sigma_d: 1e-9,
            gamma: 0.0,
            window: PhaseWindow::SHARP,
            delay: 0.0,
            phase_override: None,
            dephase_during_delay: false,
        }
    }

    fn with_override(mut c: CasimirConfig) -> CasimirConfig {
        c.phase_override = Some(PhaseOverride {
            dphi01: -0.032,
            dphi10: 0.036,
            reference_tau: c.tau,
        });
        c
    }

    #[test]
    fn constant_examples() {
        assert_eq!(casimir_constant(1.0).unwrap(), 0.0);
        assert_relative_eq!(
            casimir_constant(f64::INFINITY).unwrap(),
            5.489e8,
            max_relative = 1e-3
        );
        assert_relative_eq!(
            casimir_constant(1e12).unwrap(),
            casimir_constant_limit(),
            max_relative = 1e-11
        );
        let k = casimir_constant(5.7).unwrap();
        assert_relative_eq!(k, 5.489e8 * (4.7f64 / 7.7).powi(2), max_relative = 1e-3);
        assert!(casimir_constant(0.0).is_err());
        for eps in [1.5, 5.7, 11.7, 1e4] {
            let k = casimir_constant(eps).unwrap();
            assert_relative_eq!(implied_epsilon_r(k).unwrap(), eps, max_relative = 1e-9);
        }
        assert!(implied_epsilon_r(casimir_constant_limit() * 1.01).is_err());
    }

    #[test]
    fn phase_examples() {
        let mut c = reference_config();
        c.d = 0.0;
        let p = casimir_phases(&c).unwrap();
        assert_eq!((p.dphi01, p.dphi10), (0.0, 0.0));

        let c = reference_config();
        let a = casimir_phases(&c).unwrap();
        let mut c2 = c.clone();
        c2.tau *= 2.0;
        let b = casimir_phases(&c2).unwrap();
        assert_relative_eq!(b.dphi01, 2.0 * a.dphi01, max_relative = 1e-14);
        assert_relative_eq!(b.dphi10, 2.0 * a.dphi10, max_relative = 1e-14);
        assert_relative_eq!(b.phi, 2.0 * a.phi, max_relative = 1e-14);
        assert!(a.dphi10 > 0.0 && a.dphi01 < 0.0);
    }

    #[test]
    fn reference_phases_need_supra_conductor_coupling() {
        let c = reference_config();
        let k = implied_coupling(&c, 0.036, c.tau).unwrap();
        assert!(k > casimir_constant_limit());
        assert!(implied_epsilon_r(k).is_err());
        // with that coupling the far branch lands near −0.032
        let (same, far, _) = geometry_factors(&c);
        assert_abs_diff_eq!(k * (far - same) * c.tau, -0.032, epsilon = 1e-3);
    }

    #[test]
    fn witness_with_reference_phases() {
        let r = run_casimir_witness(&with_override(reference_config()), None).unwrap();
        assert_abs_diff_eq!(r.witness_analytic, -0.00287, epsilon = 5e-5);
        assert!(r.path_difference <= 1e-10);
        assert!(r.entangled);
        assert_eq!(r.phase_source, PhaseSource::Override);
        assert!(r.implied_epsilon_r.is_none());
    }

    #[test]
    fn delay_penalty() {
        let mut c = with_override(reference_config());
        c.delay = 0.001;
        let r = run_casimir_witness(&c, None).unwrap();
        assert_relative_eq!(r.delayed_phases.dphi10, 1.1 * 0.036, max_relative = 1e-12);
        let change = r.delay_relative_change.unwrap();
        assert!((0.04..=0.07).contains(&change), "{change}");
    }

    #[test]
    fn dephasing_during_delay_switch() {
        let mut c = with_override(reference_config());
        c.delay = 0.001;
        c.gamma = 1.0;
        let off = run_casimir_witness(&c, None).unwrap();
        c.dephase_during_delay = true;
        let on = run_casimir_witness(&c, None).unwrap();
        assert!(on.witness_with_delay > off.witness_with_delay);
        assert_eq!(on.witness_analytic, off.witness_analytic);
    }

    #[test]
    fn fully_dephased_is_one() {
        let mut c = with_override(reference_config());
        c.gamma = 1e5;
        let r = run_casimir_witness(&c, None).unwrap();
        assert_abs_diff_eq!(r.witness_analytic, 1.0, epsilon = 1e-12);
        assert!(!r.entangled);
    }

    #[test]
    fn trivial_geometries_never_entangle() {
        let mut c = reference_config();
        c.d = 0.0;
        assert!(run_casimir_witness(&c, None).unwrap().witness_analytic >= 0.0);
        let mut c = reference_config();
        c.tau = 0.0;
        assert!(run_casimir_witness(&c, None).unwrap().witness_analytic >= 0.0);
    }

    #[test]
    fn geometry_invariant() {
        let mut c = reference_config();
        c.center_separation = 2.0 * c.radius + c.d;
        assert!(
            matches!(c.validate(), Err(Error::InvalidConfig { ref field, .. }) if field == "D")
        );
        let mut c = reference_config();
        c.m = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn window_limit_for_reference_phases() {
        let limit = witness_window_limit(-0.032, 0.036, 0.0).unwrap().unwrap();
        let g = PhaseWindow::new(limit).unwrap().g();
        assert_abs_diff_eq!(
            witness_analytic(-0.032, 0.036, 0.0, PhaseWindow::new(limit).unwrap()).unwrap(),
            0.0,
            epsilon = 1e-10
        );
        assert!(g > 0.998 && g < 0.999);
        assert!(witness_window_limit(0.0, 0.0, 0.0).unwrap().is_none());
    }

    #[test]
    fn monte_carlo_witness_is_seeded() {
        let c = with_override(reference_config());
        let spec = MonteCarloSpec {
            shots: 20_000,
            seed: 9,
        };
        let a = run_casimir_witness(&c, Some(spec))
            .unwrap()
            .monte_carlo
            .unwrap();
        let b = run_casimir_witness(&c, Some(spec))
            .unwrap()
            .monte_carlo
            .unwrap();
        assert_eq!(a.value, b.value);
        assert!(a.within(4.0), "{a:?}");
        assert_eq!(a.terms.len(), 3);
    }
}
