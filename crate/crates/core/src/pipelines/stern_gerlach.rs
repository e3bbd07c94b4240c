//! Spin–motion CHSH test after a Stern-Gerlach split.

use serde::{Deserialize, Serialize};

use super::{
    check_agreement, require_non_negative, require_positive, sample_terms, MonteCarloBlock,
    MonteCarloSpec, Term, CHSH_AGREEMENT_TOL,
};
use crate::algebra::{
    chsh_analytic, chsh_threshold, chsh_value, dephase, sg_entangled_state, Axis, ChshSettings,
    PhaseWindow, Subsystem,
};
use crate::codec::{povm_pair, LocalMeasurement};
use crate::constants::HBAR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SternGerlachConfig {
    pub m: f64,
    /// Field gradient, T/m.
    pub gradient: f64,
    /// Magnetic moment, J/T.
    pub mu: f64,
    pub t_prep: f64,
    pub sigma_d: f64,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default)]
    pub window: PhaseWindow,
}

impl SternGerlachConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("m", self.m)?;
        require_positive("gradient", self.gradient)?;
        require_positive("mu", self.mu)?;
        require_positive("t_prep", self.t_prep)?;
        require_positive("sigma_d", self.sigma_d)?;
        require_non_negative("gamma", self.gamma)
    }
}

/// `a·t²` with `a = μ·∂B/∂x / m`: both branches accelerate oppositely by
/// `a/2` from rest. An order-of-magnitude model of the preparation.
pub fn sg_kinematic_separation(mu: f64, gradient: f64, m: f64, t_prep: f64) -> Result<f64> {
    if !(m > 0.0) || !(gradient >= 0.0) || !(mu >= 0.0) || !(t_prep >= 0.0) {
        return Err(Error::domain(
            "Stern-Gerlach kinematics needs m > 0 and non-negative μ, gradient, t",
        ));
    }
    Ok(mu * gradient / m * t_prep * t_prep)
}

pub fn sg_separation(config: &SternGerlachConfig) -> Result<f64> {
    config.validate()?;
    sg_kinematic_separation(config.mu, config.gradient, config.m, config.t_prep)
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshReport {
    pub separation: f64,
    pub t_xy: f64,
    pub gamma_t: f64,
    pub delta_theta: f64,
    pub g: f64,
    pub chsh_analytic: f64,
    pub chsh_matrix: f64,
    pub path_difference: f64,
    /// `S − 2`; positive values violate the classical bound.
    pub margin: f64,
    pub violates: bool,
    pub threshold_delta_theta: f64,
    pub threshold_fraction_of_two_pi: f64,
    /// `δθ_threshold − δθ`.
    pub delta_theta_budget: f64,
    pub monte_carlo: Option<MonteCarloBlock>,
}

pub fn run_sg_chsh(
    config: &SternGerlachConfig,
    monte_carlo: Option<MonteCarloSpec>,
) -> Result<ChshReport> {
    let separation = sg_separation(config)?;
    let t_xy = 2.0 * config.sigma_d * config.m * separation / HBAR;
    let gamma_t = config.gamma * t_xy;
    chsh_at(config.window, gamma_t, separation, t_xy, monte_carlo)
}

/// CHSH of the dephased spin–motion state via the matrix path, checked
/// against the closed form.
pub fn chsh_point(window: PhaseWindow, gamma_t: f64) -> Result<f64> {
    Ok(chsh_at(window, gamma_t, 0.0, 0.0, None)?.chsh_matrix)
}

pub(crate) fn chsh_at(
    window: PhaseWindow,
    gamma_t: f64,
    separation: f64,
    t_xy: f64,
    monte_carlo: Option<MonteCarloSpec>,
) -> Result<ChshReport> {
    let rho = dephase(&sg_entangled_state(), gamma_t, Subsystem::Spatial1)?;
    let settings = ChshSettings::spin_motion(window);
    let analytic = chsh_analytic(window, gamma_t)?;
    let matrix = chsh_value(&rho, &settings)?;
    let path_difference = check_agreement("chsh", analytic, matrix, CHSH_AGREEMENT_TOL)?;
    let threshold = chsh_threshold();

    let monte_carlo = match monte_carlo {
        Some(spec) => {
            let a = LocalMeasurement::projective(&settings.a)?;
            let a_prime = LocalMeasurement::projective(&settings.a_prime)?;
            let b = LocalMeasurement::from_povm(&povm_pair(Axis::X, window)?);
            let b_prime = LocalMeasurement::from_povm(&povm_pair(Axis::Y, window)?);
            let terms = [
                Term {
                    name: "ab",
                    coefficient: 1.0,
                    a: &a,
                    b: &b,
                },
                Term {
                    name: "ab'",
                    coefficient: 1.0,
                    a: &a,
                    b: &b_prime,
                },
                Term {
                    name: "a'b",
                    coefficient: 1.0,
                    a: &a_prime,
                    b: &b,
                },
                Term {
                    name: "a'b'",
                    coefficient: -1.0,
                    a: &a_prime,
                    b: &b_prime,
                },
            ];
            Some(sample_terms(&rho, 0.0, &terms, analytic, spec)?)
        }
        None => None,
    };

    Ok(ChshReport {
        separation,
        t_xy,
        gamma_t,
        delta_theta: window.delta_theta(),
        g: window.g(),
        chsh_analytic: analytic,
        chsh_matrix: matrix,
        path_difference,
        margin: analytic - 2.0,
        violates: analytic > 2.0,
        threshold_delta_theta: threshold,
        threshold_fraction_of_two_pi: threshold / (2.0 * std::f64::consts::PI),
        delta_theta_budget: threshold - window.delta_theta(),
        monte_carlo,
    })
}
