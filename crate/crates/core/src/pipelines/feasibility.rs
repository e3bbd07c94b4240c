//! Timing and resolution arithmetic for a spatial-qubit experiment.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use super::casimir::witness_window_limit;
use super::{require_non_negative, require_positive};
use crate::algebra::chsh_threshold;
use crate::codec::{delta_theta_of, DetectorSpec, EncodingSpec, Sign};
use crate::constants::HBAR;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeasibilityConfig {
    pub m: f64,
    pub sigma_d: f64,
    pub d: f64,
    pub delta_x: f64,
    #[serde(default)]
    pub delta_t: f64,
    /// Largest acceptable `σz` leakage; sets `t_z_max`.
    #[serde(default = "default_leakage_tolerance")]
    pub leakage_tolerance: f64,
    /// Phases at which to check whether the window keeps the witness negative.
    #[serde(default)]
    pub witness_phases: Option<WitnessPhases>,
    /// An externally quoted `t_xy` to compare against.
    #[serde(default)]
    pub reference_t_xy: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessPhases {
    pub dphi01: f64,
    pub dphi10: f64,
}

fn default_leakage_tolerance() -> f64 {
    1e-6
}

impl FeasibilityConfig {
    pub fn validate(&self) -> Result<()> {
        require_positive("m", self.m)?;
        require_positive("sigma_d", self.sigma_d)?;
        require_positive("d", self.d)?;
        require_positive("delta_x", self.delta_x)?;
        require_non_negative("delta_t", self.delta_t)?;
        if !(self.leakage_tolerance > 0.0 && self.leakage_tolerance < 0.5) {
            return Err(Error::config("leakage_tolerance", "must lie in (0, 0.5)"));
        }
        if let Some(t) = self.reference_t_xy {
            require_positive("reference_t_xy", t)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    /// Latest `σz` measurement time with leakage below the tolerance.
    pub t_z_max: f64,
    pub leakage_tolerance: f64,
    pub t_xy: f64,
    pub reference_t_xy: Option<f64>,
    pub t_xy_over_reference: Option<f64>,
    pub fringe_spacing: f64,
    pub fringe_spacing_over_sigma_d: f64,
    /// Window of a detector centred on `θ = 0` at `t_xy`.
    pub delta_theta: f64,
    pub chsh_threshold: f64,
    pub chsh_feasible: bool,
    pub witness_delta_theta_max: Option<f64>,
    pub witness_window_ok: Option<bool>,
}

pub fn feasibility(config: &FeasibilityConfig) -> Result<FeasibilityReport> {
    config.validate()?;
    let spec = EncodingSpec {
        d: config.d,
        sigma_d: config.sigma_d,
        mass: config.m,
        hbar: HBAR,
    };
    let t_xy = spec.overlap_time();
    let fringe_spacing = spec.fringe_period(t_xy);

    let detector =
        DetectorSpec::at_theta(0.0, t_xy, config.delta_x, config.delta_t, Sign::Plus, &spec);
    // a window of 2π or more carries no phase information; report it raw
    let delta_theta = match delta_theta_of(&detector, &spec) {
        Ok(w) => w.delta_theta(),
        Err(Error::Domain(_)) => config.m * config.d * config.delta_x / (HBAR * t_xy),
        Err(e) => return Err(e),
    };
    let threshold = chsh_threshold();

    // ε(t) = ½·erfc(d / (2√2·σ(t))) reaches the tolerance at σ* below
    let sigma_star = config.d / (2.0 * SQRT_2 * erfc_inv(2.0 * config.leakage_tolerance));
    let t_spread = 2.0 * config.m * config.sigma_d * config.sigma_d / HBAR;
    let ratio = sigma_star / config.sigma_d;
    let t_z_max = if ratio > 1.0 {
        t_spread * (ratio * ratio - 1.0).sqrt()
    } else {
        0.0
    };

    let witness_delta_theta_max = match config.witness_phases {
        Some(p) => witness_window_limit(p.dphi01, p.dphi10, 0.0)?,
        None => None,
    };
    let witness_window_ok = config
        .witness_phases
        .map(|_| witness_delta_theta_max.is_some_and(|max| delta_theta < max));

    Ok(FeasibilityReport {
        t_z_max,
        leakage_tolerance: config.leakage_tolerance,
        t_xy,
        reference_t_xy: config.reference_t_xy,
        t_xy_over_reference: config.reference_t_xy.map(|r| t_xy / r),
        fringe_spacing,
        fringe_spacing_over_sigma_d: fringe_spacing / config.sigma_d,
        delta_theta,
        chsh_threshold: threshold,
        chsh_feasible: delta_theta < threshold,
        witness_delta_theta_max,
        witness_window_ok,
    })
}
