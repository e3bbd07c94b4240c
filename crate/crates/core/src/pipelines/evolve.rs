//! Free evolution of the encoded `|0⟩ + |1⟩` state, with optional
//! comparison against the spectral grid propagator.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ensure, require_positive};
use crate::error::{Error, Result};
use crate::wavepacket::{
    first_fringe_peak, plus_state_natural, spectral_propagate, GridSpec, GridState,
    SpectralInterpolant,
};

/// Natural units throughout (`ħ = m = σ_d = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveConfig {
    /// `d/σ_d`, at least 10.
    pub d_over_sigma_d: f64,
    #[serde(default = "one")]
    pub t_over_overlap: f64,
    #[serde(default = "default_x_min")]
    pub x_min_over_sigma_d: f64,
    #[serde(default = "default_x_max")]
    pub x_max_over_sigma_d: f64,
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub grid_oracle: bool,
}

fn one() -> f64 {
    1.0
}
fn default_x_min() -> f64 {
    -40.0
}
fn default_x_max() -> f64 {
    40.0
}
fn default_points() -> usize {
    801
}

impl EvolveConfig {
    pub fn new(d_over_sigma_d: f64) -> Self {
        Self {
            d_over_sigma_d,
            t_over_overlap: 1.0,
            x_min_over_sigma_d: default_x_min(),
            x_max_over_sigma_d: default_x_max(),
            points: default_points(),
            grid_oracle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("d_over_sigma_d", self.d_over_sigma_d)?;
        ensure(
            self.d_over_sigma_d >= 10.0,
            "d_over_sigma_d",
            "fringe analysis needs d ≥ 10·σ_d",
        )?;
        require_positive("t_over_overlap", self.t_over_overlap)?;
        ensure(
            self.x_min_over_sigma_d.is_finite()
                && self.x_max_over_sigma_d.is_finite()
                && self.x_max_over_sigma_d > self.x_min_over_sigma_d,
            "x_max_over_sigma_d",
            "profile range must be finite with x_max > x_min",
        )?;
        ensure(
            (2..=1_000_000).contains(&self.points),
            "points",
            "must lie in [2, 1e6]",
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileRow {
    pub x_over_sigma_d: f64,
    pub probability_density: f64,
    pub grid_probability_density: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridComparison {
    pub points: usize,
    pub extent_over_sigma_d: f64,
    /// `max |ρ_grid − ρ| / max ρ` over the profile.
    pub max_relative_density_difference: f64,
    pub l2_distance: f64,
    pub grid_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolveReport {
    pub d_over_sigma_d: f64,
    pub t_over_overlap: f64,
    pub norm: f64,
    pub first_peak_over_sigma_d: f64,
    /// `θ = 2π` position `4π·t/t_overlap`.
    pub far_field_peak_over_sigma_d: f64,
    /// `1 − |peak − far_field| / far_field`.
    pub far_field_accuracy: f64,
    pub grid: Option<GridComparison>,
}

#[derive(Debug, Clone)]
pub struct EvolveRun {
    pub report: EvolveReport,
    pub profile: Vec<ProfileRow>,
}

pub fn run_evolve(config: &EvolveConfig) -> Result<EvolveRun> {
    config.validate()?;
    let d = config.d_over_sigma_d;
    let t = config.t_over_overlap * 2.0 * d;
    let initial = plus_state_natural(d)?;
    let state = initial.at_time(t)?;
    let peak = first_fringe_peak(&initial, t)?;
    let far = 4.0 * PI * config.t_over_overlap;

    let n = config.points;
    let step = (config.x_max_over_sigma_d - config.x_min_over_sigma_d) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n)
        .map(|i| config.x_min_over_sigma_d + i as f64 * step)
        .collect();
    let densities: Vec<f64> = xs.iter().map(|&x| state.density(x)).collect();

    let (grid, grid_densities) = if config.grid_oracle {
        let spec = GridSpec::for_scales(state.packets()[0].width(), d);
        let grid0 = GridState::from_state(&initial, spec)?;
        let evolved = spectral_propagate(&grid0, t)?;
        let interp = SpectralInterpolant::new(&evolved);
        let grid_rho: Vec<f64> = xs.iter().map(|&x| interp.value(x).norm_sqr()).collect();
        let peak_rho = densities.iter().cloned().fold(0.0, f64::max);
        let max_diff = grid_rho
            .iter()
            .zip(&densities)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let comparison = GridComparison {
            points: spec.points,
            extent_over_sigma_d: spec.extent,
            max_relative_density_difference: if peak_rho > 0.0 {
                max_diff / peak_rho
            } else {
                max_diff
            },
            l2_distance: evolved.l2_distance(&initial)?,
            grid_norm: evolved.norm(),
        };
        (Some(comparison), Some(grid_rho))
    } else {
        (None, None)
    };

    let profile = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| ProfileRow {
            x_over_sigma_d: x,
            probability_density: densities[i],
            grid_probability_density: grid_densities.as_ref().map(|g| g[i]),
        })
        .collect();

    let norm = state.norm()?;
    if !norm.is_finite() {
        return Err(Error::domain("state norm is not finite"));
    }
    Ok(EvolveRun {
        report: EvolveReport {
            d_over_sigma_d: d,
            t_over_overlap: config.t_over_overlap,
            norm,
            first_peak_over_sigma_d: peak,
            far_field_peak_over_sigma_d: far,
            far_field_accuracy: 1.0 - (peak - far).abs() / far,
            grid,
        },
        profile,
    })
}
