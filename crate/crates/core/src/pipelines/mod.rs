//! End-to-end experiment pipelines built on the algebra, wavepacket and
//! codec layers.

mod beam_splitter;
mod casimir;
mod evolve;
mod feasibility;
mod stern_gerlach;
mod sweep;

pub use beam_splitter::{beam_splitter_equivalence, BeamSplitterReport};
pub use casimir::{
    casimir_constant, casimir_constant_limit, casimir_phases, casimir_phases_at, implied_coupling,
    implied_epsilon_r, run_casimir_witness, witness_window_limit, CasimirConfig, CasimirPhases,
    PhaseOverride, PhaseSource, WitnessReport,
};
pub use evolve::{run_evolve, EvolveConfig, EvolveReport, EvolveRun, GridComparison, ProfileRow};
pub use feasibility::{feasibility, FeasibilityConfig, FeasibilityReport, WitnessPhases};
pub use stern_gerlach::{
    chsh_point, run_sg_chsh, sg_kinematic_separation, sg_separation, ChshReport, SternGerlachConfig,
};
pub use sweep::{
    sweep, AxisSpec, SweepAxis, SweepBase, SweepMetadata, SweepPipeline, SweepResult, SweepRow,
};

use serde::{Deserialize, Serialize};

use crate::algebra::DensityMatrix;
use crate::codec::{rng_for, sample_correlator, LocalMeasurement};
use crate::error::{Error, Result};

/// Analytic and matrix paths must agree this closely for CHSH values.
pub const CHSH_AGREEMENT_TOL: f64 = 1e-12;
/// Analytic and matrix paths must agree this closely for witness values.
pub const WITNESS_AGREEMENT_TOL: f64 = 1e-10;

/// Shot count and seed for a Monte Carlo block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    pub shots: u64,
    pub seed: u64,
}

impl MonteCarloSpec {
    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::config("shots", "must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorTerm {
    pub name: String,
    pub coefficient: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub model_mean: f64,
    pub model_std_error: f64,
}

/// Sampled linear combination of two-party correlators.
#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloBlock {
    pub shots: u64,
    pub seed: u64,
    pub terms: Vec<CorrelatorTerm>,
    pub value: f64,
    pub std_error: f64,
    pub model_std_error: f64,
    pub target: f64,
    /// `|value − target|` in units of `model_std_error`.
    pub deviation_in_std_errors: f64,
}

impl MonteCarloBlock {
    pub fn within(&self, k: f64) -> bool {
        (self.value - self.target).abs() <= k * self.model_std_error
    }
}

pub(crate) struct Term<'a> {
    pub name: &'static str,
    pub coefficient: f64,
    pub a: &'a LocalMeasurement,
    pub b: &'a LocalMeasurement,
}

/// `offset + Σ cᵢ⟨AᵢBᵢ⟩`, each correlator on its own RNG stream.
pub(crate) fn sample_terms(
    rho: &DensityMatrix,
    offset: f64,
    terms: &[Term<'_>],
    target: f64,
    spec: MonteCarloSpec,
) -> Result<MonteCarloBlock> {
    spec.validate()?;
    let mut out = Vec::with_capacity(terms.len());
    let (mut value, mut var, mut model_var) = (offset, 0.0, 0.0);
    for (stream, term) in terms.iter().enumerate() {
        let est = sample_correlator(
            rho,
            term.a,
            term.b,
            spec.shots,
            &mut rng_for(spec.seed, stream as u64),
        )?;
        value += term.coefficient * est.raw.value;
        var += (term.coefficient * est.raw.std_error).powi(2);
        model_var += (term.coefficient * est.model_std_error).powi(2);
        out.push(CorrelatorTerm {
            name: term.name.to_string(),
            coefficient: term.coefficient,
            estimate: est.raw.value,
            std_error: est.raw.std_error,
            model_mean: est.model_mean,
            model_std_error: est.model_std_error,
        });
    }
    let model_std_error = model_var.sqrt();
    let deviation = if model_std_error > 0.0 {
        (value - target).abs() / model_std_error
    } else if (value - target).abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(MonteCarloBlock {
        shots: spec.shots,
        seed: spec.seed,
        terms: out,
        value,
        std_error: var.sqrt(),
        model_std_error,
        target,
        deviation_in_std_errors: deviation,
    })
}

pub(crate) fn require_positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be a finite number > 0, got {value}"),
        ))
    }
}

pub(crate) fn require_non_negative(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(
            field,
            format!("must be a finite number >= 0, got {value}"),
        ))
    }
}

pub(crate) fn ensure(condition: bool, field: &str, message: &str) -> Result<()> {
    if condition {
        Ok(())
    } else {
        Err(Error::config(field, message))
    }
}

pub(crate) fn check_agreement(what: &str, a: f64, b: f64, tolerance: f64) -> Result<f64> {
    let diff = (a - b).abs();
    if diff > tolerance || !diff.is_finite() {
        return Err(Error::Disagreement {
            what: what.to_string(),
            diff,
            tolerance,
        });
    }
    Ok(diff)
}
