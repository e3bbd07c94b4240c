//! Seeded Monte Carlo sampling of detector outcomes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{detector_effect, DetectorSpec, EncodingSpec, PovmPair, ZEffects};
use crate::algebra::{identity2, ComplexMatrix, DensityMatrix};
use crate::error::{Error, Result};
use crate::format::sci;
use crate::wavepacket::SpatialState;

/// Independent ChaCha8 stream `stream` of the generator seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Plus,
    Minus,
    Miss,
}

impl Outcome {
    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
            Outcome::Miss => 0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
            Outcome::Miss => "miss",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasurementRecord {
    pub shot_index: u64,
    pub detector_id: Option<usize>,
    pub outcome: Outcome,
    /// Detection position; only wavepacket-level sampling records it.
    pub position_m: Option<f64>,
}

/// Mean of ±1/0 outcomes with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl Estimate {
    fn from_moments(sum: f64, sum_sq: f64, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum / nf;
        let var = (sum_sq / nf - mean * mean).max(0.0);
        Self {
            value: mean,
            std_error: (var / nf).sqrt(),
            samples: n,
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Either a two-level density matrix or the full two-packet wavefunction.
#[derive(Debug, Clone, Copy)]
pub enum StateInput<'a> {
    Qubit(&'a DensityMatrix),
    Wavepacket(&'a SpatialState),
}

#[derive(Debug, Clone)]
pub struct Sampling {
    pub records: Vec<MeasurementRecord>,
}

impl Sampling {
    pub fn shots(&self) -> u64 {
        self.records.len() as u64
    }

    /// `(plus, minus, miss)` counts.
    pub fn counts(&self) -> (u64, u64, u64) {
        let mut c = (0, 0, 0);
        for r in &self.records {
            match r.outcome {
                Outcome::Plus => c.0 += 1,
                Outcome::Minus => c.1 += 1,
                Outcome::Miss => c.2 += 1,
            }
        }
        c
    }

    /// `(N₊ − N₋)/N`; converges to `g·⟨σ⟩` for a window of width `δθ`.
    pub fn raw(&self) -> Result<Estimate> {
        let (p, m, _) = self.counts();
        let n = self.shots();
        if n == 0 {
            return Err(Error::EstimatorUndefined("no shots".into()));
        }
        Ok(Estimate::from_moments(
            p as f64 - m as f64,
            (p + m) as f64,
            n,
        ))
    }

    /// `(N₊ − N₋)/(N₊ + N₋)`, discarding misses.
    pub fn conditioned(&self) -> Result<Estimate> {
        let (p, m, _) = self.counts();
        if p + m == 0 {
            return Err(Error::EstimatorUndefined("no detector fired".into()));
        }
        Ok(Estimate::from_moments(
            p as f64 - m as f64,
            (p + m) as f64,
            p + m,
        ))
    }
}

fn categorical(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn outcome_of(detector: &DetectorSpec) -> Outcome {
    match detector.sign {
        super::Sign::Plus => Outcome::Plus,
        super::Sign::Minus => Outcome::Minus,
    }
}

/// Draw `shots` detection events for a set of detectors.
///
/// At the qubit level every detector is replaced by its effect operator and
/// the leftover `I − ΣE` becomes the miss outcome. At the wavepacket level the
/// detection time is drawn uniformly from the shared window `t_meas ± δt/2`
/// and the position from `|ψ(x, t)|²`; a position outside all windows is a miss.
pub fn sample_measurements(
    state: StateInput<'_>,
    detectors: &[DetectorSpec],
    spec: &EncodingSpec,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Sampling> {
    if detectors.is_empty() {
        return Err(Error::domain("at least one detector is required"));
    }
    for d in detectors {
        d.validate()?;
    }
    match state {
        StateInput::Qubit(rho) => sample_qubit(rho, detectors, spec, shots, rng),
        StateInput::Wavepacket(psi) => sample_wavepacket(psi, detectors, shots, rng),
    }
}

fn sample_qubit(
    rho: &DensityMatrix,
    detectors: &[DetectorSpec],
    spec: &EncodingSpec,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Sampling> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            actual: rho.dim(),
        });
    }
    let effects = detectors
        .iter()
        .map(|d| detector_effect(d, spec))
        .collect::<Result<Vec<_>>>()?;
    let mut remainder = identity2();
    for e in &effects {
        remainder = &remainder - e;
    }
    if remainder.hermitian_eigenvalues()[0] < -1e-12 {
        return Err(Error::domain(
            "detector effects overlap: their sum exceeds the identity",
        ));
    }
    let mut weights: Vec<f64> = effects
        .iter()
        .map(|e| trace_product(rho.matrix(), e))
        .collect();
    weights.push(trace_product(rho.matrix(), &remainder));
    let miss_index = detectors.len();
    let records = (0..shots)
        .map(|shot| {
            let k = categorical(rng, &weights);
            if k == miss_index {
                MeasurementRecord {
                    shot_index: shot,
                    detector_id: None,
                    outcome: Outcome::Miss,
                    position_m: None,
                }
            } else {
                MeasurementRecord {
                    shot_index: shot,
                    detector_id: Some(k),
                    outcome: outcome_of(&detectors[k]),
                    position_m: None,
                }
            }
        })
        .collect();
    Ok(Sampling { records })
}

fn trace_product(rho: &ComplexMatrix, effect: &ComplexMatrix) -> f64 {
    (rho * effect).trace().re.max(0.0)
}

fn sample_wavepacket(
    psi: &SpatialState,
    detectors: &[DetectorSpec],
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<Sampling> {
    let first = detectors[0];
    let shared = detectors
        .iter()
        .all(|d| d.t_meas == first.t_meas && d.delta_t == first.delta_t);
    if !shared {
        return Err(Error::Unsupported(
            "wavepacket-level sampling needs detectors sharing t_meas and δt".into(),
        ));
    }
    let mut records = Vec::with_capacity(shots as usize);
    let fixed = if first.delta_t == 0.0 {
        Some(psi.at_time(first.t_meas)?)
    } else {
        None
    };
    for shot in 0..shots {
        let x = match &fixed {
            Some(state) => draw_position(state, rng)?,
            None => {
                let t = first.t_meas + first.delta_t * (rng.random::<f64>() - 0.5);
                draw_position(&psi.at_time(t.max(0.0))?, rng)?
            }
        };
        let hit = detectors.iter().position(|d| d.contains(x));
        records.push(MeasurementRecord {
            shot_index: shot,
            detector_id: hit,
            outcome: hit.map_or(Outcome::Miss, |k| outcome_of(&detectors[k])),
            position_m: Some(x),
        });
    }
    Ok(Sampling { records })
}

/// `n` draws from `|ψ(x)|²` at the state's current time.
pub fn sample_positions(state: &SpatialState, n: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    (0..n).map(|_| draw_position(state, rng)).collect()
}

/// Rejection sampling from a Gaussian mixture envelope:
/// `|Σ cᵢψᵢ|² ≤ K·Σ|cᵢ|²|ψᵢ|²` with `K` the number of packets.
fn draw_position(state: &SpatialState, rng: &mut ChaCha8Rng) -> Result<f64> {
    let packets = state.packets();
    let coeffs = state.coefficients();
    let k = packets.len() as f64;
    let weights: Vec<f64> = packets
        .iter()
        .zip(coeffs)
        .map(|(p, c)| (c * p.amplitude()).norm_sqr())
        .collect();
    let normals = packets
        .iter()
        .map(|p| Normal::new(p.center(), p.width()).map_err(|e| Error::domain(e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..100_000 {
        let i = categorical(rng, &weights);
        let x = normals[i].sample(rng);
        let envelope: f64 = packets
            .iter()
            .zip(coeffs)
            .map(|(p, c)| (c * p.value(x)).norm_sqr())
            .sum::<f64>()
            * k;
        if rng.random::<f64>() * envelope <= state.density(x) {
            return Ok(x);
        }
    }
    Err(Error::SearchFailed(
        "position sampler rejected every proposal".into(),
    ))
}

/// One party's measurement as a list of effects with the values they report.
#[derive(Debug, Clone)]
pub struct LocalMeasurement {
    pub effects: Vec<ComplexMatrix>,
    pub values: Vec<i8>,
}

impl LocalMeasurement {
    /// Sharp measurement of a ±1-valued observable: `(I ± A)/2`.
    pub fn projective(observable: &ComplexMatrix) -> Result<Self> {
        let id = identity2();
        let m = Self {
            effects: vec![(&id + observable).scale(0.5), (&id - observable).scale(0.5)],
            values: vec![1, -1],
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_povm(pair: &PovmPair) -> Self {
        Self {
            effects: vec![pair.plus.clone(), pair.minus.clone(), pair.miss.clone()],
            values: vec![1, -1, 0],
        }
    }

    pub fn from_z(z: &ZEffects) -> Self {
        Self {
            effects: vec![z.left.clone(), z.right.clone()],
            values: vec![1, -1],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut total = ComplexMatrix::zeros(2)?;
        for e in &self.effects {
            if e.hermitian_eigenvalues()[0] < -1e-12 {
                return Err(Error::domain("effect is not positive semidefinite"));
            }
            total = &total + e;
        }
        let defect = total.max_abs_diff(&identity2());
        if defect > 1e-12 {
            return Err(Error::domain(format!(
                "effects do not sum to the identity (defect {defect:e})"
            )));
        }
        Ok(())
    }
}

/// Two-party correlator estimate `⟨A⊗B⟩` from sampled outcome pairs.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelatorSampling {
    pub shots: u64,
    /// Shots where both parties registered a ±1 outcome.
    pub coincidences: u64,
    pub raw: Estimate,
    pub conditioned: Option<Estimate>,
    /// Born-rule mean of the raw estimator.
    pub model_mean: f64,
    /// Standard error of the raw estimator implied by the Born-rule
    /// probabilities; stays meaningful when every sampled outcome agrees.
    pub model_std_error: f64,
}

impl CorrelatorSampling {
    pub fn conditioned(&self) -> Result<Estimate> {
        self.conditioned
            .ok_or_else(|| Error::EstimatorUndefined("no coincidences".into()))
    }
}

pub fn sample_correlator(
    rho: &DensityMatrix,
    a: &LocalMeasurement,
    b: &LocalMeasurement,
    shots: u64,
    rng: &mut ChaCha8Rng,
) -> Result<CorrelatorSampling> {
    if rho.dim() != 4 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            actual: rho.dim(),
        });
    }
    if shots == 0 {
        return Err(Error::EstimatorUndefined("no shots".into()));
    }
    a.validate()?;
    b.validate()?;
    let mut weights = Vec::new();
    let mut products = Vec::new();
    for (ea, va) in a.effects.iter().zip(&a.values) {
        for (eb, vb) in b.effects.iter().zip(&b.values) {
            weights.push(trace_product(rho.matrix(), &ea.kron(eb)?));
            products.push(i32::from(*va) * i32::from(*vb));
        }
    }
    let total: f64 = weights.iter().sum();
    let model_mean = weights
        .iter()
        .zip(&products)
        .map(|(w, v)| w * f64::from(*v))
        .sum::<f64>()
        / total;
    let model_sq = weights
        .iter()
        .zip(&products)
        .map(|(w, v)| w * f64::from(v * v))
        .sum::<f64>()
        / total;
    let model_std_error = ((model_sq - model_mean * model_mean).max(0.0) / shots as f64).sqrt();
    let (mut sum, mut sum_sq, mut hits) = (0.0, 0.0, 0u64);
    for _ in 0..shots {
        let v = products[categorical(rng, &weights)];
        if v != 0 {
            sum += f64::from(v);
            sum_sq += 1.0;
            hits += 1;
        }
    }
    Ok(CorrelatorSampling {
        shots,
        coincidences: hits,
        raw: Estimate::from_moments(sum, sum_sq, shots),
        conditioned: (hits > 0).then(|| Estimate::from_moments(sum, sum_sq, hits)),
        model_mean,
        model_std_error,
    })
}

/// Records as CSV with columns `shot_index,detector_id,outcome,position_m`.
pub fn write_records_csv(records: &[MeasurementRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["shot_index", "detector_id", "outcome", "position_m"])?;
    for r in records {
        w.write_record([
            r.shot_index.to_string(),
            r.detector_id.map(|d| d.to_string()).unwrap_or_default(),
            r.outcome.label().to_string(),
            r.position_m.map(sci).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
