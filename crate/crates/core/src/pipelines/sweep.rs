//! Grid sweeps of a pipeline metric over one or two config parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::casimir::{casimir_phases, run_casimir_witness, CasimirConfig};
use super::feasibility::{feasibility, FeasibilityConfig};
use super::stern_gerlach::{run_sg_chsh, SternGerlachConfig};
use crate::error::{Error, Result};

pub const MAX_AXES: usize = 2;
pub const MAX_AXIS_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepPipeline {
    Chsh,
    Witness,
    Feasibility,
}

impl SweepPipeline {
    pub fn metric_name(self) -> &'static str {
        match self {
            SweepPipeline::Chsh => "chsh_value",
            SweepPipeline::Witness => "witness",
            SweepPipeline::Feasibility => "delta_theta_rad",
        }
    }

    pub fn aux_names(self) -> &'static [&'static str] {
        match self {
            SweepPipeline::Chsh => &["delta_theta_rad", "gamma_t"],
            SweepPipeline::Witness => &["tau_s", "dphi01_rad", "dphi10_rad", "gamma_t"],
            SweepPipeline::Feasibility => &["t_xy_s", "chsh_feasible"],
        }
    }
}

/// The config every grid point starts from.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepBase {
    Chsh(SternGerlachConfig),
    Witness(CasimirConfig),
    Feasibility(FeasibilityConfig),
}

impl SweepBase {
    pub fn pipeline(&self) -> SweepPipeline {
        match self {
            SweepBase::Chsh(_) => SweepPipeline::Chsh,
            SweepBase::Witness(_) => SweepPipeline::Witness,
            SweepBase::Feasibility(_) => SweepPipeline::Feasibility,
        }
    }

    fn to_value(&self) -> Result<Value> {
        Ok(match self {
            SweepBase::Chsh(c) => serde_json::to_value(c)?,
            SweepBase::Witness(c) => serde_json::to_value(c)?,
            SweepBase::Feasibility(c) => serde_json::to_value(c)?,
        })
    }
}

/// Axis as written in a config: explicit `values`, or `start`/`stop`/`steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub name: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub stop: Option<f64>,
    #[serde(default)]
    pub steps: Option<usize>,
}

impl AxisSpec {
    pub fn to_axis(&self) -> Result<SweepAxis> {
        match (&self.values, self.start, self.stop, self.steps) {
            (Some(v), None, None, None) => SweepAxis::new(&self.name, v.clone()),
            (None, Some(a), Some(b), Some(n)) => SweepAxis::linspace(&self.name, a, b, n),
            _ => Err(Error::config(
                format!("axes.{}", self.name),
                "give either `values` or all of `start`, `stop`, `steps`",
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepAxis {
    pub name: String,
    pub values: Vec<f64>,
}

impl SweepAxis {
    pub fn new(name: &str, values: Vec<f64>) -> Result<Self> {
        let field = format!("axes.{name}");
        if values.is_empty() || values.len() > MAX_AXIS_POINTS {
            return Err(Error::config(
                field,
                format!("needs 1 to {MAX_AXIS_POINTS} values"),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::config(field, "values must be finite"));
        }
        Ok(Self {
            name: name.to_string(),
            values,
        })
    }

    /// `steps` evenly spaced values from `start` to `stop` inclusive.
    pub fn linspace(name: &str, start: f64, stop: f64, steps: usize) -> Result<Self> {
        let values = match steps {
            0 => Vec::new(),
            1 => vec![start],
            n => (0..n)
                .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self::new(name, values)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub coordinates: Vec<f64>,
    pub metric: Option<f64>,
    pub aux: Option<Vec<f64>>,
    /// Why the point was skipped, when its config was invalid or the
    /// pipeline failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepMetadata {
    pub base_config: Value,
    pub code_version: String,
}

/// Row-major table over the axis grid; the first axis varies slowest.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub pipeline: SweepPipeline,
    pub axes: Vec<SweepAxis>,
    pub metric_name: String,
    pub aux_names: Vec<String>,
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn axis_names(&self) -> Vec<&str> {
        self.axes.iter().map(|a| a.name.as_str()).collect()
    }

    pub fn flagged(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Metric at the grid point with the given named coordinates.
    pub fn value_at(&self, coordinates: &[(&str, f64)]) -> Option<f64> {
        let want: Vec<f64> = self
            .axes
            .iter()
            .map(|a| {
                coordinates
                    .iter()
                    .find(|(n, _)| *n == a.name)
                    .map(|(_, v)| *v)
            })
            .collect::<Option<_>>()?;
        self.rows
            .iter()
            .find(|r| r.coordinates == want)
            .and_then(|r| r.metric)
    }

    /// Axis positions where the metric crosses `level`, by linear
    /// interpolation between neighbouring valid points. One-axis sweeps only.
    pub fn crossings(&self, level: f64) -> Result<Vec<f64>> {
        if self.axes.len() != 1 {
            return Err(Error::Unsupported("crossings need exactly one axis".into()));
        }
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter_map(|r| r.metric.map(|m| (r.coordinates[0], m - level)))
            .collect();
        let mut out = Vec::new();
        for w in points.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if y0 == 0.0 {
                out.push(x0);
            } else if y0 * y1 < 0.0 {
                out.push(x0 + (x1 - x0) * y0 / (y0 - y1));
            }
        }
        if let Some(&(x, y)) = points.last() {
            if y == 0.0 {
                out.push(x);
            }
        }
        Ok(out)
    }
}

fn set_path(root: &mut Value, path: &str, value: f64) -> Result<()> {
    let mut cursor = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cursor.as_object_mut().ok_or_else(|| {
            Error::config(format!("axes.{path}"), "does not name a config parameter")
        })?;
        let slot = obj.get_mut(*part).ok_or_else(|| {
            Error::config(format!("axes.{path}"), "does not name a config parameter")
        })?;
        if i + 1 == parts.len() {
            if !(slot.is_number() || slot.is_null()) {
                return Err(Error::config(
                    format!("axes.{path}"),
                    "is not a numeric parameter",
                ));
            }
            *slot = serde_json::Number::from_f64(value)
                .map(Value::Number)
                .ok_or_else(|| Error::config(format!("axes.{path}"), "value must be finite"))?;
            return Ok(());
        }
        cursor = slot;
    }
    unreachable!("split yields at least one part")
}

fn evaluate(pipeline: SweepPipeline, config: Value) -> Result<(f64, Vec<f64>)> {
    match pipeline {
        SweepPipeline::Chsh => {
            let c: SternGerlachConfig = serde_json::from_value(config)?;
            let r = run_sg_chsh(&c, None)?;
            Ok((r.chsh_matrix, vec![r.delta_theta, r.gamma_t]))
        }
        SweepPipeline::Witness => {
            let c: CasimirConfig = serde_json::from_value(config)?;
            let p = casimir_phases(&c)?;
            let r = run_casimir_witness(&c, None)?;
            Ok((
                r.witness_analytic,
                vec![c.tau, p.dphi01, p.dphi10, r.gamma_t],
            ))
        }
        SweepPipeline::Feasibility => {
            let c: FeasibilityConfig = serde_json::from_value(config)?;
            let r = feasibility(&c)?;
            Ok((
                r.delta_theta,
                vec![r.t_xy, f64::from(u8::from(r.chsh_feasible))],
            ))
        }
    }
}

/// Evaluates the pipeline metric on every grid point. Invalid points are
/// flagged in their row and the sweep continues. `threads` caps the worker
/// pool; `None` uses the global pool.
pub fn sweep(base: &SweepBase, axes: &[SweepAxis], threads: Option<usize>) -> Result<SweepResult> {
    if axes.len() > MAX_AXES {
        return Err(Error::config(
            "axes",
            format!("at most {MAX_AXES} axes are supported"),
        ));
    }
    if axes.len() == 2 && axes[0].name == axes[1].name {
        return Err(Error::config("axes", "axis names must differ"));
    }
    let base_value = base.to_value()?;
    for axis in axes {
        let mut probe = base_value.clone();
        set_path(&mut probe, &axis.name, axis.values[0])?;
    }

    let grid: Vec<Vec<f64>> = match axes {
        [] => vec![Vec::new()],
        [a] => a.values.iter().map(|&v| vec![v]).collect(),
        [a, b] => a
            .values
            .iter()
            .flat_map(|&u| b.values.iter().map(move |&v| vec![u, v]))
            .collect(),
        _ => unreachable!("axis count checked above"),
    };

    let pipeline = base.pipeline();
    let run_point = |coords: &Vec<f64>| -> SweepRow {
        let mut cfg = base_value.clone();
        let outcome = axes
            .iter()
            .zip(coords)
            .try_for_each(|(axis, &v)| set_path(&mut cfg, &axis.name, v))
            .and_then(|_| evaluate(pipeline, cfg));
        match outcome {
            Ok((metric, aux)) => SweepRow {
                coordinates: coords.clone(),
                metric: Some(metric),
                aux: Some(aux),
                error: None,
            },
            Err(e) => SweepRow {
                coordinates: coords.clone(),
                metric: None,
                aux: None,
                error: Some(e.to_string()),
            },
        }
    };

    let rows: Vec<SweepRow> = match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Unsupported(format!("thread pool: {e}")))?
            .install(|| grid.par_iter().map(run_point).collect()),
        None => grid.par_iter().map(run_point).collect(),
    };

    Ok(SweepResult {
        pipeline,
        axes: axes.to_vec(),
        metric_name: pipeline.metric_name().to_string(),
        aux_names: pipeline.aux_names().iter().map(|s| s.to_string()).collect(),
        rows,
        metadata: SweepMetadata {
            base_config: base_value,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{chsh_threshold, PhaseWindow};
    use crate::constants::MU_B;
    use crate::pipelines::PhaseOverride;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn sg() -> SternGerlachConfig {
        SternGerlachConfig {
            m: 1e-19,
            gradient: 1e5,
            mu: 2.0 * MU_B,
            t_prep: 50e-6,
            sigma_d: 1e-10,
            gamma: 0.0,
            window: PhaseWindow::SHARP,
        }
    }

    fn casimir() -> CasimirConfig {
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
            phase_override: Some(PhaseOverride {
                dphi01: -0.032,
                dphi10: 0.036,
                reference_tau: 0.01,
            }),
            dephase_during_delay: false,
        }
    }

    #[test]
    fn chsh_sweep_crosses_two_at_threshold() {
        let axis = SweepAxis::linspace("window", 0.0, PI, 512).unwrap();
        let r = sweep(&SweepBase::Chsh(sg()), &[axis], Some(2)).unwrap();
        assert_eq!(r.rows.len(), 512);
        let metrics: Vec<f64> = r.rows.iter().map(|row| row.metric.unwrap()).collect();
        assert!(metrics.windows(2).all(|w| w[1] < w[0]));
        let cross = r.crossings(2.0).unwrap();
        assert_eq!(cross.len(), 1);
        assert_abs_diff_eq!(cross[0], chsh_threshold(), epsilon = 1e-3);
    }

    #[test]
    fn witness_sweep_over_tau_changes_sign() {
        let axis = SweepAxis::linspace("tau", 0.001, 0.06, 60).unwrap();
        let mut base = casimir();
        base.phase_override = base.phase_override.map(|o| PhaseOverride {
            reference_tau: 0.01,
            ..o
        });
        let r = sweep(&SweepBase::Witness(base), &[axis], None).unwrap();
        let cross = r.crossings(0.0).unwrap();
        assert_eq!(cross.len(), 1);
        assert!(cross[0] > 0.02 && cross[0] < 0.05, "{cross:?}");
    }

    #[test]
    fn no_axes_single_point() {
        let r = sweep(&SweepBase::Chsh(sg()), &[], None).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_abs_diff_eq!(
            r.rows[0].metric.unwrap(),
            2.0 * 2f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn invalid_points_are_flagged() {
        let axis = SweepAxis::new("m", vec![1e-19, 0.0, 2e-19]).unwrap();
        let r = sweep(&SweepBase::Chsh(sg()), &[axis], None).unwrap();
        assert_eq!(r.flagged(), 1);
        assert!(r.rows[1].error.as_ref().unwrap().contains('m'));
        assert!(r.rows[0].metric.is_some() && r.rows[2].metric.is_some());
    }

    #[test]
    fn axis_order_is_a_transpose() {
        let a = SweepAxis::linspace("window", 0.0, 2.0, 5).unwrap();
        let b = SweepAxis::linspace("gamma", 0.0, 50.0, 4).unwrap();
        let ab = sweep(&SweepBase::Chsh(sg()), &[a.clone(), b.clone()], None).unwrap();
        let ba = sweep(&SweepBase::Chsh(sg()), &[b.clone(), a.clone()], None).unwrap();
        for &u in &a.values {
            for &v in &b.values {
                let key = [("window", u), ("gamma", v)];
                assert_eq!(ab.value_at(&key), ba.value_at(&key));
                assert!(ab.value_at(&key).is_some());
            }
        }
    }

    #[test]
    fn unknown_axis_rejected() {
        let axis = SweepAxis::new("warp_factor", vec![1.0]).unwrap();
        assert!(matches!(
            sweep(&SweepBase::Chsh(sg()), &[axis], None),
            Err(Error::InvalidConfig { .. })
        ));
        let axis = SweepAxis::new("phase_override.dphi10", vec![0.01, 0.02]).unwrap();
        assert!(sweep(&SweepBase::Witness(casimir()), &[axis], None).is_ok());
    }

    #[test]
    fn axis_spec_forms() {
        let spec: AxisSpec =
            serde_json::from_str(r#"{"name":"tau","start":0,"stop":1,"steps":3}"#).unwrap();
        assert_eq!(spec.to_axis().unwrap().values, vec![0.0, 0.5, 1.0]);
        let spec: AxisSpec = serde_json::from_str(r#"{"name":"tau","values":[0.1]}"#).unwrap();
        assert_eq!(spec.to_axis().unwrap().values, vec![0.1]);
        let spec: AxisSpec =
            serde_json::from_str(r#"{"name":"tau","values":[0.1],"steps":2}"#).unwrap();
        assert!(spec.to_axis().is_err());
        assert!(SweepAxis::linspace("tau", 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let axis = SweepAxis::linspace("window", 0.0, 3.0, 64).unwrap();
        let one = sweep(&SweepBase::Chsh(sg()), std::slice::from_ref(&axis), Some(1)).unwrap();
        let four = sweep(&SweepBase::Chsh(sg()), &[axis], Some(4)).unwrap();
        assert_eq!(one.rows, four.rows);
    }
}
