//! Weighted nonlinear least-squares recovery of model parameters from
//! Zeeman, Stark and stress line data.

pub mod dataset;
pub mod lm;
pub mod problem;

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelParams;

pub use dataset::{DataPoint, DatasetKind, DatasetMeta, SpectralDataset};
pub use problem::{
    model_parameter, predict, set_model_parameter, synthesize, Assignment, DatasetAdjust,
    FitProblem, FreeParameter, ParamKey, Prediction, MODEL_PARAMETERS,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedParameter {
    pub name: String,
    pub value: f64,
    /// One standard deviation; `None` when the Jacobian is singular.
    pub sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best: Vec<FittedParameter>,
    pub objective: f64,
    pub residual_rms: f64,
    pub reduced_chi_square: f64,
    pub n_points: usize,
    pub n_evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Index of the start that won (0 is the configured start).
    pub start_index: usize,
    /// Which predicted line each point was compared with.
    pub assignments: Vec<Assignment>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FittedParameter> {
        self.best.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.get(name).map(|p| p.value)
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|p| p.sigma)
    }

    pub fn values(&self) -> Vec<f64> {
        self.best.iter().map(|p| p.value).collect()
    }
}

/// Runs the bounded local fit from the configured start and every seed,
/// keeping the lowest objective (earliest start on ties).
pub fn fit(problem: &FitProblem) -> Result<FitResult> {
    let lower: Vec<f64> = problem.free.iter().map(|f| f.lower).collect();
    let upper: Vec<f64> = problem.free.iter().map(|f| f.upper).collect();
    let bounds = lm::Bounds {
        lower: &lower,
        upper: &upper,
    };
    let residuals = |x: &[f64]| problem.residuals(x);
    let mut starts = vec![problem.start()];
    starts.extend(problem.seeds.iter().cloned());

    let outcomes: Vec<Result<lm::LmOutcome>> = starts
        .par_iter()
        .map(|s| lm::minimize(&residuals, s, &bounds, problem.max_iterations))
        .collect();
    let mut best: Option<(usize, lm::LmOutcome)> = None;
    let mut total_evals = 0;
    for (i, o) in outcomes.into_iter().enumerate() {
        let o = o?;
        total_evals += o.evaluations;
        if best.as_ref().is_none_or(|(_, b)| o.objective < b.objective) {
            best = Some((i, o));
        }
    }
    let (start_index, out) = best.expect("at least one start");

    let n_points = out.residuals.len();
    let dof = n_points.saturating_sub(problem.n_free());
    let reduced = if dof > 0 {
        out.objective / dof as f64
    } else {
        f64::NAN
    };
    let cov = lm::covariance(&out.jacobian, if dof > 0 { reduced } else { 1.0 });
    let best = problem
        .free
        .iter()
        .enumerate()
        .map(|(j, f)| FittedParameter {
            name: f.name.clone(),
            value: out.x[j],
            sigma: cov.as_ref().map(|c| c[(j, j)].max(0.0).sqrt()),
        })
        .collect();
    Ok(FitResult {
        best,
        objective: out.objective,
        residual_rms: (out.objective / n_points.max(1) as f64).sqrt(),
        reduced_chi_square: reduced,
        n_points,
        n_evaluations: total_evals,
        iterations: out.iterations,
        converged: out.converged,
        start_index,
        assignments: problem.assignments(&out.x)?,
    })
}

/// One dataset entry of a fit configuration. Points come from `path`
/// (CSV, relative to the config file) unless supplied separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub kind: DatasetKind,
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub meta: DatasetMeta,
    #[serde(default)]
    pub weight: Option<f64>,
}

/// JSON fit configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    pub datasets: Vec<DatasetSpec>,
    pub free: Vec<FreeParameter>,
    /// Values for everything not freed; defaults if absent.
    #[serde(default)]
    pub params: Option<ModelParams>,
    #[serde(default)]
    pub seeds: Vec<Vec<f64>>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
}

impl FitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the problem. `data_paths`, when non-empty, replaces the
    /// configured paths in order; relative config paths resolve against
    /// `base_dir`.
    pub fn build(&self, base_dir: &Path, data_paths: &[PathBuf]) -> Result<FitProblem> {
        if !data_paths.is_empty() && data_paths.len() != self.datasets.len() {
            return Err(Error::InvalidProblem(format!(
                "{} data files given for {} datasets",
                data_paths.len(),
                self.datasets.len()
            )));
        }
        // reject bad names before reading any data
        for f in &self.free {
            ParamKey::parse(&f.name)?;
        }
        let mut datasets = Vec::with_capacity(self.datasets.len());
        for (i, spec) in self.datasets.iter().enumerate() {
            let path = match data_paths.get(i) {
                Some(p) => p.clone(),
                None => {
                    let p = spec
                        .path
                        .as_ref()
                        .ok_or_else(|| Error::InvalidProblem(format!("dataset {i} has no path")))?;
                    if p.is_absolute() {
                        p.clone()
                    } else {
                        base_dir.join(p)
                    }
                }
            };
            let mut ds = SpectralDataset::new(
                spec.kind,
                SpectralDataset::read_points_from_path(&path)?,
                spec.meta.clone(),
            );
            if let Some(w) = spec.weight {
                ds.weight = w;
            }
            datasets.push(ds);
        }
        let mut problem = FitProblem::new(
            datasets,
            self.free.clone(),
            self.params.clone().unwrap_or_default(),
        )?
        .with_seeds(self.seeds.clone())?;
        if let Some(m) = self.max_iterations {
            problem.max_iterations = m;
        }
        Ok(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stark_problem(truth: &ModelParams, free: Vec<FreeParameter>) -> FitProblem {
        let mut points = Vec::new();
        let set = crate::symmetry::enumerate_orientations();
        let meta = DatasetMeta {
            direction: Some([1.0, 1.0, 0.0]),
            ..DatasetMeta::default()
        };
        let mut ds = SpectralDataset::new(DatasetKind::StarkSweep, vec![], meta);
        for f in set.unprimed() {
            for k in 1..=5 {
                let pt = DataPoint {
                    control: 2.5e4 * k as f64,
                    observed: 0.0,
                    sigma: 1e7,
                    tag: Some(f.label.clone()),
                };
                let v = predict(&ds, &pt, truth, &DatasetAdjust::default())
                    .unwrap()
                    .value;
                points.push(DataPoint { observed: v, ..pt });
            }
        }
        ds.points = points;
        FitProblem::new(vec![ds], free, truth.clone()).unwrap()
    }

    #[test]
    fn objective_zero_at_truth_and_scaling() {
        let truth = ModelParams::default();
        let pr = stark_problem(
            &truth,
            vec![FreeParameter {
                name: "A_X".into(),
                start: truth.a_x,
                lower: 0.0,
                upper: 1e4,
            }],
        );
        assert!(pr.objective(&[truth.a_x]).unwrap() <= 1e-16);
        let f1 = pr.objective(&[truth.a_x * 1.01]).unwrap();
        assert!(f1 > 0.0);

        let mut doubled = pr.clone();
        doubled.datasets[0]
            .points
            .iter_mut()
            .for_each(|p| p.sigma *= 2.0);
        let f2 = doubled.objective(&[truth.a_x * 1.01]).unwrap();
        assert!((f2 - f1 / 4.0).abs() <= 1e-12 * f1);

        let mut shuffled = pr.clone();
        shuffled.datasets[0].points.reverse();
        let f3 = shuffled.objective(&[truth.a_x * 1.01]).unwrap();
        assert!((f3 - f1).abs() <= 1e-12 * f1);
    }

    #[test]
    fn linear_stark_recovery() {
        let truth = ModelParams::default();
        let fp = |name: &str, start: f64| FreeParameter {
            name: name.into(),
            start,
            lower: 0.0,
            upper: 2e4,
        };
        let pr = stark_problem(&truth, vec![fp("A_X", 3000.0), fp("A_Y", 8000.0)]);
        let r = fit(&pr).unwrap();
        assert!(r.converged);
        assert!((r.value("A_X").unwrap() / truth.a_x - 1.0).abs() < 1e-6);
        assert!((r.value("A_Y").unwrap() / truth.a_y - 1.0).abs() < 1e-6);
        assert!(r.sigma("A_X").is_some());
    }

    #[test]
    fn unidentifiable_parameter_has_no_sigma() {
        // g1 does not enter Stark data
        let truth = ModelParams::default();
        let pr = stark_problem(
            &truth,
            vec![
                FreeParameter {
                    name: "A_X".into(),
                    start: 3000.0,
                    lower: 0.0,
                    upper: 1e4,
                },
                FreeParameter {
                    name: "g1".into(),
                    start: 1.0,
                    lower: 0.0,
                    upper: 3.0,
                },
            ],
        );
        let r = fit(&pr).unwrap();
        assert!(r.sigma("g1").is_none());
    }

    #[test]
    fn config_rejects_unknown_keys_and_names() {
        let bad_key = r#"{"datasets": [], "free": [], "bogus": 1}"#;
        assert!(FitConfig::from_json(bad_key).is_err());
        let bad_name = r#"{"datasets": [{"kind": "stark_sweep", "path": "/nonexistent.csv"}],
                          "free": [{"name": "g9", "start": 1.0}]}"#;
        let cfg = FitConfig::from_json(bad_name).unwrap();
        // fails on the name, not on the missing file
        assert!(matches!(
            cfg.build(Path::new("."), &[]),
            Err(Error::UnknownParameter(_))
        ));
    }
}
