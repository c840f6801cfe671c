//! Free parameters, model prediction and the weighted objective.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elasticity::StressTensor;
use crate::error::{Error, Result};
use crate::hamiltonian::{stark_shift_linear, stark_shift_quadratic, FieldConfig, ModelParams};
use crate::numerics::{scale, SymmetricTensor3, Vec3};
use crate::spectra::{
    great_circle, misaligned_direction, transition_set_with_reference, tx_levels_with_reference,
    zero_field_tx0_level, LineName,
};
use crate::symmetry::{enumerate_orientations, field_transform, OrientationSet};

use super::dataset::{DataPoint, DatasetKind, SpectralDataset};

/// Model parameters that may be freed, by name.
pub const MODEL_PARAMETERS: [&str; 19] = [
    "b", "d", "eps_yy_p", "eps_zz_p", "theta_p", "g1", "g2", "g_e", "A_X", "A_Y", "alpha_XX",
    "alpha_XY", "alpha_YY", "alpha_ZZ", "A1", "A2", "A3", "A4", "E_X",
];

fn model_field_mut<'a>(p: &'a mut ModelParams, name: &str) -> Option<&'a mut f64> {
    Some(match name {
        "b" => &mut p.b,
        "d" => &mut p.d,
        "eps_yy_p" => &mut p.eps_yy_p,
        "eps_zz_p" => &mut p.eps_zz_p,
        "theta_p" => &mut p.theta_p,
        "g1" => &mut p.g1,
        "g2" => &mut p.g2,
        "g_e" => &mut p.g_e,
        "A_X" => &mut p.a_x,
        "A_Y" => &mut p.a_y,
        "alpha_XX" => &mut p.alpha_xx,
        "alpha_XY" => &mut p.alpha_xy,
        "alpha_YY" => &mut p.alpha_yy,
        "alpha_ZZ" => &mut p.alpha_zz,
        "A1" => &mut p.piezo.a1,
        "A2" => &mut p.piezo.a2,
        "A3" => &mut p.piezo.a3,
        "A4" => &mut p.piezo.a4,
        "E_X" => &mut p.e_x,
        _ => return None,
    })
}

/// Reads a named model parameter.
pub fn model_parameter(p: &ModelParams, name: &str) -> Result<f64> {
    let mut q = p.clone();
    model_field_mut(&mut q, name)
        .map(|v| *v)
        .ok_or_else(|| Error::UnknownParameter(name.to_string()))
}

/// Sets a named model parameter.
pub fn set_model_parameter(p: &mut ModelParams, name: &str, value: f64) -> Result<()> {
    *model_field_mut(p, name).ok_or_else(|| Error::UnknownParameter(name.to_string()))? = value;
    Ok(())
}

/// A free parameter: a model field, or a per-dataset misalignment
/// (`misalign_theta:<k>`, `misalign_phi:<k>`, radians) or additive offset
/// (`offset:<k>`, in the dataset's observed unit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParamKey {
    Model(&'static str),
    MisalignTheta(usize),
    MisalignPhi(usize),
    Offset(usize),
}

impl ParamKey {
    pub fn parse(name: &str) -> Result<Self> {
        if let Some(m) = MODEL_PARAMETERS.iter().find(|m| **m == name) {
            return Ok(ParamKey::Model(m));
        }
        let unknown = || Error::UnknownParameter(name.to_string());
        let (head, idx) = name.split_once(':').ok_or_else(unknown)?;
        let k: usize = idx.parse().map_err(|_| unknown())?;
        match head {
            "misalign_theta" => Ok(ParamKey::MisalignTheta(k)),
            "misalign_phi" => Ok(ParamKey::MisalignPhi(k)),
            "offset" => Ok(ParamKey::Offset(k)),
            _ => Err(unknown()),
        }
    }

    fn dataset(&self) -> Option<usize> {
        match self {
            ParamKey::Model(_) => None,
            ParamKey::MisalignTheta(k) | ParamKey::MisalignPhi(k) | ParamKey::Offset(k) => Some(*k),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeParameter {
    pub name: String,
    pub start: f64,
    #[serde(default = "neg_inf")]
    pub lower: f64,
    #[serde(default = "pos_inf")]
    pub upper: f64,
}

fn neg_inf() -> f64 {
    f64::NEG_INFINITY
}

fn pos_inf() -> f64 {
    f64::INFINITY
}

/// Per-dataset nuisance values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DatasetAdjust {
    pub misalign_theta: f64,
    pub misalign_phi: f64,
    pub offset: f64,
}

/// Complete state for one evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluated {
    pub params: ModelParams,
    pub adjust: Vec<DatasetAdjust>,
}

#[derive(Clone, Debug)]
pub struct FitProblem {
    pub datasets: Vec<SpectralDataset>,
    pub free: Vec<FreeParameter>,
    keys: Vec<ParamKey>,
    /// Values of everything that is not free.
    pub base: ModelParams,
    /// Extra starting points (one value per free parameter).
    pub seeds: Vec<Vec<f64>>,
    pub max_iterations: usize,
    orientations: OrientationSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    /// `orientation/line` (or orientation, for Stark data) the point was compared with.
    pub assigned: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub dataset: usize,
    pub point: usize,
    pub assigned: String,
}

impl FitProblem {
    /// Validates names, bounds and datasets before anything is evaluated.
    pub fn new(
        datasets: Vec<SpectralDataset>,
        free: Vec<FreeParameter>,
        base: ModelParams,
    ) -> Result<Self> {
        if datasets.is_empty() {
            return Err(Error::InvalidProblem("no datasets".into()));
        }
        for d in &datasets {
            d.validate()?;
        }
        let mut keys = Vec::with_capacity(free.len());
        for (i, f) in free.iter().enumerate() {
            let key = ParamKey::parse(&f.name)?;
            if let Some(k) = key.dataset() {
                if k >= datasets.len() {
                    return Err(Error::InvalidProblem(format!(
                        "`{}` refers to dataset {k} of {}",
                        f.name,
                        datasets.len()
                    )));
                }
            }
            if free[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::InvalidProblem(format!(
                    "parameter `{}` listed twice",
                    f.name
                )));
            }
            if !(f.lower < f.upper)
                || !(f.lower <= f.start && f.start <= f.upper)
                || !f.start.is_finite()
            {
                return Err(Error::InvalidProblem(format!(
                    "`{}`: start {} outside [{}, {}]",
                    f.name, f.start, f.lower, f.upper
                )));
            }
            keys.push(key);
        }
        Ok(Self {
            datasets,
            free,
            keys,
            base,
            seeds: Vec::new(),
            max_iterations: 200,
            orientations: enumerate_orientations(),
        })
    }

    pub fn with_seeds(mut self, seeds: Vec<Vec<f64>>) -> Result<Self> {
        for s in &seeds {
            if s.len() != self.free.len() {
                return Err(Error::InvalidProblem(format!(
                    "seed has {} values for {} free parameters",
                    s.len(),
                    self.free.len()
                )));
            }
            if !self.within_bounds(s) {
                return Err(Error::InvalidProblem("seed outside bounds".into()));
            }
        }
        self.seeds = seeds;
        Ok(self)
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_points(&self) -> usize {
        self.datasets.iter().map(|d| d.points.len()).sum()
    }

    pub fn start(&self) -> Vec<f64> {
        self.free.iter().map(|f| f.start).collect()
    }

    pub fn within_bounds(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.free)
            .all(|(v, f)| f.lower <= *v && *v <= f.upper)
    }

    pub fn orientations(&self) -> &OrientationSet {
        &self.orientations
    }

    /// Applies free values on top of the base parameters.
    pub fn evaluate_state(&self, x: &[f64]) -> Evaluated {
        let mut params = self.base.clone();
        let mut adjust = vec![DatasetAdjust::default(); self.datasets.len()];
        for (key, v) in self.keys.iter().zip(x) {
            match key {
                ParamKey::Model(name) => {
                    *model_field_mut(&mut params, name).expect("validated name") = *v
                }
                ParamKey::MisalignTheta(k) => adjust[*k].misalign_theta = *v,
                ParamKey::MisalignPhi(k) => adjust[*k].misalign_phi = *v,
                ParamKey::Offset(k) => adjust[*k].offset = *v,
            }
        }
        Evaluated { params, adjust }
    }

    /// Predictions for every point, in dataset then point order.
    pub fn predictions(&self, x: &[f64]) -> Result<Vec<Vec<Prediction>>> {
        let state = self.evaluate_state(x);
        let reference = zero_field_tx0_level(&state.params)?;
        self.datasets
            .iter()
            .zip(&state.adjust)
            .map(|(ds, adj)| {
                ds.points
                    .par_iter()
                    .map(|pt| {
                        predict_with_reference(
                            ds,
                            pt,
                            &state.params,
                            adj,
                            &self.orientations,
                            reference,
                        )
                    })
                    .collect()
            })
            .collect()
    }

    /// Weighted residuals `sqrt(w) (observed - predicted) / sigma`.
    pub fn residuals(&self, x: &[f64]) -> Result<Vec<f64>> {
        let preds = self.predictions(x)?;
        Ok(self
            .datasets
            .iter()
            .zip(&preds)
            .flat_map(|(ds, pr)| {
                let sw = ds.weight.sqrt();
                ds.points
                    .iter()
                    .zip(pr)
                    .map(move |(pt, p)| sw * (pt.observed - p.value) / pt.sigma)
            })
            .collect())
    }

    /// `sum w ((observed - predicted) / sigma)^2`.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        Ok(self.residuals(x)?.iter().map(|r| r * r).sum())
    }

    pub fn assignments(&self, x: &[f64]) -> Result<Vec<Assignment>> {
        let preds = self.predictions(x)?;
        Ok(preds
            .into_iter()
            .enumerate()
            .flat_map(|(d, pr)| {
                pr.into_iter().enumerate().map(move |(i, p)| Assignment {
                    dataset: d,
                    point: i,
                    assigned: p.assigned,
                })
            })
            .collect())
    }
}

fn nearest(candidates: impl Iterator<Item = (String, f64)>, target: f64) -> Prediction {
    let mut best: Option<(String, f64)> = None;
    for (label, v) in candidates {
        let better = match &best {
            None => true,
            Some((_, b)) => (v - target).abs() < (b - target).abs(),
        };
        if better {
            best = Some((label, v));
        }
    }
    let (assigned, value) = best.expect("non-empty candidate list");
    Prediction { value, assigned }
}

fn split_tag(tag: &str) -> (&str, Option<&str>) {
    match tag.split_once('/') {
        Some((o, rest)) => (o, Some(rest)),
        None => (tag, None),
    }
}

fn bad_tag(tag: &str, why: &str) -> Error {
    Error::InvalidProblem(format!("tag `{tag}`: {why}"))
}

/// Model value for one data point.
pub fn predict(
    ds: &SpectralDataset,
    point: &DataPoint,
    params: &ModelParams,
    adjust: &DatasetAdjust,
) -> Result<Prediction> {
    let set = enumerate_orientations();
    predict_with_reference(
        ds,
        point,
        params,
        adjust,
        &set,
        zero_field_tx0_level(params)?,
    )
}

/// Overwrites every point's `observed` with the model value.
pub fn synthesize(ds: &mut SpectralDataset, params: &ModelParams) -> Result<()> {
    let set = enumerate_orientations();
    let reference = zero_field_tx0_level(params)?;
    let adjust = DatasetAdjust::default();
    let values = ds
        .points
        .par_iter()
        .map(|pt| predict_with_reference(ds, pt, params, &adjust, &set, reference).map(|p| p.value))
        .collect::<Result<Vec<_>>>()?;
    for (pt, v) in ds.points.iter_mut().zip(values) {
        pt.observed = v;
    }
    Ok(())
}

fn predict_with_reference(
    ds: &SpectralDataset,
    point: &DataPoint,
    params: &ModelParams,
    adjust: &DatasetAdjust,
    set: &OrientationSet,
    reference: f64,
) -> Result<Prediction> {
    let mis = (adjust.misalign_theta, adjust.misalign_phi);
    let mut pred = match ds.kind {
        DatasetKind::ZeemanRotation => {
            let b = ds.meta.b_field.unwrap_or(0.0);
            let from = ds.meta.from_axis.ok_or(Error::DegenerateAxes)?;
            let to = ds.meta.to_axis.ok_or(Error::DegenerateAxes)?;
            let (u, w, _) = great_circle(&from, &to)?;
            let (s, c) = point.control.sin_cos();
            let dir: Vec3 = std::array::from_fn(|i| c * u[i] + s * w[i]);
            let fields = FieldConfig::magnetic(scale(&misaligned_direction(&dir, mis)?, b));
            match &point.tag {
                Some(tag) => {
                    let (o, line) = split_tag(tag);
                    let line = line
                        .and_then(LineName::parse)
                        .ok_or_else(|| bad_tag(tag, "expected orientation/line"))?;
                    let ts =
                        transition_set_with_reference(set.get(o)?, &fields, params, reference)?;
                    Prediction {
                        value: ts.line(line).energy,
                        assigned: tag.clone(),
                    }
                }
                None => {
                    let mut cands = Vec::with_capacity(4 * set.len());
                    for f in &set.frames {
                        let ts = transition_set_with_reference(f, &fields, params, reference)?;
                        cands.extend(
                            ts.lines
                                .iter()
                                .map(|l| (format!("{}/{}", f.label, l.name.as_str()), l.energy)),
                        );
                    }
                    nearest(cands.into_iter(), point.observed - adjust.offset)
                }
            }
        }
        DatasetKind::StarkSweep => {
            let dir = misaligned_direction(&ds.meta.direction.ok_or(Error::ZeroDirection)?, mis)?;
            let e = scale(&dir, point.control * ds.meta.field_scale.unwrap_or(1.0));
            let shift = |label: &str| -> Result<f64> {
                let local = field_transform(set.get(label)?, &e);
                Ok(stark_shift_linear(&local, params) + stark_shift_quadratic(&local, params))
            };
            match &point.tag {
                Some(tag) => Prediction {
                    value: shift(tag)?,
                    assigned: tag.clone(),
                },
                None => {
                    let cands = set
                        .frames
                        .iter()
                        .map(|f| Ok((f.label.clone(), shift(&f.label)?)))
                        .collect::<Result<Vec<_>>>()?;
                    nearest(cands.into_iter(), point.observed - adjust.offset)
                }
            }
        }
        DatasetKind::StressSweep => {
            let theta = ds.meta.stress_theta.unwrap_or(0.0);
            let n0 = [
                theta.sin() / std::f64::consts::SQRT_2,
                theta.sin() / std::f64::consts::SQRT_2,
                theta.cos(),
            ];
            let n = misaligned_direction(&n0, mis)?;
            let sigma = StressTensor(SymmetricTensor3::dyad(&n).scaled(point.control));
            let fields = FieldConfig::stress(sigma);
            let levels = |label: &str| -> Result<[f64; 2]> {
                let v = tx_levels_with_reference(set.get(label)?, &fields, params, reference)?;
                Ok([0.5 * (v[0] + v[1]), 0.5 * (v[2] + v[3])])
            };
            match &point.tag {
                Some(tag) => {
                    let (o, lvl) = split_tag(tag);
                    let k = match lvl {
                        Some("TX0") => 0,
                        Some("TX1") => 1,
                        _ => {
                            return Err(bad_tag(tag, "expected orientation/TX0 or orientation/TX1"))
                        }
                    };
                    Prediction {
                        value: levels(o)?[k],
                        assigned: tag.clone(),
                    }
                }
                None => {
                    let mut cands = Vec::with_capacity(2 * set.len());
                    for f in &set.frames {
                        let l = levels(&f.label)?;
                        cands.push((format!("{}/TX0", f.label), l[0]));
                        cands.push((format!("{}/TX1", f.label), l[1]));
                    }
                    nearest(cands.into_iter(), point.observed - adjust.offset)
                }
            }
        }
    };
    pred.value += adjust.offset;
    Ok(pred)
}
