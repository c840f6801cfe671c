//! Spectral datasets and their CSV form.
//!
//! CSV columns: `control,observed,sigma[,tag]`. Units by kind:
//!
//! | kind              | control        | observed, sigma      | tag            |
//! |-------------------|----------------|----------------------|----------------|
//! | `zeeman_rotation` | angle (rad)    | line energy (eV)     | `z0/B`         |
//! | `stark_sweep`     | field (V/m)    | total shift (Hz)     | `z0`           |
//! | `stress_sweep`    | stress T (Pa)  | level energy (eV)    | `z0/TX0`       |
//!
//! An empty tag means the point is matched to the nearest predicted value.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Vec3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    ZeemanRotation,
    StarkSweep,
    StressSweep,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::ZeemanRotation => "zeeman_rotation",
            DatasetKind::StarkSweep => "stark_sweep",
            DatasetKind::StressSweep => "stress_sweep",
        }
    }
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeeman_rotation" => Ok(DatasetKind::ZeemanRotation),
            "stark_sweep" => Ok(DatasetKind::StarkSweep),
            "stress_sweep" => Ok(DatasetKind::StressSweep),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    pub control: f64,
    pub observed: f64,
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

/// Experimental conditions shared by all points of a dataset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetMeta {
    /// Magnetic field magnitude for rotation sweeps (T).
    pub b_field: Option<f64>,
    pub from_axis: Option<Vec3>,
    pub to_axis: Option<Vec3>,
    /// Nominal electric field direction.
    pub direction: Option<Vec3>,
    /// Stress direction angle from [001] towards [110] (rad).
    pub stress_theta: Option<f64>,
    /// Sample field per nominal field, e.g. from a dielectric stack; 1 if unset.
    pub field_scale: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDataset {
    pub kind: DatasetKind,
    pub points: Vec<DataPoint>,
    #[serde(default)]
    pub meta: DatasetMeta,
    /// Multiplier on the `1/sigma^2` weights of this dataset.
    #[serde(default = "one")]
    pub weight: f64,
}

fn one() -> f64 {
    1.0
}

impl SpectralDataset {
    pub fn new(kind: DatasetKind, points: Vec<DataPoint>, meta: DatasetMeta) -> Self {
        Self {
            kind,
            points,
            meta,
            weight: 1.0,
        }
    }

    /// Every `(control, tag)` combination, with `observed` left at zero.
    pub fn tagged_grid(
        kind: DatasetKind,
        meta: DatasetMeta,
        controls: &[f64],
        tags: &[String],
        sigma: f64,
    ) -> Self {
        let points = controls
            .iter()
            .flat_map(|c| {
                tags.iter().map(move |t| DataPoint {
                    control: *c,
                    observed: 0.0,
                    sigma,
                    tag: Some(t.clone()),
                })
            })
            .collect();
        Self::new(kind, points, meta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidProblem(format!(
                "{} dataset has no points",
                self.kind.as_str()
            )));
        }
        if !(self.weight > 0.0) || !self.weight.is_finite() {
            return Err(Error::InvalidProblem(format!(
                "dataset weight {} is not positive",
                self.weight
            )));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.sigma > 0.0) || !p.sigma.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "point {i}: sigma {} is not positive",
                    p.sigma
                )));
            }
            if !p.control.is_finite() || !p.observed.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "point {i}: non-finite value"
                )));
            }
        }
        let missing = |what: &str| {
            Error::InvalidProblem(format!("{} dataset needs `{what}`", self.kind.as_str()))
        };
        match self.kind {
            DatasetKind::ZeemanRotation => {
                self.meta.b_field.ok_or_else(|| missing("b_field"))?;
                self.meta.from_axis.ok_or_else(|| missing("from_axis"))?;
                self.meta.to_axis.ok_or_else(|| missing("to_axis"))?;
            }
            DatasetKind::StarkSweep => {
                self.meta.direction.ok_or_else(|| missing("direction"))?;
            }
            DatasetKind::StressSweep => {
                self.meta
                    .stress_theta
                    .ok_or_else(|| missing("stress_theta"))?;
            }
        }
        Ok(())
    }

    /// Reads points from CSV with a header row. Errors name the file line
    /// and the offending column.
    pub fn read_points<R: Read>(reader: R) -> Result<Vec<DataPoint>> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let required = ["control", "observed", "sigma"];
        let mut idx = [0usize; 3];
        for (k, name) in required.iter().enumerate() {
            idx[k] = col(name).ok_or_else(|| Error::Ingestion {
                row: 1,
                column: (*name).to_string(),
                message: "missing column".into(),
            })?;
        }
        let tag_idx = col("tag");
        let mut points = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let row = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let num = |k: usize| -> Result<f64> {
                let name = required[k];
                let raw = rec.get(idx[k]).ok_or_else(|| Error::Ingestion {
                    row,
                    column: name.to_string(),
                    message: "missing value".into(),
                })?;
                raw.parse::<f64>().map_err(|e| Error::Ingestion {
                    row,
                    column: name.to_string(),
                    message: format!("`{raw}`: {e}"),
                })
            };
            let sigma = num(2)?;
            if !(sigma > 0.0) {
                return Err(Error::Ingestion {
                    row,
                    column: "sigma".into(),
                    message: format!("sigma must be positive, got {sigma}"),
                });
            }
            let tag = tag_idx
                .and_then(|i| rec.get(i))
                .filter(|t| !t.is_empty())
                .map(str::to_string);
            points.push(DataPoint {
                control: num(0)?,
                observed: num(1)?,
                sigma,
                tag,
            });
        }
        if points.is_empty() {
            return Err(Error::Ingestion {
                row: 2,
                column: "control".into(),
                message: "no data rows".into(),
            });
        }
        Ok(points)
    }

    pub fn read_points_from_path(path: &Path) -> Result<Vec<DataPoint>> {
        Self::read_points(std::fs::File::open(path)?)
    }

    pub fn write_points<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["control", "observed", "sigma", "tag"])?;
        for p in &self.points {
            w.write_record([
                format!("{:e}", p.control),
                format!("{:e}", p.observed),
                format!("{:e}", p.sigma),
                p.tag.clone().unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let ds = SpectralDataset::new(
            DatasetKind::StarkSweep,
            vec![
                DataPoint {
                    control: 1.25e5,
                    observed: -1.2345678901234567e9,
                    sigma: 6e7,
                    tag: Some("y1'".into()),
                },
                DataPoint {
                    control: 0.1,
                    observed: 3.0,
                    sigma: 0.5,
                    tag: None,
                },
            ],
            DatasetMeta::default(),
        );
        let mut buf = Vec::new();
        ds.write_points(&mut buf).unwrap();
        let back = SpectralDataset::read_points(buf.as_slice()).unwrap();
        assert_eq!(back, ds.points);
    }

    #[test]
    fn malformed_value_names_row_and_column() {
        let text = "control,observed,sigma,tag\n0.0,1.0,0.1,z0\n0.5,abc,0.1,z1\n";
        match SpectralDataset::read_points(text.as_bytes()) {
            Err(Error::Ingestion { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "observed");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_sigma() {
        let r = SpectralDataset::read_points("control,observed\n1,2\n".as_bytes());
        assert!(matches!(r, Err(Error::Ingestion { ref column, .. }) if column == "sigma"));
        let r = SpectralDataset::read_points("control,observed,sigma\n1,2,0\n".as_bytes());
        assert!(matches!(r, Err(Error::Ingestion { row: 2, ref column, .. }) if column == "sigma"));
    }

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "stark_sweep".parse::<DatasetKind>().unwrap(),
            DatasetKind::StarkSweep
        );
        assert!(matches!(
            "pl_map".parse::<DatasetKind>(),
            Err(Error::UnsupportedKind(_))
        ));
    }

    #[test]
    fn metadata_required_per_kind() {
        let pts = vec![DataPoint {
            control: 0.0,
            observed: 0.0,
            sigma: 1.0,
            tag: None,
        }];
        let ds = SpectralDataset::new(
            DatasetKind::ZeemanRotation,
            pts.clone(),
            DatasetMeta::default(),
        );
        assert!(ds.validate().is_err());
        let ds = SpectralDataset::new(
            DatasetKind::StressSweep,
            pts,
            DatasetMeta {
                stress_theta: Some(0.0),
                ..DatasetMeta::default()
            },
        );
        assert!(ds.validate().is_ok());
    }
}
