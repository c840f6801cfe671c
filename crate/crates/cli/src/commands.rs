use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use txh::elasticity::{stress_for_direction, StressTensor};
use txh::fitting::{fit, synthesize, DatasetKind, DatasetMeta, FitConfig, SpectralDataset};
use txh::numerics::SymmetricTensor3;
use txh::spectra::{
    degeneracy_grouping, field_rotation_sweep, great_circle, group_transition_sets,
    radiative_branching_ratio, stark_sweep, tx_levels, DielectricStack, GroupingReport, LineName,
    TxState,
};
use txh::{enumerate_orientations, FieldConfig, ModelParams, OrientationSet};

use crate::args::{
    FitArgs, Format, FromConfig, Kind, OrientationsArgs, RbrArgs, StarkArgs, State, StrainArgs,
    SynthArgs, ZeemanArgs,
};
use crate::output::{write_json, write_rows};

const MHZ: f64 = 1e6;

fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

fn orientations(unprimed: bool) -> OrientationSet {
    let set = enumerate_orientations();
    if unprimed {
        OrientationSet {
            frames: set.unprimed().cloned().collect(),
        }
    } else {
        set
    }
}

#[derive(Serialize)]
struct OrientationRow<'a> {
    label: &'a str,
    operation: &'a str,
    inverted: bool,
    r00: f64,
    r01: f64,
    r02: f64,
    r10: f64,
    r11: f64,
    r12: f64,
    r20: f64,
    r21: f64,
    r22: f64,
}

pub fn run_orientations(args: OrientationsArgs) -> Result<()> {
    let args = args.resolve()?;
    let set = orientations(args.unprimed.unwrap_or(false));
    match args.format.unwrap_or_default() {
        Format::Json => write_json(&set.frames, args.output.as_deref()),
        Format::Csv => {
            let rows: Vec<_> = set
                .frames
                .iter()
                .map(|f| {
                    let m = &f.rotation.0;
                    OrientationRow {
                        label: &f.label,
                        operation: &f.operation,
                        inverted: f.inverted,
                        r00: m[0][0],
                        r01: m[0][1],
                        r02: m[0][2],
                        r10: m[1][0],
                        r11: m[1][1],
                        r12: m[1][2],
                        r20: m[2][0],
                        r21: m[2][1],
                        r22: m[2][2],
                    }
                })
                .collect();
            write_rows(&rows, Format::Csv, args.output.as_deref())
        }
    }
}

#[derive(Serialize)]
struct ZeemanRow<'a> {
    angle_deg: f64,
    orientation: &'a str,
    line: &'static str,
    energy_ev: f64,
    offset_ghz: f64,
}

#[derive(Serialize)]
struct StepGroups {
    angle_deg: f64,
    report: GroupingReport,
}

pub fn run_zeeman(args: ZeemanArgs) -> Result<()> {
    let args = args.resolve()?;
    let p = args.common.model_params()?;
    let b = args.b_mt.unwrap_or(109.9) * 1e-3;
    let from = args.from_axis.unwrap_or([0.0, 0.0, 1.0]);
    let to = args.to_axis.unwrap_or([-1.0, 1.0, 0.0]);
    let steps = args.steps.unwrap_or(91);
    let tol = args.group_tol_mhz.unwrap_or(60.0) * MHZ;

    let set = enumerate_orientations();
    let sweep = field_rotation_sweep(&set, &from, &to, steps, b, &p)?;
    let mut rows = Vec::with_capacity(sweep.len() * set.len() * 4);
    for step in &sweep {
        for ts in &step.sets {
            for l in &ts.lines {
                rows.push(ZeemanRow {
                    angle_deg: step.angle.to_degrees(),
                    orientation: &ts.orientation,
                    line: l.name.as_str(),
                    energy_ev: l.energy,
                    offset_ghz: l.frequency_offset / 1e9,
                });
            }
        }
    }
    write_rows(&rows, args.common.format(), args.common.output.as_deref())?;

    if let Some(path) = &args.groups {
        let groups: Vec<StepGroups> = sweep
            .iter()
            .map(|s| {
                let spec = format!(
                    "|B| = {} mT, {:.4} deg from {:?}",
                    b * 1e3,
                    s.angle.to_degrees(),
                    from
                );
                StepGroups {
                    angle_deg: s.angle.to_degrees(),
                    report: group_transition_sets(&s.sets, tol, &spec),
                }
            })
            .collect();
        write_json(&groups, Some(path))?;
    }
    Ok(())
}

fn load_stack(spec: &str) -> Result<DielectricStack> {
    let stack = match spec {
        "mount_110" => DielectricStack::mount_110(),
        "mount_001" => DielectricStack::mount_001(),
        path => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            serde_json::from_str(&text).map_err(txh::Error::from)?
        }
    };
    stack.validate()?;
    Ok(stack)
}

#[derive(Serialize)]
struct StarkRow {
    e_v_per_m: f64,
    e_sample_v_per_m: f64,
    orientation: String,
    shift_hz: f64,
}

pub fn run_stark(args: StarkArgs) -> Result<()> {
    let args = args.resolve()?;
    let p = args.common.model_params()?;
    let dir = args.direction.unwrap_or([1.0, 1.0, 0.0]);
    let e_max = args.e_max.unwrap_or(125e3);
    let steps = args.steps.unwrap_or(26);
    let mis = (
        args.misalign_theta.unwrap_or(0.0).to_radians(),
        args.misalign_phi.unwrap_or(0.0).to_radians(),
    );
    // nominal fields are V_total / d_sample; the sample sees `ratio` of that
    let ratio = match &args.stack {
        Some(s) => load_stack(s)?.sample_voltage_ratio()?,
        None => 1.0,
    };

    let set = enumerate_orientations();
    let sweep = stark_sweep(&set, &dir, e_max * ratio, steps, &p, mis)?;
    let rows: Vec<StarkRow> = sweep
        .iter()
        .flat_map(|pt| {
            pt.shifts.iter().map(move |(label, s)| StarkRow {
                e_v_per_m: pt.e / ratio,
                e_sample_v_per_m: pt.e,
                orientation: label.clone(),
                shift_hz: *s,
            })
        })
        .collect();
    write_rows(&rows, args.common.format(), args.common.output.as_deref())?;

    if let (Some(path), Some(last)) = (&args.groups, sweep.last()) {
        let spec = format!("|E| = {:e} V/m along {:?}", last.e, dir);
        let report =
            degeneracy_grouping(&last.shifts, args.group_tol_mhz.unwrap_or(1.0) * MHZ, &spec);
        write_json(&report, Some(path))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct StrainRow<'a> {
    stress_pa: f64,
    orientation: &'a str,
    level: &'static str,
    energy_ev: f64,
    offset_ghz: f64,
}

pub fn run_strain(args: StrainArgs) -> Result<()> {
    let args = args.resolve()?;
    let p = args.common.model_params()?;
    let theta = args.direction_theta.unwrap_or(0.0).to_radians();
    let t_max = args.t_max.unwrap_or(-3e8);
    let steps = args.steps.unwrap_or(31);
    let hydrostatic = args.hydrostatic.unwrap_or(false);

    let set = enumerate_orientations();
    let loads = linspace(0.0, t_max, steps);
    let levels: Vec<Vec<[f64; 2]>> = loads
        .par_iter()
        .map(|&t| {
            let sigma = if hydrostatic {
                StressTensor(SymmetricTensor3::from_components(t, t, t, 0.0, 0.0, 0.0))
            } else {
                stress_for_direction(theta, t)
            };
            let fields = FieldConfig::stress(sigma);
            set.frames
                .iter()
                .map(|f| {
                    let v = tx_levels(f, &fields, &p)?;
                    Ok([0.5 * (v[0] + v[1]), 0.5 * (v[2] + v[3])])
                })
                .collect::<txh::Result<Vec<_>>>()
        })
        .collect::<txh::Result<_>>()?;

    let offset = |e: f64| (e - p.e_x) * p.hz_per_ev / 1e9;
    let mut rows = Vec::with_capacity(loads.len() * set.len() * 2);
    for (t, per_frame) in loads.iter().zip(&levels) {
        for (f, lv) in set.frames.iter().zip(per_frame) {
            for (name, e) in ["TX0", "TX1"].into_iter().zip(lv) {
                rows.push(StrainRow {
                    stress_pa: *t,
                    orientation: &f.label,
                    level: name,
                    energy_ev: *e,
                    offset_ghz: offset(*e),
                });
            }
        }
    }
    write_rows(&rows, args.common.format(), args.common.output.as_deref())?;

    if let (Some(path), Some(last)) = (&args.groups, levels.last()) {
        let values: Vec<(String, f64)> = set
            .frames
            .iter()
            .zip(last)
            .map(|(f, lv)| (f.label.clone(), (lv[0] - p.e_x) * p.hz_per_ev))
            .collect();
        let spec = format!(
            "T = {:e} Pa, {}",
            t_max,
            if hydrostatic {
                "hydrostatic".into()
            } else {
                format!("theta {} deg", theta.to_degrees())
            }
        );
        let report = degeneracy_grouping(&values, args.group_tol_mhz.unwrap_or(1.0) * MHZ, &spec);
        write_json(&report, Some(path))?;
    }
    Ok(())
}

#[derive(Clone, Serialize)]
struct RbrRow {
    theta_deg: f64,
    phi_deg: f64,
    orientation: String,
    rbr: f64,
    cyclicity: f64,
}

#[derive(Serialize)]
struct SliceRow<'a> {
    orientation: &'a str,
    slice: &'static str,
    theta_deg: f64,
    phi_deg: f64,
    rbr: f64,
}

pub fn run_rbr(args: RbrArgs) -> Result<()> {
    let args = args.resolve()?;
    let p = args.common.model_params()?;
    let b = args.b_mt.unwrap_or(250.0) * 1e-3;
    let grid = args.grid.unwrap_or(37);
    if grid < 2 {
        bail!("--grid must be at least 2");
    }
    let state = match args.state.unwrap_or_default() {
        State::Lower => TxState::Lower,
        State::Upper => TxState::Upper,
    };
    let set = enumerate_orientations();
    let frames: Vec<_> = match &args.orientation {
        Some(label) => vec![set.get(label)?.clone()],
        None => set.frames.clone(),
    };
    let thetas = linspace(0.0, 180.0, grid);
    let n_phi = 2 * (grid - 1);
    let phis: Vec<f64> = (0..n_phi)
        .map(|j| 360.0 * j as f64 / n_phi as f64)
        .collect();

    let rows: Vec<RbrRow> = frames
        .par_iter()
        .map(|f| {
            let mut out = Vec::with_capacity(thetas.len() * phis.len());
            for &th in &thetas {
                for &ph in &phis {
                    let (st, ct) = th.to_radians().sin_cos();
                    let (sp, cp) = ph.to_radians().sin_cos();
                    let fields = FieldConfig::magnetic([b * st * cp, b * st * sp, b * ct]);
                    let r = radiative_branching_ratio(f, &fields, &p, state)?;
                    out.push(RbrRow {
                        theta_deg: th,
                        phi_deg: ph,
                        orientation: f.label.clone(),
                        rbr: r.rbr,
                        cyclicity: r.cyclicity,
                    });
                }
            }
            Ok(out)
        })
        .collect::<txh::Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    write_rows(&rows, args.common.format(), args.common.output.as_deref())?;

    if let Some(path) = &args.slices {
        let mut slices = Vec::new();
        for chunk in rows.chunks(thetas.len() * phis.len()) {
            let best = chunk
                .iter()
                .max_by(|a, b| a.rbr.total_cmp(&b.rbr))
                .expect("non-empty grid");
            for r in chunk {
                if r.theta_deg == best.theta_deg {
                    slices.push(SliceRow {
                        orientation: &r.orientation,
                        slice: "phi",
                        theta_deg: r.theta_deg,
                        phi_deg: r.phi_deg,
                        rbr: r.rbr,
                    });
                }
            }
            for r in chunk {
                if r.phi_deg == best.phi_deg {
                    slices.push(SliceRow {
                        orientation: &r.orientation,
                        slice: "theta",
                        theta_deg: r.theta_deg,
                        phi_deg: r.phi_deg,
                        rbr: r.rbr,
                    });
                }
            }
        }
        write_rows(&slices, Format::Csv, Some(path))?;
    }
    Ok(())
}

pub fn run_fit(args: FitArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = FitConfig::from_json(&text)?;
    let base = args
        .config
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    let problem = cfg.build(&base, &args.data)?;
    let result = fit(&problem)?;
    write_json(&result, args.output.as_deref())
}

fn unprimed_tags(suffixes: &[&str]) -> Vec<String> {
    enumerate_orientations()
        .unprimed()
        .flat_map(|f| suffixes.iter().map(move |s| format!("{}/{s}", f.label)))
        .collect()
}

pub fn run_synth(args: SynthArgs) -> Result<()> {
    let args = args.resolve()?;
    let p = match &args.params {
        None => ModelParams::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).map_err(txh::Error::from)?
        }
    };
    let Some(kind) = args.kind else {
        bail!("--kind is required");
    };
    let steps = args.steps.unwrap_or(19);
    let sigma_ev = args.sigma_mhz.unwrap_or(60.0) * MHZ / p.hz_per_ev;

    let mut ds = match kind {
        Kind::ZeemanRotation => {
            let from = args.from_axis.unwrap_or([0.0, 0.0, 1.0]);
            let to = args.to_axis.unwrap_or([-1.0, 1.0, 0.0]);
            let (_, _, total) = great_circle(&from, &to)?;
            let meta = DatasetMeta {
                b_field: Some(args.b_mt.unwrap_or(109.9) * 1e-3),
                from_axis: Some(from),
                to_axis: Some(to),
                ..DatasetMeta::default()
            };
            let tags = unprimed_tags(&LineName::ALL.map(LineName::as_str));
            SpectralDataset::tagged_grid(
                DatasetKind::ZeemanRotation,
                meta,
                &linspace(0.0, total, steps),
                &tags,
                sigma_ev,
            )
        }
        Kind::StarkSweep => {
            let e_max = args.e_max.unwrap_or(125e3);
            let fields: Vec<f64> = (1..=steps)
                .map(|k| e_max * k as f64 / steps as f64)
                .collect();
            let meta = DatasetMeta {
                direction: Some(args.direction.unwrap_or([1.0, 1.0, 0.0])),
                ..DatasetMeta::default()
            };
            let tags: Vec<String> = enumerate_orientations()
                .frames
                .iter()
                .map(|f| f.label.clone())
                .collect();
            SpectralDataset::tagged_grid(DatasetKind::StarkSweep, meta, &fields, &tags, 1.0)
        }
        Kind::StressSweep => {
            let meta = DatasetMeta {
                stress_theta: Some(args.direction_theta.unwrap_or(0.0).to_radians()),
                ..DatasetMeta::default()
            };
            let loads = linspace(0.0, args.t_max.unwrap_or(-3e8), steps);
            SpectralDataset::tagged_grid(
                DatasetKind::StressSweep,
                meta,
                &loads,
                &unprimed_tags(&["TX0", "TX1"]),
                sigma_ev,
            )
        }
    };
    synthesize(&mut ds, &p)?;

    if kind == Kind::StarkSweep {
        // relative uncertainty, floored at a tenth of the largest shift
        let frac = args.sigma_fraction.unwrap_or(0.05);
        let floor = 0.1
            * ds.points
                .iter()
                .map(|pt| pt.observed.abs())
                .fold(0.0, f64::max);
        for pt in &mut ds.points {
            pt.sigma = frac * pt.observed.abs().max(floor);
        }
    }
    if args.noisy.unwrap_or(false) {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed.unwrap_or(1));
        for pt in &mut ds.points {
            pt.observed += Normal::new(0.0, pt.sigma)
                .context("invalid sigma")?
                .sample(&mut rng);
        }
    }
    let out = crate::output::open(args.output.as_deref())?;
    ds.write_points(out)?;
    Ok(())
}
