//! Optical observables of the TX0 <-> T0 transitions.
//!
//! Line naming: with `g_up`/`g_low` the ground spin levels and
//! `tx_up`/`tx_low` the Zeeman-split TX0 levels,
//!
//! ```text
//! A = tx_up  - g_low    B = tx_up  - g_up
//! C = tx_low - g_low    D = tx_low - g_up
//! ```
//!
//! so that `A - B = C - D` is the electron splitting and
//! `B - D = A - C` is the hole splitting.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{
    assemble_tx_hamiltonian, ground_zeeman_splitting, h_strain, internal_strain_tensor,
    stark_shift_linear, stark_shift_quadratic, FieldConfig, ModelParams,
};
use crate::numerics::{cross, dot, eig_hermitian_4, norm, normalized, scale, EigenSystem, Vec3};
use crate::symmetry::{field_transform, OrientationFrame, OrientationSet};

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.8541878128e-12;

/// Default tolerance for grouping model-exact values (Hz).
pub const DEFAULT_GROUPING_TOL_HZ: f64 = 1.0e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LineName {
    A,
    B,
    C,
    D,
}

impl LineName {
    pub const ALL: [LineName; 4] = [LineName::A, LineName::B, LineName::C, LineName::D];

    pub fn as_str(self) -> &'static str {
        match self {
            LineName::A => "A",
            LineName::B => "B",
            LineName::C => "C",
            LineName::D => "D",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim() {
            "A" | "a" => Some(LineName::A),
            "B" | "b" => Some(LineName::B),
            "C" | "c" => Some(LineName::C),
            "D" | "d" => Some(LineName::D),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub name: LineName,
    /// Transition energy (eV).
    pub energy: f64,
    /// Offset from the zero-field transition energy (Hz).
    pub frequency_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionSet {
    pub orientation: String,
    pub lines: [Line; 4],
}

impl TransitionSet {
    pub fn line(&self, name: LineName) -> &Line {
        &self.lines[name as usize]
    }

    /// Hole (TX0) splitting `B - D` (eV).
    pub fn hole_splitting(&self) -> f64 {
        self.line(LineName::B).energy - self.line(LineName::D).energy
    }

    /// Electron splitting `A - B` (eV).
    pub fn electron_splitting(&self) -> f64 {
        self.line(LineName::A).energy - self.line(LineName::B).energy
    }
}

/// Lowest eigenvalue of the zero-field Hamiltonian; the reference for `E_X`.
pub fn zero_field_tx0_level(p: &ModelParams) -> Result<f64> {
    let h = h_strain(&internal_strain_tensor(p), p, false)?;
    Ok(eig_hermitian_4(&h)?.values[0])
}

fn check_manifolds(values: &[f64; 4]) -> Result<()> {
    let gap = values[2] - values[1];
    let intra = (values[1] - values[0]).max(values[3] - values[2]);
    if intra > 0.0 && gap <= intra {
        return Err(Error::ManifoldOverlap {
            tx0_top: values[1],
            tx1_bottom: values[2],
        });
    }
    Ok(())
}

/// Diagonalizes the orientation's Hamiltonian in its own coordinates.
pub fn tx_eigensystem(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<EigenSystem> {
    eig_hermitian_4(&assemble_tx_hamiltonian(frame, fields, p)?)
}

/// Lines A-D of one orientation.
pub fn transition_set(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<TransitionSet> {
    let reference = zero_field_tx0_level(p)?;
    transition_set_with_reference(frame, fields, p, reference)
}

pub(crate) fn transition_set_with_reference(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
    reference: f64,
) -> Result<TransitionSet> {
    let es = tx_eigensystem(frame, fields, p)?;
    check_manifolds(&es.values)?;
    let e_local = field_transform(frame, &fields.e_field);
    let stark_ev =
        (stark_shift_linear(&e_local, p) + stark_shift_quadratic(&e_local, p)) / p.hz_per_ev;
    let base = p.e_x - reference + stark_ev;
    let half_e = 0.5 * ground_zeeman_splitting(&fields.b_field, p);
    let tx_low = es.values[0] + base;
    let tx_up = es.values[1] + base;
    let energies = [
        tx_up + half_e,
        tx_up - half_e,
        tx_low + half_e,
        tx_low - half_e,
    ];
    let lines = std::array::from_fn(|k| Line {
        name: LineName::ALL[k],
        energy: energies[k],
        frequency_offset: (energies[k] - p.e_x) * p.hz_per_ev,
    });
    Ok(TransitionSet {
        orientation: frame.label.clone(),
        lines,
    })
}

/// Absolute energies (eV) of the four TX levels of `frame`, ascending,
/// including the scalar Stark shift. The zero-field lowest level sits at `E_X`.
pub fn tx_levels(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<[f64; 4]> {
    tx_levels_with_reference(frame, fields, p, zero_field_tx0_level(p)?)
}

pub(crate) fn tx_levels_with_reference(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
    reference: f64,
) -> Result<[f64; 4]> {
    let es = tx_eigensystem(frame, fields, p)?;
    let e_local = field_transform(frame, &fields.e_field);
    let stark_ev =
        (stark_shift_linear(&e_local, p) + stark_shift_quadratic(&e_local, p)) / p.hz_per_ev;
    Ok(es.values.map(|v| v + p.e_x - reference + stark_ev))
}

/// Transition sets for every orientation, in set order.
pub fn transition_sets(
    set: &OrientationSet,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<Vec<TransitionSet>> {
    let reference = zero_field_tx0_level(p)?;
    set.frames
        .iter()
        .map(|f| transition_set_with_reference(f, fields, p, reference))
        .collect()
}

/// `g_H = (B - D) / (mu_B |B|)`, as a magnitude.
pub fn hole_g_factor(ts: &TransitionSet, b_magnitude: f64, p: &ModelParams) -> Result<f64> {
    if !(b_magnitude > 0.0) {
        return Err(Error::ZeroField);
    }
    Ok((ts.hole_splitting() / (p.mu_b * b_magnitude)).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    /// Angle from the start axis (rad).
    pub angle: f64,
    pub b_field: Vec3,
    pub sets: Vec<TransitionSet>,
}

/// Unit vectors `(u, w)` spanning the great circle from `from` towards
/// `to`, and the total angle between them.
pub fn great_circle(from: &Vec3, to: &Vec3) -> Result<(Vec3, Vec3, f64)> {
    let u = normalized(from).ok_or(Error::DegenerateAxes)?;
    let v = normalized(to).ok_or(Error::DegenerateAxes)?;
    if norm(&cross(&u, &v)) < 1e-12 {
        return Err(Error::DegenerateAxes);
    }
    let c = dot(&u, &v);
    let w = normalized(&[v[0] - c * u[0], v[1] - c * u[1], v[2] - c * u[2]])
        .ok_or(Error::DegenerateAxes)?;
    Ok((u, w, c.clamp(-1.0, 1.0).acos()))
}

fn linspace(stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| stop * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Rotates `|B| = b_magnitude` from `axis_from` to `axis_to` in `n_steps`
/// equal angular steps and evaluates every orientation at each step.
pub fn field_rotation_sweep(
    set: &OrientationSet,
    axis_from: &Vec3,
    axis_to: &Vec3,
    n_steps: usize,
    b_magnitude: f64,
    p: &ModelParams,
) -> Result<Vec<SweepStep>> {
    let (u, w, total) = great_circle(axis_from, axis_to)?;
    let reference = zero_field_tx0_level(p)?;
    linspace(total, n_steps)
        .into_par_iter()
        .map(|angle| {
            let (s, c) = angle.sin_cos();
            let b_field = std::array::from_fn(|i| b_magnitude * (c * u[i] + s * w[i]));
            let fields = FieldConfig::magnetic(b_field);
            let sets = set
                .frames
                .iter()
                .map(|f| transition_set_with_reference(f, &fields, p, reference))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepStep {
                angle,
                b_field,
                sets,
            })
        })
        .collect()
}

/// Applies a `(d_theta, d_phi)` misalignment to `direction` in spherical
/// polar coordinates (polar angle from crystal z, azimuth from x).
pub fn misaligned_direction(direction: &Vec3, misalignment: (f64, f64)) -> Result<Vec3> {
    let d = normalized(direction).ok_or(Error::ZeroDirection)?;
    if misalignment == (0.0, 0.0) {
        return Ok(d);
    }
    let theta = d[2].clamp(-1.0, 1.0).acos() + misalignment.0;
    let phi = d[1].atan2(d[0]) + misalignment.1;
    Ok([
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StarkPoint {
    /// Field magnitude (V/m).
    pub e: f64,
    /// Total shift per orientation (label, Hz), in set order.
    pub shifts: Vec<(String, f64)>,
}

/// Per-orientation linear Stark coefficient (Hz per V/m) along `direction`.
pub fn linear_stark_coefficients(
    set: &OrientationSet,
    direction: &Vec3,
    p: &ModelParams,
    misalignment: (f64, f64),
) -> Result<Vec<(String, f64)>> {
    let d = misaligned_direction(direction, misalignment)?;
    Ok(set
        .frames
        .iter()
        .map(|f| {
            (
                f.label.clone(),
                stark_shift_linear(&field_transform(f, &d), p),
            )
        })
        .collect())
}

/// Per-orientation quadratic Stark coefficient (Hz per (V/m)^2) along `direction`.
pub fn quadratic_stark_coefficients(
    set: &OrientationSet,
    direction: &Vec3,
    p: &ModelParams,
    misalignment: (f64, f64),
) -> Result<Vec<(String, f64)>> {
    let d = misaligned_direction(direction, misalignment)?;
    Ok(set
        .frames
        .iter()
        .map(|f| {
            (
                f.label.clone(),
                stark_shift_quadratic(&field_transform(f, &d), p),
            )
        })
        .collect())
}

/// Total Stark shift of every orientation for fields `0..=e_max` along the
/// (misaligned) direction. A single step evaluates `e_max` only.
pub fn stark_sweep(
    set: &OrientationSet,
    direction: &Vec3,
    e_max: f64,
    n_steps: usize,
    p: &ModelParams,
    misalignment: (f64, f64),
) -> Result<Vec<StarkPoint>> {
    let d = misaligned_direction(direction, misalignment)?;
    let fields = if n_steps == 1 {
        vec![e_max]
    } else {
        linspace(e_max, n_steps)
    };
    Ok(fields
        .into_par_iter()
        .map(|e| {
            let e_vec = scale(&d, e);
            let shifts = set
                .frames
                .iter()
                .map(|f| {
                    let local = field_transform(f, &e_vec);
                    (
                        f.label.clone(),
                        stark_shift_linear(&local, p) + stark_shift_quadratic(&local, p),
                    )
                })
                .collect();
            StarkPoint { e, shifts }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Group {
    pub members: Vec<String>,
    pub representative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupingReport {
    pub field_spec: String,
    pub groups: Vec<Group>,
    pub tolerance: f64,
}

impl GroupingReport {
    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Group containing `label`.
    pub fn group_of(&self, label: &str) -> Option<&Group> {
        self.groups
            .iter()
            .find(|g| g.members.iter().any(|m| m == label))
    }
}

/// Single-linkage clustering of scalar values: neighbours closer than
/// `tolerance` end up in the same group. Groups are ordered by their mean.
pub fn degeneracy_grouping(
    values: &[(String, f64)],
    tolerance: f64,
    field_spec: &str,
) -> GroupingReport {
    let mut sorted: Vec<&(String, f64)> = values.iter().collect();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let mut groups: Vec<Vec<&(String, f64)>> = Vec::new();
    for item in sorted {
        match groups.last_mut() {
            Some(g) if item.1 - g.last().unwrap().1 <= tolerance => g.push(item),
            _ => groups.push(vec![item]),
        }
    }
    let groups = groups
        .into_iter()
        .map(|g| {
            let mean = g.iter().map(|(_, v)| v).sum::<f64>() / g.len() as f64;
            let mut members: Vec<String> = g.iter().map(|(l, _)| l.clone()).collect();
            members.sort();
            Group {
                members,
                representative: mean,
            }
        })
        .collect();
    GroupingReport {
        field_spec: field_spec.to_string(),
        groups,
        tolerance,
    }
}

/// Single-linkage clustering of whole transition sets: two orientations
/// are linked when all four line offsets agree within `tolerance` (Hz).
/// The representative value is the group's mean hole splitting (Hz).
pub fn group_transition_sets(
    sets: &[TransitionSet],
    tolerance: f64,
    field_spec: &str,
) -> GroupingReport {
    let n = sets.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let close = (0..4).all(|k| {
                (sets[i].lines[k].frequency_offset - sets[j].lines[k].frequency_offset).abs()
                    <= tolerance
            });
            if close {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut buckets: Vec<(usize, Vec<usize>)> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        match buckets.iter_mut().find(|(r, _)| *r == root) {
            Some((_, v)) => v.push(i),
            None => buckets.push((root, vec![i])),
        }
    }
    let mut groups: Vec<Group> = buckets
        .into_iter()
        .map(|(_, idx)| {
            let hz = |i: &usize| {
                let s = &sets[*i];
                s.line(LineName::B).frequency_offset - s.line(LineName::D).frequency_offset
            };
            let mean = idx.iter().map(hz).sum::<f64>() / idx.len() as f64;
            let mut members: Vec<String> =
                idx.iter().map(|&i| sets[i].orientation.clone()).collect();
            members.sort();
            Group {
                members,
                representative: mean,
            }
        })
        .collect();
    groups.sort_by(|a, b| {
        a.representative
            .total_cmp(&b.representative)
            .then_with(|| a.members.cmp(&b.members))
    });
    GroupingReport {
        field_spec: field_spec.to_string(),
        groups,
        tolerance,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxState {
    Lower,
    Upper,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchingRatio {
    pub rbr: f64,
    pub cyclicity: f64,
    /// Rate into the `m_j = +1/2` ground channel (unnormalized).
    pub t_plus: f64,
    /// Rate into the `m_j = -1/2` ground channel (unnormalized).
    pub t_minus: f64,
}

impl BranchingRatio {
    /// Branching fraction into the other ground channel.
    pub fn complement(&self) -> f64 {
        1.0 - self.rbr
    }
}

/// Radiative branching ratio of a TX0 eigenstate with the dipole operator
/// taken as the identity in the `m_j` basis and the ground spin states
/// embedded as `m_j = +-1/2`.
///
/// The lower TX0 state's ratio is its weight in the `-1/2` channel, the
/// upper state's its weight in the `+1/2` channel, so that Kramers
/// partners give equal ratios as the field goes to zero.
pub fn radiative_branching_ratio(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
    tx_state: TxState,
) -> Result<BranchingRatio> {
    if norm(&fields.b_field) == 0.0 {
        return Err(Error::ZeroField);
    }
    let es = tx_eigensystem(frame, fields, p)?;
    let (v, forward) = match tx_state {
        TxState::Lower => (&es.vectors[0], 2),
        TxState::Upper => (&es.vectors[1], 1),
    };
    let t_plus = v[1].norm_sqr();
    let t_minus = v[2].norm_sqr();
    let total = t_plus + t_minus;
    if total <= 1e-14 {
        return Err(Error::ZeroTotalRate);
    }
    let rbr = v[forward].norm_sqr() / total;
    Ok(BranchingRatio {
        rbr,
        cyclicity: 1.0 / (1.0 - rbr),
        t_plus,
        t_minus,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinComposition {
    /// Weight of `m_j = +-1/2`.
    pub w_half: f64,
    /// Weight of `m_j = +-3/2`.
    pub w_three_half: f64,
}

/// `m_j` composition of the two TX0 eigenstates (lower first).
///
/// Inside a degenerate Kramers doublet the per-state weights are not
/// defined; both states then report the doublet average, which is also
/// the zero-field limit.
pub fn eigenvector_composition(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<[SpinComposition; 2]> {
    let h = assemble_tx_hamiltonian(frame, fields, p)?;
    let es = eig_hermitian_4(&h)?;
    let comp = |v: &[num_complex::Complex64; 4]| SpinComposition {
        w_half: v[1].norm_sqr() + v[2].norm_sqr(),
        w_three_half: v[0].norm_sqr() + v[3].norm_sqr(),
    };
    let a = comp(&es.vectors[0]);
    let b = comp(&es.vectors[1]);
    if es.values[1] - es.values[0] <= 1e-13 * h.frobenius_norm() {
        let avg = SpinComposition {
            w_half: 0.5 * (a.w_half + b.w_half),
            w_three_half: 0.5 * (a.w_three_half + b.w_three_half),
        };
        return Ok([avg, avg]);
    }
    Ok([a, b])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DielectricLayer {
    pub name: String,
    /// Relative permittivity.
    pub permittivity: f64,
    /// Thickness (m).
    pub thickness: f64,
}

/// Series stack of dielectric layers between two electrodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricStack {
    pub layers: Vec<DielectricLayer>,
    pub sample_index: usize,
}

impl DielectricStack {
    fn preset(he: f64, kapton: f64, si: f64) -> Self {
        let layer = |name: &str, permittivity: f64, thickness: f64| DielectricLayer {
            name: name.to_string(),
            permittivity,
            thickness,
        };
        Self {
            layers: vec![
                layer("liquid helium", 1.057, he),
                layer("kapton", 3.4, kapton),
                layer("silicon", 11.7, si),
            ],
            sample_index: 2,
        }
    }

    /// Loose mount used for fields along [110].
    pub fn mount_110() -> Self {
        Self::preset(0.1e-3, 0.17e-3, 1.9e-3)
    }

    /// Loose mount used for fields along [001].
    pub fn mount_001() -> Self {
        Self::preset(0.1e-3, 0.54e-3, 4.3e-3)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidStack("no layers".into()));
        }
        if self.sample_index >= self.layers.len() {
            return Err(Error::InvalidStack(format!(
                "sample_index {} out of range for {} layers",
                self.sample_index,
                self.layers.len()
            )));
        }
        for l in &self.layers {
            if !(l.thickness > 0.0) || !l.thickness.is_finite() {
                return Err(Error::InvalidStack(format!(
                    "layer `{}` has non-positive thickness",
                    l.name
                )));
            }
            if !(l.permittivity >= 1.0) || !l.permittivity.is_finite() {
                return Err(Error::InvalidStack(format!(
                    "layer `{}` has permittivity below 1",
                    l.name
                )));
            }
        }
        Ok(())
    }

    /// Fraction of the applied voltage dropped across the sample.
    pub fn sample_voltage_ratio(&self) -> Result<f64> {
        self.validate()?;
        let cap = |l: &DielectricLayer| EPSILON_0 * l.permittivity / l.thickness;
        let inv_total: f64 = self.layers.iter().map(|l| 1.0 / cap(l)).sum();
        Ok((1.0 / inv_total) / cap(&self.layers[self.sample_index]))
    }

    pub fn sample_thickness(&self) -> f64 {
        self.layers[self.sample_index].thickness
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveField {
    pub v_sample: f64,
    pub e_sample: f64,
    pub ratio: f64,
}

/// Voltage across and field inside the sample layer for a total applied
/// voltage, treating the stack as capacitors in series.
pub fn effective_field(stack: &DielectricStack, v_total: f64) -> Result<EffectiveField> {
    let ratio = stack.sample_voltage_ratio()?;
    let v_sample = v_total * ratio;
    Ok(EffectiveField {
        v_sample,
        e_sample: v_sample / stack.sample_thickness(),
        ratio,
    })
}
