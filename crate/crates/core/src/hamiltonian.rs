//! TX-state Hamiltonian of the T centre.
//!
//! The bound-exciton hole is a J = 3/2 acceptor-like state. The defect
//! potential enters as an effective internal strain (Bir-Pikus form),
//! applied stress adds a second strain term plus a scalar
//! piezospectroscopic shift, and a magnetic field couples through the
//! linear and cubic hole g-factors. Electric fields shift the optical
//! transition as a scalar (permanent dipole plus polarizability) and can
//! optionally act on the hole through a cubic quadratic-Stark operator.
//!
//! Energies are in eV. Stark shifts are returned in Hz.
//!
//! Two equivalent assembly routes exist. [`assemble_tx_hamiltonian`]
//! works in the orientation's own coordinates: the internal strain is the
//! identity-orientation tensor and every applied field is brought into the
//! frame with the inverse transformation.
//! [`assemble_tx_hamiltonian_crystal`] works in crystal coordinates: the
//! internal strain is moved onto the orientation with the direct
//! transformation and applied fields stay in the lab frame. Both give the
//! same spectrum; the first one expresses eigenvectors in the defect's own
//! `m_j` basis.

use serde::{Deserialize, Serialize};

use crate::angular_momentum::{j_cubed, j_operators, sym_product, Axis};
use crate::elasticity::{
    piezo_shift, stress_to_strain, ComplianceConstants, PiezoTensorParams, StressTensor,
};
use crate::error::{Error, Result};
use crate::numerics::{norm, ComplexMatrix4, Rotation3, SymmetricTensor3, Vec3};
use crate::symmetry::{
    axial_field_transform, defect_tensor_to_crystal, field_transform, tensor_to_defect,
    OrientationFrame,
};

/// Bohr magneton (eV/T).
pub const MU_B_EV_PER_T: f64 = 5.78838180e-5;
/// Frequency per energy (Hz/eV).
pub const HZ_PER_EV: f64 = 2.41798924e14;

/// Cubic couplings of the acceptor quadratic-Stark operator (eV m^2 / V^2).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CubicStarkParams {
    pub alpha_c: f64,
    pub beta_c: f64,
    pub gamma_c: f64,
}

/// Full parameter record of the TX Hamiltonian. `Default` gives the fitted
/// silicon T centre values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Tetragonal deformation potential (eV).
    pub b: f64,
    /// Trigonal deformation potential (eV).
    pub d: f64,
    /// Principal defect-potential strain along y'.
    pub eps_yy_p: f64,
    /// Principal defect-potential strain along z'.
    pub eps_zz_p: f64,
    /// Tilt of the principal axes about x' = [1-10] (rad). Positive values
    /// turn y' from [110] towards [001].
    pub theta_p: f64,
    pub g1: f64,
    pub g2: f64,
    /// Isotropic ground-state electron g-factor.
    pub g_e: f64,
    /// Linear Stark dipole components (Hz m / V).
    pub a_x: f64,
    pub a_y: f64,
    /// Polarizability components (Hz m^2 / V^2).
    pub alpha_xx: f64,
    pub alpha_xy: f64,
    pub alpha_yy: f64,
    pub alpha_zz: f64,
    pub piezo: PiezoTensorParams,
    pub compliance: ComplianceConstants,
    /// Zero-field T0 -> TX0 transition energy (eV).
    pub e_x: f64,
    pub mu_b: f64,
    pub hz_per_ev: f64,
    /// Optional hole-level quadratic Stark operator; off by default.
    pub acceptor_stark: Option<CubicStarkParams>,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            b: -1.68,
            d: -2.52,
            eps_yy_p: -4.2e-4,
            eps_zz_p: -6.5e-4,
            theta_p: (-7.5_f64).to_radians(),
            g1: 1.23,
            g2: 0.004,
            g_e: 2.005,
            a_x: 3596.0,
            a_y: 7519.0,
            alpha_xx: 0.123,
            alpha_xy: 0.0,
            alpha_yy: 0.106,
            alpha_zz: 0.002,
            piezo: PiezoTensorParams::default(),
            compliance: ComplianceConstants::default(),
            e_x: 0.93557,
            mu_b: MU_B_EV_PER_T,
            hz_per_ev: HZ_PER_EV,
            acceptor_stark: None,
        }
    }
}

impl ModelParams {
    /// Hydrostatic deformation potential, tied to `b`.
    pub fn a_hydro(&self) -> f64 {
        -self.b / 4.0
    }
}

/// External fields in crystal coordinates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FieldConfig {
    /// Magnetic field (T).
    pub b_field: Vec3,
    /// Electric field (V/m).
    pub e_field: Vec3,
    /// Applied stress (Pa).
    pub ext_stress: Option<StressTensor>,
}

impl FieldConfig {
    pub fn magnetic(b_field: Vec3) -> Self {
        Self {
            b_field,
            ..Self::default()
        }
    }

    pub fn electric(e_field: Vec3) -> Self {
        Self {
            e_field,
            ..Self::default()
        }
    }

    pub fn stress(sigma: StressTensor) -> Self {
        Self {
            ext_stress: Some(sigma),
            ..Self::default()
        }
    }
}

/// Principal axes `(x', y', z')` of the defect potential for the identity
/// orientation, after the tilt `theta_p` about x'.
pub fn principal_axes(theta_p: f64) -> Rotation3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let x = [r, -r, 0.0];
    let y0 = [r, r, 0.0];
    let z0 = [0.0, 0.0, 1.0];
    let (s, c) = theta_p.sin_cos();
    let y = [
        c * y0[0] + s * z0[0],
        c * y0[1] + s * z0[1],
        c * y0[2] + s * z0[2],
    ];
    let z = [
        -s * y0[0] + c * z0[0],
        -s * y0[1] + c * z0[1],
        -s * y0[2] + c * z0[2],
    ];
    // rows are the axes
    Rotation3([x, y, z])
}

/// Defect-potential strain of the identity orientation in crystal coordinates.
pub fn internal_strain_tensor(p: &ModelParams) -> SymmetricTensor3 {
    let axes = principal_axes(p.theta_p).0;
    SymmetricTensor3::dyad(&axes[1])
        .scaled(p.eps_yy_p)
        .add(&SymmetricTensor3::dyad(&axes[2]).scaled(p.eps_zz_p))
}

/// Bir-Pikus strain Hamiltonian
/// `b sum_i (J_i^2 - 1) e_ii + d/sqrt3 sum_{i != j} {J_i, J_j}/2 e_ij`.
///
/// With `include_hydro` the general form
/// `-a tr(e) + b sum_i (J_i^2 - J^2/3) e_ii + ...` is built with
/// `a = -b/4`, which reduces to the same operator.
pub fn h_strain(
    eps: &SymmetricTensor3,
    p: &ModelParams,
    include_hydro: bool,
) -> Result<ComplexMatrix4> {
    let asym = eps.asymmetry();
    if asym > 1e-12 * eps.frobenius_norm() {
        return Err(Error::NonSymmetricStrain(asym));
    }
    let ops = j_operators();
    let id = ComplexMatrix4::identity();
    let diag_shift = if include_hydro { 1.25 } else { 1.0 };
    let mut h = ComplexMatrix4::zero();
    for i in 0..3 {
        let j = ops.by_index(i);
        h += (*j * *j - id.scaled(diag_shift)).scaled(p.b * eps.get(i, i));
    }
    let shear = p.d / 3f64.sqrt();
    for i in 0..3 {
        for k in 0..3 {
            if i != k {
                h += sym_product(ops.by_index(i), ops.by_index(k)).scaled(shear * eps.get(i, k));
            }
        }
    }
    if include_hydro {
        h += id.scaled(-p.a_hydro() * eps.trace());
    }
    Ok(h)
}

/// Hole Zeeman term `mu_B (g1 sum B_i J_i + g2 sum B_i J_i^3)`.
pub fn h_zeeman(b_defect: &Vec3, p: &ModelParams) -> ComplexMatrix4 {
    let ops = j_operators();
    let mut h = ComplexMatrix4::zero();
    for axis in Axis::ALL {
        let bi = b_defect[axis.index()];
        if bi == 0.0 {
            continue;
        }
        h += ops.get(axis).scaled(p.mu_b * p.g1 * bi);
        h += j_cubed(axis, ops).scaled(p.mu_b * p.g2 * bi);
    }
    h
}

/// Field components in the identity orientation's dipole axes
/// `X = [110]/sqrt2`, `Y = [001]`, `Z = [1-10]/sqrt2`.
pub fn dipole_frame_components(e_defect: &Vec3) -> Vec3 {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        (e_defect[0] + e_defect[1]) * r,
        e_defect[2],
        (e_defect[0] - e_defect[1]) * r,
    ]
}

/// Linear Stark shift (Hz) for a field in the orientation's own coordinates.
pub fn stark_shift_linear(e_defect: &Vec3, p: &ModelParams) -> f64 {
    let [ex, ey, _] = dipole_frame_components(e_defect);
    p.a_x * ex + p.a_y * ey
}

/// Quadratic Stark shift (Hz) for a field in the orientation's own coordinates.
pub fn stark_shift_quadratic(e_defect: &Vec3, p: &ModelParams) -> f64 {
    let [ex, ey, ez] = dipole_frame_components(e_defect);
    -0.5 * (p.alpha_xx * ex * ex
        + 2.0 * p.alpha_xy * ex * ey
        + p.alpha_yy * ey * ey
        + p.alpha_zz * ez * ez)
}

/// Total scalar Stark shift (Hz) of the TX0 <-> T0 transition of `frame`
/// for a lab-frame field.
pub fn stark_shift_total(frame: &OrientationFrame, e_lab: &Vec3, p: &ModelParams) -> f64 {
    let e = field_transform(frame, e_lab);
    stark_shift_linear(&e, p) + stark_shift_quadratic(&e, p)
}

/// Acceptor-type quadratic Stark operator
/// `alpha E^2 + beta sum (J_i^2 - 5/4) E_i^2 + gamma/sqrt3 sum_{i != j} {J_i,J_j}/2 E_i E_j` (eV).
pub fn h_stark_acceptor_quadratic(e: &Vec3, c: &CubicStarkParams) -> ComplexMatrix4 {
    let ops = j_operators();
    let id = ComplexMatrix4::identity();
    let mut h = id.scaled(c.alpha_c * (e[0] * e[0] + e[1] * e[1] + e[2] * e[2]));
    for i in 0..3 {
        let j = ops.by_index(i);
        h += (*j * *j - id.scaled(1.25)).scaled(c.beta_c * e[i] * e[i]);
    }
    let g = c.gamma_c / 3f64.sqrt();
    for i in 0..3 {
        for k in 0..3 {
            if i != k {
                h += sym_product(ops.by_index(i), ops.by_index(k)).scaled(g * e[i] * e[k]);
            }
        }
    }
    h
}

/// TX Hamiltonian of `frame` in the orientation's own coordinates.
pub fn assemble_tx_hamiltonian(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<ComplexMatrix4> {
    let mut h = h_strain(&internal_strain_tensor(p), p, false)?;
    if let Some(sigma) = &fields.ext_stress {
        let local = StressTensor(tensor_to_defect(frame, &sigma.0));
        h += h_strain(&stress_to_strain(&local, &p.compliance), p, true)?;
        h += ComplexMatrix4::identity().scaled(piezo_shift(&local, &p.piezo));
    }
    h += h_zeeman(&axial_field_transform(frame, &fields.b_field), p);
    if let Some(c) = &p.acceptor_stark {
        h += h_stark_acceptor_quadratic(&field_transform(frame, &fields.e_field), c);
    }
    Ok(h)
}

/// TX Hamiltonian of `frame` in crystal coordinates.
pub fn assemble_tx_hamiltonian_crystal(
    frame: &OrientationFrame,
    fields: &FieldConfig,
    p: &ModelParams,
) -> Result<ComplexMatrix4> {
    let internal = defect_tensor_to_crystal(frame, &internal_strain_tensor(p));
    let mut h = h_strain(&internal, p, false)?;
    if let Some(sigma) = &fields.ext_stress {
        h += h_strain(&stress_to_strain(sigma, &p.compliance), p, true)?;
        let local = StressTensor(tensor_to_defect(frame, &sigma.0));
        h += ComplexMatrix4::identity().scaled(piezo_shift(&local, &p.piezo));
    }
    h += h_zeeman(&fields.b_field, p);
    if let Some(c) = &p.acceptor_stark {
        h += h_stark_acceptor_quadratic(&fields.e_field, c);
    }
    Ok(h)
}

/// Ground-state electron Zeeman splitting `g_e mu_B |B|` (eV).
pub fn ground_zeeman_splitting(b_field: &Vec3, p: &ModelParams) -> f64 {
    p.g_e * p.mu_b * norm(b_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eig_hermitian_4;
    use crate::symmetry::enumerate_orientations;

    fn eigvals(h: &ComplexMatrix4) -> [f64; 4] {
        eig_hermitian_4(h).unwrap().values
    }

    #[test]
    fn internal_strain_examples() {
        let s = 1e-3;
        let p = ModelParams {
            theta_p: 0.0,
            eps_yy_p: s,
            eps_zz_p: 0.0,
            ..ModelParams::default()
        };
        let t = internal_strain_tensor(&p);
        let expect = SymmetricTensor3::from_components(s / 2.0, s / 2.0, 0.0, 0.0, 0.0, s / 2.0);
        for i in 0..3 {
            for j in 0..3 {
                assert!((t.get(i, j) - expect.get(i, j)).abs() < 1e-18);
            }
        }
        let p = ModelParams {
            theta_p: 0.0,
            eps_yy_p: 0.0,
            eps_zz_p: s,
            ..ModelParams::default()
        };
        assert_eq!(
            internal_strain_tensor(&p),
            SymmetricTensor3::diagonal(0.0, 0.0, s)
        );

        let ev = internal_strain_tensor(&ModelParams::default()).eigenvalues();
        for (a, b) in ev.iter().zip([-6.5e-4, -4.2e-4, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn principal_frame_is_right_handed() {
        let r = principal_axes(0.3);
        assert!(r.is_orthogonal(1e-15));
        assert!((r.determinant() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hydrostatic_strain_is_scalar() {
        let p = ModelParams::default();
        let e0 = 2e-4;
        let h = h_strain(&SymmetricTensor3::diagonal(e0, e0, e0), &p, false).unwrap();
        let expect = ComplexMatrix4::identity().scaled(0.75 * p.b * e0);
        assert!((h - expect).max_abs() < 1e-18);
    }

    #[test]
    fn zz_strain_eigenvalues() {
        let p = ModelParams::default();
        let s = 3e-4;
        let ev = eigvals(&h_strain(&SymmetricTensor3::diagonal(0.0, 0.0, s), &p, false).unwrap());
        let mut expect = [1.25, -0.75, -0.75, 1.25].map(|x| x * p.b * s);
        expect.sort_by(f64::total_cmp);
        for (a, b) in ev.iter().zip(expect) {
            assert!((a - b).abs() < 1e-17);
        }
        assert!(((ev[2] - ev[0]) - 2.0 * (p.b * s).abs()).abs() < 1e-17);
    }

    #[test]
    fn hydro_form_reduces_to_same_operator() {
        let p = ModelParams::default();
        let e = SymmetricTensor3::from_components(1e-4, -2e-4, 3e-4, 5e-5, -7e-5, 2e-5);
        let a = h_strain(&e, &p, false).unwrap();
        let b = h_strain(&e, &p, true).unwrap();
        assert!((a - b).max_abs() < 1e-18);
    }

    #[test]
    fn strain_trace_identity() {
        let p = ModelParams::default();
        let e = SymmetricTensor3::from_components(1e-4, -2e-4, 3e-4, 5e-5, -7e-5, 2e-5);
        let h = h_strain(&e, &p, false).unwrap();
        assert!((h.trace().re - p.b * e.trace()).abs() < 1e-18);
    }

    #[test]
    fn rejects_asymmetric_strain() {
        let p = ModelParams::default();
        let e = SymmetricTensor3([[0.0, 1e-4, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
        assert!(matches!(
            h_strain(&e, &p, false),
            Err(Error::NonSymmetricStrain(_))
        ));
    }

    #[test]
    fn internal_splitting_in_range() {
        let p = ModelParams::default();
        let ev = eigvals(&h_strain(&internal_strain_tensor(&p), &p, false).unwrap());
        let gap = ev[2] - ev[1];
        assert!((1.5e-3..=2.2e-3).contains(&gap), "gap {gap}");
        assert!((ev[1] - ev[0]).abs() < 1e-15);
        assert!((ev[3] - ev[2]).abs() < 1e-15);
    }

    #[test]
    fn zeeman_along_z_is_diagonal() {
        let p = ModelParams::default();
        let b = 0.5;
        let h = h_zeeman(&[0.0, 0.0, b], &p);
        for (k, m) in [1.5, 0.5, -0.5, -1.5].into_iter().enumerate() {
            let expect = p.mu_b * b * (p.g1 * m + p.g2 * m * m * m);
            assert!((h[(k, k)].re - expect).abs() < 1e-18);
        }
        assert_eq!(h_zeeman(&[0.0; 3], &p), ComplexMatrix4::zero());
    }

    #[test]
    fn zeeman_traceless_and_odd() {
        let p = ModelParams::default();
        let b = 0.1099;
        for dir in [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.6, -0.48, 0.64],
        ] {
            let h = h_zeeman(&dir.map(|x| x * b), &p);
            assert!(h.trace().norm() < 1e-18);
            let ev = eigvals(&h);
            let evm = eigvals(&h_zeeman(&dir.map(|x| -x * b), &p));
            for k in 0..4 {
                assert!((ev[k] + ev[3 - k]).abs() < 1e-18);
                assert!((ev[k] - evm[k]).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn stark_identity_examples() {
        let p = ModelParams::default();
        let eps = 1.0e5;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let along_001 = [0.0, 0.0, eps];
        let along_110 = [eps * r, eps * r, 0.0];
        assert!((stark_shift_linear(&along_001, &p) - p.a_y * eps).abs() < 1e-6);
        assert!((stark_shift_linear(&along_110, &p) - p.a_x * eps).abs() < 1e-6);
        assert!(
            (stark_shift_quadratic(&along_001, &p) + p.alpha_yy * eps * eps / 2.0).abs() < 1e-3
        );
        assert!(
            (stark_shift_quadratic(&along_110, &p) + p.alpha_xx * eps * eps / 2.0).abs() < 1e-3
        );

        let set = enumerate_orientations();
        let z1 = set.get("z1").unwrap();
        assert!(stark_shift_linear(&field_transform(z1, &along_110), &p).abs() < 1e-6);
    }

    #[test]
    fn acceptor_stark_examples() {
        assert_eq!(
            h_stark_acceptor_quadratic(
                &[0.0; 3],
                &CubicStarkParams {
                    alpha_c: 1.0,
                    beta_c: 2.0,
                    gamma_c: 3.0
                }
            ),
            ComplexMatrix4::zero()
        );
        let e = 2.0;
        let beta = CubicStarkParams {
            alpha_c: 0.0,
            beta_c: 0.3,
            gamma_c: 0.0,
        };
        let h = h_stark_acceptor_quadratic(&[0.0, 0.0, e], &beta);
        let expect = ComplexMatrix4::from_real_diagonal([1.0, -1.0, -1.0, 1.0]).scaled(0.3 * e * e);
        assert!((h - expect).max_abs() < 1e-15);

        let alpha = CubicStarkParams {
            alpha_c: 0.7,
            beta_c: 0.0,
            gamma_c: 0.0,
        };
        let v = [1.0, -2.0, 0.5];
        let h = h_stark_acceptor_quadratic(&v, &alpha);
        assert!((h - ComplexMatrix4::identity().scaled(0.7 * 5.25)).max_abs() < 1e-15);

        let full = CubicStarkParams {
            alpha_c: 0.0,
            beta_c: 0.4,
            gamma_c: -0.9,
        };
        let h = h_stark_acceptor_quadratic(&v, &full);
        assert!(h.trace().norm() < 1e-14);
        assert!(h.hermitian_deviation() < 1e-15);
    }

    #[test]
    fn zero_field_doublets() {
        let p = ModelParams::default();
        let set = enumerate_orientations();
        let h =
            assemble_tx_hamiltonian(set.get("z0").unwrap(), &FieldConfig::default(), &p).unwrap();
        let ev = eigvals(&h);
        assert!((ev[1] - ev[0]).abs() < 1e-15 && (ev[3] - ev[2]).abs() < 1e-15);
        assert!(ev[2] - ev[1] > 1e-3);
    }

    #[test]
    fn ground_splitting() {
        let p = ModelParams::default();
        assert_eq!(ground_zeeman_splitting(&[0.0; 3], &p), 0.0);
        let d = ground_zeeman_splitting(&[0.0, 0.1099, 0.0], &p);
        // 2.005 * 5.78838180e-5 * 0.1099
        assert!((d - 1.2754670e-5).abs() < 1e-12);
        assert!((d * p.hz_per_ev / 1e9 - 3.084).abs() < 1e-3);
        let d2 = ground_zeeman_splitting(&[0.0, 0.2198, 0.0], &p);
        assert!((d2 - 2.0 * d).abs() < 1e-20);
    }

    #[test]
    fn params_roundtrip_json() {
        let p = ModelParams::default();
        let s = serde_json::to_string(&p).unwrap();
        let q: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let partial: ModelParams = serde_json::from_str(r#"{"g1": 1.5}"#).unwrap();
        assert_eq!(partial.g1, 1.5);
        assert_eq!(partial.b, p.b);
        assert!(serde_json::from_str::<ModelParams>(r#"{"bogus": 1.0}"#).is_err());
    }
}
