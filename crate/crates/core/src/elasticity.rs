//! Applied stress, silicon compliance and the piezospectroscopic shift.

use serde::{Deserialize, Serialize};

use crate::numerics::SymmetricTensor3;

/// Cubic compliance constants (Pa^-1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplianceConstants {
    pub s11: f64,
    pub s12: f64,
    pub s44: f64,
}

impl ComplianceConstants {
    /// Silicon at 4.2 K.
    pub const SILICON_4K: Self = Self {
        s11: 7.61736e-12,
        s12: -2.12733e-12,
        s44: 12.4626e-12,
    };
}

impl Default for ComplianceConstants {
    fn default() -> Self {
        Self::SILICON_4K
    }
}

/// Applied stress in crystal coordinates (Pa). Compression is negative.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StressTensor(pub SymmetricTensor3);

/// Piezospectroscopic tensor components of a monoclinic centre (eV/Pa).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiezoTensorParams {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl Default for PiezoTensorParams {
    fn default() -> Self {
        Self {
            a1: -13.7e-12,
            a2: 16.1e-12,
            a3: -1.6e-12,
            a4: 2.2e-12,
        }
    }
}

/// Strain from stress through the cubic compliance matrix in Voigt form.
///
/// Shear components come out as `s44 * sigma_ij` and are used unchanged as
/// the off-diagonal strain entries.
pub fn stress_to_strain(sigma: &StressTensor, c: &ComplianceConstants) -> SymmetricTensor3 {
    let s = &sigma.0;
    let (xx, yy, zz) = (s.get(0, 0), s.get(1, 1), s.get(2, 2));
    SymmetricTensor3::from_components(
        c.s11 * xx + c.s12 * (yy + zz),
        c.s11 * yy + c.s12 * (zz + xx),
        c.s11 * zz + c.s12 * (xx + yy),
        c.s44 * s.get(1, 2),
        c.s44 * s.get(2, 0),
        c.s44 * s.get(0, 1),
    )
}

/// Uniaxial stress of magnitude `t` along `(sin(theta)/sqrt2, sin(theta)/sqrt2, cos(theta))`,
/// i.e. in the (1-10) plane from [001] (`theta = 0`) through [111] to [110] (`theta = pi/2`).
pub fn stress_for_direction(theta: f64, t: f64) -> StressTensor {
    let (s, c) = theta.sin_cos();
    let xx = 0.5 * t * s * s;
    let yz = t * s * c / std::f64::consts::SQRT_2;
    StressTensor(SymmetricTensor3::from_components(
        xx,
        xx,
        t * c * c,
        yz,
        yz,
        xx,
    ))
}

/// Transition shift (eV) for a stress already expressed in the
/// orientation's own coordinates.
pub fn piezo_shift(sigma_defect: &StressTensor, p: &PiezoTensorParams) -> f64 {
    let s = &sigma_defect.0;
    p.a1 * s.get(2, 2)
        + p.a2 * (s.get(0, 0) + s.get(1, 1))
        + 2.0 * p.a3 * s.get(0, 1)
        + 2.0 * p.a4 * (s.get(1, 2) - s.get(2, 0))
}
