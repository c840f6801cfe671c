//! J = 3/2 angular momentum operators in the Luttinger-Kohn basis
//! ordered `{+3/2, +1/2, -1/2, -3/2}` (Condon-Shortley phases).

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::numerics::{c64, ComplexMatrix4};

/// `m_j` of each basis index.
pub const BASIS_MJ: [f64; 4] = [1.5, 0.5, -0.5, -1.5];

pub const BASIS_LABELS: [&str; 4] = ["+3/2", "+1/2", "-1/2", "-3/2"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug)]
pub struct JOperators {
    pub jx: ComplexMatrix4,
    pub jy: ComplexMatrix4,
    pub jz: ComplexMatrix4,
}

impl JOperators {
    pub fn get(&self, axis: Axis) -> &ComplexMatrix4 {
        match axis {
            Axis::X => &self.jx,
            Axis::Y => &self.jy,
            Axis::Z => &self.jz,
        }
    }

    pub fn by_index(&self, i: usize) -> &ComplexMatrix4 {
        self.get(Axis::ALL[i])
    }
}

pub fn build_j_operators() -> JOperators {
    let j = 1.5_f64;
    // J+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; row index of m+1 is col - 1
    let mut jplus = ComplexMatrix4::zero();
    for col in 1..4 {
        let m = BASIS_MJ[col];
        jplus.0[col - 1][col] = c64((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jminus = jplus.adjoint();
    let jx = (jplus + jminus).scaled(0.5);
    let mut jy = ComplexMatrix4::zero();
    for r in 0..4 {
        for c in 0..4 {
            // (J+ - J-) / 2i
            jy.0[r][c] = (jplus.0[r][c] - jminus.0[r][c]) * Complex64::new(0.0, -0.5);
        }
    }
    let jz = ComplexMatrix4::from_real_diagonal(BASIS_MJ);
    JOperators { jx, jy, jz }
}

/// Shared, lazily built operator set.
pub fn j_operators() -> &'static JOperators {
    static OPS: OnceLock<JOperators> = OnceLock::new();
    OPS.get_or_init(build_j_operators)
}

/// Symmetrized product `(ab + ba) / 2`.
pub fn sym_product(a: &ComplexMatrix4, b: &ComplexMatrix4) -> ComplexMatrix4 {
    (*a * *b + *b * *a).scaled(0.5)
}

pub fn j_cubed(axis: Axis, ops: &JOperators) -> ComplexMatrix4 {
    let j = ops.get(axis);
    *j * *j * *j
}
