//! Small dense linear algebra: 4x4 complex Hermitian matrices and their
//! eigen-decomposition, 3x3 real rotations and symmetric rank-2 tensors.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = [f64; 3];

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Relative Hermiticity tolerance accepted by [`eig_hermitian_4`].
pub const HERMITIAN_TOL: f64 = 1e-12;

pub fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn scale(a: &Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn cross(a: &Vec3, b: &Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Unit vector along `a`, or `None` for the zero vector.
pub fn normalized(a: &Vec3) -> Option<Vec3> {
    let n = norm(a);
    if n > 0.0 && n.is_finite() {
        Some(scale(a, 1.0 / n))
    } else {
        None
    }
}

/// Dense 4x4 complex matrix, row-major.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexMatrix4(pub [[Complex64; 4]; 4]);

impl ComplexMatrix4 {
    pub fn zero() -> Self {
        Self([[ZERO; 4]; 4])
    }

    pub fn identity() -> Self {
        Self::from_real_diagonal([1.0; 4])
    }

    pub fn from_real_diagonal(d: [f64; 4]) -> Self {
        let mut m = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            m.0[i][i] = Complex64::new(v, 0.0);
        }
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = *self;
        out.0.iter_mut().flatten().for_each(|z| *z *= s);
        out
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest modulus of `M - M^H`.
    pub fn hermitian_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in i..4 {
                dev = dev.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_deviation() <= rel_tol * self.max_abs()
    }

    pub fn mul_vec(&self, v: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [ZERO; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|k| self.0[i][k] * v[k]).sum();
        }
        out
    }
}

impl Default for ComplexMatrix4 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Index<(usize, usize)> for ComplexMatrix4 {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix4 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for ComplexMatrix4 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for ComplexMatrix4 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..4 {
            for j in 0..4 {
                self.0[i][j] += rhs.0[i][j];
            }
        }
    }
}

impl Sub for ComplexMatrix4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Neg for ComplexMatrix4 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-1.0)
    }
}

impl Mul for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.0[i][j] = (0..4).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        out
    }
}

impl Mul<f64> for ComplexMatrix4 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.scaled(rhs)
    }
}

/// Real 3x3 matrix used for orthogonal coordinate transformations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rotation3(pub [[f64; 3]; 3]);

impl Rotation3 {
    pub const fn identity() -> Self {
        Self([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Self([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn apply(&self, v: &Vec3) -> Vec3 {
        let m = &self.0;
        [dot(&m[0], v), dot(&m[1], v), dot(&m[2], v)]
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, o) in row.iter_mut().enumerate() {
                *o = (0..3).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        Self(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.0;
        out.iter_mut().flatten().for_each(|x| *x *= s);
        Self(out)
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.0;
        dot(&m[0], &cross(&m[1], &m[2]))
    }

    /// `R^T R = I` within `tol`.
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let p = self.transpose().compose(self);
        (0..3).all(|i| (0..3).all(|j| (p.0[i][j] - f64::from(i == j)).abs() <= tol))
    }

    /// Rotation by `angle` (right-handed) about the unit vector `axis`.
    pub fn about_axis(axis: &Vec3, angle: f64) -> Self {
        let [x, y, z] = *axis;
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        Self([
            [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
            [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
            [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
        ])
    }
}

/// Real symmetric rank-2 tensor (strain, stress) in Cartesian components.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTensor3(pub [[f64; 3]; 3]);

impl SymmetricTensor3 {
    pub const fn zero() -> Self {
        Self([[0.0; 3]; 3])
    }

    pub const fn diagonal(a: f64, b: f64, c: f64) -> Self {
        Self([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    /// Builds from the six independent components `xx, yy, zz, yz, zx, xy`.
    pub const fn from_components(xx: f64, yy: f64, zz: f64, yz: f64, zx: f64, xy: f64) -> Self {
        Self([[xx, xy, zx], [xy, yy, yz], [zx, yz, zz]])
    }

    /// Checked constructor from a full matrix.
    pub fn new(m: [[f64; 3]; 3]) -> Result<Self> {
        let t = Self(m);
        let dev = t.asymmetry();
        let scale = m.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
        if dev > 1e-12 * scale {
            return Err(Error::NonSymmetricStrain(dev));
        }
        Ok(t)
    }

    /// Outer product `v v^T`.
    pub fn dyad(v: &Vec3) -> Self {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = v[i] * v[j];
            }
        }
        Self(m)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[i][j]
    }

    pub fn asymmetry(&self) -> f64 {
        let m = &self.0;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn add(&self, rhs: &Self) -> Self {
        let mut m = self.0;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += rhs.0[i][j];
            }
        }
        Self(m)
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.0;
        m.iter_mut().flatten().for_each(|x| *x *= s);
        Self(m)
    }

    /// Eigenvalues in ascending order (closed-form trigonometric solution).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let m = &self.0;
        let p1 = m[0][1].powi(2) + m[0][2].powi(2) + m[1][2].powi(2);
        let q = self.trace() / 3.0;
        let mut ev = if p1 == 0.0 {
            [m[0][0], m[1][1], m[2][2]]
        } else {
            let p2 =
                (m[0][0] - q).powi(2) + (m[1][1] - q).powi(2) + (m[2][2] - q).powi(2) + 2.0 * p1;
            let p = (p2 / 6.0).sqrt();
            let b = self.add(&Self::diagonal(-q, -q, -q)).scaled(1.0 / p);
            let r = (Rotation3(b.0).determinant() / 2.0).clamp(-1.0, 1.0);
            let phi = r.acos() / 3.0;
            let e1 = q + 2.0 * p * phi.cos();
            let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
            [e1, 3.0 * q - e1 - e3, e3]
        };
        ev.sort_by(f64::total_cmp);
        ev
    }
}

/// Eigen-decomposition of a 4x4 Hermitian matrix.
///
/// `vectors[k]` is the normalized eigenvector belonging to `values[k]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenSystem {
    pub values: [f64; 4],
    pub vectors: [[Complex64; 4]; 4],
}

/// Returns `R t R^T`.
pub fn congruence_transform(t: &SymmetricTensor3, r: &Rotation3) -> SymmetricTensor3 {
    let rt = r.compose(&Rotation3(t.0)).compose(&r.transpose());
    let mut m = rt.0;
    // exact symmetry regardless of rounding order
    for i in 0..3 {
        for j in (i + 1)..3 {
            let avg = 0.5 * (m[i][j] + m[j][i]);
            m[i][j] = avg;
            m[j][i] = avg;
        }
    }
    SymmetricTensor3(m)
}

/// Diagonalizes a Hermitian 4x4 matrix with cyclic complex Jacobi rotations.
///
/// Eigenvalues are returned in ascending order. Eigenvectors are made
/// unique: inside each (near-)degenerate cluster the basis is obtained by
/// projecting the standard basis vectors onto the eigenspace in index order
/// and orthonormalizing, then every vector is rotated so that its first
/// non-negligible component is real and positive.
pub fn eig_hermitian_4(m: &ComplexMatrix4) -> Result<EigenSystem> {
    let scale = m.max_abs();
    let deviation = m.hermitian_deviation();
    let allowed = HERMITIAN_TOL * scale;
    if deviation > allowed || !scale.is_finite() {
        return Err(Error::NonHermitian { deviation, allowed });
    }

    let mut a = *m;
    // symmetrize so that the diagonal is exactly real
    for i in 0..4 {
        a.0[i][i] = Complex64::new(a.0[i][i].re, 0.0);
        for j in (i + 1)..4 {
            let avg = 0.5 * (a.0[i][j] + a.0[j][i].conj());
            a.0[i][j] = avg;
            a.0[j][i] = avg.conj();
        }
    }
    let mut v = ComplexMatrix4::identity();

    for _sweep in 0..64 {
        let mut rotated = false;
        for p in 0..3 {
            for q in (p + 1)..4 {
                let b = a.0[p][q];
                let babs = b.norm();
                let app = a.0[p][p].re;
                let aqq = a.0[q][q].re;
                if babs == 0.0 || babs <= 1e-20 * (app.abs() + aqq.abs()) {
                    a.0[p][q] = ZERO;
                    a.0[q][p] = ZERO;
                    continue;
                }
                rotated = true;
                let phase = b / babs; // e^{i phi}
                let theta = (aqq - app) / (2.0 * babs);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // J = D R with D = diag(1, e^{-i phi}) on (p, q)
                let mut j = ComplexMatrix4::identity();
                j.0[p][p] = Complex64::new(c, 0.0);
                j.0[p][q] = Complex64::new(s, 0.0);
                j.0[q][p] = -phase.conj() * s;
                j.0[q][q] = phase.conj() * c;
                a = j.adjoint() * a * j;
                a.0[p][q] = ZERO;
                a.0[q][p] = ZERO;
                for k in 0..4 {
                    a.0[k][k] = Complex64::new(a.0[k][k].re, 0.0);
                }
                v = v * j;
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| a.0[x][x].re.total_cmp(&a.0[y][y].re).then(x.cmp(&y)));
    let values = order.map(|k| a.0[k][k].re);
    let mut vectors = order.map(|k| [v.0[0][k], v.0[1][k], v.0[2][k], v.0[3][k]]);

    let degeneracy_tol = 1e-13 * m.frobenius_norm();
    let mut start = 0;
    while start < 4 {
        let mut end = start + 1;
        while end < 4 && values[end] - values[end - 1] <= degeneracy_tol {
            end += 1;
        }
        if end - start > 1 {
            canonicalize_cluster(&mut vectors[start..end]);
        }
        start = end;
    }
    for vec in vectors.iter_mut() {
        fix_phase(vec);
    }

    Ok(EigenSystem { values, vectors })
}

fn inner(a: &[Complex64; 4], b: &[Complex64; 4]) -> Complex64 {
    (0..4).map(|i| a[i].conj() * b[i]).sum()
}

fn vec_norm(a: &[Complex64; 4]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Replaces an orthonormal basis of a subspace by the one obtained from
/// Gram-Schmidt on the projections of `e_0, e_1, ...`.
fn canonicalize_cluster(cluster: &mut [[Complex64; 4]]) {
    let k = cluster.len();
    let mut out: Vec<[Complex64; 4]> = Vec::with_capacity(k);
    for p in 0..4 {
        if out.len() == k {
            break;
        }
        // projection of e_p onto the cluster span: sum_i v_i conj(v_i[p])
        let mut w = [ZERO; 4];
        for v in cluster.iter() {
            let coef = v[p].conj();
            for i in 0..4 {
                w[i] += v[i] * coef;
            }
        }
        for u in &out {
            let c = inner(u, &w);
            for i in 0..4 {
                w[i] -= u[i] * c;
            }
        }
        let n = vec_norm(&w);
        if n > 1e-6 {
            out.push(w.map(|z| z / n));
        }
    }
    if out.len() == k {
        cluster.copy_from_slice(&out);
    }
}

fn fix_phase(v: &mut [Complex64; 4]) {
    let n = vec_norm(v);
    if let Some(&lead) = v.iter().find(|z| z.norm() > 1e-12 * n) {
        let rot = lead.conj() / lead.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

/// Inner product `<a|b>` of two complex 4-vectors.
pub fn braket(a: &[Complex64; 4], b: &[Complex64; 4]) -> Complex64 {
    inner(a, b)
}

pub(crate) fn c64(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const C_ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

    fn residual(m: &ComplexMatrix4, es: &EigenSystem) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..4 {
            let hv = m.mul_vec(&es.vectors[k]);
            for i in 0..4 {
                worst = worst.max((hv[i] - es.vectors[k][i] * es.values[k]).norm());
            }
        }
        worst
    }

    #[test]
    fn diagonal_matrix_gives_standard_basis() {
        let m = ComplexMatrix4::from_real_diagonal([1.0, 2.0, 3.0, 4.0]);
        let es = eig_hermitian_4(&m).unwrap();
        assert_eq!(es.values, [1.0, 2.0, 3.0, 4.0]);
        for k in 0..4 {
            for i in 0..4 {
                let expect = if i == k { C_ONE } else { ZERO };
                assert!((es.vectors[k][i] - expect).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_matrix() {
        let es = eig_hermitian_4(&ComplexMatrix4::zero()).unwrap();
        assert_eq!(es.values, [0.0; 4]);
        for k in 0..4 {
            assert!((es.vectors[k][k] - C_ONE).norm() < 1e-15);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix4::from_real_diagonal([1.0, 2.0, 3.0, 4.0]);
        m.0[0][1] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            eig_hermitian_4(&m),
            Err(Error::NonHermitian { .. })
        ));
    }

    #[test]
    fn complex_off_diagonal() {
        let mut m = ComplexMatrix4::from_real_diagonal([0.3, -1.0, 2.0, 0.5]);
        let z = Complex64::new(0.2, -0.7);
        m.0[0][2] = z;
        m.0[2][0] = z.conj();
        m.0[1][3] = Complex64::new(0.0, 0.4);
        m.0[3][1] = Complex64::new(0.0, -0.4);
        let es = eig_hermitian_4(&m).unwrap();
        assert!(residual(&m, &es) < 1e-14);
        assert!(es.values.windows(2).all(|w| w[0] <= w[1]));
        let sum: f64 = es.values.iter().sum();
        assert!((sum - m.trace().re).abs() < 1e-14);
    }

    #[test]
    fn degenerate_cluster_is_canonical() {
        // a unitary-rotated diag(1,1,2,2) must return the same basis however it was produced
        let mut m = ComplexMatrix4::from_real_diagonal([1.0, 1.5, 1.5, 1.0]);
        m.0[1][2] = Complex64::new(0.5, 0.0);
        m.0[2][1] = Complex64::new(0.5, 0.0);
        let es = eig_hermitian_4(&m).unwrap();
        assert!((es.values[0] - 1.0).abs() < 1e-15 && (es.values[2] - 1.0).abs() < 1e-15);
        // first vector of the lowest cluster must be e_0 exactly
        assert!((es.vectors[0][0] - C_ONE).norm() < 1e-14);
    }

    #[test]
    fn congruence_identity_and_c2() {
        let t = SymmetricTensor3::from_components(1.0, 2.0, 3.0, 0.4, 0.5, 0.6);
        assert_eq!(congruence_transform(&t, &Rotation3::identity()), t);
        let c2z = Rotation3([[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]]);
        let d = SymmetricTensor3::diagonal(1.0, 2.0, 3.0);
        assert_eq!(congruence_transform(&d, &c2z), d);
    }

    #[test]
    fn congruence_c3_moves_xy_to_zx() {
        // [x,y,z] -> [y,z,x]
        let c3 = Rotation3([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let t = SymmetricTensor3::from_components(0.0, 0.0, 0.0, 0.0, 0.0, 0.7);
        // oracle: explicit index sum (R t R^T)_ij = sum_kl R_ik t_kl R_jl
        let mut oracle = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        oracle[i][j] += c3.0[i][k] * t.0[k][l] * c3.0[j][l];
                    }
                }
            }
        }
        let out = congruence_transform(&t, &c3);
        assert_eq!(out.0, oracle);
        assert_eq!(out.get(2, 0), 0.7);
        assert_eq!(out.get(0, 2), 0.7);
        assert_eq!(out.get(0, 1), 0.0);
    }

    #[test]
    fn tensor_eigenvalues_closed_form() {
        let t = SymmetricTensor3::diagonal(3.0, -1.0, 2.0);
        assert_eq!(t.eigenvalues(), [-1.0, 2.0, 3.0]);
        let r = Rotation3::about_axis(&normalized(&[1.0, 2.0, -0.5]).unwrap(), 0.73);
        let ev = congruence_transform(&t, &r).eigenvalues();
        for (a, b) in ev.iter().zip([-1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rotation_about_axis_is_orthogonal() {
        let r = Rotation3::about_axis(&normalized(&[1.0, -1.0, 0.0]).unwrap(), -0.13);
        assert!(r.is_orthogonal(1e-14));
        assert!((r.determinant() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn symmetric_tensor_checked_constructor() {
        assert!(
            SymmetricTensor3::new([[1.0, 0.2, 0.0], [0.3, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_err()
        );
        assert!(SymmetricTensor3::new([[1.0, 0.2, 0.0], [0.2, 1.0, 0.0], [0.0, 0.0, 1.0]]).is_ok());
    }
}
