//! The 24 T centre orientations generated by the point group T_h.
//!
//! Each unprimed orientation is a proper rotation of the identity
//! orientation `z0` (C-C bond along [001], defect plane (1-10)). The label
//! `(ij)` groups orientations by C-C axis `i` and hydrogen position `j`.
//! Primed labels are the inversion partners.
//!
//! `rotation` is the direct coordinate transformation: the image of a
//! vector `[x, y, z]` under the symmetry operation. Fields applied in the
//! lab are brought into an orientation's own coordinates with the inverse
//! (transposed) matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{congruence_transform, Rotation3, SymmetricTensor3, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationFrame {
    pub label: String,
    /// Symmetry operation, e.g. `C3[-1,-1,-1]`; primed frames carry an `i` prefix.
    pub operation: String,
    /// Direct coordinate transformation (signed permutation).
    pub rotation: Rotation3,
    pub inverted: bool,
}

impl OrientationFrame {
    /// Proper-rotation part (the frame's rotation with inversion removed).
    pub fn proper_rotation(&self) -> Rotation3 {
        if self.inverted {
            self.rotation.scaled(-1.0)
        } else {
            self.rotation
        }
    }

    /// Label of the unprimed partner.
    pub fn base_label(&self) -> &str {
        self.label.trim_end_matches('\'')
    }

    pub fn is_identity(&self) -> bool {
        self.label == "z0"
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrientationSet {
    pub frames: Vec<OrientationFrame>,
}

impl OrientationSet {
    pub fn get(&self, label: &str) -> Result<&OrientationFrame> {
        self.frames
            .iter()
            .find(|f| f.label == label)
            .ok_or_else(|| Error::UnknownOrientation(label.to_string()))
    }

    pub fn unprimed(&self) -> impl Iterator<Item = &OrientationFrame> {
        self.frames.iter().filter(|f| !f.inverted)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Index of the frame whose rotation equals `r`, if any.
    pub fn find_rotation(&self, r: &Rotation3) -> Option<usize> {
        self.frames.iter().position(|f| f.rotation.0 == r.0)
    }
}

/// Builds a signed-permutation matrix from the image `[x,y,z] -> [s0*v[p0], s1*v[p1], s2*v[p2]]`.
const fn signed_perm(rows: [(usize, f64); 3]) -> Rotation3 {
    let mut m = [[0.0; 3]; 3];
    m[0][rows[0].0] = rows[0].1;
    m[1][rows[1].0] = rows[1].1;
    m[2][rows[2].0] = rows[2].1;
    Rotation3(m)
}

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;

/// (label, operation, direct transformation) for the proper rotations.
const PROPER: [(&str, &str, Rotation3); 12] = [
    ("z0", "E", signed_perm([(X, 1.0), (Y, 1.0), (Z, 1.0)])),
    (
        "z1",
        "C2[1,0,0]",
        signed_perm([(X, 1.0), (Y, -1.0), (Z, -1.0)]),
    ),
    (
        "z2",
        "C2[0,0,1]",
        signed_perm([(X, -1.0), (Y, -1.0), (Z, 1.0)]),
    ),
    (
        "z3",
        "C2[0,1,0]",
        signed_perm([(X, -1.0), (Y, 1.0), (Z, -1.0)]),
    ),
    (
        "y0",
        "C3[-1,-1,-1]",
        signed_perm([(Y, 1.0), (Z, 1.0), (X, 1.0)]),
    ),
    (
        "y1",
        "C3[1,-1,1]",
        signed_perm([(Y, -1.0), (Z, -1.0), (X, 1.0)]),
    ),
    (
        "y2",
        "C3[-1,1,1]",
        signed_perm([(Y, -1.0), (Z, 1.0), (X, -1.0)]),
    ),
    (
        "y3",
        "C3[1,1,-1]",
        signed_perm([(Y, 1.0), (Z, -1.0), (X, -1.0)]),
    ),
    (
        "x0",
        "C3[1,1,1]",
        signed_perm([(Z, 1.0), (X, 1.0), (Y, 1.0)]),
    ),
    (
        "x1",
        "C3[-1,-1,1]",
        signed_perm([(Z, -1.0), (X, 1.0), (Y, -1.0)]),
    ),
    (
        "x2",
        "C3[-1,1,-1]",
        signed_perm([(Z, 1.0), (X, -1.0), (Y, -1.0)]),
    ),
    (
        "x3",
        "C3[1,-1,-1]",
        signed_perm([(Z, -1.0), (X, -1.0), (Y, 1.0)]),
    ),
];

/// All 24 orientations: the 12 proper rotations followed by their
/// inversion partners in the same order.
pub fn enumerate_orientations() -> OrientationSet {
    let mut frames: Vec<OrientationFrame> = PROPER
        .iter()
        .map(|(label, op, r)| OrientationFrame {
            label: (*label).to_string(),
            operation: (*op).to_string(),
            rotation: *r,
            inverted: false,
        })
        .collect();
    let primed: Vec<OrientationFrame> = frames
        .iter()
        .map(|f| OrientationFrame {
            label: format!("{}'", f.label),
            operation: format!("i{}", f.operation),
            rotation: f.rotation.scaled(-1.0),
            inverted: true,
        })
        .collect();
    frames.extend(primed);
    OrientationSet { frames }
}

/// Expresses a polar lab-frame vector (electric field) in the frame's own
/// coordinates: the inverse of the direct transformation.
pub fn field_transform(frame: &OrientationFrame, v: &Vec3) -> Vec3 {
    frame.rotation.transpose().apply(v)
}

/// Same as [`field_transform`] for an axial vector (magnetic field), which
/// is unchanged by inversion.
pub fn axial_field_transform(frame: &OrientationFrame, v: &Vec3) -> Vec3 {
    frame.proper_rotation().transpose().apply(v)
}

/// Moves a tensor given for the identity orientation onto `frame` using
/// the direct transformation.
pub fn defect_tensor_to_crystal(
    frame: &OrientationFrame,
    t: &SymmetricTensor3,
) -> SymmetricTensor3 {
    congruence_transform(t, &frame.rotation)
}

/// Expresses a lab-frame tensor (applied stress/strain) in the frame's own
/// coordinates using the inverse transformation.
pub fn tensor_to_defect(frame: &OrientationFrame, t: &SymmetricTensor3) -> SymmetricTensor3 {
    congruence_transform(t, &frame.rotation.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_inversion() {
        let set = enumerate_orientations();
        assert_eq!(set.len(), 24);
        let z0 = set.get("z0").unwrap();
        assert_eq!(z0.rotation, Rotation3::identity());
        assert!(!z0.inverted);
        let z0p = set.get("z0'").unwrap();
        assert_eq!(z0p.rotation, Rotation3::identity().scaled(-1.0));
        assert!(z0p.inverted);
    }

    #[test]
    fn c2_about_x() {
        let set = enumerate_orientations();
        let z1 = set.get("z1").unwrap();
        assert_eq!(z1.rotation.apply(&[1.0, 2.0, 3.0]), [1.0, -2.0, -3.0]);
    }

    #[test]
    fn c3_field_transform_matches_inverse_table() {
        let set = enumerate_orientations();
        let y0 = set.get("y0").unwrap();
        assert_eq!(y0.rotation.apply(&[1.0, 2.0, 3.0]), [2.0, 3.0, 1.0]);
        assert_eq!(field_transform(y0, &[1.0, 2.0, 3.0]), [3.0, 1.0, 2.0]);
    }

    #[test]
    fn field_transform_inverts_rotation() {
        let set = enumerate_orientations();
        let v = [0.3, -1.7, 2.2];
        for f in &set.frames {
            assert_eq!(field_transform(f, &f.rotation.apply(&v)), v);
        }
    }

    #[test]
    fn all_frames_distinct_signed_permutations() {
        let set = enumerate_orientations();
        for (i, f) in set.frames.iter().enumerate() {
            assert!(f.rotation.is_orthogonal(0.0));
            for row in f.rotation.0 {
                assert_eq!(row.iter().filter(|x| **x != 0.0).count(), 1);
            }
            let det = f.rotation.determinant();
            assert_eq!(det, if f.inverted { -1.0 } else { 1.0 });
            for g in &set.frames[i + 1..] {
                assert_ne!(f.rotation, g.rotation, "{} vs {}", f.label, g.label);
            }
        }
    }

    #[test]
    fn tensor_transforms() {
        let set = enumerate_orientations();
        let t = SymmetricTensor3::diagonal(1.0, 2.0, 3.0);
        assert_eq!(defect_tensor_to_crystal(set.get("z0").unwrap(), &t), t);
        // [x,y,z] -> [y,z,x] sends diag(a,b,c) to diag(b,c,a)
        assert_eq!(
            defect_tensor_to_crystal(set.get("y0").unwrap(), &t),
            SymmetricTensor3::diagonal(2.0, 3.0, 1.0)
        );
        let g = SymmetricTensor3::from_components(1.0, -2.0, 0.5, 0.1, 0.2, 0.3);
        for f in set.unprimed() {
            let partner = set.get(&format!("{}'", f.label)).unwrap();
            assert_eq!(
                defect_tensor_to_crystal(f, &g),
                defect_tensor_to_crystal(partner, &g)
            );
            let back = tensor_to_defect(f, &defect_tensor_to_crystal(f, &g));
            for i in 0..3 {
                for j in 0..3 {
                    assert!((back.get(i, j) - g.get(i, j)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn group_closure() {
        let set = enumerate_orientations();
        let proper: Vec<_> = set.unprimed().collect();
        assert_eq!(proper.len(), 12);
        for a in &proper {
            for b in &proper {
                let c = a.rotation.compose(&b.rotation);
                let idx = set.find_rotation(&c).expect("closure");
                assert!(!set.frames[idx].inverted);
            }
        }
        // full T_h closure
        for a in &set.frames {
            for b in &set.frames {
                assert!(set
                    .find_rotation(&a.rotation.compose(&b.rotation))
                    .is_some());
            }
        }
    }
}
