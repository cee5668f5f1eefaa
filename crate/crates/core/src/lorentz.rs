//! Flat 3-space arithmetic for both ambient signatures.
//!
//! The Lorentzian metric is `<u,v> = -u0*v0 + u1*v1 + u2*v2`; the Euclidean
//! one is the ordinary dot product. A single vector type serves both, with
//! the metric chosen per operation, since the integrands that produce surface
//! points share their structure across the two signatures.

use num_complex::Complex64;
use serde::ser::SerializeTuple;
use serde::{Serialize, Serializer};

/// Real 3-vector. Coordinates are `(x0, x1, x2)` in Lorentzian context and
/// `(x1, x2, x3)` in Euclidean context.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { c0: 0.0, c1: 0.0, c2: 0.0 };

    pub fn new(c0: f64, c1: f64, c2: f64) -> Self {
        Vec3 { c0, c1, c2 }
    }

    /// Lorentzian inner product `-u0*v0 + u1*v1 + u2*v2`.
    pub fn minkowski_dot(self, other: Vec3) -> f64 {
        -self.c0 * other.c0 + self.c1 * other.c1 + self.c2 * other.c2
    }

    /// Euclidean dot product.
    pub fn euclid_dot(self, other: Vec3) -> f64 {
        self.c0 * other.c0 + self.c1 * other.c1 + self.c2 * other.c2
    }

    pub fn norm(self) -> f64 {
        self.euclid_dot(self).sqrt()
    }

    pub fn dist(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn scale(self, s: f64) -> Vec3 {
        Vec3::new(self.c0 * s, self.c1 * s, self.c2 * s)
    }

    /// Euclidean cross product; used as a generic rank-2 test for pairs of
    /// vectors, not as a metric notion.
    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.c1 * other.c2 - self.c2 * other.c1,
            self.c2 * other.c0 - self.c0 * other.c2,
            self.c0 * other.c1 - self.c1 * other.c0,
        )
    }

    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(self.scale(1.0 / n))
        } else {
            None
        }
    }

    pub fn is_finite(self) -> bool {
        self.c0.is_finite() && self.c1.is_finite() && self.c2.is_finite()
    }

    /// Causal class of the vector under the Lorentzian metric.
    /// Lightlike iff `|<v,v>| <= tol`.
    pub fn causal_class(self, tol: f64) -> CausalClass {
        debug_assert!(tol >= 0.0);
        let q = self.minkowski_dot(self);
        if q.abs() <= tol {
            CausalClass::Lightlike
        } else if q < 0.0 {
            CausalClass::Timelike
        } else {
            CausalClass::Spacelike
        }
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.c0, self.c1, self.c2]
    }
}

impl std::ops::Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.c0 + rhs.c0, self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl std::ops::Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3::new(self.c0 - rhs.c0, self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

impl std::ops::Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.c0, -self.c1, -self.c2)
    }
}

impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.c0)?;
        t.serialize_element(&self.c1)?;
        t.serialize_element(&self.c2)?;
        t.end()
    }
}

/// Causal type of a tangent vector or tangent plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CausalClass {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Row-major 3x3 real matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3 {
    pub m: [[f64; 3]; 3],
}

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3 {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn new(m: [[f64; 3]; 3]) -> Self {
        Mat3 { m }
    }

    pub fn diag(d0: f64, d1: f64, d2: f64) -> Self {
        Mat3::new([[d0, 0.0, 0.0], [0.0, d1, 0.0], [0.0, 0.0, d2]])
    }

    pub fn mul_vec(&self, v: Vec3) -> Vec3 {
        let a = v.as_array();
        let r = |i: usize| self.m[i][0] * a[0] + self.m[i][1] * a[1] + self.m[i][2] * a[2];
        Vec3::new(r(0), r(1), r(2))
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Mat3::new(out)
    }

    pub fn transpose(&self) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[j][i];
            }
        }
        Mat3::new(out)
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn scale(&self, s: f64) -> Mat3 {
        let mut out = self.m;
        for row in &mut out {
            for cell in row {
                *cell *= s;
            }
        }
        Mat3::new(out)
    }

    pub fn add(&self, other: &Mat3) -> Mat3 {
        let mut out = self.m;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell += other.m[i][j];
            }
        }
        Mat3::new(out)
    }

    pub fn sub(&self, other: &Mat3) -> Mat3 {
        self.add(&other.scale(-1.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// Largest deviation of `<Mu, Mv> - <u, v>` over the coordinate frame,
    /// with the Lorentzian inner product. Zero for exact isometries.
    pub fn minkowski_isometry_defect(&self) -> f64 {
        // M^T J M = J with J = diag(-1, 1, 1)
        let j = Mat3::diag(-1.0, 1.0, 1.0);
        let lhs = self.transpose().mul_mat(&j).mul_mat(self);
        lhs.sub(&j).max_abs()
    }

    pub fn euclid_isometry_defect(&self) -> f64 {
        let lhs = self.transpose().mul_mat(self);
        lhs.sub(&Mat3::IDENTITY).max_abs()
    }
}

impl Serialize for Mat3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.m.serialize(serializer)
    }
}

/// Complex 3-vector, the value type of the Weierstrass integrands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVec3 {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
}

impl CVec3 {
    pub const ZERO: CVec3 = CVec3 {
        c0: Complex64::new(0.0, 0.0),
        c1: Complex64::new(0.0, 0.0),
        c2: Complex64::new(0.0, 0.0),
    };

    pub fn new(c0: Complex64, c1: Complex64, c2: Complex64) -> Self {
        CVec3 { c0, c1, c2 }
    }

    pub fn re(self) -> Vec3 {
        Vec3::new(self.c0.re, self.c1.re, self.c2.re)
    }

    pub fn im(self) -> Vec3 {
        Vec3::new(self.c0.im, self.c1.im, self.c2.im)
    }

    pub fn conj(self) -> CVec3 {
        CVec3::new(self.c0.conj(), self.c1.conj(), self.c2.conj())
    }

    pub fn scale(self, s: Complex64) -> CVec3 {
        CVec3::new(self.c0 * s, self.c1 * s, self.c2 * s)
    }

    pub fn norm_l1(self) -> f64 {
        self.c0.norm() + self.c1.norm() + self.c2.norm()
    }

    /// Apply a real matrix componentwise over the complex entries.
    pub fn apply_mat(self, m: &Mat3) -> CVec3 {
        let r = |i: usize| m.m[i][0] * self.c0 + m.m[i][1] * self.c1 + m.m[i][2] * self.c2;
        CVec3::new(r(0), r(1), r(2))
    }
}

impl std::ops::Add for CVec3 {
    type Output = CVec3;
    fn add(self, rhs: CVec3) -> CVec3 {
        CVec3::new(self.c0 + rhs.c0, self.c1 + rhs.c1, self.c2 + rhs.c2)
    }
}

impl std::ops::Sub for CVec3 {
    type Output = CVec3;
    fn sub(self, rhs: CVec3) -> CVec3 {
        CVec3::new(self.c0 - rhs.c0, self.c1 - rhs.c1, self.c2 - rhs.c2)
    }
}

impl std::ops::Neg for CVec3 {
    type Output = CVec3;
    fn neg(self) -> CVec3 {
        CVec3::new(-self.c0, -self.c1, -self.c2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minkowski_inner_examples() {
        let e0 = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(e0.minkowski_dot(e0), -1.0);
        let l = Vec3::new(1.0, 1.0, 0.0);
        assert_eq!(l.minkowski_dot(l), 0.0);
        let u = Vec3::new(0.0, 1.0, 2.0);
        let v = Vec3::new(3.0, 4.0, 5.0);
        assert_eq!(u.minkowski_dot(v), 14.0);
    }

    #[test]
    fn euclid_inner_examples() {
        let e0 = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(e0.euclid_dot(e0), 1.0);
        assert_eq!(Vec3::new(1.0, 1.0, 0.0).euclid_dot(Vec3::new(1.0, -1.0, 0.0)), 0.0);
        assert_eq!(Vec3::new(0.0, 1.0, 2.0).euclid_dot(Vec3::new(3.0, 4.0, 5.0)), 14.0);
    }

    #[test]
    fn causal_classification() {
        let tol = 1e-12;
        assert_eq!(Vec3::new(1.0, 0.0, 0.0).causal_class(tol), CausalClass::Timelike);
        assert_eq!(Vec3::new(1.0, 1.0, 0.0).causal_class(tol), CausalClass::Lightlike);
        assert_eq!(Vec3::new(0.0, 1.0, 0.0).causal_class(tol), CausalClass::Spacelike);
    }

    proptest! {
        #[test]
        fn minkowski_symmetric_bilinear(
            a in -1e3f64..1e3, b in -1e3f64..1e3, c in -1e3f64..1e3,
            d in -1e3f64..1e3, e in -1e3f64..1e3, f in -1e3f64..1e3,
            s in -10f64..10.0,
        ) {
            let u = Vec3::new(a, b, c);
            let v = Vec3::new(d, e, f);
            prop_assert_eq!(u.minkowski_dot(v), v.minkowski_dot(u));
            let lhs = u.scale(s).minkowski_dot(v);
            let rhs = s * u.minkowski_dot(v);
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn matrix_determinant_and_isometry() {
        let rot = Mat3::new([[1.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
        assert!((rot.det() - 1.0).abs() < 1e-15);
        assert!(rot.minkowski_isometry_defect() < 1e-15);

        let boost = {
            let t = 0.3_f64;
            Mat3::new([
                [t.cosh(), t.sinh(), 0.0],
                [t.sinh(), t.cosh(), 0.0],
                [0.0, 0.0, 1.0],
            ])
        };
        assert!(boost.minkowski_isometry_defect() < 1e-15);
        assert!(boost.euclid_isometry_defect() > 1e-2);
    }
}
