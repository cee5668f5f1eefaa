//! Extension of the spacelike piece across its fold: the null singular-image
//! curve, the timelike midpoint extension, the upper fold, and the
//! reflection-translation that produces the next spacelike piece.
//!
//! The defining data is the speed factor
//! `xi(t) = 2 / sqrt(2 cos 3t + a^3 + a^-3)`; the null curve integrates
//! `(1, -cos t, -sin t) xi(t)`. Everything downstream is closed-form in the
//! tabulated curve, and derivatives always use the closed form rather than
//! differences of the table.

use serde::Serialize;
use thiserror::Error;

use crate::curve::PathSpec;
use crate::lorentz::{Mat3, Vec3};
use crate::weierstrass::{WeierstrassData, WeierstrassError};

#[derive(Debug, Error)]
pub enum ExtensionError {
    #[error("fold extension requires a in (0, 1), got {0}")]
    ParameterOutOfRange(f64),
    #[error(transparent)]
    Weierstrass(#[from] WeierstrassError),
}

/// Speed factor of the null curve. Positive for all real `t` when
/// `a` is admissible; the radicand vanishes at `t = pi/3` exactly at `a = 1`.
pub fn null_speed(t: f64, a: f64) -> Result<f64, ExtensionError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(ExtensionError::ParameterOutOfRange(a));
    }
    Ok(null_speed_unchecked(t, a))
}

fn null_speed_unchecked(t: f64, a: f64) -> f64 {
    let k = a.powi(3) + a.powi(-3);
    2.0 / (2.0 * (3.0 * t).cos() + k).sqrt()
}

fn null_speed_derivative(t: f64, a: f64) -> f64 {
    let k = a.powi(3) + a.powi(-3);
    let r = 2.0 * (3.0 * t).cos() + k;
    6.0 * (3.0 * t).sin() * r.powf(-1.5)
}

/// Reparametrised speed of the upper fold: `xi(s + pi)`, which simplifies to
/// `2 / sqrt(a^3 + a^-3 - 2 cos 3s)`.
pub fn upper_fold_speed(s: f64, a: f64) -> Result<f64, ExtensionError> {
    null_speed(s + std::f64::consts::PI, a)
}

const GL7_NODES: [f64; 7] = [
    -0.949107912342759,
    -0.741531185599394,
    -0.405845151377397,
    0.0,
    0.405845151377397,
    0.741531185599394,
    0.949107912342759,
];
const GL7_WEIGHTS: [f64; 7] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
    0.381830050505119,
    0.279705391489277,
    0.129484966168870,
];

fn integrand(t: f64, a: f64) -> Vec3 {
    let xi = null_speed_unchecked(t, a);
    Vec3::new(xi, -t.cos() * xi, -t.sin() * xi)
}

fn gl7_step(a_param: f64, t0: f64, t1: f64) -> Vec3 {
    let half = 0.5 * (t1 - t0);
    let mid = 0.5 * (t0 + t1);
    let mut acc = Vec3::ZERO;
    for (x, w) in GL7_NODES.iter().zip(GL7_WEIGHTS) {
        acc = acc + integrand(mid + half * x, a_param).scale(w);
    }
    acc.scale(half)
}

/// The closed-form null curve of a fold, tabulated densely and interpolated
/// with a local quintic. The table spans enough parameter range for the
/// timelike extension rectangle and both of its fold boundaries.
#[derive(Debug, Clone)]
pub struct NullCurve {
    a: f64,
    h: f64,
    half_count: usize,
    /// values at s = (k - half_count) * h
    table: Vec<Vec3>,
}

const TABLE_SPAN: f64 = 7.2;

impl NullCurve {
    pub fn new(a: f64) -> Result<Self, ExtensionError> {
        if !(a > 0.0 && a < 1.0) {
            return Err(ExtensionError::ParameterOutOfRange(a));
        }
        let h = std::f64::consts::PI / 3000.0;
        let half_count = (TABLE_SPAN / h).ceil() as usize;
        let n = 2 * half_count + 1;
        let mut table = vec![Vec3::ZERO; n];
        // integrate outward from 0 in both directions with compensated sums
        let mut acc = Vec3::ZERO;
        let mut comp = Vec3::ZERO;
        for k in 1..=half_count {
            let t0 = (k - 1) as f64 * h;
            let step = gl7_step(a, t0, t0 + h);
            // Neumaier-style compensation per component
            let add = |acc: &mut f64, comp: &mut f64, x: f64| {
                let t = *acc + x;
                if acc.abs() >= x.abs() {
                    *comp += (*acc - t) + x;
                } else {
                    *comp += (x - t) + *acc;
                }
                *acc = t;
            };
            add(&mut acc.c0, &mut comp.c0, step.c0);
            add(&mut acc.c1, &mut comp.c1, step.c1);
            add(&mut acc.c2, &mut comp.c2, step.c2);
            table[half_count + k] = acc + comp;
        }
        acc = Vec3::ZERO;
        comp = Vec3::ZERO;
        for k in 1..=half_count {
            let t0 = -((k - 1) as f64) * h;
            let step = gl7_step(a, t0, t0 - h);
            let add = |acc: &mut f64, comp: &mut f64, x: f64| {
                let t = *acc + x;
                if acc.abs() >= x.abs() {
                    *comp += (*acc - t) + x;
                } else {
                    *comp += (x - t) + *acc;
                }
                *acc = t;
            };
            add(&mut acc.c0, &mut comp.c0, step.c0);
            add(&mut acc.c1, &mut comp.c1, step.c1);
            add(&mut acc.c2, &mut comp.c2, step.c2);
            table[half_count - k] = acc + comp;
        }
        Ok(NullCurve { a, h, half_count, table })
    }

    pub fn parameter(&self) -> f64 {
        self.a
    }

    pub fn grid_spacing(&self) -> f64 {
        self.h
    }

    /// Curve point by 6-point local Lagrange interpolation on the table;
    /// falls back to direct integration from the table edge for arguments
    /// outside the tabulated span.
    pub fn point(&self, s: f64) -> Vec3 {
        let n = self.table.len();
        let idx_f = s / self.h + self.half_count as f64;
        if idx_f < 0.0 || idx_f > (n - 1) as f64 {
            return self.point_outside(s);
        }
        let k0 = (idx_f.floor() as isize - 2).clamp(0, n as isize - 6) as usize;
        let mut out = Vec3::ZERO;
        for i in 0..6 {
            let xi = (k0 + i) as f64;
            let mut l = 1.0;
            for j in 0..6 {
                if j != i {
                    let xj = (k0 + j) as f64;
                    l *= (idx_f - xj) / (xi - xj);
                }
            }
            out = out + self.table[k0 + i].scale(l);
        }
        out
    }

    fn point_outside(&self, s: f64) -> Vec3 {
        let (edge_s, edge_v) = if s > 0.0 {
            (self.half_count as f64 * self.h, self.table[self.table.len() - 1])
        } else {
            (-(self.half_count as f64) * self.h, self.table[0])
        };
        let mut acc = edge_v;
        let steps = ((s - edge_s).abs() / self.h).ceil() as usize;
        let dt = (s - edge_s) / steps.max(1) as f64;
        let mut t = edge_s;
        for _ in 0..steps {
            acc = acc + gl7_step(self.a, t, t + dt);
            t += dt;
        }
        acc
    }

    /// Closed-form velocity `(1, -cos s, -sin s) xi(s)`; identically
    /// lightlike.
    pub fn velocity(&self, s: f64) -> Vec3 {
        integrand(s, self.a)
    }

    pub fn acceleration(&self, s: f64) -> Vec3 {
        let xi = null_speed_unchecked(s, self.a);
        let dxi = null_speed_derivative(s, self.a);
        Vec3::new(
            dxi,
            -s.cos() * dxi + s.sin() * xi,
            -s.sin() * dxi - s.cos() * xi,
        )
    }

    /// Timelike extension `(gamma(u+v) + gamma(u-v)) / 2`; an immersion for
    /// `v` strictly between 0 and pi.
    pub fn extend(&self, u: f64, v: f64) -> Vec3 {
        (self.point(u + v) + self.point(u - v)).scale(0.5)
    }

    pub fn extend_du(&self, u: f64, v: f64) -> Vec3 {
        (self.velocity(u + v) + self.velocity(u - v)).scale(0.5)
    }

    pub fn extend_dv(&self, u: f64, v: f64) -> Vec3 {
        (self.velocity(u + v) - self.velocity(u - v)).scale(0.5)
    }

    /// The upper fold `sigma(s) = f*(s, pi)`.
    pub fn upper_fold(&self, s: f64) -> Vec3 {
        self.extend(s, std::f64::consts::PI)
    }

    pub fn upper_fold_velocity(&self, s: f64) -> Vec3 {
        self.extend_du(s, std::f64::consts::PI)
    }

    /// True when the velocity and acceleration span a rank-2 frame at `s`.
    pub fn nondegenerate_at(&self, s: f64, tol: f64) -> bool {
        null_rank2(self.velocity(s), self.acceleration(s), tol)
    }
}

/// Rank-2 test for the pair (first derivative, second derivative): the
/// normalised cross product must exceed the tolerance.
pub fn null_rank2(d1: Vec3, d2: Vec3, tol: f64) -> bool {
    let denom = d1.norm() * d2.norm();
    if denom <= 0.0 {
        return false;
    }
    d1.cross(d2).norm() / denom > tol
}

/// The constant reflection carrying the lower-fold frame to the upper.
/// Fixes the time axis, reflects the spatial plane across the pi/3
/// direction; an involutive Lorentz isometry of determinant -1.
pub fn fold_reflection() -> Mat3 {
    let c = std::f64::consts::FRAC_PI_3.cos();
    let s = std::f64::consts::FRAC_PI_3.sin();
    Mat3::new([[1.0, 0.0, 0.0], [0.0, -c, -s], [0.0, -s, c]])
}

/// Both defining routes to the translation part of the upper-fold
/// congruence `sigma(s) = -A gamma(pi/3 - s) + c`:
/// via the fold curves, and via the extension corners.
pub fn fold_translation_both(curve: &NullCurve) -> (Vec3, Vec3) {
    let a_mat = fold_reflection();
    let third = std::f64::consts::FRAC_PI_3;
    let from_folds = curve.upper_fold(0.0) + a_mat.mul_vec(curve.point(third));
    let from_corners =
        curve.extend(0.0, std::f64::consts::PI) + a_mat.mul_vec(curve.extend(third, 0.0));
    (from_folds, from_corners)
}

pub fn fold_translation(curve: &NullCurve) -> Vec3 {
    fold_translation_both(curve).0
}

/// The re-extended spacelike piece: `-A f(z) + c` evaluated through the
/// surface integral along a path from the base point.
pub fn spacelike_reextend(
    data: &WeierstrassData,
    curve: &NullCurve,
    path: &PathSpec,
) -> Result<Vec3, ExtensionError> {
    let f = data.surface_point(path)?;
    Ok(reextend_point(curve, f))
}

/// Apply the fold congruence to an already computed surface point.
pub fn reextend_point(curve: &NullCurve, f: Vec3) -> Vec3 {
    -fold_reflection().mul_vec(f) + fold_translation(curve)
}

/// Sampled rectangle of the timelike extension, tagged for meshing.
#[derive(Debug, Clone, Serialize)]
pub struct ExtensionPatch {
    pub n_u: usize,
    pub n_v: usize,
    pub u_values: Vec<f64>,
    pub v_values: Vec<f64>,
    pub points: Vec<Vec3>,
}

impl ExtensionPatch {
    /// Sample `[0, pi/3] x [0, pi]` on the given grid; `u_values` may be
    /// supplied to match another patch's boundary parametrisation.
    pub fn sample(curve: &NullCurve, u_values: Vec<f64>, n_v: usize) -> Self {
        let n_u = u_values.len();
        let v_values: Vec<f64> = (0..=n_v)
            .map(|j| std::f64::consts::PI * j as f64 / n_v as f64)
            .collect();
        let mut points = Vec::with_capacity(n_u * v_values.len());
        for &v in &v_values {
            for &u in &u_values {
                points.push(curve.extend(u, v));
            }
        }
        ExtensionPatch { n_u, n_v: v_values.len(), u_values, v_values, points }
    }
}
