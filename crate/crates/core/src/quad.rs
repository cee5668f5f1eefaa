//! Adaptive Gauss-Kronrod contour integration for the Weierstrass
//! integrands, with a `tau^2` endpoint substitution that removes the
//! inverse-square-root behaviour at branch-point endpoints.

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{
    check_path_guards, continue_param, sheet_from_anchors, CurveError, HyperellipticCurve,
    PathSpec, SheetPoint,
};
use crate::lorentz::CVec3;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error("adaptive quadrature failed to converge on segment {segment} (error estimate {err:.3e})")]
    NonConvergent { segment: usize, err: f64 },
    #[error("integrand pole encountered at z = {0}")]
    Pole(Complex64),
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    /// Absolute tolerance per unit parameter length.
    pub tol: f64,
    pub max_depth: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { tol: 1e-12, max_depth: 28 }
    }
}

// 15-point Kronrod nodes on [-1, 1] with the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod panel for a complex-vector integrand on `[a, b]`.
/// Returns (integral, error estimate).
fn gk15<F>(f: &F, a: f64, b: f64) -> (CVec3, f64)
where
    F: Fn(f64) -> CVec3,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = fc.scale(Complex64::new(WGK[7], 0.0));
    let mut gauss = fc.scale(Complex64::new(WG[3], 0.0));
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let s = f1 + f2;
        kron = kron + s.scale(Complex64::new(WGK[j], 0.0));
        if j % 2 == 1 {
            gauss = gauss + s.scale(Complex64::new(WG[j / 2], 0.0));
        }
    }
    let kron = kron.scale(Complex64::new(half, 0.0));
    let gauss = gauss.scale(Complex64::new(half, 0.0));
    (kron, (kron - gauss).norm_l1())
}

/// Globally adaptive bisection driven by the Kronrod-Gauss discrepancy.
pub fn adaptive<F>(f: &F, a: f64, b: f64, opts: &QuadOptions) -> Result<CVec3, f64>
where
    F: Fn(f64) -> CVec3,
{
    fn recurse<F: Fn(f64) -> CVec3>(
        f: &F,
        a: f64,
        b: f64,
        tol: f64,
        depth: u32,
        max_depth: u32,
        worst: &mut f64,
    ) -> CVec3 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= max_depth {
            if err > tol {
                *worst = worst.max(err);
            }
            return val;
        }
        let mid = 0.5 * (a + b);
        let left = recurse(f, a, mid, 0.5 * tol, depth + 1, max_depth, worst);
        let right = recurse(f, mid, b, 0.5 * tol, depth + 1, max_depth, worst);
        left + right
    }
    let mut worst = 0.0;
    let val = recurse(f, a, b, opts.tol.max(1e-15), 0, opts.max_depth, &mut worst);
    if worst > 0.0 {
        Err(worst)
    } else {
        Ok(val)
    }
}

/// Contour integral of `form(z, w) dz` along a polyline path on the curve,
/// starting from sheet value `w0`. Returns the integral and the sheet value
/// at the end of the path for chaining.
pub fn integrate_contour<F>(
    curve: &HyperellipticCurve,
    path: &PathSpec,
    w0: Complex64,
    form: &F,
    opts: &QuadOptions,
) -> Result<(CVec3, Complex64), QuadError>
where
    F: Fn(SheetPoint) -> CVec3,
{
    check_path_guards(curve, path)?;
    if path.waypoints.len() < 2 {
        return Ok((CVec3::ZERO, w0));
    }
    let mut total = CVec3::ZERO;
    let mut w = w0;
    let n_seg = path.segments();
    for (i, pair) in path.waypoints.windows(2).enumerate() {
        let (za, zb) = (pair[0], pair[1]);
        if path.start_is_branch && i == 0 {
            return Err(CurveError::InvalidPath(
                "paths starting on a branch point are not supported; integrate toward the branch point instead".into(),
            )
            .into());
        }
        let branch_end = path.end_is_branch && i == n_seg - 1;
        let (val, w_next) = if branch_end {
            let (v, _) = integrate_branch_segment(curve, za, zb, w, form, opts, i)?;
            (v, Complex64::new(0.0, 0.0))
        } else {
            integrate_plain_segment(curve, za, zb, w, form, opts, i)?
        };
        total = total + val;
        w = w_next;
    }
    Ok((total, w))
}

fn integrate_plain_segment<F>(
    curve: &HyperellipticCurve,
    za: Complex64,
    zb: Complex64,
    w0: Complex64,
    form: &F,
    opts: &QuadOptions,
    segment: usize,
) -> Result<(CVec3, Complex64), QuadError>
where
    F: Fn(SheetPoint) -> CVec3,
{
    let dz = zb - za;
    let anchors = continue_param(curve, |t| za + dz.scale(t), w0, false)?;
    let w_end = anchors.last().unwrap().1.w;
    let integrand = |t: f64| {
        let z = za + dz.scale(t);
        let w = sheet_from_anchors(curve, &anchors, t, z);
        form(SheetPoint::new(z, w)).scale(dz)
    };
    match adaptive(&integrand, 0.0, 1.0, opts) {
        Ok(v) => Ok((v, w_end)),
        Err(err) => Err(QuadError::NonConvergent { segment, err }),
    }
}

/// Segment ending exactly on a branch point `zb`: substitute
/// `z = zb + (za - zb) tau^2` so the `1/sqrt` endpoint behaviour of the
/// `dz/w` forms becomes analytic in `tau`.
fn integrate_branch_segment<F>(
    curve: &HyperellipticCurve,
    za: Complex64,
    zb: Complex64,
    w_at_za: Complex64,
    form: &F,
    opts: &QuadOptions,
    segment: usize,
) -> Result<(CVec3, Complex64), QuadError>
where
    F: Fn(SheetPoint) -> CVec3,
{
    let d = za - zb;
    // tau runs 1 -> 0 along the segment; continue the sheet from tau = 1
    let zf = |s: f64| zb + d.scale((1.0 - s) * (1.0 - s));
    let anchors = continue_param(curve, zf, w_at_za, true)?;
    let integrand = |tau: f64| {
        let z = zb + d.scale(tau * tau);
        let s = 1.0 - tau;
        let w = sheet_from_anchors(curve, &anchors, s, z);
        form(SheetPoint::new(z, w)).scale(d.scale(2.0 * tau))
    };
    // integral over z from za to zb equals -(integral over tau in [0,1])
    match adaptive(&integrand, 0.0, 1.0, opts) {
        Ok(v) => Ok((-v, Complex64::new(0.0, 0.0))),
        Err(err) => Err(QuadError::NonConvergent { segment, err }),
    }
}

/// Plain-domain contour integral (no sheet tracking); used for the punctured
/// plane families. `guards` are points the path must avoid.
pub fn integrate_plane<F>(
    path: &PathSpec,
    guards: &[Complex64],
    guard_radius: f64,
    form: &F,
    opts: &QuadOptions,
) -> Result<CVec3, QuadError>
where
    F: Fn(Complex64) -> CVec3,
{
    path.validate()?;
    let mut total = CVec3::ZERO;
    for (i, pair) in path.waypoints.windows(2).enumerate() {
        let (za, zb) = (pair[0], pair[1]);
        for &g in guards {
            let dd = dist_segment(g, za, zb);
            if dd < guard_radius {
                return Err(QuadError::Pole(g));
            }
        }
        let dz = zb - za;
        let integrand = |t: f64| form(za + dz.scale(t)).scale(dz);
        match adaptive(&integrand, 0.0, 1.0, opts) {
            Ok(v) => total = total + v,
            Err(err) => return Err(QuadError::NonConvergent { segment: i, err }),
        }
    }
    Ok(total)
}

fn dist_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}
