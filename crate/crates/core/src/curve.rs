//! Hyperelliptic curves `w^2 = p(z)`, branch points, and sign-consistent
//! analytic continuation of `w` along polyline contours.
//!
//! Both curve families used here have `p` monic of degree 7, so there is an
//! additional branch point at infinity which is never an integration
//! endpoint; all contours stay finite.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve parameter must be positive, got {0}")]
    NonPositiveParameter(f64),
    #[error("degenerate curve: branch points collide at a = {0}")]
    DegenerateCurve(f64),
    #[error("path passes within guard radius of branch point {branch} near z = {z}")]
    ContinuationAmbiguity { z: Complex64, branch: Complex64 },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("sheet continuation failed to stabilise near z = {0}")]
    ContinuationStall(Complex64),
}

/// The two hyperelliptic families in play. Both are genus 3 for admissible
/// parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveFamily {
    /// `w^2 = z (z^3 + a^3)(z^3 + a^-3)`, degenerate exactly at `a = 1`.
    SchwarzH { a: f64 },
    /// `w^2 = z (z^3 - a^3)(z^3 + a^-3)`, regular for every `a > 0`.
    Rpd { a: f64 },
}

/// `w^2 = p(z)` with precomputed branch data.
#[derive(Debug, Clone)]
pub struct HyperellipticCurve {
    family: CurveFamily,
    branch_points: Vec<Complex64>,
    min_branch_separation: f64,
    guard_radius: f64,
}

fn cube_roots(of: Complex64) -> [Complex64; 3] {
    // exact thirds of the argument keep symmetric configurations symmetric
    let r = of.norm().cbrt();
    let theta = of.arg() / 3.0;
    let root = |k: f64| Complex64::from_polar(r, theta + k * 2.0 * std::f64::consts::PI / 3.0);
    [root(0.0), root(1.0), root(2.0)]
}

impl HyperellipticCurve {
    pub fn new(family: CurveFamily) -> Result<Self, CurveError> {
        let a = match family {
            CurveFamily::SchwarzH { a } | CurveFamily::Rpd { a } => a,
        };
        if !(a > 0.0) || !a.is_finite() {
            return Err(CurveError::NonPositiveParameter(a));
        }
        if matches!(family, CurveFamily::SchwarzH { .. }) && (a - 1.0).abs() < 1e-12 {
            return Err(CurveError::DegenerateCurve(a));
        }
        let a3 = a.powi(3);
        let inv_a3 = a.powi(-3);
        let mut branch_points = vec![Complex64::new(0.0, 0.0)];
        match family {
            CurveFamily::SchwarzH { .. } => {
                branch_points.extend(cube_roots(Complex64::new(-a3, 0.0)));
                branch_points.extend(cube_roots(Complex64::new(-inv_a3, 0.0)));
            }
            CurveFamily::Rpd { .. } => {
                branch_points.extend(cube_roots(Complex64::new(a3, 0.0)));
                branch_points.extend(cube_roots(Complex64::new(-inv_a3, 0.0)));
            }
        }
        let mut min_sep = f64::INFINITY;
        for i in 0..branch_points.len() {
            for j in (i + 1)..branch_points.len() {
                min_sep = min_sep.min((branch_points[i] - branch_points[j]).norm());
            }
        }
        Ok(HyperellipticCurve {
            family,
            branch_points,
            min_branch_separation: min_sep,
            guard_radius: 1e-3 * min_sep,
        })
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn parameter(&self) -> f64 {
        match self.family {
            CurveFamily::SchwarzH { a } | CurveFamily::Rpd { a } => a,
        }
    }

    /// All finite roots of `p`; each is simple for admissible parameters.
    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch_points
    }

    pub fn min_branch_separation(&self) -> f64 {
        self.min_branch_separation
    }

    /// Paths may not approach a branch point closer than this, except at
    /// declared endpoints. Keeps sheet tracking from silently swapping.
    pub fn guard_radius(&self) -> f64 {
        self.guard_radius
    }

    /// Evaluate `p(z)` in expanded form: `z^7 + K z^4 + s z` with
    /// `K = a^-3 -+ a^3` and `s = +-1` per family. Exactly real on the real
    /// axis, unlike the root product.
    pub fn eval_p(&self, z: Complex64) -> Complex64 {
        let a = self.parameter();
        let (k, s) = match self.family {
            CurveFamily::SchwarzH { .. } => (a.powi(3) + a.powi(-3), 1.0),
            CurveFamily::Rpd { .. } => (a.powi(-3) - a.powi(3), -1.0),
        };
        let z3 = z * z * z;
        z * (z3 * (z3 + k) + s)
    }

    pub fn nearest_branch(&self, z: Complex64) -> (Complex64, f64) {
        let mut best = (self.branch_points[0], f64::INFINITY);
        for &b in &self.branch_points {
            let d = (z - b).norm();
            if d < best.1 {
                best = (b, d);
            }
        }
        best
    }

    /// Sheet value at `z` on the sheet selected by `w_ref`: the square root
    /// of `p(z)` closest to the reference.
    pub fn sheet_near(&self, z: Complex64, w_ref: Complex64) -> Complex64 {
        let cand = self.eval_p(z).sqrt();
        if cand.re * w_ref.re + cand.im * w_ref.im < 0.0 {
            -cand
        } else {
            cand
        }
    }
}

/// A point on the curve, carrying its sheet value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetPoint {
    pub z: Complex64,
    pub w: Complex64,
}

impl SheetPoint {
    pub fn new(z: Complex64, w: Complex64) -> Self {
        SheetPoint { z, w }
    }

    /// Relative defect `|w^2 - p(z)| / (1 + |p(z)|)`.
    pub fn defect(&self, curve: &HyperellipticCurve) -> f64 {
        let p = curve.eval_p(self.z);
        (self.w * self.w - p).norm() / (1.0 + p.norm())
    }
}

/// Polyline contour in the `z`-plane. Interior waypoints must stay away from
/// branch points; the endpoints may be declared to sit on one.
#[derive(Debug, Clone)]
pub struct PathSpec {
    pub waypoints: Vec<Complex64>,
    pub start_is_branch: bool,
    pub end_is_branch: bool,
    /// Optional per-segment initial subdivision for the quadrature.
    pub refine: Vec<u32>,
}

impl PathSpec {
    pub fn polyline(waypoints: Vec<Complex64>) -> Self {
        PathSpec {
            waypoints,
            start_is_branch: false,
            end_is_branch: false,
            refine: Vec::new(),
        }
    }

    pub fn with_branch_end(mut self) -> Self {
        self.end_is_branch = true;
        self
    }

    pub fn with_branch_start(mut self) -> Self {
        self.start_is_branch = true;
        self
    }

    /// Counterclockwise circular polygon around `center`.
    pub fn circle(center: Complex64, radius: f64, sides: usize) -> Self {
        let mut pts = Vec::with_capacity(sides + 1);
        for k in 0..=sides {
            let t = 2.0 * std::f64::consts::PI * k as f64 / sides as f64;
            pts.push(center + Complex64::from_polar(radius, t));
        }
        // close exactly
        let first = pts[0];
        *pts.last_mut().unwrap() = first;
        PathSpec::polyline(pts)
    }

    /// Capsule-shaped loop around the segment `[b1, b2]` with the given
    /// clearance, as a closed polyline.
    pub fn capsule(b1: Complex64, b2: Complex64, clearance: f64, arc_steps: usize) -> Self {
        let d = (b2 - b1) / (b2 - b1).norm();
        let n = Complex64::new(0.0, 1.0) * d;
        let mut pts = Vec::new();
        // side b1+rho*n -> b2+rho*n
        pts.push(b1 + n.scale(clearance));
        pts.push(b2 + n.scale(clearance));
        // arc around b2 from +n to -n through +d
        for k in 1..arc_steps {
            let beta = std::f64::consts::FRAC_PI_2 - std::f64::consts::PI * k as f64 / arc_steps as f64;
            pts.push(b2 + (d.scale(beta.cos()) + n.scale(beta.sin())).scale(clearance));
        }
        pts.push(b2 - n.scale(clearance));
        pts.push(b1 - n.scale(clearance));
        // arc around b1 from -n to +n through -d
        for k in 1..arc_steps {
            let beta = -std::f64::consts::FRAC_PI_2 - std::f64::consts::PI * k as f64 / arc_steps as f64;
            pts.push(b1 + (d.scale(beta.cos()) + n.scale(beta.sin())).scale(clearance));
        }
        let first = pts[0];
        pts.push(first);
        PathSpec::polyline(pts)
    }

    pub fn reversed(&self) -> PathSpec {
        let mut waypoints = self.waypoints.clone();
        waypoints.reverse();
        let mut refine = self.refine.clone();
        refine.reverse();
        PathSpec {
            waypoints,
            start_is_branch: self.end_is_branch,
            end_is_branch: self.start_is_branch,
            refine,
        }
    }

    pub fn is_closed(&self) -> bool {
        match (self.waypoints.first(), self.waypoints.last()) {
            (Some(a), Some(b)) => (a - b).norm() == 0.0,
            _ => false,
        }
    }

    pub fn segments(&self) -> usize {
        self.waypoints.len().saturating_sub(1)
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        if self.waypoints.is_empty() {
            return Err(CurveError::InvalidPath("empty waypoint list".into()));
        }
        for pair in self.waypoints.windows(2) {
            if (pair[0] - pair[1]).norm() == 0.0 {
                return Err(CurveError::InvalidPath(
                    "consecutive waypoints coincide".into(),
                ));
            }
        }
        Ok(())
    }
}

fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = ((p - a).re * ab.re + (p - a).im * ab.im) / len2;
    let t = t.clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}

/// Check the guard band of every branch point against every segment,
/// exempting declared branch endpoints on their own terminal segments.
pub fn check_path_guards(curve: &HyperellipticCurve, path: &PathSpec) -> Result<(), CurveError> {
    path.validate()?;
    let guard = curve.guard_radius();
    let n_seg = path.segments();
    for (i, pair) in path.waypoints.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        for &bp in curve.branch_points() {
            let exempt_start = path.start_is_branch && i == 0 && (path.waypoints[0] - bp).norm() < guard;
            let exempt_end = path.end_is_branch
                && i == n_seg - 1
                && (path.waypoints[n_seg] - bp).norm() < guard;
            if exempt_start || exempt_end {
                continue;
            }
            let d = dist_point_segment(bp, a, b);
            if d < guard {
                return Err(CurveError::ContinuationAmbiguity { z: a, branch: bp });
            }
        }
    }
    Ok(())
}

/// Anchors of a sheet continuation along one parametrised arc: pairs of
/// parameter value and sheet point.
pub type SheetAnchors = Vec<(f64, SheetPoint)>;

/// Continue the sheet along `z = zf(t)`, `t` from `t0` to `t1`, starting at
/// `w0`. Steps are halved until the sheet moves by less than half its
/// magnitude per step, which keeps the square-root choice unambiguous.
/// `end_at_zero` permits `w -> 0` at the final endpoint.
pub fn continue_param<F>(
    curve: &HyperellipticCurve,
    zf: F,
    w0: Complex64,
    end_at_zero: bool,
) -> Result<SheetAnchors, CurveError>
where
    F: Fn(f64) -> Complex64,
{
    let mut out: SheetAnchors = Vec::with_capacity(32);
    let mut t = 0.0_f64;
    let mut w = w0;
    out.push((t, SheetPoint::new(zf(t), w)));
    let mut dt = 0.125_f64;
    const DT_MIN: f64 = 1e-13;
    while t < 1.0 {
        let mut accepted = false;
        while dt >= DT_MIN {
            let t2 = (t + dt).min(1.0);
            let z2 = zf(t2);
            let cand = curve.sheet_near(z2, w);
            let scale = w.norm().max(1e-300);
            if (cand - w).norm() <= 0.5 * scale || (t2 == 1.0 && end_at_zero && cand.norm() < 0.5 * scale)
            {
                t = t2;
                w = cand;
                out.push((t, SheetPoint::new(z2, w)));
                accepted = true;
                break;
            }
            dt *= 0.5;
        }
        if !accepted {
            if end_at_zero && 1.0 - t < 1e-9 {
                // terminal jump onto the branch point itself
                let z2 = zf(1.0);
                let cand = curve.sheet_near(z2, w);
                out.push((1.0, SheetPoint::new(z2, cand)));
                t = 1.0;
            } else {
                return Err(CurveError::ContinuationStall(zf(t)));
            }
        }
        dt = (dt * 1.6).min(0.25);
    }
    Ok(out)
}

/// Sheet value at parameter `t` given continuation anchors: square root of
/// `p` matched in sign against the anchor nearest in parameter.
pub fn sheet_from_anchors(
    curve: &HyperellipticCurve,
    anchors: &SheetAnchors,
    t: f64,
    z: Complex64,
) -> Complex64 {
    let idx = match anchors.binary_search_by(|probe| probe.0.partial_cmp(&t).unwrap()) {
        Ok(i) => i,
        Err(i) => {
            if i == 0 {
                0
            } else if i >= anchors.len() {
                anchors.len() - 1
            } else if (anchors[i].0 - t).abs() < (t - anchors[i - 1].0).abs() {
                i
            } else {
                i - 1
            }
        }
    };
    curve.sheet_near(z, anchors[idx].1.w)
}

/// Continue the sheet along a full polyline path. The returned samples
/// include every waypoint plus the adaptive refinements between them.
pub fn continue_sheet(
    curve: &HyperellipticCurve,
    path: &PathSpec,
    w0: Complex64,
) -> Result<Vec<SheetPoint>, CurveError> {
    check_path_guards(curve, path)?;
    let start = path.waypoints[0];
    let p0 = curve.eval_p(start);
    if (w0 * w0 - p0).norm() > 1e-8 * (1.0 + p0.norm()) {
        return Err(CurveError::InvalidPath(format!(
            "starting sheet value w0 = {w0} does not satisfy w^2 = p(z) at z = {start}"
        )));
    }
    let mut samples = vec![SheetPoint::new(start, w0)];
    let mut w = w0;
    let n_seg = path.segments();
    for (i, pair) in path.waypoints.windows(2).enumerate() {
        let (a, b) = (pair[0], pair[1]);
        let terminal_branch = path.end_is_branch && i == n_seg - 1;
        let anchors = continue_param(curve, |t| a + (b - a).scale(t), w, terminal_branch)?;
        samples.extend(anchors.iter().skip(1).map(|&(_, sp)| sp));
        w = anchors.last().unwrap().1.w;
    }
    Ok(samples)
}
