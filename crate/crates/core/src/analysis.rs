//! Pointwise differential geometry of the surfaces: singular set and fold
//! criterion, fundamental forms and the Hopf coefficient, boundary segment
//! classification, the Gauss map, and a discrete zero-mean-curvature check
//! for sampled meshes.

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::SheetPoint;
use crate::lorentz::Vec3;
use crate::weierstrass::{Signature, WeierstrassData, WeierstrassError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("point is not on the singular set (|g| - 1 = {residual:.3e})")]
    NotSingular { residual: f64 },
    #[error("fold residual undefined: eta vanishes at z = {0}")]
    UndefinedResidual(Complex64),
    #[error("Gauss map undefined on the singular set (|g| = 1 at z = {0})")]
    SingularPoint(Complex64),
    #[error("boundary segment has mixed Hopf phase (off-real {off_re:.3e}, off-imaginary {off_im:.3e})")]
    MixedPhase { off_re: f64, off_im: f64 },
    #[error(transparent)]
    Weierstrass(#[from] WeierstrassError),
}

/// `|g(p)| - 1`; zero exactly on the singular set of a Lorentzian family.
pub fn singular_residual(data: &WeierstrassData, p: SheetPoint) -> f64 {
    data.g(p.z).norm() - 1.0
}

/// Raw non-degeneracy test: `|dg/dz|` exceeds the tolerance at the point.
pub fn nondegenerate_gauss_derivative(data: &WeierstrassData, z: Complex64, tol: f64) -> bool {
    data.dg(z).norm() > tol
}

/// Non-degeneracy of a singular point. The point must lie on the singular
/// set within `sing_tol`.
pub fn is_nondegenerate_singular(
    data: &WeierstrassData,
    p: SheetPoint,
    sing_tol: f64,
    deriv_tol: f64,
) -> Result<bool, AnalysisError> {
    let r = singular_residual(data, p);
    if r.abs() > sing_tol {
        return Err(AnalysisError::NotSingular { residual: r });
    }
    Ok(nondegenerate_gauss_derivative(data, p.z, deriv_tol))
}

/// The fold criterion quantity `Re(dg / (g^2 eta))` in the curve
/// coordinate. Vanishes identically along non-degenerate fold curves.
pub fn fold_residual(data: &WeierstrassData, p: SheetPoint) -> Result<f64, AnalysisError> {
    let g = data.g(p.z);
    let dg = data.dg(p.z);
    let eta = data
        .eta
        .coeff(p)
        .map_err(|_| AnalysisError::UndefinedResidual(p.z))?;
    let denom = g * g * eta;
    if denom.norm() < 1e-150 {
        return Err(AnalysisError::UndefinedResidual(p.z));
    }
    Ok((dg / denom).re)
}

/// First and second fundamental form data at a regular point: the conformal
/// factor of `ds^2`, and the Hopf coefficient `q` of `eta dg`. The second
/// fundamental form is `-q dz^2 - conj(q dz^2)`, stored as its (Re, Im)
/// pair.
#[derive(Debug, Clone, Copy)]
pub struct FundamentalForms {
    pub ds2_coeff: f64,
    pub ii: (f64, f64),
    pub hopf: Complex64,
}

impl FundamentalForms {
    /// Hopf coefficient along a curve with tangent `dz/dt = dir`.
    pub fn hopf_along(&self, dir: Complex64) -> Complex64 {
        self.hopf * dir * dir
    }
}

pub fn fundamental_forms(
    data: &WeierstrassData,
    p: SheetPoint,
) -> Result<FundamentalForms, AnalysisError> {
    let g = data.g(p.z);
    let h = data.eta.coeff(p)?;
    let factor = match data.signature {
        Signature::Lorentzian => (1.0 - g.norm_sqr()).powi(2),
        Signature::Euclidean => (1.0 + g.norm_sqr()).powi(2),
    };
    let q = h * data.dg(p.z);
    Ok(FundamentalForms {
        ds2_coeff: factor * h.norm_sqr(),
        ii: ((-q).re, (-q).im),
        hopf: q,
    })
}

/// Boundary pieces are straight lines exactly when the Hopf coefficient is
/// purely imaginary along them, and planar curvature curves when it is
/// purely real.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BoundaryClass {
    StraightLine,
    PlanarCurve,
}

/// Classify a sampled boundary segment by the phase of the Hopf
/// differential evaluated on the segment tangent: each sample pairs a curve
/// point with the direction `dz/dt` of the boundary curve there, and the
/// decisive quantity is `q * (dz/dt)^2`. `class_tol` bounds the relative
/// off-class part.
pub fn classify_boundary(
    data: &WeierstrassData,
    samples: &[(SheetPoint, Complex64)],
    class_tol: f64,
) -> Result<BoundaryClass, AnalysisError> {
    let mut off_re = 0.0_f64;
    let mut off_im = 0.0_f64;
    for &(p, dir) in samples {
        let q = data.eta.coeff(p)? * data.dg(p.z) * dir * dir;
        let n = q.norm();
        if n == 0.0 {
            continue;
        }
        off_re = off_re.max(q.re.abs() / n);
        off_im = off_im.max(q.im.abs() / n);
    }
    if off_re <= class_tol {
        Ok(BoundaryClass::StraightLine)
    } else if off_im <= class_tol {
        Ok(BoundaryClass::PlanarCurve)
    } else {
        Err(AnalysisError::MixedPhase { off_re, off_im })
    }
}

/// Gauss map value: the point on the unit hyperboloid (Lorentzian) or unit
/// sphere (Euclidean) whose stereographic image is `g`.
#[derive(Debug, Clone, Copy)]
pub struct GaussValue {
    pub ambient: Vec3,
    pub stereographic: Complex64,
}

pub fn gauss_map(
    data: &WeierstrassData,
    p: SheetPoint,
    sing_tol: f64,
) -> Result<GaussValue, AnalysisError> {
    let g = data.g(p.z);
    let gn2 = g.norm_sqr();
    match data.signature {
        Signature::Lorentzian => {
            if (g.norm() - 1.0).abs() <= sing_tol {
                return Err(AnalysisError::SingularPoint(p.z));
            }
            // branch with x0 <= -1 for |g| < 1: keeps 1 - x0 >= 2
            let x0 = -(1.0 + gn2) / (1.0 - gn2);
            let xy = g.scale(2.0 / (1.0 - gn2));
            Ok(GaussValue {
                ambient: Vec3::new(x0, xy.re, xy.im),
                stereographic: g,
            })
        }
        Signature::Euclidean => {
            let x3 = (gn2 - 1.0) / (gn2 + 1.0);
            let xy = g.scale(2.0 / (1.0 + gn2));
            Ok(GaussValue {
                ambient: Vec3::new(xy.re, xy.im, x3),
                stereographic: g,
            })
        }
    }
}

/// Discrete zero-mean-curvature residuals on an indexed triangle mesh.
///
/// Linear finite-element stiffness assembled from the induced metric (the
/// ambient inner product restricted to each face), which reduces to the
/// cotangent formula in the Euclidean case and extends it by the metric
/// signature elsewhere. Residual per interior vertex is the norm of the
/// discrete Laplacian of the coordinate functions divided by the lumped
/// mass; it converges like h^2 on smooth patches of exact ZMC surfaces.
#[derive(Debug, Clone)]
pub struct CurvatureStats {
    /// One entry per vertex; `None` for boundary, guard-band and
    /// degenerate-adjacent vertices.
    pub per_vertex: Vec<Option<f64>>,
    pub max_residual: f64,
    pub included: usize,
    pub degenerate_faces: usize,
    /// Vertices on the mesh boundary or sharing a face with one. The
    /// symmetric error cancellation of the stencil weakens on this first
    /// ring, so refinement studies exclude it.
    pub near_boundary: Vec<bool>,
}

impl CurvatureStats {
    /// Largest residual over vertices with full interior stencils.
    pub fn interior_max(&self) -> f64 {
        self.per_vertex
            .iter()
            .zip(&self.near_boundary)
            .filter_map(|(r, nb)| if *nb { None } else { *r })
            .fold(0.0, f64::max)
    }
}

pub fn zmc_residuals(
    vertices: &[Vec3],
    faces: &[[u32; 3]],
    signature: Signature,
    face_excluded: &[bool],
) -> CurvatureStats {
    let ip = |u: Vec3, v: Vec3| match signature {
        Signature::Lorentzian => u.minkowski_dot(v),
        Signature::Euclidean => u.euclid_dot(v),
    };
    let nv = vertices.len();
    let mut lap = vec![Vec3::ZERO; nv];
    let mut mass = vec![0.0_f64; nv];
    let mut vertex_ok = vec![true; nv];
    let mut degenerate_faces = 0usize;

    let mut edge_count: std::collections::HashMap<(u32, u32), u32> = std::collections::HashMap::new();

    for (fi, f) in faces.iter().enumerate() {
        let [i, j, k] = *f;
        for (p, q) in [(i, j), (j, k), (k, i)] {
            let key = (p.min(q), p.max(q));
            *edge_count.entry(key).or_insert(0) += 1;
        }
        let excluded = face_excluded.get(fi).copied().unwrap_or(false);
        let (pi, pj, pk) = (
            vertices[i as usize],
            vertices[j as usize],
            vertices[k as usize],
        );
        let u = pj - pi;
        let v = pk - pi;
        let e = ip(u, u);
        let ff = ip(u, v);
        let g = ip(v, v);
        let d = e * g - ff * ff;
        let euclid_scale = (u.euclid_dot(u) + v.euclid_dot(v)).powi(2);
        if d.abs() < 1e-14 * euclid_scale.max(1e-300) {
            degenerate_faces += 1;
            for &vv in f {
                vertex_ok[vv as usize] = false;
            }
            continue;
        }
        if excluded {
            for &vv in f {
                vertex_ok[vv as usize] = false;
            }
            continue;
        }
        let sqrt_abs_d = d.abs().sqrt();
        let area = 0.5 * sqrt_abs_d;
        let sgn = d.signum();
        // dphi_l adj(M) dphi_m with adj(M) = [[g, -ff], [-ff, e]]
        let kmat = [
            [e + g - 2.0 * ff, ff - g, ff - e],
            [ff - g, g, -ff],
            [ff - e, -ff, e],
        ];
        let idx = [i as usize, j as usize, k as usize];
        for l in 0..3 {
            let mut acc = Vec3::ZERO;
            for m in 0..3 {
                let w = 0.5 * sgn * kmat[l][m] / sqrt_abs_d;
                acc = acc + vertices[idx[m]].scale(w);
            }
            lap[idx[l]] = lap[idx[l]] + acc;
            mass[idx[l]] += area / 3.0;
        }
    }

    let mut on_boundary = vec![false; nv];
    for (&(p, q), &count) in &edge_count {
        if count != 2 {
            vertex_ok[p as usize] = false;
            vertex_ok[q as usize] = false;
            on_boundary[p as usize] = true;
            on_boundary[q as usize] = true;
        }
    }
    let mut near_boundary = on_boundary.clone();
    for f in faces {
        if f.iter().any(|&v| on_boundary[v as usize]) {
            for &v in f {
                near_boundary[v as usize] = true;
            }
        }
    }

    let mut per_vertex = vec![None; nv];
    let mut max_residual = 0.0_f64;
    let mut included = 0usize;
    for vi in 0..nv {
        if vertex_ok[vi] && mass[vi] > 0.0 {
            let r = lap[vi].norm() / mass[vi];
            per_vertex[vi] = Some(r);
            max_residual = max_residual.max(r);
            included += 1;
        }
    }
    CurvatureStats {
        per_vertex,
        max_residual,
        included,
        degenerate_faces,
        near_boundary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{continue_sheet, CurveFamily, HyperellipticCurve, PathSpec};
    use crate::quad::QuadOptions;
    use crate::weierstrass::{Domain, EtaForm, GaussMap};
    use approx::assert_abs_diff_eq;

    fn schwarz_h_zmc_data(a: f64) -> WeierstrassData {
        let curve = HyperellipticCurve::new(CurveFamily::SchwarzH { a }).unwrap();
        let base_z = Complex64::new(1.0, 0.0);
        let base_w = curve.eval_p(base_z).sqrt();
        WeierstrassData {
            signature: Signature::Lorentzian,
            gauss_map: GaussMap::Power(1),
            eta: EtaForm::DzOverW { factor: Complex64::new(0.0, 1.0) },
            domain: Domain::Curve(curve),
            base_z,
            base_w,
            quad: QuadOptions::default(),
        }
    }

    fn sheet_on_circle(data: &WeierstrassData, n: usize) -> Vec<SheetPoint> {
        let curve = data.domain.curve().unwrap();
        let mut waypoints: Vec<Complex64> = (0..=n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
            .collect();
        let first = waypoints[0];
        *waypoints.last_mut().unwrap() = first;
        let path = PathSpec::polyline(waypoints);
        let samples = continue_sheet(curve, &path, data.base_w).unwrap();
        // keep only the requested angles
        samples
            .into_iter()
            .filter(|p| {
                let th = p.z.arg();
                let steps = th / (2.0 * std::f64::consts::PI / n as f64);
                (steps - steps.round()).abs() < 1e-9 && (p.z.norm() - 1.0).abs() < 1e-12
            })
            .collect()
    }

    #[test]
    fn singular_residual_examples() {
        let data = schwarz_h_zmc_data(0.5);
        for t in [0.0, 0.7, 2.9] {
            let z = Complex64::from_polar(1.0, t);
            let p = SheetPoint::new(z, Complex64::new(1.0, 0.0));
            assert_abs_diff_eq!(singular_residual(&data, p), 0.0, epsilon = 1e-15);
        }
        let p = SheetPoint::new(Complex64::new(0.5, 0.0), Complex64::new(1.0, 0.0));
        assert_abs_diff_eq!(singular_residual(&data, p), -0.5, epsilon = 1e-15);
        let p = SheetPoint::new(
            Complex64::from_polar(2.0, std::f64::consts::PI / 7.0),
            Complex64::new(1.0, 0.0),
        );
        assert_abs_diff_eq!(singular_residual(&data, p), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn nondegeneracy_examples() {
        let data = schwarz_h_zmc_data(0.5);
        // g = z: non-degenerate everywhere on the singular set
        let z = Complex64::from_polar(1.0, 0.4);
        let curve = data.domain.curve().unwrap();
        let p = SheetPoint::new(z, curve.eval_p(z).sqrt());
        assert!(is_nondegenerate_singular(&data, p, 1e-8, 1e-10).unwrap());

        // synthetic g = z^2 at the origin: derivative vanishes
        let synth = WeierstrassData {
            gauss_map: GaussMap::Power(2),
            ..schwarz_h_zmc_data(0.5)
        };
        assert!(!nondegenerate_gauss_derivative(&synth, Complex64::new(0.0, 0.0), 1e-10));

        // Karcher-type k=3 at origin: not on the singular set at all
        let karcher = WeierstrassData {
            signature: Signature::Lorentzian,
            gauss_map: GaussMap::Power(2),
            eta: EtaForm::DzOverPoly { factor: Complex64::new(0.0, 1.0), degree: 6 },
            domain: Domain::PuncturedPlane {
                punctures: (0..6)
                    .map(|k| Complex64::from_polar(1.0, std::f64::consts::PI * (2.0 * k as f64 + 1.0) / 6.0))
                    .collect(),
            },
            base_z: Complex64::new(0.0, 0.0),
            base_w: Complex64::new(1.0, 0.0),
            quad: QuadOptions::default(),
        };
        let origin = SheetPoint::new(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0));
        assert!(matches!(
            is_nondegenerate_singular(&karcher, origin, 1e-8, 1e-10),
            Err(AnalysisError::NotSingular { .. })
        ));
    }

    #[test]
    fn fold_residual_vanishes_on_circle_for_main_family() {
        for a in [0.1, 0.5, 0.9] {
            let data = schwarz_h_zmc_data(a);
            let samples = sheet_on_circle(&data, 360);
            assert!(samples.len() >= 360);
            for p in &samples {
                let r = fold_residual(&data, *p).unwrap();
                assert!(r.abs() <= 1e-10, "a={a}, z={}, residual={r:.3e}", p.z);
            }
        }
    }

    #[test]
    fn fold_residual_off_circle_and_conjugate() {
        let data = schwarz_h_zmc_data(0.5);
        let curve = data.domain.curve().unwrap().clone();
        // generically nonzero off the circle (the symmetry rays arg z in
        // {0, pi/3, ...} are exceptional: the quantity vanishes along them
        // even away from the singular set)
        let z = Complex64::from_polar(0.8, 0.4);
        let p = SheetPoint::new(z, curve.eval_p(z).sqrt());
        assert!(fold_residual(&data, p).unwrap().abs() > 1e-6);

        // conjugate family (eta without the imaginary factor) fails the fold
        // criterion on the circle
        let conj = WeierstrassData {
            eta: EtaForm::DzOverW { factor: Complex64::new(1.0, 0.0) },
            ..schwarz_h_zmc_data(0.5)
        };
        let samples = sheet_on_circle(&conj, 360);
        let failures = samples
            .iter()
            .filter(|p| fold_residual(&conj, **p).unwrap().abs() > 1e-10)
            .count();
        assert!(failures >= 300, "only {failures} of {} fail", samples.len());
    }

    #[test]
    fn hopf_phase_on_boundary_rays() {
        let a = 0.5;
        let data = schwarz_h_zmc_data(a);
        let curve = data.domain.curve().unwrap().clone();

        // real segment [0.05, 0.95]: w real positive, Q purely imaginary
        let seg: Vec<(SheetPoint, Complex64)> = (0..40)
            .map(|k| {
                let t = 0.05 + 0.9 * k as f64 / 39.0;
                let z = Complex64::new(t, 0.0);
                (
                    SheetPoint::new(z, curve.eval_p(z).sqrt()),
                    Complex64::new(1.0, 0.0),
                )
            })
            .collect();
        assert_eq!(
            classify_boundary(&data, &seg, 1e-8).unwrap(),
            BoundaryClass::StraightLine
        );

        // samples along the pi/3 ray, sheet carried from the base point
        let dir = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let ray = |t0: f64, t1: f64| -> Vec<(SheetPoint, Complex64)> {
            let path = PathSpec::polyline(vec![
                data.base_z,
                Complex64::new(t1, 1e-3),
                Complex64::from_polar(t1, std::f64::consts::FRAC_PI_3),
                Complex64::from_polar(t0, std::f64::consts::FRAC_PI_3),
            ]);
            let samples = continue_sheet(&curve, &path, data.base_w).unwrap();
            samples
                .into_iter()
                .filter(|p| {
                    (p.z.arg() - std::f64::consts::FRAC_PI_3).abs() < 1e-12
                        && p.z.norm() >= t0.min(t1) - 1e-12
                })
                .map(|p| (p, dir))
                .collect()
        };
        let inner = ray(0.05, 0.45);
        assert!(inner.len() > 4);
        assert_eq!(
            classify_boundary(&data, &inner, 1e-8).unwrap(),
            BoundaryClass::PlanarCurve
        );
        let outer = ray(0.55, 0.95);
        assert_eq!(
            classify_boundary(&data, &outer, 1e-8).unwrap(),
            BoundaryClass::StraightLine
        );

        // mixed segment errors out
        let mixed: Vec<(SheetPoint, Complex64)> =
            inner.iter().chain(seg.iter()).copied().collect();
        assert!(matches!(
            classify_boundary(&data, &mixed, 1e-8),
            Err(AnalysisError::MixedPhase { .. })
        ));
    }

    #[test]
    fn fundamental_form_examples() {
        let a = 0.5;
        let data = schwarz_h_zmc_data(a);
        let curve = data.domain.curve().unwrap().clone();
        let z = Complex64::new(0.4, 0.0);
        let p = SheetPoint::new(z, curve.eval_p(z).sqrt());
        let ff = fundamental_forms(&data, p).unwrap();
        assert!(ff.hopf.re.abs() < 1e-14 && ff.hopf.im.abs() > 0.0);
        let expected = (1.0 - z.norm_sqr()).powi(2) / curve.eval_p(z).norm();
        assert_abs_diff_eq!(ff.ds2_coeff, expected, epsilon = 1e-12);

        // along the inner pi/3 ray the Hopf phase (on the ray tangent) is real
        let dir = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
        let z = dir.scale(0.3);
        let w = curve.eval_p(z).sqrt(); // either sheet: realness is sheet-independent
        let q_ray = fundamental_forms(&data, SheetPoint::new(z, w))
            .unwrap()
            .hopf_along(dir);
        assert!(q_ray.im.abs() < 1e-13 * q_ray.norm().max(1.0), "{q_ray}");

        // conformal factor in the branch chart at z -> 0 tends to
        // 4 / |p'(0)| = 4 for this family
        let tau = 1e-3;
        let z = Complex64::new(tau * tau, 0.0);
        let p = SheetPoint::new(z, curve.eval_p(z).sqrt());
        let ff = fundamental_forms(&data, p).unwrap();
        // chart factor |dz/dtau|^2 = 4 tau^2
        let chart = ff.ds2_coeff * 4.0 * tau * tau;
        assert_abs_diff_eq!(chart, 4.0, epsilon = 1e-9);
    }

    #[test]
    fn gauss_map_examples() {
        let data = schwarz_h_zmc_data(0.5);
        let w1 = Complex64::new(1.0, 0.0);
        // g = 0 at z = 0
        let v = gauss_map(&data, SheetPoint::new(Complex64::new(0.0, 0.0), w1), 1e-9).unwrap();
        assert_eq!(v.ambient, Vec3::new(-1.0, 0.0, 0.0));

        // g = 0.5: solve the two defining equations
        let v = gauss_map(&data, SheetPoint::new(Complex64::new(0.5, 0.0), w1), 1e-9).unwrap();
        let x = v.ambient;
        assert_abs_diff_eq!(x.minkowski_dot(x), -1.0, epsilon = 1e-12);
        let stereo = Complex64::new(x.c1, x.c2) / (1.0 - x.c0);
        assert_abs_diff_eq!((stereo - Complex64::new(0.5, 0.0)).norm(), 0.0, epsilon = 1e-12);

        // |g| -> 1 is flagged
        assert!(matches!(
            gauss_map(&data, SheetPoint::new(Complex64::from_polar(1.0, 0.3), w1), 1e-9),
            Err(AnalysisError::SingularPoint(_))
        ));

        // round trip at random regular points
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let r: f64 = if rng.gen_bool(0.5) {
                rng.gen_range(0.05..0.9)
            } else {
                rng.gen_range(1.1..3.0)
            };
            let z = Complex64::from_polar(r, rng.gen_range(0.0..6.28));
            let v = gauss_map(&data, SheetPoint::new(z, w1), 1e-9).unwrap();
            let x = v.ambient;
            let stereo = Complex64::new(x.c1, x.c2) / (1.0 - x.c0);
            assert!((stereo - data.g(z)).norm() < 1e-12);
        }
    }

    #[test]
    fn planar_spacelike_patch_has_zero_residual() {
        // unit-square grid in a spacelike plane x0 = 0.3 x1
        let n = 12usize;
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let x = i as f64 / n as f64;
                let y = j as f64 / n as f64;
                vertices.push(Vec3::new(0.3 * x, x, y));
            }
        }
        let mut faces = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = |ii: usize, jj: usize| (jj * (n + 1) + ii) as u32;
                faces.push([v(i, j), v(i + 1, j), v(i + 1, j + 1)]);
                faces.push([v(i, j), v(i + 1, j + 1), v(i, j + 1)]);
            }
        }
        let stats = zmc_residuals(&vertices, &faces, Signature::Lorentzian, &vec![false; faces.len()]);
        assert!(stats.included > 0);
        assert!(stats.max_residual < 1e-12, "max {

}", stats.max_residual);
        assert_eq!(stats.degenerate_faces, 0);
    }
}
