//! The concrete surface families: constructors wiring curves, Weierstrass
//! data and domains, plus the two limit regimes (helicoid rescaling and the
//! nodal degeneration onto the Karcher-type maxface).

use num_complex::Complex64;
use thiserror::Error;

use crate::curve::{CurveError, CurveFamily, HyperellipticCurve, PathSpec, SheetPoint};
use crate::lorentz::{Mat3, Vec3};
use crate::quad::QuadOptions;
use crate::weierstrass::{Domain, EtaForm, GaussMap, Signature, WeierstrassData, WeierstrassError};

#[derive(Debug, Error)]
pub enum FamilyError {
    #[error("parameter a = {a} outside admissible range {range} for {family}")]
    ParameterOutOfRange {
        family: &'static str,
        a: f64,
        range: &'static str,
    },
    #[error("tower families require integer k >= 2, got {0}")]
    BadTowerIndex(i64),
    #[error("sample z = {0} lies within the guard distance of a node")]
    NodeGuard(Complex64),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Weierstrass(#[from] WeierstrassError),
}

/// Family tags with their parameters; the CLI-facing identifiers are listed
/// under [`Family::id`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    SchwarzHZmc { a: f64 },
    SchwarzHZmcConjugate { a: f64 },
    Rpd { a: f64 },
    SchwarzHR3 { a: f64 },
    KarcherTower { k: u32 },
    KarcherMaxface { k: u32 },
    ScherkZmcGraph,
}

impl Family {
    pub fn id(&self) -> &'static str {
        match self {
            Family::SchwarzHZmc { .. } => "schwarz-h-zmc",
            Family::SchwarzHZmcConjugate { .. } => "schwarz-h-zmc-conj",
            Family::Rpd { .. } => "rpd",
            Family::SchwarzHR3 { .. } => "schwarz-h-r3",
            Family::KarcherTower { .. } => "karcher-tower",
            Family::KarcherMaxface { .. } => "karcher-maxface",
            Family::ScherkZmcGraph => "scherk-zmc",
        }
    }
}

/// A fully resolved family: tag plus evaluable Weierstrass data.
#[derive(Debug, Clone)]
pub struct FamilySpec {
    pub family: Family,
    pub data: WeierstrassData,
}

fn schwarz_h_base(curve: &HyperellipticCurve) -> (Complex64, Complex64) {
    // z0 = 1 with w > 0: p(1) = (1 + a^3)(1 + a^-3) > 0 for every a > 0
    let z = Complex64::new(1.0, 0.0);
    (z, curve.eval_p(z).sqrt())
}

/// The mixed-type triply periodic family: Lorentzian data `g = z`,
/// `eta = i dz / w` on `w^2 = z(z^3+a^3)(z^3+a^-3)`, fundamental domain the
/// sector `|z| <= 1, 0 <= arg z <= pi/3`.
pub fn schwarz_h_zmc(a: f64) -> Result<FamilySpec, FamilyError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(FamilyError::ParameterOutOfRange {
            family: "schwarz-h-zmc",
            a,
            range: "(0, 1)",
        });
    }
    let curve = HyperellipticCurve::new(CurveFamily::SchwarzH { a })?;
    let (base_z, base_w) = schwarz_h_base(&curve);
    Ok(FamilySpec {
        family: Family::SchwarzHZmc { a },
        data: WeierstrassData {
            signature: Signature::Lorentzian,
            gauss_map: GaussMap::Power(1),
            eta: EtaForm::DzOverW { factor: Complex64::new(0.0, 1.0) },
            domain: Domain::Curve(curve),
            base_z,
            base_w,
            quad: QuadOptions::default(),
        },
    })
}

/// Conjugate family `eta = dz / w`: conelike singularities instead of folds.
pub fn schwarz_h_zmc_conjugate(a: f64) -> Result<FamilySpec, FamilyError> {
    let mut spec = schwarz_h_zmc(a)?;
    spec.family = Family::SchwarzHZmcConjugate { a };
    spec.data.eta = EtaForm::DzOverW { factor: Complex64::new(1.0, 0.0) };
    Ok(spec)
}

/// The rPD family in Euclidean space: `g = z`, `eta = dz / w` on
/// `w^2 = z(z^3-a^3)(z^3+a^-3)`. Base point on `(0, a)` where `p < 0`, with
/// the principal square root.
pub fn rpd(a: f64) -> Result<FamilySpec, FamilyError> {
    if !(a > 0.0) {
        return Err(FamilyError::ParameterOutOfRange {
            family: "rpd",
            a,
            range: "(0, inf)",
        });
    }
    let curve = HyperellipticCurve::new(CurveFamily::Rpd { a })?;
    let base_z = Complex64::new(0.5 * a, 0.0);
    let base_w = curve.eval_p(base_z).sqrt();
    Ok(FamilySpec {
        family: Family::Rpd { a },
        data: WeierstrassData {
            signature: Signature::Euclidean,
            gauss_map: GaussMap::Power(1),
            eta: EtaForm::DzOverW { factor: Complex64::new(1.0, 0.0) },
            domain: Domain::Curve(curve),
            base_z,
            base_w,
            quad: QuadOptions::default(),
        },
    })
}

/// The Euclidean triply periodic family on the same curve as
/// [`schwarz_h_zmc`], embedded for `a` in (0, 1).
pub fn schwarz_h_r3(a: f64) -> Result<FamilySpec, FamilyError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(FamilyError::ParameterOutOfRange {
            family: "schwarz-h-r3",
            a,
            range: "(0, 1)",
        });
    }
    let curve = HyperellipticCurve::new(CurveFamily::SchwarzH { a })?;
    let (base_z, base_w) = schwarz_h_base(&curve);
    Ok(FamilySpec {
        family: Family::SchwarzHR3 { a },
        data: WeierstrassData {
            signature: Signature::Euclidean,
            gauss_map: GaussMap::Power(1),
            eta: EtaForm::DzOverW { factor: Complex64::new(1.0, 0.0) },
            domain: Domain::Curve(curve),
            base_z,
            base_w,
            quad: QuadOptions::default(),
        },
    })
}

fn tower_punctures(k: u32) -> Vec<Complex64> {
    (0..2 * k)
        .map(|j| {
            Complex64::from_polar(
                1.0,
                std::f64::consts::PI * (2.0 * j as f64 + 1.0) / (2.0 * k as f64),
            )
        })
        .collect()
}

/// Singly periodic Euclidean tower with 2k ends: `g = z^{k-1}`,
/// `eta = dz / (z^{2k} + 1)` on the plane minus the roots of `z^{2k} = -1`.
pub fn karcher_tower(k: u32) -> Result<FamilySpec, FamilyError> {
    if k < 2 {
        return Err(FamilyError::BadTowerIndex(k as i64));
    }
    Ok(FamilySpec {
        family: Family::KarcherTower { k },
        data: WeierstrassData {
            signature: Signature::Euclidean,
            gauss_map: GaussMap::Power(k - 1),
            eta: EtaForm::DzOverPoly { factor: Complex64::new(1.0, 0.0), degree: 2 * k },
            domain: Domain::PuncturedPlane { punctures: tower_punctures(k) },
            base_z: Complex64::new(0.0, 0.0),
            base_w: Complex64::new(1.0, 0.0),
            quad: QuadOptions::default(),
        },
    })
}

/// Lorentzian analogue of the tower; single-valued for every k >= 2, with
/// the unit circle as fold singular set.
pub fn karcher_maxface(k: u32) -> Result<FamilySpec, FamilyError> {
    if k < 2 {
        return Err(FamilyError::BadTowerIndex(k as i64));
    }
    Ok(FamilySpec {
        family: Family::KarcherMaxface { k },
        data: WeierstrassData {
            signature: Signature::Lorentzian,
            gauss_map: GaussMap::Power(k - 1),
            eta: EtaForm::DzOverPoly { factor: Complex64::new(0.0, 1.0), degree: 2 * k },
            domain: Domain::PuncturedPlane { punctures: tower_punctures(k) },
            base_z: Complex64::new(0.0, 0.0),
            base_w: Complex64::new(1.0, 0.0),
            quad: QuadOptions::default(),
        },
    })
}

fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

/// Height of the mixed-type entire graph `x0 = log(cosh x1 / cosh x2)`.
pub fn scherk_graph(x1: f64, x2: f64) -> f64 {
    ln_cosh(x1) - ln_cosh(x2)
}

/// Deviation of the rescaled fold-curve speed from its helicoid value:
/// `sup_t | sqrt(a^3 + a^-3) xi(t) / 2 - 1 |`, of order a^3 as a -> 0.
pub fn helicoid_limit_deviation(a: f64) -> Result<f64, FamilyError> {
    if !(a > 0.0 && a < 1.0) {
        return Err(FamilyError::ParameterOutOfRange {
            family: "helicoid-limit",
            a,
            range: "(0, 1)",
        });
    }
    let k = a.powi(3) + a.powi(-3);
    let sqrt_k = k.sqrt();
    let mut sup: f64 = 0.0;
    let n = 4096;
    for i in 0..=n {
        let t = 2.0 * std::f64::consts::FRAC_PI_3 * i as f64 / n as f64;
        let xi = 2.0 / (2.0 * (3.0 * t).cos() + k).sqrt();
        sup = sup.max((sqrt_k * xi / 2.0 - 1.0).abs());
    }
    // the extremum sits exactly at cos 3t = -1
    let xi_max = 2.0 / (k - 2.0).sqrt();
    sup = sup.max((sqrt_k * xi_max / 2.0 - 1.0).abs());
    Ok(sup)
}

/// Node preimages of the degenerate curve in the double-cover coordinate.
pub fn nodal_points() -> [Complex64; 6] {
    [
        Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_6),
        Complex64::from_polar(1.0, -std::f64::consts::FRAC_PI_6),
        Complex64::from_polar(1.0, std::f64::consts::PI - std::f64::consts::FRAC_PI_6),
        Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_6 - std::f64::consts::PI),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ]
}

const NODE_GUARD: f64 = 0.1;

/// Distance between the family surface near the degeneration and the k = 3
/// Karcher-type maxface: samples are given in the double-cover coordinate
/// `zeta` (so the curve point is `z = zeta^2`), base points are matched by
/// subtracting the value at the first sample, and the limit display's
/// factor 2 normalisation is applied to the maxface side.
pub fn nodal_limit_comparison(a: f64, samples: &[Complex64]) -> Result<f64, FamilyError> {
    if samples.len() < 2 {
        return Ok(0.0);
    }
    for &zeta in samples {
        for node in nodal_points() {
            if (zeta - node).norm() < NODE_GUARD {
                return Err(FamilyError::NodeGuard(zeta));
            }
        }
    }
    let h_family = schwarz_h_zmc(a)?;
    let karcher = karcher_maxface(3)?;

    let eval_h = |zeta: Complex64| -> Result<Vec3, FamilyError> {
        let z = zeta * zeta;
        let r = z.norm();
        let theta = 2.0 * zeta.arg();
        let mut waypoints = vec![h_family.data.base_z, Complex64::new(r, 0.0)];
        let steps = (theta.abs() / 0.1).ceil().max(1.0) as usize;
        for s in 1..=steps {
            waypoints.push(Complex64::from_polar(r, theta * s as f64 / steps as f64));
        }
        Ok(h_family.data.surface_point(&PathSpec::polyline(waypoints))?)
    };
    let eval_k = |zeta: Complex64| -> Result<Vec3, FamilyError> {
        let path = PathSpec::polyline(vec![karcher.data.base_z, zeta]);
        Ok(karcher.data.surface_point(&path)?.scale(2.0))
    };

    let h_ref = eval_h(samples[0])?;
    let k_ref = eval_k(samples[0])?;
    let mut worst: f64 = 0.0;
    for &zeta in &samples[1..] {
        let dh = eval_h(zeta)? - h_ref;
        let dk = eval_k(zeta)? - k_ref;
        worst = worst.max(dh.dist(dk));
    }
    Ok(worst)
}

/// Fold curve of a Karcher-type maxface in the limit-display normalisation
/// (factor 2): the image of an arc of the unit circle between two adjacent
/// punctures, tabulated from the closed-form derivative
/// `2 Re(phi(e^{it}) i e^{it})`.
#[derive(Debug, Clone)]
pub struct KarcherFoldCurve {
    t_min: f64,
    t_max: f64,
    h: f64,
    table: Vec<Vec3>,
}

impl KarcherFoldCurve {
    /// Tabulate over `[-window, window]` around `t = 0` (the arc midpoint
    /// for k = 2 sits at `zeta = 1`). The window must stay clear of the
    /// puncture parameters `+-pi/(2k)`.
    pub fn new(spec: &FamilySpec, window: f64, n: usize) -> Result<Self, FamilyError> {
        let data = &spec.data;
        // anchor value: 2 f(1) through the plane integral from the base point
        let anchor = data
            .surface_point(&PathSpec::polyline(vec![data.base_z, Complex64::new(1.0, 0.0)]))?
            .scale(2.0);
        let velocity = |t: f64| -> Vec3 {
            let z = Complex64::from_polar(1.0, t);
            let phi = data
                .phi(SheetPoint::new(z, Complex64::new(1.0, 0.0)))
                .expect("fold arc avoids the punctures");
            let dz = Complex64::new(0.0, 1.0) * z;
            phi.scale(dz).re().scale(2.0)
        };
        let h = 2.0 * window / n as f64;
        let mut table = vec![Vec3::ZERO; n + 1];
        // integrate outward from t = 0 with 7-point panels
        let mid = n / 2;
        table[mid] = anchor;
        let gl_nodes = [
            -0.949107912342759,
            -0.741531185599394,
            -0.405845151377397,
            0.0,
            0.405845151377397,
            0.741531185599394,
            0.949107912342759,
        ];
        let gl_weights = [
            0.129484966168870,
            0.279705391489277,
            0.381830050505119,
            0.417959183673469,
            0.381830050505119,
            0.279705391489277,
            0.129484966168870,
        ];
        let step = |t0: f64, t1: f64| -> Vec3 {
            let half = 0.5 * (t1 - t0);
            let c = 0.5 * (t0 + t1);
            let mut acc = Vec3::ZERO;
            for (x, w) in gl_nodes.iter().zip(gl_weights) {
                acc = acc + velocity(c + half * x).scale(w);
            }
            acc.scale(half)
        };
        for i in mid..n {
            let t0 = -window + h * i as f64;
            table[i + 1] = table[i] + step(t0, t0 + h);
        }
        for i in (0..mid).rev() {
            let t0 = -window + h * (i + 1) as f64;
            table[i] = table[i + 1] + step(t0, t0 - h);
        }
        Ok(KarcherFoldCurve { t_min: -window, t_max: window, h, table })
    }

    pub fn point(&self, t: f64) -> Vec3 {
        assert!(t >= self.t_min - 1e-12 && t <= self.t_max + 1e-12, "t outside fold window");
        let idx_f = (t - self.t_min) / self.h;
        let n = self.table.len();
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

    /// Midpoint extension across the fold.
    pub fn extend(&self, u: f64, v: f64) -> Vec3 {
        (self.point(u + v) + self.point(u - v)).scale(0.5)
    }
}

/// Frame aligning the k = 2 maxface extension with the graph coordinates:
/// a quarter-turn family about the time axis plus the swap that negates the
/// height. The best candidate is selected by residual; with exact data the
/// winner is the rotation by -pi/4.
pub fn scherk_frame_candidates() -> Vec<Mat3> {
    let mut out = Vec::new();
    for q in [1.0_f64, -1.0, 3.0, -3.0] {
        let th = q * std::f64::consts::FRAC_PI_4;
        let (s, c) = th.sin_cos();
        let rot = Mat3::new([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]);
        out.push(rot);
        // height negation combined with axis swap also preserves the graph
        let swap_flip = Mat3::new([[-1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]);
        out.push(swap_flip.mul_mat(&rot));
    }
    out
}

/// Largest graph-equation residual `|x0 - log(cosh x1 / cosh x2)|` over the
/// extension samples, minimised over the symmetry frame candidates.
/// Returns (residual, winning frame).
pub fn scherk_extension_residual(samples: &[(f64, f64)]) -> Result<(f64, Mat3), FamilyError> {
    let spec = karcher_maxface(2)?;
    let fold = KarcherFoldCurve::new(&spec, 0.72, 4000)?;
    let pts: Vec<Vec3> = samples.iter().map(|&(u, v)| fold.extend(u, v)).collect();
    let mut best: Option<(f64, Mat3)> = None;
    for frame in scherk_frame_candidates() {
        let mut worst: f64 = 0.0;
        for p in &pts {
            let x = frame.mul_vec(*p);
            worst = worst.max((x.c0 - scherk_graph(x.c1, x.c2)).abs());
        }
        if best.map_or(true, |(b, _)| worst < b) {
            best = Some((worst, frame));
        }
    }
    Ok(best.unwrap())
}
