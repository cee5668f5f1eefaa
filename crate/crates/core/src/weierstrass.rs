//! Weierstrass-type integrands for both ambient signatures, surface points
//! by contour integration, period vectors over cycles, and integer lattice
//! detection for the periodicity classification.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::curve::{continue_sheet, CurveError, HyperellipticCurve, PathSpec, SheetPoint};
use crate::lorentz::{CVec3, Mat3, Vec3};
use crate::quad::{integrate_contour, integrate_plane, QuadError, QuadOptions};

#[derive(Debug, Error)]
pub enum WeierstrassError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Quad(#[from] QuadError),
    #[error("integrand pole at z = {0}")]
    Pole(Complex64),
    #[error("path must start at the base point z0 = {expected}, got {got}")]
    NotAtBasePoint { expected: Complex64, got: Complex64 },
    #[error("cycle is not closed on the surface: {0}")]
    NotACycle(String),
    #[error("no integer lattice fits the period vectors at tolerance {tol:.3e} (best residual {best_residual:.3e})")]
    LatticeDetection { tol: f64, best_residual: f64 },
}

/// Ambient signature selecting the integrand layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Signature {
    Lorentzian,
    Euclidean,
}

/// Closed-form Gauss map descriptors used by the families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussMap {
    /// g identically zero (synthetic data for tests).
    Zero,
    /// g(z) = z^m.
    Power(u32),
}

impl GaussMap {
    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            GaussMap::Zero => Complex64::new(0.0, 0.0),
            GaussMap::Power(m) => z.powi(*m as i32),
        }
    }

    /// dg/dz.
    pub fn derivative(&self, z: Complex64) -> Complex64 {
        match self {
            GaussMap::Zero => Complex64::new(0.0, 0.0),
            GaussMap::Power(0) => Complex64::new(0.0, 0.0),
            GaussMap::Power(m) => Complex64::new(*m as f64, 0.0) * z.powi(*m as i32 - 1),
        }
    }
}

/// Holomorphic 1-form descriptor: the coefficient of `dz`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaForm {
    /// factor * dz / w on a hyperelliptic curve.
    DzOverW { factor: Complex64 },
    /// factor * dz / (z^degree + 1) on the punctured plane.
    DzOverPoly { factor: Complex64, degree: u32 },
    /// factor * dz (synthetic data for tests).
    Constant { factor: Complex64 },
}

impl EtaForm {
    pub fn coeff(&self, p: SheetPoint) -> Result<Complex64, WeierstrassError> {
        match self {
            EtaForm::DzOverW { factor } => {
                if p.w.norm() < 1e-150 {
                    return Err(WeierstrassError::Pole(p.z));
                }
                Ok(factor / p.w)
            }
            EtaForm::DzOverPoly { factor, degree } => {
                let den = p.z.powi(*degree as i32) + 1.0;
                if den.norm() < 1e-12 {
                    return Err(WeierstrassError::Pole(p.z));
                }
                Ok(factor / den)
            }
            EtaForm::Constant { factor } => Ok(*factor),
        }
    }
}

/// Working domain: a hyperelliptic curve with sheet tracking, or the plane
/// minus finitely many punctures.
#[derive(Debug, Clone)]
pub enum Domain {
    Curve(HyperellipticCurve),
    PuncturedPlane { punctures: Vec<Complex64> },
}

impl Domain {
    pub fn curve(&self) -> Option<&HyperellipticCurve> {
        match self {
            Domain::Curve(c) => Some(c),
            Domain::PuncturedPlane { .. } => None,
        }
    }
}

/// A family descriptor: Gauss map, 1-form, domain and base point.
#[derive(Debug, Clone)]
pub struct WeierstrassData {
    pub signature: Signature,
    pub gauss_map: GaussMap,
    pub eta: EtaForm,
    pub domain: Domain,
    pub base_z: Complex64,
    pub base_w: Complex64,
    pub quad: QuadOptions,
}

impl WeierstrassData {
    pub fn g(&self, z: Complex64) -> Complex64 {
        self.gauss_map.eval(z)
    }

    pub fn dg(&self, z: Complex64) -> Complex64 {
        self.gauss_map.derivative(z)
    }

    /// Integrand value (coefficient of dz) at a point of the domain.
    pub fn phi(&self, p: SheetPoint) -> Result<CVec3, WeierstrassError> {
        let g = self.g(p.z);
        let h = self.eta.coeff(p)?;
        let i = Complex64::new(0.0, 1.0);
        Ok(match self.signature {
            Signature::Lorentzian => CVec3::new(
                -2.0 * g * h,
                (1.0 + g * g) * h,
                i * (1.0 - g * g) * h,
            ),
            Signature::Euclidean => CVec3::new(
                (1.0 - g * g) * h,
                i * (1.0 + g * g) * h,
                2.0 * g * h,
            ),
        })
    }

    pub fn base_point(&self) -> SheetPoint {
        SheetPoint::new(self.base_z, self.base_w)
    }

    /// Complex antiderivative increment along a path, with the sheet carried
    /// from `w_start`; returns the integral and the final sheet value.
    pub fn integrate_phi(
        &self,
        path: &PathSpec,
        w_start: Complex64,
    ) -> Result<(CVec3, Complex64), WeierstrassError> {
        match &self.domain {
            Domain::Curve(curve) => {
                let form = |p: SheetPoint| self.phi_lossy(p);
                let (v, w_end) = integrate_contour(curve, path, w_start, &form, &self.quad)?;
                Ok((v, w_end))
            }
            Domain::PuncturedPlane { punctures } => {
                let guard = plane_guard_radius(punctures);
                let form = |z: Complex64| self.phi_lossy(SheetPoint::new(z, Complex64::new(1.0, 0.0)));
                let v = integrate_plane(path, punctures, guard, &form, &self.quad)?;
                Ok((v, Complex64::new(1.0, 0.0)))
            }
        }
    }

    // Quadrature nodes never sit exactly on a pole for valid paths; an exact
    // hit would poison the panel, so substitute a large finite value and let
    // the guard checks report the real error.
    fn phi_lossy(&self, p: SheetPoint) -> CVec3 {
        self.phi(p).unwrap_or(CVec3 {
            c0: Complex64::new(f64::MAX.sqrt(), 0.0),
            c1: Complex64::new(f64::MAX.sqrt(), 0.0),
            c2: Complex64::new(f64::MAX.sqrt(), 0.0),
        })
    }

    /// Surface point `Re` of the contour integral of the integrand along a
    /// path from the base point.
    pub fn surface_point(&self, path: &PathSpec) -> Result<Vec3, WeierstrassError> {
        if let Some(&first) = path.waypoints.first() {
            if (first - self.base_z).norm() > 1e-12 {
                return Err(WeierstrassError::NotAtBasePoint {
                    expected: self.base_z,
                    got: first,
                });
            }
        }
        let (v, _) = self.integrate_phi(path, self.base_w)?;
        Ok(v.re())
    }

    /// Real part of the closed-contour integral. The cycle must close both
    /// in `z` and on the sheet.
    pub fn period_vector(&self, cycle: &PathSpec) -> Result<Vec3, WeierstrassError> {
        if !cycle.is_closed() {
            return Err(WeierstrassError::NotACycle("endpoint mismatch in z".into()));
        }
        match &self.domain {
            Domain::Curve(curve) => {
                let w0 = curve.eval_p(cycle.waypoints[0]).sqrt();
                let form = |p: SheetPoint| self.phi_lossy(p);
                let (v, w_end) = integrate_contour(curve, cycle, w0, &form, &self.quad)?;
                if (w_end - w0).norm() > 1e-6 * (1.0 + w0.norm()) {
                    return Err(WeierstrassError::NotACycle(format!(
                        "sheet mismatch after continuation: started {w0}, returned {w_end}"
                    )));
                }
                Ok(v.re())
            }
            Domain::PuncturedPlane { punctures } => {
                let guard = plane_guard_radius(punctures);
                let form = |z: Complex64| self.phi_lossy(SheetPoint::new(z, Complex64::new(1.0, 0.0)));
                let v = integrate_plane(cycle, punctures, guard, &form, &self.quad)?;
                Ok(v.re())
            }
        }
    }

    /// A spanning set of homology cycles for the domain: six dumbbell loops
    /// for the genus-3 curves, one loop per puncture for plane domains.
    pub fn homology_cycles(&self) -> Vec<PathSpec> {
        match &self.domain {
            Domain::Curve(curve) => dumbbell_cycles(curve),
            Domain::PuncturedPlane { punctures } => puncture_cycles(punctures),
        }
    }

    /// Periods over the spanning cycle set.
    pub fn period_spanning_set(&self) -> Result<Vec<Vec3>, WeierstrassError> {
        self.homology_cycles()
            .iter()
            .map(|c| self.period_vector(c))
            .collect()
    }

    pub fn sheet_along(&self, path: &PathSpec, w0: Complex64) -> Result<Vec<SheetPoint>, WeierstrassError> {
        match &self.domain {
            Domain::Curve(curve) => Ok(continue_sheet(curve, path, w0)?),
            Domain::PuncturedPlane { .. } => Ok(path
                .waypoints
                .iter()
                .map(|&z| SheetPoint::new(z, Complex64::new(1.0, 0.0)))
                .collect()),
        }
    }
}

fn plane_guard_radius(punctures: &[Complex64]) -> f64 {
    let mut min_sep = f64::INFINITY;
    for i in 0..punctures.len() {
        for j in (i + 1)..punctures.len() {
            min_sep = min_sep.min((punctures[i] - punctures[j]).norm());
        }
    }
    if min_sep.is_finite() {
        1e-3 * min_sep
    } else {
        1e-6
    }
}

/// Six dumbbell loops around consecutive pairs of the seven finite branch
/// points, ordered by argument then modulus. Any spanning set works for
/// lattice detection; this one keeps every loop clear of the other branch
/// points.
pub fn dumbbell_cycles(curve: &HyperellipticCurve) -> Vec<PathSpec> {
    let mut pts: Vec<Complex64> = curve.branch_points().to_vec();
    pts.sort_by(|a, b| {
        let arg = |z: &Complex64| {
            if z.norm() == 0.0 {
                0.0
            } else {
                let mut t = z.arg();
                if t < -1e-12 {
                    t += 2.0 * std::f64::consts::PI;
                }
                t
            }
        };
        (arg(a), a.norm())
            .partial_cmp(&(arg(b), b.norm()))
            .unwrap()
    });
    let mut cycles = Vec::with_capacity(pts.len() - 1);
    for pair in pts.windows(2) {
        let (b1, b2) = (pair[0], pair[1]);
        let mut clearance = f64::INFINITY;
        for &other in &pts {
            if (other - b1).norm() < 1e-15 || (other - b2).norm() < 1e-15 {
                continue;
            }
            clearance = clearance.min(dist_point_segment(other, b1, b2));
        }
        let rho = 0.5 * clearance;
        cycles.push(PathSpec::capsule(b1, b2, rho, 12));
    }
    cycles
}

/// One counterclockwise loop around each puncture.
pub fn puncture_cycles(punctures: &[Complex64]) -> Vec<PathSpec> {
    let mut min_sep = f64::INFINITY;
    for i in 0..punctures.len() {
        for j in (i + 1)..punctures.len() {
            min_sep = min_sep.min((punctures[i] - punctures[j]).norm());
        }
    }
    let radius = if min_sep.is_finite() { 0.35 * min_sep } else { 0.5 };
    punctures
        .iter()
        .map(|&p| PathSpec::circle(p, radius, 48))
        .collect()
}

fn dist_point_segment(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a).re * ab.re + (p - a).im * ab.im) / len2).clamp(0.0, 1.0);
    (p - (a + ab.scale(t))).norm()
}

/// Detected integer lattice spanned by a set of period vectors.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodLattice {
    pub raw: Vec<Vec3>,
    pub rank: usize,
    pub basis: Vec<Vec3>,
    /// Largest distance from a raw period to its nearest lattice point.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Periodicity {
    NonPeriodic,
    SinglyPeriodic,
    DoublyPeriodic,
    TriplyPeriodic,
}

pub fn periodicity_classify(lattice: &PeriodLattice) -> Periodicity {
    match lattice.rank {
        0 => Periodicity::NonPeriodic,
        1 => Periodicity::SinglyPeriodic,
        2 => Periodicity::DoublyPeriodic,
        _ => Periodicity::TriplyPeriodic,
    }
}

/// Least-squares coefficients of `v` against the basis (Euclidean metric).
fn ls_coefficients(v: Vec3, basis: &[Vec3]) -> Vec<f64> {
    let r = basis.len();
    if r == 0 {
        return Vec::new();
    }
    let mut gram = vec![vec![0.0; r]; r];
    let mut rhs = vec![0.0; r];
    for i in 0..r {
        for j in 0..r {
            gram[i][j] = basis[i].euclid_dot(basis[j]);
        }
        rhs[i] = basis[i].euclid_dot(v);
    }
    // Gaussian elimination with partial pivoting on the tiny system
    for col in 0..r {
        let mut piv = col;
        for row in (col + 1)..r {
            if gram[row][col].abs() > gram[piv][col].abs() {
                piv = row;
            }
        }
        gram.swap(col, piv);
        rhs.swap(col, piv);
        let d = gram[col][col];
        if d.abs() < 1e-300 {
            return vec![0.0; r];
        }
        for row in (col + 1)..r {
            let f = gram[row][col] / d;
            for k in col..r {
                gram[row][k] -= f * gram[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut c = vec![0.0; r];
    for row in (0..r).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..r {
            acc -= gram[row][k] * c[k];
        }
        c[row] = acc / gram[row][row];
    }
    c
}

fn babai_residual(v: Vec3, basis: &[Vec3]) -> (Vec3, Vec<i64>) {
    let c = ls_coefficients(v, basis);
    let ints: Vec<i64> = c.iter().map(|x| x.round() as i64).collect();
    let mut r = v;
    for (k, b) in basis.iter().enumerate() {
        r = r - b.scale(ints[k] as f64);
    }
    (r, ints)
}

/// Recover the integer lattice generated (approximately) by noisy period
/// vectors: iterated nearest-integer reduction in the style of a Euclidean
/// algorithm on vectors, followed by verification of every input.
///
/// Inputs that admit no lattice at the tolerance (incommensurable lengths)
/// reduce toward spurious near-zero generators; any basis vector shorter
/// than `50 * tol` is therefore rejected as noise rather than structure.
pub fn detect_lattice(periods: &[Vec3], tol: f64) -> Result<PeriodLattice, WeierstrassError> {
    let raw: Vec<Vec3> = periods.to_vec();
    let mut work: Vec<Vec3> = periods.iter().copied().filter(|v| v.norm() > tol).collect();
    work.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());

    let mut basis: Vec<Vec3> = Vec::new();
    for _round in 0..64 {
        let mut changed = false;
        for &v in &work {
            let (r, _) = babai_residual(v, &basis);
            if r.norm() > tol {
                basis.push(r);
                reduce_basis(&mut basis, tol);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    if basis.len() > 3 {
        // cannot happen for consistent 3-space inputs; report best effort
        let best = work
            .iter()
            .map(|&v| babai_residual(v, &basis[..3]).0.norm())
            .fold(0.0_f64, f64::max);
        return Err(WeierstrassError::LatticeDetection { tol, best_residual: best });
    }

    basis.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());

    if let Some(shortest) = basis.first() {
        if shortest.norm() < 50.0 * tol {
            return Err(WeierstrassError::LatticeDetection {
                tol,
                best_residual: shortest.norm(),
            });
        }
    }

    let mut residual = 0.0_f64;
    for &v in &raw {
        let (r, _) = babai_residual(v, &basis);
        residual = residual.max(r.norm());
    }
    if residual > tol {
        return Err(WeierstrassError::LatticeDetection { tol, best_residual: residual });
    }
    Ok(PeriodLattice { raw, rank: basis.len(), basis, residual })
}

/// Distance from `v` to the nearest lattice point of the basis.
pub fn lattice_distance(lattice: &PeriodLattice, v: Vec3) -> f64 {
    babai_residual(v, &lattice.basis).0.norm()
}

/// Pairwise Lagrange-style size reduction; drops vectors that reduce to
/// (numerical) zero. Good enough for the near-orthogonal rank <= 3 lattices
/// that arise here.
fn reduce_basis(basis: &mut Vec<Vec3>, tol: f64) {
    for _ in 0..128 {
        basis.retain(|v| v.norm() > tol);
        basis.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
        let mut changed = false;
        for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let denom = basis[j].euclid_dot(basis[j]);
                if denom <= 0.0 {
                    continue;
                }
                let c = (basis[i].euclid_dot(basis[j]) / denom).round();
                if c != 0.0 {
                    let reduced = basis[i] - basis[j].scale(c);
                    if reduced.norm() < basis[i].norm() - 1e-15 {
                        basis[i] = reduced;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    basis.retain(|v| v.norm() > tol);
}

// Anti-holomorphic self-maps of the Schwarz-H-type curve and the ambient
// isometries they induce on the integrand. Using them: pullback(phi) must
// equal M * conj(phi) pointwise as 1-forms.
pub struct CurveSymmetry {
    pub name: &'static str,
    pub target: Mat3,
    map: fn(Complex64, Complex64) -> (Complex64, Complex64),
    dz_conj: fn(Complex64) -> Complex64,
}

pub fn schwarz_h_symmetries() -> [CurveSymmetry; 3] {
    let c = (std::f64::consts::FRAC_PI_3).cos();
    let s = (std::f64::consts::FRAC_PI_3).sin();
    [
        CurveSymmetry {
            name: "conjugation",
            target: Mat3::diag(-1.0, -1.0, 1.0),
            map: |z, w| (z.conj(), w.conj()),
            dz_conj: |_z| Complex64::new(1.0, 0.0),
        },
        CurveSymmetry {
            name: "rotation-conjugation",
            target: Mat3::new([[1.0, 0.0, 0.0], [0.0, -0.5, 0.866_025_403_784_438_6], [0.0, 0.866_025_403_784_438_6, 0.5]]),
            map: |z, w| {
                let r3 = Complex64::from_polar(1.0, 2.0 * std::f64::consts::FRAC_PI_3);
                let r6 = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
                (r3 * z.conj(), r6 * w.conj())
            },
            dz_conj: |_z| Complex64::from_polar(1.0, 2.0 * std::f64::consts::FRAC_PI_3),
        },
        CurveSymmetry {
            name: "inversion-conjugation",
            target: Mat3::IDENTITY,
            map: |z, w| {
                let zc = z.conj();
                (1.0 / zc, w.conj() / zc.powi(4))
            },
            dz_conj: |z| -1.0 / (z.conj() * z.conj()),
        },
    ]
    .map(|mut sym| {
        // exact trig entries
        if sym.name == "rotation-conjugation" {
            sym.target = Mat3::new([[1.0, 0.0, 0.0], [0.0, -c, s], [0.0, s, c]]);
        }
        sym
    })
}

impl CurveSymmetry {
    pub fn apply(&self, p: SheetPoint) -> SheetPoint {
        let (z, w) = (self.map)(p.z, p.w);
        SheetPoint::new(z, w)
    }

    /// L1 deviation of `psi^* phi - target * conj(phi)` at a curve point.
    pub fn pullback_defect(&self, data: &WeierstrassData, p: SheetPoint) -> Result<f64, WeierstrassError> {
        let image = self.apply(p);
        let lhs = data.phi(image)?.scale((self.dz_conj)(p.z));
        let rhs = data.phi(p)?.conj().apply_mat(&self.target);
        Ok((lhs - rhs).norm_l1())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::CurveFamily;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

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

    #[test]
    fn phi_lorentz_examples() {
        // g = 0 formally, eta coefficient 1
        let data = WeierstrassData {
            signature: Signature::Lorentzian,
            gauss_map: GaussMap::Zero,
            eta: EtaForm::Constant { factor: Complex64::new(1.0, 0.0) },
            domain: Domain::PuncturedPlane { punctures: vec![] },
            base_z: Complex64::new(0.0, 0.0),
            base_w: Complex64::new(1.0, 0.0),
            quad: QuadOptions::default(),
        };
        let v = data.phi(SheetPoint::new(Complex64::new(0.3, 0.1), Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(v.c0, Complex64::new(0.0, 0.0));
        assert_eq!(v.c1, Complex64::new(1.0, 0.0));
        assert_eq!(v.c2, Complex64::new(0.0, 1.0));

        // Schwarz-H-type data at the base point
        let data = schwarz_h_zmc_data(0.5);
        let p = data.base_point();
        let v = data.phi(p).unwrap();
        let w = 10.125f64.sqrt();
        assert_abs_diff_eq!(v.c0.im, -2.0 / w, epsilon = 1e-12);
        assert_abs_diff_eq!(v.c0.re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.c1.im, 2.0 / w, epsilon = 1e-12);
        assert_abs_diff_eq!(v.c2.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(2.0 / w, 0.628_539, epsilon = 1e-6);

        // |g| = 1 anywhere: first component modulus 2 |eta coeff|
        let z = Complex64::from_polar(1.0, 0.7);
        let curve = data.domain.curve().unwrap();
        let w_at = curve.eval_p(z).sqrt();
        let v = data.phi(SheetPoint::new(z, w_at)).unwrap();
        assert_abs_diff_eq!(v.c0.norm(), 2.0 / w_at.norm(), epsilon = 1e-12);
    }

    #[test]
    fn phi_euclid_examples() {
        let mk = |g_val: Complex64| {
            let data = WeierstrassData {
                signature: Signature::Euclidean,
                gauss_map: GaussMap::Power(1),
                eta: EtaForm::Constant { factor: Complex64::new(1.0, 0.0) },
                domain: Domain::PuncturedPlane { punctures: vec![] },
                base_z: Complex64::new(0.0, 0.0),
                base_w: Complex64::new(1.0, 0.0),
                quad: QuadOptions::default(),
            };
            data.phi(SheetPoint::new(g_val, Complex64::new(1.0, 0.0))).unwrap()
        };
        let v = mk(Complex64::new(0.0, 0.0));
        assert_eq!(v.c0, Complex64::new(1.0, 0.0));
        assert_eq!(v.c1, Complex64::new(0.0, 1.0));
        assert_eq!(v.c2, Complex64::new(0.0, 0.0));

        let v = mk(Complex64::new(0.0, 1.0)); // g = i
        assert_abs_diff_eq!((v.c0 - Complex64::new(2.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v.c1.norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((v.c2 - Complex64::new(0.0, 2.0)).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rpd_phi_matches_hand_evaluation() {
        let curve = HyperellipticCurve::new(CurveFamily::Rpd { a: 1.0 }).unwrap();
        let base_z = Complex64::new(0.5, 0.0);
        let base_w = curve.eval_p(base_z).sqrt();
        let data = WeierstrassData {
            signature: Signature::Euclidean,
            gauss_map: GaussMap::Power(1),
            eta: EtaForm::DzOverW { factor: Complex64::new(1.0, 0.0) },
            domain: Domain::Curve(curve),
            base_z,
            base_w,
            quad: QuadOptions::default(),
        };
        let p = data.base_point();
        let v = data.phi(p).unwrap();
        // w^2 = 0.5 (0.125 - 1)(0.125 + 1) = -0.4921875, principal root
        let w = Complex64::new(0.0, 0.492_187_5_f64.sqrt());
        assert!((p.w - w).norm() < 1e-12);
        assert!((v.c0 - (1.0 - 0.25) / w).norm() < 1e-12);
        assert!((v.c1 - Complex64::new(0.0, 1.0) * (1.0 + 0.25) / w).norm() < 1e-12);
        assert!((v.c2 - 1.0 / w).norm() < 1e-12);
    }

    #[test]
    fn surface_point_base_and_homotopy() {
        let data = schwarz_h_zmc_data(0.5);
        // empty path: f(z0) = 0
        let p0 = data
            .surface_point(&PathSpec::polyline(vec![data.base_z]))
            .unwrap();
        assert_eq!(p0, Vec3::ZERO);

        // there-and-back: zero
        let mid = Complex64::new(0.8, 0.2);
        let path = PathSpec::polyline(vec![data.base_z, mid, data.base_z]);
        let v = data.surface_point(&path).unwrap();
        assert!(v.norm() < 1e-11);

        // two homotopic routes to the same endpoint agree
        let target = Complex64::new(0.55, 0.30);
        let p1 = PathSpec::polyline(vec![data.base_z, Complex64::new(0.9, 0.1), target]);
        let p2 = PathSpec::polyline(vec![data.base_z, Complex64::new(0.75, 0.45), target]);
        let v1 = data.surface_point(&p1).unwrap();
        let v2 = data.surface_point(&p2).unwrap();
        assert!(v1.dist(v2) < 1e-9, "{v1:?} vs {v2:?}");
    }

    #[test]
    fn contractible_cycle_has_zero_period() {
        let data = schwarz_h_zmc_data(0.5);
        let cycle = PathSpec::circle(Complex64::new(0.62, 0.18), 0.05, 24);
        let v = data.period_vector(&cycle).unwrap();
        assert!(v.norm() < 1e-10);
    }

    #[test]
    fn cycle_closure_is_enforced() {
        let data = schwarz_h_zmc_data(0.5);
        let open = PathSpec::polyline(vec![Complex64::new(0.6, 0.2), Complex64::new(0.7, 0.3)]);
        assert!(matches!(
            data.period_vector(&open),
            Err(WeierstrassError::NotACycle(_))
        ));
        // a loop around a single branch point closes in z but not on the sheet
        let single = PathSpec::circle(Complex64::new(0.0, 0.0), 0.15, 48);
        assert!(matches!(
            data.period_vector(&single),
            Err(WeierstrassError::NotACycle(_))
        ));
    }

    #[test]
    fn symmetry_pullbacks_hold_on_random_points() {
        let data = schwarz_h_zmc_data(0.5);
        let curve = data.domain.curve().unwrap().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut checked = 0;
        while checked < 100 {
            let r = rng.gen_range(0.25..1.6);
            let th = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
            let z = Complex64::from_polar(r, th);
            if curve.nearest_branch(z).1 < 0.05 {
                continue;
            }
            let w = if rng.gen_bool(0.5) {
                curve.eval_p(z).sqrt()
            } else {
                -curve.eval_p(z).sqrt()
            };
            let p = SheetPoint::new(z, w);
            for sym in schwarz_h_symmetries() {
                let q = sym.apply(p);
                assert!(q.defect(&curve) < 1e-10, "{} image leaves the curve", sym.name);
                let defect = sym.pullback_defect(&data, p).unwrap();
                assert!(defect < 1e-10, "{} defect {defect:.3e} at z = {z}", sym.name);
            }
            checked += 1;
        }
    }

    #[test]
    fn lattice_detection_basics() {
        // all-zero periods
        let lat = detect_lattice(&[Vec3::ZERO, Vec3::ZERO], 1e-6).unwrap();
        assert_eq!(lat.rank, 0);
        assert_eq!(periodicity_classify(&lat), Periodicity::NonPeriodic);

        // collinear integer multiples
        let v = |x: f64| Vec3::new(x, 0.0, 0.0);
        let lat = detect_lattice(&[v(1.0), v(2.0), v(-3.0)], 1e-6).unwrap();
        assert_eq!(lat.rank, 1);
        assert!(lat.basis[0].dist(v(1.0)) < 1e-9 || lat.basis[0].dist(v(-1.0)) < 1e-9);

        // non-integer ratio forces a finer generator
        let lat = detect_lattice(&[v(1.0), v(1.5)], 1e-9).unwrap();
        assert_eq!(lat.rank, 1);
        assert!((lat.basis[0].norm() - 0.5).abs() < 1e-9);

        // rank 3 with noise
        let b = [
            Vec3::new(1.0, 0.1, 0.0),
            Vec3::new(0.0, 1.3, 0.2),
            Vec3::new(0.1, 0.0, 0.9),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut periods = Vec::new();
        for _ in 0..12 {
            let (m, n, k) = (
                rng.gen_range(-3i32..=3),
                rng.gen_range(-3i32..=3),
                rng.gen_range(-3i32..=3),
            );
            let mut p = b[0].scale(m as f64) + b[1].scale(n as f64) + b[2].scale(k as f64);
            p = p + Vec3::new(rng.gen_range(-1e-8..1e-8), rng.gen_range(-1e-8..1e-8), rng.gen_range(-1e-8..1e-8));
            periods.push(p);
        }
        periods.push(b[0] + b[1]);
        periods.push(b[2]);
        let lat = detect_lattice(&periods, 1e-6).unwrap();
        assert_eq!(lat.rank, 3);
        assert!(lat.residual < 1e-6);

        // idempotence: detecting on the detected basis reproduces it
        let lat2 = detect_lattice(&lat.basis, 1e-6).unwrap();
        assert_eq!(lat2.rank, lat.rank);
        for v in &lat.basis {
            let (r, _) = super::babai_residual(*v, &lat2.basis);
            assert!(r.norm() < 1e-9);
        }

        // inconsistent inputs at tight tolerance
        let bad = vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.6180339887, 0.0, 0.0)];
        assert!(matches!(
            detect_lattice(&bad, 1e-9),
            Err(WeierstrassError::LatticeDetection { .. })
        ));
    }

    #[test]
    fn quadrature_against_composite_gauss_legendre() {
        // Phi over a real-axis path, adaptive vs dense composite rule
        let data = schwarz_h_zmc_data(0.5);
        let path = PathSpec::polyline(vec![Complex64::new(1.0, 0.0), Complex64::new(0.2, 0.0)]);
        // adjust: oracle path is [0.2, 0.8]; start from base and measure difference
        let p_a = PathSpec::polyline(vec![data.base_z, Complex64::new(0.8, 0.0)]);
        let p_b = PathSpec::polyline(vec![data.base_z, Complex64::new(0.2, 0.0)]);
        let (ia, _) = data.integrate_phi(&p_a, data.base_w).unwrap();
        let (ib, _) = data.integrate_phi(&p_b, data.base_w).unwrap();
        let adaptive_val = ib - ia; // integral from 0.8 to 0.2
        let _ = path;

        // oracle: 10^4-panel composite 5-point Gauss-Legendre on [0.8 -> 0.2]
        let curve = data.domain.curve().unwrap();
        let nodes = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        let weights = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let (za, zb) = (0.8_f64, 0.2_f64);
        let n = 10_000;
        let mut acc = CVec3::ZERO;
        let mut w_ref = curve.sheet_near(Complex64::new(za, 0.0), data.base_w);
        for k in 0..n {
            let t0 = za + (zb - za) * k as f64 / n as f64;
            let t1 = za + (zb - za) * (k + 1) as f64 / n as f64;
            let half = 0.5 * (t1 - t0);
            let mid = 0.5 * (t0 + t1);
            for (x, wgt) in nodes.iter().zip(weights) {
                let z = Complex64::new(mid + half * x, 0.0);
                let w = curve.sheet_near(z, w_ref);
                w_ref = w;
                let f = data.phi(SheetPoint::new(z, w)).unwrap();
                acc = acc + f.scale(Complex64::new(wgt * half, 0.0));
            }
        }
        assert!(
            (adaptive_val - acc).norm_l1() < 1e-10,
            "adaptive {adaptive_val:?} vs oracle {acc:?}"
        );
    }
}
