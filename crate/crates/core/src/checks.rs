//! Named verification suites over the library: each returns a list of
//! check entries with pinned tolerances, consumed by the CLI and by the
//! acceptance tests.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::analysis;
use crate::curve::{continue_sheet, PathSpec, SheetPoint};
use crate::extension::{
    fold_reflection, fold_translation, fold_translation_both, null_speed, upper_fold_speed,
    NullCurve,
};
use crate::families::{self, Family, FamilySpec};
use crate::lorentz::{CausalClass, Vec3};
use crate::mesh::{
    self, assemble, boundary_generators, group_translations, sample_fundamental_piece,
    symmetry_group,
};
use crate::report::CheckEntry;
use crate::weierstrass::{
    detect_lattice, lattice_distance, periodicity_classify, schwarz_h_symmetries, Domain,
    Periodicity, WeierstrassError,
};

pub const FOLD_TOL: f64 = 1e-10;
pub const SYMMETRY_TOL: f64 = 1e-10;
pub const NULL_TOL: f64 = 1e-12;
pub const EXTENSION_CONFORMAL_TOL: f64 = 1e-10;
pub const EXTENSION_MIRROR_TOL: f64 = 1e-12;
pub const REFLECTION_VELOCITY_TOL: f64 = 1e-12;
pub const REFLECTION_CURVE_TOL: f64 = 1e-10;
pub const TRANSLATION_AGREE_TOL: f64 = 1e-12;
pub const BOUNDARY_FIT_TOL: f64 = 1e-6;
pub const LATTICE_TOL: f64 = 1e-6;
pub const SINGLE_VALUED_TOL: f64 = 1e-8;
pub const ZMC_ORDER_MIN: f64 = 1.8;
pub const SCHERK_GRAPH_TOL: f64 = 1e-6;
pub const HELICOID_DEV_AT_0_1: f64 = 1.1e-3;
pub const HELICOID_DEV_AT_0_01: f64 = 1e-5;

/// Fold-criterion residuals at `n` uniformly spaced singular-set points.
/// For curve families the singular set is the unit circle; for the plane
/// families the circle arcs between punctures are sampled.
pub fn fold_scan(spec: &FamilySpec, n: usize) -> Result<Vec<f64>, WeierstrassError> {
    let data = &spec.data;
    match &data.domain {
        Domain::Curve(curve) => {
            let mut waypoints: Vec<Complex64> = (0..=n)
                .map(|k| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / n as f64))
                .collect();
            let first = waypoints[0];
            *waypoints.last_mut().unwrap() = first;
            let samples = continue_sheet(curve, &PathSpec::polyline(waypoints), data.base_w)?;
            let mut out = Vec::with_capacity(n);
            for p in samples {
                let steps = p.z.arg() / (2.0 * std::f64::consts::PI / n as f64);
                if (steps - steps.round()).abs() < 1e-9 && (p.z.norm() - 1.0).abs() < 1e-12 {
                    if out.len() < n {
                        out.push(analysis::fold_residual(data, p).expect("eta regular on the fold"));
                    }
                }
            }
            Ok(out)
        }
        Domain::PuncturedPlane { punctures } => {
            let mut out = Vec::with_capacity(n);
            for k in 0..n {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                let z = Complex64::from_polar(1.0, t);
                if punctures.iter().any(|p| (z - p).norm() < 0.1) {
                    continue;
                }
                let p = SheetPoint::new(z, Complex64::new(1.0, 0.0));
                out.push(analysis::fold_residual(data, p).expect("eta regular between punctures"));
            }
            Ok(out)
        }
    }
}

/// Fold suite: the singular set must consist of fold points.
pub fn folds_suite(spec: &FamilySpec) -> Result<Vec<CheckEntry>, WeierstrassError> {
    let residuals = fold_scan(spec, 360)?;
    let worst = residuals.iter().fold(0.0_f64, |m, r| m.max(r.abs()));
    Ok(vec![CheckEntry::residual(
        format!("fold-criterion[{}]", spec.family.id()),
        worst,
        FOLD_TOL,
    )
    .with_detail(format!("{} singular-set samples", residuals.len()))])
}

/// Symmetry suite: the three curve symmetries push the integrand forward by
/// their ambient isometries; the target matrices preserve the metric.
pub fn symmetry_suite(a: f64, seed: u64) -> Result<Vec<CheckEntry>, crate::families::FamilyError> {
    let spec = families::schwarz_h_zmc(a)?;
    let curve = spec.data.domain.curve().unwrap().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for sym in schwarz_h_symmetries() {
        checks.push(CheckEntry::residual(
            format!("isometry-defect[{}]", sym.name),
            sym.target.minkowski_isometry_defect(),
            1e-14,
        ));
    }
    let mut worst = [0.0_f64; 3];
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
        for (k, sym) in schwarz_h_symmetries().iter().enumerate() {
            worst[k] = worst[k].max(sym.pullback_defect(&spec.data, p).expect("regular point"));
        }
        checked += 1;
    }
    for (k, sym) in schwarz_h_symmetries().iter().enumerate() {
        checks.push(CheckEntry::residual(
            format!("pullback[{}]", sym.name),
            worst[k],
            SYMMETRY_TOL,
        ));
    }
    Ok(checks)
}

/// Null-curve suite: lightlike velocity, speed-factor identities,
/// non-degeneracy.
pub fn null_suite(a: f64, seed: u64) -> Result<Vec<CheckEntry>, crate::extension::ExtensionError> {
    let curve = NullCurve::new(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_null = 0.0_f64;
    for _ in 0..1000 {
        let s = rng.gen_range(-6.0..6.0);
        let v = curve.velocity(s);
        worst_null = worst_null.max(v.minkowski_dot(v).abs());
    }
    let mut worst_period = 0.0_f64;
    let mut worst_hat = 0.0_f64;
    let k = a.powi(3) + a.powi(-3);
    for _ in 0..100 {
        let t = rng.gen_range(-6.0..6.0);
        let xi = null_speed(t, a)?;
        worst_period = worst_period
            .max((null_speed(t + 2.0 * std::f64::consts::FRAC_PI_3, a)? - xi).abs() / xi);
        let s = rng.gen_range(0.0..std::f64::consts::FRAC_PI_3);
        let direct = 2.0 / (k - 2.0 * (3.0 * s).cos()).sqrt();
        worst_hat = worst_hat.max((upper_fold_speed(s, a)? - direct).abs() / direct);
    }
    let mut nondeg = true;
    for _ in 0..50 {
        let s = rng.gen_range(-3.0..3.0);
        nondeg &= curve.nondegenerate_at(s, 1e-8);
    }
    Ok(vec![
        CheckEntry::residual("null-velocity", worst_null, NULL_TOL),
        CheckEntry::residual("speed-periodicity", worst_period, 1e-14),
        CheckEntry::residual("upper-fold-speed-two-routes", worst_hat, 1e-14),
        CheckEntry::exact("fold-curve-nondegenerate", nondeg, "rank-2 frame at 50 random parameters"),
    ])
}

/// Extension suite: conformal structure of the timelike piece, its mirror
/// symmetry, boundary line directions, and the reflection congruence.
pub fn extension_suite(
    a: f64,
    seed: u64,
) -> Result<Vec<CheckEntry>, crate::extension::ExtensionError> {
    let curve = NullCurve::new(a)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let third = std::f64::consts::FRAC_PI_3;
    let pi = std::f64::consts::PI;

    let mut worst_conf = 0.0_f64;
    let mut worst_cross = 0.0_f64;
    for _ in 0..200 {
        let u = rng.gen_range(0.0..third);
        let v = rng.gen_range(1e-6..pi - 1e-6);
        let fu = curve.extend_du(u, v);
        let fv = curve.extend_dv(u, v);
        worst_conf = worst_conf.max((fu.minkowski_dot(fu) + fv.minkowski_dot(fv)).abs());
        worst_cross = worst_cross.max(fu.minkowski_dot(fv).abs());
    }

    let mut worst_mirror = 0.0_f64;
    for _ in 0..100 {
        let u = rng.gen_range(0.0..third);
        let v = rng.gen_range(0.0..pi);
        worst_mirror = worst_mirror.max(curve.extend(u, pi + v).dist(curve.extend(u, pi - v)));
    }

    // u = 0 boundary: line through the origin along (0, 0, 1)
    let mut worst_line0 = 0.0_f64;
    for l in 1..=20 {
        let p = curve.extend(0.0, pi * l as f64 / 21.0);
        worst_line0 = worst_line0.max(p.c0.abs().max(p.c1.abs()));
    }
    // u = pi/3 boundary: direction d with d0 = 0 and d1 + sqrt(3) d2 = 0
    let base = curve.extend(third, 0.4);
    let mut worst_line1 = 0.0_f64;
    for l in 1..=20 {
        let p = curve.extend(third, 0.4 + (pi - 0.8) * l as f64 / 21.0);
        let d = (p - base).normalized().unwrap_or(Vec3::ZERO);
        worst_line1 = worst_line1.max(d.c0.abs().max((d.c1 + 3.0f64.sqrt() * d.c2).abs()));
    }

    let a_mat = fold_reflection();
    let (c1, c2) = fold_translation_both(&curve);
    let mut worst_vel = 0.0_f64;
    let mut worst_curve = 0.0_f64;
    for _ in 0..50 {
        let s = rng.gen_range(0.0..third);
        worst_vel = worst_vel.max(
            curve
                .upper_fold_velocity(s)
                .dist(a_mat.mul_vec(curve.velocity(third - s))),
        );
        worst_curve = worst_curve.max(
            curve
                .upper_fold(s)
                .dist(-a_mat.mul_vec(curve.point(third - s)) + c1),
        );
    }

    Ok(vec![
        CheckEntry::residual("extension-conformal-trace", worst_conf, EXTENSION_CONFORMAL_TOL),
        CheckEntry::residual("extension-conformal-cross", worst_cross, EXTENSION_CONFORMAL_TOL),
        CheckEntry::residual("extension-mirror-at-pi", worst_mirror, EXTENSION_MIRROR_TOL),
        CheckEntry::residual("boundary-line-u0", worst_line0, EXTENSION_CONFORMAL_TOL),
        CheckEntry::residual("boundary-line-u-third", worst_line1, EXTENSION_CONFORMAL_TOL),
        CheckEntry::residual("fold-reflection-velocity", worst_vel, REFLECTION_VELOCITY_TOL),
        CheckEntry::residual("fold-reflection-curve", worst_curve, REFLECTION_CURVE_TOL),
        CheckEntry::residual("fold-translation-two-routes", c1.dist(c2), TRANSLATION_AGREE_TOL),
    ])
}

/// Expected lattice rank per family, when the classification is pinned.
pub fn expected_rank(family: Family) -> Option<usize> {
    match family {
        Family::SchwarzHZmc { .. } => Some(3),
        Family::Rpd { .. } => Some(3),
        Family::SchwarzHR3 { .. } => Some(3),
        Family::KarcherTower { .. } => Some(1),
        Family::KarcherMaxface { .. } => Some(0),
        Family::SchwarzHZmcConjugate { .. } | Family::ScherkZmcGraph => None,
    }
}

/// Raw periods of a family and its detected lattice: curve or puncture
/// cycles for the immersion families, symmetry-group translations for the
/// assembled mixed-type family.
pub struct PeriodSummary {
    pub raw: Vec<Vec3>,
    pub lattice: Option<crate::weierstrass::PeriodLattice>,
    pub classification: Option<Periodicity>,
    pub checks: Vec<CheckEntry>,
}

pub fn periods_suite(spec: &FamilySpec, group_depth: usize) -> Result<PeriodSummary, mesh::MeshError> {
    let mut checks = Vec::new();
    let (raw, lattice) = match spec.family {
        Family::SchwarzHZmc { a } => {
            let piece = sample_fundamental_piece(a, 12, 12, 12, 12)?;
            let ops = symmetry_group(&boundary_generators(&piece), group_depth);
            let translations = group_translations(&ops, LATTICE_TOL);
            let lattice = detect_lattice(&translations, LATTICE_TOL)?;
            // the double fold re-extension translation belongs to the lattice
            let c = fold_translation(&piece.null_curve);
            let t_sigma = c - fold_reflection().mul_vec(c);
            checks.push(CheckEntry::residual(
                "sigma-translation-in-lattice",
                lattice_distance(&lattice, t_sigma),
                LATTICE_TOL,
            ));
            (translations, Some(lattice))
        }
        Family::KarcherMaxface { .. } => {
            let raw = spec.data.period_spanning_set()?;
            let worst = raw.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
            checks.push(CheckEntry::residual(
                "single-valuedness",
                worst,
                SINGLE_VALUED_TOL,
            ));
            (raw, None)
        }
        _ => {
            let raw = spec.data.period_spanning_set()?;
            let lattice = detect_lattice(&raw, LATTICE_TOL)?;
            (raw, Some(lattice))
        }
    };
    let classification = lattice.as_ref().map(periodicity_classify);
    if let Some(expect) = expected_rank(spec.family) {
        match (&lattice, expect) {
            (None, 0) => {}
            (Some(lat), e) => {
                checks.push(CheckEntry::exact(
                    format!("lattice-rank[{}]", spec.family.id()),
                    lat.rank == e,
                    format!("detected {} expected {}", lat.rank, e),
                ));
                checks.push(CheckEntry::residual(
                    "integer-combination-residual",
                    lat.residual,
                    LATTICE_TOL,
                ));
            }
            (None, _) => checks.push(CheckEntry::exact(
                format!("lattice-rank[{}]", spec.family.id()),
                false,
                "no lattice detected",
            )),
        }
    }
    Ok(PeriodSummary { raw, lattice, classification, checks })
}

/// Discrete ZMC suite: flat-patch exactness, refinement orders on smooth
/// spacelike patches of the graph and of the mixed-type family, and the
/// graph identity for the k = 2 extension.
pub fn zmc_suite(a: f64) -> Result<Vec<CheckEntry>, mesh::MeshError> {
    let mut checks = Vec::new();

    // planar spacelike patch: exactly zero
    {
        let n = 10usize;
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                let x = i as f64 / n as f64;
                let y = j as f64 / n as f64;
                vertices.push(Vec3::new(0.25 * x - 0.1 * y, x, y));
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
        let stats = analysis::zmc_residuals(
            &vertices,
            &faces,
            crate::weierstrass::Signature::Lorentzian,
            &vec![false; faces.len()],
        );
        checks.push(CheckEntry::residual("planar-patch-residual", stats.max_residual, 1e-12));
    }

    // graph mesh refinement on a fixed compact spacelike region
    {
        let run = |n: usize| {
            let m = mesh::scherk_graph_mesh(1.0, n);
            let excluded: Vec<bool> = m
                .faces
                .iter()
                .map(|f| {
                    f.iter().any(|&vi| {
                        let v = m.vertices[vi as usize];
                        v.c1.tanh().powi(2) + v.c2.tanh().powi(2) > 0.6
                    })
                })
                .collect();
            analysis::zmc_residuals(
                &m.vertices,
                &m.faces,
                crate::weierstrass::Signature::Lorentzian,
                &excluded,
            )
            .interior_max()
        };
        let coarse = run(96);
        let fine = run(192);
        let order = (coarse / fine).log2();
        checks.push(
            CheckEntry::at_least("graph-zmc-order", order, ZMC_ORDER_MIN)
                .with_detail(format!("max residual {coarse:.3e} -> {fine:.3e}")),
        );
    }

    // mixed-type spacelike patch refinement on a fixed compact region
    {
        let run = |n: usize| -> Result<f64, mesh::MeshError> {
            let (m, charts) = mesh::spacelike_patch_mesh(a, n, n, 0.15, 0.85)?;
            let stats = analysis::zmc_residuals(
                &m.vertices,
                &m.faces,
                crate::weierstrass::Signature::Lorentzian,
                &vec![false; m.faces.len()],
            );
            let b = Complex64::from_polar(a, std::f64::consts::FRAC_PI_3);
            let mut max = 0.0_f64;
            for (i, r) in stats.per_vertex.iter().enumerate() {
                if let Some(r) = r {
                    let z = charts[i];
                    if z.norm() >= 0.25 && z.norm() <= 0.65 && (z - b).norm() >= 0.12 {
                        max = max.max(*r);
                    }
                }
            }
            Ok(max)
        };
        let coarse = run(32)?;
        let fine = run(64)?;
        let order = (coarse / fine).log2();
        checks.push(
            CheckEntry::at_least("spacelike-patch-zmc-order", order, ZMC_ORDER_MIN)
                .with_detail(format!("max residual {coarse:.3e} -> {fine:.3e}")),
        );
    }

    // k = 2 extension satisfies the entire-graph equation
    {
        let mut samples = Vec::new();
        for i in 0..10 {
            for j in 0..10 {
                samples.push((-0.25 + 0.5 * i as f64 / 9.0, 0.05 + 0.40 * j as f64 / 9.0));
            }
        }
        let (residual, _) = families::scherk_extension_residual(&samples)?;
        checks.push(
            CheckEntry::residual("scherk-graph-identity", residual, SCHERK_GRAPH_TOL)
                .with_detail("100 extension samples, k = 2"),
        );
    }
    Ok(checks)
}

/// Boundary suite: the fundamental piece boundary is two straight lines and
/// two planar curves in timelike planes, and the Hopf phases along the
/// domain rays match the expected pattern.
pub fn boundary_suite(a: f64) -> Result<Vec<CheckEntry>, mesh::MeshError> {
    let piece = sample_fundamental_piece(a, 16, 16, 16, 16)?;
    let mut checks = vec![
        CheckEntry::residual("weld-gap", piece.weld_gap, 1e-8),
        CheckEntry::residual("line-1-collinearity", piece.line_fits[0].residual, BOUNDARY_FIT_TOL),
        CheckEntry::residual("line-2-collinearity", piece.line_fits[1].residual, BOUNDARY_FIT_TOL),
        CheckEntry::residual("planar-1-coplanarity", piece.plane_fits[0].residual, BOUNDARY_FIT_TOL),
        CheckEntry::residual("planar-2-coplanarity", piece.plane_fits[1].residual, BOUNDARY_FIT_TOL),
        CheckEntry::exact(
            "planar-planes-timelike",
            piece.plane_fits.iter().all(|p| p.timelike),
            "Lorentzian norm of fitted normals positive",
        ),
    ];

    // Hopf phase pattern along the three boundary rays of the domain
    let spec = &piece.spec;
    let curve = spec.data.domain.curve().unwrap().clone();
    let real_seg: Vec<(SheetPoint, Complex64)> = (0..40)
        .map(|k| {
            let t = 0.03 + 0.94 * k as f64 / 39.0;
            let z = Complex64::new(t, 0.0);
            (SheetPoint::new(z, curve.eval_p(z).sqrt()), Complex64::new(1.0, 0.0))
        })
        .collect();
    let dir = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_3);
    let ray = |t0: f64, t1: f64| -> Vec<(SheetPoint, Complex64)> {
        (0..24)
            .map(|k| {
                let t = t0 + (t1 - t0) * k as f64 / 23.0;
                let z = dir.scale(t);
                (SheetPoint::new(z, curve.eval_p(z).sqrt()), dir)
            })
            .collect()
    };
    let classify = |samples: &[(SheetPoint, Complex64)]| {
        analysis::classify_boundary(&spec.data, samples, 1e-8)
    };
    checks.push(CheckEntry::exact(
        "real-axis-straight-line",
        matches!(classify(&real_seg), Ok(analysis::BoundaryClass::StraightLine)),
        "Hopf coefficient purely imaginary",
    ));
    checks.push(CheckEntry::exact(
        "inner-ray-planar",
        matches!(classify(&ray(0.03, a - 0.03)), Ok(analysis::BoundaryClass::PlanarCurve)),
        "Hopf coefficient purely real",
    ));
    checks.push(CheckEntry::exact(
        "outer-ray-straight-line",
        matches!(classify(&ray(a + 0.03, 0.97)), Ok(analysis::BoundaryClass::StraightLine)),
        "Hopf coefficient purely imaginary",
    ));
    Ok(checks)
}

/// Limit suite: helicoid rescaling and the nodal degeneration.
pub fn limits_suite() -> Result<Vec<CheckEntry>, crate::families::FamilyError> {
    let mut checks = Vec::new();
    let d01 = families::helicoid_limit_deviation(0.1)?;
    let d001 = families::helicoid_limit_deviation(0.01)?;
    checks.push(CheckEntry::residual("helicoid-deviation[a=0.1]", d01, HELICOID_DEV_AT_0_1));
    checks.push(CheckEntry::residual("helicoid-deviation[a=0.01]", d001, HELICOID_DEV_AT_0_01));
    let seq = [0.3, 0.2, 0.1, 0.05];
    let devs: Result<Vec<f64>, _> = seq.iter().map(|&a| families::helicoid_limit_deviation(a)).collect();
    let devs = devs?;
    let monotone = devs.windows(2).all(|w| w[1] < w[0]);
    checks.push(CheckEntry::exact(
        "helicoid-deviation-monotone",
        monotone,
        format!("{devs:?} along a = {seq:?}"),
    ));

    let samples: Vec<Complex64> = (0..8)
        .map(|j| Complex64::from_polar(0.5, 2.0 * std::f64::consts::PI * j as f64 / 8.0 + 0.05))
        .collect();
    let nodal: Result<Vec<f64>, _> = [0.9, 0.99, 0.999]
        .iter()
        .map(|&a| families::nodal_limit_comparison(a, &samples))
        .collect();
    let nodal = nodal?;
    let monotone = nodal.windows(2).all(|w| w[1] < w[0]);
    checks.push(CheckEntry::exact(
        "nodal-deviation-monotone",
        monotone,
        format!("{nodal:?} along a = [0.9, 0.99, 0.999]"),
    ));
    Ok(checks)
}

/// Causal-tag agreement of an assembled mesh against recomputed face
/// geometry, for generate-time reporting.
pub fn tag_agreement_check(mesh: &mesh::TaggedMesh) -> CheckEntry {
    let agreement = mesh.causal_tag_agreement(crate::weierstrass::Signature::Lorentzian);
    CheckEntry::at_least("causal-tag-agreement", agreement, 0.99)
}

/// Assembly diagnostics for the mixed-type family at the given depth.
pub struct AssemblyOutput {
    pub mesh: mesh::TaggedMesh,
    pub lattice: crate::weierstrass::PeriodLattice,
    pub checks: Vec<CheckEntry>,
    pub intersections: usize,
}

pub fn assemble_schwarz_h_zmc(
    a: f64,
    n_radial: usize,
    n_angular: usize,
    n_u: usize,
    n_v: usize,
    depth: usize,
) -> Result<AssemblyOutput, mesh::MeshError> {
    let piece = sample_fundamental_piece(a, n_radial, n_angular, n_u, n_v)?;
    let gens = boundary_generators(&piece);
    let ops = symmetry_group(&gens, depth);
    let assembled = assemble(&piece.mesh, &ops)?;
    let lattice_ops = symmetry_group(&gens, depth.max(5));
    let translations = group_translations(&lattice_ops, LATTICE_TOL);
    let lattice = detect_lattice(&translations, LATTICE_TOL)?;
    let mut checks = vec![
        CheckEntry::residual("weld-gap", piece.weld_gap, 1e-8),
        CheckEntry::exact(
            "assembly-lattice-rank-3",
            lattice.rank == 3,
            format!("rank {}", lattice.rank),
        ),
        tag_agreement_check(&assembled),
    ];
    if depth >= 2 {
        if let Some(gap) =
            mesh::lattice_invariance_gap(&assembled, &piece.mesh, &ops, &lattice.basis, LATTICE_TOL)
        {
            checks.push(CheckEntry::residual("lattice-invariance-gap", gap, LATTICE_TOL));
        }
    }
    let intersections = mesh::self_intersections(&assembled, 8).pairs;
    Ok(AssemblyOutput { mesh: assembled, lattice, checks, intersections })
}

/// Lightlike-band statistics for reporting.
pub fn band_faces(mesh: &mesh::TaggedMesh) -> usize {
    mesh.tags.iter().filter(|t| t.causal == CausalClass::Lightlike).count()
}
