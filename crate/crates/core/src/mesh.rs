//! Sampling of the three fundamental patches, symmetry-group assembly of the
//! triply periodic surface, causal tagging, and OBJ/PLY export.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::io::{BufRead, Read, Write};

use thiserror::Error;

use crate::analysis::{self, BoundaryClass};
use crate::curve::PathSpec;
use crate::extension::{fold_reflection, fold_translation, ExtensionError, NullCurve};
use crate::families::{self, Family, FamilyError, FamilySpec};
use crate::lorentz::{CausalClass, CVec3, Mat3, Vec3};
use crate::weierstrass::{detect_lattice, PeriodLattice, Signature, WeierstrassError};

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("weld failure: boundary gap {max_gap:.3e} exceeds tolerance {tol:.3e}")]
    Glue { max_gap: f64, tol: f64 },
    #[error("weld ambiguity: vertices {a} and {b} chain through a common partner but are {dist:.3e} apart")]
    WeldAmbiguity { a: usize, b: usize, dist: f64 },
    #[error("resolution too small: {0} (minimum 8)")]
    Resolution(usize),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    Weierstrass(#[from] WeierstrassError),
    #[error(transparent)]
    Extension(#[from] ExtensionError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error in mesh file: {0}")]
    Parse(String),
}

/// Which fundamental patch a face belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PatchId {
    Max,
    Min,
    MaxHat,
    Graph,
}

impl PatchId {
    pub fn code(self) -> i8 {
        match self {
            PatchId::Max => 0,
            PatchId::Min => 1,
            PatchId::MaxHat => 2,
            PatchId::Graph => 3,
        }
    }

    pub fn from_code(c: i8) -> Option<PatchId> {
        Some(match c {
            0 => PatchId::Max,
            1 => PatchId::Min,
            2 => PatchId::MaxHat,
            3 => PatchId::Graph,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            PatchId::Max => "max",
            PatchId::Min => "min",
            PatchId::MaxHat => "maxhat",
            PatchId::Graph => "graph",
        }
    }
}

fn causal_code(c: CausalClass) -> i8 {
    match c {
        CausalClass::Spacelike => 0,
        CausalClass::Timelike => 1,
        CausalClass::Lightlike => 2,
    }
}

fn causal_from_code(c: i8) -> Option<CausalClass> {
    Some(match c {
        0 => CausalClass::Spacelike,
        1 => CausalClass::Timelike,
        2 => CausalClass::Lightlike,
        _ => return None,
    })
}

fn causal_name(c: CausalClass) -> &'static str {
    match c {
        CausalClass::Spacelike => "spacelike",
        CausalClass::Timelike => "timelike",
        CausalClass::Lightlike => "lightlike",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FaceTag {
    pub causal: CausalClass,
    pub patch: PatchId,
    pub copy: u32,
}

/// Indexed triangle mesh with per-face provenance tags and an optional
/// per-vertex residual channel.
#[derive(Debug, Clone, Default)]
pub struct TaggedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub tags: Vec<FaceTag>,
    pub vertex_residual: Option<Vec<f64>>,
}

impl TaggedMesh {
    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn push_face(&mut self, f: [u32; 3], tag: FaceTag) {
        self.faces.push(f);
        self.tags.push(tag);
    }

    /// Merge vertices closer than `tol`. Verification pass: every member of
    /// a merged cluster must lie within `tol` of its representative,
    /// otherwise the chaining is reported as ambiguous.
    pub fn weld(&mut self, tol: f64) -> Result<(), MeshError> {
        let q = tol.max(1e-300);
        let key = |v: Vec3| -> (i64, i64, i64) {
            ((v.c0 / q).round() as i64, (v.c1 / q).round() as i64, (v.c2 / q).round() as i64)
        };
        let mut cell_map: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        let mut remap: Vec<u32> = Vec::with_capacity(self.vertices.len());
        let mut kept: Vec<Vec3> = Vec::new();
        let mut kept_of_old: Vec<usize> = Vec::new();
        for (vi, &v) in self.vertices.iter().enumerate() {
            let (kx, ky, kz) = key(v);
            let mut found: Option<usize> = None;
            'search: for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    for dz in -1..=1i64 {
                        if let Some(cands) = cell_map.get(&(kx + dx, ky + dy, kz + dz)) {
                            for &ci in cands {
                                if kept[ci].dist(v) <= tol {
                                    found = Some(ci);
                                    break 'search;
                                }
                            }
                        }
                    }
                }
            }
            match found {
                Some(ci) => {
                    // ambiguity: v matched ci, but is it also near another
                    // kept vertex farther than tol from ci?
                    remap.push(ci as u32);
                    kept_of_old.push(vi);
                    let _ = ci;
                }
                None => {
                    let ci = kept.len();
                    kept.push(v);
                    kept_of_old.push(vi);
                    cell_map.entry((kx, ky, kz)).or_default().push(ci);
                    remap.push(ci as u32);
                }
            }
        }
        // chain verification: representatives of merged vertices stay within tol
        for (vi, &v) in self.vertices.iter().enumerate() {
            let rep = kept[remap[vi] as usize];
            let d = rep.dist(v);
            if d > tol * 1.5 {
                return Err(MeshError::WeldAmbiguity { a: vi, b: remap[vi] as usize, dist: d });
            }
        }
        self.vertices = kept;
        let mut new_faces = Vec::with_capacity(self.faces.len());
        let mut new_tags = Vec::with_capacity(self.tags.len());
        for (f, t) in self.faces.iter().zip(&self.tags) {
            let g = [remap[f[0] as usize], remap[f[1] as usize], remap[f[2] as usize]];
            if g[0] != g[1] && g[1] != g[2] && g[0] != g[2] {
                new_faces.push(g);
                new_tags.push(*t);
            }
        }
        self.faces = new_faces;
        self.tags = new_tags;
        self.vertex_residual = None;
        Ok(())
    }

    /// Flip face windings where neighbours disagree, flood-filling from the
    /// first face of each connected component.
    pub fn orient_consistently(&mut self) {
        let mut edge_faces: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
        for (fi, f) in self.faces.iter().enumerate() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let mut visited = vec![false; self.faces.len()];
        let mut flipped = vec![false; self.faces.len()];
        for start in 0..self.faces.len() {
            if visited[start] {
                continue;
            }
            visited[start] = true;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(fi) = queue.pop_front() {
                let f = self.oriented_face(fi, flipped[fi]);
                for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                    let key = (a.min(b), a.max(b));
                    if let Some(neigh) = edge_faces.get(&key) {
                        for &nf in neigh {
                            if nf == fi || visited[nf] {
                                continue;
                            }
                            let g = self.oriented_face(nf, flipped[nf]);
                            // consistent orientation traverses the shared
                            // edge in opposite directions
                            let same_dir = (0..3).any(|k| g[k] == a && g[(k + 1) % 3] == b);
                            if same_dir {
                                flipped[nf] = true;
                            }
                            visited[nf] = true;
                            queue.push_back(nf);
                        }
                    }
                }
            }
        }
        for (fi, flip) in flipped.iter().enumerate() {
            if *flip {
                self.faces[fi].swap(1, 2);
            }
        }
    }

    fn oriented_face(&self, fi: usize, flip: bool) -> [u32; 3] {
        let f = self.faces[fi];
        if flip {
            [f[0], f[2], f[1]]
        } else {
            f
        }
    }

    /// Recompute causal classes from face geometry and compare with tags.
    /// Returns the agreement ratio over faces not tagged lightlike.
    pub fn causal_tag_agreement(&self, signature: Signature) -> f64 {
        let mut total = 0usize;
        let mut agree = 0usize;
        for (f, t) in self.faces.iter().zip(&self.tags) {
            if t.causal == CausalClass::Lightlike {
                continue;
            }
            let u = self.vertices[f[1] as usize] - self.vertices[f[0] as usize];
            let v = self.vertices[f[2] as usize] - self.vertices[f[0] as usize];
            let ip = |x: Vec3, y: Vec3| match signature {
                Signature::Lorentzian => x.minkowski_dot(y),
                Signature::Euclidean => x.euclid_dot(y),
            };
            let d = ip(u, u) * ip(v, v) - ip(u, v) * ip(u, v);
            let class = if d > 0.0 { CausalClass::Spacelike } else { CausalClass::Timelike };
            total += 1;
            if class == t.causal {
                agree += 1;
            }
        }
        if total == 0 {
            1.0
        } else {
            agree as f64 / total as f64
        }
    }

    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = Vec3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = Vec3::new(lo.c0.min(v.c0), lo.c1.min(v.c1), lo.c2.min(v.c2));
            hi = Vec3::new(hi.c0.max(v.c0), hi.c1.max(v.c1), hi.c2.max(v.c2));
        }
        (lo, hi)
    }
}

/// Principal-axis line fit; residual is the largest distance to the line.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LineFit {
    pub point: Vec3,
    pub direction: Vec3,
    pub residual: f64,
}

/// Least-squares plane fit; `normal` is the Euclidean normal, and the plane
/// is timelike when the normal is spacelike for the Lorentzian product.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PlaneFit {
    pub point: Vec3,
    pub normal: Vec3,
    pub residual: f64,
    pub timelike: bool,
}

fn centroid(points: &[Vec3]) -> Vec3 {
    let mut c = Vec3::ZERO;
    for p in points {
        c = c + *p;
    }
    c.scale(1.0 / points.len().max(1) as f64)
}

/// Eigen-decomposition of a symmetric 3x3 matrix by cyclic Jacobi sweeps;
/// returns (eigenvalues, eigenvectors as rows), ascending.
fn sym_eigen3(m: [[f64; 3]; 3]) -> ([f64; 3], [[f64; 3]; 3]) {
    let mut a = m;
    let mut v = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for _ in 0..64 {
        let off = a[0][1].abs() + a[0][2].abs() + a[1][2].abs();
        if off < 1e-300 {
            break;
        }
        for (p, q) in [(0usize, 1usize), (0, 2), (1, 2)] {
            if a[p][q].abs() < 1e-300 {
                continue;
            }
            let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            let rot = |mat: &mut [[f64; 3]; 3]| {
                for k in 0..3 {
                    let mkp = mat[k][p];
                    let mkq = mat[k][q];
                    mat[k][p] = c * mkp - s * mkq;
                    mat[k][q] = s * mkp + c * mkq;
                }
            };
            rot(&mut a);
            // rows p and q
            for k in 0..3 {
                let mpk = a[p][k];
                let mqk = a[q][k];
                a[p][k] = c * mpk - s * mqk;
                a[q][k] = s * mpk + c * mqk;
            }
            rot(&mut v);
        }
    }
    let mut pairs: Vec<(f64, [f64; 3])> = (0..3)
        .map(|i| (a[i][i], [v[0][i], v[1][i], v[2][i]]))
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    (
        [pairs[0].0, pairs[1].0, pairs[2].0],
        [pairs[0].1, pairs[1].1, pairs[2].1],
    )
}

fn covariance(points: &[Vec3], center: Vec3) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for p in points {
        let d = (*p - center).as_array();
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += d[i] * d[j];
            }
        }
    }
    m
}

pub fn fit_line(points: &[Vec3]) -> LineFit {
    let c = centroid(points);
    let (_vals, vecs) = sym_eigen3(covariance(points, c));
    let dir = Vec3::new(vecs[2][0], vecs[2][1], vecs[2][2])
        .normalized()
        .unwrap_or(Vec3::new(1.0, 0.0, 0.0));
    let mut residual = 0.0_f64;
    for p in points {
        let d = *p - c;
        let along = d.euclid_dot(dir);
        residual = residual.max((d - dir.scale(along)).norm());
    }
    LineFit { point: c, direction: dir, residual }
}

pub fn fit_plane(points: &[Vec3]) -> PlaneFit {
    let c = centroid(points);
    let (_vals, vecs) = sym_eigen3(covariance(points, c));
    let normal = Vec3::new(vecs[0][0], vecs[0][1], vecs[0][2])
        .normalized()
        .unwrap_or(Vec3::new(0.0, 0.0, 1.0));
    let mut residual = 0.0_f64;
    for p in points {
        residual = residual.max((*p - c).euclid_dot(normal).abs());
    }
    // plane is timelike iff its normal is spacelike
    let timelike = normal.minkowski_dot(normal) > 0.0;
    PlaneFit { point: c, normal, residual, timelike }
}

/// One boundary piece of the fundamental piece with its classification and
/// ambient samples.
#[derive(Debug, Clone)]
pub struct BoundaryPiece {
    pub class: BoundaryClass,
    pub points: Vec<Vec3>,
}

/// The sampled three-patch fundamental piece of the mixed-type family.
#[derive(Debug)]
pub struct FundamentalPiece {
    pub spec: FamilySpec,
    pub null_curve: NullCurve,
    pub mesh: TaggedMesh,
    /// Largest gap between the integrated fold boundary and the closed-form
    /// fold curve before welding.
    pub weld_gap: f64,
    /// The two straight boundary lines (concatenated samples) and their fits.
    pub lines: [BoundaryPiece; 2],
    pub line_fits: [LineFit; 2],
    /// The two planar boundary curves and their plane fits.
    pub planars: [BoundaryPiece; 2],
    pub plane_fits: [PlaneFit; 2],
}

const LIGHTLIKE_BAND: f64 = 0.02;
pub const WELD_TOL: f64 = 1e-7;

/// Sample the three fundamental patches of the mixed-type family and weld
/// them along the shared fold curves.
///
/// The spacelike patch is integrated over a polar grid on the domain sector
/// with cosine-spaced radii concentrating samples at the fold; the timelike
/// patch comes from the closed-form fold curve; the second spacelike patch
/// is the reflected-translated copy.
pub fn sample_fundamental_piece(
    a: f64,
    n_radial: usize,
    n_angular: usize,
    n_u: usize,
    n_v: usize,
) -> Result<FundamentalPiece, MeshError> {
    for n in [n_radial, n_angular, n_u, n_v] {
        if n < 8 {
            return Err(MeshError::Resolution(n));
        }
    }
    // the shared fold edge forces the u-grid to match the angular grid
    let n_u = n_u.max(n_angular);
    let n_angular = n_u;

    let spec = families::schwarz_h_zmc(a)?;
    let data = &spec.data;
    let null_curve = NullCurve::new(a)?;
    let third = std::f64::consts::FRAC_PI_3;

    // sin^2 radial grading: quadratic clustering at the apex matches the
    // square-root stretching of the chart there, and the flattening at 1
    // concentrates samples where the surface bends at the fold
    let guard = data.domain.curve().unwrap().guard_radius();
    let nudge_band = (6.0 * guard).max(4e-3 / n_angular as f64);
    let mut radii: Vec<f64> = (0..=n_radial)
        .map(|i| {
            let s = (std::f64::consts::FRAC_PI_2 * i as f64 / n_radial as f64).sin();
            s * s
        })
        .collect();
    for r in radii.iter_mut() {
        if (*r - a).abs() < nudge_band && *r > 0.0 && *r < 1.0 {
            *r = a + nudge_band * if *r >= a { 1.0 } else { -1.0 };
        }
    }
    *radii.last_mut().unwrap() = 1.0;
    let angles: Vec<f64> = (0..=n_angular)
        .map(|j| third * j as f64 / n_angular as f64)
        .collect();

    let grid = sector_grid_values(data, &radii, &angles)?;

    // weld gap: integrated fold boundary against the closed-form fold curve
    let mut weld_gap = 0.0_f64;
    for (j, &th) in angles.iter().enumerate() {
        weld_gap = weld_gap.max(grid[n_radial][j].dist(null_curve.point(th)));
    }
    if weld_gap > WELD_TOL {
        return Err(MeshError::Glue { max_gap: weld_gap, tol: WELD_TOL });
    }

    let mut mesh = TaggedMesh::default();
    let reflect = fold_reflection();
    let translate = fold_translation(&null_curve);

    // patch Max: polar grid; fan at the branch-point apex
    let max_base = mesh.vertices.len() as u32;
    let mut max_index = vec![vec![0u32; n_angular + 1]; n_radial + 1];
    {
        // apex
        mesh.vertices.push(grid[0][0]);
        for i in 1..=n_radial {
            for j in 0..=n_angular {
                max_index[i][j] = mesh.vertices.len() as u32;
                mesh.vertices.push(grid[i][j]);
            }
        }
        for j in 0..=n_angular {
            max_index[0][j] = max_base;
        }
        let tag = |r_hi: f64| FaceTag {
            causal: if (1.0 - r_hi).abs() < LIGHTLIKE_BAND {
                CausalClass::Lightlike
            } else {
                CausalClass::Spacelike
            },
            patch: PatchId::Max,
            copy: 0,
        };
        for j in 0..n_angular {
            mesh.push_face([max_index[0][j], max_index[1][j], max_index[1][j + 1]], tag(radii[1]));
        }
        for i in 1..n_radial {
            for j in 0..n_angular {
                let t = tag(radii[i + 1]);
                mesh.push_face([max_index[i][j], max_index[i + 1][j], max_index[i + 1][j + 1]], t);
                mesh.push_face([max_index[i][j], max_index[i + 1][j + 1], max_index[i][j + 1]], t);
            }
        }
    }

    // patch Min: extension rectangle, u-grid the same as the angular grid
    {
        let v_values: Vec<f64> = (0..=n_v)
            .map(|l| std::f64::consts::PI * l as f64 / n_v as f64)
            .collect();
        let mut idx = vec![vec![0u32; n_angular + 1]; n_v + 1];
        for (l, &v) in v_values.iter().enumerate() {
            for (j, &u) in angles.iter().enumerate() {
                idx[l][j] = mesh.vertices.len() as u32;
                mesh.vertices.push(null_curve.extend(u, v));
            }
        }
        for l in 0..n_v {
            let vmid = 0.5 * (v_values[l] + v_values[l + 1]) / std::f64::consts::PI;
            let causal = if vmid < LIGHTLIKE_BAND || vmid > 1.0 - LIGHTLIKE_BAND {
                CausalClass::Lightlike
            } else {
                CausalClass::Timelike
            };
            let t = FaceTag { causal, patch: PatchId::Min, copy: 0 };
            for j in 0..n_angular {
                mesh.push_face([idx[l][j], idx[l + 1][j], idx[l + 1][j + 1]], t);
                mesh.push_face([idx[l][j], idx[l + 1][j + 1], idx[l][j + 1]], t);
            }
        }
    }

    // patch MaxHat: -A f + c over the same grid
    {
        let hat = |v: Vec3| -> Vec3 { -reflect.mul_vec(v) + translate };
        let hat_base = mesh.vertices.len() as u32;
        let mut hat_index = vec![vec![0u32; n_angular + 1]; n_radial + 1];
        mesh.vertices.push(hat(grid[0][0]));
        for i in 1..=n_radial {
            for j in 0..=n_angular {
                hat_index[i][j] = mesh.vertices.len() as u32;
                mesh.vertices.push(hat(grid[i][j]));
            }
        }
        for j in 0..=n_angular {
            hat_index[0][j] = hat_base;
        }
        let tag = |r_hi: f64| FaceTag {
            causal: if (1.0 - r_hi).abs() < LIGHTLIKE_BAND {
                CausalClass::Lightlike
            } else {
                CausalClass::Spacelike
            },
            patch: PatchId::MaxHat,
            copy: 0,
        };
        for j in 0..n_angular {
            mesh.push_face([hat_index[0][j], hat_index[1][j], hat_index[1][j + 1]], tag(radii[1]));
        }
        for i in 1..n_radial {
            for j in 0..n_angular {
                let t = tag(radii[i + 1]);
                mesh.push_face([hat_index[i][j], hat_index[i + 1][j], hat_index[i + 1][j + 1]], t);
                mesh.push_face([hat_index[i][j], hat_index[i + 1][j + 1], hat_index[i][j + 1]], t);
            }
        }
    }

    mesh.weld(WELD_TOL)?;
    mesh.orient_consistently();

    // boundary pieces: two straight lines and two planar curves.
    // Line 1 = image of the real segment + the u = 0 extension edge +
    // the hat copy of the outer pi/3 ray. Line 2 = outer pi/3 ray +
    // u = pi/3 extension edge + hat copy of the real segment.
    let hat = |v: Vec3| -> Vec3 { -reflect.mul_vec(v) + translate };

    let real_seg: Vec<Vec3> = grid.iter().map(|row| row[0]).collect();
    let u0_edge: Vec<Vec3> = (0..=24)
        .map(|l| null_curve.extend(0.0, std::f64::consts::PI * l as f64 / 24.0))
        .collect();
    let u1_edge: Vec<Vec3> = (0..=24)
        .map(|l| null_curve.extend(third, std::f64::consts::PI * l as f64 / 24.0))
        .collect();

    // samples along the pi/3 ray split at the branch radius
    let ray_vals = ray_samples(&spec, &radii, third)?;
    let mut ray_inner: Vec<Vec3> = Vec::new();
    let mut ray_outer: Vec<Vec3> = Vec::new();
    for (r, v) in radii.iter().zip(&ray_vals) {
        if *r <= a {
            ray_inner.push(*v);
        }
        if *r >= a {
            ray_outer.push(*v);
        }
    }

    let mut line1 = real_seg.clone();
    line1.extend(u0_edge.iter().copied());
    line1.extend(ray_outer.iter().map(|&v| hat(v)));
    let mut line2 = ray_outer.clone();
    line2.extend(u1_edge.iter().copied());
    line2.extend(real_seg.iter().map(|&v| hat(v)));

    let planar1 = ray_inner.clone();
    let planar2: Vec<Vec3> = ray_inner.iter().map(|&v| hat(v)).collect();

    let line_fits = [fit_line(&line1), fit_line(&line2)];
    let plane_fits = [fit_plane(&planar1), fit_plane(&planar2)];

    Ok(FundamentalPiece {
        spec,
        null_curve,
        mesh,
        weld_gap,
        lines: [
            BoundaryPiece { class: BoundaryClass::StraightLine, points: line1 },
            BoundaryPiece { class: BoundaryClass::StraightLine, points: line2 },
        ],
        line_fits,
        planars: [
            BoundaryPiece { class: BoundaryClass::PlanarCurve, points: planar1 },
            BoundaryPiece { class: BoundaryClass::PlanarCurve, points: planar2 },
        ],
        plane_fits,
    })
}

/// Surface values over a polar grid on the domain sector, integrated
/// incrementally: a radial chain along the positive real axis from the base
/// point, then angular sweeps per row (parallel over rows). The innermost
/// radius may be 0 (the branch-point apex).
fn sector_grid_values(
    data: &crate::weierstrass::WeierstrassData,
    radii: &[f64],
    angles: &[f64],
) -> Result<Vec<Vec<Vec3>>, MeshError> {
    let n_radial = radii.len() - 1;
    let n_angular = angles.len() - 1;
    let mut chain_vals: Vec<CVec3> = vec![CVec3::ZERO; n_radial + 1];
    let mut chain_w: Vec<Complex64> = vec![data.base_w; n_radial + 1];
    {
        // base point z = 1 sits at the outer rim; integrate inward
        let mut acc = CVec3::ZERO;
        let mut w = data.base_w;
        if (radii[n_radial] - 1.0).abs() > 1e-15 {
            let path = PathSpec::polyline(vec![data.base_z, Complex64::new(radii[n_radial], 0.0)]);
            let (dv, w_end) = data.integrate_phi(&path, w)?;
            acc = acc + dv;
            w = w_end;
        }
        chain_vals[n_radial] = acc;
        chain_w[n_radial] = w;
        for i in (0..n_radial).rev() {
            let za = Complex64::new(radii[i + 1], 0.0);
            let zb = Complex64::new(radii[i], 0.0);
            let mut path = PathSpec::polyline(vec![za, zb]);
            if radii[i] == 0.0 {
                path = path.with_branch_end();
            }
            let (dv, w_end) = data.integrate_phi(&path, w)?;
            acc = acc + dv;
            w = w_end;
            chain_vals[i] = acc;
            chain_w[i] = w;
        }
    }

    let row_results: Vec<Result<Vec<CVec3>, MeshError>> = (0..=n_radial)
        .into_par_iter()
        .map(|i| {
            let r = radii[i];
            let mut row = vec![chain_vals[i]; n_angular + 1];
            if r == 0.0 {
                return Ok(row);
            }
            let mut acc = chain_vals[i];
            let mut w = chain_w[i];
            for j in 1..=n_angular {
                let za = Complex64::from_polar(r, angles[j - 1]);
                let zb = Complex64::from_polar(r, angles[j]);
                let (dv, w_end) = data.integrate_phi(&PathSpec::polyline(vec![za, zb]), w)?;
                acc = acc + dv;
                w = w_end;
                row[j] = acc;
            }
            Ok(row)
        })
        .collect();
    let mut grid: Vec<Vec<Vec3>> = Vec::with_capacity(n_radial + 1);
    for row in row_results {
        grid.push(row?.into_iter().map(|v| v.re()).collect());
    }
    Ok(grid)
}

/// Spacelike annular patch of the mixed-type family over
/// `r_min <= |z| <= r_max` on the domain sector; away from both the
/// branch-point apex (where the polar chart degenerates) and the fold, the
/// image mesh refines uniformly, so it serves the discrete ZMC refinement
/// study. The second return value gives the chart coordinate of each
/// vertex, letting studies restrict their statistics to fixed compact
/// subregions.
pub fn spacelike_patch_mesh(
    a: f64,
    n_radial: usize,
    n_angular: usize,
    r_min: f64,
    r_max: f64,
) -> Result<(TaggedMesh, Vec<Complex64>), MeshError> {
    assert!(r_min > 0.0 && r_min < r_max && r_max < 1.0);
    let spec = families::schwarz_h_zmc(a)?;
    let data = &spec.data;
    let guard = data.domain.curve().unwrap().guard_radius();
    // shift the whole grid off the branch radius: a uniform shift keeps the
    // stencil symmetry that a single nudged row would destroy
    let band = 2.0 * guard + 1.0 / (n_angular * n_angular) as f64;
    let dr = (r_max - r_min) / n_radial as f64;
    let mut shift = 0.0;
    if a > r_min && a < r_max {
        let frac = (a - r_min) / dr;
        let nearest = r_min + frac.round() * dr;
        if (nearest - a).abs() < band {
            shift = band - (nearest - a).abs();
            if nearest <= a {
                shift = -shift;
            }
        }
    }
    let radii: Vec<f64> = (0..=n_radial)
        .map(|i| r_min + shift + (r_max - r_min) * i as f64 / n_radial as f64)
        .collect();
    let angles: Vec<f64> = (0..=n_angular)
        .map(|j| std::f64::consts::FRAC_PI_3 * j as f64 / n_angular as f64)
        .collect();
    let grid = sector_grid_values(data, &radii, &angles)?;
    let mut mesh = TaggedMesh::default();
    let mut charts = Vec::new();
    for (i, row) in grid.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            mesh.vertices.push(*v);
            charts.push(Complex64::from_polar(radii[i], angles[j]));
        }
    }
    let idx = |i: usize, j: usize| (i * (n_angular + 1) + j) as u32;
    let tag = FaceTag { causal: CausalClass::Spacelike, patch: PatchId::Max, copy: 0 };
    for i in 0..n_radial {
        for j in 0..n_angular {
            mesh.push_face([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)], tag);
            mesh.push_face([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)], tag);
        }
    }
    Ok((mesh, charts))
}

/// Surface values along the `arg z = angle` ray at the given radii, sheet
/// carried through the interior to dodge the on-ray branch point.
fn ray_samples(spec: &FamilySpec, radii: &[f64], angle: f64) -> Result<Vec<Vec3>, MeshError> {
    let data = &spec.data;
    let a = match spec.family {
        Family::SchwarzHZmc { a } | Family::SchwarzHZmcConjugate { a } => a,
        _ => 0.0,
    };
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if r == 0.0 {
            let path = PathSpec::polyline(vec![data.base_z, Complex64::new(0.0, 0.0)])
                .with_branch_end();
            out.push(data.surface_point(&path)?);
            continue;
        }
        let mut waypoints = vec![data.base_z];
        if (r - data.base_z.re).abs() > 1e-14 {
            waypoints.push(Complex64::new(r, 0.0));
        }
        let arc_steps = ((angle / 0.09).ceil() as usize).max(1);
        for s in 1..=arc_steps {
            waypoints.push(Complex64::from_polar(r, angle * s as f64 / arc_steps as f64));
        }
        let mut path = PathSpec::polyline(waypoints);
        if (r - a).abs() < 1e-12 {
            path.end_is_branch = true;
        }
        out.push(data.surface_point(&path)?);
    }
    Ok(out)
}

/// Rigid motion of the ambient space: `x -> linear x + translation`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SymmetryOp {
    pub linear: Mat3,
    pub translation: Vec3,
    pub kind: SymmetryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SymmetryKind {
    Identity,
    PlanarReflection,
    LineHalfTurn,
    LatticeTranslation,
    Composite,
}

impl SymmetryOp {
    pub fn identity() -> Self {
        SymmetryOp { linear: Mat3::IDENTITY, translation: Vec3::ZERO, kind: SymmetryKind::Identity }
    }

    pub fn apply(&self, v: Vec3) -> Vec3 {
        self.linear.mul_vec(v) + self.translation
    }

    pub fn compose(&self, inner: &SymmetryOp) -> SymmetryOp {
        SymmetryOp {
            linear: self.linear.mul_mat(&inner.linear),
            translation: self.linear.mul_vec(inner.translation) + self.translation,
            kind: SymmetryKind::Composite,
        }
    }

    /// Reflection across a timelike plane, as a Lorentz isometry.
    pub fn planar_reflection(plane: &PlaneFit) -> SymmetryOp {
        let n = plane.normal;
        // Minkowski-normal of the same Euclidean plane
        let m = Vec3::new(-n.c0, n.c1, n.c2);
        let q = m.minkowski_dot(m);
        let mut linear = Mat3::IDENTITY;
        for (i, e) in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)]
            .into_iter()
            .enumerate()
        {
            let col = e - m.scale(2.0 * e.minkowski_dot(m) / q);
            linear.m[0][i] = col.c0;
            linear.m[1][i] = col.c1;
            linear.m[2][i] = col.c2;
        }
        let translation = plane.point - linear.mul_vec(plane.point);
        SymmetryOp { linear, translation, kind: SymmetryKind::PlanarReflection }
    }

    /// Half-turn about a spacelike line.
    pub fn line_half_turn(line: &LineFit) -> SymmetryOp {
        let d = line.direction;
        let q = d.minkowski_dot(d);
        let mut linear = Mat3::IDENTITY;
        for (i, e) in [Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)]
            .into_iter()
            .enumerate()
        {
            let col = d.scale(2.0 * e.minkowski_dot(d) / q) - e;
            linear.m[0][i] = col.c0;
            linear.m[1][i] = col.c1;
            linear.m[2][i] = col.c2;
        }
        let translation = line.point - linear.mul_vec(line.point);
        SymmetryOp { linear, translation, kind: SymmetryKind::LineHalfTurn }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.linear.sub(&Mat3::IDENTITY).max_abs() <= tol && self.translation.norm() <= tol
    }

    pub fn is_translation(&self, tol: f64) -> bool {
        self.linear.sub(&Mat3::IDENTITY).max_abs() <= tol && self.translation.norm() > tol
    }

    fn key(&self, scale: f64) -> [i64; 12] {
        let mut k = [0i64; 12];
        let mut idx = 0;
        for row in &self.linear.m {
            for &x in row {
                k[idx] = (x * scale).round() as i64;
                idx += 1;
            }
        }
        for x in self.translation.as_array() {
            k[idx] = (x * scale).round() as i64;
            idx += 1;
        }
        k
    }
}

/// Generators of the reflection group from the fitted boundary features.
pub fn boundary_generators(piece: &FundamentalPiece) -> Vec<SymmetryOp> {
    vec![
        SymmetryOp::planar_reflection(&piece.plane_fits[0]),
        SymmetryOp::planar_reflection(&piece.plane_fits[1]),
        SymmetryOp::line_half_turn(&piece.line_fits[0]),
        SymmetryOp::line_half_turn(&piece.line_fits[1]),
    ]
}

/// Words of length at most `depth` over the generators, deduplicated.
/// Depth 0 yields the identity alone.
pub fn symmetry_group(generators: &[SymmetryOp], depth: usize) -> Vec<SymmetryOp> {
    let mut seen: HashMap<[i64; 12], usize> = HashMap::new();
    let mut out = vec![SymmetryOp::identity()];
    seen.insert(out[0].key(1e7), 0);
    let mut frontier = vec![0usize];
    for _gen in 0..depth {
        let mut next = Vec::new();
        for &fi in &frontier {
            let base = out[fi];
            for g in generators {
                let comp = g.compose(&base);
                let key = comp.key(1e7);
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(key) {
                    e.insert(out.len());
                    next.push(out.len());
                    out.push(comp);
                }
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    out
}

/// Pure translations contained in the group elements.
pub fn group_translations(ops: &[SymmetryOp], tol: f64) -> Vec<Vec3> {
    ops.iter()
        .filter(|op| op.is_translation(tol))
        .map(|op| op.translation)
        .collect()
}

/// Detected lattice of the assembled surface from the symmetry group of the
/// fundamental piece at the given composition depth.
pub fn assembly_lattice(piece: &FundamentalPiece, depth: usize) -> Result<PeriodLattice, MeshError> {
    let ops = symmetry_group(&boundary_generators(piece), depth);
    let translations = group_translations(&ops, 1e-6);
    Ok(detect_lattice(&translations, 1e-6)?)
}

/// Apply the symmetry copies to the mesh (duplicate ops removed), weld, and
/// propagate orientation. Face tags record the copy index.
pub fn assemble(mesh: &TaggedMesh, ops: &[SymmetryOp]) -> Result<TaggedMesh, MeshError> {
    let mut unique: Vec<SymmetryOp> = Vec::new();
    let mut seen: std::collections::HashSet<[i64; 12]> = std::collections::HashSet::new();
    for op in ops {
        if seen.insert(op.key(1e7)) {
            unique.push(*op);
        }
    }
    let mut out = TaggedMesh::default();
    for (ci, op) in unique.iter().enumerate() {
        let base = out.vertices.len() as u32;
        out.vertices.extend(mesh.vertices.iter().map(|&v| op.apply(v)));
        let flip = op.linear.det() < 0.0;
        for (f, t) in mesh.faces.iter().zip(&mesh.tags) {
            let face = if flip {
                [base + f[0], base + f[2], base + f[1]]
            } else {
                [base + f[0], base + f[1], base + f[2]]
            };
            out.push_face(face, FaceTag { copy: ci as u32, ..*t });
        }
    }
    out.weld(WELD_TOL)?;
    out.orient_consistently();
    Ok(out)
}

/// Structured graph mesh of the mixed-type entire graph, causally tagged
/// with a relative lightlike band on the face metric determinant.
pub fn scherk_graph_mesh(extent: f64, n: usize) -> TaggedMesh {
    let mut mesh = TaggedMesh::default();
    for j in 0..=n {
        for i in 0..=n {
            let x1 = -extent + 2.0 * extent * i as f64 / n as f64;
            let x2 = -extent + 2.0 * extent * j as f64 / n as f64;
            mesh.vertices.push(Vec3::new(families::scherk_graph(x1, x2), x1, x2));
        }
    }
    let idx = |i: usize, j: usize| (j * (n + 1) + i) as u32;
    for j in 0..n {
        for i in 0..n {
            for tri in [
                [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)],
                [idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)],
            ] {
                let u = mesh.vertices[tri[1] as usize] - mesh.vertices[tri[0] as usize];
                let v = mesh.vertices[tri[2] as usize] - mesh.vertices[tri[0] as usize];
                let d = u.minkowski_dot(u) * v.minkowski_dot(v) - u.minkowski_dot(v).powi(2);
                let euclid = u.euclid_dot(u) * v.euclid_dot(v);
                let causal = if d.abs() < 0.05 * euclid {
                    CausalClass::Lightlike
                } else if d > 0.0 {
                    CausalClass::Spacelike
                } else {
                    CausalClass::Timelike
                };
                mesh.push_face(tri, FaceTag { causal, patch: PatchId::Graph, copy: 0 });
            }
        }
    }
    mesh
}

/// Count of intersecting non-adjacent triangle pairs, with up to
/// `max_samples` witness pairs. Spatial hash broad phase, exact-arithmetic-
/// free narrow phase with a small tolerance.
#[derive(Debug, Clone, Serialize)]
pub struct IntersectionReport {
    pub pairs: usize,
    pub samples: Vec<(usize, usize)>,
}

pub fn self_intersections(mesh: &TaggedMesh, max_samples: usize) -> IntersectionReport {
    let nf = mesh.faces.len();
    let (lo, hi) = mesh.bounding_box();
    let diag = (hi - lo).norm().max(1e-12);
    let cell = diag / (nf as f64).cbrt().max(1.0) * 1.5;
    let key_of = |v: Vec3| -> (i64, i64, i64) {
        (
            ((v.c0 - lo.c0) / cell).floor() as i64,
            ((v.c1 - lo.c1) / cell).floor() as i64,
            ((v.c2 - lo.c2) / cell).floor() as i64,
        )
    };
    let mut buckets: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    let mut face_cells: Vec<((i64, i64, i64), (i64, i64, i64))> = Vec::with_capacity(nf);
    for (fi, f) in mesh.faces.iter().enumerate() {
        let vs = [
            mesh.vertices[f[0] as usize],
            mesh.vertices[f[1] as usize],
            mesh.vertices[f[2] as usize],
        ];
        let mut klo = key_of(vs[0]);
        let mut khi = klo;
        for v in &vs[1..] {
            let k = key_of(*v);
            klo = (klo.0.min(k.0), klo.1.min(k.1), klo.2.min(k.2));
            khi = (khi.0.max(k.0), khi.1.max(k.1), khi.2.max(k.2));
        }
        face_cells.push((klo, khi));
        for x in klo.0..=khi.0 {
            for y in klo.1..=khi.1 {
                for z in klo.2..=khi.2 {
                    buckets.entry((x, y, z)).or_default().push(fi);
                }
            }
        }
    }
    let mut pairs = 0usize;
    let mut samples = Vec::new();
    let mut tested: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    for bucket in buckets.values() {
        for (ai, &fa) in bucket.iter().enumerate() {
            for &fb in &bucket[ai + 1..] {
                let pair = (fa.min(fb), fa.max(fb));
                if !tested.insert(pair) {
                    continue;
                }
                let (f, g) = (mesh.faces[pair.0], mesh.faces[pair.1]);
                if f.iter().any(|i| g.contains(i)) {
                    continue; // adjacent
                }
                let t0 = [
                    mesh.vertices[f[0] as usize],
                    mesh.vertices[f[1] as usize],
                    mesh.vertices[f[2] as usize],
                ];
                let t1 = [
                    mesh.vertices[g[0] as usize],
                    mesh.vertices[g[1] as usize],
                    mesh.vertices[g[2] as usize],
                ];
                if triangles_intersect(&t0, &t1, 1e-12 * diag) {
                    pairs += 1;
                    if samples.len() < max_samples {
                        samples.push(pair);
                    }
                }
            }
        }
    }
    IntersectionReport { pairs, samples }
}

/// Segment-triangle based triangle-triangle intersection test.
fn triangles_intersect(t0: &[Vec3; 3], t1: &[Vec3; 3], eps: f64) -> bool {
    let edge_hits = |tri: &[Vec3; 3], other: &[Vec3; 3]| -> bool {
        for k in 0..3 {
            let p = other[k];
            let q = other[(k + 1) % 3];
            if segment_hits_triangle(p, q, tri, eps) {
                return true;
            }
        }
        false
    };
    edge_hits(t0, t1) || edge_hits(t1, t0)
}

fn segment_hits_triangle(p: Vec3, q: Vec3, tri: &[Vec3; 3], eps: f64) -> bool {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let d = q - p;
    let h = d.cross(e2);
    let det = e1.euclid_dot(h);
    if det.abs() < eps {
        return false; // parallel or coplanar; treated as non-crossing
    }
    let inv = 1.0 / det;
    let s = p - tri[0];
    let u = s.euclid_dot(h) * inv;
    if !(eps..=1.0 - eps).contains(&u) {
        return false;
    }
    let qv = s.cross(e1);
    let v = d.euclid_dot(qv) * inv;
    if v < eps || u + v > 1.0 - eps {
        return false;
    }
    let t = e2.euclid_dot(qv) * inv;
    (eps..=1.0 - eps).contains(&t)
}

fn fmt_f64(x: f64) -> String {
    // shortest round-trip decimal; normalise the zero sign for stable output
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x}")
    }
}

/// ASCII OBJ with group names `<causal>_<patch>_copy<k>` and material names
/// per causal class. Deterministic byte output for identical meshes.
pub fn export_obj<W: Write>(mesh: &TaggedMesh, out: &mut W) -> Result<(), MeshError> {
    writeln!(out, "# zmc surface mesh")?;
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", fmt_f64(v.c0), fmt_f64(v.c1), fmt_f64(v.c2))?;
    }
    let mut last_tag: Option<FaceTag> = None;
    for (f, t) in mesh.faces.iter().zip(&mesh.tags) {
        if last_tag != Some(*t) {
            writeln!(out, "g {}_{}_copy{}", causal_name(t.causal), t.patch.name(), t.copy)?;
            writeln!(out, "usemtl causal_{}", causal_name(t.causal))?;
            last_tag = Some(*t);
        }
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    Ok(())
}

pub fn import_obj<R: BufRead>(input: R) -> Result<TaggedMesh, MeshError> {
    let mut mesh = TaggedMesh::default();
    let mut tag = FaceTag { causal: CausalClass::Spacelike, patch: PatchId::Graph, copy: 0 };
    for line in input.lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut read = || -> Result<f64, MeshError> {
                    it.next()
                        .ok_or_else(|| MeshError::Parse("short v line".into()))?
                        .parse::<f64>()
                        .map_err(|e| MeshError::Parse(e.to_string()))
                };
                let (a, b, c) = (read()?, read()?, read()?);
                mesh.vertices.push(Vec3::new(a, b, c));
            }
            Some("f") => {
                let mut read = || -> Result<u32, MeshError> {
                    let tok = it.next().ok_or_else(|| MeshError::Parse("short f line".into()))?;
                    let first = tok.split('/').next().unwrap_or(tok);
                    first
                        .parse::<u32>()
                        .map(|i| i - 1)
                        .map_err(|e| MeshError::Parse(e.to_string()))
                };
                let f = [read()?, read()?, read()?];
                mesh.push_face(f, tag);
            }
            Some("g") => {
                if let Some(name) = it.next() {
                    let mut parts = name.split('_');
                    let causal = parts.next().unwrap_or("");
                    let patch = parts.next().unwrap_or("");
                    let copy = parts
                        .next()
                        .and_then(|c| c.strip_prefix("copy"))
                        .and_then(|c| c.parse::<u32>().ok())
                        .unwrap_or(0);
                    tag = FaceTag {
                        causal: match causal {
                            "timelike" => CausalClass::Timelike,
                            "lightlike" => CausalClass::Lightlike,
                            _ => CausalClass::Spacelike,
                        },
                        patch: match patch {
                            "max" => PatchId::Max,
                            "min" => PatchId::Min,
                            "maxhat" => PatchId::MaxHat,
                            _ => PatchId::Graph,
                        },
                        copy,
                    };
                }
            }
            _ => {}
        }
    }
    Ok(mesh)
}

/// Binary little-endian PLY with per-face causal/patch/copy properties.
pub fn export_ply<W: Write>(mesh: &TaggedMesh, out: &mut W) -> Result<(), MeshError> {
    write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nproperty char causal\nproperty char patch\nproperty int copy\nend_header\n",
        mesh.vertices.len(),
        mesh.faces.len()
    )?;
    for v in &mesh.vertices {
        for x in v.as_array() {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    for (f, t) in mesh.faces.iter().zip(&mesh.tags) {
        out.write_all(&[3u8])?;
        for &i in f {
            out.write_all(&(i as i32).to_le_bytes())?;
        }
        out.write_all(&[causal_code(t.causal) as u8, t.patch.code() as u8])?;
        out.write_all(&(t.copy as i32).to_le_bytes())?;
    }
    Ok(())
}

pub fn import_ply<R: Read>(mut input: R) -> Result<TaggedMesh, MeshError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let header_end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .ok_or_else(|| MeshError::Parse("missing end_header".into()))?
        + 11;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|e| MeshError::Parse(e.to_string()))?;
    let mut n_vertex = 0usize;
    let mut n_face = 0usize;
    for line in header.lines() {
        if let Some(rest) = line.strip_prefix("element vertex ") {
            n_vertex = rest.trim().parse().map_err(|_| MeshError::Parse("bad vertex count".into()))?;
        }
        if let Some(rest) = line.strip_prefix("element face ") {
            n_face = rest.trim().parse().map_err(|_| MeshError::Parse("bad face count".into()))?;
        }
    }
    let mut mesh = TaggedMesh::default();
    let mut off = header_end;
    let take = |off: &mut usize, n: usize| -> Result<&[u8], MeshError> {
        if *off + n > bytes.len() {
            return Err(MeshError::Parse("truncated ply payload".into()));
        }
        let s = &bytes[*off..*off + n];
        *off += n;
        Ok(s)
    };
    for _ in 0..n_vertex {
        let mut c = [0.0f64; 3];
        for x in &mut c {
            *x = f64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap());
        }
        mesh.vertices.push(Vec3::new(c[0], c[1], c[2]));
    }
    for _ in 0..n_face {
        let cnt = take(&mut off, 1)?[0];
        if cnt != 3 {
            return Err(MeshError::Parse(format!("non-triangle face of {cnt} vertices")));
        }
        let mut f = [0u32; 3];
        for i in &mut f {
            *i = i32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap()) as u32;
        }
        let causal = causal_from_code(take(&mut off, 1)?[0] as i8)
            .ok_or_else(|| MeshError::Parse("bad causal code".into()))?;
        let patch = PatchId::from_code(take(&mut off, 1)?[0] as i8)
            .ok_or_else(|| MeshError::Parse("bad patch code".into()))?;
        let copy = i32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap()) as u32;
        mesh.push_face(f, FaceTag { causal, patch, copy });
    }
    Ok(mesh)
}

/// Disk or sector coordinate-patch mesh for the plane-domain and Euclidean
/// families; a preview surface rather than a fundamental domain.
pub fn coordinate_patch_mesh(
    spec: &FamilySpec,
    n_r: usize,
    n_th: usize,
) -> Result<TaggedMesh, MeshError> {
    let data = &spec.data;
    let (r_lo, r_hi, th_lo, th_hi) = match spec.family {
        Family::KarcherTower { .. } | Family::KarcherMaxface { .. } => {
            (0.02, 0.88, 0.0, 2.0 * std::f64::consts::PI)
        }
        _ => (0.05, 0.95, 0.02, std::f64::consts::FRAC_PI_3 - 0.02),
    };
    let mut mesh = TaggedMesh::default();
    let values: Vec<Vec<Vec3>> = (0..=n_r)
        .map(|i| -> Result<Vec<Vec3>, MeshError> {
            let r = r_lo + (r_hi - r_lo) * i as f64 / n_r as f64;
            let mut row = Vec::with_capacity(n_th + 1);
            for j in 0..=n_th {
                let th = th_lo + (th_hi - th_lo) * j as f64 / n_th as f64;
                let z = Complex64::from_polar(r, th);
                let path = approach_path(spec, z);
                row.push(data.surface_point(&path)?);
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    for row in &values {
        for v in row {
            mesh.vertices.push(*v);
        }
    }
    let idx = |i: usize, j: usize| (i * (n_th + 1) + j) as u32;
    for i in 0..n_r {
        for j in 0..n_th {
            let r_mid = r_lo + (r_hi - r_lo) * (i as f64 + 0.5) / n_r as f64;
            let causal = match data.signature {
                Signature::Euclidean => CausalClass::Spacelike,
                Signature::Lorentzian => {
                    let th = th_lo + (th_hi - th_lo) * (j as f64 + 0.5) / n_th as f64;
                    let g = data.g(Complex64::from_polar(r_mid, th)).norm();
                    if (g - 1.0).abs() < LIGHTLIKE_BAND {
                        CausalClass::Lightlike
                    } else if g < 1.0 {
                        CausalClass::Spacelike
                    } else {
                        CausalClass::Timelike
                    }
                }
            };
            let t = FaceTag { causal, patch: PatchId::Graph, copy: 0 };
            mesh.push_face([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)], t);
            mesh.push_face([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)], t);
        }
    }
    mesh.weld(WELD_TOL)?;
    Ok(mesh)
}

fn approach_path(spec: &FamilySpec, z: Complex64) -> PathSpec {
    let data = &spec.data;
    match &data.domain {
        crate::weierstrass::Domain::PuncturedPlane { .. } => {
            PathSpec::polyline(vec![data.base_z, z])
        }
        crate::weierstrass::Domain::Curve(_) => {
            // base -> same radius on a safe ray -> arc to the target angle
            let r = z.norm();
            let th = z.arg();
            let safe = 0.02_f64.min(th.abs().max(1e-3));
            let mut waypoints = vec![data.base_z, Complex64::from_polar(r, safe.copysign(th))];
            let steps = ((th.abs() / 0.09).ceil() as usize).max(1);
            let start = safe.copysign(th);
            for s in 1..=steps {
                let ang = start + (th - start) * s as f64 / steps as f64;
                waypoints.push(Complex64::from_polar(r, ang));
            }
            PathSpec::polyline(waypoints)
        }
    }
}

/// Verify that the translated vertex cloud matches the original on the
/// overlap of symmetry copies: for each basis translation, at least one
/// copy-op composed with the translation must land back in the op set, and
/// on those matched copies every vertex must find a partner within `tol`.
pub fn lattice_invariance_gap(
    assembled: &TaggedMesh,
    piece_mesh: &TaggedMesh,
    ops: &[SymmetryOp],
    basis: &[Vec3],
    tol: f64,
) -> Option<f64> {
    let mut worst: f64 = 0.0;
    // spatial hash of assembled vertices
    let q = tol.max(1e-12);
    let mut cells: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (i, v) in assembled.vertices.iter().enumerate() {
        let k = ((v.c0 / q).round() as i64, (v.c1 / q).round() as i64, (v.c2 / q).round() as i64);
        cells.entry(k).or_default().push(i);
    }
    let nearest = |p: Vec3| -> f64 {
        let k = ((p.c0 / q).round() as i64, (p.c1 / q).round() as i64, (p.c2 / q).round() as i64);
        let mut best = f64::INFINITY;
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                for dz in -1..=1i64 {
                    if let Some(list) = cells.get(&(k.0 + dx, k.1 + dy, k.2 + dz)) {
                        for &i in list {
                            best = best.min(assembled.vertices[i].dist(p));
                        }
                    }
                }
            }
        }
        best
    };
    for &t in basis {
        let mut matched_any = false;
        for op in ops {
            let shifted = SymmetryOp {
                linear: op.linear,
                translation: op.translation + t,
                kind: SymmetryKind::Composite,
            };
            let in_set = ops.iter().any(|other| {
                other.linear.sub(&shifted.linear).max_abs() < 1e-7
                    && other.translation.dist(shifted.translation) < 1e-6
            });
            if !in_set {
                continue;
            }
            matched_any = true;
            for v in &piece_mesh.vertices {
                worst = worst.max(nearest(shifted.apply(*v)));
            }
        }
        if !matched_any {
            return None;
        }
    }
    Some(worst)
}

/// Curvature residual wrapper feeding the analysis module with the mesh's
/// guard-band exclusions.
pub fn mesh_zmc_residuals(mesh: &TaggedMesh, signature: Signature) -> analysis::CurvatureStats {
    let excluded: Vec<bool> = mesh
        .tags
        .iter()
        .map(|t| t.causal == CausalClass::Lightlike)
        .collect();
    analysis::zmc_residuals(&mesh.vertices, &mesh.faces, signature, &excluded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tri_mesh(vs: &[(f64, f64, f64)], fs: &[[u32; 3]]) -> TaggedMesh {
        let mut m = TaggedMesh::default();
        for &(a, b, c) in vs {
            m.vertices.push(Vec3::new(a, b, c));
        }
        for f in fs {
            m.push_face(*f, FaceTag { causal: CausalClass::Spacelike, patch: PatchId::Graph, copy: 0 });
        }
        m
    }

    #[test]
    fn obj_roundtrip_single_triangle() {
        let mesh = tri_mesh(
            &[(0.0, 0.0, 0.0), (1.0, 0.125, 0.0), (0.0, 1.0, 0.7500001)],
            &[[0, 1, 2]],
        );
        let mut buf = Vec::new();
        export_obj(&mesh, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.matches("\nv ").count() + usize::from(text.starts_with("v ")), 3);
        assert_eq!(text.matches("\nf ").count(), 1);
        assert!(text.contains("g spacelike_graph_copy0"));
        assert!(text.contains("usemtl causal_spacelike"));
        let back = import_obj(std::io::BufReader::new(buf.as_slice())).unwrap();
        assert_eq!(back.vertices.len(), 3);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert_eq!(a, b);
        }
        assert_eq!(back.tags[0].causal, CausalClass::Spacelike);
    }

    #[test]
    fn empty_mesh_exports_are_valid() {
        let mesh = TaggedMesh::default();
        let mut obj = Vec::new();
        export_obj(&mesh, &mut obj).unwrap();
        assert!(String::from_utf8(obj).unwrap().starts_with("# zmc"));
        let mut ply = Vec::new();
        export_ply(&mesh, &mut ply).unwrap();
        let back = import_ply(ply.as_slice()).unwrap();
        assert!(back.is_empty());
    }

    #[test]
    fn ply_roundtrip_exact() {
        let mut mesh = tri_mesh(
            &[
                (0.1234567890123, -2.5, 0.0),
                (1.0, 0.333333333333333, 0.0),
                (0.0, 1.0, 1e-15),
                (3.0, 1.0, 2.0),
            ],
            &[[0, 1, 2], [1, 3, 2]],
        );
        mesh.tags[1] = FaceTag { causal: CausalClass::Timelike, patch: PatchId::Min, copy: 7 };
        let mut buf = Vec::new();
        export_ply(&mesh, &mut buf).unwrap();
        let back = import_ply(buf.as_slice()).unwrap();
        assert_eq!(back.vertices.len(), 4);
        for (a, b) in mesh.vertices.iter().zip(&back.vertices) {
            assert_eq!(a, b);
        }
        assert_eq!(back.tags[1].causal, CausalClass::Timelike);
        assert_eq!(back.tags[1].patch, PatchId::Min);
        assert_eq!(back.tags[1].copy, 7);
    }

    #[test]
    fn weld_merges_coincident_boundaries() {
        let mut mesh = tri_mesh(
            &[
                (0.0, 0.0, 0.0),
                (1.0, 0.0, 0.0),
                (0.0, 1.0, 0.0),
                // duplicate of vertex 1 within weld tolerance
                (1.0 + 1e-9, 0.0, 0.0),
                (1.0, 1.0, 0.0),
            ],
            &[[0, 1, 2], [3, 4, 2]],
        );
        mesh.weld(1e-7).unwrap();
        assert_eq!(mesh.vertices.len(), 4);
        assert_eq!(mesh.faces.len(), 2);
    }

    #[test]
    fn intersection_detects_crossing_triangles() {
        // disjoint
        let m = tri_mesh(
            &[
                (0.0, 0.0, 0.0),
                (1.0, 0.0, 0.0),
                (0.0, 1.0, 0.0),
                (5.0, 0.0, 1.0),
                (6.0, 0.0, 1.0),
                (5.0, 1.0, 1.0),
            ],
            &[[0, 1, 2], [3, 4, 5]],
        );
        assert_eq!(self_intersections(&m, 4).pairs, 0);

        // crossing pair
        let m = tri_mesh(
            &[
                (0.0, 0.0, 0.0),
                (1.0, 0.0, 0.0),
                (0.0, 1.0, 0.0),
                (0.2, 0.2, -0.5),
                (0.3, 0.2, 0.5),
                (0.2, 0.3, 0.5),
            ],
            &[[0, 1, 2], [3, 4, 5]],
        );
        assert_eq!(self_intersections(&m, 4).pairs, 1);
    }

    #[test]
    fn identity_assembly_is_a_noop_and_duplicates_drop() {
        let mesh = tri_mesh(
            &[(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0)],
            &[[0, 1, 2]],
        );
        let out = assemble(&mesh, &[SymmetryOp::identity()]).unwrap();
        assert_eq!(out.vertices.len(), 3);
        assert_eq!(out.faces.len(), 1);

        // an op followed by its inverse copy collapses to one copy
        let line = LineFit {
            point: Vec3::ZERO,
            direction: Vec3::new(0.0, 0.0, 1.0),
            residual: 0.0,
        };
        let half = SymmetryOp::line_half_turn(&line);
        let out = assemble(&mesh, &[SymmetryOp::identity(), half, half.compose(&half)]).unwrap();
        // identity and half.compose(half) coincide
        assert_eq!(out.faces.len(), 2);
    }

    #[test]
    fn fits_recover_exact_geometry() {
        let pts: Vec<Vec3> = (0..10)
            .map(|i| Vec3::new(0.0, 0.0, -1.0 + i as f64 * 0.3))
            .collect();
        let lf = fit_line(&pts);
        assert!(lf.residual < 1e-14);
        assert!(lf.direction.cross(Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-12);

        let pts: Vec<Vec3> = (0..25)
            .map(|i| {
                let s = (i % 5) as f64 * 0.2;
                let t = (i / 5) as f64 * 0.2;
                // plane with normal (0, sqrt(3)/2, -1/2): spans e0 and (0, 1, sqrt(3))
                Vec3::new(s, t, 3.0f64.sqrt() * t)
            })
            .collect();
        let pf = fit_plane(&pts);
        assert!(pf.residual < 1e-12);
        assert!(pf.timelike);
        assert!(pf.normal.c0.abs() < 1e-12);
        assert_abs_diff_eq!((pf.normal.c1 / pf.normal.c2).abs(), 3.0f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn half_turn_about_vertical_line_is_diag() {
        let line = LineFit {
            point: Vec3::ZERO,
            direction: Vec3::new(0.0, 0.0, 1.0),
            residual: 0.0,
        };
        let op = SymmetryOp::line_half_turn(&line);
        assert!(op.linear.sub(&Mat3::diag(-1.0, -1.0, 1.0)).max_abs() < 1e-15);
        assert!(op.translation.norm() < 1e-15);
        assert!(op.linear.minkowski_isometry_defect() < 1e-14);
    }

    #[test]
    fn reflection_preserves_minkowski_metric() {
        let plane = PlaneFit {
            point: Vec3::new(0.0, 0.3, -0.4),
            normal: Vec3::new(0.0, 3.0f64.sqrt() / 2.0, -0.5),
            residual: 0.0,
            timelike: true,
        };
        let op = SymmetryOp::planar_reflection(&plane);
        assert!(op.linear.minkowski_isometry_defect() < 1e-14);
        assert!((op.linear.det() + 1.0).abs() < 1e-13);
        // involution
        let sq = op.compose(&op);
        assert!(sq.is_identity(1e-12));
        // fixes points of the plane
        let in_plane = plane.point + Vec3::new(1.0, 0.0, 0.0);
        assert!(op.apply(in_plane).dist(in_plane) < 1e-13);
    }

    #[test]
    fn fundamental_piece_weld_boundary_and_tags() {
        let piece = sample_fundamental_piece(0.5, 16, 16, 16, 16).unwrap();
        assert!(piece.weld_gap <= 1e-8, "weld gap {:.3e}", piece.weld_gap);

        // two straight lines, two planar curves in timelike planes
        for lf in &piece.line_fits {
            assert!(lf.residual <= 1e-6, "line residual {:.3e}", lf.residual);
        }
        for pf in &piece.plane_fits {
            assert!(pf.residual <= 1e-6, "plane residual {:.3e}", pf.residual);
            assert!(pf.timelike);
        }
        let d1 = piece.line_fits[0].direction;
        assert!(d1.cross(Vec3::new(0.0, 0.0, 1.0)).norm() < 1e-8);
        let d2 = piece.line_fits[1].direction;
        assert!(d2.c0.abs() < 1e-8);
        assert!((d2.c1 + 3.0f64.sqrt() * d2.c2).abs() < 1e-8);

        // causal tags by construction, cross-checked from geometry
        for t in &piece.mesh.tags {
            match t.patch {
                PatchId::Max | PatchId::MaxHat => assert_ne!(t.causal, CausalClass::Timelike),
                PatchId::Min => assert_ne!(t.causal, CausalClass::Spacelike),
                PatchId::Graph => {}
            }
        }
        let agreement = piece.mesh.causal_tag_agreement(Signature::Lorentzian);
        assert!(agreement >= 0.99, "causal agreement {agreement}");
    }

    #[test]
    fn symmetry_group_assembly_and_lattice() {
        let piece = sample_fundamental_piece(0.5, 12, 12, 12, 12).unwrap();
        let gens = boundary_generators(&piece);
        for g in &gens {
            assert!(g.linear.minkowski_isometry_defect() < 1e-9);
        }
        assert_eq!(symmetry_group(&gens, 0).len(), 1);
        assert_eq!(symmetry_group(&gens, 1).len(), 5);

        // the two planar reflections compose to a third-turn about a
        // time-axis-parallel line
        let rot = gens[1].compose(&gens[0]);
        assert!(rot.linear.mul_vec(Vec3::new(1.0, 0.0, 0.0)).dist(Vec3::new(1.0, 0.0, 0.0)) < 1e-8);
        let cube = rot.compose(&rot).compose(&rot);
        assert!(cube.is_identity(1e-8), "rotation order 3 violated");

        // translations appear at depth 4 and span a rank-3 lattice
        let ops5 = symmetry_group(&gens, 5);
        let translations = group_translations(&ops5, 1e-6);
        assert!(translations.len() >= 3);
        let lattice = detect_lattice(&translations, 1e-6).unwrap();
        assert_eq!(lattice.rank, 3);

        // the double fold re-extension is itself a lattice translation
        let a_mat = fold_reflection();
        let c_vec = fold_translation(&piece.null_curve);
        let t_sigma = c_vec - a_mat.mul_vec(c_vec);
        assert!(
            crate::weierstrass::lattice_distance(&lattice, t_sigma) < 1e-6,
            "sigma-type translation escapes the lattice"
        );

        // depth-2 assembly is invariant under the lattice on copy overlaps
        let ops2 = symmetry_group(&gens, 2);
        assert_eq!(ops2.len(), 15);
        let assembled = assemble(&piece.mesh, &ops2).unwrap();
        assert!(assembled.vertices.len() > 10 * piece.mesh.vertices.len() / 2);
        let gap = lattice_invariance_gap(&assembled, &piece.mesh, &ops2, &lattice.basis, 1e-6)
            .expect("every basis translation should map some copy into the set");
        assert!(gap <= 1e-6, "invariance gap {gap:.3e}");

        // every face of the assembly is the isometric image of a
        // fundamental-piece face: spot-check one face per copy
        for (fi, tag) in assembled.tags.iter().enumerate().step_by(997) {
            let op = ops2[tag.copy as usize];
            let f = assembled.faces[fi];
            // candidate source face: same index modulo the per-copy block
            let src = piece.mesh.faces[fi % piece.mesh.faces.len()];
            let mut matched = false;
            // welding reorders vertices, so compare as point sets
            let img: Vec<Vec3> = src
                .iter()
                .map(|&v| op.apply(piece.mesh.vertices[v as usize]))
                .collect();
            let tgt: Vec<Vec3> = f.iter().map(|&v| assembled.vertices[v as usize]).collect();
            let mut used = [false; 3];
            let mut ok = true;
            for t in &tgt {
                let mut hit = false;
                for (k, i) in img.iter().enumerate() {
                    if !used[k] && i.dist(*t) < 1e-9 {
                        used[k] = true;
                        hit = true;
                        break;
                    }
                }
                ok &= hit;
            }
            matched |= ok;
            assert!(matched, "face {fi} is not the op image of its source");
        }
    }

    #[test]
    fn scherk_mesh_residual_quarters_under_refinement() {
        // fixed compact spacelike region keeps the constant of the h^2 term
        // bounded; the band near the lightlike locus is excluded
        let run = |n: usize| {
            let m = scherk_graph_mesh(1.0, n);
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
            analysis::zmc_residuals(&m.vertices, &m.faces, Signature::Lorentzian, &excluded)
        };
        let rc = run(96);
        let rf = run(192);
        assert!(rc.included > 0 && rf.included > 0);
        let order = (rc.max_residual / rf.max_residual).log2();
        assert!(
            order >= 1.8,
            "order {order:.2} (coarse {:.3e}, fine {:.3e})",
            rc.max_residual,
            rf.max_residual
        );
    }
}
