//! Particle discretizations of boxes, rods and closed triangle meshes.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec::{self, Execution};
use crate::math::{Mat3, Vec3};

type V3 = Vec3<f64>;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("failed to read mesh {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("OBJ parse error on line {line}: {msg}")]
    Obj { line: usize, msg: String },
    #[error("triangle {triangle} references vertex {index} but the mesh has {count} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        count: usize,
    },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("no grid sample of pitch {pitch} lies inside the mesh")]
    EmptyPacking { pitch: f64 },
    #[error("invalid packing parameter: {0}")]
    InvalidParameter(String),
}

/// Closed triangle mesh in metres.
#[derive(Debug, Clone)]
pub struct TriMesh {
    pub vertices: Vec<V3>,
    pub triangles: Vec<[usize; 3]>,
}

const BUNNY_OBJ: &str = include_str!("../assets/bunny.obj");

impl TriMesh {
    pub fn new(vertices: Vec<V3>, triangles: Vec<[usize; 3]>) -> Result<Self, GeometryError> {
        let mesh = Self {
            vertices,
            triangles,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        let count = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&index) = tri.iter().find(|&&i| i >= count) {
                return Err(GeometryError::IndexOutOfRange {
                    triangle: t,
                    index,
                    count,
                });
            }
        }
        Ok(())
    }

    /// Parses `v` and `f` records; polygon faces are fan-triangulated and
    /// `v/vt/vn` index forms and negative (relative) indices are accepted.
    pub fn parse_obj(text: &str) -> Result<Self, GeometryError> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some("v") => {
                    let coords: Vec<f64> = parts
                        .take(3)
                        .map(|s| s.parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|e| GeometryError::Obj {
                            line: lineno + 1,
                            msg: e.to_string(),
                        })?;
                    if coords.len() != 3 {
                        return Err(GeometryError::Obj {
                            line: lineno + 1,
                            msg: "vertex needs three coordinates".into(),
                        });
                    }
                    vertices.push(V3::new(coords[0], coords[1], coords[2]));
                }
                Some("f") => {
                    let mut idx = Vec::new();
                    for tok in parts {
                        let first = tok.split('/').next().unwrap_or("");
                        let i: i64 = first.parse().map_err(|_| GeometryError::Obj {
                            line: lineno + 1,
                            msg: format!("bad face index `{tok}`"),
                        })?;
                        let resolved = if i > 0 {
                            i - 1
                        } else if i < 0 {
                            vertices.len() as i64 + i
                        } else {
                            -1
                        };
                        if resolved < 0 {
                            return Err(GeometryError::Obj {
                                line: lineno + 1,
                                msg: format!("face index `{tok}` out of range"),
                            });
                        }
                        idx.push(resolved as usize);
                    }
                    if idx.len() < 3 {
                        return Err(GeometryError::Obj {
                            line: lineno + 1,
                            msg: "face needs at least three vertices".into(),
                        });
                    }
                    for k in 1..idx.len() - 1 {
                        triangles.push([idx[0], idx[k], idx[k + 1]]);
                    }
                }
                _ => {}
            }
        }
        Self::new(vertices, triangles)
    }

    pub fn read_obj(path: &Path) -> Result<Self, GeometryError> {
        let text = std::fs::read_to_string(path).map_err(|source| GeometryError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_obj(&text)
    }

    /// The bundled Stanford Bunny (z-up, metres).
    pub fn stanford_bunny() -> Self {
        Self::parse_obj(BUNNY_OBJ).expect("bundled bunny mesh is valid")
    }

    /// Axis-aligned box mesh with outward-facing triangles.
    pub fn cuboid(min: V3, max: V3) -> Self {
        let v = |x: bool, y: bool, z: bool| {
            V3::new(
                if x { max.x } else { min.x },
                if y { max.y } else { min.y },
                if z { max.z } else { min.z },
            )
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        let triangles = vec![
            [0, 2, 1],
            [0, 3, 2],
            [4, 5, 6],
            [4, 6, 7],
            [0, 1, 5],
            [0, 5, 4],
            [1, 2, 6],
            [1, 6, 5],
            [2, 3, 7],
            [2, 7, 6],
            [3, 0, 4],
            [3, 4, 7],
        ];
        Self {
            vertices,
            triangles,
        }
    }

    pub fn unit_cube() -> Self {
        Self::cuboid(V3::zero(), V3::splat(1.0))
    }

    pub fn bounds(&self) -> (V3, V3) {
        let mut lo = V3::splat(f64::INFINITY);
        let mut hi = V3::splat(f64::NEG_INFINITY);
        for &p in &self.vertices {
            lo = lo.component_min(p);
            hi = hi.component_max(p);
        }
        (lo, hi)
    }

    /// SHA-256 of the vertex and index data, hex-encoded.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for v in &self.vertices {
            for c in v.to_array() {
                h.update(c.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for &i in t {
                h.update((i as u64).to_le_bytes());
            }
        }
        h.finalize().iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Mass properties of the enclosed solid at uniform density, by signed
    /// tetrahedra against the origin. Returns `(volume, centroid, inertia
    /// about the centroid per unit mass)`.
    pub fn solid_properties(&self) -> (f64, V3, Mat3<f64>) {
        let mut volume = 0.0;
        let mut first = V3::zero();
        // second moments Σ ∫ x_i x_j dV
        let mut second = Mat3::<f64>::zero();
        for t in &self.triangles {
            let a = self.vertices[t[0]];
            let b = self.vertices[t[1]];
            let c = self.vertices[t[2]];
            let v = a.dot(b.cross(c)) / 6.0;
            volume += v;
            first += (a + b + c) * (v / 4.0);
            // ∫ x xᵀ over tetra (0,a,b,c) = v/20 (Σ p pᵀ + (Σp)(Σp)ᵀ)
            let s = a + b + c;
            let m = Mat3::outer(a, a) + Mat3::outer(b, b) + Mat3::outer(c, c) + Mat3::outer(s, s);
            second += m * (v / 20.0);
        }
        let centroid = first / volume;
        let cov = second * (1.0 / volume) - Mat3::outer(centroid, centroid);
        let inertia = Mat3::identity() * cov.trace() - cov;
        (volume, centroid, inertia)
    }
}

/// What a packing was generated from.
#[derive(Debug, Clone, PartialEq)]
pub enum PackingSource {
    Box { half_extents: V3, n_per_axis: usize },
    Rod { length: f64, radius: f64 },
    Mesh { hash: String, bounds: (V3, V3) },
}

/// Equal-radius, non-overlapping spheres approximating a solid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePacking {
    pub centers: Vec<V3>,
    pub radius: f64,
    pub source: PackingSource,
}

impl SpherePacking {
    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centroid(&self) -> V3 {
        self.centers.iter().copied().sum::<V3>() / self.centers.len() as f64
    }

    /// Translates the centers so their centroid sits at the origin.
    pub fn centered(mut self) -> Self {
        let c = self.centroid();
        for p in &mut self.centers {
            *p -= c;
        }
        self
    }

    /// Smallest pairwise center distance (O(n²), diagnostics only).
    pub fn min_pair_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.centers.len() {
            for j in i + 1..self.centers.len() {
                best = best.min((self.centers[i] - self.centers[j]).norm());
            }
        }
        best
    }

    /// Point-mass inertia about the centroid for total mass `mass`.
    pub fn point_inertia(&self, mass: f64) -> Mat3<f64> {
        let c = self.centroid();
        let m = mass / self.centers.len() as f64;
        let mut inertia = Mat3::zero();
        for &p in &self.centers {
            let r = p - c;
            inertia += (Mat3::identity() * r.norm_sq() - Mat3::outer(r, r)) * m;
        }
        inertia
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "cx,cy,cz,radius")?;
        for c in &self.centers {
            writeln!(
                out,
                "{},{},{},{}",
                crate::fmt_sig(c.x),
                crate::fmt_sig(c.y),
                crate::fmt_sig(c.z),
                crate::fmt_sig(self.radius)
            )?;
        }
        Ok(())
    }
}

/// Uniform grid of `n³` spheres filling a box centred at the origin.
pub fn pack_box(half_extents: V3, n_per_axis: usize) -> Result<SpherePacking, GeometryError> {
    if n_per_axis == 0 {
        return Err(GeometryError::InvalidParameter(
            "n_per_axis must be at least 1".into(),
        ));
    }
    if !(half_extents.min_element() > 0.0) {
        return Err(GeometryError::InvalidParameter(
            "box half extents must be positive".into(),
        ));
    }
    let n = n_per_axis;
    let spacing = half_extents * (2.0 / n as f64);
    let radius = spacing.min_element() / 2.0;
    let coord = |h: f64, s: f64, i: usize| -h + s * (i as f64 + 0.5);
    let mut centers = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                centers.push(V3::new(
                    coord(half_extents.x, spacing.x, i),
                    coord(half_extents.y, spacing.y, j),
                    coord(half_extents.z, spacing.z, k),
                ));
            }
        }
    }
    Ok(SpherePacking {
        centers,
        radius,
        source: PackingSource::Box {
            half_extents,
            n_per_axis,
        },
    })
}

/// Single-sphere-wide chain of touching spheres along the x axis, centred on
/// the origin. A fractional remainder of the length is dropped.
pub fn pack_rod(length: f64, radius: f64) -> Result<SpherePacking, GeometryError> {
    if !(radius > 0.0) || !(length >= 2.0 * radius * (1.0 - 1e-12)) {
        return Err(GeometryError::InvalidParameter(format!(
            "rod length {length} must be at least one diameter (radius {radius})"
        )));
    }
    let count = ((length / (2.0 * radius)) + 1e-9).floor().max(1.0) as usize;
    let mid = (count as f64 - 1.0) / 2.0;
    let centers = (0..count)
        .map(|k| V3::new((k as f64 - mid) * 2.0 * radius, 0.0, 0.0))
        .collect();
    Ok(SpherePacking {
        centers,
        radius,
        source: PackingSource::Rod { length, radius },
    })
}

const MAX_RAY_ATTEMPTS: usize = 8;
const RAY_SEED: u64 = 0x5eed_b0b5;
const EDGE_EPS: f64 = 1e-9;

/// Precomputed triangle data for repeated inside tests.
#[derive(Debug, Clone)]
pub struct MeshQuery {
    origin: Vec<V3>,
    e1: Vec<V3>,
    e2: Vec<V3>,
    directions: [V3; MAX_RAY_ATTEMPTS],
}

enum Crossings {
    Count(usize),
    Ambiguous,
}

impl MeshQuery {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut origin = Vec::with_capacity(mesh.triangles.len());
        let mut e1 = Vec::with_capacity(mesh.triangles.len());
        let mut e2 = Vec::with_capacity(mesh.triangles.len());
        for t in &mesh.triangles {
            let a = mesh.vertices[t[0]];
            origin.push(a);
            e1.push(mesh.vertices[t[1]] - a);
            e2.push(mesh.vertices[t[2]] - a);
        }
        // fixed-seed jittered directions so results are reproducible
        let mut rng = ChaCha8Rng::seed_from_u64(RAY_SEED);
        let directions = std::array::from_fn(|_| {
            V3::new(1.0, rng.gen_range(-0.35..0.35), rng.gen_range(-0.35..0.35))
                .normalized()
                .expect("non-zero direction")
        });
        Self {
            origin,
            e1,
            e2,
            directions,
        }
    }

    fn crossings(&self, p: V3, dir: V3) -> Crossings {
        let mut count = 0;
        for k in 0..self.origin.len() {
            let e1 = self.e1[k];
            let e2 = self.e2[k];
            let h = dir.cross(e2);
            let det = e1.dot(h);
            let scale = e1.norm() * e2.norm();
            if det.abs() <= 1e-14 * scale {
                // ray parallel to the plane; only ambiguous if coplanar
                let n = e1.cross(e2);
                if (p - self.origin[k]).dot(n).abs() <= 1e-14 * scale {
                    let s = p - self.origin[k];
                    let u = s.dot(e1) / e1.norm_sq();
                    if (-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
                        return Crossings::Ambiguous;
                    }
                }
                continue;
            }
            let inv = 1.0 / det;
            let s = p - self.origin[k];
            let u = s.dot(h) * inv;
            if !(-EDGE_EPS..=1.0 + EDGE_EPS).contains(&u) {
                continue;
            }
            let q = s.cross(e1);
            let v = dir.dot(q) * inv;
            if v < -EDGE_EPS || u + v > 1.0 + EDGE_EPS {
                continue;
            }
            let t = e2.dot(q) * inv;
            let len = scale.sqrt();
            if t.abs() <= EDGE_EPS * len {
                return Crossings::Ambiguous;
            }
            if t < 0.0 {
                continue;
            }
            if u.abs() <= EDGE_EPS || v.abs() <= EDGE_EPS || (1.0 - u - v).abs() <= EDGE_EPS {
                return Crossings::Ambiguous;
            }
            count += 1;
        }
        Crossings::Count(count)
    }

    /// Parity test along the first unambiguous jittered ray; points whose
    /// rays all graze an edge, vertex or the surface itself count as outside.
    pub fn contains(&self, p: V3) -> bool {
        for dir in &self.directions {
            if let Crossings::Count(c) = self.crossings(p, *dir) {
                return c % 2 == 1;
            }
        }
        false
    }

    /// Whether the first two independent ray directions agree on the parity
    /// of `p`. Used to report how watertight a mesh behaves.
    pub fn parity_consistent(&self, p: V3) -> bool {
        let mut answers = self
            .directions
            .iter()
            .filter_map(|d| match self.crossings(p, *d) {
                Crossings::Count(c) => Some(c % 2 == 1),
                Crossings::Ambiguous => None,
            });
        match (answers.next(), answers.next()) {
            (Some(a), Some(b)) => a == b,
            _ => false,
        }
    }
}

pub fn point_in_mesh(p: V3, mesh: &TriMesh) -> bool {
    MeshQuery::new(mesh).contains(p)
}

fn grid_axis(lo: f64, hi: f64, pitch: f64) -> Vec<f64> {
    let extent = hi - lo;
    let n = ((extent / pitch) + 1e-9).floor() as usize;
    let offset = lo + (extent - n as f64 * pitch) / 2.0 + pitch / 2.0;
    (0..n).map(|i| offset + pitch * i as f64).collect()
}

/// Candidate centers on the uniform grid of pitch `2·radius` centred in the
/// mesh bounding box.
pub fn grid_candidates(mesh: &TriMesh, radius: f64) -> Vec<V3> {
    let (lo, hi) = mesh.bounds();
    let pitch = 2.0 * radius;
    let xs = grid_axis(lo.x, hi.x, pitch);
    let ys = grid_axis(lo.y, hi.y, pitch);
    let zs = grid_axis(lo.z, hi.z, pitch);
    let mut out = Vec::with_capacity(xs.len() * ys.len() * zs.len());
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                out.push(V3::new(x, y, z));
            }
        }
    }
    out
}

/// Keeps the grid samples (pitch `2·radius`) whose centers lie inside the mesh.
pub fn pack_mesh(mesh: &TriMesh, radius: f64) -> Result<SpherePacking, GeometryError> {
    pack_mesh_with(mesh, radius, Execution::default())
}

pub fn pack_mesh_with(
    mesh: &TriMesh,
    radius: f64,
    execution: Execution,
) -> Result<SpherePacking, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::InvalidParameter(
            "packing radius must be positive".into(),
        ));
    }
    mesh.validate()?;
    let query = MeshQuery::new(mesh);
    let candidates = grid_candidates(mesh, radius);
    let inside = exec::map_chunked(execution, &candidates, |&p| query.contains(p));
    let centers: Vec<V3> = candidates
        .iter()
        .zip(inside)
        .filter_map(|(&p, keep)| keep.then_some(p))
        .collect();
    if centers.is_empty() {
        return Err(GeometryError::EmptyPacking {
            pitch: 2.0 * radius,
        });
    }
    Ok(SpherePacking {
        centers,
        radius,
        source: PackingSource::Mesh {
            hash: mesh.content_hash(),
            bounds: mesh.bounds(),
        },
    })
}

/// Analytic inertia of a solid box (half extents `h`) about its center.
pub fn solid_box_inertia(mass: f64, h: V3) -> Mat3<f64> {
    let (a, b, c) = (2.0 * h.x, 2.0 * h.y, 2.0 * h.z);
    Mat3::diag(
        mass * (b * b + c * c) / 12.0,
        mass * (a * a + c * c) / 12.0,
        mass * (a * a + b * b) / 12.0,
    )
}

/// Relative Frobenius error of `approx` against `reference`.
pub fn inertia_relative_error(approx: &Mat3<f64>, reference: &Mat3<f64>) -> f64 {
    (*approx - *reference).frobenius() / reference.frobenius()
}
