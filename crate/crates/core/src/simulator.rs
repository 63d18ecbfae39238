//! Synthetic scenes: procedural textures, a ray-cast renderer, mesh
//! perturbation, candidate rings, and the closed planning loop.
//!
//! Every scene is split into two meshes. The *ground truth* mesh, optionally
//! dented by a [`Perturbation`], is what the renderer images; the unmodified
//! *base* mesh is what the planner sees. Where the two disagree, rendered
//! views are mutually inconsistent on the base mesh's facets, which is the
//! signal the photo-consistency index measures.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::{Bvh, Ray};
use crate::camera::{look_at, Camera, CameraError, Intrinsics};
use crate::config::{ConfigError, RunConfig};
use crate::energy::{select_best, EnergyError, EnergyModel};
use crate::image::GrayImage;
use crate::math::Vec3;
use crate::mesh::{MeshError, TriangleMesh};
use crate::mesh_io::{load_mesh, MeshIoError};
use crate::pri::{FacetPri, IncrementalPri, PriError, View, ViewSet};

#[derive(Debug, Error)]
pub enum SimulatorError {
    #[error("failed to read scene file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid scene: {message}")]
    InvalidScene { message: String },
    #[error("{message}")]
    InvalidRun { message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    MeshIo(#[from] MeshIoError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Pri(#[from] PriError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
}

fn scene_error(message: impl Into<String>) -> SimulatorError {
    SimulatorError::InvalidScene { message: message.into() }
}

/// Where the scene's geometry comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeshSource {
    /// Load from an OBJ or PLY file.
    File { path: PathBuf },
    /// Unit sphere built by subdividing an icosahedron; `subdivisions`
    /// quadruples the face count each level (level 3 has 1280 faces).
    Icosphere { subdivisions: u32 },
    /// Square grid of `cells`×`cells` quads in the z=0 plane, facing +z,
    /// spanning ±`half_extent` in x and y.
    Plane { half_extent: f64, cells: u32 },
    /// Axis-aligned box centered at the origin with the given half extents.
    Box { half_extents: [f64; 3] },
}

/// Procedural surface albedo, evaluated at 3D hit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Texture {
    /// Alternating bright/dark cubes of side `scale` (values 0.8 and 0.2).
    Checker { scale: f64 },
    /// Smooth value noise in [0, 1] with lattice spacing `scale`.
    ValueNoise { scale: f64, seed: u64 },
}

impl Texture {
    pub fn sample(&self, p: Vec3) -> f64 {
        match *self {
            Texture::Checker { scale } => checker(scale, p),
            Texture::ValueNoise { scale, seed } => value_noise(scale, seed, p),
        }
    }
}

/// One directional light plus a uniform ambient floor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Light {
    pub direction: [f64; 3],
    /// Fraction of the albedo that survives in shadow, in [0, 1].
    pub ambient: f64,
}

impl Light {
    pub fn unit_direction(&self) -> Option<Vec3> {
        Vec3::from_array(self.direction).normalized()
    }
}

/// Radial dent or bump: every vertex within `radius` of `center` moves along
/// its area-weighted normal by `amplitude` scaled by a cosine falloff that
/// reaches zero at the boundary. Negative amplitude dents inward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub center: [f64; 3],
    pub radius: f64,
    pub amplitude: f64,
}

/// Camera ring shared by the initial views and the candidate pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ring {
    pub radius: f64,
    pub count: usize,
    pub elevation_deg: f64,
}

/// Shared intrinsics for every generated camera. `cx`/`cy` default to the
/// image center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSpec {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
}

/// Complete description of a synthetic scene, loadable from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub mesh: MeshSource,
    pub texture: Texture,
    pub light: Light,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    pub ring: Ring,
    pub image: ImageSpec,
}

/// Facet of the subdivision-3 icosphere whose barycenter sits at azimuth 90°,
/// elevation 54°; the demo dent is centered on it.
const DEMO_CAP_FACE: u32 = 80;

impl SceneSpec {
    /// Built-in demo: a noise-textured unit icosphere with one dented cap,
    /// imaged by a 48-camera equatorial ring. `seed` drives the texture.
    pub fn demo(seed: u64) -> SceneSpec {
        let sphere = icosphere(3).expect("builtin icosphere is valid");
        let tilt = 15f64.to_radians();
        SceneSpec {
            mesh: MeshSource::Icosphere { subdivisions: 3 },
            texture: Texture::ValueNoise { scale: 0.15, seed },
            light: Light { direction: [0.0, tilt.cos(), tilt.sin()], ambient: 0.15 },
            perturbation: Some(Perturbation {
                center: sphere.face_barycenter(DEMO_CAP_FACE).to_array(),
                radius: 0.15,
                amplitude: -0.03,
            }),
            ring: Ring { radius: 100.0, count: 48, elevation_deg: 0.0 },
            image: ImageSpec {
                width: 256,
                height: 256,
                fx: 14210.0,
                fy: 9000.0,
                cx: None,
                cy: None,
            },
        }
    }

    pub fn validate(&self) -> Result<(), SimulatorError> {
        match &self.mesh {
            MeshSource::File { path } => {
                if path.as_os_str().is_empty() {
                    return Err(scene_error("mesh path must not be empty"));
                }
            }
            MeshSource::Icosphere { subdivisions } => {
                if *subdivisions > 8 {
                    return Err(scene_error("icosphere subdivisions must be at most 8"));
                }
            }
            MeshSource::Plane { half_extent, cells } => {
                if !half_extent.is_finite() || *half_extent <= 0.0 {
                    return Err(scene_error("plane half_extent must be positive"));
                }
                if *cells == 0 || *cells > 2048 {
                    return Err(scene_error("plane cells must be in 1..=2048"));
                }
            }
            MeshSource::Box { half_extents } => {
                if half_extents.iter().any(|h| !h.is_finite() || *h <= 0.0) {
                    return Err(scene_error("box half_extents must be positive"));
                }
            }
        }
        let scale = match self.texture {
            Texture::Checker { scale } => scale,
            Texture::ValueNoise { scale, .. } => scale,
        };
        if !scale.is_finite() || scale <= 0.0 {
            return Err(scene_error("texture scale must be positive"));
        }
        if self.light.unit_direction().is_none() {
            return Err(scene_error("light direction must be a nonzero finite vector"));
        }
        if !self.light.ambient.is_finite() || !(0.0..=1.0).contains(&self.light.ambient) {
            return Err(scene_error("light ambient must be in [0, 1]"));
        }
        if let Some(p) = &self.perturbation {
            if p.center.iter().any(|c| !c.is_finite()) {
                return Err(scene_error("perturbation center must be finite"));
            }
            if !p.radius.is_finite() || p.radius <= 0.0 {
                return Err(scene_error("perturbation radius must be positive"));
            }
            if !p.amplitude.is_finite() {
                return Err(scene_error("perturbation amplitude must be finite"));
            }
        }
        if !self.ring.radius.is_finite() || self.ring.radius <= 0.0 {
            return Err(scene_error("ring radius must be positive"));
        }
        if self.ring.count == 0 {
            return Err(scene_error("ring count must be at least 1"));
        }
        if !self.ring.elevation_deg.is_finite() {
            return Err(scene_error("ring elevation_deg must be finite"));
        }
        let img = &self.image;
        if img.width == 0 || img.height == 0 {
            return Err(scene_error("image dimensions must be at least 1x1"));
        }
        for (name, f) in [("fx", img.fx), ("fy", img.fy)] {
            if !f.is_finite() || f <= 0.0 {
                return Err(scene_error(format!("image {name} must be positive")));
            }
        }
        for (name, c) in [("cx", img.cx), ("cy", img.cy)] {
            if let Some(c) = c {
                if !c.is_finite() {
                    return Err(scene_error(format!("image {name} must be finite")));
                }
            }
        }
        Ok(())
    }

    /// Intrinsics shared by all generated cameras.
    pub fn intrinsics(&self) -> Intrinsics {
        let i = &self.image;
        Intrinsics {
            width: i.width,
            height: i.height,
            fx: i.fx,
            fy: i.fy,
            cx: i.cx.unwrap_or(f64::from(i.width) / 2.0),
            cy: i.cy.unwrap_or(f64::from(i.height) / 2.0),
        }
    }

    /// Builds the base (unperturbed) mesh.
    pub fn build_mesh(&self) -> Result<TriangleMesh, SimulatorError> {
        match &self.mesh {
            MeshSource::File { path } => Ok(load_mesh(path)?),
            MeshSource::Icosphere { subdivisions } => icosphere(*subdivisions),
            MeshSource::Plane { half_extent, cells } => plane_grid(*half_extent, *cells),
            MeshSource::Box { half_extents } => {
                box_mesh(half_extents[0], half_extents[1], half_extents[2])
            }
        }
    }

    /// The mesh the renderer images: the base mesh with the perturbation
    /// applied, or the base mesh itself when there is none.
    pub fn ground_truth(&self, base: &TriangleMesh) -> TriangleMesh {
        match &self.perturbation {
            Some(p) => perturb(base, p),
            None => base.clone(),
        }
    }
}

/// Reads and validates a JSON scene file.
pub fn load_scene(path: &Path) -> Result<SceneSpec, SimulatorError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| SimulatorError::Io { path: path.to_path_buf(), source })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let scene: SceneSpec = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        SimulatorError::InvalidScene { message: format!("{}: {e}", path.display()) }
    })?;
    scene.validate()?;
    Ok(scene)
}

fn checker(scale: f64, p: Vec3) -> f64 {
    let cells = (p.x / scale).floor() + (p.y / scale).floor() + (p.z / scale).floor();
    if (cells as i64).rem_euclid(2) == 0 {
        0.8
    } else {
        0.2
    }
}

/// Hash of one lattice point to [0, 1); integer arithmetic only, so the
/// texture is identical on every platform.
fn lattice_hash01(seed: u64, ix: i64, iy: i64, iz: i64) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    h = h.wrapping_add((ix as u64).wrapping_mul(0xd1b5_4a32_d192_ed03));
    h = h.wrapping_add((iy as u64).wrapping_mul(0xaef1_7502_108e_f2d9));
    h = h.wrapping_add((iz as u64).wrapping_mul(0x94d0_49bb_1331_11eb));
    h ^= h >> 30;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 27;
    h = h.wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^= h >> 31;
    (h >> 11) as f64 / (1u64 << 53) as f64
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(scale: f64, seed: u64, p: Vec3) -> f64 {
    let q = p / scale;
    let (fx, fy, fz) = (q.x.floor(), q.y.floor(), q.z.floor());
    let (tx, ty, tz) = (smoothstep(q.x - fx), smoothstep(q.y - fy), smoothstep(q.z - fz));
    let (ix, iy, iz) = (fx as i64, fy as i64, fz as i64);
    let mut value = 0.0;
    for corner in 0..8u32 {
        let (dx, dy, dz) = (corner & 1, (corner >> 1) & 1, (corner >> 2) & 1);
        let w = (if dx == 1 { tx } else { 1.0 - tx })
            * (if dy == 1 { ty } else { 1.0 - ty })
            * (if dz == 1 { tz } else { 1.0 - tz });
        value += w * lattice_hash01(seed, ix + i64::from(dx), iy + i64::from(dy), iz + i64::from(dz));
    }
    value
}

fn icosphere(subdivisions: u32) -> Result<TriangleMesh, SimulatorError> {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let seeds = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Vec3> = seeds
        .iter()
        .map(|&(x, y, z)| Vec3::new(x, y, z).normalized().expect("seed vertices are nonzero"))
        .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                let m = (vertices[a as usize] + vertices[b as usize])
                    .normalized()
                    .expect("midpoints of a convex sphere never cancel");
                vertices.push(m);
                vertices.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

fn plane_grid(half_extent: f64, cells: u32) -> Result<TriangleMesh, SimulatorError> {
    let n = cells as usize;
    let step = 2.0 * half_extent / cells as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for row in 0..=n {
        for col in 0..=n {
            vertices.push(Vec3::new(
                -half_extent + step * col as f64,
                -half_extent + step * row as f64,
                0.0,
            ));
        }
    }
    let index = |row: usize, col: usize| (row * (n + 1) + col) as u32;
    let mut faces = Vec::with_capacity(2 * n * n);
    for row in 0..n {
        for col in 0..n {
            let (a, b) = (index(row, col), index(row, col + 1));
            let (d, e) = (index(row + 1, col), index(row + 1, col + 1));
            faces.push([a, b, e]);
            faces.push([a, e, d]);
        }
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

fn box_mesh(hx: f64, hy: f64, hz: f64) -> Result<TriangleMesh, SimulatorError> {
    let mut vertices = Vec::with_capacity(8);
    for i in 0..8u32 {
        vertices.push(Vec3::new(
            if i & 1 == 0 { -hx } else { hx },
            if i & 2 == 0 { -hy } else { hy },
            if i & 4 == 0 { -hz } else { hz },
        ));
    }
    let faces = vec![
        [0, 2, 3],
        [0, 3, 1],
        [4, 5, 7],
        [4, 7, 6],
        [0, 1, 5],
        [0, 5, 4],
        [2, 6, 7],
        [2, 7, 3],
        [0, 4, 6],
        [0, 6, 2],
        [1, 3, 7],
        [1, 7, 5],
    ];
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Displaces every vertex within the perturbation radius along its
/// area-weighted normal; all other vertices and the face list are returned
/// bit-for-bit unchanged.
pub fn perturb(mesh: &TriangleMesh, p: &Perturbation) -> TriangleMesh {
    let center = Vec3::from_array(p.center);
    let normals = mesh.vertex_normals();
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(&v, &n)| {
            let d = (v - center).norm();
            if p.amplitude == 0.0 || d >= p.radius {
                v
            } else {
                let falloff = 0.5 * (1.0 + (PI * d / p.radius).cos());
                v + n * (p.amplitude * falloff)
            }
        })
        .collect();
    mesh.with_vertices(vertices)
}

/// Renders one grayscale view of a mesh by casting a primary ray through
/// every pixel center. Intensity is `texture(hit) * (ambient + (1-ambient) *
/// max(0, n.l))`, quantized to 8 bits; rays that miss produce black.
///
/// Rows are rendered in parallel; the output is identical for any thread
/// count.
pub fn render_mesh(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    texture: &Texture,
    light_dir: Vec3,
    ambient: f64,
    camera: &Camera,
) -> GrayImage {
    let i = camera.intrinsics;
    let rot_t = camera.pose.rotation.transpose();
    let origin = camera.pose.center;
    let rows: Vec<Vec<u8>> = (0..i.height)
        .into_par_iter()
        .map(|row| {
            (0..i.width)
                .map(|col| {
                    let u = f64::from(col) + 0.5;
                    let v = f64::from(row) + 0.5;
                    let dir = rot_t.mul_vec(Vec3::new((u - i.cx) / i.fx, (v - i.cy) / i.fy, 1.0));
                    match bvh.ray_first_hit(mesh, Ray { origin, dir }) {
                        None => 0u8,
                        Some(hit) => {
                            let point = origin + dir * hit.t;
                            let n = mesh.face_normal(hit.face);
                            let shade = ambient + (1.0 - ambient) * n.dot(light_dir).max(0.0);
                            let value = (texture.sample(point) * shade).clamp(0.0, 1.0);
                            (value * 255.0).round() as u8
                        }
                    }
                })
                .collect()
        })
        .collect();
    GrayImage::from_bytes(i.width, i.height, &rows.concat())
        .expect("pixel buffer matches camera dimensions")
}

/// Renders one view of the scene's ground-truth mesh.
pub fn render(scene: &SceneSpec, camera: &Camera) -> Result<GrayImage, SimulatorError> {
    scene.validate()?;
    let base = scene.build_mesh()?;
    let truth = scene.ground_truth(&base);
    let bvh = Bvh::build(&truth);
    let light_dir = scene.light.unit_direction().expect("validated above");
    Ok(render_mesh(&truth, &bvh, &scene.texture, light_dir, scene.light.ambient, camera))
}

/// Generates `count` cameras evenly spaced in azimuth on a circle of
/// `radius` around `center`, raised by `elevation_deg`, each looking at
/// `center` with +z as the up hint. Ids are `ring-00`, `ring-01`, ...
pub fn candidate_ring(
    center: Vec3,
    radius: f64,
    count: usize,
    elevation_deg: f64,
    intrinsics: Intrinsics,
) -> Result<Vec<Camera>, SimulatorError> {
    if count == 0 {
        return Err(SimulatorError::InvalidRun { message: "ring count must be at least 1".into() });
    }
    if !radius.is_finite() || radius <= 0.0 {
        return Err(SimulatorError::InvalidRun { message: "ring radius must be positive".into() });
    }
    let elevation = elevation_deg.to_radians();
    let mut cameras = Vec::with_capacity(count);
    for k in 0..count {
        let azimuth = 2.0 * PI * k as f64 / count as f64;
        let offset = Vec3::new(
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        );
        let eye = center + offset * radius;
        let pose = look_at(eye, center, Vec3::new(0.0, 0.0, 1.0));
        cameras.push(Camera::new(format!("ring-{k:02}"), intrinsics, pose)?);
    }
    Ok(cameras)
}

/// One planning step of [`closed_loop`], serialized as one JSON line.
///
/// PRI statistics describe the view set *before* this step's selection;
/// `winner` is absent on the final record, which only reports the state after
/// the last added view.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Camera ids in the current view set, in acquisition order.
    pub views: Vec<String>,
    /// Facets with a defined PRI (seen by at least two views).
    pub defined: usize,
    pub undefined: usize,
    pub mean_pri: Option<f64>,
    pub min_pri: Option<f64>,
    /// Mean PRI of the worst-facet set frozen at iteration 0, tracked across
    /// the whole run.
    pub initial_worst_mean_pri: Option<f64>,
    pub worst_faces: Vec<u32>,
    pub worst_centers: Vec<[f64; 3]>,
    pub winner: Option<String>,
    pub winner_energy: Option<f64>,
}

/// Everything a closed-loop run produced: the planner's mesh, the acquired
/// views with their rendered images, the untouched candidates, and one
/// [`IterationRecord`] per planning step plus a final summary record.
#[derive(Debug, Clone)]
pub struct ClosedLoopRun {
    pub base_mesh: TriangleMesh,
    pub views: Vec<Camera>,
    pub images: Vec<GrayImage>,
    pub remaining: Vec<Camera>,
    pub records: Vec<IterationRecord>,
}

fn pri_stats(facets: &[FacetPri]) -> (usize, usize, Option<f64>, Option<f64>) {
    let defined: Vec<f64> = facets.iter().filter_map(|f| f.pri).collect();
    let undefined = facets.len() - defined.len();
    if defined.is_empty() {
        return (0, undefined, None, None);
    }
    let mean = defined.iter().sum::<f64>() / defined.len() as f64;
    let min = defined.iter().copied().min_by(|a, b| a.total_cmp(b)).expect("nonempty");
    (defined.len(), undefined, Some(mean), Some(min))
}

fn mean_over(facets: &[FacetPri], faces: &[u32]) -> Option<f64> {
    let values: Vec<f64> = faces.iter().filter_map(|&f| facets[f as usize].pri).collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Runs the full planning loop on a synthetic scene.
///
/// Starting from `initial_views` cameras spaced evenly around the ring, each
/// iteration scores the current reconstruction, records its statistics, picks
/// the best remaining ring candidate, and renders that camera's view of the
/// ground truth. Stops early (with a final record) if the pool empties.
pub fn closed_loop(
    scene: &SceneSpec,
    initial_views: usize,
    iterations: usize,
    config: &RunConfig,
) -> Result<ClosedLoopRun, SimulatorError> {
    scene.validate()?;
    config.validate()?;
    if iterations == 0 {
        return Err(SimulatorError::InvalidRun { message: "iterations must be at least 1".into() });
    }
    if initial_views == 0 {
        return Err(SimulatorError::InvalidRun {
            message: "initial view count must be at least 1".into(),
        });
    }
    if initial_views > scene.ring.count {
        return Err(SimulatorError::InvalidRun {
            message: format!(
                "initial view count {initial_views} exceeds the {}-camera ring",
                scene.ring.count
            ),
        });
    }

    let base = scene.build_mesh()?;
    let truth = scene.ground_truth(&base);
    let base_bvh = Bvh::build(&base);
    let truth_bvh = Bvh::build(&truth);
    let light_dir = scene.light.unit_direction().expect("validated above");
    let ambient = scene.light.ambient;
    let (lo, hi) = base.bounds();
    let ring = candidate_ring(
        (lo + hi) / 2.0,
        scene.ring.radius,
        scene.ring.count,
        scene.ring.elevation_deg,
        scene.intrinsics(),
    )?;

    let mut used = vec![false; ring.len()];
    for k in 0..initial_views {
        used[k * ring.len() / initial_views] = true;
    }
    let mut views: Vec<Camera> = Vec::new();
    let mut images: Vec<GrayImage> = Vec::new();
    for (camera, taken) in ring.iter().zip(&used) {
        if *taken {
            views.push(camera.clone());
            images.push(render_mesh(&truth, &truth_bvh, &scene.texture, light_dir, ambient, camera));
        }
    }

    let mut tracker = IncrementalPri::new(config.metric, config.patch_subdivision)?;
    let mut initial_worst: Vec<u32> = Vec::new();
    let mut records: Vec<IterationRecord> = Vec::new();

    for iteration in 0..=iterations {
        let view_set = ViewSet::new(
            views
                .iter()
                .zip(&images)
                .map(|(camera, image)| View { camera: camera.clone(), image: image.clone() })
                .collect(),
        )?;
        tracker.update(&base, &base_bvh, &view_set);
        let report = tracker.report(&base, config.k)?;
        if iteration == 0 {
            initial_worst = report.worst_facets.clone();
        }
        let (defined, undefined, mean_pri, min_pri) = pri_stats(&report.facets);
        let mut record = IterationRecord {
            iteration,
            views: views.iter().map(|c| c.id.clone()).collect(),
            defined,
            undefined,
            mean_pri,
            min_pri,
            initial_worst_mean_pri: mean_over(&report.facets, &initial_worst),
            worst_faces: report.worst_facets.clone(),
            worst_centers: report
                .worst_facets
                .iter()
                .map(|&f| base.face_barycenter(f).to_array())
                .collect(),
            winner: None,
            winner_energy: None,
        };
        let candidates: Vec<Camera> = ring
            .iter()
            .zip(&used)
            .filter(|(_, &taken)| !taken)
            .map(|(c, _)| c.clone())
            .collect();
        if iteration == iterations || candidates.is_empty() {
            records.push(record);
            break;
        }
        let model = EnergyModel {
            mesh: &base,
            bvh: &base_bvh,
            existing: &views,
            weights: config.weights,
            params: config.params,
            incidence_sign: config.incidence_sign,
        };
        let energy = select_best(&model, &candidates, &report)?;
        record.winner = Some(energy.winner.clone());
        record.winner_energy = Some(energy.ranking[0].total);
        records.push(record);
        let index =
            ring.iter().position(|c| c.id == energy.winner).expect("winner comes from the ring");
        used[index] = true;
        views.push(ring[index].clone());
        images.push(render_mesh(&truth, &truth_bvh, &scene.texture, light_dir, ambient, &ring[index]));
    }

    let remaining: Vec<Camera> =
        ring.iter().zip(&used).filter(|(_, &taken)| !taken).map(|(c, _)| c.clone()).collect();
    Ok(ClosedLoopRun { base_mesh: base, views, images, remaining, records })
}
