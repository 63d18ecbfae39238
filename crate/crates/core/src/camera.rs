//! Pinhole cameras: intrinsics, rigid pose, projection, and facet visibility.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::math::{Mat3, Vec3};
use crate::mesh::TriangleMesh;

/// Points closer to the image plane than this are treated as behind the
/// camera.
pub const Z_NEAR: f64 = 1e-6;

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CameraError {
    #[error("camera {id:?}: {what} must be positive and finite")]
    BadIntrinsics { id: String, what: &'static str },
    #[error("camera {id:?}: rotation is not orthonormal (max deviation {err:.2e})")]
    NotOrthonormal { id: String, err: f64 },
    #[error("camera {id:?}: rotation determinant is {det:.6}, expected +1")]
    NotRightHanded { id: String, det: f64 },
    #[error("camera {id:?}: center is not finite")]
    BadCenter { id: String },
    #[error("duplicate camera id {id:?}")]
    DuplicateId { id: String },
    #[error("camera file {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("camera file {path}: {message}")]
    Format { path: String, message: String },
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub width: u32,
    pub height: u32,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// World-to-camera rigid transform.
///
/// `rotation` maps world directions into the camera frame (x right, y down,
/// z forward); `center` is the camera position in world coordinates, so a
/// world point `p` lands at `rotation * (p - center)` in the camera frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Mat3,
    pub center: Vec3,
}

/// Continuous pixel coordinates; `u` grows to the right, `v` downward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

/// A posed pinhole camera with a stable identifier.
#[derive(Debug, Clone)]
pub struct Camera {
    pub id: String,
    pub intrinsics: Intrinsics,
    pub pose: Pose,
}

impl Camera {
    /// Validates intrinsics and pose.
    pub fn new(id: String, intrinsics: Intrinsics, pose: Pose) -> Result<Camera, CameraError> {
        let bad = |what| CameraError::BadIntrinsics { id: id.clone(), what };
        if intrinsics.width == 0 {
            return Err(bad("width"));
        }
        if intrinsics.height == 0 {
            return Err(bad("height"));
        }
        if !(intrinsics.fx.is_finite() && intrinsics.fx > 0.0) {
            return Err(bad("fx"));
        }
        if !(intrinsics.fy.is_finite() && intrinsics.fy > 0.0) {
            return Err(bad("fy"));
        }
        if !intrinsics.cx.is_finite() {
            return Err(bad("cx"));
        }
        if !intrinsics.cy.is_finite() {
            return Err(bad("cy"));
        }
        if !pose.rotation.is_finite() {
            return Err(CameraError::NotOrthonormal { id, err: f64::INFINITY });
        }
        let err = pose.rotation.orthonormality_error();
        if err > ROTATION_TOL {
            return Err(CameraError::NotOrthonormal { id, err });
        }
        let det = pose.rotation.determinant();
        if (det - 1.0).abs() > 1e-6 {
            return Err(CameraError::NotRightHanded { id, det });
        }
        if !pose.center.is_finite() {
            return Err(CameraError::BadCenter { id });
        }
        Ok(Camera { id, intrinsics, pose })
    }

    /// World point into the camera frame.
    #[inline]
    pub fn to_camera(&self, p: Vec3) -> Vec3 {
        self.pose.rotation.mul_vec(p - self.pose.center)
    }

    /// Projects a world point. `None` when the point is at or behind the
    /// near plane (`z <= Z_NEAR`).
    #[inline]
    pub fn project(&self, p: Vec3) -> Option<PixelCoord> {
        let c = self.to_camera(p);
        if c.z <= Z_NEAR {
            return None;
        }
        Some(PixelCoord {
            u: self.intrinsics.fx * c.x / c.z + self.intrinsics.cx,
            v: self.intrinsics.fy * c.y / c.z + self.intrinsics.cy,
        })
    }

    /// Whether a pixel coordinate falls inside the image
    /// (`0 <= u < width`, `0 <= v < height`).
    #[inline]
    pub fn in_image(&self, p: PixelCoord) -> bool {
        p.u >= 0.0
            && p.u < self.intrinsics.width as f64
            && p.v >= 0.0
            && p.v < self.intrinsics.height as f64
    }

    /// The camera's forward (+z) axis in world coordinates.
    #[inline]
    pub fn forward(&self) -> Vec3 {
        self.pose.rotation.row(2)
    }
}

/// Pose looking from `eye` toward `target` with image +y pointing down.
///
/// `up` is the world up hint; when the view direction is nearly parallel to
/// it, world +x is used instead so the result stays well defined.
pub fn look_at(eye: Vec3, target: Vec3, up: Vec3) -> Pose {
    let forward = (target - eye)
        .normalized()
        .expect("look_at: eye and target coincide");
    let up_hint = match up.normalized() {
        Some(u) if forward.dot(u).abs() < 1.0 - 1e-9 => u,
        _ => Vec3::new(1.0, 0.0, 0.0),
    };
    let right = forward
        .cross(up_hint)
        .normalized()
        .expect("look_at: degenerate up hint");
    let down = forward.cross(right);
    Pose {
        rotation: Mat3::from_rows(right, down, forward),
        center: eye,
    }
}

/// Whether a facet is fully visible in a camera.
///
/// Requires all three of:
/// - every vertex projects in front of the camera and inside the image,
/// - no vertex is occluded by the rest of the mesh (faces incident to the
///   vertex itself are excluded from the occlusion test),
/// - the facet is front-facing: its normal points toward the camera
///   (`normal . (center - barycenter) > 0`).
pub fn facet_visible(mesh: &TriangleMesh, bvh: &Bvh, camera: &Camera, face: u32) -> bool {
    let normal = mesh.face_normal(face);
    let barycenter = mesh.face_barycenter(face);
    if normal.dot(camera.pose.center - barycenter) <= 0.0 {
        return false;
    }
    let indices = mesh.faces()[face as usize];
    for &vi in &indices {
        let v = mesh.vertices()[vi as usize];
        match camera.project(v) {
            Some(px) if camera.in_image(px) => {}
            _ => return false,
        }
        if bvh.segment_occluded(mesh, camera.pose.center, v, mesh.incident_faces(vi)) {
            return false;
        }
    }
    true
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraRecord {
    id: String,
    width: u32,
    height: u32,
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    /// Row-major world-to-camera rotation.
    rotation: [f64; 9],
    center: [f64; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CameraFile {
    cameras: Vec<CameraRecord>,
}

/// Loads cameras from a JSON file.
///
/// The schema is strict: unknown fields (for example lens distortion
/// coefficients) are rejected with an error naming the field, never silently
/// ignored. Rotations must be orthonormal within 1e-9 with determinant +1,
/// and ids must be unique.
pub fn load_cameras(path: &Path) -> Result<Vec<Camera>, CameraError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|source| CameraError::Io { path: display.clone(), source })?;
    let mut de = serde_json::Deserializer::from_str(&text);
    let file: CameraFile = serde_path_to_error::deserialize(&mut de)
        .map_err(|e| CameraError::Format { path: display.clone(), message: e.to_string() })?;
    let mut cameras = Vec::with_capacity(file.cameras.len());
    let mut seen = std::collections::HashSet::new();
    for rec in file.cameras {
        if !seen.insert(rec.id.clone()) {
            return Err(CameraError::DuplicateId { id: rec.id });
        }
        let intrinsics = Intrinsics {
            width: rec.width,
            height: rec.height,
            fx: rec.fx,
            fy: rec.fy,
            cx: rec.cx,
            cy: rec.cy,
        };
        let pose = Pose {
            rotation: Mat3::from_row_major(rec.rotation),
            center: Vec3::from_array(rec.center),
        };
        cameras.push(Camera::new(rec.id, intrinsics, pose)?);
    }
    Ok(cameras)
}

/// Writes cameras as JSON in the same schema `load_cameras` reads.
pub fn save_cameras(path: &Path, cameras: &[Camera]) -> Result<(), CameraError> {
    let file = CameraFile {
        cameras: cameras
            .iter()
            .map(|c| CameraRecord {
                id: c.id.clone(),
                width: c.intrinsics.width,
                height: c.intrinsics.height,
                fx: c.intrinsics.fx,
                fy: c.intrinsics.fy,
                cx: c.intrinsics.cx,
                cy: c.intrinsics.cy,
                rotation: c.pose.rotation.to_row_major(),
                center: c.pose.center.to_array(),
            })
            .collect(),
    };
    let display = path.display().to_string();
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| CameraError::Format { path: display.clone(), message: e.to_string() })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| CameraError::Io { path: display, source })
}
