//! Indexed triangle meshes with derived per-face data and vertex adjacency.

use thiserror::Error;

use crate::math::Vec3;

/// Faces with area at or below this are dropped at construction time.
pub const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh has no vertices")]
    NoVertices,
    #[error("mesh has no faces left after dropping degenerate ones")]
    NoFaces,
    #[error("vertex {index} is not finite")]
    NonFiniteVertex { index: usize },
    #[error("face {face} references vertex {index}, but the mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: u32, count: usize },
}

/// An indexed triangle mesh.
///
/// Faces are stored counter-clockwise when seen from outside, so the cached
/// unit normal of each face points outward. Degenerate faces (area at or
/// below [`MIN_FACE_AREA`]) are dropped at construction and counted in
/// [`TriangleMesh::dropped_face_count`].
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    face_normals: Vec<Vec3>,
    incident: Vec<Vec<u32>>,
    dropped_faces: usize,
}

impl TriangleMesh {
    /// Validates indices, drops degenerate faces, and caches normals and
    /// vertex-to-face adjacency.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Result<TriangleMesh, MeshError> {
        if vertices.is_empty() {
            return Err(MeshError::NoVertices);
        }
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(MeshError::NonFiniteVertex { index: i });
            }
        }
        let count = vertices.len();
        let mut kept = Vec::with_capacity(faces.len());
        let mut normals = Vec::with_capacity(faces.len());
        let mut dropped = 0usize;
        for (fi, f) in faces.iter().enumerate() {
            for &ix in f {
                if ix as usize >= count {
                    return Err(MeshError::IndexOutOfRange { face: fi, index: ix, count });
                }
            }
            let [a, b, c] = [
                vertices[f[0] as usize],
                vertices[f[1] as usize],
                vertices[f[2] as usize],
            ];
            let cross = (b - a).cross(c - a);
            let area = 0.5 * cross.norm();
            if area <= MIN_FACE_AREA {
                dropped += 1;
                continue;
            }
            kept.push(*f);
            normals.push(cross * (1.0 / (2.0 * area)));
        }
        if kept.is_empty() {
            return Err(MeshError::NoFaces);
        }
        if dropped > 0 {
            log::warn!("dropped {dropped} degenerate face(s)");
        }
        let incident = build_incident(count, &kept);
        Ok(TriangleMesh {
            vertices,
            faces: kept,
            face_normals: normals,
            incident,
            dropped_faces: dropped,
        })
    }

    /// Rebuilds with new vertex positions but identical connectivity.
    ///
    /// Normals are recomputed; faces are kept even if displacement made them
    /// degenerate, so indices stay aligned with the source mesh.
    pub(crate) fn with_vertices(&self, vertices: Vec<Vec3>) -> TriangleMesh {
        debug_assert_eq!(vertices.len(), self.vertices.len());
        let face_normals = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = [
                    vertices[f[0] as usize],
                    vertices[f[1] as usize],
                    vertices[f[2] as usize],
                ];
                (b - a)
                    .cross(c - a)
                    .normalized()
                    .unwrap_or(Vec3::new(0.0, 0.0, 1.0))
            })
            .collect();
        TriangleMesh {
            vertices,
            faces: self.faces.clone(),
            face_normals,
            incident: self.incident.clone(),
            dropped_faces: self.dropped_faces,
        }
    }

    #[inline]
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    #[inline]
    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Number of degenerate faces dropped at construction.
    #[inline]
    pub fn dropped_face_count(&self) -> usize {
        self.dropped_faces
    }

    /// The three corner positions of a face.
    #[inline]
    pub fn face_vertices(&self, face: u32) -> [Vec3; 3] {
        let f = self.faces[face as usize];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Unit outward normal of a face.
    #[inline]
    pub fn face_normal(&self, face: u32) -> Vec3 {
        self.face_normals[face as usize]
    }

    /// Mean of the three corner positions.
    #[inline]
    pub fn face_barycenter(&self, face: u32) -> Vec3 {
        let [a, b, c] = self.face_vertices(face);
        (a + b + c) / 3.0
    }

    /// Faces incident to a vertex, ascending by face index.
    #[inline]
    pub fn incident_faces(&self, vertex: u32) -> &[u32] {
        &self.incident[vertex as usize]
    }

    /// Axis-aligned bounding box over all vertices.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = self.vertices[0];
        let mut hi = self.vertices[0];
        for &v in &self.vertices[1..] {
            lo = lo.min_components(v);
            hi = hi.max_components(v);
        }
        (lo, hi)
    }

    /// Area-weighted unit vertex normals (mean of incident face cross
    /// products, normalized).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::ZERO; self.vertices.len()];
        for f in &self.faces {
            let [a, b, c] = [
                self.vertices[f[0] as usize],
                self.vertices[f[1] as usize],
                self.vertices[f[2] as usize],
            ];
            let cross = (b - a).cross(c - a);
            for &ix in f {
                acc[ix as usize] = acc[ix as usize] + cross;
            }
        }
        acc.into_iter()
            .map(|n| n.normalized().unwrap_or(Vec3::new(0.0, 0.0, 1.0)))
            .collect()
    }
}

fn build_incident(vertex_count: usize, faces: &[[u32; 3]]) -> Vec<Vec<u32>> {
    let mut incident = vec![Vec::new(); vertex_count];
    for (fi, f) in faces.iter().enumerate() {
        for &ix in f {
            incident[ix as usize].push(fi as u32);
        }
    }
    incident
}
