//! Canonical facet patches and the similarity metrics compared over them.
//!
//! A facet's appearance in an image is resampled onto a fixed barycentric
//! grid, which plays the role of a triangle with unit sides: two patches of
//! the same facet from different images are point-wise comparable regardless
//! of the facet's shape or screen-space footprint.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::camera::{facet_visible, Camera};
use crate::image::GrayImage;
use crate::mesh::TriangleMesh;

#[derive(Debug, Error)]
pub enum PatchError {
    #[error("subdivision level must be at least 1")]
    BadSubdivision,
    #[error("facet {face} is not visible in camera {camera:?}")]
    FacetNotVisible { face: u32, camera: String },
}

/// Barycentric sample grid for subdivision level `n`, in a fixed order.
///
/// Weights are `(a/n, b/n, c/n)` with `a + b + c = n`, enumerated by `a`
/// ascending, then `b` ascending. Level `n` yields `(n+1)(n+2)/2` samples;
/// level 1 is exactly the three corners.
pub fn barycentric_grid(n: usize) -> Result<Vec<[f64; 3]>, PatchError> {
    if n == 0 {
        return Err(PatchError::BadSubdivision);
    }
    let mut grid = Vec::with_capacity(sample_count(n));
    let scale = 1.0 / n as f64;
    for a in 0..=n {
        for b in 0..=(n - a) {
            let c = n - a - b;
            grid.push([a as f64 * scale, b as f64 * scale, c as f64 * scale]);
        }
    }
    Ok(grid)
}

/// Number of samples at subdivision level `n`.
#[inline]
pub fn sample_count(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// A facet's image intensities resampled onto the barycentric grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalPatch {
    pub samples: Vec<f64>,
}

/// Resamples a facet's projection in one image onto the canonical grid.
///
/// Each grid point is lifted to the facet plane by its barycentric weights,
/// projected through the camera, and read from the image with bilinear
/// interpolation (border clamp). The facet must be visible in the camera;
/// visibility guarantees every grid point projects in front of the camera and
/// inside the image.
pub fn sample_patch(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    camera: &Camera,
    image: &GrayImage,
    face: u32,
    subdivision: usize,
) -> Result<CanonicalPatch, PatchError> {
    if !facet_visible(mesh, bvh, camera, face) {
        return Err(PatchError::FacetNotVisible { face, camera: camera.id.clone() });
    }
    let grid = barycentric_grid(subdivision)?;
    Ok(sample_patch_unchecked(mesh, camera, image, face, &grid))
}

/// Same as [`sample_patch`] but with visibility already established and the
/// grid precomputed, for callers sampling many facets.
pub(crate) fn sample_patch_unchecked(
    mesh: &TriangleMesh,
    camera: &Camera,
    image: &GrayImage,
    face: u32,
    grid: &[[f64; 3]],
) -> CanonicalPatch {
    let [v0, v1, v2] = mesh.face_vertices(face);
    let samples = grid
        .iter()
        .map(|&[a, b, c]| {
            let p = v0 * a + v1 * b + v2 * c;
            let px = camera
                .project(p)
                .expect("visible facet projects all interior points");
            image.bilinear(px.u, px.v)
        })
        .collect();
    CanonicalPatch { samples }
}

/// Sum of squared differences over two patches of the same grid.
///
/// Zero exactly when the patches are identical; symmetric; grows with
/// disagreement. Lower is more photo-consistent.
pub fn ssd(a: &CanonicalPatch, b: &CanonicalPatch) -> f64 {
    assert_eq!(
        a.samples.len(),
        b.samples.len(),
        "patches must come from the same grid"
    );
    a.samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| (x - y) * (x - y))
        .sum()
}

/// Normalized cross-correlation over two patches of the same grid.
///
/// Both patches are mean-centered and scaled by their norms, so the score is
/// invariant to affine intensity changes: `ncc(p, alpha * p + beta)` is 1 for
/// `alpha > 0` and -1 for `alpha < 0`. A patch with variance below 1e-12 is
/// uninformative and scores 0. The result is clamped to `[-1, 1]`.
pub fn ncc(a: &CanonicalPatch, b: &CanonicalPatch) -> f64 {
    assert_eq!(
        a.samples.len(),
        b.samples.len(),
        "patches must come from the same grid"
    );
    let n = a.samples.len() as f64;
    let mean_a = a.samples.iter().sum::<f64>() / n;
    let mean_b = b.samples.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (x, y) in a.samples.iter().zip(&b.samples) {
        let da = x - mean_a;
        let db = y - mean_b;
        cross += da * db;
        var_a += da * da;
        var_b += db * db;
    }
    if var_a < 1e-12 || var_b < 1e-12 {
        return 0.0;
    }
    (cross / (var_a * var_b).sqrt()).clamp(-1.0, 1.0)
}

/// Similarity metric used for photo-consistency scoring.
///
/// Both variants score higher for more consistent pairs: `Ssd` is negated so
/// identical patches score 0 and disagreement goes negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Ssd,
    Ncc,
}

impl Metric {
    /// Pair similarity: higher is more photo-consistent.
    #[inline]
    pub fn similarity(self, a: &CanonicalPatch, b: &CanonicalPatch) -> f64 {
        match self {
            Metric::Ssd => -ssd(a, b),
            Metric::Ncc => ncc(a, b),
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Metric::Ssd => write!(f, "ssd"),
            Metric::Ncc => write!(f, "ncc"),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ssd" => Ok(Metric::Ssd),
            "ncc" => Ok(Metric::Ncc),
            other => Err(format!("unknown metric {other:?} (expected ssd or ncc)")),
        }
    }
}
