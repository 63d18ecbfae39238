//! Per-facet photo-consistency (PRI), worst-facet selection, and the heat-map
//! coloring used for reporting.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::camera::{facet_visible, Camera};
use crate::image::GrayImage;
use crate::mesh::TriangleMesh;
use crate::patch::{barycentric_grid, sample_patch_unchecked, CanonicalPatch, Metric, PatchError};

#[derive(Debug, Error)]
pub enum PriError {
    #[error("view {index} ({id:?}): image is {got_w}x{got_h} but the camera expects {want_w}x{want_h}")]
    ImageSize { index: usize, id: String, got_w: u32, got_h: u32, want_w: u32, want_h: u32 },
    #[error("face {face} out of range for mesh with {count} faces")]
    FaceOutOfRange { face: u32, count: usize },
    #[error("worst-facet count must be at least 1")]
    BadK,
    #[error(transparent)]
    Patch(#[from] PatchError),
}

/// One posed image: a camera and the grayscale frame it captured.
#[derive(Debug, Clone)]
pub struct View {
    pub camera: Camera,
    pub image: GrayImage,
}

/// Posed images registered to a mesh.
///
/// Construction checks every image against its camera's intrinsics, so
/// downstream sampling never sees a size mismatch.
#[derive(Debug, Clone)]
pub struct ViewSet {
    views: Vec<View>,
}

impl ViewSet {
    pub fn new(views: Vec<View>) -> Result<ViewSet, PriError> {
        for (index, view) in views.iter().enumerate() {
            let i = &view.camera.intrinsics;
            if view.image.width() != i.width || view.image.height() != i.height {
                return Err(PriError::ImageSize {
                    index,
                    id: view.camera.id.clone(),
                    got_w: view.image.width(),
                    got_h: view.image.height(),
                    want_w: i.width,
                    want_h: i.height,
                });
            }
        }
        Ok(ViewSet { views })
    }

    pub fn views(&self) -> &[View] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }
}

/// PRI of one facet: mean pair similarity, or undefined with fewer than two
/// observing views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetPri {
    pub face: u32,
    /// Mean similarity over all unordered pairs of observing views; `None`
    /// when fewer than two views see the facet. Higher is more
    /// photo-consistent for both metrics.
    pub pri: Option<f64>,
    /// Number of views in which the facet is visible.
    pub views: usize,
    pub defined: bool,
}

/// Full per-facet table plus the worst-K selection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PriReport {
    pub metric: Metric,
    #[serde(rename = "K")]
    pub k: usize,
    /// One entry per face, in face-index order.
    pub facets: Vec<FacetPri>,
    /// The K facets most in need of observation, worst first: undefined
    /// facets (by face index), then defined facets by ascending PRI.
    pub worst_facets: Vec<u32>,
    /// Sorted union of the vertices of `worst_facets`.
    pub worst_vertices: Vec<u32>,
}

fn visible_views(mesh: &TriangleMesh, bvh: &Bvh, views: &ViewSet, face: u32) -> Vec<usize> {
    (0..views.len())
        .filter(|&i| facet_visible(mesh, bvh, &views.views()[i].camera, face))
        .collect()
}

fn pri_for_face<F>(
    mesh: &TriangleMesh,
    views: &ViewSet,
    face: u32,
    grid: &[[f64; 3]],
    visible: &[usize],
    sim: &F,
) -> FacetPri
where
    F: Fn(&CanonicalPatch, &CanonicalPatch) -> f64,
{
    if visible.len() < 2 {
        return FacetPri { face, pri: None, views: visible.len(), defined: false };
    }
    let patches: Vec<CanonicalPatch> = visible
        .iter()
        .map(|&i| {
            let view = &views.views()[i];
            sample_patch_unchecked(mesh, &view.camera, &view.image, face, grid)
        })
        .collect();
    let mut sims = Vec::with_capacity(patches.len() * (patches.len() - 1) / 2);
    for i in 0..patches.len() {
        for j in i + 1..patches.len() {
            sims.push(sim(&patches[i], &patches[j]));
        }
    }
    // summing in sorted order makes the value independent of view ordering
    sims.sort_unstable_by(|a, b| a.total_cmp(b));
    let mean = sims.iter().sum::<f64>() / sims.len() as f64;
    FacetPri { face, pri: Some(mean), views: visible.len(), defined: true }
}

fn check_face(mesh: &TriangleMesh, face: u32) -> Result<(), PriError> {
    if (face as usize) < mesh.face_count() {
        Ok(())
    } else {
        Err(PriError::FaceOutOfRange { face, count: mesh.face_count() })
    }
}

/// PRI of one facet under a caller-supplied pair similarity.
///
/// The similarity is invoked exactly once per unordered pair of observing
/// views. [`pri`] is this with the similarity of a [`Metric`].
pub fn pri_with<F>(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    views: &ViewSet,
    face: u32,
    subdivision: usize,
    sim: F,
) -> Result<FacetPri, PriError>
where
    F: Fn(&CanonicalPatch, &CanonicalPatch) -> f64,
{
    check_face(mesh, face)?;
    let grid = barycentric_grid(subdivision)?;
    let visible = visible_views(mesh, bvh, views, face);
    Ok(pri_for_face(mesh, views, face, &grid, &visible, &sim))
}

/// PRI of one facet: mean metric similarity over all unordered pairs of views
/// that see it, undefined with fewer than two.
pub fn pri(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    views: &ViewSet,
    face: u32,
    metric: Metric,
    subdivision: usize,
) -> Result<FacetPri, PriError> {
    pri_with(mesh, bvh, views, face, subdivision, move |a, b| metric.similarity(a, b))
}

/// Returns face indices ordered worst-first: undefined facets by face index,
/// then defined facets by ascending PRI with face-index tie-break.
fn rank_order(facets: &[FacetPri]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..facets.len() as u32).collect();
    order.sort_by(|&a, &b| {
        let (fa, fb) = (&facets[a as usize], &facets[b as usize]);
        match (fa.defined, fb.defined) {
            (false, false) => a.cmp(&b),
            (false, true) => std::cmp::Ordering::Less,
            (true, false) => std::cmp::Ordering::Greater,
            (true, true) => fa
                .pri
                .unwrap()
                .total_cmp(&fb.pri.unwrap())
                .then(a.cmp(&b)),
        }
    });
    order
}

fn select_worst(mesh: &TriangleMesh, facets: &[FacetPri], k: usize) -> (Vec<u32>, Vec<u32>) {
    let order = rank_order(facets);
    let worst: Vec<u32> = order.into_iter().take(k.min(facets.len())).collect();
    let vertices: BTreeSet<u32> = worst
        .iter()
        .flat_map(|&f| mesh.faces()[f as usize])
        .collect();
    (worst, vertices.into_iter().collect())
}

/// Computes PRI for every facet and selects the K facets most in need of a
/// new view, with their vertex union.
///
/// Facets are scored in parallel; the result is identical for any thread
/// count.
pub fn worst_facets(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    views: &ViewSet,
    metric: Metric,
    k: usize,
    subdivision: usize,
) -> Result<PriReport, PriError> {
    if k == 0 {
        return Err(PriError::BadK);
    }
    let grid = barycentric_grid(subdivision)?;
    let facets: Vec<FacetPri> = (0..mesh.face_count() as u32)
        .into_par_iter()
        .map(|face| {
            let visible = visible_views(mesh, bvh, views, face);
            pri_for_face(mesh, views, face, &grid, &visible, &|a, b| metric.similarity(a, b))
        })
        .collect();
    let (worst_facets, worst_vertices) = select_worst(mesh, &facets, k);
    Ok(PriReport { metric, k, facets, worst_facets, worst_vertices })
}

/// PRI cache that recomputes a facet only when its set of observing views
/// changes, for incrementally growing view sets.
///
/// The caller must extend the view set append-only between updates so cached
/// view indices keep meaning the same views.
pub struct IncrementalPri {
    metric: Metric,
    grid: Vec<[f64; 3]>,
    visible: Vec<Vec<usize>>,
    facets: Vec<FacetPri>,
}

impl IncrementalPri {
    pub fn new(metric: Metric, subdivision: usize) -> Result<IncrementalPri, PriError> {
        let grid = barycentric_grid(subdivision)?;
        Ok(IncrementalPri { metric, grid, visible: Vec::new(), facets: Vec::new() })
    }

    /// Refreshes the cache against the current views and returns how many
    /// facets were recomputed. After this, [`facets`](Self::facets) equals
    /// what a batch run over the same views would produce, bit for bit.
    pub fn update(&mut self, mesh: &TriangleMesh, bvh: &Bvh, views: &ViewSet) -> usize {
        if self.facets.len() != mesh.face_count() {
            self.visible.clear();
            self.facets.clear();
        }
        let metric = self.metric;
        let grid = &self.grid;
        let old_visible = &self.visible;
        let old_facets = &self.facets;
        let rows: Vec<(Vec<usize>, FacetPri, bool)> = (0..mesh.face_count() as u32)
            .into_par_iter()
            .map(|face| {
                let visible = visible_views(mesh, bvh, views, face);
                if old_visible.get(face as usize) == Some(&visible) {
                    (visible, old_facets[face as usize].clone(), false)
                } else {
                    let value = pri_for_face(mesh, views, face, grid, &visible, &|a, b| {
                        metric.similarity(a, b)
                    });
                    (visible, value, true)
                }
            })
            .collect();
        let mut recomputed = 0;
        self.visible = Vec::with_capacity(rows.len());
        self.facets = Vec::with_capacity(rows.len());
        for (visible, facet, fresh) in rows {
            recomputed += fresh as usize;
            self.visible.push(visible);
            self.facets.push(facet);
        }
        recomputed
    }

    pub fn facets(&self) -> &[FacetPri] {
        &self.facets
    }

    /// Builds the same report a batch [`worst_facets`] run would produce from
    /// the cached values.
    pub fn report(&self, mesh: &TriangleMesh, k: usize) -> Result<PriReport, PriError> {
        if k == 0 {
            return Err(PriError::BadK);
        }
        assert_eq!(self.facets.len(), mesh.face_count(), "cache matches this mesh");
        let (worst_facets, worst_vertices) = select_worst(mesh, &self.facets, k);
        Ok(PriReport {
            metric: self.metric,
            k,
            facets: self.facets.clone(),
            worst_facets,
            worst_vertices,
        })
    }
}

fn heat_color(t: f64) -> [u8; 3] {
    // hue 0 (red, worst) to 120 degrees (green, best) at full saturation
    let h = t.clamp(0.0, 1.0) * 2.0;
    let x = 1.0 - (h % 2.0 - 1.0).abs();
    let (r, g) = if h < 1.0 { (1.0, x) } else { (x, 1.0) };
    [(r * 255.0).round() as u8, (g * 255.0).round() as u8, 0]
}

/// Per-face heat-map colors: green for the best PRI in the report, red for
/// the worst, gray for undefined facets. All green when every defined PRI is
/// equal.
pub fn pri_face_colors(report: &PriReport) -> Vec<[u8; 3]> {
    let defined: Vec<f64> = report.facets.iter().filter_map(|f| f.pri).collect();
    let min = defined.iter().copied().fold(f64::INFINITY, f64::min);
    let max = defined.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report
        .facets
        .iter()
        .map(|f| match f.pri {
            None => [128, 128, 128],
            Some(v) => {
                let t = if max > min { (v - min) / (max - min) } else { 1.0 };
                heat_color(t)
            }
        })
        .collect()
}
