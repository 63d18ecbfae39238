//! Next-best-view planning from photo-consistency.
//!
//! The crate scores how consistently each facet of a triangle mesh is seen
//! across a set of posed images, finds the worst-reconstructed facets, and
//! ranks candidate camera poses by how much a new view would help: visibility
//! of the bad region, image-center framing, baseline-to-depth ratio against
//! the existing cameras, and viewing incidence. A small scene simulator
//! renders synthetic datasets and drives the full select-a-view loop.

pub mod bvh;
pub mod camera;
pub mod config;
pub mod energy;
pub mod image;
pub mod math;
pub mod mesh;
pub mod mesh_io;
pub mod patch;
pub mod pri;
pub mod simulator;

pub use bvh::{Bvh, Ray, RayHit};
pub use camera::{facet_visible, look_at, Camera, Intrinsics, PixelCoord, Pose};
pub use config::RunConfig;
pub use energy::{
    bessel_i0, select_best, total_energy, von_mises_log_density, EnergyModel, EnergyParams,
    EnergyReport, EnergyWeights, IncidenceSign,
};
pub use image::GrayImage;
pub use math::{Mat3, Vec3};
pub use mesh::TriangleMesh;
pub use patch::{ncc, sample_patch, ssd, CanonicalPatch, Metric};
pub use pri::{pri, worst_facets, FacetPri, PriReport};
pub use simulator::{candidate_ring, closed_loop, perturb, render, SceneSpec};
