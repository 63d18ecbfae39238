//! The four subcommands and their shared file plumbing.
//!
//! Exit codes: 0 success, 2 bad usage or bad input, 1 internal failure.
//! Outputs are byte-identical across reruns and thread counts.

use std::path::Path;

use nbv_core::camera::{load_cameras, save_cameras};
use nbv_core::energy::EnergyError;
use nbv_core::image::{load_gray, save_gray, save_pgm, GrayImage};
use nbv_core::mesh_io::{load_mesh, save_colored_ply, save_mesh};
use nbv_core::pri::{pri_face_colors, View, ViewSet};
use nbv_core::simulator::{load_scene, ClosedLoopRun, SimulatorError};
use nbv_core::{
    candidate_ring, closed_loop, render, select_best, worst_facets, Bvh, Camera, EnergyModel,
    PriReport, RunConfig, SceneSpec, TriangleMesh,
};

use crate::args::{Command, NbvArgs, PriArgs, RenderArgs, SimulateArgs};

/// A command failure carrying the process exit code.
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn input(err: impl std::fmt::Display) -> Failure {
        Failure { code: 2, message: err.to_string() }
    }

    pub fn internal(err: impl std::fmt::Display) -> Failure {
        Failure { code: 1, message: err.to_string() }
    }
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Pri(args) => cmd_pri(&args),
        Command::Nbv(args) => cmd_nbv(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Render(args) => cmd_render(&args),
    }
}

/// Caps rayon's worker count when `--threads` or the config file asks for it.
fn init_threads(config: &RunConfig) -> Result<(), Failure> {
    if let Some(n) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(Failure::internal)?;
    }
    Ok(())
}

fn load_camera_image(dir: &Path, id: &str) -> Result<GrayImage, Failure> {
    for ext in ["pgm", "png", "ppm"] {
        let path = dir.join(format!("{id}.{ext}"));
        if path.exists() {
            return load_gray(&path).map_err(Failure::input);
        }
    }
    Err(Failure::input(format!(
        "no image for camera {id:?} in {}: tried {id}.pgm, {id}.png, {id}.ppm",
        dir.display()
    )))
}

fn load_views(cameras: &[Camera], images_dir: &Path) -> Result<ViewSet, Failure> {
    let mut views = Vec::with_capacity(cameras.len());
    for camera in cameras {
        let image = load_camera_image(images_dir, &camera.id)?;
        views.push(View { camera: camera.clone(), image });
    }
    ViewSet::new(views).map_err(Failure::input)
}

fn score_facets(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    views: &ViewSet,
    config: &RunConfig,
) -> Result<PriReport, Failure> {
    worst_facets(mesh, bvh, views, config.metric, config.k, config.patch_subdivision)
        .map_err(Failure::internal)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(Failure::internal)?;
    text.push('\n');
    std::fs::write(path, text)
        .map_err(|e| Failure::internal(format!("failed to write {}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| Failure::internal(format!("failed to create {}: {e}", dir.display())))
}

fn energy_failure(err: EnergyError) -> Failure {
    match err {
        EnergyError::NoCandidates
        | EnergyError::InvalidParams { .. }
        | EnergyError::ZeroHeight { .. }
        | EnergyError::DegenerateRay { .. } => Failure::input(err),
        _ => Failure::internal(err),
    }
}

fn simulator_failure(err: SimulatorError) -> Failure {
    match err {
        SimulatorError::Pri(inner) => Failure::internal(inner),
        SimulatorError::Energy(inner) => energy_failure(inner),
        other => Failure::input(other),
    }
}

fn cmd_pri(args: &PriArgs) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    init_threads(&config)?;
    let mesh = load_mesh(&args.mesh).map_err(Failure::input)?;
    let cameras = load_cameras(&args.cameras).map_err(Failure::input)?;
    let views = load_views(&cameras, &args.images)?;
    let bvh = Bvh::build(&mesh);
    let report = score_facets(&mesh, &bvh, &views, &config)?;
    if report.facets.iter().all(|f| !f.defined) {
        log::warn!("no facet is visible in two or more views; every PRI is undefined");
    }
    ensure_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("pri.json"), &report)?;
    save_colored_ply(&args.out_dir.join("pri_colored.ply"), &mesh, &pri_face_colors(&report))
        .map_err(Failure::internal)?;
    log::info!(
        "scored {} facets ({} defined) from {} views",
        report.facets.len(),
        report.facets.iter().filter(|f| f.defined).count(),
        views.len()
    );
    Ok(())
}

fn cmd_nbv(args: &NbvArgs) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    init_threads(&config)?;
    let mesh = load_mesh(&args.mesh).map_err(Failure::input)?;
    let existing = load_cameras(&args.cameras).map_err(Failure::input)?;
    let views = load_views(&existing, &args.images)?;
    let candidates = load_cameras(&args.candidates).map_err(Failure::input)?;
    if candidates.is_empty() {
        return Err(Failure::input(format!(
            "candidate file {} contains no cameras",
            args.candidates.display()
        )));
    }
    let bvh = Bvh::build(&mesh);
    let report = score_facets(&mesh, &bvh, &views, &config)?;
    let model = EnergyModel {
        mesh: &mesh,
        bvh: &bvh,
        existing: &existing,
        weights: config.weights,
        params: config.params,
        incidence_sign: config.incidence_sign,
    };
    let energy = select_best(&model, &candidates, &report).map_err(energy_failure)?;
    ensure_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("nbv.json"), &energy)?;
    println!("{}", energy.winner);
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    init_threads(&config)?;
    let scene = match &args.scene {
        Some(path) => load_scene(path).map_err(Failure::input)?,
        None => SceneSpec::demo(config.seed),
    };
    let run = closed_loop(&scene, args.initial_views, args.iterations, &config)
        .map_err(simulator_failure)?;
    write_dataset(&args.out_dir, &run)?;
    log::info!(
        "ran {} iterations; dataset and log.jsonl written to {}",
        args.iterations,
        args.out_dir.display()
    );
    Ok(())
}

/// Writes a closed-loop run as a dataset the `pri` and `nbv` commands can
/// consume: base mesh, acquired cameras and images, leftover candidates, and
/// the per-iteration log.
fn write_dataset(out_dir: &Path, run: &ClosedLoopRun) -> Result<(), Failure> {
    let images_dir = out_dir.join("images");
    ensure_dir(&images_dir)?;
    save_mesh(&out_dir.join("mesh.ply"), &run.base_mesh).map_err(Failure::internal)?;
    save_cameras(&out_dir.join("cameras.json"), &run.views).map_err(Failure::internal)?;
    save_cameras(&out_dir.join("candidates.json"), &run.remaining).map_err(Failure::internal)?;
    for (camera, image) in run.views.iter().zip(&run.images) {
        save_pgm(&images_dir.join(format!("{}.pgm", camera.id)), image)
            .map_err(Failure::internal)?;
    }
    let mut log = String::new();
    for record in &run.records {
        log.push_str(&serde_json::to_string(record).map_err(Failure::internal)?);
        log.push('\n');
    }
    let log_path = out_dir.join("log.jsonl");
    std::fs::write(&log_path, log)
        .map_err(|e| Failure::internal(format!("failed to write {}: {e}", log_path.display())))
}

fn cmd_render(args: &RenderArgs) -> Result<(), Failure> {
    let config = args.config.resolve()?;
    init_threads(&config)?;
    let extension = args
        .out
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    if extension != "pgm" && extension != "png" {
        return Err(Failure::input(format!(
            "unsupported output extension {extension:?} for {} (expected pgm or png)",
            args.out.display()
        )));
    }
    let scene = load_scene(&args.scene).map_err(Failure::input)?;
    let cameras = match &args.cameras {
        Some(path) => load_cameras(path).map_err(Failure::input)?,
        None => scene_ring(&scene)?,
    };
    let camera = match &args.camera_id {
        Some(id) => cameras
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| {
                Failure::input(format!("no camera {id:?} among the {} available", cameras.len()))
            })?,
        None if cameras.len() == 1 => &cameras[0],
        None => {
            return Err(Failure::input(format!(
                "{} cameras available; pick one with --camera-id",
                cameras.len()
            )))
        }
    };
    let image = render(&scene, camera).map_err(simulator_failure)?;
    save_gray(&args.out, &image).map_err(Failure::internal)?;
    Ok(())
}

/// The ring of candidate poses a scene defines, centered on its mesh.
fn scene_ring(scene: &SceneSpec) -> Result<Vec<Camera>, Failure> {
    let base = scene.build_mesh().map_err(simulator_failure)?;
    let (lo, hi) = base.bounds();
    candidate_ring(
        (lo + hi) / 2.0,
        scene.ring.radius,
        scene.ring.count,
        scene.ring.elevation_deg,
        scene.intrinsics(),
    )
    .map_err(simulator_failure)
}
