//! The four view-quality terms, the weighted per-vertex score, total energy
//! over the worst vertices, and argmax selection over candidate poses.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bvh::Bvh;
use crate::camera::Camera;
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::pri::PriReport;

#[derive(Debug, Error)]
pub enum EnergyError {
    #[error("invalid parameters: {message}")]
    InvalidParams { message: String },
    #[error("candidate {id:?} coincides with the scored surface point")]
    ZeroHeight { id: String },
    #[error("candidate {id:?} sits on the barycenter of facet {face}")]
    DegenerateRay { id: String, face: u32 },
    #[error("facet set for the incidence term is empty")]
    EmptyFaceSet,
    #[error("vertex {vertex} has no incident worst facet")]
    NoIncidentWorstFace { vertex: u32 },
    #[error("report has no worst vertices to score")]
    EmptyWorstSet,
    #[error("no candidates to rank")]
    NoCandidates,
}

/// Weights of the four scoring terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWeights {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
}

impl Default for EnergyWeights {
    fn default() -> Self {
        EnergyWeights { mu1: 0.6, mu2: 1.6, mu3: 2.1, mu4: 0.6 }
    }
}

impl EnergyWeights {
    pub fn validate(&self) -> Result<(), EnergyError> {
        for (name, v) in
            [("mu1", self.mu1), ("mu2", self.mu2), ("mu3", self.mu3), ("mu4", self.mu4)]
        {
            if !v.is_finite() || v < 0.0 {
                return Err(EnergyError::InvalidParams {
                    message: format!("weight {name} must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// Scoring constants shared by all terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Value a term takes when its condition fails. Strictly negative so one
    /// bad term drags the whole score down.
    pub penalty: f64,
    /// Base-to-height ratio below which a view pair is useless for
    /// triangulation.
    pub delta: f64,
    /// Preferred incidence angle between facet normal and viewing ray,
    /// degrees.
    pub mu_angle_deg: f64,
    /// Concentration of the incidence preference around `mu_angle_deg`.
    pub kappa: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams { penalty: -10.0, delta: 0.33, mu_angle_deg: 55.0, kappa: 8.0 }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let bad = |message: String| Err(EnergyError::InvalidParams { message });
        if !self.penalty.is_finite() || self.penalty >= 0.0 {
            return bad(format!("penalty must be negative, got {}", self.penalty));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must be in (0, 1), got {}", self.delta));
        }
        if !(self.mu_angle_deg > 0.0 && self.mu_angle_deg < 90.0) {
            return bad(format!("mu_angle_deg must be in (0, 90), got {}", self.mu_angle_deg));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return bad(format!("kappa must be positive, got {}", self.kappa));
        }
        Ok(())
    }
}

/// How the incidence term enters the score.
///
/// `Reward` adds it, so poses hitting the preferred incidence angle score
/// higher. `Cost` subtracts it instead.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncidenceSign {
    #[default]
    Reward,
    Cost,
}

impl std::fmt::Display for IncidenceSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IncidenceSign::Reward => "reward",
            IncidenceSign::Cost => "cost",
        })
    }
}

impl std::str::FromStr for IncidenceSign {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reward" => Ok(IncidenceSign::Reward),
            "cost" => Ok(IncidenceSign::Cost),
            other => Err(format!("unknown incidence sign {other:?} (reward, cost)")),
        }
    }
}

/// Modified Bessel function of the first kind, order zero.
///
/// Power series `Σ (x/2)^(2m) / (m!)²`, summed until a term falls below
/// 1e-15 of the running sum.
pub fn bessel_i0(x: f64) -> f64 {
    assert!(x >= 0.0 && x.is_finite(), "bessel_i0 domain is finite x >= 0");
    let half_sq = (x / 2.0) * (x / 2.0);
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut m = 0u32;
    loop {
        m += 1;
        term *= half_sq / (m as f64 * m as f64);
        sum += term;
        if term < 1e-15 * sum {
            return sum;
        }
    }
}

/// Log-density of the von Mises distribution with mean `mu` and
/// concentration `kappa`, at angle `x` (radians).
pub fn von_mises_log_density(x: f64, mu: f64, kappa: f64) -> f64 {
    kappa * (x - mu).cos() - (2.0 * std::f64::consts::PI * bessel_i0(kappa)).ln()
}

/// 1 when the vertex is in front of the candidate and the sight line to it is
/// clear (faces touching the vertex excluded); the penalty otherwise.
pub fn occlusion_term(
    mesh: &TriangleMesh,
    bvh: &Bvh,
    candidate: &Camera,
    vertex: u32,
    penalty: f64,
) -> f64 {
    let point = mesh.vertices()[vertex as usize];
    let in_front = candidate.project(point).is_some();
    if in_front
        && !bvh.segment_occluded(mesh, candidate.pose.center, point, mesh.incident_faces(vertex))
    {
        1.0
    } else {
        penalty
    }
}

/// Log of a 2D Gaussian centered on the image center (σ = W/3, H/3),
/// evaluated at the point's projection; the penalty when the point does not
/// project inside the image.
pub fn focus_term(candidate: &Camera, point: Vec3, penalty: f64) -> f64 {
    match candidate.project(point) {
        Some(px) if candidate.in_image(px) => {
            let i = &candidate.intrinsics;
            let sx = i.width as f64 / 3.0;
            let sy = i.height as f64 / 3.0;
            let du = px.u - i.cx;
            let dv = px.v - i.cy;
            -du * du / (2.0 * sx * sx) - dv * dv / (2.0 * sy * sy)
        }
        _ => penalty,
    }
}

/// 1 when the baseline to `other` exceeds `delta` times the candidate's
/// distance to the surface point; the penalty otherwise (including a
/// candidate on top of `other`, where the baseline is zero).
pub fn parallax_term(
    candidate: &Camera,
    other: &Camera,
    point: Vec3,
    delta: f64,
    penalty: f64,
) -> Result<f64, EnergyError> {
    let base = candidate.pose.center.distance(other.pose.center);
    let height = candidate.pose.center.distance(point);
    if height == 0.0 {
        return Err(EnergyError::ZeroHeight { id: candidate.id.clone() });
    }
    Ok(if base / height > delta { 1.0 } else { penalty })
}

/// Mean von Mises log-density of the incidence angle over the given facets.
///
/// The angle for a facet is between its normal and the unit ray from its
/// barycenter to the candidate center.
pub fn incidence_term(
    mesh: &TriangleMesh,
    candidate: &Camera,
    faces: &[u32],
    mu_angle_deg: f64,
    kappa: f64,
) -> Result<f64, EnergyError> {
    if faces.is_empty() {
        return Err(EnergyError::EmptyFaceSet);
    }
    let mu = mu_angle_deg.to_radians();
    let mut sum = 0.0;
    for &face in faces {
        let ray = candidate.pose.center - mesh.face_barycenter(face);
        let dir = ray.normalized().ok_or_else(|| EnergyError::DegenerateRay {
            id: candidate.id.clone(),
            face,
        })?;
        let x = mesh.face_normal(face).dot(dir).clamp(-1.0, 1.0).acos();
        sum += von_mises_log_density(x, mu, kappa);
    }
    Ok(sum / faces.len() as f64)
}

/// The four terms of one vertex under one candidate, and their weighted sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VertexEnergy {
    pub vertex: u32,
    #[serde(rename = "O")]
    pub occlusion: f64,
    #[serde(rename = "F")]
    pub focus: f64,
    /// Parallax summed over every existing camera.
    #[serde(rename = "Psum")]
    pub parallax_sum: f64,
    #[serde(rename = "I")]
    pub incidence: f64,
    pub nbv: f64,
}

/// One candidate's total energy with its per-vertex breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEnergy {
    pub id: String,
    #[serde(rename = "E")]
    pub total: f64,
    pub per_vertex: Vec<VertexEnergy>,
}

/// Ranking of all candidates, best first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyReport {
    pub winner: String,
    pub ranking: Vec<CandidateEnergy>,
    pub weights: EnergyWeights,
    pub params: EnergyParams,
    pub incidence_sign: IncidenceSign,
    /// Number of existing cameras; the parallax sum grows with it.
    pub camera_count: usize,
}

/// Everything fixed while candidates are scored: the scene, the existing
/// cameras, and the scoring constants.
#[derive(Debug, Clone, Copy)]
pub struct EnergyModel<'a> {
    pub mesh: &'a TriangleMesh,
    pub bvh: &'a Bvh,
    pub existing: &'a [Camera],
    pub weights: EnergyWeights,
    pub params: EnergyParams,
    pub incidence_sign: IncidenceSign,
}

impl EnergyModel<'_> {
    /// Weighted score of one worst vertex under one candidate, with the term
    /// breakdown. `incident_worst` lists the worst facets touching the
    /// vertex, which define its incidence angle.
    pub fn nbv_score(
        &self,
        candidate: &Camera,
        vertex: u32,
        incident_worst: &[u32],
    ) -> Result<VertexEnergy, EnergyError> {
        let point = self.mesh.vertices()[vertex as usize];
        let occlusion = occlusion_term(self.mesh, self.bvh, candidate, vertex, self.params.penalty);
        let focus = focus_term(candidate, point, self.params.penalty);
        let mut parallax_sum = 0.0;
        for other in self.existing {
            parallax_sum +=
                parallax_term(candidate, other, point, self.params.delta, self.params.penalty)?;
        }
        let incidence = incidence_term(
            self.mesh,
            candidate,
            incident_worst,
            self.params.mu_angle_deg,
            self.params.kappa,
        )?;
        let sign = match self.incidence_sign {
            IncidenceSign::Reward => 1.0,
            IncidenceSign::Cost => -1.0,
        };
        let w = &self.weights;
        let nbv = w.mu1 * occlusion
            + w.mu2 * focus
            + w.mu3 * parallax_sum
            + sign * (w.mu4 * incidence);
        Ok(VertexEnergy { vertex, occlusion, focus, parallax_sum, incidence, nbv })
    }
}

/// Sum of per-vertex scores over the report's worst vertices, in their stored
/// order.
pub fn total_energy(
    model: &EnergyModel,
    candidate: &Camera,
    report: &PriReport,
) -> Result<CandidateEnergy, EnergyError> {
    if report.worst_vertices.is_empty() {
        return Err(EnergyError::EmptyWorstSet);
    }
    let mut worst_faces = report.worst_facets.clone();
    worst_faces.sort_unstable();
    let mut per_vertex = Vec::with_capacity(report.worst_vertices.len());
    let mut total = 0.0;
    for &vertex in &report.worst_vertices {
        let incident: Vec<u32> = model
            .mesh
            .incident_faces(vertex)
            .iter()
            .copied()
            .filter(|f| worst_faces.binary_search(f).is_ok())
            .collect();
        if incident.is_empty() {
            return Err(EnergyError::NoIncidentWorstFace { vertex });
        }
        let entry = model.nbv_score(candidate, vertex, &incident)?;
        total += entry.nbv;
        per_vertex.push(entry);
    }
    Ok(CandidateEnergy { id: candidate.id.clone(), total, per_vertex })
}

/// Scores every candidate and ranks them by descending energy; ties keep the
/// candidates' input order, so the winner of a tie is the earliest candidate.
///
/// Candidates are scored in parallel; the ranking is identical for any thread
/// count.
pub fn select_best(
    model: &EnergyModel,
    candidates: &[Camera],
    report: &PriReport,
) -> Result<EnergyReport, EnergyError> {
    if candidates.is_empty() {
        return Err(EnergyError::NoCandidates);
    }
    model.weights.validate()?;
    model.params.validate()?;
    let mut scored: Vec<(usize, CandidateEnergy)> = candidates
        .par_iter()
        .enumerate()
        .map(|(i, c)| total_energy(model, c, report).map(|e| (i, e)))
        .collect::<Result<_, _>>()?;
    scored.sort_by(|a, b| b.1.total.total_cmp(&a.1.total).then(a.0.cmp(&b.0)));
    let ranking: Vec<CandidateEnergy> = scored.into_iter().map(|(_, e)| e).collect();
    Ok(EnergyReport {
        winner: ranking[0].id.clone(),
        ranking,
        weights: model.weights,
        params: model.params,
        incidence_sign: model.incidence_sign,
        camera_count: model.existing.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::camera::{look_at, Intrinsics, Pose};
    use crate::patch::Metric;

    #[test]
    fn bessel_matches_reference_values() {
        assert_eq!(bessel_i0(0.0), 1.0);
        assert!((bessel_i0(0.5) - 1.0634833707413235).abs() < 1e-12);
        assert!((bessel_i0(1.0) - 1.2660658777520083).abs() < 1e-12);
        assert!((bessel_i0(4.0) - 11.30192195213633).abs() < 1e-11);
        assert!((bessel_i0(8.0) - 427.5641157218048).abs() < 1e-9);
        assert!((bessel_i0(16.0) - 893446.227920105).abs() < 1e-3);
    }

    #[test]
    fn bessel_is_strictly_increasing() {
        let mut prev = bessel_i0(0.0);
        for i in 1..=64 {
            let next = bessel_i0(i as f64 * 0.25);
            assert!(next > prev);
            prev = next;
        }
    }

    #[test]
    fn von_mises_log_density_reference_points() {
        let mu = 55f64.to_radians();
        assert!((von_mises_log_density(mu, mu, 8.0) - 0.10401867816284057).abs() < 1e-12);
        let at_min = von_mises_log_density(mu + std::f64::consts::PI, mu, 8.0);
        assert!((at_min - -15.89598132183716).abs() < 1e-12);
        let a = 0.7;
        let sym = von_mises_log_density(mu + a, mu, 8.0)
            - von_mises_log_density(mu - a, mu, 8.0);
        assert!(sym.abs() < 1e-12);
    }

    fn frontal_camera(id: &str) -> Camera {
        let intrinsics =
            Intrinsics { width: 96, height: 96, fx: 32.0, fy: 32.0, cx: 48.0, cy: 48.0 };
        Camera::new(
            id.to_string(),
            intrinsics,
            Pose { rotation: crate::math::Mat3::IDENTITY, center: Vec3::ZERO },
        )
        .unwrap()
    }

    #[test]
    fn focus_is_exactly_half_sigma_squared_at_one_sigma() {
        let cam = frontal_camera("c");
        assert_eq!(focus_term(&cam, Vec3::new(0.0, 0.0, 1.0), -10.0), 0.0);
        assert_eq!(focus_term(&cam, Vec3::new(1.0, 0.0, 1.0), -10.0), -0.5);
        assert_eq!(focus_term(&cam, Vec3::new(5.0, 0.0, 1.0), -10.0), -10.0);
        assert_eq!(focus_term(&cam, Vec3::new(0.0, 0.0, -1.0), -10.0), -10.0);
    }

    #[test]
    fn parallax_boundary_is_a_penalty() {
        let a = frontal_camera("a");
        let mut b = frontal_camera("b");
        b.pose.center = Vec3::new(0.33, 0.0, 0.0);
        let point = Vec3::new(0.0, 0.0, 1.0);
        assert_eq!(parallax_term(&a, &b, point, 0.33, -10.0).unwrap(), -10.0);
        b.pose.center = Vec3::new(0.5, 0.0, 0.0);
        assert_eq!(parallax_term(&a, &b, point, 0.33, -10.0).unwrap(), 1.0);
        b.pose.center = Vec3::new(0.2, 0.0, 0.0);
        assert_eq!(parallax_term(&a, &b, point, 0.33, -10.0).unwrap(), -10.0);
        assert!(matches!(
            parallax_term(&a, &b, Vec3::ZERO, 0.33, -10.0),
            Err(EnergyError::ZeroHeight { .. })
        ));
    }

    fn square_mesh() -> TriangleMesh {
        let vertices = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
        ];
        TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]]).unwrap()
    }

    fn looking_at_origin(id: &str, eye: Vec3) -> Camera {
        let intrinsics =
            Intrinsics { width: 64, height: 64, fx: 48.0, fy: 48.0, cx: 32.0, cy: 32.0 };
        Camera::new(id.to_string(), intrinsics, look_at(eye, Vec3::ZERO, Vec3::new(0.0, 1.0, 0.0)))
            .unwrap()
    }

    fn report_for(mesh: &TriangleMesh) -> PriReport {
        use crate::pri::FacetPri;
        PriReport {
            metric: Metric::Ssd,
            k: 2,
            facets: vec![
                FacetPri { face: 0, pri: Some(-1.0), views: 2, defined: true },
                FacetPri { face: 1, pri: Some(-2.0), views: 2, defined: true },
            ],
            worst_facets: vec![1, 0],
            worst_vertices: (0..mesh.vertex_count() as u32).collect(),
        }
    }

    #[test]
    fn occlusion_sees_through_free_space_and_not_through_walls() {
        let mut vertices = vec![
            Vec3::new(-1.0, -1.0, 0.0),
            Vec3::new(1.0, -1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(-1.0, 1.0, 0.0),
        ];
        // wall strictly between the camera at z=5 and vertex 0
        vertices.extend([
            Vec3::new(-3.0, -3.0, 2.0),
            Vec3::new(2.0, -3.0, 2.0),
            Vec3::new(-3.0, 2.0, 2.0),
        ]);
        let mesh = TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3], [4, 5, 6]]).unwrap();
        let bvh = Bvh::build(&mesh);
        let cam = looking_at_origin("c", Vec3::new(0.0, 0.0, 5.0));
        assert_eq!(occlusion_term(&mesh, &bvh, &cam, 0, -10.0), -10.0);
        assert_eq!(occlusion_term(&mesh, &bvh, &cam, 2, -10.0), 1.0);
    }

    #[test]
    fn total_energy_is_the_sum_of_vertex_scores() {
        let mesh = square_mesh();
        let bvh = Bvh::build(&mesh);
        let existing = vec![looking_at_origin("e0", Vec3::new(3.0, 0.0, 4.0))];
        let model = EnergyModel {
            mesh: &mesh,
            bvh: &bvh,
            existing: &existing,
            weights: EnergyWeights::default(),
            params: EnergyParams::default(),
            incidence_sign: IncidenceSign::Reward,
        };
        let report = report_for(&mesh);
        let candidate = looking_at_origin("cand", Vec3::new(0.0, 3.0, 4.0));
        let entry = total_energy(&model, &candidate, &report).unwrap();
        assert_eq!(entry.per_vertex.len(), 4);
        let sum: f64 = entry.per_vertex.iter().map(|v| v.nbv).sum();
        assert!((entry.total - sum).abs() < 1e-12);
        for v in &entry.per_vertex {
            let recomposed = 0.6 * v.occlusion + 1.6 * v.focus + 2.1 * v.parallax_sum
                + 0.6 * v.incidence;
            assert!((v.nbv - recomposed).abs() < 1e-12);
        }
    }

    #[test]
    fn cost_sign_flips_the_incidence_contribution() {
        let mesh = square_mesh();
        let bvh = Bvh::build(&mesh);
        let existing: Vec<Camera> = vec![];
        let mut model = EnergyModel {
            mesh: &mesh,
            bvh: &bvh,
            existing: &existing,
            weights: EnergyWeights::default(),
            params: EnergyParams::default(),
            incidence_sign: IncidenceSign::Reward,
        };
        let report = report_for(&mesh);
        let candidate = looking_at_origin("cand", Vec3::new(0.0, 3.0, 4.0));
        let reward = total_energy(&model, &candidate, &report).unwrap();
        model.incidence_sign = IncidenceSign::Cost;
        let literal = total_energy(&model, &candidate, &report).unwrap();
        for (r, l) in reward.per_vertex.iter().zip(&literal.per_vertex) {
            assert_eq!(r.incidence, l.incidence);
            let diff = r.nbv - l.nbv;
            assert!((diff - 2.0 * 0.6 * r.incidence).abs() < 1e-12);
        }
    }

    #[test]
    fn select_best_breaks_ties_by_input_order() {
        let mesh = square_mesh();
        let bvh = Bvh::build(&mesh);
        let existing = vec![looking_at_origin("e0", Vec3::new(3.0, 0.0, 4.0))];
        let model = EnergyModel {
            mesh: &mesh,
            bvh: &bvh,
            existing: &existing,
            weights: EnergyWeights::default(),
            params: EnergyParams::default(),
            incidence_sign: IncidenceSign::Reward,
        };
        let report = report_for(&mesh);
        // mirror-image candidates score identically by symmetry
        let candidates = vec![
            looking_at_origin("first", Vec3::new(0.0, 3.0, 4.0)),
            looking_at_origin("second", Vec3::new(0.0, -3.0, 4.0)),
        ];
        let result = select_best(&model, &candidates, &report).unwrap();
        assert_eq!(result.ranking.len(), 2);
        if (result.ranking[0].total - result.ranking[1].total).abs() < 1e-15 {
            assert_eq!(result.winner, "first");
        }
        assert!(result.ranking[0].total >= result.ranking[1].total);
        assert_eq!(result.camera_count, 1);
        assert!(matches!(
            select_best(&model, &[], &report),
            Err(EnergyError::NoCandidates)
        ));
    }

    #[test]
    fn zero_weights_zero_every_score() {
        let mesh = square_mesh();
        let bvh = Bvh::build(&mesh);
        let existing = vec![looking_at_origin("e0", Vec3::new(3.0, 0.0, 4.0))];
        let model = EnergyModel {
            mesh: &mesh,
            bvh: &bvh,
            existing: &existing,
            weights: EnergyWeights { mu1: 0.0, mu2: 0.0, mu3: 0.0, mu4: 0.0 },
            params: EnergyParams::default(),
            incidence_sign: IncidenceSign::Reward,
        };
        let report = report_for(&mesh);
        let candidate = looking_at_origin("cand", Vec3::new(0.0, 3.0, 4.0));
        let entry = total_energy(&model, &candidate, &report).unwrap();
        assert_eq!(entry.total, 0.0);
    }

    #[test]
    fn params_validation_rejects_out_of_range_values() {
        assert!(EnergyParams::default().validate().is_ok());
        assert!(EnergyParams { penalty: 0.0, ..Default::default() }.validate().is_err());
        assert!(EnergyParams { delta: 1.0, ..Default::default() }.validate().is_err());
        assert!(EnergyParams { mu_angle_deg: 90.0, ..Default::default() }.validate().is_err());
        assert!(EnergyParams { kappa: 0.0, ..Default::default() }.validate().is_err());
        assert!(EnergyWeights { mu1: -0.1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn incidence_sign_round_trips_through_strings() {
        for sign in [IncidenceSign::Reward, IncidenceSign::Cost] {
            let s = sign.to_string();
            assert_eq!(s.parse::<IncidenceSign>().unwrap(), sign);
            let json = serde_json::to_string(&sign).unwrap();
            assert_eq!(serde_json::from_str::<IncidenceSign>(&json).unwrap(), sign);
        }
        assert_eq!(serde_json::to_string(&IncidenceSign::Cost).unwrap(), "\"cost\"");
    }
}
