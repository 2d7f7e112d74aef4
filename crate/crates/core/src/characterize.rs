//! Simulated characterization sweeps.
//!
//! The edge sweep holds the cup at a fixed height over a plate edge and
//! scans edge offset and yaw. The dome sweep pivots the cup about its lip
//! centre on domes of decreasing radius while regulating the normal force.
//! Each sweep point averages a dwell of noisy readings drawn from a stream
//! keyed by the point index, so points can be evaluated in any order.

use alloc::vec::Vec;

use crate::controller::{
    axial_step, cardinalize, grasp_success, lateral_direction, rotation_axis, ControllerParams,
};
use crate::cupmodel::{contact_state, CupGeometry, Scene, SceneKind};
use crate::error::{invalid, Result};
use crate::math;
use crate::pneumatics::{add_sensor_noise, solve_network, ChamberPressures, PumpModel};
use crate::rngs;
use crate::se3::{Pose, Rotation, Vec3};

const EDGE_STREAM: u64 = 1;
const DOME_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSweepSpec {
    /// Exposed lip lengths (m).
    pub deltas: Vec<f64>,
    /// Edge yaw angles (rad).
    pub yaws: Vec<f64>,
    /// Averaging window per point (s).
    pub dwell: f64,
    /// Normal force used to fix the sweep height at zero offset (N).
    pub press_force: f64,
}

impl Default for EdgeSweepSpec {
    fn default() -> Self {
        EdgeSweepSpec {
            deltas: (0..=23).map(|d| f64::from(d) * 1e-3).collect(),
            yaws: (0..=72).map(|k| f64::from(k * 5).to_radians()).collect(),
            dwell: 2.0,
            press_force: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomeSweepSpec {
    /// Dome radii (m); `None` is the flat plate.
    pub radii: Vec<Option<f64>>,
    /// Rotational offsets in sweep order (rad).
    pub gammas: Vec<f64>,
    pub dwell: f64,
    /// Axial offset of the lip plane above the apex where force regulation starts (m).
    pub start_offset: f64,
    /// Cap on axial regulation steps per angle.
    pub max_regulation_steps: usize,
}

impl Default for DomeSweepSpec {
    fn default() -> Self {
        DomeSweepSpec {
            radii: alloc::vec![None, Some(40e-3), Some(20e-3), Some(15e-3)],
            gammas: (0..=45).rev().map(|g| f64::from(g).to_radians()).collect(),
            dwell: 2.0,
            start_offset: 3e-3,
            max_regulation_steps: 5000,
        }
    }
}

fn check_dwell(dwell: f64) -> Result<()> {
    if dwell.is_finite() && dwell > 0.0 {
        Ok(())
    } else {
        Err(invalid("dwell must be positive"))
    }
}

impl EdgeSweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.yaws.is_empty() {
            return Err(invalid("edge sweep ranges must be non-empty"));
        }
        if self.deltas.iter().chain(&self.yaws).any(|v| !v.is_finite()) {
            return Err(invalid("edge sweep values must be finite"));
        }
        if !(self.press_force > 0.0) {
            return Err(invalid("press_force must be positive"));
        }
        check_dwell(self.dwell)
    }
}

impl DomeSweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.gammas.is_empty() {
            return Err(invalid("dome sweep ranges must be non-empty"));
        }
        if self
            .radii
            .iter()
            .flatten()
            .any(|r| !(r.is_finite() && *r > 0.0))
        {
            return Err(invalid("dome radii must be positive"));
        }
        if self.gammas.iter().any(|g| !g.is_finite()) {
            return Err(invalid("dome offsets must be finite"));
        }
        if self.max_regulation_steps == 0 {
            return Err(invalid("max_regulation_steps must be positive"));
        }
        check_dwell(self.dwell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepPoint {
    Edge {
        delta: f64,
        yaw: f64,
    },
    Dome {
        /// `None` is the flat plate.
        radius: Option<f64>,
        gamma: f64,
        /// Regulated normal force (N).
        force: f64,
        /// Regulated axial offset of the lip plane (m).
        offset: f64,
    },
}

/// One aggregated sweep point.
///
/// `e_deg` is present whenever the averaged reading yields a direction: it is
/// absent for indistinguishable points and for perfectly balanced readings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectionErrorRecord {
    pub point: SweepPoint,
    /// Dwell-averaged readings.
    pub pressures: ChamberPressures,
    pub dp_we: f64,
    pub dp_ns: f64,
    pub e_deg: Option<f64>,
    /// Error of the raw direction, ignoring the threshold rule.
    pub e_raw_deg: Option<f64>,
    pub indistinguishable: bool,
    /// Dwell readings with every chamber below threshold.
    pub thresholded: u32,
    pub samples: u32,
    /// Sealed points (grasp success), excluded from error statistics.
    pub omitted: bool,
}

/// In-plane unit vector from the cup centre toward the covered side of an
/// edge at yaw `yaw`.
pub fn true_lateral_direction(_delta: f64, yaw: f64) -> Vec3 {
    Vec3::new(math::sin(yaw), -math::cos(yaw), 0.0)
}

/// True rotation axis on the dome setup.
pub fn true_rotation_axis() -> Vec3 {
    Vec3::x()
}

fn error_deg(meas: Option<Vec3>, truth: &Vec3) -> Option<f64> {
    meas.map(|m| math::angle_between(&m, truth).to_degrees())
}

pub fn direction_error_lateral(v_meas: Option<Vec3>, v_true: &Vec3) -> Option<f64> {
    error_deg(v_meas, v_true)
}

pub fn direction_error_rotational(w_meas: Option<Vec3>, w_true: &Vec3) -> Option<f64> {
    error_deg(w_meas, w_true)
}

pub fn dwell_samples(dwell: f64, params: &ControllerParams) -> u32 {
    math::round(dwell * params.control_rate).max(1.0) as u32
}

struct Dwell {
    mean: ChamberPressures,
    thresholded: u32,
    samples: u32,
}

fn dwell_average(
    p: ChamberPressures,
    n: u32,
    pump: &PumpModel,
    params: &ControllerParams,
    seed: u64,
    key: &[u64],
) -> Dwell {
    if pump.noise_sigma == 0.0 {
        let t = if p.all_below(params.p_threshold) {
            n
        } else {
            0
        };
        return Dwell {
            mean: p,
            thresholded: t,
            samples: n,
        };
    }
    let mut rng = rngs::stream(seed, key);
    let mut sum = [0.0; 4];
    let mut thresholded = 0;
    for _ in 0..n {
        let q = add_sensor_noise(p, pump, &mut rng);
        if q.all_below(params.p_threshold) {
            thresholded += 1;
        }
        for i in 0..4 {
            sum[i] += q.0[i];
        }
    }
    Dwell {
        mean: ChamberPressures(sum.map(|s| s / f64::from(n))),
        thresholded,
        samples: n,
    }
}

fn lip_plane_pose(rotation: Rotation, offset: f64) -> Pose {
    Pose::new(rotation, rotation.column(2) * offset)
}

/// Lip-plane height over the plate at which the zero-offset edge scene
/// produces `force`, by bisection.
pub fn edge_height(geom: &CupGeometry, force: f64) -> Result<f64> {
    let scene = Scene::local(SceneKind::HalfPlaneEdge {
        edge_distance: geom.lip_outer_radius,
        yaw: 0.0,
    });
    let f = |z: f64| -> Result<f64> {
        Ok(contact_state(
            &Pose::from_translation(Vec3::new(0.0, 0.0, z)),
            &scene,
            geom,
        )?
        .normal_force)
    };
    let (mut lo, mut hi) = (-20e-3, 20e-3);
    if f(lo)? < force {
        return Err(invalid("press force unreachable within 20 mm"));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= force {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Fixed context for evaluating edge-sweep points independently.
#[derive(Debug, Clone)]
pub struct EdgeSweep<'a> {
    pub spec: &'a EdgeSweepSpec,
    pub geom: &'a CupGeometry,
    pub pump: &'a PumpModel,
    pub params: &'a ControllerParams,
    pub seed: u64,
    pub height: f64,
}

impl<'a> EdgeSweep<'a> {
    pub fn new(
        spec: &'a EdgeSweepSpec,
        geom: &'a CupGeometry,
        pump: &'a PumpModel,
        params: &'a ControllerParams,
        seed: u64,
    ) -> Result<Self> {
        spec.validate()?;
        geom.validate()?;
        pump.validate()?;
        params.validate()?;
        let height = edge_height(geom, spec.press_force)?;
        Ok(EdgeSweep {
            spec,
            geom,
            pump,
            params,
            seed,
            height,
        })
    }

    pub fn len(&self) -> usize {
        self.spec.deltas.len() * self.spec.yaws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Point `index` in delta-major order.
    pub fn point(&self, index: usize) -> Result<DirectionErrorRecord> {
        let ny = self.spec.yaws.len();
        let delta = self.spec.deltas[index / ny];
        let yaw = self.spec.yaws[index % ny];
        let scene = Scene::local(SceneKind::HalfPlaneEdge {
            edge_distance: self.geom.lip_outer_radius - delta,
            yaw,
        });
        let pose = Pose::from_translation(Vec3::new(0.0, 0.0, self.height));
        let contact = contact_state(&pose, &scene, self.geom)?;
        let p = solve_network(&contact, self.pump)?;
        let n = dwell_samples(self.spec.dwell, self.params);
        let d = dwell_average(
            p,
            n,
            self.pump,
            self.params,
            self.seed,
            &[EDGE_STREAM, index as u64],
        );
        let truth = true_lateral_direction(delta, yaw);
        let c = cardinalize(&d.mean);
        let raw = crate::controller::lateral_direction(
            &c,
            &d.mean,
            &ControllerParams {
                p_threshold: f64::NEG_INFINITY,
                ..self.params.clone()
            },
        );
        Ok(DirectionErrorRecord {
            point: SweepPoint::Edge { delta, yaw },
            pressures: d.mean,
            dp_we: c.dp_we,
            dp_ns: c.dp_ns,
            e_deg: direction_error_lateral(lateral_direction(&c, &d.mean, self.params), &truth),
            e_raw_deg: direction_error_lateral(raw, &truth),
            indistinguishable: d.mean.all_below(self.params.p_threshold),
            thresholded: d.thresholded,
            samples: d.samples,
            omitted: grasp_success(&d.mean, self.params),
        })
    }
}

pub fn run_edge_sweep(
    spec: &EdgeSweepSpec,
    geom: &CupGeometry,
    pump: &PumpModel,
    params: &ControllerParams,
    seed: u64,
) -> Result<Vec<DirectionErrorRecord>> {
    let sweep = EdgeSweep::new(spec, geom, pump, params, seed)?;
    (0..sweep.len()).map(|i| sweep.point(i)).collect()
}

fn dome_scene(radius: Option<f64>) -> Scene {
    Scene::local(match radius {
        Some(radius) => SceneKind::Dome { radius },
        None => SceneKind::FlatPlate,
    })
}

/// Steps the lip plane along `z_tool` until the force sits in the deadband.
/// Returns the regulated offset and force.
pub fn regulate_force(
    rotation: Rotation,
    mut offset: f64,
    scene: &Scene,
    geom: &CupGeometry,
    params: &ControllerParams,
    max_steps: usize,
) -> Result<(f64, f64)> {
    let mut force = 0.0;
    for _ in 0..max_steps {
        force = contact_state(&lip_plane_pose(rotation, offset), scene, geom)?.normal_force;
        let dz = axial_step(force, params);
        if dz == 0.0 {
            break;
        }
        offset += dz;
    }
    Ok((offset, force))
}

/// Runs one dome object through the whole offset sweep. Regulation carries
/// the axial offset from one angle to the next, as a pivoting arm would.
pub fn run_dome_object(
    radius_index: usize,
    spec: &DomeSweepSpec,
    geom: &CupGeometry,
    pump: &PumpModel,
    params: &ControllerParams,
    seed: u64,
) -> Result<Vec<DirectionErrorRecord>> {
    let radius = spec.radii[radius_index];
    let scene = dome_scene(radius);
    let n = dwell_samples(spec.dwell, params);
    let (mut offset, _) = regulate_force(
        Rotation::identity(),
        spec.start_offset,
        &scene,
        geom,
        params,
        spec.max_regulation_steps,
    )?;
    let truth = true_rotation_axis();
    let mut out = Vec::with_capacity(spec.gammas.len());
    for (k, gamma) in spec.gammas.iter().enumerate() {
        let rot = Rotation::about_x(*gamma);
        let (s, force) =
            regulate_force(rot, offset, &scene, geom, params, spec.max_regulation_steps)?;
        offset = s;
        let contact = contact_state(&lip_plane_pose(rot, offset), &scene, geom)?;
        let p = solve_network(&contact, pump)?;
        let key = [DOME_STREAM, radius_index as u64, k as u64];
        let d = dwell_average(p, n, pump, params, seed, &key);
        let c = cardinalize(&d.mean);
        let raw = rotation_axis(
            &c,
            &d.mean,
            &ControllerParams {
                p_threshold: f64::NEG_INFINITY,
                ..params.clone()
            },
        );
        out.push(DirectionErrorRecord {
            point: SweepPoint::Dome {
                radius,
                gamma: *gamma,
                force,
                offset,
            },
            pressures: d.mean,
            dp_we: c.dp_we,
            dp_ns: c.dp_ns,
            e_deg: direction_error_rotational(rotation_axis(&c, &d.mean, params), &truth),
            e_raw_deg: direction_error_rotational(raw, &truth),
            indistinguishable: d.mean.all_below(params.p_threshold),
            thresholded: d.thresholded,
            samples: d.samples,
            omitted: grasp_success(&d.mean, params),
        });
    }
    Ok(out)
}

pub fn run_dome_sweep(
    spec: &DomeSweepSpec,
    geom: &CupGeometry,
    pump: &PumpModel,
    params: &ControllerParams,
    seed: u64,
) -> Result<Vec<DirectionErrorRecord>> {
    spec.validate()?;
    geom.validate()?;
    pump.validate()?;
    params.validate()?;
    let mut out = Vec::new();
    for i in 0..spec.radii.len() {
        out.extend(run_dome_object(i, spec, geom, pump, params, seed)?);
    }
    Ok(out)
}

/// Largest offset, in sweep order, at which the cup first seals on the
/// object with `radius`.
pub fn critical_angle(table: &[DirectionErrorRecord], radius: Option<f64>) -> Option<f64> {
    table.iter().find_map(|r| match r.point {
        SweepPoint::Dome {
            radius: rr, gamma, ..
        } if rr == radius && r.omitted => Some(gamma),
        _ => None,
    })
}

/// Per-offset summary of an edge sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeSummary {
    pub delta: f64,
    /// Mean error over points with a direction, excluding sealed points.
    pub mean_e_deg: Option<f64>,
    pub max_e_deg: Option<f64>,
    /// Mean raw error with the threshold rule disabled.
    pub mean_e_raw_deg: Option<f64>,
    pub indistinguishable_rate: f64,
    pub points: usize,
}

fn edge_delta(r: &DirectionErrorRecord) -> Option<f64> {
    match r.point {
        SweepPoint::Edge { delta, .. } => Some(delta),
        _ => None,
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| s / n as f64)
}

/// Fraction of dwell readings with every chamber below threshold, per
/// edge offset, in first-seen order.
pub fn indistinguishable_rate(table: &[DirectionErrorRecord]) -> Vec<(f64, f64)> {
    summarize_edge(table)
        .into_iter()
        .map(|s| (s.delta, s.indistinguishable_rate))
        .collect()
}

pub fn summarize_edge(table: &[DirectionErrorRecord]) -> Vec<EdgeSummary> {
    let mut deltas: Vec<f64> = Vec::new();
    for d in table.iter().filter_map(edge_delta) {
        if !deltas.contains(&d) {
            deltas.push(d);
        }
    }
    deltas
        .into_iter()
        .map(|delta| {
            let rows: Vec<&DirectionErrorRecord> = table
                .iter()
                .filter(|r| edge_delta(r) == Some(delta))
                .collect();
            let kept = || rows.iter().filter(|r| !r.omitted);
            let (t, n) = rows.iter().fold((0u64, 0u64), |(t, n), r| {
                (t + u64::from(r.thresholded), n + u64::from(r.samples))
            });
            EdgeSummary {
                delta,
                mean_e_deg: mean(kept().filter_map(|r| r.e_deg)),
                max_e_deg: kept().filter_map(|r| r.e_deg).reduce(f64::max),
                mean_e_raw_deg: mean(kept().filter_map(|r| r.e_raw_deg)),
                indistinguishable_rate: if n == 0 { 0.0 } else { t as f64 / n as f64 },
                points: rows.len(),
            }
        })
        .collect()
}
