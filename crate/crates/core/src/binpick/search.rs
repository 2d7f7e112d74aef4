//! One grasp attempt: approach, search phase, lift test, and failure
//! classification.

use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use super::planner::GraspCandidate;
use super::suite::BinObject;
use crate::controller::{self, axial_step, ControllerParams};
use crate::cupmodel::{contact_state, CupGeometry};
use crate::error::{invalid, Result};
use crate::math;
use crate::pneumatics::{add_sensor_noise, solve_network, ChamberPressures, PumpModel};
use crate::se3::{compose_transform, Pose, Rotation, Vec3};

/// Search strategy applied after contact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SearchMode {
    /// Planner only: succeed at contact or fail.
    None,
    /// Random lateral walk with force regulation.
    Brownian,
    /// Haptic search with a fixed blend weight.
    Alpha(f64),
    /// Haptic search switching between two weights every `period` seconds.
    Alternating {
        first: f64,
        second: f64,
        period: f64,
    },
}

/// The five preset weights, indexed from 1.
pub const ALPHA_PRESETS: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

impl SearchMode {
    /// Parses `none`, `brownian`, `alpha1`..`alpha5`, `alpha1&5` or `alpha=<x>`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "none" => return Ok(SearchMode::None),
            "brownian" => return Ok(SearchMode::Brownian),
            "alpha1&5" => {
                return Ok(SearchMode::Alternating {
                    first: ALPHA_PRESETS[0],
                    second: ALPHA_PRESETS[4],
                    period: 0.5,
                })
            }
            _ => {}
        }
        if let Some(v) = s.strip_prefix("alpha=") {
            let a: f64 = v
                .parse()
                .map_err(|_| invalid(alloc::format!("bad alpha value {v:?}")))?;
            if !(0.0..=1.0).contains(&a) {
                return Err(invalid(alloc::format!("alpha {a} outside [0, 1]")));
            }
            return Ok(SearchMode::Alpha(a));
        }
        if let Some(v) = s.strip_prefix("alpha") {
            if let Ok(i @ 1..=5) = v.parse::<usize>() {
                return Ok(SearchMode::Alpha(ALPHA_PRESETS[i - 1]));
            }
        }
        Err(invalid(alloc::format!("unknown search mode {s:?}")))
    }

    /// Inverse of [`SearchMode::parse`].
    pub fn label(&self) -> String {
        match *self {
            SearchMode::None => "none".into(),
            SearchMode::Brownian => "brownian".into(),
            SearchMode::Alpha(a) => match ALPHA_PRESETS.iter().position(|p| *p == a) {
                Some(i) => alloc::format!("alpha{}", i + 1),
                None => alloc::format!("alpha={a}"),
            },
            SearchMode::Alternating {
                first,
                second,
                period,
            } if first == ALPHA_PRESETS[0] && second == ALPHA_PRESETS[4] && period == 0.5 => {
                "alpha1&5".into()
            }
            SearchMode::Alternating {
                first,
                second,
                period,
            } => alloc::format!("alternating({first},{second},{period})"),
        }
    }

    /// Blend weight in effect at search time `t`, if the mode is haptic.
    pub fn alpha_at(&self, t: f64) -> Option<f64> {
        match *self {
            SearchMode::Alpha(a) => Some(a),
            SearchMode::Alternating {
                first,
                second,
                period,
            } => {
                let phase = math::floor(t / period + 1e-9) as i64;
                Some(if phase % 2 == 0 { first } else { second })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchLimits {
    /// Distance of `O` from its contact position (m).
    pub max_displacement: f64,
    /// Rotation from the contact orientation (rad).
    pub max_rotation: f64,
    /// s.
    pub max_time: f64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits {
            max_displacement: 0.03,
            max_rotation: 45_f64.to_radians(),
            max_time: 15.0,
        }
    }
}

impl SearchLimits {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if pos(self.max_displacement) && pos(self.max_rotation) && pos(self.max_time) {
            Ok(())
        } else {
            Err(invalid("search limits must be positive"))
        }
    }

    /// Number of control periods in the time limit.
    pub fn max_steps(&self, params: &ControllerParams) -> u32 {
        math::round(self.max_time / params.period()) as u32
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproachParams {
    /// Stand-off along the estimated normal before descending (m).
    pub offset: f64,
    /// Total descent allowed before declaring no contact (m).
    pub travel: f64,
    pub step: f64,
}

impl Default for ApproachParams {
    fn default() -> Self {
        ApproachParams {
            offset: 0.015,
            travel: 0.03,
            step: 0.1e-3,
        }
    }
}

impl ApproachParams {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if pos(self.offset) && pos(self.travel) && pos(self.step) {
            Ok(())
        } else {
            Err(invalid("approach parameters must be positive"))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiftParams {
    pub gravity: f64,
    /// Radius of the sealed area carrying the load (m).
    pub seal_radius: f64,
    /// Also require the seal to resist the tipping moment of an off-centre load.
    pub moment_check: bool,
}

impl Default for LiftParams {
    fn default() -> Self {
        LiftParams {
            gravity: 9.81,
            seal_radius: 0.0085,
            moment_check: true,
        }
    }
}

impl LiftParams {
    pub fn validate(&self) -> Result<()> {
        if self.gravity > 0.0 && self.seal_radius > 0.0 {
            Ok(())
        } else {
            Err(invalid("lift parameters must be positive"))
        }
    }

    /// Largest mass held at mean vacuum `p` (kg).
    pub fn capacity(&self, p: f64) -> f64 {
        p * core::f64::consts::PI * self.seal_radius * self.seal_radius / self.gravity
    }
}

/// Thresholds of the failure classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierParams {
    /// Trailing window for smoothing readings before thresholding (steps).
    pub smoothing_window: usize,
    /// Fraction of thresholded steps that marks a search as blind.
    pub thresholded_fraction: f64,
    /// Interval between position samples for revisit detection (s).
    pub revisit_interval: f64,
    /// Minimum age of a sample before it can be revisited (s).
    pub revisit_min_age: f64,
    pub revisit_radius: f64,
    /// Revisits above this count mark an oscillating search.
    pub revisit_count: u32,
    /// Object travel that marks the cup as dragging the object (m).
    pub object_shift: f64,
    /// Breach with peak mean vacuum below this means no seal was ever near (Pa).
    pub unfeasible_peak: f64,
}

impl Default for ClassifierParams {
    fn default() -> Self {
        ClassifierParams {
            smoothing_window: 25,
            thresholded_fraction: 0.9,
            revisit_interval: 0.5,
            revisit_min_age: 1.0,
            revisit_radius: 1e-3,
            revisit_count: 3,
            object_shift: 0.01,
            unfeasible_peak: 2000.0,
        }
    }
}

impl ClassifierParams {
    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window == 0
            || !(0.0..=1.0).contains(&self.thresholded_fraction)
            || !(self.revisit_interval > 0.0
                && self.revisit_min_age >= 0.0
                && self.revisit_radius > 0.0
                && self.object_shift > 0.0
                && self.unfeasible_peak >= 0.0)
        {
            return Err(invalid("classifier parameters out of range"));
        }
        Ok(())
    }
}

/// Everything a single attempt needs besides the object and candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct AttemptParams {
    pub geometry: CupGeometry,
    pub pump: PumpModel,
    pub controller: ControllerParams,
    pub limits: SearchLimits,
    pub approach: ApproachParams,
    pub lift: LiftParams,
    pub classifier: ClassifierParams,
    /// Target sample std of the Brownian walk's distance after `max_time` (m).
    pub brownian_distance_std: f64,
    /// Keep per-step rows in the log.
    pub record_steps: bool,
}

impl Default for AttemptParams {
    fn default() -> Self {
        AttemptParams {
            geometry: CupGeometry::default(),
            pump: PumpModel::default(),
            controller: ControllerParams::default(),
            limits: SearchLimits::default(),
            approach: ApproachParams::default(),
            lift: LiftParams::default(),
            classifier: ClassifierParams::default(),
            brownian_distance_std: 0.03,
            record_steps: false,
        }
    }
}

impl AttemptParams {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.pump.validate()?;
        self.controller.validate()?;
        self.limits.validate()?;
        self.approach.validate()?;
        self.lift.validate()?;
        self.classifier.validate()?;
        if !(self.brownian_distance_std.is_finite() && self.brownian_distance_std >= 0.0) {
            return Err(invalid("brownian distance std must be non-negative"));
        }
        Ok(())
    }

    /// Per-axis lateral step sigma of the Brownian walk.
    pub fn brownian_step_sigma(&self) -> f64 {
        brownian_step_sigma(
            self.brownian_distance_std,
            self.limits.max_steps(&self.controller),
        )
    }
}

/// Per-axis step sigma such that the planar distance after `n` steps has
/// standard deviation `distance_std`. The distance is Rayleigh with scale
/// `sigma * sqrt(n)`, whose std is that scale times `sqrt((4 - pi) / 2)`.
pub fn brownian_step_sigma(distance_std: f64, n: u32) -> f64 {
    let rayleigh = math::sqrt((4.0 - core::f64::consts::PI) / 2.0);
    distance_std / (rayleigh * math::sqrt(f64::from(n.max(1))))
}

/// Lateral Brownian increment `(dx, dy)`.
pub fn brownian_increment<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> (f64, f64) {
    let dx: f64 = rng.sample(StandardNormal);
    let dy: f64 = rng.sample(StandardNormal);
    (dx * sigma, dy * sigma)
}

/// Planar distance after a free walk of `n` increments.
pub fn brownian_distance<R: Rng + ?Sized>(sigma: f64, n: u32, rng: &mut R) -> f64 {
    let (mut x, mut y) = (0.0, 0.0);
    for _ in 0..n {
        let (dx, dy) = brownian_increment(sigma, rng);
        x += dx;
        y += dy;
    }
    math::sqrt(x * x + y * y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FailureClass {
    UnfeasibleSurface,
    HapticOscillation,
    BrokenSeal,
    NoHapticInfo,
    IneffectiveSearch,
    GhostGeometry,
    ConstantRelativePose,
    TimeoutOther,
}

impl FailureClass {
    pub const ALL: [FailureClass; 8] = [
        FailureClass::UnfeasibleSurface,
        FailureClass::HapticOscillation,
        FailureClass::BrokenSeal,
        FailureClass::NoHapticInfo,
        FailureClass::IneffectiveSearch,
        FailureClass::GhostGeometry,
        FailureClass::ConstantRelativePose,
        FailureClass::TimeoutOther,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            FailureClass::UnfeasibleSurface => "unfeasible-surface",
            FailureClass::HapticOscillation => "haptic-oscillation",
            FailureClass::BrokenSeal => "broken-seal",
            FailureClass::NoHapticInfo => "no-haptic-info",
            FailureClass::IneffectiveSearch => "ineffective-search",
            FailureClass::GhostGeometry => "ghost-geometry",
            FailureClass::ConstantRelativePose => "constant-relative-pose",
            FailureClass::TimeoutOther => "timeout-other",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure(FailureClass),
}

impl Outcome {
    pub fn is_success(&self) -> bool {
        matches!(self, Outcome::Success)
    }

    pub fn failure_class(&self) -> Option<FailureClass> {
        match self {
            Outcome::Success => None,
            Outcome::Failure(c) => Some(*c),
        }
    }
}

/// Why the attempt stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndReason {
    Sealed,
    LiftFailed,
    NoContact,
    DisplacementLimit,
    RotationLimit,
    Timeout,
    /// No search strategy and no seal at contact.
    NoSearch,
}

impl EndReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            EndReason::Sealed => "sealed",
            EndReason::LiftFailed => "lift-failed",
            EndReason::NoContact => "no-contact",
            EndReason::DisplacementLimit => "displacement-limit",
            EndReason::RotationLimit => "rotation-limit",
            EndReason::Timeout => "timeout",
            EndReason::NoSearch => "no-search",
        }
    }

    pub fn is_breach(&self) -> bool {
        matches!(
            self,
            EndReason::DisplacementLimit | EndReason::RotationLimit
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRow {
    pub t: f64,
    pub position: Vec3,
    /// Rotation vector of the tool orientation (rad).
    pub rotation: Vec3,
    pub pressures: ChamberPressures,
    pub f_z: f64,
    /// Commanded tool-frame translation (m).
    pub command_translation: Vec3,
    /// Commanded tool-frame rotation vector (rad).
    pub command_rotation: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    /// Planner proposal; absent when the search was started directly.
    pub candidate: Option<GraspCandidate>,
    /// Pose at first contact, if contact was made.
    pub contact: Option<Pose>,
    pub final_pose: Option<Pose>,
    /// Per-step rows; empty unless recording was requested.
    pub steps: Vec<StepRow>,
    /// Control periods evaluated during search.
    pub n_steps: u32,
    pub duration: f64,
    pub max_displacement: f64,
    pub max_rotation: f64,
    /// Largest commanded translation of `O` in one period (m).
    pub max_step_translation: f64,
    /// Largest commanded rotation in one period (rad).
    pub max_step_rotation: f64,
    /// Distance the object was dragged during the search (m).
    pub object_shift: f64,
    /// Fraction of steps whose smoothed readings were all below threshold.
    pub thresholded_fraction: f64,
    pub revisits: u32,
    pub peak_mean_pressure: f64,
    pub final_mean_pressure: f64,
    pub end: EndReason,
    pub outcome: Outcome,
}

impl EpisodeLog {
    fn empty(end: EndReason) -> Self {
        EpisodeLog {
            candidate: None,
            contact: None,
            final_pose: None,
            steps: Vec::new(),
            n_steps: 0,
            duration: 0.0,
            max_displacement: 0.0,
            max_rotation: 0.0,
            max_step_translation: 0.0,
            max_step_rotation: 0.0,
            object_shift: 0.0,
            thresholded_fraction: 0.0,
            revisits: 0,
            peak_mean_pressure: 0.0,
            final_mean_pressure: 0.0,
            end,
            outcome: Outcome::Failure(FailureClass::GhostGeometry),
        }
    }
}

/// Descends along the estimated normal from the stand-off until the
/// normal force reaches `f_min`. `None` when the travel budget runs out.
pub fn approach(
    candidate: &GraspCandidate,
    object: &BinObject,
    params: &AttemptParams,
) -> Result<Option<Pose>> {
    let n = candidate.approach_normal;
    let rotation = candidate.tool_rotation();
    let start = candidate.target + n * params.approach.offset;
    let steps = math::floor(params.approach.travel / params.approach.step + 1e-9) as u32;
    for k in 0..=steps {
        let pose = Pose::new(rotation, start - n * (f64::from(k) * params.approach.step));
        let c = contact_state(&pose, &object.scene, &params.geometry)?;
        if c.normal_force >= params.controller.f_min {
            return Ok(Some(pose));
        }
    }
    Ok(None)
}

/// Whether the grasp holds the object at mean vacuum `p`.
pub fn lift_test(p: f64, object: &BinObject, contact: &Pose, lift: &LiftParams) -> bool {
    let weight = object.spec.mass * lift.gravity;
    if object.spec.mass > lift.capacity(p) {
        return false;
    }
    if !lift.moment_check {
        return true;
    }
    let arm = (object.center_of_mass() - contact.translation).xy().norm();
    let area = core::f64::consts::PI * lift.seal_radius * lift.seal_radius;
    weight * arm <= p * area * lift.seal_radius / 4.0
}

/// Trailing mean of the chamber readings.
struct Smoother {
    window: usize,
    history: Vec<[f64; 4]>,
    sum: [f64; 4],
}

impl Smoother {
    fn new(window: usize) -> Self {
        Smoother {
            window,
            history: Vec::with_capacity(window),
            sum: [0.0; 4],
        }
    }

    fn push(&mut self, p: [f64; 4]) -> ChamberPressures {
        if self.history.len() == self.window {
            let old = self.history.remove(0);
            for i in 0..4 {
                self.sum[i] -= old[i];
            }
        }
        for i in 0..4 {
            self.sum[i] += p[i];
        }
        self.history.push(p);
        let n = self.history.len() as f64;
        ChamberPressures(self.sum.map(|s| s / n))
    }
}

/// Counts returns to earlier positions, sampled every `interval`.
struct RevisitTracker {
    interval: f64,
    min_age: f64,
    radius: f64,
    last_slot: Option<i64>,
    samples: Vec<(f64, Vec3)>,
    count: u32,
}

impl RevisitTracker {
    fn new(c: &ClassifierParams) -> Self {
        RevisitTracker {
            interval: c.revisit_interval,
            min_age: c.revisit_min_age,
            radius: c.revisit_radius,
            last_slot: None,
            samples: Vec::new(),
            count: 0,
        }
    }

    fn observe(&mut self, t: f64, p: Vec3) {
        let slot = math::floor(t / self.interval + 1e-9) as i64;
        if self.last_slot == Some(slot) {
            return;
        }
        self.last_slot = Some(slot);
        let old = self
            .samples
            .iter()
            .filter(|(ts, _)| t - ts >= self.min_age - 1e-9)
            .any(|(_, q)| (q - p).norm() < self.radius);
        if old {
            self.count += 1;
        }
        self.samples.push((t, p));
    }
}

/// Runs one attempt on `object` (whose true scene may be dragged if loose).
pub fn run_attempt<R: Rng + ?Sized>(
    candidate: &GraspCandidate,
    object: &mut BinObject,
    mode: SearchMode,
    params: &AttemptParams,
    sense_rng: &mut R,
    walk_rng: &mut R,
) -> Result<EpisodeLog> {
    let mut log = match approach(candidate, object, params)? {
        Some(start) => run_search(&start, object, mode, params, sense_rng, walk_rng)?,
        None => EpisodeLog::empty(EndReason::NoContact),
    };
    log.candidate = Some(*candidate);
    Ok(log)
}

/// Search phase from an established contact `start`, followed by the lift
/// test on success.
pub fn run_search<R: Rng + ?Sized>(
    start: &Pose,
    object: &mut BinObject,
    mode: SearchMode,
    params: &AttemptParams,
    sense_rng: &mut R,
    walk_rng: &mut R,
) -> Result<EpisodeLog> {
    let mut log = EpisodeLog::empty(EndReason::Timeout);
    log.contact = Some(*start);
    let ctrl = &params.controller;
    let limits = &params.limits;
    let period = ctrl.period();
    let max_steps = limits.max_steps(ctrl);
    let sigma = params.brownian_step_sigma();
    let object_start = object.pose.translation;
    let start_rot_t = start.rotation.transpose();

    let mut smoother = Smoother::new(params.classifier.smoothing_window);
    let mut revisits = RevisitTracker::new(&params.classifier);
    let mut thresholded = 0u32;
    let mut pose = *start;
    let mut k: u32 = 0;
    let end = loop {
        let t = f64::from(k) * period;
        let contact = contact_state(&pose, &object.scene, &params.geometry)?;
        let clean = solve_network(&contact, &params.pump)?;
        let p = add_sensor_noise(clean, &params.pump, sense_rng);
        let f_z = contact.normal_force;

        let displacement = (pose.translation - start.translation).norm();
        let rotation = (start_rot_t * pose.rotation).angle();
        log.max_displacement = log.max_displacement.max(displacement);
        log.max_rotation = log.max_rotation.max(rotation);
        log.peak_mean_pressure = log.peak_mean_pressure.max(p.mean());
        log.final_mean_pressure = p.mean();
        log.n_steps = k + 1;
        log.duration = t;
        if smoother.push(p.0).all_below(ctrl.p_threshold) {
            thresholded += 1;
        }
        revisits.observe(t, pose.translation);

        let mut row = params.record_steps.then(|| StepRow {
            t,
            position: pose.translation,
            rotation: pose.rotation.log(),
            pressures: p,
            f_z,
            command_translation: Vec3::zeros(),
            command_rotation: Vec3::zeros(),
        });

        let stop = if displacement > limits.max_displacement {
            Some(EndReason::DisplacementLimit)
        } else if rotation > limits.max_rotation {
            Some(EndReason::RotationLimit)
        } else if controller::grasp_success(&p, ctrl) {
            Some(if lift_test(p.mean(), object, &pose, &params.lift) {
                EndReason::Sealed
            } else {
                EndReason::LiftFailed
            })
        } else if mode == SearchMode::None {
            Some(EndReason::NoSearch)
        } else if k >= max_steps {
            Some(EndReason::Timeout)
        } else {
            None
        };
        if let Some(end) = stop {
            if let Some(r) = row {
                log.steps.push(r);
            }
            break end;
        }

        let command = match mode.alpha_at(t) {
            Some(alpha) => controller::step(&p, f_z, &ctrl.with_alpha(alpha)).transform,
            None => {
                let (dx, dy) = brownian_increment(sigma, walk_rng);
                compose_transform(Rotation::identity(), dx, dy, axial_step(f_z, ctrl))
            }
        };
        if let Some(r) = row.as_mut() {
            r.command_translation = command.translation;
            r.command_rotation = command.rotation.log();
            log.steps.push(*r);
        }
        log.max_step_translation = log.max_step_translation.max(command.translation.norm());
        log.max_step_rotation = log.max_step_rotation.max(command.rotation.angle());
        let next = pose.compose(&command);
        if object.spec.loose {
            let mut drag = next.translation - pose.translation;
            drag.z = 0.0;
            object.shift(&drag);
        }
        pose = next;
        k += 1;
    };
    log.end = end;
    log.final_pose = Some(pose);
    log.object_shift = (object.pose.translation - object_start).norm();
    log.thresholded_fraction = f64::from(thresholded) / f64::from(log.n_steps.max(1));
    log.revisits = revisits.count;
    log.outcome =
        classify_failure(&log, mode, &params.classifier).map_or(Outcome::Success, Outcome::Failure);
    Ok(log)
}

/// Deterministic failure rules, evaluated in order; `None` on success.
pub fn classify_failure(
    log: &EpisodeLog,
    mode: SearchMode,
    c: &ClassifierParams,
) -> Option<FailureClass> {
    let class = match log.end {
        EndReason::Sealed => return None,
        EndReason::NoContact => FailureClass::GhostGeometry,
        EndReason::LiftFailed => FailureClass::BrokenSeal,
        _ if log.object_shift > c.object_shift => FailureClass::ConstantRelativePose,
        _ if log.thresholded_fraction > c.thresholded_fraction => FailureClass::NoHapticInfo,
        _ if log.revisits > c.revisit_count => FailureClass::HapticOscillation,
        end if end.is_breach() && log.peak_mean_pressure < c.unfeasible_peak => {
            FailureClass::UnfeasibleSurface
        }
        end if end.is_breach() || mode == SearchMode::None => FailureClass::IneffectiveSearch,
        _ => FailureClass::TimeoutOther,
    };
    Some(class)
}

#[cfg(test)]
mod tests {
    use super::super::suite::{ObjectSpec, Shape, VisualError};
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec(shape: Shape) -> ObjectSpec {
        ObjectSpec {
            name: "t".into(),
            shape,
            height: 0.04,
            mass: 0.1,
            com_offset: [0.0, 0.0],
            visual: VisualError::default(),
            loose: false,
        }
    }

    fn candidate_at(p: Vec3, n: Vec3) -> GraspCandidate {
        GraspCandidate {
            object: 0,
            point: p,
            normal: n,
            quality: 1.0,
            position_error: Vec3::zeros(),
            normal_error: 0.0,
            target: p,
            approach_normal: n,
            tool_yaw: 0.0,
        }
    }

    fn rngs() -> (ChaCha8Rng, ChaCha8Rng) {
        (ChaCha8Rng::seed_from_u64(1), ChaCha8Rng::seed_from_u64(2))
    }

    #[test]
    fn modes_round_trip() {
        for s in [
            "none",
            "brownian",
            "alpha1",
            "alpha2",
            "alpha5",
            "alpha1&5",
            "alpha=0.3",
        ] {
            assert_eq!(SearchMode::parse(s).unwrap().label(), s);
        }
        assert_eq!(
            SearchMode::parse("alpha2").unwrap(),
            SearchMode::Alpha(0.25)
        );
        assert!(SearchMode::parse("alpha6").is_err());
        assert!(SearchMode::parse("alpha=1.5").is_err());
        assert!(SearchMode::parse("gqcnn").is_err());
    }

    #[test]
    fn alternating_switches_every_half_second() {
        let m = SearchMode::parse("alpha1&5").unwrap();
        assert_eq!(m.alpha_at(0.0), Some(0.0));
        assert_eq!(m.alpha_at(0.496), Some(0.0));
        assert_eq!(m.alpha_at(0.5), Some(1.0));
        assert_eq!(m.alpha_at(0.992), Some(1.0));
        assert_eq!(m.alpha_at(1.0), Some(0.0));
        assert_eq!(SearchMode::Brownian.alpha_at(1.0), None);
    }

    #[test]
    fn flat_approach_stops_inside_deadband() {
        let obj = BinObject::place(0, &spec(Shape::Box { size: [0.04, 0.04] }), 0.0, 0.0, 0.0);
        let p = AttemptParams::default();
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.04), Vec3::z());
        let pose = approach(&c, &obj, &p).unwrap().unwrap();
        let f = contact_state(&pose, &obj.scene, &p.geometry)
            .unwrap()
            .normal_force;
        assert!((1.5..=2.0).contains(&f), "{f}");
    }

    #[test]
    fn tilted_dome_approach_contacts_without_seal() {
        let obj = BinObject::place(0, &spec(Shape::Dome { radius: 0.015 }), 0.0, 0.0, 0.0);
        let p = AttemptParams::default();
        let gamma = 30_f64.to_radians();
        let n = Vec3::new(math::sin(gamma), 0.0, math::cos(gamma));
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.04), n);
        let pose = approach(&c, &obj, &p).unwrap().unwrap();
        let tilt = math::angle_between(&pose.z_axis(), &Vec3::z());
        assert!((tilt - gamma).abs() < 1e-9);
        let cs = contact_state(&pose, &obj.scene, &p.geometry).unwrap();
        assert!(cs.total_exposure() > 0.0);
    }

    #[test]
    fn ghost_surface_is_never_reached() {
        let obj = BinObject::place(0, &spec(Shape::Box { size: [0.04, 0.04] }), 0.0, 0.0, 0.0);
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.12), Vec3::z());
        let (mut a, mut b) = rngs();
        let mut o = obj.clone();
        let log = run_attempt(
            &c,
            &mut o,
            SearchMode::Alpha(0.25),
            &AttemptParams::default(),
            &mut a,
            &mut b,
        )
        .unwrap();
        assert_eq!(log.end, EndReason::NoContact);
        assert_eq!(log.outcome, Outcome::Failure(FailureClass::GhostGeometry));
    }

    #[test]
    fn sealed_start_succeeds_at_time_zero() {
        let mut obj = BinObject::place(0, &spec(Shape::Box { size: [0.04, 0.04] }), 0.0, 0.0, 0.0);
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.04), Vec3::z());
        let (mut a, mut b) = rngs();
        let log = run_attempt(
            &c,
            &mut obj,
            SearchMode::None,
            &AttemptParams::default(),
            &mut a,
            &mut b,
        )
        .unwrap();
        assert!(log.outcome.is_success());
        assert_eq!(log.duration, 0.0);
        assert_eq!(log.n_steps, 1);
    }

    #[test]
    fn edge_offset_is_recovered_by_lateral_search() {
        // Lip overhangs the box edge at x = 30 mm by 11 mm.
        let obj = BinObject::place(0, &spec(Shape::Box { size: [0.06, 0.06] }), 0.0, 0.0, 0.0);
        let start = Pose::from_translation(Vec3::new(0.0355, 0.0, 0.04 - 0.5e-3));
        let (mut a, mut b) = rngs();
        let params = AttemptParams {
            record_steps: true,
            ..AttemptParams::default()
        };
        let log = run_search(
            &start,
            &mut obj.clone(),
            SearchMode::Alpha(0.0),
            &params,
            &mut a,
            &mut b,
        )
        .unwrap();
        assert!(log.outcome.is_success(), "{:?}", log.end);
        assert!(log.max_displacement < 0.03);
        assert_eq!(log.steps.len() as u32, log.n_steps);
    }

    #[test]
    fn porous_patch_is_blind_until_timeout() {
        let mut obj = BinObject::place(
            0,
            &spec(Shape::Porous { size: [0.04, 0.04] }),
            0.0,
            0.0,
            0.0,
        );
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.04), Vec3::z());
        let (mut a, mut b) = rngs();
        let p = AttemptParams::default();
        let log = run_attempt(&c, &mut obj, SearchMode::Alpha(0.25), &p, &mut a, &mut b).unwrap();
        assert_eq!(log.end, EndReason::Timeout);
        assert_eq!(log.outcome, Outcome::Failure(FailureClass::NoHapticInfo));
        assert!(log.duration <= p.limits.max_time + 1e-9);
    }

    #[test]
    fn lift_capacity_examples() {
        let obj = |m: f64| {
            let mut s = spec(Shape::Box { size: [0.04, 0.04] });
            s.mass = m;
            BinObject::place(0, &s, 0.0, 0.0, 0.0)
        };
        let lift = LiftParams::default();
        let at = Pose::from_translation(Vec3::new(0.0, 0.0, 0.04));
        // Oracle: p * pi * r^2 / g.
        let cap = |p: f64| p * core::f64::consts::PI * 0.0085 * 0.0085 / 9.81;
        assert!(cap(20_000.0) > 0.15 && cap(15_100.0) < 0.4);
        assert!(lift_test(20_000.0, &obj(0.15), &at, &lift));
        assert!(!lift_test(15_100.0, &obj(0.4), &at, &lift));
    }

    #[test]
    fn off_centre_heavy_load_breaks_the_seal() {
        let mut s = spec(Shape::Box { size: [0.1, 0.04] });
        s.mass = 0.19;
        s.com_offset = [0.04, 0.0];
        let mut obj = BinObject::place(0, &s, 0.0, 0.0, 0.0);
        let c = candidate_at(Vec3::new(0.0, 0.0, 0.04), Vec3::z());
        let (mut a, mut b) = rngs();
        let log = run_attempt(
            &c,
            &mut obj,
            SearchMode::None,
            &AttemptParams::default(),
            &mut a,
            &mut b,
        )
        .unwrap();
        assert_eq!(log.end, EndReason::LiftFailed);
        assert_eq!(log.outcome, Outcome::Failure(FailureClass::BrokenSeal));
    }

    #[test]
    fn dragged_object_is_constant_relative_pose() {
        let mut s = spec(Shape::Box {
            size: [0.016, 0.02],
        });
        s.loose = true;
        let mut obj = BinObject::place(0, &s, 0.0, 0.0, 0.0);
        let c = candidate_at(Vec3::new(0.009, 0.0, 0.04), Vec3::z());
        let (mut a, mut b) = rngs();
        let log = run_attempt(
            &c,
            &mut obj,
            SearchMode::Alpha(0.0),
            &AttemptParams::default(),
            &mut a,
            &mut b,
        )
        .unwrap();
        assert_eq!(
            log.outcome,
            Outcome::Failure(FailureClass::ConstantRelativePose)
        );
    }

    #[test]
    fn revisits_count_returns_after_a_second() {
        let mut r = RevisitTracker::new(&ClassifierParams::default());
        let a = Vec3::zeros();
        let b = Vec3::new(0.01, 0.0, 0.0);
        for (i, p) in [a, b, a, b, a, b].iter().enumerate() {
            r.observe(i as f64 * 0.5, *p);
        }
        // Samples at 1.0, 1.5, 2.0, 2.5 each match one at least 1 s older.
        assert_eq!(r.count, 4);
    }

    #[test]
    fn brownian_sigma_matches_rayleigh_std() {
        let s = brownian_step_sigma(0.03, 1875);
        let scale = s * 1875_f64.sqrt();
        let std = scale * ((4.0 - core::f64::consts::PI) / 2.0).sqrt();
        assert!((std - 0.03).abs() < 1e-15);
    }
}
