//! Experiment configuration file.
//!
//! One TOML document describes every physical constant. Angles are degrees
//! at this boundary and radians inside the core; everything else is SI.
//! Sections may be omitted and then take the shipped defaults, but unknown
//! keys are rejected.

use std::path::PathBuf;

use haptic_suction::binpick::planner::PlannerParams;
use haptic_suction::binpick::search::{
    ApproachParams, AttemptParams, ClassifierParams, LiftParams, SearchLimits, SearchMode,
};
use haptic_suction::binpick::suite::{default_suite, ObjectSpec};
use haptic_suction::binpick::trial::TrialSpec;
use haptic_suction::characterize::{DomeSweepSpec, EdgeSweepSpec};
use haptic_suction::controller::ControllerParams;
use haptic_suction::cupmodel::CupGeometry;
use haptic_suction::pneumatics::PumpModel;
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

/// The shipped configuration, identical to the core defaults.
pub const DEFAULT_TOML: &str = include_str!("../configs/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported format_version {found}; this build reads version {FORMAT_VERSION}")]
    Version { found: u32 },
    #[error("invalid [{section}]: {message}")]
    Invalid {
        section: &'static str,
        message: String,
    },
}

fn invalid(section: &'static str) -> impl Fn(haptic_suction::Error) -> ConfigError {
    move |e| ConfigError::Invalid {
        section,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub format_version: u32,
    #[serde(default)]
    pub seed: u64,
    /// Artifact directory, relative to the working directory.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub cup: CupConfig,
    #[serde(default)]
    pub pump: PumpConfig,
    #[serde(default)]
    pub controller: ControllerConfig,
    #[serde(default)]
    pub edge_sweep: EdgeSweepConfig,
    #[serde(default)]
    pub dome_sweep: DomeSweepConfig,
    #[serde(default)]
    pub binpick: BinpickConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CupConfig {
    pub lip_outer_radius: f64,
    pub lip_inner_radius: f64,
    pub n_lip_samples: usize,
    pub wall_azimuths_deg: [f64; 4],
    pub seal_gap_tolerance: f64,
    pub lip_stiffness: f64,
    pub seal_probe_radius: f64,
    pub n_seal_probes: usize,
    pub conform_travel: f64,
    pub max_conform_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub max_vacuum: f64,
    pub source_conductance: f64,
    pub passage_conductance: f64,
    pub leak_conductance: f64,
    pub seal_leak_conductance: f64,
    pub horizontal_coupling: f64,
    pub noise_sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub dl: f64,
    pub dtheta_deg: f64,
    pub dz: f64,
    pub alpha: f64,
    pub f_min: f64,
    pub f_max: f64,
    pub p_threshold: f64,
    pub p_success: f64,
    pub control_rate: f64,
}

/// Arithmetic progression `first + k * step`, `k < count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub first: f64,
    pub step: f64,
    pub count: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.first + k as f64 * self.step)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EdgeSweepConfig {
    /// Exposed lip length (m).
    pub delta: Range,
    pub yaw_deg: Range,
    pub dwell: f64,
    pub press_force: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DomeSweepConfig {
    /// Sweep the flat plate before the domes.
    pub include_flat: bool,
    /// Dome radii in sweep order (m).
    pub radii: Vec<f64>,
    pub gamma_deg: Range,
    pub dwell: f64,
    pub start_offset: f64,
    pub max_regulation_steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinpickConfig {
    /// Search modes: `none`, `brownian`, `alpha1`..`alpha5`, `alpha1&5`, `alpha=<x>`.
    pub modes: Vec<String>,
    pub repetitions: u64,
    /// Object suite; only the built-in `default` exists.
    pub suite: String,
    pub n_objects: usize,
    pub max_attempts: usize,
    pub consecutive_fail_stop: usize,
    pub spacing: f64,
    pub memory_capacity: usize,
    pub memory_radius: f64,
    pub brownian_distance_std: f64,
    /// Write per-step rows for every attempt.
    pub record_steps: bool,
    pub bootstrap_resamples: u32,
    pub limits: LimitsConfig,
    pub approach: ApproachConfig,
    pub planner: PlannerConfig,
    pub lift: LiftConfig,
    pub classifier: ClassifierConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LimitsConfig {
    pub max_displacement: f64,
    pub max_rotation_deg: f64,
    pub max_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ApproachConfig {
    pub offset: f64,
    pub travel: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub n_candidates: usize,
    pub grid: usize,
    pub grid_spacing: f64,
    pub position_sigma: f64,
    pub normal_sigma_deg: f64,
    pub quality_jitter: f64,
    pub footprint_radius: f64,
    pub flatness_scale: f64,
    pub centrality_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiftConfig {
    pub gravity: f64,
    pub seal_radius: f64,
    pub moment_check: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierConfig {
    pub smoothing_window: usize,
    pub thresholded_fraction: f64,
    pub revisit_interval: f64,
    pub revisit_min_age: f64,
    pub revisit_radius: f64,
    pub revisit_count: u32,
    pub object_shift: f64,
    pub unfeasible_peak: f64,
}

// Conversions to core types.

impl CupConfig {
    pub fn to_core(&self) -> CupGeometry {
        CupGeometry {
            lip_outer_radius: self.lip_outer_radius,
            lip_inner_radius: self.lip_inner_radius,
            n_lip_samples: self.n_lip_samples,
            wall_azimuths: self.wall_azimuths_deg.map(f64::to_radians),
            seal_gap_tolerance: self.seal_gap_tolerance,
            lip_stiffness: self.lip_stiffness,
            seal_probe_radius: self.seal_probe_radius,
            n_seal_probes: self.n_seal_probes,
            conform_travel: self.conform_travel,
            max_conform_angle: self.max_conform_angle_deg.to_radians(),
        }
    }
}

impl Default for CupConfig {
    fn default() -> Self {
        let g = CupGeometry::default();
        CupConfig {
            lip_outer_radius: g.lip_outer_radius,
            lip_inner_radius: g.lip_inner_radius,
            n_lip_samples: g.n_lip_samples,
            wall_azimuths_deg: [0.0, 90.0, 180.0, 270.0],
            seal_gap_tolerance: g.seal_gap_tolerance,
            lip_stiffness: g.lip_stiffness,
            seal_probe_radius: g.seal_probe_radius,
            n_seal_probes: g.n_seal_probes,
            conform_travel: g.conform_travel,
            max_conform_angle_deg: 29.5,
        }
    }
}

impl PumpConfig {
    pub fn to_core(&self) -> PumpModel {
        PumpModel {
            max_vacuum: self.max_vacuum,
            source_conductance: self.source_conductance,
            passage_conductance: self.passage_conductance,
            leak_conductance: self.leak_conductance,
            seal_leak_conductance: self.seal_leak_conductance,
            horizontal_coupling: self.horizontal_coupling,
            noise_sigma: self.noise_sigma,
        }
    }
}

impl Default for PumpConfig {
    fn default() -> Self {
        let p = PumpModel::default();
        PumpConfig {
            max_vacuum: p.max_vacuum,
            source_conductance: p.source_conductance,
            passage_conductance: p.passage_conductance,
            leak_conductance: p.leak_conductance,
            seal_leak_conductance: p.seal_leak_conductance,
            horizontal_coupling: p.horizontal_coupling,
            noise_sigma: p.noise_sigma,
        }
    }
}

impl ControllerConfig {
    pub fn to_core(&self) -> ControllerParams {
        ControllerParams {
            dl: self.dl,
            dtheta: self.dtheta_deg.to_radians(),
            dz: self.dz,
            alpha: self.alpha,
            f_min: self.f_min,
            f_max: self.f_max,
            p_threshold: self.p_threshold,
            p_success: self.p_success,
            control_rate: self.control_rate,
        }
    }
}

impl Default for ControllerConfig {
    fn default() -> Self {
        let c = ControllerParams::default();
        ControllerConfig {
            dl: c.dl,
            dtheta_deg: 0.5,
            dz: c.dz,
            alpha: c.alpha,
            f_min: c.f_min,
            f_max: c.f_max,
            p_threshold: c.p_threshold,
            p_success: c.p_success,
            control_rate: c.control_rate,
        }
    }
}

impl EdgeSweepConfig {
    pub fn to_core(&self) -> EdgeSweepSpec {
        EdgeSweepSpec {
            deltas: self.delta.values(),
            yaws: self
                .yaw_deg
                .values()
                .into_iter()
                .map(f64::to_radians)
                .collect(),
            dwell: self.dwell,
            press_force: self.press_force,
        }
    }
}

impl Default for EdgeSweepConfig {
    fn default() -> Self {
        let s = EdgeSweepSpec::default();
        EdgeSweepConfig {
            delta: Range {
                first: 0.0,
                step: 1e-3,
                count: 24,
            },
            yaw_deg: Range {
                first: 0.0,
                step: 5.0,
                count: 73,
            },
            dwell: s.dwell,
            press_force: s.press_force,
        }
    }
}

impl DomeSweepConfig {
    pub fn to_core(&self) -> DomeSweepSpec {
        let mut radii = Vec::new();
        if self.include_flat {
            radii.push(None);
        }
        radii.extend(self.radii.iter().copied().map(Some));
        DomeSweepSpec {
            radii,
            gammas: self
                .gamma_deg
                .values()
                .into_iter()
                .map(f64::to_radians)
                .collect(),
            dwell: self.dwell,
            start_offset: self.start_offset,
            max_regulation_steps: self.max_regulation_steps,
        }
    }
}

impl Default for DomeSweepConfig {
    fn default() -> Self {
        let s = DomeSweepSpec::default();
        DomeSweepConfig {
            include_flat: true,
            radii: vec![0.04, 0.02, 0.015],
            gamma_deg: Range {
                first: 45.0,
                step: -1.0,
                count: 46,
            },
            dwell: s.dwell,
            start_offset: s.start_offset,
            max_regulation_steps: s.max_regulation_steps,
        }
    }
}

impl Default for BinpickConfig {
    fn default() -> Self {
        let t = TrialSpec::default();
        let a = &t.attempt;
        let p = &t.planner;
        BinpickConfig {
            modes: vec!["none".into(), "brownian".into(), "alpha2".into()],
            repetitions: 5,
            suite: "default".into(),
            n_objects: t.n_objects,
            max_attempts: t.max_attempts,
            consecutive_fail_stop: t.consecutive_fail_stop,
            spacing: t.spacing,
            memory_capacity: t.memory_capacity,
            memory_radius: t.memory_radius,
            brownian_distance_std: a.brownian_distance_std,
            record_steps: a.record_steps,
            bootstrap_resamples: 10_000,
            limits: LimitsConfig {
                max_displacement: a.limits.max_displacement,
                max_rotation_deg: 45.0,
                max_time: a.limits.max_time,
            },
            approach: ApproachConfig {
                offset: a.approach.offset,
                travel: a.approach.travel,
                step: a.approach.step,
            },
            planner: PlannerConfig {
                n_candidates: p.n_candidates,
                grid: p.grid,
                grid_spacing: p.grid_spacing,
                position_sigma: p.position_sigma,
                normal_sigma_deg: 10.0,
                quality_jitter: p.quality_jitter,
                footprint_radius: p.footprint_radius,
                flatness_scale: p.flatness_scale,
                centrality_weight: p.centrality_weight,
            },
            lift: LiftConfig {
                gravity: a.lift.gravity,
                seal_radius: a.lift.seal_radius,
                moment_check: a.lift.moment_check,
            },
            classifier: ClassifierConfig {
                smoothing_window: a.classifier.smoothing_window,
                thresholded_fraction: a.classifier.thresholded_fraction,
                revisit_interval: a.classifier.revisit_interval,
                revisit_min_age: a.classifier.revisit_min_age,
                revisit_radius: a.classifier.revisit_radius,
                revisit_count: a.classifier.revisit_count,
                object_shift: a.classifier.object_shift,
                unfeasible_peak: a.classifier.unfeasible_peak,
            },
        }
    }
}

impl Default for LimitsConfig {
    fn default() -> Self {
        BinpickConfig::default().limits
    }
}

impl Default for ApproachConfig {
    fn default() -> Self {
        BinpickConfig::default().approach
    }
}

impl Default for PlannerConfig {
    fn default() -> Self {
        BinpickConfig::default().planner
    }
}

impl Default for LiftConfig {
    fn default() -> Self {
        BinpickConfig::default().lift
    }
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        BinpickConfig::default().classifier
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            format_version: FORMAT_VERSION,
            seed: 0,
            output_dir: None,
            cup: CupConfig::default(),
            pump: PumpConfig::default(),
            controller: ControllerConfig::default(),
            edge_sweep: EdgeSweepConfig::default(),
            dome_sweep: DomeSweepConfig::default(),
            binpick: BinpickConfig::default(),
        }
    }
}

/// Everything needed by the bin-picking command, in core types.
#[derive(Debug, Clone, PartialEq)]
pub struct BinpickPlan {
    pub modes: Vec<SearchMode>,
    pub repetitions: u64,
    pub suite: Vec<ObjectSpec>,
    pub trial: TrialSpec,
    pub bootstrap_resamples: u32,
}

impl ExperimentConfig {
    /// Parses and validates a configuration document.
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ExperimentConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ConfigError::Version {
                found: self.format_version,
            });
        }
        self.cup.to_core().validate().map_err(invalid("cup"))?;
        self.pump.to_core().validate().map_err(invalid("pump"))?;
        self.controller
            .to_core()
            .validate()
            .map_err(invalid("controller"))?;
        self.edge_sweep
            .to_core()
            .validate()
            .map_err(invalid("edge_sweep"))?;
        self.dome_sweep
            .to_core()
            .validate()
            .map_err(invalid("dome_sweep"))?;
        self.binpick_plan()?;
        Ok(())
    }

    pub fn attempt_params(&self) -> AttemptParams {
        let b = &self.binpick;
        AttemptParams {
            geometry: self.cup.to_core(),
            pump: self.pump.to_core(),
            controller: self.controller.to_core(),
            limits: SearchLimits {
                max_displacement: b.limits.max_displacement,
                max_rotation: b.limits.max_rotation_deg.to_radians(),
                max_time: b.limits.max_time,
            },
            approach: ApproachParams {
                offset: b.approach.offset,
                travel: b.approach.travel,
                step: b.approach.step,
            },
            lift: LiftParams {
                gravity: b.lift.gravity,
                seal_radius: b.lift.seal_radius,
                moment_check: b.lift.moment_check,
            },
            classifier: ClassifierParams {
                smoothing_window: b.classifier.smoothing_window,
                thresholded_fraction: b.classifier.thresholded_fraction,
                revisit_interval: b.classifier.revisit_interval,
                revisit_min_age: b.classifier.revisit_min_age,
                revisit_radius: b.classifier.revisit_radius,
                revisit_count: b.classifier.revisit_count,
                object_shift: b.classifier.object_shift,
                unfeasible_peak: b.classifier.unfeasible_peak,
            },
            brownian_distance_std: b.brownian_distance_std,
            record_steps: b.record_steps,
        }
    }

    pub fn binpick_plan(&self) -> Result<BinpickPlan, ConfigError> {
        let b = &self.binpick;
        let bad = |message: String| ConfigError::Invalid {
            section: "binpick",
            message,
        };
        if b.modes.is_empty() {
            return Err(bad("modes must not be empty".into()));
        }
        let modes = b
            .modes
            .iter()
            .map(|m| SearchMode::parse(m).map_err(|e| bad(format!("modes: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if b.repetitions == 0 {
            return Err(bad("repetitions must be positive".into()));
        }
        let suite = match b.suite.as_str() {
            "default" => default_suite(),
            other => return Err(bad(format!("suite: unknown suite {other:?}"))),
        };
        let p = &b.planner;
        let trial = TrialSpec {
            n_objects: b.n_objects,
            max_attempts: b.max_attempts,
            consecutive_fail_stop: b.consecutive_fail_stop,
            mode: modes[0],
            spacing: b.spacing,
            memory_capacity: b.memory_capacity,
            memory_radius: b.memory_radius,
            planner: PlannerParams {
                n_candidates: p.n_candidates,
                grid: p.grid,
                grid_spacing: p.grid_spacing,
                position_sigma: p.position_sigma,
                normal_sigma: p.normal_sigma_deg.to_radians(),
                quality_jitter: p.quality_jitter,
                footprint_radius: p.footprint_radius,
                flatness_scale: p.flatness_scale,
                centrality_weight: p.centrality_weight,
            },
            attempt: self.attempt_params(),
        };
        trial.validate().map_err(|e| bad(e.to_string()))?;
        if suite.len() != trial.n_objects {
            return Err(bad(format!(
                "n_objects is {} but suite {:?} has {} objects",
                trial.n_objects,
                b.suite,
                suite.len()
            )));
        }
        Ok(BinpickPlan {
            modes,
            repetitions: b.repetitions,
            suite,
            trial,
            bootstrap_resamples: b.bootstrap_resamples,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_matches_core_defaults() {
        let cfg = ExperimentConfig::from_toml(DEFAULT_TOML).unwrap();
        assert_eq!(cfg.cup.to_core(), CupGeometry::default());
        assert_eq!(cfg.pump.to_core(), PumpModel::default());
        assert_eq!(cfg.controller.to_core(), ControllerParams::default());
        assert_eq!(cfg.edge_sweep.to_core(), EdgeSweepSpec::default());
        assert_eq!(cfg.dome_sweep.to_core(), DomeSweepSpec::default());
        let plan = cfg.binpick_plan().unwrap();
        assert_eq!(plan.trial, TrialSpec::default().with_mode(SearchMode::None));
        assert_eq!(plan.suite, default_suite());
        assert_eq!(
            cfg,
            ExperimentConfig {
                seed: cfg.seed,
                output_dir: cfg.output_dir.clone(),
                ..ExperimentConfig::default()
            }
        );
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_toml("format_version = 1\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::from_toml("format_version = 1\n[pump]\nmax_vacum = 1.0\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("max_vacum"), "{err}");
    }

    #[test]
    fn force_band_must_be_ordered() {
        let err = ExperimentConfig::from_toml(
            "format_version = 1\n[controller]\nf_min = 2.0\nf_max = 1.5\n",
        )
        .unwrap_err()
        .to_string();
        assert!(
            err.contains("[controller]") && err.contains("f_min"),
            "{err}"
        );
    }

    #[test]
    fn unknown_mode_is_rejected() {
        let err = ExperimentConfig::from_toml(
            "format_version = 1\n[binpick]\nmodes = [\"alpha2\", \"gqcnn\"]\n",
        )
        .unwrap_err()
        .to_string();
        assert!(err.contains("gqcnn"), "{err}");
    }

    #[test]
    fn alpha_sweep_is_accepted() {
        let cfg = ExperimentConfig::from_toml(
            "format_version = 1\n[binpick]\nmodes = [\"alpha1\", \"alpha2\", \"alpha3\", \"alpha4\", \"alpha5\", \"alpha1&5\"]\n",
        )
        .unwrap();
        let plan = cfg.binpick_plan().unwrap();
        assert_eq!(plan.modes[4], SearchMode::Alpha(1.0));
    }

    #[test]
    fn other_versions_are_refused() {
        let err = ExperimentConfig::from_toml("format_version = 2\n").unwrap_err();
        assert!(matches!(err, ConfigError::Version { found: 2 }));
    }
}
