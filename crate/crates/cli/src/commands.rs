//! Subcommand bodies. Each command renders its artifacts in memory so that
//! `replay` can regenerate and compare them without touching the disk.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context as _, Result};
use haptic_suction::binpick::search::{EpisodeLog, FailureClass, SearchMode};
use haptic_suction::binpick::trial::{
    bootstrap_greater, mean, mean_curve, optimal_curve, run_trial, sample_std, TrialResult,
};
use haptic_suction::characterize::{
    run_dome_object, summarize_edge, DirectionErrorRecord, EdgeSummary, EdgeSweep, EdgeSweepSpec,
    SweepPoint,
};
use haptic_suction::rngs::stream;
use rayon::prelude::*;
use serde::Serialize;

use crate::artifact::{first_divergence, num, opt, render_json, Divergence, Header, Table};
use crate::config::{BinpickPlan, ExperimentConfig};

const COMPARE_STREAM: u64 = 20;

/// A validated config together with the exact text and seed that produced it.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: ExperimentConfig,
    pub config_text: String,
    pub seed: u64,
}

impl RunContext {
    /// `seed` overrides the config's own seed when given.
    pub fn from_text(text: &str, seed: Option<u64>) -> Result<Self> {
        let config = ExperimentConfig::from_toml(text)?;
        let seed = seed.unwrap_or(config.seed);
        Ok(RunContext {
            config,
            config_text: text.to_string(),
            seed,
        })
    }

    pub fn from_path(path: &Path, seed: Option<u64>) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_text(&text, seed).with_context(|| format!("in config {}", path.display()))
    }

    fn header(&self, kind: &str) -> Header {
        Header::new(kind, &self.config_text, self.seed)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: &'static str,
    pub kind: &'static str,
    pub contents: String,
}

/// Writes every artifact into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    artifacts
        .iter()
        .map(|a| {
            let path = dir.join(a.file_name);
            fs::write(&path, &a.contents)
                .with_context(|| format!("cannot write {}", path.display()))?;
            Ok(path)
        })
        .collect()
}

fn bool_cell(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

const PRESSURE_COLUMNS: [&str; 4] = ["p_vac_1", "p_vac_2", "p_vac_3", "p_vac_4"];

fn reading_cells(r: &DirectionErrorRecord) -> Vec<String> {
    let mut cells: Vec<String> = r.pressures.0.iter().map(|p| num(*p)).collect();
    cells.extend([
        num(r.dp_we),
        num(r.dp_ns),
        opt(r.e_deg),
        opt(r.e_raw_deg),
        bool_cell(r.indistinguishable),
        r.thresholded.to_string(),
        r.samples.to_string(),
        bool_cell(r.omitted),
    ]);
    cells
}

fn record_columns(lead: &[&'static str]) -> Vec<&'static str> {
    let mut c = lead.to_vec();
    c.extend(PRESSURE_COLUMNS);
    c.extend([
        "dp_we",
        "dp_ns",
        "e_deg",
        "e_raw_deg",
        "indistinguishable",
        "thresholded",
        "samples",
        "omitted",
    ]);
    c
}

// Edge sweep.

#[derive(Debug, Clone)]
pub struct EdgeRun {
    /// Delta-major sweep records.
    pub records: Vec<DirectionErrorRecord>,
    pub summary: Vec<EdgeSummary>,
    /// Edge exactly under the cup centre, swept over yaw.
    pub center: Vec<DirectionErrorRecord>,
    pub artifacts: Vec<Artifact>,
}

fn sweep_parallel(sweep: &EdgeSweep<'_>) -> Result<Vec<DirectionErrorRecord>> {
    (0..sweep.len())
        .into_par_iter()
        .map(|i| sweep.point(i).map_err(anyhow::Error::from))
        .collect()
}

pub fn characterize_edge(ctx: &RunContext) -> Result<EdgeRun> {
    let cfg = &ctx.config;
    let spec = cfg.edge_sweep.to_core();
    let geom = cfg.cup.to_core();
    let pump = cfg.pump.to_core();
    let params = cfg.controller.to_core();
    let records = sweep_parallel(&EdgeSweep::new(&spec, &geom, &pump, &params, ctx.seed)?)?;
    let center_spec = EdgeSweepSpec {
        deltas: vec![geom.lip_outer_radius],
        ..spec.clone()
    };
    let center = sweep_parallel(&EdgeSweep::new(
        &center_spec,
        &geom,
        &pump,
        &params,
        ctx.seed,
    )?)?;
    let summary = summarize_edge(&records);

    let yaw_deg = cfg.edge_sweep.yaw_deg.values();
    let mut sweep = Table::new(&record_columns(&["index", "delta", "yaw_deg"]));
    for (i, r) in records.iter().enumerate() {
        let SweepPoint::Edge { delta, .. } = r.point else {
            unreachable!("edge sweep yields edge points")
        };
        let mut row = vec![i.to_string(), num(delta), num(yaw_deg[i % yaw_deg.len()])];
        row.extend(reading_cells(r));
        sweep.push(row);
    }

    let mut table = Table::new(&[
        "view",
        "delta",
        "mean_e_deg",
        "max_e_deg",
        "mean_e_raw_deg",
        "indistinguishable_rate",
        "points",
    ]);
    let push = |t: &mut Table, view: &str, s: &EdgeSummary| {
        t.push(vec![
            view.into(),
            num(s.delta),
            opt(s.mean_e_deg),
            opt(s.max_e_deg),
            opt(s.mean_e_raw_deg),
            num(s.indistinguishable_rate),
            s.points.to_string(),
        ])
    };
    for s in &summary {
        push(&mut table, "sweep", s);
    }
    if let Some(s) = summarize_edge(&center).first() {
        push(&mut table, "center-exact", s);
    }
    if let Some(s) = center_average(&summary, geom.lip_outer_radius) {
        push(&mut table, "center-mean-of-neighbours", &s);
    }

    let artifacts = vec![
        Artifact {
            file_name: "edge_sweep.csv",
            kind: "edge-sweep",
            contents: sweep.render(&ctx.header("edge-sweep")),
        },
        Artifact {
            file_name: "edge_summary.csv",
            kind: "edge-summary",
            contents: table.render(&ctx.header("edge-summary")),
        },
    ];
    Ok(EdgeRun {
        records,
        summary,
        center,
        artifacts,
    })
}

/// Average of the two swept offsets that bracket `center`, when both exist.
fn center_average(summary: &[EdgeSummary], center: f64) -> Option<EdgeSummary> {
    let below = summary
        .iter()
        .filter(|s| s.delta <= center)
        .max_by(|a, b| a.delta.total_cmp(&b.delta))?;
    let above = summary
        .iter()
        .filter(|s| s.delta >= center)
        .min_by(|a, b| a.delta.total_cmp(&b.delta))?;
    let avg = |a: Option<f64>, b: Option<f64>| Some((a? + b?) / 2.0);
    Some(EdgeSummary {
        delta: center,
        mean_e_deg: avg(below.mean_e_deg, above.mean_e_deg),
        max_e_deg: below
            .max_e_deg
            .into_iter()
            .chain(above.max_e_deg)
            .reduce(f64::max),
        mean_e_raw_deg: avg(below.mean_e_raw_deg, above.mean_e_raw_deg),
        indistinguishable_rate: (below.indistinguishable_rate + above.indistinguishable_rate) / 2.0,
        points: below.points + above.points,
    })
}

// Dome sweep.

/// Per-object digest of a dome sweep. Angles in degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct DomeSummary {
    /// `None` is the flat plate.
    pub radius: Option<f64>,
    /// First offset, in sweep order, at which the cup sealed.
    pub critical_deg: Option<f64>,
    /// Largest |dp_we| over offsets swept before the seal.
    pub max_abs_dp_we_pre_seal: f64,
    /// Largest error over unsealed points with offset in `[critical, 30]`.
    pub max_e_deg_to_30: Option<f64>,
    /// Points in that window without a direction estimate.
    pub undirected_to_30: usize,
    /// Largest error within 5 degrees above the critical offset.
    pub max_e_deg_near_critical: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct DomeRun {
    pub records: Vec<DirectionErrorRecord>,
    /// Offset of each record in degrees, as configured.
    pub gamma_deg: Vec<f64>,
    pub summary: Vec<DomeSummary>,
    pub artifacts: Vec<Artifact>,
}

fn summarize_dome(radius: Option<f64>, rows: &[(f64, &DirectionErrorRecord)]) -> DomeSummary {
    let critical_deg = rows.iter().find(|(_, r)| r.omitted).map(|(g, _)| *g);
    let pre_seal = rows.iter().take_while(|(_, r)| !r.omitted);
    let max_abs_dp_we_pre_seal = pre_seal.map(|(_, r)| r.dp_we.abs()).fold(0.0, f64::max);
    let window = |hi: f64| {
        let crit = critical_deg;
        rows.iter()
            .filter(move |(g, r)| !r.omitted && crit.is_some_and(|c| *g >= c && *g <= hi))
    };
    let (to_30, near) = match critical_deg {
        Some(c) => (
            window(30.0).collect::<Vec<_>>(),
            window(c + 5.0).collect::<Vec<_>>(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    DomeSummary {
        radius,
        critical_deg,
        max_abs_dp_we_pre_seal,
        max_e_deg_to_30: to_30.iter().filter_map(|(_, r)| r.e_deg).reduce(f64::max),
        undirected_to_30: to_30.iter().filter(|(_, r)| r.e_deg.is_none()).count(),
        max_e_deg_near_critical: near.iter().filter_map(|(_, r)| r.e_deg).reduce(f64::max),
    }
}

pub fn characterize_dome(ctx: &RunContext) -> Result<DomeRun> {
    let cfg = &ctx.config;
    let spec = cfg.dome_sweep.to_core();
    let geom = cfg.cup.to_core();
    let pump = cfg.pump.to_core();
    let params = cfg.controller.to_core();
    let per_object: Vec<Vec<DirectionErrorRecord>> = (0..spec.radii.len())
        .into_par_iter()
        .map(|i| {
            run_dome_object(i, &spec, &geom, &pump, &params, ctx.seed).map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;

    let gammas = cfg.dome_sweep.gamma_deg.values();
    let mut summary = Vec::new();
    let mut table = Table::new(&record_columns(&[
        "index",
        "radius",
        "gamma_deg",
        "force",
        "offset",
    ]));
    for (radius, rows) in spec.radii.iter().zip(&per_object) {
        let tagged: Vec<(f64, &DirectionErrorRecord)> = gammas.iter().copied().zip(rows).collect();
        summary.push(summarize_dome(*radius, &tagged));
        for (g, r) in tagged {
            let SweepPoint::Dome { force, offset, .. } = r.point else {
                unreachable!("dome sweep yields dome points")
            };
            let mut row = vec![
                table.rows.len().to_string(),
                opt(*radius),
                num(g),
                num(force),
                num(offset),
            ];
            row.extend(reading_cells(r));
            table.push(row);
        }
    }

    let mut digest = Table::new(&[
        "radius",
        "critical_deg",
        "max_abs_dp_we_pre_seal",
        "max_e_deg_to_30",
        "undirected_to_30",
        "max_e_deg_near_critical",
    ]);
    for s in &summary {
        digest.push(vec![
            opt(s.radius),
            opt(s.critical_deg),
            num(s.max_abs_dp_we_pre_seal),
            opt(s.max_e_deg_to_30),
            s.undirected_to_30.to_string(),
            opt(s.max_e_deg_near_critical),
        ]);
    }

    let records: Vec<DirectionErrorRecord> = per_object.into_iter().flatten().collect();
    let gamma_deg = spec
        .radii
        .iter()
        .flat_map(|_| gammas.iter().copied())
        .collect();
    Ok(DomeRun {
        records,
        gamma_deg,
        summary,
        artifacts: vec![
            Artifact {
                file_name: "dome_sweep.csv",
                kind: "dome-sweep",
                contents: table.render(&ctx.header("dome-sweep")),
            },
            Artifact {
                file_name: "dome_summary.csv",
                kind: "dome-summary",
                contents: digest.render(&ctx.header("dome-summary")),
            },
        ],
    })
}

// Bin picking.

#[derive(Debug, Clone)]
pub struct BinpickRun {
    pub plan: BinpickPlan,
    /// Mode-major, repetition-minor.
    pub results: Vec<TrialResult>,
    pub artifacts: Vec<Artifact>,
}

impl BinpickRun {
    pub fn trials(&self, mode: SearchMode) -> impl Iterator<Item = &TrialResult> {
        self.results.iter().filter(move |r| r.mode == mode)
    }

    pub fn picks(&self, mode: SearchMode) -> Vec<f64> {
        self.trials(mode).map(|r| f64::from(r.successes)).collect()
    }
}

#[derive(Debug, Serialize)]
struct AttemptRow<'a> {
    mode: String,
    repetition: u64,
    attempt: usize,
    object: usize,
    object_name: &'a str,
    target: Option<[f64; 3]>,
    position_error: Option<[f64; 3]>,
    normal_error_deg: Option<f64>,
    quality: Option<f64>,
    memory: Vec<[f64; 3]>,
    n_steps: u32,
    duration: f64,
    max_displacement: f64,
    max_rotation_deg: f64,
    max_step_translation: f64,
    max_step_rotation_deg: f64,
    object_shift: f64,
    thresholded_fraction: f64,
    revisits: u32,
    peak_mean_pressure: f64,
    final_mean_pressure: f64,
    end: &'static str,
    success: bool,
    failure_class: Option<&'static str>,
}

fn arr(v: &haptic_suction::se3::Vec3) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn attempt_row<'a>(
    r: &TrialResult,
    index: usize,
    object: usize,
    name: &'a str,
    memory: &[haptic_suction::se3::Vec3],
    log: &EpisodeLog,
) -> AttemptRow<'a> {
    let c = log.candidate.as_ref();
    AttemptRow {
        mode: r.mode.label(),
        repetition: r.repetition,
        attempt: index,
        object,
        object_name: name,
        target: c.map(|c| arr(&c.target)),
        position_error: c.map(|c| arr(&c.position_error)),
        normal_error_deg: c.map(|c| c.normal_error.to_degrees()),
        quality: c.map(|c| c.quality),
        memory: memory.iter().map(arr).collect(),
        n_steps: log.n_steps,
        duration: log.duration,
        max_displacement: log.max_displacement,
        max_rotation_deg: log.max_rotation.to_degrees(),
        max_step_translation: log.max_step_translation,
        max_step_rotation_deg: log.max_step_rotation.to_degrees(),
        object_shift: log.object_shift,
        thresholded_fraction: log.thresholded_fraction,
        revisits: log.revisits,
        peak_mean_pressure: log.peak_mean_pressure,
        final_mean_pressure: log.final_mean_pressure,
        end: log.end.as_str(),
        success: log.outcome.is_success(),
        failure_class: log.outcome.failure_class().map(|f| f.as_str()),
    }
}

pub fn binpick(ctx: &RunContext) -> Result<BinpickRun> {
    let plan = ctx.config.binpick_plan()?;
    let jobs: Vec<(SearchMode, u64)> = plan
        .modes
        .iter()
        .flat_map(|m| (0..plan.repetitions).map(move |rep| (*m, rep)))
        .collect();
    let results: Vec<TrialResult> = jobs
        .par_iter()
        .map(|(mode, rep)| {
            run_trial(&plan.trial.with_mode(*mode), &plan.suite, ctx.seed, *rep)
                .map_err(anyhow::Error::from)
        })
        .collect::<Result<_>>()?;
    let artifacts = render_binpick(ctx, &plan, &results)?;
    Ok(BinpickRun {
        plan,
        results,
        artifacts,
    })
}

fn render_binpick(
    ctx: &RunContext,
    plan: &BinpickPlan,
    results: &[TrialResult],
) -> Result<Vec<Artifact>> {
    let max_attempts = plan.trial.max_attempts;
    let by_mode =
        |m: SearchMode| -> Vec<&TrialResult> { results.iter().filter(|r| r.mode == m).collect() };

    let mut trials = Table::new(&["mode", "repetition", "attempts", "successes", "stop_reason"]);
    for r in results {
        trials.push(vec![
            r.mode.label(),
            r.repetition.to_string(),
            r.attempts.len().to_string(),
            r.successes.to_string(),
            r.stop.as_str().into(),
        ]);
    }

    let optimal = optimal_curve(plan.trial.n_objects, max_attempts);
    let mut curves = Table::new(&[
        "mode",
        "attempt",
        "mean_successes",
        "std_successes",
        "optimal",
    ]);
    let mut summary = Table::new(&[
        "mode",
        "repetitions",
        "mean_picks",
        "std_picks",
        "min_picks",
        "max_picks",
        "mean_attempts",
    ]);
    let mut failures = Table::new(&["mode", "class", "count", "fraction"]);
    for m in &plan.modes {
        let rs = by_mode(*m);
        let owned: Vec<TrialResult> = rs.iter().map(|r| (*r).clone()).collect();
        let mc = mean_curve(&owned, max_attempts);
        for (i, mean_i) in mc.iter().enumerate() {
            let at: Vec<f64> = rs
                .iter()
                .map(|r| f64::from(r.curve.get(i).copied().unwrap_or(r.successes)))
                .collect();
            curves.push(vec![
                m.label(),
                (i + 1).to_string(),
                num(*mean_i),
                num(sample_std(&at)),
                optimal[i].to_string(),
            ]);
        }
        let picks: Vec<f64> = rs.iter().map(|r| f64::from(r.successes)).collect();
        let attempts: Vec<f64> = rs.iter().map(|r| r.attempts.len() as f64).collect();
        summary.push(vec![
            m.label(),
            rs.len().to_string(),
            num(mean(&picks)),
            num(sample_std(&picks)),
            num(picks.iter().copied().fold(f64::INFINITY, f64::min)),
            num(picks.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            num(mean(&attempts)),
        ]);
        let classes: Vec<FailureClass> = rs
            .iter()
            .flat_map(|r| &r.attempts)
            .filter_map(|a| a.log.outcome.failure_class())
            .collect();
        for c in FailureClass::ALL {
            let n = classes.iter().filter(|x| **x == c).count();
            let frac = if classes.is_empty() {
                0.0
            } else {
                n as f64 / classes.len() as f64
            };
            failures.push(vec![m.label(), c.as_str().into(), n.to_string(), num(frac)]);
        }
    }

    let mut comparison = Table::new(&[
        "mode_a",
        "mode_b",
        "mean_a",
        "mean_b",
        "p_a_greater",
        "resamples",
    ]);
    for (i, a) in plan.modes.iter().enumerate() {
        for (j, b) in plan.modes.iter().enumerate() {
            if i == j {
                continue;
            }
            let (pa, pb) = (
                by_mode(*a)
                    .iter()
                    .map(|r| f64::from(r.successes))
                    .collect::<Vec<_>>(),
                by_mode(*b)
                    .iter()
                    .map(|r| f64::from(r.successes))
                    .collect::<Vec<_>>(),
            );
            let mut rng = stream(ctx.seed, &[COMPARE_STREAM, i as u64, j as u64]);
            let p = bootstrap_greater(&pa, &pb, plan.bootstrap_resamples, &mut rng);
            comparison.push(vec![
                a.label(),
                b.label(),
                num(mean(&pa)),
                num(mean(&pb)),
                num(p),
                plan.bootstrap_resamples.to_string(),
            ]);
        }
    }

    let mut rows = Vec::new();
    for r in results {
        for a in &r.attempts {
            let name = plan.suite[a.object].name.as_str();
            rows.push(attempt_row(r, a.index, a.object, name, &a.memory, &a.log));
        }
    }

    let table = |file_name, kind, t: Table| Artifact {
        file_name,
        kind,
        contents: t.render(&ctx.header(kind)),
    };
    let mut artifacts = vec![
        table("binpick_trials.csv", "binpick-trials", trials),
        table("binpick_curves.csv", "binpick-curves", curves),
        table("binpick_summary.csv", "binpick-summary", summary),
        table("binpick_failures.csv", "binpick-failures", failures),
        table("binpick_comparison.csv", "binpick-comparison", comparison),
        Artifact {
            file_name: "binpick_attempts.json",
            kind: "binpick-attempts",
            contents: render_json(&ctx.header("binpick-attempts"), &rows)?,
        },
    ];
    if plan.trial.attempt.record_steps {
        artifacts.push(table(
            "binpick_steps.csv",
            "binpick-steps",
            step_table(results),
        ));
    }
    Ok(artifacts)
}

fn step_table(results: &[TrialResult]) -> Table {
    let mut t = Table::new(&[
        "mode",
        "repetition",
        "attempt",
        "t",
        "x",
        "y",
        "z",
        "rx",
        "ry",
        "rz",
        "p_vac_1",
        "p_vac_2",
        "p_vac_3",
        "p_vac_4",
        "f_z",
        "cmd_x",
        "cmd_y",
        "cmd_z",
        "cmd_rx",
        "cmd_ry",
        "cmd_rz",
    ]);
    for r in results {
        for a in &r.attempts {
            for s in &a.log.steps {
                let mut row = vec![
                    r.mode.label(),
                    r.repetition.to_string(),
                    a.index.to_string(),
                ];
                row.push(num(s.t));
                for v in [&s.position, &s.rotation] {
                    row.extend(arr(v).map(num));
                }
                row.extend(s.pressures.0.map(num));
                row.push(num(s.f_z));
                for v in [&s.command_translation, &s.command_rotation] {
                    row.extend(arr(v).map(num));
                }
                t.push(row);
            }
        }
    }
    t
}

// Replay.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Edge,
    Dome,
    Binpick,
}

impl Family {
    pub fn of_kind(kind: &str) -> Option<Self> {
        match kind {
            "edge-sweep" | "edge-summary" => Some(Family::Edge),
            "dome-sweep" | "dome-summary" => Some(Family::Dome),
            k if k.starts_with("binpick-") => Some(Family::Binpick),
            _ => None,
        }
    }

    pub fn run(self, ctx: &RunContext) -> Result<Vec<Artifact>> {
        Ok(match self {
            Family::Edge => characterize_edge(ctx)?.artifacts,
            Family::Dome => characterize_dome(ctx)?.artifacts,
            Family::Binpick => binpick(ctx)?.artifacts,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub path: PathBuf,
    pub kind: String,
    /// `None` when the file regenerates byte-identically.
    pub divergence: Option<Divergence>,
}

/// Re-runs the producer of each artifact from its embedded config and seed.
/// Files sharing a producer run are regenerated once.
pub fn replay(paths: &[PathBuf]) -> Result<Vec<ReplayOutcome>> {
    let mut loaded = Vec::new();
    for path in paths {
        let text =
            fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let header =
            Header::parse(&text).with_context(|| format!("in artifact {}", path.display()))?;
        let family = Family::of_kind(&header.kind).ok_or_else(|| {
            anyhow!(
                "{}: unknown artifact kind {:?}",
                path.display(),
                header.kind
            )
        })?;
        loaded.push((path.clone(), text, header, family));
    }

    let mut groups: Vec<((Family, String, u64), Vec<Artifact>)> = Vec::new();
    let mut out = Vec::new();
    for (path, text, header, family) in loaded {
        let key = (family, header.config_sha256.clone(), header.seed);
        let pos = match groups.iter().position(|(k, _)| *k == key) {
            Some(p) => p,
            None => {
                let ctx = RunContext::from_text(&header.config_toml, Some(header.seed))
                    .with_context(|| format!("embedded config of {}", path.display()))?;
                groups.push((key, family.run(&ctx)?));
                groups.len() - 1
            }
        };
        let Some(fresh) = groups[pos].1.iter().find(|a| a.kind == header.kind) else {
            bail!(
                "{}: the embedded config does not produce a {:?} artifact",
                path.display(),
                header.kind
            );
        };
        out.push(ReplayOutcome {
            path,
            kind: header.kind,
            divergence: first_divergence(&fresh.contents, &text),
        });
    }
    Ok(out)
}
