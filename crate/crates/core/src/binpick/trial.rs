//! Bin-picking trials: repeated plan, attempt, and bookkeeping until a stop
//! rule fires.
//!
//! Random streams are keyed by repetition and attempt index only, so every
//! search mode sees the same bin layout and the same planner draws for a
//! given attempt number.

use alloc::vec::Vec;

use rand::Rng;

use super::planner::{FailureMemory, Planner, PlannerParams};
use super::search::{run_attempt, AttemptParams, EpisodeLog, SearchMode};
use super::suite::{layout, ObjectSpec};
use crate::error::{invalid, Result};
use crate::rngs::stream;

const LAYOUT_STREAM: u64 = 10;
const PLAN_STREAM: u64 = 11;
const SENSE_STREAM: u64 = 12;
const WALK_STREAM: u64 = 13;

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub n_objects: usize,
    pub max_attempts: usize,
    /// Stop after this many failures in a row.
    pub consecutive_fail_stop: usize,
    pub mode: SearchMode,
    /// Grid pitch of the bin layout (m).
    pub spacing: f64,
    pub memory_capacity: usize,
    pub memory_radius: f64,
    pub planner: PlannerParams,
    pub attempt: AttemptParams,
}

impl Default for TrialSpec {
    fn default() -> Self {
        TrialSpec {
            n_objects: 19,
            max_attempts: 57,
            consecutive_fail_stop: 10,
            mode: SearchMode::Alpha(0.25),
            spacing: 0.15,
            memory_capacity: 3,
            memory_radius: 0.03,
            planner: PlannerParams::default(),
            attempt: AttemptParams::default(),
        }
    }
}

impl TrialSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects == 0 || self.max_attempts == 0 || self.consecutive_fail_stop == 0 {
            return Err(invalid("trial counts must be positive"));
        }
        if !(self.spacing > 0.0 && self.memory_radius >= 0.0) {
            return Err(invalid("trial spacing and memory radius out of range"));
        }
        self.planner.validate()?;
        self.attempt.validate()
    }

    pub fn with_mode(&self, mode: SearchMode) -> Self {
        TrialSpec {
            mode,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxAttempts,
    ConsecutiveFailures,
    /// Every remaining candidate sits inside the failure memory.
    Exhausted,
    Empty,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::MaxAttempts => "max-attempts",
            StopReason::ConsecutiveFailures => "consecutive-failures",
            StopReason::Exhausted => "exhausted",
            StopReason::Empty => "empty",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttemptRecord {
    pub index: usize,
    pub object: usize,
    /// Failure-memory entries live when the candidate was chosen.
    pub memory: Vec<crate::se3::Vec3>,
    pub log: EpisodeLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub repetition: u64,
    pub mode: SearchMode,
    pub attempts: Vec<AttemptRecord>,
    /// Cumulative successes after each attempt.
    pub curve: Vec<u32>,
    pub successes: u32,
    pub stop: StopReason,
}

/// Runs one trial of `spec.mode` on a fresh layout of `suite`.
pub fn run_trial(
    spec: &TrialSpec,
    suite: &[ObjectSpec],
    seed: u64,
    repetition: u64,
) -> Result<TrialResult> {
    spec.validate()?;
    if suite.len() != spec.n_objects {
        return Err(invalid(alloc::format!(
            "suite has {} objects, spec expects {}",
            suite.len(),
            spec.n_objects
        )));
    }
    for o in suite {
        o.validate()?;
    }
    let objects = layout(
        suite,
        spec.spacing,
        &mut stream(seed, &[LAYOUT_STREAM, repetition]),
    );
    let planner = Planner::new(&objects, &spec.planner);
    let mut remaining = alloc::vec![true; objects.len()];
    let mut memory = FailureMemory::new(spec.memory_capacity, spec.memory_radius);
    let mut attempts = Vec::new();
    let mut curve = Vec::new();
    let mut successes = 0u32;
    let mut streak = 0usize;

    let stop = loop {
        if !remaining.iter().any(|r| *r) {
            break StopReason::Empty;
        }
        if attempts.len() >= spec.max_attempts {
            break StopReason::MaxAttempts;
        }
        let a = attempts.len() as u64;
        let key = |s: u64| stream(seed, &[s, repetition, a]);
        let Some(candidate) = planner.plan(&remaining, &memory, &mut key(PLAN_STREAM)) else {
            break StopReason::Exhausted;
        };
        let mut object = objects[candidate.object].clone();
        let log = run_attempt(
            &candidate,
            &mut object,
            spec.mode,
            &spec.attempt,
            &mut key(SENSE_STREAM),
            &mut key(WALK_STREAM),
        )?;
        let live = memory.points().to_vec();
        if log.outcome.is_success() {
            successes += 1;
            streak = 0;
            remaining[candidate.object] = false;
            memory.clear();
        } else {
            streak += 1;
            memory.record(candidate.point);
        }
        curve.push(successes);
        attempts.push(AttemptRecord {
            index: attempts.len(),
            object: candidate.object,
            memory: live,
            log,
        });
        if streak >= spec.consecutive_fail_stop {
            break StopReason::ConsecutiveFailures;
        }
    };
    Ok(TrialResult {
        repetition,
        mode: spec.mode,
        attempts,
        curve,
        successes,
        stop,
    })
}

/// Reference curve of a perfect picker: one success per attempt until empty.
pub fn optimal_curve(n_objects: usize, max_attempts: usize) -> Vec<u32> {
    (1..=max_attempts)
        .map(|a| a.min(n_objects) as u32)
        .collect()
}

/// Mean cumulative successes per attempt index across trials. A trial that
/// stopped early holds its final count.
pub fn mean_curve(results: &[TrialResult], max_attempts: usize) -> Vec<f64> {
    if results.is_empty() {
        return Vec::new();
    }
    (0..max_attempts)
        .map(|i| {
            let total: u32 = results
                .iter()
                .map(|r| r.curve.get(i).copied().unwrap_or(r.successes))
                .sum();
            f64::from(total) / results.len() as f64
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    crate::math::sqrt(ss / (xs.len() - 1) as f64)
}

/// One-sided bootstrap for `mean(a) > mean(b)`. Resamples each group
/// independently and returns the fraction of resamples where the inequality
/// holds; compare against the desired confidence.
pub fn bootstrap_greater<R: Rng + ?Sized>(
    a: &[f64],
    b: &[f64],
    resamples: u32,
    rng: &mut R,
) -> f64 {
    if a.is_empty() || b.is_empty() || resamples == 0 {
        return 0.0;
    }
    let draw = |xs: &[f64], rng: &mut R| {
        let mut s = 0.0;
        for _ in 0..xs.len() {
            s += xs[rng.random_range(0..xs.len())];
        }
        s / xs.len() as f64
    };
    let mut wins = 0u32;
    for _ in 0..resamples {
        if draw(a, rng) > draw(b, rng) {
            wins += 1;
        }
    }
    f64::from(wins) / f64::from(resamples)
}

#[cfg(test)]
mod tests {
    use super::super::suite::default_suite;
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn optimal_curve_saturates() {
        let c = optimal_curve(19, 57);
        assert_eq!(c.len(), 57);
        assert_eq!(c[0], 1);
        assert_eq!(c[18], 19);
        assert_eq!(c[56], 19);
    }

    #[test]
    fn bootstrap_separates_clear_gaps() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..50).map(|i| 10.0 + f64::from(i % 3)).collect();
        let b: Vec<f64> = (0..50).map(|i| 5.0 + f64::from(i % 3)).collect();
        assert_eq!(bootstrap_greater(&a, &b, 2000, &mut rng), 1.0);
        assert_eq!(bootstrap_greater(&b, &a, 2000, &mut rng), 0.0);
        let p = bootstrap_greater(&a, &a, 2000, &mut rng);
        assert!((0.3..0.7).contains(&p), "{p}");
    }

    #[test]
    fn std_of_known_sample() {
        assert!(
            (sample_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]) - 2.138_089_935).abs() < 1e-8
        );
    }

    #[test]
    fn trial_obeys_stop_rules_and_is_deterministic() {
        let suite = default_suite();
        let spec = TrialSpec::default().with_mode(SearchMode::None);
        let a = run_trial(&spec, &suite, 5, 0).unwrap();
        let b = run_trial(&spec, &suite, 5, 0).unwrap();
        assert_eq!(a, b);
        assert!(a.attempts.len() <= spec.max_attempts);
        assert_eq!(a.curve.len(), a.attempts.len());
        assert_eq!(a.curve.last().copied().unwrap_or(0), a.successes);
        let mut streak = 0;
        for (i, r) in a.attempts.iter().enumerate() {
            if r.log.outcome.is_success() {
                streak = 0;
            } else {
                streak += 1;
            }
            if i + 1 < a.attempts.len() {
                assert!(streak < spec.consecutive_fail_stop);
            }
            let c = r.log.candidate.unwrap().point;
            assert!(r
                .memory
                .iter()
                .all(|m| (m - c).norm() >= spec.memory_radius));
        }
    }

    #[test]
    fn suite_size_must_match() {
        let suite = default_suite();
        assert!(run_trial(&TrialSpec::default(), &suite[..5], 0, 0).is_err());
    }
}
