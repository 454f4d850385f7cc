//! Report table rows.

use serde::{Deserialize, Serialize};
use speller_core::harness::{CvResult, SessionReport};

/// Majority-class accuracy at the 1:6 design ratio.
pub const CHANCE_ACCURACY: f64 = 6.0 / 7.0;

/// Accuracies within this margin of the majority rate count as chance.
pub const CHANCE_MARGIN: f64 = 0.01;

pub fn at_chance(accuracy: f64) -> bool {
    accuracy <= CHANCE_ACCURACY + CHANCE_MARGIN
}

/// Offline cross-validation summary, one row per configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config: String,
    pub iti_ms: u32,
    pub trials: u64,
    pub oddballs: u64,
    pub folds: usize,
    pub repeats: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub best_accuracy: f64,
    pub bits_per_trial: f64,
    pub chance_accuracy: f64,
    pub at_chance: bool,
    pub manifest: String,
}

impl CvRow {
    pub fn new(config: &str, iti_ms: u32, folds: usize, cv: &CvResult, manifest: &str) -> Self {
        let repeats = cv.repeats.len();
        CvRow {
            config: config.into(),
            iti_ms,
            trials: cv.counts.total() / repeats as u64,
            oddballs: cv.counts.oddballs() / repeats as u64,
            folds,
            repeats,
            mean_accuracy: cv.mean_accuracy,
            std_accuracy: cv.std_accuracy,
            best_accuracy: cv.best_accuracy,
            bits_per_trial: cv.bits_per_trial,
            chance_accuracy: CHANCE_ACCURACY,
            at_chance: at_chance(cv.mean_accuracy),
            manifest: manifest.into(),
        }
    }
}

/// One online session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionRow {
    pub run: usize,
    pub iti_ms: u32,
    pub completed: bool,
    pub time_s: f64,
    pub active_time_s: f64,
    pub pause_s: f64,
    pub trials: u64,
    pub n_correct: usize,
    pub selections: usize,
    pub stage2: usize,
    pub integration: usize,
    pub completion: usize,
    pub practical_itr: f64,
    pub active_itr: f64,
    pub manifest: String,
}

impl SessionRow {
    pub fn new(run: usize, r: &SessionReport, manifest: &str) -> Self {
        SessionRow {
            run,
            iti_ms: r.iti_ms,
            completed: r.completed,
            time_s: r.time_s,
            active_time_s: r.active_time_s,
            pause_s: r.clock.pause_total_us as f64 / 1e6,
            trials: r.clock.trials,
            n_correct: r.n_correct,
            selections: r.selections,
            stage2: r.selections_by_mechanism[0],
            integration: r.selections_by_mechanism[1],
            completion: r.selections_by_mechanism[2],
            practical_itr: r.practical.bits_per_sec,
            active_itr: r.active.bits_per_sec,
            manifest: manifest.into(),
        }
    }
}

/// Mean and best time over the sessions of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummaryRow {
    pub config: String,
    pub iti_ms: u32,
    pub runs: usize,
    pub completed: usize,
    /// Mean over completed sessions; empty when none completed.
    pub mean_time_s: Option<f64>,
    pub best_time_s: Option<f64>,
    pub best_run: Option<usize>,
    pub best_itr: Option<f64>,
    pub manifest: String,
}

impl SessionSummaryRow {
    pub fn new(config: &str, iti_ms: u32, reports: &[SessionReport], manifest: &str) -> Self {
        let done: Vec<(usize, &SessionReport)> = reports.iter().enumerate().filter(|(_, r)| r.completed).collect();
        let best = done.iter().min_by(|a, b| a.1.time_s.total_cmp(&b.1.time_s));
        SessionSummaryRow {
            config: config.into(),
            iti_ms,
            runs: reports.len(),
            completed: done.len(),
            mean_time_s: (!done.is_empty()).then(|| done.iter().map(|(_, r)| r.time_s).sum::<f64>() / done.len() as f64),
            best_time_s: best.map(|(_, r)| r.time_s),
            best_run: best.map(|(i, _)| *i),
            best_itr: best.map(|(_, r)| r.practical.bits_per_sec),
            manifest: manifest.into(),
        }
    }
}

/// Per-trial rates over active time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub run: usize,
    pub iti_ms: u32,
    pub bits_per_trial: f64,
    pub trials_per_sec: f64,
    pub bits_per_sec: f64,
    /// Mutual information of the session's own trial confusion, when defined.
    pub channel_bits_per_trial: Option<f64>,
    pub channel_bits_per_sec: Option<f64>,
    pub manifest: String,
}

impl RateRow {
    pub fn new(run: usize, r: &SessionReport, manifest: &str) -> Self {
        RateRow {
            run,
            iti_ms: r.iti_ms,
            bits_per_trial: r.active.bits_per_trial.unwrap_or(0.0),
            trials_per_sec: r.active.trials_per_sec.unwrap_or(0.0),
            bits_per_sec: r.active.bits_per_sec,
            channel_bits_per_trial: r.channel.and_then(|c| c.bits_per_trial),
            channel_bits_per_sec: r.channel.map(|c| c.bits_per_sec),
            manifest: manifest.into(),
        }
    }
}
