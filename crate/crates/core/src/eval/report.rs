use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::EvalConfig;
use crate::room::{Layout, Outcome, RoomConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub target: usize,
    pub episode: usize,
    pub outcome: Outcome,
    pub steps: usize,
    pub reward: f64,
    /// Geometry at the start of the episode.
    pub layout: Layout,
    /// Pitch factors applied to the utterances drawn in this episode's environment.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pitch_factors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetSummary {
    pub target: usize,
    pub speaker_id: String,
    pub n_episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// Result of one evaluation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: EvalConfig,
    pub seed: u64,
    pub room: RoomConfig,
    /// Utterances per speaker in the pools the episodes drew from.
    pub pool_sizes: Vec<usize>,
    pub per_target: Vec<TargetSummary>,
    /// Successes over all episodes.
    pub success_rate: f64,
    /// Average of the per-target rates.
    pub mean_target_success_rate: f64,
    pub episodes: Vec<EpisodeRecord>,
}

impl EvalReport {
    pub fn new(
        config: EvalConfig,
        seed: u64,
        room: RoomConfig,
        pool_sizes: Vec<usize>,
        episodes: Vec<EpisodeRecord>,
        per_target: Vec<TargetSummary>,
    ) -> Self {
        let successes = episodes.iter().filter(|e| e.outcome == Outcome::Success).count();
        let success_rate = if episodes.is_empty() {
            0.0
        } else {
            successes as f64 / episodes.len() as f64
        };
        let mean_target_success_rate = if per_target.is_empty() {
            0.0
        } else {
            per_target.iter().map(|t| t.success_rate).sum::<f64>() / per_target.len() as f64
        };
        Self {
            config,
            seed,
            room,
            pool_sizes,
            per_target,
            success_rate,
            mean_target_success_rate,
            episodes,
        }
    }

    pub fn successes(&self) -> usize {
        self.episodes.iter().filter(|e| e.outcome == Outcome::Success).count()
    }

    pub fn outcome_counts(&self) -> Vec<(Outcome, usize)> {
        [
            Outcome::Success,
            Outcome::Collision,
            Outcome::OutOfBounds,
            Outcome::Timeout,
        ]
        .into_iter()
        .map(|o| (o, self.episodes.iter().filter(|e| e.outcome == o).count()))
        .collect()
    }
}

pub fn write_report(report: &EvalReport, path: impl AsRef<Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: impl AsRef<Path>) -> Result<EvalReport> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// One row of the condition summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub condition: String,
    /// Speaker id, or `average` for the mean over a condition's targets.
    pub target: String,
    pub n_episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
}

/// One row per evaluated target plus an average row per condition.
pub fn summarize(reports: &[(&str, &EvalReport)]) -> Vec<SummaryRow> {
    let mut rows = Vec::new();
    for (condition, report) in reports {
        for t in &report.per_target {
            rows.push(SummaryRow {
                condition: condition.to_string(),
                target: t.speaker_id.clone(),
                n_episodes: t.n_episodes,
                successes: t.successes,
                success_rate: t.success_rate,
            });
        }
        rows.push(SummaryRow {
            condition: condition.to_string(),
            target: "average".into(),
            n_episodes: report.episodes.len(),
            successes: report.successes(),
            success_rate: report.mean_target_success_rate,
        });
    }
    rows
}

pub fn write_summary(rows: &[SummaryRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidInput(format!("csv: {other:?}")),
    }
}
