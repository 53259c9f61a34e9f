use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::nav::{ActionCall, VoterDecision};
use crate::sim::Pose;

use super::TaskSpec;

/// Column header of the per-attempt report CSV.
pub const CSV_HEADER: &str = "attempt,success,turns,voter_s,visual_s,textual_s,action_s,total_per_turn_s";

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TurnTimings {
    pub voter_s: f64,
    pub visual_s: f64,
    pub textual_s: f64,
    pub action_s: f64,
    pub total_s: f64,
}

impl TurnTimings {
    pub fn components(&self) -> f64 {
        self.voter_s + self.visual_s + self.textual_s + self.action_s
    }

    /// Time not attributed to any component: rendering, bookkeeping, scheduling.
    pub fn overhead(&self) -> f64 {
        self.total_s - self.components()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    /// 1-based.
    pub turn: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision: Option<VoterDecision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionCall>,
    pub timings: TurnTimings,
    pub pose_after: Pose,
    pub frame_digest: String,
    /// Scan rotations completed so far, for turns that belong to a scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    #[serde(rename = "GOAL_REACHED")]
    GoalReached,
    #[serde(rename = "max_turns")]
    MaxTurns,
    #[serde(rename = "error")]
    Error,
    /// A single action was executed, a question answered, or a scan finished.
    #[serde(rename = "completed")]
    Completed,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::GoalReached => "GOAL_REACHED",
            Termination::MaxTurns => "max_turns",
            Termination::Error => "error",
            Termination::Completed => "completed",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingAverages {
    pub voter_s: f64,
    pub visual_s: f64,
    pub textual_s: f64,
    pub action_s: f64,
    pub total_per_turn_s: f64,
}

impl TimingAverages {
    pub fn of(records: &[TurnRecord]) -> Self {
        if records.is_empty() {
            return Self::default();
        }
        let n = records.len() as f64;
        let mean = |f: fn(&TurnTimings) -> f64| records.iter().map(|r| f(&r.timings)).sum::<f64>() / n;
        Self {
            voter_s: mean(|t| t.voter_s),
            visual_s: mean(|t| t.visual_s),
            textual_s: mean(|t| t.textual_s),
            action_s: mean(|t| t.action_s),
            total_per_turn_s: mean(|t| t.total_s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    /// Attempt identifier, e.g. the task file stem.
    pub attempt: String,
    pub environment: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<TaskSpec>,
    pub success: bool,
    /// Number of decision passes.
    pub turns: u32,
    pub records: Vec<TurnRecord>,
    pub averages: TimingAverages,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotations: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_pose: Option<Pose>,
    /// Reply to a scene question.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

impl TaskReport {
    /// Report for a task that failed before its first turn.
    pub fn setup_failure(
        attempt: impl Into<String>,
        environment: impl Into<String>,
        task: Option<TaskSpec>,
        diagnostic: String,
    ) -> Self {
        let now = Utc::now();
        Self {
            attempt: attempt.into(),
            environment: environment.into(),
            task,
            success: false,
            turns: 0,
            records: Vec::new(),
            averages: TimingAverages::default(),
            termination: Termination::Error,
            rotations: None,
            final_pose: None,
            answer: None,
            diagnostic: Some(diagnostic),
            started_at: now,
            finished_at: now,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// The report with every wall-clock and timing value zeroed, for reproducibility
    /// comparisons.
    pub fn without_timings(&self) -> Self {
        let epoch = DateTime::<Utc>::UNIX_EPOCH;
        let mut r = self.clone();
        r.started_at = epoch;
        r.finished_at = epoch;
        r.averages = TimingAverages::default();
        for rec in &mut r.records {
            rec.timings = TurnTimings::default();
        }
        r
    }
}

fn secs(v: f64) -> String {
    format!("{v:.6}")
}

/// Per-attempt rows followed by one average row per environment.
pub fn reports_to_csv(reports: &[TaskReport]) -> String {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(CSV_HEADER.split(',')).expect("write to memory");
    for r in reports {
        let a = &r.averages;
        w.write_record([
            r.attempt.clone(),
            r.success.to_string(),
            r.turns.to_string(),
            secs(a.voter_s),
            secs(a.visual_s),
            secs(a.textual_s),
            secs(a.action_s),
            secs(a.total_per_turn_s),
        ])
        .expect("write to memory");
    }
    let mut by_env: BTreeMap<&str, Vec<&TaskReport>> = BTreeMap::new();
    for r in reports {
        by_env.entry(r.environment.as_str()).or_default().push(r);
    }
    for (env, rs) in by_env {
        let n = rs.len() as f64;
        let mean = |f: fn(&TaskReport) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / n;
        let successes = rs.iter().filter(|r| r.success).count();
        w.write_record([
            format!("{env} average"),
            format!("{successes}/{}", rs.len()),
            format!("{:.2}", mean(|r| f64::from(r.turns))),
            secs(mean(|r| r.averages.voter_s)),
            secs(mean(|r| r.averages.visual_s)),
            secs(mean(|r| r.averages.textual_s)),
            secs(mean(|r| r.averages.action_s)),
            secs(mean(|r| r.averages.total_per_turn_s)),
        ])
        .expect("write to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv is utf-8")
}
