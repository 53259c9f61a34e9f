//! Scene interpretation: paired grid-coordinate and textual context for a frame.

mod llm;
mod oracle;
mod overlay;

use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;
use crate::grid::GridCell;
use crate::sim::{Frame, Pose, Scene};

pub use llm::{parse_textual_reply, parse_visual_reply, LlmInterpreter};
pub use oracle::{ground_truth, InterpreterNoise, OracleInterpreter};
pub use overlay::{overlay_grid, OverlayError};

/// Header line that opens every serialized context block.
pub const CONTEXT_HEADER: &str = "Scene context";
pub const EMPTY_SENTINEL: &str = "no objects observed";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VisualEntry {
    pub label: String,
    pub cell: GridCell,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VisualInterpretation {
    pub entries: Vec<VisualEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextualEntry {
    pub name: String,
    pub features: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TextualDescription {
    pub entries: Vec<TextualEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterpretTiming {
    pub visual_s: f64,
    pub textual_s: f64,
}

/// Simulator ground truth for one object, attached by the orchestrator so oracle
/// voters can judge arrival. Never serialized into prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthObject {
    pub label: String,
    /// Horizontal distance from the agent to the object's footprint.
    pub clearance: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneContext {
    pub visual: VisualInterpretation,
    pub textual: TextualDescription,
    pub frame_digest: String,
    pub produced_at: DateTime<Utc>,
    pub timing: InterpretTiming,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<GroundTruthObject>>,
}

pub(crate) fn normalize_label(s: &str) -> String {
    s.split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Loose match between an observed name and a wanted label: equal after
/// normalization, or one contains the other on word boundaries.
pub fn labels_match(observed: &str, wanted: &str) -> bool {
    let a = normalize_label(observed);
    let b = normalize_label(wanted);
    if a.is_empty() || b.is_empty() {
        return false;
    }
    let padded = |s: &str| format!(" {s} ");
    a == b || padded(&a).contains(&padded(&b)) || padded(&b).contains(&padded(&a))
}

impl SceneContext {
    pub fn empty(frame_digest: impl Into<String>) -> Self {
        Self {
            visual: VisualInterpretation::default(),
            textual: TextualDescription::default(),
            frame_digest: frame_digest.into(),
            produced_at: Utc::now(),
            timing: InterpretTiming::default(),
            ground_truth: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.visual.entries.is_empty() && self.textual.entries.is_empty()
    }

    /// Every distinct label mentioned in either half.
    pub fn labels(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .visual
            .entries
            .iter()
            .map(|e| e.label.as_str())
            .chain(self.textual.entries.iter().map(|e| e.name.as_str()))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn mentions(&self, label: &str) -> bool {
        self.labels().into_iter().any(|l| labels_match(l, label))
    }

    /// Grid cell reported for `label` by the visual half, if any.
    pub fn cell_of(&self, label: &str) -> Option<GridCell> {
        self.visual
            .entries
            .iter()
            .find(|e| labels_match(&e.label, label))
            .map(|e| e.cell)
    }

    pub fn truth_for(&self, label: &str) -> Option<&GroundTruthObject> {
        self.ground_truth
            .as_ref()?
            .iter()
            .find(|g| labels_match(&g.label, label))
    }
}

/// Plain-text rendering of a context used verbatim in downstream prompts.
pub fn context_to_prompt_block(ctx: &SceneContext) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{CONTEXT_HEADER}");
    if ctx.is_empty() {
        let _ = writeln!(out, "({EMPTY_SENTINEL})");
        return out;
    }

    let mut visual: Vec<&VisualEntry> = ctx.visual.entries.iter().collect();
    visual.sort_by(|a, b| a.cell.cmp(&b.cell).then_with(|| a.label.cmp(&b.label)));
    let _ = writeln!(out, "Grid coordinates:");
    if visual.is_empty() {
        let _ = writeln!(out, "- none");
    }
    for e in visual {
        let _ = writeln!(out, "- {}: {}", e.label, e.cell);
    }

    let mut textual: Vec<&TextualEntry> = ctx.textual.entries.iter().collect();
    textual.sort_by(|a, b| a.name.cmp(&b.name).then_with(|| a.features.cmp(&b.features)));
    let _ = writeln!(out, "Objects:");
    if textual.is_empty() {
        let _ = writeln!(out, "- none");
    }
    for e in textual {
        if e.features.is_empty() {
            let _ = writeln!(out, "- {}", e.name);
        } else {
            let _ = writeln!(out, "- {}: {}", e.name, e.features);
        }
    }
    out
}

/// Which interpretation half failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Half {
    Visual,
    Textual,
}

impl std::fmt::Display for Half {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Half::Visual => "visual",
            Half::Textual => "textual",
        })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum InterpretError {
    #[error("{half} interpretation failed: {source}")]
    Gateway { half: Half, source: GatewayError },
    #[error("{half} interpretation failed: {message}")]
    Frame { half: Half, message: String },
}

/// Everything an interpreter may look at for one turn. LLM backends use only the
/// frame; the oracle reads the scene and pose directly.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub frame: &'a Frame,
    pub scene: &'a Scene,
    pub pose: &'a Pose,
}

pub trait Interpreter: Send + Sync {
    fn interpret(&self, obs: &Observation<'_>) -> Result<SceneContext, InterpretError>;
}
