use serde::{Deserialize, Serialize};

use crate::interpreter::InterpreterNoise;

use super::SetupError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Oracle,
    Llm,
    /// Per-component selection from `components`.
    Mixed,
}

/// Backend for one pipeline component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[serde(alias = "rule", alias = "greedy-oracle", alias = "greedy_oracle")]
    Oracle,
    Llm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Components {
    pub interpreter: Backend,
    pub classifier: Backend,
    pub voters: Backend,
    pub action: Backend,
}

impl Components {
    pub fn uniform(b: Backend) -> Self {
        Self {
            interpreter: b,
            classifier: b,
            voters: b,
            action: b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    /// Ordinary query handling: one action, an answer, or a goal loop.
    #[default]
    Navigate,
    /// Rotate in place from the first turn until the stop condition holds.
    Scan,
}

fn default_max_turns() -> u32 {
    25
}

fn default_rotation_step() -> f64 {
    45.0
}

fn default_voters() -> usize {
    3
}

/// One task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    /// Bundled scene name or a path to a scene file.
    pub scene: String,
    pub query: String,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_label: Option<String>,
    #[serde(default = "default_max_turns")]
    pub max_turns: u32,
    /// Degrees per scan step.
    #[serde(default = "default_rotation_step")]
    pub rotation_step: f64,
    #[serde(default)]
    pub kind: TaskKind,
    /// Required when `mode` is `mixed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Components>,
    /// Seed for oracle noise and voter flips.
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "InterpreterNoise::is_zero")]
    pub noise: InterpreterNoise,
    /// Number of oracle voters.
    #[serde(default = "default_voters")]
    pub oracle_voters: usize,
    /// Probability that an oracle voter inverts its verdict.
    #[serde(default)]
    pub voter_flip_p: f64,
}

impl TaskSpec {
    pub fn new(scene: impl Into<String>, query: impl Into<String>, mode: Mode) -> Self {
        Self {
            scene: scene.into(),
            query: query.into(),
            mode,
            target_label: None,
            max_turns: default_max_turns(),
            rotation_step: default_rotation_step(),
            kind: TaskKind::Navigate,
            components: None,
            seed: 0,
            noise: InterpreterNoise::default(),
            oracle_voters: default_voters(),
            voter_flip_p: 0.0,
        }
    }

    pub fn with_target(mut self, label: impl Into<String>) -> Self {
        self.target_label = Some(label.into());
        self
    }

    pub fn with_kind(mut self, kind: TaskKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SetupError> {
        let de = &mut serde_json::Deserializer::from_slice(bytes);
        let spec: TaskSpec = serde_path_to_error::deserialize(de).map_err(|e| SetupError::Task {
            field: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    /// Whole number of scan steps in a full turn.
    pub fn steps_per_revolution(&self) -> u32 {
        (360.0 / self.rotation_step).round() as u32
    }

    pub fn validate(&self) -> Result<(), SetupError> {
        let bad = |field: &str, message: String| SetupError::Task {
            field: field.to_string(),
            message,
        };
        if self.query.trim().is_empty() {
            return Err(bad("query", "must not be empty".into()));
        }
        if self.max_turns < 1 {
            return Err(bad("max_turns", "must be at least 1".into()));
        }
        let steps = 360.0 / self.rotation_step;
        if !(self.rotation_step > 0.0 && self.rotation_step <= 360.0) || (steps - steps.round()).abs() > 1e-9 {
            return Err(bad(
                "rotation_step",
                format!("{} does not divide 360", self.rotation_step),
            ));
        }
        if self.rotation_step / crate::sim::ROTATE_SPEED > crate::nav::MAX_DURATION {
            return Err(bad("rotation_step", "one step would exceed the longest action".into()));
        }
        if self.mode == Mode::Mixed && self.components.is_none() {
            return Err(bad("components", "mixed mode needs per-component backends".into()));
        }
        for (field, p) in [
            ("noise.drop_p", self.noise.drop_p),
            ("noise.shift_p", self.noise.shift_p),
            ("voter_flip_p", self.voter_flip_p),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(bad(field, format!("{p} is not a probability")));
            }
        }
        if self.oracle_voters == 0 && self.components().voters == Backend::Oracle {
            return Err(bad("oracle_voters", "at least one voter is needed".into()));
        }
        Ok(())
    }

    pub fn components(&self) -> Components {
        match self.mode {
            Mode::Oracle => Components::uniform(Backend::Oracle),
            Mode::Llm => Components::uniform(Backend::Llm),
            Mode::Mixed => self.components.unwrap_or(Components::uniform(Backend::Oracle)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_task_file_gets_defaults() {
        let spec = TaskSpec::from_json(br#"{"scene":"ship","query":"move forward","mode":"oracle"}"#).unwrap();
        assert_eq!(spec.max_turns, 25);
        assert_eq!(spec.rotation_step, 45.0);
        assert_eq!(spec.steps_per_revolution(), 8);
        assert_eq!(spec.kind, TaskKind::Navigate);
        assert_eq!(spec.components(), Components::uniform(Backend::Oracle));
    }

    #[test]
    fn documented_fields_parse() {
        let doc = br#"{"scene":"highway","query":"Get to the back of the yellow bus","mode":"llm",
                      "target_label":"yellow bus","max_turns":10,"rotation_step":30}"#;
        let spec = TaskSpec::from_json(doc).unwrap();
        assert_eq!(spec.target_label.as_deref(), Some("yellow bus"));
        assert_eq!(spec.steps_per_revolution(), 12);
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let cases: [(&[u8], &str); 5] = [
            (br#"{"scene":"ship","query":"x","max_turns":0}"#, "max_turns"),
            (br#"{"scene":"ship","query":"x","rotation_step":50}"#, "rotation_step"),
            (br#"{"scene":"ship","query":"x","mode":"mixed"}"#, "components"),
            (br#"{"scene":"ship","query":"x","mode":"fast"}"#, "mode"),
            (br#"{"scene":"ship","query":"x","colour":1}"#, "colour"),
        ];
        for (doc, field) in cases {
            match TaskSpec::from_json(doc) {
                Err(SetupError::Task { field: f, .. }) => assert!(f.contains(field), "{f} vs {field}"),
                other => panic!("expected task error for {field}, got {other:?}"),
            }
        }
    }

    #[test]
    fn mixed_components_with_aliases() {
        let doc = br#"{"scene":"ship","query":"x","mode":"mixed",
            "components":{"interpreter":"oracle","classifier":"rule","voters":"llm","action":"greedy-oracle"}}"#;
        let c = TaskSpec::from_json(doc).unwrap().components();
        assert_eq!(c.voters, Backend::Llm);
        assert_eq!(c.action, Backend::Oracle);
    }
}
