//! The eight basic control functions, their tool definitions, and validation of
//! model-issued invocations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::gateway::ToolDefinition;

/// Duration used when a model omits the parameter.
pub const DEFAULT_DURATION: f64 = 2.0;
pub const MAX_DURATION: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionName {
    #[serde(rename = "move_forward")]
    MoveForward,
    #[serde(rename = "move_left")]
    MoveLeft,
    #[serde(rename = "move_right")]
    MoveRight,
    #[serde(rename = "in_place_rotate_to_left")]
    InPlaceRotateToLeft,
    #[serde(rename = "in_place_rotate_to_right")]
    InPlaceRotateToRight,
    #[serde(rename = "look_up")]
    LookUp,
    #[serde(rename = "look_down")]
    LookDown,
    #[serde(rename = "scan_360")]
    Scan360,
}

impl ActionName {
    pub const ALL: [ActionName; 8] = [
        ActionName::MoveForward,
        ActionName::MoveLeft,
        ActionName::MoveRight,
        ActionName::InPlaceRotateToLeft,
        ActionName::InPlaceRotateToRight,
        ActionName::LookUp,
        ActionName::LookDown,
        ActionName::Scan360,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionName::MoveForward => "move_forward",
            ActionName::MoveLeft => "move_left",
            ActionName::MoveRight => "move_right",
            ActionName::InPlaceRotateToLeft => "in_place_rotate_to_left",
            ActionName::InPlaceRotateToRight => "in_place_rotate_to_right",
            ActionName::LookUp => "look_up",
            ActionName::LookDown => "look_down",
            ActionName::Scan360 => "scan_360",
        }
    }

    /// Movement actions change position; the rest are stability actions.
    pub fn is_movement(self) -> bool {
        matches!(
            self,
            ActionName::MoveForward | ActionName::MoveLeft | ActionName::MoveRight
        )
    }

    pub fn takes_duration(self) -> bool {
        self != ActionName::Scan360
    }

    fn description(self) -> &'static str {
        match self {
            ActionName::MoveForward => "Walk straight ahead in the facing direction for the given duration.",
            ActionName::MoveLeft => "Step sideways to the left without turning for the given duration.",
            ActionName::MoveRight => "Step sideways to the right without turning for the given duration.",
            ActionName::InPlaceRotateToLeft => "Turn the body to the left on the spot for the given duration.",
            ActionName::InPlaceRotateToRight => "Turn the body to the right on the spot for the given duration.",
            ActionName::LookUp => "Tilt the view upward for the given duration.",
            ActionName::LookDown => "Tilt the view downward for the given duration.",
            ActionName::Scan360 => "Turn a full circle in place to survey the surroundings.",
        }
    }
}

impl fmt::Display for ActionName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ActionName {
    type Err = ActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionName::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| ActionError::UnknownFunction(s.to_string()))
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ActionError {
    #[error("unknown control function {0:?}")]
    UnknownFunction(String),
    #[error("duration {0} is outside (0, {MAX_DURATION}] seconds")]
    DurationOutOfRange(f64),
    #[error("{0} takes a duration")]
    MissingDuration(ActionName),
    #[error("scan_360 takes no parameters")]
    UnexpectedDuration,
    #[error("argument `duration` must be a number, got {0}")]
    DurationNotNumeric(String),
    #[error("unexpected argument `{0}`")]
    UnexpectedArgument(String),
}

/// A validated invocation of one control function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawActionCall", into = "RawActionCall")]
pub struct ActionCall {
    name: ActionName,
    duration: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawActionCall {
    name: ActionName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
}

impl TryFrom<RawActionCall> for ActionCall {
    type Error = ActionError;
    fn try_from(r: RawActionCall) -> Result<Self, Self::Error> {
        ActionCall::new(r.name, r.duration)
    }
}

impl From<ActionCall> for RawActionCall {
    fn from(a: ActionCall) -> Self {
        RawActionCall {
            name: a.name,
            duration: a.duration,
        }
    }
}

impl ActionCall {
    pub fn new(name: ActionName, duration: Option<f64>) -> Result<Self, ActionError> {
        match (name.takes_duration(), duration) {
            (true, None) => Err(ActionError::MissingDuration(name)),
            (false, Some(_)) => Err(ActionError::UnexpectedDuration),
            (true, Some(d)) if !(d > 0.0 && d <= MAX_DURATION) => Err(ActionError::DurationOutOfRange(d)),
            _ => Ok(Self { name, duration }),
        }
    }

    pub fn timed(name: ActionName, seconds: f64) -> Result<Self, ActionError> {
        Self::new(name, Some(seconds))
    }

    pub fn scan() -> Self {
        Self {
            name: ActionName::Scan360,
            duration: None,
        }
    }

    pub fn name(&self) -> ActionName {
        self.name
    }

    pub fn duration(&self) -> Option<f64> {
        self.duration
    }

    /// Validates a model's function invocation. A missing duration defaults to two
    /// seconds; everything else that does not fit the schema is rejected.
    pub fn from_invocation(name: &str, arguments: &Map<String, Value>) -> Result<Self, ActionError> {
        let action: ActionName = name.trim().parse()?;
        if let Some(extra) = arguments.keys().find(|k| k.as_str() != "duration") {
            return Err(ActionError::UnexpectedArgument(extra.clone()));
        }
        let duration = match arguments.get("duration") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(n.as_f64().unwrap_or(f64::NAN)),
            Some(Value::String(s)) => Some(
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| ActionError::DurationNotNumeric(format!("{s:?}")))?,
            ),
            Some(other) => return Err(ActionError::DurationNotNumeric(other.to_string())),
        };
        if !action.takes_duration() {
            return match duration {
                None => Ok(Self::scan()),
                Some(_) => Err(ActionError::UnexpectedDuration),
            };
        }
        Self::new(action, Some(duration.unwrap_or(DEFAULT_DURATION)))
    }
}

impl fmt::Display for ActionCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.duration {
            Some(d) => write!(f, "{}({d})", self.name),
            None => write!(f, "{}()", self.name),
        }
    }
}

/// Tool definitions for all eight control functions, in fixed order.
pub fn tool_schema() -> Vec<ToolDefinition> {
    ActionName::ALL
        .into_iter()
        .map(|a| {
            let parameters = if a.takes_duration() {
                json!({
                    "type": "object",
                    "properties": {
                        "duration": {
                            "type": "number",
                            "description": "How long to perform the action, in seconds.",
                            "exclusiveMinimum": 0,
                            "maximum": MAX_DURATION,
                            "default": DEFAULT_DURATION
                        }
                    },
                    "required": []
                })
            } else {
                json!({ "type": "object", "properties": {}, "required": [] })
            };
            ToolDefinition {
                name: a.as_str().to_string(),
                description: a.description().to_string(),
                parameters,
            }
        })
        .collect()
}
