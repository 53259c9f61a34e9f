//! Query taxonomy, decision voting and decision-to-control mapping.

mod action;
mod classify;
mod decide;
mod resolve;
pub mod rules;
mod vote;

use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayError;

pub use action::{tool_schema, ActionCall, ActionError, ActionName, DEFAULT_DURATION, MAX_DURATION};
pub use classify::{parse_category, Classifier, LlmClassifier, RuleClassifier};
pub use decide::{decide, DecisionKind, DecisionVoter, VoterDecision};
pub use resolve::{ActionResolver, GreedyOracle, LlmResolver, MappingError};
pub use vote::{
    parse_verdict, tally, vote_goal_reached, Ballot, LlmVoter, OracleVoter, Verdict, VoteOutcome, VoterBackend,
    REACH_RADIUS,
};

/// The tool definitions as the JSON array sent in a chat request's `tools` field.
pub fn tool_schema_document() -> serde_json::Value {
    serde_json::Value::Array(tool_schema().iter().map(crate::gateway::wire::tool_to_wire).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NavQuery {
    text: String,
    pub submitted_at: DateTime<Utc>,
}

impl NavQuery {
    pub fn new(text: impl Into<String>) -> Result<Self, NavError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(NavError::EmptyQuery);
        }
        Ok(Self {
            text,
            submitted_at: Utc::now(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CategoryKind {
    SemanticInterpreter,
    ActionNavigator,
    GoalNavigator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActionSubtype {
    MovementExecutor,
    StabilityExecutor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GoalSubtype {
    Direct,
    Exploratory,
}

/// A classified query. The subtype exists exactly for the two navigator kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCategory", into = "RawCategory")]
pub enum NavCategory {
    SemanticInterpreter,
    ActionNavigator(ActionSubtype),
    GoalNavigator(GoalSubtype),
}

#[derive(Serialize, Deserialize)]
struct RawCategory {
    kind: CategoryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    subtype: Option<String>,
}

impl From<NavCategory> for RawCategory {
    fn from(c: NavCategory) -> Self {
        let subtype = match c {
            NavCategory::SemanticInterpreter => None,
            NavCategory::ActionNavigator(ActionSubtype::MovementExecutor) => Some("MovementExecutor"),
            NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor) => Some("StabilityExecutor"),
            NavCategory::GoalNavigator(GoalSubtype::Direct) => Some("Direct"),
            NavCategory::GoalNavigator(GoalSubtype::Exploratory) => Some("Exploratory"),
        };
        RawCategory {
            kind: c.kind(),
            subtype: subtype.map(str::to_string),
        }
    }
}

impl TryFrom<RawCategory> for NavCategory {
    type Error = String;
    fn try_from(r: RawCategory) -> Result<Self, Self::Error> {
        match (r.kind, r.subtype.as_deref()) {
            (CategoryKind::SemanticInterpreter, None) => Ok(NavCategory::SemanticInterpreter),
            (CategoryKind::ActionNavigator, Some("MovementExecutor")) => {
                Ok(NavCategory::ActionNavigator(ActionSubtype::MovementExecutor))
            }
            (CategoryKind::ActionNavigator, Some("StabilityExecutor")) => {
                Ok(NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor))
            }
            (CategoryKind::GoalNavigator, Some("Direct")) => Ok(NavCategory::GoalNavigator(GoalSubtype::Direct)),
            (CategoryKind::GoalNavigator, Some("Exploratory")) => {
                Ok(NavCategory::GoalNavigator(GoalSubtype::Exploratory))
            }
            (kind, sub) => Err(format!("subtype {sub:?} is not valid for {kind:?}")),
        }
    }
}

impl NavCategory {
    pub fn kind(&self) -> CategoryKind {
        match self {
            NavCategory::SemanticInterpreter => CategoryKind::SemanticInterpreter,
            NavCategory::ActionNavigator(_) => CategoryKind::ActionNavigator,
            NavCategory::GoalNavigator(_) => CategoryKind::GoalNavigator,
        }
    }

    pub fn is_goal(&self) -> bool {
        matches!(self, NavCategory::GoalNavigator(_))
    }
}

impl fmt::Display for NavCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NavCategory::SemanticInterpreter => f.write_str("SEMANTIC_INTERPRETER"),
            NavCategory::ActionNavigator(ActionSubtype::MovementExecutor) => f.write_str("ACTION_NAVIGATOR/MOVEMENT"),
            NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor) => f.write_str("ACTION_NAVIGATOR/STABILITY"),
            NavCategory::GoalNavigator(GoalSubtype::Direct) => f.write_str("GOAL_NAVIGATOR/DIRECT"),
            NavCategory::GoalNavigator(GoalSubtype::Exploratory) => f.write_str("GOAL_NAVIGATOR/EXPLORATORY"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NavError {
    #[error("query text is empty")]
    EmptyQuery,
    #[error("classifier reply {reply:?} is not a category")]
    UnparseableCategory { reply: String },
    #[error("classifier call failed: {0}")]
    Classifier(GatewayError),
    #[error("every voter failed: {}", .errors.join("; "))]
    AllVotersFailed { errors: Vec<String> },
    #[error("no voters configured")]
    NoVoters,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_query_rejected() {
        assert_eq!(NavQuery::new("  \n"), Err(NavError::EmptyQuery));
        assert_eq!(NavQuery::new("move forward").unwrap().text(), "move forward");
    }

    #[test]
    fn category_serialization() {
        let c = NavCategory::GoalNavigator(GoalSubtype::Exploratory);
        let v = serde_json::to_value(c).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"kind": "GOAL_NAVIGATOR", "subtype": "Exploratory"})
        );
        assert_eq!(serde_json::from_value::<NavCategory>(v).unwrap(), c);
        let s = serde_json::to_value(NavCategory::SemanticInterpreter).unwrap();
        assert_eq!(s, serde_json::json!({"kind": "SEMANTIC_INTERPRETER"}));
    }

    #[test]
    fn subtype_required_iff_navigator() {
        let bad = [
            serde_json::json!({"kind": "GOAL_NAVIGATOR"}),
            serde_json::json!({"kind": "SEMANTIC_INTERPRETER", "subtype": "Direct"}),
            serde_json::json!({"kind": "ACTION_NAVIGATOR", "subtype": "Direct"}),
        ];
        for b in bad {
            assert!(serde_json::from_value::<NavCategory>(b).is_err());
        }
    }

    #[test]
    fn schema_document_is_wire_shaped() {
        let doc = tool_schema_document();
        let entries = doc.as_array().unwrap();
        assert_eq!(entries.len(), 8);
        assert!(entries.iter().all(|e| e["type"] == "function"));
    }
}
