use serde_json::{Map, Value};
use thiserror::Error;

use crate::gateway::{ChatMessage, ChatRequest, Gateway, GatewayError, ModelEndpoint, Reply};
use crate::grid::GridSpec;
use crate::interpreter::{context_to_prompt_block, SceneContext};
use crate::prompts;
use crate::sim::ROTATE_SPEED;

use super::rules::parse_command;
use super::{tool_schema, ActionCall, ActionError, ActionName, DecisionKind, NavQuery, VoterDecision};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum MappingError {
    #[error("invalid invocation {name}({}): {source}", Value::Object(.arguments.clone()))]
    Invalid {
        name: String,
        arguments: Map<String, Value>,
        source: ActionError,
    },
    #[error("model answered with text instead of a function call: {text:?}")]
    NotAToolCall { text: String },
    #[error("action call failed: {0}")]
    Gateway(GatewayError),
    #[error("no control command recognized in {0:?}")]
    UnrecognizedCommand(String),
    #[error("a {0:?} decision has no action")]
    NotActionable(DecisionKind),
    #[error("goal task declares no target label")]
    NoTarget,
}

pub trait ActionResolver: Send + Sync {
    fn resolve(
        &self,
        query: &NavQuery,
        ctx: &SceneContext,
        decision: &VoterDecision,
    ) -> Result<ActionCall, MappingError>;
}

fn command_action(query: &NavQuery) -> Result<ActionCall, MappingError> {
    let cmd = parse_command(query.text()).ok_or_else(|| MappingError::UnrecognizedCommand(query.text().to_string()))?;
    if cmd.action == ActionName::Scan360 {
        return Ok(ActionCall::scan());
    }
    ActionCall::timed(cmd.action, cmd.duration_or_default()).map_err(|source| MappingError::Invalid {
        name: cmd.action.to_string(),
        arguments: Map::from_iter([("duration".to_string(), Value::from(cmd.duration_or_default()))]),
        source,
    })
}

/// Deterministic controller: turn half a second toward the target until it sits in
/// the centre columns, then walk a second toward it. With the target out of view it
/// takes one scan-sized rotation step to the left.
#[derive(Debug, Clone)]
pub struct GreedyOracle {
    target: Option<String>,
    grid: GridSpec,
    rotation_step: f64,
}

impl GreedyOracle {
    pub const TURN_S: f64 = 0.5;
    pub const STEP_S: f64 = 1.0;

    pub fn new(target: Option<String>, grid: GridSpec, rotation_step: f64) -> Self {
        Self {
            target,
            grid,
            rotation_step,
        }
    }

    pub fn scan_step(&self) -> ActionCall {
        ActionCall::timed(ActionName::InPlaceRotateToLeft, self.rotation_step / ROTATE_SPEED)
            .expect("rotation step fits the duration bounds")
    }
}

impl ActionResolver for GreedyOracle {
    fn resolve(
        &self,
        query: &NavQuery,
        ctx: &SceneContext,
        decision: &VoterDecision,
    ) -> Result<ActionCall, MappingError> {
        match decision.kind {
            DecisionKind::ActionNavigator => command_action(query),
            DecisionKind::GoalProgress => {
                let target = self.target.as_deref().ok_or(MappingError::NoTarget)?;
                let Some(cell) = ctx.cell_of(target) else {
                    return Ok(self.scan_step());
                };
                let (lo, hi) = self.grid.center_columns();
                let call = if cell.column < lo {
                    ActionCall::timed(ActionName::InPlaceRotateToLeft, Self::TURN_S)
                } else if cell.column > hi {
                    ActionCall::timed(ActionName::InPlaceRotateToRight, Self::TURN_S)
                } else {
                    ActionCall::timed(ActionName::MoveForward, Self::STEP_S)
                };
                Ok(call.expect("controller durations are in range"))
            }
            kind => Err(MappingError::NotActionable(kind)),
        }
    }
}

/// Tool-calling resolver: the model picks one control function and its duration.
#[derive(Debug, Clone)]
pub struct LlmResolver {
    gateway: Gateway,
    endpoint: ModelEndpoint,
}

impl LlmResolver {
    pub fn new(gateway: Gateway, endpoint: ModelEndpoint) -> Self {
        Self { gateway, endpoint }
    }

    pub fn request(query: &NavQuery, ctx: &SceneContext) -> ChatRequest {
        let text = prompts::ACTION
            .render(&[("query", query.text()), ("context", &context_to_prompt_block(ctx))])
            .expect("action template placeholders");
        ChatRequest::new(vec![ChatMessage::user(text)]).with_tools(tool_schema())
    }
}

impl ActionResolver for LlmResolver {
    fn resolve(
        &self,
        query: &NavQuery,
        ctx: &SceneContext,
        decision: &VoterDecision,
    ) -> Result<ActionCall, MappingError> {
        if !matches!(
            decision.kind,
            DecisionKind::ActionNavigator | DecisionKind::GoalProgress
        ) {
            return Err(MappingError::NotActionable(decision.kind));
        }
        let resp = self
            .gateway
            .complete(&self.endpoint, &Self::request(query, ctx))
            .map_err(MappingError::Gateway)?;
        match resp.reply {
            Reply::ToolCall { name, arguments } => {
                ActionCall::from_invocation(&name, &arguments).map_err(|source| MappingError::Invalid {
                    name,
                    arguments,
                    source,
                })
            }
            Reply::Text { text } => Err(MappingError::NotAToolCall { text }),
        }
    }
}
