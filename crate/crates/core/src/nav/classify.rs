use crate::gateway::{ChatMessage, ChatRequest, Gateway, ModelEndpoint};
use crate::interpreter::{context_to_prompt_block, labels_match, SceneContext};
use crate::prompts;

use super::rules::{goal_target, parse_command};
use super::{ActionSubtype, GoalSubtype, NavCategory, NavError, NavQuery};

pub trait Classifier: Send + Sync {
    fn classify(&self, query: &NavQuery, ctx: &SceneContext) -> Result<NavCategory, NavError>;
}

/// Deterministic keyword classifier. Goal requests are checked before commands so
/// "walk over to the cannon" is not read as a bare movement.
#[derive(Debug, Clone, Default)]
pub struct RuleClassifier {
    /// Declared target of the task; when set it alone decides Direct vs Exploratory.
    target_hint: Option<String>,
}

impl RuleClassifier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_target(mut self, label: Option<String>) -> Self {
        self.target_hint = label;
        self
    }
}

impl Classifier for RuleClassifier {
    fn classify(&self, query: &NavQuery, ctx: &SceneContext) -> Result<NavCategory, NavError> {
        if goal_target(query.text()).is_some() {
            let direct = match &self.target_hint {
                Some(hint) => ctx.mentions(hint),
                None => ctx.labels().into_iter().any(|l| labels_match(query.text(), l)),
            };
            return Ok(NavCategory::GoalNavigator(if direct {
                GoalSubtype::Direct
            } else {
                GoalSubtype::Exploratory
            }));
        }
        if let Some(cmd) = parse_command(query.text()) {
            return Ok(NavCategory::ActionNavigator(if cmd.action.is_movement() {
                ActionSubtype::MovementExecutor
            } else {
                ActionSubtype::StabilityExecutor
            }));
        }
        Ok(NavCategory::SemanticInterpreter)
    }
}

/// Reads a constrained-choice classifier reply. Surrounding quotes, a trailing period,
/// case and an `_EXECUTOR` suffix are tolerated; anything else is rejected.
pub fn parse_category(reply: &str) -> Option<NavCategory> {
    let t = reply
        .trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '.' || c == '*')
        .trim()
        .to_ascii_uppercase()
        .replace([' ', '-'], "_")
        .replace("_/_", "/")
        .replace("_EXECUTOR", "");
    Some(match t.as_str() {
        "SEMANTIC_INTERPRETER" => NavCategory::SemanticInterpreter,
        "ACTION_NAVIGATOR/MOVEMENT" => NavCategory::ActionNavigator(ActionSubtype::MovementExecutor),
        "ACTION_NAVIGATOR/STABILITY" => NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor),
        "GOAL_NAVIGATOR/DIRECT" => NavCategory::GoalNavigator(GoalSubtype::Direct),
        "GOAL_NAVIGATOR/EXPLORATORY" => NavCategory::GoalNavigator(GoalSubtype::Exploratory),
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub struct LlmClassifier {
    gateway: Gateway,
    endpoint: ModelEndpoint,
}

impl LlmClassifier {
    pub fn new(gateway: Gateway, endpoint: ModelEndpoint) -> Self {
        Self { gateway, endpoint }
    }

    pub fn request(query: &NavQuery, ctx: &SceneContext) -> ChatRequest {
        let text = prompts::CLASSIFIER
            .render(&[("query", query.text()), ("context", &context_to_prompt_block(ctx))])
            .expect("classifier template placeholders");
        ChatRequest::new(vec![ChatMessage::user(text)]).with_temperature(0.0)
    }
}

impl Classifier for LlmClassifier {
    fn classify(&self, query: &NavQuery, ctx: &SceneContext) -> Result<NavCategory, NavError> {
        let resp = self
            .gateway
            .complete(&self.endpoint, &Self::request(query, ctx))
            .map_err(NavError::Classifier)?;
        let reply = resp.as_text().unwrap_or_default();
        parse_category(reply).ok_or_else(|| NavError::UnparseableCategory {
            reply: reply.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridCell;
    use crate::interpreter::VisualEntry;

    fn ctx_with(labels: &[&str]) -> SceneContext {
        let mut c = SceneContext::empty("d");
        c.visual.entries = labels
            .iter()
            .map(|l| VisualEntry {
                label: l.to_string(),
                cell: GridCell { column: 3, row: 3 },
            })
            .collect();
        c
    }

    fn classify(q: &str, ctx: &SceneContext) -> NavCategory {
        RuleClassifier::new().classify(&NavQuery::new(q).unwrap(), ctx).unwrap()
    }

    #[test]
    fn semantic_queries() {
        assert_eq!(
            classify("Where am I?", &ctx_with(&[])),
            NavCategory::SemanticInterpreter
        );
        assert_eq!(
            classify("What colour is the bus?", &ctx_with(&["yellow bus"])),
            NavCategory::SemanticInterpreter
        );
    }

    #[test]
    fn action_queries() {
        let empty = ctx_with(&[]);
        assert_eq!(
            classify("move forward", &empty),
            NavCategory::ActionNavigator(ActionSubtype::MovementExecutor)
        );
        assert_eq!(
            classify("turn left", &empty),
            NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor)
        );
        assert_eq!(
            classify("look down", &empty),
            NavCategory::ActionNavigator(ActionSubtype::StabilityExecutor)
        );
    }

    #[test]
    fn goal_subtype_follows_context() {
        let q = "I want to go to the yellow bus";
        assert_eq!(
            classify(q, &ctx_with(&["red car"])),
            NavCategory::GoalNavigator(GoalSubtype::Exploratory)
        );
        assert_eq!(
            classify(q, &ctx_with(&["yellow bus"])),
            NavCategory::GoalNavigator(GoalSubtype::Direct)
        );
    }

    #[test]
    fn target_hint_overrides_mentions() {
        let c = RuleClassifier::new().with_target(Some("doorway".into()));
        let q = NavQuery::new("Walk through the doorway on the left and enter the bedroom.").unwrap();
        assert_eq!(
            c.classify(&q, &ctx_with(&["bed"])).unwrap(),
            NavCategory::GoalNavigator(GoalSubtype::Exploratory)
        );
        assert_eq!(
            c.classify(&q, &ctx_with(&["doorway"])).unwrap(),
            NavCategory::GoalNavigator(GoalSubtype::Direct)
        );
    }

    #[test]
    fn category_replies() {
        assert_eq!(
            parse_category(" goal_navigator/direct.\n"),
            Some(NavCategory::GoalNavigator(GoalSubtype::Direct))
        );
        assert_eq!(
            parse_category("ACTION_NAVIGATOR / MOVEMENT_EXECUTOR"),
            Some(NavCategory::ActionNavigator(ActionSubtype::MovementExecutor))
        );
        assert_eq!(
            parse_category("\"SEMANTIC_INTERPRETER\""),
            Some(NavCategory::SemanticInterpreter)
        );
        assert_eq!(parse_category("I think it is a goal"), None);
        assert_eq!(parse_category("GOAL_NAVIGATOR"), None);
    }
}
