use serde::{Deserialize, Serialize};

use crate::interpreter::SceneContext;

use super::vote::{vote_goal_reached, Verdict, VoteOutcome, VoterBackend};
use super::{Classifier, NavCategory, NavError, NavQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DecisionKind {
    SemanticInterpreter,
    ActionNavigator,
    GoalReached,
    GoalProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoterDecision {
    pub kind: DecisionKind,
    pub category: NavCategory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vote: Option<VoteOutcome>,
}

/// Classifier plus the voting agents consulted for goal queries.
pub struct DecisionVoter {
    pub classifier: Box<dyn Classifier>,
    pub voters: Vec<Box<dyn VoterBackend>>,
}

impl DecisionVoter {
    pub fn new(classifier: Box<dyn Classifier>, voters: Vec<Box<dyn VoterBackend>>) -> Self {
        Self { classifier, voters }
    }

    pub fn decide(&self, query: &NavQuery, ctx: &SceneContext) -> Result<VoterDecision, NavError> {
        decide(query, ctx, self.classifier.as_ref(), &self.voters)
    }
}

/// One pass of the decision voter: classify, return non-goal categories as they are,
/// and put goal queries to a vote.
pub fn decide(
    query: &NavQuery,
    ctx: &SceneContext,
    classifier: &dyn Classifier,
    voters: &[Box<dyn VoterBackend>],
) -> Result<VoterDecision, NavError> {
    let category = classifier.classify(query, ctx)?;
    let kind = match category {
        NavCategory::SemanticInterpreter => DecisionKind::SemanticInterpreter,
        NavCategory::ActionNavigator(_) => DecisionKind::ActionNavigator,
        NavCategory::GoalNavigator(_) => {
            let vote = vote_goal_reached(query, ctx, voters)?;
            let kind = match vote.verdict {
                Verdict::Reached => DecisionKind::GoalReached,
                Verdict::NotReached => DecisionKind::GoalProgress,
            };
            return Ok(VoterDecision {
                kind,
                category,
                vote: Some(vote),
            });
        }
    };
    Ok(VoterDecision {
        kind,
        category,
        vote: None,
    })
}
