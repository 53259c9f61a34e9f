use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::gateway::{ChatMessage, ChatRequest, Gateway, ModelEndpoint};
use crate::interpreter::{context_to_prompt_block, SceneContext};
use crate::prompts;

use super::{NavError, NavQuery};

/// Footprint clearance at or below which the oracle considers a target reached.
pub const REACH_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Reached,
    NotReached,
}

/// One agent's ballot: a verdict or the reason it could not give one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ballot {
    pub agent: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vote: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

impl Ballot {
    pub fn vote(agent: impl Into<String>, v: Verdict) -> Self {
        Self {
            agent: agent.into(),
            vote: Some(v),
            error: None,
        }
    }

    pub fn error(agent: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            agent: agent.into(),
            vote: None,
            error: Some(message.into()),
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        self.vote
    }

    pub fn error_message(&self) -> Option<&str> {
        self.error.as_deref()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoteOutcome {
    pub verdict: Verdict,
    pub ballots: Vec<Ballot>,
    /// Number of ballots that carried a verdict.
    pub quorum_used: usize,
}

/// Strict majority over non-error ballots; a tie keeps navigating.
pub fn tally(ballots: Vec<Ballot>) -> Result<VoteOutcome, NavError> {
    if ballots.is_empty() {
        return Err(NavError::NoVoters);
    }
    let reached = ballots.iter().filter(|b| b.vote == Some(Verdict::Reached)).count();
    let not_reached = ballots.iter().filter(|b| b.vote == Some(Verdict::NotReached)).count();
    let quorum_used = reached + not_reached;
    if quorum_used == 0 {
        return Err(NavError::AllVotersFailed {
            errors: ballots
                .iter()
                .map(|b| format!("{}: {}", b.agent, b.error.as_deref().unwrap_or("no vote")))
                .collect(),
        });
    }
    let verdict = if 2 * reached > quorum_used {
        Verdict::Reached
    } else {
        Verdict::NotReached
    };
    Ok(VoteOutcome {
        verdict,
        ballots,
        quorum_used,
    })
}

pub trait VoterBackend: Send + Sync {
    fn id(&self) -> &str;
    fn vote(&self, query: &NavQuery, ctx: &SceneContext) -> Result<Verdict, String>;
}

/// Polls every agent concurrently and tallies. Ballots keep the agents' order.
pub fn vote_goal_reached(
    query: &NavQuery,
    ctx: &SceneContext,
    agents: &[Box<dyn VoterBackend>],
) -> Result<VoteOutcome, NavError> {
    if agents.is_empty() {
        return Err(NavError::NoVoters);
    }
    let ballots = std::thread::scope(|s| {
        let handles: Vec<_> = agents.iter().map(|a| s.spawn(move || a.vote(query, ctx))).collect();
        agents
            .iter()
            .zip(handles)
            .map(|(a, h)| match h.join() {
                Ok(Ok(v)) => Ballot::vote(a.id(), v),
                Ok(Err(e)) => Ballot::error(a.id(), e),
                Err(_) => Ballot::error(a.id(), "voter thread panicked"),
            })
            .collect()
    });
    tally(ballots)
}

/// Reads a single-token verdict. Anything else is not a vote.
pub fn parse_verdict(reply: &str) -> Option<Verdict> {
    let t = reply
        .trim()
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '.' || c == '*')
        .trim()
        .to_ascii_uppercase()
        .replace([' ', '-'], "_");
    match t.as_str() {
        "REACHED" => Some(Verdict::Reached),
        "NOT_REACHED" => Some(Verdict::NotReached),
        _ => None,
    }
}

/// Ground-truth voter: REACHED once the declared target's footprint is within
/// `REACH_RADIUS`. An optional seeded flip probability models an unreliable agent.
#[derive(Debug)]
pub struct OracleVoter {
    id: String,
    target: Option<String>,
    flip_p: f64,
    seed: u64,
    calls: AtomicU64,
}

impl OracleVoter {
    pub fn new(id: impl Into<String>, target: Option<String>) -> Self {
        Self {
            id: id.into(),
            target,
            flip_p: 0.0,
            seed: 0,
            calls: AtomicU64::new(0),
        }
    }

    pub fn with_flips(mut self, flip_p: f64, seed: u64) -> Self {
        self.flip_p = flip_p;
        self.seed = seed;
        self
    }
}

impl VoterBackend for OracleVoter {
    fn id(&self) -> &str {
        &self.id
    }

    fn vote(&self, _query: &NavQuery, ctx: &SceneContext) -> Result<Verdict, String> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let Some(target) = &self.target else {
            return Ok(Verdict::NotReached);
        };
        let truth = ctx
            .truth_for(target)
            .ok_or_else(|| format!("no ground truth for {target:?} in context"))?;
        let honest = if truth.clearance <= REACH_RADIUS {
            Verdict::Reached
        } else {
            Verdict::NotReached
        };
        if self.flip_p > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ call);
            if rng.random_bool(self.flip_p.clamp(0.0, 1.0)) {
                return Ok(match honest {
                    Verdict::Reached => Verdict::NotReached,
                    Verdict::NotReached => Verdict::Reached,
                });
            }
        }
        Ok(honest)
    }
}

#[derive(Debug, Clone)]
pub struct LlmVoter {
    gateway: Gateway,
    endpoint: ModelEndpoint,
}

impl LlmVoter {
    pub fn new(gateway: Gateway, endpoint: ModelEndpoint) -> Self {
        Self { gateway, endpoint }
    }

    pub fn request(query: &NavQuery, ctx: &SceneContext) -> ChatRequest {
        let text = prompts::VOTER
            .render(&[("query", query.text()), ("context", &context_to_prompt_block(ctx))])
            .expect("voter template placeholders");
        ChatRequest::new(vec![ChatMessage::user(text)]).with_temperature(0.0)
    }
}

impl VoterBackend for LlmVoter {
    fn id(&self) -> &str {
        &self.endpoint.name
    }

    fn vote(&self, query: &NavQuery, ctx: &SceneContext) -> Result<Verdict, String> {
        let resp = self
            .gateway
            .complete(&self.endpoint, &Self::request(query, ctx))
            .map_err(|e| e.to_string())?;
        let reply = resp.as_text().ok_or("voter replied with a tool call")?;
        parse_verdict(reply).ok_or_else(|| format!("not a verdict: {reply:?}"))
    }
}
