//! Shared fixtures: a scripted stand-in for the hosted models and the configs that
//! point the pipeline at it.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde_json::{json, Map, Value};

use navai_core::gateway::{CassetteMode, ChatRequest, ChatResponse, GatewayError, ModelEndpoint, Transport};
use navai_core::orchestrator::{CassetteConfig, Config, Endpoints};

pub fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

pub fn suite_dir(name: &str) -> PathBuf {
    manifest_dir().join("suites").join(name)
}

pub fn cassette_path(name: &str) -> PathBuf {
    manifest_dir()
        .join("tests/fixtures/cassettes")
        .join(format!("{name}.json"))
}

pub const VOTERS: usize = 3;

pub fn endpoints() -> Endpoints {
    let ep = |name: &str| ModelEndpoint::new(name, "http://127.0.0.1:9/v1", format!("scripted-{name}"));
    Endpoints {
        interpreter: Some(ep("vision")),
        classifier: Some(ep("classifier")),
        action: Some(ep("action")),
        voters: (1..=VOTERS).map(|i| ep(&format!("voter-{i}"))).collect(),
    }
}

pub fn config(cassette: Option<(&str, CassetteMode)>) -> Config {
    Config {
        endpoints: endpoints(),
        cassette: cassette.map(|(name, mode)| CassetteConfig {
            path: cassette_path(name),
            mode,
        }),
        ..Config::default()
    }
}

/// Deterministic model stand-in. It reads the prompt the way a cooperative model
/// would: it picks a category from keywords, maps commands to tool calls, sees
/// nothing in images, and votes REACHED once a voter has been asked
/// `reached_after` times.
pub struct ScriptedModel {
    reached_after: usize,
    delays: HashMap<String, Duration>,
    votes: Mutex<HashMap<String, usize>>,
}

impl ScriptedModel {
    pub fn new(reached_after: usize) -> Self {
        Self {
            reached_after,
            delays: HashMap::new(),
            votes: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_delay(mut self, endpoint: &str, delay: Duration) -> Self {
        self.delays.insert(endpoint.to_string(), delay);
        self
    }
}

fn request_line(text: &str, prefix: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(prefix))
        .unwrap_or("")
        .trim()
        .to_lowercase()
}

pub fn scripted_category(query: &str) -> &'static str {
    let q = query.to_lowercase();
    let has = |w: &[&str]| w.iter().any(|x| q.contains(x));
    if has(&[" for the ", " to the ", "find ", "reach ", "through the ", "over to "]) {
        "GOAL_NAVIGATOR/EXPLORATORY"
    } else if has(&["move forward", "move left", "move right"]) {
        "ACTION_NAVIGATOR/MOVEMENT"
    } else if has(&["rotate", "turn", "look up", "look down", "scan"]) {
        "ACTION_NAVIGATOR/STABILITY"
    } else {
        "SEMANTIC_INTERPRETER"
    }
}

/// Function name and duration a cooperative model would choose for a basic command.
pub fn scripted_call(query: &str) -> Option<(&'static str, f64)> {
    let q = query.to_lowercase();
    let name = [
        ("move forward", "move_forward"),
        ("move left", "move_left"),
        ("move right", "move_right"),
        ("rotate left", "in_place_rotate_to_left"),
        ("rotate right", "in_place_rotate_to_right"),
        ("look up", "look_up"),
        ("look down", "look_down"),
    ]
    .iter()
    .find(|(k, _)| q.contains(k))
    .map(|(_, n)| *n)?;
    let seconds = q
        .split_whitespace()
        .zip(q.split_whitespace().skip(1))
        .find(|(_, unit)| unit.starts_with("second"))
        .and_then(|(n, _)| n.parse().ok())
        .unwrap_or(2.0);
    Some((name, seconds))
}

impl Transport for ScriptedModel {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        if let Some(d) = self.delays.get(&endpoint.name) {
            thread::sleep(*d);
        }
        let text: String = request
            .messages
            .iter()
            .map(|m| m.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        if !request.tools.is_empty() {
            let query = request_line(&text, "Request:");
            let (name, seconds) = scripted_call(&query).unwrap_or(("in_place_rotate_to_left", 1.0));
            let args: Map<String, Value> = json!({ "duration": seconds }).as_object().cloned().unwrap();
            return Ok(ChatResponse::tool_call(name, args));
        }
        if text.contains("Classify a navigation request") {
            return Ok(ChatResponse::text(scripted_category(&request_line(&text, "Request:"))));
        }
        if text.contains("whether the goal has been reached") {
            let mut votes = self.votes.lock().unwrap();
            let n = votes.entry(endpoint.name.clone()).or_default();
            let verdict = if *n >= self.reached_after {
                "REACHED"
            } else {
                "NOT_REACHED"
            };
            *n += 1;
            return Ok(ChatResponse::text(verdict));
        }
        Ok(ChatResponse::text("none"))
    }
}
