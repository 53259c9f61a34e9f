use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::{ChatRequest, ChatResponse, GatewayError, ModelEndpoint, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CassetteMode {
    /// Forward to the inner transport and remember every exchange.
    Record,
    /// Answer only from recorded exchanges; an unknown request is an error.
    Replay,
    /// Forward to the inner transport without recording.
    Passthrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub digest: String,
    pub model: String,
    /// First line of the last user message, for humans reading the file.
    #[serde(default)]
    pub note: String,
    pub response: ChatResponse,
}

#[derive(Debug, Serialize, Deserialize)]
struct CassetteFile {
    version: u32,
    entries: Vec<CassetteEntry>,
}

#[derive(Default)]
struct State {
    entries: Vec<CassetteEntry>,
    used: Vec<bool>,
}

/// Record/replay transport keyed by a digest of the model id and the canonical request.
pub struct Cassette {
    mode: CassetteMode,
    inner: Option<Arc<dyn Transport>>,
    state: Mutex<State>,
}

/// Compact JSON with object keys sorted at every depth.
fn write_canonical(v: &Value, out: &mut String) {
    match v {
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, k) in keys.into_iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push(':');
                write_canonical(&map[k], out);
            }
            out.push('}');
        }
        Value::Array(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_canonical(item, out);
            }
            out.push(']');
        }
        other => out.push_str(&other.to_string()),
    }
}

/// Stable hex digest of `(model id, request)` using sorted-key JSON.
pub fn request_digest(model: &str, request: &ChatRequest) -> String {
    let value = serde_json::json!({
        "model": model,
        "request": serde_json::to_value(request).expect("request serializes"),
    });
    let mut text = String::new();
    write_canonical(&value, &mut text);
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn note_for(request: &ChatRequest) -> String {
    request
        .messages
        .iter()
        .rev()
        .find(|m| m.role == super::Role::User)
        .and_then(|m| m.text.lines().find(|l| !l.trim().is_empty()))
        .map(|l| l.chars().take(100).collect())
        .unwrap_or_default()
}

impl Cassette {
    pub fn replay(entries: Vec<CassetteEntry>) -> Self {
        let used = vec![false; entries.len()];
        Self {
            mode: CassetteMode::Replay,
            inner: None,
            state: Mutex::new(State { entries, used }),
        }
    }

    pub fn record(inner: Arc<dyn Transport>) -> Self {
        Self {
            mode: CassetteMode::Record,
            inner: Some(inner),
            state: Mutex::new(State::default()),
        }
    }

    pub fn passthrough(inner: Arc<dyn Transport>) -> Self {
        Self {
            mode: CassetteMode::Passthrough,
            inner: Some(inner),
            state: Mutex::new(State::default()),
        }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let bytes = std::fs::read(path).map_err(|e| GatewayError::Cassette(format!("read {}: {e}", path.display())))?;
        let file: CassetteFile = serde_json::from_slice(&bytes)
            .map_err(|e| GatewayError::Cassette(format!("parse {}: {e}", path.display())))?;
        if file.version != 1 {
            return Err(GatewayError::Cassette(format!(
                "unsupported cassette version {}",
                file.version
            )));
        }
        Ok(Self::replay(file.entries))
    }

    pub fn mode(&self) -> CassetteMode {
        self.mode
    }

    pub fn entries(&self) -> Vec<CassetteEntry> {
        self.state.lock().expect("cassette lock").entries.clone()
    }

    /// Number of recorded entries not yet served (replay mode).
    pub fn unused(&self) -> usize {
        self.state
            .lock()
            .expect("cassette lock")
            .used
            .iter()
            .filter(|u| !**u)
            .count()
    }

    pub fn to_json(&self) -> String {
        let file = CassetteFile {
            version: 1,
            entries: self.entries(),
        };
        serde_json::to_string_pretty(&file).expect("cassette serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), GatewayError> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| GatewayError::Cassette(format!("mkdir {}: {e}", parent.display())))?;
        }
        std::fs::write(path, self.to_json())
            .map_err(|e| GatewayError::Cassette(format!("write {}: {e}", path.display())))
    }
}

impl Transport for Cassette {
    fn send(&self, endpoint: &ModelEndpoint, request: &ChatRequest) -> Result<ChatResponse, GatewayError> {
        let digest = request_digest(&endpoint.model, request);
        match self.mode {
            CassetteMode::Replay => {
                let mut state = self.state.lock().expect("cassette lock");
                let State { entries, used } = &mut *state;
                let hit = entries
                    .iter()
                    .zip(used.iter_mut())
                    .find(|(e, u)| !**u && e.digest == digest);
                match hit {
                    Some((entry, used)) => {
                        *used = true;
                        Ok(entry.response.clone())
                    }
                    None => Err(GatewayError::ReplayMiss {
                        digest,
                        model: endpoint.model.clone(),
                    }),
                }
            }
            CassetteMode::Record | CassetteMode::Passthrough => {
                let inner = self
                    .inner
                    .as_ref()
                    .ok_or_else(|| GatewayError::Cassette("no inner transport".into()))?;
                let response = inner.send(endpoint, request)?;
                if self.mode == CassetteMode::Record {
                    let mut state = self.state.lock().expect("cassette lock");
                    state.entries.push(CassetteEntry {
                        digest,
                        model: endpoint.model.clone(),
                        note: note_for(request),
                        response: response.clone(),
                    });
                    state.used.push(false);
                }
                Ok(response)
            }
        }
    }
}

impl std::fmt::Debug for Cassette {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cassette")
            .field("mode", &self.mode)
            .field("entries", &self.state.lock().map(|s| s.entries.len()).unwrap_or(0))
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatMessage;
    use std::sync::atomic::{AtomicUsize, Ordering};

    struct Counting(AtomicUsize);

    impl Transport for Counting {
        fn send(&self, _: &ModelEndpoint, r: &ChatRequest) -> Result<ChatResponse, GatewayError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            let mut resp = ChatResponse::text(format!("echo {}", r.messages[0].text));
            resp.latency_s = 0.25;
            Ok(resp)
        }
    }

    fn req(text: &str) -> ChatRequest {
        ChatRequest::new(vec![ChatMessage::user(text)]).with_temperature(0.0)
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let a = request_digest("m", &req("hello"));
        assert_eq!(a, request_digest("m", &req("hello")));
        assert_ne!(a, request_digest("m2", &req("hello")));
        assert_ne!(a, request_digest("m", &req("hello!")));
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn record_then_replay_without_network() {
        let live = Arc::new(Counting(AtomicUsize::new(0)));
        let ep = ModelEndpoint::new("e", "http://unused", "m");
        let rec = Cassette::record(live.clone());
        let first = rec.send(&ep, &req("a")).unwrap();
        rec.send(&ep, &req("b")).unwrap();
        assert_eq!(live.0.load(Ordering::SeqCst), 2);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        rec.save(&path).unwrap();

        let replay = Cassette::load(&path).unwrap();
        let again = replay.send(&ep, &req("a")).unwrap();
        assert_eq!(again, first);
        assert_eq!(again.latency_s, 0.25);
        assert_eq!(live.0.load(Ordering::SeqCst), 2);
        assert_eq!(replay.unused(), 1);
    }

    #[test]
    fn replay_miss_is_an_error() {
        let replay = Cassette::replay(vec![]);
        let ep = ModelEndpoint::new("e", "http://unused", "m");
        match replay.send(&ep, &req("a")) {
            Err(GatewayError::ReplayMiss { model, .. }) => assert_eq!(model, "m"),
            other => panic!("expected replay miss, got {other:?}"),
        }
    }

    #[test]
    fn repeated_requests_consume_entries_in_order() {
        let ep = ModelEndpoint::new("e", "http://unused", "m");
        let d = request_digest("m", &req("same"));
        let entry = |t: &str| CassetteEntry {
            digest: d.clone(),
            model: "m".into(),
            note: String::new(),
            response: ChatResponse::text(t),
        };
        let c = Cassette::replay(vec![entry("one"), entry("two")]);
        assert_eq!(c.send(&ep, &req("same")).unwrap().as_text(), Some("one"));
        assert_eq!(c.send(&ep, &req("same")).unwrap().as_text(), Some("two"));
        assert!(c.send(&ep, &req("same")).is_err());
    }

    #[test]
    fn passthrough_does_not_record() {
        let live = Arc::new(Counting(AtomicUsize::new(0)));
        let c = Cassette::passthrough(live.clone());
        c.send(&ModelEndpoint::new("e", "x", "m"), &req("a")).unwrap();
        assert!(c.entries().is_empty());
        assert_eq!(live.0.load(Ordering::SeqCst), 1);
    }
}
