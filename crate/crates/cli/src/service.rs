//! Live HTTP service: one simulated agent, one task at a time.
//!
//! Readers (`/state`, `/frame`) see the state after the last completed turn. Turn
//! records stream on `/events`; subscribers that fall behind are disconnected.

use std::convert::Infallible;
use std::sync::{Arc, Mutex, MutexGuard};
use std::thread;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::broadcast;

use navai_core::orchestrator::{
    execute, Backends, Mode, RunLabels, RunSettings, Runtime, TaskReport, TaskSpec, Termination, TurnRecord,
};
use navai_core::sim::{render, resolve_scene, Pose, Scene};

const EVENT_BUFFER: usize = 64;

/// Defaults applied to every query the service accepts.
#[derive(Debug, Clone)]
pub struct ServiceOptions {
    pub scene: String,
    pub mode: Mode,
    pub max_turns: u32,
    pub rotation_step: f64,
    /// Pause after each turn, so a watcher can follow along.
    pub turn_delay: Duration,
}

impl ServiceOptions {
    pub fn new(scene: impl Into<String>) -> Self {
        Self {
            scene: scene.into(),
            mode: Mode::Oracle,
            max_turns: 25,
            rotation_step: 45.0,
            turn_delay: Duration::ZERO,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Status {
    #[serde(rename = "idle")]
    Idle,
    #[serde(rename = "running")]
    Running,
    #[serde(rename = "GOAL_REACHED")]
    GoalReached,
    #[serde(rename = "failed")]
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskSummary {
    pub task_id: u64,
    pub query: String,
    pub success: bool,
    pub turns: u32,
    pub termination: Termination,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rotations: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub answer: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl TaskSummary {
    fn of(task_id: u64, query: &str, r: &TaskReport) -> Self {
        Self {
            task_id,
            query: query.to_string(),
            success: r.success,
            turns: r.turns,
            termination: r.termination,
            rotations: r.rotations,
            answer: r.answer.clone(),
            diagnostic: r.diagnostic.clone(),
        }
    }
}

struct Shared {
    scene: Scene,
    pose: Pose,
    status: Status,
    task_id: u64,
    query: Option<String>,
    turns: u32,
    frame_png: Arc<Vec<u8>>,
    frame_digest: String,
    last: Option<TaskSummary>,
}

#[derive(Debug, Clone)]
struct Message {
    kind: &'static str,
    data: String,
}

#[derive(Clone)]
pub struct AppState {
    shared: Arc<Mutex<Shared>>,
    events: broadcast::Sender<Message>,
    runtime: Arc<Runtime>,
    settings: RunSettings,
    options: ServiceOptions,
}

fn snapshot(scene: &Scene, pose: &Pose, settings: &RunSettings) -> (Arc<Vec<u8>>, String) {
    let frame = render(scene, pose, settings.width, settings.height);
    let png = frame.to_png().expect("rendered frames encode");
    (Arc::new(png), frame.digest())
}

impl AppState {
    pub fn new(runtime: Runtime, options: ServiceOptions) -> Result<Self, String> {
        let settings = RunSettings::from_runtime(&runtime).map_err(|e| e.to_string())?;
        let scene = resolve_scene(&options.scene, None).map_err(|e| e.to_string())?;
        let pose = scene.agent_start();
        let (frame_png, frame_digest) = snapshot(&scene, &pose, &settings);
        let (events, _) = broadcast::channel(EVENT_BUFFER);
        Ok(Self {
            shared: Arc::new(Mutex::new(Shared {
                scene,
                pose,
                status: Status::Idle,
                task_id: 0,
                query: None,
                turns: 0,
                frame_png,
                frame_digest,
                last: None,
            })),
            events,
            runtime: Arc::new(runtime),
            settings,
            options,
        })
    }

    fn lock(&self) -> MutexGuard<'_, Shared> {
        self.shared.lock().unwrap_or_else(|p| p.into_inner())
    }

    fn publish(&self, kind: &'static str, data: serde_json::Value) {
        // No subscribers is not an error.
        let _ = self.events.send(Message {
            kind,
            data: data.to_string(),
        });
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/state", get(get_state))
        .route("/frame", get(get_frame))
        .route("/query", post(post_query))
        .route("/events", get(get_events))
        .route("/reset", post(post_reset))
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn error(status: StatusCode, message: impl Into<String>) -> Response {
    (status, Json(json!({ "error": message.into() }))).into_response()
}

async fn get_state(State(state): State<AppState>) -> Json<serde_json::Value> {
    let s = state.lock();
    Json(json!({
        "scene": s.scene.name(),
        "pose": s.pose,
        "status": s.status,
        "task_id": s.task_id,
        "query": s.query,
        "turns": s.turns,
        "frame_digest": s.frame_digest,
        "last_task": s.last,
    }))
}

async fn get_frame(State(state): State<AppState>) -> Response {
    let (png, digest) = {
        let s = state.lock();
        (s.frame_png.clone(), s.frame_digest.clone())
    };
    let mut resp = (
        [(header::CONTENT_TYPE, HeaderValue::from_static("image/png"))],
        png.as_ref().clone(),
    )
        .into_response();
    if let Ok(v) = HeaderValue::from_str(&digest) {
        resp.headers_mut().insert("x-frame-digest", v);
    }
    resp
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    pub text: String,
    #[serde(default)]
    pub target_label: Option<String>,
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub max_turns: Option<u32>,
}

/// Starts a task from the agent's current pose.
async fn post_query(State(state): State<AppState>, body: Result<Json<QueryBody>, JsonRejection>) -> Response {
    let body = match body {
        Ok(Json(b)) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.body_text()),
    };
    if body.text.trim().is_empty() {
        return error(StatusCode::BAD_REQUEST, "query text must not be empty");
    }
    let o = &state.options;
    let mut spec = TaskSpec::new(o.scene.clone(), body.text.clone(), body.mode.unwrap_or(o.mode));
    spec.target_label = body.target_label;
    spec.max_turns = body.max_turns.unwrap_or(o.max_turns);
    spec.rotation_step = o.rotation_step;
    if let Err(e) = spec.validate() {
        return error(StatusCode::BAD_REQUEST, e.to_string());
    }
    let backends = match Backends::for_task(&spec, &state.runtime, &state.settings) {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, e.to_string()),
    };

    let (task_id, scene, start) = {
        let mut s = state.lock();
        if s.status == Status::Running {
            return error(StatusCode::CONFLICT, "a task is already running");
        }
        s.status = Status::Running;
        s.task_id += 1;
        s.turns = 0;
        s.query = Some(spec.query.clone());
        (s.task_id, s.scene.clone(), s.pose)
    };
    state.publish(
        "status",
        json!({ "task_id": task_id, "status": Status::Running, "query": spec.query }),
    );

    let worker = state.clone();
    thread::spawn(move || run_worker(worker, task_id, spec, scene, start, backends));
    (
        StatusCode::ACCEPTED,
        Json(json!({ "task_id": task_id, "status": Status::Running })),
    )
        .into_response()
}

fn run_worker(state: AppState, task_id: u64, spec: TaskSpec, scene: Scene, start: Pose, backends: Backends) {
    let labels = RunLabels {
        attempt: format!("task-{task_id}"),
        environment: scene.name().to_string(),
    };
    let mut observer = |rec: &TurnRecord| {
        let (png, digest) = snapshot(&scene, &rec.pose_after, &state.settings);
        {
            let mut s = state.lock();
            s.pose = rec.pose_after;
            s.turns = rec.turn;
            s.frame_png = png;
            s.frame_digest = digest;
        }
        state.publish("turn", json!({ "task_id": task_id, "record": rec }));
        if !state.options.turn_delay.is_zero() {
            thread::sleep(state.options.turn_delay);
        }
    };
    let report = execute(&spec, &scene, start, &backends, &state.settings, &labels, &mut observer);
    let status = match (report.success, report.termination) {
        (true, Termination::GoalReached) => Status::GoalReached,
        (true, _) => Status::Idle,
        (false, _) => Status::Failed,
    };
    let summary = TaskSummary::of(task_id, &spec.query, &report);
    tracing::info!(task_id, success = report.success, turns = report.turns, termination = %report.termination, "task finished");
    {
        let mut s = state.lock();
        s.status = status;
        s.turns = report.turns;
        s.last = Some(summary.clone());
    }
    state.publish(
        "status",
        json!({ "task_id": task_id, "status": status, "report": summary }),
    );
}

fn subscriber_stream(rx: broadcast::Receiver<Message>) -> impl Stream<Item = Message> {
    stream::unfold(rx, |mut rx| async move {
        match rx.recv().await {
            Ok(m) => Some((m, rx)),
            // Lagging subscribers are dropped rather than slowing the loop.
            Err(_) => None,
        }
    })
}

async fn get_events(State(state): State<AppState>) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let events = subscriber_stream(state.events.subscribe()).map(|m| Ok(Event::default().event(m.kind).data(m.data)));
    Sse::new(events).keep_alive(KeepAlive::default())
}

async fn post_reset(State(state): State<AppState>) -> Response {
    let scene = match resolve_scene(&state.options.scene, None) {
        Ok(s) => s,
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    };
    let pose = scene.agent_start();
    let (png, digest) = snapshot(&scene, &pose, &state.settings);
    {
        let mut s = state.lock();
        if s.status == Status::Running {
            return error(StatusCode::CONFLICT, "a task is running");
        }
        s.scene = scene;
        s.pose = pose;
        s.status = Status::Idle;
        s.query = None;
        s.turns = 0;
        s.frame_png = png;
        s.frame_digest = digest;
        s.last = None;
    }
    state.publish("reset", json!({ "pose": pose }));
    (StatusCode::OK, Json(json!({ "status": Status::Idle, "pose": pose }))).into_response()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[tokio::test]
    async fn lagging_subscriber_is_dropped() {
        let (tx, rx) = broadcast::channel(2);
        for i in 0..5 {
            tx.send(Message {
                kind: "turn",
                data: i.to_string(),
            })
            .unwrap();
        }
        let got: Vec<Message> = subscriber_stream(rx).collect().await;
        assert!(got.is_empty());

        let rx = tx.subscribe();
        tx.send(Message {
            kind: "turn",
            data: "5".into(),
        })
        .unwrap();
        drop(tx);
        let got: Vec<String> = subscriber_stream(rx).map(|m| m.data).collect().await;
        assert_eq!(got, ["5"]);
    }
}
