use std::time::{Duration, Instant};

use navai::service::{router, AppState, ServiceOptions};
use navai_core::orchestrator::Runtime;
use serde_json::{json, Value};

async fn start(options: ServiceOptions) -> String {
    let state = AppState::new(Runtime::oracle(), options).unwrap();
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, router(state)).await.unwrap() });
    format!("http://{addr}")
}

async fn state(c: &reqwest::Client, base: &str) -> Value {
    c.get(format!("{base}/state"))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap()
}

async fn wait_idle(c: &reqwest::Client, base: &str) -> Value {
    let deadline = Instant::now() + Duration::from_secs(20);
    loop {
        let s = state(c, base).await;
        if s["status"] != "running" {
            return s;
        }
        assert!(Instant::now() < deadline, "task did not finish");
        tokio::time::sleep(Duration::from_millis(10)).await;
    }
}

#[tokio::test(flavor = "multi_thread")]
async fn move_forward_advances_pose_and_returns_to_idle() {
    let base = start(ServiceOptions::new("ship")).await;
    let c = reqwest::Client::new();
    let before = state(&c, &base).await;
    assert_eq!(before["status"], "idle");
    let r = c
        .post(format!("{base}/query"))
        .json(&json!({"text": "move forward"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 202);
    let after = wait_idle(&c, &base).await;
    assert_eq!(after["status"], "idle");
    assert_eq!(after["turns"], 1);
    let z0 = before["pose"]["position"][2].as_f64().unwrap();
    let z1 = after["pose"]["position"][2].as_f64().unwrap();
    assert!((z1 - z0 - 3.0).abs() < 1e-9, "{z0} -> {z1}");
    assert_ne!(before["frame_digest"], after["frame_digest"]);
}

#[tokio::test(flavor = "multi_thread")]
async fn frame_is_stable_png_between_actions() {
    let base = start(ServiceOptions::new("highway")).await;
    let c = reqwest::Client::new();
    let a = c.get(format!("{base}/frame")).send().await.unwrap();
    assert_eq!(a.headers()["content-type"], "image/png");
    let a = a.bytes().await.unwrap();
    let b = c
        .get(format!("{base}/frame"))
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    assert_eq!(&a[..8], b"\x89PNG\r\n\x1a\n");
    assert_eq!(a, b);
}

#[tokio::test(flavor = "multi_thread")]
async fn second_query_conflicts_while_running() {
    let mut options = ServiceOptions::new("ship");
    options.turn_delay = Duration::from_millis(40);
    let base = start(options).await;
    let c = reqwest::Client::new();
    let goal = json!({"text": "Walk over to the cannon on your right", "target_label": "cannon"});
    let r = c.post(format!("{base}/query")).json(&goal).send().await.unwrap();
    assert_eq!(r.status(), 202);
    let r = c
        .post(format!("{base}/query"))
        .json(&json!({"text": "move left"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 409);
    let r = c.post(format!("{base}/reset")).send().await.unwrap();
    assert_eq!(r.status(), 409);
    let done = wait_idle(&c, &base).await;
    assert_eq!(done["status"], "GOAL_REACHED");
    assert_eq!(done["last_task"]["termination"], "GOAL_REACHED");

    let r = c.post(format!("{base}/reset")).send().await.unwrap();
    assert_eq!(r.status(), 200);
    let s = state(&c, &base).await;
    assert_eq!(s["status"], "idle");
    assert_eq!(s["turns"], 0);
    assert_eq!(s["pose"]["position"][2], 0.0);
}

#[tokio::test(flavor = "multi_thread")]
async fn malformed_bodies_are_bad_requests() {
    let base = start(ServiceOptions::new("ship")).await;
    let c = reqwest::Client::new();
    for body in [
        r#"{"txt":"move"}"#,
        "not json",
        r#"{"text":"   "}"#,
        r#"{"text":"x","max_turns":0}"#,
    ] {
        let r = c
            .post(format!("{base}/query"))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .unwrap();
        assert_eq!(r.status(), 400, "{body}");
        let v: Value = r.json().await.unwrap();
        assert!(!v["error"].as_str().unwrap().is_empty());
    }
    let r = c
        .post(format!("{base}/query"))
        .json(&json!({"text": "move forward", "mode": "llm"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 400);
    assert_eq!(state(&c, &base).await["status"], "idle");
}

#[tokio::test(flavor = "multi_thread")]
async fn events_stream_turn_records_in_order() {
    let mut options = ServiceOptions::new("ship");
    options.turn_delay = Duration::from_millis(5);
    let base = start(options).await;
    let c = reqwest::Client::new();
    let mut stream = c.get(format!("{base}/events")).send().await.unwrap();
    assert_eq!(stream.headers()["content-type"], "text/event-stream");
    let r = c
        .post(format!("{base}/query"))
        .json(&json!({"text": "Walk over to the cannon on your right", "target_label": "cannon"}))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), 202);

    let mut buf = String::new();
    let deadline = Instant::now() + Duration::from_secs(20);
    while !buf.contains("\"GOAL_REACHED\"") || !buf.contains("event: status\ndata: {\"report\"") {
        assert!(Instant::now() < deadline, "stream stalled: {buf}");
        match tokio::time::timeout(Duration::from_secs(5), stream.chunk()).await {
            Ok(Ok(Some(bytes))) => buf.push_str(&String::from_utf8_lossy(&bytes)),
            other => panic!("stream ended: {other:?}"),
        }
        if buf.matches("event: status").count() >= 2 {
            break;
        }
    }
    let turns: Vec<u64> = buf
        .split("\n\n")
        .filter(|e| e.starts_with("event: turn"))
        .map(|e| {
            let data = e.lines().find_map(|l| l.strip_prefix("data: ")).unwrap();
            serde_json::from_str::<Value>(data).unwrap()["record"]["turn"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert!(!turns.is_empty());
    assert_eq!(turns, (1..=turns.len() as u64).collect::<Vec<_>>());
    let final_state = wait_idle(&c, &base).await;
    assert_eq!(final_state["turns"].as_u64().unwrap(), turns.len() as u64);
}
