use std::path::{Path, PathBuf};
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use distortion_lab::distortions::DistortionSpec;
use distortion_lab::harness::{Corpus, CorpusImage, ExperimentConfig};
use distortion_lab::pixel::{io, ImageBuffer};
use distortion_lab::session::{build_plan, read_session_log, router, AppState, SessionState};
use distortion_lab::taxonomy::Category;
use distortion_lab::trial::{read_csv, Response};

fn corpus(dir: &Path, per_category: usize) -> Corpus {
    let mut images = Vec::new();
    for cat in Category::ALL {
        for i in 0..per_category {
            let img = ImageBuffer::from_fn(256, 256, 3, |c, r, col| (0.2 + 0.1 * c as f32 + 0.003 * ((r * 3 + col + i * 7) % 100) as f32).min(1.0)).unwrap();
            let path: PathBuf = dir.join(format!("{}_{i}.png", cat.name()));
            io::save_png(&img, &path).unwrap();
            images.push(CorpusImage { image_id: format!("{}_{i}", cat.name()), category: cat, path });
        }
    }
    Corpus::new(images, 0.4423).unwrap()
}

fn config() -> ExperimentConfig {
    ExperimentConfig {
        name: "contrast_api".into(),
        family: "contrast".into(),
        conditions: vec![DistortionSpec::Contrast { c: 1.0 }, DistortionSpec::Contrast { c: 0.3 }],
        trials_per_cell: 1,
        block_size: 16,
        practice_trials: 2,
        practice_blocks: 1,
        seed: 0,
        side: 224,
        expected_main_total: None,
    }
}

async fn send(app: &Router, req: Request<Body>) -> (StatusCode, String, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let ctype = resp.headers().get("content-type").map(|v| v.to_str().unwrap().to_string()).unwrap_or_default();
    (status, ctype, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn get(app: &Router, uri: &str) -> (StatusCode, String, Vec<u8>) {
    send(app, Request::get(uri).body(Body::empty()).unwrap()).await
}

async fn post(app: &Router, uri: &str, body: Value) -> (StatusCode, Value) {
    let req = Request::post(uri).header("content-type", "application/json").body(Body::from(body.to_string())).unwrap();
    let (s, _, b) = send(app, req).await;
    (s, serde_json::from_slice(&b).unwrap())
}

fn setup() -> (tempfile::TempDir, Arc<AppState>, Router) {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(corpus(dir.path(), 3), Some(dir.path().join("logs")));
    let app = router(state.clone());
    (dir, state, app)
}

#[tokio::test]
async fn scripted_session_round_trip() {
    let (dir, _state, app) = setup();
    let (s, created) = post(&app, "/sessions", json!({"config": config(), "seed": 9, "subject": "p01"})).await;
    assert_eq!(s, StatusCode::CREATED, "{created}");
    let sid = created["session_id"].as_str().unwrap().to_string();
    assert_eq!(created["trials"], 34);
    assert_eq!(created["practice_trials"], 2);

    let mut answered = 0;
    loop {
        let (s, _, body) = get(&app, &format!("/sessions/{sid}/next")).await;
        assert_eq!(s, StatusCode::OK);
        let next: Value = serde_json::from_slice(&body).unwrap();
        if next["status"] == "finished" {
            assert_eq!(next["completed"], 34);
            break;
        }
        assert_eq!(next["phase_timings"]["stimulus_ms"], 200);
        assert_eq!(next["response_grid"].as_array().unwrap().len(), 16);
        let index = next["trial_index"].as_u64().unwrap();
        for url in [&next["stimulus_url"], &next["mask_url"]] {
            let (s, ctype, png) = get(&app, url.as_str().unwrap()).await;
            assert_eq!((s, ctype.as_str()), (StatusCode::OK, "image/png"));
            let decoded = io::decode(&png).unwrap();
            assert_eq!((decoded.image.width(), decoded.image.height()), (224, 224));
        }
        let response = if index % 5 == 0 { Value::Null } else { json!("dog") };
        let (s, ack) = post(&app, &format!("/sessions/{sid}/trials"), json!({"trial_index": index, "response": response, "rt_ms": 512})).await;
        assert_eq!(s, StatusCode::OK, "{ack}");
        assert_eq!(ack["duplicate"], false);

        let (s, again) = post(&app, &format!("/sessions/{sid}/trials"), json!({"trial_index": index, "response": "cat", "rt_ms": 100})).await;
        assert_eq!(s, StatusCode::OK);
        assert_eq!(again["duplicate"], true);
        assert_eq!(again["record"], ack["record"]);
        answered += 1;
    }
    assert_eq!(answered, 34);

    let (s, ctype, csv) = get(&app, &format!("/sessions/{sid}/export.csv")).await;
    assert_eq!(s, StatusCode::OK);
    assert!(ctype.starts_with("text/csv"));
    let rows = read_csv(csv.as_slice()).unwrap();
    assert_eq!(rows.len(), 34);
    assert_eq!(rows.iter().filter(|r| r.is_practice).count(), 2);
    assert!(rows.iter().all(|r| r.subject_or_run == "p01" && r.experiment == "contrast_api"));
    for r in &rows {
        let expect = if (r.trial - 1) % 5 == 0 { Response::NoResponse } else { Response::Category(Category::Dog) };
        assert_eq!(r.response, expect);
        assert_eq!(r.rt_ms, if expect == Response::NoResponse { None } else { Some(512) });
    }

    let (header, events) = read_session_log(&dir.path().join("logs").join(format!("{sid}.jsonl"))).unwrap();
    assert_eq!((header.subject.as_str(), header.seed), ("p01", 9));
    let labelled: Vec<(String, Category)> =
        Category::ALL.iter().flat_map(|cat| (0..3).map(move |i| (format!("{}_{i}", cat.name()), *cat))).collect();
    let plan = build_plan(&header.config, &labelled, header.seed).unwrap();
    let replayed = SessionState::replay(plan, &events).unwrap();
    assert_eq!(replayed.to_rows("p01", 1), rows);
}

#[tokio::test]
async fn out_of_order_and_bad_requests() {
    let (_dir, _state, app) = setup();
    let (_, created) = post(&app, "/sessions", json!({"config": config(), "seed": 1})).await;
    let sid = created["session_id"].as_str().unwrap();

    let (s, e) = post(&app, &format!("/sessions/{sid}/trials"), json!({"trial_index": 3, "response": "dog", "rt_ms": 400})).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(e["code"], "conflict");

    let (s, e) = post(&app, &format!("/sessions/{sid}/trials"), json!({"trial_index": 0, "response": "zebra"})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(e["code"], "invalid_request");

    let (s, e) = post(&app, "/sessions", json!({"config": "no_such_preset", "seed": 1})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "{e}");

    let (s, e) = post(&app, "/sessions", json!({"config": "uniform_noise", "seed": 1})).await;
    assert_eq!(s, StatusCode::BAD_REQUEST, "corpus of 48 images is too small: {e}");
    assert!(e["message"].as_str().unwrap().contains("insufficient"));

    for uri in ["/sessions/s9999/next", "/stimuli/s9999-00000.png", &format!("/stimuli/{sid}-99999.png"), "/nowhere"] {
        let (s, _, body) = get(&app, uri).await;
        assert_eq!(s, StatusCode::NOT_FOUND, "{uri}");
        let v: Value = serde_json::from_slice(&body).unwrap();
        assert_eq!(v["code"], "not_found");
    }
}

#[tokio::test]
async fn sessions_get_distinct_ids_and_seeded_stimuli() {
    let (_dir, _state, app) = setup();
    let (_, a) = post(&app, "/sessions", json!({"config": config(), "seed": 5})).await;
    let (_, b) = post(&app, "/sessions", json!({"config": config(), "seed": 5})).await;
    let (a, b) = (a["session_id"].as_str().unwrap(), b["session_id"].as_str().unwrap());
    assert_ne!(a, b);
    for suffix in ["00000.png", "00000-mask.png", "00017.png"] {
        let (_, _, x) = get(&app, &format!("/stimuli/{a}-{suffix}")).await;
        let (_, _, y) = get(&app, &format!("/stimuli/{b}-{suffix}")).await;
        assert_eq!(x, y, "{suffix}");
    }
}
