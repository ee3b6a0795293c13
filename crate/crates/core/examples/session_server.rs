//! Runs the trial API in-process and plays a short session through it with a headless
//! client, then exports the raw-trial CSV.

use std::path::PathBuf;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use distortion_lab::distortions::DistortionSpec;
use distortion_lab::harness::{Corpus, CorpusImage, ExperimentConfig};
use distortion_lab::pixel::{io, ImageBuffer};
use distortion_lab::session::{router, AppState, ConfigRef, CreateSession, NextTrial, SessionCreated, Status};
use distortion_lab::taxonomy::Category;
use distortion_lab::{Error, Result};

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.expect("router is infallible");
    let status = resp.status();
    (status, resp.into_body().collect().await.expect("body").to_bytes().to_vec())
}

fn json_request(method: &str, uri: &str, body: String) -> Request<Body> {
    Request::builder().method(method).uri(uri).header("content-type", "application/json").body(Body::from(body)).expect("request")
}

pub fn run_example() -> Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("<tempdir>", e))?;
    let mut images = Vec::new();
    for cat in Category::ALL {
        for i in 0..3 {
            let img = ImageBuffer::from_fn(256, 256, 3, |c, r, col| (0.3 + 0.1 * c as f32 + 0.002 * ((r + col * i) % 100) as f32).min(1.0))?;
            let path: PathBuf = dir.path().join(format!("{}_{i}.png", cat.name()));
            io::save_png(&img, &path)?;
            images.push(CorpusImage { image_id: format!("{}_{i}", cat.name()), category: cat, path });
        }
    }
    let app = router(AppState::new(Corpus::new(images, 0.45)?, Some(dir.path().join("logs"))));
    let config = ExperimentConfig {
        name: "contrast_demo".into(),
        family: "contrast".into(),
        conditions: vec![DistortionSpec::Contrast { c: 1.0 }, DistortionSpec::Contrast { c: 0.1 }],
        trials_per_cell: 1,
        block_size: 16,
        practice_trials: 4,
        practice_blocks: 1,
        seed: 0,
        side: 224,
        expected_main_total: None,
    };

    let runtime = tokio::runtime::Builder::new_current_thread().build().map_err(|e| Error::io("<runtime>", e))?;
    runtime.block_on(async {
        let create = CreateSession { config: ConfigRef::Full(Box::new(config)), seed: 42, subject: Some("demo-observer".into()) };
        let (status, body) = call(&app, json_request("POST", "/sessions", serde_json::to_string(&create)?)).await;
        assert_eq!(status, StatusCode::CREATED);
        let created: SessionCreated = serde_json::from_slice(&body)?;
        println!("session {} with {} trials", created.session_id, created.trials);

        loop {
            let (_, body) = call(&app, Request::get(format!("/sessions/{}/next", created.session_id)).body(Body::empty()).unwrap()).await;
            let next: NextTrial = serde_json::from_slice(&body)?;
            if let Some(f) = next.block_feedback {
                println!("block feedback: {:.0}%", 100.0 * f);
            }
            if next.status == Status::Finished {
                break;
            }
            let index = next.trial_index.expect("unfinished session has a trial");
            let (s, png) = call(&app, Request::get(next.stimulus_url.unwrap()).body(Body::empty()).unwrap()).await;
            assert_eq!(s, StatusCode::OK);
            let shown = io::decode(&png)?;
            let response = if index % 3 == 0 { "null".to_string() } else { format!("\"{}\"", Category::RESPONSE_GRID[index % 16]) };
            let post = format!(
                r#"{{"trial_index":{index},"response":{response},"rt_ms":640,"reported_timings":{{"fixation_ms":300,"stimulus_ms":{},"mask_ms":200,"refresh_hz":60}}}}"#,
                if index == 5 { 266.7 } else { 200.0 }
            );
            let (s, _) = call(&app, json_request("POST", &format!("/sessions/{}/trials", created.session_id), post)).await;
            assert_eq!(s, StatusCode::OK);
            if index == 0 {
                println!("first stimulus {}x{} px, mask at {}", shown.image.width(), shown.image.height(), next.mask_url.unwrap());
            }
        }
        let (_, csv) = call(&app, Request::get(format!("/sessions/{}/export.csv", created.session_id)).body(Body::empty()).unwrap()).await;
        let csv = String::from_utf8(csv).expect("utf-8 csv");
        println!("{}", csv.lines().take(4).collect::<Vec<_>>().join("\n"));
        let (s, body) = call(&app, Request::get("/sessions/missing/next").body(Body::empty()).unwrap()).await;
        println!("unknown session -> {s}: {}", String::from_utf8_lossy(&body));
        Ok::<_, Error>(())
    })
}

fn main() {
    run_example().expect("session server example failed");
}
