use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::Arc;

use axum::body::{to_bytes, Body};
use axum::http::{Request, StatusCode};
use serde_json::{json, Value};
use tower::ServiceExt;
use triangle_oracle::service::{router, AppState};
use triangle_oracle_core::ingest::save_snapshot;
use triangle_oracle_core::market::{Asset, PoolId};
use triangle_oracle_core::rational::int;
use triangle_oracle_core::sim::{generate_market, AssetSpec, MarketSpec, PoolSpec};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn abc_snapshot(dir: &Path) -> PathBuf {
    let spec = MarketSpec {
        timestamp: 42,
        assets: [("A", 4), ("B", 2), ("C", 1)]
            .iter()
            .map(|&(s, v)| AssetSpec {
                symbol: Asset::new(s).unwrap(),
                valuation: int(v),
            })
            .collect(),
        pools: [("ab", "A", "B"), ("bc", "B", "C"), ("ca", "C", "A")]
            .iter()
            .map(|&(id, b, q)| PoolSpec {
                id: PoolId::new(id).unwrap(),
                exchange: "dex".into(),
                base: Asset::new(b).unwrap(),
                quote: Asset::new(q).unwrap(),
                depth: int(100),
                fee_bps: 0,
            })
            .collect(),
        seed: 0,
    };
    let path = dir.join("abc.json");
    std::fs::write(&path, save_snapshot(&generate_market(&spec).unwrap())).unwrap();
    path
}

async fn call(state: &Arc<AppState>, method: &str, uri: &str, body: &str) -> (StatusCode, Vec<u8>) {
    let request = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(Body::from(body.to_string()))
        .unwrap();
    let response = router(state.clone()).oneshot(request).await.unwrap();
    let status = response.status();
    (status, to_bytes(response.into_body(), usize::MAX).await.unwrap().to_vec())
}

fn parse(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap()
}

#[tokio::test]
async fn unloaded_service_answers_503() {
    let state = AppState::new(data("reference_snapshot.json"), true);
    let (status, body) = call(&state, "GET", "/health", "").await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    assert_eq!(parse(&body)["error"], "Loading");
    let (status, _) = call(&state, "POST", "/price", r#"{"base":"ETH","quote":"USDC"}"#).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
}

#[tokio::test]
async fn consistent_market_prices_a_in_c() {
    let dir = tempfile::tempdir().unwrap();
    let state = AppState::new(abc_snapshot(dir.path()), true);
    state.reload().await.unwrap();
    let (status, body) = call(&state, "POST", "/price", r#"{"base":"A","quote":"C","seed":9}"#).await;
    assert_eq!(status, StatusCode::OK);
    let body = parse(&body);
    assert_eq!(body["price_fraction"], "4/1");
    assert_eq!(body["price"], "4");
    assert_eq!(body["seed"], 9);
    assert_eq!(body["samples"], 5);
    assert_eq!(body["snapshot_timestamp"], 42);
    for step in body["path"].as_array().unwrap() {
        assert_eq!(step["snapshot_timestamp"], 42);
    }
}

#[tokio::test]
async fn health_reports_loaded_counts() {
    let state = AppState::new(data("reference_snapshot.json"), true);
    state.reload().await.unwrap();
    let (status, body) = call(&state, "GET", "/health", "").await;
    assert_eq!(status, StatusCode::OK);
    let body = parse(&body);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["pools"], 24);
    assert_eq!(body["nodes"], 24);
    assert_eq!(body["triangles"], 12);
    assert_eq!(body["format_version"], 1);
}

#[tokio::test]
async fn error_statuses() {
    let state = AppState::new(data("reference_snapshot.json"), true);
    state.reload().await.unwrap();
    let cases = [
        (r#"{"base":"ETH","quote":"ETH","seed":1}"#, StatusCode::BAD_REQUEST, "SameAsset"),
        (r#"{"base":"ETH""#, StatusCode::BAD_REQUEST, "MalformedRequest"),
        (r#"{"base":"ETH","quote":"USDC","extra":1}"#, StatusCode::BAD_REQUEST, "MalformedRequest"),
        (r#"{"base":"","quote":"USDC"}"#, StatusCode::BAD_REQUEST, "InvalidAsset"),
        (r#"{"base":"NOPE","quote":"USDC","seed":1}"#, StatusCode::NOT_FOUND, "NoSource"),
        (r#"{"base":"ETH","quote":"NOPE","seed":1}"#, StatusCode::NOT_FOUND, "NoTarget"),
    ];
    for (request, status, name) in cases {
        let (got, body) = call(&state, "POST", "/price", request).await;
        assert_eq!(got, status, "{request}");
        assert_eq!(parse(&body)["error"], name, "{request}");
    }
}

#[tokio::test]
async fn disconnected_assets_answer_409() {
    let dir = tempfile::tempdir().unwrap();
    let mut pools = Vec::new();
    for (prefix, syms) in [("l", ["A", "B", "C"]), ("r", ["X", "Y", "Z"])] {
        for (i, (b, q)) in [(0, 1), (1, 2), (2, 0)].iter().enumerate() {
            pools.push(json!({
                "id": format!("{prefix}{i}"), "exchange": "x", "base": syms[*b], "quote": syms[*q],
                "reserve_base": "5", "reserve_quote": "5", "fee_bps": 0
            }));
        }
    }
    let path = dir.path().join("split.json");
    std::fs::write(&path, json!({"format_version": 1, "timestamp": 0, "pools": pools}).to_string()).unwrap();
    let state = AppState::new(&path, true);
    state.reload().await.unwrap();
    let (status, body) = call(&state, "POST", "/price", r#"{"base":"A","quote":"X","seed":1}"#).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(parse(&body)["error"], "NoPath");
}

#[tokio::test]
async fn same_seed_same_bytes() {
    let state = AppState::new(data("reference_snapshot.json"), true);
    state.reload().await.unwrap();
    let request = r#"{"base":"LINK","quote":"COMP","seed":123,"samples":7}"#;
    let (_, a) = call(&state, "POST", "/price", request).await;
    let (_, b) = call(&state, "POST", "/price", request).await;
    assert_eq!(a, b);
}

#[tokio::test]
async fn failed_reload_keeps_previous_market() {
    let dir = tempfile::tempdir().unwrap();
    let path = abc_snapshot(dir.path());
    let state = AppState::new(&path, true);
    let (status, body) = call(&state, "POST", "/reload", "").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body)["snapshot_timestamp"], 42);

    std::fs::write(&path, "{ broken").unwrap();
    let (status, body) = call(&state, "POST", "/reload", "").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse(&body)["error"], "parse");
    let (status, body) = call(&state, "POST", "/price", r#"{"base":"A","quote":"C","seed":1}"#).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(parse(&body)["price_fraction"], "4/1");

    std::fs::remove_file(&path).unwrap();
    let (status, body) = call(&state, "POST", "/reload", "").await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(parse(&body)["error"], "read");
}

struct Child(std::process::Child);

impl Drop for Child {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

fn http(address: &str, method: &str, path: &str, body: &str) -> (u16, Value) {
    let mut stream = TcpStream::connect(address).unwrap();
    write!(
        stream,
        "{method} {path} HTTP/1.1\r\nHost: {address}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut raw = String::new();
    stream.read_to_string(&mut raw).unwrap();
    let status = raw[9..12].parse().unwrap();
    let (_, payload) = raw.split_once("\r\n\r\n").unwrap();
    (status, serde_json::from_str(payload).unwrap())
}

#[test]
fn serve_over_tcp() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_triangle-oracle"))
        .args(["serve", "--bind", "127.0.0.1:0", "--snapshot"])
        .arg(data("reference_snapshot.json"))
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let stdout = child.stdout.take().unwrap();
    let child = Child(child);
    let mut line = String::new();
    BufReader::new(stdout).read_line(&mut line).unwrap();
    let address = line.trim().strip_prefix("listening on http://").unwrap().to_string();

    let mut health = http(&address, "GET", "/health", "");
    for _ in 0..100 {
        if health.0 == 200 {
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(20));
        health = http(&address, "GET", "/health", "");
    }
    assert_eq!(health.0, 200);
    let (status, body) = http(&address, "POST", "/price", r#"{"base":"ETH","quote":"USDC","seed":5}"#);
    assert_eq!(status, 200);
    assert_eq!(body["price_fraction"], "2000/1");
    let (status, body) = http(&address, "POST", "/reload", "");
    assert_eq!(status, 200);
    assert_eq!(body["status"], "reloaded");
    drop(child);
}
