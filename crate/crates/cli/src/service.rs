//! Read-only price service.
//!
//! The loaded snapshot and its graph live together behind one `ArcSwap`, so
//! a request clones a single `Arc` and answers entirely from that pair even
//! if `/reload` swaps in a new one halfway through. Reloads take a mutex so
//! two of them never interleave; queries never wait on it.

use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use arc_swap::ArcSwapOption;
use axum::body::Bytes;
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::Serialize;
use tokio::net::TcpListener;
use tokio::sync::Mutex;
use triangle_oracle_core::graph::{build_graph, PoolGraph};
use triangle_oracle_core::ingest::{load_snapshot_with, LoadOptions, SNAPSHOT_FORMAT_VERSION};
use triangle_oracle_core::market::{Asset, Snapshot};
use triangle_oracle_core::pathfinder::{price_query, QueryError, QueryOptions};

use crate::wire::{ErrorBody, QueryRequest, QueryResponse};
use crate::DEFAULT_SAMPLES;

pub struct Market {
    pub snapshot: Snapshot,
    pub graph: PoolGraph,
}

pub struct AppState {
    snapshot_path: PathBuf,
    strict: bool,
    current: ArcSwapOption<Market>,
    reload_lock: Mutex<()>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReloadError {
    pub stage: String,
    pub message: String,
}

impl AppState {
    /// State with nothing loaded yet; every query answers 503 until
    /// [`reload`](Self::reload) succeeds.
    pub fn new(snapshot_path: impl Into<PathBuf>, strict: bool) -> Arc<Self> {
        Arc::new(AppState {
            snapshot_path: snapshot_path.into(),
            strict,
            current: ArcSwapOption::empty(),
            reload_lock: Mutex::new(()),
        })
    }

    pub fn market(&self) -> Option<Arc<Market>> {
        self.current.load_full()
    }

    /// Reads the configured path, builds the graph and swaps both in at
    /// once. On failure the previous market stays in place.
    pub async fn reload(&self) -> Result<Arc<Market>, ReloadError> {
        let _guard = self.reload_lock.lock().await;
        let path = self.snapshot_path.clone();
        let strict = self.strict;
        let built = tokio::task::spawn_blocking(move || -> Result<Market, ReloadError> {
            let bytes = std::fs::read(&path).map_err(|e| ReloadError {
                stage: "read".into(),
                message: format!("cannot read {}: {e}", path.display()),
            })?;
            let loaded = load_snapshot_with(&bytes, &LoadOptions { strict }).map_err(|e| ReloadError {
                stage: e.stage().into(),
                message: e.to_string(),
            })?;
            for w in &loaded.warnings {
                log::warn!("{w}");
            }
            let graph = build_graph(&loaded.snapshot);
            Ok(Market {
                snapshot: loaded.snapshot,
                graph,
            })
        })
        .await
        .expect("reload task panicked")?;
        let market = Arc::new(built);
        self.current.store(Some(market.clone()));
        Ok(market)
    }
}

fn json<T: Serialize>(status: StatusCode, body: &T) -> Response {
    let bytes = serde_json::to_vec(body).expect("body serializes");
    (status, [(header::CONTENT_TYPE, "application/json")], bytes).into_response()
}

fn error(status: StatusCode, name: &str, message: impl Into<String>) -> Response {
    json(
        status,
        &ErrorBody {
            error: name.to_string(),
            message: message.into(),
        },
    )
}

fn loading() -> Response {
    error(StatusCode::SERVICE_UNAVAILABLE, "Loading", "snapshot is still loading")
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    format_version: u64,
    snapshot_timestamp: i64,
    pools: usize,
    nodes: usize,
    triangles: usize,
}

async fn health(State(state): State<Arc<AppState>>) -> Response {
    match state.market() {
        None => loading(),
        Some(m) => json(
            StatusCode::OK,
            &Health {
                status: "ok",
                format_version: SNAPSHOT_FORMAT_VERSION,
                snapshot_timestamp: m.snapshot.timestamp(),
                pools: m.snapshot.pools().len(),
                nodes: m.graph.nodes().len(),
                triangles: m.graph.triangles().len(),
            },
        ),
    }
}

fn query_status(e: &QueryError) -> StatusCode {
    match e {
        QueryError::NoSource(_) | QueryError::NoTarget(_) => StatusCode::NOT_FOUND,
        QueryError::NoPath { .. } => StatusCode::CONFLICT,
        _ => StatusCode::BAD_REQUEST,
    }
}

/// Answers one request against `market`; also used by tests.
pub fn answer(market: &Market, request: &QueryRequest, seed: u64) -> Result<QueryResponse, (StatusCode, ErrorBody)> {
    let bad = |e: &dyn std::fmt::Display| {
        (
            StatusCode::BAD_REQUEST,
            ErrorBody {
                error: "InvalidAsset".into(),
                message: e.to_string(),
            },
        )
    };
    let base = Asset::new(request.base.as_str()).map_err(|e| bad(&e))?;
    let quote = Asset::new(request.quote.as_str()).map_err(|e| bad(&e))?;
    let options = QueryOptions::seeded(seed).with_samples(request.samples.unwrap_or(DEFAULT_SAMPLES));
    price_query(&market.graph, &base, &quote, &options)
        .map(|r| QueryResponse::from_result(&r))
        .map_err(|e| {
            (
                query_status(&e),
                ErrorBody {
                    error: e.name().into(),
                    message: e.to_string(),
                },
            )
        })
}

async fn price(State(state): State<Arc<AppState>>, body: Bytes) -> Response {
    let request: QueryRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return error(StatusCode::BAD_REQUEST, "MalformedRequest", e.to_string()),
    };
    let Some(market) = state.market() else {
        return loading();
    };
    let seed = request.seed.unwrap_or_else(rand::random::<u64>);
    match answer(&market, &request, seed) {
        Ok(response) => json(StatusCode::OK, &response),
        Err((status, body)) => json(status, &body),
    }
}

#[derive(Serialize)]
struct Reloaded {
    status: &'static str,
    snapshot_timestamp: i64,
    pools: usize,
}

async fn reload(State(state): State<Arc<AppState>>) -> Response {
    match state.reload().await {
        Ok(m) => json(
            StatusCode::OK,
            &Reloaded {
                status: "reloaded",
                snapshot_timestamp: m.snapshot.timestamp(),
                pools: m.snapshot.pools().len(),
            },
        ),
        Err(e) => error(StatusCode::UNPROCESSABLE_ENTITY, &e.stage, e.message),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(health))
        .route("/price", post(price))
        .route("/reload", post(reload))
        .with_state(state)
}

/// Serves on `listener` until `shutdown` resolves. The initial load runs in
/// the background so `/health` can report 503 meanwhile.
pub async fn serve(
    state: Arc<AppState>,
    listener: TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    let initial = state.clone();
    tokio::spawn(async move {
        if let Err(e) = initial.reload().await {
            log::error!("initial load failed ({}): {}", e.stage, e.message);
        }
    });
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

pub async fn bind(address: &str) -> std::io::Result<(TcpListener, SocketAddr)> {
    let listener = TcpListener::bind(address).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}
