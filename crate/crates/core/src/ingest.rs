//! Snapshot interchange format, version 1.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "timestamp": 1700000000,
//!   "pools": [
//!     {"id": "p01", "exchange": "uniswap", "base": "ETH", "quote": "USDC",
//!      "reserve_base": "500", "reserve_quote": "1000000", "fee_bps": 30}
//!   ]
//! }
//! ```
//!
//! Reserves are strings holding an exact decimal (`"20000.000000000000000001"`)
//! or a fraction (`"1/3"`); JSON numbers are refused so nothing passes
//! through a binary float. `fee_bps` may be omitted and defaults to 0.
//! Unknown keys fail in strict mode and are skipped with a warning otherwise.

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::PoolGraph;
use crate::market::{Asset, MarketError, Pool, PoolId, Snapshot};
use crate::rational::{self, Rational};

pub const SNAPSHOT_FORMAT_VERSION: u64 = 1;

const TOP_LEVEL_KEYS: [&str; 3] = ["format_version", "timestamp", "pools"];
const POOL_KEYS: [&str; 7] = ["id", "exchange", "base", "quote", "reserve_base", "reserve_quote", "fee_bps"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IngestError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error in pool {pool}: {message}")]
    Validation { pool: String, message: String },
    #[error("unsupported format_version {found} (supported: {SNAPSHOT_FORMAT_VERSION})")]
    Version { found: String },
}

impl IngestError {
    /// Pipeline stage that rejected the document.
    pub fn stage(&self) -> &'static str {
        match self {
            IngestError::Parse(_) => "parse",
            IngestError::Schema(_) | IngestError::Version { .. } => "schema",
            IngestError::Validation { .. } => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadOptions {
    /// Reject unknown keys instead of warning about them.
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Loaded {
    pub snapshot: Snapshot,
    /// Human-readable notes about skipped keys.
    pub warnings: Vec<String>,
}

/// Lenient load: unknown keys are ignored with a logged warning.
pub fn load_snapshot(document: &[u8]) -> Result<Snapshot, IngestError> {
    load_snapshot_with(document, &LoadOptions::default()).map(|l| l.snapshot)
}

pub fn load_snapshot_with(document: &[u8], options: &LoadOptions) -> Result<Loaded, IngestError> {
    let value: Value = serde_json::from_slice(document).map_err(|e| IngestError::Parse(e.to_string()))?;
    let top = value
        .as_object()
        .ok_or_else(|| IngestError::Schema("document must be a JSON object".into()))?;
    let mut warnings = Vec::new();
    check_keys(top, &TOP_LEVEL_KEYS, "document", options, &mut warnings)?;

    let version = top
        .get("format_version")
        .ok_or_else(|| IngestError::Schema("missing field format_version".into()))?;
    if version.as_u64() != Some(SNAPSHOT_FORMAT_VERSION) {
        return Err(IngestError::Version {
            found: version.to_string(),
        });
    }
    let timestamp = top
        .get("timestamp")
        .ok_or_else(|| IngestError::Schema("missing field timestamp".into()))?
        .as_i64()
        .ok_or_else(|| IngestError::Schema("timestamp must be an integer".into()))?;
    let records = top
        .get("pools")
        .ok_or_else(|| IngestError::Schema("missing field pools".into()))?
        .as_array()
        .ok_or_else(|| IngestError::Schema("pools must be an array".into()))?;

    let mut pools = Vec::with_capacity(records.len());
    for (index, record) in records.iter().enumerate() {
        let record = record
            .as_object()
            .ok_or_else(|| IngestError::Schema(format!("pools[{index}] must be an object")))?;
        pools.push(read_pool(index, record, options, &mut warnings)?);
    }
    let snapshot = Snapshot::new(timestamp, pools).map_err(validation)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Loaded { snapshot, warnings })
}

fn check_keys(
    object: &Map<String, Value>,
    known: &[&str],
    context: &str,
    options: &LoadOptions,
    warnings: &mut Vec<String>,
) -> Result<(), IngestError> {
    for key in object.keys().filter(|k| !known.contains(&k.as_str())) {
        if options.strict {
            return Err(IngestError::Schema(format!("{context}: unknown field {key}")));
        }
        warnings.push(format!("{context}: ignoring unknown field {key}"));
    }
    Ok(())
}

fn read_pool(
    index: usize,
    record: &Map<String, Value>,
    options: &LoadOptions,
    warnings: &mut Vec<String>,
) -> Result<Pool, IngestError> {
    let string = |key: &str| -> Result<&str, IngestError> {
        record
            .get(key)
            .ok_or_else(|| IngestError::Schema(format!("pools[{index}]: missing field {key}")))?
            .as_str()
            .ok_or_else(|| IngestError::Schema(format!("pools[{index}].{key} must be a string")))
    };
    let id_text = string("id")?;
    check_keys(record, &POOL_KEYS, &format!("pool {id_text}"), options, warnings)?;
    let invalid = |message: String| IngestError::Validation {
        pool: id_text.to_string(),
        message,
    };
    let id = PoolId::new(id_text).map_err(|e| invalid(e.to_string()))?;
    let base = Asset::new(string("base")?).map_err(|e| invalid(e.to_string()))?;
    let quote = Asset::new(string("quote")?).map_err(|e| invalid(e.to_string()))?;
    let exchange = string("exchange")?;
    let reserve = |key: &str| -> Result<Rational, IngestError> {
        let text = string(key)?;
        rational::parse_rational(text)
            .map_err(|e| IngestError::Schema(format!("pool {id_text}: {key} {text:?} is not an exact number: {e}")))
    };
    let reserve_base = reserve("reserve_base")?;
    let reserve_quote = reserve("reserve_quote")?;
    let fee_bps = match record.get("fee_bps") {
        None => 0,
        Some(v) => v
            .as_u64()
            .and_then(|f| u32::try_from(f).ok())
            .ok_or_else(|| IngestError::Schema(format!("pool {id_text}: fee_bps must be a non-negative integer")))?,
    };
    Pool::new(id, exchange, base, quote, reserve_base, reserve_quote, fee_bps).map_err(validation)
}

fn validation(err: MarketError) -> IngestError {
    let pool = match &err {
        MarketError::SameAsset { pool, .. }
        | MarketError::NonPositiveReserve { pool, .. }
        | MarketError::FeeTooLarge { pool, .. }
        | MarketError::AssetNotInPool { pool, .. } => pool.to_string(),
        MarketError::DuplicatePoolId(pool) | MarketError::UnknownPool(pool) => pool.to_string(),
        _ => String::new(),
    };
    IngestError::Validation {
        pool,
        message: err.to_string(),
    }
}

#[derive(Serialize)]
struct DocumentOut<'a> {
    format_version: u64,
    timestamp: i64,
    pools: Vec<PoolOut<'a>>,
}

#[derive(Serialize)]
struct PoolOut<'a> {
    id: &'a str,
    exchange: &'a str,
    base: &'a str,
    quote: &'a str,
    reserve_base: String,
    reserve_quote: String,
    fee_bps: u32,
}

/// Canonical bytes: fixed key order, pools by id, reserves in their
/// shortest exact form, two-space indent and a trailing newline.
pub fn save_snapshot(snapshot: &Snapshot) -> Vec<u8> {
    let doc = DocumentOut {
        format_version: SNAPSHOT_FORMAT_VERSION,
        timestamp: snapshot.timestamp(),
        pools: snapshot
            .pools()
            .iter()
            .map(|p| PoolOut {
                id: p.id().as_str(),
                exchange: p.exchange(),
                base: p.base().symbol(),
                quote: p.quote().symbol(),
                reserve_base: rational::format_exact(p.reserve_base()),
                reserve_quote: rational::format_exact(p.reserve_quote()),
                fee_bps: p.fee_bps(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("snapshot serializes");
    out.push(b'\n');
    out
}

pub fn save_graph(graph: &PoolGraph) -> Vec<u8> {
    graph.to_json().into_bytes()
}
