//! Request and response bodies shared by `price --json` and `POST /price`.

use serde::{Deserialize, Serialize};
use triangle_oracle_core::pathfinder::QueryResult;
use triangle_oracle_core::rational;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRequest {
    pub base: String,
    pub quote: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathStepBody {
    pub pool: String,
    pub numerator: String,
    pub denominator: String,
    pub price: String,
    pub price_fraction: String,
    /// Timestamp of the snapshot this pool's reserves came from.
    pub snapshot_timestamp: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResponse {
    pub base: String,
    pub quote: String,
    /// Decimal rendering, exact when it terminates within 18 places.
    pub price: String,
    /// Exact `numerator/denominator`.
    pub price_fraction: String,
    pub path: Vec<PathStepBody>,
    pub total_irregularity: f64,
    pub source_pool: String,
    pub target_pool: String,
    pub seed: u64,
    pub samples: u32,
    pub snapshot_timestamp: i64,
}

impl QueryResponse {
    pub fn from_result(result: &QueryResult) -> Self {
        let ts = result.snapshot_timestamp;
        QueryResponse {
            base: result.base.to_string(),
            quote: result.quote.to_string(),
            price: result.price_decimal(),
            price_fraction: result.price_fraction(),
            path: result
                .path
                .steps
                .iter()
                .map(|s| PathStepBody {
                    pool: s.pool.to_string(),
                    numerator: s.price.numerator().to_string(),
                    denominator: s.price.denominator().to_string(),
                    price: rational::format_decimal(s.price.value(), 18),
                    price_fraction: rational::format_fraction(s.price.value()),
                    snapshot_timestamp: ts,
                })
                .collect(),
            total_irregularity: result.path.total_irregularity,
            source_pool: result.source_pool.to_string(),
            target_pool: result.target_pool.to_string(),
            seed: result.seed,
            samples: result.samples,
            snapshot_timestamp: ts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// Stable error name such as `NoPath` or `SameAsset`.
    pub error: String,
    pub message: String,
}
