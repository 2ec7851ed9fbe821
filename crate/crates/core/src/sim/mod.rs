//! Synthetic markets, pump attacks, arbitrage dynamics and the evaluation
//! harness that compares the graph oracle against spot and TWAP baselines.

mod arbitrage;
mod attack;
mod eval;
mod market_gen;
mod twap;

pub use arbitrage::{
    arbitrage_step, run_convergence, ArbitrageOutcome, ArbitrageTrade, ConvergencePoint, ConvergenceReport,
    ConvergenceStop, SETTLEMENT_DECIMALS, TERNARY_ITERATIONS,
};
pub use attack::{
    cheapest_attack_surface, execute_attack, Attack, AttackLedger, AttackScenario, AttackSurface, FlashLoanReport,
    Funding, LoanRecord, Side, TradeRecord,
};
pub use eval::{evaluate, EvalConfig, EvalReport, EvalRow, QueryPair, ScenarioFile};
pub use market_gen::{generate_market, AssetSpec, MarketSpec, PoolSpec, Valuations};
pub use twap::twap;

use thiserror::Error;

use crate::graph::GraphError;
use crate::market::{Asset, MarketError, PoolId};
use crate::pathfinder::QueryError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Market(#[from] MarketError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("asset {0} is not listed in the market spec")]
    UnknownAsset(Asset),
    #[error("asset {0} is listed twice")]
    DuplicateAsset(Asset),
    #[error("valuation of {0} must be positive")]
    InvalidValuation(Asset),
    #[error("no valuation for {0}")]
    MissingValuation(Asset),
    #[error("pool {0}: depth must be positive")]
    InvalidDepth(PoolId),
    #[error("price series is empty")]
    EmptySeries,
    #[error("window {window} exceeds series length {len}")]
    WindowTooLarge { window: usize, len: usize },
    #[error("window must be at least 1")]
    ZeroWindow,
    #[error("round count must be at least 1")]
    InvalidRounds,
    #[error("scenario {id}: {source}")]
    Scenario {
        id: String,
        #[source]
        source: Box<SimError>,
    },
}

impl SimError {
    pub(crate) fn in_scenario(self, id: &str) -> SimError {
        SimError::Scenario {
            id: id.to_string(),
            source: Box::new(self),
        }
    }
}
