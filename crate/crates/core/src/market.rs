//! Assets, constant-product pools, oriented prices and snapshots.
//!
//! All reserve and price arithmetic is exact. A [`Pool`] is immutable: swaps
//! return the updated pool alongside the output amount.

use std::collections::BTreeSet;
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, Rational};

/// Decimal digits used for the rational upper bound of an irrational square root.
pub const DEFAULT_SQRT_DIGITS: u32 = 18;
/// Relative tolerance on the achieved factor when pumping a pool that charges fees.
pub const PUMP_BISECTION_TOLERANCE: f64 = 1e-12;

const BPS_DENOM: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarketError {
    #[error("asset symbol must be non-empty")]
    EmptySymbol,
    #[error("pool id must be non-empty")]
    EmptyPoolId,
    #[error("pool {pool}: base and quote are both {asset}")]
    SameAsset { pool: PoolId, asset: Asset },
    #[error("pool {pool}: reserve of {asset} must be positive, got {value}")]
    NonPositiveReserve {
        pool: PoolId,
        asset: Asset,
        value: String,
    },
    #[error("pool {pool}: fee of {fee_bps} bps must be below 10000")]
    FeeTooLarge { pool: PoolId, fee_bps: u32 },
    #[error("asset {asset} is not traded in pool {pool}")]
    AssetNotInPool { pool: PoolId, asset: Asset },
    #[error("swap input must be positive, got {0}")]
    InvalidAmount(String),
    #[error("pump factor must exceed 1, got {0}")]
    InvalidFactor(String),
    #[error("duplicate pool id {0}")]
    DuplicatePoolId(PoolId),
    #[error("unknown pool {0}")]
    UnknownPool(PoolId),
}

/// Token symbol, case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Asset(String);

impl TryFrom<String> for Asset {
    type Error = MarketError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        Asset::new(value)
    }
}

impl From<Asset> for String {
    fn from(value: Asset) -> Self {
        value.0
    }
}

impl Asset {
    pub fn new(symbol: impl Into<String>) -> Result<Self, MarketError> {
        let symbol = symbol.into();
        if symbol.is_empty() {
            return Err(MarketError::EmptySymbol);
        }
        Ok(Asset(symbol))
    }

    pub fn symbol(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Asset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PoolId(String);

impl TryFrom<String> for PoolId {
    type Error = MarketError;
    fn try_from(value: String) -> Result<Self, Self::Error> {
        PoolId::new(value)
    }
}

impl From<PoolId> for String {
    fn from(value: PoolId) -> Self {
        value.0
    }
}

impl PoolId {
    pub fn new(id: impl Into<String>) -> Result<Self, MarketError> {
        let id = id.into();
        if id.is_empty() {
            return Err(MarketError::EmptyPoolId);
        }
        Ok(PoolId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PoolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A two-asset constant-product reserve pair on one venue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pool {
    id: PoolId,
    exchange: String,
    base: Asset,
    quote: Asset,
    reserve_base: Rational,
    reserve_quote: Rational,
    fee_bps: u32,
}

impl Pool {
    pub fn new(
        id: PoolId,
        exchange: impl Into<String>,
        base: Asset,
        quote: Asset,
        reserve_base: Rational,
        reserve_quote: Rational,
        fee_bps: u32,
    ) -> Result<Self, MarketError> {
        if base == quote {
            return Err(MarketError::SameAsset { pool: id, asset: base });
        }
        for (asset, value) in [(&base, &reserve_base), (&quote, &reserve_quote)] {
            if !value.is_positive() {
                return Err(MarketError::NonPositiveReserve {
                    pool: id,
                    asset: asset.clone(),
                    value: rational::format_exact(value),
                });
            }
        }
        if i64::from(fee_bps) >= BPS_DENOM {
            return Err(MarketError::FeeTooLarge { pool: id, fee_bps });
        }
        Ok(Pool {
            id,
            exchange: exchange.into(),
            base,
            quote,
            reserve_base,
            reserve_quote,
            fee_bps,
        })
    }

    pub fn id(&self) -> &PoolId {
        &self.id
    }
    pub fn exchange(&self) -> &str {
        &self.exchange
    }
    pub fn base(&self) -> &Asset {
        &self.base
    }
    pub fn quote(&self) -> &Asset {
        &self.quote
    }
    pub fn reserve_base(&self) -> &Rational {
        &self.reserve_base
    }
    pub fn reserve_quote(&self) -> &Rational {
        &self.reserve_quote
    }
    pub fn fee_bps(&self) -> u32 {
        self.fee_bps
    }

    pub fn contains(&self, asset: &Asset) -> bool {
        &self.base == asset || &self.quote == asset
    }

    /// The pool's asset that is not `asset`.
    pub fn other(&self, asset: &Asset) -> Result<&Asset, MarketError> {
        if asset == &self.base {
            Ok(&self.quote)
        } else if asset == &self.quote {
            Ok(&self.base)
        } else {
            Err(self.not_in_pool(asset))
        }
    }

    pub fn reserve_of(&self, asset: &Asset) -> Result<&Rational, MarketError> {
        if asset == &self.base {
            Ok(&self.reserve_base)
        } else if asset == &self.quote {
            Ok(&self.reserve_quote)
        } else {
            Err(self.not_in_pool(asset))
        }
    }

    /// `reserve_base · reserve_quote`.
    pub fn invariant(&self) -> Rational {
        &self.reserve_base * &self.reserve_quote
    }

    /// Same pool with new reserves (both must stay positive).
    pub fn with_reserves(
        &self,
        reserve_base: Rational,
        reserve_quote: Rational,
    ) -> Result<Self, MarketError> {
        Pool::new(
            self.id.clone(),
            self.exchange.clone(),
            self.base.clone(),
            self.quote.clone(),
            reserve_base,
            reserve_quote,
            self.fee_bps,
        )
    }

    pub fn with_fee(&self, fee_bps: u32) -> Result<Self, MarketError> {
        let mut pool = self.clone();
        if i64::from(fee_bps) >= BPS_DENOM {
            return Err(MarketError::FeeTooLarge {
                pool: pool.id,
                fee_bps,
            });
        }
        pool.fee_bps = fee_bps;
        Ok(pool)
    }

    fn not_in_pool(&self, asset: &Asset) -> MarketError {
        MarketError::AssetNotInPool {
            pool: self.id.clone(),
            asset: asset.clone(),
        }
    }
}

/// A price for the pair `numerator/denominator`: units of `denominator`
/// paid per one unit of `numerator`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrientedPrice {
    numerator: Asset,
    denominator: Asset,
    value: Rational,
}

impl OrientedPrice {
    /// `value` must be strictly positive.
    pub fn new(numerator: Asset, denominator: Asset, value: Rational) -> Option<Self> {
        value.is_positive().then_some(OrientedPrice {
            numerator,
            denominator,
            value,
        })
    }

    pub fn numerator(&self) -> &Asset {
        &self.numerator
    }
    pub fn denominator(&self) -> &Asset {
        &self.denominator
    }
    pub fn value(&self) -> &Rational {
        &self.value
    }
}

impl fmt::Display for OrientedPrice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{} = {}",
            self.numerator,
            self.denominator,
            rational::format_exact(&self.value)
        )
    }
}

/// Reserve ratio of `pool` oriented with `numerator` on top.
pub fn spot_price(pool: &Pool, numerator: &Asset) -> Result<OrientedPrice, MarketError> {
    let denominator = pool.other(numerator)?.clone();
    let value = pool.reserve_of(&denominator)? / pool.reserve_of(numerator)?;
    Ok(OrientedPrice {
        numerator: numerator.clone(),
        denominator,
        value,
    })
}

pub fn reciprocal(price: &OrientedPrice) -> OrientedPrice {
    OrientedPrice {
        numerator: price.denominator.clone(),
        denominator: price.numerator.clone(),
        value: price.value.recip(),
    }
}

/// Result of a swap against a pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Swap {
    pub asset_in: Asset,
    pub amount_in: Rational,
    pub asset_out: Asset,
    pub amount_out: Rational,
    pub pool: Pool,
}

/// Exact constant-product swap. The fee is withheld from the input before
/// pricing and stays in the pool.
pub fn swap_exact_in(
    pool: &Pool,
    asset_in: &Asset,
    amount_in: &Rational,
) -> Result<Swap, MarketError> {
    swap_inner(pool, asset_in, amount_in, None)
}

/// Like [`swap_exact_in`] but the output is rounded down to a multiple of
/// `quantum`, the way integer token amounts settle on chain.
pub fn swap_exact_in_floor(
    pool: &Pool,
    asset_in: &Asset,
    amount_in: &Rational,
    quantum: &Rational,
) -> Result<Swap, MarketError> {
    swap_inner(pool, asset_in, amount_in, Some(quantum))
}

fn swap_inner(
    pool: &Pool,
    asset_in: &Asset,
    amount_in: &Rational,
    quantum: Option<&Rational>,
) -> Result<Swap, MarketError> {
    let asset_out = pool.other(asset_in)?.clone();
    if !amount_in.is_positive() {
        return Err(MarketError::InvalidAmount(rational::format_exact(amount_in)));
    }
    let x = pool.reserve_of(asset_in)?;
    let y = pool.reserve_of(&asset_out)?;
    let effective = amount_in * after_fee(pool.fee_bps);
    let mut amount_out = y * &effective / (x + &effective);
    if let Some(q) = quantum {
        amount_out = rational::floor_to_quantum(&amount_out, q);
    }
    let new_in = x + amount_in;
    let new_out = y - &amount_out;
    let updated = if asset_in == pool.base() {
        pool.with_reserves(new_in, new_out)?
    } else {
        pool.with_reserves(new_out, new_in)?
    };
    Ok(Swap {
        asset_in: asset_in.clone(),
        amount_in: amount_in.clone(),
        asset_out,
        amount_out,
        pool: updated,
    })
}

fn after_fee(fee_bps: u32) -> Rational {
    rational::ratio(BPS_DENOM - i64::from(fee_bps), BPS_DENOM)
}

/// How to pump a pool: pay `amount_in` of `asset_in` to buy the other asset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PumpPlan {
    pub asset_in: Asset,
    pub amount_in: Rational,
}

/// Quote-asset input that multiplies the base asset's spot price (quote per
/// base) by `target_factor`.
pub fn pump_input_for_factor(pool: &Pool, target_factor: &Rational) -> Result<Rational, MarketError> {
    pump_plan(pool, pool.base(), target_factor, DEFAULT_SQRT_DIGITS).map(|p| p.amount_in)
}

/// Plan that multiplies the price of `asset_up` (in the pool's other asset)
/// by at least `target_factor`.
///
/// Fee-free pools use the closed form `y·(√f − 1)` with the square root
/// rounded up to `sqrt_digits` decimals; the result is exact when `f` is a
/// ratio of perfect squares. Pools with a fee are solved by bisection to a
/// relative factor error of [`PUMP_BISECTION_TOLERANCE`].
pub fn pump_plan(
    pool: &Pool,
    asset_up: &Asset,
    target_factor: &Rational,
    sqrt_digits: u32,
) -> Result<PumpPlan, MarketError> {
    if target_factor <= &Rational::one() {
        return Err(MarketError::InvalidFactor(rational::format_exact(target_factor)));
    }
    let asset_in = pool.other(asset_up)?.clone();
    let y = pool.reserve_of(&asset_in)?;
    let root = rational::sqrt_upper(target_factor, sqrt_digits);
    let fee_free = y * (root - Rational::one());
    if pool.fee_bps() == 0 {
        return Ok(PumpPlan {
            asset_in,
            amount_in: fee_free,
        });
    }

    let achieved = |amount: &Rational| -> Result<Rational, MarketError> {
        let before = spot_price(pool, asset_up)?;
        let swap = swap_exact_in(pool, &asset_in, amount)?;
        let after = spot_price(&swap.pool, asset_up)?;
        Ok(after.value / before.value)
    };
    // Paying fee_free/(1 − fee) prices exactly like the fee-free pump but
    // leaves more input in the pool, so it always overshoots.
    let mut hi = &fee_free / after_fee(pool.fee_bps());
    let mut lo = Rational::zero();
    let tolerance = rational::from_f64(PUMP_BISECTION_TOLERANCE).expect("finite tolerance");
    let two = rational::int(2);
    for _ in 0..256 {
        let excess = achieved(&hi)? / target_factor - Rational::one();
        if excess <= tolerance {
            break;
        }
        let mid = (&lo + &hi) / &two;
        if achieved(&mid)? >= *target_factor {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PumpPlan {
        asset_in,
        amount_in: hi,
    })
}

/// Timestamped, id-sorted set of pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    timestamp: i64,
    pools: Vec<Pool>,
}

impl Snapshot {
    /// Sorts pools by id and rejects duplicates.
    pub fn new(timestamp: i64, mut pools: Vec<Pool>) -> Result<Self, MarketError> {
        pools.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = pools.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(MarketError::DuplicatePoolId(w[0].id.clone()));
        }
        Ok(Snapshot { timestamp, pools })
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    pub fn pools(&self) -> &[Pool] {
        &self.pools
    }

    pub fn index_of(&self, id: &PoolId) -> Option<usize> {
        self.pools.binary_search_by(|p| p.id.cmp(id)).ok()
    }

    pub fn pool(&self, id: &PoolId) -> Result<&Pool, MarketError> {
        self.index_of(id)
            .map(|i| &self.pools[i])
            .ok_or_else(|| MarketError::UnknownPool(id.clone()))
    }

    /// Successor snapshot with one pool replaced (matched by id).
    pub fn with_pool(&self, pool: Pool) -> Result<Self, MarketError> {
        let i = self
            .index_of(pool.id())
            .ok_or_else(|| MarketError::UnknownPool(pool.id().clone()))?;
        let mut pools = self.pools.clone();
        pools[i] = pool;
        Ok(Snapshot {
            timestamp: self.timestamp,
            pools,
        })
    }

    pub fn with_timestamp(&self, timestamp: i64) -> Self {
        Snapshot {
            timestamp,
            pools: self.pools.clone(),
        }
    }

    pub fn assets(&self) -> BTreeSet<Asset> {
        self.pools
            .iter()
            .flat_map(|p| [p.base.clone(), p.quote.clone()])
            .collect()
    }
}
