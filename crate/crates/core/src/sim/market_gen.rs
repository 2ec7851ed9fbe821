use std::collections::{BTreeMap, BTreeSet};

use num_traits::Signed;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::market::{Asset, Pool, PoolId, Snapshot};
use crate::rational::{self, serde_exact, Rational};

/// Ground-truth value of each asset in a common unit.
pub type Valuations = BTreeMap<Asset, Rational>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetSpec {
    pub symbol: Asset,
    #[serde(with = "serde_exact")]
    pub valuation: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub id: PoolId,
    #[serde(default = "default_exchange")]
    pub exchange: String,
    pub base: Asset,
    pub quote: Asset,
    /// Base-asset reserve; the quote reserve follows from the valuations.
    #[serde(with = "serde_exact")]
    pub depth: Rational,
    #[serde(default)]
    pub fee_bps: u32,
}

fn default_exchange() -> String {
    "amm".to_string()
}

/// A consistent market: one valuation vector prices every pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketSpec {
    #[serde(default)]
    pub timestamp: i64,
    pub assets: Vec<AssetSpec>,
    pub pools: Vec<PoolSpec>,
    #[serde(default)]
    pub seed: u64,
}

const REFERENCE_ASSETS: [(&str, i64, i64); 12] = [
    ("ETH", 2000, 1),
    ("USDC", 1, 1),
    ("WBTC", 30000, 1),
    ("DAI", 1, 1),
    ("LINK", 15, 1),
    ("UNI", 6, 1),
    ("AAVE", 90, 1),
    ("USDT", 1, 1),
    ("MKR", 1500, 1),
    ("CRV", 1, 2),
    ("SNX", 3, 1),
    ("COMP", 50, 1),
];

impl MarketSpec {
    /// The 12-asset, 24-pool reference market.
    ///
    /// Assets sit on a ring; pool `p{2i+1}` pairs ring neighbours `i, i+1`
    /// and `p{2i+2}` pairs `i, i+2`, so every three consecutive assets close
    /// a triangle and each asset trades in four pools. Depths are sized to
    /// 1–4 million units of value per side, varying pool to pool.
    pub fn reference() -> MarketSpec {
        let assets: Vec<AssetSpec> = REFERENCE_ASSETS
            .iter()
            .map(|&(sym, n, d)| AssetSpec {
                symbol: Asset::new(sym).expect("static symbol"),
                valuation: rational::ratio(n, d),
            })
            .collect();
        let n = assets.len();
        let mut pools = Vec::with_capacity(2 * n);
        for i in 0..n {
            for (k, step) in [(0usize, 1usize), (1, 2)] {
                let number = 2 * i + k + 1;
                let base = &assets[i];
                let quote = &assets[(i + step) % n];
                let value = rational::int(1_000_000 * (1 + (number as i64 % 4)));
                pools.push(PoolSpec {
                    id: PoolId::new(format!("p{number:02}")).expect("static id"),
                    exchange: if number % 2 == 1 { "uniswap" } else { "sushiswap" }.to_string(),
                    base: base.symbol.clone(),
                    quote: quote.symbol.clone(),
                    depth: value / &base.valuation,
                    fee_bps: 0,
                });
            }
        }
        MarketSpec {
            timestamp: 1_700_000_000,
            assets,
            pools,
            seed: 7,
        }
    }

    /// Random consistent market: `asset_count` assets named `T00..`, with
    /// integer valuations in `1..=1000` and `pool_count` distinct random
    /// pairs, all drawn from ChaCha8 seeded by `seed`.
    pub fn random(asset_count: usize, pool_count: usize, seed: u64) -> MarketSpec {
        assert!(asset_count >= 2, "need at least two assets");
        let max_pairs = asset_count * (asset_count - 1) / 2;
        assert!(pool_count <= max_pairs, "more pools than distinct pairs");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pick = |n: u64| rng.next_u64() % n;
        let assets: Vec<AssetSpec> = (0..asset_count)
            .map(|i| AssetSpec {
                symbol: Asset::new(format!("T{i:02}")).expect("generated symbol"),
                valuation: rational::int(1 + pick(1000) as i64),
            })
            .collect();
        let mut pairs = BTreeSet::new();
        let mut pools = Vec::with_capacity(pool_count);
        while pools.len() < pool_count {
            let a = pick(asset_count as u64) as usize;
            let b = pick(asset_count as u64) as usize;
            if a == b || !pairs.insert((a.min(b), a.max(b))) {
                continue;
            }
            let number = pools.len() + 1;
            pools.push(PoolSpec {
                id: PoolId::new(format!("r{number:03}")).expect("generated id"),
                exchange: default_exchange(),
                base: assets[a].symbol.clone(),
                quote: assets[b].symbol.clone(),
                depth: rational::int(10 + pick(990) as i64),
                fee_bps: 0,
            });
        }
        MarketSpec {
            timestamp: 0,
            assets,
            pools,
            seed,
        }
    }

    pub fn valuations(&self) -> Valuations {
        self.assets
            .iter()
            .map(|a| (a.symbol.clone(), a.valuation.clone()))
            .collect()
    }

    /// Ground-truth price of `base` in units of `quote`.
    pub fn true_price(&self, base: &Asset, quote: &Asset) -> Result<Rational, SimError> {
        let v = self.valuations();
        let vb = v.get(base).ok_or_else(|| SimError::UnknownAsset(base.clone()))?;
        let vq = v.get(quote).ok_or_else(|| SimError::UnknownAsset(quote.clone()))?;
        Ok(vb / vq)
    }

    /// Same spec with every pool charging `fee_bps`.
    pub fn with_fee(mut self, fee_bps: u32) -> MarketSpec {
        for p in &mut self.pools {
            p.fee_bps = fee_bps;
        }
        self
    }
}

/// Builds the snapshot: `reserve_base = depth`, `reserve_quote = depth ·
/// v(base) / v(quote)`.
pub fn generate_market(spec: &MarketSpec) -> Result<Snapshot, SimError> {
    let mut valuations = Valuations::new();
    for a in &spec.assets {
        if !a.valuation.is_positive() {
            return Err(SimError::InvalidValuation(a.symbol.clone()));
        }
        if valuations.insert(a.symbol.clone(), a.valuation.clone()).is_some() {
            return Err(SimError::DuplicateAsset(a.symbol.clone()));
        }
    }
    let value = |asset: &Asset| valuations.get(asset).ok_or_else(|| SimError::UnknownAsset(asset.clone()));
    let mut pools = Vec::with_capacity(spec.pools.len());
    for p in &spec.pools {
        let price = value(&p.base)? / value(&p.quote)?;
        if !p.depth.is_positive() {
            return Err(SimError::InvalidDepth(p.id.clone()));
        }
        pools.push(Pool::new(
            p.id.clone(),
            p.exchange.clone(),
            p.base.clone(),
            p.quote.clone(),
            p.depth.clone(),
            &p.depth * price,
            p.fee_bps,
        )?);
    }
    Ok(Snapshot::new(spec.timestamp, pools)?)
}
