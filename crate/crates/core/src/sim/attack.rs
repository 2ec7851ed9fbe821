use std::collections::BTreeMap;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{SimError, Valuations};
use crate::graph::{build_graph, PoolGraph};
use crate::market::{pump_plan, swap_exact_in, Asset, PoolId, Snapshot, DEFAULT_SQRT_DIGITS};
use crate::pathfinder::candidate_endpoints;
use crate::rational::{self, serde_exact, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Source,
    Target,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attack {
    /// Control run: nothing is traded.
    None,
    /// Buy `asset` (default: the pool's base) until its price in the pool
    /// is multiplied by `factor`.
    PumpPool {
        target: PoolId,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        asset: Option<Asset>,
        #[serde(with = "serde_exact")]
        factor: Rational,
    },
    /// Pump every candidate endpoint pool on one side of the `base/quote`
    /// query so that each pool's quoted price moves the reported price up
    /// by `factor`.
    PumpEndpointSet {
        side: Side,
        base: Asset,
        quote: Asset,
        #[serde(with = "serde_exact")]
        factor: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Funding {
    #[default]
    Capital,
    Flashloan {
        fee_bps: u32,
        /// Gas cost in valuation units.
        #[serde(default = "Rational::zero", with = "serde_exact")]
        gas: Rational,
        /// Profit extracted from the victim, in valuation units.
        #[serde(default = "Rational::zero", with = "serde_exact")]
        external_profit: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackScenario {
    pub id: String,
    #[serde(flatten)]
    pub attack: Attack,
    #[serde(default)]
    pub funding: Funding,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TradeRecord {
    pub pool: PoolId,
    pub asset_in: Asset,
    pub amount_in: Rational,
    pub asset_out: Asset,
    pub amount_out: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoanRecord {
    pub asset: Asset,
    pub principal: Rational,
    pub interest: Rational,
    /// What selling the pumped tokens back into the manipulated pools returns.
    pub unwind_proceeds: Rational,
}

impl LoanRecord {
    pub fn net(&self) -> Rational {
        &self.unwind_proceeds - &self.principal - &self.interest
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlashLoanReport {
    pub fee_bps: u32,
    pub gas: Rational,
    pub external_profit: Rational,
    pub loans: Vec<LoanRecord>,
}

impl FlashLoanReport {
    /// `Σ net(loan)·v(asset) + external_profit − gas`.
    pub fn net_value(&self, valuations: &Valuations) -> Result<Rational, SimError> {
        let mut total = &self.external_profit - &self.gas;
        for loan in &self.loans {
            let v = valuations
                .get(&loan.asset)
                .ok_or_else(|| SimError::MissingValuation(loan.asset.clone()))?;
            total += loan.net() * v;
        }
        Ok(total)
    }

    /// Repayment is only possible when the proceeds cover loan, interest and gas.
    pub fn feasible(&self, valuations: &Valuations) -> Result<bool, SimError> {
        Ok(!self.net_value(valuations)?.is_negative())
    }
}

/// Exact record of what the attacker traded.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AttackLedger {
    pub trades: Vec<TradeRecord>,
    /// Net token flow to the attacker per asset (negative = paid).
    pub flows: BTreeMap<Asset, Rational>,
    pub flashloan: Option<FlashLoanReport>,
}

impl AttackLedger {
    /// Total input per asset.
    pub fn inputs(&self) -> BTreeMap<Asset, Rational> {
        let mut out: BTreeMap<Asset, Rational> = BTreeMap::new();
        for t in &self.trades {
            *out.entry(t.asset_in.clone()).or_insert_with(Rational::zero) += &t.amount_in;
        }
        out
    }

    pub fn pools(&self) -> Vec<PoolId> {
        self.trades.iter().map(|t| t.pool.clone()).collect()
    }
}

/// Applies `scenario` and returns the manipulated snapshot with the ledger.
pub fn execute_attack(snapshot: &Snapshot, scenario: &AttackScenario) -> Result<(Snapshot, AttackLedger), SimError> {
    run_attack(snapshot, scenario).map_err(|e| e.in_scenario(&scenario.id))
}

fn run_attack(snapshot: &Snapshot, scenario: &AttackScenario) -> Result<(Snapshot, AttackLedger), SimError> {
    // (pool, asset whose price goes up, factor)
    let plan: Vec<(PoolId, Asset, Rational)> = match &scenario.attack {
        Attack::None => Vec::new(),
        Attack::PumpPool { target, asset, factor } => {
            let pool = snapshot.pool(target)?;
            let up = asset.clone().unwrap_or_else(|| pool.base().clone());
            pool.other(&up)?;
            vec![(target.clone(), up, factor.clone())]
        }
        Attack::PumpEndpointSet {
            side,
            base,
            quote,
            factor,
        } => {
            let graph = build_graph(snapshot);
            let endpoints = candidate_endpoints(&graph, base, quote)?;
            match side {
                Side::Source => endpoints
                    .sources
                    .into_iter()
                    .map(|id| (id, base.clone(), factor.clone()))
                    .collect(),
                Side::Target => endpoints
                    .targets
                    .into_iter()
                    .map(|id| {
                        let up = graph.pool(&id).expect("candidate is a node").other(quote).expect("trades quote").clone();
                        (id, up, factor.clone())
                    })
                    .collect(),
            }
        }
    };

    let mut current = snapshot.clone();
    let mut ledger = AttackLedger::default();
    for (id, up, factor) in plan {
        let pool = current.pool(&id)?;
        let pump = pump_plan(pool, &up, &factor, DEFAULT_SQRT_DIGITS)?;
        let swap = swap_exact_in(pool, &pump.asset_in, &pump.amount_in)?;
        *ledger
            .flows
            .entry(swap.asset_in.clone())
            .or_insert_with(Rational::zero) -= &swap.amount_in;
        *ledger
            .flows
            .entry(swap.asset_out.clone())
            .or_insert_with(Rational::zero) += &swap.amount_out;
        ledger.trades.push(TradeRecord {
            pool: id,
            asset_in: swap.asset_in,
            amount_in: swap.amount_in,
            asset_out: swap.asset_out,
            amount_out: swap.amount_out,
        });
        current = current.with_pool(swap.pool)?;
    }

    if let Funding::Flashloan {
        fee_bps,
        gas,
        external_profit,
    } = &scenario.funding
    {
        ledger.flashloan = Some(flashloan_report(&current, &ledger, *fee_bps, gas, external_profit)?);
    }
    Ok((current, ledger))
}

/// Unwinds every trade in reverse against the manipulated state and sets
/// the proceeds against principal plus interest.
fn flashloan_report(
    manipulated: &Snapshot,
    ledger: &AttackLedger,
    fee_bps: u32,
    gas: &Rational,
    external_profit: &Rational,
) -> Result<FlashLoanReport, SimError> {
    let mut scratch = manipulated.clone();
    let mut proceeds: BTreeMap<Asset, Rational> = BTreeMap::new();
    for t in ledger.trades.iter().rev() {
        let pool = scratch.pool(&t.pool)?;
        let back = swap_exact_in(pool, &t.asset_out, &t.amount_out)?;
        *proceeds.entry(back.asset_out.clone()).or_insert_with(Rational::zero) += &back.amount_out;
        scratch = scratch.with_pool(back.pool)?;
    }
    let loans = ledger
        .inputs()
        .into_iter()
        .map(|(asset, principal)| {
            let interest = &principal * rational::ratio(i64::from(fee_bps), 10_000);
            LoanRecord {
                unwind_proceeds: proceeds.remove(&asset).unwrap_or_else(Rational::zero),
                asset,
                principal,
                interest,
            }
        })
        .collect();
    Ok(FlashLoanReport {
        fee_bps,
        gas: gas.clone(),
        external_profit: external_profit.clone(),
        loans,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSurface {
    pub side: Side,
    pub pools: Vec<PoolId>,
    pub liquidity_sum: Rational,
    pub source_liquidity: Rational,
    pub target_liquidity: Rational,
}

/// The endpoint set a rational attacker would pump: whichever side of the
/// query has less total liquidity (both reserves valued in `numeraire`).
/// Ties go to the source side.
pub fn cheapest_attack_surface(
    graph: &PoolGraph,
    base: &Asset,
    quote: &Asset,
    valuations: &Valuations,
    numeraire: &Asset,
) -> Result<AttackSurface, SimError> {
    let endpoints = candidate_endpoints(graph, base, quote)?;
    let value = |a: &Asset| valuations.get(a).ok_or_else(|| SimError::MissingValuation(a.clone()));
    let unit = value(numeraire)?;
    let liquidity = |ids: &[PoolId]| -> Result<Rational, SimError> {
        let mut sum = Rational::zero();
        for id in ids {
            let p = graph.pool(id).expect("candidate is a node");
            sum += (p.reserve_base() * value(p.base())? + p.reserve_quote() * value(p.quote())?) / unit;
        }
        Ok(sum)
    };
    let source_liquidity = liquidity(&endpoints.sources)?;
    let target_liquidity = liquidity(&endpoints.targets)?;
    let (side, pools, liquidity_sum) = if source_liquidity <= target_liquidity {
        (Side::Source, endpoints.sources, source_liquidity.clone())
    } else {
        (Side::Target, endpoints.targets, target_liquidity.clone())
    };
    Ok(AttackSurface {
        side,
        pools,
        liquidity_sum,
        source_liquidity,
        target_liquidity,
    })
}
