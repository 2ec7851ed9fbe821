//! Triangular arbitrageurs.
//!
//! Trade sizing is a ternary search on the float model of the round trip;
//! the chosen size is then settled exactly, with outputs rounded down to
//! [`SETTLEMENT_DECIMALS`] places, and only kept when the exact profit is
//! positive and the triangle's irregularity actually drops.

use num_traits::{One, Signed, Zero};

use super::SimError;
use crate::graph::{cycle_product, find_triangles, irregularity, Triangle};
use crate::market::{swap_exact_in_floor, Asset, Pool, PoolId, Snapshot};
use crate::rational::{self, Rational};

pub const TERNARY_ITERATIONS: usize = 96;
/// Token amounts settle on a `10^-18` grid.
pub const SETTLEMENT_DECIMALS: u32 = 18;
pub const DEFAULT_CONVERGENCE_TOLERANCE: f64 = 1e-6;
/// How many times a convergence trade may be halved before it is dropped.
const MAX_HALVINGS: i32 = 30;

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageTrade {
    pub triangle: [PoolId; 3],
    /// Pools in the order they were traded through.
    pub route: [PoolId; 3],
    pub start_asset: Asset,
    pub amount_in: Rational,
    pub amount_out: Rational,
    pub profit: Rational,
    pub irregularity_before: f64,
    pub irregularity_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbitrageOutcome {
    pub snapshot: Snapshot,
    pub trade: Option<ArbitrageTrade>,
}

fn hop_output_f64(pool: &Pool, asset_in: &Asset, amount: f64) -> f64 {
    let x = rational::to_f64(pool.reserve_of(asset_in).expect("hop asset in pool"));
    let y = rational::to_f64(pool.reserve_of(pool.other(asset_in).expect("hop asset in pool")).expect("pool asset"));
    let effective = amount * (1.0 - f64::from(pool.fee_bps()) / 10_000.0);
    y * effective / (x + effective)
}

fn round_trip_profit(hops: &[(&Pool, Asset); 3], amount: f64) -> f64 {
    let out = hops
        .iter()
        .fold(amount, |a, (pool, asset_in)| hop_output_f64(pool, asset_in, a));
    out - amount
}

/// Profit-maximising round trip through `triangle`, applied when it pays.
pub fn arbitrage_step(snapshot: &Snapshot, triangle: &Triangle) -> Result<ArbitrageOutcome, SimError> {
    scaled_step(snapshot, triangle, 1.0)
}

/// Round trip of `scale` times the profit-maximising size.
fn scaled_step(snapshot: &Snapshot, triangle: &Triangle, scale: f64) -> Result<ArbitrageOutcome, SimError> {
    let unchanged = || ArbitrageOutcome {
        snapshot: snapshot.clone(),
        trade: None,
    };
    let product = cycle_product(triangle, snapshot)?;
    if product.is_one() {
        return Ok(unchanged());
    }
    let before = irregularity(&product);
    let legs = triangle.legs(snapshot)?;
    // P > 1: going round the cycle multiplies value; P < 1: go the other way.
    let hops: [(&Pool, Asset); 3] = if product > Rational::one() {
        [
            (legs[0].0, legs[0].1.clone()),
            (legs[1].0, legs[1].1.clone()),
            (legs[2].0, legs[2].1.clone()),
        ]
    } else {
        [
            (legs[2].0, legs[2].2.clone()),
            (legs[1].0, legs[1].2.clone()),
            (legs[0].0, legs[0].2.clone()),
        ]
    };
    let start_asset = hops[0].1.clone();

    let profit = |a: f64| round_trip_profit(&hops, a);
    let mut hi = rational::to_f64(hops[0].0.reserve_of(&start_asset)?);
    for _ in 0..256 {
        if profit(2.0 * hi) <= profit(hi) {
            break;
        }
        hi *= 2.0;
    }
    let (mut lo, mut hi) = (0.0f64, 2.0 * hi);
    for _ in 0..TERNARY_ITERATIONS {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if profit(m1) < profit(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    let best = 0.5 * (lo + hi) * scale;
    if !(best.is_finite() && best > 0.0 && profit(best) > 0.0) {
        return Ok(unchanged());
    }

    let quantum = Rational::one() / rational::pow10(SETTLEMENT_DECIMALS);
    let amount_in = rational::floor_to_quantum(&rational::from_f64(best).expect("finite"), &quantum);
    if amount_in.is_zero() {
        return Ok(unchanged());
    }
    let mut current = snapshot.clone();
    let mut carried = amount_in.clone();
    for (pool, asset_in) in &hops {
        let live = current.pool(pool.id())?;
        let swap = swap_exact_in_floor(live, asset_in, &carried, &quantum)?;
        if swap.amount_out.is_zero() {
            return Ok(unchanged());
        }
        carried = swap.amount_out;
        current = current.with_pool(swap.pool)?;
    }
    let gain = &carried - &amount_in;
    if !gain.is_positive() {
        return Ok(unchanged());
    }
    let after = irregularity(&cycle_product(triangle, &current)?);
    if after >= before {
        return Ok(unchanged());
    }
    Ok(ArbitrageOutcome {
        snapshot: current,
        trade: Some(ArbitrageTrade {
            triangle: triangle.pools().clone(),
            route: [hops[0].0.id().clone(), hops[1].0.id().clone(), hops[2].0.id().clone()],
            start_asset,
            amount_in,
            amount_out: carried,
            profit: gain,
            irregularity_before: before,
            irregularity_after: after,
        }),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub round: u32,
    pub max_irregularity: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceStop {
    /// Max irregularity fell below the tolerance.
    Converged,
    /// A full round found no profitable trade.
    Stalled,
    BudgetExhausted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Round 0 is the starting state.
    pub series: Vec<ConvergencePoint>,
    pub trades: Vec<ArbitrageTrade>,
    pub snapshot: Snapshot,
    pub stop: ConvergenceStop,
}

impl ConvergenceReport {
    pub fn final_irregularity(&self) -> f64 {
        self.series.last().map_or(0.0, |p| p.max_irregularity)
    }
}

fn max_irregularity(triangles: &[Triangle]) -> f64 {
    triangles.iter().map(Triangle::irregularity).fold(0.0, f64::max)
}

/// Arbitrage rounds: each round sweeps every triangle, worst first.
///
/// Stops early once the max irregularity is below `1e-6` or when a whole
/// round trades nothing.
pub fn run_convergence(snapshot: &Snapshot, rounds: u32) -> Result<ConvergenceReport, SimError> {
    if rounds == 0 {
        return Err(SimError::InvalidRounds);
    }
    let mut current = snapshot.clone();
    let mut triangles = find_triangles(&current);
    let mut series = vec![ConvergencePoint {
        round: 0,
        max_irregularity: max_irregularity(&triangles),
    }];
    let mut trades = Vec::new();
    let mut stop = ConvergenceStop::BudgetExhausted;
    for round in 1..=rounds {
        if series.last().expect("seeded").max_irregularity < DEFAULT_CONVERGENCE_TOLERANCE {
            stop = ConvergenceStop::Converged;
            break;
        }
        let mut order: Vec<usize> = (0..triangles.len()).collect();
        order.sort_by(|&a, &b| triangles[b].irregularity().total_cmp(&triangles[a].irregularity()));
        // A trade that fixes one triangle can push a neighbour past the
        // round's starting maximum.
        let ceiling = series.last().expect("seeded").max_irregularity;
        let mut traded = false;
        for ix in order {
            // Halve the size until the trade no longer lifts another
            // triangle above the ceiling.
            for halvings in 0..=MAX_HALVINGS {
                let outcome = scaled_step(&current, &triangles[ix], 0.5f64.powi(halvings))?;
                let Some(trade) = outcome.trade else { break };
                let repriced = triangles
                    .iter()
                    .map(|t| t.reprice(&outcome.snapshot))
                    .collect::<Result<Vec<_>, _>>()?;
                if max_irregularity(&repriced) > ceiling {
                    continue;
                }
                traded = true;
                trades.push(trade);
                current = outcome.snapshot;
                triangles = repriced;
                break;
            }
        }
        series.push(ConvergencePoint {
            round,
            max_irregularity: max_irregularity(&triangles),
        });
        if !traded {
            stop = ConvergenceStop::Stalled;
            break;
        }
    }
    if stop == ConvergenceStop::BudgetExhausted
        && series.last().expect("seeded").max_irregularity < DEFAULT_CONVERGENCE_TOLERANCE
    {
        stop = ConvergenceStop::Converged;
    }
    Ok(ConvergenceReport {
        series,
        trades,
        snapshot: current,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{pump_input_for_factor, swap_exact_in, Asset, PoolId};
    use crate::rational::{int, ratio};
    use crate::sim::{generate_market, AssetSpec, MarketSpec, PoolSpec};

    fn triangle_spec(fee_bps: u32) -> MarketSpec {
        let a = |s: &str| Asset::new(s).unwrap();
        MarketSpec {
            timestamp: 0,
            assets: vec![
                AssetSpec { symbol: a("A"), valuation: int(4) },
                AssetSpec { symbol: a("B"), valuation: int(2) },
                AssetSpec { symbol: a("C"), valuation: int(1) },
            ],
            pools: [("ab", "A", "B"), ("bc", "B", "C"), ("ca", "C", "A")]
                .iter()
                .map(|&(id, b, q)| PoolSpec {
                    id: PoolId::new(id).unwrap(),
                    exchange: "dex".into(),
                    base: a(b),
                    quote: a(q),
                    depth: int(1000),
                    fee_bps,
                })
                .collect(),
            seed: 0,
        }
    }

    fn pumped(fee_bps: u32, factor: i64) -> Snapshot {
        let s = generate_market(&triangle_spec(fee_bps)).unwrap();
        let target = s.pool(&PoolId::new("ab").unwrap()).unwrap();
        let dy = pump_input_for_factor(target, &int(factor)).unwrap();
        let swap = swap_exact_in(target, target.quote(), &dy).unwrap();
        s.with_pool(swap.pool).unwrap()
    }

    #[test]
    fn consistent_triangle_is_left_alone() {
        let s = generate_market(&triangle_spec(0)).unwrap();
        let t = &find_triangles(&s)[0];
        let out = arbitrage_step(&s, t).unwrap();
        assert!(out.trade.is_none());
        assert_eq!(out.snapshot, s);
    }

    #[test]
    fn pumped_leg_is_arbitraged_back() {
        let s = pumped(0, 4);
        let t = &find_triangles(&s)[0];
        assert!(t.irregularity() > 1.0);
        let out = arbitrage_step(&s, t).unwrap();
        let trade = out.trade.expect("profitable");
        assert!(trade.profit.is_positive());
        assert!(trade.irregularity_after < trade.irregularity_before);
        assert!(trade.irregularity_after < 1e-6);
    }

    #[test]
    fn dumped_leg_trades_the_other_way() {
        let s = generate_market(&triangle_spec(0)).unwrap();
        let ab = s.pool(&PoolId::new("ab").unwrap()).unwrap();
        let dumped = swap_exact_in(ab, ab.base(), &int(3000)).unwrap();
        let s = s.with_pool(dumped.pool).unwrap();
        let t = &find_triangles(&s)[0];
        assert!(t.product() < &Rational::one());
        let trade = arbitrage_step(&s, t).unwrap().trade.expect("profitable");
        assert!(trade.profit.is_positive());
        assert!(trade.irregularity_after < trade.irregularity_before);
    }

    #[test]
    fn small_deviation_under_fee_is_not_traded() {
        // P = 1.001 with a 100 bps fee on every leg.
        let s = generate_market(&triangle_spec(100)).unwrap();
        let ab = s.pool(&PoolId::new("ab").unwrap()).unwrap();
        let nudged = ab.with_reserves(ab.reserve_base().clone(), ab.reserve_quote() * ratio(1001, 1000)).unwrap();
        let s = s.with_pool(nudged).unwrap();
        let t = &find_triangles(&s)[0];
        assert_eq!(t.product(), &ratio(1001, 1000));
        let out = arbitrage_step(&s, t).unwrap();
        assert!(out.trade.is_none());
        assert_eq!(out.snapshot, s);
    }

    #[test]
    fn convergence_on_single_triangle() {
        let report = run_convergence(&pumped(0, 4), 10).unwrap();
        assert_eq!(report.stop, ConvergenceStop::Converged);
        assert!(report.final_irregularity() < 1e-6);
        for w in report.series.windows(2) {
            assert!(w[1].max_irregularity <= w[0].max_irregularity);
        }
    }

    #[test]
    fn consistent_market_series_is_zero() {
        let s = generate_market(&MarketSpec::reference()).unwrap();
        let report = run_convergence(&s, 5).unwrap();
        assert!(report.series.iter().all(|p| p.max_irregularity == 0.0));
        assert!(report.trades.is_empty());
        assert!(run_convergence(&s, 0).is_err());
    }

    #[test]
    fn fees_leave_a_floor() {
        let report = run_convergence(&pumped(100, 4), 10).unwrap();
        let last = report.final_irregularity();
        assert!(last > 0.0);
        assert!(last < 0.05, "floor {last}");
        for w in report.series.windows(2) {
            assert!(w[1].max_irregularity <= w[0].max_irregularity);
        }
    }
}
