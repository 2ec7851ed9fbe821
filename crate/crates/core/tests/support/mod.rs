//! Independent reference implementations shared by the integration tests
//! and the acceptance suite. Nothing here calls the search or triangle code
//! under test.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use triangle_oracle_core::graph::PoolGraph;
use triangle_oracle_core::market::{Asset, Pool, PoolId, Snapshot};
use triangle_oracle_core::pathfinder::SearchState;
use triangle_oracle_core::rational::Rational;

pub fn asset(s: &str) -> Asset {
    Asset::new(s).unwrap()
}

pub fn pool_id(s: &str) -> PoolId {
    PoolId::new(s).unwrap()
}

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.next_u64() % n
    }

    pub fn unit(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

/// Random graph over at most `max_pools` pools drawn from five assets, with
/// edges chosen at random. Weights come from a small set of dyadic values
/// plus uniform draws so equal-distance ties are common.
pub fn random_graph(rng: &mut Rng, max_pools: usize) -> PoolGraph {
    let symbols = ["A", "B", "C", "D", "E"];
    let count = 1 + rng.below(max_pools as u64) as usize;
    let pools: Vec<Pool> = (0..count)
        .map(|i| {
            let a = rng.below(5) as usize;
            let b = (a + 1 + rng.below(4) as usize) % 5;
            Pool::new(
                pool_id(&format!("q{i}")),
                "x",
                asset(symbols[a]),
                asset(symbols[b]),
                Rational::from_integer(BigInt::from(1 + rng.below(50))),
                Rational::from_integer(BigInt::from(1 + rng.below(50))),
                0,
            )
            .unwrap()
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..count {
        for j in i + 1..count {
            if rng.below(100) < 55 {
                let weight = match rng.below(4) {
                    0 => 0.0,
                    1 => 0.25,
                    2 => 0.5,
                    _ => rng.unit(),
                };
                edges.push((pools[i].id().clone(), pools[j].id().clone(), weight));
            }
        }
    }
    PoolGraph::from_parts(0, pools, edges).unwrap()
}

fn successors(graph: &PoolGraph, state: &SearchState) -> Vec<(SearchState, f64)> {
    let mut out = Vec::new();
    for e in graph.edges() {
        let next = if e.a == state.pool {
            &e.b
        } else if e.b == state.pool {
            &e.a
        } else {
            continue;
        };
        let pool = graph.pool(next).unwrap();
        if pool.contains(&state.exposed) {
            let y = pool.other(&state.exposed).unwrap().clone();
            out.push((SearchState::new(next.clone(), y), e.weight));
        }
    }
    out
}

/// Minimum cost over every simple compatible walk from `source`, summing
/// weights left to right in walk order.
pub fn enumerate_distances(graph: &PoolGraph, source: &SearchState) -> BTreeMap<SearchState, f64> {
    fn walk(
        graph: &PoolGraph,
        state: &SearchState,
        cost: f64,
        on_path: &mut BTreeSet<SearchState>,
        best: &mut BTreeMap<SearchState, f64>,
    ) {
        let entry = best.entry(state.clone()).or_insert(f64::INFINITY);
        if cost < *entry {
            *entry = cost;
        }
        for (next, w) in successors(graph, state) {
            if on_path.insert(next.clone()) {
                walk(graph, &next, cost + w, on_path, best);
                on_path.remove(&next);
            }
        }
    }
    let mut best = BTreeMap::new();
    let mut on_path = BTreeSet::from([source.clone()]);
    walk(graph, source, 0.0, &mut on_path, &mut best);
    best
}

/// Exhaustive distances plus the predecessor the documented tie rule
/// selects.
///
/// With final distances known, states settle one at a time: the next one
/// is the smallest `(distance, pool id, exposed)` among unsettled states
/// that some settled state already reaches at their final distance. A
/// state's predecessor is the earliest-settled state reaching it at that
/// distance.
pub fn brute_force_tree(graph: &PoolGraph, source: &SearchState) -> BTreeMap<SearchState, (f64, Option<SearchState>)> {
    let dist = enumerate_distances(graph, source);
    let mut settled: Vec<SearchState> = Vec::new();
    let mut pred: BTreeMap<SearchState, Option<SearchState>> = BTreeMap::new();
    pred.insert(source.clone(), None);
    loop {
        let mut best: Option<(f64, SearchState, Option<SearchState>)> = None;
        for (state, &d) in &dist {
            if settled.contains(state) {
                continue;
            }
            let reached_by = if state == source {
                Some(None)
            } else {
                settled
                    .iter()
                    .find(|u| successors(graph, u).iter().any(|(v, w)| v == state && dist[*u] + w == d))
                    .map(|u| Some(u.clone()))
            };
            let Some(by) = reached_by else { continue };
            let better = match &best {
                None => true,
                Some((bd, bs, _)) => d < *bd || (d == *bd && state < bs),
            };
            if better {
                best = Some((d, state.clone(), by));
            }
        }
        let Some((_, state, by)) = best else { break };
        pred.insert(state.clone(), by);
        settled.push(state);
    }
    dist.into_iter().map(|(s, d)| {
        let p = pred[&s].clone();
        (s, (d, p))
    }).collect()
}

/// Every 3-subset of pools that pairwise share exactly one asset and
/// together span exactly three assets, as sorted id triples.
pub fn brute_force_triangles(snapshot: &Snapshot) -> Vec<[PoolId; 3]> {
    let pools = snapshot.pools();
    let assets = |p: &Pool| BTreeSet::from([p.base().clone(), p.quote().clone()]);
    let mut out = Vec::new();
    for i in 0..pools.len() {
        for j in i + 1..pools.len() {
            for k in j + 1..pools.len() {
                let (a, b, c) = (assets(&pools[i]), assets(&pools[j]), assets(&pools[k]));
                let pairwise = [(&a, &b), (&a, &c), (&b, &c)]
                    .iter()
                    .all(|(x, y)| x.intersection(y).count() == 1);
                let union: BTreeSet<_> = a.union(&b).chain(c.iter()).cloned().collect();
                if pairwise && union.len() == 3 {
                    out.push([pools[i].id().clone(), pools[j].id().clone(), pools[k].id().clone()]);
                }
            }
        }
    }
    out.sort();
    out
}

/// Random snapshot over up to `max_pools` pools with decimal, fractional
/// and very small or large reserves.
pub fn random_snapshot(rng: &mut Rng, max_pools: usize) -> Snapshot {
    let symbols = ["ETH", "USDC", "DAI", "WBTC", "X1", "Y_2"];
    let count = 1 + rng.below(max_pools as u64) as usize;
    let mut pools = Vec::with_capacity(count);
    for i in 0..count {
        let a = rng.below(symbols.len() as u64) as usize;
        let b = (a + 1 + rng.below(symbols.len() as u64 - 1) as usize) % symbols.len();
        let reserve = |rng: &mut Rng| -> Rational {
            let numer = BigInt::from(1 + rng.below(u64::MAX / 2));
            let denom = match rng.below(4) {
                0 => BigInt::from(1),
                1 => BigInt::from(10u32).pow(rng.below(30) as u32),
                2 => BigInt::from(3 + rng.below(1000)),
                _ => BigInt::from(2u32).pow(rng.below(64) as u32),
            };
            Rational::new(numer, denom)
        };
        pools.push(
            Pool::new(
                pool_id(&format!("pool-{:03}-{}", rng.below(1000), i)),
                ["uniswap", "sushiswap", "curve"][rng.below(3) as usize],
                asset(symbols[a]),
                asset(symbols[b]),
                reserve(rng),
                reserve(rng),
                rng.below(10_000) as u32,
            )
            .unwrap(),
        );
    }
    Snapshot::new(rng.below(2_000_000_000) as i64, pools).unwrap()
}
