//! Minimum-irregularity price routing.
//!
//! The search runs over `(pool, exposed asset)` states. A pool entered with
//! numerator `x` exposes its other asset `y`; from there the queue may only
//! continue into a neighboring pool that contains `y`. This keeps every
//! route a compatible queue, so the product of step prices telescopes to
//! the queried pair.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_traits::One;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::PoolGraph;
use crate::market::{spot_price, Asset, OrientedPrice, PoolId};
use crate::rational::{self, Rational};

/// Redraws allowed per sample when the drawn target is unreachable.
pub const DEFAULT_MAX_REDRAWS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("base and quote are both {0}")]
    SameAsset(Asset),
    #[error("no graph pool trades {0}")]
    NoSource(Asset),
    #[error("no graph pool trades {0}")]
    NoTarget(Asset),
    #[error("no compatible route from {base} to {quote}")]
    NoPath { base: Asset, quote: Asset },
    #[error("unknown pool {0}")]
    UnknownPool(PoolId),
    #[error("pool {pool} does not trade {asset}")]
    AssetNotInPool { pool: PoolId, asset: Asset },
    #[error("step {index} expects numerator {expected}, found {found}")]
    IncompatibleQueue {
        index: usize,
        expected: Asset,
        found: Asset,
    },
    #[error("price queue is empty")]
    EmptyQueue,
    #[error("sample count must be at least 1")]
    InvalidSamples,
}

impl QueryError {
    /// Stable error name used by the CLI and the service.
    pub fn name(&self) -> &'static str {
        match self {
            QueryError::SameAsset(_) => "SameAsset",
            QueryError::NoSource(_) => "NoSource",
            QueryError::NoTarget(_) => "NoTarget",
            QueryError::NoPath { .. } => "NoPath",
            QueryError::UnknownPool(_) => "UnknownPool",
            QueryError::AssetNotInPool { .. } => "AssetNotInPool",
            QueryError::IncompatibleQueue { .. } => "IncompatibleQueue",
            QueryError::EmptyQueue => "EmptyQueue",
            QueryError::InvalidSamples => "InvalidSamples",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SearchState {
    pub pool: PoolId,
    /// Denominator left uncancelled after this pool joins the queue.
    pub exposed: Asset,
}

impl SearchState {
    pub fn new(pool: PoolId, exposed: Asset) -> Self {
        SearchState { pool, exposed }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathStep {
    pub pool: PoolId,
    pub price: OrientedPrice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricePath {
    pub steps: Vec<PathStep>,
    /// Sum of traversed edge weights.
    pub total_irregularity: f64,
    pub price: Rational,
}

impl PricePath {
    pub fn pool_ids(&self) -> impl Iterator<Item = &PoolId> {
        self.steps.iter().map(|s| &s.pool)
    }

    pub fn contains(&self, id: &PoolId) -> bool {
        self.steps.iter().any(|s| &s.pool == id)
    }
}

/// Product of a compatible queue of oriented prices.
pub fn path_price(steps: &[(PoolId, OrientedPrice)]) -> Result<Rational, QueryError> {
    if steps.is_empty() {
        return Err(QueryError::EmptyQueue);
    }
    for (index, pair) in steps.windows(2).enumerate() {
        if pair[0].1.denominator() != pair[1].1.numerator() {
            return Err(QueryError::IncompatibleQueue {
                index: index + 1,
                expected: pair[0].1.denominator().clone(),
                found: pair[1].1.numerator().clone(),
            });
        }
    }
    Ok(steps
        .iter()
        .fold(Rational::one(), |acc, (_, p)| acc * p.value()))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoints {
    pub sources: Vec<PoolId>,
    pub targets: Vec<PoolId>,
}

/// Graph pools that can open (`sources`) and close (`targets`) a queue for
/// `base/quote`, sorted by id.
pub fn candidate_endpoints(graph: &PoolGraph, base: &Asset, quote: &Asset) -> Result<Endpoints, QueryError> {
    if base == quote {
        return Err(QueryError::SameAsset(base.clone()));
    }
    let with = |asset: &Asset| -> Vec<PoolId> {
        graph
            .nodes()
            .iter()
            .filter(|p| p.contains(asset))
            .map(|p| p.id().clone())
            .collect()
    };
    let sources = with(base);
    if sources.is_empty() {
        return Err(QueryError::NoSource(base.clone()));
    }
    let targets = with(quote);
    if targets.is_empty() {
        return Err(QueryError::NoTarget(quote.clone()));
    }
    Ok(Endpoints { sources, targets })
}

// Internal state encoding: node * 2 + side, side 0 exposes the pool's base.
type StateIx = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    key: (usize, u8),
    state: StateIx,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // Reversed for a min-heap on (distance, pool id, exposed symbol).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.key.cmp(&self.key))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source shortest distances over search states.
#[derive(Debug, Clone)]
pub struct ShortestPaths<'g> {
    graph: &'g PoolGraph,
    dist: Vec<Option<f64>>,
    pred: Vec<Option<StateIx>>,
}

impl<'g> ShortestPaths<'g> {
    fn encode(&self, state: &SearchState) -> Option<StateIx> {
        encode(self.graph, state)
    }

    fn decode(&self, ix: StateIx) -> SearchState {
        decode(self.graph, ix)
    }

    pub fn distance(&self, state: &SearchState) -> Option<f64> {
        self.encode(state).and_then(|ix| self.dist[ix])
    }

    pub fn predecessor(&self, state: &SearchState) -> Option<SearchState> {
        let ix = self.encode(state)?;
        self.pred[ix].map(|p| self.decode(p))
    }

    /// States from the source to `state`, inclusive.
    pub fn path_to(&self, state: &SearchState) -> Option<Vec<SearchState>> {
        let mut ix = self.encode(state)?;
        self.dist[ix]?;
        let mut out = vec![self.decode(ix)];
        while let Some(p) = self.pred[ix] {
            out.push(self.decode(p));
            ix = p;
        }
        out.reverse();
        Some(out)
    }

    /// Every reachable state with its distance and predecessor.
    pub fn entries(&self) -> BTreeMap<SearchState, (f64, Option<SearchState>)> {
        self.dist
            .iter()
            .enumerate()
            .filter_map(|(ix, d)| d.map(|d| (self.decode(ix), (d, self.pred[ix].map(|p| self.decode(p))))))
            .collect()
    }
}

fn encode(graph: &PoolGraph, state: &SearchState) -> Option<StateIx> {
    let node = graph.node_index(&state.pool)?;
    let pool = graph.node(node);
    if &state.exposed == pool.base() {
        Some(node * 2)
    } else if &state.exposed == pool.quote() {
        Some(node * 2 + 1)
    } else {
        None
    }
}

fn exposed_asset(graph: &PoolGraph, ix: StateIx) -> &Asset {
    let pool = graph.node(ix / 2);
    if ix.is_multiple_of(2) {
        pool.base()
    } else {
        pool.quote()
    }
}

fn decode(graph: &PoolGraph, ix: StateIx) -> SearchState {
    SearchState {
        pool: graph.node(ix / 2).id().clone(),
        exposed: exposed_asset(graph, ix).clone(),
    }
}

fn tie_key(graph: &PoolGraph, ix: StateIx) -> (usize, u8) {
    let pool = graph.node(ix / 2);
    let exposed = exposed_asset(graph, ix);
    let other = if ix.is_multiple_of(2) { pool.quote() } else { pool.base() };
    (ix / 2, u8::from(exposed > other))
}

/// Dijkstra over `(pool, exposed)` states.
///
/// From `(u, x)`, every edge `(u, v)` whose pool `v` trades `x` leads to
/// `(v, y)` with `y` the other asset of `v`. Equal-distance frontier states
/// pop in ascending `(pool id, exposed symbol)` order and predecessors only
/// change on strict improvement, so results are reproducible.
pub fn selective_dijkstra<'g>(graph: &'g PoolGraph, source: &SearchState) -> Result<ShortestPaths<'g>, QueryError> {
    let start = encode(graph, source).ok_or_else(|| match graph.pool(&source.pool) {
        None => QueryError::UnknownPool(source.pool.clone()),
        Some(_) => QueryError::AssetNotInPool {
            pool: source.pool.clone(),
            asset: source.exposed.clone(),
        },
    })?;
    let n = graph.nodes().len() * 2;
    let mut dist: Vec<Option<f64>> = vec![None; n];
    let mut pred: Vec<Option<StateIx>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[start] = Some(0.0);
    heap.push(Frontier {
        dist: 0.0,
        key: tie_key(graph, start),
        state: start,
    });

    while let Some(Frontier { dist: d, state: u, .. }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        let exposed = exposed_asset(graph, u);
        for &(v, weight) in graph.neighbors(u / 2) {
            let next = graph.node(v);
            let t = if next.base() == exposed {
                v * 2 + 1
            } else if next.quote() == exposed {
                v * 2
            } else {
                continue;
            };
            if settled[t] {
                continue;
            }
            let candidate = d + weight;
            if dist[t].is_none_or(|cur| candidate < cur) {
                dist[t] = Some(candidate);
                pred[t] = Some(u);
                heap.push(Frontier {
                    dist: candidate,
                    key: tie_key(graph, t),
                    state: t,
                });
            }
        }
    }
    Ok(ShortestPaths { graph, dist, pred })
}

fn step_for(graph: &PoolGraph, state: &SearchState) -> PathStep {
    let pool = graph.pool(&state.pool).expect("state pool exists");
    let numerator = pool.other(&state.exposed).expect("exposed asset is in pool");
    PathStep {
        pool: state.pool.clone(),
        price: spot_price(pool, numerator).expect("numerator is in pool"),
    }
}

/// Cheapest compatible queue from `source` (numerator `base`) to `target`
/// (denominator `quote`). `Ok(None)` when the target is unreachable.
pub fn route(
    graph: &PoolGraph,
    base: &Asset,
    quote: &Asset,
    source: &PoolId,
    target: &PoolId,
) -> Result<Option<PricePath>, QueryError> {
    if base == quote {
        return Err(QueryError::SameAsset(base.clone()));
    }
    let src = graph.pool(source).ok_or_else(|| QueryError::UnknownPool(source.clone()))?;
    let tgt = graph.pool(target).ok_or_else(|| QueryError::UnknownPool(target.clone()))?;
    let not_in = |pool: &PoolId, asset: &Asset| QueryError::AssetNotInPool {
        pool: pool.clone(),
        asset: asset.clone(),
    };
    let first_exposed = src.other(base).map_err(|_| not_in(source, base))?;
    if !tgt.contains(quote) {
        return Err(not_in(target, quote));
    }
    if source == target {
        let step = PathStep {
            pool: source.clone(),
            price: spot_price(src, base).expect("base is in pool"),
        };
        let price = step.price.value().clone();
        return Ok(Some(PricePath {
            steps: vec![step],
            total_irregularity: 0.0,
            price,
        }));
    }
    let start = SearchState::new(source.clone(), first_exposed.clone());
    let tree = selective_dijkstra(graph, &start)?;
    let goal = SearchState::new(target.clone(), quote.clone());
    let Some(states) = tree.path_to(&goal) else {
        return Ok(None);
    };
    let steps: Vec<PathStep> = states.iter().map(|s| step_for(graph, s)).collect();
    let pairs: Vec<(PoolId, OrientedPrice)> = steps.iter().map(|s| (s.pool.clone(), s.price.clone())).collect();
    let price = path_price(&pairs)?;
    Ok(Some(PricePath {
        steps,
        total_irregularity: tree.distance(&goal).expect("goal reached"),
        price,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueryOptions {
    pub seed: u64,
    pub samples: u32,
    pub max_redraws: u32,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            seed: 0,
            samples: 1,
            max_redraws: DEFAULT_MAX_REDRAWS,
        }
    }
}

impl QueryOptions {
    pub fn seeded(seed: u64) -> Self {
        QueryOptions {
            seed,
            ..Self::default()
        }
    }

    pub fn with_samples(mut self, samples: u32) -> Self {
        self.samples = samples;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub source_pool: PoolId,
    pub target_pool: PoolId,
    pub path: PricePath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub base: Asset,
    pub quote: Asset,
    pub price: Rational,
    /// Path of the median sample (lower middle for even counts).
    pub path: PricePath,
    pub source_pool: PoolId,
    pub target_pool: PoolId,
    pub seed: u64,
    pub samples: u32,
    pub snapshot_timestamp: i64,
    /// Every sample in draw order.
    pub draws: Vec<Sample>,
}

impl QueryResult {
    pub fn price_decimal(&self) -> String {
        rational::format_decimal(&self.price, 18)
    }

    pub fn price_fraction(&self) -> String {
        rational::format_fraction(&self.price)
    }
}

/// Uniform index in `0..len`: high 64 bits of `next_u64 · len`.
fn draw_index(rng: &mut ChaCha8Rng, len: usize) -> usize {
    ((u128::from(rng.next_u64()) * len as u128) >> 64) as usize
}

/// Prices `base/quote` by sampling endpoint pools.
///
/// Each sample draws a source then a target uniformly from the candidate
/// lists with ChaCha8 seeded by `options.seed`. An unreachable target is
/// redrawn from the targets not yet tried for that source, up to
/// `max_redraws` times; once every target has been tried a new source is
/// drawn. The reported price
/// is the median of sample prices, the midpoint of the two middle values
/// for even counts.
pub fn price_query(graph: &PoolGraph, base: &Asset, quote: &Asset, options: &QueryOptions) -> Result<QueryResult, QueryError> {
    if options.samples == 0 {
        return Err(QueryError::InvalidSamples);
    }
    let endpoints = candidate_endpoints(graph, base, quote)?;
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut draws = Vec::with_capacity(options.samples as usize);
    for _ in 0..options.samples {
        let mut found = None;
        let mut source = &endpoints.sources[draw_index(&mut rng, endpoints.sources.len())];
        let mut untried: Vec<&PoolId> = endpoints.targets.iter().collect();
        for _ in 0..=options.max_redraws {
            if untried.is_empty() {
                source = &endpoints.sources[draw_index(&mut rng, endpoints.sources.len())];
                untried = endpoints.targets.iter().collect();
            }
            let target = untried.remove(draw_index(&mut rng, untried.len()));
            if let Some(path) = route(graph, base, quote, source, target)? {
                found = Some(Sample {
                    source_pool: source.clone(),
                    target_pool: target.clone(),
                    path,
                });
                break;
            }
        }
        let sample = found.ok_or_else(|| QueryError::NoPath {
            base: base.clone(),
            quote: quote.clone(),
        })?;
        draws.push(sample);
    }

    let mut order: Vec<usize> = (0..draws.len()).collect();
    order.sort_by(|&a, &b| draws[a].path.price.cmp(&draws[b].path.price));
    let n = order.len();
    let chosen = &draws[order[(n - 1) / 2]];
    let price = if n % 2 == 1 {
        chosen.path.price.clone()
    } else {
        (&draws[order[n / 2 - 1]].path.price + &draws[order[n / 2]].path.price) / rational::int(2)
    };
    Ok(QueryResult {
        base: base.clone(),
        quote: quote.clone(),
        price,
        path: chosen.path.clone(),
        source_pool: chosen.source_pool.clone(),
        target_pool: chosen.target_pool.clone(),
        seed: options.seed,
        samples: options.samples,
        snapshot_timestamp: graph.timestamp(),
        draws,
    })
}
