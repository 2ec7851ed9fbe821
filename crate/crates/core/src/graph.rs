//! Arbitrage triangles and the per-snapshot pool graph.
//!
//! A triangle is three pools over three distinct assets whose oriented
//! prices chain `X/Y · Y/Z · Z/X`. Its irregularity `|1 − P|` becomes the
//! weight of the three pool-to-pool edges it induces; when several
//! triangles share an edge the smallest irregularity wins.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Signed};
use serde::Serialize;
use thiserror::Error;

use crate::market::{spot_price, Asset, MarketError, Pool, PoolId, Snapshot};
use crate::rational::{self, Rational};

pub const GRAPH_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("unknown pool {0}")]
    UnknownPool(PoolId),
    #[error("edge {a}-{b} has invalid weight {weight}")]
    InvalidWeight { a: PoolId, b: PoolId, weight: f64 },
    #[error("duplicate edge {0}-{1}")]
    DuplicateEdge(PoolId, PoolId),
    #[error("self loop on pool {0}")]
    SelfLoop(PoolId),
    #[error(transparent)]
    Market(#[from] MarketError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangle {
    pools: [PoolId; 3],
    numerators: [Asset; 3],
    product: Rational,
    irregularity: f64,
}

impl Triangle {
    /// Pool ids in ascending order.
    pub fn pools(&self) -> &[PoolId; 3] {
        &self.pools
    }

    /// Numerator asset of each pool in [`pools`](Self::pools) order.
    pub fn numerators(&self) -> &[Asset; 3] {
        &self.numerators
    }

    pub fn product(&self) -> &Rational {
        &self.product
    }

    pub fn irregularity(&self) -> f64 {
        self.irregularity
    }

    pub fn contains(&self, id: &PoolId) -> bool {
        self.pools.contains(id)
    }

    /// Indices into [`pools`](Self::pools) walking the cycle from the first
    /// pool: each leg's denominator is the next leg's numerator.
    pub fn cycle_order(&self, snapshot: &Snapshot) -> Result<[usize; 3], GraphError> {
        let first = lookup(snapshot, &self.pools[0])?;
        let exposed = first.other(&self.numerators[0])?;
        if &self.numerators[1] == exposed {
            Ok([0, 1, 2])
        } else {
            Ok([0, 2, 1])
        }
    }

    /// The three pools as `(pool, numerator, denominator)` in cycle order.
    pub fn legs<'s>(&self, snapshot: &'s Snapshot) -> Result<[(&'s Pool, Asset, Asset); 3], GraphError> {
        let order = self.cycle_order(snapshot)?;
        let leg = |i: usize| -> Result<(&'s Pool, Asset, Asset), GraphError> {
            let pool = lookup(snapshot, &self.pools[i])?;
            let num = self.numerators[i].clone();
            let den = pool.other(&num)?.clone();
            Ok((pool, num, den))
        };
        Ok([leg(order[0])?, leg(order[1])?, leg(order[2])?])
    }

    /// Same triangle re-evaluated against another snapshot.
    pub fn reprice(&self, snapshot: &Snapshot) -> Result<Triangle, GraphError> {
        let product = cycle_product(self, snapshot)?;
        Ok(Triangle {
            irregularity: irregularity(&product),
            product,
            pools: self.pools.clone(),
            numerators: self.numerators.clone(),
        })
    }
}

fn lookup<'s>(snapshot: &'s Snapshot, id: &PoolId) -> Result<&'s Pool, GraphError> {
    snapshot.pool(id).map_err(|_| GraphError::UnknownPool(id.clone()))
}

fn pair_key(pool: &Pool) -> (Asset, Asset) {
    let (a, b) = (pool.base().clone(), pool.quote().clone());
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Asset shared by two pools, if they share exactly one.
fn shared_asset<'p>(a: &'p Pool, b: &Pool) -> Option<&'p Asset> {
    let base = b.contains(a.base());
    let quote = b.contains(a.quote());
    match (base, quote) {
        (true, false) => Some(a.base()),
        (false, true) => Some(a.quote()),
        _ => None,
    }
}

/// Every closed trio of pools, in ascending order of sorted id triples.
pub fn find_triangles(snapshot: &Snapshot) -> Vec<Triangle> {
    let pools = snapshot.pools();
    let mut by_pair: BTreeMap<(Asset, Asset), Vec<usize>> = BTreeMap::new();
    for (i, pool) in pools.iter().enumerate() {
        by_pair.entry(pair_key(pool)).or_default().push(i);
    }

    let mut out = Vec::new();
    for i in 0..pools.len() {
        for j in i + 1..pools.len() {
            let Some(shared) = shared_asset(&pools[i], &pools[j]) else {
                continue;
            };
            let a = pools[i].other(shared).expect("shared asset is in pool");
            let b = pools[j].other(shared).expect("shared asset is in pool");
            let key = if a < b { (a.clone(), b.clone()) } else { (b.clone(), a.clone()) };
            let Some(closing) = by_pair.get(&key) else {
                continue;
            };
            for &k in closing.iter().filter(|&&k| k > j) {
                out.push(orient(&pools[i], &pools[j], &pools[k]));
            }
        }
    }
    out
}

/// Orients a trio: the first (smallest id) pool keeps its stored base/quote
/// direction and the other legs chain from it.
fn orient(p0: &Pool, p1: &Pool, p2: &Pool) -> Triangle {
    let n0 = p0.base().clone();
    let d0 = p0.quote();
    let (n1, n2) = if p1.contains(d0) {
        let n1 = d0.clone();
        let n2 = p1.other(&n1).expect("chained").clone();
        (n1, n2)
    } else {
        let n2 = d0.clone();
        let n1 = p2.other(&n2).expect("chained").clone();
        (n1, n2)
    };
    let product = [(p0, &n0), (p1, &n1), (p2, &n2)]
        .iter()
        .map(|(p, n)| spot_price(p, n).expect("numerator in pool").value().clone())
        .fold(Rational::one(), |acc, v| acc * v);
    Triangle {
        pools: [p0.id().clone(), p1.id().clone(), p2.id().clone()],
        numerators: [n0, n1, n2],
        irregularity: irregularity(&product),
        product,
    }
}

/// Product of the triangle's three oriented spot prices in `snapshot`.
pub fn cycle_product(triangle: &Triangle, snapshot: &Snapshot) -> Result<Rational, GraphError> {
    let mut product = Rational::one();
    for (id, numerator) in triangle.pools.iter().zip(&triangle.numerators) {
        let pool = lookup(snapshot, id)?;
        product *= spot_price(pool, numerator)?.value();
    }
    Ok(product)
}

/// `|1 − product|` as a float; zero exactly when `product == 1`.
pub fn irregularity(product: &Rational) -> f64 {
    rational::to_f64(&(Rational::one() - product).abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub a: PoolId,
    pub b: PoolId,
    pub weight: f64,
    /// Triangle that produced the weight; `None` for hand-built graphs.
    pub witness: Option<[PoolId; 3]>,
}

/// Immutable pool graph for one snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PoolGraph {
    timestamp: i64,
    nodes: Vec<Pool>,
    edges: Vec<Edge>,
    triangles: Vec<Triangle>,
    excluded: Vec<PoolId>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

pub fn build_graph(snapshot: &Snapshot) -> PoolGraph {
    let triangles = find_triangles(snapshot);
    let mut edges: BTreeMap<(PoolId, PoolId), Edge> = BTreeMap::new();
    let mut members: BTreeSet<PoolId> = BTreeSet::new();
    for t in &triangles {
        members.extend(t.pools.iter().cloned());
        for (x, y) in [(0, 1), (0, 2), (1, 2)] {
            let key = (t.pools[x].clone(), t.pools[y].clone());
            let candidate = Edge {
                a: key.0.clone(),
                b: key.1.clone(),
                weight: t.irregularity,
                witness: Some(t.pools.clone()),
            };
            edges
                .entry(key)
                .and_modify(|e| {
                    if candidate.weight < e.weight {
                        *e = candidate.clone();
                    }
                })
                .or_insert(candidate);
        }
    }
    let (nodes, excluded): (Vec<&Pool>, Vec<&Pool>) =
        snapshot.pools().iter().partition(|p| members.contains(p.id()));
    PoolGraph::assemble(
        snapshot.timestamp(),
        nodes.into_iter().cloned().collect(),
        edges.into_values().collect(),
        triangles,
        excluded.into_iter().map(|p| p.id().clone()).collect(),
    )
}

impl PoolGraph {
    /// Graph over arbitrary pools and weighted edges, without triangles.
    pub fn from_parts(timestamp: i64, pools: Vec<Pool>, edges: Vec<(PoolId, PoolId, f64)>) -> Result<Self, GraphError> {
        let snapshot = Snapshot::new(timestamp, pools)?;
        let mut map: BTreeMap<(PoolId, PoolId), Edge> = BTreeMap::new();
        for (a, b, weight) in edges {
            for id in [&a, &b] {
                if snapshot.index_of(id).is_none() {
                    return Err(GraphError::UnknownPool(id.clone()));
                }
            }
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(GraphError::InvalidWeight { a, b, weight });
            }
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            if map.contains_key(&(a.clone(), b.clone())) {
                return Err(GraphError::DuplicateEdge(a, b));
            }
            map.insert(
                (a.clone(), b.clone()),
                Edge {
                    a,
                    b,
                    weight,
                    witness: None,
                },
            );
        }
        Ok(Self::assemble(
            timestamp,
            snapshot.pools().to_vec(),
            map.into_values().collect(),
            Vec::new(),
            Vec::new(),
        ))
    }

    fn assemble(
        timestamp: i64,
        nodes: Vec<Pool>,
        edges: Vec<Edge>,
        triangles: Vec<Triangle>,
        excluded: Vec<PoolId>,
    ) -> Self {
        let index = |id: &PoolId| {
            nodes
                .binary_search_by(|p| p.id().cmp(id))
                .expect("edge endpoint is a node")
        };
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for e in &edges {
            let (a, b) = (index(&e.a), index(&e.b));
            adjacency[a].push((b, e.weight));
            adjacency[b].push((a, e.weight));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        PoolGraph {
            timestamp,
            nodes,
            edges,
            triangles,
            excluded,
            adjacency,
        }
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }

    /// Pools in the graph, sorted by id.
    pub fn nodes(&self) -> &[Pool] {
        &self.nodes
    }

    /// Edges sorted by `(a, b)` with `a < b`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Snapshot pools that close no triangle.
    pub fn excluded(&self) -> &[PoolId] {
        &self.excluded
    }

    pub fn node_index(&self, id: &PoolId) -> Option<usize> {
        self.nodes.binary_search_by(|p| p.id().cmp(id)).ok()
    }

    pub fn node(&self, index: usize) -> &Pool {
        &self.nodes[index]
    }

    pub fn pool(&self, id: &PoolId) -> Option<&Pool> {
        self.node_index(id).map(|i| &self.nodes[i])
    }

    /// `(neighbor index, weight)` pairs sorted by neighbor index.
    pub fn neighbors(&self, index: usize) -> &[(usize, f64)] {
        &self.adjacency[index]
    }

    pub fn edge(&self, a: &PoolId, b: &PoolId) -> Option<&Edge> {
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        self.edges
            .binary_search_by(|e| (&e.a, &e.b).cmp(&(a, b)))
            .ok()
            .map(|i| &self.edges[i])
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn export(&self) -> GraphExport {
        GraphExport {
            format_version: GRAPH_FORMAT_VERSION,
            timestamp: self.timestamp,
            nodes: self
                .nodes
                .iter()
                .map(|p| NodeExport {
                    id: p.id().to_string(),
                    exchange: p.exchange().to_string(),
                    base: p.base().to_string(),
                    quote: p.quote().to_string(),
                    reserve_base: rational::format_exact(p.reserve_base()),
                    reserve_quote: rational::format_exact(p.reserve_quote()),
                    fee_bps: p.fee_bps(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeExport {
                    a: e.a.to_string(),
                    b: e.b.to_string(),
                    weight: e.weight,
                    witness: e.witness.as_ref().map(|w| w.iter().map(|p| p.to_string()).collect()),
                })
                .collect(),
            triangles: self
                .triangles
                .iter()
                .map(|t| TriangleExport {
                    pools: t.pools.iter().map(|p| p.to_string()).collect(),
                    numerators: t.numerators.iter().map(|a| a.to_string()).collect(),
                    product: rational::format_fraction(&t.product),
                    irregularity: t.irregularity,
                })
                .collect(),
            excluded: self.excluded.iter().map(|p| p.to_string()).collect(),
        }
    }

    /// Deterministic pretty JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.export()).expect("graph export serializes");
        s.push('\n');
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphExport {
    pub format_version: u32,
    pub timestamp: i64,
    pub nodes: Vec<NodeExport>,
    pub edges: Vec<EdgeExport>,
    pub triangles: Vec<TriangleExport>,
    pub excluded: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NodeExport {
    pub id: String,
    pub exchange: String,
    pub base: String,
    pub quote: String,
    pub reserve_base: String,
    pub reserve_quote: String,
    pub fee_bps: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgeExport {
    pub a: String,
    pub b: String,
    pub weight: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TriangleExport {
    pub pools: Vec<String>,
    pub numerators: Vec<String>,
    pub product: String,
    pub irregularity: f64,
}
