//! Manipulation-resistant DEX price oracle built on a graph of
//! constant-product pools.
//!
//! Pools that close a triangle of assets become graph nodes; two pools that
//! share a triangle are joined by an edge weighted with that triangle's
//! irregularity `|1 − P|`, where `P` is the product of the three spot
//! prices. A price query runs Dijkstra from a pool holding the base asset
//! to a pool holding the quote asset and multiplies the exact spot prices
//! along the cheapest path, so a pool whose price has been pushed away from
//! its neighbours is routed around.
//!
//! All amounts and prices are exact rationals; floats appear only as edge
//! weights.

pub mod graph;
pub mod ingest;
pub mod market;
pub mod pathfinder;
pub mod rational;
pub mod sim;

pub use graph::{build_graph, find_triangles, PoolGraph, Triangle};
pub use ingest::{load_snapshot, load_snapshot_with, save_snapshot, IngestError, LoadOptions};
pub use market::{spot_price, swap_exact_in, Asset, MarketError, Pool, PoolId, Snapshot};
pub use pathfinder::{price_query, selective_dijkstra, QueryError, QueryOptions, QueryResult};
pub use rational::Rational;
