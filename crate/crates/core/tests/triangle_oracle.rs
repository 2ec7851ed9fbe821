mod support;

use num_traits::{One, Signed};
use support::{brute_force_triangles, random_snapshot, Rng};
use triangle_oracle_core::graph::{build_graph, find_triangles};
use triangle_oracle_core::market::spot_price;
use triangle_oracle_core::rational::Rational;
use triangle_oracle_core::sim::{generate_market, MarketSpec};

#[test]
fn triangle_discovery_matches_subset_scan() {
    let mut rng = Rng::new(4);
    for _ in 0..300 {
        let snapshot = random_snapshot(&mut rng, 12);
        let found: Vec<_> = find_triangles(&snapshot).iter().map(|t| t.pools().clone()).collect();
        assert_eq!(found, brute_force_triangles(&snapshot));
    }
}

#[test]
fn reference_market_counts() {
    let snapshot = generate_market(&MarketSpec::reference()).unwrap();
    let graph = build_graph(&snapshot);
    assert_eq!(graph.triangles().len(), brute_force_triangles(&snapshot).len());
    assert_eq!(graph.triangles().len(), 12);
    assert_eq!(graph.nodes().len(), 24);
}

/// Walks the trio from its first pool: each next leg is the pool holding
/// the previous leg's denominator.
fn chained_product(snapshot: &triangle_oracle_core::market::Snapshot, ids: &[triangle_oracle_core::market::PoolId; 3]) -> Rational {
    let first = snapshot.pool(&ids[0]).unwrap();
    let mut product = spot_price(first, first.base()).unwrap().value().clone();
    let mut exposed = first.quote().clone();
    let mut remaining: Vec<_> = ids[1..].iter().map(|id| snapshot.pool(id).unwrap()).collect();
    while !remaining.is_empty() {
        let at = remaining.iter().position(|p| p.contains(&exposed)).unwrap();
        let pool = remaining.remove(at);
        product *= spot_price(pool, &exposed).unwrap().value();
        exposed = pool.other(&exposed).unwrap().clone();
    }
    assert_eq!(&exposed, first.base());
    product
}

#[test]
fn products_match_a_manual_walk() {
    let mut rng = Rng::new(17);
    for _ in 0..200 {
        let snapshot = random_snapshot(&mut rng, 10);
        for t in find_triangles(&snapshot) {
            assert_eq!(t.product(), &chained_product(&snapshot, t.pools()));
            let expected = (Rational::one() - t.product()).abs();
            let close = (t.irregularity() - triangle_oracle_core::rational::to_f64(&expected)).abs();
            assert!(close <= 1e-12 * t.irregularity().max(1.0));
        }
    }
}
