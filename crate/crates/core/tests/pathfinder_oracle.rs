mod support;

use support::{brute_force_tree, random_graph, Rng};
use triangle_oracle_core::pathfinder::{selective_dijkstra, SearchState};

#[test]
fn dijkstra_matches_exhaustive_enumeration() {
    let mut rng = Rng::new(20_240_501);
    let mut compared = 0;
    for _ in 0..200 {
        let graph = random_graph(&mut rng, 8);
        for node in graph.nodes() {
            for exposed in [node.base(), node.quote()] {
                let source = SearchState::new(node.id().clone(), exposed.clone());
                let fast = selective_dijkstra(&graph, &source).unwrap().entries();
                let slow = brute_force_tree(&graph, &source);
                assert_eq!(fast, slow, "source {source:?} in {:#?}", graph.edges());
                compared += 1;
            }
        }
    }
    assert!(compared >= 400);
}

#[test]
fn paths_follow_predecessors_and_stay_compatible() {
    let mut rng = Rng::new(99);
    for _ in 0..50 {
        let graph = random_graph(&mut rng, 8);
        let node = &graph.nodes()[0];
        let source = SearchState::new(node.id().clone(), node.quote().clone());
        let tree = selective_dijkstra(&graph, &source).unwrap();
        for (state, (dist, _)) in tree.entries() {
            let path = tree.path_to(&state).unwrap();
            assert_eq!(path.first(), Some(&source));
            assert_eq!(path.last(), Some(&state));
            let mut total = 0.0;
            for pair in path.windows(2) {
                let next = graph.pool(&pair[1].pool).unwrap();
                assert!(next.contains(&pair[0].exposed));
                assert_eq!(next.other(&pair[0].exposed).unwrap(), &pair[1].exposed);
                total += graph.edge(&pair[0].pool, &pair[1].pool).unwrap().weight;
            }
            assert_eq!(total, dist);
        }
    }
}

/// On the reference ring a compatible queue keeps its direction around the
/// ring, so only half of the (source, target) combinations connect. The
/// target redraw still has to resolve every pair.
#[test]
fn reference_ring_half_connected_but_always_priced() {
    use triangle_oracle_core::graph::build_graph;
    use triangle_oracle_core::pathfinder::{candidate_endpoints, price_query, route, QueryOptions};
    use triangle_oracle_core::sim::{generate_market, MarketSpec};

    let spec = MarketSpec::reference();
    let graph = build_graph(&generate_market(&spec).unwrap());
    let assets: Vec<_> = spec.assets.iter().map(|a| a.symbol.clone()).collect();
    for base in &assets {
        for quote in assets.iter().filter(|q| *q != base) {
            let ends = candidate_endpoints(&graph, base, quote).unwrap();
            let mut connected = 0;
            for s in &ends.sources {
                for t in &ends.targets {
                    connected += usize::from(route(&graph, base, quote, s, t).unwrap().is_some());
                }
            }
            assert_eq!(2 * connected, ends.sources.len() * ends.targets.len(), "{base}/{quote}");
            for seed in 0..4 {
                let r = price_query(&graph, base, quote, &QueryOptions::seeded(seed).with_samples(5)).unwrap();
                assert_eq!(r.price, spec.true_price(base, quote).unwrap());
            }
        }
    }
}
