//! Degree and attribute assortativity against independent oracles built
//! straight from the oriented endpoint-pair list.

mod common;

use common::oracles::{attribute_assort_oracle, degree_assort_oracle};
use common::random_graph;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn assortativities_match_oracles_on_200_random_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xa550);
    let mut checked = 0;
    while checked < 200 {
        let n = 3 + (checked % 28);
        let colors = 2 + (checked % 3);
        let g = random_graph(n, 0.35, colors, &mut rng);
        if g.edge_mass() == 0 {
            continue;
        }
        match (g.degree_assortativity(), degree_assort_oracle(&g)) {
            (Some(got), Some(want)) => assert!(
                (got - want).abs() <= 1e-9,
                "graph {checked}: degree {got} vs oracle {want}"
            ),
            (None, None) => {}
            (got, want) => panic!("graph {checked}: degree definedness {got:?} vs {want:?}"),
        }
        match (g.attribute_assortativity(), attribute_assort_oracle(&g)) {
            (Some(got), Some(want)) => assert!(
                (got - want).abs() <= 1e-9,
                "graph {checked}: attribute {got} vs oracle {want}"
            ),
            (None, None) => {}
            (got, want) => panic!("graph {checked}: attribute definedness {got:?} vs {want:?}"),
        }
        checked += 1;
    }
}
