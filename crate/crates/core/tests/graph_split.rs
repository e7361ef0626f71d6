use std::collections::BTreeSet;

use bilink::graph::{candidate_pairs, load_edge_list, split_per_left_node, test_count_for_degree, EdgeFormat};
use bilink::{BipartiteGraph, EdgeSplit, Pair};
use proptest::prelude::*;

/// Random graph in which every left node has degree at least 2.
fn splittable_graph() -> impl Strategy<Value = BipartiteGraph> {
    (1usize..12, 2usize..15).prop_flat_map(|(left, right)| {
        proptest::collection::vec(proptest::collection::btree_set(0..right, 2..=right), left).prop_map(move |rows| {
            let edges = rows
                .iter()
                .enumerate()
                .flat_map(|(u, vs)| vs.iter().map(move |&v| Pair::new(u, v)));
            BipartiteGraph::from_edges(left, right, edges).unwrap()
        })
    })
}

proptest! {
    #[test]
    fn split_partitions_every_left_node(g in splittable_graph(), fraction in 0.05f64..0.95, seed: u64) {
        let split = split_per_left_node(&g, fraction, seed).unwrap();
        let train: BTreeSet<Pair> = split.train_edges.iter().copied().collect();
        let test: BTreeSet<Pair> = split.test_edges.iter().copied().collect();
        prop_assert!(train.is_disjoint(&test));
        let union: BTreeSet<Pair> = train.union(&test).copied().collect();
        prop_assert_eq!(union, g.edges().collect::<BTreeSet<_>>());

        for u in 0..g.left_count() {
            let held = test.iter().filter(|p| p.left as usize == u).count();
            let kept = train.iter().filter(|p| p.left as usize == u).count();
            prop_assert!(held >= 1 && kept >= 1);
            prop_assert_eq!(held, test_count_for_degree(g.left_degree(u), fraction));
        }
        prop_assert_eq!(&split, &split_per_left_node(&g, fraction, seed).unwrap());
    }

    #[test]
    fn candidates_are_the_complement_of_training(g in splittable_graph(), seed: u64) {
        let split = split_per_left_node(&g, 0.3, seed).unwrap();
        let candidates = candidate_pairs(&g, &split);
        let train: BTreeSet<Pair> = split.train_edges.iter().copied().collect();
        prop_assert_eq!(candidates.len(), g.left_count() * g.right_count() - train.len());
        prop_assert!(candidates.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(candidates.iter().all(|p| !train.contains(p)));
        prop_assert!(split.test_edges.iter().all(|p| candidates.binary_search(p).is_ok()));
    }
}

#[test]
fn held_out_count_rule() {
    assert_eq!(test_count_for_degree(2, 0.1), 1);
    assert_eq!(test_count_for_degree(10, 0.1), 1);
    assert_eq!(test_count_for_degree(14, 0.1), 1);
    assert_eq!(test_count_for_degree(15, 0.1), 2);
    assert_eq!(test_count_for_degree(4, 0.9), 3);
}

#[test]
fn degree_one_nodes_cannot_be_split() {
    let g = BipartiteGraph::from_edges(2, 2, [Pair::new(0, 0), Pair::new(0, 1), Pair::new(1, 1)]).unwrap();
    assert!(split_per_left_node(&g, 0.1, 0).is_err());
    assert!(split_per_left_node(&g.min_degree_filter(2).unwrap(), 0.1, 0).is_ok());
}

fn labelled_edges(g: &BipartiteGraph) -> BTreeSet<(String, String)> {
    g.edges()
        .map(|p| {
            (
                g.left_label(p.left as usize).to_string(),
                g.right_label(p.right as usize).to_string(),
            )
        })
        .collect()
}

#[test]
fn graph_and_split_round_trip_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let text = "# users and items\nalice\tx\nalice\ty\nbob\ty\nbob\tz\ncarol\tx\ncarol\tz\ncarol\ty\n";
    let source = dir.path().join("edges.tsv");
    std::fs::write(&source, text).unwrap();
    let g = load_edge_list(&source, EdgeFormat::TsvPair).unwrap();
    assert_eq!((g.left_count(), g.right_count(), g.edge_count()), (3, 3, 7));

    let copy = dir.path().join("copy.tsv");
    g.write_tsv(&copy).unwrap();
    let reloaded = load_edge_list(&copy, EdgeFormat::TsvPair).unwrap();
    assert_eq!(labelled_edges(&g), labelled_edges(&reloaded));

    let split = split_per_left_node(&g, 0.4, 11).unwrap();
    split.save(&g, &dir.path().join("split")).unwrap();
    let back = EdgeSplit::load(&g, &dir.path().join("split")).unwrap();
    assert_eq!(split, back);
}

#[test]
fn movielens_rows_are_parsed() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.data");
    std::fs::write(
        &path,
        "196\t242\t3\t881250949\n186\t302\t3\t891717742\n196\t302\t1\t878887116\n",
    )
    .unwrap();
    let g = load_edge_list(&path, EdgeFormat::MovielensUData).unwrap();
    assert_eq!((g.left_count(), g.right_count(), g.edge_count()), (2, 2, 3));
    std::fs::write(&path, "196\t242\tthree\t881250949\n").unwrap();
    assert!(load_edge_list(&path, EdgeFormat::MovielensUData).is_err());
}
