use super::{check_pairs, score_per_left, ScoreTable};
use crate::error::Result;
use crate::graph::{BipartiteGraph, Pair};

/// Preferential attachment: product of the endpoint degrees.
pub fn score_pa(graph: &BipartiteGraph, pairs: &[Pair]) -> Result<ScoreTable> {
    check_pairs(graph, pairs)?;
    let scores = pairs
        .iter()
        .map(|p| (graph.left_degree(p.left as usize) * graph.right_degree(p.right as usize)) as f64)
        .collect();
    ScoreTable::new("PA", serde_json::Value::Null, None, graph, pairs.to_vec(), scores)
}

/// Reciprocal shortest-path distance; unreachable pairs score 0.
pub fn score_dist(graph: &BipartiteGraph, pairs: &[Pair]) -> Result<ScoreTable> {
    check_pairs(graph, pairs)?;
    let scores = score_per_left(pairs, graph.right_count(), |u, row| {
        for (v, d) in right_distances(graph, u).into_iter().enumerate() {
            if let Some(d) = d {
                row[v] = 1.0 / d as f64;
            }
        }
        Ok(())
    })?;
    ScoreTable::new("Dist", serde_json::Value::Null, None, graph, pairs.to_vec(), scores)
}

/// Breadth-first search from left node `source`; distances to every right
/// node (always odd when defined).
fn right_distances(graph: &BipartiteGraph, source: usize) -> Vec<Option<usize>> {
    let mut left_seen = vec![false; graph.left_count()];
    let mut right_dist = vec![None; graph.right_count()];
    left_seen[source] = true;
    let mut frontier = vec![source as u32];
    let mut depth = 1;
    while !frontier.is_empty() {
        let mut reached = Vec::new();
        for &u in &frontier {
            for &v in graph.left_neighbors(u as usize) {
                if right_dist[v as usize].is_none() {
                    right_dist[v as usize] = Some(depth);
                    reached.push(v);
                }
            }
        }
        let mut next = Vec::new();
        for &v in &reached {
            for &u in graph.right_neighbors(v as usize) {
                if !left_seen[u as usize] {
                    left_seen[u as usize] = true;
                    next.push(u);
                }
            }
        }
        frontier = next;
        depth += 2;
    }
    right_dist
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> BipartiteGraph {
        BipartiteGraph::from_edges(
            2,
            3,
            [Pair::new(0, 0), Pair::new(0, 1), Pair::new(1, 1), Pair::new(1, 2)],
        )
        .unwrap()
    }

    #[test]
    fn pa_values() {
        let t = score_pa(&example(), &[Pair::new(0, 2)]).unwrap();
        assert_eq!(t.scores, vec![2.0]);

        let g = BipartiteGraph::from_edges(1, 2, [Pair::new(0, 0)]).unwrap();
        assert_eq!(score_pa(&g, &[Pair::new(0, 1)]).unwrap().scores, vec![0.0]);

        let complete =
            BipartiteGraph::from_edges(3, 4, (0..3).flat_map(|u| (0..4).map(move |v| Pair::new(u, v)))).unwrap();
        let pairs: Vec<Pair> = complete.edges().collect();
        assert!(score_pa(&complete, &pairs).unwrap().scores.iter().all(|&s| s == 12.0));
    }

    #[test]
    fn dist_values() {
        let g = example();
        let t = score_dist(&g, &[Pair::new(0, 2), Pair::new(0, 0), Pair::new(1, 0)]).unwrap();
        assert!((t.scores[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(t.scores[1], 1.0);
        assert!((t.scores[2] - 1.0 / 3.0).abs() < 1e-15);

        let split = BipartiteGraph::from_edges(2, 2, [Pair::new(0, 0), Pair::new(1, 1)]).unwrap();
        assert_eq!(score_dist(&split, &[Pair::new(0, 1)]).unwrap().scores, vec![0.0]);
    }

    #[test]
    fn distances_are_odd() {
        let g = BipartiteGraph::from_edges(
            3,
            3,
            [
                Pair::new(0, 0),
                Pair::new(1, 0),
                Pair::new(1, 1),
                Pair::new(2, 1),
                Pair::new(2, 2),
            ],
        )
        .unwrap();
        let d = right_distances(&g, 0);
        assert_eq!(d, vec![Some(1), Some(3), Some(5)]);
    }
}
