//! Node orderings: permutations of dictionary ids chosen to improve set
//! density and symmetry-pruning behaviour.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderingStrategy {
    Random { seed: u64 },
    Bfs,
    StrongRuns,
    Degree,
    RevDegree,
    Shingle,
    Hybrid,
}

impl OrderingStrategy {
    pub fn parse(name: &str, seed: u64) -> Option<OrderingStrategy> {
        Some(match name.to_ascii_lowercase().as_str() {
            "random" => OrderingStrategy::Random { seed },
            "bfs" => OrderingStrategy::Bfs,
            "strongruns" | "strong-runs" => OrderingStrategy::StrongRuns,
            "degree" => OrderingStrategy::Degree,
            "revdegree" | "rev-degree" => OrderingStrategy::RevDegree,
            "shingle" => OrderingStrategy::Shingle,
            "hybrid" => OrderingStrategy::Hybrid,
            _ => return None,
        })
    }
}

/// Undirected adjacency over node ids `[0, n)`.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    pub neighbors: Vec<Vec<u32>>,
}

impl Adjacency {
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Adjacency {
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            neighbors[a as usize].push(b);
            if a != b {
                neighbors[b as usize].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        Adjacency { neighbors }
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn degree(&self, v: u32) -> usize {
        self.neighbors[v as usize].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(|l| l.len()).collect()
    }
}

/// Computes a permutation of `[0, n)`: `perm[old_id] = new_id`.
pub fn order_nodes(adj: &Adjacency, strategy: OrderingStrategy) -> Vec<u32> {
    let n = adj.n();
    let order: Vec<u32> = match strategy {
        OrderingStrategy::Random { seed } => {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            ids.shuffle(&mut rng);
            ids
        }
        OrderingStrategy::Degree => {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_by_key(|&v| (std::cmp::Reverse(adj.degree(v)), v));
            ids
        }
        OrderingStrategy::RevDegree => {
            let mut ids: Vec<u32> = (0..n as u32).collect();
            ids.sort_by_key(|&v| (adj.degree(v), v));
            ids
        }
        OrderingStrategy::Bfs => bfs_order(adj),
        OrderingStrategy::StrongRuns => strong_runs_order(adj),
        OrderingStrategy::Shingle => shingle_order(adj),
        OrderingStrategy::Hybrid => {
            // BFS labels, then a stable sort by descending degree so nodes
            // of equal degree keep their BFS order.
            let bfs = bfs_order(adj);
            let mut ids = bfs;
            ids.sort_by_key(|&v| std::cmp::Reverse(adj.degree(v)));
            ids
        }
    };
    // `order[k]` is the node labelled k; invert to old -> new.
    let mut perm = vec![0u32; n];
    for (label, &node) in order.iter().enumerate() {
        perm[node as usize] = label as u32;
    }
    perm
}

/// Breadth-first visit order starting from the highest-degree node,
/// restarting per component at the next highest-degree unvisited node.
fn bfs_order(adj: &Adjacency) -> Vec<u32> {
    let n = adj.n();
    let mut by_degree: Vec<u32> = (0..n as u32).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(adj.degree(v)), v));
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &start in &by_degree {
        if seen[start as usize] {
            continue;
        }
        seen[start as usize] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &w in &adj.neighbors[v as usize] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    order
}

/// Sorts nodes by degree, then walks them from the highest-degree node
/// assigning continuous labels to each node's neighbors. Approximates BFS.
fn strong_runs_order(adj: &Adjacency) -> Vec<u32> {
    let n = adj.n();
    let mut by_degree: Vec<u32> = (0..n as u32).collect();
    by_degree.sort_by_key(|&v| (std::cmp::Reverse(adj.degree(v)), v));
    let mut labelled = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for &v in &by_degree {
        for &w in &adj.neighbors[v as usize] {
            if !labelled[w as usize] {
                labelled[w as usize] = true;
                order.push(w);
            }
        }
    }
    for &v in &by_degree {
        if !labelled[v as usize] {
            labelled[v as usize] = true;
            order.push(v);
        }
    }
    order
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Orders nodes by the minhash of their neighborhood under one fixed hash
/// function, so nodes with similar neighborhoods end up adjacent. Ties and
/// empty neighborhoods fall back to the node id.
fn shingle_order(adj: &Adjacency) -> Vec<u32> {
    let n = adj.n();
    let mut keyed: Vec<(u64, u32)> = (0..n as u32)
        .map(|v| {
            let shingle = adj.neighbors[v as usize]
                .iter()
                .map(|&w| splitmix64(w as u64))
                .min()
                .unwrap_or(u64::MAX);
            (shingle, v)
        })
        .collect();
    keyed.sort_unstable();
    keyed.into_iter().map(|(_, v)| v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_bijection(perm: &[u32]) -> bool {
        let mut seen = vec![false; perm.len()];
        for &p in perm {
            if seen[p as usize] {
                return false;
            }
            seen[p as usize] = true;
        }
        true
    }

    fn star() -> Adjacency {
        // center 0 with leaves 1..=4
        Adjacency::from_edges(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    }

    #[test]
    fn degree_puts_center_first() {
        let perm = order_nodes(&star(), OrderingStrategy::Degree);
        assert_eq!(perm[0], 0);
    }

    #[test]
    fn rev_degree_puts_center_last() {
        let perm = order_nodes(&star(), OrderingStrategy::RevDegree);
        assert_eq!(perm[0], 4);
    }

    #[test]
    fn bfs_starts_at_highest_degree() {
        // path 0 - 1 - 2; node 1 has the highest degree
        let adj = Adjacency::from_edges(3, [(0, 1), (1, 2)]);
        let perm = order_nodes(&adj, OrderingStrategy::Bfs);
        assert_eq!(perm[1], 0);
        // neighbors visited in ascending id order
        assert_eq!(perm[0], 1);
        assert_eq!(perm[2], 2);
    }

    #[test]
    fn all_strategies_are_bijections() {
        let adj = Adjacency::from_edges(
            8,
            [(0, 1), (1, 2), (2, 3), (3, 0), (4, 5), (6, 6), (1, 5)],
        );
        for strategy in [
            OrderingStrategy::Random { seed: 7 },
            OrderingStrategy::Bfs,
            OrderingStrategy::StrongRuns,
            OrderingStrategy::Degree,
            OrderingStrategy::RevDegree,
            OrderingStrategy::Shingle,
            OrderingStrategy::Hybrid,
        ] {
            let perm = order_nodes(&adj, strategy);
            assert!(is_bijection(&perm), "{strategy:?} not a bijection");
        }
    }

    #[test]
    fn hybrid_equal_degrees_keep_bfs_order() {
        // cycle: all degree 2, so hybrid == bfs
        let adj = Adjacency::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(
            order_nodes(&adj, OrderingStrategy::Hybrid),
            order_nodes(&adj, OrderingStrategy::Bfs)
        );
    }

    #[test]
    fn random_is_seed_deterministic() {
        let adj = star();
        let a = order_nodes(&adj, OrderingStrategy::Random { seed: 42 });
        let b = order_nodes(&adj, OrderingStrategy::Random { seed: 42 });
        assert_eq!(a, b);
    }
}
