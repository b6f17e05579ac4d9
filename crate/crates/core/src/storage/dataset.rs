//! Graph dataset ingestion: encode, order, prune, register.

use std::sync::Arc;

use crate::setkernel::Granularity;

use super::catalog::{Catalog, DictRef};
use super::dictionary::Dictionary;
use super::ordering::{order_nodes, Adjacency, OrderingStrategy};
use super::relation::RawRelation;
use super::stats::density_skew;
use super::StorageError;

/// A binary edge relation after dictionary encoding, node ordering, and
/// optional symmetric pruning.
#[derive(Debug, Clone)]
pub struct GraphDataset {
    pub dict: DictRef,
    pub edges: Vec<(u32, u32)>,
    pub annotations: Option<Vec<f64>>,
    pub ordering_name: String,
    pub pruned: bool,
}

impl GraphDataset {
    pub fn adjacency(&self) -> Adjacency {
        Adjacency::from_edges(self.dict.len(), self.edges.iter().copied())
    }

    pub fn density_skew(&self) -> Result<f64, StorageError> {
        density_skew(&self.adjacency().degrees())
    }
}

pub fn ordering_name(strategy: OrderingStrategy) -> &'static str {
    match strategy {
        OrderingStrategy::Random { .. } => "random",
        OrderingStrategy::Bfs => "bfs",
        OrderingStrategy::StrongRuns => "strongruns",
        OrderingStrategy::Degree => "degree",
        OrderingStrategy::RevDegree => "revdegree",
        OrderingStrategy::Shingle => "shingle",
        OrderingStrategy::Hybrid => "hybrid",
    }
}

/// Encodes a raw binary relation: interns values row by row, orders node
/// ids with the chosen strategy, then optionally prunes to `src > dst`.
pub fn encode_graph(
    raw: &RawRelation,
    strategy: OrderingStrategy,
    prune: bool,
) -> Result<GraphDataset, StorageError> {
    assert_eq!(raw.arity, 2, "graph datasets are binary");
    let mut dict = Dictionary::new();
    let mut edges: Vec<(u32, u32)> = Vec::with_capacity(raw.len());
    for i in 0..raw.len() {
        let row = raw.row(i);
        let s = dict.intern(&row[0])?;
        let d = dict.intern(&row[1])?;
        edges.push((s, d));
    }
    let adj = Adjacency::from_edges(dict.len(), edges.iter().copied());
    let perm = order_nodes(&adj, strategy);
    dict.remap(&perm);
    for (s, d) in &mut edges {
        *s = perm[*s as usize];
        *d = perm[*d as usize];
    }
    let mut annotations = raw.annotations.clone();
    if prune {
        let mut kept_edges = Vec::with_capacity(edges.len() / 2);
        let mut kept_annots = annotations.as_ref().map(|_| Vec::new());
        for (i, &(s, d)) in edges.iter().enumerate() {
            if s > d {
                kept_edges.push((s, d));
                if let (Some(out), Some(a)) = (&mut kept_annots, &annotations) {
                    out.push(a[i]);
                }
            }
        }
        edges = kept_edges;
        annotations = kept_annots;
    }
    Ok(GraphDataset {
        dict: Arc::new(dict),
        edges,
        annotations,
        ordering_name: ordering_name(strategy).to_string(),
        pruned: prune,
    })
}

/// Registers the dataset's edge relation under `name`, with both tries.
pub fn register_graph(
    catalog: &mut Catalog,
    name: &str,
    dataset: &GraphDataset,
    granularity: Granularity,
) -> Result<(), StorageError> {
    let mut tuples = Vec::with_capacity(dataset.edges.len() * 2);
    for &(s, d) in &dataset.edges {
        tuples.push(s);
        tuples.push(d);
    }
    catalog.register(
        name,
        2,
        vec![Arc::clone(&dataset.dict), Arc::clone(&dataset.dict)],
        tuples,
        dataset.annotations.clone(),
        dataset
            .annotations
            .as_ref()
            .map(|_| super::catalog::AnnotType::Float),
        granularity,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(rows: &[[&str; 2]]) -> RawRelation {
        RawRelation {
            arity: 2,
            rows: rows.iter().flatten().map(|s| s.to_string()).collect(),
            annotations: None,
        }
    }

    #[test]
    fn degree_ordering_with_prune() {
        // star center "c": degree ordering gives it id 0, so pruning keeps
        // every (leaf, center) direction.
        let r = raw(&[
            ["c", "l1"],
            ["l1", "c"],
            ["c", "l2"],
            ["l2", "c"],
        ]);
        let ds = encode_graph(&r, OrderingStrategy::Degree, true).unwrap();
        assert_eq!(ds.dict.lookup("c"), Some(0));
        assert_eq!(ds.edges.len(), 2);
        assert!(ds.edges.iter().all(|&(s, d)| s > d));
    }

    #[test]
    fn register_builds_both_orders() {
        let r = raw(&[["a", "b"], ["b", "c"]]);
        let ds = encode_graph(&r, OrderingStrategy::Degree, false).unwrap();
        let mut catalog = Catalog::new();
        register_graph(&mut catalog, "Edge", &ds, Granularity::SetLevel).unwrap();
        let rel = catalog.get("Edge").unwrap();
        assert_eq!(rel.data.tuple_count(), 2);
        assert!(rel.data.trie(&[1, 0]).is_ok());
    }
}
