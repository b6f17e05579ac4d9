//! Relation storage: ingestion, dictionary encoding, node ordering,
//! symmetric pruning, tries, and dataset snapshots.

mod catalog;
mod dataset;
mod dictionary;
mod ordering;
mod relation;
mod snapshot;
mod stats;
mod trie;

pub use catalog::{AnnotType, Catalog, DictRef, RelationData, StoredRelation};
pub use dataset::{encode_graph, ordering_name, register_graph, GraphDataset};
pub use dictionary::{build_dictionary, Dictionary};
pub use ordering::{order_nodes, Adjacency, OrderingStrategy};
pub use relation::{load_relation, RawRelation};
pub use snapshot::{read_snapshot, write_snapshot};
pub use stats::{density_skew, prune_symmetric};
pub use trie::{build_trie, Trie, TrieBuilder};

#[derive(Debug, thiserror::Error)]
pub enum StorageError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RowArityMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("dictionary overflow: more than 2^32 distinct values")]
    DictionaryOverflow,
    #[error("unknown relation {0}")]
    UnknownRelation(String),
    #[error("duplicate key {key:?} with conflicting annotation values")]
    AnnotationConflict { key: Vec<u32> },
    #[error("appended set is not strictly sorted")]
    OrderViolation,
    #[error("append prefix of length {prefix_len} does not reach the leaf of an arity-{arity} trie")]
    BadAppendDepth { prefix_len: usize, arity: usize },
    #[error("degree distribution has zero standard deviation")]
    DegenerateDistribution,
    #[error("invalid snapshot: {0}")]
    BadSnapshot(String),
}
