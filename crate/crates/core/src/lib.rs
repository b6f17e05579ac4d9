//! A worst-case-optimal join engine for graph-pattern and graph-analytics
//! queries.
//!
//! Queries are written in a small datalog-like language with semiring
//! aggregation and limited recursion. A rule compiles to a hypertree
//! decomposition whose nodes run an attribute-at-a-time multiway join over
//! trie-stored relations; tree nodes are combined bottom-up and, when the
//! output needs it, reassembled top-down. Set operations at the heart of
//! the join adapt their layout and algorithm to density and cardinality
//! skew in the data.
//!
//! Module map:
//! * [`frontend`] — parser, AST, and catalog validation.
//! * [`storage`] — relation ingestion, dictionary encoding, node ordering,
//!   tries, snapshots.
//! * [`setkernel`] — set layouts and intersection kernels.
//! * [`planner`] — hypergraphs, fractional edge covers, decomposition
//!   search, attribute ordering.
//! * [`executor`] — physical plans, the join loop, recursion, metrics.

pub mod executor;
pub mod frontend;
pub mod planner;
pub mod setkernel;
pub mod storage;
