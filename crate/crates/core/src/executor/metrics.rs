//! Execution counters. Everything except wall time is deterministic for a
//! fixed configuration and seed.

use serde::Serialize;

use crate::setkernel::{Algorithm, IntersectStats};

#[derive(Debug, Clone, Default, Serialize)]
pub struct IntersectCounters {
    pub merge_calls: u64,
    pub gallop_calls: u64,
    pub bitset_calls: u64,
    pub probe_calls: u64,
    pub blockwise_calls: u64,
    pub comparisons: u64,
}

impl IntersectCounters {
    pub fn record(&mut self, stats: &IntersectStats) {
        match stats.algorithm {
            Algorithm::Merge => self.merge_calls += 1,
            Algorithm::Galloping => self.gallop_calls += 1,
            Algorithm::BitsetAnd => self.bitset_calls += 1,
            Algorithm::UintBitsetProbe => self.probe_calls += 1,
            Algorithm::Blockwise => self.blockwise_calls += 1,
        }
        self.comparisons += stats.comparisons;
    }

    pub fn merge_from(&mut self, other: &IntersectCounters) {
        self.merge_calls += other.merge_calls;
        self.gallop_calls += other.gallop_calls;
        self.bitset_calls += other.bitset_calls;
        self.probe_calls += other.probe_calls;
        self.blockwise_calls += other.blockwise_calls;
        self.comparisons += other.comparisons;
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct NodeMetrics {
    pub node: usize,
    /// Elements iterated by the node's loop nest, all levels.
    pub inner_loop_iterations: u64,
    pub materialized_tuples: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct RuleMetrics {
    pub head: String,
    /// Recursion rounds; 1 for non-recursive rules.
    pub iterations: usize,
    /// Nodes actually evaluated (shared nodes are reused, not re-run).
    pub node_evaluations: usize,
    pub nodes: Vec<NodeMetrics>,
    pub inner_loop_iterations: u64,
    pub materialized_tuples: u64,
    pub intersections: IntersectCounters,
}

impl RuleMetrics {
    pub fn node_mut(&mut self, node: usize) -> &mut NodeMetrics {
        if let Some(i) = self.nodes.iter().position(|n| n.node == node) {
            return &mut self.nodes[i];
        }
        self.nodes.push(NodeMetrics {
            node,
            ..Default::default()
        });
        self.nodes.last_mut().unwrap()
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ExecMetrics {
    pub rules: Vec<RuleMetrics>,
    pub wall_time_ms: f64,
}

impl ExecMetrics {
    pub fn total_inner_loop_iterations(&self) -> u64 {
        self.rules.iter().map(|r| r.inner_loop_iterations).sum()
    }

    pub fn total_comparisons(&self) -> u64 {
        self.rules.iter().map(|r| r.intersections.comparisons).sum()
    }
}
