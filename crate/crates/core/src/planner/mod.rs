//! Logical planning: hypergraphs, exact fractional covers, decomposition
//! search, attribute ordering, and node sharing.

mod cover;
mod explain;
mod ghd;
mod hypergraph;

pub use cover::{min_fractional_cover, Rat};
pub use explain::{explain, explain_json, Explain, ExplainNode};
pub use ghd::{
    dedup_nodes, effective_head_vars, enumerate_ghds, enumerate_with_cap, ghd_properties_hold,
    plan_rule, GhdNode, GhdPlan, PlanOptions, TreeSkeleton, DEFAULT_EDGE_CAP,
};
pub use hypergraph::{build_hypergraph, HyperEdge, Hypergraph};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PlanError {
    #[error("vertex {vertex} is not covered by any edge")]
    Infeasible { vertex: usize },
    #[error("query has {edges} atoms, above the decomposition cap of {cap}")]
    QueryTooLarge { edges: usize, cap: usize },
    #[error("no decomposition candidates")]
    NoCandidates,
}

/// Exponent of the tightest worst-case output-size bound for the query
/// restricted to the vertex subset, computed exactly.
pub fn agm_exponent(h: &Hypergraph, subset: &[usize]) -> Result<Rat, PlanError> {
    let edges: Vec<Vec<usize>> = h.edges.iter().map(|e| e.vars.clone()).collect();
    Ok(min_fractional_cover(&edges, subset)?.0)
}
