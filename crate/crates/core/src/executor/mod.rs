//! Plan evaluation: the in-node multiway join, the across-node passes,
//! semiring aggregation, recursion, and metrics.

mod engine;
mod join;
mod metrics;
mod semiring;

pub use engine::{execute, Engine, ExecOptions, ExecOutcome, RuleResult};
pub use join::{run_join, Accessor, JoinMode, JoinOutput, JoinSpec};
pub use metrics::{ExecMetrics, IntersectCounters, NodeMetrics, RuleMetrics};
pub use semiring::{eval_expr, EvalError, Semiring};

#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error(transparent)]
    Plan(#[from] crate::planner::PlanError),
    #[error(transparent)]
    Storage(#[from] crate::storage::StorageError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("unknown relation `{0}` at execution time")]
    UnknownRelation(String),
    #[error("fixpoint rule without MIN or MAX cannot run seminaive")]
    NonMonotoneAggregate,
    #[error("recursive rule ran zero rounds")]
    ZeroIterations,
}
