//! Annotation semirings and arithmetic over aggregate results.
//!
//! Joined tuples combine annotations multiplicatively, projections fold
//! them additively. The aggregate picks the semiring: SUM and COUNT use
//! ordinary arithmetic, MIN the tropical (min, +) pair, MAX (max, *).
//! Atoms without an annotation contribute the multiplicative identity.

use crate::frontend::{AggOp, ArithExpr};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Semiring {
    op: AggOp,
}

impl Semiring {
    pub fn for_aggregate(op: AggOp) -> Semiring {
        Semiring { op }
    }

    /// Additive identity: the fold result over zero bindings.
    pub fn zero(&self) -> f64 {
        match self.op {
            AggOp::Sum | AggOp::Count => 0.0,
            AggOp::Min => f64::INFINITY,
            AggOp::Max => f64::NEG_INFINITY,
        }
    }

    /// Multiplicative identity: the annotation of an unannotated atom.
    pub fn one(&self) -> f64 {
        match self.op {
            AggOp::Sum | AggOp::Count | AggOp::Max => 1.0,
            AggOp::Min => 0.0,
        }
    }

    pub fn plus(&self, a: f64, b: f64) -> f64 {
        match self.op {
            AggOp::Sum | AggOp::Count => a + b,
            AggOp::Min => a.min(b),
            AggOp::Max => a.max(b),
        }
    }

    pub fn times(&self, a: f64, b: f64) -> f64 {
        match self.op {
            AggOp::Sum | AggOp::Count => a * b,
            AggOp::Min => a + b,
            AggOp::Max => a * b,
        }
    }

    /// Whether a candidate value strictly improves the current one; the
    /// frontier test for monotone fixpoints.
    pub fn improves(&self, candidate: f64, current: f64) -> bool {
        match self.op {
            AggOp::Min => candidate < current,
            AggOp::Max => candidate > current,
            AggOp::Sum | AggOp::Count => candidate != current,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero in annotation expression")]
    DivisionByZero,
    #[error("scalar relation `{0}` has no value")]
    MissingScalar(String),
}

/// Evaluates the rule's annotation expression around a computed aggregate
/// value. Scalar relation references resolve through `scalars`.
pub fn eval_expr(
    expr: &ArithExpr,
    aggregate_value: Option<f64>,
    scalars: &impl Fn(&str) -> Option<f64>,
) -> Result<f64, EvalError> {
    match expr {
        ArithExpr::Number(n) => Ok(*n),
        ArithExpr::ScalarRef(name) => {
            scalars(name).ok_or_else(|| EvalError::MissingScalar(name.clone()))
        }
        ArithExpr::Aggregate { .. } => {
            Ok(aggregate_value.expect("aggregate value supplied for aggregate expressions"))
        }
        ArithExpr::Binary { op, lhs, rhs } => {
            let a = eval_expr(lhs, aggregate_value, scalars)?;
            let b = eval_expr(rhs, aggregate_value, scalars)?;
            Ok(match op {
                crate::frontend::BinOp::Add => a + b,
                crate::frontend::BinOp::Sub => a - b,
                crate::frontend::BinOp::Mul => a * b,
                crate::frontend::BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    a / b
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn expr_of(rule_text: &str) -> ArithExpr {
        parse_program(rule_text).unwrap().rules[0]
            .annotation_expr
            .clone()
            .unwrap()
    }

    #[test]
    fn tropical_fold_models_shortest_path() {
        let s = Semiring::for_aggregate(AggOp::Min);
        // unannotated edge times a distance is distance itself
        assert_eq!(s.times(s.one(), 3.0), 3.0);
        assert_eq!(s.plus(3.0, 2.0), 2.0);
        assert_eq!(s.plus(s.zero(), 5.0), 5.0);
    }

    #[test]
    fn count_folds_ones() {
        let s = Semiring::for_aggregate(AggOp::Count);
        let mut acc = s.zero();
        for _ in 0..4 {
            acc = s.plus(acc, s.one());
        }
        assert_eq!(acc, 4.0);
    }

    #[test]
    fn pagerank_expression() {
        let e = expr_of("P(x;y:float) :- E(x,z); y=0.15+0.85*<<SUM(z)>>.");
        let v = eval_expr(&e, Some(0.5), &|_| None).unwrap();
        assert!((v - 0.575).abs() < 1e-12);
    }

    #[test]
    fn scalar_reference_and_division() {
        let e = expr_of("P(x;y:float) :- E(x,z); y=1/N.");
        let v = eval_expr(&e, None, &|name| (name == "N").then_some(4.0)).unwrap();
        assert_eq!(v, 0.25);
        assert_eq!(
            eval_expr(&e, None, &|_| Some(0.0)),
            Err(EvalError::DivisionByZero)
        );
        assert_eq!(
            eval_expr(&e, None, &|_| None),
            Err(EvalError::MissingScalar("N".into()))
        );
    }
}
