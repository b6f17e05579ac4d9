//! Abstract syntax for the query language.

use crate::storage::AnnotType;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub rules: Vec<Rule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub head_name: String,
    /// Head key variables, in output order. May be empty for scalar heads.
    pub head_keys: Vec<String>,
    pub head_annotation: Option<AnnotationDecl>,
    pub body_atoms: Vec<Atom>,
    /// The `alias = expr` assignment after the body, when present.
    pub annotation_expr: Option<ArithExpr>,
    pub recursion: Recursion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationDecl {
    pub alias: String,
    pub ty: AnnotType,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Recursion {
    None,
    /// `*[i=k]`: a fixed number of unrolled iterations.
    Naive { iterations: u32 },
    /// `*`: iterate to fixpoint.
    Fixpoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub relation: String,
    pub terms: Vec<Term>,
}

impl Atom {
    pub fn variables(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().filter_map(|t| match t {
            Term::Variable(v) => Some(v.as_str()),
            Term::Constant(_) => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Variable(String),
    /// Selection constant, kept as raw text until encoding.
    Constant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggOp {
    Sum,
    Min,
    Max,
    Count,
}

impl AggOp {
    pub fn name(self) -> &'static str {
        match self {
            AggOp::Sum => "SUM",
            AggOp::Min => "MIN",
            AggOp::Max => "MAX",
            AggOp::Count => "COUNT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum AggVar {
    Star,
    Var(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ArithExpr {
    Number(f64),
    /// Reference to a scalar (arity-0, annotated) relation.
    ScalarRef(String),
    Aggregate { op: AggOp, var: AggVar },
    Binary {
        op: BinOp,
        lhs: Box<ArithExpr>,
        rhs: Box<ArithExpr>,
    },
}

impl ArithExpr {
    /// All aggregate terms in the expression, in evaluation order.
    pub fn aggregates(&self) -> Vec<(AggOp, &AggVar)> {
        let mut out = Vec::new();
        self.collect_aggregates(&mut out);
        out
    }

    fn collect_aggregates<'a>(&'a self, out: &mut Vec<(AggOp, &'a AggVar)>) {
        match self {
            ArithExpr::Aggregate { op, var } => out.push((*op, var)),
            ArithExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_aggregates(out);
                rhs.collect_aggregates(out);
            }
            _ => {}
        }
    }

    pub fn scalar_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_refs(&mut out);
        out
    }

    fn collect_refs<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            ArithExpr::ScalarRef(name) => out.push(name),
            ArithExpr::Binary { lhs, rhs, .. } => {
                lhs.collect_refs(out);
                rhs.collect_refs(out);
            }
            _ => {}
        }
    }

    pub fn uses_division(&self) -> bool {
        match self {
            ArithExpr::Binary { op, lhs, rhs } => {
                *op == BinOp::Div || lhs.uses_division() || rhs.uses_division()
            }
            _ => false,
        }
    }
}
