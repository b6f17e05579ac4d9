//! Pretty-printer emitting the parser's surface syntax. `parse(print(r))`
//! reproduces the rule exactly.

use super::ast::*;
use crate::storage::AnnotType;
use std::fmt;

fn type_name(ty: AnnotType) -> &'static str {
    match ty {
        AnnotType::Int => "int",
        AnnotType::Long => "long",
        AnnotType::Float => "float",
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Variable(v) => write!(f, "{v}"),
            Term::Constant(c) => write!(f, "\"{c}\""),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}

impl ArithExpr {
    fn precedence(&self) -> u8 {
        match self {
            ArithExpr::Binary { op: BinOp::Add | BinOp::Sub, .. } => 1,
            ArithExpr::Binary { op: BinOp::Mul | BinOp::Div, .. } => 2,
            _ => 3,
        }
    }
}

impl fmt::Display for ArithExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArithExpr::Number(n) => write!(f, "{n}"),
            ArithExpr::ScalarRef(name) => write!(f, "{name}"),
            ArithExpr::Aggregate { op, var } => match var {
                AggVar::Star => write!(f, "<<{}(*)>>", op.name()),
                AggVar::Var(v) => write!(f, "<<{}({v})>>", op.name()),
            },
            ArithExpr::Binary { op, lhs, rhs } => {
                let prec = self.precedence();
                if lhs.precedence() < prec {
                    write!(f, "({lhs})")?;
                } else {
                    write!(f, "{lhs}")?;
                }
                write!(f, "{}", op.symbol())?;
                // Right operands at equal precedence need parens to keep
                // left associativity through a round trip.
                if rhs.precedence() <= prec {
                    write!(f, "({rhs})")?;
                } else {
                    write!(f, "{rhs}")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.head_name)?;
        for (i, k) in self.head_keys.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        if let Some(decl) = &self.head_annotation {
            write!(f, ";{}:{}", decl.alias, type_name(decl.ty))?;
        }
        write!(f, ")")?;
        match self.recursion {
            Recursion::None => {}
            Recursion::Fixpoint => write!(f, "*")?,
            Recursion::Naive { iterations } => write!(f, "*[i={iterations}]")?,
        }
        write!(f, " :- ")?;
        for (i, atom) in self.body_atoms.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{atom}")?;
        }
        if let (Some(decl), Some(expr)) = (&self.head_annotation, &self.annotation_expr) {
            write!(f, "; {}={expr}", decl.alias)?;
        }
        write!(f, ".")
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_program;

    #[test]
    fn round_trips_the_examples() {
        let texts = [
            "Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).",
            "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.",
            "PageRank(x;y:float)*[i=5] :- Edge(x,z),PageRank(z),InvDeg(z); y=0.15+0.85*<<SUM(z)>>.",
            "SSSP(x;y:int)* :- Edge(w,x),SSSP(w); y=<<MIN(w)>>+1.",
        ];
        for text in texts {
            let parsed = parse_program(text).unwrap();
            let printed = parsed.to_string();
            let reparsed = parse_program(&printed).unwrap();
            assert_eq!(parsed, reparsed, "round trip changed {text}");
        }
    }
}
