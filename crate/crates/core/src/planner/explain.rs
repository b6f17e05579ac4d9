//! Stable text and JSON renderings of a chosen plan.

use serde::Serialize;

use crate::frontend::RuleIR;

use super::ghd::GhdPlan;

#[derive(Debug, Serialize)]
pub struct ExplainNode {
    pub id: usize,
    pub depth: usize,
    pub lambda: Vec<String>,
    pub chi: Vec<String>,
    /// Exact width as `num/den` (or an integer when whole).
    pub width: String,
    pub output: Vec<String>,
    pub dedup_source: Option<usize>,
}

#[derive(Debug, Serialize)]
pub struct Explain {
    pub rule: String,
    pub fhw: String,
    pub attribute_order: Vec<String>,
    pub topdown: bool,
    pub nodes: Vec<ExplainNode>,
}

fn fmt_rat(r: super::cover::Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn atom_text(rule: &RuleIR, atom: usize) -> String {
    let a = &rule.atoms[atom];
    let terms: Vec<String> = a
        .terms
        .iter()
        .map(|t| match t {
            crate::frontend::TermIR::Var(v) => rule.variables[*v].clone(),
            crate::frontend::TermIR::Const { raw, .. } => format!("\"{raw}\""),
        })
        .collect();
    format!("{}({})", a.relation, terms.join(","))
}

pub fn explain(rule: &RuleIR, plan: &GhdPlan) -> Explain {
    Explain {
        rule: rule.head_name.clone(),
        fhw: fmt_rat(plan.fhw),
        attribute_order: plan
            .attr_order
            .iter()
            .map(|&v| rule.variables[v].clone())
            .collect(),
        topdown: plan.topdown_needed,
        nodes: plan
            .nodes
            .iter()
            .map(|n| ExplainNode {
                id: n.id,
                depth: n.depth,
                lambda: n.lambda.iter().map(|&a| atom_text(rule, a)).collect(),
                chi: n.chi.iter().map(|&v| rule.variables[v].clone()).collect(),
                width: fmt_rat(n.width),
                output: n.output_vars.iter().map(|&v| rule.variables[v].clone()).collect(),
                dedup_source: n.dedup_source,
            })
            .collect(),
    }
}

impl std::fmt::Display for Explain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "plan for {} (fhw {})", self.rule, self.fhw)?;
        writeln!(f, "  attribute order: {}", self.attribute_order.join(", "))?;
        writeln!(f, "  top-down pass: {}", self.topdown)?;
        for n in &self.nodes {
            let indent = "  ".repeat(n.depth + 1);
            write!(
                f,
                "{indent}node {}: lambda={{{}}} chi={{{}}} width={}",
                n.id,
                n.lambda.join(","),
                n.chi.join(","),
                n.width
            )?;
            if !n.output.is_empty() {
                write!(f, " out=[{}]", n.output.join(","))?;
            }
            if let Some(src) = n.dedup_source {
                write!(f, " dedup->{src}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn explain_json(rule: &RuleIR, plan: &GhdPlan) -> serde_json::Value {
    serde_json::to_value(explain(rule, plan)).expect("explain serializes")
}
