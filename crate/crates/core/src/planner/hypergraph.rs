//! Query hypergraphs: one vertex per variable, one hyperedge per atom.

use crate::frontend::RuleIR;

#[derive(Debug, Clone)]
pub struct HyperEdge {
    /// Index of the originating atom in the rule body.
    pub atom: usize,
    /// Variable indices, sorted.
    pub vars: Vec<usize>,
    /// Whether the atom carries selection constants.
    pub has_selection: bool,
}

#[derive(Debug, Clone)]
pub struct Hypergraph {
    /// Distinct variable indices, sorted.
    pub vertices: Vec<usize>,
    pub edges: Vec<HyperEdge>,
}

impl Hypergraph {
    /// Variables covered by selection atoms.
    pub fn selected_vars(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter(|e| e.has_selection)
            .flat_map(|e| e.vars.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn has_selections(&self) -> bool {
        self.edges.iter().any(|e| e.has_selection)
    }
}

/// Builds the hypergraph of a validated rule. Selection constants are not
/// vertices; they stay recorded on their edges.
pub fn build_hypergraph(rule: &RuleIR) -> Hypergraph {
    let mut vertices: Vec<usize> = Vec::new();
    let mut edges = Vec::with_capacity(rule.atoms.len());
    for (i, atom) in rule.atoms.iter().enumerate() {
        let mut vars: Vec<usize> = atom.var_indices().collect();
        vars.sort_unstable();
        vars.dedup();
        vertices.extend(vars.iter().copied());
        edges.push(HyperEdge {
            atom: i,
            vars,
            has_selection: atom.has_selection(),
        });
    }
    vertices.sort_unstable();
    vertices.dedup();
    Hypergraph { vertices, edges }
}
