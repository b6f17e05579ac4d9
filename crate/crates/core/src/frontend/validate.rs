//! Catalog validation: resolves parsed rules into a typed IR.

use std::collections::HashMap;

use super::ast::*;
use crate::storage::Catalog;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{relation}` has arity {expected}, atom has {found} terms")]
    ArityMismatch {
        relation: String,
        expected: usize,
        found: usize,
    },
    #[error("head variable `{0}` does not appear in the body")]
    UnsafeHeadVariable(String),
    #[error("type error: {0}")]
    TypeMismatch(String),
    #[error("annotation expression has more than one aggregate term")]
    MultipleAggregates,
    #[error("aggregate variable `{0}` is not bound in the body")]
    AggregateVarUnbound(String),
    #[error("recursive rule `{0}` has no base: the head is neither in the body nor defined earlier")]
    RecursionWithoutBase(String),
    #[error("atom over `{0}` binds no variables")]
    ConstantOnlyAtom(String),
}

/// How a selection constant resolved against the column dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConstEnc {
    Encoded(u32),
    /// Known dictionary, value absent: the selection matches nothing.
    AbsentFromDomain,
    /// Dictionary only known at execution time (intensional relation).
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermIR {
    /// Index into [`RuleIR::variables`].
    Var(usize),
    Const { raw: String, encoded: ConstEnc },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomIR {
    pub relation: String,
    /// Whether the relation carries an annotation column that joins fold.
    pub annotated: bool,
    pub terms: Vec<TermIR>,
}

impl AtomIR {
    pub fn var_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms.iter().filter_map(|t| match t {
            TermIR::Var(i) => Some(*i),
            TermIR::Const { .. } => None,
        })
    }

    pub fn has_selection(&self) -> bool {
        self.terms.iter().any(|t| matches!(t, TermIR::Const { .. }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleIR {
    pub head_name: String,
    pub head_keys: Vec<String>,
    pub annotation: Option<AnnotationDecl>,
    pub atoms: Vec<AtomIR>,
    pub expr: Option<ArithExpr>,
    /// The single aggregate term of the expression, if any.
    pub aggregate: Option<(AggOp, AggVar)>,
    pub recursion: Recursion,
    pub seminaive_eligible: bool,
    /// Distinct body variables in first-occurrence order.
    pub variables: Vec<String>,
}

impl RuleIR {
    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v == name)
    }

    pub fn head_key_indices(&self) -> Vec<usize> {
        self.head_keys
            .iter()
            .map(|k| self.var_index(k).expect("validated head key"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct RelationSig {
    key_arity: usize,
    annotated: bool,
}

/// Relations derived on demand by convention when a program references
/// them: `InvDeg(v)` annotated with `1/degree(v)` over the `Edge` relation.
pub const IMPLICIT_INV_DEGREE: &str = "InvDeg";

/// Validates a parsed program against the catalog. Rules may reference
/// heads of earlier rules (and their own head, under recursion).
pub fn validate(program: &Program, catalog: &Catalog) -> Result<Vec<RuleIR>, ValidateError> {
    let mut intensional: HashMap<String, RelationSig> = HashMap::new();
    let mut out = Vec::with_capacity(program.rules.len());
    for rule in &program.rules {
        let ir = validate_rule(rule, catalog, &intensional)?;
        intensional.insert(
            rule.head_name.clone(),
            RelationSig {
                key_arity: rule.head_keys.len(),
                annotated: rule.head_annotation.is_some(),
            },
        );
        out.push(ir);
    }
    Ok(out)
}

fn resolve_sig(
    name: &str,
    catalog: &Catalog,
    intensional: &HashMap<String, RelationSig>,
    own_head: Option<(&str, RelationSig)>,
) -> Option<RelationSig> {
    if let Some(rel) = catalog.get(name) {
        return Some(RelationSig {
            key_arity: rel.key_arity,
            annotated: rel.annotation.is_some(),
        });
    }
    if let Some(sig) = intensional.get(name) {
        return Some(*sig);
    }
    if let Some((head, sig)) = own_head {
        if head == name {
            return Some(sig);
        }
    }
    if name == IMPLICIT_INV_DEGREE && catalog.contains("Edge") {
        return Some(RelationSig {
            key_arity: 1,
            annotated: true,
        });
    }
    None
}

fn validate_rule(
    rule: &Rule,
    catalog: &Catalog,
    intensional: &HashMap<String, RelationSig>,
) -> Result<RuleIR, ValidateError> {
    let own_sig = RelationSig {
        key_arity: rule.head_keys.len(),
        annotated: rule.head_annotation.is_some(),
    };
    let own_head = (rule.recursion != Recursion::None).then_some((rule.head_name.as_str(), own_sig));

    if rule.recursion != Recursion::None {
        let recursive_ref = rule.body_atoms.iter().any(|a| a.relation == rule.head_name);
        if !recursive_ref && !intensional.contains_key(&rule.head_name) {
            return Err(ValidateError::RecursionWithoutBase(rule.head_name.clone()));
        }
    }

    let mut variables: Vec<String> = Vec::new();
    let mut atoms = Vec::with_capacity(rule.body_atoms.len());
    for atom in &rule.body_atoms {
        let sig = resolve_sig(&atom.relation, catalog, intensional, own_head)
            .ok_or_else(|| ValidateError::UnknownRelation(atom.relation.clone()))?;
        if atom.terms.len() != sig.key_arity {
            return Err(ValidateError::ArityMismatch {
                relation: atom.relation.clone(),
                expected: sig.key_arity,
                found: atom.terms.len(),
            });
        }
        if !atom.terms.iter().any(|t| matches!(t, Term::Variable(_))) {
            return Err(ValidateError::ConstantOnlyAtom(atom.relation.clone()));
        }
        let mut terms = Vec::with_capacity(atom.terms.len());
        for (col, term) in atom.terms.iter().enumerate() {
            match term {
                Term::Variable(v) => {
                    let idx = match variables.iter().position(|x| x == v) {
                        Some(i) => i,
                        None => {
                            variables.push(v.clone());
                            variables.len() - 1
                        }
                    };
                    terms.push(TermIR::Var(idx));
                }
                Term::Constant(raw) => {
                    let encoded = match catalog.get(&atom.relation) {
                        Some(rel) => match rel.dicts.get(col).and_then(|d| d.lookup(raw)) {
                            Some(id) => ConstEnc::Encoded(id),
                            None => ConstEnc::AbsentFromDomain,
                        },
                        None => ConstEnc::Deferred,
                    };
                    terms.push(TermIR::Const {
                        raw: raw.clone(),
                        encoded,
                    });
                }
            }
        }
        atoms.push(AtomIR {
            relation: atom.relation.clone(),
            annotated: sig.annotated,
            terms,
        });
    }

    let mut seen_keys = std::collections::HashSet::new();
    for key in &rule.head_keys {
        if !variables.iter().any(|v| v == key) {
            return Err(ValidateError::UnsafeHeadVariable(key.clone()));
        }
        if !seen_keys.insert(key.as_str()) {
            return Err(ValidateError::TypeMismatch(format!(
                "head variable `{key}` repeats"
            )));
        }
    }

    let mut aggregate = None;
    if let Some(expr) = &rule.annotation_expr {
        let decl = rule.head_annotation.as_ref().expect("parser pairs alias with decl");
        let aggs = expr.aggregates();
        if aggs.len() > 1 {
            return Err(ValidateError::MultipleAggregates);
        }
        if let Some((op, var)) = aggs.first() {
            match var {
                AggVar::Star => {
                    if *op != AggOp::Count {
                        return Err(ValidateError::TypeMismatch(format!(
                            "{}(*) is not supported; only COUNT takes *",
                            op.name()
                        )));
                    }
                }
                AggVar::Var(v) => {
                    if !variables.iter().any(|x| x == v) {
                        return Err(ValidateError::AggregateVarUnbound(v.clone()));
                    }
                    if rule.head_keys.iter().any(|k| k == v) {
                        return Err(ValidateError::TypeMismatch(format!(
                            "aggregate variable `{v}` is also a head key"
                        )));
                    }
                }
            }
            aggregate = Some((*op, (*var).clone()));
        }
        if decl.ty.is_integral() && expr.uses_division() {
            return Err(ValidateError::TypeMismatch(format!(
                "division in a {:?}-typed annotation",
                decl.ty
            )));
        }
        for name in expr.scalar_refs() {
            let sig = resolve_sig(name, catalog, intensional, own_head)
                .ok_or_else(|| ValidateError::UnknownRelation(name.to_string()))?;
            if sig.key_arity != 0 || !sig.annotated {
                return Err(ValidateError::TypeMismatch(format!(
                    "`{name}` is not a scalar relation"
                )));
            }
        }
    } else if rule.head_annotation.is_some() {
        return Err(ValidateError::TypeMismatch(
            "head declares an annotation but the body does not assign it".into(),
        ));
    }

    let seminaive_eligible = rule.recursion == Recursion::Fixpoint
        && matches!(aggregate, Some((AggOp::Min | AggOp::Max, _)));

    Ok(RuleIR {
        head_name: rule.head_name.clone(),
        head_keys: rule.head_keys.clone(),
        annotation: rule.head_annotation.clone(),
        atoms,
        expr: rule.annotation_expr.clone(),
        aggregate,
        recursion: rule.recursion,
        seminaive_eligible,
        variables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parser::parse_program;
    use crate::setkernel::Granularity;
    use crate::storage::Dictionary;
    use std::sync::Arc;

    fn edge_catalog(names: &[&str]) -> Catalog {
        let mut catalog = Catalog::new();
        let mut dict = Dictionary::new();
        for v in ["0", "1", "2"] {
            dict.intern(v).unwrap();
        }
        let dict = Arc::new(dict);
        catalog
            .register(
                "Edge",
                2,
                vec![Arc::clone(&dict), Arc::clone(&dict)],
                vec![0, 1, 1, 2],
                None,
                None,
                Granularity::SetLevel,
            )
            .unwrap();
        for name in names {
            catalog.alias(name, "Edge").unwrap();
        }
        catalog
    }

    #[test]
    fn triangle_validates() {
        let catalog = edge_catalog(&["R", "S", "T"]);
        let p = parse_program("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).").unwrap();
        let ir = validate(&p, &catalog).unwrap();
        assert_eq!(ir[0].variables, vec!["x", "y", "z"]);
        assert_eq!(ir[0].head_key_indices(), vec![0, 1, 2]);
    }

    #[test]
    fn arity_mismatch() {
        let catalog = edge_catalog(&["P"]);
        let p = parse_program("Q(x) :- P(x,y,z).").unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::ArityMismatch { .. })
        ));
    }

    #[test]
    fn unknown_relation() {
        let catalog = edge_catalog(&[]);
        let p = parse_program("Q(x) :- Mystery(x,y).").unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::UnknownRelation(_))
        ));
    }

    #[test]
    fn unsafe_head_variable() {
        let catalog = edge_catalog(&["R"]);
        let p = parse_program("Q(x,q) :- R(x,y).").unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::UnsafeHeadVariable(_))
        ));
    }

    #[test]
    fn sssp_flags_seminaive() {
        let catalog = edge_catalog(&[]);
        let p = parse_program(
            "SSSP(x;y:int) :- Edge(\"1\",x); y=1.\nSSSP(x;y:int)* :- Edge(w,x),SSSP(w); y=<<MIN(w)>>+1.",
        )
        .unwrap();
        let ir = validate(&p, &catalog).unwrap();
        assert!(!ir[0].seminaive_eligible);
        assert!(ir[1].seminaive_eligible);
        assert_eq!(
            ir[0].atoms[0].terms[0],
            TermIR::Const {
                raw: "1".into(),
                encoded: ConstEnc::Encoded(1)
            }
        );
    }

    #[test]
    fn constants_absent_from_domain() {
        let catalog = edge_catalog(&[]);
        let p = parse_program("Q(x) :- Edge(\"missing\",x).").unwrap();
        let ir = validate(&p, &catalog).unwrap();
        assert_eq!(
            ir[0].atoms[0].terms[0],
            TermIR::Const {
                raw: "missing".into(),
                encoded: ConstEnc::AbsentFromDomain
            }
        );
    }

    #[test]
    fn integer_annotations_reject_division() {
        let catalog = edge_catalog(&[]);
        let p = parse_program("N(;w:int) :- Edge(x,y); w=<<COUNT(x)>>.\nQ(x;v:int) :- Edge(x,y); v=1/N.")
            .unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::TypeMismatch(_))
        ));
    }

    #[test]
    fn pagerank_program_validates() {
        let catalog = edge_catalog(&[]);
        let p = parse_program(
            "N(;w:int) :- Edge(x,y); w=<<COUNT(x)>>.\n\
             PageRank(x;y:float) :- Edge(x,z); y=1/N.\n\
             PageRank(x;y:float)*[i=5] :- Edge(x,z),PageRank(z),InvDeg(z); y=0.15+0.85*<<SUM(z)>>.",
        )
        .unwrap();
        let ir = validate(&p, &catalog).unwrap();
        assert!(ir[2].atoms[1].annotated, "recursive PageRank atom is annotated");
        assert!(ir[2].atoms[2].annotated, "implicit InvDeg is annotated");
        assert!(!ir[2].seminaive_eligible, "SUM is not monotone");
    }

    #[test]
    fn recursion_without_base() {
        let catalog = edge_catalog(&[]);
        let p = parse_program("Q(x;y:int)* :- Edge(w,x); y=<<MIN(w)>>+1.").unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::RecursionWithoutBase(_))
        ));
    }

    #[test]
    fn multiple_aggregates_rejected() {
        let catalog = edge_catalog(&[]);
        let p = parse_program("Q(;w:long) :- Edge(x,y); w=<<COUNT(*)>>+<<COUNT(*)>>.").unwrap();
        assert!(matches!(
            validate(&p, &catalog),
            Err(ValidateError::MultipleAggregates)
        ));
    }

    #[test]
    fn validation_is_pure() {
        let catalog = edge_catalog(&["R", "S", "T"]);
        let p = parse_program("Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).").unwrap();
        let a = validate(&p, &catalog).unwrap();
        let b = validate(&p, &catalog).unwrap();
        assert_eq!(a, b);
    }
}
