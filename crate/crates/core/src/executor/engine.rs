//! Rule and program evaluation over a catalog.
//!
//! Each rule's decomposition evaluates bottom-up: every node runs the
//! multiway join over its atoms plus its children's projected results,
//! folding annotations or reducing to existence checks as the rule
//! demands. When output attributes are missing from the root, a top-down
//! pass reassembles them from the node materializations. Recursive rules
//! iterate naively (fixed rounds, replacing the relation) or to fixpoint
//! (merging by the aggregate's semiring, optionally restricted to the
//! frontier of improved keys).

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use crate::frontend::{AggOp, AggVar, ConstEnc, Recursion, RuleIR, TermIR, IMPLICIT_INV_DEGREE};
use crate::planner::{plan_rule, GhdPlan, PlanOptions};
use crate::setkernel::Granularity;
use crate::storage::{AnnotType, Catalog, DictRef, StoredRelation, Trie, TrieBuilder};

use super::join::{record_run, run_join, Accessor, JoinMode, JoinOutput, JoinSpec};
use super::metrics::{ExecMetrics, RuleMetrics};
use super::semiring::{eval_expr, Semiring};
use super::ExecError;

#[derive(Debug, Clone)]
pub struct ExecOptions {
    pub threads: usize,
    /// Force full re-evaluation per round for fixpoint rules.
    pub force_naive: bool,
    /// Safety bound on fixpoint rounds.
    pub max_iterations: usize,
    /// Capture decoded intersection operands for the layout oracle.
    pub capture_workload: bool,
    /// Layout granularity for intermediate and result materializations.
    pub granularity: Granularity,
    pub plan: PlanOptions,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            threads: 1,
            force_naive: false,
            max_iterations: 100_000,
            capture_workload: false,
            granularity: Granularity::SetLevel,
            plan: PlanOptions::default(),
        }
    }
}

/// Decoded-ready result of one rule.
#[derive(Debug, Clone)]
pub struct RuleResult {
    pub head: String,
    pub key_vars: Vec<String>,
    /// Encoded key tuples, sorted.
    pub tuples: Vec<Vec<u32>>,
    /// Annotation value per tuple; for scalar heads a single value with
    /// one empty tuple.
    pub values: Option<Vec<f64>>,
    pub annotation: Option<AnnotType>,
    pub dicts: Vec<DictRef>,
}

impl RuleResult {
    pub fn decoded(&self) -> Vec<(Vec<String>, Option<f64>)> {
        self.tuples
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let row = t
                    .iter()
                    .enumerate()
                    .map(|(c, &id)| self.dicts[c].decode(id).to_string())
                    .collect();
                (row, self.values.as_ref().map(|v| v[i]))
            })
            .collect()
    }

    pub fn scalar(&self) -> Option<f64> {
        if self.key_vars.is_empty() {
            self.values.as_ref().and_then(|v| v.first()).copied()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecOutcome {
    pub results: Vec<RuleResult>,
    pub metrics: ExecMetrics,
    pub workload: Vec<(Vec<u32>, Vec<u32>)>,
}

/// Relation namespace during execution: program-created relations shadow
/// the catalog.
struct Relations<'a> {
    catalog: &'a Catalog,
    overlay: BTreeMap<String, StoredRelation>,
}

impl<'a> Relations<'a> {
    fn get(&self, name: &str) -> Option<&StoredRelation> {
        self.overlay.get(name).or_else(|| self.catalog.get(name))
    }

    fn scalar(&self, name: &str) -> Option<f64> {
        self.get(name).and_then(|r| r.scalar_value())
    }
}

#[derive(Clone)]
enum NodeData {
    /// Distinct tuples over the node's output variables.
    Set(Arc<Trie>),
    /// Tuples with folded annotation values.
    Folded(Arc<Trie>),
    /// Fold result with no output variables; `None` when nothing matched.
    Scalar(Option<f64>),
    /// Set-mode result with no output variables.
    Gate(bool),
}

#[derive(Clone)]
struct NodeResult {
    vars: Vec<usize>,
    data: NodeData,
}

/// Evaluation style of the whole rule.
#[derive(Clone, Copy, PartialEq)]
enum RuleMode {
    /// Plain conjunctive query or distinct-counted aggregate.
    Set,
    /// Semiring fold of SUM, MIN, MAX, or COUNT(*).
    Fold(AggOp),
}

fn rule_mode(rule: &RuleIR) -> RuleMode {
    match &rule.aggregate {
        Some((AggOp::Count, AggVar::Var(_))) | None => RuleMode::Set,
        Some((op, _)) => RuleMode::Fold(*op),
    }
}

pub struct Engine<'a> {
    relations: Relations<'a>,
    opts: ExecOptions,
    pub metrics: ExecMetrics,
    pub workload: Vec<(Vec<u32>, Vec<u32>)>,
}

impl<'a> Engine<'a> {
    pub fn new(catalog: &'a Catalog, opts: ExecOptions) -> Engine<'a> {
        Engine {
            relations: Relations {
                catalog,
                overlay: BTreeMap::new(),
            },
            opts,
            metrics: ExecMetrics::default(),
            workload: Vec::new(),
        }
    }

    /// Runs a validated program, materializing intensional relations as it
    /// goes. Results arrive in rule order.
    pub fn execute(&mut self, program: &[RuleIR]) -> Result<Vec<RuleResult>, ExecError> {
        let start = Instant::now();
        self.derive_implicit_relations(program)?;
        let mut results = Vec::with_capacity(program.len());
        for rule in program {
            let result = self.run_rule(rule)?;
            self.register_result(rule, &result)?;
            results.push(result);
        }
        self.metrics.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
        Ok(results)
    }

    /// Inverse-degree vector over the `Edge` relation, derived on demand
    /// when a program references it without defining it.
    fn derive_implicit_relations(&mut self, program: &[RuleIR]) -> Result<(), ExecError> {
        let referenced = program.iter().any(|r| {
            r.atoms.iter().any(|a| a.relation == IMPLICIT_INV_DEGREE)
                && self.relations.get(IMPLICIT_INV_DEGREE).is_none()
        });
        if !referenced {
            return Ok(());
        }
        let edge = self
            .relations
            .get("Edge")
            .ok_or_else(|| ExecError::UnknownRelation("Edge".into()))?;
        let dict = Arc::clone(&edge.dicts[0]);
        let trie = edge.data.trie(&[0, 1])?;
        let mut tuples = Vec::new();
        let mut values = Vec::new();
        for src in trie.lookup(&[]).iter() {
            let degree = trie.lookup(&[src]).cardinality();
            if degree > 0 {
                tuples.push(src);
                values.push(1.0 / degree as f64);
            }
        }
        let data = crate::storage::RelationData::new(1, tuples, Some(values), self.opts.granularity);
        self.relations.overlay.insert(
            IMPLICIT_INV_DEGREE.to_string(),
            StoredRelation {
                name: IMPLICIT_INV_DEGREE.to_string(),
                key_arity: 1,
                dicts: vec![dict],
                annotation: Some(AnnotType::Float),
                data: Arc::new(data),
            },
        );
        Ok(())
    }

    fn run_rule(&mut self, rule: &RuleIR) -> Result<RuleResult, ExecError> {
        let plan = plan_rule(rule, self.relations.catalog, &self.opts.plan)?;
        let mut metrics = RuleMetrics {
            head: rule.head_name.clone(),
            ..Default::default()
        };
        let result = match rule.recursion {
            Recursion::None => {
                metrics.iterations = 1;
                let rows = self.evaluate_once(rule, &plan, &HashMap::new(), &mut metrics)?;
                self.finalize(rule, rows)?
            }
            Recursion::Naive { iterations } => {
                self.run_naive(rule, &plan, iterations as usize, &mut metrics)?
            }
            Recursion::Fixpoint => {
                let seminaive = rule.seminaive_eligible && !self.opts.force_naive;
                self.run_fixpoint(rule, &plan, seminaive, &mut metrics)?
            }
        };
        self.metrics.rules.push(metrics);
        Ok(result)
    }

    /// Fixed-round unrolling: each round re-evaluates the body against the
    /// current relations and replaces the head relation with its output.
    fn run_naive(
        &mut self,
        rule: &RuleIR,
        plan: &GhdPlan,
        rounds: usize,
        metrics: &mut RuleMetrics,
    ) -> Result<RuleResult, ExecError> {
        let mut last = None;
        for _ in 0..rounds {
            metrics.iterations += 1;
            let rows = self.evaluate_once(rule, plan, &HashMap::new(), metrics)?;
            let result = self.finalize(rule, rows)?;
            self.register_result(rule, &result)?;
            last = Some(result);
        }
        last.ok_or(ExecError::ZeroIterations)
    }

    /// Iterates to fixpoint, merging each round's output into the current
    /// relation by the aggregate's semiring (set union when unannotated).
    /// Seminaive evaluation restricts the recursive atom to the keys that
    /// improved in the previous round.
    fn run_fixpoint(
        &mut self,
        rule: &RuleIR,
        plan: &GhdPlan,
        seminaive: bool,
        metrics: &mut RuleMetrics,
    ) -> Result<RuleResult, ExecError> {
        let self_atoms: Vec<usize> = rule
            .atoms
            .iter()
            .enumerate()
            .filter(|(_, a)| a.relation == rule.head_name)
            .map(|(i, _)| i)
            .collect();
        let seminaive = seminaive && self_atoms.len() == 1;
        let semiring = rule.aggregate.as_ref().map(|(op, _)| Semiring::for_aggregate(*op));

        // Current state of the relation, keyed by head tuple.
        let mut current: BTreeMap<Vec<u32>, Option<f64>> = match self.relations.get(&rule.head_name)
        {
            Some(rel) => relation_rows(rel)?,
            None => BTreeMap::new(),
        };
        let mut delta = current.clone();

        while metrics.iterations < self.opts.max_iterations {
            metrics.iterations += 1;
            let mut overrides = HashMap::new();
            if seminaive {
                if delta.is_empty() {
                    break;
                }
                let rel = self
                    .relations
                    .get(&rule.head_name)
                    .expect("recursive relation registered");
                overrides.insert(
                    self_atoms[0],
                    rows_to_relation(&format!("{}#delta", rule.head_name), rel, &delta, self.opts.granularity)?,
                );
            }
            let rows = self.evaluate_once(rule, plan, &overrides, metrics)?;
            let result = self.finalize(rule, rows)?;

            let mut improved: BTreeMap<Vec<u32>, Option<f64>> = BTreeMap::new();
            for (i, tuple) in result.tuples.iter().enumerate() {
                let value = result.values.as_ref().map(|v| v[i]);
                match current.get(tuple) {
                    None => {
                        improved.insert(tuple.clone(), value);
                    }
                    Some(cur) => match (&semiring, cur, value) {
                        (Some(s), Some(c), Some(v)) if s.improves(v, *c) => {
                            improved.insert(tuple.clone(), Some(s.plus(*c, v)));
                        }
                        _ => {}
                    },
                }
            }
            if improved.is_empty() {
                break;
            }
            for (k, v) in &improved {
                current.insert(k.clone(), *v);
            }
            delta = improved;
            let merged = self.rows_result(rule, &current)?;
            self.register_result(rule, &merged)?;
        }
        self.rows_result(rule, &current)
    }

    fn rows_result(
        &self,
        rule: &RuleIR,
        rows: &BTreeMap<Vec<u32>, Option<f64>>,
    ) -> Result<RuleResult, ExecError> {
        let annotated = rule.annotation.is_some();
        let mut tuples = Vec::with_capacity(rows.len());
        let mut values = annotated.then(|| Vec::with_capacity(rows.len()));
        for (t, v) in rows {
            tuples.push(t.clone());
            if let Some(out) = &mut values {
                out.push(v.unwrap_or_default());
            }
        }
        Ok(RuleResult {
            head: rule.head_name.clone(),
            key_vars: rule.head_keys.clone(),
            tuples,
            values,
            annotation: rule.annotation.as_ref().map(|d| d.ty),
            dicts: self.key_dicts(rule)?,
        })
    }

    /// One full evaluation of the rule body. Returns rows over the plan's
    /// head variables, with folded aggregate values in fold mode.
    fn evaluate_once(
        &mut self,
        rule: &RuleIR,
        plan: &GhdPlan,
        overrides: &HashMap<usize, StoredRelation>,
        metrics: &mut RuleMetrics,
    ) -> Result<Vec<(Vec<u32>, Option<f64>)>, ExecError> {
        let mode = rule_mode(rule);
        let mut results: Vec<Option<NodeResult>> = vec![None; plan.nodes.len()];
        for id in plan.bottom_up_order() {
            let node = &plan.nodes[id];
            if let Some(src) = node.dedup_source {
                let source = results[src].clone().expect("source evaluated first");
                results[id] = Some(NodeResult {
                    vars: node.output_vars.clone(),
                    data: source.data,
                });
                continue;
            }
            metrics.node_evaluations += 1;
            let result = self.evaluate_node(rule, plan, id, &results, overrides, mode, metrics)?;
            results[id] = Some(result);
        }

        let root = results[0].clone().expect("root evaluated");
        let rows = match (&root.data, mode) {
            (NodeData::Scalar(v), RuleMode::Fold(_)) => match v {
                Some(value) => vec![(Vec::new(), Some(*value))],
                None => Vec::new(),
            },
            (NodeData::Gate(nonempty), RuleMode::Set) => {
                if *nonempty {
                    vec![(Vec::new(), None)]
                } else {
                    Vec::new()
                }
            }
            (NodeData::Folded(trie), RuleMode::Fold(_)) =>

                reorder_columns(&trie.tuples(), &root.vars, &plan.head_vars),
            (NodeData::Set(trie), RuleMode::Set) => {
                if plan.topdown_needed {
                    let assembled = self.assemble_topdown(plan, &results)?;
                    assembled.into_iter().map(|t| (t, None)).collect()
                } else {
                    reorder_columns(&trie.tuples(), &root.vars, &plan.head_vars)
                }
            }
            _ => unreachable!("node mode follows rule mode"),
        };
        Ok(rows)
    }

    /// Builds and runs one node's loop nest.
    #[allow(clippy::too_many_arguments)]
    fn evaluate_node(
        &mut self,
        rule: &RuleIR,
        plan: &GhdPlan,
        id: usize,
        results: &[Option<NodeResult>],
        overrides: &HashMap<usize, StoredRelation>,
        mode: RuleMode,
        metrics: &mut RuleMetrics,
    ) -> Result<NodeResult, ExecError> {
        let node = &plan.nodes[id];
        let attrs: Vec<usize> = plan
            .attr_order
            .iter()
            .copied()
            .filter(|v| node.chi.contains(v))
            .collect();
        let semiring = match mode {
            RuleMode::Fold(op) => Some(Semiring::for_aggregate(op)),
            RuleMode::Set => None,
        };
        let count_star = matches!(rule.aggregate, Some((AggOp::Count, AggVar::Star)));

        let mut accessors = Vec::new();
        let mut base_weight = semiring.map(|s| s.one()).unwrap_or(1.0);
        let mut dead = false;

        for &atom_idx in &node.lambda {
            let atom = &rule.atoms[atom_idx];
            let rel = match overrides.get(&atom_idx) {
                Some(r) => r.clone(),
                None => self.resolve(rule, &atom.relation)?,
            };
            // COUNT(*) counts bindings; source annotations do not weigh in.
            let fold = semiring.is_some()
                && !count_star
                && rel.annotation.is_some()
                && node.annotation_owners.contains(&atom_idx);
            match build_atom_accessor(&rel, atom, &attrs, fold)? {
                Some(acc) => accessors.push(acc),
                None => dead = true,
            }
        }

        for &child in &node.children {
            let child_result = results[child].as_ref().expect("child evaluated first");
            let shared: Vec<usize> = child_result
                .vars
                .iter()
                .copied()
                .filter(|v| node.chi.contains(v))
                .collect();
            match &child_result.data {
                NodeData::Gate(true) => {}
                NodeData::Gate(false) => dead = true,
                NodeData::Scalar(Some(v)) => {
                    let s = semiring.expect("scalar results only in fold mode");
                    base_weight = s.times(base_weight, *v);
                }
                NodeData::Scalar(None) => dead = true,
                NodeData::Set(trie) => {
                    accessors.push(Accessor {
                        trie: Arc::clone(trie),
                        const_depth: 0,
                        vars: shared,
                        start: Some(0),
                        fold_annotation: false,
                    });
                }
                NodeData::Folded(trie) => {
                    let s = semiring.expect("folded results only in fold mode");
                    if shared.is_empty() {
                        // Disconnected child: its whole fold is a factor.
                        let mut acc = None;
                        trie.for_each_tuple(|_, v| {
                            let v = v.unwrap_or_else(|| s.one());
                            acc = Some(match acc {
                                None => v,
                                Some(prev) => s.plus(prev, v),
                            });
                        });
                        match acc {
                            Some(v) => base_weight = s.times(base_weight, v),
                            None => dead = true,
                        }
                    } else {
                        let passup = fold_passup(trie, shared.len(), s, self.opts.granularity)?;
                        accessors.push(Accessor {
                            trie: Arc::new(passup),
                            const_depth: 0,
                            vars: shared,
                            start: Some(0),
                            fold_annotation: true,
                        });
                    }
                }
            }
        }

        let out_positions: Vec<Option<usize>> = attrs
            .iter()
            .map(|a| node.output_vars.iter().position(|v| v == a))
            .collect();

        if dead {
            return Ok(empty_node_result(node.output_vars.clone(), semiring));
        }

        let spec = JoinSpec {
            attrs,
            accessors,
            out_positions,
            output_arity: node.output_vars.len(),
            mode: match semiring {
                Some(s) => JoinMode::Fold(s),
                None => JoinMode::Set,
            },
            base_weight,
            threads: self.opts.threads,
        };
        let mut run = run_join(&spec, self.opts.capture_workload)?;
        if self.opts.capture_workload {
            self.workload.extend(run.workload.iter().cloned());
        }

        let output = std::mem::replace(&mut run.output, JoinOutput::Set(Vec::new()));
        let result = match output {
            JoinOutput::Set(tuples) => {
                record_run(metrics, id, &run, tuples.len() as u64);
                if node.output_vars.is_empty() {
                    NodeResult {
                        vars: Vec::new(),
                        data: NodeData::Gate(!tuples.is_empty()),
                    }
                } else {
                    let trie = tuples_to_trie(&tuples, None, self.opts.granularity)?;
                    NodeResult {
                        vars: node.output_vars.clone(),
                        data: NodeData::Set(Arc::new(trie)),
                    }
                }
            }
            JoinOutput::Folded(map) => {
                record_run(metrics, id, &run, map.len() as u64);
                if node.output_vars.is_empty() {
                    NodeResult {
                        vars: Vec::new(),
                        data: NodeData::Scalar(map.get(&Vec::new()).copied()),
                    }
                } else {
                    let tuples: Vec<Vec<u32>> = map.keys().cloned().collect();
                    let values: Vec<f64> = map.values().copied().collect();
                    let trie = tuples_to_trie(&tuples, Some(&values), self.opts.granularity)?;
                    NodeResult {
                        vars: node.output_vars.clone(),
                        data: NodeData::Folded(Arc::new(trie)),
                    }
                }
            }
        };
        Ok(result)
    }

    /// Walks the tree in pre-order, extending each partial tuple with the
    /// matching completions from every node's materialization.
    fn assemble_topdown(
        &self,
        plan: &GhdPlan,
        results: &[Option<NodeResult>],
    ) -> Result<Vec<Vec<u32>>, ExecError> {
        let root = results[0].as_ref().expect("root evaluated");
        let mut acc_vars = root.vars.clone();
        let mut acc: Vec<Vec<u32>> = match &root.data {
            NodeData::Set(trie) => trie.tuples().into_iter().map(|(t, _)| t).collect(),
            NodeData::Gate(true) => vec![Vec::new()],
            NodeData::Gate(false) => Vec::new(),
            _ => unreachable!("top-down requires set mode"),
        };
        for id in 1..plan.nodes.len() {
            let result = results[id].as_ref().expect("node evaluated");
            if result.vars.is_empty() {
                if matches!(result.data, NodeData::Gate(false)) {
                    acc.clear();
                }
                continue;
            }
            let trie = match &result.data {
                NodeData::Set(t) => t,
                _ => unreachable!("top-down requires set mode"),
            };
            let shared: Vec<usize> = result
                .vars
                .iter()
                .copied()
                .filter(|v| acc_vars.contains(v))
                .collect();
            debug_assert_eq!(&result.vars[..shared.len()], &shared[..], "shared prefix");
            let positions: Vec<usize> = shared
                .iter()
                .map(|v| acc_vars.iter().position(|x| x == v).unwrap())
                .collect();
            let mut next = Vec::with_capacity(acc.len());
            let mut prefix = vec![0u32; shared.len()];
            for t in &acc {
                for (k, &p) in positions.iter().enumerate() {
                    prefix[k] = t[p];
                }
                for completion in trie.complete(&prefix) {
                    let mut row = t.clone();
                    row.extend_from_slice(&completion);
                    next.push(row);
                }
            }
            acc_vars.extend_from_slice(&result.vars[shared.len()..]);
            acc = next;
        }
        // Project to the head variables, deduplicating.
        let positions: Vec<usize> = plan
            .head_vars
            .iter()
            .map(|v| acc_vars.iter().position(|x| x == v).expect("head var assembled"))
            .collect();
        let mut out: std::collections::BTreeSet<Vec<u32>> = std::collections::BTreeSet::new();
        for t in acc {
            out.insert(positions.iter().map(|&p| t[p]).collect());
        }
        Ok(out.into_iter().collect())
    }

    /// Applies grouping and the annotation expression to raw rows over the
    /// plan's head variables, producing the rule's result.
    fn finalize(
        &self,
        rule: &RuleIR,
        rows: Vec<(Vec<u32>, Option<f64>)>,
    ) -> Result<RuleResult, ExecError> {
        let key_len = rule.head_keys.len();
        let scalars = |name: &str| self.relations.scalar(name);
        let mut tuples: Vec<Vec<u32>> = Vec::new();
        let mut values: Option<Vec<f64>> = rule.annotation.as_ref().map(|_| Vec::new());

        match (&rule.aggregate, &rule.expr) {
            (Some((AggOp::Count, AggVar::Var(_))), Some(expr)) => {
                // Rows cover the keys plus the counted variable; group.
                let mut counts: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
                for (row, _) in &rows {
                    *counts.entry(row[..key_len].to_vec()).or_insert(0) += 1;
                }
                if key_len == 0 && counts.is_empty() {
                    counts.insert(Vec::new(), 0);
                }
                for (key, count) in counts {
                    tuples.push(key);
                    values
                        .as_mut()
                        .expect("aggregates are annotated")
                        .push(eval_expr(expr, Some(count as f64), &scalars)?);
                }
            }
            (Some((op, _)), Some(expr)) => {
                let mut rows = rows;
                if key_len == 0 && rows.is_empty() && matches!(op, AggOp::Count | AggOp::Sum) {
                    rows.push((Vec::new(), Some(0.0)));
                }
                for (row, agg) in rows {
                    let agg = agg.expect("fold mode produced values");
                    tuples.push(row);
                    values
                        .as_mut()
                        .expect("aggregates are annotated")
                        .push(eval_expr(expr, Some(agg), &scalars)?);
                }
            }
            (None, Some(expr)) => {
                let constant = eval_expr(expr, None, &scalars)?;
                for (row, _) in rows {
                    tuples.push(row);
                    values.as_mut().expect("annotated").push(constant);
                }
            }
            (None, None) => {
                for (row, _) in rows {
                    tuples.push(row);
                }
            }
            (Some(_), None) => unreachable!("validated: aggregates come from expressions"),
        }

        // Integral annotation types round to the declared semantics.
        if let (Some(decl), Some(vals)) = (&rule.annotation, &mut values) {
            if decl.ty.is_integral() {
                for v in vals.iter_mut() {
                    *v = v.round();
                }
            }
        }

        Ok(RuleResult {
            head: rule.head_name.clone(),
            key_vars: rule.head_keys.clone(),
            tuples,
            values,
            annotation: rule.annotation.as_ref().map(|d| d.ty),
            dicts: self.key_dicts(rule)?,
        })
    }

    /// Dictionary of each head key column, taken from the first body
    /// binding of the variable.
    fn key_dicts(&self, rule: &RuleIR) -> Result<Vec<DictRef>, ExecError> {
        let mut dicts = Vec::with_capacity(rule.head_keys.len());
        for key in &rule.head_keys {
            let var = rule.var_index(key).expect("validated");
            let mut found = None;
            'outer: for atom in &rule.atoms {
                for (col, term) in atom.terms.iter().enumerate() {
                    if matches!(term, TermIR::Var(v) if *v == var) {
                        if let Some(rel) = self.relations.get(&atom.relation) {
                            if let Some(d) = rel.dicts.get(col) {
                                found = Some(Arc::clone(d));
                                break 'outer;
                            }
                        }
                    }
                }
            }
            dicts.push(found.ok_or_else(|| ExecError::UnknownRelation(rule.head_name.clone()))?);
        }
        Ok(dicts)
    }

    fn resolve(&self, rule: &RuleIR, name: &str) -> Result<StoredRelation, ExecError> {
        if let Some(rel) = self.relations.get(name) {
            return Ok(rel.clone());
        }
        // A recursive rule may run before any base tuple exists; treat the
        // missing relation as empty.
        if name == rule.head_name && rule.recursion != Recursion::None {
            let data = crate::storage::RelationData::new(
                rule.head_keys.len(),
                Vec::new(),
                rule.annotation.as_ref().map(|_| Vec::new()),
                self.opts.granularity,
            );
            return Ok(StoredRelation {
                name: name.to_string(),
                key_arity: rule.head_keys.len(),
                dicts: self.key_dicts(rule).unwrap_or_default(),
                annotation: rule.annotation.as_ref().map(|d| d.ty),
                data: Arc::new(data),
            });
        }
        Err(ExecError::UnknownRelation(name.to_string()))
    }

    /// Registers a rule's result as a relation for later rules.
    fn register_result(&mut self, rule: &RuleIR, result: &RuleResult) -> Result<(), ExecError> {
        let arity = rule.head_keys.len();
        let mut tuples = Vec::with_capacity(result.tuples.len() * arity);
        for t in &result.tuples {
            tuples.extend_from_slice(t);
        }
        let data = crate::storage::RelationData::new(
            arity,
            tuples,
            result.values.clone(),
            self.opts.granularity,
        );
        self.relations.overlay.insert(
            rule.head_name.clone(),
            StoredRelation {
                name: rule.head_name.clone(),
                key_arity: arity,
                dicts: result.dicts.clone(),
                annotation: result.annotation,
                data: Arc::new(data),
            },
        );
        Ok(())
    }
}

/// Convenience entry point: plan and run a validated program.
pub fn execute(
    program: &[RuleIR],
    catalog: &Catalog,
    opts: &ExecOptions,
) -> Result<ExecOutcome, ExecError> {
    let mut engine = Engine::new(catalog, opts.clone());
    let results = engine.execute(program)?;
    Ok(ExecOutcome {
        results,
        metrics: engine.metrics,
        workload: engine.workload,
    })
}

fn empty_node_result(vars: Vec<usize>, semiring: Option<Semiring>) -> NodeResult {
    let data = if vars.is_empty() {
        match semiring {
            Some(_) => NodeData::Scalar(None),
            None => NodeData::Gate(false),
        }
    } else {
        let trie = tuples_to_trie(&[], None, Granularity::RelationLevel).expect("empty trie");
        match semiring {
            Some(_) => NodeData::Folded(Arc::new(trie)),
            None => NodeData::Set(Arc::new(trie)),
        }
    };
    NodeResult { vars, data }
}

/// Builds the accessor for one body atom: constants occupy the leading
/// trie levels and are resolved once; variables follow in loop order.
fn build_atom_accessor(
    rel: &StoredRelation,
    atom: &crate::frontend::AtomIR,
    attrs: &[usize],
    fold_annotation: bool,
) -> Result<Option<Accessor>, ExecError> {
    let mut const_cols: Vec<(usize, Option<u32>)> = Vec::new();
    let mut var_cols: Vec<(usize, usize)> = Vec::new();
    for (col, term) in atom.terms.iter().enumerate() {
        match term {
            TermIR::Const { raw, encoded } => {
                let id = match encoded {
                    ConstEnc::Encoded(id) => Some(*id),
                    ConstEnc::AbsentFromDomain => None,
                    ConstEnc::Deferred => rel.dicts.get(col).and_then(|d| d.lookup(raw)),
                };
                const_cols.push((col, id));
            }
            TermIR::Var(v) => {
                let pos = attrs
                    .iter()
                    .position(|a| a == v)
                    .expect("atom variable in node attrs");
                var_cols.push((pos, col));
            }
        }
    }
    var_cols.sort_unstable();
    let mut order: Vec<usize> = const_cols.iter().map(|(c, _)| *c).collect();
    order.extend(var_cols.iter().map(|(_, c)| *c));
    let trie = rel.data.trie(&order)?;

    // Resolve the constant prefix.
    let mut set_idx = 0usize;
    for (level, (_, id)) in const_cols.iter().enumerate() {
        let Some(id) = id else {
            return Ok(Some(dead_accessor(trie, atom, attrs)));
        };
        let set = trie.level_set(level, set_idx);
        match set.rank(*id) {
            Some(pos) if level + 1 < trie.arity() => {
                set_idx = trie.child_of(level, set_idx, pos);
            }
            Some(_) => {}
            None => return Ok(Some(dead_accessor(trie, atom, attrs))),
        }
    }
    let vars: Vec<usize> = var_cols.iter().map(|&(pos, _)| attrs[pos]).collect();
    Ok(Some(Accessor {
        trie,
        const_depth: const_cols.len(),
        vars,
        start: Some(set_idx),
        fold_annotation,
    }))
}

fn dead_accessor(trie: Arc<Trie>, atom: &crate::frontend::AtomIR, attrs: &[usize]) -> Accessor {
    let vars: Vec<usize> = atom
        .terms
        .iter()
        .filter_map(|t| match t {
            TermIR::Var(v) => Some(*v),
            _ => None,
        })
        .collect();
    let mut vars: Vec<usize> = vars
        .into_iter()
        .filter(|v| attrs.contains(v))
        .collect();
    vars.sort_by_key(|v| attrs.iter().position(|a| a == v));
    Accessor {
        trie,
        const_depth: 0,
        vars,
        start: None,
        fold_annotation: false,
    }
}

/// Projects result rows from one variable order to another.
fn reorder_columns(
    tuples: &[(Vec<u32>, Option<f64>)],
    from_vars: &[usize],
    to_vars: &[usize],
) -> Vec<(Vec<u32>, Option<f64>)> {
    let positions: Vec<usize> = to_vars
        .iter()
        .map(|v| from_vars.iter().position(|x| x == v).expect("var present"))
        .collect();
    tuples
        .iter()
        .map(|(t, val)| (positions.iter().map(|&p| t[p]).collect(), *val))
        .collect()
}

fn tuples_to_trie(
    tuples: &[Vec<u32>],
    values: Option<&[f64]>,
    granularity: Granularity,
) -> Result<Trie, ExecError> {
    let arity = tuples.first().map(|t| t.len()).unwrap_or(1);
    let mut builder = TrieBuilder::new(arity.max(1), granularity);
    for (i, t) in tuples.iter().enumerate() {
        builder.push(t, values.map(|v| v[i]));
    }
    Ok(builder.finish()?)
}

/// Folds a materialization down to its leading `shared_len` columns,
/// merging annotation values additively.
fn fold_passup(
    trie: &Trie,
    shared_len: usize,
    semiring: Semiring,
    granularity: Granularity,
) -> Result<Trie, ExecError> {
    let mut folded: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    trie.for_each_tuple(|t, v| {
        let key = t[..shared_len].to_vec();
        let v = v.unwrap_or_else(|| semiring.one());
        folded
            .entry(key)
            .and_modify(|acc| *acc = semiring.plus(*acc, v))
            .or_insert(v);
    });
    let mut builder = TrieBuilder::new(shared_len, granularity);
    for (k, v) in folded {
        builder.push(&k, Some(v));
    }
    Ok(builder.finish()?)
}

/// Rows of a stored relation keyed by tuple.
fn relation_rows(rel: &StoredRelation) -> Result<BTreeMap<Vec<u32>, Option<f64>>, ExecError> {
    let arity = rel.key_arity;
    let mut out = BTreeMap::new();
    let n = rel.data.tuple_count();
    for i in 0..n {
        let t = rel.data.tuples[i * arity..(i + 1) * arity].to_vec();
        let v = rel.data.annotations.as_ref().map(|a| a[i]);
        out.insert(t, v);
    }
    Ok(out)
}

/// Builds a relation holding exactly the given rows, reusing the schema of
/// an existing one.
fn rows_to_relation(
    name: &str,
    like: &StoredRelation,
    rows: &BTreeMap<Vec<u32>, Option<f64>>,
    granularity: Granularity,
) -> Result<StoredRelation, ExecError> {
    let arity = like.key_arity;
    let mut tuples = Vec::with_capacity(rows.len() * arity);
    let annotated = like.annotation.is_some();
    let mut values = annotated.then(Vec::new);
    for (t, v) in rows {
        tuples.extend_from_slice(t);
        if let Some(out) = &mut values {
            out.push(v.unwrap_or_default());
        }
    }
    let data = crate::storage::RelationData::new(arity, tuples, values, granularity);
    Ok(StoredRelation {
        name: name.to_string(),
        key_arity: arity,
        dicts: like.dicts.clone(),
        annotation: like.annotation,
        data: Arc::new(data),
    })
}
