//! The multiway join over one decomposition node: an attribute-at-a-time
//! loop nest that intersects, for each attribute, the candidate sets of
//! every participating relation, recursing on each binding.
//!
//! Output attributes materialize; the rest either fold into the rule's
//! semiring value or reduce to an existence probe, depending on the mode.

use std::collections::{btree_map, BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::setkernel::{intersect_with_stats, SetView};
use crate::storage::Trie;

use super::metrics::{IntersectCounters, RuleMetrics};
use super::semiring::Semiring;
use super::ExecError;

/// One input to a node's loop nest: a trie positioned past its constant
/// prefix, binding `vars` (node-order sorted) on its remaining levels.
pub struct Accessor {
    pub trie: Arc<Trie>,
    /// Levels already consumed by selection constants.
    pub const_depth: usize,
    /// Variable index bound at each remaining level.
    pub vars: Vec<usize>,
    /// Set index at level `const_depth`; `None` when a constant missed.
    pub start: Option<usize>,
    /// Multiply the leaf annotation into the running product.
    pub fold_annotation: bool,
}

/// Evaluation mode of a node.
#[derive(Clone, Copy)]
pub enum JoinMode {
    /// Distinct bindings of the output attributes; levels past the last
    /// output attribute reduce to an existence probe.
    Set,
    /// Semiring fold: annotations multiply across atoms and fold
    /// additively per output binding.
    Fold(Semiring),
}

pub struct JoinSpec {
    /// Node attributes in loop order.
    pub attrs: Vec<usize>,
    pub accessors: Vec<Accessor>,
    /// Position in the output tuple per loop level, `None` for folded or
    /// existence-checked attributes.
    pub out_positions: Vec<Option<usize>>,
    pub output_arity: usize,
    pub mode: JoinMode,
    /// Constant weight multiplied into every binding (scalar children).
    pub base_weight: f64,
    pub threads: usize,
}

impl JoinSpec {
    fn semiring(&self) -> Option<Semiring> {
        match self.mode {
            JoinMode::Fold(s) => Some(s),
            JoinMode::Set => None,
        }
    }

    fn last_out_level(&self) -> Option<usize> {
        (0..self.out_positions.len())
            .rev()
            .find(|&i| self.out_positions[i].is_some())
    }

    fn initial_positions(&self) -> Option<Vec<(usize, usize)>> {
        self.accessors
            .iter()
            .map(|acc| acc.start.map(|idx| (0usize, idx)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum JoinOutput {
    Set(Vec<Vec<u32>>),
    Folded(BTreeMap<Vec<u32>, f64>),
}

pub struct JoinRun {
    pub output: JoinOutput,
    pub iterations: u64,
    pub counters: IntersectCounters,
    pub workload: Vec<(Vec<u32>, Vec<u32>)>,
}

struct Worker<'a> {
    spec: &'a JoinSpec,
    /// (bound vars, set index) per accessor.
    positions: Vec<(usize, usize)>,
    tuple: Vec<u32>,
    iterations: u64,
    counters: IntersectCounters,
    workload: Option<Vec<(Vec<u32>, Vec<u32>)>>,
    set_out: BTreeSet<Vec<u32>>,
    fold_out: BTreeMap<Vec<u32>, f64>,
    last_out_level: Option<usize>,
}

impl<'a> Worker<'a> {
    fn new(spec: &'a JoinSpec, positions: Vec<(usize, usize)>, capture: bool) -> Worker<'a> {
        Worker {
            spec,
            positions,
            tuple: vec![0; spec.output_arity],
            iterations: 0,
            counters: IntersectCounters::default(),
            workload: capture.then(Vec::new),
            set_out: BTreeSet::new(),
            fold_out: BTreeMap::new(),
            last_out_level: spec.last_out_level(),
        }
    }

    fn accessor_set(&self, acc_idx: usize) -> &SetView {
        let acc = &self.spec.accessors[acc_idx];
        let (level, set_idx) = self.positions[acc_idx];
        acc.trie.level_set(acc.const_depth + level, set_idx)
    }

    /// Accessors whose next unbound variable is `attr`.
    fn participants(&self, attr: usize) -> Vec<usize> {
        (0..self.spec.accessors.len())
            .filter(|&i| {
                let acc = &self.spec.accessors[i];
                let (level, _) = self.positions[i];
                level < acc.vars.len() && acc.vars[level] == attr
            })
            .collect()
    }

    /// Intersection of all participants' current sets, smallest first.
    fn candidates(&mut self, parts: &[usize]) -> SetView {
        let mut order: Vec<usize> = parts.to_vec();
        order.sort_by_key(|&i| self.accessor_set(i).cardinality());
        let mut current = self.accessor_set(order[0]).clone();
        for &i in &order[1..] {
            if current.is_empty() {
                break;
            }
            let capture = self
                .workload
                .as_ref()
                .is_some_and(|w| w.len() < 200_000)
                .then(|| (current.decode(), self.accessor_set(i).decode()));
            let (next, stats) = {
                let other = self.accessor_set(i);
                intersect_with_stats(&current, other)
            };
            if let (Some(w), Some(pair)) = (&mut self.workload, capture) {
                w.push(pair);
            }
            self.counters.record(&stats);
            current = next;
        }
        current
    }

    /// Binds `value` on every participant, folding in annotations of
    /// accessors that complete. `None` when a repeated-variable membership
    /// check fails.
    fn advance(&mut self, parts: &[usize], value: u32) -> Option<f64> {
        let semiring = self.spec.semiring();
        let mut factor = semiring.map(|s| s.one()).unwrap_or(1.0);
        for &i in parts {
            loop {
                let acc = &self.spec.accessors[i];
                let (level, set_idx) = self.positions[i];
                let trie_level = acc.const_depth + level;
                let set = acc.trie.level_set(trie_level, set_idx);
                let pos = set.rank(value)?;
                if level + 1 == acc.vars.len() && acc.fold_annotation {
                    if let Some(s) = &semiring {
                        let v = set.assoc_lookup(value).unwrap_or_else(|_| s.one());
                        factor = s.times(factor, v);
                    }
                }
                let next_set = if trie_level + 1 < acc.trie.arity() {
                    acc.trie.child_of(trie_level, set_idx, pos)
                } else {
                    set_idx
                };
                self.positions[i] = (level + 1, next_set);
                let acc = &self.spec.accessors[i];
                if level + 1 < acc.vars.len() && acc.vars[level + 1] == acc.vars[level] {
                    continue;
                }
                break;
            }
        }
        Some(factor)
    }

    /// Loops over one attribute's candidates, restricted to `values` when
    /// given (the parallel driver partitions the outermost attribute).
    fn run(&mut self, level: usize, weight: f64, restrict: Option<&[u32]>) {
        let semiring = self.spec.semiring();
        if level == self.spec.attrs.len() {
            self.emit(weight);
            return;
        }
        if semiring.is_none() && self.last_out_level.map_or(true, |last| level > last) {
            if self.exists(level) {
                self.emit(weight);
            }
            return;
        }
        let attr = self.spec.attrs[level];
        let parts = self.participants(attr);
        let values: Vec<u32> = match restrict {
            Some(vs) => vs.to_vec(),
            None => self.candidates(&parts).decode(),
        };
        for value in values {
            self.iterations += 1;
            let saved: Vec<(usize, usize)> = parts.iter().map(|&i| self.positions[i]).collect();
            if let Some(factor) = self.advance(&parts, value) {
                if let Some(pos) = self.spec.out_positions[level] {
                    self.tuple[pos] = value;
                }
                let w = match &semiring {
                    Some(s) => s.times(weight, factor),
                    None => weight,
                };
                self.run(level + 1, w, None);
            }
            for (k, &i) in parts.iter().enumerate() {
                self.positions[i] = saved[k];
            }
        }
    }

    fn emit(&mut self, weight: f64) {
        match self.spec.mode {
            JoinMode::Set => {
                self.set_out.insert(self.tuple.clone());
            }
            JoinMode::Fold(s) => match self.fold_out.entry(self.tuple.clone()) {
                btree_map::Entry::Vacant(e) => {
                    e.insert(weight);
                }
                btree_map::Entry::Occupied(mut e) => {
                    let v = s.plus(*e.get(), weight);
                    e.insert(v);
                }
            },
        }
    }

    /// First-witness check over the remaining levels.
    fn exists(&mut self, level: usize) -> bool {
        if level == self.spec.attrs.len() {
            return true;
        }
        let attr = self.spec.attrs[level];
        let parts = self.participants(attr);
        let candidates = self.candidates(&parts);
        for value in candidates.iter() {
            self.iterations += 1;
            let saved: Vec<(usize, usize)> = parts.iter().map(|&i| self.positions[i]).collect();
            let ok = self.advance(&parts, value).is_some() && self.exists(level + 1);
            for (k, &i) in parts.iter().enumerate() {
                self.positions[i] = saved[k];
            }
            if ok {
                return true;
            }
        }
        false
    }

    fn into_run(self) -> JoinRun {
        let output = match self.spec.mode {
            JoinMode::Set => JoinOutput::Set(self.set_out.into_iter().collect()),
            JoinMode::Fold(_) => JoinOutput::Folded(self.fold_out),
        };
        JoinRun {
            output,
            iterations: self.iterations,
            counters: self.counters,
            workload: self.workload.unwrap_or_default(),
        }
    }
}

/// Runs a node's loop nest, partitioning the outermost attribute's
/// candidates across workers. Chunks are merged in order, so results do
/// not depend on the worker count.
pub fn run_join(spec: &JoinSpec, capture_workload: bool) -> Result<JoinRun, ExecError> {
    let threads = spec.threads.max(1);
    let Some(init) = spec.initial_positions() else {
        // A selection constant missed: no bindings.
        let output = match spec.mode {
            JoinMode::Set => JoinOutput::Set(Vec::new()),
            JoinMode::Fold(_) => JoinOutput::Folded(BTreeMap::new()),
        };
        return Ok(JoinRun {
            output,
            iterations: 0,
            counters: IntersectCounters::default(),
            workload: Vec::new(),
        });
    };

    let mut seed = Worker::new(spec, init.clone(), capture_workload);
    let root_parts = seed.participants(spec.attrs[0]);
    let root_candidates = seed.candidates(&root_parts).decode();

    if threads == 1 || root_candidates.len() < 2 * threads {
        seed.run(0, spec.base_weight, Some(&root_candidates));
        return Ok(seed.into_run());
    }

    let chunk_size = root_candidates.len().div_ceil(threads);
    let chunks: Vec<&[u32]> = root_candidates.chunks(chunk_size).collect();
    let worker_runs: Vec<JoinRun> = std::thread::scope(|scope| {
        let handles: Vec<_> = chunks
            .iter()
            .map(|chunk| {
                let init = init.clone();
                scope.spawn(move || {
                    let mut w = Worker::new(spec, init, false);
                    w.run(0, spec.base_weight, Some(chunk));
                    w.into_run()
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("join worker panicked"))
            .collect()
    });

    let mut iterations = seed.iterations;
    let mut counters = seed.counters.clone();
    let mut set_out: BTreeSet<Vec<u32>> = BTreeSet::new();
    let mut fold_out: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
    for run in worker_runs {
        iterations += run.iterations;
        counters.merge_from(&run.counters);
        match run.output {
            JoinOutput::Set(tuples) => set_out.extend(tuples),
            JoinOutput::Folded(map) => {
                for (k, v) in map {
                    match fold_out.entry(k) {
                        btree_map::Entry::Vacant(e) => {
                            e.insert(v);
                        }
                        btree_map::Entry::Occupied(mut e) => {
                            let s = spec.semiring().expect("fold output implies fold mode");
                            let merged = s.plus(*e.get(), v);
                            e.insert(merged);
                        }
                    }
                }
            }
        }
    }
    let output = match spec.mode {
        JoinMode::Set => JoinOutput::Set(set_out.into_iter().collect()),
        JoinMode::Fold(_) => JoinOutput::Folded(fold_out),
    };
    Ok(JoinRun {
        output,
        iterations,
        counters,
        workload: seed.workload.unwrap_or_default(),
    })
}

/// Records a finished run into the rule metrics under a node id.
pub fn record_run(metrics: &mut RuleMetrics, node: usize, run: &JoinRun, materialized: u64) {
    metrics.inner_loop_iterations += run.iterations;
    metrics.intersections.merge_from(&run.counters);
    let nm = metrics.node_mut(node);
    nm.inner_loop_iterations += run.iterations;
    nm.materialized_tuples += materialized;
    metrics.materialized_tuples += materialized;
}
