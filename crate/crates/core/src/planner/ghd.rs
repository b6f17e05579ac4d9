//! Hypertree decomposition search and plan selection.
//!
//! Candidates come from a recursive decomposition: pick a nonempty root
//! edge set, split the remaining edges into connected components, and
//! attach each component's decompositions as children. The running
//! intersection property is enforced during composition and the chosen
//! plan minimizes, in order: maximum node width, total width, selection
//! depth (maximized, when selections push down), node count, tree depth,
//! and a canonical structural key.

use std::collections::HashMap;

use num_traits::Zero;

use crate::frontend::{AggOp, AggVar, RuleIR};
use crate::storage::Catalog;

use super::cover::{min_fractional_cover, Rat};
use super::hypergraph::{build_hypergraph, Hypergraph};
use super::PlanError;

#[derive(Debug, Clone, Default)]
pub struct PlanOptions {
    /// When false, force the single-node decomposition.
    pub no_ghd: bool,
    /// Disable shared-node elimination.
    pub no_dedup: bool,
    /// Disable selection pushdown across and within nodes.
    pub no_selection_pushdown: bool,
    /// Maximum body size for the decomposition search.
    pub edge_cap: Option<usize>,
}

pub const DEFAULT_EDGE_CAP: usize = 8;

/// An unscored decomposition candidate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSkeleton {
    /// Edge indices in the root's join, sorted.
    pub lambda: Vec<usize>,
    pub children: Vec<TreeSkeleton>,
}

impl TreeSkeleton {
    fn node_count(&self) -> usize {
        1 + self.children.iter().map(|c| c.node_count()).sum::<usize>()
    }

    fn max_depth(&self) -> usize {
        self.children
            .iter()
            .map(|c| c.max_depth() + 1)
            .max()
            .unwrap_or(0)
    }

    fn structural_key(&self) -> String {
        let mut keys: Vec<String> = self.children.iter().map(|c| c.structural_key()).collect();
        keys.sort();
        format!(
            "({}{})",
            self.lambda
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(","),
            keys.concat()
        )
    }
}

fn edge_vars(h: &Hypergraph, edges: &[usize]) -> Vec<usize> {
    let mut vars: Vec<usize> = edges
        .iter()
        .flat_map(|&e| h.edges[e].vars.iter().copied())
        .collect();
    vars.sort_unstable();
    vars.dedup();
    vars
}

fn mask_edges(mask: u64) -> Vec<usize> {
    (0..64).filter(|b| mask & (1 << b) != 0).collect()
}

/// Splits the edges of `mask` into connected components (edges connect
/// when they share a variable).
fn components(h: &Hypergraph, mask: u64) -> Vec<u64> {
    let edges = mask_edges(mask);
    let mut comp = Vec::new();
    let mut assigned = 0u64;
    for &start in &edges {
        if assigned & (1 << start) != 0 {
            continue;
        }
        let mut frontier = vec![start];
        let mut cmask = 0u64;
        while let Some(e) = frontier.pop() {
            if cmask & (1 << e) != 0 {
                continue;
            }
            cmask |= 1 << e;
            for &other in &edges {
                if cmask & (1 << other) == 0
                    && h.edges[e].vars.iter().any(|v| h.edges[other].vars.contains(v))
                {
                    frontier.push(other);
                }
            }
        }
        assigned |= cmask;
        comp.push(cmask);
    }
    comp
}

fn subtree_vars(h: &Hypergraph, t: &TreeSkeleton) -> Vec<usize> {
    let mut vars = edge_vars(h, &t.lambda);
    for c in &t.children {
        vars.extend(subtree_vars(h, c));
    }
    vars.sort_unstable();
    vars.dedup();
    vars
}

fn decompose(h: &Hypergraph, mask: u64, memo: &mut HashMap<u64, Vec<TreeSkeleton>>) -> Vec<TreeSkeleton> {
    if let Some(hit) = memo.get(&mask) {
        return hit.clone();
    }
    let mut out = Vec::new();
    // Every nonempty subset of the remaining edges may serve as a root.
    let mut sub = mask;
    loop {
        if sub != 0 {
            let lambda = mask_edges(sub);
            let lambda_vars = edge_vars(h, &lambda);
            let rest = mask & !sub;
            let mut child_lists: Vec<Vec<TreeSkeleton>> = Vec::new();
            let mut viable = true;
            for cmask in components(h, rest) {
                let candidates: Vec<TreeSkeleton> = decompose(h, cmask, memo)
                    .into_iter()
                    .filter(|t| {
                        // Running intersection at the attachment point:
                        // vars shared between the root and the component
                        // must appear in the component root's own edges.
                        let root_vars = edge_vars(h, &t.lambda);
                        subtree_vars(h, t)
                            .iter()
                            .filter(|v| lambda_vars.contains(v))
                            .all(|v| root_vars.contains(v))
                    })
                    .collect();
                if candidates.is_empty() {
                    viable = false;
                    break;
                }
                child_lists.push(candidates);
            }
            if viable {
                let mut stack: Vec<(usize, Vec<TreeSkeleton>)> = vec![(0, Vec::new())];
                while let Some((i, acc)) = stack.pop() {
                    if i == child_lists.len() {
                        out.push(TreeSkeleton {
                            lambda: lambda.clone(),
                            children: acc,
                        });
                        continue;
                    }
                    for cand in &child_lists[i] {
                        let mut next = acc.clone();
                        next.push(cand.clone());
                        stack.push((i + 1, next));
                    }
                }
            }
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & mask;
    }
    // Remove duplicates under tree isomorphism.
    let mut seen = std::collections::HashSet::new();
    out.retain(|t| seen.insert(t.structural_key()));
    memo.insert(mask, out.clone());
    out
}

/// All decompositions of the rule's hypergraph satisfying the tree
/// properties, including the single-node decomposition.
pub fn enumerate_ghds(h: &Hypergraph) -> Result<Vec<TreeSkeleton>, PlanError> {
    enumerate_with_cap(h, DEFAULT_EDGE_CAP)
}

pub fn enumerate_with_cap(h: &Hypergraph, cap: usize) -> Result<Vec<TreeSkeleton>, PlanError> {
    if h.edges.len() > cap {
        return Err(PlanError::QueryTooLarge {
            edges: h.edges.len(),
            cap,
        });
    }
    let full = if h.edges.is_empty() {
        0
    } else {
        (1u64 << h.edges.len()) - 1
    };
    let mut memo = HashMap::new();
    Ok(decompose(h, full, &mut memo))
}

/// Checks the three decomposition properties over a skeleton: every edge
/// is assigned with its variables present, variable occurrences form
/// connected subtrees, and node variables come from node edges.
pub fn ghd_properties_hold(h: &Hypergraph, tree: &TreeSkeleton) -> bool {
    // Flatten with parent links.
    let mut nodes: Vec<(Vec<usize>, Option<usize>)> = Vec::new();
    fn flatten(
        t: &TreeSkeleton,
        parent: Option<usize>,
        nodes: &mut Vec<(Vec<usize>, Option<usize>)>,
    ) {
        let id = nodes.len();
        nodes.push((t.lambda.clone(), parent));
        for c in &t.children {
            flatten(c, Some(id), nodes);
        }
    }
    flatten(tree, None, &mut nodes);

    let chi: Vec<Vec<usize>> = nodes.iter().map(|(l, _)| edge_vars(h, l)).collect();
    // Property 1: every edge in some node's lambda with vars inside chi.
    for e in 0..h.edges.len() {
        let ok = nodes.iter().enumerate().any(|(i, (l, _))| {
            l.contains(&e) && h.edges[e].vars.iter().all(|v| chi[i].contains(v))
        });
        if !ok {
            return false;
        }
    }
    // Property 3 holds by construction (chi is the union of lambda vars).
    // Property 2: occurrences of each variable form a connected subtree.
    for &v in &h.vertices {
        let holders: Vec<usize> = (0..nodes.len()).filter(|&i| chi[i].contains(&v)).collect();
        if holders.is_empty() {
            return false;
        }
        // Climb from each holder to the root, stopping at another holder;
        // all but the top holder must reach one.
        let top = *holders.iter().min().unwrap();
        for &start in &holders {
            if start == top {
                continue;
            }
            let mut cur = nodes[start].1;
            let mut connected = false;
            while let Some(p) = cur {
                if chi[p].contains(&v) {
                    connected = true;
                    break;
                }
                cur = nodes[p].1;
            }
            if !connected {
                return false;
            }
        }
    }
    true
}

/// One node of a finished plan.
#[derive(Debug, Clone)]
pub struct GhdNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Atom indices joined at this node, sorted.
    pub lambda: Vec<usize>,
    /// Variable indices covered, sorted.
    pub chi: Vec<usize>,
    pub width: Rat,
    pub depth: usize,
    /// Variables materialized at this node, in global attribute order.
    pub output_vars: Vec<usize>,
    /// Atoms whose annotations this node folds (each atom has one owner).
    pub annotation_owners: Vec<usize>,
    /// When set, this node's result is read from the named node instead
    /// of being evaluated.
    pub dedup_source: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct GhdPlan {
    /// Nodes in pre-order; node 0 is the root.
    pub nodes: Vec<GhdNode>,
    pub fhw: Rat,
    /// Global attribute order over variable indices.
    pub attr_order: Vec<usize>,
    /// Head variables (plus a distinct-counted variable, when present), in
    /// output order.
    pub head_vars: Vec<usize>,
    pub topdown_needed: bool,
    pub has_selections: bool,
}

impl GhdPlan {
    pub fn root(&self) -> &GhdNode {
        &self.nodes[0]
    }

    /// Bottom-up evaluation order: children before parents.
    pub fn bottom_up_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by_key(|&i| std::cmp::Reverse(self.nodes[i].depth));
        order
    }

    pub fn selection_depth(&self, rule: &RuleIR) -> usize {
        self.nodes
            .iter()
            .flat_map(|n| {
                n.lambda
                    .iter()
                    .filter(|&&a| rule.atoms[a].has_selection())
                    .map(move |_| n.depth)
            })
            .sum()
    }
}

struct WidthCache {
    cache: HashMap<(u64, u64), Rat>,
}

impl WidthCache {
    fn width(
        &mut self,
        h: &Hypergraph,
        lambda: &[usize],
        cover: &[usize],
    ) -> Result<Rat, PlanError> {
        let lmask = lambda.iter().fold(0u64, |m, &e| m | (1 << e));
        let cmask = cover.iter().fold(0u64, |m, &v| m | (1 << v));
        if let Some(w) = self.cache.get(&(lmask, cmask)) {
            return Ok(*w);
        }
        let edges: Vec<Vec<usize>> = lambda.iter().map(|&e| h.edges[e].vars.clone()).collect();
        let (w, _) = min_fractional_cover(&edges, cover)?;
        self.cache.insert((lmask, cmask), w);
        Ok(w)
    }
}

/// The effective output variables of a rule: head keys, plus the counted
/// variable of a `COUNT(v)` aggregate, which evaluates as a distinct
/// projection before counting.
pub fn effective_head_vars(rule: &RuleIR) -> Vec<usize> {
    let mut vars: Vec<usize> = rule
        .head_keys
        .iter()
        .map(|k| rule.var_index(k).expect("validated"))
        .collect();
    if let Some((AggOp::Count, AggVar::Var(v))) = &rule.aggregate {
        let idx = rule.var_index(v).expect("validated");
        if !vars.contains(&idx) {
            vars.push(idx);
        }
    }
    vars
}

fn fold_semantics(rule: &RuleIR) -> bool {
    matches!(
        rule.aggregate,
        Some((AggOp::Sum | AggOp::Min | AggOp::Max, _)) | Some((AggOp::Count, AggVar::Star))
    )
}

fn score_tree(
    h: &Hypergraph,
    tree: &TreeSkeleton,
    excluded: &[usize],
    cache: &mut WidthCache,
) -> Result<(Vec<Rat>, Rat), PlanError> {
    fn visit(
        h: &Hypergraph,
        t: &TreeSkeleton,
        excluded: &[usize],
        cache: &mut WidthCache,
        widths: &mut Vec<Rat>,
    ) -> Result<(), PlanError> {
        let chi = edge_vars(h, &t.lambda);
        let cover: Vec<usize> = chi.iter().copied().filter(|v| !excluded.contains(v)).collect();
        widths.push(cache.width(h, &t.lambda, &cover)?);
        for c in &t.children {
            visit(h, c, excluded, cache, widths)?;
        }
        Ok(())
    }
    let mut widths = Vec::new();
    visit(h, tree, excluded, cache, &mut widths)?;
    let fhw = widths.iter().copied().max().unwrap_or_else(Rat::zero);
    Ok((widths, fhw))
}

fn tree_selection_depth(h: &Hypergraph, t: &TreeSkeleton, depth: usize) -> usize {
    let own: usize = t
        .lambda
        .iter()
        .filter(|&&e| h.edges[e].has_selection)
        .map(|_| depth)
        .sum();
    own + t
        .children
        .iter()
        .map(|c| tree_selection_depth(h, c, depth + 1))
        .sum::<usize>()
}

/// Chooses the best decomposition for a rule and finishes it into a plan.
pub fn plan_rule(rule: &RuleIR, catalog: &Catalog, opts: &PlanOptions) -> Result<GhdPlan, PlanError> {
    let h = build_hypergraph(rule);
    let cap = opts.edge_cap.unwrap_or(DEFAULT_EDGE_CAP);
    let head_vars = effective_head_vars(rule);
    let pushdown = h.has_selections() && !opts.no_selection_pushdown;
    let excluded: Vec<usize> = if pushdown { h.selected_vars() } else { Vec::new() };

    let all_edges: Vec<usize> = (0..h.edges.len()).collect();
    let single_node = TreeSkeleton {
        lambda: all_edges.clone(),
        children: Vec::new(),
    };

    let mut cache = WidthCache { cache: HashMap::new() };
    let chosen: TreeSkeleton = if opts.no_ghd {
        single_node
    } else if h.has_selections() && opts.no_selection_pushdown {
        // Selections forced into a dedicated root: the remaining edges
        // evaluate below it, unfiltered, and the selection applies last.
        let sel_edges: Vec<usize> = (0..h.edges.len())
            .filter(|&e| h.edges[e].has_selection)
            .collect();
        let rest: Vec<usize> = (0..h.edges.len())
            .filter(|&e| !h.edges[e].has_selection)
            .collect();
        if rest.is_empty() {
            single_node
        } else {
            let sub = Hypergraph {
                vertices: edge_vars(&h, &rest),
                edges: rest.iter().map(|&e| h.edges[e].clone()).collect(),
            };
            let renumber: Vec<usize> = rest.clone();
            let sub_candidates = enumerate_with_cap(&sub, cap)?;
            let best = pick_best(&sub, sub_candidates, &[], false, &mut WidthCache {
                cache: HashMap::new(),
            })?;
            fn renumber_tree(t: &TreeSkeleton, map: &[usize]) -> TreeSkeleton {
                TreeSkeleton {
                    lambda: t.lambda.iter().map(|&e| map[e]).collect(),
                    children: t.children.iter().map(|c| renumber_tree(c, map)).collect(),
                }
            }
            TreeSkeleton {
                lambda: sel_edges,
                children: vec![renumber_tree(&best, &renumber)],
            }
        }
    } else {
        let mut candidates = enumerate_with_cap(&h, cap)?;
        // Keyed fold aggregates need their keys at the root.
        if fold_semantics(rule) && !head_vars.is_empty() {
            candidates.retain(|t| {
                let chi = edge_vars(&h, &t.lambda);
                head_vars.iter().all(|v| chi.contains(v))
            });
            if candidates.is_empty() {
                candidates.push(single_node.clone());
            }
        }
        pick_best(&h, candidates, &excluded, pushdown, &mut cache)?
    };

    let (widths, fhw) = score_tree(&h, &chosen, &excluded, &mut cache)?;
    let mut plan = flatten_plan(&h, &chosen, widths, fhw, rule, &head_vars);
    if pushdown {
        duplicate_selections(&h, rule, &mut plan);
    }
    assign_annotation_owners(rule, &mut plan);
    compute_attr_order(rule, &mut plan, pushdown);
    plan.topdown_needed = head_vars.iter().any(|v| !plan.nodes[0].chi.contains(v));
    compute_outputs(&mut plan, &head_vars);
    if !opts.no_dedup {
        dedup_nodes(rule, catalog, &mut plan);
    }
    Ok(plan)
}

fn pick_best(
    h: &Hypergraph,
    candidates: Vec<TreeSkeleton>,
    excluded: &[usize],
    pushdown: bool,
    cache: &mut WidthCache,
) -> Result<TreeSkeleton, PlanError> {
    let mut best: Option<(
        (Rat, Rat, i64, usize, usize, String),
        TreeSkeleton,
    )> = None;
    for tree in candidates {
        let (widths, fhw) = score_tree(h, &tree, excluded, cache)?;
        let total: Rat = widths.iter().copied().sum();
        let sel_depth = if pushdown {
            -(tree_selection_depth(h, &tree, 0) as i64)
        } else {
            0
        };
        let key = (
            fhw,
            total,
            sel_depth,
            tree.node_count(),
            tree.max_depth(),
            tree.structural_key(),
        );
        match &best {
            Some((k, _)) if *k <= key => {}
            _ => best = Some((key, tree)),
        }
    }
    best.map(|(_, t)| t).ok_or(PlanError::NoCandidates)
}

fn flatten_plan(
    h: &Hypergraph,
    tree: &TreeSkeleton,
    widths: Vec<Rat>,
    fhw: Rat,
    rule: &RuleIR,
    head_vars: &[usize],
) -> GhdPlan {
    let mut nodes: Vec<GhdNode> = Vec::new();
    fn flatten(
        h: &Hypergraph,
        t: &TreeSkeleton,
        parent: Option<usize>,
        depth: usize,
        widths: &[Rat],
        cursor: &mut usize,
        nodes: &mut Vec<GhdNode>,
    ) -> usize {
        let id = nodes.len();
        let width = widths[*cursor];
        *cursor += 1;
        nodes.push(GhdNode {
            id,
            parent,
            children: Vec::new(),
            lambda: t.lambda.clone(),
            chi: edge_vars(h, &t.lambda),
            width,
            depth,
            output_vars: Vec::new(),
            annotation_owners: Vec::new(),
            dedup_source: None,
        });
        for c in &t.children {
            let cid = flatten(h, c, Some(id), depth + 1, widths, cursor, nodes);
            nodes[id].children.push(cid);
        }
        id
    }
    let mut cursor = 0;
    flatten(h, tree, None, 0, &widths, &mut cursor, &mut nodes);
    GhdPlan {
        nodes,
        fhw,
        attr_order: Vec::new(),
        head_vars: head_vars.to_vec(),
        topdown_needed: false,
        has_selections: rule.atoms.iter().any(|a| a.has_selection()),
    }
}

/// Adds each selection atom to every node whose variables cover it, so the
/// constant filters candidate sets as early as possible.
fn duplicate_selections(h: &Hypergraph, rule: &RuleIR, plan: &mut GhdPlan) {
    for (e, edge) in h.edges.iter().enumerate() {
        if !rule.atoms[edge.atom].has_selection() {
            continue;
        }
        for node in &mut plan.nodes {
            if !node.lambda.contains(&e) && edge.vars.iter().all(|v| node.chi.contains(v)) {
                node.lambda.push(e);
                node.lambda.sort_unstable();
            }
        }
    }
}

/// Every atom folds its annotation in exactly one node: the deepest node
/// listing it, ties to the smaller id.
fn assign_annotation_owners(rule: &RuleIR, plan: &mut GhdPlan) {
    for atom in 0..rule.atoms.len() {
        let owner = plan
            .nodes
            .iter()
            .filter(|n| n.lambda.contains(&atom))
            .max_by_key(|n| (n.depth, std::cmp::Reverse(n.id)))
            .map(|n| n.id);
        if let Some(id) = owner {
            plan.nodes[id].annotation_owners.push(atom);
        }
    }
}

/// Pre-order walk appending each node's unseen attributes; within a node,
/// selected attributes come first, then first occurrence over the atoms.
fn compute_attr_order(rule: &RuleIR, plan: &mut GhdPlan, selected_first: bool) {
    let selected: Vec<usize> = if selected_first {
        build_hypergraph(rule).selected_vars()
    } else {
        Vec::new()
    };
    let mut order: Vec<usize> = Vec::new();
    let mut stack = vec![0usize];
    let mut visit: Vec<usize> = Vec::new();
    while let Some(id) = stack.pop() {
        visit.push(id);
        for &c in plan.nodes[id].children.iter().rev() {
            stack.push(c);
        }
    }
    for id in visit {
        let node = &plan.nodes[id];
        let mut local: Vec<usize> = Vec::new();
        for &atom in &node.lambda {
            for idx in rule.atoms[atom].var_indices() {
                if node.chi.contains(&idx) && !local.contains(&idx) {
                    local.push(idx);
                }
            }
        }
        local.sort_by_key(|v| !selected.contains(v));
        for v in local {
            if !order.contains(&v) {
                order.push(v);
            }
        }
    }
    plan.attr_order = order;
}

/// Decides what each node materializes. Without a top-down pass, the root
/// keeps exactly the head variables and every other node keeps only what
/// it shares with its parent; the rest fold away or reduce to existence
/// checks. With a top-down pass, nodes also retain head variables and
/// child-shared variables so the output can be reassembled.
fn compute_outputs(plan: &mut GhdPlan, head_vars: &[usize]) {
    let nodes = plan.nodes.clone();
    let topdown = plan.topdown_needed;
    for node in &mut plan.nodes {
        let mut out: Vec<usize> = Vec::new();
        if node.parent.is_none() && !topdown {
            out = head_vars.to_vec();
        } else {
            for &v in &node.chi {
                let in_head = head_vars.contains(&v);
                let in_parent = node
                    .parent
                    .map(|p| nodes[p].chi.contains(&v))
                    .unwrap_or(false);
                let in_child = node.children.iter().any(|&c| nodes[c].chi.contains(&v));
                let keep = if topdown {
                    in_head || in_parent || in_child
                } else {
                    in_parent
                };
                if keep {
                    out.push(v);
                }
            }
        }
        out.sort_by_key(|v| plan.attr_order.iter().position(|x| x == v));
        node.output_vars = out;
    }
}

/// Canonical signature of a node's computation, invariant under variable
/// renaming and atom permutation, used to share identical subtree results.
fn node_signature(rule: &RuleIR, catalog: &Catalog, plan: &GhdPlan, id: usize) -> Option<String> {
    let node = &plan.nodes[id];
    if node.lambda.len() > 7 {
        return None;
    }
    let mut child_sigs: Vec<String> = Vec::new();
    for &c in &node.children {
        child_sigs.push(node_signature(rule, catalog, plan, c)?);
    }
    child_sigs.sort();

    // Atom descriptors: data identity (or name for intensional relations)
    // plus term shape.
    let atoms: Vec<(String, &crate::frontend::AtomIR)> = node
        .lambda
        .iter()
        .map(|&a| {
            let atom = &rule.atoms[a];
            let data_id = match catalog.get(&atom.relation) {
                Some(rel) => format!("d{:p}", std::sync::Arc::as_ptr(&rel.data)),
                None => format!("n{}", atom.relation),
            };
            (data_id, atom)
        })
        .collect();

    // Smallest serialization over atom permutations, renaming variables by
    // first occurrence.
    let mut perm: Vec<usize> = (0..atoms.len()).collect();
    let mut best: Option<String> = None;
    permute(&mut perm, 0, &mut |p| {
        let mut rename: HashMap<usize, usize> = HashMap::new();
        let mut parts: Vec<String> = Vec::new();
        for &i in p {
            let (data_id, atom) = &atoms[i];
            let mut term_s = String::new();
            for t in &atom.terms {
                match t {
                    crate::frontend::TermIR::Var(v) => {
                        let next = rename.len();
                        let r = *rename.entry(*v).or_insert(next);
                        term_s.push_str(&format!("v{r},"));
                    }
                    crate::frontend::TermIR::Const { raw, .. } => {
                        term_s.push_str(&format!("c{raw},"));
                    }
                }
            }
            parts.push(format!("{data_id}({term_s})"));
        }
        // Output variables under the same renaming; unseen output vars
        // make the signature unusable for sharing.
        let mut out_s = String::new();
        let mut ok = true;
        for v in &plan.nodes[id].output_vars {
            match rename.get(v) {
                Some(r) => out_s.push_str(&format!("o{r},")),
                None => ok = false,
            }
        }
        if ok {
            let sig = format!("{}|{}|{}", parts.join(";"), out_s, child_sigs.concat());
            if best.as_ref().is_none_or(|b| sig < *b) {
                best = Some(sig);
            }
        }
    });
    best
}

fn permute(perm: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == perm.len() {
        f(perm);
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, f);
        perm.swap(k, i);
    }
}

/// Links nodes with identical computations: same join pattern over the
/// same stored data, same outputs, identical subtrees.
pub fn dedup_nodes(rule: &RuleIR, catalog: &Catalog, plan: &mut GhdPlan) {
    let ids: Vec<usize> = plan.bottom_up_order();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for id in ids {
        if let Some(sig) = node_signature(rule, catalog, plan, id) {
            match seen.get(&sig) {
                Some(&source) if source != id => {
                    plan.nodes[id].dedup_source = Some(source);
                }
                _ => {
                    seen.insert(sig, id);
                }
            }
        }
    }
}
