#![allow(dead_code)]

//! Shared test support: seeded graph generators, brute-force oracles, and
//! engine harness helpers. The oracles stay independent of the engine's
//! evaluation path: plain nested loops over edge sets, breadth-first
//! search, dense power iteration, and a separately written dual program
//! for cover bounds.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use triejoin::executor::{execute, ExecOptions, ExecOutcome};
use triejoin::frontend::{parse_program, validate};
use triejoin::setkernel::Granularity;
use triejoin::storage::{Catalog, Dictionary};

// ---------------------------------------------------------------------
// graphs

/// Undirected edge list stored with both directions, over ids `0..n`.
#[derive(Debug, Clone)]
pub struct TestGraph {
    pub n: u32,
    pub edges: Vec<(u32, u32)>,
}

impl TestGraph {
    pub fn from_pairs(n: u32, pairs: &[(u32, u32)]) -> TestGraph {
        let mut edges = Vec::with_capacity(pairs.len() * 2);
        for &(a, b) in pairs {
            edges.push((a, b));
            if a != b {
                edges.push((b, a));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        TestGraph { n, edges }
    }

    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.n as usize];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    pub fn edge_set(&self) -> HashSet<(u32, u32)> {
        self.edges.iter().copied().collect()
    }

    pub fn degree_max_node(&self) -> u32 {
        let adj = self.adjacency();
        (0..self.n).max_by_key(|&v| adj[v as usize].len()).unwrap_or(0)
    }
}

/// Erdos-Renyi-style random graph, undirected, no self loops.
pub fn random_graph(rng: &mut ChaCha8Rng, n: u32, p: f64) -> TestGraph {
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in 0..a {
            if rng.gen_bool(p) {
                pairs.push((a, b));
            }
        }
    }
    TestGraph::from_pairs(n, &pairs)
}

/// Random connected graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: u32, extra: usize) -> TestGraph {
    let mut pairs = Vec::new();
    for v in 1..n {
        let parent = rng.gen_range(0..v);
        pairs.push((v, parent));
    }
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            pairs.push((a.max(b), a.min(b)));
        }
    }
    TestGraph::from_pairs(n, &pairs)
}

/// `m` vertex-disjoint triangles plus one bridge edge between the first
/// two triangles.
pub fn disjoint_triangles_with_bridge(m: u32) -> TestGraph {
    let mut pairs = Vec::new();
    for i in 0..m {
        let base = 3 * i;
        pairs.push((base + 1, base));
        pairs.push((base + 2, base));
        pairs.push((base + 2, base + 1));
    }
    if m >= 2 {
        pairs.push((3, 0));
    }
    TestGraph::from_pairs(3 * m, &pairs)
}

pub fn pruned_clique(n: u32) -> Vec<(u32, u32)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..i {
            edges.push((i, j));
        }
    }
    edges
}

// ---------------------------------------------------------------------
// engine harness

/// Registers directed edge tuples under `Edge` plus aliases, with ids
/// interned in numeric order so decoded values parse back to the same ids.
pub fn catalog_of(edges: &[(u32, u32)], aliases: &[&str], granularity: Granularity) -> Catalog {
    catalog_with_tokens(edges, &[], aliases, granularity)
}

/// Same, with extra leading string edges (for start-marker conventions).
pub fn catalog_with_tokens(
    edges: &[(u32, u32)],
    token_edges: &[(&str, &str)],
    aliases: &[&str],
    granularity: Granularity,
) -> Catalog {
    let mut dict = Dictionary::new();
    let mut tuples = Vec::new();
    for (a, b) in token_edges {
        tuples.push(dict.intern(a).unwrap());
        tuples.push(dict.intern(b).unwrap());
    }
    for &(a, b) in edges {
        tuples.push(dict.intern(&a.to_string()).unwrap());
        tuples.push(dict.intern(&b.to_string()).unwrap());
    }
    let dict = Arc::new(dict);
    let mut catalog = Catalog::new();
    catalog
        .register(
            "Edge",
            2,
            vec![Arc::clone(&dict), dict],
            tuples,
            None,
            None,
            granularity,
        )
        .unwrap();
    for a in aliases {
        catalog.alias(a, "Edge").unwrap();
    }
    catalog
}

pub fn run_program(catalog: &Catalog, text: &str, opts: &ExecOptions) -> ExecOutcome {
    let program = parse_program(text).unwrap_or_else(|e| panic!("parse failed: {e}\n{text}"));
    let ir = validate(&program, catalog).unwrap_or_else(|e| panic!("validate failed: {e}"));
    execute(&ir, catalog, opts).unwrap_or_else(|e| panic!("execution failed: {e}"))
}

/// Decoded result rows of the last rule, parsed back to numeric ids.
pub fn decoded_rows(outcome: &ExecOutcome) -> BTreeSet<Vec<u32>> {
    outcome
        .results
        .last()
        .unwrap()
        .decoded()
        .into_iter()
        .map(|(row, _)| row.iter().map(|s| s.parse().unwrap()).collect())
        .collect()
}

/// Decoded keyed annotation values of the last rule.
pub fn decoded_values(outcome: &ExecOutcome) -> BTreeMap<Vec<u32>, f64> {
    outcome
        .results
        .last()
        .unwrap()
        .decoded()
        .into_iter()
        .map(|(row, v)| {
            (
                row.iter().map(|s| s.parse().unwrap()).collect(),
                v.expect("annotated result"),
            )
        })
        .collect()
}

pub const ALL_ALIASES: &[&str] = &["R", "S", "T", "U", "V", "Q", "P", "R'", "S'", "T'"];

pub const TRIANGLE_Q: &str = "Triangle(x,y,z) :- R(x,y),S(y,z),T(x,z).";
pub const COUNT_TRIANGLE_Q: &str =
    "CountTriangle(;w:long) :- R(x,y),S(y,z),T(x,z); w=<<COUNT(*)>>.";
pub const FOUR_CLIQUE_Q: &str =
    "4Clique(x,y,z,w) :- R(x,y),S(y,z),T(x,z),U(x,w),V(y,w),Q(z,w).";
pub const LOLLIPOP_Q: &str = "Lollipop(x,y,z,w) :- R(x,y),S(y,z),T(x,z),U(x,w).";
pub const BARBELL_Q: &str =
    "Barbell(x,y,z,x',y',z') :- R(x,y),S(y,z),T(x,z),U(x,x'),R'(x',y'),S'(y',z'),T'(x',z').";
pub const COUNT_BARBELL_Q: &str =
    "CountBarbell(;w:long) :- R(x,y),S(y,z),T(x,z),U(x,x'),R'(x',y'),S'(y',z'),T'(x',z'); w=<<COUNT(*)>>.";

pub fn s4_clique_q(node: u32) -> String {
    format!(
        "S4Clique(x,y,z,w) :- R(x,y),S(y,z),T(x,z),U(x,w),V(y,w),Q(z,w),P(x,`{node}').",
    )
}

pub fn sbarbell_q(node: u32) -> String {
    format!(
        "SBarbell(x,y,z,x',y',z') :- R(x,y),S(y,z),T(x,z),U(x,`{node}'),V(`{node}',x'),R'(x',y'),S'(y',z'),T'(x',z').",
    )
}

// ---------------------------------------------------------------------
// nested-loop oracles

pub fn triangles_oracle(g: &TestGraph) -> BTreeSet<Vec<u32>> {
    let has = g.edge_set();
    let adj = g.adjacency();
    let mut out = BTreeSet::new();
    for &(x, y) in &g.edges {
        for &z in &adj[y as usize] {
            if has.contains(&(x, z)) {
                out.insert(vec![x, y, z]);
            }
        }
    }
    out
}

pub fn four_cliques_oracle(g: &TestGraph) -> BTreeSet<Vec<u32>> {
    let has = g.edge_set();
    let adj = g.adjacency();
    let mut out = BTreeSet::new();
    for &(x, y) in &g.edges {
        for &z in &adj[y as usize] {
            if !has.contains(&(x, z)) {
                continue;
            }
            for &w in &adj[x as usize] {
                if has.contains(&(y, w)) && has.contains(&(z, w)) {
                    out.insert(vec![x, y, z, w]);
                }
            }
        }
    }
    out
}

pub fn lollipop_oracle(g: &TestGraph) -> BTreeSet<Vec<u32>> {
    let adj = g.adjacency();
    let mut out = BTreeSet::new();
    for t in triangles_oracle(g) {
        for &w in &adj[t[0] as usize] {
            out.insert(vec![t[0], t[1], t[2], w]);
        }
    }
    out
}

pub fn barbell_oracle(g: &TestGraph) -> BTreeSet<Vec<u32>> {
    let adj = g.adjacency();
    // ordered triangles grouped by first vertex
    let mut by_first: BTreeMap<u32, Vec<Vec<u32>>> = BTreeMap::new();
    for t in triangles_oracle(g) {
        by_first.entry(t[0]).or_default().push(t);
    }
    let mut out = BTreeSet::new();
    for (x, tris) in &by_first {
        for t in tris {
            for &xp in &adj[*x as usize] {
                if let Some(tris2) = by_first.get(&xp) {
                    for t2 in tris2 {
                        out.insert(vec![t[0], t[1], t[2], t2[0], t2[1], t2[2]]);
                    }
                }
            }
        }
    }
    out
}

pub fn s4_cliques_oracle(g: &TestGraph, node: u32) -> BTreeSet<Vec<u32>> {
    four_cliques_oracle(g)
        .into_iter()
        .filter(|t| {
            // P(x, node) over the edge relation
            g.edge_set().contains(&(t[0], node))
        })
        .collect()
}

pub fn sbarbell_oracle(g: &TestGraph, node: u32) -> BTreeSet<Vec<u32>> {
    let has = g.edge_set();
    let mut by_first: BTreeMap<u32, Vec<Vec<u32>>> = BTreeMap::new();
    for t in triangles_oracle(g) {
        by_first.entry(t[0]).or_default().push(t);
    }
    let mut out = BTreeSet::new();
    for (x, tris) in &by_first {
        if !has.contains(&(*x, node)) {
            continue;
        }
        for (xp, tris2) in &by_first {
            if !has.contains(&(node, *xp)) {
                continue;
            }
            for t in tris {
                for t2 in tris2 {
                    out.insert(vec![t[0], t[1], t[2], t2[0], t2[1], t2[2]]);
                }
            }
        }
    }
    out
}

/// Hop distances plus one, the engine's start convention.
pub fn bfs_distance_oracle(g: &TestGraph, start: u32) -> BTreeMap<u32, u32> {
    let adj = g.adjacency();
    let mut dist = BTreeMap::new();
    let mut queue = std::collections::VecDeque::new();
    dist.insert(start, 1u32);
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        let d = dist[&v];
        for &w in &adj[v as usize] {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(w) {
                e.insert(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Dense power iteration mirroring the three-rule ranking program: nodes
/// are the distinct edge sources, the start vector is uniform, and each
/// round applies `0.15 + 0.85 * sum of neighbor rank over neighbor degree`.
pub fn pagerank_oracle(g: &TestGraph, rounds: usize) -> BTreeMap<u32, f64> {
    let adj = g.adjacency();
    let nodes: Vec<u32> = (0..g.n).filter(|&v| !adj[v as usize].is_empty()).collect();
    let n = nodes.len() as f64;
    let mut rank: BTreeMap<u32, f64> = nodes.iter().map(|&v| (v, 1.0 / n)).collect();
    for _ in 0..rounds {
        let mut next = BTreeMap::new();
        for &x in &nodes {
            let mut sum = 0.0;
            for &z in &adj[x as usize] {
                sum += rank[&z] / adj[z as usize].len() as f64;
            }
            next.insert(x, 0.15 + 0.85 * sum);
        }
        rank = next;
    }
    rank
}

// ---------------------------------------------------------------------
// exact cover bound oracle (dual route)

pub type Rat = num_rational::Rational64;

/// Maximum fractional vertex packing: dual of the minimum edge cover.
/// Solved by enumerating basic solutions of the dual polytope, written
/// independently of the planner's primal enumeration.
pub fn max_fractional_packing(edges: &[Vec<usize>], vertices: &[usize]) -> Option<Rat> {
    use num_traits::{One, Zero};
    let n = vertices.len();
    if n == 0 {
        return Some(Rat::zero());
    }
    let m = edges.len();
    // Constraints: for each edge, sum of member vertex weights <= 1; plus
    // nonnegativity. A maximum lies at a vertex with n active constraints.
    let coeff = |c: usize, j: usize| -> Rat {
        if c < m {
            if edges[c].contains(&vertices[j]) {
                Rat::one()
            } else {
                Rat::zero()
            }
        } else if c - m == j {
            Rat::one()
        } else {
            Rat::zero()
        }
    };
    let rhs = |c: usize| -> Rat {
        if c < m {
            Rat::one()
        } else {
            Rat::zero()
        }
    };
    let total = m + n;
    let mut best: Option<Rat> = None;
    let mut combo: Vec<usize> = (0..n).collect();
    loop {
        // Solve the active system by elimination.
        let mut a: Vec<Vec<Rat>> = combo
            .iter()
            .map(|&c| (0..n).map(|j| coeff(c, j)).collect())
            .collect();
        let mut b: Vec<Rat> = combo.iter().map(|&c| rhs(c)).collect();
        if let Some(y) = gauss(&mut a, &mut b) {
            let feasible = y.iter().all(|v| *v >= Rat::zero())
                && (0..m).all(|c| (0..n).map(|j| coeff(c, j) * y[j]).sum::<Rat>() <= Rat::one());
            if feasible {
                let objective: Rat = y.iter().sum();
                if best.as_ref().is_none_or(|b| objective > *b) {
                    best = Some(objective);
                }
            }
        }
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if combo[i] != i + total - n {
                combo[i] += 1;
                for k in i + 1..n {
                    combo[k] = combo[k - 1] + 1;
                }
                break;
            }
        }
    }
}

fn gauss(a: &mut [Vec<Rat>], b: &mut [Rat]) -> Option<Vec<Rat>> {
    use num_traits::Zero;
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for j in col..n {
            a[col][j] /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col];
                for j in col..n {
                    let v = a[col][j];
                    a[r][j] -= f * v;
                }
                let v = b[col];
                b[r] -= f * v;
            }
        }
    }
    Some(b.to_vec())
}

// ---------------------------------------------------------------------
// reporting

pub fn report(criterion: &str, ok: bool, detail: &str) {
    let status = if ok { "PASS" } else { "FAIL" };
    println!("acceptance {criterion}: {status}{}{}", if detail.is_empty() { "" } else { " - " }, detail);
}
