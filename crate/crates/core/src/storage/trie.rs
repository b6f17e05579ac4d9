//! Multi-level sorted-set tries over dictionary-encoded relations.
//!
//! Level `d` holds one set of children per distinct prefix of length `d`.
//! The element at position `p` of set `s` on level `d` owns the child set
//! `child_base[s] + p` on level `d + 1`. Leaf-level sets optionally carry
//! an annotation value per element.

use crate::setkernel::{materialize_set, Granularity, SetView};

use super::StorageError;

#[derive(Debug, Clone)]
struct Level {
    sets: Vec<SetView>,
    /// Prefix sums of set cardinalities; maps (set, position) to the index
    /// of the child set on the next level.
    child_base: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Trie {
    arity: usize,
    levels: Vec<Level>,
    tuple_count: usize,
}

static EMPTY_SET: SetView = SetView::empty();

impl Trie {
    pub fn arity(&self) -> usize {
        self.arity
    }

    /// Number of distinct tuples stored.
    pub fn len(&self) -> usize {
        self.tuple_count
    }

    pub fn is_empty(&self) -> bool {
        self.tuple_count == 0
    }

    /// The set of children of a tuple prefix; empty when the prefix is
    /// absent. The empty prefix yields the root set.
    pub fn lookup(&self, prefix: &[u32]) -> &SetView {
        assert!(prefix.len() < self.arity, "prefix must be shorter than the trie");
        match self.set_index(prefix) {
            Some(idx) => &self.levels[prefix.len()].sets[idx],
            None => &EMPTY_SET,
        }
    }

    fn set_index(&self, prefix: &[u32]) -> Option<usize> {
        if self.tuple_count == 0 {
            return None;
        }
        let mut idx = 0usize;
        for (depth, &value) in prefix.iter().enumerate() {
            let level = &self.levels[depth];
            let pos = level.sets[idx].rank(value)?;
            idx = level.child_base[idx] + pos;
        }
        Some(idx)
    }

    /// Walks every stored tuple in lexicographic order.
    pub fn for_each_tuple(&self, mut f: impl FnMut(&[u32], Option<f64>)) {
        if self.tuple_count == 0 {
            return;
        }
        let mut tuple = vec![0u32; self.arity];
        self.walk(0, 0, &mut tuple, &mut f);
    }

    fn walk(
        &self,
        depth: usize,
        set_idx: usize,
        tuple: &mut Vec<u32>,
        f: &mut impl FnMut(&[u32], Option<f64>),
    ) {
        let level = &self.levels[depth];
        let set = &level.sets[set_idx];
        for (pos, value) in set.iter().enumerate() {
            tuple[depth] = value;
            if depth + 1 == self.arity {
                let annot = set.assoc.as_ref().map(|_| set.assoc_lookup(value).unwrap());
                f(tuple, annot);
            } else {
                self.walk(depth + 1, level.child_base[set_idx] + pos, tuple, f);
            }
        }
    }

    pub fn tuples(&self) -> Vec<(Vec<u32>, Option<f64>)> {
        let mut out = Vec::with_capacity(self.tuple_count);
        self.for_each_tuple(|t, a| out.push((t.to_vec(), a)));
        out
    }

    /// Direct access to a level's set by index, for incremental descent.
    pub fn level_set(&self, level: usize, idx: usize) -> &SetView {
        if self.tuple_count == 0 {
            return &EMPTY_SET;
        }
        &self.levels[level].sets[idx]
    }

    /// Child set index of the element at `pos` within a level's set.
    pub fn child_of(&self, level: usize, set_idx: usize, pos: usize) -> usize {
        self.levels[level].child_base[set_idx] + pos
    }

    /// All tuple completions below a prefix. A full-length prefix yields
    /// one empty completion when the tuple is present.
    pub fn complete(&self, prefix: &[u32]) -> Vec<Vec<u32>> {
        assert!(prefix.len() <= self.arity);
        let Some(idx) = self.set_index(prefix) else {
            return Vec::new();
        };
        if prefix.len() == self.arity {
            return vec![Vec::new()];
        }
        let mut out = Vec::new();
        let mut suffix = vec![0u32; self.arity - prefix.len()];
        self.collect_suffixes(prefix.len(), idx, 0, &mut suffix, &mut out);
        out
    }

    fn collect_suffixes(
        &self,
        level: usize,
        set_idx: usize,
        depth: usize,
        suffix: &mut Vec<u32>,
        out: &mut Vec<Vec<u32>>,
    ) {
        let lvl = &self.levels[level];
        for (pos, value) in lvl.sets[set_idx].iter().enumerate() {
            suffix[depth] = value;
            if level + 1 == self.arity {
                out.push(suffix.clone());
            } else {
                self.collect_suffixes(
                    level + 1,
                    lvl.child_base[set_idx] + pos,
                    depth + 1,
                    suffix,
                    out,
                );
            }
        }
    }
}

/// Accumulates tuples for a trie under construction. Single-writer; the
/// finished trie is immutable and freely shared across threads.
#[derive(Debug)]
pub struct TrieBuilder {
    arity: usize,
    granularity: Granularity,
    rows: Vec<u32>,
    annotations: Vec<f64>,
    annotated: bool,
}

impl TrieBuilder {
    pub fn new(arity: usize, granularity: Granularity) -> TrieBuilder {
        assert!(arity >= 1);
        TrieBuilder {
            arity,
            granularity,
            rows: Vec::new(),
            annotations: Vec::new(),
            annotated: false,
        }
    }

    pub fn push(&mut self, tuple: &[u32], annotation: Option<f64>) {
        debug_assert_eq!(tuple.len(), self.arity);
        debug_assert!(self.rows.is_empty() || self.annotated == annotation.is_some());
        self.rows.extend_from_slice(tuple);
        if let Some(a) = annotation {
            self.annotated = true;
            self.annotations.push(a);
        }
    }

    /// Appends the elements of `xs` as children of `prefix`. `xs` must be
    /// strictly sorted; annotations of `xs` are carried to the leaf when
    /// the prefix completes tuples.
    pub fn append(&mut self, prefix: &[u32], xs: &SetView) -> Result<(), StorageError> {
        let ids = xs.decode();
        self.append_slice(prefix, &ids, xs.assoc.as_ref().map(|_| xs))
    }

    pub fn append_sorted(&mut self, prefix: &[u32], ids: &[u32]) -> Result<(), StorageError> {
        self.append_slice(prefix, ids, None)
    }

    fn append_slice(
        &mut self,
        prefix: &[u32],
        ids: &[u32],
        assoc_source: Option<&SetView>,
    ) -> Result<(), StorageError> {
        if prefix.len() + 1 != self.arity {
            return Err(StorageError::BadAppendDepth {
                prefix_len: prefix.len(),
                arity: self.arity,
            });
        }
        if ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(StorageError::OrderViolation);
        }
        for &x in ids {
            let annot = assoc_source.map(|s| s.assoc_lookup(x).unwrap());
            let mut tuple = prefix.to_vec();
            tuple.push(x);
            self.push(&tuple, annot);
        }
        Ok(())
    }

    /// Sorts, deduplicates, and freezes the accumulated tuples.
    pub fn finish(self) -> Result<Trie, StorageError> {
        let arity = self.arity;
        let n = if arity == 0 { 0 } else { self.rows.len() / arity };
        let mut index: Vec<usize> = (0..n).collect();
        let row = |i: usize| &self.rows[i * arity..(i + 1) * arity];
        index.sort_by(|&a, &b| row(a).cmp(row(b)));

        // Deduplicate, rejecting conflicting annotations on equal keys.
        let mut kept: Vec<usize> = Vec::with_capacity(n);
        for &i in &index {
            if let Some(&prev) = kept.last() {
                if row(prev) == row(i) {
                    if self.annotated && self.annotations[prev] != self.annotations[i] {
                        return Err(StorageError::AnnotationConflict {
                            key: row(i).to_vec(),
                        });
                    }
                    continue;
                }
            }
            kept.push(i);
        }

        build_levels(
            arity,
            self.granularity,
            &kept,
            |i| row(i),
            self.annotated.then(|| &self.annotations),
        )
    }
}

fn build_levels<'a>(
    arity: usize,
    granularity: Granularity,
    kept: &[usize],
    row: impl Fn(usize) -> &'a [u32],
    annotations: Option<&Vec<f64>>,
) -> Result<Trie, StorageError> {
    let mut levels = Vec::with_capacity(arity);
    // Ranges of `kept` sharing a common prefix of the current depth.
    let mut groups: Vec<(usize, usize)> = vec![(0, kept.len())];
    for depth in 0..arity {
        let mut sets = Vec::with_capacity(groups.len());
        let mut child_base = Vec::with_capacity(groups.len());
        let mut next_groups = Vec::new();
        let mut children = 0usize;
        for &(lo, hi) in &groups {
            child_base.push(children);
            let mut values = Vec::new();
            let mut annots = Vec::new();
            let mut i = lo;
            while i < hi {
                let v = row(kept[i])[depth];
                let mut j = i;
                while j < hi && row(kept[j])[depth] == v {
                    j += 1;
                }
                values.push(v);
                if depth + 1 == arity {
                    if let Some(a) = annotations {
                        annots.push(a[kept[i]]);
                    }
                } else {
                    next_groups.push((i, j));
                }
                i = j;
            }
            children += values.len();
            let mut set = materialize_set(&values, granularity);
            if depth + 1 == arity && annotations.is_some() {
                set = set.with_assoc(annots);
            }
            sets.push(set);
        }
        levels.push(Level { sets, child_base });
        groups = next_groups;
    }
    if arity > 0 && levels[0].sets.is_empty() {
        levels[0] = Level {
            sets: vec![SetView::empty()],
            child_base: vec![0],
        };
    }
    Ok(Trie {
        arity,
        levels,
        tuple_count: kept.len(),
    })
}

/// Builds a trie from encoded tuples under a column permutation. The
/// optional annotation column rides along to the leaf level.
pub fn build_trie(
    arity: usize,
    tuples: &[u32],
    annotations: Option<&[f64]>,
    attr_order: &[usize],
    granularity: Granularity,
) -> Result<Trie, StorageError> {
    assert_eq!(attr_order.len(), arity);
    let mut builder = TrieBuilder::new(arity, granularity);
    let n = if arity == 0 { 0 } else { tuples.len() / arity };
    let mut permuted = vec![0u32; arity];
    for i in 0..n {
        let row = &tuples[i * arity..(i + 1) * arity];
        for (k, &col) in attr_order.iter().enumerate() {
            permuted[k] = row[col];
        }
        builder.push(&permuted, annotations.map(|a| a[i]));
    }
    builder.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g() -> Granularity {
        Granularity::SetLevel
    }

    #[test]
    fn two_level_structure() {
        let tuples = [1, 5, 1, 7, 2, 5];
        let trie = build_trie(2, &tuples, None, &[0, 1], g()).unwrap();
        assert_eq!(trie.lookup(&[]).decode(), vec![1, 2]);
        assert_eq!(trie.lookup(&[1]).decode(), vec![5, 7]);
        assert_eq!(trie.lookup(&[2]).decode(), vec![5]);
        assert!(trie.lookup(&[9]).is_empty());
    }

    #[test]
    fn reversed_column_order() {
        let tuples = [1, 5, 1, 7, 2, 5];
        let trie = build_trie(2, &tuples, None, &[1, 0], g()).unwrap();
        assert_eq!(trie.lookup(&[]).decode(), vec![5, 7]);
        assert_eq!(trie.lookup(&[5]).decode(), vec![1, 2]);
        assert_eq!(trie.lookup(&[7]).decode(), vec![1]);
    }

    #[test]
    fn deduplicates_tuples() {
        let tuples = [1, 5, 1, 5, 2, 5];
        let trie = build_trie(2, &tuples, None, &[0, 1], g()).unwrap();
        assert_eq!(trie.len(), 2);
    }

    #[test]
    fn annotations_align_with_leaf_sets() {
        // manager -> employee annotated with a rating
        let tuples = [0, 10, 0, 11, 1, 10];
        let ratings = [4.0, 2.0, 5.0];
        let trie = build_trie(2, &tuples, Some(&ratings), &[0, 1], g()).unwrap();
        let children = trie.lookup(&[0]);
        assert_eq!(children.assoc_lookup(10).unwrap(), 4.0);
        assert_eq!(children.assoc_lookup(11).unwrap(), 2.0);
        assert_eq!(trie.lookup(&[1]).assoc_lookup(10).unwrap(), 5.0);
    }

    #[test]
    fn conflicting_annotations_rejected() {
        let tuples = [1, 5, 1, 5];
        let ratings = [1.0, 2.0];
        let err = build_trie(2, &tuples, Some(&ratings), &[0, 1], g()).unwrap_err();
        assert!(matches!(err, StorageError::AnnotationConflict { .. }));
    }

    #[test]
    fn append_then_lookup() {
        let mut b = TrieBuilder::new(2, g());
        b.append_sorted(&[2], &[3, 4]).unwrap();
        b.append_sorted(&[2], &[]).unwrap();
        let trie = b.finish().unwrap();
        assert_eq!(trie.lookup(&[2]).decode(), vec![3, 4]);
    }

    #[test]
    fn append_unsorted_rejected() {
        let mut b = TrieBuilder::new(2, g());
        let err = b.append_sorted(&[2], &[4, 3]).unwrap_err();
        assert!(matches!(err, StorageError::OrderViolation));
    }

    #[test]
    fn round_trip_over_any_column_order() {
        let tuples: Vec<u32> = vec![3, 1, 9, 3, 2, 9, 0, 1, 4, 3, 1, 9];
        for order in [[0usize, 1, 2], [2, 0, 1], [1, 2, 0]] {
            let trie = build_trie(3, &tuples, None, &order, g()).unwrap();
            let mut restored: Vec<Vec<u32>> = trie
                .tuples()
                .into_iter()
                .map(|(t, _)| {
                    let mut orig = vec![0u32; 3];
                    for (k, &col) in order.iter().enumerate() {
                        orig[col] = t[k];
                    }
                    orig
                })
                .collect();
            restored.sort();
            assert_eq!(
                restored,
                vec![vec![0, 1, 4], vec![3, 1, 9], vec![3, 2, 9]],
                "order {order:?}"
            );
        }
    }

    #[test]
    fn empty_relation() {
        let trie = build_trie(2, &[], None, &[0, 1], g()).unwrap();
        assert!(trie.is_empty());
        assert!(trie.lookup(&[]).is_empty());
        assert!(trie.lookup(&[3]).is_empty());
    }
}
