//! Intersection kernels and the cardinality-skew dispatcher.
//!
//! Three kernels cover the layout pairs: a uint/uint kernel that switches
//! between a blockwise merge and galloping search on cardinality skew, a
//! bitset/bitset kernel that intersects block offsets and ANDs matching
//! words, and a uint/bitset kernel that masks each uint value to its
//! candidate block and probes. Composite sets decompose blockwise.

use super::view::{
    BitsetData, BlockData, CompositeBlock, Layout, SetData, SetView, DEFAULT_BLOCK_BITS,
};
use serde::{Deserialize, Serialize};

/// Galloping kicks in when `max(|a|,|b|) / min(|a|,|b|)` strictly exceeds
/// this ratio; ties go to the merge kernel.
pub const GALLOP_RATIO: u64 = 32;

const WORD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Algorithm {
    Merge,
    Galloping,
    BitsetAnd,
    UintBitsetProbe,
    Blockwise,
}

/// Work counters for one kernel invocation. `comparisons` counts element
/// comparisons, word ANDs, and membership probes alike.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntersectStats {
    pub algorithm: Algorithm,
    pub comparisons: u64,
    pub output_cardinality: usize,
}

/// Intersects two sets, dispatching on the layout pair.
///
/// The result layout follows the density of the inputs: uint/uint and
/// uint/bitset produce uint, bitset/bitset produces bitset, and composite
/// operands produce composite results.
pub fn intersect(a: &SetView, b: &SetView) -> SetView {
    intersect_with_stats(a, b).0
}

pub fn intersect_with_stats(a: &SetView, b: &SetView) -> (SetView, IntersectStats) {
    match (a.layout(), b.layout()) {
        (Layout::Uint, Layout::Uint) => intersect_uint_uint(a, b),
        (Layout::Bitset, Layout::Bitset) => intersect_bitset_bitset(a, b),
        (Layout::Uint, Layout::Bitset) => intersect_uint_bitset(a, b),
        (Layout::Bitset, Layout::Uint) => intersect_uint_bitset(b, a),
        _ => intersect_composite(a, b),
    }
}

fn uints(v: &SetView) -> &[u32] {
    match &v.data {
        SetData::Uint(ids) => ids,
        _ => panic!("expected uint layout"),
    }
}

fn bitset(v: &SetView) -> &BitsetData {
    match &v.data {
        SetData::Bitset(b) => b,
        _ => panic!("expected bitset layout"),
    }
}

/// uint ∩ uint. Merge by default, galloping past the 32:1 skew ratio.
/// Galloping runs in `O(|small| log |large|)`, preserving the min property.
pub fn intersect_uint_uint(a: &SetView, b: &SetView) -> (SetView, IntersectStats) {
    let (xs, ys) = (uints(a), uints(b));
    let (small, large) = if xs.len() <= ys.len() { (xs, ys) } else { (ys, xs) };
    let mut comparisons = 0u64;
    let (out, algorithm) = if !small.is_empty()
        && large.len() as u64 > GALLOP_RATIO * small.len() as u64
    {
        (gallop_intersect(small, large, &mut comparisons), Algorithm::Galloping)
    } else {
        (merge_intersect(small, large, &mut comparisons), Algorithm::Merge)
    };
    let stats = IntersectStats {
        algorithm,
        comparisons,
        output_cardinality: out.len(),
    };
    (SetView::from_sorted(out), stats)
}

fn merge_intersect(xs: &[u32], ys: &[u32], comparisons: &mut u64) -> Vec<u32> {
    let mut out = Vec::with_capacity(xs.len().min(ys.len()));
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        *comparisons += 1;
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(xs[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Exponential search for each element of the smaller set, resuming from a
/// moving lower bound in the larger set.
fn gallop_intersect(small: &[u32], large: &[u32], comparisons: &mut u64) -> Vec<u32> {
    let mut out = Vec::with_capacity(small.len());
    let mut lo = 0usize;
    for &x in small {
        if lo >= large.len() {
            break;
        }
        let mut step = 1usize;
        let mut hi = lo;
        loop {
            *comparisons += 1;
            if large[hi] >= x {
                break;
            }
            hi = lo + step;
            step <<= 1;
            if hi >= large.len() {
                hi = large.len() - 1;
                *comparisons += 1;
                if large[hi] < x {
                    lo = large.len();
                }
                break;
            }
        }
        if lo >= large.len() {
            break;
        }
        // Binary search in (previous bracket, hi].
        let mut left = if hi == lo { lo } else { lo + (step >> 2) };
        let mut right = hi;
        while left < right {
            *comparisons += 1;
            let mid = (left + right) / 2;
            if large[mid] < x {
                left = mid + 1;
            } else {
                right = mid;
            }
        }
        *comparisons += 1;
        if left < large.len() && large[left] == x {
            out.push(x);
            lo = left + 1;
        } else {
            lo = left;
        }
    }
    out
}

/// Rebuilds a bitset at a finer block size so both operands share block
/// boundaries. Power-of-two alignment makes this a word-level regrouping.
fn normalize_block_bits(b: &BitsetData, target_bits: u32) -> BitsetData {
    if b.block_bits == target_bits {
        return b.clone();
    }
    debug_assert!(target_bits < b.block_bits);
    let wpb_target = (target_bits / WORD_BITS) as usize;
    let words_per_source = b.words_per_block();
    let sub_per_block = (b.block_bits / target_bits) as usize;
    let mut offsets = Vec::new();
    let mut ranks = Vec::new();
    let mut words = Vec::new();
    let mut seen = 0u32;
    for (i, &off) in b.offsets.iter().enumerate() {
        let src = &b.words[i * words_per_source..(i + 1) * words_per_source];
        for sub in 0..sub_per_block {
            let chunk = &src[sub * wpb_target..(sub + 1) * wpb_target];
            if chunk.iter().any(|&w| w != 0) {
                offsets.push(off * sub_per_block as u32 + sub as u32);
                ranks.push(seen);
                words.extend_from_slice(chunk);
                seen += chunk.iter().map(|w| w.count_ones()).sum::<u32>();
            }
        }
    }
    BitsetData {
        block_bits: target_bits,
        offsets,
        ranks,
        words,
        cardinality: seen,
    }
}

/// bitset ∩ bitset: intersect the offset arrays with the uint kernel, then
/// AND matching blocks word by word. Empty result blocks are dropped.
pub fn intersect_bitset_bitset(a: &SetView, b: &SetView) -> (SetView, IntersectStats) {
    let (ba, bb) = (bitset(a), bitset(b));
    let target = ba.block_bits.min(bb.block_bits);
    let na;
    let nb;
    let (ba, bb) = {
        na = normalize_block_bits(ba, target);
        nb = normalize_block_bits(bb, target);
        (&na, &nb)
    };
    let (oa, ob) = (
        SetView::from_sorted(ba.offsets.clone()),
        SetView::from_sorted(bb.offsets.clone()),
    );
    let (common, offset_stats) = intersect_uint_uint(&oa, &ob);
    let mut comparisons = offset_stats.comparisons;

    let wpb = (target / WORD_BITS) as usize;
    let mut offsets = Vec::new();
    let mut ranks = Vec::new();
    let mut words = Vec::new();
    let mut seen = 0u32;
    for off in common.iter() {
        let ia = ba.offsets.binary_search(&off).unwrap();
        let ib = bb.offsets.binary_search(&off).unwrap();
        let wa = ba.block_words(ia);
        let wb = bb.block_words(ib);
        let mut block = vec![0u64; wpb];
        let mut any = false;
        for k in 0..wpb {
            comparisons += 1;
            block[k] = wa[k] & wb[k];
            any |= block[k] != 0;
        }
        if any {
            offsets.push(off);
            ranks.push(seen);
            seen += block.iter().map(|w| w.count_ones()).sum::<u32>();
            words.extend_from_slice(&block);
        }
    }
    let out = SetView {
        data: SetData::Bitset(BitsetData {
            block_bits: target,
            offsets,
            ranks,
            words,
            cardinality: seen,
        }),
        assoc: None,
    };
    let stats = IntersectStats {
        algorithm: Algorithm::BitsetAnd,
        comparisons,
        output_cardinality: seen as usize,
    };
    (out, stats)
}

/// uint ∩ bitset: mask each uint value to its candidate block, probe the
/// block for membership. The result is always uint, as the intersection is
/// at most as dense as the sparser operand.
pub fn intersect_uint_bitset(a: &SetView, b: &SetView) -> (SetView, IntersectStats) {
    let xs = uints(a);
    let bs = bitset(b);
    let shift = bs.block_bits.trailing_zeros();
    let mut comparisons = 0u64;
    let mut out = Vec::new();
    // Walk values and offsets together; gallop whichever side lags badly.
    let mut oi = 0usize;
    let mut vi = 0usize;
    while vi < xs.len() && oi < bs.offsets.len() {
        let block = xs[vi] >> shift;
        comparisons += 1;
        if bs.offsets[oi] < block {
            oi += advance(&bs.offsets[oi..], block, &mut comparisons);
        } else if bs.offsets[oi] > block {
            let target = bs.offsets[oi] << shift;
            vi += advance(&xs[vi..], target, &mut comparisons);
        } else {
            let within = xs[vi] & (bs.block_bits - 1);
            let word = bs.block_words(oi)[(within / WORD_BITS) as usize];
            comparisons += 1;
            if word & (1u64 << (within % WORD_BITS)) != 0 {
                out.push(xs[vi]);
            }
            vi += 1;
        }
    }
    let stats = IntersectStats {
        algorithm: Algorithm::UintBitsetProbe,
        comparisons,
        output_cardinality: out.len(),
    };
    (SetView::from_sorted(out), stats)
}

/// First index in `xs` whose value is >= `target`, by exponential search.
fn advance(xs: &[u32], target: u32, comparisons: &mut u64) -> usize {
    let mut step = 1usize;
    let mut hi = 0usize;
    while hi < xs.len() {
        *comparisons += 1;
        if xs[hi] >= target {
            break;
        }
        hi += step;
        step <<= 1;
    }
    let mut left = hi.saturating_sub(step >> 1).max(0);
    let mut right = hi.min(xs.len());
    while left < right {
        *comparisons += 1;
        let mid = (left + right) / 2;
        if xs[mid] < target {
            left = mid + 1;
        } else {
            right = mid;
        }
    }
    left.max(1)
}

/// Per-block view of any layout, sliced on `block_bits` boundaries.
fn composite_chunks(v: &SetView, block_bits: u32) -> Vec<CompositeBlock> {
    match &v.data {
        SetData::Composite {
            block_bits: bb,
            blocks,
            ..
        } if *bb == block_bits => blocks.clone(),
        _ => {
            let ids = v.decode();
            let mut out = Vec::new();
            let mut rank = 0u32;
            let mut i = 0;
            while i < ids.len() {
                let index = ids[i] / block_bits;
                let mut j = i;
                while j < ids.len() && ids[j] / block_bits == index {
                    j += 1;
                }
                out.push(CompositeBlock {
                    index,
                    rank,
                    data: BlockData::Sparse(ids[i..j].to_vec()),
                });
                rank += (j - i) as u32;
                i = j;
            }
            out
        }
    }
}

fn intersect_composite(a: &SetView, b: &SetView) -> (SetView, IntersectStats) {
    let block_bits = match (&a.data, &b.data) {
        (SetData::Composite { block_bits, .. }, _) => *block_bits,
        (_, SetData::Composite { block_bits, .. }) => *block_bits,
        _ => DEFAULT_BLOCK_BITS,
    };
    let ca = composite_chunks(a, block_bits);
    let cb = composite_chunks(b, block_bits);
    let mut comparisons = 0u64;
    let mut blocks = Vec::new();
    let mut rank = 0u32;
    let (mut i, mut j) = (0, 0);
    while i < ca.len() && j < cb.len() {
        comparisons += 1;
        match ca[i].index.cmp(&cb[j].index) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                let (data, work) =
                    intersect_blocks(&ca[i].data, &cb[j].data, ca[i].index, block_bits);
                comparisons += work;
                if data.cardinality() > 0 {
                    let card = data.cardinality() as u32;
                    blocks.push(CompositeBlock {
                        index: ca[i].index,
                        rank,
                        data,
                    });
                    rank += card;
                }
                i += 1;
                j += 1;
            }
        }
    }
    let out = SetView {
        data: SetData::Composite {
            block_bits,
            blocks,
            cardinality: rank,
        },
        assoc: None,
    };
    let stats = IntersectStats {
        algorithm: Algorithm::Blockwise,
        comparisons,
        output_cardinality: rank as usize,
    };
    (out, stats)
}

fn intersect_blocks(a: &BlockData, b: &BlockData, index: u32, block_bits: u32) -> (BlockData, u64) {
    let mut comparisons = 0u64;
    let out = match (a, b) {
        (BlockData::Dense(wa), BlockData::Dense(wb)) => {
            comparisons += wa.len() as u64;
            BlockData::Dense(wa.iter().zip(wb).map(|(x, y)| x & y).collect())
        }
        (BlockData::Sparse(xs), BlockData::Dense(ws)) | (BlockData::Dense(ws), BlockData::Sparse(xs)) => {
            let base = index * block_bits;
            let mut out = Vec::new();
            for &v in xs {
                comparisons += 1;
                let within = v - base;
                if ws[(within / WORD_BITS) as usize] & (1u64 << (within % WORD_BITS)) != 0 {
                    out.push(v);
                }
            }
            BlockData::Sparse(out)
        }
        (BlockData::Sparse(xs), BlockData::Sparse(ys)) => {
            BlockData::Sparse(merge_intersect(xs, ys, &mut comparisons))
        }
    };
    (out, comparisons)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setkernel::view::{materialize_as, materialize_set, Granularity};

    fn uint(ids: &[u32]) -> SetView {
        SetView::from_sorted(ids.to_vec())
    }

    #[test]
    fn merge_small_sets() {
        let (out, stats) = intersect_uint_uint(&uint(&[1, 3, 5, 7]), &uint(&[3, 4, 5]));
        assert_eq!(out.decode(), vec![3, 5]);
        assert_eq!(stats.algorithm, Algorithm::Merge);
    }

    #[test]
    fn dispatch_boundary_is_strict() {
        let small = uint(&[10, 20]);
        let exactly_32: Vec<u32> = (0..64).collect();
        let (_, stats) = intersect_uint_uint(&small, &uint(&exactly_32));
        assert_eq!(stats.algorithm, Algorithm::Merge, "ratio exactly 32 stays merge");

        let beyond: Vec<u32> = (0..65).collect();
        let (_, stats) = intersect_uint_uint(&small, &uint(&beyond));
        assert_eq!(stats.algorithm, Algorithm::Galloping);
    }

    #[test]
    fn empty_intersection() {
        let (out, _) = intersect_uint_uint(&uint(&[]), &uint(&[1, 2, 3]));
        assert!(out.is_empty());
    }

    #[test]
    fn bitset_kernel_basics() {
        let a = materialize_as(&[1, 2, 4], Layout::Bitset);
        let b = materialize_as(&[2, 4, 5], Layout::Bitset);
        let (out, stats) = intersect_bitset_bitset(&a, &b);
        assert_eq!(out.decode(), vec![2, 4]);
        assert_eq!(out.layout(), Layout::Bitset);
        assert_eq!(stats.algorithm, Algorithm::BitsetAnd);

        // Disjoint offsets.
        let c = materialize_as(&[0, 1], Layout::Bitset);
        let d = materialize_as(&[256, 257], Layout::Bitset);
        let (out, _) = intersect_bitset_bitset(&c, &d);
        assert!(out.is_empty());

        // Idempotence.
        let (out, _) = intersect_bitset_bitset(&a, &a);
        assert_eq!(out.decode(), a.decode());
    }

    #[test]
    fn uint_bitset_kernel() {
        let b = materialize_as(&[5, 6, 7], Layout::Bitset);
        let (out, stats) = intersect_uint_bitset(&uint(&[5, 300]), &b);
        assert_eq!(out.decode(), vec![5]);
        assert_eq!(out.layout(), Layout::Uint);
        assert_eq!(stats.algorithm, Algorithm::UintBitsetProbe);

        let (out, _) = intersect_uint_bitset(&uint(&[1000]), &b);
        assert!(out.is_empty());

        let (out, _) = intersect_uint_bitset(&uint(&[6]), &b);
        assert_eq!(out.decode(), vec![6]);
    }

    #[test]
    fn mixed_layout_result_is_uint() {
        let a = uint(&[1, 2, 3, 200]);
        let b = materialize_as(&[2, 3, 4, 200], Layout::Bitset);
        let (out, _) = intersect_with_stats(&a, &b);
        assert_eq!(out.layout(), Layout::Uint);
        assert_eq!(out.decode(), vec![2, 3, 200]);
        let (flipped, _) = intersect_with_stats(&b, &a);
        assert_eq!(flipped.decode(), vec![2, 3, 200]);
    }

    #[test]
    fn composite_against_everything() {
        let ids_a: Vec<u32> = (0..300).chain([900, 5000].into_iter()).collect();
        let ids_b: Vec<u32> = (100..400).chain([5000, 70000].into_iter()).collect();
        let expect: Vec<u32> = (100..300).chain([5000].into_iter()).collect();
        let comp_a = materialize_set(&ids_a, Granularity::block_level());
        for layout in [Layout::Uint, Layout::Bitset, Layout::Composite] {
            let b = materialize_as(&ids_b, layout);
            let out = intersect(&comp_a, &b);
            assert_eq!(out.decode(), expect, "composite x {:?}", layout);
            let flipped = intersect(&b, &comp_a);
            assert_eq!(flipped.decode(), expect);
        }
    }

    #[test]
    fn bitsets_with_different_block_sizes() {
        // Set-level spans differ; the kernel normalizes to common blocks.
        let a = materialize_as(&(0..2000).collect::<Vec<_>>(), Layout::Bitset);
        let b = materialize_as(&(1990..2005).collect::<Vec<_>>(), Layout::Bitset);
        let (out, _) = intersect_bitset_bitset(&a, &b);
        assert_eq!(out.decode(), (1990..2000).collect::<Vec<_>>());
    }

    #[test]
    fn galloping_comparisons_bounded() {
        let small: Vec<u32> = (0..8).map(|i| i * 1000).collect();
        let large: Vec<u32> = (0..100_000).collect();
        let mut comparisons = 0;
        let out = gallop_intersect(&small, &large, &mut comparisons);
        assert_eq!(out.len(), 8);
        let bound = 4.0 * small.len() as f64 * (1.0 + (large.len() as f64).log2());
        assert!(
            (comparisons as f64) <= bound,
            "comparisons {} above bound {}",
            comparisons,
            bound
        );
    }
}
