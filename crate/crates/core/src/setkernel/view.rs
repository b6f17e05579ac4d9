//! Sorted-set views over 32-bit ids in skew-adaptive layouts.
//!
//! A set is stored either as a plain sorted `uint` array, as a `bitset`
//! (a run of power-of-two-aligned blocks of machine words), or as a
//! `composite` sequence of fixed-size domain blocks that are individually
//! sparse or dense. Layout selection is driven by cardinality and range;
//! see [`choose_layout`] and [`materialize_set`].

use serde::{Deserialize, Serialize};

/// Domain values covered by one bitset/composite block by default.
pub const DEFAULT_BLOCK_BITS: u32 = 256;

/// Inverse-density threshold for the set-level optimizer: a set becomes a
/// bitset when `range / cardinality <= W`, i.e. each member costs at most
/// one vector register worth of bits.
pub const LAYOUT_DENSITY_THRESHOLD: u64 = 256;

const WORD_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    Uint,
    Bitset,
    Composite,
}

/// Granularity at which layout decisions are made when materializing the
/// sets of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Granularity {
    /// Every set is a `uint` array.
    RelationLevel,
    /// One decision per set, by cardinality and range.
    SetLevel,
    /// One decision per fixed-size domain block, yielding a composite set.
    BlockLevel { block_bits: u32 },
}

impl Granularity {
    pub fn block_level() -> Self {
        Granularity::BlockLevel {
            block_bits: DEFAULT_BLOCK_BITS,
        }
    }
}

impl Default for Granularity {
    fn default() -> Self {
        Granularity::SetLevel
    }
}

/// Dense blocks: strictly increasing block offsets plus one run of words
/// per offset. `block_bits` is a power of two, at least one machine word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BitsetData {
    pub block_bits: u32,
    /// Block indices (`value >> log2(block_bits)`), strictly increasing.
    pub offsets: Vec<u32>,
    /// Cardinality of all blocks preceding each offset.
    pub ranks: Vec<u32>,
    /// `offsets.len() * block_bits / 64` words.
    pub words: Vec<u64>,
    pub cardinality: u32,
}

impl BitsetData {
    pub fn words_per_block(&self) -> usize {
        (self.block_bits / WORD_BITS) as usize
    }

    pub fn block_words(&self, i: usize) -> &[u64] {
        let wpb = self.words_per_block();
        &self.words[i * wpb..(i + 1) * wpb]
    }

    pub fn contains(&self, value: u32) -> bool {
        let shift = self.block_bits.trailing_zeros();
        let block = value >> shift;
        match self.offsets.binary_search(&block) {
            Ok(i) => {
                let within = value & (self.block_bits - 1);
                let word = self.block_words(i)[(within / WORD_BITS) as usize];
                word & (1u64 << (within % WORD_BITS)) != 0
            }
            Err(_) => false,
        }
    }

    fn rank(&self, value: u32) -> Option<usize> {
        let shift = self.block_bits.trailing_zeros();
        let block = value >> shift;
        let i = self.offsets.binary_search(&block).ok()?;
        let within = value & (self.block_bits - 1);
        let words = self.block_words(i);
        let wi = (within / WORD_BITS) as usize;
        if words[wi] & (1u64 << (within % WORD_BITS)) == 0 {
            return None;
        }
        let mut rank = self.ranks[i] as usize;
        for w in &words[..wi] {
            rank += w.count_ones() as usize;
        }
        let below = words[wi] & ((1u64 << (within % WORD_BITS)) - 1);
        Some(rank + below.count_ones() as usize)
    }

    fn from_sorted(ids: &[u32], block_bits: u32) -> BitsetData {
        debug_assert!(block_bits.is_power_of_two() && block_bits >= WORD_BITS);
        let shift = block_bits.trailing_zeros();
        let wpb = (block_bits / WORD_BITS) as usize;
        let mut offsets = Vec::new();
        let mut ranks = Vec::new();
        let mut words: Vec<u64> = Vec::new();
        let mut seen = 0u32;
        for &v in ids {
            let block = v >> shift;
            if offsets.last() != Some(&block) {
                offsets.push(block);
                ranks.push(seen);
                words.resize(words.len() + wpb, 0);
            }
            let within = v & (block_bits - 1);
            let base = words.len() - wpb;
            words[base + (within / WORD_BITS) as usize] |= 1u64 << (within % WORD_BITS);
            seen += 1;
        }
        BitsetData {
            block_bits,
            offsets,
            ranks,
            words,
            cardinality: ids.len() as u32,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        let shift = self.block_bits.trailing_zeros();
        let wpb = self.words_per_block();
        self.offsets.iter().enumerate().flat_map(move |(i, &b)| {
            let base = b << shift;
            self.words[i * wpb..(i + 1) * wpb]
                .iter()
                .enumerate()
                .flat_map(move |(wi, &w)| {
                    BitIter(w).map(move |bit| base + wi as u32 * WORD_BITS + bit)
                })
        })
    }
}

struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let bit = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(bit)
    }
}

/// One block of a composite set. The block covers the domain
/// `[index * block_bits, (index + 1) * block_bits)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompositeBlock {
    pub index: u32,
    /// Cardinality of all preceding blocks.
    pub rank: u32,
    pub data: BlockData,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BlockData {
    /// Absolute member values, sorted.
    Sparse(Vec<u32>),
    /// `block_bits / 64` words relative to the block start.
    Dense(Vec<u64>),
}

impl BlockData {
    pub fn cardinality(&self) -> usize {
        match self {
            BlockData::Sparse(v) => v.len(),
            BlockData::Dense(ws) => ws.iter().map(|w| w.count_ones() as usize).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SetData {
    Uint(Vec<u32>),
    Bitset(BitsetData),
    Composite {
        block_bits: u32,
        blocks: Vec<CompositeBlock>,
        cardinality: u32,
    },
}

/// Associated values carried 1-1 with the members of a set.
///
/// Sparse vectors are indexed by member position, dense vectors by the
/// member value itself (relative to `base`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AssocValues {
    Sparse(Vec<f64>),
    Dense { base: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum SetError {
    #[error("element {0} is not a member of the set")]
    ElementAbsent(u32),
    #[error("associated values are not present")]
    NoAssoc,
}

/// An immutable sorted set of 32-bit ids with an optional associated-value
/// vector. All intersection kernels operate on these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetView {
    pub data: SetData,
    pub assoc: Option<AssocValues>,
}

impl SetView {
    pub const fn empty() -> SetView {
        SetView {
            data: SetData::Uint(Vec::new()),
            assoc: None,
        }
    }

    pub fn from_sorted(ids: Vec<u32>) -> SetView {
        debug_assert!(ids.windows(2).all(|w| w[0] < w[1]), "ids must be strictly sorted");
        SetView {
            data: SetData::Uint(ids),
            assoc: None,
        }
    }

    pub fn layout(&self) -> Layout {
        match &self.data {
            SetData::Uint(_) => Layout::Uint,
            SetData::Bitset(_) => Layout::Bitset,
            SetData::Composite { .. } => Layout::Composite,
        }
    }

    pub fn cardinality(&self) -> usize {
        match &self.data {
            SetData::Uint(v) => v.len(),
            SetData::Bitset(b) => b.cardinality as usize,
            SetData::Composite { cardinality, .. } => *cardinality as usize,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cardinality() == 0
    }

    pub fn min(&self) -> Option<u32> {
        self.iter().next()
    }

    pub fn max(&self) -> Option<u32> {
        match &self.data {
            SetData::Uint(v) => v.last().copied(),
            SetData::Bitset(b) => b.iter().last(),
            SetData::Composite { blocks, .. } => blocks.last().and_then(|blk| match &blk.data {
                BlockData::Sparse(v) => v.last().copied(),
                BlockData::Dense(_) => b_iter_last(blk, self.composite_block_bits()),
            }),
        }
    }

    fn composite_block_bits(&self) -> u32 {
        match &self.data {
            SetData::Composite { block_bits, .. } => *block_bits,
            _ => DEFAULT_BLOCK_BITS,
        }
    }

    /// `max - min + 1`, or 0 for the empty set.
    pub fn universe_range(&self) -> u64 {
        match (self.min(), self.max()) {
            (Some(lo), Some(hi)) => hi as u64 - lo as u64 + 1,
            _ => 0,
        }
    }

    pub fn iter(&self) -> Box<dyn Iterator<Item = u32> + '_> {
        match &self.data {
            SetData::Uint(v) => Box::new(v.iter().copied()),
            SetData::Bitset(b) => Box::new(b.iter()),
            SetData::Composite {
                block_bits, blocks, ..
            } => {
                let bits = *block_bits;
                Box::new(blocks.iter().flat_map(move |blk| {
                    let base = blk.index * bits;
                    let items: Vec<u32> = match &blk.data {
                        BlockData::Sparse(v) => v.clone(),
                        BlockData::Dense(ws) => ws
                            .iter()
                            .enumerate()
                            .flat_map(|(wi, &w)| {
                                BitIter(w).map(move |bit| base + wi as u32 * WORD_BITS + bit)
                            })
                            .collect(),
                    };
                    items.into_iter()
                }))
            }
        }
    }

    pub fn decode(&self) -> Vec<u32> {
        self.iter().collect()
    }

    pub fn contains(&self, value: u32) -> bool {
        match &self.data {
            SetData::Uint(v) => v.binary_search(&value).is_ok(),
            SetData::Bitset(b) => b.contains(value),
            SetData::Composite {
                block_bits, blocks, ..
            } => {
                let idx = value / block_bits;
                match blocks.binary_search_by_key(&idx, |b| b.index) {
                    Ok(i) => match &blocks[i].data {
                        BlockData::Sparse(v) => v.binary_search(&value).is_ok(),
                        BlockData::Dense(ws) => {
                            let within = value % block_bits;
                            ws[(within / WORD_BITS) as usize] & (1u64 << (within % WORD_BITS)) != 0
                        }
                    },
                    Err(_) => false,
                }
            }
        }
    }

    /// Position of `value` among the members, if present.
    pub fn rank(&self, value: u32) -> Option<usize> {
        match &self.data {
            SetData::Uint(v) => v.binary_search(&value).ok(),
            SetData::Bitset(b) => b.rank(value),
            SetData::Composite {
                block_bits, blocks, ..
            } => {
                let idx = value / block_bits;
                let i = blocks.binary_search_by_key(&idx, |b| b.index).ok()?;
                let blk = &blocks[i];
                let within_rank = match &blk.data {
                    BlockData::Sparse(v) => v.binary_search(&value).ok()?,
                    BlockData::Dense(ws) => {
                        let within = value % block_bits;
                        let wi = (within / WORD_BITS) as usize;
                        if ws[wi] & (1u64 << (within % WORD_BITS)) == 0 {
                            return None;
                        }
                        let mut r = 0usize;
                        for w in &ws[..wi] {
                            r += w.count_ones() as usize;
                        }
                        r + (ws[wi] & ((1u64 << (within % WORD_BITS)) - 1)).count_ones() as usize
                    }
                };
                Some(blk.rank as usize + within_rank)
            }
        }
    }

    /// Looks up the associated value of a member.
    ///
    /// Sparse vectors (uint, composite) are addressed by member position,
    /// dense vectors (bitset) by the member value.
    pub fn assoc_lookup(&self, element: u32) -> Result<f64, SetError> {
        let assoc = self.assoc.as_ref().ok_or(SetError::NoAssoc)?;
        match assoc {
            AssocValues::Sparse(values) => {
                let pos = self.rank(element).ok_or(SetError::ElementAbsent(element))?;
                Ok(values[pos])
            }
            AssocValues::Dense { base, values } => {
                if !self.contains(element) {
                    return Err(SetError::ElementAbsent(element));
                }
                Ok(values[(element - base) as usize])
            }
        }
    }

    /// Attaches associated values given in member order, converting to the
    /// layout-appropriate vector shape.
    pub fn with_assoc(mut self, values_in_member_order: Vec<f64>) -> SetView {
        assert_eq!(values_in_member_order.len(), self.cardinality());
        self.assoc = Some(match &self.data {
            SetData::Bitset(b) if b.cardinality > 0 => {
                let members: Vec<u32> = b.iter().collect();
                let base = members[0];
                let span = (members[members.len() - 1] - base + 1) as usize;
                let mut dense = vec![0.0; span];
                for (m, v) in members.iter().zip(values_in_member_order) {
                    dense[(m - base) as usize] = v;
                }
                AssocValues::Dense { base, values: dense }
            }
            _ => AssocValues::Sparse(values_in_member_order),
        });
        self
    }
}

fn b_iter_last(blk: &CompositeBlock, block_bits: u32) -> Option<u32> {
    match &blk.data {
        BlockData::Sparse(v) => v.last().copied(),
        BlockData::Dense(ws) => {
            let base = blk.index * block_bits;
            for (wi, &w) in ws.iter().enumerate().rev() {
                if w != 0 {
                    return Some(base + wi as u32 * WORD_BITS + 63 - w.leading_zeros());
                }
            }
            None
        }
    }
}

/// Set-level layout decision: bitset when the inverse density
/// `range / cardinality` is at most [`LAYOUT_DENSITY_THRESHOLD`].
pub fn choose_layout(cardinality: usize, range: u64) -> Layout {
    debug_assert!(cardinality >= 1 && range >= cardinality as u64);
    if range / cardinality as u64 <= LAYOUT_DENSITY_THRESHOLD {
        Layout::Bitset
    } else {
        Layout::Uint
    }
}

/// Builds a single-span bitset: the smallest power-of-two block size that
/// covers `[min, max]` with one aligned block, falling back to the default
/// block size when alignment would waste more than 4x the span.
fn single_span_bitset(ids: &[u32]) -> BitsetData {
    let lo = ids[0];
    let hi = ids[ids.len() - 1];
    let range = hi as u64 - lo as u64 + 1;
    let mut bits = (range.max(WORD_BITS as u64)).next_power_of_two() as u32;
    while (lo >> bits.trailing_zeros()) != (hi >> bits.trailing_zeros()) {
        bits = bits.checked_mul(2).unwrap_or(u32::MAX & !(u32::MAX >> 1));
    }
    if bits as u64 > 4 * range.max(DEFAULT_BLOCK_BITS as u64) {
        // Straddles a high alignment boundary; aligned default blocks are
        // cheaper than one giant span.
        bits = DEFAULT_BLOCK_BITS;
    }
    BitsetData::from_sorted(ids, bits)
}

/// Materializes a sorted, duplicate-free id list into a set view at the
/// requested layout granularity.
pub fn materialize_set(ids: &[u32], granularity: Granularity) -> SetView {
    debug_assert!(ids.windows(2).all(|w| w[0] < w[1]), "ids must be strictly sorted");
    if ids.is_empty() {
        return SetView::empty();
    }
    let data = match granularity {
        Granularity::RelationLevel => SetData::Uint(ids.to_vec()),
        Granularity::SetLevel => {
            let range = ids[ids.len() - 1] as u64 - ids[0] as u64 + 1;
            match choose_layout(ids.len(), range) {
                Layout::Uint => SetData::Uint(ids.to_vec()),
                _ => SetData::Bitset(single_span_bitset(ids)),
            }
        }
        Granularity::BlockLevel { block_bits } => {
            let mut blocks = Vec::new();
            let mut rank = 0u32;
            let mut i = 0;
            while i < ids.len() {
                let index = ids[i] / block_bits;
                let mut j = i;
                while j < ids.len() && ids[j] / block_bits == index {
                    j += 1;
                }
                let members = &ids[i..j];
                // Dense when the block's bits cost no more than uint storage.
                let data = if members.len() as u32 >= block_bits / 32 {
                    let base = index * block_bits;
                    let mut words = vec![0u64; (block_bits / WORD_BITS) as usize];
                    for &v in members {
                        let within = v - base;
                        words[(within / WORD_BITS) as usize] |= 1u64 << (within % WORD_BITS);
                    }
                    BlockData::Dense(words)
                } else {
                    BlockData::Sparse(members.to_vec())
                };
                blocks.push(CompositeBlock { index, rank, data });
                rank += members.len() as u32;
                i = j;
            }
            SetData::Composite {
                block_bits,
                blocks,
                cardinality: ids.len() as u32,
            }
        }
    };
    SetView { data, assoc: None }
}

/// Rebuilds a set from members in a specific layout, ignoring granularity
/// heuristics. Used by the oracle optimizer to force combinations.
pub fn materialize_as(ids: &[u32], layout: Layout) -> SetView {
    if ids.is_empty() {
        return SetView::empty();
    }
    match layout {
        Layout::Uint => SetView::from_sorted(ids.to_vec()),
        Layout::Bitset => SetView {
            data: SetData::Bitset(single_span_bitset(ids)),
            assoc: None,
        },
        Layout::Composite => materialize_set(ids, Granularity::block_level()),
    }
}
