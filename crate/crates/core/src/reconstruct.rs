//! Recovering a hidden block pattern from ranking information alone.
//!
//! When every sample string agrees outside one narrow block of positions,
//! the population's fitness ranking restricted to those samples is exactly
//! their ranking by agreement with the hidden block pattern. Enumerating
//! all patterns and keeping those that reproduce the observed ranking
//! identifies the hidden block without any access to fitness values; the
//! caller decides what to do when several candidates survive.

use crate::bits::BitString;
use crate::layout::Region;

/// Outcome of a ranking-based block recovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reconstruction {
    /// Exactly one pattern reproduces the observed ranking.
    Unique(u64),
    /// Zero or several patterns reproduce it — the window cannot be
    /// decided from this sample set.
    Ambiguous,
}

/// Collapse arbitrary rank labels to dense ranks `0..r` preserving order:
/// `[0, 3, 3, 7] → [0, 1, 1, 2]`. Used to restrict a population-wide
/// ranking to a subset of members.
pub fn dense_compress(values: &[usize]) -> Vec<usize> {
    let mut levels: Vec<usize> = values.to_vec();
    levels.sort_unstable();
    levels.dedup();
    values
        .iter()
        .map(|v| levels.binary_search(v).unwrap())
        .collect()
}

/// Widest block the exhaustive filters accept; beyond this the 2^width
/// candidate scan stops being interactive.
pub const MAX_WIDTH: usize = 20;

/// Number of positions (within `width` low bits) where two patterns agree.
fn agreement(a: u64, b: u64, width: usize) -> usize {
    let mask = if width >= 64 { u64::MAX } else { (1u64 << width) - 1 };
    (!(a ^ b) & mask).count_ones() as usize
}

/// Sample indices sorted best observed rank first.
fn rank_order(ranks: &[usize]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..ranks.len()).collect();
    order.sort_unstable_by_key(|&i| ranks[i]);
    order
}

/// Whether the candidate pattern `c` would rank the samples in the
/// observed order: for every sample pair, more agreement with `c` must
/// mean a strictly better observed rank. `order` lists sample indices
/// sorted best rank first; comparing rank-adjacent entries suffices
/// because both rank order and agreement order are transitive. Rank
/// labels only matter through their order, so callers may pass raw
/// population ranks directly.
fn consistent_with(c: u64, samples: &[u64], ranks: &[usize], order: &[usize], width: usize) -> bool {
    let Some((&first, rest)) = order.split_first() else {
        return true;
    };
    let mut prev_rank = ranks[first];
    let mut prev_agree = agreement(c, samples[first], width);
    for &i in rest {
        let agree = agreement(c, samples[i], width);
        let ok = if ranks[i] == prev_rank { agree == prev_agree } else { agree < prev_agree };
        if !ok {
            return false;
        }
        prev_rank = ranks[i];
        prev_agree = agree;
    }
    true
}

/// All patterns of `width` bits whose induced ranking of `samples` equals
/// the observed `ranks`. The true hidden pattern is always in this list
/// when the ranks are genuine.
pub fn consistent_patterns(samples: &[u64], ranks: &[usize], width: usize) -> Vec<u64> {
    assert_eq!(samples.len(), ranks.len());
    assert!(width >= 1 && width <= MAX_WIDTH, "pattern width out of range");
    let order = rank_order(ranks);
    (0..1u64 << width)
        .filter(|&c| consistent_with(c, samples, ranks, &order, width))
        .collect()
}

/// Decide the hidden pattern, stopping the scan as soon as a second
/// consistent candidate rules uniqueness out.
pub fn reconstruct(samples: &[u64], ranks: &[usize], width: usize) -> Reconstruction {
    assert_eq!(samples.len(), ranks.len());
    assert!(width >= 1 && width <= MAX_WIDTH, "pattern width out of range");
    let order = rank_order(ranks);
    let mut found = None;
    for c in 0..1u64 << width {
        if consistent_with(c, samples, ranks, &order, width) {
            if found.is_some() {
                return Reconstruction::Ambiguous;
            }
            found = Some(c);
        }
    }
    match found {
        Some(c) => Reconstruction::Unique(c),
        None => Reconstruction::Ambiguous,
    }
}

/// The bits of `region` read as an integer, lowest position first.
pub fn region_value(x: &BitString, region: Region) -> u64 {
    debug_assert!(region.len <= 63);
    region
        .positions()
        .enumerate()
        .fold(0u64, |v, (i, pos)| v | (u64::from(x.get(pos)) << i))
}

/// Flips that rewrite `region` to hold `pattern` (as read by
/// [`region_value`]).
pub fn region_write_flips(x: &BitString, region: Region, pattern: u64) -> Vec<usize> {
    debug_assert!(region.len <= 63);
    region
        .positions()
        .enumerate()
        .filter(|&(i, pos)| x.get(pos) != (pattern >> i & 1 == 1))
        .map(|(_, pos)| pos)
        .collect()
}
