//! Comma-selection block walk: non-elitist strategies that settle the
//! string in blocks of `⌊log2 λ⌋` positions per generation.
//!
//! The single parent is its own program counter: it always has the shape
//! `[settled prefix][marker one][zeros]`, with the marker sitting at the
//! start of the next undecided block. Each generation proposes every
//! pattern on that block (plus the moved marker); comma selection keeps
//! the pattern that agrees with the hidden target, so the prefix grows by
//! one block per generation. With λ = 2 this degenerates to deciding one
//! position per generation.

use crate::bits::BitString;
use crate::model::{Algorithm, FailureCause, GenerationProposal, Mode, PopulationView};
use crate::rng::StreamRng;

pub struct BlockWalk {
    n: usize,
    lambda: usize,
    block_len: usize,
    id: &'static str,
}

impl BlockWalk {
    /// The λ = 2 instance: one position decided per generation.
    pub fn pair(n: usize) -> Self {
        BlockWalk {
            n,
            lambda: 2,
            block_len: 1,
            id: "one-comma-two",
        }
    }

    /// General λ ≥ 2: blocks of ⌊log2 λ⌋ positions.
    pub fn with_lambda(n: usize, lambda: usize) -> Self {
        assert!(lambda >= 2, "block walk needs λ ≥ 2");
        assert!(n >= 1);
        let block_len = ((lambda as f64).log2().floor() as usize).min(n).max(1);
        BlockWalk {
            n,
            lambda,
            block_len,
            id: "one-comma-lambda",
        }
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of generations when no early marker hit occurs.
    pub fn block_count(&self) -> usize {
        self.n.div_ceil(self.block_len)
    }
}

impl Algorithm for BlockWalk {
    fn id(&self) -> &'static str {
        self.id
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn mu(&self) -> usize {
        1
    }

    fn lambda(&self) -> usize {
        self.lambda
    }

    fn mode(&self) -> Mode {
        Mode::Comma
    }

    fn initialize(
        &self,
        _prior: PopulationView<'_>,
        _index: usize,
        _rng: &mut StreamRng,
    ) -> BitString {
        let mut x = BitString::zeros(self.n);
        x.flip(0);
        x
    }

    fn decide(&self, view: PopulationView<'_>, _rng: &mut StreamRng) -> GenerationProposal {
        let parent = &view.members[0];
        let ell = self.block_len;
        let marker = (0..self.n).rev().find(|&i| parent.get(i));
        let block_start = match marker {
            Some(q) if q % ell == 0 => q,
            _ => {
                // The parent lost its program-counter shape; unreachable in
                // a clean run. Resample it so only the budget can end this.
                let clones = vec![parent.clone(); self.lambda];
                return GenerationProposal::new(clones)
                    .with_anomaly(FailureCause::PhaseMisread);
            }
        };
        let width = ell.min(self.n - block_start);
        let next_marker = block_start + ell;
        let patterns = 1usize << width;

        let mut offspring: Vec<BitString> = Vec::with_capacity(self.lambda);
        for c in 0..patterns {
            let mut flips = Vec::with_capacity(width + 1);
            for j in 0..width {
                let parent_bit = j == 0; // the marker itself, zeros after it
                let child_bit = c >> j & 1 == 1;
                if parent_bit != child_bit {
                    flips.push(block_start + j);
                }
            }
            if next_marker < self.n {
                flips.push(next_marker);
            }
            offspring.push(parent.with_flips(&flips));
        }
        for i in patterns..self.lambda {
            offspring.push(offspring[i % patterns].clone());
        }
        GenerationProposal::new(offspring)
    }
}

/// Exact (queries, generations) for a given target: the walk is fully
/// deterministic. A target whose last one sits exactly where some
/// generation's marker lands is hit early, one block short of a full
/// sweep; everything else is hit in the generation deciding its last
/// block. For tests and the acceptance harness.
pub fn exact_record(n: usize, lambda: usize, z: &BitString) -> (u64, u64) {
    let ell = ((lambda as f64).log2().floor() as usize).min(n).max(1);
    let init: BitString = {
        let mut x = BitString::zeros(n);
        x.flip(0);
        x
    };
    if *z == init {
        return (1, 0);
    }
    let last_one = (0..n).rev().find(|&i| z.get(i));
    let t = match last_one {
        Some(q) if q >= ell && q % ell == 0 => q / ell - 1,
        _ => n.div_ceil(ell) - 1,
    };
    let width = ell.min(n - t * ell);
    let hit_index: u64 = (0..width)
        .map(|j| u64::from(z.get(t * ell + j)) << j)
        .sum();
    let queries = 1 + lambda as u64 * t as u64 + hit_index + 1;
    (queries, t as u64 + 1)
}
