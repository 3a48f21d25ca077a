//! Parallel-offspring construction: `n/log₂ λ` generations in expectation.
//!
//! One parent, λ offspring, elitist selection. The batch itself is the
//! information channel: after a short setup arms a block-progress counter,
//! every generation enumerates all `2^⌊log₂ λ⌋` patterns of the next
//! payload block across the batch, each paired with the counter's
//! fitness-neutral increment. Ranked selection hands back exactly the
//! pattern agreeing with the hidden target, so the payload finishes in
//! `⌈n′/⌊log₂ λ⌋⌉` block generations plus lower-order setup. A final
//! transition raises two terminal markers and hands over to a marker-gated
//! parallel local search that cleans the bookkeeping bits and resolves the
//! markers' own hidden values, as the single-offspring trading machine
//! does.

use crate::bits::BitString;
use crate::layout::{batch_probe_rate, LayoutError, OnePlusLambdaLayout};
use crate::model::{Algorithm, FailureCause, GenerationProposal, Mode, PopulationView};
use crate::primitives::{
    copy_step, flags_saturated, overwrite_step, reliable_optimize_step, uniform_flip,
    uniform_in_region, StepOutcome,
};
use crate::rng::StreamRng;
use rand::Rng;

/// The parallel block-enumeration machine. Succeeds in expected
/// `O(n/log λ)` generations; a small fraction of runs strands in an
/// undecodable state and fails at its budget.
pub struct BlockMachine {
    layout: OnePlusLambdaLayout,
    /// Terminal local-search targets: every structural position except the
    /// two terminal markers, whose descent the probe lattice controls.
    junk: Vec<usize>,
    /// Optimization targets of the first stage: the counter code.
    stage_targets: Vec<usize>,
}

impl BlockMachine {
    pub fn new(n: usize, lambda: usize) -> Result<Self, LayoutError> {
        let layout = OnePlusLambdaLayout::new(n, lambda)?;
        let junk: Vec<usize> = (0..layout.structural_end())
            .filter(|&i| i != layout.phase_bit && i != layout.spare_flag)
            .collect();
        let stage_targets: Vec<usize> = layout.ctr.code.positions().collect();
        Ok(BlockMachine {
            layout,
            junk,
            stage_targets,
        })
    }

    pub fn layout(&self) -> &OnePlusLambdaLayout {
        &self.layout
    }

    /// λ offspring drawn independently from one per-offspring flip rule.
    fn iid_batch(
        &self,
        x: &BitString,
        rng: &mut StreamRng,
        mut draw: impl FnMut(&mut StreamRng) -> Vec<usize>,
    ) -> GenerationProposal {
        let offspring = (0..self.layout.lambda)
            .map(|_| x.with_flips(&draw(rng)))
            .collect();
        GenerationProposal::new(offspring)
    }

    /// Both markers raised: each offspring independently either probes one
    /// marker (testing whether its hidden value is zero) or local-searches
    /// one junk bit.
    fn terminal_search(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        let rate = batch_probe_rate(l.n, l.lambda);
        self.iid_batch(x, rng, |rng| {
            if rng.gen_bool(rate) {
                vec![if rng.gen_bool(0.5) {
                    l.phase_bit
                } else {
                    l.spare_flag
                }]
            } else {
                vec![uniform_flip(&self.junk, rng)]
            }
        })
    }

    /// Exactly one marker raised: an accepted probe of the raised marker
    /// means both markers want zero and the string is finished; otherwise
    /// re-raise the lowered marker with a junk companion. The probe rate is
    /// divided by λ so the *per-generation* probe stays at 1/n: fast enough
    /// that the wait (n generations, only when both markers want zero) fits
    /// far inside the budget, rare enough that a premature descent of
    /// *both* markers (a construction re-read on a half-dissolved state,
    /// which can strand the run) stays a tail event at every batch width.
    fn half_marked(
        &self,
        x: &BitString,
        raised: usize,
        lowered: usize,
        rng: &mut StreamRng,
    ) -> GenerationProposal {
        let rate = 1.0 / ((self.layout.n * self.layout.lambda) as f64);
        self.iid_batch(x, rng, |rng| {
            if rng.gen_bool(rate) {
                vec![raised]
            } else {
                vec![lowered, uniform_flip(&self.junk, rng)]
            }
        })
    }

    /// Recovery proposal for an undecodable construction state: raise the
    /// phase marker (with a junk companion so the write can be accepted)
    /// and let the terminal phase repair what it can. Reached benignly when
    /// a final-cleanup descent lands on the dissolved counter, and fatally
    /// when the counter was corrupted mid-construction — the block pointer
    /// is lost, so such runs park and fail at their budget.
    fn misread(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        self.iid_batch(x, rng, |rng| {
            vec![l.phase_bit, uniform_flip(&self.junk, rng)]
        })
        .with_anomaly(FailureCause::PhaseMisread)
    }

    /// Both markers down: construction. Stage flags and the block counter,
    /// all read from the string, say which stage we are in.
    fn construct(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        if !flags_saturated(x, l.term_flags) {
            return self.iid_batch(x, rng, |rng| {
                reliable_optimize_step(x, &self.stage_targets, l.term_flags, l.main, rng)
            });
        }
        if !x.get(l.copied_flag) {
            return self.copy_stage(x, rng);
        }
        if !x.get(l.armed_flag) {
            return self.arm_stage(x, rng);
        }
        self.counter_era(x, rng)
    }

    /// Freeze the optimized counter code into its reference mirror, one
    /// accepted bit per generation; raise the copied flag when they agree.
    fn copy_stage(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        let src: Vec<usize> = l.ctr.code.positions().collect();
        let dst: Vec<usize> = l.ctr.reference.positions().collect();
        self.iid_batch(x, rng, |rng| {
            match copy_step(x, &src, &dst, l.main, rng) {
                StepOutcome::Flips(flips) => flips,
                StepOutcome::Done => vec![l.copied_flag, uniform_in_region(l.main, rng)],
            }
        })
    }

    /// Drive the counter code onto its initial value against the frozen
    /// reference, one accepted bit per generation; raise the armed flag
    /// when done.
    fn arm_stage(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        let dst: Vec<usize> = l.ctr.code.positions().collect();
        // Initial-value code bit = reference bit XNOR wanted agreement.
        let pattern: Vec<bool> = (0..dst.len())
            .map(|i| x.get(l.ctr.reference.start + i) == l.ctr.initial_agreement(i))
            .collect();
        self.iid_batch(x, rng, |rng| {
            match overwrite_step(x, &dst, &pattern, l.main, rng) {
                StepOutcome::Flips(flips) => flips,
                StepOutcome::Done => vec![l.armed_flag, uniform_in_region(l.main, rng)],
            }
        })
    }

    /// Armed: the block counter decides between a block generation, the
    /// final transition, and an anomaly.
    fn counter_era(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        match l.ctr.read(x) {
            Ok(v) if v <= l.blocks as u64 => self.block_generation(x, v, rng),
            Ok(_) => self.transition(x, rng),
            Err(_) => self.misread(x, rng),
        }
    }

    /// Enumerate every pattern of the current block, each paired with the
    /// fitness-neutral counter increment; pad the batch with bare
    /// increments. The winner under ranking writes the block's hidden
    /// values and advances the counter, so one block finishes per
    /// generation. Patterns precede pads so an already-correct block still
    /// advances on the tie.
    fn block_generation(&self, x: &BitString, v: u64, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        let Ok(mask) = l.ctr.increment_mask(x) else {
            return self.misread(x, rng);
        };
        let block = l.block((v - 1) as usize);
        let patterns = 1usize << block.len;
        let mut offspring = Vec::with_capacity(l.lambda);
        for p in 0..patterns {
            let mut flips = mask.clone();
            for i in 0..block.len {
                if x.get(block.start + i) != ((p >> i) & 1 == 1) {
                    flips.push(block.start + i);
                }
            }
            offspring.push(x.with_flips(&flips));
        }
        offspring.resize(l.lambda, x.with_flips(&mask));
        GenerationProposal::new(offspring)
    }

    /// Every block is written: raise both terminal markers, paying with two
    /// counter-code bits that are guaranteed wrong (they disagree with the
    /// frozen reference), so the move is accepted at worst as a tie.
    fn transition(&self, x: &BitString, rng: &mut StreamRng) -> GenerationProposal {
        let l = &self.layout;
        let disagree: Vec<usize> = (0..l.ctr.width())
            .filter(|&i| x.get(l.ctr.code.start + i) != x.get(l.ctr.reference.start + i))
            .map(|i| l.ctr.code.start + i)
            .collect();
        if disagree.len() < 2 {
            return self.misread(x, rng);
        }
        self.iid_batch(x, rng, |rng| {
            let a = rng.gen_range(0..disagree.len());
            let b = (a + 1 + rng.gen_range(0..disagree.len() - 1)) % disagree.len();
            vec![l.phase_bit, l.spare_flag, disagree[a], disagree[b]]
        })
    }
}

impl Algorithm for BlockMachine {
    fn id(&self) -> &'static str {
        "one-plus-lambda"
    }

    fn dimension(&self) -> usize {
        self.layout.n
    }

    fn mu(&self) -> usize {
        1
    }

    fn lambda(&self) -> usize {
        self.layout.lambda
    }

    fn mode(&self) -> Mode {
        Mode::Plus
    }

    fn initialize(
        &self,
        _prior: PopulationView<'_>,
        _index: usize,
        rng: &mut StreamRng,
    ) -> BitString {
        // Structural prefix all zero (a decodable "start of construction"),
        // payload uniformly random.
        let main_start = self.layout.main.start;
        BitString::from_fn(self.layout.n, |i| i >= main_start && rng.gen_bool(0.5))
    }

    fn decide(&self, view: PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal {
        let x = &view.members[view.best_index()];
        let l = &self.layout;
        match (x.get(l.phase_bit), x.get(l.spare_flag)) {
            (true, true) => self.terminal_search(x, rng),
            (false, true) => self.half_marked(x, l.spare_flag, l.phase_bit, rng),
            (true, false) => self.half_marked(x, l.phase_bit, l.spare_flag, rng),
            (false, false) => self.construct(x, rng),
        }
    }
}
