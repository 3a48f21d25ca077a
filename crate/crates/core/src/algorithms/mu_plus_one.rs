//! Population sampling: `n/log₂ μ` generations from one offspring per step.
//!
//! One offspring per generation, elitist truncation to μ members. Here the
//! *population itself* is the information channel: the payload is carved
//! into windows of `k = Θ(log μ)` positions, and each window is filled with
//! fresh random samples — population members agreeing everywhere except in
//! that window. The fitness ranking of those samples equals their ranking
//! by agreement with the hidden window pattern, so once the ranking pins
//! the pattern it is written back, and a fitness-neutral counter step opens
//! the next window.
//!
//! Elitist selection never accepts a loss, so the very first window needs
//! manufactured headroom before random samples can enter at all. The
//! machine walks the first window to its hidden pattern while the strings
//! are still young, then — after the progress counter is built — *inverts*
//! it one counted bit at a time, each inversion paid for by a coin flip in
//! the untouched payload. The fully inverted window contributes nothing to
//! fitness, so writing the pattern back gains the full window width in the
//! same query that opens the first sampling window: every later sample
//! rides that cushion. A final repair walk fixes the bookkeeping regions
//! the construction consumed.
//!
//! Populations too small to carry a window (μ < 8) fall back to the plain
//! one-bit pair walk run inside μ slots, which is linear-time regardless.

use crate::bits::BitString;
use crate::layout::{LayoutError, MuPlusOneLayout, Region};
use crate::model::{Algorithm, FailureCause, GenerationProposal, Mode, PopulationView};
use crate::primitives::{copy_step, overwrite_step, uniform_in_region, StepOutcome};
use crate::reconstruct::{reconstruct, region_value, region_write_flips, Reconstruction};
use crate::rng::StreamRng;
use rand::Rng;

/// How often the repair walk tests the finale marker's own hidden value
/// instead of walking: the marker is the one bit the walk cannot pay for.
const FINALE_PROBE: f64 = 1.0 / 16.0;

/// The window-sampling population machine. Succeeds in expected
/// `O(n/log μ)` generations for μ ≥ 8; smaller populations run the
/// fallback walk in linear time.
pub struct WindowMachine {
    n: usize,
    mu: usize,
    /// `None` when μ cannot carry a sampling window.
    layout: Option<MuPlusOneLayout>,
}

/// Member pairs differing in exactly one position: `(better slot, worse
/// slot, position)`. One-bit pairs never tie, so better/worse is sharp.
fn one_bit_pairs(view: &PopulationView<'_>) -> Vec<(usize, usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..view.members.len() {
        for j in i + 1..view.members.len() {
            if view.members[i].hamming(&view.members[j]) != 1 {
                continue;
            }
            let pos = view.members[i].differing_positions(&view.members[j])[0];
            if view.ranks[i] < view.ranks[j] {
                pairs.push((i, j, pos));
            } else {
                pairs.push((j, i, pos));
            }
        }
    }
    pairs
}

/// Best-ranked member carrying `flag`, ties broken by slot order.
fn best_with_flag(view: &PopulationView<'_>, flag: usize) -> Option<usize> {
    (0..view.members.len())
        .filter(|&i| view.members[i].get(flag))
        .min_by_key(|&i| (view.ranks[i], i))
}

impl WindowMachine {
    pub fn new(n: usize, mu: usize) -> Result<Self, LayoutError> {
        assert!(mu >= 3, "population must have at least three slots");
        let layout = MuPlusOneLayout::new(n, mu)?;
        Ok(WindowMachine { n, mu, layout })
    }

    pub fn layout(&self) -> Option<&MuPlusOneLayout> {
        self.layout.as_ref()
    }

    /// Resample the best member so the run can only end by budget, with
    /// the anomaly on record.
    fn recovery(&self, view: &PopulationView<'_>, cause: FailureCause) -> GenerationProposal {
        let best = view.members[view.best_index()].clone();
        GenerationProposal::new(vec![best]).with_anomaly(cause)
    }

    /// Fresh uniform pattern for a window-sized region.
    fn fresh_pattern(len: usize, rng: &mut StreamRng) -> u64 {
        rng.gen_range(0..1u64 << len)
    }

    /// Region of the payload that pays for bookkeeping: everything after
    /// the first window. Coin flips here are free to retry — the sampling
    /// phases rewrite these positions wholesale later.
    fn payoff_region(&self) -> Region {
        let l = self.layout.as_ref().unwrap();
        Region::after(l.window(0), l.main)
    }

    /// Whole-string pair walk for populations too small to carry windows.
    /// The dominant pair (largest difference position) is the live one;
    /// fixing its settled bit pays for probing the next position.
    fn fallback_walk(&self, view: &PopulationView<'_>, _rng: &mut StreamRng) -> GenerationProposal {
        let live = one_bit_pairs(view)
            .into_iter()
            .max_by(|a, b| (a.2, view.members.len() - a.1).cmp(&(b.2, view.members.len() - b.1)));
        match live {
            Some((_, worse, pos)) => {
                let flips = if pos + 1 < self.n {
                    vec![pos, pos + 1]
                } else {
                    vec![pos]
                };
                GenerationProposal::new(vec![view.members[worse].with_flips(&flips)])
            }
            None => self.recovery(view, FailureCause::PhaseMisread),
        }
    }

    /// Pair walk over one region: fix the dominant pair's settled bit and
    /// break the next position in the same query. The terminal step (last
    /// position of the region) spends its guaranteed gain on `terminal`
    /// instead — flipping the stage flag or seeding the next walk's pair.
    fn region_walk(
        &self,
        view: &PopulationView<'_>,
        pairs: &[(usize, usize, usize)],
        region: Region,
        terminal: usize,
    ) -> GenerationProposal {
        let live = pairs
            .iter()
            .filter(|&&(_, _, pos)| region.contains(pos))
            .max_by(|a, b| (a.2, view.members.len() - a.1).cmp(&(b.2, view.members.len() - b.1)));
        match live {
            Some(&(_, worse, pos)) => {
                let flips = if pos + 1 < region.end() {
                    vec![pos, pos + 1]
                } else {
                    vec![pos, terminal]
                };
                GenerationProposal::new(vec![view.members[worse].with_flips(&flips)])
            }
            None => self.recovery(view, FailureCause::PhaseMisread),
        }
    }

    /// Stage chain after the code is optimized: copy the code into its
    /// mirror, drive the code onto the smallest codeword, then raise the
    /// live flag that arms the counter eras.
    fn line_era(
        &self,
        view: &PopulationView<'_>,
        line_slot: usize,
        rng: &mut StreamRng,
    ) -> GenerationProposal {
        let l = self.layout.as_ref().unwrap();
        let line = &view.members[line_slot];
        let payoff = self.payoff_region();
        if !line.get(l.copied_flag) {
            let src: Vec<usize> = l.ctr.code.positions().collect();
            let dst: Vec<usize> = l.ctr.reference.positions().collect();
            let flips = match copy_step(line, &src, &dst, payoff, rng) {
                StepOutcome::Flips(flips) => flips,
                StepOutcome::Done => vec![l.copied_flag, uniform_in_region(payoff, rng)],
            };
            return GenerationProposal::new(vec![line.with_flips(&flips)]);
        }
        if l.ctr.read(line) == Ok(1) {
            // Counter initialized: arm it. The flag bit may cost fitness;
            // a fished coin flip pays for it, retried every generation.
            let flips = vec![l.live_flag, uniform_in_region(payoff, rng)];
            return GenerationProposal::new(vec![line.with_flips(&flips)]);
        }
        // Drive the code onto the smallest codeword relative to the
        // freshly frozen mirror.
        let dst: Vec<usize> = l.ctr.code.positions().collect();
        let pattern: Vec<bool> = (0..l.ctr.width())
            .map(|i| {
                let mirrored = line.get(l.ctr.reference.start + i);
                if l.ctr.initial_agreement(i) {
                    mirrored
                } else {
                    !mirrored
                }
            })
            .collect();
        match overwrite_step(line, &dst, &pattern, payoff, rng) {
            StepOutcome::Flips(flips) => GenerationProposal::new(vec![line.with_flips(&flips)]),
            // The code already sits on the codeword yet read disagreed:
            // the counter state is not decodable.
            StepOutcome::Done => self.recovery(view, FailureCause::PhaseMisread),
        }
    }

    /// All counter-driven phases, keyed on the armed members' maximum
    /// counter value: stepping the first window's inversion, cashing the
    /// completed inversion in, or sampling the current window. `None`
    /// when no armed member exists.
    fn counter_era(
        &self,
        view: &PopulationView<'_>,
        rng: &mut StreamRng,
    ) -> Option<GenerationProposal> {
        let l = self.layout.as_ref().unwrap();
        let live: Vec<(usize, u64)> = (0..view.members.len())
            .filter(|&i| view.members[i].get(l.live_flag))
            .filter_map(|i| l.ctr.read(&view.members[i]).ok().map(|v| (i, v)))
            .collect();
        let &(_, v_max) = live.iter().max_by_key(|&&(_, v)| v)?;
        let current: Vec<usize> = live
            .iter()
            .filter(|&&(_, v)| v == v_max)
            .map(|&(i, _)| i)
            .collect();
        let leader = *current
            .iter()
            .min_by_key(|&&i| (view.ranks[i], i))
            .unwrap();
        Some(if v_max <= l.k as u64 {
            self.inversion_step(view, leader, v_max, rng)
        } else if v_max == l.k as u64 + 1 {
            self.open_sampling(view, leader, rng)
        } else {
            self.window_era(view, &current, leader, v_max, rng)
        })
    }

    /// One step of the first window's neutral inversion: flip the counted
    /// bit (a guaranteed loss — the window was walked to its hidden
    /// pattern), advance the counter, and fish a coin flip in the payload
    /// to pay. Rejected combinations retry with a fresh coin.
    fn inversion_step(
        &self,
        view: &PopulationView<'_>,
        leader: usize,
        v: u64,
        rng: &mut StreamRng,
    ) -> GenerationProposal {
        let l = self.layout.as_ref().unwrap();
        let m = &view.members[leader];
        let win = l.window(0);
        let Ok(mask) = l.ctr.increment_mask(m) else {
            return self.recovery(view, FailureCause::PhaseMisread);
        };
        let mut flips = vec![win.start + (v as usize - 1)];
        flips.extend(mask);
        flips.push(uniform_in_region(self.payoff_region(), rng));
        GenerationProposal::new(vec![m.with_flips(&flips)])
    }

    /// The completed inversion is cashed in: the first window's hidden
    /// pattern is the complement of the fully inverted content, and
    /// writing it back gains the whole window width — enough to pay for
    /// opening the first sampling window with a fresh draw in one query.
    fn open_sampling(
        &self,
        view: &PopulationView<'_>,
        leader: usize,
        rng: &mut StreamRng,
    ) -> GenerationProposal {
        let l = self.layout.as_ref().unwrap();
        let m = &view.members[leader];
        let win = l.window(0);
        let pattern = !region_value(m, win) & ((1u64 << win.len) - 1);
        let mut flips = region_write_flips(m, win, pattern);
        let Ok(mask) = l.ctr.increment_mask(m) else {
            return self.recovery(view, FailureCause::PhaseMisread);
        };
        flips.extend(mask);
        let next = l.window(1);
        flips.extend(region_write_flips(
            m,
            next,
            Self::fresh_pattern(next.len, rng),
        ));
        GenerationProposal::new(vec![m.with_flips(&flips)])
    }

    /// Window sampling: recover the window's pattern from the sample
    /// ranking the moment it is pinned, write it back, and advance the
    /// cursor — opening the next window with a fresh sample in the same
    /// query. Under-determined rankings grow the sample set instead.
    fn window_era(
        &self,
        view: &PopulationView<'_>,
        current: &[usize],
        donor: usize,
        v: u64,
        rng: &mut StreamRng,
    ) -> GenerationProposal {
        let l = self.layout.as_ref().unwrap();
        let w = (v - l.k as u64 - 1) as usize;
        let win = l.window(w);

        let samples: Vec<u64> = current
            .iter()
            .map(|&i| region_value(&view.members[i], win))
            .collect();
        let ranks: Vec<usize> = current.iter().map(|&i| view.ranks[i] as usize).collect();

        // Advance the moment the ranking pins the window: the hidden
        // pattern is always consistent with a genuine ranking, so a unique
        // survivor can only be the hidden pattern itself — waiting for more
        // samples could not change the answer, only cost queries.
        if let Reconstruction::Unique(pattern) = reconstruct(&samples, &ranks, win.len) {
            let best = &view.members[donor];
            let mut flips = region_write_flips(best, win, pattern);
            if w + 1 < l.windows {
                let Ok(mask) = l.ctr.increment_mask(best) else {
                    return self.recovery(view, FailureCause::PhaseMisread);
                };
                flips.extend(mask);
                let next = l.window(w + 1);
                flips.extend(region_write_flips(
                    best,
                    next,
                    Self::fresh_pattern(next.len, rng),
                ));
            } else {
                flips.push(l.finale_flag);
            }
            return GenerationProposal::new(vec![best.with_flips(&flips)]);
        }

        // Under-determined: grow the sample set with a pattern not present
        // yet. Repeats would add no ranking information, and always
        // proposing something new keeps the sample pool from collapsing
        // onto a few duplicated high-agreement values under replacement
        // churn. A full house that is still ambiguous is impossible for a
        // genuine ranking (it pins every agreement level), so running out
        // of new patterns means the ranking itself is corrupt.
        match Self::novel_pattern(&samples, win.len, rng) {
            Some(fresh) => {
                let flips = region_write_flips(&view.members[donor], win, fresh);
                GenerationProposal::new(vec![view.members[donor].with_flips(&flips)])
            }
            None => self.recovery(view, FailureCause::ReconstructionAmbiguous),
        }
    }

    /// A `len`-bit pattern not currently among `seen`, or `None` when all
    /// 2^len patterns are taken. Small windows enumerate the complement;
    /// wide ones rejection-sample it, where a hit is near-certain because
    /// the population is tiny next to the pattern space.
    fn novel_pattern(seen: &[u64], len: usize, rng: &mut StreamRng) -> Option<u64> {
        let space = 1u64 << len;
        if space <= 64 {
            let unseen: Vec<u64> = (0..space).filter(|v| !seen.contains(v)).collect();
            if unseen.is_empty() {
                return None;
            }
            Some(unseen[rng.gen_range(0..unseen.len())])
        } else {
            (0..64)
                .map(|_| rng.gen_range(0..space))
                .find(|v| !seen.contains(v))
        }
    }

    /// Repair walk over the consumed bookkeeping regions. Walk steps and
    /// random injections fix everything the finale marker's own value
    /// cannot verify; a sparse probe of the marker itself provides the
    /// final +1 and the only way to terminate.
    fn finale(&self, view: &PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal {
        let l = self.layout.as_ref().unwrap();
        let order: Vec<usize> = [l.code_opt_flag, l.copied_flag, l.live_flag]
            .into_iter()
            .chain(l.ctr.code.positions())
            .chain(l.ctr.reference.positions())
            .collect();
        let leader = best_with_flag(view, l.finale_flag).unwrap();
        let best = &view.members[leader];
        if rng.gen_bool(FINALE_PROBE) {
            return GenerationProposal::new(vec![best.with_flips(&[l.finale_flag])]);
        }
        // Live pair: the leader against a one-bit neighbour, preferring
        // the farthest walk position (stale neighbours trail behind).
        let mut live: Option<(usize, usize)> = None;
        for j in 0..view.members.len() {
            if j == leader || !view.members[j].get(l.finale_flag) {
                continue;
            }
            if best.hamming(&view.members[j]) != 1 {
                continue;
            }
            let pos = best.differing_positions(&view.members[j])[0];
            let Some(idx) = order.iter().position(|&p| p == pos) else {
                continue;
            };
            if live.map_or(true, |(cur, _)| idx > cur) {
                live = Some((idx, j));
            }
        }
        match live {
            Some((idx, j)) => {
                // The neighbour differs in one bit and ranks below the
                // leader, so it is wrong exactly there; fixing it pays for
                // probing the next walk position.
                let flips = if idx + 1 < order.len() {
                    vec![order[idx], order[idx + 1]]
                } else {
                    vec![order[idx]]
                };
                GenerationProposal::new(vec![view.members[j].with_flips(&flips)])
            }
            None => {
                let probe = order[rng.gen_range(0..order.len())];
                GenerationProposal::new(vec![best.with_flips(&[probe])])
            }
        }
    }
}

impl Algorithm for WindowMachine {
    fn id(&self) -> &'static str {
        "mu-plus-one"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn mu(&self) -> usize {
        self.mu
    }

    fn lambda(&self) -> usize {
        1
    }

    fn mode(&self) -> Mode {
        Mode::Plus
    }

    fn initialize(
        &self,
        prior: PopulationView<'_>,
        index: usize,
        rng: &mut StreamRng,
    ) -> BitString {
        match (&self.layout, index) {
            (_, 0) => {
                let mut x = BitString::zeros(self.n);
                if let Some(l) = &self.layout {
                    for pos in l.main.positions() {
                        x.set(pos, rng.gen_bool(0.5));
                    }
                }
                x
            }
            // The second member seeds the first walk: one bit of
            // difference at the first window's first position.
            (Some(l), 1) => prior.members[0].with_flips(&[l.main.start]),
            (None, 1) => prior.members[0].with_flips(&[0]),
            _ => prior.members[0].clone(),
        }
    }

    fn decide(&self, view: PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal {
        let Some(l) = &self.layout else {
            return self.fallback_walk(&view, rng);
        };
        if best_with_flag(&view, l.finale_flag).is_some() {
            return self.finale(&view, rng);
        }
        if let Some(proposal) = self.counter_era(&view, rng) {
            return proposal;
        }
        if let Some(line) = best_with_flag(&view, l.code_opt_flag) {
            return self.line_era(&view, line, rng);
        }
        // Walk eras: the first window first (seeded at initialization, it
        // ends by seeding the code pair), then the counter code.
        let pairs = one_bit_pairs(&view);
        if pairs.iter().any(|&(_, _, p)| l.ctr.code.contains(p)) {
            return self.region_walk(&view, &pairs, l.ctr.code, l.code_opt_flag);
        }
        let win = l.window(0);
        if pairs.iter().any(|&(_, _, p)| win.contains(p)) {
            return self.region_walk(&view, &pairs, win, l.ctr.code.start);
        }
        self.recovery(&view, FailureCause::PhaseMisread)
    }
}
