//! Single-parent building blocks for staged self-organizing strategies.
//!
//! Every function here is a *pure proposal rule*: it reads the parent
//! string (and an RNG) and returns the bit positions one offspring should
//! flip. Acceptance is decided elsewhere by ranked selection, so these
//! rules must make progress knowing only what survived — typically by
//! pairing a possibly harmful write with one uniform bit from a large
//! `payoff` region, whose expected improvement pays for the write.
//!
//! Multi-step primitives ([`copy_step`], [`overwrite_step`]) re-derive
//! their progress from the string itself each call (the first position
//! that still differs), so strategies built from them stay stateless.

use crate::bits::BitString;
use crate::layout::{CounterError, CounterLayout, Region};
use crate::rng::StreamRng;
use rand::Rng;

/// Result of one staged-primitive call: either a flip set to propose, or
/// the signal that this stage has nothing left to do. On `Done` the
/// dispatcher advances to the next stage within the same generation, so no
/// query is wasted on a sentinel offspring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Flips(Vec<usize>),
    Done,
}

/// Failure surfaced by [`trading_step`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TradingError {
    /// A banking move was drawn but every reserve bit is already in use.
    PoolEmpty,
    /// One of the two counters does not decode to a valid value.
    Corrupted,
}

impl From<CounterError> for TradingError {
    fn from(_: CounterError) -> Self {
        TradingError::Corrupted
    }
}

/// One uniform flip among the listed target positions.
pub fn uniform_flip(targets: &[usize], rng: &mut StreamRng) -> usize {
    targets[rng.gen_range(0..targets.len())]
}

/// One uniform flip inside a contiguous region.
pub fn uniform_in_region(region: Region, rng: &mut StreamRng) -> usize {
    region.start + rng.gen_range(0..region.len)
}

/// Whether every bit of `flags` is raised.
pub fn flags_saturated(x: &BitString, flags: Region) -> bool {
    flags.positions().all(|f| x.get(f))
}

/// Optimize `targets` by single-bit search, terminating via a bank of
/// one-way flags.
///
/// Almost every call proposes one uniform target flip (accepted exactly
/// when that bit was wrong). With probability `1/(3k·log2 k)` — rare
/// enough that all flags raising before the targets finish is unlikely —
/// it instead proposes raising the first unraised flag together with one
/// uniform payoff bit, so the flag write is accepted at worst as a tie.
/// Once the flags saturate the caller treats the targets as finished.
pub fn reliable_optimize_step(
    x: &BitString,
    targets: &[usize],
    flags: Region,
    payoff: Region,
    rng: &mut StreamRng,
) -> Vec<usize> {
    debug_assert!(!flags_saturated(x, flags), "stage already terminated");
    let k = targets.len().max(2) as f64;
    let rate = 1.0 / (3.0 * k * k.log2());
    if rng.gen_bool(rate) {
        let flag = flags
            .positions()
            .find(|&f| !x.get(f))
            .expect("saturation checked above");
        vec![flag, uniform_in_region(payoff, rng)]
    } else {
        vec![uniform_flip(targets, rng)]
    }
}

/// Copy `src` onto `dst` (parallel position lists), one bit per accepted
/// step, paying for each write with one uniform payoff bit.
///
/// The next bit to copy is re-derived from the string as the first index
/// where source and destination differ, so accepted progress is monotone
/// and the primitive needs no state. `Done` once the regions agree.
pub fn copy_step(
    x: &BitString,
    src: &[usize],
    dst: &[usize],
    payoff: Region,
    rng: &mut StreamRng,
) -> StepOutcome {
    debug_assert_eq!(src.len(), dst.len(), "copy regions must mirror");
    match (0..src.len()).find(|&i| x.get(src[i]) != x.get(dst[i])) {
        Some(i) => StepOutcome::Flips(vec![dst[i], uniform_in_region(payoff, rng)]),
        None => StepOutcome::Done,
    }
}

/// Drive `dst` onto a fixed target `pattern`, one bit per accepted step,
/// paying for each write with one uniform payoff bit.
///
/// Same first-difference scheme as [`copy_step`], but against an explicit
/// pattern instead of a live source region — used to arm counters and to
/// invert a region against its frozen mirror.
pub fn overwrite_step(
    x: &BitString,
    dst: &[usize],
    pattern: &[bool],
    payoff: Region,
    rng: &mut StreamRng,
) -> StepOutcome {
    debug_assert_eq!(dst.len(), pattern.len(), "pattern must cover dst");
    match (0..dst.len()).find(|&i| x.get(dst[i]) != pattern[i]) {
        Some(i) => StepOutcome::Flips(vec![dst[i], uniform_in_region(payoff, rng)]),
        None => StepOutcome::Done,
    }
}

/// One move of the pointer-trading walk that fixes the `main` region
/// left to right without ever reading fitness values.
///
/// `ctr_main` stores i+1 where i counts finished main bits; `ctr_pool`
/// stores i'+1 where i' counts reserve bits currently banked. The walk
/// keeps every reserve bit beyond the banked prefix non-optimal, so:
///
/// - **advance** (probability `1 - bias`): flip main bit i, step
///   `ctr_main` forward, un-bank the newest reserve bit (flip it back to
///   non-optimal, step `ctr_pool` back). Fitness-neutral exactly when
///   main bit i was wrong — ranked selection accepts precisely the moves
///   that make progress.
/// - **bank** (probability `bias`): flip main bit i *and* bank the next
///   reserve bit (flip it to optimal, step `ctr_pool` forward). Always
///   accepted; whenever main bit i was right this toggles it wrong so a
///   later advance can fix it.
/// - **seed**: an advance drawn with nothing banked just banks the first
///   reserve bit, strictly improving.
///
/// The banked count drifts down on wrong payload bits and up on right
/// ones; since the walk reads the count anyway, it throttles the banking
/// coin to a third once half the reserve is in use. That reflects the
/// count's random walk away from the reserve boundary, making exhaustion
/// a tail event of the *throttled* walk at almost no cost in the common,
/// uncongested case.
///
/// Errors: a bank with the whole reserve in use is [`TradingError::PoolEmpty`];
/// an unreadable counter is [`TradingError::Corrupted`].
pub fn trading_step(
    x: &BitString,
    main: Region,
    pool: Region,
    ctr_main: &CounterLayout,
    ctr_pool: &CounterLayout,
    bias: f64,
    rng: &mut StreamRng,
) -> Result<Vec<usize>, TradingError> {
    let i = (ctr_main.read(x)? - 1) as usize;
    let banked = (ctr_pool.read(x)? - 1) as usize;
    debug_assert!(i < main.len, "caller must leave the walk after the last bit");
    let effective = if 2 * banked >= pool.len {
        bias / 3.0
    } else {
        bias
    };
    if rng.gen_bool(effective) {
        if banked >= pool.len {
            return Err(TradingError::PoolEmpty);
        }
        let mut flips = vec![main.start + i, pool.start + banked];
        flips.extend(ctr_pool.increment_mask(x)?);
        Ok(flips)
    } else if banked == 0 {
        let mut flips = vec![pool.start];
        flips.extend(ctr_pool.increment_mask(x)?);
        Ok(flips)
    } else {
        let mut flips = vec![main.start + i, pool.start + banked - 1];
        flips.extend(ctr_main.increment_mask(x)?);
        flips.extend(ctr_pool.decrement_mask(x)?);
        Ok(flips)
    }
}
