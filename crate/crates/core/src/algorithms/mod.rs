//! The strategy suite and its registry.
//!
//! Every strategy here plays the same game: memory restricted to the
//! population, information restricted to rankings, elitist (`+`) or
//! non-elitist (`,`) truncation selection. The constructions encode their
//! entire program state *inside the population's bit strings* — phase
//! flags, ranking counters, staging pools — and decode it fresh every
//! generation.

pub mod comma;
pub mod mu_plus_one;
pub mod one_plus_lambda;
pub mod one_plus_one;
pub mod simple;
pub mod two_plus_one;

pub use comma::BlockWalk;
pub use mu_plus_one::WindowMachine;
pub use one_plus_lambda::BlockMachine;
pub use one_plus_one::TradingMachine;
pub use simple::{BlindResample, LocalSearch};
pub use two_plus_one::PairWalk;

use crate::layout::LayoutError;
use crate::model::Algorithm;

/// All registry identifiers, in presentation order.
pub const ALGORITHM_IDS: &[&str] = &[
    "two-plus-one",
    "one-plus-one-mc",
    "one-plus-lambda",
    "mu-plus-one",
    "one-comma-two",
    "one-comma-lambda",
    "rls",
    "one-comma-one",
];

/// Why a strategy could not be built.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("unknown algorithm id {0:?}")]
    UnknownAlgorithm(String),
    #[error("algorithm {id}: {message}")]
    BadParameters { id: &'static str, message: String },
    #[error(transparent)]
    Layout(#[from] LayoutError),
}

fn bad(id: &'static str, message: impl Into<String>) -> BuildError {
    BuildError::BadParameters {
        id,
        message: message.into(),
    }
}

/// Checks a population-shape parameter: `0` means "use the default".
fn fixed_shape(id: &'static str, name: &str, got: usize, want: usize) -> Result<(), BuildError> {
    if got == 0 || got == want {
        Ok(())
    } else {
        Err(bad(id, format!("{name} is fixed at {want}, got {got}")))
    }
}

/// Builds a strategy by registry id. `mu` and `lambda` may be 0 where the
/// strategy fixes them; strategies with a free parameter require it.
pub fn build(
    id: &str,
    n: usize,
    mu: usize,
    lambda: usize,
) -> Result<Box<dyn Algorithm>, BuildError> {
    if n == 0 {
        return Err(bad("", "dimension must be positive"));
    }
    match id {
        "two-plus-one" => {
            fixed_shape("two-plus-one", "μ", mu, 2)?;
            fixed_shape("two-plus-one", "λ", lambda, 1)?;
            Ok(Box::new(PairWalk::new(n)))
        }
        "one-plus-one-mc" => {
            fixed_shape("one-plus-one-mc", "μ", mu, 1)?;
            fixed_shape("one-plus-one-mc", "λ", lambda, 1)?;
            Ok(Box::new(TradingMachine::new(n)?))
        }
        "one-plus-lambda" => {
            fixed_shape("one-plus-lambda", "μ", mu, 1)?;
            if lambda < 2 {
                return Err(bad("one-plus-lambda", "needs λ ≥ 2"));
            }
            Ok(Box::new(BlockMachine::new(n, lambda)?))
        }
        "mu-plus-one" => {
            fixed_shape("mu-plus-one", "λ", lambda, 1)?;
            if mu < 3 {
                return Err(bad("mu-plus-one", "needs μ ≥ 3"));
            }
            Ok(Box::new(WindowMachine::new(n, mu)?))
        }
        "one-comma-two" => {
            fixed_shape("one-comma-two", "μ", mu, 1)?;
            fixed_shape("one-comma-two", "λ", lambda, 2)?;
            Ok(Box::new(BlockWalk::pair(n)))
        }
        "one-comma-lambda" => {
            fixed_shape("one-comma-lambda", "μ", mu, 1)?;
            if lambda < 2 {
                return Err(bad("one-comma-lambda", "needs λ ≥ 2"));
            }
            Ok(Box::new(BlockWalk::with_lambda(n, lambda)))
        }
        "rls" => {
            fixed_shape("rls", "μ", mu, 1)?;
            fixed_shape("rls", "λ", lambda, 1)?;
            Ok(Box::new(LocalSearch::new(n)))
        }
        "one-comma-one" => {
            fixed_shape("one-comma-one", "μ", mu, 1)?;
            fixed_shape("one-comma-one", "λ", lambda, 1)?;
            Ok(Box::new(BlindResample::new(n)))
        }
        other => Err(BuildError::UnknownAlgorithm(other.to_string())),
    }
}

/// Default query budget for a strategy at dimension `n`, as a multiple
/// `factor` of the strategy's natural linear scale: `factor·n` for
/// one-offspring strategies, scaled by λ/⌊log2 λ⌋ for parallel ones, and
/// `factor·2^n` for blind resampling (which needs exponential time).
pub fn default_budget(id: &str, n: usize, lambda: usize, factor: u64) -> u64 {
    let n64 = n as u64;
    match id {
        "one-comma-one" => factor.saturating_mul(1u64 << n.min(50)),
        "one-plus-lambda" | "one-comma-lambda" => {
            let ell = if lambda >= 2 {
                (lambda as f64).log2().floor() as u64
            } else {
                1
            };
            1 + factor * n64 * lambda as u64 / ell.max(1)
        }
        _ => factor * n64,
    }
}
