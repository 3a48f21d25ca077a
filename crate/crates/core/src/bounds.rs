//! Information-theoretic lower bounds for ranking-based search on agreement
//! objectives.
//!
//! A ranking oracle answers each generation with one of finitely many
//! orderings, so a strategy that must identify an n-bit target cannot finish
//! before it has collected n bits of ranking information. The functions here
//! evaluate the resulting query/generation lower bounds for the population
//! shapes we simulate, plus the standard conversion between Monte-Carlo and
//! Las-Vegas guarantees. Logarithms are base 2 throughout: the arguments
//! count bits.

use crate::combinat::{log2_binomial, ordered_bell};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("bound requires {0}")]
    InvalidRegime(&'static str),
    #[error("conversion undefined: success probability {p} does not exceed error floor {p_e}")]
    UndefinedConversion { p: f64, p_e: f64 },
}

/// Population shapes covered by the lower-bound calculator. All are elitist
/// (`+`-selection); the bounds hold a fortiori for comma selection since the
/// oracle interface is identical.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundModel {
    OnePlusOne,
    OnePlusLambda { lambda: usize },
    MuPlusOne { mu: usize },
    MuPlusLambda { mu: usize, lambda: usize },
}

impl BoundModel {
    pub fn mu(self) -> usize {
        match self {
            BoundModel::OnePlusOne | BoundModel::OnePlusLambda { .. } => 1,
            BoundModel::MuPlusOne { mu } | BoundModel::MuPlusLambda { mu, .. } => mu,
        }
    }

    pub fn lambda(self) -> usize {
        match self {
            BoundModel::OnePlusOne | BoundModel::MuPlusOne { .. } => 1,
            BoundModel::OnePlusLambda { lambda } | BoundModel::MuPlusLambda { lambda, .. } => {
                lambda
            }
        }
    }

    pub fn label(self) -> String {
        format!("{}+{}", self.mu(), self.lambda())
    }
}

/// Evaluated bounds for one model at one dimension.
///
/// `las_vegas_lb` and `monte_carlo_lb` are in the model's native unit:
/// queries for single-offspring models, generations when λ > 1. Both carry
/// an additive `-O(1)` slack in the underlying theorems; `slack_order_one`
/// reports that caveat — the slack is never subtracted here.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub model: BoundModel,
    pub n: usize,
    pub las_vegas_lb: f64,
    pub monte_carlo_lb: f64,
    pub bits_per_query: f64,
    pub slack_order_one: bool,
}

impl BoundReport {
    /// One CSV line: `model,n,lv_lb,mc_lb,bits_per_query`.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.4},{:.4},{:.4}",
            self.model.label(),
            self.n,
            self.las_vegas_lb,
            self.monte_carlo_lb,
            self.bits_per_query
        )
    }

    pub const CSV_HEADER: &'static str = "model,n,lv_lb,mc_lb,bits_per_query";
}

/// Lower bounds for the (1+1) model: `(las_vegas, monte_carlo(p))` in
/// queries. The Las-Vegas bound is n−1; a strategy succeeding with
/// probability p needs n + ⌈log₂(1−p)⌉ queries. Results saturate at 0.
pub fn lb_one_plus_one(n: usize, p: f64) -> (u64, u64) {
    assert!((0.0..1.0).contains(&p), "p must lie in [0, 1)");
    let lv = n.saturating_sub(1) as u64;
    let mc = n as i64 + (1.0 - p).log2().ceil() as i64;
    (lv, mc.max(0) as u64)
}

/// Generation lower bound n / log₂(λ+1) for the (1+λ) model: one generation
/// reveals at most the ranking of λ offspring against the parent.
pub fn lb_one_plus_lambda(n: usize, lambda: usize) -> Result<f64, BoundsError> {
    if lambda < 1 {
        return Err(BoundsError::InvalidRegime("λ ≥ 1"));
    }
    Ok(n as f64 / ((lambda + 1) as f64).log2())
}

/// Query lower bound n / log₂(2μ+1) for the (μ+1) model: one offspring can
/// land in one of 2μ+1 ranking slots relative to μ parents.
///
/// The outcome count can be tightened to 2μ in some regimes; we keep the
/// weaker, simpler constant.
pub fn lb_mu_plus_one(n: usize, mu: usize) -> Result<f64, BoundsError> {
    if mu < 1 {
        return Err(BoundsError::InvalidRegime("μ ≥ 1"));
    }
    Ok(n as f64 / ((2 * mu + 1) as f64).log2())
}

/// Per-generation information budget b for the general (μ+λ) model:
/// b = log₂ C(μ+λ, μ) + μ(log₂ μ − 1 − log₂ ln 2) − 1.
///
/// Requires μ, λ ≥ 2, the regime in which the estimate is positive (the
/// budget combines the choice of survivors with the number of dense
/// rankings a population of μ can carry).
pub fn bits_per_generation(mu: usize, lambda: usize) -> Result<f64, BoundsError> {
    if mu < 2 || lambda < 2 {
        return Err(BoundsError::InvalidRegime("μ, λ ≥ 2"));
    }
    let mu_f = mu as f64;
    let b = log2_binomial((mu + lambda) as u64, mu as u64)
        + mu_f * (mu_f.log2() - 1.0 - f64::log2(f64::ln(2.0)))
        - 1.0;
    debug_assert!(b > 0.0);
    Ok(b)
}

/// Generation lower bound n / b for the general (μ+λ) model.
pub fn lb_mu_plus_lambda(n: usize, mu: usize, lambda: usize) -> Result<f64, BoundsError> {
    Ok(n as f64 / bits_per_generation(mu, lambda)?)
}

/// Expected-time (Las-Vegas) bound obtained by restarting a Monte-Carlo
/// strategy: `t / (p − p_e)`, where the strategy finishes within `t` queries
/// with probability at least `p` and `p_e` is the permitted residual error.
pub fn monte_carlo_to_las_vegas(t: f64, p: f64, p_e: f64) -> Result<f64, BoundsError> {
    if !(p > p_e && p <= 1.0 && p_e >= 0.0) {
        return Err(BoundsError::UndefinedConversion { p, p_e });
    }
    Ok(t / (p - p_e))
}

/// Number of distinct dense rankings of `mu` population members (ordered
/// Bell number), exact in u128.
pub fn distinct_rankings(mu: u32) -> Option<u128> {
    ordered_bell(mu)
}

/// Full [`BoundReport`] for `model` at dimension `n` with Monte-Carlo
/// success probability `p`.
///
/// For models other than (1+1) the Monte-Carlo column scales the Las-Vegas
/// bound by (n + log₂(1−p))/n — identifying the target with probability p
/// lowers the information requirement from n to n + log₂(1−p) bits.
pub fn bound_report(model: BoundModel, n: usize, p: f64) -> Result<BoundReport, BoundsError> {
    assert!((0.0..1.0).contains(&p), "p must lie in [0, 1)");
    let mc_scale = (n as f64 + (1.0 - p).log2()) / n as f64;
    let (lv, mc, bits) = match model {
        BoundModel::OnePlusOne => {
            let (lv, mc) = lb_one_plus_one(n, p);
            (lv as f64, mc as f64, 1.0)
        }
        BoundModel::OnePlusLambda { lambda } => {
            let lv = lb_one_plus_lambda(n, lambda)?;
            let bits = ((lambda + 1) as f64).log2() / lambda as f64;
            (lv, lv * mc_scale, bits)
        }
        BoundModel::MuPlusOne { mu } => {
            let lv = lb_mu_plus_one(n, mu)?;
            (lv, lv * mc_scale, ((2 * mu + 1) as f64).log2())
        }
        BoundModel::MuPlusLambda { mu, lambda } => {
            let lv = lb_mu_plus_lambda(n, mu, lambda)?;
            let bits = bits_per_generation(mu, lambda)? / lambda as f64;
            (lv, lv * mc_scale, bits)
        }
    };
    Ok(BoundReport {
        model,
        n,
        las_vegas_lb: lv,
        monte_carlo_lb: mc,
        bits_per_query: bits,
        slack_order_one: !matches!(model, BoundModel::OnePlusOne),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_plus_one_bounds() {
        assert_eq!(lb_one_plus_one(100, 0.5), (99, 99));
        assert_eq!(lb_one_plus_one(100, 1e-12), (99, 100));
        assert_eq!(lb_one_plus_one(100, 0.75), (99, 98));
    }

    #[test]
    fn one_plus_lambda_bounds() {
        assert!((lb_one_plus_lambda(1024, 3).unwrap() - 512.0).abs() < 1e-9);
        let v = lb_one_plus_lambda(1024, 7).unwrap();
        assert!((v - 1024.0 / 3.0).abs() < 0.01);
        // λ = 1 is consistent with the dedicated n−1 bound up to O(1).
        assert!((lb_one_plus_lambda(100, 1).unwrap() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn mu_plus_one_bounds() {
        let v = lb_mu_plus_one(1000, 1).unwrap();
        assert!((v - 1000.0 / 3f64.log2()).abs() < 1e-9);
        assert!((v / 1000.0 - 0.6309).abs() < 1e-4);
        // Strictly decreasing in μ.
        let mut prev = f64::INFINITY;
        for mu in 1..40 {
            let b = lb_mu_plus_one(4096, mu).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn general_bits_per_generation() {
        let b22 = bits_per_generation(2, 2).unwrap();
        assert!((b22 - 2.6424952466109514).abs() < 1e-12);
        let b24 = bits_per_generation(2, 4).unwrap();
        let expect = 15f64.log2() + 2.0 * (-f64::log2(f64::ln(2.0))) - 1.0;
        assert!((b24 - expect).abs() < 1e-12);
        // b grows with λ at fixed μ.
        let mut prev = 0.0;
        for lambda in 2..30 {
            let b = bits_per_generation(3, lambda).unwrap();
            assert!(b > prev);
            prev = b;
        }
        assert_eq!(
            bits_per_generation(1, 5),
            Err(BoundsError::InvalidRegime("μ, λ ≥ 2"))
        );
    }

    #[test]
    fn monte_carlo_conversion() {
        assert_eq!(monte_carlo_to_las_vegas(100.0, 0.5, 0.0).unwrap(), 200.0);
        assert_eq!(monte_carlo_to_las_vegas(8.0, 0.5, 0.25).unwrap(), 32.0);
        assert_eq!(monte_carlo_to_las_vegas(7.0, 1.0, 0.0).unwrap(), 7.0);
        assert!(monte_carlo_to_las_vegas(7.0, 0.3, 0.3).is_err());
    }

    #[test]
    fn report_is_finite_positive_and_renders() {
        for model in [
            BoundModel::OnePlusOne,
            BoundModel::OnePlusLambda { lambda: 8 },
            BoundModel::MuPlusOne { mu: 16 },
            BoundModel::MuPlusLambda { mu: 2, lambda: 2 },
        ] {
            let r = bound_report(model, 1024, 0.5).unwrap();
            assert!(r.las_vegas_lb.is_finite() && r.las_vegas_lb > 0.0);
            assert!(r.monte_carlo_lb.is_finite() && r.monte_carlo_lb > 0.0);
            assert!(r.bits_per_query.is_finite() && r.bits_per_query > 0.0);
            let line = r.csv_line();
            assert_eq!(line.split(',').count(), 5);
        }
        let r = bound_report(BoundModel::OnePlusOne, 100, 0.5).unwrap();
        assert!(r.csv_line().starts_with("1+1,100,99.0000,99.0000,"));
        assert!(!r.slack_order_one);
    }

    #[test]
    fn distinct_rankings_matches_ordered_bell() {
        assert_eq!(distinct_rankings(2), Some(3));
        assert_eq!(distinct_rankings(6), Some(4683));
    }
}
