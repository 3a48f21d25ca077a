//! Baseline strategies: plain single-bit local search and blind resampling.

use crate::bits::BitString;
use crate::model::{Algorithm, GenerationProposal, Mode, PopulationView};
use crate::rng::StreamRng;
use rand::Rng;

/// Elitist single-bit local search: one uniform flip per generation,
/// accepted when fitness does not drop. The classic coupon-collector
/// baseline the constructions are measured against.
pub struct LocalSearch {
    n: usize,
}

impl LocalSearch {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        LocalSearch { n }
    }
}

impl Algorithm for LocalSearch {
    fn id(&self) -> &'static str {
        "rls"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn mu(&self) -> usize {
        1
    }

    fn lambda(&self) -> usize {
        1
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
        BitString::random(self.n, rng)
    }

    fn decide(&self, view: PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal {
        let i = rng.gen_range(0..self.n);
        GenerationProposal::new(vec![view.members[0].with_flips(&[i])])
    }
}

/// Memoryless uniform resampling under comma selection: each generation
/// discards the parent and draws a fresh uniform string. Needs 2^n
/// expected queries — the floor that any non-trivial ranking-based
/// strategy has to beat.
pub struct BlindResample {
    n: usize,
}

impl BlindResample {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        BlindResample { n }
    }
}

impl Algorithm for BlindResample {
    fn id(&self) -> &'static str {
        "one-comma-one"
    }

    fn dimension(&self) -> usize {
        self.n
    }

    fn mu(&self) -> usize {
        1
    }

    fn lambda(&self) -> usize {
        1
    }

    fn mode(&self) -> Mode {
        Mode::Comma
    }

    fn initialize(
        &self,
        _prior: PopulationView<'_>,
        _index: usize,
        rng: &mut StreamRng,
    ) -> BitString {
        BitString::random(self.n, rng)
    }

    fn decide(&self, _view: PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal {
        GenerationProposal::new(vec![BitString::random(self.n, rng)])
    }
}
