//! The memory-restricted, ranking-based (μ + λ) / (μ, λ) simulation core.
//!
//! Strategies never see fitness values or the hidden target. Each
//! generation they receive only the current population and its dense
//! ranking ([`PopulationView`]) and answer with a [`GenerationProposal`];
//! the core evaluates the offspring, applies truncation selection, and
//! charges one query per evaluation. This information firewall is
//! structural: [`Algorithm::decide`] has no parameter through which target
//! bits or raw fitness could flow.

use crate::bits::BitString;
use crate::rng::{stream, StreamKind, StreamRng};
use serde::Serialize;

/// Selection scheme: elitist `Plus` keeps the best μ of parents plus
/// offspring; `Comma` keeps the best μ of the offspring alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Plus,
    Comma,
}

/// The hidden instance: an agreement objective with target `z`, where the
/// fitness of `x` is the number of positions on which `x` agrees with `z`.
///
/// Only the simulation core and test/assertion code may touch this type;
/// strategies interact with it exclusively through rankings.
pub struct HiddenInstance {
    target: BitString,
}

impl HiddenInstance {
    pub fn new(target: BitString) -> Self {
        HiddenInstance { target }
    }

    /// An instance with a uniformly random target.
    pub fn random(n: usize, rng: &mut StreamRng) -> Self {
        HiddenInstance {
            target: BitString::random(n, rng),
        }
    }

    pub fn dimension(&self) -> usize {
        self.target.len()
    }

    /// Number of positions where `x` agrees with the hidden target.
    pub fn fitness(&self, x: &BitString) -> usize {
        self.target.agreement(x)
    }

    pub fn is_optimal(&self, x: &BitString) -> bool {
        self.fitness(x) == self.dimension()
    }

    /// The hidden target — for assertions and oracles in tests only.
    pub fn target(&self) -> &BitString {
        &self.target
    }
}

/// What a strategy is allowed to observe: the population members and their
/// dense ranking (0 = best; equal fitness ⇒ equal rank).
#[derive(Clone, Copy)]
pub struct PopulationView<'a> {
    pub members: &'a [BitString],
    pub ranks: &'a [u32],
}

impl<'a> PopulationView<'a> {
    /// Index of the first member with rank 0.
    pub fn best_index(&self) -> usize {
        self.ranks
            .iter()
            .position(|&r| r == 0)
            .expect("non-empty population")
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Dense 0-based ranking of a fitness vector, rank 0 = highest fitness.
pub fn dense_ranks(fitness: &[usize]) -> Vec<u32> {
    let mut levels: Vec<usize> = fitness.to_vec();
    levels.sort_unstable_by(|a, b| b.cmp(a));
    levels.dedup();
    fitness
        .iter()
        .map(|f| levels.iter().position(|l| l == f).unwrap() as u32)
        .collect()
}

/// Why a run failed. Successful runs carry no cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureCause {
    /// The query budget ran out before the optimum was sampled.
    BudgetExhausted,
    /// The trading phase needed a fresh pool bit but the pool was spent.
    TradingPoolEmpty,
    /// A ranking window admitted zero or several consistent block values.
    ReconstructionAmbiguous,
    /// The population no longer matched any decodable phase shape.
    PhaseMisread,
}

impl FailureCause {
    pub fn label(self) -> &'static str {
        match self {
            FailureCause::BudgetExhausted => "budget_exhausted",
            FailureCause::TradingPoolEmpty => "trading_pool_empty",
            FailureCause::ReconstructionAmbiguous => "reconstruction_ambiguous",
            FailureCause::PhaseMisread => "phase_misread",
        }
    }
}

/// One generation's answer from a strategy: λ offspring, an optional slot
/// preference for breaking fitness ties, and an optional anomaly report.
pub struct GenerationProposal {
    pub offspring: Vec<BitString>,
    /// Preference order over candidate slots for equal-fitness ties;
    /// parents occupy slots `0..μ`, offspring `μ..μ+λ`. `None` means
    /// offspring first (in proposal order), then parents (in slot order).
    pub tie_break: Option<Vec<usize>>,
    /// First anomaly the strategy detected while decoding its state, if
    /// any. Recorded on the run; the run itself continues.
    pub anomaly: Option<FailureCause>,
}

impl GenerationProposal {
    pub fn new(offspring: Vec<BitString>) -> Self {
        GenerationProposal {
            offspring,
            tie_break: None,
            anomaly: None,
        }
    }

    pub fn with_anomaly(mut self, cause: FailureCause) -> Self {
        self.anomaly = Some(cause);
        self
    }
}

/// A ranking-based strategy for one population shape (fixed μ, λ, mode).
///
/// Implementations must be stateless between calls: everything they know
/// has to be decoded from the view, and all randomness comes from the
/// per-call stream. The run loop replays cleanly because of this.
pub trait Algorithm {
    /// Registry identifier, e.g. `"two-plus-one"`.
    fn id(&self) -> &'static str;

    fn dimension(&self) -> usize;
    fn mu(&self) -> usize;
    fn lambda(&self) -> usize;
    fn mode(&self) -> Mode;

    /// Produces initial member `index`, seeing only the previously
    /// initialized members and their ranking.
    fn initialize(&self, prior: PopulationView<'_>, index: usize, rng: &mut StreamRng)
        -> BitString;

    /// Produces the next generation's offspring from the ranked view.
    fn decide(&self, view: PopulationView<'_>, rng: &mut StreamRng) -> GenerationProposal;
}

/// Outcome of a single run.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub algo: String,
    pub n: usize,
    pub mu: usize,
    pub lambda: usize,
    pub seed: u64,
    /// Oracle queries charged up to the first optimum hit (on success) or
    /// up to the stop (on failure).
    pub queries: u64,
    /// Generations whose proposal was requested.
    pub generations: u64,
    pub success: bool,
    #[serde(serialize_with = "serialize_cause")]
    pub failure_cause: Option<FailureCause>,
}

fn serialize_cause<S: serde::Serializer>(
    cause: &Option<FailureCause>,
    ser: S,
) -> Result<S::Ok, S::Error> {
    match cause {
        Some(c) => ser.serialize_str(c.label()),
        None => ser.serialize_str("none"),
    }
}

impl RunRecord {
    pub fn failure_label(&self) -> &'static str {
        self.failure_cause.map_or("none", FailureCause::label)
    }
}

/// Hook for tests and instrumentation; the observer sits on the oracle side
/// of the firewall and may inspect anything.
pub trait Observer {
    fn on_init(&mut self, _index: usize, _member: &BitString, _fitness: usize) {}

    /// Called after the proposal of generation `t` (0-based) was produced
    /// and evaluated, before selection.
    fn on_generation(
        &mut self,
        _t: u64,
        _members: &[BitString],
        _ranks: &[u32],
        _proposal: &GenerationProposal,
        _offspring_fitness: &[usize],
    ) {
    }

    /// Called after selection with the surviving population.
    fn on_selected(&mut self, _t: u64, _members: &[BitString], _fitness: &[usize]) {}
}

/// Observer that records nothing.
pub struct NullObserver;

impl Observer for NullObserver {}

/// Applies truncation selection and returns the next population together
/// with its fitness vector, best first.
///
/// Candidates are parents plus offspring in `Plus` mode and offspring alone
/// in `Comma` mode; survivors are the μ fittest, with ties resolved by the
/// proposal's slot preference.
pub fn select_next_population(
    mode: Mode,
    mu: usize,
    parents: &[BitString],
    parent_fitness: &[usize],
    offspring: &[BitString],
    offspring_fitness: &[usize],
    tie_break: Option<&[usize]>,
) -> (Vec<BitString>, Vec<usize>) {
    let lambda = offspring.len();
    let slots = parents.len() + lambda;
    // preference[slot] = position in the tie-break order (lower wins ties).
    let mut preference = vec![usize::MAX; slots];
    match tie_break {
        Some(order) => {
            debug_assert!(order.len() <= slots);
            for (pos, &slot) in order.iter().enumerate() {
                preference[slot] = pos;
            }
        }
        None => {
            for (pos, slot) in (parents.len()..slots).chain(0..parents.len()).enumerate() {
                preference[slot] = pos;
            }
        }
    }

    let mut candidates: Vec<(usize, &BitString, usize)> = Vec::with_capacity(slots);
    if mode == Mode::Plus {
        for (i, (x, &f)) in parents.iter().zip(parent_fitness).enumerate() {
            candidates.push((i, x, f));
        }
    }
    for (j, (x, &f)) in offspring.iter().zip(offspring_fitness).enumerate() {
        candidates.push((parents.len() + j, x, f));
    }
    assert!(
        candidates.len() >= mu,
        "comma selection needs λ ≥ μ (got λ = {lambda}, μ = {mu})"
    );

    candidates.sort_by(|a, b| b.2.cmp(&a.2).then(preference[a.0].cmp(&preference[b.0])));
    candidates.truncate(mu);
    let fitness = candidates.iter().map(|c| c.2).collect();
    let members = candidates.into_iter().map(|c| c.1.clone()).collect();
    (members, fitness)
}

/// Runs `algo` against `instance` until the optimum is sampled or `budget`
/// queries are spent, charging one query per evaluated offspring and μ
/// queries for initialization.
pub fn run(
    algo: &dyn Algorithm,
    instance: &HiddenInstance,
    budget: u64,
    seed: u64,
) -> RunRecord {
    run_with_observer(algo, instance, budget, seed, &mut NullObserver)
}

/// [`run`] with an observer hook for tests.
pub fn run_with_observer(
    algo: &dyn Algorithm,
    instance: &HiddenInstance,
    budget: u64,
    seed: u64,
    observer: &mut dyn Observer,
) -> RunRecord {
    let n = instance.dimension();
    assert_eq!(algo.dimension(), n, "algorithm built for a different n");
    let mu = algo.mu();
    let lambda = algo.lambda();
    if algo.mode() == Mode::Comma {
        assert!(lambda >= mu, "comma selection needs λ ≥ μ");
    }

    let mut members: Vec<BitString> = Vec::with_capacity(mu);
    let mut fitness: Vec<usize> = Vec::with_capacity(mu);
    let mut queries: u64 = 0;
    let mut first_hit: Option<u64> = None;
    let mut anomaly: Option<FailureCause> = None;

    for index in 0..mu {
        let ranks = dense_ranks(&fitness);
        let view = PopulationView {
            members: &members,
            ranks: &ranks,
        };
        let mut rng = stream(seed, StreamKind::Init, index as u64);
        let member = algo.initialize(view, index, &mut rng);
        assert_eq!(member.len(), n, "initializer produced wrong length");
        let f = instance.fitness(&member);
        queries += 1;
        observer.on_init(index, &member, f);
        members.push(member);
        fitness.push(f);
        if f == n {
            first_hit = Some(queries);
            break;
        }
    }

    let mut generations: u64 = 0;
    while first_hit.is_none() && queries < budget {
        let ranks = dense_ranks(&fitness);
        let view = PopulationView {
            members: &members,
            ranks: &ranks,
        };
        let mut rng = stream(seed, StreamKind::Generation, generations);
        let proposal = algo.decide(view, &mut rng);
        generations += 1;
        debug_assert_eq!(proposal.offspring.len(), lambda, "wrong offspring count");
        if anomaly.is_none() {
            anomaly = proposal.anomaly;
        }
        // An ambiguous reconstruction is unrecoverable: the strategy can no
        // longer tell which block value is true, so the run is failed by
        // definition and evaluating further queries is pure waste.
        if proposal.anomaly == Some(FailureCause::ReconstructionAmbiguous) {
            break;
        }

        let mut offspring_fitness = Vec::with_capacity(lambda);
        for child in &proposal.offspring {
            debug_assert_eq!(child.len(), n, "offspring has wrong length");
            let f = instance.fitness(child);
            queries += 1;
            offspring_fitness.push(f);
            if f == n {
                first_hit = Some(queries);
                break;
            }
        }
        observer.on_generation(
            generations - 1,
            &members,
            &ranks,
            &proposal,
            &offspring_fitness,
        );
        if first_hit.is_some() {
            break;
        }

        let (next, next_fitness) = select_next_population(
            algo.mode(),
            mu,
            &members,
            &fitness,
            &proposal.offspring,
            &offspring_fitness,
            proposal.tie_break.as_deref(),
        );
        members = next;
        fitness = next_fitness;
        observer.on_selected(generations - 1, &members, &fitness);
    }

    let success = first_hit.is_some();
    RunRecord {
        algo: algo.id().to_string(),
        n,
        mu,
        lambda,
        seed,
        queries,
        generations,
        success,
        failure_cause: if success {
            None
        } else {
            anomaly.or(Some(FailureCause::BudgetExhausted))
        },
    }
}
