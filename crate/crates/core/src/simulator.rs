//! Epoch-based interaction protocol and regret accounting.
//!
//! An epoch offers one assortment repeatedly until the outside option is
//! chosen (that terminal step belongs to the epoch). Every time step is
//! charged the expected-revenue gap `R(S*, v) − R(S_ℓ, v)` of the set on
//! offer. An epoch cut short by the horizon is charged but never fed back
//! into the posterior, since its no-click terminator was not observed.

use std::io::{self, Write};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assortment::{optimize, optimize_brute_force, OptimizationResult};
use crate::error::{Error, Result};
use crate::mnl::{sample_choice, Assortment, ChoiceOutcome, MnlInstance};
use crate::policy::{select_assortment, Geometry, PolicyConfig, PosteriorState, SampleSet, Selection};

/// Largest instance on which the true optimum is cross-checked by enumeration.
pub const ORACLE_CHECK_LIMIT: usize = 12;
/// Value agreement required between the two solvers.
pub const ORACLE_TOLERANCE: f64 = 1e-7;
/// Fraction of empty-offer epochs above which a run is flagged.
pub const EMPTY_OFFER_FLAG: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub index: u64,
    /// Zero-based time step at which the epoch began.
    pub t_start: u64,
    pub offered_set: Assortment,
    /// `(item, picks)` for every offered item, in set order.
    pub picks: Vec<(usize, u64)>,
    /// Time steps consumed, including the terminal outside-option step.
    pub length: u64,
    /// `None` for forced-exploration epochs and policies without samples.
    pub optimistic: Option<bool>,
    pub truncated: bool,
}

impl EpochRecord {
    pub fn total_picks(&self) -> u64 {
        self.picks.iter().map(|(_, c)| c).sum()
    }

    pub fn picks_of(&self, item: usize) -> Option<u64> {
        self.picks.iter().find(|(i, _)| *i == item).map(|(_, c)| *c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrajectory {
    /// Cumulative expected regret after each of the `T` steps.
    pub cumulative_regret: Vec<f64>,
    pub optimal_value: f64,
    pub optimal_set: Assortment,
    pub per_epoch: Vec<EpochRecord>,
}

impl RegretTrajectory {
    pub fn final_regret(&self) -> f64 {
        self.cumulative_regret.last().copied().unwrap_or(0.0)
    }

    fn policy_epochs(&self) -> impl Iterator<Item = &EpochRecord> {
        self.per_epoch.iter().filter(|r| r.optimistic.is_some())
    }

    /// Share of policy-chosen epochs whose sample dominated `v` on `S*`.
    pub fn optimistic_fraction(&self) -> f64 {
        let (hits, total) = self.policy_epochs().fold((0usize, 0usize), |(h, t), r| {
            (h + usize::from(r.optimistic == Some(true)), t + 1)
        });
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }

    /// Share of policy-chosen epochs that offered the empty set.
    pub fn empty_offer_fraction(&self) -> f64 {
        let (empty, total) = self.policy_epochs().fold((0usize, 0usize), |(e, t), r| {
            (e + usize::from(r.offered_set.is_empty()), t + 1)
        });
        if total == 0 {
            0.0
        } else {
            empty as f64 / total as f64
        }
    }

    pub fn empty_offer_flagged(&self) -> bool {
        self.empty_offer_fraction() > EMPTY_OFFER_FLAG
    }

    /// Writes `epoch,t_start,length,set_items,optimistic,truncated`.
    /// `set_items` is space-separated; `optimistic` is `na` for exploration.
    pub fn write_epoch_log<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "epoch,t_start,length,set_items,optimistic,truncated")?;
        for r in &self.per_epoch {
            let optimistic = match r.optimistic {
                Some(true) => "true",
                Some(false) => "false",
                None => "na",
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.index, r.t_start, r.length, r.offered_set, optimistic, r.truncated
            )?;
        }
        Ok(())
    }
}

/// Anything that picks the next assortment from the running statistics.
pub trait AssortmentPolicy {
    fn initial_state(&self, num_items: usize) -> PosteriorState;

    /// Whether to run one single-item epoch per item before the main loop.
    fn explores(&self) -> bool;

    fn select(
        &mut self,
        state: &PosteriorState,
        geometry: Geometry<'_>,
        epoch: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Selection>;
}

impl AssortmentPolicy for PolicyConfig {
    fn initial_state(&self, num_items: usize) -> PosteriorState {
        PolicyConfig::initial_state(self, num_items)
    }

    fn explores(&self) -> bool {
        self.needs_exploration()
    }

    fn select(
        &mut self,
        state: &PosteriorState,
        geometry: Geometry<'_>,
        epoch: u64,
        rng: &mut dyn RngCore,
    ) -> Result<Selection> {
        select_assortment(self, state, geometry, epoch, rng)
    }
}

/// Always offers the same set; used to pin regret of known strategies.
#[derive(Debug, Clone)]
pub struct FixedAssortment(pub Assortment);

impl AssortmentPolicy for FixedAssortment {
    fn initial_state(&self, num_items: usize) -> PosteriorState {
        PosteriorState::fresh(num_items)
    }

    fn explores(&self) -> bool {
        false
    }

    fn select(
        &mut self,
        _state: &PosteriorState,
        _geometry: Geometry<'_>,
        _epoch: u64,
        _rng: &mut dyn RngCore,
    ) -> Result<Selection> {
        Ok(Selection {
            set: self.0.clone(),
            samples: SampleSet::default(),
        })
    }
}

/// What an observer sees at the start of each policy-chosen epoch.
#[derive(Debug)]
pub struct EpochView<'a> {
    pub epoch: u64,
    pub time: u64,
    pub state: &'a PosteriorState,
}

/// Offers `set` until the outside option is chosen or `remaining_steps`
/// steps are used. `index` and `t_start` of the record are left at zero.
pub fn run_epoch<R: Rng + ?Sized>(
    instance: &MnlInstance,
    set: &Assortment,
    remaining_steps: u64,
    rng: &mut R,
) -> Result<EpochRecord> {
    if remaining_steps == 0 {
        return Err(Error::InvalidInput("epoch needs at least one step".into()));
    }
    set.check_range(instance.num_items())?;
    let mut counts = vec![0u64; set.len()];
    let mut length = 0;
    let mut truncated = false;
    loop {
        if length == remaining_steps {
            truncated = true;
            break;
        }
        length += 1;
        match sample_choice(set, instance.weights(), rng)? {
            ChoiceOutcome::Outside => break,
            ChoiceOutcome::Item(i) => {
                let pos = set.items().binary_search(&i).expect("choice lies in offered set");
                counts[pos] += 1;
            }
        }
    }
    Ok(EpochRecord {
        index: 0,
        t_start: 0,
        offered_set: set.clone(),
        picks: set.items().iter().copied().zip(counts).collect(),
        length,
        optimistic: None,
        truncated,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationOutcome {
    pub consumed_steps: u64,
    pub records: Vec<EpochRecord>,
    /// The horizon ran out before every item was explored.
    pub truncated: bool,
}

/// Offers each singleton `{i}` for one epoch and sets `n_i = 1`,
/// `V_i = picks`. Stops early if the horizon is exhausted; the interrupted
/// item keeps its fresh counts.
pub fn initial_exploration<R: Rng + ?Sized>(
    instance: &MnlInstance,
    state: &mut PosteriorState,
    rng: &mut R,
) -> Result<ExplorationOutcome> {
    if state.num_items() != instance.num_items() {
        return Err(Error::InvalidInput(format!(
            "posterior has {} items, instance has {}",
            state.num_items(),
            instance.num_items()
        )));
    }
    if state.epochs().iter().chain(state.picks()).any(|&c| c != 0) {
        return Err(Error::InvalidInput(
            "forced exploration requires a fresh posterior".into(),
        ));
    }
    let horizon = instance.horizon();
    let mut time = 0;
    let mut records = Vec::with_capacity(instance.num_items());
    for item in 0..instance.num_items() {
        if time >= horizon {
            return Ok(ExplorationOutcome {
                consumed_steps: time,
                records,
                truncated: true,
            });
        }
        let single = Assortment::new(vec![item], instance.num_items())?;
        let mut record = run_epoch(instance, &single, horizon - time, rng)?;
        record.index = item as u64 + 1;
        record.t_start = time;
        time += record.length;
        let truncated = record.truncated;
        if !truncated {
            state.set_counts(item, 1, record.total_picks());
        }
        records.push(record);
        if truncated {
            return Ok(ExplorationOutcome {
                consumed_steps: time,
                records,
                truncated: true,
            });
        }
    }
    Ok(ExplorationOutcome {
        consumed_steps: time,
        records,
        truncated: false,
    })
}

/// True iff `mu_i ≥ v_i` for every `i ∈ S*` (raw, unclamped `mu`).
pub fn detect_optimistic(mu: &[f64], true_weights: &[f64], optimal_set: &Assortment) -> bool {
    optimal_set.items().iter().all(|&i| mu[i] >= true_weights[i])
}

/// True optimum via the threshold solver, cross-checked against
/// enumeration on small instances.
pub fn optimal_assortment(instance: &MnlInstance) -> Result<OptimizationResult> {
    let k = instance.cardinality_cap();
    let best = optimize(instance.weights(), instance.revenues(), k)?;
    if instance.num_items() <= ORACLE_CHECK_LIMIT {
        let oracle = optimize_brute_force(instance.weights(), instance.revenues(), k)?;
        if (oracle.best_value - best.best_value).abs() > ORACLE_TOLERANCE {
            return Err(Error::OptimizerMismatch {
                threshold: best.best_value,
                brute_force: oracle.best_value,
            });
        }
    }
    Ok(best)
}

/// Double-double running sum; exact for long runs of equal increments.
#[derive(Debug, Default, Clone, Copy)]
struct CompensatedSum {
    hi: f64,
    lo: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let s = self.hi + x;
        let bb = s - self.hi;
        let err = (self.hi - (s - bb)) + (x - bb);
        let lo = self.lo + err;
        self.hi = s + lo;
        self.lo = lo - (self.hi - s);
    }

    fn value(&self) -> f64 {
        self.hi
    }
}

struct RegretLedger<'a> {
    instance: &'a MnlInstance,
    optimal_value: f64,
    sum: CompensatedSum,
    cumulative: Vec<f64>,
}

impl RegretLedger<'_> {
    fn charge(&mut self, set: &Assortment, steps: u64) -> Result<()> {
        let gap = (self.optimal_value - self.instance.expected_revenue(set)?).max(0.0);
        for _ in 0..steps {
            self.sum.add(gap);
            self.cumulative.push(self.sum.value());
        }
        Ok(())
    }
}

fn check_instance(instance: &MnlInstance) -> Result<()> {
    if instance.horizon_times_cap() < 3.0 {
        return Err(Error::InvalidConfig(format!(
            "T·K = {} must be at least 3",
            instance.horizon_times_cap()
        )));
    }
    Ok(())
}

/// Runs one policy for the full horizon with a stream seeded by `seed`.
pub fn run_simulation(
    instance: &MnlInstance,
    config: &PolicyConfig,
    seed: u64,
) -> Result<RegretTrajectory> {
    config.validate()?;
    let mut policy = *config;
    run_policy(instance, &mut policy, seed, |_| {})
}

/// General driver: any policy, plus an observer called before each
/// policy-chosen epoch.
pub fn run_policy<P, F>(
    instance: &MnlInstance,
    policy: &mut P,
    seed: u64,
    mut observer: F,
) -> Result<RegretTrajectory>
where
    P: AssortmentPolicy + ?Sized,
    F: FnMut(&EpochView<'_>),
{
    check_instance(instance)?;
    let optimum = optimal_assortment(instance)?;
    let horizon = instance.horizon();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ledger = RegretLedger {
        instance,
        optimal_value: optimum.best_value,
        sum: CompensatedSum::default(),
        cumulative: Vec::with_capacity(horizon as usize),
    };
    let mut state = policy.initial_state(instance.num_items());
    let mut per_epoch = Vec::new();
    let mut time = 0;

    if policy.explores() {
        let outcome = initial_exploration(instance, &mut state, &mut rng)?;
        for record in &outcome.records {
            ledger.charge(&record.offered_set, record.length)?;
        }
        time = outcome.consumed_steps;
        per_epoch.extend(outcome.records);
    }

    let geometry = Geometry::from(instance);
    while time < horizon {
        let epoch = per_epoch.len() as u64 + 1;
        observer(&EpochView {
            epoch,
            time,
            state: &state,
        });
        let selection = policy.select(&state, geometry, epoch, &mut rng)?;
        let mut record = run_epoch(instance, &selection.set, horizon - time, &mut rng)?;
        record.index = epoch;
        record.t_start = time;
        if !selection.samples.mu.is_empty() {
            record.optimistic = Some(detect_optimistic(
                &selection.samples.mu,
                instance.weights(),
                &optimum.best_set,
            ));
        }
        ledger.charge(&record.offered_set, record.length)?;
        if !record.truncated {
            state.update(&record.offered_set, &record.picks)?;
        }
        time += record.length;
        per_epoch.push(record);
    }

    Ok(RegretTrajectory {
        cumulative_regret: ledger.cumulative,
        optimal_value: optimum.best_value,
        optimal_set: optimum.best_set,
        per_epoch,
    })
}
