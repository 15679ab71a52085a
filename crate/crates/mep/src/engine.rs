//! Steady-state island-model evolutionary engine.
//!
//! Subpopulations evolve independently within a generation and exchange
//! their best individuals along a ring afterwards. Offspring replace the
//! worst individual of their subpopulation only when strictly better, so
//! the best training fitness never regresses. The individual reported at
//! the end is chosen by validation error among each generation's
//! training-best, which guards against overfitting the training split.
//!
//! Every subpopulation owns a counter-based generator seeded from the
//! master seed, and migration is a synchronization barrier, so results are
//! identical whether subpopulations evolve on one thread or many.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::eval::evaluate;
use crate::fitness::{
    fit_strategy, AssignmentMode, ClassifierModel, FitnessError, FitnessReport, Strategy,
};
use crate::genome::{crossover, mutate, Chromosome, GenomeError, PrimitiveSet, VariationParams};

/// Derives a decorrelated seed from a base seed and an index.
///
/// One SplitMix64 step on `base + (index + 1) * 0x9E3779B97F4A7C15`, using
/// the standard finalizer constants. Documented so other implementations can
/// reproduce run and subpopulation seeds exactly.
pub fn mix_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionConfig {
    pub subpop_size: usize,
    pub num_subpops: usize,
    /// Best-individual copies sent around the ring after every generation.
    pub migration_rate: usize,
    pub chromosome_length: usize,
    pub num_generations: usize,
    pub tournament_size: usize,
    pub strategy: Strategy,
    pub wta_d_assignment: AssignmentMode,
    pub variation: VariationParams,
    pub primitives: PrimitiveSet,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("subpopulation size must be at least 2")]
    SubpopTooSmall,
    #[error("need at least one subpopulation")]
    NoSubpops,
    #[error("tournament size must be in [1, subpopulation size]")]
    BadTournamentSize,
    #[error("chromosome length {length} is shorter than the {classes} classes")]
    LengthBelowClasses { length: usize, classes: usize },
    #[error("primitive set declares {declared} variables, dataset has {actual} features")]
    VariableCountMismatch { declared: usize, actual: usize },
    #[error("the {0} split is empty")]
    EmptySplit(&'static str),
    #[error("splits disagree on feature width or class count")]
    SplitMismatch,
    #[error("strategy {strategy} requires 2 classes, dataset has {classes}")]
    StrategyNeedsBinary { strategy: Strategy, classes: usize },
    #[error("class {0} has no training rows")]
    EmptyTrainClass(usize),
    #[error("no individual ever produced a usable model")]
    NoViableModel,
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Fitness(#[from] FitnessError),
}

/// A chromosome with its cached training fitness.
#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub chromosome: Chromosome,
    pub report: FitnessReport,
}

/// One island: individuals plus the generator that drives their evolution.
#[derive(Debug, Clone)]
pub struct Subpopulation {
    individuals: Vec<Individual>,
    rng: ChaCha8Rng,
    offspring_evaluated: usize,
}

impl Subpopulation {
    pub fn new(individuals: Vec<Individual>, seed: u64) -> Subpopulation {
        Subpopulation {
            individuals,
            rng: ChaCha8Rng::seed_from_u64(seed),
            offspring_evaluated: 0,
        }
    }

    pub fn individuals(&self) -> &[Individual] {
        &self.individuals
    }

    pub fn offspring_evaluated(&self) -> usize {
        self.offspring_evaluated
    }

    /// Index of the best individual (lowest fitness, ties to the lowest index).
    pub fn best_index(&self) -> usize {
        let mut best = 0;
        for (i, individual) in self.individuals.iter().enumerate() {
            if individual.report.fitness < self.individuals[best].report.fitness {
                best = i;
            }
        }
        best
    }

    /// Index of the worst individual (highest fitness, ties to the lowest index).
    pub fn worst_index(&self) -> usize {
        self.individuals
            .iter()
            .enumerate()
            .fold(0, |worst, (i, ind)| {
                if ind.report.fitness > self.individuals[worst].report.fitness {
                    i
                } else {
                    worst
                }
            })
    }

    pub fn best(&self) -> &Individual {
        &self.individuals[self.best_index()]
    }
}

/// Picks a parent by sampling `size` individuals uniformly with replacement
/// and returning the index of the fittest (ties keep the first sampled).
pub fn tournament_select(
    individuals: &[Individual],
    size: usize,
    rng: &mut impl Rng,
) -> usize {
    let mut best = rng.gen_range(0..individuals.len());
    for _ in 1..size {
        let candidate = rng.gen_range(0..individuals.len());
        if individuals[candidate].report.fitness < individuals[best].report.fitness {
            best = candidate;
        }
    }
    best
}

/// Ring migration: a copy of every subpopulation's best replaces the worst
/// of the next subpopulation when strictly better, `rate` times. Decisions
/// within a round use pre-round snapshots, so the visit order of the ring
/// does not affect the outcome.
pub fn migrate(subpops: &mut [Subpopulation], rate: usize) {
    if subpops.len() < 2 {
        return;
    }
    for _ in 0..rate {
        let snapshots: Vec<(Individual, usize, f64)> = subpops
            .iter()
            .map(|s| {
                let worst = s.worst_index();
                (
                    s.best().clone(),
                    worst,
                    s.individuals[worst].report.fitness,
                )
            })
            .collect();
        for s in 0..subpops.len() {
            let target = (s + 1) % subpops.len();
            let (migrant, worst_index, worst_fitness) = (
                &snapshots[s].0,
                snapshots[target].1,
                snapshots[target].2,
            );
            if migrant.report.fitness < worst_fitness {
                subpops[target].individuals[worst_index] = migrant.clone();
            }
        }
    }
}

/// Runs the per-generation work of each subpopulation, in any order or in
/// parallel. Implementations must call `step` exactly once per
/// subpopulation; determinism is guaranteed by each subpopulation owning
/// its generator.
pub trait GenerationExecutor {
    fn run_generation(
        &self,
        subpops: &mut [Subpopulation],
        step: &(dyn Fn(&mut Subpopulation) + Sync),
    );
}

/// Evolves subpopulations one after another on the current thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequentialExecutor;

impl GenerationExecutor for SequentialExecutor {
    fn run_generation(
        &self,
        subpops: &mut [Subpopulation],
        step: &(dyn Fn(&mut Subpopulation) + Sync),
    ) {
        for subpop in subpops {
            step(subpop);
        }
    }
}

/// Per-generation progress snapshot handed to observers.
#[derive(Debug, Clone)]
pub struct GenerationLog<'a> {
    pub generation: usize,
    /// Best training fitness of each subpopulation, in ring order.
    pub subpop_best: &'a [f64],
    /// Validation error of the current training-best individual, when it has
    /// a usable model.
    pub validation_error_percent: Option<f64>,
}

/// Outcome of one evolutionary run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub best_model: ClassifierModel,
    pub train_error_percent: f64,
    pub validation_error_percent: f64,
    pub test_error_percent: f64,
    /// Best training fitness after initialization and after every
    /// generation; length `num_generations + 1`, non-increasing.
    pub trace: Vec<f64>,
    pub seed: u64,
    /// Offspring evaluated per subpopulation over the whole run.
    pub offspring_evaluated: Vec<usize>,
}

struct StepContext<'a> {
    config: &'a EvolutionConfig,
    train: &'a Dataset,
}

fn fit_chromosome(
    chromosome: &Chromosome,
    config: &EvolutionConfig,
    train: &Dataset,
) -> Result<FitnessReport, EngineError> {
    let ev = evaluate(chromosome, &train.features)
        .map_err(|e| FitnessError::BadRow(alloc::string::ToString::to_string(&e)))?;
    Ok(fit_strategy(
        config.strategy,
        config.wta_d_assignment,
        &ev,
        &train.labels,
        chromosome.threshold,
    )?)
}

/// One generation of steady-state evolution inside a single subpopulation:
/// `subpop_size` offspring are created in pairs, fitted on the training
/// split, and each replaces the current worst individual when strictly
/// better. With an odd subpopulation size the trailing pair contributes
/// only its first offspring.
fn evolve_generation(subpop: &mut Subpopulation, ctx: &StepContext<'_>) {
    let config = ctx.config;
    let quota = config.subpop_size;
    let mut produced = 0usize;
    while produced < quota {
        let first = tournament_select(&subpop.individuals, config.tournament_size, &mut subpop.rng);
        let second =
            tournament_select(&subpop.individuals, config.tournament_size, &mut subpop.rng);
        let (o1, o2) = if subpop.rng.gen_bool(config.variation.p_crossover) {
            crossover(
                &subpop.individuals[first].chromosome,
                &subpop.individuals[second].chromosome,
                config.variation.crossover_mode,
                &mut subpop.rng,
            )
            .expect("individuals share one configuration")
        } else {
            (
                subpop.individuals[first].chromosome.clone(),
                subpop.individuals[second].chromosome.clone(),
            )
        };
        for offspring in [o1, o2] {
            if produced == quota {
                break;
            }
            let offspring = mutate(
                &offspring,
                &config.primitives,
                &config.variation,
                &mut subpop.rng,
            );
            let report = fit_chromosome(&offspring, config, ctx.train)
                .expect("fitting cannot fail after config validation");
            subpop.offspring_evaluated += 1;
            produced += 1;
            let worst = subpop.worst_index();
            if report.fitness < subpop.individuals[worst].report.fitness {
                subpop.individuals[worst] = Individual {
                    chromosome: offspring,
                    report,
                };
            }
        }
    }
}

fn validate_inputs(
    config: &EvolutionConfig,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
) -> Result<(), EngineError> {
    if config.subpop_size < 2 {
        return Err(EngineError::SubpopTooSmall);
    }
    if config.num_subpops == 0 {
        return Err(EngineError::NoSubpops);
    }
    if config.tournament_size == 0 || config.tournament_size > config.subpop_size {
        return Err(EngineError::BadTournamentSize);
    }
    config.primitives.validate()?;
    config.variation.validate()?;
    if config.chromosome_length == 0 {
        return Err(EngineError::Genome(GenomeError::EmptyLength));
    }

    for (name, split) in [("training", train), ("validation", validation), ("test", test)] {
        if split.num_rows() == 0 {
            return Err(EngineError::EmptySplit(name));
        }
    }
    let width = train.num_features();
    let classes = train.num_classes();
    if validation.num_features() != width
        || test.num_features() != width
        || validation.num_classes() != classes
        || test.num_classes() != classes
    {
        return Err(EngineError::SplitMismatch);
    }
    if config.primitives.num_variables != width {
        return Err(EngineError::VariableCountMismatch {
            declared: config.primitives.num_variables,
            actual: width,
        });
    }
    if config.strategy.requires_binary() && classes != 2 {
        return Err(EngineError::StrategyNeedsBinary {
            strategy: config.strategy,
            classes,
        });
    }
    if matches!(config.strategy, Strategy::WtaF | Strategy::WtaS | Strategy::WtaD)
        && config.chromosome_length < classes
    {
        return Err(EngineError::LengthBelowClasses {
            length: config.chromosome_length,
            classes,
        });
    }
    if matches!(config.strategy, Strategy::Cc) {
        if let Some(class) = train.labels.class_counts().iter().position(|&c| c == 0) {
            return Err(EngineError::EmptyTrainClass(class));
        }
    }
    Ok(())
}

struct BestOfRun {
    validation_errors: usize,
    train_fitness: f64,
    train_misclassified: usize,
    model: ClassifierModel,
}

/// Tracks the training-best individual of the current generation against the
/// best-by-validation seen so far. Ties prefer lower training fitness, then
/// the earlier generation.
fn consider_candidate(
    best: &mut Option<BestOfRun>,
    subpops: &[Subpopulation],
    config: &EvolutionConfig,
    train: &Dataset,
    validation: &Dataset,
) -> Option<f64> {
    let mut leader: Option<&Individual> = None;
    for subpop in subpops {
        let candidate = subpop.best();
        if leader.is_none_or(|l| candidate.report.fitness < l.report.fitness) {
            leader = Some(candidate);
        }
    }
    let leader = leader.expect("at least one subpopulation");
    let decision = leader.report.decision.clone()?;
    let model = ClassifierModel {
        strategy: config.strategy,
        chromosome: leader.chromosome.clone(),
        num_classes: train.num_classes(),
        num_features: train.num_features(),
        label_names: train.label_names.clone(),
        decision,
    };
    let eval = model
        .errors_on(validation)
        .expect("validation split was checked against the training split");
    let replace = match best {
        None => true,
        Some(current) => {
            eval.errors < current.validation_errors
                || (eval.errors == current.validation_errors
                    && leader.report.fitness < current.train_fitness)
        }
    };
    if replace {
        *best = Some(BestOfRun {
            validation_errors: eval.errors,
            train_fitness: leader.report.fitness,
            train_misclassified: leader.report.misclassified,
            model,
        });
    }
    Some(eval.error_percent())
}

fn global_best_fitness(subpops: &[Subpopulation]) -> f64 {
    subpops
        .iter()
        .map(|s| s.best().report.fitness)
        .fold(f64::INFINITY, f64::min)
}

/// Runs the full evolutionary loop and returns the best-of-run model with
/// its errors on all three splits.
pub fn run(
    config: &EvolutionConfig,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
    executor: &impl GenerationExecutor,
) -> Result<RunResult, EngineError> {
    run_with_observer(config, train, validation, test, executor, |_| {})
}

/// [`run`] with a per-generation observer for progress logging.
pub fn run_with_observer(
    config: &EvolutionConfig,
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
    executor: &impl GenerationExecutor,
    mut observer: impl FnMut(&GenerationLog<'_>),
) -> Result<RunResult, EngineError> {
    validate_inputs(config, train, validation, test)?;

    let mut subpops = Vec::with_capacity(config.num_subpops);
    for index in 0..config.num_subpops {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(config.master_seed, index as u64));
        let mut individuals = Vec::with_capacity(config.subpop_size);
        for _ in 0..config.subpop_size {
            let chromosome = Chromosome::random(
                &config.primitives,
                config.chromosome_length,
                config.variation.constants_interval,
                &mut rng,
            )?;
            let report = fit_chromosome(&chromosome, config, train)?;
            individuals.push(Individual { chromosome, report });
        }
        let mut subpop = Subpopulation::new(individuals, 0);
        subpop.rng = rng;
        subpops.push(subpop);
    }

    let mut trace = Vec::with_capacity(config.num_generations + 1);
    let mut best: Option<BestOfRun> = None;
    let mut subpop_best: Vec<f64> = Vec::with_capacity(config.num_subpops);

    let record = |subpops: &[Subpopulation],
                      generation: usize,
                      trace: &mut Vec<f64>,
                      best: &mut Option<BestOfRun>,
                      subpop_best: &mut Vec<f64>,
                      observer: &mut dyn FnMut(&GenerationLog<'_>)| {
        trace.push(global_best_fitness(subpops));
        let validation_error = consider_candidate(best, subpops, config, train, validation);
        subpop_best.clear();
        subpop_best.extend(subpops.iter().map(|s| s.best().report.fitness));
        observer(&GenerationLog {
            generation,
            subpop_best,
            validation_error_percent: validation_error,
        });
    };

    record(
        &subpops,
        0,
        &mut trace,
        &mut best,
        &mut subpop_best,
        &mut observer,
    );

    let ctx = StepContext { config, train };
    for generation in 1..=config.num_generations {
        executor.run_generation(&mut subpops, &|subpop| evolve_generation(subpop, &ctx));
        migrate(&mut subpops, config.migration_rate);
        record(
            &subpops,
            generation,
            &mut trace,
            &mut best,
            &mut subpop_best,
            &mut observer,
        );
    }

    let best = best.ok_or(EngineError::NoViableModel)?;
    let test_eval = best
        .model
        .errors_on(test)
        .expect("test split was checked against the training split");

    Ok(RunResult {
        train_error_percent: best.train_misclassified as f64 / train.num_rows() as f64 * 100.0,
        validation_error_percent: best.validation_errors as f64 / validation.num_rows() as f64
            * 100.0,
        test_error_percent: test_eval.error_percent(),
        best_model: best.model,
        trace,
        seed: config.master_seed,
        offspring_evaluated: subpops.iter().map(|s| s.offspring_evaluated).collect(),
    })
}
