use rayon::prelude::*;

use crate::data_io::LabeledDataset;
use crate::error::{Error, Result};
use crate::optimizer::binary::{binarize, FeatureMask, TransferKind};
use crate::optimizer::fitness::{build_evaluator, fitness_with, FitnessConfig, SubsetEvaluator};
use crate::optimizer::hho::{
    escaping_energy, exploitation_step, exploration_step, init_population, mean_position, Hawk, HhoParams, Move,
};
use crate::rng::{rng_at, StageRng};

const INIT_STREAM: u64 = 0xB1;
const STEP_STREAM: u64 = 0xB2;

/// Best-so-far state after one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub iteration: usize,
    pub best_fitness: f64,
    pub selected_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BhhoResult {
    pub best_mask: FeatureMask,
    pub best_fitness: f64,
    pub convergence: Vec<ConvergencePoint>,
    /// Final population, for inspection.
    pub population: Vec<(Hawk, FeatureMask)>,
}

/// Binary HHO over the genes of `train` with the configured wrapper fitness.
pub fn run_bhho(train: &LabeledDataset, p: &HhoParams, fcfg: &FitnessConfig, kind: TransferKind) -> Result<BhhoResult> {
    if p.dimension != train.n_genes() {
        return Err(Error::DimensionMismatch {
            expected: train.n_genes(),
            actual: p.dimension,
            context: "hho dimension vs gene count",
        });
    }
    let evaluator = build_evaluator(train, fcfg)?;
    run_bhho_with(evaluator.as_ref(), p, fcfg.alpha, kind)
}

/// Iteration 0 scores the initial population; iterations `1..T` move the
/// hawks. Every hawk draws from its own `(seed, t, i)` stream, so the
/// parallel update is order independent.
pub fn run_bhho_with(
    evaluator: &dyn SubsetEvaluator,
    p: &HhoParams,
    alpha: f64,
    kind: TransferKind,
) -> Result<BhhoResult> {
    p.validate()?;
    if evaluator.n_features() != p.dimension {
        return Err(Error::DimensionMismatch {
            expected: evaluator.n_features(),
            actual: p.dimension,
            context: "hho dimension vs evaluator features",
        });
    }
    let score = |position: &[f64], current: &[bool], rng: &mut StageRng| -> (f64, Vec<bool>) {
        let bits = binarize(position, current, kind, rng).expect("lengths agree");
        let mask = FeatureMask::from_bits(bits);
        let f = fitness_with(&mask, evaluator, alpha);
        (f, mask.bits().to_vec())
    };

    let zeros = vec![false; p.dimension];
    let mut hawks: Vec<(Hawk, Vec<bool>)> = init_population(p)
        .into_par_iter()
        .enumerate()
        .map(|(i, mut hawk)| {
            let mut rng = rng_at(p.seed, &[INIT_STREAM, i as u64]);
            let (f, bits) = score(&hawk.position, &zeros, &mut rng);
            hawk.fitness = f;
            (hawk, bits)
        })
        .collect();

    let mut best = best_of(&hawks, None);
    let mut convergence = Vec::with_capacity(p.max_iters);
    convergence.push(point(0, &best));

    for t in 1..p.max_iters {
        let pop: Vec<Hawk> = hawks.iter().map(|(h, _)| h.clone()).collect();
        let mean = mean_position(&pop)?;
        let rabbit = &best.0;
        hawks = hawks
            .into_par_iter()
            .enumerate()
            .map(|(i, (hawk, bits))| {
                let mut rng = rng_at(p.seed, &[STEP_STREAM, t as u64, i as u64]);
                let energy = escaping_energy(t, p.max_iters, &mut rng).expect("t < T");
                if energy.is_exploration() {
                    let next = exploration_step(&hawk, &pop, rabbit, &mean, p, &mut rng);
                    let (f, b) = score(&next, &bits, &mut rng);
                    return (Hawk { position: next, fitness: f }, b);
                }
                let mv = exploitation_step(&hawk, rabbit, &mean, &energy, p, &mut rng, |pos, r| score(pos, &bits, r));
                match mv {
                    Move::Unscored(next) => {
                        let (f, b) = score(&next, &bits, &mut rng);
                        (Hawk { position: next, fitness: f }, b)
                    }
                    Move::Accepted(s) => (
                        Hawk {
                            position: s.position,
                            fitness: s.fitness,
                        },
                        s.payload,
                    ),
                    Move::Stay => (hawk, bits),
                }
            })
            .collect();
        best = best_of(&hawks, Some(best));
        convergence.push(point(t, &best));
    }

    if !best.0.fitness.is_finite() {
        return Err(Error::numerical("bhho never produced a non-empty gene mask"));
    }
    Ok(BhhoResult {
        best_mask: FeatureMask::from_bits(best.1),
        best_fitness: best.0.fitness,
        convergence,
        population: hawks
            .into_iter()
            .map(|(h, b)| (h, FeatureMask::from_bits(b)))
            .collect(),
    })
}

/// Lowest-fitness hawk, lowest index on ties; the incumbent wins ties.
fn best_of(hawks: &[(Hawk, Vec<bool>)], incumbent: Option<(Hawk, Vec<bool>)>) -> (Hawk, Vec<bool>) {
    let mut best = incumbent.unwrap_or_else(|| hawks[0].clone());
    for h in hawks {
        if h.0.fitness < best.0.fitness {
            best = h.clone();
        }
    }
    best
}

fn point(iteration: usize, best: &(Hawk, Vec<bool>)) -> ConvergencePoint {
    ConvergencePoint {
        iteration,
        best_fitness: best.0.fitness,
        selected_count: best.1.iter().filter(|&&b| b).count(),
    }
}
