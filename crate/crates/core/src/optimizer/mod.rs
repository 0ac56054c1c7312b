//! Binary Harris hawks optimization for wrapper gene selection.

pub mod bhho;
pub mod binary;
pub mod fitness;
pub mod hho;

pub use bhho::{run_bhho, run_bhho_with, BhhoResult, ConvergencePoint};
pub use binary::{binarize, transfer_probability, FeatureMask, TransferKind};
pub use fitness::{build_evaluator, fitness, fitness_with, EvaluatorKind, FitnessConfig, KnnWrapper, SubsetEvaluator, Validation};
pub use hho::{
    escaping_energy, exploitation_step, exploration_step, init_population, mean_position, EnergyState, Hawk, HhoParams,
};
