//! Gene selection with a binary Harris-hawks search, SMOTE balancing, PCA
//! reduction and quantum-kernel SVM classification on a simulated device.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod data_io;
pub mod error;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod quantum;
pub mod reduction;
pub mod rng;
pub mod sampling;
pub mod synthetic;

pub use classifier::{KernelMatrix, SmoParams, SvmModel};
pub use data_io::{Label, LabeledDataset, Split, SplitSpec, NEGATIVE, POSITIVE};
pub use error::{Error, ErrorKind, Result};
pub use optimizer::{BhhoResult, FeatureMask, FitnessConfig, HhoParams, TransferKind};
pub use quantum::{FeatureMapKind, FeatureMapSpec, KernelMode, ShotConfig};
pub use reduction::PcaModel;
pub use sampling::SmoteConfig;
pub use pipeline::{PipelineConfig, RunOutcome};
