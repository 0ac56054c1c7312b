//! Synthetic expression data with known ground truth, for tests, demos and
//! benchmarks.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};

use crate::data_io::{Label, LabeledDataset, NEGATIVE, POSITIVE};
use crate::rng::rng_at;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedSpec {
    pub n_positive: usize,
    pub n_negative: usize,
    pub n_informative: usize,
    pub n_noise: usize,
    /// Class-mean separation of each informative gene, in noise standard deviations.
    pub effect: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Planted {
    pub dataset: LabeledDataset,
    /// Column indices of the informative genes, ascending.
    pub informative: Vec<usize>,
}

/// Balanced planted dataset: `n_samples` rows, informative genes shifted by
/// `±effect/2` according to the class, all others pure N(0,1) noise.
pub fn planted_dataset(n_samples: usize, n_informative: usize, n_noise: usize, effect: f64, seed: u64) -> Planted {
    planted(&PlantedSpec {
        n_positive: n_samples.div_ceil(2),
        n_negative: n_samples / 2,
        n_informative,
        n_noise,
        effect,
        seed,
    })
}

pub fn planted(spec: &PlantedSpec) -> Planted {
    let mut rng = rng_at(spec.seed, &[0x5EED]);
    let n = spec.n_positive + spec.n_negative;
    let d = spec.n_informative + spec.n_noise;

    let mut columns: Vec<usize> = (0..d).collect();
    columns.shuffle(&mut rng);
    let mut informative = columns[..spec.n_informative].to_vec();
    informative.sort_unstable();
    let mut is_informative = vec![false; d];
    informative.iter().for_each(|&g| is_informative[g] = true);

    let mut labels: Vec<Label> = std::iter::repeat_n(POSITIVE, spec.n_positive)
        .chain(std::iter::repeat_n(NEGATIVE, spec.n_negative))
        .collect();
    labels.shuffle(&mut rng);

    let x = Array2::from_shape_fn((n, d), |(i, g)| {
        let noise: f64 = StandardNormal.sample(&mut rng);
        if is_informative[g] {
            noise + f64::from(labels[i]) * spec.effect / 2.0
        } else {
            noise
        }
    });
    let names = (0..d).map(|g| format!("g{g}")).collect();
    Planted {
        dataset: LabeledDataset::new(x, labels, names).expect("finite synthetic data"),
        informative,
    }
}

/// Two isotropic Gaussian blobs centred at `±separation/2` along every axis.
pub fn two_blobs(n_samples: usize, dim: usize, separation: f64, seed: u64) -> LabeledDataset {
    planted(&PlantedSpec {
        n_positive: n_samples.div_ceil(2),
        n_negative: n_samples / 2,
        n_informative: dim,
        n_noise: 0,
        effect: separation,
        seed,
    })
    .dataset
}
