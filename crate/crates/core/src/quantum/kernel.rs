//! Fidelity kernels `|⟨Φ(x)|Φ(z)⟩|²`, exact or estimated from measurement
//! shots of the compute–uncompute circuit.

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use rayon::prelude::*;

use crate::classifier::KernelMatrix;
use crate::error::{check_dim, Error, Result};
use crate::quantum::feature_map::{build_feature_map, feature_state, FeatureMapSpec};
use crate::quantum::statevector::{inverse_circuit, Statevector};
use crate::rng::{derive_seed, rng_from};

/// Measurement budget for shot-based estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotConfig {
    pub shots: usize,
    pub seed: u64,
}

impl ShotConfig {
    pub fn new(shots: usize, seed: u64) -> Result<Self> {
        if shots == 0 {
            return Err(Error::invalid("shots must be >= 1"));
        }
        Ok(Self { shots, seed })
    }

    /// Independent stream for kernel entry `(i, j)` of matrix `salt`.
    pub fn for_entry(&self, salt: u64, i: usize, j: usize) -> Self {
        Self {
            shots: self.shots,
            seed: derive_seed(self.seed, &[salt, i as u64, j as u64]),
        }
    }
}

impl Default for ShotConfig {
    fn default() -> Self {
        Self {
            shots: 100,
            seed: 10_598,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelMode {
    Exact,
    Sampled(ShotConfig),
}

/// Matrix tags for per-entry shot streams.
pub const TRAIN_SALT: u64 = 0x7A;
pub const CROSS_SALT: u64 = 0xC5;

/// Upper bound on memory held by cached statevectors in one block.
pub const STATE_CACHE_BYTES: usize = 1 << 30;

pub fn exact_kernel_entry(x: &[f64], z: &[f64], spec: &FeatureMapSpec) -> Result<f64> {
    let a = feature_state(spec, x)?;
    let b = feature_state(spec, z)?;
    Ok(fidelity(&a, &b))
}

fn fidelity(a: &Statevector, b: &Statevector) -> f64 {
    a.inner(b).expect("same qubit count").norm_sqr().min(1.0)
}

/// `U(z)† U(x) |0…0⟩`; its all-zeros probability is the kernel value.
pub fn compute_uncompute_state(x: &[f64], z: &[f64], spec: &FeatureMapSpec) -> Result<Statevector> {
    let mut gates = build_feature_map(spec, x)?;
    gates.extend(inverse_circuit(&build_feature_map(spec, z)?));
    Statevector::run(spec.n_qubits, &gates)
}

/// Inverse-CDF sampling of `shots` outcomes from `probs`, one uniform draw
/// per shot. Returns per-outcome counts.
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], shots: usize, rng: &mut R) -> Vec<u32> {
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in probs {
        acc += p;
        cdf.push(acc);
    }
    let mut counts = vec![0u32; probs.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>();
        let k = cdf.partition_point(|&c| c <= u).min(probs.len() - 1);
        counts[k] += 1;
    }
    counts
}

/// Shots landing on outcome 0 when its probability is `p0`. Consumes the
/// same uniforms as [`sample_counts`], so both agree draw for draw.
fn count_zero_outcomes<R: Rng + ?Sized>(p0: f64, shots: usize, rng: &mut R) -> usize {
    (0..shots).filter(|_| rng.random::<f64>() < p0).count()
}

/// Frequency of the all-zeros outcome over `shots.shots` simulated
/// measurements of the compute–uncompute circuit.
pub fn sampled_kernel_entry(x: &[f64], z: &[f64], spec: &FeatureMapSpec, shots: &ShotConfig) -> Result<f64> {
    if shots.shots == 0 {
        return Err(Error::invalid("shots must be >= 1"));
    }
    let sv = compute_uncompute_state(x, z, spec)?;
    let mut rng = rng_from(shots.seed);
    let counts = sample_counts(&sv.probabilities(), shots.shots, &mut rng);
    Ok(f64::from(counts[0]) / shots.shots as f64)
}

fn estimate(p0: f64, shots: &ShotConfig) -> f64 {
    let mut rng = rng_from(shots.seed);
    count_zero_outcomes(p0, shots.shots, &mut rng) as f64 / shots.shots as f64
}

fn rows(x: &ArrayView2<f64>) -> Vec<Vec<f64>> {
    x.rows().into_iter().map(|r: ArrayView1<f64>| r.to_vec()).collect()
}

fn block_rows(n_qubits: usize) -> usize {
    let bytes_per_state = (1usize << n_qubits) * std::mem::size_of::<num_complex::Complex64>();
    (STATE_CACHE_BYTES / bytes_per_state).max(1)
}

/// Fidelities between every row of `left` and every row of `right`. With
/// `symmetric`, `left` and `right` are the same rows and only `j > i` is
/// computed. Left states are cached in memory-bounded blocks; each right
/// state is simulated once per block.
fn overlap_matrix(left: &[Vec<f64>], right: &[Vec<f64>], spec: &FeatureMapSpec, symmetric: bool) -> Result<Array2<f64>> {
    let mut out = Array2::<f64>::zeros((left.len(), right.len()));
    let block = block_rows(spec.n_qubits);
    for start in (0..left.len()).step_by(block) {
        let end = (start + block).min(left.len());
        let cached: Vec<Statevector> = left[start..end]
            .par_iter()
            .map(|x| feature_state(spec, x))
            .collect::<Result<_>>()?;
        let first_col = if symmetric { start } else { 0 };
        let columns: Vec<(usize, Vec<f64>)> = (first_col..right.len())
            .into_par_iter()
            .map(|j| -> Result<(usize, Vec<f64>)> {
                let own;
                let state = if symmetric && j < end {
                    &cached[j - start]
                } else {
                    own = feature_state(spec, &right[j])?;
                    &own
                };
                let col = cached.iter().map(|c| fidelity(c, state)).collect();
                Ok((j, col))
            })
            .collect::<Result<_>>()?;
        for (j, col) in columns {
            for (r, v) in col.into_iter().enumerate() {
                out[[start + r, j]] = v;
            }
        }
    }
    Ok(out)
}

/// Gram matrix over the rows of `x`. Exact mode puts 1 on the diagonal
/// without simulating; sampled mode seeds entry `(i, j)` from `(seed, i, j)`.
pub fn kernel_matrix(x: ArrayView2<f64>, spec: &FeatureMapSpec, mode: KernelMode) -> Result<KernelMatrix> {
    spec.validate()?;
    check_dim(spec.n_qubits, x.ncols(), "kernel input columns vs qubit count")?;
    let data = rows(&x);
    let n = data.len();
    let overlaps = overlap_matrix(&data, &data, spec, true)?;
    let mut k = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = match mode {
                KernelMode::Exact if i == j => 1.0,
                KernelMode::Exact => overlaps[[i, j]],
                KernelMode::Sampled(shots) => {
                    let p0 = if i == j { 1.0 } else { overlaps[[i, j]] };
                    estimate(p0, &shots.for_entry(TRAIN_SALT, i, j))
                }
            };
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    KernelMatrix::new(k)
}

/// `K[t, j] = kernel(test_t, train_j)`.
pub fn cross_kernel_matrix(
    x_test: ArrayView2<f64>,
    x_train: ArrayView2<f64>,
    spec: &FeatureMapSpec,
    mode: KernelMode,
) -> Result<Array2<f64>> {
    spec.validate()?;
    check_dim(x_train.ncols(), x_test.ncols(), "cross-kernel column counts")?;
    check_dim(spec.n_qubits, x_train.ncols(), "kernel input columns vs qubit count")?;
    let overlaps = overlap_matrix(&rows(&x_test), &rows(&x_train), spec, false)?;
    Ok(match mode {
        KernelMode::Exact => overlaps,
        KernelMode::Sampled(shots) => Array2::from_shape_fn(overlaps.dim(), |(t, j)| {
            estimate(overlaps[[t, j]], &shots.for_entry(CROSS_SALT, t, j))
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::feature_map::FeatureMapKind;
    use crate::rng::rng_from;
    use ndarray::array;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_rows(n: usize, d: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed);
        Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..std::f64::consts::PI))
    }

    #[test]
    fn self_fidelity_and_symmetry() {
        let mut rng = rng_from(1);
        for kind in FeatureMapKind::ALL {
            let spec = FeatureMapSpec::new(kind, 3, 2).unwrap();
            for _ in 0..5 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..3.0)).collect();
                let z: Vec<f64> = (0..3).map(|_| rng.random_range(0.0..3.0)).collect();
                assert!((exact_kernel_entry(&x, &x, &spec).unwrap() - 1.0).abs() < 1e-12);
                let kxz = exact_kernel_entry(&x, &z, &spec).unwrap();
                let kzx = exact_kernel_entry(&z, &x, &spec).unwrap();
                assert!((kxz - kzx).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&kxz));
            }
        }
    }

    #[test]
    fn single_qubit_z_map_matches_dense_product() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Z, 1, 1).unwrap();
        let mut rng = rng_from(2);
        for _ in 0..20 {
            let (x, z): (f64, f64) = (rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            // ⟨0| H P(-2z) P(2x) H |0⟩ = (1 + e^{2i(x - z)}) / 2
            let h = FRAC_1_SQRT_2;
            let hp = [Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
            let phase = Complex64::from_polar(1.0, 2.0 * x - 2.0 * z);
            let amp = hp[0] * hp[0] + hp[1] * phase * hp[1];
            let dense = amp.norm_sqr();
            assert!((exact_kernel_entry(&[x], &[z], &spec).unwrap() - dense).abs() < 1e-12);
        }
    }

    #[test]
    fn compute_uncompute_matches_inner_product() {
        let spec = FeatureMapSpec::new(FeatureMapKind::PauliZYy, 3, 2).unwrap();
        let x = [0.3, 1.9, 2.4];
        let z = [1.1, 0.2, 2.9];
        let p0 = compute_uncompute_state(&x, &z, &spec).unwrap().probabilities()[0];
        assert!((p0 - exact_kernel_entry(&x, &z, &spec).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn sampled_entries_are_quantised_and_exact_on_diagonal() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Zz, 2, 2).unwrap();
        let shots = ShotConfig::new(100, 10_598).unwrap();
        let v = sampled_kernel_entry(&[0.4, 1.2], &[2.0, 0.1], &spec, &shots).unwrap();
        assert!((0.0..=1.0).contains(&v));
        assert!(((v * 100.0).round() - v * 100.0).abs() < 1e-9);
        assert_eq!(sampled_kernel_entry(&[0.4, 1.2], &[0.4, 1.2], &spec, &shots).unwrap(), 1.0);
        assert!(ShotConfig::new(0, 1).is_err());
    }

    #[test]
    fn histogram_and_fast_path_agree() {
        let probs = [0.35, 0.15, 0.5];
        let mut a = rng_from(9);
        let mut b = rng_from(9);
        let counts = sample_counts(&probs, 1000, &mut a);
        assert_eq!(counts.iter().sum::<u32>(), 1000);
        assert_eq!(counts[0] as usize, count_zero_outcomes(0.35, 1000, &mut b));
    }

    #[test]
    fn matrix_entries_match_single_entry_estimator() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Zz, 2, 1).unwrap();
        let x = random_rows(4, 2, 3);
        let shots = ShotConfig::new(100, 5).unwrap();
        let k = kernel_matrix(x.view(), &spec, KernelMode::Sampled(shots)).unwrap();
        for i in 0..4 {
            for j in i + 1..4 {
                let single = sampled_kernel_entry(
                    &x.row(i).to_vec(),
                    &x.row(j).to_vec(),
                    &spec,
                    &shots.for_entry(TRAIN_SALT, i, j),
                )
                .unwrap();
                assert_eq!(k.values()[[i, j]], single);
                assert_eq!(k.values()[[j, i]], single);
            }
        }
    }

    #[test]
    fn exact_matrix_properties() {
        let spec = FeatureMapSpec::new(FeatureMapKind::Zz, 3, 2).unwrap();
        let k = kernel_matrix(array![[0.1, 0.2, 0.3]].view(), &spec, KernelMode::Exact).unwrap();
        assert_eq!(k.values(), &array![[1.0]]);
        let x = random_rows(6, 3, 4);
        let k = kernel_matrix(x.view(), &spec, KernelMode::Exact).unwrap();
        assert_eq!(k.values(), &k.values().t().to_owned());
        assert!(k.min_eigenvalue().unwrap() >= -1e-9);
    }

    #[test]
    fn cross_kernel_consistency() {
        let spec = FeatureMapSpec::new(FeatureMapKind::PauliZYy, 2, 2).unwrap();
        let train = random_rows(4, 2, 6);
        let test = random_rows(3, 2, 7);
        let square = kernel_matrix(train.view(), &spec, KernelMode::Exact).unwrap();
        let same = cross_kernel_matrix(train.view(), train.view(), &spec, KernelMode::Exact).unwrap();
        for (a, b) in square.values().iter().zip(&same) {
            assert!((a - b).abs() < 1e-12);
        }
        let cross = cross_kernel_matrix(test.view(), train.view(), &spec, KernelMode::Exact).unwrap();
        assert_eq!(cross.dim(), (3, 4));
        for t in 0..3 {
            for j in 0..4 {
                let e = exact_kernel_entry(&test.row(t).to_vec(), &train.row(j).to_vec(), &spec).unwrap();
                assert!((cross[[t, j]] - e).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&cross[[t, j]]));
            }
        }
        assert!(cross_kernel_matrix(random_rows(2, 3, 0).view(), train.view(), &spec, KernelMode::Exact).is_err());
    }
}
