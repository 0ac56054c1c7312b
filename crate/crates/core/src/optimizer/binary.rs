//! Transfer functions and the binary position update that turn continuous
//! hawk moves into gene masks.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{check_dim, Error, Result};

/// Shape of the transfer function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferKind {
    /// Sigmoid; each bit is resampled as `rand < S(Δ)`.
    #[default]
    S,
    /// `|tanh|`; each bit flips when `rand < V(Δ)`.
    V,
}

impl FromStr for TransferKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s" => Ok(TransferKind::S),
            "v" => Ok(TransferKind::V),
            other => Err(Error::config(format!("unknown transfer function `{other}` (expected s or v)"))),
        }
    }
}

impl fmt::Display for TransferKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransferKind::S => "s",
            TransferKind::V => "v",
        })
    }
}

pub fn transfer_probability(delta: f64, kind: TransferKind) -> f64 {
    match kind {
        TransferKind::S => 1.0 / (1.0 + (-delta).exp()),
        TransferKind::V => delta.tanh().abs(),
    }
}

/// One uniform draw per dimension, in index order.
pub fn binarize<R: Rng + ?Sized>(
    position_delta: &[f64],
    current_bits: &[bool],
    kind: TransferKind,
    rng: &mut R,
) -> Result<Vec<bool>> {
    check_dim(position_delta.len(), current_bits.len(), "binarize bit vector")?;
    Ok(position_delta
        .iter()
        .zip(current_bits)
        .map(|(&delta, &bit)| {
            let hit = rng.random::<f64>() < transfer_probability(delta, kind);
            match kind {
                TransferKind::S => hit,
                TransferKind::V => bit ^ hit,
            }
        })
        .collect())
}

/// Binary gene-selection vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureMask {
    bits: Vec<bool>,
}

impl FeatureMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn all(d: usize) -> Self {
        Self { bits: vec![true; d] }
    }

    pub fn from_indices(d: usize, selected: &[usize]) -> Result<Self> {
        let mut bits = vec![false; d];
        for &i in selected {
            if i >= d {
                return Err(Error::invalid(format!("gene index {i} out of range for {d} genes")));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn selected_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
    }
}
