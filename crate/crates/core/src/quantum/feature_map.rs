//! Data-encoding circuits: Z, ZZ and Pauli (Z, YY) feature maps with
//! linear entanglement.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{check_dim, Error, Result};
use crate::quantum::statevector::{Gate, Statevector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureMapKind {
    Z,
    Zz,
    PauliZYy,
}

impl FeatureMapKind {
    pub const ALL: [FeatureMapKind; 3] = [FeatureMapKind::Z, FeatureMapKind::Zz, FeatureMapKind::PauliZYy];

    pub fn is_entangling(self) -> bool {
        !matches!(self, FeatureMapKind::Z)
    }
}

impl FromStr for FeatureMapKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" => Ok(FeatureMapKind::Z),
            "zz" => Ok(FeatureMapKind::Zz),
            "pauli_zyy" | "pauli" | "zyy" => Ok(FeatureMapKind::PauliZYy),
            other => Err(Error::config(format!("unknown feature map `{other}` (expected z, zz or pauli_zyy)"))),
        }
    }
}

impl fmt::Display for FeatureMapKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMapKind::Z => "z",
            FeatureMapKind::Zz => "zz",
            FeatureMapKind::PauliZYy => "pauli_zyy",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Entanglement {
    /// Nearest neighbours `(q, q+1)`.
    #[default]
    Linear,
}

impl FromStr for Entanglement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Entanglement::Linear),
            other => Err(Error::config(format!("unsupported entanglement `{other}` (only linear)"))),
        }
    }
}

impl Entanglement {
    pub fn pairs(self, n_qubits: usize) -> Vec<(usize, usize)> {
        match self {
            Entanglement::Linear => (1..n_qubits).map(|q| (q - 1, q)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureMapSpec {
    pub kind: FeatureMapKind,
    pub n_qubits: usize,
    pub reps: usize,
    pub entanglement: Entanglement,
}

impl FeatureMapSpec {
    pub fn new(kind: FeatureMapKind, n_qubits: usize, reps: usize) -> Result<Self> {
        let spec = Self {
            kind,
            n_qubits,
            reps,
            entanglement: Entanglement::Linear,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 1 || self.reps < 1 {
            return Err(Error::invalid("feature map needs n_qubits >= 1 and reps >= 1"));
        }
        if self.kind.is_entangling() && self.n_qubits < 2 {
            return Err(Error::invalid(format!("{} feature map needs at least 2 qubits", self.kind)));
        }
        Ok(())
    }
}

/// Angle coefficient for a term acting on `subset`: `x_i` for a single
/// qubit, `(π - x_i)(π - x_j)` for a pair.
pub fn data_map(x: &[f64], subset: &[usize]) -> Result<f64> {
    let get = |i: usize| {
        x.get(i)
            .copied()
            .ok_or_else(|| Error::invalid(format!("data-map index {i} out of range")))
    };
    match *subset {
        [i] => get(i),
        [i, j] => Ok((PI - get(i)?) * (PI - get(j)?)),
        _ => Err(Error::invalid(format!(
            "data map defined for 1 or 2 indices, got {}",
            subset.len()
        ))),
    }
}

/// Gate list for `U_Φ(x)`. Each repetition is a Hadamard layer, a phase
/// layer `P(2x_i)`, then per entangled pair either `CX · RZ(2φ_ij) · CX`
/// (ZZ) or `RYY(2φ_ij)` (Pauli Z, YY).
pub fn build_feature_map(spec: &FeatureMapSpec, x: &[f64]) -> Result<Vec<Gate>> {
    spec.validate()?;
    check_dim(spec.n_qubits, x.len(), "feature vector vs qubit count")?;
    let n = spec.n_qubits;
    let pairs = spec.entanglement.pairs(n);
    let mut gates = Vec::new();
    for _ in 0..spec.reps {
        gates.extend((0..n).map(Gate::H));
        for q in 0..n {
            gates.push(Gate::Phase {
                qubit: q,
                theta: 2.0 * data_map(x, &[q])?,
            });
        }
        for &(a, b) in &pairs {
            let theta = 2.0 * data_map(x, &[a, b])?;
            match spec.kind {
                FeatureMapKind::Z => {}
                FeatureMapKind::Zz => {
                    gates.push(Gate::Cx { control: a, target: b });
                    gates.push(Gate::Rz { qubit: b, theta });
                    gates.push(Gate::Cx { control: a, target: b });
                }
                FeatureMapKind::PauliZYy => gates.push(Gate::Ryy { theta, q1: a, q2: b }),
            }
        }
    }
    Ok(gates)
}

/// `|Φ(x)⟩ = U_Φ(x)|0…0⟩`.
pub fn feature_state(spec: &FeatureMapSpec, x: &[f64]) -> Result<Statevector> {
    Statevector::run(spec.n_qubits, &build_feature_map(spec, x)?)
}

/// Largest upper phase bound such that, for inputs in `[lo, hi]`, every
/// rotation angle of `kind` spans at most one period (2π). Single-qubit
/// angles are `2x`; pair angles are `2(π - x_i)(π - x_j)`.
pub fn one_period_phase_hi(kind: FeatureMapKind, lo: f64) -> f64 {
    let single_ok = |hi: f64| 2.0 * (hi - lo) <= 2.0 * PI;
    let pair_ok = |hi: f64| {
        let (a, b) = (PI - hi, PI - lo);
        let max = (a * a).max(b * b);
        let min = (a * a).min(b * b).min(a * b);
        2.0 * (max - min) <= 2.0 * PI
    };
    let ok = |hi: f64| single_ok(hi) && (kind == FeatureMapKind::Z || pair_ok(hi));
    // Both spans grow monotonically in `hi`.
    let (mut good, mut bad) = (lo, lo + PI + 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}
