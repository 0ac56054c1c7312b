//! Dense statevector simulator. Qubit `q` is bit `q` of the amplitude
//! index (little-endian).

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    /// `diag(1, e^{iθ})`.
    Phase { qubit: usize, theta: f64 },
    /// `diag(e^{-iθ/2}, e^{iθ/2})`.
    Rz { qubit: usize, theta: f64 },
    Cx { control: usize, target: usize },
    /// `exp(-i θ/2 · Y⊗Y)`.
    Ryy { theta: f64, q1: usize, q2: usize },
}

impl Gate {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::Phase { qubit: q, .. } | Gate::Rz { qubit: q, .. } => vec![q],
            Gate::Cx { control, target } => vec![control, target],
            Gate::Ryy { q1, q2, .. } => vec![q1, q2],
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::Phase { qubit, theta } => Gate::Phase { qubit, theta: -theta },
            Gate::Rz { qubit, theta } => Gate::Rz { qubit, theta: -theta },
            Gate::Ryy { theta, q1, q2 } => Gate::Ryy { theta: -theta, q1, q2 },
            g @ (Gate::H(_) | Gate::Cx { .. }) => g,
        }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::invalid(format!("{self}: qubit {q} out of range for {n_qubits} qubits")));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::invalid(format!("{self}: qubit indices must be distinct")));
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::H(q) => write!(f, "h q{q}"),
            Gate::Phase { qubit, theta } => write!(f, "p({theta}) q{qubit}"),
            Gate::Rz { qubit, theta } => write!(f, "rz({theta}) q{qubit}"),
            Gate::Cx { control, target } => write!(f, "cx q{control},q{target}"),
            Gate::Ryy { theta, q1, q2 } => write!(f, "ryy({theta}) q{q1},q{q2}"),
        }
    }
}

/// Circuit inverse: reversed order, each gate inverted.
pub fn inverse_circuit(gates: &[Gate]) -> Vec<Gate> {
    gates.iter().rev().map(Gate::inverse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    amplitudes: Vec<Complex64>,
    n_qubits: usize,
}

impl Statevector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "statevector supports 1..={MAX_QUBITS} qubits, got {n_qubits}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, n_qubits })
    }

    /// Takes ownership of raw amplitudes; length must be a power of two and
    /// the vector normalised within 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {len} is not a power of two >= 2")));
        }
        let sv = Self {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes,
        };
        if (sv.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("amplitudes are not normalised"));
        }
        Ok(sv)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: other.n_qubits,
                context: "statevector qubit counts",
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let amps = &mut self.amplitudes;
        match *gate {
            Gate::H(q) => {
                let bit = 1 << q;
                let h = FRAC_1_SQRT_2;
                for i in 0..amps.len() {
                    if i & bit == 0 {
                        let (a, b) = (amps[i], amps[i | bit]);
                        amps[i] = (a + b) * h;
                        amps[i | bit] = (a - b) * h;
                    }
                }
            }
            Gate::Phase { qubit, theta } => {
                let bit = 1 << qubit;
                let phase = Complex64::from_polar(1.0, theta);
                amps.iter_mut()
                    .enumerate()
                    .filter(|(i, _)| i & bit != 0)
                    .for_each(|(_, a)| *a *= phase);
            }
            Gate::Rz { qubit, theta } => {
                let bit = 1 << qubit;
                let lo = Complex64::from_polar(1.0, -theta / 2.0);
                let hi = Complex64::from_polar(1.0, theta / 2.0);
                for (i, a) in amps.iter_mut().enumerate() {
                    *a *= if i & bit == 0 { lo } else { hi };
                }
            }
            Gate::Cx { control, target } => {
                let (cb, tb) = (1 << control, 1 << target);
                for i in 0..amps.len() {
                    if i & cb != 0 && i & tb == 0 {
                        amps.swap(i, i | tb);
                    }
                }
            }
            Gate::Ryy { theta, q1, q2 } => {
                let (b1, b2) = (1 << q1, 1 << q2);
                let c = Complex64::new((theta / 2.0).cos(), 0.0);
                let is = Complex64::new(0.0, (theta / 2.0).sin());
                for i in 0..amps.len() {
                    if i & (b1 | b2) == 0 {
                        let (i00, i01, i10, i11) = (i, i | b1, i | b2, i | b1 | b2);
                        let (a00, a01, a10, a11) = (amps[i00], amps[i01], amps[i10], amps[i11]);
                        amps[i00] = c * a00 + is * a11;
                        amps[i11] = c * a11 + is * a00;
                        amps[i01] = c * a01 - is * a10;
                        amps[i10] = c * a10 - is * a01;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all(&mut self, gates: &[Gate]) -> Result<()> {
        gates.iter().try_for_each(|g| self.apply(g))
    }

    /// Run `gates` on `|0…0⟩`.
    pub fn run(n_qubits: usize, gates: &[Gate]) -> Result<Self> {
        let mut sv = Self::zero(n_qubits)?;
        sv.apply_all(gates)?;
        Ok(sv)
    }
}

/// Apply a single gate to a state, returning the new state.
pub fn apply_gate(mut sv: Statevector, gate: &Gate) -> Result<Statevector> {
    sv.apply(gate)?;
    Ok(sv)
}
