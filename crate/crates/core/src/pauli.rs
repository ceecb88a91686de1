//! Single-sided Pauli error frame and the depolarizing channels acting on it.
//!
//! An error on Alice's half of a Bell pair is equivalent to the same Pauli
//! on Bob's half, so every error is accumulated on one side. Phases are
//! dropped throughout.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Pauli {
    I = 0b00,
    X = 0b01,
    Z = 0b10,
    Y = 0b11,
}

impl Pauli {
    pub const NON_IDENTITY: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn from_bits(bits: u8) -> Pauli {
        match bits & 0b11 {
            0b00 => Pauli::I,
            0b01 => Pauli::X,
            0b10 => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    pub fn has_x(self) -> bool {
        self as u8 & 0b01 != 0
    }

    pub fn has_z(self) -> bool {
        self as u8 & 0b10 != 0
    }
}

/// Group product modulo phase.
impl std::ops::Mul for Pauli {
    type Output = Pauli;

    // symplectic bits add mod 2
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self as u8 ^ other as u8)
    }
}

/// Per-data-qubit Pauli labels, indexed like [`crate::code::CodeLayout::data_sites`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliFrame {
    labels: Vec<Pauli>,
}

impl PauliFrame {
    pub fn identity(n: usize) -> Self {
        PauliFrame {
            labels: vec![Pauli::I; n],
        }
    }

    pub fn from_labels(labels: Vec<Pauli>) -> Self {
        PauliFrame { labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, q: usize) -> Pauli {
        self.labels[q]
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        self.labels[q] = p;
    }

    /// Multiplies qubit `q` by `p`.
    pub fn apply(&mut self, q: usize, p: Pauli) {
        self.labels[q] = self.labels[q] * p;
    }

    pub fn has_x(&self, q: usize) -> bool {
        self.labels[q].has_x()
    }

    pub fn has_z(&self, q: usize) -> bool {
        self.labels[q].has_z()
    }

    pub fn labels(&self) -> &[Pauli] {
        &self.labels
    }

    /// Number of non-identity labels.
    pub fn weight(&self) -> usize {
        self.labels.iter().filter(|&&p| p != Pauli::I).count()
    }

    /// Qubit-wise product with another frame.
    pub fn compose(&self, other: &PauliFrame) -> PauliFrame {
        debug_assert_eq!(self.len(), other.len());
        PauliFrame {
            labels: self.labels.iter().zip(&other.labels).map(|(&a, &b)| a * b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub e_init: f64,
    pub e_swap: f64,
}

impl NoiseParams {
    pub fn new(e_init: f64, e_swap: f64) -> Result<Self> {
        check_probability("e_init", e_init)?;
        check_probability("e_swap", e_swap)?;
        Ok(NoiseParams { e_init, e_swap })
    }

    /// Single-sided rate per SWAP, see [`effective_swap_rate`].
    pub fn e_tilde(&self) -> f64 {
        effective_swap_rate(self.e_swap)
    }
}

/// Depolarizing rate seen by one side when both nodes apply a SWAP with
/// rate `e_swap` and all errors are moved onto one side.
pub fn effective_swap_rate(e_swap: f64) -> f64 {
    2.0 * e_swap - 4.0 / 3.0 * e_swap * e_swap
}

/// Rate of the composition of two depolarizing channels.
///
/// With `λ = 1 − 4e/3` the channel shrinks the Bloch vector by `λ`, so
/// rates compose through the product of the shrink factors.
pub fn compose_depolarizing(e1: f64, e2: f64) -> f64 {
    let lambda = |e: f64| 1.0 - 4.0 / 3.0 * e;
    0.75 * (1.0 - lambda(e1) * lambda(e2))
}

/// Total depolarizing rate of a qubit that starts with `e_init` and then
/// undergoes `swaps` SWAP events of rate `e_tilde`.
pub fn marginal_error_probability(e_init: f64, e_tilde: f64, swaps: u32) -> f64 {
    (0..swaps).fold(e_init, |acc, _| compose_depolarizing(acc, e_tilde))
}

fn random_non_identity<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    Pauli::NON_IDENTITY[rng.gen_range(0..3)]
}

/// Werner-state initial errors: identity with probability `1 − e_init`,
/// otherwise X, Y or Z uniformly.
pub fn sample_initial_errors<R: Rng + ?Sized>(n: usize, e_init: f64, rng: &mut R) -> PauliFrame {
    let labels = (0..n)
        .map(|_| {
            if rng.gen::<f64>() < e_init {
                random_non_identity(rng)
            } else {
                Pauli::I
            }
        })
        .collect();
    PauliFrame { labels }
}

/// Applies `swap_counts[q]` independent depolarizing events of rate
/// `e_tilde` to each qubit.
pub fn apply_swap_noise<R: Rng + ?Sized>(
    frame: &mut PauliFrame,
    swap_counts: &[u32],
    e_tilde: f64,
    rng: &mut R,
) {
    debug_assert_eq!(frame.len(), swap_counts.len());
    if e_tilde <= 0.0 {
        return;
    }
    for (q, &k) in swap_counts.iter().enumerate() {
        for _ in 0..k {
            if rng.gen::<f64>() < e_tilde {
                let p = random_non_identity(rng);
                frame.apply(q, p);
            }
        }
    }
}
