//! Dense state vector over the composite `[leak | ancilla | space]` register.
//!
//! Amplitude index bits are laid out with the space register in the lowest
//! bits, the ancilla register above it and the (optional) leak qubit on top:
//!
//! ```text
//! index = leak << (n + m) | ancilla << n | space
//! ```
//!
//! so the space index of an amplitude is exactly the grid index of the
//! sample it holds, and each `(leak, ancilla)` configuration owns one
//! contiguous block of `2^n` amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest composite register accepted by [`RegisterLayout::new`].
pub const DEFAULT_MAX_QUBITS: usize = 24;

/// Tolerance used when checking that a gate matrix is unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

/// Qubit counts of the three registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawLayout", into = "RawLayout")]
pub struct RegisterLayout {
    space: usize,
    ancilla: usize,
    leak: usize,
}

#[derive(Serialize, Deserialize)]
struct RawLayout {
    space_qubits: usize,
    ancilla_qubits: usize,
    leak_qubits: usize,
}

impl TryFrom<RawLayout> for RegisterLayout {
    type Error = Error;

    fn try_from(raw: RawLayout) -> Result<Self> {
        RegisterLayout::new(raw.space_qubits, raw.ancilla_qubits, raw.leak_qubits)
    }
}

impl From<RegisterLayout> for RawLayout {
    fn from(layout: RegisterLayout) -> Self {
        RawLayout {
            space_qubits: layout.space,
            ancilla_qubits: layout.ancilla,
            leak_qubits: layout.leak,
        }
    }
}

impl RegisterLayout {
    pub fn new(space: usize, ancilla: usize, leak: usize) -> Result<Self> {
        Self::with_cap(space, ancilla, leak, DEFAULT_MAX_QUBITS)
    }

    /// Like [`RegisterLayout::new`] with an explicit cap on the total qubit count.
    pub fn with_cap(space: usize, ancilla: usize, leak: usize, cap: usize) -> Result<Self> {
        if space == 0 {
            return Err(Error::Domain(
                "the space register needs at least one qubit".into(),
            ));
        }
        if leak > 1 {
            return Err(Error::Domain(format!(
                "at most one leak qubit is supported, got {leak}"
            )));
        }
        let total = space + ancilla + leak;
        if total > cap {
            return Err(Error::Domain(format!(
                "register of {total} qubits exceeds the cap of {cap}"
            )));
        }
        Ok(Self {
            space,
            ancilla,
            leak,
        })
    }

    pub fn space_qubits(&self) -> usize {
        self.space
    }

    pub fn ancilla_qubits(&self) -> usize {
        self.ancilla
    }

    pub fn leak_qubits(&self) -> usize {
        self.leak
    }

    pub fn total_qubits(&self) -> usize {
        self.space + self.ancilla + self.leak
    }

    /// Number of amplitudes, `2^(n+m+l)`.
    pub fn dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn space_dim(&self) -> usize {
        1 << self.space
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.ancilla
    }

    /// Global amplitude index of a `(leak, ancilla, space)` configuration.
    #[inline]
    pub fn index(&self, leak: usize, ancilla: usize, space: usize) -> usize {
        debug_assert!(
            leak < (1 << self.leak) && ancilla < self.ancilla_dim() && space < self.space_dim()
        );
        (leak << (self.space + self.ancilla)) | (ancilla << self.space) | space
    }

    /// The same layout with the leak qubit removed.
    pub fn without_leak(&self) -> Self {
        Self { leak: 0, ..*self }
    }

    /// The same layout with one leak qubit.
    pub fn with_leak(&self) -> Result<Self> {
        Self::new(self.space, self.ancilla, 1)
    }

    /// Global bit position of a qubit.
    pub fn bit(&self, q: QubitIndex) -> Result<usize> {
        let (count, offset) = match q.register {
            Register::Space => (self.space, 0),
            Register::Ancilla => (self.ancilla, self.space),
            Register::Leak => (self.leak, self.space + self.ancilla),
        };
        if q.position >= count {
            return Err(Error::Domain(format!(
                "{:?} qubit {} does not exist in a register of {count} qubits",
                q.register, q.position
            )));
        }
        Ok(offset + q.position)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Register {
    Space,
    Ancilla,
    Leak,
}

/// A qubit addressed by register and weight position: qubit `j` carries
/// weight `2^j` within its register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QubitIndex {
    pub register: Register,
    pub position: usize,
}

impl QubitIndex {
    pub fn space(position: usize) -> Self {
        Self {
            register: Register::Space,
            position,
        }
    }

    pub fn ancilla(position: usize) -> Self {
        Self {
            register: Register::Ancilla,
            position,
        }
    }

    pub fn leak() -> Self {
        Self {
            register: Register::Leak,
            position: 0,
        }
    }
}

/// How strictly gate matrices are validated before application.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UnitarityCheck {
    /// Reject non-unitary matrices with [`Error::Validation`].
    #[default]
    Strict,
    /// Log a warning and apply the matrix anyway.
    WarnOnly,
    Skip,
}

/// Maximum entry of `|U^† U - I|` for a square matrix given row-major.
pub fn unitarity_defect<const N: usize>(u: &[[Complex64; N]; N]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..N {
        for j in 0..N {
            let mut acc: Complex64 = u.iter().map(|row| row[i].conj() * row[j]).sum();
            if i == j {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}

fn check_unitary<const N: usize>(u: &[[Complex64; N]; N], check: UnitarityCheck) -> Result<()> {
    if check == UnitarityCheck::Skip {
        return Ok(());
    }
    let defect = unitarity_defect(u);
    if defect > UNITARITY_TOLERANCE {
        let msg = format!("{N}x{N} matrix is not unitary (|U^dag U - I| = {defect:e})");
        match check {
            UnitarityCheck::Strict => return Err(Error::Validation(msg)),
            UnitarityCheck::WarnOnly => log::warn!("{msg}"),
            UnitarityCheck::Skip => {}
        }
    }
    Ok(())
}

/// Conjugate transpose of a square matrix.
pub fn dagger<const N: usize>(u: &[[Complex64; N]; N]) -> [[Complex64; N]; N] {
    let mut out = [[Complex64::new(0.0, 0.0); N]; N];
    for (i, row) in u.iter().enumerate() {
        for (j, value) in row.iter().enumerate() {
            out[j][i] = value.conj();
        }
    }
    out
}

/// Amplitudes of the composite register.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    layout: RegisterLayout,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// Computational basis state `|index⟩` of the composite register.
    pub fn new_basis_state(layout: RegisterLayout, index: usize) -> Result<Self> {
        if index >= layout.dim() {
            return Err(Error::Domain(format!(
                "basis index {index} out of range for {} amplitudes",
                layout.dim()
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self { layout, amplitudes })
    }

    /// Wraps raw amplitudes. The vector is taken as-is, without normalization.
    pub fn from_amplitudes(layout: RegisterLayout, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != layout.dim() {
            return Err(Error::Domain(format!(
                "expected {} amplitudes, got {}",
                layout.dim(),
                amplitudes.len()
            )));
        }
        Ok(Self { layout, amplitudes })
    }

    pub fn layout(&self) -> RegisterLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// The contiguous block of `2^n` space amplitudes for one
    /// `(leak, ancilla)` configuration.
    pub fn space_block(&self, leak: usize, ancilla: usize) -> &[Complex64] {
        let start = self.layout.index(leak, ancilla, 0);
        &self.amplitudes[start..start + self.layout.space_dim()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn apply_global_phase(&mut self, phase: f64) {
        if phase == 0.0 {
            return;
        }
        let factor = Complex64::from_polar(1.0, phase);
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    pub fn apply_1q(&mut self, q: QubitIndex, u: &Matrix2) -> Result<()> {
        self.apply_1q_checked(q, u, UnitarityCheck::Strict)
    }

    pub fn apply_1q_checked(
        &mut self,
        q: QubitIndex,
        u: &Matrix2,
        check: UnitarityCheck,
    ) -> Result<()> {
        let bit = self.layout.bit(q)?;
        check_unitary(u, check)?;
        let stride = 1usize << bit;
        for chunk in self.amplitudes.chunks_exact_mut(stride << 1) {
            let (lo, hi) = chunk.split_at_mut(stride);
            for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x0, x1) = (*a0, *a1);
                *a0 = u[0][0] * x0 + u[0][1] * x1;
                *a1 = u[1][0] * x0 + u[1][1] * x1;
            }
        }
        Ok(())
    }

    /// Applies a 4x4 unitary to two qubits. The two-qubit basis is
    /// `|q_high q_low⟩` with `q_high` as the most significant bit.
    pub fn apply_2q(&mut self, q_high: QubitIndex, q_low: QubitIndex, u: &Matrix4) -> Result<()> {
        self.apply_2q_checked(q_high, q_low, u, UnitarityCheck::Strict)
    }

    pub fn apply_2q_checked(
        &mut self,
        q_high: QubitIndex,
        q_low: QubitIndex,
        u: &Matrix4,
        check: UnitarityCheck,
    ) -> Result<()> {
        let hi = self.layout.bit(q_high)?;
        let lo = self.layout.bit(q_low)?;
        if hi == lo {
            return Err(Error::Domain("apply_2q needs two distinct qubits".into()));
        }
        check_unitary(u, check)?;
        let (mh, ml) = (1usize << hi, 1usize << lo);
        for base in 0..self.amplitudes.len() {
            if base & (mh | ml) != 0 {
                continue;
            }
            let idx = [base, base | ml, base | mh, base | mh | ml];
            let x = idx.map(|i| self.amplitudes[i]);
            for (r, &i) in idx.iter().enumerate() {
                self.amplitudes[i] =
                    u[r][0] * x[0] + u[r][1] * x[1] + u[r][2] * x[2] + u[r][3] * x[3];
            }
        }
        Ok(())
    }

    /// Multiplies every amplitude whose `q` bit is set by `e^{i phase}`.
    pub fn controlled_phase(&mut self, q: QubitIndex, phase: f64) -> Result<()> {
        let bit = self.layout.bit(q)?;
        let factor = Complex64::from_polar(1.0, phase);
        let stride = 1usize << bit;
        for chunk in self.amplitudes.chunks_exact_mut(stride << 1) {
            for a in &mut chunk[stride..] {
                *a *= factor;
            }
        }
        Ok(())
    }

    /// `⟨self|other⟩`.
    pub fn overlap(&self, other: &StateVector) -> Result<Complex64> {
        if self.layout != other.layout {
            return Err(Error::Domain(format!(
                "layout mismatch: {:?} vs {:?}",
                self.layout, other.layout
            )));
        }
        Ok(inner(&self.amplitudes, &other.amplitudes))
    }

    /// Pure-state fidelity `|⟨self|other⟩|²`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.overlap(other)?.norm_sqr())
    }

    /// Marginal probability of each space index, summed over the ancilla
    /// and leak configurations.
    pub fn space_probability_distribution(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.layout.space_dim()];
        for block in self.amplitudes.chunks_exact(self.layout.space_dim()) {
            for (p, a) in probs.iter_mut().zip(block) {
                *p += a.norm_sqr();
            }
        }
        probs
    }

    /// Total probability carried by amplitudes with a nonzero ancilla value.
    pub fn ancilla_excited_weight(&self) -> f64 {
        let block = self.layout.space_dim();
        let ancilla_span = block * self.layout.ancilla_dim();
        self.amplitudes
            .chunks_exact(ancilla_span)
            .flat_map(|leak_block| leak_block[block..].iter())
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Probability that the ancilla register reads zero.
    pub fn ancilla_zero_probability(&self) -> f64 {
        self.norm_sqr() - self.ancilla_excited_weight()
    }
}

#[inline]
pub(crate) fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Fidelity `⟨ref|ρ|ref⟩` of a reference pure state against the reduced
/// state of `noisy` after tracing out its leak qubit.
///
/// `ρ` is never materialized: with `|noisy⟩ = |b_0⟩|0⟩_leak + |b_1⟩|1⟩_leak`
/// the fidelity is `|⟨ref|b_0⟩|² + |⟨ref|b_1⟩|²`.
pub fn traced_fidelity(reference: &StateVector, noisy: &StateVector) -> Result<f64> {
    let r = reference.layout();
    let n = noisy.layout();
    if r.leak_qubits() != 0 || n.leak_qubits() != 1 || n.without_leak() != r {
        return Err(Error::Domain(format!(
            "traced fidelity needs a leak-free reference and the same layout plus one leak qubit, got {r:?} and {n:?}"
        )));
    }
    let half = r.dim();
    let (b0, b1) = noisy.amplitudes().split_at(half);
    Ok(inner(reference.amplitudes(), b0).norm_sqr() + inner(reference.amplitudes(), b1).norm_sqr())
}
