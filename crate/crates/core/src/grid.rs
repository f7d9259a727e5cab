//! Sampling of continuous wavefunctions on the space register.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::qstate::{RegisterLayout, StateVector};
use crate::{Error, Result};

/// Largest space register considered by [`suggest_space_qubits`].
pub const MAX_SUGGESTED_QUBITS: usize = 30;

/// `2^n` cells of width `Δ = (x_max - x_min) / 2^n` with samples at the
/// cell midpoints `x_i = x_min + (i + 0.5) Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub space_qubits: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, space_qubits: usize) -> Result<Self> {
        let grid = Self {
            x_min,
            x_max,
            space_qubits,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::Domain(format!(
                "grid range [{}, {}] is empty or not finite",
                self.x_min, self.x_max
            )));
        }
        if self.space_qubits == 0 || self.space_qubits > MAX_SUGGESTED_QUBITS {
            return Err(Error::Domain(format!(
                "grid needs between 1 and {MAX_SUGGESTED_QUBITS} qubits, got {}",
                self.space_qubits
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        1 << self.space_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn range(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Grid step `Δ`.
    pub fn step(&self) -> f64 {
        self.range() / self.len() as f64
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }

    pub fn point(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.step()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Largest momentum representable on the grid, `π / Δ`.
    pub fn nyquist_momentum(&self) -> f64 {
        PI / self.step()
    }
}

/// `ψ(x) ∝ exp(-(x - x₀)² / (4σ²)) · exp(i k₀ x)`, so `σ` is the standard
/// deviation of the position density `|ψ|²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPacket {
    pub center: f64,
    pub width: f64,
    #[serde(default)]
    pub momentum: f64,
}

impl GaussianPacket {
    pub fn new(center: f64, width: f64, momentum: f64) -> Result<Self> {
        let packet = Self {
            center,
            width,
            momentum,
        };
        packet.validate()?;
        Ok(packet)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::Domain(format!(
                "packet width must be positive, got {}",
                self.width
            )));
        }
        if !(self.center.is_finite() && self.momentum.is_finite()) {
            return Err(Error::Domain(
                "packet center and momentum must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Standard deviation of the momentum density, `1 / (2σ)`.
    pub fn momentum_width(&self) -> f64 {
        0.5 / self.width
    }

    /// Unnormalized amplitude at `x`.
    pub fn amplitude(&self, x: f64) -> Complex64 {
        let d = x - self.center;
        Complex64::from_polar(
            (-d * d / (4.0 * self.width * self.width)).exp(),
            self.momentum * x,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub hbar: f64,
    pub mass: f64,
    pub omega: f64,
    /// Trotter timestep `ε`.
    pub epsilon: f64,
    pub steps: usize,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
            omega: 1.0,
            epsilon: 0.05,
            steps: 40,
        }
    }
}

impl PhysicalParams {
    /// Checks the invariants. `epsilon = 0` is accepted so that a step can
    /// be exercised as the identity.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !(positive(self.hbar) && positive(self.mass) && positive(self.omega)) {
            return Err(Error::Domain(
                "hbar, mass and omega must be positive".into(),
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Domain(format!(
                "timestep must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.steps == 0 {
            return Err(Error::Domain("at least one step is required".into()));
        }
        Ok(())
    }
}

/// Samples `packet` at the grid midpoints and normalizes to unit norm.
pub fn sample_packet(grid: &SpatialGrid, packet: &GaussianPacket) -> Vec<Complex64> {
    if packet.width <= grid.step() / 4.0 {
        log::warn!(
            "packet width {} is undersampled by grid step {}",
            packet.width,
            grid.step()
        );
    }
    let mut samples: Vec<Complex64> = grid
        .points()
        .into_iter()
        .map(|x| packet.amplitude(x))
        .collect();
    let norm = samples.iter().map(|s| s.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        samples.iter_mut().for_each(|s| *s /= norm);
    }
    samples
}

/// Embeds space samples as `|0⟩_leak ⊗ |0⟩_ancilla ⊗ Σ C_i |i⟩`.
pub fn load_wavefunction(samples: &[Complex64], layout: RegisterLayout) -> Result<StateVector> {
    if samples.len() != layout.space_dim() {
        return Err(Error::Domain(format!(
            "{} samples do not fill a {}-qubit space register",
            samples.len(),
            layout.space_qubits()
        )));
    }
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); layout.dim()];
    amplitudes[..samples.len()].copy_from_slice(samples);
    StateVector::from_amplitudes(layout, amplitudes)
}

/// Spectral weight of the packet beyond the Nyquist momentum `±π/Δ`.
///
/// The momentum density of the packet is a Gaussian centred at `k₀` with
/// standard deviation `1/(2σ)`; sampling folds everything outside
/// `[-π/Δ, π/Δ]` back into the band, so the tail mass bounds the
/// reconstruction error.
pub fn aliasing_error(packet: &GaussianPacket, grid: &SpatialGrid) -> f64 {
    tail_beyond(packet, grid.nyquist_momentum())
}

fn tail_beyond(packet: &GaussianPacket, k_nyquist: f64) -> f64 {
    let scale = packet.momentum_width() * SQRT_2;
    let upper = 0.5 * libm::erfc((k_nyquist - packet.momentum) / scale);
    let lower = 0.5 * libm::erfc((k_nyquist + packet.momentum) / scale);
    (upper + lower).clamp(0.0, 1.0)
}

/// Smallest `n` for which a grid of `2^n` points over `range` keeps the
/// aliasing error below `tolerance`.
pub fn suggest_space_qubits(packet: &GaussianPacket, range: f64, tolerance: f64) -> Result<usize> {
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(Error::Domain(format!(
            "tolerance must lie in (0, 1), got {tolerance}"
        )));
    }
    if !(range > 0.0 && range.is_finite()) {
        return Err(Error::Domain(format!(
            "range must be positive, got {range}"
        )));
    }
    (1..=MAX_SUGGESTED_QUBITS)
        .find(|&n| tail_beyond(packet, PI * (1u64 << n) as f64 / range) < tolerance)
        .ok_or_else(|| {
            Error::Domain(format!(
                "no register of at most {MAX_SUGGESTED_QUBITS} qubits reaches tolerance {tolerance}"
            ))
        })
}
