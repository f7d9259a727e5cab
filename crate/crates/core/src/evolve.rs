//! Split-operator propagation on the space register.
//!
//! One Trotter step applies `e^{-iVε/ħ}` in position space and then
//! `F⁻¹ · e^{-iħk²ε/2m} · F` with `F` the quantum Fourier transform of the
//! space register. Each diagonal factor `e^{iφ(x)}` is realized through the
//! ancilla register:
//!
//! ```text
//! |0⟩_a|x⟩  →  |f(x)⟩_a|x⟩  →  e^{iδ f(x)} |f(x)⟩_a|x⟩  →  e^{iδ f(x)} |0⟩_a|x⟩
//! ```
//!
//! where `f(x)` is `φ(x)` quantized to `2^m` levels of spacing `δ`. The write
//! is an XOR permutation of ancilla basis states controlled by the space
//! index and the middle arrow is one phase gate per ancilla qubit,
//! proportional to the qubit weight.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::grid::{PhysicalParams, SpatialGrid};
use crate::qstate::{QubitIndex, StateVector};
use crate::{Error, Result};

/// Spectral cutoff used when none is configured.
pub const DEFAULT_SPECTRAL_CUTOFF: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    #[default]
    Harmonic,
}

/// `V(x) = ½ · stiffness · (x - center)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    #[serde(default)]
    pub kind: PotentialKind,
    pub center: f64,
    pub stiffness: f64,
}

impl PotentialSpec {
    pub fn harmonic(center: f64, stiffness: f64) -> Self {
        Self {
            kind: PotentialKind::Harmonic,
            center,
            stiffness,
        }
    }

    /// Harmonic well at the grid center with stiffness `mass · ω²`.
    pub fn for_grid(grid: &SpatialGrid, physical: &PhysicalParams) -> Self {
        Self::harmonic(
            grid.center(),
            physical.mass * physical.omega * physical.omega,
        )
    }

    pub fn value(&self, x: f64) -> f64 {
        match self.kind {
            PotentialKind::Harmonic => 0.5 * self.stiffness * (x - self.center).powi(2),
        }
    }

    /// Potential phases `-V(x_i) ε / ħ` on the grid.
    pub fn phases(&self, grid: &SpatialGrid, physical: &PhysicalParams) -> Vec<f64> {
        grid.points()
            .into_iter()
            .map(|x| -self.value(x) * physical.epsilon / physical.hbar)
            .collect()
    }

    pub fn validate(&self, grid: &SpatialGrid) -> Result<()> {
        if !(self.center.is_finite() && self.stiffness.is_finite()) {
            return Err(Error::Domain("potential parameters must be finite".into()));
        }
        if grid
            .points()
            .into_iter()
            .any(|x| !self.value(x).is_finite())
        {
            return Err(Error::Domain("potential is not finite on the grid".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantizationMode {
    /// Spread the `2^m` levels over the actual range of the phase function.
    #[default]
    Scaled,
    /// Fixed levels of `2π / 2^m`, wrapped modulo `2π`.
    Wrapped,
}

impl fmt::Display for QuantizationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QuantizationMode::Scaled => "scaled",
            QuantizationMode::Wrapped => "wrapped",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    pub ancilla_qubits: usize,
    #[serde(default)]
    pub mode: QuantizationMode,
    /// Fraction of the Nyquist momentum beyond which no kinetic phase is applied.
    pub spectral_cutoff_fraction: f64,
}

impl Default for QuantizationSpec {
    fn default() -> Self {
        Self {
            ancilla_qubits: 12,
            mode: QuantizationMode::Scaled,
            spectral_cutoff_fraction: DEFAULT_SPECTRAL_CUTOFF,
        }
    }
}

impl QuantizationSpec {
    pub fn new(
        ancilla_qubits: usize,
        mode: QuantizationMode,
        spectral_cutoff_fraction: f64,
    ) -> Result<Self> {
        let spec = Self {
            ancilla_qubits,
            mode,
            spectral_cutoff_fraction,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ancilla_qubits == 0 || self.ancilla_qubits > 40 {
            return Err(Error::Domain(format!(
                "quantization needs between 1 and 40 ancilla qubits, got {}",
                self.ancilla_qubits
            )));
        }
        if !(self.spectral_cutoff_fraction > 0.0 && self.spectral_cutoff_fraction <= 1.0) {
            return Err(Error::Domain(format!(
                "spectral cutoff fraction must lie in (0, 1], got {}",
                self.spectral_cutoff_fraction
            )));
        }
        Ok(())
    }
}

/// A phase function reduced to integer ancilla values: the realized phase
/// at `x` is `offset + delta · table[x]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPhases {
    pub table: Vec<u64>,
    pub delta: f64,
    /// Constant phase removed before quantization; applied as a global phase.
    pub offset: f64,
}

impl QuantizedPhases {
    pub fn realized(&self) -> Vec<f64> {
        self.table
            .iter()
            .map(|&t| self.offset + self.delta * t as f64)
            .collect()
    }
}

pub fn quantize(phases: &[f64], bits: usize, mode: QuantizationMode) -> QuantizedPhases {
    let levels = 1u64 << bits;
    match mode {
        QuantizationMode::Scaled => {
            let lo = phases.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = phases.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if phases.is_empty() || hi <= lo {
                let offset = if phases.is_empty() { 0.0 } else { lo };
                return QuantizedPhases {
                    table: vec![0; phases.len()],
                    delta: 0.0,
                    offset,
                };
            }
            let delta = (hi - lo) / (levels - 1) as f64;
            let table = phases
                .iter()
                .map(|&p| (((p - lo) / delta).round().max(0.0) as u64).min(levels - 1))
                .collect();
            QuantizedPhases {
                table,
                delta,
                offset: lo,
            }
        }
        QuantizationMode::Wrapped => {
            let delta = 2.0 * PI / levels as f64;
            let table = phases
                .iter()
                .map(|&p| ((p / delta).round() as i128).rem_euclid(levels as i128) as u64)
                .collect();
            QuantizedPhases {
                table,
                delta,
                offset: 0.0,
            }
        }
    }
}

/// Momenta of the Fourier components of the space register and their
/// kinetic phases `-ħ k² ε / (2 mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticTable {
    pub momenta: Vec<f64>,
    pub phases: Vec<f64>,
}

impl KineticTable {
    pub fn new(grid: &SpatialGrid, physical: &PhysicalParams) -> Self {
        let len = grid.len();
        let dk = 2.0 * PI / (len as f64 * grid.step());
        let momenta: Vec<f64> = (0..len)
            .map(|j| {
                let signed = if j < len / 2 {
                    j as f64
                } else {
                    j as f64 - len as f64
                };
                signed * dk
            })
            .collect();
        let phases = momenta
            .iter()
            .map(|k| -physical.hbar * k * k * physical.epsilon / (2.0 * physical.mass))
            .collect();
        Self { momenta, phases }
    }

    /// Kinetic phases with every component beyond `fraction · π/Δ` zeroed.
    pub fn truncated_phases(&self, grid: &SpatialGrid, fraction: f64) -> Vec<f64> {
        let limit = fraction * grid.nyquist_momentum() * (1.0 + 1e-12);
        self.momenta
            .iter()
            .zip(&self.phases)
            .map(|(k, &p)| if k.abs() <= limit { p } else { 0.0 })
            .collect()
    }
}

/// Unitary DFT over the space register, `ψ̃_k = 2^{-n/2} Σ_x ψ_x e^{-2πi kx/2^n}`,
/// applied to every `(leak, ancilla)` block.
#[derive(Clone)]
pub struct SpaceFourier {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl fmt::Debug for SpaceFourier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpaceFourier")
            .field("len", &self.forward.len())
            .finish()
    }
}

impl SpaceFourier {
    pub fn new(space_qubits: usize) -> Self {
        let len = 1usize << space_qubits;
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
            scale: 1.0 / (len as f64).sqrt(),
        }
    }

    fn run(&self, fft: &Arc<dyn Fft<f64>>, state: &mut StateVector) -> Result<()> {
        if fft.len() != state.layout().space_dim() {
            return Err(Error::Domain(format!(
                "transform of length {} applied to a {}-qubit space register",
                fft.len(),
                state.layout().space_qubits()
            )));
        }
        let amps = state.amplitudes_mut();
        fft.process(amps);
        for a in amps.iter_mut() {
            *a *= self.scale;
        }
        Ok(())
    }

    pub fn qft(&self, state: &mut StateVector) -> Result<()> {
        self.run(&self.forward, state)
    }

    pub fn iqft(&self, state: &mut StateVector) -> Result<()> {
        self.run(&self.inverse, state)
    }
}

pub fn qft(state: &mut StateVector) {
    let fourier = SpaceFourier::new(state.layout().space_qubits());
    fourier
        .qft(state)
        .expect("transform sized from the state layout");
}

pub fn iqft(state: &mut StateVector) {
    let fourier = SpaceFourier::new(state.layout().space_qubits());
    fourier
        .iqft(state)
        .expect("transform sized from the state layout");
}

fn check_table(state: &StateVector, table: &[u64]) -> Result<()> {
    let layout = state.layout();
    if table.len() != layout.space_dim() {
        return Err(Error::Domain(format!(
            "function table has {} entries, space register has {}",
            table.len(),
            layout.space_dim()
        )));
    }
    let limit = layout.ancilla_dim() as u64;
    if let Some(bad) = table.iter().find(|&&t| t >= limit) {
        return Err(Error::Domain(format!(
            "table value {bad} does not fit in {} ancilla qubits",
            layout.ancilla_qubits()
        )));
    }
    Ok(())
}

fn require_clean_ancilla(state: &StateVector) -> Result<()> {
    let excited = state.ancilla_excited_weight();
    if excited != 0.0 {
        return Err(Error::Precondition(format!(
            "ancilla register is not in |0⟩ (excited weight {excited:e})"
        )));
    }
    Ok(())
}

/// `|a⟩_a|x⟩ → |a ⊕ table[x]⟩_a|x⟩` on every amplitude.
fn xor_write(state: &mut StateVector, table: &[u64]) {
    let layout = state.layout();
    let leak_states = 1usize << layout.leak_qubits();
    let ancilla_states = layout.ancilla_dim();
    let amps = state.amplitudes_mut();
    for leak in 0..leak_states {
        for (x, &t) in table.iter().enumerate() {
            let t = t as usize;
            if t == 0 {
                continue;
            }
            for a in 0..ancilla_states {
                let b = a ^ t;
                if a < b {
                    amps.swap(layout.index(leak, a, x), layout.index(leak, b, x));
                }
            }
        }
    }
}

/// Writes `table[x]` onto the ancilla register, controlled by the space
/// index. The ancilla must be in `|0⟩` on every populated amplitude.
pub fn write_function(state: &mut StateVector, table: &[u64]) -> Result<()> {
    check_table(state, table)?;
    require_clean_ancilla(state)?;
    xor_write(state, table);
    Ok(())
}

/// Phases ancilla qubit `j` by `delta · 2^j`, so an amplitude with ancilla
/// value `v` picks up `e^{i delta v}`.
pub fn phase_by_weight(state: &mut StateVector, delta: f64) -> Result<()> {
    if delta == 0.0 {
        return Ok(());
    }
    for j in 0..state.layout().ancilla_qubits() {
        state.controlled_phase(QubitIndex::ancilla(j), delta * (1u64 << j) as f64)?;
    }
    Ok(())
}

/// Write, phase, unwrite with an already quantized phase function. The
/// removed offset is restored as a global phase.
pub fn apply_quantized(state: &mut StateVector, phases: &QuantizedPhases) -> Result<()> {
    check_table(state, &phases.table)?;
    require_clean_ancilla(state)?;
    xor_write(state, &phases.table);
    phase_by_weight(state, phases.delta)?;
    xor_write(state, &phases.table);
    state.apply_global_phase(phases.offset);
    Ok(())
}

/// Realizes `e^{iφ(x)}` on the space register through the ancilla, with
/// `φ` quantized according to `quant`. Returns the quantization used.
pub fn apply_phase_oracle(
    state: &mut StateVector,
    phases: &[f64],
    quant: &QuantizationSpec,
) -> Result<QuantizedPhases> {
    quant.validate()?;
    if quant.ancilla_qubits > state.layout().ancilla_qubits() {
        return Err(Error::Config(format!(
            "quantization uses {} ancilla qubits but the register has {}",
            quant.ancilla_qubits,
            state.layout().ancilla_qubits()
        )));
    }
    let q = quantize(phases, quant.ancilla_qubits, quant.mode);
    apply_quantized(state, &q)?;
    Ok(q)
}

/// Rough c-not count for a function write: one multiply-controlled NOT
/// with `space_qubits` controls per set bit of the table.
pub fn estimate_write_gates(table: &[u64], space_qubits: usize) -> usize {
    table.iter().map(|t| t.count_ones() as usize).sum::<usize>() * space_qubits
}

/// Per-step observations recorded by [`Propagator::evolve`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    /// Space distribution before the first step and after every step.
    pub distributions: Vec<Vec<f64>>,
    /// Norm of the state after every step.
    pub norms: Vec<f64>,
}

/// Precomputed split-operator step for a fixed problem.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: SpatialGrid,
    potential: PotentialSpec,
    physical: PhysicalParams,
    quant: QuantizationSpec,
    potential_phases: QuantizedPhases,
    kinetic_phases: QuantizedPhases,
    fourier: SpaceFourier,
    check_invariants: bool,
}

impl Propagator {
    pub fn new(
        grid: &SpatialGrid,
        potential: &PotentialSpec,
        physical: &PhysicalParams,
        quant: &QuantizationSpec,
    ) -> Result<Self> {
        grid.validate()?;
        physical.validate()?;
        quant.validate()?;
        potential.validate(grid)?;
        let potential_phases = quantize(
            &potential.phases(grid, physical),
            quant.ancilla_qubits,
            quant.mode,
        );
        let kinetic = KineticTable::new(grid, physical);
        let kinetic_phases = quantize(
            &kinetic.truncated_phases(grid, quant.spectral_cutoff_fraction),
            quant.ancilla_qubits,
            quant.mode,
        );
        Ok(Self {
            grid: *grid,
            potential: *potential,
            physical: *physical,
            quant: *quant,
            potential_phases,
            kinetic_phases,
            fourier: SpaceFourier::new(grid.space_qubits),
            check_invariants: false,
        })
    }

    /// When enabled, every oracle call verifies that the ancilla register
    /// returned exactly to `|0⟩` and every step verifies norm preservation.
    pub fn with_invariant_checks(mut self, enabled: bool) -> Self {
        self.check_invariants = enabled;
        self
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.potential
    }

    pub fn physical(&self) -> &PhysicalParams {
        &self.physical
    }

    pub fn quantization(&self) -> &QuantizationSpec {
        &self.quant
    }

    pub fn potential_phases(&self) -> &QuantizedPhases {
        &self.potential_phases
    }

    pub fn kinetic_phases(&self) -> &QuantizedPhases {
        &self.kinetic_phases
    }

    pub fn fourier(&self) -> &SpaceFourier {
        &self.fourier
    }

    fn check_state(&self, state: &StateVector) -> Result<()> {
        let layout = state.layout();
        if layout.space_qubits() != self.grid.space_qubits {
            return Err(Error::Config(format!(
                "state has {} space qubits, grid has {}",
                layout.space_qubits(),
                self.grid.space_qubits
            )));
        }
        if layout.ancilla_qubits() < self.quant.ancilla_qubits {
            return Err(Error::Config(format!(
                "state has {} ancilla qubits, quantization needs {}",
                layout.ancilla_qubits(),
                self.quant.ancilla_qubits
            )));
        }
        Ok(())
    }

    fn oracle(&self, state: &mut StateVector, phases: &QuantizedPhases) -> Result<()> {
        apply_quantized(state, phases)?;
        if self.check_invariants {
            let excited = state.ancilla_excited_weight();
            if excited != 0.0 {
                return Err(Error::Invariant(format!(
                    "ancilla not returned to |0⟩ after oracle (excited weight {excited:e})"
                )));
            }
        }
        Ok(())
    }

    pub fn potential_step(&self, state: &mut StateVector) -> Result<()> {
        self.check_state(state)?;
        self.oracle(state, &self.potential_phases)
    }

    pub fn kinetic_step(&self, state: &mut StateVector) -> Result<()> {
        self.check_state(state)?;
        self.fourier.qft(state)?;
        self.oracle(state, &self.kinetic_phases)?;
        self.fourier.iqft(state)
    }

    /// `e^{-iH₀ε/ħ} e^{-iVε/ħ}`: potential first, kinetic last.
    pub fn trotter_step(&self, state: &mut StateVector) -> Result<()> {
        self.potential_step(state)?;
        self.kinetic_step(state)
    }

    /// Runs `steps` Trotter steps. `hook(step, state)` is called after each
    /// step (numbered from 1), before the step is recorded.
    pub fn evolve<F>(
        &self,
        state: &mut StateVector,
        steps: usize,
        mut hook: F,
    ) -> Result<Trajectory>
    where
        F: FnMut(usize, &mut StateVector) -> Result<()>,
    {
        let initial_norm = state.norm_sqr();
        let mut trajectory = Trajectory {
            distributions: Vec::with_capacity(steps + 1),
            norms: Vec::with_capacity(steps),
        };
        trajectory
            .distributions
            .push(state.space_probability_distribution());
        for step in 1..=steps {
            self.trotter_step(state)?;
            hook(step, state)?;
            let norm = state.norm_sqr();
            if self.check_invariants && (norm - initial_norm).abs() > 1e-12 {
                return Err(Error::Invariant(format!(
                    "norm drifted from {initial_norm} to {norm} at step {step}"
                )));
            }
            trajectory.norms.push(norm);
            trajectory
                .distributions
                .push(state.space_probability_distribution());
        }
        Ok(trajectory)
    }
}

pub fn potential_step(
    state: &mut StateVector,
    grid: &SpatialGrid,
    potential: &PotentialSpec,
    physical: &PhysicalParams,
    quant: &QuantizationSpec,
) -> Result<()> {
    Propagator::new(grid, potential, physical, quant)?.potential_step(state)
}

pub fn kinetic_step(
    state: &mut StateVector,
    grid: &SpatialGrid,
    physical: &PhysicalParams,
    quant: &QuantizationSpec,
) -> Result<()> {
    let free = PotentialSpec::harmonic(grid.center(), 0.0);
    Propagator::new(grid, &free, physical, quant)?.kinetic_step(state)
}

pub fn trotter_step(
    state: &mut StateVector,
    grid: &SpatialGrid,
    potential: &PotentialSpec,
    physical: &PhysicalParams,
    quant: &QuantizationSpec,
) -> Result<()> {
    Propagator::new(grid, potential, physical, quant)?.trotter_step(state)
}
