//! Experiment harness: zero-error baselines, error sweeps, the classical
//! split-step reference and CSV/JSON export.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::evolve::{PotentialSpec, Propagator, QuantizationSpec};
use crate::grid::{load_wavefunction, sample_packet, GaussianPacket, PhysicalParams, SpatialGrid};
use crate::noise::{
    self, ErrorSchedule, ErrorSpec, LeakErrorSpec, LeakKind, MemoryErrorSpec, MemoryMode,
};
use crate::qstate::{RegisterLayout, StateVector};
use crate::{Error, Result};

pub mod verify;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Magnitudes of the memory-θ table columns.
pub const THETA_MAGNITUDES: [f64; 4] = [0.05, 0.10, 0.20, 0.30];
/// Magnitudes of the leak table columns.
pub const LEAK_MAGNITUDES: [f64; 3] = [0.05, 0.10, 0.30];

/// Everything needed to reproduce one run or one sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub layout: RegisterLayout,
    pub grid: SpatialGrid,
    pub packet: GaussianPacket,
    pub physical: PhysicalParams,
    pub potential: PotentialSpec,
    pub quant: QuantizationSpec,
    pub schedule: ErrorSchedule,
    pub error: Option<ErrorSpec>,
    pub seed: u64,
    pub replicates: usize,
    /// Reuse one random stream per replicate across every sweep cell, so
    /// that cells differ only in the error they model.
    pub shared_random_stream: bool,
}

impl Default for ExperimentConfig {
    /// Harmonic oscillator with `ħ = mass = ω = 1` on `[-8, 8]` with six
    /// space qubits and twelve ancillae; packet at `x₀ = 2` with a spread of
    /// 1/50 of the range; 40 steps of `ε = 0.05`.
    fn default() -> Self {
        let grid = SpatialGrid {
            x_min: -8.0,
            x_max: 8.0,
            space_qubits: 6,
        };
        let physical = PhysicalParams::default();
        Self {
            layout: RegisterLayout::new(6, 12, 0).expect("valid default layout"),
            grid,
            packet: GaussianPacket {
                center: 2.0,
                width: grid.range() / 50.0,
                momentum: 0.0,
            },
            physical,
            potential: PotentialSpec::for_grid(&grid, &physical),
            quant: QuantizationSpec::default(),
            schedule: ErrorSchedule::default(),
            error: None,
            seed: 42,
            replicates: 200,
            shared_random_stream: true,
        }
    }
}

impl ExperimentConfig {
    /// The 6 + 7 qubit configuration used for the error sweeps.
    pub fn compact() -> Self {
        Self::default().with_ancilla_qubits(7)
    }

    pub fn with_ancilla_qubits(mut self, m: usize) -> Self {
        self.quant.ancilla_qubits = m;
        self.layout = RegisterLayout::new(self.layout.space_qubits(), m, self.layout.leak_qubits())
            .expect("ancilla count within the register cap");
        self
    }

    /// Sets the error and adds or drops the leak qubit to match it.
    pub fn with_error(mut self, error: Option<ErrorSpec>) -> Self {
        let needs_leak = error.is_some_and(|e| e.needs_leak_qubit());
        self.layout = if needs_leak {
            self.layout
                .with_leak()
                .expect("leak qubit within the register cap")
        } else {
            self.layout.without_leak()
        };
        self.error = error;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.packet.validate()?;
        self.physical.validate()?;
        self.quant.validate()?;
        self.potential.validate(&self.grid)?;
        self.schedule.validate()?;
        if self.layout.space_qubits() != self.grid.space_qubits {
            return Err(Error::Config(format!(
                "layout has {} space qubits but the grid has {}",
                self.layout.space_qubits(),
                self.grid.space_qubits
            )));
        }
        if self.layout.ancilla_qubits() != self.quant.ancilla_qubits {
            return Err(Error::Config(format!(
                "layout has {} ancilla qubits but quantization uses {}",
                self.layout.ancilla_qubits(),
                self.quant.ancilla_qubits
            )));
        }
        if self.schedule.total_steps != self.physical.steps {
            return Err(Error::Config(format!(
                "schedule covers {} steps but the run has {}",
                self.schedule.total_steps, self.physical.steps
            )));
        }
        if self.replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        if let Some(error) = &self.error {
            error.validate()?;
            if error.qubit() >= self.layout.space_qubits() {
                return Err(Error::Config(format!(
                    "error target qubit {} outside a {}-qubit space register",
                    error.qubit(),
                    self.layout.space_qubits()
                )));
            }
            if error.needs_leak_qubit() && self.layout.leak_qubits() != 1 {
                return Err(Error::Config(
                    "leak errors need a layout with one leak qubit".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn propagator(&self) -> Result<Propagator> {
        Propagator::new(&self.grid, &self.potential, &self.physical, &self.quant)
    }

    pub fn initial_samples(&self) -> Vec<Complex64> {
        sample_packet(&self.grid, &self.packet)
    }
}

/// `f(t)` after every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityTrace {
    pub values: Vec<f64>,
}

impl FidelityTrace {
    pub fn final_fidelity(&self) -> f64 {
        self.values.last().copied().unwrap_or(1.0)
    }
}

/// The zero-error run, kept as space amplitudes per step. Between steps the
/// ancilla register is exactly `|0⟩`, so these determine the full state.
#[derive(Debug, Clone)]
pub struct Baseline {
    layout: RegisterLayout,
    amplitudes: Vec<Vec<Complex64>>,
    distributions: Vec<Vec<f64>>,
}

impl Baseline {
    pub fn compute(config: &ExperimentConfig) -> Result<Self> {
        let layout = config.layout.without_leak();
        let propagator = config.propagator()?.with_invariant_checks(true);
        let mut state = load_wavefunction(&config.initial_samples(), layout)?;
        let mut amplitudes = vec![state.space_block(0, 0).to_vec()];
        let trajectory = propagator.evolve(&mut state, config.physical.steps, |_, s| {
            amplitudes.push(s.space_block(0, 0).to_vec());
            Ok(())
        })?;
        Ok(Self {
            layout,
            amplitudes,
            distributions: trajectory.distributions,
        })
    }

    pub fn steps(&self) -> usize {
        self.amplitudes.len() - 1
    }

    /// Space amplitudes after `step` steps (0 is the initial state).
    pub fn space_amplitudes(&self, step: usize) -> &[Complex64] {
        &self.amplitudes[step]
    }

    pub fn distributions(&self) -> &[Vec<f64>] {
        &self.distributions
    }

    pub fn state(&self, step: usize) -> Result<StateVector> {
        load_wavefunction(&self.amplitudes[step], self.layout)
    }

    /// Fidelity of `state` against the baseline after `step` steps: pure
    /// overlap for leak-free layouts, leak-traced otherwise. The reference
    /// lives in the `ancilla = 0` block, so only those blocks contribute.
    pub fn fidelity(&self, step: usize, state: &StateVector) -> Result<f64> {
        let layout = state.layout();
        if layout.without_leak() != self.layout || layout.leak_qubits() > 1 {
            return Err(Error::Domain(format!(
                "state layout {layout:?} does not match the baseline layout {:?}",
                self.layout
            )));
        }
        let reference = &self.amplitudes[step];
        Ok((0..1usize << layout.leak_qubits())
            .map(|leak| {
                reference
                    .iter()
                    .zip(state.space_block(leak, 0))
                    .map(|(r, s)| r.conj() * s)
                    .sum::<Complex64>()
                    .norm_sqr()
            })
            .sum())
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: FidelityTrace,
    /// `|ψ(x;t)|²` of the zero-error run, step 0 first.
    pub baseline_distributions: Vec<Vec<f64>>,
    /// `|ψ(x;t)|²` of the erroneous run (leak traced), step 0 first.
    pub noisy_distributions: Vec<Vec<f64>>,
    pub norms: Vec<f64>,
    pub error_applications: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn error_code(error: &ErrorSpec) -> u64 {
    match error {
        ErrorSpec::Memory(m) => m.mode as u64,
        ErrorSpec::Leak(l) => 16 + l.kind as u64,
    }
}

/// Random stream for one replicate. With a shared stream the draws depend
/// only on the master seed and the replicate; otherwise each cell gets its
/// own substream.
pub fn replicate_rng(
    seed: u64,
    replicate: usize,
    shared: bool,
    error: Option<&ErrorSpec>,
) -> ChaCha8Rng {
    let mut stream = splitmix64(replicate as u64);
    if let (false, Some(e)) = (shared, error) {
        for part in [error_code(e), e.qubit() as u64, e.max_radians().to_bits()] {
            stream = splitmix64(stream ^ part);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Runs the erroneous pipeline of `config` against a precomputed baseline.
pub fn run_with_baseline(
    config: &ExperimentConfig,
    baseline: &Baseline,
    replicate: usize,
) -> Result<RunOutput> {
    config.validate()?;
    let propagator = config.propagator()?.with_invariant_checks(true);
    let mut state = load_wavefunction(&config.initial_samples(), config.layout)?;
    let mut rng = replicate_rng(
        config.seed,
        replicate,
        config.shared_random_stream,
        config.error.as_ref(),
    );
    let mut values = Vec::with_capacity(config.physical.steps);
    let mut applications = 0;
    let trajectory = propagator.evolve(&mut state, config.physical.steps, |step, s| {
        if let Some(error) = &config.error {
            if noise::inject(s, step, &config.schedule, error, &mut rng)? {
                applications += 1;
            }
        }
        values.push(baseline.fidelity(step, s)?.clamp(0.0, 1.0));
        Ok(())
    })?;
    Ok(RunOutput {
        trace: FidelityTrace { values },
        baseline_distributions: baseline.distributions().to_vec(),
        noisy_distributions: trajectory.distributions,
        norms: trajectory.norms,
        error_applications: applications,
    })
}

/// Zero-error baseline plus erroneous run for one replicate.
pub fn run_single(config: &ExperimentConfig, replicate: usize) -> Result<RunOutput> {
    config.validate()?;
    let baseline = Baseline::compute(config)?;
    run_with_baseline(config, &baseline, replicate)
}

/// Error family and parameter of a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMode {
    Alpha,
    Beta,
    Theta,
    U1,
    U2,
}

impl ErrorMode {
    pub fn error_spec(self, qubit: usize, max_radians: f64) -> ErrorSpec {
        let memory = |mode| {
            ErrorSpec::Memory(MemoryErrorSpec {
                mode,
                max_radians,
                qubit,
            })
        };
        let leak = |kind| {
            ErrorSpec::Leak(LeakErrorSpec {
                kind,
                max_radians,
                qubit,
            })
        };
        match self {
            ErrorMode::Alpha => memory(MemoryMode::Alpha),
            ErrorMode::Beta => memory(MemoryMode::Beta),
            ErrorMode::Theta => memory(MemoryMode::Theta),
            ErrorMode::U1 => leak(LeakKind::U1),
            ErrorMode::U2 => leak(LeakKind::U2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorMode::Alpha => "alpha",
            ErrorMode::Beta => "beta",
            ErrorMode::Theta => "theta",
            ErrorMode::U1 => "u1",
            ErrorMode::U2 => "u2",
        }
    }
}

impl fmt::Display for ErrorMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ErrorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(ErrorMode::Alpha),
            "beta" => Ok(ErrorMode::Beta),
            "theta" => Ok(ErrorMode::Theta),
            "u1" => Ok(ErrorMode::U1),
            "u2" => Ok(ErrorMode::U2),
            other => Err(Error::Config(format!("unknown error mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub qubit: usize,
    pub mode: ErrorMode,
    pub max_radians: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub key: CellKey,
    pub mean: f64,
    /// Sample standard deviation of the final fidelity.
    pub std: f64,
    pub replicates: usize,
}

impl CellResult {
    pub fn standard_error(&self) -> f64 {
        self.std / (self.replicates as f64).sqrt()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TableResult {
    pub cells: Vec<CellResult>,
}

impl TableResult {
    pub fn get(&self, qubit: usize, mode: ErrorMode, max_radians: f64) -> Option<&CellResult> {
        self.cells.iter().find(|c| {
            c.key.qubit == qubit && c.key.mode == mode && c.key.max_radians == max_radians
        })
    }

    /// Qubit rows by `(mode, magnitude)` columns, mean ± std.
    pub fn pivot(&self) -> String {
        let mut columns: Vec<(ErrorMode, f64)> = Vec::new();
        let mut rows: Vec<usize> = Vec::new();
        for c in &self.cells {
            if !columns.contains(&(c.key.mode, c.key.max_radians)) {
                columns.push((c.key.mode, c.key.max_radians));
            }
            if !rows.contains(&c.key.qubit) {
                rows.push(c.key.qubit);
            }
        }
        let mut out = format!("{:>5}", "qubit");
        for (mode, max) in &columns {
            out += &format!(" {:>15}", format!("{mode}={max:.2}"));
        }
        out.push('\n');
        for q in rows {
            out += &format!("{q:>5}");
            for (mode, max) in &columns {
                match self.get(q, *mode, *max) {
                    Some(c) => out += &format!(" {:>15}", format!("{:.3} ± {:.3}", c.mean, c.std)),
                    None => out += &format!(" {:>15}", "-"),
                }
            }
            out.push('\n');
        }
        out
    }
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every cell for `replicates` replicates on the current rayon pool.
/// Output order follows `cells` and is independent of scheduling.
pub fn run_cells(
    base: &ExperimentConfig,
    cells: &[CellKey],
    replicates: usize,
) -> Result<TableResult> {
    if replicates == 0 {
        return Err(Error::Config("at least one replicate is required".into()));
    }
    let clean = base.clone().with_error(None);
    clean.validate()?;
    let baseline = Baseline::compute(&clean)?;
    let configs: Vec<ExperimentConfig> = cells
        .iter()
        .map(|cell| {
            let config = base
                .clone()
                .with_error(Some(cell.mode.error_spec(cell.qubit, cell.max_radians)));
            config.validate().map(|_| config)
        })
        .collect::<Result<_>>()?;
    let finals: Vec<f64> = (0..cells.len() * replicates)
        .into_par_iter()
        .map(|task| {
            let (cell, replicate) = (task / replicates, task % replicates);
            run_with_baseline(&configs[cell], &baseline, replicate)
                .map(|run| run.trace.final_fidelity())
        })
        .collect::<Result<_>>()?;
    let cells = cells
        .iter()
        .zip(finals.chunks_exact(replicates))
        .map(|(key, values)| {
            let (mean, std) = mean_and_std(values);
            CellResult {
                key: *key,
                mean,
                std,
                replicates,
            }
        })
        .collect();
    Ok(TableResult { cells })
}

/// Full grid `qubits × modes × magnitudes`, qubit-major.
pub fn run_table(
    base: &ExperimentConfig,
    modes: &[ErrorMode],
    magnitudes: &[f64],
    qubits: &[usize],
    replicates: usize,
) -> Result<TableResult> {
    let cells: Vec<CellKey> = qubits
        .iter()
        .flat_map(|&qubit| {
            modes.iter().flat_map(move |&mode| {
                magnitudes.iter().map(move |&max_radians| CellKey {
                    qubit,
                    mode,
                    max_radians,
                })
            })
        })
        .collect();
    run_cells(base, &cells, replicates)
}

/// Memory errors: α = 0.30 and θ ∈ {0.05, 0.10, 0.20, 0.30} on every space qubit.
pub fn table1_cells(space_qubits: usize) -> Vec<CellKey> {
    (0..space_qubits)
        .flat_map(|qubit| {
            std::iter::once((ErrorMode::Alpha, 0.30))
                .chain(THETA_MAGNITUDES.iter().map(|&m| (ErrorMode::Theta, m)))
                .map(move |(mode, max_radians)| CellKey {
                    qubit,
                    mode,
                    max_radians,
                })
        })
        .collect()
}

/// Leak errors of one kind at θ ∈ {0.05, 0.10, 0.30} on every space qubit.
pub fn leak_table_cells(kind: LeakKind, space_qubits: usize) -> Vec<CellKey> {
    let mode = match kind {
        LeakKind::U1 => ErrorMode::U1,
        LeakKind::U2 => ErrorMode::U2,
    };
    (0..space_qubits)
        .flat_map(|qubit| {
            LEAK_MAGNITUDES.iter().map(move |&max_radians| CellKey {
                qubit,
                mode,
                max_radians,
            })
        })
        .collect()
}

/// A preset run producing one `|ψ(x;t)|²` series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FigurePreset {
    pub name: &'static str,
    pub error: ErrorSpec,
}

/// θ memory errors on qubits 0 and 5, then U1 and U2 leaks at 0.1 rad.
pub fn figure_presets() -> Vec<FigurePreset> {
    let preset = |name, mode: ErrorMode, qubit, max| FigurePreset {
        name,
        error: mode.error_spec(qubit, max),
    };
    vec![
        preset("figure1", ErrorMode::Theta, 0, 0.30),
        preset("figure2", ErrorMode::Theta, 5, 0.30),
        preset("figure3", ErrorMode::U1, 0, 0.10),
        preset("figure4", ErrorMode::U1, 5, 0.10),
        preset("figure5", ErrorMode::U2, 0, 0.10),
        preset("figure6", ErrorMode::U2, 5, 0.10),
    ]
}

/// Normalized autocorrelation `Σ d_i d_{i+lag} / Σ d_i²` of the deviation
/// `d = noisy - baseline` of two distributions.
pub fn deviation_autocorrelation(noisy: &[f64], baseline: &[f64], lag: usize) -> f64 {
    let d: Vec<f64> = noisy.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let energy: f64 = d.iter().map(|v| v * v).sum();
    if energy == 0.0 || lag >= d.len() {
        return 0.0;
    }
    d.iter().zip(&d[lag..]).map(|(a, b)| a * b).sum::<f64>() / energy
}

/// Classical split-step Fourier evolution with exact exponentials and no
/// quantization. Returns the wavefunction before the first step and after
/// every step. The transform is a direct DFT, independent of the circuit's
/// FFT.
pub fn reference_evolve(
    grid: &SpatialGrid,
    packet: &GaussianPacket,
    potential: &PotentialSpec,
    physical: &PhysicalParams,
) -> Vec<Vec<Complex64>> {
    let len = grid.len();
    let twiddle: Vec<Complex64> = (0..len)
        .map(|j| Complex64::from_polar(1.0, -2.0 * PI * j as f64 / len as f64))
        .collect();
    let dft = |input: &[Complex64], inverse: bool| -> Vec<Complex64> {
        let scale = 1.0 / (len as f64).sqrt();
        (0..len)
            .map(|k| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (x, v) in input.iter().enumerate() {
                    let w = twiddle[(k * x) % len];
                    acc += v * if inverse { w.conj() } else { w };
                }
                acc * scale
            })
            .collect()
    };
    let potential_factor: Vec<Complex64> = grid
        .points()
        .into_iter()
        .map(|x| Complex64::from_polar(1.0, -potential.value(x) * physical.epsilon / physical.hbar))
        .collect();
    let dk = 2.0 * PI / grid.range();
    let kinetic_factor: Vec<Complex64> = (0..len)
        .map(|j| {
            let k = if j < len / 2 {
                j as f64
            } else {
                j as f64 - len as f64
            } * dk;
            Complex64::from_polar(
                1.0,
                -physical.hbar * k * k * physical.epsilon / (2.0 * physical.mass),
            )
        })
        .collect();

    let mut psi = sample_packet(grid, packet);
    let mut series = Vec::with_capacity(physical.steps + 1);
    series.push(psi.clone());
    for _ in 0..physical.steps {
        psi.iter_mut()
            .zip(&potential_factor)
            .for_each(|(a, f)| *a *= f);
        let mut spectrum = dft(&psi, false);
        spectrum
            .iter_mut()
            .zip(&kinetic_factor)
            .for_each(|(a, f)| *a *= f);
        psi = dft(&spectrum, true);
        series.push(psi.clone());
    }
    series
}

/// Fidelity between two space wavefunctions, `|⟨a|b⟩|²`.
pub fn wavefunction_fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.conj() * y)
        .sum::<Complex64>()
        .norm_sqr()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub command: String,
    pub config: ExperimentConfig,
    #[serde(default)]
    pub cells: Vec<CellKey>,
    pub replicates: usize,
}

impl Manifest {
    pub fn new(
        command: impl Into<String>,
        config: &ExperimentConfig,
        cells: &[CellKey],
        replicates: usize,
    ) -> Self {
        Self {
            schema_version: MANIFEST_SCHEMA_VERSION,
            command: command.into(),
            config: config.clone(),
            cells: cells.to_vec(),
            replicates,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "{} has manifest schema {}, expected {MANIFEST_SCHEMA_VERSION}",
                path.display(),
                manifest.schema_version
            )));
        }
        manifest.config.validate()?;
        Ok(manifest)
    }

    /// Re-runs the recorded sweep.
    pub fn rerun(&self) -> Result<TableResult> {
        run_cells(&self.config, &self.cells, self.replicates)
    }
}

/// Reads an [`ExperimentConfig`] from JSON; missing fields take defaults.
pub fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let config: ExperimentConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(config)
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// One row per cell: `qubit,mode,max_radians,mean,std,n`.
pub fn write_table_csv<W: Write>(table: &TableResult, out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["qubit", "mode", "max_radians", "mean", "std", "n"])?;
    for c in &table.cells {
        w.write_record([
            c.key.qubit.to_string(),
            c.key.mode.to_string(),
            c.key.max_radians.to_string(),
            c.mean.to_string(),
            c.std.to_string(),
            c.replicates.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per step and bin: `step,bin,x,probability`.
pub fn write_snapshots_csv<W: Write>(
    grid: &SpatialGrid,
    distributions: &[Vec<f64>],
    out: W,
) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["step", "bin", "x", "probability"])?;
    for (step, dist) in distributions.iter().enumerate() {
        for (bin, p) in dist.iter().enumerate() {
            w.write_record([
                step.to_string(),
                bin.to_string(),
                grid.point(bin).to_string(),
                p.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per step: `step,fidelity`.
pub fn write_trace_csv<W: Write>(trace: &FidelityTrace, out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["step", "fidelity"])?;
    for (i, f) in trace.values.iter().enumerate() {
        w.write_record([(i + 1).to_string(), f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Creates `path` and hands the writer to `write`, attaching the path to
/// any failure.
pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(fs::File) -> csv::Result<()>,
{
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write(file).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })
}
