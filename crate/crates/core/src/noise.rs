//! Error models: random single-qubit memory errors, two-qubit leak
//! dilations, their reduced single-qubit channels, and the step window in
//! which errors are injected.

use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::qstate::{Matrix2, Matrix4, QubitIndex, Register, StateVector};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryMode {
    Alpha,
    Beta,
    Theta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LeakKind {
    U1,
    U2,
}

/// A memory error on one space qubit. Each application draws the mode's
/// parameter uniformly in `[-max_radians, max_radians]`, the other two
/// parameters stay zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemoryErrorSpec {
    pub mode: MemoryMode,
    pub max_radians: f64,
    /// Space qubit acted on.
    pub qubit: usize,
}

/// A leak error coupling one space qubit to the leak qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakErrorSpec {
    pub kind: LeakKind,
    pub max_radians: f64,
    /// Space qubit acted on.
    pub qubit: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum ErrorSpec {
    Memory(MemoryErrorSpec),
    Leak(LeakErrorSpec),
}

impl ErrorSpec {
    pub fn max_radians(&self) -> f64 {
        match self {
            ErrorSpec::Memory(m) => m.max_radians,
            ErrorSpec::Leak(l) => l.max_radians,
        }
    }

    pub fn qubit(&self) -> usize {
        match self {
            ErrorSpec::Memory(m) => m.qubit,
            ErrorSpec::Leak(l) => l.qubit,
        }
    }

    pub fn target(&self) -> QubitIndex {
        QubitIndex::space(self.qubit())
    }

    pub fn needs_leak_qubit(&self) -> bool {
        matches!(self, ErrorSpec::Leak(_))
    }

    pub fn validate(&self) -> Result<()> {
        let max = self.max_radians();
        if !(max >= 0.0 && max.is_finite()) {
            return Err(Error::Config(format!(
                "error magnitude must be non-negative, got {max}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for MemoryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MemoryMode::Alpha => "alpha",
            MemoryMode::Beta => "beta",
            MemoryMode::Theta => "theta",
        })
    }
}

impl fmt::Display for LeakKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeakKind::U1 => "U1",
            LeakKind::U2 => "U2",
        })
    }
}

/// Inclusive window of steps in which errors are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorSchedule {
    pub first_step: usize,
    pub last_step: usize,
    pub total_steps: usize,
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        Self {
            first_step: 10,
            last_step: 30,
            total_steps: 40,
        }
    }
}

impl ErrorSchedule {
    pub fn new(first_step: usize, last_step: usize, total_steps: usize) -> Result<Self> {
        let schedule = Self {
            first_step,
            last_step,
            total_steps,
        };
        schedule.validate()?;
        Ok(schedule)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.first_step
            && self.first_step <= self.last_step
            && self.last_step <= self.total_steps)
        {
            return Err(Error::Config(format!(
                "error window {}..={} does not fit in {} steps",
                self.first_step, self.last_step, self.total_steps
            )));
        }
        Ok(())
    }

    pub fn is_active(&self, step: usize) -> bool {
        (self.first_step..=self.last_step).contains(&step)
    }

    pub fn applications(&self) -> usize {
        self.last_step - self.first_step + 1
    }
}

/// Bloch/Poincaré coordinates of a single-qubit density matrix
/// `ρ = ½ [[1 + Z, X - iY], [X + iY, 1 - Z]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PoincareVector {
    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        let v = Self { x, y, z };
        if v.length_sqr() > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "({x}, {y}, {z}) lies outside the Poincaré sphere"
            )));
        }
        Ok(v)
    }

    pub fn length_sqr(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn density_matrix(&self) -> Matrix2 {
        [
            [
                Complex64::new(0.5 * (1.0 + self.z), 0.0),
                Complex64::new(0.5 * self.x, -0.5 * self.y),
            ],
            [
                Complex64::new(0.5 * self.x, 0.5 * self.y),
                Complex64::new(0.5 * (1.0 - self.z), 0.0),
            ],
        ]
    }

    pub fn from_density_matrix(rho: &Matrix2) -> Self {
        Self {
            x: 2.0 * rho[1][0].re,
            y: 2.0 * rho[1][0].im,
            z: (rho[0][0] - rho[1][1]).re,
        }
    }
}

/// `[[cos θ, e^{iα} sin θ], [-e^{iβ} sin θ, e^{i(α+β)} cos θ]]`.
pub fn memory_error_matrix(alpha: f64, beta: f64, theta: f64) -> Matrix2 {
    let (s, c) = theta.sin_cos();
    [
        [Complex64::new(c, 0.0), Complex64::from_polar(s, alpha)],
        [
            -Complex64::from_polar(s, beta),
            Complex64::from_polar(c, alpha + beta),
        ],
    ]
}

/// Leak dilation in the basis `|leak, system⟩` (leak bit most significant).
///
/// `U1` rotates the leak qubit when the system reads 1 (pure dephasing);
/// `U2` hands the system excitation to the leak qubit (damping towards |0⟩).
pub fn leak_matrix(kind: LeakKind, theta: f64) -> Matrix4 {
    let (s, c) = theta.sin_cos();
    let o = Complex64::new(1.0, 0.0);
    let z = Complex64::new(0.0, 0.0);
    let (s, c) = (Complex64::new(s, 0.0), Complex64::new(c, 0.0));
    match kind {
        LeakKind::U1 => [[o, z, z, z], [z, c, z, -s], [z, z, o, z], [z, s, z, c]],
        LeakKind::U2 => [[o, z, z, z], [z, c, z, s], [z, s, z, -c], [z, z, o, z]],
    }
}

/// Closed-form action of a leak dilation on the system qubit once the leak
/// qubit, prepared in `|0⟩`, is traced out.
pub fn channel_on_poincare(kind: LeakKind, theta: f64, v: PoincareVector) -> PoincareVector {
    let c = theta.cos();
    match kind {
        LeakKind::U1 => PoincareVector {
            x: c * v.x,
            y: c * v.y,
            z: v.z,
        },
        LeakKind::U2 => PoincareVector {
            x: c * v.x,
            y: c * v.y,
            z: theta.sin().powi(2) + c * c * v.z,
        },
    }
}

/// Applies the leak dilation to `|0⟩⟨0|_leak ⊗ ρ` and traces the leak out.
pub fn leak_channel_by_dilation(kind: LeakKind, theta: f64, v: PoincareVector) -> PoincareVector {
    let u = leak_matrix(kind, theta);
    let rho = v.density_matrix();
    // Leak in |0⟩ occupies the upper-left block of the joint density matrix.
    let mut joint = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..2 {
        for j in 0..2 {
            joint[i][j] = rho[i][j];
        }
    }
    let mut evolved = [[Complex64::new(0.0, 0.0); 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..4 {
                for l in 0..4 {
                    acc += u[i][k] * joint[k][l] * u[j][l].conj();
                }
            }
            evolved[i][j] = acc;
        }
    }
    let mut reduced = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (i, row) in reduced.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = evolved[i][j] + evolved[2 + i][2 + j];
        }
    }
    PoincareVector::from_density_matrix(&reduced)
}

/// Uniform draw in `[-max, max]`. The unit draw is scaled, so a shared
/// random stream yields proportional parameters across magnitudes.
pub fn draw_parameter<R: Rng + ?Sized>(max: f64, rng: &mut R) -> f64 {
    rng.random_range(-1.0..=1.0) * max
}

pub fn draw_memory_error<R: Rng + ?Sized>(spec: &MemoryErrorSpec, rng: &mut R) -> Matrix2 {
    let value = draw_parameter(spec.max_radians, rng);
    match spec.mode {
        MemoryMode::Alpha => memory_error_matrix(value, 0.0, 0.0),
        MemoryMode::Beta => memory_error_matrix(0.0, value, 0.0),
        MemoryMode::Theta => memory_error_matrix(0.0, 0.0, value),
    }
}

pub fn draw_leak_error<R: Rng + ?Sized>(spec: &LeakErrorSpec, rng: &mut R) -> Matrix4 {
    leak_matrix(spec.kind, draw_parameter(spec.max_radians, rng))
}

/// Checks that `spec` can be injected into states of `state`'s layout.
pub fn check_target(state: &StateVector, spec: &ErrorSpec) -> Result<()> {
    let layout = state.layout();
    if spec.qubit() >= layout.space_qubits() {
        return Err(Error::Config(format!(
            "error target qubit {} outside a {}-qubit space register",
            spec.qubit(),
            layout.space_qubits()
        )));
    }
    if spec.needs_leak_qubit() && layout.leak_qubits() == 0 {
        return Err(Error::Config(
            "leak errors need a layout with a leak qubit".into(),
        ));
    }
    Ok(())
}

/// Applies one freshly drawn error if `step` lies in the schedule window.
/// Returns whether an error was applied. No random numbers are consumed
/// outside the window.
pub fn inject<R: Rng + ?Sized>(
    state: &mut StateVector,
    step: usize,
    schedule: &ErrorSchedule,
    spec: &ErrorSpec,
    rng: &mut R,
) -> Result<bool> {
    check_target(state, spec)?;
    if !schedule.is_active(step) {
        return Ok(false);
    }
    let target = spec.target();
    debug_assert_eq!(target.register, Register::Space);
    match spec {
        ErrorSpec::Memory(m) => state.apply_1q(target, &draw_memory_error(m, rng))?,
        ErrorSpec::Leak(l) => {
            state.apply_2q(QubitIndex::leak(), target, &draw_leak_error(l, rng))?
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{unitarity_defect, RegisterLayout};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn memory_matrix_examples() {
        let id = memory_error_matrix(0.0, 0.0, 0.0);
        assert_eq!(id[0][0], Complex64::new(1.0, 0.0));
        assert_eq!(id[1][1], Complex64::new(1.0, 0.0));
        assert_eq!(id[0][1].norm(), 0.0);
        assert_eq!(id[1][0].norm(), 0.0);

        let r = memory_error_matrix(0.0, 0.0, FRAC_PI_2);
        let expected = [[0.0, 1.0], [-1.0, 0.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((r[i][j] - Complex64::new(expected[i][j], 0.0)).norm() < 1e-15);
            }
        }

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let (a, b, t) = (
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
                rng.random_range(-4.0..4.0),
            );
            assert!(unitarity_defect(&memory_error_matrix(a, b, t)) < 1e-14);
        }
    }

    #[test]
    fn leak_matrix_examples() {
        let u1 = leak_matrix(LeakKind::U1, 0.0);
        for (i, row) in u1.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_eq!(*v, Complex64::new(e, 0.0));
            }
        }
        // At θ = 0: |00⟩→|00⟩, |01⟩→|01⟩, |10⟩→|11⟩, |11⟩→-|10⟩.
        let u2 = leak_matrix(LeakKind::U2, 0.0);
        let expected = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -1.0],
            [0.0, 0.0, 1.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(u2[i][j].re, expected[i][j]);
            }
        }
        assert!(unitarity_defect(&u2) < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let t = rng.random_range(-7.0..7.0);
            assert!(unitarity_defect(&leak_matrix(LeakKind::U1, t)) < 1e-14);
            assert!(unitarity_defect(&leak_matrix(LeakKind::U2, t)) < 1e-14);
        }
    }

    #[test]
    fn closed_form_examples() {
        let v = channel_on_poincare(
            LeakKind::U1,
            FRAC_PI_2,
            PoincareVector::new(1.0, 0.0, 0.0).unwrap(),
        );
        assert!(v.x.abs() < 1e-16 && v.y == 0.0 && v.z == 0.0);
        for z in [-1.0, -0.3, 0.0, 0.7, 1.0] {
            let v = channel_on_poincare(
                LeakKind::U2,
                FRAC_PI_2,
                PoincareVector::new(0.0, 0.0, z).unwrap(),
            );
            assert!((v.z - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_forms_match_dilation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let theta = rng.random_range(-3.2..3.2);
            // Uniform-ish point in the ball.
            let v = loop {
                let (x, y, z) = (
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                if let Ok(v) = PoincareVector::new(x, y, z) {
                    break v;
                }
            };
            for kind in [LeakKind::U1, LeakKind::U2] {
                let a = channel_on_poincare(kind, theta, v);
                let b = leak_channel_by_dilation(kind, theta, v);
                assert!(
                    (a.x - b.x).abs() < 1e-12
                        && (a.y - b.y).abs() < 1e-12
                        && (a.z - b.z).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn leak_high_ordering_is_the_one_that_dephases() {
        // System qubit in (|0⟩ + |1⟩)/√2, leak in |0⟩.
        let layout = RegisterLayout::new(1, 0, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![Complex64::new(0.0, 0.0); 4];
        amps[0] = Complex64::new(h, 0.0);
        amps[1] = Complex64::new(h, 0.0);
        let start = StateVector::from_amplitudes(layout, amps).unwrap();
        let u = leak_matrix(LeakKind::U1, 0.8);

        // System as the high bit: U1 never leaves the |leak = 0⟩ subspace.
        let mut system_high = start.clone();
        system_high
            .apply_2q(QubitIndex::space(0), QubitIndex::leak(), &u)
            .unwrap();
        assert_eq!(system_high, start);

        // Leak as the high bit: the coherence shrinks by cos θ.
        let mut leak_high = start.clone();
        leak_high
            .apply_2q(QubitIndex::leak(), QubitIndex::space(0), &u)
            .unwrap();
        let a = leak_high.amplitudes();
        let coherence = 2.0 * (a[1] * a[0].conj() + a[3] * a[2].conj());
        assert!((coherence.re - 0.8f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn poincare_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..100 {
            let theta = rng.random_range(-3.0..3.0);
            let v = PoincareVector::new(0.3, -0.4, rng.random_range(-0.8..0.8)).unwrap();
            assert_eq!(channel_on_poincare(LeakKind::U1, theta, v).z, v.z);
            let pole = PoincareVector::new(0.0, 0.0, 1.0).unwrap();
            let p = channel_on_poincare(LeakKind::U2, theta, pole);
            assert_eq!((p.x, p.y), (0.0, 0.0));
            assert!((p.z - 1.0).abs() < 1e-15);
        }
        assert!(PoincareVector::new(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn draws_respect_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let spec = MemoryErrorSpec {
            mode: MemoryMode::Theta,
            max_radians: 0.0,
            qubit: 0,
        };
        for _ in 0..10 {
            let u = draw_memory_error(&spec, &mut rng);
            assert_eq!(u, memory_error_matrix(0.0, 0.0, 0.0));
        }

        let n = 100_000;
        let max = 0.3;
        let draws: Vec<f64> = (0..n).map(|_| draw_parameter(max, &mut rng)).collect();
        assert!(draws.iter().all(|d| (-max..=max).contains(d)));
        let mean = draws.iter().sum::<f64>() / n as f64;
        let sigma = max / 3f64.sqrt() / (n as f64).sqrt();
        assert!(mean.abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn inject_respects_window_and_layout() {
        let schedule = ErrorSchedule::default();
        assert_eq!((1..=40).filter(|&s| schedule.is_active(s)).count(), 21);
        assert_eq!(schedule.applications(), 21);
        assert!(ErrorSchedule::new(0, 3, 5).is_err());
        assert!(ErrorSchedule::new(4, 3, 5).is_err());
        assert!(ErrorSchedule::new(3, 6, 5).is_err());

        let layout = RegisterLayout::new(3, 1, 0).unwrap();
        let mut state = StateVector::new_basis_state(layout, 0).unwrap();
        let spec = ErrorSpec::Memory(MemoryErrorSpec {
            mode: MemoryMode::Theta,
            max_radians: 1.0,
            qubit: 1,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(!inject(&mut state, 5, &schedule, &spec, &mut rng).unwrap());
        assert_eq!(state, StateVector::new_basis_state(layout, 0).unwrap());
        assert!(inject(&mut state, 10, &schedule, &spec, &mut rng).unwrap());
        assert!((state.norm_sqr() - 1.0).abs() < 1e-15);

        let leak = ErrorSpec::Leak(LeakErrorSpec {
            kind: LeakKind::U2,
            max_radians: 0.1,
            qubit: 0,
        });
        assert!(matches!(
            inject(&mut state, 12, &schedule, &leak, &mut rng),
            Err(Error::Config(_))
        ));

        let off_register = ErrorSpec::Memory(MemoryErrorSpec {
            mode: MemoryMode::Alpha,
            max_radians: 0.1,
            qubit: 3,
        });
        assert!(matches!(
            inject(&mut state, 12, &schedule, &off_register, &mut rng),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn leak_injection_acts_on_leak_and_target() {
        let layout = RegisterLayout::new(2, 0, 1).unwrap();
        // System qubit 1 set, leak clear.
        let mut state = StateVector::new_basis_state(layout, layout.index(0, 0, 0b10)).unwrap();
        let spec = ErrorSpec::Leak(LeakErrorSpec {
            kind: LeakKind::U2,
            max_radians: 0.5,
            qubit: 1,
        });
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        inject(&mut state, 10, &ErrorSchedule::default(), &spec, &mut rng).unwrap();
        // Amplitude damping: |leak 0, sys 1⟩ → cos|0,1⟩ + sin|1,0⟩.
        let stay = state.amplitudes()[layout.index(0, 0, 0b10)].norm_sqr();
        let moved = state.amplitudes()[layout.index(1, 0, 0b00)].norm_sqr();
        assert!((stay + moved - 1.0).abs() < 1e-15);
        assert!(moved > 0.0 || stay == 1.0);
    }
}
