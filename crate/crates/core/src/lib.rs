//! A gate-level laboratory for simulating a small quantum simulator that
//! integrates the one-dimensional Schrödinger equation.
//!
//! The wavefunction lives on an `n`-qubit *space* register. Each timestep is
//! a first-order split-operator step: the potential phase is applied in
//! position space, then the kinetic phase is applied between a quantum
//! Fourier transform and its inverse. Both diagonal phases are realized the
//! way a quantum computer would do it, by writing a quantized function value
//! on an `m`-qubit *ancilla* register, phasing each ancilla qubit by its
//! weight, and unwriting the value again.
//!
//! On top of that pipeline the crate injects two families of errors and
//! measures how much the final state degrades:
//!
//! * memory errors, a random single-qubit unitary on one space qubit;
//! * leak errors, a two-qubit unitary coupling one space qubit to an extra
//!   *leak* qubit that is traced out at the end.
//!
//! Modules:
//!
//! * [`qstate`]: dense state vector over the `[leak | ancilla | space]` register.
//! * [`grid`]: spatial sampling, Gaussian packets and the qubit budget estimate.
//! * [`evolve`]: QFT, phase oracles and the Trotter propagator.
//! * [`noise`]: memory and leak error models, their closed-form channels,
//!   and the step schedule.
//! * [`lab`]: experiment configuration, sweeps, reference solver and export.

pub mod error;
pub mod evolve;
pub mod grid;
pub mod lab;
pub mod noise;
pub mod qstate;

pub use error::{Error, Result};
pub use num_complex::Complex64;
