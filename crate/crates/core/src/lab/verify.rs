//! Self-checks behind the `verify` command: transform oracles, channel
//! closed forms, oracle hygiene and agreement with the classical reference.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    reference_evolve, run_single, wavefunction_fidelity, Baseline, ErrorMode, ExperimentConfig,
};
use crate::evolve::{iqft, qft};
use crate::noise::{channel_on_poincare, leak_channel_by_dilation, LeakKind, PoincareVector};
use crate::qstate::{RegisterLayout, StateVector};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

fn random_state(layout: RegisterLayout, rng: &mut ChaCha8Rng) -> StateVector {
    let mut amps: Vec<Complex64> = (0..layout.dim())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(layout, amps).expect("sized from layout")
}

/// Direct `O(4^n)` DFT of each `(leak, ancilla)` block.
pub fn brute_force_qft(state: &StateVector) -> Vec<Complex64> {
    let len = state.layout().space_dim();
    let scale = 1.0 / (len as f64).sqrt();
    let mut out = Vec::with_capacity(state.amplitudes().len());
    for block in state.amplitudes().chunks_exact(len) {
        for k in 0..len {
            let mut acc = Complex64::new(0.0, 0.0);
            for (x, v) in block.iter().enumerate() {
                acc +=
                    v * Complex64::from_polar(1.0, -2.0 * PI * ((k * x) % len) as f64 / len as f64);
            }
            out.push(acc * scale);
        }
    }
    out
}

fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn check_qft(rng: &mut ChaCha8Rng) -> Vec<CheckOutcome> {
    let mut dft_err = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut norm_err = 0.0f64;
    for n in 1..=8 {
        let layout = RegisterLayout::new(n, 1, 0).expect("small layout");
        let psi = random_state(layout, rng);
        let mut transformed = psi.clone();
        qft(&mut transformed);
        dft_err = dft_err.max(max_abs_diff(
            transformed.amplitudes(),
            &brute_force_qft(&psi),
        ));
        norm_err = norm_err.max((transformed.norm_sqr().sqrt() - 1.0).abs());
        iqft(&mut transformed);
        round_trip = round_trip.max(max_abs_diff(transformed.amplitudes(), psi.amplitudes()));
    }
    vec![
        outcome(
            "qft matches direct DFT (n <= 8)",
            dft_err <= 1e-12,
            format!("max deviation {dft_err:.3e}"),
        ),
        outcome(
            "iqft after qft is the identity",
            round_trip <= 1e-12,
            format!("max deviation {round_trip:.3e}"),
        ),
        outcome(
            "qft preserves the norm",
            norm_err <= 1e-12,
            format!("max deviation {norm_err:.3e}"),
        ),
    ]
}

pub fn check_channels(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let mut worst = 0.0f64;
    for step in 0..=15 {
        let theta = (0.1 * step as f64).min(FRAC_PI_2);
        for _ in 0..20 {
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
                worst = worst
                    .max((a.x - b.x).abs())
                    .max((a.y - b.y).abs())
                    .max((a.z - b.z).abs());
            }
        }
    }
    outcome(
        "leak channel closed forms match dilate-and-trace",
        worst <= 1e-12,
        format!("max deviation {worst:.3e}"),
    )
}

/// Runs erroneous pipelines with invariant checks on (ancilla returned to
/// |0⟩ after every oracle, norm kept within 1e-12 every step).
pub fn check_pipeline_invariants() -> Result<CheckOutcome> {
    let mut worst_norm = 0.0f64;
    for mode in [
        ErrorMode::Alpha,
        ErrorMode::Theta,
        ErrorMode::U1,
        ErrorMode::U2,
    ] {
        let config = ExperimentConfig::compact().with_error(Some(mode.error_spec(2, 0.3)));
        let run = run_single(&config, 0)?;
        worst_norm = run
            .norms
            .iter()
            .fold(worst_norm, |w, n| w.max((n - 1.0).abs()));
    }
    Ok(outcome(
        "ancilla cleared after every oracle, norm preserved every step",
        worst_norm <= 1e-12,
        format!("max norm drift {worst_norm:.3e}"),
    ))
}

pub fn check_reference_agreement(config: &ExperimentConfig) -> Result<CheckOutcome> {
    let baseline = Baseline::compute(config)?;
    let reference = reference_evolve(
        &config.grid,
        &config.packet,
        &config.potential,
        &config.physical,
    );
    let steps = config.physical.steps;
    let f = wavefunction_fidelity(
        reference.last().expect("non-empty series"),
        baseline.space_amplitudes(steps),
    );
    Ok(outcome(
        "zero-error circuit agrees with classical split-step",
        f >= 0.99,
        format!(
            "final fidelity {f:.6} (m = {})",
            config.quant.ancilla_qubits
        ),
    ))
}

pub fn run_all(seed: u64) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = check_qft(&mut rng);
    out.push(check_channels(&mut rng));
    out.push(check_pipeline_invariants()?);
    out.push(check_reference_agreement(&ExperimentConfig::default())?);
    Ok(out)
}
