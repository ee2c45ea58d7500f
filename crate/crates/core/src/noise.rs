//! Noise emulation for GHZ-like runs.
//!
//! Three independent knobs, none of them calibrated to a device:
//!
//! * `theta` replaces the ideal preparation with
//!   `sin(theta)|0..0> + cos(theta) e^{i phi}|1..1>` (weakened entanglement).
//! * `depol_p` is a stochastic Pauli-trajectory model: after every CNOT, with
//!   probability `p`, a uniformly random non-identity Pauli lands on each of
//!   the two touched qubits. Averaging over trajectories approximates a
//!   two-qubit depolarizing-style channel.
//! * `readout_eps` flips every recorded bit independently.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{compile_basis_rotations, CountsTable, MeasurementSetting};
use crate::pauli::{PauliString, WeightedPauliSum};
use crate::rng::rng_for;
use crate::statevector::{build_ghz_circuit, ladder_ops, theta_seed_state, Circuit, GateOp, StateVector};

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default)]
    pub depol_p: f64,
    #[serde(default)]
    pub readout_eps: f64,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability("depol_p", self.depol_p)?;
        check_probability("readout_eps", self.readout_eps)?;
        if let Some(theta) = self.theta {
            if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
                return Err(Error::InvalidParameter(format!(
                    "theta = {theta} outside [0, pi/2]"
                )));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.theta.is_none() && self.depol_p == 0.0 && self.readout_eps == 0.0
    }
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidProbability { name, value });
    }
    Ok(())
}

/// Radius `sqrt(<M_2>^2 + <M'_2>^2) = 2 sqrt2 sin(2 theta)` of a two-qubit
/// theta state in the orthogonal-measurement plane.
pub fn theta_radius(theta: f64) -> f64 {
    2.0 * std::f64::consts::SQRT_2 * (2.0 * theta).sin()
}

/// Flips each recorded bit of each shot with probability `eps`.
pub fn apply_readout_flip(counts: &CountsTable, eps: f64, seed: u64) -> Result<CountsTable> {
    check_probability("readout_eps", eps)?;
    if eps == 0.0 {
        return Ok(counts.clone());
    }
    let mut rng = rng_for(seed, &[]);
    let mut out: BTreeMap<String, u64> = BTreeMap::new();
    let mut buf = Vec::new();
    for (bits, &count) in &counts.counts {
        for _ in 0..count {
            buf.clear();
            buf.extend(bits.bytes().map(|b| {
                if rng.random_bool(eps) {
                    b ^ 1
                } else {
                    b
                }
            }));
            let key = String::from_utf8(buf.clone()).expect("ascii bits");
            *out.entry(key).or_insert(0) += 1;
        }
    }
    Ok(CountsTable {
        shots: counts.shots,
        counts: out,
    })
}

fn random_pauli<R: Rng>(rng: &mut R, qubit: usize) -> GateOp {
    match rng.random_range(0..3) {
        0 => GateOp::X(qubit),
        1 => GateOp::Y(qubit),
        _ => GateOp::Z(qubit),
    }
}

/// Samples one noisy trajectory of `circuit`.
pub fn apply_depolarizing_trajectory(circuit: &Circuit, p: f64, seed: u64) -> Result<Circuit> {
    check_probability("depol_p", p)?;
    let mut rng = rng_for(seed, &[]);
    let mut out = Circuit::new(circuit.num_qubits())?;
    for op in circuit.ops() {
        out.push(*op)?;
        if let GateOp::Cnot { control, target } = *op {
            if p > 0.0 && rng.random_bool(p) {
                out.push(random_pauli(&mut rng, control))?;
                out.push(random_pauli(&mut rng, target))?;
            }
        }
    }
    Ok(out)
}

/// Factor by which independent readout flips shrink the parity of `string`.
pub fn readout_attenuation(string: &PauliString, eps: f64) -> f64 {
    let weight = string
        .axes()
        .iter()
        .filter(|&&a| a != crate::pauli::PauliAxis::I)
        .count();
    (1.0 - 2.0 * eps).powi(weight as i32)
}

/// Pure-state ensemble standing in for a noisy GHZ-like preparation.
///
/// Without depolarizing noise the ensemble holds exactly one state and
/// reproduces the noiseless circuit bit for bit.
#[derive(Clone, Debug)]
pub struct TrajectoryEnsemble {
    n: usize,
    states: Vec<StateVector>,
}

impl TrajectoryEnsemble {
    /// Prepares the GHZ-like state at phase `phi` (or the theta state when
    /// `noise.theta` is set) with `trajectories` depolarizing samples.
    pub fn prepare(
        n: usize,
        phi: f64,
        noise: &NoiseSpec,
        trajectories: usize,
        seed: u64,
    ) -> Result<Self> {
        noise.validate()?;
        // theta = pi/4 is the plain GHZ-like state; use the standard circuit
        // so results match the noiseless run exactly.
        let theta = noise.theta.filter(|&t| t != std::f64::consts::FRAC_PI_4);
        let (start, circuit) = match theta {
            None => (StateVector::zero(n)?, build_ghz_circuit(n, phi)?),
            Some(theta) => {
                if n < 2 {
                    return Err(Error::InvalidQubitCount {
                        n,
                        reason: "a GHZ-like chain needs at least two qubits",
                    });
                }
                (theta_seed_state(n, theta, phi)?, Circuit::from_ops(n, ladder_ops(n))?)
            }
        };
        let count = if noise.depol_p == 0.0 { 1 } else { trajectories.max(1) };
        let states = (0..count)
            .map(|k| {
                let noisy = if noise.depol_p == 0.0 {
                    circuit.clone()
                } else {
                    apply_depolarizing_trajectory(&circuit, noise.depol_p, crate::rng::derive_seed(seed, &[k as u64]))?
                };
                let mut s = start.clone();
                noisy.run_on(&mut s)?;
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { n, states })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    /// Trajectory-averaged expectation with readout attenuation applied.
    pub fn expectation(&self, op: &WeightedPauliSum, readout_eps: f64) -> Result<f64> {
        let mut total = 0.0;
        for (string, coeff) in op.iter() {
            let mut e = 0.0;
            for s in &self.states {
                let z = s.pauli_expectation(string)?;
                if z.im.abs() > 1e-10 {
                    return Err(Error::ImaginaryExpectation(z.im));
                }
                e += z.re;
            }
            e /= self.states.len() as f64;
            total += coeff * e * readout_attenuation(string, readout_eps);
        }
        Ok(total)
    }

    /// Trajectory-averaged outcome distribution after rotating into `setting`.
    pub fn setting_distribution(&self, setting: &MeasurementSetting) -> Result<Vec<f64>> {
        let ops = compile_basis_rotations(setting);
        let mut acc = vec![0.0; 1 << self.n];
        for s in &self.states {
            let mut rotated = s.clone();
            rotated.apply_all(&ops)?;
            for (a, p) in acc.iter_mut().zip(rotated.probabilities()) {
                *a += p;
            }
        }
        let k = self.states.len() as f64;
        acc.iter_mut().for_each(|a| *a /= k);
        Ok(acc)
    }
}
