//! Dense statevector simulation.
//!
//! Amplitude index bit `i` is the computational-basis value of qubit `i`.
//! Gates act in place over strided amplitude pairs; global phase is kept.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::pauli::{PauliString, WeightedPauliSum};

const NORM_TOL: f64 = 1e-12;
const IMAG_TOL: f64 = 1e-10;
/// Dense simulation stops being practical well before this.
pub const MAX_QUBITS: usize = 26;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amps })
    }

    pub fn from_amplitudes(n: usize, amps: Vec<Complex64>) -> Result<Self> {
        check_qubits(n)?;
        if amps.len() != 1 << n {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes given for {n} qubits",
                amps.len()
            )));
        }
        let state = Self { n, amps };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(state)
    }

    /// Product state with qubit 0 in `a|0> + b|1>` and the rest in `|0>`.
    pub fn with_first_qubit(n: usize, a: Complex64, b: Complex64) -> Result<Self> {
        check_qubits(n)?;
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = a;
        amps[1] = b;
        Self::from_amplitudes(n, amps)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(Complex64::norm_sqr).collect()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        let overlap: Complex64 = self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(overlap.norm_sqr())
    }

    pub fn apply(&mut self, op: &GateOp) -> Result<()> {
        op.validate(self.n)?;
        match *op {
            GateOp::H(q) => {
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                self.apply_1q(q, [[h, h], [h, -h]]);
            }
            GateOp::X(q) => self.for_pairs(q, std::mem::swap),
            GateOp::Y(q) => self.for_pairs(q, |a, b| {
                // Y|0> = i|1>, Y|1> = -i|0>
                let (a0, b0) = (*a, *b);
                *a = Complex64::new(b0.im, -b0.re);
                *b = Complex64::new(-a0.im, a0.re);
            }),
            GateOp::Z(q) => self.phase(q, Complex64::new(-1.0, 0.0)),
            GateOp::S(q) => self.phase(q, Complex64::i()),
            GateOp::Sdg(q) => self.phase(q, -Complex64::i()),
            GateOp::U1 { qubit, phi } => self.phase(qubit, Complex64::from_polar(1.0, phi)),
            GateOp::Cnot { control, target } => {
                let cbit = 1 << control;
                let tbit = 1 << target;
                for i in 0..self.amps.len() {
                    if i & cbit != 0 && i & tbit == 0 {
                        self.amps.swap(i, i | tbit);
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_all<'a, I>(&mut self, ops: I) -> Result<()>
    where
        I: IntoIterator<Item = &'a GateOp>,
    {
        ops.into_iter().try_for_each(|op| self.apply(op))
    }

    fn for_pairs(&mut self, q: usize, mut f: impl FnMut(&mut Complex64, &mut Complex64)) {
        let stride = 1 << q;
        for block in self.amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (a, b) in lo.iter_mut().zip(hi) {
                f(a, b);
            }
        }
    }

    fn apply_1q(&mut self, q: usize, m: [[Complex64; 2]; 2]) {
        self.for_pairs(q, |a, b| {
            let (a0, b0) = (*a, *b);
            *a = m[0][0] * a0 + m[0][1] * b0;
            *b = m[1][0] * a0 + m[1][1] * b0;
        });
    }

    fn phase(&mut self, q: usize, z: Complex64) {
        self.for_pairs(q, |_, b| *b *= z);
    }

    /// `<psi|P|psi>` for one Pauli string, as a complex number.
    pub fn pauli_expectation(&self, string: &PauliString) -> Result<Complex64> {
        if string.len() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: string.len(),
            });
        }
        let (x, y, z) = string.masks();
        let flip = x | y;
        let sign_mask = y | z;
        // P|b> = i^{#Y} (-1)^{popcount(b & (Y|Z))} |b ^ (X|Y)>
        let acc: Complex64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(b, &amp)| {
                let term = self.amps[b ^ flip].conj() * amp;
                if (b & sign_mask).count_ones() % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum();
        let phase = match y.count_ones() % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::i(),
            2 => Complex64::new(-1.0, 0.0),
            _ => -Complex64::i(),
        };
        Ok(phase * acc)
    }

    /// Real expectation of a weighted Pauli sum; errors if the imaginary
    /// part exceeds `1e-10`.
    pub fn expectation(&self, op: &WeightedPauliSum) -> Result<f64> {
        if op.arity() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: op.arity(),
            });
        }
        let mut total = Complex64::new(0.0, 0.0);
        for (string, c) in op.iter() {
            total += self.pauli_expectation(string)? * c;
        }
        if total.im.abs() > IMAG_TOL {
            return Err(Error::ImaginaryExpectation(total.im));
        }
        Ok(total.re)
    }
}

/// Free-function form of [`StateVector::expectation`].
pub fn expectation_exact(state: &StateVector, op: &WeightedPauliSum) -> Result<f64> {
    state.expectation(op)
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidQubitCount {
            n,
            reason: "at least one qubit is required",
        });
    }
    if n > MAX_QUBITS {
        return Err(Error::InvalidQubitCount {
            n,
            reason: "too many qubits for dense simulation",
        });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateOp {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    Sdg(usize),
    /// `diag(1, e^{i phi})`.
    U1 { qubit: usize, phi: f64 },
    Cnot { control: usize, target: usize },
}

impl GateOp {
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            GateOp::H(q) | GateOp::X(q) | GateOp::Y(q) | GateOp::Z(q) | GateOp::S(q) | GateOp::Sdg(q) => {
                vec![q]
            }
            GateOp::U1 { qubit, .. } => vec![qubit],
            GateOp::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        for q in self.qubits() {
            if q >= n {
                return Err(Error::QubitOutOfRange { index: q, n });
            }
        }
        if let GateOp::Cnot { control, target } = *self {
            if control == target {
                return Err(Error::SameControlTarget(control));
            }
        }
        Ok(())
    }

    fn name(&self) -> &'static str {
        match self {
            GateOp::H(_) => "h",
            GateOp::X(_) => "x",
            GateOp::Y(_) => "y",
            GateOp::Z(_) => "z",
            GateOp::S(_) => "s",
            GateOp::Sdg(_) => "sdg",
            GateOp::U1 { .. } => "u1",
            GateOp::Cnot { .. } => "cx",
        }
    }
}

#[derive(Serialize, Deserialize)]
struct GateRepr {
    g: String,
    q: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<f64>,
}

impl Serialize for GateOp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let phi = match *self {
            GateOp::U1 { phi, .. } => Some(phi),
            _ => None,
        };
        GateRepr {
            g: self.name().to_owned(),
            q: self.qubits(),
            phi,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GateOp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = GateRepr::deserialize(deserializer)?;
        let one = |q: &[usize]| match q {
            [a] => Ok(*a),
            _ => Err(D::Error::custom(format!("gate {} takes one qubit", r.g))),
        };
        Ok(match r.g.as_str() {
            "h" => GateOp::H(one(&r.q)?),
            "x" => GateOp::X(one(&r.q)?),
            "y" => GateOp::Y(one(&r.q)?),
            "z" => GateOp::Z(one(&r.q)?),
            "s" => GateOp::S(one(&r.q)?),
            "sdg" => GateOp::Sdg(one(&r.q)?),
            "u1" => GateOp::U1 {
                qubit: one(&r.q)?,
                phi: r.phi.ok_or_else(|| D::Error::missing_field("phi"))?,
            },
            "cx" => match r.q.as_slice() {
                [c, t] => GateOp::Cnot {
                    control: *c,
                    target: *t,
                },
                _ => return Err(D::Error::custom("cx takes two qubits")),
            },
            other => return Err(D::Error::custom(format!("unknown gate {other:?}"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Circuit {
    n: usize,
    ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, ops: Vec::new() })
    }

    pub fn from_ops(n: usize, ops: Vec<GateOp>) -> Result<Self> {
        let mut c = Self::new(n)?;
        for op in ops {
            c.push(op)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, op: GateOp) -> Result<()> {
        op.validate(self.n)?;
        self.ops.push(op);
        Ok(())
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[GateOp] {
        &self.ops
    }

    /// Runs the circuit on `|0...0>`.
    pub fn run(&self) -> Result<StateVector> {
        let mut state = StateVector::zero(self.n)?;
        self.run_on(&mut state)?;
        Ok(state)
    }

    pub fn run_on(&self, state: &mut StateVector) -> Result<()> {
        if state.num_qubits() != self.n {
            return Err(Error::ArityMismatch {
                expected: self.n,
                found: state.num_qubits(),
            });
        }
        state.apply_all(&self.ops)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        #[derive(Deserialize)]
        struct Repr {
            n: usize,
            ops: Vec<GateOp>,
        }
        let r = Repr::deserialize(deserializer)?;
        Circuit::from_ops(r.n, r.ops).map_err(D::Error::custom)
    }
}

/// CNOT ladder `0 -> 1 -> ... -> n-1`.
pub fn ladder_ops(n: usize) -> Vec<GateOp> {
    (1..n)
        .map(|t| GateOp::Cnot {
            control: t - 1,
            target: t,
        })
        .collect()
}

/// `H(0)`, the CNOT ladder, then `U1(phi)` on qubit 0. Produces
/// `(|0..0> + e^{i phi}|1..1>)/sqrt2` from `|0..0>`.
pub fn build_ghz_circuit(n: usize, phi: f64) -> Result<Circuit> {
    if n < 2 {
        return Err(Error::InvalidQubitCount {
            n,
            reason: "a GHZ-like chain needs at least two qubits",
        });
    }
    let mut ops = vec![GateOp::H(0)];
    ops.extend(ladder_ops(n));
    ops.push(GateOp::U1 { qubit: 0, phi });
    Circuit::from_ops(n, ops)
}

/// `(|0..0> + e^{i phi}|1..1>)/sqrt2` written directly.
pub fn ghz_state(n: usize, phi: f64) -> Result<StateVector> {
    prepare_theta_state(n, std::f64::consts::FRAC_PI_4, phi)
}

/// `sin(theta)|0..0> + cos(theta) e^{i phi}|1..1>`.
pub fn prepare_theta_state(n: usize, theta: f64, phi: f64) -> Result<StateVector> {
    if n < 2 {
        return Err(Error::InvalidQubitCount {
            n,
            reason: "a GHZ-like state needs at least two qubits",
        });
    }
    check_qubits(n)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    amps[0] = Complex64::new(theta.sin(), 0.0);
    amps[(1 << n) - 1] = Complex64::from_polar(theta.cos(), phi);
    StateVector::from_amplitudes(n, amps)
}

/// Single-qubit state `sin(theta)|0> + cos(theta) e^{i phi}|1>` on qubit 0;
/// the CNOT ladder maps it onto [`prepare_theta_state`].
pub fn theta_seed_state(n: usize, theta: f64, phi: f64) -> Result<StateVector> {
    StateVector::with_first_qubit(
        n,
        Complex64::new(theta.sin(), 0.0),
        Complex64::from_polar(theta.cos(), phi),
    )
}

/// `S^dagger` equals `U1(-pi/2)`.
pub const SDG_ANGLE: f64 = -FRAC_PI_2;
