//! Pauli measurement settings, shot sampling and parity estimators.
//!
//! Each X/Y Pauli term is its own measurement setting: the state is rotated
//! so that the setting becomes a computational-basis measurement (`H` for X,
//! `S^dagger` then `H` for Y) and the product of the measured bits' signs
//! estimates the term.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliAxis, PauliString, WeightedPauliSum};
use crate::rng::rng_for;
use crate::statevector::{GateOp, StateVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasurementSetting {
    bases: Vec<PauliAxis>,
}

impl MeasurementSetting {
    pub fn new(bases: Vec<PauliAxis>) -> Result<Self> {
        if let Some(bad) = bases
            .iter()
            .find(|b| !matches!(b, PauliAxis::X | PauliAxis::Y))
        {
            return Err(Error::UnsupportedBasis(bad.as_char()));
        }
        if bases.is_empty() {
            return Err(Error::InvalidQubitCount {
                n: 0,
                reason: "a measurement setting needs at least one qubit",
            });
        }
        Ok(Self { bases })
    }

    pub fn from_string(string: &PauliString) -> Result<Self> {
        Self::new(string.axes().to_vec())
    }

    pub fn bases(&self) -> &[PauliAxis] {
        &self.bases
    }
}

/// `X -> [H]`, `Y -> [S^dagger, H]`, qubit by qubit.
pub fn compile_basis_rotations(setting: &MeasurementSetting) -> Vec<GateOp> {
    let mut ops = Vec::with_capacity(2 * setting.bases.len());
    for (q, basis) in setting.bases.iter().enumerate() {
        if *basis == PauliAxis::Y {
            ops.push(GateOp::Sdg(q));
        }
        ops.push(GateOp::H(q));
    }
    ops
}

/// Outcome counts keyed by bitstring, qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCounts")]
pub struct CountsTable {
    pub shots: u64,
    pub counts: BTreeMap<String, u64>,
}

#[derive(Deserialize)]
struct RawCounts {
    shots: u64,
    counts: BTreeMap<String, u64>,
}

impl TryFrom<RawCounts> for CountsTable {
    type Error = Error;

    fn try_from(raw: RawCounts) -> Result<Self> {
        let table = CountsTable::new(raw.counts)?;
        if table.shots != raw.shots {
            return Err(Error::InvalidParameter(format!(
                "counts sum to {} but shots is {}",
                table.shots, raw.shots
            )));
        }
        Ok(table)
    }
}

impl CountsTable {
    pub fn new(counts: BTreeMap<String, u64>) -> Result<Self> {
        let shots = counts.values().sum();
        if shots == 0 {
            return Err(Error::InvalidParameter("counts table has no shots".into()));
        }
        let mut width = None;
        for key in counts.keys() {
            if key.is_empty() || !key.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::InvalidParameter(format!("bad bitstring {key:?}")));
            }
            if *width.get_or_insert(key.len()) != key.len() {
                return Err(Error::InvalidParameter("bitstrings differ in length".into()));
            }
        }
        Ok(Self { shots, counts })
    }

    pub fn get(&self, bitstring: &str) -> u64 {
        self.counts.get(bitstring).copied().unwrap_or(0)
    }

    pub fn frequency(&self, bitstring: &str) -> f64 {
        self.get(bitstring) as f64 / self.shots as f64
    }
}

pub fn bitstring(index: usize, n: usize) -> String {
    (0..n)
        .map(|q| if index >> q & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Draws `shots` outcomes from a probability vector over basis indices.
pub fn sample_distribution<R: Rng>(
    probs: &[f64],
    n: usize,
    shots: u64,
    rng: &mut R,
) -> Result<CountsTable> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be at least 1".into()));
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::InvalidParameter(format!("bad outcome distribution: {e}")))?;
    let mut hist = vec![0u64; probs.len()];
    for _ in 0..shots {
        hist[dist.sample(rng)] += 1;
    }
    let counts = hist
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c > 0)
        .map(|(i, c)| (bitstring(i, n), c))
        .collect();
    Ok(CountsTable { shots, counts })
}

/// Born-rule sample of `shots` computational-basis measurements.
pub fn sample_counts(state: &StateVector, shots: u64, seed: u64) -> Result<CountsTable> {
    let mut rng = rng_for(seed, &[]);
    sample_distribution(&state.probabilities(), state.num_qubits(), shots, &mut rng)
}

/// `sum_b counts[b] (-1)^{popcount(b)} / shots`.
pub fn parity_expectation(counts: &CountsTable) -> f64 {
    let signed: i64 = counts
        .counts
        .iter()
        .map(|(b, &c)| {
            let ones = b.bytes().filter(|&x| x == b'1').count();
            if ones % 2 == 0 {
                c as i64
            } else {
                -(c as i64)
            }
        })
        .sum();
    signed as f64 / counts.shots as f64
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TermEstimate {
    pub coeff: f64,
    pub expectation: f64,
    pub shots: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateResult {
    pub value: f64,
    /// Plug-in standard error `sqrt(sum c^2 (1 - e^2) / shots)`.
    pub standard_error: f64,
    pub per_term: BTreeMap<String, TermEstimate>,
}

impl EstimateResult {
    /// Combines per-term counts into the weighted estimate.
    pub fn from_counts<'a, I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (&'a PauliString, f64, CountsTable)>,
    {
        let mut per_term = BTreeMap::new();
        let mut value = 0.0;
        let mut var = 0.0;
        for (string, coeff, counts) in terms {
            let e = parity_expectation(&counts);
            value += coeff * e;
            var += coeff * coeff * (1.0 - e * e) / counts.shots as f64;
            per_term.insert(
                string.to_string(),
                TermEstimate {
                    coeff,
                    expectation: e,
                    shots: counts.shots,
                },
            );
        }
        Self {
            value,
            standard_error: var.max(0.0).sqrt(),
            per_term,
        }
    }
}

/// Checks that every term is measurable with X/Y settings.
pub fn settings_for(op: &WeightedPauliSum) -> Result<Vec<(PauliString, f64, MeasurementSetting)>> {
    op.iter()
        .map(|(s, c)| Ok((s.clone(), c, MeasurementSetting::from_string(s)?)))
        .collect()
}

/// Outcome distribution of `state` measured in `setting`.
pub fn setting_distribution(state: &StateVector, setting: &MeasurementSetting) -> Result<Vec<f64>> {
    let mut rotated = state.clone();
    rotated.apply_all(&compile_basis_rotations(setting))?;
    Ok(rotated.probabilities())
}

/// Shot-based estimate of `<op>`: one setting per distinct term, each
/// sampled with `shots_per_term` shots from its own seed stream.
pub fn estimate_operator(
    state: &StateVector,
    op: &WeightedPauliSum,
    shots_per_term: u64,
    seed: u64,
) -> Result<EstimateResult> {
    if op.arity() != state.num_qubits() {
        return Err(Error::ArityMismatch {
            expected: state.num_qubits(),
            found: op.arity(),
        });
    }
    let settings = settings_for(op)?;
    let mut sampled = Vec::with_capacity(settings.len());
    for (index, (string, coeff, setting)) in settings.iter().enumerate() {
        let probs = setting_distribution(state, setting)?;
        let mut rng = rng_for(seed, &[index as u64]);
        let counts = sample_distribution(&probs, state.num_qubits(), shots_per_term, &mut rng)?;
        sampled.push((string, *coeff, counts));
    }
    Ok(EstimateResult::from_counts(sampled))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mermin::canonical_operator;
    use crate::statevector::{ghz_state, StateVector};
    use std::f64::consts::{FRAC_PI_4, SQRT_2};

    fn table(entries: &[(&str, u64)]) -> CountsTable {
        CountsTable::new(entries.iter().map(|&(k, v)| (k.to_owned(), v)).collect()).unwrap()
    }

    #[test]
    fn rotation_examples() {
        use PauliAxis::{X, Y};
        let ops = compile_basis_rotations(&MeasurementSetting::new(vec![X]).unwrap());
        assert_eq!(ops, vec![GateOp::H(0)]);
        let ops = compile_basis_rotations(&MeasurementSetting::new(vec![Y]).unwrap());
        assert_eq!(ops, vec![GateOp::Sdg(0), GateOp::H(0)]);
        let ops = compile_basis_rotations(&MeasurementSetting::new(vec![X, X, Y, Y, Y]).unwrap());
        assert_eq!(
            ops,
            vec![
                GateOp::H(0),
                GateOp::H(1),
                GateOp::Sdg(2),
                GateOp::H(2),
                GateOp::Sdg(3),
                GateOp::H(3),
                GateOp::Sdg(4),
                GateOp::H(4),
            ]
        );
    }

    #[test]
    fn unsupported_basis() {
        let err = MeasurementSetting::new(vec![PauliAxis::X, PauliAxis::Z]).unwrap_err();
        assert!(matches!(err, Error::UnsupportedBasis('Z')));
    }

    #[test]
    fn rotation_realizes_setting() {
        // Rotated parity equals the exact Pauli expectation.
        let state = ghz_state(3, 0.4).unwrap();
        for s in ["XXY", "YYY", "XYX"] {
            let string: PauliString = s.parse().unwrap();
            let probs =
                setting_distribution(&state, &MeasurementSetting::from_string(&string).unwrap())
                    .unwrap();
            let parity: f64 = probs
                .iter()
                .enumerate()
                .map(|(i, p)| if i.count_ones() % 2 == 0 { *p } else { -p })
                .sum();
            let exact = state.pauli_expectation(&string).unwrap().re;
            assert!((parity - exact).abs() < 1e-12, "{s}");
        }
    }

    #[test]
    fn sample_deterministic_state() {
        let s = StateVector::zero(2).unwrap();
        let c = sample_counts(&s, 1024, 3).unwrap();
        assert_eq!(c, table(&[("00", 1024)]));
    }

    #[test]
    fn sample_plus_state_frequencies() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply(&GateOp::H(0)).unwrap();
        let shots = 100_000;
        let c = sample_counts(&s, shots, 11).unwrap();
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((c.frequency("0") - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn ghz_support() {
        let c = sample_counts(&ghz_state(2, 1.0).unwrap(), 5000, 5).unwrap();
        assert!(c.counts.keys().all(|k| k == "00" || k == "11"));
    }

    #[test]
    fn bitstring_order_is_qubit_zero_first() {
        let s = StateVector::with_first_qubit(
            3,
            num_complex::Complex64::new(0.0, 0.0),
            num_complex::Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let c = sample_counts(&s, 10, 0).unwrap();
        assert_eq!(c.get("100"), 10);
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_expectation(&table(&[("00", 1024)])), 1.0);
        assert_eq!(parity_expectation(&table(&[("01", 512), ("10", 512)])), -1.0);
        assert_eq!(parity_expectation(&table(&[("00", 512), ("11", 512)])), 1.0);
    }

    #[test]
    fn counts_json() {
        let c = table(&[("00110", 17), ("11111", 3)]);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"shots":20,"counts":{"00110":17,"11111":3}}"#);
        assert_eq!(serde_json::from_str::<CountsTable>(&json).unwrap(), c);
    }

    #[test]
    fn estimate_mermin_two() {
        let op = canonical_operator(2).unwrap().m;
        let state = ghz_state(2, FRAC_PI_4).unwrap();
        let shots = 100_000;
        let est = estimate_operator(&state, &op, shots, 42).unwrap();
        let se = (op.coeff_norm_sqr() / shots as f64).sqrt();
        assert!((est.value - 2.0 * SQRT_2).abs() < 3.0 * se);
        assert_eq!(est.per_term.len(), 4);
    }

    #[test]
    fn estimate_on_product_state() {
        let op = canonical_operator(3).unwrap().m;
        let state = StateVector::zero(3).unwrap();
        let shots = 20_000;
        let est = estimate_operator(&state, &op, shots, 9).unwrap();
        let se = (op.coeff_norm_sqr() / shots as f64).sqrt();
        assert!(est.value.abs() < 3.0 * se);
    }

    #[test]
    fn estimate_is_deterministic() {
        let op = canonical_operator(3).unwrap().m_prime;
        let state = ghz_state(3, 0.3).unwrap();
        let a = estimate_operator(&state, &op, 1, 77).unwrap();
        let b = estimate_operator(&state, &op, 1, 77).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_rejects_z_terms() {
        let op = WeightedPauliSum::parse([("XZ", 1.0)]).unwrap();
        let state = ghz_state(2, 0.0).unwrap();
        assert!(matches!(
            estimate_operator(&state, &op, 10, 0),
            Err(Error::UnsupportedBasis('Z'))
        ));
    }

    #[test]
    fn estimator_coverage_over_seeds() {
        for n in [2, 3] {
            let op = canonical_operator(n).unwrap().m;
            let state = ghz_state(n, 0.9).unwrap();
            let exact = state.expectation(&op).unwrap();
            let shots = 100_000;
            let bound = 3.0 * (op.coeff_norm_sqr() / shots as f64).sqrt();
            let inside = (0..100)
                .filter(|&seed| {
                    let est = estimate_operator(&state, &op, shots, seed).unwrap();
                    (est.value - exact).abs() <= bound
                })
                .count();
            assert!(inside >= 99, "n={n}: {inside}/100");
        }
    }
}
