//! Mermin polynomials `M_n` and their duals `M'_n`.
//!
//! Two independent constructions are kept side by side:
//!
//! * [`build_recursive`] expands the two-line recursion literally, starting
//!   from `M_1 = X`, `M'_1 = Y` with `a_n = X`, `a'_n = Y`.
//! * [`canonical_operator`] writes `M_n` directly from the coefficient table
//!   `f(s, r)`: every string with `j` `Y` factors has coefficient
//!   `f(n mod 8, j mod 4)`.
//!
//! The literal recursion equals the table expansion times a positive scalar
//! `k_n` (measured: `k_n = 2^floor((n-1)/2)`, i.e. 1, 2, 2, 4, 4, 8, 8 for
//! n = 2..8). All closed-form expectations, local-realism bounds and the
//! normalized maxima refer to the table-normalized operator, so that one is
//! canonical; `M'_n` is the recursive dual divided by the same `k_n`.

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{PauliAxis, PauliString, Sign, WeightedPauliSum};

/// Largest qubit count accepted by [`lhv_max_bruteforce`] (4^n assignments).
pub const MAX_LHV_QUBITS: usize = 6;

/// A Mermin operator together with its dual on the same `n` qubits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MerminPair {
    pub n: usize,
    pub m: WeightedPauliSum,
    pub m_prime: WeightedPauliSum,
}

impl MerminPair {
    pub fn scale(&self, k: f64) -> Self {
        Self {
            n: self.n,
            m: self.m.scale(k),
            m_prime: self.m_prime.scale(k),
        }
    }
}

/// Coefficient table `f(s, r)` indexed by `s = n mod 8`, `r = j mod 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CoefficientTable {
    entries: [[i8; 4]; 8],
}

impl CoefficientTable {
    /// The published table. Rows are `s = 0..7`, columns `r = 0..3`.
    pub const fn standard() -> Self {
        Self {
            entries: [
                [1, -1, -1, 1],
                [1, 0, -1, 0],
                [1, 1, -1, -1],
                [0, 1, 0, -1],
                [-1, 1, 1, -1],
                [-1, 0, 1, 0],
                [-1, -1, 1, 1],
                [0, -1, 0, 1],
            ],
        }
    }

    pub fn entry(&self, s: usize, r: usize) -> i8 {
        self.entries[s % 8][r % 4]
    }

    /// `f(n, j)` with the residues taken internally.
    pub fn f(&self, n: usize, j: usize) -> i8 {
        self.entry(n % 8, j % 4)
    }

    /// Copy with one entry replaced; used to check that the consistency
    /// checks notice a corrupted table.
    pub fn with_entry(mut self, s: usize, r: usize, value: i8) -> Self {
        self.entries[s % 8][r % 4] = value;
        self
    }

    /// Expands `M_n` from the table: all `2^n` X/Y strings weighted by
    /// `f(n, y_weight)`.
    pub fn expand(&self, n: usize) -> Result<WeightedPauliSum> {
        check_min_qubits(n, 1)?;
        if n >= usize::BITS as usize {
            return Err(Error::InvalidQubitCount {
                n,
                reason: "too many qubits to enumerate",
            });
        }
        let terms = (0usize..1 << n).filter_map(|mask| {
            let j = mask.count_ones() as usize;
            let f = self.f(n, j);
            (f != 0).then(|| {
                let axes = (0..n)
                    .map(|q| if mask >> q & 1 == 1 { PauliAxis::Y } else { PauliAxis::X })
                    .collect();
                (PauliString::new(axes).expect("n >= 1"), f64::from(f))
            })
        });
        WeightedPauliSum::from_terms(n, terms)
    }
}

impl Default for CoefficientTable {
    fn default() -> Self {
        Self::standard()
    }
}

/// Phase-dependent expectation request for the GHZ-like state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSpec {
    pub n: usize,
    pub phi: f64,
}

impl AnalyticSpec {
    pub fn new(n: usize, phi: f64) -> Self {
        Self { n, phi }
    }

    pub fn is_even(&self) -> bool {
        self.n.is_multiple_of(2)
    }
}

fn check_min_qubits(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::InvalidQubitCount {
            n,
            reason: if min == 1 {
                "at least one qubit is required"
            } else {
                "at least two qubits are required"
            },
        });
    }
    Ok(())
}

/// Literal recursion
/// `M_n = M_{n-1}(X + Y) + M'_{n-1}(X - Y)`,
/// `M'_n = M_{n-1}(Y - X) + M'_{n-1}(X + Y)`.
pub fn build_recursive(n: usize) -> Result<MerminPair> {
    check_min_qubits(n, 1)?;
    let x = |s: &WeightedPauliSum, sign| s.append_factor(PauliAxis::X, sign);
    let y = |s: &WeightedPauliSum, sign| s.append_factor(PauliAxis::Y, sign);

    let mut m = WeightedPauliSum::single("X".parse()?, 1.0);
    let mut mp = WeightedPauliSum::single("Y".parse()?, 1.0);
    for _ in 2..=n {
        let next_m = x(&m, Sign::Plus)
            .add(&y(&m, Sign::Plus))?
            .add(&x(&mp, Sign::Plus))?
            .add(&y(&mp, Sign::Minus))?;
        let next_mp = y(&m, Sign::Plus)
            .add(&x(&m, Sign::Minus))?
            .add(&x(&mp, Sign::Plus))?
            .add(&y(&mp, Sign::Plus))?;
        m = next_m;
        mp = next_mp;
    }
    Ok(MerminPair { n, m, m_prime: mp })
}

/// Ratio `k` such that `recursive = k * expansion`, term by term.
fn common_ratio(
    n: usize,
    recursive: &WeightedPauliSum,
    expansion: &WeightedPauliSum,
) -> Result<f64> {
    let inconsistent = |detail: String| Error::TableInconsistent { n, detail };
    if recursive.len() != expansion.len() {
        return Err(inconsistent(format!(
            "recursion has {} terms, table expansion has {}",
            recursive.len(),
            expansion.len()
        )));
    }
    let mut ratio: Option<f64> = None;
    for (string, table_coeff) in expansion.iter() {
        let rec_coeff = recursive.coeff(string);
        if rec_coeff == 0.0 {
            return Err(inconsistent(format!("term {string} missing from the recursion")));
        }
        let r = rec_coeff / table_coeff;
        match ratio {
            None => ratio = Some(r),
            Some(k) if k == r => {}
            Some(k) => {
                return Err(inconsistent(format!(
                    "term {string} has ratio {r}, expected {k}"
                )))
            }
        }
    }
    match ratio {
        Some(k) if k > 0.0 && k.fract() == 0.0 => Ok(k),
        Some(k) => Err(inconsistent(format!("scalar {k} is not a positive integer"))),
        None => Err(inconsistent("empty expansion".into())),
    }
}

/// Canonical pair and the scalar `k_n` mapping it onto the recursion,
/// checked against `table`.
pub fn canonical_with_table(n: usize, table: &CoefficientTable) -> Result<(MerminPair, f64)> {
    check_min_qubits(n, 2)?;
    let recursive = build_recursive(n)?;
    let expansion = table.expand(n)?;
    let k = common_ratio(n, &recursive.m, &expansion)?;
    let pair = MerminPair {
        n,
        m: expansion,
        m_prime: recursive.m_prime.scale(1.0 / k),
    };
    Ok((pair, k))
}

/// Table-normalized `M_n` and `M'_n`.
pub fn canonical_operator(n: usize) -> Result<MerminPair> {
    canonical_with_table(n, &CoefficientTable::standard()).map(|(pair, _)| pair)
}

/// Scalar `k_n` with `build_recursive(n) = k_n * canonical_operator(n)`.
pub fn recursion_scale(n: usize) -> Result<f64> {
    canonical_with_table(n, &CoefficientTable::standard()).map(|(_, k)| k)
}

/// Amplitude of the closed-form sinusoid: `2^(n - 1/2)` for even `n`,
/// `2^(n - 1)` for odd `n`.
pub fn analytic_amplitude(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        2f64.powf(n as f64 - 0.5)
    } else {
        2f64.powi(n as i32 - 1)
    }
}

/// `(<M_n>, <M'_n>)` of the canonical pair on `(|0..0> + e^{i phi}|1..1>)/sqrt2`.
pub fn analytic_expectation(spec: AnalyticSpec) -> (f64, f64) {
    let amp = analytic_amplitude(spec.n);
    let shifted = spec.phi - (spec.n as f64 - 1.0) * FRAC_PI_4;
    (amp * shifted.cos(), amp * shifted.sin())
}

/// Local-realism bound: `2^(n/2)` for even `n`, `2^((n-1)/2)` for odd `n`.
pub fn lr_bound(n: usize) -> f64 {
    2f64.powi((n / 2) as i32)
}

pub fn normalize(value: f64, n: usize) -> f64 {
    value / lr_bound(n)
}

/// Phase maximizing `<M_n>`: `(n-1) pi / 4` reduced to `[0, 2pi)`.
pub fn phi_max(n: usize) -> f64 {
    ((n as f64 - 1.0) * PI / 4.0).rem_euclid(TAU)
}

/// Maximum of `pair.m` over deterministic local assignments: every `X` on
/// qubit `i` takes the value `a_i` and every `Y` takes `a'_i`, with
/// `a_i, a'_i` in `{-1, +1}`.
pub fn lhv_max_bruteforce(pair: &MerminPair) -> Result<f64> {
    let n = pair.m.arity();
    if n > MAX_LHV_QUBITS {
        return Err(Error::TooManyQubits {
            n,
            limit: MAX_LHV_QUBITS,
        });
    }
    let mut terms = Vec::with_capacity(pair.m.len());
    for (string, coeff) in pair.m.iter() {
        if !string.is_xy_only() {
            return Err(Error::InvalidParameter(format!(
                "term {string} has a factor other than X or Y"
            )));
        }
        let (x, y, _) = string.masks();
        terms.push((x, y, coeff));
    }
    // Bit i of `neg_a` (`neg_ap`) set means a_i (a'_i) = -1.
    let mut best = f64::NEG_INFINITY;
    for neg_a in 0usize..1 << n {
        for neg_ap in 0usize..1 << n {
            let value: f64 = terms
                .iter()
                .map(|&(x, y, c)| {
                    let flips = (neg_a & x).count_ones() + (neg_ap & y).count_ones();
                    if flips % 2 == 0 {
                        c
                    } else {
                        -c
                    }
                })
                .sum();
            best = best.max(value);
        }
    }
    Ok(best)
}
