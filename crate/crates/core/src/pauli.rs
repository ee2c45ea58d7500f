//! Tensor-product Pauli strings and real-weighted sums of them.
//!
//! Only tensor extension is supported; two operators on the same qubit are
//! never multiplied, so no phase bookkeeping is needed.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Single-qubit Pauli factor. Ordering `I < X < Y < Z` fixes the canonical
/// term order of [`WeightedPauliSum`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliAxis {
    I,
    X,
    Y,
    Z,
}

impl PauliAxis {
    pub fn as_char(self) -> char {
        match self {
            PauliAxis::I => 'I',
            PauliAxis::X => 'X',
            PauliAxis::Y => 'Y',
            PauliAxis::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Result<Self> {
        match c {
            'I' => Ok(PauliAxis::I),
            'X' => Ok(PauliAxis::X),
            'Y' => Ok(PauliAxis::Y),
            'Z' => Ok(PauliAxis::Z),
            other => Err(Error::InvalidAxis(other)),
        }
    }
}

impl fmt::Display for PauliAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Sign of the single-qubit factor appended by [`WeightedPauliSum::append_factor`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Ordered tensor product of Pauli factors; position `i` acts on qubit `i`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<PauliAxis>);

impl PauliString {
    pub fn new(axes: Vec<PauliAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidQubitCount {
                n: 0,
                reason: "a Pauli string needs at least one factor",
            });
        }
        Ok(Self(axes))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn axes(&self) -> &[PauliAxis] {
        &self.0
    }

    /// Number of `Y` factors.
    pub fn y_weight(&self) -> usize {
        self.0.iter().filter(|&&a| a == PauliAxis::Y).count()
    }

    /// True when every factor is `X` or `Y`.
    pub fn is_xy_only(&self) -> bool {
        self.0
            .iter()
            .all(|&a| matches!(a, PauliAxis::X | PauliAxis::Y))
    }

    /// Tensor-extend by one factor on a new last qubit.
    pub fn extended(&self, axis: PauliAxis) -> Self {
        let mut axes = Vec::with_capacity(self.0.len() + 1);
        axes.extend_from_slice(&self.0);
        axes.push(axis);
        Self(axes)
    }

    /// Bit masks `(x, y, z)` over qubits; bit `i` is set when qubit `i`
    /// carries that factor.
    pub fn masks(&self) -> (usize, usize, usize) {
        let mut x = 0;
        let mut y = 0;
        let mut z = 0;
        for (i, axis) in self.0.iter().enumerate() {
            match axis {
                PauliAxis::I => {}
                PauliAxis::X => x |= 1 << i,
                PauliAxis::Y => y |= 1 << i,
                PauliAxis::Z => z |= 1 << i,
            }
        }
        (x, y, z)
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let axes = s.chars().map(PauliAxis::from_char).collect::<Result<Vec<_>>>()?;
        Self::new(axes)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for axis in &self.0 {
            write!(f, "{axis}")?;
        }
        Ok(())
    }
}

/// Real-weighted sum of Pauli strings of one arity, kept in canonical
/// (lexicographic) term order with no zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedPauliSum {
    arity: usize,
    terms: BTreeMap<PauliString, f64>,
}

impl WeightedPauliSum {
    /// Empty sum over `arity` qubits.
    pub fn zero(arity: usize) -> Self {
        Self {
            arity,
            terms: BTreeMap::new(),
        }
    }

    pub fn single(string: PauliString, coeff: f64) -> Self {
        let mut sum = Self::zero(string.len());
        if coeff != 0.0 {
            sum.terms.insert(string, coeff);
        }
        sum
    }

    /// Builds a sum from `(string, coeff)` pairs, merging duplicates.
    pub fn from_terms<I>(arity: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, f64)>,
    {
        let mut sum = Self::zero(arity);
        for (string, coeff) in terms {
            if string.len() != arity {
                return Err(Error::ArityMismatch {
                    expected: arity,
                    found: string.len(),
                });
            }
            *sum.terms.entry(string).or_insert(0.0) += coeff;
        }
        sum.prune();
        Ok(sum)
    }

    /// Parses `[("XXY", 1.0), ...]`-style literals; handy in tests.
    pub fn parse<'a, I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        let parsed = terms
            .into_iter()
            .map(|(s, c)| Ok((s.parse::<PauliString>()?, c)))
            .collect::<Result<Vec<_>>>()?;
        let arity = parsed.first().map_or(0, |(s, _)| s.len());
        Self::from_terms(arity, parsed)
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, string: &PauliString) -> f64 {
        self.terms.get(string).copied().unwrap_or(0.0)
    }

    /// Terms in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, f64)> {
        self.terms.iter().map(|(s, &c)| (s, c))
    }

    /// Tensor-extends every term by `axis` on a new qubit, multiplying each
    /// coefficient by `sign`.
    pub fn append_factor(&self, axis: PauliAxis, sign: Sign) -> Self {
        let s = sign.value();
        Self {
            arity: self.arity + 1,
            terms: self
                .terms
                .iter()
                .map(|(string, &c)| (string.extended(axis), s * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.arity != other.arity {
            return Err(Error::ArityMismatch {
                expected: self.arity,
                found: other.arity,
            });
        }
        let mut terms = self.terms.clone();
        for (string, &c) in &other.terms {
            *terms.entry(string.clone()).or_insert(0.0) += c;
        }
        let mut out = Self {
            arity: self.arity,
            terms,
        };
        out.prune();
        Ok(out)
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = Self {
            arity: self.arity,
            terms: self.terms.iter().map(|(s, &c)| (s.clone(), k * c)).collect(),
        };
        out.prune();
        out
    }

    /// True when every term contains only `X` and `Y` factors.
    pub fn is_xy_only(&self) -> bool {
        self.terms.keys().all(PauliString::is_xy_only)
    }

    /// Sum of squared coefficients, the variance scale of a shot estimate.
    pub fn coeff_norm_sqr(&self) -> f64 {
        self.terms.values().map(|c| c * c).sum()
    }

    fn prune(&mut self) {
        self.terms.retain(|_, c| *c != 0.0);
    }
}

#[derive(Serialize, Deserialize)]
struct TermRepr {
    axes: String,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
struct SumRepr {
    arity: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for WeightedPauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SumRepr {
            arity: self.arity,
            terms: self
                .iter()
                .map(|(s, coeff)| TermRepr {
                    axes: s.to_string(),
                    coeff,
                })
                .collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for WeightedPauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SumRepr::deserialize(deserializer)?;
        let terms = repr
            .terms
            .into_iter()
            .map(|t| Ok((t.axes.parse::<PauliString>()?, t.coeff)))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        WeightedPauliSum::from_terms(repr.arity, terms).map_err(D::Error::custom)
    }
}

impl fmt::Display for WeightedPauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return write!(f, "0");
        }
        for (i, (s, c)) in self.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            if c < 0.0 {
                write!(f, "- {}*{s}", -c)?;
            } else if i > 0 {
                write!(f, "+ {c}*{s}")?;
            } else {
                write!(f, "{c}*{s}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum(terms: &[(&str, f64)]) -> WeightedPauliSum {
        WeightedPauliSum::parse(terms.iter().copied()).unwrap()
    }

    #[test]
    fn append_single_term() {
        let out = sum(&[("X", 1.0)]).append_factor(PauliAxis::Y, Sign::Plus);
        assert_eq!(out, sum(&[("XY", 1.0)]));
        assert_eq!(out.arity(), 2);
    }

    #[test]
    fn append_distributes_sign() {
        let out = sum(&[("X", 1.0), ("Y", 1.0)]).append_factor(PauliAxis::X, Sign::Minus);
        assert_eq!(out, sum(&[("XX", -1.0), ("YX", -1.0)]));
    }

    #[test]
    fn append_two_to_three_qubits() {
        let m2 = sum(&[("XX", 1.0), ("XY", 1.0), ("YX", 1.0), ("YY", -1.0)]);
        let out = m2.append_factor(PauliAxis::X, Sign::Plus);
        assert_eq!(
            out,
            sum(&[("XXX", 1.0), ("XYX", 1.0), ("YXX", 1.0), ("YYX", -1.0)])
        );
    }

    #[test]
    fn add_cancels_to_empty() {
        let out = sum(&[("XX", 1.0)]).add(&sum(&[("XX", -1.0)])).unwrap();
        assert!(out.is_empty());
        assert_eq!(out.arity(), 2);
    }

    #[test]
    fn add_examples() {
        assert_eq!(
            sum(&[("XY", 1.0)]).add(&sum(&[("YX", 1.0)])).unwrap(),
            sum(&[("XY", 1.0), ("YX", 1.0)])
        );
        assert_eq!(
            sum(&[("XX", 1.0), ("YY", -1.0)]).add(&sum(&[("XX", 1.0)])).unwrap(),
            sum(&[("XX", 2.0), ("YY", -1.0)])
        );
    }

    #[test]
    fn add_rejects_arity_mismatch() {
        let err = sum(&[("XX", 1.0)]).add(&sum(&[("XXX", 1.0)])).unwrap_err();
        assert!(matches!(err, Error::ArityMismatch { expected: 2, found: 3 }));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(sum(&[("XX", 2.0)]).scale(0.5), sum(&[("XX", 1.0)]));
        assert_eq!(
            sum(&[("XY", 1.0), ("YX", -1.0)]).scale(-1.0),
            sum(&[("XY", -1.0), ("YX", 1.0)])
        );
        assert!(WeightedPauliSum::zero(3).scale(3.0).is_empty());
        assert!(sum(&[("XY", 1.0)]).scale(0.0).is_empty());
    }

    #[test]
    fn y_weight_counts() {
        assert_eq!("XXY".parse::<PauliString>().unwrap().y_weight(), 1);
        assert_eq!("YYY".parse::<PauliString>().unwrap().y_weight(), 3);
        assert_eq!("XXXX".parse::<PauliString>().unwrap().y_weight(), 0);
    }

    #[test]
    fn canonical_order_and_json() {
        let s = sum(&[("YX", -1.0), ("XY", 1.0), ("IZ", 0.5)]);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"arity":2,"terms":[{"axes":"IZ","coeff":0.5},{"axes":"XY","coeff":1.0},{"axes":"YX","coeff":-1.0}]}"#
        );
        let back: WeightedPauliSum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn json_rejects_bad_axis() {
        let bad = r#"{"arity":2,"terms":[{"axes":"XQ","coeff":1.0}]}"#;
        assert!(serde_json::from_str::<WeightedPauliSum>(bad).is_err());
    }

    fn arb_sum(arity: usize) -> impl Strategy<Value = WeightedPauliSum> {
        let axis = prop_oneof![
            Just(PauliAxis::I),
            Just(PauliAxis::X),
            Just(PauliAxis::Y),
            Just(PauliAxis::Z)
        ];
        prop::collection::vec((prop::collection::vec(axis, arity), -8i32..=8), 0..12).prop_map(
            move |terms| {
                WeightedPauliSum::from_terms(
                    arity,
                    terms
                        .into_iter()
                        .map(|(axes, c)| (PauliString::new(axes).unwrap(), f64::from(c))),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn add_commutes_and_associates(a in arb_sum(3), b in arb_sum(3), c in arb_sum(3)) {
            prop_assert_eq!(a.add(&b).unwrap(), b.add(&a).unwrap());
            prop_assert_eq!(
                a.add(&b).unwrap().add(&c).unwrap(),
                a.add(&b.add(&c).unwrap()).unwrap()
            );
        }

        #[test]
        fn append_preserves_term_count(a in arb_sum(2)) {
            let out = a.append_factor(PauliAxis::Y, Sign::Minus);
            prop_assert_eq!(out.len(), a.len());
            prop_assert_eq!(out.arity(), 3);
        }

        #[test]
        fn json_round_trip(a in arb_sum(4)) {
            let json = serde_json::to_string(&a).unwrap();
            let back: WeightedPauliSum = serde_json::from_str(&json).unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
