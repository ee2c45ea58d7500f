//! Coupling graphs, qubit chains and published reference measurements.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type QubitId = usize;

/// Simple undirected graph over physical qubit ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CouplingGraph {
    adjacency: BTreeMap<QubitId, BTreeSet<QubitId>>,
    edges: BTreeSet<(QubitId, QubitId)>,
}

impl CouplingGraph {
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (QubitId, QubitId)>,
    {
        let mut g = Self::default();
        for (u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    fn add_edge(&mut self, u: QubitId, v: QubitId) -> Result<()> {
        if u == v {
            return Err(Error::SelfLoop(u));
        }
        let key = (u.min(v), u.max(v));
        if !self.edges.insert(key) {
            return Err(Error::DuplicateEdge(key.0, key.1));
        }
        self.adjacency.entry(u).or_default().insert(v);
        self.adjacency.entry(v).or_default().insert(u);
        Ok(())
    }

    /// Parses an edge list: one `u v` pair per line, `#` starts a comment.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut g = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: i + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [u, v] = fields.as_slice() else {
                return Err(parse_err(format!("expected `u v`, got {line:?}")));
            };
            let u = u.parse().map_err(|e| parse_err(format!("{u:?}: {e}")))?;
            let v = v.parse().map_err(|e| parse_err(format!("{v:?}: {e}")))?;
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.adjacency.keys().copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (QubitId, QubitId)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, u: QubitId, v: QubitId) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn neighbors(&self, q: QubitId) -> impl Iterator<Item = QubitId> + '_ {
        self.adjacency.get(&q).into_iter().flatten().copied()
    }

    /// True when consecutive chain qubits are all coupled.
    pub fn is_path(&self, chain: &Chain) -> bool {
        chain.qubits.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }
}

/// Reads an edge-list file.
pub fn load_topology<R: Read>(mut source: R) -> Result<CouplingGraph> {
    let mut text = String::new();
    source.read_to_string(&mut text)?;
    CouplingGraph::parse_edge_list(&text)
}

/// Ordered list of distinct qubits; the CNOT ladder follows this order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Chain {
    qubits: Vec<QubitId>,
}

impl Chain {
    pub fn new(qubits: Vec<QubitId>) -> Result<Self> {
        if qubits.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "chain needs at least two qubits, got {qubits:?}"
            )));
        }
        let distinct: BTreeSet<_> = qubits.iter().collect();
        if distinct.len() != qubits.len() {
            return Err(Error::InvalidParameter(format!(
                "chain repeats a qubit: {qubits:?}"
            )));
        }
        Ok(Self { qubits })
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn len(&self) -> usize {
        self.qubits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qubits.is_empty()
    }

    pub fn reversed(&self) -> Self {
        Self {
            qubits: self.qubits.iter().rev().copied().collect(),
        }
    }

    /// Orientation whose first qubit is smaller than its last.
    pub fn canonical(&self) -> Self {
        if self.qubits.first() > self.qubits.last() {
            self.reversed()
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, q) in self.qubits.iter().enumerate() {
            if i > 0 {
                write!(f, "-")?;
            }
            write!(f, "{q}")?;
        }
        Ok(())
    }
}

impl FromStr for Chain {
    type Err = Error;

    /// Parses `29-36` (or `[29, 36]`).
    fn from_str(s: &str) -> Result<Self> {
        let trimmed = s.trim().trim_start_matches('[').trim_end_matches(']');
        let qubits = trimmed
            .split(['-', ','])
            .map(|p| {
                p.trim()
                    .parse::<QubitId>()
                    .map_err(|e| Error::InvalidParameter(format!("bad chain {s:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(qubits)
    }
}

impl Serialize for Chain {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Chain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// All simple paths on `length` qubits, one orientation each, sorted.
pub fn enumerate_chains(graph: &CouplingGraph, length: usize) -> Vec<Chain> {
    if length < 2 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(length);
    for start in graph.vertices() {
        path.push(start);
        extend_paths(graph, length, &mut path, &mut out);
        path.pop();
    }
    out.sort();
    out
}

fn extend_paths(graph: &CouplingGraph, length: usize, path: &mut Vec<QubitId>, out: &mut Vec<Chain>) {
    if path.len() == length {
        // Each undirected path is found from both ends; keep one.
        if path.first() < path.last() {
            out.push(Chain {
                qubits: path.clone(),
            });
        }
        return;
    }
    let last = *path.last().expect("nonempty path");
    for next in graph.neighbors(last) {
        if !path.contains(&next) {
            path.push(next);
            extend_paths(graph, length, path, out);
            path.pop();
        }
    }
}

/// Grows every chain whose normalized value exceeds `threshold` by one
/// coupled qubit at either end. Output is canonical, deduplicated and sorted.
pub fn extend_violating_chains(
    prior: &[(Chain, f64)],
    graph: &CouplingGraph,
    threshold: f64,
) -> Vec<Chain> {
    let mut out = BTreeSet::new();
    for (chain, value) in prior {
        if *value <= threshold {
            continue;
        }
        let q = chain.qubits();
        let (first, last) = (q[0], q[q.len() - 1]);
        for next in graph.neighbors(last).filter(|n| !q.contains(n)) {
            let mut qubits = q.to_vec();
            qubits.push(next);
            out.insert(Chain { qubits }.canonical());
        }
        for prev in graph.neighbors(first).filter(|n| !q.contains(n)) {
            let mut qubits = vec![prev];
            qubits.extend_from_slice(q);
            out.insert(Chain { qubits }.canonical());
        }
    }
    out.into_iter().collect()
}

/// One row of a published orthogonal-measurement table (raw, unnormalized
/// means and population standard deviations over five repeats).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub no: usize,
    pub chain: Chain,
    pub m_mean: f64,
    pub m_prime_mean: f64,
    pub m_sigma: f64,
    pub m_prime_sigma: f64,
}

#[derive(Deserialize)]
struct ReferenceRecord {
    no: usize,
    qubits: String,
    m_mean: f64,
    mp_mean: f64,
    m_sigma: f64,
    mp_sigma: f64,
}

/// Reads a reference CSV (`no,qubits,m_mean,mp_mean,m_sigma,mp_sigma`) for
/// chains of `n` qubits.
pub fn load_reference_table<R: Read>(source: R, n: usize) -> Result<Vec<ReferenceRow>> {
    let mut reader = csv::Reader::from_reader(source);
    let mut rows = Vec::new();
    for (i, record) in reader.deserialize::<ReferenceRecord>().enumerate() {
        let line = i + 2;
        let r = record?;
        let chain: Chain = r.qubits.parse().map_err(|e| Error::Parse {
            line,
            message: format!("{e}"),
        })?;
        if chain.len() != n {
            return Err(Error::Parse {
                line,
                message: format!("chain {chain} has {} qubits, expected {n}", chain.len()),
            });
        }
        if r.m_sigma < 0.0 || r.mp_sigma < 0.0 {
            return Err(Error::Parse {
                line,
                message: "negative standard deviation".into(),
            });
        }
        rows.push(ReferenceRow {
            no: r.no,
            chain,
            m_mean: r.m_mean,
            m_prime_mean: r.mp_mean,
            m_sigma: r.m_sigma,
            m_prime_sigma: r.mp_sigma,
        });
    }
    Ok(rows)
}

/// Reference row whose chain is not a path of the graph.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathIssue {
    pub n: usize,
    pub no: usize,
    pub chain: Chain,
    /// Consecutive pairs that are not edges.
    pub missing_edges: Vec<(QubitId, QubitId)>,
}

pub fn path_check(graph: &CouplingGraph, n: usize, rows: &[ReferenceRow]) -> Vec<PathIssue> {
    rows.iter()
        .filter_map(|row| {
            let missing: Vec<_> = row
                .chain
                .qubits()
                .windows(2)
                .filter(|w| !graph.has_edge(w[0], w[1]))
                .map(|w| (w[0], w[1]))
                .collect();
            (!missing.is_empty()).then(|| PathIssue {
                n,
                no: row.no,
                chain: row.chain.clone(),
                missing_edges: missing,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph(n: usize) -> CouplingGraph {
        CouplingGraph::from_edges((1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn chains(list: &[&[usize]]) -> Vec<Chain> {
        list.iter().map(|q| Chain::new(q.to_vec()).unwrap()).collect()
    }

    #[test]
    fn edge_list_parsing() {
        let g = CouplingGraph::parse_edge_list("# header\n0 1\n1 2 # trailing\n\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.num_edges(), 2);
        assert!(g.has_edge(2, 1));
        assert!(matches!(
            CouplingGraph::parse_edge_list("0 1\n1 0\n"),
            Err(Error::DuplicateEdge(0, 1))
        ));
        assert!(matches!(CouplingGraph::parse_edge_list("3 3\n"), Err(Error::SelfLoop(3))));
        assert!(matches!(
            CouplingGraph::parse_edge_list("0 1\n0 x\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            CouplingGraph::parse_edge_list("0 1 2\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn enumerate_on_path_graph() {
        let g = path_graph(3);
        assert_eq!(enumerate_chains(&g, 2), chains(&[&[0, 1], &[1, 2]]));
        assert_eq!(enumerate_chains(&g, 3), chains(&[&[0, 1, 2]]));
        assert!(enumerate_chains(&g, 4).is_empty());
    }

    #[test]
    fn enumerate_star_never_reports_reversals() {
        let g = CouplingGraph::from_edges([(0, 1), (0, 2), (0, 3), (3, 4)]).unwrap();
        let found = enumerate_chains(&g, 3);
        let set: BTreeSet<_> = found.iter().cloned().collect();
        for c in &found {
            assert!(!set.contains(&c.reversed()) || c.reversed() == *c);
            assert!(g.is_path(c));
        }
        // 1-0-2, 1-0-3, 2-0-3, 0-3-4
        assert_eq!(found.len(), 4);
    }

    #[test]
    fn extension_examples() {
        let g = path_graph(3);
        let prior = vec![(Chain::new(vec![0, 1]).unwrap(), 1.2)];
        assert_eq!(extend_violating_chains(&prior, &g, 1.0), chains(&[&[0, 1, 2]]));
        let prior = vec![(Chain::new(vec![0, 1]).unwrap(), 0.9)];
        assert!(extend_violating_chains(&prior, &g, 1.0).is_empty());
        let g = path_graph(4);
        let prior = vec![(Chain::new(vec![1, 2]).unwrap(), 1.5)];
        assert_eq!(
            extend_violating_chains(&prior, &g, 1.0),
            chains(&[&[0, 1, 2], &[1, 2, 3]])
        );
    }

    #[test]
    fn chain_parsing_and_canonical_form() {
        let c: Chain = "36-29".parse().unwrap();
        assert_eq!(c.canonical().qubits(), &[29, 36]);
        let c: Chain = "[7, 16, 19]".parse().unwrap();
        assert_eq!(c.to_string(), "7-16-19");
        assert!("1-1".parse::<Chain>().is_err());
        assert!("5".parse::<Chain>().is_err());
    }

    #[test]
    fn reference_csv() {
        let text = "no,qubits,m_mean,mp_mean,m_sigma,mp_sigma\n1,29-36,2.3129,-0.0285,0.2526,0.0911\n";
        let rows = load_reference_table(text.as_bytes(), 2).unwrap();
        assert_eq!(rows[0].chain.qubits(), &[29, 36]);
        assert_eq!(rows[0].m_sigma, 0.2526);
        let neg = "no,qubits,m_mean,mp_mean,m_sigma,mp_sigma\n1,29-36,2.3,0.0,-0.1,0.1\n";
        assert!(load_reference_table(neg.as_bytes(), 2).is_err());
        assert!(load_reference_table(text.as_bytes(), 3).is_err());
        assert!(load_reference_table("no,qubits\n1,2".as_bytes(), 2).is_err());
    }
}
