//! Bundled device data: the 53-qubit heavy-hex coupling map and the
//! published per-chain orthogonal-measurement tables for 2 to 7 qubits.
//!
//! The edge list is exactly the set of two-qubit chains of the 2-qubit
//! reference table; the drawn lattice is not machine-readable.

use crate::device::{load_reference_table, CouplingGraph, ReferenceRow};
use crate::error::{Error, Result};

pub const ROCHESTER_EDGES: &str = include_str!("../data/rochester.edges");

const REFERENCE_CSV: [&str; 6] = [
    include_str!("../data/reference_n2.csv"),
    include_str!("../data/reference_n3.csv"),
    include_str!("../data/reference_n4.csv"),
    include_str!("../data/reference_n5.csv"),
    include_str!("../data/reference_n6.csv"),
    include_str!("../data/reference_n7.csv"),
];

pub fn rochester() -> CouplingGraph {
    CouplingGraph::parse_edge_list(ROCHESTER_EDGES).expect("bundled edge list is well formed")
}

pub fn reference_csv(n: usize) -> Result<&'static str> {
    match n {
        2..=7 => Ok(REFERENCE_CSV[n - 2]),
        _ => Err(Error::InvalidParameter(format!(
            "no reference table for {n} qubits (2..=7 available)"
        ))),
    }
}

pub fn reference_table(n: usize) -> Result<Vec<ReferenceRow>> {
    load_reference_table(reference_csv(n)?.as_bytes(), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::{enumerate_chains, path_check};
    use std::collections::BTreeSet;

    #[test]
    fn rochester_shape() {
        let g = rochester();
        assert_eq!(g.num_vertices(), 53);
        assert_eq!(g.num_edges(), 58);
        assert_eq!(g.vertices().min(), Some(0));
        assert_eq!(g.vertices().max(), Some(52));
        assert!(g.has_edge(29, 36));
        assert!(g.has_edge(13, 14));
    }

    #[test]
    fn reference_row_counts() {
        let counts: Vec<usize> = (2..=7).map(|n| reference_table(n).unwrap().len()).collect();
        assert_eq!(counts, vec![58, 75, 38, 52, 55, 29]);
        assert!(reference_table(8).is_err());
    }

    #[test]
    fn reference_spot_values() {
        let r2 = reference_table(2).unwrap();
        assert_eq!(r2[0].chain.to_string(), "29-36");
        assert_eq!((r2[0].m_mean, r2[0].m_sigma), (2.3129, 0.2526));
        let r4 = reference_table(4).unwrap();
        assert_eq!(r4[0].chain.to_string(), "7-16-19-20");
        assert_eq!(r4[0].m_mean, 3.6434);
        let r7 = reference_table(7).unwrap();
        assert_eq!((r7[28].no, r7[28].m_mean), (29, -1.109));
    }

    #[test]
    fn two_qubit_chains_are_the_edge_list() {
        let g = rochester();
        let enumerated: BTreeSet<_> = enumerate_chains(&g, 2).into_iter().collect();
        let reference: BTreeSet<_> = reference_table(2)
            .unwrap()
            .into_iter()
            .map(|r| r.chain.canonical())
            .collect();
        assert_eq!(enumerated.len(), 58);
        assert_eq!(enumerated, reference);
    }

    #[test]
    fn enumeration_covers_every_valid_reference_chain() {
        let g = rochester();
        for n in 2..=7 {
            let rows = reference_table(n).unwrap();
            let issues = path_check(&g, n, &rows);
            let bad: BTreeSet<usize> = issues.iter().map(|i| i.no).collect();
            let enumerated: BTreeSet<_> = enumerate_chains(&g, n).into_iter().collect();
            for row in rows.iter().filter(|r| !bad.contains(&r.no)) {
                assert!(enumerated.contains(&row.chain.canonical()), "n={n} {}", row.chain);
            }
        }
    }
}
