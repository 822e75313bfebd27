//! Parse → serialize → parse on the corpus and on generated inputs.

mod common;

use common::*;
use nqc::circuit::{load_circuit, parse_circuit, parse_circuit_at};
use nqc::cnf::parse_dimacs;
use proptest::prelude::*;
use std::path::{Path, PathBuf};

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

fn files(ext: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(corpus())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    v
}

#[test]
fn corpus_round_trips() {
    let (cnfs, circuits) = (files("cnf"), files("nqc"));
    assert_eq!(cnfs.len() + circuits.len(), 50);
    for p in cnfs {
        let f = parse_dimacs(&std::fs::read_to_string(&p).unwrap()).unwrap();
        let back = parse_dimacs(&f.to_dimacs()).unwrap();
        assert_eq!(back, f, "{}", p.display());
    }
    for p in circuits {
        let c = load_circuit(&p).unwrap();
        let back = parse_circuit_at(&c.to_text(), &corpus()).unwrap();
        assert!(back.same_structure(&c), "{}", p.display());
    }
}

#[test]
fn corpus_edge_cases_parse_as_expected() {
    let read = |n: &str| parse_dimacs(&std::fs::read_to_string(corpus().join(n)).unwrap()).unwrap();
    assert_eq!(read("empty_clause.cnf").clauses[1], Vec::<i64>::new());
    assert_eq!(count_by_hand(&read("empty_clause.cnf")), 0);
    assert_eq!(read("zero_clauses.cnf").clauses.len(), 0);
    assert_eq!(count_by_hand(&read("zero_clauses.cnf")), 16);
    assert_eq!(
        read("multiline.cnf").clauses,
        vec![vec![1, 2, 3, 4, 5], vec![-1, -5]]
    );
}

proptest! {
    #[test]
    fn generated_circuits_round_trip(seed in any::<u64>(), n in 2usize..6, len in 0usize..40) {
        let c = random_circuit(seed, n, len, true);
        let back = parse_circuit(&c.to_text()).unwrap();
        prop_assert!(back.same_structure(&c));
    }

    #[test]
    fn generated_formulas_round_trip(
        n in 1usize..10,
        clauses in prop::collection::vec(prop::collection::vec((1i64..10, any::<bool>()), 0..5), 0..12),
    ) {
        let clauses: Vec<Vec<i64>> = clauses
            .into_iter()
            .map(|cl| cl.into_iter().map(|(v, s)| {
                let v = (v - 1) % n as i64 + 1;
                if s { v } else { -v }
            }).collect())
            .collect();
        let f = nqc::CnfFormula::new(n, clauses).unwrap();
        prop_assert_eq!(parse_dimacs(&f.to_dimacs()).unwrap(), f);
    }
}
