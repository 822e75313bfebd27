//! The amplified SAT procedure against enumeration and the closed form.

mod common;

use common::*;
use nqc::sat::{self, closed_form_P, count_models, solve_sat, Decision, Mode, SatOptions};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `K g^{2r} / (K g^{2r} + (N - K) g^{-2r})`, evaluated directly for small r.
fn reference_p(big_n: u64, k: u64, g: f64, r: i32) -> f64 {
    let up = k as f64 * g.powi(2 * r);
    let down = (big_n - k) as f64 * g.powi(-2 * r);
    up / (up + down)
}

fn formula_strategy() -> impl Strategy<Value = (u64, usize, usize)> {
    (any::<u64>(), 3usize..8, 1usize..24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn simulated_matches_closed_form((seed, n, m) in formula_strategy(), r in 0i64..8, g in 1.2f64..3.0) {
        let f = random_3cnf(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
        let k = count_by_hand(&f);
        let rep = solve_sat(&f, &SatOptions { g, r: Some(r), ..Default::default() }).unwrap();
        let want = reference_p(1 << n, k, g, r as i32);
        prop_assert!((rep.p_accept - want).abs() < 1e-12);
        prop_assert!((closed_form_P(1 << n, k, g, r) - want).abs() < 1e-12);
        prop_assert!((rep.p_accept + rep.p_reject - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_inversion_recovers_count((seed, n, m) in formula_strategy(), g in 1.2f64..3.0) {
        let f = random_3cnf(&mut ChaCha8Rng::seed_from_u64(seed), n, m);
        let r = sat::choose_r(n, g).unwrap();
        let est = count_models(&f, g, r, Mode::Exact, 24).unwrap();
        prop_assert_eq!(est.estimate, Some(count_by_hand(&f)));
    }
}

#[test]
fn decisions_follow_satisfiability() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..30 {
        let f = random_3cnf(&mut rng, 5, 22);
        let k = count_by_hand(&f);
        let rep = solve_sat(&f, &SatOptions::default()).unwrap();
        let want = if k > 0 {
            Decision::Sat
        } else {
            Decision::Unsat
        };
        assert_eq!(rep.decision, want, "K = {k}, p = {}", rep.p_accept);
    }
}

#[test]
fn sampled_decision_agrees_with_exact() {
    let f = nqc::cnf::parse_dimacs("p cnf 4 3\n1 2 0\n-1 3 0\n-3 -4 0\n").unwrap();
    let rep = solve_sat(
        &f,
        &SatOptions {
            mode: Mode::Shots {
                shots: 2000,
                seed: 1,
            },
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rep.decision, Decision::Sat);
    assert_eq!(
        rep.accept_count.unwrap() as f64 / 2000.0,
        rep.p_accept_sampled.unwrap()
    );
}

#[test]
fn capacity_is_enforced() {
    let f = nqc::CnfFormula::new(26, vec![vec![1]]).unwrap();
    assert!(matches!(
        solve_sat(&f, &SatOptions::default()),
        Err(nqc::Error::Capacity { n: 26, limit: 24 })
    ));
}
