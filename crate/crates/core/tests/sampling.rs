//! Shot sampling against exact distributions.

mod common;

use common::*;
use nqc::circuit::{exact_distribution, parse_circuit, run_shots, sample_outcomes};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_p(circ: &nqc::Circuit, shots: u64, seed: u64) -> f64 {
    let d = exact_distribution(circ, None).unwrap();
    let samples = sample_outcomes(&d, shots, seed);
    let mut counts = vec![0u64; 1 << d.measured.len()];
    for o in samples {
        counts[o as usize] += 1;
    }
    // bins with tiny expectation are pooled into their neighbour-free remainder
    let mut stat = 0.0;
    let mut dof = 0usize;
    let (mut pool_exp, mut pool_obs) = (0.0, 0u64);
    for (o, &k) in counts.iter().enumerate() {
        let e = d.probability(o as u64) * shots as f64;
        if e < 5.0 {
            pool_exp += e;
            pool_obs += k;
            continue;
        }
        stat += (k as f64 - e).powi(2) / e;
        dof += 1;
    }
    if pool_exp >= 5.0 {
        stat += (pool_obs as f64 - pool_exp).powi(2) / pool_exp;
        dof += 1;
    }
    let dist = ChiSquared::new((dof - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn shots_follow_exact_distribution() {
    for seed in 0..6u64 {
        let circ = random_circuit(1000 + seed, 4, 25, true);
        let p = chi_square_p(&circ, 20_000, seed);
        assert!(p > 1e-4, "circuit {seed}: chi-square p = {p}");
    }
}

#[test]
fn biased_single_qubit() {
    // H then G(2): p1 = (1/4)/(4 + 1/4) = 1/17
    let circ = parse_circuit("qubits 1\nh 0\ng 0 2.0\n").unwrap();
    let r = run_shots(&circ, 100_000, 3, None).unwrap();
    let ones = r.counts.as_ref().unwrap().get("1").copied().unwrap_or(0) as f64;
    let p: f64 = 1.0 / 17.0;
    let sigma = (p * (1.0 - p) / 1e5).sqrt();
    assert!((ones / 1e5 - p).abs() < 4.0 * sigma);
    assert!(chi_square_p(&circ, 50_000, 11) > 1e-4);
}

#[test]
fn identical_seed_identical_report() {
    let circ = random_circuit(5, 3, 20, true);
    let a = serde_json::to_string(&run_shots(&circ, 5000, 42, None).unwrap()).unwrap();
    let b = serde_json::to_string(&run_shots(&circ, 5000, 42, None).unwrap()).unwrap();
    let other = serde_json::to_string(&run_shots(&circ, 5000, 43, None).unwrap()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, other);
}

#[test]
fn sampling_does_not_depend_on_thread_count() {
    let circ = random_circuit(8, 3, 20, true);
    let d = exact_distribution(&circ, None).unwrap();
    let par = sample_outcomes(&d, 10_000, 9);
    nqc::par::set_sequential(true);
    let seq = sample_outcomes(&d, 10_000, 9);
    nqc::par::set_sequential(false);
    assert_eq!(par, seq);
}
