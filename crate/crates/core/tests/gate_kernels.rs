//! Gate kernels against explicitly lifted dense matrices.

mod common;

use common::*;
use nqc::gates::{self, apply, apply_g_repeated};
use nqc::{par, GateOp, Mat2, ScaledState};
use proptest::prelude::*;

fn arb_amps(n: usize) -> impl Strategy<Value = Vec<nqc::Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| v.into_iter().map(|(a, b)| c(a, b)).collect())
}

fn arb_gate(n: usize) -> impl Strategy<Value = GateOp> {
    let q = 0..n;
    let pair = (0..n, 0..n - 1).prop_map(|(t, o)| (if o >= t { o + 1 } else { o }, t));
    let g = (1.1f64..4.0, any::<bool>()).prop_map(|(v, inv)| if inv { 1.0 / v } else { v });
    prop_oneof![
        q.clone().prop_map(GateOp::H),
        q.clone().prop_map(GateOp::T),
        q.clone().prop_map(GateOp::X),
        pair.clone()
            .prop_map(|(control, target)| GateOp::Cnot { control, target }),
        (q.clone(), g.clone()).prop_map(|(target, g)| GateOp::G { target, g }),
        (pair, g).prop_map(|((control, target), g)| GateOp::Cg { control, target, g }),
        (q, 0.0f64..6.3).prop_map(|(target, th)| GateOp::U2 {
            target,
            matrix: Mat2::real(th.cos(), -th.sin(), th.sin(), th.cos()),
        }),
    ]
}

fn check_against_dense(n: usize, amps: Vec<nqc::Complex64>, op: GateOp) {
    let want = mat_vec(&lift(&op, n), &amps);
    let mut s = ScaledState::from_amplitudes(amps, 0.0).unwrap();
    apply(&mut s, &op).unwrap();
    let got = s.true_amplitudes();
    assert!(max_diff(&got, &want) < 1e-12, "{op}: {got:?} vs {want:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn kernel_matches_dense_3q((amps, op) in (arb_amps(3), arb_gate(3))) {
        check_against_dense(3, amps, op);
    }

    #[test]
    fn kernel_matches_dense_5q((amps, op) in (arb_amps(5), arb_gate(5))) {
        check_against_dense(5, amps, op);
    }

    #[test]
    fn kernels_are_linear(
        a in arb_amps(3),
        b in arb_amps(3),
        op in arb_gate(3),
        (x, y) in (-2.0f64..2.0, -2.0f64..2.0),
    ) {
        let k = c(x, y);
        let mix: Vec<_> = a.iter().zip(&b).map(|(p, q)| p + k * q).collect();
        prop_assume!(mix.iter().any(|z| z.norm() > 1e-6));
        let run = |v: Vec<nqc::Complex64>| {
            let mut s = ScaledState::from_amplitudes(v, 0.0).unwrap();
            apply(&mut s, &op).unwrap();
            s.true_amplitudes()
        };
        let (ra, rb, rm) = (run(a), run(b), run(mix));
        let combined: Vec<_> = ra.iter().zip(&rb).map(|(p, q)| p + k * q).collect();
        prop_assert!(max_diff(&rm, &combined) < 1e-12);
    }

    #[test]
    fn unitary_gates_keep_the_norm(amps in arb_amps(4), op in arb_gate(4)) {
        prop_assume!(op.is_unitary());
        let s = ScaledState::from_amplitudes(amps, 0.0).unwrap();
        let before = s.norm_squared().ln();
        let after = gates::applied(&s, &op).unwrap().norm_squared().ln();
        prop_assert!((before - after).abs() < 1e-12);
    }

    #[test]
    fn repeated_g_equals_iteration(
        amps in arb_amps(3),
        q in 0usize..3,
        g in 1.1f64..3.0,
        r in 0i64..40,
    ) {
        let s = ScaledState::from_amplitudes(amps, 0.0).unwrap();
        let mut fast = s.clone();
        apply_g_repeated(&mut fast, q, g, r).unwrap();
        let mut slow = s;
        for _ in 0..r {
            apply(&mut slow, &GateOp::G { target: q, g }).unwrap();
        }
        let (f, w) = (fast.normalized_amplitudes(), slow.normalized_amplitudes());
        prop_assert!(max_diff(&f, &w) < 1e-12);
        let (lf, lw) = (fast.norm_squared().ln(), slow.norm_squared().ln());
        prop_assert!((lf - lw).abs() < 1e-9 * (1.0 + lw.abs()));
    }
}

#[test]
fn parallel_and_sequential_paths_agree_bitwise() {
    // 16 qubits spans several work chunks
    let circ = random_circuit(99, 16, 60, true);
    let run = |seq: bool| {
        par::set_sequential(seq);
        let s = nqc::circuit::evolve(&circ, None).unwrap();
        par::set_sequential(false);
        s
    };
    let (a, b) = (run(false), run(true));
    assert_eq!(a.amps(), b.amps());
    assert_eq!(a.log_scale(), b.log_scale());
}
