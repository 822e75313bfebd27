//! Single-qubit plans, the controlled-G construction and {H, T} search.

mod common;

use common::*;
use nqc::synthesis::{
    approximate_unitary_ht, band_function, build_cg_from_primitives, execute_plan,
    norm_match_point, plan_ops, plan_single_qubit, two_qubit_composite, word_matrix, Case,
};
use nqc::{gates, GateOp, Mat4, ScaledState};
use proptest::prelude::*;

fn arb_qubit() -> impl Strategy<Value = [nqc::Complex64; 2]> {
    (
        (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0),
        -3.0f64..3.0,
    )
        .prop_filter("nonzero", |((a, b, c_, d), _)| {
            a.abs() + b.abs() + c_.abs() + d.abs() > 1e-2
        })
        .prop_map(|((a, b, x, y), log_len)| {
            let n = (a * a + b * b + x * x + y * y).sqrt();
            let s = log_len.exp() / n;
            [c(a * s, b * s), c(x * s, y * s)]
        })
}

fn dist(a: &[nqc::Complex64; 2], b: &[nqc::Complex64; 2]) -> f64 {
    ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr()).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn plans_reach_the_target(init in arb_qubit(), fin in arb_qubit(), g in 1.2f64..4.0) {
        let plan = plan_single_qubit(&init, &fin, g).unwrap();
        let got = execute_plan(&plan, &init);
        let scale = 1.0 + fin.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(dist(&got, &fin) < 1e-12 * scale * 10.0, "{:?}", plan.case);

        let a = (init[0].norm_sqr() + init[1].norm_sqr()).sqrt();
        let b = (fin[0].norm_sqr() + fin[1].norm_sqr()).sqrt();
        let ratio = b / a;
        match plan.case {
            Case::Grow => prop_assert_eq!(plan.r, (ratio.ln() / g.ln()).floor() as u64),
            Case::Shrink => prop_assert_eq!(plan.r, (-ratio.ln() / g.ln()).floor() as u64),
            Case::WithinBand => prop_assert_eq!(plan.r, 0),
        }
        for m in [plan.pre_rotation, plan.mid_rotation, plan.post_rotation] {
            prop_assert!(m.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn norm_match_lies_on_both_surfaces(a in 0.1f64..10.0, t in 0.0f64..1.0, g in 1.1f64..5.0) {
        // pick B inside the band
        let b = a / g * (g * g).powf(t);
        let (c1, c2) = norm_match_point(a, b, g).unwrap();
        prop_assert!((c1 * c1 + c2 * c2 - a * a).abs() < 1e-12 * a * a);
        prop_assert!((band_function(c1, c2, g) - b).abs() < 1e-12 * b.max(1.0));
    }

    #[test]
    fn plan_as_gates_matches_execution(init in arb_qubit(), fin in arb_qubit(), g in 1.5f64..3.0) {
        let plan = plan_single_qubit(&init, &fin, g).unwrap();
        let mut s = ScaledState::from_amplitudes(init.to_vec(), 0.0).unwrap();
        for op in plan_ops(&plan, 0) {
            gates::apply(&mut s, &op).unwrap();
        }
        let got = s.true_amplitudes();
        let want = execute_plan(&plan, &init);
        let scale = 1.0 + want.iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(max_diff(&got, &want) < 1e-11 * scale);
    }

    #[test]
    fn cg_construction(g in 1.1f64..4.0) {
        let ops: Vec<GateOp> = build_cg_from_primitives(g).unwrap().gates().copied().collect();
        let m = two_qubit_composite(&ops, 0, 1).unwrap();
        let want = Mat4::diag([c(1.0, 0.0), c(1.0, 0.0), c(g * g, 0.0), c(1.0 / (g * g), 0.0)]);
        prop_assert!(m.max_abs_diff(&want) < 1e-12);
    }
}

#[test]
fn every_case_is_reachable() {
    let one = [c(1.0, 0.0), c(0.0, 0.0)];
    let cases: Vec<Case> = [10.0, 1.0, 0.1]
        .iter()
        .map(|&b| {
            plan_single_qubit(&one, &[c(0.0, 0.0), c(0.0, b)], 2.0)
                .unwrap()
                .case
        })
        .collect();
    assert_eq!(cases, vec![Case::Grow, Case::WithinBand, Case::Shrink]);
}

#[test]
fn ht_search_finds_exact_words() {
    for word in ["H", "TH", "HTH", "THTTH"] {
        let target = word_matrix(word);
        let found = approximate_unitary_ht(&target, 6).unwrap();
        assert!(found.error < 1e-12, "{word}: {found:?}");
        assert!(found.word.len() <= word.len());
    }
}

#[test]
fn ht_search_error_shrinks_with_depth() {
    // a rotation outside the finite group generated at low depth
    let th = 0.3f64;
    let target = nqc::Mat2::real(th.cos(), -th.sin(), th.sin(), th.cos());
    let shallow = approximate_unitary_ht(&target, 4).unwrap();
    let deep = approximate_unitary_ht(&target, 14).unwrap();
    assert!(deep.error <= shallow.error);
    assert!(deep.error > 0.0);
    let w = word_matrix(&deep.word);
    assert!((target.phase_distance(&w) - deep.error).abs() < 1e-12);
}
