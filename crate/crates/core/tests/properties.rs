use proptest::prelude::*;
use zs_core::oracle::exact_eigenvalues;
use zs_core::{
    chirped_sech, exact_ab, propagate, q_matrix, ChirpedSechParams, Dispersion, ExperimentReport, Row,
    SchemeId, C64,
};

fn dispersion() -> impl Strategy<Value = Dispersion> {
    prop_oneof![Just(Dispersion::Anomalous), Just(Dispersion::Normal)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_matrix_is_skew_hermitian(re in -10.0f64..10.0, im in -10.0f64..10.0, xi in -50.0f64..50.0) {
        let q = q_matrix(C64::new(re, im), C64::new(xi, 0.0), 1.0);
        prop_assert_eq!((q + q.adjoint()).norm(), 0.0);
    }

    #[test]
    fn chirped_secant_is_even(a in 0.0f64..8.0, chirp in -6.0f64..6.0, log_m in 4u32..10) {
        let m = 1usize << log_m;
        let s = chirped_sech(ChirpedSechParams::new(a, chirp), 30.0, m, Dispersion::Anomalous).unwrap();
        let samples = s.samples();
        for n in 0..=m {
            let (l, r) = (samples[n], samples[2 * m - n]);
            prop_assert!((l - r).norm() <= 1e-15 * l.norm().max(f64::MIN_POSITIVE));
        }
        prop_assert!(samples[2 * m].norm() < 1e-12 * a.max(1.0));
    }

    #[test]
    fn closed_form_unit_invariant(a in 0.0f64..6.0, chirp in -5.0f64..5.0, xi in -20.0f64..20.0, disp in dispersion()) {
        let s = exact_ab(C64::new(xi, 0.0), ChirpedSechParams::new(a, chirp), disp).unwrap();
        let a2 = s.a.norm_sqr();
        let h = a2 + disp.sign() * s.b.norm_sqr() - 1.0;
        prop_assert!(h.abs() <= 1e-10 * a2.max(1.0), "H - 1 = {h:e}, |a|^2 = {a2:e}");
    }

    #[test]
    fn closed_form_a_vanishes_at_eigenvalues(a in 0.5f64..8.0, chirp in -5.0f64..5.0) {
        let params = ChirpedSechParams::new(a, chirp);
        for zeta in exact_eigenvalues(params) {
            prop_assert!(exact_ab(zeta, params, Dispersion::Anomalous).unwrap().a.norm() < 1e-9);
        }
    }

    #[test]
    fn conservative_schemes_keep_the_invariant(
        a in 0.0f64..3.0,
        chirp in -3.0f64..3.0,
        xi in -20.0f64..20.0,
        disp in dispersion(),
        pick in 0usize..4,
    ) {
        let scheme = [SchemeId::Bo, SchemeId::Es4, SchemeId::Tes4, SchemeId::Ct4][pick];
        let signal = chirped_sech(ChirpedSechParams::new(a, chirp), 30.0, 512, disp).unwrap();
        let r = propagate(&signal, C64::new(xi, 0.0), scheme, false).unwrap();
        let a2 = r.a.norm_sqr();
        prop_assert!((r.invariant(disp.sign()) - 1.0).abs() <= 1e-10 * a2.max(1.0));
    }

    #[test]
    fn report_csv_round_trip(values in proptest::collection::vec((-1e300f64..1e300, 1usize..1 << 20), 1..40)) {
        let mut report = ExperimentReport::new("xi");
        for (i, (v, m)) in values.iter().enumerate() {
            report.push(Row::new("ES4", Some(*m), Some(i as f64 * 0.1 - 3.0), "order", *v));
        }
        let mut buf = Vec::new();
        report.write_csv(&mut buf).unwrap();
        let back = ExperimentReport::read_csv(buf.as_slice()).unwrap();
        prop_assert!(back.numerically_identical(&report));
        let mut json = Vec::new();
        report.write_json(&mut json).unwrap();
        prop_assert!(ExperimentReport::read_json(json.as_slice()).unwrap().numerically_identical(&report));
    }
}
