use proptest::prelude::*;
use skewlab_core::expsum::*;
use skewlab_core::{ExtReal, FrequencyKind, FrequencySequence};

fn seq(values: Vec<f64>) -> FrequencySequence {
    FrequencySequence {
        kind: FrequencyKind::Random { seed: 0 },
        n: values.len(),
        values: values.into_iter().map(ExtReal::from).collect(),
    }
}

fn freq_and_n() -> impl Strategy<Value = (Vec<f64>, usize)> {
    (1usize..=32).prop_flat_map(|n| (prop::collection::vec(0.0f64..2.0, n), Just(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn routes_agree_and_bound_dominates((w, n) in freq_and_n()) {
        let f = seq(w);
        let brute = es_bruteforce(&f, n, 1.0).unwrap().number();
        let square = es_completed_square(&f, n, 1.0).unwrap().number();
        let bound = es_geometric_bound(&f, n, 1.0).unwrap().number();
        prop_assert!((brute - square).abs() <= 1e-9, "brute {} square {}", brute, square);
        prop_assert!(square >= -1e-12);
        prop_assert!(bound >= square - 1e-9);
    }

    #[test]
    fn integer_shift_invariance((w, n) in freq_and_n(), idx in 0usize..32, shift in 1i64..3) {
        let base = seq(w.clone());
        let mut shifted = base.clone();
        let i = idx % n;
        shifted.values[i] = shifted.values[i] + ExtReal::from(shift as f64);
        let a = es_bruteforce(&base, n, 1.0).unwrap().number();
        let b = es_bruteforce(&shifted, n, 1.0).unwrap().number();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn rectangular_routes_agree((w, n) in freq_and_n(), rho in 0.2f64..1.0) {
        let f = seq(w);
        let m = skewlab_core::matrixmodel::rows_for(rho, n);
        prop_assume!(m >= 1);
        let brute = es_bruteforce(&f, n, rho).unwrap().number();
        let square = es_completed_square(&f, n, rho).unwrap().number();
        prop_assert!((brute - square).abs() <= 1e-9);
    }
}

#[test]
fn ialpha_route_equivalence_n32() {
    let kind = FrequencyKind::sqrt2_rotation();
    let f = skewlab_core::make_frequencies(&kind, 32, 32).unwrap();
    let brute = es_bruteforce(&f, 32, 1.0).unwrap().number();
    let square = es_completed_square(&f, 32, 1.0).unwrap().number();
    assert!((brute - square).abs() < 1e-10);
}

#[test]
fn ialpha_fast_path_matches_generic_n256() {
    let kind = FrequencyKind::sqrt2_rotation();
    let f = skewlab_core::make_frequencies(&kind, 256, 256).unwrap();
    let fast = es_completed_square(&f, 256, 1.0).unwrap().number();
    let slow = es_completed_square_generic(&f, 256, 1.0).unwrap().number();
    assert!((fast - slow).abs() < 1e-10);
}

#[test]
fn ialpha_values_decrease() {
    let kind = FrequencyKind::sqrt2_rotation();
    let vals: Vec<f64> = [64, 128, 256, 512]
        .iter()
        .map(|&n| es_for_kind(&kind, n, 1.0, EsMethod::CompletedSquare).unwrap().number())
        .collect();
    assert!(vals.iter().all(|&v| v > 0.0));
    assert!(vals.windows(2).all(|w| w[1] < w[0]), "{vals:?}");
}

#[test]
fn bound_calibration_ialpha_n256() {
    let kind = FrequencyKind::sqrt2_rotation();
    let exact = es_for_kind(&kind, 256, 1.0, EsMethod::CompletedSquare).unwrap().number();
    let bound = es_for_kind(&kind, 256, 1.0, EsMethod::GeometricBound).unwrap().number();
    assert!(bound >= exact);
    println!("ialpha N=256: bound/exact = {}", bound / exact);
}

#[test]
fn random_bound_domination_n32() {
    for seed in 0..10 {
        let f = skewlab_core::make_frequencies(&FrequencyKind::Random { seed }, 32, 32).unwrap();
        let exact = es_completed_square(&f, 32, 1.0).unwrap().number();
        let bound = es_geometric_bound(&f, 32, 1.0).unwrap().number();
        assert!(bound >= exact - 1e-9);
    }
}

#[test]
fn constant_slope_is_flat() {
    let kind = FrequencyKind::Constant { c: ExtReal::ZERO };
    let fit = fit_decay_kind(&kind, &[64, 128, 256, 512], 1.0, EsMethod::CompletedSquare).unwrap();
    assert!(fit.slope.abs() < 0.05, "{}", fit.slope);
}

#[test]
fn monte_carlo_mean_tracks_exact_mean() {
    let est = random_freq_mean(16, 1.0, 60, 9).unwrap();
    let exact = random_freq_mean_exact(16, 16);
    assert!((est.mean - exact).abs() <= 4.0 * est.stderr, "{est:?} vs {exact}");
}
