use evocomm_core::numerics::{ComplexSample, RngStream};
use evocomm_core::phy::*;
use proptest::prelude::*;

#[test]
fn received_power_adds_noise_power() {
    let n = 1_000_000;
    let bits: Vec<Bit> = {
        let mut r = RngStream::new(1, 0);
        (0..n).map(|_| Bit::random(&mut r)).collect()
    };
    let obs = channel_apply(
        &bpsk_modulate(&bits),
        SnrPoint::from_db(10.0),
        &mut RngStream::new(1, 1),
    );
    let py = obs.iter().map(|o| o.y.norm_sqr()).sum::<f64>() / n as f64;
    let ph = obs.iter().map(|o| o.h.norm_sqr()).sum::<f64>() / n as f64;
    assert!((py - 1.1).abs() < 0.01, "E|y|^2 = {py}");
    assert!((ph - 1.0).abs() < 0.01, "E|h|^2 = {ph}");
}

#[test]
fn zf_ber_matches_closed_form_at_10_db() {
    let snr = SnrPoint::from_db(10.0);
    let p = measure_ber(&ZeroForcing, snr, 1_000_000, &mut RngStream::new(2, 0)).unwrap();
    let expect = analytic_rayleigh_bpsk_ber(snr);
    let sigma = BerPoint::binomial_sigma(expect, p.symbols);
    assert!(
        (p.ber - expect).abs() <= 3.0 * sigma,
        "{} vs {expect} (sigma {sigma})",
        p.ber
    );
    assert_eq!(p.symbols, 1_000_000);
    assert_eq!(p.errors as f64 / p.symbols as f64, p.ber);
}

#[test]
fn analytic_ber_limits_and_monotonicity() {
    assert!((analytic_rayleigh_bpsk_ber(SnrPoint::from_linear(1e-12).unwrap()) - 0.5).abs() < 1e-6);
    assert_eq!(analytic_rayleigh_bpsk_ber(SnrPoint::noiseless()), 0.0);
    let grid: Vec<f64> = (-20..=40)
        .map(|d| analytic_rayleigh_bpsk_ber(SnrPoint::from_db(d as f64)))
        .collect();
    assert!(grid.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn dataset_of_paper_size_splits_70_30() {
    let ds = generate_detection_dataset(100_000, SnrPoint::from_db(5.0), &mut RngStream::new(3, 0))
        .unwrap();
    assert_eq!((ds.train_len(), ds.test_len()), (70_000, 30_000));
}

fn nonzero_complex() -> impl Strategy<Value = ComplexSample> {
    (-10.0f64..10.0, -10.0f64..10.0)
        .prop_filter("nonzero", |(a, b)| a.hypot(*b) > 1e-3)
        .prop_map(|(a, b)| ComplexSample::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn zf_decision_is_scale_invariant(
        y in nonzero_complex(),
        h in nonzero_complex(),
        alpha in nonzero_complex(),
    ) {
        // Away from the decision boundary rounding cannot flip the sign.
        let stat = (y * h.conj()).re;
        prop_assume!(stat.abs() > 1e-9 * y.norm() * h.norm());
        let base = FadedObservation { y, h, x: 1.0 };
        let scaled = FadedObservation { y: alpha * y, h: alpha * h, x: 1.0 };
        prop_assert_eq!(zf_detect(&base), zf_detect(&scaled));
    }

    #[test]
    fn noiseless_observations_are_always_detected(seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0);
        let bits: Vec<Bit> = (0..64).map(|_| Bit::random(&mut rng)).collect();
        let obs = channel_apply(&bpsk_modulate(&bits), SnrPoint::noiseless(), &mut rng);
        let got: Vec<Bit> = obs.iter().map(zf_detect).collect();
        prop_assert_eq!(got, bits);
    }
}
