use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use usv_auv_core::usbl::{estimate_position, expected_phase, synthesize_measurement, AuvTruth, UsblConfig, UsvState};

proptest! {
    #[test]
    fn noiseless_inversion_recovers_position(
        ux in 0.0..200.0_f64, uy in 0.0..200.0_f64, eta in -5.0..5.0_f64,
        ax in 0.0..200.0_f64, ay in 0.0..200.0_f64, depth in 20.0..200.0_f64,
        freq in 10_000.0..20_000.0_f64,
    ) {
        let usv = UsvState::new(ux, uy, eta);
        let auv = AuvTruth::new(ax, ay, depth);
        let cfg = UsblConfig::default().with_frequency(freq);
        let est = estimate_position(&expected_phase(&usv, &auv, &cfg), depth, &usv, &cfg).unwrap();
        prop_assert!(est.distance(auv.pos) <= 1e-9 * (1.0 + usv.pos.distance(auv.pos)));
    }

    #[test]
    fn measurements_are_seed_deterministic(seed in any::<u64>(), sigma in 0.0..0.1_f64) {
        let usv = UsvState::new(100.0, 100.0, 0.0);
        let auv = AuvTruth::new(60.0, 130.0, 100.0);
        let cfg = UsblConfig::default().with_sigma(sigma);
        let a = synthesize_measurement(&usv, &auv, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        let b = synthesize_measurement(&usv, &auv, &cfg, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(a, b);
    }
}

#[test]
fn error_grows_with_slant_range() {
    let cfg = UsblConfig::default();
    let usv = UsvState::new(0.0, 0.0, 0.0);
    let rmse = |offset: f64| {
        let auv = AuvTruth::new(offset, 0.0, 100.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 4000;
        let sq: f64 = (0..n)
            .map(|_| {
                let m = synthesize_measurement(&usv, &auv, &cfg, &mut rng);
                estimate_position(&m, auv.depth, &usv, &cfg).unwrap().distance(auv.pos).powi(2)
            })
            .sum();
        (sq / n as f64).sqrt()
    };
    let (near, far) = (rmse(0.0), rmse(150.0));
    assert!(far > near, "overhead {near} vs offset {far}");
}
