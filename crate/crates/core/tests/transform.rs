use num_complex::Complex64;
use proptest::prelude::*;
use tfloc::fourier::CenteredDft;
use tfloc::modspace::{mixed_norm, MixedNormParams};
use tfloc::signal::{circular_shift, gaussian_window, inner, tf_shift};
use tfloc::stft::{covariance_check, StftEngine};
use tfloc::windows::hermite;
use tfloc::{Grid, PhasePlane, PhasePoint, Signal, WeightSpec};

fn grid() -> Grid {
    Grid::new(12.0, 64).unwrap()
}

/// Random combination of the first six Hermite functions, shifted in time.
fn hermite_mix(coefs: &[(f64, f64)], shift: f64) -> Signal {
    let g = grid();
    let mut f = Signal::zeros(g);
    for (n, &(re, im)) in coefs.iter().enumerate() {
        f = f.axpy(Complex64::new(re, im), &hermite(n, g)).unwrap();
    }
    tf_shift(PhasePoint::new(shift, 0.0), &f).unwrap()
}

fn coefs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 6)
}

fn dilated_gaussian(lambda: f64) -> Signal {
    Signal::from_real_fn(grid(), |t| (-std::f64::consts::PI * t * t / (lambda * lambda)).exp())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn centered_dft_matches_direct_sum(xs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 16)) {
        let g = Grid::new(4.0, 16).unwrap();
        let h: Vec<Complex64> = xs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mut fwd = h.clone();
        let dft = CenteredDft::<f64>::new(16);
        dft.forward(&mut fwd);
        for (n, out) in fwd.iter().enumerate() {
            let direct: Complex64 = h
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * g.omega(n) * g.t(k)))
                .sum();
            prop_assert!((out - direct).norm() < 1e-12);
        }
        dft.inverse(&mut fwd);
        for (a, b) in fwd.iter().zip(&h) {
            prop_assert!((a / 16.0 - b).norm() < 1e-13);
        }
    }

    #[test]
    fn lattice_shifts_are_unitary(c in coefs(), p in -20i64..20, q in -20i64..20) {
        let g = grid();
        let f = hermite_mix(&c, 0.0);
        let z = PhasePoint::new(p as f64 * g.step(), q as f64 * g.freq_step());
        let s = tf_shift(z, &f).unwrap();
        prop_assert!((s.norm() - f.norm()).abs() <= 1e-12 * f.norm());
        let time_only = tf_shift(PhasePoint::new(z.x, 0.0), &f).unwrap();
        let circ = circular_shift(&f, p);
        prop_assert!(time_only.sub(&circ).unwrap().norm() <= 1e-12 * f.norm());
    }

    #[test]
    fn covariance_holds_for_random_signals(c in coefs(), p in -8i64..8, q in -8i64..8) {
        let g = grid();
        let f = hermite_mix(&c, 0.4);
        let phi = gaussian_window(g);
        let y = PhasePoint::new(p as f64 * g.step(), q as f64 * g.freq_step());
        let dev = covariance_check(&f, &phi, y).unwrap();
        prop_assert!(dev <= 1e-9 * f.norm() * phi.norm(), "deviation {dev}");
    }

    #[test]
    fn moyal_and_inversion(c in coefs(), l1 in 0.7..1.4f64, l2 in 0.7..1.4f64) {
        let f = hermite_mix(&c, -0.3);
        let (g, gamma) = (dilated_gaussian(l1), dilated_gaussian(l2));
        let engine = StftEngine::new(grid()).unwrap();
        let v = engine.stft(&f, &g).unwrap();
        let moyal = v.l2_norm();
        prop_assert!((moyal - f.norm() * g.norm()).abs() <= 1e-10 * f.norm() * g.norm());
        let back = engine.adjoint(&v, &gamma).unwrap();
        let scaled = f.scale(inner(&gamma, &g).unwrap());
        prop_assert!(back.sub(&scaled).unwrap().norm() <= 1e-8 * scaled.norm());
    }

    #[test]
    fn adjoint_is_the_adjoint(c in coefs(), seed in 0u64..1000) {
        use rand::{Rng, SeedableRng};
        let g = grid();
        let f = hermite_mix(&c, 0.0);
        let phi = hermite(1, g);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let vals = (0..64 * 64).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let big = PhasePlane::new(g, vals).unwrap();
        let engine = StftEngine::new(g).unwrap();
        let lhs = engine.stft(&f, &phi).unwrap().inner(&big).unwrap();
        let rhs = inner(&f, &engine.adjoint(&big, &phi).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn mixed_norm_is_monotone_in_weight(c in coefs(), s in 0.0..2.0f64) {
        let f = hermite_mix(&c, 0.0);
        let v = StftEngine::new(grid()).unwrap().stft(&f, &gaussian_window(grid())).unwrap();
        let plain = mixed_norm(&v, &MixedNormParams::hilbert(WeightSpec::ConstantOne)).unwrap();
        let weighted = mixed_norm(&v, &MixedNormParams::hilbert(WeightSpec::polynomial(s))).unwrap();
        prop_assert!(weighted >= plain * (1.0 - 1e-14));
        prop_assert!((plain - v.l2_norm()).abs() <= 1e-12 * plain);
    }
}

#[test]
fn hermite_functions_are_orthonormal_to_order_20() {
    let g = Grid::new(24.0, 256).unwrap();
    let hs: Vec<Signal> = (0..=20).map(|n| hermite(n, g)).collect();
    for (i, a) in hs.iter().enumerate() {
        for (j, b) in hs.iter().enumerate() {
            let ip = inner(a, b).unwrap();
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expected).norm() <= 1e-10, "<h{i}, h{j}> = {ip}");
        }
    }
}

#[test]
fn gaussian_stft_at_unit_shift() {
    // step 1/16, so x = 1 is row M/2 + 16
    let g = Grid::new(16.0, 256).unwrap();
    let phi = gaussian_window(g);
    let v = StftEngine::new(g).unwrap().stft(&phi, &phi).unwrap();
    assert_eq!(v.point(144, 128), PhasePoint::new(1.0, 0.0));
    let expected = std::f64::consts::FRAC_1_SQRT_2 * (-std::f64::consts::PI / 2.0).exp();
    assert!((v.get(144, 128).norm() - expected).abs() < 1e-12);
    assert!((expected - 0.146993).abs() < 1e-6);
}

#[test]
fn signal_csv_survives_a_file_round_trip() {
    let f = hermite_mix(&[(0.3, -0.1), (0.0, 0.7), (0.2, 0.2), (0.0, 0.0), (-0.5, 0.0), (0.1, 0.1)], 0.25);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    f.write_csv(std::fs::File::create(&path).unwrap()).unwrap();
    let back = Signal::read_csv(grid(), std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, f);
}
