use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tfloc::calculus::{expand, ExpandOptions, Windows};
use tfloc::fredholm::{cutoff_split_check, fredholm_check, operator_pair, preconditioned_solve, FredholmThresholds, Side};
use tfloc::linalg::{spectral_norm, CMatrix};
use tfloc::locop::{apply, compactness_profile, matrix, tail_ratio, weak_form, LocOpSpec};
use tfloc::signal::{gaussian_window, inner, tf_shift};
use tfloc::stft::StftEngine;
use tfloc::symbol::{SymbolExpr, SymbolSpec};
use tfloc::windows::hermite;
use tfloc::{Grid, PhasePlane, PhasePoint, Signal, WeightSpec};

fn dilated(grid: Grid, lambda: f64) -> Signal {
    Signal::from_real_fn(grid, |t| (-std::f64::consts::PI * t * t / (lambda * lambda)).exp())
        .normalized()
        .unwrap()
}

fn random_signal(grid: Grid, seed: u64) -> Signal {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Signal::zeros(grid);
    for n in 0..5 {
        f = f.axpy(Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5), &hermite(n, grid)).unwrap();
    }
    f
}

fn gaussian_symbol() -> impl Strategy<Value = SymbolExpr> {
    (-1.5..1.5f64, -1.5..1.5f64, 0.5..2.5f64, 0.2..3.0f64)
        .prop_map(|(x0, omega0, width, c)| SymbolExpr::Gaussian { x0, omega0, width }.scaled(c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn factored_operators_are_bounded(seed in 0u64..10_000, l1 in 0.7..1.4f64, l2 in 0.7..1.4f64) {
        // V*_{φ₂} T V_{φ₁} with a dense lattice kernel T: ‖·‖ ≤ ‖T‖ ‖φ₁‖ ‖φ₂‖
        let g = Grid::new(6.0, 16).unwrap();
        let (phi1, phi2) = (dilated(g, l1).scale(Complex64::new(1.3, 0.0)), dilated(g, l2));
        let engine = StftEngine::new(g).unwrap();
        let n = 16;
        let mut analysis = CMatrix::zeros(n * n, n);
        for k in 0..n {
            let v = engine.stft(&Signal::unit(g, k), &phi1).unwrap();
            analysis.column_mut(k).copy_from_slice(v.values());
        }
        let mut synthesis = CMatrix::zeros(n, n * n);
        for j in 0..n * n {
            let mut e = vec![Complex64::new(0.0, 0.0); n * n];
            e[j] = Complex64::new(1.0, 0.0);
            let s = engine.adjoint(&PhasePlane::new(g, e).unwrap(), &phi2).unwrap();
            synthesis.column_mut(j).copy_from_slice(s.samples());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = CMatrix::from_fn(n * n, n * n, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        // signal space carries the cell Δ, the lattice the cell Δ/L; both are scalar
        let (dx, cell) = (g.step(), g.step() * g.freq_step());
        let op = &synthesis * &t * &analysis;
        let lhs = spectral_norm(&op);
        let an = spectral_norm(&analysis) * (cell / dx).sqrt();
        let sn = spectral_norm(&synthesis) * (dx / cell).sqrt();
        prop_assert!((an - phi1.norm()).abs() <= 1e-10 * phi1.norm());
        prop_assert!((sn - phi2.norm()).abs() <= 1e-10 * phi2.norm());
        prop_assert!(lhs <= spectral_norm(&t) * phi1.norm() * phi2.norm() * (1.0 + 1e-10));
    }

    #[test]
    fn adjoint_and_weak_form(a in gaussian_symbol(), s1 in 0u64..100, s2 in 0u64..100, l2 in 0.7..1.4f64) {
        let g = Grid::new(8.0, 32).unwrap();
        let op = LocOpSpec::new(a, dilated(g, 1.0), dilated(g, l2)).unwrap();
        let (f, h) = (random_signal(g, s1), random_signal(g, s2 + 1000));
        let af = apply(&op, &f).unwrap();
        let wf = weak_form(&op, &f, &h).unwrap();
        prop_assert!((inner(&af, &h).unwrap() - wf).norm() <= 1e-12 * (1.0 + wf.norm()));
        let ah = apply(&op.adjoint(), &h).unwrap();
        prop_assert!((inner(&f, &ah).unwrap() - wf).norm() <= 1e-12 * (1.0 + wf.norm()));
        let (m, ma) = (matrix(&op).unwrap().entries, matrix(&op.adjoint()).unwrap().entries);
        prop_assert!(spectral_norm(&(&ma - m.adjoint())) <= 1e-12 * spectral_norm(&m));
    }

    #[test]
    fn nonnegative_symbols_give_positive_operators(a in gaussian_symbol(), s in 0u64..100, lambda in 0.7..1.4f64) {
        let g = Grid::new(8.0, 32).unwrap();
        let phi = dilated(g, lambda);
        let op = LocOpSpec::new(a.clone(), phi.clone(), phi.clone()).unwrap();
        let f = random_signal(g, s);
        let q = inner(&apply(&op, &f).unwrap(), &f).unwrap();
        prop_assert!(q.re >= -1e-14 && q.im.abs() <= 1e-12 * (1.0 + q.re));
        let sup = op.symbol_values().unwrap().max_abs();
        let norm = spectral_norm(&matrix(&op).unwrap().entries);
        prop_assert!(norm <= sup * (1.0 + 1e-10));
    }

    #[test]
    fn constant_symbols_have_trivial_residual(re in 0.2..4.0f64, im in -2.0..2.0f64) {
        let g = Grid::new(8.0, 32).unwrap();
        let (phi1, phi2) = (dilated(g, 1.0), dilated(g, 1.3));
        let a: SymbolSpec = SymbolExpr::Constant { re, im }.into();
        let one = WeightSpec::ConstantOne;
        let r = fredholm_check(&a, &one, &one, &one, &one, &phi1, &phi2, Side::Left, &FredholmThresholds::default()).unwrap();
        prop_assert!(r.residual_norm <= 1e-10, "{}", r.residual_norm);
    }

    #[test]
    fn split_identity_for_any_cutoff(r0 in 0.2..2.0f64, width in 0.5..3.0f64) {
        let g = Grid::new(8.0, 32).unwrap();
        let phi = gaussian_window(g).normalized().unwrap();
        let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
        let psi: SymbolSpec = SymbolExpr::Cutoff { r0, width }.into();
        let th = FredholmThresholds { profile_len: 20, tail_index: 10, ..FredholmThresholds::default() };
        let s = cutoff_split_check(&a, &psi, Some(r0), &phi, &phi, &th).unwrap();
        prop_assert!(s.identity_error <= 1e-10, "{}", s.identity_error);
    }

    #[test]
    fn preconditioning_helps_for_shifted_data(x in -2.0..2.0f64, w in -1.0..1.0f64) {
        let g = Grid::new(12.0, 64).unwrap();
        let phi = gaussian_window(g).normalized().unwrap();
        let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
        let data = tf_shift(PhasePoint::new(x, w), &phi).unwrap();
        let s = preconditioned_solve(&a, &phi, &phi, &data, 1e-8).unwrap();
        prop_assert!(s.residual <= 1e-8);
        prop_assert!(s.iterations < s.unpreconditioned.iterations, "{} vs {}", s.iterations, s.unpreconditioned.iterations);
    }
}

#[test]
fn small_box_indicator_has_fast_singular_decay() {
    let g = Grid::new(12.0, 128).unwrap();
    let phi = gaussian_window(g).normalized().unwrap();
    let a = PhasePlane::from_real_fn(g, |z| if z.x.abs() <= 0.5 && z.omega.abs() <= 0.5 { 1.0 } else { 0.0 });
    let op = LocOpSpec::new(SymbolSpec::Sampled(a), phi.clone(), phi).unwrap();
    let prof = compactness_profile(&matrix(&op).unwrap(), 60).unwrap();
    for k in 40..=60 {
        assert!(tail_ratio(&prof, k) < 1e-3, "sigma_{k}/sigma_1 = {}", tail_ratio(&prof, k));
    }
}

#[test]
fn left_residual_is_the_first_order_remainder() {
    // B A − I with B = A_{1/a}^{φ₂',φ₁} is the N = 1 remainder of the product
    let g = Grid::new(12.0, 64).unwrap();
    let (phi1, phi2) = (dilated(g, 1.0), hermite(0, g).scale(Complex64::new(0.0, 2.0)));
    let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
    let one = WeightSpec::ConstantOne;
    let r = fredholm_check(&a, &WeightSpec::polynomial(-1.0), &WeightSpec::polynomial(1.0), &one, &one, &phi1, &phi2, Side::Left, &FredholmThresholds::default()).unwrap();
    let (op, b) = operator_pair(&a, &phi1, &phi2).unwrap();
    let w = Windows::new(
        b.window_analysis.clone(),
        b.window_synthesis.clone(),
        op.window_analysis.clone(),
        op.window_synthesis.clone(),
    )
    .unwrap();
    let opts = ExpandOptions { kernel: false, ..ExpandOptions::default() };
    let e = expand(&b.symbol, &op.symbol, 1, &w, &opts).unwrap();
    let gap = spectral_norm(&(&e.remainder_diff.entries - &r.residual.entries));
    assert!(gap <= 1e-8 * spectral_norm(&r.residual.entries), "gap {gap}");
}

#[test]
fn calibrated_constant_is_stable_under_refinement() {
    let a: SymbolSpec = SymbolExpr::gaussian(1.5).into();
    let b: SymbolSpec = SymbolExpr::japanese(1.0).into();
    let opts = ExpandOptions { kernel: false, ..ExpandOptions::default() };
    let ratio = |points: usize| {
        let g = Grid::new(12.0, points).unwrap();
        let w = Windows::uniform(gaussian_window(g).normalized().unwrap()).unwrap();
        let r = expand(&a, &b, 2, &w, &opts).unwrap();
        r.measured_norm / r.bound_value
    };
    let (coarse, fine) = (ratio(128), ratio(256));
    assert!((fine / coarse - 1.0).abs() <= 0.2, "{coarse} vs {fine}");
}

#[test]
fn symmetric_expansion_matches_its_kernel() {
    let g = Grid::new(8.0, 64).unwrap();
    let (phi, psi) = (dilated(g, 1.0), dilated(g, 1.2));
    let w = Windows::new(phi.clone(), psi.clone(), psi, phi).unwrap();
    let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
    let b: SymbolSpec = SymbolExpr::japanese(-1.0).into();
    for n in [1, 2] {
        let opts = ExpandOptions { symmetric: true, ..ExpandOptions::default() };
        let r = expand(&a, &b, n, &w, &opts).unwrap();
        let err = r.kernel_vs_diff_error.expect("nonzero remainder");
        assert!(err <= 1e-4, "N = {n}: {err}");
        let total = &r.sum_of_terms() + &r.remainder_diff.entries;
        assert!(spectral_norm(&(&total - &r.lhs_matrix.entries)) <= 1e-12 * r.lhs_norm);
    }
}
