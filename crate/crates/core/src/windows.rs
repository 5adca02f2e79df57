//! Hermite functions, the operators `X^β ∂^α` on sampled windows, and the
//! polynomial-times-Gaussian structure of `V_{φ₀}(X^β ∂^α φ₀)`.
//!
//! Hermite functions are `L²`-normalized with `h₀(t) = 2^{1/4} e^{-πt²}`;
//! the Gaussian `φ₀ = e^{-πt²}` from [`gaussian_window`] is not normalized.

use nalgebra::{DMatrix, DVector};
use num_complex::{Complex, Complex64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::CenteredDft;
use crate::scalar::{cis, Real};
use crate::signal::{gaussian_window, tf_shift, Grid, PhasePoint, SampledSignal};

/// Highest derivative order accepted by the spectral differentiator.
pub const DERIVATIVE_CAP: usize = 8;

/// `h_n` on `grid`, by the three-term recurrence
/// `h_{n+1} = √(2/(n+1)) √(2π) t h_n − √(n/(n+1)) h_{n−1}`.
pub fn hermite<T: Real>(n: usize, grid: Grid<T>) -> SampledSignal<T> {
    let times = grid.times();
    let c = T::two_pi().sqrt();
    let mut prev = vec![T::zero(); times.len()];
    let mut cur: Vec<T> = times
        .iter()
        .map(|&t| T::lit(2f64.powf(0.25)) * (-T::PI() * t * t).exp())
        .collect();
    for k in 0..n {
        let kk = T::count(k);
        let a = (T::lit(2.0) / (kk + T::one())).sqrt();
        let b = (kk / (kk + T::one())).sqrt();
        let next: Vec<T> = times
            .iter()
            .zip(cur.iter().zip(&prev))
            .map(|(&t, (&h, &hp))| a * c * t * h - b * hp)
            .collect();
        prev = cur;
        cur = next;
    }
    let samples = cur.into_iter().map(|h| Complex::new(h, T::zero())).collect();
    SampledSignal::new(grid, samples).expect("recurrence values are finite")
}

/// `∂^α f` by multiplying the centered spectrum with `(2πiω)^α`.
pub fn spectral_derivative<T: Real>(f: &SampledSignal<T>, alpha: usize) -> Result<SampledSignal<T>> {
    if alpha > DERIVATIVE_CAP {
        return Err(Error::OrderCap { order: alpha, cap: DERIVATIVE_CAP });
    }
    f.grid().require_1d()?;
    if alpha == 0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let m = grid.points();
    let dft = CenteredDft::new(m);
    let mut buf = f.samples().to_vec();
    dft.forward(&mut buf);
    let inv_m = T::count(m).recip();
    for (n, v) in buf.iter_mut().enumerate() {
        let iw = Complex::new(T::zero(), T::two_pi() * grid.omega(n));
        *v = *v * iw.powi(alpha as i32) * inv_m;
    }
    dft.inverse(&mut buf);
    SampledSignal::new(grid, buf)
}

/// `X^β f`, pointwise multiplication by `t^β`.
pub fn multiply_t_pow<T: Real>(f: &SampledSignal<T>, beta: usize) -> SampledSignal<T> {
    if beta == 0 {
        return f.clone();
    }
    let grid = *f.grid();
    let samples = f
        .samples()
        .iter()
        .enumerate()
        .map(|(k, &v)| v * grid.t(k).powi(beta as i32))
        .collect();
    SampledSignal::new(grid, samples).expect("polynomial multiple of finite samples")
}

/// `X^β ∂^α f`: differentiate first, then multiply.
pub fn apply_x_beta_partial_alpha<T: Real>(f: &SampledSignal<T>, beta: usize, alpha: usize) -> Result<SampledSignal<T>> {
    Ok(multiply_t_pow(&spectral_derivative(f, alpha)?, beta))
}

/// `∂^α X^β f`: multiply first, then differentiate.
pub fn apply_partial_alpha_x_beta<T: Real>(f: &SampledSignal<T>, alpha: usize, beta: usize) -> Result<SampledSignal<T>> {
    spectral_derivative(&multiply_t_pow(f, beta), alpha)
}

pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Right-hand side of
/// `∂^α X^β π(z) h = Σ_{δ≤α} Σ_{γ≤β} C(α,δ) C(β,γ) (2πiω)^{α−δ} x^{β−γ} π(z) ∂^δ X^γ h`.
pub fn commutation_rhs<T: Real>(h: &SampledSignal<T>, z: PhasePoint<T>, alpha: usize, beta: usize) -> Result<SampledSignal<T>> {
    let grid = *h.grid();
    let mut acc = SampledSignal::zeros(grid);
    let two_pi_i_w = Complex::new(T::zero(), T::two_pi() * z.omega);
    for delta in 0..=alpha {
        for gamma in 0..=beta {
            let c = T::lit(binomial(alpha, delta) * binomial(beta, gamma));
            let coef = two_pi_i_w.powi((alpha - delta) as i32) * z.x.powi((beta - gamma) as i32) * c;
            let term = tf_shift(z, &apply_partial_alpha_x_beta(h, delta, gamma)?)?;
            acc = acc.axpy(coef, &term)?;
        }
    }
    Ok(acc)
}

/// `V_g f(z)` at a single, not necessarily lattice, phase point.
pub fn stft_at<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>, z: PhasePoint<T>) -> Result<Complex<T>> {
    let shifted = tf_shift(z, g)?;
    crate::signal::inner(f, &shifted)
}

/// Two evaluations of `|V_{φ₀}(X^β ∂^α φ₀)(z)|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaguerreCheck {
    pub direct: f64,
    /// `|P(z)| e^{-π|z|²/2}` with `P` the least-squares polynomial fit.
    pub structural: f64,
    pub degree: usize,
    /// Relative residual of the fit over the fitting disc.
    pub fit_residual: f64,
}

/// Grid used for phase-point evaluations of Gaussian moments.
pub fn moment_grid() -> Grid<f64> {
    Grid::new(16.0, 256).expect("fixed grid is valid")
}

pub fn gaussian_moment_stft_modulus(beta: usize, alpha: usize, z: PhasePoint<f64>) -> Result<LaguerreCheck> {
    gaussian_moment_stft_modulus_on(moment_grid(), beta, alpha, z)
}

/// As [`gaussian_moment_stft_modulus`] on an explicit 1-D grid.
pub fn gaussian_moment_stft_modulus_on(grid: Grid<f64>, beta: usize, alpha: usize, z: PhasePoint<f64>) -> Result<LaguerreCheck> {
    if grid.dim() != 1 {
        return Err(Error::DimensionNotImplemented(grid.dim()));
    }
    let phi0 = gaussian_window(grid);
    let f = apply_x_beta_partial_alpha(&phi0, beta, alpha)?;
    let direct = stft_at(&f, &phi0, z)?.norm();

    // V(x,ω) e^{πixω} e^{π|z|²/2} is a polynomial of degree ≤ α+β; fit on a disc
    // where the Gaussian factor is well above round-off.
    let degree = alpha + beta;
    let monomials: Vec<(i32, i32)> = (0..=degree as i32)
        .flat_map(|i| (0..=(degree as i32 - i)).map(move |j| (i, j)))
        .collect();
    let pi = std::f64::consts::PI;
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    let radius = 2.0;
    let nodes = 13;
    for i in 0..nodes {
        for j in 0..nodes {
            let x = -radius + 2.0 * radius * i as f64 / (nodes - 1) as f64;
            let w = -radius + 2.0 * radius * j as f64 / (nodes - 1) as f64;
            if x * x + w * w > radius * radius {
                continue;
            }
            let v = stft_at(&f, &phi0, PhasePoint::new(x, w))?;
            let scaled = v * cis(pi * x * w) * (pi * (x * x + w * w) / 2.0).exp();
            rows.push(monomials.iter().map(|&(a, b)| Complex64::new(x.powi(a) * w.powi(b), 0.0)).collect::<Vec<_>>());
            rhs.push(scaled);
        }
    }
    let a = DMatrix::from_fn(rows.len(), monomials.len(), |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);
    let svd = a.clone().svd(true, true);
    let coef = svd
        .solve(&b, 1e-13)
        .map_err(|e| Error::LinAlg(e.to_string()))?;
    let resid = (&a * &coef - &b).norm() / b.norm().max(f64::MIN_POSITIVE);
    let p: Complex64 = monomials
        .iter()
        .zip(coef.iter())
        .map(|(&(i, j), c)| c * z.x.powi(i) * z.omega.powi(j))
        .sum();
    let structural = p.norm() * (-pi * (z.x * z.x + z.omega * z.omega) / 2.0).exp();
    Ok(LaguerreCheck { direct, structural, degree, fit_residual: if b.norm() == 0.0 { 0.0 } else { resid } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::inner;

    fn grid() -> Grid<f64> {
        Grid::new(12.0, 128).unwrap()
    }

    #[test]
    fn hermite_orthonormal() {
        let g = grid();
        let hs: Vec<_> = (0..=20).map(|n| hermite(n, g)).collect();
        for m in 0..=20 {
            for n in 0..=20 {
                let ip = inner(&hs[m], &hs[n]).unwrap();
                let want = if m == n { 1.0 } else { 0.0 };
                assert!((ip - want).norm() < 1e-10, "⟨h{m},h{n}⟩ = {ip}");
            }
        }
        assert_eq!(hs[1].samples()[64].re, 0.0);
    }

    #[test]
    fn derivative_of_gaussian() {
        let g = grid();
        let d = apply_x_beta_partial_alpha(&gaussian_window(g), 0, 1).unwrap();
        let pi = std::f64::consts::PI;
        for (k, v) in d.samples().iter().enumerate() {
            let t = g.t(k);
            assert!((v - Complex64::new(-2.0 * pi * t * (-pi * t * t).exp(), 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn multiplication_is_pointwise() {
        let g = grid();
        let phi = gaussian_window(g);
        let y = apply_x_beta_partial_alpha(&phi, 2, 0).unwrap();
        for (k, v) in y.samples().iter().enumerate() {
            let t = g.t(k);
            assert_eq!(v.re, t * t * phi.samples()[k].re);
        }
        assert_eq!(apply_x_beta_partial_alpha(&phi, 0, 0).unwrap(), phi);
        assert!(matches!(spectral_derivative(&phi, 9), Err(Error::OrderCap { .. })));
    }

    #[test]
    fn commutation_low_orders() {
        let g = grid();
        let h = hermite(1, g);
        let z = PhasePoint::new(8.0 * g.step(), 3.0 / g.width());
        for alpha in 0..=2 {
            for beta in 0..=2 {
                let lhs = apply_partial_alpha_x_beta(&tf_shift(z, &h).unwrap(), alpha, beta).unwrap();
                let rhs = commutation_rhs(&h, z, alpha, beta).unwrap();
                assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-8 * lhs.norm(), "α={alpha} β={beta}: {} vs {}", lhs.sub(&rhs).unwrap().norm(), lhs.norm());
            }
        }
    }

    #[test]
    fn laguerre_basic_values() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let r = gaussian_moment_stft_modulus(0, 0, PhasePoint::new(0.0, 0.0)).unwrap();
        assert!((r.direct - s).abs() < 1e-12 && (r.structural - s).abs() < 1e-10);
        let r = gaussian_moment_stft_modulus(0, 0, PhasePoint::new(1.0, 0.0)).unwrap();
        let want = s * (-std::f64::consts::PI / 2.0).exp();
        assert!((r.direct - want).abs() < 1e-12 && (r.structural - want).abs() < 1e-10);
        let r = gaussian_moment_stft_modulus(1, 0, PhasePoint::new(0.0, 0.0)).unwrap();
        assert!(r.direct < 1e-14 && r.structural < 1e-10);
    }

    #[test]
    fn laguerre_fit_is_exact_polynomial() {
        for (beta, alpha) in [(1, 1), (2, 0), (0, 3), (2, 2)] {
            let z = PhasePoint::new(0.7, -1.1);
            let r = gaussian_moment_stft_modulus(beta, alpha, z).unwrap();
            assert!(r.fit_residual < 1e-9, "β={beta} α={alpha}: {}", r.fit_residual);
            assert!((r.direct - r.structural).abs() <= 1e-8 * r.direct.max(1e-3));
        }
    }
}
