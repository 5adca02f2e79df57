//! Sampled functions on a symmetric periodic grid and time-frequency shifts.
//!
//! All signals are treated as `L`-periodic: a grid of `M` points covers
//! `[-L/2, L/2)` with step `Δ = L/M`, and its dual frequency grid has step
//! `1/L`, also with `M` points centered at zero.

use std::io::{Read, Write};

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::CenteredDft;
use crate::scalar::{cis, is_finite_c, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Grid<T: Real> {
    width: T,
    points: usize,
    dim: usize,
}

impl<T: Real> Grid<T> {
    /// One-dimensional grid of `points` samples over a period of length `width`.
    pub fn new(width: T, points: usize) -> Result<Self> {
        Self::with_dim(width, points, 1)
    }

    pub fn with_dim(width: T, points: usize, dim: usize) -> Result<Self> {
        if !(width.is_finite() && width > T::zero()) {
            return Err(Error::InvalidGrid(format!("width must be positive, got {width}")));
        }
        if points < 4 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "point count must be a power of two >= 4, got {points}"
            )));
        }
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be positive".into()));
        }
        Ok(Self { width, points, dim })
    }

    pub fn width(&self) -> T {
        self.width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn step(&self) -> T {
        self.width / T::count(self.points)
    }

    pub fn freq_step(&self) -> T {
        T::one() / self.width
    }

    /// Sample location `t_k = -L/2 + kΔ`.
    pub fn t(&self, k: usize) -> T {
        (T::count(k) - T::count(self.points / 2)) * self.step()
    }

    /// Dual-grid frequency `ω_n = (n - M/2)/L`.
    pub fn omega(&self, n: usize) -> T {
        (T::count(n) - T::count(self.points / 2)) / self.width
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.points).map(|k| self.t(k)).collect()
    }

    pub fn frequencies(&self) -> Vec<T> {
        (0..self.points).map(|n| self.omega(n)).collect()
    }

    /// Errors unless `d = 1`.
    pub fn require_1d(&self) -> Result<()> {
        if self.dim == 1 {
            Ok(())
        } else {
            Err(Error::DimensionNotImplemented(self.dim))
        }
    }

    pub fn ensure_same(&self, other: &Self) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "(L = {}, M = {}) vs (L = {}, M = {})",
                self.width, self.points, other.width, other.points
            )))
        }
    }

    /// Integer `p` with `x = pΔ`, when `x` is a grid multiple.
    pub fn lattice_offset(&self, x: T) -> Option<i64> {
        let p = x / self.step();
        let r = p.round();
        if Float::abs(p - r) <= T::lit(1e-9) * (T::one() + Float::abs(p)) {
            r.to_i64()
        } else {
            None
        }
    }

    /// Integer `q` with `ω = q/L`, when `ω` lies on the dual grid.
    pub fn dual_offset(&self, omega: T) -> Option<i64> {
        let q = omega * self.width;
        let r = q.round();
        if Float::abs(q - r) <= T::lit(1e-9) * (T::one() + Float::abs(q)) {
            r.to_i64()
        } else {
            None
        }
    }
}


/// A point `z = (x, ω)` of the phase plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PhasePoint<T: Real> {
    pub x: T,
    pub omega: T,
}

impl<T: Real> PhasePoint<T> {
    pub fn new(x: T, omega: T) -> Self {
        Self { x, omega }
    }

    pub fn origin() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn norm(&self) -> T {
        self.x.hypot(self.omega)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.omega.is_finite()
    }
}

impl<T: Real> std::ops::Add for PhasePoint<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.omega + rhs.omega)
    }
}

impl<T: Real> std::ops::Sub for PhasePoint<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.omega - rhs.omega)
    }
}

impl<T: Real> std::ops::Neg for PhasePoint<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.omega)
    }
}

impl<T: Real> std::ops::Mul<T> for PhasePoint<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.omega * s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SampledSignal<T: Real> {
    grid: Grid<T>,
    samples: Vec<Complex<T>>,
}

impl<T: Real> SampledSignal<T> {
    pub fn new(grid: Grid<T>, samples: Vec<Complex<T>>) -> Result<Self> {
        let expected = grid.points().pow(grid.dim() as u32);
        if samples.len() != expected {
            return Err(Error::GridMismatch(format!(
                "expected {expected} samples, got {}",
                samples.len()
            )));
        }
        if let Some(k) = samples.iter().position(|z| !is_finite_c(*z)) {
            return Err(Error::NonFinite(format!("sample {k}")));
        }
        Ok(Self { grid, samples })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        let n = grid.points().pow(grid.dim() as u32);
        Self { grid, samples: vec![Complex::new(T::zero(), T::zero()); n] }
    }

    /// Samples `f(t_k)`; one-dimensional grids only.
    pub fn from_fn(grid: Grid<T>, f: impl Fn(T) -> Complex<T>) -> Self {
        let samples = grid.times().into_iter().map(f).collect();
        Self { grid, samples }
    }

    pub fn from_real_fn(grid: Grid<T>, f: impl Fn(T) -> T) -> Self {
        Self::from_fn(grid, |t| Complex::new(f(t), T::zero()))
    }

    /// The `k`-th sample-basis vector.
    pub fn unit(grid: Grid<T>, k: usize) -> Self {
        let mut s = Self::zeros(grid);
        s.samples[k] = Complex::new(T::one(), T::zero());
        s
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn samples(&self) -> &[Complex<T>] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<Complex<T>> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `‖f‖₂ = Δ^{d/2} ‖samples‖_{ℓ²}`.
    pub fn norm(&self) -> T {
        let s: T = self.samples.iter().map(|z| z.norm_sqr()).sum();
        (s * self.grid.step().powi(self.grid.dim() as i32)).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == T::zero() && z.im == T::zero())
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        self.map(|z| z * c)
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { grid: self.grid, samples: self.samples.iter().map(|&z| f(z)).collect() }
    }

    /// Rescaled to unit `L²` norm.
    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() {
            return Err(Error::ZeroWindow);
        }
        Ok(self.scale(Complex::new(n.recip(), T::zero())))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, samples })
    }

    /// `self + c·other`.
    pub fn axpy(&self, c: Complex<T>, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let samples = self.samples.iter().zip(&other.samples).map(|(a, b)| a + b * c).collect();
        Ok(Self { grid: self.grid, samples })
    }

    pub fn max_abs(&self) -> T {
        self.samples.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Largest modulus among the two boundary samples; the periodization of a
    /// window is clean when this is below `1e-14`.
    pub fn edge_magnitude(&self) -> T {
        let m = self.samples.len();
        self.samples[0].norm().max(self.samples[m - 1].norm())
    }

    /// Writes `t, re, im` rows with one header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        self.grid.require_1d()?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "re", "im"])?;
        for (k, z) in self.samples.iter().enumerate() {
            w.write_record(&[
                format!("{:.17e}", self.grid.t(k)),
                format!("{:.17e}", z.re),
                format!("{:.17e}", z.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `t, re, im` format against a known grid; the `t` column must
    /// match the grid's sample locations.
    pub fn read_csv<R: Read>(grid: Grid<T>, reader: R) -> Result<Self> {
        grid.require_1d()?;
        let mut r = csv::Reader::from_reader(reader);
        let mut samples = Vec::with_capacity(grid.points());
        for (k, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<T> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::Precondition(format!("row {}: bad column {i}", k + 1)))
            };
            let t = field(0)?;
            if k >= grid.points()
                || Float::abs(t - grid.t(k)) > T::lit(1e-9) * (T::one() + grid.width())
            {
                return Err(Error::GridMismatch(format!("row {}: t = {t} is off-grid", k + 1)));
            }
            samples.push(Complex::new(field(1)?, field(2)?));
        }
        Self::new(grid, samples)
    }
}

/// The unnormalized Gaussian `φ₀(t) = e^{-πt²}`.
pub fn gaussian_window<T: Real>(grid: Grid<T>) -> SampledSignal<T> {
    SampledSignal::from_real_fn(grid, |t| (-T::PI() * t * t).exp())
}

/// `⟨f, g⟩ ≈ Δ^d Σ f_k conj(g_k)`.
pub fn inner<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>) -> Result<Complex<T>> {
    f.grid.ensure_same(&g.grid)?;
    let s: Complex<T> = f
        .samples
        .iter()
        .zip(&g.samples)
        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj());
    Ok(s * f.grid.step().powi(f.grid.dim() as i32))
}

/// Circular translation by `p` grid steps: `(T f)_k = f_{k-p}`.
pub fn circular_shift<T: Real>(f: &SampledSignal<T>, p: i64) -> SampledSignal<T> {
    let m = f.len() as i64;
    let samples = (0..m).map(|k| f.samples[(k - p).rem_euclid(m) as usize]).collect();
    SampledSignal { grid: f.grid, samples }
}

/// `T_x f`. Grid multiples shift circularly; other offsets apply the FFT
/// phase ramp, i.e. exact translation of the periodic band-limited interpolant.
pub fn translate<T: Real>(f: &SampledSignal<T>, x: T) -> Result<SampledSignal<T>> {
    f.grid.require_1d()?;
    if let Some(p) = f.grid.lattice_offset(x) {
        return Ok(circular_shift(f, p));
    }
    let grid = f.grid;
    let m = grid.points();
    let dft = CenteredDft::new(m);
    let mut buf = f.samples.clone();
    dft.forward(&mut buf);
    for (n, v) in buf.iter_mut().enumerate() {
        *v = *v * cis(-T::two_pi() * grid.omega(n) * x);
    }
    dft.inverse(&mut buf);
    let inv_m = T::count(m).recip();
    for v in buf.iter_mut() {
        *v = *v * inv_m;
    }
    Ok(SampledSignal { grid, samples: buf })
}

/// `M_ω f (t) = e^{2πiωt} f(t)`.
pub fn modulate<T: Real>(f: &SampledSignal<T>, omega: T) -> SampledSignal<T> {
    let grid = f.grid;
    let samples = f
        .samples
        .iter()
        .enumerate()
        .map(|(k, &v)| v * cis(T::two_pi() * omega * grid.t(k)))
        .collect();
    SampledSignal { grid, samples }
}

/// `π(z) f = M_ω T_x f`.
pub fn tf_shift<T: Real>(z: PhasePoint<T>, f: &SampledSignal<T>) -> Result<SampledSignal<T>> {
    if !z.is_finite() {
        return Err(Error::NonFinite("phase point".into()));
    }
    Ok(modulate(&translate(f, z.x)?, z.omega))
}
