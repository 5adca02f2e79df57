//! Discrete short-time Fourier transform on the (signal grid) × (dual grid)
//! lattice, its adjoint, and the covariance diagnostic.
//!
//! The lattice point `(m, n)` is `z = (x_m, ω_n)` with `x_m = t_m` and
//! `ω_n = (n - M/2)/L`; the cell area is `Δ/L`. Lattice arithmetic is
//! circular in both coordinates.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fourier::CenteredDft;
use crate::scalar::{is_finite_c, Real};
use crate::signal::{tf_shift, Grid, PhasePoint, SampledSignal};

/// Values on the `M × M` phase-plane lattice, stored x-major: index `m·M + n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct PhasePlaneArray<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
}

impl<T: Real> PhasePlaneArray<T> {
    pub fn new(grid: Grid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        grid.require_1d()?;
        let m = grid.points();
        if values.len() != m * m {
            return Err(Error::GridMismatch(format!(
                "expected {} lattice values, got {}",
                m * m,
                values.len()
            )));
        }
        if values.iter().any(|v| !is_finite_c(*v)) {
            return Err(Error::NonFinite("phase-plane entry".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid<T>) -> Self {
        let m = grid.points();
        Self { grid, values: vec![Complex::new(T::zero(), T::zero()); m * m] }
    }

    pub fn from_fn(grid: Grid<T>, f: impl Fn(PhasePoint<T>) -> Complex<T>) -> Self {
        let m = grid.points();
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                values.push(f(PhasePoint::new(grid.t(i), grid.omega(j))));
            }
        }
        Self { grid, values }
    }

    pub fn from_real_fn(grid: Grid<T>, f: impl Fn(PhasePoint<T>) -> T) -> Self {
        Self::from_fn(grid, |z| Complex::new(f(z), T::zero()))
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// Time lattice (identical to the signal grid).
    pub fn x_grid(&self) -> Grid<T> {
        self.grid
    }

    /// Frequency lattice: `M` points with step `1/L`, i.e. period `M/L`.
    pub fn omega_grid(&self) -> Grid<T> {
        let m = self.grid.points();
        Grid::new(T::count(m) / self.grid.width(), m)
            .expect("dual grid of a valid grid is valid")
    }

    pub fn side(&self) -> usize {
        self.grid.points()
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.values
    }

    pub fn get(&self, m: usize, n: usize) -> Complex<T> {
        self.values[m * self.side() + n]
    }

    pub fn point(&self, m: usize, n: usize) -> PhasePoint<T> {
        PhasePoint::new(self.grid.t(m), self.grid.omega(n))
    }

    /// Lattice index of the origin.
    pub fn origin_index(&self) -> (usize, usize) {
        (self.side() / 2, self.side() / 2)
    }

    pub fn cell_area(&self) -> T {
        self.grid.step() / self.grid.width()
    }

    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise `f(z, value)`.
    pub fn map_indexed(&self, f: impl Fn(PhasePoint<T>, Complex<T>) -> Complex<T>) -> Self {
        let m = self.side();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(self.point(idx / m, idx % m), v))
            .collect();
        Self { grid: self.grid, values }
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.ensure_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(Self { grid: self.grid, values })
    }

    /// Lattice inner product `Σ F conj(G) · Δ/L`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.grid.ensure_same(&other.grid)?;
        let s = self
            .values
            .iter()
            .zip(&other.values)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b.conj());
        Ok(s * self.cell_area())
    }

    /// `L²` norm on the lattice.
    pub fn l2_norm(&self) -> T {
        let s: T = self.values.iter().map(|v| v.norm_sqr()).sum();
        (s * self.cell_area()).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.norm()).fold(T::zero(), T::max)
    }

    /// Circular lattice shift: result at `(m, n)` is the value at `(m - p, n - q)`.
    pub fn shifted(&self, p: i64, q: i64) -> Self {
        let m = self.side() as i64;
        let mut values = Vec::with_capacity(self.values.len());
        for i in 0..m {
            for j in 0..m {
                let si = (i - p).rem_euclid(m) as usize;
                let sj = (j - q).rem_euclid(m) as usize;
                values.push(self.values[si * m as usize + sj]);
            }
        }
        Self { grid: self.grid, values }
    }

    /// Writes `x, omega, re, im` rows with one header row.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "omega", "re", "im"])?;
        let m = self.side();
        for (idx, v) in self.values.iter().enumerate() {
            let z = self.point(idx / m, idx % m);
            w.write_record(&[
                format!("{:.17e}", z.x),
                format!("{:.17e}", z.omega),
                format!("{:.17e}", v.re),
                format!("{:.17e}", v.im),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(grid: Grid<T>, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut values = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<T> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .map(T::lit)
                    .ok_or_else(|| Error::Precondition(format!("row {}: bad column {i}", row + 1)))
            };
            values.push(Complex::new(field(2)?, field(3)?));
        }
        Self::new(grid, values)
    }

    pub fn blob_header(&self) -> BlobHeader {
        let m = self.side();
        BlobHeader {
            dtype: "complex64".into(),
            byte_order: "little".into(),
            layout: "x-major".into(),
            shape: [m, m],
            width: self.grid.width().to_f64_lossy(),
            x0: self.grid.t(0).to_f64_lossy(),
            dx: self.grid.step().to_f64_lossy(),
            omega0: self.grid.omega(0).to_f64_lossy(),
            domega: self.grid.freq_step().to_f64_lossy(),
        }
    }

    /// Raw little-endian `complex64` (re, im as `f32`) in x-major order.
    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            out.extend_from_slice(&(v.re.to_f64_lossy() as f32).to_le_bytes());
            out.extend_from_slice(&(v.im.to_f64_lossy() as f32).to_le_bytes());
        }
        out
    }

    pub fn from_blob(header: &BlobHeader, bytes: &[u8]) -> Result<Self> {
        if header.dtype != "complex64" || header.byte_order != "little" || header.layout != "x-major" {
            return Err(Error::Precondition(format!("unsupported blob header {header:?}")));
        }
        if header.shape[0] != header.shape[1] || bytes.len() != header.shape[0] * header.shape[1] * 8 {
            return Err(Error::GridMismatch("blob length does not match shape".into()));
        }
        let grid = Grid::new(T::lit(header.width), header.shape[0])?;
        let values = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                Complex::new(T::lit(re as f64), T::lit(im as f64))
            })
            .collect();
        Self::new(grid, values)
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (payload).
    pub fn write_blob(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_vec_pretty(&self.blob_header())?)?;
        std::fs::write(dir.join(format!("{stem}.bin")), self.to_blob())?;
        Ok(())
    }
}

/// Shape header of the binary phase-plane interchange format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobHeader {
    pub dtype: String,
    pub byte_order: String,
    pub layout: String,
    pub shape: [usize; 2],
    pub width: f64,
    pub x0: f64,
    pub dx: f64,
    pub omega0: f64,
    pub domega: f64,
}

/// Reusable transform for one grid. Holds FFT plans only; every method is a
/// pure function of its arguments, so one engine may be shared across threads.
pub struct StftEngine<T: Real> {
    grid: Grid<T>,
    dft: CenteredDft<T>,
}

impl<T: Real> StftEngine<T> {
    pub fn new(grid: Grid<T>) -> Result<Self> {
        grid.require_1d()?;
        Ok(Self { grid, dft: CenteredDft::new(grid.points()) })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// `V_g f(x_m, ω_n) = Δ Σ_k f(t_k) conj(g(t_k - x_m)) e^{-2πi ω_n t_k}`,
    /// one FFT per time lag.
    pub fn stft(&self, f: &SampledSignal<T>, g: &SampledSignal<T>) -> Result<PhasePlaneArray<T>> {
        self.grid.ensure_same(f.grid())?;
        self.grid.ensure_same(g.grid())?;
        let m = self.grid.points();
        let half = m / 2;
        let step = self.grid.step();
        let (fs, gs) = (f.samples(), g.samples());
        let mut values = vec![Complex::new(T::zero(), T::zero()); m * m];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
        for (lag, row) in values.chunks_exact_mut(m).enumerate() {
            for (k, b) in buf.iter_mut().enumerate() {
                *b = fs[k] * gs[(k + m + half - lag) % m].conj();
            }
            self.dft.forward(&mut buf);
            for (r, b) in row.iter_mut().zip(&buf) {
                *r = *b * step;
            }
        }
        Ok(PhasePlaneArray { grid: self.grid, values })
    }

    /// `V*_γ F = Δ/L Σ_{m,n} F(x_m, ω_n) M_{ω_n} T_{x_m} γ`.
    pub fn adjoint(&self, big_f: &PhasePlaneArray<T>, gamma: &SampledSignal<T>) -> Result<SampledSignal<T>> {
        self.grid.ensure_same(big_f.grid())?;
        self.grid.ensure_same(gamma.grid())?;
        let m = self.grid.points();
        let half = m / 2;
        let gs = gamma.samples();
        let mut out = vec![Complex::new(T::zero(), T::zero()); m];
        let mut buf = vec![Complex::new(T::zero(), T::zero()); m];
        for (lag, row) in big_f.values.chunks_exact(m).enumerate() {
            buf.copy_from_slice(row);
            self.dft.inverse(&mut buf);
            for (j, o) in out.iter_mut().enumerate() {
                *o = *o + buf[j] * gs[(j + m + half - lag) % m];
            }
        }
        let scale = big_f.cell_area();
        for o in out.iter_mut() {
            *o = *o * scale;
        }
        SampledSignal::new(self.grid, out)
    }
}

pub fn stft<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>) -> Result<PhasePlaneArray<T>> {
    StftEngine::new(*f.grid())?.stft(f, g)
}

pub fn stft_adjoint<T: Real>(big_f: &PhasePlaneArray<T>, gamma: &SampledSignal<T>) -> Result<SampledSignal<T>> {
    StftEngine::new(*gamma.grid())?.adjoint(big_f, gamma)
}

/// `max_z | |V_g(π(y) f)(z)| - |V_g f(z - y)| |` for a lattice point `y`.
pub fn covariance_check<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>, y: PhasePoint<T>) -> Result<T> {
    let grid = *f.grid();
    let (p, q) = match (grid.lattice_offset(y.x), grid.dual_offset(y.omega)) {
        (Some(p), Some(q)) => (p, q),
        _ => {
            return Err(Error::Precondition(format!(
                "shift ({}, {}) is not a lattice point",
                y.x, y.omega
            )))
        }
    };
    let engine = StftEngine::new(grid)?;
    let lhs = engine.stft(&tf_shift(y, f)?, g)?;
    let rhs = engine.stft(f, g)?.shifted(p, q);
    Ok(lhs
        .values()
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| Float::abs(a.norm() - b.norm()))
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{gaussian_window, inner};

    fn grid() -> Grid<f64> {
        Grid::new(12.0, 128).unwrap()
    }

    #[test]
    fn gaussian_stft_at_origin() {
        let g = gaussian_window(grid());
        let v = stft(&g, &g).unwrap();
        let (i, j) = v.origin_index();
        assert!((v.get(i, j) - Complex::new(0.5f64.sqrt(), 0.0)).norm() < 1e-12);
    }

    #[test]
    fn gaussian_stft_modulus_closed_form() {
        // |V_{φ₀}φ₀(x, ω)| = 2^{-1/2} e^{-π(x²+ω²)/2}
        let gr = Grid::new(8.0, 64).unwrap();
        let g = gaussian_window(gr);
        let v = stft(&g, &g).unwrap();
        let at = v.get(32 + 8, 32);
        let expected = 0.5f64.sqrt() * (-std::f64::consts::PI / 2.0).exp();
        assert!((at.norm() - expected).abs() < 1e-12);
        assert!((expected - 0.146_993).abs() < 1e-6);
    }

    #[test]
    fn zero_window_gives_zero_transform() {
        let gr = grid();
        let f = gaussian_window(gr);
        let v = stft(&f, &SampledSignal::zeros(gr)).unwrap();
        assert_eq!(v.max_abs(), 0.0);
        assert!(stft_adjoint(&PhasePlaneArray::zeros(gr), &f).unwrap().is_zero());
    }

    #[test]
    fn inversion_reconstructs() {
        let gr = grid();
        let f = gaussian_window(gr);
        let g = SampledSignal::from_fn(gr, |t| Complex::new((-2.0 * t * t).exp(), 0.3 * t * (-t * t).exp()));
        let gamma = SampledSignal::from_real_fn(gr, |t| (1.0 + t) * (-1.5 * t * t).exp());
        let v = stft(&f, &g).unwrap();
        let back = stft_adjoint(&v, &gamma).unwrap();
        let c = inner(&gamma, &g).unwrap();
        let rec = back.scale(c.inv());
        assert!(rec.sub(&f).unwrap().norm() / f.norm() < 1e-12);
    }

    #[test]
    fn adjointness() {
        let gr = Grid::new(8.0, 32).unwrap();
        let gamma = gaussian_window(gr);
        let h = SampledSignal::from_fn(gr, |t| Complex::new(t.sin(), t.cos() * 0.2));
        let big_f = PhasePlaneArray::from_fn(gr, |z| Complex::new(z.x.cos() + z.omega, z.x * z.omega));
        let lhs = inner(&stft_adjoint(&big_f, &gamma).unwrap(), &h).unwrap();
        let rhs = big_f.inner(&stft(&h, &gamma).unwrap()).unwrap();
        assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn covariance_zero_shift_is_exact() {
        let gr = grid();
        let f = gaussian_window(gr);
        assert_eq!(covariance_check(&f, &f, PhasePoint::origin()).unwrap(), 0.0);
    }

    #[test]
    fn covariance_rejects_off_lattice() {
        let gr = grid();
        let f = gaussian_window(gr);
        assert!(matches!(
            covariance_check(&f, &f, PhasePoint::new(0.01, 0.0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn covariance_gaussian_lattice_shift() {
        let gr = grid();
        let f = gaussian_window(gr);
        let y = PhasePoint::new(32.0 * gr.step(), 4.0 / 12.0);
        let dev = covariance_check(&f, &f, y).unwrap();
        assert!(dev <= 1e-10, "{dev}");
    }

    #[test]
    fn csv_and_blob_round_trip() {
        let gr = Grid::new(8.0, 8).unwrap();
        let a = PhasePlaneArray::from_fn(gr, |z| Complex::new(z.x, z.omega));
        let mut buf = Vec::new();
        a.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x,omega,re,im\n"));
        let b = PhasePlaneArray::read_csv(gr, buf.as_slice()).unwrap();
        assert!(b.sub(&a).unwrap().max_abs() < 1e-15);
        let blob = a.to_blob();
        assert_eq!(blob.len(), 64 * 8);
        let c = PhasePlaneArray::<f64>::from_blob(&a.blob_header(), &blob).unwrap();
        assert!(c.sub(&a).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn single_precision_inversion() {
        let gr = Grid::<f32>::new(12.0, 128).unwrap();
        let f = gaussian_window(gr);
        let v = stft(&f, &f).unwrap();
        let back = stft_adjoint(&v, &f).unwrap();
        let c = inner(&f, &f).unwrap();
        let rec = back.scale(c.inv());
        assert!(rec.sub(&f).unwrap().norm() / f.norm() < 1e-5);
    }
}
