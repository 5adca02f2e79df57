//! Localization operators `A_a^{φ₁,φ₂} f = V*_{φ₂}(a · V_{φ₁} f)`, their
//! matrices, weighted operator norms and the mapping bounds.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, hermitian_roots, CMatrix, CVector, HermitianRoots};
use crate::modspace::{m1_norm, MixedNormParams};
use crate::signal::{gaussian_window, Grid, SampledSignal};
use crate::stft::{PhasePlaneArray, StftEngine};
use crate::symbol::SymbolSpec;
use crate::weights::{weighted_sup, WeightSpec};

/// Largest grid accepted for dense assembly.
pub const DENSE_CAP: usize = 1024;

pub const NORM_TOL: f64 = 1e-8;
pub const NORM_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocOpSpec {
    pub symbol: SymbolSpec,
    /// `φ₁`
    pub window_analysis: SampledSignal<f64>,
    /// `φ₂`
    pub window_synthesis: SampledSignal<f64>,
}

impl LocOpSpec {
    pub fn new(symbol: impl Into<SymbolSpec>, phi1: SampledSignal<f64>, phi2: SampledSignal<f64>) -> Result<Self> {
        phi1.grid().ensure_same(phi2.grid())?;
        phi1.grid().require_1d()?;
        Ok(Self { symbol: symbol.into(), window_analysis: phi1, window_synthesis: phi2 })
    }

    pub fn grid(&self) -> Grid<f64> {
        *self.window_analysis.grid()
    }

    pub fn symbol_values(&self) -> Result<PhasePlaneArray<f64>> {
        self.symbol.values(self.grid())
    }

    /// `(A_a^{φ₁,φ₂})* = A_{ā}^{φ₂,φ₁}`.
    pub fn adjoint(&self) -> Self {
        Self {
            symbol: self.symbol.conj(),
            window_analysis: self.window_synthesis.clone(),
            window_synthesis: self.window_analysis.clone(),
        }
    }
}

fn apply_with(engine: &StftEngine<f64>, a: &PhasePlaneArray<f64>, op: &LocOpSpec, f: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
    let v = engine.stft(f, &op.window_analysis)?;
    engine.adjoint(&v.hadamard(a)?, &op.window_synthesis)
}

pub fn apply(op: &LocOpSpec, f: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
    op.grid().ensure_same(f.grid())?;
    let engine = StftEngine::new(op.grid())?;
    apply_with(&engine, &op.symbol_values()?, op, f)
}

/// `⟨a V_{φ₁} f, V_{φ₂} g⟩` on the lattice.
pub fn weak_form(op: &LocOpSpec, f: &SampledSignal<f64>, g: &SampledSignal<f64>) -> Result<Complex64> {
    let engine = StftEngine::new(op.grid())?;
    let vf = engine.stft(f, &op.window_analysis)?;
    let vg = engine.stft(g, &op.window_synthesis)?;
    vf.hadamard(&op.symbol_values()?)?.inner(&vg)
}

/// Dense matrix of `V*_{φ₂}(F · V_{φ₁} ·)` for lattice multiplier `F`.
pub fn multiplier_matrix(a: &PhasePlaneArray<f64>, phi1: &SampledSignal<f64>, phi2: &SampledSignal<f64>) -> Result<CMatrix> {
    let grid = *phi1.grid();
    let m = grid.points();
    if m > DENSE_CAP {
        return Err(Error::CostCap(format!("dense assembly limited to M ≤ {DENSE_CAP}, got {m}")));
    }
    let op = LocOpSpec { symbol: SymbolSpec::Sampled(a.clone()), window_analysis: phi1.clone(), window_synthesis: phi2.clone() };
    let engine = StftEngine::new(grid)?;
    let mut out = CMatrix::zeros(m, m);
    for j in 0..m {
        let col = apply_with(&engine, a, &op, &SampledSignal::unit(grid, j))?;
        out.column_mut(j).copy_from_slice(col.samples());
    }
    Ok(out)
}

/// Weighted Hilbert geometry `‖f‖² = fᴴ G f` of `M²_μ` in sample coordinates,
/// `G = Δ · Mat(A_{μ²}^{φ₀,φ₀})`.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub params: MixedNormParams,
    pub gram: CMatrix,
    pub roots: HermitianRoots,
}

impl Geometry {
    pub fn new(grid: Grid<f64>, params: &MixedNormParams) -> Result<Self> {
        if !params.is_hilbert() {
            return Err(Error::UnsupportedNorm(format!(
                "operator norms need p = q = 2, got p = {}, q = {}",
                params.p, params.q
            )));
        }
        let phi0 = gaussian_window(grid);
        let mu = &params.m;
        let mu2 = PhasePlaneArray::from_real_fn(grid, |z| {
            let v = mu.eval(z);
            v * v
        });
        let gram = multiplier_matrix(&mu2, &phi0, &phi0)? * Complex64::new(grid.step(), 0.0);
        let roots = hermitian_roots(&gram)?;
        Ok(Self { params: params.clone(), gram, roots })
    }

    pub fn norm(&self, f: &CVector) -> f64 {
        f.dotc(&(&self.gram * f)).re.max(0.0).sqrt()
    }
}

/// Finite-rank realization of an operator between two `M²` spaces.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub grid: Grid<f64>,
    pub entries: CMatrix,
    pub source_norm: MixedNormParams,
    pub target_norm: MixedNormParams,
}

impl OperatorMatrix {
    pub fn new(grid: Grid<f64>, entries: CMatrix, source_norm: MixedNormParams, target_norm: MixedNormParams) -> Self {
        Self { grid, entries, source_norm, target_norm }
    }

    /// Same geometry on both sides, unweighted.
    pub fn plain(grid: Grid<f64>, entries: CMatrix) -> Self {
        let p = MixedNormParams::hilbert(WeightSpec::ConstantOne);
        Self::new(grid, entries, p.clone(), p)
    }

    pub fn with_norms(mut self, source: MixedNormParams, target: MixedNormParams) -> Self {
        self.source_norm = source;
        self.target_norm = target;
        self
    }

    pub fn apply(&self, f: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
        self.grid.ensure_same(f.grid())?;
        let v = &self.entries * CVector::from_column_slice(f.samples());
        SampledSignal::new(self.grid, v.iter().cloned().collect())
    }

    /// `G_tgt^{1/2} A G_src^{-1/2}`.
    pub fn whitened(&self) -> Result<CMatrix> {
        let src = Geometry::new(self.grid, &self.source_norm)?;
        let tgt = if self.target_norm == self.source_norm { src.clone() } else { Geometry::new(self.grid, &self.target_norm)? };
        Ok(whiten(&self.entries, &src, &tgt))
    }
}

pub fn whiten(a: &CMatrix, src: &Geometry, tgt: &Geometry) -> CMatrix {
    &tgt.roots.sqrt * a * &src.roots.inv_sqrt
}

/// `sqrt(λ_max(G_src^{-1} Aᴴ G_tgt A))` by Lanczos iteration
/// (tolerance `1e-8`, at most 500 iterations).
pub fn operator_norm(op: &OperatorMatrix) -> Result<f64> {
    Ok(operator_norm_detailed(op, 0)?.value)
}

pub fn operator_norm_detailed(op: &OperatorMatrix, seed: u64) -> Result<linalg::PowerIteration> {
    linalg::top_singular_value(&op.whitened()?, NORM_TOL, NORM_MAX_ITER, seed)
}

/// Top `k` generalized singular values, descending.
pub fn compactness_profile(op: &OperatorMatrix, k: usize) -> Result<Vec<f64>> {
    let m = op.entries.ncols();
    if k > m {
        return Err(Error::Precondition(format!("profile length {k} exceeds dimension {m}")));
    }
    let mut s = linalg::singular_values(&op.whitened()?);
    s.truncate(k);
    Ok(s)
}

/// `σ_k / σ_1` (1-based `k`) of a profile; `0` for the zero operator.
pub fn tail_ratio(profile: &[f64], k: usize) -> f64 {
    match (profile.first(), profile.get(k - 1)) {
        (Some(&s1), Some(&sk)) if s1 > 0.0 => sk / s1,
        _ => 0.0,
    }
}

/// `max ‖A f_k‖_tgt / ‖f_k‖_src` over seeded random probes, measured with
/// lattice mixed norms and the Gaussian window; a lower bound on the operator
/// norm for any `(p, q)`.
pub fn probe_lower_bound(op: &OperatorMatrix, probes: usize, seed: u64) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let grid = op.grid;
    let phi0 = gaussian_window(grid);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..probes {
        // smooth random probe: a few Gaussian atoms at random phase points
        let mut f = SampledSignal::zeros(grid);
        for _ in 0..4 {
            let half_x = grid.width() / 4.0;
            let half_w = grid.points() as f64 / (4.0 * grid.width());
            let z = crate::signal::PhasePoint::new(rng.gen_range(-half_x..half_x), rng.gen_range(-half_w..half_w));
            let c = Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            f = f.axpy(c, &crate::signal::tf_shift(z, &phi0)?)?;
        }
        let den = crate::modspace::mod_norm(&f, &phi0, &op.source_norm)?;
        if den == 0.0 {
            continue;
        }
        let num = crate::modspace::mod_norm(&op.apply(&f)?, &phi0, &op.target_norm)?;
        best = best.max(num / den);
    }
    Ok(best)
}

pub fn matrix(op: &LocOpSpec) -> Result<OperatorMatrix> {
    let entries = multiplier_matrix(&op.symbol_values()?, &op.window_analysis, &op.window_synthesis)?;
    Ok(OperatorMatrix::plain(op.grid(), entries))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `a ∈ L^∞_{1/m}`, `M_{μm} → M_μ`
    I,
    /// `a ∈ L^∞_m`, `M_μ → M_{μm}`
    Ii,
}

/// Weighted geometries `(source, target)` for the given direction.
pub fn mapping_geometry(m: &WeightSpec, mu: &WeightSpec, direction: Direction) -> (MixedNormParams, MixedNormParams) {
    let mu_m = MixedNormParams::hilbert(WeightSpec::product(mu.clone(), m.clone()));
    let mu_only = MixedNormParams::hilbert(mu.clone());
    match direction {
        Direction::I => (mu_m, mu_only),
        Direction::Ii => (mu_only, mu_m),
    }
}

/// Right-hand side of the mapping estimate:
/// (i) `‖φ₁‖_{M¹_{vw}} ‖φ₂‖_{M¹_w} ‖a‖_{L^∞_{1/m}}`,
/// (ii) `‖φ₁‖_{M¹_w} ‖φ₂‖_{M¹_{vw}} ‖a‖_{L^∞_m}`.
/// `μ` fixes the geometry only and does not enter the product.
pub fn mapping_bound(
    op: &LocOpSpec,
    m: &WeightSpec,
    v: &WeightSpec,
    w: &WeightSpec,
    _mu: &WeightSpec,
    direction: Direction,
) -> Result<f64> {
    let a = op.symbol_values()?;
    let vw = WeightSpec::product(v.clone(), w.clone());
    let (w1, w2, sym_weight) = match direction {
        Direction::I => (vw, w.clone(), WeightSpec::reciprocal(m.clone())),
        Direction::Ii => (w.clone(), vw, m.clone()),
    };
    let n1 = m1_norm(&op.window_analysis, &w1)?;
    let n2 = m1_norm(&op.window_synthesis, &w2)?;
    Ok(n1 * n2 * weighted_sup(&a, &sym_weight))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::inner;
    use crate::symbol::SymbolExpr;

    fn grid() -> Grid<f64> {
        Grid::new(12.0, 64).unwrap()
    }

    fn normalized_gaussian() -> SampledSignal<f64> {
        gaussian_window(grid()).normalized().unwrap()
    }

    fn test_signal() -> SampledSignal<f64> {
        SampledSignal::from_fn(grid(), |t| Complex64::new((-(t - 0.5).powi(2)).exp(), 0.3 * t * (-t * t).exp()))
    }

    #[test]
    fn unit_symbol_is_identity() {
        let phi = normalized_gaussian();
        let op = LocOpSpec::new(SymbolExpr::constant(1.0), phi.clone(), phi).unwrap();
        let f = test_signal();
        let af = apply(&op, &f).unwrap();
        assert!(af.sub(&f).unwrap().norm() <= 1e-8 * f.norm());
    }

    #[test]
    fn constant_symbol_scales_reconstruction() {
        let phi1 = normalized_gaussian();
        let phi2 = SampledSignal::from_real_fn(grid(), |t| (1.0 + 0.5 * t) * (-1.2 * t * t).exp());
        let c = Complex64::new(2.0, -1.0);
        let op = LocOpSpec::new(SymbolExpr::Constant { re: c.re, im: c.im }, phi1.clone(), phi2.clone()).unwrap();
        let f = test_signal();
        let want = f.scale(c * inner(&phi2, &phi1).unwrap());
        assert!(apply(&op, &f).unwrap().sub(&want).unwrap().norm() <= 1e-8 * want.norm());
    }

    #[test]
    fn zero_symbol() {
        let phi = normalized_gaussian();
        let op = LocOpSpec::new(SymbolExpr::constant(0.0), phi.clone(), phi).unwrap();
        assert!(matrix(&op).unwrap().entries.iter().all(|v| *v == linalg::ZERO));
    }

    #[test]
    fn matrix_reproduces_apply_and_weak_form() {
        let phi1 = normalized_gaussian();
        let phi2 = SampledSignal::from_real_fn(grid(), |t| (-2.0 * t * t).exp());
        let op = LocOpSpec::new(SymbolExpr::japanese(-1.0), phi1, phi2).unwrap();
        let mat = matrix(&op).unwrap();
        let f = test_signal();
        let direct = apply(&op, &f).unwrap();
        assert!(mat.apply(&f).unwrap().sub(&direct).unwrap().max_abs() < 1e-12);
        let g = SampledSignal::from_real_fn(grid(), |t| t * (-t * t).exp());
        let lhs = inner(&direct, &g).unwrap();
        let rhs = weak_form(&op, &f, &g).unwrap();
        assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1e-300));
    }

    #[test]
    fn real_symbol_same_windows_is_hermitian() {
        let phi = normalized_gaussian();
        let op = LocOpSpec::new(SymbolExpr::japanese(1.0), phi.clone(), phi).unwrap();
        let a = matrix(&op).unwrap().entries;
        assert!((&a - a.adjoint()).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn adjoint_symmetry() {
        let phi1 = normalized_gaussian();
        let phi2 = SampledSignal::from_real_fn(grid(), |t| (1.0 - t) * (-1.5 * t * t).exp());
        let sym = SymbolExpr::Constant { re: 0.0, im: 1.0 }.times(SymbolExpr::gaussian(2.0)).plus(SymbolExpr::constant(1.0));
        let op = LocOpSpec::new(sym, phi1, phi2).unwrap();
        let a = matrix(&op).unwrap().entries;
        let b = matrix(&op.adjoint()).unwrap().entries;
        assert!((a.adjoint() - &b).norm() <= 1e-10 * a.norm());
    }

    #[test]
    fn identity_norms() {
        let g = grid();
        let id = OperatorMatrix::plain(g, CMatrix::identity(64, 64));
        assert!((operator_norm(&id).unwrap() - 1.0).abs() < 1e-8);
        let w = MixedNormParams::hilbert(WeightSpec::polynomial(1.0));
        let scaled = OperatorMatrix::new(g, CMatrix::identity(64, 64) * Complex64::new(0.0, -2.5), w.clone(), w);
        assert!((operator_norm(&scaled).unwrap() - 2.5).abs() < 1e-8);
        let prof = compactness_profile(&id, 64).unwrap();
        assert!(prof.iter().all(|s| (s - 1.0).abs() < 1e-10));
        assert!(compactness_profile(&id, 65).is_err());
    }

    #[test]
    fn weighted_rank_one_projector() {
        let g = grid();
        let params = MixedNormParams::hilbert(WeightSpec::polynomial(2.0));
        let geom = Geometry::new(g, &params).unwrap();
        let u = CVector::from_column_slice(test_signal().samples());
        let u = &u / Complex64::new(geom.norm(&u), 0.0);
        // f ↦ ⟨f, u⟩_G u
        let p = &u * (u.adjoint() * &geom.gram);
        let op = OperatorMatrix::new(g, p, params.clone(), params);
        assert!((operator_norm(&op).unwrap() - 1.0).abs() < 1e-8);
        let prof = compactness_profile(&op, 2).unwrap();
        assert!(prof[1] < 1e-8);
    }

    #[test]
    fn non_hilbert_rejected() {
        let g = grid();
        let p = MixedNormParams::new(1.0, 2.0, WeightSpec::ConstantOne).unwrap();
        let op = OperatorMatrix::plain(g, CMatrix::identity(64, 64)).with_norms(p.clone(), p);
        assert!(matches!(operator_norm(&op), Err(Error::UnsupportedNorm(_))));
    }

    #[test]
    fn cap_enforced() {
        let big = Grid::new(64.0, 2048).unwrap();
        let phi = gaussian_window(big);
        let a = PhasePlaneArray::zeros(Grid::new(64.0, 2048).unwrap());
        assert!(matches!(multiplier_matrix(&a, &phi, &phi), Err(Error::CostCap(_))));
    }

    #[test]
    fn probes_bound_the_norm_from_below() {
        let phi = normalized_gaussian();
        let op = LocOpSpec::new(SymbolExpr::japanese(1.0), phi.clone(), phi).unwrap();
        let m = matrix(&op).unwrap();
        let lower = probe_lower_bound(&m, 8, 3).unwrap();
        let norm = operator_norm(&m).unwrap();
        assert!(lower > 0.0 && lower <= norm * (1.0 + 1e-6), "{lower} vs {norm}");
        let l1 = MixedNormParams::new(1.0, 1.0, WeightSpec::ConstantOne).unwrap();
        assert!(probe_lower_bound(&m.with_norms(l1.clone(), l1), 4, 3).unwrap() > 0.0);
    }

    #[test]
    fn zero_symbol_bound_is_zero() {
        let phi = normalized_gaussian();
        let op = LocOpSpec::new(SymbolExpr::constant(0.0), phi.clone(), phi).unwrap();
        let one = WeightSpec::ConstantOne;
        assert_eq!(mapping_bound(&op, &one, &one, &one, &one, Direction::I).unwrap(), 0.0);
    }
}
