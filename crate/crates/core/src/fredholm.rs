//! Parametrix `A^{φ₂,φ₁}_{1/a}` of `A_a^{φ₁,φ₂}` and finite-grid Fredholm
//! diagnostics: the residual `R = BA − I` (or `AB − I`), its singular-value
//! profile, the spectrum of `BA`, the cutoff splitting and preconditioned solves.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, gmres, CMatrix, CVector, KrylovSolve};
use crate::locop::{self, compactness_profile, matrix, operator_norm, tail_ratio, LocOpSpec, OperatorMatrix};
use crate::modspace::{m1_norm, MixedNormParams};
use crate::signal::{inner, Grid, SampledSignal};
use crate::stft::PhasePlaneArray;
use crate::symbol::SymbolSpec;
use crate::weights::{classify_symbol, lattice_half_extent, weighted_sup, WeightSpec, WeightedSymbolClassReport};

/// `φ₂` rescaled so that `⟨φ₁,φ₂⟩ = 1`.
pub fn normalize_pair(phi1: &SampledSignal<f64>, phi2: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
    let c = inner(phi1, phi2)?;
    if c.norm() <= 1e-300 {
        return Err(Error::Precondition("windows are orthogonal, ⟨φ₁,φ₂⟩ = 0".into()));
    }
    // ⟨φ₁, φ₂/conj(c)⟩ = c / c = 1
    Ok(phi2.scale(Complex64::new(1.0, 0.0) / c.conj()))
}

/// Fails when `a` vanishes on the lattice or, being real-valued, changes sign
/// between neighbouring lattice points.
pub fn check_nonvanishing(a: &PhasePlaneArray<f64>) -> Result<()> {
    let scale = a.max_abs();
    if scale == 0.0 {
        return Err(Error::SingularSymbol("symbol is identically zero".into()));
    }
    let n = a.side();
    let (idx, min) = a
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| (i, v.norm()))
        .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
    if min <= 1e-12 * scale {
        let z = a.point(idx / n, idx % n);
        return Err(Error::SingularSymbol(format!("|a| = {min:e} at ({}, {})", z.x, z.omega)));
    }
    let real = a.values().iter().all(|v| v.im.abs() <= 1e-14 * v.norm());
    if real {
        for i in 0..n {
            for j in 0..n {
                let here = a.get(i, j).re;
                for (ii, jj) in [(i + 1, j), (i, j + 1)] {
                    if ii < n && jj < n && here * a.get(ii, jj).re < 0.0 {
                        let z = a.point(i, j);
                        return Err(Error::SingularSymbol(format!(
                            "real symbol changes sign next to ({}, {})",
                            z.x, z.omega
                        )));
                    }
                }
            }
        }
    }
    Ok(())
}

/// `A^{φ₂,φ₁}_{1/a}` with `φ₂` rescaled so that `⟨φ₁,φ₂⟩ = 1`.
pub fn parametrix(a: &SymbolSpec, phi1: &SampledSignal<f64>, phi2: &SampledSignal<f64>) -> Result<LocOpSpec> {
    phi1.grid().ensure_same(phi2.grid())?;
    check_nonvanishing(&a.values(*phi1.grid())?)?;
    let phi2 = normalize_pair(phi1, phi2)?;
    LocOpSpec::new(a.recip(), phi2, phi1.clone())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `R = BA − I` on `M_μ`
    Left,
    /// `R = AB − I` on `M_{μm}`
    Right,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FredholmThresholds {
    /// Allowed `sup/inf` of `|a|·m`.
    pub comparability_factor: f64,
    /// `(∂_j a)·m` outside the inner radius must be below this fraction of its sup.
    pub decay_fraction: f64,
    pub profile_len: usize,
    /// 1-based index `k` of the tail metric `σ_k/σ₁`.
    pub tail_index: usize,
    pub tail_max: f64,
    pub cluster_radius: f64,
    pub cluster_min_fraction: f64,
}

impl Default for FredholmThresholds {
    fn default() -> Self {
        Self {
            comparability_factor: 10.0,
            decay_fraction: 0.5,
            profile_len: 60,
            tail_index: 40,
            tail_max: 1e-2,
            cluster_radius: 0.1,
            cluster_min_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// Condition (i): `|a|·m` on the lattice.
    pub class: WeightedSymbolClassReport,
    pub comparability: f64,
    /// Condition (ii): `sup_{|z|>R} |∂_j a|·m / sup |∂_j a|·m` for `j = x, ω`.
    pub derivative_tail: [f64; 2],
    pub tail_radius: f64,
    /// Condition (iii): `‖φ_j‖_{M¹}` with weight `w v² (⟨·⟩⊗⟨·⟩)`.
    pub window_norms: [f64; 2],
    pub pair_inner: f64,
    pub warnings: Vec<String>,
}

/// Reads the three hypotheses on the lattice; failures become warnings.
pub fn check_hypotheses(
    a: &SymbolSpec,
    m: &WeightSpec,
    v: &WeightSpec,
    w: &WeightSpec,
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    thresholds: &FredholmThresholds,
) -> Result<HypothesisReport> {
    let grid = *phi1.grid();
    let vals = a.values(grid)?;
    let tail_radius = 0.5 * lattice_half_extent(&vals);
    let class = classify_symbol(&vals, m, tail_radius)?;
    let comparability = class.comparability();
    let mut warnings = Vec::new();
    if !(comparability <= thresholds.comparability_factor) {
        warnings.push(format!(
            "(i) |a|·m ranges over [{:.3e}, {:.3e}], ratio {comparability:.3e} exceeds {}",
            class.inf_ratio, class.sup_ratio, thresholds.comparability_factor
        ));
    }
    let mut derivative_tail = [0.0; 2];
    for (k, alpha) in [(1, 0), (0, 1)].into_iter().enumerate() {
        let d = match a.derivative(grid, alpha) {
            Ok(d) => d,
            Err(Error::NonFinite(what)) => {
                derivative_tail[k] = f64::NAN;
                warnings.push(format!("(ii) {what}: the derivative is singular on the lattice"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let total = weighted_sup(&d, m);
        let tail = classify_symbol(&d, m, tail_radius)?.tail_sup;
        derivative_tail[k] = if total > 0.0 { tail / total } else { 0.0 };
        if derivative_tail[k] > thresholds.decay_fraction {
            warnings.push(format!(
                "(ii) (∂{} a)·m keeps {:.3} of its sup beyond |z| = {tail_radius:.2}",
                if k == 0 { "x" } else { "ω" },
                derivative_tail[k]
            ));
        }
    }
    let heavy = WeightSpec::product(
        WeightSpec::product(w.clone(), WeightSpec::product(v.clone(), v.clone())),
        WeightSpec::TensorPolynomial { sx: 1.0, somega: 1.0 },
    );
    let window_norms = [m1_norm(phi1, &heavy)?, m1_norm(phi2, &heavy)?];
    let pair_inner = inner(phi1, phi2)?.norm();
    if (pair_inner - 1.0).abs() > 1e-10 {
        warnings.push(format!("(iii) |⟨φ₁,φ₂⟩| = {pair_inner:.6} before rescaling"));
    }
    Ok(HypothesisReport { class, comparability, derivative_tail, tail_radius, window_norms, pair_inner, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    /// `true` when the value must not exceed the threshold.
    pub upper: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, upper: true, passed: value <= threshold }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self { name: name.into(), value, threshold, upper: false, passed: value >= threshold }
    }
}

#[derive(Debug, Clone)]
pub struct FredholmReport {
    pub side: Side,
    pub hypotheses: HypothesisReport,
    /// `R` in the weighted geometry of its side
    pub residual: OperatorMatrix,
    pub residual_norm: f64,
    pub profile: Vec<f64>,
    pub tail: f64,
    /// Eigenvalues of `BA` (left) or `AB` (right).
    pub eigenvalues: Vec<Complex64>,
    pub cluster_fraction: f64,
    pub checks: Vec<Check>,
}

impl FredholmReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Eigenvalues by a complex Schur decomposition with an iteration limit.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<Complex64>> {
    let schur = a
        .clone()
        .try_schur(1e-15, 100 * a.nrows().max(1))
        .ok_or_else(|| Error::LinAlg("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().cloned().collect())
}

/// Eigenvalues of `I + R` computed from `R`, which keeps the Schur iteration
/// away from the degenerate cluster at 1.
pub fn eigenvalues_near_identity(r: &CMatrix) -> Result<Vec<Complex64>> {
    Ok(eigenvalues(r)?.into_iter().map(|l| l + 1.0).collect())
}

/// Fraction of eigenvalues within `radius` of 1.
pub fn cluster_fraction(eigs: &[Complex64], radius: f64) -> f64 {
    if eigs.is_empty() {
        return 0.0;
    }
    eigs.iter().filter(|l| (**l - 1.0).norm() <= radius).count() as f64 / eigs.len() as f64
}

/// The operator `A = A_a^{φ₁,φ₂}` and its parametrix `B`, both with the
/// rescaled `φ₂`.
pub fn operator_pair(a: &SymbolSpec, phi1: &SampledSignal<f64>, phi2: &SampledSignal<f64>) -> Result<(LocOpSpec, LocOpSpec)> {
    let b = parametrix(a, phi1, phi2)?;
    let op = LocOpSpec::new(a.clone(), phi1.clone(), b.window_analysis.clone())?;
    Ok((op, b))
}

#[allow(clippy::too_many_arguments)]
pub fn fredholm_check(
    a: &SymbolSpec,
    m: &WeightSpec,
    v: &WeightSpec,
    w: &WeightSpec,
    mu: &WeightSpec,
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    side: Side,
    thresholds: &FredholmThresholds,
) -> Result<FredholmReport> {
    let hypotheses = check_hypotheses(a, m, v, w, phi1, phi2, thresholds)?;
    let (op, b) = operator_pair(a, phi1, phi2)?;
    let grid = op.grid();
    let am = matrix(&op)?.entries;
    let bm = matrix(&b)?.entries;
    let product = match side {
        Side::Left => &bm * &am,
        Side::Right => &am * &bm,
    };
    let n = grid.points();
    let r = &product - CMatrix::identity(n, n);
    let space = match side {
        Side::Left => MixedNormParams::hilbert(mu.clone()),
        Side::Right => MixedNormParams::hilbert(WeightSpec::product(mu.clone(), m.clone())),
    };
    let residual = OperatorMatrix::new(grid, r, space.clone(), space);
    let residual_norm = operator_norm(&residual)?;
    let len = thresholds.profile_len.min(n);
    let profile = compactness_profile(&residual, len)?;
    let tail = tail_ratio(&profile, thresholds.tail_index.min(len));
    let eigenvalues = eigenvalues_near_identity(&residual.entries)?;
    let cluster = cluster_fraction(&eigenvalues, thresholds.cluster_radius);
    let checks = vec![
        Check::at_most(&format!("sigma_{}/sigma_1 of R", thresholds.tail_index), tail, thresholds.tail_max),
        Check::at_least("eigenvalue fraction near 1", cluster, thresholds.cluster_min_fraction),
    ];
    Ok(FredholmReport {
        side,
        hypotheses,
        residual,
        residual_norm,
        profile,
        tail,
        eigenvalues,
        cluster_fraction: cluster,
        checks,
    })
}

/// `(s, σ_k/σ₁)` of the left residual for `a = ⟨z⟩^s`, `m = ⟨z⟩^{-s}`.
pub struct SweepPoint {
    pub s: f64,
    pub tail: f64,
    pub residual_norm: f64,
}

pub fn sweep_polynomial(
    exponents: &[f64],
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    thresholds: &FredholmThresholds,
) -> Result<Vec<SweepPoint>> {
    let one = WeightSpec::ConstantOne;
    exponents
        .iter()
        .map(|&s| {
            let a: SymbolSpec = crate::symbol::SymbolExpr::japanese(s).into();
            let r = fredholm_check(&a, &WeightSpec::polynomial(-s), &WeightSpec::polynomial(s.abs()), &one, &one, phi1, phi2, Side::Left, thresholds)?;
            Ok(SweepPoint { s, tail: r.tail, residual_norm: r.residual_norm })
        })
        .collect()
}

/// `true` when the tail metric does not increase as `s` decreases.
pub fn weakly_monotone(points: &[SweepPoint]) -> bool {
    let mut sorted: Vec<&SweepPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.s.total_cmp(&b.s));
    sorted.windows(2).all(|w| w[0].tail <= w[1].tail * (1.0 + 1e-9))
}

#[derive(Debug, Clone)]
pub struct CutoffSplitReport {
    /// `‖BA − (T₁ + T₂ + T₃)‖ / ‖BA‖`
    pub identity_error: f64,
    pub terms: [CMatrix; 3],
    pub profiles: [Vec<f64>; 2],
    pub tails: [f64; 2],
    pub checks: Vec<Check>,
}

/// The three-term split
/// `B A = A_{1/a} A_{aψ} + A_{(1/a)ψ} A_{a(1−ψ)} + A_{(1/a)(1−ψ)} A_{a(1−ψ)}`,
/// where the first factors use windows `(φ₂, φ₁)` and the second `(φ₁, φ₂)`.
/// `k_radius`, when given, is a radius on which `ψ` must equal 1.
pub fn cutoff_split_check(
    a: &SymbolSpec,
    psi: &SymbolSpec,
    k_radius: Option<f64>,
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    thresholds: &FredholmThresholds,
) -> Result<CutoffSplitReport> {
    let grid: Grid<f64> = *phi1.grid();
    let psi_vals = psi.values(grid)?;
    if let Some(r) = k_radius {
        let n = psi_vals.side();
        for (idx, val) in psi_vals.values().iter().enumerate() {
            let z = psi_vals.point(idx / n, idx % n);
            if z.norm() <= r && (val - 1.0).norm() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "cutoff is {val} at ({}, {}) inside K (radius {r})",
                    z.x, z.omega
                )));
            }
        }
    }
    let (op, b) = operator_pair(a, phi1, phi2)?;
    let a_vals = a.values(grid)?;
    let inv_vals = b.symbol_values()?;
    let one_minus = psi_vals.map(|p| Complex64::new(1.0, 0.0) - p);
    let mat = |sym: &PhasePlaneArray<f64>, o: &LocOpSpec| {
        locop::multiplier_matrix(sym, &o.window_analysis, &o.window_synthesis)
    };
    let lhs = mat(&inv_vals, &b)? * mat(&a_vals, &op)?;
    let t1 = mat(&inv_vals, &b)? * mat(&a_vals.hadamard(&psi_vals)?, &op)?;
    let t2 = mat(&inv_vals.hadamard(&psi_vals)?, &b)? * mat(&a_vals.hadamard(&one_minus)?, &op)?;
    let t3 = mat(&inv_vals.hadamard(&one_minus)?, &b)? * mat(&a_vals.hadamard(&one_minus)?, &op)?;
    let identity_error = linalg::relative_spectral_diff(&(&t1 + &t2 + &t3), &lhs);
    let len = thresholds.profile_len.min(grid.points());
    let k = thresholds.tail_index.min(len);
    let profile = |t: &CMatrix| -> Result<Vec<f64>> { compactness_profile(&OperatorMatrix::plain(grid, t.clone()), len) };
    let profiles = [profile(&t1)?, profile(&t2)?];
    let tails = [tail_ratio(&profiles[0], k), tail_ratio(&profiles[1], k)];
    let checks = vec![
        Check::at_most("split identity relative error", identity_error, 1e-10),
        Check::at_most(&format!("sigma_{k}/sigma_1 of first term"), tails[0], thresholds.tail_max),
        Check::at_most(&format!("sigma_{k}/sigma_1 of second term"), tails[1], thresholds.tail_max),
    ];
    Ok(CutoffSplitReport { identity_error, terms: [t1, t2, t3], profiles, tails, checks })
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub solution: SampledSignal<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub residuals: Vec<f64>,
    pub unpreconditioned: KrylovSolve,
}

pub const SOLVE_MAX_ITER: usize = 500;

/// Solves `A_a f = g` by GMRES with the parametrix as left preconditioner and
/// reports the unpreconditioned iteration count alongside.
pub fn preconditioned_solve(
    a: &SymbolSpec,
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    g: &SampledSignal<f64>,
    tol: f64,
) -> Result<SolveReport> {
    let (op, b) = operator_pair(a, phi1, phi2)?;
    op.grid().ensure_same(g.grid())?;
    let am = matrix(&op)?.entries;
    let bm = matrix(&b)?.entries;
    let rhs = CVector::from_column_slice(g.samples());
    let pre = gmres(&am, &rhs, Some(&bm), tol, SOLVE_MAX_ITER);
    let plain = gmres(&am, &rhs, None, tol, SOLVE_MAX_ITER);
    if !pre.converged {
        return Err(Error::NoConvergence { iterations: pre.iterations, history: pre.residuals });
    }
    let residual = pre.residuals.last().copied().unwrap_or(0.0);
    Ok(SolveReport {
        solution: SampledSignal::new(op.grid(), pre.x.iter().cloned().collect())?,
        iterations: pre.iterations,
        residual,
        residuals: pre.residuals,
        unpreconditioned: plain,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian_window;
    use crate::symbol::SymbolExpr;

    fn grid() -> Grid<f64> {
        Grid::new(8.0, 64).unwrap()
    }

    #[test]
    fn rescaling_fixes_pair_inner_product() {
        let g = grid();
        let phi1 = gaussian_window(g);
        let phi2 = SampledSignal::from_fn(g, |t| Complex64::new(1.0, t) * (-2.0 * t * t).exp());
        let p2 = normalize_pair(&phi1, &phi2).unwrap();
        assert!((inner(&phi1, &p2).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn unit_symbol_parametrix_is_identity() {
        let phi = gaussian_window(grid()).normalized().unwrap();
        let b = parametrix(&SymbolExpr::constant(1.0).into(), &phi, &phi).unwrap();
        let bm = matrix(&b).unwrap().entries;
        assert!(linalg::spectral_norm(&(bm - CMatrix::identity(64, 64))) < 1e-8);
    }

    #[test]
    fn constant_symbol_inverts() {
        let phi = gaussian_window(grid());
        let b = parametrix(&SymbolExpr::constant(4.0).into(), &phi, &phi).unwrap();
        let vals = b.symbol_values().unwrap();
        assert!(vals.values().iter().all(|v| (v - 0.25).norm() < 1e-15));
    }

    #[test]
    fn sign_change_is_singular() {
        let phi = gaussian_window(grid());
        let a: SymbolSpec = SymbolExpr::affine(0.05, 1.0, 0.0).into();
        assert!(matches!(parametrix(&a, &phi, &phi), Err(Error::SingularSymbol(_))));
        let zero: SymbolSpec = SymbolExpr::constant(0.0).into();
        assert!(matches!(parametrix(&zero, &phi, &phi), Err(Error::SingularSymbol(_))));
    }

    #[test]
    fn unit_symbol_residual_vanishes() {
        let phi = gaussian_window(grid()).normalized().unwrap();
        let one = WeightSpec::ConstantOne;
        let r = fredholm_check(&SymbolExpr::constant(1.0).into(), &one, &one, &one, &one, &phi, &phi, Side::Left, &FredholmThresholds::default()).unwrap();
        assert!(r.residual_norm <= 1e-6, "{}", r.residual_norm);
        assert_eq!(r.profile.len(), 60);
        assert!((r.cluster_fraction - 1.0).abs() < 1e-12);
    }

    #[test]
    fn split_degenerate_cutoffs() {
        let g = Grid::new(6.0, 32).unwrap();
        let phi = gaussian_window(g).normalized().unwrap();
        let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
        let th = FredholmThresholds::default();
        let zero = cutoff_split_check(&a, &SymbolExpr::constant(0.0).into(), None, &phi, &phi, &th).unwrap();
        assert!(zero.terms[0].iter().all(|v| v.norm() == 0.0));
        assert!(zero.terms[1].iter().all(|v| v.norm() == 0.0));
        let full = cutoff_split_check(&a, &SymbolExpr::constant(1.0).into(), Some(1.0), &phi, &phi, &th).unwrap();
        assert!(full.terms[1].iter().all(|v| v.norm() == 0.0));
        assert!(full.terms[2].iter().all(|v| v.norm() == 0.0));
        assert!(full.identity_error < 1e-12 && zero.identity_error < 1e-12);
        let bad = cutoff_split_check(&a, &SymbolExpr::cutoff(0.5).into(), Some(2.0), &phi, &phi, &th);
        assert!(matches!(bad, Err(Error::Precondition(_))));
    }

    #[test]
    fn solve_trivial_cases() {
        let phi = gaussian_window(grid()).normalized().unwrap();
        let one: SymbolSpec = SymbolExpr::constant(1.0).into();
        let g = SampledSignal::from_real_fn(grid(), |t| (-t * t).exp());
        let r = preconditioned_solve(&one, &phi, &phi, &g, 1e-8).unwrap();
        assert_eq!(r.iterations, 1);
        let z = preconditioned_solve(&one, &phi, &phi, &SampledSignal::zeros(grid()), 1e-8).unwrap();
        assert_eq!(z.iterations, 0);
        assert!(z.solution.is_zero());
    }
}
