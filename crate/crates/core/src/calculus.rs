//! Symbolic calculus for products of localization operators:
//!
//! `A_a^{φ₁,φ₂} A_b^{φ₃,φ₄} = Σ_{|α|<N} c_α A^{Φ_α,φ₂}_{a ∂^α b} + E_N`
//!
//! with the windows `Φ_α`, the remainder computed twice (matrix difference
//! and lattice kernel), and the a-priori bound on `‖E_N‖`.
//!
//! The symmetric variant expands `a` instead of `b`:
//! `A_a^{φ₁,φ₂} A_b^{φ₃,φ₄} = Σ_{|α|<N} c_α A^{φ₃,Ψ_α}_{(∂^α a) b} + Ẽ_N`.
//!
//! Lattice differences `z − y` are taken as minimal images on the periodic
//! lattice; the kernel's Taylor part is written as `b(z) − Σ ∂^α b(y) d^α/α!`,
//! which also accounts for the pairs that straddle the seam.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, ZERO};
use crate::locop::{multiplier_matrix, operator_norm, OperatorMatrix};
use crate::modspace::{m1_norm, MixedNormParams};
use crate::signal::{inner, Grid, PhasePoint, SampledSignal};
use crate::stft::{PhasePlaneArray, StftEngine};
use crate::symbol::SymbolSpec;
use crate::weights::{weighted_sup, WeightSpec};
use crate::windows::{apply_x_beta_partial_alpha, binomial};

/// Largest `|α|` accepted by the window formulas.
pub const WINDOW_ORDER_CAP: usize = 6;
/// Largest expansion length `N`.
pub const EXPANSION_CAP: usize = 4;
/// Upper limit on lattice pairs visited by the kernel path.
pub const KERNEL_PAIR_CAP: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex {
    /// `α₁`, the `x` part
    pub x: usize,
    /// `α₂`, the `ω` part
    pub omega: usize,
}

impl MultiIndex {
    pub const ZERO: Self = Self { x: 0, omega: 0 };

    pub fn new(x: usize, omega: usize) -> Self {
        Self { x, omega }
    }

    pub fn order(&self) -> usize {
        self.x + self.omega
    }

    pub fn factorial(&self) -> f64 {
        factorial(self.x) * factorial(self.omega)
    }

    /// `C(α, β)`; zero unless `β ≤ α`.
    pub fn binomial(&self, beta: &Self) -> f64 {
        binomial(self.x, beta.x) * binomial(self.omega, beta.omega)
    }

    pub fn tuple(&self) -> (usize, usize) {
        (self.x, self.omega)
    }

    /// `d^α` for a phase-plane displacement.
    pub fn monomial(&self, d: PhasePoint<f64>) -> f64 {
        d.x.powi(self.x as i32) * d.omega.powi(self.omega as i32)
    }

    /// All `α` with `|α| = n`, `x` part descending.
    pub fn of_order(n: usize) -> Vec<Self> {
        (0..=n).rev().map(|i| Self::new(i, n - i)).collect()
    }

    /// All `α` with `|α| < n`, by increasing order.
    pub fn below(n: usize) -> Vec<Self> {
        (0..n).flat_map(Self::of_order).collect()
    }
}

impl std::fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.omega)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

fn parity(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_window_order(alpha: MultiIndex) -> Result<()> {
    if alpha.order() > WINDOW_ORDER_CAP {
        return Err(Error::OrderCap { order: alpha.order(), cap: WINDOW_ORDER_CAP });
    }
    Ok(())
}

/// `(2πi)^{-k}`
fn two_pi_i_pow(k: usize) -> Complex64 {
    Complex64::new(0.0, std::f64::consts::TAU).powi(-(k as i32))
}

/// `(2πi)^{-|α₂|} Σ_{β≤α} C(α,β) (−1)^{|β₁|} ⟨p, X^{α₁−β₁}∂^{α₂−β₂} q⟩ X^{β₁}∂^{β₂} r`
fn binomial_window(alpha: MultiIndex, p: &SampledSignal<f64>, q: &SampledSignal<f64>, r: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
    check_window_order(alpha)?;
    p.grid().ensure_same(q.grid())?;
    p.grid().ensure_same(r.grid())?;
    let mut acc = SampledSignal::zeros(*r.grid());
    for b1 in 0..=alpha.x {
        for b2 in 0..=alpha.omega {
            let beta = MultiIndex::new(b1, b2);
            let moment = inner(p, &apply_x_beta_partial_alpha(q, alpha.x - b1, alpha.omega - b2)?)?;
            let c = alpha.binomial(&beta) * parity(b1);
            acc = acc.axpy(moment * c, &apply_x_beta_partial_alpha(r, b1, b2)?)?;
        }
    }
    Ok(acc.scale(two_pi_i_pow(alpha.omega)))
}

/// `Φ_α = (2πi)^{-|α₂|} Σ_{β≤α} C(α,β)(−1)^{|β₁|} ⟨φ₃, X^{α₁−β₁}∂^{α₂−β₂}φ₄⟩ X^{β₁}∂^{β₂}φ₁`.
pub fn phi_alpha(
    alpha: MultiIndex,
    phi1: &SampledSignal<f64>,
    phi3: &SampledSignal<f64>,
    phi4: &SampledSignal<f64>,
) -> Result<SampledSignal<f64>> {
    binomial_window(alpha, phi3, phi4, phi1)
}

/// `Ψ_α = (−1)^{|α|}(2πi)^{-|α₂|} Σ_{β≤α} C(α,β)(−1)^{|β₁|} ⟨φ₂, X^{α₁−β₁}∂^{α₂−β₂}φ₁⟩ X^{β₁}∂^{β₂}φ₄`.
pub fn psi_alpha(
    alpha: MultiIndex,
    phi1: &SampledSignal<f64>,
    phi2: &SampledSignal<f64>,
    phi4: &SampledSignal<f64>,
) -> Result<SampledSignal<f64>> {
    Ok(binomial_window(alpha, phi2, phi1, phi4)?.scale(Complex64::new(parity(alpha.order()), 0.0)))
}

/// Sign rule for the expansion coefficients `c_α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignRule {
    /// `c_α = (−1)^{|α|}/α!` for both the standard and the symmetric products.
    Literal,
    /// `c_α = (−1)^{|α₁|}/α!` with `Φ_α` and `(−1)^{|α₂|}/α!` with `Ψ_α`;
    /// these reproduce the moment identities on the lattice.
    MomentMatched,
}

impl Default for SignRule {
    fn default() -> Self {
        Self::MomentMatched
    }
}

impl SignRule {
    pub fn coefficient(&self, alpha: MultiIndex, symmetric: bool) -> f64 {
        let sign = match (self, symmetric) {
            (Self::Literal, _) => parity(alpha.order()),
            (Self::MomentMatched, false) => parity(alpha.x),
            (Self::MomentMatched, true) => parity(alpha.omega),
        };
        sign / alpha.factorial()
    }
}

/// Brute-force windows defined by the moment identities, synthesized from
/// explicit time-frequency shifts over the whole lattice.
pub mod oracle {
    use super::*;
    use crate::signal::tf_shift;

    fn lattice_points(grid: Grid<f64>) -> impl Iterator<Item = PhasePoint<f64>> {
        let m = grid.points();
        (0..m).flat_map(move |i| (0..m).map(move |j| PhasePoint::new(grid.t(i), grid.omega(j))))
    }

    /// The `Φ` with `Σ_z z^α V_{φ₃}f(z) ⟨π(z)φ₄, φ₁⟩ Δ/L = ⟨f, Φ⟩` for every
    /// sample vector `f`, i.e. `Φ = Σ_z z^α ⟨φ₁, π(z)φ₄⟩ π(z)φ₃ Δ/L`.
    pub fn phi_alpha(
        alpha: MultiIndex,
        phi1: &SampledSignal<f64>,
        phi3: &SampledSignal<f64>,
        phi4: &SampledSignal<f64>,
    ) -> Result<SampledSignal<f64>> {
        moment_window(alpha, phi1, phi4, phi3)
    }

    /// The `Ψ` with `Σ_y y^α ⟨φ₄, π(y)φ₁⟩ ⟨π(y)φ₂, h⟩ Δ/L = ⟨Ψ, h⟩` for every
    /// `h`, i.e. `Ψ = Σ_y y^α ⟨φ₄, π(y)φ₁⟩ π(y)φ₂ Δ/L`.
    pub fn psi_alpha(
        alpha: MultiIndex,
        phi1: &SampledSignal<f64>,
        phi2: &SampledSignal<f64>,
        phi4: &SampledSignal<f64>,
    ) -> Result<SampledSignal<f64>> {
        moment_window(alpha, phi4, phi1, phi2)
    }

    /// `Σ_z z^α ⟨u, π(z)g⟩ π(z)s · Δ/L`.
    fn moment_window(alpha: MultiIndex, u: &SampledSignal<f64>, g: &SampledSignal<f64>, s: &SampledSignal<f64>) -> Result<SampledSignal<f64>> {
        let grid = *u.grid();
        let cell = grid.step() / grid.width();
        let mut acc = SampledSignal::zeros(grid);
        for z in lattice_points(grid) {
            let w = alpha.monomial(z);
            if w == 0.0 {
                continue;
            }
            let c = inner(u, &tf_shift(z, g)?)? * (w * cell);
            acc = acc.axpy(c, &tf_shift(z, s)?)?;
        }
        Ok(acc)
    }
}

/// Relative deviations of the formula windows from the moment oracle under
/// each sign rule; `matched` names the rule with the smaller deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAudit {
    pub alpha: MultiIndex,
    pub symmetric: bool,
    pub literal_error: f64,
    pub moment_matched_error: f64,
    pub matched: SignRule,
}

/// Compares `c_α · window` with `oracle / α!` for both sign rules.
pub fn audit_sign(alpha: MultiIndex, windows: &Windows, symmetric: bool) -> Result<SignAudit> {
    let (formula, oracle) = if symmetric {
        (
            psi_alpha(alpha, &windows.phi1, &windows.phi2, &windows.phi4)?,
            oracle::psi_alpha(alpha, &windows.phi1, &windows.phi2, &windows.phi4)?,
        )
    } else {
        (
            phi_alpha(alpha, &windows.phi1, &windows.phi3, &windows.phi4)?,
            oracle::phi_alpha(alpha, &windows.phi1, &windows.phi3, &windows.phi4)?,
        )
    };
    let want = oracle.scale(Complex64::new(1.0 / alpha.factorial(), 0.0));
    let err = |rule: SignRule| -> Result<f64> {
        let got = formula.scale(Complex64::new(rule.coefficient(alpha, symmetric), 0.0));
        let scale = want.norm().max(f64::MIN_POSITIVE);
        Ok(got.sub(&want)?.norm() / scale)
    };
    let literal_error = err(SignRule::Literal)?;
    let moment_matched_error = err(SignRule::MomentMatched)?;
    let matched = if moment_matched_error <= literal_error { SignRule::MomentMatched } else { SignRule::Literal };
    Ok(SignAudit { alpha, symmetric, literal_error, moment_matched_error, matched })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            // P_n(x) and P_n'(x) by the three-term recurrence
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// `b_N(y,z) = N Σ_{|α|=N} [∫₀¹ (1−t)^{N−1} ∂^α b(y + t(z−y)) dt] (z−y)^α/α!`,
/// with 32-point Gauss–Legendre in `t`.
pub fn taylor_remainder_bn(b: &SymbolSpec, y: PhasePoint<f64>, z: PhasePoint<f64>, n: usize) -> Result<Complex64> {
    if n == 0 {
        return Err(Error::Precondition("remainder order N must be at least 1".into()));
    }
    let expr = b
        .expr()
        .ok_or_else(|| Error::Precondition("the integral form needs a closed-form symbol".into()))?;
    let d = z - y;
    if d.x == 0.0 && d.omega == 0.0 {
        return Ok(ZERO);
    }
    let alphas = MultiIndex::of_order(n);
    let mut acc = ZERO;
    for (t, w) in gauss_legendre(32) {
        let jet = expr.jet(y + d * t, n)?;
        let weight = w * (1.0 - t).powi(n as i32 - 1);
        for a in &alphas {
            acc += jet.derivative(a.x, a.omega) * (weight * a.monomial(d) / a.factorial());
        }
    }
    Ok(acc * n as f64)
}

/// The four windows of a product `A_a^{φ₁,φ₂} A_b^{φ₃,φ₄}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Windows {
    pub phi1: SampledSignal<f64>,
    pub phi2: SampledSignal<f64>,
    pub phi3: SampledSignal<f64>,
    pub phi4: SampledSignal<f64>,
}

impl Windows {
    pub fn new(phi1: SampledSignal<f64>, phi2: SampledSignal<f64>, phi3: SampledSignal<f64>, phi4: SampledSignal<f64>) -> Result<Self> {
        for p in [&phi2, &phi3, &phi4] {
            phi1.grid().ensure_same(p.grid())?;
        }
        phi1.grid().require_1d()?;
        Ok(Self { phi1, phi2, phi3, phi4 })
    }

    pub fn uniform(phi: SampledSignal<f64>) -> Result<Self> {
        Self::new(phi.clone(), phi.clone(), phi.clone(), phi)
    }

    pub fn grid(&self) -> Grid<f64> {
        *self.phi1.grid()
    }
}

/// `E_N` (or `Ẽ_N`) as a lattice kernel, evaluated on demand.
///
/// Standard form: `K(y,z) = a(y) [b(z) − Σ_{|α|<N} ∂^α b(y) d^α/α!] ⟨π(z)φ₄, π(y)φ₁⟩`
/// with `d` the minimal image of `z − y`. Symmetric form:
/// `K(y,z) = b(z) [a(y) − Σ_{|α|<N} ∂^α a(z) (−d)^α/α!] ⟨π(z)φ₄, π(y)φ₁⟩`.
#[derive(Debug, Clone)]
pub struct RemainderKernel {
    grid: Grid<f64>,
    order: usize,
    symmetric: bool,
    /// the factor that is not expanded, on the lattice
    outer: Vec<Complex64>,
    /// the expanded symbol on the lattice
    expanded: Vec<Complex64>,
    expanded_spec: SymbolSpec,
    /// `(α, ∂^α s / α!)` for `|α| < N`
    taylor: Vec<(MultiIndex, Vec<Complex64>)>,
    /// `V_{φ₄}φ₁` on the lattice
    bracket: PhasePlaneArray<f64>,
    /// lattice displacements `(p, q)` kept by the bracket cutoff
    support: Vec<(i64, i64)>,
}

/// One kernel entry split into its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelEntry {
    pub value: Complex64,
    /// `a(y)(b(z) − b(y+d))⟨…⟩`, nonzero only across the seam
    pub seam: Complex64,
}

impl RemainderKernel {
    /// `bracket_cutoff` drops displacements with `|V_{φ₄}φ₁(d)|` below that
    /// fraction of its maximum; `0` keeps every pair.
    pub fn new(
        a: &SymbolSpec,
        b: &SymbolSpec,
        n: usize,
        phi1: &SampledSignal<f64>,
        phi4: &SampledSignal<f64>,
        symmetric: bool,
        bracket_cutoff: f64,
    ) -> Result<Self> {
        if n == 0 || n > EXPANSION_CAP {
            return Err(Error::OrderCap { order: n, cap: EXPANSION_CAP });
        }
        let grid = *phi1.grid();
        grid.ensure_same(phi4.grid())?;
        let lattice = grid.points() * grid.points();
        if lattice.saturating_mul(lattice) > KERNEL_PAIR_CAP {
            return Err(Error::CostCap(format!(
                "kernel path visits {lattice}² lattice pairs, limit is {KERNEL_PAIR_CAP}"
            )));
        }
        let (outer_spec, expanded_spec) = if symmetric { (b, a) } else { (a, b) };
        let outer = outer_spec.values(grid)?.values().to_vec();
        let expanded = expanded_spec.values(grid)?.values().to_vec();
        let mut taylor = Vec::new();
        for alpha in MultiIndex::below(n) {
            let f = alpha.factorial();
            let vals = expanded_spec.derivative(grid, alpha.tuple())?.values().iter().map(|v| v / f).collect();
            taylor.push((alpha, vals));
        }
        let bracket = StftEngine::new(grid)?.stft(phi1, phi4)?;
        let m = grid.points() as i64;
        let half = m / 2;
        let threshold = bracket_cutoff * bracket.max_abs();
        let mut support = Vec::new();
        for p in -half..half {
            for q in -half..half {
                let v = bracket.get((p + half) as usize, (q + half) as usize);
                if v.norm() > threshold || (bracket_cutoff == 0.0) {
                    support.push((p, q));
                }
            }
        }
        Ok(Self { grid, order: n, symmetric, outer, expanded, expanded_spec: expanded_spec.clone(), taylor, bracket, support })
    }

    pub fn grid(&self) -> Grid<f64> {
        self.grid
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    /// Number of displacements kept after the bracket cutoff.
    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    fn side(&self) -> i64 {
        self.grid.points() as i64
    }

    /// `⟨π(z)φ₄, π(y)φ₁⟩ = e^{2πi(ω_z−ω_y)x_y} conj(V_{φ₄}φ₁(z − y))` for
    /// lattice indices `y = (my, ny)` and displacement `(p, q)`.
    fn bracket_at(&self, my: i64, p: i64, q: i64) -> Complex64 {
        let m = self.side();
        let half = m / 2;
        let v = self.bracket.get((p + half) as usize, (q + half) as usize).conj();
        let phase = std::f64::consts::TAU * (q as f64 / self.grid.width()) * self.grid.t(my as usize);
        v * Complex64::from_polar(1.0, phase)
    }

    /// Entry for lattice indices `y = (my, ny)` and minimal-image displacement
    /// `(p, q)` with `p, q ∈ [−M/2, M/2)`.
    fn entry_parts(&self, my: i64, ny: i64, p: i64, q: i64, with_seam: bool) -> Result<KernelEntry> {
        let m = self.side();
        let mz = (my + p).rem_euclid(m);
        let nz = (ny + q).rem_euclid(m);
        let iy = (my * m + ny) as usize;
        let iz = (mz * m + nz) as usize;
        let d = PhasePoint::new(p as f64 * self.grid.step(), q as f64 * self.grid.freq_step());
        let br = self.bracket_at(my, p, q);
        // base point p₀ of the Taylor expansion and displacement e from it
        let (base, far, e, base_pt) = if self.symmetric {
            (iz, iy, -d, PhasePoint::new(self.grid.t(mz as usize), self.grid.omega(nz as usize)))
        } else {
            (iy, iz, d, PhasePoint::new(self.grid.t(my as usize), self.grid.omega(ny as usize)))
        };
        let mut poly = ZERO;
        for (alpha, vals) in &self.taylor {
            poly += vals[base] * alpha.monomial(e);
        }
        let outer = self.outer[base];
        let value = outer * (self.expanded[far] - poly) * br;
        let wrapped = {
            let (mb, nb) = if self.symmetric { (mz, nz) } else { (my, ny) };
            let (ps, qs) = if self.symmetric { (-p, -q) } else { (p, q) };
            let ux = mb + ps;
            let uw = nb + qs;
            ux < 0 || ux >= m || uw < 0 || uw >= m
        };
        let seam = if with_seam && wrapped && outer != ZERO {
            match self.expanded_spec.eval(base_pt + e) {
                Ok(s_unwrapped) => outer * (self.expanded[far] - s_unwrapped) * br,
                Err(_) => ZERO,
            }
        } else {
            ZERO
        };
        Ok(KernelEntry { value, seam })
    }

    fn split(&self, idx: usize) -> (i64, i64) {
        let m = self.side() as usize;
        ((idx / m) as i64, (idx % m) as i64)
    }

    fn displacement(&self, y: usize, z: usize) -> (i64, i64) {
        let m = self.side();
        let half = m / 2;
        let (my, ny) = self.split(y);
        let (mz, nz) = self.split(z);
        ((mz - my + half).rem_euclid(m) - half, (nz - ny + half).rem_euclid(m) - half)
    }

    /// `K(y, z)` for flattened lattice indices (x-major).
    pub fn entry(&self, y: usize, z: usize) -> Result<KernelEntry> {
        let (my, ny) = self.split(y);
        let (p, q) = self.displacement(y, z);
        self.entry_parts(my, ny, p, q, true)
    }

    /// The same entry with `b_N` from the Gauss–Legendre integral form and the
    /// seam part added back: `a(y)[b_N(y, y+d) + b(z) − b(y+d)]⟨…⟩`.
    pub fn entry_integral_form(&self, y: usize, z: usize) -> Result<Complex64> {
        let (my, ny) = self.split(y);
        let (mz, nz) = self.split(z);
        let (p, q) = self.displacement(y, z);
        let d = PhasePoint::new(p as f64 * self.grid.step(), q as f64 * self.grid.freq_step());
        let br = self.bracket_at(my, p, q);
        let m = self.side() as usize;
        let (base, far, base_pt, e) = if self.symmetric {
            ((mz as usize) * m + nz as usize, y, PhasePoint::new(self.grid.t(mz as usize), self.grid.omega(nz as usize)), -d)
        } else {
            (y, (mz as usize) * m + nz as usize, PhasePoint::new(self.grid.t(my as usize), self.grid.omega(ny as usize)), d)
        };
        let bn = taylor_remainder_bn(&self.expanded_spec, base_pt, base_pt + e, self.order)?;
        let seam = self.expanded[far] - self.expanded_spec.eval(base_pt + e)?;
        Ok(self.outer[base] * (bn + seam) * br)
    }

    /// `|K(y,z)| / (v(d)⟨d⟩^N |V_{φ₄}φ₁(d)|)` maximized over kept pairs that
    /// do not straddle the seam, using the unwrapped Taylor remainder.
    pub fn domination_ratio(&self, v: &WeightSpec) -> Result<f64> {
        let m = self.side();
        let half = m / 2;
        let poly_n = WeightSpec::polynomial(self.order as f64);
        let mut worst: f64 = 0.0;
        for my in 0..m {
            for ny in 0..m {
                for &(p, q) in &self.support {
                    let parts = self.entry_parts(my, ny, p, q, true)?;
                    let k = (parts.value - parts.seam).norm();
                    if k == 0.0 {
                        continue;
                    }
                    let d = PhasePoint::new(p as f64 * self.grid.step(), q as f64 * self.grid.freq_step());
                    let den = v.eval(d) * poly_n.eval(d) * self.bracket.get((p + half) as usize, (q + half) as usize).norm();
                    if den > 0.0 {
                        worst = worst.max(k / den);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// `E_N` and its seam part as operators, from the `z`-sum of the kernel.
#[derive(Debug, Clone)]
pub struct KernelOperator {
    pub full: OperatorMatrix,
    /// Contribution of pairs across the seam.
    pub seam: OperatorMatrix,
}

/// `E_N f = V*_{φ₂}(T V_{φ₃} f)` with `T H(y) = Σ_z K(y,z) H(z) Δ/L`.
pub fn remainder_operator_from_kernel(
    kernel: &RemainderKernel,
    phi2: &SampledSignal<f64>,
    phi3: &SampledSignal<f64>,
) -> Result<KernelOperator> {
    let grid = kernel.grid();
    grid.ensure_same(phi2.grid())?;
    grid.ensure_same(phi3.grid())?;
    let m = grid.points();
    let lattice = m * m;
    let engine = StftEngine::new(grid)?;
    // rows z of V_{φ₃}, columns sample index j
    let mut v3 = vec![ZERO; lattice * m];
    for j in 0..m {
        let col = engine.stft(&SampledSignal::unit(grid, j), phi3)?;
        for (z, v) in col.values().iter().enumerate() {
            v3[z * m + j] = *v;
        }
    }
    let cell = grid.step() / grid.width();
    let mut w = vec![ZERO; lattice * m];
    let mut ws = vec![ZERO; lattice * m];
    let mi = m as i64;
    for y in 0..lattice {
        let (my, ny) = ((y / m) as i64, (y % m) as i64);
        let (row, row_s) = (&mut w[y * m..(y + 1) * m], &mut ws[y * m..(y + 1) * m]);
        for &(p, q) in &kernel.support {
            let parts = kernel.entry_parts(my, ny, p, q, true)?;
            let z = ((my + p).rem_euclid(mi) * mi + (ny + q).rem_euclid(mi)) as usize;
            let src = &v3[z * m..(z + 1) * m];
            if parts.value != ZERO {
                let k = parts.value * cell;
                for (r, s) in row.iter_mut().zip(src) {
                    *r += k * s;
                }
            }
            if parts.seam != ZERO {
                let k = parts.seam * cell;
                for (r, s) in row_s.iter_mut().zip(src) {
                    *r += k * s;
                }
            }
        }
    }
    let synth = |buf: &[Complex64]| -> Result<CMatrix> {
        let mut out = CMatrix::zeros(m, m);
        for j in 0..m {
            let vals: Vec<Complex64> = (0..lattice).map(|y| buf[y * m + j]).collect();
            let col = engine.adjoint(&PhasePlaneArray::new(grid, vals)?, phi2)?;
            out.column_mut(j).copy_from_slice(col.samples());
        }
        Ok(out)
    };
    Ok(KernelOperator { full: OperatorMatrix::plain(grid, synth(&w)?), seam: OperatorMatrix::plain(grid, synth(&ws)?) })
}

/// Weights entering the remainder estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalculusWeights {
    pub m: WeightSpec,
    pub v: WeightSpec,
    pub w: WeightSpec,
    pub mu: WeightSpec,
}

impl Default for CalculusWeights {
    fn default() -> Self {
        Self { m: WeightSpec::ConstantOne, v: WeightSpec::ConstantOne, w: WeightSpec::ConstantOne, mu: WeightSpec::ConstantOne }
    }
}

/// `‖a‖_{L^∞_{1/m}} (Σ_{|α|=N} ‖∂^α b‖_{L^∞_m}/α!) ‖φ₁‖_{M¹_{vw⟨·⟩^N}} ‖φ₂‖_{M¹_w}
/// ‖φ₃‖_{M¹_w} ‖φ₄‖_{M¹_{vw⟨·⟩^N}}`; with `symmetric` the roles of `a` and `b` swap.
pub fn remainder_bound(
    a: &SymbolSpec,
    b: &SymbolSpec,
    n: usize,
    weights: &CalculusWeights,
    windows: &Windows,
    symmetric: bool,
) -> Result<f64> {
    let grid = windows.grid();
    let (outer, expanded) = if symmetric { (b, a) } else { (a, b) };
    let outer_norm = weighted_sup(&outer.values(grid)?, &WeightSpec::reciprocal(weights.m.clone()));
    if outer_norm == 0.0 {
        return Ok(0.0);
    }
    let mut derivs = 0.0;
    for alpha in MultiIndex::of_order(n) {
        derivs += weighted_sup(&expanded.derivative(grid, alpha.tuple())?, &weights.m) / alpha.factorial();
    }
    if derivs == 0.0 {
        return Ok(0.0);
    }
    let heavy = WeightSpec::product(
        WeightSpec::product(weights.v.clone(), weights.w.clone()),
        WeightSpec::polynomial(n as f64),
    );
    let windows_norm = m1_norm(&windows.phi1, &heavy)?
        * m1_norm(&windows.phi2, &weights.w)?
        * m1_norm(&windows.phi3, &weights.w)?
        * m1_norm(&windows.phi4, &heavy)?;
    Ok(outer_norm * derivs * windows_norm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpandOptions {
    /// Expand `a` around `z` instead of `b` around `y`.
    pub symmetric: bool,
    pub sign_rule: SignRule,
    /// Compute the kernel-path remainder.
    pub kernel: bool,
    /// Relative cutoff on `|V_{φ₄}φ₁|` for the kernel sum.
    pub bracket_cutoff: f64,
    pub weights: CalculusWeights,
    /// Seed for the operator-norm iteration and the sampled integral-form check.
    pub seed: u64,
    /// Pairs sampled for the integral-form comparison (closed-form symbols only).
    pub integral_form_samples: usize,
}

impl Default for ExpandOptions {
    fn default() -> Self {
        Self {
            symmetric: false,
            sign_rule: SignRule::MomentMatched,
            kernel: true,
            bracket_cutoff: 1e-15,
            weights: CalculusWeights::default(),
            seed: 0,
            integral_form_samples: 64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExpansionTerm {
    pub alpha: MultiIndex,
    pub coefficient: f64,
    /// `a ∂^α b` (or `(∂^α a) b`) on the lattice
    pub symbol: PhasePlaneArray<f64>,
    /// `(analysis, synthesis)`: `(Φ_α, φ₂)` or `(φ₃, Ψ_α)`
    pub windows: (SampledSignal<f64>, SampledSignal<f64>),
    /// `c_α` times the matrix of the localization operator
    pub term_matrix: OperatorMatrix,
}

#[derive(Debug, Clone)]
pub struct CalculusReport {
    pub n: usize,
    pub symmetric: bool,
    pub sign_rule: SignRule,
    pub terms: Vec<ExpansionTerm>,
    pub lhs_matrix: OperatorMatrix,
    pub remainder_diff: OperatorMatrix,
    pub remainder_kernel: Option<OperatorMatrix>,
    pub bound_value: f64,
    /// `‖remainder_diff‖` in `M²_μ`
    pub measured_norm: f64,
    pub lhs_norm: f64,
    /// `‖diff − kernel‖ / ‖diff‖`, absent when `‖diff‖ ≤ 1e-12 ‖LHS‖`
    pub kernel_vs_diff_error: Option<f64>,
    /// `‖diff − kernel‖ / ‖LHS‖`
    pub kernel_vs_lhs_error: Option<f64>,
    /// `‖seam part‖ / ‖kernel‖`
    pub seam_fraction: Option<f64>,
    /// Largest relative gap between the kernel entries and the integral form
    /// of `b_N` over the sampled pairs.
    pub integral_form_error: Option<f64>,
}

impl CalculusReport {
    pub fn sum_of_terms(&self) -> CMatrix {
        let m = self.lhs_matrix.entries.nrows();
        self.terms.iter().fold(CMatrix::zeros(m, m), |acc, t| acc + &t.term_matrix.entries)
    }
}

fn symbol_matrix(sym: &PhasePlaneArray<f64>, analysis: &SampledSignal<f64>, synthesis: &SampledSignal<f64>) -> Result<CMatrix> {
    multiplier_matrix(sym, analysis, synthesis)
}

/// The `N`-term expansion of `A_a^{φ₁,φ₂} A_b^{φ₃,φ₄}` with both remainder paths.
pub fn expand(a: &SymbolSpec, b: &SymbolSpec, n: usize, windows: &Windows, options: &ExpandOptions) -> Result<CalculusReport> {
    if n == 0 || n > EXPANSION_CAP {
        return Err(Error::OrderCap { order: n, cap: EXPANSION_CAP });
    }
    let grid = windows.grid();
    let Windows { phi1, phi2, phi3, phi4 } = windows;
    let a_vals = a.values(grid)?;
    let b_vals = b.values(grid)?;
    let lhs = symbol_matrix(&a_vals, phi1, phi2)? * symbol_matrix(&b_vals, phi3, phi4)?;
    let symmetric = options.symmetric;

    let mut terms = Vec::new();
    let mut sum = CMatrix::zeros(grid.points(), grid.points());
    for alpha in MultiIndex::below(n) {
        let coefficient = options.sign_rule.coefficient(alpha, symmetric);
        let (symbol, pair) = if symmetric {
            let s = a.derivative(grid, alpha.tuple())?.hadamard(&b_vals)?;
            (s, (phi3.clone(), psi_alpha(alpha, phi1, phi2, phi4)?))
        } else {
            let s = a_vals.hadamard(&b.derivative(grid, alpha.tuple())?)?;
            (s, (phi_alpha(alpha, phi1, phi3, phi4)?, phi2.clone()))
        };
        let entries = symbol_matrix(&symbol, &pair.0, &pair.1)? * Complex64::new(coefficient, 0.0);
        sum += &entries;
        terms.push(ExpansionTerm { alpha, coefficient, symbol, windows: pair, term_matrix: OperatorMatrix::plain(grid, entries) });
    }

    let mu = MixedNormParams::hilbert(options.weights.mu.clone());
    let geometry = |e: CMatrix| OperatorMatrix::new(grid, e, mu.clone(), mu.clone());
    let diff = &lhs - &sum;
    let measured_norm = operator_norm(&geometry(diff.clone()))?;
    let lhs_norm = linalg::spectral_norm(&lhs);
    let diff_plain = linalg::spectral_norm(&diff);

    let mut remainder_kernel = None;
    let mut kernel_vs_diff_error = None;
    let mut kernel_vs_lhs_error = None;
    let mut seam_fraction = None;
    let mut integral_form_error = None;
    if options.kernel {
        let kernel = RemainderKernel::new(a, b, n, phi1, phi4, symmetric, options.bracket_cutoff)?;
        let op = remainder_operator_from_kernel(&kernel, phi2, phi3)?;
        let gap = linalg::spectral_norm(&(&diff - &op.full.entries));
        if lhs_norm > 0.0 {
            kernel_vs_lhs_error = Some(gap / lhs_norm);
        }
        if diff_plain > 1e-12 * lhs_norm && diff_plain > 0.0 {
            kernel_vs_diff_error = Some(gap / diff_plain);
        }
        let kn = linalg::spectral_norm(&op.full.entries);
        if kn > 0.0 {
            seam_fraction = Some(linalg::spectral_norm(&op.seam.entries) / kn);
        }
        if a.expr().is_some() && b.expr().is_some() && options.integral_form_samples > 0 {
            integral_form_error = Some(integral_form_gap(&kernel, options.integral_form_samples, options.seed)?);
        }
        remainder_kernel = Some(geometry(op.full.entries));
    }

    let bound_value = remainder_bound(a, b, n, &options.weights, windows, symmetric)?;
    Ok(CalculusReport {
        n,
        symmetric,
        sign_rule: options.sign_rule,
        terms,
        lhs_matrix: geometry(lhs),
        remainder_diff: geometry(diff),
        remainder_kernel,
        bound_value,
        measured_norm,
        lhs_norm,
        kernel_vs_diff_error,
        kernel_vs_lhs_error,
        seam_fraction,
        integral_form_error,
    })
}

/// Largest `|K − K_int| / max|K|` over seeded random pairs among the kept
/// displacements.
fn integral_form_gap(kernel: &RemainderKernel, samples: usize, seed: u64) -> Result<f64> {
    let m = kernel.grid().points();
    let lattice = m * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut pairs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let y = rng.gen_range(0..lattice);
        let (p, q) = kernel.support[rng.gen_range(0..kernel.support.len())];
        let (my, ny) = ((y / m) as i64, (y % m) as i64);
        let mi = m as i64;
        let z = ((my + p).rem_euclid(mi) * mi + (ny + q).rem_euclid(mi)) as usize;
        let fast = kernel.entry(y, z)?.value;
        let slow = kernel.entry_integral_form(y, z)?;
        scale = scale.max(fast.norm());
        pairs.push((fast, slow));
    }
    for (fast, slow) in pairs {
        worst = worst.max((fast - slow).norm());
    }
    Ok(if scale > 0.0 { worst / scale } else { worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::gaussian_window;
    use crate::symbol::SymbolExpr;
    use crate::windows::hermite;

    fn grid() -> Grid<f64> {
        Grid::new(8.0, 32).unwrap()
    }

    fn mixed_windows(g: Grid<f64>) -> Windows {
        let h0 = hermite(0, g);
        let h1 = hermite(1, g);
        let phi2 = SampledSignal::from_real_fn(g, |t| (-1.3 * std::f64::consts::PI * t * t).exp());
        let phi3 = h0.axpy(Complex64::new(0.3, 0.2), &h1).unwrap();
        let phi4 = SampledSignal::from_fn(g, |t| Complex64::new((-std::f64::consts::PI * (t - 0.2).powi(2)).exp(), 0.2 * t * (-4.0 * t * t).exp()));
        Windows::new(h0, phi2, phi3, phi4).unwrap()
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(MultiIndex::below(3).len(), 6);
        assert_eq!(MultiIndex::of_order(2), vec![MultiIndex::new(2, 0), MultiIndex::new(1, 1), MultiIndex::new(0, 2)]);
        assert_eq!(MultiIndex::new(4, 4).factorial(), 576.0);
        assert_eq!(MultiIndex::new(3, 2).binomial(&MultiIndex::new(1, 1)), 6.0);
        assert_eq!(MultiIndex::new(1, 0).binomial(&MultiIndex::new(0, 1)), 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre(32);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-14);
        for k in [1, 7, 20, 63] {
            let got: f64 = rule.iter().map(|(t, w)| w * t.powi(k)).sum();
            assert!((got - 1.0 / (k as f64 + 1.0)).abs() < 1e-13, "k = {k}");
        }
    }

    #[test]
    fn zeroth_windows() {
        let w = mixed_windows(grid());
        let phi0 = phi_alpha(MultiIndex::ZERO, &w.phi1, &w.phi3, &w.phi4).unwrap();
        let want = w.phi1.scale(inner(&w.phi3, &w.phi4).unwrap());
        assert!(phi0.sub(&want).unwrap().max_abs() < 1e-14);
        let psi0 = psi_alpha(MultiIndex::ZERO, &w.phi1, &w.phi2, &w.phi4).unwrap();
        let want = w.phi4.scale(inner(&w.phi2, &w.phi1).unwrap());
        assert!(psi0.sub(&want).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn windows_order_cap() {
        let w = mixed_windows(grid());
        assert!(matches!(
            phi_alpha(MultiIndex::new(4, 3), &w.phi1, &w.phi3, &w.phi4),
            Err(Error::OrderCap { order: 7, .. })
        ));
    }

    #[test]
    fn kernel_cap() {
        let g = Grid::new(12.0, 128).unwrap();
        let phi = gaussian_window(g);
        let one: SymbolSpec = SymbolExpr::constant(1.0).into();
        assert!(matches!(RemainderKernel::new(&one, &one, 1, &phi, &phi, false, 0.0), Err(Error::CostCap(_))));
    }

    #[test]
    fn kernel_diagonal_vanishes() {
        let w = mixed_windows(grid());
        let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
        let b: SymbolSpec = SymbolExpr::japanese(-1.0).into();
        let k = RemainderKernel::new(&a, &b, 1, &w.phi1, &w.phi4, false, 0.0).unwrap();
        for y in [0, 17, 300, 1023] {
            assert_eq!(k.entry(y, y).unwrap().value, ZERO);
        }
    }

    #[test]
    fn quadratic_remainder_value() {
        let b: SymbolSpec = SymbolExpr::japanese(2.0).into();
        let v = taylor_remainder_bn(&b, PhasePoint::origin(), PhasePoint::new(1.0, 1.0), 2).unwrap();
        assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn moment_matched_signs() {
        let w = mixed_windows(Grid::new(8.0, 64).unwrap());
        for symmetric in [false, true] {
            for alpha in MultiIndex::below(3).into_iter().skip(1) {
                let audit = audit_sign(alpha, &w, symmetric).unwrap();
                assert!(audit.moment_matched_error < 1e-10, "{audit:?}");
                let odd = if symmetric { alpha.x % 2 == 1 } else { alpha.omega % 2 == 1 };
                if odd {
                    assert!((audit.literal_error - 2.0).abs() < 1e-8, "{audit:?}");
                }
            }
        }
    }

    #[test]
    fn identity_pair_has_no_remainder() {
        let g = grid();
        let phi = gaussian_window(g).normalized().unwrap();
        let one: SymbolSpec = SymbolExpr::constant(1.0).into();
        let r = expand(&one, &one, 1, &Windows::uniform(phi).unwrap(), &ExpandOptions::default()).unwrap();
        assert_eq!(r.terms.len(), 1);
        let id = CMatrix::identity(32, 32);
        assert!(linalg::spectral_norm(&(&r.terms[0].term_matrix.entries - id)) < 1e-8);
        assert!(r.measured_norm < 1e-6);
        assert!(linalg::spectral_norm(&r.remainder_kernel.unwrap().entries) < 1e-6);
    }

    #[test]
    fn kernel_matches_difference_small_grid() {
        let w = mixed_windows(Grid::new(32f64.sqrt(), 32).unwrap());
        let a: SymbolSpec = SymbolExpr::japanese(1.0).into();
        let b: SymbolSpec = SymbolExpr::gaussian(2.0).into();
        for n in [1, 2] {
            let r = expand(&a, &b, n, &w, &ExpandOptions::default()).unwrap();
            assert!(r.kernel_vs_diff_error.unwrap() < 1e-7, "{:?}", r.kernel_vs_diff_error);
            assert!(r.integral_form_error.unwrap() < 1e-10);
        }
    }

    #[test]
    fn zero_symbol_gives_zero_kernel_and_bound() {
        let w = mixed_windows(grid());
        let zero: SymbolSpec = SymbolExpr::constant(0.0).into();
        let b: SymbolSpec = SymbolExpr::japanese(-1.0).into();
        let k = RemainderKernel::new(&zero, &b, 2, &w.phi1, &w.phi4, false, 0.0).unwrap();
        let op = remainder_operator_from_kernel(&k, &w.phi2, &w.phi3).unwrap();
        assert!(op.full.entries.iter().all(|v| *v == ZERO));
        assert_eq!(remainder_bound(&zero, &b, 2, &CalculusWeights::default(), &w, false).unwrap(), 0.0);
        let affine: SymbolSpec = SymbolExpr::affine(1.0, 2.0, -1.0).into();
        assert_eq!(remainder_bound(&b, &affine, 2, &CalculusWeights::default(), &w, false).unwrap(), 0.0);
    }
}
