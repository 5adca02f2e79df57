//! Phase-plane symbols with exact derivatives.
//!
//! Closed-form symbols are expression trees evaluated on truncated bivariate
//! Taylor jets, so every partial derivative up to [`JET_ORDER_CAP`] is exact
//! to rounding. Sampled symbols carry lattice values and differentiate by
//! centered differences up to order 2.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{is_finite_c, Real};
use crate::signal::{Grid, PhasePoint};
use crate::stft::PhasePlaneArray;
use crate::weights::WeightSpec;

pub const JET_ORDER_CAP: usize = 8;
pub const SAMPLED_ORDER_CAP: usize = 2;

/// Truncated Taylor polynomial `Σ_{i+j≤N} c_{ij} dx^i dω^j` around a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet<T: Real> {
    order: usize,
    c: Vec<Complex<T>>,
}

fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |a, k| a * k as f64)
}

impl<T: Real> Jet<T> {
    fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.order + 1) + j
    }

    pub fn constant(v: Complex<T>, order: usize) -> Self {
        let mut c = vec![Complex::new(T::zero(), T::zero()); (order + 1) * (order + 1)];
        c[0] = v;
        Self { order, c }
    }

    pub fn real(v: T, order: usize) -> Self {
        Self::constant(Complex::new(v, T::zero()), order)
    }

    /// The coordinate `x` as a jet at `x0`.
    pub fn var_x(x0: T, order: usize) -> Self {
        let mut j = Self::real(x0, order);
        if order > 0 {
            let k = j.idx(1, 0);
            j.c[k] = Complex::new(T::one(), T::zero());
        }
        j
    }

    pub fn var_omega(w0: T, order: usize) -> Self {
        let mut j = Self::real(w0, order);
        if order > 0 {
            let k = j.idx(0, 1);
            j.c[k] = Complex::new(T::one(), T::zero());
        }
        j
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> Complex<T> {
        self.c[0]
    }

    pub fn coefficient(&self, i: usize, j: usize) -> Complex<T> {
        if i + j > self.order {
            Complex::new(T::zero(), T::zero())
        } else {
            self.c[self.idx(i, j)]
        }
    }

    /// `∂_x^i ∂_ω^j` at the expansion point.
    pub fn derivative(&self, i: usize, j: usize) -> Complex<T> {
        self.coefficient(i, j) * T::lit(factorial(i) * factorial(j))
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|v| is_finite_c(*v))
    }

    fn zip(&self, other: &Self, f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>) -> Self {
        debug_assert_eq!(self.order, other.order);
        Self { order: self.order, c: self.c.iter().zip(&other.c).map(|(&a, &b)| f(a, b)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { order: self.order, c: self.c.iter().map(|&a| a * s).collect() }
    }

    pub fn add_const(&self, s: Complex<T>) -> Self {
        let mut out = self.clone();
        out.c[0] = out.c[0] + s;
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let n = self.order;
        let mut out = Self::real(T::zero(), n);
        for i1 in 0..=n {
            for j1 in 0..=(n - i1) {
                let a = self.c[self.idx(i1, j1)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for i2 in 0..=(n - i1 - j1) {
                    for j2 in 0..=(n - i1 - j1 - i2) {
                        let k = out.idx(i1 + i2, j1 + j2);
                        out.c[k] = out.c[k] + a * other.c[other.idx(i2, j2)];
                    }
                }
            }
        }
        out
    }

    /// `g ∘ self` from the derivatives `g^{(k)}(u₀)`, `k = 0..=order`, at the
    /// jet's value `u₀`.
    pub fn compose(&self, derivs: &[Complex<T>]) -> Self {
        let n = self.order;
        debug_assert!(derivs.len() > n);
        let mut delta = self.clone();
        delta.c[0] = Complex::new(T::zero(), T::zero());
        let mut r = Self::constant(derivs[n] / T::lit(factorial(n)), n);
        for k in (0..n).rev() {
            r = r.mul(&delta).add_const(derivs[k] / T::lit(factorial(k)));
        }
        r
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&vec![e; self.order + 1])
    }

    /// `self^p` on the principal branch; exact falling factorials for
    /// nonnegative integer `p`.
    pub fn powf(&self, p: f64) -> Self {
        let u0 = self.value();
        let integer = p >= 0.0 && p.fract() == 0.0;
        let mut derivs = Vec::with_capacity(self.order + 1);
        let mut falling = 1.0;
        for k in 0..=self.order {
            let e = p - k as f64;
            let d = if integer && e < 0.0 {
                Complex::new(T::zero(), T::zero())
            } else if integer {
                u0.powi(e as i32)
            } else if u0.im == T::zero() && u0.re > T::zero() {
                Complex::new(u0.re.powf(T::lit(e)), T::zero())
            } else {
                u0.powf(T::lit(e))
            };
            derivs.push(d * T::lit(falling));
            falling *= e;
        }
        self.compose(&derivs)
    }

    pub fn recip(&self) -> Self {
        let u0 = self.value();
        let mut derivs = Vec::with_capacity(self.order + 1);
        let inv = u0.inv();
        let mut p = inv;
        for k in 0..=self.order {
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            derivs.push(p * T::lit(factorial(k)) * sign);
            p = p * inv;
        }
        self.compose(&derivs)
    }
}

/// Closed-form symbol. Configuration files use the tag `kind`, e.g.
/// `{ kind = "weight", weight = { family = "polynomial", s = 1.0 } }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SymbolExpr {
    Constant {
        re: f64,
        #[serde(default)]
        im: f64,
    },
    /// A weight used as a symbol.
    Weight { weight: WeightSpec },
    /// `c0 + cx·x + comega·ω`
    Affine { c0: f64, cx: f64, comega: f64 },
    /// `Σ coef · x^i ω^j`
    Polynomial { terms: Vec<Monomial> },
    /// `e^{-((x-x0)² + (ω-ω0)²)/width²}`
    Gaussian {
        #[serde(default)]
        x0: f64,
        #[serde(default)]
        omega0: f64,
        width: f64,
    },
    /// `|z|^b`
    RadialPower { b: f64 },
    /// Radial cutoff: `1` on `|z| ≤ r0`, smooth step down to `0` at `r0 + width`.
    Cutoff {
        r0: f64,
        #[serde(default = "default_cutoff_width")]
        width: f64,
    },
    /// `inner(λz)`
    Dilate { lambda: f64, inner: Box<SymbolExpr> },
    Product { factors: Vec<SymbolExpr> },
    Sum { terms: Vec<SymbolExpr> },
    Scale { re: f64, #[serde(default)] im: f64, inner: Box<SymbolExpr> },
    Reciprocal { inner: Box<SymbolExpr> },
    Conjugate { inner: Box<SymbolExpr> },
}

fn default_cutoff_width() -> f64 {
    2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub i: u32,
    pub j: u32,
    pub coef: f64,
}

/// `e^{-1/t}/(e^{-1/t} + e^{-1/(1-t)})` on a jet with value in `(0, 1)`.
fn smooth_step<T: Real>(t: &Jet<T>) -> Jet<T> {
    let n = t.order();
    let one = Complex::new(T::one(), T::zero());
    let f = |u: &Jet<T>| u.recip().scale(-one).exp();
    let s = Jet::constant(one, n).sub(t);
    let ft = f(t);
    let fs = f(&s);
    ft.mul(&ft.add(&fs).recip())
}

fn weight_jet<T: Real>(w: &WeightSpec, x: &Jet<T>, y: &Jet<T>) -> Jet<T> {
    let n = x.order();
    let one = Complex::new(T::one(), T::zero());
    let r2 = x.mul(x).add(&y.mul(y));
    match w {
        WeightSpec::Polynomial { s } => r2.add_const(one).powf(s / 2.0),
        WeightSpec::Subexponential { a, b } => {
            if *a == 0.0 {
                Jet::constant(one, n)
            } else {
                r2.powf(b / 2.0).scale(Complex::new(T::lit(*a), T::zero())).exp()
            }
        }
        WeightSpec::ProductPolynomial { s } => {
            x.mul(x).add_const(one).powf(s / 2.0).mul(&y.mul(y).add_const(one).powf(s / 2.0))
        }
        WeightSpec::TensorPolynomial { sx, somega } => {
            x.mul(x).add_const(one).powf(sx / 2.0).mul(&y.mul(y).add_const(one).powf(somega / 2.0))
        }
        WeightSpec::ConstantOne => Jet::constant(one, n),
        WeightSpec::ProductOf { left, right } => weight_jet(left, x, y).mul(&weight_jet(right, x, y)),
        WeightSpec::ReciprocalOf { inner } => weight_jet(inner, x, y).recip(),
    }
}

impl SymbolExpr {
    pub fn constant(c: f64) -> Self {
        Self::Constant { re: c, im: 0.0 }
    }

    pub fn weight(w: WeightSpec) -> Self {
        Self::Weight { weight: w }
    }

    /// `⟨z⟩^s`
    pub fn japanese(s: f64) -> Self {
        Self::weight(WeightSpec::polynomial(s))
    }

    pub fn affine(c0: f64, cx: f64, comega: f64) -> Self {
        Self::Affine { c0, cx, comega }
    }

    pub fn polynomial(terms: &[(u32, u32, f64)]) -> Self {
        Self::Polynomial { terms: terms.iter().map(|&(i, j, coef)| Monomial { i, j, coef }).collect() }
    }

    pub fn gaussian(width: f64) -> Self {
        Self::Gaussian { x0: 0.0, omega0: 0.0, width }
    }

    pub fn cutoff(r0: f64) -> Self {
        Self::Cutoff { r0, width: default_cutoff_width() }
    }

    pub fn dilate(self, lambda: f64) -> Self {
        Self::Dilate { lambda, inner: Box::new(self) }
    }

    pub fn times(self, other: SymbolExpr) -> Self {
        Self::Product { factors: vec![self, other] }
    }

    pub fn plus(self, other: SymbolExpr) -> Self {
        Self::Sum { terms: vec![self, other] }
    }

    pub fn scaled(self, c: f64) -> Self {
        Self::Scale { re: c, im: 0.0, inner: Box::new(self) }
    }

    pub fn recip(self) -> Self {
        Self::Reciprocal { inner: Box::new(self) }
    }

    pub fn conj(self) -> Self {
        Self::Conjugate { inner: Box::new(self) }
    }

    /// `1 - self`
    pub fn one_minus(self) -> Self {
        Self::constant(1.0).plus(self.scaled(-1.0))
    }

    /// Taylor jet of order `order` at `z`.
    pub fn jet<T: Real>(&self, z: PhasePoint<T>, order: usize) -> Result<Jet<T>> {
        if order > JET_ORDER_CAP {
            return Err(Error::OrderCap { order, cap: JET_ORDER_CAP });
        }
        Ok(self.jet_vars(&Jet::var_x(z.x, order), &Jet::var_omega(z.omega, order)))
    }

    fn jet_vars<T: Real>(&self, x: &Jet<T>, y: &Jet<T>) -> Jet<T> {
        let n = x.order();
        let c = |re: f64, im: f64| Complex::new(T::lit(re), T::lit(im));
        match self {
            Self::Constant { re, im } => Jet::constant(c(*re, *im), n),
            Self::Weight { weight } => weight_jet(weight, x, y),
            Self::Affine { c0, cx, comega } => x.scale(c(*cx, 0.0)).add(&y.scale(c(*comega, 0.0))).add_const(c(*c0, 0.0)),
            Self::Polynomial { terms } => {
                let mut acc = Jet::real(T::zero(), n);
                for t in terms {
                    let mut m = Jet::real(T::one(), n);
                    for _ in 0..t.i {
                        m = m.mul(x);
                    }
                    for _ in 0..t.j {
                        m = m.mul(y);
                    }
                    acc = acc.add(&m.scale(c(t.coef, 0.0)));
                }
                acc
            }
            Self::Gaussian { x0, omega0, width } => {
                let dx = x.add_const(c(-x0, 0.0));
                let dy = y.add_const(c(-omega0, 0.0));
                dx.mul(&dx).add(&dy.mul(&dy)).scale(c(-1.0 / (width * width), 0.0)).exp()
            }
            Self::RadialPower { b } => x.mul(x).add(&y.mul(y)).powf(b / 2.0),
            Self::Cutoff { r0, width } => {
                let r = (x.value().re * x.value().re + y.value().re * y.value().re).sqrt();
                if r <= T::lit(*r0) {
                    Jet::real(T::one(), n)
                } else if r >= T::lit(r0 + width) {
                    Jet::real(T::zero(), n)
                } else {
                    let rj = x.mul(x).add(&y.mul(y)).powf(0.5);
                    let t = rj.scale(c(-1.0 / width, 0.0)).add_const(c((r0 + width) / width, 0.0));
                    smooth_step(&t)
                }
            }
            Self::Dilate { lambda, inner } => inner.jet_vars(&x.scale(c(*lambda, 0.0)), &y.scale(c(*lambda, 0.0))),
            Self::Product { factors } => factors
                .iter()
                .fold(Jet::real(T::one(), n), |acc, f| acc.mul(&f.jet_vars(x, y))),
            Self::Sum { terms } => terms
                .iter()
                .fold(Jet::real(T::zero(), n), |acc, f| acc.add(&f.jet_vars(x, y))),
            Self::Scale { re, im, inner } => inner.jet_vars(x, y).scale(c(*re, *im)),
            Self::Reciprocal { inner } => inner.jet_vars(x, y).recip(),
            Self::Conjugate { inner } => {
                let j = inner.jet_vars(x, y);
                Jet { order: j.order, c: j.c.iter().map(|v| v.conj()).collect() }
            }
        }
    }

    pub fn eval<T: Real>(&self, z: PhasePoint<T>) -> Complex<T> {
        self.jet_vars(&Jet::var_x(z.x, 0), &Jet::var_omega(z.omega, 0)).value()
    }

    pub fn derivative_at<T: Real>(&self, z: PhasePoint<T>, alpha: (usize, usize)) -> Result<Complex<T>> {
        Ok(self.jet(z, alpha.0 + alpha.1)?.derivative(alpha.0, alpha.1))
    }
}

/// A symbol as used by localization operators: closed form or lattice samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymbolSpec {
    ClosedForm(SymbolExpr),
    Sampled(PhasePlaneArray<f64>),
}

impl From<SymbolExpr> for SymbolSpec {
    fn from(e: SymbolExpr) -> Self {
        Self::ClosedForm(e)
    }
}

impl SymbolSpec {
    pub fn max_derivative_order(&self) -> usize {
        match self {
            Self::ClosedForm(_) => JET_ORDER_CAP,
            Self::Sampled(_) => SAMPLED_ORDER_CAP,
        }
    }

    pub fn expr(&self) -> Option<&SymbolExpr> {
        match self {
            Self::ClosedForm(e) => Some(e),
            Self::Sampled(_) => None,
        }
    }

    fn require_lattice(&self, grid: &Grid<f64>) -> Result<()> {
        if let Self::Sampled(a) = self {
            a.grid().ensure_same(grid)?;
        }
        Ok(())
    }

    /// Symbol values on the STFT lattice of `grid`.
    pub fn values(&self, grid: Grid<f64>) -> Result<PhasePlaneArray<f64>> {
        self.derivative(grid, (0, 0))
    }

    /// `∂^α a` on the lattice of `grid`.
    pub fn derivative(&self, grid: Grid<f64>, alpha: (usize, usize)) -> Result<PhasePlaneArray<f64>> {
        let order = alpha.0 + alpha.1;
        if order > self.max_derivative_order() {
            return Err(Error::OrderCap { order, cap: self.max_derivative_order() });
        }
        self.require_lattice(&grid)?;
        match self {
            Self::ClosedForm(e) => {
                let out = PhasePlaneArray::from_fn(grid, |z| {
                    e.jet(z, order).map(|j| j.derivative(alpha.0, alpha.1)).unwrap_or(Complex::new(f64::NAN, 0.0))
                });
                if out.values().iter().any(|v| !is_finite_c(*v)) {
                    return Err(Error::NonFinite(format!("∂^{alpha:?} of the symbol on the lattice")));
                }
                Ok(out)
            }
            Self::Sampled(a) => Ok(finite_difference(a, alpha)),
        }
    }

    /// `∂^α a(z)` at an arbitrary phase point (closed form only).
    pub fn derivative_at(&self, z: PhasePoint<f64>, alpha: (usize, usize)) -> Result<Complex<f64>> {
        match self {
            Self::ClosedForm(e) => e.derivative_at(z, alpha),
            Self::Sampled(_) => Err(Error::Precondition(
                "sampled symbols have derivatives only at lattice points".into(),
            )),
        }
    }

    pub fn eval(&self, z: PhasePoint<f64>) -> Result<Complex<f64>> {
        self.derivative_at(z, (0, 0))
    }

    /// Pointwise map on the lattice values; closed forms are sampled first.
    pub fn map_values(&self, grid: Grid<f64>, f: impl Fn(Complex<f64>) -> Complex<f64>) -> Result<Self> {
        Ok(Self::Sampled(self.values(grid)?.map(f)))
    }

    pub fn conj(&self) -> Self {
        match self {
            Self::ClosedForm(e) => Self::ClosedForm(e.clone().conj()),
            Self::Sampled(a) => Self::Sampled(a.map(|v| v.conj())),
        }
    }

    pub fn recip(&self) -> Self {
        match self {
            Self::ClosedForm(e) => Self::ClosedForm(e.clone().recip()),
            Self::Sampled(a) => Self::Sampled(a.map(|v| v.inv())),
        }
    }

    pub fn times(&self, other: &SymbolSpec, grid: Grid<f64>) -> Result<Self> {
        match (self, other) {
            (Self::ClosedForm(a), Self::ClosedForm(b)) => Ok(Self::ClosedForm(a.clone().times(b.clone()))),
            _ => Ok(Self::Sampled(self.values(grid)?.hadamard(&other.values(grid)?)?)),
        }
    }
}

/// Centered differences with lattice steps `Δ` and `1/L`, circular at the edges.
fn finite_difference(a: &PhasePlaneArray<f64>, alpha: (usize, usize)) -> PhasePlaneArray<f64> {
    let n = a.side() as i64;
    let hx = a.grid().step();
    let hw = a.grid().freq_step();
    let at = |i: i64, j: i64| a.get(i.rem_euclid(n) as usize, j.rem_euclid(n) as usize);
    let mut out = Vec::with_capacity(a.values().len());
    for i in 0..n {
        for j in 0..n {
            let v = match alpha {
                (0, 0) => at(i, j),
                (1, 0) => (at(i + 1, j) - at(i - 1, j)) / (2.0 * hx),
                (0, 1) => (at(i, j + 1) - at(i, j - 1)) / (2.0 * hw),
                (2, 0) => (at(i + 1, j) - at(i, j) * 2.0 + at(i - 1, j)) / (hx * hx),
                (0, 2) => (at(i, j + 1) - at(i, j) * 2.0 + at(i, j - 1)) / (hw * hw),
                (1, 1) => {
                    (at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) + at(i - 1, j - 1)) / (4.0 * hx * hw)
                }
                _ => unreachable!("order checked by caller"),
            };
            out.push(v);
        }
    }
    PhasePlaneArray::new(*a.grid(), out).expect("differences of finite values")
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn pz(x: f64, w: f64) -> PhasePoint<f64> {
        PhasePoint::new(x, w)
    }

    #[test]
    fn jet_derivatives_of_japanese_bracket() {
        // ⟨z⟩ = (1+x²+ω²)^{1/2}: ∂_x = x/⟨z⟩, ∂_x∂_ω = -xω/⟨z⟩³
        let e = SymbolExpr::japanese(1.0);
        let (x, w) = (0.7, -1.3);
        let r = (1.0f64 + x * x + w * w).sqrt();
        assert!((e.derivative_at(pz(x, w), (1, 0)).unwrap().re - x / r).abs() < 1e-14);
        assert!((e.derivative_at(pz(x, w), (1, 1)).unwrap().re + x * w / r.powi(3)).abs() < 1e-14);
        let d2 = e.derivative_at(pz(x, w), (2, 0)).unwrap().re;
        assert!((d2 - (1.0 + w * w) / r.powi(3)).abs() < 1e-14);
    }

    #[test]
    fn jet_matches_finite_differences_high_order() {
        let e = SymbolExpr::gaussian(1.5).times(SymbolExpr::japanese(-1.0));
        let z = pz(0.3, 0.4);
        let h = 1e-3;
        let f = |x: f64| e.eval(pz(x, 0.4)).re;
        let fd3 = (f(z.x + 2.0 * h) - 2.0 * f(z.x + h) + 2.0 * f(z.x - h) - f(z.x - 2.0 * h)) / (2.0 * h * h * h);
        let exact = e.derivative_at(z, (3, 0)).unwrap().re;
        assert!((fd3 - exact).abs() < 1e-4 * exact.abs().max(1.0));
    }

    #[test]
    fn polynomial_and_affine_exact() {
        let p = SymbolExpr::polynomial(&[(2, 0, 3.0), (1, 1, -1.0), (0, 0, 2.0)]);
        let z = pz(1.5, 2.0);
        assert_eq!(p.eval(z).re, 3.0 * 2.25 - 3.0 + 2.0);
        assert_eq!(p.derivative_at(z, (2, 0)).unwrap().re, 6.0);
        assert_eq!(p.derivative_at(z, (1, 1)).unwrap().re, -1.0);
        assert_eq!(p.derivative_at(z, (3, 0)).unwrap().re, 0.0);
        let a = SymbolExpr::affine(1.0, 2.0, -3.0);
        assert_eq!(a.derivative_at(z, (0, 1)).unwrap().re, -3.0);
        assert_eq!(a.derivative_at(z, (1, 1)).unwrap().re, 0.0);
    }

    #[test]
    fn dilation_chain_rule() {
        let e = SymbolExpr::japanese(1.0);
        let d = e.clone().dilate(2.0);
        let z = pz(0.2, 0.1);
        let want = 2.0 * e.derivative_at(pz(0.4, 0.2), (1, 0)).unwrap().re;
        assert!((d.derivative_at(z, (1, 0)).unwrap().re - want).abs() < 1e-14);
    }

    #[test]
    fn cutoff_profile() {
        let c = SymbolExpr::cutoff(0.5);
        assert_eq!(c.eval(pz(0.3, 0.0)).re, 1.0);
        assert_eq!(c.eval(pz(3.0, 0.0)).re, 0.0);
        let mid = c.eval(pz(1.5, 0.0)).re;
        assert!((mid - 0.5).abs() < 1e-14);
        let d = c.derivative_at(pz(1.5, 0.0), (1, 0)).unwrap().re;
        assert!(d < 0.0);
        let s = c.eval(pz(1.0, 0.0)).re;
        assert!(s > 0.5 && s < 1.0);
    }

    #[test]
    fn reciprocal_and_conjugate() {
        let e = SymbolExpr::Constant { re: 1.0, im: 2.0 };
        let z = pz(0.0, 0.0);
        assert!((e.clone().recip().eval(z) - Complex64::new(1.0, 2.0).inv()).norm() < 1e-15);
        assert_eq!(e.conj().eval(z), Complex64::new(1.0, -2.0));
    }

    #[test]
    fn order_caps() {
        let e = SymbolExpr::japanese(1.0);
        assert!(matches!(e.jet(pz(0.0, 0.0), 9), Err(Error::OrderCap { .. })));
        let grid = Grid::new(4.0, 8).unwrap();
        let s = SymbolSpec::Sampled(PhasePlaneArray::zeros(grid));
        assert!(matches!(s.derivative(grid, (3, 0)), Err(Error::OrderCap { .. })));
    }

    #[test]
    fn sampled_differences_on_quadratic() {
        let grid = Grid::new(8.0, 32).unwrap();
        let q = SymbolExpr::polynomial(&[(2, 0, 1.0), (1, 1, 2.0), (0, 2, 0.5)]);
        let sampled = SymbolSpec::Sampled(SymbolSpec::ClosedForm(q.clone()).values(grid).unwrap());
        for alpha in [(2, 0), (1, 1), (0, 2)] {
            let fd = sampled.derivative(grid, alpha).unwrap();
            let exact = SymbolSpec::ClosedForm(q.clone()).derivative(grid, alpha).unwrap();
            // interior points only: the circular stencil wraps at the edges
            assert!((fd.get(16, 16) - exact.get(16, 16)).norm() < 1e-9, "{alpha:?}");
        }
    }

    #[test]
    fn config_form() {
        let e: SymbolExpr =
            serde_json::from_str(r#"{"kind":"weight","weight":{"family":"polynomial","s":1.0}}"#).unwrap();
        assert_eq!(e, SymbolExpr::japanese(1.0));
    }
}
