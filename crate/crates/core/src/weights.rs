//! Weight families on the phase plane and lattice-scan audits of their
//! structural properties.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::PhasePoint;
use crate::stft::PhasePlaneArray;

/// Closed-form weight. In configuration files this is a tagged record, e.g.
/// `weight = { family = "polynomial", s = -2.0 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightSpec {
    /// `(1 + x² + ω²)^{s/2}`
    Polynomial { s: f64 },
    /// `e^{a|z|^b}`; `b = 1` is accepted but violates GRS.
    Subexponential { a: f64, b: f64 },
    /// `⟨x⟩^s ⟨ω⟩^s`
    ProductPolynomial { s: f64 },
    /// `⟨x⟩^{sx} ⟨ω⟩^{somega}`
    TensorPolynomial { sx: f64, somega: f64 },
    ConstantOne,
    ProductOf { left: Box<WeightSpec>, right: Box<WeightSpec> },
    ReciprocalOf { inner: Box<WeightSpec> },
}

impl std::fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Polynomial { s } => write!(f, "polynomial({s})"),
            Self::Subexponential { a, b } => write!(f, "subexponential({a}, {b})"),
            Self::ProductPolynomial { s } => write!(f, "product_polynomial({s})"),
            Self::TensorPolynomial { sx, somega } => write!(f, "tensor_polynomial({sx}, {somega})"),
            Self::ConstantOne => write!(f, "constant_one"),
            Self::ProductOf { left, right } => write!(f, "{left} * {right}"),
            Self::ReciprocalOf { inner } => write!(f, "1/({inner})"),
        }
    }
}

fn japanese<T: Real>(t2: T, s: f64) -> T {
    let base = T::one() + t2;
    let half = s / 2.0;
    if half.fract() == 0.0 && half.abs() < 64.0 {
        base.powi(half as i32)
    } else {
        base.powf(T::lit(half))
    }
}

impl WeightSpec {
    pub fn polynomial(s: f64) -> Self {
        Self::Polynomial { s }
    }

    pub fn subexponential(a: f64, b: f64) -> Self {
        Self::Subexponential { a, b }
    }

    pub fn product(left: WeightSpec, right: WeightSpec) -> Self {
        Self::ProductOf { left: Box::new(left), right: Box::new(right) }
    }

    pub fn reciprocal(inner: WeightSpec) -> Self {
        Self::ReciprocalOf { inner: Box::new(inner) }
    }

    /// Rejects parameters outside the family's domain.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Polynomial { s } | Self::ProductPolynomial { s } if !s.is_finite() => {
                Err(Error::Precondition(format!("weight exponent {s} is not finite")))
            }
            Self::Subexponential { a, b } if !(a.is_finite() && *a >= 0.0 && (0.0..=1.0).contains(b)) => {
                Err(Error::Precondition(format!("subexponential weight needs a ≥ 0, 0 ≤ b ≤ 1 (got a={a}, b={b})")))
            }
            Self::TensorPolynomial { sx, somega } if !(sx.is_finite() && somega.is_finite()) => {
                Err(Error::Precondition("tensor weight exponents must be finite".into()))
            }
            Self::ProductOf { left, right } => {
                left.validate()?;
                right.validate()
            }
            Self::ReciprocalOf { inner } => inner.validate(),
            _ => Ok(()),
        }
    }

    pub fn eval<T: Real>(&self, z: PhasePoint<T>) -> T {
        match self {
            Self::Polynomial { s } => japanese(z.x * z.x + z.omega * z.omega, *s),
            Self::Subexponential { a, b } => {
                let r = z.norm();
                if *a == 0.0 {
                    T::one()
                } else {
                    (T::lit(*a) * r.powf(T::lit(*b))).exp()
                }
            }
            Self::ProductPolynomial { s } => japanese(z.x * z.x, *s) * japanese(z.omega * z.omega, *s),
            Self::TensorPolynomial { sx, somega } => japanese(z.x * z.x, *sx) * japanese(z.omega * z.omega, *somega),
            Self::ConstantOne => T::one(),
            Self::ProductOf { left, right } => left.eval(z) * right.eval(z),
            Self::ReciprocalOf { inner } => inner.eval(z).recip(),
        }
    }

    /// `ln v(z)`, finite even where `v(z)` itself overflows.
    pub fn log_eval(&self, z: PhasePoint<f64>) -> f64 {
        let jl = |t2: f64, s: f64| 0.5 * s * t2.ln_1p();
        match self {
            Self::Polynomial { s } => jl(z.x * z.x + z.omega * z.omega, *s),
            Self::Subexponential { a, b } => {
                if *a == 0.0 {
                    0.0
                } else {
                    a * z.norm().powf(*b)
                }
            }
            Self::ProductPolynomial { s } => jl(z.x * z.x, *s) + jl(z.omega * z.omega, *s),
            Self::TensorPolynomial { sx, somega } => jl(z.x * z.x, *sx) + jl(z.omega * z.omega, *somega),
            Self::ConstantOne => 0.0,
            Self::ProductOf { left, right } => left.log_eval(z) + right.log_eval(z),
            Self::ReciprocalOf { inner } => -inner.log_eval(z),
        }
    }

    /// Whether the family satisfies `v(nz)^{1/n} → 1`.
    pub fn satisfies_grs(&self) -> bool {
        match self {
            Self::Subexponential { a, b } => *a == 0.0 || *b < 1.0,
            Self::ProductOf { left, right } => left.satisfies_grs() && right.satisfies_grs(),
            Self::ReciprocalOf { inner } => inner.satisfies_grs(),
            _ => true,
        }
    }

    /// Samples the weight on the lattice of `like`.
    pub fn sample<T: Real>(&self, like: &PhasePlaneArray<T>) -> PhasePlaneArray<T> {
        PhasePlaneArray::from_real_fn(*like.grid(), |z| self.eval(z))
    }
}

/// Outcome of a pairwise lattice scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub max_ratio: f64,
    pub worst_pair: (PhasePoint<f64>, PhasePoint<f64>),
    pub pairs: usize,
    pub radius: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Square lattice of `n × n` points covering `[-radius, radius]²`.
pub fn square_lattice(n: usize, radius: f64) -> Vec<PhasePoint<f64>> {
    let step = if n > 1 { 2.0 * radius / (n - 1) as f64 } else { 0.0 };
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(PhasePoint::new(-radius + i as f64 * step, -radius + j as f64 * step));
        }
    }
    out
}

/// All ordered pairs of lattice points.
pub fn lattice_pairs(n: usize, radius: f64) -> Vec<(PhasePoint<f64>, PhasePoint<f64>)> {
    let pts = square_lattice(n, radius);
    let mut out = Vec::with_capacity(pts.len() * pts.len());
    for &a in &pts {
        for &b in &pts {
            out.push((a, b));
        }
    }
    out
}

fn scan_radius(pairs: &[(PhasePoint<f64>, PhasePoint<f64>)]) -> f64 {
    pairs
        .iter()
        .flat_map(|(a, b)| [a.norm(), b.norm()])
        .fold(0.0, f64::max)
}

fn max_ratio(
    pairs: &[(PhasePoint<f64>, PhasePoint<f64>)],
    ratio: impl Fn(PhasePoint<f64>, PhasePoint<f64>) -> f64,
) -> Result<(f64, (PhasePoint<f64>, PhasePoint<f64>))> {
    if pairs.is_empty() {
        return Err(Error::Precondition("empty sample list".into()));
    }
    let mut best = (f64::NEG_INFINITY, pairs[0]);
    for &(a, b) in pairs {
        let r = ratio(a, b);
        if r > best.0 {
            best = (r, (a, b));
        }
    }
    Ok(best)
}

/// `max v(z₁+z₂) / (v(z₁) v(z₂))`; passes when at most `1 + 1e-9`.
pub fn check_submultiplicative(v: &WeightSpec, pairs: &[(PhasePoint<f64>, PhasePoint<f64>)]) -> Result<ScanReport> {
    let (max_ratio, worst_pair) = max_ratio(pairs, |a, b| v.eval(a + b) / (v.eval(a) * v.eval(b)))?;
    let tolerance = 1e-9;
    Ok(ScanReport {
        max_ratio,
        worst_pair,
        pairs: pairs.len(),
        radius: scan_radius(pairs),
        tolerance,
        passed: max_ratio <= 1.0 + tolerance,
    })
}

/// Smallest `C` with `m(z₁+z₂) ≤ C v(z₁) m(z₂)` over the sampled pairs.
pub fn check_moderate(
    m: &WeightSpec,
    v: &WeightSpec,
    pairs: &[(PhasePoint<f64>, PhasePoint<f64>)],
) -> Result<f64> {
    max_ratio(pairs, |a, b| m.eval(a + b) / (v.eval(a) * m.eval(b))).map(|(c, _)| c)
}

/// `(∫₀¹ v(tz) dt) / v(z)` by the composite trapezoid rule on `quad_points` nodes.
pub fn check_integral_property(v: &WeightSpec, z: PhasePoint<f64>, quad_points: usize) -> Result<f64> {
    if quad_points < 16 {
        return Err(Error::Precondition(format!("need at least 16 quadrature points, got {quad_points}")));
    }
    let h = 1.0 / (quad_points - 1) as f64;
    let mut acc = 0.0;
    for k in 0..quad_points {
        let w = if k == 0 || k + 1 == quad_points { 0.5 } else { 1.0 };
        acc += w * v.eval(z * (k as f64 * h));
    }
    Ok(acc * h / v.eval(z))
}

/// `v(2^k z)^{1/2^k}` for `k = 1..=kmax`.
pub fn grs_sequence(v: &WeightSpec, z: PhasePoint<f64>, kmax: u32) -> Vec<f64> {
    (1..=kmax)
        .map(|k| {
            let n = 2f64.powi(k as i32);
            (v.log_eval(z * n) / n).exp()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedSymbolClassReport {
    /// `sup |a|·m` over the lattice.
    pub sup_ratio: f64,
    /// `inf |a|·m` over the lattice.
    pub inf_ratio: f64,
    /// `sup |a|·m` over lattice points with `|z| > R`.
    pub tail_sup: f64,
    pub radius: f64,
}

impl WeightedSymbolClassReport {
    /// `sup / inf` of `|a|·m`; infinite when `a` vanishes somewhere.
    pub fn comparability(&self) -> f64 {
        if self.inf_ratio > 0.0 {
            self.sup_ratio / self.inf_ratio
        } else {
            f64::INFINITY
        }
    }
}

/// Largest radius strictly inside the lattice.
pub fn lattice_half_extent<T: Real>(a: &PhasePlaneArray<T>) -> f64 {
    let g = a.grid();
    let x = g.width().to_f64_lossy() / 2.0;
    let w = a.side() as f64 / (2.0 * g.width().to_f64_lossy());
    x.min(w)
}

pub fn classify_symbol<T: Real>(a: &PhasePlaneArray<T>, m: &WeightSpec, radius: f64) -> Result<WeightedSymbolClassReport> {
    if !(radius >= 0.0 && radius < lattice_half_extent(a)) {
        return Err(Error::Precondition(format!(
            "radius {radius} must lie in [0, {})",
            lattice_half_extent(a)
        )));
    }
    let n = a.side();
    let mut report = WeightedSymbolClassReport { sup_ratio: 0.0, inf_ratio: f64::INFINITY, tail_sup: 0.0, radius };
    for (idx, v) in a.values().iter().enumerate() {
        let z = a.point(idx / n, idx % n);
        let zf = PhasePoint::new(z.x.to_f64_lossy(), z.omega.to_f64_lossy());
        let r = v.norm().to_f64_lossy() * m.eval(zf);
        report.sup_ratio = report.sup_ratio.max(r);
        report.inf_ratio = report.inf_ratio.min(r);
        if zf.norm() > radius {
            report.tail_sup = report.tail_sup.max(r);
        }
    }
    Ok(report)
}

/// Lattice `L^∞_m` norm `sup |a|·m`.
pub fn weighted_sup<T: Real>(a: &PhasePlaneArray<T>, m: &WeightSpec) -> f64 {
    let n = a.side();
    a.values()
        .iter()
        .enumerate()
        .map(|(idx, v)| {
            let z = a.point(idx / n, idx % n);
            v.norm().to_f64_lossy() * m.eval(PhasePoint::new(z.x.to_f64_lossy(), z.omega.to_f64_lossy()))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Grid;

    #[test]
    fn family_values() {
        assert_eq!(WeightSpec::polynomial(2.0).eval(PhasePoint::new(3.0, 4.0)), 26.0);
        assert_eq!(WeightSpec::subexponential(1.0, 0.5).eval(PhasePoint::new(0.0, 0.0)), 1.0);
        assert_eq!(WeightSpec::ConstantOne.eval(PhasePoint::new(-7.0, 2.5)), 1.0);
        let pp = WeightSpec::ProductPolynomial { s: 2.0 }.eval(PhasePoint::new(1.0, 2.0));
        assert_eq!(pp, 10.0);
        let r = WeightSpec::reciprocal(WeightSpec::polynomial(2.0)).eval(PhasePoint::new(0.0, 1.0));
        assert_eq!(r, 0.5);
    }

    #[test]
    fn config_record_form() {
        let w: WeightSpec = serde_json::from_str(r#"{"family":"polynomial","s":-2.0}"#).unwrap();
        assert_eq!(w, WeightSpec::polynomial(-2.0));
        let nested: WeightSpec = serde_json::from_str(
            r#"{"family":"product_of","left":{"family":"constant_one"},"right":{"family":"subexponential","a":1.0,"b":0.5}}"#,
        )
        .unwrap();
        assert!(nested.satisfies_grs());
    }

    #[test]
    fn parameter_validation() {
        assert!(WeightSpec::subexponential(-1.0, 0.5).validate().is_err());
        assert!(WeightSpec::subexponential(1.0, 1.5).validate().is_err());
        assert!(WeightSpec::subexponential(1.0, 1.0).validate().is_ok());
    }

    #[test]
    fn exponential_weight_flagged() {
        assert!(!WeightSpec::subexponential(1.0, 1.0).satisfies_grs());
        assert!(WeightSpec::subexponential(1.0, 0.5).satisfies_grs());
        let seq = grs_sequence(&WeightSpec::subexponential(1.0, 1.0), PhasePoint::new(1.0, 0.0), 12);
        assert!((seq[11] - std::f64::consts::E).abs() < 1e-9);
    }

    #[test]
    fn constant_scans() {
        let pairs = lattice_pairs(5, 2.0);
        let rep = check_submultiplicative(&WeightSpec::ConstantOne, &pairs).unwrap();
        assert_eq!(rep.max_ratio, 1.0);
        assert_eq!(check_moderate(&WeightSpec::ConstantOne, &WeightSpec::ConstantOne, &pairs).unwrap(), 1.0);
        assert!(check_submultiplicative(&WeightSpec::ConstantOne, &[]).is_err());
    }

    #[test]
    fn integral_property_constant() {
        let r = check_integral_property(&WeightSpec::ConstantOne, PhasePoint::new(2.0, 1.0), 16).unwrap();
        assert!((r - 1.0).abs() < 1e-15);
        assert!(check_integral_property(&WeightSpec::ConstantOne, PhasePoint::new(2.0, 1.0), 15).is_err());
    }

    #[test]
    fn classify_inverse_pair() {
        let grid = Grid::new(12.0, 64).unwrap();
        let a = PhasePlaneArray::from_real_fn(grid, |z: PhasePoint<f64>| 1.0 + z.x * z.x + z.omega * z.omega);
        let rep = classify_symbol(&a, &WeightSpec::polynomial(-2.0), 1.0).unwrap();
        assert!((rep.sup_ratio - 1.0).abs() < 1e-12 && (rep.inf_ratio - 1.0).abs() < 1e-12);
        assert!(classify_symbol(&a, &WeightSpec::ConstantOne, 100.0).is_err());
    }
}
