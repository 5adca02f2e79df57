//! Weighted mixed norms on phase-plane arrays and modulation norms of signals.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::signal::{gaussian_window, tf_shift, PhasePoint, SampledSignal};
use crate::stft::{stft, PhasePlaneArray};
use crate::weights::WeightSpec;

/// Exponents `p, q ∈ [1, ∞]` and the weight `m` of `L^{p,q}_m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    #[serde(with = "exponent")]
    pub p: f64,
    #[serde(with = "exponent")]
    pub q: f64,
    #[serde(default = "unit_weight")]
    pub m: WeightSpec,
}

fn unit_weight() -> WeightSpec {
    WeightSpec::ConstantOne
}

/// Accepts a number or `"inf"`; writes `"inf"` for the ∞ sentinel since JSON
/// has no infinity literal.
mod exponent {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "∞") => Ok(f64::INFINITY),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("invalid exponent {t:?}"))),
        }
    }
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64, m: WeightSpec) -> Result<Self> {
        let params = Self { p, q, m };
        params.validate()?;
        Ok(params)
    }

    pub fn hilbert(m: WeightSpec) -> Self {
        Self { p: 2.0, q: 2.0, m }
    }

    pub fn validate(&self) -> Result<()> {
        for e in [self.p, self.q] {
            if !(e >= 1.0) || e.is_nan() {
                return Err(Error::UnsupportedNorm(format!("exponent {e} outside [1, ∞]")));
            }
        }
        self.m.validate()
    }

    pub fn is_hilbert(&self) -> bool {
        self.p == 2.0 && self.q == 2.0
    }
}

fn lp_accumulate<T: Real>(values: impl Iterator<Item = T>, p: f64, cell: T) -> T {
    if p.is_infinite() {
        values.fold(T::zero(), T::max)
    } else {
        let pp = T::lit(p);
        let s: T = values.map(|v| if p == 1.0 { v } else { v.powf(pp) }).sum();
        if p == 1.0 {
            s * cell
        } else {
            (s * cell).powf(pp.recip())
        }
    }
}

/// Inner `ℓ^p` over `x` with weight `m` and cell `Δ`, outer `ℓ^q` over `ω`
/// with cell `1/L`; an infinite exponent becomes a maximum.
pub fn mixed_norm<T: Real>(big_f: &PhasePlaneArray<T>, params: &MixedNormParams) -> Result<T> {
    params.validate()?;
    let n = big_f.side();
    let g = big_f.grid();
    let weight = params.m.sample(big_f);
    let inner: Vec<T> = (0..n)
        .map(|col| {
            let vals = (0..n).map(|row| big_f.get(row, col).norm() * weight.get(row, col).re);
            lp_accumulate(vals, params.p, g.step())
        })
        .collect();
    Ok(lp_accumulate(inner.into_iter(), params.q, g.width().recip()))
}

/// `‖V_g f‖_{L^{p,q}_m}`.
pub fn mod_norm<T: Real>(f: &SampledSignal<T>, g: &SampledSignal<T>, params: &MixedNormParams) -> Result<T> {
    if g.is_zero() {
        return Err(Error::ZeroWindow);
    }
    mixed_norm(&stft(f, g)?, params)
}

/// Lattice `M¹_w` norm with the Gaussian analysis window.
pub fn m1_norm<T: Real>(f: &SampledSignal<T>, w: &WeightSpec) -> Result<T> {
    let phi0 = gaussian_window(*f.grid());
    mod_norm(f, &phi0, &MixedNormParams { p: 1.0, q: 1.0, m: w.clone() })
}

/// Largest `‖π(z)f‖ / (v(z) ‖f‖)` over the given shifts.
pub fn shift_bound_constant(
    f: &SampledSignal<f64>,
    g: &SampledSignal<f64>,
    params: &MixedNormParams,
    v: &WeightSpec,
    shifts: &[PhasePoint<f64>],
) -> Result<f64> {
    let base = mod_norm(f, g, params)?;
    if base == 0.0 {
        return Ok(0.0);
    }
    let mut c: f64 = 0.0;
    for &z in shifts {
        let shifted = mod_norm(&tf_shift(z, f)?, g, params)?;
        c = c.max(shifted / (v.eval(z) * base));
    }
    Ok(c)
}
