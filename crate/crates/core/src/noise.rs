//! Laplace noise, the Laplace difference tail, and the privacy shift `A`.
//!
//! All logarithms here are natural logs. Multiplicative sensitivity of a
//! p-value (`exp(-eta) p <= p' <= exp(eta) p`) is additive sensitivity `eta`
//! on `ln p` only in base e.

use rand::distr::Open01;
use rand::{Rng, RngCore};

use crate::error::{Error, Result};

/// Source of uniform draws on the open interval (0, 1).
///
/// Every random quantity in the crate is an inverse-CDF transform of one of
/// these draws, so a test can pin the whole noise stream by substituting a
/// scripted source.
pub trait UniformSource {
    fn next_open01(&mut self) -> f64;
}

impl<R: RngCore> UniformSource for R {
    fn next_open01(&mut self) -> f64 {
        self.sample(Open01)
    }
}

/// Replays a fixed list of uniforms, then repeats the last one.
#[derive(Debug, Clone)]
pub struct ScriptedUniform {
    values: Vec<f64>,
    pos: usize,
}

impl ScriptedUniform {
    pub fn new(values: Vec<f64>) -> Self {
        assert!(!values.is_empty(), "scripted uniform stream needs at least one value");
        assert!(values.iter().all(|u| *u > 0.0 && *u < 1.0), "uniforms must lie in (0, 1)");
        Self { values, pos: 0 }
    }

    /// A stream of 0.5s: every Laplace draw made from it is exactly zero.
    pub fn zero_noise() -> Self {
        Self::new(vec![0.5])
    }
}

impl UniformSource for ScriptedUniform {
    fn next_open01(&mut self) -> f64 {
        let u = self.values[self.pos.min(self.values.len() - 1)];
        self.pos += 1;
        u
    }
}

/// Scale `b` of the Laplace density `exp(-|x|/b) / (2b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaplaceScale(f64);

impl LaplaceScale {
    pub fn new(b: f64) -> Result<Self> {
        if b.is_finite() && b > 0.0 {
            Ok(Self(b))
        } else {
            Err(Error::InvalidParameter(format!("Laplace scale must be positive and finite, got {b}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// `(epsilon, delta)` differential-privacy budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyBudget {
    epsilon: f64,
    delta: f64,
}

impl PrivacyBudget {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Inverse Laplace CDF at `u` in (0, 1).
pub fn laplace_quantile(u: f64, scale: LaplaceScale) -> f64 {
    let b = scale.get();
    let centered = u - 0.5;
    // ln(1 - 2|u - 1/2|) computed as ln_1p for accuracy near the median.
    -b * centered.signum() * (-2.0 * centered.abs()).ln_1p()
}

/// Draws one `Lap(b)` variate from a single uniform.
pub fn sample_laplace<U: UniformSource + ?Sized>(scale: LaplaceScale, source: &mut U) -> f64 {
    let u = source.next_open01();
    if u == 0.5 {
        return 0.0;
    }
    laplace_quantile(u, scale)
}

/// Laplace CDF, used by goodness-of-fit tests and diagnostics.
pub fn laplace_cdf(x: f64, scale: LaplaceScale) -> f64 {
    let b = scale.get();
    if x < 0.0 {
        0.5 * (x / b).exp()
    } else {
        1.0 - 0.5 * (-x / b).exp()
    }
}

/// `Pr(Z1 >= Z2 - c)` for independent `Z1 ~ Lap(2b)`, `Z2 ~ Lap(b)`, `c >= 0`.
///
/// Closed form `1 - (2/3) e^{-c/(2b)} + (1/6) e^{-c/b}`. Equals 1/2 at
/// `c = 0` and increases to 1.
pub fn prob_shift_dominates(b: f64, c: f64) -> Result<f64> {
    if !(b.is_finite() && b > 0.0) {
        return Err(Error::InvalidParameter(format!("b must be positive, got {b}")));
    }
    if c.is_nan() || c < 0.0 {
        return Err(Error::InvalidParameter(format!("C must be nonnegative, got {c}")));
    }
    if c.is_infinite() {
        return Ok(1.0);
    }
    Ok(1.0 - (2.0 / 3.0) * (-c / (2.0 * b)).exp() + (1.0 / 6.0) * (-c / b).exp())
}

/// `min{delta, 1 - ((1 - delta) / e^eps)^(1/k)}`, the failure budget that
/// both candidacy-mismatch cases of the privacy argument must fit under.
fn shift_failure_budget(budget: &PrivacyBudget, k: u64) -> Result<f64> {
    if budget.delta() == 0.0 {
        return Err(Error::InvalidParameter(
            "the shift requires delta > 0 (its log argument is 2 / (3 * min{delta, ...}))".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    // 1 - exp((ln(1 - delta) - eps) / k), evaluated without cancellation.
    let per_test = -(((-budget.delta()).ln_1p() - budget.epsilon()) / k as f64).exp_m1();
    Ok(budget.delta().min(per_test))
}

/// Threshold shift used by the private procedure:
/// `A = (s c eta / eps) ln(2 / (3 min{delta, 1 - ((1 - delta)/e^eps)^(1/k)}))`.
///
/// Linear in `s` and in `c * eta`.
pub fn compute_shift(s: f64, c: u32, eta: f64, budget: &PrivacyBudget, k: u64) -> Result<f64> {
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::InvalidParameter(format!("shift magnitude s must be positive, got {s}")));
    }
    if c == 0 {
        return Err(Error::InvalidParameter("rejection cap c must be at least 1".into()));
    }
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter(format!("sensitivity eta must be positive, got {eta}")));
    }
    let m = shift_failure_budget(budget, k)?;
    Ok(s * f64::from(c) * eta / budget.epsilon() * (2.0 / (3.0 * m)).ln())
}

/// The tighter bound that falls out of the privacy argument:
/// `(4 eta c / eps) (ln(2 / (3 min{...})) - ln 2 + eta)`.
///
/// Kept for comparison only; [`compute_shift`] is what the procedures use.
pub fn proof_shift_bound(c: u32, eta: f64, budget: &PrivacyBudget, k: u64) -> Result<f64> {
    if c == 0 || !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidParameter("c >= 1 and eta > 0 required".into()));
    }
    let m = shift_failure_budget(budget, k)?;
    Ok(4.0 * eta * f64::from(c) / budget.epsilon() * ((2.0 / (3.0 * m)).ln() - std::f64::consts::LN_2 + eta))
}
