//! Synthetic hypothesis streams with ground truth.
//!
//! Two feature models over a database of `n` individuals and `k` features:
//! Bernoulli observations tested with the exact Binomial(n, 1/2) upper tail,
//! and truncated-exponential observations tested with a normal
//! approximation to the sum. Each feature is non-null with probability
//! `pi1`.

use std::io::{BufRead, Write};
use std::path::Path;

use libm::erfc;
use rand::Rng;

use crate::error::{Error, Result};
use crate::noise::{sample_laplace, LaplaceScale, PrivacyBudget, UniformSource};

/// P-values are clamped to at least this before any logarithm is taken.
pub const MU_FLOOR: f64 = 1e-300;

/// Ordered p-values with their ground-truth null flags.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisStream {
    pvalues: Vec<f64>,
    is_null: Vec<bool>,
    sensitivity_eta: f64,
    sensitivity_mu: f64,
}

impl HypothesisStream {
    pub fn new(pvalues: Vec<f64>, is_null: Vec<bool>, sensitivity_eta: f64, sensitivity_mu: f64) -> Result<Self> {
        if pvalues.len() != is_null.len() {
            return Err(Error::LengthMismatch { left: pvalues.len(), right: is_null.len() });
        }
        if let Some(p) = pvalues.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidParameter(format!("p-value {p} outside [0, 1]")));
        }
        if !(sensitivity_eta.is_finite() && sensitivity_eta > 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be positive, got {sensitivity_eta}")));
        }
        if !(sensitivity_mu.is_finite() && sensitivity_mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {sensitivity_mu}")));
        }
        Ok(Self { pvalues, is_null, sensitivity_eta, sensitivity_mu })
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn is_null(&self) -> &[bool] {
        &self.is_null
    }

    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }

    pub fn sensitivity_eta(&self) -> f64 {
        self.sensitivity_eta
    }

    pub fn sensitivity_mu(&self) -> f64 {
        self.sensitivity_mu
    }

    pub fn non_null_count(&self) -> usize {
        self.is_null.iter().filter(|n| !**n).count()
    }

    /// Writes `index,pvalue,is_null` rows; p-values carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "index,pvalue,is_null")?;
        for (i, (p, null)) in self.pvalues.iter().zip(&self.is_null).enumerate() {
            writeln!(out, "{},{:.16e},{}", i + 1, p, null)?;
        }
        Ok(())
    }

    /// Reads the format produced by [`HypothesisStream::write_csv`]. The
    /// sensitivity metadata is not part of the file and must be supplied.
    pub fn read_csv<R: BufRead>(input: R, sensitivity_eta: f64, sensitivity_mu: f64) -> Result<Self> {
        let path = Path::new("<stream>").to_path_buf();
        let mut pvalues = Vec::new();
        let mut is_null = Vec::new();
        for (row, line) in input.lines().enumerate() {
            let line = line.map_err(|source| Error::Io { path: path.clone(), source })?;
            if row == 0 || line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| Error::CsvRow { path: path.clone(), row: row + 1, message };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(bad(format!("expected 3 fields, found {}", fields.len())));
            }
            pvalues.push(fields[1].trim().parse::<f64>().map_err(|e| bad(e.to_string()))?);
            is_null.push(fields[2].trim().parse::<bool>().map_err(|e| bad(e.to_string()))?);
        }
        Self::new(pvalues, is_null, sensitivity_eta, sensitivity_mu)
    }
}

/// Bernoulli features: success rate 1/2 under the null, `theta_alt` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BernoulliModel {
    pub n: u32,
    pub k: usize,
    pub pi1: f64,
    pub theta_alt: f64,
}

/// Truncated-exponential features on `[0, b]`: rate 1 under the null,
/// `theta_alt > 1` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncExpModel {
    pub n: u32,
    pub k: usize,
    pub pi1: f64,
    pub b: f64,
    pub theta_alt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Bernoulli(BernoulliModel),
    TruncExp(TruncExpModel),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        let (n, k, pi1) = match self {
            Model::Bernoulli(m) => (m.n, m.k, m.pi1),
            Model::TruncExp(m) => (m.n, m.k, m.pi1),
        };
        if n == 0 || k == 0 {
            return Err(Error::InvalidParameter("n and k must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&pi1) {
            return Err(Error::InvalidParameter(format!("pi1 must lie in [0, 1], got {pi1}")));
        }
        match self {
            Model::Bernoulli(m) => {
                if !(m.theta_alt > 0.5 && m.theta_alt <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "Bernoulli theta_alt must lie in (0.5, 1], got {}",
                        m.theta_alt
                    )));
                }
            }
            Model::TruncExp(m) => {
                if m.b != 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "only truncation point b = 1 is supported, got {}",
                        m.b
                    )));
                }
                if !(m.theta_alt.is_finite() && m.theta_alt > 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "truncated-exponential theta_alt must exceed 1, got {}",
                        m.theta_alt
                    )));
                }
                if n < 30 {
                    return Err(Error::InvalidParameter(format!("the normal approximation needs n >= 30, got {n}")));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u32 {
        match self {
            Model::Bernoulli(m) => m.n,
            Model::TruncExp(m) => m.n,
        }
    }

    pub fn k(&self) -> usize {
        match self {
            Model::Bernoulli(m) => m.k,
            Model::TruncExp(m) => m.k,
        }
    }

    /// Multiplicative sensitivity `eta = 1/sqrt(n)`.
    pub fn sensitivity_eta(&self) -> f64 {
        1.0 / f64::from(self.n()).sqrt()
    }
}

/// `ln C(n, m)` as a running product of ratios, folded into a log whenever
/// the product gets large. Roughly one rounding per factor.
fn ln_choose(n: u32, m: u32) -> f64 {
    let m = m.min(n - m);
    let mut ln_sum = 0.0;
    let mut prod = 1.0f64;
    for i in 1..=m {
        prod *= f64::from(n - m + i) / f64::from(i);
        if prod > 1e280 {
            ln_sum += prod.ln();
            prod = 1.0;
        }
    }
    ln_sum + prod.ln()
}

/// `ln Pr(X >= t)` for `X ~ Binomial(n, 1/2)` with `t > n/2`, where the
/// summands decrease monotonically from the leading one.
fn ln_upper_tail_past_mode(n: u32, t: u32) -> f64 {
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    for k in t..n {
        term *= f64::from(n - k) / f64::from(k + 1);
        sum += term;
        if term < sum * 1e-18 {
            break;
        }
    }
    ln_choose(n, t) - f64::from(n) * std::f64::consts::LN_2 + sum.ln()
}

/// Natural log of the exact upper tail `Pr(X >= t)`, `X ~ Binomial(n, 1/2)`.
pub fn binom_tail_ln_pvalue(n: u32, t: u32) -> Result<f64> {
    if t > n {
        return Err(Error::InvalidParameter(format!("tail index {t} outside [0, {n}]")));
    }
    if t == 0 {
        return Ok(0.0);
    }
    if 2 * u64::from(t) > u64::from(n) {
        Ok(ln_upper_tail_past_mode(n, t))
    } else {
        // Pr(X >= t) = 1 - Pr(X <= t - 1) = 1 - Pr(X >= n - t + 1) by symmetry;
        // the subtracted tail is at most 1/2 so nothing cancels.
        let other = ln_upper_tail_past_mode(n, n - t + 1);
        Ok((-other.exp()).ln_1p())
    }
}

/// Exact upper-tail p-value `sum_{j=t}^{n} C(n, j) / 2^n`.
pub fn binom_tail_pvalue(n: u32, t: u32) -> Result<f64> {
    binom_tail_ln_pvalue(n, t).map(f64::exp)
}

/// Mean and variance of the rate-`theta` exponential truncated to `[0, b]`.
/// Only `b = 1` is supported.
pub fn trunc_exp_moments(theta: f64, b: f64) -> Result<(f64, f64)> {
    if !(theta.is_finite() && theta > 0.0) {
        return Err(Error::InvalidParameter(format!("theta must be positive, got {theta}")));
    }
    if b != 1.0 {
        return Err(Error::InvalidParameter(format!("only b = 1 has a closed form here, got {b}")));
    }
    let e = theta.exp();
    let mean = 1.0 / theta + 1.0 / (1.0 - e);
    let variance = 1.0 / (theta * theta) - e / ((e - 1.0) * (e - 1.0));
    Ok((mean, variance))
}

fn null_z_score(n: u32, t_sum: f64) -> f64 {
    let (mean, var) = trunc_exp_moments(1.0, 1.0).expect("null moments are well defined");
    let n = f64::from(n);
    (t_sum - n * mean) / (n * var).sqrt()
}

fn clamp_pvalue(p: f64) -> f64 {
    p.clamp(MU_FLOOR, 1.0)
}

/// Standard normal survival function.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// `Pr_{theta=1}(T > t_sum)` under the normal approximation to the sum of `n`
/// null observations, clamped to `[MU_FLOOR, 1]`.
pub fn trunc_exp_pvalue(n: u32, t_sum: f64) -> f64 {
    clamp_pvalue(normal_sf(null_z_score(n, t_sum)))
}

/// `Pr_{theta=1}(T < t_sum)`: the one-sided p-value for rate alternatives
/// `theta > 1`, which shrink the sum. This is what the generator uses.
pub fn trunc_exp_lower_pvalue(n: u32, t_sum: f64) -> f64 {
    clamp_pvalue(normal_sf(-null_z_score(n, t_sum)))
}

/// One truncated-exponential draw by inverse CDF:
/// `x = -ln(1 - u (1 - e^{-theta b})) / theta`.
pub fn trunc_exp_quantile(u: f64, theta: f64, b: f64) -> f64 {
    let mass = -(-theta * b).exp_m1();
    -(-u * mass).ln_1p() / theta
}

/// Draws a stream of `k` hypotheses from `model`.
///
/// Per feature: one draw for the null flag, then `n` observations. The
/// sensitivity metadata is `eta = 1/sqrt(n)`, `mu = MU_FLOOR`.
pub fn generate_stream<R: Rng + ?Sized>(model: &Model, rng: &mut R) -> Result<HypothesisStream> {
    model.validate()?;
    let k = model.k();
    let mut pvalues = Vec::with_capacity(k);
    let mut is_null = Vec::with_capacity(k);
    match model {
        Model::Bernoulli(m) => {
            for _ in 0..k {
                let null = !rng.random_bool(m.pi1);
                let theta = if null { 0.5 } else { m.theta_alt };
                let successes = (0..m.n).filter(|_| rng.random_bool(theta)).count() as u32;
                pvalues.push(clamp_pvalue(binom_tail_pvalue(m.n, successes)?));
                is_null.push(null);
            }
        }
        Model::TruncExp(m) => {
            for _ in 0..k {
                let null = !rng.random_bool(m.pi1);
                let theta = if null { 1.0 } else { m.theta_alt };
                let sum: f64 = (0..m.n).map(|_| trunc_exp_quantile(rng.random::<f64>(), theta, m.b)).sum();
                pvalues.push(trunc_exp_lower_pvalue(m.n, sum));
                is_null.push(null);
            }
        }
    }
    HypothesisStream::new(pvalues, is_null, model.sensitivity_eta(), MU_FLOOR)
}

/// Per-query privacy level of the naive Laplace baseline under advanced
/// composition over `k` queries: `eps / sqrt(8 k ln(1/delta))`.
pub fn lap_per_query_epsilon(budget: &PrivacyBudget, k: usize) -> Result<f64> {
    if budget.delta() <= 0.0 {
        return Err(Error::InvalidParameter("advanced composition needs delta > 0".into()));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    Ok(budget.epsilon() / (8.0 * k as f64 * (1.0 / budget.delta()).ln()).sqrt())
}

/// Adds `Lap(1/eps_per)` noise to every p-value (additive sensitivity 1) and
/// clamps back into `[0, 1]`. Null flags pass through.
pub fn laplace_privatize_stream<U: UniformSource + ?Sized>(
    stream: &HypothesisStream,
    budget: &PrivacyBudget,
    source: &mut U,
) -> Result<HypothesisStream> {
    let eps_per = lap_per_query_epsilon(budget, stream.len().max(1))?;
    let scale = LaplaceScale::new(1.0 / eps_per)?;
    let pvalues = stream.pvalues().iter().map(|p| (p + sample_laplace(scale, source)).clamp(0.0, 1.0)).collect();
    HypothesisStream::new(pvalues, stream.is_null.clone(), stream.sensitivity_eta, stream.sensitivity_mu)
}
