//! Online FDR procedures as sequential state machines.
//!
//! Each procedure consumes one p-value at a time and emits a [`StepRecord`]
//! before seeing the next one. The private procedure draws its Laplace
//! noise from a caller-owned [`UniformSource`].

mod lord;
mod paprika;
mod saffron;
mod sparse_vector;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::models::{laplace_privatize_stream, HypothesisStream};
use crate::noise::{PrivacyBudget, UniformSource};

pub use lord::Lord;
pub use paprika::Paprika;
pub use saffron::Saffron;
pub use sparse_vector::{sparse_vector, SvAnswer};

/// How the candidacy level `lambda_t` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSchedule {
    Constant(f64),
    /// `lambda_t = alpha_t`, resolved as a fixed point of the threshold rule.
    MatchAlpha,
}

/// Nonnegative spending sequence `gamma_j`, `j >= 0`, with `gamma_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSequence {
    /// `1/k` for `1 <= j <= k`, zero elsewhere.
    Constant { k: usize },
    /// `j^{-exponent}` on `1..=horizon`, normalised to sum to one.
    PowerDecay { exponent: f64, horizon: usize, norm: f64 },
}

impl GammaSequence {
    pub fn constant(k: usize) -> Self {
        GammaSequence::Constant { k }
    }

    pub fn power_decay(exponent: f64, horizon: usize) -> Self {
        let norm = (1..=horizon).map(|j| (j as f64).powf(-exponent)).sum();
        GammaSequence::PowerDecay { exponent, horizon, norm }
    }

    pub fn get(&self, j: usize) -> f64 {
        match *self {
            GammaSequence::Constant { k } if (1..=k).contains(&j) => 1.0 / k as f64,
            GammaSequence::PowerDecay { exponent, horizon, norm } if (1..=horizon).contains(&j) => {
                (j as f64).powf(-exponent) / norm
            }
            _ => 0.0,
        }
    }

    fn horizon(&self) -> usize {
        match *self {
            GammaSequence::Constant { k } => k,
            GammaSequence::PowerDecay { horizon, .. } => horizon,
        }
    }

    pub fn total(&self) -> f64 {
        (1..=self.horizon()).map(|j| self.get(j)).sum()
    }
}

/// `gamma_constant(k)` materialised as `(gamma_0, ..., gamma_{k+1})`.
pub fn gamma_constant(k: usize) -> Vec<f64> {
    let g = GammaSequence::constant(k);
    (0..=k + 1).map(|j| g.get(j)).collect()
}

/// Tuning knobs shared by every procedure.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcedureConfig {
    pub alpha: f64,
    pub w0: f64,
    pub lambda: LambdaSchedule,
    pub gamma: GammaSequence,
    pub c: u32,
    pub budget: PrivacyBudget,
    pub s: f64,
    pub k: usize,
}

impl ProcedureConfig {
    /// Defaults of the experiment grid: alpha 0.2, W0 = alpha/2, constant
    /// gamma over k = 800, c = 40, eps 5, delta 2.5e-4, s = 1, lambda 0.2.
    pub fn experiment_defaults() -> Self {
        ProcedureConfig {
            alpha: 0.2,
            w0: 0.1,
            lambda: LambdaSchedule::Constant(0.2),
            gamma: GammaSequence::constant(800),
            c: 40,
            budget: PrivacyBudget::new(5.0, 2.5e-4).expect("valid default budget"),
            s: 1.0,
            k: 800,
        }
    }

    pub fn with_lambda(mut self, lambda: LambdaSchedule) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(0.0 < self.w0 && self.w0 < self.alpha && self.alpha < 1.0) {
            return bad(format!("need 0 < w0 < alpha < 1, got w0 = {}, alpha = {}", self.w0, self.alpha));
        }
        if self.gamma.total() > 1.0 + 1e-12 {
            return bad(format!("gamma sums to {} > 1", self.gamma.total()));
        }
        if self.c == 0 {
            return bad("rejection cap c must be at least 1".into());
        }
        if !(self.s.is_finite() && self.s > 0.0) {
            return bad(format!("shift magnitude s must be positive, got {}", self.s));
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if let LambdaSchedule::Constant(l) = self.lambda {
            if !(l > 0.0 && l < 1.0) {
                return bad(format!("constant lambda must lie in (0, 1), got {l}"));
            }
        }
        Ok(())
    }
}

/// One line of a procedure transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub lambda_t: f64,
    pub candidate: bool,
    pub alpha_t: f64,
    pub rejected: bool,
    pub noise_zt: f64,
    pub noise_zalpha: f64,
}

/// Payout to the wealth of the `j`-th rejection (0-based): `alpha - W0` for
/// the first, `alpha` after.
fn payout(config: &ProcedureConfig, j: usize) -> f64 {
    if j == 0 {
        config.alpha - config.w0
    } else {
        config.alpha
    }
}

/// The procedures the harness knows how to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProcedureId {
    PaprikaAi,
    Paprika,
    SaffronAi,
    Saffron,
    Lord,
    /// Same rule as [`ProcedureId::SaffronAi`]: the GAI member with
    /// `lambda_t = alpha_t`. Kept as a separate name to mirror the tables.
    AlphaInvesting,
    LapSaffron,
}

impl ProcedureId {
    pub const ALL: [ProcedureId; 7] = [
        ProcedureId::PaprikaAi,
        ProcedureId::Paprika,
        ProcedureId::SaffronAi,
        ProcedureId::Saffron,
        ProcedureId::Lord,
        ProcedureId::AlphaInvesting,
        ProcedureId::LapSaffron,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ProcedureId::PaprikaAi => "paprika_ai",
            ProcedureId::Paprika => "paprika",
            ProcedureId::SaffronAi => "saffron_ai",
            ProcedureId::Saffron => "saffron",
            ProcedureId::Lord => "lord",
            ProcedureId::AlphaInvesting => "alpha_investing",
            ProcedureId::LapSaffron => "lap_saffron",
        }
    }

    /// Uses privacy noise, so results depend on epsilon and s.
    pub fn is_private(&self) -> bool {
        matches!(self, ProcedureId::PaprikaAi | ProcedureId::Paprika | ProcedureId::LapSaffron)
    }

    /// Depends on the shift magnitude `s`.
    pub fn uses_shift(&self) -> bool {
        matches!(self, ProcedureId::PaprikaAi | ProcedureId::Paprika)
    }

    pub fn wealth_rule(&self) -> WealthRule {
        match self {
            ProcedureId::PaprikaAi | ProcedureId::Paprika => WealthRule::Paprika,
            ProcedureId::Lord => WealthRule::Lord,
            _ => WealthRule::Saffron,
        }
    }
}

impl fmt::Display for ProcedureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProcedureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProcedureId::ALL.into_iter().find(|p| p.as_str() == s).ok_or_else(|| {
            let known: Vec<_> = ProcedureId::ALL.iter().map(|p| p.as_str()).collect();
            Error::InvalidParameter(format!("unknown procedure `{s}` (known: {})", known.join(", ")))
        })
    }
}

/// How spending and earning are booked when reconstructing wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WealthRule {
    /// Spends `alpha_t (1 - C_t) / (1 - lambda_t)`: candidates are free.
    Saffron,
    /// Spends `alpha_t / (1 - 2 lambda_t)` at every step.
    Paprika,
    /// Spends `alpha_t` at every step.
    Lord,
}

/// Folds the matching step function over `stream`.
///
/// `config.lambda` is used as given for the constant-lambda procedures and
/// replaced by [`LambdaSchedule::MatchAlpha`] for the alpha-investing ones.
pub fn run_procedure(
    id: ProcedureId,
    config: &ProcedureConfig,
    stream: &HypothesisStream,
    noise: &mut dyn UniformSource,
) -> Result<Vec<StepRecord>> {
    if stream.len() > config.k {
        return Err(Error::StreamTooLong { len: stream.len(), max: config.k });
    }
    let matched = config.clone().with_lambda(LambdaSchedule::MatchAlpha);
    match id {
        ProcedureId::Paprika | ProcedureId::PaprikaAi => {
            let config = if id == ProcedureId::PaprikaAi { &matched } else { config };
            let mut proc = Paprika::new(config, stream.sensitivity_eta(), noise)?;
            Ok(stream.pvalues().iter().map(|p| proc.step(*p, noise)).collect())
        }
        ProcedureId::Saffron => run_saffron(config, stream.pvalues()),
        ProcedureId::SaffronAi | ProcedureId::AlphaInvesting => run_saffron(&matched, stream.pvalues()),
        ProcedureId::Lord => {
            let mut proc = Lord::new(config)?;
            Ok(stream.pvalues().iter().map(|p| proc.step(*p)).collect())
        }
        ProcedureId::LapSaffron => {
            let noisy = laplace_privatize_stream(stream, &config.budget, noise)?;
            run_saffron(config, noisy.pvalues())
        }
    }
}

fn run_saffron(config: &ProcedureConfig, pvalues: &[f64]) -> Result<Vec<StepRecord>> {
    let mut proc = Saffron::new(config)?;
    Ok(pvalues.iter().map(|p| proc.step(*p)).collect())
}

/// Writes a transcript as CSV with 17 significant digits per real.
pub fn write_transcript_csv<W: Write>(records: &[StepRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "t,lambda_t,candidate,alpha_t,rejected,noise_zt,noise_zalpha")?;
    for r in records {
        writeln!(
            out,
            "{},{:.16e},{},{:.16e},{},{:.16e},{:.16e}",
            r.t,
            r.lambda_t,
            u8::from(r.candidate),
            r.alpha_t,
            u8::from(r.rejected),
            r.noise_zt,
            r.noise_zalpha
        )?;
    }
    Ok(())
}
