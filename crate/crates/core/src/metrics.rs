//! FDP, power, mFDR, FDP-hat traces and wealth reconstruction.

use crate::error::{Error, Result};
use crate::procedures::{ProcedureConfig, StepRecord, WealthRule};

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub fdp: f64,
    /// `None` when the stream had no non-null hypotheses.
    pub power: Option<f64>,
    pub rejections: usize,
    pub false_rejections: usize,
}

/// Means over trials. `mean_power` averages only the trials where power is
/// defined and is NaN if there are none; `mfdr` is NaN when no trial
/// rejected anything.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateSummary {
    pub trials: usize,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub power_trials: usize,
    pub mfdr: f64,
    pub mean_rejections: f64,
}

fn check_lengths(records: &[StepRecord], is_null: &[bool]) -> Result<()> {
    if records.len() != is_null.len() {
        return Err(Error::LengthMismatch { left: records.len(), right: is_null.len() });
    }
    Ok(())
}

fn counts(records: &[StepRecord], is_null: &[bool]) -> (usize, usize) {
    records
        .iter()
        .zip(is_null)
        .filter(|(r, _)| r.rejected)
        .fold((0, 0), |(all, f), (_, null)| (all + 1, f + usize::from(*null)))
}

/// False rejections over `max(rejections, 1)`.
pub fn fdp(records: &[StepRecord], is_null: &[bool]) -> Result<f64> {
    check_lengths(records, is_null)?;
    let (all, false_rej) = counts(records, is_null);
    Ok(false_rej as f64 / all.max(1) as f64)
}

/// Fraction of non-null hypotheses rejected.
pub fn power(records: &[StepRecord], is_null: &[bool]) -> Result<f64> {
    check_lengths(records, is_null)?;
    let non_null = is_null.iter().filter(|n| !**n).count();
    if non_null == 0 {
        return Err(Error::NoNonNulls);
    }
    let hits = records.iter().zip(is_null).filter(|(r, null)| r.rejected && !**null).count();
    Ok(hits as f64 / non_null as f64)
}

pub fn trial_summary(records: &[StepRecord], is_null: &[bool]) -> Result<TrialSummary> {
    let fdp = fdp(records, is_null)?;
    let power = match power(records, is_null) {
        Ok(p) => Some(p),
        Err(Error::NoNonNulls) => None,
        Err(e) => return Err(e),
    };
    let (rejections, false_rejections) = counts(records, is_null);
    Ok(TrialSummary { fdp, power, rejections, false_rejections })
}

fn mean_se(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64, usize) {
    let n = xs.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = xs.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0, 1);
    }
    let var = xs.map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt(), n)
}

pub fn aggregate(trials: &[TrialSummary]) -> Result<AggregateSummary> {
    if trials.is_empty() {
        return Err(Error::EmptyAggregate);
    }
    let (mean_fdr, se_fdr, _) = mean_se(trials.iter().map(|t| t.fdp));
    let (mean_power, se_power, power_trials) = mean_se(trials.iter().filter_map(|t| t.power));
    let rejections: usize = trials.iter().map(|t| t.rejections).sum();
    let false_rejections: usize = trials.iter().map(|t| t.false_rejections).sum();
    let mfdr = if rejections == 0 { f64::NAN } else { false_rejections as f64 / rejections as f64 };
    Ok(AggregateSummary {
        trials: trials.len(),
        mean_fdr,
        se_fdr,
        mean_power,
        se_power,
        power_trials,
        mfdr,
        mean_rejections: rejections as f64 / trials.len() as f64,
    })
}

/// Which FDP-hat estimator to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdpHatVariant {
    /// `sum_j alpha_j 1{p_j > lambda_j} / (1 - lambda_j)`.
    Saffron,
    /// `sum_j alpha_j 1{p_j > 2 lambda_j} / (1 - 2 lambda_j)`.
    Paprika,
}

/// Prefix-wise FDP-hat, denominator `max(|R(t)|, 1)`.
pub fn fdp_hat(records: &[StepRecord], variant: FdpHatVariant) -> Vec<f64> {
    let mut num = 0.0;
    let mut rejections = 0usize;
    records
        .iter()
        .map(|r| {
            if !r.candidate && r.alpha_t > 0.0 {
                num += match variant {
                    FdpHatVariant::Saffron => r.alpha_t / (1.0 - r.lambda_t),
                    FdpHatVariant::Paprika => r.alpha_t / (1.0 - 2.0 * r.lambda_t),
                };
            }
            rejections += usize::from(r.rejected);
            num / rejections.max(1) as f64
        })
        .collect()
}

/// Wealth after each step: `W0` minus spending plus rejection payouts
/// (`alpha - W0` for the first rejection, `alpha` afterwards).
pub fn wealth_trace(records: &[StepRecord], config: &ProcedureConfig, rule: WealthRule) -> Vec<f64> {
    let mut wealth = config.w0;
    let mut rejections = 0usize;
    records
        .iter()
        .map(|r| {
            wealth -= match rule {
                WealthRule::Saffron if r.candidate => 0.0,
                WealthRule::Saffron => r.alpha_t / (1.0 - r.lambda_t),
                WealthRule::Paprika => r.alpha_t / (1.0 - 2.0 * r.lambda_t),
                WealthRule::Lord => r.alpha_t,
            };
            if r.rejected {
                wealth += if rejections == 0 { config.alpha - config.w0 } else { config.alpha };
                rejections += 1;
            }
            wealth
        })
        .collect()
}
