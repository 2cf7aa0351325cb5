use super::{payout, LambdaSchedule, ProcedureConfig, StepRecord};
use crate::error::{Error, Result};
use crate::noise::{compute_shift, sample_laplace, LaplaceScale, UniformSource};

/// Private online FDR control: SparseVector with a wealth-driven dynamic
/// threshold on `ln p`.
///
/// Per step, until `c` rejections have been made:
/// draw `Z_t ~ Lap(4 eta c / eps)`, mark a candidate if `p_t < 2 lambda_t`,
/// and reject if additionally `ln p_t + Z_t <= ln alpha_t - A + Z_alpha`.
/// Each rejection redraws `Z_alpha ~ Lap(2 eta c / eps)`. After the cap the
/// procedure outputs non-rejections without touching its state or noise.
///
/// Unlike SAFFRON, wealth decays at every step whether or not the p-value
/// is a candidate, so thresholds never depend on the data directly.
#[derive(Debug, Clone)]
pub struct Paprika {
    config: ProcedureConfig,
    t: usize,
    rejection_times: Vec<usize>,
    z_alpha: f64,
    shift_a: f64,
    query_scale: LaplaceScale,
    threshold_scale: LaplaceScale,
    candidacy_gate: bool,
}

impl Paprika {
    /// Computes the shift and draws the initial threshold noise `Z_alpha^0`.
    pub fn new<U: UniformSource + ?Sized>(config: &ProcedureConfig, eta: f64, noise: &mut U) -> Result<Self> {
        config.validate()?;
        if let LambdaSchedule::Constant(l) = config.lambda {
            if !(l > 0.0 && l < 0.5) {
                return Err(Error::InvalidParameter(format!(
                    "candidacy uses 2 lambda, so constant lambda must lie in (0, 1/2), got {l}"
                )));
            }
        }
        let shift_a = compute_shift(config.s, config.c, eta, &config.budget, config.k as u64)?;
        let base = eta * f64::from(config.c) / config.budget.epsilon();
        let query_scale = LaplaceScale::new(4.0 * base)?;
        let threshold_scale = LaplaceScale::new(2.0 * base)?;
        let z_alpha = sample_laplace(threshold_scale, noise);
        Ok(Self {
            config: config.clone(),
            t: 0,
            rejection_times: Vec::new(),
            z_alpha,
            shift_a,
            query_scale,
            threshold_scale,
            candidacy_gate: true,
        })
    }

    /// Replaces the computed shift `A`. Diagnostic use only: the privacy
    /// guarantee depends on the computed value.
    pub fn with_shift(mut self, shift_a: f64) -> Self {
        self.shift_a = shift_a;
        self
    }

    /// Treats every p-value as a candidate and drops the `(1 - 2 lambda)`
    /// factor by setting `lambda = 0`. Diagnostic use only.
    pub fn without_candidacy(mut self) -> Self {
        self.candidacy_gate = false;
        self
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn count(&self) -> usize {
        self.rejection_times.len()
    }

    pub fn rejection_times(&self) -> &[usize] {
        &self.rejection_times
    }

    pub fn shift(&self) -> f64 {
        self.shift_a
    }

    pub fn z_alpha(&self) -> f64 {
        self.z_alpha
    }

    /// `W0 g(t) + (alpha - W0) g(t - tau_1) + sum_{j>=2} alpha g(t - tau_j)`.
    pub fn bracket(&self, t: usize) -> f64 {
        let gamma = &self.config.gamma;
        self.rejection_times
            .iter()
            .enumerate()
            .fold(self.config.w0 * gamma.get(t), |acc, (j, tau)| acc + payout(&self.config, j) * gamma.get(t - tau))
    }

    /// `(alpha_t, lambda_t)` for the upcoming time `t`. Under alpha matching
    /// `alpha = (1 - 2 alpha) B`, i.e. `alpha = B / (1 + 2B)`.
    pub fn alpha(&self, t: usize) -> (f64, f64) {
        let b = self.bracket(t);
        if !self.candidacy_gate {
            return (b, 0.0);
        }
        match self.config.lambda {
            LambdaSchedule::Constant(lambda) => ((1.0 - 2.0 * lambda) * b, lambda),
            LambdaSchedule::MatchAlpha => {
                let a = b / (1.0 + 2.0 * b);
                (a, a)
            }
        }
    }

    pub fn step<U: UniformSource + ?Sized>(&mut self, p: f64, noise: &mut U) -> StepRecord {
        self.t += 1;
        let t = self.t;
        if self.count() >= self.config.c as usize {
            let lambda_t = match self.config.lambda {
                LambdaSchedule::Constant(l) if self.candidacy_gate => l,
                _ => 0.0,
            };
            return StepRecord {
                t,
                lambda_t,
                candidate: false,
                alpha_t: 0.0,
                rejected: false,
                noise_zt: 0.0,
                noise_zalpha: self.z_alpha,
            };
        }
        let z_t = sample_laplace(self.query_scale, noise);
        let (alpha_t, lambda_t) = self.alpha(t);
        let candidate = !self.candidacy_gate || p < 2.0 * lambda_t;
        let z_alpha = self.z_alpha;
        let rejected = candidate && alpha_t > 0.0 && p.ln() + z_t <= alpha_t.ln() - self.shift_a + z_alpha;
        if rejected {
            self.rejection_times.push(t);
            self.z_alpha = sample_laplace(self.threshold_scale, noise);
        }
        StepRecord { t, lambda_t, candidate, alpha_t, rejected, noise_zt: z_t, noise_zalpha: z_alpha }
    }

    /// Books a decision without a p-value or noise draw. Used to replay
    /// scripted histories.
    pub fn advance(&mut self, rejected: bool) {
        self.t += 1;
        if rejected {
            self.rejection_times.push(self.t);
        }
    }
}
