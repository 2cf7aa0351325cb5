use super::{payout, LambdaSchedule, ProcedureConfig, StepRecord};
use crate::error::Result;

/// Non-private SAFFRON with candidate-adjusted spending.
///
/// Wealth is only spent on non-candidates: the gamma index of every
/// wealth component advances by one per non-candidate step.
#[derive(Debug, Clone)]
pub struct Saffron {
    config: ProcedureConfig,
    t: usize,
    rejection_times: Vec<usize>,
    /// Candidates among `1..=t` so far.
    candidates_total: usize,
    /// `candidates_total` at each rejection time.
    candidates_at_rejection: Vec<usize>,
}

impl Saffron {
    pub fn new(config: &ProcedureConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config: config.clone(),
            t: 0,
            rejection_times: Vec::new(),
            candidates_total: 0,
            candidates_at_rejection: Vec::new(),
        })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn rejection_times(&self) -> &[usize] {
        &self.rejection_times
    }

    pub fn count(&self) -> usize {
        self.rejection_times.len()
    }

    /// `C_{j+}` for `j = 0..=count`: candidates strictly after the `j`-th
    /// rejection (after time 0 for `j = 0`) up to the current time.
    pub fn candidate_counts(&self) -> Vec<usize> {
        std::iter::once(self.candidates_total)
            .chain(self.candidates_at_rejection.iter().map(|at| self.candidates_total - at))
            .collect()
    }

    /// `W0 g(t - C_{0+}) + (alpha - W0) g(t - tau_1 - C_{1+}) + sum_{j>=2} alpha g(t - tau_j - C_{j+})`
    /// evaluated for the upcoming time `t`, using decisions up to `t - 1`.
    pub fn bracket(&self, t: usize) -> f64 {
        let gamma = &self.config.gamma;
        let mut b = self.config.w0 * gamma.get(t - self.candidates_total);
        for (j, (tau, at)) in self.rejection_times.iter().zip(&self.candidates_at_rejection).enumerate() {
            let after = self.candidates_total - at;
            b += payout(&self.config, j) * gamma.get(t - tau - after);
        }
        b
    }

    /// Threshold and candidacy level for the upcoming time `t`.
    ///
    /// Under the alpha-matching schedule `alpha = (1 - alpha) B` has the
    /// closed-form solution `B / (1 + B)`.
    pub fn alpha(&self, t: usize) -> (f64, f64) {
        let b = self.bracket(t);
        match self.config.lambda {
            LambdaSchedule::Constant(lambda) => ((1.0 - lambda) * b, lambda),
            LambdaSchedule::MatchAlpha => {
                let a = b / (1.0 + b);
                (a, a)
            }
        }
    }

    pub fn step(&mut self, p: f64) -> StepRecord {
        let t = self.t + 1;
        let (alpha_t, lambda_t) = self.alpha(t);
        let candidate = p < lambda_t;
        let rejected = candidate && p <= alpha_t;
        self.advance(candidate, rejected);
        StepRecord { t, lambda_t, candidate, alpha_t, rejected, noise_zt: 0.0, noise_zalpha: 0.0 }
    }

    /// Books one decision without a p-value. Used to replay scripted
    /// histories.
    pub fn advance(&mut self, candidate: bool, rejected: bool) {
        self.t += 1;
        if candidate {
            self.candidates_total += 1;
        }
        if rejected {
            self.rejection_times.push(self.t);
            self.candidates_at_rejection.push(self.candidates_total);
        }
    }
}
