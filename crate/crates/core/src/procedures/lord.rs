use super::{payout, ProcedureConfig, StepRecord};
use crate::error::Result;

/// LORD: wealth decays at every step, no candidacy, no noise.
///
/// `alpha_t = W0 g(t) + (alpha - W0) g(t - tau_1) + sum_{j>=2} alpha g(t - tau_j)`.
/// `config.lambda` is ignored and recorded as zero.
#[derive(Debug, Clone)]
pub struct Lord {
    config: ProcedureConfig,
    t: usize,
    rejection_times: Vec<usize>,
}

impl Lord {
    pub fn new(config: &ProcedureConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config: config.clone(), t: 0, rejection_times: Vec::new() })
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn rejection_times(&self) -> &[usize] {
        &self.rejection_times
    }

    pub fn alpha(&self, t: usize) -> f64 {
        let gamma = &self.config.gamma;
        self.rejection_times
            .iter()
            .enumerate()
            .fold(self.config.w0 * gamma.get(t), |acc, (j, tau)| acc + payout(&self.config, j) * gamma.get(t - tau))
    }

    pub fn step(&mut self, p: f64) -> StepRecord {
        self.t += 1;
        let t = self.t;
        let alpha_t = self.alpha(t);
        let rejected = p <= alpha_t;
        if rejected {
            self.rejection_times.push(t);
        }
        StepRecord { t, lambda_t: 0.0, candidate: rejected, alpha_t, rejected, noise_zt: 0.0, noise_zalpha: 0.0 }
    }
}
