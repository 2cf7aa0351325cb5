//! Replication engine.
//!
//! A work item is one (stream cell, trial) pair. It generates the
//! hypothesis stream once and runs every (procedure, epsilon, s) variant on
//! it, each with its own noise seed. Items run in parallel when the
//! `parallel` feature is on; results are reduced in item order, so output
//! does not depend on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::seed::{hash_words, tag};
use super::spec::ExperimentSpec;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, trial_summary, AggregateSummary, TrialSummary};
use crate::models::{generate_stream, HypothesisStream};
use crate::procedures::{run_procedure, ProcedureId, StepRecord};

/// One row of the summary table. `epsilon` and `s` are `None` for
/// procedures that do not depend on them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub model: String,
    pub pi1: f64,
    pub theta_alt: f64,
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
    pub procedure: ProcedureId,
    pub summary: AggregateSummary,
}

/// Parameters that determine the hypothesis stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamCell {
    pub pi1: f64,
    pub theta_alt: f64,
}

/// A procedure run on a stream cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Variant {
    pub procedure: ProcedureId,
    pub epsilon: Option<f64>,
    pub s: Option<f64>,
}

impl ExperimentSpec {
    pub fn stream_cells(&self) -> Vec<StreamCell> {
        self.pi1_grid
            .iter()
            .flat_map(|&pi1| self.theta_alt_grid.iter().map(move |&theta_alt| StreamCell { pi1, theta_alt }))
            .collect()
    }

    /// Procedures in spec order, each expanded over the grids it depends on.
    pub fn variants(&self) -> Vec<Variant> {
        let mut out = Vec::new();
        for &procedure in &self.procedures {
            if !procedure.is_private() {
                out.push(Variant { procedure, epsilon: None, s: None });
                continue;
            }
            for &eps in &self.epsilon_grid {
                if procedure.uses_shift() {
                    out.extend(self.s_grid.iter().map(|&s| Variant { procedure, epsilon: Some(eps), s: Some(s) }));
                } else {
                    out.push(Variant { procedure, epsilon: Some(eps), s: None });
                }
            }
        }
        out
    }

    fn stream_words(&self, cell: &StreamCell, trial: usize) -> Vec<u64> {
        vec![
            self.master_seed,
            tag(self.model.as_str()),
            u64::from(self.n),
            self.k as u64,
            cell.pi1.to_bits(),
            cell.theta_alt.to_bits(),
            trial as u64,
        ]
    }

    fn variant_words(v: &Variant) -> [u64; 3] {
        [tag(v.procedure.as_str()), v.epsilon.map_or(u64::MAX, f64::to_bits), v.s.map_or(u64::MAX, f64::to_bits)]
    }

    /// Seed of the hypothesis stream. Paired runs share it across variants.
    pub fn stream_seed(&self, cell: &StreamCell, trial: usize, variant: &Variant) -> u64 {
        let mut words = self.stream_words(cell, trial);
        if !self.paired {
            words.extend(Self::variant_words(variant));
        }
        hash_words(&words)
    }

    /// Seed of the privacy noise of one variant.
    pub fn noise_seed(&self, cell: &StreamCell, trial: usize, variant: &Variant) -> u64 {
        let mut words = self.stream_words(cell, trial);
        words.push(tag("noise"));
        words.extend(Self::variant_words(variant));
        hash_words(&words)
    }

    pub fn generate(&self, cell: &StreamCell, trial: usize, variant: &Variant) -> Result<HypothesisStream> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.stream_seed(cell, trial, variant));
        generate_stream(&self.model_for(cell.pi1, cell.theta_alt), &mut rng)
    }

    /// Transcript of one variant on a given stream.
    pub fn run_variant(
        &self,
        cell: &StreamCell,
        trial: usize,
        variant: &Variant,
        stream: &HypothesisStream,
    ) -> Result<Vec<StepRecord>> {
        let eps = variant.epsilon.unwrap_or(self.epsilon_grid[0]);
        let s = variant.s.unwrap_or(self.s_grid[0]);
        let config = self.procedure_config(variant.procedure, eps, s)?;
        let mut noise = ChaCha8Rng::seed_from_u64(self.noise_seed(cell, trial, variant));
        run_procedure(variant.procedure, &config, stream, &mut noise)
    }
}

fn cell_label(spec: &ExperimentSpec, cell: &StreamCell, variant: &Variant, trial: usize) -> String {
    let mut label =
        format!("{} pi1={} theta_alt={} {}", spec.model.as_str(), cell.pi1, cell.theta_alt, variant.procedure);
    if let Some(eps) = variant.epsilon {
        label.push_str(&format!(" epsilon={eps}"));
    }
    if let Some(s) = variant.s {
        label.push_str(&format!(" s={s}"));
    }
    label.push_str(&format!(" trial={trial}"));
    label
}

fn run_item(spec: &ExperimentSpec, cell: &StreamCell, trial: usize, variants: &[Variant]) -> Result<Vec<TrialSummary>> {
    let context =
        |v: Variant| move |e: Error| Error::Cell { cell: cell_label(spec, cell, &v, trial), source: Box::new(e) };
    let shared = match spec.paired {
        true => Some(spec.generate(cell, trial, &variants[0]).map_err(context(variants[0]))?),
        false => None,
    };
    variants
        .iter()
        .map(|v| {
            let owned;
            let stream = match &shared {
                Some(s) => s,
                None => {
                    owned = spec.generate(cell, trial, v).map_err(context(*v))?;
                    &owned
                }
            };
            let records = spec.run_variant(cell, trial, v, stream).map_err(context(*v))?;
            trial_summary(&records, stream.is_null()).map_err(context(*v))
        })
        .collect()
}

#[cfg(feature = "parallel")]
fn map_items<T, F>(count: usize, jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    let run = || (0..count).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match jobs {
        None => run(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Invalid(format!("cannot start {n} worker threads: {e}")))?
            .install(run),
    }
}

#[cfg(not(feature = "parallel"))]
fn map_items<T, F>(count: usize, _jobs: Option<usize>, f: F) -> Result<Vec<T>>
where
    F: Fn(usize) -> Result<T>,
{
    (0..count).map(f).collect()
}

/// Runs every cell of `spec`. `jobs` caps worker threads (`None` uses all
/// cores); it has no effect on the result.
pub fn run_experiment(spec: &ExperimentSpec, jobs: Option<usize>) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    if jobs == Some(0) {
        return Err(Error::Invalid("--jobs must be at least 1".into()));
    }
    let cells = spec.stream_cells();
    let variants = spec.variants();
    let trials = spec.trials;
    let per_item =
        map_items(cells.len() * trials, jobs, |i| run_item(spec, &cells[i / trials], i % trials, &variants))?;

    let mut rows = Vec::with_capacity(cells.len() * variants.len());
    for (c, cell) in cells.iter().enumerate() {
        for (v, variant) in variants.iter().enumerate() {
            let summaries: Vec<TrialSummary> =
                per_item[c * trials..(c + 1) * trials].iter().map(|item| item[v]).collect();
            rows.push(ResultRow {
                model: spec.model.as_str().to_string(),
                pi1: cell.pi1,
                theta_alt: cell.theta_alt,
                epsilon: variant.epsilon,
                s: variant.s,
                procedure: variant.procedure,
                summary: aggregate(&summaries)?,
            });
        }
    }
    Ok(rows)
}
