//! Experiment specification files.
//!
//! ```text
//! # comment
//! [section]
//! key = value
//! ```
//!
//! A value is a scalar (`0.2`, `bernoulli`, `true`), a list
//! (`[3, 5, 10]`, `[paprika, saffron]`) or an inclusive numeric range
//! (`[0.01..0.05 step 0.01]`). A scalar is accepted where a list is
//! expected. Each key may appear once.
//!
//! | section        | keys                                                         |
//! |----------------|--------------------------------------------------------------|
//! | `[experiment]` | `trials`, `seed`, `procedures`, `paired`, `output_dir`         |
//! | `[model]`      | `kind`, `n`, `k`, `b`, `pi1_grid`, `theta_alt_grid`            |
//! | `[procedure]`  | `alpha`, `w0`, `c`, `lambda`, `saffron_lambda`, `gamma`, `gamma_exponent` |
//! | `[privacy]`    | `epsilon_grid`, `delta`, `s_grid`                              |
//!
//! Only `[model] kind` is required.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::models::{BernoulliModel, Model, TruncExpModel};
use crate::noise::PrivacyBudget;
use crate::procedures::{GammaSequence, LambdaSchedule, ProcedureConfig, ProcedureId};

/// The grammar as printed by the CLI on usage errors.
pub const GRAMMAR: &str = "\
Spec file grammar (flat sections of key = value; `#` starts a comment):

  [experiment]
  trials     = 100                      # replications per cell, >= 1
  seed       = 2019                     # master seed (u64)
  procedures = [paprika_ai, paprika, saffron_ai, saffron, lord, alpha_investing, lap_saffron]
  paired     = true                     # same stream per trial across procedures
  output_dir = out

  [model]
  kind           = bernoulli            # bernoulli | trunc_exp (required)
  n              = 1000                 # observations per feature
  k              = 800                  # hypotheses per stream
  b              = 1                    # trunc_exp truncation point (only 1)
  pi1_grid       = [0.01..0.05 step 0.01]
  theta_alt_grid = [0.75]               # default 0.75 (bernoulli), 1.95 (trunc_exp)

  [procedure]
  alpha          = 0.2
  w0             = 0.1                  # default alpha / 2
  c              = 40                   # rejection cap of the private procedures
  lambda         = 0.2                  # constant lambda of paprika, in (0, 1/2)
  saffron_lambda = 0.5                  # constant lambda of saffron and lap_saffron
  gamma          = constant             # constant | power
  gamma_exponent = 1.6                  # used by gamma = power

  [privacy]
  epsilon_grid = [3, 5, 10]
  delta        = 2.5e-4
  s_grid       = [1]

Lists: [a, b, c] or an inclusive range [start..end step h].
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Bernoulli,
    TruncExp,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Bernoulli => "bernoulli",
            ModelKind::TruncExp => "trunc_exp",
        }
    }

    fn default_theta_alt(&self) -> f64 {
        match self {
            ModelKind::Bernoulli => 0.75,
            ModelKind::TruncExp => 1.95,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaKind {
    Constant,
    Power { exponent: f64 },
}

/// A validated experiment grid with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub trials: usize,
    pub master_seed: u64,
    pub procedures: Vec<ProcedureId>,
    pub paired: bool,
    pub output_dir: PathBuf,

    pub model: ModelKind,
    pub n: u32,
    pub k: usize,
    pub b: f64,
    pub pi1_grid: Vec<f64>,
    pub theta_alt_grid: Vec<f64>,

    pub alpha: f64,
    pub w0: f64,
    pub c: u32,
    pub lambda: f64,
    pub saffron_lambda: f64,
    pub gamma: GammaKind,

    pub epsilon_grid: Vec<f64>,
    pub delta: f64,
    pub s_grid: Vec<f64>,
}

impl ExperimentSpec {
    /// Defaults for `model` with nothing else set.
    pub fn defaults(model: ModelKind) -> Self {
        ExperimentSpec {
            trials: 100,
            master_seed: 2019,
            procedures: ProcedureId::ALL.to_vec(),
            paired: true,
            output_dir: PathBuf::from("out"),
            model,
            n: 1000,
            k: 800,
            b: 1.0,
            pi1_grid: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            theta_alt_grid: vec![model.default_theta_alt()],
            alpha: 0.2,
            w0: 0.1,
            c: 40,
            lambda: 0.2,
            saffron_lambda: 0.5,
            gamma: GammaKind::Constant,
            epsilon_grid: vec![3.0, 5.0, 10.0],
            delta: 2.5e-4,
            s_grid: vec![1.0],
        }
    }

    pub fn model_for(&self, pi1: f64, theta_alt: f64) -> Model {
        match self.model {
            ModelKind::Bernoulli => Model::Bernoulli(BernoulliModel { n: self.n, k: self.k, pi1, theta_alt }),
            ModelKind::TruncExp => Model::TruncExp(TruncExpModel { n: self.n, k: self.k, pi1, b: self.b, theta_alt }),
        }
    }

    /// Configuration handed to `run_procedure` for one cell.
    pub fn procedure_config(&self, id: ProcedureId, epsilon: f64, s: f64) -> Result<ProcedureConfig> {
        let lambda = match id {
            ProcedureId::Paprika | ProcedureId::PaprikaAi => self.lambda,
            _ => self.saffron_lambda,
        };
        let gamma = match self.gamma {
            GammaKind::Constant => GammaSequence::constant(self.k),
            GammaKind::Power { exponent } => GammaSequence::power_decay(exponent, self.k),
        };
        let config = ProcedureConfig {
            alpha: self.alpha,
            w0: self.w0,
            lambda: LambdaSchedule::Constant(lambda),
            gamma,
            c: self.c,
            budget: PrivacyBudget::new(epsilon, self.delta)?,
            s,
            k: self.k,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(_, message)| Error::Invalid(message))
    }

    /// Like `validate`, also naming the key at fault.
    fn check(&self) -> std::result::Result<(), (&'static str, String)> {
        let fail = |key: &'static str, m: String| Err((key, m));
        if self.trials == 0 {
            return fail("trials", "trials must be at least 1".into());
        }
        if self.procedures.is_empty() {
            return fail("procedures", "procedures must not be empty".into());
        }
        for (key, grid) in [
            ("pi1_grid", &self.pi1_grid),
            ("theta_alt_grid", &self.theta_alt_grid),
            ("epsilon_grid", &self.epsilon_grid),
            ("s_grid", &self.s_grid),
        ] {
            if grid.is_empty() {
                return fail(key, format!("{key} must not be empty"));
            }
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("alpha", format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if !(self.w0 > 0.0 && self.w0 < self.alpha) {
            return fail("w0", format!("w0 must lie in (0, alpha), got {}", self.w0));
        }
        if self.c == 0 {
            return fail("c", "c must be at least 1".into());
        }
        if !(self.lambda > 0.0 && self.lambda < 0.5) {
            return fail("lambda", format!("lambda must lie in (0, 1/2), got {}", self.lambda));
        }
        if !(self.saffron_lambda > 0.0 && self.saffron_lambda < 1.0) {
            return fail("saffron_lambda", format!("saffron_lambda must lie in (0, 1), got {}", self.saffron_lambda));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail("delta", format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if let GammaKind::Power { exponent } = self.gamma {
            if !(exponent.is_finite() && exponent > 0.0) {
                return fail("gamma_exponent", format!("gamma_exponent must be positive, got {exponent}"));
            }
        }
        for &eps in &self.epsilon_grid {
            if !(eps.is_finite() && eps > 0.0) {
                return fail("epsilon_grid", format!("epsilon must be positive, got {eps}"));
            }
        }
        for &s in &self.s_grid {
            if !(s.is_finite() && s > 0.0) {
                return fail("s_grid", format!("s must be positive, got {s}"));
            }
        }
        for &pi1 in &self.pi1_grid {
            if !(0.0..=1.0).contains(&pi1) {
                return fail("pi1_grid", format!("pi1 must lie in [0, 1], got {pi1}"));
            }
            for &theta in &self.theta_alt_grid {
                if let Err(e) = self.model_for(pi1, theta).validate() {
                    let key = if self.n == 0 {
                        "n"
                    } else if self.k == 0 {
                        "k"
                    } else if self.b != 1.0 {
                        "b"
                    } else if self.n < 30 {
                        "n"
                    } else {
                        "theta_alt_grid"
                    };
                    return fail(key, bare(e));
                }
            }
        }
        if let Err(e) = self.procedure_config(self.procedures[0], self.epsilon_grid[0], self.s_grid[0]) {
            return fail("k", bare(e));
        }
        Ok(())
    }

    /// Renders every field explicitly; `parse_spec` recovers an equal spec.
    pub fn to_spec_text(&self) -> String {
        let list = |xs: &[f64]| format!("[{}]", xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
        let procs: Vec<_> = self.procedures.iter().map(|p| p.as_str()).collect();
        let mut out = String::new();
        let _ = writeln!(out, "[experiment]");
        let _ = writeln!(out, "trials = {}", self.trials);
        let _ = writeln!(out, "seed = {}", self.master_seed);
        let _ = writeln!(out, "procedures = [{}]", procs.join(", "));
        let _ = writeln!(out, "paired = {}", self.paired);
        let _ = writeln!(out, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(out, "\n[model]");
        let _ = writeln!(out, "kind = {}", self.model.as_str());
        let _ = writeln!(out, "n = {}", self.n);
        let _ = writeln!(out, "k = {}", self.k);
        let _ = writeln!(out, "b = {}", self.b);
        let _ = writeln!(out, "pi1_grid = {}", list(&self.pi1_grid));
        let _ = writeln!(out, "theta_alt_grid = {}", list(&self.theta_alt_grid));
        let _ = writeln!(out, "\n[procedure]");
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "w0 = {}", self.w0);
        let _ = writeln!(out, "c = {}", self.c);
        let _ = writeln!(out, "lambda = {}", self.lambda);
        let _ = writeln!(out, "saffron_lambda = {}", self.saffron_lambda);
        match self.gamma {
            GammaKind::Constant => {
                let _ = writeln!(out, "gamma = constant");
            }
            GammaKind::Power { exponent } => {
                let _ = writeln!(out, "gamma = power");
                let _ = writeln!(out, "gamma_exponent = {exponent}");
            }
        }
        let _ = writeln!(out, "\n[privacy]");
        let _ = writeln!(out, "epsilon_grid = {}", list(&self.epsilon_grid));
        let _ = writeln!(out, "delta = {}", self.delta);
        let _ = writeln!(out, "s_grid = {}", list(&self.s_grid));
        out
    }
}

fn bare(e: Error) -> String {
    match e {
        Error::InvalidParameter(m) | Error::Invalid(m) => m,
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
    Range { start: f64, end: f64, step: f64 },
}

struct Entry {
    line: usize,
    value: Value,
}

const KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["trials", "seed", "procedures", "paired", "output_dir"]),
    ("model", &["kind", "n", "k", "b", "pi1_grid", "theta_alt_grid"]),
    ("procedure", &["alpha", "w0", "c", "lambda", "saffron_lambda", "gamma", "gamma_exponent"]),
    ("privacy", &["epsilon_grid", "delta", "s_grid"]),
];

/// Parses and validates a spec document. `origin` names the source in
/// error messages.
pub fn parse_spec(text: &str, origin: &str) -> Result<ExperimentSpec> {
    let err = |line: usize, message: String| Error::Config { path: origin.to_string(), line, message };
    let mut entries: HashMap<String, Entry> = HashMap::new();
    let mut section: Option<&str> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            match KEYS.iter().find(|(s, _)| *s == name) {
                Some((s, _)) => section = Some(s),
                None => return Err(err(line_no, format!("unknown section [{name}]"))),
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(line_no, format!("expected `key = value`, got `{line}`")));
        };
        let key = key.trim();
        let Some(sec) = section else {
            return Err(err(line_no, format!("key `{key}` appears before any [section]")));
        };
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(err(line_no, format!("unknown key `{key}` in [{sec}] (known: {})", allowed.join(", "))));
        }
        let value = parse_value(value.trim()).map_err(|m| err(line_no, m))?;
        if let Some(prev) = entries.insert(key.to_string(), Entry { line: line_no, value }) {
            return Err(err(line_no, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
    }

    let model = match entries.get("kind") {
        None => return Err(err(0, "missing required key `kind` in [model]".into())),
        Some(e) => match scalar(e).map_err(|m| err(e.line, m))? {
            "bernoulli" => ModelKind::Bernoulli,
            "trunc_exp" => ModelKind::TruncExp,
            other => return Err(err(e.line, format!("unknown model kind `{other}` (bernoulli | trunc_exp)"))),
        },
    };
    let mut spec = ExperimentSpec::defaults(model);
    let get = |key: &str| entries.get(key);
    macro_rules! set {
        ($key:literal, $field:expr, $conv:expr) => {
            if let Some(e) = get($key) {
                $field = $conv(e).map_err(|m: String| err(e.line, format!("`{}`: {}", $key, m)))?;
            }
        };
    }
    set!("trials", spec.trials, num::<usize>);
    set!("seed", spec.master_seed, num::<u64>);
    set!("procedures", spec.procedures, |e: &Entry| {
        items(e)?
            .iter()
            .map(|s| s.parse::<ProcedureId>().map_err(|x| x.to_string()))
            .collect::<std::result::Result<Vec<_>, _>>()
    });
    set!("paired", spec.paired, num::<bool>);
    set!("output_dir", spec.output_dir, |e: &Entry| scalar(e).map(PathBuf::from));
    set!("n", spec.n, num::<u32>);
    set!("k", spec.k, num::<usize>);
    set!("b", spec.b, num::<f64>);
    set!("pi1_grid", spec.pi1_grid, reals);
    set!("theta_alt_grid", spec.theta_alt_grid, reals);
    set!("alpha", spec.alpha, num::<f64>);
    spec.w0 = spec.alpha / 2.0;
    set!("w0", spec.w0, num::<f64>);
    set!("c", spec.c, num::<u32>);
    set!("lambda", spec.lambda, num::<f64>);
    set!("saffron_lambda", spec.saffron_lambda, num::<f64>);
    set!("gamma", spec.gamma, |e: &Entry| match scalar(e)? {
        "constant" => Ok(GammaKind::Constant),
        "power" => Ok(GammaKind::Power { exponent: 1.6 }),
        other => Err(format!("unknown gamma `{other}` (constant | power)")),
    });
    if let Some(e) = get("gamma_exponent") {
        let exponent = num::<f64>(e).map_err(|m| err(e.line, m))?;
        match spec.gamma {
            GammaKind::Power { .. } => spec.gamma = GammaKind::Power { exponent },
            GammaKind::Constant => return Err(err(e.line, "`gamma_exponent` needs `gamma = power`".into())),
        }
    }
    set!("epsilon_grid", spec.epsilon_grid, reals);
    set!("delta", spec.delta, num::<f64>);
    set!("s_grid", spec.s_grid, reals);

    spec.check().map_err(|(key, message)| err(get(key).map_or(0, |e| e.line), message))?;
    Ok(spec)
}

fn parse_value(text: &str) -> std::result::Result<Value, String> {
    if text.is_empty() {
        return Err("missing value".into());
    }
    let Some(inner) = text.strip_prefix('[') else {
        if text.contains(']') || text.contains(',') {
            return Err(format!("malformed value `{text}`"));
        }
        return Ok(Value::Scalar(text.to_string()));
    };
    let inner = inner.strip_suffix(']').ok_or_else(|| format!("unterminated list `{text}`"))?.trim();
    if let Some((start, rest)) = inner.split_once("..") {
        let (end, step) = rest.split_once("step").ok_or_else(|| format!("range needs `step`: `{text}`"))?;
        let f = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("bad number `{}` in range", s.trim()));
        let (start, end, step) = (f(start)?, f(end)?, f(step)?);
        if !(step > 0.0 && step.is_finite() && start.is_finite() && end.is_finite()) || end < start {
            return Err(format!("range needs start <= end and a positive step: `{text}`"));
        }
        if (end - start) / step > 1e6 {
            return Err(format!("range has too many points: `{text}`"));
        }
        return Ok(Value::Range { start, end, step });
    }
    if inner.is_empty() {
        return Ok(Value::List(Vec::new()));
    }
    let items: Vec<String> = inner.split(',').map(|s| s.trim().to_string()).collect();
    if items.iter().any(|s| s.is_empty()) {
        return Err(format!("empty list item in `{text}`"));
    }
    Ok(Value::List(items))
}

fn scalar(e: &Entry) -> std::result::Result<&str, String> {
    match &e.value {
        Value::Scalar(s) => Ok(s),
        _ => Err("expected a single value, not a list".into()),
    }
}

fn num<T: std::str::FromStr>(e: &Entry) -> std::result::Result<T, String> {
    let s = scalar(e)?;
    s.parse::<T>().map_err(|_| format!("cannot parse `{s}`"))
}

fn items(e: &Entry) -> std::result::Result<Vec<String>, String> {
    match &e.value {
        Value::Scalar(s) => Ok(vec![s.clone()]),
        Value::List(v) => Ok(v.clone()),
        Value::Range { .. } => Err("expected names, not a numeric range".into()),
    }
}

fn reals(e: &Entry) -> std::result::Result<Vec<f64>, String> {
    match &e.value {
        Value::Range { start, end, step } => Ok(expand_range(*start, *end, *step)),
        _ => items(e)?
            .iter()
            .map(|s| match s.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("`{s}` is not a finite number")),
            })
            .collect(),
    }
}

/// `start, start + step, ...` up to `end` inclusive, each point rounded to
/// 12 significant digits so `0.01 + 2 * 0.01` reads back as `0.03`.
fn expand_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count)
        .map(|i| {
            let x = start + i as f64 * step;
            format!("{x:.11e}").parse().expect("formatted float parses")
        })
        .collect()
}
