//! Command-line front end. Exit status 0 on success, 1 for configuration
//! and usage errors, 2 for runtime failures.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use super::output::{read_summary_csv, read_transcript_csv, write_summary_csv, SummaryRecord};
use super::plot::{plot_summary, plot_traces, PlotKind, Series};
use super::run::{run_experiment, ResultRow, StreamCell, Variant};
use super::spec::{parse_spec, ExperimentSpec, GRAMMAR};
use crate::error::{Error, Result};
use crate::metrics::wealth_trace;
use crate::procedures::{write_transcript_csv, ProcedureConfig, ProcedureId, StepRecord};

pub const TABLE1_SPEC: &str = include_str!("../../specs/table1.spec");
pub const TABLE2_SPEC: &str = include_str!("../../specs/table2.spec");

#[derive(Debug, Parser)]
#[command(name = "paprika", version, about = "Private online FDR control experiments", after_help = GRAMMAR)]
struct Cli {
    /// Override the master seed of the spec
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of worker threads
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run an experiment grid; writes summary.csv and FDR/power plots
    Run { spec: PathBuf },
    /// Plot a summary CSV (fdr_vs_pi1, power_vs_pi1) or a transcript CSV
    /// (wealth_trace, alpha_trace)
    Plot {
        csv: PathBuf,
        #[arg(long)]
        kind: String,
        /// Wealth bookkeeping rule for wealth_trace
        #[arg(long, default_value = "paprika")]
        procedure: String,
        /// Target level used to rebuild wealth
        #[arg(long, default_value_t = 0.2)]
        alpha: f64,
        /// Initial wealth used to rebuild wealth (default alpha / 2)
        #[arg(long)]
        w0: Option<f64>,
    },
    /// Run procedures on one stream; writes the stream, transcripts and
    /// wealth/threshold plots
    Trace {
        spec: PathBuf,
        /// Comma-separated procedure names
        #[arg(long, value_delimiter = ',', required = true)]
        procedure: Vec<String>,
        /// Trial index whose stream and noise seeds are used
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Reproduce the Bernoulli and truncated-exponential tables with defaults
    Tables,
}

/// Parses `args` (including the program name), runs the command and
/// returns the exit status.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            if code != 0 {
                eprintln!("\n{GRAMMAR}");
            }
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                1
            } else {
                2
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { spec } => {
            let mut spec = load_spec(&spec)?;
            if let Some(seed) = cli.seed {
                spec.master_seed = seed;
            }
            let out = cli.out.unwrap_or_else(|| spec.output_dir.clone());
            run_and_write(&spec, cli.jobs, &out, "summary")?;
        }
        Command::Tables => {
            let out = cli.out.unwrap_or_else(|| PathBuf::from("tables"));
            run_tables(&out, cli.seed, cli.jobs)?;
        }
        Command::Plot { csv, kind, procedure, alpha, w0 } => {
            let kind: PlotKind = kind.parse()?;
            let dir = match cli.out {
                Some(d) => d,
                None => csv.parent().map(Path::to_path_buf).unwrap_or_default(),
            };
            create_dir(&dir)?;
            let stem = csv.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "plot".into());
            let target = dir.join(format!("{stem}_{kind}.svg"));
            if kind.is_summary() {
                plot_summary(&read_summary_csv(&csv)?, kind, &target)?;
            } else {
                let id: ProcedureId = procedure.parse()?;
                let mut config = ProcedureConfig::experiment_defaults();
                config.alpha = alpha;
                config.w0 = w0.unwrap_or(alpha / 2.0);
                config.validate()?;
                let records = read_transcript_csv(&csv)?;
                let series = trace_series(&[(id.as_str().to_string(), records, config, id)], kind);
                plot_traces(&series, kind, &target)?;
            }
            eprintln!("wrote {}", target.display());
        }
        Command::Trace { spec, procedure, trial } => {
            let mut spec = load_spec(&spec)?;
            if let Some(seed) = cli.seed {
                spec.master_seed = seed;
            }
            let ids = procedure.iter().map(|p| p.parse()).collect::<Result<Vec<ProcedureId>>>()?;
            let out = cli.out.unwrap_or_else(|| spec.output_dir.clone());
            run_trace(&spec, &ids, trial, &out)?;
        }
    }
    Ok(())
}

fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read spec file {}: {e}", path.display())))?;
    parse_spec(&text, &path.display().to_string())
}

fn create_dir(dir: &Path) -> Result<()> {
    if dir.as_os_str().is_empty() {
        return Ok(());
    }
    fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })
}

/// Runs `spec` and writes `<name>.csv`, `<name>_fdr_vs_pi1.svg` and
/// `<name>_power_vs_pi1.svg` into `out`.
pub fn run_and_write(spec: &ExperimentSpec, jobs: Option<usize>, out: &Path, name: &str) -> Result<Vec<ResultRow>> {
    let rows = run_experiment(spec, jobs)?;
    create_dir(out)?;
    let csv = out.join(format!("{name}.csv"));
    write_summary_csv(&rows, &csv)?;
    eprintln!("wrote {}", csv.display());
    let records: Vec<SummaryRecord> = rows.iter().map(SummaryRecord::from).collect();
    for kind in [PlotKind::FdrVsPi1, PlotKind::PowerVsPi1] {
        let path = out.join(format!("{name}_{kind}.svg"));
        match plot_summary(&records, kind, &path) {
            Ok(()) => eprintln!("wrote {}", path.display()),
            // e.g. power on an all-null grid
            Err(Error::EmptySeries(m)) => eprintln!("skipped {}: {m}", path.display()),
            Err(e) => return Err(e),
        }
    }
    Ok(rows)
}

/// Both tables with their shipped specs; `seed` overrides the master seed.
pub fn run_tables(out: &Path, seed: Option<u64>, jobs: Option<usize>) -> Result<(Vec<ResultRow>, Vec<ResultRow>)> {
    let mut specs = [parse_spec(TABLE1_SPEC, "table1.spec")?, parse_spec(TABLE2_SPEC, "table2.spec")?];
    if let Some(seed) = seed {
        for s in &mut specs {
            s.master_seed = seed;
        }
    }
    let [t1, t2] = specs;
    let r1 = run_and_write(&t1, jobs, out, "table1")?;
    let r2 = run_and_write(&t2, jobs, out, "table2")?;
    Ok((r1, r2))
}

fn trace_series(runs: &[(String, Vec<StepRecord>, ProcedureConfig, ProcedureId)], kind: PlotKind) -> Vec<Series> {
    runs.iter()
        .map(|(label, records, config, id)| {
            let ys = match kind {
                PlotKind::WealthTrace => wealth_trace(records, config, id.wealth_rule()),
                _ => records.iter().map(|r| r.alpha_t).collect(),
            };
            Series {
                label: label.clone(),
                points: records.iter().zip(ys).map(|(r, y)| (r.t as f64, y)).collect(),
                markers: records.iter().enumerate().filter(|(_, r)| r.rejected).map(|(i, _)| i).collect(),
            }
        })
        .collect()
}

/// One stream from the first grid cell, every requested procedure on it.
pub fn run_trace(spec: &ExperimentSpec, ids: &[ProcedureId], trial: usize, out: &Path) -> Result<()> {
    let cell = StreamCell { pi1: spec.pi1_grid[0], theta_alt: spec.theta_alt_grid[0] };
    let eps = spec.epsilon_grid[0];
    let s = spec.s_grid[0];
    create_dir(out)?;
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| Error::Io { path: path.clone(), source }
    };

    let mut runs = Vec::new();
    let mut shared_written = false;
    for &id in ids {
        let variant =
            Variant { procedure: id, epsilon: id.is_private().then_some(eps), s: id.uses_shift().then_some(s) };
        let stream = spec.generate(&cell, trial, &variant)?;
        if !shared_written || !spec.paired {
            let name = if spec.paired { "stream.csv".to_string() } else { format!("stream_{id}.csv") };
            let path = out.join(name);
            let file = File::create(&path).map_err(io(&path))?;
            stream.write_csv(BufWriter::new(file)).map_err(io(&path))?;
            eprintln!("wrote {}", path.display());
            shared_written = true;
        }
        let records = spec.run_variant(&cell, trial, &variant, &stream)?;
        let path = out.join(format!("transcript_{id}.csv"));
        let file = File::create(&path).map_err(io(&path))?;
        write_transcript_csv(&records, BufWriter::new(file)).map_err(io(&path))?;
        eprintln!("wrote {}", path.display());
        let config = spec.procedure_config(id, eps, s)?;
        runs.push((id.as_str().to_string(), records, config, id));
    }
    for kind in [PlotKind::WealthTrace, PlotKind::AlphaTrace] {
        let path = out.join(format!("{kind}.svg"));
        plot_traces(&trace_series(&runs, kind), kind, &path)?;
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}
