//! Command-line front end.
//!
//! Every command writes its output through a temporary file in the target
//! directory and renames it into place, so a failed command leaves no
//! partial output behind.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::offload::{run_simulation, sweep, write_decisions, write_results, RunRecord, SimConfig, SweepParam};
use crate::rng::{stream, Stream};
use crate::social::{build_closeness_graph, build_offsn, ClosenessGraph};
use crate::tail::build_table;
use crate::trace::{aggregate_contacts, parse_trace};

#[derive(Debug, Parser)]
#[command(name = "d2dsim", version, about = "Social-aware D2D offloading simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the closeness graph of an encounter trace.
    Fit(FitArgs),
    /// Cluster a closeness graph into OffSNs and white-area UEs.
    Cluster(ClusterArgs),
    /// Run the offloading simulation, optionally as a parameter sweep.
    Simulate(SimulateArgs),
    /// Tabulate the old-content count distribution and its bounds.
    Tail(TailArgs),
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Minimum contact duration for one content transfer, seconds.
    #[arg(long, default_value_t = 60.0)]
    pub x_min: f64,
    #[arg(long, default_value_t = 2)]
    pub n_min: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long = "w-t", default_value_t = 0.5)]
    pub w_t: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML or JSON (by extension) configuration file.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter to sweep: d_max or c_c.
    #[arg(long, requires = "values")]
    pub sweep: Option<SweepParam>,
    #[arg(long, value_delimiter = ',', requires = "sweep")]
    pub values: Option<Vec<f64>>,
    #[arg(long)]
    pub reps: Option<usize>,
    /// Also write the per-request audit log (single runs only).
    #[arg(long)]
    pub emit_decisions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TailArgs {
    #[arg(long, default_value_t = 20.0)]
    pub alpha: f64,
    /// Index of the user whose old-content count is tabulated.
    #[arg(long, default_value_t = 4)]
    pub n: u64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => cmd_fit(&a.trace, a.x_min, a.n_min, &a.out),
        Command::Cluster(a) => cmd_cluster(&a.graph, a.w_t, &a.out),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Tail(a) => cmd_tail(a.alpha, a.n, a.samples, a.seed, &a.out),
    }
}

/// Writes `out` atomically: the closure fills a temp file that replaces
/// `out` only on success.
fn write_atomic(out: &Path, fill: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(out).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub fn cmd_fit(trace: &Path, x_min: f64, n_min: u64, out: &Path) -> Result<()> {
    let records = parse_trace(open(trace)?)?;
    let graph = build_closeness_graph(&aggregate_contacts(&records), x_min, n_min)?;
    log::info!("{} records, {} nodes, {} edges", records.len(), graph.nodes().len(), graph.edges().len());
    write_atomic(out, |w| graph.write_csv(w))
}

pub fn cmd_cluster(graph: &Path, w_t: f64, out: &Path) -> Result<()> {
    let graph = ClosenessGraph::read_csv(open(graph)?)?;
    let partition = build_offsn(&graph, w_t)?;
    log::info!("{} OffSNs, {} white UEs", partition.clusters.len(), partition.white.len());
    write_atomic(out, |w| {
        writeln!(w, "{}", partition.to_json()?)?;
        Ok(())
    })
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut config = SimConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let mut sweep_spec = config.sweep.clone();
    if let (Some(parameter), Some(values)) = (args.sweep, &args.values) {
        let repetitions = sweep_spec.as_ref().map_or(20, |s| s.repetitions);
        sweep_spec = Some(crate::offload::SweepSpec { parameter, values: values.clone(), repetitions });
    }
    if let (Some(spec), Some(reps)) = (&mut sweep_spec, args.reps) {
        spec.repetitions = reps;
    }
    config.sweep = sweep_spec.clone();
    config.validate()?;

    match sweep_spec {
        Some(spec) => {
            if args.emit_decisions.is_some() {
                return Err(Error::config("--emit-decisions is only available for single runs"));
            }
            let table = sweep(&config, spec.parameter, &spec.values, spec.repetitions)?;
            for p in &table.points {
                log::info!(
                    "value={} enb_sum_rate={:.3} offloaded={:.3} utility={:.3}",
                    p.param_value,
                    p.enb_sum_rate,
                    p.offloaded_fraction,
                    p.mean_utility
                );
            }
            write_atomic(&args.out, |w| write_results(w, &table.runs))
        }
        None => {
            let output = run_simulation(&config)?;
            let record = RunRecord { param_value: None, seed: config.seed, metrics: output.metrics };
            if let Some(path) = &args.emit_decisions {
                write_atomic(path, |w| write_decisions(w, &output.decisions))?;
            }
            write_atomic(&args.out, |w| write_results(w, std::slice::from_ref(&record)))
        }
    }
}

pub fn cmd_tail(alpha: f64, n: u64, n_samples: usize, seed: u64, out: &Path) -> Result<()> {
    if !(alpha > 0.0) || n < 2 || n_samples == 0 {
        return Err(Error::config(format!("need alpha > 0, n >= 2, samples >= 1 (got {alpha}, {n}, {n_samples})")));
    }
    let table = build_table(alpha, n, n_samples, &mut stream(seed, Stream::Tail))?;
    write_atomic(out, |w| table.write_csv(w))
}
