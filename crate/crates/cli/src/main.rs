use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ir2_core::algorithms::{run_with, Algorithm, RunConfig};
use ir2_core::harness::{
    aggregate_and_report, load_traces, run_experiment, run_to_trace, ExperimentConfig, Observation, ResultTable,
};
use ir2_core::metrics::{gd_igd, hv_reference, DistanceMode, HvProtocol};
use ir2_core::problems::{make_problem, pareto_front_sample, registry};
use ir2_core::refassoc::{das_dennis, default_shrink, layered_points, LayerFill};
use ir2_core::{Error, Result};

/// `println!` that exits quietly when stdout is closed early.
macro_rules! out {
    ($($arg:tt)*) => {
        if let Err(e) = writeln!(std::io::stdout().lock(), $($arg)*) {
            if e.kind() == std::io::ErrorKind::BrokenPipe {
                std::process::exit(0);
            }
            return Err(Error::Io { path: "<stdout>".into(), source: e });
        }
    };
}

#[derive(Parser)]
#[command(name = "ir2", version, about = "Innovized repair experiments for NSGA-II, NSGA-III and MOEA/D")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single run; prints one CSV line per generation or writes a trace.
    Run(RunArgs),
    /// Seed sweep over the templates of a TOML config or a preset.
    Experiment(ExperimentArgs),
    /// Result table from a directory of traces.
    Report(ReportArgs),
    /// Standalone indicators on a point file.
    Metrics {
        #[command(subcommand)]
        which: MetricCommand,
    },
    /// Reference directions.
    Refpoints {
        #[command(subcommand)]
        which: RefCommand,
    },
    /// Benchmark problems.
    Problems {
        #[command(subcommand)]
        which: ProblemCommand,
    },
}

/// Flags that override any config value.
#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    pop_size: Option<usize>,
    /// Enhancement factor.
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    tpast: Option<usize>,
    #[arg(long)]
    tfreq: Option<usize>,
    /// Learning-gate threshold in percent.
    #[arg(long)]
    gth: Option<f64>,
    /// Mutation probability per variable.
    #[arg(long)]
    p_m: Option<f64>,
    /// Mutation distribution index (default 1/n_var).
    #[arg(long)]
    eta_m: Option<f64>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        if let Some(g) = self.generations {
            c.generations = g;
        }
        if self.pop_size.is_some() {
            c.pop_size = self.pop_size;
        }
        if let Some(v) = self.eta {
            c.ir2_params.eta = v;
        }
        if let Some(v) = self.tpast {
            c.ir2_params.t_past = v;
        }
        if let Some(v) = self.tfreq {
            c.ir2_params.t_freq = v;
        }
        if let Some(v) = self.gth {
            c.ir2_params.g_th = v;
        }
        if let Some(v) = self.p_m {
            c.genetic.p_m = v;
        }
        if self.eta_m.is_some() {
            c.genetic.eta_m = self.eta_m;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// TOML file holding one run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long, short = 'm')]
    objectives: Option<usize>,
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// Enable the repair operator.
    #[arg(long)]
    ir2: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    overrides: Overrides,
    /// Write a JSON-lines trace here instead of printing CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    snapshot_every: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Zdt,
    Wfg,
}

#[derive(Args)]
struct ExperimentArgs {
    /// TOML experiment file.
    config: Option<PathBuf>,
    #[arg(long, conflicts_with = "config")]
    preset: Option<Preset>,
    /// Output directory (required with --preset).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated seed list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory of traces.
    dir: PathBuf,
    /// Observation generation.
    #[arg(long, conflicts_with = "after_nonzero")]
    at: Option<usize>,
    /// Observe this many generations after the base median HV leaves zero.
    #[arg(long)]
    after_nonzero: Option<usize>,
    /// Base variant id; every algorithm is reported when omitted.
    #[arg(long, requires = "ir2")]
    base: Option<String>,
    #[arg(long)]
    ir2: Option<String>,
    /// Also write <stem>.csv and <stem>.json into the trace directory.
    #[arg(long)]
    write: Option<String>,
}

#[derive(Subcommand)]
enum MetricCommand {
    /// Hypervolume of the points in a file.
    Hv {
        input: PathBuf,
        /// `auto` for [N/(N-1)]^M, or comma-separated coordinates.
        #[arg(long = "ref", default_value = "auto")]
        reference: String,
        /// N used by `--ref auto` (default: number of points).
        #[arg(long)]
        pop_size: Option<usize>,
        /// `wfg` divides objective i by 2i first.
        #[arg(long)]
        suite: Option<String>,
    },
    /// Generational distance to a reference front.
    Gd(FrontArgs),
    /// Inverted generational distance.
    Igd(FrontArgs),
}

#[derive(Args)]
struct FrontArgs {
    input: PathBuf,
    /// Reference front file.
    #[arg(long, conflicts_with = "problem")]
    front: Option<PathBuf>,
    /// Sample the analytic front of this problem instead.
    #[arg(long, requires = "objectives")]
    problem: Option<String>,
    #[arg(long, short = 'm')]
    objectives: Option<usize>,
    #[arg(long, default_value_t = 500)]
    points: usize,
}

#[derive(Subcommand)]
enum RefCommand {
    /// Das-Dennis lattice, or layered directions with --layers.
    Gen {
        #[arg(long, short = 'm')]
        objectives: usize,
        #[arg(long, required_unless_present = "layers")]
        gaps: Option<usize>,
        /// Comma-separated gaps per layer, outermost first.
        #[arg(long, value_delimiter = ',')]
        layers: Option<Vec<usize>>,
        /// Comma-separated shrink factor per layer.
        #[arg(long, value_delimiter = ',', requires = "layers")]
        shrink: Option<Vec<f64>>,
        /// Print count and boundary fraction instead of the points.
        #[arg(long)]
        stats: bool,
    },
}

#[derive(Subcommand)]
enum ProblemCommand {
    List,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Experiment(a) => cmd_experiment(a),
        Command::Report(a) => cmd_report(a),
        Command::Metrics { which } => cmd_metrics(which),
        Command::Refpoints { which } => cmd_refpoints(which),
        Command::Problems {
            which: ProblemCommand::List,
        } => {
            out!("name,objectives,n_var");
            for p in registry() {
                let m: Vec<String> = p.objectives.iter().map(usize::to_string).collect();
                out!("{},{},{}", p.name, m.join("|"), p.n_var);
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn cmd_run(a: RunArgs) -> Result<ExitCode> {
    let mut c = match &a.config {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| Error::Parse(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(p) = a.problem {
        c.problem = p;
    }
    if let Some(m) = a.objectives {
        c.n_obj = m;
    }
    if let Some(alg) = a.algorithm {
        c.algorithm = alg;
    }
    c.ir2 |= a.ir2;
    if let Some(s) = a.seed {
        c.seed = s;
    }
    a.overrides.apply(&mut c);
    if let Some(out) = a.out {
        let evals = run_to_trace(&c, &out, a.snapshot_every)?;
        eprintln!("{} evaluations, trace written to {}", evals, out.display());
        return Ok(ExitCode::SUCCESS);
    }
    out!("generation,evaluations,hv,gd,igd,learning");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    run_with(&c, |r, _| {
        out!(
            "{},{},{},{},{},{}",
            r.generation,
            r.evaluations,
            opt(r.hv),
            opt(r.gd),
            opt(r.igd),
            r.learning
        );
        Ok(())
    })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_experiment(a: ExperimentArgs) -> Result<ExitCode> {
    let mut cfg = match (&a.config, a.preset) {
        (Some(p), _) => ExperimentConfig::load(p)?,
        (None, Some(preset)) => {
            let out = a.out.clone().ok_or_else(|| Error::Config("--preset needs --out".into()))?;
            match preset {
                Preset::Zdt => ExperimentConfig::zdt_preset(out),
                Preset::Wfg => ExperimentConfig::wfg_preset(out),
            }
        }
        (None, None) => return Err(Error::Config("give a config file or --preset".into())),
    };
    if let Some(out) = a.out {
        cfg.output_dir = out;
    }
    if let Some(s) = a.seeds {
        cfg.seeds = s;
    }
    if let Some(w) = a.workers {
        cfg.workers = w;
    }
    cfg.templates.iter_mut().for_each(|t| a.overrides.apply(t));
    let summary = run_experiment(&cfg)?;
    eprintln!(
        "{} completed, {} skipped, {} failed, {} evaluations",
        summary.completed.len(),
        summary.skipped.len(),
        summary.failed.len(),
        summary.evaluations
    );
    for (path, e) in &summary.failed {
        eprintln!("failed: {}: {e}", path.display());
    }
    Ok(if summary.failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_report(a: ReportArgs) -> Result<ExitCode> {
    let traces = load_traces(&a.dir)?;
    let observe = match (a.at, a.after_nonzero) {
        (Some(t), _) => Observation::At(t),
        (None, Some(k)) => Observation::AfterNonzero(k),
        (None, None) => {
            let t = traces.iter().map(|t| t.config.generations).min().unwrap_or(0);
            Observation::At(t)
        }
    };
    let pairs: Vec<(String, String)> = match (a.base, a.ir2) {
        (Some(b), Some(i)) => vec![(b, i)],
        _ => [Algorithm::Nsga2, Algorithm::Nsga3, Algorithm::Moead]
            .iter()
            .map(|alg| (alg.name().to_string(), format!("{}-ir2", alg.name())))
            .collect(),
    };
    let mut table = ResultTable { rows: Vec::new() };
    for (b, i) in pairs {
        table.rows.extend(aggregate_and_report(&traces, observe, &b, &i)?.rows);
    }
    out!("{}", table.to_csv().trim_end());
    if let Some(stem) = a.write {
        let (csv, json) = table.write(&a.dir, &stem)?;
        eprintln!("wrote {} and {}", csv.display(), json.display());
    }
    Ok(ExitCode::SUCCESS)
}

/// Rows of numbers separated by commas or whitespace; `#` starts a comment.
fn read_points(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut pts = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect();
        let row = row.map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), no + 1)))?;
        if pts.first().is_some_and(|p: &Vec<f64>| p.len() != row.len()) {
            return Err(Error::Parse(format!("{}:{}: inconsistent dimension", path.display(), no + 1)));
        }
        pts.push(row);
    }
    if pts.is_empty() {
        return Err(Error::Parse(format!("{}: no points", path.display())));
    }
    Ok(pts)
}

fn cmd_metrics(which: MetricCommand) -> Result<ExitCode> {
    match which {
        MetricCommand::Hv {
            input,
            reference,
            pop_size,
            suite,
        } => {
            let pts = read_points(&input)?;
            let m = pts[0].len();
            let wfg = match suite.as_deref().map(str::to_ascii_lowercase).as_deref() {
                None | Some("zdt") | Some("dtlz") => false,
                Some("wfg") => true,
                Some(s) => return Err(Error::Config(format!("unknown suite '{s}'"))),
            };
            let r = if reference == "auto" {
                hv_reference(pop_size.unwrap_or(pts.len()), m)?
            } else {
                let r: std::result::Result<Vec<f64>, _> = reference.split(',').map(|s| s.trim().parse()).collect();
                r.map_err(|e| Error::Parse(format!("--ref: {e}")))?
            };
            let protocol = HvProtocol {
                reference: r,
                wfg_normalize: wfg,
            };
            out!("{}", protocol.measure(&pts)?);
        }
        MetricCommand::Gd(f) => out!("{}", distance(f, DistanceMode::Gd)?),
        MetricCommand::Igd(f) => out!("{}", distance(f, DistanceMode::Igd)?),
    }
    Ok(ExitCode::SUCCESS)
}

fn distance(a: FrontArgs, mode: DistanceMode) -> Result<f64> {
    let pts = read_points(&a.input)?;
    let front = match (a.front, a.problem) {
        (Some(f), _) => read_points(&f)?,
        (None, Some(p)) => {
            let problem = make_problem(&p, a.objectives.unwrap_or(pts[0].len()), None)?;
            pareto_front_sample(&problem, a.points)?.points
        }
        (None, None) => return Err(Error::Config("give --front or --problem".into())),
    };
    gd_igd(&pts, &front, mode)
}

fn cmd_refpoints(which: RefCommand) -> Result<ExitCode> {
    let RefCommand::Gen {
        objectives,
        gaps,
        layers,
        shrink,
        stats,
    } = which;
    let z = match layers {
        Some(l) => {
            let s = shrink.unwrap_or_else(|| default_shrink(l.len()));
            layered_points(objectives, &l, &s, LayerFill::Skeleton)?
        }
        None => das_dennis(objectives, gaps.expect("clap enforces --gaps"))?,
    };
    if stats {
        out!("points,boundary_fraction");
        out!("{},{}", z.len(), z.boundary_fraction());
    } else {
        for p in &z.points {
            let row: Vec<String> = p.iter().map(f64::to_string).collect();
            out!("{}", row.join(","));
        }
    }
    Ok(ExitCode::SUCCESS)
}
