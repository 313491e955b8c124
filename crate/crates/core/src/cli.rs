//! Command-line front end.
//!
//! Every model flag may also come from a `key = value` file given with
//! `--config`; keys are the long flag names without dashes. Flags on the
//! command line win over the file, the file wins over built-in defaults.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::engine::{realize, RunOptions};
use crate::error::{Error, Result};
use crate::harness::{
    parse_grid, run_all, run_paired_experiment, run_replicated, run_replicated_with_preferences,
    run_sweep, Execution, SweepSpec, DEFAULT_GAMMA_STEP, DEFAULT_REPLICATIONS, DEFAULT_SIGMAS,
};
use crate::model::ModelConfig;
use crate::output;
use crate::preferences::{read_preferences_csv, write_preferences_csv};
use crate::topology::TopologySpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "CULTMARKET_OUT";
const DEFAULT_OUT_DIR: &str = "results";
const DEFAULT_K: usize = 4;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "cultmarket", version, about = "Cultural market simulator and experiment harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Replicated runs of one configuration: items.csv, runs.csv, summary.csv.
    Run(RunArgs),
    /// (γ, σ) grid of replicated runs: grid.csv.
    Sweep(SweepArgs),
    /// Runs sharing preferences and graph across several γ: items.csv, summary.csv.
    Paired(PairedArgs),
    /// Writes the social graph of one run as an `i j` edge list.
    ExportGraph(ExportArgs),
    /// Writes the preference matrix of one run as headerless CSV.
    ExportPreferences(ExportArgs),
}

#[derive(Debug, Args, Default)]
struct ModelArgs {
    /// Number of agents N [default: 100]
    #[arg(long)]
    agents: Option<usize>,
    /// Number of items M [default: 100]
    #[arg(long)]
    items: Option<usize>,
    /// Number of steps T [default: 20]
    #[arg(long)]
    steps: Option<usize>,
    /// complete, ring, random or random-directed [default: complete]
    #[arg(long)]
    topology: Option<String>,
    /// Coordination number for ring and random topologies [default: 4]
    #[arg(long)]
    k: Option<usize>,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// key = value file providing defaults for these flags
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HarnessArgs {
    /// Replications R [default: 100]
    #[arg(long)]
    runs: Option<usize>,
    /// Output directory [default: $CULTMARKET_OUT or ./results]
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run replications on one thread
    #[arg(long)]
    sequential: bool,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    harness: HarnessArgs,
    /// Social pressure γ [default: 0]
    #[arg(long)]
    gamma: Option<f64>,
    /// Intra-item liking deviation σ [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Use this headerless CSV preference matrix for every run
    #[arg(long)]
    preferences: Option<PathBuf>,
    /// Also write trajectory.csv (share of every item after every step)
    #[arg(long)]
    trajectory: bool,
    /// Also write consumption.csv (every consumed agent/item pair)
    #[arg(long)]
    consumption: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    harness: HarnessArgs,
    /// γ values: start:stop:step or comma list [default: 0:1:0.05]
    #[arg(long)]
    gamma: Option<String>,
    /// σ values: start:stop:step or comma list [default: 0.25,0.5,1,2,4]
    #[arg(long)]
    sigma: Option<String>,
}

#[derive(Debug, Args)]
struct PairedArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    harness: HarnessArgs,
    /// Comma-separated γ values sharing preferences [default: 0,0.3,0.7]
    #[arg(long)]
    gammas: Option<String>,
    /// Intra-item liking deviation σ [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Intra-item liking deviation σ [default: 1]
    #[arg(long)]
    sigma: Option<f64>,
    /// Replication whose graph or matrix is exported
    #[arg(long, default_value_t = 0)]
    run_index: u64,
    /// Output file [default: <out dir>/edges.txt or preferences.csv]
    #[arg(long)]
    out: Option<PathBuf>,
}

const FILE_KEYS: [&str; 13] = [
    "agents", "items", "steps", "topology", "k", "seed", "runs", "out", "gamma", "sigma", "gammas",
    "preferences", "sequential",
];

/// Values read from a `--config` file.
#[derive(Debug, Default)]
struct FileConfig {
    path: PathBuf,
    values: BTreeMap<String, (usize, String)>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: 0,
            msg: format!("cannot read config file: {e}"),
        })?;
        let mut values = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_owned(),
                line: idx + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got {line:?}")))?;
            let key = key.trim().trim_start_matches("--").to_owned();
            if !FILE_KEYS.contains(&key.as_str()) {
                return Err(parse_err(format!("unknown key {key:?}")));
            }
            values.insert(key, (idx + 1, value.trim().to_owned()));
        }
        Ok(FileConfig {
            path: path.to_owned(),
            values,
        })
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|_| Error::Parse {
                path: self.path.clone(),
                line: *line,
                msg: format!("invalid value {raw:?} for {key}"),
            }),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(_, v)| v.as_str())
    }
}

fn pick<T: std::str::FromStr>(flag: Option<T>, file: &FileConfig, key: &str, default: T) -> Result<T> {
    match flag {
        Some(v) => Ok(v),
        None => Ok(file.get(key)?.unwrap_or(default)),
    }
}

fn base_config(args: &ModelArgs, file: &FileConfig) -> Result<ModelConfig> {
    let defaults = ModelConfig::default();
    let topology_name = match &args.topology {
        Some(t) => t.clone(),
        None => file.raw("topology").unwrap_or("complete").to_owned(),
    };
    let k = pick(args.k, file, "k", DEFAULT_K)?;
    Ok(ModelConfig {
        n_agents: pick(args.agents, file, "agents", defaults.n_agents)?,
        n_items: pick(args.items, file, "items", defaults.n_items)?,
        horizon: pick(args.steps, file, "steps", defaults.horizon)?,
        topology: TopologySpec::from_parts(&topology_name, k)?,
        master_seed: pick(args.seed, file, "seed", defaults.master_seed)?,
        ..defaults
    })
}

struct Harness {
    runs: usize,
    out: PathBuf,
    exec: Execution,
}

fn harness(args: &HarnessArgs, file: &FileConfig) -> Result<Harness> {
    let out = match &args.out {
        Some(p) => p.clone(),
        None => match file.raw("out") {
            Some(p) => PathBuf::from(p),
            None => std::env::var_os(OUT_DIR_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
        },
    };
    let sequential = args.sequential || file.get::<bool>("sequential")?.unwrap_or(false);
    Ok(Harness {
        runs: pick(args.runs, file, "runs", DEFAULT_REPLICATIONS)?,
        out,
        exec: if sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    })
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Creates `path`, hands a buffered writer to `f`, and flushes it.
fn write_file(
    path: &Path,
    f: impl FnOnce(&mut BufWriter<File>) -> csv::Result<()>,
) -> Result<PathBuf> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = BufWriter::new(file);
    f(&mut buf).map_err(|e| Error::csv(path, e))?;
    buf.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_owned())
}

fn cmd_run(args: RunArgs) -> Result<Vec<PathBuf>> {
    let file = FileConfig::load(args.model.config.as_deref())?;
    let h = harness(&args.harness, &file)?;
    let mut config = base_config(&args.model, &file)?;
    config.social_pressure = pick(args.gamma, &file, "gamma", 0.0)?;
    config.intra_item_deviation = pick(args.sigma, &file, "sigma", 1.0)?;

    let prefs_path = args
        .preferences
        .clone()
        .or_else(|| file.raw("preferences").map(PathBuf::from));
    let prefs = match &prefs_path {
        Some(path) => {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            let prefs = read_preferences_csv(f)?;
            let explicit_n = args.model.agents.or(file.get("agents")?);
            let explicit_m = args.model.items.or(file.get("items")?);
            if explicit_n.is_some_and(|n| n != prefs.n_agents())
                || explicit_m.is_some_and(|m| m != prefs.n_items())
            {
                return Err(Error::InvalidConfig(format!(
                    "preference matrix is {}x{} but --agents/--items disagree",
                    prefs.n_agents(),
                    prefs.n_items()
                )));
            }
            config.n_agents = prefs.n_agents();
            config.n_items = prefs.n_items();
            Some(prefs)
        }
        None => None,
    };
    config.validate()?;
    let rep = match &prefs {
        Some(p) => run_replicated_with_preferences(&config, p, h.runs, h.exec)?,
        None => run_replicated(&config, h.runs, h.exec)?,
    };

    prepare_dir(&h.out)?;
    let mut written = vec![
        write_file(&h.out.join("items.csv"), |w| output::write_items(&rep, w))?,
        write_file(&h.out.join("runs.csv"), |w| output::write_runs(&rep, w))?,
        write_file(&h.out.join("summary.csv"), |w| output::write_summary([&rep.cell], w))?,
    ];
    if args.trajectory || args.consumption {
        if prefs.is_some() {
            return Err(Error::InvalidConfig(
                "--trajectory/--consumption are not supported with --preferences".into(),
            ));
        }
        let options = RunOptions {
            record_trajectory: args.trajectory,
        };
        let results = run_all(&config, h.runs, options, h.exec)?;
        if args.trajectory {
            written.push(write_file(&h.out.join("trajectory.csv"), |w| {
                output::write_trajectories(&results, w)
            })?);
        }
        if args.consumption {
            written.push(write_file(&h.out.join("consumption.csv"), |w| {
                output::write_consumption(&results, w)
            })?);
        }
    }
    Ok(written)
}

fn cmd_sweep(args: SweepArgs) -> Result<Vec<PathBuf>> {
    let file = FileConfig::load(args.model.config.as_deref())?;
    let h = harness(&args.harness, &file)?;
    let base = base_config(&args.model, &file)?;
    let gamma_text = args
        .gamma
        .clone()
        .or_else(|| file.raw("gamma").map(str::to_owned))
        .unwrap_or_else(|| format!("0:1:{DEFAULT_GAMMA_STEP}"));
    let sigma_values = match args.sigma.clone().or_else(|| file.raw("sigma").map(str::to_owned)) {
        Some(text) => parse_grid(&text)?,
        None => DEFAULT_SIGMAS.to_vec(),
    };
    let spec = SweepSpec {
        gamma_values: parse_grid(&gamma_text)?,
        sigma_values,
        replications: h.runs,
        base_config: base,
    };
    spec.validate()?;
    let grid = run_sweep(&spec, h.exec)?;
    prepare_dir(&h.out)?;
    Ok(vec![write_file(&h.out.join("grid.csv"), |w| {
        output::write_summary(&grid, w)
    })?])
}

fn cmd_paired(args: PairedArgs) -> Result<Vec<PathBuf>> {
    let file = FileConfig::load(args.model.config.as_deref())?;
    let h = harness(&args.harness, &file)?;
    let mut config = base_config(&args.model, &file)?;
    config.intra_item_deviation = pick(args.sigma, &file, "sigma", 1.0)?;
    let gamma_text = args
        .gammas
        .clone()
        .or_else(|| file.raw("gammas").map(str::to_owned))
        .unwrap_or_else(|| "0,0.3,0.7".to_owned());
    let gammas: Vec<f64> = gamma_text
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad gamma {s:?} in {gamma_text:?}")))
        })
        .collect::<Result<_>>()?;
    config.social_pressure = gammas.first().copied().unwrap_or(0.0);
    config.validate()?;
    let table = run_paired_experiment(&config, &gammas, h.runs, h.exec)?;
    prepare_dir(&h.out)?;
    Ok(vec![
        write_file(&h.out.join("items.csv"), |w| {
            output::write_paired_items(&table, &config, w)
        })?,
        write_file(&h.out.join("summary.csv"), |w| {
            output::write_summary(&table.summaries, w)
        })?,
    ])
}

fn export_target(args: &ExportArgs, file: &FileConfig, name: &str) -> Result<PathBuf> {
    if let Some(p) = &args.out {
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            prepare_dir(parent)?;
        }
        return Ok(p.clone());
    }
    let dir = match file.raw("out") {
        Some(p) => PathBuf::from(p),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR)),
    };
    prepare_dir(&dir)?;
    Ok(dir.join(name))
}

fn cmd_export(args: ExportArgs, graph: bool) -> Result<Vec<PathBuf>> {
    let file = FileConfig::load(args.model.config.as_deref())?;
    let mut config = base_config(&args.model, &file)?;
    config.horizon = 0;
    config.intra_item_deviation = pick(args.sigma, &file, "sigma", 1.0)?;
    let (g, prefs) = realize(&config, args.run_index)?;
    if graph {
        let path = export_target(&args, &file, "edges.txt")?;
        let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(f);
        g.write_edge_list(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        Ok(vec![path])
    } else {
        let path = export_target(&args, &file, "preferences.csv")?;
        Ok(vec![write_file(&path, |w| write_preferences_csv(&prefs, w))?])
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code: 0 on success, 2 on a configuration error, 1 otherwise.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Paired(a) => cmd_paired(a),
        Command::ExportGraph(a) => cmd_export(a, true),
        Command::ExportPreferences(a) => cmd_export(a, false),
    };
    match outcome {
        Ok(paths) => {
            for p in paths {
                println!("wrote {}", p.display());
            }
            EXIT_OK
        }
        Err(e) => report(&e),
    }
}

fn report(e: &Error) -> i32 {
    if e.is_config_error() {
        eprintln!("error: configuration: {e}");
        EXIT_CONFIG
    } else {
        match e {
            Error::Io { .. } | Error::Csv { .. } => eprintln!("error: cannot write output: {e}"),
            _ => eprintln!("error: {e}"),
        }
        EXIT_RUNTIME
    }
}
