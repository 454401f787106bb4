//! `dicke-quench`: CSV data for level dynamics, quenches, sweeps, Peres
//! lattices, observable dynamics and interaction dispersions.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage or configuration error,
//! 3 numerical failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use dicke_quench::presets::{self, Command};
use dicke_quench::Error;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::NoConvergence { .. }
            | Error::SingularFit(_)
            | Error::VanishingDensity { .. }
            | Error::Truncation { .. } => CliError::Numerical(msg),
            _ => CliError::Usage(msg),
        }
    }
}

#[derive(Parser)]
#[command(name = "dicke-quench", version, about = "Quench dynamics of the extended Dicke model by exact diagonalization")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Level dynamics over lambda_grid (levels.csv, critical_lines.csv)
    Levels(RunArgs),
    /// Single quench (strength.csv, survival.csv, scalars.csv, spacing.csv)
    Quench(RunArgs),
    /// Quenches to every lambda in lambda_grid (sweep.csv)
    Sweep(RunArgs),
    /// Peres lattice at lambda_lattice with a quench overlay (peres.csv)
    Peres(RunArgs),
    /// Observable after a quench (observable.csv)
    Observable(RunArgs),
    /// Interaction dispersion of basis states (dispersion.csv)
    Dispersion(RunArgs),
    /// Runs the command a preset was made for
    Run(RunArgs),
    /// Lists the presets
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// Named parameter set, e.g. fig6b
    #[arg(long)]
    preset: Option<String>,
    /// File of `key = value` lines; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
    /// Rescales a preset to this j (truncated sectors get n_max scaled alike)
    #[arg(long, value_name = "J")]
    scale_j: Option<f64>,
    /// Caps the number of worker threads
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(short, long)]
    out: Option<String>,
    /// Generic override, repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(flatten)]
    keys: KeyFlags,
}

#[derive(Args)]
struct KeyFlags {
    #[arg(long)]
    omega: Option<String>,
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    two_j: Option<String>,
    #[arg(long)]
    n_max: Option<String>,
    /// even, odd, full, m=2j, m=j or m=<M>
    #[arg(long)]
    basis: Option<String>,
    #[arg(long)]
    lambda_i: Option<String>,
    #[arg(long)]
    lambda_f: Option<String>,
    /// start:stop:points or a comma list
    #[arg(long)]
    lambda_grid: Option<String>,
    /// eigenstate index, highest, middle or state:<n>,<2m>
    #[arg(long)]
    initial: Option<String>,
    /// photon_number or jz
    #[arg(long)]
    observable: Option<String>,
    #[arg(long)]
    lambda_lattice: Option<String>,
    #[arg(long)]
    overlay: Option<String>,
    /// lo:hi in units of omega0 j
    #[arg(long)]
    energy_window: Option<String>,
    /// log or linear
    #[arg(long)]
    time_grid: Option<String>,
    #[arg(long)]
    t_min: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    t_points: Option<String>,
    #[arg(long)]
    population_floor: Option<String>,
    /// Population threshold of the modified Heisenberg time
    #[arg(long)]
    threshold: Option<String>,
    #[arg(long)]
    kernel_width: Option<String>,
    /// all or lowest
    #[arg(long)]
    dispersion_mode: Option<String>,
    #[arg(long)]
    m_max: Option<String>,
}

impl KeyFlags {
    fn pairs(&self) -> [(&'static str, &Option<String>); 23] {
        [
            ("omega", &self.omega),
            ("omega0", &self.omega0),
            ("delta", &self.delta),
            ("two_j", &self.two_j),
            ("n_max", &self.n_max),
            ("basis", &self.basis),
            ("lambda_i", &self.lambda_i),
            ("lambda_f", &self.lambda_f),
            ("lambda_grid", &self.lambda_grid),
            ("initial", &self.initial),
            ("observable", &self.observable),
            ("lambda_lattice", &self.lambda_lattice),
            ("overlay", &self.overlay),
            ("energy_window", &self.energy_window),
            ("time_grid", &self.time_grid),
            ("t_min", &self.t_min),
            ("t_max", &self.t_max),
            ("t_points", &self.t_points),
            ("population_floor", &self.population_floor),
            ("threshold", &self.threshold),
            ("kernel_width", &self.kernel_width),
            ("dispersion_mode", &self.dispersion_mode),
            ("m_max", &self.m_max),
        ]
    }
}

/// Layers: preset (from the flag or the file), `--scale-j`, file, flags.
fn resolve(args: &RunArgs) -> Result<(RunConfig, Option<Command>), CliError> {
    let file_text = match &args.config {
        Some(p) => Some(
            std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
        ),
        None => None,
    };
    let file_preset = file_text.as_deref().and_then(|t| {
        t.lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter_map(|l| l.split_once('='))
            .find(|(k, _)| k.trim() == "preset")
            .map(|(_, v)| v.trim().to_string())
    });
    let name = args.preset.clone().or(file_preset);
    let (mut cfg, command) = match name {
        Some(n) => {
            let mut p = presets::find(&n)?;
            if let Some(j) = args.scale_j {
                let two_j = (2.0 * j).round();
                if !(two_j >= 1.0 && two_j <= f64::from(u32::MAX) && (2.0 * j - two_j).abs() < 1e-9) {
                    return Err(CliError::Usage(format!("--scale-j must be a positive multiple of 1/2, got {j}")));
                }
                p = p.with_two_j(two_j as u32);
            }
            (RunConfig::from_preset(&p), Some(p.command))
        }
        None => {
            if args.scale_j.is_some() {
                return Err(CliError::Usage("--scale-j rescales a preset; give --preset".into()));
            }
            (RunConfig::default(), None)
        }
    };
    if let (Some(text), Some(p)) = (&file_text, &args.config) {
        cfg.apply_text(text, &p.display().to_string())?;
    }
    for (k, v) in args.keys.pairs() {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    for kv in &args.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(o) = &args.out {
        cfg.out = PathBuf::from(o);
    }
    Ok((cfg, command))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (args, command) = match cli.command {
        Cmd::Presets => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            for p in presets::all() {
                let line = format!("{:<12} {:<10} {}", p.name, p.command.to_string(), describe(&p));
                if writeln!(out, "{line}").is_err() {
                    break;
                }
            }
            return Ok(());
        }
        Cmd::Levels(a) => (a, Some(Command::Levels)),
        Cmd::Quench(a) => (a, Some(Command::Quench)),
        Cmd::Sweep(a) => (a, Some(Command::Sweep)),
        Cmd::Peres(a) => (a, Some(Command::Peres)),
        Cmd::Observable(a) => (a, Some(Command::Observable)),
        Cmd::Dispersion(a) => (a, Some(Command::Dispersion)),
        Cmd::Run(a) => (a, None),
    };
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let (cfg, preset_command) = resolve(&args)?;
    let command = command
        .or(preset_command)
        .ok_or_else(|| CliError::Usage("`run` needs a preset".into()))?;
    info!("{command}: {}", cfg.provenance());
    let start = std::time::Instant::now();
    let written = commands::run(command, &cfg)?;
    for p in &written {
        println!("{}", p.display());
    }
    info!("done in {:.2?}", start.elapsed());
    Ok(())
}

fn describe(p: &presets::Preset) -> String {
    let mut s = format!(
        "omega={} omega0={} delta={} 2j={} basis={}",
        p.omega, p.omega0, p.delta, p.two_j, p.basis
    );
    if p.basis.is_truncated() {
        s.push_str(&format!(" n_max={}", p.n_max));
    }
    match p.command {
        Command::Quench | Command::Observable => {
            s.push_str(&format!(" lambda {} -> {} initial={}", p.lambda_i, p.lambda_f, p.initial))
        }
        Command::Sweep => s.push_str(&format!(" lambda_i={} over {} final couplings", p.lambda_i, grid_len(p))),
        Command::Peres => s.push_str(&format!(" lattice at {:?} from lambda_i={}", p.lambda_lattice, p.lambda_i)),
        Command::Levels => s.push_str(&format!(" {} couplings", grid_len(p))),
        Command::Dispersion => {}
    }
    s
}

fn grid_len(p: &presets::Preset) -> usize {
    p.lambda_grid.map_or(0, |g| g.2)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
