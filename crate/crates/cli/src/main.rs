//! `cqedsim`: config-driven experiments that write CSV tables, `.meta`
//! sidecars and optional SVG plots.

mod config;
mod experiments;
mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Config, ConfigError};
use experiments::RunError;

#[derive(Debug, Parser)]
#[command(
    name = "cqedsim",
    version,
    about = "Charge-qubit circuit QED simulator"
)]
struct Cli {
    /// TOML experiment configuration; defaults to the sweet-spot device.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Also write `<name>.svg`.
    #[arg(long, global = true)]
    plot: bool,
    /// Worker threads for parallel sweeps.
    #[arg(long, global = true, env = "CQEDSIM_WORKERS", value_name = "N")]
    workers: Option<usize>,
    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission versus gate voltage and probe frequency.
    Spectrum,
    /// Resonator phase versus drive frequency and gate voltage.
    TwoTone,
    /// Qubit shift versus resonator photon number.
    AcStark,
    /// Driven population oscillations.
    Rabi,
    /// Energy relaxation.
    T1,
    /// Free-induction decay.
    Ramsey,
    /// Hahn echo.
    Echo,
    /// Carr-Purcell-Meiboom-Gill sequence.
    Cpmg {
        #[arg(long, value_name = "N")]
        n_pi: Option<usize>,
    },
    /// Single-shot IQ readout and assignment fidelity.
    Readout,
    /// Clifford randomized benchmarking.
    Rb {
        /// Comma-separated sequence lengths.
        #[arg(long, value_delimiter = ',', value_name = "M,M,...")]
        depths: Option<Vec<usize>>,
        #[arg(long, value_name = "N")]
        sequences: Option<usize>,
        #[arg(long, value_name = "N")]
        shots: Option<usize>,
    },
    /// Transmission over the two-gate voltage plane.
    TwoQubitMap,
    /// Closed-form coherence budget for every qubit.
    Budget,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::TwoTone => "two-tone",
            Command::AcStark => "ac-stark",
            Command::Rabi => "rabi",
            Command::T1 => "t1",
            Command::Ramsey => "ramsey",
            Command::Echo => "echo",
            Command::Cpmg { .. } => "cpmg",
            Command::Readout => "readout",
            Command::Rb { .. } => "rb",
            Command::TwoQubitMap => "two-qubit-map",
            Command::Budget => "budget",
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, ConfigError> {
    let mut cfg = match &cli.config {
        Some(path) => config::load(path)?,
        None => config::parse("[device]\npreset = \"sweet_spot\"\n")?,
    };
    if let Some(seed) = cli.seed {
        cfg.seed = Some(seed);
    }
    match &cli.command {
        Command::Cpmg { n_pi: Some(n) } => {
            cfg.cpmg.get_or_insert_with(Default::default).n_pi = Some(*n);
        }
        Command::Rb {
            depths,
            sequences,
            shots,
        } => {
            let rb = cfg.rb.get_or_insert_with(Default::default);
            if depths.is_some() {
                rb.depths = depths.clone();
            }
            if sequences.is_some() {
                rb.sequences = *sequences;
            }
            if shots.is_some() {
                rb.shots = *shots;
            }
        }
        _ => {}
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), RunError> {
    std::fs::write(path, contents)
        .map_err(|e| RunError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn execute(cli: &Cli) -> Result<(), RunError> {
    let command = cli.command.name();
    let raw = load_config(cli)?;
    let resolved = config::resolve(&raw, command)?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(RunError::Config(ConfigError::Invalid {
                key: "workers".into(),
                reason: "must be >= 1".into(),
            }));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| RunError::Runtime(e.to_string()))?;
    }
    let table = experiments::run(command, &resolved)?;

    let out_dir = cli
        .out
        .clone()
        .or_else(|| resolved.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| RunError::Runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let name = resolved.name.clone().unwrap_or_else(|| command.to_string());
    let header = vec![
        ("command".to_string(), command.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("seed".to_string(), resolved.seed.unwrap_or(0).to_string()),
    ];
    let csv = table.to_csv(&header);
    let csv_path = out_dir.join(format!("{name}.csv"));
    write(&csv_path, &csv)?;
    write(
        &out_dir.join(format!("{name}.meta")),
        &config::to_meta(&resolved, command),
    )?;
    if cli.plot {
        let svg =
            plot::emit_plot(&csv, &table.plot).map_err(|e| RunError::Runtime(e.to_string()))?;
        write(&out_dir.join(format!("{name}.svg")), &svg)?;
    }
    for line in &table.summary {
        println!("{line}");
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(e)) => {
            eprintln!("config error: {e}");
            ExitCode::from(1)
        }
        Err(RunError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
