use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use qsimlab::grid::{aliasing_error, suggest_space_qubits, GaussianPacket};
use qsimlab::lab::{
    self, deviation_autocorrelation, figure_presets, leak_table_cells, run_single,
    run_with_baseline, table1_cells, verify, write_file, write_snapshots_csv, write_table_csv,
    write_trace_csv, Baseline, CellKey, ErrorMode, ExperimentConfig, Manifest, TableResult,
};
use qsimlab::noise::LeakKind;
use qsimlab::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "qsimlab",
    version,
    about = "Error sensitivity of a split-operator quantum simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON experiment config; missing fields take defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Replicates per sweep cell.
    #[arg(long, global = true)]
    replicates: Option<usize>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One zero-error baseline plus one erroneous run, with snapshots.
    Evolve {
        #[command(flatten)]
        common: Common,
        /// Error mode: alpha, beta, theta, u1 or u2. Without it the run is error free.
        #[arg(long)]
        error: Option<ErrorMode>,
        /// Space qubit hit by the error.
        #[arg(long, default_value_t = 0)]
        qubit: usize,
        /// Largest random angle in radians.
        #[arg(long, default_value_t = 0.3)]
        max: f64,
        /// Replicate index selecting the random stream.
        #[arg(long, default_value_t = 0)]
        replicate: usize,
    },
    /// Mean and spread of the final fidelity over a grid of cells.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "theta")]
        modes: Vec<ErrorMode>,
        #[arg(long, value_delimiter = ',', default_value = "0.05,0.1,0.2,0.3")]
        magnitudes: Vec<f64>,
        /// Space qubits; defaults to all of them.
        #[arg(long, value_delimiter = ',')]
        qubits: Vec<usize>,
    },
    /// The memory-error table and the two leak tables.
    Tables {
        #[command(flatten)]
        common: Common,
    },
    /// Snapshot series for the six figure presets.
    Figures {
        #[command(flatten)]
        common: Common,
    },
    /// Space-register size needed for a packet.
    Budget {
        #[command(flatten)]
        common: Common,
        /// Packet spread; defaults to the configured packet.
        #[arg(long)]
        width: Option<f64>,
        /// Extent of the grid; defaults to the configured grid.
        #[arg(long)]
        range: Option<f64>,
        /// Largest acceptable aliasing error.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
    /// Oracle and invariant self-checks.
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Evolve { common, .. }
            | Command::Sweep { common, .. }
            | Command::Tables { common }
            | Command::Figures { common }
            | Command::Budget { common, .. }
            | Command::Verify { common } => common,
        }
    }
}

/// Loads the config (or `fallback`) and applies the command-line overrides.
fn resolve(common: &Common, fallback: ExperimentConfig) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => lab::read_config(path)?,
        None => fallback,
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(replicates) = common.replicates {
        config.replicates = replicates;
    }
    config.validate()?;
    Ok(config)
}

fn create_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_table(
    dir: &Path,
    name: &str,
    command: &str,
    config: &ExperimentConfig,
    table: &TableResult,
) -> Result<()> {
    write_file(&dir.join(format!("{name}.csv")), |f| {
        write_table_csv(table, f)
    })?;
    let keys: Vec<CellKey> = table.cells.iter().map(|c| c.key).collect();
    Manifest::new(command, config, &keys, config.replicates)
        .write(&dir.join(format!("{name}.manifest.json")))
}

fn evolve(
    common: &Common,
    error: Option<ErrorMode>,
    qubit: usize,
    max: f64,
    replicate: usize,
) -> Result<()> {
    let config = resolve(common, ExperimentConfig::default())?;
    let config = match error {
        Some(mode) => config.with_error(Some(mode.error_spec(qubit, max))),
        None => config,
    };
    config.validate()?;
    let run = run_single(&config, replicate)?;
    let dir = &common.out;
    create_out(dir)?;
    write_file(&dir.join("trace.csv"), |f| write_trace_csv(&run.trace, f))?;
    write_file(&dir.join("snapshots.csv"), |f| {
        write_snapshots_csv(&config.grid, &run.noisy_distributions, f)
    })?;
    write_file(&dir.join("baseline_snapshots.csv"), |f| {
        write_snapshots_csv(&config.grid, &run.baseline_distributions, f)
    })?;
    Manifest::new("evolve", &config, &[], 1).write(&dir.join("manifest.json"))?;
    println!(
        "final fidelity {:.6} after {} error applications",
        run.trace.final_fidelity(),
        run.error_applications
    );
    Ok(())
}

fn sweep(common: &Common, modes: &[ErrorMode], magnitudes: &[f64], qubits: &[usize]) -> Result<()> {
    let config = resolve(common, ExperimentConfig::compact())?;
    let all: Vec<usize> = (0..config.grid.space_qubits).collect();
    let qubits = if qubits.is_empty() { &all[..] } else { qubits };
    let table = lab::run_table(&config, modes, magnitudes, qubits, config.replicates)?;
    create_out(&common.out)?;
    write_table(&common.out, "sweep", "sweep", &config, &table)?;
    println!("{}", table.pivot());
    Ok(())
}

fn tables(common: &Common) -> Result<()> {
    let config = resolve(common, ExperimentConfig::compact())?;
    let n = config.grid.space_qubits;
    create_out(&common.out)?;
    let presets = [
        ("table1", table1_cells(n)),
        ("table2", leak_table_cells(LeakKind::U1, n)),
        ("table3", leak_table_cells(LeakKind::U2, n)),
    ];
    for (name, cells) in presets {
        info!(
            "{name}: {} cells x {} replicates",
            cells.len(),
            config.replicates
        );
        let table = lab::run_cells(&config, &cells, config.replicates)?;
        write_table(&common.out, name, "tables", &config, &table)?;
        println!("{name}\n{}", table.pivot());
    }
    Ok(())
}

fn figures(common: &Common) -> Result<()> {
    let config = resolve(common, ExperimentConfig::compact())?;
    let baseline = Baseline::compute(&config.clone().with_error(None))?;
    create_out(&common.out)?;
    write_file(&common.out.join("baseline.csv"), |f| {
        write_snapshots_csv(&config.grid, baseline.distributions(), f)
    })?;
    let mut summary = Vec::new();
    for preset in figure_presets() {
        let run_config = config.clone().with_error(Some(preset.error));
        let run = run_with_baseline(&run_config, &baseline, 0)?;
        write_file(&common.out.join(format!("{}.csv", preset.name)), |f| {
            write_snapshots_csv(&config.grid, &run.noisy_distributions, f)
        })?;
        let last = config.physical.steps;
        let (noisy, clean) = (
            &run.noisy_distributions[last],
            &run.baseline_distributions[last],
        );
        let lag1 = deviation_autocorrelation(noisy, clean, 1);
        let lag32 = deviation_autocorrelation(noisy, clean, 32);
        println!(
            "{}: final fidelity {:.4}, deviation autocorrelation lag 1 {lag1:+.3}, lag 32 {lag32:+.3}",
            preset.name,
            run.trace.final_fidelity()
        );
        summary.push(serde_json::json!({
            "preset": preset,
            "final_fidelity": run.trace.final_fidelity(),
            "autocorrelation_lag1": lag1,
            "autocorrelation_lag32": lag32,
        }));
    }
    let path = common.out.join("figures.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|source| Error::Json {
        path: path.clone(),
        source,
    })?;
    std::fs::write(&path, text + "\n").map_err(|source| Error::Io { path, source })?;
    Manifest::new("figures", &config, &[], 1).write(&common.out.join("manifest.json"))
}

fn budget(common: &Common, width: Option<f64>, range: Option<f64>, tolerance: f64) -> Result<()> {
    let config = resolve(common, ExperimentConfig::default())?;
    let packet = GaussianPacket {
        width: width.unwrap_or(config.packet.width),
        ..config.packet
    };
    packet.validate()?;
    let range = range.unwrap_or(config.grid.range());
    let n = suggest_space_qubits(&packet, range, tolerance)?;
    let grid = qsimlab::grid::SpatialGrid::new(-range / 2.0, range / 2.0, n)?;
    let m = config.quant.ancilla_qubits;
    println!("packet width {} over range {range}", packet.width);
    println!(
        "space qubits: {n} (aliasing error {:.3e})",
        aliasing_error(&packet, &grid)
    );
    println!("ancilla qubits: {m}");
    println!("total with a leak qubit: {}", n + m + 1);
    Ok(())
}

fn verify(common: &Common) -> Result<bool> {
    let seed = common.seed.unwrap_or(ExperimentConfig::default().seed);
    let outcomes = verify::run_all(seed)?;
    for o in &outcomes {
        println!(
            "{} {}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.detail
        );
    }
    Ok(outcomes.iter().all(|o| o.passed))
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Evolve {
            common,
            error,
            qubit,
            max,
            replicate,
        } => evolve(common, *error, *qubit, *max, *replicate).map(|_| true),
        Command::Sweep {
            common,
            modes,
            magnitudes,
            qubits,
        } => sweep(common, modes, magnitudes, qubits).map(|_| true),
        Command::Tables { common } => tables(common).map(|_| true),
        Command::Figures { common } => figures(common).map(|_| true),
        Command::Budget {
            common,
            width,
            range,
            tolerance,
        } => budget(common, *width, *range, *tolerance).map(|_| true),
        Command::Verify { common } => verify(common),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = cli.command.common().threads {
        builder = builder.num_threads(threads);
    }
    let pool = match builder.build() {
        Ok(pool) => pool,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return ExitCode::FAILURE;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
