use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nvfiber::model::{dark_state, effective_hamiltonian};
use nvfiber::sweeps::{
    apply_overrides, config_from_value, figure_preset, read_config, run_protocol, run_sweep, to_csv, trajectory_csv,
    Config, Protocol, FIGURE_IDS,
};
use nvfiber::{build_basis, BasisSpec, Error};

/// Adiabatic W-state preparation and phase-covariant cloning in
/// fiber-coupled NV/nanocavity networks.
#[derive(Parser)]
#[command(name = "nvfiber", version, about)]
struct Cli {
    /// Log verbosity on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dark-state amplitudes and the residual ‖H D‖ at one instant.
    DarkState {
        #[command(flatten)]
        common: Common,
        /// Evaluation time in units of 1/g.
        #[arg(long, default_value_t = 150.0)]
        time: f64,
    },
    /// Run the W-state preparation protocol.
    PrepareW {
        #[command(flatten)]
        common: Common,
    },
    /// Run the 1→N phase-covariant cloning protocol.
    Clone {
        #[command(flatten)]
        common: Common,
        /// Phase δ of the input qubit in radians.
        #[arg(long)]
        delta_phase: Option<f64>,
    },
    /// Run the sweep described by the config's `sweep` section.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads.
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Run a figure preset (3a, 3b, 3c, 4, 5, 6, 7).
    Figure {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(FIGURE_IDS))]
        id: String,
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file; built-in defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output CSV path (overrides `output.path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config value, e.g. `--set system.nu=5`. Repeatable.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    overrides: Vec<String>,
    /// Model to integrate.
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Full,
    Effective,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn load(common: &Common, base: Option<Config>, extra: &[String]) -> Result<Config, Error> {
    let config = match (&common.config, base) {
        (Some(path), _) => read_config(path)?,
        (None, Some(preset)) => preset,
        (None, None) => Config::default(),
    };
    let mut overrides = common.overrides.clone();
    if let Some(model) = common.model {
        overrides.push(format!("model={}", if matches!(model, ModelArg::Full) { "full" } else { "effective" }));
    }
    overrides.extend_from_slice(extra);
    let config = if overrides.is_empty() {
        config
    } else {
        let mut value = serde_json::to_value(&config).expect("config serializes");
        apply_overrides(&mut value, &overrides)?;
        config_from_value(value)?
    };
    config.validate()?;
    Ok(config)
}

fn output_path(common: &Common, config: &Config) -> Option<PathBuf> {
    common.out.clone().or_else(|| config.output.as_ref().map(|o| o.path.clone()))
}

fn write(path: &Path, text: &str) -> Result<(), Error> {
    fs::write(path, text)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    let start = Instant::now();
    match cli.command {
        Command::DarkState { common, time } => {
            let config = load(&common, None, &[])?;
            let setup = config.setup();
            let mut spec = BasisSpec::effective(config.system.n_sites, config.basis.n_max);
            spec.excitation_cap = config.basis.excitation_cap;
            let basis = build_basis(spec)?;
            let schedule = setup.schedule();
            let d = dark_state(&config.system, &schedule, &basis, time)?;
            let h = effective_hamiltonian(&config.system, &schedule, &basis)?;
            let residual = h.at(time).apply(d.state.as_slice()).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let mut csv = String::from("state,re,im\n");
            for (s, a) in basis.states().iter().zip(d.state.as_slice()) {
                if a.norm() > 0.0 {
                    println!("{s}  {:+.9} {:+.9}i", a.re, a.im);
                    csv.push_str(&format!("{s},{},{}\n", a.re, a.im));
                }
            }
            if let Some(path) = output_path(&common, &config) {
                write(&path, &csv)?;
            }
            println!(
                "dark-state t={time}: residual {residual:.3e}{}, dim {}, {:.3} s",
                if d.degenerate { " (degenerate limit)" } else { "" },
                basis.dimension(),
                start.elapsed().as_secs_f64()
            );
            Ok(true)
        }
        Command::PrepareW { common } => {
            let config = load(&common, None, &["protocol=prepare_w".into()])?;
            let r = run_protocol(&config)?;
            if let Some(path) = output_path(&common, &config) {
                write(&path, &trajectory_csv(&r))?;
            }
            println!(
                "prepare-w ({}): F = {:.6}, dim {}, {:.3} s",
                config.model,
                r.final_fidelity,
                config.setup().build_basis()?.dimension(),
                start.elapsed().as_secs_f64()
            );
            Ok(true)
        }
        Command::Clone { common, delta_phase } => {
            let mut extra = vec!["protocol=clone".to_string()];
            extra.extend(delta_phase.map(|d| format!("clone.delta_phase={d}")));
            let config = load(&common, None, &extra)?;
            debug_assert_eq!(config.protocol, Protocol::Clone);
            let r = run_protocol(&config)?;
            if let Some(path) = output_path(&common, &config) {
                write(&path, &trajectory_csv(&r))?;
            }
            let copies: Vec<String> = r.per_copy.unwrap_or_default().iter().map(|f| format!("{f:.6}")).collect();
            println!(
                "clone ({}, δ={}): F = {:.6}, per-copy [{}], dim {}, {:.3} s",
                config.model,
                config.clone.delta_phase,
                r.final_fidelity,
                copies.join(", "),
                config.setup().build_basis()?.dimension(),
                start.elapsed().as_secs_f64()
            );
            Ok(true)
        }
        Command::Sweep { common, workers } => {
            let config = load(&common, None, &[])?;
            sweep(&common, &config, workers, "sweep", start)
        }
        Command::Figure { id, common, workers } => {
            let preset = figure_preset(&id)?;
            let config = load(&common, Some(preset), &[])?;
            sweep(&common, &config, workers, &format!("figure {id}"), start)
        }
    }
}

fn sweep(common: &Common, config: &Config, workers: usize, label: &str, start: Instant) -> Result<bool, Error> {
    let result = run_sweep(config, workers)?;
    let csv = to_csv(&result);
    match output_path(common, config) {
        Some(path) => write(&path, &csv)?,
        None => print!("{csv}"),
    }
    let failed = result.failures();
    for row in result.rows.iter().filter(|r| r.value.is_err()) {
        eprintln!("point {:?}: {}", row.params, row.value.as_ref().unwrap_err());
    }
    let values: Vec<f64> = result.values().into_iter().filter(|v| v.is_finite()).collect();
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!(
        "{label}: {} rows ({failed} failed), fidelity range [{lo:.6}, {hi:.6}], dim {}, dt {}, {:.3} s",
        result.rows.len(),
        result.basis_dimension,
        result.dt,
        start.elapsed().as_secs_f64()
    );
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}
