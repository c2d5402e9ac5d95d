use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpdd_sim::channel::WaveformTag;
use mpdd_sim::harness::{
    export_channel, layer_sweep, run_ber, run_optimize, write_ber_csv, write_layer_sweep_csv, write_magnitude_csv,
    write_path_csv, write_resolved_config, ExperimentConfig, Scenario,
};
use mpdd_sim::waveform::WaveformKind;
use mpdd_sim::{Error, Result};

#[derive(Parser)]
#[command(name = "mpdd-sim", version, about = "Metasurface-parametrized doubly-dispersive channel simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration; omitted keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory for outputs and the resolved configuration.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `waveform.kind`.
    #[arg(long)]
    waveform: Option<String>,
    /// Overrides `waveform.n`.
    #[arg(long)]
    n: Option<usize>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo BER sweep.
    Ber {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: u64,
        /// Overrides `sweep.snr_db`, e.g. `0,5,10`.
        #[arg(long, value_delimiter = ',')]
        snr: Option<Vec<f64>>,
        /// Overrides `sweep.trials`.
        #[arg(long)]
        trials: Option<usize>,
        /// Overrides `sweep.max_trials`.
        #[arg(long)]
        max_trials: Option<usize>,
    },
    /// Writes `|H̄|` and per-path metadata for one channel realization.
    ExportChannel {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Export the time-domain channel instead of the waveform domain.
        #[arg(long)]
        time_domain: bool,
    },
    /// Runs SIM phase optimization and writes the objective trace.
    OptimizeSim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        /// Also sweep the TX layer count over these values, e.g. `2,3,5,7`.
        #[arg(long, value_delimiter = ',')]
        sweep_layers: Option<Vec<usize>>,
        /// Overrides `optimizer.max_iters`.
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Loads and checks a configuration, printing the resolved form.
    ValidateConfig {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load(common: &Common, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    if cfg.seed.is_none() {
        cfg.seed = Some(0);
    }
    if let Some(w) = &common.waveform {
        cfg.waveform.kind = w.parse::<WaveformKind>()?;
    }
    if let Some(n) = common.n {
        cfg.waveform.n = n;
        cfg.waveform.k_tilde = None;
        cfg.waveform.k_tilde_prime = None;
        cfg.waveform.c1 = None;
    }
    if let Some(t) = common.threads {
        // ignore failure when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    cfg.resolve()
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ber {
            common,
            seed,
            snr,
            trials,
            max_trials,
        } => {
            let mut cfg = load(&common, Some(seed))?;
            if let Some(s) = snr {
                cfg.sweep.snr_db = s;
            }
            if let Some(t) = trials {
                cfg.sweep.trials = t;
                cfg.sweep.max_trials = cfg.sweep.max_trials.max(t);
            }
            if let Some(t) = max_trials {
                cfg.sweep.max_trials = t;
            }
            let cfg = cfg.resolve()?;
            write_resolved_config(&cfg, &common.out)?;
            let scn = Scenario::new(cfg)?;
            let records = run_ber(&scn)?;
            write_ber_csv(&records, create(&common.out, "ber.csv")?)?;
            for r in &records {
                println!(
                    "{:>6} dB  {:<5} {:<11} BER {:.3e} ({} / {})",
                    r.snr_db, r.detector, r.sim_mode, r.ber, r.bit_errors, r.bits
                );
            }
        }
        Command::ExportChannel {
            common,
            seed,
            time_domain,
        } => {
            let cfg = load(&common, seed)?;
            write_resolved_config(&cfg, &common.out)?;
            let scn = Scenario::new(cfg)?;
            let domain = if time_domain { WaveformTag::Td } else { scn.modem().spec().kind.tag() };
            let export = export_channel(&scn, domain)?;
            write_magnitude_csv(&export.channel, create(&common.out, &format!("channel_{domain}.csv"))?)?;
            write_path_csv(&export.paths, create(&common.out, &format!("paths_{domain}.csv"))?)?;
            println!("wrote {}x{} {domain} channel with {} paths", export.channel.hbar.nrows(), export.channel.hbar.ncols(), export.paths.len());
        }
        Command::OptimizeSim {
            common,
            seed,
            sweep_layers,
            iters,
        } => {
            let mut cfg = load(&common, seed)?;
            if let Some(i) = iters {
                cfg.optimizer.max_iters = i;
            }
            write_resolved_config(&cfg, &common.out)?;
            let scn = Scenario::new(cfg)?;
            let res = run_optimize(&scn, 0)?;
            res.write_csv(create(&common.out, "optimizer_trace.csv")?)?;
            println!(
                "objective {:.6e} -> {:.6e} in {} iterations",
                res.initial(),
                res.final_objective(),
                res.trace.len() - 1
            );
            if let Some(layers) = sweep_layers {
                let rows = layer_sweep(&scn, 0, &layers)?;
                write_layer_sweep_csv(&rows, create(&common.out, "layer_sweep.csv")?)?;
                for r in &rows {
                    println!("Q = {:>2}: {:.6e}", r.layers, r.final_objective);
                }
            }
        }
        Command::ValidateConfig { config } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if cfg.seed.is_none() {
                cfg.seed = Some(0);
            }
            println!("{}", cfg.resolve()?.to_json());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(Error::exit_code(&e) as u8)
        }
    }
}
