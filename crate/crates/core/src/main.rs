use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lis_uplink::chain::{self, Algorithm, ExecutionMode};
use lis_uplink::channel;
use lis_uplink::sweep::{self, ConfigFile, PanelProfile, SweepAxis};
use lis_uplink::{LisError, Result};

#[derive(Parser)]
#[command(name = "lis-sim", version, about = "Panelized LIS uplink sum-rate simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo sweep over outputs per panel (np) or total outputs (n); writes CSV.
    Sweep(SweepArgs),
    /// Run a single trial and print its report as key = value lines.
    Trial(TrialArgs),
}

#[derive(Args)]
struct SweepArgs {
    /// JSON config file with scenario and sweep keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    axis: Option<SweepAxis>,
    /// Comma-separated axis values; defaults depend on the profile.
    #[arg(long, value_delimiter = ',')]
    values: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<Algorithm>>,
    #[arg(long, value_delimiter = ',')]
    profiles: Option<Vec<PanelProfile>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    passes: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrialArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "iic")]
    algo: Algorithm,
    /// Outputs per panel.
    #[arg(long)]
    np: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    trial_index: u64,
    /// Antennas per panel; defaults to a one-wavelength grid pitch.
    #[arg(long)]
    mp: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, default_value_t = 1)]
    passes: usize,
    /// Run the algorithm on the CPU instead of along the panel chain.
    #[arg(long)]
    centralized: bool,
}

fn load(path: Option<&PathBuf>) -> Result<ConfigFile> {
    match path {
        Some(p) => ConfigFile::load(p).map_err(|e| match e {
            LisError::Io(io) => LisError::Config(format!("cannot read config {}: {io}", p.display())),
            other => other,
        }),
        None => Ok(ConfigFile::default()),
    }
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let file = load(args.config.as_ref())?;
    let base = file.scenario();
    let mut spec = file.sweep();
    if let Some(v) = args.axis {
        spec.axis = v;
    }
    if let Some(v) = args.values {
        spec.values = v;
    }
    if let Some(v) = args.algos {
        spec.algorithms = v;
    }
    if let Some(v) = args.profiles {
        spec.panel_profiles = v;
    }
    if let Some(v) = args.trials {
        spec.trials = v;
    }
    if let Some(v) = args.seed {
        spec.seed = v;
    }
    if let Some(v) = args.rho {
        spec.rho = v;
    }
    if let Some(v) = args.passes {
        spec.passes = v;
    }
    let rows = sweep::run_sweep(&spec, &base)?;
    sweep::emit_csv(&rows, &args.out)?;
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn run_trial(args: TrialArgs) -> Result<()> {
    let file = load(args.config.as_ref())?;
    let mut cfg = file.scenario();
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.rho {
        cfg.snr_rho = r;
    }
    cfg.validate()?;
    let mp = args.mp.unwrap_or_else(|| cfg.default_antennas_per_panel());
    let scenario = channel::build_scenario(&cfg, mp)?;
    let chan = sweep::trial_channel(&scenario, &cfg, args.trial_index)?;
    let mode = if args.centralized { ExecutionMode::Centralized } else { ExecutionMode::Decentralized };
    let res = chain::run(&chan.blocks, cfg.snr_rho, args.np, args.algo, mode, args.passes)?;

    println!("algorithm = {}", args.algo);
    println!("mode = {}", if args.centralized { "centralized" } else { "decentralized" });
    println!("panels = {}", scenario.num_panels());
    println!("antennas_per_panel = {mp}");
    println!("total_antennas = {}", scenario.total_antennas());
    println!("users = {}", cfg.users_k);
    println!("np = {}", args.np);
    println!("n_total = {}", res.equalizers.total_outputs());
    println!("rho = {}", cfg.snr_rho);
    println!("seed = {}", cfg.seed);
    println!("trial_index = {}", args.trial_index);
    println!("passes = {}", res.passes_executed);
    println!("norm_scale = {:.10e}", chan.norm_scale);
    println!("sum_rate_bits = {:.10}", res.report.sum_rate_bits);
    println!("channel_capacity_bits = {:.10}", res.report.channel_capacity_bits);
    println!("chain_complex_scalars = {}", res.traffic.chain_complex_scalars);
    println!("chain_hermitian_scalars = {}", res.traffic.chain_hermitian_scalars);
    println!("chain_bytes = {}", res.traffic.chain_bytes());
    println!("backplane_scalars_per_use = {}", res.traffic.backplane_scalars_per_use);
    println!("cpu_scalars_per_use = {}", res.traffic.cpu_scalars_per_use);
    println!("centralized_csi_scalars = {}", res.traffic.centralized_csi_scalars);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(a) => run_sweep(a),
        Command::Trial(a) => run_trial(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
