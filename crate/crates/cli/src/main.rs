//! `csradar`: simulator front end for sub-Nyquist MIMO radar channel
//! recovery.
//!
//! Subcommands map to the library's experiment drivers: `demo` runs one
//! single-target trial and emits plot-ready artifacts, `sweep` runs a Monte
//! Carlo detection-probability sweep, `recover` solves recorded CSR1
//! observations, and `ric-probe` measures restricted-isometry constants.
//!
//! Exit codes: 0 on success, 1 for configuration problems (including an
//! unreadable config or scene file), 2 for runtime failures.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use csradar_core::config::{load_run_config, load_scene, parse_run_config, seeds_from_master, RunConfig};
use csradar_core::io::{
    read_csr1, write_csr1, write_ric_csv, write_sweep_csv, Csr1Record, FLAG_FREQUENCY_DOMAIN,
};
use csradar_core::mimo::{dominant_index, mean_power, MimoSimulator, RecoveryMode};
use csradar_core::nbi::{joint_recover_on, solution_blocks, two_stage_recover_on};
use csradar_core::plot::{render_panels, render_pd_plot, Panel, Series};
use csradar_core::solver::{epsilon_from_noise, solve_bpdn_with, BpdnProblem, BpdnSolution};
use csradar_core::sweep::{demo_single_target, run_sweep, SweepAxis};
use csradar_core::channel::{sigma2_from_snr, Scene, ScenePath};
use csradar_core::nbi::STAGE2_EPSILON_FACTOR;
use csradar_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "csradar",
    version,
    about = "Sub-Nyquist MIMO UWB radar channel-recovery simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (key = value lines); defaults apply if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path: a directory for demo/recover, a CSV file for sweep/ric-probe.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for all random streams; overrides the config file.
    #[arg(long)]
    master_seed: Option<u64>,
    /// Trials per sweep point or RIC probe count; overrides the config file.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads for Monte Carlo trials; 0 picks the machine default.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run one single-target, single-tone trial and write CSR1 + SVG artifacts.
    Demo(CommonArgs),
    /// Run a detection-probability sweep and write a CSV table plus Pd curves.
    Sweep(CommonArgs),
    /// Recover channels (and NBI) from recorded CSR1 observation files.
    Recover {
        #[command(flatten)]
        common: CommonArgs,
        /// CSR1 observation files, one per receive antenna.
        #[arg(required = true, num_args = 1..=2)]
        inputs: Vec<PathBuf>,
    },
    /// Measure restricted-isometry constants over waveform seeds, write a CSV.
    RicProbe(CommonArgs),
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Demo(c) | Command::Sweep(c) | Command::RicProbe(c) => c,
            Command::Recover { common, .. } => common,
        }
    }
}

/// Which phase failed, deciding the exit code.
enum Failure {
    Config(Error),
    Runtime(Error),
}

impl Failure {
    fn report(self) -> ExitCode {
        match self {
            Failure::Config(e) => {
                eprintln!("csradar: configuration error: {e}");
                ExitCode::from(1)
            }
            Failure::Runtime(e) => {
                eprintln!("csradar: {e}");
                ExitCode::from(2)
            }
        }
    }
}

trait Phase<T> {
    fn config_phase(self) -> std::result::Result<T, Failure>;
    fn runtime_phase(self) -> std::result::Result<T, Failure>;
}

impl<T> Phase<T> for Result<T> {
    fn config_phase(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Config)
    }

    fn runtime_phase(self) -> std::result::Result<T, Failure> {
        self.map_err(Failure::Runtime)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };

    let threads = cli.command.common().threads;
    if threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("csradar: cannot configure {threads} threads: {e}");
            return ExitCode::from(2);
        }
    }

    let outcome = match &cli.command {
        Command::Demo(common) => run_demo(common),
        Command::Sweep(common) => run_sweep_cmd(common),
        Command::Recover { common, inputs } => run_recover(common, inputs),
        Command::RicProbe(common) => run_ric_probe(common),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => failure.report(),
    }
}

fn load_config(common: &CommonArgs) -> std::result::Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => load_run_config(path, 0).config_phase()?,
        None => parse_run_config("", 0).config_phase()?,
    };
    if let Some(seed) = common.master_seed {
        cfg.master_seed = seed;
        cfg.mimo.seeds = seeds_from_master(seed);
    }
    if let Some(trials) = common.trials {
        cfg.trials = trials;
        if let Some(sweep) = &mut cfg.sweep {
            sweep.trials_per_point = trials;
            sweep.validate().config_phase()?;
        }
    }
    if cfg.trials == 0 {
        return Err(Failure::Config(Error::Config(
            "trials must be at least 1".into(),
        )));
    }
    Ok(cfg)
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path)
        .map_err(|e| Error::Format(format!("cannot create '{}': {e}", path.display())))
}

fn ensure_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(parent) if !parent.as_os_str().is_empty() => ensure_dir(parent),
        _ => Ok(()),
    }
}

fn magnitudes(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.norm()).collect()
}

fn run_demo(common: &CommonArgs) -> std::result::Result<(), Failure> {
    let cfg = load_config(common)?;
    let n = cfg.mimo.n;
    let scene = match &cfg.scene_path {
        Some(path) => load_scene(path, n, cfg.mimo.cp_len).config_phase()?,
        None => Scene::new(
            vec![ScenePath {
                alpha: Complex64::new(1.0, 0.0),
                tau: 3.0_f64.min(cfg.mimo.cp_len as f64 - 1.0),
            }],
            n,
            cfg.mimo.cp_len,
        )
        .config_phase()?,
    };

    let bundle = demo_single_target(&cfg.mimo, &scene).runtime_phase()?;

    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("demo_out"));
    ensure_dir(&out_dir).runtime_phase()?;
    write_csr1(
        &out_dir.join("observation.csr1"),
        &Csr1Record::subsampled(n, bundle.observation.clone()),
    )
    .runtime_phase()?;
    write_csr1(
        &out_dir.join("channel.csr1"),
        &Csr1Record::full_rate(bundle.channel.clone()),
    )
    .runtime_phase()?;
    write_csr1(
        &out_dir.join("nbi.csr1"),
        &Csr1Record {
            n,
            flags: FLAG_FREQUENCY_DOMAIN,
            samples: bundle.nbi_spectrum.clone(),
        },
    )
    .runtime_phase()?;

    let time_panel = Panel::lines(
        "Received sub-sampled baseband signal",
        "sample",
        "amplitude",
        vec![
            Series::from_values(
                "re",
                &bundle.observation.iter().map(|z| z.re).collect::<Vec<_>>(),
            ),
            Series::from_values(
                "im",
                &bundle.observation.iter().map(|z| z.im).collect::<Vec<_>>(),
            ),
        ],
    );
    let channel_panel = Panel::stems(
        "Recovered channel information",
        "tap",
        "|h|",
        magnitudes(&bundle.channel),
    );
    let nbi_panel = Panel::stems(
        "Recovered interference information",
        "frequency bin",
        "|j|",
        magnitudes(&bundle.nbi_spectrum),
    );
    let svg = render_panels(&[time_panel, channel_panel, nbi_panel]);
    std::fs::write(out_dir.join("demo.svg"), svg)
        .map_err(|e| Error::Format(format!("cannot write demo.svg: {e}")))
        .runtime_phase()?;

    println!(
        "true tap {} -> dominant recovered tap {}",
        bundle.true_tap,
        bundle
            .dominant_tap
            .map_or("none".to_string(), |t| t.to_string())
    );
    match (&bundle.true_bins[..], bundle.dominant_bin) {
        ([], _) => println!("no NBI injected"),
        (bins, Some(b)) => println!("true NBI bins {bins:?} -> dominant recovered bin {b}"),
        (bins, None) => println!("true NBI bins {bins:?} -> no dominant bin"),
    }
    println!("artifacts written to {}", out_dir.display());
    Ok(())
}

fn run_sweep_cmd(common: &CommonArgs) -> std::result::Result<(), Failure> {
    let cfg = load_config(common)?;
    let Some(spec) = cfg.sweep.clone() else {
        return Err(Failure::Config(Error::Config(
            "config defines no sweep (sweep.axis and sweep.grid are required)".into(),
        )));
    };

    let outcome = run_sweep(&spec, &cfg.mimo, cfg.master_seed).runtime_phase()?;

    let csv_path = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("sweep.csv"));
    ensure_parent(&csv_path).runtime_phase()?;
    write_sweep_csv(&csv_path, &outcome.table).runtime_phase()?;
    let svg_path = csv_path.with_extension("svg");
    let axis_label = match spec.axis {
        SweepAxis::SirDb => "SIR (dB)",
        SweepAxis::SnrDb => "SNR (dB)",
    };
    std::fs::write(&svg_path, render_pd_plot(&outcome.table, axis_label))
        .map_err(|e| Error::Format(format!("cannot write '{}': {e}", svg_path.display())))
        .runtime_phase()?;

    for cell in &outcome.table.cells {
        println!(
            "{:>8} dB  {:<10} {:>6}/{:<6} pd={:.4}",
            cell.point,
            cell.mode,
            cell.hits,
            cell.trials,
            cell.pd()
        );
    }
    println!(
        "table written to {}, curves to {}",
        csv_path.display(),
        svg_path.display()
    );
    Ok(())
}

struct AntennaRecovery {
    channels: Vec<Vec<Complex64>>,
    nbi: Option<Vec<Complex64>>,
    solution: BpdnSolution,
}

fn recover_one(
    sim: &MimoSimulator,
    mode: RecoveryMode,
    observation: &[Complex64],
) -> Result<AntennaRecovery> {
    let m = sim.pattern().m();
    let n = sim.config().n;
    let power = mean_power(observation).max(f64::MIN_POSITIVE);
    let sigma2 = sigma2_from_snr(power, sim.config().snr_db);
    let epsilon_prime = epsilon_from_noise(sigma2, m)?;

    let (solution, nbi) = match mode {
        RecoveryMode::Plain => {
            let problem =
                BpdnProblem::new(sim.channel_operator(), observation.to_vec(), epsilon_prime)?;
            (solve_bpdn_with(&problem, sim.options())?, None)
        }
        RecoveryMode::Joint => {
            let solution = joint_recover_on(
                sim.joint_operator(),
                observation,
                epsilon_prime,
                sim.options(),
            )?;
            let spectrum = solution_blocks(&solution.coefficients, n)?[2].to_vec();
            (solution, Some(spectrum))
        }
        RecoveryMode::TwoStage => {
            let result = two_stage_recover_on(
                sim.joint_operator(),
                sim.channel_operator(),
                observation,
                epsilon_prime,
                STAGE2_EPSILON_FACTOR * epsilon_prime,
                sim.options(),
            )?;
            let spectrum = result.nbi_estimate.clone();
            (result.stage2, Some(spectrum))
        }
    };

    let channels = solution_blocks(&solution.coefficients, n)?
        .into_iter()
        .take(sim.frames().len())
        .zip(sim.frames())
        .map(|(block, frame)| {
            let scale = 1.0 / frame.body_norm();
            block.iter().map(|z| z * scale).collect()
        })
        .collect();
    Ok(AntennaRecovery {
        channels,
        nbi,
        solution,
    })
}

fn run_recover(
    common: &CommonArgs,
    inputs: &[PathBuf],
) -> std::result::Result<(), Failure> {
    let cfg = load_config(common)?;
    let mode = cfg.modes[0];
    let sim = MimoSimulator::new(cfg.mimo.clone()).config_phase()?;
    let n = cfg.mimo.n;
    let m = sim.pattern().m();

    let out_dir = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("recover_out"));
    ensure_dir(&out_dir).runtime_phase()?;

    for (idx, path) in inputs.iter().enumerate() {
        let rx = idx + 1;
        let record = read_csr1(path).runtime_phase()?;
        if record.n != n || record.samples.len() != m {
            return Err(Failure::Runtime(Error::Format(format!(
                "'{}' holds {} samples from n = {}, but the config expects m = {m} from n = {n}",
                path.display(),
                record.samples.len(),
                record.n
            ))));
        }

        let recovery = recover_one(&sim, mode, &record.samples).runtime_phase()?;
        for (tx, channel) in recovery.channels.iter().enumerate() {
            let tap = dominant_index(channel);
            println!(
                "rx{rx} tx{}: dominant tap {}",
                tx + 1,
                tap.map_or("none".to_string(), |t| t.to_string())
            );
            write_csr1(
                &out_dir.join(format!("channel_rx{rx}_tx{}.csr1", tx + 1)),
                &Csr1Record::full_rate(channel.clone()),
            )
            .runtime_phase()?;
        }
        if let Some(spectrum) = &recovery.nbi {
            write_csr1(
                &out_dir.join(format!("nbi_rx{rx}.csr1")),
                &Csr1Record {
                    n,
                    flags: FLAG_FREQUENCY_DOMAIN,
                    samples: spectrum.clone(),
                },
            )
            .runtime_phase()?;
        }
        println!(
            "rx{rx}: {} mode, residual {:.3e}, {} iterations",
            mode.label(),
            recovery.solution.residual_norm,
            recovery.solution.iterations
        );
    }
    println!("estimates written to {}", out_dir.display());
    Ok(())
}

fn run_ric_probe(common: &CommonArgs) -> std::result::Result<(), Failure> {
    let cfg = load_config(common)?;
    let s = cfg.targets.max(1);
    let summary = csradar_core::analysis::ric_concentration_probe(
        cfg.mimo.n,
        cfg.mimo.m,
        s,
        cfg.trials,
        cfg.master_seed,
    )
    .runtime_phase()?;

    let csv_path = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("ric.csv"));
    ensure_parent(&csv_path).runtime_phase()?;
    write_ric_csv(&csv_path, &summary).runtime_phase()?;

    println!(
        "delta_{s} over {} seeds at n={}, m={}: mean {:.4}, std {:.4}",
        summary.records.len(),
        summary.n,
        summary.m,
        summary.mean,
        summary.std_dev
    );
    for (lambda, fraction) in &summary.exceedance {
        println!("  P(delta > {lambda:.1}) = {fraction:.3}");
    }
    println!("records written to {}", csv_path.display());
    Ok(())
}
