mod commands;
mod config;
mod format;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use clusterloop::experiment::{AnalysisBasis, OverlapModel, SweepAxis, SweepMetric};

use commands::{AxisRange, Output, SampleRequest};
use config::{BasisArg, CliError, CliResult, FileConfig, ModeArg, NoiseArgs, SearchArgs};

#[derive(Debug, Parser)]
#[command(
    name = "clusterloop",
    version,
    about = "Simulate loop-grown photonic cluster states"
)]
struct Cli {
    /// key=value file with defaults for the noise and search flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script for tabular results.
    #[arg(long, global = true)]
    gnuplot: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AxisArg {
    Modes,
    Depol,
    CnotEps,
    PbsTh2,
    N,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Length,
    CEnd,
    Success,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum AnalysisArg {
    Pm,
    Hv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Grow a chain and report its figures of merit.
    Grow {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, value_enum)]
        basis: Option<BasisArg>,
        /// Use the dense backend and report the fidelity.
        #[arg(long)]
        full: bool,
        /// Include the amplitudes of the dominant pure component.
        #[arg(long)]
        dump: bool,
    },
    /// Entanglement length of one configuration.
    Length {
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Entanglement length against the number of modes.
    Fig2 {
        #[arg(long, default_value_t = 1.001)]
        modes_from: f64,
        #[arg(long, default_value_t = 2.5)]
        modes_to: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
        /// Space the grid logarithmically.
        #[arg(long)]
        log: bool,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Sweep one parameter and tabulate a figure of merit.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
        #[arg(long, value_enum, default_value = "length")]
        metric: MetricArg,
        #[arg(long, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, allow_hyphen_values = true)]
        to: f64,
        #[arg(long)]
        points: usize,
        #[arg(long)]
        log: bool,
        /// Chain length for the c-end and success metrics.
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Interference fringe against the photon delay.
    Fringe {
        #[arg(long, default_value_t = 2)]
        photons: usize,
        /// Loop phase in degrees.
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        phase: f64,
        #[arg(long, default_value_t = 1.0)]
        i0: f64,
        #[arg(long, default_value_t = 1.0)]
        tau_c: f64,
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 61)]
        points: usize,
    },
    /// Sample detection events from a grown state.
    Sample {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        noise: NoiseArgs,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value = "pm")]
        analysis: AnalysisArg,
    },
    /// Expected N-fold event rate.
    Rate {
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        pulse_rate: f64,
        #[arg(long)]
        n: usize,
        /// Tabulate every N up to this value.
        #[arg(long)]
        n_to: Option<usize>,
    },
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("CLUSTERLOOP_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "CLUSTERLOOP_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))
}

fn run(cli: Cli) -> CliResult<Output> {
    let file = FileConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Grow {
            n,
            noise,
            mode,
            basis,
            full,
            dump,
        } => {
            let cfg = noise.resolve(&file)?;
            let mode = file
                .layer_enum(mode, "mode")?
                .unwrap_or(ModeArg::Cluster)
                .into();
            let basis = file
                .layer_enum(basis, "basis")?
                .unwrap_or(BasisArg::Y)
                .into();
            commands::grow(n, &cfg, mode, basis, full, dump)
        }
        Command::Length { noise, search } => {
            commands::length(&noise.resolve(&file)?, &search.resolve(&file)?)
        }
        Command::Fig2 {
            modes_from,
            modes_to,
            points,
            log,
            noise,
            search,
        } => commands::fig2(
            &noise.resolve(&file)?,
            &search.resolve(&file)?,
            &AxisRange {
                from: modes_from,
                to: modes_to,
                points,
                log,
            },
        ),
        Command::Sweep {
            axis,
            metric,
            from,
            to,
            points,
            log,
            n,
            noise,
            search,
        } => {
            let axis = match axis {
                AxisArg::Modes => SweepAxis::Modes,
                AxisArg::Depol => SweepAxis::Depolarizing,
                AxisArg::CnotEps => SweepAxis::CnotEpsilon,
                AxisArg::PbsTh2 => SweepAxis::PbsTransmission,
                AxisArg::N => SweepAxis::ChainLength,
            };
            let metric = match metric {
                MetricArg::Length => SweepMetric::Length,
                MetricArg::CEnd => SweepMetric::EndToEnd,
                MetricArg::Success => SweepMetric::SuccessBound,
            };
            commands::sweep(
                &noise.resolve(&file)?,
                &search.resolve(&file)?,
                axis,
                metric,
                n,
                &AxisRange {
                    from,
                    to,
                    points,
                    log,
                },
            )
        }
        Command::Fringe {
            photons,
            phase,
            i0,
            tau_c,
            from,
            to,
            points,
        } => commands::fringe(
            photons,
            phase,
            OverlapModel::new(i0, tau_c)?,
            &AxisRange {
                from,
                to,
                points,
                log: false,
            },
        ),
        Command::Sample {
            n,
            noise,
            mode,
            shots,
            seed,
            analysis,
        } => {
            let seed = file
                .layer(seed, "seed")?
                .ok_or_else(|| CliError::Usage("sample needs --seed".into()))?;
            let req = SampleRequest {
                n,
                mode: file
                    .layer_enum(mode, "mode")?
                    .unwrap_or(ModeArg::Cluster)
                    .into(),
                shots: file.layer(shots, "shots")?.unwrap_or(100_000),
                seed,
                analysis: match analysis {
                    AnalysisArg::Pm => AnalysisBasis::PM,
                    AnalysisArg::Hv => AnalysisBasis::HV,
                },
            };
            commands::sample(&noise.resolve(&file)?, &req)
        }
        Command::Rate {
            eta,
            pulse_rate,
            n,
            n_to,
        } => commands::rate(eta, pulse_rate, n, n_to.unwrap_or(n)),
    }
}

fn write_output(output: &Output, out: Option<&Path>, gnuplot: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => std::fs::write(path, &output.text)?,
        None => print!("{}", output.text),
    }
    if let Some(script_path) = gnuplot {
        let (table, columns) = output
            .table
            .as_ref()
            .ok_or_else(|| CliError::Usage("--gnuplot needs a tabular command".into()))?;
        let data = out.unwrap_or(Path::new("data.csv"));
        std::fs::write(script_path, format::gnuplot_script(data, table, columns))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let gnuplot = cli.gnuplot.clone();
    let result = configure_threads()
        .and_then(|()| run(cli))
        .and_then(|output| {
            write_output(&output, out.as_deref(), gnuplot.as_deref())?;
            if output.cap_reached {
                Err(CliError::CapReached)
            } else {
                Ok(())
            }
        });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clusterloop: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
