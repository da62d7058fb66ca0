//! `mazo` command line.
//!
//! Every command reads one JSON [`ExperimentConfig`], validates it completely
//! before computing anything, and only then writes output. Exit status is 0 on
//! success, 2 for an invalid configuration and 1 for I/O or runtime failures.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::channel::{receive_snr, MeasurementOracle, Position, Probe};
use crate::error::{Error, Result};
use crate::harness::{
    brute_force_max, run_budget_sweep, run_noise_sweep, snr_map, summarize, write_csv,
    write_map_csv, write_summary_csv, write_text, ExperimentConfig,
};
use crate::optimizer::{optimize, Axis};
use crate::rng::{stream_rng, Stream};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "mazo",
    version,
    about = "CSI-free movable antenna position optimization"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the path list of the configured channel as CSV.
    Channel(CommonArgs),
    /// Write the noiseless receive-SNR heat map as `x,y,snr_db` CSV.
    Map(CommonArgs),
    /// Run one CSI-free optimization and write its trajectory as CSV.
    Optimize(CommonArgs),
    /// Run the budget and/or noise sweeps into an output directory.
    Compare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output file (channel, map, optimize) or directory (compare).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the master seed of the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the Monte Carlo trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

/// Parses, overrides and validates the configuration.
pub fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Config(vec![format!("{}: {e}", args.config.display())]))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    config.validate()?;
    Ok(config)
}

pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Channel(args) => cmd_channel(args),
        Command::Map(args) => cmd_map(args),
        Command::Optimize(args) => cmd_optimize(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_RUNTIME
        }
    }
}

#[derive(Serialize)]
struct PathRow {
    index: usize,
    gain_re: f64,
    gain_im: f64,
    elevation: f64,
    azimuth: f64,
}

pub fn cmd_channel(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    let channel = config.channel(0)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for (index, p) in channel.paths().iter().enumerate() {
        w.serialize(PathRow {
            index,
            gain_re: p.gain.re,
            gain_im: p.gain.im,
            elevation: p.elevation,
            azimuth: p.azimuth,
        })
        .map_err(|source| Error::Csv {
            path: args.out.clone(),
            source,
        })?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    write_text(
        &args.out,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )
}

pub fn cmd_map(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    let region = config.region()?;
    let channel = config.channel(0)?;
    let (p, n) = (config.transmit_power(), config.noise_variance());
    let map = snr_map(&channel, &region, config.resolution, p, n)?;
    write_map_csv(&map, &args.out)?;
    let (best, best_snr) = brute_force_max(&channel, &region, config.resolution, p, n)?;
    println!(
        "points={} reference_snr_db={:.3} max_snr_db={:.3} max_x={} max_y={}",
        map.len(),
        receive_snr(&channel, Position::ORIGIN, p, n)?,
        best_snr,
        best.x,
        best.y
    );
    Ok(())
}

#[derive(Serialize)]
struct TrajectoryRow {
    iteration: usize,
    x: f64,
    y: f64,
    direction: Option<&'static str>,
    measured_power_plus: f64,
    measured_power_minus: Option<f64>,
    snr_db: f64,
}

pub fn cmd_optimize(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    let region = config.region()?;
    let channel = config.channel(0)?;
    let (p, n) = (config.transmit_power(), config.noise_variance());
    let mut oracle = MeasurementOracle::new(
        channel.clone(),
        p,
        n,
        stream_rng(config.seed, 0, Stream::Noise),
    )?;
    let mut init_rng = stream_rng(config.seed, 0, Stream::InitCandidates);
    let mut dir_rng = stream_rng(config.seed, 0, Stream::Direction);
    let (position, trajectory) = optimize(
        &mut oracle,
        &region,
        &config.hyper,
        &mut init_rng,
        &mut dir_rng,
    )?;

    let mut rows = vec![TrajectoryRow {
        iteration: 0,
        x: trajectory.initial.position.x,
        y: trajectory.initial.position.y,
        direction: None,
        measured_power_plus: trajectory.initial.measured_power,
        measured_power_minus: None,
        snr_db: receive_snr(&channel, trajectory.initial.position, p, n)?,
    }];
    for rec in &trajectory.iterations {
        rows.push(TrajectoryRow {
            iteration: rec.iteration,
            x: rec.updated.x,
            y: rec.updated.y,
            direction: Some(match rec.axis {
                Axis::X => "x",
                Axis::Y => "y",
            }),
            measured_power_plus: rec.power_plus,
            measured_power_minus: Some(rec.power_minus),
            snr_db: receive_snr(&channel, rec.updated, p, n)?,
        });
    }
    write_trajectory(&rows, &args.out)?;

    println!(
        "final_x={} final_y={} final_snr_db={} reference_snr_db={} measurements={}",
        position.x,
        position.y,
        receive_snr(&channel, position, p, n)?,
        receive_snr(&channel, Position::ORIGIN, p, n)?,
        oracle.measurement_count()
    );
    Ok(())
}

fn write_trajectory(rows: &[TrajectoryRow], path: &Path) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().expect("in-memory writer");
    write_text(
        path,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )
}

pub const BUDGET_CSV: &str = "budget_sweep.csv";
pub const NOISE_CSV: &str = "noise_sweep.csv";
pub const SUMMARY_CSV: &str = "summary.csv";

pub fn cmd_compare(args: &CommonArgs) -> Result<()> {
    let config = load_config(args)?;
    if config.budgets.is_empty() && config.noise_variances_dbm.is_empty() {
        return Err(Error::Config(vec![
            "compare needs a non-empty budgets or noise_variances_dbm list".to_string(),
        ]));
    }
    let budget = (!config.budgets.is_empty())
        .then(|| run_budget_sweep(&config))
        .transpose()?;
    let noise = (!config.noise_variances_dbm.is_empty())
        .then(|| run_noise_sweep(&config))
        .transpose()?;

    fs::create_dir_all(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let mut summary = Vec::new();
    if let Some(table) = &budget {
        write_csv(table, &args.out.join(BUDGET_CSV))?;
        summary.extend(summarize("budget", table));
        for d in &table.diagnostics {
            eprintln!("note: {d}");
        }
    }
    if let Some(table) = &noise {
        write_csv(table, &args.out.join(NOISE_CSV))?;
        summary.extend(summarize("noise", table));
        for d in &table.diagnostics {
            eprintln!("note: {d}");
        }
    }
    write_summary_csv(&summary, &args.out.join(SUMMARY_CSV))?;
    for row in &summary {
        println!(
            "{:<6} {:<13} {:>8} mean_snr_db={:.3} std={:.3} gap_db={:.3} n={}",
            row.sweep,
            row.method.to_string(),
            row.sweep_param,
            row.mean_snr_db,
            row.std_snr_db,
            row.mean_gap_db,
            row.trials
        );
    }
    Ok(())
}
