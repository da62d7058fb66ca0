//! Monte Carlo experiments comparing the CSI-free search against the
//! CSI-based baseline, plus SNR maps, a brute-force grid optimum and CSV I/O.
//!
//! Quality is always the noiseless receive SNR of the true channel at the
//! returned position; measurement noise only affects the searches. Trials run
//! in parallel but every trial owns its channel, probes and random streams,
//! and results are gathered in trial order, so output does not depend on
//! scheduling.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{csi_baseline, BaselineConfig};
use crate::channel::{
    argmax_first, channel_response, db_to_linear, linear_to_db, receive_snr, sample_channel,
    sample_channel_with, ChannelRealization, MeasurementOracle, Position, Region,
};
use crate::error::{invalid, Error, Result};
use crate::optimizer::{optimize, HyperParams};
use crate::rng::{stream_rng, sub_index, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed every random stream is derived from.
    pub seed: u64,
    pub num_paths: usize,
    /// Side `A` of the square region, in wavelengths.
    pub region_side: f64,
    pub transmit_power_dbm: f64,
    /// Transmit SNR `P/σ²` in dB; fixes the nominal noise variance.
    pub transmit_snr_db: f64,
    pub hyper: HyperParams,
    pub baseline: BaselineConfig,
    /// Total measurement budgets for the budget sweep.
    pub budgets: Vec<usize>,
    /// Noise variances `σ²` (dBm) for the noise sweep.
    pub noise_variances_dbm: Vec<f64>,
    /// Total budget used at every point of the noise sweep.
    pub noise_budget: usize,
    pub trials: usize,
    /// Spacing of the SNR map and brute-force grid, in wavelengths.
    pub resolution: f64,
    /// Draw a fresh channel per trial; otherwise every trial sees one channel.
    pub resample_channel: bool,
    /// Seed of the shared channel when `resample_channel` is off (defaults to `seed`).
    pub channel_seed: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            num_paths: 30,
            region_side: 4.0,
            transmit_power_dbm: 30.0,
            transmit_snr_db: 30.0,
            hyper: HyperParams::default(),
            baseline: BaselineConfig::default(),
            budgets: vec![29, 69, 100, 149, 209],
            noise_variances_dbm: vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            noise_budget: 209,
            trials: 100,
            resolution: 0.05,
            resample_channel: true,
            channel_seed: None,
        }
    }
}

impl ExperimentConfig {
    /// All problems found, empty when the configuration is usable.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.num_paths == 0 {
            problems.push("num_paths must be at least 1".to_string());
        }
        if !(self.region_side > 0.0 && self.region_side.is_finite()) {
            problems.push(format!(
                "region_side must be positive, got {}",
                self.region_side
            ));
        }
        if !self.transmit_power_dbm.is_finite() {
            problems.push("transmit_power_dbm must be finite".to_string());
        }
        if !self.transmit_snr_db.is_finite() {
            problems.push("transmit_snr_db must be finite".to_string());
        }
        if let Err(e) = self.hyper.validate() {
            problems.push(format!("hyper: {e}"));
        }
        if let Err(e) = self.baseline.validate() {
            problems.push(format!("baseline: {e}"));
        }
        if self.budgets.contains(&0) {
            problems.push("budgets must all be at least 1".to_string());
        }
        if self.noise_variances_dbm.iter().any(|v| !v.is_finite()) {
            problems.push("noise_variances_dbm must all be finite".to_string());
        }
        if self.noise_budget == 0 {
            problems.push("noise_budget must be at least 1".to_string());
        }
        if self.trials == 0 {
            problems.push("trials must be at least 1".to_string());
        }
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            problems.push(format!(
                "resolution must be positive, got {}",
                self.resolution
            ));
        }
        problems
    }

    pub fn validate(&self) -> Result<()> {
        let problems = self.diagnostics();
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    pub fn region(&self) -> Result<Region> {
        Region::new(self.region_side)
    }

    /// Transmit power in mW.
    pub fn transmit_power(&self) -> f64 {
        db_to_linear(self.transmit_power_dbm)
    }

    /// Nominal noise variance in mW.
    pub fn noise_variance(&self) -> f64 {
        db_to_linear(self.transmit_power_dbm - self.transmit_snr_db)
    }

    /// Channel seen by `trial`.
    pub fn channel(&self, trial: usize) -> Result<ChannelRealization> {
        if self.resample_channel {
            let mut rng = stream_rng(self.seed, trial as u64, Stream::Channel);
            sample_channel_with(&mut rng, self.num_paths, 1.0)
        } else {
            sample_channel(self.channel_seed.unwrap_or(self.seed), self.num_paths, 1.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    CsiBaseline,
}

impl Method {
    fn stream_tag(self) -> usize {
        match self {
            Method::Proposed => 0,
            Method::CsiBaseline => 1,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Proposed => "proposed",
            Method::CsiBaseline => "csi_baseline",
        })
    }
}

/// One row of a sweep. `sweep_param` is the budget for budget sweeps and
/// `σ²` in dBm for noise sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub method: Method,
    pub sweep_param: f64,
    pub trial: usize,
    pub achieved_snr_db: f64,
    /// Brute-force grid optimum minus achieved SNR.
    pub gap_db: f64,
    pub measurements: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub records: Vec<SweepRecord>,
    /// Notes about skipped rows.
    pub diagnostics: Vec<String>,
}

impl SweepTable {
    pub fn select(&self, method: Method, sweep_param: f64) -> impl Iterator<Item = &SweepRecord> {
        self.records
            .iter()
            .filter(move |r| r.method == method && r.sweep_param == sweep_param)
    }

    pub fn mean_snr(&self, method: Method, sweep_param: f64) -> Option<f64> {
        mean(self.select(method, sweep_param).map(|r| r.achieved_snr_db))
    }

    pub fn mean_gap(&self, method: Method, sweep_param: f64) -> Option<f64> {
        mean(self.select(method, sweep_param).map(|r| r.gap_db))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub x: f64,
    pub y: f64,
    pub snr_db: f64,
}

/// Noiseless receive SNR over the region grid (row-major, edges included).
pub fn snr_map(
    channel: &ChannelRealization,
    region: &Region,
    resolution: f64,
    transmit_power: f64,
    noise_variance: f64,
) -> Result<Vec<MapPoint>> {
    if noise_variance.is_nan() || noise_variance <= 0.0 {
        return Err(invalid(format!(
            "SNR is undefined for noise variance {noise_variance}"
        )));
    }
    region
        .grid(resolution)?
        .into_par_iter()
        .map(|p| {
            Ok(MapPoint {
                x: p.x,
                y: p.y,
                snr_db: receive_snr(channel, p, transmit_power, noise_variance)?,
            })
        })
        .collect()
}

/// Grid point of maximal noiseless SNR and that SNR; row-major first occurrence wins.
pub fn brute_force_max(
    channel: &ChannelRealization,
    region: &Region,
    resolution: f64,
    transmit_power: f64,
    noise_variance: f64,
) -> Result<(Position, f64)> {
    if !(transmit_power > 0.0 && noise_variance > 0.0) {
        return Err(invalid(format!(
            "SNR needs positive powers, got P={transmit_power}, noise={noise_variance}"
        )));
    }
    let (p, gain) = max_channel_gain(channel, region, resolution)?;
    Ok((p, linear_to_db(gain * transmit_power / noise_variance)))
}

/// Grid argmax of `|h|²` and the maximal value.
fn max_channel_gain(
    channel: &ChannelRealization,
    region: &Region,
    resolution: f64,
) -> Result<(Position, f64)> {
    let grid = region.grid(resolution)?;
    let gains: Vec<f64> = grid
        .par_iter()
        .map(|&p| channel_response(channel, p).norm_sqr())
        .collect();
    let best = argmax_first(&gains);
    Ok((grid[best], gains[best]))
}

struct TrialContext<'a> {
    config: &'a ExperimentConfig,
    region: Region,
    channel: ChannelRealization,
    trial: usize,
    /// Brute-force optimum of `|h|²` on the evaluation grid.
    best_gain: f64,
}

impl TrialContext<'_> {
    fn new(config: &ExperimentConfig, trial: usize) -> Result<TrialContext<'_>> {
        let region = config.region()?;
        let channel = config.channel(trial)?;
        let (_, best_gain) = max_channel_gain(&channel, &region, config.resolution)?;
        Ok(TrialContext {
            config,
            region,
            channel,
            trial,
            best_gain,
        })
    }

    fn oracle(&self, method: Method, noise_variance: f64) -> Result<MeasurementOracle> {
        MeasurementOracle::new(
            self.channel.clone(),
            self.config.transmit_power(),
            noise_variance,
            stream_rng(
                self.config.seed,
                sub_index(self.trial, 0, method.stream_tag()),
                Stream::Noise,
            ),
        )
    }

    fn record(
        &self,
        method: Method,
        sweep_param: f64,
        position: Position,
        noise_variance: f64,
        measurements: u64,
    ) -> Result<SweepRecord> {
        let p = self.config.transmit_power();
        let achieved = receive_snr(&self.channel, position, p, noise_variance)?;
        let best = linear_to_db(self.best_gain * p / noise_variance);
        Ok(SweepRecord {
            method,
            sweep_param,
            trial: self.trial,
            achieved_snr_db: achieved,
            gap_db: best - achieved,
            measurements,
        })
    }

    /// `None` when the budget does not even cover initialization.
    fn run_proposed(
        &self,
        budget: usize,
        noise_variance: f64,
        sweep_param: f64,
    ) -> Result<Option<SweepRecord>> {
        let n = self.config.hyper.num_init_candidates;
        if budget <= n {
            return Ok(None);
        }
        let hyper = HyperParams {
            max_iterations: (budget - n) / 2,
            ..self.config.hyper
        };
        let mut oracle = self.oracle(Method::Proposed, noise_variance)?;
        let index = sub_index(self.trial, 0, Method::Proposed.stream_tag());
        let mut init_rng = stream_rng(self.config.seed, index, Stream::InitCandidates);
        let mut dir_rng = stream_rng(self.config.seed, index, Stream::Direction);
        let (position, _) = optimize(
            &mut oracle,
            &self.region,
            &hyper,
            &mut init_rng,
            &mut dir_rng,
        )?;
        self.record(
            Method::Proposed,
            sweep_param,
            position,
            noise_variance,
            crate::channel::Probe::measurement_count(&oracle),
        )
        .map(Some)
    }

    fn run_baseline(
        &self,
        budget: usize,
        noise_variance: f64,
        sweep_param: f64,
    ) -> Result<SweepRecord> {
        let mut oracle = self.oracle(Method::CsiBaseline, noise_variance)?;
        let index = sub_index(self.trial, 0, Method::CsiBaseline.stream_tag());
        let mut rng = stream_rng(self.config.seed, index, Stream::Training);
        let outcome = csi_baseline(
            &mut oracle,
            &self.region,
            budget,
            &self.config.baseline,
            self.config.num_paths,
            self.config.transmit_power(),
            &mut rng,
        )?;
        self.record(
            Method::CsiBaseline,
            sweep_param,
            outcome.position,
            noise_variance,
            crate::channel::Probe::measurement_count(&oracle),
        )
    }
}

/// Sweep points as `(budget, σ² in mW, reported sweep parameter)`.
type SweepPoint = (usize, f64, f64);

fn run_sweep(config: &ExperimentConfig, points: &[SweepPoint]) -> Result<SweepTable> {
    config.validate()?;
    let per_trial: Vec<Vec<(usize, Option<SweepRecord>, SweepRecord)>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let ctx = TrialContext::new(config, trial)?;
            points
                .iter()
                .enumerate()
                .map(|(i, &(budget, noise, param))| {
                    Ok((
                        i,
                        ctx.run_proposed(budget, noise, param)?,
                        ctx.run_baseline(budget, noise, param)?,
                    ))
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut table = SweepTable::default();
    for (i, &(budget, _, param)) in points.iter().enumerate() {
        if budget <= config.hyper.num_init_candidates {
            table.diagnostics.push(format!(
                "proposed skipped at {param}: budget {budget} does not exceed the {} initialization measurements",
                config.hyper.num_init_candidates
            ));
        }
        for method in [Method::Proposed, Method::CsiBaseline] {
            for rows in &per_trial {
                let (_, proposed, baseline) = &rows[i];
                match method {
                    Method::Proposed => table.records.extend(proposed.iter().copied()),
                    Method::CsiBaseline => table.records.push(*baseline),
                }
            }
        }
    }
    Ok(table)
}

/// Achieved SNR of both methods for every budget in `config.budgets`, at the
/// nominal noise level.
pub fn run_budget_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let noise = config.noise_variance();
    let points: Vec<SweepPoint> = config
        .budgets
        .iter()
        .map(|&b| (b, noise, b as f64))
        .collect();
    run_sweep(config, &points)
}

/// Achieved SNR of both methods at a fixed budget for every noise variance
/// in `config.noise_variances_dbm`.
pub fn run_noise_sweep(config: &ExperimentConfig) -> Result<SweepTable> {
    let points: Vec<SweepPoint> = config
        .noise_variances_dbm
        .iter()
        .map(|&dbm| (config.noise_budget, db_to_linear(dbm), dbm))
        .collect();
    run_sweep(config, &points)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep: String,
    pub method: Method,
    pub sweep_param: f64,
    pub mean_snr_db: f64,
    pub std_snr_db: f64,
    pub mean_gap_db: f64,
    pub trials: usize,
}

/// Per `(method, sweep_param)` mean, sample standard deviation and count,
/// in order of first appearance.
pub fn summarize(sweep: &str, table: &SweepTable) -> Vec<SummaryRow> {
    let mut keys: Vec<(Method, f64)> = Vec::new();
    for r in &table.records {
        if !keys
            .iter()
            .any(|&(m, p)| m == r.method && p == r.sweep_param)
        {
            keys.push((r.method, r.sweep_param));
        }
    }
    keys.into_iter()
        .map(|(method, param)| {
            let snrs: Vec<f64> = table
                .select(method, param)
                .map(|r| r.achieved_snr_db)
                .collect();
            let n = snrs.len();
            let mean_snr = snrs.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                snrs.iter().map(|s| (s - mean_snr).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            SummaryRow {
                sweep: sweep.to_string(),
                method,
                sweep_param: param,
                mean_snr_db: mean_snr,
                std_snr_db: var.sqrt(),
                mean_gap_db: table.mean_gap(method, param).unwrap_or(f64::NAN),
                trials: n,
            }
        })
        .collect()
}

pub const SWEEP_CSV_HEADER: [&str; 6] = [
    "method",
    "sweep_param",
    "trial",
    "achieved_snr_db",
    "gap_db",
    "measurements",
];

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file)))
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `method,sweep_param,trial,achieved_snr_db,gap_db,measurements`
/// followed by one line per record.
pub fn write_csv(table: &SweepTable, path: &Path) -> Result<()> {
    write_rows(path, &SWEEP_CSV_HEADER, &table.records)
}

pub fn read_csv(path: &Path) -> Result<SweepTable> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let records = reader
        .deserialize()
        .collect::<std::result::Result<Vec<SweepRecord>, _>>()
        .map_err(csv_err)?;
    Ok(SweepTable {
        records,
        diagnostics: Vec::new(),
    })
}

pub fn write_summary_csv(rows: &[SummaryRow], path: &Path) -> Result<()> {
    write_rows(
        path,
        &[
            "sweep",
            "method",
            "sweep_param",
            "mean_snr_db",
            "std_snr_db",
            "mean_gap_db",
            "trials",
        ],
        rows,
    )
}

/// Heat-map triplets `x,y,snr_db`.
pub fn write_map_csv(map: &[MapPoint], path: &Path) -> Result<()> {
    write_rows(path, &["x", "y", "snr_db"], map)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = File::create(path).map_err(io_err)?;
    f.write_all(text.as_bytes()).map_err(io_err)
}
