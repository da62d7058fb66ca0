//! Scans step size and smoothing radius of the CSI-free search.
//!
//! Prints the mean gap to the brute-force grid optimum and the mean achieved
//! SNR for each `(step_size, mu)` pair at the given budgets.
//!
//! cargo run --release --example hyper_scan -- <seed> <trials> <noise_dbm> [init_candidates]

use mazo::channel::{receive_snr, MeasurementOracle};
use mazo::harness::{brute_force_max, ExperimentConfig};
use mazo::optimizer::{optimize, HyperParams};
use mazo::rng::{stream_rng, Stream};
use rayon::prelude::*;

fn main() -> mazo::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let seed: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let trials: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(100);
    let noise_dbm: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let config = ExperimentConfig {
        seed,
        trials,
        ..ExperimentConfig::default()
    };
    let region = config.region()?;
    let p = config.transmit_power();
    let noise = 10f64.powf(noise_dbm / 10.0);
    let init: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(9);
    let budgets = [29usize, 69, 100, 209];

    let optima: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let ch = config.channel(t)?;
            Ok(brute_force_max(&ch, &region, config.resolution, p, noise)?.1)
        })
        .collect::<mazo::Result<_>>()?;

    for &step in &[0.03, 0.05] {
        for &mu in &[0.1] {
            let mut line = format!("alpha={step:<5} mu={mu:<5}");
            for &b in &budgets {
                let hyper = HyperParams {
                    step_size: step,
                    mu,
                    num_init_candidates: init,
                    max_iterations: b.saturating_sub(init) / 2,
                    ..HyperParams::default()
                };
                let res: Vec<(f64, f64)> = (0..trials)
                    .into_par_iter()
                    .map(|t| {
                        let ch = config.channel(t)?;
                        let mut oracle = MeasurementOracle::new(
                            ch.clone(),
                            p,
                            noise,
                            stream_rng(seed, t as u64, Stream::Noise),
                        )?;
                        let mut a = stream_rng(seed, t as u64, Stream::InitCandidates);
                        let mut d = stream_rng(seed, t as u64, Stream::Direction);
                        let (pos, _) = optimize(&mut oracle, &region, &hyper, &mut a, &mut d)?;
                        let snr = receive_snr(&ch, pos, p, noise)?;
                        Ok((snr, optima[t] - snr))
                    })
                    .collect::<mazo::Result<_>>()?;
                let n = res.len() as f64;
                let snr = res.iter().map(|r| r.0).sum::<f64>() / n;
                let gap = res.iter().map(|r| r.1).sum::<f64>() / n;
                line += &format!("  b={b}: snr={snr:.2} gap={gap:.2}");
            }
            println!("{line}");
        }
    }
    Ok(())
}
