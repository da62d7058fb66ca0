use mazo::baseline::{
    collect_training, csi_baseline, grid_search_optimum, omp_recover, omp_with_trace,
    reconstruct_response, AngularDictionary, BaselineConfig, EstimatedChannel,
};
use mazo::channel::{
    channel_response, receive_snr, sample_channel, ChannelRealization, MeasurementOracle,
    PathComponent, Position, Probe, Region,
};
use mazo::harness::brute_force_max;
use mazo::rng::{stream_rng, Stream};
use num_complex::Complex64;

const P: f64 = 1000.0;

fn region() -> Region {
    Region::new(4.0).unwrap()
}

/// Three paths sitting exactly on atoms of the 32×32 dictionary.
fn on_grid_channel(dict: &AngularDictionary) -> (ChannelRealization, Vec<(usize, Complex64)>) {
    let truth = vec![
        (dict.index(10, 5), Complex64::new(0.8, 0.1)),
        (dict.index(16, 25), Complex64::new(-0.3, 0.5)),
        (dict.index(22, 12), Complex64::new(0.2, -0.6)),
    ];
    let paths = truth
        .iter()
        .map(|&(i, g)| {
            let (el, az) = dict.angles(i);
            PathComponent::new(g, el, az).unwrap()
        })
        .collect();
    (ChannelRealization::new(paths, 1.0).unwrap(), truth)
}

fn noiseless(channel: ChannelRealization, seed: u64) -> MeasurementOracle {
    MeasurementOracle::new(channel, P, 0.0, stream_rng(seed, 0, Stream::Noise)).unwrap()
}

fn recover(channel: &ChannelRealization, dict: &AngularDictionary, seed: u64) -> EstimatedChannel {
    let mut oracle = noiseless(channel.clone(), seed);
    let samples = collect_training(
        &mut oracle,
        40,
        &region(),
        &mut stream_rng(seed, 0, Stream::Training),
    )
    .unwrap();
    omp_recover(&samples, dict, 3, P).unwrap()
}

fn sorted(mut atoms: Vec<(usize, Complex64)>) -> Vec<(usize, Complex64)> {
    atoms.sort_by_key(|a| a.0);
    atoms
}

#[test]
fn on_grid_channel_is_recovered_exactly() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let (channel, truth) = on_grid_channel(&dict);
    let est = recover(&channel, &dict, 0);
    let got = sorted(est.atoms.clone());
    let want = sorted(truth);
    assert_eq!(
        got.iter().map(|a| a.0).collect::<Vec<_>>(),
        want.iter().map(|a| a.0).collect::<Vec<_>>()
    );
    for ((_, g), (_, w)) in got.iter().zip(&want) {
        assert!((g - w).norm() / w.norm() < 1e-6, "{g} vs {w}");
    }

    let mut rng = stream_rng(0, 1, Stream::InitCandidates);
    for _ in 0..100 {
        let p = region().sample(&mut rng);
        let h = channel_response(&channel, p);
        assert!((reconstruct_response(&est, &dict, p) - h).norm() / h.norm() < 1e-6);
    }
}

#[test]
fn on_grid_recovery_rate_over_sampling_draws() {
    // 377 of the first 500 draws recover the support
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let (channel, truth) = on_grid_channel(&dict);
    let want = sorted(truth);
    let mut hits = 0;
    for seed in 0..100 {
        let got = sorted(recover(&channel, &dict, seed).atoms);
        if got.iter().map(|a| a.0).eq(want.iter().map(|a| a.0)) {
            hits += 1;
            for ((_, g), (_, w)) in got.iter().zip(&want) {
                assert!((g - w).norm() / w.norm() < 1e-6, "seed {seed}");
            }
        }
    }
    assert!(hits >= 65, "{hits}/100");
}

#[test]
fn residual_never_increases() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    for seed in 0..5 {
        let ch = sample_channel(seed, 30, 1.0).unwrap();
        let mut oracle =
            MeasurementOracle::new(ch, P, 1.0, stream_rng(seed, 0, Stream::Noise)).unwrap();
        let samples = collect_training(
            &mut oracle,
            120,
            &region(),
            &mut stream_rng(seed, 0, Stream::Training),
        )
        .unwrap();
        let out = omp_with_trace(&samples, &dict, 60, P).unwrap();
        assert!(out.estimate.len() <= 60);
        assert_eq!(out.residual_norms.len(), out.estimate.len() + 1);
        for w in out.residual_norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn duplicated_atoms_reduce_the_support() {
    // all atoms at elevation ±π/2 coincide
    let dict = AngularDictionary::new(8, 8, 1.0).unwrap();
    let (el, az) = dict.angles(dict.index(7, 3));
    let ch = ChannelRealization::new(
        vec![PathComponent::new(Complex64::new(0.5, 0.5), el, az).unwrap()],
        1.0,
    )
    .unwrap();
    let mut oracle = noiseless(ch, 1);
    let samples = collect_training(
        &mut oracle,
        20,
        &region(),
        &mut stream_rng(1, 0, Stream::Training),
    )
    .unwrap();
    let est = omp_recover(&samples, &dict, 5, P).unwrap();
    assert_eq!(est.len(), 1);
}

#[test]
fn true_support_reconstructs_the_channel() {
    let ch = sample_channel(21, 30, 1.0).unwrap();
    // per-path responses sum to the full response
    let mut rng = stream_rng(21, 0, Stream::InitCandidates);
    for _ in 0..50 {
        let p = region().sample(&mut rng);
        let h: Complex64 = ch
            .paths()
            .iter()
            .map(|path| {
                let single = ChannelRealization::new(vec![*path], 1.0).unwrap();
                channel_response(&single, p)
            })
            .sum();
        assert!((h - channel_response(&ch, p)).norm() < 1e-12);
    }
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let (on_grid, truth) = on_grid_channel(&dict);
    let est = EstimatedChannel { atoms: truth };
    for _ in 0..50 {
        let p = region().sample(&mut rng);
        let h = channel_response(&on_grid, p);
        assert!((reconstruct_response(&est, &dict, p) - h).norm() <= 1e-12 * h.norm().max(1.0));
    }
}

#[test]
fn atoms_have_unit_modulus_and_self_correlation_m() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let mut rng = stream_rng(4, 0, Stream::Training);
    let positions: Vec<Position> = (0..40).map(|_| region().sample(&mut rng)).collect();
    for g in (0..dict.len()).step_by(37) {
        let self_corr: f64 = positions.iter().map(|&p| dict.phase(g, p).norm_sqr()).sum();
        assert!((self_corr - 40.0).abs() < 1e-12);
    }
}

#[test]
fn single_atom_reconstruction_is_flat() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let est = EstimatedChannel {
        atoms: vec![(dict.index(9, 20), Complex64::new(0.3, -0.7))],
    };
    let m = Complex64::new(0.3, -0.7).norm();
    let mut rng = stream_rng(8, 0, Stream::Training);
    for _ in 0..100 {
        let p = region().sample(&mut rng);
        assert!((reconstruct_response(&est, &dict, p).norm() - m).abs() < 1e-12);
    }
}

#[test]
fn training_accounting_and_noiseless_values() {
    let ch = sample_channel(9, 30, 1.0).unwrap();
    let mut oracle = noiseless(ch.clone(), 9);
    assert!(collect_training(
        &mut oracle,
        0,
        &region(),
        &mut stream_rng(9, 0, Stream::Training)
    )
    .is_err());
    let samples = collect_training(
        &mut oracle,
        5,
        &region(),
        &mut stream_rng(9, 0, Stream::Training),
    )
    .unwrap();
    assert_eq!(oracle.measurement_count(), 5);
    for (p, y) in samples {
        assert!(region().contains(p));
        assert_eq!(y, P.sqrt() * channel_response(&ch, p));
    }
}

#[test]
fn grid_search_point_count_and_oversized_resolution() {
    let dict = AngularDictionary::new(4, 4, 1.0).unwrap();
    let est = EstimatedChannel {
        atoms: vec![(dict.index(1, 2), Complex64::new(1.0, 0.0))],
    };
    let region = region();
    for res in [0.05, 0.3, 1.0, 1.5] {
        let n = (region.side() / res + 1e-9).floor() as usize + 1;
        assert_eq!(region.grid(res).unwrap().len(), n * n);
    }
    let p = grid_search_optimum(&est, &dict, &region, 7.0).unwrap();
    assert_eq!(p, Position::new(-2.0, -2.0));
    assert!(grid_search_optimum(&est, &dict, &region, 0.0).is_err());
}

#[test]
fn exact_recovery_finds_the_grid_optimum() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let (channel, _) = on_grid_channel(&dict);
    let region = region();
    let res = 0.05;
    let (_, best) = brute_force_max(&channel, &region, res, P, 1.0).unwrap();
    let mut oracle = noiseless(channel.clone(), 3);
    let samples = collect_training(
        &mut oracle,
        40,
        &region,
        &mut stream_rng(3, 0, Stream::Training),
    )
    .unwrap();
    let est = omp_recover(&samples, &dict, 3, P).unwrap();
    let p = grid_search_optimum(&est, &dict, &region, res).unwrap();
    let achieved = receive_snr(&channel, p, P, 1.0).unwrap();
    assert!(best - achieved < 0.2, "{achieved} vs {best}");
}

#[test]
fn csi_baseline_spends_exactly_its_budget() {
    let dict = AngularDictionary::new(32, 32, 1.0).unwrap();
    let (channel, _) = on_grid_channel(&dict);
    let region = region();
    let config = BaselineConfig::default();
    for budget in [1usize, 7, 40, 80] {
        let mut oracle = noiseless(channel.clone(), 2);
        let out = csi_baseline(
            &mut oracle,
            &region,
            budget,
            &config,
            3,
            P,
            &mut stream_rng(2, 0, Stream::Training),
        )
        .unwrap();
        assert_eq!(oracle.measurement_count(), budget as u64);
        assert_eq!(out.measurements, budget as u64);
        assert!(region.contains(out.position));
    }
    let mut oracle = noiseless(channel.clone(), 2);
    assert!(csi_baseline(
        &mut oracle,
        &region,
        0,
        &config,
        3,
        P,
        &mut stream_rng(2, 0, Stream::Training)
    )
    .is_err());

    let mut oracle = noiseless(channel.clone(), 2);
    let out = csi_baseline(
        &mut oracle,
        &region,
        80,
        &config,
        3,
        P,
        &mut stream_rng(2, 0, Stream::Training),
    )
    .unwrap();
    let (_, best) = brute_force_max(&channel, &region, config.resolution, P, 1.0).unwrap();
    let achieved = receive_snr(&channel, out.position, P, 1.0).unwrap();
    assert!(best - achieved < 0.2, "{achieved} vs {best}");
}
