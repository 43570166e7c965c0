//! Tuning probe: criterion quantities on a reduced grid.
//!
//! Args: subjects seeds sigma offset a_t [sequences frames]

use std::path::PathBuf;
use std::time::Instant;

use clifer_cli::{
    DataSource, ExperimentConfig, ExperimentKind, ParamsFile, Variant,
};
use clifer_core::stats::sign_test_greater;
use clifer_core::{GwrParams, SynthConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let subjects: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(8);
    let n_seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(4);
    let sigma: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(0.6);
    let offset: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.8);
    let a_t: f64 = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(0.95);
    let sequences: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(5);
    let frames: usize = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(10);
    let test_fraction: f64 = args.get(8).and_then(|s| s.parse().ok()).unwrap_or(0.2);

    let synth = SynthConfig {
        subjects,
        sequences_per_class: sequences,
        frames_per_sequence: frames,
        within_class_sigma: sigma,
        subject_offset_sigma: offset,
        ..SynthConfig::default()
    };
    let seeds: Vec<u64> = (1..=n_seeds).collect();
    let mut params = ParamsFile::default();
    params.episodic = GwrParams {
        insertion_threshold: a_t,
        ..GwrParams::episodic()
    };
    params.test_fraction = test_fraction;
    let config = ExperimentConfig::new(
        ExperimentKind::Exp2,
        vec![
            Variant::Gdm,
            Variant::GdmReplay,
            Variant::Clifer,
            Variant::Baseline,
        ],
        DataSource::Synthetic(synth),
        seeds.clone(),
        params,
        PathBuf::from("unused"),
    );
    let started = Instant::now();
    let output = clifer_cli::run_experiment2(&config).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let per_seed = |variant: Variant, episode: usize| -> Vec<f64> {
        seeds
            .iter()
            .map(|&seed| {
                let v: Vec<f64> = output
                    .records
                    .iter()
                    .filter(|r| r.variant == variant && r.seed == seed && r.episode == episode)
                    .filter_map(|r| r.semantic_f1)
                    .collect();
                v.iter().sum::<f64>() / v.len() as f64
            })
            .collect()
    };
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let clifer = per_seed(Variant::Clifer, 6);
    let replay = per_seed(Variant::GdmReplay, 6);
    let gdm = per_seed(Variant::Gdm, 6);
    let baseline = per_seed(Variant::Baseline, 6);
    println!(
        "sigma={sigma} offset={offset} a_T={a_t} seq={sequences} frames={frames}: {elapsed:.0}s"
    );
    println!(
        "  final semantic means: clifer {:.4} | replay {:.4} | gdm {:.4} | baseline {:.4}",
        mean(&clifer),
        mean(&replay),
        mean(&gdm),
        mean(&baseline)
    );
    for (name, hi, lo) in [
        ("clifer>replay", &clifer, &replay),
        ("replay>gdm", &replay, &gdm),
        ("gdm>baseline", &gdm, &baseline),
    ] {
        let t = sign_test_greater(hi, lo).unwrap();
        println!(
            "  {name}: wins {} losses {} ties {} p {:.4}",
            t.wins, t.losses, t.ties, t.p_value
        );
    }
    // Episode-1 clifer semantic (criterion 3 proxy; translation generator).
    let c3 = per_seed(Variant::Clifer, 1);
    println!("  clifer ep1 semantic mean: {:.4}", mean(&c3));
    let sizes: Vec<usize> = output
        .records
        .iter()
        .filter(|r| r.variant == Variant::Clifer && r.episode == 6)
        .map(|r| r.episodic_size)
        .collect();
    println!(
        "  clifer final episodic sizes: min {} max {}",
        sizes.iter().min().unwrap(),
        sizes.iter().max().unwrap()
    );
}
