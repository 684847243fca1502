//! Synthetic trials and untrained artifacts for tests.
#![allow(dead_code)]

use fallstream::features::{extract_features, fit_scaler, FeatureSchema};
use fallstream::ingest::{Sample, Vocabulary};
use fallstream::model::{init_model, ModelArtifact, TrainConfig, TrainingMetadata, DEFAULT_DIMS};
use fallstream::windowing::{assemble_windows, WindowConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const G: f64 = 9.80665;

/// A 20 Hz trial of `n` samples for one device. Fall trials carry an
/// impact followed by lying still; ADL trials are periodic walking.
pub fn synthetic_trial(device: &str, n: usize, fall: bool, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab = Vocabulary::mobiact();
    let code = if fall { "FOL" } else { "WAL" };
    let label = vocab.code(code).expect("known code");
    let freq = rng.random_range(1.2..2.2);
    let impact = n / 2;
    (0..n)
        .map(|i| {
            let t = i as f64 / 20.0;
            let (ax, ay, az) = if fall && i >= impact {
                let k = i - impact;
                let spike = if k < 4 { 25.0 / (k as f64 + 1.0) } else { 0.0 };
                (G * 0.95 + spike, 0.4 + spike * 0.6, 1.0)
            } else if fall {
                (0.5, G, 0.3 + 0.2 * (t * 3.0).sin())
            } else {
                let b = 2.5 * (std::f64::consts::TAU * freq * t).sin();
                (0.3 * b, G + b, 0.6 * b)
            };
            Sample::new(
                device,
                (i as i64) * 50,
                ax + rng.random_range(-0.3..0.3),
                ay + rng.random_range(-0.3..0.3),
                az + rng.random_range(-0.3..0.3),
            )
            .with_label(label.clone())
        })
        .collect()
}

/// An untrained artifact whose scaler is fitted on a few synthetic trials.
pub fn untrained_artifact(seed: u64) -> ModelArtifact {
    let schema = FeatureSchema::v1();
    let mut samples = synthetic_trial("fit-a", 800, true, seed);
    samples.extend(synthetic_trial("fit-b", 800, false, seed + 1));
    let (windows, _) = assemble_windows(samples, WindowConfig::default()).unwrap();
    let rows: Vec<_> = windows
        .iter()
        .map(|w| extract_features(w, &schema).unwrap())
        .collect();
    let scaler = fit_scaler(&rows).unwrap();
    let model = init_model(&DEFAULT_DIMS, seed).unwrap();
    let training = TrainingMetadata::from_config(&TrainConfig::default(), "synthetic".into());
    ModelArtifact::new(model, scaler, training).unwrap()
}
