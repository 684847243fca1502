#[path = "support/fixtures.rs"]
mod fixtures;

use fallstream::model::{forward, load_artifact, save_artifact, ModelArtifact};
use fallstream::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn round_trip_is_byte_stable_and_forward_identical() {
    let artifact = fixtures::untrained_artifact(5);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_artifact(&artifact, &path).unwrap();
    let loaded = load_artifact(&path).unwrap();
    assert_eq!(loaded.to_bytes().unwrap(), std::fs::read(&path).unwrap());
    assert_eq!(loaded.digest().unwrap(), artifact.digest().unwrap());

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let x: Vec<f64> = (0..58).map(|_| rng.random_range(-1.0..2.0)).collect();
        let a = forward(&artifact.model, &x).unwrap();
        let b = forward(&loaded.model, &x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn corrupt_documents_rejected() {
    let bytes = fixtures::untrained_artifact(6).to_bytes().unwrap();
    let text = String::from_utf8(bytes).unwrap();
    for broken in [
        text.replace("\"fallstream-model\"", "\"other\""),
        text.replace("\"mobiact58-v1\"", "\"mobiact58-v9\""),
        text[..text.len() / 2].to_string(),
        text.replacen("\"biases\": [\n", "\"biases\": [\n1.0,\n", 1),
        text.replacen("\"layer_dims\": [\n    58", "\"layer_dims\": [\n    57", 1),
    ] {
        assert_ne!(broken, text);
        let err = ModelArtifact::from_bytes(broken.as_bytes()).unwrap_err();
        assert!(
            matches!(err, Error::Artifact(_) | Error::SchemaMismatch { .. }),
            "{err}"
        );
    }
}
