use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::mlp::{forward, Activation, Dense, MlpModel};
use super::train::TrainConfig;
use crate::error::{Error, Result};
use crate::features::{FeatureSchema, Scaler};

pub const FORMAT_NAME: &str = "fallstream-model";
pub const FORMAT_VERSION: u32 = 1;

/// Provenance recorded alongside the parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingMetadata {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub optimizer: String,
    pub loss: String,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    pub split_seed: u64,
    pub train_fraction: f64,
    /// SHA-256 of the feature data the model was trained on.
    pub dataset_digest: String,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub final_loss: f64,
}

impl TrainingMetadata {
    pub fn from_config(config: &TrainConfig, dataset_digest: String) -> Self {
        Self {
            epochs: config.epochs,
            learning_rate: config.learning_rate,
            batch_size: config.batch_size,
            optimizer: "adam(beta1=0.9,beta2=0.999,eps=1e-8)".into(),
            loss: "binary_cross_entropy".into(),
            init_seed: config.init_seed,
            shuffle_seed: config.shuffle_seed,
            split_seed: config.split_seed,
            train_fraction: config.train_fraction,
            dataset_digest,
            train_samples: 0,
            test_samples: 0,
            train_accuracy: 0.0,
            test_accuracy: 0.0,
            final_loss: 0.0,
        }
    }
}

/// A trained model with the scaler it expects in front of it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: MlpModel,
    pub scaler: Scaler,
    pub schema_version: String,
    pub training: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format: String,
    format_version: u32,
    schema_version: String,
    layer_dims: Vec<usize>,
    hidden_activation: Activation,
    output_activation: Activation,
    layers: Vec<LayerDoc>,
    scaler: ScalerDoc,
    training: TrainingMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<f64>,
    biases: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalerDoc {
    min: Vec<f64>,
    max: Vec<f64>,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

impl ModelArtifact {
    pub fn new(model: MlpModel, scaler: Scaler, training: TrainingMetadata) -> Result<Self> {
        let artifact = Self {
            schema_version: model.schema_version.clone(),
            model,
            scaler,
            training,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn validate(&self) -> Result<()> {
        self.model
            .validate()
            .map_err(|e| Error::Artifact(e.to_string()))?;
        self.scaler.validate()?;
        if self.model.schema_version != self.schema_version
            || self.scaler.schema_version != self.schema_version
        {
            return Err(Error::Artifact(format!(
                "schema versions differ: artifact {}, model {}, scaler {}",
                self.schema_version, self.model.schema_version, self.scaler.schema_version
            )));
        }
        if self.scaler.len() != self.model.input_dim() {
            return Err(Error::Artifact(format!(
                "scaler covers {} features but the model expects {}",
                self.scaler.len(),
                self.model.input_dim()
            )));
        }
        let schema = self.schema()?;
        if schema.len() != self.model.input_dim() {
            return Err(Error::SchemaMismatch {
                expected: format!("{} inputs for {}", schema.len(), schema.version),
                found: format!("{} inputs", self.model.input_dim()),
            });
        }
        Ok(())
    }

    /// Fall probability for raw (unscaled) feature values.
    pub fn predict(&self, raw: &[f64]) -> Result<f64> {
        forward(&self.model, &self.scaler.transform(raw)?)
    }

    /// The feature schema the artifact was trained on, if this build knows it.
    pub fn schema(&self) -> Result<FeatureSchema> {
        FeatureSchema::by_version(&self.schema_version)
    }

    /// Serializes to the canonical text document. Identical artifacts give
    /// identical bytes.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let doc = Document {
            format: FORMAT_NAME.into(),
            format_version: FORMAT_VERSION,
            schema_version: self.schema_version.clone(),
            layer_dims: self.model.layer_dims.clone(),
            hidden_activation: self.model.hidden_activation,
            output_activation: self.model.output_activation,
            layers: self
                .model
                .layers
                .iter()
                .map(|l| LayerDoc {
                    weights: l.weights.clone(),
                    biases: l.biases.clone(),
                })
                .collect(),
            scaler: ScalerDoc {
                min: self.scaler.min.clone(),
                max: self.scaler.max.clone(),
            },
            training: self.training.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&doc)
            .map_err(|e| Error::Artifact(format!("serialize: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let doc: Document = serde_json::from_slice(bytes)
            .map_err(|e| Error::Artifact(format!("corrupt artifact: {e}")))?;
        if doc.format != FORMAT_NAME {
            return Err(Error::Artifact(format!(
                "not a model artifact: `{}`",
                doc.format
            )));
        }
        if doc.format_version != FORMAT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported format version {} (expected {FORMAT_VERSION})",
                doc.format_version
            )));
        }
        let dims = doc.layer_dims;
        if doc.layers.len() + 1 != dims.len() {
            return Err(Error::Artifact(
                "layer count does not match layer_dims".into(),
            ));
        }
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| Dense {
                inputs: dims[k],
                outputs: dims[k + 1],
                weights: l.weights,
                biases: l.biases,
            })
            .collect();
        let artifact = Self {
            model: MlpModel {
                layer_dims: dims,
                layers,
                hidden_activation: doc.hidden_activation,
                output_activation: doc.output_activation,
                schema_version: doc.schema_version.clone(),
            },
            scaler: Scaler {
                schema_version: doc.schema_version.clone(),
                min: doc.scaler.min,
                max: doc.scaler.max,
            },
            schema_version: doc.schema_version,
            training: doc.training,
        };
        artifact.validate()?;
        Ok(artifact)
    }

    pub fn digest(&self) -> Result<String> {
        Ok(digest_hex(&self.to_bytes()?))
    }
}

pub fn save_artifact(artifact: &ModelArtifact, path: &Path) -> Result<()> {
    let bytes = artifact.to_bytes()?;
    std::fs::write(path, bytes)?;
    Ok(())
}

pub fn load_artifact(path: &Path) -> Result<ModelArtifact> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Artifact(format!("cannot read {}: {e}", path.display())))?;
    ModelArtifact::from_bytes(&bytes)
}
