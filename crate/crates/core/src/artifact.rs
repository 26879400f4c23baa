//! The `.samlp` model bundle: a single gzip-compressed JSON document that
//! fully reconstructs prediction behavior — selected features, winning
//! configuration, fitted weights/trees, and the tuned decision threshold.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_SCHEMA_VERSION};
use crate::lasso::SelectionResult;
use crate::model::space::ModelConfig;
use crate::model::{ModelKind, TrainedClassifier};
use crate::standardize::StandardizationStats;

pub const ARTIFACT_VERSION: &str = "samlp-artifact-v1";
pub const ARTIFACT_EXTENSION: &str = "samlp";

/// SHA-256 of the newline-terminated feature-name list, hex-encoded.
/// Matches a direct hash of the canonical schema file bytes.
pub fn schema_hash_of(names: &[String]) -> String {
    let mut hasher = Sha256::new();
    for name in names {
        hasher.update(name.as_bytes());
        hasher.update(b"\n");
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Provenance stamped into every artifact. Dates come from the input
/// datasets rather than the wall clock so that reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub dataset_names: Vec<String>,
    /// RFC 3339 collection dates, one per dataset; empty when training
    /// came from a bare feature matrix.
    pub collection_dates: Vec<String>,
    pub n_rows: usize,
    pub n_human: usize,
    pub n_bot: usize,
    /// Logarithm base used by the entropy features.
    pub entropy_base: u32,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub version: String,
    /// Identifier of the feature-order list the model was built against.
    pub feature_schema_version: String,
    /// Hash of the full input schema (before selection).
    pub schema_hash: String,
    pub input_schema: Vec<String>,
    pub selection: SelectionResult,
    pub config: ModelConfig,
    pub classifier: TrainedClassifier,
    /// Mirror of the SVM's feature scaling; None for tree families.
    pub standardization: Option<StandardizationStats>,
    /// Tuned decision cut: a probability for tree models, a margin for
    /// the SVM.
    pub threshold: f64,
    pub master_seed: u64,
    pub metadata: TrainingMetadata,
}

impl ModelArtifact {
    pub fn new(
        selection: SelectionResult,
        config: ModelConfig,
        classifier: TrainedClassifier,
        threshold: f64,
        input_schema: Vec<String>,
        master_seed: u64,
        metadata: TrainingMetadata,
    ) -> ModelArtifact {
        let canonical: Vec<String> = crate::features::feature_names()
            .iter()
            .map(|s| s.to_string())
            .collect();
        let feature_schema_version = if input_schema == canonical {
            FEATURE_SCHEMA_VERSION.to_string()
        } else {
            "custom".to_string()
        };
        let standardization = match &classifier.model {
            ModelKind::Svm(m) => Some(m.stats.clone()),
            _ => None,
        };
        ModelArtifact {
            version: ARTIFACT_VERSION.to_string(),
            feature_schema_version,
            schema_hash: schema_hash_of(&input_schema),
            input_schema,
            selection,
            config,
            classifier,
            standardization,
            threshold,
            master_seed,
            metadata,
        }
    }

    /// Reduce a full-schema matrix to the model's selected columns.
    /// Matrices already in the selected shape pass through unchanged.
    pub fn project(&self, matrix: &FeatureMatrix) -> Result<FeatureMatrix> {
        if matrix.schema == self.classifier.schema {
            return Ok(matrix.clone());
        }
        if matrix.schema == self.input_schema {
            return Ok(matrix.select_columns(&self.selection.selected_indices));
        }
        Err(Error::schema(format!(
            "matrix schema matches neither the artifact's input schema (hash {}) nor its selected columns",
            self.schema_hash
        )))
    }

    /// Raw model scores for a full-schema or pre-selected matrix.
    pub fn score(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        let projected = self.project(matrix)?;
        self.classifier.score_matrix(&projected)
    }

    /// Scores plus hard labels at the tuned threshold.
    pub fn classify(&self, matrix: &FeatureMatrix) -> Result<Vec<(f64, Label)>> {
        Ok(self
            .score(matrix)?
            .into_iter()
            .map(|s| {
                let label = if s >= self.threshold {
                    Label::Bot
                } else {
                    Label::Human
                };
                (s, label)
            })
            .collect())
    }

    /// Deterministic uncompressed serialization.
    pub fn to_json_bytes(&self) -> Result<Vec<u8>> {
        serde_json::to_vec_pretty(self)
            .map_err(|e| Error::parse(format!("artifact serialization failed: {e}")))
    }

    /// Gzip-compressed artifact bytes (the `.samlp` file content).
    /// flate2 writes a zeroed mtime, so identical models give identical
    /// bytes.
    pub fn to_compressed_bytes(&self) -> Result<Vec<u8>> {
        let json = self.to_json_bytes()?;
        let mut encoder =
            flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
        encoder.write_all(&json)?;
        Ok(encoder.finish()?)
    }

    pub fn from_compressed_bytes(bytes: &[u8]) -> Result<ModelArtifact> {
        let mut decoder = flate2::read::GzDecoder::new(bytes);
        let mut json = Vec::new();
        decoder
            .read_to_end(&mut json)
            .map_err(|e| Error::parse(format!("artifact is not valid gzip: {e}")))?;
        let artifact: ModelArtifact = serde_json::from_slice(&json)
            .map_err(|e| Error::parse(format!("artifact JSON is invalid: {e}")))?;
        if artifact.version != ARTIFACT_VERSION {
            return Err(Error::schema(format!(
                "unsupported artifact version {:?} (this build reads {ARTIFACT_VERSION:?})",
                artifact.version
            )));
        }
        Ok(artifact)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_compressed_bytes()?;
        let mut file = File::create(path)?;
        file.write_all(&bytes)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ModelArtifact> {
        let mut bytes = Vec::new();
        File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_compressed_bytes(&bytes)
    }
}
