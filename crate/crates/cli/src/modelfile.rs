//! Trained model files: JSON with a `format_version` field and a `kind` tag
//! selecting the sorter family. Slab versions are materialized flat on disk;
//! frequency trees are stored as (key, weight) pairs and rebuilt on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use selfsort_core::linear_sorter::LinearSorterModel;
use selfsort_core::mixture_sorter::MixtureSorterModel;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Linear(Box<LinearSorterModel>),
    Mixture(Box<MixtureSorterModel>),
}

impl ModelKind {
    pub fn n(&self) -> usize {
        match self {
            ModelKind::Linear(m) => m.n(),
            ModelKind::Mixture(m) => m.n(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub model: ModelKind,
}

pub fn load_model(path: &Path) -> Result<ModelKind> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        reason: format!("line {}, column {}: {}", e.line(), e.column(), e),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::Version {
            expected: FORMAT_VERSION,
            got: file.format_version,
        });
    }
    Ok(file.model)
}

pub fn save_model(path: &Path, model: &ModelKind) -> Result<()> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string(&file).expect("model serializes");
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
