//! Distribution spec files: a JSON document with a `format_version` field and
//! the generator model, e.g.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "model": "mixture",
//!   "n": 4, "m": 2,
//!   "components": [
//!     { "weight": 1.0, "dists": [ { "kind": "uniform", "a": 0.0, "b": 1.0 }, ... ] }
//!   ]
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use selfsort_core::generators::GeneratorSpec;

use crate::error::{CliError, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpecFile {
    pub format_version: u32,
    #[serde(flatten)]
    pub spec: GeneratorSpec,
}

pub fn load_spec(path: &Path) -> Result<GeneratorSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: SpecFile = serde_json::from_str(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        reason: format!("line {}, column {}: {}", e.line(), e.column(), e),
    })?;
    if file.format_version != FORMAT_VERSION {
        return Err(CliError::Version {
            expected: FORMAT_VERSION,
            got: file.format_version,
        });
    }
    file.spec.validate().map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    Ok(file.spec)
}

pub fn save_spec(path: &Path, spec: &GeneratorSpec) -> Result<()> {
    let file = SpecFile {
        format_version: FORMAT_VERSION,
        spec: spec.clone(),
    };
    let text = serde_json::to_string_pretty(&file).expect("spec serializes");
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
