//! Versioned JSON dump of a trained model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::churnmodel::ModelParams;
use crate::edgefeat::FeatureSchema;
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format_version: u32,
    /// Hidden layers in the embedding stack.
    pub l_p: usize,
    /// Hidden layers in the prediction stack.
    pub l_n: usize,
    /// Layer widths from `d` through `m` and on to the prediction output.
    pub dims: Vec<usize>,
    pub vocab_size: usize,
}

impl CheckpointHeader {
    pub fn describe(params: &ModelParams) -> Self {
        let mut dims = params.embed.dims();
        dims.extend(params.pred.dims().into_iter().skip(1));
        CheckpointHeader {
            format_version: FORMAT_VERSION,
            l_p: params.embed.dims().len() - 1,
            l_n: params.pred.dims().len() - 1,
            dims,
            vocab_size: params.vocab_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    /// `SS` or `RS`.
    pub label: String,
    /// Layout used to compute `z`, so unseen edges can be scored.
    pub schema: FeatureSchema,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(label: impl Into<String>, schema: FeatureSchema, params: ModelParams) -> Self {
        Checkpoint {
            header: CheckpointHeader::describe(&params),
            label: label.into(),
            schema,
            params,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let ck: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        if ck.header.format_version != FORMAT_VERSION {
            return Err(Error::parse(
                path.display().to_string(),
                format!(
                    "checkpoint format {} is not supported (expected {FORMAT_VERSION})",
                    ck.header.format_version
                ),
            ));
        }
        if CheckpointHeader::describe(&ck.params) != ck.header {
            return Err(Error::parse(
                path.display().to_string(),
                "header does not match the stored matrices",
            ));
        }
        if ck.params.input_dim() != ck.schema.dim() {
            return Err(Error::Dimension {
                expected: ck.schema.dim(),
                got: ck.params.input_dim(),
            });
        }
        Ok(ck)
    }
}
