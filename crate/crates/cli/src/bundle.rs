//! Self-contained trained-model file: forest, vocabulary, representation
//! model, and the lexicon it was trained with, so `predict` needs nothing
//! but the bundle and a document cache.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use emobow::features::Vocabulary;
use emobow::forest::Forest;
use emobow::lexicon::Lexicon;
use emobow::represent::ModelKind;

use crate::io_util::{atomic_write, open_reader};

pub const BUNDLE_SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
pub struct ForestBundle {
    pub schema_version: u32,
    pub model: ModelKind,
    pub min_df: u32,
    /// Canonical TSV of the lexicon used at training time.
    pub lexicon_tsv: String,
    pub vocab: Vocabulary,
    pub forest: Forest,
}

impl ForestBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec(self).context("serializing forest bundle")?;
        atomic_write(path, &json)
    }

    pub fn load(path: &Path) -> Result<ForestBundle> {
        let bundle: ForestBundle = serde_json::from_reader(open_reader(path)?)
            .with_context(|| format!("parsing forest bundle {}", path.display()))?;
        if bundle.schema_version != BUNDLE_SCHEMA_VERSION {
            bail!(
                "unsupported bundle schema version {} (expected {BUNDLE_SCHEMA_VERSION})",
                bundle.schema_version
            );
        }
        Ok(bundle)
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        Lexicon::parse(self.lexicon_tsv.as_bytes()).context("parsing bundled lexicon")
    }
}
