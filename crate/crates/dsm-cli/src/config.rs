//! Pipeline configuration: one JSON document describing input paths, the
//! feature catalog weights, split fractions, and the variants to train.

use std::path::{Path, PathBuf};

use dsm_core::corpusindex::FeatureCatalog;
use dsm_core::rgcn::{TrainConfig, Variant, VariantConfig};
use serde::{Deserialize, Serialize};

use crate::io;
use crate::pipeline::{StageError, StageResult};

fn default_name() -> String {
    "dataset".to_string()
}

fn default_weight() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

/// Weights for the feature catalog, plus the absolute-slot options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogConfig {
    #[serde(default = "default_weight")]
    pub bullets: f64,
    #[serde(default = "default_weight")]
    pub footnotes: f64,
    #[serde(default = "default_weight")]
    pub title: f64,
    #[serde(default = "default_weight")]
    pub section: f64,
    #[serde(default = "default_weight")]
    pub infobox: f64,
    /// Keep the absolute slot in the measure vector at all.
    #[serde(default = "default_true")]
    pub include_absolute: bool,
    /// Weight of the absolute slot in the aggregate (0 = present but unused).
    #[serde(default)]
    pub absolute_weight: f64,
}

impl Default for CatalogConfig {
    fn default() -> Self {
        CatalogConfig {
            bullets: 1.0,
            footnotes: 1.0,
            title: 1.0,
            section: 1.0,
            infobox: 1.0,
            include_absolute: true,
            absolute_weight: 0.0,
        }
    }
}

impl CatalogConfig {
    pub fn to_catalog(&self) -> StageResult<FeatureCatalog> {
        let mut catalog = FeatureCatalog::default_catalog();
        let weights = [
            self.bullets,
            self.footnotes,
            self.title,
            self.section,
            self.infobox,
        ];
        for (entry, weight) in catalog.entries.iter_mut().zip(weights) {
            entry.weight = weight;
        }
        if self.include_absolute {
            catalog
                .entries
                .last_mut()
                .expect("default catalog is nonempty")
                .weight = self.absolute_weight;
        } else {
            catalog.entries.pop();
        }
        catalog
            .validate()
            .map_err(|e| StageError::new("config", e))?;
        Ok(catalog)
    }
}

/// Train/val/test fractions and the seed for the stratified draw.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

/// The whole pipeline in one JSON document. Relative paths are resolved
/// against the config file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub corpus_dir: PathBuf,
    pub gazetteer_file: PathBuf,
    pub triples_file: PathBuf,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub catalog: CatalogConfig,
    pub split: SplitConfig,
    /// One full training configuration per variant to run.
    pub variants: Vec<TrainConfig>,
}

impl PipelineConfig {
    /// Loads and validates a config file, resolving its paths.
    pub fn load(path: &Path) -> StageResult<Self> {
        let mut config: PipelineConfig = io::load_json("config", path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for field in [
            &mut config.corpus_dir,
            &mut config.gazetteer_file,
            &mut config.triples_file,
            &mut config.output_dir,
        ] {
            if field.is_relative() {
                *field = base.join(&field);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> StageResult<()> {
        if self.variants.is_empty() {
            return Err(StageError::new("config", "no variants listed"));
        }
        self.catalog.to_catalog()?;
        Ok(())
    }

    /// Overrides every seed in the config (split and all variants).
    pub fn override_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        for variant in &mut self.variants {
            variant.seed = seed;
        }
    }

    /// Stable per-variant names for files and report columns; a repeated
    /// variant kind gets a numeric suffix.
    pub fn variant_names(&self) -> Vec<String> {
        let bases: Vec<String> = self
            .variants
            .iter()
            .map(|t| variant_name(&t.variant))
            .collect();
        let mut counter: std::collections::BTreeMap<&str, usize> =
            std::collections::BTreeMap::new();
        bases
            .iter()
            .map(|base| {
                let n = counter.entry(base).or_insert(0);
                *n += 1;
                if bases.iter().filter(|b| *b == base).count() == 1 {
                    base.clone()
                } else {
                    format!("{base}_{n}")
                }
            })
            .collect()
    }
}

/// Short label for a variant configuration.
pub fn variant_name(config: &VariantConfig) -> String {
    let base = match config.variant {
        Variant::Baseline => "baseline",
        Variant::Regularization { .. } => "regularization",
        Variant::HiddenScale => "hidden_scale",
        Variant::EdgeWeights => "edge_weights",
    };
    if config.node_bias {
        format!("{base}_bias")
    } else {
        base.to_string()
    }
}
