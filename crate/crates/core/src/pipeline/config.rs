use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compounds::DEFAULT_THRESHOLD;
use crate::error::{Error, Result};
use crate::features::Feature;
use crate::segmentation::{AffixPresenceConfig, AffixThresholds, TrainConfig};
use crate::stats::{Directions, SequenceScope};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub lexicon: Option<PathBuf>,
    pub seeds: Option<PathBuf>,
    pub concreteness: Option<PathBuf>,
    pub ngram: Option<PathBuf>,
    pub treebank: Option<PathBuf>,
    pub etymology: Option<PathBuf>,
    /// Optional; the wcs stage is skipped without it.
    pub wcs: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompoundConfig {
    pub threshold: usize,
}

impl Default for CompoundConfig {
    fn default() -> Self {
        CompoundConfig {
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AggregationConfig {
    pub negated: BTreeSet<Feature>,
    pub log_scaled: BTreeSet<Feature>,
    pub sequence_scope: SequenceScope,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        let d = Directions::default();
        AggregationConfig {
            negated: d.negated,
            log_scaled: d.log_scaled,
            sequence_scope: SequenceScope::All,
        }
    }
}

impl AggregationConfig {
    pub fn directions(&self) -> Directions {
        Directions {
            negated: self.negated.clone(),
            log_scaled: self.log_scaled.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfeConfig {
    pub enabled: bool,
}

impl Default for RfeConfig {
    fn default() -> Self {
        RfeConfig { enabled: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Worker threads; does not affect any output.
    pub jobs: usize,
    /// Seed for generated test fixtures. The analysis itself is not random.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { jobs: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub inputs: InputPaths,
    pub output: OutputConfig,
    pub segmentation: TrainConfig,
    pub affixes: AffixThresholds,
    pub affix_presence: AffixPresenceConfig,
    pub compounds: CompoundConfig,
    pub aggregation: AggregationConfig,
    pub rfe: RfeConfig,
    pub run: RunConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

/// The resolved, checked input paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    pub lexicon: PathBuf,
    pub seeds: PathBuf,
    pub concreteness: PathBuf,
    pub ngram: PathBuf,
    pub treebank: PathBuf,
    pub etymology: PathBuf,
    pub wcs: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::config(path.display().to_string(), e.to_string()))?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let field = e
                .message()
                .split('`')
                .nth(1)
                .map(str::to_string)
                .unwrap_or_else(|| "<document>".to_string());
            Error::config(field, e.message().trim().to_string())
        })
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.output.dir)
    }

    /// Checks every documented constraint, naming the offending field.
    pub fn validate(&self) -> Result<Inputs> {
        let i = &self.inputs;
        let required = |name: &str, p: &Option<PathBuf>| -> Result<PathBuf> {
            let field = format!("inputs.{name}");
            let p = p.as_ref().ok_or_else(|| Error::config(&field, "missing"))?;
            let full = self.resolve(p);
            if !full.is_file() {
                return Err(Error::config(field, format!("{} does not exist", full.display())));
            }
            Ok(full)
        };
        let inputs = Inputs {
            lexicon: required("lexicon", &i.lexicon)?,
            seeds: required("seeds", &i.seeds)?,
            concreteness: required("concreteness", &i.concreteness)?,
            ngram: required("ngram", &i.ngram)?,
            treebank: required("treebank", &i.treebank)?,
            etymology: required("etymology", &i.etymology)?,
            wcs: match &i.wcs {
                Some(_) => Some(required("wcs", &i.wcs)?),
                None => None,
            },
        };
        let mut seen = BTreeMap::new();
        for (name, p) in inputs.named() {
            if let Some(other) = seen.insert(p.clone(), name) {
                return Err(Error::config(
                    format!("inputs.{name}"),
                    format!("same file as inputs.{other}"),
                ));
            }
        }
        self.segmentation.validate()?;
        let a = &self.affixes;
        for (name, v) in [
            ("min_color_coverage", a.min_color_coverage),
            ("min_global_coverage", a.min_global_coverage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(format!("affixes.{name}"), "must be in [0, 1]"));
            }
        }
        if a.specificity_ratio.is_nan() || a.specificity_ratio <= 0.0 {
            return Err(Error::config("affixes.specificity_ratio", "must be positive"));
        }
        if a.epsilon.is_nan() || a.epsilon <= 0.0 {
            return Err(Error::config("affixes.epsilon", "must be positive"));
        }
        if a.min_color_words == 0 {
            return Err(Error::config("affixes.min_color_words", "must be at least 1"));
        }
        if self.affix_presence.top_k == 0 {
            return Err(Error::config("affix_presence.top_k", "must be at least 1"));
        }
        if self.affix_presence.min_supporting_colors == 0 {
            return Err(Error::config("affix_presence.min_supporting_colors", "must be at least 1"));
        }
        if self.compounds.threshold == 0 {
            return Err(Error::config("compounds.threshold", "must be at least 1"));
        }
        if self.run.jobs == 0 {
            return Err(Error::config("run.jobs", "must be at least 1"));
        }
        let out = self.output_dir();
        fs::create_dir_all(&out)
            .map_err(|e| Error::config("output.dir", format!("{}: {e}", out.display())))?;
        let probe = out.join(".write-probe");
        fs::write(&probe, b"")
            .and_then(|_| fs::remove_file(&probe))
            .map_err(|e| Error::config("output.dir", format!("{} is not writable: {e}", out.display())))?;
        Ok(inputs)
    }

    /// Digest of every field that can change an output. Worker count and
    /// output location are excluded.
    pub fn hash(&self) -> String {
        let mut semantic = self.clone();
        semantic.run.jobs = 1;
        semantic.output = OutputConfig::default();
        let json = serde_json::to_string(&semantic).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

impl Inputs {
    pub fn named(&self) -> Vec<(&'static str, PathBuf)> {
        let mut v = vec![
            ("lexicon", self.lexicon.clone()),
            ("seeds", self.seeds.clone()),
            ("concreteness", self.concreteness.clone()),
            ("ngram", self.ngram.clone()),
            ("treebank", self.treebank.clone()),
            ("etymology", self.etymology.clone()),
        ];
        if let Some(w) = &self.wcs {
            v.push(("wcs", w.clone()));
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_from_empty_document() {
        let c = PipelineConfig::from_toml("").unwrap();
        assert_eq!(c.compounds.threshold, 2);
        assert_eq!(c.segmentation.alpha, 0.01);
        assert!(c.rfe.enabled);
        assert!(c.aggregation.negated.contains(&Feature::Borrowing));
    }

    #[test]
    fn unknown_key_names_the_field() {
        match PipelineConfig::from_toml("[compounds]\nthreshhold = 3\n") {
            Err(Error::Config { field, .. }) => assert_eq!(field, "threshhold"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_lexicon_names_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = PipelineConfig::from_toml("").unwrap();
        c.base_dir = dir.path().to_path_buf();
        match c.validate() {
            Err(Error::Config { field, .. }) => assert_eq!(field, "inputs.lexicon"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hash_ignores_jobs_and_output() {
        let a = PipelineConfig::from_toml("").unwrap();
        let b = PipelineConfig::from_toml("[run]\njobs = 8\n[output]\ndir = \"elsewhere\"\n").unwrap();
        let c = PipelineConfig::from_toml("[compounds]\nthreshold = 3\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
