use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::augment::AugmentMode;
use crate::corpus::Origin;
use crate::embed::GloveHyperparams;
use crate::exec::Exec;
use crate::nmt::TrainConfig;
use crate::rng::derive_seed;

/// One parallel TSV. `origin` tags rows that carry no third column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParallelInput {
    pub path: PathBuf,
    #[serde(default)]
    pub origin: Origin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub parallel: Vec<ParallelInput>,
    /// Source-language sentences used only for embedding training.
    pub monolingual: Vec<PathBuf>,
    pub romanize_source: bool,
    pub romanize_target: bool,
    pub augmentation: AugmentMode,
    /// Shared settings of the ten ensemble members; `window`,
    /// `min_sentence_len` and `seed` are overridden per member.
    pub glove: GloveHyperparams,
    pub seed: u64,
    /// Seed of the shuffle before splitting; derived from `seed` when absent.
    pub split_seed: Option<u64>,
    pub nmt: TrainConfig,
    pub output_dir: PathBuf,
    /// shuffle -> augment -> split (augmented variants of test sentences can
    /// land in training); otherwise split first and augment only training.
    pub paper_faithful: bool,
    pub exec: Exec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            parallel: Vec::new(),
            monolingual: Vec::new(),
            romanize_source: true,
            romanize_target: true,
            augmentation: AugmentMode::None,
            glove: GloveHyperparams::default(),
            seed: 0,
            split_seed: None,
            nmt: TrainConfig::default(),
            output_dir: PathBuf::from("runs"),
            paper_faithful: false,
            exec: Exec::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    /// Reads a config; relative paths are taken relative to its directory.
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let mut c = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        c.rebase(base);
        Ok(c)
    }

    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.parallel.iter_mut().for_each(|i| fix(&mut i.path));
        self.monolingual.iter_mut().for_each(fix);
        fix(&mut self.output_dir);
    }

    /// Fills every derived value: split seed, GloVe and NMT seeds, and the
    /// NMT execution mode.
    pub fn resolved(&self) -> PipelineConfig {
        let mut c = self.clone();
        c.split_seed = Some(self.split_seed.unwrap_or_else(|| derive_seed(self.seed, "split")));
        c.glove.seed = derive_seed(self.seed, "glove");
        c.nmt.seed = derive_seed(self.seed, "nmt");
        c.nmt.exec = self.exec;
        c
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.parallel.is_empty() {
            return Err(PipelineError::Config("no parallel corpus given".into()));
        }
        for p in self.parallel.iter().map(|i| &i.path).chain(&self.monolingual) {
            if !p.is_file() {
                return Err(PipelineError::MissingInput(p.clone()));
            }
        }
        self.glove.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        self.nmt.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// Pretty JSON with all defaults written out.
    pub fn echo(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_missing_fields() {
        let c = PipelineConfig::from_json(r#"{"parallel":[{"path":"a.tsv"}],"augmentation":"full"}"#).unwrap();
        assert_eq!(c.augmentation, AugmentMode::Full);
        assert_eq!(c.nmt.epochs, 5);
        assert!(c.romanize_source);
        let back = PipelineConfig::from_json(&c.echo()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(PipelineConfig::from_json(r#"{"paralel":[]}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"augmentation":"most"}"#).is_err());
    }

    #[test]
    fn resolution_is_stable() {
        let c = PipelineConfig { seed: 5, ..PipelineConfig::default() };
        let r = c.resolved();
        assert_eq!(r, c.resolved());
        assert_eq!(r.split_seed, Some(derive_seed(5, "split")));
        assert_ne!(r.nmt.seed, r.glove.seed);
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let mut c = PipelineConfig::from_json(r#"{"parallel":[{"path":"a.tsv"}],"monolingual":["/abs/m.txt"]}"#).unwrap();
        c.rebase(Path::new("/cfg"));
        assert_eq!(c.parallel[0].path, PathBuf::from("/cfg/a.tsv"));
        assert_eq!(c.monolingual[0], PathBuf::from("/abs/m.txt"));
        assert_eq!(c.output_dir, PathBuf::from("/cfg/runs"));
    }
}
