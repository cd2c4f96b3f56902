//! Per-stage manifests: what went in, what came out, and with which settings.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub version: u32,
    pub params: serde_json::Value,
    /// Input path -> sha256.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (inside the stage directory) -> sha256.
    pub outputs: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// A stage to run or reuse.
pub struct Stage {
    pub name: String,
    pub version: u32,
    pub dir: PathBuf,
    pub params: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<String>,
}

impl Stage {
    pub fn output(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    fn expected(&self) -> Result<Manifest, PipelineError> {
        let mut inputs = BTreeMap::new();
        for p in &self.inputs {
            inputs.insert(p.display().to_string(), sha256_file(p)?);
        }
        Ok(Manifest { stage: self.name.clone(), version: self.version, params: self.params.clone(), inputs, outputs: BTreeMap::new() })
    }

    /// True when the stored manifest matches the current inputs and
    /// settings and every recorded output is intact.
    fn is_fresh(&self, want: &Manifest) -> bool {
        let Ok(text) = std::fs::read_to_string(self.dir.join(MANIFEST)) else {
            return false;
        };
        let Ok(have) = serde_json::from_str::<Manifest>(&text) else {
            return false;
        };
        if have.stage != want.stage || have.version != want.version || have.params != want.params || have.inputs != want.inputs {
            return false;
        }
        self.outputs.iter().all(|o| have.outputs.get(o).is_some_and(|h| sha256_file(&self.dir.join(o)).is_ok_and(|x| &x == h)))
    }

    /// Runs `body` unless a fresh manifest exists; returns whether it ran.
    /// `body` writes its outputs into the stage directory.
    pub fn run(&self, body: impl FnOnce(&Stage) -> Result<(), PipelineError>) -> Result<bool, PipelineError> {
        let mut want = self.expected()?;
        if self.is_fresh(&want) {
            return Ok(false);
        }
        std::fs::create_dir_all(&self.dir).map_err(|e| PipelineError::io(&self.dir, e))?;
        let _ = std::fs::remove_file(self.dir.join(MANIFEST));
        body(self)?;
        for o in &self.outputs {
            want.outputs.insert(o.clone(), sha256_file(&self.dir.join(o))?);
        }
        let path = self.dir.join(MANIFEST);
        std::fs::write(&path, serde_json::to_string_pretty(&want).expect("manifest serialises") + "\n").map_err(|e| PipelineError::io(&path, e))?;
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuses_until_an_input_changes() {
        let tmp = tempfile::tempdir().unwrap();
        let input = tmp.path().join("in.txt");
        std::fs::write(&input, "a").unwrap();
        let stage = Stage {
            name: "copy".into(),
            version: 1,
            dir: tmp.path().join("copy"),
            params: serde_json::json!({"k": 1}),
            inputs: vec![input.clone()],
            outputs: vec!["out.txt".into()],
        };
        let body = |s: &Stage| {
            let t = std::fs::read_to_string(&input).unwrap();
            std::fs::write(s.output("out.txt"), t).map_err(|e| PipelineError::io(&input, e))
        };
        assert!(stage.run(body).unwrap());
        assert!(!stage.run(body).unwrap());
        std::fs::write(&input, "b").unwrap();
        assert!(stage.run(body).unwrap());
        std::fs::remove_file(stage.output("out.txt")).unwrap();
        assert!(stage.run(body).unwrap());
        assert_eq!(std::fs::read_to_string(stage.output("out.txt")).unwrap(), "b");
    }
}
