//! Train / Test / BLEU / PPL rows grouped into augmentation blocks.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::augment::AugmentMode;

pub const ROWS_FILE: &str = "rows.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub train: String,
    pub test: String,
    pub n_train: usize,
    pub n_test: usize,
    pub bleu: f64,
    pub ppl: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportBlock {
    pub mode: AugmentMode,
    pub rows: Vec<ReportRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub blocks: Vec<ReportBlock>,
}

fn heading(mode: AugmentMode) -> &'static str {
    match mode {
        AugmentMode::None => "Before augmentation (No augmentation)",
        AugmentMode::Half => "Half augmentation",
        AugmentMode::Full => "Full augmentation",
    }
}

/// Where a mode's evaluation rows live inside an experiment directory.
pub fn rows_path(dir: &Path, mode: AugmentMode) -> std::path::PathBuf {
    dir.join(mode.as_str()).join("eval").join(ROWS_FILE)
}

/// Collects every completed mode under `dir`, in the order none/half/full.
pub fn report(dir: &Path) -> Result<Report, PipelineError> {
    let mut blocks = Vec::new();
    for mode in AugmentMode::ALL {
        let p = rows_path(dir, mode);
        if !p.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))?;
        let rows: Vec<ReportRow> = serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", p.display())))?;
        blocks.push(ReportBlock { mode, rows });
    }
    if blocks.is_empty() {
        return Err(PipelineError::MissingRun(dir.to_path_buf()));
    }
    Ok(Report { blocks })
}

impl Report {
    pub fn to_text(&self) -> String {
        let rows = self.blocks.iter().flat_map(|b| &b.rows);
        let w0 = rows.clone().map(|r| r.train.len()).chain([5]).max().unwrap_or(5);
        let w1 = rows.map(|r| r.test.len()).chain([4]).max().unwrap_or(4);
        let mut s = String::new();
        writeln!(s, "{:<w0$}  {:<w1$}  {:>8}  {:>10}", "Train", "Test", "BLEU", "PPL").unwrap();
        for b in &self.blocks {
            writeln!(s, "{}", heading(b.mode)).unwrap();
            for r in &b.rows {
                writeln!(s, "{:<w0$}  {:<w1$}  {:>8.2}  {:>10.2}", r.train, r.test, r.bleu, r.ppl).unwrap();
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_rows(dir: &Path, mode: AugmentMode, bleu: f64) {
        let p = rows_path(dir, mode);
        std::fs::create_dir_all(p.parent().unwrap()).unwrap();
        let rows = vec![ReportRow { train: "synthetic".into(), test: "synthetic".into(), n_train: 8, n_test: 1, bleu, ppl: 3.5 }];
        std::fs::write(p, serde_json::to_string(&rows).unwrap()).unwrap();
    }

    #[test]
    fn blocks_follow_fixed_order() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(report(tmp.path()), Err(PipelineError::MissingRun(_))));
        write_rows(tmp.path(), AugmentMode::Full, 2.0);
        assert_eq!(report(tmp.path()).unwrap().blocks.len(), 1);
        write_rows(tmp.path(), AugmentMode::None, 0.0);
        write_rows(tmp.path(), AugmentMode::Half, 1.0);
        let r = report(tmp.path()).unwrap();
        let modes: Vec<_> = r.blocks.iter().map(|b| b.mode).collect();
        assert_eq!(modes, AugmentMode::ALL);
        let text = r.to_text();
        assert!(text.find("Before").unwrap() < text.find("Half").unwrap());
        assert!(text.find("Half").unwrap() < text.find("Full").unwrap());
    }
}
