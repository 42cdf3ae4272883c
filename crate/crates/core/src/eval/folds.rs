//! Dataset manifests and leave-one-speaker-out folds.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One manifest row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub speaker: String,
    pub label: String,
}

/// Utterances with speakers and labels, read from CSV with header `path,speaker,label`.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
    /// Sorted unique labels.
    pub class_names: Vec<String>,
}

impl Manifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::BadManifest("no entries".into()));
        }
        for (i, e) in entries.iter().enumerate() {
            if e.speaker.trim().is_empty() {
                return Err(Error::BadManifest(format!("row {}: empty speaker id", i + 1)));
            }
            if e.label.trim().is_empty() {
                return Err(Error::BadManifest(format!("row {}: empty label", i + 1)));
            }
        }
        let mut class_names: Vec<String> = entries.iter().map(|e| e.label.clone()).collect();
        class_names.sort();
        class_names.dedup();
        Ok(Self { entries, class_names })
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["path", "speaker", "label"];
        if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h.trim() != e) {
            return Err(Error::BadManifest(format!(
                "header must be `path,speaker,label`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let entries = rdr.deserialize().collect::<std::result::Result<Vec<ManifestEntry>, _>>()?;
        Self::new(entries)
    }

    /// Reads a manifest; relative audio paths are resolved against the manifest's directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut m = Self::from_reader(std::fs::File::open(path)?)?;
        if let Some(dir) = path.parent() {
            for e in &mut m.entries {
                if e.path.is_relative() {
                    e.path = dir.join(&e.path);
                }
            }
        }
        Ok(m)
    }

    /// 0-based labels into `class_names`.
    pub fn labels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|e| self.class_names.binary_search(&e.label).expect("labels come from entries"))
            .collect()
    }

    pub fn speakers(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.speaker.clone()).collect()
    }
}

/// One held-out speaker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub speaker: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// One fold per distinct speaker, in sorted speaker order.
pub fn loso_folds(speakers: &[String]) -> Result<Vec<Fold>> {
    let mut distinct: Vec<&String> = speakers.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::BadManifest(format!(
            "leave-one-speaker-out needs at least 2 speakers, found {}",
            distinct.len()
        )));
    }
    Ok(distinct
        .into_iter()
        .map(|s| {
            let (test, train): (Vec<usize>, Vec<usize>) = (0..speakers.len()).partition(|&i| &speakers[i] == s);
            Fold {
                speaker: s.clone(),
                train,
                test,
            }
        })
        .collect())
}
