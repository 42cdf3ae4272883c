//! Frame-level feature extraction from audio: MFCC with deltas, GBFB and SGBFB.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dsp::{analyze, mfcc_with_deltas, AudioClip, FrameFeatures, FrontendConfig};
use crate::error::{Error, Result};
use crate::eval::Manifest;
use crate::features::{FeatureMatrix, FeatureTable};
use crate::gabor::{build_bank_filters, extract_gbfb, extract_sgbfb, BankFilter, GaborBankConfig};

/// One family of frame-level features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Mfcc,
    Gbfb,
    Sgbfb,
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureKind::Mfcc => "mfcc",
            FeatureKind::Gbfb => "gbfb",
            FeatureKind::Sgbfb => "sgbfb",
        })
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mfcc" => Ok(FeatureKind::Mfcc),
            "gbfb" => Ok(FeatureKind::Gbfb),
            "sgbfb" => Ok(FeatureKind::Sgbfb),
            other => Err(Error::BadConfig(format!("unknown feature kind `{other}`"))),
        }
    }
}

/// Parses a comma-separated list such as `gbfb,sgbfb,mfcc`.
pub fn parse_kinds(s: &str) -> Result<Vec<FeatureKind>> {
    let kinds = s
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if kinds.is_empty() {
        return Err(Error::BadConfig("no feature kinds given".into()));
    }
    Ok(kinds)
}

/// Front end, Gabor bank and the feature families to compute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractConfig {
    pub kinds: Vec<FeatureKind>,
    pub frontend: FrontendConfig,
    pub gabor: GaborBankConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            kinds: vec![FeatureKind::Mfcc],
            frontend: FrontendConfig::default(),
            gabor: GaborBankConfig::default(),
        }
    }
}

/// Reusable extractor with the Gabor bank built once.
#[derive(Debug, Clone)]
pub struct Extractor {
    cfg: ExtractConfig,
    bank: Vec<BankFilter>,
}

impl Extractor {
    pub fn new(cfg: ExtractConfig) -> Result<Self> {
        if cfg.kinds.is_empty() {
            return Err(Error::BadConfig("no feature kinds configured".into()));
        }
        let gabor = cfg.kinds.iter().any(|k| *k != FeatureKind::Mfcc);
        if gabor && cfg.gabor.mel_channels != cfg.frontend.mel_channels {
            return Err(Error::BadConfig(format!(
                "Gabor bank expects {} mel channels but the front end produces {}",
                cfg.gabor.mel_channels, cfg.frontend.mel_channels
            )));
        }
        let bank = if cfg.kinds.contains(&FeatureKind::Gbfb) {
            build_bank_filters(&cfg.gabor)?
        } else {
            Vec::new()
        };
        Ok(Self { cfg, bank })
    }

    pub fn config(&self) -> &ExtractConfig {
        &self.cfg
    }

    /// Frame features of one clip, families stacked in configured order.
    pub fn extract(&self, clip: &AudioClip) -> Result<FrameFeatures> {
        let lm = analyze(clip, &self.cfg.frontend)?;
        let parts = self
            .cfg
            .kinds
            .iter()
            .map(|k| match k {
                FeatureKind::Mfcc => mfcc_with_deltas(&lm, self.cfg.frontend.n_ceps, self.cfg.frontend.delta_window),
                FeatureKind::Gbfb => extract_gbfb(&lm, &self.bank, &self.cfg.gabor),
                FeatureKind::Sgbfb => extract_sgbfb(&lm, &self.cfg.gabor),
            })
            .collect::<Result<Vec<_>>>()?;
        FrameFeatures::stack(&parts)
    }

    /// Frame-level table for every manifest entry, with an utterance id per row.
    ///
    /// Clips are processed in parallel; row order follows the manifest.
    pub fn extract_manifest(&self, manifest: &Manifest) -> Result<FeatureTable> {
        let per_clip: Vec<FrameFeatures> = manifest
            .entries
            .par_iter()
            .map(|e| {
                let clip = AudioClip::read_wav(&e.path)?;
                self.extract(&clip)
                    .map_err(|err| Error::BadInput(format!("{}: {err}", e.path.display())))
            })
            .collect::<Result<Vec<_>>>()?;
        let dims = per_clip[0].dims();
        let names = per_clip[0].dim_labels.clone();
        let total: usize = per_clip.iter().map(FrameFeatures::frames).sum();
        let labels_of = manifest.labels();
        let mut data = DMatrix::zeros(total, dims);
        let mut speakers = Vec::with_capacity(total);
        let mut labels = Vec::with_capacity(total);
        let mut utterances = Vec::with_capacity(total);
        let mut row = 0;
        for (i, (ff, e)) in per_clip.iter().zip(&manifest.entries).enumerate() {
            let utt = format!("{:05}_{}", i, utterance_stem(&e.path));
            for t in 0..ff.frames() {
                data.row_mut(row).tr_copy_from(&ff.values.column(t));
                speakers.push(e.speaker.clone());
                labels.push(labels_of[i]);
                utterances.push(utt.clone());
                row += 1;
            }
        }
        let matrix = FeatureMatrix::new(data, names, speakers, labels, manifest.class_names.clone())?;
        Ok(FeatureTable {
            matrix,
            utterances: Some(utterances),
        })
    }
}

fn utterance_stem(p: &std::path::Path) -> String {
    p.file_stem()
        .map(|s| s.to_string_lossy().replace(',', "_"))
        .unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(seconds: f64, freq: f64) -> AudioClip {
        let sr = 16_000;
        let n = (seconds * sr as f64) as usize;
        let s = (0..n)
            .map(|i| 0.3 * (2.0 * std::f64::consts::PI * freq * i as f64 / sr as f64).sin())
            .collect();
        AudioClip::new(s, sr, "tone").unwrap()
    }

    #[test]
    fn stacked_dimensions() {
        let cfg = ExtractConfig {
            kinds: vec![FeatureKind::Gbfb, FeatureKind::Sgbfb, FeatureKind::Mfcc],
            ..ExtractConfig::default()
        };
        let ff = Extractor::new(cfg).unwrap().extract(&tone(0.5, 440.0)).unwrap();
        assert_eq!(ff.dims(), 455 + 1020 + 60);
        assert!(ff.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn kinds_parse() {
        assert_eq!(
            parse_kinds("gbfb, mfcc").unwrap(),
            vec![FeatureKind::Gbfb, FeatureKind::Mfcc]
        );
        assert!(parse_kinds("lpc").is_err());
        assert!(parse_kinds("").is_err());
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let mut cfg = ExtractConfig {
            kinds: vec![FeatureKind::Gbfb],
            ..ExtractConfig::default()
        };
        cfg.frontend.mel_channels = 23;
        assert!(matches!(Extractor::new(cfg), Err(Error::BadConfig(_))));
    }
}
