//! Audio front end: from mono PCM to log-mel spectrograms and MFCC frames.

mod audio;
mod framing;
mod mel;

pub use audio::{preemphasize, resample, AudioClip};
pub use framing::{energy_vad, frame_and_window, frame_count, frame_signal, frame_sizes, Window};
pub use mel::{
    analyze, dct2, deltas, hz_to_mel, log_mel_from_frames, log_mel_spectrogram, mel_centers,
    mel_filterbank, mel_to_hz, mfcc_with_deltas, LogMelSpectrogram,
};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Front-end parameters. Every field has a default, so partial configs are accepted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontendConfig {
    /// Processing rate in Hz; other rates are resampled.
    pub sample_rate: u32,
    /// Frame length in seconds.
    pub frame_len: f64,
    /// Frame hop in seconds.
    pub hop: f64,
    pub window: Window,
    pub fft_size: usize,
    pub mel_channels: usize,
    pub fmin: f64,
    /// Upper band edge; `None` means Nyquist.
    pub fmax: Option<f64>,
    pub log_floor: f64,
    pub preemphasis: f64,
    /// Drop frames quieter than this many dB below the loudest; `None` disables VAD.
    pub vad_threshold_db: Option<f64>,
    pub n_ceps: usize,
    pub delta_window: usize,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            frame_len: 0.025,
            hop: 0.010,
            window: Window::Hann,
            fft_size: 512,
            mel_channels: 31,
            fmin: 64.0,
            fmax: None,
            log_floor: 1e-10,
            preemphasis: 0.97,
            vad_threshold_db: Some(40.0),
            n_ceps: 20,
            delta_window: 2,
        }
    }
}

/// Per-frame feature vectors, one row per dimension and one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFeatures {
    pub values: DMatrix<f64>,
    pub dim_labels: Vec<String>,
}

impl FrameFeatures {
    pub fn new(values: DMatrix<f64>, dim_labels: Vec<String>) -> Result<Self> {
        if dim_labels.len() != values.nrows() {
            return Err(Error::BadInput(format!(
                "{} labels for {} feature rows",
                dim_labels.len(),
                values.nrows()
            )));
        }
        Ok(Self { values, dim_labels })
    }

    pub fn dims(&self) -> usize {
        self.values.nrows()
    }

    pub fn frames(&self) -> usize {
        self.values.ncols()
    }

    /// Stacks feature streams that share a frame count.
    pub fn stack(parts: &[FrameFeatures]) -> Result<FrameFeatures> {
        let frames = parts.first().map_or(0, FrameFeatures::frames);
        if parts.iter().any(|p| p.frames() != frames) {
            return Err(Error::BadInput("feature streams have different frame counts".into()));
        }
        let dims: usize = parts.iter().map(FrameFeatures::dims).sum();
        let mut values = DMatrix::zeros(dims, frames);
        let mut labels = Vec::with_capacity(dims);
        let mut row = 0;
        for p in parts {
            values.rows_mut(row, p.dims()).copy_from(&p.values);
            labels.extend(p.dim_labels.iter().cloned());
            row += p.dims();
        }
        FrameFeatures::new(values, labels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_clips_give_identical_cepstra() {
        let x: Vec<f64> = (0..4000).map(|n| ((n * 7919) % 101) as f64 / 101.0 - 0.5).collect();
        let clip = AudioClip::new(x, 16_000, "a").unwrap();
        let cfg = FrontendConfig::default();
        let a = mfcc_with_deltas(&analyze(&clip, &cfg).unwrap(), 20, 2).unwrap();
        let b = mfcc_with_deltas(&analyze(&clip.clone(), &cfg).unwrap(), 20, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stacking_checks_frame_counts() {
        let a = FrameFeatures::new(DMatrix::zeros(2, 3), vec!["a".into(), "b".into()]).unwrap();
        let b = FrameFeatures::new(DMatrix::zeros(1, 4), vec!["c".into()]).unwrap();
        assert!(FrameFeatures::stack(&[a.clone(), b]).is_err());
        assert_eq!(FrameFeatures::stack(&[a.clone(), a]).unwrap().dims(), 4);
    }
}
