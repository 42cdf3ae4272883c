//! Framing, analysis windows and energy-based voice activity detection.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

/// Analysis window shape. All windows are symmetric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Hann,
    Hamming,
    Rect,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        if len == 1 {
            return vec![1.0];
        }
        let denom = (len - 1) as f64;
        (0..len)
            .map(|n| {
                let phase = 2.0 * PI * n as f64 / denom;
                match self {
                    Window::Hann => 0.5 - 0.5 * phase.cos(),
                    Window::Hamming => 0.54 - 0.46 * phase.cos(),
                    Window::Rect => 1.0,
                }
            })
            .collect()
    }
}

/// Number of whole frames that fit in `len` samples.
pub fn frame_count(len: usize, frame: usize, hop: usize) -> usize {
    if len < frame || frame == 0 || hop == 0 {
        0
    } else {
        (len - frame) / hop + 1
    }
}

/// Splits `samples` into windowed frames, one frame per row.
pub fn frame_signal(samples: &[f64], frame: usize, hop: usize, window: Window) -> Result<DMatrix<f64>> {
    if frame == 0 || hop == 0 || hop > frame {
        return Err(Error::BadConfig(format!(
            "need frame >= hop > 0, got frame {frame}, hop {hop}"
        )));
    }
    if samples.len() < frame {
        return Err(Error::TooShort {
            samples: samples.len(),
            needed: frame,
        });
    }
    let n = frame_count(samples.len(), frame, hop);
    let w = window.coefficients(frame);
    Ok(DMatrix::from_fn(n, frame, |i, j| samples[i * hop + j] * w[j]))
}

/// Frames a clip with frame length and hop given in seconds.
pub fn frame_and_window(clip: &AudioClip, frame_len: f64, hop: f64, window: Window) -> Result<DMatrix<f64>> {
    let (frame, hop) = frame_sizes(clip.sample_rate, frame_len, hop)?;
    frame_signal(&clip.samples, frame, hop, window)
}

/// Converts frame length and hop in seconds to whole samples.
pub fn frame_sizes(sample_rate: u32, frame_len: f64, hop: f64) -> Result<(usize, usize)> {
    if !(hop > 0.0 && frame_len >= hop) {
        return Err(Error::BadConfig(format!(
            "need frame_len >= hop > 0, got {frame_len} s and {hop} s"
        )));
    }
    let sr = sample_rate as f64;
    let frame = (frame_len * sr).round() as usize;
    let hop = ((hop * sr).round() as usize).max(1);
    if frame == 0 {
        return Err(Error::BadConfig("frame shorter than one sample".into()));
    }
    Ok((frame, hop))
}

/// Keeps frames whose RMS is within `threshold_db` of the loudest frame.
///
/// The loudest frame is always kept, even when every frame is silent.
pub fn energy_vad(frames: &DMatrix<f64>, threshold_db: f64) -> Vec<bool> {
    if frames.nrows() == 0 {
        return Vec::new();
    }
    let rms: Vec<f64> = frames
        .row_iter()
        .map(|r| (r.iter().map(|v| v * v).sum::<f64>() / r.len().max(1) as f64).sqrt())
        .collect();
    let (peak_idx, peak) = rms
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let floor = peak * 10f64.powf(-threshold_db / 20.0);
    rms.iter()
        .enumerate()
        .map(|(i, &v)| i == peak_idx || v >= floor)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_window_leaves_frames_unchanged() {
        let x: Vec<f64> = (0..10).map(|v| v as f64).collect();
        let f = frame_signal(&x, 4, 2, Window::Rect).unwrap();
        assert_eq!(f.row(1).iter().copied().collect::<Vec<_>>(), vec![2., 3., 4., 5.]);
    }

    #[test]
    fn odd_hann_peaks_at_centre() {
        let w = Window::Hann.coefficients(9);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!(w[0].abs() < 1e-15 && w[8].abs() < 1e-15);
    }

    #[test]
    fn frame_count_formula() {
        let x = vec![0.0; 100];
        assert_eq!(frame_signal(&x, 40, 20, Window::Hann).unwrap().nrows(), 4);
    }

    #[test]
    fn too_short_clip() {
        let err = frame_signal(&[0.0; 3], 4, 2, Window::Rect).unwrap_err();
        assert!(matches!(err, Error::TooShort { samples: 3, needed: 4 }));
    }

    #[test]
    fn vad_examples() {
        let flat = DMatrix::from_element(5, 4, 0.3);
        assert!(energy_vad(&flat, 40.0).iter().all(|&k| k));
        let single = DMatrix::from_element(1, 4, 0.0);
        assert_eq!(energy_vad(&single, 40.0), vec![true]);

        let sr = 16_000.0;
        let mut x: Vec<f64> = (0..4000).map(|n| (2.0 * PI * 300.0 * n as f64 / sr).sin()).collect();
        x.extend(std::iter::repeat(0.0).take(4000));
        let frames = frame_signal(&x, 400, 160, Window::Hann).unwrap();
        let keep = energy_vad(&frames, 40.0);
        // Frames that lie entirely in the silent tail are dropped.
        for (i, &k) in keep.iter().enumerate() {
            if i * 160 >= 4000 {
                assert!(!k, "frame {i} should be dropped");
            }
            if i * 160 + 400 <= 4000 {
                assert!(k, "frame {i} should be kept");
            }
        }
    }
}
