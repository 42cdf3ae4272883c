//! Log-mel spectrograms and cepstral features.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::framing::{energy_vad, frame_signal, frame_sizes};
use super::{preemphasize, resample, AudioClip, FrameFeatures, FrontendConfig};
use crate::error::{Error, Result};

/// Log-amplitude mel spectrogram, one row per mel channel, one column per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LogMelSpectrogram {
    pub values: DMatrix<f64>,
    /// Frame hop in seconds.
    pub frame_hop: f64,
    /// Frame length in seconds.
    pub frame_len: f64,
}

impl LogMelSpectrogram {
    pub fn new(values: DMatrix<f64>, frame_hop: f64, frame_len: f64) -> Result<Self> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Error::BadInput("spectrogram needs at least one channel and frame".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::BadInput("spectrogram contains non-finite values".into()));
        }
        Ok(Self {
            values,
            frame_hop,
            frame_len,
        })
    }

    pub fn mel_channels(&self) -> usize {
        self.values.nrows()
    }

    pub fn frames(&self) -> usize {
        self.values.ncols()
    }

    /// Keeps only the frames flagged in `mask`.
    pub fn select_frames(&self, mask: &[bool]) -> LogMelSpectrogram {
        let cols: Vec<usize> = (0..self.frames()).filter(|&j| mask[j]).collect();
        LogMelSpectrogram {
            values: self.values.select_columns(cols.iter()),
            frame_hop: self.frame_hop,
            frame_len: self.frame_len,
        }
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// Centre frequencies (Hz) of the triangular mel filters.
pub fn mel_centers(channels: usize, fmin: f64, fmax: f64) -> Vec<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    (1..=channels)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (channels + 1) as f64))
        .collect()
}

/// Triangular mel filterbank, `channels x (fft_size/2 + 1)`.
///
/// Triangle edges are placed on the continuous frequency axis, so narrow
/// low-frequency filters never collapse to zero bins.
pub fn mel_filterbank(channels: usize, fft_size: usize, sample_rate: f64, fmin: f64, fmax: f64) -> DMatrix<f64> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let edges: Vec<f64> = (0..channels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (channels + 1) as f64))
        .collect();
    let bins = fft_size / 2 + 1;
    DMatrix::from_fn(channels, bins, |c, k| {
        let f = k as f64 * sample_rate / fft_size as f64;
        let (l, m, r) = (edges[c], edges[c + 1], edges[c + 2]);
        if f <= l || f >= r {
            0.0
        } else if f <= m {
            (f - l) / (m - l)
        } else {
            (r - f) / (r - m)
        }
    })
}

fn check_band(cfg: &FrontendConfig, sample_rate: u32) -> Result<f64> {
    let nyquist = sample_rate as f64 / 2.0;
    let fmax = cfg.fmax.unwrap_or(nyquist);
    if !(cfg.fmin >= 0.0 && cfg.fmin < fmax && fmax <= nyquist) {
        return Err(Error::BadConfig(format!(
            "band edges must satisfy 0 <= fmin < fmax <= {nyquist}, got {} and {fmax}",
            cfg.fmin
        )));
    }
    if cfg.mel_channels == 0 {
        return Err(Error::BadConfig("mel_channels must be at least 1".into()));
    }
    Ok(fmax)
}

/// Log-mel spectrogram of windowed frames (one frame per row).
pub fn log_mel_from_frames(frames: &DMatrix<f64>, sample_rate: u32, cfg: &FrontendConfig) -> Result<LogMelSpectrogram> {
    let fmax = check_band(cfg, sample_rate)?;
    if frames.ncols() > cfg.fft_size {
        return Err(Error::BadConfig(format!(
            "frame of {} samples exceeds fft_size {}",
            frames.ncols(),
            cfg.fft_size
        )));
    }
    if frames.nrows() == 0 {
        return Err(Error::TooShort { samples: 0, needed: 1 });
    }
    let fb = mel_filterbank(cfg.mel_channels, cfg.fft_size, sample_rate as f64, cfg.fmin, fmax);
    let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
    let bins = cfg.fft_size / 2 + 1;
    let mut mag = DMatrix::zeros(bins, frames.nrows());
    let mut buf = vec![Complex64::new(0.0, 0.0); cfg.fft_size];
    for (t, row) in frames.row_iter().enumerate() {
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (b, &v) in buf.iter_mut().zip(row.iter()) {
            b.re = v;
        }
        fft.process(&mut buf);
        for k in 0..bins {
            mag[(k, t)] = buf[k].norm();
        }
    }
    let mel = fb * mag;
    let floor = cfg.log_floor;
    let values = mel.map(|v| v.max(floor).ln());
    LogMelSpectrogram::new(
        values,
        cfg.hop,
        cfg.frame_len,
    )
}

/// Log-mel spectrogram of a clip at its own sample rate, without pre-emphasis or VAD.
pub fn log_mel_spectrogram(clip: &AudioClip, cfg: &FrontendConfig) -> Result<LogMelSpectrogram> {
    check_band(cfg, clip.sample_rate)?;
    let (frame, hop) = frame_sizes(clip.sample_rate, cfg.frame_len, cfg.hop)?;
    let frames = frame_signal(&clip.samples, frame, hop, cfg.window)?;
    log_mel_from_frames(&frames, clip.sample_rate, cfg)
}

/// Full front end: resample, pre-emphasis, framing, VAD and log-mel analysis.
pub fn analyze(clip: &AudioClip, cfg: &FrontendConfig) -> Result<LogMelSpectrogram> {
    let clip = resample(clip, cfg.sample_rate)?;
    let clip = preemphasize(&clip, cfg.preemphasis)?;
    let (frame, hop) = frame_sizes(clip.sample_rate, cfg.frame_len, cfg.hop)?;
    let frames = frame_signal(&clip.samples, frame, hop, cfg.window)?;
    let lm = log_mel_from_frames(&frames, clip.sample_rate, cfg)?;
    match cfg.vad_threshold_db {
        Some(db) => Ok(lm.select_frames(&energy_vad(&frames, db))),
        None => Ok(lm),
    }
}

/// Orthonormal DCT-II of each column, keeping the first `n_out` coefficients.
pub fn dct2(x: &DMatrix<f64>, n_out: usize) -> DMatrix<f64> {
    let m = x.nrows();
    let basis = DMatrix::from_fn(n_out, m, |k, j| {
        let scale = if k == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
        scale * (PI * k as f64 * (2 * j + 1) as f64 / (2 * m) as f64).cos()
    });
    basis * x
}

/// Regression deltas along the frame axis, clamping at the edges.
pub fn deltas(x: &DMatrix<f64>, window: usize) -> DMatrix<f64> {
    let (rows, frames) = x.shape();
    if window == 0 || frames == 0 {
        return DMatrix::zeros(rows, frames);
    }
    let denom = 2.0 * (1..=window).map(|n| (n * n) as f64).sum::<f64>();
    let last = frames as isize - 1;
    DMatrix::from_fn(rows, frames, |r, t| {
        let mut acc = 0.0;
        for n in 1..=window as isize {
            let fwd = (t as isize + n).min(last) as usize;
            let back = (t as isize - n).max(0) as usize;
            acc += n as f64 * (x[(r, fwd)] - x[(r, back)]);
        }
        acc / denom
    })
}

/// Cepstra with first and second order deltas stacked as `[c; Δc; Δ²c]`.
pub fn mfcc_with_deltas(lm: &LogMelSpectrogram, n_ceps: usize, delta_window: usize) -> Result<FrameFeatures> {
    if n_ceps == 0 || n_ceps > lm.mel_channels() {
        return Err(Error::BadConfig(format!(
            "n_ceps {n_ceps} must be in 1..={}",
            lm.mel_channels()
        )));
    }
    let c = dct2(&lm.values, n_ceps);
    let d = deltas(&c, delta_window);
    let dd = deltas(&d, delta_window);
    let frames = c.ncols();
    let mut values = DMatrix::zeros(3 * n_ceps, frames);
    values.rows_mut(0, n_ceps).copy_from(&c);
    values.rows_mut(n_ceps, n_ceps).copy_from(&d);
    values.rows_mut(2 * n_ceps, n_ceps).copy_from(&dd);
    let mut labels: Vec<String> = (0..n_ceps).map(|k| format!("mfcc{k}")).collect();
    labels.extend((0..n_ceps).map(|k| format!("mfcc{k}_d")));
    labels.extend((0..n_ceps).map(|k| format!("mfcc{k}_dd")));
    FrameFeatures::new(values, labels)
}
