//! Audio clips, WAV input, pre-emphasis and resampling.

use std::f64::consts::PI;
use std::path::Path;

use crate::error::{Error, Result};

/// A mono PCM clip with amplitudes in roughly [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub id: String,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32, id: impl Into<String>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptySignal);
        }
        if sample_rate == 0 {
            return Err(Error::BadConfig("sample rate must be positive".into()));
        }
        Ok(Self {
            samples,
            sample_rate,
            id: id.into(),
        })
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Reads a 16-bit PCM mono RIFF WAV file.
    pub fn read_wav(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = hound::WavReader::open(path)?;
        let spec = reader.spec();
        if spec.channels != 1 {
            return Err(Error::BadInput(format!(
                "{}: {} channels, only mono is supported",
                path.display(),
                spec.channels
            )));
        }
        if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
            return Err(Error::BadInput(format!(
                "{}: only 16-bit PCM is supported",
                path.display()
            )));
        }
        let samples = reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::new(samples, spec.sample_rate, id)
    }

    /// Writes the clip as 16-bit PCM mono, clipping to the representable range.
    pub fn write_wav(&self, path: impl AsRef<Path>) -> Result<()> {
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec)?;
        for &s in &self.samples {
            let v = (s * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64);
            writer.write_sample(v as i16)?;
        }
        writer.finalize()?;
        Ok(())
    }
}

/// First-order pre-emphasis: `y[0] = x[0]`, `y[n] = x[n] - alpha * x[n-1]`.
pub fn preemphasize(clip: &AudioClip, alpha: f64) -> Result<AudioClip> {
    if clip.samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::BadConfig(format!("pre-emphasis alpha {alpha} not in [0, 1)")));
    }
    let x = &clip.samples;
    let mut y = Vec::with_capacity(x.len());
    y.push(x[0]);
    y.extend(x.windows(2).map(|w| w[1] - alpha * w[0]));
    Ok(AudioClip {
        samples: y,
        sample_rate: clip.sample_rate,
        id: clip.id.clone(),
    })
}

/// Zero crossings of the interpolation kernel on each side.
const SINC_HALF_ZEROS: f64 = 16.0;

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Band-limited resampling by Hann-windowed sinc interpolation.
///
/// When downsampling the kernel cutoff is lowered to the new Nyquist rate.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::BadConfig("target sample rate must be positive".into()));
    }
    if clip.samples.is_empty() {
        return Err(Error::EmptySignal);
    }
    if target_rate == clip.sample_rate {
        return Ok(clip.clone());
    }
    let ratio = target_rate as f64 / clip.sample_rate as f64;
    let cutoff = ratio.min(1.0);
    let half = SINC_HALF_ZEROS / cutoff;
    let x = &clip.samples;
    let out_len = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    let samples = (0..out_len)
        .map(|n| {
            let t = n as f64 / ratio;
            let lo = (t - half).ceil().max(0.0) as usize;
            let hi = ((t + half).floor() as usize).min(x.len() - 1);
            let mut acc = 0.0;
            for (k, &xk) in x.iter().enumerate().take(hi + 1).skip(lo) {
                let d = t - k as f64;
                let w = 0.5 + 0.5 * (PI * d / half).cos();
                acc += xk * cutoff * sinc(cutoff * d) * w;
            }
            acc
        })
        .collect();
    Ok(AudioClip {
        samples,
        sample_rate: target_rate,
        id: clip.id.clone(),
    })
}
