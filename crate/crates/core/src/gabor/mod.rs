//! Spectro-temporal Gabor filter bank features (GBFB) and their separable
//! variant (SGBFB), computed on log-mel spectrograms.
//!
//! Feature layout is fixed. GBFB filters are ordered by signed spectral
//! modulation frequency, then temporal modulation frequency; each filter
//! contributes its subsampled channels in ascending order. SGBFB outputs are
//! ordered by spectral frequency, temporal frequency, then the four real
//! quadrature combinations `re·re, re·im, im·re, im·im`, then channels.

mod conv;
mod filter;

pub use conv::{conv1d_same, conv2d_same, conv_cols, conv_rows_at, reflect};
pub use filter::{GaborFilter1D, GaborFilter2D};

use serde::{Deserialize, Serialize};

use crate::dsp::{FrameFeatures, LogMelSpectrogram};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Filter-bank parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaborBankConfig {
    /// Number of mel channels the bank is designed for.
    pub mel_channels: usize,
    /// Spectrogram frame rate in Hz, used to convert temporal frequencies.
    pub frame_rate: f64,
    /// Non-negative spectral modulation frequencies, cycles per channel.
    pub spectral_mod_freqs: Vec<f64>,
    /// Non-negative temporal modulation frequencies, Hz.
    pub temporal_mod_freqs: Vec<f64>,
    /// Oscillation cycles spanned by `±1` envelope SD.
    pub envelope_cycles: f64,
    /// Envelope SD cap along the spectral axis (channels); also the SD of DC filters.
    pub max_sigma_spectral: f64,
    /// Envelope SD cap along the temporal axis (frames); also the SD of DC filters.
    pub max_sigma_temporal: f64,
    /// Kernel half-support in envelope SDs.
    pub support_sds: f64,
    pub max_half_spectral: usize,
    pub max_half_temporal: usize,
    /// Channel subsampling stride as a fraction of the spectral envelope width `2σ`.
    pub subsample_fraction: f64,
    /// Remove each non-DC filter's zero-frequency response.
    pub dc_compensation: bool,
    /// If set, building fails unless the GBFB dimension matches.
    pub expected_gbfb_dims: Option<usize>,
    /// If set, building fails unless the SGBFB dimension matches.
    pub expected_sgbfb_dims: Option<usize>,
}

impl Default for GaborBankConfig {
    fn default() -> Self {
        Self {
            mel_channels: 31,
            frame_rate: 100.0,
            spectral_mod_freqs: vec![0.0, 0.03, 0.06, 0.12, 0.25],
            temporal_mod_freqs: vec![0.0, 6.2, 9.9, 15.7, 25.0],
            envelope_cycles: 1.75,
            max_sigma_spectral: 31.0,
            max_sigma_temporal: 15.0,
            support_sds: 2.0,
            max_half_spectral: 34,
            max_half_temporal: 20,
            subsample_fraction: 0.25,
            dc_compensation: true,
            expected_gbfb_dims: None,
            expected_sgbfb_dims: None,
        }
    }
}

/// Filter count and per-frame dimensions produced by the shipped defaults.
pub const DEFAULT_GBFB_FILTERS: usize = 41;
pub const DEFAULT_GBFB_DIMS: usize = 455;
pub const DEFAULT_SGBFB_DIMS: usize = 1020;

/// Builds the default bank and confirms it yields the reference counts.
///
/// Returns a `BadConfig` diagnostic naming every mismatch.
pub fn check_default_dims() -> Result<(usize, usize, usize)> {
    let cfg = GaborBankConfig::default();
    let bank = build_gbfb_bank(&cfg)?;
    let got = (bank.len(), cfg.gbfb_dims(), cfg.sgbfb_dims());
    let want = (DEFAULT_GBFB_FILTERS, DEFAULT_GBFB_DIMS, DEFAULT_SGBFB_DIMS);
    if got != want {
        return Err(Error::BadConfig(format!(
            "default Gabor grid yields {} filters / {} GBFB dims / {} SGBFB dims, expected {} / {} / {}",
            got.0, got.1, got.2, want.0, want.1, want.2
        )));
    }
    Ok(got)
}

impl GaborBankConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::BadConfig(m));
        if self.mel_channels == 0 {
            return bad("mel_channels must be positive".into());
        }
        if !(self.frame_rate > 0.0) {
            return bad("frame_rate must be positive".into());
        }
        for (name, list) in [
            ("spectral_mod_freqs", &self.spectral_mod_freqs),
            ("temporal_mod_freqs", &self.temporal_mod_freqs),
        ] {
            if !list.contains(&0.0) {
                return bad(format!("{name} must include 0"));
            }
            if list.iter().any(|f| !f.is_finite() || *f < 0.0) {
                return bad(format!("{name} must be finite and non-negative"));
            }
            let mut sorted = list.clone();
            sorted.sort_by(f64::total_cmp);
            sorted.dedup();
            if sorted.len() != list.len() {
                return bad(format!("{name} contains duplicates"));
            }
        }
        if !(self.subsample_fraction > 0.0 && self.subsample_fraction <= 1.0) {
            return bad("subsample_fraction must be in (0, 1]".into());
        }
        if !(self.envelope_cycles > 0.0 && self.max_sigma_spectral > 0.0 && self.max_sigma_temporal > 0.0)
        {
            return bad("envelope parameters must be positive".into());
        }
        if !(self.support_sds > 0.0) {
            return bad("support_sds must be positive".into());
        }
        if let Some(want) = self.expected_gbfb_dims {
            if want != self.gbfb_dims() {
                return bad(format!("GBFB grid yields {} dims, expected {want}", self.gbfb_dims()));
            }
        }
        if let Some(want) = self.expected_sgbfb_dims {
            if want != self.sgbfb_dims() {
                return bad(format!("SGBFB grid yields {} dims, expected {want}", self.sgbfb_dims()));
            }
        }
        Ok(())
    }

    fn sorted(list: &[f64]) -> Vec<f64> {
        let mut v = list.to_vec();
        v.sort_by(f64::total_cmp);
        v
    }

    /// Spectral envelope SD for modulation frequency `u` (cycles/channel).
    pub fn sigma_spectral(&self, u: f64) -> f64 {
        envelope_sigma(u, self.envelope_cycles, self.max_sigma_spectral)
    }

    /// Temporal envelope SD in frames for modulation frequency `v_hz`.
    pub fn sigma_temporal(&self, v_hz: f64) -> f64 {
        envelope_sigma(v_hz / self.frame_rate, self.envelope_cycles, self.max_sigma_temporal)
    }

    fn half_spectral(&self, sigma: f64) -> usize {
        ((self.support_sds * sigma).ceil() as usize).clamp(1, self.max_half_spectral.max(1))
    }

    fn half_temporal(&self, sigma: f64) -> usize {
        ((self.support_sds * sigma).ceil() as usize).clamp(1, self.max_half_temporal.max(1))
    }

    /// Channels kept after subsampling the output of a filter with spectral frequency `u`.
    ///
    /// Stride is `floor(fraction * 2σ)`, at least 1, and the kept channels are centred
    /// in the band. Spectral DC filters keep only the centre channel.
    pub fn kept_channels(&self, u: f64) -> Vec<usize> {
        let c = self.mel_channels;
        if u == 0.0 {
            return vec![(c - 1) / 2];
        }
        let width = 2.0 * self.sigma_spectral(u);
        let stride = ((self.subsample_fraction * width).floor() as usize).max(1);
        let count = (c - 1) / stride + 1;
        let offset = ((c - 1) - (count - 1) * stride) / 2;
        (0..count).map(|k| offset + k * stride).collect()
    }

    /// Non-redundant (signed spectral, temporal Hz) pairs in output order.
    ///
    /// Negative spectral frequencies are only paired with nonzero temporal
    /// frequencies, and the DC pair appears once.
    pub fn gbfb_pairs(&self) -> Vec<(f64, f64)> {
        let spec = Self::sorted(&self.spectral_mod_freqs);
        let temp = Self::sorted(&self.temporal_mod_freqs);
        let mut signed: Vec<f64> = spec.iter().filter(|&&u| u > 0.0).map(|&u| -u).collect();
        signed.extend(spec.iter().copied());
        signed.sort_by(f64::total_cmp);
        let mut pairs = Vec::new();
        for &u in &signed {
            for &v in &temp {
                if u < 0.0 && v == 0.0 {
                    continue;
                }
                pairs.push((u, v));
            }
        }
        pairs
    }

    pub fn gbfb_dims(&self) -> usize {
        self.gbfb_pairs()
            .iter()
            .map(|&(u, _)| self.kept_channels(u.abs()).len())
            .sum()
    }

    pub fn sgbfb_dims(&self) -> usize {
        let per_temporal: usize = self
            .spectral_mod_freqs
            .iter()
            .map(|&u| self.kept_channels(u).len())
            .sum();
        4 * self.temporal_mod_freqs.len() * per_temporal
    }
}

fn envelope_sigma(freq: f64, cycles: f64, cap: f64) -> f64 {
    if freq == 0.0 {
        cap
    } else {
        (cycles / (2.0 * freq.abs())).min(cap)
    }
}

/// One GBFB filter together with the channels it keeps.
#[derive(Debug, Clone)]
pub struct BankFilter {
    pub filter: GaborFilter2D,
    /// Temporal modulation frequency in Hz, for labelling.
    pub temporal_hz: f64,
    pub channels: Vec<usize>,
    spectral: GaborFilter1D,
    temporal: GaborFilter1D,
}

/// Builds one 2D filter per non-redundant modulation pair.
pub fn build_gbfb_bank(cfg: &GaborBankConfig) -> Result<Vec<GaborFilter2D>> {
    Ok(build_bank_filters(cfg)?.into_iter().map(|b| b.filter).collect())
}

/// Like [`build_gbfb_bank`], keeping the separable parts and kept channels.
pub fn build_bank_filters(cfg: &GaborBankConfig) -> Result<Vec<BankFilter>> {
    cfg.validate()?;
    cfg.gbfb_pairs()
        .into_iter()
        .map(|(u, v_hz)| {
            let v = v_hz / cfg.frame_rate;
            let sx = cfg.sigma_spectral(u);
            let sy = cfg.sigma_temporal(v_hz);
            let (hx, hy) = (cfg.half_spectral(sx), cfg.half_temporal(sy));
            Ok(BankFilter {
                filter: GaborFilter2D::new(u, v, sx, sy, hx, hy, cfg.dc_compensation)?,
                temporal_hz: v_hz,
                channels: cfg.kept_channels(u.abs()),
                spectral: GaborFilter1D::new(u, sx, hx)?,
                temporal: GaborFilter1D::new(v, sy, hy)?,
            })
        })
        .collect()
}

fn check_channels(lm: &LogMelSpectrogram, cfg: &GaborBankConfig) -> Result<()> {
    if lm.mel_channels() != cfg.mel_channels {
        return Err(Error::BadConfig(format!(
            "spectrogram has {} mel channels, bank expects {}",
            lm.mel_channels(),
            cfg.mel_channels
        )));
    }
    Ok(())
}

/// Real part of one filter's output at its kept channels, computed separably.
///
/// The compensated kernel's real part is `sr⊗tr − si⊗ti − Re(κ) gs⊗gt`,
/// so three pairs of 1D passes replace the 2D convolution.
fn filter_response(x: &DMatrix<f64>, b: &BankFilter) -> DMatrix<f64> {
    let (s, t) = (&b.spectral, &b.temporal);
    let mut out = conv_cols(&conv_rows_at(x, &s.real(), &b.channels), &t.real());
    if s.u0 != 0.0 && t.u0 != 0.0 {
        out -= conv_cols(&conv_rows_at(x, &s.imag(), &b.channels), &t.imag());
    }
    let kr = b.filter.kappa.re;
    if kr != 0.0 {
        out -= conv_cols(&conv_rows_at(x, &s.envelope(), &b.channels), &t.envelope()) * kr;
    }
    out
}

/// GBFB features: every bank filter applied to the spectrogram, real part kept,
/// channels subsampled, results stacked in bank order.
pub fn extract_gbfb(lm: &LogMelSpectrogram, bank: &[BankFilter], cfg: &GaborBankConfig) -> Result<FrameFeatures> {
    check_channels(lm, cfg)?;
    let dims: usize = bank.iter().map(|b| b.channels.len()).sum();
    let mut values = DMatrix::zeros(dims, lm.frames());
    let mut labels = Vec::with_capacity(dims);
    let mut row = 0;
    for b in bank {
        let resp = filter_response(&lm.values, b);
        values.rows_mut(row, resp.nrows()).copy_from(&resp);
        row += resp.nrows();
        labels.extend(
            b.channels
                .iter()
                .map(|c| format!("gbfb_u{}_v{}_c{c}", b.filter.u0, b.temporal_hz)),
        );
    }
    FrameFeatures::new(values, labels)
}

/// GBFB features computed by direct 2D convolution with each complex kernel.
///
/// Much slower than [`extract_gbfb`]; kept as a reference implementation.
pub fn extract_gbfb_direct(lm: &LogMelSpectrogram, bank: &[BankFilter], cfg: &GaborBankConfig) -> Result<FrameFeatures> {
    check_channels(lm, cfg)?;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for b in bank {
        let full = conv2d_same(&lm.values, &b.filter.real());
        for &c in &b.channels {
            rows.push(full.row(c).into_owned());
            labels.push(format!("gbfb_u{}_v{}_c{c}", b.filter.u0, b.temporal_hz));
        }
    }
    FrameFeatures::new(DMatrix::from_rows(&rows), labels)
}

/// SGBFB features: cascaded 1D spectral and temporal filtering.
///
/// For every spectral/temporal frequency pair the four real combinations of
/// the compensated kernels' real and imaginary parts are kept.
pub fn extract_sgbfb(lm: &LogMelSpectrogram, cfg: &GaborBankConfig) -> Result<FrameFeatures> {
    cfg.validate()?;
    check_channels(lm, cfg)?;
    let spec = GaborBankConfig::sorted(&cfg.spectral_mod_freqs);
    let temp = GaborBankConfig::sorted(&cfg.temporal_mod_freqs);
    let temporal: Vec<(f64, GaborFilter1D)> = temp
        .iter()
        .map(|&v_hz| {
            let sy = cfg.sigma_temporal(v_hz);
            let f = make_1d(v_hz / cfg.frame_rate, sy, cfg.half_temporal(sy), cfg.dc_compensation)?;
            Ok((v_hz, f))
        })
        .collect::<Result<_>>()?;
    let dims = cfg.sgbfb_dims();
    let mut values = DMatrix::zeros(dims, lm.frames());
    let mut labels = Vec::with_capacity(dims);
    let mut row = 0;
    for &u in &spec {
        let sx = cfg.sigma_spectral(u);
        let s = make_1d(u, sx, cfg.half_spectral(sx), cfg.dc_compensation)?;
        let channels = cfg.kept_channels(u);
        let spectral_parts = [
            ("re", conv_rows_at(&lm.values, &s.real(), &channels)),
            ("im", conv_rows_at(&lm.values, &s.imag(), &channels)),
        ];
        for (v_hz, t) in &temporal {
            let (tr, ti) = (t.real(), t.imag());
            for (sname, sp) in &spectral_parts {
                for (tname, tk) in [("re", &tr), ("im", &ti)] {
                    let out = conv_cols(sp, tk);
                    values.rows_mut(row, out.nrows()).copy_from(&out);
                    row += out.nrows();
                    labels.extend(channels.iter().map(|c| format!("sgbfb_{sname}{tname}_u{u}_v{v_hz}_c{c}")));
                }
            }
        }
    }
    FrameFeatures::new(values, labels)
}

fn make_1d(u0: f64, sigma: f64, half: usize, compensate: bool) -> Result<GaborFilter1D> {
    if compensate {
        GaborFilter1D::compensated(u0, sigma, half)
    } else {
        GaborFilter1D::new(u0, sigma, half)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_lm(channels: usize, frames: usize, seed: u64) -> LogMelSpectrogram {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let values = DMatrix::from_fn(channels, frames, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 * 4.0 - 2.0
        });
        LogMelSpectrogram::new(values, 0.01, 0.025).unwrap()
    }

    #[test]
    fn default_counts() {
        assert_eq!(check_default_dims().unwrap(), (41, 455, 1020));
    }

    #[test]
    fn dc_only_grid_has_one_filter() {
        let cfg = GaborBankConfig {
            spectral_mod_freqs: vec![0.0],
            temporal_mod_freqs: vec![0.0],
            ..GaborBankConfig::default()
        };
        assert_eq!(build_gbfb_bank(&cfg).unwrap().len(), 1);
    }

    #[test]
    fn pair_count_matches_enumeration() {
        let cfg = GaborBankConfig {
            spectral_mod_freqs: vec![0.0, 0.1],
            temporal_mod_freqs: vec![0.0, 8.0],
            ..GaborBankConfig::default()
        };
        // Brute force over signed spectral values {-0.1, 0, 0.1} and temporal {0, 8}.
        let mut count = 0;
        for u in [-0.1, 0.0, 0.1] {
            for v in [0.0, 8.0] {
                let redundant = u < 0.0 && v == 0.0;
                if !redundant {
                    count += 1;
                }
            }
        }
        assert_eq!(cfg.gbfb_pairs().len(), count);
        assert_eq!(count, 5);
    }

    #[test]
    fn mismatched_expectation_is_a_config_error() {
        let cfg = GaborBankConfig {
            expected_gbfb_dims: Some(454),
            ..GaborBankConfig::default()
        };
        assert!(matches!(build_gbfb_bank(&cfg), Err(Error::BadConfig(_))));
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let cfg = GaborBankConfig::default();
        let bank = build_bank_filters(&cfg).unwrap();
        let lm = random_lm(23, 10, 1);
        assert!(matches!(extract_gbfb(&lm, &bank, &cfg), Err(Error::BadConfig(_))));
        assert!(matches!(extract_sgbfb(&lm, &cfg), Err(Error::BadConfig(_))));
    }

    #[test]
    fn separable_gbfb_matches_direct_convolution() {
        let cfg = GaborBankConfig::default();
        let bank = build_bank_filters(&cfg).unwrap();
        let lm = random_lm(31, 40, 7);
        let fast = extract_gbfb(&lm, &bank, &cfg).unwrap();
        let direct = extract_gbfb_direct(&lm, &bank, &cfg).unwrap();
        assert_eq!(fast.dim_labels, direct.dim_labels);
        assert!((fast.values - direct.values).amax() < 1e-10);
    }

    #[test]
    fn zero_input_gives_zero_features() {
        let cfg = GaborBankConfig::default();
        let bank = build_bank_filters(&cfg).unwrap();
        let lm = LogMelSpectrogram::new(DMatrix::zeros(31, 12), 0.01, 0.025).unwrap();
        assert!(extract_gbfb(&lm, &bank, &cfg).unwrap().values.iter().all(|&v| v == 0.0));
        assert!(extract_sgbfb(&lm, &cfg).unwrap().values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn doubling_input_doubles_features() {
        let cfg = GaborBankConfig::default();
        let bank = build_bank_filters(&cfg).unwrap();
        let lm = random_lm(31, 25, 3);
        let lm2 = LogMelSpectrogram::new(&lm.values * 2.0, 0.01, 0.025).unwrap();
        let a = extract_gbfb(&lm, &bank, &cfg).unwrap().values;
        let b = extract_gbfb(&lm2, &bank, &cfg).unwrap().values;
        assert!((b - a * 2.0).amax() < 1e-10);
    }

    #[test]
    fn dims_do_not_depend_on_frame_count() {
        let cfg = GaborBankConfig::default();
        let bank = build_bank_filters(&cfg).unwrap();
        for frames in [1, 2, 17, 60] {
            let lm = random_lm(31, frames, frames as u64);
            assert_eq!(extract_gbfb(&lm, &bank, &cfg).unwrap().dims(), 455);
            assert_eq!(extract_sgbfb(&lm, &cfg).unwrap().dims(), 1020);
        }
    }

    #[test]
    fn sgbfb_cascade_equals_separable_2d() {
        let cfg = GaborBankConfig {
            mel_channels: 9,
            spectral_mod_freqs: vec![0.0, 0.2],
            temporal_mod_freqs: vec![0.0, 12.0],
            subsample_fraction: 0.1,
            ..GaborBankConfig::default()
        };
        let lm = random_lm(9, 14, 11);
        let ff = extract_sgbfb(&lm, &cfg).unwrap();
        let u = 0.2;
        let sx = cfg.sigma_spectral(u);
        let s = GaborFilter1D::compensated(u, sx, cfg.half_spectral(sx)).unwrap();
        let sy = cfg.sigma_temporal(12.0);
        let t = GaborFilter1D::compensated(0.12, sy, cfg.half_temporal(sy)).unwrap();
        let (si, ti) = (s.imag(), t.real());
        let k = DMatrix::from_fn(si.len(), ti.len(), |a, b| si[a] * ti[b]);
        let direct = conv2d_same(&lm.values, &k);
        let channels = cfg.kept_channels(u);
        assert_eq!(channels.len(), 9);
        let label = format!("sgbfb_imre_u{u}_v12_c0");
        let start = ff.dim_labels.iter().position(|l| *l == label).unwrap();
        for (o, &c) in channels.iter().enumerate() {
            let got = ff.values.row(start + o);
            assert!((got - direct.row(c)).amax() < 1e-10);
        }
    }

    #[test]
    fn delta_kernels_pass_spectrogram_through() {
        // With both envelopes narrower than a sample the DC kernels collapse to
        // (scaled) deltas, so the re·re output reproduces the input rows.
        let cfg = GaborBankConfig {
            mel_channels: 5,
            spectral_mod_freqs: vec![0.0],
            temporal_mod_freqs: vec![0.0],
            max_sigma_spectral: 0.05,
            max_sigma_temporal: 0.05,
            ..GaborBankConfig::default()
        };
        let lm = random_lm(5, 8, 5);
        let ff = extract_sgbfb(&lm, &cfg).unwrap();
        let peak = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * 0.05);
        let expect = lm.values.row(2) * (peak * peak);
        assert!((ff.values.row(0) - expect).amax() < 1e-9 * peak * peak);
    }
}
