//! Waveform normalization and the log-mel feature frontend.
//!
//! Features are magnitude STFT frames (Hann window, centered framing with
//! reflective padding) projected onto HTK-scale triangular mel filters, then
//! clamped at a floor and natural-log transformed.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};

pub const DEFAULT_LOG_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        let w = Self {
            samples,
            sample_rate,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 {
            return Err(SedError::InvalidWaveform("sample rate must be positive".into()));
        }
        if let Some(i) = self.samples.iter().position(|s| !s.is_finite()) {
            return Err(SedError::InvalidWaveform(format!(
                "non-finite sample at index {i}"
            )));
        }
        Ok(())
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Averages interleaved multi-channel samples down to mono.
    pub fn from_interleaved(interleaved: &[f64], channels: usize, sample_rate: u32) -> Result<Self> {
        if channels == 0 {
            return Err(SedError::InvalidWaveform("zero channels".into()));
        }
        let samples = interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect();
        Self::new(samples, sample_rate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontendConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub sample_rate: u32,
    pub log_floor: f64,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            n_fft: 2048,
            hop: 256,
            n_mels: 128,
            sample_rate: 16_000,
            log_floor: DEFAULT_LOG_FLOOR,
        }
    }
}

impl FrontendConfig {
    pub fn n_freqs(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn hop_seconds(&self) -> f64 {
        self.hop as f64 / self.sample_rate as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(SedError::InvalidConfig(m.to_string()));
        if self.n_fft == 0 || self.hop == 0 || self.n_mels == 0 || self.sample_rate == 0 {
            return bad("n_fft, hop, n_mels and sample_rate must be positive");
        }
        if self.hop > self.n_fft {
            return bad("hop must not exceed n_fft");
        }
        if self.n_mels >= self.n_freqs() {
            return bad("n_mels must be smaller than n_fft/2 + 1");
        }
        if !(self.log_floor > 0.0 && self.log_floor.is_finite()) {
            return bad("log_floor must be a positive finite number");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecDomain {
    LinearMagnitude,
    LogMagnitude,
}

/// A time × mel-bin feature matrix with its frame timing.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpec {
    /// Shape `(frames, mel_bins)`.
    pub data: Array2<f64>,
    pub domain: SpecDomain,
    pub hop_seconds: f64,
    pub clip_duration_seconds: f64,
    /// Clamp applied before the log; the log-domain mask value is `ln(log_floor)`.
    pub log_floor: f64,
}

impl MelSpec {
    pub fn n_frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_bins(&self) -> usize {
        self.data.ncols()
    }

    /// Fill value used by masking and shifting: 0 for linear, `ln(floor)` for log.
    pub fn mask_value(&self) -> f64 {
        match self.domain {
            SpecDomain::LinearMagnitude => 0.0,
            SpecDomain::LogMagnitude => self.log_floor.ln(),
        }
    }

    pub fn to_linear(&self) -> MelSpec {
        match self.domain {
            SpecDomain::LinearMagnitude => self.clone(),
            SpecDomain::LogMagnitude => MelSpec {
                data: self.data.mapv(f64::exp),
                domain: SpecDomain::LinearMagnitude,
                ..*self
            },
        }
    }

    pub fn to_log(&self) -> MelSpec {
        match self.domain {
            SpecDomain::LogMagnitude => self.clone(),
            SpecDomain::LinearMagnitude => {
                let floor = self.log_floor;
                MelSpec {
                    data: self.data.mapv(|x| x.max(floor).ln()),
                    domain: SpecDomain::LogMagnitude,
                    ..*self
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hop_seconds > 0.0 && self.clip_duration_seconds > 0.0) {
            return Err(SedError::InvalidConfig(
                "hop_seconds and clip_duration_seconds must be positive".into(),
            ));
        }
        if self.data.iter().any(|x| !x.is_finite()) {
            return Err(SedError::InvalidWaveform("non-finite feature entry".into()));
        }
        if self.domain == SpecDomain::LinearMagnitude && self.data.iter().any(|&x| x < 0.0) {
            return Err(SedError::DomainMismatch {
                expected: "non-negative linear-magnitude",
            });
        }
        Ok(())
    }
}

/// Scales samples so the peak absolute value is 1. Silent clips pass through.
pub fn normalize_waveform(w: &Waveform) -> Result<Waveform> {
    w.validate()?;
    let peak = w.samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak == 0.0 {
        return Ok(w.clone());
    }
    Ok(Waveform {
        samples: w.samples.iter().map(|s| s / peak).collect(),
        sample_rate: w.sample_rate,
    })
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Peak (center) frequencies in Hz of the `n_mels` triangular filters.
pub fn mel_center_frequencies(cfg: &FrontendConfig) -> Vec<f64> {
    mel_edges(cfg)[1..=cfg.n_mels].to_vec()
}

fn mel_edges(cfg: &FrontendConfig) -> Vec<f64> {
    let mel_max = hz_to_mel(cfg.sample_rate as f64 / 2.0);
    let n = cfg.n_mels + 1;
    (0..=n)
        .map(|i| mel_to_hz(mel_max * i as f64 / n as f64))
        .collect()
}

/// Triangular HTK mel filterbank of shape `(n_mels, n_fft/2 + 1)`.
///
/// Each row rises linearly from its lower edge to its center and falls to
/// its upper edge; rows are scaled so the largest sampled weight is exactly 1
/// (no area normalization).
pub fn mel_filterbank(cfg: &FrontendConfig) -> Result<Array2<f64>> {
    cfg.validate()?;
    let n_freqs = cfg.n_freqs();
    let edges = mel_edges(cfg);
    let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
    let mut fb = Array2::<f64>::zeros((cfg.n_mels, n_freqs));
    for (m, mut row) in fb.axis_iter_mut(Axis(0)).enumerate() {
        let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        for (k, w) in row.iter_mut().enumerate() {
            let f = k as f64 * bin_hz;
            let rising = (f - lo) / (center - lo);
            let falling = (hi - f) / (hi - center);
            *w = rising.min(falling).max(0.0);
        }
        let peak = row.iter().cloned().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(SedError::DegenerateFilterbank { row: m });
        }
        row.mapv_inplace(|w| w / peak);
    }
    Ok(fb)
}

/// Number of centered frames for `n_samples` at `hop`.
pub fn frame_count(n_samples: usize, hop: usize) -> usize {
    n_samples / hop + 1
}

pub fn hann_window(n: usize) -> Vec<f64> {
    // periodic Hann, the usual STFT analysis window
    (0..n)
        .map(|i| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos())
        .collect()
}

/// Reusable log-mel extractor; holds the filterbank, window and FFT plan.
pub struct LogMelExtractor {
    cfg: FrontendConfig,
    filterbank: Array2<f64>,
    window: Vec<f64>,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl LogMelExtractor {
    pub fn new(cfg: FrontendConfig) -> Result<Self> {
        let filterbank = mel_filterbank(&cfg)?;
        let window = hann_window(cfg.n_fft);
        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(Self {
            cfg,
            filterbank,
            window,
            fft,
        })
    }

    pub fn config(&self) -> &FrontendConfig {
        &self.cfg
    }

    pub fn filterbank(&self) -> &Array2<f64> {
        &self.filterbank
    }

    /// Linear mel magnitudes, shape `(frames, n_mels)`.
    pub fn mel_magnitude(&self, w: &Waveform) -> Result<MelSpec> {
        w.validate()?;
        if w.sample_rate != self.cfg.sample_rate {
            return Err(SedError::InvalidConfig(format!(
                "waveform sample rate {} does not match configured {}",
                w.sample_rate, self.cfg.sample_rate
            )));
        }
        let n = w.samples.len();
        let pad = self.cfg.n_fft / 2;
        if n <= pad {
            return Err(SedError::ClipTooShort { samples: n, pad });
        }
        let padded = reflect_pad(&w.samples, pad);
        let frames = frame_count(n, self.cfg.hop);
        let mut spectrum = Array2::<f64>::zeros((frames, self.cfg.n_freqs()));
        let mut buf = vec![Complex::new(0.0, 0.0); self.cfg.n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for (t, mut row) in spectrum.axis_iter_mut(Axis(0)).enumerate() {
            let start = t * self.cfg.hop;
            for (i, c) in buf.iter_mut().enumerate() {
                *c = Complex::new(padded[start + i] * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, v) in row.iter_mut().enumerate() {
                *v = buf[k].norm();
            }
        }
        let data = spectrum.dot(&self.filterbank.t());
        Ok(MelSpec {
            data,
            domain: SpecDomain::LinearMagnitude,
            hop_seconds: self.cfg.hop_seconds(),
            clip_duration_seconds: w.duration_seconds(),
            log_floor: self.cfg.log_floor,
        })
    }

    pub fn log_mel(&self, w: &Waveform) -> Result<MelSpec> {
        Ok(self.mel_magnitude(w)?.to_log())
    }
}

fn reflect_pad(x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = Vec::with_capacity(n + 2 * pad);
    out.extend((1..=pad).rev().map(|i| x[i]));
    out.extend_from_slice(x);
    out.extend((0..pad).map(|i| x[n - 2 - i]));
    out
}

/// One-shot log-mel; prefer [`LogMelExtractor`] when featurizing many clips.
pub fn log_mel(w: &Waveform, cfg: &FrontendConfig) -> Result<MelSpec> {
    LogMelExtractor::new(cfg.clone())?.log_mel(w)
}
