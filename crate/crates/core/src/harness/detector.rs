use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::synth::{SceneSpec, SourceKind};
use crate::error::{Result, SedError};
use crate::frontend::{mel_center_frequencies, FrontendConfig, MelSpec};
use crate::postprocess::ScoreMatrix;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

/// Mel bins `[bin_lo, bin_hi)` carrying a class's energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTemplate {
    pub name: String,
    pub bin_lo: usize,
    pub bin_hi: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyDetectorConfig {
    pub classes: Vec<ClassTemplate>,
    pub temperature: f64,
    #[serde(default)]
    pub bias: f64,
    #[serde(default = "default_reference_quantile")]
    pub reference_quantile: f64,
    #[serde(default)]
    pub weak_pooling: Pooling,
}

fn default_reference_quantile() -> f64 {
    0.25
}

/// Half-width of a tone template, as a frequency ratio.
const TONE_SPREAD: f64 = 1.06;

impl ToyDetectorConfig {
    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    /// Templates covering each prototype's band on the given mel grid.
    pub fn for_scene(scene: &SceneSpec, frontend: &FrontendConfig) -> Result<Self> {
        frontend.validate()?;
        let centers = mel_center_frequencies(frontend);
        let classes = scene
            .classes
            .iter()
            .map(|c| {
                let (lo, hi, target) = match c.source {
                    SourceKind::Tone { freq_hz } => (freq_hz / TONE_SPREAD, freq_hz * TONE_SPREAD, freq_hz),
                    SourceKind::NoiseBurst { low_hz, high_hz } => (low_hz, high_hz, 0.5 * (low_hz + high_hz)),
                };
                let inside: Vec<usize> = (0..centers.len())
                    .filter(|&m| centers[m] >= lo && centers[m] <= hi)
                    .collect();
                let (bin_lo, bin_hi) = match (inside.first(), inside.last()) {
                    (Some(&a), Some(&b)) => (a, b + 1),
                    _ => {
                        let nearest = (0..centers.len())
                            .min_by(|&a, &b| {
                                (centers[a] - target).abs().total_cmp(&(centers[b] - target).abs())
                            })
                            .unwrap_or(0);
                        (nearest, nearest + 1)
                    }
                };
                ClassTemplate {
                    name: c.name.clone(),
                    bin_lo,
                    bin_hi,
                }
            })
            .collect();
        Ok(Self {
            classes,
            temperature: 4.0,
            bias: 1.0,
            reference_quantile: default_reference_quantile(),
            weak_pooling: Pooling::Max,
        })
    }

    pub fn validate(&self, n_bins: usize) -> Result<()> {
        if self.classes.is_empty() {
            return Err(SedError::InvalidConfig("detector needs at least one class".into()));
        }
        for c in &self.classes {
            if c.bin_lo >= c.bin_hi || c.bin_hi > n_bins {
                return Err(SedError::InvalidConfig(format!(
                    "template `{}` bins [{}, {}) invalid for {} mel bins",
                    c.name, c.bin_lo, c.bin_hi, n_bins
                )));
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite() && self.bias.is_finite()) {
            return Err(SedError::InvalidConfig("temperature must be finite and >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.reference_quantile) {
            return Err(SedError::InvalidConfig("reference_quantile must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Keeps scores strictly inside (0, 1) where the logistic saturates.
const SCORE_EPS: f64 = 1e-12;

fn logistic(x: f64) -> f64 {
    (1.0 / (1.0 + (-x).exp())).clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// Scores each frame by how far the class band's mean log energy rises above
/// its own low quantile, in units of the clip's log-energy spread.
pub fn toy_detect(spec: &MelSpec, cfg: &ToyDetectorConfig) -> Result<ScoreMatrix> {
    spec.validate()?;
    cfg.validate(spec.n_bins())?;
    let log = spec.to_log();
    let x = &log.data;
    let t = x.nrows();
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let sigma = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
    let mut strong = Array2::<f64>::zeros((t, cfg.classes.len()));
    let mut weak = Vec::with_capacity(cfg.classes.len());
    for (c, tpl) in cfg.classes.iter().enumerate() {
        let width = (tpl.bin_hi - tpl.bin_lo) as f64;
        let band: Vec<f64> = (0..t)
            .map(|f| (tpl.bin_lo..tpl.bin_hi).map(|m| x[[f, m]]).sum::<f64>() / width)
            .collect();
        let reference = quantile(&band, cfg.reference_quantile);
        for (f, b) in band.iter().enumerate() {
            let z = if sigma > 0.0 { (b - reference) / sigma } else { 0.0 };
            strong[[f, c]] = logistic(cfg.temperature * (z - cfg.bias));
        }
        let col = strong.column(c);
        weak.push(match cfg.weak_pooling {
            Pooling::Max => col.iter().cloned().fold(0.0, f64::max),
            Pooling::Mean => col.sum() / t as f64,
        });
    }
    let scores = ScoreMatrix {
        strong,
        weak,
        hop_seconds: spec.hop_seconds,
        clip_duration_seconds: spec.clip_duration_seconds,
        class_names: cfg.class_names(),
    };
    scores.validate()?;
    Ok(scores)
}
