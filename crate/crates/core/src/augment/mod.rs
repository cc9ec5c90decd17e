//! Spectrogram augmentations and their label co-transforms.
//!
//! Label-preserving ops ([`filter_augment`], [`freq_mask`],
//! [`add_gaussian_noise`]) touch features only. Label-altering ops
//! ([`time_mask`], [`frame_shift`], [`mixup`]) transform a [`LabelSet`]
//! alongside the features. [`make_student_teacher_views`] combines both kinds
//! into paired inputs for a mean-teacher style training loop.

mod presets;
mod views;

use std::ops::Range;

use ndarray::{s, Array2, Axis};
use rand_distr::{Beta, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::frontend::{MelSpec, SpecDomain};
use crate::rng::Rng;

pub use presets::{preset, preset_names, ablation_grid, NamedPreset, ABLATION_PRESETS};
pub use views::{apply_label_preserving, make_student_teacher_views, StudentTeacherViews};

/// Strong (class × frame), weak (per class) labels for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    /// Shape `(classes, frames)`, entries in `[0, 1]`.
    pub strong: Array2<f64>,
    pub weak: Vec<f64>,
    pub class_names: Vec<String>,
}

impl LabelSet {
    pub fn new(strong: Array2<f64>, weak: Vec<f64>, class_names: Vec<String>) -> Result<Self> {
        let l = Self {
            strong,
            weak,
            class_names,
        };
        l.validate()?;
        Ok(l)
    }

    /// Hard labels from a strong grid; weak is the per-class max.
    pub fn from_strong(strong: Array2<f64>, class_names: Vec<String>) -> Result<Self> {
        let weak = per_class_max(&strong);
        Self::new(strong, weak, class_names)
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_frames(&self) -> usize {
        self.strong.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.class_names.len();
        if self.strong.nrows() != c || self.weak.len() != c {
            return Err(SedError::ShapeMismatch(format!(
                "labels: {} class names, strong has {} rows, weak has {} entries",
                c,
                self.strong.nrows(),
                self.weak.len()
            )));
        }
        let in_unit = |x: &f64| (0.0..=1.0).contains(x);
        if !self.strong.iter().all(in_unit) || !self.weak.iter().all(in_unit) {
            return Err(SedError::InvalidConfig("label entries must lie in [0, 1]".into()));
        }
        Ok(())
    }

    pub fn is_hard(&self) -> bool {
        self.strong.iter().all(|&x| x == 0.0 || x == 1.0)
    }

    /// After a destructive edit of labels that were hard before it,
    /// weak = per-class max of strong. Soft labels keep their weak vector.
    fn refresh_weak(&mut self, was_hard: bool) {
        if was_hard {
            self.weak = per_class_max(&self.strong);
        }
    }
}

fn per_class_max(strong: &Array2<f64>) -> Vec<f64> {
    strong
        .axis_iter(Axis(0))
        .map(|row| row.iter().cloned().fold(0.0, f64::max))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterAugmentConfig {
    pub db_min: f64,
    pub db_max: f64,
    pub band_min: usize,
    pub band_max: usize,
}

impl Default for FilterAugmentConfig {
    fn default() -> Self {
        Self {
            db_min: -7.5,
            db_max: 6.0,
            band_min: 2,
            band_max: 4,
        }
    }
}

impl FilterAugmentConfig {
    pub fn validate(&self, n_bins: usize) -> Result<()> {
        if !(self.db_min.is_finite() && self.db_max.is_finite()) || self.db_min > self.db_max {
            return Err(SedError::InvalidConfig(format!(
                "filter_aug dB range [{}, {}] is empty",
                self.db_min, self.db_max
            )));
        }
        if self.band_min < 1 || self.band_min > self.band_max {
            return Err(SedError::InvalidConfig(format!(
                "filter_aug band range [{}, {}] is invalid",
                self.band_min, self.band_max
            )));
        }
        if self.band_max > n_bins {
            return Err(SedError::InvalidConfig(format!(
                "filter_aug band_max {} exceeds {} mel bins",
                self.band_max, n_bins
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub filter_aug: Option<FilterAugmentConfig>,
    pub freq_mask_max_bins: usize,
    pub time_mask_min_frames: usize,
    pub time_mask_max_frames: usize,
    pub frameshift_max_frames: usize,
    pub mixup_prob: f64,
    pub mixup_alpha: f64,
    pub noise_snr_db: Option<(f64, f64)>,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            filter_aug: None,
            freq_mask_max_bins: 0,
            time_mask_min_frames: 7,
            time_mask_max_frames: 30,
            frameshift_max_frames: 54,
            mixup_prob: 0.5,
            mixup_alpha: 0.2,
            noise_snr_db: None,
        }
    }
}

impl AugmentConfig {
    /// Every augmentation switched off; the view pipeline is the identity.
    pub fn disabled() -> Self {
        Self {
            filter_aug: None,
            freq_mask_max_bins: 0,
            time_mask_min_frames: 0,
            time_mask_max_frames: 0,
            frameshift_max_frames: 0,
            mixup_prob: 0.0,
            mixup_alpha: 0.2,
            noise_snr_db: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SedError::InvalidConfig(m));
        if self.time_mask_min_frames > self.time_mask_max_frames {
            return bad("time_mask_min_frames exceeds time_mask_max_frames".into());
        }
        if !(0.0..=1.0).contains(&self.mixup_prob) {
            return bad(format!("mixup_prob {} outside [0, 1]", self.mixup_prob));
        }
        if !(self.mixup_alpha > 0.0 && self.mixup_alpha.is_finite()) {
            return bad(format!("mixup_alpha {} must be positive", self.mixup_alpha));
        }
        if let Some((lo, hi)) = self.noise_snr_db {
            if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                return bad(format!("noise_snr_db range ({lo}, {hi}) is empty"));
            }
        }
        Ok(())
    }

    pub fn has_label_preserving(&self) -> bool {
        self.filter_aug.is_some() || self.freq_mask_max_bins > 0 || self.noise_snr_db.is_some()
    }
}

/// A realized FilterAugment draw: contiguous bands and their gains in dB.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBands {
    /// Sorted interior boundaries; band `i` spans `[edges[i], edges[i+1])`
    /// with implicit outer edges `0` and `n_bins`.
    pub boundaries: Vec<usize>,
    pub gains_db: Vec<f64>,
    pub n_bins: usize,
}

impl FilterBands {
    pub fn bands(&self) -> Vec<Range<usize>> {
        let mut edges = Vec::with_capacity(self.boundaries.len() + 2);
        edges.push(0);
        edges.extend_from_slice(&self.boundaries);
        edges.push(self.n_bins);
        edges.windows(2).map(|w| w[0]..w[1]).collect()
    }

    /// Gain in dB for every mel bin.
    pub fn per_bin_db(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_bins];
        for (band, g) in self.bands().into_iter().zip(&self.gains_db) {
            out[band].fill(*g);
        }
        out
    }
}

/// Draws band count, boundaries and per-band gains for an `n_bins` spectrogram.
pub fn draw_filter_bands(n_bins: usize, cfg: &FilterAugmentConfig, rng: &mut Rng) -> Result<FilterBands> {
    cfg.validate(n_bins)?;
    let n_bands = rng.uniform_int(cfg.band_min, cfg.band_max);
    let mut boundaries: Vec<usize> = rng
        .sample_indices(n_bins - 1, n_bands - 1)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    boundaries.sort_unstable();
    let gains_db = (0..n_bands)
        .map(|_| rng.uniform(cfg.db_min, cfg.db_max))
        .collect();
    Ok(FilterBands {
        boundaries,
        gains_db,
        n_bins,
    })
}

/// Applies realized bands: multiplicative amplitude gain on linear input,
/// the equivalent additive offset `g ln(10) / 20` on log input.
pub fn apply_filter_bands(spec: &MelSpec, bands: &FilterBands) -> Result<MelSpec> {
    if bands.n_bins != spec.n_bins() {
        return Err(SedError::ShapeMismatch(format!(
            "filter bands drawn for {} bins, spectrogram has {}",
            bands.n_bins,
            spec.n_bins()
        )));
    }
    let mut out = spec.clone();
    for (band, g) in bands.bands().into_iter().zip(&bands.gains_db) {
        let mut view = out.data.slice_mut(s![.., band]);
        match spec.domain {
            SpecDomain::LinearMagnitude => {
                let factor = 10f64.powf(g / 20.0);
                view.mapv_inplace(|x| x * factor);
            }
            SpecDomain::LogMagnitude => {
                let offset = g * std::f64::consts::LN_10 / 20.0;
                view.mapv_inplace(|x| x + offset);
            }
        }
    }
    Ok(out)
}

/// FilterAugment on a linear-magnitude mel spectrogram.
pub fn filter_augment(spec: &MelSpec, cfg: &FilterAugmentConfig, rng: &mut Rng) -> Result<MelSpec> {
    if spec.domain != SpecDomain::LinearMagnitude {
        return Err(SedError::DomainMismatch {
            expected: "linear-magnitude",
        });
    }
    let bands = draw_filter_bands(spec.n_bins(), cfg, rng)?;
    apply_filter_bands(spec, &bands)
}

/// FilterAugment on a log-magnitude spectrogram, using the same draws as
/// [`filter_augment`] would for the same generator state.
pub fn filter_augment_log(spec: &MelSpec, cfg: &FilterAugmentConfig, rng: &mut Rng) -> Result<MelSpec> {
    if spec.domain != SpecDomain::LogMagnitude {
        return Err(SedError::DomainMismatch {
            expected: "log-magnitude",
        });
    }
    let bands = draw_filter_bands(spec.n_bins(), cfg, rng)?;
    apply_filter_bands(spec, &bands)
}

/// Masks one contiguous span of mel bins of width `0..=max_bins`.
pub fn freq_mask(spec: &MelSpec, max_bins: usize, rng: &mut Rng) -> Result<MelSpec> {
    let m = spec.n_bins();
    if max_bins > m {
        return Err(SedError::InvalidConfig(format!(
            "freq mask max_bins {max_bins} exceeds {m} mel bins"
        )));
    }
    let width = rng.uniform_int(0, max_bins);
    let start = rng.uniform_int(0, m - width);
    Ok(freq_mask_at(spec, start, width))
}

pub fn freq_mask_at(spec: &MelSpec, start: usize, width: usize) -> MelSpec {
    let mut out = spec.clone();
    let fill = spec.mask_value();
    let end = (start + width).min(spec.n_bins());
    out.data.slice_mut(s![.., start..end]).fill(fill);
    out
}

fn check_pair(spec: &MelSpec, labels: &LabelSet) -> Result<()> {
    labels.validate()?;
    if labels.n_frames() != spec.n_frames() {
        return Err(SedError::ShapeMismatch(format!(
            "labels have {} frames, features have {}",
            labels.n_frames(),
            spec.n_frames()
        )));
    }
    Ok(())
}

/// Masks a random run of frames in both features and strong labels.
pub fn time_mask(
    spec: &MelSpec,
    labels: &LabelSet,
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<(MelSpec, LabelSet)> {
    check_pair(spec, labels)?;
    if cfg.time_mask_min_frames > cfg.time_mask_max_frames {
        return Err(SedError::InvalidConfig(
            "time_mask_min_frames exceeds time_mask_max_frames".into(),
        ));
    }
    let t = spec.n_frames();
    let len = rng
        .uniform_int(cfg.time_mask_min_frames, cfg.time_mask_max_frames)
        .min(t);
    let start = rng.uniform_int(0, t - len);
    time_mask_at(spec, labels, start, len)
}

pub fn time_mask_at(
    spec: &MelSpec,
    labels: &LabelSet,
    start: usize,
    len: usize,
) -> Result<(MelSpec, LabelSet)> {
    check_pair(spec, labels)?;
    let end = (start + len).min(spec.n_frames());
    let mut out = spec.clone();
    out.data.slice_mut(s![start..end, ..]).fill(spec.mask_value());
    let mut lab = labels.clone();
    lab.strong.slice_mut(s![.., start..end]).fill(0.0);
    lab.refresh_weak(labels.is_hard());
    Ok((out, lab))
}

/// Shifts features and strong labels by a random whole number of frames.
pub fn frame_shift(
    spec: &MelSpec,
    labels: &LabelSet,
    max_frames: usize,
    rng: &mut Rng,
) -> Result<(MelSpec, LabelSet)> {
    check_pair(spec, labels)?;
    if max_frames >= spec.n_frames() {
        return Err(SedError::InvalidConfig(format!(
            "frameshift max {} must be below the {} frames of the clip",
            max_frames,
            spec.n_frames()
        )));
    }
    let m = max_frames as i64;
    let shift = rng.uniform_i64(-m, m);
    shift_frames(spec, labels, shift)
}

/// Moves content `shift` frames later (earlier when negative); vacated frames
/// take the mask value and zero labels, content pushed past an edge is dropped.
pub fn shift_frames(spec: &MelSpec, labels: &LabelSet, shift: i64) -> Result<(MelSpec, LabelSet)> {
    check_pair(spec, labels)?;
    let t = spec.n_frames() as i64;
    let mut out = spec.clone();
    out.data.fill(spec.mask_value());
    let mut lab = labels.clone();
    lab.strong.fill(0.0);
    let (src, dst) = if shift >= 0 {
        (0..(t - shift).max(0), shift.min(t)..t)
    } else {
        ((-shift).min(t)..t, 0..(t + shift).max(0))
    };
    let (src, dst) = (
        src.start as usize..src.end as usize,
        dst.start as usize..dst.end as usize,
    );
    out.data
        .slice_mut(s![dst.clone(), ..])
        .assign(&spec.data.slice(s![src.clone(), ..]));
    lab.strong
        .slice_mut(s![.., dst])
        .assign(&labels.strong.slice(s![.., src]));
    lab.refresh_weak(labels.is_hard());
    Ok((out, lab))
}

/// Convex combination `lambda * a + (1 - lambda) * b` of features, strong and weak labels.
pub fn mix(
    a: (&MelSpec, &LabelSet),
    b: (&MelSpec, &LabelSet),
    lambda: f64,
) -> Result<(MelSpec, LabelSet)> {
    let ((sa, la), (sb, lb)) = (a, b);
    if sa.data.dim() != sb.data.dim() || la.strong.dim() != lb.strong.dim() {
        return Err(SedError::ShapeMismatch(format!(
            "mixup operands differ: features {:?} vs {:?}, labels {:?} vs {:?}",
            sa.data.dim(),
            sb.data.dim(),
            la.strong.dim(),
            lb.strong.dim()
        )));
    }
    if sa.domain != sb.domain {
        return Err(SedError::DomainMismatch {
            expected: "matching feature domains for mixup",
        });
    }
    if la.class_names != lb.class_names {
        return Err(SedError::ShapeMismatch("mixup operands use different class lists".into()));
    }
    let mu = 1.0 - lambda;
    let mut spec = sa.clone();
    spec.data = &sa.data * lambda + &sb.data * mu;
    let mut labels = la.clone();
    labels.strong = (&la.strong * lambda + &lb.strong * mu).mapv(|x| x.clamp(0.0, 1.0));
    labels.weak = la
        .weak
        .iter()
        .zip(&lb.weak)
        .map(|(x, y)| (lambda * x + mu * y).clamp(0.0, 1.0))
        .collect();
    Ok((spec, labels))
}

/// With probability `mixup_prob`, mixes `a` with `b` at `lambda ~ Beta(alpha, alpha)`.
pub fn mixup(
    a: (&MelSpec, &LabelSet),
    b: (&MelSpec, &LabelSet),
    cfg: &AugmentConfig,
    rng: &mut Rng,
) -> Result<(MelSpec, LabelSet)> {
    cfg.validate()?;
    if a.0.data.dim() != b.0.data.dim() || a.1.strong.dim() != b.1.strong.dim() {
        return Err(SedError::ShapeMismatch(format!(
            "mixup operands differ: {:?} vs {:?}",
            a.0.data.dim(),
            b.0.data.dim()
        )));
    }
    if rng.unit() >= cfg.mixup_prob {
        return Ok((a.0.clone(), a.1.clone()));
    }
    let beta = Beta::new(cfg.mixup_alpha, cfg.mixup_alpha)
        .map_err(|e| SedError::InvalidConfig(format!("mixup beta: {e}")))?;
    let lambda: f64 = rng.sample(&beta);
    mix(a, b, lambda)
}

pub fn sample_snr_db(range: (f64, f64), rng: &mut Rng) -> Result<f64> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(SedError::InvalidConfig(format!(
            "noise SNR range ({lo}, {hi}) is empty"
        )));
    }
    Ok(rng.uniform(lo, hi))
}

/// Adds i.i.d. Gaussian noise at `snr_db` relative to the mean squared entry.
pub fn add_noise_at_snr(spec: &MelSpec, snr_db: f64, rng: &mut Rng) -> Result<MelSpec> {
    let floor = spec.mask_value();
    if spec.data.iter().all(|&x| x == floor) {
        return Err(SedError::NoSignalPower);
    }
    let power = spec.data.iter().map(|x| x * x).sum::<f64>() / spec.data.len() as f64;
    let sigma = (power * 10f64.powf(-snr_db / 10.0)).sqrt();
    let linear = spec.domain == SpecDomain::LinearMagnitude;
    let mut out = spec.clone();
    for x in out.data.iter_mut() {
        let z: f64 = rng.sample(&StandardNormal);
        *x += sigma * z;
        // magnitudes stay non-negative
        if linear && *x < 0.0 {
            *x = 0.0;
        }
    }
    Ok(out)
}

pub fn add_gaussian_noise(spec: &MelSpec, snr_db: (f64, f64), rng: &mut Rng) -> Result<MelSpec> {
    let snr = sample_snr_db(snr_db, rng)?;
    add_noise_at_snr(spec, snr, rng)
}
