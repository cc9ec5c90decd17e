//! From frame-level scores to event lists.
//!
//! The strong decode path is threshold → optional weak prediction masking →
//! median filter → run-length decoding. Weak SED skips the frame scores and
//! emits one full-clip event per class whose weak score clears its threshold.

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};

/// Binary activity, shape `(classes, frames)`.
pub type ActivityGrid = Array2<bool>;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    /// Shape `(frames, classes)`.
    pub strong: Array2<f64>,
    pub weak: Vec<f64>,
    pub hop_seconds: f64,
    pub clip_duration_seconds: f64,
    pub class_names: Vec<String>,
}

impl ScoreMatrix {
    pub fn n_frames(&self) -> usize {
        self.strong.nrows()
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let c = self.class_names.len();
        if self.strong.ncols() != c || self.weak.len() != c {
            return Err(SedError::ShapeMismatch(format!(
                "scores: {} classes, strong has {} columns, weak has {} entries",
                c,
                self.strong.ncols(),
                self.weak.len()
            )));
        }
        if !(self.hop_seconds > 0.0 && self.clip_duration_seconds > 0.0) {
            return Err(SedError::InvalidConfig(
                "hop_seconds and clip_duration_seconds must be positive".into(),
            ));
        }
        let in_unit = |x: &f64| (0.0..=1.0).contains(x);
        if !self.strong.iter().all(in_unit) || !self.weak.iter().all(in_unit) {
            return Err(SedError::InvalidConfig("scores must lie in [0, 1]".into()));
        }
        if (self.n_frames() as f64) * self.hop_seconds < self.clip_duration_seconds - self.hop_seconds - 1e-9 {
            return Err(SedError::ShapeMismatch(format!(
                "{} frames of {} s do not cover a {} s clip",
                self.n_frames(),
                self.hop_seconds,
                self.clip_duration_seconds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub class_name: String,
    pub onset: f64,
    pub offset: f64,
}

impl Event {
    pub fn new(class_name: impl Into<String>, onset: f64, offset: f64) -> Self {
        Self {
            class_name: class_name.into(),
            onset,
            offset,
        }
    }

    pub fn duration(&self) -> f64 {
        self.offset - self.onset
    }
}

/// A single threshold shared by all classes, or one per class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Threshold {
    Shared(f64),
    PerClass(Vec<f64>),
}

impl Default for Threshold {
    fn default() -> Self {
        Threshold::Shared(0.5)
    }
}

impl Threshold {
    pub fn resolve(&self, n_classes: usize) -> Result<Vec<f64>> {
        let v = match self {
            Threshold::Shared(t) => vec![*t; n_classes],
            Threshold::PerClass(v) => {
                if v.len() != n_classes {
                    return Err(SedError::InvalidConfig(format!(
                        "{} per-class thresholds for {} classes",
                        v.len(),
                        n_classes
                    )));
                }
                v.clone()
            }
        };
        if let Some(t) = v.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(SedError::InvalidConfig(format!(
                "threshold {t} outside the open interval (0, 1)"
            )));
        }
        Ok(v)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    #[default]
    Strong,
    WeakSed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub threshold: Threshold,
    pub median_len: usize,
    pub weak_masking: bool,
    pub mode: DecodeMode,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            threshold: Threshold::default(),
            median_len: 7,
            weak_masking: true,
            mode: DecodeMode::Strong,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        check_median_len(self.median_len)
    }
}

fn check_median_len(len: usize) -> Result<()> {
    if len == 0 || len % 2 == 0 {
        return Err(SedError::InvalidConfig(format!(
            "median filter length must be odd and at least 1, got {len}"
        )));
    }
    Ok(())
}

fn check_thresholds(scores: &ScoreMatrix, thresholds: &[f64]) -> Result<()> {
    if thresholds.len() != scores.n_classes() {
        return Err(SedError::InvalidConfig(format!(
            "{} thresholds for {} classes",
            thresholds.len(),
            scores.n_classes()
        )));
    }
    Ok(())
}

/// `grid[c, t]` is set iff `strong[t, c] >= threshold[c]`.
pub fn binarize(scores: &ScoreMatrix, thresholds: &[f64]) -> Result<ActivityGrid> {
    check_thresholds(scores, thresholds)?;
    Ok(Array2::from_shape_fn(
        (scores.n_classes(), scores.n_frames()),
        |(c, t)| scores.strong[[t, c]] >= thresholds[c],
    ))
}

/// Like [`binarize`], with every class whose weak score misses its threshold
/// zeroed out.
pub fn apply_weak_masking(scores: &ScoreMatrix, thresholds: &[f64]) -> Result<ActivityGrid> {
    let mut grid = binarize(scores, thresholds)?;
    for (c, mut row) in grid.axis_iter_mut(Axis(0)).enumerate() {
        if scores.weak[c] < thresholds[c] {
            row.fill(false);
        }
    }
    Ok(grid)
}

/// Per-class sliding majority vote of odd width; frames outside the clip count as inactive.
pub fn median_filter(grid: &ActivityGrid, median_len: usize) -> Result<ActivityGrid> {
    check_median_len(median_len)?;
    if median_len == 1 {
        return Ok(grid.clone());
    }
    let half = median_len / 2;
    let frames = grid.ncols();
    let mut out = Array2::from_elem(grid.dim(), false);
    for (src, mut dst) in grid.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        // prefix sums of active frames
        let mut prefix = Vec::with_capacity(frames + 1);
        prefix.push(0usize);
        for &x in src.iter() {
            prefix.push(prefix.last().unwrap() + x as usize);
        }
        for (t, d) in dst.iter_mut().enumerate() {
            let lo = t.saturating_sub(half);
            let hi = (t + half + 1).min(frames);
            *d = prefix[hi] - prefix[lo] > half;
        }
    }
    Ok(out)
}

/// Turns each maximal run of active frames into an event, sorted by class
/// index then onset.
pub fn decode_events(
    grid: &ActivityGrid,
    hop_seconds: f64,
    clip_duration_seconds: f64,
    class_names: &[String],
) -> Result<Vec<Event>> {
    if grid.nrows() != class_names.len() {
        return Err(SedError::ShapeMismatch(format!(
            "grid has {} rows for {} classes",
            grid.nrows(),
            class_names.len()
        )));
    }
    let mut events = Vec::new();
    for (row, name) in grid.axis_iter(Axis(0)).zip(class_names) {
        let mut start = None;
        for t in 0..=row.len() {
            let active = t < row.len() && row[t];
            match (active, start) {
                (true, None) => start = Some(t),
                (false, Some(t0)) => {
                    let onset = t0 as f64 * hop_seconds;
                    let offset = (t as f64 * hop_seconds).min(clip_duration_seconds);
                    if offset > onset {
                        events.push(Event::new(name.clone(), onset, offset));
                    }
                    start = None;
                }
                _ => {}
            }
        }
    }
    Ok(events)
}

/// Full-clip events for every class whose weak score clears its threshold.
pub fn weak_sed_events(scores: &ScoreMatrix, thresholds: &[f64]) -> Result<Vec<Event>> {
    check_thresholds(scores, thresholds)?;
    Ok(scores
        .class_names
        .iter()
        .zip(&scores.weak)
        .zip(thresholds)
        .filter(|((_, w), t)| *w >= *t)
        .map(|((name, _), _)| Event::new(name.clone(), 0.0, scores.clip_duration_seconds))
        .collect())
}

/// The full decode for one clip under `cfg`.
pub fn decode(scores: &ScoreMatrix, cfg: &DecodeConfig) -> Result<Vec<Event>> {
    cfg.validate()?;
    let thresholds = cfg.threshold.resolve(scores.n_classes())?;
    decode_with_thresholds(scores, cfg, &thresholds)
}

pub(crate) fn decode_with_thresholds(
    scores: &ScoreMatrix,
    cfg: &DecodeConfig,
    thresholds: &[f64],
) -> Result<Vec<Event>> {
    match cfg.mode {
        DecodeMode::WeakSed => weak_sed_events(scores, thresholds),
        DecodeMode::Strong => {
            let grid = if cfg.weak_masking {
                apply_weak_masking(scores, thresholds)?
            } else {
                binarize(scores, thresholds)?
            };
            let grid = median_filter(&grid, cfg.median_len)?;
            decode_events(
                &grid,
                scores.hop_seconds,
                scores.clip_duration_seconds,
                &scores.class_names,
            )
        }
    }
}

/// Inverse of [`decode_events`] for frame-aligned events: frame `t` is active
/// when `[t*hop, (t+1)*hop)` lies inside an event after rounding the event
/// edges to the nearest frame boundary.
pub fn rasterize_events(
    events: &[Event],
    class_names: &[String],
    n_frames: usize,
    hop_seconds: f64,
) -> Result<ActivityGrid> {
    let mut grid = Array2::from_elem((class_names.len(), n_frames), false);
    for e in events {
        let c = class_names
            .iter()
            .position(|n| *n == e.class_name)
            .ok_or_else(|| SedError::UnknownClass(e.class_name.clone()))?;
        let t0 = ((e.onset / hop_seconds).round() as usize).min(n_frames);
        let t1 = ((e.offset / hop_seconds).round() as usize).min(n_frames);
        for t in t0..t1 {
            grid[[c, t]] = true;
        }
    }
    Ok(grid)
}
