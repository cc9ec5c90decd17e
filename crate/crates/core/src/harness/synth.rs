use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::evaluate::{Detections, GroundTruth};
use crate::frontend::Waveform;
use crate::io;
use crate::postprocess::Event;
use crate::rng::Rng;

/// Peak amplitude of a rendered tone; noise bursts are matched to its RMS.
const EVENT_PEAK: f64 = 0.5;
const EDGE_SECONDS: f64 = 0.010;
/// Minimum silence between two events of the same class.
const SAME_CLASS_GAP: f64 = 0.1;
const MAX_PLACEMENT_TRIES: usize = 1000;
const NOISE_PARTIAL_SPACING_HZ: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceKind {
    Tone { freq_hz: f64 },
    NoiseBurst { low_hz: f64, high_hz: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventPrototype {
    pub name: String,
    #[serde(flatten)]
    pub source: SourceKind,
    pub min_duration: f64,
    pub max_duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub n_clips: usize,
    #[serde(default = "default_clip_seconds")]
    pub clip_seconds: f64,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: u32,
    pub classes: Vec<EventPrototype>,
    pub events_per_clip: (usize, usize),
    pub background_snr_db: f64,
    pub seed: u64,
}

fn default_clip_seconds() -> f64 {
    10.0
}

fn default_sample_rate() -> u32 {
    16_000
}

impl SceneSpec {
    pub fn class_names(&self) -> Vec<String> {
        self.classes.iter().map(|c| c.name.clone()).collect()
    }

    pub fn clip_id(index: usize) -> String {
        format!("clip_{index:04}.wav")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(SedError::InvalidConfig(m));
        if self.classes.is_empty() {
            return bad("scene needs at least one event class".into());
        }
        if !(self.clip_seconds > 0.0) || self.sample_rate == 0 {
            return bad("clip_seconds and sample_rate must be positive".into());
        }
        if self.events_per_clip.0 > self.events_per_clip.1 {
            return bad("events_per_clip minimum exceeds maximum".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        for c in &self.classes {
            if !(c.min_duration > 0.0 && c.min_duration <= c.max_duration) {
                return bad(format!("class `{}` has an invalid duration range", c.name));
            }
            if c.max_duration > self.clip_seconds {
                return bad(format!("class `{}` events are longer than the clip", c.name));
            }
            let ok = match c.source {
                SourceKind::Tone { freq_hz } => freq_hz > 0.0 && freq_hz < nyquist,
                SourceKind::NoiseBurst { low_hz, high_hz } => {
                    low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist
                }
            };
            if !ok {
                return bad(format!("class `{}` frequency band is outside (0, Nyquist)", c.name));
            }
        }
        let mut names = self.class_names();
        names.sort();
        names.dedup();
        if names.len() != self.classes.len() {
            return bad("class names must be unique".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthClip {
    pub clip_id: String,
    pub waveform: Waveform,
    /// Sorted by onset.
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub clips: Vec<SynthClip>,
    pub ground_truth: GroundTruth,
}

impl SynthDataset {
    /// Clip id → sorted class names present in the clip.
    pub fn weak_labels(&self) -> BTreeMap<String, Vec<String>> {
        self.clips
            .iter()
            .map(|c| {
                let mut names: Vec<String> = c.events.iter().map(|e| e.class_name.clone()).collect();
                names.sort();
                names.dedup();
                (c.clip_id.clone(), names)
            })
            .collect()
    }
}

fn to_ms(seconds: f64) -> i64 {
    (seconds * 1000.0).round() as i64
}

fn place_events(spec: &SceneSpec, rng: &mut Rng) -> Result<Vec<Event>> {
    let clip_ms = to_ms(spec.clip_seconds);
    let gap_ms = to_ms(SAME_CLASS_GAP);
    let n_events = rng.uniform_int(spec.events_per_clip.0, spec.events_per_clip.1);
    let mut placed: Vec<(usize, i64, i64)> = Vec::with_capacity(n_events);
    for _ in 0..n_events {
        let class = rng.uniform_int(0, spec.classes.len() - 1);
        let proto = &spec.classes[class];
        let dur = rng.uniform_i64(to_ms(proto.min_duration), to_ms(proto.max_duration));
        let mut slot = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let onset = rng.uniform_i64(0, clip_ms - dur);
            let clash = placed
                .iter()
                .any(|&(c, on, off)| c == class && onset < off + gap_ms && on < onset + dur + gap_ms);
            if !clash {
                slot = Some(onset);
                break;
            }
        }
        let onset = slot.ok_or_else(|| {
            SedError::PlacementFailure(format!(
                "could not fit a {} ms `{}` event after {} tries",
                dur, proto.name, MAX_PLACEMENT_TRIES
            ))
        })?;
        placed.push((class, onset, onset + dur));
    }
    placed.sort_by_key(|&(c, on, off)| (on, off, c));
    Ok(placed
        .into_iter()
        .map(|(c, on, off)| Event::new(spec.classes[c].name.clone(), on as f64 / 1000.0, off as f64 / 1000.0))
        .collect())
}

fn raised_cosine_gain(i: usize, len: usize, edge: usize) -> f64 {
    let edge = edge.min(len / 2).max(1);
    let from_edge = i.min(len - 1 - i);
    if from_edge >= edge {
        1.0
    } else {
        0.5 - 0.5 * (PI * (from_edge as f64 + 0.5) / edge as f64).cos()
    }
}

/// Renders background noise plus the given events. Event times are taken
/// as-is; labels are exactly `events`.
pub fn render_clip(events: &[Event], spec: &SceneSpec, rng: &mut Rng) -> Result<Waveform> {
    let sr = spec.sample_rate as f64;
    let n = (spec.clip_seconds * sr).round() as usize;
    let event_rms = EVENT_PEAK / 2f64.sqrt();
    let noise_sigma = event_rms * 10f64.powf(-spec.background_snr_db / 20.0);
    let mut samples: Vec<f64> = (0..n)
        .map(|_| noise_sigma * rng.sample::<f64, _>(&StandardNormal))
        .collect();
    let edge = (EDGE_SECONDS * sr).round() as usize;
    for e in events {
        let proto = spec
            .classes
            .iter()
            .find(|c| c.name == e.class_name)
            .ok_or_else(|| SedError::UnknownClass(e.class_name.clone()))?;
        let start = (e.onset * sr).round() as usize;
        let end = ((e.offset * sr).round() as usize).min(n);
        if start >= end {
            continue;
        }
        let len = end - start;
        let signal: Vec<f64> = match proto.source {
            SourceKind::Tone { freq_hz } => {
                let phase = rng.uniform(0.0, 2.0 * PI);
                (0..len)
                    .map(|i| EVENT_PEAK * (2.0 * PI * freq_hz * i as f64 / sr + phase).sin())
                    .collect()
            }
            SourceKind::NoiseBurst { low_hz, high_hz } => {
                let partials = ((high_hz - low_hz) / NOISE_PARTIAL_SPACING_HZ).floor() as usize + 1;
                let comps: Vec<(f64, f64)> = (0..partials)
                    .map(|k| (low_hz + k as f64 * NOISE_PARTIAL_SPACING_HZ, rng.uniform(0.0, 2.0 * PI)))
                    .collect();
                // equal-power partials, scaled to the tone's RMS
                let amp = event_rms * (2.0 / partials as f64).sqrt();
                (0..len)
                    .map(|i| {
                        let t = i as f64 / sr;
                        comps.iter().map(|(f, p)| (2.0 * PI * f * t + p).sin()).sum::<f64>() * amp
                    })
                    .collect()
            }
        };
        for (i, s) in signal.into_iter().enumerate() {
            samples[start + i] += s * raised_cosine_gain(i, len, edge);
        }
    }
    Waveform::new(samples, spec.sample_rate)
}

/// Generates every clip of the scene. Clip `i` draws from stream `i` of the
/// scene seed, so output is independent of thread count.
pub fn synthesize(spec: &SceneSpec) -> Result<SynthDataset> {
    spec.validate()?;
    let clips: Vec<SynthClip> = (0..spec.n_clips)
        .into_par_iter()
        .map(|i| {
            let base = Rng::new(spec.seed, i as u64);
            let events = place_events(spec, &mut base.substream(0))?;
            let waveform = render_clip(&events, spec, &mut base.substream(1))?;
            Ok(SynthClip {
                clip_id: SceneSpec::clip_id(i),
                waveform,
                events,
            })
        })
        .collect::<Result<_>>()?;
    let ground_truth = GroundTruth::new(
        clips
            .iter()
            .flat_map(|c| c.events.iter().map(|e| (c.clip_id.clone(), e.clone())))
            .collect(),
        clips
            .iter()
            .map(|c| (c.clip_id.clone(), c.waveform.duration_seconds()))
            .collect(),
        spec.class_names(),
    )?;
    Ok(SynthDataset {
        clips,
        ground_truth,
    })
}

/// Writes `audio/<clip>.wav`, `gt.tsv`, `weak.tsv` and `durations.csv` under `dir`.
pub fn write_dataset(ds: &SynthDataset, dir: &Path) -> Result<()> {
    ds.clips
        .par_iter()
        .try_for_each(|c| io::write_wav(&dir.join("audio").join(&c.clip_id), &c.waveform))?;
    let gt: Detections = ds
        .clips
        .iter()
        .map(|c| (c.clip_id.clone(), c.events.clone()))
        .collect();
    io::write_atomic(&dir.join("gt.tsv"), io::events_tsv(&gt))?;
    io::write_atomic(&dir.join("weak.tsv"), io::weak_labels_tsv(&ds.weak_labels()))?;
    io::write_atomic(
        &dir.join("durations.csv"),
        io::durations_csv(&ds.ground_truth.clip_durations),
    )
}
