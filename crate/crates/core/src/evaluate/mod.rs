//! Intersection-based detection evaluation.
//!
//! A detection is valid when enough of it overlaps same-class ground truth
//! (detection tolerance, `rho_dtc`); a ground-truth event is found when
//! enough of it is covered by valid detections (`rho_gtc`). Invalid detections
//! that mostly cover another class's ground truth are cross-triggers
//! (`rho_cttc`). Counts over a threshold sweep become per-class ROC
//! staircases, combined into the PSDS area in [`psd_roc`].

mod f1;
mod psds;
mod system;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::postprocess::Event;

pub use f1::{event_f1, ClassF1, F1Report};
pub use psds::{psd_roc, PsdRoc};
pub use system::{default_thresholds, evaluate_system, OperatingPoint, PsdsReport};

/// Detected events keyed by clip id.
pub type Detections = BTreeMap<String, Vec<Event>>;

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub events: Vec<(String, Event)>,
    pub clip_durations: BTreeMap<String, f64>,
    pub class_names: Vec<String>,
}

impl GroundTruth {
    pub fn new(
        events: Vec<(String, Event)>,
        clip_durations: BTreeMap<String, f64>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let gt = Self {
            events,
            clip_durations,
            class_names,
        };
        gt.validate()?;
        Ok(gt)
    }

    pub fn validate(&self) -> Result<()> {
        for (clip, e) in &self.events {
            let dur = *self
                .clip_durations
                .get(clip)
                .ok_or_else(|| SedError::InvalidGroundTruth(format!("no duration for clip `{clip}`")))?;
            if !self.class_names.contains(&e.class_name) {
                return Err(SedError::UnknownClass(e.class_name.clone()));
            }
            if !(e.onset >= 0.0 && e.onset < e.offset && e.offset <= dur + 1e-9) {
                return Err(SedError::InvalidGroundTruth(format!(
                    "event {} [{}, {}] invalid in {} s clip `{clip}`",
                    e.class_name, e.onset, e.offset, dur
                )));
            }
        }
        if let Some((clip, d)) = self.clip_durations.iter().find(|(_, d)| !(**d > 0.0)) {
            return Err(SedError::InvalidGroundTruth(format!(
                "clip `{clip}` has non-positive duration {d}"
            )));
        }
        Ok(())
    }

    pub fn total_hours(&self) -> f64 {
        self.clip_durations.values().sum::<f64>() / 3600.0
    }

    pub fn class_index(&self, name: &str) -> Result<usize> {
        self.class_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| SedError::UnknownClass(name.to_string()))
    }

    /// Ground truth regrouped as detections, e.g. to score a perfect system.
    pub fn as_detections(&self) -> Detections {
        let mut out: Detections = self
            .clip_durations
            .keys()
            .map(|k| (k.clone(), Vec::new()))
            .collect();
        for (clip, e) in &self.events {
            out.entry(clip.clone()).or_default().push(e.clone());
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub rho_dtc: f64,
    pub rho_gtc: f64,
    #[serde(default)]
    pub rho_cttc: Option<f64>,
    #[serde(default)]
    pub alpha_ct: f64,
    #[serde(default)]
    pub alpha_st: f64,
    #[serde(default = "default_e_max")]
    pub e_max: f64,
}

fn default_e_max() -> f64 {
    100.0
}

impl ScenarioConfig {
    pub fn scenario1() -> Self {
        Self {
            rho_dtc: 0.7,
            rho_gtc: 0.7,
            rho_cttc: None,
            alpha_ct: 0.0,
            alpha_st: 1.0,
            e_max: 100.0,
        }
    }

    pub fn scenario2() -> Self {
        Self {
            rho_dtc: 0.1,
            rho_gtc: 0.1,
            rho_cttc: Some(0.3),
            alpha_ct: 0.5,
            alpha_st: 1.0,
            e_max: 100.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |x: f64| x > 0.0 && x <= 1.0;
        let bad = |m: String| Err(SedError::InvalidConfig(m));
        if !unit(self.rho_dtc) || !unit(self.rho_gtc) || self.rho_cttc.is_some_and(|r| !unit(r)) {
            return bad("tolerances must lie in (0, 1]".into());
        }
        if !(self.alpha_ct >= 0.0 && self.alpha_st >= 0.0) {
            return bad("alpha_ct and alpha_st must be non-negative".into());
        }
        if self.alpha_ct > 0.0 && self.rho_cttc.is_none() {
            return bad("alpha_ct > 0 requires rho_cttc".into());
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return bad(format!("e_max {} must be positive", self.e_max));
        }
        Ok(())
    }
}

/// Length of the overlap of `[a0, a1]` and `[b0, b1]`, zero when disjoint.
pub fn intersect(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.1.min(b.1) - a.0.max(b.0)).max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPointCounts {
    pub threshold: Vec<f64>,
    pub tp: Vec<usize>,
    pub n_gt: Vec<usize>,
    pub fp: Vec<usize>,
    /// `ct[c][k]`: invalid detections of class `c` landing on ground truth of class `k`.
    pub ct: Vec<Vec<usize>>,
}

impl OperatingPointCounts {
    fn zeros(n: usize, threshold: Vec<f64>) -> Self {
        Self {
            threshold,
            tp: vec![0; n],
            n_gt: vec![0; n],
            fp: vec![0; n],
            ct: vec![vec![0; n]; n],
        }
    }
}

type Interval = (f64, f64);

/// Intervals sorted by onset; `overlap_sum` visits only candidates that can intersect.
struct SortedIntervals(Vec<Interval>);

impl SortedIntervals {
    fn new(mut v: Vec<Interval>) -> Self {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        Self(v)
    }

    fn overlapping(&self, q: Interval) -> impl Iterator<Item = &Interval> {
        let end = self.0.partition_point(|iv| iv.0 < q.1);
        self.0[..end].iter().filter(move |iv| iv.1 > q.0)
    }

    fn overlap_sum(&self, q: Interval) -> f64 {
        self.overlapping(q).map(|iv| intersect(*iv, q)).sum()
    }
}

/// Counts true positives, false positives and cross-triggers for one
/// operating point.
pub fn match_operating_point(
    dets: &Detections,
    gt: &GroundTruth,
    sc: &ScenarioConfig,
    threshold: Vec<f64>,
) -> Result<OperatingPointCounts> {
    sc.validate()?;
    let n = gt.class_names.len();
    let mut counts = OperatingPointCounts::zeros(n, threshold);

    let mut gt_by_clip: HashMap<&str, Vec<Vec<Interval>>> = HashMap::new();
    for (clip, e) in &gt.events {
        let c = gt.class_index(&e.class_name)?;
        gt_by_clip
            .entry(clip.as_str())
            .or_insert_with(|| vec![Vec::new(); n])[c]
            .push((e.onset, e.offset));
        counts.n_gt[c] += 1;
    }
    for clip in dets.keys() {
        if !gt.clip_durations.contains_key(clip) {
            return Err(SedError::UnknownClip(clip.clone()));
        }
    }

    for (clip, clip_dets) in dets {
        let gts: Vec<SortedIntervals> = gt_by_clip
            .remove(clip.as_str())
            .unwrap_or_else(|| vec![Vec::new(); n])
            .into_iter()
            .map(SortedIntervals::new)
            .collect();
        let mut by_class: Vec<Vec<Interval>> = vec![Vec::new(); n];
        for d in clip_dets {
            by_class[gt.class_index(&d.class_name)?].push((d.onset, d.offset));
        }

        for c in 0..n {
            let mut valid = Vec::new();
            for &d in &by_class[c] {
                let dur = d.1 - d.0;
                if dur <= 0.0 {
                    continue;
                }
                if gts[c].overlap_sum(d) / dur >= sc.rho_dtc {
                    valid.push(d);
                    continue;
                }
                counts.fp[c] += 1;
                if let Some(rho_cttc) = sc.rho_cttc {
                    for (k, other) in gts.iter().enumerate() {
                        if k == c {
                            continue;
                        }
                        counts.ct[c][k] += other
                            .overlapping(d)
                            .filter(|g| intersect(**g, d) / dur >= rho_cttc)
                            .count();
                    }
                }
            }
            let valid = SortedIntervals::new(valid);
            counts.tp[c] += gts[c]
                .0
                .iter()
                .filter(|g| valid.overlap_sum(**g) / (g.1 - g.0) >= sc.rho_gtc)
                .count();
        }
    }
    Ok(counts)
}

/// Per-class rates at one operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRates {
    pub tpr: Vec<f64>,
    /// False positives per hour of audio.
    pub fpr: Vec<f64>,
    /// `ctr[c][k]`: cross-triggers per hour of class-`k` ground truth.
    pub ctr: Vec<Vec<f64>>,
    pub efpr: Vec<f64>,
}

pub fn effective_rates(
    counts: &OperatingPointCounts,
    gt: &GroundTruth,
    sc: &ScenarioConfig,
) -> Result<ClassRates> {
    let n = gt.class_names.len();
    let hours = gt.total_hours();
    if !(hours > 0.0) {
        return Err(SedError::InvalidGroundTruth("dataset duration is zero".into()));
    }
    let mut class_hours = vec![0.0; n];
    for (_, e) in &gt.events {
        class_hours[gt.class_index(&e.class_name)?] += e.duration() / 3600.0;
    }
    let tpr: Vec<f64> = (0..n)
        .map(|c| match counts.n_gt[c] {
            0 => 0.0,
            g => counts.tp[c] as f64 / g as f64,
        })
        .collect();
    let fpr: Vec<f64> = counts.fp.iter().map(|&f| f as f64 / hours).collect();
    let ctr: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            (0..n)
                .map(|k| {
                    if k == c || class_hours[k] == 0.0 {
                        0.0
                    } else {
                        counts.ct[c][k] as f64 / class_hours[k]
                    }
                })
                .collect()
        })
        .collect();
    let efpr = (0..n)
        .map(|c| {
            if n == 1 || sc.alpha_ct == 0.0 {
                fpr[c]
            } else {
                let cross: f64 = ctr[c].iter().sum();
                fpr[c] + sc.alpha_ct * cross / (n - 1) as f64
            }
        })
        .collect();
    Ok(ClassRates {
        tpr,
        fpr,
        ctr,
        efpr,
    })
}
