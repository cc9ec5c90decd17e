use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Detections, GroundTruth};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassF1 {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    /// `None` when the class has neither ground truth nor detections.
    pub f1: Option<f64>,
}

impl ClassF1 {
    fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let denom = 2 * tp + fp + fn_;
        Self {
            tp,
            fp,
            fn_,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            f1: (denom > 0).then(|| 2.0 * tp as f64 / denom as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub onset_collar: f64,
    pub offset_collar_ratio: f64,
    pub per_class: BTreeMap<String, ClassF1>,
    /// Unweighted mean over classes with a defined F1.
    pub macro_f1: f64,
    pub micro_f1: f64,
}

/// Collar-based event F1 with greedy one-to-one matching.
///
/// Detections are visited by onset (ties: clip id, then offset); each takes
/// the earliest-onset unmatched ground-truth event of its class and clip whose
/// onset is within `onset_collar` and whose offset is within
/// `max(onset_collar, offset_collar_ratio * gt duration)`.
pub fn event_f1(
    dets: &Detections,
    gt: &GroundTruth,
    onset_collar: f64,
    offset_collar_ratio: f64,
) -> Result<F1Report> {
    let n = gt.class_names.len();
    let mut n_gt = vec![0usize; n];
    let mut gt_events: BTreeMap<(&str, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for (clip, e) in &gt.events {
        let c = gt.class_index(&e.class_name)?;
        n_gt[c] += 1;
        gt_events.entry((clip.as_str(), c)).or_default().push((e.onset, e.offset));
    }
    for v in gt_events.values_mut() {
        v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    }
    let mut used: BTreeMap<(&str, usize), Vec<bool>> = gt_events
        .iter()
        .map(|(k, v)| (*k, vec![false; v.len()]))
        .collect();

    let mut order: Vec<(&str, usize, f64, f64)> = Vec::new();
    for (clip, events) in dets {
        for e in events {
            order.push((clip.as_str(), gt.class_index(&e.class_name)?, e.onset, e.offset));
        }
    }
    order.sort_by(|a, b| {
        a.2.total_cmp(&b.2)
            .then_with(|| a.0.cmp(b.0))
            .then(a.3.total_cmp(&b.3))
    });

    let mut tp = vec![0usize; n];
    let mut n_det = vec![0usize; n];
    for (clip, c, on, off) in order {
        n_det[c] += 1;
        let Some(cands) = gt_events.get(&(clip, c)) else {
            continue;
        };
        let flags = used.get_mut(&(clip, c)).expect("same keys");
        let hit = cands.iter().enumerate().position(|(i, g)| {
            let off_collar = onset_collar.max(offset_collar_ratio * (g.1 - g.0));
            !flags[i] && (on - g.0).abs() <= onset_collar && (off - g.1).abs() <= off_collar
        });
        if let Some(i) = hit {
            flags[i] = true;
            tp[c] += 1;
        }
    }

    let per_class: BTreeMap<String, ClassF1> = gt
        .class_names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            (
                name.clone(),
                ClassF1::from_counts(tp[c], n_det[c] - tp[c], n_gt[c] - tp[c]),
            )
        })
        .collect();
    let defined: Vec<f64> = per_class.values().filter_map(|s| s.f1).collect();
    let macro_f1 = if defined.is_empty() {
        0.0
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    };
    let (t, d, g) = (
        tp.iter().sum::<usize>(),
        n_det.iter().sum::<usize>(),
        n_gt.iter().sum::<usize>(),
    );
    let micro_f1 = if d + g == 0 {
        0.0
    } else {
        2.0 * t as f64 / (d + g) as f64
    };
    Ok(F1Report {
        onset_collar,
        offset_collar_ratio,
        per_class,
        macro_f1,
        micro_f1,
    })
}
