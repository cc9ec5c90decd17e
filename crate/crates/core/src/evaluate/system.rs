use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    effective_rates, match_operating_point, psd_roc, Detections, GroundTruth, ScenarioConfig,
};
use crate::error::{Result, SedError};
use crate::postprocess::{decode_with_thresholds, DecodeConfig, ScoreMatrix};

/// Counts and rates at one threshold, as written to the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tp: Vec<usize>,
    pub n_gt: Vec<usize>,
    pub fp: Vec<usize>,
    pub ct: Vec<Vec<usize>>,
    pub tpr: Vec<f64>,
    pub efpr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdsReport {
    pub scenario: ScenarioConfig,
    pub psds: f64,
    pub class_names: Vec<String>,
    pub points: Vec<OperatingPoint>,
    /// Class name → staircase `(efpr, tpr)` points.
    pub per_class_roc: BTreeMap<String, Vec<(f64, f64)>>,
    pub etpr_curve: Vec<(f64, f64)>,
}

/// Fifty thresholds evenly spaced over `[0.01, 0.99]`.
pub fn default_thresholds() -> Vec<f64> {
    (0..50).map(|i| 0.01 + 0.98 * i as f64 / 49.0).collect()
}

/// Decodes every clip at every threshold, matches against `gt` and returns
/// the PSDS report. Thresholds are shared across classes.
pub fn evaluate_system(
    scores: &[(String, ScoreMatrix)],
    gt: &GroundTruth,
    sc: &ScenarioConfig,
    decode: &DecodeConfig,
    thresholds: &[f64],
) -> Result<PsdsReport> {
    sc.validate()?;
    decode.validate()?;
    gt.validate()?;
    if thresholds.is_empty() {
        return Err(SedError::NoOperatingPoints);
    }
    for (clip, s) in scores {
        if !gt.clip_durations.contains_key(clip) {
            return Err(SedError::UnknownClip(clip.clone()));
        }
        s.validate()?;
        for name in &s.class_names {
            gt.class_index(name)?;
        }
    }
    if let Some(missing) = gt
        .clip_durations
        .keys()
        .find(|k| !scores.iter().any(|(c, _)| c == *k))
    {
        return Err(SedError::InvalidGroundTruth(format!(
            "no scores for clip `{missing}`"
        )));
    }

    let points: Vec<(OperatingPoint, super::ClassRates)> = thresholds
        .par_iter()
        .map(|&tau| {
            let mut dets = Detections::new();
            for (clip, s) in scores {
                let th = vec![tau; s.n_classes()];
                dets.insert(clip.clone(), decode_with_thresholds(s, decode, &th)?);
            }
            let counts = match_operating_point(&dets, gt, sc, vec![tau; gt.class_names.len()])?;
            let rates = effective_rates(&counts, gt, sc)?;
            let point = OperatingPoint {
                threshold: tau,
                tp: counts.tp,
                n_gt: counts.n_gt,
                fp: counts.fp,
                ct: counts.ct,
                tpr: rates.tpr.clone(),
                efpr: rates.efpr.clone(),
            };
            Ok((point, rates))
        })
        .collect::<Result<_>>()?;

    let (points, rates): (Vec<_>, Vec<_>) = points.into_iter().unzip();
    let roc = psd_roc(&rates, sc)?;
    Ok(PsdsReport {
        scenario: sc.clone(),
        psds: roc.psds,
        class_names: gt.class_names.clone(),
        points,
        per_class_roc: gt
            .class_names
            .iter()
            .cloned()
            .zip(roc.per_class)
            .collect(),
        etpr_curve: roc.etpr_curve,
    })
}
