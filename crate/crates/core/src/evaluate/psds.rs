use serde::{Deserialize, Serialize};

use super::{ClassRates, ScenarioConfig};
use crate::error::{Result, SedError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdRoc {
    /// Per class, the staircase envelope `(efpr, tpr)`: efpr strictly
    /// increasing, tpr strictly increasing, restricted to `efpr <= e_max`.
    pub per_class: Vec<Vec<(f64, f64)>>,
    /// Breakpoints `(e, etpr)` of the combined curve, constant until the next one.
    pub etpr_curve: Vec<(f64, f64)>,
    pub psds: f64,
}

fn envelope(mut pts: Vec<(f64, f64)>, e_max: f64) -> Vec<(f64, f64)> {
    pts.retain(|p| p.0 <= e_max);
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (e, t) in pts {
        let best = out.last().map_or(0.0, |p| p.1);
        if t <= best {
            continue;
        }
        match out.last_mut() {
            Some(last) if last.0 == e => last.1 = t,
            _ => out.push((e, t)),
        }
    }
    out
}

/// Builds the per-class staircases `r_c(e) = max{tpr : efpr_c <= e}` and
/// integrates `mean_c r_c - alpha_st * std_c r_c`, clamped to `[0, 1]`, over
/// `[0, e_max]`, normalized by `e_max`.
pub fn psd_roc(points: &[ClassRates], sc: &ScenarioConfig) -> Result<PsdRoc> {
    sc.validate()?;
    let first = points.first().ok_or(SedError::NoOperatingPoints)?;
    let n = first.tpr.len();
    if n == 0 {
        return Err(SedError::InvalidGroundTruth("no classes".into()));
    }
    let per_class: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|c| envelope(points.iter().map(|p| (p.efpr[c], p.tpr[c])).collect(), sc.e_max))
        .collect();

    let mut breaks: Vec<f64> = std::iter::once(0.0)
        .chain(per_class.iter().flatten().map(|p| p.0).filter(|&e| e < sc.e_max))
        .collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    let mut cursor = vec![0usize; n];
    let mut curve = Vec::with_capacity(breaks.len());
    let mut area = 0.0;
    for (i, &e) in breaks.iter().enumerate() {
        let mut level = vec![0.0; n];
        for c in 0..n {
            let stairs = &per_class[c];
            while cursor[c] < stairs.len() && stairs[cursor[c]].0 <= e {
                cursor[c] += 1;
            }
            if cursor[c] > 0 {
                level[c] = stairs[cursor[c] - 1].1;
            }
        }
        let mean = level.iter().sum::<f64>() / n as f64;
        let var = level.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n as f64;
        let etpr = mean - sc.alpha_st * var.sqrt();
        let next = breaks.get(i + 1).copied().unwrap_or(sc.e_max);
        area += etpr.clamp(0.0, 1.0) * (next - e);
        curve.push((e, etpr));
    }
    Ok(PsdRoc {
        per_class,
        etpr_curve: curve,
        psds: (area / sc.e_max).clamp(0.0, 1.0),
    })
}
