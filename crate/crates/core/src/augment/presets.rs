//! Named augmentation presets: the label-preserving ablation grid plus the
//! two submitted-system setups.

use super::{AugmentConfig, FilterAugmentConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct NamedPreset {
    pub name: String,
    pub config: AugmentConfig,
}

/// The sixteen label-preserving rows of the ablation grid, in table order.
pub const ABLATION_PRESETS: [&str; 16] = [
    "noise_30_50",
    "noise_30_45",
    "noise_35_45",
    "noise_35_40",
    "freqmask_8",
    "freqmask_12",
    "freqmask_16",
    "freqmask_32",
    "filtaug_-6_4.5_b2-4",
    "filtaug_-6_6_b2-4",
    "filtaug_-7.5_6_b2-4",
    "filtaug_-7.5_6_b2-3",
    "freqmask_16+filtaug_-7.5_6_b2-4",
    "freqmask_16+filtaug_-6_4.5_b2-4",
    "freqmask_4+filtaug_-7.5_6_b2-4",
    "freqmask_4+filtaug_-6_4.5_b2-4",
];

const EXTRA_PRESETS: [&str; 4] = ["none", "off", "model1", "model2"];

pub fn preset_names() -> Vec<&'static str> {
    EXTRA_PRESETS
        .iter()
        .chain(ABLATION_PRESETS.iter())
        .copied()
        .collect()
}

fn filtaug(db_min: f64, db_max: f64, band_min: usize, band_max: usize) -> Option<FilterAugmentConfig> {
    Some(FilterAugmentConfig {
        db_min,
        db_max,
        band_min,
        band_max,
    })
}

fn parse_component(part: &str, cfg: &mut AugmentConfig) -> Option<()> {
    if let Some(rest) = part.strip_prefix("noise_") {
        let (lo, hi) = rest.split_once('_')?;
        cfg.noise_snr_db = Some((lo.parse().ok()?, hi.parse().ok()?));
    } else if let Some(rest) = part.strip_prefix("freqmask_") {
        cfg.freq_mask_max_bins = rest.parse().ok()?;
    } else if let Some(rest) = part.strip_prefix("filtaug_") {
        // filtaug_<db_min>_<db_max>_b<band_min>-<band_max>
        let mut it = rest.splitn(3, '_');
        let db_min = it.next()?.parse().ok()?;
        let db_max = it.next()?.parse().ok()?;
        let (bmin, bmax) = it.next()?.strip_prefix('b')?.split_once('-')?;
        cfg.filter_aug = filtaug(db_min, db_max, bmin.parse().ok()?, bmax.parse().ok()?);
    } else {
        return None;
    }
    Some(())
}

/// Resolves a preset name.
///
/// `none` keeps the default label-altering pipeline (frameshift, mixup at 0.5,
/// time masking 7..30) with no label-preserving augmentation; every grid row
/// adds its components on top of that. `off` disables everything. `model1`
/// and `model2` are the two FilterAugment setups of the submitted systems.
pub fn preset(name: &str) -> Option<AugmentConfig> {
    match name {
        "none" => return Some(AugmentConfig::default()),
        "off" => return Some(AugmentConfig::disabled()),
        "model1" => {
            return Some(AugmentConfig {
                filter_aug: filtaug(-7.5, 6.0, 2, 4),
                ..AugmentConfig::default()
            })
        }
        "model2" => {
            return Some(AugmentConfig {
                filter_aug: filtaug(-7.5, 6.0, 2, 3),
                mixup_prob: 0.8,
                ..AugmentConfig::default()
            })
        }
        _ => {}
    }
    let mut cfg = AugmentConfig::default();
    for part in name.split('+') {
        parse_component(part, &mut cfg)?;
    }
    Some(cfg)
}

pub fn ablation_grid() -> Vec<NamedPreset> {
    ABLATION_PRESETS
        .iter()
        .map(|name| NamedPreset {
            name: name.to_string(),
            config: preset(name).expect("built-in preset parses"),
        })
        .collect()
}
