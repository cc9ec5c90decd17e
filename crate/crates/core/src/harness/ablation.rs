use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{toy_detect, ToyDetectorConfig};
use super::synth::{synthesize, SceneSpec, SynthDataset};
use crate::augment::{apply_label_preserving, AugmentConfig, NamedPreset};
use crate::error::{Result, SedError};
use crate::evaluate::{default_thresholds, evaluate_system, ScenarioConfig};
use crate::frontend::{normalize_waveform, FrontendConfig, LogMelExtractor, MelSpec};
use crate::postprocess::{DecodeConfig, ScoreMatrix};
use crate::rng::Rng;

/// Stream id under the scene seed reserved for ablation augmentation.
pub const ABLATION_STREAM: u64 = 0xAB1A_7104;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub name: String,
    pub psds1: f64,
    pub psds2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOptions {
    pub frontend: FrontendConfig,
    pub decode: DecodeConfig,
    pub thresholds: Vec<f64>,
    /// Derived from the scene when `None`.
    pub detector: Option<ToyDetectorConfig>,
}

impl Default for AblationOptions {
    fn default() -> Self {
        Self {
            frontend: FrontendConfig::default(),
            decode: DecodeConfig::default(),
            thresholds: default_thresholds(),
            detector: None,
        }
    }
}

/// Peak-normalizes and featurizes every clip, in clip order.
pub fn featurize_dataset(ds: &SynthDataset, frontend: &FrontendConfig) -> Result<Vec<(String, MelSpec)>> {
    let extractor = LogMelExtractor::new(frontend.clone())?;
    ds.clips
        .par_iter()
        .map(|c| {
            let w = normalize_waveform(&c.waveform)?;
            Ok((c.clip_id.clone(), extractor.log_mel(&w)?))
        })
        .collect()
}

/// Label-preserving augmentation of every clip; clip `j` draws from
/// `rng.substream(j)`. Label-altering settings in `cfg` are ignored so the
/// ground truth stays exact.
pub fn augment_clip_features(
    features: &[(String, MelSpec)],
    cfg: &AugmentConfig,
    rng: &Rng,
) -> Result<Vec<(String, MelSpec)>> {
    cfg.validate()?;
    features
        .par_iter()
        .enumerate()
        .map(|(j, (id, spec))| Ok((id.clone(), apply_label_preserving(spec, cfg, &mut rng.substream(j as u64))?)))
        .collect()
}

pub fn run_ablation(grid: &[NamedPreset], scene: &SceneSpec) -> Result<Vec<AblationRow>> {
    run_ablation_with(grid, scene, &AblationOptions::default())
}

/// Row `i` augments with `Rng::new(scene.seed, ABLATION_STREAM).substream(i)`,
/// scores with the toy detector and evaluates under both scenarios.
pub fn run_ablation_with(
    grid: &[NamedPreset],
    scene: &SceneSpec,
    opts: &AblationOptions,
) -> Result<Vec<AblationRow>> {
    if grid.is_empty() {
        return Err(SedError::InvalidConfig("ablation grid is empty".into()));
    }
    let ds = synthesize(scene)?;
    let features = featurize_dataset(&ds, &opts.frontend)?;
    let detector = match &opts.detector {
        Some(d) => d.clone(),
        None => ToyDetectorConfig::for_scene(scene, &opts.frontend)?,
    };
    let root = Rng::new(scene.seed, ABLATION_STREAM);
    let (s1, s2) = (ScenarioConfig::scenario1(), ScenarioConfig::scenario2());
    grid.iter()
        .enumerate()
        .map(|(i, preset)| {
            let augmented = augment_clip_features(&features, &preset.config, &root.substream(i as u64))?;
            let scores: Vec<(String, ScoreMatrix)> = augmented
                .par_iter()
                .map(|(id, spec)| Ok((id.clone(), toy_detect(spec, &detector)?)))
                .collect::<Result<_>>()?;
            let psds1 = evaluate_system(&scores, &ds.ground_truth, &s1, &opts.decode, &opts.thresholds)?.psds;
            let psds2 = evaluate_system(&scores, &ds.ground_truth, &s2, &opts.decode, &opts.thresholds)?.psds;
            Ok(AblationRow {
                name: preset.name.clone(),
                psds1,
                psds2,
            })
        })
        .collect()
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut out = String::from("method,psds1,psds2\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.name, r.psds1, r.psds2));
    }
    out
}
