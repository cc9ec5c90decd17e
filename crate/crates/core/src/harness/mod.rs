//! Desk-scale fixtures: synthetic scenes with exact labels, a deterministic
//! toy detector and the augmentation ablation runner.

mod ablation;
mod detector;
mod synth;

pub use ablation::{
    ablation_csv, augment_clip_features, featurize_dataset, run_ablation, run_ablation_with,
    AblationOptions, AblationRow, ABLATION_STREAM,
};
pub use detector::{toy_detect, ClassTemplate, Pooling, ToyDetectorConfig};
pub use synth::{
    render_clip, synthesize, write_dataset, EventPrototype, SceneSpec, SourceKind, SynthClip,
    SynthDataset,
};
