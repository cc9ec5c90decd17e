use rayon::prelude::*;

use super::{
    add_gaussian_noise, apply_filter_bands, draw_filter_bands, frame_shift, freq_mask, mixup,
    time_mask, AugmentConfig, LabelSet,
};
use crate::error::{Result, SedError};
use crate::frontend::MelSpec;
use crate::rng::Rng;

/// Paired inputs for a student/teacher training step.
#[derive(Debug, Clone, PartialEq)]
pub struct StudentTeacherViews {
    pub student: Vec<MelSpec>,
    pub teacher: Vec<MelSpec>,
    /// One label set per item, shared by both views.
    pub labels: Vec<LabelSet>,
}

const SHARED: u64 = 0;
const STUDENT: u64 = 1;
const TEACHER: u64 = 2;
const BATCH: u64 = u64::MAX;

/// Label-preserving augmentations: FilterAugment, frequency masking, then noise.
pub fn apply_label_preserving(spec: &MelSpec, cfg: &AugmentConfig, rng: &mut Rng) -> Result<MelSpec> {
    let mut out = spec.clone();
    if let Some(fa) = &cfg.filter_aug {
        let bands = draw_filter_bands(out.n_bins(), fa, rng)?;
        out = apply_filter_bands(&out, &bands)?;
    }
    if cfg.freq_mask_max_bins > 0 {
        out = freq_mask(&out, cfg.freq_mask_max_bins, rng)?;
    }
    if let Some(range) = cfg.noise_snr_db {
        out = add_gaussian_noise(&out, range, rng)?;
    }
    Ok(out)
}

/// Builds student and teacher inputs for a batch.
///
/// Frameshift, mixup and time masking run once per item from a shared stream,
/// so both views and the returned labels agree on every label-relevant edit.
/// The label-preserving stage then runs twice with independent student and
/// teacher streams. Item `i` draws only from `rng.substream(i)`, so results do
/// not depend on thread scheduling.
pub fn make_student_teacher_views(
    batch: &[(MelSpec, LabelSet)],
    cfg: &AugmentConfig,
    rng: &Rng,
) -> Result<StudentTeacherViews> {
    cfg.validate()?;
    let first = batch
        .first()
        .ok_or_else(|| SedError::InvalidConfig("empty batch".into()))?;
    for (spec, labels) in batch {
        if spec.data.dim() != first.0.data.dim() || labels.strong.dim() != first.1.strong.dim() {
            return Err(SedError::ShapeMismatch("batch items differ in shape".into()));
        }
    }

    let mut shared: Vec<Rng> = (0..batch.len())
        .map(|i| rng.substream(i as u64).substream(SHARED))
        .collect();

    let shifted: Vec<(MelSpec, LabelSet)> = batch
        .par_iter()
        .zip(shared.par_iter_mut())
        .map(|((spec, labels), r)| {
            if cfg.frameshift_max_frames > 0 {
                frame_shift(spec, labels, cfg.frameshift_max_frames, r)
            } else {
                Ok((spec.clone(), labels.clone()))
            }
        })
        .collect::<Result<_>>()?;

    // mixup partners: any other item of the batch
    let partners: Vec<usize> = {
        let mut r = rng.substream(BATCH);
        let n = batch.len();
        (0..n)
            .map(|i| {
                if n == 1 {
                    i
                } else {
                    (i + 1 + r.uniform_int(0, n - 2)) % n
                }
            })
            .collect()
    };

    let label_altered: Vec<(MelSpec, LabelSet)> = shifted
        .par_iter()
        .enumerate()
        .zip(shared.par_iter_mut())
        .map(|((i, (spec, labels)), r)| {
            let (mut spec, mut labels) = (spec.clone(), labels.clone());
            if cfg.mixup_prob > 0.0 && batch.len() > 1 {
                let (ps, pl) = &shifted[partners[i]];
                (spec, labels) = mixup((&spec, &labels), (ps, pl), cfg, r)?;
            }
            if cfg.time_mask_max_frames > 0 {
                (spec, labels) = time_mask(&spec, &labels, cfg, r)?;
            }
            Ok((spec, labels))
        })
        .collect::<Result<_>>()?;

    let views: Vec<(MelSpec, MelSpec)> = label_altered
        .par_iter()
        .enumerate()
        .map(|(i, (spec, _))| {
            let item = rng.substream(i as u64);
            let student = apply_label_preserving(spec, cfg, &mut item.substream(STUDENT))?;
            let teacher = apply_label_preserving(spec, cfg, &mut item.substream(TEACHER))?;
            Ok((student, teacher))
        })
        .collect::<Result<_>>()?;

    let (student, teacher) = views.into_iter().unzip();
    Ok(StudentTeacherViews {
        student,
        teacher,
        labels: label_altered.into_iter().map(|(_, l)| l).collect(),
    })
}
