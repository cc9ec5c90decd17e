//! Shared fixtures and a brute-force PSDS evaluator used as an oracle.
#![allow(dead_code)]

use std::collections::BTreeMap;

use ndarray::Array2;
use sedkit::evaluate::{Detections, GroundTruth, ScenarioConfig};
use sedkit::harness::{EventPrototype, SceneSpec, SourceKind, SynthDataset};
use sedkit::postprocess::{
    decode, rasterize_events, DecodeConfig, DecodeMode, Event, ScoreMatrix, Threshold,
};
use sedkit::Rng;

pub const GRID_POINTS: usize = 100_000;

/// Three well-separated classes with 1–3 s events in 10 s clips.
pub fn scene(n_clips: usize, seed: u64) -> SceneSpec {
    let proto = |name: &str, source| EventPrototype {
        name: name.into(),
        source,
        min_duration: 1.0,
        max_duration: 3.0,
    };
    SceneSpec {
        n_clips,
        clip_seconds: 10.0,
        sample_rate: 16_000,
        classes: vec![
            proto("beep", SourceKind::Tone { freq_hz: 1000.0 }),
            proto("chirp", SourceKind::Tone { freq_hz: 2500.0 }),
            proto(
                "hiss",
                SourceKind::NoiseBurst {
                    low_hz: 4000.0,
                    high_hz: 6000.0,
                },
            ),
        ],
        events_per_clip: (1, 2),
        background_snr_db: 20.0,
        seed,
    }
}

/// Scores that are exactly the rasterized ground truth.
pub fn perfect_scores(ds: &SynthDataset, n_frames: usize, hop: f64) -> Vec<(String, ScoreMatrix)> {
    let names = &ds.ground_truth.class_names;
    ds.clips
        .iter()
        .map(|c| {
            let grid = rasterize_events(&c.events, names, n_frames, hop).unwrap();
            let strong = grid.t().mapv(|b| if b { 1.0 } else { 0.0 });
            let weak = (0..names.len())
                .map(|k| strong.column(k).iter().cloned().fold(0.0, f64::max))
                .collect();
            let s = ScoreMatrix {
                strong,
                weak,
                hop_seconds: hop,
                clip_duration_seconds: c.waveform.duration_seconds(),
                class_names: names.clone(),
            };
            (c.clip_id.clone(), s)
        })
        .collect()
}

fn overlap(a: (f64, f64), b: (f64, f64)) -> f64 {
    let lo = if a.0 > b.0 { a.0 } else { b.0 };
    let hi = if a.1 < b.1 { a.1 } else { b.1 };
    if hi > lo {
        hi - lo
    } else {
        0.0
    }
}

/// Per-class `(tpr, efpr)` at one operating point by exhaustive pairwise matching.
pub fn brute_force_rates(dets: &Detections, gt: &GroundTruth, sc: &ScenarioConfig) -> Vec<(f64, f64)> {
    let names = &gt.class_names;
    let n = names.len();
    let mut tp = vec![0usize; n];
    let mut n_gt = vec![0usize; n];
    let mut fp = vec![0usize; n];
    let mut ct = vec![vec![0usize; n]; n];
    let mut class_seconds = vec![0.0; n];
    let idx = |name: &str| names.iter().position(|x| x == name).unwrap();
    for (_, g) in &gt.events {
        n_gt[idx(&g.class_name)] += 1;
        class_seconds[idx(&g.class_name)] += g.offset - g.onset;
    }
    let empty = Vec::new();
    for (clip, _) in &gt.clip_durations {
        let clip_dets = dets.get(clip).unwrap_or(&empty);
        let clip_gt: Vec<&Event> = gt.events.iter().filter(|(c, _)| c == clip).map(|(_, e)| e).collect();
        let mut valid: Vec<&Event> = Vec::new();
        for d in clip_dets {
            let c = idx(&d.class_name);
            let dur = d.offset - d.onset;
            let mut same = 0.0;
            for g in &clip_gt {
                if g.class_name == d.class_name {
                    same += overlap((d.onset, d.offset), (g.onset, g.offset));
                }
            }
            if same / dur >= sc.rho_dtc {
                valid.push(d);
                continue;
            }
            fp[c] += 1;
            if let Some(rho) = sc.rho_cttc {
                for g in &clip_gt {
                    if g.class_name != d.class_name && overlap((d.onset, d.offset), (g.onset, g.offset)) / dur >= rho {
                        ct[c][idx(&g.class_name)] += 1;
                    }
                }
            }
        }
        for g in &clip_gt {
            let mut covered = 0.0;
            for d in &valid {
                if d.class_name == g.class_name {
                    covered += overlap((d.onset, d.offset), (g.onset, g.offset));
                }
            }
            if covered / (g.offset - g.onset) >= sc.rho_gtc {
                tp[idx(&g.class_name)] += 1;
            }
        }
    }
    let hours: f64 = gt.clip_durations.values().sum::<f64>() / 3600.0;
    (0..n)
        .map(|c| {
            let tpr = if n_gt[c] == 0 { 0.0 } else { tp[c] as f64 / n_gt[c] as f64 };
            let mut efpr = fp[c] as f64 / hours;
            if n > 1 {
                let mut cross = 0.0;
                for k in 0..n {
                    if k != c && class_seconds[k] > 0.0 {
                        cross += ct[c][k] as f64 / (class_seconds[k] / 3600.0);
                    }
                }
                efpr += sc.alpha_ct * cross / (n - 1) as f64;
            }
            (tpr, efpr)
        })
        .collect()
}

/// PSDS by left Riemann sum over `GRID_POINTS` points of `[0, e_max)`.
pub fn brute_force_psds(per_threshold: &[Vec<(f64, f64)>], sc: &ScenarioConfig) -> f64 {
    let n = per_threshold[0].len();
    let mut area = 0.0;
    for i in 0..GRID_POINTS {
        let e = (i as f64 * sc.e_max) / GRID_POINTS as f64;
        let mut r = vec![0.0; n];
        for point in per_threshold {
            for c in 0..n {
                let (tpr, efpr) = point[c];
                if efpr <= e && efpr <= sc.e_max && tpr > r[c] {
                    r[c] = tpr;
                }
            }
        }
        let mean = r.iter().sum::<f64>() / n as f64;
        let std = (r.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64).sqrt();
        area += (mean - sc.alpha_st * std).clamp(0.0, 1.0);
    }
    area / GRID_POINTS as f64
}

pub struct OracleInstance {
    pub scores: Vec<(String, ScoreMatrix)>,
    pub gt: GroundTruth,
    pub sc: ScenarioConfig,
    pub decode: DecodeConfig,
    pub thresholds: Vec<f64>,
}

impl OracleInstance {
    pub fn oracle_psds(&self) -> f64 {
        let rates: Vec<Vec<(f64, f64)>> = self
            .thresholds
            .iter()
            .map(|&tau| {
                let cfg = DecodeConfig {
                    threshold: Threshold::Shared(tau),
                    ..self.decode.clone()
                };
                let dets: Detections = self
                    .scores
                    .iter()
                    .map(|(id, s)| (id.clone(), decode(s, &cfg).unwrap()))
                    .collect();
                brute_force_rates(&dets, &self.gt, &self.sc)
            })
            .collect();
        brute_force_psds(&rates, &self.sc)
    }
}

/// Seconds of ground truth per class. With one hour of audio in total every
/// effective FPR is an integer, so the staircase breakpoints sit exactly on
/// the oracle grid and Riemann integration is exact.
const CLASS_SECONDS: i64 = 450;
const MAX_EVENTS_PER_CLIP: usize = 4;

fn pick<T: Clone>(rng: &mut Rng, xs: &[T]) -> T {
    xs[rng.uniform_int(0, xs.len() - 1)].clone()
}

fn try_instance(rng: &mut Rng) -> Option<OracleInstance> {
    let n_clips = rng.uniform_int(1, 5);
    let n_classes = rng.uniform_int(1, 3);
    let clip_len = 3600 / n_clips as i64;
    let names: Vec<String> = (0..n_classes).map(|c| format!("class{c}")).collect();
    let mut clips: Vec<Vec<(usize, i64, i64)>> = vec![Vec::new(); n_clips];
    for c in 0..n_classes {
        let m = rng.uniform_int(1, 3);
        let mut cuts: Vec<i64> = rng
            .sample_indices((CLASS_SECONDS - 1) as usize, m - 1)
            .into_iter()
            .map(|i| i as i64 + 1)
            .collect();
        cuts.push(0);
        cuts.push(CLASS_SECONDS);
        cuts.sort();
        for w in cuts.windows(2) {
            let dur = w[1] - w[0];
            let mut placed = false;
            for _ in 0..100 {
                let k = rng.uniform_int(0, n_clips - 1);
                let on = rng.uniform_i64(0, clip_len - dur);
                let clash = clips[k].len() >= MAX_EVENTS_PER_CLIP
                    || clips[k].iter().any(|&(cc, a, b)| cc == c && on < b && a < on + dur);
                if !clash {
                    clips[k].push((c, on, on + dur));
                    placed = true;
                    break;
                }
            }
            if !placed {
                return None;
            }
        }
    }

    let median_len = pick(rng, &[1usize, 3, 5]);
    let weak_masking = rng.unit() < 0.5;
    let mode = if rng.unit() < 0.2 { DecodeMode::WeakSed } else { DecodeMode::Strong };
    let mut scores = Vec::new();
    let mut events = Vec::new();
    let mut durations = BTreeMap::new();
    for (k, placed) in clips.iter().enumerate() {
        let id = format!("clip_{k:04}.wav");
        durations.insert(id.clone(), clip_len as f64);
        let t = clip_len as usize;
        let mut strong = Array2::<f64>::zeros((t, n_classes));
        for c in 0..n_classes {
            let mut f = 0;
            while f < t {
                let len = rng.uniform_int(5, 120);
                let level = rng.uniform(0.0, 0.6);
                for x in f..(f + len).min(t) {
                    strong[[x, c]] = level;
                }
                f += len;
            }
        }
        for &(c, on, off) in placed {
            events.push((id.clone(), Event::new(names[c].clone(), on as f64, off as f64)));
            // a shifted, sometimes misattributed, response to the event
            let target = if n_classes > 1 && rng.unit() < 0.3 {
                rng.uniform_int(0, n_classes - 1)
            } else {
                c
            };
            let level = rng.uniform(0.3, 1.0);
            let a = (on + rng.uniform_i64(-20, 20)).clamp(0, clip_len - 1) as usize;
            let b = (off + rng.uniform_i64(-20, 20)).clamp(a as i64 + 1, clip_len) as usize;
            for x in a..b {
                strong[[x, target]] = level;
            }
        }
        let weak = (0..n_classes)
            .map(|c| {
                if rng.unit() < 0.5 {
                    strong.column(c).iter().cloned().fold(0.0, f64::max)
                } else {
                    rng.unit()
                }
            })
            .collect();
        scores.push((
            id,
            ScoreMatrix {
                strong,
                weak,
                hop_seconds: 1.0,
                clip_duration_seconds: clip_len as f64,
                class_names: names.clone(),
            },
        ));
    }
    let gt = GroundTruth::new(events, durations, names).ok()?;
    let sc = match rng.uniform_int(0, 2) {
        0 => ScenarioConfig::scenario1(),
        1 => ScenarioConfig::scenario2(),
        _ => {
            let rhos = [0.1, 0.3, 0.5, 0.7, 0.9];
            let rho_cttc = pick(rng, &[None, Some(0.1), Some(0.3), Some(0.5)]);
            ScenarioConfig {
                rho_dtc: pick(rng, &rhos),
                rho_gtc: pick(rng, &rhos),
                rho_cttc,
                alpha_ct: if rho_cttc.is_some() { pick(rng, &[0.0, 0.5, 1.0]) } else { 0.0 },
                alpha_st: pick(rng, &[0.0, 0.5, 1.0]),
                e_max: pick(rng, &[10.0, 20.0, 50.0, 100.0]),
            }
        }
    };
    let mut thresholds: Vec<f64> = rng
        .sample_indices(99, 10)
        .into_iter()
        .map(|i| (i + 1) as f64 / 100.0)
        .collect();
    thresholds.sort_by(f64::total_cmp);
    Some(OracleInstance {
        scores,
        gt,
        sc,
        decode: DecodeConfig {
            threshold: Threshold::Shared(0.5),
            median_len,
            weak_masking,
            mode,
        },
        thresholds,
    })
}

pub fn oracle_instance(seed: u64) -> OracleInstance {
    let root = Rng::new(seed, 0x0AC1E);
    (0..)
        .find_map(|attempt| try_instance(&mut root.substream(attempt)))
        .expect("instance generation terminates")
}
