//! File formats.
//!
//! - WAV in (16-bit PCM or 32-bit float, mono or stereo), 32-bit float out
//! - features: `<stem>.csv` (one row per frame, `mel_<i>` header) plus a
//!   `<stem>.json` sidecar with timing metadata
//! - scores: `<stem>.csv` with `time_s,<class...>` header plus a `<stem>.json`
//!   sidecar carrying the clip id, timing and weak scores
//! - events and ground truth: `filename\tonset\toffset\tevent_label` TSV
//! - clip durations: `filename,duration` CSV; weak labels: `filename\tevent_labels`

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SedError};
use crate::evaluate::{Detections, GroundTruth};
use crate::frontend::{MelSpec, SpecDomain, Waveform, DEFAULT_LOG_FLOOR};
use crate::postprocess::{Event, ScoreMatrix};

/// Writes through a temporary sibling and renames into place.
pub fn write_atomic(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| SedError::io(parent, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| SedError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| SedError::io(path, e))
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| SedError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| SedError::parse(path, e.to_string()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable value");
    s.push('\n');
    s
}

/// Files in `dir` with extension `ext`, sorted by file name.
pub fn list_files(dir: &Path, ext: &str) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| SedError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == ext))
        .collect();
    out.sort();
    Ok(out)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

// ---------------------------------------------------------------- wav

pub fn read_wav(path: &Path) -> Result<Waveform> {
    let wav_err = |source| SedError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (hound::SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
        (fmt, bits) => {
            return Err(SedError::parse(
                path,
                format!("unsupported WAV encoding {fmt:?} {bits}-bit"),
            ))
        }
    };
    Waveform::from_interleaved(&interleaved, spec.channels as usize, spec.sample_rate)
}

/// Mono 32-bit float WAV.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: w.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut cursor = std::io::Cursor::new(Vec::new());
    {
        let wav_err = |source| SedError::Wav {
            path: path.to_path_buf(),
            source,
        };
        let mut writer = hound::WavWriter::new(&mut cursor, spec).map_err(wav_err)?;
        for &s in &w.samples {
            writer.write_sample(s as f32).map_err(wav_err)?;
        }
        writer.finalize().map_err(wav_err)?;
    }
    write_atomic(path, cursor.into_inner())
}

// ---------------------------------------------------------------- matrices

fn matrix_csv(header: &[String], rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn parse_matrix_csv(path: &Path, text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| SedError::parse(path, "missing header row"))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| SedError::parse(path, format!("row {}: {e}", i + 1)))?;
        if row.len() != header.len() {
            return Err(SedError::parse(
                path,
                format!("row {} has {} cells, header has {}", i + 1, row.len(), header.len()),
            ));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn to_array(rows: Vec<Vec<f64>>, cols: usize) -> Array2<f64> {
    let n = rows.len();
    Array2::from_shape_vec((n, cols), rows.into_iter().flatten().collect()).expect("rectangular rows")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MelSidecar {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clip_id: Option<String>,
    pub hop_seconds: f64,
    pub clip_duration_seconds: f64,
    pub domain: SpecDomain,
    pub n_mels: usize,
    #[serde(default = "default_floor")]
    pub log_floor: f64,
}

fn default_floor() -> f64 {
    DEFAULT_LOG_FLOOR
}

pub fn write_mel(csv_path: &Path, clip_id: &str, spec: &MelSpec) -> Result<()> {
    let header: Vec<String> = (0..spec.n_bins()).map(|m| format!("mel_{m}")).collect();
    write_atomic(
        csv_path,
        matrix_csv(&header, spec.data.rows().into_iter().map(|r| r.to_vec())),
    )?;
    let sidecar = MelSidecar {
        clip_id: Some(clip_id.to_string()),
        hop_seconds: spec.hop_seconds,
        clip_duration_seconds: spec.clip_duration_seconds,
        domain: spec.domain,
        n_mels: spec.n_bins(),
        log_floor: spec.log_floor,
    };
    write_atomic(&csv_path.with_extension("json"), to_json_pretty(&sidecar))
}

/// Reads `<stem>.csv` and its sidecar; returns the clip id (sidecar value, or
/// `<stem>.wav`) with the spectrogram.
pub fn read_mel(csv_path: &Path) -> Result<(String, MelSpec)> {
    let sidecar: MelSidecar = read_json(&csv_path.with_extension("json"))?;
    let (header, rows) = parse_matrix_csv(csv_path, &read_to_string(csv_path)?)?;
    if header.len() != sidecar.n_mels {
        return Err(SedError::parse(
            csv_path,
            format!("{} columns but sidecar says n_mels = {}", header.len(), sidecar.n_mels),
        ));
    }
    let spec = MelSpec {
        data: to_array(rows, header.len()),
        domain: sidecar.domain,
        hop_seconds: sidecar.hop_seconds,
        clip_duration_seconds: sidecar.clip_duration_seconds,
        log_floor: sidecar.log_floor,
    };
    spec.validate()?;
    let clip = sidecar.clip_id.unwrap_or_else(|| format!("{}.wav", stem(csv_path)));
    Ok((clip, spec))
}

pub fn read_mel_dir(dir: &Path) -> Result<Vec<(String, MelSpec)>> {
    list_files(dir, "csv")?.iter().map(|p| read_mel(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSidecar {
    pub clip_id: String,
    pub hop_seconds: f64,
    pub clip_duration_seconds: f64,
    pub weak: IndexMap<String, f64>,
}

pub fn write_scores(csv_path: &Path, clip_id: &str, scores: &ScoreMatrix) -> Result<()> {
    let mut header = vec!["time_s".to_string()];
    header.extend(scores.class_names.iter().cloned());
    let rows = scores.strong.rows().into_iter().enumerate().map(|(t, r)| {
        let mut row = vec![t as f64 * scores.hop_seconds];
        row.extend(r.iter());
        row
    });
    write_atomic(csv_path, matrix_csv(&header, rows))?;
    let sidecar = ScoreSidecar {
        clip_id: clip_id.to_string(),
        hop_seconds: scores.hop_seconds,
        clip_duration_seconds: scores.clip_duration_seconds,
        weak: scores
            .class_names
            .iter()
            .cloned()
            .zip(scores.weak.iter().copied())
            .collect(),
    };
    write_atomic(&csv_path.with_extension("json"), to_json_pretty(&sidecar))
}

pub fn read_scores(csv_path: &Path) -> Result<(String, ScoreMatrix)> {
    let sidecar: ScoreSidecar = read_json(&csv_path.with_extension("json"))?;
    let (header, rows) = parse_matrix_csv(csv_path, &read_to_string(csv_path)?)?;
    if header.first().map(String::as_str) != Some("time_s") {
        return Err(SedError::parse(csv_path, "first column must be time_s"));
    }
    let class_names: Vec<String> = header[1..].to_vec();
    let strong = to_array(rows.into_iter().map(|r| r[1..].to_vec()).collect(), class_names.len());
    let weak = class_names
        .iter()
        .map(|c| {
            sidecar
                .weak
                .get(c)
                .copied()
                .ok_or_else(|| SedError::parse(csv_path, format!("no weak score for class `{c}`")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let scores = ScoreMatrix {
        strong,
        weak,
        hop_seconds: sidecar.hop_seconds,
        clip_duration_seconds: sidecar.clip_duration_seconds,
        class_names,
    };
    scores.validate()?;
    Ok((sidecar.clip_id, scores))
}

pub fn read_score_dir(dir: &Path) -> Result<Vec<(String, ScoreMatrix)>> {
    list_files(dir, "csv")?.iter().map(|p| read_scores(p)).collect()
}

// ---------------------------------------------------------------- event tables

pub const EVENT_HEADER: &str = "filename\tonset\toffset\tevent_label";

/// Event TSV rows ordered by clip id, then the given per-clip order.
pub fn events_tsv(events: &Detections) -> String {
    let mut out = String::from(EVENT_HEADER);
    out.push('\n');
    for (clip, evs) in events {
        for e in evs {
            out.push_str(&format!(
                "{clip}\t{:.3}\t{:.3}\t{}\n",
                e.onset, e.offset, e.class_name
            ));
        }
    }
    out
}

pub fn parse_events_tsv(path: &Path, text: &str) -> Result<Vec<(String, Event)>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == EVENT_HEADER => {}
        _ => return Err(SedError::parse(path, format!("expected header `{EVENT_HEADER}`"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let bad = |m: &str| SedError::parse(path, format!("line {}: {m}", i + 2));
        if cols.len() != 4 {
            return Err(bad("expected 4 tab-separated columns"));
        }
        let onset: f64 = cols[1].trim().parse().map_err(|_| bad("bad onset"))?;
        let offset: f64 = cols[2].trim().parse().map_err(|_| bad("bad offset"))?;
        if !(onset >= 0.0 && onset < offset) {
            return Err(bad("onset must be non-negative and before offset"));
        }
        out.push((cols[0].to_string(), Event::new(cols[3].trim(), onset, offset)));
    }
    Ok(out)
}

pub fn read_events_tsv(path: &Path) -> Result<Vec<(String, Event)>> {
    parse_events_tsv(path, &read_to_string(path)?)
}

pub fn durations_csv(durations: &BTreeMap<String, f64>) -> String {
    let mut out = String::from("filename,duration\n");
    for (clip, d) in durations {
        out.push_str(&format!("{clip},{d}\n"));
    }
    out
}

pub fn read_durations_csv(path: &Path) -> Result<BTreeMap<String, f64>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some("filename,duration") {
        return Err(SedError::parse(path, "expected header `filename,duration`"));
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let (clip, dur) = line
            .rsplit_once(',')
            .ok_or_else(|| SedError::parse(path, format!("line {}: expected two columns", i + 2)))?;
        let dur: f64 = dur
            .trim()
            .parse()
            .map_err(|_| SedError::parse(path, format!("line {}: bad duration", i + 2)))?;
        out.insert(clip.to_string(), dur);
    }
    Ok(out)
}

/// Ground truth from TSV and durations. Class vocabulary is `class_names` when
/// given, else the sorted set of labels in the TSV.
pub fn read_ground_truth(
    gt_tsv: &Path,
    durations_csv: &Path,
    class_names: Option<Vec<String>>,
) -> Result<GroundTruth> {
    let events = read_events_tsv(gt_tsv)?;
    let durations = read_durations_csv(durations_csv)?;
    let class_names = class_names.unwrap_or_else(|| {
        events
            .iter()
            .map(|(_, e)| e.class_name.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    });
    GroundTruth::new(events, durations, class_names)
}

pub fn weak_labels_tsv(weak: &BTreeMap<String, Vec<String>>) -> String {
    let mut out = String::from("filename\tevent_labels\n");
    for (clip, labels) in weak {
        out.push_str(&format!("{clip}\t{}\n", labels.join(",")));
    }
    out
}
