//! The `sedkit` command line.
//!
//! Exit status: 0 success, 2 usage error, 3 invalid input data, 4 config
//! error. Every command writes `<output>.manifest.json` next to its output.
//! `SEDKIT_THREADS` caps internal parallelism (0 or unset = all cores).

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::{self, make_student_teacher_views, AugmentConfig, LabelSet, NamedPreset};
use crate::error::{ErrorKind, Result, SedError};
use crate::evaluate::{
    default_thresholds, event_f1, evaluate_system, Detections, GroundTruth, PsdsReport, ScenarioConfig,
};
use crate::frontend::{normalize_waveform, FrontendConfig, LogMelExtractor};
use crate::harness::{self, SceneSpec, ToyDetectorConfig};
use crate::io;
use crate::postprocess::{decode, rasterize_events, DecodeConfig, DecodeMode, ScoreMatrix, Threshold};
use crate::rng::Rng;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const THREADS_ENV: &str = "SEDKIT_THREADS";

/// Stream id under `--seed` used by the `augment` command.
const AUGMENT_STREAM: u64 = 0xA06;

#[derive(Debug, Parser)]
#[command(name = "sedkit", version, about = "Sound event detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene: audio/*.wav, gt.tsv, weak.tsv, durations.csv
    Synth(SynthArgs),
    /// Log-mel features for every WAV in a directory
    Featurize(FeaturizeArgs),
    /// Student/teacher augmented views of a feature directory
    Augment(AugmentArgs),
    /// Toy detector scores for a feature directory
    Detect(DetectArgs),
    /// Threshold, weak-mask, median-filter and decode scores into events
    Decode(DecodeArgs),
    /// Full-clip events for classes whose weak score clears the threshold
    WeakSed(WeakSedArgs),
    /// PSDS over a threshold sweep
    EvalPsds(EvalPsdsArgs),
    /// Collar-based event F1
    EvalF1(EvalF1Args),
    /// Augmentation ablation table on a synthetic scene
    Ablate(AblateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the scene's seed
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_normalize: bool,
    /// Frontend config JSON
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub features: PathBuf,
    /// Strong labels (GT TSV) rasterized onto the feature grid
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    pub preset: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "student,teacher")]
    pub views: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long, conflicts_with = "scene", required_unless_present = "scene")]
    pub toy_config: Option<PathBuf>,
    /// Derive class templates from a scene spec instead of --toy-config
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DecodeFlags {
    /// Decode config JSON; flags override its fields
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// One value, or one per class separated by commas
    #[arg(long)]
    pub threshold: Option<String>,
    #[arg(long)]
    pub median: Option<usize>,
    #[arg(long, overrides_with = "no_weak_mask")]
    pub weak_mask: bool,
    #[arg(long, overrides_with = "weak_mask")]
    pub no_weak_mask: bool,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[command(flatten)]
    pub decode: DecodeFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct WeakSedArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "0.5")]
    pub threshold: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalPsdsArgs {
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long)]
    pub durations: PathBuf,
    /// 1, 2, or a scenario JSON file
    #[arg(long)]
    pub scenario: String,
    #[command(flatten)]
    pub decode: DecodeFlags,
    /// Decode with full-clip weak SED events
    #[arg(long)]
    pub weak_sed: bool,
    /// Number of evenly spaced thresholds in [0.01, 0.99]
    #[arg(long)]
    pub n_thresholds: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalF1Args {
    #[arg(long)]
    pub events: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Clip durations; taken from the latest event offset per clip when omitted
    #[arg(long)]
    pub durations: Option<PathBuf>,
    #[arg(long, default_value_t = 0.2)]
    pub onset_collar: f64,
    #[arg(long, default_value_t = 0.2)]
    pub offset_collar_ratio: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// `default`, or a JSON list of preset names / {name, config} objects
    #[arg(long, default_value = "default")]
    pub grid: String,
    #[arg(long)]
    pub scene: PathBuf,
    /// Overrides the scene's seed
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<PathBuf>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub version: String,
    pub wall_time_seconds: f64,
}

impl RunManifest {
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(OsString::from).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) => n,
            Err(_) => {
                eprintln!("error: {THREADS_ENV} must be a non-negative integer, got `{v}`");
                return 4;
            }
        },
        Err(_) => 0,
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return 4;
        }
    };
    match pool.install(|| dispatch(&cli.command)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e.kind() {
                ErrorKind::Config => 4,
                ErrorKind::Input => 3,
            }
        }
    }
}

pub fn dispatch(cmd: &Command) -> Result<()> {
    let start = Instant::now();
    let mut m = match cmd {
        Command::Synth(a) => synth(a)?,
        Command::Featurize(a) => featurize(a)?,
        Command::Augment(a) => augment_cmd(a)?,
        Command::Detect(a) => detect(a)?,
        Command::Decode(a) => decode_cmd(a)?,
        Command::WeakSed(a) => weak_sed(a)?,
        Command::EvalPsds(a) => eval_psds(a)?,
        Command::EvalF1(a) => eval_f1(a)?,
        Command::Ablate(a) => ablate(a)?,
    };
    m.wall_time_seconds = start.elapsed().as_secs_f64();
    let primary = m.outputs.first().cloned().ok_or_else(|| SedError::InvalidConfig("no output".into()))?;
    io::write_atomic(&RunManifest::path_for(&primary), io::to_json_pretty(&m))
}

fn manifest(command: &str, config: Option<&Path>, inputs: &[&Path], out: &Path, seed: Option<u64>) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        config: config.map(Path::to_path_buf),
        inputs: inputs.iter().map(|p| p.to_path_buf()).collect(),
        outputs: vec![out.to_path_buf()],
        seed,
        version: VERSION.to_string(),
        wall_time_seconds: 0.0,
    }
}

/// Config files that fail to parse are config errors, not input errors.
fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    io::read_json(path).map_err(|e| match e {
        SedError::Parse { path, message } => {
            SedError::InvalidConfig(format!("{}: {message}", path.display()))
        }
        other => other,
    })
}

fn file_stem(clip_id: &str) -> String {
    Path::new(clip_id)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| clip_id.to_string())
}

fn synth(a: &SynthArgs) -> Result<RunManifest> {
    let mut scene: SceneSpec = read_config(&a.scene)?;
    if let Some(s) = a.seed {
        scene.seed = s;
    }
    let ds = harness::synthesize(&scene)?;
    harness::write_dataset(&ds, &a.out)?;
    Ok(manifest("synth", Some(&a.scene), &[], &a.out, Some(scene.seed)))
}

fn featurize(a: &FeaturizeArgs) -> Result<RunManifest> {
    let cfg = match &a.config {
        Some(p) => read_config(p)?,
        None => FrontendConfig::default(),
    };
    let extractor = LogMelExtractor::new(cfg)?;
    let wavs = io::list_files(&a.input, "wav")?;
    if wavs.is_empty() {
        return Err(SedError::parse(&a.input, "no .wav files"));
    }
    wavs.par_iter().try_for_each(|p| {
        let mut w = io::read_wav(p)?;
        if !a.no_normalize {
            w = normalize_waveform(&w)?;
        }
        let spec = extractor.log_mel(&w)?;
        let id = p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        io::write_mel(&a.out.join(format!("{}.csv", file_stem(&id))), &id, &spec)
    })?;
    Ok(manifest("featurize", a.config.as_deref(), &[&a.input], &a.out, None))
}

fn augment_cmd(a: &AugmentArgs) -> Result<RunManifest> {
    let cfg: AugmentConfig = match (&a.preset, &a.config) {
        (Some(name), _) => augment::preset(name).ok_or_else(|| {
            SedError::InvalidConfig(format!(
                "unknown preset `{name}`; known: {}",
                augment::preset_names().join(", ")
            ))
        })?,
        (None, Some(p)) => read_config(p)?,
        (None, None) => return Err(SedError::InvalidConfig("--preset or --config is required".into())),
    };
    cfg.validate()?;
    for v in &a.views {
        if v != "student" && v != "teacher" {
            return Err(SedError::InvalidConfig(format!("unknown view `{v}` (student, teacher)")));
        }
    }
    let features = io::read_mel_dir(&a.features)?;
    if features.is_empty() {
        return Err(SedError::parse(&a.features, "no feature files"));
    }
    let (events, class_names) = match &a.labels {
        Some(p) => {
            let ev = io::read_events_tsv(p)?;
            let mut names: Vec<String> = ev.iter().map(|(_, e)| e.class_name.clone()).collect();
            names.sort();
            names.dedup();
            (ev, names)
        }
        None => (Vec::new(), Vec::new()),
    };
    let batch: Vec<_> = features
        .iter()
        .map(|(id, spec)| {
            let clip_events: Vec<_> = events.iter().filter(|(c, _)| c == id).map(|(_, e)| e.clone()).collect();
            let grid = rasterize_events(&clip_events, &class_names, spec.n_frames(), spec.hop_seconds)?;
            let labels = LabelSet::from_strong(grid.mapv(|b| if b { 1.0 } else { 0.0 }), class_names.clone())?;
            Ok((spec.clone(), labels))
        })
        .collect::<Result<_>>()?;
    let views = make_student_teacher_views(&batch, &cfg, &Rng::new(a.seed, AUGMENT_STREAM))?;
    for (i, (id, spec)) in features.iter().enumerate() {
        let stem = file_stem(id);
        for v in &a.views {
            let out = if v == "student" { &views.student[i] } else { &views.teacher[i] };
            io::write_mel(&a.out.join(v).join(format!("{stem}.csv")), id, out)?;
        }
        let l = &views.labels[i];
        let labels = ScoreMatrix {
            strong: l.strong.t().to_owned(),
            weak: l.weak.clone(),
            hop_seconds: spec.hop_seconds,
            clip_duration_seconds: spec.clip_duration_seconds,
            class_names: l.class_names.clone(),
        };
        io::write_scores(&a.out.join("labels").join(format!("{stem}.csv")), id, &labels)?;
    }
    let mut inputs = vec![a.features.as_path()];
    if let Some(l) = &a.labels {
        inputs.push(l);
    }
    Ok(manifest("augment", a.config.as_deref(), &inputs, &a.out, Some(a.seed)))
}

fn detect(a: &DetectArgs) -> Result<RunManifest> {
    let features = io::read_mel_dir(&a.features)?;
    if features.is_empty() {
        return Err(SedError::parse(&a.features, "no feature files"));
    }
    let (cfg, config_path): (ToyDetectorConfig, &Path) = match (&a.toy_config, &a.scene) {
        (Some(p), _) => (read_config(p)?, p),
        (None, Some(s)) => {
            let scene: SceneSpec = read_config(s)?;
            let frontend = FrontendConfig {
                n_mels: features[0].1.n_bins(),
                ..FrontendConfig::default()
            };
            (ToyDetectorConfig::for_scene(&scene, &frontend)?, s)
        }
        (None, None) => return Err(SedError::InvalidConfig("--toy-config or --scene is required".into())),
    };
    features.par_iter().try_for_each(|(id, spec)| {
        let scores = harness::toy_detect(spec, &cfg)?;
        io::write_scores(&a.out.join(format!("{}.csv", file_stem(id))), id, &scores)
    })?;
    Ok(manifest("detect", Some(config_path), &[&a.features], &a.out, None))
}

fn parse_threshold(s: &str) -> Result<Threshold> {
    let values: Vec<f64> = s
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| SedError::InvalidConfig(format!("bad threshold `{s}`")))?;
    Ok(if values.len() == 1 {
        Threshold::Shared(values[0])
    } else {
        Threshold::PerClass(values)
    })
}

impl DecodeFlags {
    fn resolve(&self) -> Result<DecodeConfig> {
        let mut cfg: DecodeConfig = match &self.config {
            Some(p) => read_config(p)?,
            None => DecodeConfig::default(),
        };
        if let Some(t) = &self.threshold {
            cfg.threshold = parse_threshold(t)?;
        }
        if let Some(m) = self.median {
            cfg.median_len = m;
        }
        if self.weak_mask {
            cfg.weak_masking = true;
        }
        if self.no_weak_mask {
            cfg.weak_masking = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn decode_dir(scores_dir: &Path, cfg: &DecodeConfig) -> Result<Detections> {
    let scores = io::read_score_dir(scores_dir)?;
    let decoded: Vec<(String, Vec<_>)> = scores
        .par_iter()
        .map(|(id, s)| Ok((id.clone(), decode(s, cfg)?)))
        .collect::<Result<_>>()?;
    Ok(decoded.into_iter().collect())
}

fn decode_cmd(a: &DecodeArgs) -> Result<RunManifest> {
    let cfg = a.decode.resolve()?;
    let dets = decode_dir(&a.scores, &cfg)?;
    io::write_atomic(&a.out, io::events_tsv(&dets))?;
    Ok(manifest("decode", a.decode.config.as_deref(), &[&a.scores], &a.out, None))
}

fn weak_sed(a: &WeakSedArgs) -> Result<RunManifest> {
    let cfg = DecodeConfig {
        threshold: parse_threshold(&a.threshold)?,
        mode: DecodeMode::WeakSed,
        ..DecodeConfig::default()
    };
    let dets = decode_dir(&a.scores, &cfg)?;
    io::write_atomic(&a.out, io::events_tsv(&dets))?;
    Ok(manifest("weak-sed", None, &[&a.scores], &a.out, None))
}

fn scenario(arg: &str) -> Result<ScenarioConfig> {
    let sc = match arg {
        "1" => ScenarioConfig::scenario1(),
        "2" => ScenarioConfig::scenario2(),
        path => read_config(Path::new(path))?,
    };
    sc.validate()?;
    Ok(sc)
}

fn eval_psds(a: &EvalPsdsArgs) -> Result<RunManifest> {
    let sc = scenario(&a.scenario)?;
    let mut decode_cfg = a.decode.resolve()?;
    if a.weak_sed {
        decode_cfg.mode = DecodeMode::WeakSed;
    }
    let thresholds = match a.n_thresholds {
        None => default_thresholds(),
        Some(n) if n >= 2 => (0..n).map(|i| 0.01 + 0.98 * i as f64 / (n - 1) as f64).collect(),
        Some(1) => vec![0.5],
        Some(_) => return Err(SedError::InvalidConfig("--n-thresholds must be at least 1".into())),
    };
    let scores = io::read_score_dir(&a.scores)?;
    let classes = scores
        .first()
        .map(|(_, s)| s.class_names.clone())
        .ok_or_else(|| SedError::parse(&a.scores, "no score files"))?;
    let gt = io::read_ground_truth(&a.gt, &a.durations, Some(classes))?;
    let report = evaluate_system(&scores, &gt, &sc, &decode_cfg, &thresholds)?;
    io::write_atomic(&a.out, io::to_json_pretty(&report))?;
    if let Some(p) = &a.plot {
        io::write_atomic(p, roc_svg(&report))?;
    }
    let config = Path::new(&a.scenario);
    let config = if config.exists() { Some(config) } else { a.decode.config.as_deref() };
    Ok(manifest("eval-psds", config, &[&a.scores, &a.gt, &a.durations], &a.out, None))
}

fn eval_f1(a: &EvalF1Args) -> Result<RunManifest> {
    let gt_events = io::read_events_tsv(&a.gt)?;
    let det_events = io::read_events_tsv(&a.events)?;
    let durations: BTreeMap<String, f64> = match &a.durations {
        Some(p) => io::read_durations_csv(p)?,
        None => {
            let mut d = BTreeMap::new();
            for (clip, e) in gt_events.iter().chain(&det_events) {
                let v: &mut f64 = d.entry(clip.clone()).or_insert(0.0);
                *v = v.max(e.offset);
            }
            d
        }
    };
    let mut names: Vec<String> = gt_events
        .iter()
        .chain(&det_events)
        .map(|(_, e)| e.class_name.clone())
        .collect();
    names.sort();
    names.dedup();
    let gt = GroundTruth::new(gt_events, durations, names)?;
    let mut dets = Detections::new();
    for (clip, e) in det_events {
        if !gt.clip_durations.contains_key(&clip) {
            return Err(SedError::UnknownClip(clip));
        }
        dets.entry(clip).or_default().push(e);
    }
    let report = event_f1(&dets, &gt, a.onset_collar, a.offset_collar_ratio)?;
    io::write_atomic(&a.out, io::to_json_pretty(&report))?;
    let mut inputs = vec![a.events.as_path(), a.gt.as_path()];
    if let Some(d) = &a.durations {
        inputs.push(d);
    }
    Ok(manifest("eval-f1", None, &inputs, &a.out, None))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum GridEntry {
    Name(String),
    Full { name: String, config: AugmentConfig },
}

fn load_grid(arg: &str) -> Result<Vec<NamedPreset>> {
    if arg == "default" {
        return Ok(augment::ablation_grid());
    }
    let entries: Vec<GridEntry> = read_config(Path::new(arg))?;
    entries
        .into_iter()
        .map(|e| match e {
            GridEntry::Name(name) => augment::preset(&name)
                .map(|config| NamedPreset { name: name.clone(), config })
                .ok_or_else(|| SedError::InvalidConfig(format!("unknown preset `{name}`"))),
            GridEntry::Full { name, config } => {
                config.validate()?;
                Ok(NamedPreset { name, config })
            }
        })
        .collect()
}

fn ablate(a: &AblateArgs) -> Result<RunManifest> {
    let grid = load_grid(&a.grid)?;
    let mut scene: SceneSpec = read_config(&a.scene)?;
    if let Some(s) = a.seed {
        scene.seed = s;
    }
    let rows = harness::run_ablation(&grid, &scene)?;
    io::write_atomic(&a.out, harness::ablation_csv(&rows))?;
    Ok(manifest("ablate", Some(&a.scene), &[], &a.out, Some(scene.seed)))
}

/// Per-class PSD-ROC staircases plus the combined effective curve.
pub fn roc_svg(report: &PsdsReport) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 48.0;
    let e_max = report.scenario.e_max;
    let x = |e: f64| PAD + (e / e_max).clamp(0.0, 1.0) * (W - 2.0 * PAD);
    let y = |t: f64| H - PAD - t.clamp(0.0, 1.0) * (H - 2.0 * PAD);
    let stairs = |pts: &[(f64, f64)]| {
        let mut d = format!("M{:.2},{:.2}", x(0.0), y(0.0));
        let mut level = 0.0;
        for &(e, t) in pts {
            d.push_str(&format!(" L{:.2},{:.2} L{:.2},{:.2}", x(e), y(level), x(e), y(t)));
            level = t;
        }
        d.push_str(&format!(" L{:.2},{:.2}", x(e_max), y(level)));
        d
    };
    let palette = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"11\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <path d=\"M{PAD},{PAD} L{PAD},{b} L{r},{b}\" stroke=\"black\" fill=\"none\"/>\n\
         <text x=\"{cx}\" y=\"{ty}\" text-anchor=\"middle\">eFPR (per hour), psds = {psds:.4}</text>\n\
         <text x=\"12\" y=\"{cy}\" transform=\"rotate(-90 12 {cy})\" text-anchor=\"middle\">TPR</text>\n",
        b = H - PAD,
        r = W - PAD,
        cx = W / 2.0,
        ty = H - 12.0,
        cy = H / 2.0,
        psds = report.psds,
    );
    for (i, (name, pts)) in report.per_class_roc.iter().enumerate() {
        let color = palette[i % palette.len()];
        svg.push_str(&format!(
            "<path d=\"{}\" stroke=\"{color}\" fill=\"none\" stroke-width=\"1\" opacity=\"0.7\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{name}</text>\n",
            stairs(pts),
            W - PAD - 90.0,
            PAD + 14.0 * i as f64,
        ));
    }
    svg.push_str(&format!(
        "<path d=\"{}\" stroke=\"black\" fill=\"none\" stroke-width=\"2\"/>\n</svg>\n",
        stairs(&report.etpr_curve)
    ));
    svg
}
