//! The `mask` command line. Each subcommand is a plain function returning
//! the text to print, so tests can drive them without spawning processes.

use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use mask_core::detection::{parse_detections, DetectionError, DetectionTimeline};
use mask_core::eval::{
    agreement_score, compute_eer, compute_wer, format_percent, format_whole_percent, mask_leakage, pitch_correlation,
    track_pitch, EvalError, PitchTrackParams, ScoreSet,
};
use mask_core::hiding::Scope;
use mask_core::media::rvf::{read_rvf_file, write_rvf_file};
use mask_core::media::transcode::{open_video, Transcoder};
use mask_core::media::wav::{read_wav_file, write_wav_file};
use mask_core::media::MediaError;
use mask_core::pipeline::{
    all_capabilities, export_kinematics, run_pipeline, scope_mask, validate_config_str, KinematicsFormat,
    MaskingConfig, PipelineError, PresetStore,
};
use mask_core::{Mask, VideoHeader};
use mask_manager::{Manager, ManagerConfig, ManagerError, SystemClock};
use mask_worker::{run_worker, WorkerConfig, WorkerControl, WorkerError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Media(#[from] MediaError),
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Manager(#[from] ManagerError),
    #[error(transparent)]
    Worker(#[from] WorkerError),
    #[error("{context}: {source}")]
    Io { context: String, source: io::Error },
}

impl CliError {
    /// 2 for bad invocations and configs, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) | Self::Pipeline(PipelineError::Config { .. }) => 2,
            _ => 1,
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(format!("reading {}", path.display())))
}

#[derive(Debug, Parser)]
#[command(name = "mask", version, about = "Privacy masking for research video")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mask one video in a single local pass.
    Run(RunArgs),
    /// Run the job manager and its HTTP API.
    Serve(ServeArgs),
    /// Run a worker against a manager.
    Worker(WorkerArgs),
    /// Privacy and utility metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Detection document; without one no persons are masked.
    #[arg(long)]
    pub detections: Option<PathBuf>,
    /// Config file, or `preset:NAME`. Defaults to the identity config.
    #[arg(long)]
    pub config: Option<String>,
    /// `.rvf` is written natively; other extensions go through the transcoder.
    #[arg(long)]
    pub output: PathBuf,
    /// Audio track (WAV) to process alongside the video.
    #[arg(long)]
    pub audio: Option<PathBuf>,
    #[arg(long)]
    pub audio_out: Option<PathBuf>,
    /// Defaults to `<output>.kinematics.json` when the config exports JSON.
    #[arg(long)]
    pub kinematics_json: Option<PathBuf>,
    /// Defaults to `<output>.kinematics.csv` when the config exports CSV.
    #[arg(long)]
    pub kinematics_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub listen: SocketAddr,
    #[arg(long, env = "MASK_DATA_DIR")]
    pub data_dir: PathBuf,
    /// Frames per chunk.
    #[arg(long, default_value_t = 250)]
    pub core_size: u64,
    /// Fixed chunk overlap; derived from the hiding kernel when omitted.
    #[arg(long)]
    pub overlap: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct WorkerArgs {
    #[arg(long)]
    pub manager: String,
    /// Comma-separated strategy and overlay names; all by default.
    #[arg(long, value_delimiter = ',')]
    pub capabilities: Option<Vec<String>>,
    #[arg(long, default_value_t = 1)]
    pub parallelism: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum EvalCommand {
    /// Pearson correlation of pitch tracks over frames voiced in both.
    PitchCorr {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Equal error rate from `label score` lines.
    Eer {
        #[arg(long)]
        scores: PathBuf,
    },
    /// Word error rate.
    Wer {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        hyp: PathBuf,
    },
    /// Fraction of matching labels, one label per line.
    Agreement {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
    /// Fraction of person pixels left unchanged by masking.
    Leakage {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        masked: PathBuf,
        #[arg(long)]
        detections: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
}

pub fn execute(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(a) => run(&a),
        Command::Serve(a) => serve(&a),
        Command::Worker(a) => worker(&a),
        Command::Eval(e) => eval(&e),
    }
}

/// Resolves `--config`: a JSON file, or `preset:NAME` from the built-ins.
pub fn load_config(spec: Option<&str>) -> Result<MaskingConfig, CliError> {
    match spec {
        None => Ok(MaskingConfig::default()),
        Some(s) => match s.strip_prefix("preset:") {
            Some(name) => Ok(PresetStore::builtin().resolve(name, None)?),
            None => Ok(validate_config_str(&read_text(Path::new(s))?)?),
        },
    }
}

fn load_detections(path: Option<&Path>, header: &VideoHeader) -> Result<DetectionTimeline, CliError> {
    match path {
        Some(p) => Ok(parse_detections(&read_text(p)?)?),
        None => Ok(DetectionTimeline::new(header.width, header.height, header.fps)),
    }
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    output.with_file_name(name)
}

fn is_rvf_path(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("rvf"))
}

pub fn run(args: &RunArgs) -> Result<String, CliError> {
    let config = load_config(args.config.as_deref())?;
    let transcoder = Transcoder::from_env();
    let (header, frames) = open_video(&args.input, &transcoder)?;
    let detections = load_detections(args.detections.as_deref(), &header)?;
    let audio = args.audio.as_deref().map(read_wav_file).transpose()?;
    let result = run_pipeline(&header, &frames, audio.as_ref(), &detections, &config)?;

    let mut lines = Vec::new();
    let out_header = VideoHeader {
        frame_count: result.frames.len() as u32,
        ..header
    };
    if is_rvf_path(&args.output) {
        write_rvf_file(&args.output, &out_header, &result.frames)?;
    } else {
        // encode through the transcoder from native intermediates
        let tmp_video = sibling(&args.output, ".tmp.rvf");
        let tmp_audio = sibling(&args.output, ".tmp.wav");
        write_rvf_file(&tmp_video, &out_header, &result.frames)?;
        if let Some(clip) = &result.audio {
            write_wav_file(&tmp_audio, clip)?;
        }
        let muxed = transcoder.encode(&tmp_video, result.audio.as_ref().map(|_| tmp_audio.as_path()), &args.output);
        let _ = fs::remove_file(&tmp_video);
        let _ = fs::remove_file(&tmp_audio);
        muxed?;
    }
    lines.push(format!("video: {} ({} frames)", args.output.display(), result.frames.len()));
    if let Some(path) = &args.audio_out {
        match &result.audio {
            Some(clip) => {
                write_wav_file(path, clip)?;
                lines.push(format!("audio: {}", path.display()));
            }
            None => lines.push("audio: none (no input track or voice removed)".into()),
        }
    }
    if result.voice.pitch_too_short {
        log::warn!("audio shorter than one pitch-shift window; left unshifted");
    }
    if let Some(doc) = &result.kinematics {
        let targets = [
            (config.exports.kinematics_json, &args.kinematics_json, ".kinematics.json", KinematicsFormat::Json),
            (config.exports.kinematics_csv, &args.kinematics_csv, ".kinematics.csv", KinematicsFormat::Csv),
        ];
        for (wanted, explicit, suffix, format) in targets {
            if !wanted {
                continue;
            }
            let path = explicit.clone().unwrap_or_else(|| sibling(&args.output, suffix));
            fs::write(&path, export_kinematics(doc, format)?).map_err(io_err(format!("writing {}", path.display())))?;
            lines.push(format!("kinematics: {}", path.display()));
        }
    }
    if !result.skips.is_empty() {
        lines.push(format!("skipped overlays: {}", result.skips.len()));
    }
    Ok(lines.join("\n"))
}

pub fn serve(args: &ServeArgs) -> Result<String, CliError> {
    let mut cfg = ManagerConfig::new(&args.data_dir).with_env()?;
    if args.core_size == 0 {
        return Err(CliError::Usage("--core-size must be >= 1".into()));
    }
    cfg.core_size = args.core_size;
    cfg.overlap = args.overlap;
    let manager = Arc::new(Manager::open(cfg, Arc::new(SystemClock))?);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(io_err("starting runtime"))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(args.listen)
            .await
            .map_err(io_err(format!("binding {}", args.listen)))?;
        log::info!("manager listening on http://{}", listener.local_addr().map_err(io_err("local address"))?);
        mask_manager::http::serve(manager, listener, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(io_err("serving"))
    })?;
    Ok(String::new())
}

pub fn worker(args: &WorkerArgs) -> Result<String, CliError> {
    let mut cfg = WorkerConfig::new(&args.manager);
    if let Some(caps) = &args.capabilities {
        let known = all_capabilities();
        if let Some(bad) = caps.iter().find(|c| !known.contains(c)) {
            return Err(CliError::Usage(format!("unknown capability {bad:?}; known: {}", known.join(","))));
        }
        cfg.capabilities = caps.clone();
    }
    cfg.parallelism = args.parallelism;
    cfg.heartbeat_interval = Duration::from_secs(5);
    let stats = run_worker(cfg, WorkerControl::new())?;
    Ok(format!("worker {} done: {} chunks, {} failed", stats.worker_id, stats.completed, stats.failed))
}

fn lines_of(text: &str) -> Vec<&str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

/// Person-scope masks for every frame of a video.
pub fn person_masks(detections: &DetectionTimeline, header: &VideoHeader, threshold: f64) -> Result<Vec<Mask>, CliError> {
    if detections.width != header.width || detections.height != header.height {
        return Err(CliError::Usage(format!(
            "detections are for {}x{} but video is {}x{}",
            detections.width, detections.height, header.width, header.height
        )));
    }
    (0..u64::from(header.frame_count))
        .map(|i| {
            let persons: Vec<_> = detections.persons_at(i).iter().filter(|p| p.confidence >= threshold).collect();
            Ok(scope_mask(&persons, header.width, header.height, Scope::Persons)?)
        })
        .collect()
}

pub fn eval(cmd: &EvalCommand) -> Result<String, CliError> {
    match cmd {
        EvalCommand::PitchCorr { a, b } => {
            let params = PitchTrackParams::default();
            let ta = track_pitch(&read_wav_file(a)?, &params)?;
            let tb = track_pitch(&read_wav_file(b)?, &params)?;
            let r = pitch_correlation(&ta, &tb)?;
            Ok(format!("pitch correlation: {r:.4} ({})", format_whole_percent(r)))
        }
        EvalCommand::Eer { scores } => {
            let set = ScoreSet::parse(&read_text(scores)?)?;
            let r = compute_eer(&set)?;
            Ok(format!("EER: {} (threshold {:.4})", format_percent(r.eer), r.threshold))
        }
        EvalCommand::Wer { reference, hyp } => {
            let w = compute_wer(&read_text(reference)?, &read_text(hyp)?)?;
            Ok(format!("WER: {}", format_percent(w)))
        }
        EvalCommand::Agreement { a, b } => {
            let (ta, tb) = (read_text(a)?, read_text(b)?);
            let s = agreement_score(&lines_of(&ta), &lines_of(&tb))?;
            Ok(format!("agreement: {}", format_percent(s)))
        }
        EvalCommand::Leakage {
            original,
            masked,
            detections,
            threshold,
        } => {
            let (header, orig) = read_rvf_file(original)?;
            let (_, out) = read_rvf_file(masked)?;
            let det = parse_detections(&read_text(detections)?)?;
            let masks = person_masks(&det, &header, *threshold)?;
            let l = mask_leakage(&orig, &out, &masks)?;
            Ok(format!("leakage: {}", format_percent(l)))
        }
    }
}
