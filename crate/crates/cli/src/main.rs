use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lipo_core::config::load_config;
use lipo_core::eval::{
    accepted_pairs, line_inlier_ab, max_recall_at_full_precision, pr_csv, pr_sweep, summarize, GroundTruth,
};
use lipo_core::features::{extract_frame, load_features, load_grayscale, save_features};
use lipo_core::pipeline::{log_writer, parse_decision_log, run_sequence, FrameInput, LoopDecision, PipelineConfig};
use lipo_core::{Error, FrameFeatures, Result};

const IMAGE_EXTENSIONS: &[&str] = &["png", "pgm", "ppm", "pnm", "pbm"];
const FEATURE_EXTENSION: &str = "feat";
const DECISION_LOG: &str = "decisions.log";
const SUMMARY: &str = "summary.txt";

#[derive(Parser)]
#[command(name = "lipo", version, about = "Loop closure detection with points and lines")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FeatureMode {
    /// Extract features from images in the dataset directory.
    Extract,
    /// Read feature files written by `extract`.
    Import,
}

#[derive(Subcommand)]
enum Command {
    /// Writes one feature file per image.
    Extract {
        images: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Skip unreadable images instead of stopping.
        #[arg(long)]
        continue_on_error: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Runs the detector over a sequence and writes the decision log.
    Run {
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "extract")]
        features: FeatureMode,
        /// Skip unreadable images instead of stopping.
        #[arg(long)]
        continue_on_error: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Scores a decision log against ground truth.
    Eval {
        log: PathBuf,
        gt: PathBuf,
        /// Also write the summary here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Precision and recall over a range of inlier thresholds.
    Sweep {
        log: PathBuf,
        gt: PathBuf,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        min_threshold: usize,
        /// Defaults to one past the largest inlier count in the log.
        #[arg(long)]
        max_threshold: Option<usize>,
    },
    /// Mean line inliers of the accepted pairs under both line matchers.
    AbLines {
        /// Directory of feature files.
        features: PathBuf,
        log: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LIPO_LOG", "warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 2 for bad configuration or inputs that do not belong together, 1 otherwise.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Frame { source, .. } => exit_code(source),
        Error::Config(_) | Error::SequenceMismatch(_) | Error::Usage(_) => 2,
        _ => 1,
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Extract {
            images,
            out,
            continue_on_error,
            common,
        } => cmd_extract(&images, &out, continue_on_error, &load(&common)?),
        Command::Run {
            dataset,
            out,
            features,
            continue_on_error,
            common,
        } => cmd_run(&dataset, &out, features, continue_on_error, &load(&common)?),
        Command::Eval { log, gt, out } => cmd_eval(&log, &gt, out.as_deref()),
        Command::Sweep {
            log,
            gt,
            out,
            min_threshold,
            max_threshold,
        } => cmd_sweep(&log, &gt, out.as_deref(), min_threshold, max_threshold),
        Command::AbLines {
            features,
            log,
            out,
            common,
        } => cmd_ab_lines(&features, &log, out.as_deref(), &load(&common)?),
    }
}

fn load(common: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &common.config {
        Some(path) => load_config(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Files in `dir` with one of `extensions`, in lexicographic name order.
fn list_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_error(dir, e))? {
        let path = entry.map_err(|e| io_error(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

/// Frames extracted from the images of `dir`; frame ids are positions in
/// name order, so skipped images leave gaps.
fn extracted_frames<'a>(
    images: &'a [PathBuf],
    cfg: &'a PipelineConfig,
    continue_on_error: bool,
) -> impl Iterator<Item = Result<(PathBuf, FrameInput)>> + 'a {
    images.iter().enumerate().filter_map(move |(id, path)| {
        let start = Instant::now();
        match load_grayscale(path) {
            Ok(img) => {
                let features = extract_frame(&img, id as u64, &cfg.extraction);
                let extraction_ms = if cfg.record_timings {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                };
                Some(Ok((
                    path.clone(),
                    FrameInput {
                        features,
                        extraction_ms,
                    },
                )))
            }
            Err(e) if continue_on_error => {
                eprintln!("skipped {}: {e}", path.display());
                None
            }
            Err(e) => Some(Err(e)),
        }
    })
}

fn feature_path(out: &Path, image: &Path) -> PathBuf {
    let name = image
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.join(format!("{name}.{FEATURE_EXTENSION}"))
}

fn cmd_extract(images: &Path, out: &Path, continue_on_error: bool, cfg: &PipelineConfig) -> Result<()> {
    let files = list_files(images, IMAGE_EXTENSIONS)?;
    create_dir(out)?;
    let mut written = 0;
    for item in extracted_frames(&files, cfg, continue_on_error) {
        let (path, input) = item?;
        save_features(&input.features, &feature_path(out, &path))?;
        written += 1;
    }
    log::info!("wrote {written} feature files to {}", out.display());
    Ok(())
}

fn imported_frames(files: &[PathBuf]) -> impl Iterator<Item = Result<FrameInput>> + '_ {
    files.iter().map(|p| load_features(p).map(FrameInput::from))
}

fn cmd_run(dataset: &Path, out: &Path, mode: FeatureMode, continue_on_error: bool, cfg: &PipelineConfig) -> Result<()> {
    cfg.validate()?;
    let images = list_files(dataset, IMAGE_EXTENSIONS)?;
    let feature_files = list_files(dataset, &[FEATURE_EXTENSION])?;
    match mode {
        FeatureMode::Extract if images.is_empty() && !feature_files.is_empty() => {
            return Err(Error::Usage(
                "dataset holds feature files; use --features import".into(),
            ));
        }
        FeatureMode::Import if feature_files.is_empty() && !images.is_empty() => {
            return Err(Error::Usage("dataset holds images; use --features extract".into()));
        }
        _ => {}
    }
    create_dir(out)?;
    let log_path = out.join(DECISION_LOG);
    let file = fs::File::create(&log_path).map_err(|e| io_error(&log_path, e))?;
    let mut writer = BufWriter::new(file);
    let summary = match mode {
        FeatureMode::Extract => {
            let source = extracted_frames(&images, cfg, continue_on_error).map(|r| r.map(|(_, f)| f));
            run_sequence(source, cfg, log_writer(&mut writer))?
        }
        FeatureMode::Import => run_sequence(imported_frames(&feature_files), cfg, log_writer(&mut writer))?,
    };
    writer.flush().map_err(|e| io_error(&log_path, e))?;
    let text = summary.to_string();
    write_file(&out.join(SUMMARY), &text)?;
    print!("{text}");
    Ok(())
}

fn read_log(path: &Path) -> Result<Vec<LoopDecision>> {
    parse_decision_log(&fs::read_to_string(path).map_err(|e| io_error(path, e))?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_eval(log: &Path, gt: &Path, out: Option<&Path>) -> Result<()> {
    let summary = summarize(&read_log(log)?, &GroundTruth::load(gt)?)?.to_string();
    if let Some(path) = out {
        write_file(path, &summary)?;
    }
    print!("{summary}");
    Ok(())
}

fn cmd_sweep(log: &Path, gt: &Path, out: Option<&Path>, min: usize, max: Option<usize>) -> Result<()> {
    let decisions = read_log(log)?;
    let max = max.unwrap_or_else(|| decisions.iter().map(|d| d.total_inliers()).max().unwrap_or(0) + 1);
    if max < min {
        return Err(Error::Usage(format!(
            "max threshold {max} is below min threshold {min}"
        )));
    }
    let thresholds: Vec<usize> = (min..=max).collect();
    let points = pr_sweep(&decisions, &GroundTruth::load(gt)?, &thresholds)?;
    emit(out, &pr_csv(&points))?;
    let best = max_recall_at_full_precision(&points);
    if out.is_some() {
        println!("max_recall_at_p100 = {best:?}");
    } else {
        eprintln!("max_recall_at_p100 = {best:?}");
    }
    Ok(())
}

fn cmd_ab_lines(features: &Path, log: &Path, out: Option<&Path>, cfg: &PipelineConfig) -> Result<()> {
    let mut frames: BTreeMap<u64, FrameFeatures> = BTreeMap::new();
    for path in list_files(features, &[FEATURE_EXTENSION])? {
        let f = load_features(&path)?;
        frames.insert(f.frame_id, f);
    }
    let decisions = read_log(log)?;
    let table = line_inlier_ab(&accepted_pairs(&decisions, &frames), &cfg.geometry);
    emit(out, &table.to_string())
}
