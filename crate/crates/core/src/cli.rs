//! The `lesionseg` command line: `synth`, `pack`, `train`, `predict` and
//! `evaluate`.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 data or shape mismatch,
//! 5 training diverged.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::data::{
    encode_netpbm, pack_records, read_netpbm, read_records, resize_mask, synth_generate, Image, Sample, SynthOpts,
};
use crate::error::Error;
use crate::eval::{confusion, contact_sheet, write_report, EvalReport, ImageScore, ReportFormat};
use crate::model::{
    load_checkpoint, save_checkpoint, BatchSampler, ModelConfig, SegModel, TrainConfig,
};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_DATA: i32 = 4;
pub const EXIT_DIVERGED: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "lesionseg", version, about = "Atrous-convolution lesion segmentation pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic lesion images with ground-truth masks.
    Synth(SynthArgs),
    /// Resize image/mask pairs and pack them into an LSR1 record file.
    Pack(PackArgs),
    /// Train (or resume training) a model on a record file.
    Train(TrainArgs),
    /// Segment every image in a directory at its original size.
    Predict(PredictArgs),
    /// Score predictions against ground truth with the Jaccard index.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub count: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 513, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,
    #[arg(long, default_value_t = 0.3, value_parser = parse_probability)]
    pub hair_prob: f64,
}

#[derive(Debug, Args)]
pub struct PackArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 513, value_parser = clap::value_parser!(u64).range(1..))]
    pub size: u64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub records: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub steps: u64,
    #[arg(long, default_value_t = 0.001)]
    pub lr: f64,
    #[arg(long, default_value_t = 100.0)]
    pub fg_weight: f64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub batch: u64,
    /// Input crop, 1 (mod 16). Defaults to 513, or the resumed checkpoint's crop.
    #[arg(long)]
    pub crop: Option<usize>,
    /// Defaults to 32, or the resumed checkpoint's width.
    #[arg(long)]
    pub base_channels: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Loss log; defaults to the checkpoint path with a `.loss.csv` extension.
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    #[arg(long, default_value_t = 0.650, value_parser = parse_probability)]
    pub threshold: f64,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, default_value = "csv", value_parser = ["csv", "json"])]
    pub format: String,
    /// Write side-by-side prediction/ground-truth sheets here.
    #[arg(long)]
    pub sheets: Option<PathBuf>,
    /// Compare both masks after nearest-resizing them to this square size
    /// instead of at the stored resolution.
    #[arg(long)]
    pub at_size: Option<usize>,
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        Self::new(exit_code(&err), err.to_string())
    }
}

/// Exit code policy for library errors.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::InvalidConfig(_) => EXIT_USAGE,
        Error::TrainingDiverged { .. } => EXIT_DIVERGED,
        _ => EXIT_DATA,
    }
}

type CliResult<T = ()> = Result<T, CliError>;

/// Parses `args` (including the program name) and runs the subcommand,
/// returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return err.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    }
}

pub fn execute(command: Command) -> CliResult {
    match command {
        Command::Synth(a) => cmd_synth(&a),
        Command::Pack(a) => cmd_pack(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
    }
}

fn io_err(path: &Path, err: std::io::Error) -> CliError {
    Error::io(path, err).into()
}

fn create_dir(path: &Path) -> CliResult {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Writes through a temporary sibling and renames it into place.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Maps an on-disk mask (0 / 255) to the canonical 0 / 1 form.
fn binarize(image: &Image, source: &Path) -> CliResult<Vec<u8>> {
    if image.channels != 1 {
        return Err(CliError::new(
            EXIT_DATA,
            format!("{}: masks must be grayscale PGM", source.display()),
        ));
    }
    image
        .data
        .iter()
        .map(|&v| match v {
            0 => Ok(0),
            255 => Ok(1),
            other => Err(CliError::new(
                EXIT_DATA,
                format!("{}: mask value {other} is neither 0 nor 255", source.display()),
            )),
        })
        .collect()
}

fn mask_image(mask: &[u8], width: usize, height: usize) -> Image {
    Image::gray(width, height, mask.iter().map(|&v| if v > 0 { 255 } else { 0 }).collect()).expect("mask dims")
}

/// Files in `dir` with the given extension, keyed by file stem, sorted.
fn list_by_stem(dir: &Path, ext: &str) -> CliResult<BTreeMap<String, PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| io_err(dir, e))?;
    let mut out = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some(ext) {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_owned(), path);
        }
    }
    Ok(out)
}

/// `id -> (orig_h, orig_w)` from `manifest.csv`, if the directory has one.
fn read_manifest(dir: &Path) -> CliResult<BTreeMap<String, (usize, usize)>> {
    let path = dir.join("manifest.csv");
    let text = match fs::read_to_string(&path) {
        Ok(text) => text,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(BTreeMap::new()),
        Err(e) => return Err(io_err(&path, e)),
    };
    let bad = |line: usize| CliError::new(EXIT_DATA, format!("{}: malformed line {line}", path.display()));
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let [id, h, w] = fields[..] else { return Err(bad(i + 1)) };
        let h = h.trim().parse().map_err(|_| bad(i + 1))?;
        let w = w.trim().parse().map_err(|_| bad(i + 1))?;
        out.insert(id.trim().to_owned(), (h, w));
    }
    Ok(out)
}

pub fn cmd_synth(args: &SynthArgs) -> CliResult {
    let opts = SynthOpts {
        count: args.count as usize,
        seed: args.seed,
        size: args.size as usize,
        hair_prob: args.hair_prob,
        ..SynthOpts::default()
    };
    create_dir(&args.out)?;
    let mut manifest = String::from("id,orig_h,orig_w\n");
    for sample in synth_generate(&opts) {
        write_atomic(&args.out.join(format!("{}.ppm", sample.id)), &encode_netpbm(&sample.rgb_image()))?;
        let mask = mask_image(&sample.mask, sample.width, sample.height);
        write_atomic(&args.out.join(format!("{}_mask.pgm", sample.id)), &encode_netpbm(&mask))?;
        writeln!(manifest, "{},{},{}", sample.id, sample.orig_h, sample.orig_w).unwrap();
    }
    write_atomic(&args.out.join("manifest.csv"), manifest.as_bytes())?;
    println!("wrote {} samples to {}", opts.count, args.out.display());
    Ok(())
}

pub fn cmd_pack(args: &PackArgs) -> CliResult {
    let size = args.size as usize;
    let images = list_by_stem(&args.images, "ppm")?;
    let masks: BTreeMap<String, PathBuf> = list_by_stem(&args.images, "pgm")?
        .into_iter()
        .filter_map(|(stem, p)| stem.strip_suffix("_mask").map(|id| (id.to_owned(), p)))
        .collect();
    let unpaired: Vec<&String> = images
        .keys()
        .filter(|id| !masks.contains_key(*id))
        .chain(masks.keys().filter(|id| !images.contains_key(*id)))
        .collect();
    if !unpaired.is_empty() {
        return Err(CliError::new(EXIT_DATA, format!("unpaired ids: {unpaired:?}")));
    }
    if images.is_empty() {
        return Err(CliError::new(EXIT_DATA, format!("no image/mask pairs in {}", args.images.display())));
    }
    let manifest = read_manifest(&args.images)?;
    let mut samples = Vec::with_capacity(images.len());
    for (id, image_path) in &images {
        let image = read_netpbm(image_path)?;
        let mask_path = &masks[id];
        let mask_img = read_netpbm(mask_path)?;
        if (mask_img.width, mask_img.height) != (image.width, image.height) {
            return Err(CliError::new(EXIT_DATA, format!("{id}: mask and image sizes differ")));
        }
        let mut sample = Sample::new(id.clone(), &image, binarize(&mask_img, mask_path)?)?;
        if let Some(&(h, w)) = manifest.get(id) {
            sample.orig_h = h;
            sample.orig_w = w;
        }
        samples.push(sample.resized(size)?);
    }
    pack_records(&samples, &args.out)?;
    println!("packed {} records at {size}x{size} into {}", samples.len(), args.out.display());
    Ok(())
}

fn default_log_path(out: &Path) -> PathBuf {
    out.with_extension("loss.csv")
}

pub fn cmd_train(args: &TrainArgs) -> CliResult {
    let samples = read_records(&args.records)?;
    let mut model = match &args.resume {
        Some(path) => {
            let model = load_checkpoint(path)?;
            let cfg = model.config();
            for (flag, given, stored) in [
                ("--crop", args.crop, cfg.crop),
                ("--base-channels", args.base_channels, cfg.base_channels),
            ] {
                if given.is_some_and(|g| g != stored) {
                    return Err(CliError::new(
                        EXIT_DATA,
                        format!("{flag} {} does not match resumed checkpoint ({stored})", given.unwrap()),
                    ));
                }
            }
            model
        }
        None => {
            let cfg = ModelConfig {
                crop: args.crop.unwrap_or(513),
                base_channels: args.base_channels.unwrap_or(32),
                seed: args.seed,
                ..ModelConfig::default()
            };
            cfg.validate()?;
            SegModel::new(cfg)?
        }
    };
    let start = model.step();
    let tcfg = TrainConfig {
        base_lr: args.lr,
        fg_weight: args.fg_weight,
        batch: args.batch as usize,
        max_steps: start + args.steps,
        seed: args.seed,
        ..TrainConfig::default()
    };
    tcfg.validate()?;

    let log_path = args.log.clone().unwrap_or_else(|| default_log_path(&args.out));
    let mut log = fs::File::create(&log_path).map_err(|e| io_err(&log_path, e))?;
    writeln!(log, "step,loss,lr").map_err(|e| io_err(&log_path, e))?;

    if args.steps > 0 {
        let mut sampler = BatchSampler::new(&samples, model.config().crop, args.seed)?;
        let mut last_finite = None;
        let mut log_err = None;
        let result = model.fit(&mut sampler, &tcfg, args.steps, |m| {
            last_finite = Some(m.step);
            if let Err(e) = writeln!(log, "{},{:.6},{:.6e}", m.step, m.loss, m.lr) {
                log_err.get_or_insert(e);
            }
        });
        if let Some(e) = log_err {
            return Err(io_err(&log_path, e));
        }
        if let Err(err) = result {
            let mut e = CliError::from(err);
            if e.code == EXIT_DIVERGED {
                let last = last_finite.map_or("none".to_string(), |s| s.to_string());
                e.message = format!("{}; last finite step: {last}", e.message);
            }
            return Err(e);
        }
    }
    save_checkpoint(&model, &args.out)?;
    println!(
        "trained {} steps (now at step {}), checkpoint {}",
        args.steps,
        model.step(),
        args.out.display()
    );
    Ok(())
}

pub fn cmd_predict(args: &PredictArgs) -> CliResult {
    let model = load_checkpoint(&args.checkpoint)?;
    let images = list_by_stem(&args.images, "ppm")?;
    if images.is_empty() {
        return Err(CliError::new(EXIT_DATA, format!("no .ppm images in {}", args.images.display())));
    }
    let manifest = read_manifest(&args.images)?;
    create_dir(&args.out)?;
    for (id, path) in &images {
        let image = read_netpbm(path)?;
        if image.channels != 3 {
            return Err(CliError::new(EXIT_DATA, format!("{id}: expected an RGB image")));
        }
        let mut mask = model.segment(&image)?;
        let (mut h, mut w) = (image.height, image.width);
        if let Some(&(oh, ow)) = manifest.get(id) {
            if (oh, ow) != (h, w) {
                mask = resize_mask(&mask, h, w, oh, ow)?;
                (h, w) = (oh, ow);
            }
        }
        let out = mask_image(&mask, w, h);
        write_atomic(&args.out.join(format!("{id}_pred.pgm")), &encode_netpbm(&out))?;
    }
    println!("wrote {} predictions to {}", images.len(), args.out.display());
    Ok(())
}

/// `id -> path` for masks in `dir`; `preferred` suffix wins over `fallback`.
fn masks_by_id(dir: &Path, preferred: &str, fallback: &str) -> CliResult<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    let files = list_by_stem(dir, "pgm")?;
    for suffix in [fallback, preferred] {
        for (stem, path) in &files {
            if let Some(id) = stem.strip_suffix(suffix) {
                out.insert(id.to_owned(), path.clone());
            }
        }
    }
    Ok(out)
}

fn load_mask(path: &Path) -> CliResult<(Vec<u8>, usize, usize)> {
    let img = read_netpbm(path)?;
    Ok((binarize(&img, path)?, img.height, img.width))
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> CliResult {
    let preds = masks_by_id(&args.pred, "_pred", "_mask")?;
    let gts = masks_by_id(&args.gt, "_mask", "_pred")?;
    let gt_only: BTreeMap<String, PathBuf> = {
        let mask_only = masks_by_id(&args.gt, "_mask", "_mask")?;
        if mask_only.is_empty() { gts } else { mask_only }
    };
    let missing: Vec<&String> = preds.keys().filter(|id| !gt_only.contains_key(*id)).collect();
    if !missing.is_empty() {
        return Err(CliError::new(EXIT_DATA, format!("predictions without ground truth: {missing:?}")));
    }
    let ids: BTreeSet<&String> = preds.keys().collect();
    if ids.is_empty() {
        return Err(CliError::new(EXIT_DATA, "no prediction/ground-truth pairs to evaluate"));
    }
    if let Some(dir) = &args.sheets {
        create_dir(dir)?;
    }
    let mut scores = Vec::with_capacity(ids.len());
    for id in ids {
        let (mut pred, ph, pw) = load_mask(&preds[id])?;
        let (mut gt, gh, gw) = load_mask(&gt_only[id])?;
        let (mut h, mut w) = (gh, gw);
        if let Some(size) = args.at_size {
            pred = resize_mask(&pred, ph, pw, size, size)?;
            gt = resize_mask(&gt, gh, gw, size, size)?;
            (h, w) = (size, size);
        } else if (ph, pw) != (gh, gw) {
            return Err(CliError::new(
                EXIT_DATA,
                format!("{id}: prediction is {ph}x{pw}, ground truth {gh}x{gw}"),
            ));
        }
        let jaccard = confusion(&pred, &gt)?.jaccard();
        if let Some(dir) = &args.sheets {
            let sheet = contact_sheet(&pred, &gt, h, w)?;
            write_atomic(&dir.join(format!("{id}_sheet.ppm")), &encode_netpbm(&sheet))?;
        }
        scores.push(ImageScore { id: id.clone(), jaccard });
    }
    let report = EvalReport::new(scores, args.threshold)?;
    let format: ReportFormat = args.format.parse()?;
    write_report(&report, &args.report, format)?;
    let s = &report.summary;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(
        stdout,
        "images {}  mean {:.3}  median {:.3}  std {:.3}  success {}/{} ({:.3}%) at threshold {:.3}",
        s.count,
        s.mean,
        s.median,
        s.std,
        s.success_count,
        s.count,
        s.success_rate * 100.0,
        s.threshold
    );
    Ok(())
}
