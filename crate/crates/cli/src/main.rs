use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use autoseed_core::io::{encode_label_png, encode_png_gray};
use autoseed_core::pipeline::seed_overlay;
use autoseed_core::synth::random_scene;
use autoseed_core::{
    dice_match, histogram, load_gray, load_label_map, median_filter, otsu_threshold, segment,
    BlobSpec, Connectivity, Error, NeighborhoodRule, Polarity, SceneSpec, SegmentationConfig,
};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "autoseed",
    version,
    about = "Automatic seeded region growing for grayscale images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment an image (or every image in a directory).
    Segment(SegmentArgs),
    /// Render a synthetic blob scene and its ground truth.
    Synth(SynthArgs),
    /// Score a predicted label map against ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        /// Where to write the JSON report.
        report: PathBuf,
    },
    /// Print the Otsu threshold of an image as JSON.
    Otsu {
        input: PathBuf,
        /// Median-filter radius applied before thresholding.
        #[arg(long, default_value_t = 0)]
        median_radius: usize,
    },
}

#[derive(Args)]
struct SegmentArgs {
    /// Image file, or a directory of .png/.pgm files for batch mode.
    input: PathBuf,
    /// Output prefix; in batch mode, the output directory.
    prefix: PathBuf,
    /// JSON config, or a previous run report whose config is reused.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed_mask_r: Option<usize>,
    #[arg(long)]
    median_radius: Option<usize>,
    #[arg(long)]
    grow_radius: Option<usize>,
    #[arg(long)]
    connectivity: Option<Connectivity>,
    #[arg(long)]
    polarity: Option<Polarity>,
    #[arg(long)]
    min_area: Option<usize>,
    #[arg(long)]
    rng_seed: Option<u64>,
    /// pixel_only or pixel_and_mean
    #[arg(long, value_parser = parse_rule)]
    neighborhood_rule: Option<NeighborhoodRule>,
    /// Include per-stage wall-clock timings in the report (breaks byte-identical reruns).
    #[arg(long)]
    timings: bool,
    /// Worker threads for batch mode.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Output prefix for `<prefix>.image.png` and `<prefix>.gt.png`.
    prefix: PathBuf,
    /// JSON scene description; inline flags are ignored when given.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long, default_value_t = 256)]
    width: usize,
    #[arg(long, default_value_t = 256)]
    height: usize,
    #[arg(long, default_value_t = 40)]
    bg: u8,
    /// Target blob level for --random-blobs.
    #[arg(long, default_value_t = 160)]
    fg: u8,
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    /// Blob as "x,y,radius,intensity"; repeatable.
    #[arg(long = "blob", value_parser = parse_blob)]
    blobs: Vec<BlobSpec>,
    /// Place this many blobs at random instead of listing them.
    #[arg(long)]
    random_blobs: Option<usize>,
}

fn parse_rule(s: &str) -> Result<NeighborhoodRule, String> {
    match s {
        "pixel_only" => Ok(NeighborhoodRule::PixelOnly),
        "pixel_and_mean" => Ok(NeighborhoodRule::PixelAndMean),
        _ => Err(format!("expected pixel_only or pixel_and_mean, got {s:?}")),
    }
}

fn parse_blob(s: &str) -> Result<BlobSpec, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected x,y,radius,intensity, got {s:?}"));
    }
    let num = |i: usize| {
        parts[i]
            .parse::<f64>()
            .map_err(|e| format!("{:?}: {e}", parts[i]))
    };
    Ok(BlobSpec {
        center: (num(0)?, num(1)?),
        radius: num(2)?,
        intensity: parts[3]
            .parse()
            .map_err(|e| format!("{:?}: {e}", parts[3]))?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Segment(args) => cmd_segment(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Eval { pred, gt, report } => cmd_eval(&pred, &gt, &report),
        Command::Otsu {
            input,
            median_radius,
        } => cmd_otsu(&input, median_radius),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn resolve_config(args: &SegmentArgs) -> Result<SegmentationConfig> {
    let mut cfg = match &args.config {
        None => SegmentationConfig::default(),
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let mut value: serde_json::Value = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            // a run report carries its config under "config"
            if value.get("schema_version").is_some() {
                value = value
                    .get_mut("config")
                    .map(serde_json::Value::take)
                    .context("run report has no config field")?;
            }
            serde_json::from_value(value)
                .with_context(|| format!("invalid config in {}", path.display()))?
        }
    };
    macro_rules! overlay {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field {
                cfg.$field = v;
            }
        )*};
    }
    overlay!(
        k,
        seed_mask_r,
        median_radius,
        grow_radius,
        connectivity,
        polarity,
        min_area,
        rng_seed,
        neighborhood_rule
    );
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_segment(args: &SegmentArgs) -> Result<()> {
    let cfg = resolve_config(args)?;
    if !args.input.is_dir() {
        return segment_one(&args.input, &args.prefix, &cfg, args.timings);
    }

    let mut inputs: Vec<PathBuf> = fs::read_dir(&args.input)
        .with_context(|| format!("listing {}", args.input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "pgm"))
        })
        .collect();
    inputs.sort();
    if inputs.is_empty() {
        bail!("no .png or .pgm files in {}", args.input.display());
    }
    fs::create_dir_all(&args.prefix)
        .with_context(|| format!("creating {}", args.prefix.display()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .context("starting worker pool")?;
    let failures: Vec<String> = pool.install(|| {
        inputs
            .par_iter()
            .filter_map(|input| {
                let stem = input.file_stem().unwrap_or_default();
                let prefix = args.prefix.join(stem);
                segment_one(input, &prefix, &cfg, args.timings)
                    .err()
                    .map(|e| format!("{}: {e:#}", input.display()))
            })
            .collect()
    });
    for f in &failures {
        eprintln!("error: {f}");
    }
    if !failures.is_empty() {
        bail!("{} of {} images failed", failures.len(), inputs.len());
    }
    Ok(())
}

fn segment_one(input: &Path, prefix: &Path, cfg: &SegmentationConfig, timings: bool) -> Result<()> {
    let img = load_gray(input)?;
    let run = segment(&img, cfg).map_err(|e| match e {
        Error::TooManyClusters { k, available, what } => anyhow::anyhow!(
            "K = {k} exceeds the number of {what} ({available}); lower --k or --seed-mask-r"
        ),
        other => other.into(),
    })?;
    for w in &run.warnings {
        eprintln!("warning: {}: {w}", input.display());
    }

    let labels = encode_label_png(run.labels())?;
    let overlay = encode_png_gray(&seed_overlay(&img, &run.seeds, cfg.polarity))?;
    let report = run.report(Some(&input.to_string_lossy()), timings);
    let mut json = serde_json::to_string_pretty(&report)?;
    json.push('\n');

    write(&with_suffix(prefix, "labels.png"), &labels)?;
    write(&with_suffix(prefix, "seeds.png"), &overlay)?;
    write(&with_suffix(prefix, "report.json"), json.as_bytes())?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = if let Some(path) = &args.spec {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str::<SceneSpec>(&text)
            .with_context(|| format!("parsing {}", path.display()))?
    } else if let Some(n) = args.random_blobs {
        if !args.blobs.is_empty() {
            bail!("--blob and --random-blobs are mutually exclusive");
        }
        random_scene(
            args.width,
            args.height,
            n,
            args.bg,
            args.fg,
            args.sigma,
            args.rng_seed,
        )?
    } else {
        SceneSpec {
            width: args.width,
            height: args.height,
            blobs: args.blobs.clone(),
            bg_intensity: args.bg,
            noise_sigma: args.sigma,
            rng_seed: args.rng_seed,
        }
    };
    if spec.blobs.is_empty() {
        eprintln!("warning: scene has no blobs; the image is background only");
    }
    let (img, gt) = spec.generate()?;
    let mut json = serde_json::to_string_pretty(&spec)?;
    json.push('\n');
    write(
        &with_suffix(&args.prefix, "image.png"),
        &encode_png_gray(&img)?,
    )?;
    write(
        &with_suffix(&args.prefix, "gt.png"),
        &encode_label_png(&gt)?,
    )?;
    write(&with_suffix(&args.prefix, "scene.json"), json.as_bytes())?;
    Ok(())
}

fn cmd_eval(pred: &Path, gt: &Path, report: &Path) -> Result<()> {
    let p = load_label_map(pred)?;
    let g = load_label_map(gt)?;
    let r = dice_match(&p, &g)?;
    let mut json = serde_json::to_string_pretty(&r)?;
    json.push('\n');
    write(report, json.as_bytes())
}

fn cmd_otsu(input: &Path, median_radius: usize) -> Result<()> {
    let img = median_filter(&load_gray(input)?, median_radius);
    let r = otsu_threshold(&histogram(&img))?;
    println!("{}", serde_json::to_string(&r)?);
    Ok(())
}

/// `<prefix>.<suffix>`, keeping any dots already in the prefix.
fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
