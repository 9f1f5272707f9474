//! Command-line driver for generating sampling patterns, extracting binary
//! descriptors, matching descriptor sets, and scoring descriptor variants on
//! homography-registered image pairs.
//!
//! Every subcommand is deterministic given its flags: random choices are
//! driven by an explicit `--seed` that defaults to a fixed constant, never to
//! wall-clock time. Output files are written atomically (temp file + rename)
//! so a crashed run never leaves a half-written artifact behind.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use colorbits::descriptors::{
    extract_traced, load_descriptors, required_margin, save_descriptors, DescriptorConfig, Keypoint,
};
use colorbits::detect::{detect_fast, load_keypoints, save_keypoints, DetectorConfig};
use colorbits::evaluation::{
    build_variants, load_manifest, oxford_tasks, run_suite, save_report_csv, ImagePairTask,
    ReportDocument, SmoothingChoice,
};
use colorbits::imagery::{load_image, prepare_image, ColorSpace, SmoothingConfig};
use colorbits::matching::{match_nearest, save_matches};
use colorbits::patterns::{
    generate_pair_pattern, generate_triplet_pattern, load_pattern, load_triplet_arrangement,
    pattern_checksum, save_pattern, Pattern, PatternKind,
};

/// Seed used when the caller does not supply one.
const DEFAULT_SEED: u64 = 7;

type CliResult<T> = Result<T, Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(
    name = "colorbits",
    version,
    about = "Color-aware binary descriptor toolkit"
)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug); warnings always print.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    /// Cap the number of worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded sampling pattern and write it to a pattern file.
    GenPattern(GenPatternArgs),
    /// Detect keypoints in an image and extract binary descriptors.
    Extract(ExtractArgs),
    /// Match one descriptor dump against another by Hamming distance.
    Match(MatchArgs),
    /// Score descriptor variants on homography-registered image pairs.
    Evaluate(EvaluateArgs),
    /// Evaluate a family of variants along one parameter axis.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SpaceArg {
    Gray,
    Rgb,
    Ycbcr,
}

impl From<SpaceArg> for ColorSpace {
    fn from(arg: SpaceArg) -> Self {
        match arg {
            SpaceArg::Gray => ColorSpace::Gray,
            SpaceArg::Rgb => ColorSpace::Rgb,
            SpaceArg::Ycbcr => ColorSpace::YCbCr,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Pair,
    Triplet,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindSelection {
    Pair,
    Triplet,
    Both,
}

impl KindSelection {
    fn kinds(self) -> Vec<PatternKind> {
        match self {
            KindSelection::Pair => vec![PatternKind::Pair],
            KindSelection::Triplet => vec![PatternKind::Triplet],
            KindSelection::Both => vec![PatternKind::Pair, PatternKind::Triplet],
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepAxis {
    Bits,
    Patch,
}

#[derive(Args)]
struct GenPatternArgs {
    /// Color space the pattern samples from.
    #[arg(long, value_enum)]
    space: SpaceArg,

    /// Test family: pixel pairs or patch triplets.
    #[arg(long, value_enum, default_value = "pair")]
    kind: KindArg,

    /// Number of binary tests (descriptor length in bits).
    #[arg(long, default_value_t = 512)]
    bits: usize,

    /// Side length of the square sampling window, in pixels.
    #[arg(long, default_value_t = 48)]
    window: u32,

    /// Patch side length for triplet tests (odd).
    #[arg(long, default_value_t = 7)]
    patch: u32,

    /// Seed for the pattern generator.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Fraction of tests sampling only luma (ycbcr patterns only).
    #[arg(long)]
    y_fraction: Option<f64>,

    /// Reuse the spatial triplet layout from a text file instead of sampling.
    #[arg(long)]
    arrangement: Option<PathBuf>,

    /// Destination pattern file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExtractArgs {
    /// Input image (PGM or PPM; PNG when built with the png feature).
    #[arg(long)]
    image: PathBuf,

    /// Sampling pattern file produced by gen-pattern.
    #[arg(long)]
    pattern: PathBuf,

    /// Read keypoints from a file instead of running the detector.
    #[arg(long)]
    keypoints: Option<PathBuf>,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    smoothing: SmoothingArgs,

    /// Destination descriptor dump.
    #[arg(long)]
    out_descriptors: PathBuf,

    /// Optional destination for the keypoints actually described.
    #[arg(long)]
    out_keypoints: Option<PathBuf>,
}

#[derive(Args)]
struct MatchArgs {
    /// Descriptor dump whose entries are looked up.
    #[arg(long)]
    queries: PathBuf,

    /// Descriptor dump searched for nearest neighbors.
    #[arg(long)]
    targets: PathBuf,

    /// Destination CSV of match results.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DetectorArgs {
    /// Corner detector intensity threshold.
    #[arg(long, default_value_t = 20)]
    threshold: u8,

    /// Keep at most this many keypoints, strongest first.
    #[arg(long, default_value_t = 512)]
    max_keypoints: usize,

    /// Non-maximum suppression radius in pixels.
    #[arg(long, default_value_t = 3.0)]
    nms_radius: f64,
}

impl DetectorArgs {
    fn config(&self) -> DetectorConfig {
        DetectorConfig {
            threshold: self.threshold,
            max_keypoints: self.max_keypoints,
            nms_radius: self.nms_radius,
        }
    }
}

#[derive(Args)]
struct SmoothingArgs {
    /// Disable pre-extraction smoothing.
    #[arg(long, conflicts_with_all = ["sigma", "kernel"])]
    no_smoothing: bool,

    /// Gaussian smoothing sigma (defaults per test family when omitted).
    #[arg(long, requires = "kernel")]
    sigma: Option<f64>,

    /// Gaussian smoothing kernel size (odd), required with --sigma.
    #[arg(long, requires = "sigma")]
    kernel: Option<usize>,
}

impl SmoothingArgs {
    fn choice(&self) -> CliResult<SmoothingChoice> {
        if self.no_smoothing {
            return Ok(SmoothingChoice::Disabled);
        }
        match (self.sigma, self.kernel) {
            (Some(sigma), Some(kernel)) => {
                Ok(SmoothingChoice::Fixed(SmoothingConfig::new(sigma, kernel)?))
            }
            _ => Ok(SmoothingChoice::FamilyDefault),
        }
    }

    fn config_for(&self, pattern: &Pattern) -> CliResult<DescriptorConfig> {
        let cfg = match self.choice()? {
            SmoothingChoice::Disabled => DescriptorConfig::new(pattern.clone(), None)?,
            SmoothingChoice::Fixed(s) => DescriptorConfig::new(pattern.clone(), Some(s))?,
            SmoothingChoice::FamilyDefault => DescriptorConfig::with_defaults(pattern.clone()),
        };
        Ok(cfg)
    }
}

#[derive(Args)]
struct DataArgs {
    /// Dataset directory holding img1..imgN plus H1toKp homography files.
    /// Defaults to the COLORBITS_DATA environment variable when set.
    #[arg(long, env = "COLORBITS_DATA")]
    dataset: Option<PathBuf>,

    /// Manifest of evaluation tasks: `label image1 image2 homography` lines.
    /// Takes precedence over --dataset.
    #[arg(long)]
    manifest: Option<PathBuf>,
}

impl DataArgs {
    fn tasks(&self) -> CliResult<Vec<ImagePairTask>> {
        if let Some(manifest) = &self.manifest {
            return Ok(load_manifest(manifest)?);
        }
        if let Some(dataset) = &self.dataset {
            return Ok(oxford_tasks(dataset)?);
        }
        Err("no task source: pass --manifest or --dataset (or set COLORBITS_DATA)".into())
    }
}

#[derive(Args)]
struct VariantArgs {
    /// Comma-separated color spaces generated from one seed so that all
    /// variants share the same spatial layout.
    #[arg(long, default_value = "gray,rgb,ycbcr")]
    auto_variants: String,

    /// Descriptor length in bits.
    #[arg(long, default_value_t = 512)]
    bits: usize,

    /// Patch side length for triplet tests (odd).
    #[arg(long, default_value_t = 7)]
    patch: u32,

    /// Side length of the square sampling window, in pixels.
    #[arg(long, default_value_t = 48)]
    window: u32,

    /// Seed for pattern generation.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// Fraction of luma-only tests in ycbcr patterns.
    #[arg(long)]
    y_fraction: Option<f64>,
}

impl VariantArgs {
    fn spaces(&self) -> CliResult<Vec<ColorSpace>> {
        let mut spaces = Vec::new();
        for token in self.auto_variants.split(',') {
            let token = token.trim();
            let space = ColorSpace::from_tag(token)
                .ok_or_else(|| format!("unknown color space {token:?} in --auto-variants"))?;
            if spaces.contains(&space) {
                return Err(format!("duplicate color space {token:?} in --auto-variants").into());
            }
            spaces.push(space);
        }
        if spaces.is_empty() {
            return Err("--auto-variants names no color spaces".into());
        }
        Ok(spaces)
    }
}

#[derive(Args)]
struct OutputArgs {
    /// Destination for the score table in CSV form.
    #[arg(long)]
    out_csv: Option<PathBuf>,

    /// Destination for the full report (config, variants, rows) as JSON.
    #[arg(long)]
    out_json: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Evaluate existing pattern files instead of generating variants.
    #[arg(long, conflicts_with_all = ["sweep_bits", "sweep_patch"])]
    pattern: Vec<PathBuf>,

    /// Test families to evaluate.
    #[arg(long, value_enum, default_value = "both")]
    kind: KindSelection,

    #[command(flatten)]
    variants: VariantArgs,

    /// Evaluate each of these bit counts instead of --bits.
    #[arg(long, value_delimiter = ',')]
    sweep_bits: Option<Vec<usize>>,

    /// Evaluate each of these patch sizes instead of --patch (triplets only).
    #[arg(long, value_delimiter = ',')]
    sweep_patch: Option<Vec<u32>>,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    smoothing: SmoothingArgs,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    data: DataArgs,

    /// Parameter to sweep.
    #[arg(long, value_enum)]
    axis: SweepAxis,

    /// Comma-separated values for the swept parameter.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,

    /// Test families to evaluate (patch sweeps force triplet).
    #[arg(long, value_enum, default_value = "both")]
    kind: KindSelection,

    #[command(flatten)]
    variants: VariantArgs,

    #[command(flatten)]
    detector: DetectorArgs,

    #[command(flatten)]
    smoothing: SmoothingArgs,

    #[command(flatten)]
    output: OutputArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logger(cli.verbose);
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::FAILURE;
        }
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    match run(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> CliResult<ExitCode> {
    match command {
        Command::GenPattern(args) => gen_pattern(args),
        Command::Extract(args) => extract_command(args),
        Command::Match(args) => match_command(args),
        Command::Evaluate(args) => evaluate_command(args),
        Command::Sweep(args) => sweep_command(args),
    }
}

/// Minimal stderr logger; level is controlled by `-v` occurrences.
struct StderrLogger;

static LOGGER: StderrLogger = StderrLogger;

impl log::Log for StderrLogger {
    fn enabled(&self, _metadata: &log::Metadata) -> bool {
        true
    }

    fn log(&self, record: &log::Record) {
        eprintln!(
            "{}: {}",
            record.level().to_string().to_lowercase(),
            record.args()
        );
    }

    fn flush(&self) {}
}

fn init_logger(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = log::set_logger(&LOGGER);
    log::set_max_level(level);
}

/// Writes through a temp file in the destination directory and renames it
/// into place, so readers never observe a partially written file.
fn atomic_write<F>(path: &Path, write: F) -> CliResult<()>
where
    F: FnOnce(&Path) -> colorbits::Result<()>,
{
    let name = path
        .file_name()
        .ok_or_else(|| format!("output path {} has no file name", path.display()))?;
    let tmp = path.with_file_name(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    write(&tmp)?;
    if let Err(err) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(format!("renaming {} into place: {err}", path.display()).into());
    }
    Ok(())
}

fn gen_pattern(args: GenPatternArgs) -> CliResult<ExitCode> {
    let space = ColorSpace::from(args.space);
    let pattern: Pattern = match args.kind {
        KindArg::Pair => {
            if args.arrangement.is_some() {
                return Err("--arrangement applies only to triplet patterns".into());
            }
            generate_pair_pattern(space, args.bits, args.window, args.seed, args.y_fraction)?.into()
        }
        KindArg::Triplet => match &args.arrangement {
            Some(file) => load_triplet_arrangement(
                file,
                space,
                args.window,
                args.patch,
                args.seed,
                args.y_fraction,
            )?
            .into(),
            None => generate_triplet_pattern(
                space,
                args.bits,
                args.window,
                args.patch,
                args.seed,
                args.y_fraction,
            )?
            .into(),
        },
    };
    atomic_write(&args.out, |tmp| save_pattern(tmp, &pattern))?;
    println!(
        "wrote {} {} pattern: {} tests, window {}, seed {}, checksum {}",
        pattern.space().tag(),
        pattern.kind().tag(),
        pattern.len(),
        pattern.window(),
        pattern.seed(),
        pattern_checksum(&pattern)
    );
    println!("pattern file: {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn extract_command(args: ExtractArgs) -> CliResult<ExitCode> {
    let image = load_image(&args.image)?;
    let pattern = load_pattern(&args.pattern)?;
    let config = args.smoothing.config_for(&pattern)?;
    let margin = required_margin(&config) as i64;

    let (keypoints, source) = match &args.keypoints {
        Some(file) => (load_keypoints(file)?, "imported"),
        None => {
            let (gray, _) = prepare_image(&image, ColorSpace::Gray)?;
            (detect_fast(&gray, &args.detector.config())?, "detected")
        }
    };

    let total = keypoints.len();
    let usable: Vec<Keypoint> = keypoints
        .into_iter()
        .filter(|kp| {
            let (x, y) = (kp.x as i64, kp.y as i64);
            x >= margin
                && y >= margin
                && x + margin < image.width() as i64
                && y + margin < image.height() as i64
        })
        .collect();
    if usable.len() < total {
        log::warn!(
            "dropped {} of {total} {source} keypoints closer than {margin} px to the border",
            total - usable.len()
        );
    }
    if usable.is_empty() && total > 0 {
        return Err(format!(
            "all {total} {source} keypoints violate the {margin} px sampling margin"
        )
        .into());
    }
    if usable.is_empty() {
        log::warn!("no keypoints {source}; writing empty outputs");
    }

    let (descriptors, conversion) = extract_traced(&image, &usable, &config)?;
    atomic_write(&args.out_descriptors, |tmp| {
        save_descriptors(tmp, pattern.len(), &descriptors)
    })?;
    if let Some(out_keypoints) = &args.out_keypoints {
        atomic_write(out_keypoints, |tmp| save_keypoints(tmp, &usable))?;
    }

    println!(
        "extracted {} descriptors ({} bits each, {} input, conversion {conversion:?})",
        descriptors.len(),
        pattern.len(),
        image.space().tag(),
    );
    println!("descriptor dump: {}", args.out_descriptors.display());
    if let Some(out_keypoints) = &args.out_keypoints {
        println!("keypoint file: {}", out_keypoints.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn match_command(args: MatchArgs) -> CliResult<ExitCode> {
    let (query_bits, queries) = load_descriptors(&args.queries)?;
    let (target_bits, targets) = load_descriptors(&args.targets)?;
    if query_bits != target_bits {
        return Err(format!(
            "descriptor length mismatch: queries are {query_bits}-bit, targets {target_bits}-bit"
        )
        .into());
    }
    let matches = match_nearest(&queries, &targets)?;
    atomic_write(&args.out, |tmp| save_matches(tmp, &matches))?;
    let mean = if matches.is_empty() {
        0.0
    } else {
        matches.iter().map(|m| m.distance as f64).sum::<f64>() / matches.len() as f64
    };
    println!(
        "matched {} queries against {} targets (mean distance {mean:.2})",
        queries.len(),
        targets.len()
    );
    println!("match file: {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

fn evaluate_command(args: EvaluateArgs) -> CliResult<ExitCode> {
    let tasks = args.data.tasks()?;
    let configs = if args.pattern.is_empty() {
        let bit_counts = args
            .sweep_bits
            .clone()
            .unwrap_or_else(|| vec![args.variants.bits]);
        let patch_sizes = args
            .sweep_patch
            .clone()
            .unwrap_or_else(|| vec![args.variants.patch]);
        build_kind_variants(
            &args.kind.kinds(),
            &args.variants,
            &bit_counts,
            &patch_sizes,
            &args.smoothing,
        )?
    } else {
        let mut configs = Vec::new();
        for file in &args.pattern {
            configs.push(args.smoothing.config_for(&load_pattern(file)?)?);
        }
        configs
    };
    run_report(&tasks, &configs, &args.detector, &args.output)
}

fn sweep_command(args: SweepArgs) -> CliResult<ExitCode> {
    let tasks = args.data.tasks()?;
    if args.values.is_empty() {
        return Err("--values names no sweep points".into());
    }
    let (kinds, bit_counts, patch_sizes) = match args.axis {
        SweepAxis::Bits => {
            let bits = args.values.iter().map(|&v| v as usize).collect::<Vec<_>>();
            (args.kind.kinds(), bits, vec![args.variants.patch])
        }
        SweepAxis::Patch => {
            if args.kind == KindSelection::Pair {
                return Err("--axis patch applies only to triplet variants".into());
            }
            let patches = args.values.iter().map(|&v| v as u32).collect::<Vec<_>>();
            (
                vec![PatternKind::Triplet],
                vec![args.variants.bits],
                patches,
            )
        }
    };
    let configs = build_kind_variants(
        &kinds,
        &args.variants,
        &bit_counts,
        &patch_sizes,
        &args.smoothing,
    )?;
    run_report(&tasks, &configs, &args.detector, &args.output)
}

fn build_kind_variants(
    kinds: &[PatternKind],
    variants: &VariantArgs,
    bit_counts: &[usize],
    patch_sizes: &[u32],
    smoothing: &SmoothingArgs,
) -> CliResult<Vec<DescriptorConfig>> {
    let spaces = variants.spaces()?;
    let choice = smoothing.choice()?;
    let mut configs = Vec::new();
    for &kind in kinds {
        configs.extend(build_variants(
            kind,
            &spaces,
            bit_counts,
            patch_sizes,
            variants.window,
            variants.seed,
            variants.y_fraction,
            choice,
        )?);
    }
    Ok(configs)
}

fn run_report(
    tasks: &[ImagePairTask],
    configs: &[DescriptorConfig],
    detector: &DetectorArgs,
    output: &OutputArgs,
) -> CliResult<ExitCode> {
    if configs.is_empty() {
        return Err("no descriptor variants to evaluate".into());
    }
    let detector = detector.config();
    let report = run_suite(tasks, configs, &detector);

    for row in &report.rows {
        let patch = if row.patch_size == 0 {
            String::new()
        } else {
            format!(" patch={}", row.patch_size)
        };
        println!(
            "{} {} {} bits={}{}: {:.2}% ({}/{})",
            row.label, row.variant, row.kind, row.n_d, patch, row.score, row.n_correct, row.n_total
        );
    }
    for failure in &report.failures {
        eprintln!("task {} failed: {}", failure.label, failure.error);
    }

    if let Some(out_csv) = &output.out_csv {
        atomic_write(out_csv, |tmp| save_report_csv(tmp, &report.rows))?;
        println!("score table: {}", out_csv.display());
    }
    let completed = report.failures.is_empty();
    if let Some(out_json) = &output.out_json {
        let document = ReportDocument::new(detector, configs, report);
        atomic_write(out_json, |tmp| document.save(tmp))?;
        println!("report: {}", out_json.display());
    }

    if completed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(2))
    }
}

impl fmt::Display for KindSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            KindSelection::Pair => "pair",
            KindSelection::Triplet => "triplet",
            KindSelection::Both => "both",
        };
        f.write_str(tag)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn default_seed_is_fixed() {
        let cli = Cli::parse_from([
            "colorbits",
            "gen-pattern",
            "--space",
            "rgb",
            "--out",
            "p.txt",
        ]);
        match cli.command {
            Command::GenPattern(args) => assert_eq!(args.seed, DEFAULT_SEED),
            _ => unreachable!(),
        }
    }
}
