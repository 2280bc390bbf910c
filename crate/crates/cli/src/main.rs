//! Command-line front end: synthetic data generation, calibration, gradient
//! checking, overlay projection, colorization, and reprojection evaluation.
//!
//! Exit codes: 0 success, 2 usage, 3 data, 4 numerical.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use panocal::dataset::{
    read_config, read_correspondences, read_image, read_pointcloud, write_correspondences,
    write_image, write_pointcloud, DataError, RunConfig,
};
use panocal::evaluate::{colorize_cloud, project_overlay, reprojection_report, EvalError};
use panocal::synthdata::generate_dataset;
use panocal::{
    gradient_check, train_multistart, CalibrationResult, ExtrinsicPose, GradCheckConfig,
    TrainError, TrainStatus,
};

#[derive(Parser)]
#[command(name = "panocal", version, about = "LiDAR / panoramic camera extrinsic calibration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic correspondence dataset and a sidecar metadata file.
    Synth(SynthArgs),
    /// Recover the extrinsic pose from a correspondence file.
    Calibrate(CalibrateArgs),
    /// Compare analytic gradients against finite differences.
    Gradcheck(GradcheckArgs),
    /// Project a point cloud onto a panorama as marker dots.
    Project(ProjectArgs),
    /// Color a point cloud from panorama pixels.
    Colorize(ColorizeArgs),
    /// Report reprojection error of a pose on a correspondence file.
    Evaluate(EvaluateArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. --set learning_rate=50.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => read_config(path)?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--set needs KEY=VALUE, got {pair:?}")))?;
            cfg.set(key.trim(), value.trim())
                .map_err(CliError::Data)?;
        }
        // Overrides can invalidate a previously valid file.
        cfg.training.validate().map_err(|e| CliError::Data(e.to_string()))?;
        cfg.noise.validate().map_err(|e| CliError::Data(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Shorthand for --set noise_seed=SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// Output correspondence CSV; metadata goes to <out>.meta.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Input correspondence CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output pose file (key = value).
    #[arg(long)]
    out: PathBuf,
    /// Optional per-iteration trace CSV of the winning restart.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Central difference step.
    #[arg(long, default_value_t = 1e-6)]
    step: f64,
    #[arg(long, default_value_t = 1e-5)]
    rel_tolerance: f64,
    #[arg(long, default_value_t = 1e-8)]
    abs_floor: f64,
}

#[derive(Args)]
struct ProjectArgs {
    /// Input point cloud (3 or 6 columns; colors ignored).
    #[arg(long)]
    cloud: PathBuf,
    /// Panorama to draw on (binary P6).
    #[arg(long)]
    image: PathBuf,
    /// Pose file with alpha..gamma, b1..b3 keys.
    #[arg(long)]
    pose: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ColorizeArgs {
    #[arg(long)]
    cloud: PathBuf,
    #[arg(long)]
    image: PathBuf,
    #[arg(long)]
    pose: PathBuf,
    /// Output 6-column point cloud.
    #[arg(long)]
    out: PathBuf,
    /// Keep unprojectable points, colored black, instead of dropping them.
    #[arg(long)]
    keep_unprojectable: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Input correspondence CSV.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    pose: PathBuf,
    #[arg(long, default_value_t = 4096)]
    width: usize,
    #[arg(long, default_value_t = 2048)]
    height: usize,
    /// Optional key = value report file.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
    Numerical(String),
}

impl CliError {
    fn class(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numerical(_) => "numerical",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numerical(m) => m,
        }
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<panocal::synthdata::SynthError> for CliError {
    fn from(e: panocal::synthdata::SynthError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match e {
            TrainError::InvalidConfig(_) | TrainError::EmptyDataset => {
                CliError::Data(e.to_string())
            }
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidDimensions(_, _) => CliError::Usage(e.to_string()),
            EvalError::Geometry(_) => CliError::Numerical(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.class(), e.message());
            ExitCode::from(e.code())
        }
    }
}

/// Prints the resolved invocation, flat key = value under a comment banner,
/// so every run is reproducible from its own output.
fn echo(command: &str, flags: &[(&str, String)], cfg: Option<&RunConfig>) {
    println!("# effective configuration");
    println!("command = {command}");
    for (k, v) in flags {
        println!("{k} = {v}");
    }
    if let Some(cfg) = cfg {
        print!("{}", cfg.render_effective());
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Synth(args) => synth(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Gradcheck(args) => gradcheck(args),
        Command::Project(args) => project(args),
        Command::Colorize(args) => colorize(args),
        Command::Evaluate(args) => evaluate(args),
    }
}

fn synth(args: SynthArgs) -> Result<(), CliError> {
    let mut cfg = args.config.resolve()?;
    if let Some(seed) = args.seed {
        cfg.set("noise_seed", &seed.to_string()).map_err(CliError::Data)?;
    }
    echo("synth", &[("out", args.out.display().to_string())], Some(&cfg));

    let rigs = cfg.rigs()?;
    let layout = cfg.layout().map_err(CliError::Data)?;
    let truth = cfg.truth_pose();
    let (cs, skipped) = generate_dataset(&rigs, &layout, &truth, &cfg.noise)?;
    write_correspondences(&cs, &args.out)?;

    let mut meta = String::from("# synth metadata; parses as a run configuration\n");
    let _ = writeln!(meta, "# correspondences = {}", cs.len());
    let _ = writeln!(meta, "# skipped_endpoints = {skipped}");
    meta.push_str(&cfg.render_effective());
    let meta_path = sidecar_path(&args.out);
    std::fs::write(&meta_path, meta)
        .map_err(|e| CliError::Data(format!("{}: {e}", meta_path.display())))?;

    println!(
        "wrote {} correspondences to {} ({} endpoints skipped)",
        cs.len(),
        args.out.display(),
        skipped
    );
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta");
    PathBuf::from(name)
}

fn status_str(status: TrainStatus) -> &'static str {
    match status {
        TrainStatus::Converged => "converged",
        TrainStatus::IterationLimit => "iteration-limit",
        TrainStatus::Diverged => "diverged",
    }
}

fn render_pose_file(result: &CalibrationResult) -> String {
    // Canonical angle ranges; the rotation matrix is unchanged.
    let p = result.pose.normalized().params();
    let mut s = String::new();
    for (key, value) in ["alpha", "beta", "gamma", "b1", "b2", "b3"].iter().zip(p) {
        let _ = writeln!(s, "{key} = {value:.17e}");
    }
    let _ = writeln!(s, "final_loss = {:.17e}", result.final_loss);
    let _ = writeln!(s, "status = {}", status_str(result.trace.status));
    let _ = writeln!(s, "iterations = {}", result.trace.records.len());
    let _ = writeln!(s, "skipped_points = {}", result.skipped_points);
    s
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let cfg = args.config.resolve()?;
    let mut flags = vec![
        ("in", args.input.display().to_string()),
        ("out", args.out.display().to_string()),
    ];
    if let Some(trace) = &args.trace {
        flags.push(("trace", trace.display().to_string()));
    }
    echo("calibrate", &flags, Some(&cfg));

    let cs = read_correspondences(&args.input)?;
    let result = train_multistart(&cs, &cfg.training)?;

    std::fs::write(&args.out, render_pose_file(&result))
        .map_err(|e| CliError::Data(format!("{}: {e}", args.out.display())))?;

    if let Some(trace_path) = &args.trace {
        let mut csv = String::from("# iteration, loss, alpha, beta, gamma, b1, b2, b3\n");
        for rec in &result.trace.records {
            let _ = write!(csv, "{}, {:.16e}", rec.iteration, rec.loss);
            for p in rec.params {
                let _ = write!(csv, ", {p:.16e}");
            }
            csv.push('\n');
        }
        std::fs::write(trace_path, csv)
            .map_err(|e| CliError::Data(format!("{}: {e}", trace_path.display())))?;
    }

    let p = result.pose.normalized().params();
    println!(
        "pose: alpha {:.6} beta {:.6} gamma {:.6} b1 {:.6} b2 {:.6} b3 {:.6}",
        p[0], p[1], p[2], p[3], p[4], p[5]
    );
    println!(
        "final loss {:e}, status {}, {} iterations recorded, {} points skipped",
        result.final_loss,
        status_str(result.trace.status),
        result.trace.records.len(),
        result.skipped_points
    );
    Ok(())
}

fn gradcheck(args: GradcheckArgs) -> Result<(), CliError> {
    echo(
        "gradcheck",
        &[
            ("samples", args.samples.to_string()),
            ("seed", args.seed.to_string()),
            ("step", args.step.to_string()),
            ("rel_tolerance", args.rel_tolerance.to_string()),
            ("abs_floor", args.abs_floor.to_string()),
        ],
        None,
    );
    let report = gradient_check(&GradCheckConfig {
        samples: args.samples,
        seed: args.seed,
        step: args.step,
        rel_tolerance: args.rel_tolerance,
        abs_floor: args.abs_floor,
    })?;
    println!(
        "checked {} samples: {} failures, max relative error {:e}",
        report.samples, report.failures, report.max_rel_error
    );
    if report.passed() {
        Ok(())
    } else {
        Err(CliError::Numerical(format!(
            "{} of {} sampled gradients exceeded tolerance",
            report.failures, report.samples
        )))
    }
}

/// Parses a pose from a key = value file; extra keys (final_loss, status)
/// are ignored so calibrate output feeds straight back in.
fn read_pose_file(path: &Path) -> Result<ExtrinsicPose, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut params = [f64::NAN; 6];
    const KEYS: [&str; 6] = ["alpha", "beta", "gamma", "b1", "b2", "b3"];
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else { continue };
        let (key, value) = (key.trim(), value.trim());
        if let Some(slot) = KEYS.iter().position(|k| *k == key) {
            params[slot] = value.parse().map_err(|_| {
                CliError::Data(format!("{}:{}: bad number for {key}", path.display(), idx + 1))
            })?;
        }
    }
    for (k, v) in KEYS.iter().zip(params) {
        if !v.is_finite() {
            return Err(CliError::Data(format!("{}: missing or non-finite {k}", path.display())));
        }
    }
    ExtrinsicPose::from_params(params).map_err(|e| CliError::Data(e.to_string()))
}

fn project(args: ProjectArgs) -> Result<(), CliError> {
    echo(
        "project",
        &[
            ("cloud", args.cloud.display().to_string()),
            ("image", args.image.display().to_string()),
            ("pose", args.pose.display().to_string()),
            ("out", args.out.display().to_string()),
        ],
        None,
    );
    let cloud = read_pointcloud(&args.cloud)?;
    let image = read_image(&args.image)?;
    if let Some(warning) = image.aspect_warning() {
        eprintln!("warning: {warning}");
    }
    let pose = read_pose_file(&args.pose)?;
    let (overlay, skipped) = project_overlay(&cloud, &image, &pose);
    write_image(&overlay, &args.out)?;
    println!("drew {} points, skipped {}", cloud.points.len() - skipped, skipped);
    Ok(())
}

fn colorize(args: ColorizeArgs) -> Result<(), CliError> {
    echo(
        "colorize",
        &[
            ("cloud", args.cloud.display().to_string()),
            ("image", args.image.display().to_string()),
            ("pose", args.pose.display().to_string()),
            ("out", args.out.display().to_string()),
            ("keep_unprojectable", args.keep_unprojectable.to_string()),
        ],
        None,
    );
    let cloud = read_pointcloud(&args.cloud)?;
    let image = read_image(&args.image)?;
    if let Some(warning) = image.aspect_warning() {
        eprintln!("warning: {warning}");
    }
    let pose = read_pose_file(&args.pose)?;
    let (colored, skipped) = colorize_cloud(&cloud, &image, &pose, args.keep_unprojectable);
    write_pointcloud(&colored, &args.out)?;
    println!("colored {} points, {} unprojectable", colored.points.len(), skipped);
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), CliError> {
    let mut flags = vec![
        ("in", args.input.display().to_string()),
        ("pose", args.pose.display().to_string()),
        ("width", args.width.to_string()),
        ("height", args.height.to_string()),
    ];
    if let Some(out) = &args.out {
        flags.push(("out", out.display().to_string()));
    }
    echo("evaluate", &flags, None);

    let cs = read_correspondences(&args.input)?;
    let pose = read_pose_file(&args.pose)?;
    let report = reprojection_report(&cs, &pose, args.width, args.height)?;
    print!("{}", report.to_text());
    if let Some(out) = &args.out {
        std::fs::write(out, report.to_kv())
            .map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
    }
    Ok(())
}
