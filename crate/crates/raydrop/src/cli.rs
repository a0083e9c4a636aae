//! The `raydrop` command-line tool: each subcommand wires library stages
//! into one workflow step, reading and writing the portable file formats
//! from [`crate::io`].
//!
//! File conventions (all little-endian float32 tensors unless noted):
//!
//! - appearance image — tensor `[3, height, width]`, RGB in `[0, 1]`
//! - range image — tensor `[2, rows, cols]`: depth then intensity planes,
//!   depth 0 meaning no return
//! - dense mask / intensity grid — tensor `[rows, cols]`
//! - prediction — tensor `[2, height, width]`: raydrop then intensity
//! - weights — `RTNW` weights file
//! - point cloud — headerless float32 `(x, y, z, intensity)` quadruples
//! - scene — the line-oriented config format (`[material]`, `[box]`,
//!   `[ground]`, `[sensor]`, `[camera]` sections)
//!
//! Exit codes: 0 on success, 1 on usage errors (bad flags or flag values),
//! 2 on data errors (unreadable, malformed, or mismatched inputs).

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::dataset::{generate_sample, DatasetSpec};
use crate::io::{
    parse_config, read_cloud_file, read_tensor, read_weights, write_cloud_file, write_pgm,
    write_tensor, write_weights, FormatError, TensorData,
};
use crate::model::{train, ModelConfig, RinetLite, TrainConfig, TrainSample};
use crate::pipeline::{
    apply_random_raydrop, enhance_pointcloud, intensity_mae, mask_iou, EnhanceOptions, NoiseModel,
    OffFrustum,
};
use crate::scene::{
    render_appearance, render_range_image, scene_from_config, SceneDescription,
};
use crate::types::{
    AppearanceImage, CameraModel, DenseIntensityMask, PredictorOutput, RangeImage, SensorConfig,
};
use crate::{geometry, Grid};

/// Runs the CLI on the given argument vector (including the program name)
/// and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                // Everything else — including a missing subcommand, where
                // clap prints help as a courtesy — is a usage error.
                _ => 1,
            };
            // clap routes help/version to stdout and errors to stderr.
            let _ = err.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {}", err.message());
            err.exit_code()
        }
    }
}

#[derive(Parser)]
#[command(
    name = "raydrop",
    version,
    about = "Learned raydrop and intensity for raycasted LiDAR point clouds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene file into a range image, appearance image, and/or
    /// point cloud.
    Raycast(RaycastArgs),
    /// Densify a range image into a camera-space intensity mask.
    Densify(DensifyArgs),
    /// Train a predictor on a directory of paired appearance/mask tensors.
    Train(TrainArgs),
    /// Run a trained predictor on an appearance image.
    Predict(PredictArgs),
    /// Apply a prediction plus random raydrop to a point cloud.
    Enhance(EnhanceArgs),
    /// Compare a prediction against a ground-truth mask (prints key=value).
    Eval(EvalArgs),
    /// Dump a tensor channel as a PGM image.
    Viz(VizArgs),
    /// Generate paired training fixtures from seeded random scenes.
    GenDataset(GenDatasetArgs),
}

#[derive(Args)]
struct RaycastArgs {
    /// Scene config file; needs [sensor] for range/cloud output and
    /// [camera] for appearance output.
    #[arg(long)]
    scene: PathBuf,
    /// Output range-image tensor [2, rows, cols].
    #[arg(long)]
    range_out: Option<PathBuf>,
    /// Output appearance tensor [3, height, width].
    #[arg(long)]
    appearance_out: Option<PathBuf>,
    /// Output point cloud built from the range image.
    #[arg(long)]
    cloud_out: Option<PathBuf>,
    /// Naive mode: every geometric hit returns (transparency ignored) with
    /// zero intensity — the "clean" simulator output enhancement starts from.
    #[arg(long)]
    clean: bool,
}

#[derive(Args)]
struct DensifyArgs {
    /// Range-image tensor [2, rows, cols].
    #[arg(long)]
    range: PathBuf,
    /// Scene config supplying the [sensor] and [camera] blocks.
    #[arg(long)]
    scene: PathBuf,
    /// Output dense intensity mask tensor [height, width].
    #[arg(long)]
    out: PathBuf,
    /// Optional output for the mask's depth buffer [height, width].
    #[arg(long)]
    depth_out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Directory of paired `{prefix}.rgb.rtns` / `{prefix}.mask.rtns`
    /// tensors.
    #[arg(long)]
    dataset: PathBuf,
    /// Output weights file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 4)]
    batch_size: usize,
    /// Base learning rate.
    #[arg(long, default_value_t = 2e-2)]
    lr: f64,
    /// Final epochs over which the rate decays linearly (0 disables decay).
    #[arg(long, default_value_t = 10)]
    decay_window: usize,
    /// Seeds both parameter initialization and batch shuffling.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Predictor width (channels per hidden layer).
    #[arg(long, default_value_t = 8)]
    channels: usize,
    /// Number of residual blocks.
    #[arg(long, default_value_t = 2)]
    blocks: usize,
}

#[derive(Args)]
struct PredictArgs {
    /// Weights file from `train`.
    #[arg(long)]
    weights: PathBuf,
    /// Appearance tensor [3, height, width].
    #[arg(long)]
    image: PathBuf,
    /// Output prediction tensor [2, height, width] (raydrop, intensity).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EnhanceArgs {
    /// Input point cloud.
    #[arg(long)]
    cloud: PathBuf,
    /// Prediction tensor [2, height, width].
    #[arg(long)]
    prediction: PathBuf,
    /// Scene config supplying the [camera] block.
    #[arg(long)]
    scene: PathBuf,
    /// Output point cloud.
    #[arg(long)]
    out: PathBuf,
    /// Probability of dropping each surviving point uniformly at random.
    #[arg(long, default_value_t = 0.45, value_parser = parse_probability)]
    noise_p: f64,
    /// Seed for the random raydrop stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Raydrop gate threshold: points keep only where prediction > threshold.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Drop points outside the camera frustum instead of keeping them with
    /// zero intensity.
    #[arg(long)]
    drop_off_frustum: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Prediction tensor [2, height, width].
    #[arg(long)]
    prediction: PathBuf,
    /// Ground-truth dense mask tensor [height, width].
    #[arg(long)]
    truth: PathBuf,
    /// Raydrop gate threshold for the IoU mask.
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args)]
struct VizArgs {
    /// Input tensor, rank 2 or 3.
    #[arg(long)]
    input: PathBuf,
    /// Output binary PGM file.
    #[arg(long)]
    out: PathBuf,
    /// Channel to dump when the tensor is rank 3.
    #[arg(long, default_value_t = 0)]
    channel: usize,
    /// Linearly rescale values to [0, 1] (for depth buffers etc.).
    #[arg(long)]
    normalize: bool,
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Number of samples to generate.
    #[arg(long)]
    count: usize,
    /// Seed of the first sample; sample k uses seed `start_seed + k`.
    #[arg(long, default_value_t = 0)]
    start_seed: u64,
    /// File-name prefix: `{prefix}{seed:04}.rgb.rtns` etc.
    #[arg(long, default_value = "sample")]
    prefix: String,
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is not in [0, 1]"))
    }
}

enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data(err: impl Display) -> CliError {
    CliError::Data(err.to_string())
}

fn data_at(path: &Path, err: impl Display) -> CliError {
    CliError::Data(format!("{}: {err}", path.display()))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Raycast(args) => run_raycast(args),
        Command::Densify(args) => run_densify(args),
        Command::Train(args) => run_train(args),
        Command::Predict(args) => run_predict(args),
        Command::Enhance(args) => run_enhance(args),
        Command::Eval(args) => run_eval(args),
        Command::Viz(args) => run_viz(args),
        Command::GenDataset(args) => run_gen_dataset(args),
    }
}

// ---------------------------------------------------------------- helpers

fn load_scene(path: &Path) -> Result<SceneDescription<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| data_at(path, e))?;
    let file = parse_config(&text).map_err(|e| data_at(path, e))?;
    scene_from_config(&file).map_err(|e| data_at(path, e))
}

fn require_sensor(
    desc: &SceneDescription<f64>,
    path: &Path,
) -> Result<SensorConfig<f64>, CliError> {
    desc.sensor.clone().ok_or_else(|| {
        CliError::Data(format!("{}: missing [sensor] section", path.display()))
    })
}

fn require_camera(
    desc: &SceneDescription<f64>,
    path: &Path,
) -> Result<CameraModel<f64>, CliError> {
    desc.camera.clone().ok_or_else(|| {
        CliError::Data(format!("{}: missing [camera] section", path.display()))
    })
}

fn read_tensor_at(path: &Path) -> Result<TensorData, CliError> {
    read_tensor(path).map_err(|e| data_at(path, e))
}

fn write_tensor_at(path: &Path, tensor: &TensorData) -> Result<(), CliError> {
    write_tensor(path, tensor).map_err(data)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn f32_plane(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

fn range_image_to_tensor(image: &RangeImage<f64>) -> TensorData {
    let mut payload = f32_plane(image.depth().data());
    payload.extend(f32_plane(image.intensity().data()));
    TensorData::new(vec![2, image.rows(), image.cols()], payload)
        .expect("range image dims match payload")
}

fn tensor_to_range_image(td: &TensorData, path: &Path) -> Result<RangeImage<f64>, CliError> {
    let [channels, rows, cols] = *td.dims() else {
        return Err(CliError::Data(format!(
            "{}: expected a rank-3 range image tensor, got rank {}",
            path.display(),
            td.dims().len()
        )));
    };
    if channels != 2 {
        return Err(CliError::Data(format!(
            "{}: range images have 2 channels (depth, intensity), got {channels}",
            path.display()
        )));
    }
    let plane = rows * cols;
    let depth = Grid::from_vec(
        rows,
        cols,
        td.data()[..plane].iter().map(|&v| v as f64).collect(),
    )
    .expect("dims match payload");
    let intensity = Grid::from_vec(
        rows,
        cols,
        td.data()[plane..].iter().map(|&v| v as f64).collect(),
    )
    .expect("dims match payload");
    RangeImage::from_grids(depth, intensity).map_err(|e| data_at(path, e))
}

fn prediction_to_tensor<S: crate::Real>(pred: &PredictorOutput<S>) -> TensorData {
    let mut payload: Vec<f32> = pred.raydrop().data().iter().map(|v| v.widen() as f32).collect();
    payload.extend(pred.intensity().data().iter().map(|v| v.widen() as f32));
    TensorData::new(vec![2, pred.height(), pred.width()], payload)
        .expect("prediction dims match payload")
}

fn tensor_to_prediction(td: &TensorData, path: &Path) -> Result<PredictorOutput<f64>, CliError> {
    let [channels, rows, cols] = *td.dims() else {
        return Err(CliError::Data(format!(
            "{}: expected a rank-3 prediction tensor, got rank {}",
            path.display(),
            td.dims().len()
        )));
    };
    if channels != 2 {
        return Err(CliError::Data(format!(
            "{}: predictions have 2 channels (raydrop, intensity), got {channels}",
            path.display()
        )));
    }
    let plane = rows * cols;
    let grid = |range: std::ops::Range<usize>| {
        Grid::from_vec(
            rows,
            cols,
            td.data()[range].iter().map(|&v| v as f64).collect(),
        )
        .expect("dims match payload")
    };
    PredictorOutput::from_grids(grid(0..plane), grid(plane..2 * plane))
        .map_err(|e| data_at(path, e))
}

/// Machine-readable metric formatting; whole numbers keep one decimal so
/// `1` prints as `1.0`.
fn format_metric(value: f64) -> String {
    if value.is_finite() && value.fract() == 0.0 {
        format!("{value:.1}")
    } else {
        format!("{value}")
    }
}

// ------------------------------------------------------------ subcommands

fn run_raycast(args: RaycastArgs) -> Result<(), CliError> {
    if args.range_out.is_none() && args.appearance_out.is_none() && args.cloud_out.is_none() {
        return Err(CliError::Usage(
            "raycast: pass at least one of --range-out, --appearance-out, --cloud-out".into(),
        ));
    }
    let desc = load_scene(&args.scene)?;
    if args.range_out.is_some() || args.cloud_out.is_some() {
        let sensor = require_sensor(&desc, &args.scene)?;
        let image = render_range_image(&desc.scene, &sensor, args.clean);
        if let Some(path) = &args.range_out {
            write_tensor_at(path, &range_image_to_tensor(&image))?;
        }
        if let Some(path) = &args.cloud_out {
            let cloud = geometry::range_image_to_pointcloud(&image, &sensor);
            let rows = crate::io::points_to_cloud_rows(&cloud);
            write_cloud_file(path, &rows).map_err(data)?;
            eprintln!("wrote {}", path.display());
        }
    }
    if let Some(path) = &args.appearance_out {
        let camera = require_camera(&desc, &args.scene)?;
        let image = render_appearance(&desc.scene, &camera);
        write_tensor_at(path, &TensorData::from_tensor(image.tensor()))?;
    }
    Ok(())
}

fn run_densify(args: DensifyArgs) -> Result<(), CliError> {
    let desc = load_scene(&args.scene)?;
    let sensor = require_sensor(&desc, &args.scene)?;
    let camera = require_camera(&desc, &args.scene)?;
    let td = read_tensor_at(&args.range)?;
    let image = tensor_to_range_image(&td, &args.range)?;
    if image.rows() != sensor.rows() || image.cols() != sensor.cols() {
        return Err(CliError::Data(format!(
            "{}: range image is {}x{} but [sensor] declares {}x{}",
            args.range.display(),
            image.rows(),
            image.cols(),
            sensor.rows(),
            sensor.cols()
        )));
    }
    let mask = crate::densify::build_dense_mask(&image, &sensor, &camera);
    write_tensor_at(&args.out, &TensorData::from_grid(mask.values()))?;
    if let Some(path) = &args.depth_out {
        let depth = mask.depth().expect("build_dense_mask records depth");
        write_tensor_at(path, &TensorData::from_grid(depth))?;
    }
    Ok(())
}

fn load_training_dir(dir: &Path) -> Result<Vec<TrainSample<f32>>, CliError> {
    const IMAGE_SUFFIX: &str = ".rgb.rtns";
    const MASK_SUFFIX: &str = ".mask.rtns";
    let entries = std::fs::read_dir(dir).map_err(|e| data_at(dir, e))?;
    let mut image_paths: Vec<PathBuf> = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| data_at(dir, e))?.path();
        if path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.ends_with(IMAGE_SUFFIX))
        {
            image_paths.push(path);
        }
    }
    image_paths.sort();
    if image_paths.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no *{IMAGE_SUFFIX} files found",
            dir.display()
        )));
    }
    let mut samples = Vec::with_capacity(image_paths.len());
    for image_path in image_paths {
        let name = image_path.file_name().and_then(|n| n.to_str()).unwrap();
        let mask_path = image_path.with_file_name(format!(
            "{}{MASK_SUFFIX}",
            name.strip_suffix(IMAGE_SUFFIX).unwrap()
        ));
        let image_td = read_tensor_at(&image_path)?;
        let image_tensor = image_td
            .to_tensor::<f32>()
            .map_err(|e| data_at(&image_path, e))?;
        let image =
            AppearanceImage::from_tensor(image_tensor).map_err(|e| data_at(&image_path, e))?;
        let mask_td = read_tensor_at(&mask_path)?;
        let mask_grid = mask_td
            .to_grid::<f32>()
            .map_err(|e| data_at(&mask_path, e))?;
        let mask =
            DenseIntensityMask::from_parts(mask_grid, None).map_err(|e| data_at(&mask_path, e))?;
        samples.push((image, mask));
    }
    Ok(samples)
}

fn run_train(args: TrainArgs) -> Result<(), CliError> {
    let model_cfg = ModelConfig {
        channels: args.channels,
        blocks: args.blocks,
    };
    let mut model =
        RinetLite::<f32>::new(model_cfg, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let train_cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        base_lr: args.lr,
        decay_window: args.decay_window,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let dataset = load_training_dir(&args.dataset)?;
    let report = train(&mut model, &dataset, &train_cfg).map_err(|e| match e {
        crate::model::TrainError::BadConfig { .. } => CliError::Usage(e.to_string()),
        other => data(other),
    })?;
    for (epoch, stats) in report.epochs.iter().enumerate() {
        println!(
            "epoch={epoch} raydrop={:.6} intensity={:.6} total={:.6} lr={}",
            stats.raydrop, stats.intensity, stats.total, stats.learning_rate
        );
    }
    write_weights(&args.out, &model.to_weights()).map_err(data)?;
    eprintln!("wrote {}", args.out.display());
    Ok(())
}

fn run_predict(args: PredictArgs) -> Result<(), CliError> {
    let weights = read_weights(&args.weights).map_err(|e| data_at(&args.weights, e))?;
    let model = RinetLite::<f32>::from_weights(&weights).map_err(|e| data_at(&args.weights, e))?;
    let image_td = read_tensor_at(&args.image)?;
    let tensor = image_td
        .to_tensor::<f32>()
        .map_err(|e| data_at(&args.image, e))?;
    let image = AppearanceImage::from_tensor(tensor).map_err(|e| data_at(&args.image, e))?;
    let pred = model.predict(&image).map_err(|e| data_at(&args.image, e))?;
    write_tensor_at(&args.out, &prediction_to_tensor(&pred))
}

fn run_enhance(args: EnhanceArgs) -> Result<(), CliError> {
    let desc = load_scene(&args.scene)?;
    let camera = require_camera(&desc, &args.scene)?;
    let rows = read_cloud_file(&args.cloud).map_err(|e| data_at(&args.cloud, e))?;
    let cloud = crate::io::cloud_to_points::<f64>(&rows).map_err(|e| data_at(&args.cloud, e))?;
    let pred_td = read_tensor_at(&args.prediction)?;
    let pred = tensor_to_prediction(&pred_td, &args.prediction)?;
    if pred.width() != camera.width() || pred.height() != camera.height() {
        return Err(CliError::Data(format!(
            "{}: prediction is {}x{} but [camera] declares {}x{}",
            args.prediction.display(),
            pred.height(),
            pred.width(),
            camera.height(),
            camera.width()
        )));
    }
    let opts = EnhanceOptions {
        threshold: args.threshold,
        off_frustum: if args.drop_off_frustum {
            OffFrustum::Drop
        } else {
            OffFrustum::KeepZeroIntensity
        },
    };
    let enhanced = enhance_pointcloud(&cloud, &pred, &camera, &opts);
    let noise = NoiseModel::new(args.noise_p, args.seed).map_err(|e| CliError::Usage(e.to_string()))?;
    let noisy = apply_random_raydrop(&enhanced, &noise);
    let out_rows = crate::io::points_to_cloud_rows(&noisy);
    write_cloud_file(&args.out, &out_rows).map_err(data)?;
    eprintln!(
        "wrote {} ({} of {} points kept)",
        args.out.display(),
        noisy.len(),
        cloud.len()
    );
    Ok(())
}

fn run_eval(args: EvalArgs) -> Result<(), CliError> {
    let pred_td = read_tensor_at(&args.prediction)?;
    let pred = tensor_to_prediction(&pred_td, &args.prediction)?;
    let truth_td = read_tensor_at(&args.truth)?;
    let truth_grid = truth_td
        .to_grid::<f64>()
        .map_err(|e| data_at(&args.truth, e))?;
    let truth =
        DenseIntensityMask::from_parts(truth_grid, None).map_err(|e| data_at(&args.truth, e))?;
    if pred.width() != truth.width() || pred.height() != truth.height() {
        return Err(CliError::Data(format!(
            "prediction is {}x{} but truth is {}x{}",
            pred.height(),
            pred.width(),
            truth.height(),
            truth.width()
        )));
    }
    let pred_mask = pred.raydrop().map(|&v| v > args.threshold);
    let iou = mask_iou(&pred_mask, &truth.coverage());
    let mae = intensity_mae(pred.intensity(), &truth);
    println!("iou={}", format_metric(iou));
    println!("mae={}", format_metric(mae));
    Ok(())
}

fn run_viz(args: VizArgs) -> Result<(), CliError> {
    let td = read_tensor_at(&args.input)?;
    let (rows, cols, plane_offset) = match *td.dims() {
        [rows, cols] => {
            if args.channel != 0 {
                return Err(CliError::Usage(format!(
                    "--channel {} given but {} is rank 2",
                    args.channel,
                    args.input.display()
                )));
            }
            (rows, cols, 0)
        }
        [channels, rows, cols] => {
            if args.channel >= channels {
                return Err(CliError::Data(format!(
                    "{}: channel {} out of range (tensor has {channels})",
                    args.input.display(),
                    args.channel
                )));
            }
            (rows, cols, args.channel * rows * cols)
        }
        _ => {
            return Err(CliError::Data(format!(
                "{}: viz needs a rank-2 or rank-3 tensor, got rank {}",
                args.input.display(),
                td.dims().len()
            )));
        }
    };
    let mut values: Vec<f64> = td.data()[plane_offset..plane_offset + rows * cols]
        .iter()
        .map(|&v| v as f64)
        .collect();
    if args.normalize {
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max > min {
            for v in &mut values {
                *v = (*v - min) / (max - min);
            }
        } else {
            values.iter_mut().for_each(|v| *v = 0.0);
        }
    }
    let grid = Grid::from_vec(rows, cols, values).expect("dims match payload");
    match write_pgm(&args.out, &grid) {
        Ok(()) => {
            eprintln!("wrote {}", args.out.display());
            Ok(())
        }
        Err(FormatError::PixelRange { .. }) if !args.normalize => Err(CliError::Data(format!(
            "{}: values outside [0, 1]; rerun with --normalize",
            args.input.display()
        ))),
        Err(e) => Err(data(e)),
    }
}

fn run_gen_dataset(args: GenDatasetArgs) -> Result<(), CliError> {
    if args.count == 0 {
        return Err(CliError::Usage("gen-dataset: --count must be positive".into()));
    }
    std::fs::create_dir_all(&args.out).map_err(|e| data_at(&args.out, e))?;
    let spec = DatasetSpec::<f64>::desk();
    for k in 0..args.count {
        let seed = args.start_seed + k as u64;
        let sample = generate_sample(&spec, seed).map_err(data)?;
        let stem = format!("{}{seed:04}", args.prefix);
        let rgb_path = args.out.join(format!("{stem}.rgb.rtns"));
        write_tensor(&rgb_path, &TensorData::from_tensor(sample.appearance.tensor()))
            .map_err(data)?;
        let mask_path = args.out.join(format!("{stem}.mask.rtns"));
        write_tensor(&mask_path, &TensorData::from_grid(sample.mask.values())).map_err(data)?;
    }
    eprintln!(
        "wrote {} sample pairs to {}",
        args.count,
        args.out.display()
    );
    Ok(())
}
