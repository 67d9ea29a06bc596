use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use curvepose::dataset::{read_bbox, read_intrinsics, Dataset, DatasetWriter};
use curvepose::evaluate::{evaluate, exit_code, needs_network, summary_table, write_eval_csv};
use curvepose::images::{load_rgb, save_png};
use curvepose::model::{load_model, save_model, write_history};
use curvepose::overlay::draw_wireframe;
use curvepose::report::{InspectJson, PoseJson};
use curvepose::targets::{load_panoramas, load_targets, write_procedural_targets};
use curvepose::training::train_on_dataset;
use curvepose_core::curvnet::{Loss, NetConfig, TrainConfig, Variant};
use curvepose_core::features::detect_and_describe;
use curvepose_core::geometry::{CameraIntrinsics, CylinderModel};
use curvepose_core::pipeline::{
    detect_and_classify, estimate, summarize, Ablation, DiameterSource, PipelineConfig, PipelineError, TargetLibrary,
};
use curvepose_core::synth::{generate_scene, render, BackgroundMix, SceneDistribution};

#[derive(Parser)]
#[command(name = "curvepose", version, about = "Pose and diameter of labels wrapped on cylinders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Small,
    Large,
}

#[derive(Clone, Copy, ValueEnum)]
enum LossArg {
    Huber,
    Mse,
}

#[derive(Clone, Copy, ValueEnum)]
enum AblationArg {
    Full,
    Gtbbox,
    Gtall,
}

#[derive(Subcommand)]
enum Command {
    /// Write procedural label images to use as targets.
    MakeTargets {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Label height in pixels.
        #[arg(long, default_value_t = 256)]
        height: u32,
    },
    /// Render a synthetic dataset.
    Generate {
        #[arg(long)]
        targets: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Image size as WxH.
        #[arg(long, default_value = "640x480", value_parser = parse_size)]
        size: (u32, u32),
        /// Folder of equirectangular panoramas to use as backgrounds.
        #[arg(long)]
        backgrounds: Option<PathBuf>,
        /// Rays per pixel along each axis.
        #[arg(long, default_value_t = 2)]
        supersample: u32,
    },
    /// Train the curvature network on a dataset's ground-truth crops.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, value_enum, default_value = "small")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "huber")]
        loss: LossArg,
        #[arg(long, default_value_t = 0.4)]
        delta: f64,
        #[arg(long)]
        out: PathBuf,
        /// Per-epoch losses as CSV (default: MODEL with `.history.csv`).
        #[arg(long)]
        history: Option<PathBuf>,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 4)]
        patience: usize,
        #[arg(long, default_value_t = 1e-3)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Estimate the pose and diameter of the label in one image.
    Run {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Needed unless --diameter is given.
        #[arg(long)]
        model: Option<PathBuf>,
        /// JSON with a bbox (bare `{x,y,w,h}` or a truth file).
        #[arg(long)]
        gt_bbox: Option<PathBuf>,
        /// Known cylinder diameter in HoI; skips the network.
        #[arg(long)]
        diameter: Option<f64>,
        /// JSON with camera intrinsics (bare or a truth file); default is the
        /// reference camera scaled to the image size.
        #[arg(long)]
        intrinsics: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the image with the estimated wireframe drawn on it.
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a dataset and write one CSV row per sample.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        targets: PathBuf,
        /// Needed unless --ablation gtall.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "full")]
        ablation: AblationArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Dump keypoints and descriptors of an image.
    Inspect {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: u32 = w.parse().map_err(|_| "bad width")?;
    let h: u32 = h.parse().map_err(|_| "bad height")?;
    if w < 16 || h < 16 {
        return Err("image must be at least 16x16".into());
    }
    Ok((w, h))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 4 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<PipelineError>().map_or(4, exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::MakeTargets { out, count, seed, height } => {
            if count == 0 || height < 16 {
                bail!("need at least one target of height ≥ 16");
            }
            let paths = write_procedural_targets(&out, count, seed, height)?;
            eprintln!("wrote {} targets to {}", paths.len(), out.display());
        }
        Command::Generate { targets, count, out, seed, size, backgrounds, supersample } => {
            let library = load_targets(&targets)?;
            let panoramas = match backgrounds {
                Some(dir) => load_panoramas(&dir)?,
                None => Vec::new(),
            };
            let mut dist = SceneDistribution::new(CameraIntrinsics::scaled_reference(size.0, size.1));
            dist.backgrounds = BackgroundMix { flat: true, noise: true, panoramas: panoramas.len() };
            dist.supersample = supersample.max(1);
            let mut writer = DatasetWriter::create(&out)?;
            for i in 0..count {
                let scene = generate_scene(&library, &dist, i as u64, seed)?;
                writer.push(&render(&scene, &library, &panoramas)?)?;
                if (i + 1) % 50 == 0 || i + 1 == count {
                    eprintln!("rendered {}/{count}", i + 1);
                }
            }
            writer.finish()?;
        }
        Command::Train { dataset, variant, loss, delta, out, history, epochs, patience, lr, batch_size, seed } => {
            let variant = match variant {
                VariantArg::Small => Variant::Small,
                VariantArg::Large => Variant::Large,
            };
            let loss = match loss {
                LossArg::Huber => Loss::Huber { delta },
                LossArg::Mse => Loss::Mse,
            };
            let net_cfg = NetConfig::for_variant(variant).with_loss(loss);
            let cfg = TrainConfig {
                max_epochs: epochs,
                patience,
                learning_rate: lr,
                batch_size,
                seed,
                ..TrainConfig::default()
            };
            let ds = Dataset::open(&dataset)?;
            eprintln!("training {} on {} samples", variant.name(), ds.len());
            let (net, hist) = train_on_dataset(&ds, &net_cfg, &cfg, &mut |e| {
                eprintln!(
                    "epoch {:>3}  train huber {:.5} mse {:.5}  val huber {:.5} mse {:.5}",
                    e.epoch, e.train_huber, e.train_mse, e.val_huber, e.val_mse
                )
            })?;
            save_model(&net, &out)?;
            let history = history.unwrap_or_else(|| out.with_extension("history.csv"));
            write_history(&hist, &history)?;
            if let Some(best) = hist.best() {
                eprintln!(
                    "best epoch {} (val huber {:.5}){}",
                    best.epoch,
                    best.val_huber,
                    if hist.stopped_early { ", stopped early" } else { "" }
                );
            }
        }
        Command::Run { image, targets, model, gt_bbox, diameter, intrinsics, out, overlay, seed } => {
            let img = load_rgb(&image)?;
            let k = match intrinsics {
                Some(p) => read_intrinsics(&p)?,
                None => CameraIntrinsics::scaled_reference(img.width, img.height),
            };
            if (k.width, k.height) != (img.width, img.height) {
                bail!("intrinsics are for {}x{} but the image is {}x{}", k.width, k.height, img.width, img.height);
            }
            let net = match (diameter, &model) {
                (Some(_), _) => None,
                (None, Some(p)) => Some(load_model(p)?),
                (None, None) => bail!("either --model or --diameter is required"),
            };
            let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
            let library = TargetLibrary::build(load_targets(&targets)?, &cfg.sift)?;
            let bbox = gt_bbox.as_deref().map(read_bbox).transpose()?;
            let detection = detect_and_classify(&img, &library, &cfg, bbox.as_ref())?;
            let source = match (&net, diameter) {
                (Some(n), _) => DiameterSource::Network(n),
                (None, Some(d)) => DiameterSource::Fixed(d),
                (None, None) => unreachable!("checked above"),
            };
            let est = estimate(&img, &detection, &library, source, &k, &cfg)?;
            curvepose::write_json(&out, &PoseJson::from(&est))?;
            if let Some(path) = overlay {
                let mut canvas = img.clone();
                let label_width = library.get(est.target_id)?.target.label_width();
                let cyl = CylinderModel::new(est.diameter, label_width).context("estimated cylinder")?;
                draw_wireframe(&mut canvas, &est.pose, &cyl, &k);
                save_png(&canvas, &path)?;
            }
            eprintln!(
                "target {}  diameter {:.4}  inliers {}/{}  reprojection {:.3} px",
                est.target_id, est.diameter, est.inliers, est.matches, est.reprojection_error
            );
        }
        Command::Eval { dataset, targets, model, ablation, out, seed } => {
            let ablation = match ablation {
                AblationArg::Full => Ablation::Full,
                AblationArg::Gtbbox => Ablation::GtBBox,
                AblationArg::Gtall => Ablation::GtAll,
            };
            let net = match &model {
                Some(p) => Some(load_model(p)?),
                None if needs_network(ablation) => bail!("--model is required for ablation {}", ablation.name()),
                None => None,
            };
            let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
            let library = TargetLibrary::build(load_targets(&targets)?, &cfg.sift)?;
            let ds = Dataset::open(&dataset)?;
            let n = ds.len();
            let records = evaluate(&ds, &library, net.as_ref(), ablation, &cfg, &mut |r| {
                if (r.sample + 1) % 25 == 0 || r.sample + 1 == n {
                    eprintln!("evaluated {}/{n}", r.sample + 1);
                }
            })?;
            write_eval_csv(&records, &out)?;
            print!("{}", summary_table(&summarize(&records)));
        }
        Command::Inspect { image, out } => {
            let img = load_rgb(&image)?;
            let feats = detect_and_describe(&img.to_gray(), &PipelineConfig::default().sift)?;
            curvepose::write_json(&out, &InspectJson::new(img.width, img.height, &feats))?;
            eprintln!("{} keypoints", feats.len());
        }
    }
    Ok(())
}
