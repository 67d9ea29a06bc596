use std::path::Path;
use std::process::{Command, Output};
use std::sync::OnceLock;

use curvepose::images::save_png;
use curvepose::report::PoseJson;
use curvepose_core::raster::RgbImage;

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvepose")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Five targets and a three-image dataset shared by the tests.
fn fixture() -> &'static Path {
    static DIR: OnceLock<tempfile::TempDir> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("targets");
        let d = dir.path().join("data");
        assert_eq!(code(&cli(&["make-targets", "--out", s(&t), "--count", "5", "--seed", "7"])), 0);
        let out =
            cli(&["generate", "--targets", s(&t), "--count", "3", "--out", s(&d), "--seed", "4", "--supersample", "1"]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        dir
    })
    .path()
}

#[test]
fn usage_errors_exit_with_config_code() {
    assert_eq!(code(&cli(&[])), 4);
    assert_eq!(code(&cli(&["generate", "--count", "x"])), 4);
    assert_eq!(code(&cli(&["--help"])), 0);
}

#[test]
fn generate_writes_the_documented_layout() {
    let d = fixture().join("data");
    for f in ["manifest.json", "images/00000.png", "images/00002.png", "truth/00000.json", "truth/00002.json"] {
        assert!(d.join(f).is_file(), "{f}");
    }
    assert!(!d.join("images/00003.png").exists());
}

#[test]
fn run_with_ground_truth_box_and_diameter() {
    let root = fixture();
    let truth_path = root.join("data/truth/00001.json");
    let truth = curvepose::dataset::read_truth(&truth_path).unwrap();
    let out_json = root.join("pose1.json");
    let overlay = root.join("overlay1.png");
    let d = truth.diameter.to_string();
    let out = cli(&[
        "run",
        "--image",
        s(&root.join("data/images/00001.png")),
        "--targets",
        s(&root.join("targets")),
        "--gt-bbox",
        s(&truth_path),
        "--intrinsics",
        s(&truth_path),
        "--diameter",
        &d,
        "--out",
        s(&out_json),
        "--overlay",
        s(&overlay),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let pose: PoseJson = serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert_eq!(pose.target_id, truth.target_id);
    assert_eq!(pose.diameter, truth.diameter);
    let t = truth.pose().translation;
    let err = ((pose.translation[0] - t.x).powi(2)
        + (pose.translation[1] - t.y).powi(2)
        + (pose.translation[2] - t.z).powi(2))
    .sqrt();
    assert!(err < 0.05 * t.norm(), "translation off by {err}");
    assert!(overlay.is_file());
}

#[test]
fn run_on_blank_image_reports_no_detection() {
    let root = fixture();
    let blank = root.join("blank.png");
    save_png(&RgbImage::filled(640, 480, [120, 120, 120]), &blank).unwrap();
    let out = cli(&[
        "run",
        "--image",
        s(&blank),
        "--targets",
        s(&root.join("targets")),
        "--diameter",
        "1.5",
        "--out",
        s(&root.join("blank.json")),
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!root.join("blank.json").exists());
}

#[test]
fn run_without_model_or_diameter_is_a_config_error() {
    let root = fixture();
    let out = cli(&[
        "run",
        "--image",
        s(&root.join("data/images/00000.png")),
        "--targets",
        s(&root.join("targets")),
        "--out",
        s(&root.join("x.json")),
    ]);
    assert_eq!(code(&out), 4);
    let out = cli(&["inspect", "--image", s(&root.join("missing.png")), "--out", s(&root.join("x.json"))]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.png"));
}

#[test]
fn eval_with_ground_truth_everything() {
    let root = fixture();
    let csv = root.join("gtall.csv");
    let out = cli(&[
        "eval",
        "--dataset",
        s(&root.join("data")),
        "--targets",
        s(&root.join("targets")),
        "--ablation",
        "gtall",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert_eq!(r[1], "1");
        assert_eq!(r[2], "1");
        assert_eq!(r[4], "0");
    }
    assert!(String::from_utf8_lossy(&out.stdout).contains("success rate"));

    let out =
        cli(&["eval", "--dataset", s(&root.join("data")), "--targets", s(&root.join("targets")), "--out", s(&csv)]);
    assert_eq!(code(&out), 4, "full ablation needs a model");
}

#[test]
fn inspect_dumps_keypoints() {
    let root = fixture();
    let out_json = root.join("kp.json");
    let out = cli(&["inspect", "--image", s(&root.join("targets/target_00.png")), "--out", s(&out_json)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_json).unwrap()).unwrap();
    assert!(v["keypoints"].as_array().unwrap().len() > 20);
}
