use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use curvepose_core::curvnet::CurvNet;
use curvepose_core::pipeline::{
    detect_and_classify, estimate, score_sample, Ablation, ColumnSummary, Detection, DiameterSource, EvalRecord,
    EvalSummary, PipelineConfig, PipelineError, TargetLibrary,
};
use curvepose_core::synth::SceneSample;

use crate::dataset::Dataset;
use crate::FileError;

/// Runs one sample through the stages selected by `ablation`. Pipeline
/// failures become unsuccessful rows; only the estimate call is timed.
pub fn evaluate_sample(
    index: usize,
    sample: &SceneSample,
    library: &TargetLibrary,
    net: Option<&CurvNet>,
    ablation: Ablation,
    cfg: &PipelineConfig,
) -> EvalRecord {
    let truth = &sample.truth;
    let detection = match ablation {
        Ablation::Full => detect_and_classify(&sample.image, library, cfg, None),
        Ablation::GtBBox => detect_and_classify(&sample.image, library, cfg, Some(&truth.bbox)),
        Ablation::GtAll => Ok(Detection::from_ground_truth(truth)),
    };
    let Ok(detection) = detection else {
        return score_sample(index, truth, None, None, None);
    };
    let diameter = match (ablation, net) {
        (Ablation::GtAll, _) => DiameterSource::Fixed(truth.diameter),
        (_, Some(net)) => DiameterSource::Network(net),
        (_, None) => return score_sample(index, truth, Some(&detection), None, None),
    };
    let start = Instant::now();
    let result = estimate(&sample.image, &detection, library, diameter, &truth.intrinsics, cfg);
    let elapsed = start.elapsed().as_secs_f64();
    score_sample(index, truth, Some(&detection), result.as_ref().ok(), Some(elapsed))
}

/// Every sample of `ds` in manifest order. Unreadable files abort the run.
pub fn evaluate(
    ds: &Dataset,
    library: &TargetLibrary,
    net: Option<&CurvNet>,
    ablation: Ablation,
    cfg: &PipelineConfig,
    on_record: &mut dyn FnMut(&EvalRecord),
) -> Result<Vec<EvalRecord>, FileError> {
    let mut records = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let sample = ds.sample(i)?;
        let rec = evaluate_sample(i, &sample, library, net, ablation, cfg);
        on_record(&rec);
        records.push(rec);
    }
    Ok(records)
}

/// Whether an ablation needs a trained network.
pub fn needs_network(ablation: Ablation) -> bool {
    ablation != Ablation::GtAll
}

pub const EVAL_HEADER: &str = "sample,success,iou,time_s,diameter_err,rotation_err_rad,translation_err";

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn eval_csv(records: &[EvalRecord]) -> String {
    let mut out = String::from(EVAL_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.sample,
            u8::from(r.success),
            cell(r.iou),
            cell(r.time_s),
            cell(r.diameter_err),
            cell(r.rotation_err),
            cell(r.translation_err)
        );
    }
    out
}

pub fn write_eval_csv(records: &[EvalRecord], path: &Path) -> Result<(), FileError> {
    std::fs::write(path, eval_csv(records)).map_err(|e| FileError::io(path, e))
}

/// Mean ± std table in the order of the CSV columns.
pub fn summary_table(s: &EvalSummary) -> String {
    let row = |name: &str, c: &ColumnSummary| match (c.mean, c.std) {
        (Some(m), Some(sd)) => format!("{name:<22} {m:>10.4} ± {sd:<10.4} (n={})\n", c.count),
        _ => format!("{name:<22} {:>10}   {:<10} (n=0)\n", "-", ""),
    };
    let mut out =
        format!("samples                {:>10}\nsuccess rate           {:>10.4}\n", s.samples, s.success_rate);
    out += &row("iou", &s.iou);
    out += &row("time_s", &s.time_s);
    out += &row("diameter_err (HoI)", &s.diameter_err);
    out += &row("rotation_err (rad)", &s.rotation_err);
    out += &row("translation_err (HoI)", &s.translation_err);
    out
}

/// Exit-code class of a pipeline failure: 2 when nothing was found, 3 when a
/// target was found but no pose could be recovered, 4 otherwise.
pub fn exit_code(err: &PipelineError) -> i32 {
    match err {
        PipelineError::NoDetection { .. } | PipelineError::EmptyLibrary => 2,
        PipelineError::TooFewMatches { .. } | PipelineError::Pose(_) | PipelineError::RegionTooSmall { .. } => 3,
        _ => 4,
    }
}
