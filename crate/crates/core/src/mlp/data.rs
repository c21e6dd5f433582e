use std::path::Path;

use super::{avg_abs_error, train, Frame, MlpModel, TrainConfig, TrainData};
use crate::error::Result;
use crate::linalg::{inverse, Matrix};
use crate::regions::{preset, read_dataset, sample_dataset, BoxRegion, PRESETS};

/// Network coordinates for a box: inputs `(A − A₀)/c`, targets
/// `(A⁻¹ − A₀⁻¹)/c`.
pub fn normalized_frame(region: &BoxRegion) -> Result<Frame> {
    Frame::new(region.center.clone(), inverse(&region.center)?, region.half_width)
}

/// Seed of the held-out test set drawn for a given training data seed.
pub fn test_seed(data_seed: u64) -> u64 {
    data_seed ^ 0x7e57_5eed_0000_0000
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub region: BoxRegion,
    pub frame: Frame,
    pub train: TrainData,
    pub test: Vec<(Matrix, Matrix)>,
}

/// Box for a preset name or a dataset file path.
pub fn resolve_region(dataset: &str) -> Result<(BoxRegion, Option<Vec<(Matrix, Matrix)>>)> {
    if PRESETS.contains(&dataset) || !Path::new(dataset).exists() {
        return Ok((preset(dataset)?, None));
    }
    let ds = read_dataset(Path::new(dataset))?;
    Ok((ds.region, Some(ds.pairs)))
}

/// Training pairs (`train_count` fresh samples, or the file's pairs) and a
/// `test_count` test set from the same box.
pub fn prepare(cfg: &TrainConfig) -> Result<Prepared> {
    let (region, from_file) = resolve_region(&cfg.dataset)?;
    let frame = normalized_frame(&region)?;
    let pairs = match from_file {
        Some(p) => p,
        None => sample_dataset(&region, cfg.train_count, cfg.data_seed)?,
    };
    let nn = region.n() * region.n();
    let mut train = TrainData::new(nn, nn);
    for (a, l) in &pairs {
        train.push(&frame.encode(a), &frame.encode_label(l));
    }
    let test = sample_dataset(&region, cfg.test_count, test_seed(cfg.data_seed))?;
    Ok(Prepared {
        region,
        frame,
        train,
        test,
    })
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: MlpModel,
    pub loss_trace: Vec<f64>,
    /// `None` when the test set is empty.
    pub test_error: Option<f64>,
}

/// Prepare, train, attach the frame and evaluate on the test set.
pub fn run_training(cfg: &TrainConfig) -> Result<TrainRun> {
    let prepared = prepare(cfg)?;
    let (mut model, loss_trace) = train(cfg, &prepared.train)?;
    model.frame = Some(prepared.frame);
    let test_error = if prepared.test.is_empty() {
        None
    } else {
        Some(avg_abs_error(&model, &prepared.test)?)
    };
    Ok(TrainRun {
        model,
        loss_trace,
        test_error,
    })
}
