use rand::seq::SliceRandom;

use super::{lr_at, MlpModel, WarmRestart, Workspace};
use crate::error::{Error, Result};
use crate::exec::stream_rng;
use crate::kvconfig::KvConfig;

/// Every key accepted in a training config file.
pub const TRAIN_CONFIG_KEYS: &[&str] = &[
    "learning_rate",
    "weight_decay",
    "batch_size",
    "epochs",
    "steps",
    "adam_beta1",
    "adam_beta2",
    "adam_eps",
    "t0",
    "t_mult",
    "eta_min",
    "seed",
    "hidden",
    "dataset",
    "train_count",
    "test_count",
    "data_seed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Overrides `epochs` when set.
    pub steps: Option<usize>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub warm_restart: WarmRestart,
    /// Seeds initialization and shuffling.
    pub seed: u64,
    pub hidden: Vec<usize>,
    /// Preset name or dataset file path.
    pub dataset: String,
    pub train_count: usize,
    pub test_count: usize,
    /// Seeds dataset sampling, independent of `seed`.
    pub data_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 5e-5,
            weight_decay: 1e-7,
            batch_size: 128,
            epochs: 20,
            steps: None,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            warm_restart: WarmRestart {
                t0: 3.0,
                t_mult: 2,
                eta_min: 1e-6,
            },
            seed: 0,
            hidden: vec![32],
            dataset: "2x2-first".into(),
            train_count: 100_000,
            test_count: 10_000,
            data_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults overlaid with the entries of `kv`.
    pub fn from_kv(kv: &KvConfig) -> Result<Self> {
        kv.require_known(TRAIN_CONFIG_KEYS)?;
        let d = TrainConfig::default();
        let cfg = TrainConfig {
            learning_rate: kv.get_or("learning_rate", d.learning_rate)?,
            weight_decay: kv.get_or("weight_decay", d.weight_decay)?,
            batch_size: kv.get_or("batch_size", d.batch_size)?,
            epochs: kv.get_or("epochs", d.epochs)?,
            steps: kv.get("steps")?,
            adam_beta1: kv.get_or("adam_beta1", d.adam_beta1)?,
            adam_beta2: kv.get_or("adam_beta2", d.adam_beta2)?,
            adam_eps: kv.get_or("adam_eps", d.adam_eps)?,
            warm_restart: WarmRestart {
                t0: kv.get_or("t0", d.warm_restart.t0)?,
                t_mult: kv.get_or("t_mult", d.warm_restart.t_mult)?,
                eta_min: kv.get_or("eta_min", d.warm_restart.eta_min)?,
            },
            seed: kv.get_or("seed", d.seed)?,
            hidden: kv.get_list("hidden")?.unwrap_or(d.hidden),
            dataset: kv.raw("dataset").map(str::to_string).unwrap_or(d.dataset),
            train_count: kv.get_or("train_count", d.train_count)?,
            test_count: kv.get_or("test_count", d.test_count)?,
            data_seed: kv.get_or("data_seed", d.data_seed)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv(&self) -> KvConfig {
        let mut kv = KvConfig::default();
        kv.set("learning_rate", self.learning_rate);
        kv.set("weight_decay", self.weight_decay);
        kv.set("batch_size", self.batch_size);
        kv.set("epochs", self.epochs);
        if let Some(s) = self.steps {
            kv.set("steps", s);
        }
        kv.set("adam_beta1", self.adam_beta1);
        kv.set("adam_beta2", self.adam_beta2);
        kv.set("adam_eps", self.adam_eps);
        kv.set("t0", self.warm_restart.t0);
        kv.set("t_mult", self.warm_restart.t_mult);
        kv.set("eta_min", self.warm_restart.eta_min);
        kv.set("seed", self.seed);
        let hidden: Vec<String> = self.hidden.iter().map(usize::to_string).collect();
        kv.set("hidden", hidden.join(","));
        kv.set("dataset", &self.dataset);
        kv.set("train_count", self.train_count);
        kv.set("test_count", self.test_count);
        kv.set("data_seed", self.data_seed);
        kv
    }

    pub fn validate(&self) -> Result<()> {
        let eta_min = self.warm_restart.eta_min;
        if !(self.learning_rate > eta_min && eta_min >= 0.0) {
            return Err(Error::Config("need learning_rate > eta_min >= 0".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.warm_restart.t0 > 0.0) || self.warm_restart.t_mult == 0 {
            return Err(Error::Config("need t0 > 0 and t_mult >= 1".into()));
        }
        Ok(())
    }

    pub fn lr_at(&self, epoch_progress: f64) -> f64 {
        lr_at(self.learning_rate, &self.warm_restart, epoch_progress)
    }
}

/// Training pairs in network coordinates, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainData {
    pub in_dim: usize,
    pub out_dim: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl TrainData {
    pub fn new(in_dim: usize, out_dim: usize) -> Self {
        TrainData {
            in_dim,
            out_dim,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, x: &[f64], y: &[f64]) {
        assert_eq!(x.len(), self.in_dim);
        assert_eq!(y.len(), self.out_dim);
        self.inputs.extend_from_slice(x);
        self.targets.extend_from_slice(y);
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.in_dim.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.in_dim..(i + 1) * self.in_dim]
    }

    pub fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.out_dim..(i + 1) * self.out_dim]
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    /// One bias-corrected step; weight decay is added to the gradient.
    fn step(&mut self, cfg: &TrainConfig, lr: f64, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i] + cfg.weight_decay * params[i];
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * g;
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
    }
}

/// Trains a fresh network on `data` with minibatch Adam under the warm-restart
/// schedule. Returns the model and the mean training loss of each epoch.
///
/// The update sequence is single-threaded, so results are reproducible per
/// seed.
pub fn train(cfg: &TrainConfig, data: &TrainData) -> Result<(MlpModel, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    let mut dims = vec![data.in_dim];
    dims.extend(&cfg.hidden);
    dims.push(data.out_dim);
    let mut model = MlpModel::init(&dims, None, &mut stream_rng(cfg.seed, 0))?;
    let mut shuffle_rng = stream_rng(cfg.seed, 1);

    let n = data.len();
    let steps_per_epoch = n.div_ceil(cfg.batch_size);
    let total_steps = cfg.steps.unwrap_or(cfg.epochs * steps_per_epoch);

    let mut params = model.params();
    let mut grads = vec![0.0; params.len()];
    let mut adam = Adam::new(params.len());
    let mut ws = Workspace::new(&model);
    let mut order: Vec<usize> = (0..n).collect();
    let mut trace = Vec::new();
    let mut epoch_loss = 0.0;
    let mut epoch_batches = 0usize;

    for step in 0..total_steps {
        let in_epoch = step % steps_per_epoch;
        if in_epoch == 0 {
            order.shuffle(&mut shuffle_rng);
        }
        let batch = &order[in_epoch * cfg.batch_size..((in_epoch + 1) * cfg.batch_size).min(n)];

        grads.iter_mut().for_each(|g| *g = 0.0);
        let mut sse = 0.0;
        for &i in batch {
            sse += ws.accumulate(&model, data.input(i), data.target(i), &mut grads);
        }
        let denom = (batch.len() * data.out_dim) as f64;
        let loss = sse / denom;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { step, trace });
        }
        grads.iter_mut().for_each(|g| *g /= denom);

        let progress = step as f64 / steps_per_epoch as f64;
        adam.step(cfg, cfg.lr_at(progress), &mut params, &grads);
        model.set_params(&params);

        epoch_loss += loss;
        epoch_batches += 1;
        if in_epoch + 1 == steps_per_epoch || step + 1 == total_steps {
            trace.push(epoch_loss / epoch_batches as f64);
            epoch_loss = 0.0;
            epoch_batches = 0;
        }
    }
    Ok((model, trace))
}
