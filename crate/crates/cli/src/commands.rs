use std::path::Path;
use std::time::Instant;

use clap::Args;
use invlab::analytic_net::{build_two_layer, quadratic_error_sweep, sweep_csv};
use invlab::limits::{
    adversarial_point, ball_csv, blowup_csv, divergence_csv, divergence_report, expected_error_ball,
    verify_inverse_blowup, ExactInverse,
};
use invlab::linalg::{det, inverse};
use invlab::linear_approx::linearize_inverse;
use invlab::lipschitz::{falsification_suite, suite_csv};
use invlab::mlp::{
    avg_abs_error, load_checkpoint, reference_model, resolve_region, run_training, save_checkpoint, test_seed,
    to_checkpoint_json, ConstantPredictor, MlpModel, Predictor, TrainConfig, TRAIN_CONFIG_KEYS,
};
use invlab::region_analysis::{patterns_csv, region_report, report_csv, sample_patterns};
use invlab::regions::{
    certify, emit_meps_slice_2d, emit_meps_surface_3d, preset, sample_dataset, slice_csv, surface_csv, write_dataset,
    BoxRegion, Dataset, DATASET_EPS, PRESETS,
};
use invlab::{Error, Matrix, NormKind, Result};
use rand::Rng;

use crate::run::{parse_matrix, Run};
use crate::ConfigArg;

/// `(key, flag value)` pairs named after the struct fields.
macro_rules! overrides {
    ($s:ident; $($f:ident),* $(,)?) => {
        vec![$((stringify!($f), $s.$f.as_ref().map(|v| v.to_string()))),*]
    };
}

const BUNDLED: &str = "reference";

fn load_model(spec: &str) -> Result<MlpModel> {
    if spec == BUNDLED {
        Ok(reference_model())
    } else {
        load_checkpoint(Path::new(spec))
    }
}

fn fmt_matrix(m: &Matrix) -> String {
    let n = m.n();
    (0..n)
        .map(|r| (0..n).map(|c| m[(r, c)].to_string()).collect::<Vec<_>>().join(" "))
        .collect::<Vec<_>>()
        .join("; ")
}

/// A preset, or a custom box when `center` is given.
fn region_from(run: &Run, default_dataset: &str) -> Result<(String, BoxRegion)> {
    match run.kv.raw("center") {
        Some(text) => {
            let region = BoxRegion::new(parse_matrix("center", text)?, run.get("half_width", 0.01)?)?;
            Ok(("custom".into(), region))
        }
        None => {
            let name = run.string("dataset", default_dataset);
            let mut region = preset(&name)?;
            if let Some(c) = run.kv.get::<f64>("half_width")? {
                region = BoxRegion::new(region.center, c)?;
            }
            Ok((name, region))
        }
    }
}

#[derive(Args, Debug)]
pub struct GenData {
    #[command(flatten)]
    config: ConfigArg,
    /// Preset name, or `all` for every preset.
    #[arg(long)]
    dataset: Option<String>,
    /// Custom box center, e.g. "2 2; 2 3".
    #[arg(long)]
    center: Option<String>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// File name inside the output directory.
    #[arg(long)]
    output: Option<String>,
}

impl GenData {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = ["dataset", "center", "half_width", "count", "seed", "output"];
        let mut run = Run::start(
            "gen-data",
            out,
            self.config.config.as_deref(),
            overrides!(self; dataset, center, half_width, count, seed, output),
            &keys,
        )?;
        let count: usize = run.get("count", 10_000)?;
        let seed: u64 = run.get("seed", 0)?;
        let names: Vec<String> = if run.string("dataset", "") == "all" && run.kv.raw("center").is_none() {
            PRESETS.iter().map(|s| s.to_string()).collect()
        } else {
            vec![region_from(&run, "2x2-first")?.0]
        };
        for name in names {
            let region = if name == "custom" {
                region_from(&run, "")?.1
            } else {
                let mut r = preset(&name)?;
                if let Some(c) = run.kv.get::<f64>("half_width")? {
                    r = BoxRegion::new(r.center, c)?;
                }
                r
            };
            let ds = Dataset {
                pairs: sample_dataset(&region, count, seed)?,
                region,
                seed,
            };
            let file = match run.kv.raw("output") {
                Some(f) if run.string("dataset", "") != "all" => f.to_string(),
                _ => format!("{name}.csv"),
            };
            let path = run.output(&file);
            write_dataset(&ds, &path)?;
            println!("{}: {} pairs -> {}", name, ds.pairs.len(), path.display());
        }
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Train {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Total optimizer steps; overrides `epochs`.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    adam_beta1: Option<f64>,
    #[arg(long)]
    adam_beta2: Option<f64>,
    #[arg(long)]
    adam_eps: Option<f64>,
    #[arg(long)]
    t0: Option<f64>,
    #[arg(long)]
    t_mult: Option<u32>,
    #[arg(long)]
    eta_min: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hidden widths, comma separated.
    #[arg(long)]
    hidden: Option<String>,
    /// Preset name or dataset file.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    train_count: Option<usize>,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    /// Checkpoint file name inside the output directory.
    #[arg(long)]
    checkpoint: Option<String>,
}

impl Train {
    pub fn run(&self, out: &Path) -> Result<()> {
        let mut keys = TRAIN_CONFIG_KEYS.to_vec();
        keys.push("checkpoint");
        let mut run = Run::start(
            "train",
            out,
            self.config.config.as_deref(),
            overrides!(self; learning_rate, weight_decay, batch_size, epochs, steps, adam_beta1,
                adam_beta2, adam_eps, t0, t_mult, eta_min, seed, hidden, dataset, train_count,
                test_count, data_seed, checkpoint),
            &keys,
        )?;
        let checkpoint = run.string("checkpoint", "model.json");
        let mut train_kv = invlab::kvconfig::KvConfig::default();
        for (k, v) in run.kv.iter().filter(|(k, _)| *k != "checkpoint") {
            train_kv.set(k, v);
        }
        let cfg = TrainConfig::from_kv(&train_kv)?;
        let started = Instant::now();
        let result = run_training(&cfg)?;
        let mut loss = String::from("epoch,mean_loss\n");
        for (i, l) in result.loss_trace.iter().enumerate() {
            loss.push_str(&format!("{},{:.12e}\n", i + 1, l));
        }
        run.write("train_loss.csv", &loss)?;
        save_checkpoint(&result.model, &run.output(&checkpoint))?;
        run.result("train_seconds", started.elapsed().as_secs_f64());
        run.result("epochs_completed", result.loss_trace.len());
        run.result("num_params", result.model.num_params());
        if let Some(e) = result.test_error {
            run.result("test_avg_abs_error", e);
            println!("test avg abs error: {e:.4e}");
        }
        run.finish(Some(cfg.seed))
    }
}

#[derive(Args, Debug)]
pub struct Eval {
    #[command(flatten)]
    config: ConfigArg,
    /// `linear`, `constant`, `exact`, `analytic` or `checkpoint`.
    #[arg(long)]
    predictor: Option<String>,
    /// Checkpoint file, or `reference` for the bundled reference model.
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    test_count: Option<usize>,
    #[arg(long)]
    data_seed: Option<u64>,
    #[arg(long)]
    output: Option<String>,
}

impl Eval {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = [
            "predictor",
            "checkpoint",
            "dataset",
            "test_count",
            "data_seed",
            "output",
        ];
        let mut run = Run::start(
            "eval",
            out,
            self.config.config.as_deref(),
            overrides!(self; predictor, checkpoint, dataset, test_count, data_seed, output),
            &keys,
        )?;
        let dataset = run.string("dataset", "2x2-first");
        let data_seed: u64 = run.get("data_seed", 0)?;
        let (region, _) = resolve_region(&dataset)?;
        let test = sample_dataset(&region, run.get("test_count", 10_000)?, test_seed(data_seed))?;
        let kind = run.string("predictor", "linear");
        let lin = linearize_inverse(&region.center)?;
        let predictor: Box<dyn Predictor> = match kind.as_str() {
            "linear" => {
                run.write("linear_model.json", &json_text(&to_checkpoint_json(&lin.to_model()))?)?;
                run.write("linear_f1.json", &json_text(&lin.f1_json())?)?;
                Box::new(lin)
            }
            "constant" => Box::new(ConstantPredictor(inverse(&region.center)?)),
            "exact" => Box::new(ExactInverse),
            "analytic" => Box::new(build_two_layer(&region.center)?),
            "checkpoint" => Box::new(load_model(&run.string("checkpoint", BUNDLED))?),
            other => return Err(Error::Config(format!("unknown predictor `{other}`"))),
        };
        let err = avg_abs_error(predictor.as_ref(), &test)?;
        let csv = format!(
            "predictor,dataset,samples,avg_abs_error\n{kind},{dataset},{},{err:.6e}\n",
            test.len()
        );
        let output = run.string("output", "eval.csv");
        run.write(&output, &csv)?;
        run.result("avg_abs_error", err);
        println!(
            "{kind} on {dataset}: avg abs error {err:.4e} over {} samples",
            test.len()
        );
        run.finish(Some(data_seed))
    }
}

fn json_text(v: &serde_json::Value) -> Result<String> {
    serde_json::to_string_pretty(v)
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(e.to_string()))
}

#[derive(Args, Debug)]
pub struct Probe {
    #[command(flatten)]
    config: ConfigArg,
    /// `blowup`, `adversarial`, `ball`, `divergence` or `all`.
    #[arg(long)]
    probe: Option<String>,
    /// Singular rank n−1 witness, e.g. "1 1; 1 1".
    #[arg(long)]
    a0: Option<String>,
    /// Model under test: checkpoint file or `reference`.
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    norm: Option<NormKind>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    radii: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    thresholds: Option<String>,
    #[arg(long)]
    eps: Option<String>,
    #[arg(long)]
    k: Option<f64>,
    /// Divide each term by ‖x‖^kprime.
    #[arg(long)]
    kprime: Option<f64>,
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    divergence_eps: Option<f64>,
    #[arg(long)]
    divergence_k: Option<String>,
}

impl Probe {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = [
            "probe",
            "a0",
            "checkpoint",
            "norm",
            "seed",
            "radii",
            "samples",
            "thresholds",
            "eps",
            "k",
            "kprime",
            "schedule",
            "divergence_eps",
            "divergence_k",
        ];
        let mut run = Run::start(
            "probe",
            out,
            self.config.config.as_deref(),
            overrides!(self; probe, a0, checkpoint, norm, seed, radii, samples, thresholds, eps, k,
                kprime, schedule, divergence_eps, divergence_k),
            &keys,
        )?;
        let which = run.string("probe", "all");
        let a0 = parse_matrix("a0", &run.string("a0", "1 1; 1 1"))?;
        let norm: NormKind = run.get("norm", NormKind::L2)?;
        let seed: u64 = run.get("seed", 0)?;
        let samples: usize = run.get("samples", 10_000)?;
        let model = load_model(&run.string("checkpoint", BUNDLED))?;
        let all = which == "all";
        if !all && !["blowup", "adversarial", "ball", "divergence"].contains(&which.as_str()) {
            return Err(Error::Config(format!("unknown probe `{which}`")));
        }
        if all || which == "blowup" {
            let radii = run.list("radii", vec![1e-2, 1e-3, 1e-4])?;
            let rows = verify_inverse_blowup(&a0, &radii, samples, norm, seed)?;
            run.write("blowup.csv", &blowup_csv(&rows))?;
        }
        if all || which == "adversarial" {
            let mut csv = String::from("threshold,t,error,directions,det,x\n");
            for th in run.list("thresholds", vec![1e3, 1e6])? {
                let p = adversarial_point(&model, &a0, th, seed)?;
                csv.push_str(&format!(
                    "{th},{:e},{:.12e},{},{:e},{}\n",
                    p.t,
                    p.error,
                    p.directions,
                    det(&p.x),
                    fmt_matrix(&p.x)
                ));
            }
            run.write("adversarial.csv", &csv)?;
        }
        if all || which == "ball" {
            let eps = run.list("eps", vec![1e-1, 1e-2, 1e-3])?;
            let k: f64 = run.get("k", 1.0)?;
            let kprime = run.kv.get::<f64>("kprime")?;
            let rows = expected_error_ball(&model, &a0, &eps, k, samples, norm, seed, kprime)?;
            run.write("ball.csv", &ball_csv(&rows))?;
        }
        if all || which == "divergence" {
            let schedule = run.list("schedule", vec![1000usize, 10_000, 100_000])?;
            let eps: f64 = run.get("divergence_eps", 1e-2)?;
            for k in run.list("divergence_k", vec![1.0f64, 5.0])? {
                let rep = divergence_report(&model, &a0, k, eps, &schedule, seed)?;
                run.write(&format!("divergence_k{k}.csv"), &divergence_csv(&rep))?;
                run.result(&format!("divergence_flagged_k{k}"), rep.flagged);
            }
        }
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Regions {
    #[command(flatten)]
    config: ConfigArg,
    /// Preset name or `all`.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    center: Option<String>,
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    /// Interior samples (and random corners for large boxes).
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Regions {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = ["dataset", "center", "half_width", "eps", "budget", "seed"];
        let mut run = Run::start(
            "regions",
            out,
            self.config.config.as_deref(),
            overrides!(self; dataset, center, half_width, eps, budget, seed),
            &keys,
        )?;
        let eps: f64 = run.get("eps", DATASET_EPS)?;
        let budget: usize = run.get("budget", 1024)?;
        let seed: u64 = run.get("seed", 0)?;
        let boxes: Vec<(String, BoxRegion)> = if run.kv.raw("center").is_none() && run.string("dataset", "all") == "all"
        {
            PRESETS
                .iter()
                .map(|p| Ok((p.to_string(), preset(p)?)))
                .collect::<Result<_>>()?
        } else {
            vec![region_from(&run, "2x2-first")?]
        };
        let mut csv = String::from("dataset,n,half_width,eps,clearance,analytic_lower,certified\n");
        for (name, region) in &boxes {
            let c = certify(region, eps, budget, seed);
            csv.push_str(&format!(
                "{name},{},{},{eps},{:.12e},{:.12e},{}\n",
                region.n(),
                region.half_width,
                c.clearance,
                c.analytic_lower,
                c.certified
            ));
            println!("{name}: clearance {:.4e}, certified {}", c.clearance, c.certified);
        }
        run.write("regions.csv", &csv)?;
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Analyze {
    #[command(flatten)]
    config: ConfigArg,
    /// 2-layer checkpoint file or `reference`.
    #[arg(long)]
    checkpoint: Option<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Analyze {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = ["checkpoint", "dataset", "samples", "seed"];
        let mut run = Run::start(
            "analyze",
            out,
            self.config.config.as_deref(),
            overrides!(self; checkpoint, dataset, samples, seed),
            &keys,
        )?;
        let model = load_model(&run.string("checkpoint", BUNDLED))?;
        let (region, _) = resolve_region(&run.string("dataset", "2x2-first"))?;
        let seed: u64 = run.get("seed", 0)?;
        let hist = sample_patterns(&model, &region, run.get("samples", 1_000_000)?, seed)?;
        run.write("patterns.csv", &patterns_csv(&hist))?;
        let lin = linearize_inverse(&region.center)?;
        let rows = region_report(&model, &region, &lin, &hist)?;
        run.write("report.csv", &report_csv(&rows))?;
        run.result("nonempty_patterns", rows.len() / model.output_dim().max(1));
        for p in hist.iter().take(2) {
            println!("{:>6.2}%  {}", 100.0 * p.frequency, p.pattern);
        }
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Lipschitz {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Lipschitz {
    pub fn run(&self, out: &Path) -> Result<()> {
        let mut run = Run::start(
            "lipschitz",
            out,
            self.config.config.as_deref(),
            overrides!(self; pairs, seed),
            &["pairs", "seed"],
        )?;
        let seed: u64 = run.get("seed", 0)?;
        let rows = falsification_suite(run.get("pairs", 10_000)?, seed)?;
        run.write("lipschitz.csv", &suite_csv(&rows))?;
        let violations: usize = rows.iter().map(|r| r.violations).sum();
        run.result("violations", violations);
        println!("{} checks, {violations} violations", rows.len());
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Figures {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Axis range `lo,hi` for every grid.
    #[arg(long)]
    range: Option<String>,
    #[arg(long)]
    a11: Option<f64>,
    #[arg(long)]
    sweep_scales: Option<String>,
    #[arg(long)]
    sweep_samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Figures {
    pub fn run(&self, out: &Path) -> Result<()> {
        let keys = [
            "eps",
            "resolution",
            "range",
            "a11",
            "sweep_scales",
            "sweep_samples",
            "seed",
        ];
        let mut run = Run::start(
            "figures",
            out,
            self.config.config.as_deref(),
            overrides!(self; eps, resolution, range, a11, sweep_scales, sweep_samples, seed),
            &keys,
        )?;
        let eps: f64 = run.get("eps", 0.05)?;
        let res: usize = run.get("resolution", 201)?;
        let range = match run.list("range", vec![-3.0, 3.0])?.as_slice() {
            &[lo, hi] => (lo, hi),
            _ => return Err(Error::Config("range: expected lo,hi".into())),
        };
        let line = emit_meps_slice_2d([((0, 0), 1.0), ((0, 1), 2.0)], [(1, 0), (1, 1)], range, res, eps)?;
        run.write("meps_line.csv", &slice_csv(&line))?;
        let hyperbola = emit_meps_slice_2d([((0, 0), 1.0), ((1, 1), 2.0)], [(0, 1), (1, 0)], range, res, eps)?;
        run.write("meps_hyperbola.csv", &slice_csv(&hyperbola))?;
        let surface = emit_meps_surface_3d(run.get("a11", 1.0)?, range, res.min(101))?;
        run.write("meps_surface.csv", &surface_csv(&surface))?;

        let a0 = preset("2x2-first")?.center;
        let seed: u64 = run.get("seed", 0)?;
        let scales = run.list("sweep_scales", vec![0.04, 0.02, 0.01, 0.005, 0.0025])?;
        let rows = quadratic_error_sweep(&a0, &scales, run.get("sweep_samples", 20_000)?, seed)?;
        run.write("analytic_sweep.csv", &sweep_csv(&rows))?;
        run.write(
            "analytic_net.json",
            &json_text(&to_checkpoint_json(&build_two_layer(&a0)?))?,
        )?;
        run.finish(Some(seed))
    }
}

#[derive(Args, Debug)]
pub struct Bench {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    checkpoint: Option<String>,
    /// Batch sizes, comma separated.
    #[arg(long)]
    batches: Option<String>,
    /// Inputs pushed through per batch size; `seconds` is the total.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl Bench {
    pub fn run(&self, out: &Path) -> Result<()> {
        let mut run = Run::start(
            "bench",
            out,
            self.config.config.as_deref(),
            overrides!(self; checkpoint, batches, samples, seed),
            &["checkpoint", "batches", "samples", "seed"],
        )?;
        let spec = run.string("checkpoint", BUNDLED);
        let model = load_model(&spec)?;
        let name = Path::new(&spec)
            .file_stem()
            .map_or(spec.clone(), |s| s.to_string_lossy().into_owned());
        let samples: usize = run.get("samples", 10_000)?;
        let seed: u64 = run.get("seed", 0)?;
        let mut rng = invlab::exec::stream_rng(seed, 0);
        let inputs: Vec<f64> = (0..samples * model.input_dim())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let mut csv = String::from("model,batch,seconds\n");
        for batch in run.list("batches", vec![1usize, 100])? {
            if batch == 0 {
                return Err(Error::Config("batch sizes must be >= 1".into()));
            }
            let n_batches = samples.div_ceil(batch).max(1);
            let started = Instant::now();
            let mut sink = 0.0;
            for b in 0..n_batches {
                let lo = (b * batch).min(samples);
                let hi = ((b + 1) * batch).min(samples);
                let xs = &inputs[lo * model.input_dim()..hi * model.input_dim()];
                sink += forward_batch(&model, xs, hi - lo).iter().sum::<f64>();
            }
            let seconds = started.elapsed().as_secs_f64();
            std::hint::black_box(sink);
            csv.push_str(&format!("{name},{batch},{seconds:.6e}\n"));
        }
        run.write("bench.csv", &csv)?;
        println!("{csv}(timings depend on hardware; not comparable across machines)");
        run.finish(Some(seed))
    }
}

/// Layer-at-a-time forward pass over `batch` row-major inputs.
fn forward_batch(model: &MlpModel, xs: &[f64], batch: usize) -> Vec<f64> {
    let mut cur = xs.to_vec();
    let last = model.layers.len() - 1;
    for (li, l) in model.layers.iter().enumerate() {
        let mut next = vec![0.0; batch * l.out_dim];
        for r in 0..l.out_dim {
            let row = l.row(r);
            for b in 0..batch {
                let x = &cur[b * l.in_dim..(b + 1) * l.in_dim];
                let v = l.bias[r] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
                next[b * l.out_dim + r] = if li < last { v.max(0.0) } else { v };
            }
        }
        cur = next;
    }
    cur
}
