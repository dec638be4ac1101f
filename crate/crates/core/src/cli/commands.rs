use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use log::info;

use super::config::{Classifier, DapPrior, RunConfig, SideInfo};
use crate::dataio::{
    load_matrix_auto, load_model, save_matrix, save_model, synth_generate, DatasetBundle, MatrixFormat,
    ModelArtifact, SynthParams,
};
use crate::evaluation::{attribute_report, roc_curve, MetricReport};
use crate::hypergraph::{build_attribute_hypergraph, default_bandwidth, distinct_classes};
use crate::kernel::{gram, kernel_objective, kernel_stationarity_residual, train_kernel, KernelFamily, KernelSpec};
use crate::laplacian::{class_hypergraph_laplacian, combine, pairwise_class_graph_laplacian, Laplacian};
use crate::predictor::{attribute_laplacian, objective_value, shift_labels, stationarity_residual, train, FeatureMatrix, Objective};
use crate::zeroshot::{
    build_templates_from_samples, dap_classify, dap_priors, nshot_augment, sigmoid_normalize, subsample,
    template_classify, ClassDecision, ClassTemplateSet, Split,
};
use crate::{Error, Matrix, Result};

pub const MODEL_FILE: &str = "model.hapm";
pub const TRAIN_LOG_FILE: &str = "train_log.txt";
pub const REPORT_FILE: &str = "report.txt";
pub const DECISIONS_FILE: &str = "decisions.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const SIGNS_FILE: &str = "signs.csv";
pub const ROC_FILE: &str = "roc.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: ModelArtifact,
    pub objective: Objective,
    pub residual: f64,
    pub mu: f64,
}

impl TrainOutcome {
    pub fn log_text(&self, cfg: &RunConfig, x: &FeatureMatrix) -> String {
        let mut out = String::new();
        let m = self.model.coefficients().ncols();
        writeln!(out, "mode = {}", cfg.mode.name()).unwrap();
        writeln!(out, "samples = {}", x.n_samples()).unwrap();
        writeln!(out, "dim = {}", x.dim()).unwrap();
        writeln!(out, "attributes = {m}").unwrap();
        writeln!(out, "mu = {}", self.mu).unwrap();
        writeln!(out, "lambda = {}", cfg.lambda).unwrap();
        writeln!(out, "eta = {}", cfg.eta).unwrap();
        if cfg.mode.side_information().is_some() {
            writeln!(out, "gamma = {}", cfg.gamma).unwrap();
        }
        if let ModelArtifact::Kernel(k) = &self.model {
            writeln!(out, "kernel = {}", k.spec.family).unwrap();
            if k.spec.family != KernelFamily::Linear {
                writeln!(out, "kernel_scale = {}", k.spec.scale).unwrap();
            }
        }
        writeln!(out, "objective = {}", self.objective.total()).unwrap();
        writeln!(out, "objective_relation = {}", self.objective.relation).unwrap();
        writeln!(out, "objective_fit = {}", self.objective.fit).unwrap();
        writeln!(out, "objective_ridge = {}", self.objective.ridge).unwrap();
        writeln!(out, "stationarity_residual = {:e}", self.residual).unwrap();
        out
    }
}

/// Train the configured variant on every sample of `bundle`.
pub fn train_bundle(cfg: &RunConfig, bundle: &DatasetBundle) -> Result<TrainOutcome> {
    let side = cfg.mode.side_information();
    let class_labels = match side {
        Some(_) => Some(bundle.require_class_labels().map_err(|_| {
            Error::Config(format!("mode {} requires class labels (classes.csv)", cfg.mode.name()))
        })?),
        None => None,
    };
    let started = Instant::now();
    let x = &bundle.features;
    let h = build_attribute_hypergraph(bundle.per_sample_attributes()?.matrix())?;
    let mu = cfg.mu.unwrap_or_else(|| default_bandwidth(x, cfg.seed));
    let l_h = attribute_laplacian(x, &h, mu)?;
    let l_side = match (side, class_labels) {
        (Some(SideInfo::ClassHypergraph), Some(labels)) => Some(class_hypergraph_laplacian(labels, x, mu)?),
        (Some(SideInfo::ClassGraph), Some(labels)) => Some(pairwise_class_graph_laplacian(x, labels, mu)?),
        _ => None,
    };
    let extras: Vec<(&Laplacian, f64)> = l_side.iter().map(|l| (l, cfg.gamma)).collect();
    let l = combine(&l_h, &extras)?;
    let gammas: Vec<f64> = extras.iter().map(|(_, g)| *g).collect();
    let y = shift_labels(&h);
    info!("laplacian ready after {:.3} s", started.elapsed().as_secs_f64());

    let outcome = if cfg.mode.is_kernel() {
        let spec = match cfg.kernel {
            KernelFamily::Linear => KernelSpec::linear(),
            family => KernelSpec {
                family,
                scale: cfg.kernel_scale.unwrap_or_else(|| default_bandwidth(x, cfg.seed)),
            },
        };
        let k = gram(x, spec)?;
        let mut model = train_kernel(&k, &y, &l, cfg.lambda, cfg.eta)?;
        model.hyper.gammas = gammas;
        let objective = kernel_objective(&model.b, &k, &y, &l, cfg.lambda, cfg.eta)?;
        let residual = kernel_stationarity_residual(&model.b, &k, &y, &l, cfg.lambda, cfg.eta)?;
        TrainOutcome {
            model: ModelArtifact::Kernel(model),
            objective,
            residual,
            mu,
        }
    } else {
        let mut model = train(x, &y, &l, cfg.lambda, cfg.eta)?;
        model.hyper.gammas = gammas;
        let objective = objective_value(&model.b, x, &y, &l, cfg.lambda, cfg.eta)?;
        let residual = stationarity_residual(&model.b, x, &y, &l, cfg.lambda, cfg.eta)?;
        TrainOutcome {
            model: ModelArtifact::Linear(model),
            objective,
            residual,
            mu,
        }
    };
    info!(
        "trained {} on {} samples in {:.3} s (residual {:.2e})",
        cfg.mode.name(),
        x.n_samples(),
        started.elapsed().as_secs_f64(),
        outcome.residual
    );
    Ok(outcome)
}

pub fn cmd_train(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out_dir()?;
    let bundle = DatasetBundle::load(cfg.data_dir()?)?;
    let all: Vec<usize> = (0..bundle.n_samples()).collect();
    let bundle = bundle.subset(&subsample(&all, cfg.subsample_frac, cfg.seed)?)?;
    let outcome = train_bundle(cfg, &bundle)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_model(&out.join(MODEL_FILE), &outcome.model)?;
    write_file(out, TRAIN_LOG_FILE, &outcome.log_text(cfg, &bundle.features))
}

pub fn cmd_predict(model_path: &Path, features_path: &Path, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let z = FeatureMatrix::from_sample_rows(&load_matrix_auto(features_path)?)?;
    let started = Instant::now();
    let scores = model.predict(&z)?;
    info!("predicted {} samples in {:.4} s", z.n_samples(), started.elapsed().as_secs_f64());
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    save_matrix(&out.join(SCORES_FILE), &scores.scores, MatrixFormat::Csv)?;
    save_matrix(&out.join(SIGNS_FILE), &scores.signs, MatrixFormat::Csv)
}

/// `attribute,threshold,false_positive_rate,true_positive_rate` rows for
/// every attribute with a defined ROC.
pub fn roc_table(scores: &Matrix, labels: &Matrix) -> Result<String> {
    let mut out = String::from("# attribute,threshold,false_positive_rate,true_positive_rate\n");
    for j in 0..scores.ncols() {
        let s: Vec<f64> = scores.column(j).iter().copied().collect();
        let l: Vec<bool> = labels.column(j).iter().map(|&v| v > 0.0).collect();
        match roc_curve(&s, &l) {
            Ok(points) => {
                for p in points {
                    writeln!(out, "{j},{},{},{}", p.threshold, p.false_positive_rate, p.true_positive_rate).unwrap();
                }
            }
            Err(Error::DegenerateLabels) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

pub fn cmd_eval(model_path: &Path, data: &Path, out: &Path) -> Result<()> {
    let model = load_model(model_path)?;
    let bundle = DatasetBundle::load(data)?;
    let labels = bundle.per_sample_attributes()?;
    let scores = model.predict(&bundle.features)?;
    let report = attribute_report(&scores.scores, labels.matrix())?;
    write_file(out, REPORT_FILE, &report.to_text())?;
    write_file(out, ROC_FILE, &roc_table(&scores.scores, labels.matrix())?)
}

/// Training and unseen classes for a zero-shot run.
pub fn class_split(cfg: &RunConfig, bundle: &DatasetBundle) -> Result<(Vec<usize>, Vec<usize>)> {
    let labels = bundle.require_class_labels()?;
    let mut test = cfg
        .test_classes
        .clone()
        .or_else(|| bundle.test_classes.clone())
        .ok_or_else(|| Error::Config("no test classes given (--test-classes or test_classes.csv)".into()))?;
    test.sort_unstable();
    test.dedup();
    let present = distinct_classes(labels);
    let mut train = match &cfg.train_classes {
        Some(t) => t.clone(),
        None => present.iter().copied().filter(|c| !test.contains(c)).collect(),
    };
    train.sort_unstable();
    train.dedup();
    let overlap: Vec<usize> = train.iter().copied().filter(|c| test.contains(c)).collect();
    if !overlap.is_empty() {
        return Err(Error::Overlap(overlap));
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Config("both training and test classes must be non-empty".into()));
    }
    if let Some(sig) = &bundle.class_signatures {
        if let Some(&bad) = train.iter().chain(&test).find(|&&c| c >= sig.nrows()) {
            return Err(Error::DimensionMismatch {
                context: "class id beyond signature rows",
                expected: sig.nrows(),
                found: bad,
            });
        }
    }
    Ok((train, test))
}

/// Binary class-level attribute descriptions: signatures when supplied,
/// otherwise per-class means of the per-sample labels.
fn class_templates(bundle: &DatasetBundle, classes: &[usize]) -> Result<ClassTemplateSet> {
    match &bundle.class_signatures {
        Some(sig) => ClassTemplateSet::from_signatures(&sig.select_rows(classes), classes.to_vec()),
        None => {
            let h = bundle.per_sample_attributes()?;
            build_templates_from_samples(h.matrix(), bundle.require_class_labels()?, classes)
        }
    }
}

fn binarize(m: &Matrix) -> Matrix {
    m.map(|v| if v >= 0.5 { 1.0 } else { 0.0 })
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub split: Split,
    pub train: TrainOutcome,
    pub report: MetricReport,
    pub decision: ClassDecision,
    pub truth: Vec<usize>,
}

impl ExperimentOutcome {
    pub fn report_text(&self, cfg: &RunConfig) -> String {
        let classifier = match cfg.classifier {
            Classifier::Template => "template",
            Classifier::Dap => "dap",
        };
        let mut out = String::new();
        writeln!(out, "mode = {}", cfg.mode.name()).unwrap();
        writeln!(out, "classifier = {classifier}").unwrap();
        writeln!(out, "rho = {}", cfg.rho).unwrap();
        writeln!(out, "train_samples = {}", self.split.train.len()).unwrap();
        writeln!(out, "test_samples = {}", self.split.test.len()).unwrap();
        out.push_str(&self.report.to_text());
        out
    }

    pub fn decisions_csv(&self) -> String {
        let mut out = String::from("# sample,true_class,predicted_class\n");
        for ((i, t), p) in self.split.test.iter().zip(&self.truth).zip(&self.decision.predicted) {
            writeln!(out, "{i},{t},{p}").unwrap();
        }
        out
    }
}

/// Zero-shot (`n_shot = 0`) or N-shot experiment: train on the training
/// classes (plus `n_shot` samples per unseen class), classify the
/// remaining unseen-class samples among the unseen classes.
pub fn run_experiment(cfg: &RunConfig, bundle: &DatasetBundle, n_shot: usize) -> Result<ExperimentOutcome> {
    let (train_classes, test_classes) = class_split(cfg, bundle)?;
    let labels = bundle.require_class_labels()?;
    let pick = |classes: &[usize]| -> Vec<usize> { (0..labels.len()).filter(|&i| classes.contains(&labels[i])).collect() };
    let split = Split {
        train: subsample(&pick(&train_classes), cfg.subsample_frac, cfg.seed)?,
        test: subsample(&pick(&test_classes), cfg.subsample_frac, cfg.seed.wrapping_add(1))?,
    };
    let split = nshot_augment(&split, labels, &test_classes, n_shot, cfg.seed)?;
    if split.test.is_empty() {
        return Err(Error::EmptyInput("test samples"));
    }

    let trained = train_bundle(cfg, &bundle.subset(&split.train)?)?;
    let test = bundle.subset(&split.test)?;
    let scores = trained.model.predict(&test.features)?;
    let r = sigmoid_normalize(&scores.scores, cfg.rho)?.values;
    let templates = class_templates(bundle, &test_classes)?;
    let decision = match cfg.classifier {
        Classifier::Template => template_classify(&r, &templates)?,
        Classifier::Dap => {
            let priors = match cfg.dap_prior {
                DapPrior::Empirical => dap_priors(&binarize(&class_templates(bundle, &train_classes)?.templates)),
                DapPrior::Uniform => vec![0.5; templates.templates.ncols()],
            };
            dap_classify(&r, &binarize(&templates.templates), &test_classes, &priors)?
        }
    };
    let truth = test.require_class_labels()?.to_vec();
    let report = attribute_report(&scores.scores, test.per_sample_attributes()?.matrix())?
        .with_classification(&decision.predicted, &truth)?;
    Ok(ExperimentOutcome {
        split,
        train: trained,
        report,
        decision,
        truth,
    })
}

pub fn cmd_experiment(cfg: &RunConfig, n_shot: usize) -> Result<()> {
    let out = cfg.out_dir()?;
    let bundle = DatasetBundle::load(cfg.data_dir()?)?;
    let outcome = run_experiment(cfg, &bundle, n_shot)?;
    write_file(out, REPORT_FILE, &outcome.report_text(cfg))?;
    write_file(out, DECISIONS_FILE, &outcome.decisions_csv())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Mu,
    Lambda,
    Eta,
    Gamma,
    Rho,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Mu => "mu",
            SweepParam::Lambda => "lambda",
            SweepParam::Eta => "eta",
            SweepParam::Gamma => "gamma",
            SweepParam::Rho => "rho",
        }
    }

    pub fn apply(self, cfg: &RunConfig, value: f64) -> RunConfig {
        let mut cfg = cfg.clone();
        match self {
            SweepParam::Mu => cfg.mu = Some(value),
            SweepParam::Lambda => cfg.lambda = value,
            SweepParam::Eta => cfg.eta = value,
            SweepParam::Gamma => cfg.gamma = value,
            SweepParam::Rho => cfg.rho = value,
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean_auc: Option<f64>,
    pub accuracy: f64,
    pub b_norm: f64,
}

fn sweep_point(cfg: &RunConfig, bundle: &DatasetBundle, value: f64) -> Result<SweepRow> {
    let outcome = run_experiment(cfg, bundle, cfg.n_shot)?;
    Ok(SweepRow {
        value,
        mean_auc: outcome.report.mean_auc,
        accuracy: outcome.report.class_averaged_accuracy.unwrap_or(f64::NAN),
        b_norm: outcome.train.model.coefficients().norm(),
    })
}

/// One experiment per grid value. Every configuration is validated before
/// the first run. With `parallel`, grid points run on scoped threads and
/// rows are still reported in grid order.
pub fn run_sweep(
    cfg: &RunConfig,
    bundle: &DatasetBundle,
    param: SweepParam,
    grid: &[f64],
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let configs: Vec<RunConfig> = grid.iter().map(|&v| param.apply(cfg, v)).collect();
    for c in &configs {
        c.validate()?;
    }
    if !parallel {
        return configs.iter().zip(grid).map(|(c, &v)| sweep_point(c, bundle, v)).collect();
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut rows = Vec::with_capacity(grid.len());
    for chunk in configs.iter().zip(grid).collect::<Vec<_>>().chunks(workers) {
        let results: Vec<Result<SweepRow>> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(c, &v)| s.spawn(move || sweep_point(c, bundle, v)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        });
        for r in results {
            rows.push(r?);
        }
    }
    Ok(rows)
}

pub fn sweep_csv(param: SweepParam, rows: &[SweepRow]) -> String {
    let mut out = format!("# {},mean_auc,zsl_accuracy,b_frobenius\n", param.name());
    for r in rows {
        writeln!(out, "{},{},{},{}", r.value, r.mean_auc.unwrap_or(f64::NAN), r.accuracy, r.b_norm).unwrap();
    }
    out
}

pub fn cmd_sweep(cfg: &RunConfig, param: SweepParam, grid: &[f64], parallel: bool) -> Result<()> {
    let out = cfg.out_dir()?;
    let bundle = DatasetBundle::load(cfg.data_dir()?)?;
    let rows = run_sweep(cfg, &bundle, param, grid, parallel)?;
    write_file(out, SWEEP_FILE, &sweep_csv(param, &rows))
}

pub fn cmd_synth(params: &SynthParams, out: &Path) -> Result<()> {
    let bundle = synth_generate(params)?;
    bundle.save(out)?;
    info!("wrote {} samples to {}", bundle.n_samples(), out.display());
    Ok(())
}

