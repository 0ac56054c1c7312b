//! Stage orchestration: split, gene selection, oversampling, PCA, phase
//! scaling, kernel estimation, SVM training and evaluation. Each stage is a
//! library call; [`run_full`] and friends chain them and write artifacts.
//!
//! Test labels are wrapped in [`HeldOutLabels`], which only [`evaluate`]
//! can read, so nothing upstream of the metrics stage can see them.

pub mod artifacts;
pub mod config;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use serde::Serialize;

use crate::classifier::{decision_function, labels_from_scores, rbf_kernel_matrix, smo_train, KernelMatrix, SvmModel};
use crate::data_io::{load_csv_with, stratified_split, Label, LabeledDataset, PhaseScaler};
use crate::error::{Error, Result};
use crate::metrics::{confusion, roc_auc, scores_from_confusion, ConfusionMatrix, Roc, Scores};
use crate::optimizer::{run_bhho, BhhoResult, FeatureMask};
use crate::quantum::{cross_kernel_matrix, kernel_matrix, FeatureMapKind, KernelMode};
use crate::reduction::{pca_fit, PcaModel};
use crate::sampling::{smote_oversample, SmoteConfig};

pub use config::{PipelineConfig, QkMode, SmoteTargets, StageOrder, DEFAULT_SEED};

/// Test-partition labels. Only [`evaluate`] reads the values.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldOutLabels(Vec<Label>);

impl HeldOutLabels {
    pub fn new(labels: Vec<Label>) -> Self {
        Self(labels)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Seeded train/test partition of the input data.
#[derive(Debug, Clone)]
pub struct Partition {
    pub train: LabeledDataset,
    pub train_ids: Vec<usize>,
    pub test_features: Array2<f64>,
    pub test_ids: Vec<usize>,
    pub test_labels: HeldOutLabels,
}

pub fn load_data(cfg: &PipelineConfig) -> Result<LabeledDataset> {
    let path = cfg
        .data_path
        .as_deref()
        .ok_or_else(|| Error::config("no input data (set data.path or --data)"))?;
    load_csv_with(path, &cfg.csv_options()).map_err(|e| e.in_stage("load"))
}

pub fn partition(ds: &LabeledDataset, cfg: &PipelineConfig) -> Result<Partition> {
    let s = stratified_split(ds, &cfg.split_spec()).map_err(|e| e.in_stage("split"))?;
    Ok(Partition {
        train: s.train,
        train_ids: s.train_indices,
        test_features: s.test.features().clone(),
        test_ids: s.test_indices,
        test_labels: HeldOutLabels(s.test.labels().to_vec()),
    })
}

/// BHHO over the genes of the training partition.
pub fn select_genes(train: &LabeledDataset, cfg: &PipelineConfig) -> Result<BhhoResult> {
    run_bhho(train, &cfg.hho_params(train.n_genes()), &cfg.fitness_config(), cfg.transfer).map_err(|e| e.in_stage("select"))
}

/// Mask for a run: all genes, a configured mask file, or a fresh BHHO search.
pub fn resolve_mask(train: &LabeledDataset, cfg: &PipelineConfig, use_selection: bool) -> Result<(FeatureMask, Option<BhhoResult>)> {
    if !use_selection {
        return Ok((FeatureMask::all(train.n_genes()), None));
    }
    if let Some(path) = &cfg.mask_path {
        let mask = artifacts::parse_mask(&artifacts::read_text(path)?)?;
        check_mask(&mask, train.n_genes())?;
        return Ok((mask, None));
    }
    let res = select_genes(train, cfg)?;
    Ok((res.best_mask.clone(), Some(res)))
}

fn check_mask(mask: &FeatureMask, n_genes: usize) -> Result<()> {
    if mask.len() != n_genes {
        return Err(Error::data(format!("mask has {} entries for {n_genes} genes", mask.len())));
    }
    if mask.selected_count() == 0 {
        return Err(Error::data("mask selects no genes"));
    }
    Ok(())
}

/// Kernel-ready data: oversampled, projected to `pca.k` components and
/// phase-scaled, with every fitted transform learned from training rows.
#[derive(Debug, Clone)]
pub struct Reduced {
    pub mask: FeatureMask,
    pub pca: PcaModel,
    pub scaler: PhaseScaler,
    pub train: LabeledDataset,
    pub train_ids: Vec<String>,
    pub test_features: Array2<f64>,
    pub test_ids: Vec<String>,
}

fn oversample(train: &LabeledDataset, cfg: &PipelineConfig) -> Result<LabeledDataset> {
    let smote = match &cfg.smote_targets {
        SmoteTargets::None => return Ok(train.clone()),
        SmoteTargets::Balanced => SmoteConfig::balanced(train, cfg.smote_k, cfg.smote_seed())?,
        SmoteTargets::Explicit(t) => SmoteConfig::new(cfg.smote_k, t.clone(), cfg.smote_seed())?,
    };
    smote_oversample(train, &smote)
}

pub fn reduce(part: &Partition, mask: &FeatureMask, cfg: &PipelineConfig) -> Result<Reduced> {
    check_mask(mask, part.train.n_genes()).map_err(|e| e.in_stage("reduce"))?;
    let genes = mask.selected_indices();
    if genes.len() < cfg.pca_k {
        return Err(Error::data(format!(
            "{} genes selected but pca.k = {}; lower pca.k or widen the selection",
            genes.len(),
            cfg.pca_k
        ))
        .in_stage("reduce"));
    }
    let train = part.train.select_genes(&genes);
    let test = part.test_features.select(ndarray::Axis(1), &genes);

    let (pca, train_red, test_red) = match cfg.order {
        StageOrder::SmoteThenPca => {
            let over = oversample(&train, cfg).map_err(|e| e.in_stage("smote"))?;
            let pca = pca_fit(over.features(), cfg.pca_k).map_err(|e| e.in_stage("pca"))?;
            let tr = over.with_features(pca.transform(over.features())?, Vec::new())?;
            let te = pca.transform(&test)?;
            (pca, tr, te)
        }
        StageOrder::PcaThenSmote => {
            let pca = pca_fit(train.features(), cfg.pca_k).map_err(|e| e.in_stage("pca"))?;
            let tr = train.with_features(pca.transform(train.features())?, Vec::new())?;
            let over = oversample(&tr, cfg).map_err(|e| e.in_stage("smote"))?;
            let te = pca.transform(&test)?;
            (pca, over, te)
        }
    };

    let scaler = PhaseScaler::fit(train_red.features(), cfg.phase_lo, cfg.phase_hi).map_err(|e| e.in_stage("scale"))?;
    let train_scaled = train_red.with_features(scaler.apply(train_red.features())?, Vec::new())?;
    let test_scaled = scaler.apply(&test_red)?;

    let mut train_ids: Vec<String> = part.train_ids.iter().map(usize::to_string).collect();
    let n_syn = train_scaled.n_samples() - train_ids.len();
    train_ids.extend((0..n_syn).map(|s| format!("s{s}")));
    Ok(Reduced {
        mask: mask.clone(),
        pca,
        scaler,
        train: train_scaled,
        train_ids,
        test_features: test_scaled,
        test_ids: part.test_ids.iter().map(usize::to_string).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelChoice {
    Quantum(FeatureMapKind),
    Rbf,
}

impl KernelChoice {
    pub const ALL: [KernelChoice; 4] = [
        KernelChoice::Quantum(FeatureMapKind::Z),
        KernelChoice::Quantum(FeatureMapKind::Zz),
        KernelChoice::Quantum(FeatureMapKind::PauliZYy),
        KernelChoice::Rbf,
    ];

    pub fn name(self) -> String {
        match self {
            KernelChoice::Quantum(k) => k.to_string(),
            KernelChoice::Rbf => "rbf".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Kernels {
    pub train: KernelMatrix,
    /// Test × train.
    pub cross: Array2<f64>,
    /// Negative eigenvalues were clipped from the training kernel.
    pub repaired: bool,
}

pub fn compute_kernels(
    x_train: ArrayView2<f64>,
    x_test: ArrayView2<f64>,
    choice: KernelChoice,
    cfg: &PipelineConfig,
) -> Result<Kernels> {
    let stage = |e: Error| e.in_stage("kernel");
    match choice {
        KernelChoice::Quantum(kind) => {
            let spec = cfg.feature_map(kind)?;
            let mode = cfg.kernel_mode();
            let train = kernel_matrix(x_train, &spec, mode).map_err(stage)?;
            let cross = cross_kernel_matrix(x_test, x_train, &spec, mode).map_err(stage)?;
            let needs_repair = cfg.psd_repair && matches!(mode, KernelMode::Sampled(_)) && train.min_eigenvalue().map_err(stage)? < 0.0;
            let train = if needs_repair { train.repair_psd().map_err(stage)? } else { train };
            Ok(Kernels {
                train,
                cross,
                repaired: needs_repair,
            })
        }
        KernelChoice::Rbf => {
            let gamma = cfg.rbf_gamma.unwrap_or(1.0 / x_train.ncols() as f64);
            Ok(Kernels {
                train: KernelMatrix::new(rbf_kernel_matrix(x_train, x_train, gamma).map_err(stage)?).map_err(stage)?,
                cross: rbf_kernel_matrix(x_test, x_train, gamma).map_err(stage)?,
                repaired: false,
            })
        }
    }
}

pub fn train_svm(k: &KernelMatrix, labels: &[Label], cfg: &PipelineConfig) -> Result<SvmModel> {
    smo_train(k, labels, &cfg.smo_params()).map_err(|e| e.in_stage("train"))
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub decision: Vec<f64>,
    pub predictions: Vec<Label>,
    pub confusion: ConfusionMatrix,
    pub scores: Scores,
    pub roc: Roc,
}

/// The only consumer of held-out labels.
pub fn evaluate(model: &SvmModel, k_cross: ArrayView2<f64>, labels: &HeldOutLabels) -> Result<Evaluation> {
    let stage = |e: Error| e.in_stage("evaluate");
    let decision = decision_function(model, k_cross).map_err(stage)?;
    let predictions = labels_from_scores(&decision);
    let confusion = confusion(&labels.0, &predictions).map_err(stage)?;
    Ok(Evaluation {
        scores: scores_from_confusion(&confusion).map_err(stage)?,
        roc: roc_auc(&labels.0, &decision).map_err(stage)?,
        decision,
        predictions,
        confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionReport {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Contents of `metrics.json`. Every field is derivable from the stage
/// artifacts, so stage-by-stage and one-shot runs report identically.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub config_hash: String,
    pub use_selection: bool,
    pub kernel: String,
    pub kernel_mode: String,
    pub n_genes: usize,
    pub n_selected: usize,
    pub n_components: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub train_class_counts: BTreeMap<String, usize>,
    pub support_vectors: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub f1: f64,
    pub fpr: f64,
    pub auc: f64,
    pub degenerate: Vec<String>,
    pub confusion: ConfusionReport,
}

impl MetricsReport {
    fn build(
        cfg: &PipelineConfig,
        use_selection: bool,
        kernel: KernelChoice,
        mask: &FeatureMask,
        n_components: usize,
        model: &SvmModel,
        ev: &Evaluation,
    ) -> Self {
        let mut counts = BTreeMap::new();
        for &l in &model.train_labels {
            *counts.entry(if l > 0 { "positive" } else { "negative" }.to_string()).or_insert(0) += 1;
        }
        let s = &ev.scores;
        Self {
            config_hash: cfg.hash(),
            use_selection,
            kernel: kernel.name(),
            kernel_mode: match kernel {
                KernelChoice::Rbf => "classical".into(),
                KernelChoice::Quantum(_) => cfg.qk_mode.to_string(),
            },
            n_genes: mask.len(),
            n_selected: mask.selected_count(),
            n_components,
            n_train: model.n_train(),
            n_test: ev.predictions.len(),
            train_class_counts: counts,
            support_vectors: model.support_indices.len(),
            accuracy: s.accuracy,
            precision: s.precision,
            recall: s.recall,
            specificity: s.specificity,
            f1: s.f1,
            fpr: s.fpr,
            auc: ev.roc.auc,
            degenerate: s.degenerate.iter().map(|d| d.to_string()).collect(),
            confusion: ConfusionReport {
                tp: ev.confusion.tp,
                tn: ev.confusion.tn,
                fp: ev.confusion.fp,
                fn_: ev.confusion.fn_,
            },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Everything produced by one end-to-end run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub selection: Option<BhhoResult>,
    pub reduced: Reduced,
    pub kernels: Kernels,
    pub model: SvmModel,
    pub evaluation: Evaluation,
    pub report: MetricsReport,
}

/// One end-to-end run on in-memory data with the configured quantum kernel.
pub fn run_full_on(ds: &LabeledDataset, cfg: &PipelineConfig, use_selection: bool) -> Result<RunOutcome> {
    cfg.validate()?;
    let part = partition(ds, cfg)?;
    let (mask, selection) = resolve_mask(&part.train, cfg, use_selection)?;
    let reduced = reduce(&part, &mask, cfg)?;
    let choice = KernelChoice::Quantum(cfg.qk_map);
    let kernels = compute_kernels(reduced.train.features().view(), reduced.test_features.view(), choice, cfg)?;
    let model = train_svm(&kernels.train, reduced.train.labels(), cfg)?;
    let evaluation = evaluate(&model, kernels.cross.view(), &part.test_labels)?;
    let report = MetricsReport::build(cfg, use_selection, choice, &mask, cfg.pca_k, &model, &evaluation);
    Ok(RunOutcome {
        selection,
        reduced,
        kernels,
        model,
        evaluation,
        report,
    })
}

fn write_selection(dir: &Path, hash: &str, res: &BhhoResult, gene_names: &[String]) -> Result<()> {
    artifacts::write_artifact(dir, artifacts::MASK, hash, &artifacts::mask_body(&res.best_mask, gene_names))?;
    artifacts::write_artifact(dir, artifacts::CONVERGENCE, hash, &artifacts::convergence_body(&res.convergence))?;
    Ok(())
}

fn write_reduced(dir: &Path, hash: &str, r: &Reduced) -> Result<()> {
    artifacts::write_artifact(dir, artifacts::PCA, hash, &r.pca.to_csv_string())?;
    artifacts::write_artifact(
        dir,
        artifacts::REDUCED_TRAIN,
        hash,
        &artifacts::reduced_body(&r.train_ids, Some(r.train.labels()), r.train.features().view()),
    )?;
    artifacts::write_artifact(
        dir,
        artifacts::REDUCED_TEST,
        hash,
        &artifacts::reduced_body(&r.test_ids, None, r.test_features.view()),
    )?;
    Ok(())
}

fn write_kernels(dir: &Path, hash: &str, k: &Kernels, train_ids: &[String], test_ids: &[String]) -> Result<()> {
    artifacts::write_artifact(
        dir,
        artifacts::KERNEL_TRAIN,
        hash,
        &artifacts::kernel_body(k.train.values().view(), train_ids, train_ids),
    )?;
    artifacts::write_artifact(
        dir,
        artifacts::KERNEL_CROSS,
        hash,
        &artifacts::kernel_body(k.cross.view(), test_ids, train_ids),
    )?;
    Ok(())
}

fn write_evaluation(dir: &Path, hash: &str, report: &MetricsReport, ev: &Evaluation) -> Result<()> {
    artifacts::write_raw(dir, artifacts::METRICS, &report.to_json())?;
    artifacts::write_artifact(dir, artifacts::ROC, hash, &artifacts::roc_body(&ev.roc.curve))?;
    Ok(())
}

/// Select genes on the training partition; writes `mask.csv` and
/// `convergence.csv`.
pub fn run_select(cfg: &PipelineConfig) -> Result<BhhoResult> {
    cfg.validate()?;
    let ds = load_data(cfg)?;
    let part = partition(&ds, cfg)?;
    let res = select_genes(&part.train, cfg)?;
    write_selection(&cfg.output_dir, &cfg.hash(), &res, ds.gene_names())?;
    Ok(res)
}

/// Load, run every stage and write all artifacts to `output.dir`.
pub fn run_full(cfg: &PipelineConfig, use_selection: bool) -> Result<RunOutcome> {
    let ds = load_data(cfg)?;
    let out = run_full_on(&ds, cfg, use_selection)?;
    let (dir, hash) = (&cfg.output_dir, cfg.hash());
    if let Some(sel) = &out.selection {
        write_selection(dir, &hash, sel, ds.gene_names())?;
    }
    write_reduced(dir, &hash, &out.reduced)?;
    write_kernels(dir, &hash, &out.kernels, &out.reduced.train_ids, &out.reduced.test_ids)?;
    artifacts::write_artifact(dir, artifacts::MODEL, &hash, &out.model.to_csv_string())?;
    write_evaluation(dir, &hash, &out.report, &out.evaluation)?;
    Ok(out)
}

/// `reduce` stage from files: uses `mask.csv` from the output directory (or
/// `select.mask`) when selection is on.
pub fn run_reduce(cfg: &PipelineConfig, use_selection: bool) -> Result<Reduced> {
    cfg.validate()?;
    let ds = load_data(cfg)?;
    let part = partition(&ds, cfg)?;
    let mask = stage_mask(cfg, use_selection, part.train.n_genes())?;
    let r = reduce(&part, &mask, cfg)?;
    write_reduced(&cfg.output_dir, &cfg.hash(), &r)?;
    Ok(r)
}

fn stage_mask(cfg: &PipelineConfig, use_selection: bool, n_genes: usize) -> Result<FeatureMask> {
    if !use_selection {
        return Ok(FeatureMask::all(n_genes));
    }
    let path = cfg.mask_path.clone().unwrap_or_else(|| cfg.output_dir.join(artifacts::MASK));
    if !path.exists() {
        return Err(Error::data(format!("{} not found; run `select` first", path.display())));
    }
    let mask = artifacts::parse_mask(&artifacts::read_text(&path)?)?;
    check_mask(&mask, n_genes)?;
    Ok(mask)
}

fn read_stage(cfg: &PipelineConfig, name: &str) -> Result<String> {
    let path = cfg.output_dir.join(name);
    if !path.exists() {
        return Err(Error::data(format!("{} not found; run the preceding stage first", path.display())));
    }
    artifacts::read_text(&path)
}

/// `kernel` stage from `reduced_train.csv` and `reduced_test.csv`.
pub fn run_kernel(cfg: &PipelineConfig) -> Result<Kernels> {
    cfg.validate()?;
    let train = artifacts::parse_reduced(&read_stage(cfg, artifacts::REDUCED_TRAIN)?, true)?;
    let test = artifacts::parse_reduced(&read_stage(cfg, artifacts::REDUCED_TEST)?, false)?;
    let k = compute_kernels(train.features.view(), test.features.view(), KernelChoice::Quantum(cfg.qk_map), cfg)?;
    write_kernels(&cfg.output_dir, &cfg.hash(), &k, &train.ids, &test.ids)?;
    Ok(k)
}

/// `train` stage from `kernel_train.csv` and the reduced training labels.
pub fn run_train(cfg: &PipelineConfig) -> Result<SvmModel> {
    cfg.validate()?;
    let train = artifacts::parse_reduced(&read_stage(cfg, artifacts::REDUCED_TRAIN)?, true)?;
    let k = KernelMatrix::new(artifacts::parse_kernel(&read_stage(cfg, artifacts::KERNEL_TRAIN)?)?)?;
    let labels = train.labels.unwrap_or_default();
    let model = train_svm(&k, &labels, cfg)?;
    artifacts::write_artifact(&cfg.output_dir, artifacts::MODEL, &cfg.hash(), &model.to_csv_string())?;
    Ok(model)
}

/// `evaluate` stage: scores `model.csv` on `kernel_cross.csv` against the
/// held-out labels of the configured split.
pub fn run_evaluate(cfg: &PipelineConfig, use_selection: bool) -> Result<MetricsReport> {
    cfg.validate()?;
    let ds = load_data(cfg)?;
    let part = partition(&ds, cfg)?;
    let mask = stage_mask(cfg, use_selection, part.train.n_genes())?;
    let model = SvmModel::from_csv_str(&read_stage(cfg, artifacts::MODEL)?)?;
    let cross = artifacts::parse_kernel(&read_stage(cfg, artifacts::KERNEL_CROSS)?)?;
    let ev = evaluate(&model, cross.view(), &part.test_labels)?;
    let report = MetricsReport::build(cfg, use_selection, KernelChoice::Quantum(cfg.qk_map), &mask, cfg.pca_k, &model, &ev);
    write_evaluation(&cfg.output_dir, &cfg.hash(), &report, &ev)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub kernel: String,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: f64,
    /// Hash of the reduced matrices this kernel consumed.
    pub input_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub rows: Vec<CompareRow>,
    /// Hash of the shared reduced data, taken once before any kernel runs.
    pub input_hash: String,
}

impl CompareReport {
    pub fn csv_body(&self) -> String {
        let mut s = format!("# input_hash={}\nkernel,accuracy,precision,recall,f1,auc\n", self.input_hash);
        for r in &self.rows {
            s.push_str(&format!("{},{},{},{},{},{}\n", r.kernel, r.accuracy, r.precision, r.recall, r.f1, r.auc));
        }
        s
    }
}

/// One shared split, mask and reduction; one SVM per kernel in
/// [`KernelChoice::ALL`].
pub fn run_compare_kernels_on(ds: &LabeledDataset, cfg: &PipelineConfig, use_selection: bool) -> Result<CompareReport> {
    cfg.validate()?;
    let part = partition(ds, cfg)?;
    let (mask, _) = resolve_mask(&part.train, cfg, use_selection)?;
    let reduced = reduce(&part, &mask, cfg)?;
    let (xtr, xte) = (reduced.train.features().view(), reduced.test_features.view());
    let input_hash = artifacts::matrix_hash(&[xtr, xte]);
    let mut rows = Vec::new();
    for choice in KernelChoice::ALL {
        let (a, b) = (reduced.train.features().view(), reduced.test_features.view());
        let consumed = artifacts::matrix_hash(&[a, b]);
        let k = compute_kernels(a, b, choice, cfg)?;
        let model = train_svm(&k.train, reduced.train.labels(), cfg)?;
        let ev = evaluate(&model, k.cross.view(), &part.test_labels)?;
        rows.push(CompareRow {
            kernel: choice.name(),
            accuracy: ev.scores.accuracy,
            precision: ev.scores.precision,
            recall: ev.scores.recall,
            f1: ev.scores.f1,
            auc: ev.roc.auc,
            input_hash: consumed,
        });
    }
    Ok(CompareReport { rows, input_hash })
}

/// Writes `compare.csv`.
pub fn run_compare_kernels(cfg: &PipelineConfig, use_selection: bool) -> Result<CompareReport> {
    let ds = load_data(cfg)?;
    let report = run_compare_kernels_on(&ds, cfg, use_selection)?;
    artifacts::write_artifact(&cfg.output_dir, artifacts::COMPARE, &cfg.hash(), &report.csv_body())?;
    Ok(report)
}
