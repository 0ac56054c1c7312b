//! Flat `key = value` run configuration with seeded stage derivation.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::classifier::SmoParams;
use crate::data_io::{CsvOptions, Label, LabelColumn, SplitSpec, NEGATIVE, POSITIVE};
use crate::error::{Error, Result};
use crate::optimizer::{EvaluatorKind, FitnessConfig, HhoParams, TransferKind, Validation};
use crate::quantum::{Entanglement, FeatureMapKind, FeatureMapSpec, KernelMode, ShotConfig};
use crate::rng::derive_seed;

pub const DEFAULT_SEED: u64 = 10_598;

/// Stage tags mixed into the master seed.
const SPLIT_TAG: u64 = 1;
const SMOTE_TAG: u64 = 2;
const HHO_TAG: u64 = 3;
const HOLDOUT_TAG: u64 = 4;

/// Where oversampling sits relative to PCA.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StageOrder {
    #[default]
    SmoteThenPca,
    PcaThenSmote,
}

impl FromStr for StageOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smote_pca" => Ok(StageOrder::SmoteThenPca),
            "pca_smote" => Ok(StageOrder::PcaThenSmote),
            other => Err(Error::config(format!("pipeline.order `{other}` (expected smote_pca or pca_smote)"))),
        }
    }
}

impl fmt::Display for StageOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageOrder::SmoteThenPca => "smote_pca",
            StageOrder::PcaThenSmote => "pca_smote",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QkMode {
    Exact,
    #[default]
    Sampled,
}

impl FromStr for QkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" | "statevector" => Ok(QkMode::Exact),
            "sampled" | "shots" => Ok(QkMode::Sampled),
            other => Err(Error::config(format!("qk.mode `{other}` (expected exact or sampled)"))),
        }
    }
}

impl fmt::Display for QkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QkMode::Exact => "exact",
            QkMode::Sampled => "sampled",
        })
    }
}

/// Per-class SMOTE targets. `Balanced` raises every class to the majority
/// count of the training partition; `None` disables oversampling.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SmoteTargets {
    #[default]
    Balanced,
    None,
    Explicit(BTreeMap<Label, usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub data_path: Option<PathBuf>,
    pub label_column: String,
    pub positive_label: String,
    pub ignore_columns: Vec<String>,
    /// Not part of the config hash.
    pub output_dir: PathBuf,
    pub seed: u64,

    pub split_fraction: f64,
    pub split_seed: Option<u64>,
    pub split_stratified: bool,

    pub use_selection: bool,
    pub mask_path: Option<PathBuf>,
    pub hho_hawks: usize,
    pub hho_iters: usize,
    pub hho_lb: f64,
    pub hho_ub: f64,
    pub hho_seed: Option<u64>,
    pub transfer: TransferKind,
    pub alpha: f64,
    pub evaluator: EvaluatorKind,
    pub validation: Validation,

    pub smote_k: usize,
    pub smote_targets: SmoteTargets,
    pub smote_seed: Option<u64>,

    pub pca_k: usize,
    pub order: StageOrder,
    pub phase_lo: f64,
    pub phase_hi: f64,

    pub qk_map: FeatureMapKind,
    pub qk_reps: usize,
    pub qk_entanglement: Entanglement,
    pub qk_mode: QkMode,
    pub qk_shots: usize,
    pub qk_seed: Option<u64>,

    pub svm_c: f64,
    pub svm_tol: f64,
    pub svm_max_passes: Option<usize>,
    pub psd_repair: bool,
    pub rbf_gamma: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            data_path: None,
            label_column: "label".into(),
            positive_label: "1".into(),
            ignore_columns: Vec::new(),
            output_dir: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            split_fraction: 0.25,
            split_seed: None,
            split_stratified: true,
            use_selection: true,
            mask_path: None,
            hho_hawks: 10,
            hho_iters: 100,
            hho_lb: -1.0,
            hho_ub: 1.0,
            hho_seed: None,
            transfer: TransferKind::S,
            alpha: 0.99,
            evaluator: EvaluatorKind::Knn { k: 5 },
            validation: Validation::default(),
            smote_k: 5,
            smote_targets: SmoteTargets::Balanced,
            smote_seed: None,
            pca_k: 20,
            order: StageOrder::SmoteThenPca,
            phase_lo: 0.0,
            phase_hi: PI,
            qk_map: FeatureMapKind::Zz,
            qk_reps: 3,
            qk_entanglement: Entanglement::Linear,
            qk_mode: QkMode::Sampled,
            qk_shots: 100,
            qk_seed: None,
            svm_c: 1.0,
            svm_tol: 1e-3,
            svm_max_passes: None,
            psd_repair: true,
            rbf_gamma: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(format!("invalid boolean `{value}` for `{key}`"))),
    }
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "auto" | "none" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_class(name: &str) -> Result<Label> {
    match name.to_ascii_lowercase().as_str() {
        "positive" | "+1" | "1" => Ok(POSITIVE),
        "negative" | "-1" => Ok(NEGATIVE),
        other => Err(Error::config(format!("unknown class `{other}` in smote.targets (positive or negative)"))),
    }
}

fn show_opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

impl PipelineConfig {
    /// Parse a config file body. `#` starts a comment line; keys may not repeat.
    pub fn from_kv_text(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", lineno + 1)))?;
            let key = key.trim();
            if let Some(prev) = seen.insert(key.to_string(), lineno + 1) {
                return Err(Error::config(format!(
                    "line {}: `{key}` already set on line {prev}",
                    lineno + 1
                )));
            }
            cfg.set(key, value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_text(&text)
    }

    /// Set one key; used for file lines and command-line overrides alike.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data.path" => self.data_path = Some(PathBuf::from(value)),
            "data.label_column" => self.label_column = value.to_string(),
            "data.positive_label" => self.positive_label = value.to_string(),
            "data.ignore_columns" => {
                self.ignore_columns = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            }
            "output.dir" => self.output_dir = PathBuf::from(value),
            "seed" => self.seed = parse(key, value)?,
            "split.test_fraction" => self.split_fraction = parse(key, value)?,
            "split.seed" => self.split_seed = parse_opt(key, value)?,
            "split.stratified" => self.split_stratified = parse_bool(key, value)?,
            "select.enabled" => self.use_selection = parse_bool(key, value)?,
            "select.mask" => self.mask_path = parse_opt::<String>(key, value)?.map(PathBuf::from),
            "hho.n" => self.hho_hawks = parse(key, value)?,
            "hho.t" => self.hho_iters = parse(key, value)?,
            "hho.bounds" => {
                let (lb, ub) = value
                    .split_once(',')
                    .ok_or_else(|| Error::config(format!("hho.bounds `{value}` (expected `lb,ub`)")))?;
                self.hho_lb = parse(key, lb)?;
                self.hho_ub = parse(key, ub)?;
            }
            "hho.seed" => self.hho_seed = parse_opt(key, value)?,
            "hho.transfer" => self.transfer = value.parse()?,
            "hho.alpha" => self.alpha = parse(key, value)?,
            "hho.evaluator" => self.evaluator = value.parse()?,
            "hho.validation" => self.validation = value.parse()?,
            "smote.k" => self.smote_k = parse(key, value)?,
            "smote.seed" => self.smote_seed = parse_opt(key, value)?,
            "smote.targets" => {
                self.smote_targets = match value.trim().to_ascii_lowercase().as_str() {
                    "balanced" => SmoteTargets::Balanced,
                    "none" | "off" => SmoteTargets::None,
                    other => return Err(Error::config(format!("smote.targets `{other}` (balanced, none, or per-class keys)"))),
                }
            }
            "pca.k" => self.pca_k = parse(key, value)?,
            "pipeline.order" => self.order = value.parse()?,
            "phase.lo" => self.phase_lo = parse(key, value)?,
            "phase.hi" => self.phase_hi = parse(key, value)?,
            "qk.map" => self.qk_map = value.parse()?,
            "qk.reps" => self.qk_reps = parse(key, value)?,
            "qk.entanglement" => self.qk_entanglement = value.parse()?,
            "qk.mode" => self.qk_mode = value.parse()?,
            "qk.shots" => self.qk_shots = parse(key, value)?,
            "qk.seed" => self.qk_seed = parse_opt(key, value)?,
            "svm.c" => self.svm_c = parse(key, value)?,
            "svm.tol" => self.svm_tol = parse(key, value)?,
            "svm.max_passes" => self.svm_max_passes = parse_opt(key, value)?,
            "svm.psd_repair" => self.psd_repair = parse_bool(key, value)?,
            "rbf.gamma" => self.rbf_gamma = parse_opt(key, value)?,
            _ => match key.strip_prefix("smote.targets.") {
                Some(class) => {
                    let label = parse_class(class)?;
                    let count = parse(key, value)?;
                    let mut map = match std::mem::take(&mut self.smote_targets) {
                        SmoteTargets::Explicit(m) => m,
                        _ => BTreeMap::new(),
                    };
                    map.insert(label, count);
                    self.smote_targets = SmoteTargets::Explicit(map);
                }
                None => return Err(Error::config(format!("unknown config key `{key}`"))),
            },
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return bad(format!("split.test_fraction {} outside (0,1)", self.split_fraction));
        }
        if let Err(e) = self.validation.validate() {
            return bad(format!("hho.validation: {e}"));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("hho.alpha {} outside [0,1]", self.alpha));
        }
        if self.hho_hawks < 2 || self.hho_iters < 1 || !(self.hho_ub > self.hho_lb) {
            return bad("hho needs hawks >= 2, iters >= 1 and ub > lb".into());
        }
        if self.smote_k == 0 || self.pca_k == 0 || self.qk_reps == 0 || self.qk_shots == 0 {
            return bad("smote.k, pca.k, qk.reps and qk.shots must be >= 1".into());
        }
        if !(self.phase_hi > self.phase_lo) {
            return bad(format!("phase range [{}, {}] requires hi > lo", self.phase_lo, self.phase_hi));
        }
        if !(self.svm_c > 0.0 && self.svm_tol > 0.0) {
            return bad("svm.c and svm.tol must be > 0".into());
        }
        if self.rbf_gamma.is_some_and(|g| !(g > 0.0)) {
            return bad("rbf.gamma must be > 0".into());
        }
        Ok(())
    }

    /// Canonical `key = value` listing, sorted, full precision. Excludes
    /// `output.dir` so relocated runs hash identically.
    pub fn entries(&self) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = vec![
            ("data.path".into(), self.data_path.as_ref().map_or_else(String::new, |p| p.display().to_string())),
            ("data.label_column".into(), self.label_column.clone()),
            ("data.positive_label".into(), self.positive_label.clone()),
            ("data.ignore_columns".into(), self.ignore_columns.join(",")),
            ("seed".into(), self.seed.to_string()),
            ("split.test_fraction".into(), self.split_fraction.to_string()),
            ("split.seed".into(), show_opt(&self.split_seed)),
            ("split.stratified".into(), self.split_stratified.to_string()),
            ("select.enabled".into(), self.use_selection.to_string()),
            ("select.mask".into(), show_opt(&self.mask_path.as_ref().map(|p| p.display().to_string()))),
            ("hho.n".into(), self.hho_hawks.to_string()),
            ("hho.t".into(), self.hho_iters.to_string()),
            ("hho.bounds".into(), format!("{},{}", self.hho_lb, self.hho_ub)),
            ("hho.seed".into(), show_opt(&self.hho_seed)),
            ("hho.transfer".into(), self.transfer.to_string()),
            ("hho.alpha".into(), self.alpha.to_string()),
            ("hho.evaluator".into(), match self.evaluator {
                EvaluatorKind::Knn { k } => format!("knn:{k}"),
            }),
            ("hho.validation".into(), self.validation.to_string()),
            ("smote.k".into(), self.smote_k.to_string()),
            ("smote.seed".into(), show_opt(&self.smote_seed)),
            ("pca.k".into(), self.pca_k.to_string()),
            ("pipeline.order".into(), self.order.to_string()),
            ("phase.lo".into(), self.phase_lo.to_string()),
            ("phase.hi".into(), self.phase_hi.to_string()),
            ("qk.map".into(), self.qk_map.to_string()),
            ("qk.reps".into(), self.qk_reps.to_string()),
            ("qk.entanglement".into(), "linear".into()),
            ("qk.mode".into(), self.qk_mode.to_string()),
            ("qk.shots".into(), self.qk_shots.to_string()),
            ("qk.seed".into(), show_opt(&self.qk_seed)),
            ("svm.c".into(), self.svm_c.to_string()),
            ("svm.tol".into(), self.svm_tol.to_string()),
            ("svm.max_passes".into(), show_opt(&self.svm_max_passes)),
            ("svm.psd_repair".into(), self.psd_repair.to_string()),
            ("rbf.gamma".into(), show_opt(&self.rbf_gamma)),
        ];
        match &self.smote_targets {
            SmoteTargets::Balanced => e.push(("smote.targets".into(), "balanced".into())),
            SmoteTargets::None => e.push(("smote.targets".into(), "none".into())),
            SmoteTargets::Explicit(m) => {
                for (&label, &n) in m {
                    let name = if label > 0 { "positive" } else { "negative" };
                    e.push((format!("smote.targets.{name}"), n.to_string()));
                }
            }
        }
        e.sort();
        e
    }

    pub fn to_kv_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of the canonical listing, lowercase hex.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_kv_text().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            test_fraction: self.split_fraction,
            seed: self.split_seed.unwrap_or_else(|| derive_seed(self.seed, &[SPLIT_TAG])),
            stratified: self.split_stratified,
        }
    }

    pub fn smote_seed(&self) -> u64 {
        self.smote_seed.unwrap_or_else(|| derive_seed(self.seed, &[SMOTE_TAG]))
    }

    pub fn hho_params(&self, dimension: usize) -> HhoParams {
        HhoParams {
            n_hawks: self.hho_hawks,
            max_iters: self.hho_iters,
            lower_bound: self.hho_lb,
            upper_bound: self.hho_ub,
            dimension,
            seed: self.hho_seed.unwrap_or_else(|| derive_seed(self.seed, &[HHO_TAG])),
        }
    }

    pub fn fitness_config(&self) -> FitnessConfig {
        FitnessConfig {
            alpha: self.alpha,
            evaluator: self.evaluator,
            validation: self.validation,
            validation_seed: derive_seed(self.hho_params(0).seed, &[HOLDOUT_TAG]),
        }
    }

    /// Feature map of kind `kind` over `pca.k` qubits.
    pub fn feature_map(&self, kind: FeatureMapKind) -> Result<FeatureMapSpec> {
        let spec = FeatureMapSpec {
            kind,
            n_qubits: self.pca_k,
            reps: self.qk_reps,
            entanglement: self.qk_entanglement,
        };
        spec.validate().map_err(|e| Error::config(e.to_string()))?;
        Ok(spec)
    }

    /// Shot seeds default to the master seed itself.
    pub fn kernel_mode(&self) -> KernelMode {
        match self.qk_mode {
            QkMode::Exact => KernelMode::Exact,
            QkMode::Sampled => KernelMode::Sampled(ShotConfig {
                shots: self.qk_shots,
                seed: self.qk_seed.unwrap_or(self.seed),
            }),
        }
    }

    pub fn smo_params(&self) -> SmoParams {
        SmoParams {
            c: self.svm_c,
            tol: self.svm_tol,
            max_passes: self.svm_max_passes,
        }
    }

    pub fn csv_options(&self) -> CsvOptions {
        CsvOptions {
            label_column: LabelColumn::parse(&self.label_column),
            positive_label: self.positive_label.clone(),
            ignore_columns: self.ignore_columns.clone(),
        }
    }
}
