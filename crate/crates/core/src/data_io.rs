//! Microarray CSV intake, stratified splitting and phase-range feature scaling.

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;

use crate::error::{check_dim, Error, Result};
use crate::rng::rng_from;

/// Binary class label. Only `POSITIVE` and `NEGATIVE` are valid values.
pub type Label = i8;
pub const POSITIVE: Label = 1;
pub const NEGATIVE: Label = -1;

/// Sample × gene expression matrix with {-1,+1} labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<Label>,
    gene_names: Vec<String>,
}

impl LabeledDataset {
    /// Validates shape, label domain and finiteness. `gene_names` may be
    /// empty; otherwise it must have one entry per column.
    pub fn new(features: Array2<f64>, labels: Vec<Label>, gene_names: Vec<String>) -> Result<Self> {
        check_dim(features.nrows(), labels.len(), "labels vs feature rows")?;
        if !gene_names.is_empty() {
            check_dim(features.ncols(), gene_names.len(), "gene names vs feature columns")?;
        }
        if let Some(bad) = labels.iter().find(|&&l| l != POSITIVE && l != NEGATIVE) {
            return Err(Error::data(format!("label {bad} is not -1 or +1")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("feature matrix contains NaN or infinite values"));
        }
        Ok(Self {
            features,
            labels,
            gene_names,
        })
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn gene_names(&self) -> &[String] {
        &self.gene_names
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_genes(&self) -> usize {
        self.features.ncols()
    }

    /// Labels as `f64` (for SVM arithmetic).
    pub fn labels_f64(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    /// Number of samples per class, keyed by label.
    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for &l in &self.labels {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Rows at `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            gene_names: self.gene_names.clone(),
        }
    }

    /// Columns at `indices`, in that order.
    pub fn select_genes(&self, indices: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(1), indices),
            labels: self.labels.clone(),
            gene_names: if self.gene_names.is_empty() {
                Vec::new()
            } else {
                indices.iter().map(|&i| self.gene_names[i].clone()).collect()
            },
        }
    }

    /// Same labels with a replacement feature matrix (e.g. after PCA).
    pub fn with_features(&self, features: Array2<f64>, gene_names: Vec<String>) -> Result<Self> {
        Self::new(features, self.labels.clone(), gene_names)
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl LabelColumn {
    /// Integers are read as a column index, anything else as a header name.
    pub fn parse(s: &str) -> Self {
        match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        }
    }
}

/// Options for [`load_csv_with`].
#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub label_column: LabelColumn,
    pub positive_label: String,
    /// Non-feature columns to drop (e.g. a sample identifier).
    pub ignore_columns: Vec<String>,
}

/// Load a headered CSV with one sample per row. Labels equal to
/// `positive_label` become +1, every other value -1.
pub fn load_csv(path: &Path, label_column: LabelColumn, positive_label: &str) -> Result<LabeledDataset> {
    load_csv_with(
        path,
        &CsvOptions {
            label_column,
            positive_label: positive_label.to_string(),
            ignore_columns: Vec::new(),
        },
    )
}

pub fn load_csv_with(path: &Path, opts: &CsvOptions) -> Result<LabeledDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let label_idx = match &opts.label_column {
        LabelColumn::Index(i) if *i < header.len() => *i,
        LabelColumn::Index(i) => {
            return Err(Error::data(format!(
                "label column index {i} absent (file has {} columns)",
                header.len()
            )))
        }
        LabelColumn::Name(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("label column `{name}` absent")))?,
    };
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| c != label_idx && !opts.ignore_columns.contains(&header[c]))
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::data("no feature columns"));
    }

    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        // header is line 1
        let line = row_no + 2;
        if record.len() != header.len() {
            return Err(Error::data(format!(
                "ragged row at line {line}: {} fields, header has {}",
                record.len(),
                header.len()
            )));
        }
        for &c in &feature_cols {
            let cell = &record[c];
            let v: f64 = cell.parse().map_err(|_| {
                Error::data(format!(
                    "non-numeric feature cell `{cell}` at line {line}, column `{}`",
                    header[c]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::data(format!("non-finite value at line {line}, column `{}`", header[c])));
            }
            values.push(v);
        }
        labels.push(if record[label_idx] == *opts.positive_label {
            POSITIVE
        } else {
            NEGATIVE
        });
    }

    let n = labels.len();
    if n < 2 {
        return Err(Error::data(format!("dataset has {n} samples, need at least 2")));
    }
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(Error::data("single-class dataset"));
    }
    let features = Array2::from_shape_vec((n, feature_cols.len()), values)
        .map_err(|e| Error::data(e.to_string()))?;
    let gene_names = feature_cols.iter().map(|&c| header[c].clone()).collect();
    LabeledDataset::new(features, labels, gene_names)
}

/// Write `ds` as a headered CSV with a trailing `label` column holding
/// `1`/`-1`. Unnamed genes are written as `g<index>`.
pub fn write_csv(ds: &LabeledDataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..ds.n_genes())
        .map(|j| ds.gene_names().get(j).cloned().unwrap_or_else(|| format!("g{j}")))
        .collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in ds.features().rows().into_iter().zip(ds.labels()) {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Train/test split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(test_fraction: f64, seed: u64) -> Result<Self> {
        let spec = Self {
            test_fraction,
            seed,
            stratified: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test fraction {} outside (0,1)",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            test_fraction: 0.25,
            seed: 0,
            stratified: true,
        }
    }
}

/// Result of [`stratified_split`]. Index vectors refer to rows of the input
/// and are sorted ascending.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Seeded split. With `stratified`, each class contributes
/// `round(class_size * test_fraction)` test rows and must keep at least one
/// row on each side.
pub fn stratified_split(ds: &LabeledDataset, spec: &SplitSpec) -> Result<Split> {
    spec.validate()?;
    let mut rng = rng_from(spec.seed);
    let mut test_indices = Vec::new();

    if spec.stratified {
        let mut by_class: BTreeMap<Label, Vec<usize>> = BTreeMap::new();
        for (i, &l) in ds.labels().iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        for (label, mut members) in by_class {
            if members.len() < 2 {
                return Err(Error::data(format!(
                    "class {label:+} has {} sample(s), need at least 2 to split",
                    members.len()
                )));
            }
            let n_test = (members.len() as f64 * spec.test_fraction).round() as usize;
            if n_test == 0 || n_test == members.len() {
                return Err(Error::data(format!(
                    "test fraction {} leaves class {label:+} absent from one side of the split",
                    spec.test_fraction
                )));
            }
            members.shuffle(&mut rng);
            test_indices.extend_from_slice(&members[..n_test]);
        }
    } else {
        let n = ds.n_samples();
        let n_test = (n as f64 * spec.test_fraction).round() as usize;
        if n_test == 0 || n_test == n {
            return Err(Error::data("test fraction leaves one side of the split empty"));
        }
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        test_indices.extend_from_slice(&all[..n_test]);
    }

    test_indices.sort_unstable();
    let mut is_test = vec![false; ds.n_samples()];
    for &i in &test_indices {
        is_test[i] = true;
    }
    let train_indices: Vec<usize> = (0..ds.n_samples()).filter(|&i| !is_test[i]).collect();
    Ok(Split {
        train: ds.select_rows(&train_indices),
        test: ds.select_rows(&test_indices),
        train_indices,
        test_indices,
    })
}

/// Per-column min-max map into `[lo, hi]`, fitted on one matrix and
/// reapplied (with clamping) to others.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScaler {
    lo: f64,
    hi: f64,
    col_min: Vec<f64>,
    col_max: Vec<f64>,
}

impl PhaseScaler {
    pub fn fit(x: &Array2<f64>, lo: f64, hi: f64) -> Result<Self> {
        if !(hi > lo) {
            return Err(Error::invalid(format!("phase range [{lo}, {hi}] requires hi > lo")));
        }
        let col_min = x
            .columns()
            .into_iter()
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let col_max = x
            .columns()
            .into_iter()
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Ok(Self {
            lo,
            hi,
            col_min,
            col_max,
        })
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim(self.col_min.len(), x.ncols(), "scaler columns")?;
        let mut out = x.clone();
        for (j, mut col) in out.columns_mut().into_iter().enumerate() {
            let (min, max) = (self.col_min[j], self.col_max[j]);
            let span = max - min;
            for v in col.iter_mut() {
                *v = if span > 0.0 {
                    (self.lo + (*v - min) / span * (self.hi - self.lo)).clamp(self.lo, self.hi)
                } else {
                    self.lo
                };
            }
        }
        Ok(out)
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }
}

/// Fit-and-apply convenience on a single dataset. For train/test use
/// [`PhaseScaler::fit`] on the training rows and `apply` on both.
pub fn scale_to_phase(ds: &LabeledDataset, lo: f64, hi: f64) -> Result<LabeledDataset> {
    let scaler = PhaseScaler::fit(ds.features(), lo, hi)?;
    ds.with_features(scaler.apply(ds.features())?, ds.gene_names().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use std::f64::consts::PI;
    use std::io::Write;

    fn write_tmp(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    fn toy(n_pos: usize, n_neg: usize) -> LabeledDataset {
        let n = n_pos + n_neg;
        let features = Array2::from_shape_fn((n, 3), |(i, j)| (i * 3 + j) as f64);
        let labels = (0..n).map(|i| if i < n_pos { POSITIVE } else { NEGATIVE }).collect();
        LabeledDataset::new(features, labels, vec![]).unwrap()
    }

    #[test]
    fn loads_and_maps_labels() {
        let f = write_tmp("g1,g2,class\n1.0,2.0,tumor\n3.5,-1,tumor\n0,0.25,normal\n");
        let ds = load_csv(f.path(), LabelColumn::Name("class".into()), "tumor").unwrap();
        assert_eq!(ds.labels(), &[1, 1, -1]);
        assert_eq!(ds.features(), &array![[1.0, 2.0], [3.5, -1.0], [0.0, 0.25]]);
        assert_eq!(ds.gene_names(), &["g1".to_string(), "g2".to_string()]);
    }

    #[test]
    fn label_column_by_index_and_ignored_columns() {
        let f = write_tmp("id,class,g1\ns1,normal,1\ns2,tumor,2\n");
        let ds = load_csv_with(
            f.path(),
            &CsvOptions {
                label_column: LabelColumn::parse("1"),
                positive_label: "tumor".into(),
                ignore_columns: vec!["id".into()],
            },
        )
        .unwrap();
        assert_eq!(ds.labels(), &[-1, 1]);
        assert_eq!(ds.n_genes(), 1);
    }

    #[test]
    fn rejects_single_class() {
        let f = write_tmp("g1,class\n1,tumor\n2,tumor\n");
        let err = load_csv(f.path(), LabelColumn::Name("class".into()), "tumor").unwrap_err();
        assert!(err.to_string().contains("single-class dataset"), "{err}");
    }

    #[test]
    fn load_error_paths() {
        let missing = load_csv(Path::new("/nonexistent/x.csv"), LabelColumn::Index(0), "a");
        assert!(matches!(missing, Err(Error::Io { .. })));

        let ragged = write_tmp("g1,g2,class\n1,2,a\n1,b\n");
        let err = load_csv(ragged.path(), LabelColumn::Name("class".into()), "a").unwrap_err();
        assert!(err.to_string().contains("ragged"), "{err}");

        let non_numeric = write_tmp("g1,class\n1,a\nfoo,b\n");
        let err = load_csv(non_numeric.path(), LabelColumn::Name("class".into()), "a").unwrap_err();
        assert!(err.to_string().contains("non-numeric"), "{err}");

        let absent = write_tmp("g1,class\n1,a\n2,b\n");
        let err = load_csv(absent.path(), LabelColumn::Name("label".into()), "a").unwrap_err();
        assert!(err.to_string().contains("absent"), "{err}");

        let one_row = write_tmp("g1,class\n1,a\n");
        assert!(load_csv(one_row.path(), LabelColumn::Name("class".into()), "a").is_err());
    }

    #[test]
    fn write_then_load_is_exact() {
        let ds = LabeledDataset::new(
            array![[0.1 + 0.2, -1e-300], [1.0 / 3.0, 7.0], [2.5, f64::MAX]],
            vec![1, -1, 1],
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_csv(&ds, &path).unwrap();
        let back = load_csv(&path, LabelColumn::Name("label".into()), "1").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn colon_shaped_file() {
        let mut text = (0..2000).map(|g| format!("g{g}")).collect::<Vec<_>>().join(",");
        text.push_str(",class\n");
        for i in 0..62 {
            let row: Vec<String> = (0..2000).map(|g| format!("{}", (i * 7 + g) % 101)).collect();
            text.push_str(&row.join(","));
            text.push_str(if i < 40 { ",tumor\n" } else { ",normal\n" });
        }
        let f = write_tmp(&text);
        let ds = load_csv(f.path(), LabelColumn::Name("class".into()), "tumor").unwrap();
        assert_eq!((ds.n_samples(), ds.n_genes()), (62, 2000));
        let counts = ds.class_counts();
        assert_eq!(counts[&POSITIVE], 40);
        assert_eq!(counts[&NEGATIVE], 22);
    }

    #[test]
    fn split_five_five() {
        let ds = toy(5, 5);
        for seed in 0..10 {
            let s = stratified_split(&ds, &SplitSpec::new(0.2, seed).unwrap()).unwrap();
            let c = s.test.class_counts();
            assert_eq!((c[&POSITIVE], c[&NEGATIVE]), (1, 1));
            let again = stratified_split(&ds, &SplitSpec::new(0.2, seed).unwrap()).unwrap();
            assert_eq!(s.test_indices, again.test_indices);
            assert_eq!(s.train_indices, again.train_indices);
        }
    }

    #[test]
    fn split_colon_proportions() {
        let ds = toy(40, 22);
        let s = stratified_split(&ds, &SplitSpec::new(0.25, 3).unwrap()).unwrap();
        // recount from the emitted index set
        let pos = s.test_indices.iter().filter(|&&i| ds.labels()[i] == POSITIVE).count();
        let neg = s.test_indices.len() - pos;
        assert!((pos as f64 - 10.0).abs() <= 1.0);
        assert!((neg as f64 - 5.5).abs() <= 1.0);
    }

    #[test]
    fn split_rejects_tiny_class_and_degenerate_fraction() {
        let ds = toy(5, 1);
        assert!(stratified_split(&ds, &SplitSpec::new(0.2, 0).unwrap()).is_err());
        let ds = toy(3, 3);
        assert!(stratified_split(&ds, &SplitSpec::new(0.1, 0).unwrap()).is_err());
        assert!(SplitSpec::new(1.0, 0).is_err());
        assert!(SplitSpec::new(0.0, 0).is_err());
    }

    #[test]
    fn scale_endpoints_and_constant_column() {
        let x = array![[0.0, 7.0], [5.0, 7.0], [10.0, 7.0]];
        let ds = LabeledDataset::new(x, vec![1, -1, 1], vec![]).unwrap();
        let s = scale_to_phase(&ds, 0.0, PI).unwrap();
        let f = s.features();
        assert_eq!(f[[0, 0]], 0.0);
        assert!((f[[1, 0]] - PI / 2.0).abs() < 1e-15);
        assert_eq!(f[[2, 0]], PI);
        assert!(f.column(1).iter().all(|&v| v == 0.0));
        assert!(scale_to_phase(&ds, 1.0, 1.0).is_err());
    }

    #[test]
    fn test_rows_clamped_to_train_range() {
        let train = array![[0.0], [10.0]];
        let scaler = PhaseScaler::fit(&train, 0.0, 1.0).unwrap();
        let out = scaler.apply(&array![[-5.0], [5.0], [20.0]]).unwrap();
        assert_eq!(out.column(0).to_vec(), vec![0.0, 0.5, 1.0]);
    }

    proptest! {
        #[test]
        fn split_round_trip(seed in any::<u64>(), frac in 0.2f64..0.6) {
            let ds = toy(9, 7);
            let s = stratified_split(&ds, &SplitSpec::new(frac, seed).unwrap()).unwrap();
            let mut merged: Vec<(usize, usize, bool)> = s.train_indices.iter().enumerate().map(|(k, &i)| (i, k, false))
                .chain(s.test_indices.iter().enumerate().map(|(k, &i)| (i, k, true))).collect();
            merged.sort();
            prop_assert_eq!(merged.len(), ds.n_samples());
            for (pos, &(orig, k, is_test)) in merged.iter().enumerate() {
                prop_assert_eq!(orig, pos);
                let part = if is_test { &s.test } else { &s.train };
                prop_assert_eq!(part.features().row(k), ds.features().row(orig));
                prop_assert_eq!(part.labels()[k], ds.labels()[orig]);
            }
        }

        #[test]
        fn scaling_in_range_and_idempotent(vals in proptest::collection::vec(-50.0f64..50.0, 15), lo in -2.0f64..0.0, width in 0.5f64..4.0) {
            let x = Array2::from_shape_vec((5, 3), vals).unwrap();
            let ds = LabeledDataset::new(x, vec![1, -1, 1, -1, 1], vec![]).unwrap();
            let hi = lo + width;
            let once = scale_to_phase(&ds, lo, hi).unwrap();
            prop_assert!(once.features().iter().all(|&v| v >= lo && v <= hi));
            let twice = scale_to_phase(&once, lo, hi).unwrap();
            for (a, b) in once.features().iter().zip(twice.features()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
