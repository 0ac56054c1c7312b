//! On-disk stage artifacts. Every CSV starts with a `# config_hash=` line;
//! numbers are written in shortest round-trip form so re-reading is exact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2};
use sha2::{Digest, Sha256};

use crate::data_io::Label;
use crate::error::{Error, Result};
use crate::metrics::RocPoint;
use crate::optimizer::{ConvergencePoint, FeatureMask};

pub const MASK: &str = "mask.csv";
pub const CONVERGENCE: &str = "convergence.csv";
pub const PCA: &str = "pca.csv";
pub const REDUCED_TRAIN: &str = "reduced_train.csv";
pub const REDUCED_TEST: &str = "reduced_test.csv";
pub const KERNEL_TRAIN: &str = "kernel_train.csv";
pub const KERNEL_CROSS: &str = "kernel_cross.csv";
pub const MODEL: &str = "model.csv";
pub const METRICS: &str = "metrics.json";
pub const ROC: &str = "roc.csv";
pub const COMPARE: &str = "compare.csv";

pub fn header(config_hash: &str) -> String {
    format!("# config_hash={config_hash}\n")
}

/// Write `header + body` to `dir/name`, creating `dir` if needed.
pub fn write_artifact(dir: &Path, name: &str, config_hash: &str, body: &str) -> Result<PathBuf> {
    write_raw(dir, name, &format!("{}{body}", header(config_hash)))
}

pub fn write_raw(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Hash recorded in an artifact's first line, if any.
pub fn config_hash_of(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# config_hash=")
}

/// Data lines after dropping comments and the column header.
fn records(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').collect())
}

fn num<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::data(format!("bad {what} value `{field}`")))
}

/// SHA-256 over the little-endian bytes of each matrix, shapes included.
pub fn matrix_hash(parts: &[ArrayView2<f64>]) -> String {
    let mut h = Sha256::new();
    for m in parts {
        h.update((m.nrows() as u64).to_le_bytes());
        h.update((m.ncols() as u64).to_le_bytes());
        for v in m.iter() {
            h.update(v.to_le_bytes());
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn mask_body(mask: &FeatureMask, gene_names: &[String]) -> String {
    let mut s = String::from("gene,selected\n");
    for (i, &b) in mask.bits().iter().enumerate() {
        let name = gene_names.get(i).cloned().unwrap_or_else(|| i.to_string());
        let _ = writeln!(s, "{name},{}", u8::from(b));
    }
    s
}

pub fn parse_mask(text: &str) -> Result<FeatureMask> {
    let bits = records(text)
        .map(|r| match r.as_slice() {
            [_, "1"] => Ok(true),
            [_, "0"] => Ok(false),
            _ => Err(Error::data(format!("bad mask row `{}`", r.join(",")))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMask::from_bits(bits))
}

pub fn convergence_body(curve: &[ConvergencePoint]) -> String {
    let mut s = String::from("iteration,best_fitness,selected_count\n");
    for p in curve {
        let _ = writeln!(s, "{},{},{}", p.iteration, p.best_fitness, p.selected_count);
    }
    s
}

/// Labelled reduced matrix: `id,label,f0..`. `labels = None` omits the label
/// column (test rows).
pub fn reduced_body(ids: &[String], labels: Option<&[Label]>, x: ArrayView2<f64>) -> String {
    let mut s = String::from("id");
    if labels.is_some() {
        s.push_str(",label");
    }
    for j in 0..x.ncols() {
        let _ = write!(s, ",f{j}");
    }
    s.push('\n');
    for (i, row) in x.rows().into_iter().enumerate() {
        s.push_str(&ids[i]);
        if let Some(l) = labels {
            let _ = write!(s, ",{}", l[i]);
        }
        for v in row {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTable {
    pub ids: Vec<String>,
    pub labels: Option<Vec<Label>>,
    pub features: Array2<f64>,
}

pub fn parse_reduced(text: &str, labelled: bool) -> Result<ReducedTable> {
    let skip = if labelled { 2 } else { 1 };
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut flat = Vec::new();
    let mut width = None;
    for r in records(text) {
        if r.len() <= skip {
            return Err(Error::data("reduced matrix row has no features"));
        }
        if *width.get_or_insert(r.len()) != r.len() {
            return Err(Error::data("ragged reduced matrix"));
        }
        ids.push(r[0].to_string());
        if labelled {
            labels.push(num::<Label>(r[1], "label")?);
        }
        for f in &r[skip..] {
            flat.push(num::<f64>(f, "feature")?);
        }
    }
    let k = width.map_or(0, |w| w - skip);
    let features = Array2::from_shape_vec((ids.len(), k), flat).map_err(|e| Error::data(e.to_string()))?;
    Ok(ReducedTable {
        ids,
        labels: labelled.then_some(labels),
        features,
    })
}

/// Long format `row,col,row_id,col_id,value`; `row`/`col` are positions.
pub fn kernel_body(k: ArrayView2<f64>, row_ids: &[String], col_ids: &[String]) -> String {
    let mut s = String::from("row,col,row_id,col_id,value\n");
    for ((i, j), v) in k.indexed_iter() {
        let _ = writeln!(s, "{i},{j},{},{},{v}", row_ids[i], col_ids[j]);
    }
    s
}

pub fn parse_kernel(text: &str) -> Result<Array2<f64>> {
    let mut entries = Vec::new();
    let (mut rows, mut cols) = (0, 0);
    for r in records(text) {
        let [i, j, _, _, v] = r[..] else {
            return Err(Error::data(format!("bad kernel row `{}`", r.join(","))));
        };
        let (i, j): (usize, usize) = (num(i, "row")?, num(j, "col")?);
        rows = rows.max(i + 1);
        cols = cols.max(j + 1);
        entries.push((i, j, num::<f64>(v, "kernel")?));
    }
    if entries.len() != rows * cols {
        return Err(Error::data(format!(
            "kernel file has {} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    let mut k = Array2::from_elem((rows, cols), f64::NAN);
    for (i, j, v) in entries {
        k[[i, j]] = v;
    }
    if k.iter().any(|v| v.is_nan()) {
        return Err(Error::data("kernel file has duplicate or missing entries"));
    }
    Ok(k)
}

pub fn roc_body(curve: &[RocPoint]) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in curve {
        let _ = writeln!(s, "{},{},{}", p.threshold, p.fpr, p.tpr);
    }
    s
}
