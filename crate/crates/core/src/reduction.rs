//! PCA down to the qubit budget, with a cyclic Jacobi eigen-solver for
//! symmetric matrices.
//!
//! When genes outnumber samples the decomposition runs on the `n × n` Gram
//! matrix of the centred data and maps eigenvectors back to gene space;
//! otherwise it runs on the `d × d` covariance directly. Both are
//! normalised by `n - 1`.

use std::io::Write;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};

use crate::error::{check_dim, Error, Result};

/// Eigen-decomposition of a symmetric matrix: eigenvalues in descending
/// order, eigenvectors as the matching columns.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi rotations until the off-diagonal mass drops below
/// `1e-12 · ‖A‖_F`.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<SymmetricEigen> {
    let n = a.nrows();
    check_dim(n, a.ncols(), "eigen-solver needs a square matrix")?;
    let scale = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    for i in 0..n {
        for j in 0..i {
            if (a[[i, j]] - a[[j, i]]).abs() > 1e-9 * scale.max(1.0) {
                return Err(Error::invalid(format!("matrix not symmetric at ({i}, {j})")));
            }
        }
    }
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut v = vec![0.0; n * n];
    (0..n).for_each(|i| v[i * n + i] = 1.0);
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[i * n + j] * m[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let target = JACOBI_TOL * scale;
    let mut converged = n < 2 || scale == 0.0;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = c * mkp - s * mkq;
                    m[k * n + q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = c * mpk - s * mqk;
                    m[q * n + k] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
        converged = off(&m) <= target;
    }
    if !converged {
        return Err(Error::numerical(format!(
            "jacobi eigen-solver did not converge in {JACOBI_MAX_SWEEPS} sweeps (off-diagonal {:e})",
            off(&m)
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j * n + j].total_cmp(&m[i * n + i]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| m[i * n + i]).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[r * n + order[c]]);
    Ok(SymmetricEigen { values, vectors })
}

/// Fitted principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    mean: Array1<f64>,
    /// `k × d`, orthonormal rows.
    components: Array2<f64>,
    explained_variance: Vec<f64>,
    total_variance: f64,
}

impl PcaModel {
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn components(&self) -> &Array2<f64> {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }

    pub fn n_components(&self) -> usize {
        self.components.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.components.ncols()
    }

    /// `(X - mean) · componentsᵀ`.
    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_features(), x.ncols(), "pca input columns")?;
        let centred = x - &self.mean.view().insert_axis(Axis(0));
        Ok(centred.dot(&self.components.t()))
    }

    /// Map reduced rows back to gene space.
    pub fn inverse_transform(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        check_dim(self.n_components(), z.ncols(), "pca reduced columns")?;
        Ok(z.dot(&self.components) + self.mean.view().insert_axis(Axis(0)))
    }

    /// CSV bundle: `total_variance`, `mean`, `variance` and `component` rows,
    /// each as `kind,index,values...`.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("kind,index,values\n");
        let join = |vals: &mut dyn Iterator<Item = f64>| vals.map(|v| v.to_string()).collect::<Vec<_>>().join(",");
        out.push_str(&format!("total_variance,0,{}\n", self.total_variance));
        out.push_str(&format!("mean,0,{}\n", join(&mut self.mean.iter().copied())));
        for (i, v) in self.explained_variance.iter().enumerate() {
            out.push_str(&format!("variance,{i},{v}\n"));
        }
        for (i, row) in self.components.rows().into_iter().enumerate() {
            out.push_str(&format!("component,{i},{}\n", join(&mut row.iter().copied())));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(self.to_csv_string().as_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    /// Lines starting with `#` are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut total_variance = None;
        let mut mean = None;
        let mut variances = Vec::new();
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).skip(1) {
            let mut fields = line.split(',');
            let kind = fields.next().unwrap_or_default();
            let _index = fields.next();
            let vals: Vec<f64> = fields
                .map(|f| f.parse().map_err(|_| Error::data(format!("bad number `{f}` in pca bundle"))))
                .collect::<Result<_>>()?;
            match kind {
                "total_variance" => total_variance = vals.first().copied(),
                "mean" => mean = Some(vals),
                "variance" => variances.extend(vals),
                "component" => rows.push(vals),
                other => return Err(Error::data(format!("unknown pca bundle row `{other}`"))),
            }
        }
        let mean = mean.ok_or_else(|| Error::data("pca bundle lacks a mean row"))?;
        let d = mean.len();
        if rows.iter().any(|r| r.len() != d) || rows.len() != variances.len() {
            return Err(Error::data("inconsistent pca bundle"));
        }
        let k = rows.len();
        Ok(Self {
            mean: Array1::from(mean),
            components: Array2::from_shape_vec((k, d), rows.concat()).map_err(|e| Error::data(e.to_string()))?,
            explained_variance: variances,
            total_variance: total_variance.ok_or_else(|| Error::data("pca bundle lacks total_variance"))?,
        })
    }
}

/// Top-`k` principal components of the rows of `x`.
pub fn pca_fit(x: &Array2<f64>, k: usize) -> Result<PcaModel> {
    let (n, d) = x.dim();
    if n < 2 {
        return Err(Error::invalid("pca needs at least 2 samples"));
    }
    if k == 0 || k > n.min(d) {
        return Err(Error::invalid(format!("pca k={k} outside [1, min(n={n}, d={d})]")));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 2");
    let centred = x - &mean.view().insert_axis(Axis(0));
    let denom = (n - 1) as f64;
    let total_variance = centred.iter().map(|v| v * v).sum::<f64>() / denom;
    if !(total_variance > 0.0) {
        return Err(Error::numerical("pca on zero-variance data (all rows identical)"));
    }

    let mut components = Array2::<f64>::zeros((k, d));
    let mut variances = Vec::with_capacity(k);
    let rank_floor = 1e-12 * total_variance;
    let mut filled = 0;

    if d > n {
        let gram = centred.dot(&centred.t()) / denom;
        let eig = symmetric_eigen(&gram)?;
        for (i, &lambda) in eig.values.iter().take(k).enumerate() {
            if lambda <= rank_floor {
                break;
            }
            let dir = centred.t().dot(&eig.vectors.column(i)) / (denom * lambda).sqrt();
            components.row_mut(i).assign(&dir);
            variances.push(lambda);
            filled += 1;
        }
    } else {
        let cov = centred.t().dot(&centred) / denom;
        let eig = symmetric_eigen(&cov)?;
        for (i, &lambda) in eig.values.iter().take(k).enumerate() {
            if lambda <= rank_floor {
                break;
            }
            components.row_mut(i).assign(&eig.vectors.column(i));
            variances.push(lambda);
            filled += 1;
        }
    }

    // directions beyond the data rank: orthonormal completion, zero variance
    let mut basis = 0;
    while filled < k {
        let mut cand = Array1::<f64>::zeros(d);
        cand[basis] = 1.0;
        basis += 1;
        for _ in 0..2 {
            for r in 0..filled {
                let row = components.row(r);
                let proj = row.dot(&cand);
                cand.scaled_add(-proj, &row);
            }
        }
        let norm = cand.dot(&cand).sqrt();
        if norm > 1e-6 {
            components.row_mut(filled).assign(&(cand / norm));
            variances.push(0.0);
            filled += 1;
        }
    }

    for mut row in components.rows_mut() {
        let pivot = row
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map(|(_, v)| v)
            .unwrap_or(1.0);
        if pivot < 0.0 {
            row.mapv_inplace(|v| -v);
        }
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance: variances,
        total_variance,
    })
}

pub fn pca_transform(m: &PcaModel, x: &Array2<f64>) -> Result<Array2<f64>> {
    m.transform(x)
}
