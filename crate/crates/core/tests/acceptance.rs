//! Acceptance suite: ten end-to-end properties at their required
//! tolerances. Prints one PASS/FAIL line per property and exits non-zero if
//! any fails.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use qkgene::classifier::{smo_train, KernelMatrix, SmoParams};
use qkgene::data_io::{write_csv, LabeledDataset, NEGATIVE, POSITIVE};
use qkgene::metrics::{confusion, roc_auc, scores_from_confusion};
use qkgene::optimizer::{run_bhho, FitnessConfig, HhoParams, TransferKind};
use qkgene::pipeline::{run_full, run_full_on, PipelineConfig};
use qkgene::quantum::{
    build_feature_map, exact_kernel_entry, kernel_matrix, one_period_phase_hi, sampled_kernel_entry, FeatureMapKind,
    FeatureMapSpec, KernelMode, ShotConfig, Statevector,
};
use qkgene::reduction::pca_fit;
use qkgene::sampling::{smote_oversample, SmoteConfig};
use qkgene::synthetic::planted_dataset;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, hi: f64) -> Array2<f64> {
    Array2::from_shape_fn((n, d), |_| rng.random_range(0.0..hi))
}

fn secs(d: Duration) -> String {
    format!("{:.2} s", d.as_secs_f64())
}

/// Gate-by-gate simulation against products of dense unitaries.
fn simulator_oracle() -> Verdict {
    let start = Instant::now();
    let mut r = rng(1);
    let mut worst = 0.0f64;
    let (mut circuits, mut rejected, mut rejections_ok) = (0usize, 0usize, true);
    for kind in FeatureMapKind::ALL {
        for n in 1..=3 {
            for reps in 1..=3 {
                // entangling maps need a qubit pair; a single-qubit spec must be refused
                if n == 1 && kind != FeatureMapKind::Z {
                    rejections_ok &= FeatureMapSpec::new(kind, n, reps).is_err();
                    rejected += 1;
                    continue;
                }
                let spec = FeatureMapSpec::new(kind, n, reps).unwrap();
                circuits += 50;
                for _ in 0..50 {
                    let x: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..4.0)).collect();
                    let gates = build_feature_map(&spec, &x).unwrap();
                    let sv = Statevector::run(n, &gates).unwrap();
                    let dense = common::dense_state(n, &gates);
                    for (a, b) in sv.amplitudes().iter().zip(dense.iter()) {
                        worst = worst.max((a.re - b.re).abs()).max((a.im - b.im).abs());
                    }
                }
            }
        }
    }
    let t = start.elapsed();
    verdict(
        worst <= 1e-10 && rejections_ok && t < Duration::from_secs(10),
        format!(
            "max elementwise |Δ| = {worst:.1e} over {circuits} circuits, {rejected} single-qubit entangling specs refused = {rejections_ok}, {}",
            secs(t)
        ),
    )
}

/// Symmetry, unit diagonal, PSD and Z-map factorisation of exact kernels.
fn kernel_axioms() -> Verdict {
    let mut r = rng(2);
    let x = uniform_rows(&mut r, 10, 4, std::f64::consts::PI);
    let (mut asym, mut diag, mut min_eig, mut fact) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for kind in FeatureMapKind::ALL {
        let spec = FeatureMapSpec::new(kind, 4, 3).unwrap();
        let k = kernel_matrix(x.view(), &spec, KernelMode::Exact).unwrap();
        let v = k.values();
        for i in 0..10 {
            diag = diag.max((v[[i, i]] - 1.0).abs());
            for j in 0..10 {
                asym = asym.max((v[[i, j]] - v[[j, i]]).abs());
            }
        }
        let m = DMatrix::from_fn(10, 10, |i, j| v[[i, j]]);
        min_eig = min_eig.min(m.symmetric_eigenvalues().min());
        if kind == FeatureMapKind::Z {
            let one = FeatureMapSpec::new(FeatureMapKind::Z, 1, 3).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    let prod: f64 = (0..4)
                        .map(|q| exact_kernel_entry(&[x[[i, q]]], &[x[[j, q]]], &one).unwrap())
                        .product();
                    fact = fact.max((v[[i, j]] - prod).abs());
                }
            }
        }
    }
    verdict(
        asym == 0.0 && diag <= 1e-12 && min_eig >= -1e-9 && fact <= 1e-9,
        format!("max|K-Kᵀ| = {asym:.1e}, max|K_ii-1| = {diag:.1e}, min eigenvalue = {min_eig:.2e}, Z factorisation |Δ| = {fact:.1e}"),
    )
}

/// Shot estimates at 100 shots: every value on the 1/100 grid, the mean of
/// 500 seeds within three binomial standard errors.
fn shot_calibration() -> Verdict {
    let mut r = rng(3);
    let spec = FeatureMapSpec::new(FeatureMapKind::Zz, 4, 3).unwrap();
    let (shots, seeds) = (100, 500);
    let mut ok = true;
    let mut notes = Vec::new();
    for _ in 0..5 {
        let x: Vec<f64> = (0..4).map(|_| r.random_range(0.0..1.0)).collect();
        let z: Vec<f64> = x.iter().map(|v| v + r.random_range(-0.15..0.15)).collect();
        let p = exact_kernel_entry(&x, &z, &spec).unwrap();
        let mut sum = 0.0;
        for s in 0..seeds {
            let e = sampled_kernel_entry(&x, &z, &spec, &ShotConfig::new(shots, s).unwrap()).unwrap();
            let scaled = e * shots as f64;
            ok &= (scaled - scaled.round()).abs() < 1e-9 && (0.0..=1.0).contains(&e);
            sum += e;
        }
        let mean = sum / seeds as f64;
        let sigma = (p * (1.0 - p) / (shots * seeds as usize) as f64).sqrt();
        let z_score = if sigma > 0.0 { (mean - p).abs() / sigma } else if mean == p { 0.0 } else { f64::INFINITY };
        ok &= z_score <= 3.0;
        notes.push(format!("p={p:.3} z={z_score:.2}"));
    }
    verdict(ok, notes.join("; "))
}

/// SMO against a projected-gradient QP oracle on small PSD problems.
fn smo_correctness() -> Verdict {
    let mut r = rng(4);
    let (mut obj_gap, mut kkt_ratio) = (0.0f64, 0.0f64);
    let (mut box_ok, mut eq_ok) = (true, true);
    for inst in 0..20 {
        let n = r.random_range(2..=10);
        let pts: Vec<[f64; 3]> = (0..n)
            .map(|_| [r.sample(StandardNormal), r.sample(StandardNormal), r.sample(StandardNormal)])
            .collect();
        let mut y: Vec<f64> = (0..n).map(|_| if r.random_bool(0.5) { 1.0 } else { -1.0 }).collect();
        y[0] = 1.0;
        y[1] = -1.0;
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d2: f64 = (0..3).map(|t| (pts[i][t] - pts[j][t]).powi(2)).sum();
            let dot: f64 = (0..3).map(|t| pts[i][t] * pts[j][t]).sum();
            if inst % 2 == 0 { (-0.5 * d2).exp() } else { dot }
        });
        let cap = 10f64.powf(r.random_range(-1.0..1.0));
        let tol = 1e-8;
        let km = KernelMatrix::new(Array2::from_shape_fn((n, n), |(i, j)| k[(i, j)])).unwrap();
        let labels: Vec<i8> = y.iter().map(|&v| v as i8).collect();
        let model = smo_train(&km, &labels, &SmoParams { c: cap, tol, max_passes: None }).unwrap();

        let q = DMatrix::from_fn(n, n, |i, j| y[i] * y[j] * k[(i, j)]);
        let a = nalgebra::DVector::from_column_slice(&model.alphas);
        let ours = a.sum() - 0.5 * a.dot(&(&q * &a));
        let best = common::qp_dual_optimum(&q, &y, cap);
        obj_gap = obj_gap.max((ours - best).abs());
        kkt_ratio = kkt_ratio.max(common::kkt_gap(&q, &y, &model.alphas, cap) / tol);
        box_ok &= model.alphas.iter().all(|&v| (0.0..=cap).contains(&v));
        let signed: Vec<f64> = model.alphas.iter().zip(&y).map(|(a, y)| a * y).collect();
        eq_ok &= matches!(common::exact_sum(&signed), Some((0, _)));
    }
    verdict(
        obj_gap <= 1e-6 && kkt_ratio < 1.0 && box_ok && eq_ok,
        format!("max |W - W*| = {obj_gap:.1e}, max KKT gap / tol = {kkt_ratio:.4}, box held = {box_ok}, Σαy exactly 0 = {eq_ok}"),
    )
}

/// Planted-gene recovery of the binary hawk search.
fn bhho_recovery() -> Verdict {
    let start = Instant::now();
    let planted = planted_dataset(400, 5, 45, 1.5, 2024);
    let mut hits = Vec::new();
    let mut monotone = true;
    for seed in 0..5 {
        let p = HhoParams::new(10, 50, -1.0, 1.0, 50, seed).unwrap();
        let fc = FitnessConfig { validation_seed: seed, ..FitnessConfig::default() };
        let res = run_bhho(&planted.dataset, &p, &fc, TransferKind::S).unwrap();
        let sel = res.best_mask.selected_indices();
        hits.push(planted.informative.iter().filter(|g| sel.contains(g)).count());
        monotone &= res.convergence.windows(2).all(|w| w[1].best_fitness <= w[0].best_fitness);
    }
    let t = start.elapsed();
    verdict(
        hits.iter().all(|&h| h >= 4) && monotone && t < Duration::from_secs(60),
        format!("informative genes recovered per seed {hits:?} of 5, monotone = {monotone}, {}", secs(t)),
    )
}

/// Oversampling a 40/22 colon-shaped set to 49/31.
fn smote_distribution() -> Verdict {
    let mut r = rng(6);
    let x = Array2::from_shape_fn((62, 2000), |_| r.sample::<f64, _>(StandardNormal));
    let labels: Vec<i8> = (0..62).map(|i| if i < 40 { POSITIVE } else { NEGATIVE }).collect();
    let ds = LabeledDataset::new(x.clone(), labels.clone(), vec![]).unwrap();
    let targets = BTreeMap::from([(POSITIVE, 49), (NEGATIVE, 31)]);
    let out = smote_oversample(&ds, &SmoteConfig::new(5, targets, 10_598).unwrap()).unwrap();
    let counts = out.class_counts();
    let counts_ok = counts[&POSITIVE] == 49 && counts[&NEGATIVE] == 31;

    let mut worst_resid = 0.0f64;
    let mut all_convex = true;
    for s in 62..out.n_samples() {
        let row = out.features().row(s);
        let label = out.labels()[s];
        let members: Vec<usize> = (0..62).filter(|&i| labels[i] == label).collect();
        let mut best = f64::INFINITY;
        for (p, &i) in members.iter().enumerate() {
            for &j in &members[p + 1..] {
                let (a, b) = (x.row(i), x.row(j));
                let span = &b - &a;
                let delta = (&row - &a).dot(&span) / span.dot(&span);
                if !(-1e-9..=1.0 + 1e-9).contains(&delta) {
                    continue;
                }
                let resid = (0..row.len())
                    .map(|t| (a[t] + delta * span[t] - row[t]).abs())
                    .fold(0.0, f64::max);
                best = best.min(resid);
            }
        }
        worst_resid = worst_resid.max(best);
        all_convex &= best <= 1e-9;
    }
    verdict(
        counts_ok && all_convex && out.n_samples() == 80,
        format!(
            "class counts +1:{} -1:{}, {} synthetic rows, worst convex residual {worst_resid:.1e}",
            counts[&POSITIVE],
            counts[&NEGATIVE],
            out.n_samples() - 62
        ),
    )
}

/// Orthonormal components, eigenvalues matching a direct covariance
/// eigendecomposition, projected variances matching the model.
fn pca_checks() -> Verdict {
    let mut r = rng(7);
    let x = Array2::from_shape_fn((6, 40), |_| r.sample::<f64, _>(StandardNormal));
    let k = 5;
    let model = pca_fit(&x, k).unwrap();
    let comps = model.components();
    let gram = comps.dot(&comps.t());
    let ortho = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .map(|(i, j)| (gram[[i, j]] - if i == j { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);

    let xm = DMatrix::from_fn(6, 40, |i, j| x[[i, j]]);
    let mean = xm.row_mean();
    let centred = DMatrix::from_fn(6, 40, |i, j| xm[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / 5.0;
    let mut direct: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    direct.sort_by(|a, b| b.total_cmp(a));
    let eig_gap = (0..k)
        .map(|i| (direct[i] - model.explained_variance()[i]).abs())
        .fold(0.0, f64::max);

    let z = model.transform(&x).unwrap();
    let var_gap = (0..k)
        .map(|c| {
            let col = z.column(c);
            let m = col.mean().unwrap();
            let v = col.iter().map(|t| (t - m).powi(2)).sum::<f64>() / 5.0;
            (v - model.explained_variance()[c]).abs()
        })
        .fold(0.0, f64::max);
    verdict(
        ortho <= 1e-10 && eig_gap <= 1e-8 && var_gap <= 1e-8,
        format!("orthonormality {ortho:.1e}, eigenvalue gap {eig_gap:.1e}, projected-variance gap {var_gap:.1e}"),
    )
}

/// Selection versus all genes on a planted 60×200 set, exact ZZ kernel on 4
/// qubits, averaged over 3 seeds.
fn end_to_end() -> Verdict {
    let start = Instant::now();
    let (mut with, mut without) = (Vec::new(), Vec::new());
    for s in 0..3u64 {
        let seed = 7000 + s;
        let planted = planted_dataset(60, 5, 195, 2.0, seed);
        let mut cfg = PipelineConfig::default();
        for (key, value) in [("pca.k", "4"), ("qk.map", "zz"), ("qk.mode", "exact"), ("hho.validation", "kfold:5")] {
            cfg.set(key, value).unwrap();
        }
        cfg.seed = seed;
        cfg.phase_hi = one_period_phase_hi(FeatureMapKind::Zz, cfg.phase_lo);
        with.push(run_full_on(&planted.dataset, &cfg, true).unwrap().report.accuracy);
        without.push(run_full_on(&planted.dataset, &cfg, false).unwrap().report.accuracy);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (a, b) = (mean(&with), mean(&without));
    let t = start.elapsed();
    verdict(
        a >= b && a >= 0.85 && t < Duration::from_secs(300),
        format!("mean accuracy with selection {a:.3} {with:?}, all genes {b:.3} {without:?}, {}", secs(t)),
    )
}

/// Score formulas by hand arithmetic and rank AUC by pair enumeration.
fn metric_checks() -> Verdict {
    let mut r = rng(9);
    let mut worst = 0.0f64;
    let mut counts_ok = true;
    for _ in 0..10 {
        let n = r.random_range(8..80);
        let truth: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
        let pred: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
        let count = |t: i8, p: i8| truth.iter().zip(&pred).filter(|(&a, &b)| a == t && b == p).count();
        let (tp, tn, fp, fn_) = (count(1, 1), count(-1, -1), count(-1, 1), count(1, -1));
        let cm = confusion(&truth, &pred).unwrap();
        counts_ok &= (cm.tp, cm.tn, cm.fp, cm.fn_) == (tp, tn, fp, fn_);
        let s = scores_from_confusion(&cm).unwrap();
        let f = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = f(tp, tp + fp);
        let recall = f(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
        for (got, want) in [
            (s.accuracy, f(tp + tn, n)),
            (s.precision, precision),
            (s.recall, recall),
            (s.specificity, f(tn, tn + fp)),
            (s.f1, f1),
            (s.fpr, f(fp, fp + tn)),
        ] {
            worst = worst.max((got - want).abs());
        }
    }

    let mut auc_exact = true;
    for _ in 0..300 {
        let n = r.random_range(2..=12);
        let mut labels: Vec<i8> = (0..n).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect();
        labels[0] = 1;
        labels[1] = -1;
        let scores: Vec<f64> = (0..n).map(|_| f64::from(r.random_range(0..5)) * 0.25).collect();
        auc_exact &= roc_auc(&labels, &scores).unwrap().auc == common::pairwise_concordance(&labels, &scores);
    }
    verdict(
        counts_ok && worst <= 1e-12 && auc_exact,
        format!("confusion counts match = {counts_ok}, max formula |Δ| = {worst:.1e}, rank AUC == pair count on 300 inputs = {auc_exact}"),
    )
}

/// `run-all` twice from one config: identical metrics.json bytes.
fn determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("planted.csv");
    write_csv(&planted_dataset(40, 4, 36, 2.5, 31).dataset, &data).unwrap();
    let mut cfg = PipelineConfig::default();
    for (key, value) in [("pca.k", "3"), ("hho.t", "20"), ("qk.reps", "2")] {
        cfg.set(key, value).unwrap();
    }
    cfg.set("data.path", data.to_str().unwrap()).unwrap();
    cfg.set("output.dir", dir.path().join("run").to_str().unwrap()).unwrap();
    let read = || std::fs::read(dir.path().join("run/metrics.json")).unwrap();
    run_full(&cfg, true).unwrap();
    let first = read();
    run_full(&cfg, true).unwrap();
    let second = read();
    verdict(first == second && !first.is_empty(), format!("{} bytes, identical = {}", first.len(), first == second))
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() {
    let criteria: [Criterion; 10] = [
        ("simulator matches dense unitaries", simulator_oracle),
        ("kernel axioms", kernel_axioms),
        ("shot estimator calibration", shot_calibration),
        ("smo matches QP oracle", smo_correctness),
        ("bhho planted-gene recovery", bhho_recovery),
        ("smote counts and convexity", smote_distribution),
        ("pca orthonormality and variances", pca_checks),
        ("end-to-end selection vs all genes", end_to_end),
        ("metric formulas and rank auc", metric_checks),
        ("run-all determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!("[{}] {:>2} {name}: {}", if v.pass { "PASS" } else { "FAIL" }, i + 1, v.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
