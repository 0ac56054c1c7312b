//! Independent oracles for the acceptance suite. Nothing here calls the
//! library's simulator, solver or metric code.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qkgene::quantum::Gate;

pub type CMatrix = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(m: [[Complex64; 2]; 2]) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[m[0][0], m[0][1], m[1][0], m[1][1]])
}

/// `⊗` over qubits with qubit 0 as the least significant index bit; `ops`
/// maps qubit → operator, identity elsewhere.
fn placed(n: usize, ops: &[(usize, CMatrix)]) -> CMatrix {
    let mut out = CMatrix::identity(1, 1);
    for q in (0..n).rev() {
        let f = ops
            .iter()
            .find(|(k, _)| *k == q)
            .map_or_else(|| CMatrix::identity(2, 2), |(_, m)| m.clone());
        out = out.kronecker(&f);
    }
    out
}

/// Matrix exponential by scaling and squaring with a Taylor core.
pub fn expm(a: &CMatrix) -> CMatrix {
    let norm = a.iter().map(|v| v.norm()).sum::<f64>();
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / c(2f64.powi(s), 0.0);
    let dim = a.nrows();
    let mut sum = CMatrix::identity(dim, dim);
    let mut term = CMatrix::identity(dim, dim);
    for k in 1..30 {
        term = &term * &scaled / c(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn gate_unitary(n: usize, g: &Gate) -> CMatrix {
    let zero = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match *g {
        Gate::H(q) => placed(n, &[(q, single([[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]))]),
        Gate::Phase { qubit, theta } => placed(n, &[(qubit, single([[one, zero], [zero, c(theta.cos(), theta.sin())]]))]),
        Gate::Rz { qubit, theta } => {
            let (hc, hs) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            placed(n, &[(qubit, single([[c(hc, -hs), zero], [zero, c(hc, hs)]]))])
        }
        Gate::Cx { control, target } => {
            let p0 = single([[one, zero], [zero, zero]]);
            let p1 = single([[zero, zero], [zero, one]]);
            let x = single([[zero, one], [one, zero]]);
            placed(n, &[(control, p0)]) + placed(n, &[(control, p1), (target, x)])
        }
        Gate::Ryy { theta, q1, q2 } => {
            let y = single([[zero, c(0.0, -1.0)], [c(0.0, 1.0), zero]]);
            let yy = placed(n, &[(q1, y.clone()), (q2, y)]);
            expm(&(yy * c(0.0, -theta / 2.0)))
        }
    }
}

/// `U_m ⋯ U_1 |0…0⟩` by dense multiplication.
pub fn dense_state(n: usize, gates: &[Gate]) -> DVector<Complex64> {
    let dim = 1 << n;
    let mut u = CMatrix::identity(dim, dim);
    for g in gates {
        u = gate_unitary(n, g) * u;
    }
    u.column(0).into_owned()
}

/// Solves `max Σα - ½αᵀQα` s.t. `0 ≤ α ≤ C`, `yᵀα = 0` by accelerated
/// projected gradient. Returns the optimal objective.
pub fn qp_dual_optimum(q: &DMatrix<f64>, y: &[f64], cap: f64) -> f64 {
    let n = y.len();
    let lipschitz = q.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lipschitz;
    let objective = |a: &DVector<f64>| a.sum() - 0.5 * a.dot(&(q * a));
    let mut x = DVector::zeros(n);
    let mut prev = x.clone();
    let mut momentum = 1.0f64;
    for _ in 0..200_000 {
        let next_m = (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt()) / 2.0;
        let v = &x + (&x - &prev) * ((momentum - 1.0) / next_m);
        let grad = DVector::from_element(n, 1.0) - q * &v;
        let cand = project(&(v + grad * step), y, cap);
        prev = std::mem::replace(&mut x, cand);
        momentum = next_m;
        if (&x - &prev).amax() < 1e-15 {
            break;
        }
    }
    objective(&x)
}

/// Euclidean projection onto `{0 ≤ a ≤ C, yᵀa = 0}`; bisection on the
/// multiplier of the equality constraint.
fn project(v: &DVector<f64>, y: &[f64], cap: f64) -> DVector<f64> {
    let at = |lam: f64| DVector::from_iterator(v.len(), v.iter().zip(y).map(|(&vi, &yi)| (vi - lam * yi).clamp(0.0, cap)));
    let resid = |lam: f64| at(lam).iter().zip(y).map(|(a, yi)| a * yi).sum::<f64>();
    let (mut lo, mut hi) = (-1e6, 1e6);
    // resid is non-increasing in lam
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if resid(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Maximal violating-pair gap of the SVM dual at `alpha`, recomputed from
/// scratch.
pub fn kkt_gap(q: &DMatrix<f64>, y: &[f64], alpha: &[f64], cap: f64) -> f64 {
    let a = DVector::from_column_slice(alpha);
    let grad = q * a - DVector::from_element(y.len(), 1.0);
    let (mut up, mut low) = (f64::NEG_INFINITY, f64::INFINITY);
    for t in 0..y.len() {
        let v = -y[t] * grad[t];
        let in_up = (y[t] > 0.0 && alpha[t] < cap) || (y[t] < 0.0 && alpha[t] > 0.0);
        let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < cap);
        if in_up {
            up = up.max(v);
        }
        if in_low {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

/// Probability that a random positive outscores a random negative, ties
/// counted half, by enumerating every pair.
pub fn pairwise_concordance(labels: &[i8], scores: &[f64]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        for (j, &lj) in labels.iter().enumerate() {
            if li == 1 && lj == -1 {
                pairs += 1;
                twice += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Exact `Σ values` as an integer multiple of `2^scale`, or `None` when the
/// exponent spread does not fit in an `i128`.
pub fn exact_sum(values: &[f64]) -> Option<(i128, i32)> {
    // finite f64 = mantissa · 2^exp with a 53-bit integer mantissa
    let parts: Vec<(i64, i32)> = values
        .iter()
        .filter(|v| **v != 0.0)
        .map(|&v| {
            let bits = v.to_bits();
            let raw_exp = ((bits >> 52) & 0x7ff) as i32;
            let frac = (bits & ((1 << 52) - 1)) as i64;
            let (m, e) = if raw_exp == 0 { (frac, -1074) } else { (frac | (1 << 52), raw_exp - 1075) };
            (if v < 0.0 { -m } else { m }, e)
        })
        .collect();
    let scale = parts.iter().map(|p| p.1).min().unwrap_or(0);
    let mut total = 0i128;
    for (m, e) in parts {
        let shift = e - scale;
        if shift > 70 {
            return None;
        }
        total = total.checked_add(i128::from(m) << shift)?;
    }
    Some((total, scale))
}
