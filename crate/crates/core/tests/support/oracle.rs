//! Brute-force reference solver for the soft-margin dual: projected-gradient
//! ascent with a diminishing step, independent of the SMO code paths.

pub const ORACLE_ITERATIONS: usize = 1_000_000;
pub const MAX_POINTS: usize = 8;

pub struct OracleSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
}

pub fn gram(points: &[Vec<f64>], k: &dyn Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|a| points.iter().map(|b| k(a, b)).collect())
        .collect()
}

pub fn objective(q: &[Vec<f64>], alpha: &[f64]) -> f64 {
    let mut quad = 0.0;
    for i in 0..alpha.len() {
        for j in 0..alpha.len() {
            quad += alpha[i] * alpha[j] * q[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Euclidean projection of `v` onto {0 ≤ a ≤ c, Σ yᵢ aᵢ = 0}. The
/// multiplier λ solves h(λ) = Σ yᵢ clip(vᵢ − λ yᵢ) = 0; h is piecewise
/// linear and non-increasing, so the root is found exactly between
/// breakpoints.
pub fn project(v: &[f64], y: &[f64], c: &[f64], out: &mut [f64]) {
    let n = v.len();
    let h = |lam: f64| -> f64 {
        (0..n)
            .map(|i| y[i] * (v[i] - lam * y[i]).clamp(0.0, c[i]))
            .sum()
    };
    let mut buf = [0.0f64; 2 * MAX_POINTS];
    let bps = &mut buf[..2 * n];
    for i in 0..n {
        bps[2 * i] = y[i] * v[i];
        bps[2 * i + 1] = y[i] * (v[i] - c[i]);
    }
    bps.sort_unstable_by(f64::total_cmp);
    // h(bps[0]) ≥ 0 ≥ h(bps[last]); bisect over breakpoint indices.
    let (mut lo, mut hi) = (0usize, bps.len() - 1);
    let (mut hlo, mut hhi) = (h(bps[lo]), h(bps[hi]));
    let lam = if hlo <= 0.0 {
        bps[lo]
    } else if hhi >= 0.0 {
        bps[hi]
    } else {
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let hm = h(bps[mid]);
            if hm > 0.0 {
                lo = mid;
                hlo = hm;
            } else {
                hi = mid;
                hhi = hm;
            }
        }
        if hlo == hhi {
            bps[lo]
        } else {
            bps[lo] + (bps[hi] - bps[lo]) * hlo / (hlo - hhi)
        }
    };
    for i in 0..n {
        out[i] = (v[i] - lam * y[i]).clamp(0.0, c[i]);
    }
}

/// Maximizes Σα − ½αᵀQα over the feasible set for `ORACLE_ITERATIONS`
/// steps of size (1 + 0.9/√(t+1)) / L, L = largest row sum of |Q|. The
/// best iterate seen is returned.
pub fn solve(kmat: &[Vec<f64>], y: &[f64], c: f64) -> OracleSolution {
    let n = y.len();
    assert!(n <= MAX_POINTS);
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * kmat[i][j]).collect())
        .collect();
    let lip = q
        .iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let mut qf = [[0.0f64; MAX_POINTS]; MAX_POINTS];
    for i in 0..n {
        qf[i][..n].copy_from_slice(&q[i]);
    }
    let cap = [c; MAX_POINTS];
    let mut alpha = [0.0f64; MAX_POINTS];
    let mut next = [0.0f64; MAX_POINTS];
    let mut trial = [0.0f64; MAX_POINTS];
    let mut best = alpha;
    let mut best_obj = objective(&q, &alpha[..n]);
    for t in 0..ORACLE_ITERATIONS {
        let step = (1.0 + 0.9 / ((t + 1) as f64).sqrt()) / lip;
        for i in 0..n {
            let qa: f64 = qf[i][..n].iter().zip(&alpha[..n]).map(|(q, a)| q * a).sum();
            trial[i] = alpha[i] + step * (1.0 - qa);
        }
        project(&trial[..n], y, &cap[..n], &mut next[..n]);
        std::mem::swap(&mut alpha, &mut next);
        if t % 64 == 63 || t + 1 == ORACLE_ITERATIONS {
            let obj = objective(&q, &alpha[..n]);
            if obj > best_obj {
                best_obj = obj;
                best = alpha;
            }
        }
    }
    let best = best[..n].to_vec();
    let bias = bias_of(kmat, y, &best, c);
    OracleSolution {
        alpha: best,
        bias,
        objective: best_obj,
    }
}

/// Bias from the margin conditions: mean over clearly free multipliers,
/// otherwise the midpoint of the interval allowed by the bound ones.
fn bias_of(kmat: &[Vec<f64>], y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let n = y.len();
    let eps = 1e-7 * c.max(1.0);
    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - (0..n).map(|j| alpha[j] * y[j] * kmat[i][j]).sum::<f64>())
        .collect();
    let free: Vec<usize> = (0..n)
        .filter(|&i| alpha[i] > eps && alpha[i] < c - eps)
        .collect();
    if !free.is_empty() {
        return free.iter().map(|&i| resid[i]).sum::<f64>() / free.len() as f64;
    }
    // At α=0: y·f ≥ 1; at α=C: y·f ≤ 1. Each gives a one-sided bound on b.
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..n {
        let at_zero = alpha[i] <= eps;
        if (y[i] > 0.0) == at_zero {
            lo = lo.max(resid[i]);
        } else {
            hi = hi.min(resid[i]);
        }
    }
    if lo.is_finite() && hi.is_finite() {
        0.5 * (lo + hi)
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}

pub fn decision(kmat_row: &[f64], y: &[f64], alpha: &[f64], bias: f64) -> f64 {
    kmat_row
        .iter()
        .zip(y)
        .zip(alpha)
        .map(|((k, y), a)| a * y * k)
        .sum::<f64>()
        + bias
}
