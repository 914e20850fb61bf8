//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! maximize   Σ αᵢ − ½ Σᵢ Σⱼ αᵢ αⱼ yᵢ yⱼ K(xᵢ, xⱼ)
//! subject to 0 ≤ αᵢ ≤ Cᵢ,  Σ αᵢ yᵢ = 0
//! ```
//!
//! Each step picks the maximal violating pair and solves the two-variable
//! subproblem analytically. The solver keeps the gradient `G = Qα − 1`
//! (with `Qᵢⱼ = yᵢ yⱼ Kᵢⱼ`) up to date, so the optimality gap
//! `max_{I_up} −yG − min_{I_low} −yG` is available every iteration.

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use crate::error::{Error, Result};

/// Curvature floor for non-PSD kernels (sigmoid) and duplicate points.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoParams {
    /// Soft-margin penalty.
    pub c: f64,
    /// Stop once the maximal violation drops below this.
    pub tol: f64,
    /// Iteration budget in sweeps of `n` pair updates; `None` = `10·n` sweeps.
    pub max_passes: Option<usize>,
    /// Multipliers of `c` for the negative and positive class.
    pub class_weights: [f64; 2],
    /// Record the dual objective after every update.
    pub record_trace: bool,
}

impl Default for SmoParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: None,
            class_weights: [1.0, 1.0],
            record_trace: false,
        }
    }
}

impl SmoParams {
    pub fn with_c(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }
}

fn unit_weights(w: &[f64; 2]) -> bool {
    *w == [1.0, 1.0]
}

fn default_weights() -> [f64; 2] {
    [1.0, 1.0]
}

/// A trained binary classifier; only support vectors (α > 0) are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinarySvmModel {
    pub kernel: Kernel,
    pub c: f64,
    #[serde(default = "default_weights", skip_serializing_if = "unit_weights")]
    pub class_weights: [f64; 2],
    pub bias: f64,
    /// αᵢ·yᵢ for each support vector.
    pub dual_coefs: Vec<f64>,
    pub support_vectors: Vec<Vec<f64>>,
}

impl BinarySvmModel {
    /// Σ dual_coefᵢ·K(svᵢ, v) + b
    pub fn decision(&self, v: &[f64]) -> Result<f64> {
        if let Some(sv) = self.support_vectors.first() {
            if sv.len() != v.len() {
                return Err(Error::Contract(format!(
                    "model expects {} features, got {}",
                    sv.len(),
                    v.len()
                )));
            }
        }
        Ok(self.decision_unchecked(v))
    }

    pub(crate) fn decision_unchecked(&self, v: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coefs)
            .map(|(sv, coef)| coef * self.kernel.apply(sv, v))
            .sum::<f64>()
            + self.bias
    }

    pub fn predict(&self, v: &[f64]) -> Result<f64> {
        Ok(if self.decision(v)? >= 0.0 { 1.0 } else { -1.0 })
    }
}

/// Everything the solver knows at exit, for diagnostics and tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    /// Dual variables for every training point (not just support vectors).
    pub alphas: Vec<f64>,
    /// Per-point upper bounds `Cᵢ`.
    pub upper: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `m − M` optimality gap.
    pub gap: f64,
    pub objective: f64,
    /// Dual objective after each accepted update, when requested.
    pub trace: Vec<f64>,
}

pub fn solve_binary(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &Kernel,
    params: &SmoParams,
) -> Result<BinarySvmModel> {
    solve_binary_detailed(points, labels, kernel, params).map(|(m, _)| m)
}

pub fn solve_binary_detailed(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &Kernel,
    params: &SmoParams,
) -> Result<(BinarySvmModel, SolveReport)> {
    validate(points, labels, kernel, params)?;
    let n = points.len();
    let gram = gram_matrix(points, kernel)?;
    let k = |i: usize, j: usize| gram[i * n + j];

    let upper: Vec<f64> = labels
        .iter()
        .map(|&y| params.c * params.class_weights[usize::from(y > 0.0)])
        .collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut trace = Vec::new();

    let max_iter = params.max_passes.unwrap_or(10 * n).saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iter {
        let Some((i, j, g)) = select_pair(&alpha, &upper, labels, &grad) else {
            // Every point is pinned; the gap is trivially zero.
            gap = 0.0;
            converged = true;
            break;
        };
        gap = g;
        if gap < params.tol {
            converged = true;
            break;
        }
        iterations += 1;

        // Move along αᵢ += yᵢ·t, αⱼ −= yⱼ·t, which preserves Σ αy.
        let (yi, yj) = (labels[i], labels[j]);
        let eta = (k(i, i) + k(j, j) - 2.0 * k(i, j)).max(TAU);
        let unconstrained = gap / eta;
        let room_i = if yi > 0.0 {
            upper[i] - alpha[i]
        } else {
            alpha[i]
        };
        let room_j = if yj > 0.0 {
            alpha[j]
        } else {
            upper[j] - alpha[j]
        };
        let t = unconstrained.min(room_i).min(room_j);

        let old_i = alpha[i];
        let old_j = alpha[j];
        alpha[i] = if t == room_i {
            if yi > 0.0 {
                upper[i]
            } else {
                0.0
            }
        } else {
            (old_i + yi * t).clamp(0.0, upper[i])
        };
        alpha[j] = if t == room_j {
            if yj > 0.0 {
                0.0
            } else {
                upper[j]
            }
        } else {
            (old_j - yj * t).clamp(0.0, upper[j])
        };
        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for (r, g) in grad.iter_mut().enumerate() {
            *g += labels[r] * (yi * k(r, i) * di + yj * k(r, j) * dj);
        }

        if params.record_trace {
            trace.push(dual_objective(&alpha, &grad));
        }
    }

    let bias = compute_bias(&alpha, &upper, labels, &grad);
    if !bias.is_finite() || alpha.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numeric("solver produced non-finite values".into()));
    }
    let objective = dual_objective(&alpha, &grad);

    let (support_vectors, dual_coefs) = alpha
        .iter()
        .zip(labels)
        .zip(points)
        .filter(|((a, _), _)| **a > 0.0)
        .map(|((a, y), p)| (p.clone(), a * y))
        .unzip();
    let model = BinarySvmModel {
        kernel: *kernel,
        c: params.c,
        class_weights: params.class_weights,
        bias,
        dual_coefs,
        support_vectors,
    };
    let report = SolveReport {
        alphas: alpha,
        upper,
        bias,
        iterations,
        converged,
        gap,
        objective,
        trace,
    };
    Ok((model, report))
}

fn validate(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &Kernel,
    params: &SmoParams,
) -> Result<()> {
    if points.len() != labels.len() {
        return Err(Error::Contract(format!(
            "{} points but {} labels",
            points.len(),
            labels.len()
        )));
    }
    if points.len() < 2 {
        return Err(Error::Contract("need at least two training points".into()));
    }
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::Contract("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1.0) && labels.contains(&-1.0)) {
        return Err(Error::Contract(
            "both classes must be present to train a binary SVM".into(),
        ));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::Contract(
            "training points differ in dimension".into(),
        ));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Contract("non-finite training feature".into()));
    }
    let positive = |v: f64| v.is_finite() && v > 0.0;
    if !positive(params.c) || !params.class_weights.iter().all(|w| positive(*w)) {
        return Err(Error::Config("C and class weights must be positive".into()));
    }
    if !positive(params.tol) {
        return Err(Error::Config("tolerance must be positive".into()));
    }
    kernel.validate()
}

fn gram_matrix(points: &[Vec<f64>], kernel: &Kernel) -> Result<Vec<f64>> {
    let n = points.len();
    let mut gram = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.apply(&points[i], &points[j]);
            if !v.is_finite() {
                return Err(Error::Numeric(format!(
                    "kernel value K({i}, {j}) is not finite"
                )));
            }
            gram[i * n + j] = v;
            gram[j * n + i] = v;
        }
    }
    Ok(gram)
}

fn in_up(alpha: f64, upper: f64, y: f64) -> bool {
    (y > 0.0 && alpha < upper) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, upper: f64, y: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < upper)
}

/// Maximal violating pair `(i, j)` and its gap, or `None` if either index
/// set is empty.
fn select_pair(
    alpha: &[f64],
    upper: &[f64],
    labels: &[f64],
    grad: &[f64],
) -> Option<(usize, usize, f64)> {
    let mut best_up: Option<(usize, f64)> = None;
    let mut best_low: Option<(usize, f64)> = None;
    for t in 0..alpha.len() {
        let score = -labels[t] * grad[t];
        if in_up(alpha[t], upper[t], labels[t]) && best_up.is_none_or(|(_, s)| score > s) {
            best_up = Some((t, score));
        }
        if in_low(alpha[t], upper[t], labels[t]) && best_low.is_none_or(|(_, s)| score < s) {
            best_low = Some((t, score));
        }
    }
    let ((i, m), (j, big_m)) = (best_up?, best_low?);
    Some((i, j, m - big_m))
}

/// Average of `−yG` over free variables, else the midpoint of the feasible
/// interval `[max_{I_up} −yG, min_{I_low} −yG]`.
fn compute_bias(alpha: &[f64], upper: &[f64], labels: &[f64], grad: &[f64]) -> f64 {
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for t in 0..alpha.len() {
        let score = -labels[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < upper[t] {
            free_sum += score;
            free_count += 1;
        } else {
            if in_up(alpha[t], upper[t], labels[t]) {
                lo = lo.max(score);
            }
            if in_low(alpha[t], upper[t], labels[t]) {
                hi = hi.min(score);
            }
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else if lo.is_finite() && hi.is_finite() {
        (lo + hi) / 2.0
    } else if lo.is_finite() {
        lo
    } else if hi.is_finite() {
        hi
    } else {
        0.0
    }
}

/// `Σα − ½αᵀQα`, using `Qα = G + 1`.
fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    -0.5 * alpha
        .iter()
        .zip(grad)
        .map(|(a, g)| a * (g - 1.0))
        .sum::<f64>()
}

/// Dual objective of an arbitrary α for the given problem, computed from
/// scratch.
pub fn dual_objective_of(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &Kernel,
    alpha: &[f64],
) -> f64 {
    let mut quad = 0.0;
    for i in 0..points.len() {
        for j in 0..points.len() {
            quad +=
                alpha[i] * alpha[j] * labels[i] * labels[j] * kernel.apply(&points[i], &points[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest three-case KKT violation of a solution, measured on the margin
/// `yᵢ·f(xᵢ)` recomputed from scratch with the report's bias.
pub fn max_kkt_violation(
    points: &[Vec<f64>],
    labels: &[f64],
    kernel: &Kernel,
    report: &SolveReport,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, x) in points.iter().enumerate() {
        let f: f64 = points
            .iter()
            .zip(labels)
            .zip(&report.alphas)
            .map(|((p, y), a)| a * y * kernel.apply(p, x))
            .sum::<f64>()
            + report.bias;
        let margin = labels[i] * f;
        let a = report.alphas[i];
        let v = if a <= 0.0 {
            (1.0 - margin).max(0.0)
        } else if a >= report.upper[i] {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(v);
    }
    worst
}
