#![allow(dead_code)]

pub mod oracle;

use rand::Rng;
use salefold_core::svm::Kernel;

pub struct Problem {
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub kernel: Kernel,
    pub c: f64,
}

impl Problem {
    pub fn gram(&self) -> Vec<Vec<f64>> {
        let k = self.kernel;
        oracle::gram(&self.points, &|a, b| k.eval(a, b).unwrap())
    }
}

/// 2–8 points in 1–3 dimensions with both labels present, a linear or RBF
/// kernel and C drawn from {0.1, 1, 10}.
pub fn random_problem<R: Rng>(rng: &mut R) -> Problem {
    let n = rng.gen_range(2..=8);
    let d = rng.gen_range(1..=3);
    let points: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let mut labels: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    labels[0] = 1.0;
    labels[1] = -1.0;
    let kernel = if rng.gen_bool(0.5) {
        Kernel::Linear
    } else {
        Kernel::Rbf {
            gamma: rng.gen_range(0.1..2.0),
        }
    };
    let c = [0.1, 1.0, 10.0][rng.gen_range(0..3)];
    Problem {
        points,
        labels,
        kernel,
        c,
    }
}
