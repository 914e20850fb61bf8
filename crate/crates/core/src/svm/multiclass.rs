use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::scaler::ScalerParams;
use super::smo::{solve_binary, BinarySvmModel, SmoParams};
use crate::catalog::{Dataset, FeatureVector};
use crate::error::{Error, Result};
use crate::pricebands::PriceBandSpec;

/// Anything that maps a feature vector to one of an ordered set of bands.
pub trait BandPredictor {
    fn class_names(&self) -> &[String];

    /// Index into [`BandPredictor::class_names`].
    fn predict_index(&self, features: &FeatureVector) -> Result<usize>;

    fn predict_band(&self, features: &FeatureVector) -> Result<&str> {
        let idx = self.predict_index(features)?;
        Ok(&self.class_names()[idx])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    None,
    /// Scale each side's C by `n / (2·n_side)`.
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub max_passes: Option<usize>,
    pub class_weighting: ClassWeighting,
    /// Train the per-class problems on separate threads. The result is
    /// identical to sequential training.
    pub parallel: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::new(super::KernelKind::Rbf),
            c: 1.0,
            tol: 1e-3,
            max_passes: None,
            class_weighting: ClassWeighting::None,
            parallel: true,
        }
    }
}

/// One-vs-rest ensemble over standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MulticlassSvmModel {
    pub scaler: ScalerParams,
    pub class_names: Vec<String>,
    pub binaries: Vec<BinarySvmModel>,
}

impl MulticlassSvmModel {
    /// Decision value of every one-vs-rest machine, in class order.
    pub fn decision_values(&self, features: &FeatureVector) -> Result<Vec<f64>> {
        let scaled = self.scaler.apply(&features.to_array())?;
        self.binaries.iter().map(|b| b.decision(&scaled)).collect()
    }

    /// Checks the model's classes against a band spec, by name and order.
    pub fn check_bands(&self, bands: &PriceBandSpec) -> Result<()> {
        if self.class_names == bands.names() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "model classes {:?} do not match band spec {:?}",
                self.class_names,
                bands.names()
            )))
        }
    }
}

impl BandPredictor for MulticlassSvmModel {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Argmax of the decision values; ties go to the lowest index.
    fn predict_index(&self, features: &FeatureVector) -> Result<usize> {
        let scores = self.decision_values(features)?;
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::Numeric("non-finite decision value".into()));
            }
            if *s > scores[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

/// `1 / (d · mean per-feature variance)` of the scaled training rows; falls
/// back to `1 / d` when every feature is constant.
pub fn default_gamma(scaled: &[Vec<f64>]) -> f64 {
    let d = scaled.first().map_or(1, Vec::len).max(1);
    let mean_var = (0..d)
        .map(|j| {
            let col: Vec<f64> = scaled.iter().map(|r| r[j]).collect();
            let (_, sd) = crate::pricebands::mean_and_sample_sd(&col);
            sd * sd
        })
        .sum::<f64>()
        / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

pub fn train_multiclass(
    ds: &Dataset,
    bands: &PriceBandSpec,
    opts: &TrainOptions,
) -> Result<MulticlassSvmModel> {
    let labels: Vec<usize> = ds
        .records
        .iter()
        .map(|r| bands.assign(r.original_price))
        .collect::<Result<_>>()?;
    let raw: Vec<Vec<f64>> = ds
        .records
        .iter()
        .map(|r| r.features.to_array().to_vec())
        .collect();
    train_on_rows(&raw, &labels, &bands.names(), opts)
}

/// Trains on pre-labelled rows; `labels[i]` indexes `class_names`.
pub fn train_on_rows(
    rows: &[Vec<f64>],
    labels: &[usize],
    class_names: &[String],
    opts: &TrainOptions,
) -> Result<MulticlassSvmModel> {
    if class_names.len() < 2 {
        return Err(Error::Contract("need at least two classes".into()));
    }
    let scaler = ScalerParams::fit(rows)?;
    let scaled: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| scaler.apply(r))
        .collect::<Result<_>>()?;
    let kernel = opts.kernel.resolve(default_gamma(&scaled))?;

    for (k, name) in class_names.iter().enumerate() {
        let members = labels.iter().filter(|&&l| l == k).count();
        if members == 0 || members == labels.len() {
            return Err(Error::Contract(format!(
                "band `{name}` has {members} of {} training records; one-vs-rest needs both sides",
                labels.len()
            )));
        }
    }

    let train_one = |k: usize| -> Result<BinarySvmModel> {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == k { 1.0 } else { -1.0 })
            .collect();
        let class_weights = match opts.class_weighting {
            ClassWeighting::None => [1.0, 1.0],
            ClassWeighting::Balanced => {
                let n = y.len() as f64;
                let pos = y.iter().filter(|v| **v > 0.0).count() as f64;
                [n / (2.0 * (n - pos)), n / (2.0 * pos)]
            }
        };
        let params = SmoParams {
            c: opts.c,
            tol: opts.tol,
            max_passes: opts.max_passes,
            class_weights,
            record_trace: false,
        };
        solve_binary(&scaled, &y, &kernel, &params)
    };

    let binaries: Vec<BinarySvmModel> = if opts.parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..class_names.len())
                .map(|k| s.spawn(move || train_one(k)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("training thread panicked"))
                .collect::<Result<_>>()
        })?
    } else {
        (0..class_names.len())
            .map(train_one)
            .collect::<Result<_>>()?
    };

    Ok(MulticlassSvmModel {
        scaler,
        class_names: class_names.to_vec(),
        binaries,
    })
}

/// Fraction of records whose predicted band equals the band of their
/// original price. An empty dataset scores 0.
pub fn accuracy<P: BandPredictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    bands: &PriceBandSpec,
) -> Result<f64> {
    if ds.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for r in &ds.records {
        let truth = bands.assign_name(r.original_price)?;
        if model.predict_band(&r.features)? == truth {
            hits += 1;
        }
    }
    Ok(hits as f64 / ds.len() as f64)
}
