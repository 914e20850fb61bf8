use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::kernel::KernelSpec;
use super::multiclass::{train_on_rows, BandPredictor, TrainOptions};
use crate::catalog::{Dataset, FeatureVector};
use crate::error::{Error, Result};
use crate::pricebands::PriceBandSpec;

/// One candidate configuration of a model-selection grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kernel: KernelSpec,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    /// Position in the input grid.
    pub grid_index: usize,
    pub config: GridPoint,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

/// Fold id for every record: each band is shuffled on its own, then bands
/// are dealt round-robin into `folds` buckets with one counter running
/// across bands, so fold sizes differ by at most one.
pub fn stratified_folds(
    ds: &Dataset,
    bands: &PriceBandSpec,
    folds: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::Contract(format!(
            "need at least 2 folds, got {folds}"
        )));
    }
    let mut by_band: BTreeMap<usize, Vec<usize>> =
        (0..bands.len()).map(|b| (b, Vec::new())).collect();
    for (i, r) in ds.records.iter().enumerate() {
        by_band
            .get_mut(&bands.assign(r.original_price)?)
            .expect("every band index is pre-seeded")
            .push(i);
    }
    for (b, members) in &by_band {
        if members.len() < folds {
            return Err(Error::Contract(format!(
                "band `{}` has {} records, fewer than {folds} folds",
                bands.name(*b),
                members.len()
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; ds.len()];
    let mut counter = 0;
    for members in by_band.values_mut() {
        members.shuffle(&mut rng);
        for &i in members.iter() {
            assignment[i] = counter % folds;
            counter += 1;
        }
    }
    Ok(assignment)
}

/// Stratified k-fold accuracy for every grid point, ranked by mean
/// accuracy (descending, ties in grid order). Scaling and default gamma are
/// refit inside every fold.
pub fn cross_validate(
    ds: &Dataset,
    bands: &PriceBandSpec,
    grid: &[GridPoint],
    folds: usize,
    seed: u64,
    base: &TrainOptions,
) -> Result<Vec<CvScore>> {
    let assignment = stratified_folds(ds, bands, folds, seed)?;
    let labels: Vec<usize> = ds
        .records
        .iter()
        .map(|r| bands.assign(r.original_price))
        .collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = ds
        .records
        .iter()
        .map(|r| r.features.to_array().to_vec())
        .collect();
    let names = bands.names();

    let mut scores = Vec::with_capacity(grid.len());
    for (grid_index, point) in grid.iter().enumerate() {
        let opts = TrainOptions {
            kernel: point.kernel,
            c: point.c,
            ..*base
        };
        let mut fold_accuracies = Vec::with_capacity(folds);
        for fold in 0..folds {
            let (mut train_rows, mut train_labels) = (Vec::new(), Vec::new());
            let mut held_out = Vec::new();
            for (i, &f) in assignment.iter().enumerate() {
                if f == fold {
                    held_out.push(i);
                } else {
                    train_rows.push(rows[i].clone());
                    train_labels.push(labels[i]);
                }
            }
            let model = train_on_rows(&train_rows, &train_labels, &names, &opts)?;
            let mut hits = 0usize;
            for &i in &held_out {
                let features = FeatureVector::from_array(
                    rows[i]
                        .as_slice()
                        .try_into()
                        .expect("five features per row"),
                );
                if model.predict_index(&features)? == labels[i] {
                    hits += 1;
                }
            }
            fold_accuracies.push(hits as f64 / held_out.len() as f64);
        }
        let mean_accuracy = fold_accuracies.iter().sum::<f64>() / folds as f64;
        scores.push(CvScore {
            grid_index,
            config: *point,
            mean_accuracy,
            fold_accuracies,
        });
    }
    // Stable sort keeps grid order among equal means.
    scores.sort_by(|a, b| b.mean_accuracy.total_cmp(&a.mean_accuracy));
    Ok(scores)
}
