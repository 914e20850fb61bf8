use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pricebands::mean_and_sample_sd;

/// Per-feature standardization fitted on a training set.
///
/// A feature with zero spread (or a single training row) keeps sd = 1 and
/// is flagged; such a column maps to 0 on its training data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    /// `true` where sd was substituted by 1.
    pub flags: Vec<bool>,
}

impl ScalerParams {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let first = rows
            .first()
            .ok_or_else(|| Error::Contract("cannot fit a scaler on zero rows".into()))?;
        let dim = first.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Contract("ragged feature rows".into()));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("non-finite feature value".into()));
        }
        let mut means = Vec::with_capacity(dim);
        let mut sds = Vec::with_capacity(dim);
        let mut flags = Vec::with_capacity(dim);
        let mut column = Vec::with_capacity(rows.len());
        for j in 0..dim {
            column.clear();
            column.extend(rows.iter().map(|r| r[j]));
            let (mean, sd) = mean_and_sample_sd(&column);
            let degenerate = !(sd > 0.0);
            means.push(mean.unwrap_or(0.0));
            sds.push(if degenerate { 1.0 } else { sd });
            flags.push(degenerate);
        }
        Ok(Self { means, sds, flags })
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::Contract(format!(
                "expected {} features, got {}",
                self.dim(),
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("non-finite feature value".into()));
        }
        Ok(v.iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect())
    }
}
