//! Discount significance.
//!
//! A sale price that lands in a lower band than the one predicted from the
//! product's features is a cross-class deal (EXCELLENT by default). Otherwise
//! the discount is measured in folds of width `k·σ`, where σ is the price
//! standard deviation of the predicted band: fold `n` covers
//! `[n·k·σ, (n+1)·k·σ)`. Fold indices past the last configured name share
//! the last name.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::catalog::{CommodityRecord, Dataset};
use crate::error::{Error, Result};
use crate::pricebands::{PriceBandSpec, PriceBandStats};
use crate::svm::BandPredictor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificancePolicy {
    pub k: f64,
    pub fold_names: Vec<String>,
    pub cross_class_name: String,
    #[serde(default)]
    pub graded_cross_class: bool,
}

impl Default for SignificancePolicy {
    /// k = ½ with POOR / ACCEPTABLE / GOOD folds and EXCELLENT across bands.
    fn default() -> Self {
        Self {
            k: 0.5,
            fold_names: vec!["POOR".into(), "ACCEPTABLE".into(), "GOOD".into()],
            cross_class_name: "EXCELLENT".into(),
            graded_cross_class: false,
        }
    }
}

impl SignificancePolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.k > 0.0 && self.k <= 1.0) {
            return Err(Error::Config(format!(
                "k must lie in (0, 1], got {}",
                self.k
            )));
        }
        if self.fold_names.is_empty() {
            return Err(Error::Config("fold_names must not be empty".into()));
        }
        let mut all: Vec<&str> = self.fold_names.iter().map(String::as_str).collect();
        all.push(&self.cross_class_name);
        let unique: BTreeSet<&str> = all.iter().copied().collect();
        if unique.len() != all.len() {
            return Err(Error::Config(
                "significance class names must be distinct".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let p: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("policy file {}: {e}", path.display())))?;
        p.validate()?;
        Ok(p)
    }

    /// Every class name, best first: the cross-class name, then folds from
    /// the highest down.
    pub fn class_columns(&self) -> Vec<String> {
        std::iter::once(self.cross_class_name.clone())
            .chain(self.fold_names.iter().rev().cloned())
            .collect()
    }

    pub fn fold_name(&self, fold: u64) -> &str {
        let last = self.fold_names.len() - 1;
        &self.fold_names[usize::try_from(fold).map_or(last, |f| f.min(last))]
    }
}

/// The unique `n` with `n·k·σ ≤ discount < (n+1)·k·σ`, for `discount ≥ 0`
/// and `σ > 0`. Saturates at `u64::MAX`.
pub fn fold_index(discount: f64, k: f64, sigma: f64) -> u64 {
    debug_assert!(discount >= 0.0 && k > 0.0 && sigma > 0.0);
    let width = k * sigma;
    let estimate = (discount / width).floor();
    if !(estimate < u64::MAX as f64) {
        return u64::MAX;
    }
    let mut n = estimate as u64;
    // The quotient can land one off near a boundary; settle on the
    // comparisons themselves.
    while n > 0 && n as f64 * width > discount {
        n -= 1;
    }
    while ((n + 1) as f64) * width <= discount {
        n += 1;
    }
    n
}

/// Fold index of a verdict. Serialized as a number, or the string `"inf"`
/// for a cross-class deal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fold {
    Finite(u64),
    Infinite,
}

impl Serialize for Fold {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Fold::Finite(n) => s.serialize_u64(*n),
            Fold::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Fold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Finite(u64),
            Marker(String),
        }
        match Repr::deserialize(d)? {
            Repr::Finite(n) => Ok(Fold::Finite(n)),
            Repr::Marker(s) if s == "inf" => Ok(Fold::Infinite),
            Repr::Marker(s) => Err(serde::de::Error::custom(format!("bad fold `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Anomaly {
    NegativeDiscount,
    SaleBandAbovePredicted,
    DegenerateSd,
    PredictedVsListedBandMismatch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceVerdict {
    pub id: String,
    /// Band of the original price as listed.
    pub listed_band: String,
    /// Band predicted from the features.
    pub predicted_band: String,
    pub sale_price_band: String,
    /// original price − sale price
    pub discount: f64,
    pub fold: Fold,
    /// Bands dropped from predicted to sale-price band; 0 unless cross-class.
    pub x_levels: usize,
    pub class_name: String,
    pub anomalies: BTreeSet<Anomaly>,
}

pub fn classify_discount<P: BandPredictor + ?Sized>(
    policy: &SignificancePolicy,
    bands: &PriceBandSpec,
    stats: &PriceBandStats,
    model: &P,
    rec: &CommodityRecord,
) -> Result<SignificanceVerdict> {
    let sale_price = rec
        .sale_price
        .ok_or_else(|| Error::Contract(format!("record `{}` has no sale price", rec.id)))?;
    let predicted_name = model.predict_band(&rec.features)?;
    let predicted = bands
        .index_of(predicted_name)
        .ok_or_else(|| Error::Config(format!("model predicted unknown band `{predicted_name}`")))?;
    let listed = bands.assign(rec.original_price)?;
    let sale_band = bands.assign(sale_price)?;
    let discount = rec.original_price - sale_price;

    let mut anomalies = BTreeSet::new();
    if discount < 0.0 {
        anomalies.insert(Anomaly::NegativeDiscount);
    }
    if listed != predicted {
        anomalies.insert(Anomaly::PredictedVsListedBandMismatch);
    }

    let (fold, x_levels, class_name) = if sale_band < predicted {
        (
            Fold::Infinite,
            predicted - sale_band,
            policy.cross_class_name.clone(),
        )
    } else {
        if sale_band > predicted {
            anomalies.insert(Anomaly::SaleBandAbovePredicted);
        }
        let sigma = stats
            .get(bands.name(predicted))
            .ok_or_else(|| {
                Error::Config(format!(
                    "no statistics for band `{}`",
                    bands.name(predicted)
                ))
            })?
            .sd;
        let fold = if discount <= 0.0 {
            0
        } else if sigma > 0.0 {
            fold_index(discount, policy.k, sigma)
        } else {
            (policy.fold_names.len() - 1) as u64
        };
        if !(sigma > 0.0) {
            anomalies.insert(Anomaly::DegenerateSd);
        }
        (Fold::Finite(fold), 0, policy.fold_name(fold).to_string())
    };

    Ok(SignificanceVerdict {
        id: rec.id.clone(),
        listed_band: bands.name(listed).to_string(),
        predicted_band: bands.name(predicted).to_string(),
        sale_price_band: bands.name(sale_band).to_string(),
        discount,
        fold,
        x_levels,
        class_name,
        anomalies,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reject {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Classification {
    pub verdicts: Vec<SignificanceVerdict>,
    pub rejects: Vec<Reject>,
}

/// Classifies every record, keeping input order. Records that fail land in
/// `rejects` with the reason.
pub fn classify_dataset<P: BandPredictor + ?Sized>(
    policy: &SignificancePolicy,
    bands: &PriceBandSpec,
    stats: &PriceBandStats,
    model: &P,
    ds: &Dataset,
) -> Classification {
    let mut out = Classification::default();
    for rec in &ds.records {
        match classify_discount(policy, bands, stats, model, rec) {
            Ok(v) => out.verdicts.push(v),
            Err(e) => out.rejects.push(Reject {
                id: rec.id.clone(),
                reason: e.to_string(),
            }),
        }
    }
    out
}
