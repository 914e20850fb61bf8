//! Discount significance for sale-season catalogs.
//!
//! Products are grouped into price bands by their non-sale price. A
//! one-vs-rest SVM, trained with a from-scratch SMO solver, learns to predict
//! a product's band from its hardware features. A sale price is then judged
//! against the predicted band: dropping into a lower band is a cross-class
//! deal, otherwise the discount is counted in folds of `k·σ`, σ being the
//! band's price standard deviation.
//!
//! Modules, bottom-up:
//!
//! - [`extract`]: listing snapshots → raw rows, driven by declarative rules
//! - [`catalog`]: CSV ingestion, cleaning, stratified splitting
//! - [`pricebands`]: band specs, assignment, per-band statistics
//! - [`svm`]: kernels, scaler, SMO solver, multiclass model, cross-validation
//! - [`significance`]: the fold / cross-class classification
//! - [`report`]: stats table and band × class summary matrix
//! - [`synth`]: seeded synthetic catalogs

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
pub mod catalog;
pub mod error;
pub mod extract;
pub mod pricebands;
pub mod report;
pub mod significance;
pub mod svm;
pub mod synth;

pub use catalog::{
    clean, load_catalog_csv, stratified_split, CleanReport, CommodityRecord, Dataset,
    FeatureVector, RawCatalog,
};
pub use error::{Error, ErrorKind, Result};
pub use pricebands::{band_stats, PriceBand, PriceBandSpec, PriceBandStats};
pub use report::{RunReport, SummaryMatrix};
pub use significance::{
    classify_dataset, classify_discount, Fold, SignificancePolicy, SignificanceVerdict,
};
pub use svm::{BandPredictor, MulticlassSvmModel};
