//! Soft-margin SVM built from scratch: kernels, feature standardization, an
//! SMO dual solver, one-vs-rest multiclass prediction, stratified k-fold
//! model selection and JSON persistence.

mod cv;
mod kernel;
mod multiclass;
mod persist;
mod scaler;
mod smo;

pub use cv::{cross_validate, stratified_folds, CvScore, GridPoint};
pub use kernel::{Kernel, KernelKind, KernelSpec};
pub use multiclass::{
    accuracy, default_gamma, train_multiclass, train_on_rows, BandPredictor, ClassWeighting,
    MulticlassSvmModel, TrainOptions,
};
pub use persist::{load_model, model_from_json, model_to_json, save_model, MODEL_VERSION};
pub use scaler::ScalerParams;
pub use smo::{
    dual_objective_of, max_kkt_violation, solve_binary, solve_binary_detailed, BinarySvmModel,
    SmoParams, SolveReport,
};
