//! Learning stack: datasets, the forest and network regressors, feature
//! elimination, ensemble selection, and cross-validated evaluation.

mod bundle;
mod dataset;
mod ensemble;
mod forest;
mod loso;
mod mlp;
mod rfe;

pub use bundle::{full_rfe, full_split, train_model, ModelBundle, TrainReport, MODEL_FORMAT};
pub use dataset::Dataset;
pub use ensemble::{angular_mae, mean_prediction, select_ensemble, EnsembleSelection};
pub use forest::{train_forest, RegressionForest};
pub use loso::{
    carve_fold, eligible_subjects, run_loso, FoldOutcome, FoldSplit, LosoReport,
};
pub use mlp::{train_mlp, Gradients, Layer, Network, Normalizer, TrainedMlp};
pub use rfe::{run_rfe, RfeStep, RfeTrace};
