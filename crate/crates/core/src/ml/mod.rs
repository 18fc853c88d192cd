//! Supervised detection front: link-volume feature extraction, from-scratch
//! linear SVM and random forest, ROC/AUC evaluation, and the three
//! classification studies.

pub mod features;
pub mod forest;
pub mod roc;
pub mod study;
pub mod svm;

pub use features::{extract_features, FeatureMatrix, LabelPolicy, Standardizer};
pub use forest::{train_random_forest, train_random_forest_seq, ForestModel, ForestParams};
pub use roc::{roc_auc, RocReport};
pub use study::{evaluate_split, nested_subsets, MlConfig, ModelKind, StudyCell, StudyReport};
pub use svm::{train_linear_svm, LinearSvmModel};
