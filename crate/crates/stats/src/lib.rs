//! Self-contained numerical kernels used by the representational analyses.
//!
//! Everything here is pure and single-threaded, so results are bitwise
//! reproducible for fixed inputs and seeds.

mod error;
mod logistic;
mod matrix;
mod pca;
mod rank;
mod regression;
mod rsa;
mod similarity;
pub mod special;
mod svm;
mod ttest;
mod whiten;

pub use error::StatsError;
pub use logistic::{logistic_fit, logistic_fit_with, LogisticOptions, RegressionResult, Z_95};
pub use matrix::Matrix;
pub use pca::{pca, PcaResult};
pub use rank::{average_ranks, pearson, spearman};
pub use regression::{grouped_regression, Estimate, GroupFit, GroupedRecord, GroupedRegression};
pub use rsa::{rsa, upper_triangle, RsaSummary};
pub use similarity::{cosine, pairwise_cosine};
pub use svm::{svm_fit, svm_fit_with, svm_objective, SvmOptions, SvmResult};
pub use ttest::{paired_t_test, PairedTTest};
pub use whiten::{whiten, Whitener, WhitenOptions};

pub type Result<T, E = StatsError> = std::result::Result<T, E>;
