use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("matrix values length {len} does not match {rows}x{cols}")]
    Shape { rows: usize, cols: usize, len: usize },
    #[error("{what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("row `{row}` has zero norm")]
    ZeroNormRow { row: String },
    #[error("input is constant")]
    ConstantInput,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("row/column labels do not match")]
    LabelMismatch,
    #[error("subset size {size} exceeds the number of items {n}")]
    SubsetTooLarge { size: usize, n: usize },
    #[error("paired differences have zero variance (constant difference {difference})")]
    ZeroVarianceDifference { difference: f64 },
    #[error("degenerate design: {0}")]
    DegenerateDesign(String),
    #[error("labels contain a single class")]
    SingleClass,
    #[error("invalid label {0}; expected +1 or -1")]
    InvalidLabel(f64),
    #[error("k = {k} too large; at most {max} components are available")]
    KTooLarge { k: usize, max: usize },
    #[error("covariance is rank deficient (smallest eigenvalue {min_eigenvalue:e}); enable the ridge option")]
    RankDeficient { min_eigenvalue: f64 },
    #[error("all x values are constant")]
    AllXConstant,
}
