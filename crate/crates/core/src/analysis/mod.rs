//! Matrix diagnostics: rank, spark, nullspace sparsity and Haar sparsity.

mod diagnostics;
mod haar;
mod nullvec;
mod rank;
mod spark;

pub use diagnostics::{diagnose, DiagnoseOptions, MatrixDiagnostics};
pub use haar::{haar_2d, haar_2d_inverse};
pub use nullvec::{local_nullvector_search, local_nullvectors, nsp_order_upper, sparsest_nullvector_search, NullVector};
pub use rank::{numerical_rank, singular_values, RankReport};
pub use spark::{binomial, spark_bruteforce, Spark, DEFAULT_SPARK_BUDGET};
