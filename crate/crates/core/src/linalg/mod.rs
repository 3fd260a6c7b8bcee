//! Sparse assembly and direct solves, dense generalized eigenproblems.

pub mod dense;
pub mod sparse;

pub use dense::{fractional_gram, generalized_eig, DenseSymmetricPencil, GeneralizedEigen};
pub use sparse::{
    norm2, solve_sparse, to_csr, ConstrainedSystem, CsrMatrix, SparseLu, TripletBuffer,
};
