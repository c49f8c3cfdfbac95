//! Dense complex linear algebra: matrices, Hermitian storage, Jacobi eigensolver.

mod eigen;
mod hermitian;
mod matrix;

pub use eigen::{eigendecompose, eigendecompose_with, JacobiOptions, SpectralDecomposition};
pub use hermitian::HermitianMatrix;
pub use matrix::{ComplexMatrix, DenseMatrix, Inverse, RealMatrix, DEFAULT_CONDITION_CAP};
