//! Dense Hermitian matrix primitives over real and complex scalars.
//!
//! Everything in the crate lives in a real Hilbert space: the inner product
//! of two matrices is `Re tr(Aᴴ B)` and all norms are Frobenius norms. The
//! scalar field is a type parameter ([`Field`]) so the same cone projections
//! and Toeplitz operators serve both the real Boolean quadratic program and
//! the complex super-resolution problem.

mod eigen;
mod field;
mod hermitian;
mod point;
mod sampling;
mod toeplitz;

pub use eigen::{eig_hermitian, project_nsd, project_psd, HermitianEigen, Inertia};
pub use field::Field;
pub use hermitian::{BlockNorms, BlockRegion, BlockShape, DenseHermitian};
pub use point::{Layout, Point};
pub use sampling::{gaussian_fill, gaussian_sample, seeded_rng};
pub use toeplitz::{project_toeplitz, toeplitz_adjoint, toeplitz_gram_diagonal, toeplitz_map};
