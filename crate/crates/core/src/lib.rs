//! Index theory for finite-dimensional bi-Hilbertian C*-bimodules.

pub mod bimodule;
pub mod error;
pub mod exec;
pub mod linalg;
pub mod multimatrix;

pub use bimodule::{BimoduleParts, FrameSet, HilbertBimodule};
pub use error::{Error, Result};
pub use exec::Exec;
pub use multimatrix::{AlgebraElement, MultiMatrixAlgebra, ScalarFunction};
pub mod constructors;
pub mod random;
pub mod index;
pub mod io;
pub mod conjugation;
