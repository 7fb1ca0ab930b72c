pub mod duals;
pub mod error;
pub mod frame;
pub mod measure;
pub mod ot;
pub mod psd;
pub mod sphere;
pub mod sum;

pub use error::{Error, Result};
pub use measure::{DiscreteMeasure, UnitVector};
pub use psd::{GeneralMatrix, PsdMatrix, SymMatrix};
