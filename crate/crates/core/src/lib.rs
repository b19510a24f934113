pub mod dist;
pub mod error;
pub mod estimation;
pub mod inference;
pub mod numeric;
pub mod simulation;
pub mod symmetric;
pub mod tail;

pub use dist::{BcsParams, TruncationInfo};
pub use error::{BcsError, Result};
pub use symmetric::{DensityFamily, FamilyKind};
