pub mod almgren;
pub mod assignment;
pub mod covers;
pub mod error;
pub mod forms;
pub mod modulus;
pub mod mvcalc;
pub mod numeric;
pub mod region;
pub mod report;

pub use almgren::{AlmgrenPoint, DistanceResult};
pub use error::{Error, Result};
pub use report::CheckReport;
