pub mod canonical;
pub mod cli;
pub mod dist;
pub mod error;
pub mod estimators;
pub mod ingest;
pub mod measures;
pub mod pid;
pub mod scm;
pub mod tolerance;
pub mod trainer;

pub use dist::{JointTable, Variable};
pub use error::{Error, Result};
pub use pid::{pid_decompose, unique_information, PidResult};
pub use scm::{scenario, Scm};
pub use tolerance::Tolerances;
