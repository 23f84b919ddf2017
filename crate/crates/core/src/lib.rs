pub mod bounds;
pub mod cbmaps;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod multops;
pub mod opnorm;
pub mod optim;
pub mod postructure;
pub mod seeding;
pub mod spaces;
pub mod tensor;

pub use bounds::Bounds;
pub use error::{Error, Result};
pub use linalg::{Matrix, PExponent, Vector, C64};
