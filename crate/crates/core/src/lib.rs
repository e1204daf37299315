pub mod cli;
pub mod error;
mod json;
pub mod mutation;
pub mod nseq;
pub mod operators;
pub mod optim;
pub(crate) mod conic;
pub mod seqclass;
pub mod spaces;
pub mod summing;
pub mod verify;
