//! Computations with free products `G = G_1 * ... * G_k * F_N` and their
//! actions on simplicial metric trees.

pub mod approx;
pub mod catalog;
pub mod corpus;
pub mod error;
pub mod folds;
pub mod index;
pub mod isometry_systems;
pub mod rational;
pub mod subgroups;
pub mod trees;
pub mod words;

pub use error::{Error, Result};
