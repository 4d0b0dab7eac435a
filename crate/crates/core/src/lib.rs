//! Exact metastability analysis of finite energy landscapes under
//! Metropolis dynamics at low temperature.
//!
//! The pipeline: build a [`Landscape`], restrict it below the global
//! tunneling barrier, then iterate the plateau/cycle hierarchy in
//! [`hierarchy`] until a single recurrent class remains. The [`kawasaki`]
//! module generates lattice-gas landscapes, and [`verify`] compares the
//! predictions against finite-temperature numerics.

pub mod error;
pub mod hierarchy;
pub mod io;
pub mod kawasaki;
pub mod landscape;
pub mod merge_tree;
pub mod plateaux;
pub mod reduction;
pub mod report;
pub mod verify;

pub use error::{Error, Result};
pub use landscape::{Energy, Landscape, StateId, StateSet};
