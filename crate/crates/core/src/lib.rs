//! Convex analysis of mixtures (CAM): blind separation of non-negative,
//! well-grounded sources from linear mixtures `X = A S`, identifying the mixing
//! matrix from the lateral edges of the data cone.
//!
//! The numerical core is generic over [`Scalar`] (`f32` or `f64`); the data
//! generators in [`datagen`] work in `f64`.

pub mod assignment;
pub mod clustering;
pub mod datagen;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod preprocess;
pub mod rng;
pub mod scalar;
pub mod stability;
pub mod unmix;

pub use clustering::{fit_sectors, SectorModel};
pub use error::{CamError, Result};
pub use geometry::{angle, dedup_directions, nnls, project_onto_cone, ConeBasis, Projection};
pub use matrix::Matrix;
pub use metrics::{eval_marker_patterns, eval_mixing, eval_sources, evaluate, EvalResult};
pub use pipeline::{decompose, CamConfig, Decomposition, SourceCount};
pub use preprocess::{preprocess, PreprocessReport};
pub use scalar::Scalar;
pub use stability::{min_avg_angle, stability_select, StabilityProfile};
pub use unmix::{
    detect_edges, recover_sources, select_k_edges, EdgeSet, MixingEstimate, SearchStrategy, SourceEstimate,
};

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type SectorModel64 = SectorModel<f64>;
pub type SectorModel32 = SectorModel<f32>;
pub type Decomposition64 = Decomposition<f64>;
pub type Decomposition32 = Decomposition<f32>;
pub type StabilityProfile64 = StabilityProfile<f64>;
pub type StabilityProfile32 = StabilityProfile<f32>;
