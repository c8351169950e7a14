//! Osmosis filtering for images.
//!
//! The evolution `u_t = div(grad u - d u)` with no-flux boundaries conserves
//! mass, keeps positive images positive and converges to a rescaled copy of
//! any positive image `v` whose log-gradient is used as the drift `d`.
//! Editing the drift (zeroing it across shadow edges or mosaic seams) turns
//! that steady state into a tool for removing multiplicative jumps while
//! keeping the remaining image structure.
//!
//! * [`grid`]: fields, multi-channel images and label maps.
//! * [`drift`]: canonical drift construction and gating.
//! * [`operators`]: the discrete operator, its line systems and structural checks.
//! * [`solvers`]: explicit, implicit and multiplicative-splitting time steps.
//! * [`applications`]: shadow removal, mosaic balancing, fusion.
//! * [`raster`]: PNG and PGM/PPM I/O.
//! * [`cli`], [`bench`], [`manifest`]: the batch front end.

pub mod applications;
pub mod bench;
pub mod cli;
pub mod drift;
pub mod error;
pub mod grid;
pub mod manifest;
pub mod operators;
pub mod raster;
pub mod solvers;
pub mod synthetic;

pub use applications::{
    balance_mosaic, fuse, remove_shadow, PipelineOutput, PipelineParams, Rescale,
};
pub use drift::{canonical_drift, gate_label_seams, gate_mask_boundary, DriftField};
pub use error::{Error, Result};
pub use grid::{
    shift_to_positive, total_mass, ChannelKind, LabelMap, MultiChannelImage, ScalarField,
};
pub use operators::{apply_a, assemble_lines, column_sum_defect, Axis, LineSystem};
pub use solvers::{
    evolve, stable_timestep, step_explicit, step_implicit, step_mos, EvolveReport, Scheme,
    SchemeConfig,
};
