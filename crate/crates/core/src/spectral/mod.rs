//! Cavity eigenbasis of the curl-curl operator on a box, the splitting of
//! the div-free modes by the sign of `lambda_k + lambda`, and transforms
//! between coefficients and grid samples.

mod domain;
mod grid;
mod modes;
mod split;
mod transform;

pub use domain::BoxDomain;
pub use grid::{gauss_legendre, required_points, Axis, GridField, GridKind, GridSpec};
pub use modes::{
    enumerate_modes, Factor, Mode, ModeBasis, ModeIndex, ModeKind, SeparableField, SeparableTerm, Trig,
};
pub use split::{split_spaces, SpaceSplit, KERNEL_TOL};
pub use transform::{
    boundary_trace_residual, curl_at, face_samples, field_at, project, resolvent, resolvent_norm, synthesize,
    trace_residual_of, weak_divergence, ModeTable, StateVector,
};

