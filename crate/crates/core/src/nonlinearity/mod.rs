//! Nonlinear potentials `F(x,u)`, their gradients, and the structural
//! condition checker.

mod checker;
mod coefficient;
mod spec;

pub use checker::{
    check_conditions, witness_margin, ConditionEntry, ConditionReport, ConditionStatus, SamplerConfig, Witness,
    WitnessKind, GRADIENT_TOL, STRICTNESS,
};
pub use coefficient::CoefficientField;
pub use spec::{
    kerr_from_physics, BlackBox, Constants, KerrModel, NonlinearitySpec, Potential, PowerTerm, RadialSeries,
    TabulatedNonlinearity,
};
