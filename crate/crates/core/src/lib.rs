//! # viflow
//!
//! Continuous-time operator splitting for constrained variational
//! inequalities `0 ∈ A(x) + D(x) + N_C(x)`, where the constraint set is the
//! zero set of a monotone penalty operator `B`.
//!
//! The flow is a forward-backward-forward (Tseng) dynamics whose field
//! carries two time-varying weights: a Tikhonov term `ε(t)·x` that makes
//! every frozen-time problem strongly monotone and steers the trajectory
//! toward the least-norm solution, and an exterior penalty `β(t)·B(x)` that
//! drives it toward feasibility. The crate provides:
//!
//! * [`operators`] — capability contracts for the three operator roles and
//!   concrete constructions (box/l1 resolvents, projection and affine
//!   penalties), plus the regularized field `V_{ε,β}`;
//! * [`schedules`] — the power-law parameter curves, the derived quantities
//!   `L, a, δ, κ`, and validation of the admissibility conditions;
//! * [`dynamics`] — the flow field with its reflection and composition
//!   forms and empirical Lipschitz/growth probes;
//! * [`integrator`] — fixed-step Euler/RK4 with trajectory diagnostics;
//! * [`oracle`] — high-precision frozen-parameter solves, the least-norm
//!   continuation, and solution-map consistency checks;
//! * [`problems`] — closed-form toys, a coupled saddle-point instance, and
//!   linearly coupled games;
//! * [`contracts`] — the sampled operator-contract suite.
//!
//! Everything is deterministic: operator evaluations are pure, probes and
//! instance generators are seeded, and identical configurations reproduce
//! trajectories bit for bit.

// Validation guards are written as `!(x > 0.0)` so that NaN arguments fail
// them too; the positive-form comparison would let NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contracts;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod point;
pub mod problems;
pub mod sampling;
pub mod schedules;

pub use error::{Error, Result};
pub use point::Point;

pub use operators::{
    eval_v, lipschitz_modulus, penalty_affine, penalty_from_projection, resolvent_box,
    resolvent_l1, resolvent_zero, LipschitzMonotoneMap, ProblemInstance, ResolventOperator,
    SolutionSet,
};

pub use schedules::{
    check_power_law_conditions, power_law_for_problem, power_law_schedule, theorem_quantities,
    validate_schedule, Schedule, TheoremQuantities, ValidationReport,
};

pub use dynamics::{
    field_lipschitz_probe, growth_probe, reflect, tseng_field, tseng_field_composed,
    tseng_field_frozen, FieldEvaluation,
};

pub use integrator::{attach_oracle_distance, integrate, IntegratorConfig, Method, Trajectory};

pub use oracle::{
    least_norm_solution, least_norm_solution_with, sample_parameter_pairs, solve_auxiliary,
    solve_auxiliary_from, verify_feasibility_decay, verify_solution_map_lipschitz,
    AuxiliarySolution, FeasibilityDecayOptions, FeasibilityDecayReport, SolutionMapReport,
};

pub use problems::{
    make_gnep_decoupled, make_gnep_linear, make_interval_toy, make_linear_1d, make_saddle_point,
    GnepSpec, SaddleSpec,
};
