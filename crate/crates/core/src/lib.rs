//! Finite-difference toolkit for maximum-principle estimates of linear
//! parabolic operators with possibly unbounded drift.

pub mod error;
pub mod exponent;
pub mod grid;
pub mod norm;
pub mod operator;
pub mod special;

pub use error::{Error, Result};
pub use exponent::{Exponent, ExponentPair};
pub use grid::{
    parabolic_boundary, positivity_set, positivity_set_with_tol, Cylinder, GridFunction, NodeKind,
    ParabolicBoundaryMask, PositivitySet,
};
pub use norm::{
    embedding_check, mixed_norm, mixed_norm_detailed, mixed_norm_oracle, EmbeddingCheck,
    MixedNormSpec, NormDetail, NormOrder, PointSingularity,
};
pub use operator::{
    apply_operator, apply_operator_with, check_degeneracy_condition, drift_weight, exp_rescale,
    DegeneracyBranch, DegeneracyReport, DriftComponent, DriftPart, DriftWeight, Family, Field,
    NondegeneracyBounds, OperatorCoefficients, Sym2,
};
pub mod solver;
pub use solver::{
    solve_barrier_problem, solve_forward, solve_forward_many, solve_with_boundary, LinearSolver,
    SchemeConfig, Solution,
};
pub mod estimates;
pub use estimates::{
    bony_check, singular_counterexample, estimate_rhs, verify_bound, BonyReport,
    CounterexampleReport, EstimateReport,
};
pub mod barrier;
pub use barrier::{
    build_composite_barrier, compose_barriers, radial_majorant, solve_radial_monge_ampere,
    verify_barrier_inequality, BarrierOptions, BarrierTarget, BarrierVerdict, CompositeBarrier,
    RadialBarrier, RadialSource,
};
pub mod scenario;
pub use scenario::{run_batch, run_scenario, Scenario, ScenarioOutcome};
