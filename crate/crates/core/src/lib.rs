//! Heavy-traffic simulation and verification for three non-CRP queueing
//! networks under MaxWeight: the `n × n` input-queued switch, the
//! three-queue system and the N-system.

pub mod ensemble;
pub mod error;
pub mod geometry;
pub mod limit_theory;
pub mod nsys_sim;
pub mod stats;
pub mod stochastics;
pub mod switch_sim;
pub mod threeq_sim;
pub mod transform_lab;

pub use num_complex::Complex64;

pub use ensemble::{EnsembleMeta, Indicators, StationaryEnsemble, SystemKind};
pub use error::{Error, Result};
pub use geometry::{
    project_cone_switch, project_cones_nsys, project_subspace, BMatrix, ConeProjector,
    ConeRepresentation, Decomposition, NsysCone, ProjectionTarget, SubspaceProjector,
};
pub use limit_theory::{
    functional_residual, random_frequencies, Frequency, FrequencyDomain, LimitLaw, ResidualSystem,
};
pub use nsys_sim::{run_replicas_nsys, run_stationary_nsys, NSysState, NSystem};
pub use stochastics::{ArrivalFamily, ArrivalKind, Boundary, HeavyTrafficSchedule, RngStream};
pub use switch_sim::{
    maxweight_schedule, run_replicas, run_stationary, SamplingPlan, Schedule, SwitchState,
    SwitchSystem,
};
pub use threeq_sim::{run_replicas_3q, run_stationary_3q, threeq_maxweight, ThreeQSystem};
pub use transform_lab::{
    compare_to_limit, empirical_residual, estimate_l, estimate_m, ssc_report, CheckRow,
    DistanceReport, MExponent, SscReport, TransformEstimate,
};
