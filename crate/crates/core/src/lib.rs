//! Correspondence (DP) coloring with the iterated wasteful coloring
//! procedure: covers and their regularization, nibble rounds with a
//! good-round acceptance test, the parameter schedule, a resampling finisher,
//! instance generators and Monte-Carlo / exact-enumeration analysis.

pub mod analysis;
pub mod cover;
pub mod generators;
pub mod graph;
pub mod nibble;
pub mod pipeline;
pub mod rng;
pub mod schedule;

pub use analysis::{
    classify_structure, exact_round_expectation, round_stats, verify_proper, AnalysisError, Anchors, ExactExpectation, Moments,
    Properness, RoundStats, StructureReport,
};
pub use cover::{ColorId, CoverError, DpCover, PartialColoring, Regularized, Violation};
pub use generators::{GenError, GenSpec, Generated};
pub use graph::{contains_kst, kst_edge_bound, Graph, GraphError, VertexId};
pub use nibble::{
    d_next, ell_next, keep_fn, round_is_good, run_round, run_round_until_good, uncolor_fn, RoundOutcome,
    RoundParams,
};
pub use pipeline::{color_graph, finish, ColoringResult, EtaPolicy, PipelineConfig, PipelineError, RoundTelemetry};
pub use rng::Seed;
pub use schedule::{compute_schedule, derive_constants, hat_deviation_report, Schedule, ScheduleError, ScheduleInput};
