//! Cooperating optimization agents.
//!
//! Solvers never call the model themselves. They hand points to a
//! scheduler, which queues requests by priority and dispatches them to a
//! pool of evaluator agents. Results flow back to the requesting solver and
//! to an analysis agent that keeps the incumbent best (or non-dominated
//! set); when sharing is enabled, every improvement is broadcast to all
//! solvers.

pub mod analysis;
pub mod benchmarks;
pub mod evaluation;
pub mod evaluator;
pub mod events;
pub mod messaging;
pub mod metrics;
pub mod problem;
pub mod scheduler;
pub mod solvers;

pub use analysis::{Archive, ArchiveMode};
pub use evaluation::{Evaluation, SolverId};
pub use problem::{CoreError, Dimension, Domain, Point, Problem, VarKind};
