//! Cost sharing on general networks where agents hold private valuations and
//! control their adjacent edges.
//!
//! Three mechanisms are provided: a welfare-maximizing one that charges
//! critical values ([`cvm`]), a budget-balanced one that selects agents in
//! equal-share stages ([`rsm`]), and the classic Bird rule as a baseline
//! ([`baselines`]). [`properties`] turns the standard axioms into executable
//! checks with replayable witnesses.

pub mod baselines;
pub mod cvm;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod mechanism;
pub mod model;
pub mod properties;
pub mod rational;
pub mod rsm;
pub mod steiner;
pub mod welfare;

pub use error::{Error, Result};
pub use mechanism::{Allocation, Mechanism, PivotScope, Solver};
pub use model::{
    parse_document, parse_instance, AgentReport, Document, Edge, Instance, NodeId, ReportProfile,
};
pub use rational::Value;
