//! Deterministic, seedable discrete-event simulation of update packet
//! dissemination over multihop networks.
//!
//! The crate is organised around a small pipeline:
//!
//! * [`model`] — packets, topologies, scenarios and arrival generation;
//! * [`dist`] — transmission-time laws with CCDF access and NBU/NWU
//!   classification;
//! * [`policy`] — scheduling disciplines (freshest-first, LCFS, FCFS, a
//!   randomized baseline) as decision functions;
//! * [`engine`] — the event loop that turns a scenario plus a policy into a
//!   delivery [`engine::Trace`];
//! * [`age`] — age processes derived from traces and the penalty
//!   functionals evaluated on them;
//! * [`ordering`] — coupled sample-path comparisons, empirical stochastic
//!   ordering, the queueing-free age lower bound, and the multi-server
//!   station used for completion-time checks.
//!
//! Every random quantity is derived from a 64-bit seed through counter-based
//! streams ([`rng`]), so any run — including a coupled comparison across
//! several policies — is exactly replayable.

// Validations are written `!(x > 0.0)` so that NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod age;
pub mod dist;
pub mod engine;
pub mod model;
pub mod ordering;
pub mod policy;
pub mod rng;
pub mod stats;

pub use age::{
    age_process, average_age_penalty, average_peak_age, completion_times, peaks,
    time_average_age, AgeError, AgeProcess, Penalty,
};
pub use dist::{is_nbu, is_nbu_default, is_nwu, is_nwu_default, DistError, DistributionSpec};
pub use engine::{
    run_simulation, CouplingMode, CouplingStream, EngineError, LinkEvent, LinkEventKind,
    RunOptions, ServiceTimeSource, Trace,
};
pub use model::{
    build_graph, generate_arrivals, ArrivalSpec, Buffer, DelayModel, LinkSpec, ModelError,
    NetworkGraph, PacketRecord, Scenario,
};
pub use ordering::{
    check_sample_path_dominance, coupled_run, empirical_stochastic_order, factor3_ratio,
    infinite_server_lower_bound, run_multiserver_nwu, DominanceReport, Factor3Report,
    MultiServerScenario, OrderingError, OrderingVerdict,
};
pub use policy::{on_packet_arrival, ArrivalDecision, PolicyKind, PolicySpec};
