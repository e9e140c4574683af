//! Scheduling disciplines as decision functions over link state.
//!
//! The shipped policies are all work-conserving: a link never idles while
//! its queue holds a packet. Only the freshest-first preemptive policy may
//! displace an in-service packet, and only for a strictly fresher arrival.
//! The randomized baseline exists as an adversarial member of the
//! non-preemptive work-conserving class for dominance testing; it carries
//! its own seed so coupled comparisons stay reproducible.

use std::fmt;
use std::str::FromStr;

use crate::engine::{LinkQueue, LinkState, QueuedPacket};
use crate::rng::RngStream;

/// The policy family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    /// Preemptive freshest-first: a strictly fresher arrival displaces the
    /// packet in service.
    PrmpLgfs,
    /// Non-preemptive freshest-first.
    NonPrmpLgfs,
    /// Non-preemptive, serve the most recently enqueued.
    NonPrmpLcfs,
    /// Non-preemptive, serve the earliest enqueued.
    Fcfs,
    /// Non-preemptive, serve a uniformly random queued packet.
    RandomWorkConserving { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PolicySpec {
    pub kind: PolicyKind,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec { kind }
    }

    pub fn preemptive(&self) -> bool {
        matches!(self.kind, PolicyKind::PrmpLgfs)
    }

    /// All shipped kinds keep links busy while packets wait.
    pub fn work_conserving(&self) -> bool {
        true
    }

    /// Seed tag mixed into the policy's private selection lane.
    pub(crate) fn choice_seed(&self) -> u64 {
        match self.kind {
            PolicyKind::RandomWorkConserving { seed } => seed,
            _ => 0,
        }
    }

    pub fn queue_for(&self) -> LinkQueue {
        match self.kind {
            PolicyKind::PrmpLgfs | PolicyKind::NonPrmpLgfs => LinkQueue::freshest(),
            PolicyKind::NonPrmpLcfs => LinkQueue::lifo(),
            PolicyKind::Fcfs => LinkQueue::fifo(),
            PolicyKind::RandomWorkConserving { .. } => LinkQueue::bag(),
        }
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.kind {
            PolicyKind::PrmpLgfs => "prmp-lgfs",
            PolicyKind::NonPrmpLgfs => "np-lgfs",
            PolicyKind::NonPrmpLcfs => "np-lcfs",
            PolicyKind::Fcfs => "fcfs",
            PolicyKind::RandomWorkConserving { .. } => "random-wc",
        };
        f.write_str(name)
    }
}

impl FromStr for PolicySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let kind = match s {
            "prmp-lgfs" => PolicyKind::PrmpLgfs,
            "np-lgfs" => PolicyKind::NonPrmpLgfs,
            "np-lcfs" => PolicyKind::NonPrmpLcfs,
            "fcfs" => PolicyKind::Fcfs,
            "random-wc" => PolicyKind::RandomWorkConserving { seed: 0 },
            other => return Err(format!("unknown policy `{other}`")),
        };
        Ok(PolicySpec::new(kind))
    }
}

/// What a policy does with a packet arriving at a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalDecision {
    /// Link idle: the packet enters service.
    StartService,
    /// Preemptive policy, strictly fresher packet: displace the one in
    /// service (which re-enters the queue under the buffer rule).
    PreemptAndServe,
    /// Queue has room.
    Enqueue,
    /// Queue full but the discipline evicts its stalest packet for this one.
    EnqueueEvictStalest,
    /// Queue full; the packet is discarded.
    Drop,
}

/// Single-arrival decision of a policy, total over all states.
///
/// The engine realizes these decisions batch-wise: all arrivals sharing an
/// instant are staged first and the start/preempt outcome is resolved once
/// per link, which coincides with the per-arrival decision whenever arrival
/// times are distinct.
pub fn on_packet_arrival(
    spec: &PolicySpec,
    link: &LinkState,
    packet: &QueuedPacket,
) -> ArrivalDecision {
    match link.alpha() {
        None => ArrivalDecision::StartService,
        Some(alpha) => {
            if spec.preemptive() && packet.s > alpha {
                return ArrivalDecision::PreemptAndServe;
            }
            if link.buffer.holds(link.queue.len() + 1) {
                ArrivalDecision::Enqueue
            } else if link.queue.evicts_for(packet) {
                ArrivalDecision::EnqueueEvictStalest
            } else {
                ArrivalDecision::Drop
            }
        }
    }
}

/// Selection after a delivery: the next packet to serve, or `None` when the
/// queue is empty and the link idles.
pub fn on_service_complete(
    _spec: &PolicySpec,
    queue: &mut LinkQueue,
    stream: &mut RngStream,
) -> Option<QueuedPacket> {
    queue.select_remove(stream)
}
