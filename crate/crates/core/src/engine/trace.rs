//! Delivery traces and per-node freshness state.

use std::fmt;

use crate::model::PacketRecord;

use super::queue::QueuedPacket;

/// Freshness state of one node: the generation time of the freshest packet
/// received so far. Starts at 0 and is non-decreasing over simulated time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub u: f64,
    pub delivered: bool,
}

impl NodeState {
    pub fn new() -> Self {
        NodeState {
            u: 0.0,
            delivered: false,
        }
    }
}

impl Default for NodeState {
    fn default() -> Self {
        Self::new()
    }
}

/// Applies a delivery to a node: `u <- max(u, s)`. Returns whether the
/// delivery improved the node's information (the first delivery counts even
/// when `s` equals the initial state, it is the node's first data).
pub fn deliver_packet(node: &mut NodeState, s: f64) -> bool {
    let improved = s > node.u || !node.delivered;
    node.u = node.u.max(s);
    node.delivered = true;
    improved
}

/// One packet delivery at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delivery {
    pub time: f64,
    pub node: u32,
    pub packet: u32,
    pub s: f64,
}

/// One step of a node's freshness process: at `time`, the freshest known
/// generation time became `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reset {
    pub time: f64,
    pub s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkEventKind {
    Start,
    Preempt,
    Complete,
    Drop,
}

impl LinkEventKind {
    fn as_str(self) -> &'static str {
        match self {
            LinkEventKind::Start => "start",
            LinkEventKind::Preempt => "preempt",
            LinkEventKind::Complete => "complete",
            LinkEventKind::Drop => "drop",
        }
    }
}

/// Verbose per-link log entry; see [`LinkEvent::to_line`] for the text form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEvent {
    pub time: f64,
    pub from: u32,
    pub to: u32,
    pub kind: LinkEventKind,
    pub packet: u32,
    pub s: f64,
}

impl LinkEvent {
    /// Line-oriented text form:
    /// `t=<f64> link=<i>-<j> ev=<start|preempt|complete|drop> pkt=<idx> s=<f64>`
    pub fn to_line(&self) -> String {
        format!(
            "t={} link={}-{} ev={} pkt={} s={}",
            self.time,
            self.from,
            self.to,
            self.kind.as_str(),
            self.packet,
            self.s
        )
    }
}

impl fmt::Display for LinkEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line())
    }
}

/// Everything a simulation run produced: the packet schedule, every delivery
/// at every node, the derived per-node reset sequences, and (optionally) a
/// verbose link event log.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub node_count: u32,
    pub horizon: f64,
    pub packets: Vec<PacketRecord>,
    pub deliveries: Vec<Delivery>,
    /// Gateway arrival schedule `(a0, index)` for packets entering within
    /// the horizon.
    pub node0_arrivals: Vec<(f64, u32)>,
    resets: Vec<Vec<Reset>>,
    pub link_log: Option<Vec<LinkEvent>>,
    /// Identity of (scenario, service source); sample-path comparisons
    /// refuse traces with different fingerprints.
    pub fingerprint: u64,
}

impl Trace {
    /// Age-improving deliveries at `node`, with strictly increasing times
    /// and strictly increasing `s`.
    pub fn resets(&self, node: u32) -> &[Reset] {
        &self.resets[node as usize]
    }
}

/// Filters a node's delivery sequence down to its resets: the first delivery
/// and every strict freshness improvement, with same-instant improvements
/// coalesced into one step.
pub fn improving_resets(deliveries: impl IntoIterator<Item = (f64, f64)>) -> Vec<Reset> {
    let mut out: Vec<Reset> = Vec::new();
    let mut node = NodeState::new();
    for (time, s) in deliveries {
        if deliver_packet(&mut node, s) {
            match out.last_mut() {
                Some(last) if last.time == time => last.s = s,
                _ => out.push(Reset { time, s }),
            }
        }
    }
    out
}

/// Accumulates deliveries during a run and assembles the final [`Trace`].
pub struct TraceBuilder {
    node_count: u32,
    horizon: f64,
    pub nodes: Vec<NodeState>,
    deliveries: Vec<Delivery>,
    node0_arrivals: Vec<(f64, u32)>,
    log: Option<Vec<LinkEvent>>,
}

impl TraceBuilder {
    pub fn new(node_count: u32, horizon: f64, with_log: bool) -> Self {
        TraceBuilder {
            node_count,
            horizon,
            nodes: vec![NodeState::new(); node_count as usize],
            deliveries: Vec::new(),
            node0_arrivals: Vec::new(),
            log: if with_log { Some(Vec::new()) } else { None },
        }
    }

    pub fn record_node0_arrival(&mut self, a0: f64, index: u32) {
        self.node0_arrivals.push((a0, index));
    }

    /// Records a delivery and updates the node's freshness state.
    pub fn deliver(&mut self, node: u32, packet: QueuedPacket, time: f64) {
        let state = &mut self.nodes[node as usize];
        debug_assert!(
            self.deliveries
                .last()
                .map(|d| d.time <= time)
                .unwrap_or(true),
            "delivery times must be non-decreasing"
        );
        deliver_packet(state, packet.s);
        self.deliveries.push(Delivery {
            time,
            node,
            packet: packet.index,
            s: packet.s,
        });
    }

    pub fn log_link(&mut self, ev: LinkEvent) {
        if let Some(log) = &mut self.log {
            log.push(ev);
        }
    }

    pub fn finish(self, packets: Vec<PacketRecord>, fingerprint: u64) -> Trace {
        let mut per_node: Vec<Vec<(f64, f64)>> = vec![Vec::new(); self.node_count as usize];
        for d in &self.deliveries {
            per_node[d.node as usize].push((d.time, d.s));
        }
        let resets = per_node.into_iter().map(improving_resets).collect();
        Trace {
            node_count: self.node_count,
            horizon: self.horizon,
            packets,
            deliveries: self.deliveries,
            node0_arrivals: self.node0_arrivals,
            resets,
            link_log: self.log,
            fingerprint,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deliver_packet_follows_max_rule() {
        let mut n = NodeState::new();
        assert!(deliver_packet(&mut n, 3.0)); // first delivery
        assert_eq!(n.u, 3.0);
        assert!(deliver_packet(&mut n, 5.0)); // improvement
        assert_eq!(n.u, 5.0);
        assert!(!deliver_packet(&mut n, 2.0)); // stale, no reset
        assert_eq!(n.u, 5.0);
        assert!(!deliver_packet(&mut n, 5.0)); // equal, no reset
    }

    #[test]
    fn first_delivery_counts_even_at_zero() {
        let mut n = NodeState::new();
        assert!(deliver_packet(&mut n, 0.0));
        assert!(!deliver_packet(&mut n, 0.0));
    }

    #[test]
    fn improving_resets_filters_and_coalesces() {
        let resets = improving_resets(vec![(2.0, 1.0), (5.0, 4.0), (5.5, 3.0)]);
        assert_eq!(
            resets,
            vec![
                Reset { time: 2.0, s: 1.0 },
                Reset { time: 5.0, s: 4.0 }
            ]
        );
        // Two improvements at the same instant collapse into one step.
        let resets = improving_resets(vec![(1.0, 0.0), (1.0, 2.0), (3.0, 2.5)]);
        assert_eq!(
            resets,
            vec![
                Reset { time: 1.0, s: 2.0 },
                Reset { time: 3.0, s: 2.5 }
            ]
        );
    }

    #[test]
    fn link_event_line_format() {
        let ev = LinkEvent {
            time: 1.5,
            from: 0,
            to: 2,
            kind: LinkEventKind::Preempt,
            packet: 7,
            s: 0.25,
        };
        assert_eq!(ev.to_line(), "t=1.5 link=0-2 ev=preempt pkt=7 s=0.25");
    }
}
