//! The discrete-event core: event queue, link state machines, packet
//! propagation, trace recording.
//!
//! Events are processed in `(time, kind, insertion sequence)` order with
//! external arrivals ahead of transmission completions at equal times. All
//! events sharing an instant form a batch: deliveries and arrivals first
//! stage packets into link queues, then each affected link resolves its
//! scheduling once — the idle link starts the discipline's pick, the
//! preemptive link checks the freshest queued packet against the one in
//! service. For arrivals at distinct times this coincides with the
//! per-arrival decision of [`crate::policy::on_packet_arrival`]; for
//! simultaneous arrivals it makes the outcome independent of intra-batch
//! ordering.
//!
//! On delivery at a node the packet is staged at every outgoing link of
//! that node; duplicates are harmless because node freshness is a running
//! maximum.

mod queue;
mod source;
mod station;
mod trace;

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::hash::{Hash, Hasher};

use thiserror::Error;

pub use queue::{LinkQueue, QueuedPacket};
pub use source::{CouplingMode, CouplingStream, LinkClock, ServiceTimeSource};
pub use station::{run_station, MultiServerScenario};
pub use trace::{
    deliver_packet, improving_resets, Delivery, LinkEvent, LinkEventKind, NodeState, Reset, Trace,
};

use crate::model::{ArrivalSpec, Buffer, ModelError, NetworkGraph, PacketRecord, Scenario};
use crate::policy::PolicySpec;
use crate::rng::{derive_seed, RngStream, StreamId, StreamPurpose};
use trace::TraceBuilder;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("incompatible coupling: {0}")]
    IncompatibleCoupling(String),
    #[error("event cap {cap} exceeded at simulated time {time}")]
    EventCapExceeded { cap: u64, time: f64 },
    #[error("station needs at least one server, got {0}")]
    BadServerCount(u32),
    #[error("station arrivals must be in order; packet {0} arrives before its predecessor")]
    OutOfOrderArrivals(u32),
}

/// Run-level switches.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    /// Record a verbose per-link event log in the trace.
    pub log_link_events: bool,
    /// Safety valve on processed events.
    pub event_cap: u64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            log_link_events: false,
            event_cap: 100_000_000,
        }
    }
}

/// A packet in transmission: what is being sent and when it will land.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InService {
    pub packet: QueuedPacket,
    pub completion: f64,
}

/// Mutable state of one link during a run.
#[derive(Debug)]
pub struct LinkState {
    pub id: u32,
    pub from: u32,
    pub to: u32,
    pub buffer: Buffer,
    pub queue: LinkQueue,
    pub in_service: Option<InService>,
    token: u64,
    clock: LinkClock,
    staged: Vec<QueuedPacket>,
}

impl LinkState {
    /// Generation time of the in-service packet; `None` when idle.
    pub fn alpha(&self) -> Option<f64> {
        self.in_service.as_ref().map(|s| s.packet.s)
    }

    pub fn is_busy(&self) -> bool {
        self.in_service.is_some()
    }

    #[cfg(test)]
    pub(crate) fn for_tests(spec: &PolicySpec, buffer: Buffer) -> LinkState {
        LinkState {
            id: 0,
            from: 0,
            to: 1,
            buffer,
            queue: spec.queue_for(),
            in_service: None,
            token: 0,
            clock: ServiceTimeSource::IndependentStreams { seed: 0 }
                .clock_for(0, 1, &crate::dist::DistributionSpec::Exponential { rate: 1.0 })
                .unwrap(),
            staged: Vec::new(),
        }
    }

    #[cfg(test)]
    pub(crate) fn set_in_service_for_tests(&mut self, packet: QueuedPacket, completion: f64) {
        self.in_service = Some(InService { packet, completion });
    }
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Arrival { pos: u32 },
    Complete { link: u32, token: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    /// 0 = external arrival, 1 = transmission completion.
    class: u8,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Identity of (scenario, service source) baked into traces so that
/// sample-path comparisons can refuse mismatched inputs.
pub(crate) fn scenario_fingerprint(scenario: &Scenario, source_tag: u64) -> u64 {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    scenario.seed.hash(&mut h);
    scenario.horizon.to_bits().hash(&mut h);
    scenario.graph.node_count().hash(&mut h);
    for l in scenario.graph.links() {
        l.from.hash(&mut h);
        l.to.hash(&mut h);
        match l.buffer {
            Buffer::Finite(b) => (0u8, b).hash(&mut h),
            Buffer::Infinite => (1u8, 0u32).hash(&mut h),
        }
        l.dist.to_string().hash(&mut h);
    }
    match &scenario.arrivals {
        ArrivalSpec::Explicit(ps) => {
            for p in ps {
                p.index.hash(&mut h);
                p.s.to_bits().hash(&mut h);
                p.a0.to_bits().hash(&mut h);
            }
        }
        ArrivalSpec::Renewal { inter_gen, delay } => {
            inter_gen.to_string().hash(&mut h);
            delay.to_string().hash(&mut h);
        }
    }
    source_tag.hash(&mut h);
    h.finish()
}

struct Runner<'a> {
    spec: PolicySpec,
    graph: &'a NetworkGraph,
    horizon: f64,
    links: Vec<LinkState>,
    heap: BinaryHeap<std::cmp::Reverse<Event>>,
    seq: u64,
    builder: TraceBuilder,
    choice_stream: RngStream,
    events: u64,
    cap: u64,
}

impl<'a> Runner<'a> {
    fn push_event(&mut self, time: f64, class: u8, payload: Payload) {
        let ev = Event {
            time,
            class,
            seq: self.seq,
            payload,
        };
        self.seq += 1;
        self.heap.push(std::cmp::Reverse(ev));
    }

    fn apply(
        &mut self,
        ev: Event,
        packets: &[PacketRecord],
        touched: &mut BTreeSet<u32>,
    ) -> Result<(), EngineError> {
        self.events += 1;
        if self.events > self.cap {
            return Err(EngineError::EventCapExceeded {
                cap: self.cap,
                time: ev.time,
            });
        }
        match ev.payload {
            Payload::Arrival { pos } => {
                let p = packets[pos as usize];
                let qp = QueuedPacket {
                    index: p.index,
                    s: p.s,
                };
                self.builder.deliver(0, qp, ev.time);
                self.propagate(0, qp, touched);
            }
            Payload::Complete { link, token } => {
                let l = &mut self.links[link as usize];
                if l.token != token {
                    // Cancelled by a preemption; the replacement service
                    // scheduled its own completion.
                    return Ok(());
                }
                let svc = l.in_service.take().expect("busy link on completion");
                debug_assert_eq!(svc.completion, ev.time);
                let (from, to) = (l.from, l.to);
                let qp = svc.packet;
                self.builder.log_link(LinkEvent {
                    time: ev.time,
                    from,
                    to,
                    kind: LinkEventKind::Complete,
                    packet: qp.index,
                    s: qp.s,
                });
                touched.insert(link);
                self.builder.deliver(to, qp, ev.time);
                self.propagate(to, qp, touched);
            }
        }
        Ok(())
    }

    fn propagate(&mut self, node: u32, qp: QueuedPacket, touched: &mut BTreeSet<u32>) {
        for &l in self.graph.out_links(node) {
            self.links[l as usize].staged.push(qp);
            touched.insert(l);
        }
    }

    /// End-of-instant scheduling for one link: merge staged packets, give
    /// an idle link the discipline's pick, let a preemptive link displace a
    /// strictly staler transmission, then enforce the buffer.
    fn resolve_link(&mut self, l: u32, now: f64) {
        let Runner {
            spec,
            links,
            heap,
            seq,
            builder,
            choice_stream,
            ..
        } = self;
        let link = &mut links[l as usize];
        for p in link.staged.drain(..) {
            link.queue.push(p);
        }
        if link.in_service.is_none() {
            if let Some(p) = link.queue.select_remove(choice_stream) {
                start_service(link, p, now, heap, seq, builder);
            }
        } else if spec.preemptive() {
            if let Some(f) = link.queue.peek_freshest() {
                let alpha = link.alpha().expect("busy link has alpha");
                if f.s > alpha {
                    let old = link.in_service.take().expect("busy link").packet;
                    builder.log_link(LinkEvent {
                        time: now,
                        from: link.from,
                        to: link.to,
                        kind: LinkEventKind::Preempt,
                        packet: old.index,
                        s: old.s,
                    });
                    let fresh = link
                        .queue
                        .select_remove(choice_stream)
                        .expect("freshest packet present");
                    // The preempted packet re-enters the queue under the
                    // same buffer rule as an arrival.
                    link.queue.push(old);
                    start_service(link, fresh, now, heap, seq, builder);
                }
            }
        }
        for dropped in link.queue.trim(&link.buffer) {
            builder.log_link(LinkEvent {
                time: now,
                from: link.from,
                to: link.to,
                kind: LinkEventKind::Drop,
                packet: dropped.index,
                s: dropped.s,
            });
        }
        debug_assert!(link.buffer.holds(link.queue.len()), "buffer overflow");
        debug_assert!(
            link.in_service.is_some() || link.queue.is_empty(),
            "work-conserving link left idle with a non-empty queue"
        );
    }
}

fn start_service(
    link: &mut LinkState,
    p: QueuedPacket,
    now: f64,
    heap: &mut BinaryHeap<std::cmp::Reverse<Event>>,
    seq: &mut u64,
    builder: &mut TraceBuilder,
) {
    let completion = link.clock.completion_after(now);
    debug_assert!(completion > now, "service durations are strictly positive");
    link.token += 1;
    builder.log_link(LinkEvent {
        time: now,
        from: link.from,
        to: link.to,
        kind: LinkEventKind::Start,
        packet: p.index,
        s: p.s,
    });
    link.in_service = Some(InService {
        packet: p,
        completion,
    });
    let ev = Event {
        time: completion,
        class: 1,
        seq: *seq,
        payload: Payload::Complete {
            link: link.id,
            token: link.token,
        },
    };
    *seq += 1;
    heap.push(std::cmp::Reverse(ev));
}

/// Runs one policy over one scenario and returns the delivery trace.
///
/// Deterministic: the same `(scenario, policy, source, opts)` produce the
/// same trace.
pub fn run_simulation(
    scenario: &Scenario,
    policy: &PolicySpec,
    source: &ServiceTimeSource,
    opts: &RunOptions,
) -> Result<Trace, EngineError> {
    scenario.validate()?;
    if policy.preemptive() && source.coupling_mode() == Some(CouplingMode::IndexedServiceDraws) {
        return Err(EngineError::IncompatibleCoupling(
            "indexed-draw coupling is defined for non-preemptive policies only".into(),
        ));
    }
    let packets = scenario.packets()?;
    let graph = &scenario.graph;
    let mut links = Vec::with_capacity(graph.links().len());
    for (i, l) in graph.links().iter().enumerate() {
        links.push(LinkState {
            id: i as u32,
            from: l.from,
            to: l.to,
            buffer: l.buffer,
            queue: policy.queue_for(),
            in_service: None,
            token: 0,
            clock: source.clock_for(l.from, l.to, &l.dist)?,
            staged: Vec::new(),
        });
    }
    let choice_stream = RngStream::new(
        derive_seed(source.seed(), &[0x5043, policy.choice_seed()]),
        StreamId::global(StreamPurpose::PolicyChoice),
    );
    let mut runner = Runner {
        spec: *policy,
        graph,
        horizon: scenario.horizon,
        links,
        heap: BinaryHeap::new(),
        seq: 0,
        builder: TraceBuilder::new(graph.node_count(), scenario.horizon, opts.log_link_events),
        choice_stream,
        events: 0,
        cap: opts.event_cap,
    };
    for (pos, p) in packets.iter().enumerate() {
        if p.a0 <= scenario.horizon {
            runner.builder.record_node0_arrival(p.a0, p.index);
            runner.push_event(p.a0, 0, Payload::Arrival { pos: pos as u32 });
        }
    }

    let mut touched: BTreeSet<u32> = BTreeSet::new();
    while let Some(std::cmp::Reverse(ev)) = runner.heap.pop() {
        if ev.time > runner.horizon {
            break;
        }
        let t = ev.time;
        touched.clear();
        runner.apply(ev, &packets, &mut touched)?;
        loop {
            match runner.heap.peek() {
                Some(std::cmp::Reverse(next)) if next.time == t => {
                    let ev = runner.heap.pop().expect("peeked").0;
                    runner.apply(ev, &packets, &mut touched)?;
                }
                _ => break,
            }
        }
        for &l in &touched {
            runner.resolve_link(l, t);
        }
    }

    let fp = scenario_fingerprint(scenario, source.identity_tag());
    Ok(runner.builder.finish(packets, fp))
}
