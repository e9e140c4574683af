//! A single station with `m` parallel servers sharing one queue.
//!
//! Arrivals must be in order (non-decreasing arrival times); the destination
//! is the station output, recorded as node 1. Preemption restarts service
//! with a fresh draw, matching the restart semantics of the link engine.
//! With one server the station reduces exactly to a single-link network —
//! the draw lanes are chosen so that matched seeds reproduce the link
//! engine's trace bit for bit.

use std::collections::BinaryHeap;
use std::hash::{Hash, Hasher};

use crate::dist::DistributionSpec;
use crate::model::{Buffer, PacketRecord};
use crate::policy::PolicySpec;
use crate::rng::{derive_seed, RngStream, StreamId, StreamPurpose};

use super::queue::{LinkQueue, QueuedPacket};
use super::source::{LinkClock, ServiceTimeSource};
use super::trace::{LinkEvent, LinkEventKind, Trace, TraceBuilder};
use super::{EngineError, InService, RunOptions};

/// A multi-server station scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiServerScenario {
    pub servers: u32,
    pub buffer: Buffer,
    /// In-order arrivals: `a0` non-decreasing.
    pub arrivals: Vec<PacketRecord>,
    pub service: DistributionSpec,
    pub horizon: f64,
}

impl MultiServerScenario {
    pub fn validate(&self) -> Result<(), EngineError> {
        if self.servers == 0 {
            return Err(EngineError::BadServerCount(0));
        }
        if !(self.horizon > 0.0) {
            return Err(crate::model::ModelError::EmptyHorizon(self.horizon).into());
        }
        self.service
            .validate()
            .map_err(crate::model::ModelError::from)?;
        crate::model::validate_packet_sequence(&self.arrivals)?;
        for w in self.arrivals.windows(2) {
            if w[1].a0 < w[0].a0 {
                return Err(EngineError::OutOfOrderArrivals(w[1].index));
            }
        }
        Ok(())
    }

    fn fingerprint(&self, seed: u64) -> u64 {
        let mut h = std::collections::hash_map::DefaultHasher::new();
        self.servers.hash(&mut h);
        match self.buffer {
            Buffer::Finite(b) => (0u8, b).hash(&mut h),
            Buffer::Infinite => (1u8, 0u32).hash(&mut h),
        }
        for p in &self.arrivals {
            p.index.hash(&mut h);
            p.s.to_bits().hash(&mut h);
            p.a0.to_bits().hash(&mut h);
        }
        self.service.to_string().hash(&mut h);
        self.horizon.to_bits().hash(&mut h);
        seed.hash(&mut h);
        h.finish()
    }
}

struct Server {
    in_service: Option<InService>,
    token: u64,
    clock: LinkClock,
}

#[derive(Debug, Clone, Copy)]
enum Payload {
    Arrival { pos: u32 },
    Complete { server: u32, token: u64 },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    class: u8,
    seq: u64,
    payload: Payload,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
            .then(self.seq.cmp(&other.seq))
    }
}

/// Simulates the station under one policy; the returned trace records the
/// arrival process at node 0 and deliveries at node 1.
pub fn run_station(
    ms: &MultiServerScenario,
    policy: &PolicySpec,
    seed: u64,
    opts: &RunOptions,
) -> Result<Trace, EngineError> {
    ms.validate()?;
    let source = ServiceTimeSource::IndependentStreams { seed };
    let mut servers: Vec<Server> = (0..ms.servers)
        .map(|k| {
            Ok(Server {
                in_service: None,
                token: 0,
                clock: source.clock_for(0, 1 + k, &ms.service)?,
            })
        })
        .collect::<Result<_, EngineError>>()?;
    let mut queue = policy.queue_for();
    let mut staged: Vec<QueuedPacket> = Vec::new();
    let mut choice_stream = RngStream::new(
        derive_seed(seed, &[0x5043, policy.choice_seed()]),
        StreamId::global(StreamPurpose::PolicyChoice),
    );
    let mut builder = TraceBuilder::new(2, ms.horizon, opts.log_link_events);
    let mut heap: BinaryHeap<std::cmp::Reverse<Event>> = BinaryHeap::new();
    let mut seq = 0u64;
    for (pos, p) in ms.arrivals.iter().enumerate() {
        if p.a0 <= ms.horizon {
            builder.record_node0_arrival(p.a0, p.index);
            heap.push(std::cmp::Reverse(Event {
                time: p.a0,
                class: 0,
                seq,
                payload: Payload::Arrival { pos: pos as u32 },
            }));
            seq += 1;
        }
    }

    let mut events = 0u64;
    let apply = |ev: Event,
                     servers: &mut Vec<Server>,
                     builder: &mut TraceBuilder,
                     staged: &mut Vec<QueuedPacket>,
                     events: &mut u64,
                     touched: &mut bool|
     -> Result<(), EngineError> {
        *events += 1;
        if *events > opts.event_cap {
            return Err(EngineError::EventCapExceeded {
                cap: opts.event_cap,
                time: ev.time,
            });
        }
        match ev.payload {
            Payload::Arrival { pos } => {
                let p = ms.arrivals[pos as usize];
                let qp = QueuedPacket {
                    index: p.index,
                    s: p.s,
                };
                builder.deliver(0, qp, ev.time);
                staged.push(qp);
                *touched = true;
            }
            Payload::Complete { server, token } => {
                let srv = &mut servers[server as usize];
                if srv.token != token {
                    return Ok(());
                }
                let svc = srv.in_service.take().expect("busy server on completion");
                builder.log_link(LinkEvent {
                    time: ev.time,
                    from: 0,
                    to: 1,
                    kind: LinkEventKind::Complete,
                    packet: svc.packet.index,
                    s: svc.packet.s,
                });
                builder.deliver(1, svc.packet, ev.time);
                *touched = true;
            }
        }
        Ok(())
    };

    while let Some(std::cmp::Reverse(ev)) = heap.pop() {
        if ev.time > ms.horizon {
            break;
        }
        let t = ev.time;
        let mut touched = false;
        apply(ev, &mut servers, &mut builder, &mut staged, &mut events, &mut touched)?;
        loop {
            match heap.peek() {
                Some(std::cmp::Reverse(next)) if next.time == t => {
                    let ev = heap.pop().expect("peeked").0;
                    apply(ev, &mut servers, &mut builder, &mut staged, &mut events, &mut touched)?;
                }
                _ => break,
            }
        }
        if touched {
            resolve_station(
                policy,
                &mut servers,
                &mut queue,
                &mut staged,
                &ms.buffer,
                t,
                &mut choice_stream,
                &mut heap,
                &mut seq,
                &mut builder,
            );
        }
    }

    Ok(builder.finish(ms.arrivals.clone(), ms.fingerprint(seed)))
}

#[allow(clippy::too_many_arguments)]
fn resolve_station(
    policy: &PolicySpec,
    servers: &mut [Server],
    queue: &mut LinkQueue,
    staged: &mut Vec<QueuedPacket>,
    buffer: &Buffer,
    now: f64,
    choice_stream: &mut RngStream,
    heap: &mut BinaryHeap<std::cmp::Reverse<Event>>,
    seq: &mut u64,
    builder: &mut TraceBuilder,
) {
    for p in staged.drain(..) {
        queue.push(p);
    }
    // Fill free servers, lowest index first.
    while let Some(k) = servers.iter().position(|s| s.in_service.is_none()) {
        let Some(p) = queue.select_remove(choice_stream) else {
            break;
        };
        start_server(&mut servers[k], k as u32, p, now, heap, seq, builder);
    }
    // Preemption: displace the stalest transmission while a strictly
    // fresher packet waits.
    if policy.preemptive() {
        for _ in 0..=queue.len() + servers.len() {
            let Some((k, amin)) = servers
                .iter()
                .enumerate()
                .filter_map(|(k, s)| s.in_service.as_ref().map(|is| (k, is.packet.s)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            else {
                break;
            };
            let Some(f) = queue.peek_freshest() else {
                break;
            };
            if f.s <= amin {
                break;
            }
            let old = servers[k].in_service.take().expect("busy server").packet;
            builder.log_link(LinkEvent {
                time: now,
                from: 0,
                to: 1,
                kind: LinkEventKind::Preempt,
                packet: old.index,
                s: old.s,
            });
            let fresh = queue.select_remove(choice_stream).expect("freshest present");
            queue.push(old);
            start_server(&mut servers[k], k as u32, fresh, now, heap, seq, builder);
        }
    }
    for dropped in queue.trim(buffer) {
        builder.log_link(LinkEvent {
            time: now,
            from: 0,
            to: 1,
            kind: LinkEventKind::Drop,
            packet: dropped.index,
            s: dropped.s,
        });
    }
    debug_assert!(buffer.holds(queue.len()), "station buffer overflow");
    debug_assert!(
        queue.is_empty() || servers.iter().all(|s| s.in_service.is_some()),
        "work-conserving station left a server idle with a non-empty queue"
    );
}

fn start_server(
    server: &mut Server,
    id: u32,
    p: QueuedPacket,
    now: f64,
    heap: &mut BinaryHeap<std::cmp::Reverse<Event>>,
    seq: &mut u64,
    builder: &mut TraceBuilder,
) {
    let completion = server.clock.completion_after(now);
    debug_assert!(completion > now);
    server.token += 1;
    builder.log_link(LinkEvent {
        time: now,
        from: 0,
        to: 1,
        kind: LinkEventKind::Start,
        packet: p.index,
        s: p.s,
    });
    server.in_service = Some(InService {
        packet: p,
        completion,
    });
    heap.push(std::cmp::Reverse(Event {
        time: completion,
        class: 1,
        seq: *seq,
        payload: Payload::Complete {
            server: id,
            token: server.token,
        },
    }));
    *seq += 1;
}
