//! Domain types: update packets, network topology, and simulation scenarios.
//!
//! Packets are generated at an external source and enter the network through
//! the gateway, node 0. Generation times are non-decreasing in packet index,
//! but gateway arrival times need not be — packets may arrive out of order.

use std::str::FromStr;

use thiserror::Error;

use crate::dist::{DistError, DistributionSpec};
use crate::rng::{derive_seed, RngStream, StreamId, StreamPurpose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("node id {0} out of range")]
    BadNodeId(u32),
    #[error("self-loop at node {0}")]
    SelfLoop(u32),
    #[error("duplicate link ({0}, {1})")]
    DuplicateLink(u32, u32),
    #[error("node {0} unreachable from the gateway")]
    UnreachableNode(u32),
    #[error("graph needs at least one node (the gateway)")]
    NoNodes,
    #[error("arrival rate must be positive")]
    BadRate,
    #[error("horizon must be positive, got {0}")]
    EmptyHorizon(f64),
    #[error("packet {index}: generation times must be non-decreasing ({prev} then {s})")]
    GenerationOrder { index: u32, s: f64, prev: f64 },
    #[error("packet {index}: arrival {a0} precedes generation {s}")]
    ArrivalBeforeGeneration { index: u32, s: f64, a0: f64 },
    #[error("packet indices must be 1..=n in order, got {0}")]
    BadPacketIndex(u32),
    #[error("tree-restricted scenario has node {0} with in-degree {1}")]
    NotTree(u32, u32),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// One update packet: 1-based index, generation time, gateway arrival time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketRecord {
    pub index: u32,
    /// Generation time at the external source.
    pub s: f64,
    /// Arrival time at the gateway (node 0); `a0 >= s`.
    pub a0: f64,
}

/// Queue capacity of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Buffer {
    Finite(u32),
    Infinite,
}

impl Buffer {
    pub fn holds(&self, len: usize) -> bool {
        match self {
            Buffer::Finite(b) => len <= *b as usize,
            Buffer::Infinite => true,
        }
    }
}

impl std::fmt::Display for Buffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Buffer::Finite(b) => write!(f, "{b}"),
            Buffer::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Buffer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inf" | "infinite" => Ok(Buffer::Infinite),
            other => other
                .parse::<u32>()
                .map(Buffer::Finite)
                .map_err(|_| format!("bad buffer `{other}` (expected a count or `inf`)")),
        }
    }
}

/// A directed link with its queue capacity and transmission-time law.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub from: u32,
    pub to: u32,
    pub buffer: Buffer,
    pub dist: DistributionSpec,
}

/// Validated directed topology. Node 0 is the gateway.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGraph {
    node_count: u32,
    links: Vec<LinkSpec>,
    out: Vec<Vec<u32>>,
    in_degree: Vec<u32>,
}

/// Validates and builds a topology: node ids in range, no self-loops, at
/// most one link per ordered pair, every non-gateway node reachable from
/// node 0.
pub fn build_graph(node_count: u32, links: Vec<LinkSpec>) -> Result<NetworkGraph, ModelError> {
    NetworkGraph::build(node_count, links)
}

impl NetworkGraph {
    pub fn build(node_count: u32, links: Vec<LinkSpec>) -> Result<Self, ModelError> {
        if node_count == 0 {
            return Err(ModelError::NoNodes);
        }
        // Node ids are packed into 24 bits inside stream identifiers.
        if node_count > (1 << 24) {
            return Err(ModelError::BadNodeId(node_count));
        }
        let n = node_count as usize;
        let mut out: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut in_degree = vec![0u32; n];
        let mut seen = std::collections::HashSet::new();
        for (idx, link) in links.iter().enumerate() {
            if link.from >= node_count {
                return Err(ModelError::BadNodeId(link.from));
            }
            if link.to >= node_count {
                return Err(ModelError::BadNodeId(link.to));
            }
            if link.from == link.to {
                return Err(ModelError::SelfLoop(link.from));
            }
            if !seen.insert((link.from, link.to)) {
                return Err(ModelError::DuplicateLink(link.from, link.to));
            }
            link.dist.validate()?;
            out[link.from as usize].push(idx as u32);
            in_degree[link.to as usize] += 1;
        }
        let graph = NetworkGraph {
            node_count,
            links,
            out,
            in_degree,
        };
        // Reachability from the gateway; an unreachable node would have a
        // degenerate age and is rejected here.
        let mut reached = vec![false; n];
        let mut stack = vec![0u32];
        reached[0] = true;
        while let Some(v) = stack.pop() {
            for &l in &graph.out[v as usize] {
                let to = graph.links[l as usize].to;
                if !reached[to as usize] {
                    reached[to as usize] = true;
                    stack.push(to);
                }
            }
        }
        if let Some(v) = reached.iter().position(|r| !r) {
            return Err(ModelError::UnreachableNode(v as u32));
        }
        Ok(graph)
    }

    pub fn node_count(&self) -> u32 {
        self.node_count
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn link(&self, idx: u32) -> &LinkSpec {
        &self.links[idx as usize]
    }

    /// Indices of links leaving `node`.
    pub fn out_links(&self, node: u32) -> &[u32] {
        &self.out[node as usize]
    }

    pub fn in_degree(&self, node: u32) -> u32 {
        self.in_degree[node as usize]
    }

    /// True when every non-gateway node receives from exactly one node.
    pub fn is_tree(&self) -> bool {
        (1..self.node_count).all(|v| self.in_degree[v as usize] <= 1)
    }

    pub fn all_links_exponential(&self) -> bool {
        self.links.iter().all(|l| l.dist.is_exponential())
    }

    /// The unique `0 -> node` path in a tree-restricted graph, as link
    /// indices ordered from the gateway outward.
    pub fn tree_path(&self, node: u32) -> Option<Vec<u32>> {
        if node == 0 {
            return Some(Vec::new());
        }
        let mut path = Vec::new();
        let mut cur = node;
        for _ in 0..self.node_count {
            let incoming: Vec<u32> = (0..self.links.len() as u32)
                .filter(|&l| self.links[l as usize].to == cur)
                .collect();
            if incoming.len() != 1 {
                return None;
            }
            path.push(incoming[0]);
            cur = self.links[incoming[0] as usize].from;
            if cur == 0 {
                path.reverse();
                return Some(path);
            }
        }
        None
    }
}

/// Law of the gateway delay `a0 - s`.
#[derive(Debug, Clone, PartialEq)]
pub enum DelayModel {
    Constant(f64),
    /// Either value with probability 1/2.
    TwoPoint { low: f64, high: f64 },
    Exponential { mean: f64 },
}

impl DelayModel {
    fn validate(&self) -> Result<(), ModelError> {
        let ok = match self {
            DelayModel::Constant(c) => *c >= 0.0,
            DelayModel::TwoPoint { low, high } => *low >= 0.0 && *high >= 0.0,
            DelayModel::Exponential { mean } => *mean > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(ModelError::BadRate)
        }
    }

    /// Delay of packet `index`; one stream index per packet.
    fn sample(&self, stream: &mut RngStream) -> f64 {
        use rand::Rng;
        let mut rng = stream.next_rng();
        match self {
            DelayModel::Constant(c) => *c,
            DelayModel::TwoPoint { low, high } => {
                if rng.random::<f64>() < 0.5 {
                    *low
                } else {
                    *high
                }
            }
            DelayModel::Exponential { mean } => {
                let u: f64 = rng.random();
                -mean * (1.0 - u).ln()
            }
        }
    }
}

impl std::fmt::Display for DelayModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DelayModel::Constant(c) => write!(f, "const {c}"),
            DelayModel::TwoPoint { low, high } => write!(f, "two-point {low} {high}"),
            DelayModel::Exponential { mean } => write!(f, "exp {mean}"),
        }
    }
}

impl FromStr for DelayModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let toks: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| t.parse::<f64>().map_err(|e| e.to_string());
        match toks.as_slice() {
            ["const", c] => Ok(DelayModel::Constant(num(c)?)),
            ["two-point", a, b] => Ok(DelayModel::TwoPoint {
                low: num(a)?,
                high: num(b)?,
            }),
            ["exp", m] => Ok(DelayModel::Exponential { mean: num(m)? }),
            _ => Err(format!("bad delay model `{s}`")),
        }
    }
}

/// How the packet sequence of a scenario is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalSpec {
    Explicit(Vec<PacketRecord>),
    /// Renewal generation process truncated at the horizon; each packet's
    /// gateway arrival is its generation time plus a delay draw.
    Renewal {
        inter_gen: DistributionSpec,
        delay: DelayModel,
    },
}

impl ArrivalSpec {
    /// Generation gaps i.i.d. Erlang-2 with mean `1/lambda`, the standard
    /// source model of the experiments in this crate.
    pub fn erlang2(lambda: f64, delay: DelayModel) -> Result<Self, ModelError> {
        if !(lambda > 0.0) {
            return Err(ModelError::BadRate);
        }
        Ok(ArrivalSpec::Renewal {
            inter_gen: DistributionSpec::Erlang {
                shape: 2,
                rate: 2.0 * lambda,
            },
            delay,
        })
    }
}

/// A complete simulation input: topology, arrivals, horizon, seed.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub graph: NetworkGraph,
    pub arrivals: ArrivalSpec,
    /// Simulation end time; metrics are reported over `[0, horizon]`.
    pub horizon: f64,
    pub seed: u64,
    /// Marks the restricted topology class where each non-gateway node has
    /// in-degree one; validated when set.
    pub tree_restricted: bool,
}

impl Scenario {
    /// Idempotent, side-effect-free validation.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.horizon > 0.0) {
            return Err(ModelError::EmptyHorizon(self.horizon));
        }
        if self.tree_restricted {
            for v in 1..self.graph.node_count() {
                let d = self.graph.in_degree(v);
                if d > 1 {
                    return Err(ModelError::NotTree(v, d));
                }
            }
        }
        match &self.arrivals {
            ArrivalSpec::Explicit(packets) => validate_packet_sequence(packets),
            ArrivalSpec::Renewal { inter_gen, delay } => {
                inter_gen.validate()?;
                if !(inter_gen.mean() > 0.0) {
                    return Err(ModelError::BadRate);
                }
                delay.validate()
            }
        }
    }

    /// Resolves the packet sequence. Pure: same scenario, same packets.
    pub fn packets(&self) -> Result<Vec<PacketRecord>, ModelError> {
        self.validate()?;
        match &self.arrivals {
            ArrivalSpec::Explicit(packets) => Ok(packets.clone()),
            ArrivalSpec::Renewal { inter_gen, delay } => {
                generate_arrivals(inter_gen, delay, self.horizon, self.seed)
            }
        }
    }
}

pub(crate) fn validate_packet_sequence(packets: &[PacketRecord]) -> Result<(), ModelError> {
    let mut prev_s = 0.0;
    for (i, p) in packets.iter().enumerate() {
        if p.index != i as u32 + 1 {
            return Err(ModelError::BadPacketIndex(p.index));
        }
        if p.s < prev_s {
            return Err(ModelError::GenerationOrder {
                index: p.index,
                s: p.s,
                prev: prev_s,
            });
        }
        if p.a0 < p.s {
            return Err(ModelError::ArrivalBeforeGeneration {
                index: p.index,
                s: p.s,
                a0: p.a0,
            });
        }
        prev_s = p.s;
    }
    Ok(())
}

/// Generates the packet sequence of a renewal source truncated at the
/// horizon. Deterministic for a fixed `(spec, horizon, seed)` triple.
pub fn generate_arrivals(
    inter_gen: &DistributionSpec,
    delay: &DelayModel,
    horizon: f64,
    seed: u64,
) -> Result<Vec<PacketRecord>, ModelError> {
    inter_gen.validate()?;
    delay.validate()?;
    if !(horizon > 0.0) {
        return Err(ModelError::EmptyHorizon(horizon));
    }
    let arrival_seed = derive_seed(seed, &[0x41]);
    let mut gen_stream = RngStream::new(arrival_seed, StreamId::global(StreamPurpose::ArrivalGen));
    let mut delay_stream =
        RngStream::new(arrival_seed, StreamId::global(StreamPurpose::ArrivalDelay));
    let mut packets = Vec::new();
    let mut t = 0.0;
    let mut index = 1u32;
    loop {
        t += inter_gen.sample(&mut gen_stream);
        if t > horizon {
            break;
        }
        let a0 = t + delay.sample(&mut delay_stream);
        packets.push(PacketRecord { index, s: t, a0 });
        index += 1;
    }
    debug_assert!(validate_packet_sequence(&packets).is_ok());
    Ok(packets)
}
