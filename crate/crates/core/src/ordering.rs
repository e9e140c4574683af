//! Executable forms of the optimality statements: coupled sample paths,
//! per-path dominance checks, empirical stochastic ordering, a
//! queueing-free age lower bound, and the multi-server completion-time
//! scenario.
//!
//! # Coupling
//!
//! With Poisson-epoch coupling every link carries one shared tick process;
//! a busy link delivers exactly at its next tick. Because all shipped
//! policies are work-conserving and queue occupancy evolves identically
//! under shared ticks, coupled runs deliver at identical instants — which
//! turns "smaller age in distribution" into a deterministic inequality on
//! each sample path, checkable at every event time. Indexed-draw coupling
//! plays the same role for non-preemptive policies under arbitrary service
//! laws: the k-th service started on a link consumes the k-th shared draw,
//! so busy periods and delivery epochs again agree across policies and
//! only the packet-to-slot assignment differs.
//!
//! # Lower bound
//!
//! The factor-three check needs an age lower bound on tree-restricted
//! topologies. The bound used here is a queueing-free relaxation: every
//! packet reaches every node along its unique path after fresh i.i.d.
//! service draws, with no waiting. Any non-preemptive policy delivers a
//! packet no earlier than its own path transmissions allow, so this
//! relaxation lower-bounds every such policy's age. It is weaker than (or
//! equal to) the tightest bound, hence a measured ratio within three is a
//! conservative confirmation while a larger ratio is inconclusive rather
//! than a refutation — reports say which bound was used.

use thiserror::Error;

use crate::age::{AgeError, AgeProcess};
use crate::dist::DistributionSpec;
use crate::engine::{
    improving_resets, run_simulation, run_station, CouplingMode, CouplingStream, EngineError,
    RunOptions, ServiceTimeSource, Trace,
};
use crate::model::{Buffer, LinkSpec, ModelError, NetworkGraph, Scenario};
use crate::policy::PolicySpec;
use crate::rng::{RngStream, StreamId, StreamPurpose};
use crate::stats::{ccdf_at, dkw_band};

pub use crate::engine::MultiServerScenario;

#[derive(Debug, Error)]
pub enum OrderingError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Age(#[from] AgeError),
    #[error("incompatible coupling mode: {0}")]
    IncompatibleCouplingMode(String),
    #[error("traces come from different scenarios or coupling streams")]
    ScenarioMismatch,
    #[error("need at least 100 samples per side, got {0}")]
    TooFewSamples(usize),
    #[error("comparison grid is empty")]
    EmptyGrid,
    #[error("scenario is not tree-restricted")]
    NotTreeRestricted,
    #[error("lower-bound average age is zero at node {0}")]
    DivisionByZeroAge(u32),
    #[error("per-node metric lists have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
}

/// Outcome of a per-sample-path dominance check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceReport {
    pub holds: bool,
    pub first_violation: Option<DominanceViolation>,
    /// Number of (event time, node) comparisons performed.
    pub checked: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DominanceViolation {
    pub time: f64,
    pub node: u32,
    pub u_dominant: f64,
    pub u_other: f64,
}

/// Verdict of an empirical stochastic-order comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingVerdict {
    /// True when the data are consistent with `X` stochastically smaller
    /// than `Y` within the confidence band.
    pub consistent: bool,
    /// Largest observed `P{X > g} - P{Y > g}` over the grid.
    pub max_ccdf_excess: f64,
    /// Uniform band the excess is allowed to reach.
    pub band: f64,
    pub grid_points: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub confidence: f64,
}

/// Per-node ratios of a policy's average age to a lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor3Report {
    pub ratios: Vec<f64>,
    pub all_within_factor3: bool,
}

/// Runs every policy on the same scenario with shared link randomness.
///
/// Poisson-epoch coupling requires all-exponential links; indexed-draw
/// coupling requires every policy to be non-preemptive. Each returned
/// trace is individually distributed as an independent run of its policy.
pub fn coupled_run(
    scenario: &Scenario,
    policies: &[PolicySpec],
    coupling: CouplingStream,
    opts: &RunOptions,
) -> Result<Vec<Trace>, OrderingError> {
    match coupling.mode {
        CouplingMode::PoissonEpochs => {
            if !scenario.graph.all_links_exponential() {
                return Err(OrderingError::IncompatibleCouplingMode(
                    "poisson-epochs coupling needs exponential links everywhere".into(),
                ));
            }
        }
        CouplingMode::IndexedServiceDraws => {
            if let Some(p) = policies.iter().find(|p| p.preemptive()) {
                return Err(OrderingError::IncompatibleCouplingMode(format!(
                    "indexed-draw coupling compares non-preemptive policies only, got `{p}`"
                )));
            }
        }
    }
    let source = ServiceTimeSource::Coupled(coupling);
    policies
        .iter()
        .map(|p| run_simulation(scenario, p, &source, opts).map_err(OrderingError::from))
        .collect()
}

/// Checks the node-wise freshness inequality `U_dominant(t) >= U_other(t)`
/// at every event time of either trace.
///
/// Both freshness processes are piecewise constant and right-continuous, so
/// checking at reset instants is exhaustive. The traces must come from the
/// same scenario and coupling stream.
pub fn check_sample_path_dominance(
    dominant: &Trace,
    other: &Trace,
) -> Result<DominanceReport, OrderingError> {
    if dominant.fingerprint != other.fingerprint || dominant.node_count != other.node_count {
        return Err(OrderingError::ScenarioMismatch);
    }
    let mut checked = 0u64;
    let mut first: Option<DominanceViolation> = None;
    for node in 0..dominant.node_count {
        let rp = dominant.resets(node);
        let rq = other.resets(node);
        let (mut ip, mut iq) = (0usize, 0usize);
        let (mut up, mut uq) = (0.0f64, 0.0f64);
        while ip < rp.len() || iq < rq.len() {
            let tp = rp.get(ip).map(|r| r.time).unwrap_or(f64::INFINITY);
            let tq = rq.get(iq).map(|r| r.time).unwrap_or(f64::INFINITY);
            let t = tp.min(tq);
            while ip < rp.len() && rp[ip].time <= t {
                up = rp[ip].s;
                ip += 1;
            }
            while iq < rq.len() && rq[iq].time <= t {
                uq = rq[iq].s;
                iq += 1;
            }
            checked += 1;
            if up < uq {
                let v = DominanceViolation {
                    time: t,
                    node,
                    u_dominant: up,
                    u_other: uq,
                };
                // Report the earliest violation across nodes.
                if first.map(|f| (t, node) < (f.time, f.node)).unwrap_or(true) {
                    first = Some(v);
                }
                break;
            }
        }
    }
    Ok(DominanceReport {
        holds: first.is_none(),
        first_violation: first,
        checked,
    })
}

/// Compares empirical CCDFs of two samples against the hypothesis
/// `X <=_st Y` using a uniform two-sample DKW band at `confidence`.
pub fn empirical_stochastic_order(
    samples_x: &[f64],
    samples_y: &[f64],
    grid: &[f64],
    confidence: f64,
) -> Result<OrderingVerdict, OrderingError> {
    let n = samples_x.len().min(samples_y.len());
    if n < 100 {
        return Err(OrderingError::TooFewSamples(n));
    }
    if grid.is_empty() {
        return Err(OrderingError::EmptyGrid);
    }
    let mut xs = samples_x.to_vec();
    let mut ys = samples_y.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let mut max_excess = f64::NEG_INFINITY;
    for &g in grid {
        let excess = ccdf_at(&xs, g) - ccdf_at(&ys, g);
        max_excess = max_excess.max(excess);
    }
    let band = dkw_band(xs.len(), ys.len(), confidence);
    Ok(OrderingVerdict {
        consistent: max_excess <= band,
        max_ccdf_excess: max_excess,
        band,
        grid_points: grid.len(),
        n_x: xs.len(),
        n_y: ys.len(),
        confidence,
    })
}

/// A comparison grid spanning both samples: `n` evenly spaced quantiles of
/// the pooled values.
pub fn pooled_grid(samples_x: &[f64], samples_y: &[f64], n: usize) -> Vec<f64> {
    let mut pooled: Vec<f64> = samples_x
        .iter()
        .chain(samples_y)
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    pooled.sort_by(f64::total_cmp);
    if pooled.is_empty() || n == 0 {
        return Vec::new();
    }
    (0..n)
        .map(|i| {
            let q = (i as f64 + 0.5) / n as f64;
            let idx = ((pooled.len() as f64 * q) as usize).min(pooled.len() - 1);
            pooled[idx]
        })
        .collect()
}

/// Queueing-free age lower bound on a tree-restricted scenario.
///
/// Every packet is hypothetically delivered to each node at its gateway
/// arrival time plus the sum of fresh i.i.d. service draws along the unique
/// path, with no queueing or blocking. Returns one age process per node.
pub fn infinite_server_lower_bound(
    scenario: &Scenario,
    seed: u64,
) -> Result<Vec<AgeProcess>, OrderingError> {
    scenario.validate()?;
    if !scenario.graph.is_tree() {
        return Err(OrderingError::NotTreeRestricted);
    }
    let packets = scenario.packets()?;
    let graph = &scenario.graph;
    // Draw k of link l is a pure function of (seed, l, k): nested paths
    // reuse the same per-link draws, mirroring a physical relaxation.
    let link_draw = |link: &LinkSpec, packet_idx: u32| -> f64 {
        let stream = RngStream::new(
            seed,
            StreamId::link(StreamPurpose::LowerBound, link.from, link.to),
        );
        link.dist.sample_with(&mut stream.rng_at(packet_idx as u64))
    };
    let mut out = Vec::with_capacity(graph.node_count() as usize);
    for node in 0..graph.node_count() {
        let path = graph.tree_path(node).ok_or(OrderingError::NotTreeRestricted)?;
        let mut events: Vec<(f64, f64)> = packets
            .iter()
            .map(|p| {
                let delivery = p.a0
                    + path
                        .iter()
                        .map(|&l| link_draw(graph.link(l), p.index))
                        .sum::<f64>();
                (delivery, p.s)
            })
            .filter(|&(t, _)| t <= scenario.horizon)
            .collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        out.push(AgeProcess::new(
            improving_resets(events),
            scenario.horizon,
        )?);
    }
    Ok(out)
}

/// Element-wise ratio of a policy's per-node average age to a lower bound,
/// with the within-factor-three flag.
pub fn factor3_ratio(
    policy_avg_age: &[f64],
    lower_bound_avg_age: &[f64],
) -> Result<Factor3Report, OrderingError> {
    if policy_avg_age.len() != lower_bound_avg_age.len() {
        return Err(OrderingError::LengthMismatch(
            policy_avg_age.len(),
            lower_bound_avg_age.len(),
        ));
    }
    let mut ratios = Vec::with_capacity(policy_avg_age.len());
    for (node, (&a, &b)) in policy_avg_age.iter().zip(lower_bound_avg_age).enumerate() {
        if b <= 0.0 {
            return Err(OrderingError::DivisionByZeroAge(node as u32));
        }
        ratios.push(a / b);
    }
    let all_within = ratios.iter().all(|&r| r <= 3.0);
    Ok(Factor3Report {
        ratios,
        all_within_factor3: all_within,
    })
}

/// Simulates the multi-server station under one policy. Preemption restarts
/// service with a fresh draw; completion times at the destination follow
/// from [`crate::age::completion_times`].
pub fn run_multiserver_nwu(
    ms: &MultiServerScenario,
    policy: &PolicySpec,
    seed: u64,
) -> Result<Trace, OrderingError> {
    run_station(ms, policy, seed, &RunOptions::default()).map_err(OrderingError::from)
}

/// Deterministic pseudo-random DAG with exponential links and mixed
/// buffers: a spanning arborescence rooted at the gateway plus extra
/// forward edges. Used as a coupling test topology.
pub fn random_dag(node_count: u32, seed: u64) -> NetworkGraph {
    use rand::Rng;
    assert!(node_count >= 2);
    let mut stream = RngStream::new(seed, StreamId::global(StreamPurpose::PolicyChoice));
    let mut rng = stream.next_rng();
    let rates = [0.5, 1.0, 2.0];
    let buffers = [Buffer::Finite(1), Buffer::Finite(2), Buffer::Infinite];
    let mut links = Vec::new();
    let mut present = std::collections::HashSet::new();
    for j in 1..node_count {
        let parent = rng.random_range(0..j);
        present.insert((parent, j));
        links.push(LinkSpec {
            from: parent,
            to: j,
            buffer: buffers[rng.random_range(0..buffers.len())],
            dist: DistributionSpec::Exponential {
                rate: rates[rng.random_range(0..rates.len())],
            },
        });
    }
    for i in 0..node_count {
        for j in (i + 1)..node_count {
            if !present.contains(&(i, j)) && rng.random::<f64>() < 0.3 {
                links.push(LinkSpec {
                    from: i,
                    to: j,
                    buffer: buffers[rng.random_range(0..buffers.len())],
                    dist: DistributionSpec::Exponential {
                        rate: rates[rng.random_range(0..rates.len())],
                    },
                });
            }
        }
    }
    NetworkGraph::build(node_count, links).expect("construction keeps the graph valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::DistributionSpec;
    use crate::model::{build_graph, generate_arrivals, ArrivalSpec, DelayModel, PacketRecord};
    use crate::policy::PolicyKind;

    fn const_link_scenario(packets: Vec<PacketRecord>, horizon: f64) -> Scenario {
        Scenario {
            graph: build_graph(
                2,
                vec![LinkSpec {
                    from: 0,
                    to: 1,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Constant { value: 1.0 },
                }],
            )
            .unwrap(),
            arrivals: ArrivalSpec::Explicit(packets),
            horizon,
            seed: 7,
            tree_restricted: true,
        }
    }

    fn two_packet_scenario() -> Scenario {
        // Two packets sharing an arrival instant, the second one fresher.
        const_link_scenario(
            vec![
                PacketRecord {
                    index: 1,
                    s: 0.0,
                    a0: 1.0,
                },
                PacketRecord {
                    index: 2,
                    s: 1.0,
                    a0: 1.0,
                },
            ],
            10.0,
        )
    }

    fn run(scenario: &Scenario, kind: PolicyKind) -> Trace {
        run_simulation(
            scenario,
            &PolicySpec::new(kind),
            &ServiceTimeSource::IndependentStreams { seed: 3 },
            &RunOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn identical_traces_dominate_reflexively() {
        let s = two_packet_scenario();
        let a = run(&s, PolicyKind::NonPrmpLgfs);
        let b = run(&s, PolicyKind::NonPrmpLgfs);
        let report = check_sample_path_dominance(&a, &b).unwrap();
        assert!(report.holds);
        assert!(report.checked > 0);
    }

    #[test]
    fn hand_simulated_pair_orders_one_way_only() {
        let s = two_packet_scenario();
        let lgfs = run(&s, PolicyKind::NonPrmpLgfs);
        let fcfs = run(&s, PolicyKind::Fcfs);
        // Hand simulation: freshest-first sends the fresher packet first
        // and delivers it at t=2; FCFS sends the stale one first.
        let node1 = |t: &Trace| {
            t.resets(1)
                .iter()
                .map(|r| (r.time, r.s))
                .collect::<Vec<_>>()
        };
        assert_eq!(node1(&lgfs), vec![(2.0, 1.0)]);
        assert_eq!(node1(&fcfs), vec![(2.0, 0.0), (3.0, 1.0)]);
        let forward = check_sample_path_dominance(&lgfs, &fcfs).unwrap();
        assert!(forward.holds, "{:?}", forward.first_violation);
        let backward = check_sample_path_dominance(&fcfs, &lgfs).unwrap();
        assert!(!backward.holds);
        let v = backward.first_violation.unwrap();
        assert_eq!(v.time, 2.0);
        assert_eq!(v.node, 1);
        assert_eq!(v.u_dominant, 0.0);
        assert_eq!(v.u_other, 1.0);
    }

    #[test]
    fn traces_from_different_scenarios_are_rejected() {
        let a = run(&two_packet_scenario(), PolicyKind::Fcfs);
        let other = const_link_scenario(
            vec![PacketRecord {
                index: 1,
                s: 0.0,
                a0: 0.5,
            }],
            10.0,
        );
        let b = run(&other, PolicyKind::Fcfs);
        assert!(matches!(
            check_sample_path_dominance(&a, &b),
            Err(OrderingError::ScenarioMismatch)
        ));
    }

    #[test]
    fn coupling_a_policy_with_itself_gives_identical_traces() {
        let graph = build_graph(
            3,
            vec![
                LinkSpec {
                    from: 0,
                    to: 1,
                    buffer: Buffer::Finite(1),
                    dist: DistributionSpec::Exponential { rate: 1.0 },
                },
                LinkSpec {
                    from: 1,
                    to: 2,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Exponential { rate: 2.0 },
                },
            ],
        )
        .unwrap();
        let scenario = Scenario {
            graph,
            arrivals: ArrivalSpec::erlang2(
                1.0,
                DelayModel::TwoPoint {
                    low: 1.0,
                    high: 100.0,
                },
            )
            .unwrap(),
            horizon: 200.0,
            seed: 11,
            tree_restricted: false,
        };
        let coupling = CouplingStream {
            mode: CouplingMode::PoissonEpochs,
            seed: 21,
        };
        let spec = PolicySpec::new(PolicyKind::PrmpLgfs);
        let traces =
            coupled_run(&scenario, &[spec, spec], coupling, &RunOptions::default()).unwrap();
        assert_eq!(traces[0], traces[1]);
    }

    #[test]
    fn epoch_coupling_delivers_only_at_shared_ticks() {
        let rate = 1.5;
        let graph = build_graph(
            2,
            vec![LinkSpec {
                from: 0,
                to: 1,
                buffer: Buffer::Infinite,
                dist: DistributionSpec::Exponential { rate },
            }],
        )
        .unwrap();
        let scenario = Scenario {
            graph,
            arrivals: ArrivalSpec::erlang2(1.0, DelayModel::Constant(0.5)).unwrap(),
            horizon: 100.0,
            seed: 5,
            tree_restricted: true,
        };
        let coupling = CouplingStream {
            mode: CouplingMode::PoissonEpochs,
            seed: 77,
        };
        let opts = RunOptions {
            log_link_events: true,
            ..RunOptions::default()
        };
        for kind in [PolicyKind::PrmpLgfs, PolicyKind::Fcfs] {
            let trace = coupled_run(&scenario, &[PolicySpec::new(kind)], coupling, &opts)
                .unwrap()
                .remove(0);
            // Reconstruct the tick set from the shared stream.
            let mut stream = RngStream::new(
                coupling.seed,
                StreamId::link(StreamPurpose::LinkEpochs, 0, 1),
            );
            let gap = DistributionSpec::Exponential { rate };
            let mut epochs = Vec::new();
            let mut t = 0.0;
            while t <= 100.0 {
                t += gap.sample(&mut stream);
                epochs.push(t);
            }
            for ev in trace.link_log.as_ref().unwrap() {
                if ev.kind == crate::engine::LinkEventKind::Complete {
                    assert!(
                        epochs.contains(&ev.time),
                        "delivery at {} is not a shared tick",
                        ev.time
                    );
                }
            }
        }
    }

    #[test]
    fn coupling_mode_preconditions_are_enforced() {
        let s = two_packet_scenario(); // constant-service link
        let err = coupled_run(
            &s,
            &[PolicySpec::new(PolicyKind::Fcfs)],
            CouplingStream {
                mode: CouplingMode::PoissonEpochs,
                seed: 1,
            },
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OrderingError::IncompatibleCouplingMode(_)));
        let err = coupled_run(
            &s,
            &[PolicySpec::new(PolicyKind::PrmpLgfs)],
            CouplingStream {
                mode: CouplingMode::IndexedServiceDraws,
                seed: 1,
            },
            &RunOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, OrderingError::IncompatibleCouplingMode(_)));
    }

    #[test]
    fn empirical_order_on_identical_samples() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 10.0).collect();
        let grid = pooled_grid(&xs, &xs, 32);
        let v = empirical_stochastic_order(&xs, &xs, &grid, 0.99).unwrap();
        assert!(v.consistent);
        assert!(v.max_ccdf_excess <= 0.0);
    }

    #[test]
    fn empirical_order_separates_exponential_rates() {
        let fast = DistributionSpec::Exponential { rate: 2.0 };
        let slow = DistributionSpec::Exponential { rate: 1.0 };
        let mut stream = RngStream::new(17, StreamId::global(StreamPurpose::PolicyChoice));
        let xs: Vec<f64> = (0..10_000).map(|_| fast.sample(&mut stream)).collect();
        let ys: Vec<f64> = (0..10_000).map(|_| slow.sample(&mut stream)).collect();
        let grid = pooled_grid(&xs, &ys, 64);
        let forward = empirical_stochastic_order(&xs, &ys, &grid, 0.99).unwrap();
        assert!(forward.consistent, "rate 2 is stochastically smaller");
        let backward = empirical_stochastic_order(&ys, &xs, &grid, 0.99).unwrap();
        assert!(!backward.consistent);
        assert!(
            empirical_stochastic_order(&xs[..50], &ys, &grid, 0.99).is_err(),
            "sample floor enforced"
        );
    }

    #[test]
    fn lower_bound_on_constant_links_is_exact_arithmetic() {
        // Single constant link, arrivals with a0 = s: the relaxation
        // delivers packet i at s_i + c.
        let c = 0.7;
        let packets: Vec<PacketRecord> = (1..=5)
            .map(|i| PacketRecord {
                index: i,
                s: i as f64,
                a0: i as f64,
            })
            .collect();
        let scenario = Scenario {
            graph: build_graph(
                2,
                vec![LinkSpec {
                    from: 0,
                    to: 1,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Constant { value: c },
                }],
            )
            .unwrap(),
            arrivals: ArrivalSpec::Explicit(packets),
            horizon: 50.0,
            seed: 1,
            tree_restricted: true,
        };
        let lb = infinite_server_lower_bound(&scenario, 9).unwrap();
        let times: Vec<f64> = lb[1].resets().iter().map(|r| r.time).collect();
        assert_eq!(times, vec![1.0 + c, 2.0 + c, 3.0 + c, 4.0 + c, 5.0 + c]);
        // Node 0 keeps the raw arrival process.
        assert_eq!(lb[0].resets().len(), 5);
        assert_eq!(lb[0].resets()[0].time, 1.0);
    }

    #[test]
    fn lower_bound_two_hop_path_sums() {
        let packets = vec![PacketRecord {
            index: 1,
            s: 0.0,
            a0: 0.0,
        }];
        let scenario = Scenario {
            graph: build_graph(
                3,
                vec![
                    LinkSpec {
                        from: 0,
                        to: 1,
                        buffer: Buffer::Infinite,
                        dist: DistributionSpec::Constant { value: 1.5 },
                    },
                    LinkSpec {
                        from: 1,
                        to: 2,
                        buffer: Buffer::Infinite,
                        dist: DistributionSpec::Constant { value: 0.7 },
                    },
                ],
            )
            .unwrap(),
            arrivals: ArrivalSpec::Explicit(packets),
            horizon: 10.0,
            seed: 1,
            tree_restricted: true,
        };
        let lb = infinite_server_lower_bound(&scenario, 4).unwrap();
        assert_eq!(lb[2].resets().len(), 1);
        assert!((lb[2].resets()[0].time - 2.2).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_vanishing_service_approaches_arrival_process() {
        let packets: Vec<PacketRecord> = (1..=4)
            .map(|i| PacketRecord {
                index: i,
                s: i as f64,
                a0: i as f64 + 0.25,
            })
            .collect();
        let tiny = 1e-9;
        let scenario = Scenario {
            graph: build_graph(
                2,
                vec![LinkSpec {
                    from: 0,
                    to: 1,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Constant { value: tiny },
                }],
            )
            .unwrap(),
            arrivals: ArrivalSpec::Explicit(packets),
            horizon: 20.0,
            seed: 2,
            tree_restricted: true,
        };
        let lb = infinite_server_lower_bound(&scenario, 3).unwrap();
        for (a, b) in lb[0].resets().iter().zip(lb[1].resets()) {
            assert!((b.time - a.time - tiny).abs() < 1e-12);
            assert_eq!(a.s, b.s);
        }
    }

    #[test]
    fn lower_bound_rejects_non_tree_graphs() {
        let graph = build_graph(
            3,
            vec![
                LinkSpec {
                    from: 0,
                    to: 1,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Exponential { rate: 1.0 },
                },
                LinkSpec {
                    from: 0,
                    to: 2,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Exponential { rate: 1.0 },
                },
                LinkSpec {
                    from: 1,
                    to: 2,
                    buffer: Buffer::Infinite,
                    dist: DistributionSpec::Exponential { rate: 1.0 },
                },
            ],
        )
        .unwrap();
        let scenario = Scenario {
            graph,
            arrivals: ArrivalSpec::Explicit(vec![]),
            horizon: 10.0,
            seed: 0,
            tree_restricted: false,
        };
        assert!(matches!(
            infinite_server_lower_bound(&scenario, 1),
            Err(OrderingError::NotTreeRestricted)
        ));
    }

    #[test]
    fn factor3_arithmetic() {
        let r = factor3_ratio(&[6.0], &[2.0]).unwrap();
        assert_eq!(r.ratios, vec![3.0]);
        assert!(r.all_within_factor3, "boundary counts as within");
        let r = factor3_ratio(&[1.5, 2.5], &[1.5, 2.5]).unwrap();
        assert_eq!(r.ratios, vec![1.0, 1.0]);
        let r = factor3_ratio(&[6.1], &[2.0]).unwrap();
        assert!(!r.all_within_factor3);
        assert!(matches!(
            factor3_ratio(&[1.0], &[0.0]),
            Err(OrderingError::DivisionByZeroAge(0))
        ));
        assert!(matches!(
            factor3_ratio(&[1.0, 2.0], &[1.0]),
            Err(OrderingError::LengthMismatch(2, 1))
        ));
    }

    #[test]
    fn single_server_station_matches_single_link_engine() {
        let inter = DistributionSpec::Erlang { shape: 2, rate: 2.0 };
        let arrivals =
            generate_arrivals(&inter, &DelayModel::Constant(0.0), 300.0, 61).unwrap();
        let service = DistributionSpec::Exponential { rate: 1.2 };
        let seed = 909;
        for kind in [PolicyKind::PrmpLgfs, PolicyKind::Fcfs] {
            let ms = MultiServerScenario {
                servers: 1,
                buffer: Buffer::Finite(2),
                arrivals: arrivals.clone(),
                service: service.clone(),
                horizon: 300.0,
            };
            let station = run_multiserver_nwu(&ms, &PolicySpec::new(kind), seed).unwrap();
            let link_scenario = Scenario {
                graph: build_graph(
                    2,
                    vec![LinkSpec {
                        from: 0,
                        to: 1,
                        buffer: Buffer::Finite(2),
                        dist: service.clone(),
                    }],
                )
                .unwrap(),
                arrivals: ArrivalSpec::Explicit(arrivals.clone()),
                horizon: 300.0,
                seed: 0,
                tree_restricted: true,
            };
            let link = run_simulation(
                &link_scenario,
                &PolicySpec::new(kind),
                &ServiceTimeSource::IndependentStreams { seed },
                &RunOptions::default(),
            )
            .unwrap();
            assert_eq!(station.deliveries, link.deliveries, "policy {kind:?}");
            assert_eq!(station.resets(1), link.resets(1));
        }
    }

    #[test]
    fn in_order_arrivals_make_lgfs_and_lcfs_identical() {
        let inter = DistributionSpec::Exponential { rate: 1.0 };
        let arrivals =
            generate_arrivals(&inter, &DelayModel::Constant(0.0), 400.0, 13).unwrap();
        let ms = MultiServerScenario {
            servers: 2,
            buffer: Buffer::Infinite,
            arrivals,
            service: DistributionSpec::Gamma {
                shape: 0.5,
                scale: 2.0,
            },
            horizon: 400.0,
        };
        let seed = 2222;
        let lgfs =
            run_multiserver_nwu(&ms, &PolicySpec::new(PolicyKind::NonPrmpLgfs), seed).unwrap();
        let lcfs =
            run_multiserver_nwu(&ms, &PolicySpec::new(PolicyKind::NonPrmpLcfs), seed).unwrap();
        assert_eq!(lgfs.deliveries, lcfs.deliveries);
    }

    #[test]
    fn station_validations() {
        let ms = MultiServerScenario {
            servers: 0,
            buffer: Buffer::Infinite,
            arrivals: vec![],
            service: DistributionSpec::Exponential { rate: 1.0 },
            horizon: 10.0,
        };
        assert!(matches!(
            run_multiserver_nwu(&ms, &PolicySpec::new(PolicyKind::PrmpLgfs), 1),
            Err(OrderingError::Engine(EngineError::BadServerCount(0)))
        ));
        let ms = MultiServerScenario {
            servers: 1,
            buffer: Buffer::Infinite,
            arrivals: vec![
                PacketRecord {
                    index: 1,
                    s: 1.0,
                    a0: 5.0,
                },
                PacketRecord {
                    index: 2,
                    s: 2.0,
                    a0: 3.0,
                },
            ],
            service: DistributionSpec::Exponential { rate: 1.0 },
            horizon: 10.0,
        };
        assert!(matches!(
            run_multiserver_nwu(&ms, &PolicySpec::new(PolicyKind::PrmpLgfs), 1),
            Err(OrderingError::Engine(EngineError::OutOfOrderArrivals(2)))
        ));
    }

    #[test]
    fn random_dag_is_reproducible_and_valid() {
        let a = random_dag(6, 42);
        let b = random_dag(6, 42);
        assert_eq!(a, b);
        assert!(a.all_links_exponential());
        assert!(a.links().len() >= 5);
        let c = random_dag(6, 43);
        assert_ne!(a, c);
    }
}
