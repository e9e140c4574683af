//! Shared scenario builders for the benchmarks.

use agesim_core::{
    build_graph, ArrivalSpec, Buffer, DelayModel, DistributionSpec, LinkSpec, NetworkGraph,
    Scenario,
};

pub fn relay_graph(buffer: Buffer) -> NetworkGraph {
    let exp = |rate| DistributionSpec::Exponential { rate };
    build_graph(
        3,
        vec![
            LinkSpec {
                from: 0,
                to: 1,
                buffer,
                dist: exp(1.0),
            },
            LinkSpec {
                from: 1,
                to: 2,
                buffer,
                dist: exp(1.0),
            },
            LinkSpec {
                from: 0,
                to: 2,
                buffer,
                dist: exp(2.0),
            },
        ],
    )
    .unwrap()
}

pub fn relay_scenario(horizon: f64, seed: u64) -> Scenario {
    Scenario {
        graph: relay_graph(Buffer::Finite(1)),
        arrivals: ArrivalSpec::erlang2(
            1.0,
            DelayModel::TwoPoint {
                low: 1.0,
                high: 100.0,
            },
        )
        .unwrap(),
        horizon,
        seed,
        tree_restricted: false,
    }
}
