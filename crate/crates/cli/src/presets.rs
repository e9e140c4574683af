//! Built-in experiment presets.

use crate::config::{
    ArrivalsSection, BufferField, ConfigFile, GraphSection, HarnessSection, LinkRow,
    OutputSection, RunSection,
};
use agesim_core::Buffer;

fn link(from: u32, to: u32, dist: &str) -> LinkRow {
    LinkRow {
        from,
        to,
        buffer: BufferField(Buffer::Infinite),
        dist: dist.to_string(),
    }
}

fn erlang2_arrivals() -> ArrivalsSection {
    ArrivalsSection {
        process: "erlang2".to_string(),
        rate: Some(1.0),
        delay: Some("two-point 1 100".to_string()),
        explicit: None,
    }
}

/// Peak-age experiment on the three-node relay: exponential links with
/// mean 1 on (0,1) and (1,2) and mean 0.5 on (0,2), Erlang-2 generation,
/// the two-point (1 or 100) gateway delay, all four disciplines with
/// buffer variants 1 and infinity. Metric of interest: average peak age at
/// node 2 across the generation-rate sweep.
pub fn preset_fig4() -> ConfigFile {
    ConfigFile {
        graph: GraphSection {
            nodes: 3,
            links: vec![link(0, 1, "exp 1"), link(1, 2, "exp 1"), link(0, 2, "exp 2")],
        },
        arrivals: erlang2_arrivals(),
        run: RunSection {
            horizon: Some(10_000.0),
            replications: Some(200),
            seed: Some(1),
            policies: vec![
                "prmp-lgfs".to_string(),
                "np-lgfs".to_string(),
                "np-lcfs".to_string(),
                "fcfs".to_string(),
            ],
            buffers: Some(vec![
                BufferField(Buffer::Finite(1)),
                BufferField(Buffer::Infinite),
            ]),
            lambda_grid: Some("0.1:2.0:0.1".to_string()),
        },
        harness: HarnessSection {
            coupling: Some("poisson-epochs".to_string()),
            dominance: Some(true),
            ordering_grid: None,
        },
        output: OutputSection {
            dir: None,
            formats: None,
            focus_node: Some(2),
            focus_metric: Some("peak-age".to_string()),
        },
    }
}

/// Average-age experiment on the four-node mesh with heterogeneous links:
/// gamma (mean 1, shape 2) on (0,1) and (1,3), a 0.5 constant plus
/// mean-0.5 exponential on (0,2), (1,2) and (2,3). Non-preemptive
/// disciplines with buffer variants 1 and infinity; metric of interest:
/// time-average age at node 3.
pub fn preset_fig5() -> ConfigFile {
    ConfigFile {
        graph: GraphSection {
            nodes: 4,
            links: vec![
                link(0, 1, "gamma 2 0.5"),
                link(1, 3, "gamma 2 0.5"),
                link(0, 2, "shifted-exp 0.5 2"),
                link(1, 2, "shifted-exp 0.5 2"),
                link(2, 3, "shifted-exp 0.5 2"),
            ],
        },
        arrivals: erlang2_arrivals(),
        run: RunSection {
            horizon: Some(10_000.0),
            replications: Some(200),
            seed: Some(1),
            policies: vec![
                "fcfs".to_string(),
                "np-lcfs".to_string(),
                "np-lgfs".to_string(),
            ],
            buffers: Some(vec![
                BufferField(Buffer::Finite(1)),
                BufferField(Buffer::Infinite),
            ]),
            lambda_grid: Some("0.1:2.0:0.1".to_string()),
        },
        harness: HarnessSection {
            coupling: Some("indexed-draws".to_string()),
            dominance: Some(true),
            ordering_grid: None,
        },
        output: OutputSection {
            dir: None,
            formats: None,
            focus_node: Some(3),
            focus_metric: Some("avg-age".to_string()),
        },
    }
}
