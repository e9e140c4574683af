//! Replicated sweeps over the generation rate.
//!
//! Every (lambda, policy-variant, replication) cell gets an independent
//! seed derived from the master seed, runs once, and reports time-average
//! age and average peak age at every node. Cells execute in parallel;
//! aggregation is keyed by cell index, so output is independent of
//! scheduling order.

use rayon::prelude::*;
use thiserror::Error;

use agesim_core::rng::derive_seed;
use agesim_core::{
    age_process, average_peak_age, run_simulation, time_average_age, AgeError, Buffer,
    EngineError, PolicySpec, RunOptions, ServiceTimeSource,
};

use crate::config::{variant_label, ArrivalsKind, ConfigError, Plan};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("lambda sweep needs renewal arrivals, not an explicit packet list")]
    ExplicitArrivals,
    #[error("sweep needs at least one lambda value")]
    EmptyGrid,
    #[error("run failed (lambda={lambda}, policy={policy}, replication={rep}): {source}")]
    Run {
        lambda: f64,
        policy: String,
        rep: u32,
        source: EngineError,
    },
    #[error("metrics failed (lambda={lambda}, policy={policy}, replication={rep}): {source}")]
    Metrics {
        lambda: f64,
        policy: String,
        rep: u32,
        source: AgeError,
    },
}

pub const METRIC_AVG_AGE: &str = "avg-age";
pub const METRIC_PEAK_AGE: &str = "peak-age";

/// One aggregated row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub policy: String,
    pub node: u32,
    pub metric: &'static str,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reps: u32,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, lambda: f64, policy: &str, node: u32, metric: &str) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            (r.lambda - lambda).abs() < 1e-9
                && r.policy == policy
                && r.node == node
                && r.metric == metric
        })
    }
}

struct CellResult {
    /// Per node: (avg age, peak age if any reset occurred).
    per_node: Vec<(f64, Option<f64>)>,
}

/// Runs the sweep. With an empty `lambda_values` slice the plan's own rate
/// is used as a single point (the `run` subcommand path).
pub fn run_sweep(plan: &Plan, lambda_values: &[f64]) -> Result<SweepTable, SweepError> {
    let lambdas: Vec<Option<f64>> = if lambda_values.is_empty() {
        vec![None]
    } else {
        if matches!(plan.arrivals, ArrivalsKind::Explicit(_)) {
            return Err(SweepError::ExplicitArrivals);
        }
        lambda_values.iter().copied().map(Some).collect()
    };
    let variants: Vec<(PolicySpec, Option<Buffer>)> = plan
        .policies
        .iter()
        .flat_map(|p| plan.buffers.iter().map(move |b| (*p, *b)))
        .collect();
    let reps = plan.replications;

    // Flatten all cells for parallel execution.
    let mut cells = Vec::new();
    for (li, lambda) in lambdas.iter().enumerate() {
        for (vi, variant) in variants.iter().enumerate() {
            for rep in 0..reps {
                cells.push((li, vi, rep, *lambda, *variant));
            }
        }
    }
    let results: Vec<CellResult> = cells
        .par_iter()
        .map(|&(li, vi, rep, lambda, (policy, buffer))| {
            run_cell(plan, li, vi, rep, lambda, policy, buffer)
        })
        .collect::<Result<_, _>>()?;

    // Aggregate by (lambda, variant) in deterministic order.
    let node_count = plan.graph.node_count();
    let mut rows = Vec::new();
    for (li, lambda) in lambdas.iter().enumerate() {
        let lambda_out = lambda.or(plan.base_rate()).unwrap_or(0.0);
        for (vi, (policy, buffer)) in variants.iter().enumerate() {
            let label = variant_label(policy, *buffer);
            let mut avg: Vec<Vec<f64>> = vec![Vec::new(); node_count as usize];
            let mut peak: Vec<Vec<f64>> = vec![Vec::new(); node_count as usize];
            for (idx, &(cli, cvi, _, _, _)) in cells.iter().enumerate() {
                if cli != li || cvi != vi {
                    continue;
                }
                let cell = &results[idx];
                for (node, &(a, p)) in cell.per_node.iter().enumerate() {
                    avg[node].push(a);
                    if let Some(p) = p {
                        peak[node].push(p);
                    }
                }
            }
            for node in 0..node_count {
                for (metric, samples) in [
                    (METRIC_AVG_AGE, &avg[node as usize]),
                    (METRIC_PEAK_AGE, &peak[node as usize]),
                ] {
                    if samples.is_empty() {
                        continue;
                    }
                    let ci = agesim_core::stats::mean_ci95(samples);
                    rows.push(SweepRow {
                        lambda: lambda_out,
                        policy: label.clone(),
                        node,
                        metric,
                        mean: ci.mean,
                        ci_low: ci.lo,
                        ci_high: ci.hi,
                        reps: ci.n as u32,
                    });
                }
            }
        }
    }
    Ok(SweepTable { rows })
}

fn run_cell(
    plan: &Plan,
    li: usize,
    _vi: usize,
    rep: u32,
    lambda: Option<f64>,
    policy: PolicySpec,
    buffer: Option<Buffer>,
) -> Result<CellResult, SweepError> {
    let label = || variant_label(&policy, buffer);
    let lambda_out = lambda.or(plan.base_rate()).unwrap_or(0.0);
    // Policy variants of one replication share arrival and service
    // randomness (common random numbers); replications are independent.
    let scenario_seed = derive_seed(plan.seed, &[0xA11, li as u64, rep as u64]);
    let service_seed = derive_seed(plan.seed, &[0x5E2, li as u64, rep as u64]);
    let scenario = plan.scenario(lambda, buffer, scenario_seed)?;
    let trace = run_simulation(
        &scenario,
        &policy,
        &ServiceTimeSource::IndependentStreams { seed: service_seed },
        &RunOptions::default(),
    )
    .map_err(|source| SweepError::Run {
        lambda: lambda_out,
        policy: label(),
        rep,
        source,
    })?;
    let mut per_node = Vec::with_capacity(plan.graph.node_count() as usize);
    for node in 0..plan.graph.node_count() {
        let process = age_process(&trace, node, plan.horizon).map_err(|source| {
            SweepError::Metrics {
                lambda: lambda_out,
                policy: label(),
                rep,
                source,
            }
        })?;
        let avg = time_average_age(&process);
        let peak = average_peak_age(&process).ok();
        per_node.push((avg, peak));
    }
    Ok(CellResult { per_node })
}
