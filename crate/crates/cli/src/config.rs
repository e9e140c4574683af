//! Config files: structured key/value text with `[graph]`, `[arrivals]`,
//! `[run]`, `[harness]` and `[output]` sections. Unknown keys are rejected;
//! a parsed config validates into a [`Plan`] with all defaults resolved.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use agesim_core::{
    ArrivalSpec, Buffer, CouplingMode, DelayModel, DistributionSpec, LinkSpec, NetworkGraph,
    PacketRecord, PolicySpec, Scenario,
};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("parse error{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, msg: String },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("invalid `{field}`: {msg}")]
    Validation { field: String, msg: String },
}

fn invalid(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        msg: msg.to_string(),
    }
}

/// Buffer written as a count or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BufferField(pub Buffer);

impl Serialize for BufferField {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Buffer::Finite(b) => ser.serialize_u32(b),
            Buffer::Infinite => ser.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for BufferField {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = BufferField;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a queue size or \"inf\"")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<BufferField, E> {
                u32::try_from(v)
                    .map(|b| BufferField(Buffer::Finite(b)))
                    .map_err(|_| E::custom("buffer too large"))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<BufferField, E> {
                if v < 0 {
                    return Err(E::custom("buffer must be non-negative"));
                }
                self.visit_u64(v as u64)
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<BufferField, E> {
                Buffer::from_str(v).map(BufferField).map_err(E::custom)
            }
        }
        de.deserialize_any(V)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkRow {
    pub from: u32,
    pub to: u32,
    pub buffer: BufferField,
    /// Distribution text name, e.g. `"exp 1"` or `"shifted-exp 0.5 2"`.
    pub dist: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSection {
    pub nodes: u32,
    pub links: Vec<LinkRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitPacket {
    pub s: f64,
    pub a0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalsSection {
    /// One of `"erlang2"`, `"poisson"`, `"explicit"`.
    pub process: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// Delay text name, e.g. `"two-point 1 100"`, `"const 0"`, `"exp 2"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<ExplicitPacket>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub policies: Vec<String>,
    /// Buffer variants applied to every link, crossing the policy list.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub buffers: Option<Vec<BufferField>>,
    /// Sweep grid `"start:end:step"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HarnessSection {
    /// `"poisson-epochs"` or `"indexed-draws"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dominance: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordering_grid: Option<u32>,
}

impl HarnessSection {
    fn is_default(&self) -> bool {
        *self == HarnessSection::default()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub formats: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_node: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_metric: Option<String>,
}

impl OutputSection {
    fn is_default(&self) -> bool {
        *self == OutputSection::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub graph: GraphSection,
    pub arrivals: ArrivalsSection,
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "HarnessSection::is_default")]
    pub harness: HarnessSection,
    #[serde(default, skip_serializing_if = "OutputSection::is_default")]
    pub output: OutputSection,
}

impl ConfigFile {
    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}

/// How the arrival process is produced, with the rate factored out so
/// sweeps can rescale it.
#[derive(Debug, Clone, PartialEq)]
pub enum ArrivalsKind {
    /// Erlang-2 generation gaps with mean `1/lambda`.
    Erlang2 { rate: f64, delay: DelayModel },
    /// Exponential generation gaps with mean `1/lambda`.
    Poisson { rate: f64, delay: DelayModel },
    Explicit(Vec<PacketRecord>),
}

/// A fully validated run plan with every default resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub graph: NetworkGraph,
    pub arrivals: ArrivalsKind,
    pub horizon: f64,
    pub replications: u32,
    pub seed: u64,
    pub policies: Vec<PolicySpec>,
    /// Buffer overrides crossed with policies; `None` keeps per-link
    /// buffers from the graph section.
    pub buffers: Vec<Option<Buffer>>,
    pub lambda_grid: Vec<f64>,
    pub coupling: Option<CouplingMode>,
    pub dominance: bool,
    pub ordering_grid: usize,
    pub out_dir: String,
    pub formats: Vec<String>,
    pub focus_node: Option<u32>,
    pub focus_metric: Option<String>,
}

impl Plan {
    /// Variant labels crossing policies with buffer overrides, e.g.
    /// `fcfs[B=1]`.
    pub fn variant_labels(&self) -> Vec<String> {
        let mut out = Vec::new();
        for policy in &self.policies {
            for buffer in &self.buffers {
                out.push(variant_label(policy, *buffer));
            }
        }
        out
    }

    /// The scenario of one cell. `lambda` rescales renewal arrivals (it is
    /// rejected for explicit arrival lists elsewhere); `buffer` overrides
    /// every link's queue size.
    pub fn scenario(
        &self,
        lambda: Option<f64>,
        buffer: Option<Buffer>,
        seed: u64,
    ) -> Result<Scenario, ConfigError> {
        let graph = match buffer {
            None => self.graph.clone(),
            Some(b) => override_buffers(&self.graph, b),
        };
        let arrivals = match &self.arrivals {
            ArrivalsKind::Erlang2 { rate, delay } => ArrivalSpec::erlang2(
                lambda.unwrap_or(*rate),
                delay.clone(),
            )
            .map_err(|e| invalid("arrivals.rate", e))?,
            ArrivalsKind::Poisson { rate, delay } => ArrivalSpec::Renewal {
                inter_gen: DistributionSpec::Exponential {
                    rate: lambda.unwrap_or(*rate),
                },
                delay: delay.clone(),
            },
            ArrivalsKind::Explicit(packets) => ArrivalSpec::Explicit(packets.clone()),
        };
        Ok(Scenario {
            tree_restricted: false,
            graph,
            arrivals,
            horizon: self.horizon,
            seed,
        })
    }

    /// The configured rate of renewal arrivals, if any.
    pub fn base_rate(&self) -> Option<f64> {
        match &self.arrivals {
            ArrivalsKind::Erlang2 { rate, .. } | ArrivalsKind::Poisson { rate, .. } => Some(*rate),
            ArrivalsKind::Explicit(_) => None,
        }
    }
}

pub fn variant_label(policy: &PolicySpec, buffer: Option<Buffer>) -> String {
    match buffer {
        None => policy.to_string(),
        Some(b) => format!("{policy}[B={b}]"),
    }
}

fn override_buffers(graph: &NetworkGraph, buffer: Buffer) -> NetworkGraph {
    let links: Vec<LinkSpec> = graph
        .links()
        .iter()
        .map(|l| LinkSpec {
            from: l.from,
            to: l.to,
            buffer,
            dist: l.dist.clone(),
        })
        .collect();
    NetworkGraph::build(graph.node_count(), links).expect("rebuilding a validated graph")
}

/// Parses `"start:end:step"` into an inclusive grid.
pub fn parse_lambda_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || invalid("run.lambda_grid", format!("expected START:END:STEP, got `{text}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad())?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0 && start > 0.0 && end >= start) {
        return Err(bad());
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = start + step * k as f64;
        if v > end + 1e-9 {
            break;
        }
        out.push(v);
        k += 1;
    }
    Ok(out)
}

/// Parses config text and validates it into a plan.
pub fn parse_config(text: &str) -> Result<(ConfigFile, Plan), ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| classify_toml_error(text, e))?;
    let plan = validate(&file)?;
    Ok((file, plan))
}

/// Loads and validates a config file from disk.
pub fn load_config(path: impl AsRef<Path>) -> Result<(ConfigFile, Plan), ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_config(&text)
}

fn classify_toml_error(text: &str, e: toml::de::Error) -> ConfigError {
    let msg = e.message().to_string();
    if let Some(rest) = msg.strip_prefix("unknown field `") {
        if let Some(end) = rest.find('`') {
            return ConfigError::UnknownKey {
                key: rest[..end].to_string(),
            };
        }
    }
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].lines().count().max(1));
    ConfigError::Parse { line, msg }
}

fn validate(file: &ConfigFile) -> Result<Plan, ConfigError> {
    // Graph.
    let mut links = Vec::with_capacity(file.graph.links.len());
    for (i, row) in file.graph.links.iter().enumerate() {
        let dist: DistributionSpec = row
            .dist
            .parse()
            .map_err(|e| invalid(&format!("graph.links[{i}].dist"), e))?;
        links.push(LinkSpec {
            from: row.from,
            to: row.to,
            buffer: row.buffer.0,
            dist,
        });
    }
    let graph = NetworkGraph::build(file.graph.nodes, links)
        .map_err(|e| invalid("graph", e))?;

    // Arrivals.
    let delay = || -> Result<DelayModel, ConfigError> {
        match &file.arrivals.delay {
            None => Ok(DelayModel::Constant(0.0)),
            Some(text) => text.parse().map_err(|e| invalid("arrivals.delay", e)),
        }
    };
    let rate = || -> Result<f64, ConfigError> {
        let r = file
            .arrivals
            .rate
            .ok_or_else(|| invalid("arrivals.rate", "required for renewal arrivals"))?;
        if r > 0.0 {
            Ok(r)
        } else {
            Err(invalid("arrivals.rate", "rate must be positive"))
        }
    };
    let arrivals = match file.arrivals.process.as_str() {
        "erlang2" => ArrivalsKind::Erlang2 {
            rate: rate()?,
            delay: delay()?,
        },
        "poisson" => ArrivalsKind::Poisson {
            rate: rate()?,
            delay: delay()?,
        },
        "explicit" => {
            let rows = file
                .arrivals
                .explicit
                .as_ref()
                .ok_or_else(|| invalid("arrivals.explicit", "required for explicit arrivals"))?;
            let packets: Vec<PacketRecord> = rows
                .iter()
                .enumerate()
                .map(|(i, p)| PacketRecord {
                    index: i as u32 + 1,
                    s: p.s,
                    a0: p.a0,
                })
                .collect();
            ArrivalsKind::Explicit(packets)
        }
        other => {
            return Err(invalid(
                "arrivals.process",
                format!("unknown process `{other}`"),
            ))
        }
    };

    // Run.
    let horizon = file
        .run
        .horizon
        .ok_or_else(|| invalid("run.horizon", "required"))?;
    if !(horizon > 0.0) {
        return Err(invalid("run.horizon", "must be positive"));
    }
    if file.run.policies.is_empty() {
        return Err(invalid("run.policies", "need at least one policy"));
    }
    let policies: Vec<PolicySpec> = file
        .run
        .policies
        .iter()
        .map(|name| name.parse().map_err(|e| invalid("run.policies", e)))
        .collect::<Result<_, _>>()?;
    let buffers: Vec<Option<Buffer>> = match &file.run.buffers {
        None => vec![None],
        Some(list) if list.is_empty() => vec![None],
        Some(list) => list.iter().map(|b| Some(b.0)).collect(),
    };
    let lambda_grid = match &file.run.lambda_grid {
        None => Vec::new(),
        Some(text) => parse_lambda_grid(text)?,
    };

    // Harness.
    let coupling = match file.harness.coupling.as_deref() {
        None => None,
        Some("poisson-epochs") => Some(CouplingMode::PoissonEpochs),
        Some("indexed-draws") => Some(CouplingMode::IndexedServiceDraws),
        Some(other) => {
            return Err(invalid(
                "harness.coupling",
                format!("unknown coupling `{other}`"),
            ))
        }
    };

    let plan = Plan {
        graph,
        arrivals,
        horizon,
        replications: file.run.replications.unwrap_or(1).max(1),
        seed: file.run.seed.unwrap_or(1),
        policies,
        buffers,
        lambda_grid,
        coupling,
        dominance: file.harness.dominance.unwrap_or(false),
        ordering_grid: file.harness.ordering_grid.unwrap_or(64) as usize,
        out_dir: file.output.dir.clone().unwrap_or_else(|| "out".to_string()),
        formats: file
            .output
            .formats
            .clone()
            .unwrap_or_else(|| vec!["csv".to_string(), "plot".to_string()]),
        focus_node: file.output.focus_node,
        focus_metric: file.output.focus_metric.clone(),
    };
    // Explicit arrival lists must satisfy the packet invariants; surface
    // that at load time rather than first run.
    plan.scenario(None, None, plan.seed)
        .and_then(|s| s.validate().map_err(|e| invalid("arrivals.explicit", e)))?;
    Ok(plan)
}
