//! Service-time randomness sources.
//!
//! Two shapes of per-link randomness:
//!
//! * **Indexed draws** — the k-th service started on a link consumes the
//!   k-th pre-determined sample of that link's lane. Used both for plain
//!   independent runs and for coupling non-preemptive policies, which share
//!   the same `(seed, link)` lanes and therefore the same draw sequence.
//! * **Poisson epochs** — each link carries an autonomous tick process at
//!   its exponential rate; a busy link completes at its next tick. Policies
//!   coupled on the same epoch lanes deliver at identical instants whenever
//!   their links are busy, which is what turns the distributional dominance
//!   statements into per-sample-path checks. Valid only when every link law
//!   is exponential (memorylessness makes the next-tick residual correct
//!   regardless of when service started or was preempted).

use crate::dist::DistributionSpec;
use crate::rng::{RngStream, StreamId, StreamPurpose};

use super::EngineError;

/// Coupling realizations for multi-policy comparisons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingMode {
    /// Shared per-link Poisson tick processes; exponential links only.
    PoissonEpochs,
    /// Shared per-link indexed service draws; any law, non-preemptive
    /// policies only.
    IndexedServiceDraws,
}

/// Shared randomness for one coupled comparison: every policy run in the
/// comparison reads the same per-link lanes derived from this seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingStream {
    pub mode: CouplingMode,
    pub seed: u64,
}

/// Where a simulation run takes its per-link service randomness from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceTimeSource {
    /// One indexed lane per link, derived from this seed.
    IndependentStreams { seed: u64 },
    /// Lanes shared across the policies of one coupled comparison.
    Coupled(CouplingStream),
}

impl ServiceTimeSource {
    pub fn seed(&self) -> u64 {
        match self {
            ServiceTimeSource::IndependentStreams { seed } => *seed,
            ServiceTimeSource::Coupled(c) => c.seed,
        }
    }

    pub fn coupling_mode(&self) -> Option<CouplingMode> {
        match self {
            ServiceTimeSource::IndependentStreams { .. } => None,
            ServiceTimeSource::Coupled(c) => Some(c.mode),
        }
    }

    /// A short tag folded into trace fingerprints.
    pub(crate) fn identity_tag(&self) -> u64 {
        match self {
            ServiceTimeSource::IndependentStreams { seed } => seed ^ 0x1,
            ServiceTimeSource::Coupled(c) => {
                c.seed
                    ^ match c.mode {
                        CouplingMode::PoissonEpochs => 0x2 << 60,
                        CouplingMode::IndexedServiceDraws => 0x3 << 60,
                    }
            }
        }
    }

    /// Builds the completion clock for one link.
    pub(crate) fn clock_for(
        &self,
        from: u32,
        to: u32,
        dist: &DistributionSpec,
    ) -> Result<LinkClock, EngineError> {
        match self.coupling_mode() {
            Some(CouplingMode::PoissonEpochs) => {
                let rate = dist.exponential_rate().ok_or_else(|| {
                    EngineError::IncompatibleCoupling(format!(
                        "poisson-epochs coupling needs exponential links, link ({from}, {to}) has `{dist}`"
                    ))
                })?;
                Ok(LinkClock::Epochs {
                    stream: RngStream::new(self.seed(), StreamId::link(StreamPurpose::LinkEpochs, from, to)),
                    rate,
                    next: 0.0,
                })
            }
            _ => Ok(LinkClock::Draws {
                dist: dist.clone(),
                stream: RngStream::new(
                    self.seed(),
                    StreamId::link(StreamPurpose::LinkService, from, to),
                ),
            }),
        }
    }
}

/// Completion-time generator of one link.
#[derive(Debug, Clone)]
pub enum LinkClock {
    Draws {
        dist: DistributionSpec,
        stream: RngStream,
    },
    Epochs {
        stream: RngStream,
        rate: f64,
        next: f64,
    },
}

impl LinkClock {
    /// Completion time of a service starting (or restarting) at `now`.
    ///
    /// Draw mode consumes one indexed sample per call; epoch mode returns
    /// the first tick strictly after `now`, re-reading the same tick for a
    /// preemption that restarts mid-interval. A draw smaller than the
    /// float resolution at `now` is bumped to the next representable
    /// instant so simulated time always advances.
    pub fn completion_after(&mut self, now: f64) -> f64 {
        match self {
            LinkClock::Draws { dist, stream } => {
                let t = now + dist.sample(stream);
                if t > now {
                    t
                } else {
                    now.next_up()
                }
            }
            LinkClock::Epochs { stream, rate, next } => {
                let gap_law = DistributionSpec::Exponential { rate: *rate };
                while *next <= now {
                    let t = *next + gap_law.sample(stream);
                    *next = if t > *next { t } else { next.next_up() };
                }
                *next
            }
        }
    }
}
