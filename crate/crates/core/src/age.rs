//! Age processes and penalty functionals.
//!
//! The age of a node at time `t` is `t - u(t)` where `u(t)` is the
//! generation time of the freshest packet delivered by `t`; it grows with
//! slope one and drops at each reset. All integrals over the sawtooth are
//! evaluated in closed form per linear segment; numerical quadrature is
//! used only for user-supplied penalty shapes.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::engine::{improving_resets, Reset, Trace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgeError {
    #[error("node {0} not covered by the trace")]
    UnknownNode(u32),
    #[error("no peaks: the reset list is empty")]
    NoPeaks,
    #[error("penalty function is not non-decreasing and non-negative")]
    NonMonotonePenalty,
    #[error("invalid reset sequence: {0}")]
    InvalidResets(String),
}

/// A piecewise-linear age sawtooth: strictly increasing reset times with
/// strictly increasing freshness levels, observed over `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeProcess {
    resets: Vec<Reset>,
    horizon: f64,
}

impl AgeProcess {
    pub fn new(resets: Vec<Reset>, horizon: f64) -> Result<Self, AgeError> {
        if !(horizon > 0.0) {
            return Err(AgeError::InvalidResets(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        for w in resets.windows(2) {
            if w[1].time <= w[0].time {
                return Err(AgeError::InvalidResets(format!(
                    "reset times not strictly increasing at t={}",
                    w[1].time
                )));
            }
            if w[1].s <= w[0].s {
                return Err(AgeError::InvalidResets(format!(
                    "freshness not strictly increasing at t={}",
                    w[1].time
                )));
            }
        }
        if let Some(first) = resets.first() {
            if first.time < 0.0 {
                return Err(AgeError::InvalidResets("negative reset time".into()));
            }
        }
        if let Some(last) = resets.last() {
            if last.time > horizon {
                return Err(AgeError::InvalidResets(format!(
                    "reset at t={} beyond horizon {horizon}",
                    last.time
                )));
            }
        }
        Ok(AgeProcess { resets, horizon })
    }

    pub fn resets(&self) -> &[Reset] {
        &self.resets
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Freshness level at time `t` (right-continuous; 0 before any reset).
    pub fn freshness_at(&self, t: f64) -> f64 {
        match self.resets.partition_point(|r| r.time <= t) {
            0 => 0.0,
            k => self.resets[k - 1].s,
        }
    }

    /// Age at time `t`.
    pub fn age_at(&self, t: f64) -> f64 {
        t - self.freshness_at(t)
    }

    /// Largest age reached on `[0, horizon]` (attained just before a reset
    /// or at the horizon).
    pub fn max_age(&self) -> f64 {
        self.segments()
            .map(|seg| seg.end - seg.u)
            .fold(0.0, f64::max)
    }

    /// Linear segments of the sawtooth: on `[start, end]` the freshness is
    /// `u`, so the age runs from `start - u` to `end - u`.
    fn segments(&self) -> impl Iterator<Item = Segment> + '_ {
        let bounds = std::iter::once((0.0, 0.0))
            .chain(self.resets.iter().map(|r| (r.time, r.s)))
            .collect::<Vec<_>>();
        (0..bounds.len()).map(move |i| {
            let (start, u) = bounds[i];
            let end = bounds.get(i + 1).map(|b| b.0).unwrap_or(self.horizon);
            Segment { start, end, u }
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    start: f64,
    end: f64,
    u: f64,
}

/// Builds the age process of `node` from a trace, keeping only
/// age-improving deliveries at or before `horizon`.
pub fn age_process(trace: &Trace, node: u32, horizon: f64) -> Result<AgeProcess, AgeError> {
    if node >= trace.node_count {
        return Err(AgeError::UnknownNode(node));
    }
    let deliveries = trace
        .deliveries
        .iter()
        .filter(|d| d.node == node && d.time <= horizon)
        .map(|d| (d.time, d.s));
    AgeProcess::new(improving_resets(deliveries), horizon)
}

/// Time-average age `(1/T) ∫ Δ(t) dt`, exact per-segment trapezoids.
pub fn time_average_age(p: &AgeProcess) -> f64 {
    let area: f64 = p
        .segments()
        .map(|seg| {
            let lo = seg.start - seg.u;
            let hi = seg.end - seg.u;
            (hi * hi - lo * lo) / 2.0
        })
        .sum();
    area / p.horizon()
}

/// Peak ages: the age just before each reset. The partial segment after the
/// last reset contributes no peak.
pub fn peaks(p: &AgeProcess) -> Vec<f64> {
    let mut prev_s = 0.0;
    p.resets()
        .iter()
        .map(|r| {
            let a = r.time - prev_s;
            prev_s = r.s;
            a
        })
        .collect()
}

/// Mean of the peak ages; errors when no reset occurred.
pub fn average_peak_age(p: &AgeProcess) -> Result<f64, AgeError> {
    let pk = peaks(p);
    if pk.is_empty() {
        return Err(AgeError::NoPeaks);
    }
    Ok(pk.iter().sum::<f64>() / pk.len() as f64)
}

/// Penalty shapes for [`average_age_penalty`]. The built-in shapes have
/// closed-form segment integrals; `Custom` falls back to adaptive Simpson
/// quadrature with absolute tolerance 1e-9 per segment.
pub enum Penalty<'a> {
    Identity,
    Square,
    /// `h(x) = exp(c x)`; requires `c >= 0` to be non-decreasing.
    Exp(f64),
    Custom(&'a dyn Fn(f64) -> f64),
}

/// Time-average penalty `(1/T) ∫ h(Δ(t)) dt` for non-negative,
/// non-decreasing `h`.
pub fn average_age_penalty(p: &AgeProcess, h: &Penalty<'_>) -> Result<f64, AgeError> {
    match h {
        Penalty::Exp(c) if *c < 0.0 => return Err(AgeError::NonMonotonePenalty),
        Penalty::Custom(f) => spot_check_monotone(*f, p.max_age())?,
        _ => {}
    }
    let area: f64 = p
        .segments()
        .map(|seg| {
            let lo = seg.start - seg.u;
            let hi = seg.end - seg.u;
            match h {
                Penalty::Identity => (hi * hi - lo * lo) / 2.0,
                Penalty::Square => (hi * hi * hi - lo * lo * lo) / 3.0,
                Penalty::Exp(c) => {
                    if *c == 0.0 {
                        hi - lo
                    } else {
                        ((c * hi).exp() - (c * lo).exp()) / c
                    }
                }
                Penalty::Custom(f) => adaptive_simpson(*f, lo, hi, 1e-9),
            }
        })
        .sum();
    Ok(area / p.horizon())
}

fn spot_check_monotone(f: &dyn Fn(f64) -> f64, max_age: f64) -> Result<(), AgeError> {
    let top = if max_age > 0.0 { max_age } else { 1.0 };
    let mut prev = f(0.0);
    if prev < -1e-12 {
        return Err(AgeError::NonMonotonePenalty);
    }
    for i in 1..=64 {
        let x = top * i as f64 / 64.0;
        let y = f(x);
        if y < prev - 1e-12 || y < -1e-12 {
            return Err(AgeError::NonMonotonePenalty);
        }
        prev = y;
    }
    Ok(())
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, tol / 2.0, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, tol / 2.0, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Completion times at `node`: for each packet, the earliest time any
/// packet at least as fresh was delivered there. A packet overtaken by a
/// fresher delivery inherits that delivery's time; packets never superseded
/// before the horizon are absent from the map.
pub fn completion_times(trace: &Trace, node: u32) -> Result<BTreeMap<u32, f64>, AgeError> {
    if node >= trace.node_count {
        return Err(AgeError::UnknownNode(node));
    }
    let resets = trace.resets(node);
    let mut out = BTreeMap::new();
    for p in &trace.packets {
        // Reset levels are strictly increasing, so the first level >= s is
        // the earliest qualifying delivery.
        let k = resets.partition_point(|r| r.s < p.s);
        if k < resets.len() {
            out.insert(p.index, resets[k].time);
        }
    }
    Ok(out)
}
