//! Transmission-time laws: sampling, CCDF evaluation, moments, and
//! NBU/NWU classification.
//!
//! A law is *new-better-than-used* (NBU) when `F̄(τ+t) ≤ F̄(τ)·F̄(t)` for all
//! non-negative `τ, t`, and *new-worse-than-used* (NWU) when the reversed
//! inequality holds. The exponential law satisfies both with equality. The
//! classifiers here evaluate the inequality on a finite grid — they are
//! fast numeric checks, not proofs.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use thiserror::Error;

use crate::rng::RngStream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("parameter {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("probability {name} must lie in (0, 1), got {value}")]
    BadProbability { name: &'static str, value: f64 },
    #[error("hyperexponential needs matching weights/rates, got {weights} weights and {rates} rates")]
    MismatchedComponents { weights: usize, rates: usize },
    #[error("hyperexponential weights must sum to 1, got {sum}")]
    WeightsNotNormalized { sum: f64 },
    #[error("unknown distribution `{0}`")]
    UnknownKind(String),
    #[error("bad parameters for `{kind}`: {msg}")]
    BadSpec { kind: String, msg: String },
}

/// A transmission-time law. All laws have strictly positive support.
#[derive(Debug, Clone, PartialEq)]
pub enum DistributionSpec {
    /// Rate `lambda`; mean `1/lambda`.
    Exponential { rate: f64 },
    /// Sum of `shape` exponentials of the given rate; mean `shape/rate`.
    Erlang { shape: u32, rate: f64 },
    /// Shape/scale parametrization; mean `shape * scale`.
    Gamma { shape: f64, scale: f64 },
    /// Degenerate law at `value`.
    Constant { value: f64 },
    /// `shift` plus an exponential of rate `rate`.
    ShiftedExponential { shift: f64, rate: f64 },
    /// Mixture of exponentials.
    Hyperexponential { weights: Vec<f64>, rates: Vec<f64> },
    /// Lattice law on `{step, 2*step, ...}` with success probability `p`
    /// per step. Embeds the geometric law in continuous time so the engine
    /// needs no discrete-time mode.
    Geometric { p: f64, step: f64 },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<(), DistError> {
        fn pos(name: &'static str, value: f64) -> Result<(), DistError> {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(DistError::NonPositive { name, value })
            }
        }
        match self {
            DistributionSpec::Exponential { rate } => pos("rate", *rate),
            DistributionSpec::Erlang { shape, rate } => {
                pos("shape", *shape as f64)?;
                pos("rate", *rate)
            }
            DistributionSpec::Gamma { shape, scale } => {
                pos("shape", *shape)?;
                pos("scale", *scale)
            }
            DistributionSpec::Constant { value } => pos("value", *value),
            DistributionSpec::ShiftedExponential { shift, rate } => {
                pos("shift", *shift)?;
                pos("rate", *rate)
            }
            DistributionSpec::Hyperexponential { weights, rates } => {
                if weights.len() != rates.len() || weights.is_empty() {
                    return Err(DistError::MismatchedComponents {
                        weights: weights.len(),
                        rates: rates.len(),
                    });
                }
                for &w in weights {
                    pos("weight", w)?;
                }
                for &r in rates {
                    pos("rate", r)?;
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(DistError::WeightsNotNormalized { sum });
                }
                Ok(())
            }
            DistributionSpec::Geometric { p, step } => {
                if !(*p > 0.0 && *p < 1.0) {
                    return Err(DistError::BadProbability {
                        name: "p",
                        value: *p,
                    });
                }
                pos("step", *step)
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => 1.0 / rate,
            DistributionSpec::Erlang { shape, rate } => *shape as f64 / rate,
            DistributionSpec::Gamma { shape, scale } => shape * scale,
            DistributionSpec::Constant { value } => *value,
            DistributionSpec::ShiftedExponential { shift, rate } => shift + 1.0 / rate,
            DistributionSpec::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w / r)
                .sum(),
            DistributionSpec::Geometric { p, step } => step / p,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => 1.0 / (rate * rate),
            DistributionSpec::Erlang { shape, rate } => *shape as f64 / (rate * rate),
            DistributionSpec::Gamma { shape, scale } => shape * scale * scale,
            DistributionSpec::Constant { .. } => 0.0,
            DistributionSpec::ShiftedExponential { rate, .. } => 1.0 / (rate * rate),
            DistributionSpec::Hyperexponential { weights, rates } => {
                let m: f64 = self.mean();
                let m2: f64 = weights
                    .iter()
                    .zip(rates)
                    .map(|(w, r)| 2.0 * w / (r * r))
                    .sum();
                m2 - m * m
            }
            DistributionSpec::Geometric { p, step } => (1.0 - p) * step * step / (p * p),
        }
    }

    /// Complementary CDF `P(X > x)`.
    pub fn ccdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 1.0;
        }
        match self {
            DistributionSpec::Exponential { rate } => (-rate * x).exp(),
            DistributionSpec::Erlang { shape, rate } => {
                // e^{-rx} * sum_{i<k} (rx)^i / i!
                let rx = rate * x;
                let mut term = 1.0;
                let mut sum = 1.0;
                for i in 1..*shape {
                    term *= rx / i as f64;
                    sum += term;
                }
                (-rx).exp() * sum
            }
            DistributionSpec::Gamma { shape, scale } => special::gamma_q(*shape, x / scale),
            DistributionSpec::Constant { value } => {
                if x < *value {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::ShiftedExponential { shift, rate } => {
                if x < *shift {
                    1.0
                } else {
                    (-rate * (x - shift)).exp()
                }
            }
            DistributionSpec::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (-r * x).exp())
                .sum(),
            DistributionSpec::Geometric { p, step } => {
                // P(X > x) = (1-p)^floor(x/step); nudge guards against a
                // float quotient landing a hair under an exact multiple.
                let k = (x / step + 1e-9).floor();
                (1.0 - p).powf(k)
            }
        }
    }

    /// One draw, advancing the stream by exactly one index.
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        self.sample_with(&mut stream.next_rng())
    }

    /// One draw from an already-positioned generator.
    pub fn sample_with(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            DistributionSpec::Exponential { rate } => exp_draw(rng, *rate),
            DistributionSpec::Erlang { shape, rate } => {
                (0..*shape).map(|_| exp_draw(rng, *rate)).sum()
            }
            DistributionSpec::Gamma { shape, scale } => {
                let g = rand_distr::Gamma::new(*shape, *scale).expect("validated parameters");
                let mut x = g.sample(rng);
                while x <= 0.0 {
                    x = g.sample(rng);
                }
                x
            }
            DistributionSpec::Constant { value } => *value,
            DistributionSpec::ShiftedExponential { shift, rate } => shift + exp_draw(rng, *rate),
            DistributionSpec::Hyperexponential { weights, rates } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut rate = rates[rates.len() - 1];
                for (w, r) in weights.iter().zip(rates) {
                    acc += w;
                    if u < acc {
                        rate = *r;
                        break;
                    }
                }
                exp_draw(rng, rate)
            }
            DistributionSpec::Geometric { p, step } => {
                let u: f64 = rng.random();
                let k = ((1.0 - u).ln() / (1.0 - p).ln()).floor() + 1.0;
                k.max(1.0) * step
            }
        }
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, DistributionSpec::Exponential { .. })
    }

    /// Rate of an exponential law, if this is one.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            DistributionSpec::Exponential { rate } => Some(*rate),
            _ => None,
        }
    }
}

/// Strictly positive exponential draw.
fn exp_draw(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return -u.ln() / rate;
        }
    }
}

/// Grid check of `F̄(τ+t) ≤ F̄(τ)·F̄(t) + tol` over `[0, grid_max]²`.
///
/// A heuristic classifier: a `true` verdict means no violation was found on
/// the grid, not a proof over the whole quadrant.
pub fn is_nbu(dist: &DistributionSpec, grid_max: f64, grid_step: f64, tol: f64) -> bool {
    nbu_nwu_grid(dist, grid_max, grid_step, |lhs, prod| lhs <= prod + tol)
}

/// Grid check of the reversed inequality `F̄(τ+t) ≥ F̄(τ)·F̄(t) − tol`.
pub fn is_nwu(dist: &DistributionSpec, grid_max: f64, grid_step: f64, tol: f64) -> bool {
    nbu_nwu_grid(dist, grid_max, grid_step, |lhs, prod| lhs >= prod - tol)
}

/// Default grid: 10x the mean, step mean/100, tolerance 1e-9.
pub fn is_nbu_default(dist: &DistributionSpec) -> bool {
    let m = dist.mean();
    is_nbu(dist, 10.0 * m, m / 100.0, 1e-9)
}

pub fn is_nwu_default(dist: &DistributionSpec) -> bool {
    let m = dist.mean();
    is_nwu(dist, 10.0 * m, m / 100.0, 1e-9)
}

fn nbu_nwu_grid(
    dist: &DistributionSpec,
    grid_max: f64,
    grid_step: f64,
    ok: impl Fn(f64, f64) -> bool,
) -> bool {
    assert!(grid_max > 0.0 && grid_step > 0.0, "grid must be positive");
    let n = (grid_max / grid_step).ceil() as usize;
    // F̄ evaluated once per node, covering indices up to 2n for tau+t.
    let ccdf: Vec<f64> = (0..=2 * n)
        .map(|i| dist.ccdf(i as f64 * grid_step))
        .collect();
    for i in 0..=n {
        for j in i..=n {
            if !ok(ccdf[i + j], ccdf[i] * ccdf[j]) {
                return false;
            }
        }
    }
    true
}

// Text names for config parsing: positional parameters after the kind tag,
// e.g. "exp 1", "erlang 2 4", "gamma 0.5 2", "const 0.5",
// "shifted-exp 0.5 2", "hyperexp 0.5 2 0.5 0.5", "geom 0.3 0.25".
impl FromStr for DistributionSpec {
    type Err = DistError;

    fn from_str(s: &str) -> Result<Self, DistError> {
        let mut it = s.split_whitespace();
        let kind = it.next().ok_or_else(|| DistError::UnknownKind(String::new()))?;
        let params: Result<Vec<f64>, _> = it.map(|t| t.parse::<f64>()).collect();
        let params = params.map_err(|e| DistError::BadSpec {
            kind: kind.to_string(),
            msg: e.to_string(),
        })?;
        let bad = |msg: &str| DistError::BadSpec {
            kind: kind.to_string(),
            msg: msg.to_string(),
        };
        let spec = match kind {
            "exp" => match params[..] {
                [rate] => DistributionSpec::Exponential { rate },
                _ => return Err(bad("expected: exp RATE")),
            },
            "erlang" => match params[..] {
                [shape, rate] if shape.fract() == 0.0 && shape >= 1.0 => {
                    DistributionSpec::Erlang {
                        shape: shape as u32,
                        rate,
                    }
                }
                _ => return Err(bad("expected: erlang SHAPE RATE (integer shape)")),
            },
            "gamma" => match params[..] {
                [shape, scale] => DistributionSpec::Gamma { shape, scale },
                _ => return Err(bad("expected: gamma SHAPE SCALE")),
            },
            "const" => match params[..] {
                [value] => DistributionSpec::Constant { value },
                _ => return Err(bad("expected: const VALUE")),
            },
            "shifted-exp" => match params[..] {
                [shift, rate] => DistributionSpec::ShiftedExponential { shift, rate },
                _ => return Err(bad("expected: shifted-exp SHIFT RATE")),
            },
            "hyperexp" => {
                if params.len() < 2 || params.len() % 2 != 0 {
                    return Err(bad("expected: hyperexp W1 R1 [W2 R2 ...]"));
                }
                let (weights, rates) = params
                    .chunks(2)
                    .map(|c| (c[0], c[1]))
                    .unzip();
                DistributionSpec::Hyperexponential { weights, rates }
            }
            "geom" => match params[..] {
                [p, step] => DistributionSpec::Geometric { p, step },
                _ => return Err(bad("expected: geom P STEP")),
            },
            other => return Err(DistError::UnknownKind(other.to_string())),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributionSpec::Exponential { rate } => write!(f, "exp {rate}"),
            DistributionSpec::Erlang { shape, rate } => write!(f, "erlang {shape} {rate}"),
            DistributionSpec::Gamma { shape, scale } => write!(f, "gamma {shape} {scale}"),
            DistributionSpec::Constant { value } => write!(f, "const {value}"),
            DistributionSpec::ShiftedExponential { shift, rate } => {
                write!(f, "shifted-exp {shift} {rate}")
            }
            DistributionSpec::Hyperexponential { weights, rates } => {
                write!(f, "hyperexp")?;
                for (w, r) in weights.iter().zip(rates) {
                    write!(f, " {w} {r}")?;
                }
                Ok(())
            }
            DistributionSpec::Geometric { p, step } => write!(f, "geom {p} {step}"),
        }
    }
}

/// Regularized incomplete gamma functions, after the classic series /
/// continued-fraction split.
mod special {
    /// ln Γ(x) via Lanczos approximation (g = 7, 9 terms).
    #[allow(clippy::excessive_precision)]
    pub fn ln_gamma(x: f64) -> f64 {
        const COEF: [f64; 8] = [
            676.5203681218851,
            -1259.1392167224028,
            771.32342877765313,
            -176.61502916214059,
            12.507343278686905,
            -0.13857109526572012,
            9.9843695780195716e-6,
            1.5056327351493116e-7,
        ];
        if x < 0.5 {
            // Reflection formula.
            let pi = std::f64::consts::PI;
            return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
        }
        let x = x - 1.0;
        let mut a = 0.99999999999980993;
        for (i, c) in COEF.iter().enumerate() {
            a += c / (x + i as f64 + 1.0);
        }
        let t = x + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
    }

    /// Regularized upper incomplete gamma Q(a, x) = Γ(a, x) / Γ(a).
    pub fn gamma_q(a: f64, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x < a + 1.0 {
            1.0 - gamma_p_series(a, x)
        } else {
            gamma_q_cf(a, x)
        }
    }

    fn gamma_p_series(a: f64, x: f64) -> f64 {
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    }

    fn gamma_q_cf(a: f64, x: f64) -> f64 {
        // Modified Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x + a * x.ln() - ln_gamma(a)).exp() * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{RngStream, StreamId, StreamPurpose};
    use proptest::prelude::*;

    fn stream(seed: u64) -> RngStream {
        RngStream::new(seed, StreamId::global(StreamPurpose::LinkService))
    }

    fn shipped_kinds() -> Vec<DistributionSpec> {
        vec![
            DistributionSpec::Exponential { rate: 1.0 },
            DistributionSpec::Erlang { shape: 2, rate: 2.0 },
            DistributionSpec::Gamma {
                shape: 0.5,
                scale: 2.0,
            },
            DistributionSpec::Constant { value: 0.5 },
            DistributionSpec::ShiftedExponential {
                shift: 0.5,
                rate: 2.0,
            },
            DistributionSpec::Hyperexponential {
                weights: vec![0.5, 0.5],
                rates: vec![2.0, 0.5],
            },
            DistributionSpec::Geometric { p: 0.3, step: 0.25 },
        ]
    }

    #[test]
    fn incomplete_gamma_reference_values() {
        // Q(1/2, z) = erfc(sqrt(z)); reference values from standard tables.
        assert!((special::gamma_q(0.5, 1.0) - 0.15729920705028513).abs() < 1e-12);
        assert!((special::gamma_q(0.5, 0.5) - 0.31731050786291415).abs() < 1e-12);
        // Q(1, x) = e^{-x}.
        assert!((special::gamma_q(1.0, 2.0) - (-2.0f64).exp()).abs() < 1e-13);
        // Q(2, 3) = e^{-3} (1 + 3).
        assert!((special::gamma_q(2.0, 3.0) - 4.0 * (-3.0f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn gamma_ccdf_matches_erlang_at_integer_shape() {
        let g = DistributionSpec::Gamma {
            shape: 3.0,
            scale: 0.5,
        };
        let e = DistributionSpec::Erlang { shape: 3, rate: 2.0 };
        for i in 0..200 {
            let x = i as f64 * 0.05;
            assert!((g.ccdf(x) - e.ccdf(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn constant_always_returns_value() {
        let d = DistributionSpec::Constant { value: 0.5 };
        let mut s = stream(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut s), 0.5);
        }
    }

    #[test]
    fn exponential_sample_mean_matches_analytic() {
        let d = DistributionSpec::Exponential { rate: 1.0 };
        let mut s = stream(2024);
        let n = 1_000_000;
        let mean = (0..n).map(|_| d.sample(&mut s)).sum::<f64>() / n as f64;
        assert!(
            (0.995..=1.005).contains(&mean),
            "sample mean {mean} outside [0.995, 1.005]"
        );
    }

    #[test]
    fn shifted_exponential_respects_shift() {
        let d = DistributionSpec::ShiftedExponential {
            shift: 0.5,
            rate: 2.0,
        };
        let mut s = stream(3);
        for _ in 0..10_000 {
            assert!(d.sample(&mut s) >= 0.5);
        }
    }

    #[test]
    fn sample_means_within_three_standard_errors() {
        // Moment check for every shipped kind.
        let n = 1_000_000u64;
        for d in shipped_kinds() {
            let mut s = stream(7_777);
            let mean = (0..n).map(|_| d.sample(&mut s)).sum::<f64>() / n as f64;
            let se = (d.variance() / n as f64).sqrt();
            let tol = 3.0 * se + 1e-12;
            assert!(
                (mean - d.mean()).abs() <= tol,
                "{d}: sample mean {mean} vs analytic {} (tol {tol})",
                d.mean()
            );
        }
    }

    #[test]
    fn nbu_nwu_classification_table() {
        // (law, expected NBU, expected NWU)
        let table: Vec<(DistributionSpec, bool, bool)> = vec![
            (DistributionSpec::Exponential { rate: 1.0 }, true, true),
            (DistributionSpec::Exponential { rate: 3.5 }, true, true),
            (DistributionSpec::Erlang { shape: 2, rate: 2.0 }, true, false),
            (DistributionSpec::Constant { value: 1.0 }, true, false),
            (
                DistributionSpec::ShiftedExponential {
                    shift: 0.5,
                    rate: 2.0,
                },
                true,
                false,
            ),
            (
                DistributionSpec::Gamma {
                    shape: 0.5,
                    scale: 2.0,
                },
                false,
                true,
            ),
            (
                DistributionSpec::Hyperexponential {
                    weights: vec![0.5, 0.5],
                    rates: vec![2.0, 0.5],
                },
                false,
                true,
            ),
        ];
        for (d, nbu, nwu) in table {
            assert_eq!(is_nbu_default(&d), nbu, "NBU verdict for {d}");
            assert_eq!(is_nwu_default(&d), nwu, "NWU verdict for {d}");
        }
    }

    #[test]
    fn geometric_is_nbu() {
        let d = DistributionSpec::Geometric { p: 0.3, step: 0.25 };
        assert!(is_nbu_default(&d));
    }

    #[test]
    fn erlang_family_is_nbu() {
        for shape in [1u32, 2, 3, 5] {
            let d = DistributionSpec::Erlang { shape, rate: 1.5 };
            assert!(is_nbu_default(&d), "erlang shape {shape}");
        }
    }

    #[test]
    fn constant_one_nwu_violation_is_where_expected() {
        // tau = t = 0.6: F̄(1.2) = 0 while F̄(0.6)^2 = 1.
        let d = DistributionSpec::Constant { value: 1.0 };
        assert_eq!(d.ccdf(1.2), 0.0);
        assert_eq!(d.ccdf(0.6), 1.0);
        assert!(!is_nwu_default(&d));
        assert!(is_nbu_default(&d));
    }

    #[test]
    fn text_names_round_trip() {
        for d in shipped_kinds() {
            let text = d.to_string();
            let back: DistributionSpec = text.parse().expect("parse back");
            assert_eq!(back, d, "round trip through `{text}`");
        }
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!("weibull 1 2".parse::<DistributionSpec>().is_err());
        assert!("exp".parse::<DistributionSpec>().is_err());
        assert!("exp -1".parse::<DistributionSpec>().is_err());
        assert!("erlang 1.5 2".parse::<DistributionSpec>().is_err());
        assert!("hyperexp 0.9 1 0.3 2".parse::<DistributionSpec>().is_err());
    }

    proptest! {
        #[test]
        fn ccdf_is_a_valid_survival_function(kind in 0usize..7, seed in 0u64..1000) {
            let d = &shipped_kinds()[kind];
            let m = d.mean();
            prop_assert!((d.ccdf(0.0) - 1.0).abs() < 1e-12);
            let mut prev = 1.0;
            for i in 0..400 {
                let x = i as f64 * m / 20.0;
                let c = d.ccdf(x);
                prop_assert!(c <= prev + 1e-12, "ccdf not non-increasing at {x}");
                prop_assert!((0.0..=1.0).contains(&c));
                prev = c;
            }
            prop_assert!(d.ccdf(200.0 * m) < 1e-6);
            // Samples are strictly positive.
            let mut s = stream(seed);
            for _ in 0..50 {
                prop_assert!(d.sample(&mut s) > 0.0);
            }
        }
    }
}
