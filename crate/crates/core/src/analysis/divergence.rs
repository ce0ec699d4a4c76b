//! Honest-vs-attacked screen on Bob's detection statistics.
//!
//! Every metric is a proportion `successes / trials`. Large samples use the
//! pooled two-proportion z statistic; when any expected cell count drops
//! below 5 the two-sided Fisher exact p-value is computed instead and mapped
//! back to an equivalent |z|. This is a statistical screen, not a security
//! proof: passing it only means the two runs look alike at level `z*`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::protocols::RunStatistics;

pub const DEFAULT_Z_STAR: f64 = 3.0;

/// Cap on |z| when the exact p-value underflows.
const Z_CAP: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Indistinguishable,
    Flagged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    TwoProportion,
    FisherExact,
    /// One of the runs has no trials for this metric.
    Untestable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricComparison {
    pub name: String,
    pub honest: Option<f64>,
    pub attacked: Option<f64>,
    /// Positive when the attacked proportion is larger.
    pub z_score: f64,
    pub method: TestMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub metrics: Vec<MetricComparison>,
    pub z_star: f64,
    pub max_abs_z: f64,
    pub verdict: Verdict,
}

/// A proportion together with the displayed metric value.
struct Counts {
    successes: u64,
    trials: u64,
    shown: Option<f64>,
}

fn proportion(successes: u64, trials: u64) -> Counts {
    Counts {
        successes,
        trials,
        shown: (trials > 0).then(|| successes as f64 / trials as f64),
    }
}

fn metric_counts(s: &RunStatistics) -> Vec<(String, Counts)> {
    let mut out: Vec<(String, Counts)> = s
        .detector_clicks
        .iter()
        .map(|(id, &c)| (format!("rate_{id}"), proportion(c, s.slots)))
        .collect();
    out.push(("raw_detection_rate".into(), proportion(s.raw_detections, s.slots)));
    out.push(("double_click_rate".into(), proportion(s.double_clicks, s.slots)));
    out.push(("qber".into(), proportion(s.errors, s.sifted_len)));
    if let Some(v) = &s.visibility {
        // tested through the destructive share (1 - V) / 2
        out.push((
            "visibility".into(),
            Counts {
                successes: v.destructive_clicks,
                trials: v.destructive_clicks + v.constructive_clicks,
                shown: v.value,
            },
        ));
    }
    out
}

/// Two-sided comparison of `x1 / n1` (honest) and `x2 / n2` (attacked).
pub fn compare_proportions(x1: u64, n1: u64, x2: u64, n2: u64) -> (f64, TestMethod) {
    if n1 == 0 || n2 == 0 {
        return (0.0, TestMethod::Untestable);
    }
    let n = (n1 + n2) as f64;
    let k = (x1 + x2) as f64;
    let pooled = k / n;
    let min_expected = [n1 as f64, n2 as f64]
        .into_iter()
        .flat_map(|ni| [ni * pooled, ni * (1.0 - pooled)])
        .fold(f64::INFINITY, f64::min);
    // cross-multiplied equality avoids rounding in the quotient
    if u128::from(x1) * u128::from(n2) == u128::from(x2) * u128::from(n1) {
        let method = if min_expected < 5.0 {
            TestMethod::FisherExact
        } else {
            TestMethod::TwoProportion
        };
        return (0.0, method);
    }
    let diff = x2 as f64 / n2 as f64 - x1 as f64 / n1 as f64;
    if min_expected < 5.0 {
        let p = fisher_two_sided(x1, n1, x2, n2);
        let z = if p >= 1.0 - 1e-9 {
            0.0
        } else if p <= 0.0 {
            Z_CAP
        } else {
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (-normal.inverse_cdf(p / 2.0)).min(Z_CAP)
        };
        (z.copysign(diff), TestMethod::FisherExact)
    } else {
        let se = (pooled * (1.0 - pooled) * (1.0 / n1 as f64 + 1.0 / n2 as f64)).sqrt();
        (diff / se, TestMethod::TwoProportion)
    }
}

/// Two-sided Fisher exact test on the 2x2 table `[[x1, n1-x1], [x2, n2-x2]]`.
pub fn fisher_two_sided(x1: u64, n1: u64, x2: u64, n2: u64) -> f64 {
    let total = n1 + n2;
    let successes = x1 + x2;
    let lo = n1.saturating_sub(total - successes);
    let hi = successes.min(n1);
    let ln_denominator = ln_binomial(total, n1);
    let ln_p = |x: u64| {
        ln_binomial(successes, x) + ln_binomial(total - successes, n1 - x) - ln_denominator
    };
    let observed = ln_p(x1);
    // relative slack so that tables tied with the observed one are included
    let cutoff = observed + 1e-7;
    let p: f64 = (lo..=hi)
        .map(ln_p)
        .filter(|&lp| lp <= cutoff)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}

pub fn compare_statistics(
    honest: &RunStatistics,
    attacked: &RunStatistics,
    z_star: f64,
) -> Result<DivergenceReport> {
    if honest.slots == 0 || attacked.slots == 0 {
        return Err(Error::Usage("cannot compare zero-length runs".into()));
    }
    if !(z_star.is_finite() && z_star > 0.0) {
        return Err(Error::parameter("z_star", z_star, "must be > 0"));
    }
    let h = metric_counts(honest);
    let mut a = metric_counts(attacked);
    let mut metrics = Vec::with_capacity(h.len());
    for (name, hc) in h {
        let ac = match a.iter().position(|(n, _)| *n == name) {
            Some(i) => a.remove(i).1,
            None => proportion(0, 0),
        };
        metrics.push(build(name, hc, ac));
    }
    for (name, ac) in a {
        metrics.push(build(name, proportion(0, 0), ac));
    }
    let max_abs_z = metrics.iter().map(|m| m.z_score.abs()).fold(0.0, f64::max);
    Ok(DivergenceReport {
        verdict: if max_abs_z > z_star {
            Verdict::Flagged
        } else {
            Verdict::Indistinguishable
        },
        metrics,
        z_star,
        max_abs_z,
    })
}

fn build(name: String, h: Counts, a: Counts) -> MetricComparison {
    let (z_score, method) = compare_proportions(h.successes, h.trials, a.successes, a.trials);
    MetricComparison {
        name,
        honest: h.shown,
        attacked: a.shown,
        z_score,
        method,
    }
}
