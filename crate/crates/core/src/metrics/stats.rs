use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MetricsError;

pub const DEFAULT_RESAMPLES: usize = 1000;
pub const DEFAULT_LEVEL: f64 = 0.95;

/// Mean taken relative to the first value, so a constant series yields
/// exactly that constant.
pub fn mean(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    Some(first + values.iter().map(|v| v - first).sum::<f64>() / values.len() as f64)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + w * (sorted[hi] - sorted[lo])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Percentile bootstrap of the mean.
pub fn bootstrap_ci(
    values: &[f64],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<Interval, MetricsError> {
    if values.len() < 2 {
        return Err(MetricsError::TooFewValues {
            needed: 2,
            got: values.len(),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(MetricsError::OutOfRange {
            what: "confidence level",
            value: level,
        });
    }
    if resamples == 0 {
        return Err(MetricsError::TooFewValues { needed: 1, got: 0 });
    }
    let n = values.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| {
            let first = values[rng.gen_range(0..n)];
            let rest: f64 = (1..n).map(|_| values[rng.gen_range(0..n)] - first).sum();
            first + rest / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok(Interval {
        low: quantile(&means, tail),
        high: quantile(&means, 1.0 - tail),
    })
}

/// How tied values are ranked for Spearman's coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTies {
    /// Tied values share the mean of their positions.
    #[default]
    Average,
    /// Tied values take consecutive positions in input order.
    Ordinal,
}

pub fn ranks(values: &[f64], ties: RankTies) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut out = vec![0.0; values.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        if ties == RankTies::Average {
            while end < order.len() && values[order[end]] == values[order[k]] {
                end += 1;
            }
        }
        // 1-based positions k+1 ..= end
        let r = (k + 1 + end) as f64 / 2.0;
        for &idx in &order[k..end] {
            out[idx] = r;
        }
        k = end;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(MetricsError::TooFewValues {
            needed: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mx = mean(x).expect("non-empty");
    let my = mean(y).expect("non-empty");
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn spearman(x: &[f64], y: &[f64], ties: RankTies) -> Result<f64, MetricsError> {
    if x.len() != y.len() {
        return Err(MetricsError::LengthMismatch(x.len(), y.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    // constant series rank to distinct positions under Ordinal; reject them first
    for s in [x, y] {
        if s.windows(2).all(|w| w[0] == w[1]) && !s.is_empty() {
            return Err(MetricsError::ZeroVariance);
        }
    }
    pearson(&ranks(x, ties), &ranks(y, ties))
}

/// Pearson's r on values and Spearman's rho on average-ranked values.
pub fn correlations(x: &[f64], y: &[f64]) -> Result<(f64, f64), MetricsError> {
    correlations_with(x, y, RankTies::Average)
}

pub fn correlations_with(x: &[f64], y: &[f64], ties: RankTies) -> Result<(f64, f64), MetricsError> {
    Ok((pearson(x, y)?, spearman(x, y, ties)?))
}
