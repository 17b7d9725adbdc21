//! Shannon and differential entropy estimators. All values are in nats.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{DiscreteSeries, ProbTable, SampleMatrix};
use crate::error::{Error, Result};
use crate::inference::CiResult;
use crate::knn::NeighborIndex;
use crate::manifest::Hyperparams;
use statrs::function::gamma::digamma;

/// Default neighbour count for the Kozachenko-Leonenko estimator.
pub const DEFAULT_KNN_K: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntropyEstimator {
    Plugin,
    MillerMadow,
    Vasicek,
    KnnKl,
}

impl EntropyEstimator {
    pub fn id(self) -> &'static str {
        match self {
            EntropyEstimator::Plugin => "plugin",
            EntropyEstimator::MillerMadow => "miller_madow",
            EntropyEstimator::Vasicek => "vasicek",
            EntropyEstimator::KnnKl => "knn_kl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub value: f64,
    pub estimator: EntropyEstimator,
    pub hyperparams: Hyperparams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ci: Option<CiResult>,
}

impl EntropyEstimate {
    fn new(value: f64, estimator: EntropyEstimator, hyperparams: Hyperparams) -> Self {
        EntropyEstimate { value, estimator, hyperparams, ci: None }
    }
}

/// −Σ p ln p with 0·ln 0 = 0.
pub fn shannon(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()).sum::<f64>()
}

/// Plugin entropy of (possibly weighted) counts.
pub fn plugin_from_counts(counts: &[f64]) -> f64 {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Plugin entropy of a known distribution.
pub fn entropy_of(p: &ProbTable) -> EntropyEstimate {
    let mut hp = Hyperparams::new();
    hp.insert("alphabet_size".into(), json!(p.len()));
    EntropyEstimate::new(shannon(p.probs()), EntropyEstimator::Plugin, hp)
}

/// Plugin entropy of the empirical symbol frequencies.
pub fn entropy_plugin(series: &DiscreteSeries) -> Result<EntropyEstimate> {
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut hp = Hyperparams::new();
    hp.insert("alphabet_size".into(), json!(series.alphabet_size()));
    hp.insert("n".into(), json!(series.len()));
    Ok(EntropyEstimate::new(plugin_from_counts(&series.counts()), EntropyEstimator::Plugin, hp))
}

/// Plugin entropy plus the first-order bias term (K̂ − 1)/(2N).
pub fn miller_madow_from_counts(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    let observed = counts.iter().filter(|&&c| c > 0.0).count();
    plugin_from_counts(counts) + (observed.saturating_sub(1)) as f64 / (2.0 * n)
}

pub fn entropy_miller_madow(series: &DiscreteSeries) -> Result<EntropyEstimate> {
    if series.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let counts = series.counts();
    let observed = counts.iter().filter(|&&c| c > 0.0).count();
    let mut hp = Hyperparams::new();
    hp.insert("alphabet_size".into(), json!(series.alphabet_size()));
    hp.insert("n".into(), json!(series.len()));
    hp.insert("observed_symbols".into(), json!(observed));
    Ok(EntropyEstimate::new(miller_madow_from_counts(&counts), EntropyEstimator::MillerMadow, hp))
}

/// Default spacing window ⌊√N⌋.
pub fn default_spacing(n: usize) -> usize {
    ((n as f64).sqrt().floor() as usize).max(1)
}

/// Vasicek m-spacing estimate of differential entropy for a single column.
///
/// `(1/N) Σ ln( N/(2m) · (x_(i+m) − x_(i−m)) )`, order statistics clamped at
/// the sample extremes.
pub fn entropy_vasicek(samples: &SampleMatrix, m: Option<usize>) -> Result<EntropyEstimate> {
    if samples.n_cols() != 1 {
        return Err(Error::InvalidConfig(format!(
            "spacing estimators are one-dimensional; got d = {}",
            samples.n_cols()
        )));
    }
    let n = samples.n_rows();
    let m = m.unwrap_or_else(|| default_spacing(n));
    if m == 0 {
        return Err(Error::InvalidConfig("spacing window m must be ≥ 1".into()));
    }
    if n < 2 * m + 1 {
        return Err(Error::InsufficientData { needed: 2 * m + 1, got: n });
    }
    let mut x = samples.column(0);
    x.sort_by(f64::total_cmp);
    if x[0] == x[n - 1] {
        return Err(Error::DegenerateInput("constant sample has no spacings".into()));
    }
    let scale = n as f64 / (2.0 * m as f64);
    let mut acc = 0.0;
    for i in 0..n {
        let hi = x[(i + m).min(n - 1)];
        let lo = x[i.saturating_sub(m)];
        let spacing = hi - lo;
        if spacing <= 0.0 {
            return Err(Error::DegenerateInput(
                "repeated values give zero-width spacings; jitter the sample first".into(),
            ));
        }
        acc += (scale * spacing).ln();
    }
    let mut hp = Hyperparams::new();
    hp.insert("m".into(), json!(m));
    hp.insert("n".into(), json!(n));
    Ok(EntropyEstimate::new(acc / n as f64, EntropyEstimator::Vasicek, hp))
}

/// Kozachenko-Leonenko kNN entropy under the max-norm:
/// ψ(N) − ψ(k) + d ln 2 + (d/N) Σ ln ε_i.
pub fn entropy_knn(samples: &SampleMatrix, k: usize) -> Result<EntropyEstimate> {
    let weights = vec![1.0; samples.n_rows()];
    let value = knn_entropy_weighted(samples, k, &weights)?;
    let mut hp = Hyperparams::new();
    hp.insert("k".into(), json!(k));
    hp.insert("metric".into(), json!("max-norm"));
    hp.insert("n".into(), json!(samples.n_rows()));
    hp.insert("d".into(), json!(samples.n_cols()));
    Ok(EntropyEstimate::new(value, EntropyEstimator::KnnKl, hp))
}

/// Kozachenko-Leonenko estimate where row i stands for `weights[i]` copies
/// (copies of the same row never count as each other's neighbours).
pub fn knn_entropy_weighted(samples: &SampleMatrix, k: usize, weights: &[f64]) -> Result<f64> {
    let d = samples.n_cols();
    let cols: Vec<usize> = (0..d).collect();
    let index = NeighborIndex::for_knn(samples, &cols, weights);
    let total = index.total_weight();
    if k == 0 || (k as f64) >= total {
        return Err(Error::InvalidConfig(format!("k = {k} requires more than {k} samples, got {total}")));
    }
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        let eps = index.kth_distance(i, k)?;
        if eps <= 0.0 {
            return Err(Error::DegenerateInput(
                "duplicate points give zero neighbour distance; jitter the sample first".into(),
            ));
        }
        acc += w * eps.ln();
    }
    Ok(digamma(total) - digamma(k as f64) + d as f64 * std::f64::consts::LN_2 + d as f64 * acc / total)
}
