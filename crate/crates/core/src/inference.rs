//! Surrogate tests, bootstrap intervals, multiple-comparison corrections and
//! the all-pairs transfer entropy scan.
//!
//! Every replicate draws from its own RNG substream and results are collected
//! in replicate order, so the thread count never changes an answer.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::temporal::{transfer_entropy_tested, EmbeddingSpec, TeEstimator, TeResult};

pub const DEFAULT_SURROGATES: usize = 200;
pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_SURROGATES: usize = 19;
pub const DEFAULT_BOOTSTRAP: usize = 200;
pub const MIN_BOOTSTRAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateMethod {
    /// Circular rotation of the source; keeps its autocorrelation.
    TimeShift,
    /// Random reordering of the source rows; iid data only.
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    pub observed: f64,
    pub null_samples: Vec<f64>,
    pub p_value: f64,
    pub method: SurrogateMethod,
    pub surrogates: usize,
    pub seed: RngSeed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    pub method: SurrogateMethod,
    pub surrogates: usize,
    pub alpha: f64,
    /// Smallest circular shift allowed (the largest embedding lag).
    pub min_shift: usize,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        SurrogateConfig {
            method: SurrogateMethod::TimeShift,
            surrogates: DEFAULT_SURROGATES,
            alpha: DEFAULT_ALPHA,
            min_shift: 1,
        }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if self.surrogates < MIN_SURROGATES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_SURROGATES} surrogates are required, got {}",
                self.surrogates
            )));
        }
        check_alpha_resolution(self.alpha, self.surrogates)
    }
}

/// The smallest attainable p-value is 1/(S+1); a threshold below it can
/// never reject.
pub fn check_alpha_resolution(alpha: f64, surrogates: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let floor = 1.0 / (surrogates as f64 + 1.0);
    if alpha < floor {
        let needed = (1.0 / alpha).ceil() as usize;
        return Err(Error::InvalidConfig(format!(
            "alpha {alpha} is below the smallest attainable p-value 1/{} with {surrogates} surrogates; \
             use at least {needed} surrogates",
            surrogates + 1
        )));
    }
    Ok(())
}

/// (1 + #{null ≥ observed}) / (S + 1).
pub fn plus_one_p_value(observed: f64, null: &[f64]) -> f64 {
    let exceed = null.iter().filter(|&&v| v >= observed).count();
    (1 + exceed) as f64 / (null.len() + 1) as f64
}

/// Row map for one surrogate replicate: surrogate row `i` takes source row
/// `map[i]`.
pub fn surrogate_map(n: usize, cfg: &SurrogateConfig, rng: &mut ChaCha12Rng) -> Result<Vec<usize>> {
    match cfg.method {
        SurrogateMethod::TimeShift => {
            let lo = cfg.min_shift.max(1);
            if n < 2 * lo {
                return Err(Error::InsufficientData { needed: 2 * lo, got: n });
            }
            let offset = rng.random_range(lo..=n - lo);
            Ok((0..n).map(|i| (i + offset) % n).collect())
        }
        SurrogateMethod::Permutation => {
            let mut map: Vec<usize> = (0..n).collect();
            for i in (1..n).rev() {
                map.swap(i, rng.random_range(0..=i));
            }
            Ok(map)
        }
    }
}

/// Build the null distribution of a statistic by re-evaluating it on `S`
/// surrogate row maps of length `n`.
pub fn surrogate_test<F>(
    observed: f64,
    n: usize,
    null_stat: F,
    cfg: &SurrogateConfig,
    seed: RngSeed,
) -> Result<SignificanceResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let null_samples = (0..cfg.surrogates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.substream(r as u64);
            let map = surrogate_map(n, cfg, &mut rng)?;
            null_stat(&map)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SignificanceResult {
        observed,
        p_value: plus_one_p_value(observed, &null_samples),
        null_samples,
        method: cfg.method,
        surrogates: cfg.surrogates,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    /// Quantiles of the replicate distribution.
    Percentile,
    /// Quantiles reflected about the point estimate (2θ̂ − q).
    Basic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResampleScheme {
    Iid,
    MovingBlock { block_len: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleKind {
    Iid,
    MovingBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiResult {
    pub point: f64,
    pub low: f64,
    pub high: f64,
    pub level: f64,
    pub replicates: usize,
    pub method: CiMethod,
    pub scheme: ResampleScheme,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub level: f64,
    pub method: CiMethod,
    pub resample: ResampleKind,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: DEFAULT_BOOTSTRAP,
            level: 0.95,
            method: CiMethod::Percentile,
            resample: ResampleKind::Iid,
        }
    }
}

impl BootstrapConfig {
    pub fn for_time_series(mut self, ordered: bool) -> Self {
        self.resample = if ordered { ResampleKind::MovingBlock } else { ResampleKind::Iid };
        self
    }
}

/// ⌈N^{1/3}⌉.
pub fn block_length(n: usize) -> usize {
    let mut b = (n as f64).cbrt().round() as usize;
    // exact integer ceiling, immune to cbrt rounding
    while b.pow(3) < n {
        b += 1;
    }
    while b > 1 && (b - 1).pow(3) >= n {
        b -= 1;
    }
    b.max(1)
}

/// Multiplicity of each row in one bootstrap resample of size `n`.
pub fn resample_counts(n: usize, kind: ResampleKind, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    match kind {
        ResampleKind::Iid => {
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1.0;
            }
        }
        ResampleKind::MovingBlock => {
            let b = block_length(n).min(n);
            let mut filled = 0;
            while filled < n {
                let start = rng.random_range(0..=n - b);
                let take = b.min(n - filled);
                counts[start..start + take].iter_mut().for_each(|c| *c += 1.0);
                filled += take;
            }
        }
    }
    counts
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap interval for an estimator evaluated on row multiplicities.
/// `estimator` receives a weight vector of length `n` summing to `n`.
pub fn bootstrap_ci<F>(point: f64, n: usize, estimator: F, cfg: &BootstrapConfig, seed: RngSeed) -> Result<CiResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if cfg.replicates < MIN_BOOTSTRAP {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_BOOTSTRAP} bootstrap replicates are required, got {}",
            cfg.replicates
        )));
    }
    if !(cfg.level > 0.0 && cfg.level < 1.0) {
        return Err(Error::InvalidConfig(format!("level must be in (0, 1), got {}", cfg.level)));
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let mut reps = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = seed.substream(r as u64);
            estimator(&resample_counts(n, cfg.resample, &mut rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    reps.sort_by(f64::total_cmp);
    let tail = (1.0 - cfg.level) / 2.0;
    let q_lo = quantile_sorted(&reps, tail);
    let q_hi = quantile_sorted(&reps, 1.0 - tail);
    let (low, high) = match cfg.method {
        CiMethod::Percentile => (q_lo, q_hi),
        CiMethod::Basic => (2.0 * point - q_hi, 2.0 * point - q_lo),
    };
    Ok(CiResult {
        point,
        low: low.min(point),
        high: high.max(point),
        level: cfg.level,
        replicates: cfg.replicates,
        method: cfg.method,
        scheme: match cfg.resample {
            ResampleKind::Iid => ResampleScheme::Iid,
            ResampleKind::MovingBlock => ResampleScheme::MovingBlock { block_len: block_length(n) },
        },
    })
}

/// Expand multiplicities into an explicit list of row indices.
pub fn expand_counts(counts: &[f64]) -> Vec<usize> {
    counts.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    #[default]
    Bonferroni,
    BhFdr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corrected {
    pub adjusted: Vec<f64>,
    pub rejected: Vec<bool>,
    pub method: Correction,
    pub alpha: f64,
}

pub fn correct_pvalues(p: &[f64], method: Correction, alpha: f64) -> Result<Corrected> {
    if let Some(bad) = p.iter().find(|&&v| !(v > 0.0 && v <= 1.0)) {
        return Err(Error::InvalidInput(format!("p-values must lie in (0, 1], got {bad}")));
    }
    let m = p.len() as f64;
    let adjusted = match method {
        Correction::Bonferroni => p.iter().map(|&v| (v * m).min(1.0)).collect(),
        Correction::BhFdr => {
            let mut order: Vec<usize> = (0..p.len()).collect();
            order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
            let mut adj = vec![0.0; p.len()];
            let mut running = 1.0f64;
            for (rank, &i) in order.iter().enumerate().rev() {
                running = running.min(p[i] * m / (rank + 1) as f64);
                adj[i] = running.min(1.0);
            }
            adj
        }
    };
    let rejected = adjusted.iter().map(|&a| a <= alpha).collect();
    Ok(Corrected { adjusted, rejected, method, alpha })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScanConditioning {
    /// Condition every pair on the past of all remaining streams.
    #[default]
    AllOthers,
    Pairwise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub embedding: EmbeddingSpec,
    pub estimator: TeEstimator,
    pub surrogates: usize,
    pub alpha: f64,
    pub correction: Correction,
    pub conditioning: ScanConditioning,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            embedding: EmbeddingSpec::default(),
            estimator: TeEstimator::Ksg { k: crate::mi::DEFAULT_K },
            surrogates: DEFAULT_SURROGATES,
            alpha: DEFAULT_ALPHA,
            correction: Correction::Bonferroni,
            conditioning: ScanConditioning::AllOthers,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub source: usize,
    pub target: usize,
    pub te: TeResult,
    pub adjusted_p: f64,
    pub rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub names: Vec<String>,
    pub pairs: Vec<PairResult>,
    pub correction: Correction,
    pub alpha: f64,
    pub conditioning: ScanConditioning,
    /// (source, target) of every rejected null.
    pub rejected: Vec<(usize, usize)>,
}

/// Directed TE for every ordered pair of columns with surrogate p-values and
/// a corrected rejection set.
pub fn network_scan(streams: &SampleMatrix, cfg: &ScanConfig, seed: RngSeed) -> Result<ScanResult> {
    let m = streams.n_cols();
    if m < 2 {
        return Err(Error::InvalidInput(format!("network scan needs at least 2 streams, got {m}")));
    }
    let n_tests = m * (m - 1);
    if cfg.correction == Correction::Bonferroni {
        let per_test = cfg.alpha / n_tests as f64;
        check_alpha_resolution(per_test, cfg.surrogates).map_err(|_| {
            Error::InvalidConfig(format!(
                "Bonferroni over {n_tests} tests needs p ≤ {per_test:.5}, but the smallest p-value with \
                 {} surrogates is 1/{}; use at least {} surrogates or the bh_fdr correction",
                cfg.surrogates,
                cfg.surrogates + 1,
                (1.0 / per_test).ceil() as usize
            ))
        })?;
    }
    let columns: Vec<Vec<f64>> = (0..m).map(|j| streams.column(j)).collect();
    let surrogate = SurrogateConfig {
        method: SurrogateMethod::TimeShift,
        surrogates: cfg.surrogates,
        alpha: cfg.alpha,
        min_shift: cfg.embedding.max_lag(),
    };
    let mut pairs = Vec::with_capacity(n_tests);
    let mut tests = Vec::with_capacity(n_tests);
    for target in 0..m {
        for source in 0..m {
            if source != target {
                tests.push((source, target));
            }
        }
    }
    for (idx, &(source, target)) in tests.iter().enumerate() {
        let others: Vec<&[f64]> = match cfg.conditioning {
            ScanConditioning::AllOthers => {
                (0..m).filter(|&j| j != source && j != target).map(|j| columns[j].as_slice()).collect()
            }
            ScanConditioning::Pairwise => Vec::new(),
        };
        let te = transfer_entropy_tested(
            &columns[source],
            &columns[target],
            &others,
            &cfg.embedding,
            cfg.estimator,
            &surrogate,
            seed.derive(idx as u64),
        )?;
        pairs.push(PairResult { source, target, te, adjusted_p: 1.0, rejected: false });
    }
    let p: Vec<f64> = pairs.iter().map(|r| r.te.significance.as_ref().map_or(1.0, |s| s.p_value)).collect();
    let corrected = correct_pvalues(&p, cfg.correction, cfg.alpha)?;
    let mut rejected = Vec::new();
    for (pair, (&adj, &rej)) in pairs.iter_mut().zip(corrected.adjusted.iter().zip(&corrected.rejected)) {
        pair.adjusted_p = adj;
        pair.rejected = rej;
        if rej {
            rejected.push((pair.source, pair.target));
        }
    }
    Ok(ScanResult {
        names: (0..m).map(|j| streams.column_name(j)).collect(),
        pairs,
        correction: cfg.correction,
        alpha: cfg.alpha,
        conditioning: cfg.conditioning,
        rejected,
    })
}
