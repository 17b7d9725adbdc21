//! Transfer entropy, active information storage, predictive information and
//! lag selection.
//!
//! Lag convention: lag 1 is the most recent past value, so with future
//! X_{t+1} the lag-1 tap is X_t and lag j is X_{t+1-j}.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{prepare_for_knn, DiscreteSeries, SampleMatrix};
use crate::entropy::{entropy_knn, plugin_from_counts, DEFAULT_KNN_K};
use crate::error::{Error, Result};
use crate::inference::{
    plus_one_p_value, surrogate_map, surrogate_test, SignificanceResult, SurrogateConfig, SurrogateMethod,
};
use crate::manifest::Warning;
use crate::mi::{ksg_weighted, plugin_cmi, SymbolBlock};
use crate::rng::RngSeed;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    /// History length of the target (l).
    pub target_lags: usize,
    /// History length of the source (k).
    pub source_lags: usize,
    /// Spacing between taps (τ).
    pub delay: usize,
    /// Explicit source lags; overrides `source_lags`/`delay` for the source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_lag_set: Option<Vec<usize>>,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec { target_lags: 1, source_lags: 1, delay: 1, selected_lag_set: None }
    }
}

impl EmbeddingSpec {
    pub fn new(target_lags: usize, source_lags: usize, delay: usize) -> Result<Self> {
        let spec = EmbeddingSpec { target_lags, source_lags, delay, selected_lag_set: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_lag_set(mut self, lags: Vec<usize>) -> Result<Self> {
        self.selected_lag_set = Some(lags);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.target_lags == 0 || self.source_lags == 0 || self.delay == 0 {
            return Err(Error::InvalidConfig(format!(
                "embedding l, k, tau must all be ≥ 1, got {}, {}, {}",
                self.target_lags, self.source_lags, self.delay
            )));
        }
        if let Some(lags) = &self.selected_lag_set {
            if lags.is_empty() || lags[0] == 0 || lags.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig(
                    "explicit lag lists must be non-empty, strictly increasing positive integers".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn target_lag_list(&self) -> Vec<usize> {
        uniform_lags(self.target_lags, self.delay)
    }

    pub fn source_lag_list(&self) -> Vec<usize> {
        match &self.selected_lag_set {
            Some(l) => l.clone(),
            None => uniform_lags(self.source_lags, self.delay),
        }
    }

    pub fn max_lag(&self) -> usize {
        let t = self.target_lag_list();
        let s = self.source_lag_list();
        t.last().copied().unwrap_or(1).max(s.last().copied().unwrap_or(1))
    }
}

fn uniform_lags(count: usize, delay: usize) -> Vec<usize> {
    (0..count).map(|i| 1 + i * delay).collect()
}

/// Rows t = max_lag-1 .. N-2, column j holds series[t + 1 - lags[j]].
fn lagged_block(series: &[f64], lags: &[usize], max_lag: usize) -> SampleMatrix {
    let n_eff = series.len() - max_lag;
    let mut data = Vec::with_capacity(n_eff * lags.len());
    for t in max_lag - 1..series.len() - 1 {
        for &lag in lags {
            data.push(series[t + 1 - lag]);
        }
    }
    SampleMatrix::from_row_major(data, n_eff, lags.len()).expect("shape is consistent")
}

/// Embedded blocks. Row i corresponds to future time `max_lag + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedded {
    pub future: SampleMatrix,
    pub target_past: SampleMatrix,
    pub source_past: Option<SampleMatrix>,
    /// Pasts of extra conditioning streams, source lags each.
    pub conditioning: Option<SampleMatrix>,
    pub max_lag: usize,
}

impl Embedded {
    pub fn n_eff(&self) -> usize {
        self.future.n_rows()
    }

    /// (future | target-past | source-past | conditioning) side by side.
    pub fn matrix(&self) -> SampleMatrix {
        let mut parts = vec![&self.future, &self.target_past];
        parts.extend(self.source_past.as_ref());
        parts.extend(self.conditioning.as_ref());
        SampleMatrix::hstack(&parts).expect("blocks share the row count")
    }

    /// Target past and conditioning pasts together: the Z of the TE CMI.
    pub fn condition_block(&self) -> SampleMatrix {
        match &self.conditioning {
            Some(c) => SampleMatrix::hstack(&[&self.target_past, c]).expect("same rows"),
            None => self.target_past.clone(),
        }
    }
}

pub fn embed(target: &[f64], source: Option<&[f64]>, spec: &EmbeddingSpec) -> Result<Embedded> {
    embed_conditioned(target, source, &[], spec)
}

pub fn embed_conditioned(
    target: &[f64],
    source: Option<&[f64]>,
    conditioning: &[&[f64]],
    spec: &EmbeddingSpec,
) -> Result<Embedded> {
    spec.validate()?;
    let n = target.len();
    if source.is_some_and(|s| s.len() != n) || conditioning.iter().any(|c| c.len() != n) {
        return Err(Error::InvalidInput("all series must have equal length".into()));
    }
    let max_lag = spec.max_lag();
    if n <= max_lag {
        return Err(Error::InsufficientData { needed: max_lag + 1, got: n });
    }
    let target_lags = spec.target_lag_list();
    let source_lags = spec.source_lag_list();
    let future = lagged_block(target, &[0], max_lag);
    let target_past = lagged_block(target, &target_lags, max_lag);
    let source_past = source.map(|s| lagged_block(s, &source_lags, max_lag));
    let conditioning = if conditioning.is_empty() {
        None
    } else {
        let blocks: Vec<SampleMatrix> = conditioning.iter().map(|c| lagged_block(c, &source_lags, max_lag)).collect();
        Some(SampleMatrix::hstack(&blocks.iter().collect::<Vec<_>>())?)
    };
    Ok(Embedded { future, target_past, source_past, conditioning, max_lag })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TeEstimator {
    /// Plug-in conditional MI on integer-valued symbols.
    Plugin,
    /// KSG conditional MI with `k` neighbours on standardized, jittered data.
    Ksg { k: usize },
}

impl TeEstimator {
    pub fn id(self) -> &'static str {
        match self {
            TeEstimator::Plugin => "plugin",
            TeEstimator::Ksg { .. } => "ksg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeResult {
    /// Nats.
    pub value: f64,
    /// `value` over the target's marginal entropy; absent when that entropy
    /// is not positive.
    pub effect_size: Option<f64>,
    pub embedding: EmbeddingSpec,
    pub estimator: TeEstimator,
    pub n_eff: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub significance: Option<SignificanceResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

fn to_symbols(m: &SampleMatrix) -> SymbolBlock {
    (0..m.n_rows()).map(|i| m.row(i).iter().map(|&v| v as usize).collect()).collect()
}

fn check_symbols(series: &[f64]) -> Result<()> {
    DiscreteSeries::from_values(series).map(|_| ())
}

fn prepare(series: &[f64], estimator: TeEstimator) -> Result<Vec<f64>> {
    match estimator {
        TeEstimator::Plugin => {
            check_symbols(series)?;
            Ok(series.to_vec())
        }
        TeEstimator::Ksg { .. } => Ok(prepare_for_knn(&SampleMatrix::from_column(series)?).column(0)),
    }
}

/// I(a; b | c) on embedded blocks; `c` may have zero columns.
fn block_cmi(
    a: &SampleMatrix,
    b: &SampleMatrix,
    c: Option<&SampleMatrix>,
    estimator: TeEstimator,
    weights: Option<&[f64]>,
) -> Result<f64> {
    match estimator {
        TeEstimator::Plugin => {
            let empty;
            let cz = match c {
                Some(c) => to_symbols(c),
                None => {
                    empty = vec![Vec::new(); a.n_rows()];
                    empty
                }
            };
            plugin_cmi(&to_symbols(a), &to_symbols(b), &cz, weights)
        }
        TeEstimator::Ksg { k } => ksg_weighted(a, b, c, k, weights),
    }
}

/// TE on already prepared series.
fn te_prepared(
    source: &[f64],
    target: &[f64],
    conditioning: &[&[f64]],
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
    weights: Option<&[f64]>,
) -> Result<(f64, usize)> {
    let e = embed_conditioned(target, Some(source), conditioning, spec)?;
    let z = e.condition_block();
    let src = e.source_past.as_ref().expect("source embedded");
    Ok((block_cmi(&e.future, src, Some(&z), estimator, weights)?, e.n_eff()))
}

/// Marginal entropy used to normalize TE: plug-in for symbols, KL-kNN of
/// the standardized series for continuous data.
pub fn target_entropy(target: &[f64], estimator: TeEstimator) -> Result<f64> {
    match estimator {
        TeEstimator::Plugin => Ok(plugin_from_counts(&DiscreteSeries::from_values(target)?.counts())),
        TeEstimator::Ksg { .. } => {
            let z = prepare_for_knn(&SampleMatrix::from_column(target)?);
            Ok(entropy_knn(&z, DEFAULT_KNN_K)?.value)
        }
    }
}

fn effect_size(value: f64, target: &[f64], estimator: TeEstimator) -> Option<f64> {
    match target_entropy(target, estimator) {
        Ok(h) if h > 0.0 => Some(value / h),
        _ => None,
    }
}

fn te_warnings(spec: &EmbeddingSpec, n_eff: usize) -> Vec<Warning> {
    let mut w = Vec::new();
    if *spec == EmbeddingSpec::default() {
        w.push(Warning::new(
            "default_embedding",
            "default embedding l = k = tau = 1 used; justify or select the embedding explicitly",
        ));
    }
    if n_eff < 100 {
        w.push(Warning::new("small_sample", format!("only {n_eff} embedded samples")));
    }
    w
}

/// T_{source→target} = I(X_{t+1}; Y-past | X-past), optionally also
/// conditioned on the pasts of further streams.
pub fn transfer_entropy(
    source: &[f64],
    target: &[f64],
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
) -> Result<TeResult> {
    transfer_entropy_conditional(source, target, &[], spec, estimator)
}

pub fn transfer_entropy_conditional(
    source: &[f64],
    target: &[f64],
    conditioning: &[&[f64]],
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
) -> Result<TeResult> {
    let (s, t, c) = prepare_all(source, target, conditioning, estimator)?;
    let cref: Vec<&[f64]> = c.iter().map(Vec::as_slice).collect();
    let (value, n_eff) = te_prepared(&s, &t, &cref, spec, estimator, None)?;
    Ok(TeResult {
        value,
        effect_size: effect_size(value, target, estimator),
        embedding: spec.clone(),
        estimator,
        n_eff,
        significance: None,
        warnings: te_warnings(spec, n_eff),
    })
}

type Prepared = (Vec<f64>, Vec<f64>, Vec<Vec<f64>>);

fn prepare_all(source: &[f64], target: &[f64], conditioning: &[&[f64]], estimator: TeEstimator) -> Result<Prepared> {
    if source.len() != target.len() {
        return Err(Error::InvalidInput("source and target must have equal length".into()));
    }
    Ok((
        prepare(source, estimator)?,
        prepare(target, estimator)?,
        conditioning.iter().map(|c| prepare(c, estimator)).collect::<Result<_>>()?,
    ))
}

/// Transfer entropy with a surrogate test: the source is re-mapped (time
/// shift or permutation) and the full estimate recomputed per replicate.
pub fn transfer_entropy_tested(
    source: &[f64],
    target: &[f64],
    conditioning: &[&[f64]],
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
    surrogates: &SurrogateConfig,
    seed: RngSeed,
) -> Result<TeResult> {
    let (s, t, c) = prepare_all(source, target, conditioning, estimator)?;
    let cref: Vec<&[f64]> = c.iter().map(Vec::as_slice).collect();
    let (value, n_eff) = te_prepared(&s, &t, &cref, spec, estimator, None)?;
    let cfg = SurrogateConfig { min_shift: surrogates.min_shift.max(spec.max_lag()), ..*surrogates };
    let sig = surrogate_test(
        value,
        s.len(),
        |map| {
            let shifted: Vec<f64> = map.iter().map(|&i| s[i]).collect();
            Ok(te_prepared(&shifted, &t, &cref, spec, estimator, None)?.0)
        },
        &cfg,
        seed,
    )?;
    Ok(TeResult {
        value,
        effect_size: effect_size(value, target, estimator),
        embedding: spec.clone(),
        estimator,
        n_eff,
        significance: Some(sig),
        warnings: te_warnings(spec, n_eff),
    })
}

/// TE evaluated on embedded-row multiplicities, for block bootstrap.
/// Returns a closure-friendly evaluator bound to the prepared data.
pub struct TeResampler {
    source: Vec<f64>,
    target: Vec<f64>,
    conditioning: Vec<Vec<f64>>,
    spec: EmbeddingSpec,
    estimator: TeEstimator,
    n_eff: usize,
}

impl TeResampler {
    pub fn new(
        source: &[f64],
        target: &[f64],
        conditioning: &[&[f64]],
        spec: &EmbeddingSpec,
        estimator: TeEstimator,
    ) -> Result<Self> {
        let (s, t, c) = prepare_all(source, target, conditioning, estimator)?;
        let n_eff = embed(&t, Some(&s), spec)?.n_eff();
        Ok(TeResampler { source: s, target: t, conditioning: c, spec: spec.clone(), estimator, n_eff })
    }

    pub fn n_eff(&self) -> usize {
        self.n_eff
    }

    pub fn eval(&self, weights: &[f64]) -> Result<f64> {
        let cref: Vec<&[f64]> = self.conditioning.iter().map(Vec::as_slice).collect();
        Ok(te_prepared(&self.source, &self.target, &cref, &self.spec, self.estimator, Some(weights))?.0)
    }
}

/// AIS(X) = I(X-past; X_{t+1}) with the target lags of `spec`.
pub fn active_information_storage(series: &[f64], spec: &EmbeddingSpec, estimator: TeEstimator) -> Result<TeResult> {
    let x = prepare(series, estimator)?;
    let e = embed(&x, None, spec)?;
    let value = block_cmi(&e.future, &e.target_past, None, estimator, None)?;
    Ok(TeResult {
        value,
        effect_size: effect_size(value, series, estimator),
        embedding: spec.clone(),
        estimator,
        n_eff: e.n_eff(),
        significance: None,
        warnings: Vec::new(),
    })
}

/// AIS on embedded-row multiplicities.
pub fn ais_weighted(series: &[f64], spec: &EmbeddingSpec, estimator: TeEstimator, weights: &[f64]) -> Result<f64> {
    let x = prepare(series, estimator)?;
    let e = embed(&x, None, spec)?;
    block_cmi(&e.future, &e.target_past, None, estimator, Some(weights))
}

/// Past block (X_{t-T+1..t}) and future block (X_{t+1..t+T}).
pub fn past_future_blocks(series: &[f64], window: usize) -> Result<(SampleMatrix, SampleMatrix)> {
    if window == 0 {
        return Err(Error::InvalidConfig("window T must be ≥ 1".into()));
    }
    let n = series.len();
    if n <= 2 * window {
        return Err(Error::InsufficientData { needed: 2 * window + 1, got: n });
    }
    let rows = n - 2 * window + 1;
    let mut past = Vec::with_capacity(rows * window);
    let mut future = Vec::with_capacity(rows * window);
    for t in window - 1..n - window {
        past.extend_from_slice(&series[t + 1 - window..=t]);
        future.extend_from_slice(&series[t + 1..=t + window]);
    }
    Ok((SampleMatrix::from_row_major(past, rows, window)?, SampleMatrix::from_row_major(future, rows, window)?))
}

/// I(past_T; future_T) in nats.
pub fn predictive_information(series: &[f64], window: usize, estimator: TeEstimator) -> Result<f64> {
    predictive_information_weighted(series, window, estimator, None)
}

pub fn predictive_information_weighted(
    series: &[f64],
    window: usize,
    estimator: TeEstimator,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let x = prepare(series, estimator)?;
    let (past, future) = past_future_blocks(&x, window)?;
    block_cmi(&past, &future, None, estimator, weights)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    /// Largest source lag considered (L).
    pub max_lag: usize,
    /// Target history always conditioned on.
    pub target_lags: usize,
    pub estimator: TeEstimator,
    pub surrogates: usize,
    pub alpha: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            max_lag: 5,
            target_lags: 1,
            estimator: TeEstimator::Ksg { k: crate::mi::DEFAULT_K },
            surrogates: 200,
            alpha: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionStep {
    pub source: usize,
    pub lag: usize,
    pub cmi: f64,
    /// Max-statistic surrogate p-value across the remaining candidates.
    pub p_value: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagSelection {
    /// (source index, lag) in selection order.
    pub selected: Vec<(usize, usize)>,
    pub steps: Vec<SelectionStep>,
    /// Embedding for a single-source selection; `None` if nothing was picked
    /// or picks span several sources.
    pub embedding: Option<EmbeddingSpec>,
}

/// Greedy forward selection of (source, lag) candidates by conditional MI
/// with the target future, stopping at the first step whose best candidate
/// is not significant under a max-statistic surrogate test.
pub fn select_embedding_nonuniform(
    target: &[f64],
    sources: &[&[f64]],
    cfg: &SelectionConfig,
    seed: RngSeed,
) -> Result<LagSelection> {
    if cfg.max_lag == 0 || cfg.target_lags == 0 {
        return Err(Error::InvalidConfig("max_lag and target_lags must be ≥ 1".into()));
    }
    SurrogateConfig { surrogates: cfg.surrogates, alpha: cfg.alpha, ..Default::default() }.validate()?;
    if sources.iter().any(|s| s.len() != target.len()) {
        return Err(Error::InvalidInput("all series must have equal length".into()));
    }
    let window = cfg.max_lag.max(cfg.target_lags);
    if target.len() <= window + 2 * cfg.max_lag {
        return Err(Error::InsufficientData { needed: window + 2 * cfg.max_lag + 1, got: target.len() });
    }
    let x = prepare(target, cfg.estimator)?;
    let prepared: Vec<Vec<f64>> = sources.iter().map(|s| prepare(s, cfg.estimator)).collect::<Result<_>>()?;

    let target_lags = uniform_lags(cfg.target_lags, 1);
    let future = lagged_block(&x, &[0], window);
    let n_eff = future.n_rows();
    let mut cond = lagged_block(&x, &target_lags, window);
    let lags: Vec<usize> = (1..=cfg.max_lag).collect();
    let mut remaining: Vec<(usize, usize, SampleMatrix)> = Vec::new();
    for (j, s) in prepared.iter().enumerate() {
        for &lag in &lags {
            remaining.push((j, lag, lagged_block(s, &[lag], window)));
        }
    }
    let shift_cfg = SurrogateConfig {
        method: SurrogateMethod::TimeShift,
        surrogates: cfg.surrogates,
        alpha: cfg.alpha,
        min_shift: cfg.max_lag,
    };

    let mut selected = Vec::new();
    let mut steps = Vec::new();
    let mut step_no = 0u64;
    while !remaining.is_empty() {
        let values = remaining
            .par_iter()
            .map(|(_, _, col)| block_cmi(&future, col, Some(&cond), cfg.estimator, None))
            .collect::<Result<Vec<f64>>>()?;
        let mut best = 0;
        for (i, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = i;
            }
        }
        let step_seed = seed.derive(step_no);
        let null = (0..cfg.surrogates)
            .into_par_iter()
            .map(|r| {
                let mut rng = step_seed.substream(r as u64);
                let map = surrogate_map(n_eff, &shift_cfg, &mut rng)?;
                let mut max = f64::NEG_INFINITY;
                for (_, _, col) in &remaining {
                    let rotated = col.select_rows(&map);
                    max = max.max(block_cmi(&future, &rotated, Some(&cond), cfg.estimator, None)?);
                }
                Ok(max)
            })
            .collect::<Result<Vec<f64>>>()?;
        let p = plus_one_p_value(values[best], &null);
        let accepted = p <= cfg.alpha;
        let (source, lag, col) = remaining.remove(best);
        steps.push(SelectionStep { source, lag, cmi: values[best], p_value: p, accepted });
        if !accepted {
            break;
        }
        selected.push((source, lag));
        cond = SampleMatrix::hstack(&[&cond, &col])?;
        step_no += 1;
    }

    let embedding = match selected.first() {
        Some(&(first, _)) if selected.iter().all(|&(j, _)| j == first) => {
            let mut set: Vec<usize> = selected.iter().map(|&(_, l)| l).collect();
            set.sort_unstable();
            Some(EmbeddingSpec::new(cfg.target_lags, set.len(), 1)?.with_lag_set(set)?)
        }
        _ => None,
    };
    Ok(LagSelection { selected, steps, embedding })
}
