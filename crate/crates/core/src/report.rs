//! Every measure bundled with its manifest: the estimate, a bootstrap
//! interval (or the reason none exists), a surrogate test where one applies
//! and the preprocessing trail.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::causal::{
    autonomy_causal, causal_emergence, effective_information, phi, AutonomyData, CausalAutonomy, CoarseGraining,
    EmergenceResult, ObservationalAutonomy, PhiResult, SystemSplit, Tpm, Trial, PHI_VARIANT,
};
use crate::data::{
    check_stationarity, prepare_for_knn, DiscreteSeries, ProbTable, SampleMatrix, Stationarity, JITTER_RELATIVE,
    JITTER_SEED,
};
use crate::divergence::{cross_entropy, jensen_shannon, kl_discrete, Direction, Smoothing};
use crate::entropy::{
    entropy_knn, entropy_miller_madow, entropy_plugin, entropy_vasicek, knn_entropy_weighted, miller_madow_from_counts,
    plugin_from_counts, EntropyEstimate, EntropyEstimator,
};
use crate::error::{Error, Result};
use crate::inference::{
    bootstrap_ci, expand_counts, network_scan, surrogate_test, BootstrapConfig, Correction, PairResult,
    ScanConditioning, ScanConfig, SurrogateConfig, SurrogateMethod,
};
use crate::manifest::{
    Hyperparams, ManifestBuilder, PreprocessingStep, ReportManifest, Role, Significance, Uncertainty, Warning,
};
use crate::mi::{cmi_ksg, ksg_weighted, mi_ksg, plugin_cmi, MiEstimate, MiEstimator, SymbolBlock};
use crate::rng::RngSeed;
use crate::temporal::{
    active_information_storage, ais_weighted, predictive_information, predictive_information_weighted,
    transfer_entropy_tested, EmbeddingSpec, TeEstimator, TeResampler, TeResult,
};

const SURROGATE_TAG: u64 = 1;
const BOOTSTRAP_TAG: u64 = 2;

/// A result and the manifest that must travel with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reported<T> {
    pub result: T,
    pub manifest: ReportManifest,
}

/// Shared settings for intervals and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub seed: RngSeed,
    pub bootstrap: BootstrapConfig,
    pub surrogates: SurrogateConfig,
    pub role: Role,
}

impl RunOptions {
    pub fn new(seed: RngSeed) -> Self {
        RunOptions {
            seed,
            bootstrap: BootstrapConfig::default(),
            surrogates: SurrogateConfig::default(),
            role: Role::Measurement,
        }
    }

    fn surrogate_seed(&self) -> RngSeed {
        self.seed.derive(SURROGATE_TAG)
    }

    fn bootstrap_seed(&self) -> RngSeed {
        self.seed.derive(BOOTSTRAP_TAG)
    }
}

fn knn_steps(columns: Vec<String>) -> [PreprocessingStep; 2] {
    [
        PreprocessingStep::Standardize { columns },
        PreprocessingStep::Jitter { relative: JITTER_RELATIVE, seed: JITTER_SEED },
    ]
}

fn stationarity_step(name: &str, series: &[f64]) -> (PreprocessingStep, Option<Warning>) {
    let (status, warning) = match check_stationarity(series) {
        Ok(Stationarity::Pass { .. }) => ("pass".to_string(), None),
        Ok(Stationarity::Warn { reasons, .. }) => {
            let msg = format!("{name}: {}", reasons.join("; "));
            (format!("warn: {}", reasons.join("; ")), Some(Warning::new("nonstationary", msg)))
        }
        Err(e) => (format!("not checked: {e}"), None),
    };
    (PreprocessingStep::StationarityCheck { column: name.to_string(), status }, warning)
}

fn exact(reason: &str) -> Uncertainty {
    Uncertainty::Exact { reason: reason.into() }
}

fn not_applicable(reason: &str) -> Significance {
    Significance::NotApplicable { reason: reason.into() }
}

fn finish(
    opts_role: Role,
    id: &str,
    hp: Hyperparams,
    uncertainty: Uncertainty,
    significance: Significance,
    steps: Vec<PreprocessingStep>,
    warnings: Vec<Warning>,
) -> Result<ReportManifest> {
    ManifestBuilder::new()
        .role(opts_role)
        .estimator(id, hp)
        .uncertainty(uncertainty)
        .significance(significance)
        .preprocessing(steps)
        .warnings(warnings)
        .build()
}

/// Plugin or Miller-Madow entropy of a symbol series, with an iid bootstrap
/// interval.
pub fn entropy_discrete(
    series: &DiscreteSeries,
    estimator: EntropyEstimator,
    opts: &RunOptions,
    steps: Vec<PreprocessingStep>,
) -> Result<Reported<EntropyEstimate>> {
    let mut est = match estimator {
        EntropyEstimator::Plugin => entropy_plugin(series)?,
        EntropyEstimator::MillerMadow => entropy_miller_madow(series)?,
        other => {
            return Err(Error::InvalidConfig(format!("{} needs continuous samples", other.id())));
        }
    };
    let symbols = series.symbols();
    let k = series.alphabet_size();
    let ci = bootstrap_ci(
        est.value,
        series.len(),
        |w| {
            let mut counts = vec![0.0; k];
            for (&s, wi) in symbols.iter().zip(w) {
                counts[s] += wi;
            }
            Ok(match estimator {
                EntropyEstimator::Plugin => plugin_from_counts(&counts),
                _ => miller_madow_from_counts(&counts),
            })
        },
        &opts.bootstrap,
        opts.bootstrap_seed(),
    )?;
    est.ci = Some(ci.clone());
    let manifest = finish(
        opts.role,
        &format!("entropy_{}", estimator.id()),
        est.hyperparams.clone(),
        Uncertainty::Interval(ci),
        not_applicable("entropy has no null hypothesis to test"),
        steps,
        Vec::new(),
    )?;
    Ok(Reported { result: est, manifest })
}

/// Vasicek (one column) or kNN entropy of real samples, with an iid
/// bootstrap interval.
pub fn entropy_continuous(
    samples: &SampleMatrix,
    estimator: EntropyEstimator,
    k: usize,
    m: Option<usize>,
    opts: &RunOptions,
    steps: Vec<PreprocessingStep>,
) -> Result<Reported<EntropyEstimate>> {
    let (mut est, ci) = match estimator {
        EntropyEstimator::Vasicek => {
            let est = entropy_vasicek(samples, m)?;
            let m_used = est.hyperparams["m"].as_u64().map(|v| v as usize);
            let ci = bootstrap_ci(
                est.value,
                samples.n_rows(),
                |w| Ok(entropy_vasicek(&samples.select_rows(&expand_counts(w)), m_used)?.value),
                &opts.bootstrap,
                opts.bootstrap_seed(),
            )?;
            (est, ci)
        }
        EntropyEstimator::KnnKl => {
            let est = entropy_knn(samples, k)?;
            let ci = bootstrap_ci(
                est.value,
                samples.n_rows(),
                |w| knn_entropy_weighted(samples, k, w),
                &opts.bootstrap,
                opts.bootstrap_seed(),
            )?;
            (est, ci)
        }
        other => {
            return Err(Error::InvalidConfig(format!("{} needs discrete symbols", other.id())));
        }
    };
    est.ci = Some(ci.clone());
    let mut warnings = Vec::new();
    if samples.n_cols() >= crate::mi::KSG_MAX_DIM {
        warnings
            .push(Warning::new("high_dimension", format!("d = {}: kNN bias grows with dimension", samples.n_cols())));
    }
    let manifest = finish(
        opts.role,
        &format!("entropy_{}", estimator.id()),
        est.hyperparams.clone(),
        Uncertainty::Interval(ci),
        not_applicable("entropy has no null hypothesis to test"),
        steps,
        warnings,
    )?;
    Ok(Reported { result: est, manifest })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DivergenceKind {
    Kl { direction: Direction, smoothing: Smoothing },
    CrossEntropy { smoothing: Smoothing },
    JensenShannon,
}

impl DivergenceKind {
    pub fn id(&self) -> &'static str {
        match self {
            DivergenceKind::Kl { .. } => "kl_plugin",
            DivergenceKind::CrossEntropy { .. } => "cross_entropy_plugin",
            DivergenceKind::JensenShannon => "js_divergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceValue {
    /// Nats.
    pub value: f64,
    pub kind: DivergenceKind,
}

/// Divergence between two given distributions. Exact: no sampling enters.
pub fn divergence(
    p: &ProbTable,
    q: &ProbTable,
    kind: DivergenceKind,
    opts: &RunOptions,
) -> Result<Reported<DivergenceValue>> {
    let value = match kind {
        DivergenceKind::Kl { direction, smoothing } => kl_discrete(p, q, smoothing, direction)?.value,
        DivergenceKind::CrossEntropy { smoothing } => cross_entropy(p, q, smoothing)?,
        DivergenceKind::JensenShannon => jensen_shannon(p, q)?,
    };
    let mut hp = Hyperparams::new();
    hp.insert("alphabet_size".into(), json!(p.len()));
    hp.insert("kind".into(), serde_json::to_value(kind)?);
    let manifest = finish(
        opts.role,
        kind.id(),
        hp,
        exact("computed from fully specified distributions"),
        not_applicable("no sample to resample; both distributions are given"),
        Vec::new(),
        Vec::new(),
    )?;
    Ok(Reported { result: DivergenceValue { value, kind }, manifest })
}

fn symbol_block(m: &SampleMatrix) -> Result<SymbolBlock> {
    for j in 0..m.n_cols() {
        DiscreteSeries::from_values(&m.column(j))?;
    }
    Ok((0..m.n_rows()).map(|i| m.row(i).iter().map(|&v| v as usize).collect()).collect())
}

fn names(m: &SampleMatrix) -> Vec<String> {
    (0..m.n_cols()).map(|j| m.column_name(j)).collect()
}

/// MI (when `z` is absent) or CMI with a surrogate test on `x` and a bootstrap
/// interval. `time_ordered` switches to time-shift surrogates and a
/// moving-block bootstrap.
#[allow(clippy::too_many_arguments)]
pub fn dependence(
    x: &SampleMatrix,
    y: &SampleMatrix,
    z: Option<&SampleMatrix>,
    estimator: MiEstimator,
    k: usize,
    time_ordered: bool,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<MiEstimate>> {
    let n = x.n_rows();
    if y.n_rows() != n || z.is_some_and(|z| z.n_rows() != n) {
        return Err(Error::InvalidInput("x, y and z must have the same number of rows".into()));
    }
    let surrogates = SurrogateConfig {
        method: if time_ordered { SurrogateMethod::TimeShift } else { SurrogateMethod::Permutation },
        ..opts.surrogates
    };
    let boot = opts.bootstrap.for_time_series(time_ordered);
    let mut hp = Hyperparams::new();
    hp.insert("n".into(), json!(n));
    hp.insert("dx".into(), json!(x.n_cols()));
    hp.insert("dy".into(), json!(y.n_cols()));
    if let Some(z) = z {
        hp.insert("dz".into(), json!(z.n_cols()));
    }
    let (est, sig, ci) = match estimator {
        MiEstimator::Plugin => {
            let (xs, ys) = (symbol_block(x)?, symbol_block(y)?);
            let zs = match z {
                Some(z) => symbol_block(z)?,
                None => vec![Vec::new(); n],
            };
            let value = plugin_cmi(&xs, &ys, &zs, None)?;
            let sig = surrogate_test(
                value,
                n,
                |map| {
                    let shuffled: SymbolBlock = map.iter().map(|&i| xs[i].clone()).collect();
                    plugin_cmi(&shuffled, &ys, &zs, None)
                },
                &surrogates,
                opts.surrogate_seed(),
            )?;
            let ci = bootstrap_ci(value, n, |w| plugin_cmi(&xs, &ys, &zs, Some(w)), &boot, opts.bootstrap_seed())?;
            let est = MiEstimate { value, estimator, k: None, role: opts.role, warnings: Vec::new() };
            (est, sig, ci)
        }
        MiEstimator::Ksg => {
            hp.insert("k".into(), json!(k));
            hp.insert("metric".into(), json!("max-norm"));
            let (xp, yp) = (prepare_for_knn(x), prepare_for_knn(y));
            let zp = z.map(prepare_for_knn);
            let mut est = match &zp {
                Some(zp) => cmi_ksg(&xp, &yp, zp, k)?,
                None => mi_ksg(&xp, &yp, k)?,
            };
            est.role = opts.role;
            let sig = surrogate_test(
                est.value,
                n,
                |map| ksg_weighted(&xp.select_rows(map), &yp, zp.as_ref(), k, None),
                &surrogates,
                opts.surrogate_seed(),
            )?;
            let ci = bootstrap_ci(
                est.value,
                n,
                |w| ksg_weighted(&xp, &yp, zp.as_ref(), k, Some(w)),
                &boot,
                opts.bootstrap_seed(),
            )?;
            let mut cols = names(x);
            cols.extend(names(y));
            if let Some(z) = z {
                cols.extend(names(z));
            }
            steps.extend(knn_steps(cols));
            (est, sig, ci)
        }
    };
    let id = format!("{}_{}", if z.is_some() { "cmi" } else { "mi" }, estimator.id());
    let warnings = est.warnings.clone();
    let manifest = finish(opts.role, &id, hp, Uncertainty::Interval(ci), Significance::Test(sig), steps, warnings)?;
    Ok(Reported { result: est, manifest })
}

fn embedding_hp(hp: &mut Hyperparams, spec: &EmbeddingSpec, estimator: TeEstimator) {
    hp.insert("target_lags".into(), json!(spec.target_lags));
    hp.insert("source_lags".into(), json!(spec.source_lags));
    hp.insert("delay".into(), json!(spec.delay));
    if let Some(set) = &spec.selected_lag_set {
        hp.insert("selected_lag_set".into(), json!(set));
    }
    if let TeEstimator::Ksg { k } = estimator {
        hp.insert("k".into(), json!(k));
        hp.insert("metric".into(), json!("max-norm"));
    }
}

/// Named series for the temporal measures.
#[derive(Debug, Clone, Copy)]
pub struct Named<'a> {
    pub name: &'a str,
    pub values: &'a [f64],
}

/// Transfer entropy with time-shift surrogates and a moving-block bootstrap
/// over embedded rows.
#[allow(clippy::too_many_arguments)]
pub fn transfer_entropy(
    source: Named,
    target: Named,
    conditioning: &[Named],
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
    justification: &str,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<TeResult>> {
    let cond: Vec<&[f64]> = conditioning.iter().map(|c| c.values).collect();
    let surrogates = SurrogateConfig { method: SurrogateMethod::TimeShift, ..opts.surrogates };
    let te = transfer_entropy_tested(
        source.values,
        target.values,
        &cond,
        spec,
        estimator,
        &surrogates,
        opts.surrogate_seed(),
    )?;
    let resampler = TeResampler::new(source.values, target.values, &cond, spec, estimator)?;
    let ci = bootstrap_ci(
        te.value,
        resampler.n_eff(),
        |w| resampler.eval(w),
        &opts.bootstrap.for_time_series(true),
        opts.bootstrap_seed(),
    )?;
    let mut hp = Hyperparams::new();
    embedding_hp(&mut hp, spec, estimator);
    hp.insert("n_eff".into(), json!(te.n_eff));
    hp.insert("source".into(), json!(source.name));
    hp.insert("target".into(), json!(target.name));
    let mut warnings = te.warnings.clone();
    steps.push(PreprocessingStep::Embedding {
        target_lags: spec.target_lag_list(),
        source_lags: spec.source_lag_list(),
        justification: justification.into(),
    });
    if !conditioning.is_empty() {
        steps.push(PreprocessingStep::Conditioning {
            on: conditioning.iter().map(|c| c.name.to_string()).collect(),
            reason: "pasts of the remaining streams, against indirect paths and common drivers".into(),
        });
    }
    for s in [&source, &target] {
        let (step, w) = stationarity_step(s.name, s.values);
        steps.push(step);
        warnings.extend(w);
    }
    if let TeEstimator::Ksg { .. } = estimator {
        let mut cols = vec![source.name.to_string(), target.name.to_string()];
        cols.extend(conditioning.iter().map(|c| c.name.to_string()));
        steps.extend(knn_steps(cols));
    }
    let sig = te.significance.clone().expect("tested TE carries its significance");
    let manifest = finish(
        opts.role,
        &format!("te_{}", estimator.id()),
        hp,
        Uncertainty::Interval(ci),
        Significance::Test(sig),
        steps,
        warnings,
    )?;
    Ok(Reported { result: te, manifest })
}

fn self_steps(series: Named, estimator: TeEstimator, steps: &mut Vec<PreprocessingStep>, warnings: &mut Vec<Warning>) {
    let (step, w) = stationarity_step(series.name, series.values);
    steps.push(step);
    warnings.extend(w);
    if let TeEstimator::Ksg { .. } = estimator {
        steps.extend(knn_steps(vec![series.name.to_string()]));
    }
}

/// Active information storage, tested against shuffles of the series.
pub fn active_information(
    series: Named,
    spec: &EmbeddingSpec,
    estimator: TeEstimator,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<TeResult>> {
    let ais = active_information_storage(series.values, spec, estimator)?;
    let surrogates = SurrogateConfig { method: SurrogateMethod::Permutation, ..opts.surrogates };
    let x = series.values;
    let sig = surrogate_test(
        ais.value,
        x.len(),
        |map| {
            let shuffled: Vec<f64> = map.iter().map(|&i| x[i]).collect();
            Ok(active_information_storage(&shuffled, spec, estimator)?.value)
        },
        &surrogates,
        opts.surrogate_seed(),
    )?;
    let ci = bootstrap_ci(
        ais.value,
        ais.n_eff,
        |w| ais_weighted(x, spec, estimator, w),
        &opts.bootstrap.for_time_series(true),
        opts.bootstrap_seed(),
    )?;
    let mut hp = Hyperparams::new();
    embedding_hp(&mut hp, spec, estimator);
    hp.insert("n_eff".into(), json!(ais.n_eff));
    let mut warnings = ais.warnings.clone();
    steps.push(PreprocessingStep::Embedding {
        target_lags: spec.target_lag_list(),
        source_lags: Vec::new(),
        justification: "history length as requested".into(),
    });
    self_steps(series, estimator, &mut steps, &mut warnings);
    let mut result = ais;
    result.significance = Some(sig.clone());
    let manifest = finish(
        opts.role,
        &format!("ais_{}", estimator.id()),
        hp,
        Uncertainty::Interval(ci),
        Significance::Test(sig),
        steps,
        warnings,
    )?;
    Ok(Reported { result, manifest })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveInformation {
    /// Nats.
    pub value: f64,
    pub window: usize,
    pub estimator: TeEstimator,
    pub rows: usize,
}

/// Past-future mutual information over windows of length `window`.
pub fn predictive(
    series: Named,
    window: usize,
    estimator: TeEstimator,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<PredictiveInformation>> {
    let x = series.values;
    let value = predictive_information(x, window, estimator)?;
    let rows = x.len() + 1 - 2 * window;
    let surrogates = SurrogateConfig { method: SurrogateMethod::Permutation, ..opts.surrogates };
    let sig = surrogate_test(
        value,
        x.len(),
        |map| {
            let shuffled: Vec<f64> = map.iter().map(|&i| x[i]).collect();
            predictive_information(&shuffled, window, estimator)
        },
        &surrogates,
        opts.surrogate_seed(),
    )?;
    let ci = bootstrap_ci(
        value,
        rows,
        |w| predictive_information_weighted(x, window, estimator, Some(w)),
        &opts.bootstrap.for_time_series(true),
        opts.bootstrap_seed(),
    )?;
    let mut hp = Hyperparams::new();
    hp.insert("window".into(), json!(window));
    if let TeEstimator::Ksg { k } = estimator {
        hp.insert("k".into(), json!(k));
    }
    let mut warnings = Vec::new();
    if 2 * window >= crate::mi::KSG_MAX_DIM {
        warnings.push(Warning::new("high_dimension", format!("joint dimension {} for window {window}", 2 * window)));
    }
    self_steps(series, estimator, &mut steps, &mut warnings);
    let manifest = finish(
        opts.role,
        &format!("predinfo_{}", estimator.id()),
        hp,
        Uncertainty::Interval(ci),
        Significance::Test(sig),
        steps,
        warnings,
    )?;
    Ok(Reported { result: PredictiveInformation { value, window, estimator, rows }, manifest })
}

const EXACT_TPM: &str = "computed exactly from the full transition probability matrix";
const DETERMINISTIC: &str = "deterministic function of the TPM; there is no sampling null";

fn whole_system(tpm: &Tpm) -> PreprocessingStep {
    PreprocessingStep::SystemBoundary { v_nodes: (0..tpm.n()).collect(), e_nodes: Vec::new(), m: None }
}

fn tpm_hp(tpm: &Tpm) -> Hyperparams {
    let mut hp = Hyperparams::new();
    hp.insert("n".into(), json!(tpm.n()));
    hp.insert("state_encoding".into(), json!("node i = bit i"));
    hp.insert("intervention".into(), json!("uniform"));
    hp.insert("unit".into(), json!("bits"));
    hp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EiValue {
    /// Bits.
    pub value: f64,
    pub n: usize,
}

pub fn effective_info(tpm: &Tpm, opts: &RunOptions, mut steps: Vec<PreprocessingStep>) -> Result<Reported<EiValue>> {
    steps.push(whole_system(tpm));
    let value = effective_information(tpm);
    let manifest = finish(
        opts.role,
        "effective_information",
        tpm_hp(tpm),
        exact(EXACT_TPM),
        not_applicable(DETERMINISTIC),
        steps,
        tpm.size_warning().into_iter().collect(),
    )?;
    Ok(Reported { result: EiValue { value, n: tpm.n() }, manifest })
}

pub fn integrated_information(
    tpm: &Tpm,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<PhiResult>> {
    steps.push(whole_system(tpm));
    let result = phi(tpm)?;
    let mut hp = tpm_hp(tpm);
    hp.insert("variant".into(), json!(PHI_VARIANT));
    hp.insert("normalization".into(), json!("none"));
    hp.insert("tie_break".into(), json!("lexicographically smallest part_a"));
    let manifest = finish(
        opts.role,
        "phi",
        hp,
        exact(EXACT_TPM),
        not_applicable(DETERMINISTIC),
        steps,
        tpm.size_warning().into_iter().collect(),
    )?;
    Ok(Reported { result, manifest })
}

pub fn emergence(
    tpm: &Tpm,
    grain: &CoarseGraining,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<EmergenceResult>> {
    let result = causal_emergence(tpm, grain)?;
    steps.push(whole_system(tpm));
    steps.push(PreprocessingStep::CoarseGraining { groups: grain.groups.clone() });
    let mut hp = tpm_hp(tpm);
    hp.insert("macro_states".into(), json!(grain.groups.len()));
    hp.insert("emergence_margin".into(), json!(1e-9));
    let manifest = finish(
        opts.role,
        "causal_emergence",
        hp,
        exact(EXACT_TPM),
        not_applicable(DETERMINISTIC),
        steps,
        tpm.size_warning().into_iter().collect(),
    )?;
    Ok(Reported { result, manifest })
}

pub fn causal_autonomy(
    tpm: &Tpm,
    split: &SystemSplit,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<CausalAutonomy>> {
    let result = autonomy_causal(tpm, split)?;
    steps.push(split.boundary_step());
    let mut hp = tpm_hp(tpm);
    hp.insert("history".into(), json!(1));
    hp.insert("ratio".into(), json!("value / ei_total, reported separately"));
    let manifest = finish(
        opts.role,
        "autonomy_causal",
        hp,
        exact(EXACT_TPM),
        not_applicable(DETERMINISTIC),
        steps,
        tpm.size_warning().into_iter().collect(),
    )?;
    Ok(Reported { result, manifest })
}

/// Observational autonomy with a block bootstrap over pooled transitions and
/// a null that re-pairs the system's previous state at random.
pub fn observational_autonomy(
    trials: &[Trial],
    boundary: PreprocessingStep,
    m: usize,
    opts: &RunOptions,
    mut steps: Vec<PreprocessingStep>,
) -> Result<Reported<ObservationalAutonomy>> {
    let data = AutonomyData::from_trials(trials, m)?;
    let value = data.value(None, None)?;
    let surrogates = SurrogateConfig { method: SurrogateMethod::Permutation, ..opts.surrogates };
    let sig = surrogate_test(value, data.len(), |map| data.value(None, Some(map)), &surrogates, opts.surrogate_seed())?;
    let ci = bootstrap_ci(
        value,
        data.len(),
        |w| data.value(Some(w), None),
        &opts.bootstrap.for_time_series(true),
        opts.bootstrap_seed(),
    )?;
    steps.push(boundary);
    let mut hp = Hyperparams::new();
    hp.insert("m".into(), json!(m));
    hp.insert("trials".into(), json!(trials.len()));
    hp.insert("transitions".into(), json!(data.len()));
    hp.insert("unit".into(), json!("bits"));
    let manifest = finish(
        opts.role,
        "autonomy_observational",
        hp,
        Uncertainty::Interval(ci),
        Significance::Test(sig),
        steps,
        Vec::new(),
    )?;
    Ok(Reported { result: ObservationalAutonomy { value, m, transitions: data.len() }, manifest })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub names: Vec<String>,
    pub correction: Correction,
    pub alpha: f64,
    pub conditioning: ScanConditioning,
    pub rejected: Vec<(String, String)>,
    pub pairs: Vec<Reported<PairResult>>,
}

/// Network scan with a bootstrap interval and manifest for every pair.
pub fn scan(streams: &SampleMatrix, cfg: &ScanConfig, opts: &RunOptions) -> Result<ScanReport> {
    let result = network_scan(streams, cfg, opts.surrogate_seed())?;
    let columns: Vec<Vec<f64>> = (0..streams.n_cols()).map(|j| streams.column(j)).collect();
    let names = result.names.clone();
    let n_tests = result.pairs.len();
    let mut pairs = Vec::with_capacity(n_tests);
    for (idx, pair) in result.pairs.into_iter().enumerate() {
        let others: Vec<usize> = match cfg.conditioning {
            ScanConditioning::AllOthers => {
                (0..columns.len()).filter(|&j| j != pair.source && j != pair.target).collect()
            }
            ScanConditioning::Pairwise => Vec::new(),
        };
        let cond: Vec<&[f64]> = others.iter().map(|&j| columns[j].as_slice()).collect();
        let resampler =
            TeResampler::new(&columns[pair.source], &columns[pair.target], &cond, &cfg.embedding, cfg.estimator)?;
        let ci = bootstrap_ci(
            pair.te.value,
            resampler.n_eff(),
            |w| resampler.eval(w),
            &opts.bootstrap.for_time_series(true),
            opts.bootstrap_seed().derive(idx as u64),
        )?;
        let mut hp = Hyperparams::new();
        embedding_hp(&mut hp, &cfg.embedding, cfg.estimator);
        hp.insert("source".into(), json!(names[pair.source]));
        hp.insert("target".into(), json!(names[pair.target]));
        hp.insert("correction".into(), serde_json::to_value(cfg.correction)?);
        hp.insert("tests".into(), json!(n_tests));
        hp.insert("alpha".into(), json!(cfg.alpha));
        let mut steps = vec![PreprocessingStep::Embedding {
            target_lags: cfg.embedding.target_lag_list(),
            source_lags: cfg.embedding.source_lag_list(),
            justification: "one embedding shared by every pair of the scan".into(),
        }];
        if !others.is_empty() {
            steps.push(PreprocessingStep::Conditioning {
                on: others.iter().map(|&j| names[j].clone()).collect(),
                reason: "pasts of the remaining streams, against indirect paths and common drivers".into(),
            });
        }
        if let TeEstimator::Ksg { .. } = cfg.estimator {
            steps.extend(knn_steps(names.clone()));
        }
        let sig = pair.te.significance.clone().expect("scan pairs are tested");
        let manifest = finish(
            opts.role,
            &format!("te_{}", cfg.estimator.id()),
            hp,
            Uncertainty::Interval(ci),
            Significance::Test(sig),
            steps,
            pair.te.warnings.clone(),
        )?;
        pairs.push(Reported { result: pair, manifest });
    }
    Ok(ScanReport {
        rejected: result.rejected.iter().map(|&(s, t)| (names[s].clone(), names[t].clone())).collect(),
        names,
        correction: result.correction,
        alpha: result.alpha,
        conditioning: result.conditioning,
        pairs,
    })
}
