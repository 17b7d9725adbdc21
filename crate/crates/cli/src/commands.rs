use std::path::Path;

use infometer::advisor::{recommend, DataKind, Objective, Query};
use infometer::causal::{load_tpm_json, CoarseGraining, LoadedTpm, SystemSplit, Trial};
use infometer::data::{discretize, load_samples, write_csv, BinRule, DiscreteSeries, ProbTable, SampleMatrix};
use infometer::divergence::{Direction, Smoothing};
use infometer::entropy::EntropyEstimator;
use infometer::error::{Error, Result};
use infometer::inference::{BootstrapConfig, Correction, ScanConditioning, ScanConfig, SurrogateConfig};
use infometer::manifest::PreprocessingStep;
use infometer::mi::MiEstimator;
use infometer::report::{self, DivergenceKind, Named, RunOptions};
use infometer::simulate;
use infometer::temporal::{select_embedding_nonuniform, EmbeddingSpec, SelectionConfig, TeEstimator};
use infometer::RngSeed;
use rand::Rng;
use serde_json::json;

use crate::args::*;
use crate::output::{Entry, Output, Unit};

/// What a command produced: a measurement report, or raw text (advice,
/// simulated data) that carries no estimate.
pub enum Produced {
    Report(Output),
    Text(String),
}

pub fn needs_seed(cmd: &Command) -> bool {
    matches!(
        cmd,
        Command::Entropy(_)
            | Command::Mi(_)
            | Command::Cmi(_)
            | Command::Te(_)
            | Command::Ais(_)
            | Command::Predinfo(_)
            | Command::Autonomy(AutonomyArgs { input: Some(_), .. })
            | Command::Scan(_)
            | Command::Simulate(SimulateArgs {
                system: System::CoupledAr
                    | System::PlantedNetwork
                    | System::Chain
                    | System::GaussianPair
                    | System::UniformSymbols
                    | System::TpmTrials,
                ..
            })
    )
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn list(text: &str) -> Vec<String> {
    text.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn usize_list(text: &str) -> Result<Vec<usize>> {
    list(text).iter().map(|s| s.parse().map_err(|_| invalid(format!("`{s}` is not a node index")))).collect()
}

fn f64_list(text: &str) -> Result<Vec<f64>> {
    list(text).iter().map(|s| s.parse().map_err(|_| invalid(format!("`{s}` is not a number")))).collect()
}

fn embedding(common: &Common) -> Result<(EmbeddingSpec, String)> {
    match &common.embedding {
        None => Ok((EmbeddingSpec::default(), "default l = k = tau = 1".into())),
        Some(text) => {
            let parts = usize_list(text)?;
            let [l, k, tau] = parts[..] else {
                return Err(invalid(format!("--embedding expects `l,k,tau`, got `{text}`")));
            };
            Ok((EmbeddingSpec::new(l, k, tau)?, format!("user-specified l = {l}, k = {k}, tau = {tau}")))
        }
    }
}

fn options(common: &Common, seed: Option<u64>) -> Result<RunOptions> {
    if !(0.0..1.0).contains(&common.alpha) || common.alpha == 0.0 {
        return Err(invalid(format!("alpha {} must lie in (0, 1)", common.alpha)));
    }
    let mut opts = RunOptions::new(RngSeed::new(seed.unwrap_or(0)));
    opts.bootstrap = BootstrapConfig { replicates: common.bootstrap, level: common.level, ..opts.bootstrap };
    opts.surrogates = SurrogateConfig { surrogates: common.surrogates, alpha: common.alpha, ..opts.surrogates };
    Ok(opts)
}

fn te_estimator(kind: DependenceKind, k: usize) -> TeEstimator {
    match kind {
        DependenceKind::Ksg => TeEstimator::Ksg { k },
        DependenceKind::Plugin => TeEstimator::Plugin,
    }
}

struct Table {
    data: SampleMatrix,
    steps: Vec<PreprocessingStep>,
}

impl Table {
    fn load(path: &Path) -> Result<Self> {
        Ok(Table { data: load_samples(path)?, steps: Vec::new() })
    }

    /// Picks named columns and records the selection.
    fn columns(&mut self, names: &[String]) -> Result<SampleMatrix> {
        if names.is_empty() {
            return Err(invalid("no columns named"));
        }
        let idx = names.iter().map(|n| self.data.column_index(n)).collect::<Result<Vec<_>>>()?;
        self.steps.push(PreprocessingStep::ColumnSelection { columns: names.to_vec() });
        self.data.select_columns(&idx)?.with_names(names.to_vec())
    }

    /// Replaces real columns by bin indices when `--bins` is set.
    fn binned(&mut self, m: SampleMatrix, binning: &Binning) -> Result<SampleMatrix> {
        let Some(b) = binning.bins else { return Ok(m) };
        let (rule, id) = match binning.bin_rule {
            BinRuleArg::EqualWidth => (BinRule::EqualWidth(b), "equal_width"),
            BinRuleArg::EqualFrequency => (BinRule::EqualFrequency(b), "equal_frequency"),
        };
        let mut cols = Vec::with_capacity(m.n_cols());
        for j in 0..m.n_cols() {
            let d = discretize(&m.column(j), rule)?;
            self.steps.push(PreprocessingStep::Discretize { column: m.column_name(j), rule: id.into(), bins: b });
            cols.push(d.series.symbols().iter().map(|&s| s as f64).collect::<Vec<f64>>());
        }
        let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        let names = (0..m.n_cols()).map(|j| m.column_name(j)).collect();
        Ok(SampleMatrix::from_columns(&refs)?.with_names(names)?.time_ordered(m.is_time_ordered()))
    }

    fn series(&mut self, name: &str, binning: &Binning) -> Result<Vec<f64>> {
        let m = self.columns(&[name.to_string()])?;
        Ok(self.binned(m, binning)?.column(0))
    }
}

pub fn run(cmd: Command, common: &Common, seed: Option<u64>) -> Result<Produced> {
    let opts = options(common, seed)?;
    let out = match cmd {
        Command::Entropy(a) => entropy(a, common, &opts, seed)?,
        Command::Kl(a) => kl(a, &opts)?,
        Command::Mi(a) => dependence(a, false, common, &opts, seed)?,
        Command::Cmi(a) => dependence(a, true, common, &opts, seed)?,
        Command::Te(a) => te(a, common, &opts, seed)?,
        Command::Ais(a) => ais(a, common, &opts, seed)?,
        Command::Predinfo(a) => predinfo(a, common, &opts, seed)?,
        Command::Ei(a) => {
            let loaded = read_tpm(&a.tpm)?;
            let r = report::effective_info(&loaded.tpm, &opts, loaded.conversion.into_iter().collect())?;
            let mut out = Output::new("ei", None);
            out.push(Entry::new("effective_information", Unit::Bits, r.result.value, r)?);
            out
        }
        Command::Phi(a) => {
            let loaded = read_tpm(&a.tpm)?;
            let r = report::integrated_information(&loaded.tpm, &opts, loaded.conversion.into_iter().collect())?;
            let mut out = Output::new("phi", None);
            out.push(Entry::new("phi", Unit::Bits, r.result.value, r)?);
            out
        }
        Command::Emergence(a) => emergence(a, &opts)?,
        Command::Autonomy(a) => autonomy(a, &opts, seed)?,
        Command::Scan(a) => scan(a, common, &opts, seed)?,
        Command::Advise(a) => return advise(a, common.format).map(Produced::Text),
        Command::Simulate(a) => return simulate(a, seed.unwrap_or(0)).map(Produced::Text),
    };
    Ok(Produced::Report(out))
}

fn read_tpm(path: &Path) -> Result<LoadedTpm> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_tpm_json(&text)
}

fn entropy(a: EntropyArgs, common: &Common, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    let mut table = Table::load(&a.input)?;
    let cols = list(&a.column);
    let m = table.columns(&cols)?;
    let r = match a.estimator {
        EntropyKind::Plugin | EntropyKind::MillerMadow => {
            if m.n_cols() != 1 {
                return Err(invalid("discrete entropy takes exactly one column"));
            }
            let m = table.binned(m, &a.binning)?;
            let series = DiscreteSeries::from_values(&m.column(0))?;
            let est = if a.estimator == EntropyKind::Plugin {
                EntropyEstimator::Plugin
            } else {
                EntropyEstimator::MillerMadow
            };
            report::entropy_discrete(&series, est, opts, table.steps)?
        }
        EntropyKind::Vasicek => {
            report::entropy_continuous(&m, EntropyEstimator::Vasicek, common.k, a.m, opts, table.steps)?
        }
        EntropyKind::Knn => report::entropy_continuous(&m, EntropyEstimator::KnnKl, common.k, a.m, opts, table.steps)?,
    };
    let mut out = Output::new("entropy", seed);
    out.push(Entry::new(format!("H({})", cols.join(",")), Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn kl(a: KlArgs, opts: &RunOptions) -> Result<Output> {
    let p = ProbTable::from_counts(&f64_list(&a.p)?)?;
    let q = ProbTable::from_counts(&f64_list(&a.q)?)?;
    let smoothing = match (a.additive, a.clip_floor) {
        (Some(eps), _) => Smoothing::Additive(eps),
        (_, Some(floor)) => Smoothing::ClipFloor(floor),
        _ => Smoothing::None,
    };
    let direction = match a.direction {
        DirectionArg::Forward => Direction::Forward,
        DirectionArg::Reverse => Direction::Reverse,
    };
    let (kind, label) = match a.measure {
        DivergenceArg::Kl => (
            DivergenceKind::Kl { direction, smoothing },
            if direction == Direction::Forward { "KL(p||q)" } else { "KL(q||p)" },
        ),
        DivergenceArg::CrossEntropy => (DivergenceKind::CrossEntropy { smoothing }, "CE(p,q)"),
        DivergenceArg::Js => (DivergenceKind::JensenShannon, "JS(p,q)"),
    };
    let r = report::divergence(&p, &q, kind, opts)?;
    let mut out = Output::new("kl", None);
    out.push(Entry::new(label, Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn dependence(
    a: DependenceArgs,
    conditional: bool,
    common: &Common,
    opts: &RunOptions,
    seed: Option<u64>,
) -> Result<Output> {
    if conditional != a.z.is_some() {
        return Err(invalid(if conditional { "cmi needs --z" } else { "mi takes no --z; use cmi" }));
    }
    let mut table = Table::load(&a.input)?;
    let (xn, yn) = (list(&a.x), list(&a.y));
    let zn = a.z.as_deref().map(list);
    let x = table.columns(&xn)?;
    let y = table.columns(&yn)?;
    let z = zn.as_ref().map(|z| table.columns(z)).transpose()?;
    let estimator = match a.estimator {
        DependenceKind::Ksg => MiEstimator::Ksg,
        DependenceKind::Plugin => MiEstimator::Plugin,
    };
    let (x, y, z) = if estimator == MiEstimator::Plugin {
        let z = z.map(|z| table.binned(z, &a.binning)).transpose()?;
        (table.binned(x, &a.binning)?, table.binned(y, &a.binning)?, z)
    } else {
        (x, y, z)
    };
    let r = report::dependence(&x, &y, z.as_ref(), estimator, common.k, a.time_ordered, opts, table.steps)?;
    let label = match &zn {
        Some(z) => format!("I({};{}|{})", xn.join(","), yn.join(","), z.join(",")),
        None => format!("I({};{})", xn.join(","), yn.join(",")),
    };
    let mut out = Output::new(if conditional { "cmi" } else { "mi" }, seed);
    out.push(Entry::new(label, Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn te(a: TeArgs, common: &Common, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    let mut table = Table::load(&a.input)?;
    let source = table.series(&a.source, &a.binning)?;
    let target = table.series(&a.target, &a.binning)?;
    let cond_names = a.condition.as_deref().map(list).unwrap_or_default();
    let cond = cond_names.iter().map(|n| table.series(n, &a.binning)).collect::<Result<Vec<_>>>()?;
    let estimator = te_estimator(a.estimator, common.k);
    let (mut spec, mut justification) = embedding(common)?;
    let mut out = Output::new("te", seed);
    if let Some(max_lag) = a.select_lags {
        let cfg = SelectionConfig {
            max_lag,
            target_lags: spec.target_lags,
            estimator,
            surrogates: common.surrogates,
            alpha: common.alpha,
        };
        let sel = select_embedding_nonuniform(&target, &[&source], &cfg, opts.seed.derive(3))?;
        match &sel.embedding {
            Some(e) => {
                spec = e.clone();
                justification = format!("greedy lag selection up to {max_lag}: source lags {:?}", e.source_lag_list());
            }
            None => justification = format!("greedy lag selection up to {max_lag} accepted no lag; {justification}"),
        }
        out.summary = Some(json!({ "lag_selection": sel }));
    }
    let conditioning: Vec<Named> = cond_names.iter().zip(&cond).map(|(name, values)| Named { name, values }).collect();
    let r = report::transfer_entropy(
        Named { name: &a.source, values: &source },
        Named { name: &a.target, values: &target },
        &conditioning,
        &spec,
        estimator,
        &justification,
        opts,
        table.steps,
    )?;
    let label = if cond_names.is_empty() {
        format!("TE({}->{})", a.source, a.target)
    } else {
        format!("TE({}->{}|{})", a.source, a.target, cond_names.join(","))
    };
    out.push(Entry::new(label, Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn ais(a: SeriesArgs, common: &Common, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    let mut table = Table::load(&a.input)?;
    let x = table.series(&a.column, &a.binning)?;
    let (spec, _) = embedding(common)?;
    let r = report::active_information(
        Named { name: &a.column, values: &x },
        &spec,
        te_estimator(a.estimator, common.k),
        opts,
        table.steps,
    )?;
    let mut out = Output::new("ais", seed);
    out.push(Entry::new(format!("AIS({})", a.column), Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn predinfo(a: PredinfoArgs, common: &Common, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    let s = a.series;
    let mut table = Table::load(&s.input)?;
    let x = table.series(&s.column, &s.binning)?;
    let r = report::predictive(
        Named { name: &s.column, values: &x },
        a.window,
        te_estimator(s.estimator, common.k),
        opts,
        table.steps,
    )?;
    let mut out = Output::new("predinfo", seed);
    out.push(Entry::new(format!("I_pred({}, T={})", s.column, a.window), Unit::Nats, r.result.value, r)?);
    Ok(out)
}

fn parse_groups(text: &str) -> Result<Vec<Vec<usize>>> {
    text.split(';').map(usize_list).collect()
}

fn emergence(a: EmergenceArgs, opts: &RunOptions) -> Result<Output> {
    let loaded = read_tpm(&a.tpm)?;
    let grain = CoarseGraining::new(parse_groups(&a.groups)?, loaded.tpm.n_states())?;
    let r = report::emergence(&loaded.tpm, &grain, opts, loaded.conversion.into_iter().collect())?;
    let gain = r.result.ei_macro - r.result.ei_micro;
    let mut out = Output::new("emergence", None);
    out.push(Entry::new("ei_macro - ei_micro", Unit::Bits, gain, r)?);
    Ok(out)
}

/// Splits rows into trials at every change of the trial column.
fn trial_ranges(ids: Option<Vec<f64>>, n: usize) -> Vec<std::ops::Range<usize>> {
    let Some(ids) = ids else { return std::iter::once(0..n).collect() };
    let mut ranges = Vec::new();
    let mut start = 0;
    for i in 1..=n {
        if i == n || ids[i] != ids[start] {
            ranges.push(start..i);
            start = i;
        }
    }
    ranges
}

fn autonomy(a: AutonomyArgs, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    if a.tpm.is_none() && a.input.is_none() {
        return Err(invalid("autonomy needs --tpm (causal), --input (observational) or both"));
    }
    let mut out = Output::new("autonomy", seed.filter(|_| a.input.is_some()));
    if let Some(path) = &a.tpm {
        let loaded = read_tpm(path)?;
        let n = loaded.tpm.n();
        let v = usize_list(a.v_nodes.as_deref().ok_or_else(|| invalid("--tpm needs --v-nodes"))?)?;
        let e = match &a.e_nodes {
            Some(text) => usize_list(text)?,
            None => (0..n).filter(|i| !v.contains(i)).collect(),
        };
        let split = SystemSplit::new(n, v, e, 1)?;
        let r = report::causal_autonomy(&loaded.tpm, &split, opts, loaded.conversion.into_iter().collect())?;
        out.push(Entry::new("autonomy_causal", Unit::Bits, r.result.value, r)?);
    }
    if let Some(path) = &a.input {
        let mut table = Table::load(path)?;
        let v_names = list(a.v_cols.as_deref().ok_or_else(|| invalid("--input needs --v-cols"))?);
        let e_names = list(a.e_cols.as_deref().ok_or_else(|| invalid("--input needs --e-cols"))?);
        let v = table.columns(&v_names)?;
        let e = table.columns(&e_names)?;
        let ids =
            a.trial_column.as_deref().map(|c| table.columns(&[c.to_string()]).map(|m| m.column(0))).transpose()?;
        let symbols = |m: &SampleMatrix, r: &std::ops::Range<usize>| -> Result<Vec<DiscreteSeries>> {
            (0..m.n_cols()).map(|j| DiscreteSeries::from_values(&m.column(j)[r.clone()])).collect()
        };
        let trials = trial_ranges(ids, table.data.n_rows())
            .iter()
            .map(|r| Ok(Trial { v: symbols(&v, r)?, e: symbols(&e, r)? }))
            .collect::<Result<Vec<_>>>()?;
        let index = |names: &[String]| names.iter().map(|n| table.data.column_index(n)).collect::<Result<Vec<_>>>();
        let boundary =
            PreprocessingStep::SystemBoundary { v_nodes: index(&v_names)?, e_nodes: index(&e_names)?, m: Some(a.m) };
        let r = report::observational_autonomy(&trials, boundary, a.m, opts, table.steps)?;
        out.push(Entry::new("autonomy_observational", Unit::Bits, r.result.value, r)?);
    }
    Ok(out)
}

fn scan(a: ScanArgs, common: &Common, opts: &RunOptions, seed: Option<u64>) -> Result<Output> {
    let mut table = Table::load(&a.input)?;
    let streams = match &a.columns {
        Some(c) => table.columns(&list(c))?,
        None => table.data.clone(),
    };
    let (embedding, _) = embedding(common)?;
    let cfg = ScanConfig {
        embedding,
        estimator: te_estimator(a.estimator, common.k),
        surrogates: common.surrogates,
        alpha: common.alpha,
        correction: match a.correction {
            CorrectionArg::Bonferroni => Correction::Bonferroni,
            CorrectionArg::BhFdr => Correction::BhFdr,
        },
        conditioning: match a.conditioning {
            ConditioningArg::AllOthers => ScanConditioning::AllOthers,
            ConditioningArg::Pairwise => ScanConditioning::Pairwise,
        },
    };
    let report = report::scan(&streams.time_ordered(true), &cfg, opts)?;
    let mut out = Output::new("scan", seed);
    out.summary = Some(json!({
        "streams": report.names,
        "correction": report.correction,
        "alpha": report.alpha,
        "conditioning": report.conditioning,
        "rejected": report.rejected,
    }));
    for pair in report.pairs {
        let label = format!("TE({}->{})", report.names[pair.result.source], report.names[pair.result.target]);
        out.push(Entry::new(label, Unit::Nats, pair.result.te.value, pair)?);
    }
    Ok(out)
}

fn advise(a: AdviseArgs, format: Format) -> Result<String> {
    let objective = match a.objective {
        ObjectiveArg::Uncertainty => Objective::Uncertainty,
        ObjectiveArg::CompareDistributions => Objective::CompareDistributions,
        ObjectiveArg::Dependence => Objective::Dependence,
        ObjectiveArg::DirectedInfluence => Objective::DirectedInfluence,
        ObjectiveArg::TemporalMemory => Objective::TemporalMemory,
        ObjectiveArg::AgentComplexity => Objective::AgentComplexity,
    };
    let kind = match (a.data_kind, a.discrete) {
        (Some(DataKindArg::Discrete), _) | (None, true) => DataKind::Discrete,
        (Some(DataKindArg::Mixed), _) => DataKind::Mixed,
        _ => DataKind::Continuous,
    };
    let d = a.d.or(a.streams).unwrap_or(1);
    let temporal = matches!(objective, Objective::DirectedInfluence | Objective::TemporalMemory);
    let query = Query::new(objective, kind, d, a.n_samples, a.time_ordered || temporal, a.interventional)?;
    let rec = recommend(&query);
    match format {
        Format::Json => {
            Ok(serde_json::to_string_pretty(&json!({ "command": "advise", "query": query, "recommendation": rec }))?
                + "\n")
        }
        Format::CsvSummary => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["measure", "estimator", "caveat"])?;
            w.write_record([&rec.measure, &rec.estimator, &rec.caveat])?;
            let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
        }
    }
}

fn csv_text(m: &SampleMatrix) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(m, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn named(cols: &[(&str, &[f64])]) -> Result<SampleMatrix> {
    let values: Vec<&[f64]> = cols.iter().map(|c| c.1).collect();
    SampleMatrix::from_columns(&values)?.with_names(cols.iter().map(|c| c.0.to_string()).collect())
}

fn tpm_json(tpm: &infometer::causal::Tpm, groups: Option<&CoarseGraining>) -> Result<String> {
    let mut v = json!({ "n": tpm.n(), "tpm": tpm.rows() });
    if let Some(g) = groups {
        v["groups"] = json!(g.groups);
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

fn simulate(a: SimulateArgs, seed: u64) -> Result<String> {
    let seed = RngSeed::new(seed);
    match a.system {
        System::CoupledAr => {
            let (y, x) = simulate::coupled_ar(a.n, a.coupling, a.delay, seed)?;
            csv_text(&named(&[("source", &y), ("target", &x)])?)
        }
        System::PlantedNetwork => csv_text(&simulate::planted_network(a.n, seed)),
        System::Chain => csv_text(&simulate::chain(a.n, seed)),
        System::GaussianPair => {
            let (x, y) = simulate::gaussian_pair(a.n, a.rho, seed)?;
            csv_text(&named(&[("x", &x), ("y", &y)])?)
        }
        System::UniformSymbols => {
            if a.alphabet == 0 {
                return Err(invalid("alphabet must be at least 1"));
            }
            let mut rng = seed.substream(0);
            let x: Vec<f64> = (0..a.n).map(|_| rng.random_range(0..a.alphabet) as f64).collect();
            csv_text(&named(&[("x", &x)])?)
        }
        System::ReactiveTpm => tpm_json(&simulate::reactive_system(a.flip)?, None),
        System::SelfCopyTpm => tpm_json(&simulate::self_copy_system(), None),
        System::DegenerateTpm => {
            let (tpm, grain) = simulate::degenerate_micro();
            tpm_json(&tpm, Some(&grain))
        }
        System::TpmTrials => {
            let path = a.tpm.as_deref().ok_or_else(|| invalid("tpm-trials needs --tpm"))?;
            let tpm = read_tpm(path)?.tpm;
            let paths = simulate::run_tpm(&tpm, a.trials, a.n, seed);
            let mut rows = Vec::with_capacity(a.trials * a.n);
            for (i, path) in paths.iter().enumerate() {
                for &s in path {
                    let mut row = vec![i as f64];
                    row.extend((0..tpm.n()).map(|node| (s >> node & 1) as f64));
                    rows.push(row);
                }
            }
            let mut names = vec!["trial".to_string()];
            names.extend((0..tpm.n()).map(|node| format!("n{node}")));
            csv_text(&SampleMatrix::from_rows(&rows)?.with_names(names)?)
        }
    }
}
