//! Causal-structure measures on small binary systems: effective information,
//! bipartition Phi, causal emergence and autonomy.
//!
//! States are encoded little-endian: node `i` is bit `i` of the state index.
//! Every quantity here is exact given the TPM and is reported in bits.
//! Nothing in this module draws random numbers.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::DiscreteSeries;
use crate::error::{Error, Result};
use crate::manifest::{PreprocessingStep, Warning};
use crate::mi::plugin_cmi;

/// Largest system accepted for exact computation.
pub const MAX_NODES: usize = 12;
/// Above this size a cost warning is attached.
pub const COMFORT_NODES: usize = 8;
/// Rows must sum to one within this tolerance.
pub const ROW_TOLERANCE: f64 = 1e-12;
/// Label attached to every Phi value.
pub const PHI_VARIANT: &str = "ei-bipartition-v1";
/// Cuts whose values differ by less than this are treated as tied.
const TIE_TOLERANCE: f64 = 1e-12;
/// Minimum pooled transitions for observational autonomy.
pub const MIN_AUTONOMY_ROWS: usize = 20;

/// Row-stochastic transition matrix over all `2^n` joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct Tpm {
    n: usize,
    data: Vec<f64>,
}

impl Tpm {
    /// From a row-major `2^n × 2^n` buffer.
    pub fn from_flat(n: usize, data: Vec<f64>) -> Result<Self> {
        check_size(n)?;
        let s = 1usize << n;
        if data.len() != s * s {
            return Err(Error::InvalidInput(format!("TPM for {n} nodes needs {s}x{s} entries, got {}", data.len())));
        }
        for (r, row) in data.chunks_exact(s).enumerate() {
            check_distribution(row, r)?;
        }
        Ok(Tpm { n, data })
    }

    pub fn from_rows(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_size(n)?;
        let s = 1usize << n;
        if rows.len() != s || rows.iter().any(|r| r.len() != s) {
            return Err(Error::InvalidInput(format!("TPM for {n} nodes must be {s}x{s}")));
        }
        Self::from_flat(n, rows.concat())
    }

    /// From a state-by-node matrix: entry `(s, i)` is the probability that
    /// node `i` is on after state `s`. Nodes are taken to be conditionally
    /// independent given the current state.
    pub fn from_state_by_node(n: usize, rows: &[Vec<f64>]) -> Result<Self> {
        check_size(n)?;
        let s = 1usize << n;
        if rows.len() != s || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("state-by-node TPM for {n} nodes must be {s}x{n}")));
        }
        let mut data = vec![0.0; s * s];
        for (from, p_on) in rows.iter().enumerate() {
            if let Some(&bad) = p_on.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidInput(format!("node probability {bad} outside [0, 1] in row {from}")));
            }
            for to in 0..s {
                data[from * s + to] = (0..n).map(|i| if to >> i & 1 == 1 { p_on[i] } else { 1.0 - p_on[i] }).product();
            }
        }
        Self::from_flat(n, data)
    }

    /// Deterministic dynamics given by a next-state function.
    pub fn from_map(n: usize, next: impl Fn(usize) -> usize) -> Result<Self> {
        check_size(n)?;
        let s = 1usize << n;
        let mut data = vec![0.0; s * s];
        for from in 0..s {
            let to = next(from);
            if to >= s {
                return Err(Error::InvalidInput(format!("next state {to} out of range")));
            }
            data[from * s + to] = 1.0;
        }
        Self::from_flat(n, data)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_map(n, |s| s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_states(&self) -> usize {
        1 << self.n
    }

    pub fn row(&self, s: usize) -> &[f64] {
        let k = self.n_states();
        &self.data[s * k..(s + 1) * k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks_exact(self.n_states()).map(<[f64]>::to_vec).collect()
    }

    /// Cost warning for systems beyond the comfortable exact range.
    pub fn size_warning(&self) -> Option<Warning> {
        (self.n > COMFORT_NODES).then(|| {
            Warning::new(
                "large_system",
                format!(
                    "{} nodes: exact computation touches {} cuts of a {}x{} matrix and may be slow",
                    self.n,
                    (1usize << (self.n - 1)) - 1,
                    self.n_states(),
                    self.n_states()
                ),
            )
        })
    }
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("TPM needs at least one node".into()));
    }
    if n > MAX_NODES {
        return Err(Error::SystemTooLarge { n, cap: MAX_NODES });
    }
    Ok(())
}

fn check_distribution(row: &[f64], r: usize) -> Result<()> {
    if let Some(&bad) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidInput(format!("row {r} has invalid entry {bad}")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_TOLERANCE {
        return Err(Error::InvalidInput(format!("row {r} sums to {sum}, not 1")));
    }
    Ok(())
}

#[derive(Deserialize)]
struct TpmJson {
    n: usize,
    tpm: Vec<Vec<f64>>,
}

/// A TPM read from JSON together with any format conversion applied.
#[derive(Debug, Clone)]
pub struct LoadedTpm {
    pub tpm: Tpm,
    pub conversion: Option<PreprocessingStep>,
}

/// Parse `{"n": int, "tpm": [[...]]}`. Rows of width `2^n` are read as
/// state-by-state; rows of width `n` as state-by-node and converted.
pub fn load_tpm_json(text: &str) -> Result<LoadedTpm> {
    let raw: TpmJson = serde_json::from_str(text)?;
    check_size(raw.n)?;
    let width = raw.tpm.first().map_or(0, Vec::len);
    if width == 1usize << raw.n {
        Ok(LoadedTpm { tpm: Tpm::from_rows(raw.n, &raw.tpm)?, conversion: None })
    } else if width == raw.n {
        Ok(LoadedTpm {
            tpm: Tpm::from_state_by_node(raw.n, &raw.tpm)?,
            conversion: Some(PreprocessingStep::TpmConversion {
                from: "state_by_node".into(),
                assumption: "nodes conditionally independent given the current state".into(),
            }),
        })
    } else {
        Err(Error::InvalidInput(format!(
            "rows of width {width} match neither 2^n = {} nor n = {}",
            1usize << raw.n,
            raw.n
        )))
    }
}

/// KL divergence in bits; terms with `p = 0` vanish.
fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(pi, _)| **pi > 0.0).map(|(pi, qi)| pi * (pi / qi).log2()).sum::<f64>().max(0.0)
}

/// EI of a row-stochastic matrix with `k` states stored row-major.
fn ei_bits(rows: &[f64], k: usize) -> f64 {
    let mut avg = vec![0.0; k];
    for row in rows.chunks_exact(k) {
        for (a, p) in avg.iter_mut().zip(row) {
            *a += p;
        }
    }
    avg.iter_mut().for_each(|a| *a /= k as f64);
    rows.chunks_exact(k).map(|row| kl_bits(row, &avg)).sum::<f64>() / k as f64
}

/// Effective information: mean KL from each state's transition row to the
/// row obtained under a uniform intervention on the current state.
pub fn effective_information(tpm: &Tpm) -> f64 {
    ei_bits(&tpm.data, tpm.n_states())
}

/// A cut of the node set into two nonempty parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bipartition {
    pub part_a: Vec<usize>,
    pub part_b: Vec<usize>,
}

impl Bipartition {
    pub fn new(n: usize, part_a: &[usize]) -> Result<Self> {
        let mut mask = 0usize;
        for &i in part_a {
            if i >= n {
                return Err(Error::InvalidInput(format!("node {i} outside a {n}-node system")));
            }
            if mask >> i & 1 == 1 {
                return Err(Error::InvalidInput(format!("node {i} listed twice")));
            }
            mask |= 1 << i;
        }
        if mask == 0 || mask == (1 << n) - 1 {
            return Err(Error::InvalidInput("both parts of a bipartition must be nonempty".into()));
        }
        Ok(Self::from_mask(n, mask))
    }

    fn from_mask(n: usize, mask: usize) -> Self {
        let (part_a, part_b) = (0..n).partition(|i| mask >> i & 1 == 1);
        Bipartition { part_a, part_b }
    }

    fn mask(&self) -> usize {
        self.part_a.iter().fold(0, |m, i| m | 1 << i)
    }
}

/// Gathers the bits of `s` at `nodes` into a compact index.
fn extract(s: usize, nodes: &[usize]) -> usize {
    nodes.iter().enumerate().fold(0, |acc, (j, &i)| acc | (s >> i & 1) << j)
}

/// Mechanism of `nodes` alone: `p(next part | current part)` with every
/// other current input averaged uniformly. Row-major, `2^k × 2^k`.
fn part_mechanism(tpm: &Tpm, nodes: &[usize]) -> Vec<f64> {
    let s = tpm.n_states();
    let k = 1usize << nodes.len();
    let idx: Vec<usize> = (0..s).map(|t| extract(t, nodes)).collect();
    let mut mech = vec![0.0; k * k];
    for from in 0..s {
        let base = idx[from] * k;
        for (to, &p) in tpm.row(from).iter().enumerate() {
            if p > 0.0 {
                mech[base + idx[to]] += p;
            }
        }
    }
    let scale = k as f64 / s as f64;
    mech.iter_mut().for_each(|p| *p *= scale);
    mech
}

/// The cut system: each part evolves from its own current state alone, with
/// inputs from across the cut replaced by uniform noise.
pub fn partitioned_tpm(tpm: &Tpm, cut: &Bipartition) -> Result<Tpm> {
    validate_cut(tpm, cut)?;
    let s = tpm.n_states();
    let cutter = Cutter::new(tpm, cut);
    let mut data = vec![0.0; s * s];
    for from in 0..s {
        for to in 0..s {
            data[from * s + to] = cutter.prob(from, to);
        }
    }
    // Products of rows that each sum to one drift by a few ulps; renormalize
    // so the result passes the same validation as any loaded TPM.
    for row in data.chunks_exact_mut(s) {
        let sum: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= sum);
    }
    Tpm::from_flat(tpm.n, data)
}

fn validate_cut(tpm: &Tpm, cut: &Bipartition) -> Result<()> {
    let checked = Bipartition::new(tpm.n, &cut.part_a)?;
    let mut b = cut.part_b.clone();
    b.sort_unstable();
    if checked.part_b != b {
        return Err(Error::InvalidInput("part_b must be the complement of part_a".into()));
    }
    Ok(())
}

struct Cutter {
    ka: usize,
    kb: usize,
    mech_a: Vec<f64>,
    mech_b: Vec<f64>,
    ia: Vec<usize>,
    ib: Vec<usize>,
}

impl Cutter {
    fn new(tpm: &Tpm, cut: &Bipartition) -> Self {
        let s = tpm.n_states();
        Cutter {
            ka: 1 << cut.part_a.len(),
            kb: 1 << cut.part_b.len(),
            mech_a: part_mechanism(tpm, &cut.part_a),
            mech_b: part_mechanism(tpm, &cut.part_b),
            ia: (0..s).map(|t| extract(t, &cut.part_a)).collect(),
            ib: (0..s).map(|t| extract(t, &cut.part_b)).collect(),
        }
    }

    fn prob(&self, from: usize, to: usize) -> f64 {
        self.mech_a[self.ia[from] * self.ka + self.ia[to]] * self.mech_b[self.ib[from] * self.kb + self.ib[to]]
    }
}

/// Mean KL in bits between whole and cut rows.
fn cut_divergence(tpm: &Tpm, cut: &Bipartition) -> f64 {
    let s = tpm.n_states();
    let cutter = Cutter::new(tpm, cut);
    let total: f64 = (0..s)
        .map(|from| {
            tpm.row(from)
                .iter()
                .enumerate()
                .filter(|(_, p)| **p > 0.0)
                .map(|(to, p)| p * (p / cutter.prob(from, to)).log2())
                .sum::<f64>()
                .max(0.0)
        })
        .sum();
    total / s as f64
}

/// Divergence of one specific cut.
pub fn phi_of_cut(tpm: &Tpm, cut: &Bipartition) -> Result<f64> {
    validate_cut(tpm, cut)?;
    Ok(cut_divergence(tpm, cut))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiResult {
    /// Bits.
    pub value: f64,
    pub mip: Bipartition,
    pub variant: String,
    pub cuts_evaluated: usize,
}

/// Minimum over all bipartitions of the whole-versus-cut divergence.
///
/// Node 0 is always placed in `part_a`, so each of the `2^(n-1) - 1` cuts is
/// visited once. Among cuts tied at the minimum the one with the
/// lexicographically smallest `part_a` wins.
pub fn phi(tpm: &Tpm) -> Result<PhiResult> {
    let n = tpm.n;
    if n < 2 {
        return Err(Error::InvalidConfig("Phi needs at least two nodes".into()));
    }
    let full = (1usize << n) - 1;
    let masks: Vec<usize> = (0..1usize << (n - 1)).map(|m| m << 1 | 1).filter(|&m| m != full).collect();
    let values: Vec<(f64, Bipartition)> = masks
        .par_iter()
        .map(|&m| {
            let cut = Bipartition::from_mask(n, m);
            (cut_divergence(tpm, &cut), cut)
        })
        .collect();
    let min = values.iter().map(|(v, _)| *v).fold(f64::INFINITY, f64::min);
    let (value, mip) = values
        .iter()
        .filter(|(v, _)| *v <= min + TIE_TOLERANCE)
        .min_by(|a, b| a.1.part_a.cmp(&b.1.part_a))
        .cloned()
        .expect("at least one cut exists for n >= 2");
    debug_assert_eq!(Bipartition::from_mask(n, mip.mask()), mip);
    Ok(PhiResult { value, mip, variant: PHI_VARIANT.into(), cuts_evaluated: masks.len() })
}

/// Grouping of micro states into macro states.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoarseGraining {
    pub groups: Vec<Vec<usize>>,
}

impl CoarseGraining {
    /// Checks that `groups` partitions `0..n_states` into at least two
    /// nonempty macro states.
    pub fn new(groups: Vec<Vec<usize>>, n_states: usize) -> Result<Self> {
        if groups.len() < 2 {
            return Err(Error::InvalidConfig("a coarse-graining needs at least two macro states".into()));
        }
        let mut seen = vec![false; n_states];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::InvalidConfig("empty macro state".into()));
            }
            for &s in g {
                if s >= n_states || std::mem::replace(&mut seen[s], true) {
                    return Err(Error::InvalidConfig(format!("micro state {s} is out of range or grouped twice")));
                }
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidConfig(format!("micro state {missing} is not assigned to a macro state")));
        }
        Ok(CoarseGraining { groups })
    }

    pub fn singletons(n_states: usize) -> Result<Self> {
        Self::new((0..n_states).map(|s| vec![s]).collect(), n_states)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmergenceResult {
    pub ei_micro: f64,
    pub ei_macro: f64,
    pub emergent: bool,
    pub macro_tpm: Vec<Vec<f64>>,
    pub grain: CoarseGraining,
}

/// Macro transition matrix: member rows averaged (uniform intervention on the
/// macro state), then mass summed into macro columns.
pub fn macro_tpm(tpm: &Tpm, grain: &CoarseGraining) -> Result<Vec<Vec<f64>>> {
    let grain = CoarseGraining::new(grain.groups.clone(), tpm.n_states())?;
    let mut label = vec![0; tpm.n_states()];
    for (g, members) in grain.groups.iter().enumerate() {
        for &s in members {
            label[s] = g;
        }
    }
    let k = grain.groups.len();
    Ok(grain
        .groups
        .iter()
        .map(|members| {
            let mut row = vec![0.0; k];
            for &s in members {
                for (to, p) in tpm.row(s).iter().enumerate() {
                    row[label[to]] += p;
                }
            }
            row.iter_mut().for_each(|p| *p /= members.len() as f64);
            row
        })
        .collect())
}

/// Compares EI at the micro level with EI of the given coarse-graining.
pub fn causal_emergence(tpm: &Tpm, grain: &CoarseGraining) -> Result<EmergenceResult> {
    let rows = macro_tpm(tpm, grain)?;
    let k = rows.len();
    let ei_micro = effective_information(tpm);
    let ei_macro = ei_bits(&rows.concat(), k);
    Ok(EmergenceResult {
        ei_micro,
        ei_macro,
        emergent: ei_macro > ei_micro + 1e-9,
        macro_tpm: rows,
        grain: grain.clone(),
    })
}

/// System/environment boundary for autonomy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemSplit {
    pub v_nodes: Vec<usize>,
    pub e_nodes: Vec<usize>,
    pub m: usize,
}

impl SystemSplit {
    pub fn new(n: usize, v_nodes: Vec<usize>, e_nodes: Vec<usize>, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("history length m must be at least 1".into()));
        }
        if v_nodes.is_empty() || e_nodes.is_empty() {
            return Err(Error::InvalidConfig("system and environment must both be nonempty".into()));
        }
        let mut seen = vec![false; n];
        for &i in v_nodes.iter().chain(&e_nodes) {
            if i >= n || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidConfig(format!("node {i} is out of range or on both sides")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidConfig("split must cover every node".into()));
        }
        Ok(SystemSplit { v_nodes, e_nodes, m })
    }

    pub fn boundary_step(&self) -> PreprocessingStep {
        PreprocessingStep::SystemBoundary {
            v_nodes: self.v_nodes.clone(),
            e_nodes: self.e_nodes.clone(),
            m: Some(self.m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CausalAutonomy {
    /// EI of the V-to-V mechanism with environment inputs at maximum entropy.
    pub value: f64,
    /// EI of the mechanism from the whole current state onto V's next state.
    pub ei_total: f64,
    /// `value / ei_total`; absent when `ei_total` is zero.
    pub ratio: Option<f64>,
}

/// Causal autonomy of `split.v_nodes` (history length one).
pub fn autonomy_causal(tpm: &Tpm, split: &SystemSplit) -> Result<CausalAutonomy> {
    let split = SystemSplit::new(tpm.n, split.v_nodes.clone(), split.e_nodes.clone(), split.m)?;
    let kv = 1usize << split.v_nodes.len();
    let value = ei_bits(&part_mechanism(tpm, &split.v_nodes), kv);

    // Whole state in, V out.
    let s = tpm.n_states();
    let mut onto_v = vec![0.0; s * kv];
    for from in 0..s {
        for (to, p) in tpm.row(from).iter().enumerate() {
            onto_v[from * kv + extract(to, &split.v_nodes)] += p;
        }
    }
    let mut avg = vec![0.0; kv];
    for row in onto_v.chunks_exact(kv) {
        avg.iter_mut().zip(row).for_each(|(a, p)| *a += p / s as f64);
    }
    let ei_total = onto_v.chunks_exact(kv).map(|row| kl_bits(row, &avg)).sum::<f64>() / s as f64;
    let ratio = (ei_total > 0.0).then(|| value / ei_total);
    Ok(CausalAutonomy { value, ei_total, ratio })
}

/// One recorded run: system node series and observed environment series.
#[derive(Debug, Clone)]
pub struct Trial {
    pub v: Vec<DiscreteSeries>,
    pub e: Vec<DiscreteSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationalAutonomy {
    /// Bits.
    pub value: f64,
    pub m: usize,
    pub transitions: usize,
}

/// Pooled `(V_t, V_{t-1}, E_{t-1..t-m})` transitions from a set of trials.
#[derive(Debug, Clone)]
pub struct AutonomyData {
    now: Vec<Vec<usize>>,
    prev: Vec<Vec<usize>>,
    env: Vec<Vec<usize>>,
    m: usize,
}

impl AutonomyData {
    pub fn from_trials(trials: &[Trial], m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("history length m must be at least 1".into()));
        }
        let (mut now, mut prev, mut env) = (Vec::new(), Vec::new(), Vec::new());
        for trial in trials {
            if trial.v.is_empty() {
                return Err(Error::InvalidInput("a trial has no system series".into()));
            }
            let len = trial.v[0].len();
            if trial.v.iter().chain(&trial.e).any(|s| s.len() != len) {
                return Err(Error::InvalidInput("series within a trial must have equal length".into()));
            }
            let at = |series: &[DiscreteSeries], t: usize| series.iter().map(|s| s.symbols()[t]).collect::<Vec<_>>();
            for t in m..len {
                now.push(at(&trial.v, t));
                prev.push(at(&trial.v, t - 1));
                env.push((1..=m).flat_map(|lag| at(&trial.e, t - lag)).collect());
            }
        }
        if now.len() < MIN_AUTONOMY_ROWS {
            return Err(Error::InsufficientData { needed: MIN_AUTONOMY_ROWS, got: now.len() });
        }
        Ok(AutonomyData { now, prev, env, m })
    }

    pub fn len(&self) -> usize {
        self.now.len()
    }

    pub fn is_empty(&self) -> bool {
        self.now.is_empty()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Bits. `weights` are transition multiplicities; `prev_map` re-pairs
    /// each transition with the system state of another one.
    pub fn value(&self, weights: Option<&[f64]>, prev_map: Option<&[usize]>) -> Result<f64> {
        let remapped;
        let prev = match prev_map {
            Some(map) => {
                remapped = map.iter().map(|&i| self.prev[i].clone()).collect::<Vec<_>>();
                &remapped
            }
            None => &self.prev,
        };
        Ok(plugin_cmi(&self.now, prev, &self.env, weights)? / std::f64::consts::LN_2)
    }
}

/// `H(V_t | E_{t-1..t-m}) - H(V_t | V_{t-1}, E_{t-1..t-m})` from plugin
/// frequencies pooled over trials.
pub fn autonomy_observational(trials: &[Trial], m: usize) -> Result<ObservationalAutonomy> {
    let data = AutonomyData::from_trials(trials, m)?;
    Ok(ObservationalAutonomy { value: data.value(None, None)?, m, transitions: data.len() })
}
