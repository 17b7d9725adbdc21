//! Data ingestion, validation and preprocessing shared by every estimator.

use std::io::Read;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Tolerance on the total mass of probability tables.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// Jitter magnitude relative to the column standard deviation.
pub const JITTER_RELATIVE: f64 = 1e-10;

/// Fixed stream used for tie-breaking jitter so that estimators stay pure
/// functions of their input.
pub const JITTER_SEED: u64 = 0x6a69_7474_6572;

/// N observations × d real columns, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMatrix {
    data: Vec<f64>,
    n_rows: usize,
    n_cols: usize,
    column_names: Option<Vec<String>>,
    time_ordered: bool,
}

impl SampleMatrix {
    /// Build from row-major data, rejecting NaN/Inf and empty shapes.
    pub fn from_row_major(data: Vec<f64>, n_rows: usize, n_cols: usize) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 {
            return Err(Error::InvalidInput(format!("sample matrix must be at least 1×1, got {n_rows}×{n_cols}")));
        }
        if data.len() != n_rows * n_cols {
            return Err(Error::InvalidInput(format!(
                "expected {} values for a {n_rows}×{n_cols} matrix, got {}",
                n_rows * n_cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value {} at row {}, column {}",
                data[pos],
                pos / n_cols,
                pos % n_cols
            )));
        }
        Ok(SampleMatrix { data, n_rows, n_cols, column_names: None, time_ordered: false })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::InvalidInput(format!("row {i} has {} values, expected {n_cols}", r.len())));
        }
        let data = rows.iter().flatten().copied().collect();
        Self::from_row_major(data, rows.len(), n_cols)
    }

    pub fn from_columns(columns: &[&[f64]]) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.len());
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::InvalidInput("columns have unequal lengths".into()));
        }
        let n_cols = columns.len();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for c in columns {
                data.push(c[i]);
            }
        }
        Self::from_row_major(data, n_rows, n_cols)
    }

    /// A single column, optionally flagged as a time series.
    pub fn from_column(values: &[f64]) -> Result<Self> {
        Self::from_row_major(values.to_vec(), values.len(), 1)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_cols {
            return Err(Error::InvalidInput(format!("{} column names for {} columns", names.len(), self.n_cols)));
        }
        self.column_names = Some(names);
        Ok(self)
    }

    pub fn time_ordered(mut self, flag: bool) -> Self {
        self.time_ordered = flag;
        self
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_time_ordered(&self) -> bool {
        self.time_ordered
    }

    pub fn column_names(&self) -> Option<&[String]> {
        self.column_names.as_deref()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Look up a column by name.
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.column_names
            .as_ref()
            .and_then(|names| names.iter().position(|n| n == name))
            .ok_or_else(|| Error::InvalidInput(format!("no column named `{name}`")))
    }

    pub fn column_name(&self, j: usize) -> String {
        self.column_names.as_ref().map(|n| n[j].clone()).unwrap_or_else(|| format!("c{j}"))
    }

    pub fn select_columns(&self, cols: &[usize]) -> Result<SampleMatrix> {
        if let Some(&bad) = cols.iter().find(|&&c| c >= self.n_cols) {
            return Err(Error::InvalidInput(format!("column {bad} out of range")));
        }
        let mut data = Vec::with_capacity(self.n_rows * cols.len());
        for i in 0..self.n_rows {
            let row = self.row(i);
            data.extend(cols.iter().map(|&c| row[c]));
        }
        let mut out = SampleMatrix::from_row_major(data, self.n_rows, cols.len())?;
        if let Some(names) = &self.column_names {
            out.column_names = Some(cols.iter().map(|&c| names[c].clone()).collect());
        }
        out.time_ordered = self.time_ordered;
        Ok(out)
    }

    /// Rows picked by index, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> SampleMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        SampleMatrix {
            data,
            n_rows: rows.len(),
            n_cols: self.n_cols,
            column_names: self.column_names.clone(),
            time_ordered: false,
        }
    }

    /// Horizontal concatenation. Row counts must agree.
    pub fn hstack(parts: &[&SampleMatrix]) -> Result<SampleMatrix> {
        let n_rows = parts.first().map_or(0, |p| p.n_rows);
        if parts.iter().any(|p| p.n_rows != n_rows) {
            return Err(Error::InvalidInput("cannot stack matrices with different row counts".into()));
        }
        let n_cols: usize = parts.iter().map(|p| p.n_cols).sum();
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        SampleMatrix::from_row_major(data, n_rows, n_cols)
    }

    /// Circularly rotate the rows by `shift` (row i moves to i + shift mod N).
    pub fn rotate_rows(&self, shift: usize) -> SampleMatrix {
        let n = self.n_rows;
        let mut data = vec![0.0; self.data.len()];
        for i in 0..n {
            let dst = (i + shift) % n;
            data[dst * self.n_cols..(dst + 1) * self.n_cols].copy_from_slice(self.row(i));
        }
        SampleMatrix { data, ..self.clone() }
    }

    fn map_columns(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> SampleMatrix {
        let mut out = self.clone();
        for j in 0..self.n_cols {
            let col = f(&self.column(j));
            for (i, v) in col.into_iter().enumerate() {
                out.data[i * self.n_cols + j] = v;
            }
        }
        out
    }
}

/// Integer symbols in `[0, alphabet_size)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSeries {
    symbols: Vec<usize>,
    alphabet_size: usize,
}

impl DiscreteSeries {
    pub fn new(symbols: Vec<usize>, alphabet_size: usize) -> Result<Self> {
        if alphabet_size == 0 {
            return Err(Error::InvalidInput("alphabet size must be ≥ 1".into()));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::InvalidInput(format!("symbol {s} outside alphabet of size {alphabet_size}")));
        }
        Ok(DiscreteSeries { symbols, alphabet_size })
    }

    /// Alphabet inferred as max symbol + 1.
    pub fn from_symbols(symbols: Vec<usize>) -> Result<Self> {
        let k = symbols.iter().max().map_or(1, |m| m + 1);
        Self::new(symbols, k)
    }

    /// Interpret real values as symbols; they must be non-negative integers.
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let symbols = values
            .iter()
            .map(|&v| {
                if v.is_finite() && v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                    Ok(v as usize)
                } else {
                    Err(Error::InvalidInput(format!(
                        "value {v} is not a non-negative integer symbol; discretize first"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_symbols(symbols)
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn counts(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.alphabet_size];
        for &s in &self.symbols {
            c[s] += 1.0;
        }
        c
    }

    pub fn empirical(&self) -> Result<ProbTable> {
        ProbTable::from_counts(&self.counts())
    }
}

/// A normalized distribution over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbTable {
    probs: Vec<f64>,
}

impl ProbTable {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        validate_probs(&probs)?;
        Ok(ProbTable { probs })
    }

    pub fn from_counts(counts: &[f64]) -> Result<Self> {
        let total: f64 = counts.iter().sum();
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) || total <= 0.0 {
            return Err(Error::InvalidInput("counts must be non-negative with a positive total".into()));
        }
        Ok(ProbTable { probs: counts.iter().map(|c| c / total).collect() })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput("empty alphabet".into()));
        }
        Ok(ProbTable { probs: vec![1.0 / k as f64; k] })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::InvalidInput("empty probability table".into()));
    }
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidInput(format!("invalid probability {p}")));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > PROB_SUM_TOL * (probs.len() as f64).max(1.0) {
        return Err(Error::InvalidInput(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Normalized joint distribution over two or three finite axes, stored
/// row-major (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointTable {
    probs: Vec<f64>,
    shape: Vec<usize>,
}

impl JointTable {
    pub fn new(probs: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if !(2..=3).contains(&shape.len()) || shape.contains(&0) {
            return Err(Error::InvalidInput(format!("joint table needs 2 or 3 non-empty axes, got shape {shape:?}")));
        }
        if probs.len() != shape.iter().product::<usize>() {
            return Err(Error::InvalidInput("joint table size does not match shape".into()));
        }
        validate_probs(&probs)?;
        Ok(JointTable { probs, shape })
    }

    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        let ky = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ky) {
            return Err(Error::InvalidInput("ragged joint table".into()));
        }
        Self::new(rows.iter().flatten().copied().collect(), vec![rows.len(), ky])
    }

    /// Empirical joint of two discrete series, optionally weighted per sample.
    pub fn from_series(x: &DiscreteSeries, y: &DiscreteSeries, weights: Option<&[f64]>) -> Result<Self> {
        if x.len() != y.len() || x.is_empty() {
            return Err(Error::InvalidInput("series must be non-empty and of equal length".into()));
        }
        let ky = y.alphabet_size();
        let mut counts = vec![0.0; x.alphabet_size() * ky];
        for i in 0..x.len() {
            counts[x.symbols()[i] * ky + y.symbols()[i]] += weights.map_or(1.0, |w| w[i]);
        }
        let total: f64 = counts.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("zero total weight".into()));
        }
        Ok(JointTable { probs: counts.into_iter().map(|c| c / total).collect(), shape: vec![x.alphabet_size(), ky] })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Marginal over a single axis.
    pub fn marginal(&self, axis: usize) -> ProbTable {
        let mut out = vec![0.0; self.shape[axis]];
        let strides = self.strides();
        for (flat, &p) in self.probs.iter().enumerate() {
            out[(flat / strides[axis]) % self.shape[axis]] += p;
        }
        ProbTable { probs: out }
    }

    /// The flattened joint as a single distribution.
    pub fn flattened(&self) -> ProbTable {
        ProbTable { probs: self.probs.clone() }
    }

    fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.shape.len()];
        for a in (0..self.shape.len() - 1).rev() {
            s[a] = s[a + 1] * self.shape[a + 1];
        }
        s
    }
}

/// Binning rule for [`discretize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "bins")]
pub enum BinRule {
    EqualWidth(usize),
    EqualFrequency(usize),
}

impl BinRule {
    pub fn bins(self) -> usize {
        match self {
            BinRule::EqualWidth(b) | BinRule::EqualFrequency(b) => b,
        }
    }
}

/// Output of [`discretize`]: the symbols and the bin edges used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discretization {
    pub series: DiscreteSeries,
    pub rule: BinRule,
    /// B + 1 edges for equal-width; B − 1 interior cut points for
    /// equal-frequency.
    pub edges: Vec<f64>,
}

/// Bin a real column into B symbols.
///
/// Equal-width bins are left-closed except the top bin, which is closed on
/// both sides. Equal-frequency bins assign sorted ranks in contiguous blocks
/// whose sizes differ by at most one (ties broken by input order).
pub fn discretize(values: &[f64], rule: BinRule) -> Result<Discretization> {
    let b = rule.bins();
    if b < 2 {
        return Err(Error::InvalidConfig(format!("need at least 2 bins, got {b}")));
    }
    if b > values.len() {
        return Err(Error::InvalidConfig(format!("{b} bins for only {} observations", values.len())));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite value in column".into()));
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
    if lo == hi {
        return Err(Error::DegenerateInput("constant column cannot be discretized".into()));
    }
    let (symbols, edges) = match rule {
        BinRule::EqualWidth(_) => {
            let width = (hi - lo) / b as f64;
            let edges: Vec<f64> = (0..=b).map(|i| lo + width * i as f64).collect();
            let symbols = values.iter().map(|&v| (((v - lo) / width).floor() as usize).min(b - 1)).collect();
            (symbols, edges)
        }
        BinRule::EqualFrequency(_) => {
            let n = values.len();
            let order = stable_order(values);
            let mut symbols = vec![0; n];
            let mut edges = Vec::with_capacity(b - 1);
            for (rank, &idx) in order.iter().enumerate() {
                symbols[idx] = rank * b / n;
            }
            for bin in 1..b {
                let first = (bin * n).div_ceil(b);
                edges.push(values[order[first]]);
            }
            (symbols, edges)
        }
    };
    Ok(Discretization { series: DiscreteSeries::new(symbols, b)?, rule, edges })
}

fn stable_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    order
}

/// Replace each column by (rank − 0.5)/N, ties broken by input order.
pub fn rank_transform(samples: &SampleMatrix) -> Result<SampleMatrix> {
    let n = samples.n_rows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    Ok(samples.map_columns(|col| {
        let mut out = vec![0.0; col.len()];
        for (rank, idx) in stable_order(col).into_iter().enumerate() {
            out[idx] = (rank as f64 + 0.5) / n as f64;
        }
        out
    }))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population variance (divides by N).
pub fn variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Zero-mean, unit-variance columns. Constant columns are centred only.
pub fn standardize(samples: &SampleMatrix) -> SampleMatrix {
    samples.map_columns(|col| {
        let m = mean(col);
        let sd = variance(col).sqrt();
        let scale = if sd > 0.0 { 1.0 / sd } else { 1.0 };
        col.iter().map(|v| (v - m) * scale).collect()
    })
}

/// Add Gaussian jitter of `relative` × column s.d. to break ties before kNN
/// estimation. Constant columns are left untouched. The jitter stream is
/// fixed, so the result is a pure function of the input.
pub fn jitter(samples: &SampleMatrix, relative: f64) -> SampleMatrix {
    let mut out = samples.clone();
    let seed = RngSeed::new(JITTER_SEED);
    for j in 0..samples.n_cols() {
        let col = samples.column(j);
        let sd = variance(&col).sqrt();
        if sd == 0.0 {
            continue;
        }
        let mut rng = seed.substream(j as u64);
        for i in 0..samples.n_rows() {
            let e: f64 = rng.sample(StandardNormal);
            out.data[i * samples.n_cols() + j] += relative * sd * e;
        }
    }
    out
}

/// Default preparation for kNN estimators: standardize, then jitter.
pub fn prepare_for_knn(samples: &SampleMatrix) -> SampleMatrix {
    jitter(&standardize(samples), JITTER_RELATIVE)
}

/// Outcome of the split-half drift heuristic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Stationarity {
    Pass { mean_shift_sd: f64, variance_ratio: f64 },
    Warn { mean_shift_sd: f64, variance_ratio: f64, reasons: Vec<String> },
}

impl Stationarity {
    pub fn is_pass(&self) -> bool {
        matches!(self, Stationarity::Pass { .. })
    }
}

/// Mean shift above this many pooled s.d. triggers a warning.
pub const DRIFT_MEAN_SD: f64 = 0.5;
/// Second-half/first-half variance ratio must stay in this band.
pub const DRIFT_VARIANCE_BAND: (f64, f64) = (0.5, 2.0);

/// Split-half drift check. Advisory only.
pub fn check_stationarity(series: &[f64]) -> Result<Stationarity> {
    if series.len() < 20 {
        return Err(Error::InsufficientData { needed: 20, got: series.len() });
    }
    let (a, b) = series.split_at(series.len() / 2);
    let (va, vb) = (variance(a), variance(b));
    let pooled = ((va + vb) / 2.0).sqrt();
    let shift = (mean(b) - mean(a)).abs();
    let mean_shift_sd = if pooled > 0.0 {
        shift / pooled
    } else if shift > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let variance_ratio = if va > 0.0 {
        vb / va
    } else if vb > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let mut reasons = Vec::new();
    if mean_shift_sd > DRIFT_MEAN_SD {
        reasons.push(format!("mean drift: halves differ by {mean_shift_sd:.3} pooled s.d."));
    }
    if !(DRIFT_VARIANCE_BAND.0..=DRIFT_VARIANCE_BAND.1).contains(&variance_ratio) {
        reasons.push(format!("variance ratio {variance_ratio:.3} outside [0.5, 2]"));
    }
    Ok(if reasons.is_empty() {
        Stationarity::Pass { mean_shift_sd, variance_ratio }
    } else {
        Stationarity::Warn { mean_shift_sd, variance_ratio, reasons }
    })
}

#[derive(Deserialize)]
struct JsonContainer {
    columns: Vec<String>,
    data: Vec<Vec<f64>>,
}

/// Parse `{"columns": [...], "data": [[...], ...]}` (one inner array per row).
pub fn read_json<R: Read>(reader: R) -> Result<SampleMatrix> {
    let c: JsonContainer = serde_json::from_reader(reader)?;
    SampleMatrix::from_rows(&c.data)?.with_names(c.columns)
}

/// Parse a CSV with a header row; every cell must be a finite number.
pub fn read_csv<R: Read>(reader: R) -> Result<SampleMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|cell| {
                cell.parse::<f64>().map_err(|_| {
                    Error::InvalidInput(format!(
                        "row {}: `{cell}` is not a number (missing values are not imputed)",
                        line + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    SampleMatrix::from_rows(&rows)?.with_names(names)
}

/// Load CSV or JSON by file extension.
pub fn load_samples(path: &Path) -> Result<SampleMatrix> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => read_json(file),
        _ => read_csv(file),
    }
}

/// Serialize as CSV with a header row.
pub fn write_csv<W: std::io::Write>(samples: &SampleMatrix, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let names: Vec<String> = (0..samples.n_cols()).map(|j| samples.column_name(j)).collect();
    w.write_record(&names)?;
    for i in 0..samples.n_rows() {
        w.write_record(samples.row(i).iter().map(|v| format!("{v}")))?;
    }
    w.flush()?;
    Ok(())
}
