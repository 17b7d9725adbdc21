use std::f64::consts::LN_2;
use std::io::Write;
use std::path::Path;

use infometer::error::{Error, Result};
use infometer::manifest::{ReportManifest, Significance, Uncertainty};
use infometer::report::Reported;
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Nats,
    Bits,
}

#[derive(Debug, Serialize)]
pub struct InBits {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ci: Option<[f64; 2]>,
}

/// One number with the manifest it cannot be separated from.
#[derive(Debug, Serialize)]
pub struct Entry {
    pub label: String,
    pub unit: Unit,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<InBits>,
    pub result: Value,
    pub manifest: ReportManifest,
}

impl Entry {
    pub fn new<T: Serialize>(label: impl Into<String>, unit: Unit, value: f64, reported: Reported<T>) -> Result<Self> {
        Ok(Entry {
            label: label.into(),
            unit,
            value,
            bits: None,
            result: serde_json::to_value(&reported.result)?,
            manifest: reported.manifest,
        })
    }

    fn interval(&self) -> Option<[f64; 2]> {
        match &self.manifest.uncertainty {
            Uncertainty::Interval(ci) => Some([ci.low, ci.high]),
            Uncertainty::Exact { .. } => None,
        }
    }

    fn p_value(&self) -> Option<f64> {
        match &self.manifest.significance {
            Significance::Test(s) => Some(s.p_value),
            Significance::NotApplicable { .. } => None,
        }
    }

    /// Adds the bits view; stored values and intervals stay in their unit.
    fn with_bits(mut self) -> Self {
        if self.unit == Unit::Nats {
            self.bits =
                Some(InBits { value: self.value / LN_2, ci: self.interval().map(|[lo, hi]| [lo / LN_2, hi / LN_2]) });
        }
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Output {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub results: Vec<Entry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

impl Output {
    pub fn new(command: &'static str, seed: Option<u64>) -> Self {
        Output { command, seed, results: Vec::new(), summary: None }
    }

    pub fn push(&mut self, entry: Entry) {
        self.results.push(entry);
    }
}

fn csv_cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn csv_summary(out: &Output) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["label", "unit", "value", "ci_low", "ci_high", "p_value", "estimator"];
    if out.results.iter().any(|e| e.bits.is_some()) {
        header.push("value_bits");
    }
    w.write_record(&header)?;
    for e in &out.results {
        let ci = e.interval();
        let mut row = vec![
            e.label.clone(),
            format!("{:?}", e.unit).to_lowercase(),
            format!("{}", e.value),
            csv_cell(ci.map(|c| c[0])),
            csv_cell(ci.map(|c| c[1])),
            csv_cell(e.p_value()),
            e.manifest.estimator.id.clone(),
        ];
        if header.len() > 7 {
            row.push(csv_cell(e.bits.as_ref().map(|b| b.value).or(Some(e.value))));
        }
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn render(mut out: Output, format: Format, bits: bool) -> Result<String> {
    if bits {
        out.results = out.results.into_iter().map(Entry::with_bits).collect();
    }
    match format {
        Format::Json => Ok(serde_json::to_string_pretty(&out)? + "\n"),
        Format::CsvSummary => csv_summary(&out),
    }
}

pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
