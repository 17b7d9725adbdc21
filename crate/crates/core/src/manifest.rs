//! The reporting record attached to every computed result.
//!
//! A [`ReportManifest`] can only be obtained from [`ManifestBuilder::build`],
//! which refuses to produce one unless all five items are present.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{CiResult, SignificanceResult};

/// Estimator hyperparameters. Ordered so serialization is stable.
pub type Hyperparams = BTreeMap<String, serde_json::Value>;

pub const SCHEMA_VERSION: u32 = 1;

/// Version of this library, stamped into every manifest.
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Whether a number is a measurement or an optimization objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Measurement,
    TrainingSurrogate,
}

/// A structured, machine-readable caution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Warning { code: code.to_string(), message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRecord {
    pub id: String,
    pub hyperparams: Hyperparams,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Uncertainty {
    Interval(CiResult),
    /// The quantity is computed exactly from a fully specified model, so no
    /// sampling interval exists.
    Exact {
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Significance {
    Test(SignificanceResult),
    NotApplicable { reason: String },
}

/// One transformation applied before estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum PreprocessingStep {
    Standardize {
        columns: Vec<String>,
    },
    Jitter {
        relative: f64,
        seed: u64,
    },
    RankTransform {
        columns: Vec<String>,
    },
    Discretize {
        column: String,
        rule: String,
        bins: usize,
    },
    Embedding {
        target_lags: Vec<usize>,
        source_lags: Vec<usize>,
        justification: String,
    },
    Conditioning {
        on: Vec<String>,
        reason: String,
    },
    StationarityCheck {
        column: String,
        status: String,
    },
    SystemBoundary {
        v_nodes: Vec<usize>,
        e_nodes: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
    },
    CoarseGraining {
        groups: Vec<Vec<usize>>,
    },
    TpmConversion {
        from: String,
        assumption: String,
    },
    ColumnSelection {
        columns: Vec<String>,
    },
    Note {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub schema_version: u32,
    pub role: Role,
    pub estimator: EstimatorRecord,
    pub uncertainty: Uncertainty,
    pub significance: Significance,
    pub preprocessing: Vec<PreprocessingStep>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl ReportManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: ReportManifest = serde_json::from_str(text)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidInput(format!("unsupported manifest schema version {}", m.schema_version)));
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ManifestBuilder {
    role: Option<Role>,
    estimator: Option<EstimatorRecord>,
    uncertainty: Option<Uncertainty>,
    significance: Option<Significance>,
    preprocessing: Option<Vec<PreprocessingStep>>,
    warnings: Vec<Warning>,
}

impl ManifestBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn role(mut self, role: Role) -> Self {
        self.role = Some(role);
        self
    }

    pub fn estimator(mut self, id: &str, hyperparams: Hyperparams) -> Self {
        self.estimator =
            Some(EstimatorRecord { id: id.to_string(), hyperparams, version: ARTIFACT_VERSION.to_string() });
        self
    }

    pub fn uncertainty(mut self, u: Uncertainty) -> Self {
        self.uncertainty = Some(u);
        self
    }

    pub fn interval(self, ci: CiResult) -> Self {
        self.uncertainty(Uncertainty::Interval(ci))
    }

    pub fn significance(mut self, s: Significance) -> Self {
        self.significance = Some(s);
        self
    }

    pub fn test(self, s: SignificanceResult) -> Self {
        self.significance(Significance::Test(s))
    }

    /// Replace the preprocessing record. An empty list is a valid record of
    /// "no preprocessing"; never calling this is not.
    pub fn preprocessing(mut self, steps: Vec<PreprocessingStep>) -> Self {
        self.preprocessing = Some(steps);
        self
    }

    pub fn step(mut self, step: PreprocessingStep) -> Self {
        self.preprocessing.get_or_insert_with(Vec::new).push(step);
        self
    }

    pub fn warning(mut self, w: Warning) -> Self {
        self.warnings.push(w);
        self
    }

    pub fn warnings(mut self, ws: impl IntoIterator<Item = Warning>) -> Self {
        self.warnings.extend(ws);
        self
    }

    pub fn build(self) -> Result<ReportManifest> {
        Ok(ReportManifest {
            schema_version: SCHEMA_VERSION,
            role: self.role.ok_or(Error::MissingField("role"))?,
            estimator: self.estimator.ok_or(Error::MissingField("estimator"))?,
            uncertainty: self.uncertainty.ok_or(Error::MissingField("uncertainty"))?,
            significance: self.significance.ok_or(Error::MissingField("significance"))?,
            preprocessing: self.preprocessing.ok_or(Error::MissingField("preprocessing"))?,
            warnings: self.warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{CiMethod, ResampleScheme, SurrogateMethod};
    use crate::rng::RngSeed;
    use serde_json::json;

    fn ci() -> CiResult {
        CiResult {
            point: 0.1438,
            low: 0.12,
            high: 0.17,
            level: 0.95,
            replicates: 200,
            method: CiMethod::Percentile,
            scheme: ResampleScheme::MovingBlock { block_len: 22 },
        }
    }

    fn sig() -> SignificanceResult {
        SignificanceResult {
            observed: 0.1438,
            null_samples: vec![0.001, -0.002, 0.0005],
            p_value: 0.25,
            method: SurrogateMethod::TimeShift,
            surrogates: 3,
            seed: RngSeed(7),
        }
    }

    fn full() -> ManifestBuilder {
        let mut hp = Hyperparams::new();
        hp.insert("k".into(), json!(4));
        ManifestBuilder::new()
            .role(Role::Measurement)
            .estimator("te_ksg", hp)
            .interval(ci())
            .test(sig())
            .step(PreprocessingStep::Standardize { columns: vec!["x".into()] })
    }

    #[test]
    fn complete_manifest_builds() {
        let m = full().build().unwrap();
        assert_eq!(m.estimator.version, ARTIFACT_VERSION);
        assert_eq!(m.role, Role::Measurement);
    }

    #[test]
    fn each_missing_field_is_named() {
        let b = ManifestBuilder::new();
        assert_eq!(b.clone().build().unwrap_err(), Error::MissingField("role"));
        let b = b.role(Role::Measurement);
        assert_eq!(b.clone().build().unwrap_err(), Error::MissingField("estimator"));
        let b = b.estimator("mi_ksg", Hyperparams::new());
        assert_eq!(b.clone().build().unwrap_err(), Error::MissingField("uncertainty"));
        let b = b.interval(ci());
        assert_eq!(b.clone().build().unwrap_err(), Error::MissingField("significance"));
        let b = b.test(sig());
        assert_eq!(b.clone().build().unwrap_err(), Error::MissingField("preprocessing"));
        assert!(b.preprocessing(vec![]).build().is_ok());
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let m = full()
            .step(PreprocessingStep::Jitter { relative: 1e-10, seed: 42 })
            .warning(Warning::new("default_embedding", "l = k = tau = 1 used"))
            .build()
            .unwrap();
        let a = m.to_json().unwrap();
        let back = ReportManifest::from_json(&a).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), a);
    }

    #[test]
    fn exact_family_b_manifest_round_trips() {
        let mut hp = Hyperparams::new();
        hp.insert("variant".into(), json!("ei-bipartition-v1"));
        hp.insert("n".into(), json!(3));
        let m = ManifestBuilder::new()
            .role(Role::Measurement)
            .estimator("phi", hp)
            .uncertainty(Uncertainty::Exact { reason: "computed from the full TPM".into() })
            .significance(Significance::NotApplicable { reason: "deterministic".into() })
            .step(PreprocessingStep::SystemBoundary { v_nodes: vec![0, 1, 2], e_nodes: vec![], m: None })
            .build()
            .unwrap();
        let s = m.to_json().unwrap();
        assert!(s.contains("ei-bipartition-v1"));
        assert_eq!(ReportManifest::from_json(&s).unwrap().to_json().unwrap(), s);
    }

    #[test]
    fn rejects_unknown_schema() {
        let s = full().build().unwrap().to_json().unwrap().replace("\"schema_version\": 1", "\"schema_version\": 9");
        assert!(ReportManifest::from_json(&s).is_err());
    }
}
