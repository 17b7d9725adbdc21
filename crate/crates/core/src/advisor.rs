//! Measure selection. Maps a description of the question and the data to a
//! measure, an estimator from this crate, the measure's main caveat and a
//! reporting checklist.
//!
//! The mapping is a first-match rule table stored in `advisor_table.json` so
//! it can be audited without reading code.

use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifest::Warning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Uncertainty,
    CompareDistributions,
    Dependence,
    DirectedInfluence,
    TemporalMemory,
    AgentComplexity,
}

impl Objective {
    pub const ALL: [Objective; 6] = [
        Objective::Uncertainty,
        Objective::CompareDistributions,
        Objective::Dependence,
        Objective::DirectedInfluence,
        Objective::TemporalMemory,
        Objective::AgentComplexity,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    Discrete,
    Continuous,
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub objective: Objective,
    pub data_kind: DataKind,
    /// Dimension of the variables, or number of streams for directed
    /// influence.
    pub d: usize,
    pub n_samples: usize,
    pub time_ordered: bool,
    pub interventional_access: bool,
}

impl Query {
    pub fn new(
        objective: Objective,
        data_kind: DataKind,
        d: usize,
        n_samples: usize,
        time_ordered: bool,
        interventional_access: bool,
    ) -> Result<Self> {
        if d == 0 || n_samples == 0 {
            return Err(Error::InvalidConfig("dimension and sample count must be at least 1".into()));
        }
        Ok(Query { objective, data_kind, d, n_samples, time_ordered, interventional_access })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alternative {
    pub measure: String,
    pub estimator: String,
    pub caveat: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Unavailable {
    pub measure: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recommendation {
    pub measure: String,
    pub measure_name: String,
    pub family: String,
    pub estimator: String,
    pub caveat: String,
    pub checklist: Vec<String>,
    pub warnings: Vec<Warning>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alternatives: Vec<Alternative>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unavailable: Vec<Unavailable>,
}

#[derive(Debug, Deserialize)]
struct MeasureEntry {
    name: String,
    family: String,
    caveat: String,
}

#[derive(Debug, Deserialize)]
struct AltEntry {
    measure: String,
    estimator: String,
}

#[derive(Debug, Deserialize)]
struct Rule {
    objective: Objective,
    #[serde(default)]
    data_kind: Option<Vec<DataKind>>,
    #[serde(default)]
    min_d: Option<usize>,
    #[serde(default)]
    max_d: Option<usize>,
    #[serde(default)]
    interventional: Option<bool>,
    measure: String,
    estimator: String,
    #[serde(default)]
    checklist: Vec<String>,
    #[serde(default)]
    warnings: Vec<Warning>,
    #[serde(default)]
    alternatives: Vec<AltEntry>,
    #[serde(default)]
    unavailable: Vec<Unavailable>,
}

impl Rule {
    fn matches(&self, q: &Query) -> bool {
        self.objective == q.objective
            && self.data_kind.as_ref().is_none_or(|kinds| kinds.contains(&q.data_kind))
            && self.min_d.is_none_or(|m| q.d >= m)
            && self.max_d.is_none_or(|m| q.d <= m)
            && self.interventional.is_none_or(|i| i == q.interventional_access)
    }
}

#[derive(Debug, Deserialize)]
struct Table {
    measures: std::collections::BTreeMap<String, MeasureEntry>,
    rules: Vec<Rule>,
    reporting_minimum: Vec<String>,
}

static TABLE: Lazy<Table> = Lazy::new(|| {
    let table: Table = serde_json::from_str(include_str!("advisor_table.json")).expect("embedded advisor table parses");
    for rule in &table.rules {
        assert!(table.measures.contains_key(&rule.measure), "unknown measure {}", rule.measure);
    }
    table
});

/// Samples below which any estimate deserves a warning.
const SMALL_SAMPLE: usize = 100;

/// The caveat catalog: measure id and its main caveat.
pub fn caveats() -> Vec<(String, String)> {
    TABLE.measures.iter().map(|(id, m)| (id.clone(), m.caveat.clone())).collect()
}

fn caveat_of(measure: &str) -> String {
    TABLE.measures[measure].caveat.clone()
}

/// Deterministic, total mapping from a query to one recommendation.
pub fn recommend(q: &Query) -> Recommendation {
    let rule = TABLE.rules.iter().find(|r| r.matches(q)).expect("the table has a catch-all rule for every objective");
    let entry = &TABLE.measures[&rule.measure];

    let mut warnings = rule.warnings.clone();
    let temporal = matches!(q.objective, Objective::DirectedInfluence | Objective::TemporalMemory);
    if temporal && !q.time_ordered {
        warnings.push(Warning::new("not_time_ordered", "this measure needs time-ordered samples"));
    }
    if q.n_samples < SMALL_SAMPLE && q.objective != Objective::AgentComplexity {
        warnings
            .push(Warning::new("small_sample", format!("{} samples: finite-sample bias may dominate", q.n_samples)));
    }

    let mut checklist = rule.checklist.clone();
    checklist.extend(TABLE.reporting_minimum.iter().cloned());

    Recommendation {
        measure: rule.measure.clone(),
        measure_name: entry.name.clone(),
        family: entry.family.clone(),
        estimator: rule.estimator.clone(),
        caveat: entry.caveat.clone(),
        checklist,
        warnings,
        alternatives: rule
            .alternatives
            .iter()
            .map(|a| Alternative {
                measure: a.measure.clone(),
                estimator: a.estimator.clone(),
                caveat: caveat_of(&a.measure),
            })
            .collect(),
        unavailable: rule.unavailable.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(objective: Objective, kind: DataKind, d: usize, time: bool, interventional: bool) -> Query {
        Query::new(objective, kind, d, 10_000, time, interventional).unwrap()
    }

    #[test]
    fn directed_influence_on_five_streams() {
        let r = recommend(&q(Objective::DirectedInfluence, DataKind::Continuous, 5, true, false));
        assert_eq!(r.measure, "te");
        assert_eq!(r.estimator, "network_scan");
        assert!(r.caveat.starts_with("Not interventional causality"));
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn high_dimensional_dependence_warns() {
        let r = recommend(&q(Objective::Dependence, DataKind::Continuous, 128, false, false));
        assert_eq!(r.estimator, "mi_ksg");
        assert_eq!(r.warnings[0].code, "high_dimension");
        assert!(r.checklist.iter().any(|c| c.contains("k = 3, 5 and 10")));
        let low = recommend(&q(Objective::Dependence, DataKind::Continuous, 19, false, false));
        assert!(low.warnings.is_empty());
    }

    #[test]
    fn causal_measures_need_interventional_access() {
        let r = recommend(&q(Objective::AgentComplexity, DataKind::Discrete, 3, true, false));
        assert_eq!(r.estimator, "autonomy_observational");
        assert!(r.unavailable.iter().any(|u| u.measure == "ei"));
        let full = recommend(&q(Objective::AgentComplexity, DataKind::Discrete, 3, true, true));
        assert_eq!(full.measure, "phi");
        assert!(full.alternatives.iter().any(|a| a.estimator == "effective_information"));
    }

    #[test]
    fn entropy_routes_by_kind_and_dimension() {
        assert_eq!(
            recommend(&q(Objective::Uncertainty, DataKind::Discrete, 1, false, false)).estimator,
            "entropy_plugin"
        );
        assert_eq!(
            recommend(&q(Objective::Uncertainty, DataKind::Continuous, 1, false, false)).estimator,
            "entropy_vasicek"
        );
        assert_eq!(
            recommend(&q(Objective::Uncertainty, DataKind::Continuous, 2, false, false)).estimator,
            "entropy_knn"
        );
    }

    #[test]
    fn temporal_warnings() {
        let r = recommend(&q(Objective::TemporalMemory, DataKind::Continuous, 1, false, false));
        assert!(r.warnings.iter().any(|w| w.code == "not_time_ordered"));
        let small = recommend(&Query::new(Objective::Dependence, DataKind::Discrete, 1, 30, false, false).unwrap());
        assert!(small.warnings.iter().any(|w| w.code == "small_sample"));
        assert!(Query::new(Objective::Dependence, DataKind::Discrete, 0, 30, false, false).is_err());
    }

    #[test]
    fn every_measure_has_a_caveat() {
        let c = caveats();
        assert_eq!(c.len(), 8);
        assert!(c.iter().all(|(_, text)| !text.is_empty()));
    }

    fn kind() -> impl Strategy<Value = DataKind> {
        prop_oneof![Just(DataKind::Discrete), Just(DataKind::Continuous), Just(DataKind::Mixed)]
    }

    proptest! {
        #[test]
        fn total_and_deterministic(o in 0usize..6, k in kind(), d in 1usize..200, n in 1usize..100_000, t: bool, i: bool) {
            let query = Query::new(Objective::ALL[o], k, d, n, t, i).unwrap();
            let a = recommend(&query);
            prop_assert_eq!(&a, &recommend(&query));
            prop_assert!(!a.caveat.is_empty());
        }
    }
}
