//! Mutual information and conditional mutual information.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::data::{DiscreteSeries, JointTable, SampleMatrix};
use crate::entropy::shannon;
use crate::error::{Error, Result};
use crate::knn::NeighborIndex;
use crate::manifest::{Role, Warning};
use statrs::function::gamma::digamma;

/// Default KSG neighbour count.
pub const DEFAULT_K: usize = 4;

/// Combined dimension above which kNN estimates are flagged.
pub const KSG_MAX_DIM: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiEstimator {
    Plugin,
    Ksg,
}

impl MiEstimator {
    pub fn id(self) -> &'static str {
        match self {
            MiEstimator::Plugin => "plugin",
            MiEstimator::Ksg => "ksg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiEstimate {
    /// Nats.
    pub value: f64,
    pub estimator: MiEstimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<Warning>,
}

impl MiEstimate {
    fn new(value: f64, estimator: MiEstimator, k: Option<usize>) -> Self {
        MiEstimate { value, estimator, k, role: Role::Measurement, warnings: Vec::new() }
    }
}

/// Σ p(x,y) ln[p(x,y) / (p(x) p(y))] for a two-axis joint table.
pub fn mi_plugin(joint: &JointTable) -> Result<MiEstimate> {
    if joint.shape().len() != 2 {
        return Err(Error::InvalidInput("mi_plugin needs a two-axis joint table".into()));
    }
    let px = joint.marginal(0);
    let py = joint.marginal(1);
    let ky = joint.shape()[1];
    let mut acc = 0.0;
    for (flat, &p) in joint.probs().iter().enumerate() {
        if p > 0.0 {
            acc += p * (p / (px.probs()[flat / ky] * py.probs()[flat % ky])).ln();
        }
    }
    Ok(MiEstimate::new(acc.max(0.0), MiEstimator::Plugin, None))
}

/// Plugin MI of two symbol series.
pub fn mi_plugin_series(x: &DiscreteSeries, y: &DiscreteSeries) -> Result<MiEstimate> {
    mi_plugin(&JointTable::from_series(x, y, None)?)
}

/// Discrete blocks: each row of a block is one multi-symbol observation.
pub type SymbolBlock = Vec<Vec<usize>>;

fn dense_ids(block: &[Vec<usize>]) -> Vec<usize> {
    let mut ids: HashMap<&[usize], usize> = HashMap::new();
    block
        .iter()
        .map(|row| {
            let next = ids.len();
            *ids.entry(row.as_slice()).or_insert(next)
        })
        .collect()
}

/// Plugin I(X;Y|Z) over symbol blocks with optional per-row weights. An
/// empty Z block gives the unconditional MI.
pub fn plugin_cmi(x: &[Vec<usize>], y: &[Vec<usize>], z: &[Vec<usize>], weights: Option<&[f64]>) -> Result<f64> {
    let n = x.len();
    if y.len() != n || z.len() != n || n == 0 {
        return Err(Error::InvalidInput("blocks must be non-empty and of equal length".into()));
    }
    let (xi, yi, zi) = (dense_ids(x), dense_ids(y), dense_ids(z));
    // Ordered so the floating-point sum below does not depend on hash order.
    let mut xyz: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut xz: HashMap<(usize, usize), f64> = HashMap::new();
    let mut yz: HashMap<(usize, usize), f64> = HashMap::new();
    let mut zc: HashMap<usize, f64> = HashMap::new();
    let mut total = 0.0;
    for i in 0..n {
        let w = weights.map_or(1.0, |w| w[i]);
        if w <= 0.0 {
            continue;
        }
        total += w;
        *xyz.entry((xi[i], yi[i], zi[i])).or_default() += w;
        *xz.entry((xi[i], zi[i])).or_default() += w;
        *yz.entry((yi[i], zi[i])).or_default() += w;
        *zc.entry(zi[i]).or_default() += w;
    }
    if total <= 0.0 {
        return Err(Error::InvalidInput("zero total weight".into()));
    }
    let mut acc = 0.0;
    for (&(a, b, c), &cnt) in &xyz {
        acc += cnt * ((cnt * zc[&c]) / (xz[&(a, c)] * yz[&(b, c)])).ln();
    }
    Ok((acc / total).max(0.0))
}

fn check_equal_rows(parts: &[&SampleMatrix]) -> Result<usize> {
    let n = parts[0].n_rows();
    if parts.iter().any(|p| p.n_rows() != n) {
        return Err(Error::InvalidInput("inputs have different numbers of samples".into()));
    }
    Ok(n)
}

fn dimension_warning(d: usize) -> Option<Warning> {
    (d > KSG_MAX_DIM).then(|| Warning {
        code: "high_dimension".into(),
        message: format!(
            "combined dimension {d} exceeds {KSG_MAX_DIM}; kNN estimates are dominated by the \
             curse of dimensionality. Reduce dimension first (e.g. PCA to d ≤ 15)."
        ),
    })
}

/// KSG (algorithm 1) estimate of I(X;Y), or of I(X;Y|Z) when `z` is given.
///
/// Row `i` counts `weights[i]` times; copies of one row are never each
/// other's neighbours. Unit weights give the ordinary estimator.
pub fn ksg_weighted(
    x: &SampleMatrix,
    y: &SampleMatrix,
    z: Option<&SampleMatrix>,
    k: usize,
    weights: Option<&[f64]>,
) -> Result<f64> {
    let mut parts = vec![x, y];
    if let Some(z) = z {
        parts.push(z);
    }
    let n = check_equal_rows(&parts)?;
    let joint = SampleMatrix::hstack(&parts)?;
    let dx = x.n_cols();
    let dy = y.n_cols();
    let dz = z.map_or(0, SampleMatrix::n_cols);
    let all: Vec<usize> = (0..dx + dy + dz).collect();
    let xs: Vec<usize> = (0..dx).collect();
    let ys: Vec<usize> = (dx..dx + dy).collect();
    let zs: Vec<usize> = (dx + dy..dx + dy + dz).collect();
    let xz: Vec<usize> = xs.iter().chain(&zs).copied().collect();
    let yz: Vec<usize> = ys.iter().chain(&zs).copied().collect();

    let ones;
    let w = match weights {
        Some(w) => w,
        None => {
            ones = vec![1.0; n];
            &ones
        }
    };
    let joint_idx = NeighborIndex::for_knn(&joint, &all, w);
    let total = joint_idx.total_weight();
    if k == 0 || (k as f64) >= total {
        return Err(Error::InvalidConfig(format!("k = {k} requires more than {k} samples, got {total}")));
    }
    let xz_idx = NeighborIndex::weighted(&joint, &xz, w);
    let yz_idx = NeighborIndex::weighted(&joint, &yz, w);
    let z_idx = (dz > 0).then(|| NeighborIndex::weighted(&joint, &zs, w));

    let mut acc = 0.0;
    for (i, &wi) in w.iter().enumerate() {
        if wi <= 0.0 {
            continue;
        }
        let eps = joint_idx.kth_distance(i, k)?;
        let n_xz = xz_idx.count_within(i, eps, true);
        let n_yz = yz_idx.count_within(i, eps, true);
        let term = match &z_idx {
            Some(zi) => digamma(n_xz + 1.0) + digamma(n_yz + 1.0) - digamma(zi.count_within(i, eps, true) + 1.0),
            None => digamma(n_xz + 1.0) + digamma(n_yz + 1.0),
        };
        acc += wi * term;
    }
    let mean = acc / total;
    Ok(match z_idx {
        Some(_) => digamma(k as f64) - mean,
        None => digamma(k as f64) + digamma(total) - mean,
    })
}

/// KSG algorithm-1 mutual information.
pub fn mi_ksg(x: &SampleMatrix, y: &SampleMatrix, k: usize) -> Result<MiEstimate> {
    let value = ksg_weighted(x, y, None, k, None)?;
    let mut est = MiEstimate::new(value, MiEstimator::Ksg, Some(k));
    est.warnings.extend(dimension_warning(x.n_cols() + y.n_cols()));
    if value < 0.0 {
        est.warnings.push(negative_note());
    }
    Ok(est)
}

/// KSG-style conditional mutual information I(X;Y|Z).
pub fn cmi_ksg(x: &SampleMatrix, y: &SampleMatrix, z: &SampleMatrix, k: usize) -> Result<MiEstimate> {
    let value = ksg_weighted(x, y, Some(z), k, None)?;
    let mut est = MiEstimate::new(value, MiEstimator::Ksg, Some(k));
    est.warnings.extend(dimension_warning(x.n_cols() + y.n_cols() + z.n_cols()));
    if value < 0.0 {
        est.warnings.push(negative_note());
    }
    Ok(est)
}

fn negative_note() -> Warning {
    Warning {
        code: "negative_estimate".into(),
        message: "KSG returned a negative value (finite-sample bias); reported unclipped".into(),
    }
}

/// −½ ln(1 − ρ²): MI of a bivariate Gaussian with correlation ρ.
pub fn mi_gaussian_oracle(rho: f64) -> Result<f64> {
    if rho.is_nan() || rho.abs() >= 1.0 {
        return Err(Error::InvalidConfig(format!("|rho| must be < 1, got {rho}")));
    }
    Ok(-0.5 * (1.0 - rho * rho).ln())
}

/// H(X) + H(Y) − H(X,Y) evaluated on the joint table; the identity the
/// plugin estimator must satisfy.
pub fn mi_via_entropies(joint: &JointTable) -> f64 {
    shannon(joint.marginal(0).probs()) + shannon(joint.marginal(1).probs()) - shannon(joint.probs())
}
