//! Ground-truth generators: coupled autoregressions, planted networks and
//! small binary systems with known structure.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::causal::{CoarseGraining, Tpm};
use crate::data::{DiscreteSeries, SampleMatrix};
use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Discarded warm-up steps for every autoregression.
pub const BURN_IN: usize = 200;
/// Autoregressive coefficient of every simulated stream.
pub const AR_COEF: f64 = 0.5;

fn normals(n: usize, seed: RngSeed, stream: u64) -> Vec<f64> {
    let mut rng = seed.substream(stream);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Independent Gaussian white noise.
pub fn white_noise(n: usize, seed: RngSeed) -> Vec<f64> {
    normals(n, seed, 0)
}

/// Unit-noise AR(1) with coefficient `phi`, after burn-in.
pub fn ar1(n: usize, phi: f64, seed: RngSeed) -> Vec<f64> {
    let e = normals(n + BURN_IN, seed, 0);
    let mut x = vec![0.0; n + BURN_IN];
    for t in 1..x.len() {
        x[t] = phi * x[t - 1] + e[t];
    }
    x.split_off(BURN_IN)
}

/// Returns `(source, target)` with `Y` an AR(1) and
/// `X_{t+1} = 0.5 X_t + c Y_{t+1-delay} + ε`.
pub fn coupled_ar(n: usize, c: f64, delay: usize, seed: RngSeed) -> Result<(Vec<f64>, Vec<f64>)> {
    if delay == 0 {
        return Err(Error::InvalidConfig("coupling delay must be at least 1".into()));
    }
    let total = n + BURN_IN;
    let y = ar1(total, AR_COEF, seed.derive(1));
    let e = normals(total, seed, 2);
    let mut x = vec![0.0; total];
    for t in delay..total - 1 {
        x[t + 1] = AR_COEF * x[t] + c * y[t + 1 - delay] + e[t + 1];
    }
    Ok((y[BURN_IN..].to_vec(), x.split_off(BURN_IN)))
}

/// A directed coupling `source → target` at lag one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub strength: f64,
}

/// Linear-Gaussian network of AR(1) streams with the given couplings.
pub fn linear_network(n: usize, streams: usize, edges: &[Edge], seed: RngSeed) -> Result<SampleMatrix> {
    if let Some(e) = edges.iter().find(|e| e.source >= streams || e.target >= streams || e.source == e.target) {
        return Err(Error::InvalidConfig(format!("edge {} -> {} is invalid", e.source, e.target)));
    }
    let total = n + BURN_IN;
    let noise: Vec<Vec<f64>> = (0..streams).map(|j| normals(total, seed, j as u64)).collect();
    let mut x = vec![vec![0.0; total]; streams];
    for t in 1..total {
        for j in 0..streams {
            let drive: f64 = edges.iter().filter(|e| e.target == j).map(|e| e.strength * x[e.source][t - 1]).sum();
            x[j][t] = AR_COEF * x[j][t - 1] + drive + noise[j][t];
        }
    }
    let cols: Vec<&[f64]> = x.iter().map(|c| &c[BURN_IN..]).collect();
    let names = (0..streams).map(stream_name).collect();
    Ok(SampleMatrix::from_columns(&cols)?.with_names(names)?.time_ordered(true))
}

/// "A", "B", ... for the first 26 streams, then "S26", "S27", ...
pub fn stream_name(j: usize) -> String {
    if j < 26 {
        char::from(b'A' + j as u8).to_string()
    } else {
        format!("S{j}")
    }
}

/// Five streams with the single planted edge A → B.
pub fn planted_network(n: usize, seed: RngSeed) -> SampleMatrix {
    linear_network(n, 5, &[Edge { source: 0, target: 1, strength: 0.5 }], seed).expect("fixed valid layout")
}

/// The chain A → B → C.
pub fn chain(n: usize, seed: RngSeed) -> SampleMatrix {
    let edges = [Edge { source: 0, target: 1, strength: 0.6 }, Edge { source: 1, target: 2, strength: 0.6 }];
    linear_network(n, 3, &edges, seed).expect("fixed valid layout")
}

/// Standard bivariate normal pair with correlation `rho`.
pub fn gaussian_pair(n: usize, rho: f64, seed: RngSeed) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(-1.0 < rho && rho < 1.0) {
        return Err(Error::InvalidConfig(format!("correlation {rho} must lie in (-1, 1)")));
    }
    let a = normals(n, seed, 0);
    let b = normals(n, seed, 1);
    let s = (1.0 - rho * rho).sqrt();
    let y = a.iter().zip(&b).map(|(a, b)| rho * a + s * b).collect();
    Ok((a, y))
}

/// Four micro states: three that scatter uniformly among themselves and one
/// fixed point, with the grain that lumps the first three together.
pub fn degenerate_micro() -> (Tpm, CoarseGraining) {
    let third = 1.0 / 3.0;
    let rows = [
        vec![third, third, third, 0.0],
        vec![third, third, third, 0.0],
        vec![third, third, third, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
    ];
    let tpm = Tpm::from_rows(2, &rows).expect("rows are stochastic");
    let grain = CoarseGraining::new(vec![vec![0, 1, 2], vec![3]], 4).expect("valid grouping");
    (tpm, grain)
}

/// Node 0 keeps its value; node 1 is a fair coin.
pub fn self_copy_system() -> Tpm {
    let rows: Vec<Vec<f64>> = (0..4).map(|s: usize| vec![(s & 1) as f64, 0.5]).collect();
    Tpm::from_state_by_node(2, &rows).expect("valid probabilities")
}

/// Three nodes: V (node 0) copies the hidden environment node H (node 2),
/// which persists with probability `1 - flip`; S (node 1) is a fair coin
/// standing in for the recorded part of the environment.
pub fn reactive_system(flip: f64) -> Result<Tpm> {
    if !(0.0..=1.0).contains(&flip) {
        return Err(Error::InvalidConfig(format!("flip probability {flip} outside [0, 1]")));
    }
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|s: usize| {
            let h = s >> 2 & 1;
            let keep_on = if h == 1 { 1.0 - flip } else { flip };
            vec![h as f64, 0.5, keep_on]
        })
        .collect();
    Tpm::from_state_by_node(3, &rows)
}

/// Runs `trials` trajectories of `steps` states each from uniformly drawn
/// start states. Trial `i` uses substream `i`.
pub fn run_tpm(tpm: &Tpm, trials: usize, steps: usize, seed: RngSeed) -> Vec<Vec<usize>> {
    let k = tpm.n_states();
    (0..trials)
        .map(|i| {
            let mut rng = seed.substream(i as u64);
            let mut state = rng.random_range(0..k);
            let mut path = Vec::with_capacity(steps);
            for _ in 0..steps {
                path.push(state);
                let u: f64 = rng.random();
                let row = tpm.row(state);
                let mut acc = 0.0;
                // Falls back to the last state with mass if rounding leaves u
                // above the cumulative sum.
                state = row.iter().rposition(|p| *p > 0.0).unwrap_or(0);
                for (to, p) in row.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        state = to;
                        break;
                    }
                }
            }
            path
        })
        .collect()
}

/// The binary series of one node along a trajectory.
pub fn node_series(path: &[usize], node: usize) -> DiscreteSeries {
    DiscreteSeries::new(path.iter().map(|s| s >> node & 1).collect(), 2).expect("bits are in range")
}
