//! KL divergence, cross-entropy and Jensen-Shannon divergence for discrete
//! distributions.

use serde::{Deserialize, Serialize};

use crate::data::ProbTable;
use crate::entropy::shannon;
use crate::error::{Error, Result};

/// Which argument is the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// D(p‖q)
    Forward,
    /// D(q‖p)
    Reverse,
}

/// Handling of zero reference mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Smoothing {
    /// Fail on a support violation.
    #[default]
    None,
    /// Add ε to every cell of both distributions, then renormalize.
    Additive(f64),
    /// Raise reference cells below the floor to the floor, then renormalize.
    ClipFloor(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceResult {
    /// Nats.
    pub value: f64,
    pub direction: Direction,
    pub smoothing: Smoothing,
}

fn check_pair(p: &ProbTable, q: &ProbTable) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::InvalidInput(format!("alphabet sizes differ: {} vs {}", p.len(), q.len())));
    }
    Ok(())
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

/// Apply smoothing to (target, reference).
fn smooth(target: &[f64], reference: &[f64], smoothing: Smoothing) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut t = target.to_vec();
    let mut r = reference.to_vec();
    match smoothing {
        Smoothing::None => {}
        Smoothing::Additive(eps) => {
            if !(eps > 0.0 && eps.is_finite()) {
                return Err(Error::InvalidConfig(format!("additive ε must be positive, got {eps}")));
            }
            t.iter_mut().for_each(|x| *x += eps);
            r.iter_mut().for_each(|x| *x += eps);
            normalize(&mut t);
            normalize(&mut r);
        }
        Smoothing::ClipFloor(floor) => {
            if !(floor > 0.0 && floor < 1.0) {
                return Err(Error::InvalidConfig(format!("clip floor must be in (0, 1), got {floor}")));
            }
            r.iter_mut().for_each(|x| *x = x.max(floor));
            normalize(&mut r);
        }
    }
    Ok((t, r))
}

/// Σ t ln(t / r); `DisjointSupport` where r = 0 < t.
fn kl_raw(t: &[f64], r: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&ti, &ri)) in t.iter().zip(r).enumerate() {
        if ti > 0.0 {
            if ri <= 0.0 {
                return Err(Error::DisjointSupport { index: i });
            }
            acc += ti * (ti / ri).ln();
        }
    }
    Ok(acc.max(0.0))
}

/// KL divergence in the requested direction.
pub fn kl_discrete(
    p: &ProbTable,
    q: &ProbTable,
    smoothing: Smoothing,
    direction: Direction,
) -> Result<DivergenceResult> {
    check_pair(p, q)?;
    let (target, reference) = match direction {
        Direction::Forward => (p, q),
        Direction::Reverse => (q, p),
    };
    let (t, r) = smooth(target.probs(), reference.probs(), smoothing)?;
    Ok(DivergenceResult { value: kl_raw(&t, &r)?, direction, smoothing })
}

/// H(p, q) = −Σ p ln q, after the same smoothing as [`kl_discrete`].
pub fn cross_entropy(p: &ProbTable, q: &ProbTable, smoothing: Smoothing) -> Result<f64> {
    check_pair(p, q)?;
    let (t, r) = smooth(p.probs(), q.probs(), smoothing)?;
    let mut acc = 0.0;
    for (i, (&ti, &ri)) in t.iter().zip(&r).enumerate() {
        if ti > 0.0 {
            if ri <= 0.0 {
                return Err(Error::DisjointSupport { index: i });
            }
            acc -= ti * ri.ln();
        }
    }
    Ok(acc)
}

/// ½ D(p‖m) + ½ D(q‖m), m = (p + q)/2. Finite, symmetric, at most ln 2.
pub fn jensen_shannon(p: &ProbTable, q: &ProbTable) -> Result<f64> {
    check_pair(p, q)?;
    let m: Vec<f64> = p.probs().iter().zip(q.probs()).map(|(a, b)| 0.5 * (a + b)).collect();
    // m > 0 wherever p or q is, so these never fail.
    let a = kl_raw(p.probs(), &m)?;
    let b = kl_raw(q.probs(), &m)?;
    Ok((0.5 * a + 0.5 * b).clamp(0.0, std::f64::consts::LN_2))
}

/// Entropy of p, used in the cross-entropy decomposition checks.
pub fn entropy(p: &ProbTable) -> f64 {
    shannon(p.probs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn pt(v: &[f64]) -> ProbTable {
        ProbTable::new(v.to_vec()).unwrap()
    }

    #[test]
    fn kl_examples() {
        let p = pt(&[0.3, 0.7]);
        assert_eq!(kl_discrete(&p, &p, Smoothing::None, Direction::Forward).unwrap().value, 0.0);

        let half = pt(&[0.5, 0.5]);
        let quarter = pt(&[0.25, 0.75]);
        let closed = 0.5 * 2f64.ln() + 0.5 * (2.0f64 / 3.0).ln();
        let got = kl_discrete(&half, &quarter, Smoothing::None, Direction::Forward).unwrap();
        assert!((got.value - closed).abs() < 1e-15);
        assert!((got.value - 0.1438).abs() < 1e-4);
        assert_eq!(got.direction, Direction::Forward);

        let err = kl_discrete(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0]), Smoothing::None, Direction::Forward).unwrap_err();
        assert_eq!(err, Error::DisjointSupport { index: 0 });
        assert!(err.to_string().contains("Jensen-Shannon"));
    }

    #[test]
    fn smoothing_makes_disjoint_support_finite() {
        let p = pt(&[1.0, 0.0]);
        let q = pt(&[0.0, 1.0]);
        let a = kl_discrete(&p, &q, Smoothing::Additive(1e-3), Direction::Forward).unwrap();
        let c = kl_discrete(&p, &q, Smoothing::ClipFloor(1e-6), Direction::Forward).unwrap();
        assert!(a.value.is_finite() && a.value > 0.0);
        assert!(c.value.is_finite() && c.value > a.value);
        assert!(kl_discrete(&p, &q, Smoothing::Additive(-1.0), Direction::Forward).is_err());
    }

    #[test]
    fn reverse_direction_swaps_arguments() {
        let p = pt(&[0.9, 0.1]);
        let q = pt(&[0.5, 0.5]);
        let fwd = kl_discrete(&p, &q, Smoothing::None, Direction::Forward).unwrap().value;
        let rev = kl_discrete(&p, &q, Smoothing::None, Direction::Reverse).unwrap().value;
        let rev2 = kl_discrete(&q, &p, Smoothing::None, Direction::Forward).unwrap().value;
        assert_eq!(rev, rev2);
        assert_ne!(fwd, rev);
    }

    #[test]
    fn asymmetry_witness() {
        let p = pt(&[0.98, 0.01, 0.01]);
        let q = pt(&[0.1, 0.45, 0.45]);
        let fwd = kl_discrete(&p, &q, Smoothing::None, Direction::Forward).unwrap().value;
        let rev = kl_discrete(&p, &q, Smoothing::None, Direction::Reverse).unwrap().value;
        assert!((fwd - rev).abs() > 0.1);
    }

    #[test]
    fn cross_entropy_examples() {
        let p = pt(&[0.2, 0.3, 0.5]);
        assert!((cross_entropy(&p, &p, Smoothing::None).unwrap() - entropy(&p)).abs() < 1e-15);
        let h = cross_entropy(&pt(&[0.5, 0.5]), &pt(&[0.25, 0.75]), Smoothing::None).unwrap();
        let direct = -0.5 * 0.25f64.ln() - 0.5 * 0.75f64.ln();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.8370).abs() < 1e-4);
    }

    #[test]
    fn js_examples() {
        let p = pt(&[0.2, 0.8]);
        assert_eq!(jensen_shannon(&p, &p).unwrap(), 0.0);
        let js = jensen_shannon(&pt(&[1.0, 0.0]), &pt(&[0.0, 1.0])).unwrap();
        assert!((js - LN_2).abs() < 1e-15);
    }

    #[test]
    fn smoothing_continuity() {
        let p = pt(&[0.2, 0.3, 0.5]);
        let q = pt(&[0.4, 0.4, 0.2]);
        let exact = kl_discrete(&p, &q, Smoothing::None, Direction::Forward).unwrap().value;
        let mut prev = f64::INFINITY;
        for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
            let s = kl_discrete(&p, &q, Smoothing::Additive(eps), Direction::Forward).unwrap().value;
            let gap = (s - exact).abs();
            assert!(gap <= prev);
            prev = gap;
        }
        assert!(prev < 1e-7);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn dist(k: usize) -> impl Strategy<Value = ProbTable> {
            prop::collection::vec(1e-3f64..1.0, k).prop_map(|v| {
                let s: f64 = v.iter().sum();
                ProbTable::new(v.iter().map(|x| x / s).collect()).unwrap()
            })
        }

        fn pair() -> impl Strategy<Value = (ProbTable, ProbTable)> {
            (2usize..8).prop_flat_map(|k| (dist(k), dist(k)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn gibbs_inequality((p, q) in pair()) {
                let d = kl_discrete(&p, &q, Smoothing::None, Direction::Forward).unwrap().value;
                prop_assert!(d >= 0.0);
                let max_gap = p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                if max_gap > 1e-6 {
                    prop_assert!(d > 0.0);
                }
            }

            #[test]
            fn cross_entropy_decomposes((p, q) in pair()) {
                let ce = cross_entropy(&p, &q, Smoothing::None).unwrap();
                let kl = kl_discrete(&p, &q, Smoothing::None, Direction::Forward).unwrap().value;
                prop_assert!((ce - (entropy(&p) + kl)).abs() < 1e-10);
            }

            #[test]
            fn js_symmetric_and_bounded((p, q) in pair()) {
                let a = jensen_shannon(&p, &q).unwrap();
                let b = jensen_shannon(&q, &p).unwrap();
                prop_assert!((a - b).abs() < 1e-15);
                prop_assert!((0.0..=LN_2).contains(&a));
            }
        }
    }
}
