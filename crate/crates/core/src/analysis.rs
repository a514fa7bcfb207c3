//! Closed-form loads, bounds and the memory-sharing envelope, all exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::delivery::SubMessage;
use crate::load::{binomial, LoadValue};
use crate::model::SystemParams;

fn c(n: usize, k: usize) -> BigInt {
    binomial(n as i64, k as i64)
}

fn ratio(num: BigInt, den: BigInt) -> LoadValue {
    LoadValue::from_ratio(BigRational::new(num, den))
}

/// `C(K-1, Ŝ) / C(K-1, Ŝ-1)`.
pub fn load_universal(k: usize, shat: usize) -> LoadValue {
    ratio(c(k - 1, shat), c(k - 1, shat - 1))
}

/// `(C(K-1, Ŝ) - C(γ-1, Ŝ)) / C(K-1, Ŝ-1)`.
pub fn load_graph_based(k: usize, shat: usize, gamma: usize) -> LoadValue {
    ratio(c(k - 1, shat) - c(gamma - 1, shat), c(k - 1, shat - 1))
}

/// Converse: `K - γ` demanding workers, each charged one file minus what the union of the
/// previous workers' caches can hold of it.
pub fn lower_bound(k: usize, shat: usize, gamma: usize) -> LoadValue {
    (1..=k - gamma)
        .map(|alpha| LoadValue::integer(1) - mu_alpha_bound(k, shat, alpha))
        .sum()
}

/// `(N/K) C(K-1, Ŝ) / C(K-1, Ŝ-1)`.
pub fn load_general(n: usize, k: usize, shat: usize) -> LoadValue {
    LoadValue::integer((n / k) as i64) * load_universal(k, shat)
}

/// The cyclic block shift attains the general bound.
pub fn worst_case_load(n: usize, k: usize, shat: usize) -> LoadValue {
    load_general(n, k, shat)
}

/// Sum of per-subgraph graph-based loads.
pub fn load_decomposition(k: usize, shat: usize, gammas: &[usize]) -> LoadValue {
    gammas.iter().map(|&g| load_graph_based(k, shat, g)).sum()
}

/// `Σ C(γ_i - 1, Ŝ) / C(K-1, Ŝ-1)`.
pub fn decomposition_saving(k: usize, shat: usize, gammas: &[usize]) -> LoadValue {
    gammas
        .iter()
        .map(|&g| ratio(c(g - 1, shat), c(k - 1, shat - 1)))
        .sum()
}

/// `1 - C(K-α-1, Ŝ-1) / C(K-1, Ŝ-1)`.
pub fn mu_alpha_bound(k: usize, shat: usize, alpha: usize) -> LoadValue {
    let rest = if alpha + 1 > k { BigInt::zero() } else { c(k - alpha - 1, shat - 1) };
    LoadValue::integer(1) - ratio(rest, c(k - 1, shat - 1))
}

pub fn measured_load(broadcast: &[SubMessage], params: &SystemParams) -> LoadValue {
    LoadValue::new(broadcast.len() as i64, params.subfiles_per_file() as i64)
}

/// Corner points `(S, R(S))` for `S = 1..=K` with `N = K`, and their lower convex hull.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub k: usize,
    pub gamma: usize,
    pub corner_points: Vec<(usize, LoadValue)>,
    pub hull: Vec<(usize, LoadValue)>,
}

fn cross(o: &(usize, LoadValue), a: &(usize, LoadValue), b: &(usize, LoadValue)) -> BigRational {
    let ax = BigRational::from_integer(BigInt::from(a.0) - BigInt::from(o.0));
    let bx = BigRational::from_integer(BigInt::from(b.0) - BigInt::from(o.0));
    let ay = a.1.as_ratio() - o.1.as_ratio();
    let by = b.1.as_ratio() - o.1.as_ratio();
    ax * by - ay * bx
}

pub fn tradeoff_curve(k: usize, gamma: usize) -> TradeoffCurve {
    let corner_points: Vec<(usize, LoadValue)> =
        (1..=k).map(|s| (s, load_graph_based(k, s, gamma))).collect();
    let mut hull: Vec<(usize, LoadValue)> = Vec::new();
    for p in &corner_points {
        while hull.len() >= 2 && cross(&hull[hull.len() - 2], &hull[hull.len() - 1], p) <= BigRational::zero() {
            hull.pop();
        }
        hull.push(p.clone());
    }
    TradeoffCurve {
        k,
        gamma,
        corner_points,
        hull,
    }
}

impl TradeoffCurve {
    /// Piecewise-linear hull value at a rational cache size in `[1, K]`.
    pub fn envelope(&self, s: &BigRational) -> Option<LoadValue> {
        for w in self.hull.windows(2) {
            let (x0, y0) = (BigRational::from_integer(w[0].0.into()), w[0].1.as_ratio());
            let (x1, y1) = (BigRational::from_integer(w[1].0.into()), w[1].1.as_ratio());
            if &x0 <= s && s <= &x1 {
                let t = (s - &x0) / (&x1 - &x0);
                return Some(LoadValue::from_ratio(y0 + t * (y1 - y0)));
            }
        }
        match self.hull.as_slice() {
            [(x, y)] if BigRational::from_integer((*x).into()) == *s => Some(y.clone()),
            _ => None,
        }
    }
}

/// Memory-sharing load at fractional cache size `s` for `N = K`.
pub fn envelope_load(k: usize, gamma: usize, s: &BigRational) -> Option<LoadValue> {
    tradeoff_curve(k, gamma).envelope(s)
}
