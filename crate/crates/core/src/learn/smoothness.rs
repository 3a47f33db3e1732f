use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ball_points, estimator_network, SampleSet};
use crate::eignets::{Estimator, PrefabNetwork};
use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::systems::{Point, System};

/// t_j at or below this multiple of max |F| counts as zero.
const ZERO_LEVEL: f64 = 1e-10;

/// Networks at the dyadic scales 2^j, built once and shared across centers
/// and seeds.
#[derive(Clone, Debug)]
pub struct NetworkChain {
    pub system: System,
    pub nets: BTreeMap<u32, PrefabNetwork>,
}

impl NetworkChain {
    /// Estimator networks at 2^j for j in `lo..=hi`.
    pub fn build(system: System, filter: Filter, lo: u32, hi: u32) -> Result<Self> {
        let nets = (lo..=hi)
            .map(|j| Ok((j, estimator_network(system, filter, 2f64.powi(j as i32))?)))
            .collect::<Result<_>>()?;
        Ok(NetworkChain { system, nets })
    }

    fn get(&self, j: u32) -> Result<&PrefabNetwork> {
        self.nets
            .get(&j)
            .ok_or_else(|| Error::InvalidArgument(format!("network chain has no scale 2^{j}")))
    }
}

/// Fitted decay exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Exponent {
    Finite(f64),
    /// Some t_j vanished: the target is band-limited at that scale.
    Infinite,
    /// Fewer than four levels in the fit range.
    Undetermined,
}

impl Exponent {
    /// Finite value, +∞ for the sentinel, NaN when undetermined.
    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(v) => *v,
            Exponent::Infinite => f64::INFINITY,
            Exponent::Undetermined => f64::NAN,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub center: Point,
    pub radius: f64,
    /// (j, t_j) with t_j = sup over the ball of |𝒢_{2^j}(Y_j) − 𝒢_{2^{j−1}}(Y_j)|.
    pub levels: Vec<(u32, f64)>,
    pub gamma: Exponent,
    pub fit_range: (u32, u32),
    /// Root-mean-square residual of the log₂ fit.
    pub fit_residual: Option<f64>,
    /// On the line the conclusion concerns the φ_0-weighted class.
    pub weighted_class: bool,
}

/// Computes t_j for `levels` using the per-level samples returned by
/// `samples(j)` and fits γ̂ over j ≥ `fit_from`.
pub fn smoothness_profile(
    chain: &NetworkChain,
    center: Point,
    radius: f64,
    probes: usize,
    levels: std::ops::RangeInclusive<u32>,
    fit_from: u32,
    samples: &dyn Fn(u32) -> Result<SampleSet>,
) -> Result<SmoothnessReport> {
    let sys = chain.system;
    let ball = ball_points(sys, &center, radius, probes);
    let mut out = Vec::new();
    let mut scale: f64 = 0.0;
    for j in levels.clone() {
        if j == 0 {
            return Err(Error::InvalidArgument("levels start at j = 1".into()));
        }
        let y = samples(j)?;
        scale = scale.max(y.values.iter().fold(0.0, |a: f64, v| a.max(v.abs())));
        let hi = Estimator::new(chain.get(j)?, &y.points, &y.values)?;
        let lo = Estimator::new(chain.get(j - 1)?, &y.points, &y.values)?;
        let a = hi.eval_many(&ball);
        let b = lo.eval_many(&ball);
        let t = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        out.push((j, t));
    }
    let fit: Vec<(u32, f64)> = out.iter().copied().filter(|(j, _)| *j >= fit_from).collect();
    let (gamma, fit_residual) = fit_exponent(&fit, ZERO_LEVEL * scale.max(f64::MIN_POSITIVE));
    Ok(SmoothnessReport {
        center,
        radius,
        levels: out,
        gamma,
        fit_range: (fit_from.max(*levels.start()), *levels.end()),
        fit_residual,
        weighted_class: !sys.is_compact(),
    })
}

/// Negated least-squares slope of log₂ t_j against j.
pub fn fit_exponent(levels: &[(u32, f64)], zero: f64) -> (Exponent, Option<f64>) {
    if levels.len() < 4 {
        return (Exponent::Undetermined, None);
    }
    if levels.iter().any(|(_, t)| *t <= zero) {
        return (Exponent::Infinite, None);
    }
    let pts: Vec<(f64, f64)> = levels.iter().map(|(j, t)| (*j as f64, t.log2())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rms = (pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum::<f64>() / n).sqrt();
    (Exponent::Finite(-slope), Some(rms))
}
