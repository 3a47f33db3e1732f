use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Noise, SampleSet};
use crate::eignets::{Estimator, PrefabNetwork};
use crate::error::{Error, Result};
use crate::filters::mollifier_ramp;
use crate::systems::{GridMeasure, Point, System};

/// Smooth bump ψ: 1 on B(x_0, r), 0 outside B(x_0, 3r), with mass 𝔪 = ∫ψ dμ*.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BumpWeight {
    pub system: System,
    pub center: Point,
    pub radius: f64,
    pub mass: f64,
}

impl BumpWeight {
    pub fn eval(&self, x: &Point) -> f64 {
        let d = self.system.distance(x, &self.center);
        mollifier_ramp((3.0 * self.radius - d) / (2.0 * self.radius))
    }

    /// Probes of B(x_0, r): equispaced on the circle and line, a fine grid
    /// restricted to the ball otherwise.
    pub fn ball_probes(&self, count: usize) -> Vec<Point> {
        super::ball_points(self.system, &self.center, self.radius, count)
    }
}

/// Builds ψ around `center`; 3r must stay below the wrap scale π on compact
/// spaces.
pub fn build_bump(system: System, center: Point, radius: f64) -> Result<BumpWeight> {
    system.validate(&center)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("bump radius must be positive, got {radius}")));
    }
    if system.is_compact() && 3.0 * radius >= std::f64::consts::PI {
        return Err(Error::RadiusTooLarge {
            three_r: 3.0 * radius,
            limit: std::f64::consts::PI,
        });
    }
    let mut bump = BumpWeight {
        system,
        center,
        radius,
        mass: 1.0,
    };
    let grid = match system {
        System::Hermite { .. } => {
            let mut g = GridMeasure::fine(system, 1 << 14, 3.0 * radius);
            g.nodes.iter_mut().for_each(|p| *p = Point::line(p.x() + center.x()));
            g
        }
        System::Torus { q: 1 } => GridMeasure::fine(system, 1 << 16, 0.0),
        System::Torus { .. } => GridMeasure::fine(system, 1 << 20, 0.0),
        System::Sphere2 => GridMeasure::fine(system, 1 << 20, 0.0),
    };
    bump.mass = grid.integrate(|p| bump.eval(p));
    Ok(bump)
}

/// Local estimate on B(x_0, r) with its error against the target.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalRecovery {
    pub probes: Vec<Point>,
    pub estimate: Vec<f64>,
    pub truth: Vec<f64>,
    pub sup_error: f64,
    /// Raw points drawn and points kept by the bump sub-sampling.
    pub raw: usize,
    pub kept: usize,
}

/// Keeps each raw point with probability ψ(y); the kept points follow
/// ν* = (ψ/𝔪) dμ* when the raw points follow μ*.
pub fn local_subsample(bump: &BumpWeight, raw: &[Point], seed: u64) -> Vec<Point> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    raw.iter().filter(|p| rng.random::<f64>() < bump.eval(p)).copied().collect()
}

/// Draws raw points from μ* (uniform on the bump support on the line) until
/// `size` of them survive the sub-sampling. Returns the kept points and the
/// number of raw draws.
pub fn local_sample(bump: &BumpWeight, size: usize, seed: u64) -> Result<(Vec<Point>, usize)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::with_capacity(size);
    let mut raw = 0usize;
    let cap = 1000 * (size + 10);
    while kept.len() < size {
        let p = match bump.system {
            System::Hermite { .. } => {
                let h = 3.0 * bump.radius;
                Point::line(bump.center.x() + rng.random_range(-h..=h))
            }
            sys => sys.sample_one(&mut rng, 1.0),
        };
        raw += 1;
        if rng.random::<f64>() < bump.eval(&p) {
            kept.push(p);
        }
        if raw > cap {
            return Err(Error::NoLocalData);
        }
    }
    Ok((kept, raw))
}

/// (𝔪/|Y|) Σ F(y) 𝔾_n(·, y) on B(x_0, r), with Y sub-sampled from `raw` by ψ.
#[allow(clippy::too_many_arguments)]
pub fn local_recover(
    net: &PrefabNetwork,
    bump: &BumpWeight,
    raw: &[Point],
    f: &(dyn Fn(&Point) -> f64 + Sync),
    noise: Noise,
    seed: u64,
    probes: usize,
) -> Result<LocalRecovery> {
    let kept = local_subsample(bump, raw, seed);
    if kept.is_empty() {
        return Err(Error::NoLocalData);
    }
    finish(net, bump, kept, raw.len(), f, noise, seed, probes)
}

/// As [`local_recover`] with raw points drawn until |Y| = `size`.
pub fn local_recover_sized(
    net: &PrefabNetwork,
    bump: &BumpWeight,
    size: usize,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    noise: Noise,
    seed: u64,
    probes: usize,
) -> Result<LocalRecovery> {
    let (kept, raw) = local_sample(bump, size, seed)?;
    finish(net, bump, kept, raw, f, noise, seed, probes)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    net: &PrefabNetwork,
    bump: &BumpWeight,
    kept: Vec<Point>,
    raw: usize,
    f: &(dyn Fn(&Point) -> f64 + Sync),
    noise: Noise,
    seed: u64,
    probes: usize,
) -> Result<LocalRecovery> {
    let samples = SampleSet::observe(bump.system, kept, f, noise, seed);
    let est = Estimator::scaled(net, &samples.points, &samples.values, bump.mass)?;
    let probes = bump.ball_probes(probes);
    let estimate = est.eval_many(&probes);
    let truth: Vec<f64> = probes.par_iter().map(f).collect();
    let sup_error = estimate.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LocalRecovery {
        probes,
        estimate,
        truth,
        sup_error,
        raw,
        kept: samples.len(),
    })
}

/// (1/|Y|) Σ 𝔾_n(·, y) against a known density.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub probes: Vec<Point>,
    pub estimate: Vec<f64>,
    pub truth: Vec<f64>,
    pub sup_error: f64,
    /// ∫ f̂_0 dμ* on a reference grid.
    pub integral: f64,
}

pub fn estimate_density(
    net: &PrefabNetwork,
    points: &[Point],
    probes: &[Point],
    f0: &(dyn Fn(&Point) -> f64 + Sync),
) -> Result<DensityEstimate> {
    let ones = vec![1.0; points.len()];
    let est = Estimator::new(net, points, &ones)?;
    let estimate = est.eval_many(probes);
    let truth: Vec<f64> = probes.par_iter().map(f0).collect();
    let sup_error = estimate.iter().zip(&truth).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let grid = match net.kernel.system {
        System::Hermite { .. } => {
            let half = points.iter().map(|p| p.x().abs()).fold(0.0, f64::max) + 8.0;
            GridMeasure::fine(net.kernel.system, 1 << 14, half)
        }
        sys => GridMeasure::new(sys, 8.0 * net.n),
    };
    let values = est.eval_many(&grid.nodes);
    let integral = grid.weights.iter().zip(&values).map(|(w, v)| w * v).sum();
    Ok(DensityEstimate {
        probes: probes.to_vec(),
        estimate,
        truth,
        sup_error,
        integral,
    })
}
