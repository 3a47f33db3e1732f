//! Sample-driven estimators: local recovery on a ball, density estimation
//! and local smoothness profiles.

mod local;
mod smoothness;

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eignets::{EignetKernel, Mask, PrefabNetwork};
use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::systems::{GridMeasure, Point, System};

pub use local::{
    build_bump, estimate_density, local_recover, local_recover_sized, local_sample, BumpWeight, DensityEstimate,
    LocalRecovery,
};
pub use smoothness::{fit_exponent, smoothness_profile, Exponent, NetworkChain, SmoothnessReport};

/// Decay rate of the multiquadric-type mask used by the estimators.
pub const ESTIMATOR_ALPHA: f64 = 0.25;
/// Bound on b(B*n)/b(n) used to pick B* per scale.
pub const ESTIMATOR_TAIL: f64 = 1e-12;

/// Prefabricated network used by the estimators at scale n: the
/// exp-decay mask with α = 0.25 (the Mehler pair on the line) on a classical
/// product-exact rule of order B*·n.
pub fn estimator_network(system: System, filter: Filter, n: f64) -> Result<PrefabNetwork> {
    let kernel = match system {
        System::Hermite { .. } => EignetKernel::new(system, Mask::mehler()),
        _ => {
            let mask = Mask::exp_decay(system.q(), ESTIMATOR_ALPHA);
            let b = mask.auto_b_star(n, ESTIMATOR_TAIL);
            EignetKernel::new(system, mask.with_b_star(b))
        }
    };
    PrefabNetwork::with_exact_rule(kernel, filter, n)
}

/// `count` probes of the ball B(center, r).
pub(crate) fn ball_points(sys: System, center: &Point, r: f64, count: usize) -> Vec<Point> {
    let at = |i: usize| center.x() - r + 2.0 * r * i as f64 / (count.max(2) - 1) as f64;
    match sys {
        System::Torus { q: 1 } => (0..count).map(|i| Point::angle(at(i).rem_euclid(TAU))).collect(),
        System::Hermite { .. } => (0..count).map(|i| Point::line(at(i))).collect(),
        _ => {
            let grid = GridMeasure::fine(sys, count * (1.0 / sys.ball_measure(r)).ceil() as usize, 0.0);
            grid.nodes.into_iter().filter(|p| sys.distance(p, center) <= r).collect()
        }
    }
}

/// Density f_0 of the sampling law ν* = f_0 dμ*.
#[derive(Clone)]
pub enum Density {
    /// f_0 ≡ 1 on a compact space.
    Uniform,
    /// f_0(x) = 1 + cos x on the circle.
    OnePlusCos,
    /// f_0 = ψ / 𝔪 for a bump ψ.
    Bump(BumpWeight),
    Custom {
        name: String,
        f: Arc<dyn Fn(&Point) -> f64 + Send + Sync>,
        /// Upper bound on f_0 for rejection sampling.
        bound: f64,
        /// Support [−half, half] on the line.
        half_width: Option<f64>,
    },
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Density::Uniform => write!(f, "Uniform"),
            Density::OnePlusCos => write!(f, "OnePlusCos"),
            Density::Bump(b) => write!(f, "Bump({:?}, r = {})", b.center, b.radius),
            Density::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl Density {
    pub fn eval(&self, x: &Point) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::OnePlusCos => 1.0 + x.x().cos(),
            Density::Bump(b) => b.eval(x) / b.mass,
            Density::Custom { f, .. } => f(x),
        }
    }

    fn bound(&self) -> f64 {
        match self {
            Density::Uniform => 1.0,
            Density::OnePlusCos => 2.0,
            Density::Bump(b) => 1.0 / b.mass,
            Density::Custom { bound, .. } => *bound,
        }
    }

    /// Proposal interval on the line.
    fn half_width(&self) -> Option<f64> {
        match self {
            Density::Bump(b) => Some(b.center.x().abs() + 3.0 * b.radius),
            Density::Custom { half_width, .. } => *half_width,
            _ => None,
        }
    }

    /// ∫ f_0 dμ* on a fine reference grid.
    pub fn total_mass(&self, system: System) -> f64 {
        let grid = match system {
            System::Hermite { .. } => GridMeasure::fine(system, 1 << 16, self.half_width().unwrap_or(1.0)),
            System::Torus { q: 1 } => GridMeasure::new(system, 1024.0),
            System::Torus { .. } => GridMeasure::new(system, 96.0),
            System::Sphere2 => GridMeasure::new(system, 128.0),
        };
        grid.integrate(|p| self.eval(p))
    }
}

/// How sample locations are generated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingDesign {
    /// Independent draws from ν* by rejection from μ*.
    #[default]
    Iid,
    /// Randomly shifted lattice pushed through the inverse distribution
    /// function of ν* (circle and uniform 2-torus only).
    ShiftedLattice,
}

/// Bounded additive noise: F = clip(f(y) + ε, [−1, 1]) with ε uniform on
/// [−level, level].
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub level: f64,
}

impl Noise {
    pub fn none() -> Self {
        Noise { level: 0.0 }
    }

    pub fn uniform(level: f64) -> Self {
        Noise { level }
    }
}

/// Locations y_j with observations F(y_j, ε_j).
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub system: System,
    pub points: Vec<Point>,
    pub noise: Vec<f64>,
    pub values: Vec<f64>,
    pub seed: u64,
}

impl SampleSet {
    /// Draws `m` locations from ν* and observes `f` with `noise`.
    pub fn generate(
        system: System,
        density: &Density,
        f: &dyn Fn(&Point) -> f64,
        noise: Noise,
        m: usize,
        design: SamplingDesign,
        seed: u64,
    ) -> Result<Self> {
        let points = draw_points(system, density, m, design, seed)?;
        Ok(Self::observe(system, points, f, noise, seed))
    }

    /// Observes `f` at given locations; the noise stream is derived from `seed`.
    pub fn observe(system: System, points: Vec<Point>, f: &dyn Fn(&Point) -> f64, noise: Noise, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let eps: Vec<f64> = points
            .iter()
            .map(|_| if noise.level > 0.0 { rng.random_range(-noise.level..=noise.level) } else { 0.0 })
            .collect();
        let values = points
            .iter()
            .zip(&eps)
            .map(|(p, e)| (f(p) + e).clamp(-1.0, 1.0))
            .collect();
        SampleSet {
            system,
            points,
            noise: eps,
            values,
            seed,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Same locations with F scaled by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// `m` locations distributed according to ν* = f_0 dμ*.
pub fn draw_points(system: System, density: &Density, m: usize, design: SamplingDesign, seed: u64) -> Result<Vec<Point>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match design {
        SamplingDesign::Iid => rejection(system, density, m, &mut rng),
        SamplingDesign::ShiftedLattice => lattice(system, density, m, &mut rng),
    }
}

fn rejection(system: System, density: &Density, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let bound = density.bound();
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidArgument(format!("density bound must be positive, got {bound}")));
    }
    let half = match system {
        System::Hermite { .. } => Some(density.half_width().ok_or_else(|| {
            Error::Unsupported("densities on the line need a bounded support".into())
        })?),
        _ => None,
    };
    if matches!((system, density), (System::Hermite { .. }, Density::Uniform)) {
        return Err(Error::Unsupported("no uniform probability law on the line".into()));
    }
    let mut out = Vec::with_capacity(m);
    let mut tries: u64 = 0;
    while out.len() < m {
        let p = match half {
            Some(h) => Point::line(rng.random_range(-h..=h)),
            None => system.sample_one(rng, 1.0),
        };
        if rng.random::<f64>() * bound < density.eval(&p) {
            out.push(p);
        }
        tries += 1;
        if tries > 10_000 * (m as u64 + 10) {
            return Err(Error::InvalidArgument("rejection sampler accepts almost nothing".into()));
        }
    }
    Ok(out)
}

fn lattice(system: System, density: &Density, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Point>> {
    let shift: f64 = rng.random();
    match (system, density) {
        (System::Torus { q: 1 }, Density::Uniform) => {
            Ok((0..m).map(|i| Point::angle(TAU * (i as f64 + shift) / m as f64)).collect())
        }
        (System::Torus { q: 1 }, _) => {
            let inv = InverseCdf::new(|x| density.eval(&Point::angle(x)));
            Ok((0..m).map(|i| Point::angle(inv.eval((i as f64 + shift) / m as f64))).collect())
        }
        (System::Torus { q: 2 }, Density::Uniform) => {
            let per = (m as f64).sqrt().round().max(1.0) as usize;
            let s2: f64 = rng.random();
            let h = TAU / per as f64;
            Ok((0..per)
                .flat_map(|i| (0..per).map(move |j| Point::angles((i as f64 + shift) * h, (j as f64 + s2) * h)))
                .collect())
        }
        _ => Err(Error::Unsupported(format!(
            "shifted lattice sampling of {density:?} on {system}"
        ))),
    }
}

/// Tabulated inverse of the distribution function of a density on [0, 2π).
struct InverseCdf {
    cdf: Vec<f64>,
    h: f64,
}

impl InverseCdf {
    const CELLS: usize = 1 << 16;

    fn new(f: impl Fn(f64) -> f64) -> Self {
        let h = TAU / Self::CELLS as f64;
        let mut cdf = Vec::with_capacity(Self::CELLS + 1);
        let mut acc = 0.0;
        cdf.push(0.0);
        for i in 0..Self::CELLS {
            // Simpson on each cell.
            let a = i as f64 * h;
            acc += h / 6.0 * (f(a) + 4.0 * f(a + h / 2.0) + f(a + h));
            cdf.push(acc);
        }
        let total = acc;
        cdf.iter_mut().for_each(|c| *c /= total);
        InverseCdf { cdf, h }
    }

    fn eval(&self, u: f64) -> f64 {
        let i = self.cdf.partition_point(|&c| c <= u).clamp(1, Self::CELLS);
        let (lo, hi) = (self.cdf[i - 1], self.cdf[i]);
        let t = if hi > lo { (u - lo) / (hi - lo) } else { 0.5 };
        ((i - 1) as f64 + t) * self.h
    }
}
