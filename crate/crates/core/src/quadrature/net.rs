use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{GridMeasure, Point, System};

const TAU: f64 = 2.0 * PI;

/// The compact set K on which mesh norms are measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    /// The whole (compact) space.
    Whole,
    /// The interval [−half, half] of the line.
    Window { half: f64 },
}

impl Region {
    /// Whole space on compact systems, K_n on the line.
    pub fn for_band(system: System, n: f64) -> Self {
        match system.window_half_width(n) {
            Some(half) => Region::Window { half },
            None => Region::Whole,
        }
    }

    fn probes(&self, system: System) -> Vec<Point> {
        let half = match self {
            Region::Whole => 0.0,
            Region::Window { half } => *half,
        };
        let count = match system {
            System::Torus { q: 1 } | System::Hermite { .. } => 8192,
            System::Torus { .. } => 160 * 160,
            System::Sphere2 => 2 * 110 * 110,
        };
        GridMeasure::fine(system, count, half).nodes
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetReport {
    pub nodes: Vec<Point>,
    /// Positions of the kept nodes in the input list.
    pub indices: Vec<usize>,
    /// δ(K, C) = sup_{x∈K} min_{y∈C} ρ(x, y).
    pub mesh_norm: f64,
    /// η(C) = min_{y≠y'} ρ(y, y'); `None` for a single node.
    pub separation: Option<f64>,
    pub region: Region,
}

/// Keeps a point iff it is at distance ≥ `eps` from every point kept so far.
pub fn greedy_net(system: System, points: &[Point], eps: f64, region: Region) -> Result<NetReport> {
    if points.is_empty() {
        return Err(Error::EmptyInput("greedy_net needs at least one point"));
    }
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let mut nodes: Vec<Point> = Vec::new();
    let mut indices = Vec::new();
    for (i, p) in points.iter().enumerate() {
        system.validate(p)?;
        if nodes.iter().all(|c| system.distance(p, c) >= eps) {
            nodes.push(*p);
            indices.push(i);
        }
    }
    let mesh_norm = mesh_norm(system, &nodes, region);
    let separation = separation(system, &nodes);
    Ok(NetReport {
        nodes,
        indices,
        mesh_norm,
        separation,
        region,
    })
}

/// Minimal pairwise distance, `None` when fewer than two nodes.
pub fn separation(system: System, nodes: &[Point]) -> Option<f64> {
    if nodes.len() < 2 {
        return None;
    }
    if let System::Torus { q: 1 } = system {
        let mut a: Vec<f64> = nodes.iter().map(|p| p.x().rem_euclid(TAU)).collect();
        a.sort_by(f64::total_cmp);
        let wrap = a[0] + TAU - a[a.len() - 1];
        return Some(a.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::min));
    }
    (0..nodes.len())
        .into_par_iter()
        .map(|i| {
            (i + 1..nodes.len())
                .map(|j| system.distance(&nodes[i], &nodes[j]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
        .into()
}

/// δ(K, C). Exact on one-dimensional spaces, measured on a dense probe grid
/// otherwise.
pub fn mesh_norm(system: System, nodes: &[Point], region: Region) -> f64 {
    if nodes.is_empty() {
        return f64::INFINITY;
    }
    match (system, region) {
        (System::Torus { q: 1 }, _) => {
            let mut a: Vec<f64> = nodes.iter().map(|p| p.x().rem_euclid(TAU)).collect();
            a.sort_by(f64::total_cmp);
            let wrap = a[0] + TAU - a[a.len() - 1];
            a.windows(2).map(|w| w[1] - w[0]).fold(wrap, f64::max) / 2.0
        }
        (System::Hermite { .. }, Region::Window { half }) => {
            let mut a: Vec<f64> = nodes.iter().map(|p| p.x()).collect();
            a.sort_by(f64::total_cmp);
            let left = (a[0] + half).max(0.0);
            let right = (half - a[a.len() - 1]).max(0.0);
            let inner = a
                .windows(2)
                .filter(|w| w[1] > -half && w[0] < half)
                .map(|w| (w[1].min(half) - w[0].max(-half)).max(0.0) / 2.0)
                .fold(0.0, f64::max);
            left.max(right).max(inner)
        }
        _ => region
            .probes(system)
            .par_iter()
            .map(|x| {
                nodes
                    .iter()
                    .map(|c| system.distance(x, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .reduce(|| 0.0, f64::max),
    }
}

/// ε_n = min(1/n, 1/B_{2n}).
pub fn covering_radius(system: System, n: f64) -> f64 {
    (1.0 / n).min(1.0 / system.bernstein(2.0 * n))
}

/// Number of random draws from the normalized reference law that covers K
/// to mesh norm ε with probability at least 1 − δ:
/// M = ⌈(2/ν_ε) ln(|C|/δ)⌉, where C is a maximal ε/2-separated subset of K
/// and ν_ε the probability of a ball of radius ε/2.
pub fn covering_budget(system: System, eps: f64, delta: f64, region: Region) -> Result<usize> {
    if eps <= 0.0 || !(0.0..=1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "covering budget needs eps > 0 and delta in (0, 1], got {eps}, {delta}"
        )));
    }
    let total = match region {
        Region::Whole => 1.0,
        Region::Window { half } => 2.0 * half,
    };
    let nu = (system.ball_measure(eps / 2.0) / total).min(1.0);
    let packing = packing_count(system, eps / 2.0, region);
    let m = (2.0 / nu) * (packing as f64 / delta).ln();
    Ok(m.ceil().max(1.0) as usize)
}

/// Size of a maximal r-separated subset of K, built greedily on probes.
pub fn packing_count(system: System, r: f64, region: Region) -> usize {
    match (system, region) {
        (System::Torus { q: 1 }, _) => (TAU / r).floor().max(1.0) as usize,
        (System::Hermite { .. }, Region::Window { half }) => (2.0 * half / r).floor() as usize + 1,
        _ => {
            let probes = region.probes(system);
            greedy_net(system, &probes, r, region).map(|n| n.nodes.len()).unwrap_or(1)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoveringReport {
    pub eps: f64,
    pub draws: usize,
    pub trials: usize,
    pub successes: usize,
    pub mesh_norms: Vec<f64>,
}

impl CoveringReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    pub fn failure_rate(&self) -> f64 {
        1.0 - self.success_rate()
    }
}

/// Draws `m` reference points per trial and records how often δ(K, ·) ≤ ε.
pub fn covering_probability_check(
    system: System,
    eps: f64,
    m: usize,
    trials: usize,
    region: Region,
    seed: u64,
) -> CoveringReport {
    let sample_band = match region {
        Region::Whole => 1.0,
        Region::Window { half } => match system {
            System::Hermite { scale, window } => half * scale / window,
            _ => 1.0,
        },
    };
    let mesh_norms: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let pts = system.sample_with(&mut rng, sample_band, m);
            mesh_norm(system, &pts, region)
        })
        .collect();
    let successes = mesh_norms.iter().filter(|&&d| d <= eps).count();
    CoveringReport {
        eps,
        draws: m,
        trials,
        successes,
        mesh_norms,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_on_uniform_grid() {
        let pts: Vec<Point> = (0..100).map(|i| Point::angle(TAU * i as f64 / 100.0)).collect();
        let net = greedy_net(System::TORUS1, &pts, 0.2, Region::Whole).unwrap();
        assert!(net.separation.unwrap() >= 0.2);
        assert!(net.mesh_norm <= 0.2 + TAU / 100.0);
    }

    #[test]
    fn single_point_net() {
        let net = greedy_net(System::TORUS1, &[Point::angle(1.0)], 0.1, Region::Whole).unwrap();
        assert_eq!(net.separation, None);
        assert!((net.mesh_norm - PI).abs() < 1e-12);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(greedy_net(System::TORUS1, &[], 0.1, Region::Whole).is_err());
    }

    #[test]
    fn torus_mesh_norm_matches_probe_estimate() {
        let pts = System::TORUS1.sample_reference(1.0, 30, 2);
        let exact = mesh_norm(System::TORUS1, &pts, Region::Whole);
        let probes = Region::Whole.probes(System::TORUS1);
        let approx = probes
            .iter()
            .map(|x| pts.iter().map(|c| System::TORUS1.distance(x, c)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert!((exact - approx).abs() < TAU / 8192.0);
    }

    #[test]
    fn window_mesh_norm_counts_the_edges() {
        let pts = [Point::line(-1.0), Point::line(0.5)];
        let d = mesh_norm(System::HERMITE, &pts, Region::Window { half: 2.0 });
        assert!((d - 1.5).abs() < 1e-15);
    }

    #[test]
    fn budget_for_torus() {
        // ν = ε/(2π), |C| = ⌊4π/ε⌋.
        let m = covering_budget(System::TORUS1, 1.0 / 16.0, 0.1, Region::Whole).unwrap();
        let nu = 1.0 / 16.0 / TAU;
        let expect = ((2.0 / nu) * ((64.0 * PI).floor() / 0.1).ln()).ceil() as usize;
        assert_eq!(m, expect);
    }

    #[test]
    fn covering_is_certain_for_large_eps() {
        let r = covering_probability_check(System::TORUS1, 4.0, 1, 10, Region::Whole, 1);
        assert_eq!(r.success_rate(), 1.0);
    }
}
