//! Quadrature from scattered nodes: ε-nets, mesh norms, Voronoi proxy
//! weights and exact signed weights, plus product-exact rules.

mod net;
mod weights;

use std::io::Write;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{GridMeasure, Point, System};

pub use net::{
    covering_budget, covering_probability_check, covering_radius, greedy_net, mesh_norm, packing_count,
    separation, CoveringReport, NetReport, Region,
};
pub use weights::{solve_exact_weights, voronoi_weights, VoronoiWeights};

/// How the signed weights were obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightMethod {
    /// Classical positive rule (equispaced, Gauss–Legendre, Gauss–Hermite).
    Classical,
    /// Linear program minimizing max |w_k|/W_k, then polished.
    LinearProgram,
    /// Weighted least-norm solution min Σ w_k²/W_k.
    LeastNorm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadratureRule {
    /// The system whose moments the rule reproduces.
    pub system: System,
    /// Exact for every φ_k with λ_k < order.
    pub order: f64,
    /// Set when product exactness has been certified: exact for P₁P₂ with
    /// P₁, P₂ ∈ Π_{product_order} of `product_system`.
    pub product_order: Option<f64>,
    pub product_system: Option<System>,
    pub nodes: Vec<Point>,
    pub proxy_weights: Vec<f64>,
    pub weights: Vec<f64>,
    /// max_{λ_j<order} |Σ_k w_k φ_j(z_k) − ∫ φ_j dμ*|.
    pub residual: f64,
    /// Optimal value of max |w_k|/W_k reported by the linear program.
    pub lp_optimum: Option<f64>,
    pub method: WeightMethod,
}

/// Metadata written next to a rule CSV.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RuleSidecar {
    pub system: String,
    pub order: f64,
    pub product_order: Option<f64>,
    pub nodes: usize,
    pub residual: f64,
    pub max_ratio: f64,
    pub lp_optimum: Option<f64>,
    pub method: WeightMethod,
    pub mesh_norm: Option<f64>,
    pub separation: Option<f64>,
    pub seed: Option<u64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// max_k |w_k| / W_k.
    pub fn max_ratio(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.proxy_weights)
            .map(|(w, p)| if *p > 0.0 { w.abs() / p } else if *w == 0.0 { 0.0 } else { f64::INFINITY })
            .fold(0.0, f64::max)
    }

    /// Σ_k w_k f(z_k).
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// Writes `coord…, W_k, w_k` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.system.coord_dim();
        let names = ["x0", "x1", "x2"];
        writeln!(out, "{},proxy_weight,weight", names[..d].join(","))?;
        for ((p, big), w) in self.nodes.iter().zip(&self.proxy_weights).zip(&self.weights) {
            let mut cells: Vec<String> = p.0[..d].iter().map(|v| format!("{v:.16e}")).collect();
            cells.push(format!("{big:.16e}"));
            cells.push(format!("{w:.16e}"));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }

    pub fn sidecar(&self, region: Option<Region>, seed: Option<u64>) -> RuleSidecar {
        RuleSidecar {
            system: self.system.to_string(),
            order: self.order,
            product_order: self.product_order,
            nodes: self.len(),
            residual: self.residual,
            max_ratio: self.max_ratio(),
            lp_optimum: self.lp_optimum,
            method: self.method,
            mesh_norm: region.map(|r| mesh_norm(self.system, &self.nodes, r)),
            separation: separation(self.system, &self.nodes),
            seed,
        }
    }
}

/// Moment residual of weights at the given order.
pub fn moment_residual(system: System, nodes: &[Point], weights: &[f64], order: f64) -> Result<f64> {
    let a = system.eval_basis(order, nodes)?;
    let w = DVector::from_column_slice(weights);
    let got = a.transpose() * w;
    let m = system.moments(order);
    Ok(got.iter().zip(&m).map(|(g, t)| (g - t).abs()).fold(0.0, f64::max))
}

/// Classical positive rule exact for every φ_k with λ_k < `order`:
/// equispaced points on the torus, Gauss–Legendre × uniform azimuth on the
/// sphere, rescaled Gauss–Hermite on the line.
pub fn exact_rule(system: System, order: f64) -> Result<QuadratureRule> {
    if order <= 0.0 {
        return Err(Error::EmptyBand(order));
    }
    let (nodes, weights) = crate::systems::grid::exact_rule_nodes(system, order);
    let residual = moment_residual(system, &nodes, &weights, order)?;
    Ok(QuadratureRule {
        system,
        order,
        product_order: None,
        product_system: None,
        proxy_weights: weights.clone(),
        nodes,
        weights,
        residual,
        lp_optimum: None,
        method: WeightMethod::Classical,
    })
}

/// Certifies `rule` as a product quadrature of order `rule.order / A*` for
/// `system`, checking Σ w P₁P₂ = ∫ P₁P₂ dμ* on `pairs` random pairs.
///
/// On the line the rule is expected to be built for the rescaled system
/// Ξ_{√2 a} at order √2 n; it then integrates products from Π_n of Ξ_a.
pub fn product_rule(system: System, rule: &QuadratureRule, tol: f64, pairs: usize, seed: u64) -> Result<QuadratureRule> {
    let n = rule.order / system.product_constant();
    let compatible = match (system, rule.system) {
        (System::Hermite { scale: a, .. }, System::Hermite { scale: b, .. }) => {
            (b - a * std::f64::consts::SQRT_2).abs() < 1e-12 * a
        }
        (s, r) => s == r,
    };
    if !compatible {
        return Err(Error::InvalidArgument(format!(
            "rule built for {} cannot certify products on {}",
            rule.system, system
        )));
    }
    let residual = product_residual(system, rule, n, pairs, seed)?;
    if residual > tol {
        return Err(Error::ProductExactnessFailed { residual, tol });
    }
    let mut out = rule.clone();
    out.product_order = Some(n);
    out.product_system = Some(system);
    Ok(out)
}

/// Largest normalized error |Σ w P₁P₂ − ⟨P₁, P₂⟩| / (‖P₁‖‖P₂‖) over random
/// pairs P₁, P₂ ∈ Π_n (the pair φ_0, φ_0 is always included).
pub fn product_residual(system: System, rule: &QuadratureRule, n: f64, pairs: usize, seed: u64) -> Result<f64> {
    let a = system.eval_basis(n, &rule.nodes)?;
    let dim = a.ncols();
    let w = DVector::from_column_slice(&rule.weights);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for p in 0..=pairs {
        let (c1, c2) = if p == 0 {
            let mut e = DVector::zeros(dim);
            e[0] = 1.0;
            (e.clone(), e)
        } else {
            (
                DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)),
                DVector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0)),
            )
        };
        let v1 = &a * &c1;
        let v2 = &a * &c2;
        let quad: f64 = v1.component_mul(&v2).dot(&w);
        let exact = c1.dot(&c2);
        worst = worst.max((quad - exact).abs() / (c1.norm() * c2.norm()));
    }
    Ok(worst)
}

/// Classical rule certified as product-exact at order `n` for `system`.
pub fn product_exact_rule(system: System, n: f64, tol: f64) -> Result<QuadratureRule> {
    let a_star = system.product_constant();
    let base_system = match system {
        System::Hermite { scale, window } => System::Hermite {
            scale: scale * a_star,
            window,
        },
        s => s,
    };
    let base = exact_rule(base_system, a_star * n)?;
    product_rule(system, &base, tol, 50, 0x5eed)
}

/// Average number of fine-grid points per Voronoi cell.
pub const GRID_PER_CELL: usize = 32;

/// Rule of order `n` on the given nodes: Voronoi proxy weights on a fine grid
/// of K (the window K_n on the line), then exact signed weights.
pub fn build_rule(system: System, nodes: &[Point], n: f64, tol: f64) -> Result<QuadratureRule> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput("build_rule needs nodes"));
    }
    let half = match Region::for_band(system, n) {
        Region::Whole => 0.0,
        Region::Window { half } => half,
    };
    let grid = GridMeasure::fine(system, GRID_PER_CELL * nodes.len(), half);
    let proxy = voronoi_weights(system, nodes, &grid)?;
    solve_exact_weights(system, nodes, &proxy.weights, n, tol)
}
