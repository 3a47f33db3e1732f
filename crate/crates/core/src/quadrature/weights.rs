use std::time::Duration;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use super::{QuadratureRule, WeightMethod};
use crate::error::{Error, Result};
use crate::systems::{GridMeasure, Point, System};

/// Acceptance bound on max |w_k| / W_k.
const RATIO_BOUND: f64 = 2.0;
const LP_TIME_LIMIT: Duration = Duration::from_secs(60);

#[derive(Clone, Debug)]
pub struct VoronoiWeights {
    pub weights: Vec<f64>,
    /// Nodes whose cell held no grid mass and were merged with a neighbour.
    pub merged: Vec<usize>,
}

/// W_k = grid mass of the Voronoi cell of node k (ties go to the lowest
/// index). An empty cell shares the mass of the nearest nonempty cell.
pub fn voronoi_weights(system: System, nodes: &[Point], grid: &GridMeasure) -> Result<VoronoiWeights> {
    if nodes.is_empty() {
        return Err(Error::EmptyInput("voronoi_weights needs at least one node"));
    }
    let owner: Vec<usize> = grid
        .nodes
        .par_iter()
        .map(|x| nearest(system, x, nodes, |_| true))
        .collect();
    let mut mass = vec![0.0; nodes.len()];
    let mut hits = vec![0usize; nodes.len()];
    for (k, w) in owner.iter().zip(&grid.weights) {
        mass[*k] += w;
        hits[*k] += 1;
    }
    let merged: Vec<usize> = (0..nodes.len()).filter(|&k| hits[k] == 0).collect();
    if !merged.is_empty() {
        log::warn!(
            "{} of {} Voronoi cells hold no grid mass; merging with nearest nonempty cells",
            merged.len(),
            nodes.len()
        );
        let mut host = vec![usize::MAX; nodes.len()];
        let mut sharers = vec![1usize; nodes.len()];
        for &k in &merged {
            let j = nearest(system, &nodes[k], nodes, |i| hits[i] > 0);
            host[k] = j;
            sharers[j] += 1;
        }
        let base = mass.clone();
        for j in 0..nodes.len() {
            if hits[j] > 0 {
                mass[j] = base[j] / sharers[j] as f64;
            }
        }
        for &k in &merged {
            let j = host[k];
            mass[k] = base[j] / sharers[j] as f64;
        }
    }
    Ok(VoronoiWeights { weights: mass, merged })
}

fn nearest(system: System, x: &Point, nodes: &[Point], allow: impl Fn(usize) -> bool) -> usize {
    let mut best = usize::MAX;
    let mut best_d = f64::INFINITY;
    for (k, c) in nodes.iter().enumerate() {
        if !allow(k) {
            continue;
        }
        let d = system.distance(x, c);
        if d < best_d {
            best_d = d;
            best = k;
        }
    }
    best
}

/// Signed weights exact on Π_n with |w_k| ≤ 2 W_k.
///
/// Solves min t subject to Σ_k w_k φ_j(z_k) = ∫ φ_j dμ* and |w_k| ≤ t W_k as
/// a linear program, polishes the vertex with a weighted least-norm
/// correction, and falls back to the weighted least-norm solution
/// min Σ w_k²/W_k when the program fails or its optimum exceeds 2.
pub fn solve_exact_weights(system: System, nodes: &[Point], proxy: &[f64], n: f64, tol: f64) -> Result<QuadratureRule> {
    if nodes.len() != proxy.len() {
        return Err(Error::InvalidArgument(format!(
            "{} nodes but {} proxy weights",
            nodes.len(),
            proxy.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::EmptyInput("solve_exact_weights needs nodes"));
    }
    if proxy.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("proxy weights must be positive".into()));
    }
    let a = system.eval_basis(n, nodes)?;
    let m = DVector::from_vec(system.moments(n));
    let dim = a.ncols();
    if nodes.len() < dim {
        return Err(Error::NodesInsufficient {
            order: n,
            detail: format!("{} nodes for {} moments", nodes.len(), dim),
        });
    }
    let wd = DVector::from_column_slice(proxy);
    let gram = weighted_gram(&a, &wd);
    let eig = SymmetricEigen::new(gram.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    if !(lo > 1e-12 * hi) {
        return Err(Error::NodesInsufficient {
            order: n,
            detail: format!("moment matrix is rank deficient (eigenvalue ratio {:.3e})", lo / hi),
        });
    }
    let chol = gram.clone().cholesky().ok_or_else(|| Error::NodesInsufficient {
        order: n,
        detail: "moment matrix is not positive definite".into(),
    })?;
    let correct = |w: &DVector<f64>| -> DVector<f64> {
        let r = &m - a.transpose() * w;
        let y = chol.solve(&r);
        w + (&a * y).component_mul(&wd)
    };
    let residual_of = |w: &DVector<f64>| -> f64 { (a.transpose() * w - &m).amax() };
    let ratio_of = |w: &DVector<f64>| -> f64 { w.iter().zip(proxy).map(|(x, p)| x.abs() / p).fold(0.0, f64::max) };

    let mut lp_optimum = None;
    match linear_program(&a, proxy, m.as_slice()) {
        Ok((w, opt)) => {
            lp_optimum = Some(opt);
            let mut w = DVector::from_vec(w);
            for _ in 0..3 {
                if residual_of(&w) <= tol * 1e-3 {
                    break;
                }
                w = correct(&w);
            }
            let res = residual_of(&w);
            if opt <= RATIO_BOUND && res <= tol && ratio_of(&w) <= RATIO_BOUND * (1.0 + 1e-9) {
                return Ok(rule(system, n, nodes, proxy, w, res, lp_optimum, WeightMethod::LinearProgram));
            }
            log::debug!("linear program optimum {opt:.4} residual {res:.3e}; trying least-norm weights");
        }
        Err(e) => log::debug!("linear program failed: {e}; trying least-norm weights"),
    }

    let mut w = correct(&DVector::zeros(nodes.len()));
    w = correct(&w);
    let res = residual_of(&w);
    let ratio = ratio_of(&w);
    if res <= tol && ratio <= RATIO_BOUND {
        return Ok(rule(system, n, nodes, proxy, w, res, lp_optimum, WeightMethod::LeastNorm));
    }
    Err(Error::NodesInsufficient {
        order: n,
        detail: format!(
            "no weights with max |w_k|/W_k <= 2 (linear program optimum {}, least-norm ratio {ratio:.4}, residual {res:.3e})",
            lp_optimum.map_or("unavailable".to_string(), |v| format!("{v:.4}"))
        ),
    })
}

#[allow(clippy::too_many_arguments)]
fn rule(
    system: System,
    n: f64,
    nodes: &[Point],
    proxy: &[f64],
    w: DVector<f64>,
    residual: f64,
    lp_optimum: Option<f64>,
    method: WeightMethod,
) -> QuadratureRule {
    QuadratureRule {
        system,
        order: n,
        product_order: None,
        product_system: None,
        nodes: nodes.to_vec(),
        proxy_weights: proxy.to_vec(),
        weights: w.iter().copied().collect(),
        residual,
        lp_optimum,
        method,
    }
}

/// Aᵀ diag(W) A.
fn weighted_gram(a: &DMatrix<f64>, w: &DVector<f64>) -> DMatrix<f64> {
    let mut scaled = a.clone();
    for (mut row, wk) in scaled.row_iter_mut().zip(w.iter()) {
        row *= *wk;
    }
    a.transpose() * scaled
}

/// min t s.t. Σ_k A_kj W_k u_k = m_j, −t ≤ u_k ≤ t; returns w = W∘u and t.
fn linear_program(a: &DMatrix<f64>, proxy: &[f64], m: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    lp.set_time_limit(LP_TIME_LIMIT);
    let t = lp.add_var(1.0, (0.0, f64::INFINITY));
    let u: Vec<_> = (0..a.nrows())
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for (j, mj) in m.iter().enumerate() {
        let expr: Vec<_> = u.iter().enumerate().map(|(k, &v)| (v, a[(k, j)] * proxy[k])).collect();
        lp.add_constraint(expr, ComparisonOp::Eq, *mj);
    }
    for &v in &u {
        lp.add_constraint([(v, 1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
        lp.add_constraint([(v, -1.0), (t, -1.0)], ComparisonOp::Le, 0.0);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::LinearProgram(format!("{e:?}")))?
        .into_solution()
        .map_err(|e| Error::LinearProgram(format!("interrupted: {:?}", e.termination_reason())))?;
    let w = u.iter().zip(proxy).map(|(&v, p)| solution.var_value(v) * p).collect();
    Ok((w, solution.var_value(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn equispaced_voronoi_cells_are_equal() {
        let m = 16;
        let nodes: Vec<Point> = (0..m).map(|i| Point::angle(2.0 * PI * i as f64 / m as f64)).collect();
        let grid = GridMeasure::fine(System::TORUS1, 16 * 40, 0.0);
        let v = voronoi_weights(System::TORUS1, &nodes, &grid).unwrap();
        assert!(v.merged.is_empty());
        for w in &v.weights {
            assert!((w - 1.0 / m as f64).abs() < 1e-12);
        }
        let total: f64 = v.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_cells_are_merged_without_losing_mass() {
        let nodes = [Point::angle(0.5), Point::angle(0.5), Point::angle(3.0)];
        let grid = GridMeasure::fine(System::TORUS1, 64, 0.0);
        let v = voronoi_weights(System::TORUS1, &nodes, &grid).unwrap();
        assert_eq!(v.merged, vec![1]);
        assert_eq!(v.weights[0], v.weights[1]);
        let total: f64 = v.weights.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn equispaced_nodes_get_equal_exact_weights() {
        let n = 8.0;
        let nodes: Vec<Point> = (0..16).map(|i| Point::angle(2.0 * PI * i as f64 / 16.0)).collect();
        let r = solve_exact_weights(System::TORUS1, &nodes, &[1.0 / 16.0; 16], n, 1e-12).unwrap();
        assert!(r.residual <= 1e-12);
        assert!(r.max_ratio() <= 2.0);
        // Brute-force discrete orthogonality: Σ_j e^{ik z_j} = 0 for 0 < |k| < 16.
        for k in 1..8 {
            let s: f64 = r.nodes.iter().zip(&r.weights).map(|(p, w)| w * (k as f64 * p.x()).cos()).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn single_moment_single_node() {
        let z = [Point::spherical(0.3, 1.0)];
        let r = solve_exact_weights(System::Sphere2, &z, &[1.0], 1.0, 1e-12).unwrap();
        assert!((r.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_nodes_are_reported() {
        let nodes: Vec<Point> = (0..5).map(|i| Point::angle(i as f64)).collect();
        let err = solve_exact_weights(System::TORUS1, &nodes, &[0.2; 5], 8.0, 1e-8).unwrap_err();
        assert!(err.to_string().contains("nodes insufficient for order 8"));
    }
}
