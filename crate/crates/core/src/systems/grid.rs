use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use super::{special, Point, System};
use crate::error::Result;

const TAU: f64 = 2.0 * PI;

/// A weighted point set standing in for μ*.
#[derive(Clone, Debug)]
pub struct GridMeasure {
    pub system: System,
    /// Band up to which products φ_j φ_k are integrated exactly.
    pub band: f64,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl GridMeasure {
    /// Reference grid exact for φ_j φ_k with λ_j, λ_k < `n_max`.
    ///
    /// Torus: 4·n_max points per axis. Sphere: Gauss–Legendre × uniform
    /// azimuth with (2 n_max)² nodes. Line: 4·n_max² Gauss–Hermite nodes.
    pub fn new(system: System, n_max: f64) -> Self {
        let n = n_max.ceil().max(1.0) as usize;
        match system {
            System::Torus { q } => {
                let mut g = Self::torus_uniform(q, 4 * n);
                g.system = system;
                g.band = n_max;
                g
            }
            System::Sphere2 => {
                let mut g = Self::sphere_product(2 * n, 2 * n);
                g.band = n_max;
                g
            }
            System::Hermite { scale, .. } => {
                let count = (4.0 * n_max * n_max).ceil().max(4.0) as usize;
                let (x, w) = special::gauss_hermite_lebesgue(count);
                GridMeasure {
                    system,
                    band: n_max,
                    nodes: x.iter().map(|&v| Point::line(v / scale)).collect(),
                    weights: w.iter().map(|&v| v / scale).collect(),
                }
            }
        }
    }

    /// Dense grid for partitioning μ* into cells: about `count` nodes.
    /// On the line the grid is a uniform midpoint rule over `[-half, half]`.
    pub fn fine(system: System, count: usize, half: f64) -> Self {
        match system {
            System::Torus { q: 1 } => Self::torus_uniform_offset(1, count.max(1), 0.5),
            System::Torus { q } => {
                let per = (count as f64).powf(1.0 / q as f64).ceil() as usize;
                let mut g = Self::torus_uniform_offset(q, per.max(1), 0.5);
                g.system = system;
                g
            }
            System::Sphere2 => {
                let rows = ((count as f64 / 2.0).sqrt().ceil() as usize).max(1);
                Self::sphere_product(rows, 2 * rows)
            }
            System::Hermite { .. } => {
                let m = count.max(1);
                let h = 2.0 * half / m as f64;
                GridMeasure {
                    system,
                    band: 0.0,
                    nodes: (0..m).map(|i| Point::line(-half + (i as f64 + 0.5) * h)).collect(),
                    weights: vec![h; m],
                }
            }
        }
    }

    fn torus_uniform(q: usize, per_axis: usize) -> Self {
        Self::torus_uniform_offset(q, per_axis, 0.0)
    }

    fn torus_uniform_offset(q: usize, per_axis: usize, offset: f64) -> Self {
        let h = TAU / per_axis as f64;
        let w = 1.0 / (per_axis as f64).powi(q as i32);
        let at = move |i: usize| (i as f64 + offset) * h;
        let nodes: Vec<Point> = if q == 1 {
            (0..per_axis).map(|i| Point::angle(at(i))).collect()
        } else {
            (0..per_axis)
                .flat_map(|i| (0..per_axis).map(move |j| Point::angles(at(i), at(j))))
                .collect()
        };
        let len = nodes.len();
        GridMeasure {
            system: System::Torus { q },
            band: per_axis as f64 / 4.0,
            nodes,
            weights: vec![w; len],
        }
    }

    fn sphere_product(rows: usize, cols: usize) -> Self {
        let (z, wz) = special::gauss_legendre(rows);
        let mut nodes = Vec::with_capacity(rows * cols);
        let mut weights = Vec::with_capacity(rows * cols);
        for (zi, wi) in z.iter().zip(&wz) {
            let s = (1.0 - zi * zi).max(0.0).sqrt();
            for j in 0..cols {
                let phi = TAU * j as f64 / cols as f64;
                nodes.push(Point([s * phi.cos(), s * phi.sin(), *zi]));
                weights.push(wi / 2.0 / cols as f64);
            }
        }
        GridMeasure {
            system: System::Sphere2,
            band: (rows.min(cols) / 2) as f64,
            nodes,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// ∫ f dμ* approximated on the grid.
    pub fn integrate(&self, f: impl Fn(&Point) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(p, w)| w * f(p)).sum()
    }

    /// Writes `coord…, weight` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.system.coord_dim();
        let names = ["x0", "x1", "x2"];
        writeln!(out, "{},weight", names[..d].join(","))?;
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            let mut cells: Vec<String> = p.0[..d].iter().map(|v| format!("{v:.16e}")).collect();
            cells.push(format!("{w:.16e}"));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Rule exact for every φ_k with λ_k < `order` (single functions, not
/// products) using as few nodes as the classical constructions allow.
pub(crate) fn exact_rule_nodes(system: System, order: f64) -> (Vec<Point>, Vec<f64>) {
    let kmax = (order.ceil().max(1.0) as usize) - 1;
    match system {
        System::Torus { q } => {
            let g = GridMeasure::torus_uniform(q, kmax + 1);
            (g.nodes, g.weights)
        }
        System::Sphere2 => {
            let rows = (kmax + 2) / 2;
            let g = GridMeasure::sphere_product(rows.max(1), kmax + 1);
            (g.nodes, g.weights)
        }
        System::Hermite { scale, .. } => {
            // φ_k(a x) = poly_k(a x) e^{-a²x²/2}; with a x = √2 y this is a
            // polynomial times e^{-y²}, integrated exactly by Gauss–Hermite.
            let top = (order * order).ceil().max(1.0) as usize - 1;
            let count = top / 2 + 1;
            let (y, lam) = special::gauss_hermite_lebesgue(count);
            (
                y.iter().map(|&v| Point::line(SQRT_2 * v / scale)).collect(),
                lam.iter().map(|&v| SQRT_2 * v / scale).collect(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gram_deviation(sys: System, n: f64) -> f64 {
        let g = GridMeasure::new(sys, n);
        let a = sys.eval_basis(n, &g.nodes).unwrap();
        let mut worst: f64 = 0.0;
        for j in 0..a.ncols() {
            for k in 0..=j {
                let s: f64 = (0..a.nrows()).map(|i| g.weights[i] * a[(i, j)] * a[(i, k)]).sum();
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((s - target).abs());
            }
        }
        worst
    }

    #[test]
    fn gram_is_identity() {
        assert!(gram_deviation(System::TORUS1, 32.0) < 1e-10);
        assert!(gram_deviation(System::TORUS2, 6.0) < 1e-10);
        assert!(gram_deviation(System::Sphere2, 12.0) < 1e-10);
        assert!(gram_deviation(System::HERMITE, 5.0) < 1e-10);
        assert!(gram_deviation(System::hermite_scaled(SQRT_2), 4.0) < 1e-10);
    }

    #[test]
    fn probability_masses() {
        for sys in [System::TORUS1, System::TORUS2, System::Sphere2] {
            assert!((GridMeasure::new(sys, 5.0).total_mass() - 1.0).abs() < 1e-13);
            assert!((GridMeasure::fine(sys, 1000, 0.0).total_mass() - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn exact_rules_integrate_single_functions() {
        for (sys, n) in [
            (System::TORUS1, 9.0),
            (System::TORUS2, 4.0),
            (System::Sphere2, 7.0),
            (System::HERMITE, 4.0),
            (System::hermite_scaled(SQRT_2), 4.0 * SQRT_2),
        ] {
            let (z, w) = exact_rule_nodes(sys, n);
            let a = sys.eval_basis(n, &z).unwrap();
            let m = sys.moments(n);
            for (j, mj) in m.iter().enumerate() {
                let s: f64 = (0..z.len()).map(|i| w[i] * a[(i, j)]).sum();
                assert!((s - mj).abs() < 1e-11, "{sys} j={j}: {s} vs {mj}");
            }
        }
    }

    #[test]
    fn csv_has_header_and_rows() {
        let g = GridMeasure::new(System::TORUS1, 2.0);
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x0,weight");
        assert_eq!(lines.len(), g.len() + 1);
    }
}
