use nalgebra::DVector;
use rayon::prelude::*;

use super::PrefabNetwork;
use crate::error::{Error, Result};
use crate::systems::Point;

/// 𝒢_n(Y; F)(x) = (scale/|Y|) Σ_{y∈Y} F(y) 𝔾_n(x, y), stored as an eignet
/// Σ_k c_k W(z_k) G(x, z_k) over the network nodes.
#[derive(Clone, Debug)]
pub struct Estimator<'a> {
    net: &'a PrefabNetwork,
    /// (scale/|Y|) Σ F(y) φ_j(y) for λ_j < n.
    moments: Vec<f64>,
    /// w_k D-weighted node coefficients multiplying W(z_k)G(x, z_k).
    coeffs: Vec<f64>,
}

impl<'a> Estimator<'a> {
    pub fn new(net: &'a PrefabNetwork, points: &[Point], values: &[f64]) -> Result<Self> {
        Self::scaled(net, points, values, 1.0)
    }

    /// Estimator multiplied by `scale` (the bump mass in local recovery).
    pub fn scaled(net: &'a PrefabNetwork, points: &[Point], values: &[f64], scale: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("estimator needs at least one sample"));
        }
        if points.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples but {} observations",
                points.len(),
                values.len()
            )));
        }
        let sys = net.kernel.system;
        let dim = net.dual_coeffs().len();
        let moments = points
            .par_chunks(1024)
            .zip(values.par_chunks(1024))
            .map(|(ps, fs)| {
                let mut acc = vec![0.0; dim];
                let mut row = Vec::new();
                for (p, f) in ps.iter().zip(fs) {
                    sys.basis_row(net.n, p, &mut row)?;
                    for (a, r) in acc.iter_mut().zip(&row) {
                        *a += f * r;
                    }
                }
                Ok::<_, Error>(acc)
            })
            .try_reduce(
                || vec![0.0; dim],
                |mut a, b| {
                    a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                    Ok(a)
                },
            )?;
        let s = scale / points.len() as f64;
        let moments: Vec<f64> = moments.iter().map(|m| m * s).collect();
        let v = DVector::from_iterator(dim, moments.iter().zip(net.dual_coeffs()).map(|(m, d)| m * d));
        let coeffs = (net.node_basis() * v)
            .iter()
            .zip(&net.rule.weights)
            .map(|(d, w)| d * w)
            .collect();
        Ok(Estimator { net, moments, coeffs })
    }

    pub fn network(&self) -> &PrefabNetwork {
        self.net
    }

    /// Coefficients a_k of G(·, z_k) in the eignet.
    pub fn eignet_coefficients(&self) -> Vec<f64> {
        self.net
            .rule
            .nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(z, c)| c * self.net.kernel.weight.eval(z))
            .collect()
    }

    /// Network form Σ_k c_k W(z_k) G(x, z_k).
    pub fn eval(&self, x: &Point) -> f64 {
        self.net
            .rule
            .nodes
            .iter()
            .zip(&self.coeffs)
            .map(|(z, c)| c * self.net.weighted_kernel(x, z))
            .sum()
    }

    pub fn eval_many(&self, xs: &[Point]) -> Vec<f64> {
        xs.par_iter().map(|x| self.eval(x)).collect()
    }

    /// Spectral form (scale/|Y|) Σ F(y) Φ_n(x, y) of the same data.
    pub fn spectral_eval(&self, x: &Point) -> Result<f64> {
        let mut row = Vec::new();
        self.net.kernel.system.basis_row(self.net.n, x, &mut row)?;
        let lam = self.net.kernel.system.eigenvalues(self.net.n);
        Ok(row
            .iter()
            .zip(&self.moments)
            .zip(&lam)
            .map(|((p, m), l)| self.net.filter.eval(l / self.net.n) * m * p)
            .sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eignets::{EignetKernel, Mask};
    use crate::filters::Filter;
    use crate::kernels::{sigma_n, KernelHandle};
    use crate::systems::{GridMeasure, System};

    fn net(n: f64) -> PrefabNetwork {
        let mask = Mask::exp_decay(1, 0.25);
        let b = mask.auto_b_star(n, 1e-12);
        let k = EignetKernel::new(System::TORUS1, mask.with_b_star(b));
        PrefabNetwork::with_exact_rule(k, Filter::Mollifier, n).unwrap()
    }

    #[test]
    fn empty_sample_is_rejected() {
        let nw = net(4.0);
        assert!(matches!(Estimator::new(&nw, &[], &[]), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn zero_data_gives_zero() {
        let nw = net(4.0);
        let pts = System::TORUS1.sample_reference(1.0, 50, 3);
        let e = Estimator::new(&nw, &pts, &[0.0; 50]).unwrap();
        assert_eq!(e.eval(&Point::angle(1.0)), 0.0);
    }

    #[test]
    fn network_form_matches_direct_sum() {
        let nw = net(6.0);
        let pts = System::TORUS1.sample_reference(1.0, 40, 9);
        let vals: Vec<f64> = pts.iter().map(|p| p.x().sin()).collect();
        let e = Estimator::new(&nw, &pts, &vals).unwrap();
        for x in [0.1, 2.0, 4.4] {
            let x = Point::angle(x);
            let direct: f64 = pts.iter().zip(&vals).map(|(y, f)| f * nw.eval(&x, y).unwrap()).sum::<f64>() / 40.0;
            assert!((e.eval(&x) - direct).abs() < 1e-10);
            assert!((e.eval(&x) - e.spectral_eval(&x).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn grid_samples_reproduce_sigma_n() {
        // Y = reference grid with uniform masses, density f0 = 1 + cos, F = f.
        let n = 8.0;
        let nw = net(n);
        let grid = GridMeasure::new(System::TORUS1, 64.0);
        let f = |p: &Point| (2.0 * p.x()).sin() + 0.3 * (5.0 * p.x()).cos().powi(3);
        let f0 = |p: &Point| 1.0 + p.x().cos();
        let pts = grid.nodes.clone();
        let vals: Vec<f64> = pts.iter().map(|p| f(p) * f0(p)).collect();
        let e = Estimator::new(&nw, &pts, &vals).unwrap();
        let probes: Vec<Point> = (0..50).map(|i| Point::angle(0.125 * i as f64)).collect();
        let want = sigma_n(&KernelHandle::lowpass(System::TORUS1, Filter::Mollifier, n), &grid, &vals, &probes).unwrap();
        for (p, w) in probes.iter().zip(&want) {
            assert!((e.eval(p) - w).abs() < 1e-6);
        }
    }

    #[test]
    fn estimator_is_linear() {
        let nw = net(4.0);
        let pts = System::TORUS1.sample_reference(1.0, 30, 5);
        let a: Vec<f64> = pts.iter().map(|p| p.x().cos()).collect();
        let b: Vec<f64> = pts.iter().map(|p| (3.0 * p.x()).sin()).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + 2.5 * y).collect();
        let (ea, eb, eab) = (
            Estimator::new(&nw, &pts, &a).unwrap(),
            Estimator::new(&nw, &pts, &b).unwrap(),
            Estimator::new(&nw, &pts, &ab).unwrap(),
        );
        let x = Point::angle(0.77);
        assert!((eab.eval(&x) - ea.eval(&x) - 2.5 * eb.eval(&x)).abs() < 1e-12);
    }
}
