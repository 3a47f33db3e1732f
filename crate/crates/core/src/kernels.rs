//! Localized kernels Φ_n(H; x, y) = Σ H(λ_k/n) φ_k(x) φ_k(y), the
//! summability operator σ_n, and the dyadic blocks τ_j.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::systems::{GridMeasure, Point, System};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pass {
    /// H = h
    Low,
    /// H = g = h(·) − h(2·)
    Band,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelHandle {
    pub system: System,
    pub filter: Filter,
    pub n: f64,
    pub pass: Pass,
}

impl KernelHandle {
    pub fn lowpass(system: System, filter: Filter, n: f64) -> Self {
        KernelHandle { system, filter, n, pass: Pass::Low }
    }

    pub fn bandpass(system: System, filter: Filter, n: f64) -> Self {
        KernelHandle { system, filter, n, pass: Pass::Band }
    }

    /// H(λ/n).
    pub fn coefficient(&self, lambda: f64) -> f64 {
        let t = lambda / self.n;
        match self.pass {
            Pass::Low => self.filter.eval(t),
            Pass::Band => self.filter.band(t),
        }
    }

    /// Φ_n(H; x, y).
    pub fn eval(&self, x: &Point, y: &Point) -> f64 {
        self.system.spectral_sum(self.n, &|l| self.coefficient(l), x, y)
    }

    /// Kernel matrix with rows indexed by `xs` and columns by `ys`.
    pub fn matrix(&self, xs: &[Point], ys: &[Point]) -> DMatrix<f64> {
        let rows: Vec<Vec<f64>> = xs
            .par_iter()
            .map(|x| ys.iter().map(|y| self.eval(x, y)).collect())
            .collect();
        DMatrix::from_fn(xs.len(), ys.len(), |i, j| rows[i][j])
    }
}

/// f̂(k) = ∫ f φ_k dμ* for λ_k < n, computed on the grid.
pub fn fourier_coefficients(grid: &GridMeasure, f_values: &[f64], n: f64) -> Result<Vec<f64>> {
    if grid.band + 1e-12 < n {
        return Err(Error::GridUnderResolved {
            grid: grid.band,
            requested: n,
        });
    }
    if f_values.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "{} function values for a grid of {} nodes",
            f_values.len(),
            grid.len()
        )));
    }
    let a = grid.system.eval_basis(n, &grid.nodes)?;
    let wf = DVector::from_iterator(grid.len(), grid.weights.iter().zip(f_values).map(|(w, f)| w * f));
    Ok((a.transpose() * wf).iter().copied().collect())
}

/// Σ_k c_k φ_k(x) at each point for coefficients of the band n.
pub fn synthesize(system: System, n: f64, coeffs: &[f64], pts: &[Point]) -> Result<Vec<f64>> {
    let a = system.eval_basis(n, pts)?;
    let c = DVector::from_column_slice(coeffs);
    Ok((a * c).iter().copied().collect())
}

/// σ_n(H; f) evaluated at `x_eval`, with f given by its values on the grid.
pub fn sigma_n(k: &KernelHandle, grid: &GridMeasure, f_values: &[f64], x_eval: &[Point]) -> Result<Vec<f64>> {
    let coeffs = fourier_coefficients(grid, f_values, k.n)?;
    let lam = k.system.eigenvalues(k.n);
    let filtered: Vec<f64> = coeffs.iter().zip(&lam).map(|(c, l)| c * k.coefficient(*l)).collect();
    synthesize(k.system, k.n, &filtered, x_eval)
}

/// τ_j(f) = σ_{2^j}(f) − σ_{2^{j−1}}(f) for j ≥ 1, τ_0 = σ_1.
pub fn tau_j(
    system: System,
    filter: Filter,
    j: u32,
    grid: &GridMeasure,
    f_values: &[f64],
    x_eval: &[Point],
) -> Result<Vec<f64>> {
    let hi = KernelHandle::lowpass(system, filter, 2f64.powi(j as i32));
    let upper = sigma_n(&hi, grid, f_values, x_eval)?;
    if j == 0 {
        return Ok(upper);
    }
    let lo = KernelHandle::lowpass(system, filter, 2f64.powi(j as i32 - 1));
    let lower = sigma_n(&lo, grid, f_values, x_eval)?;
    Ok(upper.iter().zip(&lower).map(|(a, b)| a - b).collect())
}

/// Band-pass form σ_{2^j}(g; f) of the same block (j ≥ 1).
pub fn tau_j_bandpass(
    system: System,
    filter: Filter,
    j: u32,
    grid: &GridMeasure,
    f_values: &[f64],
    x_eval: &[Point],
) -> Result<Vec<f64>> {
    if j == 0 {
        return tau_j(system, filter, 0, grid, f_values, x_eval);
    }
    let k = KernelHandle::bandpass(system, filter, 2f64.powi(j as i32));
    sigma_n(&k, grid, f_values, x_eval)
}
