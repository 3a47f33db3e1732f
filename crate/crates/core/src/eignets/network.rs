use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EignetKernel, MaskSpec};
use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::kernels::KernelHandle;
use crate::quadrature::{product_exact_rule, QuadratureRule};
use crate::systems::Point;

/// Relative size below which expansion tails are dropped.
const TAIL_TOL: f64 = 1e-300;

/// The prefabricated network
/// 𝔾_n(x, y) = Σ_k w_k W(z_k) G(x, z_k) D_{G,n}(z_k, y)
/// over the nodes of an admissible product rule of order B*·n.
#[derive(Clone, Debug)]
pub struct PrefabNetwork {
    pub kernel: EignetKernel,
    pub filter: Filter,
    pub n: f64,
    pub rule: QuadratureRule,
    /// φ_j(z_k) for λ_j < n.
    node_basis: DMatrix<f64>,
    /// h(λ_j/n) / b(λ_j).
    dual_coeffs: Vec<f64>,
    /// Band at which G is truncated when no closed form exists.
    g_band: f64,
}

/// JSON metadata written next to an exported network.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub system: String,
    pub mask: MaskSpec,
    pub n: f64,
    pub b_star: f64,
    pub nodes: usize,
    pub rule_order: f64,
    pub rule_product_order: Option<f64>,
    pub rule_residual: f64,
}

impl PrefabNetwork {
    /// Builds the network on `rule`, which must be certified product-exact at
    /// order ≥ B*·n for the kernel's system.
    pub fn new(kernel: EignetKernel, filter: Filter, n: f64, rule: QuadratureRule) -> Result<Self> {
        let need = kernel.mask.b_star * n;
        let have = match rule.product_system {
            Some(s) if s == kernel.system => rule.product_order.unwrap_or(0.0),
            _ => 0.0,
        };
        if have + 1e-9 < need {
            return Err(Error::RuleOrderTooLow { have, need });
        }
        kernel.check_dual_band(n)?;
        let node_basis = kernel.system.eval_basis(n, &rule.nodes)?;
        let dual_coeffs = kernel
            .system
            .eigenvalues(n)
            .iter()
            .map(|&l| filter.eval(l / n) / kernel.mask.eval(l))
            .collect();
        let g_band = kernel.mask.truncation_band(TAIL_TOL)?.max(2.0 * need);
        Ok(PrefabNetwork {
            kernel,
            filter,
            n,
            rule,
            node_basis,
            dual_coeffs,
            g_band,
        })
    }

    /// Network on the classical product-exact rule of order B*·n.
    pub fn with_exact_rule(kernel: EignetKernel, filter: Filter, n: f64) -> Result<Self> {
        let rule = product_exact_rule(kernel.system, kernel.mask.b_star * n, 1e-9)?;
        Self::new(kernel, filter, n, rule)
    }

    pub fn nodes(&self) -> &[Point] {
        &self.rule.nodes
    }

    pub(crate) fn node_basis(&self) -> &DMatrix<f64> {
        &self.node_basis
    }

    pub(crate) fn dual_coeffs(&self) -> &[f64] {
        &self.dual_coeffs
    }

    /// W(z)G(x, z), using the closed form when one exists.
    pub fn weighted_kernel(&self, x: &Point, z: &Point) -> f64 {
        self.kernel
            .closed_form(x, z)
            .unwrap_or_else(|| self.kernel.expansion(x, z, self.g_band))
    }

    /// D_{G,n}(z_k, y) for every node.
    pub fn dual_column(&self, y: &Point) -> Result<Vec<f64>> {
        let mut row = Vec::new();
        self.kernel.system.basis_row(self.n, y, &mut row)?;
        let v = DVector::from_iterator(row.len(), row.iter().zip(&self.dual_coeffs).map(|(a, b)| a * b));
        Ok((&self.node_basis * v).iter().copied().collect())
    }

    /// Coefficients a_k(y) = w_k W(z_k) D_{G,n}(z_k, y) of G(·, z_k).
    pub fn coefficients(&self, y: &Point) -> Result<Vec<f64>> {
        let d = self.dual_column(y)?;
        Ok(self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&d)
            .map(|((z, w), dk)| w * self.kernel.weight.eval(z) * dk)
            .collect())
    }

    /// 𝔾_n(x, y) summed directly over the network.
    pub fn eval(&self, x: &Point, y: &Point) -> Result<f64> {
        let d = self.dual_column(y)?;
        Ok(self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&d)
            .map(|((z, w), dk)| w * self.weighted_kernel(x, z) * dk)
            .sum())
    }

    /// Φ_n(x, y) with the network's filter.
    pub fn phi(&self, x: &Point, y: &Point) -> f64 {
        KernelHandle::lowpass(self.kernel.system, self.filter, self.n).eval(x, y)
    }

    /// 𝔾_n(x, y) − Φ_n(x, y) computed as Σ_k w_k T(x, z_k) D(z_k, y), where T
    /// is the part of W(z)G(x, z) beyond band B*·n. The head of the
    /// expansion is integrated exactly by the product rule and contributes
    /// Φ_n, so this avoids the cancellation of the direct difference.
    pub fn deviation(&self, x: &Point, y: &Point) -> Result<f64> {
        let lo = self.kernel.mask.b_star * self.n;
        let d = self.dual_column(y)?;
        Ok(self
            .rule
            .nodes
            .iter()
            .zip(&self.rule.weights)
            .zip(&d)
            .map(|((z, w), dk)| {
                if *dk == 0.0 {
                    0.0
                } else {
                    w * self.kernel.expansion_tail(x, z, lo, self.g_band) * dk
                }
            })
            .sum())
    }

    /// max over probe pairs of |𝔾_n − Φ_n| by the stable route.
    pub fn sup_deviation(&self, pairs: &[(Point, Point)]) -> Result<f64> {
        let vals: Vec<f64> = pairs
            .par_iter()
            .map(|(x, y)| self.deviation(x, y).map(f64::abs))
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    /// max over probe pairs of |𝔾_n − Φ_n| by direct summation.
    pub fn sup_deviation_direct(&self, pairs: &[(Point, Point)]) -> Result<f64> {
        let vals: Vec<f64> = pairs
            .par_iter()
            .map(|(x, y)| Ok((self.eval(x, y)? - self.phi(x, y)).abs()))
            .collect::<Result<_>>()?;
        Ok(vals.into_iter().fold(0.0, f64::max))
    }

    pub fn meta(&self) -> NetworkMeta {
        NetworkMeta {
            system: self.kernel.system.to_string(),
            mask: self.kernel.mask.spec(),
            n: self.n,
            b_star: self.kernel.mask.b_star,
            nodes: self.rule.len(),
            rule_order: self.rule.order,
            rule_product_order: self.rule.product_order,
            rule_residual: self.rule.residual,
        }
    }

    /// Writes one row per node: coordinates, then a_k(y) for each probe y.
    pub fn write_csv<W: Write>(&self, probes: &[Point], mut out: W) -> Result<()> {
        let d = self.kernel.system.coord_dim();
        let names = ["x0", "x1", "x2"];
        let mut header: Vec<String> = names[..d].iter().map(|s| s.to_string()).collect();
        header.extend((0..probes.len()).map(|i| format!("coef_y{i}")));
        writeln!(out, "{}", header.join(","))?;
        let cols: Vec<Vec<f64>> = probes.iter().map(|y| self.coefficients(y)).collect::<Result<_>>()?;
        for (k, z) in self.rule.nodes.iter().enumerate() {
            let mut cells: Vec<String> = z.0[..d].iter().map(|v| format!("{v:.16e}")).collect();
            cells.extend(cols.iter().map(|c| format!("{:.16e}", c[k])));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}
