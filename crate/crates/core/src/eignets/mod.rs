//! Eignet kernels G defined by smooth masks, the dual kernel D_{G,n}, the
//! prefabricated network 𝔾_n and the sample estimator built on it.

mod estimator;
mod mask;
mod network;

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::systems::{Point, System};

pub use estimator::Estimator;
pub use mask::{Mask, MaskFn, MaskKind, MaskSpec};
pub use network::{NetworkMeta, PrefabNetwork};

/// Weight W in W(y)G(x, y) = Σ b(λ_k) φ_k(x) φ_k(y).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Weight {
    Unit,
    /// exp(−c y²)
    Gaussian { c: f64 },
}

impl Weight {
    pub fn eval(&self, y: &Point) -> f64 {
        match self {
            Weight::Unit => 1.0,
            Weight::Gaussian { c } => (-c * y.x() * y.x()).exp(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct EignetKernel {
    pub system: System,
    pub mask: Mask,
    pub weight: Weight,
}

impl EignetKernel {
    pub fn new(system: System, mask: Mask) -> Self {
        let weight = match (&mask.kind, system) {
            (MaskKind::Mehler, System::Hermite { .. }) => Weight::Gaussian { c: 0.25 },
            _ => Weight::Unit,
        };
        EignetKernel { system, mask, weight }
    }

    /// The Gaussian network on the line: G(x, y) = exp(−(x − (√3/2)y)²) with
    /// W(y) = exp(−y²/4).
    pub fn mehler() -> Self {
        Self::new(System::HERMITE, Mask::mehler())
    }

    /// Σ_{λ_k<band} b(λ_k) φ_k(x) φ_k(y), the truncated W(y)G(x, y).
    pub fn expansion(&self, x: &Point, y: &Point, band: f64) -> f64 {
        self.system.spectral_sum(band, &|l| self.mask.eval(l), x, y)
    }

    /// Σ_{lo≤λ_k<hi} b(λ_k) φ_k(x) φ_k(y).
    pub fn expansion_tail(&self, x: &Point, y: &Point, lo: f64, hi: f64) -> f64 {
        self.system.spectral_tail(lo, hi, &|l| self.mask.eval(l), x, y)
    }

    /// W(y)G(x, y) in closed form where one is available: the periodized
    /// Gaussian and multiquadric on the circle and the Mehler pair.
    pub fn closed_form(&self, x: &Point, y: &Point) -> Option<f64> {
        match (&self.mask.kind, self.system) {
            (MaskKind::Gaussian, System::Torus { q: 1 }) if self.mask.q == 1 => {
                let d = crate::systems::wrap_abs(x.x() - y.x());
                Some(TAU * periodized(|u| (-u * u / 2.0).exp(), d, 6))
            }
            (MaskKind::ExpDecay { alpha }, System::Torus { q: 1 }) if self.mask.q == 1 => {
                let d = x.x() - y.x();
                Some(PI / alpha * alpha.sinh() / (alpha.cosh() - d.cos()))
            }
            (MaskKind::Mehler, System::Hermite { scale: 1.0, .. }) => {
                let (u, v) = (x.x(), y.x());
                Some((-u * u - v * v + 3f64.sqrt() * u * v).exp())
            }
            _ => None,
        }
    }

    /// W(y)G(x, y): closed form when available, else the expansion at the
    /// smallest power-of-two band meeting `tol`.
    pub fn weighted_kernel(&self, x: &Point, y: &Point, tol: f64) -> Result<f64> {
        if let Some(v) = self.closed_form(x, y) {
            return Ok(v);
        }
        let band = self.mask.truncation_band(tol)?;
        Ok(self.expansion(x, y, band))
    }

    /// G(x, y) from the expansion truncated at `band`; rejects bands with
    /// band^q · b(band) above `tol` and reports the band that would do.
    pub fn kernel_g(&self, x: &Point, y: &Point, band: f64, tol: f64) -> Result<f64> {
        let q = self.system.q() as i32;
        if band.powi(q) * self.mask.eval(band) > tol {
            let required = self.mask.truncation_band(tol)?;
            return Err(Error::TruncationBandTooSmall { given: band, required, tol });
        }
        Ok(self.expansion(x, y, band) / self.weight.eval(y))
    }

    /// Checks b(λ) ≥ 1e−300 for every λ_k < n.
    pub fn check_dual_band(&self, n: f64) -> Result<()> {
        let top = self.system.eigenvalues(n).last().copied().unwrap_or(0.0);
        let value = self.mask.eval(top);
        if !(value >= 1e-300) {
            return Err(Error::MaskUnderflow { lambda: top, value });
        }
        Ok(())
    }

    /// D_{G,n}(z, y) = Σ_{λ_k<n} h(λ_k/n) b(λ_k)^{−1} φ_k(z) φ_k(y).
    pub fn dual_kernel(&self, filter: &crate::filters::Filter, n: f64, z: &Point, y: &Point) -> Result<f64> {
        self.check_dual_band(n)?;
        Ok(self
            .system
            .spectral_sum(n, &|l| filter.eval(l / n) / self.mask.eval(l), z, y))
    }
}

/// Σ_{|m|≤terms} f(d − 2πm).
pub(crate) fn periodized(f: impl Fn(f64) -> f64, d: f64, terms: i32) -> f64 {
    (-terms..=terms).map(|m| f(d - TAU * m as f64)).sum()
}
