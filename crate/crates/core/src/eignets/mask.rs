use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient function of a custom mask.
pub type MaskFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum MaskKind {
    /// (2π)^{q/2} e^{−t²/2}: periodized Gaussian on the torus.
    Gaussian,
    /// π^{(q+1)/2} / (Γ((q+1)/2) α) · e^{−αt}: periodized multiquadric.
    ExpDecay { alpha: f64 },
    /// e^{−s t²}.
    Heat { s: f64 },
    /// √(2π/3) · 3^{−t²/2}: the Mehler pair on the Hermite line.
    Mehler,
    Custom { name: String, f: MaskFn },
}

impl fmt::Debug for MaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskKind::Gaussian => write!(f, "Gaussian"),
            MaskKind::ExpDecay { alpha } => write!(f, "ExpDecay {{ alpha: {alpha} }}"),
            MaskKind::Heat { s } => write!(f, "Heat {{ s: {s} }}"),
            MaskKind::Mehler => write!(f, "Mehler"),
            MaskKind::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

/// Smooth mask b with its constant B*.
#[derive(Clone, Debug)]
pub struct Mask {
    pub kind: MaskKind,
    /// Dimension exponent used in the normalizing constants.
    pub q: usize,
    pub b_star: f64,
}

/// Serializable description of a mask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    pub name: String,
    pub parameter: Option<f64>,
    pub q: usize,
    pub b_star: f64,
}

impl Mask {
    pub fn gaussian(q: usize) -> Self {
        Mask { kind: MaskKind::Gaussian, q, b_star: 2.0 }
    }

    /// B* is the smallest power of two ≥ 2 passing the decay certificate,
    /// so 2 for α ≥ 1.39 and larger for flatter masks.
    pub fn exp_decay(q: usize, alpha: f64) -> Self {
        let mut m = Mask { kind: MaskKind::ExpDecay { alpha }, q, b_star: 2.0 };
        while m.b_star < 1024.0 && !m.decay_certificate().is_empty() {
            m.b_star *= 2.0;
        }
        m
    }

    pub fn heat(q: usize, s: f64) -> Self {
        Mask { kind: MaskKind::Heat { s }, q, b_star: 2.0 }
    }

    pub fn mehler() -> Self {
        Mask { kind: MaskKind::Mehler, q: 1, b_star: 2.0 }
    }

    pub fn custom(name: &str, q: usize, b_star: f64, f: MaskFn) -> Self {
        Mask {
            kind: MaskKind::Custom { name: name.to_string(), f },
            q,
            b_star,
        }
    }

    pub fn with_b_star(mut self, b_star: f64) -> Self {
        self.b_star = b_star;
        self
    }

    /// Smallest power of two B* ≥ 2 with b(B*·n)/b(n) ≤ tol (capped at 1024).
    pub fn auto_b_star(&self, n: f64, tol: f64) -> f64 {
        let mut b = 2.0;
        while b < 1024.0 && self.eval(b * n) > tol * self.eval(n) {
            b *= 2.0;
        }
        b
    }

    /// b(t) for t ≥ 0 (negative arguments are reflected).
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match &self.kind {
            MaskKind::Gaussian => (2.0 * PI).powf(self.q as f64 / 2.0) * (-t * t / 2.0).exp(),
            MaskKind::ExpDecay { alpha } => multiquadric_constant(self.q) / alpha * (-alpha * t).exp(),
            MaskKind::Heat { s } => (-s * t * t).exp(),
            MaskKind::Mehler => (2.0 * PI / 3.0).sqrt() * 3f64.powf(-t * t / 2.0),
            MaskKind::Custom { f, .. } => f(t),
        }
    }

    /// Smallest power of two Λ with Λ^q b(Λ) ≤ tol.
    pub fn truncation_band(&self, tol: f64) -> Result<f64> {
        let mut lam: f64 = 1.0;
        while lam <= 1e6 {
            if lam.powi(self.q as i32) * self.eval(lam).abs() <= tol {
                return Ok(lam);
            }
            lam *= 2.0;
        }
        Err(Error::InvalidArgument(format!(
            "mask does not decay below {tol:e} before band 1e6"
        )))
    }

    /// Checks b(B*t)/b(t) ≤ t^{−R} for t ∈ {4, 8, 16, 32}, R ∈ {1, 2, 4};
    /// returns the failing (t, R, ratio) triples.
    pub fn decay_certificate(&self) -> Vec<(f64, i32, f64)> {
        let mut bad = Vec::new();
        for t in [4.0f64, 8.0, 16.0, 32.0] {
            let ratio = self.eval(self.b_star * t) / self.eval(t);
            for r in [1, 2, 4] {
                if !(ratio <= t.powi(-r)) {
                    bad.push((t, r, ratio));
                }
            }
        }
        bad
    }

    pub fn spec(&self) -> MaskSpec {
        let (name, parameter) = match &self.kind {
            MaskKind::Gaussian => ("gaussian".to_string(), None),
            MaskKind::ExpDecay { alpha } => ("exp_decay".to_string(), Some(*alpha)),
            MaskKind::Heat { s } => ("heat".to_string(), Some(*s)),
            MaskKind::Mehler => ("mehler".to_string(), None),
            MaskKind::Custom { name, .. } => (name.clone(), None),
        };
        MaskSpec {
            name,
            parameter,
            q: self.q,
            b_star: self.b_star,
        }
    }
}

/// π^{(q+1)/2} / Γ((q+1)/2).
fn multiquadric_constant(q: usize) -> f64 {
    // Γ((q+1)/2) by the half-integer recurrence.
    let mut gamma = if q % 2 == 1 { 1.0 } else { PI.sqrt() };
    let mut x = if q % 2 == 1 { 1.0 } else { 0.5 };
    while x + 1e-9 < (q as f64 + 1.0) / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    PI.powf((q as f64 + 1.0) / 2.0) / gamma
}
