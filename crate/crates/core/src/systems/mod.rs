//! Concrete data spaces: the torus 𝕋^q (q = 1, 2), the sphere 𝕊², and the
//! Hermite line ℝ.
//!
//! Every system exposes an orthonormal eigen-basis ordered by eigenvalue, a
//! metric, a reference measure μ*, and the discretization helpers used by the
//! quadrature and network code.

pub(crate) mod grid;
pub mod special;

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use grid::GridMeasure;

const TAU: f64 = 2.0 * PI;
/// Largest basis matrix `eval_basis` will allocate (512 MiB of f64).
pub const MAX_BASIS_ENTRIES: usize = 1 << 26;

/// A point of one of the data spaces, stored in three ambient coordinates.
///
/// Torus points use angles in the leading `q` slots, sphere points are unit
/// vectors, Hermite points use the first slot only.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point(pub [f64; 3]);

impl Point {
    pub fn angle(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }

    pub fn angles(x: f64, y: f64) -> Self {
        Point([x, y, 0.0])
    }

    pub fn line(x: f64) -> Self {
        Point([x, 0.0, 0.0])
    }

    /// Unit vector from colatitude `theta` and azimuth `phi`.
    pub fn spherical(theta: f64, phi: f64) -> Self {
        let s = theta.sin();
        Point([s * phi.cos(), s * phi.sin(), theta.cos()])
    }

    /// Normalizes an ambient vector onto the unit sphere.
    pub fn unit(v: [f64; 3]) -> Self {
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        Point([v[0] / r, v[1] / r, v[2] / r])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn coords(&self) -> &[f64; 3] {
        &self.0
    }
}

/// One of the supported data spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum System {
    /// 𝕋^q with the normalized measure dx/(2π)^q and λ_k = |k|_∞.
    Torus { q: usize },
    /// 𝕊² with the normalized surface measure and λ = degree.
    Sphere2,
    /// ℝ with Lebesgue measure, the scaled Hermite functions
    /// `a^{1/2} φ_k(a x)` and λ_k = √k. `window` is the constant c of the
    /// compact window K_n = [−cn/a, cn/a].
    Hermite { scale: f64, window: f64 },
}

impl System {
    pub const TORUS1: System = System::Torus { q: 1 };
    pub const TORUS2: System = System::Torus { q: 2 };
    pub const HERMITE: System = System::Hermite {
        scale: 1.0,
        window: 2.0,
    };

    /// Hermite system with a rescaled argument.
    pub fn hermite_scaled(scale: f64) -> Self {
        System::Hermite { scale, window: 2.0 }
    }

    /// Exponent in the ball-measure condition.
    pub fn q(&self) -> usize {
        match self {
            System::Torus { q } => *q,
            System::Sphere2 => 2,
            System::Hermite { .. } => 1,
        }
    }

    /// Number of meaningful ambient coordinates.
    pub fn coord_dim(&self) -> usize {
        match self {
            System::Torus { q } => *q,
            System::Sphere2 => 3,
            System::Hermite { .. } => 1,
        }
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, System::Hermite { .. })
    }

    /// Constant A* of the product assumption.
    pub fn product_constant(&self) -> f64 {
        match self {
            System::Hermite { .. } => SQRT_2,
            _ => 2.0,
        }
    }

    /// B_n = c·n for the Bernstein–Lipschitz inequality.
    pub fn bernstein(&self, n: f64) -> f64 {
        let c = match self {
            System::Torus { q } => *q as f64,
            System::Sphere2 => 1.0,
            System::Hermite { scale, .. } => SQRT_2 * scale,
        };
        c * n
    }

    /// Largest integer frequency (or degree) whose eigenvalue is below `n`.
    fn max_freq(n: f64) -> Option<usize> {
        if n <= 0.0 {
            return None;
        }
        Some((n.ceil() as usize).saturating_sub(1))
    }

    /// dim Π_n.
    pub fn band_size(&self, n: f64) -> usize {
        match self {
            System::Torus { q } => match Self::max_freq(n) {
                Some(k) => (2 * k + 1).pow(*q as u32),
                None => 0,
            },
            System::Sphere2 => match Self::max_freq(n) {
                Some(l) => (l + 1) * (l + 1),
                None => 0,
            },
            System::Hermite { .. } => {
                if n <= 0.0 {
                    0
                } else {
                    (n * n).ceil() as usize
                }
            }
        }
    }

    fn check_band(&self, n: f64) -> Result<usize> {
        let size = self.band_size(n);
        if size == 0 {
            return Err(Error::EmptyBand(n));
        }
        Ok(size)
    }

    /// Eigenvalues λ_k for λ_k < n in basis order (nondecreasing).
    pub fn eigenvalues(&self, n: f64) -> Vec<f64> {
        match self {
            System::Torus { q: 1 } => {
                let size = self.band_size(n);
                (0..size).map(|i| i.div_ceil(2) as f64).collect()
            }
            System::Torus { .. } => torus2_indices(Self::max_freq(n).unwrap_or(0))
                .iter()
                .take(self.band_size(n))
                .map(|&(a, b)| freq_1d(a).max(freq_1d(b)) as f64)
                .collect(),
            System::Sphere2 => {
                let mut out = Vec::with_capacity(self.band_size(n));
                if let Some(lmax) = Self::max_freq(n) {
                    for l in 0..=lmax {
                        out.extend(std::iter::repeat_n(l as f64, 2 * l + 1));
                    }
                }
                out
            }
            System::Hermite { .. } => (0..self.band_size(n)).map(|k| (k as f64).sqrt()).collect(),
        }
    }

    /// Checks that a point is finite.
    pub fn validate(&self, p: &Point) -> Result<()> {
        if p.0[..self.coord_dim()].iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinitePoint)
        }
    }

    /// Values φ_k(x) for all λ_k < n, written into `out` in basis order.
    pub fn basis_row(&self, n: f64, x: &Point, out: &mut Vec<f64>) -> Result<()> {
        let size = self.check_band(n)?;
        self.validate(x)?;
        match self {
            System::Torus { q: 1 } => {
                out.clear();
                torus_row_1d(x.0[0], size.div_ceil(2) - 1, out);
            }
            System::Torus { .. } => {
                let k = Self::max_freq(n).unwrap_or(0);
                let mut r1 = Vec::new();
                let mut r2 = Vec::new();
                torus_row_1d(x.0[0], k, &mut r1);
                torus_row_1d(x.0[1], k, &mut r2);
                out.clear();
                out.extend(torus2_indices(k).iter().map(|&(a, b)| r1[a] * r2[b]));
            }
            System::Sphere2 => {
                let lmax = Self::max_freq(n).unwrap_or(0);
                special::real_spherical_harmonics(x.0, lmax + 1, out);
            }
            System::Hermite { scale, .. } => {
                special::hermite_functions(scale * x.0[0], size, out);
                let s = scale.sqrt();
                out.iter_mut().for_each(|v| *v *= s);
            }
        }
        Ok(())
    }

    /// Matrix of φ_k(x): one row per point, one column per λ_k < n.
    pub fn eval_basis(&self, n: f64, pts: &[Point]) -> Result<DMatrix<f64>> {
        let cols = self.check_band(n)?;
        if pts.len().saturating_mul(cols) > MAX_BASIS_ENTRIES {
            return Err(Error::Unsupported(format!(
                "basis matrix {} x {cols} at band {n} exceeds {MAX_BASIS_ENTRIES} entries",
                pts.len()
            )));
        }
        let rows: Vec<Vec<f64>> = pts
            .par_iter()
            .map(|p| {
                let mut row = Vec::with_capacity(cols);
                self.basis_row(n, p, &mut row).map(|_| row)
            })
            .collect::<Result<_>>()?;
        Ok(DMatrix::from_fn(pts.len(), cols, |i, j| rows[i][j]))
    }

    /// Metric ρ: ℓ∞ wrap-around distance on the torus, geodesic distance on
    /// the sphere, absolute difference on the line.
    pub fn distance(&self, x: &Point, y: &Point) -> f64 {
        match self {
            System::Torus { q } => (0..*q)
                .map(|i| wrap_abs(x.0[i] - y.0[i]))
                .fold(0.0, f64::max),
            System::Sphere2 => {
                let [a, b, c] = x.0;
                let [d, e, f] = y.0;
                let dot = a * d + b * e + c * f;
                let cx = b * f - c * e;
                let cy = c * d - a * f;
                let cz = a * e - b * d;
                (cx * cx + cy * cy + cz * cz).sqrt().atan2(dot)
            }
            System::Hermite { .. } => (x.0[0] - y.0[0]).abs(),
        }
    }

    /// Christoffel-type sum Σ_{λ_k<n} φ_k(x)².
    pub fn christoffel(&self, n: f64, x: &Point) -> Result<f64> {
        let mut row = Vec::new();
        self.basis_row(n, x, &mut row)?;
        Ok(row.iter().map(|v| v * v).sum())
    }

    /// Largest distance realized in the space (∞ on the line).
    pub fn diameter(&self) -> f64 {
        match self {
            System::Torus { .. } | System::Sphere2 => PI,
            System::Hermite { .. } => f64::INFINITY,
        }
    }

    /// Half-width of the compact window K_n used on the line.
    pub fn window_half_width(&self, n: f64) -> Option<f64> {
        match self {
            System::Hermite { scale, window } => Some(window * n / scale),
            _ => None,
        }
    }

    /// μ*(B(x, r)), which is independent of x on the compact spaces.
    pub fn ball_measure(&self, r: f64) -> f64 {
        match self {
            System::Torus { q } => (2.0 * r).min(TAU).powi(*q as i32) / TAU.powi(*q as i32),
            System::Sphere2 => (1.0 - r.min(PI).cos()) / 2.0,
            System::Hermite { .. } => 2.0 * r,
        }
    }

    /// i.i.d. draws from μ* (restricted to the window K_n on the line).
    pub fn sample_reference(&self, n: f64, m: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n, m)
    }

    pub(crate) fn sample_with<R: Rng>(&self, rng: &mut R, n: f64, m: usize) -> Vec<Point> {
        (0..m).map(|_| self.sample_one(rng, n)).collect()
    }

    pub(crate) fn sample_one<R: Rng>(&self, rng: &mut R, n: f64) -> Point {
        match self {
            System::Torus { q: 1 } => Point::angle(rng.random_range(0.0..TAU)),
            System::Torus { .. } => Point::angles(rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)),
            System::Sphere2 => {
                let z: f64 = rng.random_range(-1.0..=1.0);
                let phi: f64 = rng.random_range(0.0..TAU);
                let s = (1.0 - z * z).max(0.0).sqrt();
                Point([s * phi.cos(), s * phi.sin(), z])
            }
            System::Hermite { .. } => {
                let w = self.window_half_width(n).unwrap_or(1.0);
                Point::line(rng.random_range(-w..=w))
            }
        }
    }

    /// ∫ φ_k dμ* for every λ_k < n.
    pub fn moments(&self, n: f64) -> Vec<f64> {
        let size = self.band_size(n);
        let mut m = vec![0.0; size];
        match self {
            System::Torus { .. } | System::Sphere2 => {
                if size > 0 {
                    m[0] = 1.0;
                }
            }
            System::Hermite { scale, .. } => {
                // ∫ φ_{2j} = √2 π^{1/4} a_j with a_j = a_{j-1} √((2j−1)/(2j)), a_0 = 1.
                let mut a = 1.0;
                let base = SQRT_2 * PI.powf(0.25) / scale.sqrt();
                for k in (0..size).step_by(2) {
                    if k > 0 {
                        let j = (k / 2) as f64;
                        a *= ((2.0 * j - 1.0) / (2.0 * j)).sqrt();
                    }
                    m[k] = base * a;
                }
            }
        }
        m
    }

    /// Σ_{λ_k<band} c(λ_k) φ_k(x) φ_k(y), using the addition formula on the
    /// torus and sphere and the Hermite recurrence on the line.
    pub fn spectral_sum(&self, band: f64, coef: &dyn Fn(f64) -> f64, x: &Point, y: &Point) -> f64 {
        let Some(kmax) = Self::max_freq(band) else {
            return 0.0;
        };
        match self {
            System::Torus { q: 1 } => {
                let d = x.0[0] - y.0[0];
                let (mut total, c, s) = (coef(0.0), d.cos(), d.sin());
                let (mut ck, mut sk) = (1.0, 0.0);
                for k in 1..=kmax {
                    (ck, sk) = (ck * c - sk * s, sk * c + ck * s);
                    total += 2.0 * coef(k as f64) * ck;
                }
                total
            }
            System::Torus { .. } => {
                let d1 = x.0[0] - y.0[0];
                let d2 = x.0[1] - y.0[1];
                let c1: Vec<f64> = (0..=kmax).map(|k| (k as f64 * d1).cos()).collect();
                let c2: Vec<f64> = (0..=kmax).map(|k| (k as f64 * d2).cos()).collect();
                let mut total = 0.0;
                for (a, ca) in c1.iter().enumerate() {
                    for (b, cb) in c2.iter().enumerate() {
                        let mult = if a == 0 { 1.0 } else { 2.0 } * if b == 0 { 1.0 } else { 2.0 };
                        total += mult * coef(a.max(b) as f64) * ca * cb;
                    }
                }
                total
            }
            System::Sphere2 => {
                let t = (x.0[0] * y.0[0] + x.0[1] * y.0[1] + x.0[2] * y.0[2]).clamp(-1.0, 1.0);
                let mut p = Vec::with_capacity(kmax + 1);
                special::legendre_polys(t, kmax + 1, &mut p);
                p.iter()
                    .enumerate()
                    .map(|(l, pl)| coef(l as f64) * (2 * l + 1) as f64 * pl)
                    .sum()
            }
            System::Hermite { .. } => {
                let mut a = Vec::new();
                let mut b = Vec::new();
                // band validated above
                let _ = self.basis_row(band, x, &mut a);
                let _ = self.basis_row(band, y, &mut b);
                a.iter()
                    .zip(&b)
                    .enumerate()
                    .map(|(k, (u, v))| coef((k as f64).sqrt()) * u * v)
                    .sum()
            }
        }
    }

    /// Tail sum Σ_{lo ≤ λ_k < hi} c(λ_k) φ_k(x) φ_k(y).
    pub fn spectral_tail(&self, lo: f64, hi: f64, coef: &dyn Fn(f64) -> f64, x: &Point, y: &Point) -> f64 {
        let masked = |lam: f64| if lam >= lo { coef(lam) } else { 0.0 };
        self.spectral_sum(hi, &masked, x, y)
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            System::Torus { q } => write!(f, "torus:{q}"),
            System::Sphere2 => write!(f, "sphere2"),
            System::Hermite { scale, .. } if *scale == 1.0 => write!(f, "hermite"),
            System::Hermite { scale, .. } => write!(f, "hermite:{scale}"),
        }
    }
}

impl FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "torus:1" => Ok(System::TORUS1),
            "torus:2" => Ok(System::TORUS2),
            "sphere2" => Ok(System::Sphere2),
            "hermite" => Ok(System::HERMITE),
            other => match other.strip_prefix("hermite:").map(str::parse::<f64>) {
                Some(Ok(a)) if a > 0.0 && a.is_finite() => Ok(System::hermite_scaled(a)),
                _ => Err(Error::UnknownSystem(other.to_string())),
            },
        }
    }
}

/// |d| reduced to [0, π] modulo 2π.
pub(crate) fn wrap_abs(d: f64) -> f64 {
    let r = d.rem_euclid(TAU);
    r.min(TAU - r)
}

fn freq_1d(i: usize) -> usize {
    i.div_ceil(2)
}

fn torus_row_1d(x: f64, kmax: usize, out: &mut Vec<f64>) {
    out.push(1.0);
    let (c, s) = (x.cos(), x.sin());
    let (mut ck, mut sk) = (1.0, 0.0);
    for _ in 1..=kmax {
        (ck, sk) = (ck * c - sk * s, sk * c + ck * s);
        out.push(SQRT_2 * ck);
        out.push(SQRT_2 * sk);
    }
}

/// Index pairs of the 2-torus basis with max frequency ≤ kmax, sorted by λ.
fn torus2_indices(kmax: usize) -> Vec<(usize, usize)> {
    let len = 2 * kmax + 1;
    let mut idx: Vec<(usize, usize)> = (0..len).flat_map(|a| (0..len).map(move |b| (a, b))).collect();
    idx.sort_by_key(|&(a, b)| (freq_1d(a).max(freq_1d(b)), a, b));
    idx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_system_ids() {
        assert_eq!("torus:1".parse::<System>().unwrap(), System::TORUS1);
        assert_eq!("sphere2".parse::<System>().unwrap(), System::Sphere2);
        assert_eq!("hermite".parse::<System>().unwrap(), System::HERMITE);
        assert!("torus:3".parse::<System>().is_err());
        for s in ["torus:1", "torus:2", "sphere2", "hermite"] {
            assert_eq!(s.parse::<System>().unwrap().to_string(), s);
        }
    }

    #[test]
    fn hermite_origin_value() {
        let row = System::HERMITE.eval_basis(1.0, &[Point::line(0.0)]).unwrap();
        assert!((row[(0, 0)] - 0.751_125_544_464_942_5).abs() < 1e-15);
    }

    #[test]
    fn torus_constant_function() {
        for x in [0.0, 1.3, 5.9] {
            let m = System::TORUS1.eval_basis(4.0, &[Point::angle(x)]).unwrap();
            assert_eq!(m[(0, 0)], 1.0);
        }
    }

    #[test]
    fn empty_band_and_nonfinite_errors() {
        assert!(matches!(
            System::TORUS1.eval_basis(0.0, &[Point::angle(0.0)]),
            Err(Error::EmptyBand(_))
        ));
        assert!(matches!(
            System::TORUS1.eval_basis(2.0, &[Point::angle(f64::NAN)]),
            Err(Error::NonFinitePoint)
        ));
    }

    #[test]
    fn band_sizes() {
        assert_eq!(System::TORUS1.band_size(8.0), 15);
        assert_eq!(System::TORUS2.band_size(3.0), 25);
        assert_eq!(System::Sphere2.band_size(4.0), 16);
        assert_eq!(System::HERMITE.band_size(2.0), 4);
        assert_eq!(System::HERMITE.band_size(2.5), 7);
        assert_eq!(System::TORUS1.band_size(2.5), 5);
    }

    #[test]
    fn eigenvalues_sorted_and_start_at_zero() {
        for sys in [System::TORUS1, System::TORUS2, System::Sphere2, System::HERMITE] {
            let ev = sys.eigenvalues(6.0);
            assert_eq!(ev.len(), sys.band_size(6.0));
            assert_eq!(ev[0], 0.0);
            assert!(ev.windows(2).all(|w| w[0] <= w[1]));
            assert!(ev.iter().all(|&l| l < 6.0));
        }
    }

    #[test]
    fn distance_examples() {
        let t = System::TORUS1;
        assert!((t.distance(&Point::angle(0.1), &Point::angle(TAU - 0.1)) - 0.2).abs() < 1e-12);
        let s = System::Sphere2;
        let np = Point([0.0, 0.0, 1.0]);
        let sp = Point([0.0, 0.0, -1.0]);
        assert!((s.distance(&np, &sp) - PI).abs() < 1e-12);
        let h = System::HERMITE;
        assert_eq!(h.distance(&Point::line(-1.0), &Point::line(3.0)), 4.0);
    }

    #[test]
    fn christoffel_torus_and_sphere() {
        for x in [0.0, 0.7, 4.0] {
            let c = System::TORUS1.christoffel(8.0, &Point::angle(x)).unwrap();
            assert!((c - 15.0).abs() < 1e-12);
        }
        // Probability normalization: Σ_{ℓ<4} (2ℓ+1) = 16.
        let c = System::Sphere2.christoffel(4.0, &Point::spherical(0.4, 2.2)).unwrap();
        assert!((c - 16.0).abs() < 1e-12);
    }

    #[test]
    fn sampling_is_reproducible_and_in_domain() {
        let a = System::TORUS1.sample_reference(1.0, 4, 11);
        let b = System::TORUS1.sample_reference(1.0, 4, 11);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| (0.0..TAU).contains(&p.x())));
        let h = System::HERMITE.sample_reference(4.0, 500, 3);
        assert!(h.iter().all(|p| p.x().abs() <= 8.0));
    }

    #[test]
    fn spectral_sum_matches_basis_sum() {
        let coef = |l: f64| (-0.3 * l).exp();
        for sys in [System::TORUS1, System::TORUS2, System::Sphere2, System::HERMITE] {
            let pts = sys.sample_reference(3.0, 2, 5);
            let (x, y) = (pts[0], pts[1]);
            let band = 5.0;
            let a = sys.eval_basis(band, &[x, y]).unwrap();
            let ev = sys.eigenvalues(band);
            let direct: f64 = ev.iter().enumerate().map(|(k, &l)| coef(l) * a[(0, k)] * a[(1, k)]).sum();
            let fast = sys.spectral_sum(band, &coef, &x, &y);
            assert!((direct - fast).abs() < 1e-11, "{sys}: {direct} vs {fast}");
        }
    }

    #[test]
    fn hermite_moments_match_quadrature() {
        // ∫ φ_k dx by a fine trapezoid rule on [-30, 30].
        for sys in [System::HERMITE, System::hermite_scaled(SQRT_2)] {
            let m = sys.moments(3.0);
            let h = 1e-3;
            let mut acc = vec![0.0; m.len()];
            let mut row = Vec::new();
            let mut x = -30.0;
            while x <= 30.0 {
                sys.basis_row(3.0, &Point::line(x), &mut row).unwrap();
                for (a, v) in acc.iter_mut().zip(&row) {
                    *a += h * v;
                }
                x += h;
            }
            for (a, b) in acc.iter().zip(&m) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }
}
