//! Special functions and classical Gauss rules used by the concrete systems.

use std::f64::consts::PI;

/// Hermite functions `φ_0..φ_{count-1}` at `x`, orthonormal on the real line
/// under Lebesgue measure.
///
/// The three-term recurrence is run on an unscaled sequence with a separate
/// log-scale, so values far into the Plancherel–Rotach region (where
/// `exp(-x²/2)` alone underflows) are still produced correctly.
pub fn hermite_functions(x: f64, count: usize, out: &mut Vec<f64>) {
    out.clear();
    if count == 0 {
        return;
    }
    const RESCALE: f64 = 1e100;
    let ln_rescale = RESCALE.ln();
    let mut log_scale = -0.5 * x * x - 0.25 * PI.ln();
    let emit = |v: f64, log_scale: f64| -> f64 {
        if v == 0.0 {
            0.0
        } else {
            v.signum() * (v.abs().ln() + log_scale).exp()
        }
    };
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    out.push(emit(cur, log_scale));
    for k in 0..count.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += ln_rescale;
        }
        out.push(emit(cur, log_scale));
    }
}

/// Sum of squares of the first `count` Hermite functions at `x`.
pub fn hermite_christoffel_sum(x: f64, count: usize) -> f64 {
    let mut buf = Vec::with_capacity(count);
    hermite_functions(x, count, &mut buf);
    buf.iter().map(|v| v * v).sum()
}

/// Legendre polynomials `P_0..P_{count-1}` at `t` (Bonnet recurrence).
pub fn legendre_polys(t: f64, count: usize, out: &mut Vec<f64>) {
    out.clear();
    if count == 0 {
        return;
    }
    out.push(1.0);
    if count == 1 {
        return;
    }
    out.push(t);
    for l in 2..count {
        let lf = l as f64;
        let v = ((2.0 * lf - 1.0) * t * out[l - 1] - (lf - 1.0) * out[l - 2]) / lf;
        out.push(v);
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` (weights sum to 2).
pub fn gauss_legendre(count: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; count];
    let mut weights = vec![0.0; count];
    let nf = count as f64;
    for i in 0..count.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if count == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for l in 2..=count {
                    let lf = l as f64;
                    let p2 = ((2.0 * lf - 1.0) * z * p1 - (lf - 1.0) * p0) / lf;
                    p0 = p1;
                    p1 = p2;
                }
            }
            // p1 = P_n(z), p0 = P_{n-1}(z)
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        if count == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[count - 1 - i] = z;
        weights[i] = w;
        weights[count - 1 - i] = w;
    }
    (nodes, weights)
}

/// Eigenvalues of a symmetric tridiagonal matrix (implicit QL with Wilkinson
/// shifts). `diag` has length n, `off` has length n-1. Returned ascending.
pub fn symmetric_tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(&off[..n.saturating_sub(1)]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                break;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(|a, b| a.total_cmp(b));
    d
}

/// Gauss–Hermite nodes with weights for plain Lebesgue measure on the line:
/// `∫ f(x) dx ≈ Σ w_i f(x_i)`, exact when `f` is a product of two Hermite
/// functions of total degree below `2·count`.
pub fn gauss_hermite_lebesgue(count: usize) -> (Vec<f64>, Vec<f64>) {
    let diag = vec![0.0; count];
    let off: Vec<f64> = (1..count).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut nodes = symmetric_tridiagonal_eigenvalues(&diag, &off);
    let mut buf = Vec::with_capacity(count + 1);
    for x in nodes.iter_mut() {
        // Newton polish on φ_count; φ' = sqrt(2n) φ_{n-1} - x φ_n.
        for _ in 0..3 {
            hermite_functions(*x, count + 1, &mut buf);
            let f = buf[count];
            let df = (2.0 * count as f64).sqrt() * buf[count - 1] - *x * f;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() < 1e-15 * x.abs().max(1.0) {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| 1.0 / hermite_christoffel_sum(x, count))
        .collect();
    (nodes, weights)
}

/// Orthonormal (probability-measure) real spherical harmonics of degree
/// `< band` at the unit vector `(x, y, z)`, ordered by degree and then by
/// order `m = -l..=l` (negative orders are the sine harmonics).
pub fn real_spherical_harmonics(p: [f64; 3], band: usize, out: &mut Vec<f64>) {
    out.clear();
    if band == 0 {
        return;
    }
    let [x, y, z] = p;
    let s = (x * x + y * y).sqrt();
    let (cphi, sphi) = if s > 0.0 { (x / s, y / s) } else { (1.0, 0.0) };
    // cos(mφ), sin(mφ)
    let mut cos_m = vec![1.0; band];
    let mut sin_m = vec![0.0; band];
    for m in 1..band {
        cos_m[m] = cos_m[m - 1] * cphi - sin_m[m - 1] * sphi;
        sin_m[m] = sin_m[m - 1] * cphi + cos_m[m - 1] * sphi;
    }
    // Normalized associated Legendre values with (1/2)∫ P̃² = 1, stored as plm[l][m].
    let mut plm = vec![vec![0.0; band]; band];
    plm[0][0] = 1.0;
    for m in 1..band {
        let mf = m as f64;
        plm[m][m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * plm[m - 1][m - 1];
    }
    for m in 0..band {
        let mf = m as f64;
        if m + 1 < band {
            plm[m + 1][m] = (2.0 * mf + 3.0).sqrt() * z * plm[m][m];
        }
        for l in (m + 2)..band {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
            plm[l][m] = a * (z * plm[l - 1][m] - b * plm[l - 2][m]);
        }
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    for (l, row) in plm.iter().enumerate() {
        for m in (1..=l).rev() {
            out.push(sqrt2 * row[m] * sin_m[m]);
        }
        out.push(row[0]);
        for m in 1..=l {
            out.push(sqrt2 * row[m] * cos_m[m]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_zero_at_origin() {
        let mut buf = Vec::new();
        hermite_functions(0.0, 3, &mut buf);
        assert!((buf[0] - PI.powf(-0.25)).abs() < 1e-15);
        assert!(buf[1].abs() < 1e-15);
        // φ_2(0) = -π^{-1/4}/√2
        assert!((buf[2] + PI.powf(-0.25) / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn hermite_far_tail_does_not_underflow_midband() {
        // x = 40 lies inside the oscillatory region of φ_k for k ≳ 800.
        let mut buf = Vec::new();
        hermite_functions(40.0, 1200, &mut buf);
        assert!(buf[0] == 0.0);
        assert!(buf[1199].abs() > 1e-3);
        assert!(buf.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = w.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
        let m12: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((m12 - 2.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn tridiagonal_eigenvalues_match_known_spectrum() {
        // tridiag(1, 2, 1) of size n has eigenvalues 2 + 2cos(kπ/(n+1)).
        let n = 12;
        let ev = symmetric_tridiagonal_eigenvalues(&vec![2.0; n], &vec![1.0; n - 1]);
        let mut expect: Vec<f64> = (1..=n)
            .map(|k| 2.0 + 2.0 * (k as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        expect.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in ev.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn gauss_hermite_lebesgue_moments() {
        let (x, w) = gauss_hermite_lebesgue(20);
        // ∫ e^{-x²} dx = √π, ∫ x² e^{-x²} dx = √π/2
        let m0: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x * x).exp()).sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x * (-x * x).exp()).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-13);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-13);
    }
}
