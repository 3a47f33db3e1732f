//! The smooth low-pass cutoff h and the band filter g(t) = h(t) − h(2t).

use serde::{Deserialize, Serialize};

/// Smooth cutoff with h = 1 on [0, 1/2] and h = 0 on [1, ∞).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Filter {
    /// C^∞ transition through the exp(−1/x) mollifier ramp.
    #[default]
    Mollifier,
    /// Polynomial smoothstep with `order` continuous derivatives.
    Smoothstep { order: u32 },
}

impl Filter {
    /// Guaranteed number of continuous derivatives (`None` for C^∞).
    pub fn smoothness(&self) -> Option<u32> {
        match self {
            Filter::Mollifier => None,
            Filter::Smoothstep { order } => Some(*order),
        }
    }

    /// h(t); negative arguments are reflected.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t <= 0.5 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let u = 2.0 * (1.0 - t);
        match self {
            Filter::Mollifier => mollifier_ramp(u),
            Filter::Smoothstep { order } => smoothstep(*order, u),
        }
    }

    /// g(t) = h(t) − h(2t).
    pub fn band(&self, t: f64) -> f64 {
        self.eval(t) - self.eval(2.0 * t)
    }
}

/// Smooth monotone transition from 0 at u ≤ 0 to 1 at u ≥ 1.
pub fn mollifier_ramp(u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / u).exp();
    let b = (-1.0 / (1.0 - u)).exp();
    a / (a + b)
}

/// Hermite smoothstep of order s: a polynomial of degree 2s+1 with s
/// vanishing derivatives at both ends.
fn smoothstep(s: u32, u: f64) -> f64 {
    let s = s as i64;
    let mut acc = 0.0;
    let mut binom_a = 1.0; // C(s + k, k)
    for k in 0..=s {
        if k > 0 {
            binom_a *= (s + k) as f64 / k as f64;
        }
        let binom_b = binomial(2 * s + 1, s - k);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom_a * binom_b * u.powi((s + k + 1) as i32);
    }
    acc.clamp(0.0, 1.0)
}

fn binomial(n: i64, k: i64) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cutoff_examples() {
        let h = Filter::Mollifier;
        assert_eq!(h.eval(0.4), 1.0);
        assert_eq!(h.eval(1.3), 0.0);
        let v = h.eval(0.6);
        assert!(v > 0.0 && v < 1.0);
        assert!(h.eval(0.6) >= h.eval(0.9));
        assert_eq!(h.eval(-0.3), 1.0);
    }

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        for s in 0..6 {
            let f = Filter::Smoothstep { order: s };
            assert_eq!(f.eval(0.5), 1.0);
            assert_eq!(f.eval(1.0), 0.0);
            assert!((f.eval(0.75) - 0.5).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn cutoff_is_nonincreasing(a in 0.0f64..2.0, b in 0.0f64..2.0) {
            for f in [Filter::Mollifier, Filter::Smoothstep { order: 3 }] {
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                prop_assert!(f.eval(lo) >= f.eval(hi));
                prop_assert!((0.0..=1.0).contains(&f.eval(a)));
            }
        }

        #[test]
        fn band_telescopes(t in 0.0f64..3.0) {
            let f = Filter::Mollifier;
            prop_assert!((f.band(t) + f.eval(2.0 * t) - f.eval(t)).abs() <= 1e-15);
        }
    }
}
