use std::f64::consts::PI;
use std::sync::Arc;

use eignet_core::eignets::{EignetKernel, Estimator, Mask, PrefabNetwork};
use eignet_core::learn::{draw_points, estimator_network, Density, SamplingDesign};
use eignet_core::kernels::sigma_n;
use eignet_core::{Filter, GridMeasure, KernelHandle, Point, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pairs(count: usize, seed: u64) -> Vec<(Point, Point)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (Point::angle(rng.random_range(0.0..2.0 * PI)), Point::angle(rng.random_range(0.0..2.0 * PI))))
        .collect()
}

#[test]
fn signed_mask_is_a_difference_of_positive_masks() {
    let sys = System::TORUS1;
    let b1 = Mask::exp_decay(1, 1.0);
    let b1c = b1.clone();
    let b0 = Mask::custom("damped_cos", 1, 2.0, Arc::new(move |t| b1c.eval(t) * t.cos()));
    let b1c = b1.clone();
    let b2 = Mask::custom("shifted", 1, 2.0, Arc::new(move |t| b1c.eval(t) * (t.cos() + 2.0)));
    let (g0, g1, g2) = (EignetKernel::new(sys, b0), EignetKernel::new(sys, b1), EignetKernel::new(sys, b2));
    let band = g1.mask.truncation_band(1e-14).unwrap();
    for (x, y) in random_pairs(100, 1) {
        let lhs = g0.expansion(&x, &y, band);
        let rhs = g2.expansion(&x, &y, band) - 2.0 * g1.closed_form(&x, &y).unwrap();
        assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");
    }
}

#[test]
fn truncation_error_follows_the_mask_tail() {
    let k = EignetKernel::new(System::TORUS1, Mask::exp_decay(1, 0.5));
    let pairs = random_pairs(64, 2);
    let worst = |lam: f64| {
        pairs
            .iter()
            .map(|(x, y)| (k.expansion(x, y, lam) - k.closed_form(x, y).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    let envelope = |lam: f64| lam * k.mask.eval(lam);
    let c = worst(8.0) / envelope(8.0);
    for lam in [16.0, 32.0] {
        assert!(worst(lam) <= c * envelope(lam), "band {lam}");
    }
}

#[test]
fn network_is_localized() {
    let k = EignetKernel::new(System::TORUS1, Mask::exp_decay(1, 1.0));
    let x = Point::angle(0.7);
    let fitted = |n: f64| {
        let net = PrefabNetwork::with_exact_rule(k.clone(), Filter::Mollifier, n).unwrap();
        (0..=256)
            .map(|i| {
                let rho = PI * i as f64 / 256.0;
                let v = net.eval(&x, &Point::angle(0.7 + rho)).unwrap().abs();
                v / (n / (n * rho).powi(4).max(1.0) + n.powi(-8))
            })
            .fold(0.0, f64::max)
    };
    let c = fitted(8.0);
    let c16 = fitted(16.0);
    assert!(c16 <= 4.0 * c, "{c} then {c16}");
}

#[test]
fn estimator_error_shrinks_with_more_samples() {
    let sys = System::TORUS1;
    let n = 8.0;
    let f = |p: &Point| p.x().cos();
    let net = estimator_network(sys, Filter::Mollifier, n).unwrap();
    let grid = GridMeasure::new(sys, 256.0);
    let weighted: Vec<f64> = grid.nodes.iter().map(|p| f(p) * Density::OnePlusCos.eval(p)).collect();
    let probes = GridMeasure::fine(sys, 128, 0.0).nodes;
    let target = sigma_n(&KernelHandle::lowpass(sys, Filter::Mollifier, n), &grid, &weighted, &probes).unwrap();
    let mean_error = |m: usize| {
        (0..10)
            .map(|seed| {
                let pts = draw_points(sys, &Density::OnePlusCos, m, SamplingDesign::Iid, seed).unwrap();
                let vals: Vec<f64> = pts.iter().map(f).collect();
                let est = Estimator::new(&net, &pts, &vals).unwrap();
                est.eval_many(&probes)
                    .iter()
                    .zip(&target)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .sum::<f64>()
            / 10.0
    };
    let (small, large) = (mean_error(2000), mean_error(4000));
    assert!(small / large >= 1.2, "{small} then {large}");
}
