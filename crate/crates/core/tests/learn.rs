use eignet_core::eignets::Estimator;
use eignet_core::experiments::{run, Experiment, ExperimentConfig};
use eignet_core::kernels::sigma_n;
use eignet_core::learn::{
    build_bump, estimator_network, local_recover_sized, smoothness_profile, Density, NetworkChain, Noise, SampleSet,
    SamplingDesign,
};
use eignet_core::{Error, Filter, GridMeasure, KernelHandle, Point, System};
use proptest::prelude::*;

const H: Filter = Filter::Mollifier;

#[test]
fn grid_samples_reproduce_the_weighted_partial_sum() {
    for (sys, n) in [(System::TORUS1, 8.0), (System::TORUS1, 16.0)] {
        let net = estimator_network(sys, H, n).unwrap();
        let grid = GridMeasure::new(sys, 2.0 * n);
        let f = |p: &Point| (p.0[0] - 0.3).sin() + 0.2 * p.0[0].cos().powi(3);
        let f0 = |p: &Point| 1.0 + 0.5 * p.0[0].cos();
        let vals: Vec<f64> = grid.nodes.iter().map(|p| f(p) * f0(p)).collect();
        let probes = GridMeasure::fine(sys, 256, 0.0).nodes;
        let reference = sigma_n(&KernelHandle::lowpass(sys, H, n), &grid, &vals, &probes).unwrap();
        let est = Estimator::new(&net, &grid.nodes, &vals).unwrap();
        for (a, b) in est.eval_many(&probes).iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-6, "{sys}: {a} vs {b}");
        }
    }
}

#[test]
fn oversized_network_is_an_error() {
    assert!(matches!(estimator_network(System::TORUS2, H, 4.0), Err(Error::Unsupported(_))));
}

#[test]
fn density_error_medians_do_not_grow_with_data() {
    let mut c = ExperimentConfig::new(Experiment::Density);
    c.sizes = Some(vec![1000, 4000, 16_000]);
    let out = run(&c).unwrap();
    let medians: Vec<f64> = [1000, 4000, 16_000]
        .iter()
        .map(|m| out.summary.fitted[&format!("median_error_{m}")])
        .collect();
    for w in medians.windows(2) {
        assert!(w[1] <= w[0], "{medians:?}");
    }
}

#[test]
fn uniform_lattice_density_is_flat() {
    let sys = System::TORUS1;
    let net = estimator_network(sys, H, 16.0).unwrap();
    let probes = GridMeasure::fine(sys, 128, 0.0).nodes;
    for seed in 0..5 {
        let s = SampleSet::generate(sys, &Density::Uniform, &|_| 1.0, Noise::none(), 4096, SamplingDesign::ShiftedLattice, seed)
            .unwrap();
        let est = Estimator::new(&net, &s.points, &s.values).unwrap();
        let err = est.eval_many(&probes).iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        assert!(err <= 0.05, "seed {seed}: {err}");
    }
}

#[test]
fn local_constant_target() {
    let sys = System::TORUS1;
    let net = estimator_network(sys, H, 16.0).unwrap();
    let bump = build_bump(sys, Point::angle(2.0), 0.3).unwrap();
    let mut errs: Vec<f64> = (0..10)
        .map(|s| local_recover_sized(&net, &bump, 5000, &|_| 1.0, Noise::none(), s, 41).unwrap().sup_error)
        .collect();
    errs.sort_by(f64::total_cmp);
    let median = 0.5 * (errs[4] + errs[5]);
    assert!(median <= 0.1, "{errs:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn profile_levels_are_homogeneous(c in 0.1f64..1.0, seed in 0u64..100) {
        let sys = System::TORUS1;
        let chain = NetworkChain::build(sys, H, 2, 5).unwrap();
        let f = |p: &Point| 0.5 * (p.x() - 1.0).sin().abs().powf(1.5);
        let base = move |j: u32| {
            SampleSet::generate(sys, &Density::Uniform, &f, Noise::uniform(0.1), 2048, SamplingDesign::Iid, seed * 10 + j as u64)
        };
        let scaled = move |j: u32| base(j).map(|s| s.scaled(c));
        let a = smoothness_profile(&chain, Point::angle(1.0), 0.2, 11, 3..=5, 3, &base).unwrap();
        let b = smoothness_profile(&chain, Point::angle(1.0), 0.2, 11, 3..=5, 3, &scaled).unwrap();
        for ((_, ta), (_, tb)) in a.levels.iter().zip(&b.levels) {
            prop_assert!((c * ta - tb).abs() <= 1e-12 * ta.max(1.0));
        }
    }
}
