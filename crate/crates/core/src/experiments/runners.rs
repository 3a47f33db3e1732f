use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Cell, Check, Experiment, ExperimentConfig, NodeSpec, Outcome, Table};
use crate::eignets::{EignetKernel, Mask, PrefabNetwork};
use crate::error::{Error, Result};
use crate::filters::Filter;
use crate::kernels::{sigma_n, synthesize, KernelHandle};
use crate::learn::{
    build_bump, draw_points, estimate_density, estimator_network, local_recover_sized, smoothness_profile, Density,
    Exponent, NetworkChain, Noise, SampleSet, SamplingDesign,
};
use crate::quadrature::{build_rule, covering_budget, covering_probability_check, exact_rule, Region};
use crate::systems::{GridMeasure, Point, System};

const FILTER: Filter = Filter::Mollifier;

/// Runs one experiment. Operational failures (such as too few nodes for a
/// rule) are errors; criterion failures show up in the summary.
pub fn run(config: &ExperimentConfig) -> Result<Outcome> {
    match config.experiment {
        Experiment::KernelDecay => kernel_decay(config),
        Experiment::Reproduction => reproduction(config),
        Experiment::QuadBuild => quad_build(config),
        Experiment::QuadVerify => quad_verify(config),
        Experiment::EignetCloseness => eignet_closeness(config),
        Experiment::ApproxRate => approx_rate(config),
        Experiment::Density => density(config),
        Experiment::LocalRecovery => local_recovery(config),
        Experiment::Smoothness => smoothness(config),
        Experiment::Covering => covering(config),
        Experiment::Mehler => mehler(config),
    }
}

fn system_or(c: &ExperimentConfig, default: System) -> Result<System> {
    Ok(c.system()?.unwrap_or(default))
}

fn require_torus1(c: &ExperimentConfig, what: &str) -> Result<System> {
    let sys = system_or(c, System::TORUS1)?;
    if sys != System::TORUS1 {
        return Err(Error::Unsupported(format!("{what} is defined on torus:1 only, got {sys}")));
    }
    Ok(sys)
}

fn sys_cell(sys: System) -> Cell {
    Cell::Text(sys.to_string())
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m == 0 {
        return f64::NAN;
    }
    if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

/// Least-squares slope of y against x.
pub(crate) fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Dense probes of the space (of the window K_n on the line).
fn probe_grid(sys: System, n: f64) -> Vec<Point> {
    let per = n.ceil() as usize;
    let count = match sys {
        System::Torus { q: 1 } | System::Hermite { .. } => 8 * per,
        System::Torus { .. } => 16 * per * per,
        System::Sphere2 => 8 * per * per,
    };
    GridMeasure::fine(sys, count, sys.window_half_width(n).unwrap_or(0.0)).nodes
}

/// Point with first coordinate `x` (longitude on the sphere).
fn center_point(sys: System, x: f64) -> Point {
    match sys {
        System::Torus { q: 1 } => Point::angle(x.rem_euclid(TAU)),
        System::Torus { .. } => Point::angles(x.rem_euclid(TAU), x.rem_euclid(TAU)),
        System::Sphere2 => Point::spherical(PI / 2.0, x),
        System::Hermite { .. } => Point::line(x),
    }
}

fn make_nodes(sys: System, spec: NodeSpec, n: f64, seed: u64) -> Result<Vec<Point>> {
    match spec {
        NodeSpec::Random(m) => Ok(sys.sample_reference(n, m, seed)),
        NodeSpec::Equispaced(m) => Ok(GridMeasure::fine(sys, m, sys.window_half_width(n).unwrap_or(0.0)).nodes),
        NodeSpec::Exact => Err(Error::InvalidArgument("exact nodes have no node list".into())),
    }
}

fn reproduction(c: &ExperimentConfig) -> Result<Outcome> {
    let systems = match c.system()? {
        Some(s) => vec![s],
        None => vec![System::TORUS1, System::Sphere2],
    };
    let n = c.n.unwrap_or(32.0);
    let tol = c.tol.unwrap_or(1e-10);
    let count = c.trials.unwrap_or(20);
    let mut table = Table::new(&["system", "trial", "residual"]);
    let mut checks = Vec::new();
    for sys in systems {
        let grid = GridMeasure::new(sys, n);
        let probes = probe_grid(sys, n);
        let k = KernelHandle::lowpass(sys, FILTER, n);
        let dim = sys.band_size(n / 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
        let mut worst: f64 = 0.0;
        for t in 0..count {
            let coeffs: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            let on_grid = synthesize(sys, n / 2.0, &coeffs, &grid.nodes)?;
            let got = sigma_n(&k, &grid, &on_grid, &probes)?;
            let want = synthesize(sys, n / 2.0, &coeffs, &probes)?;
            let r = max_abs_diff(&got, &want);
            worst = worst.max(r);
            table.push(vec![sys_cell(sys), t.into(), r.into()]);
        }
        checks.push(Check::at_most(&format!("{sys} max residual of sigma_n(P) - P"), worst, tol));
    }
    Ok(Outcome::new(c, table, checks, vec![c.seed]))
}

fn kernel_decay(c: &ExperimentConfig) -> Result<Outcome> {
    const S: i32 = 4;
    const SLACK: f64 = 4.0;
    let sys = system_or(c, System::TORUS1)?;
    let scales = c.scales.clone().unwrap_or_else(|| vec![16.0, 32.0, 64.0]);
    if scales.len() < 2 {
        return Err(Error::InvalidArgument("kernel_decay needs a fit scale and at least one check scale".into()));
    }
    let x = center_point(sys, 0.7);
    let ys = match sys {
        System::Torus { q: 1 } => (0..=512).map(|i| Point::angle(0.7 + PI * i as f64 / 512.0)).collect(),
        System::Hermite { .. } => (0..=512).map(|i| Point::line(0.7 + 4.0 * i as f64 / 512.0)).collect(),
        _ => probe_grid(sys, 16.0),
    };
    let q = sys.q() as i32;
    let mut table = Table::new(&["n", "rho", "kernel", "envelope"]);
    let mut fitted = Vec::new();
    let mut constant = 0.0;
    let mut checks = Vec::new();
    for (i, &n) in scales.iter().enumerate() {
        let k = KernelHandle::lowpass(sys, FILTER, n);
        let vals: Vec<(f64, f64)> = ys.par_iter().map(|y| (sys.distance(&x, y), k.eval(&x, y))).collect();
        let profile = |rho: f64| n.powi(q) / (n * rho).powi(S).max(1.0);
        let c_n = vals.iter().map(|(r, v)| v.abs() / profile(*r)).fold(0.0, f64::max);
        fitted.push((format!("C_{n}"), c_n));
        if i == 0 {
            constant = c_n;
        } else {
            checks.push(Check::at_most(&format!("n={n} worst |Phi_n| / (C n^q / max(1, (n rho)^4))"), c_n / constant, SLACK));
        }
        for (r, v) in vals {
            table.push(vec![n.into(), r.into(), v.into(), (constant * profile(r)).into()]);
        }
    }
    let mut out = Outcome::new(c, table, checks, vec![]);
    for (name, v) in fitted {
        out = out.fit(&name, v);
    }
    Ok(out)
}

fn quad_build(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = system_or(c, System::TORUS1)?;
    let n = c.n.unwrap_or(16.0);
    let tol = c.tol.unwrap_or(1e-8);
    let spec = c.nodes.unwrap_or(NodeSpec::Random(400));
    let rule = match spec {
        NodeSpec::Exact => exact_rule(sys, n)?,
        s => build_rule(sys, &make_nodes(sys, s, n, c.seed)?, n, tol)?,
    };
    let d = sys.coord_dim();
    let names = ["x0", "x1", "x2"];
    let mut cols: Vec<&str> = names[..d].to_vec();
    cols.extend(["proxy_weight", "weight"]);
    let mut table = Table::new(&cols);
    for ((p, big), w) in rule.nodes.iter().zip(&rule.proxy_weights).zip(&rule.weights) {
        let mut row: Vec<Cell> = p.0[..d].iter().map(|v| Cell::Num(*v)).collect();
        row.push((*big).into());
        row.push((*w).into());
        table.push(row);
    }
    let checks = vec![
        Check::at_most("moment residual", rule.residual, tol),
        Check::at_most("max |w_k| / W_k", rule.max_ratio(), 2.0 * (1.0 + 1e-9)),
    ];
    let sidecar = rule.sidecar(Some(Region::for_band(sys, n)), Some(c.seed));
    let mut out = Outcome::new(c, table, checks, vec![c.seed])
        .fit("residual", rule.residual)
        .fit("max_ratio", rule.max_ratio());
    if let Some(opt) = rule.lp_optimum {
        out = out.fit("lp_optimum", opt);
    }
    out.artifacts
        .push(("quad_build.sidecar.json".into(), serde_json::to_string_pretty(&sidecar)? + "\n"));
    Ok(out)
}

fn quad_verify(c: &ExperimentConfig) -> Result<Outcome> {
    let tol = c.tol.unwrap_or(1e-8);
    let cases: Vec<(System, f64, NodeSpec)> = match c.system()? {
        Some(sys) => vec![(sys, c.n.unwrap_or(16.0), c.nodes.unwrap_or(NodeSpec::Random(400)))],
        None => vec![
            (System::TORUS1, 16.0, NodeSpec::Random(400)),
            (System::Sphere2, 8.0, NodeSpec::Random(1200)),
        ],
    };
    let seeds = c.seed_list(10);
    let need = (0.9 * seeds.len() as f64).ceil();
    let mut table = Table::new(&["system", "seed", "nodes", "accepted", "residual", "max_ratio", "lp_optimum", "method"]);
    let mut checks = Vec::new();
    for (sys, n, spec) in cases {
        let mut accepted = 0usize;
        for &seed in &seeds {
            let nodes = make_nodes(sys, spec, n, seed)?;
            match build_rule(sys, &nodes, n, tol) {
                Ok(rule) => {
                    let ok = rule.residual <= tol && rule.max_ratio() <= 2.0 * (1.0 + 1e-9);
                    accepted += ok as usize;
                    table.push(vec![
                        sys_cell(sys),
                        seed.into(),
                        nodes.len().into(),
                        ok.into(),
                        rule.residual.into(),
                        rule.max_ratio().into(),
                        rule.lp_optimum.unwrap_or(f64::NAN).into(),
                        format!("{:?}", rule.method).to_lowercase().into(),
                    ]);
                }
                Err(Error::NodesInsufficient { .. }) | Err(Error::LinearProgram(_)) => {
                    table.push(vec![
                        sys_cell(sys),
                        seed.into(),
                        nodes.len().into(),
                        false.into(),
                        f64::NAN.into(),
                        f64::NAN.into(),
                        f64::NAN.into(),
                        "rejected".into(),
                    ]);
                }
                Err(e) => return Err(e),
            }
        }
        checks.push(Check::at_least(
            &format!("{sys} n={n} accepted seeds of {}", seeds.len()),
            accepted as f64,
            need,
        ));
    }
    Ok(Outcome::new(c, table, checks, seeds))
}

fn covering(c: &ExperimentConfig) -> Result<Outcome> {
    const DELTA: f64 = 0.1;
    let sys = system_or(c, System::TORUS1)?;
    let n = c.n.unwrap_or(16.0);
    let eps = c.eps.unwrap_or(1.0 / n);
    let trials = c.trials.unwrap_or(50);
    let region = Region::for_band(sys, n);
    let budget = match c.sizes.as_deref() {
        Some([m, ..]) => *m,
        _ => covering_budget(sys, eps, DELTA, region)?,
    };
    let at = covering_probability_check(sys, eps, budget, trials, region, c.seed);
    let below = covering_probability_check(sys, eps, (budget / 10).max(1), trials, region, c.seed + 1);
    let mut table = Table::new(&["draws", "trials", "successes", "failure_rate", "worst_mesh_norm"]);
    for r in [&at, &below] {
        table.push(vec![
            r.draws.into(),
            r.trials.into(),
            r.successes.into(),
            r.failure_rate().into(),
            r.mesh_norms.iter().copied().fold(0.0, f64::max).into(),
        ]);
    }
    let checks = vec![
        Check::at_most("failure rate at the budget", at.failure_rate(), 2.0 * DELTA),
        Check::at_most("success rate at a tenth of the budget", below.success_rate(), 1.0 - 1.0 / trials as f64),
    ];
    Ok(Outcome::new(c, table, checks, vec![c.seed, c.seed + 1])
        .fit("eps", eps)
        .fit("budget", budget as f64))
}

fn eignet_closeness(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = system_or(c, System::TORUS1)?;
    let scales = c.scales.clone().unwrap_or_else(|| vec![8.0, 16.0, 32.0]);
    let mask = match sys {
        System::Hermite { .. } => Mask::mehler(),
        _ => Mask::gaussian(sys.q()),
    };
    let xs = sys.sample_reference(8.0, 64, c.seed);
    let ys = sys.sample_reference(8.0, 64, c.seed + 1);
    let pairs: Vec<(Point, Point)> = xs.into_iter().zip(ys).collect();
    let mut table = Table::new(&["n", "nodes", "deviation", "deviation_direct"]);
    let mut devs = Vec::new();
    for &n in &scales {
        let net = PrefabNetwork::with_exact_rule(EignetKernel::new(sys, mask.clone()), FILTER, n)?;
        let d = net.sup_deviation(&pairs)?;
        let direct = net.sup_deviation_direct(&pairs)?;
        table.push(vec![n.into(), net.rule.len().into(), d.into(), direct.into()]);
        devs.push(d);
    }
    let mut checks = vec![Check::at_most(&format!("d_{}", scales[0]), devs[0], 1e-3)];
    for i in 1..scales.len() {
        let ratio = if devs[i] == 0.0 { 0.0 } else { devs[i] / devs[i - 1] };
        checks.push(Check::at_most(
            &format!("d_{} / d_{}", scales[i], scales[i - 1]),
            ratio,
            (scales[i - 1] / scales[i]).powi(4),
        ));
    }
    Ok(Outcome::new(c, table, checks, vec![c.seed, c.seed + 1]))
}

/// |sin x|³.
fn sin_cubed(p: &Point) -> f64 {
    p.x().sin().abs().powi(3)
}

fn approx_rate(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = require_torus1(c, "approx_rate")?;
    let scales = c.scales.clone().unwrap_or_else(|| vec![8.0, 16.0, 32.0, 64.0]);
    let grid = GridMeasure::new(sys, c.n.unwrap_or(4096.0));
    let values: Vec<f64> = grid.nodes.iter().map(sin_cubed).collect();
    let mut probes = GridMeasure::fine(sys, 1 << 14, 0.0).nodes;
    probes.extend([Point::angle(0.0), Point::angle(PI)]);
    let truth: Vec<f64> = probes.iter().map(sin_cubed).collect();
    let mut table = Table::new(&["n", "sup_error"]);
    let mut logs = Vec::new();
    for &n in &scales {
        let s = sigma_n(&KernelHandle::lowpass(sys, FILTER, n), &grid, &values, &probes)?;
        let e = max_abs_diff(&s, &truth);
        table.push(vec![n.into(), e.into()]);
        logs.push((n.log2(), e.log2()));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
    let slope = ls_slope(&x, &y);
    let checks = vec![Check::within("slope of log2 error against log2 n", slope, -3.4, -2.6)];
    Ok(Outcome::new(c, table, checks, vec![]).fit("slope", slope))
}

fn density(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = system_or(c, System::TORUS1)?;
    let dens = match sys {
        System::Torus { q: 1 } => Density::OnePlusCos,
        System::Hermite { .. } => return Err(Error::Unsupported("density experiment needs a compact system".into())),
        _ => Density::Uniform,
    };
    let n = c.n.unwrap_or(16.0);
    let sizes = c.sizes.clone().unwrap_or_else(|| vec![10_000, 40_000]);
    let design = c.design.unwrap_or(SamplingDesign::Iid);
    let seeds = c.seed_list(10);
    let net = estimator_network(sys, FILTER, n)?;
    let probes = GridMeasure::fine(sys, 128, 0.0).nodes;
    let f0 = |p: &Point| dens.eval(p);
    let mut table = Table::new(&["size", "seed", "sup_error", "integral"]);
    let mut medians = Vec::new();
    let mut worst_mass: f64 = 0.0;
    for &m in &sizes {
        let mut errs = Vec::new();
        for &s in &seeds {
            let pts = draw_points(sys, &dens, m, design, s)?;
            let d = estimate_density(&net, &pts, &probes, &f0)?;
            worst_mass = worst_mass.max((d.integral - 1.0).abs());
            table.push(vec![m.into(), s.into(), d.sup_error.into(), d.integral.into()]);
            errs.push(d.sup_error);
        }
        medians.push(median(&errs));
    }
    let (first, last) = (medians[0], *medians.last().unwrap_or(&f64::NAN));
    let mut checks = Vec::new();
    if sizes.len() > 1 {
        checks.push(Check::at_least(
            &format!("median error ratio |Y|={} over |Y|={}", sizes[0], sizes[sizes.len() - 1]),
            first / last,
            1.3,
        ));
    }
    checks.push(Check::at_most(&format!("median error at |Y|={}", sizes[sizes.len() - 1]), last, 0.1));
    checks.push(Check::at_most("worst |integral - 1|", worst_mass, 0.05));
    let mut out = Outcome::new(c, table, checks, seeds);
    for (m, v) in sizes.iter().zip(&medians) {
        out = out.fit(&format!("median_error_{m}"), *v);
    }
    Ok(out)
}

fn local_recovery(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = system_or(c, System::TORUS1)?;
    let n = c.n.unwrap_or(16.0);
    let center = center_point(sys, c.center.unwrap_or(2.0));
    let r = c.radius.unwrap_or(0.3);
    let noise = Noise::uniform(c.noise.unwrap_or(0.1));
    let sizes = c.sizes.clone().unwrap_or_else(|| vec![5000, 20_000]);
    let seeds = c.seed_list(10);
    let net = estimator_network(sys, FILTER, n)?;
    let bump = build_bump(sys, center, r)?;
    let f = |p: &Point| 0.5 * p.x().sin() + 0.1 * (2.0 * p.x()).cos();
    let mut table = Table::new(&["seed", "size", "raw", "kept", "sup_error"]);
    let mut small_ok = 0usize;
    let mut wins = 0usize;
    for &s in &seeds {
        let mut errs = Vec::new();
        for &m in &sizes {
            let rec = local_recover_sized(&net, &bump, m, &f, noise, s, 41)?;
            table.push(vec![s.into(), m.into(), rec.raw.into(), rec.kept.into(), rec.sup_error.into()]);
            errs.push(rec.sup_error);
        }
        small_ok += (errs[0] <= 0.1) as usize;
        wins += (errs[errs.len() - 1] < errs[0]) as usize;
    }
    let need = (0.8 * seeds.len() as f64).ceil();
    let mut checks = vec![Check::at_least(
        &format!("seeds with sup error <= 0.1 at |Y|={}", sizes[0]),
        small_ok as f64,
        need,
    )];
    if sizes.len() > 1 {
        checks.push(Check::at_least(
            &format!("paired seeds where |Y|={} beats |Y|={}", sizes[sizes.len() - 1], sizes[0]),
            wins as f64,
            need,
        ));
    }
    Ok(Outcome::new(c, table, checks, seeds).fit("bump_mass", bump.mass))
}

fn smoothness(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = require_torus1(c, "smoothness")?;
    let x0 = c.center.unwrap_or(1.0);
    let r = c.radius.unwrap_or(0.2);
    let per_level = c.sizes.as_deref().and_then(|s| s.first().copied()).unwrap_or(1 << 14);
    let design = c.design.unwrap_or(SamplingDesign::ShiftedLattice);
    let noise = Noise::uniform(c.noise.unwrap_or(0.0));
    let seeds = c.seed_list(10);
    let (lo, hi) = (3u32, 6u32);
    let chain = NetworkChain::build(sys, FILTER, lo - 1, hi)?;
    let target = move |p: &Point| ((p.x() - x0) / 2.0).sin().abs().powf(2.5);
    let mut table = Table::new(&["seed", "center", "j", "t_j"]);
    let mut fitted = Vec::new();
    let mut good = 0usize;
    for &s in &seeds {
        let samples = |j: u32| {
            SampleSet::generate(sys, &Density::Uniform, &target, noise, per_level, design, s * 100 + j as u64)
        };
        let mut gammas = Vec::new();
        for (label, center) in [("x0", x0), ("antipode", x0 + PI)] {
            let rep = smoothness_profile(&chain, Point::angle(center.rem_euclid(TAU)), r, 41, lo..=hi, lo, &samples)?;
            for (j, t) in &rep.levels {
                table.push(vec![s.into(), label.into(), (*j).into(), (*t).into()]);
            }
            fitted.push((format!("gamma_{label}_seed{s}"), rep.gamma.value()));
            gammas.push(rep.gamma);
        }
        let at = gammas[0].value();
        let ok = matches!(gammas[0], Exponent::Finite(_))
            && (2.1..=2.9).contains(&at)
            && gammas[1].value() >= at + 1.0;
        good += ok as usize;
    }
    let checks = vec![Check::at_least(
        "seeds with gamma(x0) in [2.1, 2.9] and gamma(antipode) >= gamma(x0) + 1",
        good as f64,
        (0.8 * seeds.len() as f64).ceil(),
    )];
    let mut out = Outcome::new(c, table, checks, seeds);
    for (name, v) in fitted {
        out = out.fit(&name, v);
    }
    Ok(out)
}

fn mehler(c: &ExperimentConfig) -> Result<Outcome> {
    let sys = system_or(c, System::HERMITE)?;
    if sys != System::HERMITE {
        return Err(Error::Unsupported(format!("the Mehler pair is defined on hermite, got {sys}")));
    }
    let band = c.n.unwrap_or(41f64.sqrt());
    let tol = c.tol.unwrap_or(1e-8);
    let pairs = c.trials.unwrap_or(20);
    let kernel = EignetKernel::mehler();
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let mut table = Table::new(&["x", "y", "closed_form", "expansion", "difference"]);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let (x, y): (f64, f64) = (rng.random_range(-2.0..=2.0), rng.random_range(-2.0..=2.0));
        let w = (-y * y / 4.0).exp();
        let g = (-(x - 3f64.sqrt() / 2.0 * y).powi(2)).exp();
        let lhs = w * g;
        let rhs = kernel.expansion(&Point::line(x), &Point::line(y), band);
        worst = worst.max((lhs - rhs).abs());
        table.push(vec![x.into(), y.into(), lhs.into(), rhs.into(), (lhs - rhs).into()]);
    }
    let checks = vec![Check::at_most("max |W(y) G(x, y) - expansion|", worst, tol)];
    Ok(Outcome::new(c, table, checks, vec![c.seed]))
}
