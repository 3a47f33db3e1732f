use std::io::Write;
use std::time::Instant;

use eignet_core::experiments::acceptance::CRITERIA;
use eignet_core::experiments::{Experiment, Outcome};
use eignet_core::Filter;

/// Uncaptured, so the report shows up without `--nocapture`.
fn say(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

/// Closed-form sup error of the filtered partial sum of |sin x|³ at band n.
///
/// |sin x|³ = 4/(3π) + Σ_{k≥1} a_k cos 2kx with
/// a_k = (3/π)(1/(1−4k²) − 1/(9−4k²)). Every coefficient left in the error
/// has k ≥ n/4 ≥ 2, where a_k > 0, so the sup sits at x = 0.
fn sin_cubed_error(n: f64) -> f64 {
    let h = Filter::Mollifier;
    (1..=1_000_000u64)
        .rev()
        .map(|k| {
            let k = k as f64;
            let a = 3.0 / std::f64::consts::PI * (1.0 / (1.0 - 4.0 * k * k) - 1.0 / (9.0 - 4.0 * k * k));
            (1.0 - h.eval(2.0 * k / n)) * a
        })
        .sum()
}

const ORACLE_RTOL: f64 = 1e-6;

fn approx_rate_oracle(out: &Outcome) -> Vec<String> {
    let ns = out.table.column("n");
    let errs = out.table.column("sup_error");
    let mut failures = Vec::new();
    let mut logs = Vec::new();
    for (n, e) in ns.iter().zip(&errs) {
        let exact = sin_cubed_error(*n);
        let rel = (e - exact).abs() / exact;
        if rel > ORACLE_RTOL {
            failures.push(format!("n={n}: measured {e:e}, closed form {exact:e} (rel {rel:e})"));
        }
        logs.push((n.log2(), exact.log2()));
    }
    let m = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / m;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / m;
    let slope = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    if !(-3.4..=-2.6).contains(&slope) {
        failures.push(format!("closed-form slope {slope} outside [-3.4, -2.6]"));
    }
    failures
}

#[test]
fn acceptance_criteria() {
    say("");
    let mut failed = Vec::new();
    for crit in CRITERIA {
        let start = Instant::now();
        let result = crit.evaluate();
        let elapsed = start.elapsed();
        let mut problems: Vec<String> = match &result {
            Ok(out) => out
                .failing()
                .iter()
                .map(|c| format!("{} = {:e} ({})", c.name, c.value, c.bound))
                .collect(),
            Err(e) => vec![format!("error: {e}")],
        };
        if let (Ok(out), Experiment::ApproxRate) = (&result, crit.experiment) {
            problems.extend(approx_rate_oracle(out));
        }
        if elapsed > crit.budget {
            problems.push(format!("took {:.1}s over the {}s budget", elapsed.as_secs_f64(), crit.budget.as_secs()));
        }
        let tag = if problems.is_empty() { "pass" } else { "FAIL" };
        say(&format!(
            "[{tag}] {:>2} {:<24} {:>7.2}s / {}s",
            crit.id,
            crit.name,
            elapsed.as_secs_f64(),
            crit.budget.as_secs()
        ));
        for p in &problems {
            say(&format!("       {p}"));
        }
        if !problems.is_empty() {
            failed.push(crit.id);
        }
    }
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
