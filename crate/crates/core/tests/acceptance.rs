//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fmt::Write as _;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use bregman_umvue::discrete_oracle::{battery, verify_decompositions, verify_rb_inequality, RB_SLACK, RESIDUAL_TOL};
use bregman_umvue::divergence::{bregman_div, dual_transport, Orientation};
use bregman_umvue::estimators::{
    build_type1_umvue, extended_rao_blackwell, rao_blackwellize_by_symmetry, to_dual, Estimator, PermutationBudget,
};
use bregman_umvue::generators::Generator;
use bregman_umvue::models::Model;
use bregman_umvue::risk_lab::{
    check_mean_against, check_type1_unbiased, check_type2_unbiased, compare_estimators, estimate_risk_both,
    lehmann_grid_check, McConfig, UnbiasednessReport,
};
use bregman_umvue::rng::seeded;
use nalgebra::DMatrix;
use rand::Rng;

const SEED: u64 = 20240601;

struct Outcome {
    pass: bool,
    detail: String,
    /// Serialized results, compared byte for byte in the determinism check.
    output: String,
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap()
}

fn builtin_generators(dim: usize, closed_forms: bool) -> Vec<Generator> {
    let mut a = DMatrix::from_element(dim, dim, 0.3);
    for i in 0..dim {
        a[(i, i)] = 1.0 + i as f64;
    }
    vec![
        Generator::squared_euclidean(dim),
        Generator::mahalanobis(a).unwrap(),
        Generator::neg_entropy(dim),
        Generator::neg_log(dim),
    ]
    .into_iter()
    .map(|g| g.with_closed_forms(closed_forms))
    .collect()
}

fn primal_point(g: &Generator, rng: &mut impl Rng) -> Vec<f64> {
    (0..g.dim())
        .map(|_| {
            if g.domain().contains(&vec![-1.0; g.dim()]) {
                rng.random_range(-5.0..5.0)
            } else {
                rng.random_range(-4.0f64..4.0).exp()
            }
        })
        .collect()
}

fn dual_point(g: &Generator, rng: &mut impl Rng) -> Vec<f64> {
    (0..g.dim())
        .map(|_| match g.id() {
            "neglog" => -rng.random_range(-8.0f64..8.0).exp(),
            "negentropy" => rng.random_range(-20.0..20.0),
            _ => rng.random_range(-50.0..50.0),
        })
        .collect()
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn c1_duality_transport(_workers: usize) -> Outcome {
    let mut rng = seeded(SEED);
    let mut worst = 0.0f64;
    let mut out = String::new();
    for g in builtin_generators(3, true) {
        for _ in 0..1000 {
            let x = primal_point(&g, &mut rng);
            let y = primal_point(&g, &mut rng);
            let d = bregman_div(&g, &x, &y).unwrap();
            let t = dual_transport(&g, &x, &y).unwrap();
            worst = worst.max(rel_err(d, t));
            writeln!(out, "{d:e} {t:e}").unwrap();
        }
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("4000 pairs, max relative error {worst:.2e} (limit 1e-9)"),
        output: out,
    }
}

fn c2_legendre_round_trip(_workers: usize) -> Outcome {
    let mut rng = seeded(SEED + 1);
    let mut worst_grad = 0.0f64;
    let mut worst_young = 0.0f64;
    let mut out = String::new();
    for closed in [true, false] {
        for g in builtin_generators(3, closed) {
            for _ in 0..1000 {
                let y = dual_point(&g, &mut rng);
                let x = g.invert_gradient(&y).unwrap();
                let back = g.gradient(&x).unwrap();
                for (a, b) in y.iter().zip(&back) {
                    worst_grad = worst_grad.max((a - b).abs() / a.abs().max(1.0));
                }
                let phi = g.value(&x).unwrap();
                let conj = g.conjugate_value(&y).unwrap();
                let inner: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
                let scale = phi.abs().max(conj.abs()).max(inner.abs()).max(1.0);
                worst_young = worst_young.max((phi + conj - inner).abs() / scale);
                writeln!(out, "{x:?} {conj:e}").unwrap();
            }
        }
    }
    Outcome {
        pass: worst_grad <= 1e-9 && worst_young <= 1e-9,
        detail: format!(
            "8000 dual points, closed forms on and off: gradient round trip {worst_grad:.2e}, Young-Fenchel gap {worst_young:.2e} (limit 1e-9)"
        ),
        output: out,
    }
}

fn c3_decompositions(workers: usize) -> Outcome {
    let mut worst = 0.0f64;
    let mut cases = 0;
    let mut out = String::new();
    for dm in battery::models() {
        let dm = dm.with_workers(workers);
        for g in battery::generators() {
            for e in battery::estimators() {
                for theta in battery::thetas() {
                    let r = verify_decompositions(&dm, &g, &e, theta).unwrap();
                    worst = worst.max(r.max_residual);
                    cases += 1;
                    out += &json(&r);
                    out.push('\n');
                }
            }
        }
    }
    Outcome {
        pass: worst <= RESIDUAL_TOL,
        detail: format!("{cases} cases, max residual {worst:.2e} (limit 1e-12)"),
        output: out,
    }
}

fn c4_rao_blackwell(workers: usize) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut min_strict_gap = f64::INFINITY;
    let mut strict_ok = true;
    let mut rows = 0;
    let mut out = String::new();
    for dm in battery::models() {
        let dm = dm.with_workers(workers);
        for g in battery::generators() {
            for e in battery::estimators() {
                let t = verify_rb_inequality(&dm, &g, &e, &battery::thetas()).unwrap();
                worst = worst.max(t.max_violation);
                if !t.permutation_invariant {
                    for r in &t.rows {
                        min_strict_gap = min_strict_gap.min(r.gap);
                        strict_ok &= r.strict;
                    }
                }
                rows += t.rows.len();
                out += &json(&t);
                out.push('\n');
            }
        }
    }
    Outcome {
        pass: worst <= RB_SLACK && strict_ok,
        detail: format!(
            "{rows} rows, max violation {worst:.2e} (limit 1e-12), smallest gap for non-invariant estimators {min_strict_gap:.2e} (must exceed 1e-6)"
        ),
        output: out,
    }
}

fn within(r: &UnbiasednessReport, target: f64, k: f64) -> bool {
    (r.mean - target).abs() <= k * r.se
}

fn c5_exponential(workers: usize) -> Outcome {
    let model = Model::exponential();
    let g = Generator::neg_log(1);
    let (theta, n) = (2.0, 5);
    let mc = McConfig::new(1_000_000, SEED).with_workers(workers);
    let umvue = build_type1_umvue(&model, &g).unwrap();
    let classical = Estimator::classical(&model);
    let comparator = Estimator::first_k(3, &umvue);

    let a = check_type1_unbiased(&model, &[theta], n, &umvue, &g, &mc).unwrap().remove(0);
    let b = check_type2_unbiased(&model, &[theta], n, &umvue, &mc).unwrap().remove(0);
    let b_mean = check_mean_against(&model, &[theta], n, &umvue, |t| Ok(n as f64 * t / (n as f64 - 1.0)), &mc)
        .unwrap()
        .remove(0);
    let c2 = check_type2_unbiased(&model, &[theta], n, &classical, &mc).unwrap().remove(0);
    let c1 = check_type1_unbiased(&model, &[theta], n, &classical, &g, &mc).unwrap().remove(0);
    let d = compare_estimators(&model, theta, n, &umvue, &comparator, &g, Orientation::Left, &mc).unwrap();

    let dual_target = -(n as f64) / ((n as f64 - 1.0) * theta);
    let ok_a = within(&a, -0.5, 3.0) && a.verdict.passed();
    let ok_b = within(&b_mean, 2.5, 3.0) && !b.verdict.passed() && b.z_score.abs() > 10.0;
    let ok_c = c2.verdict.passed() && !c1.verdict.passed() && within(&c1, dual_target, 3.0);
    let ok_d = d.difference + 5.0 * d.difference_se < 0.0;
    Outcome {
        pass: ok_a && ok_b && ok_c && ok_d,
        detail: format!(
            "(a) dual mean {:.5} z {:.2} {}; (b) mean {:.5} vs 2.5, type-II z {:.1} {}; (c) type-II z {:.2}, dual mean {:.5} vs {dual_target} {}; (d) paired z {:.1} {}",
            a.mean,
            a.z_score,
            ok_word(ok_a),
            b.mean,
            b.z_score,
            ok_word(ok_b),
            c2.z_score,
            c1.mean,
            ok_word(ok_c),
            d.difference_z,
            ok_word(ok_d)
        ),
        output: [json(&a), json(&b), json(&b_mean), json(&c1), json(&c2), json(&d)].join("\n"),
    }
}

fn c6_lognormal(workers: usize) -> Outcome {
    let sigma2 = 0.25;
    let model = Model::lognormal(sigma2).unwrap();
    let g = Generator::neg_entropy(1);
    let (theta, n) = (std::f64::consts::E, 10);
    let mc = McConfig::new(100_000, SEED).with_workers(workers);
    let umvue = build_type1_umvue(&model, &g).unwrap();
    let classical = Estimator::classical(&model);

    let a = check_type1_unbiased(&model, &[theta], n, &umvue, &g, &mc).unwrap().remove(0);
    let c2 = check_type2_unbiased(&model, &[theta], n, &classical, &mc).unwrap().remove(0);
    let c1 = check_type1_unbiased(&model, &[theta], n, &classical, &g, &mc).unwrap().remove(0);
    let log_target = 1.0 - sigma2 / (2.0 * n as f64);

    let ok_a = within(&a, 1.0, 3.0) && a.verdict.passed();
    let ok_c = c2.verdict.passed() && within(&c1, log_target, 3.0) && !c1.verdict.passed() && c1.z_score.abs() > 10.0;
    Outcome {
        pass: ok_a && ok_c,
        detail: format!(
            "geometric mean: mean log {:.5} z {:.2} {}; classical: type-II z {:.2}, mean log {:.5} vs {log_target}, type-I z {:.1} {}",
            a.mean,
            a.z_score,
            ok_word(ok_a),
            c2.z_score,
            c1.mean,
            c1.z_score,
            ok_word(ok_c)
        ),
        output: [json(&a), json(&c1), json(&c2)].join("\n"),
    }
}

fn c7_squared_error(workers: usize) -> Outcome {
    let model = Model::normal(1.5).unwrap();
    let g = Arc::new(Generator::squared_euclidean(1));
    let mc = McConfig::new(100_000, SEED).with_workers(workers);
    let mut worst = 0.0f64;
    let mut out = String::new();
    for e in [Estimator::sample_mean(), Estimator::first_observation()] {
        let (l, r) = estimate_risk_both(&model, 0.7, 6, &e, &g, &mc).unwrap();
        for (a, b) in [
            (l.risk, r.risk),
            (l.bias_term, r.bias_term),
            (l.variance_term, r.variance_term),
            (l.center, r.center),
            (l.se_risk, r.se_risk),
        ] {
            worst = worst.max((a - b).abs());
        }
        out += &format!("{}\n{}\n", json(&l), json(&r));
    }

    let base = Estimator::new("weighted", 3, |x| Ok(0.5 * x[0] + 0.3 * x[1] + 0.2 * x[2]));
    let rb = extended_rao_blackwell(&g, &base, PermutationBudget::Exact).unwrap();
    let dual = to_dual(&g, &base).unwrap();
    let mut rng = seeded(SEED + 7);
    let mut worst_rb = 0.0f64;
    for _ in 0..100 {
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-3.0..3.0)).collect();
        let a = rb.estimate(&x).unwrap();
        let b = rao_blackwellize_by_symmetry(|p| base.estimate(p), &x, PermutationBudget::Exact)
            .unwrap()
            .value;
        let via_dual = rao_blackwellize_by_symmetry(|p| dual.eval(p), &x, PermutationBudget::Exact)
            .unwrap()
            .value;
        worst_rb = worst_rb.max((a - b).abs()).max((via_dual - b).abs());
        writeln!(out, "{a:e}").unwrap();
    }
    Outcome {
        pass: worst <= 1e-10 && worst_rb <= 1e-10,
        detail: format!(
            "left vs right max term difference {worst:.2e}, extended vs plain averaging {worst_rb:.2e} on 100 samples (limit 1e-10)"
        ),
        output: out,
    }
}

fn c8_lehmann(workers: usize) -> Outcome {
    let model = Model::exponential();
    let g = Generator::neg_log(1);
    let grid = [1.0, 1.5, 2.0, 2.5, 3.0];
    let mc = McConfig::new(1_000_000, SEED).with_workers(workers);
    let umvue = build_type1_umvue(&model, &g).unwrap();
    let mean = Estimator::sample_mean();
    let a = lehmann_grid_check(&model, 2.0, &grid, 5, &umvue, &g, Orientation::Left, &mc).unwrap();
    let b = lehmann_grid_check(&model, 2.0, &grid, 5, &mean, &g, Orientation::Left, &mc).unwrap();
    let ok = a.argmin_theta == 2.0 && b.argmin_theta != 2.0;
    Outcome {
        pass: ok,
        detail: format!(
            "type-I UMVUE argmin {} (want 2.0); sample mean argmin {} (want not 2.0)",
            a.argmin_theta, b.argmin_theta
        ),
        output: format!("{}\n{}", json(&a), json(&b)),
    }
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

type Criterion = (&'static str, fn(usize) -> Outcome, Option<Duration>);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 duality transport", c1_duality_transport, Some(Duration::from_secs(1))),
        ("2 Legendre round trip", c2_legendre_round_trip, Some(Duration::from_secs(1))),
        ("3 exact decompositions", c3_decompositions, Some(Duration::from_secs(120))),
        ("4 extended Rao-Blackwell", c4_rao_blackwell, Some(Duration::from_secs(120))),
        ("5 exponential example", c5_exponential, Some(Duration::from_secs(60))),
        ("6 lognormal example", c6_lognormal, Some(Duration::from_secs(30))),
        ("7 squared-error degeneracy", c7_squared_error, None),
        ("8 Lehmann consistency", c8_lehmann, Some(Duration::from_secs(120))),
    ];
    let default_workers = bregman_umvue::risk_lab::default_workers();
    let mut all = true;
    let mut first_outputs = Vec::new();
    for (name, f, limit) in &criteria {
        let start = Instant::now();
        let o = f(default_workers);
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = o.pass && in_time;
        all &= pass;
        let budget = limit.map(|l| format!(" / {:.0?}", l)).unwrap_or_default();
        println!(
            "{} criterion {name}: {} [{:.2?}{budget}]",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed
        );
        first_outputs.push(o.output);
    }

    let mut mismatches = Vec::new();
    for ((name, f, _), reference) in criteria.iter().zip(&first_outputs) {
        for workers in [1, 2, 8] {
            if &f(workers).output != reference {
                mismatches.push(format!("{name} at {workers} workers"));
            }
        }
    }
    let det = mismatches.is_empty();
    all &= det;
    println!(
        "{} criterion 9 determinism: outputs of criteria 1-8 {} across a repeat run and worker counts 1/2/8",
        if det { "PASS" } else { "FAIL" },
        if det {
            "byte-identical".to_string()
        } else {
            format!("differ: {}", mismatches.join(", "))
        }
    );

    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
