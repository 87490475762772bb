//! Acceptance suite. Each test prints one PASS/FAIL line (straight to stdout,
//! so it shows without `--nocapture`) and then asserts.
//!
//! Reference values come from oracles written here, independent of the
//! library code paths they check.

use std::io::Write as _;
use std::time::{Duration, Instant};

use logagg::adversarial::{
    example1, extreme_lemma_oracle, near_extremal_structure, proposition1_instance,
    regret_floor,
};
use logagg::aggregators::AggregatorKind;
use logagg::evidence::{EvidenceMatrix, InformationStructure, SignalDistribution};
use logagg::harness::{sweep, EnvironmentSpec, MatrixChoice, RunConfig, SweepResult};
use logagg::loglik::{
    log_odds, logit_inverse, surrogate_gradient, surrogate_loss, SurrogateLossInstance,
};
use logagg::ogd::project_ball;
use logagg::spectral::{min_singular_value, optimal_hypothesis, DenseMatrix};
use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, detail: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "criterion {id} [{}] {title} ({:.2}s): {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    let _ = out.flush();
}

fn kl(p: f64, q: f64) -> f64 {
    let term = |a: f64, b: f64| if a == 0.0 { 0.0 } else { a * (a / b).ln() };
    term(p, q) + term(1.0 - p, 1.0 - q)
}

fn entropy(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

// ---------------------------------------------------------------- 1

#[test]
fn criterion_1_example_one() {
    let start = Instant::now();
    let floor = regret_floor(&example1()).unwrap();
    let elapsed = start.elapsed();
    let exact = 6.0 / 32.0 * (2f64.ln() - entropy(0.25));
    let pass = (floor - 0.0245).abs() <= 0.001
        && (floor - exact).abs() < 1e-12
        && elapsed < Duration::from_secs(1);
    report(
        1,
        "example regret floor",
        pass,
        elapsed,
        &format!("floor = {floor:.6} (closed form {exact:.6}, target 0.0245 +- 0.001)"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 2

fn random_distribution(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| 0.05 + rng.random::<f64>()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_structure(rng: &mut ChaCha8Rng) -> InformationStructure {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=6);
    let prior = rng.random_range(0.05..0.95);
    let rows: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let mut row: Vec<u8> = (0..m).map(|_| u8::from(rng.random::<bool>())).collect();
            if row.iter().all(|&x| x == 0) {
                row[rng.random_range(0..m)] = 1;
            }
            row
        })
        .collect();
    let signals = (0..m)
        .map(|_| {
            let k = rng.random_range(1..=4);
            let p1 = random_distribution(k, rng);
            let p0 = random_distribution(k, rng);
            let pairs: Vec<(f64, f64)> = p1.into_iter().zip(p0).collect();
            SignalDistribution::from_pairs(prior, &pairs).unwrap()
        })
        .collect();
    InformationStructure::new(prior, signals, EvidenceMatrix::from_rows(&rows).unwrap()).unwrap()
}

/// `P(omega = 1 | signals in `observed` take their values in `profile`)`,
/// summing the joint law over every completion of the unobserved signals.
fn enumerate_posterior(s: &InformationStructure, observed: &[usize], profile: &[usize]) -> f64 {
    let m = s.m();
    let sizes: Vec<usize> = s.signals().iter().map(|x| x.len()).collect();
    let mut current = vec![0usize; m];
    let (mut num, mut den) = (0.0, 0.0);
    loop {
        if observed.iter().all(|&j| current[j] == profile[j]) {
            let mut p1 = s.prior();
            let mut p0 = 1.0 - s.prior();
            for j in 0..m {
                let o = s.signals()[j].outcomes()[current[j]];
                p1 *= o.p_given_omega1;
                p0 *= o.p_given_omega0;
            }
            num += p1;
            den += p1 + p0;
        }
        let mut j = 0;
        loop {
            if j == m {
                return num / den;
            }
            current[j] += 1;
            if current[j] < sizes[j] {
                break;
            }
            current[j] = 0;
            j += 1;
        }
    }
}

#[test]
fn criterion_2_bayes_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut checks = 0u64;
    for _ in 0..1000 {
        let s = random_structure(&mut rng);
        let all: Vec<usize> = (0..s.m()).collect();
        for _ in 0..5 {
            let round = s.sample_round(&mut rng);
            let r_star = s.optimal_forecast(&round.posteriors).unwrap();
            let oracle = enumerate_posterior(&s, &all, &round.signal_outcomes);
            worst = worst.max((r_star - oracle).abs());
            worst = worst.max((round.r_star - oracle).abs());
            worst = worst.max((s.brute_force_optimal(&round.signal_outcomes) - oracle).abs());
            checks += 3;
            for i in 0..s.n() {
                let f = s.expert_forecast(i, &round.posteriors).unwrap();
                let oracle = enumerate_posterior(&s, s.evidence().observed(i), &round.signal_outcomes);
                worst = worst.max((f - oracle).abs());
                worst = worst.max((round.expert_forecasts[i] - oracle).abs());
                checks += 2;
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = worst <= 1e-9 && elapsed < Duration::from_secs(10);
    report(
        2,
        "Bayes pooling vs enumeration",
        pass,
        elapsed,
        &format!("{checks} comparisons over 1000 structures, max abs error {worst:.2e}"),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 3 and 4

const SEEDS: u64 = 20;
const T_SMALL: u64 = 10_000;
const T_LARGE: u64 = 100_000;
const ENV_SEED: u64 = 20_240_601;

fn learning_environments(prior: f64) -> Vec<(String, EnvironmentSpec)> {
    let random = |matrix| EnvironmentSpec::Random {
        matrix,
        outcomes: 3,
        priors: vec![prior],
        posterior_floor: 0.05,
    };
    let mut envs: Vec<(String, EnvironmentSpec)> = [2, 4, 8]
        .into_iter()
        .map(|n| (format!("identity n={n}"), random(MatrixChoice::Identity(n))))
        .collect();
    envs.push((
        "random 8x5".into(),
        random(MatrixChoice::Random {
            n: 8,
            m: 5,
            sigma_floor: 0.3,
        }),
    ));
    envs
}

struct RatioCheck {
    line: String,
    pass: bool,
}

fn ratio_check(label: &str, res: &SweepResult) -> RatioCheck {
    let small = res.row(T_SMALL).unwrap();
    let large = res.row(T_LARGE).unwrap();
    let run = res.runs_at(T_LARGE).next().unwrap();
    let t = T_LARGE as f64;
    let bound = 5.0 * run.n as f64 / run.sigma * t.sqrt() * t.ln();
    let growth = large.ratio_sqrt / small.ratio_sqrt;
    let pass = large.mean_regret <= bound && growth <= 1.2;
    RatioCheck {
        line: format!(
            "{label}: R(1e5) = {:.1} (bound {:.0}), R/sqrt(T) {:.4} -> {:.4} (x{growth:.3}, limit 1.2), sigma {:.3}",
            large.mean_regret, bound, small.ratio_sqrt, large.ratio_sqrt, run.sigma
        ),
        pass,
    }
}

fn base_config(env: EnvironmentSpec, kind: AggregatorKind) -> RunConfig {
    let mut c = RunConfig::new(env, kind, T_SMALL, 1);
    c.env_seed = Some(ENV_SEED);
    c
}

#[test]
fn criterion_3_dynamic_prior_aware_learning() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for (label, env) in learning_environments(0.4) {
        let res = sweep(&base_config(env, AggregatorKind::Dynamic), &[T_SMALL, T_LARGE], SEEDS).unwrap();
        let check = ratio_check(&label, &res);
        pass &= check.pass;
        lines.push(check.line);
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report(3, "dynamic prior-aware regret", pass, elapsed, &lines.join("; "));
    assert!(pass);
}

#[test]
fn criterion_4_static_prior_ignorant_learning() {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut pass = true;
    for mu in [0.3, 0.5, 0.7] {
        for (label, env) in learning_environments(mu) {
            let res = sweep(&base_config(env, AggregatorKind::Static), &[T_SMALL, T_LARGE], SEEDS).unwrap();
            let check = ratio_check(&format!("mu={mu} {label}"), &res);
            // Hoeffding: |mu_hat - mu| <= 3 / sqrt(T1) in at least 18 of 20 seeds
            let mut within = 0;
            for run in res.runs_at(T_LARGE) {
                let t1 = (run.n as f64 * (T_LARGE as f64).sqrt() / run.sigma).ceil();
                let mu_hat = run.diagnostics.estimated_prior.unwrap();
                within += u32::from((mu_hat - mu).abs() <= 3.0 / t1.sqrt());
            }
            let ok = check.pass && within >= 18;
            pass &= ok;
            lines.push(format!("{}, mu_hat within 3/sqrt(T1) in {within}/20", check.line));
        }
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    report(4, "static prior-ignorant regret", pass, elapsed, &lines.join("; "));
    assert!(pass);
}

// ---------------------------------------------------------------- 5

#[test]
fn criterion_5_kernel_counterexample() {
    let start = Instant::now();
    let a = EvidenceMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]]).unwrap();
    let inst = proposition1_instance(&a).expect("kernel vector with nonzero sum");
    let floor = regret_floor(&inst.structure).unwrap();
    let mut base = RunConfig::new(
        EnvironmentSpec::Structures(vec![inst.structure.clone()]),
        AggregatorKind::Dynamic,
        1000,
        1,
    );
    base.sigma = Some(1.0);
    let res = sweep(&base, &[1_000, 10_000], SEEDS).unwrap();
    let per_round = |t: u64| res.row(t).unwrap().mean_regret / t as f64;
    let (small, large) = (per_round(1_000), per_round(10_000));
    let elapsed = start.elapsed();
    let pass = floor > 0.0
        && large >= 0.5 * floor
        && (large - small).abs() <= 0.2 * small
        && elapsed < Duration::from_secs(60);
    report(
        5,
        "non-injective impossibility",
        pass,
        elapsed,
        &format!(
            "floor = {floor:.6}; dynamic mean regret per round {small:.6} (T=1e3), {large:.6} (T=1e4)"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 6

#[test]
fn criterion_6_extreme_forecast_lemmas() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut worst_low: f64 = 0.0;
    let mut worst_extremal: f64 = f64::INFINITY;
    for n in 1..=3usize {
        for alpha in [0.01, 0.05, 0.1] {
            let check = extreme_lemma_oracle(n, alpha, 10_000, &mut rng).unwrap();
            violations += check.violations();
            worst_low = worst_low.max(check.worst_low_ratio);
            let s = near_extremal_structure(n, alpha).unwrap();
            let target = n as f64 * alpha / ((1.0 - alpha) + n as f64 * alpha);
            worst_extremal = worst_extremal.min(s.prob_one_given_low(alpha).unwrap() / target);
        }
    }
    let elapsed = start.elapsed();
    let pass = violations == 0 && worst_extremal >= 0.9 && elapsed < Duration::from_secs(60);
    report(
        6,
        "extreme-forecast lemmas",
        pass,
        elapsed,
        &format!(
            "{violations} violations in 90000 structures; worst P(w=1|low)/(n alpha) = {worst_low:.3}; near-extremal attains {worst_extremal:.4} of the bound"
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 7

#[test]
fn criterion_7_prior_flip() {
    let start = Instant::now();
    let env = EnvironmentSpec::PriorFlip { n: 3, high: 0.9 };
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in AggregatorKind::ALL {
        let mut c = RunConfig::new(env.clone(), kind, 10_000, 7);
        c.sigma = Some(1.0);
        let mean = logagg::harness::run_summary(&c).unwrap().mean_expected_regret();
        let ok = match kind {
            AggregatorKind::Dynamic => mean <= 0.01,
            _ => mean >= 0.3,
        };
        pass &= ok;
        lines.push(format!("{kind} {mean:.4}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(30);
    report(
        7,
        "prior-flip demonstration",
        pass,
        elapsed,
        &format!(
            "mean regret per round: {} (ignorant floor {:.4})",
            lines.join(", "),
            kl(0.9, 0.5)
        ),
    );
    assert!(pass);
}

// ---------------------------------------------------------------- 8

fn central_difference(inst: &SurrogateLossInstance, h: &[f64], i: usize) -> f64 {
    let step = 1e-5;
    let mut plus = h.to_vec();
    let mut minus = h.to_vec();
    plus[i] += step;
    minus[i] -= step;
    (surrogate_loss(inst, &plus) - surrogate_loss(inst, &minus)) / (2.0 * step)
}

/// Dense Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let k = b.len();
    for col in 0..k {
        let p = (col..k).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..k {
            let f = a[r][col] / a[col][col];
            for c in col..k {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let s: f64 = (r + 1..k).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// Smallest singular value via inverse iteration on `A^T A`.
fn sigma_min_inverse_iteration(rows: &[Vec<f64>]) -> f64 {
    let m = rows[0].len();
    let gram: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| rows.iter().map(|r| r[i] * r[j]).sum()).collect())
        .collect();
    let mut v: Vec<f64> = (0..m).map(|i| 1.0 + 0.1 * i as f64).collect();
    let mut last = f64::INFINITY;
    for _ in 0..10_000 {
        let w = solve(gram.clone(), v.clone());
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.iter().map(|x| x / norm).collect();
        let av: Vec<f64> = rows.iter().map(|r| r.iter().zip(&v).map(|(a, b)| a * b).sum()).collect();
        let sigma = av.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (sigma - last).abs() < 1e-15 {
            return sigma;
        }
        last = sigma;
    }
    last
}

fn run_property<S: Strategy>(
    name: &str,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(PropConfig {
        cases,
        failure_persistence: None,
        ..PropConfig::default()
    });
    runner.run(&strategy, test).map_err(|e| format!("{name}: {e}"))
}

#[test]
fn criterion_8_numerical_properties() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut record = |r: Result<(), String>| {
        if let Err(e) = r {
            failures.push(e);
        }
    };

    record(run_property("round trip", 2000, 1e-9..(1.0 - 1e-9), |p: f64| {
        let back = logit_inverse(log_odds(p).unwrap());
        prop_assert!((back - p).abs() <= 1e-12, "p = {p}, back = {back}");
        Ok(())
    }));

    let instance = (
        prop::collection::vec(-4.0..4.0f64, 1..6),
        any::<bool>(),
        -2.0..2.0f64,
    )
        .prop_flat_map(|(z, omega, mu)| {
            let n = z.len();
            (Just(z), Just(omega), Just(mu), prop::collection::vec(-3.0..3.0f64, n))
        });

    record(run_property("finite differences", 1000, instance.clone(), |(z, omega, mu, h)| {
        let inst = SurrogateLossInstance::new(z, omega, mu);
        let g = surrogate_gradient(&inst, &h);
        for (i, &gi) in g.iter().enumerate() {
            let fd = central_difference(&inst, &h, i);
            let scale = gi.abs().max(1e-3);
            prop_assert!((gi - fd).abs() <= 1e-6 * scale, "coordinate {i}: {gi} vs {fd}");
        }
        Ok(())
    }));

    record(run_property("gradient bound", 2000, instance.clone(), |(z, omega, mu, h)| {
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let inst = SurrogateLossInstance::new(z.clone(), omega, mu);
        prop_assert!(norm(&surrogate_gradient(&inst, &h)) <= norm(&z) + 1e-12);
        Ok(())
    }));

    let convex = instance.prop_flat_map(|(z, omega, mu, h1)| {
        let n = z.len();
        (
            Just((z, omega, mu, h1)),
            prop::collection::vec(-3.0..3.0f64, n),
            0.0..=1.0f64,
        )
    });
    record(run_property("convexity", 1000, convex, |((z, omega, mu, h1), h2, lambda)| {
        let inst = SurrogateLossInstance::new(z, omega, mu);
        let mix: Vec<f64> = h1.iter().zip(&h2).map(|(a, b)| lambda * a + (1.0 - lambda) * b).collect();
        let lhs = surrogate_loss(&inst, &mix);
        let rhs = lambda * surrogate_loss(&inst, &h1) + (1.0 - lambda) * surrogate_loss(&inst, &h2);
        prop_assert!(lhs <= rhs + 1e-9);
        Ok(())
    }));

    record(run_property(
        "projection idempotence",
        2000,
        (prop::collection::vec(-100.0..100.0f64, 1..8), 0.01..50.0f64),
        |(z, w)| {
            let once = project_ball(&z, w);
            prop_assert_eq!(project_ball(&once, w), once);
            Ok(())
        },
    ));

    // injective 0/1 matrices with m <= n
    let matrices = (1usize..=6)
        .prop_flat_map(|m| (m..=8).prop_map(move |n| (n, m)))
        .prop_flat_map(|(n, m)| prop::collection::vec(prop::collection::vec(prop::bool::ANY, m), n))
        .prop_map(|rows| {
            rows.into_iter()
                .map(|r| r.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect::<Vec<f64>>())
                .collect::<Vec<_>>()
        })
        .prop_filter("injective", |rows| {
            min_singular_value(&DenseMatrix::from_rows(rows).unwrap()) > 0.05
        });

    record(run_property(
        "h* identity",
        500,
        (matrices.clone(), prop::collection::vec(-5.0..5.0f64, 6)),
        |(rows, y)| {
            let a = DenseMatrix::from_rows(&rows).unwrap();
            let y = &y[..a.cols()];
            let h = optimal_hypothesis(&a).unwrap();
            let ay = a.mul_vec(y);
            let lhs: f64 = h.iter().zip(&ay).map(|(p, q)| p * q).sum();
            let rhs: f64 = y.iter().sum();
            let ynorm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((lhs - rhs).abs() <= 1e-8 * ynorm.max(1.0), "{lhs} vs {rhs}");
            Ok(())
        },
    ));

    record(run_property("sigma_min cross-check", 300, matrices, |rows| {
        let jacobi = min_singular_value(&DenseMatrix::from_rows(&rows).unwrap());
        let inverse = sigma_min_inverse_iteration(&rows);
        prop_assert!((jacobi - inverse).abs() <= 1e-8, "{jacobi} vs {inverse}");
        Ok(())
    }));

    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    let detail = if failures.is_empty() {
        "round trip, finite differences, gradient bound, convexity, projection, h* identity, sigma_min cross-check".to_string()
    } else {
        failures.join("; ")
    };
    report(8, "numerical properties", pass, elapsed, &detail);
    assert!(pass, "{detail}");
}
