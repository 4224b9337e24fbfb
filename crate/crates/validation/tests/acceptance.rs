//! Acceptance suite. Prints one `PASS` or `FAIL` line per criterion, with the
//! observed values underneath, and exits nonzero if any criterion fails.
//!
//! Run with `cargo test -p kmjack-validation --test acceptance`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};

use kmjack::experiments::{emit_tables, run_study, Estimator, StudyConfig, StudyKind, StudyResult, DEFAULT_SEED};
use kmjack::imputation::fit_aft_stute;
use kmjack::jackknife::adjusted_last_weight;
use kmjack::simgen::{CellGenerator, Scenario, SkewedLaw, TailConstraint, AFT_BETA};
use kmjack::{
    jackknife_bias, km_weights, modified_estimates, order_sample, rng, ImputationMethod,
    ImputedSample, LastWeightRule, MethodTag, Observation,
};

struct Outcome {
    passed: bool,
    lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
        }
    }

    /// Records one sub-check.
    fn check(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "MISS" }));
    }

    fn note(&mut self, line: String) {
        self.lines.push(format!("     {line}"));
    }
}

fn run(cfg: &StudyConfig) -> Vec<StudyResult> {
    run_study(cfg).expect("study run")
}

fn bias(r: &StudyResult, e: Estimator, n: usize, p: f64) -> f64 {
    r.summary(e, n, p).expect("cell").mean_bias
}

const KG_TABLE: [(Estimator, usize, f64, f64); 4] = [
    (Estimator::S_hat, 30, 50.0, -0.364),
    (Estimator::S_tilde, 30, 50.0, -0.295),
    (Estimator::S_hat, 150, 90.0, -0.346),
    (Estimator::S_tilde, 150, 90.0, 0.164),
];

fn kg_desk_config() -> StudyConfig {
    let mut cfg = StudyConfig::new(StudyKind::Kg);
    cfg.n_list = vec![30, 150];
    cfg.p_list = vec![10.0, 50.0, 70.0, 90.0];
    cfg.replications = 20_000;
    cfg.imputation = Some(ImputationMethod::default());
    cfg
}

fn criterion_1(kg: &StudyResult) -> Outcome {
    let mut out = Outcome::new();
    for (e, n, p, target) in KG_TABLE {
        let b = bias(kg, e, n, p);
        out.check(
            (b - target).abs() <= 0.02,
            format!("{e} n={n} p={p}: bias {b:.4}, target {target} +/- 0.02"),
        );
    }
    out
}

fn criterion_2(kg: &StudyResult) -> Outcome {
    let mut out = Outcome::new();
    for (e, target) in [(Estimator::S_hat_star, -0.465), (Estimator::S_tilde_star, -0.396)] {
        let b = bias(kg, e, 30, 50.0);
        out.check(
            (b - target).abs() <= 0.05,
            format!("{e} n=30 p=50: bias {b:.4}, target {target} +/- 0.05"),
        );
    }
    for &n in &kg.config.n_list {
        for &p in &kg.config.p_list {
            let star = bias(kg, Estimator::S_hat_star, n, p);
            let hat = bias(kg, Estimator::S_hat, n, p);
            out.check(
                star.abs() >= hat.abs(),
                format!("|bias S_hat_star| >= |bias S_hat| at n={n} p={p}: {:.4} vs {:.4}", star.abs(), hat.abs()),
            );
        }
        let tilde_star = bias(kg, Estimator::S_tilde_star, n, 90.0);
        out.check(tilde_star > 0.0, format!("S_tilde_star bias positive at n={n} p=90: {tilde_star:.4}"));
    }
    out
}

fn argmax_abs(points: &[(f64, f64)]) -> f64 {
    points
        .iter()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|p| p.0)
        .unwrap_or(f64::NAN)
}

fn criterion_3(kg: &StudyResult, kg_curve: &StudyResult) -> Outcome {
    let mut out = Outcome::new();
    let v = kg.summary(Estimator::S_hat, 30, 50.0).unwrap().variance;
    out.check(
        (v - 0.034).abs() <= 0.15 * 0.034,
        format!("variance S_hat n=30 p=50: {v:.4}, target 0.034 +/- 15%"),
    );
    let curve: Vec<(f64, f64)> = kg_curve
        .summaries
        .iter()
        .filter(|s| s.estimator == Estimator::S_hat && s.n == 30)
        .map(|s| (s.p_percent, s.variance))
        .collect();
    let at = argmax_abs(&curve);
    out.check(
        (50.0..=80.0).contains(&at),
        format!("variance curve of S_hat at n=30 peaks at p={at}, required in [50, 80]"),
    );
    out.note(format!(
        "variances by p: {}",
        curve.iter().map(|(p, v)| format!("{p}:{v:.4}")).collect::<Vec<_>>().join(" ")
    ));
    out
}

/// `(p, bias, std_error)` rows of `S_hat` from an emitted `curves.csv`.
fn read_s_hat_curves(path: &Path) -> BTreeMap<usize, Vec<(f64, f64, f64)>> {
    let text = fs::read_to_string(path).expect("curves.csv");
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let (ce, cn, cp, cb, cs) = (col("estimator"), col("n"), col("p_percent"), col("bias"), col("std_error"));
    let mut series: BTreeMap<usize, Vec<(f64, f64, f64)>> = BTreeMap::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f[ce] != "S_hat" {
            continue;
        }
        series.entry(f[cn].parse().unwrap()).or_default().push((
            f[cp].parse().unwrap(),
            f[cb].parse().unwrap(),
            f[cs].parse().unwrap(),
        ));
    }
    for s in series.values_mut() {
        s.sort_by(|a, b| a.0.total_cmp(&b.0));
    }
    series
}

/// Unimodality of `|bias|` over `p > 0` allowing each step to deviate by two
/// standard errors of the difference.
fn shape_checks(out: &mut Outcome, label: &str, curve: &[(f64, f64, f64)]) {
    if let Some(&(_, b0, se0)) = curve.iter().find(|c| c.0 == 0.0) {
        out.check(
            b0.abs() <= 3.0 * se0,
            format!("{label}: bias at p=0 {b0:.4}, 3 SE = {:.4}", 3.0 * se0),
        );
    }
    let pos: Vec<_> = curve.iter().filter(|c| c.0 > 0.0).copied().collect();
    let peak_index = (0..pos.len()).max_by(|&a, &b| pos[a].1.abs().total_cmp(&pos[b].1.abs())).unwrap();
    let peak = pos[peak_index].0;
    out.check(
        (50.0..=80.0).contains(&peak),
        format!("{label}: |bias| peaks at p={peak}, required in [50, 80]"),
    );
    let mut monotone = true;
    for k in 1..pos.len() {
        let (prev, cur) = (pos[k - 1], pos[k]);
        let slack = 2.0 * (prev.2 * prev.2 + cur.2 * cur.2).sqrt();
        let step = cur.1.abs() - prev.1.abs();
        monotone &= if k <= peak_index { step >= -slack } else { step <= slack };
    }
    out.check(monotone, format!("{label}: |bias| rises to the peak then falls"));
    out.note(format!(
        "{label} bias by p: {}",
        curve.iter().map(|(p, b, _)| format!("{p}:{b:.3}")).collect::<Vec<_>>().join(" ")
    ));
}

fn criterion_4(results: &[StudyResult]) -> Outcome {
    let mut out = Outcome::new();
    let dir = tempfile::tempdir().unwrap();
    for r in results {
        let sub = dir.path().join(&r.scenario);
        emit_tables(r, &sub).unwrap();
        for (n, curve) in read_s_hat_curves(&sub.join("curves.csv")) {
            shape_checks(&mut out, &format!("{} n={n}", r.scenario), &curve);
        }
    }
    out
}

fn sample(times: &[f64], events: &[u8]) -> kmjack::OrderedSample {
    let raw: Vec<Observation> = times.iter().zip(events).map(|(&t, &e)| Observation::new(t, e == 1)).collect();
    order_sample(&raw).unwrap()
}

fn criterion_5() -> Outcome {
    let mut out = Outcome::new();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-10;
    let w = km_weights(&sample(&[1.0, 2.0, 3.0, 4.0], &[1, 0, 1, 1]));
    let expected = [0.25, 0.0, 0.375, 0.375];
    out.check(
        w.weights.iter().zip(expected).all(|(a, b)| close(*a, b)),
        format!("weights {:?}, expected {expected:?}", w.weights),
    );
    let s = sample(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 0, 1]);
    let b = jackknife_bias(&s, |t| t);
    out.check(close(b, -1.0), format!("jackknife bias {b}, expected -1.0"));
    let s = sample(&[1.0, 2.0, 3.0, 4.0], &[1, 1, 0, 0]);
    let wn = adjusted_last_weight(&s, LastWeightRule::Reclassified);
    out.check(close(wn, 0.75), format!("adjusted last weight {wn}, expected 0.75"));
    let imp = ImputedSample::new(&s, 5.0, MethodTag::PredictedDifference).unwrap();
    let m = modified_estimates(&imp, |t| t, LastWeightRule::Reclassified).unwrap();
    out.check(close(m.bias, -1.25), format!("modified bias {}, expected -1.25", m.bias));
    out.check(close(m.s_hat, 4.5), format!("modified estimate {}, expected 4.5", m.s_hat));
    out.check(close(m.s_tilde, 5.75), format!("modified corrected {}, expected 5.75", m.s_tilde));
    out
}

/// Product-limit mean from risk sets; distinct times assumed.
fn risk_set_mean(obs: &[Observation]) -> f64 {
    let mut sorted = obs.to_vec();
    sorted.sort_by(|a, b| a.time.total_cmp(&b.time));
    let (mut survival, mut mean) = (1.0, 0.0);
    for (k, o) in sorted.iter().enumerate() {
        if o.event {
            let next = survival * (1.0 - 1.0 / (sorted.len() - k) as f64);
            mean += o.time * (survival - next);
            survival = next;
        }
    }
    mean
}

fn criterion_6() -> Outcome {
    let mut out = Outcome::new();
    let mut g = rand_chacha::ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = g.random_range(2..=8usize);
        let mut obs: Vec<Observation> = (0..n)
            .map(|_| Observation::new(g.random_range(0.01..20.0), g.random_bool(0.5)))
            .collect();
        obs.sort_by(|a, b| a.time.total_cmp(&b.time));
        obs[n - 2].event = false;
        obs[n - 1].event = true;
        let full = risk_set_mean(&obs);
        let loo: f64 = (0..n)
            .map(|i| {
                let rest: Vec<Observation> = obs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, o)| *o).collect();
                risk_set_mean(&rest)
            })
            .sum::<f64>()
            / n as f64;
        let brute = (n - 1) as f64 * (loo - full);
        let closed = jackknife_bias(&order_sample(&obs).unwrap(), |t| t);
        worst = worst.max((brute - closed).abs());
    }
    out.check(worst <= 1e-10, format!("1000 samples, largest discrepancy {worst:e}"));
    out
}

fn criterion_7() -> Outcome {
    let mut out = Outcome::new();
    for law in SkewedLaw::ALL {
        let mut worst: f64 = 0.0;
        for k in 1..=9 {
            let p = f64::from(k) / 10.0;
            let gen = CellGenerator::new(Scenario::Skewed { law }, 10, p, TailConstraint::None).unwrap();
            let frac = gen.empirical_censoring(&mut rng::stream(DEFAULT_SEED, &[k as u64]), 100_000);
            worst = worst.max((frac - p).abs());
        }
        out.check(
            worst <= 0.01,
            format!("{}: largest |empirical - target| over p=10..90 is {worst:.4}", law.name()),
        );
    }
    out
}

fn tables_bytes(results: &[StudyResult]) -> Vec<(String, Vec<u8>)> {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for r in results {
        let sub = dir.path().join(&r.scenario);
        emit_tables(r, &sub).unwrap();
        let mut names: Vec<_> = fs::read_dir(&sub).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for path in names {
            files.push((format!("{}/{}", r.scenario, path.file_name().unwrap().to_string_lossy()), fs::read(path).unwrap()));
        }
    }
    files
}

fn criterion_8() -> Outcome {
    let mut out = Outcome::new();
    for kind in [StudyKind::Kg, StudyKind::Dist, StudyKind::Aft] {
        let mut cfg = StudyConfig::new(kind);
        cfg.n_list = vec![20, 50];
        cfg.p_list = vec![0.0, 30.0, 60.0];
        cfg.replications = if kind == StudyKind::Aft { 100 } else { 500 };
        let bytes_with = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
            pool.install(|| tables_bytes(&run(&cfg)))
        };
        let one = bytes_with(1);
        let four = bytes_with(4);
        out.check(
            one == four,
            format!("{} study: {} files identical with 1 and 4 worker threads", kind.name(), one.len()),
        );
    }
    out
}

fn criterion_9(aft: &StudyResult) -> Outcome {
    let mut out = Outcome::new();
    let mut imputations = 0;
    let mut all_above = true;
    for c in aft.cells.iter().filter(|c| c.p_percent > 0.0) {
        imputations += c.imputations;
        all_above &= c.min_imputation_gap.is_none_or(|g| g > 0.0);
    }
    out.check(
        all_above && imputations > 0,
        format!("{imputations} imputations, every imputed time exceeds the largest observed time"),
    );

    let gen = CellGenerator::new(Scenario::Aft { alpha: 0.0 }, 2000, 0.0, TailConstraint::None).unwrap();
    let data = gen.generate(&mut rng::stream(DEFAULT_SEED, &[])).unwrap();
    let fit = fit_aft_stute(data.data.covariates.as_ref().unwrap(), data.sample()).unwrap();
    let worst = fit
        .coefficients
        .iter()
        .zip(AFT_BETA)
        .map(|(b, t)| (b - t).abs())
        .fold(0.0, f64::max);
    out.check(
        worst <= 0.1,
        format!(
            "n=2000 uncensored fit: coefficients {:?}, largest error {worst:.4}",
            fit.coefficients.iter().map(|b| (b * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );

    let finite = aft.summaries.iter().all(|s| s.mean_bias.is_finite());
    let wild_variance = aft.summaries.iter().filter(|s| !s.variance.is_finite()).count();
    out.check(
        finite,
        format!("all bias values finite ({wild_variance} cells with overflowing variance)"),
    );
    for e in Estimator::ALL {
        let s10 = aft.summary(e, 50, 10.0).unwrap();
        let s0 = aft.summary(e, 50, 0.0).unwrap();
        let se = (s10.std_error().powi(2) + s0.std_error().powi(2)).sqrt();
        let diff = s10.mean_bias - s0.mean_bias;
        out.check(
            diff.abs() <= 3.0 * se,
            format!("{e}: bias p=10 minus p=0 is {diff:.4}, 3 SE = {:.4}", 3.0 * se),
        );
    }
    out
}

fn main() -> ExitCode {
    let start = Instant::now();
    let kg = run(&kg_desk_config()).remove(0);

    let mut kg_curve_cfg = StudyConfig::new(StudyKind::Kg);
    kg_curve_cfg.n_list = vec![30];
    kg_curve_cfg.p_list = (0..=9).map(|k| f64::from(10 * k)).collect();
    kg_curve_cfg.replications = 20_000;
    let kg_curve = run(&kg_curve_cfg).remove(0);

    let mut dist_cfg = StudyConfig::new(StudyKind::Dist);
    dist_cfg.n_list = vec![30];
    dist_cfg.p_list = (0..=9).map(|k| f64::from(10 * k)).collect();
    let dist = run(&dist_cfg);

    let mut aft_cfg = StudyConfig::new(StudyKind::Aft);
    aft_cfg.n_list = vec![50];
    aft_cfg.p_list = (0..=7).map(|k| f64::from(10 * k)).collect();
    aft_cfg.replications = 2000;
    aft_cfg.imputation = Some(ImputationMethod::ResampledMean { resamples: 100 });
    let aft = run(&aft_cfg).remove(0);

    let mut shape_inputs = vec![kg_curve.clone()];
    shape_inputs.extend(dist.iter().cloned());
    shape_inputs.push(aft.clone());

    let criteria: Vec<(&str, Outcome)> = vec![
        ("1 Koziol-Green bias of S_hat and S_tilde", criterion_1(&kg)),
        ("2 Koziol-Green bias of the modified estimators", criterion_2(&kg)),
        ("3 Koziol-Green variance of S_hat", criterion_3(&kg, &kg_curve)),
        ("4 shape of the S_hat bias curves", criterion_4(&shape_inputs)),
        ("5 hand-computed oracles", criterion_5()),
        ("6 closed form against leave-one-out jackknife", criterion_6()),
        ("7 censoring calibration", criterion_7()),
        ("8 determinism across thread counts", criterion_8()),
        ("9 AFT study properties", criterion_9(&aft)),
    ];

    let mut failed = 0;
    for (name, outcome) in &criteria {
        println!("{} criterion {name}", if outcome.passed { "PASS" } else { "FAIL" });
        for line in &outcome.lines {
            println!("    {line}");
        }
        if !outcome.passed {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} of {} criteria passed ({:.1}s)",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
