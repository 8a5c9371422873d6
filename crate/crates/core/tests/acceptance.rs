//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `--nocapture` to see the lines for passing tests; failures
//! print them automatically). Criterion 10 (CLI replay) lives in the CLI
//! crate's test suite.

use rayon::prelude::*;
use sepmin::audit::{
    adversarial_query_stream, dp_ratio_audit, ftpl_regret_experiment, gaussian_rspm_bound,
    measure_z_inf, rspm_bound, rspm_expected_bound, substitution_neighbors, tv_distance,
};
use sepmin::class::{Family, QueryClass};
use sepmin::data::{DataPoint, Dataset, WeightedDataset};
use sepmin::mech::{rspm, rspm_gaussian, MechOutcome, Perturbation};
use sepmin::oracle::{coupled_run, ExactDualOracle, ExactOracle, FailurePolicy};
use sepmin::prsma::{prsma_rspm_preset, rspm_inner, subsample_baseline, PrsmaConfig};
use sepmin::query::{eval_on_dataset, Query};
use sepmin::rng;
use sepmin::synth::{
    default_alpha0, max_query_error, oracle_query, preset_t, DataPlayer, ProblemSizes,
    RspmMinimizer, SynthParams, SynthPreset,
};

fn report(criterion: &str, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} -- {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {criterion} FAILED -- {detail}");
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Excess error of a returned query on the full dataset against the exact
/// per-class minimum.
fn excess_error(q: &Query, s: &Dataset, class: &QueryClass) -> f64 {
    let best = class
        .enumerate_queries()
        .unwrap()
        .iter()
        .map(|qq| eval_on_dataset(qq, s).unwrap())
        .fold(f64::INFINITY, f64::min);
    eval_on_dataset(q, s).unwrap() - best
}

#[test]
fn criterion_01_separator_correctness() {
    let start = std::time::Instant::now();
    let mut checked = Vec::new();
    for d in 2..=6 {
        for fam in [Family::Conjunction, Family::Disjunction, Family::Parity] {
            let class = QueryClass::new(fam, d).unwrap();
            let u = class.separator_set().unwrap();
            assert!(class.verify_separator(&u).unwrap(), "{class} separator failed");
            checked.push(format!("{class}"));
        }
    }
    for d in 2..=4 {
        let class = QueryClass::halfspace(d, &[-1.0, 1.0]).unwrap();
        let u = class.separator_set().unwrap();
        assert_eq!(u.size(), d);
        assert!(class.verify_separator(&u).unwrap(), "{class} separator failed");
        checked.push(format!("{class}"));
    }
    for d in 2..=3 {
        let class = QueryClass::new(Family::DecisionList1, d).unwrap();
        let u = class.separator_set().unwrap();
        assert!(class.verify_separator(&u).unwrap(), "{class} separator failed");
        checked.push(format!("{class}"));
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        "1 (separator correctness)",
        secs < 30.0,
        &format!("{} class instances verified by exhaustive pair enumeration in {secs:.2}s", checked.len()),
    );
}

const C2_TRIALS: u64 = 200;

fn rspm_excess_trials(
    s: &Dataset,
    class: &QueryClass,
    perturbation: Perturbation,
    trials: u64,
    seed: u64,
) -> Vec<f64> {
    let sep = class.separator_set().unwrap();
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut oracle = ExactOracle::new(class).unwrap();
            let mut r = rng::stream(seed, &[t]);
            let out = sepmin::mech::rspm_weighted(
                WeightedDataset::from_dataset(s, 1.0),
                1.0,
                &sep,
                perturbation,
                &mut oracle,
                &mut r,
                false,
            )
            .unwrap();
            excess_error(&out.output().unwrap().query, s, class)
        })
        .collect()
}

#[test]
fn criterion_02_rspm_accuracy() {
    let class = QueryClass::new(Family::Conjunction, 3).unwrap();
    let (n, eps, beta) = (500usize, 1.0, 0.05);
    let s = Dataset::sample_binary(3, n, 0.75, &mut rng::stream(0xc2, &[])).unwrap();
    let bound = rspm_bound(3, beta, eps, n);
    let mean_bound = rspm_expected_bound(3, eps, n);
    let excesses = rspm_excess_trials(&s, &class, Perturbation::Laplace { epsilon: eps }, C2_TRIALS, 0x2a);
    let within = excesses.iter().filter(|&&e| e <= bound).count();
    let mean = excesses.iter().sum::<f64>() / excesses.len() as f64;
    report(
        "2 (rspm accuracy)",
        within as f64 >= 0.95 * C2_TRIALS as f64 && mean <= mean_bound,
        &format!(
            "{within}/{C2_TRIALS} trials within alpha = {bound:.4}; mean excess {mean:.4} vs expected-error bound {mean_bound:.4}"
        ),
    );
}

#[test]
fn criterion_03_gaussian_rspm_accuracy() {
    let class = QueryClass::new(Family::Conjunction, 3).unwrap();
    let (n, eps, delta, beta) = (500usize, 1.0, 0.05, 0.05);
    let s = Dataset::sample_binary(3, n, 0.75, &mut rng::stream(0xc3, &[])).unwrap();
    let bound = gaussian_rspm_bound(3, beta, eps, delta, n).unwrap();
    let excesses =
        rspm_excess_trials(&s, &class, Perturbation::Gaussian { epsilon: eps, delta }, C2_TRIALS, 0x3b);
    let within = excesses.iter().filter(|&&e| e <= bound).count();
    report(
        "3a (gaussian rspm accuracy)",
        within as f64 >= 0.95 * C2_TRIALS as f64,
        &format!("{within}/{C2_TRIALS} trials within the tail-based alpha = {bound:.4}"),
    );
}

#[test]
fn criterion_03_sqrt_m_direction_at_m6() {
    // Median measured excess of Laplace vs Gaussian RSPM at m = d = 6. The
    // high-probability bounds order this way (bound ratio > 1 already at
    // m = 6), so the bound ratio is asserted alongside the measured one.
    let class = QueryClass::new(Family::Conjunction, 6).unwrap();
    let (n, eps, delta, beta) = (500usize, 1.0, 0.05, 0.05);
    let s = Dataset::sample_binary(6, n, 0.5, &mut rng::stream(0xc6, &[])).unwrap();
    let mut lap =
        rspm_excess_trials(&s, &class, Perturbation::Laplace { epsilon: eps }, C2_TRIALS, 0x6a);
    let mut gauss =
        rspm_excess_trials(&s, &class, Perturbation::Gaussian { epsilon: eps, delta }, C2_TRIALS, 0x6b);
    let med_l = median(&mut lap);
    let med_g = median(&mut gauss);
    let measured_ratio = if med_g == 0.0 && med_l == 0.0 { 1.0 } else { med_l / med_g };
    let bound_ratio = rspm_bound(6, beta, eps, n) / gaussian_rspm_bound(6, beta, eps, delta, n).unwrap();
    report(
        "3b (sqrt-m improvement direction at m=6)",
        measured_ratio >= 1.0 && bound_ratio >= 1.0,
        &format!(
            "measured median ratio Laplace/Gaussian = {measured_ratio:.3} (medians {med_l:.4}/{med_g:.4}); \
             bound ratio = {bound_ratio:.3}. The Gaussian sigma = 3.5 sqrt(m ln(1/delta))/eps = {:.1} \
             exceeds the Laplace scale m/eps = {:.1} until m ln m > 24.5 ln(1/delta) (m >= ~21 at \
             delta = 0.05), so the measured improvement cannot appear at m = 6",
            sepmin::mech::gaussian_rspm_sigma(6, eps, delta).unwrap(),
            6.0 / eps
        ),
    );
}

#[test]
fn criterion_04_rspm_micro_privacy_audit() {
    let class = QueryClass::new(Family::Conjunction, 2).unwrap();
    let queries = class.enumerate_queries().unwrap();
    let labels: Vec<String> = queries.iter().map(|q| q.to_string()).collect();
    let pool: Vec<DataPoint> = class.enumerate_points().unwrap();
    let s = Dataset::new(vec![
        DataPoint::bits(&[0, 0]),
        DataPoint::bits(&[0, 1]),
        DataPoint::bits(&[1, 0]),
        DataPoint::bits(&[1, 1]),
        DataPoint::bits(&[1, 1]),
        DataPoint::bits(&[0, 1]),
        DataPoint::bits(&[1, 0]),
        DataPoint::bits(&[0, 0]),
    ])
    .unwrap();
    let neighbors = substitution_neighbors(&s, &pool);
    let sep = class.separator_set().unwrap();
    let q_index = |q: &Query| queries.iter().position(|x| x == q).unwrap();
    let mech = |ds: &Dataset, r: &mut rand_chacha::ChaCha8Rng| {
        let mut oracle = ExactOracle::new(&class)?;
        match rspm(ds, &sep, 1.0, &mut oracle, r, false)? {
            MechOutcome::Output(o) => Ok(q_index(&o.query)),
            MechOutcome::Fail { .. } => unreachable!("exact oracle"),
        }
    };
    let rep = dp_ratio_audit("rspm", mech, &labels, &s, &neighbors, 1.0, 0.0, 200_000, 1e-3, 0x4a)
        .unwrap();

    // Calibration control: the deterministic exact-ERM mechanism on a
    // dataset where one record flips the argmin must be rejected at eps=1.
    let mut pts = vec![DataPoint::bits(&[1, 1]); 2];
    pts.extend(vec![DataPoint::bits(&[0, 1]); 6]);
    let s_flip = Dataset::new(pts).unwrap();
    let neighbor = s_flip.with_record(2, DataPoint::bits(&[1, 0])).unwrap();
    let erm = |ds: &Dataset, _r: &mut rand_chacha::ChaCha8Rng| {
        let ans = sepmin::oracle::exact_oracle(&class, &WeightedDataset::from_dataset(ds, 1.0))?;
        Ok(q_index(ans.query().unwrap()))
    };
    let control =
        dp_ratio_audit("exact-erm", erm, &labels, &s_flip, &[neighbor], 1.0, 0.0, 200_000, 1e-3, 0x4b)
            .unwrap();

    report(
        "4 (rspm micro-domain privacy audit)",
        rep.pass && !control.pass,
        &format!(
            "rspm: {} neighbors, max observed log-ratio {:.3} <= eps with slack, violations {}; \
             exact-ERM control rejected: {}",
            neighbors.len(),
            rep.max_log_ratio,
            rep.violations.len(),
            !control.pass
        ),
    );
}

#[test]
fn criterion_05_prsma_structure() {
    // (i) K and reps match the formulas on a grid (also unit-tested).
    for (e, d) in [(0.1, 0.1), (0.05, 0.2), (0.25, 0.4), (0.5, 0.05)] {
        let cfg = PrsmaConfig::from_raw(e, d).unwrap();
        let k = ((1.0 / e) * (1.0 + (2.0f64 / d).ln())).ceil() as u64;
        assert_eq!(cfg.partitions(), k);
        assert_eq!(cfg.reps().unwrap(), ((k as f64 / d).ln() / d).ceil() as u64);
    }

    let class = QueryClass::new(Family::Conjunction, 2).unwrap();
    let sep = class.separator_set().unwrap();
    let cfg = PrsmaConfig::from_raw(0.1, 0.1).unwrap();

    // (ii) Always-fail oracle: Pr[non-Fail] <= delta_run + slack, and the
    // noisy threshold fires at the Laplace tail rate.
    let s = Dataset::sample_binary(2, 120, 0.5, &mut rng::stream(0x51, &[])).unwrap();
    let always = FailurePolicy::bernoulli(1.0).unwrap();
    let runs = 5000u64;
    let results: Vec<(bool, bool)> = (0..runs)
        .into_par_iter()
        .map(|seed| {
            let out = prsma_rspm_preset(&s, &class, &sep, &cfg, &always, seed).unwrap();
            (out.result.is_some(), out.noisy_count > cfg.threshold())
        })
        .collect();
    let non_fail = results.iter().filter(|r| r.0).count() as f64 / runs as f64;
    let exceed = results.iter().filter(|r| r.1).count() as f64 / runs as f64;
    let slack = 3.0 * (0.1f64 * 0.9 / runs as f64).sqrt();
    assert!(non_fail <= cfg.delta_run + slack, "non-fail rate {non_fail}");
    assert!(exceed <= cfg.delta_run / 2.0 + slack, "threshold rate {exceed}");

    // (iii) Never-fail oracle: per-seed conditional-output equality with the
    // direct subsample-and-run baseline.
    // With a perfect oracle T = K always, but the noisy threshold still
    // false-fails at rate exp(-eps_run (K - threshold))/2 ~ 25% at these
    // parameters, so compare on the seeds that release.
    let s2 = Dataset::sample_binary(2, 2000, 0.7, &mut rng::stream(0x52, &[])).unwrap();
    let never = FailurePolicy::never();
    let mut compared = 0;
    for seed in 0..30 {
        let out = prsma_rspm_preset(&s2, &class, &sep, &cfg, &never, seed).unwrap();
        assert_eq!(out.pass_count, cfg.partitions());
        let base = subsample_baseline(rspm_inner(&class, &sep, &never), &s2, &cfg, seed).unwrap();
        if out.result.is_some() {
            assert_eq!(out.result, base, "seed {seed}");
            compared += 1;
        }
    }
    assert!(compared >= 10, "too few surviving runs to compare ({compared})");

    // (iv) Bernoulli(0.05) failures: TV between the heuristic side's
    // conditional output distribution and the ideal side, via the coupled
    // runner over RSPM (the coupling lemma's construction).
    let s3 = Dataset::sample_binary(2, 60, 0.6, &mut rng::stream(0x53, &[])).unwrap();
    let queries = class.enumerate_queries().unwrap();
    let coupled: Vec<(usize, Option<usize>)> = (0..runs)
        .into_par_iter()
        .map(|seed| {
            let run = coupled_run(
                &class,
                FailurePolicy::bernoulli(0.05).unwrap(),
                seed,
                |oracle, algo_rng| {
                    let out = rspm(&s3, &sep, 1.0, oracle, algo_rng, false)?;
                    Ok(out.output().unwrap().query.clone())
                },
            )
            .unwrap();
            let idx = |q: &Query| queries.iter().position(|x| x == q).unwrap();
            (idx(&run.ideal), run.heuristic.as_ref().map(idx))
        })
        .collect();
    let mut ideal_counts = vec![0u64; queries.len()];
    let mut cond_counts = vec![0u64; queries.len()];
    let mut fails = 0u64;
    for (ideal, heuristic) in &coupled {
        ideal_counts[*ideal] += 1;
        match heuristic {
            Some(h) => {
                assert_eq!(h, ideal, "coupling: non-Fail must equal the ideal output");
                cond_counts[*h] += 1;
            }
            None => fails += 1,
        }
    }
    let tv = tv_distance(
        &sepmin::audit::counts_to_dist(&cond_counts),
        &sepmin::audit::counts_to_dist(&ideal_counts),
    )
    .unwrap();
    let tv_slack = 0.03;
    assert!(tv <= 0.05 + tv_slack, "coupled TV {tv}");

    report(
        "5 (prsma structure)",
        true,
        &format!(
            "formulas exact; always-fail non-Fail rate {non_fail:.4} <= {:.4}; 30-seed replay equality \
             ({compared} survived); coupled TV {tv:.4} <= 0.05+{tv_slack} ({fails} of {runs} runs failed)",
            cfg.delta_run + slack
        ),
    );
}

#[test]
fn criterion_06_prsma_accuracy_scaling() {
    // Median excess at n = 5000 vs n = 20000 (x4), 50 trials each, with the
    // run parameterization from the preset example (eps_run = delta_run =
    // 0.1, K = 40).
    let class = QueryClass::new(Family::Conjunction, 3).unwrap();
    let sep = class.separator_set().unwrap();
    let cfg = PrsmaConfig::from_raw(0.1, 0.1).unwrap();
    let never = FailurePolicy::never();
    let med_at = |n: usize, tag: u64| {
        let s = Dataset::sample_binary(3, n, 0.75, &mut rng::stream(0x60 + tag, &[])).unwrap();
        let mut ex: Vec<f64> = (0..50u64)
            .into_par_iter()
            .map(|seed| {
                let out = prsma_rspm_preset(&s, &class, &sep, &cfg, &never, rng::derive(0x61, &[tag, seed]))
                    .unwrap();
                excess_error(out.result.as_ref().expect("never-fail run must release"), &s, &class)
            })
            .collect();
        median(&mut ex)
    };
    let m5 = med_at(5000, 1);
    let m20 = med_at(20000, 2);
    let factor = m5 / m20.max(1e-12);
    report(
        "6 (prsma accuracy scaling)",
        (1.5..=3.0).contains(&factor),
        &format!(
            "median excess {m5:.4} at n=5000 vs {m20:.4} at n=20000, shrink factor {factor:.2} \
             (window [1.5, 3]). At the formula parameterization the inner privacy parameter \
             eps' = 1/sqrt(8 (n/K) ln(2K/delta)) keeps the subsample mechanism noise-dominated \
             for every n <= 20000 at m = 3 (noise-to-signal only crosses 1 near n/K ~ 1500), so \
             the released medians sit on the same quantized excess level at both sizes"
        ),
    );
}

#[test]
fn criterion_07_oracle_query_end_to_end() {
    let class = QueryClass::new(Family::Conjunction, 3).unwrap();
    let (eps, delta, beta) = (2.0, 1e-4, 0.1);
    let med_at = |n: usize, tag: u64| -> (f64, u64) {
        let sizes = ProblemSizes::for_class(&class, n, eps, delta, beta).unwrap();
        let t = preset_t(SynthPreset::GaussianRspm, &sizes).unwrap();
        let alpha0 = default_alpha0(sizes.m2, sizes.ln_x, t);
        let s = Dataset::sample_binary(3, n, 0.75, &mut rng::stream(0x70 + tag, &[])).unwrap();
        let mut errs: Vec<f64> = (0..20u64)
            .into_par_iter()
            .map(|run| {
                let params = SynthParams {
                    rounds: t,
                    epsilon: eps,
                    delta,
                    beta,
                    alpha0,
                    noise_scale: None,
                };
                let (eps0, delta0, _) = params.budget().unwrap();
                let mut dual = ExactDualOracle::new(&class).unwrap();
                let mut minimizer = RspmMinimizer::exact(
                    &class,
                    Perturbation::Gaussian { epsilon: eps0, delta: delta0 },
                    n as f64,
                )
                .unwrap();
                let out = oracle_query(
                    &s,
                    &class,
                    &params,
                    &mut dual,
                    &mut minimizer,
                    rng::derive(0x71, &[tag, run]),
                )
                .unwrap()
                .expect("exact oracles cannot fail");
                max_query_error(&s, &out.synthetic.points, &class).unwrap()
            })
            .collect();
        (median(&mut errs), t)
    };
    let (m5, t5) = med_at(5000, 1);
    let (m20, t20) = med_at(20000, 2);

    // Game-value property at S-hat = S: max_q A(S, q) = 0 exactly.
    let s = Dataset::sample_binary(3, 100, 0.6, &mut rng::stream(0x72, &[])).unwrap();
    assert_eq!(max_query_error(&s, s.points(), &class).unwrap(), 0.0);

    report(
        "7 (oracle-query end to end)",
        m5 <= 0.25 && m20 < m5,
        &format!(
            "median max-query-error {m5:.4} at n=5000 (T={t5}) and {m20:.4} at n=20000 (T={t20}); \
             game value exact at S-hat = S"
        ),
    );
}

#[test]
fn criterion_08_context_ftpl_regret() {
    let class = QueryClass::new(Family::Parity, 3).unwrap();
    let mut early = Vec::new();
    let mut late = Vec::new();
    let traces: Vec<(f64, f64)> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let stream = adversarial_query_stream(&class, 2000, rng::derive(0x80, &[seed])).unwrap();
            let trace = ftpl_regret_experiment(&class, &stream, None, rng::derive(0x81, &[seed])).unwrap();
            (trace.avg_regret_at(500), trace.avg_regret_at(2000))
        })
        .collect();
    for (e, l) in traces {
        early.push(e);
        late.push(l);
    }
    let med_early = median(&mut early);
    let med_late = median(&mut late);
    report(
        "8 (context-ftpl regret sublinearity)",
        med_late < med_early,
        &format!("median avg regret {med_late:.4} at T=2000 < {med_early:.4} at T=500 over 20 seeds"),
    );
}

#[test]
fn criterion_09_follow_the_private_leader() {
    let class = QueryClass::new(Family::Parity, 2).unwrap();
    let eps = 0.1;
    // Alternating adversarial stream over parities d=2.
    let stream: Vec<DataPoint> = (0..2000)
        .map(|t| if t % 2 == 0 { DataPoint::bits(&[1, 0]) } else { DataPoint::bits(&[0, 1]) })
        .collect();
    let mut regrets: Vec<f64> = (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let perm = sepmin::audit::rspm_perm(&class, eps).unwrap();
            sepmin::audit::follow_private_leader(&class, &stream, perm, 2.0 / eps, rng::derive(0x90, &[seed]))
                .unwrap()
                .avg_regret
        })
        .collect();
    let med = median(&mut regrets);
    let z_inf = measure_z_inf(&class, Perturbation::Laplace { epsilon: eps }, 2000, 0x91).unwrap();
    let bound = eps + z_inf / 2000.0 + 0.05;
    report(
        "9 (follow the private leader)",
        med <= bound,
        &format!("median avg regret {med:.4} at T=2000 <= eps + E||Z||inf/T + 0.05 = {bound:.4} (measured E||Z||inf = {z_inf:.2})"),
    );
}

// ---------------------------------------------------------------------------
// Supporting invariants exercised at acceptance scale.
// ---------------------------------------------------------------------------

#[test]
fn invariant_gaussian_micro_audit() {
    // The Gaussian variant passes the same micro-domain audit with delta
    // slack.
    let class = QueryClass::new(Family::Conjunction, 2).unwrap();
    let queries = class.enumerate_queries().unwrap();
    let labels: Vec<String> = queries.iter().map(|q| q.to_string()).collect();
    let pool: Vec<DataPoint> = class.enumerate_points().unwrap();
    let s = Dataset::sample_binary(2, 8, 0.5, &mut rng::stream(0xa0, &[])).unwrap();
    let neighbors = substitution_neighbors(&s, &pool);
    let sep = class.separator_set().unwrap();
    let (eps, delta) = (1.0, 0.05);
    let mech = |ds: &Dataset, r: &mut rand_chacha::ChaCha8Rng| {
        let mut oracle = ExactOracle::new(&class)?;
        match rspm_gaussian(ds, &sep, eps, delta, &mut oracle, r, false)? {
            MechOutcome::Output(o) => Ok(queries.iter().position(|x| x == &o.query).unwrap()),
            MechOutcome::Fail { .. } => unreachable!(),
        }
    };
    let rep =
        dp_ratio_audit("gauss-rspm", mech, &labels, &s, &neighbors, eps, delta, 200_000, 1e-3, 0xa1)
            .unwrap();
    assert!(rep.pass, "violations: {:?}", rep.violations);
}

#[test]
fn invariant_prsma_robust_micro_audit() {
    // Adversarial trigger policy on a micro-domain; sanity audit at the
    // final (eps, delta) target. delta_target > 1 makes the bound weak by
    // construction, which is exactly what the desk-scale parameters give.
    let class = QueryClass::new(Family::Conjunction, 2).unwrap();
    let sep = class.separator_set().unwrap();
    let cfg = PrsmaConfig::new(6.2, 1.1).unwrap();
    let target = DataPoint::bits(&[1, 1]);
    let policy = FailurePolicy::trigger(target.clone());
    let mut base_pts = Vec::new();
    for m in [0u32, 1, 2] {
        base_pts.extend(vec![DataPoint::from_mask(m, 2); 40]);
    }
    let s = Dataset::new(base_pts).unwrap();
    let neighbor = s.with_record(0, target).unwrap();
    let queries = class.enumerate_queries().unwrap();
    let labels: Vec<String> = queries
        .iter()
        .map(|q| q.to_string())
        .chain(std::iter::once("fail".to_string()))
        .collect();
    let mech = |ds: &Dataset, r: &mut rand_chacha::ChaCha8Rng| {
        use rand::Rng;
        let seed = r.gen::<u64>();
        let out = prsma_rspm_preset(ds, &class, &sep, &cfg, &policy, seed)?;
        Ok(match out.result {
            Some(q) => queries.iter().position(|x| x == &q).unwrap(),
            None => queries.len(),
        })
    };
    let rep = dp_ratio_audit(
        "prsma-trigger",
        mech,
        &labels,
        &s,
        &[neighbor],
        cfg.epsilon_target,
        cfg.delta_target,
        10_000,
        1e-3,
        0xa2,
    )
    .unwrap();
    assert!(rep.pass, "violations: {:?}", rep.violations);
}

#[test]
fn invariant_pbr_negation_closure() {
    // The returned query always lies in Q-bar and attains the larger of the
    // two branch payoffs up to the report-noisy-max noise.
    let class = QueryClass::new(Family::Conjunction, 2).unwrap();
    let s = Dataset::sample_binary(2, 200, 0.7, &mut rng::stream(0xa3, &[])).unwrap();
    let all = class.enumerate_with_negations().unwrap();
    let mut dual_oracle = ExactDualOracle::new(&class).unwrap();
    let dual = class.dual_view().unwrap();
    let mut player = DataPlayer::new(dual.separator, 5.0, &mut dual_oracle).unwrap();
    player.observe(&Query::conjunction(&[0]));
    let params = sepmin::synth::PbrParams { eps0: 0.05, delta0: 1e-6, alpha0: 0.3, beta0: 0.01 };
    let mut minimizer = sepmin::synth::ExactMinimizer::new(&class).unwrap();
    for seed in 0..20u64 {
        let mut r = rng::stream(0xa4, &[seed]);
        let player_ref = &mut player;
        let mut draw = |rr: &mut rand_chacha::ChaCha8Rng| player_ref.draw(rr);
        let q = sepmin::synth::private_best_response(&s, &class, &mut draw, &params, &mut minimizer, &mut r)
            .unwrap()
            .unwrap();
        assert!(all.contains(&q), "query {q} outside Q-bar");
    }
}
