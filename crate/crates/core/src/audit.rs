//! Empirical verification harness: neighboring-dataset frequency-ratio
//! audits (sanity checks, not proofs), total-variation estimates, accuracy
//! bound tables, and the online-learning regret experiments.

use rayon::prelude::*;
use statrs::distribution::{Beta, ContinuousCDF};

use crate::class::QueryClass;
use crate::data::{DataPoint, Dataset, WeightedDataset};
use crate::error::{Error, Result};
use crate::mech::{implicit_perturbations, rspm_weighted, MechOutcome, Perturbation};
use crate::oracle::ExactOracle;
use crate::prsma::{prsma_rspm_preset, PrsmaConfig};
use crate::query::Query;
use crate::rng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Exact (Clopper-Pearson) two-sided binomial confidence interval.
pub fn binomial_ci(successes: u64, trials: u64, alpha: f64) -> (f64, f64) {
    let k = successes as f64;
    let n = trials as f64;
    let lo = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).unwrap().inverse_cdf(alpha / 2.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).unwrap().inverse_cdf(1.0 - alpha / 2.0)
    };
    (lo, hi)
}

/// (1/2) sum |p - q| over a shared enumerated output space.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Input("distributions over different supports".into()));
    }
    for dist in [p, q] {
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::Input(format!("distribution sums to {total}, not 1")));
        }
    }
    Ok(p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0)
}

pub fn counts_to_dist(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditViolation {
    pub event: String,
    pub neighbor: usize,
    /// "base>neighbor" or "neighbor>base".
    pub direction: String,
    pub lower: f64,
    pub upper_budgeted: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditReport {
    pub mechanism: String,
    pub trials: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub confidence: f64,
    pub outputs: Vec<String>,
    pub base_counts: Vec<u64>,
    pub neighbor_counts: Vec<Vec<u64>>,
    /// Max |log frequency ratio| over events with two-sided support.
    pub max_log_ratio: f64,
    pub violations: Vec<AuditViolation>,
    pub pass: bool,
}

const MIN_AUDIT_TRIALS: u64 = 10_000;
/// Events below this count on both sides are excluded from the observed
/// log-ratio statistic (they still participate in the CP test).
const SUPPORT_FLOOR: u64 = 20;

/// Estimate per-output frequencies of `mech` on `s` and every neighbor, and
/// flag any event family (singletons plus prefix unions in base-probability
/// order) whose frequency violates e^eps * p' + delta beyond the exact
/// binomial confidence slack. This is an empirical sanity audit; passing is
/// evidence, not proof.
pub fn dp_ratio_audit<M>(
    mechanism: &str,
    mech: M,
    output_labels: &[String],
    s: &Dataset,
    neighbors: &[Dataset],
    epsilon: f64,
    delta: f64,
    trials: u64,
    confidence: f64,
    seed: u64,
) -> Result<AuditReport>
where
    M: Fn(&Dataset, &mut ChaCha8Rng) -> Result<usize> + Sync,
{
    if trials < MIN_AUDIT_TRIALS {
        return Err(Error::Capacity(format!(
            "ratio audit needs at least {MIN_AUDIT_TRIALS} trials for the slack construction, got {trials}"
        )));
    }
    if neighbors.is_empty() {
        return Err(Error::Input("no neighbors supplied".into()));
    }
    let n_out = output_labels.len();
    let count_for = |ds_idx: usize, ds: &Dataset| -> Result<Vec<u64>> {
        (0..trials)
            .into_par_iter()
            .try_fold(
                || vec![0u64; n_out],
                |mut acc, t| {
                    let mut r = rng::stream(seed, &[rng::TAG_TRIAL, ds_idx as u64, t]);
                    let out = mech(ds, &mut r)?;
                    if out >= n_out {
                        return Err(Error::Input(format!("mechanism output index {out} out of range")));
                    }
                    acc[out] += 1;
                    Ok(acc)
                },
            )
            .try_reduce(
                || vec![0u64; n_out],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        *x += y;
                    }
                    Ok(a)
                },
            )
    };

    let base_counts = count_for(0, s)?;
    let neighbor_counts: Vec<Vec<u64>> = neighbors
        .iter()
        .enumerate()
        .map(|(i, nb)| count_for(i + 1, nb))
        .collect::<Result<_>>()?;

    // Event family: singletons, then prefix unions sorted by base frequency.
    let mut order: Vec<usize> = (0..n_out).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(base_counts[i]));
    let mut events: Vec<(String, Vec<usize>)> = (0..n_out)
        .map(|i| (output_labels[i].clone(), vec![i]))
        .collect();
    for k in 2..n_out {
        events.push((format!("top{k}"), order[..k].to_vec()));
    }

    let comparisons = events.len() * neighbors.len() * 2;
    let alpha_each = confidence / (2 * comparisons) as f64;

    let mut violations = Vec::new();
    let mut max_log_ratio = 0.0f64;
    for (name, members) in &events {
        let base: u64 = members.iter().map(|&i| base_counts[i]).sum();
        for (nb, counts) in neighbor_counts.iter().enumerate() {
            let other: u64 = members.iter().map(|&i| counts[i]).sum();
            if base >= SUPPORT_FLOOR && other >= SUPPORT_FLOOR {
                let lr = ((base as f64 / trials as f64) / (other as f64 / trials as f64)).ln().abs();
                max_log_ratio = max_log_ratio.max(lr);
            }
            for (dir, k_hi, k_lo) in [("base>neighbor", base, other), ("neighbor>base", other, base)] {
                let (lo_hi, _) = binomial_ci(k_hi, trials, alpha_each);
                let (_, hi_lo) = binomial_ci(k_lo, trials, alpha_each);
                let budget = epsilon.exp() * hi_lo + delta;
                if lo_hi > budget {
                    violations.push(AuditViolation {
                        event: name.clone(),
                        neighbor: nb,
                        direction: dir.to_string(),
                        lower: lo_hi,
                        upper_budgeted: budget,
                    });
                }
            }
        }
    }

    Ok(AuditReport {
        mechanism: mechanism.to_string(),
        trials,
        epsilon,
        delta,
        confidence,
        outputs: output_labels.to_vec(),
        base_counts,
        neighbor_counts,
        max_log_ratio,
        pass: violations.is_empty(),
        violations,
    })
}

/// All single-record substitutions of `s` from the replacement pool,
/// deduplicated as multisets (the mechanisms are exchangeable).
pub fn substitution_neighbors(s: &Dataset, pool: &[DataPoint]) -> Vec<Dataset> {
    let mut out: Vec<Dataset> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for i in 0..s.n() {
        for p in pool {
            if p == &s.points()[i] {
                continue;
            }
            let nb = s.with_record(i, p.clone()).unwrap();
            let mut key: Vec<String> = nb.iter().map(|x| x.to_string()).collect();
            key.sort();
            if seen.insert(key.join(";")) {
                out.push(nb);
            }
        }
    }
    out
}

/// Randomized response on the first record's first coordinate: outputs the
/// true bit with probability e^eps/(1+e^eps). Reference mechanism with a
/// known exact ratio, used to calibrate the audit slack.
pub fn randomized_response(s: &Dataset, epsilon: f64, rng: &mut ChaCha8Rng) -> usize {
    let bit = (s.points()[0].coord(0) == 1.0) as usize;
    let keep = epsilon.exp() / (1.0 + epsilon.exp());
    if rng.gen_bool(keep) {
        bit
    } else {
        1 - bit
    }
}

/// Per-round losses of an online learner plus the best-in-hindsight track.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RegretTrace {
    pub losses: Vec<f64>,
    /// Best cumulative loss in hindsight after each round; nondecreasing.
    pub cumulative_best: Vec<f64>,
    pub avg_regret: f64,
    /// Scale of the perturbations the learner used.
    pub perturbation_scale: f64,
}

impl RegretTrace {
    pub fn avg_regret_at(&self, t: usize) -> f64 {
        let played: f64 = self.losses[..t].iter().sum();
        (played - self.cumulative_best[t - 1]) / t as f64
    }
}

/// Follow the private leader: at round t play perm(x^1..x^(t-1)) and incur
/// q^t(x^t). Each round's pERM randomness comes from an independent stream
/// derived from `seed`.
pub fn follow_private_leader<P>(
    class: &QueryClass,
    stream: &[DataPoint],
    mut perm: P,
    perturbation_scale: f64,
    seed: u64,
) -> Result<RegretTrace>
where
    P: FnMut(&[DataPoint], &mut ChaCha8Rng) -> Result<Query>,
{
    if stream.is_empty() {
        return Err(Error::Input("empty loss stream".into()));
    }
    let queries = class.enumerate_queries()?;
    let mut cum = vec![0.0f64; queries.len()];
    let mut losses = Vec::with_capacity(stream.len());
    let mut cumulative_best = Vec::with_capacity(stream.len());
    for (t, x) in stream.iter().enumerate() {
        let mut r = rng::stream(seed, &[rng::TAG_ROUND, t as u64]);
        let q = perm(&stream[..t], &mut r)?;
        losses.push(q.eval(x)? as f64);
        for (c, qq) in cum.iter_mut().zip(&queries) {
            *c += qq.eval_unchecked(x) as f64;
        }
        cumulative_best.push(cum.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let avg_regret =
        (losses.iter().sum::<f64>() - cumulative_best.last().unwrap()) / stream.len() as f64;
    Ok(RegretTrace { losses, cumulative_best, avg_regret, perturbation_scale })
}

/// RSPM as the pERM inside follow-the-private-leader.
pub fn rspm_perm(
    class: &QueryClass,
    epsilon: f64,
) -> Result<impl FnMut(&[DataPoint], &mut ChaCha8Rng) -> Result<Query>> {
    let sep = class.separator_set()?;
    let mut oracle = ExactOracle::new(class)?;
    Ok(move |prefix: &[DataPoint], r: &mut ChaCha8Rng| {
        let wd = WeightedDataset::new(prefix.iter().map(|p| (p.clone(), 1.0)).collect())?;
        match rspm_weighted(wd, 1.0, &sep, Perturbation::Laplace { epsilon }, &mut oracle, r, false)? {
            MechOutcome::Output(o) => Ok(o.query),
            MechOutcome::Fail { .. } => Err(Error::Input("exact oracle cannot fail".into())),
        }
    })
}

/// Monte-Carlo estimate of E max_q |Z_q| for the implicit RSPM perturbation.
pub fn measure_z_inf(
    class: &QueryClass,
    perturbation: Perturbation,
    trials: u64,
    seed: u64,
) -> Result<f64> {
    let queries = class.enumerate_queries()?;
    let sep = class.separator_set()?;
    let scale = perturbation.scale(sep.size())?;
    let mut total = 0.0;
    for t in 0..trials {
        let mut r = rng::stream(seed, &[rng::TAG_TRIAL, t]);
        let noise: Vec<f64> = match perturbation {
            Perturbation::Laplace { .. } => {
                (0..sep.size()).map(|_| crate::mech::lap(scale, &mut r)).collect()
            }
            Perturbation::Gaussian { .. } => (0..sep.size())
                .map(|_| crate::mech::gaussian_sample(scale, &mut r).unwrap())
                .collect(),
        };
        let z = implicit_perturbations(&queries, &sep, &noise);
        total += z.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    Ok(total / trials as f64)
}

/// The data player's regret experiment: CONTEXT-FTPL against a fixed
/// adversarial query stream; the realized loss at round t is (not q^t)(x^t)
/// for the single point the player draws that round.
pub fn ftpl_regret_experiment(
    class: &QueryClass,
    stream: &[Query],
    noise_scale: Option<f64>,
    seed: u64,
) -> Result<RegretTrace> {
    if stream.is_empty() {
        return Err(Error::Input("empty query stream".into()));
    }
    let dual = class.dual_view()?;
    let points = class.enumerate_points()?;
    let scale = noise_scale.unwrap_or_else(|| {
        crate::synth::default_noise_scale(
            dual.separator_size(),
            class.ln_universe_size(),
            stream.len() as u64,
        )
    });
    let mut oracle = crate::oracle::ExactDualOracle::new(class)?;
    let mut player = crate::synth::DataPlayer::new(dual.separator, scale, &mut oracle)?;

    let mut cum = vec![0.0f64; points.len()];
    let mut losses = Vec::with_capacity(stream.len());
    let mut cumulative_best = Vec::with_capacity(stream.len());
    for (t, q) in stream.iter().enumerate() {
        let mut r = rng::stream(seed, &[rng::TAG_ROUND, t as u64]);
        let x = player
            .draw(&mut r)?
            .ok_or_else(|| Error::Input("exact dual oracle cannot fail".into()))?;
        let neg = q.negate();
        losses.push(neg.eval(&x)? as f64);
        for (c, p) in cum.iter_mut().zip(&points) {
            *c += neg.eval_unchecked(p) as f64;
        }
        cumulative_best.push(cum.iter().cloned().fold(f64::INFINITY, f64::min));
        player.observe(q);
    }
    let avg_regret =
        (losses.iter().sum::<f64>() - cumulative_best.last().unwrap()) / stream.len() as f64;
    Ok(RegretTrace { losses, cumulative_best, avg_regret, perturbation_scale: scale })
}

/// An i.i.d. uniform stream over Q and its negations.
pub fn adversarial_query_stream(class: &QueryClass, t: usize, seed: u64) -> Result<Vec<Query>> {
    let all = class.enumerate_with_negations()?;
    let mut r = rng::stream(seed, &[rng::TAG_TRIAL]);
    Ok((0..t).map(|_| all[r.gen_range(0..all.len())].clone()).collect())
}

// ---------------------------------------------------------------------------
// Accuracy bound formulas (natural logs throughout).
// ---------------------------------------------------------------------------

/// Laplace RSPM high-probability excess error: 2 m^2 ln(m/beta) / (eps n).
pub fn rspm_bound(m: usize, beta: f64, epsilon: f64, n: usize) -> f64 {
    2.0 * (m * m) as f64 * (m as f64 / beta).ln() / (epsilon * n as f64)
}

/// Laplace RSPM expected excess error: (2 m^2 / (eps n)) (1 + ln m).
pub fn rspm_expected_bound(m: usize, epsilon: f64, n: usize) -> f64 {
    2.0 * (m * m) as f64 * (1.0 + (m as f64).ln()) / (epsilon * n as f64)
}

/// Gaussian RSPM tail-based excess error: m sigma sqrt(2 ln(2m/beta)) / n.
pub fn gaussian_rspm_bound(m: usize, beta: f64, epsilon: f64, delta: f64, n: usize) -> Result<f64> {
    let sigma = crate::mech::gaussian_rspm_sigma(m, epsilon, delta)?;
    Ok(m as f64 * sigma * (2.0 * (2.0 * m as f64 / beta).ln()).sqrt() / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub epsilon: f64,
    pub mean_excess: f64,
    pub p95_excess: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MechPreset {
    Rspm,
    RspmGaussian { delta: f64 },
    PrsmaRspm { delta_target: f64 },
}

impl MechPreset {
    pub fn id(&self) -> &'static str {
        match self {
            MechPreset::Rspm => "rspm",
            MechPreset::RspmGaussian { .. } => "gauss-rspm",
            MechPreset::PrsmaRspm { .. } => "prsma",
        }
    }
}

/// Mean and 95th-percentile excess error over seeded trials, next to the
/// theoretical bound, for a grid of (n, eps) cells.
pub fn error_table(
    preset: &MechPreset,
    class: &QueryClass,
    n_grid: &[usize],
    eps_grid: &[f64],
    trials: u64,
    beta: f64,
    seed: u64,
) -> Result<Vec<ErrorRow>> {
    let sep = class.separator_set()?;
    let m = sep.size();
    let queries = class.enumerate_queries()?;
    let mut rows = Vec::new();
    for (ni, &n) in n_grid.iter().enumerate() {
        for (ei, &epsilon) in eps_grid.iter().enumerate() {
            let cell = (ni * eps_grid.len() + ei) as u64;
            let s = Dataset::sample_binary(
                class.point_dim(),
                n,
                0.5,
                &mut rng::stream(seed, &[rng::TAG_TRIAL, cell]),
            )?;
            // Exact per-query means, once per cell.
            let base: Vec<f64> = queries
                .iter()
                .map(|q| crate::query::eval_on_dataset(q, &s))
                .collect::<Result<_>>()?;
            let best = base.iter().cloned().fold(f64::INFINITY, f64::min);

            let excess_of = |q: &Query| -> f64 {
                let i = queries.iter().position(|x| x == q).unwrap();
                base[i] - best
            };

            let excesses: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| -> Result<f64> {
                    let run_seed = rng::derive(seed, &[cell, t]);
                    let mut r = rng::stream(run_seed, &[]);
                    let q = match preset {
                        MechPreset::Rspm | MechPreset::RspmGaussian { .. } => {
                            let pert = match preset {
                                MechPreset::Rspm => Perturbation::Laplace { epsilon },
                                MechPreset::RspmGaussian { delta } => {
                                    Perturbation::Gaussian { epsilon, delta: *delta }
                                }
                                _ => unreachable!(),
                            };
                            let mut oracle = ExactOracle::new(class)?;
                            match rspm_weighted(
                                WeightedDataset::from_dataset(&s, 1.0),
                                1.0,
                                &sep,
                                pert,
                                &mut oracle,
                                &mut r,
                                false,
                            )? {
                                MechOutcome::Output(o) => o.query,
                                MechOutcome::Fail { .. } => unreachable!("exact oracle"),
                            }
                        }
                        MechPreset::PrsmaRspm { delta_target } => {
                            let cfg = PrsmaConfig::new(epsilon, *delta_target)?;
                            let out = prsma_rspm_preset(
                                &s,
                                class,
                                &sep,
                                &cfg,
                                &crate::oracle::FailurePolicy::never(),
                                run_seed,
                            )?;
                            match out.result {
                                Some(q) => q,
                                None => return Ok(f64::NAN),
                            }
                        }
                    };
                    Ok(excess_of(&q))
                })
                .collect::<Result<_>>()?;

            let kept: Vec<f64> = excesses.into_iter().filter(|x| !x.is_nan()).collect();
            if kept.is_empty() {
                return Err(Error::Input("every trial failed; nothing to tabulate".into()));
            }
            let mean = kept.iter().sum::<f64>() / kept.len() as f64;
            let mut sorted = kept;
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let p95 = sorted[((sorted.len() as f64 * 0.95).ceil() as usize - 1).min(sorted.len() - 1)];
            let bound = match preset {
                MechPreset::Rspm => rspm_bound(m, beta, epsilon, n),
                MechPreset::RspmGaussian { delta } => gaussian_rspm_bound(m, beta, epsilon, *delta, n)?,
                MechPreset::PrsmaRspm { delta_target } => {
                    let cfg = PrsmaConfig::new(epsilon, *delta_target)?;
                    crate::prsma::prsma_rspm_error_bound(
                        m,
                        class.ln_query_count()?,
                        n,
                        cfg.eps_run,
                        cfg.delta_run,
                        beta.max(cfg.delta_run * 1.5),
                    )?
                }
            };
            rows.push(ErrorRow { n, epsilon, mean_excess: mean, p95_excess: p95, bound });
        }
    }
    Ok(rows)
}
