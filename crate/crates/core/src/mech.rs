//! Differential-privacy primitives (Laplace/Gaussian samplers, report noisy
//! max, composition accounting) and the separator-perturbed minimization
//! mechanisms.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::class::{QueryClass, SeparatorSet};
use crate::data::{Dataset, WeightedDataset};
use crate::error::{Error, Result};
use crate::oracle::{OracleOutcome, WeightedMinimizer};
use crate::query::Query;

/// An (epsilon, delta) privacy budget.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Input(format!("epsilon must be positive, got {epsilon}")));
        }
        if !(0.0..1.0).contains(&delta) {
            return Err(Error::Input(format!("delta must lie in [0,1), got {delta}")));
        }
        Ok(PrivacyParams { epsilon, delta })
    }

    pub fn pure(epsilon: f64) -> Result<Self> {
        PrivacyParams::new(epsilon, 0.0)
    }
}

/// Basic composition: budgets add coordinatewise.
pub fn compose_basic(params: &[PrivacyParams]) -> PrivacyParams {
    PrivacyParams {
        epsilon: params.iter().map(|p| p.epsilon).sum(),
        delta: params.iter().map(|p| p.delta).sum(),
    }
}

/// Per-round budget under advanced composition across T rounds:
/// eps0 = eps / sqrt(24 T ln(2/delta)), delta0 = delta / (4T).
pub fn advanced_budget(epsilon: f64, delta: f64, t: u64) -> Result<(f64, f64)> {
    if t < 1 {
        return Err(Error::Input("T must be >= 1".into()));
    }
    if !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Input("advanced composition needs epsilon > 0 and delta in (0,1)".into()));
    }
    let eps0 = epsilon / (24.0 * t as f64 * (2.0 / delta).ln()).sqrt();
    let delta0 = delta / (4.0 * t as f64);
    Ok((eps0, delta0))
}

/// One draw from Lap(0, b) via the inverse CDF.
pub fn laplace_sample<R: Rng>(scale: f64, rng: &mut R) -> Result<f64> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Input(format!("Laplace scale must be positive, got {scale}")));
    }
    Ok(lap(scale, rng))
}

pub(crate) fn lap<R: Rng>(scale: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.gen_range(-0.5..0.5);
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

/// One draw from N(0, sigma^2).
pub fn gaussian_sample<R: Rng>(sigma: f64, rng: &mut R) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Input(format!("Gaussian sigma must be positive, got {sigma}")));
    }
    let z: f64 = StandardNormal.sample(rng);
    Ok(z * sigma)
}

/// The separator-weight noise distribution used by the mechanisms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    /// Lap(m/eps) per separator element; the pure-DP route.
    Laplace { epsilon: f64 },
    /// N(0, sigma^2) with sigma = 3.5 sqrt(m ln(1/delta)) / eps.
    Gaussian { epsilon: f64, delta: f64 },
}

impl Perturbation {
    pub fn scale(&self, m: usize) -> Result<f64> {
        match *self {
            Perturbation::Laplace { epsilon } => {
                if !(epsilon > 0.0) {
                    return Err(Error::Input("epsilon must be positive".into()));
                }
                Ok(m as f64 / epsilon)
            }
            Perturbation::Gaussian { epsilon, delta } => gaussian_rspm_sigma(m, epsilon, delta),
        }
    }

    fn sample(&self, m: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        if m == 0 {
            return Ok(Vec::new());
        }
        let s = self.scale(m)?;
        let draws = match self {
            Perturbation::Laplace { .. } => (0..m).map(|_| lap(s, rng)).collect(),
            Perturbation::Gaussian { .. } => (0..m)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    z * s
                })
                .collect(),
        };
        Ok(draws)
    }
}

/// sigma = 3.5 sqrt(m ln(1/delta)) / eps, requiring delta in (0, 1/e).
pub fn gaussian_rspm_sigma(m: usize, epsilon: f64, delta: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Input("epsilon must be positive".into()));
    }
    if !(delta > 0.0 && delta < 1.0 / std::f64::consts::E) {
        return Err(Error::Input(format!("Gaussian mechanism needs delta in (0, 1/e), got {delta}")));
    }
    Ok(3.5 * (m as f64 * (1.0 / delta).ln()).sqrt() / epsilon)
}

/// Result of one mechanism execution.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanismOutput {
    pub query: Query,
    /// The realized separator perturbation, retained when tracing is on.
    pub noise_trace: Option<Vec<f64>>,
    pub oracle_calls: u64,
}

/// A mechanism either produces an output or surfaces the oracle's Fail;
/// retry semantics belong to the caller.
#[derive(Debug, Clone, PartialEq)]
pub enum MechOutcome {
    Output(MechanismOutput),
    Fail { oracle_calls: u64 },
}

impl MechOutcome {
    pub fn output(&self) -> Option<&MechanismOutput> {
        match self {
            MechOutcome::Output(o) => Some(o),
            MechOutcome::Fail { .. } => None,
        }
    }

    pub fn is_fail(&self) -> bool {
        matches!(self, MechOutcome::Fail { .. })
    }
}

/// Report Separator-Perturbed Min: augment the dataset with one copy of each
/// separator element carrying Lap(m/eps) weight, then make a single oracle
/// call.
pub fn rspm(
    s: &Dataset,
    u: &SeparatorSet,
    epsilon: f64,
    oracle: &mut dyn WeightedMinimizer,
    rng: &mut ChaCha8Rng,
    trace: bool,
) -> Result<MechOutcome> {
    rspm_weighted(
        WeightedDataset::from_dataset(s, 1.0),
        1.0,
        u,
        Perturbation::Laplace { epsilon },
        oracle,
        rng,
        trace,
    )
}

/// Gaussian-noise variant of [`rspm`].
pub fn rspm_gaussian(
    s: &Dataset,
    u: &SeparatorSet,
    epsilon: f64,
    delta: f64,
    oracle: &mut dyn WeightedMinimizer,
    rng: &mut ChaCha8Rng,
    trace: bool,
) -> Result<MechOutcome> {
    rspm_weighted(
        WeightedDataset::from_dataset(s, 1.0),
        1.0,
        u,
        Perturbation::Gaussian { epsilon, delta },
        oracle,
        rng,
        trace,
    )
}

/// Weighted-input extension: rescale the input by `unit_scale` so that every
/// private record carries weight +-1, then add separator noise at the usual
/// scale. The input weights times `unit_scale` must put private records at
/// magnitude <= 1 for the per-record sensitivity argument to apply.
pub fn rspm_weighted(
    mut wd: WeightedDataset,
    unit_scale: f64,
    u: &SeparatorSet,
    perturbation: Perturbation,
    oracle: &mut dyn WeightedMinimizer,
    rng: &mut ChaCha8Rng,
    trace: bool,
) -> Result<MechOutcome> {
    let noise = perturbation.sample(u.size(), rng)?;
    if unit_scale != 1.0 {
        wd.scale_weights(unit_scale);
    }
    rspm_with_noise(wd, u, &noise, oracle, trace)
}

/// Deterministic core of RSPM given the realized noise vector. Exposed for
/// audits that recompute the implicit per-query perturbation.
pub fn rspm_with_noise(
    mut wd: WeightedDataset,
    u: &SeparatorSet,
    noise: &[f64],
    oracle: &mut dyn WeightedMinimizer,
    trace: bool,
) -> Result<MechOutcome> {
    if noise.len() != u.size() {
        return Err(Error::Input(format!(
            "noise vector length {} != separator size {}",
            noise.len(),
            u.size()
        )));
    }
    for (e, &w) in u.elements().iter().zip(noise) {
        wd.push(e.clone(), w);
    }
    let answer = oracle.minimize(&wd)?;
    match answer.outcome {
        OracleOutcome::Success { query, .. } => Ok(MechOutcome::Output(MechanismOutput {
            query,
            noise_trace: trace.then(|| noise.to_vec()),
            oracle_calls: answer.calls_consumed,
        })),
        OracleOutcome::Fail => Ok(MechOutcome::Fail { oracle_calls: answer.calls_consumed }),
    }
}

/// The implicit pERM perturbation: Z_q = sum_i eta_i q(e_i) for every query,
/// in enumeration order.
pub fn implicit_perturbations(queries: &[Query], u: &SeparatorSet, noise: &[f64]) -> Vec<f64> {
    queries
        .iter()
        .map(|q| {
            u.elements()
                .iter()
                .zip(noise)
                .map(|(e, &w)| w * q.eval_unchecked(e) as f64)
                .sum()
        })
        .collect()
}

/// Add independent Lap(scale) noise to every candidate value and return the
/// label of the noisy maximum; ties break toward the first index.
pub fn report_noisy_max<L: Clone, R: Rng>(
    values: &[(L, f64)],
    scale: f64,
    rng: &mut R,
) -> Result<L> {
    if values.is_empty() {
        return Err(Error::Input("report_noisy_max needs at least one candidate".into()));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Input(format!("noise scale must be positive, got {scale}")));
    }
    let mut best = 0usize;
    let mut best_v = f64::NEG_INFINITY;
    for (i, (_, v)) in values.iter().enumerate() {
        let noisy = v + lap(scale, rng);
        if noisy > best_v {
            best_v = noisy;
            best = i;
        }
    }
    Ok(values[best].0.clone())
}

/// The generic exponential-mechanism learner: sample q with probability
/// proportional to exp(-eps n q(S) / 2). Benchmark baseline only.
pub fn exponential_mechanism_baseline(
    s: &Dataset,
    class: &QueryClass,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Query> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(Error::Input("epsilon must be nonnegative".into()));
    }
    let queries = class.enumerate_queries()?;
    let n = s.n() as f64;
    let mut scores = Vec::with_capacity(queries.len());
    for q in &queries {
        scores.push(-epsilon * n * crate::query::eval_on_dataset(q, s)? / 2.0);
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = scores.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut t = rng.gen_range(0.0..1.0) * total;
    for (q, w) in queries.iter().zip(&weights) {
        t -= w;
        if t <= 0.0 {
            return Ok(q.clone());
        }
    }
    Ok(queries.last().unwrap().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::class::Family;
    use crate::data::DataPoint;
    use crate::oracle::ExactOracle;
    use crate::query::eval_on_dataset;
    use crate::rng;

    #[test]
    fn laplace_moments_and_tail() {
        let mut rng = rng::stream(42, &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| laplace_sample(1.0, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        // Pr[|Lap(b)| > b log(1/beta)] = beta exactly; allow 3 binomial sds.
        let beta = 0.1f64;
        let thr = (1.0f64 / beta).ln();
        let exceed = draws.iter().filter(|x| x.abs() > thr).count() as f64 / n as f64;
        let slack = 3.0 * (beta * (1.0 - beta) / n as f64).sqrt();
        assert!(exceed <= beta + slack, "tail rate {exceed}");
    }

    #[test]
    fn gaussian_variance() {
        let mut rng = rng::stream(43, &[]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| gaussian_sample(2.0, &mut rng).unwrap()).collect();
        let var = draws.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 4.0).abs() < 0.1, "var {var}");
    }

    #[test]
    fn samplers_reject_bad_scales() {
        let mut rng = rng::stream(0, &[]);
        assert!(laplace_sample(0.0, &mut rng).is_err());
        assert!(gaussian_sample(-1.0, &mut rng).is_err());
    }

    #[test]
    fn zero_noise_reduces_to_exact_erm() {
        let class = QueryClass::new(Family::Conjunction, 3).unwrap();
        let u = class.separator_set().unwrap();
        let mut oracle = ExactOracle::new(&class).unwrap();
        let s = Dataset::sample_binary(3, 40, 0.5, &mut rng::stream(1, &[])).unwrap();
        let out = rspm_with_noise(
            WeightedDataset::from_dataset(&s, 1.0),
            &u,
            &[0.0, 0.0, 0.0],
            &mut oracle,
            false,
        )
        .unwrap();
        let erm = crate::oracle::exact_oracle(&class, &WeightedDataset::from_dataset(&s, 1.0)).unwrap();
        assert_eq!(out.output().unwrap().query, *erm.query().unwrap());
    }

    #[test]
    fn rspm_makes_one_oracle_call_and_m_noise_draws() {
        let class = QueryClass::new(Family::Conjunction, 3).unwrap();
        let u = class.separator_set().unwrap();
        let mut oracle = ExactOracle::new(&class).unwrap();
        let s = Dataset::sample_binary(3, 20, 0.5, &mut rng::stream(2, &[])).unwrap();
        let mut r = rng::stream(3, &[]);
        let out = rspm(&s, &u, 1.0, &mut oracle, &mut r, true).unwrap();
        let out = out.output().unwrap();
        assert_eq!(oracle.calls(), 1);
        assert_eq!(out.oracle_calls, 1);
        assert_eq!(out.noise_trace.as_ref().unwrap().len(), u.size());
    }

    #[test]
    fn perm_identity_on_enumerable_class() {
        // rspm output = argmin_q n q(S) + Z_q with Z recomputed from the trace.
        let class = QueryClass::new(Family::Conjunction, 3).unwrap();
        let u = class.separator_set().unwrap();
        let queries = class.enumerate_queries().unwrap();
        let s = Dataset::sample_binary(3, 30, 0.6, &mut rng::stream(4, &[])).unwrap();
        for seed in 0..50 {
            let mut oracle = ExactOracle::new(&class).unwrap();
            let mut r = rng::stream(seed, &[]);
            let out = rspm(&s, &u, 0.5, &mut oracle, &mut r, true).unwrap();
            let out = out.output().unwrap();
            let z = implicit_perturbations(&queries, &u, out.noise_trace.as_ref().unwrap());
            let mut best = 0usize;
            for i in 1..queries.len() {
                let vi = s.n() as f64 * eval_on_dataset(&queries[i], &s).unwrap() + z[i];
                let vb = s.n() as f64 * eval_on_dataset(&queries[best], &s).unwrap() + z[best];
                if vi < vb {
                    best = i;
                }
            }
            assert_eq!(out.query, queries[best], "seed {seed}");
        }
    }

    #[test]
    fn singleton_class_always_returned() {
        let class = QueryClass::halfspace(1, &[1.0]).unwrap();
        let u = class.separator_set().unwrap();
        assert_eq!(u.size(), 0);
        let mut oracle = ExactOracle::new(&class).unwrap();
        let s = Dataset::new(vec![DataPoint::new(vec![1.0])]).unwrap();
        let out = rspm(&s, &u, 0.01, &mut oracle, &mut rng::stream(5, &[]), false).unwrap();
        assert_eq!(out.output().unwrap().query, Query::halfspace(&[1.0]).unwrap());
    }

    #[test]
    fn gaussian_sigma_formula() {
        // m = 1: sigma = 3.5 sqrt(ln(1/delta)) / eps exactly.
        let sigma = gaussian_rspm_sigma(1, 2.0, 0.05).unwrap();
        assert!((sigma - 3.5 * (1.0f64 / 0.05).ln().sqrt() / 2.0).abs() < 1e-12);
        assert!(gaussian_rspm_sigma(3, 1.0, 0.5).is_err()); // delta >= 1/e
    }

    #[test]
    fn noisy_max_examples() {
        let mut rng = rng::stream(6, &[]);
        assert_eq!(report_noisy_max(&[("only", 1.0)], 1.0, &mut rng).unwrap(), "only");
        let mut wins_a = 0;
        for _ in 0..1000 {
            if report_noisy_max(&[("a", 1.0), ("b", 0.0)], 0.001, &mut rng).unwrap() == "a" {
                wins_a += 1;
            }
        }
        assert!(wins_a >= 999, "wins {wins_a}");
        let mut first = 0;
        for _ in 0..10_000 {
            if report_noisy_max(&[("x", 0.5), ("y", 0.5)], 1.0, &mut rng).unwrap() == "x" {
                first += 1;
            }
        }
        let freq = first as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "freq {freq}");
        assert!(report_noisy_max::<&str, _>(&[], 1.0, &mut rng).is_err());
    }

    #[test]
    fn composition_arithmetic() {
        let c = compose_basic(&[
            PrivacyParams::pure(1.0).unwrap(),
            PrivacyParams::new(2.0, 0.1).unwrap(),
        ]);
        assert_eq!((c.epsilon, c.delta), (3.0, 0.1));

        // ln(2/delta) = 1 at delta = 2/e, T = 24 -> eps0 = 1/24.
        let (e0, _) = advanced_budget(1.0, 2.0 / std::f64::consts::E, 24).unwrap();
        assert!((e0 - 1.0 / 24.0).abs() < 1e-12);

        let (e0, d0) = advanced_budget(1.0, 0.01, 100).unwrap();
        assert!((e0 - 1.0 / (2400.0 * 200.0f64.ln()).sqrt()).abs() < 1e-12);
        assert!((d0 - 2.5e-5).abs() < 1e-18);
    }

    #[test]
    fn exponential_mechanism_no_worse_than_rspm_in_median() {
        // Paired trials at d=3, n=500, eps=1; the inefficient baseline's
        // median excess error cannot exceed RSPM's.
        let class = QueryClass::new(Family::Conjunction, 3).unwrap();
        let u = class.separator_set().unwrap();
        let s = Dataset::sample_binary(3, 500, 0.75, &mut rng::stream(20, &[])).unwrap();
        let queries = class.enumerate_queries().unwrap();
        let means: Vec<f64> = queries.iter().map(|q| eval_on_dataset(q, &s).unwrap()).collect();
        let best = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let excess = |q: &Query| means[queries.iter().position(|x| x == q).unwrap()] - best;
        let mut ex_rspm = Vec::new();
        let mut ex_expm = Vec::new();
        for seed in 0..200 {
            let mut r = rng::stream(21, &[seed]);
            let mut oracle = ExactOracle::new(&class).unwrap();
            let out = rspm(&s, &u, 1.0, &mut oracle, &mut r, false).unwrap();
            ex_rspm.push(excess(&out.output().unwrap().query));
            let q = exponential_mechanism_baseline(&s, &class, 1.0, &mut r).unwrap();
            ex_expm.push(excess(&q));
        }
        ex_rspm.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ex_expm.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(
            ex_expm[100] <= ex_rspm[100] + 1e-12,
            "exp mech median {} vs rspm {}",
            ex_expm[100],
            ex_rspm[100]
        );
    }

    #[test]
    fn exponential_mechanism_limits() {
        let class = QueryClass::new(Family::Conjunction, 2).unwrap();
        let s = Dataset::sample_binary(2, 100, 0.8, &mut rng::stream(7, &[])).unwrap();
        let erm = crate::oracle::exact_oracle(&class, &WeightedDataset::from_dataset(&s, 1.0)).unwrap();
        let mut rng = rng::stream(8, &[]);
        let mut exact_hits = 0;
        for _ in 0..1000 {
            if exponential_mechanism_baseline(&s, &class, 1e6, &mut rng).unwrap()
                == *erm.query().unwrap()
            {
                exact_hits += 1;
            }
        }
        assert!(exact_hits >= 999, "hits {exact_hits}");

        let mut counts = std::collections::HashMap::new();
        for _ in 0..10_000 {
            let q = exponential_mechanism_baseline(&s, &class, 0.0, &mut rng).unwrap();
            *counts.entry(q.to_string()).or_insert(0usize) += 1;
        }
        for (_, c) in counts {
            let f = c as f64 / 10_000.0;
            assert!((f - 0.25).abs() < 0.02, "freq {f}");
        }
    }
}
