//! The Private Robust Subsampling Meta Algorithm: wraps a non-robustly
//! private oracle-efficient algorithm backed by a certifiable heuristic
//! oracle into a robustly private one by partitioning, repeated runs to
//! detect oracle failures, a noisy-count threshold test, and a uniform
//! sample from the surviving outputs.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::class::{QueryClass, SeparatorSet};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::mech::{lap, rspm, MechOutcome};
use crate::oracle::{CertifiableOracle, FailurePolicy};
use crate::query::Query;
use crate::rng;

pub const DEFAULT_REPS_CAP: u64 = 100_000;

/// Run parameters. The public constructor takes the final privacy target
/// and applies the 62/11 reduction internally; [`PrsmaConfig::from_raw`]
/// exposes the internal parameterization for experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct PrsmaConfig {
    pub epsilon_target: f64,
    pub delta_target: f64,
    pub eps_run: f64,
    pub delta_run: f64,
    pub reps_cap: u64,
}

impl PrsmaConfig {
    /// Target (epsilon, delta); internally runs at (epsilon/62, delta/11).
    pub fn new(epsilon_target: f64, delta_target: f64) -> Result<Self> {
        Self::build(epsilon_target, delta_target, epsilon_target / 62.0, delta_target / 11.0)
    }

    /// Run directly at internal parameters (eps_run, delta_run).
    pub fn from_raw(eps_run: f64, delta_run: f64) -> Result<Self> {
        Self::build(62.0 * eps_run, 11.0 * delta_run, eps_run, delta_run)
    }

    fn build(epsilon_target: f64, delta_target: f64, eps_run: f64, delta_run: f64) -> Result<Self> {
        if !(eps_run > 0.0 && eps_run <= 0.5) {
            return Err(Error::Input(format!(
                "internal epsilon {eps_run} must lie in (0, 1/2]; lower the target epsilon"
            )));
        }
        if !(delta_run > 0.0 && delta_run <= 0.5) {
            return Err(Error::Input(format!(
                "internal delta {delta_run} must lie in (0, 1/2]"
            )));
        }
        Ok(PrsmaConfig {
            epsilon_target,
            delta_target,
            eps_run,
            delta_run,
            reps_cap: DEFAULT_REPS_CAP,
        })
    }

    pub fn with_reps_cap(mut self, cap: u64) -> Self {
        self.reps_cap = cap;
        self
    }

    /// K = ceil((1/eps)(1 + ln(2/delta))).
    pub fn partitions(&self) -> u64 {
        ((1.0 / self.eps_run) * (1.0 + (2.0 / self.delta_run).ln())).ceil() as u64
    }

    /// Inner repetitions per part, ceil(ln(K/delta)/delta). Errors out when
    /// the configured cap binds: silently running fewer repetitions would
    /// void the failure-detection analysis.
    pub fn reps(&self) -> Result<u64> {
        let k = self.partitions() as f64;
        let reps = ((k / self.delta_run).ln() / self.delta_run).ceil() as u64;
        if reps > self.reps_cap {
            return Err(Error::Capacity(format!(
                "prsma needs {reps} inner repetitions per part, above the cap {}",
                self.reps_cap
            )));
        }
        Ok(reps.max(1))
    }

    /// Privacy parameter for the inner runs, 1/sqrt(8 L ln(2K/delta)) with
    /// L the realized part size.
    pub fn subsample_epsilon(&self, part_size: usize) -> f64 {
        let k = self.partitions() as f64;
        1.0 / (8.0 * part_size as f64 * (2.0 * k / self.delta_run).ln()).sqrt()
    }

    /// The pass test: output only when T + Lap(1/eps) exceeds this.
    pub fn threshold(&self) -> f64 {
        (1.0 / self.eps_run) * (1.0 + (1.0 / self.delta_run).ln())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrsmaOutcome {
    /// None is Fail.
    pub result: Option<Query>,
    /// T, the number of parts whose runs never failed.
    pub pass_count: u64,
    /// T + Lap(1/eps_run).
    pub noisy_count: f64,
    /// Indices of the surviving parts.
    pub surviving: Vec<usize>,
    /// Always exactly K * reps.
    pub inner_invocations: u64,
    /// Records discarded to make n divisible by K.
    pub discarded: usize,
    /// The (part, repetition) whose stored answer was released.
    pub chosen: Option<(usize, u64)>,
}

/// Run PRSMA around `inner`, an oracle-efficient algorithm taking a dataset
/// and a privacy parameter. `inner` reports oracle failures by returning
/// [`MechOutcome::Fail`]; its randomness must come from the provided stream.
pub fn prsma<F>(mut inner: F, s: &Dataset, cfg: &PrsmaConfig, seed: u64) -> Result<PrsmaOutcome>
where
    F: FnMut(&Dataset, f64, &mut ChaCha8Rng) -> Result<MechOutcome>,
{
    let k = cfg.partitions() as usize;
    let reps = cfg.reps()?;
    if s.n() < k {
        return Err(Error::Input(format!(
            "dataset has n = {} records but prsma needs at least K = {k} (one per partition cell)",
            s.n()
        )));
    }
    let part_size = s.n() / k;
    let discarded = s.n() - part_size * k;
    let eps_prime = cfg.subsample_epsilon(part_size);

    // Uniform equal-sized partition: shuffle, drop the tail, chunk.
    let mut order: Vec<usize> = (0..s.n()).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::TAG_PARTITION]));
    let parts: Vec<Dataset> = (0..k)
        .map(|i| {
            let idx = &order[i * part_size..(i + 1) * part_size];
            Dataset::new(idx.iter().map(|&j| s.points()[j].clone()).collect())
        })
        .collect::<Result<_>>()?;

    let mut surviving = Vec::new();
    let mut answers: Vec<Vec<Option<Query>>> = Vec::with_capacity(k);
    let mut inner_invocations = 0u64;
    for (i, part) in parts.iter().enumerate() {
        let mut ok = true;
        let mut part_answers = Vec::with_capacity(reps as usize);
        for t in 0..reps {
            let mut stream = rng::stream(seed, &[rng::TAG_INNER, i as u64, t]);
            inner_invocations += 1;
            match inner(part, eps_prime, &mut stream)? {
                MechOutcome::Output(out) => part_answers.push(Some(out.query)),
                MechOutcome::Fail { .. } => {
                    ok = false;
                    part_answers.push(None);
                }
            }
        }
        if ok {
            surviving.push(i);
        }
        answers.push(part_answers);
    }

    let pass_count = surviving.len() as u64;
    let z = lap(1.0 / cfg.eps_run, &mut rng::stream(seed, &[rng::TAG_THRESHOLD]));
    let noisy_count = pass_count as f64 + z;

    let (result, chosen) = if noisy_count > cfg.threshold() && !surviving.is_empty() {
        let (i, t) = choose_release(&surviving, reps, seed);
        (answers[i][t as usize].clone(), Some((i, t)))
    } else {
        (None, None)
    };

    Ok(PrsmaOutcome {
        result,
        pass_count,
        noisy_count,
        surviving,
        inner_invocations,
        discarded,
        chosen,
    })
}

fn choose_release(surviving: &[usize], reps: u64, seed: u64) -> (usize, u64) {
    let mut rng = rng::stream(seed, &[rng::TAG_CHOICE]);
    let idx = rng.gen_range(0..surviving.len() as u64 * reps);
    (surviving[(idx / reps) as usize], idx % reps)
}

/// The direct subsample-and-run baseline for the same seed: partition as
/// prsma would, pick the same (part, repetition) assuming every part
/// survives, and run `inner` once on it. With a never-failing oracle, the
/// prsma release equals this output seed-for-seed.
pub fn subsample_baseline<F>(mut inner: F, s: &Dataset, cfg: &PrsmaConfig, seed: u64) -> Result<Option<Query>>
where
    F: FnMut(&Dataset, f64, &mut ChaCha8Rng) -> Result<MechOutcome>,
{
    let k = cfg.partitions() as usize;
    let reps = cfg.reps()?;
    if s.n() < k {
        return Err(Error::Input("dataset smaller than partition count".into()));
    }
    let part_size = s.n() / k;
    let mut order: Vec<usize> = (0..s.n()).collect();
    order.shuffle(&mut rng::stream(seed, &[rng::TAG_PARTITION]));
    let all: Vec<usize> = (0..k).collect();
    let (i, t) = choose_release(&all, reps, seed);
    let idx = &order[i * part_size..(i + 1) * part_size];
    let part = Dataset::new(idx.iter().map(|&j| s.points()[j].clone()).collect())?;
    let eps_prime = cfg.subsample_epsilon(part_size);
    let mut stream = rng::stream(seed, &[rng::TAG_INNER, i as u64, t]);
    Ok(match inner(&part, eps_prime, &mut stream)? {
        MechOutcome::Output(out) => Some(out.query),
        MechOutcome::Fail { .. } => None,
    })
}

/// PRSMA instantiated with Laplace RSPM over `class` and a certifiable
/// oracle driven by `policy`.
pub fn prsma_rspm_preset(
    s: &Dataset,
    class: &QueryClass,
    u: &SeparatorSet,
    cfg: &PrsmaConfig,
    policy: &FailurePolicy,
    seed: u64,
) -> Result<PrsmaOutcome> {
    prsma(rspm_inner(class, u, policy), s, cfg, seed)
}

/// The inner algorithm used by [`prsma_rspm_preset`], exposed so tests can
/// replay it through [`subsample_baseline`].
pub fn rspm_inner<'a>(
    class: &'a QueryClass,
    u: &'a SeparatorSet,
    policy: &'a FailurePolicy,
) -> impl FnMut(&Dataset, f64, &mut ChaCha8Rng) -> Result<MechOutcome> + 'a {
    move |part, eps, stream| {
        let oracle_seed = stream.gen::<u64>();
        let mut oracle = CertifiableOracle::new(class, policy.clone(), oracle_seed)?;
        rspm(part, u, eps, &mut oracle, stream, false)
    }
}

/// The accuracy bound of PRSMA-over-RSPM with all hidden constants set to 1,
/// evaluated at the internal run parameters (which must satisfy beta >
/// delta):
/// (m^2 ln(m/(beta-delta)) ln(1/delta) + sqrt(ln(1/delta) ln(|Q|/(beta-delta))))
///   / sqrt(n eps).
pub fn prsma_rspm_error_bound(
    m: usize,
    ln_q: f64,
    n: usize,
    eps_run: f64,
    delta_run: f64,
    beta: f64,
) -> Result<f64> {
    if !(beta > delta_run) {
        return Err(Error::Input("bound needs beta > delta".into()));
    }
    let m = m as f64;
    let ln_d = (1.0 / delta_run).ln();
    let ln_b = (m / (beta - delta_run)).ln();
    let first = m * m * ln_b * ln_d;
    let second = (ln_d * (ln_q + (1.0 / (beta - delta_run)).ln())).sqrt();
    Ok((first + second) / (n as f64 * eps_run).sqrt())
}
