//! Synthetic data generation as a zero-sum query release game: a
//! follow-the-perturbed-leader data player over the dual class against a
//! privately-best-responding query player, with equilibrium extraction by
//! sampling the data player's average play.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::class::{QueryClass, SeparatorSet};
use crate::data::{DataPoint, Dataset, WeightedDataset};
use crate::error::{Error, Result};
use crate::mech::{
    advanced_budget, lap, report_noisy_max, rspm_weighted, MechOutcome, Perturbation,
};
use crate::oracle::{
    CertifiableOracle, DualOracle, ExactOracle, FailurePolicy, OracleOutcome, WeightedMinimizer,
};
use crate::prsma::PrsmaConfig;
use crate::query::{eval_on_dataset, eval_on_points, Query};
use crate::rng;

/// The query release game payoff A(x, q) = q(S) - q(x).
pub fn payoff(s: &Dataset, x: &DataPoint, q: &Query) -> Result<f64> {
    Ok(eval_on_dataset(q, s)? - q.eval(x)? as f64)
}

/// Mixed-strategy payoff A(S-hat, q) = q(S) - q(S-hat) for an empirical
/// distribution given by a sample.
pub fn payoff_mixed(s: &Dataset, sample: &[DataPoint], q: &Query) -> Result<f64> {
    Ok(eval_on_dataset(q, s)? - eval_on_points(q, sample)?)
}

/// max over Q and its negations of |q(S) - q(S-hat)|.
pub fn max_query_error(s: &Dataset, s_hat: &[DataPoint], class: &QueryClass) -> Result<f64> {
    let mut worst = 0.0f64;
    for q in class.enumerate_with_negations()? {
        let gap = (eval_on_dataset(&q, s)? - eval_on_points(&q, s_hat)?).abs();
        worst = worst.max(gap);
    }
    Ok(worst)
}

/// CONTEXT-FTPL state for the data player. The history holds the negated
/// queries played so far; each draw perturbs the dual separator with fresh
/// Laplace weights and makes a single dual-oracle call.
pub struct DataPlayer<'a> {
    separator: Vec<Query>,
    history: Vec<Query>,
    noise_scale: f64,
    oracle: &'a mut dyn DualOracle,
}

impl<'a> DataPlayer<'a> {
    pub fn new(separator: Vec<Query>, noise_scale: f64, oracle: &'a mut dyn DualOracle) -> Result<Self> {
        if !(noise_scale > 0.0 && noise_scale.is_finite()) {
            return Err(Error::Input(format!("noise scale must be positive, got {noise_scale}")));
        }
        Ok(DataPlayer { separator, history: Vec::new(), noise_scale, oracle })
    }

    /// Record the query player's move; the stored loss is its negation.
    pub fn observe(&mut self, q: &Query) {
        self.history.push(q.negate());
    }

    pub fn rounds(&self) -> usize {
        self.history.len()
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle.calls()
    }

    /// One sample from the current round's distribution.
    pub fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<Option<DataPoint>> {
        self.draw_at(self.history.len(), rng)
    }

    /// One sample from the distribution the player held after `upto`
    /// observed queries.
    pub fn draw_at(&mut self, upto: usize, rng: &mut ChaCha8Rng) -> Result<Option<DataPoint>> {
        let noise: Vec<f64> =
            (0..self.separator.len()).map(|_| lap(self.noise_scale, rng)).collect();
        self.draw_with_noise(upto, &noise)
    }

    /// Deterministic draw under a fixed perturbation vector.
    pub fn draw_with_noise(&mut self, upto: usize, noise: &[f64]) -> Result<Option<DataPoint>> {
        if upto > self.history.len() {
            return Err(Error::Input("prefix beyond current round".into()));
        }
        if noise.len() != self.separator.len() {
            return Err(Error::Input("noise length must match the dual separator size".into()));
        }
        let pert: Vec<(&Query, f64)> =
            self.separator.iter().zip(noise.iter().copied()).collect();
        self.oracle.best_point(&self.history[..upto], &pert)
    }
}

/// One FTPL sample (a single oracle call); repeated calls give i.i.d.
/// draws from the same implicit distribution.
pub fn ftpl_draw(state: &mut DataPlayer, rng: &mut ChaCha8Rng) -> Result<Option<DataPoint>> {
    state.draw(rng)
}

/// A weighted differentially private minimization routine, the query
/// player's engine.
pub trait PrivateMinimizer {
    fn minimize(&mut self, wd: WeightedDataset, rng: &mut ChaCha8Rng) -> Result<MechOutcome>;
    fn calls(&self) -> u64;
}

/// Exact, non-private minimization. Baseline and test stub.
pub struct ExactMinimizer {
    oracle: ExactOracle,
}

impl ExactMinimizer {
    pub fn new(class: &QueryClass) -> Result<Self> {
        Ok(ExactMinimizer { oracle: ExactOracle::new(class)? })
    }
}

impl PrivateMinimizer for ExactMinimizer {
    fn minimize(&mut self, wd: WeightedDataset, _rng: &mut ChaCha8Rng) -> Result<MechOutcome> {
        let ans = self.oracle.minimize(&wd)?;
        Ok(match ans.outcome {
            OracleOutcome::Success { query, .. } => MechOutcome::Output(crate::mech::MechanismOutput {
                query,
                noise_trace: None,
                oracle_calls: 1,
            }),
            OracleOutcome::Fail => MechOutcome::Fail { oracle_calls: 1 },
        })
    }

    fn calls(&self) -> u64 {
        self.oracle.calls()
    }
}

/// RSPM (Laplace or Gaussian) as a weighted private minimizer. Incoming
/// weights are rescaled by `unit_scale` so each private record carries
/// weight +-1 while the separator noise stays at its usual scale.
pub struct RspmMinimizer {
    sep: SeparatorSet,
    perturbation: Perturbation,
    oracle: Box<dyn WeightedMinimizer>,
    unit_scale: f64,
}

impl RspmMinimizer {
    pub fn exact(class: &QueryClass, perturbation: Perturbation, unit_scale: f64) -> Result<Self> {
        Ok(RspmMinimizer {
            sep: class.separator_set()?,
            perturbation,
            oracle: Box::new(ExactOracle::new(class)?),
            unit_scale,
        })
    }

    pub fn with_oracle(
        class: &QueryClass,
        perturbation: Perturbation,
        unit_scale: f64,
        oracle: Box<dyn WeightedMinimizer>,
    ) -> Result<Self> {
        Ok(RspmMinimizer { sep: class.separator_set()?, perturbation, oracle, unit_scale })
    }
}

impl PrivateMinimizer for RspmMinimizer {
    fn minimize(&mut self, wd: WeightedDataset, rng: &mut ChaCha8Rng) -> Result<MechOutcome> {
        rspm_weighted(wd, self.unit_scale, &self.sep, self.perturbation, self.oracle.as_mut(), rng, false)
    }

    fn calls(&self) -> u64 {
        self.oracle.calls()
    }
}

/// The weighted exponential mechanism: a differentially private learning
/// oracle matching the generic learner's error profile. Enumerates the
/// class, so it does not scale beyond small universes.
pub struct ExpMechMinimizer {
    oracle: ExactOracle,
    epsilon: f64,
    unit_scale: f64,
    calls: u64,
}

impl ExpMechMinimizer {
    pub fn new(class: &QueryClass, epsilon: f64, unit_scale: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Input("epsilon must be positive".into()));
        }
        Ok(ExpMechMinimizer { oracle: ExactOracle::new(class)?, epsilon, unit_scale, calls: 0 })
    }
}

impl PrivateMinimizer for ExpMechMinimizer {
    fn minimize(&mut self, wd: WeightedDataset, rng: &mut ChaCha8Rng) -> Result<MechOutcome> {
        self.calls += 1;
        let obj = self.oracle.objectives(&wd)?;
        let scores: Vec<f64> = obj.iter().map(|o| -self.epsilon * self.unit_scale * o / 2.0).collect();
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let weights: Vec<f64> = scores.iter().map(|&v| (v - max).exp()).collect();
        let total: f64 = weights.iter().sum();
        let mut t = rng.gen_range(0.0..1.0) * total;
        let mut pick = self.oracle.queries().len() - 1;
        for (i, w) in weights.iter().enumerate() {
            t -= w;
            if t <= 0.0 {
                pick = i;
                break;
            }
        }
        Ok(MechOutcome::Output(crate::mech::MechanismOutput {
            query: self.oracle.queries()[pick].clone(),
            noise_trace: None,
            oracle_calls: 1,
        }))
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// PRSMA wrapped around Laplace RSPM as a weighted private minimizer, for
/// robust privacy against a misbehaving certifiable oracle. Expects the PBR
/// weight convention: the first `n_private` entries are the private records
/// at weight +-1/n_private, the rest a proxy sample at -+1/N. Each inner run
/// sees one partition cell at unit weight with the proxy rescaled to match
/// the cell size.
pub struct PrsmaWeightedMinimizer {
    class: QueryClass,
    sep: SeparatorSet,
    cfg: PrsmaConfig,
    policy: FailurePolicy,
    n_private: usize,
    calls: u64,
}

impl PrsmaWeightedMinimizer {
    pub fn new(
        class: &QueryClass,
        cfg: PrsmaConfig,
        policy: FailurePolicy,
        n_private: usize,
    ) -> Result<Self> {
        Ok(PrsmaWeightedMinimizer {
            class: class.clone(),
            sep: class.separator_set()?,
            cfg,
            policy,
            n_private,
            calls: 0,
        })
    }
}

impl PrivateMinimizer for PrsmaWeightedMinimizer {
    fn minimize(&mut self, wd: WeightedDataset, rng: &mut ChaCha8Rng) -> Result<MechOutcome> {
        self.calls += 1;
        let seed = rng.gen::<u64>();
        let k = self.cfg.partitions() as usize;
        let reps = self.cfg.reps()?;
        if self.n_private > wd.len() {
            return Err(Error::Input("fewer entries than declared private records".into()));
        }
        if self.n_private < k {
            return Err(Error::Input(format!(
                "weighted prsma needs at least K = {k} private records, got {}",
                self.n_private
            )));
        }
        let (private, proxy) = wd.entries().split_at(self.n_private);
        let part_size = self.n_private / k;
        let eps_prime = self.cfg.subsample_epsilon(part_size);

        let mut order: Vec<usize> = (0..self.n_private).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng::stream(seed, &[rng::TAG_PARTITION]));

        let mut surviving = Vec::new();
        let mut answers: Vec<Vec<Option<Query>>> = Vec::with_capacity(k);
        for i in 0..k {
            let mut cell = WeightedDataset::default();
            for &j in &order[i * part_size..(i + 1) * part_size] {
                let (p, w) = &private[j];
                cell.push(p.clone(), w * self.n_private as f64);
            }
            for (p, w) in proxy {
                cell.push(p.clone(), w * part_size as f64);
            }
            let mut ok = true;
            let mut cell_answers = Vec::with_capacity(reps as usize);
            for t in 0..reps {
                let mut stream = rng::stream(seed, &[rng::TAG_INNER, i as u64, t]);
                let oracle_seed = stream.gen::<u64>();
                let mut oracle = CertifiableOracle::new(&self.class, self.policy.clone(), oracle_seed)?;
                let out = rspm_weighted(
                    cell.clone(),
                    1.0,
                    &self.sep,
                    Perturbation::Laplace { epsilon: eps_prime },
                    &mut oracle,
                    &mut stream,
                    false,
                )?;
                match out {
                    MechOutcome::Output(o) => cell_answers.push(Some(o.query)),
                    MechOutcome::Fail { .. } => {
                        ok = false;
                        cell_answers.push(None);
                    }
                }
            }
            if ok {
                surviving.push(i);
            }
            answers.push(cell_answers);
        }

        let pass = surviving.len() as f64;
        let z = lap(1.0 / self.cfg.eps_run, &mut rng::stream(seed, &[rng::TAG_THRESHOLD]));
        if pass + z <= self.cfg.threshold() || surviving.is_empty() {
            return Ok(MechOutcome::Fail { oracle_calls: k as u64 * reps });
        }
        let mut choice = rng::stream(seed, &[rng::TAG_CHOICE]);
        let idx = choice.gen_range(0..surviving.len() as u64 * reps);
        let query = answers[surviving[(idx / reps) as usize]][(idx % reps) as usize]
            .clone()
            .unwrap();
        Ok(MechOutcome::Output(crate::mech::MechanismOutput {
            query,
            noise_trace: None,
            oracle_calls: k as u64 * reps,
        }))
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// Per-round accuracy/privacy knobs for the private best response.
#[derive(Debug, Clone, Copy)]
pub struct PbrParams {
    pub eps0: f64,
    pub delta0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl PbrParams {
    /// N = ceil(2 ln(2|Q|/beta0) / alpha0^2) proxy samples per round.
    pub fn sample_count(&self, ln_q: f64) -> usize {
        let ln_term = std::f64::consts::LN_2 + ln_q + (1.0 / self.beta0).ln();
        ((2.0 * ln_term) / (self.alpha0 * self.alpha0)).ceil() as usize
    }
}

/// The query player's approximate best response to the data player's
/// current distribution: draw a proxy sample, privately minimize the two
/// signed objectives (the Q side and, negated, the not-Q side), and pick
/// between the two by report-noisy-max at scale 1/(eps0 n).
pub fn private_best_response(
    s: &Dataset,
    class: &QueryClass,
    draw: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<Option<DataPoint>>,
    params: &PbrParams,
    minimizer: &mut dyn PrivateMinimizer,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Query>> {
    let n = s.n() as f64;
    let count = params.sample_count(class.ln_query_count()?);
    let mut proxy = Vec::with_capacity(count);
    for _ in 0..count {
        match draw(rng)? {
            Some(x) => proxy.push(x),
            None => return Ok(None),
        }
    }

    // argmax_{q in Q} (q(S) - q(proxy)) = argmin of the signed objective
    // with S at -1/n and the proxy at +1/N; the not-Q side flips the signs
    // and negates the returned query.
    let mut wd1 = WeightedDataset::from_dataset(s, -1.0 / n);
    for x in &proxy {
        wd1.push(x.clone(), 1.0 / count as f64);
    }
    let mut wd2 = WeightedDataset::from_dataset(s, 1.0 / n);
    for x in &proxy {
        wd2.push(x.clone(), -1.0 / count as f64);
    }

    let q1 = match minimizer.minimize(wd1, rng)? {
        MechOutcome::Output(o) => o.query,
        MechOutcome::Fail { .. } => return Ok(None),
    };
    let q2 = match minimizer.minimize(wd2, rng)? {
        MechOutcome::Output(o) => o.query.negate(),
        MechOutcome::Fail { .. } => return Ok(None),
    };

    let a1 = payoff_mixed(s, &proxy, &q1)?;
    let a2 = payoff_mixed(s, &proxy, &q2)?;
    let scale = 1.0 / (params.eps0 * n);
    Ok(Some(report_noisy_max(&[(q1, a1), (q2, a2)], scale, rng)?))
}

/// Which private minimizer backs the query player.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SynthPreset {
    /// A private learning oracle with exponential-mechanism error rates.
    PrivateOracle,
    /// Gaussian RSPM (oracle-equivalent privacy).
    GaussianRspm,
    /// PRSMA over Laplace RSPM (robust privacy).
    Prsma,
}

impl std::str::FromStr for SynthPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "private-oracle" => Ok(SynthPreset::PrivateOracle),
            "gaussian-rspm" | "gauss-rspm" => Ok(SynthPreset::GaussianRspm),
            "prsma" => Ok(SynthPreset::Prsma),
            other => Err(Error::Input(format!("unknown synth preset {other:?}"))),
        }
    }
}

/// The problem sizes the round-count formulas take. `ln_x` and `ln_q` are
/// ln|X| and ln|Q|, passed explicitly so tests can pin them.
#[derive(Debug, Clone, Copy)]
pub struct ProblemSizes {
    pub m1: usize,
    pub m2: usize,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub ln_x: f64,
    pub ln_q: f64,
}

impl ProblemSizes {
    pub fn for_class(class: &QueryClass, n: usize, epsilon: f64, delta: f64, beta: f64) -> Result<Self> {
        Ok(ProblemSizes {
            m1: class.separator_set()?.size(),
            m2: class.dual_view()?.separator_size(),
            n,
            epsilon,
            delta,
            beta,
            ln_x: class.ln_universe_size(),
            ln_q: class.ln_query_count()?,
        })
    }
}

/// The round count T prescribed for each instantiation, ceiled.
pub fn preset_t(preset: SynthPreset, sizes: &ProblemSizes) -> Result<u64> {
    let m1 = sizes.m1 as f64;
    let m2 = sizes.m2 as f64;
    let n_eps = sizes.n as f64 * sizes.epsilon;
    let t = match preset {
        SynthPreset::PrivateOracle => {
            n_eps * m2.powf(0.75) * sizes.ln_x.sqrt()
                / ((sizes.ln_q + (1.0 / sizes.beta).ln()) * (1.0 / sizes.delta).ln().sqrt())
        }
        SynthPreset::GaussianRspm => {
            m2.powf(0.75) * sizes.ln_x.sqrt() * n_eps
                / (m1.powf(1.5) * (m1 / sizes.beta).ln().sqrt() * (1.0 / sizes.delta).ln())
        }
        SynthPreset::Prsma => {
            (m2.powf(0.75) * (sizes.ln_x * n_eps).sqrt() / (m1 * m1 + sizes.ln_q.sqrt()))
                .powf(4.0 / 3.0)
        }
    };
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Input(format!("round-count formula produced {t}")));
    }
    Ok((t.ceil() as u64).max(1))
}

/// Default per-round accuracy target: the data player's regret rate
/// m2^(3/4) sqrt(ln|X| / T), clamped into (0, 1].
pub fn default_alpha0(m2: usize, ln_x: f64, t: u64) -> f64 {
    ((m2 as f64).powf(0.75) * (ln_x / t as f64).sqrt()).clamp(0.02, 1.0)
}

/// Default FTPL noise scale: grows as sqrt(T) so per-round stability
/// balances the perturbation magnitude.
pub fn default_noise_scale(m2: usize, ln_x: f64, t: u64) -> f64 {
    (m2 as f64).powf(0.25) * (t as f64 / ln_x.max(std::f64::consts::LN_2)).sqrt()
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub rounds: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub beta: f64,
    pub alpha0: f64,
    /// FTPL Laplace scale; None picks [`default_noise_scale`].
    pub noise_scale: Option<f64>,
}

impl SynthParams {
    /// The advanced-composition wiring: eps0 = eps/sqrt(24 T ln(2/delta)),
    /// delta0 = delta/(4T), beta0 = beta/(4T).
    pub fn budget(&self) -> Result<(f64, f64, f64)> {
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Input("beta must lie in (0,1)".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::Input("alpha0 must lie in (0,1]".into()));
        }
        let (eps0, delta0) = advanced_budget(self.epsilon, self.delta, self.rounds)?;
        Ok((eps0, delta0, self.beta / (4.0 * self.rounds as f64)))
    }

    /// Size of the released dataset, ceil(2 ln(8|Q|/beta) / alpha0^2).
    pub fn final_sample_count(&self, ln_q: f64) -> usize {
        let ln_term = (8.0f64).ln() + ln_q + (1.0 / self.beta).ln();
        ((2.0 * ln_term) / (self.alpha0 * self.alpha0)).ceil() as usize
    }
}

/// The output dataset with the round each point was sampled from.
#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub points: Vec<DataPoint>,
    pub provenance: Vec<u64>,
}

#[derive(Debug, Clone)]
pub struct SynthRun {
    pub synthetic: SyntheticDataset,
    pub played: Vec<Query>,
    pub eps0: f64,
    pub delta0: f64,
    pub beta0: f64,
    pub pbr_samples: usize,
    pub dual_calls: u64,
    pub minimizer_calls: u64,
}

/// Run T rounds of FTPL-vs-PBR dynamics and sample the synthetic dataset
/// from the average play. Any oracle Fail aborts the whole synthesis (Ok
/// with None); there is no silent fallback.
pub fn oracle_query(
    s: &Dataset,
    class: &QueryClass,
    params: &SynthParams,
    dual_oracle: &mut dyn DualOracle,
    minimizer: &mut dyn PrivateMinimizer,
    seed: u64,
) -> Result<Option<SynthRun>> {
    class.validate_dataset(s)?;
    let dual = class.dual_view()?;
    let m2 = dual.separator_size();
    let t_rounds = params.rounds;
    if t_rounds < 1 {
        return Err(Error::Input("need at least one round".into()));
    }
    let (eps0, delta0, beta0) = params.budget()?;
    let pbr = PbrParams { eps0, delta0, alpha0: params.alpha0, beta0 };
    let noise_scale = params
        .noise_scale
        .unwrap_or_else(|| default_noise_scale(m2, class.ln_universe_size(), t_rounds));

    let mut player = DataPlayer::new(dual.separator, noise_scale, dual_oracle)?;
    // q^0: the canonically-first query.
    let q0 = class.enumerate_queries()?[0].clone();
    player.observe(&q0);

    let mut played = Vec::with_capacity(t_rounds as usize);
    let pbr_samples = pbr.sample_count(class.ln_query_count()?);
    for t in 1..=t_rounds {
        let mut round_rng = rng::stream(seed, &[rng::TAG_ROUND, t]);
        let q_t = {
            let player = &mut player;
            let mut draw = |r: &mut ChaCha8Rng| player.draw(r);
            private_best_response(s, class, &mut draw, &pbr, minimizer, &mut round_rng)?
        };
        let q_t = match q_t {
            Some(q) => q,
            None => return Ok(None),
        };
        player.observe(&q_t);
        played.push(q_t);
    }

    let final_count = params.final_sample_count(class.ln_query_count()?);
    let mut points = Vec::with_capacity(final_count);
    let mut provenance = Vec::with_capacity(final_count);
    for j in 0..final_count {
        let mut r = rng::stream(seed, &[rng::TAG_FINAL, j as u64]);
        let tau = r.gen_range(1..=t_rounds);
        match player.draw_at(tau as usize, &mut r)? {
            Some(x) => {
                points.push(x);
                provenance.push(tau);
            }
            None => return Ok(None),
        }
    }

    Ok(Some(SynthRun {
        synthetic: SyntheticDataset { points, provenance },
        played,
        eps0,
        delta0,
        beta0,
        pbr_samples,
        dual_calls: player.oracle_calls(),
        minimizer_calls: minimizer.calls(),
    }))
}
