//! Weighted optimization oracles: the exact brute-force oracle, certifiable
//! and non-certifiable heuristic wrappers driven by failure policies, the
//! coupled runner realizing the oracle-equivalence coupling, and the dual
//! oracle used by the data player.

use std::collections::BTreeSet;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::class::{Family, QueryClass};
use crate::data::{DataPoint, WeightedDataset};
use crate::error::{Error, Result};
use crate::query::{eval_weighted, Query};
use crate::rng;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Success { query: Query, objective: f64 },
    Fail,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleAnswer {
    pub outcome: OracleOutcome,
    pub calls_consumed: u64,
}

impl OracleAnswer {
    pub fn is_fail(&self) -> bool {
        matches!(self.outcome, OracleOutcome::Fail)
    }

    pub fn query(&self) -> Option<&Query> {
        match &self.outcome {
            OracleOutcome::Success { query, .. } => Some(query),
            OracleOutcome::Fail => None,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match &self.outcome {
            OracleOutcome::Success { objective, .. } => Some(*objective),
            OracleOutcome::Fail => None,
        }
    }
}

/// When a heuristic oracle misbehaves.
#[derive(Debug, Clone, PartialEq)]
pub enum FailureMode {
    Never,
    /// Fail independently with probability p on each call.
    Bernoulli(f64),
    /// Fail on exactly these 1-based call indices.
    ScheduledCalls(BTreeSet<u64>),
    /// Fail whenever the input contains this point.
    TriggerContains(DataPoint),
}

/// What a triggered non-certifiable oracle returns instead of the argmin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptionRule {
    /// The canonically-last member of the class.
    LexicographicallyLast,
    /// The arg*max* of the weighted objective.
    Maximizer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FailurePolicy {
    pub mode: FailureMode,
    pub corruption: CorruptionRule,
}

impl FailurePolicy {
    pub fn never() -> Self {
        FailurePolicy { mode: FailureMode::Never, corruption: CorruptionRule::LexicographicallyLast }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Input(format!("failure probability {p} outside [0,1]")));
        }
        Ok(FailurePolicy { mode: FailureMode::Bernoulli(p), corruption: CorruptionRule::LexicographicallyLast })
    }

    pub fn trigger(point: DataPoint) -> Self {
        FailurePolicy {
            mode: FailureMode::TriggerContains(point),
            corruption: CorruptionRule::LexicographicallyLast,
        }
    }

    fn fires(&self, call_index: u64, wd: &WeightedDataset, rng: &mut ChaCha8Rng) -> bool {
        match &self.mode {
            FailureMode::Never => false,
            FailureMode::Bernoulli(p) => rng.gen_bool(*p),
            FailureMode::ScheduledCalls(set) => set.contains(&call_index),
            FailureMode::TriggerContains(p) => wd.contains_point(p),
        }
    }
}

/// Config syntax: never | bernoulli:p | calls:i,j,k | trigger:c1,c2,...
impl FromStr for FailurePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        match (head, tail) {
            ("never", None) => Ok(FailurePolicy::never()),
            ("bernoulli", Some(p)) => {
                let p: f64 = p.parse().map_err(|_| Error::Input(format!("bad probability {p:?}")))?;
                FailurePolicy::bernoulli(p)
            }
            ("calls", Some(list)) => {
                let set = list
                    .split(',')
                    .map(|x| x.trim().parse::<u64>().map_err(|_| Error::Input(format!("bad call index {x:?}"))))
                    .collect::<Result<BTreeSet<u64>>>()?;
                Ok(FailurePolicy {
                    mode: FailureMode::ScheduledCalls(set),
                    corruption: CorruptionRule::LexicographicallyLast,
                })
            }
            ("trigger", Some(coords)) => {
                let coords = coords
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad coordinate {x:?}"))))
                    .collect::<Result<Vec<f64>>>()?;
                Ok(FailurePolicy::trigger(DataPoint::new(coords)))
            }
            _ => Err(Error::Input(format!("unknown failure policy {s:?}"))),
        }
    }
}

/// Anything able to answer weighted minimization problems over a class.
pub trait WeightedMinimizer {
    fn minimize(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer>;
    fn calls(&self) -> u64;
}

/// Brute-force weighted optimization over an enumerable class. Deterministic:
/// ties break toward the canonically-first query.
pub struct ExactOracle {
    class: QueryClass,
    queries: Vec<Query>,
    masks: Option<Vec<u32>>,
    calls: u64,
}

impl ExactOracle {
    pub fn new(class: &QueryClass) -> Result<Self> {
        let queries = class.enumerate_queries()?;
        let masks = if class.is_lifted() {
            None
        } else {
            match class.family() {
                Family::Conjunction | Family::Disjunction | Family::Parity => {
                    Some(queries.iter().map(|q| q.index_mask().unwrap()).collect())
                }
                _ => None,
            }
        };
        Ok(ExactOracle { class: class.clone(), queries, masks, calls: 0 })
    }

    pub fn class(&self) -> &QueryClass {
        &self.class
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    /// Objective of every class member on `wd`, in enumeration order.
    pub fn objectives(&self, wd: &WeightedDataset) -> Result<Vec<f64>> {
        for (p, _) in wd.entries() {
            if p.dim() != self.class.point_dim() {
                return Err(crate::error::dim_mismatch(self.class.point_dim(), p.dim()));
            }
        }
        if let Some(masks) = &self.masks {
            if let Some(packed) = pack_binary(wd) {
                let fam = self.class.family();
                let mut obj = vec![0.0f64; masks.len()];
                for &(pm, w) in &packed {
                    for (o, &qm) in obj.iter_mut().zip(masks) {
                        let hit = match fam {
                            Family::Conjunction => pm & qm == qm,
                            Family::Disjunction => pm & qm != 0,
                            _ => (pm & qm).count_ones() & 1 == 1,
                        };
                        if hit {
                            *o += w;
                        }
                    }
                }
                return Ok(obj);
            }
        }
        self.queries.iter().map(|q| eval_weighted(q, wd)).collect()
    }

    fn answer(&self, wd: &WeightedDataset, maximize: bool) -> Result<(Query, f64)> {
        let obj = self.objectives(wd)?;
        let mut best = 0usize;
        for (i, &v) in obj.iter().enumerate() {
            let better = if maximize { v > obj[best] } else { v < obj[best] };
            if better {
                best = i;
            }
        }
        Ok((self.queries[best].clone(), obj[best]))
    }
}

fn pack_binary(wd: &WeightedDataset) -> Option<Vec<(u32, f64)>> {
    wd.entries().iter().map(|(p, w)| p.mask().map(|m| (m, *w))).collect()
}

impl WeightedMinimizer for ExactOracle {
    fn minimize(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer> {
        self.calls += 1;
        let (query, objective) = self.answer(wd, false)?;
        Ok(OracleAnswer { outcome: OracleOutcome::Success { query, objective }, calls_consumed: 1 })
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// One-shot exact minimization (a pure function of class and input).
pub fn exact_oracle(class: &QueryClass, wd: &WeightedDataset) -> Result<OracleAnswer> {
    ExactOracle::new(class)?.minimize(wd)
}

/// A heuristic oracle that may output Fail but never an incorrect minimizer.
pub struct CertifiableOracle {
    exact: ExactOracle,
    policy: FailurePolicy,
    rng: ChaCha8Rng,
    calls: u64,
}

impl CertifiableOracle {
    pub fn new(class: &QueryClass, policy: FailurePolicy, seed: u64) -> Result<Self> {
        Ok(CertifiableOracle {
            exact: ExactOracle::new(class)?,
            policy,
            rng: rng::stream(seed, &[rng::TAG_ORACLE]),
            calls: 0,
        })
    }

    pub fn exact_answer(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer> {
        self.exact.minimize(wd)
    }
}

impl WeightedMinimizer for CertifiableOracle {
    fn minimize(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer> {
        self.calls += 1;
        if self.policy.fires(self.calls, wd, &mut self.rng) {
            return Ok(OracleAnswer { outcome: OracleOutcome::Fail, calls_consumed: 1 });
        }
        let (query, objective) = self.exact.answer(wd, false)?;
        Ok(OracleAnswer { outcome: OracleOutcome::Success { query, objective }, calls_consumed: 1 })
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// A heuristic oracle with no correctness guarantee: it never Fails, and on
/// a policy trigger returns the corruption rule's query instead of the
/// argmin. The reported objective is honestly recomputed either way.
pub struct NoncertifiableOracle {
    exact: ExactOracle,
    policy: FailurePolicy,
    rng: ChaCha8Rng,
    calls: u64,
}

impl NoncertifiableOracle {
    pub fn new(class: &QueryClass, policy: FailurePolicy, seed: u64) -> Result<Self> {
        Ok(NoncertifiableOracle {
            exact: ExactOracle::new(class)?,
            policy,
            rng: rng::stream(seed, &[rng::TAG_ORACLE]),
            calls: 0,
        })
    }
}

impl WeightedMinimizer for NoncertifiableOracle {
    fn minimize(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer> {
        self.calls += 1;
        let (query, objective) = if self.policy.fires(self.calls, wd, &mut self.rng) {
            match self.policy.corruption {
                CorruptionRule::LexicographicallyLast => {
                    let q = self.exact.queries().last().unwrap().clone();
                    let obj = eval_weighted(&q, wd)?;
                    (q, obj)
                }
                CorruptionRule::Maximizer => self.exact.answer(wd, true)?,
            }
        } else {
            self.exact.answer(wd, false)?
        };
        Ok(OracleAnswer { outcome: OracleOutcome::Success { query, objective }, calls_consumed: 1 })
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}

/// The coupling construction: run one algorithm; serve it certifiable-oracle
/// answers, and whenever the heuristic fails, substitute the exact answer so
/// the ideal run continues. If no call failed the two runs coincide exactly.
pub struct CoupledOracle {
    inner: CertifiableOracle,
    any_fail: bool,
}

impl CoupledOracle {
    pub fn new(class: &QueryClass, policy: FailurePolicy, seed: u64) -> Result<Self> {
        Ok(CoupledOracle { inner: CertifiableOracle::new(class, policy, seed)?, any_fail: false })
    }

    pub fn any_fail(&self) -> bool {
        self.any_fail
    }
}

impl WeightedMinimizer for CoupledOracle {
    fn minimize(&mut self, wd: &WeightedDataset) -> Result<OracleAnswer> {
        let ans = self.inner.minimize(wd)?;
        if !ans.is_fail() {
            return Ok(ans);
        }
        self.any_fail = true;
        self.inner.exact_answer(wd)
    }

    fn calls(&self) -> u64 {
        self.inner.calls()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun<T> {
    /// Output of the ideal (perfect-oracle) side.
    pub ideal: T,
    /// Output of the heuristic side; None is Fail.
    pub heuristic: Option<T>,
}

/// Run `algorithm` once under the coupling. The algorithm must draw all of
/// its randomness from the provided stream.
pub fn coupled_run<T>(
    class: &QueryClass,
    policy: FailurePolicy,
    seed: u64,
    algorithm: impl FnOnce(&mut CoupledOracle, &mut ChaCha8Rng) -> Result<T>,
) -> Result<CoupledRun<T>>
where
    T: Clone,
{
    let mut oracle = CoupledOracle::new(class, policy, rng::derive(seed, &[rng::TAG_ORACLE]))?;
    let mut algo_rng = rng::stream(seed, &[rng::TAG_TRIAL]);
    let ideal = algorithm(&mut oracle, &mut algo_rng)?;
    let heuristic = if oracle.any_fail() { None } else { Some(ideal.clone()) };
    Ok(CoupledRun { ideal, heuristic })
}

/// Weighted optimization over the dual class: given a history of queries
/// (each with weight 1) and a perturbation list of (query, weight) pairs,
/// return argmin_x sum_tau history[tau](x) + sum_s w_s s(x).
///
/// The history is passed as a prefix slice so the same oracle can serve
/// draws against any past round; it must grow append-only across calls.
pub trait DualOracle {
    fn best_point(&mut self, history: &[Query], perturbation: &[(&Query, f64)]) -> Result<Option<DataPoint>>;
    fn calls(&self) -> u64;
}

/// Exact dual oracle over an enumerable universe, with incremental history
/// sums so each call costs O(|perturbation| * |X|).
pub struct ExactDualOracle {
    points: Vec<DataPoint>,
    /// snapshots[k][x] = sum of the first k history entries evaluated at x.
    snapshots: Vec<Vec<f64>>,
    seen: Vec<Query>,
    calls: u64,
}

impl ExactDualOracle {
    pub fn new(class: &QueryClass) -> Result<Self> {
        let points = class.enumerate_points()?;
        let zero = vec![0.0; points.len()];
        Ok(ExactDualOracle { points, snapshots: vec![zero], seen: Vec::new(), calls: 0 })
    }

    pub fn points(&self) -> &[DataPoint] {
        &self.points
    }

    fn sync(&mut self, history: &[Query]) {
        debug_assert!(history.len() <= self.seen.len() || history[..self.seen.len()] == self.seen[..]);
        while self.seen.len() < history.len() {
            let q = &history[self.seen.len()];
            let prev = self.snapshots.last().unwrap();
            let next: Vec<f64> = self
                .points
                .iter()
                .zip(prev)
                .map(|(x, &c)| c + q.eval_unchecked(x) as f64)
                .collect();
            self.snapshots.push(next);
            self.seen.push(q.clone());
        }
    }
}

impl DualOracle for ExactDualOracle {
    fn best_point(&mut self, history: &[Query], perturbation: &[(&Query, f64)]) -> Result<Option<DataPoint>> {
        self.calls += 1;
        self.sync(history);
        let base = &self.snapshots[history.len()];
        let mut best = 0usize;
        let mut best_obj = f64::INFINITY;
        for (i, x) in self.points.iter().enumerate() {
            let mut obj = base[i];
            for (s, w) in perturbation {
                obj += *w * s.eval_unchecked(x) as f64;
            }
            if obj < best_obj {
                best_obj = obj;
                best = i;
            }
        }
        Ok(Some(self.points[best].clone()))
    }

    fn calls(&self) -> u64 {
        self.calls
    }
}
