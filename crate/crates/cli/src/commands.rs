//! Subcommand implementations. Every command resolves its parameters
//! (flags over config file), runs, and returns a JSON payload for the run
//! record plus the oracle-call count.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use sepmin::audit::{
    adversarial_query_stream, dp_ratio_audit, error_table, ftpl_regret_experiment,
    follow_private_leader, measure_z_inf, rspm_perm, substitution_neighbors, MechPreset,
};
use sepmin::class::{Family, QueryClass};
use sepmin::data::{DataPoint, Dataset, WeightedDataset};
use sepmin::error::{Error, Result};
use sepmin::mech::{rspm_weighted, MechOutcome, Perturbation};
use sepmin::oracle::{CertifiableOracle, ExactDualOracle, ExactOracle, FailurePolicy};
use sepmin::prsma::{prsma_rspm_preset, PrsmaConfig, DEFAULT_REPS_CAP};
use sepmin::query::Query;
use sepmin::rng;
use sepmin::synth::{
    default_alpha0, max_query_error, oracle_query, preset_t, ExpMechMinimizer, PrivateMinimizer,
    ProblemSizes, PrsmaWeightedMinimizer, RspmMinimizer, SynthParams, SynthPreset,
};

use crate::cli::{AuditArgs, BenchArgs, LearnArgs, RegretArgs, SynthArgs, VerifyArgs};
use crate::config::Config;

pub struct CmdOutcome {
    pub payload: serde_json::Value,
    pub oracle_calls: u64,
    /// Mechanism output was Fail (exit code 4).
    pub failed: bool,
}

impl CmdOutcome {
    fn ok(payload: serde_json::Value, oracle_calls: u64) -> Self {
        CmdOutcome { payload, oracle_calls, failed: false }
    }
}

/// Resolved class + bookkeeping shared by every command.
pub struct Resolved {
    pub class: QueryClass,
    pub seed: u64,
    pub out: PathBuf,
    pub params: BTreeMap<String, String>,
}

impl Resolved {
    pub fn record_param(&mut self, key: &str, value: impl ToString) {
        self.params.insert(key.to_string(), value.to_string());
    }
}

pub fn resolve_common(
    class: Option<&str>,
    d: Option<usize>,
    grid: Option<&str>,
    lifted: bool,
    seed: Option<u64>,
    out: Option<&PathBuf>,
    cfg: &Config,
) -> Result<Resolved> {
    let family: Family = match class.map(str::to_string).or(cfg.get("class")?) {
        Some(s) => s.parse()?,
        None => Family::Conjunction,
    };
    let d = d.or(cfg.get("d")?).unwrap_or(3);
    let grid_str = grid.map(str::to_string).or(cfg.get("grid")?);
    let lifted = lifted || cfg.get::<bool>("lifted")?.unwrap_or(false);
    let seed = seed.or(cfg.get("seed")?).unwrap_or(0);
    let out = out.cloned().or(cfg.get::<PathBuf>("out")?).unwrap_or_else(|| PathBuf::from("runs"));

    let mut class = match family {
        Family::Halfspace => {
            let grid = parse_grid(grid_str.as_deref().unwrap_or("-1,1"))?;
            QueryClass::halfspace(d, &grid)?
        }
        _ => QueryClass::new(family, d)?,
    };
    if lifted {
        class = class.lift_to_loss_class()?;
    }

    let mut params = BTreeMap::new();
    params.insert("class".to_string(), family.to_string());
    params.insert("d".to_string(), d.to_string());
    if let Some(g) = &grid_str {
        params.insert("grid".to_string(), g.clone());
    }
    if lifted {
        params.insert("lifted".to_string(), "true".to_string());
    }
    params.insert("out".to_string(), out.display().to_string());
    Ok(Resolved { class, seed, out, params })
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| Error::Input(format!("bad grid value {x:?}"))))
        .collect()
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| x.trim().parse::<T>().map_err(|_| Error::Input(format!("bad {what} value {x:?}"))))
        .collect()
}

fn load_dataset(path: &PathBuf, class: &QueryClass) -> Result<Dataset> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    let reader = std::io::BufReader::new(file);
    let s = if class.is_lifted() { Dataset::parse_labeled(reader)? } else { Dataset::parse(reader)? };
    class.validate_dataset(&s)?;
    Ok(s)
}

fn write_points(path: &PathBuf, points: &[DataPoint]) -> Result<()> {
    let mut f = std::fs::File::create(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    for p in points {
        writeln!(f, "{p}").map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// learn
// ---------------------------------------------------------------------------

pub fn learn(args: &LearnArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let mech = args.mech.clone().or(cfg.get("mech")?).unwrap_or_else(|| "rspm".to_string());
    let eps = args.eps.or(cfg.get("eps")?).unwrap_or(1.0);
    let delta = args.delta.or(cfg.get("delta")?);
    let policy: FailurePolicy =
        args.policy.clone().or(cfg.get("policy")?).unwrap_or_else(|| "never".to_string()).parse()?;
    let raw = args.raw || cfg.get::<bool>("raw")?.unwrap_or(false);
    let reps_cap = args.reps_cap.or(cfg.get("reps-cap")?).unwrap_or(DEFAULT_REPS_CAP);
    let data_path =
        args.data.clone().or(cfg.get("data")?).ok_or_else(|| Error::Input("--data is required".into()))?;

    res.record_param("mech", &mech);
    res.record_param("eps", eps);
    if let Some(d) = delta {
        res.record_param("delta", d);
    }
    res.record_param("policy", policy_str(&policy));
    res.record_param("data", data_path.display());
    if raw {
        res.record_param("raw", true);
    }
    if args.trace {
        res.record_param("trace", true);
    }

    let s = load_dataset(&data_path, &res.class)?;
    let sep = res.class.separator_set()?;

    let outcome = match mech.as_str() {
        "rspm" | "gauss-rspm" => {
            let pert = match mech.as_str() {
                "rspm" => Perturbation::Laplace { epsilon: eps },
                _ => Perturbation::Gaussian {
                    epsilon: eps,
                    delta: delta.ok_or_else(|| Error::Input("gauss-rspm needs --delta".into()))?,
                },
            };
            let mut oracle =
                CertifiableOracle::new(&res.class, policy, rng::derive(res.seed, &[1]))?;
            let out = rspm_weighted(
                WeightedDataset::from_dataset(&s, 1.0),
                1.0,
                &sep,
                pert,
                &mut oracle,
                &mut rng::stream(res.seed, &[2]),
                args.trace,
            )?;
            match out {
                MechOutcome::Output(o) => CmdOutcome {
                    payload: serde_json::json!({
                        "query": o.query.to_string(),
                        "noise_trace": o.noise_trace,
                    }),
                    oracle_calls: o.oracle_calls,
                    failed: false,
                },
                MechOutcome::Fail { oracle_calls } => CmdOutcome {
                    payload: serde_json::json!({"result": "fail"}),
                    oracle_calls,
                    failed: true,
                },
            }
        }
        "prsma" => {
            let delta = delta.ok_or_else(|| Error::Input("prsma needs --delta".into()))?;
            let cfg_p = if raw { PrsmaConfig::from_raw(eps, delta)? } else { PrsmaConfig::new(eps, delta)? }
                .with_reps_cap(reps_cap);
            let out = prsma_rspm_preset(&s, &res.class, &sep, &cfg_p, &policy, res.seed)?;
            let calls = out.inner_invocations;
            match &out.result {
                Some(q) => CmdOutcome {
                    payload: serde_json::json!({
                        "query": q.to_string(),
                        "pass_count": out.pass_count,
                        "noisy_count": out.noisy_count,
                        "discarded": out.discarded,
                    }),
                    oracle_calls: calls,
                    failed: false,
                },
                None => CmdOutcome {
                    payload: serde_json::json!({
                        "result": "fail",
                        "pass_count": out.pass_count,
                        "noisy_count": out.noisy_count,
                    }),
                    oracle_calls: calls,
                    failed: true,
                },
            }
        }
        other => return Err(Error::Input(format!("unknown mechanism {other:?}"))),
    };

    if let Some(q) = outcome.payload.get("query") {
        println!("query: {}", q.as_str().unwrap());
    } else {
        println!("result: fail");
    }
    Ok(outcome)
}

fn policy_str(p: &FailurePolicy) -> String {
    use sepmin::oracle::FailureMode::*;
    match &p.mode {
        Never => "never".to_string(),
        Bernoulli(pr) => format!("bernoulli:{pr}"),
        ScheduledCalls(set) => format!(
            "calls:{}",
            set.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(",")
        ),
        TriggerContains(point) => format!("trigger:{point}"),
    }
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

pub fn synth(args: &SynthArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let eps = args.eps.or(cfg.get("eps")?).unwrap_or(2.0);
    let delta = args.delta.or(cfg.get("delta")?).unwrap_or(1e-4);
    let beta = args.beta.or(cfg.get("beta")?).unwrap_or(0.1);
    let preset: SynthPreset = args
        .preset
        .clone()
        .or(cfg.get("preset")?)
        .unwrap_or_else(|| "gaussian-rspm".to_string())
        .parse()?;
    let policy: FailurePolicy =
        args.policy.clone().or(cfg.get("policy")?).unwrap_or_else(|| "never".to_string()).parse()?;
    let data_path =
        args.data.clone().or(cfg.get("data")?).ok_or_else(|| Error::Input("--data is required".into()))?;
    let s = load_dataset(&data_path, &res.class)?;

    let sizes = ProblemSizes::for_class(&res.class, s.n(), eps, delta, beta)?;
    let rounds = match args.t.or(cfg.get("t")?) {
        Some(t) => t,
        None => preset_t(preset, &sizes)?,
    };
    let alpha0 = args
        .alpha0
        .or(cfg.get("alpha0")?)
        .unwrap_or_else(|| default_alpha0(sizes.m2, sizes.ln_x, rounds));
    let mu = args.mu.or(cfg.get("mu")?);

    res.record_param("data", data_path.display());
    res.record_param("eps", eps);
    res.record_param("delta", delta);
    res.record_param("beta", beta);
    res.record_param("preset", format!("{preset:?}"));
    res.record_param("t", rounds);
    res.record_param("alpha0", alpha0);
    if let Some(mu) = mu {
        res.record_param("mu", mu);
    }
    res.record_param("policy", policy_str(&policy));

    let params =
        SynthParams { rounds, epsilon: eps, delta, beta, alpha0, noise_scale: mu };
    let (eps0, delta0, beta0) = params.budget()?;

    let mut dual = ExactDualOracle::new(&res.class)?;
    let mut minimizer: Box<dyn PrivateMinimizer> = match preset {
        SynthPreset::GaussianRspm => {
            let pert = Perturbation::Gaussian { epsilon: eps0, delta: delta0 };
            match policy.mode {
                sepmin::oracle::FailureMode::Never => {
                    Box::new(RspmMinimizer::exact(&res.class, pert, s.n() as f64)?)
                }
                _ => Box::new(RspmMinimizer::with_oracle(
                    &res.class,
                    pert,
                    s.n() as f64,
                    Box::new(CertifiableOracle::new(&res.class, policy.clone(), rng::derive(res.seed, &[3]))?),
                )?),
            }
        }
        SynthPreset::PrivateOracle => Box::new(ExpMechMinimizer::new(&res.class, eps0, s.n() as f64)?),
        SynthPreset::Prsma => Box::new(PrsmaWeightedMinimizer::new(
            &res.class,
            PrsmaConfig::new(eps0, delta0)?,
            policy.clone(),
            s.n(),
        )?),
    };

    let run = oracle_query(&s, &res.class, &params, &mut dual, minimizer.as_mut(), res.seed)?;
    let run = match run {
        Some(r) => r,
        None => {
            println!("result: fail (a round's oracle failed; no partial output)");
            return Ok(CmdOutcome {
                payload: serde_json::json!({"result": "fail"}),
                oracle_calls: 0,
                failed: true,
            });
        }
    };

    std::fs::create_dir_all(&res.out)
        .map_err(|e| Error::Input(format!("{}: {e}", res.out.display())))?;
    let file = res.out.join(format!("synth-{}.txt", res.seed));
    write_points(&file, &run.synthetic.points)?;
    let err = max_query_error(&s, &run.synthetic.points, &res.class)?;
    println!(
        "synthetic dataset: {} points -> {} (max query error {err:.4}, T={rounds}, eps0={eps0:.5})",
        run.synthetic.points.len(),
        file.display()
    );
    let calls = run.minimizer_calls + run.dual_calls;
    Ok(CmdOutcome::ok(
        serde_json::json!({
            "file": file.display().to_string(),
            "n_points": run.synthetic.points.len(),
            "rounds": rounds,
            "eps0": eps0,
            "delta0": delta0,
            "beta0": beta0,
            "alpha0": alpha0,
            "pbr_samples": run.pbr_samples,
            "max_query_error": err,
            "dual_calls": run.dual_calls,
            "minimizer_calls": run.minimizer_calls,
        }),
        calls,
    ))
}

// ---------------------------------------------------------------------------
// audit
// ---------------------------------------------------------------------------

pub fn audit(args: &AuditArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let mech = args.mech.clone().or(cfg.get("mech")?).unwrap_or_else(|| "rspm".to_string());
    let eps = args.eps.or(cfg.get("eps")?).unwrap_or(1.0);
    let delta = args.delta.or(cfg.get("delta")?).unwrap_or(0.0);
    let trials = args.trials.or(cfg.get("trials")?).unwrap_or(200_000);
    let n = args.n.or(cfg.get("n")?).unwrap_or(8);
    let confidence = args.confidence.or(cfg.get("confidence")?).unwrap_or(1e-3);

    res.record_param("mech", &mech);
    res.record_param("eps", eps);
    res.record_param("delta", delta);
    res.record_param("trials", trials);
    res.record_param("n", n);
    res.record_param("confidence", confidence);

    let class = res.class.clone();
    let pool = class.enumerate_points()?;
    let s = match &args.data {
        Some(path) => load_dataset(path, &class)?,
        None => {
            let mut r = rng::stream(res.seed, &[10]);
            use rand::Rng;
            Dataset::new((0..n).map(|_| pool[r.gen_range(0..pool.len())].clone()).collect())?
        }
    };
    let neighbors = substitution_neighbors(&s, &pool);
    let queries = class.enumerate_queries()?;
    let labels: Vec<String> = queries.iter().map(|q| q.to_string()).collect();
    let sep = class.separator_set()?;
    let q_index =
        |q: &Query| queries.iter().position(|x| x == q).expect("output in class");

    let report = match mech.as_str() {
        "constant" => dp_ratio_audit(
            "constant",
            |_s, _r| Ok(0),
            &labels,
            &s,
            &neighbors,
            eps,
            delta,
            trials,
            confidence,
            res.seed,
        )?,
        "exact-erm" => dp_ratio_audit(
            "exact-erm",
            |ds, _r| {
                let ans = sepmin::oracle::exact_oracle(&class, &WeightedDataset::from_dataset(ds, 1.0))?;
                Ok(q_index(ans.query().unwrap()))
            },
            &labels,
            &s,
            &neighbors,
            eps,
            delta,
            trials,
            confidence,
            res.seed,
        )?,
        "rr" => dp_ratio_audit(
            "randomized-response",
            |ds, r| Ok(sepmin::audit::randomized_response(ds, eps, r)),
            &["0".to_string(), "1".to_string()],
            &s,
            &neighbors,
            eps,
            delta,
            trials,
            confidence,
            res.seed,
        )?,
        "rspm" | "gauss-rspm" => {
            let pert = match mech.as_str() {
                "rspm" => Perturbation::Laplace { epsilon: eps },
                _ => Perturbation::Gaussian { epsilon: eps, delta },
            };
            dp_ratio_audit(
                &mech,
                |ds, r| {
                    let mut oracle = ExactOracle::new(&class)?;
                    match rspm_weighted(
                        WeightedDataset::from_dataset(ds, 1.0),
                        1.0,
                        &sep,
                        pert,
                        &mut oracle,
                        r,
                        false,
                    )? {
                        MechOutcome::Output(o) => Ok(q_index(&o.query)),
                        MechOutcome::Fail { .. } => unreachable!("exact oracle"),
                    }
                },
                &labels,
                &s,
                &neighbors,
                eps,
                delta,
                trials,
                confidence,
                res.seed,
            )?
        }
        other => return Err(Error::Input(format!("unknown audit mechanism {other:?}"))),
    };

    std::fs::create_dir_all(&res.out)
        .map_err(|e| Error::Input(format!("{}: {e}", res.out.display())))?;
    let file = res.out.join(format!("audit-{}.jsonl", res.seed));
    let mut f = std::fs::File::create(&file)
        .map_err(|e| Error::Input(format!("{}: {e}", file.display())))?;
    writeln!(f, "{}", serde_json::to_string(&report).unwrap())
        .map_err(|e| Error::Input(e.to_string()))?;

    println!(
        "audit {}: trials={} neighbors={} max-log-ratio={:.4} violations={} -> {}",
        report.mechanism,
        report.trials,
        neighbors.len(),
        report.max_log_ratio,
        report.violations.len(),
        if report.pass { "PASS" } else { "FAIL" },
    );
    println!("{:<14} {:>10} {:>10}", "output", "freq(S)", "min/max neighbor");
    let t = report.trials as f64;
    for (i, label) in report.outputs.iter().enumerate() {
        let base = report.base_counts[i] as f64 / t;
        let lo = report.neighbor_counts.iter().map(|c| c[i]).min().unwrap_or(0) as f64 / t;
        let hi = report.neighbor_counts.iter().map(|c| c[i]).max().unwrap_or(0) as f64 / t;
        println!("{label:<14} {base:>10.5} {:>12}", format!("{lo:.5}/{hi:.5}"));
    }

    Ok(CmdOutcome::ok(
        serde_json::json!({
            "pass": report.pass,
            "max_log_ratio": report.max_log_ratio,
            "violations": report.violations.len(),
            "file": file.display().to_string(),
        }),
        0,
    ))
}

// ---------------------------------------------------------------------------
// regret
// ---------------------------------------------------------------------------

pub fn regret(args: &RegretArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let mode = args.mode.clone().or(cfg.get("mode")?).unwrap_or_else(|| "fpl".to_string());
    let t = args.t.or(cfg.get("t")?).unwrap_or(2000);
    let eps = args.eps.or(cfg.get("eps")?).unwrap_or(0.1);
    let mu = args.mu.or(cfg.get("mu")?);
    let stream_kind =
        args.stream.clone().or(cfg.get("stream")?).unwrap_or_else(|| "alternating".to_string());

    res.record_param("mode", &mode);
    res.record_param("t", t);
    res.record_param("eps", eps);
    res.record_param("stream", &stream_kind);
    if let Some(m) = mu {
        res.record_param("mu", m);
    }

    let class = res.class.clone();
    let trace = match mode.as_str() {
        "fpl" => {
            let d = class.point_dim();
            if d < 2 {
                return Err(Error::Input("fpl stream needs dimension >= 2".into()));
            }
            let stream: Vec<DataPoint> = match stream_kind.as_str() {
                "alternating" => (0..t)
                    .map(|i| {
                        let mut bits = vec![0u8; d];
                        bits[i % 2] = 1;
                        DataPoint::bits(&bits)
                    })
                    .collect(),
                "uniform" => {
                    use rand::Rng;
                    let pool = class.enumerate_points()?;
                    let mut r = rng::stream(res.seed, &[11]);
                    (0..t).map(|_| pool[r.gen_range(0..pool.len())].clone()).collect()
                }
                other => return Err(Error::Input(format!("unknown stream {other:?}"))),
            };
            let perm = rspm_perm(&class, eps)?;
            let m = class.separator_set()?.size();
            follow_private_leader(&class, &stream, perm, m as f64 / eps, res.seed)?
        }
        "ftpl" => {
            let stream = adversarial_query_stream(&class, t, rng::derive(res.seed, &[12]))?;
            ftpl_regret_experiment(&class, &stream, mu, res.seed)?
        }
        other => return Err(Error::Input(format!("unknown regret mode {other:?}"))),
    };

    std::fs::create_dir_all(&res.out)
        .map_err(|e| Error::Input(format!("{}: {e}", res.out.display())))?;
    let file = res.out.join(format!("regret-{mode}-{}.tsv", res.seed));
    let mut f = std::fs::File::create(&file)
        .map_err(|e| Error::Input(format!("{}: {e}", file.display())))?;
    writeln!(f, "round\tloss\tcumulative_best").map_err(|e| Error::Input(e.to_string()))?;
    for (i, (l, b)) in trace.losses.iter().zip(&trace.cumulative_best).enumerate() {
        writeln!(f, "{}\t{l}\t{b}", i + 1).map_err(|e| Error::Input(e.to_string()))?;
    }

    let quarter = trace.avg_regret_at(t / 4);
    let full = trace.avg_regret_at(t);
    let monotone = full <= quarter;
    let z_inf = match mode.as_str() {
        "fpl" => Some(measure_z_inf(&class, Perturbation::Laplace { epsilon: eps }, 2000, res.seed)?),
        _ => None,
    };
    println!(
        "{mode} regret: avg {full:.4} at T={t} (vs {quarter:.4} at T={}), monotone: {monotone}; trace -> {}",
        t / 4,
        file.display()
    );
    Ok(CmdOutcome::ok(
        serde_json::json!({
            "avg_regret": full,
            "avg_regret_quarter": quarter,
            "monotone": monotone,
            "perturbation_scale": trace.perturbation_scale,
            "z_inf": z_inf,
            "file": file.display().to_string(),
        }),
        0,
    ))
}

// ---------------------------------------------------------------------------
// bench
// ---------------------------------------------------------------------------

pub fn bench(args: &BenchArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let mech = args.mech.clone().or(cfg.get("mech")?).unwrap_or_else(|| "rspm".to_string());
    let n_grid = parse_list::<usize>(
        &args.n_grid.clone().or(cfg.get("n-grid")?).unwrap_or_else(|| "500,1000".to_string()),
        "n",
    )?;
    let eps_grid = parse_list::<f64>(
        &args.eps_grid.clone().or(cfg.get("eps-grid")?).unwrap_or_else(|| "0.5,1".to_string()),
        "eps",
    )?;
    let trials = args.trials.or(cfg.get("trials")?).unwrap_or(200);
    let beta = args.beta.or(cfg.get("beta")?).unwrap_or(0.05);
    let delta = args.delta.or(cfg.get("delta")?).unwrap_or(0.05);

    res.record_param("mech", &mech);
    res.record_param("n-grid", n_grid.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    res.record_param("eps-grid", eps_grid.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
    res.record_param("trials", trials);
    res.record_param("beta", beta);
    res.record_param("delta", delta);

    let preset = match mech.as_str() {
        "rspm" => MechPreset::Rspm,
        "gauss-rspm" => MechPreset::RspmGaussian { delta },
        "prsma" => MechPreset::PrsmaRspm { delta_target: delta },
        other => return Err(Error::Input(format!("unknown bench mechanism {other:?}"))),
    };
    let rows = error_table(&preset, &res.class, &n_grid, &eps_grid, trials, beta, res.seed)?;

    std::fs::create_dir_all(&res.out)
        .map_err(|e| Error::Input(format!("{}: {e}", res.out.display())))?;
    let file = res.out.join(format!("bench-{}-{}.tsv", preset.id(), res.seed));
    let mut f = std::fs::File::create(&file)
        .map_err(|e| Error::Input(format!("{}: {e}", file.display())))?;
    writeln!(f, "n\teps\tmean_excess\tp95_excess\tbound").map_err(|e| Error::Input(e.to_string()))?;
    println!("{:>7} {:>6} {:>12} {:>12} {:>12}", "n", "eps", "mean", "p95", "bound");
    for r in &rows {
        writeln!(f, "{}\t{}\t{}\t{}\t{}", r.n, r.epsilon, r.mean_excess, r.p95_excess, r.bound)
            .map_err(|e| Error::Input(e.to_string()))?;
        println!(
            "{:>7} {:>6} {:>12.5} {:>12.5} {:>12.5}",
            r.n, r.epsilon, r.mean_excess, r.p95_excess, r.bound
        );
    }
    Ok(CmdOutcome::ok(
        serde_json::json!({
            "rows": rows.len(),
            "file": file.display().to_string(),
            "table": rows,
        }),
        0,
    ))
}

// ---------------------------------------------------------------------------
// verify-separators
// ---------------------------------------------------------------------------

pub fn verify_separators(args: &VerifyArgs, cfg: &Config, res: &mut Resolved) -> Result<CmdOutcome> {
    let d_max = args.d_max.or(cfg.get("d-max")?).unwrap_or(6);
    res.record_param("d-max", d_max);
    let mut rows = Vec::new();
    let mut all_ok = true;
    let mut check = |class: QueryClass| -> Result<()> {
        let u = class.separator_set()?;
        let ok = class.verify_separator(&u)?;
        let count = class.query_count()?;
        all_ok &= ok;
        println!(
            "{:<16} m={:<3} |Q|={:<6} {}",
            class.to_string(),
            u.size(),
            count,
            if ok { "OK" } else { "FAIL" }
        );
        rows.push(serde_json::json!({
            "class": class.to_string(),
            "m": u.size(),
            "queries": count,
            "ok": ok,
        }));
        Ok(())
    };
    for d in 2..=d_max {
        for fam in [Family::Conjunction, Family::Disjunction, Family::Parity] {
            check(QueryClass::new(fam, d)?)?;
        }
    }
    for d in 2..=d_max.min(4) {
        check(QueryClass::halfspace(d, &[-1.0, 1.0])?)?;
    }
    for d in 2..=d_max.min(3) {
        check(QueryClass::new(Family::DecisionList1, d)?)?;
    }
    Ok(CmdOutcome::ok(serde_json::json!({"all_ok": all_ok, "classes": rows}), 0))
}
