//! `sepmin`: the experiment harness. Exit codes: 0 ok, 2 input error,
//! 3 capacity error, 4 mechanism Fail.

mod cli;
mod commands;
mod config;
mod record;

use clap::Parser;
use sepmin::error::{Error, Result};

use cli::{Cli, Cmd, CommonArgs};
use commands::CmdOutcome;
use config::Config;
use record::RunRecord;

const EXIT_INPUT: i32 = 2;
const EXIT_CAPACITY: i32 = 3;
const EXIT_FAIL: i32 = 4;

fn main() {
    let cli = Cli::parse();
    std::process::exit(run(cli));
}

fn run(cli: Cli) -> i32 {
    let common = common_of(&cli.cmd).clone();
    match execute(cli, &common) {
        Ok(failed) => {
            if failed {
                EXIT_FAIL
            } else {
                0
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Capacity(_) => EXIT_CAPACITY,
                Error::Input(_) | Error::Unsupported(_) => EXIT_INPUT,
            }
        }
    }
}

fn common_of(cmd: &Cmd) -> &CommonArgs {
    match cmd {
        Cmd::Learn(a) => &a.common,
        Cmd::Synth(a) => &a.common,
        Cmd::Audit(a) => &a.common,
        Cmd::Regret(a) => &a.common,
        Cmd::Bench(a) => &a.common,
        Cmd::VerifySeparators(a) => &a.common,
    }
}

fn execute(cli: Cli, common: &CommonArgs) -> Result<bool> {
    let cfg = Config::load(common.config.as_deref())?;
    if let Some(threads) = common.threads.or(cfg.get("threads")?) {
        // Ignore the error if a pool already exists (tests call run twice).
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let mut res = commands::resolve_common(
        common.class.as_deref(),
        common.d,
        common.grid.as_deref(),
        common.lifted,
        common.seed,
        common.out.as_ref(),
        &cfg,
    )?;

    let started = std::time::Instant::now();
    let (name, outcome) = match &cli.cmd {
        Cmd::Learn(a) => ("learn", commands::learn(a, &cfg, &mut res)),
        Cmd::Synth(a) => ("synth", commands::synth(a, &cfg, &mut res)),
        Cmd::Audit(a) => ("audit", commands::audit(a, &cfg, &mut res)),
        Cmd::Regret(a) => ("regret", commands::regret(a, &cfg, &mut res)),
        Cmd::Bench(a) => ("bench", commands::bench(a, &cfg, &mut res)),
        Cmd::VerifySeparators(a) => ("verify-separators", commands::verify_separators(a, &cfg, &mut res)),
    };

    // Reject config keys nothing consumed (catches typos), then persist
    // exactly one record for the run, whatever its status.
    let checked = outcome.and_then(|o| cfg.reject_unknown().map(|()| o));
    let mut record = RunRecord::new(name, res.params.clone(), res.seed);
    record.wall_ms = started.elapsed().as_millis() as u64;
    let result = match checked {
        Ok(CmdOutcome { payload, oracle_calls, failed }) => {
            record.status = if failed { "fail" } else { "ok" }.to_string();
            record.oracle_calls = oracle_calls;
            record.output = payload;
            Ok(failed)
        }
        Err(e) => {
            record.status = match &e {
                Error::Capacity(_) => "capacity-error",
                _ => "input-error",
            }
            .to_string();
            record.output = serde_json::json!({"error": e.to_string()});
            Err(e)
        }
    };
    if let Err(e) = record.append_to(&res.out) {
        eprintln!("warning: could not write run record: {e}");
    }
    result
}
