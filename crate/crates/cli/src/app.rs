//! The `fracsource` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Context, Result};
use clap::{Arg, ArgAction, ArgMatches, Command};
use fracsource::forward::ForwardSolver;
use fracsource::mlf::{evaluators, Composite, MittagLeffler};
use crate::checks::run_checks;
use crate::config::Config;
use crate::experiment::write_atomic;
use crate::spec::KEYS;
use crate::{format_table, run_experiment, ExperimentSpec, ForwardSpec};

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug)]
struct Usage(anyhow::Error);

/// Flags with dedicated handling; every other key gets a generic `--key`.
const DEDICATED: &[&str] = &["preset", "out", "seeds"];

fn key_args() -> Vec<Arg> {
    KEYS.iter()
        .filter(|(k, _)| !DEDICATED.contains(k))
        .map(|(k, help)| Arg::new(*k).long(*k).value_name("VALUE").help(*help))
        .collect()
}

fn cli() -> Command {
    let config = Arg::new("config")
        .long("config")
        .value_name("PATH")
        .value_parser(clap::value_parser!(PathBuf))
        .help("flat `key = value` config file");
    Command::new("fracsource")
        .about("Fractional diffusion source reconstruction")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(
            Command::new("run")
                .about("Reconstruct the source for every case, noise level and seed")
                .arg(config.clone())
                .arg(Arg::new("preset").long("preset").value_name("NAME").help("table1 or table2"))
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("S")
                        .value_parser(clap::value_parser!(u64))
                        .conflicts_with("seeds")
                        .help("single noise seed"),
                )
                .arg(Arg::new("seeds").long("seeds").value_name("LIST").help("comma-separated seeds to average over"))
                .arg(Arg::new("out").long("out").value_name("DIR").help("output directory"))
                .arg(Arg::new("quiet").long("quiet").short('q').action(ArgAction::SetTrue).help("do not print the table"))
                .args(key_args()),
        )
        .subcommand(
            Command::new("check").about("Run the fast self-checks").arg(
                Arg::new("series-cutoff")
                    .long("series-cutoff")
                    .value_name("X")
                    .value_parser(clap::value_parser!(f64))
                    .hide(true),
            ),
        )
        .subcommand(
            Command::new("forward")
                .about("Forward solve only; writes the space-time field as CSV")
                .arg(config.required(true))
                .arg(Arg::new("out").long("out").value_name("FILE").help("output file (default: stdout)"))
                .args(key_args()),
        )
}

/// Config file (if any) overlaid with the command-line key flags.
fn gather(m: &ArgMatches) -> Result<Config, Usage> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(p) => Config::load(p).map_err(Usage)?,
        None => Config::default(),
    };
    for (k, _) in KEYS.iter().filter(|(k, _)| !DEDICATED.contains(k)) {
        if let Some(v) = m.try_get_one::<String>(k).ok().flatten() {
            cfg.set(k, v.as_str());
        }
    }
    for k in DEDICATED {
        if let Some(v) = m.try_get_one::<String>(k).ok().flatten() {
            cfg.set(k, v.as_str());
        }
    }
    Ok(cfg)
}

fn install_pool() -> Result<(), Usage> {
    if let Ok(v) = std::env::var("FRACSOURCE_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Usage(anyhow!("FRACSOURCE_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .or_else(|e| match rayon::current_num_threads() == n {
                // A second call in the same process.
                true => Ok(()),
                false => Err(Usage(anyhow!("cannot size the thread pool: {e}"))),
            })?;
    }
    Ok(())
}

fn cmd_run(m: &ArgMatches) -> Result<Result<()>, Usage> {
    if m.get_one::<PathBuf>("config").is_none() && m.get_one::<String>("preset").is_none() {
        return Err(Usage(anyhow!("`run` needs --config or --preset")));
    }
    let mut cfg = gather(m)?;
    if let Some(s) = m.get_one::<u64>("seed") {
        cfg.set("seeds", s.to_string());
    }
    let spec = ExperimentSpec::from_config(&cfg).map_err(Usage)?;
    let quiet = m.get_flag("quiet");
    Ok((|| {
        let report = run_experiment(&spec)?;
        for c in &report.cells {
            eprintln!(
                "({}) eps={} seed={}: K={} ({}), err={:.4e}",
                c.case,
                c.epsilon,
                c.seed.map_or("-".into(), |s| s.to_string()),
                c.stopping_index,
                c.stop,
                c.err
            );
        }
        if !quiet {
            print!("{}", format_table(&spec, &report));
        }
        eprintln!("results in {}", report.out.display());
        Ok(())
    })())
}

fn cmd_check(m: &ArgMatches) -> Result<()> {
    let eval: Box<dyn MittagLeffler> = match m.get_one::<f64>("series-cutoff") {
        Some(&x) => Box::new(Composite::with_series_cutoff(x)),
        None => Box::new(Composite::default()),
    };
    let results = run_checks(eval.as_ref());
    for r in &results {
        println!("{} {:<14} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        return Err(anyhow!("{failed} of {} checks failed", results.len()));
    }
    Ok(())
}

fn cmd_forward(m: &ArgMatches) -> Result<Result<()>, Usage> {
    let path = m.get_one::<PathBuf>("config").expect("required by clap");
    if !path.is_file() {
        return Err(Usage(anyhow!("config file {} does not exist", path.display())));
    }
    let spec = ForwardSpec::from_config(&gather(m)?).map_err(Usage)?;
    Ok((|| {
        let cfg = spec.problem()?;
        let eval = evaluators().create(&spec.evaluator)?;
        let solver = ForwardSolver::with_evaluator(cfg.clone(), spec.source()?, eval.as_ref())?;
        let xs = cfg.sgrid().nodes();
        let u = solver.solve(&spec.phi.sample(xs)?, &spec.f.sample(xs)?)?;
        let mut buf = Vec::new();
        u.write_csv(&mut buf)?;
        match &spec.out {
            Some(p) => write_atomic(p, &buf).with_context(|| format!("writing {}", p.display()))?,
            None => std::io::stdout().lock().write_all(&buf)?,
        }
        Ok(())
    })())
}

/// Parses `args` (program name first) and runs the chosen subcommand.
/// Returns 0 on success, 1 on runtime failure and 2 on bad usage.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let m = match cli().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = install_pool().and_then(|()| match m.subcommand() {
        Some(("run", sub)) => cmd_run(sub),
        Some(("check", sub)) => Ok(cmd_check(sub)),
        Some(("forward", sub)) => cmd_forward(sub),
        _ => unreachable!("clap requires a subcommand"),
    });
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
        Err(Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_definition_is_consistent() {
        cli().debug_assert();
    }
}
