use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};

use multiplex_market::cli::{self, RunManifest};
use multiplex_market::config::{SimConfig, KEYS};
use multiplex_market::{Error, Result};

fn with_config_args(cmd: Command) -> Command {
    let mut cmd = cmd
        .arg(Arg::new("config").long("config").value_name("FILE").help("key = value configuration file"))
        .arg(
            Arg::new("seed")
                .long("seed")
                .value_name("N")
                .action(ArgAction::Append)
                .value_parser(clap::value_parser!(u64))
                .help("Seed to run; repeat for an ensemble"),
        )
        .arg(
            Arg::new("seeds")
                .long("seeds")
                .value_name("COUNT")
                .value_parser(clap::value_parser!(u64))
                .help("Run COUNT consecutive seeds starting at the configured seed"),
        )
        .arg(Arg::new("out").long("out").value_name("DIR").default_value("out"));
    for key in KEYS.iter().filter(|k| **k != "seed") {
        cmd = cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .help(format!("Override `{key}`")),
        );
    }
    cmd
}

fn command() -> Command {
    Command::new("multiplex-market")
        .about("Two-asset herding market simulator")
        .subcommand_required(true)
        .subcommand(
            with_config_args(Command::new("run").about("Simulate one or more seeds"))
                .arg(Arg::new("manifest").long("manifest").value_name("FILE").help("Re-run a manifest.json")),
        )
        .subcommand(
            Command::new("analyze")
                .about("Return statistics and q-Gaussian fit of a run directory")
                .arg(Arg::new("run").long("run").value_name("DIR").required(true)),
        )
        .subcommand(
            with_config_args(Command::new("sweep").about("Run the ensemble for each value of one parameter"))
                .arg(Arg::new("param").long("param").value_name("KEY").required(true))
                .arg(Arg::new("values").long("values").value_name("V1,V2,...").required(true)),
        )
}

fn resolve(m: &ArgMatches) -> Result<(SimConfig, Vec<u64>)> {
    let mut cfg = match m.get_one::<String>("config") {
        Some(path) => SimConfig::load(&PathBuf::from(path))?,
        None => SimConfig::default(),
    };
    for key in KEYS.iter().filter(|k| **k != "seed") {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    let mut seeds: Vec<u64> = m.get_many::<u64>("seed").map(|v| v.copied().collect()).unwrap_or_default();
    if let Some(&first) = seeds.first() {
        cfg.seed = first;
    }
    if let Some(&count) = m.get_one::<u64>("seeds") {
        let start = cfg.seed;
        seeds = (0..count).map(|k| start + k).collect();
    }
    if seeds.is_empty() {
        seeds.push(cfg.seed);
    }
    cfg.validate()?;
    Ok((cfg, seeds))
}

fn dispatch(matches: ArgMatches) -> Result<()> {
    match matches.subcommand() {
        Some(("run", m)) => {
            let out = PathBuf::from(m.get_one::<String>("out").expect("defaulted"));
            let manifest = match m.get_one::<String>("manifest") {
                Some(path) => {
                    let loaded = RunManifest::load(&PathBuf::from(path))?;
                    let diverged = cli::replay_manifest(&loaded, &out)?;
                    if !diverged.is_empty() {
                        return Err(Error::Input(format!("outputs differ from manifest: {}", diverged.join(", "))));
                    }
                    loaded
                }
                None => {
                    let (cfg, seeds) = resolve(m)?;
                    cli::run_command(&cfg, &seeds, &out)?
                }
            };
            println!("wrote {} seed(s) to {}", manifest.seeds.len(), out.display());
        }
        Some(("analyze", m)) => {
            let dir = PathBuf::from(m.get_one::<String>("run").expect("required"));
            let summary = cli::analyze_command(&dir)?;
            println!("{}", serde_json::to_string_pretty(&summary.series)?);
        }
        Some(("sweep", m)) => {
            let (cfg, seeds) = resolve(m)?;
            let out = PathBuf::from(m.get_one::<String>("out").expect("defaulted"));
            let param = m.get_one::<String>("param").expect("required");
            let values: Vec<String> = m
                .get_one::<String>("values")
                .expect("required")
                .split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect();
            let results = cli::sweep_command(&cfg, param, &values, &seeds, &out)?;
            println!("wrote {} sweep point(s) to {}", results.len(), out.display());
        }
        _ => unreachable!("subcommand required"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = command().get_matches();
    match dispatch(matches) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "key": e.key(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::from(if e.kind() == "config" { 2 } else { 1 })
        }
    }
}
