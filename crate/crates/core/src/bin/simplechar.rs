use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use simplechar::cli::{exit_code, run, scenario_from_preset, Command, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "simplechar",
    version,
    about = "Directional Fourier-ODE solver and estimate harness"
)]
struct Args {
    /// analyze, solve, verify, study or report (overrides the config's command)
    command: Option<String>,
    /// JSON run configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Named preset; replaces the config's scenario
    #[arg(long)]
    preset: Option<String>,
    /// Grid points per axis for --preset
    #[arg(long)]
    resolution: Option<usize>,
    /// Also write the per-direction pieces u_k
    #[arg(long)]
    emit_pieces: bool,
}

fn build_config(args: &Args) -> simplechar::Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::from_json(&std::fs::read_to_string(p)?)?,
        None => {
            let cmd = args.command.as_deref().unwrap_or("solve");
            RunConfig::from_json(&format!(r#"{{"command": "{cmd}"}}"#))?
        }
    };
    if let Some(c) = &args.command {
        cfg.command = serde_json::from_value::<Command>(serde_json::Value::String(c.clone()))
            .map_err(|_| simplechar::Error::Config(format!("unknown command {c:?}")))?;
    }
    if let Some(name) = &args.preset {
        cfg.scenario = Some(scenario_from_preset(name, args.resolution)?);
    } else if args.resolution.is_some() {
        return Err(simplechar::Error::Config(
            "--resolution needs --preset".into(),
        ));
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let (Some(seed), Some(scn)) = (cfg.seed, cfg.scenario.as_mut()) {
        scn.seed = seed;
    }
    if args.out.is_some() {
        cfg.out = args.out.clone();
    }
    if args.threads.is_some() {
        cfg.threads = args.threads;
    }
    cfg.emit_pieces |= args.emit_pieces;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIMPLECHAR_LOG", "warn"))
        .init();
    let args = Args::parse();
    let cfg = match build_config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e) as u8);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    match run(&cfg, &out) {
        Ok(o) => {
            for p in &o.written {
                log::info!("wrote {}", p.display());
            }
            if let Some(code) = o.reported_error {
                eprintln!(
                    "certification failed; see {}",
                    out.join("analysis.json").display()
                );
                return ExitCode::from(code as u8);
            }
            if o.study_pass == Some(false) {
                eprintln!(
                    "study assertion failed; see {}",
                    out.join("study_summary.json").display()
                );
                return ExitCode::from(5);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
