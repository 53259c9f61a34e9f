use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use tracing_subscriber::EnvFilter;

use navai::service::{self, AppState, ServiceOptions};
use navai_core::interpreter::overlay_grid;
use navai_core::orchestrator::{run_suite, run_task, Config, Mode, Runtime, TaskKind, TaskSpec};
use navai_core::sim::{render, resolve_scene};

#[derive(Parser)]
#[command(name = "navai", version, about = "Run navigation tasks in the bundled simulator")]
struct Cli {
    /// Endpoint and defaults file (TOML or JSON). Oracle-only when omitted.
    #[arg(long, global = true, env = "NAVAI_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one task and write its report.
    Run {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        query: String,
        #[arg(long, value_parser = parse_mode, default_value = "oracle")]
        mode: Mode,
        #[arg(long, default_value_t = 25)]
        max_turns: u32,
        /// Label the oracle voters and controller aim for.
        #[arg(long)]
        target: Option<String>,
        /// Rotate from the first turn instead of classifying the query.
        #[arg(long)]
        scan: bool,
        #[arg(long, default_value_t = 45.0)]
        rotation_step: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every task file of a directory.
    Suite {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full reports as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Render the start view of a scene.
    Render {
        #[arg(long)]
        scene: String,
        #[arg(long)]
        out: PathBuf,
        /// Draw the labelled coordinate grid on top.
        #[arg(long)]
        grid: bool,
    },
    /// Serve the live agent over HTTP.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, default_value = "ship")]
        scene: String,
        #[arg(long, value_parser = parse_mode, default_value = "oracle")]
        mode: Mode,
        #[arg(long, default_value_t = 25)]
        max_turns: u32,
        #[arg(long, default_value_t = 0)]
        turn_delay_ms: u64,
    },
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown mode {s:?}; expected oracle, llm or mixed"))
}

fn runtime(config: Option<&PathBuf>) -> Result<Runtime> {
    match config {
        None => Ok(Runtime::oracle()),
        Some(p) => Ok(Runtime::from_config(Config::load(p)?)?),
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run {
            scene,
            query,
            mode,
            max_turns,
            target,
            scan,
            rotation_step,
            seed,
            out,
        } => {
            let rt = runtime(cli.config.as_ref())?;
            let mut spec = TaskSpec::new(scene, query, mode);
            spec.target_label = target;
            spec.max_turns = max_turns;
            spec.rotation_step = rotation_step;
            spec.seed = seed;
            if scan {
                spec.kind = TaskKind::Scan;
            }
            let report = run_task(&spec, &rt);
            rt.save_cassette()?;
            match out {
                Some(p) => std::fs::write(&p, report.to_json()).with_context(|| format!("write {}", p.display()))?,
                None => println!("{}", report.to_json()),
            }
            eprintln!(
                "{}: success={} turns={} termination={}",
                report.environment, report.success, report.turns, report.termination
            );
            if let Some(d) = &report.diagnostic {
                eprintln!("diagnostic: {d}");
            }
            Ok(if report.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Suite { dir, out, json } => {
            let rt = runtime(cli.config.as_ref())?;
            let res = run_suite(&dir, &rt)?;
            rt.save_cassette()?;
            std::fs::write(&out, res.to_csv()).with_context(|| format!("write {}", out.display()))?;
            if let Some(p) = json {
                std::fs::write(&p, res.to_json()).with_context(|| format!("write {}", p.display()))?;
            }
            eprintln!("{}/{} tasks succeeded", res.successes(), res.reports.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Render { scene, out, grid } => {
            let cfg = match &cli.config {
                Some(p) => Config::load(p)?,
                None => Config::default(),
            };
            let s = resolve_scene(&scene, None)?;
            let mut frame = render(
                &s,
                &s.agent_start(),
                cfg.defaults.frame_width,
                cfg.defaults.frame_height,
            );
            if grid {
                frame = overlay_grid(&frame, &cfg.grid()?)?;
            }
            std::fs::write(&out, frame.to_png()?).with_context(|| format!("write {}", out.display()))?;
            println!("{}", frame.digest());
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve {
            port,
            host,
            scene,
            mode,
            max_turns,
            turn_delay_ms,
        } => {
            if max_turns == 0 {
                bail!("--max-turns must be at least 1");
            }
            let rt = runtime(cli.config.as_ref())?;
            let mut options = ServiceOptions::new(scene);
            options.mode = mode;
            options.max_turns = max_turns;
            options.turn_delay = Duration::from_millis(turn_delay_ms);
            let state = AppState::new(rt, options).map_err(anyhow::Error::msg)?;
            let tokio = tokio::runtime::Runtime::new()?;
            tokio.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .with_context(|| format!("bind {host}:{port}"))?;
                eprintln!("listening on http://{}", listener.local_addr()?);
                service::serve(listener, state).await?;
                Ok::<_, anyhow::Error>(())
            })?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
