//! Command-line front end. Every subcommand talks to the HTTP service:
//! one named by --server, or one spawned in-process on a loopback port.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use restpilot_client::Client;
use restpilot_core::agent::DEFAULT_STEP_BUDGET;
use restpilot_core::api::{BenchRequest, BenchResponse, SessionRequest, SessionResponse};
use restpilot_core::config::{BackendConfig, RunConfig};
use restpilot_core::{HttpMode, SessionStatus};
use restpilot_server::AppState;

#[derive(Parser)]
#[command(
    name = "restpilot",
    version,
    about = "Connect a text-completion model to REST services described by OpenAPI documents"
)]
struct Cli {
    /// Base URL of a running service; omitted, the command starts one
    /// in-process on a loopback port.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one instruction against a service.
    Run(RunArgs),
    /// Run one instruction strictly from recordings, proving no network use.
    Replay(RunArgs),
    /// Score a dataset of instructions and report the metrics.
    Bench(BenchArgs),
    /// Show how a catalog is presented to each model role.
    Inspect(InspectArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Serve only the local mock services.
    MockServe(MockServeArgs),
}

#[derive(Args)]
struct RunArgs {
    /// The instruction to carry out.
    instruction: String,
    /// Full run configuration as JSON; explicit flags override its fields,
    /// and relative paths inside it resolve against its directory.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// OpenAPI document describing the service; required unless --config
    /// names one.
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Scripted completions to replay instead of a live model.
    #[arg(long, value_name = "SCRIPT")]
    replay: Option<PathBuf>,
    /// Backend description file (JSON), an alternative to --replay and
    /// --live-url. Relative script paths resolve against its directory.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["replay", "live_url"])]
    backend: Option<PathBuf>,
    /// Completion endpoint URL for a live model.
    #[arg(long, value_name = "URL", conflicts_with = "replay")]
    live_url: Option<String>,
    /// Model name sent to the live endpoint.
    #[arg(long, value_name = "NAME", requires = "live_url")]
    live_model: Option<String>,
    /// Environment variable holding the model API key; never the key itself.
    #[arg(long, value_name = "VAR")]
    api_key_env: Option<String>,
    /// Recorded HTTP traffic: replayed in replay mode, written in record mode.
    #[arg(long, value_name = "FILE")]
    cassette: Option<PathBuf>,
    /// HTTP mode override.
    #[arg(long, value_parser = parse_mode, value_name = "replay|record|live")]
    mode: Option<HttpMode>,
    /// Refuse any HTTP request that leaves this machine.
    #[arg(long)]
    loopback_only: bool,
    /// Base URL override pointing calls at a different host.
    #[arg(long, value_name = "URL")]
    base_url: Option<String>,
    /// Planner step budget (default 10).
    #[arg(long)]
    budget: Option<usize>,
    /// Directory of prompt templates overriding the built-in set.
    #[arg(long, value_name = "DIR")]
    prompts_dir: Option<PathBuf>,
    /// Zero out timestamps so repeated runs produce identical bytes.
    #[arg(long)]
    frozen_clock: bool,
    /// Write the full session as JSON here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Write the prompt/completion transcript here.
    #[arg(long, value_name = "FILE")]
    transcript: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset of instructions, one JSON object per line.
    #[arg(long)]
    dataset: PathBuf,
    /// OpenAPI document describing the service.
    #[arg(long)]
    catalog: PathBuf,
    /// Validate the dataset and print its composition without running.
    #[arg(long)]
    stats_only: bool,
    /// Compare each run against the item's recorded expectations.
    #[arg(long)]
    check: bool,
    /// Completion endpoint URL for a live model; omitted, items replay
    /// their recorded scripts.
    #[arg(long, value_name = "URL")]
    live_url: Option<String>,
    /// Model name sent to the live endpoint.
    #[arg(long, value_name = "NAME", requires = "live_url")]
    live_model: Option<String>,
    /// Environment variable holding the model API key; never the key itself.
    #[arg(long, value_name = "VAR")]
    api_key_env: Option<String>,
    /// Base URL override pointing calls at a different host.
    #[arg(long, value_name = "URL")]
    base_url: Option<String>,
    /// Planner step budget.
    #[arg(long, default_value_t = DEFAULT_STEP_BUDGET)]
    budget: usize,
    /// Directory of prompt templates overriding the built-in set.
    #[arg(long, value_name = "DIR")]
    prompts_dir: Option<PathBuf>,
    /// Zero out timestamps so repeated runs produce identical bytes.
    #[arg(long)]
    frozen_clock: bool,
    /// Merge this many synthetic distractor endpoints into the catalog
    /// before running, to probe selector robustness.
    #[arg(long, value_name = "K", default_value_t = 0)]
    noise_endpoints: usize,
    /// Write the full report as JSON here.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct InspectArgs {
    /// OpenAPI document to inspect.
    #[arg(long)]
    catalog: PathBuf,
    /// Print the one-line-per-endpoint digest shown to the selector.
    #[arg(long)]
    digest: bool,
    /// Print the full documentation the caller would get for this plan text.
    #[arg(long, value_name = "TEXT")]
    plan: Option<String>,
    /// Match a concrete call like "GET /person/1769/movie_credits" to its
    /// documented route.
    #[arg(long = "match", value_name = "METHOD PATH")]
    match_call: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    /// Address to bind; port 0 picks a free one.
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
    /// OpenAPI document to register at startup, as NAME=PATH. Repeatable.
    #[arg(long = "catalog", value_name = "NAME=PATH")]
    catalogs: Vec<String>,
}

#[derive(Args)]
struct MockServeArgs {
    /// Address to bind; port 0 picks a free one.
    #[arg(long, default_value = "127.0.0.1:8081")]
    addr: SocketAddr,
}

fn parse_mode(s: &str) -> Result<HttpMode, String> {
    match s {
        "replay" => Ok(HttpMode::Replay),
        "record" => Ok(HttpMode::Record),
        "live" => Ok(HttpMode::Live),
        other => Err(format!("unknown mode '{other}' (use replay, record, or live)")),
    }
}

/// The server reads paths from its own working directory, so everything
/// sent to it must be absolute.
fn absolutize(path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        std::env::current_dir()
            .unwrap_or_default()
            .join(path)
    }
}

fn live_backend(
    url: &str,
    model: Option<&str>,
    api_key_env: Option<&str>,
) -> Result<BackendConfig> {
    let model = model.context("--live-url requires --live-model")?;
    let mut config = json!({"kind": "live", "url": url, "model": model});
    if let Some(var) = api_key_env {
        config["api_key_env"] = json!(var);
    }
    Ok(serde_json::from_value(config)?)
}

fn backend_from_file(path: &Path) -> Result<BackendConfig> {
    let path = absolutize(path);
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading backend file {}", path.display()))?;
    let backend: BackendConfig = serde_json::from_str(&text)
        .with_context(|| format!("backend file {}", path.display()))?;
    Ok(match backend {
        // A relative script travels with the file that names it.
        BackendConfig::Replay { script } if script.is_relative() => BackendConfig::Replay {
            script: path.parent().unwrap_or(Path::new(".")).join(script),
        },
        other => other,
    })
}

fn fmt_rate(rate: Option<f64>) -> String {
    match rate {
        Some(r) => format!("{r:.3}"),
        None => "n/a".to_string(),
    }
}

fn kind_name<T: serde::Serialize>(kind: &T) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_else(|| "unknown".to_string())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn print_session(resp: &SessionResponse) {
    let session = &resp.session;
    let status = match session.status {
        SessionStatus::Finished => "finished",
        SessionStatus::Failed => "failed",
    };
    println!("status: {status}");
    if let Some(answer) = &session.final_answer {
        println!("final answer: {answer}");
    }
    if let Some(failure) = &session.failure {
        println!("failure: {} ({})", kind_name(&failure.kind), failure.detail);
        for (method, route) in &failure.attempted_routes {
            println!("  attempted: {method} {route}");
        }
    }
    println!(
        "steps: {}, calls: {}, dispatches: {} ({} off loopback)",
        session.steps.len(),
        session.calls_made.len(),
        resp.dispatch_total,
        resp.dispatch_non_loopback
    );
    for call in &session.calls_made {
        println!("  {} {} -> {}", call.method, call.path, call.status);
    }
}

fn print_bench(resp: &BenchResponse, checked: bool) {
    let stats = &resp.stats;
    let histogram = stats
        .histogram
        .iter()
        .map(|(len, n)| format!("{len}:{n}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!(
        "dataset: {} items, mean gold length {:.2}, histogram {histogram}",
        stats.n, stats.mean_gold_length
    );
    if resp.validation_problems.is_empty() {
        println!("validation: ok");
    } else {
        println!("validation: {} problems", resp.validation_problems.len());
        for problem in &resp.validation_problems {
            println!("  {problem}");
        }
    }
    if let Some(report) = &resp.report {
        println!(
            "success rate: {} ({}/{} judged, {} need human)",
            fmt_rate(report.success_rate),
            report.n_success,
            report.n - report.n_needs_human,
            report.n_needs_human
        );
        println!("correct path rate: {}", fmt_rate(report.correct_path_rate));
        match report.delta_solution_len {
            Some(delta) => println!("delta solution length: {delta:+.2}"),
            None => println!("delta solution length: n/a"),
        }
    }
    if checked {
        if resp.expectation_failures.is_empty() {
            println!("expectations: ok");
        } else {
            println!("expectation mismatches:");
            for failure in &resp.expectation_failures {
                println!("  {failure}");
            }
        }
    }
}

/// A client for --server, or one backed by an in-process service. The
/// service task dies with the runtime; no cleanup needed.
async fn connect(server: &Option<String>) -> Result<Client> {
    match server {
        Some(url) => Ok(Client::new(url.clone())),
        None => {
            let (addr, _handle) =
                restpilot_server::spawn("127.0.0.1:0".parse().unwrap(), AppState::new()).await?;
            Ok(Client::new(format!("http://{addr}")))
        }
    }
}

impl RunArgs {
    fn to_config(&self, enforce_replay: bool) -> Result<RunConfig> {
        let flag_backend = match (&self.backend, &self.replay, &self.live_url) {
            (None, None, None) => None,
            (Some(file), None, None) => Some(backend_from_file(file)?),
            (None, Some(script), None) => Some(BackendConfig::Replay {
                script: absolutize(script),
            }),
            (None, None, Some(url)) => Some(live_backend(
                url,
                self.live_model.as_deref(),
                self.api_key_env.as_deref(),
            )?),
            _ => unreachable!("clap conflicts_with"),
        };

        let mut config = match &self.config {
            Some(file) => {
                let file = absolutize(file);
                let text = std::fs::read_to_string(&file)
                    .with_context(|| format!("reading config file {}", file.display()))?;
                let config: RunConfig = serde_json::from_str(&text)
                    .with_context(|| format!("config file {}", file.display()))?;
                config.resolved_against(file.parent().unwrap_or(Path::new(".")))
            }
            None => RunConfig {
                catalog: PathBuf::new(),
                base_url: None,
                backend: flag_backend.clone().context(
                    "provide --replay SCRIPT, --backend FILE, or --live-url and --live-model",
                )?,
                http: Default::default(),
                step_budget: DEFAULT_STEP_BUDGET,
                prompts_dir: None,
                frozen_clock: false,
                noise_endpoints: 0,
                context_window: None,
                transcript: None,
            },
        };

        // Explicit flags override whatever the config file said.
        if let Some(backend) = flag_backend {
            config.backend = backend;
        }
        match &self.catalog {
            Some(path) => config.catalog = absolutize(path),
            None if config.catalog.as_os_str().is_empty() => {
                bail!("provide --catalog, or --config naming one")
            }
            None => {}
        }
        if let Some(cassette) = &self.cassette {
            config.http.cassette = Some(absolutize(cassette));
        }
        if let Some(mode) = self.mode {
            config.http.mode = Some(mode);
        }
        if self.loopback_only {
            config.http.loopback_only = true;
        }
        if let Some(url) = &self.base_url {
            config.base_url = Some(url.clone());
        }
        if let Some(budget) = self.budget {
            config.step_budget = budget;
        }
        if let Some(dir) = &self.prompts_dir {
            config.prompts_dir = Some(absolutize(dir));
        }
        if self.frozen_clock {
            config.frozen_clock = true;
        }
        if let Some(path) = &self.transcript {
            config.transcript = Some(absolutize(path));
        }

        if enforce_replay {
            if !matches!(config.backend, BackendConfig::Replay { .. }) {
                bail!("replay takes a replay backend, not a live model");
            }
            config.http.mode = Some(HttpMode::Replay);
        }
        Ok(config)
    }
}

async fn cmd_run(args: &RunArgs, client: &Client, enforce_replay: bool) -> Result<ExitCode> {
    let config = args.to_config(enforce_replay)?;
    let request = SessionRequest {
        instruction: args.instruction.clone(),
        config,
    };
    let resp = client.run_session(&request).await?;
    print_session(&resp);
    if let Some(out) = &args.out {
        write_json(&absolutize(out), &resp)?;
    }
    if enforce_replay && resp.dispatch_total > 0 {
        println!("replay dispatched {} real requests", resp.dispatch_total);
        return Ok(ExitCode::from(1));
    }
    Ok(match resp.session.status {
        SessionStatus::Finished => ExitCode::SUCCESS,
        SessionStatus::Failed => ExitCode::from(1),
    })
}

async fn cmd_bench(args: &BenchArgs, client: &Client) -> Result<ExitCode> {
    let backend = match &args.live_url {
        Some(url) => live_backend(url, args.live_model.as_deref(), args.api_key_env.as_deref())?,
        // Placeholder script; each item swaps in its own recordings.
        None => BackendConfig::Replay {
            script: PathBuf::new(),
        },
    };
    let config = RunConfig {
        catalog: absolutize(&args.catalog),
        base_url: args.base_url.clone(),
        backend,
        http: Default::default(),
        step_budget: args.budget,
        prompts_dir: args.prompts_dir.as_deref().map(absolutize),
        frozen_clock: args.frozen_clock,
        noise_endpoints: args.noise_endpoints,
        context_window: None,
        transcript: None,
    };
    let request = BenchRequest {
        dataset: Some(absolutize(&args.dataset)),
        items: None,
        config,
        stats_only: args.stats_only,
        check: args.check,
    };
    let resp = client.bench(&request).await?;
    print_bench(&resp, args.check);
    if let Some(out) = &args.out {
        write_json(&absolutize(out), &resp)?;
    }
    let failed = !resp.validation_problems.is_empty() || !resp.expectation_failures.is_empty();
    Ok(if failed {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

async fn cmd_inspect(args: &InspectArgs, client: &Client) -> Result<ExitCode> {
    let path = absolutize(&args.catalog);
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "catalog".to_string());
    let text =
        std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
    let summary = client.register_catalog(&name, &text).await?;

    let specific = args.digest || args.plan.is_some() || args.match_call.is_some();
    if !specific {
        println!(
            "{}: {} endpoints at {}",
            summary.name, summary.endpoints, summary.base_url
        );
        let detail = client.catalog(&name).await?;
        for endpoint in &detail.endpoints {
            println!("  {} {}", endpoint.method, endpoint.route);
        }
        return Ok(ExitCode::SUCCESS);
    }

    if args.digest {
        print!("{}", client.digest(&name).await?);
    }
    if let Some(plan) = &args.plan {
        println!("{}", client.plan_docs(&name, plan).await?);
    }
    if let Some(call) = &args.match_call {
        let (method, path) = call
            .split_once(' ')
            .context("--match wants \"METHOD /path\"")?;
        let matched = client.match_route(&name, method, path.trim()).await?;
        if !matched.matched {
            println!("no documented route matches {method} {path}");
            return Ok(ExitCode::from(1));
        }
        println!("{}", matched.label.as_deref().unwrap_or("matched"));
        for (param, value) in &matched.bindings {
            println!("  {param} = {value}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

async fn cmd_serve(args: &ServeArgs) -> Result<ExitCode> {
    let state = AppState::new();
    for pair in &args.catalogs {
        let (name, path) = pair
            .split_once('=')
            .with_context(|| format!("--catalog wants NAME=PATH, got '{pair}'"))?;
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {path}"))?;
        let catalog = restpilot_core::catalog::parse_catalog(name, &text)?;
        state.register(catalog).await;
    }
    let (addr, handle) = restpilot_server::spawn(args.addr, state).await?;
    println!("listening on http://{addr}");
    handle.await?;
    Ok(ExitCode::SUCCESS)
}

async fn cmd_mock_serve(args: &MockServeArgs) -> Result<ExitCode> {
    let listener = tokio::net::TcpListener::bind(args.addr).await?;
    let addr = listener.local_addr()?;
    println!("movie database at http://{addr}/3");
    println!("music player at http://{addr}/v1");
    axum::serve(listener, restpilot_mock::combined_router()).await?;
    Ok(ExitCode::SUCCESS)
}

async fn dispatch(cli: Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Run(args) => cmd_run(args, &connect(&cli.server).await?, false).await,
        Command::Replay(args) => cmd_run(args, &connect(&cli.server).await?, true).await,
        Command::Bench(args) => cmd_bench(args, &connect(&cli.server).await?).await,
        Command::Inspect(args) => cmd_inspect(args, &connect(&cli.server).await?).await,
        Command::Serve(args) => cmd_serve(args).await,
        Command::MockServe(args) => cmd_mock_serve(args).await,
    }
}

#[tokio::main]
async fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli).await {
        Ok(code) => code,
        // Config and transport problems; failed outcomes exit 1 above.
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_parser_accepts_the_three_modes() {
        assert_eq!(parse_mode("replay").unwrap(), HttpMode::Replay);
        assert_eq!(parse_mode("record").unwrap(), HttpMode::Record);
        assert_eq!(parse_mode("live").unwrap(), HttpMode::Live);
        assert!(parse_mode("offline").is_err());
    }

    #[test]
    fn replay_subcommand_forces_replay_http_mode() {
        let cli = Cli::parse_from([
            "restpilot",
            "replay",
            "do the thing",
            "--catalog",
            "cat.yaml",
            "--replay",
            "script.jsonl",
            "--cassette",
            "traffic.jsonl",
            "--mode",
            "live",
        ]);
        let Command::Replay(args) = &cli.command else {
            panic!("expected replay");
        };
        let config = args.to_config(true).unwrap();
        assert_eq!(config.http_mode(), HttpMode::Replay);
        assert!(config.catalog.is_absolute());
    }

    #[test]
    fn run_without_a_backend_is_rejected() {
        let cli = Cli::parse_from([
            "restpilot",
            "run",
            "do the thing",
            "--catalog",
            "cat.yaml",
        ]);
        let Command::Run(args) = &cli.command else {
            panic!("expected run");
        };
        assert!(args.to_config(false).is_err());
    }

    #[test]
    fn config_file_supplies_defaults_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("run.json");
        std::fs::write(
            &file,
            r#"{
                "catalog": "cat.yaml",
                "backend": {"kind": "replay", "script": "script.jsonl"},
                "http": {"cassette": "traffic.jsonl",
                         "auth": {"name": "Authorization",
                                  "value_template": "Bearer ${TMDB_ACCESS_TOKEN}"}},
                "step_budget": 4
            }"#,
        )
        .unwrap();
        let cli = Cli::parse_from([
            "restpilot",
            "run",
            "do the thing",
            "--config",
            file.to_str().unwrap(),
            "--budget",
            "7",
        ]);
        let Command::Run(args) = &cli.command else {
            panic!("expected run");
        };
        let config = args.to_config(false).unwrap();
        assert_eq!(config.catalog, dir.path().join("cat.yaml"));
        assert_eq!(config.step_budget, 7, "flag beats file");
        assert_eq!(
            config.http.cassette,
            Some(dir.path().join("traffic.jsonl"))
        );
        // Credentials stay env-var names; the value resolves only at dispatch.
        let auth = config.http.auth.as_ref().unwrap();
        assert_eq!(auth.value_template, "Bearer ${TMDB_ACCESS_TOKEN}");
    }

    #[test]
    fn backend_file_names_the_backend_and_anchors_its_script() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("backend.json");
        std::fs::write(&file, r#"{"kind": "replay", "script": "script.jsonl"}"#).unwrap();
        let cli = Cli::parse_from([
            "restpilot",
            "run",
            "do the thing",
            "--catalog",
            "cat.yaml",
            "--cassette",
            "traffic.jsonl",
            "--backend",
            file.to_str().unwrap(),
        ]);
        let Command::Run(args) = &cli.command else {
            panic!("expected run");
        };
        let config = args.to_config(false).unwrap();
        let BackendConfig::Replay { script } = &config.backend else {
            panic!("expected replay backend");
        };
        assert_eq!(script, &dir.path().join("script.jsonl"));

        std::fs::write(
            &file,
            r#"{"kind": "live", "url": "http://model.test/v1", "model": "m"}"#,
        )
        .unwrap();
        let err = args.to_config(true).unwrap_err();
        assert!(err.to_string().contains("replay"), "{err}");
    }
}
