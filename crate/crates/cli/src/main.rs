//! `danse`: run, synthesize, verify and export Danse-doigts sessions headlessly.
//!
//! stdout carries JSON only; diagnostics go to stderr. Exit codes: 0 ok,
//! 1 assertion failure, 2 input error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use danse_core::game::{load_config, SessionConfig};
use danse_core::replay::{
    load_model, read_touch_trace, replay, synth_trace, verify_determinism, write_touch_trace, ReplayOptions,
};
use danse_core::telemetry::{flush, HttpTransport, RetryPolicy, SessionStats, SpoolStore, SystemClock};
use danse_core::TouchSample;

#[derive(Parser)]
#[command(name = "danse", version, about = "Headless Danse-doigts session harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a touch trace and print the session statistics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Collect endpoint; falls back to DANSE_COLLECT_URL, then the config.
        #[arg(long)]
        collect: Option<String>,
        /// Spool directory for offline storage of the stats.
        #[arg(long)]
        spool: Option<PathBuf>,
        /// Also write the full instant trace as JSONL.
        #[arg(long)]
        instants: Option<PathBuf>,
    },
    /// Generate a touch trace from a simulated player.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay N times (observer on and off) and compare game events.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Reseed every run from the wall clock. Must fail; checks the harness.
        #[arg(long, hide = true)]
        mutant_wall_clock_seed: bool,
    },
    /// Write every spooled session as one JSON array.
    Export {
        #[arg(long)]
        spool: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Assertion(String),
    Input(String),
}

type CmdResult = Result<Value, Failure>;

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Input(format!("{context}: {e}"))
}

fn is_stdio(p: &PathBuf) -> bool {
    p.as_os_str() == "-"
}

fn read_all(path: &PathBuf) -> Result<Vec<u8>, Failure> {
    let mut buf = Vec::new();
    if is_stdio(path) {
        io::stdin().read_to_end(&mut buf).map_err(input("stdin"))?;
    } else {
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut buf))
            .map_err(input(&path.display().to_string()))?;
    }
    Ok(buf)
}

fn open_out(path: &PathBuf) -> Result<Box<dyn Write + Send>, Failure> {
    if is_stdio(path) {
        Ok(Box::new(io::stdout()))
    } else {
        let f = File::create(path).map_err(input(&path.display().to_string()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn check_stdin_once(paths: &[&PathBuf]) -> Result<(), Failure> {
    if paths.iter().filter(|p| is_stdio(p)).count() > 1 {
        return Err(Failure::Input("only one input may be read from stdin".into()));
    }
    Ok(())
}

fn config_from(path: &PathBuf) -> Result<SessionConfig, Failure> {
    let bytes = read_all(path)?;
    load_config(&bytes).map_err(|e| Failure::Input(format!("config {}: {e}", path.display())))
}

fn trace_from(path: &PathBuf) -> Result<Vec<TouchSample>, Failure> {
    let name = path.display().to_string();
    if is_stdio(path) {
        read_touch_trace(io::stdin().lock()).map_err(input(&name))
    } else {
        let f = File::open(path).map_err(input(&name))?;
        read_touch_trace(BufReader::new(f)).map_err(input(&name))
    }
}

fn run(
    config: PathBuf,
    trace: PathBuf,
    collect: Option<String>,
    spool: Option<PathBuf>,
    instants: Option<PathBuf>,
) -> CmdResult {
    check_stdin_once(&[&config, &trace])?;
    if instants.as_ref().is_some_and(is_stdio) {
        return Err(Failure::Input("--instants cannot be stdout, which carries the result".into()));
    }
    let cfg = config_from(&config)?;
    let samples = trace_from(&trace)?;
    let instant_writer = instants.as_ref().map(open_out).transpose()?;
    let outcome = replay(
        &cfg,
        &samples,
        ReplayOptions {
            observe: true,
            keep_game_lines: false,
            instant_writer,
        },
    );
    let stats = outcome.stats.clone().expect("observer attached");
    let mut out = json!({
        "session_id": outcome.session_id,
        "instants": outcome.instants,
        "completed": outcome.completed,
        "trace_digest": outcome.trace_digest,
        "game_event_digest": outcome.game_event_digest,
        "anomalies": outcome.anomalies,
        "errors": outcome.errors,
        "stats": stats,
    });
    for e in &outcome.errors {
        eprintln!("danse: reaction error: {e}");
    }

    let endpoint = collect
        .or_else(|| danse_core::telemetry::resolve_endpoint(cfg.collect_url.as_deref()));
    // Without a spool directory, uploads go through a throwaway one.
    let scratch;
    let store_dir = match &spool {
        Some(dir) => dir.clone(),
        None if endpoint.is_some() => {
            scratch = tempdir()?;
            scratch.clone()
        }
        None => return Ok(out),
    };
    let store = SpoolStore::open(&store_dir).map_err(|e| spool_failure(&mut out, e))?;
    let id = store.spool(&stats).map_err(|e| spool_failure(&mut out, e))?;
    if spool.is_some() {
        out["spooled"] = json!({ "id": id, "dir": store_dir.display().to_string() });
    }
    if let Some(endpoint) = endpoint {
        let transport = HttpTransport::new(&endpoint);
        let results = flush(&store, &transport, &SystemClock, &RetryPolicy::default())
            .map_err(|e| spool_failure(&mut out, e))?;
        for r in &results {
            if let danse_core::telemetry::FlushOutcome::Failed { error, .. } = &r.outcome {
                eprintln!("danse: upload of {} failed: {error}", r.session_id);
            }
        }
        out["upload"] = json!(results);
    }
    if spool.is_none() {
        let _ = std::fs::remove_dir_all(&store_dir);
    }
    Ok(out)
}

fn tempdir() -> Result<PathBuf, Failure> {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_nanos())
        .unwrap_or(0);
    let dir = std::env::temp_dir().join(format!("danse-spool-{}-{nanos}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(input("temporary spool"))?;
    Ok(dir)
}

/// Spool failures do not hide the session result: it is printed, then the
/// command fails as an input error.
fn spool_failure(out: &mut Value, e: danse_core::telemetry::SpoolError) -> Failure {
    out["spool_error"] = json!(e.to_string());
    println!("{out}");
    Failure::Input(format!("spool: {e}"))
}

fn synth(config: PathBuf, model: PathBuf, out: PathBuf) -> CmdResult {
    check_stdin_once(&[&config, &model])?;
    let cfg = config_from(&config)?;
    let model_bytes = read_all(&model)?;
    let m = load_model(&model_bytes).map_err(|e| Failure::Input(format!("model {}: {e}", model.display())))?;
    let samples = synth_trace(&cfg, &m);
    let mut w = open_out(&out)?;
    write_touch_trace(&mut w, &samples).map_err(input(&out.display().to_string()))?;
    let summary = json!({ "samples": samples.len(), "out": out.display().to_string() });
    if is_stdio(&out) {
        // stdout holds the trace itself.
        eprintln!("{summary}");
        return Ok(Value::Null);
    }
    Ok(summary)
}

fn verify(config: PathBuf, trace: PathBuf, runs: usize, mutant: bool) -> CmdResult {
    if runs < 2 {
        return Err(Failure::Input("--runs must be at least 2".into()));
    }
    check_stdin_once(&[&config, &trace])?;
    let cfg = config_from(&config)?;
    let samples = trace_from(&trace)?;
    let report = verify_determinism(&cfg, &samples, runs, |_, base| {
        let mut c = base.clone();
        if mutant {
            c.rng_seed = SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_nanos() as u64)
                .unwrap_or(0);
        }
        c
    });
    let value = json!(report);
    match &report.divergence {
        None => Ok(value),
        Some(d) => {
            println!("{value}");
            Err(Failure::Assertion(format!(
                "run {} diverged at instant {}: expected {} got {}",
                d.run,
                d.instant,
                d.expected.as_deref().unwrap_or("<end of run>"),
                d.actual.as_deref().unwrap_or("<end of run>"),
            )))
        }
    }
}

fn export(spool: PathBuf, out: PathBuf) -> CmdResult {
    if !spool.is_dir() {
        return Err(Failure::Input(format!("{}: not a spool directory", spool.display())));
    }
    let store = SpoolStore::open(&spool).map_err(input("spool"))?;
    let ids = store.list().map_err(input("spool"))?;
    let mut sessions: Vec<SessionStats> = Vec::with_capacity(ids.len());
    for id in &ids {
        sessions.push(store.load(id).map_err(input("spool"))?.stats);
    }
    let mut w = open_out(&out)?;
    serde_json::to_writer(&mut w, &sessions)
        .map_err(|e| e.to_string())
        .and_then(|_| w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| e.to_string()))
        .map_err(input(&out.display().to_string()))?;
    if is_stdio(&out) {
        return Ok(Value::Null);
    }
    Ok(json!({ "exported": sessions.len(), "out": out.display().to_string() }))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            trace,
            collect,
            spool,
            instants,
        } => run(config, trace, collect, spool, instants),
        Command::Synth { config, model, out } => synth(config, model, out),
        Command::Verify {
            config,
            trace,
            runs,
            mutant_wall_clock_seed,
        } => verify(config, trace, runs, mutant_wall_clock_seed),
        Command::Export { spool, out } => export(spool, out),
    };
    match result {
        Ok(Value::Null) => ExitCode::SUCCESS,
        Ok(value) => {
            println!("{value}");
            ExitCode::SUCCESS
        }
        Err(Failure::Assertion(msg)) => {
            eprintln!("danse: assertion failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("danse: error: {msg}");
            ExitCode::from(2)
        }
    }
}
