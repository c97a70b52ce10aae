//! Command-line interface.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rbs3_core::engine::LoadError;
use rbs3_core::lang::{parse_program, validate_program, Construct};
use rbs3_core::sim::generate;
use rbs3_core::tracking::{build_tracking_kb, CYCLIC_RULE};
use rbs3_core::{Engine, KnowledgeBase};
use serde_json::json;

use crate::formats::{
    parse_kv, read_registry, read_scenario, write_fire_log, write_records, write_truth,
};
use crate::replay::{replay, RejectKind, ReplayOptions, ReplayReport, Speed};
use crate::service::{render_rows, router, Presentation, SnapshotCell, Throttle};

#[derive(Parser, Debug)]
#[command(
    name = "rbs3",
    version,
    about = "Rule-based room-level tracking over sensor replays"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse and validate a knowledge base.
    Parse {
        #[arg(long)]
        kb: PathBuf,
    },
    /// Replay sensor records through the engine.
    Run(RunArgs),
    /// Replay to completion, then print one query's rows as JSON.
    Query(QueryArgs),
    /// Generate a replay file and ground truth from a scenario.
    Sim {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Pipeline {
    /// Knowledge base file; the built-in tracking KB when omitted.
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    replay: PathBuf,
    /// `max`, or a multiplier of recorded time.
    #[arg(long, default_value = "max")]
    speed: Speed,
    /// Assert traces of devices missing from the registry.
    #[arg(long)]
    pass_through: bool,
    /// Drop the cyclic-journey rule from the built-in KB.
    #[arg(long)]
    no_cyclic_pruning: bool,
}

#[derive(Args, Debug)]
struct Output {
    /// Milliseconds subtracted at each corridor end in journey rows.
    #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(i64).range(0..))]
    delay_correction: i64,
    /// Keep bootstrap `dummyLoc` rows in location results.
    #[arg(long)]
    include_dummy: bool,
}

impl Output {
    fn presentation(&self) -> Presentation {
        Presentation {
            delay_correction_ms: self.delay_correction,
            include_dummy: self.include_dummy,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    pipeline: Pipeline,
    #[command(flatten)]
    output: Output,
    /// Serve JSON queries on HOST:PORT.
    #[arg(long)]
    serve: Option<String>,
    /// Write the fire log as JSON Lines.
    #[arg(long)]
    firelog: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[command(flatten)]
    pipeline: Pipeline,
    #[command(flatten)]
    output: Output,
    #[arg(long)]
    query: String,
    /// Query parameter as key=value; repeatable.
    #[arg(long = "arg")]
    args: Vec<String>,
}

/// Runs the CLI; returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().ansi().to_string();
            let _ = if code == 0 {
                write!(out, "{text}")
            } else {
                write!(err, "{text}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Parse { kb } => parse_cmd(&kb, out, err),
        Command::Run(a) => run_cmd(a, out, err),
        Command::Query(a) => query_cmd(a, out, err),
        Command::Sim {
            scenario,
            out: replay_out,
            truth,
        } => sim_cmd(&scenario, &replay_out, &truth),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}

fn parse_cmd(path: &Path, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let constructs = match parse_program(&text) {
        Ok(c) => c,
        Err(e) => {
            let (line, col) = e.position();
            writeln!(err, "{}:{line}:{col}: {e}", path.display())?;
            return Ok(1);
        }
    };
    let (_, diags) = validate_program(&constructs);
    if !diags.is_empty() {
        for d in &diags {
            writeln!(err, "{}: {d}", path.display())?;
        }
        return Ok(1);
    }
    let count = |f: fn(&Construct) -> bool| constructs.iter().filter(|c| f(c)).count();
    writeln!(
        out,
        "{}: {} templates, {} rules, {} queries, 0 diagnostics",
        path.display(),
        count(|c| matches!(c, Construct::Template(_))),
        count(|c| matches!(c, Construct::Rule(_))),
        count(|c| matches!(c, Construct::Query(_))),
    )?;
    Ok(0)
}

fn load_kb(p: &Pipeline) -> Result<KnowledgeBase> {
    let (text, origin) = match &p.kb {
        Some(path) => (
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?,
            path.display().to_string(),
        ),
        None => (
            build_tracking_kb().to_string(),
            "built-in tracking KB".to_string(),
        ),
    };
    let mut constructs = parse_program(&text).map_err(|e| {
        let (l, c) = e.position();
        anyhow::anyhow!("{origin}:{l}:{c}: {e}")
    })?;
    if p.no_cyclic_pruning {
        constructs.retain(|c| !matches!(c, Construct::Rule(r) if r.name == CYCLIC_RULE));
    }
    KnowledgeBase::load(&constructs).map_err(|e| match e {
        LoadError::Invalid(d) => {
            let lines: Vec<String> = d.iter().map(|d| d.to_string()).collect();
            anyhow::anyhow!("{origin}: {}", lines.join("; "))
        }
        other => anyhow::anyhow!("{origin}: {other}"),
    })
}

fn pipeline(
    p: &Pipeline,
    on_cycle: impl FnMut(&Engine),
    engine_out: &mut Option<Engine>,
) -> Result<ReplayReport> {
    let kb = Arc::new(load_kb(p)?);
    let registry = read_registry(&p.registry)?;
    let mut engine = Engine::new(kb.clone());
    for f in registry.initial_facts(&kb)? {
        engine.assert_fact(f)?;
    }
    engine.run(None);
    let file = File::open(&p.replay).with_context(|| format!("opening {}", p.replay.display()))?;
    let opts = ReplayOptions {
        speed: p.speed,
        pass_through: p.pass_through,
    };
    let report = replay(BufReader::new(file), &registry, &mut engine, opts, on_cycle)?;
    *engine_out = Some(engine);
    Ok(report)
}

fn report_problems(report: &ReplayReport, err: &mut dyn Write) -> Result<()> {
    for r in &report.rejects {
        match &r.kind {
            RejectKind::Malformed(m) => writeln!(err, "line {}: malformed record: {m}", r.line)?,
            RejectKind::OutOfOrder => {
                writeln!(err, "line {}: out-of-order record rejected", r.line)?
            }
        }
    }
    for e in &report.runtime_errors {
        writeln!(err, "firing {} ({}): {}", e.seq, e.rule, e.message)?;
    }
    Ok(())
}

fn summary(report: &ReplayReport, engine: &Engine) -> serde_json::Value {
    json!({
        "stats": report.stats,
        "cycles": report.cycles,
        "fired": engine.fire_log().len(),
        "facts": engine.facts().len(),
        "rejected_lines": report.rejects.len(),
        "runtime_errors": report.runtime_errors.len(),
    })
}

fn write_log(path: &Path, engine: &Engine) -> Result<()> {
    let mut w =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    write_fire_log(&mut w, engine.fire_log())?;
    w.flush()?;
    Ok(())
}

fn run_cmd(a: RunArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    if let Some(addr) = &a.serve {
        return serve_cmd(&a, addr, out, err);
    }
    let mut engine = None;
    let report = pipeline(&a.pipeline, |_| {}, &mut engine)?;
    let engine = engine.expect("pipeline produced an engine");
    report_problems(&report, err)?;
    if let Some(path) = &a.firelog {
        write_log(path, &engine)?;
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&summary(&report, &engine))?
    )?;
    Ok(0)
}

fn serve_cmd(a: &RunArgs, addr: &str, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let rt = tokio::runtime::Runtime::new()?;
    let listener = rt
        .block_on(tokio::net::TcpListener::bind(addr))
        .with_context(|| format!("binding {addr}"))?;
    writeln!(err, "listening on {}", listener.local_addr()?)?;
    let kb = Arc::new(load_kb(&a.pipeline)?);
    let cell = SnapshotCell::new(Engine::new(kb).snapshot());
    let app = router(cell.clone(), a.output.presentation());
    let server = rt.spawn(async move { axum::serve(listener, app).await });
    let mut throttle = Throttle::new(cell, Duration::from_millis(200));
    let mut engine = None;
    let report = pipeline(&a.pipeline, |e| throttle.offer(e), &mut engine)?;
    let engine = engine.expect("pipeline produced an engine");
    throttle.force(&engine);
    report_problems(&report, err)?;
    if let Some(path) = &a.firelog {
        write_log(path, &engine)?;
    }
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&summary(&report, &engine))?
    )?;
    out.flush()?;
    writeln!(err, "replay complete; serving until interrupted")?;
    rt.block_on(async {
        tokio::select! {
            r = server => r.map_err(anyhow::Error::from).and_then(|r| r.map_err(anyhow::Error::from)),
            r = tokio::signal::ctrl_c() => r.map_err(anyhow::Error::from),
        }
    })?;
    Ok(0)
}

fn query_cmd(a: QueryArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let args = parse_kv(&a.args)?;
    let mut engine = None;
    let report = pipeline(&a.pipeline, |_| {}, &mut engine)?;
    let engine = engine.expect("pipeline produced an engine");
    report_problems(&report, err)?;
    let rows = engine.run_query(&a.query, &args.into_iter().collect())?;
    let rendered = render_rows(&a.query, &rows, a.output.presentation());
    writeln!(out, "{}", serde_json::to_string_pretty(&rendered)?)?;
    Ok(0)
}

fn sim_cmd(scenario: &Path, replay_out: &Path, truth_out: &Path) -> Result<i32> {
    let s = read_scenario(scenario)?;
    let output = generate(&s)?;
    if replay_out == truth_out {
        bail!("--out and --truth must be different files");
    }
    let mut w = BufWriter::new(
        File::create(replay_out).with_context(|| format!("creating {}", replay_out.display()))?,
    );
    write_records(&mut w, &output.records)?;
    w.flush()?;
    let mut w = BufWriter::new(
        File::create(truth_out).with_context(|| format!("creating {}", truth_out.display()))?,
    );
    write_truth(&mut w, &output.truth)?;
    w.flush()?;
    Ok(0)
}
