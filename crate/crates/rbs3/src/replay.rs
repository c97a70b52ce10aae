//! Feeding replay files through the engine.
//!
//! A reader thread parses the file and hands one timestamp cohort at a time
//! to the engine through a bounded queue, sleeping between cohorts when
//! paced. The engine side asserts the cohort and runs to quiescence.

use std::io::BufRead;
use std::sync::mpsc::sync_channel;
use std::thread;
use std::time::Duration;

use anyhow::Result;
use rbs3_core::engine::RuntimeError;
use rbs3_core::ingest::{FeedStats, Feeder, Registry, SensorRecord};
use rbs3_core::Engine;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Speed {
    Max,
    /// Replay-time multiplier; 2.0 replays twice as fast as recorded.
    Factor(f64),
}

impl std::str::FromStr for Speed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "max" {
            return Ok(Speed::Max);
        }
        match s.parse::<f64>() {
            Ok(x) if x > 0.0 && x.is_finite() => Ok(Speed::Factor(x)),
            _ => Err(format!(
                "speed must be `max` or a positive number, got `{s}`"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RejectKind {
    Malformed(String),
    OutOfOrder,
}

/// A replay line that was not asserted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based.
    pub line: usize,
    pub kind: RejectKind,
}

#[derive(Debug, Clone, Default)]
pub struct ReplayReport {
    pub stats: FeedStats,
    pub rejects: Vec<Reject>,
    pub runtime_errors: Vec<RuntimeError>,
    pub cycles: usize,
    pub fired: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ReplayOptions {
    pub speed: Speed,
    pub pass_through: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            speed: Speed::Max,
            pass_through: false,
        }
    }
}

type Item = (usize, Result<SensorRecord, String>);

/// Replays `input` into `engine`. `on_cycle` sees the engine after every
/// cohort has been run to quiescence.
pub fn replay<R: BufRead + Send>(
    input: R,
    registry: &Registry,
    engine: &mut Engine,
    opts: ReplayOptions,
    mut on_cycle: impl FnMut(&Engine),
) -> Result<ReplayReport> {
    let (tx, rx) = sync_channel::<Vec<Item>>(64);
    let mut report = ReplayReport::default();
    thread::scope(|s| -> Result<()> {
        let reader = s.spawn(move || -> std::io::Result<()> {
            let mut batch: Vec<Item> = Vec::new();
            let mut cohort: Option<i64> = None;
            for (i, line) in input.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let item = crate::formats::parse_record(&line);
                if let Ok(r) = &item {
                    if cohort.is_none_or(|c| r.t > c) {
                        if !batch.is_empty() && tx.send(std::mem::take(&mut batch)).is_err() {
                            return Ok(());
                        }
                        if let (Speed::Factor(f), Some(c)) = (opts.speed, cohort) {
                            thread::sleep(Duration::from_secs_f64((r.t - c) as f64 / 1000.0 / f));
                        }
                        cohort = Some(r.t);
                    }
                }
                batch.push((i + 1, item));
            }
            if !batch.is_empty() {
                let _ = tx.send(batch);
            }
            Ok(())
        });
        let mut feeder = Feeder::new(engine, registry).pass_through(opts.pass_through);
        for batch in rx {
            for (line, item) in batch {
                match item {
                    Err(msg) => {
                        feeder.malformed();
                        report.rejects.push(Reject {
                            line,
                            kind: RejectKind::Malformed(msg),
                        });
                    }
                    Ok(r) => {
                        let (fed, closed) = feeder.push(&r)?;
                        if let Some(out) = closed {
                            report.fired += out.fired;
                        }
                        if fed == rbs3_core::ingest::Fed::OutOfOrder {
                            report.rejects.push(Reject {
                                line,
                                kind: RejectKind::OutOfOrder,
                            });
                        }
                    }
                }
            }
            report.fired += feeder.cycle().fired;
            report.cycles += 1;
            on_cycle(feeder.engine());
        }
        report.stats = feeder.stats();
        report.runtime_errors = feeder.runtime_errors().to_vec();
        reader.join().expect("reader thread panicked")?;
        Ok(())
    })?;
    Ok(report)
}
