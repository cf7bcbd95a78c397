//! Line-oriented scenario files.
//!
//! Grammar (whitespace-delimited, `#` starts a comment):
//!
//! ```text
//! proc <id>
//! chan <src> <dst> <lower> <upper>
//! ext <id> <proc> <time>
//! task late|early <A> <B> <C> <x>
//! horizon <T>
//! budget <max_runs>
//! deliver <src>@<k> <dst> <time>
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use bcm_core::coordination::{CoordinationTask, TaskKind};
use bcm_core::network::{Network, ProcId};
use bcm_core::sim::{ExternalInput, Schedule};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("line {line}, col {col}: expected {expected}")]
pub struct ScenarioError {
    pub line: usize,
    pub col: usize,
    pub expected: String,
}

fn err<T>(line: usize, col: usize, expected: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError {
        line,
        col,
        expected: expected.into(),
    })
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub net: Arc<Network>,
    pub externals: Vec<ExternalInput>,
    pub task: Option<CoordinationTask>,
    pub explicit: BTreeMap<(ProcId, u32, ProcId), u32>,
    pub horizon: u32,
    pub max_runs: usize,
    /// Hex digest of the source text, echoed into trace headers.
    pub hash: String,
}

impl Scenario {
    /// The scenario's own delivery choices; messages without a `deliver`
    /// line fall to their upper bound.
    pub fn schedule(&self) -> Schedule {
        Schedule::Explicit(self.explicit.clone())
    }
}

/// Tokens of one line with their 1-based starting columns; comments
/// stripped.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &body[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &body[s..]));
    }
    out
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    struct RawChan {
        line: usize,
        col: usize,
        src: String,
        dst: String,
        lower: u32,
        upper: u32,
    }
    struct RawExt {
        line: usize,
        col: usize,
        id: String,
        target: String,
        time: u32,
    }
    struct RawTask {
        line: usize,
        col: usize,
        kind: TaskKind,
        a: String,
        b: String,
        c: String,
        x: i64,
    }
    struct RawDeliver {
        line: usize,
        col: usize,
        src: String,
        index: u32,
        dst: String,
        time: u32,
    }

    let mut procs: Vec<String> = Vec::new();
    let mut chans: Vec<RawChan> = Vec::new();
    let mut exts: Vec<RawExt> = Vec::new();
    let mut task: Option<RawTask> = None;
    let mut delivers: Vec<RawDeliver> = Vec::new();
    let mut horizon: Option<u32> = None;
    let mut max_runs: usize = 200_000;

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let toks = tokens(raw);
        if toks.is_empty() {
            continue;
        }
        let (kcol, keyword) = toks[0];
        let arg = |i: usize, what: &str| -> Result<(usize, &str), ScenarioError> {
            toks.get(i).copied().ok_or_else(|| ScenarioError {
                line: ln,
                col: raw.len() + 1,
                expected: what.into(),
            })
        };
        let int = |i: usize, what: &str| -> Result<(usize, u32), ScenarioError> {
            let (c, s) = arg(i, what)?;
            match s.parse() {
                Ok(v) => Ok((c, v)),
                Err(_) => err(ln, c, what),
            }
        };
        let arity = |n: usize| -> Result<(), ScenarioError> {
            match toks.len() {
                l if l == n => Ok(()),
                l if l > n => err(ln, toks[n].0, "end of line"),
                _ => unreachable!("short lines caught by arg()"),
            }
        };
        match keyword {
            "proc" => {
                let (_, name) = arg(1, "process name")?;
                procs.push(name.to_owned());
                arity(2)?;
            }
            "chan" => {
                let (col, src) = arg(1, "source process")?;
                let (_, dst) = arg(2, "destination process")?;
                let (bcol, lower) = int(3, "integer lower bound")?;
                let (_, upper) = int(4, "integer upper bound")?;
                arity(5)?;
                if lower < 1 || lower > upper {
                    return err(ln, bcol, "bounds with 1 <= lower <= upper");
                }
                chans.push(RawChan {
                    line: ln,
                    col,
                    src: src.to_owned(),
                    dst: dst.to_owned(),
                    lower,
                    upper,
                });
            }
            "ext" => {
                let (_, id) = arg(1, "input id")?;
                let (col, target) = arg(2, "target process")?;
                let (tcol, time) = int(3, "integer time")?;
                arity(4)?;
                if time == 0 {
                    return err(ln, tcol, "time >= 1");
                }
                exts.push(RawExt {
                    line: ln,
                    col,
                    id: id.to_owned(),
                    target: target.to_owned(),
                    time,
                });
            }
            "task" => {
                let (kcol2, kind) = arg(1, "late or early")?;
                let kind = match kind {
                    "late" => TaskKind::Late,
                    "early" => TaskKind::Early,
                    _ => return err(ln, kcol2, "late or early"),
                };
                let (col, a) = arg(2, "actor A")?;
                let (_, b) = arg(3, "actor B")?;
                let (_, c) = arg(4, "trigger process")?;
                let (xcol, xs) = arg(5, "integer bound x")?;
                arity(6)?;
                let x: i64 = match xs.parse() {
                    Ok(v) => v,
                    Err(_) => return err(ln, xcol, "integer bound x"),
                };
                task = Some(RawTask {
                    line: ln,
                    col,
                    kind,
                    a: a.to_owned(),
                    b: b.to_owned(),
                    c: c.to_owned(),
                    x,
                });
            }
            "horizon" => {
                let (_, t) = int(1, "integer horizon")?;
                arity(2)?;
                horizon = Some(t);
            }
            "budget" => {
                let (_, n) = int(1, "integer run cap")?;
                arity(2)?;
                max_runs = n as usize;
            }
            "deliver" => {
                let (col, node) = arg(1, "node address src@k")?;
                let (src, index) = match node.split_once('@') {
                    Some((p, k)) => match k.parse() {
                        Ok(i) => (p.to_owned(), i),
                        Err(_) => return err(ln, col, "node address src@k"),
                    },
                    None => return err(ln, col, "node address src@k"),
                };
                let (_, dst) = arg(2, "destination process")?;
                let (_, time) = int(3, "integer time")?;
                arity(4)?;
                delivers.push(RawDeliver {
                    line: ln,
                    col,
                    src,
                    index,
                    dst: dst.to_owned(),
                    time,
                });
            }
            _ => {
                return err(
                    ln,
                    kcol,
                    "proc, chan, ext, task, horizon, budget, or deliver",
                );
            }
        }
    }

    let horizon = match horizon {
        Some(t) => t,
        None => return err(text.lines().count() + 1, 1, "a horizon line"),
    };
    if procs.is_empty() {
        return err(text.lines().count() + 1, 1, "at least one proc line");
    }

    let chan_tuples: Vec<(String, String, u32, u32)> = chans
        .iter()
        .map(|c| (c.src.clone(), c.dst.clone(), c.lower, c.upper))
        .collect();
    let net = match Network::new(&procs, &chan_tuples) {
        Ok(n) => Arc::new(n),
        Err(e) => {
            // Attribute the semantic error to the offending line.
            let (line, col) = chans
                .iter()
                .find(|c| {
                    matches!(&e, bcm_core::NetworkError::UnknownProcess(p)
                        if *p == c.src || *p == c.dst)
                        || matches!(&e, bcm_core::NetworkError::DuplicateChannel(s, d)
                            if *s == c.src && *d == c.dst)
                })
                .map(|c| (c.line, c.col))
                .unwrap_or((1, 1));
            return err(line, col, format!("valid channel ({e})"));
        }
    };

    let mut externals = Vec::new();
    for e in exts {
        let Some(target) = net.proc_id(&e.target) else {
            return err(e.line, e.col, "a declared process");
        };
        if e.time > horizon {
            return err(e.line, e.col, "external time within the horizon");
        }
        externals.push(ExternalInput {
            id: e.id,
            target,
            time: e.time,
        });
    }

    let task = match task {
        None => None,
        Some(t) => {
            let lookup = |name: &str| net.proc_id(name);
            let (Some(a), Some(b), Some(c)) = (lookup(&t.a), lookup(&t.b), lookup(&t.c)) else {
                return err(t.line, t.col, "declared task processes");
            };
            Some(CoordinationTask {
                kind: t.kind,
                actor_a: a,
                actor_b: b,
                trigger: c,
                x: t.x,
            })
        }
    };

    let mut explicit = BTreeMap::new();
    for d in delivers {
        let (Some(src), Some(dst)) = (net.proc_id(&d.src), net.proc_id(&d.dst)) else {
            return err(d.line, d.col, "declared processes");
        };
        if net.bounds(src, dst).is_none() {
            return err(d.line, d.col, "an existing channel");
        }
        explicit.insert((src, d.index, dst), d.time);
    }

    let hash = hex::encode(Sha256::digest(text.as_bytes()));
    Ok(Scenario {
        net,
        externals,
        task,
        explicit,
        horizon,
        max_runs,
        hash,
    })
}
