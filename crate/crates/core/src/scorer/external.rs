//! Client for an external scorer process.
//!
//! Wire protocol, UTF-8 JSON-lines in both directions:
//!
//! ```text
//! -> {"qid":"q1","cid":"US1#1","text_a":"...","text_b":"..."}
//! <- {"qid":"q1","cid":"US1#1","logit_0":-1.2,"logit_1":2.3}
//! ```
//!
//! Replies may arrive in any order and are matched by `(qid, cid)`. The
//! client closes the endpoint's input after the last request; the endpoint
//! then flushes the remaining replies and exits.

use std::collections::HashMap;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::process::{Command, Stdio};

use serde::Deserialize;
use serde_json::Value;

use super::{PairScorer, ScoreError, ScoreRequest, ScoreResult};

#[derive(Deserialize)]
struct Response {
    qid: String,
    cid: String,
    logit_0: f64,
    logit_1: f64,
}

fn write_requests<W: Write>(writer: W, requests: &[ScoreRequest]) -> io::Result<()> {
    let mut out = BufWriter::new(writer);
    for request in requests {
        serde_json::to_writer(&mut out, request)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Streams `requests` to `writer` from a helper thread while reading replies
/// from `reader`. `writer` is dropped (closing the endpoint's input) once all
/// requests are written. Results come back in request order.
pub fn exchange<R, W>(mut reader: R, writer: W, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError>
where
    R: BufRead,
    W: Write + Send,
{
    let mut index = HashMap::with_capacity(requests.len());
    for (i, r) in requests.iter().enumerate() {
        if index.insert((r.qid.as_str(), r.cid.as_str()), i).is_some() {
            return Err(ScoreError::DuplicateRequest(r.qid.clone(), r.cid.clone()));
        }
    }

    std::thread::scope(|scope| {
        let sender = scope.spawn(move || write_requests(writer, requests));
        let mut slots: Vec<Option<ScoreResult>> = vec![None; requests.len()];
        let read_result = read_responses(&mut reader, &index, &mut slots);
        if read_result.is_err() {
            // keep the endpoint's output flowing so the writer can finish
            let _ = io::copy(&mut reader, &mut io::sink());
        }
        match sender.join().expect("request writer panicked") {
            Ok(()) => {}
            // the endpoint may exit before consuming everything; unanswered
            // keys are reported below
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
            Err(e) => return Err(ScoreError::Io(e)),
        }
        read_result?;

        let missing: Vec<(String, String)> = requests
            .iter()
            .zip(&slots)
            .filter(|(_, slot)| slot.is_none())
            .map(|(r, _)| (r.qid.clone(), r.cid.clone()))
            .collect();
        if !missing.is_empty() {
            return Err(ScoreError::MissingResponse(missing));
        }
        Ok(slots.into_iter().map(|s| s.expect("checked above")).collect())
    })
}

fn read_responses<R: BufRead>(
    reader: &mut R,
    index: &HashMap<(&str, &str), usize>,
    slots: &mut [Option<ScoreResult>],
) -> Result<(), ScoreError> {
    for (line_no, line) in reader.by_ref().lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |reason: String| ScoreError::ProtocolError(format!("reply line {}: {reason}", line_no + 1));
        let value: Value = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        if let Some(message) = value.get("error") {
            return Err(bad(format!("endpoint error {message}")));
        }
        let reply: Response = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
        let Some(&slot) = index.get(&(reply.qid.as_str(), reply.cid.as_str())) else {
            return Err(bad(format!("unknown pair key ({}, {})", reply.qid, reply.cid)));
        };
        if slots[slot].is_some() {
            return Err(bad(format!("duplicate reply for ({}, {})", reply.qid, reply.cid)));
        }
        if !reply.logit_0.is_finite() || !reply.logit_1.is_finite() {
            return Err(ScoreError::NonFiniteLogit(reply.qid, reply.cid));
        }
        slots[slot] = Some(ScoreResult::new(reply.qid, reply.cid, reply.logit_0, reply.logit_1)?);
    }
    Ok(())
}

/// Spawns `program args...` for every batch and talks the protocol over its
/// stdin/stdout. Stderr is inherited.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub program: String,
    pub args: Vec<String>,
}

impl ExternalScorer {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ExternalScorer {
            program: program.into(),
            args,
        }
    }

    /// Splits a command line on whitespace.
    pub fn from_command_line(command: &str) -> Option<Self> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts.next()?;
        Some(ExternalScorer::new(program, parts.collect()))
    }
}

impl PairScorer for ExternalScorer {
    fn score_batch(&self, requests: &[ScoreRequest]) -> Result<Vec<ScoreResult>, ScoreError> {
        if requests.is_empty() {
            return Ok(Vec::new());
        }
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let result = exchange(BufReader::new(stdout), stdin, requests);
        let status = child.wait()?;
        let results = result?;
        if !status.success() {
            log_exit(&status);
        }
        Ok(results)
    }
}

fn log_exit(status: &std::process::ExitStatus) {
    eprintln!("warning: external scorer exited with {status} after answering every request");
}
