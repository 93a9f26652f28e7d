//! Line-delimited JSON client for an external re-ranking process.
//!
//! Request (one line on the sidecar's stdin):
//! `{"qid": "...", "query": "...", "candidates": [{"docid": "...", "text": "..."}]}`
//!
//! Response (one line on its stdout, same qid, any docid order):
//! `{"qid": "...", "scores": [{"docid": "...", "score": 1.25}]}`

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::CandidateSet;
use crate::error::{Error, Result};
use crate::num::Score;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarCandidate {
    pub docid: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarRequest {
    pub qid: String,
    pub query: String,
    pub candidates: Vec<SidecarCandidate>,
}

impl SidecarRequest {
    pub fn from_candidates<S: Score>(cands: &CandidateSet<S>) -> Self {
        SidecarRequest {
            qid: cands.turn_id.clone(),
            query: cands.query_text.clone(),
            candidates: cands
                .candidates
                .iter()
                .map(|c| SidecarCandidate {
                    docid: c.external_id.clone(),
                    text: c.text.clone(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredDoc {
    pub docid: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarResponse {
    pub qid: String,
    #[serde(default)]
    pub scores: Vec<ScoredDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl SidecarResponse {
    pub fn score_of(&self, docid: &str) -> Option<f64> {
        self.scores.iter().find(|s| s.docid == docid).map(|s| s.score)
    }
}

/// A running sidecar process. One request is in flight at a time.
pub struct SidecarClient {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl SidecarClient {
    pub fn spawn(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let mut cmd = Command::new(program);
        cmd.args(args);
        Self::from_command(cmd, timeout)
    }

    /// Runs `command` through `sh -c`.
    pub fn spawn_shell(command: &str, timeout: Duration) -> Result<Self> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(command);
        Self::from_command(cmd, timeout)
    }

    fn from_command(mut cmd: Command, timeout: Duration) -> Result<Self> {
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::SidecarExited(format!("failed to start: {e}")))?;
        let stdin = child.stdin.take();
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(SidecarClient {
            child,
            stdin,
            lines: rx,
            timeout,
        })
    }

    fn exited(&mut self) -> Error {
        let status = self
            .child
            .try_wait()
            .ok()
            .flatten()
            .map_or_else(|| "closed its output".to_string(), |s| s.to_string());
        Error::SidecarExited(status)
    }

    pub fn score(&mut self, request: &SidecarRequest) -> Result<SidecarResponse> {
        let line = serde_json::to_string(request).expect("request serializes");
        let written = match self.stdin.as_mut() {
            Some(stdin) => writeln!(stdin, "{line}").and_then(|_| stdin.flush()),
            None => Err(std::io::ErrorKind::BrokenPipe.into()),
        };
        if written.is_err() {
            return Err(self.exited());
        }
        let reply = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(Error::SidecarMalformed(format!("unreadable output: {e}"))),
            Err(RecvTimeoutError::Timeout) => return Err(Error::SidecarTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                // give the process a moment to report its exit status
                let _ = self.child.wait();
                return Err(self.exited());
            }
        };
        let response: SidecarResponse =
            serde_json::from_str(&reply).map_err(|e| Error::SidecarMalformed(format!("{e}: {reply}")))?;
        if let Some(err) = &response.error {
            return Err(Error::SidecarMalformed(format!("sidecar reported: {err}")));
        }
        if response.qid != request.qid {
            return Err(Error::SidecarMalformed(format!(
                "expected qid {:?}, got {:?}",
                request.qid, response.qid
            )));
        }
        if let Some(bad) = response.scores.iter().find(|s| !s.score.is_finite()) {
            return Err(Error::SidecarMalformed(format!("non-finite score for {}", bad.docid)));
        }
        Ok(response)
    }
}

impl Drop for SidecarClient {
    fn drop(&mut self) {
        // closing stdin asks a well-behaved sidecar to exit
        self.stdin.take();
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
